//! Parametric Bayesian machinery: model families on `[0, 1]`, ball
//! observations, prior and posterior expectations of a quantity of interest.
//!
//! The two-sided family `f^a` is a mixture `(1−θ)·Beta(1, 1+1/θ) + θ·Beta(1+1/(1−θ), 1)`,
//! so its CDF and partial first moment are available in closed form. The gapped
//! variants (`f^b`, and its mirror `f^c`) suppress `f^a` by a plateau factor on a
//! small interval around the datum and renormalize; their masses follow from the
//! same closed forms.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::measures::{Ball, GridDensity, ProbabilityMeasure, DEFAULT_GRID_CELLS};

/// θ-domain clamp `[ε, 1−ε]`: `f^a` has exponents `1/θ` that blow up at the ends.
pub const THETA_CLAMP: f64 = 1e-4;
/// Starting number of midpoint nodes per quadrature segment.
pub const DEFAULT_QUAD_N: usize = 4000;
/// Successive quadrature estimates must agree to this before doubling stops.
pub const QUAD_TOL: f64 = 1e-6;
/// Evidence below this raises [`Error::ZeroEvidence`].
pub const EVIDENCE_FLOOR: f64 = 1e-300;

const MAX_DOUBLINGS: u32 = 6;

/// Closed-form pieces of the two-sided beta-like family at one θ.
#[derive(Debug, Clone, Copy)]
struct TwoSided {
    w0: f64,
    beta: f64,
    w1: f64,
    alpha: f64,
}

impl TwoSided {
    fn at(theta: f64) -> Self {
        Self { w0: 1.0 - theta, beta: 1.0 + 1.0 / theta, w1: theta, alpha: 1.0 + 1.0 / (1.0 - theta) }
    }

    fn density(&self, x: f64) -> f64 {
        self.w0 * self.beta * (1.0 - x).powf(self.beta - 1.0) + self.w1 * self.alpha * x.powf(self.alpha - 1.0)
    }

    fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        self.w0 * (1.0 - (1.0 - x).powf(self.beta)) + self.w1 * x.powf(self.alpha)
    }

    /// `∫₀ˣ t f(t) dt`.
    fn partial_mean(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let (b, a) = (self.beta, self.alpha);
        let u = 1.0 - x;
        let left = 1.0 / (b + 1.0) - u.powf(b) + b / (b + 1.0) * u.powf(b + 1.0);
        let right = a / (a + 1.0) * x.powf(a + 1.0);
        self.w0 * left + self.w1 * right
    }

    fn mean(&self) -> f64 {
        self.w0 / (self.beta + 1.0) + self.w1 * self.alpha / (self.alpha + 1.0)
    }
}

/// Parameters of the gapped family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapParams {
    pub x1: f64,
    pub delta_c: f64,
    pub plateau: f64,
    pub theta_cut: f64,
    /// `false`: suppressed while `θ < θ_cut` (pushes the posterior up);
    /// `true`: suppressed while `θ > 1 − θ_cut` (pushes it down).
    pub mirrored: bool,
}

impl GapParams {
    fn gap(&self) -> (f64, f64) {
        (self.x1 - 0.5 * self.delta_c, self.x1 + 0.5 * self.delta_c)
    }

    fn suppressed(&self, theta: f64) -> bool {
        if self.mirrored {
            theta > 1.0 - self.theta_cut
        } else {
            theta < self.theta_cut
        }
    }

    fn breakpoint(&self) -> f64 {
        if self.mirrored {
            1.0 - self.theta_cut
        } else {
            self.theta_cut
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelKind {
    /// `μ(θ)` is uniform for every θ.
    Uniform,
    /// The two-sided family `f^a`.
    TwoSided,
    /// `f^a` with a suppressed gap around the datum.
    Gapped(GapParams),
}

/// A family `θ ↦ μ(θ)` of densities on `[0, 1]`, `θ ∈ (0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricModel {
    pub label: String,
    pub kind: ModelKind,
}

/// Model `a`.
pub fn make_model_a() -> ParametricModel {
    ParametricModel { label: "a".into(), kind: ModelKind::TwoSided }
}

fn gapped(label: &str, x1: f64, delta_c: f64, plateau: f64, theta_cut: f64, mirrored: bool) -> Result<ParametricModel> {
    if !(delta_c > 0.0 && delta_c < 1.0) {
        return Err(Error::InvalidModel(format!("gap width {delta_c} must lie in (0, 1)")));
    }
    if !(plateau >= 0.0) || !plateau.is_finite() {
        return Err(Error::InvalidModel(format!("plateau {plateau} must be nonnegative")));
    }
    if !(theta_cut > 0.0 && theta_cut <= 1.0) {
        return Err(Error::InvalidModel(format!("theta_cut {theta_cut} must lie in (0, 1]")));
    }
    let p = GapParams { x1, delta_c, plateau, theta_cut, mirrored };
    let (lo, hi) = p.gap();
    if lo < 0.0 || hi > 1.0 {
        return Err(Error::InvalidGap { lo, hi });
    }
    Ok(ParametricModel { label: label.into(), kind: ModelKind::Gapped(p) })
}

/// Model `b`: `f^a` suppressed by `plateau` on `(x1 − δ_c/2, x1 + δ_c/2)` while `θ < θ_cut`.
pub fn make_model_b(x1: f64, delta_c: f64, plateau: f64, theta_cut: f64) -> Result<ParametricModel> {
    gapped("b", x1, delta_c, plateau, theta_cut, false)
}

/// Model `c`: the mirror of `b`, unsuppressed only while `θ ≤ 1 − θ_cut`.
pub fn make_model_c(x1: f64, delta_c: f64, plateau: f64, theta_cut: f64) -> Result<ParametricModel> {
    gapped("c", x1, delta_c, plateau, theta_cut, true)
}

/// Default gap construction: `x1 = 0.5`, `δ_c = 0.01`, plateau `1e-9`, `θ_cut = 0.999`.
pub fn default_gap() -> (f64, f64, f64, f64) {
    (0.5, 0.01, 1e-9, 0.999)
}

impl ParametricModel {
    pub fn uniform() -> Self {
        Self { label: "uniform".into(), kind: ModelKind::Uniform }
    }

    /// Normalizer `Z` of the gapped density at θ (one when unsuppressed).
    pub fn normalizer(&self, theta: f64) -> f64 {
        match &self.kind {
            ModelKind::Gapped(p) if p.suppressed(theta) => {
                let a = TwoSided::at(theta);
                let (lo, hi) = p.gap();
                1.0 - (1.0 - p.plateau) * (a.cdf(hi) - a.cdf(lo))
            }
            _ => 1.0,
        }
    }

    pub fn density(&self, x: f64, theta: f64) -> f64 {
        match &self.kind {
            ModelKind::Uniform => 1.0,
            ModelKind::TwoSided => TwoSided::at(theta).density(x),
            ModelKind::Gapped(p) => {
                let fa = TwoSided::at(theta).density(x);
                if !p.suppressed(theta) {
                    return fa;
                }
                let (lo, hi) = p.gap();
                let s = if x > lo && x < hi { p.plateau } else { 1.0 };
                fa * s / self.normalizer(theta)
            }
        }
    }

    /// `μ(θ)([0, x])`.
    pub fn cdf(&self, x: f64, theta: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match &self.kind {
            ModelKind::Uniform => x,
            ModelKind::TwoSided => TwoSided::at(theta).cdf(x),
            ModelKind::Gapped(p) => {
                let a = TwoSided::at(theta);
                if !p.suppressed(theta) {
                    return a.cdf(x);
                }
                let (lo, hi) = p.gap();
                let inside = if x > lo { a.cdf(x.min(hi)) - a.cdf(lo) } else { 0.0 };
                (a.cdf(x) - (1.0 - p.plateau) * inside) / self.normalizer(theta)
            }
        }
    }

    /// `μ(θ)([lo, hi])`.
    pub fn mass(&self, lo: f64, hi: f64, theta: f64) -> f64 {
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        if hi <= lo {
            return 0.0;
        }
        match &self.kind {
            ModelKind::Gapped(p) if p.suppressed(theta) => {
                // piecewise, so that masses inside the gap keep their relative precision
                let a = TwoSided::at(theta);
                let piece = |u: f64, v: f64| if v > u { (a.cdf(v) - a.cdf(u)).max(0.0) } else { 0.0 };
                let (glo, ghi) = p.gap();
                let outside = piece(lo, hi.min(glo)) + piece(lo.max(ghi), hi);
                let inside = piece(lo.max(glo), hi.min(ghi));
                (outside + p.plateau * inside) / self.normalizer(theta)
            }
            _ => (self.cdf(hi, theta) - self.cdf(lo, theta)).max(0.0),
        }
    }

    pub fn ball_mass(&self, theta: f64, ball: &Ball) -> f64 {
        let (lo, hi) = ball.interval();
        self.mass(lo, hi, theta)
    }

    pub fn mean(&self, theta: f64) -> f64 {
        match &self.kind {
            ModelKind::Uniform => 0.5,
            ModelKind::TwoSided => TwoSided::at(theta).mean(),
            ModelKind::Gapped(p) => {
                let a = TwoSided::at(theta);
                if !p.suppressed(theta) {
                    return a.mean();
                }
                let (lo, hi) = p.gap();
                let inside = a.partial_mean(hi) - a.partial_mean(lo);
                (a.mean() - (1.0 - p.plateau) * inside) / self.normalizer(theta)
            }
        }
    }

    /// Cell-averaged density on `n_cells` uniform cells (exact cell masses).
    pub fn grid_density(&self, theta: f64, n_cells: usize) -> GridDensity {
        let n = n_cells.max(1);
        let cdf: Vec<f64> = (0..=n).map(|i| self.cdf(i as f64 / n as f64, theta)).collect();
        let masses: Vec<f64> = cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
        let total: f64 = masses.iter().sum();
        let values = masses.iter().map(|m| m / total * n as f64).collect();
        GridDensity::new(values).expect("cell masses of a normalized model")
    }

    /// θ values inside the clamp where the family switches branch.
    pub fn theta_breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            ModelKind::Gapped(p) => {
                let b = p.breakpoint();
                if b > THETA_CLAMP && b < 1.0 - THETA_CLAMP {
                    vec![b]
                } else {
                    Vec::new()
                }
            }
            _ => Vec::new(),
        }
    }
}

/// Prior density on θ (renormalized over the clamped interval when used).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prior", rename_all = "snake_case")]
pub enum ThetaPrior {
    Uniform,
    Beta { a: f64, b: f64 },
}

impl ThetaPrior {
    pub fn density(&self, theta: f64) -> f64 {
        match *self {
            ThetaPrior::Uniform => 1.0,
            ThetaPrior::Beta { a, b } => {
                let ln_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
                (ln_norm + (a - 1.0) * theta.ln() + (b - 1.0) * (1.0 - theta).ln()).exp()
            }
        }
    }
}

/// A real-valued functional `Φ` of a probability measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "quantity", rename_all = "snake_case")]
pub enum QuantityOfInterest {
    /// `E_μ[X]`.
    Mean,
    /// `μ([a, 1])`.
    TailMass { a: f64 },
    /// `E_μ[X^j]`.
    Moment { j: u32 },
    Constant { c: f64 },
    Negated { inner: Box<QuantityOfInterest> },
}

impl QuantityOfInterest {
    pub fn label(&self) -> String {
        match self {
            Self::Mean => "mean".into(),
            Self::TailMass { a } => format!("tail_mass[{a},1]"),
            Self::Moment { j } => format!("moment_{j}"),
            Self::Constant { c } => format!("constant({c})"),
            Self::Negated { inner } => format!("-{}", inner.label()),
        }
    }

    /// `−Φ`, collapsing double negation.
    pub fn negated(&self) -> Self {
        match self {
            Self::Negated { inner } => (**inner).clone(),
            Self::Constant { c } => Self::Constant { c: -c },
            other => Self::Negated { inner: Box::new(other.clone()) },
        }
    }

    pub fn evaluate<M: ProbabilityMeasure + ?Sized>(&self, m: &M) -> f64 {
        match self {
            Self::Mean => m.mean(),
            Self::TailMass { a } => m.upper_tail(*a),
            Self::Moment { j } => m.raw_moment(*j),
            Self::Constant { c } => *c,
            Self::Negated { inner } => -inner.evaluate(m),
        }
    }

    /// `Φ(μ(θ))`, in closed form where the family allows it and on the
    /// default grid otherwise.
    pub fn on_model(&self, model: &ParametricModel, theta: f64) -> f64 {
        match self {
            Self::Mean => model.mean(theta),
            Self::TailMass { a } => model.mass(*a, 1.0, theta),
            Self::Constant { c } => *c,
            Self::Negated { inner } => -inner.on_model(model, theta),
            Self::Moment { .. } => self.evaluate(&model.grid_density(theta, DEFAULT_GRID_CELLS)),
        }
    }

    /// `[inf Φ, sup Φ]` over all probability measures on `[0, 1]`.
    pub fn deterministic_range(&self) -> (f64, f64) {
        match self {
            Self::Mean | Self::TailMass { .. } | Self::Moment { .. } => (0.0, 1.0),
            Self::Constant { c } => (*c, *c),
            Self::Negated { inner } => {
                let (lo, hi) = inner.deterministic_range();
                (-hi, -lo)
            }
        }
    }
}

/// Observation `d ∈ B_δ(x₁) × … × B_δ(x_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    balls: Vec<Ball>,
}

impl Observation {
    pub fn new(centers: &[f64], delta: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidBall("an observation needs at least one ball".into()));
        }
        let balls = centers.iter().map(|&c| Ball::new(c, delta)).collect::<Result<Vec<_>>>()?;
        Ok(Self { balls })
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn n(&self) -> usize {
        self.balls.len()
    }

    pub fn delta(&self) -> f64 {
        self.balls[0].radius()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.balls.iter().map(Ball::center).collect()
    }

    /// `μⁿ[Bⁿ_δ]` for an arbitrary measure.
    pub fn likelihood<M: ProbabilityMeasure + ?Sized>(&self, m: &M) -> f64 {
        self.balls.iter().map(|b| m.ball_mass(b)).product()
    }
}

/// `Π_i μ(θ)[B_δ(x_i)]`, from the model's exact CDF.
pub fn data_likelihood(model: &ParametricModel, theta: f64, obs: &Observation) -> f64 {
    obs.balls().iter().map(|b| model.ball_mass(theta, b)).product()
}

/// Same product evaluated on the model's grid density at θ.
pub fn data_likelihood_on_grid(model: &ParametricModel, theta: f64, obs: &Observation, n_cells: usize) -> f64 {
    obs.likelihood(&model.grid_density(theta, n_cells))
}

/// Composite midpoint rule over the clamped θ interval, split at the
/// model's breakpoints, doubling until successive ratios agree.
fn quadrature_ratio<N, D>(model: &ParametricModel, quad_n: usize, num: N, den: D) -> Result<(f64, f64)>
where
    N: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut cuts = vec![THETA_CLAMP];
    cuts.extend(model.theta_breakpoints());
    cuts.push(1.0 - THETA_CLAMP);
    let integrate = |n: usize| {
        let (mut top, mut bottom) = (0.0, 0.0);
        for seg in cuts.windows(2) {
            let h = (seg[1] - seg[0]) / n as f64;
            for i in 0..n {
                let t = seg[0] + (i as f64 + 0.5) * h;
                let d = den(t);
                top += h * num(t) * d;
                bottom += h * d;
            }
        }
        (top, bottom)
    };
    let mut n = quad_n.max(100);
    let (mut top, mut bottom) = integrate(n);
    for _ in 0..MAX_DOUBLINGS {
        let (t2, b2) = integrate(2 * n);
        let converged = bottom > 0.0 && b2 > 0.0 && (t2 / b2 - top / bottom).abs() < QUAD_TOL;
        n *= 2;
        top = t2;
        bottom = b2;
        if converged {
            break;
        }
    }
    Ok((top, bottom))
}

/// `E_{θ∼p₀}[Φ(μ(θ))]`, with `p₀` renormalized over the clamped θ interval.
pub fn prior_value(model: &ParametricModel, prior: &ThetaPrior, phi: &QuantityOfInterest, quad_n: usize) -> Result<f64> {
    if let QuantityOfInterest::Constant { c } = phi {
        return Ok(*c);
    }
    let (top, bottom) = quadrature_ratio(model, quad_n, |t| phi.on_model(model, t), |t| prior.density(t))?;
    Ok(top / bottom)
}

/// `E[Φ(μ) | d ∈ Bⁿ_δ]` as a ratio of θ-quadratures.
pub fn posterior_value(
    model: &ParametricModel,
    prior: &ThetaPrior,
    phi: &QuantityOfInterest,
    obs: &Observation,
    quad_n: usize,
) -> Result<f64> {
    let (top, bottom) = quadrature_ratio(
        model,
        quad_n,
        |t| phi.on_model(model, t),
        |t| data_likelihood(model, t, obs) * prior.density(t),
    )?;
    if !(bottom >= EVIDENCE_FLOOR) {
        return Err(Error::ZeroEvidence { evidence: bottom });
    }
    if let QuantityOfInterest::Constant { c } = phi {
        return Ok(*c);
    }
    Ok(top / bottom)
}

/// Largest ball mass found at the point on a grid of centers and θ values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeromassProbe {
    pub value: f64,
    pub x: f64,
    pub theta: f64,
}

/// Lower estimate of `sup_x sup_θ μ(θ)[B_δ(x)]`.
///
/// Centers are `x_grid_n` equispaced points on `[0, 1]`; θ values are the
/// midpoints of `theta_grid_n` cells of the clamped interval.
pub fn zeromass_sup(model: &ParametricModel, delta: f64, x_grid_n: usize, theta_grid_n: usize) -> Result<ZeromassProbe> {
    let nx = x_grid_n.max(2);
    let nt = theta_grid_n.max(1);
    let width = 1.0 - 2.0 * THETA_CLAMP;
    let mut best = ZeromassProbe { value: 0.0, x: 0.0, theta: 0.5 };
    for ti in 0..nt {
        let theta = THETA_CLAMP + (ti as f64 + 0.5) * width / nt as f64;
        for xi in 0..nx {
            let x = xi as f64 / (nx - 1) as f64;
            let v = model.ball_mass(theta, &Ball::new(x, delta)?);
            if v > best.value {
                best = ZeromassProbe { value: v, x, theta };
            }
        }
    }
    Ok(best)
}

/// Posterior probability of the always-heads coin after `n_flips` heads,
/// with `n_fair` fair coins of heads probability `p_heads_fair` in the bag.
pub fn coin_posterior(n_fair: u64, p_heads_fair: f64, n_flips: u32) -> f64 {
    1.0 / (1.0 + n_fair as f64 * p_heads_fair.powi(n_flips as i32))
}

/// Two-sided `tσ` tail under a Gaussian and under the Chebyshev extremal law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailComparison {
    pub gaussian_tail: f64,
    pub chebyshev_tail: f64,
    pub ratio: f64,
}

pub fn gaussian_vs_chebyshev_tail(t: f64) -> Result<TailComparison> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidThreshold(t));
    }
    // 1 + erf(−t/√2) = erfc(t/√2), without cancellation
    let gaussian_tail = erfc(t / std::f64::consts::SQRT_2);
    let chebyshev_tail = f64::min(1.0, 1.0 / (t * t));
    Ok(TailComparison { gaussian_tail, chebyshev_tail, ratio: chebyshev_tail / gaussian_tail })
}

/// Maximizer `(c*, σ*)` of the Gaussian expected log-likelihood against the
/// empirical measure of `samples`: the sample mean and the population standard
/// deviation.
pub fn gaussian_mle_match(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::DegenerateData(format!("need at least 2 samples, got {}", samples.len())));
    }
    let n = samples.len() as f64;
    let c = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - c) * (x - c)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::DegenerateData("samples have zero variance".into()));
    }
    Ok((c, var.sqrt()))
}

/// Expected Gaussian log-likelihood of `(c, σ)` against the empirical measure.
pub fn gaussian_expected_log_likelihood(samples: &[f64], c: f64, sigma: f64) -> f64 {
    let n = samples.len() as f64;
    let sq = samples.iter().map(|x| (x - c) * (x - c)).sum::<f64>() / n;
    -sq / (2.0 * sigma * sigma) - sigma.ln() - (2.0 * std::f64::consts::PI).sqrt().ln()
}
