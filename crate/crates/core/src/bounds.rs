//! Optimal bounds `L(Π)`, `U(Π)`, `L(Π|B)`, `U(Π|B)` over declared prior classes.
//!
//! Closed forms are used where they exist; they are limits as `δ → 0` for the
//! likelihood-band classes, and in that case a finite-`δ` optimizer estimate is
//! reported next to the limit. Everything else goes through a seeded
//! multi-start coordinate search over pairs of finitely supported measures.
//! Lower bounds are always computed as `−U(−Φ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{Observation, QuantityOfInterest};
use crate::error::{Error, Result};
use crate::measures::{moment_map, Ball, DiscreteMeasure, ProbabilityMeasure};
use crate::moments::{IteratedUniformSampler, MomentGrid};

/// Class-membership tolerance.
pub const CONSTRAINT_TOL: f64 = 1e-6;
/// Accepted slack between an optimizer certificate and a bound.
pub const BOUND_TOL: f64 = 1e-3;

/// Finite mixture of discrete measures: a prior over `M([0, 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorMixture {
    pub components: Vec<WeightedMeasure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeasure {
    pub weight: f64,
    pub measure: DiscreteMeasure,
}

impl PriorMixture {
    pub fn new(components: Vec<(f64, DiscreteMeasure)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidClass("prior mixture has no components".into()));
        }
        if components.iter().any(|(w, _)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidClass("prior weights must be nonnegative".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidClass(format!("prior weights sum to {total}")));
        }
        Ok(Self { components: components.into_iter().map(|(weight, measure)| WeightedMeasure { weight, measure }).collect() })
    }

    pub fn dirac(measure: DiscreteMeasure) -> Self {
        Self { components: vec![WeightedMeasure { weight: 1.0, measure }] }
    }

    /// `E_{μ∼π}[Φ(μ)]`.
    pub fn prior_value(&self, phi: &QuantityOfInterest) -> f64 {
        if let QuantityOfInterest::Constant { c } = phi {
            return *c;
        }
        self.components.iter().map(|c| c.weight * phi.evaluate(&c.measure)).sum()
    }

    /// `E_{μ∼π}[E_μ[X]]`.
    pub fn mean_of_means(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.measure.mean()).sum()
    }

    /// `E_{μ∼π}[μⁿ[Bⁿ_δ]]`.
    pub fn evidence(&self, obs: &Observation) -> f64 {
        self.components.iter().map(|c| c.weight * obs.likelihood(&c.measure)).sum()
    }

    /// `E[Φ(μ) | d ∈ Bⁿ_δ]`.
    pub fn posterior_value(&self, phi: &QuantityOfInterest, obs: &Observation) -> Result<f64> {
        let evidence = self.evidence(obs);
        if !(evidence > 0.0) {
            return Err(Error::ZeroEvidence { evidence });
        }
        if let QuantityOfInterest::Constant { c } = phi {
            return Ok(*c);
        }
        let num: f64 = self.components.iter().map(|c| c.weight * obs.likelihood(&c.measure) * phi.evaluate(&c.measure)).sum();
        Ok(num / evidence)
    }
}

/// Declarative set `Π` of priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PriorClass {
    /// All priors with `E_{μ∼π}[E_μ[X]] = m`.
    MeanConstraint { m: f64 },
    /// Mean constraint, restricted to measures `μ` with
    /// `μ₀ⁿ[Bⁿ_δ]/α ≤ μⁿ[Bⁿ_δ] ≤ α·μ₀ⁿ[Bⁿ_δ]`, `μ₀` uniform.
    LikelihoodBand { m: f64, alpha: f64, obs: Observation },
    /// Mean constraint, restricted to `μ₀[B_δ(x_i)]/γ ≤ μ[B_δ(x_i)] ≤ γ·μ₀[B_δ(x_i)]` for each `i`.
    PerPointBand { m: f64, gamma: f64, obs: Observation },
    /// `Ψ⁻¹(Q)` for the iterated-uniform law `Q` on the first `k` moments.
    MomentClass { k: usize, grid_n: usize },
    /// `{(1−ε)π + επ₁}` over all priors `π₁`.
    Contamination { base: PriorMixture, epsilon: f64 },
}

impl PriorClass {
    pub fn label(&self) -> String {
        match self {
            Self::MeanConstraint { m } => format!("mean_constraint(m={m})"),
            Self::LikelihoodBand { m, alpha, .. } => format!("likelihood_band(m={m},alpha={alpha})"),
            Self::PerPointBand { m, gamma, .. } => format!("per_point_band(m={m},gamma={gamma})"),
            Self::MomentClass { k, .. } => format!("moment_class(k={k})"),
            Self::Contamination { epsilon, .. } => format!("contamination(epsilon={epsilon})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidClass(msg));
        match self {
            Self::MeanConstraint { m } | Self::LikelihoodBand { m, .. } | Self::PerPointBand { m, .. }
                if !(*m > 0.0 && *m < 1.0) =>
            {
                bad(format!("mean target m = {m} must lie in (0, 1)"))
            }
            Self::LikelihoodBand { alpha, .. } if !(*alpha >= 1.0) || !alpha.is_finite() => {
                bad(format!("alpha = {alpha} must be at least 1"))
            }
            Self::PerPointBand { gamma, .. } if !(*gamma > 1.0) || !gamma.is_finite() => {
                bad(format!("gamma = {gamma} must exceed 1"))
            }
            Self::MomentClass { k, grid_n } if *k < 1 || *grid_n < 100 => {
                bad(format!("moment class needs k >= 1 and grid_n >= 100 (k={k}, grid_n={grid_n})"))
            }
            Self::Contamination { epsilon, .. } if !(*epsilon >= 0.0 && *epsilon <= 1.0) => {
                bad(format!("epsilon = {epsilon} must lie in [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    /// Target of the prior-level mean constraint, if the class has one.
    pub fn mean_target(&self) -> Option<f64> {
        match self {
            Self::MeanConstraint { m } | Self::LikelihoodBand { m, .. } | Self::PerPointBand { m, .. } => Some(*m),
            _ => None,
        }
    }

    /// Balls that constrain individual measures of the class.
    pub fn band_balls(&self) -> &[Ball] {
        match self {
            Self::LikelihoodBand { obs, .. } | Self::PerPointBand { obs, .. } => obs.balls(),
            _ => &[],
        }
    }

    /// Whether a single measure satisfies the per-measure constraints.
    pub fn admits(&self, mu: &DiscreteMeasure) -> bool {
        match self {
            Self::LikelihoodBand { alpha, obs, .. } => {
                let l0: f64 = obs.balls().iter().map(Ball::length).product();
                let l = obs.likelihood(mu);
                l >= l0 / alpha * (1.0 - CONSTRAINT_TOL) && l <= l0 * alpha * (1.0 + CONSTRAINT_TOL)
            }
            Self::PerPointBand { gamma, obs, .. } => obs.balls().iter().all(|b| {
                let (m0, m) = (b.length(), mu.ball_mass(b));
                m >= m0 / gamma * (1.0 - CONSTRAINT_TOL) && m <= m0 * gamma * (1.0 + CONSTRAINT_TOL)
            }),
            _ => true,
        }
    }

    /// Whether a prior is a member of the class (moment classes excluded).
    pub fn admits_prior(&self, prior: &PriorMixture) -> bool {
        let members = prior.components.iter().filter(|c| c.weight > 0.0).all(|c| self.admits(&c.measure));
        match self.mean_target() {
            Some(m) => members && (prior.mean_of_means() - m).abs() <= CONSTRAINT_TOL,
            None => members,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    /// Closed form valid in the limit `δ → 0`.
    ClosedFormLimit,
    Optimizer,
    Constructive,
}

/// One side of a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Side {
    pub value: f64,
    pub method: Method,
    /// Finite-`δ` optimizer estimate reported next to a limit.
    pub finite_delta: Option<f64>,
    pub witness: Option<PriorMixture>,
    /// Value achieved by the witness.
    pub witness_value: Option<f64>,
}

impl Side {
    fn exact(value: f64, witness: Option<PriorMixture>) -> Self {
        Self { value, method: Method::ClosedForm, finite_delta: None, witness_value: witness.as_ref().map(|_| value), witness }
    }

    fn negate(self) -> Self {
        Self {
            value: -self.value,
            finite_delta: self.finite_delta.map(|v| -v),
            witness_value: self.witness_value.map(|v| -v),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsResult {
    pub lower: Side,
    pub upper: Side,
    /// Largest amount by which an oracle exceeded `upper` (negative when it stayed below).
    pub gap_to_oracle: Option<f64>,
}

impl BoundsResult {
    fn from_sides(lower: Side, upper: Side) -> Self {
        Self { lower, upper, gap_to_oracle: None }
    }
}

/// `lim_{δ→0} U(Π(α)|Bⁿ_δ) = 1/(1 + α⁻²(a−m)/m)` for `Φ(μ) = μ[a, 1]`; one when `m ≥ a`.
pub fn likelihood_band_limit(alpha: f64, a: f64, m: f64) -> f64 {
    if m >= a {
        return 1.0;
    }
    1.0 / (1.0 + (a - m) / (m * alpha * alpha))
}

/// Per-point band limit `1/(1 + γ^{−2n})` at `m = a/2`.
pub fn per_point_band_limit(gamma: f64, n: u32) -> f64 {
    1.0 / (1.0 + gamma.powi(-2 * n as i32))
}

/// Per-point band limit for general `(a, m)`: the likelihood ratio
/// between the extreme measures is `γ^{2n}`.
pub fn per_point_band_posterior_limit(gamma: f64, n: u32, a: f64, m: f64) -> f64 {
    if m >= a {
        return 1.0;
    }
    1.0 / (1.0 + gamma.powi(-2 * n as i32) * (a - m) / m)
}

/// `1 − 4e(2kδ/e)^{1/(2k+1)}`, returned unclamped.
pub fn moment_class_posterior_lower_bound(k: u32, delta: f64) -> f64 {
    let e = std::f64::consts::E;
    1.0 - 4.0 * e * (2.0 * k as f64 * delta / e).powf(1.0 / (2.0 * k as f64 + 1.0))
}

/// Search settings of the generic optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub seed: u64,
    /// Atoms placed outside the data balls, per measure.
    pub free_atoms: usize,
    /// Objective evaluations per start.
    pub max_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { starts: 32, seed: 0, free_atoms: 2, max_evals: 6000 }
    }
}

/// How ball masses are parametrized by a level in `[0, 1]`.
#[derive(Debug, Clone)]
enum BallRule {
    /// Mass `level / n` in each ball.
    Free,
    /// Mass `base_i · ratio^{2·level − 1}`.
    Geometric { base: Vec<f64>, ratio: f64 },
}

/// Maps a parameter vector in `[0, 1]^d` to a discrete measure with
/// `free` atoms outside the balls and one atom at each ball center.
#[derive(Debug, Clone)]
struct Layout {
    balls: Vec<Ball>,
    rule: BallRule,
    free: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        2 * self.free + self.balls.len()
    }

    fn project_out(&self, y: f64) -> Option<f64> {
        let inside = |x: f64| self.balls.iter().any(|b| b.contains(x));
        if !inside(y) {
            return Some(y);
        }
        let mut options: Vec<f64> = self
            .balls
            .iter()
            .filter(|b| b.contains(y))
            .flat_map(|b| [b.center() - b.radius(), b.center() + b.radius()])
            .filter(|x| (0.0..=1.0).contains(x) && !inside(*x))
            .collect();
        options.sort_by(|a, b| (a - y).abs().total_cmp(&(b - y).abs()));
        options.first().copied()
    }

    fn decode(&self, p: &[f64]) -> Option<DiscreteMeasure> {
        let n = self.balls.len();
        let levels = &p[2 * self.free..];
        let masses: Vec<f64> = match &self.rule {
            BallRule::Free => levels.iter().map(|l| l / n.max(1) as f64).collect(),
            BallRule::Geometric { base, ratio } => {
                base.iter().zip(levels).map(|(b, l)| b * ratio.powf(2.0 * l - 1.0)).collect()
            }
        };
        let in_balls: f64 = masses.iter().sum();
        if in_balls > 1.0 {
            return None;
        }
        let raw = &p[self.free..2 * self.free];
        let raw_total: f64 = raw.iter().sum();
        let mut atoms = Vec::with_capacity(self.free + n);
        for i in 0..self.free {
            let share = if raw_total > 0.0 { raw[i] / raw_total } else { 1.0 / self.free as f64 };
            atoms.push((self.project_out(p[i])?, share * (1.0 - in_balls)));
        }
        atoms.extend(self.balls.iter().zip(&masses).map(|(b, &w)| (b.center(), w)));
        DiscreteMeasure::from_atoms(atoms).ok()
    }
}

/// Lexicographic score: feasible candidates beat infeasible ones; among
/// infeasible ones, smaller constraint violation wins.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    feasible: bool,
    value: f64,
}

impl Score {
    const WORST: Score = Score { feasible: false, value: f64::NEG_INFINITY };

    fn better_than(&self, other: &Score) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            _ => self.value > other.value,
        }
    }
}

/// Summary of one candidate measure.
#[derive(Debug, Clone)]
struct Candidate {
    measure: DiscreteMeasure,
    mean: f64,
    phi: f64,
    likelihood: f64,
}

/// Best two-atom prior `pδ_{μ₁} + (1−p)δ_{μ₂}` for a pair under the mean
/// constraint `p e₁ + (1−p) e₂ = m`; the ratio is then fixed by `p`.
fn pair_value(m: f64, c1: &Candidate, c2: &Candidate) -> (Score, f64) {
    let (e1, e2) = (c1.mean, c2.mean);
    let p = if (e1 - e2).abs() < 1e-12 {
        if (e1 - m).abs() <= CONSTRAINT_TOL {
            1.0
        } else {
            return (Score { feasible: false, value: -(e1 - m).abs() }, 0.0);
        }
    } else {
        (m - e2) / (e1 - e2)
    };
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        let violation = (m - e1.max(e2)).max(e1.min(e2) - m);
        return (Score { feasible: false, value: -violation }, 0.0);
    }
    let p = p.clamp(0.0, 1.0);
    let den = p * c1.likelihood + (1.0 - p) * c2.likelihood;
    if !(den > 0.0) {
        return (Score { feasible: false, value: -1.0 }, p);
    }
    let num = p * c1.likelihood * c1.phi + (1.0 - p) * c2.likelihood * c2.phi;
    (Score { feasible: true, value: num / den }, p)
}

/// What the optimizer maximizes.
enum Objective {
    /// Two-atom prior under the mean constraint `m`.
    Pair { m: f64 },
    /// `((1−ε)N + ε L Φ)/((1−ε)D + ε L)` over one contaminating measure.
    Contaminant { epsilon: f64, num: f64, den: f64 },
}

struct Search<'a> {
    class: &'a PriorClass,
    phi: &'a QuantityOfInterest,
    obs: Option<&'a Observation>,
    layout: Layout,
    objective: Objective,
}

impl Search<'_> {
    fn candidate(&self, p: &[f64]) -> Option<Candidate> {
        let measure = self.layout.decode(p)?;
        if !self.class.admits(&measure) {
            return None;
        }
        let likelihood = self.obs.map_or(1.0, |o| o.likelihood(&measure));
        Some(Candidate { mean: measure.mean(), phi: self.phi.evaluate(&measure), likelihood, measure })
    }

    fn n_measures(&self) -> usize {
        match self.objective {
            Objective::Pair { .. } => 2,
            Objective::Contaminant { .. } => 1,
        }
    }

    fn score(&self, x: &[f64]) -> (Score, Option<PriorMixture>) {
        let d = self.layout.dim();
        match &self.objective {
            Objective::Pair { m } => {
                let (Some(c1), Some(c2)) = (self.candidate(&x[..d]), self.candidate(&x[d..])) else {
                    return (Score::WORST, None);
                };
                let (score, p) = pair_value(*m, &c1, &c2);
                let witness = score.feasible.then(|| {
                    PriorMixture::new(vec![(p, c1.measure), (1.0 - p, c2.measure)]).expect("two weights summing to one")
                });
                (score, witness)
            }
            Objective::Contaminant { epsilon, num, den, .. } => {
                let Some(c) = self.candidate(x) else { return (Score::WORST, None) };
                let bottom = (1.0 - epsilon) * den + epsilon * c.likelihood;
                if !(bottom > 0.0) {
                    return (Score { feasible: false, value: -1.0 }, None);
                }
                let value = ((1.0 - epsilon) * num + epsilon * c.likelihood * c.phi) / bottom;
                (Score { feasible: true, value }, Some(PriorMixture::dirac(c.measure)))
            }
        }
    }

    /// Coordinate search from one start; returns the local optimum.
    fn climb(&self, mut x: Vec<f64>, max_evals: usize) -> (Score, Vec<f64>) {
        let (mut best, _) = self.score(&x);
        let mut step = 0.25;
        let mut evals = 1;
        while step > 1e-10 && evals < max_evals {
            let mut improved = false;
            for i in 0..x.len() {
                for dir in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[i] = (y[i] + dir * step).clamp(0.0, 1.0);
                    if y[i] == x[i] {
                        continue;
                    }
                    evals += 1;
                    let (s, _) = self.score(&y);
                    if s.better_than(&best) {
                        best = s;
                        x = y;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        (best, x)
    }

    fn run(&self, cfg: &OptimizerConfig) -> Option<(f64, PriorMixture)> {
        let dim = self.n_measures() * self.layout.dim();
        let mut best: Option<(Score, Vec<f64>)> = None;
        for start in 0..cfg.starts.max(1) {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(start as u64);
            let x0: Vec<f64> = if start == 0 { vec![0.5; dim] } else { (0..dim).map(|_| rng.random()).collect() };
            let (s, x) = self.climb(x0, cfg.max_evals);
            // ties keep the lowest start index
            if best.as_ref().is_none_or(|(b, _)| s.better_than(b)) {
                best = Some((s, x));
            }
        }
        let (score, x) = best?;
        if !score.feasible {
            return None;
        }
        let (_, witness) = self.score(&x);
        Some((score.value, witness?))
    }
}

fn optimizer_side(
    class: &PriorClass,
    phi: &QuantityOfInterest,
    obs: Option<&Observation>,
    cfg: &OptimizerConfig,
) -> Result<Side> {
    let (balls, rule) = match class {
        PriorClass::LikelihoodBand { alpha, obs: band, .. } => {
            let n = band.n() as f64;
            let base = band.balls().iter().map(Ball::length).collect();
            (band.balls().to_vec(), BallRule::Geometric { base, ratio: alpha.powf(1.0 / n) })
        }
        PriorClass::PerPointBand { gamma, obs: band, .. } => {
            let base = band.balls().iter().map(Ball::length).collect();
            (band.balls().to_vec(), BallRule::Geometric { base, ratio: *gamma })
        }
        _ => (obs.map(|o| o.balls().to_vec()).unwrap_or_default(), BallRule::Free),
    };
    let layout = Layout { balls, rule, free: cfg.free_atoms.max(1) };
    let unsupported = || Error::UnsupportedCombination { class: class.label(), quantity: phi.label() };
    let objective = match class {
        PriorClass::MomentClass { .. } => return Err(unsupported()),
        PriorClass::Contamination { base, epsilon } => {
            let (n, d) = match obs {
                Some(o) => {
                    let d = base.evidence(o);
                    (if d > 0.0 { base.posterior_value(phi, o)? * d } else { 0.0 }, d)
                }
                None => (base.prior_value(phi), 1.0),
            };
            Objective::Contaminant { epsilon: *epsilon, num: n, den: d }
        }
        other => Objective::Pair { m: other.mean_target().ok_or_else(unsupported)? },
    };
    let search = Search { class, phi, obs, layout, objective };
    match search.run(cfg) {
        Some((value, witness)) => Ok(Side {
            value,
            method: Method::Optimizer,
            finite_delta: None,
            witness: Some(witness),
            witness_value: Some(value),
        }),
        None if obs.is_some() => Err(Error::EmptyClassGivenData),
        None => Err(Error::InvalidClass(format!("optimizer found no member of {}", class.label()))),
    }
}

/// Best Dirac at an endpoint for `Φ`, which attains `sup Φ` for the supported quantities.
fn endpoint_sup(phi: &QuantityOfInterest) -> (f64, DiscreteMeasure) {
    let zero = DiscreteMeasure::dirac(0.0).expect("valid point");
    let one = DiscreteMeasure::dirac(1.0).expect("valid point");
    let (v0, v1) = (phi.evaluate(&zero), phi.evaluate(&one));
    if v1 >= v0 { (v1, one) } else { (v0, zero) }
}

fn mean_constraint_upper(m: f64, phi: &QuantityOfInterest) -> Option<Side> {
    use QuantityOfInterest as Q;
    let dirac = |x: f64| DiscreteMeasure::dirac(x).expect("point in [0, 1]");
    let two = |p: f64, x: f64, y: f64| PriorMixture::new(vec![(p, dirac(x)), (1.0 - p, dirac(y))]).expect("valid weights");
    match phi {
        Q::Mean => Some(Side::exact(m, Some(PriorMixture::dirac(dirac(m))))),
        Q::TailMass { a } if *a > 0.0 => Some(if m >= *a {
            Side::exact(1.0, Some(PriorMixture::dirac(dirac(m))))
        } else {
            Side::exact(m / a, Some(two(m / a, *a, 0.0)))
        }),
        Q::Negated { inner } => match &**inner {
            Q::Mean => Some(Side::exact(-m, Some(PriorMixture::dirac(dirac(m))))),
            Q::TailMass { a } if *a > 0.0 => Some(if m < *a || *a >= 1.0 {
                Side::exact(0.0, Some(PriorMixture::dirac(dirac(m))))
            } else {
                // infimum approached by mass just below a
                let below = a * (1.0 - 1e-12);
                let p = (m - below) / (1.0 - below);
                Side { witness_value: Some(-p), ..Side::exact(-(m - a) / (1.0 - a), Some(two(p, 1.0, below))) }
            }),
            _ => None,
        },
        _ => None,
    }
}

/// `U(Π)` for `Φ`.
fn upper_prior(class: &PriorClass, phi: &QuantityOfInterest, cfg: &OptimizerConfig) -> Result<Side> {
    use QuantityOfInterest as Q;
    if let Q::Constant { c } = phi {
        return Ok(Side::exact(*c, None));
    }
    match class {
        PriorClass::MeanConstraint { m } => match mean_constraint_upper(*m, phi) {
            Some(side) => Ok(side),
            None => optimizer_side(class, phi, None, cfg),
        },
        PriorClass::LikelihoodBand { m, .. } | PriorClass::PerPointBand { m, .. } => {
            let finite = optimizer_side(class, phi, None, cfg)?;
            match (mean_constraint_upper(*m, phi), phi) {
                (Some(limit), Q::TailMass { .. }) => Ok(Side {
                    value: limit.value,
                    method: Method::ClosedFormLimit,
                    finite_delta: Some(finite.value),
                    ..finite
                }),
                _ => Ok(finite),
            }
        }
        PriorClass::MomentClass { .. } => match phi {
            // under the iterated-uniform law E[q₁] = 1/2
            Q::Mean | Q::Moment { j: 1 } => Ok(Side::exact(0.5, None)),
            Q::Negated { inner } if matches!(**inner, Q::Mean | Q::Moment { j: 1 }) => Ok(Side::exact(-0.5, None)),
            _ => Err(Error::UnsupportedCombination { class: class.label(), quantity: phi.label() }),
        },
        PriorClass::Contamination { base, epsilon } => {
            let (sup, at) = endpoint_sup(phi);
            let value = (1.0 - epsilon) * base.prior_value(phi) + epsilon * sup;
            let mut comps: Vec<(f64, DiscreteMeasure)> =
                base.components.iter().map(|c| ((1.0 - epsilon) * c.weight, c.measure.clone())).collect();
            comps.push((*epsilon, at));
            Ok(Side::exact(value, Some(PriorMixture::new(comps)?)))
        }
    }
}

/// `U(Π|B)` for `Φ`.
fn upper_posterior(class: &PriorClass, phi: &QuantityOfInterest, obs: &Observation, cfg: &OptimizerConfig) -> Result<Side> {
    use QuantityOfInterest as Q;
    if let Q::Constant { c } = phi {
        return Ok(Side::exact(*c, None));
    }
    let limit = match (class, phi) {
        (PriorClass::LikelihoodBand { m, alpha, .. }, Q::TailMass { a }) => Some(likelihood_band_limit(*alpha, *a, *m)),
        (PriorClass::PerPointBand { m, gamma, obs: band }, Q::TailMass { a }) => {
            Some(per_point_band_posterior_limit(*gamma, band.n() as u32, *a, *m))
        }
        _ => None,
    };
    match class {
        PriorClass::MomentClass { k, grid_n } => {
            let toward_one = match phi {
                Q::Mean => true,
                Q::Negated { inner } if matches!(**inner, Q::Mean) => false,
                _ => return Err(Error::UnsupportedCombination { class: class.label(), quantity: phi.label() }),
            };
            let opts = ConstructionOptions { grid_n: *grid_n, seed: cfg.seed, toward_one, ..ConstructionOptions::default() };
            let w = construct_worst_prior_moment_class(*k, obs, &Q::Mean, &opts)?;
            let sign = if toward_one { 1.0 } else { -1.0 };
            Ok(Side {
                value: sign * w.achieved_posterior,
                method: Method::Constructive,
                finite_delta: None,
                witness_value: Some(sign * w.achieved_posterior),
                witness: Some(w.prior),
            })
        }
        _ => {
            let finite = optimizer_side(class, phi, Some(obs), cfg)?;
            Ok(match limit {
                Some(l) => Side { value: l, method: Method::ClosedFormLimit, finite_delta: Some(finite.value), ..finite },
                None => finite,
            })
        }
    }
}

/// `[L(Π), U(Π)]` with default optimizer settings.
pub fn prior_bounds(class: &PriorClass, phi: &QuantityOfInterest) -> Result<BoundsResult> {
    prior_bounds_with(class, phi, &OptimizerConfig::default())
}

pub fn prior_bounds_with(class: &PriorClass, phi: &QuantityOfInterest, cfg: &OptimizerConfig) -> Result<BoundsResult> {
    class.validate()?;
    let upper = upper_prior(class, phi, cfg)?;
    let lower = upper_prior(class, &phi.negated(), cfg)?.negate();
    Ok(BoundsResult::from_sides(lower, upper))
}

/// `[L(Π|B), U(Π|B)]` with default optimizer settings.
pub fn posterior_bounds(class: &PriorClass, phi: &QuantityOfInterest, obs: &Observation) -> Result<BoundsResult> {
    posterior_bounds_with(class, phi, obs, &OptimizerConfig::default())
}

pub fn posterior_bounds_with(
    class: &PriorClass,
    phi: &QuantityOfInterest,
    obs: &Observation,
    cfg: &OptimizerConfig,
) -> Result<BoundsResult> {
    class.validate()?;
    let upper = upper_posterior(class, phi, obs, cfg)?;
    let lower = upper_posterior(class, &phi.negated(), obs, cfg)?.negate();
    Ok(BoundsResult::from_sides(lower, upper))
}

/// Settings of the moment-class worst-prior construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionOptions {
    pub grid_n: usize,
    pub seed: u64,
    /// Moment vectors drawn per stratum of `q₁`.
    pub samples: usize,
    /// `true` pushes the posterior of `E[X]` up, `false` down.
    pub toward_one: bool,
    /// Candidate split points of `q₁` between the two strata.
    pub thresholds: Vec<f64>,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        Self { grid_n: 501, seed: 0, samples: 48, toward_one: true, thresholds: vec![0.5, 0.75, 0.9, 0.97, 0.99] }
    }
}

/// Near-worst prior over `Ψ⁻¹(Q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstPrior {
    pub k: usize,
    pub threshold: f64,
    pub prior: PriorMixture,
    pub achieved_posterior: f64,
    /// `E_Q[q₁]`.
    pub prior_value: f64,
    /// Prior value of the sampled mixture.
    pub prior_value_estimate: f64,
    /// Largest `|moment_map(μ) − q|_∞` over components.
    pub max_moment_error: f64,
    /// Largest total ball mass among the ball-avoiding components.
    pub avoid_ball_mass: f64,
    /// Smallest single-ball mass among the ball-hitting components.
    pub hit_ball_mass: f64,
}

/// Worst prior for the moment class `Ψ⁻¹(Q)`, `Q` iterated-uniform on `k` moments.
///
/// `q₁` is stratified at a threshold `τ`. Above it (below it, when pushing
/// down) each `μ_q` maximizes the smallest data-ball mass among measures with
/// moments `q`; in the other stratum `μ_q` minimizes the total ball mass. The
/// prior is the resulting finite mixture, weighted by stratum probability, and
/// the threshold with the largest achieved posterior is kept.
pub fn construct_worst_prior_moment_class(
    k: usize,
    obs: &Observation,
    phi: &QuantityOfInterest,
    opts: &ConstructionOptions,
) -> Result<WorstPrior> {
    if k < 1 {
        return Err(Error::InvalidClass("moment class needs k >= 1".into()));
    }
    let mut points = MomentGrid::uniform(opts.grid_n).points().to_vec();
    for b in obs.balls() {
        let (c, r) = (b.center(), b.radius());
        points.extend([c - r, c, c + r].into_iter().filter(|x| (0.0..=1.0).contains(x)));
    }
    let mut support = MomentGrid::from_points(points);
    let mut sampler = IteratedUniformSampler::new(k, opts.grid_n);
    let s = opts.samples.max(1);
    let mut best: Option<WorstPrior> = None;
    for (ti, &tau) in opts.thresholds.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(ti as u64);
        // (hit, lo, hi): q₁ ranges of the two strata
        let (hit, avoid) = if opts.toward_one { ((tau, 1.0), (0.0, tau)) } else { ((0.0, 1.0 - tau), (1.0 - tau, 1.0)) };
        let mut comps = Vec::with_capacity(2 * s);
        let (mut max_err, mut avoid_mass, mut hit_mass) = (0.0f64, 0.0f64, f64::INFINITY);
        let mut prior_est = 0.0;
        for (range, maximize) in [(hit, true), (avoid, false)] {
            let weight = (range.1 - range.0) / s as f64;
            for i in 0..s {
                // stratified within the stratum as well
                let u = (i as f64 + rng.random::<f64>()) / s as f64;
                let q = sampler.sample_given_first(range.0 + u * (range.1 - range.0), &mut rng)?;
                let mu = support
                    .ball_extremize(q.as_slice(), obs.balls(), maximize)
                    .map_err(|e| Error::ConstructionFailed(format!("moments {:?}: {e}", q.as_slice())))?;
                let err = moment_map(&mu, k).iter().zip(q.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                max_err = max_err.max(err);
                if maximize {
                    hit_mass = hit_mass.min(obs.balls().iter().map(|b| mu.ball_mass(b)).fold(f64::INFINITY, f64::min));
                } else {
                    avoid_mass = avoid_mass.max(obs.balls().iter().map(|b| mu.ball_mass(b)).sum());
                }
                prior_est += weight * q.as_slice()[0];
                comps.push((weight, mu));
            }
        }
        if max_err > CONSTRAINT_TOL {
            return Err(Error::ConstructionFailed(format!("moment mismatch {max_err:e} exceeds tolerance")));
        }
        let prior = PriorMixture::new(comps)?;
        let achieved = match prior.posterior_value(phi, obs) {
            Ok(v) => v,
            Err(Error::ZeroEvidence { .. }) => continue,
            Err(e) => return Err(e),
        };
        let better = best.as_ref().is_none_or(|b| {
            if opts.toward_one { achieved > b.achieved_posterior } else { achieved < b.achieved_posterior }
        });
        if better {
            best = Some(WorstPrior {
                k,
                threshold: tau,
                prior,
                achieved_posterior: achieved,
                prior_value: 0.5,
                prior_value_estimate: prior_est,
                max_moment_error: max_err,
                avoid_ball_mass: avoid_mass,
                hit_ball_mass: hit_mass,
            });
        }
    }
    best.ok_or_else(|| Error::ConstructionFailed("every threshold gave the data zero probability".into()))
}

/// Categorical cell probabilities of the data-generating law in the mixture demo.
pub const FLIP_TRUTH: [f64; 5] = [0.1, 0.2, 0.3, 0.25, 0.15];
/// Minimal TV separation of the base prior's atoms from the truth.
pub const FLIP_TAU: f64 = 0.2;
/// Number of atoms of the base prior.
pub const FLIP_BASE_ATOMS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFlip {
    pub epsilon: f64,
    pub n: usize,
    /// TV between the base prior `π` and `π' = (1−ε)π + εδ_ν`.
    pub tv_prior: f64,
    pub base_mass_near_truth: f64,
    pub mixed_mass_near_truth: f64,
    /// Smallest TV from the truth among base atoms.
    pub base_separation: f64,
    pub counts: Vec<u64>,
}

fn tv_categorical(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Posterior mass within TV `τ/2` of `ν` for a prior over categorical laws.
fn mass_near_truth(atoms: &[(f64, Vec<f64>)], counts: &[u64]) -> f64 {
    let logs: Vec<(f64, bool)> = atoms
        .iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, p)| {
            let ll: f64 = counts.iter().zip(p).map(|(&c, &pj)| if c == 0 { 0.0 } else { c as f64 * pj.ln() }).sum();
            (w.ln() + ll, tv_categorical(p, &FLIP_TRUTH) < FLIP_TAU / 2.0)
        })
        .collect();
    let top = logs.iter().map(|(l, _)| *l).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logs.iter().map(|(l, _)| (l - top).exp()).sum();
    let near: f64 = logs.iter().filter(|(_, near)| *near).map(|(l, _)| (l - top).exp()).sum();
    near / total
}

/// Contaminating a τ-separated prior by `ε·δ_ν` flips its posterior.
///
/// The base prior `π` is uniform over seeded Dirichlet(1) categorical laws at
/// TV distance at least `τ` from `ν`; `n` draws from `ν` are then conditioned on.
pub fn mixture_flip_demo(epsilon: f64, n: usize, seed: u64) -> Result<MixtureFlip> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidClass(format!("epsilon = {epsilon} must lie in [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = FLIP_TRUTH.len();
    let mut base: Vec<Vec<f64>> = Vec::with_capacity(FLIP_BASE_ATOMS);
    while base.len() < FLIP_BASE_ATOMS {
        let g: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = g.iter().sum();
        let p: Vec<f64> = g.iter().map(|x| x / total).collect();
        if tv_categorical(&p, &FLIP_TRUTH) >= FLIP_TAU {
            base.push(p);
        }
    }
    let mut counts = vec![0u64; k];
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut cell = k - 1;
        for (j, &p) in FLIP_TRUTH.iter().enumerate() {
            acc += p;
            if u < acc {
                cell = j;
                break;
            }
        }
        counts[cell] += 1;
    }
    let w = 1.0 / FLIP_BASE_ATOMS as f64;
    let base_prior: Vec<(f64, Vec<f64>)> = base.iter().map(|p| (w, p.clone())).collect();
    let mut mixed: Vec<(f64, Vec<f64>)> = base.iter().map(|p| ((1.0 - epsilon) * w, p.clone())).collect();
    mixed.push((epsilon, FLIP_TRUTH.to_vec()));
    // TV over the common atom set: base atoms plus the truth
    let tv_prior = 0.5 * (base_prior.iter().zip(&mixed).map(|((a, _), (b, _))| (a - b).abs()).sum::<f64>() + epsilon);
    Ok(MixtureFlip {
        epsilon,
        n,
        tv_prior,
        base_mass_near_truth: mass_near_truth(&base_prior, &counts),
        mixed_mass_near_truth: mass_near_truth(&mixed, &counts),
        base_separation: base.iter().map(|p| tv_categorical(p, &FLIP_TRUTH)).fold(f64::INFINITY, f64::min),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tail() -> QuantityOfInterest {
        QuantityOfInterest::TailMass { a: 0.75 }
    }

    fn band(alpha: f64, delta: f64) -> PriorClass {
        PriorClass::LikelihoodBand { m: 0.375, alpha, obs: Observation::new(&[0.8], delta).unwrap() }
    }

    #[test]
    fn mean_constraint_prior_examples() {
        let r = prior_bounds(&PriorClass::MeanConstraint { m: 0.375 }, &tail()).unwrap();
        assert_eq!(r.upper.value, 0.5);
        assert_eq!(r.lower.value, 0.0);
        let w = r.upper.witness.unwrap();
        assert_abs_diff_eq!(w.mean_of_means(), 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(w.prior_value(&tail()), 0.5, epsilon = 1e-15);

        let r = prior_bounds(&PriorClass::MeanConstraint { m: 0.75 }, &tail()).unwrap();
        assert_eq!(r.upper.value, 1.0);

        let c = QuantityOfInterest::Constant { c: 0.3 };
        let r = prior_bounds(&PriorClass::MeanConstraint { m: 0.4 }, &c).unwrap();
        assert_eq!((r.lower.value, r.upper.value), (0.3, 0.3));
    }

    #[test]
    fn mean_constraint_lower_above_threshold() {
        let r = prior_bounds(&PriorClass::MeanConstraint { m: 0.9 }, &tail()).unwrap();
        assert_abs_diff_eq!(r.lower.value, 0.6, epsilon = 1e-12);
        let w = r.lower.witness.unwrap();
        assert_abs_diff_eq!(w.mean_of_means(), 0.9, epsilon = 1e-9);
        assert_abs_diff_eq!(w.prior_value(&tail()), 0.6, epsilon = 1e-9);
    }

    #[test]
    fn optimizer_matches_closed_form_on_moment_quantity() {
        // sup E[X²] under E[X] = m is m (mass at 0 and 1); inf is m²
        let class = PriorClass::MeanConstraint { m: 0.3 };
        let r = prior_bounds(&class, &QuantityOfInterest::Moment { j: 2 }).unwrap();
        assert!(r.upper.value <= 0.3 + 1e-9 && r.upper.value >= 0.3 - BOUND_TOL, "{:?}", r.upper.value);
        assert!(r.lower.value >= 0.09 - 2.0 * CONSTRAINT_TOL && r.lower.value <= 0.09 + BOUND_TOL, "{:?}", r.lower.value);
        assert!(class.admits_prior(r.upper.witness.as_ref().unwrap()));
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(likelihood_band_limit(1.0, 0.75, 0.375), 0.5);
        assert_eq!(likelihood_band_limit(2.0, 0.75, 0.375), 0.8);
        assert_abs_diff_eq!(likelihood_band_limit(10.0, 0.75, 0.375), 1.0 / 1.01, epsilon = 1e-12);
        assert_abs_diff_eq!(per_point_band_limit(1.2, 10), 0.974_579_028_666_722_8, epsilon = 1e-12);
        assert_abs_diff_eq!(per_point_band_posterior_limit(1.2, 10, 0.75, 0.375), per_point_band_limit(1.2, 10), epsilon = 1e-15);
        // mpmath re-evaluation of 1 − 4e(2kδ/e)^{1/(2k+1)}
        assert_abs_diff_eq!(moment_class_posterior_lower_bound(2, 1e-6), 0.258_847_504_711_781_3, epsilon = 1e-12);
        assert_abs_diff_eq!(moment_class_posterior_lower_bound(2, 1e-10), 0.882_535_245_564_213_5, epsilon = 1e-12);
        assert!(moment_class_posterior_lower_bound(1, 0.1) < 0.0);
        assert!(moment_class_posterior_lower_bound(2, 1e-300) > 0.999);
    }

    #[test]
    fn likelihood_band_posterior_reports_limit_and_finite_estimate() {
        let class = band(2.0, 1e-3);
        let obs = Observation::new(&[0.8], 1e-3).unwrap();
        let r = posterior_bounds(&class, &tail(), &obs).unwrap();
        assert_eq!(r.upper.method, Method::ClosedFormLimit);
        assert_eq!(r.upper.value, 0.8);
        let finite = r.upper.finite_delta.unwrap();
        assert!((0.78..=0.8 + BOUND_TOL).contains(&finite), "{finite}");
        let w = r.upper.witness.unwrap();
        assert!(class.admits_prior(&w));
        assert_abs_diff_eq!(w.posterior_value(&tail(), &obs).unwrap(), finite, epsilon = 1e-12);
        assert!(r.lower.value <= r.upper.value);
    }

    #[test]
    fn alpha_one_posterior_equals_prior() {
        let class = band(1.0, 1e-3);
        let obs = Observation::new(&[0.8], 1e-3).unwrap();
        let post = posterior_bounds(&class, &tail(), &obs).unwrap();
        let prior = prior_bounds(&class, &tail()).unwrap();
        assert_abs_diff_eq!(post.upper.finite_delta.unwrap(), prior.upper.finite_delta.unwrap(), epsilon = BOUND_TOL);
        assert_eq!(post.upper.value, 0.5);
    }

    #[test]
    fn negation_mirrors_bounds() {
        let class = band(2.0, 1e-3);
        let obs = Observation::new(&[0.8], 1e-3).unwrap();
        let a = posterior_bounds(&class, &tail(), &obs).unwrap();
        let b = posterior_bounds(&class, &tail().negated(), &obs).unwrap();
        assert_eq!(a.upper.finite_delta.map(|v| -v), b.lower.finite_delta);
        assert_eq!(a.lower.value, -b.upper.value);
    }

    #[test]
    fn contamination_prior_bound() {
        let base = PriorMixture::dirac(DiscreteMeasure::dirac(0.2).unwrap());
        let class = PriorClass::Contamination { base, epsilon: 0.1 };
        let r = prior_bounds(&class, &QuantityOfInterest::Mean).unwrap();
        assert_abs_diff_eq!(r.upper.value, 0.9 * 0.2 + 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.lower.value, 0.9 * 0.2, epsilon = 1e-15);
    }

    #[test]
    fn invalid_classes() {
        assert!(prior_bounds(&PriorClass::MeanConstraint { m: 1.5 }, &tail()).is_err());
        assert!(prior_bounds(&band(0.5, 1e-3), &tail()).is_err());
        let r = prior_bounds(&PriorClass::MomentClass { k: 2, grid_n: 201 }, &tail());
        assert!(matches!(r, Err(Error::UnsupportedCombination { .. })));
    }

    #[test]
    fn moment_class_prior_is_half() {
        let r = prior_bounds(&PriorClass::MomentClass { k: 2, grid_n: 201 }, &QuantityOfInterest::Mean).unwrap();
        assert_eq!((r.lower.value, r.upper.value), (0.5, 0.5));
    }

    #[test]
    fn worst_prior_beats_lower_bound() {
        let obs = Observation::new(&[0.5], 1e-6).unwrap();
        let opts = ConstructionOptions { grid_n: 201, samples: 12, ..Default::default() };
        let w = construct_worst_prior_moment_class(2, &obs, &QuantityOfInterest::Mean, &opts).unwrap();
        assert!(w.achieved_posterior >= moment_class_posterior_lower_bound(2, 1e-6));
        assert!(w.max_moment_error <= 1e-6);
        assert!(w.avoid_ball_mass < 1e-9);
        assert!(w.hit_ball_mass > 0.0);
        assert_abs_diff_eq!(w.prior_value_estimate, 0.5, epsilon = 1e-2);

        let c = QuantityOfInterest::Constant { c: 0.42 };
        assert_eq!(construct_worst_prior_moment_class(2, &obs, &c, &opts).unwrap().achieved_posterior, 0.42);

        let down = ConstructionOptions { toward_one: false, ..opts };
        let w = construct_worst_prior_moment_class(2, &obs, &QuantityOfInterest::Mean, &down).unwrap();
        assert!(w.achieved_posterior <= 1.0 - moment_class_posterior_lower_bound(2, 1e-6));
    }

    #[test]
    fn mixture_flip_examples() {
        let r = mixture_flip_demo(0.01, 500, 3).unwrap();
        assert!(r.mixed_mass_near_truth >= 0.99, "{}", r.mixed_mass_near_truth);
        assert_eq!(r.base_mass_near_truth, 0.0);
        assert_abs_diff_eq!(r.tv_prior, 0.01, epsilon = 1e-15);
        assert!(r.base_separation >= FLIP_TAU);

        let none = mixture_flip_demo(0.01, 0, 3).unwrap();
        assert_abs_diff_eq!(none.mixed_mass_near_truth, 0.01, epsilon = 1e-15);

        let zero = mixture_flip_demo(0.0, 500, 3).unwrap();
        assert_eq!(zero.mixed_mass_near_truth, zero.base_mass_near_truth);
        assert_eq!(zero.tv_prior, 0.0);
    }
}
