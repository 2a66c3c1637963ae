//! Probability measures on `[0, 1]` and the metrics between them.
//!
//! Two representations are supported: finitely supported [`DiscreteMeasure`]s
//! and piecewise-constant [`GridDensity`]s on a uniform partition. Balls are
//! open, so atoms on a ball's boundary carry no mass into it.
//!
//! Total variation is computed exactly on a common refinement of the two
//! arguments. The Prokhorov distance between discrete measures is found by
//! bisection on `ε`, each candidate checked with a Strassen-type transport
//! feasibility test solved as an integer max-flow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;

/// Weights of a [`DiscreteMeasure`] must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Cell masses of a [`GridDensity`] must sum to one within this tolerance.
pub const DENSITY_SUM_TOL: f64 = 1e-9;
/// Default resolution of grid densities.
pub const DEFAULT_GRID_CELLS: usize = 20_000;

/// Capacity scale of the integer max-flow used for Prokhorov feasibility.
const FLOW_SCALE: f64 = 1e9;
/// Bisection cap for the Prokhorov search.
const PROKHOROV_MAX_ITERS: usize = 40;

/// Finitely supported probability measure on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from a strictly increasing support and matching weights.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if support.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "support has {} points but {} weights were given",
                support.len(),
                weights.len()
            )));
        }
        if let Some(x) = support.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidMeasure(format!("support point {x} outside [0, 1]")));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMeasure("support must be strictly increasing".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { support, weights })
    }

    /// Builds a measure from unordered `(point, weight)` pairs.
    ///
    /// Points are sorted, coincident points merged and zero weights dropped.
    /// The total must be within `1e-9` of one; it is then renormalized exactly.
    pub fn from_atoms<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().filter(|&(_, w)| w != 0.0).collect();
        if atoms.iter().any(|&(x, w)| x.is_nan() || w.is_nan()) {
            return Err(Error::InvalidMeasure("NaN atom".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match support.last() {
                Some(&last) if last == x => *weights.last_mut().unwrap() += w,
                _ => {
                    support.push(x);
                    weights.push(w);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > DENSITY_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("atom weights sum to {total}, not 1")));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(support, weights)
    }

    /// Point mass at `x`.
    pub fn dirac(x: f64) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.weights.iter().copied())
    }

    /// `E[f(X)]`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.atoms().map(|(x, w)| w * f(x)).sum()
    }
}

/// Piecewise-constant probability density on a uniform partition of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    values: Vec<f64>,
}

impl GridDensity {
    /// Builds a density from per-cell values (density heights, not masses).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidMeasure("grid needs at least one cell".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!("density value {v} is not a nonnegative number")));
        }
        let width = 1.0 / values.len() as f64;
        let total: f64 = values.iter().map(|v| v * width).sum();
        if (total - 1.0).abs() > DENSITY_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("density integrates to {total}, not 1")));
        }
        Ok(Self { values })
    }

    /// Builds a density from per-cell probability masses.
    pub fn from_cell_masses(masses: &[f64]) -> Result<Self> {
        let n = masses.len() as f64;
        Self::new(masses.iter().map(|m| m * n).collect())
    }

    pub fn uniform(n_cells: usize) -> Self {
        Self { values: vec![1.0; n_cells.max(1)] }
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.values.len() as f64
    }

    pub fn cell_mass(&self, i: usize) -> f64 {
        self.values[i] * self.cell_width()
    }

    /// `[lo, hi]` of cell `i`.
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let n = self.values.len() as f64;
        (i as f64 / n, (i + 1) as f64 / n)
    }

    /// Integral of the density over `[lo, hi] ∩ [0, 1]`, prorating partial cells.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(0.0);
        let hi = hi.min(1.0);
        if hi <= lo {
            return 0.0;
        }
        let n = self.values.len();
        let first = ((lo * n as f64).floor() as usize).min(n - 1);
        let last = ((hi * n as f64).ceil() as usize).clamp(first + 1, n);
        (first..last)
            .map(|i| {
                let (a, b) = self.cell_bounds(i);
                let overlap = b.min(hi) - a.max(lo);
                if overlap > 0.0 {
                    self.values[i] * overlap
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// Open ball `(center − radius, center + radius) ∩ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: f64,
    radius: f64,
}

impl Ball {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&center) {
            return Err(Error::InvalidBall(format!("center {center} outside [0, 1]")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidBall(format!("radius {radius} must be positive")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Endpoints of the ball clipped to `[0, 1]`.
    pub fn interval(&self) -> (f64, f64) {
        ((self.center - self.radius).max(0.0), (self.center + self.radius).min(1.0))
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() < self.radius
    }

    /// Lebesgue measure of the clipped ball.
    pub fn length(&self) -> f64 {
        let (lo, hi) = self.interval();
        hi - lo
    }
}

/// Either representation of a probability measure on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measure {
    Discrete(DiscreteMeasure),
    Grid(GridDensity),
}

impl From<DiscreteMeasure> for Measure {
    fn from(m: DiscreteMeasure) -> Self {
        Measure::Discrete(m)
    }
}

impl From<GridDensity> for Measure {
    fn from(g: GridDensity) -> Self {
        Measure::Grid(g)
    }
}

/// Operations shared by every measure representation.
pub trait ProbabilityMeasure {
    /// `μ(B)` for an open ball.
    fn ball_mass(&self, ball: &Ball) -> f64;
    /// `μ([a, 1])`.
    fn upper_tail(&self, a: f64) -> f64;
    /// `E[X^j]`.
    fn raw_moment(&self, j: u32) -> f64;

    fn mean(&self) -> f64 {
        self.raw_moment(1)
    }
}

impl ProbabilityMeasure for DiscreteMeasure {
    fn ball_mass(&self, ball: &Ball) -> f64 {
        self.atoms().filter(|&(x, _)| ball.contains(x)).map(|(_, w)| w).sum()
    }

    fn upper_tail(&self, a: f64) -> f64 {
        self.atoms().filter(|&(x, _)| x >= a).map(|(_, w)| w).sum()
    }

    fn raw_moment(&self, j: u32) -> f64 {
        self.expect(|x| x.powi(j as i32))
    }
}

impl ProbabilityMeasure for GridDensity {
    fn ball_mass(&self, ball: &Ball) -> f64 {
        let (lo, hi) = ball.interval();
        self.mass_between(lo, hi)
    }

    fn upper_tail(&self, a: f64) -> f64 {
        self.mass_between(a, 1.0)
    }

    fn raw_moment(&self, j: u32) -> f64 {
        let p = j as i32 + 1;
        (0..self.n_cells())
            .map(|i| {
                let (a, b) = self.cell_bounds(i);
                self.values[i] * (b.powi(p) - a.powi(p)) / p as f64
            })
            .sum()
    }
}

impl ProbabilityMeasure for Measure {
    fn ball_mass(&self, ball: &Ball) -> f64 {
        match self {
            Measure::Discrete(m) => m.ball_mass(ball),
            Measure::Grid(g) => g.ball_mass(ball),
        }
    }

    fn upper_tail(&self, a: f64) -> f64 {
        match self {
            Measure::Discrete(m) => m.upper_tail(a),
            Measure::Grid(g) => g.upper_tail(a),
        }
    }

    fn raw_moment(&self, j: u32) -> f64 {
        match self {
            Measure::Discrete(m) => m.raw_moment(j),
            Measure::Grid(g) => g.raw_moment(j),
        }
    }
}

/// Mass of the open ball `b` under `m`.
pub fn ball_mass<M: ProbabilityMeasure + ?Sized>(m: &M, b: &Ball) -> f64 {
    m.ball_mass(b).clamp(0.0, 1.0)
}

/// `(E[X], …, E[X^k])`.
pub fn moment_map<M: ProbabilityMeasure + ?Sized>(m: &M, k: usize) -> Vec<f64> {
    (1..=k as u32).map(|j| m.raw_moment(j)).collect()
}

/// One atom location of the merged support of two discrete measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergedAtom {
    pub x: f64,
    pub left: f64,
    pub right: f64,
}

/// Union of the two supports with each measure's weight at every point.
pub fn merge_atoms(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Vec<MergedAtom> {
    let (sa, wa) = (a.support(), a.weights());
    let (sb, wb) = (b.support(), b.weights());
    let mut out = Vec::with_capacity(sa.len() + sb.len());
    let (mut i, mut j) = (0, 0);
    while i < sa.len() || j < sb.len() {
        let take_a = j >= sb.len() || (i < sa.len() && sa[i] <= sb[j]);
        let take_b = i >= sa.len() || (j < sb.len() && sb[j] <= sa[i]);
        let x = if take_a { sa[i] } else { sb[j] };
        let left = if take_a { wa[i] } else { 0.0 };
        let right = if take_b { wb[j] } else { 0.0 };
        out.push(MergedAtom { x, left, right });
        if take_a {
            i += 1;
        }
        if take_b {
            j += 1;
        }
    }
    out
}

/// One piece of the common refinement of two uniform grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedCell {
    pub lo: f64,
    pub hi: f64,
    pub left_cell: usize,
    pub right_cell: usize,
    pub left_density: f64,
    pub right_density: f64,
}

/// Common refinement of two grids. Breakpoints are compared in exact
/// integer arithmetic (`i·n₂` against `j·n₁`).
pub fn corefine_grids(a: &GridDensity, b: &GridDensity) -> Vec<RefinedCell> {
    let (na, nb) = (a.n_cells() as u128, b.n_cells() as u128);
    let mut out = Vec::with_capacity(a.n_cells() + b.n_cells());
    let (mut i, mut j) = (0usize, 0usize);
    // current left boundary as a rational with denominator na*nb
    let mut left: u128 = 0;
    while (i as u128) < na && (j as u128) < nb {
        let end_a = (i as u128 + 1) * nb;
        let end_b = (j as u128 + 1) * na;
        let right = end_a.min(end_b);
        let denom = (na * nb) as f64;
        out.push(RefinedCell {
            lo: left as f64 / denom,
            hi: right as f64 / denom,
            left_cell: i,
            right_cell: j,
            left_density: a.values()[i],
            right_density: b.values()[j],
        });
        if end_a == right {
            i += 1;
        }
        if end_b == right {
            j += 1;
        }
        left = right;
    }
    out
}

/// Total variation between two discrete measures.
pub fn tv_discrete(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    0.5 * merge_atoms(a, b).iter().map(|m| (m.left - m.right).abs()).sum::<f64>()
}

/// Total variation between two grid densities.
pub fn tv_grid(a: &GridDensity, b: &GridDensity) -> f64 {
    if a.n_cells() == b.n_cells() {
        let w = a.cell_width();
        return 0.5 * a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs() * w).sum::<f64>();
    }
    0.5 * corefine_grids(a, b)
        .iter()
        .map(|c| (c.left_density - c.right_density).abs() * (c.hi - c.lo))
        .sum::<f64>()
}

/// Total variation `sup_A |μ(A) − ν(A)|`.
///
/// A discrete measure and a grid density are mutually singular, so a mixed
/// pair is at distance one. Use [`tv_distance_smoothed`] to spread atoms into
/// grid cells first.
pub fn tv_distance(a: &Measure, b: &Measure) -> f64 {
    match (a, b) {
        (Measure::Discrete(x), Measure::Discrete(y)) => tv_discrete(x, y),
        (Measure::Grid(x), Measure::Grid(y)) => tv_grid(x, y),
        (Measure::Discrete(d), Measure::Grid(g)) | (Measure::Grid(g), Measure::Discrete(d)) => {
            // atoms carry their full weight against the absolutely continuous part
            let atoms: f64 = d.weights().iter().sum();
            let density: f64 = (0..g.n_cells()).map(|i| g.cell_mass(i)).sum();
            (0.5 * (atoms + density)).min(1.0)
        }
    }
}

/// Deposits every atom into the grid cell containing it.
pub fn smooth_to_grid(m: &DiscreteMeasure, n_cells: usize) -> GridDensity {
    let n_cells = n_cells.max(1);
    let mut masses = vec![0.0; n_cells];
    for (x, w) in m.atoms() {
        let i = ((x * n_cells as f64).floor() as usize).min(n_cells - 1);
        masses[i] += w;
    }
    let n = n_cells as f64;
    GridDensity { values: masses.into_iter().map(|m| m * n).collect() }
}

/// Total variation after smoothing atoms onto a grid of `n_cells` (or the
/// other argument's grid, when it has one).
pub fn tv_distance_smoothed(a: &Measure, b: &Measure, n_cells: usize) -> f64 {
    let to_grid = |m: &Measure, n: usize| match m {
        Measure::Discrete(d) => smooth_to_grid(d, n),
        Measure::Grid(g) => g.clone(),
    };
    let n = match (a, b) {
        (Measure::Grid(g), _) | (_, Measure::Grid(g)) => g.n_cells(),
        _ => n_cells,
    };
    tv_grid(&to_grid(a, n), &to_grid(b, n))
}

/// Whether `μ(A) ≤ ν(A^ε) + ε` for every Borel `A`.
///
/// By Strassen's theorem this holds iff the bipartite transport network
/// (edge `x → y` iff `|x − y| < ε`) carries at least `1 − ε` of `μ`'s mass.
fn prokhorov_feasible(a: &DiscreteMeasure, b: &DiscreteMeasure, eps: f64) -> bool {
    if eps >= 1.0 {
        return true;
    }
    let (n, m) = (a.len(), b.len());
    let source = n + m;
    let sink = source + 1;
    let mut net = FlowNetwork::new(n + m + 2);
    let scale = |w: f64| (w * FLOW_SCALE).round() as i64;
    let mut supply = 0i64;
    for (i, (_, w)) in a.atoms().enumerate() {
        let c = scale(w);
        supply += c;
        net.add_edge(source, i, c);
    }
    for (j, (_, w)) in b.atoms().enumerate() {
        net.add_edge(n + j, sink, scale(w));
    }
    let ys = b.support();
    for (i, &x) in a.support().iter().enumerate() {
        // supports are sorted: the admissible targets form a contiguous run
        let start = ys.partition_point(|&y| y <= x - eps);
        for (j, &y) in ys.iter().enumerate().skip(start) {
            if y - x >= eps {
                break;
            }
            if (x - y).abs() < eps {
                net.add_edge(i, n + j, i64::MAX / 4);
            }
        }
    }
    let flow = net.max_flow(source, sink);
    // one unit of rounding slack per atom
    let slack = (n + m) as i64;
    flow as f64 + slack as f64 >= (1.0 - eps) * supply as f64
}

/// Prokhorov distance between two discrete measures, within `tol`.
///
/// Returns the smallest feasible `ε` found by bisection on `[0, 1]`; the
/// result is an upper estimate no more than `tol` (or `2^-40`) above the
/// true infimum.
pub fn prokhorov_distance(a: &DiscreteMeasure, b: &DiscreteMeasure, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let tol = if tol > 0.0 { tol } else { f64::EPSILON };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..PROKHOROV_MAX_ITERS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if prokhorov_feasible(a, b, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point(x: f64, y: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(vec![x, y], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn rejects_bad_measures() {
        assert!(DiscreteMeasure::new(vec![0.2, 0.1], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![0.1, 0.1], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![1.1], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![0.5], vec![0.9]).is_err());
        assert!(DiscreteMeasure::new(vec![0.2, 0.5], vec![1.5, -0.5]).is_err());
        assert!(GridDensity::new(vec![1.0, 0.5]).is_err());
        assert!(Ball::new(0.5, 0.0).is_err());
        assert!(Ball::new(1.5, 0.1).is_err());
    }

    #[test]
    fn from_atoms_merges_and_sorts() {
        let m = DiscreteMeasure::from_atoms([(0.7, 0.25), (0.1, 0.5), (0.7, 0.25)]).unwrap();
        assert_eq!(m.support(), &[0.1, 0.7]);
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn ball_mass_examples() {
        let dirac = DiscreteMeasure::dirac(0.5).unwrap();
        assert_eq!(ball_mass(&dirac, &Ball::new(0.5, 0.1).unwrap()), 1.0);

        let u = GridDensity::uniform(DEFAULT_GRID_CELLS);
        assert_abs_diff_eq!(ball_mass(&u, &Ball::new(0.5, 0.1).unwrap()), 0.2, epsilon = 1e-12);

        let m = two_point(0.4, 0.6);
        assert_eq!(ball_mass(&m, &Ball::new(0.5, 0.05).unwrap()), 0.0);
    }

    #[test]
    fn boundary_atoms_are_outside_open_ball() {
        let m = DiscreteMeasure::dirac(0.25).unwrap();
        assert_eq!(ball_mass(&m, &Ball::new(0.5, 0.25).unwrap()), 0.0);
    }

    #[test]
    fn grid_ball_prorates_partial_cells() {
        let u = GridDensity::uniform(10);
        assert_abs_diff_eq!(ball_mass(&u, &Ball::new(0.53, 0.01).unwrap()), 0.02, epsilon = 1e-15);
        // clipped at the left edge
        assert_abs_diff_eq!(ball_mass(&u, &Ball::new(0.0, 0.05).unwrap()), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn moment_examples() {
        let u = GridDensity::uniform(DEFAULT_GRID_CELLS);
        let q = moment_map(&u, 4);
        for (j, v) in q.iter().enumerate() {
            assert_abs_diff_eq!(*v, 1.0 / (j as f64 + 2.0), epsilon = 1e-9);
        }
        assert_eq!(moment_map(&DiscreteMeasure::dirac(0.5).unwrap(), 3), vec![0.5, 0.25, 0.125]);
        assert_eq!(moment_map(&two_point(0.0, 1.0), 2), vec![0.5, 0.5]);
    }

    #[test]
    fn tv_examples() {
        let m: Measure = two_point(0.3, 0.9).into();
        assert_eq!(tv_distance(&m, &m), 0.0);
        let a: Measure = DiscreteMeasure::dirac(0.2).unwrap().into();
        let b: Measure = DiscreteMeasure::dirac(0.8).unwrap().into();
        assert_eq!(tv_distance(&a, &b), 1.0);
    }

    #[test]
    fn tv_of_uniform_against_gapped_uniform() {
        // gap of width 0.01 around 0.5, suppressed by 1e-9 and renormalized
        let n = DEFAULT_GRID_CELLS;
        let (gap_lo, gap_hi, plateau) = (0.495, 0.505, 1e-9);
        let mut masses: Vec<f64> = (0..n)
            .map(|i| {
                let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
                let inside = (b.min(gap_hi) - a.max(gap_lo)).max(0.0);
                (b - a - inside) + plateau * inside
            })
            .collect();
        let z: f64 = masses.iter().sum();
        masses.iter_mut().for_each(|m| *m /= z);
        let gapped = GridDensity::from_cell_masses(&masses).unwrap();
        let tv = tv_grid(&GridDensity::uniform(n), &gapped);
        // oracle: the gap is the maximizing set, μ(gap) − ν(gap)
        let oracle = 0.01 - plateau * 0.01 / z;
        assert_abs_diff_eq!(tv, oracle, epsilon = 1e-9);
    }

    #[test]
    fn mixed_pair_is_singular_unless_smoothed() {
        let d: Measure = DiscreteMeasure::dirac(0.55).unwrap().into();
        let g: Measure = GridDensity::uniform(10).into();
        assert_eq!(tv_distance(&d, &g), 1.0);
        // atom lands in cell 5 of a uniform 10-cell grid: |10 − 1|·0.1 + 9·0.1 = 1.8 → 0.9
        assert_abs_diff_eq!(tv_distance_smoothed(&d, &g, 10), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn corefinement_of_coprime_grids() {
        let a = GridDensity::new(vec![1.5, 0.5]).unwrap();
        let b = GridDensity::new(vec![0.6, 1.2, 1.2]).unwrap();
        let cells = corefine_grids(&a, &b);
        assert_eq!(cells.len(), 4);
        let total: f64 = cells.iter().map(|c| c.hi - c.lo).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
        // direct: pieces [0,1/3],[1/3,1/2],[1/2,2/3],[2/3,1]
        let oracle = 0.5 * ((1.5f64 - 0.6).abs() / 3.0 + (1.5f64 - 1.2).abs() / 6.0 + (0.5f64 - 1.2).abs() / 6.0 + (0.5f64 - 1.2).abs() / 3.0);
        assert_abs_diff_eq!(tv_grid(&a, &b), oracle, epsilon = 1e-15);
    }

    #[test]
    fn prokhorov_identity_and_translation() {
        let m = two_point(0.1, 0.6);
        assert!(prokhorov_distance(&m, &m, 1e-6) <= 1e-6);
        let a = DiscreteMeasure::dirac(0.0).unwrap();
        let b = DiscreteMeasure::dirac(0.3).unwrap();
        assert_abs_diff_eq!(prokhorov_distance(&a, &b, 1e-6), 0.3, epsilon = 1e-6);
    }

    #[test]
    fn prokhorov_two_point_masses_by_definition() {
        // δ_x vs δ_y: the only sets that matter are A ∋ x. μ(A)=1 ≤ ν(A^ε)+ε holds
        // iff y ∈ A^ε (|x−y|<ε) or ε ≥ 1, so the distance is min(|x−y|, 1).
        for &(x, y) in &[(0.1, 0.15), (0.0, 1.0), (0.42, 0.9)] {
            let d = prokhorov_distance(&DiscreteMeasure::dirac(x).unwrap(), &DiscreteMeasure::dirac(y).unwrap(), 1e-7);
            assert_abs_diff_eq!(d, f64::min((x - y).abs(), 1.0), epsilon = 1e-6);
        }
    }

    #[test]
    fn prokhorov_partial_mass_shift() {
        // half the mass moves by 0.5: at ε ≤ 0.5 the moved half can only be excused
        // by the additive ε, so the distance is 1/2.
        let a = two_point(0.0, 0.2);
        let b = two_point(0.0, 0.7);
        assert_abs_diff_eq!(prokhorov_distance(&a, &b, 1e-7), 0.5, epsilon = 1e-6);
    }
}
