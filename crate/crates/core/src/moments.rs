//! Geometry of the truncated Hausdorff moment space `{(E X, …, E X^k)}` of
//! probability measures on `[0, 1]`.
//!
//! Membership is decided by positive semidefiniteness of the two Hankel
//! matrices of the Hausdorff problem. Conditional ranges of the next moment
//! are linear programs over weights on a uniform support grid; the grid body
//! is an inner approximation of the true body with `O(1/grid_n)` bias.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Sense};
use crate::measures::{Ball, DiscreteMeasure};

/// Equality residual accepted by the moment linear programs.
pub const LP_FEASIBILITY_TOL: f64 = 1e-7;
/// Default support grid for conditional ranges.
pub const DEFAULT_MOMENT_GRID: usize = 2001;

/// Candidate values `(E X, …, E X^k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MomentVector(Vec<f64>);

impl MomentVector {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidMeasure("moment vector needs k >= 1".into()));
        }
        if let Some(v) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidMeasure(format!("moment coordinate {v} outside [0, 1]")));
        }
        Ok(Self(q))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Attainable `[lo, hi]` of the next moment given a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRange {
    pub lo: f64,
    pub hi: f64,
}

impl MomentRange {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Whether `q` lies in the Hausdorff moment body, up to eigenvalue slack `tol`.
///
/// With `m = (1, q₁, …, q_k)`: for `k = 2d` the matrices are
/// `[m_{i+j}]_{0..=d}` and `[m_{i+j+1} − m_{i+j+2}]_{0..d}`; for `k = 2d+1`
/// they are `[m_{i+j+1}]_{0..=d}` and `[m_{i+j} − m_{i+j+1}]_{0..=d}`.
pub fn is_feasible(q: &MomentVector, tol: f64) -> bool {
    let mut m = Vec::with_capacity(q.k() + 1);
    m.push(1.0);
    m.extend_from_slice(q.as_slice());
    let k = q.k();
    let d = k / 2;
    let (a, b) = if k.is_multiple_of(2) {
        (
            DMatrix::from_fn(d + 1, d + 1, |i, j| m[i + j]),
            DMatrix::from_fn(d, d, |i, j| m[i + j + 1] - m[i + j + 2]),
        )
    } else {
        (
            DMatrix::from_fn(d + 1, d + 1, |i, j| m[i + j + 1]),
            DMatrix::from_fn(d + 1, d + 1, |i, j| m[i + j] - m[i + j + 1]),
        )
    };
    min_eigenvalue(a) >= -tol && min_eigenvalue(b) >= -tol
}

/// Finite support set with cached monomials, reused across many programs.
#[derive(Debug, Clone)]
pub struct MomentGrid {
    points: Vec<f64>,
    // powers[j][i] = points[i]^(j+1)
    powers: Vec<Vec<f64>>,
}

impl MomentGrid {
    /// `grid_n` equispaced points on `[0, 1]`, endpoints included.
    pub fn uniform(grid_n: usize) -> Self {
        let n = grid_n.max(2);
        Self::from_points((0..n).map(|i| i as f64 / (n - 1) as f64).collect())
    }

    pub fn from_points(mut points: Vec<f64>) -> Self {
        points.sort_by(f64::total_cmp);
        points.dedup();
        Self { points, powers: Vec::new() }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    fn ensure_powers(&mut self, k: usize) {
        while self.powers.len() < k {
            let j = self.powers.len() as i32 + 1;
            self.powers.push(self.points.iter().map(|x| x.powi(j)).collect());
        }
    }

    /// Optimizes `Σ objective[i]·w_i` over weights matching `prefix`.
    ///
    /// Returns the optimal value and the optimizing measure.
    pub fn extremize(
        &mut self,
        prefix: &[f64],
        objective: &[f64],
        maximize: bool,
    ) -> Result<(f64, DiscreteMeasure)> {
        self.ensure_powers(prefix.len());
        let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
        let mut lp = LinearProgram::new(sense);
        let vars: Vec<usize> = objective.iter().map(|&c| lp.add_var(c, 0.0, f64::INFINITY)).collect();
        lp.add_eq(vars.iter().map(|&v| (v, 1.0)).collect(), 1.0);
        for (j, &target) in prefix.iter().enumerate() {
            let row = vars.iter().zip(&self.powers[j]).map(|(&v, &p)| (v, p)).collect();
            lp.add_eq(row, target);
        }
        let sol = lp.solve(LP_FEASIBILITY_TOL)?;
        let total: f64 = sol.values.iter().map(|w| w.max(0.0)).sum();
        let measure = DiscreteMeasure::from_atoms(
            self.points.iter().zip(&sol.values).map(|(&x, &w)| (x, w.max(0.0) / total)),
        )?;
        Ok((sol.objective, measure))
    }

    /// Measure on the grid with moments `prefix` that either minimizes the
    /// total mass of `balls` or maximizes the smallest single-ball mass.
    pub fn ball_extremize(&mut self, prefix: &[f64], balls: &[Ball], maximize: bool) -> Result<DiscreteMeasure> {
        self.ensure_powers(prefix.len());
        let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
        let mut lp = LinearProgram::new(sense);
        let vars: Vec<usize> = self
            .points
            .iter()
            .map(|&x| {
                let hits = balls.iter().filter(|b| b.contains(x)).count() as f64;
                lp.add_var(if maximize { 0.0 } else { hits }, 0.0, f64::INFINITY)
            })
            .collect();
        lp.add_eq(vars.iter().map(|&v| (v, 1.0)).collect(), 1.0);
        for (j, &target) in prefix.iter().enumerate() {
            let row = vars.iter().zip(&self.powers[j]).map(|(&v, &p)| (v, p)).collect();
            lp.add_eq(row, target);
        }
        if maximize {
            let t = lp.add_var(1.0, 0.0, 1.0);
            for b in balls {
                let mut row: Vec<(usize, f64)> = self
                    .points
                    .iter()
                    .zip(&vars)
                    .filter(|(x, _)| b.contains(**x))
                    .map(|(_, &v)| (v, 1.0))
                    .collect();
                row.push((t, -1.0));
                lp.add_ge(row, 0.0);
            }
        }
        let sol = lp.solve(LP_FEASIBILITY_TOL)?;
        let total: f64 = vars.iter().map(|&v| sol.values[v].max(0.0)).sum();
        DiscreteMeasure::from_atoms(self.points.iter().zip(&vars).map(|(&x, &v)| (x, sol.values[v].max(0.0) / total)))
    }

    /// Range of `E[X^{j+1}]` over measures on the grid with moments `prefix`.
    pub fn conditional_range(&mut self, prefix: &[f64]) -> Result<MomentRange> {
        let next = prefix.len() + 1;
        self.ensure_powers(next);
        let objective = self.powers[next - 1].clone();
        let (lo, _) = self.extremize(prefix, &objective, false)?;
        let (hi, _) = self.extremize(prefix, &objective, true)?;
        let lo = lo.clamp(0.0, 1.0);
        Ok(MomentRange { lo, hi: hi.clamp(lo, 1.0) })
    }
}

/// `[inf, sup]` of the next moment given `q_prefix`, over measures supported
/// on a uniform grid of `grid_n` points.
pub fn conditional_moment_range(q_prefix: &MomentVector, grid_n: usize) -> Result<MomentRange> {
    MomentGrid::uniform(grid_n).conditional_range(q_prefix.as_slice())
}

/// Draws from the iterated-uniform measure on the truncated moment space:
/// `q₁ ~ U[0, 1]`, then each next coordinate uniform on its conditional range.
#[derive(Debug, Clone)]
pub struct IteratedUniformSampler {
    k: usize,
    grid: MomentGrid,
}

impl IteratedUniformSampler {
    pub fn new(k: usize, grid_n: usize) -> Self {
        Self { k: k.max(1), grid: MomentGrid::uniform(grid_n) }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<MomentVector> {
        self.sample_given_first(rng.random::<f64>(), rng)
    }

    /// Completes a draw whose first coordinate is fixed (used for stratified
    /// sampling over `q₁`, which is uniform under the iterated measure).
    pub fn sample_given_first<R: Rng + ?Sized>(&mut self, q1: f64, rng: &mut R) -> Result<MomentVector> {
        let mut q = Vec::with_capacity(self.k);
        q.push(q1);
        while q.len() < self.k {
            let range = self.grid.conditional_range(&q)?;
            let u: f64 = rng.random();
            q.push(range.lo + u * range.width());
        }
        MomentVector::new(q)
    }
}

/// One draw of the iterated-uniform prior with a dedicated seeded stream.
pub fn sample_iterated_uniform_q(k: usize, rng_seed: u64, grid_n: usize) -> Result<MomentVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    IteratedUniformSampler::new(k, grid_n).sample(&mut rng)
}

/// Finitely supported measure on the real line, used for the standardized
/// Chebyshev extremal distributions (which do not live on `[0, 1]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealLineMeasure {
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RealLineMeasure {
    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let c = self.mean();
        self.support.iter().zip(&self.weights).map(|(x, w)| w * (x - c) * (x - c)).sum()
    }

    /// `P[|X − c| ≥ t·σ]` with `c`, `σ` the measure's own mean and deviation.
    pub fn standardized_tail(&self, t: f64) -> f64 {
        let c = self.mean();
        // relative slack absorbs rounding in σ so atoms placed at exactly t·σ count
        let s = self.variance().sqrt() * (1.0 - 1e-12);
        self.support
            .iter()
            .zip(&self.weights)
            .filter(|(x, _)| (*x - c).abs() >= t * s)
            .map(|(_, w)| w)
            .sum()
    }
}

/// Mean-zero, unit-variance measure on at most three points attaining
/// `P[|X| ≥ t] = min{1, 1/t²}`.
pub fn chebyshev_extremal_measure(t: f64) -> Result<RealLineMeasure> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidThreshold(t));
    }
    if t <= 1.0 {
        return Ok(RealLineMeasure { support: vec![-1.0, 1.0], weights: vec![0.5, 0.5] });
    }
    let p = 1.0 / (2.0 * t * t);
    Ok(RealLineMeasure { support: vec![-t, 0.0, t], weights: vec![p, 1.0 - 2.0 * p, p] })
}
