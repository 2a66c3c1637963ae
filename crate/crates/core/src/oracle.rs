//! Brute-force search over finite priors, independent of the bounds engine.
//!
//! Candidates are single discrete measures drawn from a fixed stream: first
//! point masses on a 41-point grid with every ball-mass variant of the class,
//! then random measures with one to three atoms. Priors are pairs of
//! candidates; the mean constraint fixes the mixture weight, which is the
//! repair step. Pairs are visited in triangular order `(i, j ≤ i)` until
//! the budget of pair evaluations is spent, so a larger budget with the same
//! seed sees a superset of pairs and never does worse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{Observation, QuantityOfInterest};
use crate::bounds::{PriorClass, PriorMixture, CONSTRAINT_TOL};
use crate::error::{Error, Result};
use crate::measures::{Ball, DiscreteMeasure, ProbabilityMeasure};

pub const MIN_BUDGET: usize = 1000;
const GRID_POINTS: usize = 41;
const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_value: f64,
    pub witness: PriorMixture,
    pub evaluated: usize,
    pub feasible: usize,
}

struct Entry {
    measure: DiscreteMeasure,
    mean: f64,
    phi: f64,
    likelihood: f64,
}

/// Deterministic candidate stream for one class.
struct Stream<'a> {
    class: &'a PriorClass,
    balls: Vec<Ball>,
    variants: Vec<Vec<f64>>,
    grid_order: Vec<usize>,
    grid_pos: usize,
    rng: ChaCha8Rng,
}

impl<'a> Stream<'a> {
    fn new(class: &'a PriorClass, obs: Option<&Observation>, seed: u64) -> Self {
        let (balls, variants) = match class {
            PriorClass::LikelihoodBand { alpha, obs: band, .. } => {
                let r = alpha.powf(1.0 / band.n() as f64);
                let base: Vec<f64> = band.balls().iter().map(Ball::length).collect();
                let scaled = |f: f64| base.iter().map(|b| b * f).collect::<Vec<_>>();
                (band.balls().to_vec(), vec![scaled(1.0 / r), scaled(1.0), scaled(r)])
            }
            PriorClass::PerPointBand { gamma, obs: band, .. } => {
                let base: Vec<f64> = band.balls().iter().map(Ball::length).collect();
                let scaled = |f: f64| base.iter().map(|b| b * f).collect::<Vec<_>>();
                (band.balls().to_vec(), vec![scaled(1.0 / gamma), scaled(1.0), scaled(*gamma)])
            }
            _ => match obs {
                Some(o) => {
                    let base: Vec<f64> = o.balls().iter().map(Ball::length).collect();
                    (o.balls().to_vec(), vec![vec![0.0; base.len()], base])
                }
                None => (Vec::new(), vec![Vec::new()]),
            },
        };
        Self { class, balls, variants, grid_order: farthest_first(GRID_POINTS), grid_pos: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Moves a point out of every ball, to the nearest admissible boundary.
    fn outside(&self, y: f64) -> Option<f64> {
        let inside = |x: f64| self.balls.iter().any(|b| b.contains(x));
        if !inside(y) {
            return Some(y);
        }
        self.balls
            .iter()
            .flat_map(|b| [b.center() - b.radius(), b.center() + b.radius()])
            .filter(|x| (0.0..=1.0).contains(x) && !inside(*x))
            .min_by(|a, b| (a - y).abs().total_cmp(&(b - y).abs()))
    }

    fn assemble(&self, free: &[(f64, f64)], ball_masses: &[f64]) -> Option<DiscreteMeasure> {
        let in_balls: f64 = ball_masses.iter().sum();
        if in_balls > 1.0 {
            return None;
        }
        let mut atoms = Vec::with_capacity(free.len() + ball_masses.len());
        for &(y, w) in free {
            atoms.push((self.outside(y)?, w * (1.0 - in_balls)));
        }
        atoms.extend(self.balls.iter().map(Ball::center).zip(ball_masses.iter().copied()));
        let m = DiscreteMeasure::from_atoms(atoms).ok()?;
        self.class.admits(&m).then_some(m)
    }

    fn random_ball_masses(&mut self) -> Vec<f64> {
        match self.class {
            PriorClass::LikelihoodBand { alpha, .. } => {
                let n = self.balls.len() as f64;
                let s: f64 = self.rng.random_range(-1.0..=1.0);
                self.balls.iter().map(|b| b.length() * alpha.powf(s / n)).collect()
            }
            PriorClass::PerPointBand { gamma, .. } => {
                let g = *gamma;
                self.balls.iter().map(|b| b.length() * g.powf(self.rng.random_range(-1.0..=1.0))).collect()
            }
            _ => {
                let n = self.balls.len().max(1) as f64;
                if self.rng.random::<bool>() {
                    vec![0.0; self.balls.len()]
                } else {
                    self.balls.iter().map(|_| self.rng.random::<f64>() / n).collect()
                }
            }
        }
    }

    /// Next admissible candidate; `None` once random draws stop producing any.
    fn next_measure(&mut self) -> Option<DiscreteMeasure> {
        let grid_total = GRID_POINTS * self.variants.len();
        while self.grid_pos < grid_total {
            let (g, v) = (self.grid_pos / self.variants.len(), self.grid_pos % self.variants.len());
            self.grid_pos += 1;
            let x = self.grid_order[g] as f64 / (GRID_POINTS - 1) as f64;
            if let Some(m) = self.assemble(&[(x, 1.0)], &self.variants[v]) {
                return Some(m);
            }
        }
        for _ in 0..MAX_REJECTIONS {
            let n_atoms = self.rng.random_range(1..=3);
            let raw: Vec<f64> = (0..n_atoms).map(|_| -(1.0 - self.rng.random::<f64>()).ln()).collect();
            let total: f64 = raw.iter().sum();
            let free: Vec<(f64, f64)> = raw.iter().map(|w| (self.rng.random::<f64>(), w / total)).collect();
            let masses = self.random_ball_masses();
            if let Some(m) = self.assemble(&free, &masses) {
                return Some(m);
            }
        }
        None
    }
}

/// Grid indices `0..n` ordered so that every prefix is spread over the grid,
/// which lets small budgets pair candidates from both sides of a mean constraint.
fn farthest_first(n: usize) -> Vec<usize> {
    let mut order = vec![0, n - 1];
    while order.len() < n {
        let next = (0..n)
            .filter(|i| !order.contains(i))
            .max_by_key(|&i| (order.iter().map(|&j| i.abs_diff(j)).min().unwrap_or(0), std::cmp::Reverse(i)))
            .expect("unvisited index remains");
        order.push(next);
    }
    order
}

fn entry(m: DiscreteMeasure, phi: &QuantityOfInterest, obs: Option<&Observation>) -> Entry {
    Entry { mean: m.mean(), phi: phi.evaluate(&m), likelihood: obs.map_or(1.0, |o| o.likelihood(&m)), measure: m }
}

/// Posterior (or prior, when all likelihoods are one) of the pair prior that
/// meets the mean constraint, if any.
fn pair(m: f64, a: &Entry, b: &Entry) -> Option<(f64, f64)> {
    let p = if (a.mean - b.mean).abs() < 1e-12 {
        if (a.mean - m).abs() > CONSTRAINT_TOL {
            return None;
        }
        1.0
    } else {
        let p = (m - b.mean) / (a.mean - b.mean);
        if !(0.0..=1.0).contains(&p) {
            return None;
        }
        p
    };
    let den = p * a.likelihood + (1.0 - p) * b.likelihood;
    Some((p, (p * a.likelihood * a.phi + (1.0 - p) * b.likelihood * b.phi) / den))
}

fn search(
    class: &PriorClass,
    phi: &QuantityOfInterest,
    obs: Option<&Observation>,
    budget: usize,
    seed: u64,
) -> Result<OracleResult> {
    if budget < MIN_BUDGET {
        return Err(Error::InvalidBudget(budget));
    }
    if matches!(class, PriorClass::MomentClass { .. }) {
        return Err(Error::UnsupportedCombination { class: class.label(), quantity: phi.label() });
    }
    let mut stream = Stream::new(class, obs, seed);
    let mut entries: Vec<Entry> = Vec::new();
    let mut best: Option<(f64, PriorMixture)> = None;
    let (mut evaluated, mut feasible, mut saw_zero) = (0usize, 0usize, false);

    if let PriorClass::Contamination { base, epsilon } = class {
        // each candidate is a contaminating measure
        let (num, den) = match obs {
            Some(o) => {
                let d = base.evidence(o);
                (if d > 0.0 { base.posterior_value(phi, o)? * d } else { 0.0 }, d)
            }
            None => (base.prior_value(phi), 1.0),
        };
        while evaluated < budget {
            let Some(m) = stream.next_measure() else { break };
            let e = entry(m, phi, obs);
            evaluated += 1;
            let bottom = (1.0 - epsilon) * den + epsilon * e.likelihood;
            if !(bottom > 0.0) {
                saw_zero = true;
                continue;
            }
            feasible += 1;
            let v = ((1.0 - epsilon) * num + epsilon * e.likelihood * e.phi) / bottom;
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                let mut comps: Vec<(f64, DiscreteMeasure)> =
                    base.components.iter().map(|c| ((1.0 - epsilon) * c.weight, c.measure.clone())).collect();
                comps.push((*epsilon, e.measure.clone()));
                best = Some((v, PriorMixture::new(comps)?));
            }
        }
    } else {
        let m = class.mean_target().ok_or_else(|| Error::UnsupportedCombination { class: class.label(), quantity: phi.label() })?;
        'outer: while let Some(candidate) = stream.next_measure() {
            let e = entry(candidate, phi, obs);
            entries.push(e);
            let i = entries.len() - 1;
            for j in 0..=i {
                if evaluated >= budget {
                    break 'outer;
                }
                evaluated += 1;
                let (a, b) = (&entries[i], &entries[j]);
                if a.likelihood <= 0.0 && b.likelihood <= 0.0 {
                    saw_zero = true;
                    continue;
                }
                let Some((p, v)) = pair(m, a, b) else { continue };
                if !v.is_finite() {
                    saw_zero = true;
                    continue;
                }
                feasible += 1;
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    let w = if i == j {
                        PriorMixture::dirac(a.measure.clone())
                    } else {
                        PriorMixture::new(vec![(p, a.measure.clone()), (1.0 - p, b.measure.clone())])?
                    };
                    best = Some((v, w));
                }
            }
        }
    }
    match best {
        Some((v, witness)) => {
            let best_value = if let QuantityOfInterest::Constant { c } = phi { *c } else { v };
            Ok(OracleResult { best_value, witness, evaluated, feasible })
        }
        None if saw_zero => Err(Error::AllCandidatesZeroEvidence),
        None => Err(Error::NoFeasibleCandidate),
    }
}

/// Best prior value of `Φ` found within `budget` pair evaluations; never above `U(Π)`.
pub fn oracle_prior_bound(class: &PriorClass, phi: &QuantityOfInterest, budget: usize, seed: u64) -> Result<OracleResult> {
    search(class, phi, None, budget, seed)
}

/// Best posterior value found; candidates giving the data zero probability are skipped.
pub fn oracle_posterior_bound(
    class: &PriorClass,
    phi: &QuantityOfInterest,
    obs: &Observation,
    budget: usize,
    seed: u64,
) -> Result<OracleResult> {
    search(class, phi, Some(obs), budget, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::likelihood_band_limit;

    fn tail() -> QuantityOfInterest {
        QuantityOfInterest::TailMass { a: 0.75 }
    }

    #[test]
    fn mean_constraint_prior_reaches_half() {
        let r = oracle_prior_bound(&PriorClass::MeanConstraint { m: 0.375 }, &tail(), 100_000, 0).unwrap();
        assert!(r.best_value >= 0.49 && r.best_value <= 0.5 + 1e-12, "{}", r.best_value);
        assert!((r.witness.mean_of_means() - 0.375).abs() <= CONSTRAINT_TOL);
    }

    #[test]
    fn constant_and_infeasible() {
        let c = QuantityOfInterest::Constant { c: 0.25 };
        assert_eq!(oracle_prior_bound(&PriorClass::MeanConstraint { m: 0.4 }, &c, 1000, 1).unwrap().best_value, 0.25);
        let r = oracle_prior_bound(&PriorClass::MeanConstraint { m: 1.5 }, &tail(), 1000, 1);
        assert!(matches!(r, Err(Error::NoFeasibleCandidate)));
        assert!(matches!(oracle_prior_bound(&PriorClass::MeanConstraint { m: 0.4 }, &c, 10, 1), Err(Error::InvalidBudget(10))));
    }

    #[test]
    fn band_posterior_below_limit() {
        let obs = Observation::new(&[0.8], 1e-3).unwrap();
        let class = PriorClass::LikelihoodBand { m: 0.375, alpha: 2.0, obs: obs.clone() };
        let r = oracle_posterior_bound(&class, &tail(), &obs, 20_000, 0).unwrap();
        let limit = likelihood_band_limit(2.0, 0.75, 0.375);
        assert!(r.best_value <= limit + 1e-3 && r.best_value >= limit - 2e-2, "{}", r.best_value);
        assert!(class.admits_prior(&r.witness));
    }

    #[test]
    fn zero_evidence_everywhere() {
        // with epsilon = 0 only the base prior counts, and it misses the ball
        let base = PriorMixture::dirac(DiscreteMeasure::dirac(0.1).unwrap());
        let class = PriorClass::Contamination { base, epsilon: 0.0 };
        let obs = Observation::new(&[0.9], 0.01).unwrap();
        let r = oracle_posterior_bound(&class, &tail(), &obs, 1000, 0);
        assert!(matches!(r, Err(Error::AllCandidatesZeroEvidence)));
    }

    #[test]
    fn budgets_are_nested() {
        let class = PriorClass::MeanConstraint { m: 0.3 };
        let phi = QuantityOfInterest::Moment { j: 2 };
        let mut last = f64::NEG_INFINITY;
        for budget in [1000, 2000, 4000, 8000] {
            let v = oracle_prior_bound(&class, &phi, budget, 9).unwrap().best_value;
            assert!(v >= last - 1e-9);
            last = v;
        }
    }

    #[test]
    fn grid_order_is_a_spread_permutation() {
        let order = farthest_first(GRID_POINTS);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..GRID_POINTS).collect::<Vec<_>>());
        assert_eq!(&order[..3], &[0, 40, 20]);
    }
}
