//! Seeded verification suites shared by `selftest`, the examples and the
//! acceptance target. Each suite returns a serializable summary with the
//! worst case it saw and a single `passed` flag.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bp::{self, ColorDistribution};
use crate::error::Error;
use crate::experiments::{self, trial_rng};
use crate::jacobian::{self, NORM_TOLERANCE};
use crate::oracle;
use crate::tree::{BoundaryPair, TreeShape};

/// Agreement required between the engine and exact counting.
pub const ORACLE_TOLERANCE: f64 = 1e-12;
/// Agreement required between analytic and finite-difference derivatives.
pub const FD_TOLERANCE: f64 = 1e-6;
/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;

/// A random probability vector; about a third of the draws zero out some entries.
pub fn random_distribution<R: Rng>(q: usize, rng: &mut R) -> ColorDistribution {
    let sparse = rng.gen_bool(1.0 / 3.0);
    let mut w: Vec<f64> = (0..q)
        .map(|_| {
            if sparse && rng.gen_bool(0.4) {
                0.0
            } else {
                -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln()
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..q)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    ColorDistribution::new(w.into_iter().map(|x| x / total).collect()).expect("normalized weights")
}

/// A random `gamma_hat` in `[0, 1]^q`, sometimes snapped to a `1/k` lattice.
pub fn random_gamma_hat<R: Rng>(q: usize, rng: &mut R) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        (0..q).map(|_| rng.gen::<f64>()).collect()
    } else {
        let k = rng.gen_range(1..=4usize);
        (0..q)
            .map(|_| (rng.gen_range(0..=k) as f64 / k as f64).sqrt())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormSuiteRow {
    pub q: usize,
    pub samples: usize,
    pub violations: usize,
    /// Largest `norm - bound` seen.
    pub worst_excess: f64,
    /// `| ||M|| - bound |` at the uniform distribution with `gamma_hat = 1`.
    pub uniform_gap: f64,
    pub passed: bool,
}

/// Random `(pi_hat, gamma_hat)` pairs checked against the closed-form norm bound.
pub fn norm_suite(qs: &[usize], samples: usize, seed: u64) -> Result<Vec<NormSuiteRow>, Error> {
    qs.iter()
        .map(|&q| {
            let outcomes = (0..samples)
                .into_par_iter()
                .map(|k| {
                    let mut rng = trial_rng(seed ^ ((q as u64) << 32), k as u64);
                    let pi = random_distribution(q, &mut rng);
                    let gamma = random_gamma_hat(q, &mut rng);
                    jacobian::norm_bound_check(&pi, &gamma)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let violations = outcomes.iter().filter(|c| !c.ok).count();
            let worst_excess = outcomes
                .iter()
                .map(|c| c.norm - c.bound)
                .fold(f64::NEG_INFINITY, f64::max);
            let uniform =
                jacobian::norm_bound_check(&ColorDistribution::uniform(q), &vec![1.0; q])?;
            let uniform_gap = (uniform.norm - uniform.bound).abs();
            Ok(NormSuiteRow {
                q,
                samples,
                violations,
                worst_excess,
                uniform_gap,
                passed: violations == 0 && uniform_gap <= NORM_TOLERANCE,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteSummary {
    fn from_worst(cases: usize, worst: f64, tolerance: f64) -> Self {
        SuiteSummary {
            cases,
            worst,
            tolerance,
            passed: worst <= tolerance,
        }
    }
}

/// Analytic partial derivatives against central differences of the raw
/// recursion at random interior points.
pub fn jacobian_fd_suite(points: usize, seed: u64) -> Result<SuiteSummary, Error> {
    let worst = (0..points)
        .into_par_iter()
        .map(|k| -> Result<f64, Error> {
            let mut rng = trial_rng(seed, k as u64);
            let q = rng.gen_range(3..=6usize);
            let children = rng.gen_range(1..=3usize);
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<ColorDistribution> {
                (0..children)
                    .map(|_| {
                        let w: Vec<f64> = (0..q).map(|_| 0.05 + rng.gen::<f64>()).collect();
                        let s: f64 = w.iter().sum();
                        ColorDistribution::new(w.iter().map(|x| x / s).collect())
                            .expect("normalized")
                    })
                    .collect()
            };
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            let t = rng.gen::<f64>();
            let point = bp::interpolation_point(t, &a, &b)?;
            let jac = bp::bp_jacobian(&point)?;
            let mut worst: f64 = 0.0;
            for i in 0..children {
                for j in 0..q {
                    let eval = |delta: f64| -> Result<ColorDistribution, Error> {
                        let mut z = point.z.clone();
                        z[i][j] += delta;
                        let raw: Vec<&[f64]> = z.iter().map(Vec::as_slice).collect();
                        Ok(bp::bp_step_raw(&raw, q)?)
                    };
                    let (plus, minus) = (eval(FD_STEP)?, eval(-FD_STEP)?);
                    for c in 0..q {
                        let fd = (plus.get(c) - minus.get(c)) / (2.0 * FD_STEP);
                        let analytic = jac.get(c, i, j).expect("child requested");
                        worst = worst.max((analytic - fd).abs());
                    }
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(SuiteSummary::from_worst(points, worst, FD_TOLERANCE))
}

/// Engine root marginals against exact rational marginals on random
/// extendible instances with `q` in 3..=6 and `d, h` in 1..=3.
pub fn oracle_equivalence_suite(instances: usize, seed: u64) -> Result<SuiteSummary, Error> {
    const DENSITIES: [f64; 3] = [0.1, 0.3, 0.5];
    let worst = (0..instances)
        .into_par_iter()
        .map(|k| -> Result<f64, Error> {
            let mut rng = trial_rng(seed, k as u64);
            let q = 3 + k % 4;
            let d = 1 + (k / 4) % 3;
            let h = 1 + (k / 12) % 3;
            let shape = TreeShape::new(q, d, h)?;
            let density = DENSITIES[(k / 36) % DENSITIES.len()];
            let instance = experiments::random_extendible_instance(
                &shape,
                density,
                &mut rng,
                oracle::DEFAULT_STATE_BUDGET,
            )?;
            let engine = bp::root_marginal(&instance)?;
            let exact = oracle::exact_marginal(&instance, oracle::DEFAULT_STATE_BUDGET)?;
            Ok(engine.max_abs_diff(&exact.to_f64()))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(SuiteSummary::from_worst(instances, worst, ORACLE_TOLERANCE))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairSuiteSummary {
    pub pairs: usize,
    pub checked: usize,
    pub failures: usize,
    /// Smallest `rhs - lhs` (certificate) or smallest available marginal (lower bound).
    pub worst: f64,
    pub passed: bool,
}

/// The aggregation certificate on every pair with `q >= d + 2`, using exact marginals.
pub fn certificate_suite(pairs: &[BoundaryPair], t_grid: usize) -> Result<PairSuiteSummary, Error> {
    let results = pairs
        .par_iter()
        .filter(|p| p.shape().q() >= p.shape().d() + 2 && p.root_distance().at_least(3))
        .map(|pair| -> Result<(bool, f64), Error> {
            let analysis = jacobian::PairAnalysis::from_oracle(pair, oracle::DEFAULT_STATE_BUDGET)?;
            if analysis.profile.non_frozen().is_empty() {
                return Ok((true, f64::INFINITY));
            }
            let cert = jacobian::aggregation_certificate(&analysis, t_grid)?;
            Ok((cert.holds, cert.rhs - cert.lhs))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let failures = results.iter().filter(|r| !r.0).count();
    Ok(PairSuiteSummary {
        pairs: pairs.len(),
        checked: results.len(),
        failures,
        worst: results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        passed: failures == 0 && !results.is_empty(),
    })
}

/// The exact marginal lower bound at the root, under both assignments of
/// every pair with `q >= d + 1`.
pub fn lower_bound_suite(pairs: &[BoundaryPair]) -> Result<PairSuiteSummary, Error> {
    let results = pairs
        .par_iter()
        .filter(|p| p.shape().q() > p.shape().d())
        .flat_map_iter(|p| [p.eta_instance(), p.eta_prime_instance()])
        .map(|inst| experiments::lower_bound_check(&inst, oracle::DEFAULT_STATE_BUDGET))
        .collect::<Result<Vec<_>, _>>()?;
    let failures = results.iter().filter(|r| !r.1).count();
    Ok(PairSuiteSummary {
        pairs: pairs.len(),
        checked: results.len(),
        failures,
        worst: results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
        passed: failures == 0 && !results.is_empty(),
    })
}
