//! The idealised BP Jacobian `M = (diag(pi) - pi pi^T) diag(gamma)`, its
//! spectral norm, the closed-form bound `1/2 max_j pi_j (1 + gamma_j^2)`, and
//! the per-pair quantities assembled from them: the aggregation constant `K`
//! and the availability-weighted marginal maximum checked against `K'/|D|`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::bp::{self, ColorDistribution};
use crate::error::{Error, ExperimentError, NormError};
use crate::oracle;
use crate::thresholds;
use crate::tree::{classify_children, AvailabilityProfile, BoundaryPair, VertexAddress};

/// Slack for norm-versus-bound comparisons.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Absolute slack for the aggregated distance inequalities.
pub const INEQUALITY_SLACK: f64 = 1e-9;
/// Relative residual at which power iteration stops.
pub const POWER_TOLERANCE: f64 = 1e-12;
pub const MAX_POWER_ITERATIONS: usize = 1_000;
/// Default number of points of the closed uniform grid on `[0, 1]`.
pub const DEFAULT_T_GRID: usize = 1001;
/// Largest grid tried when refining after a failed certificate.
pub const MAX_T_GRID: usize = 100_001;

/// `(diag(pi) - pi pi^T) diag(gamma)`.
pub fn gradient_matrix(pi_hat: &[f64], gamma_hat: &[f64]) -> DMatrix<f64> {
    let q = pi_hat.len();
    DMatrix::from_fn(q, q, |c, j| {
        let diag = if c == j { pi_hat[c] } else { 0.0 };
        (diag - pi_hat[c] * pi_hat[j]) * gamma_hat[j]
    })
}

/// `1/2 max_j pi_j (1 + gamma_j^2)`.
pub fn closed_form_bound(pi_hat: &[f64], gamma_hat: &[f64]) -> f64 {
    pi_hat
        .iter()
        .zip(gamma_hat)
        .map(|(p, g)| 0.5 * p * (1.0 + g * g))
        .fold(0.0, f64::max)
}

/// Largest singular value by power iteration on `M^T M`.
///
/// Starts from the normalised all-ones vector; if the iterate collapses (the
/// start lies in the kernel) it restarts once from a fixed ramp vector.
/// Convergence means a relative eigen-residual below [`POWER_TOLERANCE`].
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64, NormError> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(NormError::NonFinite);
    }
    let n = m.ncols();
    if n == 0 || m.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let gram = m.transpose() * m;
    let scale = gram.norm();
    let starts = [
        nalgebra::DVector::from_element(n, 1.0),
        nalgebra::DVector::from_fn(n, |k, _| (k + 1) as f64),
    ];
    for start in starts {
        let mut v = start.normalize();
        let mut w = &gram * &v;
        if w.norm() <= 1e-14 * scale {
            continue;
        }
        for _ in 0..MAX_POWER_ITERATIONS {
            v = w.normalize();
            w = &gram * &v;
            let rho = v.dot(&w);
            if rho <= 0.0 {
                break;
            }
            let residual = (&w - &v * rho).norm();
            if residual <= POWER_TOLERANCE * rho {
                return Ok(rho.sqrt());
            }
        }
        return Err(NormError::NonConvergence {
            iterations: MAX_POWER_ITERATIONS,
        });
    }
    Err(NormError::NonConvergence { iterations: 0 })
}

/// Largest singular value from a dense SVD.
pub fn spectral_norm_dense(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    PowerIteration,
    Dense,
}

/// Power iteration, falling back to the dense decomposition when it does not converge.
pub fn spectral_norm_with_fallback(m: &DMatrix<f64>) -> Result<(f64, NormMethod), NormError> {
    match spectral_norm(m) {
        Ok(norm) => Ok((norm, NormMethod::PowerIteration)),
        Err(NormError::NonConvergence { .. }) => Ok((spectral_norm_dense(m), NormMethod::Dense)),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobianBundle {
    pub pi_hat: ColorDistribution,
    pub gamma_hat: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub spectral_norm: f64,
    pub closed_form_bound: f64,
    pub method: NormMethod,
}

fn check_inputs(pi_hat: &ColorDistribution, gamma_hat: &[f64]) -> Result<(), NormError> {
    if pi_hat.q() != gamma_hat.len() {
        return Err(NormError::DimensionMismatch(pi_hat.q(), gamma_hat.len()));
    }
    if let Some(g) = gamma_hat.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(NormError::Domain(format!("gamma entry {g} outside [0, 1]")));
    }
    Ok(())
}

pub fn build_matrix(
    pi_hat: &ColorDistribution,
    gamma_hat: &[f64],
) -> Result<JacobianBundle, NormError> {
    check_inputs(pi_hat, gamma_hat)?;
    let matrix = gradient_matrix(pi_hat.probs(), gamma_hat);
    let (spectral_norm, method) = spectral_norm_with_fallback(&matrix)?;
    Ok(JacobianBundle {
        pi_hat: pi_hat.clone(),
        gamma_hat: gamma_hat.to_vec(),
        closed_form_bound: closed_form_bound(pi_hat.probs(), gamma_hat),
        matrix,
        spectral_norm,
        method,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormCheck {
    pub norm: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Compares `||M||_2` with the closed-form bound.
pub fn norm_bound_check(
    pi_hat: &ColorDistribution,
    gamma_hat: &[f64],
) -> Result<NormCheck, NormError> {
    let bundle = build_matrix(pi_hat, gamma_hat)?;
    Ok(NormCheck {
        norm: bundle.spectral_norm,
        bound: bundle.closed_form_bound,
        ok: bundle.spectral_norm <= bundle.closed_form_bound + NORM_TOLERANCE,
    })
}

/// Everything the per-pair quantities need: the children's subtree marginals
/// under both assignments, the root marginals, and the availability profile.
#[derive(Clone, Debug, PartialEq)]
pub struct PairAnalysis {
    pub q: usize,
    pub d: usize,
    pub profile: AvailabilityProfile,
    pub pi: ColorDistribution,
    pub pi_prime: ColorDistribution,
    pub children_eta: Vec<ColorDistribution>,
    pub children_eta_prime: Vec<ColorDistribution>,
}

impl PairAnalysis {
    /// Marginals from the BP engine.
    pub fn from_bp(pair: &BoundaryPair) -> Result<Self, Error> {
        let eta = pair.eta_instance();
        let eta_prime = pair.eta_prime_instance();
        Ok(PairAnalysis {
            q: pair.shape().q(),
            d: pair.shape().d(),
            profile: classify_children(&eta),
            pi: bp::root_marginal(&eta)?,
            pi_prime: bp::root_marginal(&eta_prime)?,
            children_eta: bp::child_marginals(&eta)?,
            children_eta_prime: bp::child_marginals(&eta_prime)?,
        })
    }

    /// Marginals from exact counting, rounded once to double precision.
    pub fn from_oracle(pair: &BoundaryPair, budget: usize) -> Result<Self, Error> {
        let eta = pair.eta_instance();
        let eta_prime = pair.eta_prime_instance();
        let exact_root = |inst| -> Result<ColorDistribution, Error> {
            Ok(ColorDistribution::from_normalized(
                oracle::exact_marginal(inst, budget)?.to_f64(),
            ))
        };
        let exact_children =
            |inst: &crate::tree::TreeInstance| -> Result<Vec<ColorDistribution>, Error> {
                let root = VertexAddress::root();
                inst.shape()
                    .children(&root)
                    .map(|c| {
                        Ok(ColorDistribution::from_normalized(
                            oracle::exact_subtree_marginal(inst, &c, budget)?.to_f64(),
                        ))
                    })
                    .collect()
            };
        Ok(PairAnalysis {
            q: pair.shape().q(),
            d: pair.shape().d(),
            profile: classify_children(&eta),
            pi: exact_root(&eta)?,
            pi_prime: exact_root(&eta_prime)?,
            children_eta: exact_children(&eta)?,
            children_eta_prime: exact_children(&eta_prime)?,
        })
    }

    pub fn root_gap(&self) -> f64 {
        self.pi.sq_dist(&self.pi_prime)
    }

    pub fn child_gaps(&self) -> Vec<f64> {
        self.children_eta
            .iter()
            .zip(&self.children_eta_prime)
            .map(|(a, b)| a.sq_dist(b))
            .collect()
    }

    /// Root marginal along the segment between the two child tuples.
    pub fn pi_hat(&self, t: f64) -> Result<ColorDistribution, Error> {
        Ok(bp::interpolation_point(t, &self.children_eta, &self.children_eta_prime)?.pi_hat)
    }
}

fn grid_points(t_grid: usize) -> Result<Vec<f64>, Error> {
    if t_grid < 2 {
        return Err(ExperimentError::Precondition(format!("t grid of {t_grid} points")).into());
    }
    Ok((0..t_grid)
        .map(|k| k as f64 / (t_grid - 1) as f64)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContractionConstant {
    /// `max_t ||M(pi_hat(t), sqrt(gamma))||_2 / (1 - 1/(q-d))` over the grid.
    pub k_grid: f64,
    /// The same with the norm replaced by its closed-form bound; an over-estimate.
    pub k_closed_form: f64,
    pub max_norm: f64,
    pub argmax_t: f64,
    pub t_grid: usize,
}

/// The aggregation constant `K` for a pair.
pub fn contraction_k(pair: &BoundaryPair, t_grid: usize) -> Result<ContractionConstant, Error> {
    check_contraction_preconditions(pair)?;
    contraction_k_from(&PairAnalysis::from_bp(pair)?, t_grid)
}

fn check_contraction_preconditions(pair: &BoundaryPair) -> Result<(), Error> {
    let (q, d) = (pair.shape().q(), pair.shape().d());
    if q < d + 2 {
        return Err(ExperimentError::Precondition(format!("q = {q} < d + 2 = {}", d + 2)).into());
    }
    if !pair.root_distance().at_least(3) {
        return Err(ExperimentError::Precondition(format!(
            "disagreements at distance {} < 3",
            pair.root_distance()
        ))
        .into());
    }
    Ok(())
}

pub fn contraction_k_from(
    analysis: &PairAnalysis,
    t_grid: usize,
) -> Result<ContractionConstant, Error> {
    let ts = grid_points(t_grid)?;
    let sqrt_gamma = analysis.profile.gamma_sqrt();
    let gamma = analysis.profile.gamma();
    let samples = ts
        .par_iter()
        .map(|&t| -> Result<(f64, f64), Error> {
            let pi_hat = analysis.pi_hat(t)?;
            let m = gradient_matrix(pi_hat.probs(), &sqrt_gamma);
            let (norm, _) = spectral_norm_with_fallback(&m)?;
            Ok((norm, closed_form_bound(pi_hat.probs(), &gamma)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (mut max_norm, mut argmax_t, mut max_bound) = (0.0, 0.0, 0.0);
    for (&t, &(norm, bound)) in ts.iter().zip(&samples) {
        if norm > max_norm {
            max_norm = norm;
            argmax_t = t;
        }
        max_bound = f64::max(max_bound, bound);
    }
    let factor = 1.0 / (1.0 - 1.0 / (analysis.q - analysis.d) as f64);
    Ok(ContractionConstant {
        k_grid: factor * max_norm,
        k_closed_form: factor * max_bound,
        max_norm,
        argmax_t,
        t_grid,
    })
}

/// Both sides of `||pi - pi'||^2 <= |D| K^2 sum_i ||pi_i - pi'_i||^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AggregationCertificate {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub constant: ContractionConstant,
}

/// Evaluates the aggregation inequality with grid `K`, refining the grid
/// tenfold (up to [`MAX_T_GRID`]) while it fails, since a coarse grid
/// under-estimates the maximum over `t`.
pub fn aggregation_certificate(
    analysis: &PairAnalysis,
    t_grid: usize,
) -> Result<AggregationCertificate, Error> {
    let lhs = analysis.root_gap();
    let child_sum: f64 = analysis.child_gaps().iter().sum();
    let size = analysis.profile.size() as f64;
    let mut grid = t_grid;
    loop {
        let constant = contraction_k_from(analysis, grid)?;
        let rhs = size * constant.k_grid * constant.k_grid * child_sum;
        let holds = lhs <= rhs + INEQUALITY_SLACK;
        if holds || grid >= MAX_T_GRID {
            return Ok(AggregationCertificate {
                lhs,
                rhs,
                holds,
                constant,
            });
        }
        grid = ((grid - 1) * 10 + 1).min(MAX_T_GRID);
    }
}

/// Largest `1/2 pi_hat_k(t) (1 + gamma_k)` against the budget `K'/|D|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AvailabilityMaximum {
    pub max_value: f64,
    pub budget: f64,
    pub below_budget: bool,
    pub argmax_t: f64,
    pub argmax_color: usize,
}

pub fn availability_maximum(
    pair: &BoundaryPair,
    t_grid: usize,
) -> Result<AvailabilityMaximum, Error> {
    availability_maximum_from(&PairAnalysis::from_bp(pair)?, t_grid)
}

pub fn availability_maximum_from(
    analysis: &PairAnalysis,
    t_grid: usize,
) -> Result<AvailabilityMaximum, Error> {
    let size = analysis.profile.size();
    if size == 0 {
        return Err(ExperimentError::Precondition("no non-frozen children".into()).into());
    }
    let gamma = analysis.profile.gamma();
    let k_prime = thresholds::pipeline(thresholds::DEFAULT_RATIO)
        .map_err(|e| ExperimentError::Precondition(e.to_string()))?
        .k_prime;
    let mut best = (0.0, 0.0, 0usize);
    for t in grid_points(t_grid)? {
        let pi_hat = analysis.pi_hat(t)?;
        for (k, (&p, &g)) in pi_hat.probs().iter().zip(&gamma).enumerate() {
            let value = 0.5 * p * (1.0 + g);
            if value > best.0 {
                best = (value, t, k);
            }
        }
    }
    let budget = k_prime / size as f64;
    Ok(AvailabilityMaximum {
        max_value: best.0,
        budget,
        below_budget: best.0 < budget,
        argmax_t: best.1,
        argmax_color: best.2,
    })
}

fn check_lower_bound_domain(q: usize, d: usize) -> Result<(), NormError> {
    if q <= d {
        return Err(NormError::Domain(format!("q = {q} must exceed d = {d}")));
    }
    Ok(())
}

/// Lower bound on the root marginal of any available color:
/// `(1 - 1/(q-d))^d / (d + (q-d)(1 - 1/(q-d))^d)`.
pub fn marginal_lower_bound(q: usize, d: usize) -> Result<f64, NormError> {
    check_lower_bound_domain(q, d)?;
    let base = (1.0 - 1.0 / (q - d) as f64).powi(d as i32);
    Ok(base / (d as f64 + (q - d) as f64 * base))
}

/// [`marginal_lower_bound`] in exact rational arithmetic.
pub fn marginal_lower_bound_exact(q: usize, d: usize) -> Result<BigRational, NormError> {
    check_lower_bound_domain(q, d)?;
    let gap = BigInt::from(q - d);
    let one = BigRational::one();
    let ratio = &one - BigRational::new(BigInt::one(), gap.clone());
    let mut base = one;
    for _ in 0..d {
        base *= &ratio;
    }
    let denominator =
        BigRational::from_integer(BigInt::from(d)) + BigRational::from_integer(gap) * &base;
    if base.is_zero() {
        return Ok(base);
    }
    Ok(base / denominator)
}
