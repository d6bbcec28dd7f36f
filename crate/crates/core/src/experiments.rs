//! Desk-scale measurements: boundary-pair generation, one-level contraction
//! trials, decay of the root gap with the distance to the disagreements, and
//! the subtree-completion check.
//!
//! Every randomized routine takes an explicit seed. Trial `k` draws from its
//! own ChaCha stream `k`, so results do not depend on the thread count, and
//! all aggregation happens in trial order after the parallel map.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp;
use crate::error::{Error, ExperimentError};
use crate::jacobian::{self, PairAnalysis};
use crate::oracle;
use crate::thresholds::{self, ConstantPipeline};
use crate::tree::{
    blocked_agreement_check, Boundary, BoundaryPair, Color, TreeInstance, TreeShape, VertexAddress,
};

/// Rejection-sampling cap per generated pair.
pub const MAX_ATTEMPTS: usize = 10_000;
/// Probability that a vertex at depth >= 3 is frozen in the frozen-ring style.
pub const RING_DENSITY: f64 = 0.15;
/// Equality tolerance for the subtree-completion check.
pub const COMPLETION_TOLERANCE: f64 = 1e-12;

/// Deterministic RNG for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairStyle {
    /// Independent uniform colors on one full level under each assignment.
    Random,
    /// One level colored monochromatically, recolored by a transposition.
    AdversarialLeaves,
    /// `Random`, plus identical agreements on a random set of vertices at depth >= 3.
    FrozenRing,
}

impl PairStyle {
    pub const ALL: [PairStyle; 3] = [
        PairStyle::Random,
        PairStyle::AdversarialLeaves,
        PairStyle::FrozenRing,
    ];
}

impl fmt::Display for PairStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairStyle::Random => "random",
            PairStyle::AdversarialLeaves => "adversarial-leaves",
            PairStyle::FrozenRing => "frozen-ring",
        })
    }
}

impl FromStr for PairStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(PairStyle::Random),
            "adversarial-leaves" => Ok(PairStyle::AdversarialLeaves),
            "frozen-ring" => Ok(PairStyle::FrozenRing),
            other => Err(format!("unknown pair style {other:?}")),
        }
    }
}

/// What to generate: tree parameters, the depth of the disagreements, and a style.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRequest {
    pub q: usize,
    pub d: usize,
    pub h: usize,
    pub depth: usize,
    pub style: PairStyle,
    /// Give the root one extra child (the (d+1)-regular tree's root).
    #[serde(default)]
    pub extra_root_child: bool,
}

impl PairRequest {
    pub fn shape(&self) -> Result<TreeShape, Error> {
        let shape = TreeShape::new(self.q, self.d, self.h)?;
        Ok(if self.extra_root_child {
            shape.with_root_degree(self.d + 1)?
        } else {
            shape
        })
    }
}

fn vertices_at_depth(shape: &TreeShape, depth: usize) -> Vec<VertexAddress> {
    let mut level = vec![VertexAddress::root()];
    for _ in 0..depth {
        level = level
            .iter()
            .flat_map(|v| shape.children(v).collect::<Vec<_>>())
            .collect();
    }
    level
}

fn different_color<R: Rng>(rng: &mut R, q: usize, avoid: Color) -> Color {
    (avoid + 1 + rng.gen_range(0..q - 1)) % q
}

fn draw_candidate<R: Rng>(
    request: &PairRequest,
    shape: &TreeShape,
    level: &[VertexAddress],
    rng: &mut R,
) -> (Boundary, Boundary) {
    let q = request.q;
    let mut eta = Boundary::new();
    let mut eta_prime = Boundary::new();
    match request.style {
        PairStyle::AdversarialLeaves => {
            let a = rng.gen_range(0..q);
            let b = different_color(rng, q, a);
            for v in level {
                eta.insert(v.clone(), a);
                eta_prime.insert(v.clone(), b);
            }
        }
        PairStyle::Random | PairStyle::FrozenRing => {
            for v in level {
                eta.insert(v.clone(), rng.gen_range(0..q));
                eta_prime.insert(v.clone(), rng.gen_range(0..q));
            }
            if eta == eta_prime {
                let v = &level[rng.gen_range(0..level.len())];
                let c = eta.get(v).expect("level vertex");
                eta_prime.insert(v.clone(), different_color(rng, q, c));
            }
            if request.style == PairStyle::FrozenRing {
                let mut stack = vec![VertexAddress::root()];
                while let Some(v) = stack.pop() {
                    stack.extend(shape.children(&v));
                    if v.depth() >= 3 && v.depth() != request.depth && rng.gen_bool(RING_DENSITY) {
                        let c = rng.gen_range(0..q);
                        eta.insert(v.clone(), c);
                        eta_prime.insert(v, c);
                    }
                }
            }
        }
    }
    (eta, eta_prime)
}

/// Extendible with a root whose color is not forced.
fn acceptable(instance: &TreeInstance, budget: usize) -> Result<bool, Error> {
    let counts = oracle::root_counts(instance, budget)?;
    Ok(counts.iter().filter(|n| !n.is_zero()).count() >= 2)
}

/// Draws a pair whose disagreements all sit at `request.depth`, rejecting
/// candidates until both assignments are extendible and leave the root
/// more than one possible color.
pub fn generate_boundary_pair<R: Rng>(
    request: &PairRequest,
    rng: &mut R,
    budget: usize,
) -> Result<BoundaryPair, Error> {
    if request.depth == 0 || request.depth > request.h {
        return Err(ExperimentError::Precondition(format!(
            "disagreement depth {} outside 1..={}",
            request.depth, request.h
        ))
        .into());
    }
    let shape = request.shape()?;
    let level = vertices_at_depth(&shape, request.depth);
    for attempt in 1..=MAX_ATTEMPTS {
        let (eta, eta_prime) = draw_candidate(request, &shape, &level, rng);
        let pair = BoundaryPair::new(shape.clone(), eta, eta_prime)?;
        if acceptable(&pair.eta_instance(), budget)?
            && acceptable(&pair.eta_prime_instance(), budget)?
        {
            return Ok(pair);
        }
        if attempt == MAX_ATTEMPTS {
            break;
        }
    }
    Err(ExperimentError::GenerationFailure {
        attempts: MAX_ATTEMPTS,
        acceptance_rate: 0.0,
    }
    .into())
}

/// A random extendible instance: each non-root vertex is frozen with
/// probability `density` to a uniform color.
pub fn random_extendible_instance<R: Rng>(
    shape: &TreeShape,
    density: f64,
    rng: &mut R,
    budget: usize,
) -> Result<TreeInstance, Error> {
    for _ in 0..MAX_ATTEMPTS {
        let mut boundary = Boundary::new();
        let mut stack = vec![VertexAddress::root()];
        while let Some(v) = stack.pop() {
            stack.extend(shape.children(&v));
            if !v.is_root() && rng.gen_bool(density) {
                boundary.insert(v, rng.gen_range(0..shape.q()));
            }
        }
        let instance = TreeInstance::new(shape.clone(), boundary)?;
        if oracle::is_extendible(&instance, budget)? {
            return Ok(instance);
        }
    }
    Err(ExperimentError::GenerationFailure {
        attempts: MAX_ATTEMPTS,
        acceptance_rate: 0.0,
    }
    .into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub t_grid: usize,
    /// Cross-check marginals against exact counting under this state budget.
    pub oracle_budget: Option<usize>,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions {
            t_grid: jacobian::DEFAULT_T_GRID,
            oracle_budget: Some(oracle::DEFAULT_STATE_BUDGET),
        }
    }
}

/// One contraction measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionRow {
    pub trial: usize,
    pub style: Option<PairStyle>,
    pub depth: usize,
    pub non_frozen: usize,
    pub root_gap: f64,
    pub child_gaps: Vec<f64>,
    pub max_child_gap: f64,
    /// `root_gap / max_child_gap`; absent when every child gap is zero.
    pub ratio: Option<f64>,
    pub blocked_agreement: bool,
    pub frozen_children_identical: bool,
    pub k_grid: Option<f64>,
    pub k_closed_form: Option<f64>,
    pub certificate_lhs: Option<f64>,
    pub certificate_rhs: Option<f64>,
    pub certificate_holds: Option<bool>,
    /// Largest |BP - exact| over the root and child marginals.
    pub oracle_delta: Option<f64>,
}

fn max_marginal_delta(a: &PairAnalysis, b: &PairAnalysis) -> f64 {
    let mut delta =
        a.pi.max_abs_diff(b.pi.probs())
            .max(a.pi_prime.max_abs_diff(b.pi_prime.probs()));
    for (x, y) in a.children_eta.iter().zip(&b.children_eta) {
        delta = delta.max(x.max_abs_diff(y.probs()));
    }
    for (x, y) in a.children_eta_prime.iter().zip(&b.children_eta_prime) {
        delta = delta.max(x.max_abs_diff(y.probs()));
    }
    delta
}

/// Measures `||pi - pi'||^2` against the children's gaps for one pair and
/// evaluates the aggregation certificate when `q >= d + 2`. The certificate
/// uses exact marginals when an oracle budget is given.
pub fn contraction_trial(
    pair: &BoundaryPair,
    options: &TrialOptions,
) -> Result<ContractionRow, Error> {
    let depth = match pair.root_distance().finite() {
        Some(n) if n >= 3 => n,
        Some(n) => {
            return Err(
                ExperimentError::Precondition(format!("disagreements at distance {n} < 3")).into(),
            )
        }
        None => pair.shape().h() + 1,
    };
    let blocked_agreement = blocked_agreement_check(pair)?;
    let analysis = PairAnalysis::from_bp(pair)?;
    let exact = match options.oracle_budget {
        Some(budget) => Some(PairAnalysis::from_oracle(pair, budget)?),
        None => None,
    };
    let oracle_delta = exact.as_ref().map(|e| max_marginal_delta(&analysis, e));

    let root_gap = analysis.root_gap();
    let child_gaps = analysis.child_gaps();
    let max_child_gap = child_gaps.iter().copied().fold(0.0, f64::max);
    let ratio = (max_child_gap > 0.0).then(|| root_gap / max_child_gap);
    let non_frozen = analysis.profile.non_frozen();
    let frozen_children_identical = child_gaps
        .iter()
        .enumerate()
        .all(|(i, &g)| non_frozen.contains(&i) || g == 0.0);

    let (q, d) = (pair.shape().q(), pair.shape().d());
    let certificate = if q >= d + 2 && !non_frozen.is_empty() {
        Some(jacobian::aggregation_certificate(
            exact.as_ref().unwrap_or(&analysis),
            options.t_grid,
        )?)
    } else {
        None
    };

    Ok(ContractionRow {
        trial: 0,
        style: None,
        depth,
        non_frozen: non_frozen.len(),
        root_gap,
        child_gaps,
        max_child_gap,
        ratio,
        blocked_agreement,
        frozen_children_identical,
        k_grid: certificate.map(|c| c.constant.k_grid),
        k_closed_form: certificate.map(|c| c.constant.k_closed_form),
        certificate_lhs: certificate.map(|c| c.lhs),
        certificate_rhs: certificate.map(|c| c.rhs),
        certificate_holds: certificate.map(|c| c.holds),
        oracle_delta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionConfig {
    pub q: usize,
    pub d: usize,
    pub h: usize,
    pub trials: usize,
    pub styles: Vec<PairStyle>,
    /// Disagreement depths to cycle through; defaults to `3..=h`.
    pub depths: Vec<usize>,
    pub seed: u64,
    pub t_grid: usize,
    pub oracle_budget: Option<usize>,
    #[serde(default)]
    pub extra_root_child: bool,
}

impl ContractionConfig {
    pub fn new(q: usize, d: usize, h: usize, trials: usize, seed: u64) -> Self {
        ContractionConfig {
            q,
            d,
            h,
            trials,
            styles: PairStyle::ALL.to_vec(),
            depths: (3..=h).collect(),
            seed,
            t_grid: jacobian::DEFAULT_T_GRID,
            oracle_budget: Some(oracle::DEFAULT_STATE_BUDGET),
            extra_root_child: false,
        }
    }

    /// Style and depth of trial `k`: styles vary fastest.
    fn plan(&self, k: usize) -> (PairStyle, usize) {
        let style = self.styles[k % self.styles.len()];
        let depth = self.depths[(k / self.styles.len()) % self.depths.len()];
        (style, depth)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionSummary {
    pub trials: usize,
    pub defined_ratios: usize,
    pub max_ratio: Option<f64>,
    pub median_ratio: Option<f64>,
    pub p90_ratio: Option<f64>,
    pub p99_ratio: Option<f64>,
    pub all_ratios_below_one: bool,
    pub all_certificates_hold: bool,
    pub all_blocked_agreement: bool,
    pub max_oracle_delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub schema: String,
    pub config: ContractionConfig,
    pub rows: Vec<ContractionRow>,
    pub summary: ContractionSummary,
}

pub const CONTRACTION_SCHEMA: &str = "ssm-colorings/contraction/v1";
pub const DECAY_SCHEMA: &str = "ssm-colorings/decay/v1";

/// Nearest-rank quantile of a sorted slice.
fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

fn summarize(rows: &[ContractionRow]) -> ContractionSummary {
    let mut ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    ContractionSummary {
        trials: rows.len(),
        defined_ratios: ratios.len(),
        max_ratio: ratios.last().copied(),
        median_ratio: quantile(&ratios, 0.5),
        p90_ratio: quantile(&ratios, 0.9),
        p99_ratio: quantile(&ratios, 0.99),
        all_ratios_below_one: ratios.iter().all(|&r| r < 1.0),
        all_certificates_hold: rows.iter().all(|r| r.certificate_holds != Some(false)),
        all_blocked_agreement: rows.iter().all(|r| r.blocked_agreement),
        max_oracle_delta: rows.iter().filter_map(|r| r.oracle_delta).reduce(f64::max),
    }
}

/// Runs `config.trials` independent contraction trials.
pub fn run_contraction(config: &ContractionConfig) -> Result<ContractionReport, Error> {
    if config.trials == 0 || config.styles.is_empty() || config.depths.is_empty() {
        return Err(ExperimentError::Precondition("need trials, styles and depths".into()).into());
    }
    if let Some(&bad) = config.depths.iter().find(|&&l| l < 3 || l > config.h) {
        return Err(
            ExperimentError::Precondition(format!("depth {bad} outside 3..={}", config.h)).into(),
        );
    }
    let budget = config.oracle_budget.unwrap_or(oracle::DEFAULT_STATE_BUDGET);
    let options = TrialOptions {
        t_grid: config.t_grid,
        oracle_budget: config.oracle_budget,
    };
    let rows = (0..config.trials)
        .into_par_iter()
        .map(|k| -> Result<ContractionRow, Error> {
            let (style, depth) = config.plan(k);
            let request = PairRequest {
                q: config.q,
                d: config.d,
                h: config.h,
                depth,
                style,
                extra_root_child: config.extra_root_child,
            };
            let mut rng = trial_rng(config.seed, k as u64);
            let pair = generate_boundary_pair(&request, &mut rng, budget)?;
            let mut row = contraction_trial(&pair, &options)?;
            row.trial = k;
            row.style = Some(style);
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ContractionReport {
        schema: CONTRACTION_SCHEMA.to_string(),
        config: config.clone(),
        summary: summarize(&rows),
        rows,
    })
}

/// Smallest `q` in the range at which every trial's ratio is below one.
pub fn smallest_contracting_q(
    d: usize,
    h: usize,
    q_range: std::ops::RangeInclusive<usize>,
    trials: usize,
    seed: u64,
) -> Result<Option<usize>, Error> {
    for q in q_range {
        if q < d + 2 {
            continue;
        }
        let mut config = ContractionConfig::new(q, d, h, trials, seed);
        config.oracle_budget = None;
        if run_contraction(&config)?.summary.all_ratios_below_one {
            return Ok(Some(q));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub q: usize,
    pub d: usize,
    pub h: usize,
    pub trials_per_level: usize,
    pub styles: Vec<PairStyle>,
    pub seed: u64,
    #[serde(default)]
    pub extra_root_child: bool,
    pub budget: usize,
}

impl DecayConfig {
    pub fn new(q: usize, d: usize, h: usize, trials_per_level: usize, seed: u64) -> Self {
        DecayConfig {
            q,
            d,
            h,
            trials_per_level,
            styles: PairStyle::ALL.to_vec(),
            seed,
            extra_root_child: false,
            budget: oracle::DEFAULT_STATE_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayLevel {
    pub level: usize,
    pub max_gap: f64,
    pub trials: usize,
    pub failures: usize,
    pub zeta: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares fit of `ln y` against `x` over points with `y > 0`.
pub fn log_linear_fit(points: &[(f64, f64)]) -> Option<LogLinearFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, y)| *y > 0.0)
        .map(|&(x, y)| (x, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some(LogLinearFit {
        slope,
        intercept,
        r_squared,
        points: pts.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCurve {
    pub schema: String,
    pub config: DecayConfig,
    pub levels: Vec<DecayLevel>,
    /// Fit over levels >= 2.
    pub fit: Option<LogLinearFit>,
    pub pipeline: Option<ConstantPipeline>,
}

impl DecayCurve {
    /// Max gaps strictly decreasing over levels >= `from`.
    pub fn strictly_decreasing_from(&self, from: usize) -> bool {
        let gaps: Vec<f64> = self
            .levels
            .iter()
            .filter(|l| l.level >= from)
            .map(|l| l.max_gap)
            .collect();
        gaps.windows(2).all(|w| w[1] < w[0])
    }
}

/// Maximum root gap per disagreement depth `1..=h`. Depth 0 would put the
/// root itself in the boundary and is excluded.
pub fn decay_sweep(config: &DecayConfig) -> Result<DecayCurve, Error> {
    if config.trials_per_level == 0 || config.styles.is_empty() {
        return Err(ExperimentError::Precondition("need trials and styles".into()).into());
    }
    let shape = PairRequest {
        q: config.q,
        d: config.d,
        h: config.h,
        depth: 1,
        style: PairStyle::Random,
        extra_root_child: config.extra_root_child,
    }
    .shape()?;
    if shape
        .vertex_count_capped(config.budget / config.q)
        .is_none()
    {
        return Err(crate::error::OracleError::BudgetExceeded {
            budget: config.budget,
        }
        .into());
    }
    let effective_d = if config.extra_root_child {
        config.d + 1
    } else {
        config.d
    };
    let pipeline = thresholds::pipeline(config.q as f64 / effective_d as f64).ok();

    let per_level = config.trials_per_level;
    let outcomes: Vec<Result<f64, Error>> = (0..config.h * per_level)
        .into_par_iter()
        .map(|k| {
            let level = 1 + k / per_level;
            let request = PairRequest {
                q: config.q,
                d: config.d,
                h: config.h,
                depth: level,
                style: config.styles[k % config.styles.len()],
                extra_root_child: config.extra_root_child,
            };
            let mut rng = trial_rng(config.seed, k as u64);
            let pair = generate_boundary_pair(&request, &mut rng, config.budget)?;
            let pi = bp::root_marginal(&pair.eta_instance())?;
            let pi_prime = bp::root_marginal(&pair.eta_prime_instance())?;
            Ok(pi.sq_dist(&pi_prime))
        })
        .collect();

    let levels: Vec<DecayLevel> = outcomes
        .chunks(per_level)
        .enumerate()
        .map(|(k, chunk)| {
            let level = k + 1;
            let gaps: Vec<f64> = chunk
                .iter()
                .filter_map(|r| r.as_ref().ok().copied())
                .collect();
            let error = chunk
                .iter()
                .find_map(|r| r.as_ref().err().map(|e| e.to_string()));
            DecayLevel {
                level,
                max_gap: gaps.iter().copied().fold(0.0, f64::max),
                trials: gaps.len(),
                failures: chunk.len() - gaps.len(),
                zeta: pipeline.map(|p| p.zeta(level)),
                error,
            }
        })
        .collect();
    let tail: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| l.level >= 2 && l.trials > 0)
        .map(|l| (l.level as f64, l.max_gap))
        .collect();
    Ok(DecayCurve {
        schema: DECAY_SCHEMA.to_string(),
        config: config.clone(),
        fit: log_linear_fit(&tail),
        levels,
        pipeline,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompletionCheck {
    /// `||pi - pi'||_2` on the given (pruned) tree.
    pub pruned_distance: f64,
    /// The same on the completed tree.
    pub completed_distance: f64,
    /// The exact rational marginals coincide under both assignments.
    pub marginals_identical: bool,
    pub equal: bool,
}

/// Compares the root's marginal gap on a pruned tree with the gap on its
/// completion, where every added subtree is unconditioned.
pub fn subtree_completion_check(
    pair: &BoundaryPair,
    budget: usize,
) -> Result<CompletionCheck, Error> {
    let completed = pair.with_shape(pair.shape().completed())?;
    let exact = |inst: &TreeInstance| oracle::exact_marginal(inst, budget);
    let (a, a_prime) = (
        exact(&pair.eta_instance())?,
        exact(&pair.eta_prime_instance())?,
    );
    let (b, b_prime) = (
        exact(&completed.eta_instance())?,
        exact(&completed.eta_prime_instance())?,
    );
    let same = |x: &oracle::RationalMarginal, y: &oracle::RationalMarginal| {
        (0..x.q()).all(|c| x.prob(c) == y.prob(c))
    };
    let distance = |x: &oracle::RationalMarginal, y: &oracle::RationalMarginal| {
        x.to_f64()
            .iter()
            .zip(y.to_f64())
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    };
    let pruned_distance = distance(&a, &a_prime);
    let completed_distance = distance(&b, &b_prime);
    Ok(CompletionCheck {
        pruned_distance,
        completed_distance,
        marginals_identical: same(&a, &b) && same(&a_prime, &b_prime),
        equal: (pruned_distance - completed_distance).abs() <= COMPLETION_TOLERANCE,
    })
}

/// Checks every color available at the root against the exact lower bound.
/// Returns the smallest exact available marginal as a float and whether the
/// bound held for all of them.
pub fn lower_bound_check(instance: &TreeInstance, budget: usize) -> Result<(f64, bool), Error> {
    let (q, d) = (instance.q(), instance.shape().root_degree());
    let bound = jacobian::marginal_lower_bound_exact(q, d)?;
    let marginal = oracle::exact_marginal(instance, budget)?;
    let mut smallest = f64::INFINITY;
    let mut holds = true;
    for c in instance.available_colors(&VertexAddress::root()) {
        let p = marginal.prob(c);
        holds &= p >= bound;
        smallest = smallest.min(marginal.to_f64()[c]);
    }
    Ok((smallest, holds))
}

/// Tree parameters of the regression corpus, all with `q >= d + 2`.
pub const CORPUS_SHAPES: [(usize, usize, usize); 12] = [
    (4, 1, 3),
    (5, 1, 4),
    (4, 2, 3),
    (5, 2, 3),
    (6, 2, 3),
    (6, 2, 4),
    (7, 2, 4),
    (5, 3, 3),
    (6, 3, 3),
    (8, 3, 3),
    (8, 3, 4),
    (10, 3, 4),
];

pub const CORPUS_SEED: u64 = 0x55_4d_2d_63_6f_72_70;

/// A fixed set of pairs with disagreements at depth >= 3: every corpus shape,
/// style and depth, two draws each.
pub fn regression_corpus() -> Result<Vec<BoundaryPair>, Error> {
    let mut requests = Vec::new();
    for &(q, d, h) in &CORPUS_SHAPES {
        for depth in 3..=h {
            for style in PairStyle::ALL {
                for _ in 0..2 {
                    requests.push(PairRequest {
                        q,
                        d,
                        h,
                        depth,
                        style,
                        extra_root_child: false,
                    });
                }
            }
        }
    }
    requests
        .par_iter()
        .enumerate()
        .map(|(k, request)| {
            let mut rng = trial_rng(CORPUS_SEED, k as u64);
            generate_boundary_pair(request, &mut rng, oracle::DEFAULT_STATE_BUDGET)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Distance;

    const B: usize = oracle::DEFAULT_STATE_BUDGET;

    #[test]
    fn styles_round_trip_through_strings() {
        for style in PairStyle::ALL {
            assert_eq!(style.to_string().parse::<PairStyle>(), Ok(style));
        }
        assert!("nope".parse::<PairStyle>().is_err());
    }

    #[test]
    fn generated_pairs_have_disagreements_at_requested_depth() {
        for style in PairStyle::ALL {
            for depth in 1..=4 {
                let request = PairRequest {
                    q: 6,
                    d: 2,
                    h: 4,
                    depth,
                    style,
                    extra_root_child: false,
                };
                let mut rng = trial_rng(7, depth as u64);
                let pair = generate_boundary_pair(&request, &mut rng, B).unwrap();
                assert_eq!(pair.root_distance(), Distance::Finite(depth));
                assert!(oracle::is_extendible(&pair.eta_instance(), B).unwrap());
                assert!(oracle::is_extendible(&pair.eta_prime_instance(), B).unwrap());
                if depth >= 3 {
                    assert_eq!(blocked_agreement_check(&pair), Ok(true));
                }
            }
        }
    }

    #[test]
    fn two_colors_cannot_produce_pairs() {
        let request = PairRequest {
            q: 2,
            d: 2,
            h: 3,
            depth: 3,
            style: PairStyle::Random,
            extra_root_child: false,
        };
        let err = generate_boundary_pair(&request, &mut trial_rng(0, 0), B).unwrap_err();
        assert!(matches!(
            err,
            Error::Experiment(ExperimentError::GenerationFailure { .. })
        ));
    }

    #[test]
    fn identical_assignments_have_no_ratio() {
        let shape = TreeShape::new(6, 2, 3).unwrap();
        let b: Boundary = [("0.0.0".parse().unwrap(), 1), ("1.1".parse().unwrap(), 2)]
            .into_iter()
            .collect();
        let pair = BoundaryPair::new(shape, b.clone(), b).unwrap();
        let row = contraction_trial(&pair, &TrialOptions::default()).unwrap();
        assert_eq!(row.root_gap, 0.0);
        assert!(row.child_gaps.iter().all(|&g| g == 0.0));
        assert_eq!(row.ratio, None);
        assert_eq!(row.certificate_holds, Some(true));
    }

    #[test]
    fn trial_rejects_close_disagreements() {
        let shape = TreeShape::new(6, 2, 3).unwrap();
        let a: Boundary = [("0.1".parse().unwrap(), 1)].into_iter().collect();
        let b: Boundary = [("0.1".parse().unwrap(), 2)].into_iter().collect();
        let pair = BoundaryPair::new(shape, a, b).unwrap();
        assert!(contraction_trial(&pair, &TrialOptions::default()).is_err());
    }

    #[test]
    fn frozen_children_have_identical_marginals() {
        let shape = TreeShape::new(6, 2, 3).unwrap();
        let a: Boundary = [("0".parse().unwrap(), 1), ("1.0.1".parse().unwrap(), 2)]
            .into_iter()
            .collect();
        let b: Boundary = [("0".parse().unwrap(), 1), ("1.0.1".parse().unwrap(), 4)]
            .into_iter()
            .collect();
        let pair = BoundaryPair::new(shape, a, b).unwrap();
        let row = contraction_trial(&pair, &TrialOptions::default()).unwrap();
        assert_eq!(row.child_gaps[0], 0.0);
        assert!(row.frozen_children_identical);
        assert_eq!(row.non_frozen, 1);
    }

    #[test]
    fn quantiles_use_nearest_rank() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), Some(2.0));
        assert_eq!(quantile(&v, 0.99), Some(4.0));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let pts: Vec<(f64, f64)> = (2..7).map(|l| (l as f64, 3.0 * (0.1f64).powi(l))).collect();
        let fit = log_linear_fit(&pts).unwrap();
        assert!((fit.slope - (0.1f64).ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn completion_of_a_path() {
        let shape = TreeShape::new(3, 2, 3)
            .unwrap()
            .with_pruned(["1", "0.1", "0.0.1"].map(|s| s.parse().unwrap()))
            .unwrap();
        let a: Boundary = [("0.0.0".parse().unwrap(), 0)].into_iter().collect();
        let b: Boundary = [("0.0.0".parse().unwrap(), 1)].into_iter().collect();
        let pair = BoundaryPair::new(shape, a, b).unwrap();
        let check = subtree_completion_check(&pair, B).unwrap();
        assert!(check.equal && check.marginals_identical);
        assert!(check.pruned_distance > 0.0);
    }

    #[test]
    fn completion_of_a_complete_tree_is_trivial() {
        let shape = TreeShape::new(4, 2, 2).unwrap();
        let a: Boundary = [("0.1".parse().unwrap(), 0)].into_iter().collect();
        let b: Boundary = [("0.1".parse().unwrap(), 3)].into_iter().collect();
        let check = subtree_completion_check(&BoundaryPair::new(shape, a, b).unwrap(), B).unwrap();
        assert!(check.equal);
        assert_eq!(check.pruned_distance, check.completed_distance);
    }

    #[test]
    fn contraction_run_is_deterministic() {
        let mut config = ContractionConfig::new(8, 2, 3, 6, 11);
        config.t_grid = 101;
        let a = run_contraction(&config).unwrap();
        let b = run_contraction(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 6);
    }
}
