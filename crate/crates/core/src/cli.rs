//! The `ssm` command line: argument parsing, dispatch and artifact rendering.
//!
//! Exit status is 0 on success, 1 when a verification fails and 2 for usage
//! or input errors. JSON and CSV artifacts embed the schema, seed and the full
//! configuration; `--out` and `--threads` are left out so that the bytes do not
//! depend on where the artifact is written or how many threads produced it.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::bp::{self, ColorDistribution};
use crate::error::Error;
use crate::experiments::{self, ContractionConfig, DecayConfig, PairStyle};
use crate::instance_file::{InstanceFile, InstanceFileError};
use crate::jacobian::{self, PairAnalysis, NORM_TOLERANCE};
use crate::oracle::{self, DEFAULT_STATE_BUDGET};
use crate::thresholds;
use crate::tree::{TreeInstance, TreeShape};
use crate::verify::{self, ORACLE_TOLERANCE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Parser, Debug, Clone, Serialize)]
#[command(
    name = "ssm",
    version,
    about = "Marginals, exact counts and contraction checks for tree colorings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Instance JSON file (colors 1-based).
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    #[arg(long, global = true)]
    pub q: Option<usize>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    #[arg(long, global = true)]
    pub h: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "t-grid", global = true, default_value_t = jacobian::DEFAULT_T_GRID)]
    pub t_grid: usize,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Cap on q times the vertex count for exact counting.
    #[arg(long, global = true, default_value_t = DEFAULT_STATE_BUDGET)]
    pub budget: usize,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Root marginal from belief propagation.
    Marginal {
        /// Condition on eta_prime instead of eta.
        #[arg(long)]
        prime: bool,
    },
    /// Exact rational root marginal by counting.
    Oracle {
        /// Fail unless belief propagation agrees within 1e-12.
        #[arg(long)]
        compare_bp: bool,
        #[arg(long)]
        prime: bool,
    },
    /// Gradient matrix, its spectral norm and the closed-form bound.
    Jacobian {
        /// Interpolation parameter for a pair instance.
        #[arg(long)]
        t: Option<f64>,
        /// Explicit pi_hat, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        pi: Option<Vec<f64>>,
        /// Explicit gamma_hat, comma separated.
        #[arg(long = "gamma-hat", value_delimiter = ',', allow_hyphen_values = true)]
        gamma_hat: Option<Vec<f64>>,
    },
    /// Randomized norm-bound suite.
    NormCheck {
        #[arg(long, default_value_t = 2)]
        q_min: usize,
        #[arg(long, default_value_t = 10)]
        q_max: usize,
    },
    /// One-level contraction trials.
    Contraction {
        #[arg(long, value_delimiter = ',')]
        styles: Option<Vec<PairStyle>>,
        #[arg(long, value_delimiter = ',')]
        depths: Option<Vec<usize>>,
        /// Give the root d + 1 children.
        #[arg(long)]
        extra_root_child: bool,
        /// Skip the exact-count cross-check.
        #[arg(long)]
        no_oracle: bool,
    },
    /// Root gap against the depth of the disagreements.
    Decay {
        #[arg(long, value_delimiter = ',')]
        styles: Option<Vec<PairStyle>>,
        #[arg(long)]
        extra_root_child: bool,
    },
    /// Threshold ratios and the constant pipeline.
    Threshold {
        #[arg(long, default_value_t = 4)]
        digits: u32,
        #[arg(long, default_value_t = thresholds::DEFAULT_RATIO)]
        r: f64,
    },
    /// Property suites end to end.
    Selftest {
        /// Smaller sample sizes.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Instance(#[from] InstanceFileError),
    #[error(transparent)]
    Library(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

type CliResult<T> = Result<T, CliError>;

fn lib<T, E: Into<Error>>(r: Result<T, E>) -> CliResult<T> {
    r.map_err(|e| CliError::Library(e.into()))
}

/// A rendered command result.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub verified: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.verified {
            EXIT_OK
        } else {
            EXIT_VERIFICATION
        }
    }
}

struct Artifact {
    schema: &'static str,
    text: String,
    payload: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    verified: bool,
}

fn render(cli: &Cli, artifact: Artifact) -> String {
    match cli.format {
        Format::Text => artifact.text,
        Format::Json => {
            let doc = json!({
                "schema": artifact.schema,
                "seed": cli.seed,
                "config": cli,
                "verified": artifact.verified,
                "result": artifact.payload,
            });
            serde_json::to_string_pretty(&doc).expect("json value") + "\n"
        }
        Format::Csv => {
            let mut out = String::new();
            writeln!(out, "# schema: {}", artifact.schema).unwrap();
            writeln!(out, "# seed: {}", cli.seed).unwrap();
            writeln!(
                out,
                "# config: {}",
                serde_json::to_string(cli).expect("config")
            )
            .unwrap();
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(&artifact.header)
                .expect("in-memory write");
            for row in &artifact.rows {
                writer.write_record(row).expect("in-memory write");
            }
            out + &String::from_utf8(writer.into_inner().expect("flush")).expect("utf8")
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn qdh(cli: &Cli) -> CliResult<(usize, usize, usize)> {
    match (cli.q, cli.d, cli.h) {
        (Some(q), Some(d), Some(h)) => Ok((q, d, h)),
        _ => Err(CliError::Usage("--q, --d and --h are required".into())),
    }
}

fn load_file(cli: &Cli) -> CliResult<Option<InstanceFile>> {
    cli.instance
        .as_ref()
        .map(|p| InstanceFile::read(p))
        .transpose()
        .map_err(Into::into)
}

fn load_instance(cli: &Cli, prime: bool) -> CliResult<TreeInstance> {
    match load_file(cli)? {
        Some(file) if prime => Ok(file.pair()?.eta_prime_instance()),
        Some(file) => Ok(file.instance()?),
        None if prime => Err(CliError::Usage(
            "--prime needs an --instance with eta_prime".into(),
        )),
        None => {
            let (q, d, h) = qdh(cli)?;
            Ok(TreeInstance::free(lib(TreeShape::new(q, d, h))?))
        }
    }
}

fn marginal(cli: &Cli, prime: bool) -> CliResult<Artifact> {
    let instance = load_instance(cli, prime)?;
    let pi = lib(bp::root_marginal(&instance))?;
    Ok(Artifact {
        schema: "ssm-colorings/marginal/v1",
        text: format!(
            "root marginal (colors 1..{}): {}\n",
            pi.q(),
            fmt_vec(pi.probs())
        ),
        payload: json!({ "marginal": pi.probs() }),
        header: vec!["color", "probability"],
        rows: pi
            .probs()
            .iter()
            .enumerate()
            .map(|(c, p)| vec![(c + 1).to_string(), p.to_string()])
            .collect(),
        verified: true,
    })
}

fn oracle_cmd(cli: &Cli, compare_bp: bool, prime: bool) -> CliResult<Artifact> {
    let instance = load_instance(cli, prime)?;
    let exact = lib(oracle::exact_marginal(&instance, cli.budget))?;
    let engine = lib(bp::root_marginal(&instance))?;
    let floats = exact.to_f64();
    let delta = engine.max_abs_diff(&floats);
    let fractions: Vec<String> = (0..exact.q()).map(|c| exact.prob(c).to_string()).collect();
    let mut text = format!("extensions: {}\n", exact.denominator());
    for (c, f) in fractions.iter().enumerate() {
        writeln!(text, "color {}: {}", c + 1, f).unwrap();
    }
    writeln!(text, "max |bp - exact|: {delta:e}").unwrap();
    Ok(Artifact {
        schema: "ssm-colorings/oracle/v1",
        text,
        payload: json!({
            "extensions": exact.denominator().to_string(),
            "marginal": fractions,
            "marginal_f64": floats,
            "bp": engine.probs(),
            "max_abs_delta": delta,
        }),
        header: vec!["color", "exact", "exact_f64", "bp"],
        rows: (0..exact.q())
            .map(|c| {
                vec![
                    (c + 1).to_string(),
                    fractions[c].clone(),
                    floats[c].to_string(),
                    engine.get(c).to_string(),
                ]
            })
            .collect(),
        verified: !compare_bp || delta < ORACLE_TOLERANCE,
    })
}

fn jacobian_cmd(
    cli: &Cli,
    t: Option<f64>,
    pi: &Option<Vec<f64>>,
    gamma_hat: &Option<Vec<f64>>,
) -> CliResult<Artifact> {
    let (pi_hat, gamma) = match (pi, gamma_hat) {
        (Some(pi), Some(g)) => (lib(ColorDistribution::new(pi.clone()))?, g.clone()),
        (None, None) => {
            let file = load_file(cli)?.ok_or_else(|| {
                CliError::Usage("give --pi and --gamma-hat, or a pair --instance".into())
            })?;
            let analysis = lib(PairAnalysis::from_bp(&file.pair()?))?;
            (
                lib(analysis.pi_hat(t.unwrap_or(0.5)))?,
                analysis.profile.gamma_sqrt(),
            )
        }
        _ => return Err(CliError::Usage("--pi and --gamma-hat go together".into())),
    };
    let bundle = lib(jacobian::build_matrix(&pi_hat, &gamma))?;
    let m = &bundle.matrix;
    let matrix: Vec<Vec<f64>> = (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect();
    let ok = bundle.spectral_norm <= bundle.closed_form_bound + NORM_TOLERANCE;
    let mut text = format!(
        "pi_hat = {}\ngamma_hat = {}\nM =\n",
        fmt_vec(pi_hat.probs()),
        fmt_vec(&gamma)
    );
    for row in &matrix {
        writeln!(text, "  {}", fmt_vec(row)).unwrap();
    }
    writeln!(text, "||M||_2 = {}", bundle.spectral_norm).unwrap();
    writeln!(text, "bound = {}", bundle.closed_form_bound).unwrap();
    writeln!(text, "within bound: {ok}").unwrap();
    Ok(Artifact {
        schema: "ssm-colorings/jacobian/v1",
        text,
        payload: json!({
            "pi_hat": pi_hat.probs(),
            "gamma_hat": gamma,
            "matrix": matrix,
            "spectral_norm": bundle.spectral_norm,
            "bound": bundle.closed_form_bound,
            "method": bundle.method,
            "within_bound": ok,
        }),
        header: vec!["row", "values"],
        rows: matrix
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let vals: Vec<String> = row.iter().map(f64::to_string).collect();
                vec![(r + 1).to_string(), vals.join(" ")]
            })
            .collect(),
        verified: ok,
    })
}

fn norm_check(cli: &Cli, q_min: usize, q_max: usize) -> CliResult<Artifact> {
    let qs: Vec<usize> = match cli.q {
        Some(q) => vec![q],
        None => (q_min..=q_max).collect(),
    };
    if qs.is_empty() || qs[0] < 2 {
        return Err(CliError::Usage(
            "q range must be nonempty and start at 2 or more".into(),
        ));
    }
    let rows = lib(verify::norm_suite(
        &qs,
        cli.trials.unwrap_or(10_000),
        cli.seed,
    ))?;
    let verified = rows.iter().all(|r| r.passed);
    let mut text = String::new();
    for r in &rows {
        writeln!(
            text,
            "q = {:>2}: {} samples, {} violations, worst excess {:e}, uniform gap {:e}",
            r.q, r.samples, r.violations, r.worst_excess, r.uniform_gap
        )
        .unwrap();
    }
    Ok(Artifact {
        schema: "ssm-colorings/norm-check/v1",
        text,
        payload: json!({ "rows": rows, "tolerance": NORM_TOLERANCE }),
        header: vec![
            "q",
            "samples",
            "violations",
            "worst_excess",
            "uniform_gap",
            "passed",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.q.to_string(),
                    r.samples.to_string(),
                    r.violations.to_string(),
                    r.worst_excess.to_string(),
                    r.uniform_gap.to_string(),
                    r.passed.to_string(),
                ]
            })
            .collect(),
        verified,
    })
}

fn contraction(
    cli: &Cli,
    styles: &Option<Vec<PairStyle>>,
    depths: &Option<Vec<usize>>,
    extra_root_child: bool,
    no_oracle: bool,
) -> CliResult<Artifact> {
    let (q, d, h) = qdh(cli)?;
    let mut config = ContractionConfig::new(q, d, h, cli.trials.unwrap_or(200), cli.seed);
    if let Some(s) = styles {
        config.styles = s.clone();
    }
    if let Some(l) = depths {
        config.depths = l.clone();
    }
    config.t_grid = cli.t_grid;
    config.extra_root_child = extra_root_child;
    config.oracle_budget = (!no_oracle).then_some(cli.budget);
    if config.depths.is_empty() {
        return Err(CliError::Usage("contraction needs h >= 3".into()));
    }
    let report = lib(experiments::run_contraction(&config))?;
    let s = &report.summary;
    let verified =
        s.all_certificates_hold && s.max_oracle_delta.is_none_or(|x| x < ORACLE_TOLERANCE);
    let text = format!(
        "trials: {}\ndefined ratios: {}\nmax ratio: {}\nmedian ratio: {}\np90 ratio: {}\np99 ratio: {}\n\
         all ratios below one: {}\nall certificates hold: {}\nall blocked agreements: {}\nmax oracle delta: {}\n",
        s.trials,
        s.defined_ratios,
        opt(s.max_ratio),
        opt(s.median_ratio),
        opt(s.p90_ratio),
        opt(s.p99_ratio),
        s.all_ratios_below_one,
        s.all_certificates_hold,
        s.all_blocked_agreement,
        opt(s.max_oracle_delta),
    );
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.trial.to_string(),
                r.style.map(|s| s.to_string()).unwrap_or_default(),
                r.depth.to_string(),
                r.non_frozen.to_string(),
                r.root_gap.to_string(),
                r.max_child_gap.to_string(),
                opt(r.ratio),
                opt(r.k_grid),
                opt(r.certificate_lhs),
                opt(r.certificate_rhs),
                r.certificate_holds
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
                r.blocked_agreement.to_string(),
                opt(r.oracle_delta),
            ]
        })
        .collect();
    Ok(Artifact {
        schema: experiments::CONTRACTION_SCHEMA,
        text,
        payload: serde_json::to_value(&report).expect("report"),
        header: vec![
            "trial",
            "style",
            "depth",
            "non_frozen",
            "root_gap",
            "max_child_gap",
            "ratio",
            "k_grid",
            "certificate_lhs",
            "certificate_rhs",
            "certificate_holds",
            "blocked_agreement",
            "oracle_delta",
        ],
        rows,
        verified,
    })
}

fn decay(
    cli: &Cli,
    styles: &Option<Vec<PairStyle>>,
    extra_root_child: bool,
) -> CliResult<Artifact> {
    let (q, d, h) = qdh(cli)?;
    let mut config = DecayConfig::new(q, d, h, cli.trials.unwrap_or(50), cli.seed);
    if let Some(s) = styles {
        config.styles = s.clone();
    }
    config.extra_root_child = extra_root_child;
    config.budget = cli.budget;
    let curve = lib(experiments::decay_sweep(&config))?;
    let mut text = String::new();
    for l in &curve.levels {
        writeln!(
            text,
            "level {:>2}: max gap {:e} over {} trials ({} failed){}",
            l.level,
            l.max_gap,
            l.trials,
            l.failures,
            l.zeta.map(|z| format!(", zeta {z:e}")).unwrap_or_default()
        )
        .unwrap();
    }
    if let Some(fit) = curve.fit {
        writeln!(
            text,
            "log-linear fit over levels >= 2: slope {}, R^2 {}",
            fit.slope, fit.r_squared
        )
        .unwrap();
    }
    writeln!(
        text,
        "strictly decreasing from level 2: {}",
        curve.strictly_decreasing_from(2)
    )
    .unwrap();
    Ok(Artifact {
        schema: experiments::DECAY_SCHEMA,
        text,
        payload: serde_json::to_value(&curve).expect("curve"),
        header: vec!["level", "max_gap", "trials", "failures", "zeta"],
        rows: curve
            .levels
            .iter()
            .map(|l| {
                vec![
                    l.level.to_string(),
                    l.max_gap.to_string(),
                    l.trials.to_string(),
                    l.failures.to_string(),
                    opt(l.zeta),
                ]
            })
            .collect(),
        verified: true,
    })
}

fn threshold(digits: u32, r: f64) -> CliResult<Artifact> {
    let alpha_prime = lib(thresholds::solve_alpha_prime(digits))?;
    let alpha_star = thresholds::solve_alpha_star();
    let p = lib(thresholds::pipeline(r))?;
    let w = digits as usize;
    let text = format!(
        "alpha_prime: {alpha_prime:.w$}\nalpha_star: {alpha_star:.w$}\n\
         r: {}\nC: {}\nK': {}\nU': {}\nU: {}\n",
        p.r, p.c, p.k_prime, p.u_prime, p.u
    );
    Ok(Artifact {
        schema: "ssm-colorings/threshold/v1",
        text,
        payload: json!({
            "alpha_prime": format!("{alpha_prime:.w$}"),
            "alpha_star": alpha_star,
            "pipeline": p,
        }),
        header: vec!["quantity", "value"],
        rows: vec![
            vec!["alpha_prime".into(), format!("{alpha_prime:.w$}")],
            vec!["alpha_star".into(), alpha_star.to_string()],
            vec!["r".into(), p.r.to_string()],
            vec!["C".into(), p.c.to_string()],
            vec!["K'".into(), p.k_prime.to_string()],
            vec!["U'".into(), p.u_prime.to_string()],
            vec!["U".into(), p.u.to_string()],
        ],
        verified: true,
    })
}

fn selftest(cli: &Cli, quick: bool) -> CliResult<Artifact> {
    let scale = |full: usize, small: usize| if quick { small } else { full };
    let mut checks: Vec<(&str, bool, String)> = Vec::new();

    let a = lib(thresholds::solve_alpha_prime(4))?;
    checks.push((
        "threshold",
        format!("{a:.4}") == "1.5897",
        format!("{a:.4}"),
    ));
    let s = thresholds::solve_alpha_star();
    checks.push((
        "alpha-star",
        format!("{s:.3}") == "1.763",
        format!("{s:.3}"),
    ));

    let oracle_suite = lib(verify::oracle_equivalence_suite(scale(500, 60), cli.seed))?;
    checks.push((
        "oracle-equivalence",
        oracle_suite.passed,
        format!("worst {:e}", oracle_suite.worst),
    ));

    let qs: Vec<usize> = (2..=10).collect();
    let norms = lib(verify::norm_suite(&qs, scale(2_000, 200), cli.seed))?;
    let worst = norms
        .iter()
        .map(|r| r.worst_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push((
        "norm-bound",
        norms.iter().all(|r| r.passed),
        format!("worst excess {worst:e}"),
    ));

    let fd = lib(verify::jacobian_fd_suite(scale(100, 20), cli.seed))?;
    checks.push(("jacobian-fd", fd.passed, format!("worst {:e}", fd.worst)));

    let exact = lib(jacobian::marginal_lower_bound_exact(5, 2))?;
    checks.push((
        "lower-bound-5-2",
        exact.to_string() == "2/15",
        exact.to_string(),
    ));

    let mut corpus = lib(experiments::regression_corpus())?;
    if quick {
        corpus.truncate(24);
    }
    let lower = lib(verify::lower_bound_suite(&corpus))?;
    checks.push((
        "lower-bound",
        lower.passed,
        format!("{} instances", lower.checked),
    ));
    let cert = lib(verify::certificate_suite(&corpus, cli.t_grid))?;
    checks.push((
        "certificate",
        cert.passed,
        format!("{} pairs, min slack {:e}", cert.checked, cert.worst),
    ));

    let verified = checks.iter().all(|c| c.1);
    let mut text = String::new();
    for (name, ok, detail) in &checks {
        writeln!(
            text,
            "{} {name}: {detail}",
            if *ok { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }
    Ok(Artifact {
        schema: "ssm-colorings/selftest/v1",
        text,
        payload: json!(checks
            .iter()
            .map(|(n, ok, detail)| json!({ "check": n, "passed": ok, "detail": detail }))
            .collect::<Vec<_>>()),
        header: vec!["check", "passed", "detail"],
        rows: checks
            .iter()
            .map(|(n, ok, detail)| vec![n.to_string(), ok.to_string(), detail.clone()])
            .collect(),
        verified,
    })
}

/// Runs a parsed command and renders its output in the requested format.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let artifact = match &cli.command {
        Command::Marginal { prime } => marginal(cli, *prime)?,
        Command::Oracle { compare_bp, prime } => oracle_cmd(cli, *compare_bp, *prime)?,
        Command::Jacobian { t, pi, gamma_hat } => jacobian_cmd(cli, *t, pi, gamma_hat)?,
        Command::NormCheck { q_min, q_max } => norm_check(cli, *q_min, *q_max)?,
        Command::Contraction {
            styles,
            depths,
            extra_root_child,
            no_oracle,
        } => contraction(cli, styles, depths, *extra_root_child, *no_oracle)?,
        Command::Decay {
            styles,
            extra_root_child,
        } => decay(cli, styles, *extra_root_child)?,
        Command::Threshold { digits, r } => threshold(*digits, *r)?,
        Command::Selftest { quick } => selftest(cli, *quick)?,
    };
    let verified = artifact.verified;
    Ok(Outcome {
        output: render(cli, artifact),
        verified,
    })
}

/// Runs inside a pool of `--threads` workers when given, and writes to `--out` or stdout.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let outcome = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| run(cli))?,
        None => run(cli)?,
    };
    match &cli.out {
        Some(path) => fs::write(path, &outcome.output).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        })?,
        None => print!("{}", outcome.output),
    }
    Ok(outcome)
}

/// Parses arguments, executes, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Result<Outcome, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("ssm").chain(args.iter().copied())).unwrap();
        run(&cli)
    }

    #[test]
    fn threshold_prints_four_digits() {
        let out = run_args(&["threshold", "--digits", "4"]).unwrap();
        assert!(out.output.starts_with("alpha_prime: 1.5897\n"));
        assert!(out.verified);
    }

    #[test]
    fn free_marginal_from_parameters() {
        let out = run_args(&["marginal", "--q", "4", "--d", "2", "--h", "3"]).unwrap();
        assert_eq!(
            out.output,
            "root marginal (colors 1..4): (0.25, 0.25, 0.25, 0.25)\n"
        );
    }

    #[test]
    fn jacobian_with_explicit_inputs() {
        let out = run_args(&[
            "--format",
            "json",
            "jacobian",
            "--pi",
            "0.25,0.25,0.25,0.25",
            "--gamma-hat",
            "1,1,1,1",
        ])
        .unwrap();
        let v: Value = serde_json::from_str(&out.output).unwrap();
        assert!((v["result"]["spectral_norm"].as_f64().unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(v["config"]["command"]["name"], "jacobian");
    }

    #[test]
    fn missing_parameters_are_usage_errors() {
        assert!(matches!(
            run_args(&["contraction"]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            run_args(&["jacobian", "--pi", "1"]),
            Err(CliError::Usage(_))
        ));
        assert_eq!(main_with_args(["ssm", "no-such-command"]), EXIT_USAGE);
    }

    #[test]
    fn csv_carries_config_header() {
        let out = run_args(&["--format", "csv", "threshold"]).unwrap();
        let mut lines = out.output.lines();
        assert_eq!(lines.next(), Some("# schema: ssm-colorings/threshold/v1"));
        assert_eq!(lines.next(), Some("# seed: 0"));
        assert!(lines.next().unwrap().starts_with("# config: {"));
        assert_eq!(lines.next(), Some("quantity,value"));
    }
}
