//! Subcommands behind the `skewgarch` binary.
//!
//! Machine-readable output goes to files in the output directory; progress
//! goes to standard error. Every artifact carries the resolved
//! configuration: JSON files in a `config` field, CSV files in `#` comment
//! lines.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use skewgarch::data::{
    compute_excess_returns, load_excess_returns, load_prices, load_riskfree, DataError, ExcessReturnSeries,
};
use skewgarch::garch::{simulate, InitPolicy};
use skewgarch::inference::{
    risk_premium_summary, rwm_sample_from, ChainSummary, PosteriorChain, RiskPremiumSummary, SamplerConfig,
};
use skewgarch::model_selection::{
    equal_priors, estimate_log_marginal, posterior_model_probs, ComparisonReport, EvidenceConfig, ModelComparison,
    ModelEvidence,
};
use skewgarch::MechanismKind;
use thiserror::Error;

pub use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            _ => 1,
        }
    }
}

fn data_error(e: DataError) -> CliError {
    CliError::Validation(format!("data: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fit,
    Compare,
    Simulate,
    Convert,
}

/// What a command produced. A non-empty `failures` list means exit status 1.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    /// `(model, message)` for every model that did not complete.
    pub failures: Vec<(String, String)>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Fit => cmd_fit(cfg),
        Command::Compare => cmd_compare(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Convert => cmd_convert(cfg),
    }
}

fn write_file(path: &Path, contents: &str, out: &mut Outcome) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    out.written.push(path.to_path_buf());
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

fn csv_with_header(title: &str, extra: &[String], cfg: &RunConfig, body: &str) -> String {
    let mut s = format!("# {title}\n");
    for line in extra {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s.push_str("# config: ");
    s.push_str(&cfg.to_json_line());
    s.push('\n');
    s.push_str(body);
    s
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

/// Excess returns from the configured source.
pub fn load_returns(cfg: &RunConfig) -> Result<ExcessReturnSeries, CliError> {
    let d = &cfg.data;
    if let Some(path) = &d.returns {
        return load_excess_returns(path, &d.returns_schema).map_err(data_error);
    }
    if d.prices.is_some() {
        return convert_prices(cfg);
    }
    Err(CliError::Validation(
        "no data source: set data.returns or data.prices in the config, or pass --data".into(),
    ))
}

fn convert_prices(cfg: &RunConfig) -> Result<ExcessReturnSeries, CliError> {
    let d = &cfg.data;
    let path = d
        .prices
        .as_ref()
        .ok_or_else(|| CliError::Validation("convert needs data.prices".into()))?;
    let prices = load_prices(path, &d.price_schema).map_err(data_error)?;
    let rf = match &d.riskfree {
        Some(p) => Some(load_riskfree(p, &d.riskfree_schema, d.day_count).map_err(data_error)?),
        None => None,
    };
    compute_excess_returns(&prices, rf.as_ref(), d.day_count).map_err(data_error)
}

/// A fitted model: merged chain plus its summaries.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub chain: PosteriorChain,
    pub seeds: Vec<u64>,
    pub summary: ChainSummary,
    pub risk: RiskPremiumSummary,
}

#[derive(Serialize)]
struct FitKey<'a> {
    model: &'a str,
    data: &'a config::DataConfig,
    prior: &'a skewgarch::inference::PriorSpec,
    sampler: &'a SamplerConfig,
    chains: usize,
    init: &'a InitPolicy,
}

fn fit_key(cfg: &RunConfig, kind: MechanismKind) -> String {
    serde_json::to_string(&FitKey {
        model: kind.name(),
        data: &cfg.data,
        prior: &cfg.prior,
        sampler: &cfg.sampler,
        chains: cfg.chains,
        init: &cfg.init,
    })
    .expect("fit key serializes")
}

pub fn chain_path(cfg: &RunConfig, kind: MechanismKind) -> PathBuf {
    cfg.output_dir.join(format!("chain_{}.csv", kind.name()))
}

pub fn summary_path(cfg: &RunConfig, kind: MechanismKind) -> PathBuf {
    cfg.output_dir.join(format!("summary_{}.json", kind.name()))
}

/// Runs every chain of one model and merges the post-burn-in draws.
pub fn fit_model(cfg: &RunConfig, y: &ExcessReturnSeries, kind: MechanismKind) -> Result<Fitted, String> {
    let mut merged: Option<PosteriorChain> = None;
    let mut seeds = Vec::with_capacity(cfg.chains);
    for c in 0..cfg.chains {
        let seed = cfg.chain_seed(kind, c);
        eprintln!("[fit] {} ({}): chain {}/{} seed {seed}", kind.model_label(), kind, c + 1, cfg.chains);
        let sampler = SamplerConfig {
            seed,
            ..cfg.sampler.clone()
        };
        let chain = rwm_sample_from(y, kind, &cfg.prior, &sampler, cfg.init, None).map_err(|e| format!("sampling failed: {e}"))?;
        eprintln!("[fit] {}: acceptance {:.3}", kind, chain.acceptance_rate);
        seeds.push(seed);
        merged = Some(match merged {
            None => chain,
            Some(mut m) => {
                let n = seeds.len() as f64;
                m.acceptance_rate += (chain.acceptance_rate - m.acceptance_rate) / n;
                m.burn_in_acceptance_rate += (chain.burn_in_acceptance_rate - m.burn_in_acceptance_rate) / n;
                m.draws.extend(chain.draws);
                m.log_posterior.extend(chain.log_posterior);
                m
            }
        });
    }
    let chain = merged.expect("at least one chain");
    finish_fit(chain, seeds)
}

fn finish_fit(chain: PosteriorChain, seeds: Vec<u64>) -> Result<Fitted, String> {
    let summary = chain.summary().map_err(|e| format!("summary failed: {e}"))?;
    let risk = risk_premium_summary(&chain, &chain.mechanism.symmetry_point()).map_err(|e| format!("risk premium summary failed: {e}"))?;
    Ok(Fitted {
        chain,
        seeds,
        summary,
        risk,
    })
}

#[derive(Serialize)]
struct SummaryArtifact<'a> {
    model: &'a str,
    label: &'a str,
    seeds: &'a [u64],
    posterior: &'a ChainSummary,
    risk_premium: &'a RiskPremiumSummary,
    config: &'a RunConfig,
}

fn write_fit_artifacts(cfg: &RunConfig, kind: MechanismKind, fit: &Fitted, out: &mut Outcome) -> Result<(), CliError> {
    let seeds: Vec<String> = fit.seeds.iter().map(|s| s.to_string()).collect();
    let csv = csv_with_header(
        "skewgarch posterior chain",
        &[
            format!("model: {} {}", kind.model_label(), kind),
            format!("seeds: {}", seeds.join(" ")),
            format!("fit: {}", fit_key(cfg, kind)),
        ],
        cfg,
        &fit.chain.to_csv_string(),
    );
    write_file(&chain_path(cfg, kind), &csv, out)?;
    let artifact = SummaryArtifact {
        model: kind.name(),
        label: kind.model_label(),
        seeds: &fit.seeds,
        posterior: &fit.summary,
        risk_premium: &fit.risk,
        config: cfg,
    };
    write_file(&summary_path(cfg, kind), &to_json(&artifact), out)
}

/// Reads a chain written by an earlier run with the same fit-relevant
/// settings; `None` when absent or stale.
fn reuse_chain(cfg: &RunConfig, kind: MechanismKind) -> Option<Fitted> {
    let path = chain_path(cfg, kind);
    let text = fs::read_to_string(&path).ok()?;
    let want = format!("# fit: {}", fit_key(cfg, kind));
    if !text.lines().take_while(|l| l.starts_with('#')).any(|l| l == want) {
        return None;
    }
    let seeds: Vec<u64> = text
        .lines()
        .find_map(|l| l.strip_prefix("# seeds: "))?
        .split_whitespace()
        .filter_map(|s| s.parse().ok())
        .collect();
    let chain = PosteriorChain::read_csv(&path, kind).ok()?;
    eprintln!("[compare] {kind}: reusing {}", path.display());
    finish_fit(chain, seeds).ok()
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let y = load_returns(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    let mut out = Outcome::default();
    for &kind in &cfg.models {
        match fit_model(cfg, &y, kind) {
            Ok(fit) => {
                eprintln!(
                    "[fit] {}: P(alpha + E(z) > 0) = {:.4}",
                    kind, fit.risk.prob_positive
                );
                write_fit_artifacts(cfg, kind, &fit, &mut out)?;
            }
            Err(msg) => {
                eprintln!("[fit] {kind}: FAILED: {msg}");
                out.failures.push((kind.name().to_string(), msg));
            }
        }
    }
    Ok(out)
}

/// One entry of an evidence fixture file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub model: String,
    pub log10_marginal: f64,
    #[serde(default)]
    pub mc_se: f64,
    #[serde(default)]
    pub estimator: Option<String>,
    #[serde(default)]
    pub prob_positive: Option<f64>,
}

#[derive(Serialize)]
struct ComparisonArtifact<'a> {
    report: &'a ComparisonReport,
    comparison: &'a ModelComparison,
    failures: Vec<Failure<'a>>,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct Failure<'a> {
    model: &'a str,
    message: &'a str,
}

struct Scored {
    evidence: ModelEvidence,
    prob_positive: Option<f64>,
}

fn score_from_fixture(cfg: &RunConfig, path: &Path, out: &mut Outcome) -> Result<Vec<Scored>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("evidence fixture {}: {e}", path.display())))?;
    let entries: Vec<FixtureEntry> =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("evidence fixture {}: {e}", path.display())))?;
    let mut parsed = Vec::with_capacity(entries.len());
    for e in entries {
        let kind = config::parse_model(&e.model).map_err(CliError::Validation)?;
        parsed.push((kind, e));
    }
    let mut scored = Vec::new();
    for &kind in &cfg.models {
        match parsed.iter().find(|(k, _)| *k == kind) {
            Some((_, e)) => scored.push(Scored {
                evidence: ModelEvidence {
                    model_id: kind,
                    log10_marginal: e.log10_marginal,
                    estimator: e.estimator.clone().unwrap_or_else(|| "fixture".into()),
                    mc_se: e.mc_se,
                },
                prob_positive: e.prob_positive,
            }),
            None => out
                .failures
                .push((kind.name().to_string(), "no entry in the evidence fixture".to_string())),
        }
    }
    Ok(scored)
}

fn score_by_fitting(cfg: &RunConfig, out: &mut Outcome) -> Result<Vec<Scored>, CliError> {
    let y = load_returns(cfg)?;
    let mut scored = Vec::new();
    for &kind in &cfg.models {
        let fit = match reuse_chain(cfg, kind) {
            Some(f) => f,
            None => match fit_model(cfg, &y, kind) {
                Ok(f) => {
                    write_fit_artifacts(cfg, kind, &f, out)?;
                    f
                }
                Err(msg) => {
                    eprintln!("[compare] {kind}: FAILED: {msg}");
                    out.failures.push((kind.name().to_string(), msg));
                    continue;
                }
            },
        };
        let ev_cfg = EvidenceConfig {
            seed: cfg.evidence_seed(kind),
            ..cfg.evidence.clone()
        };
        match estimate_log_marginal(&y, kind, &cfg.prior, &fit.chain, cfg.init, &ev_cfg) {
            Ok(ev) => {
                eprintln!(
                    "[compare] {}: log10 p(y) = {:.3} (se {:.3}, {})",
                    kind, ev.log10_marginal, ev.mc_se, ev.estimator
                );
                scored.push(Scored {
                    evidence: ev,
                    prob_positive: Some(fit.risk.prob_positive),
                });
            }
            Err(e) => {
                let msg = format!("evidence estimation failed: {e}");
                eprintln!("[compare] {kind}: FAILED: {msg}");
                out.failures.push((kind.name().to_string(), msg));
            }
        }
    }
    Ok(scored)
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    ensure_dir(&cfg.output_dir)?;
    let mut out = Outcome::default();
    let scored = match &cfg.evidence_fixture {
        Some(path) => score_from_fixture(cfg, path, &mut out)?,
        None => score_by_fitting(cfg, &mut out)?,
    };
    if scored.is_empty() {
        return Err(CliError::Stage {
            stage: "compare",
            message: format!("no model completed ({} failures)", out.failures.len()),
        });
    }
    let priors = match &cfg.prior_model_probs {
        Some(p) => {
            let kept: Vec<f64> = cfg
                .models
                .iter()
                .zip(p)
                .filter(|(k, _)| scored.iter().any(|s| s.evidence.model_id == **k))
                .map(|(_, v)| *v)
                .collect();
            let total: f64 = kept.iter().sum();
            kept.iter().map(|v| v / total).collect()
        }
        None => equal_priors(scored.len()),
    };
    let evidence: Vec<ModelEvidence> = scored.iter().map(|s| s.evidence.clone()).collect();
    let comparison = posterior_model_probs(&evidence, &priors).map_err(|e| CliError::Stage {
        stage: "compare",
        message: e.to_string(),
    })?;
    let pp: Vec<Option<f64>> = scored.iter().map(|s| s.prob_positive).collect();
    let report = ComparisonReport::new(&comparison, &pp).map_err(|e| CliError::Stage {
        stage: "compare",
        message: e.to_string(),
    })?;
    let artifact = ComparisonArtifact {
        report: &report,
        comparison: &comparison,
        failures: out
            .failures
            .iter()
            .map(|(m, msg)| Failure {
                model: m,
                message: msg,
            })
            .collect(),
        config: cfg,
    };
    let json = to_json(&artifact);
    let failed: Vec<String> = out.failures.iter().map(|(m, _)| m.clone()).collect();
    let csv = csv_with_header(
        "skewgarch model comparison",
        &[format!("failed models: {}", if failed.is_empty() { "none".into() } else { failed.join(" ") })],
        cfg,
        &report.to_csv_string(),
    );
    write_file(&cfg.output_dir.join("comparison.json"), &json, &mut out)?;
    write_file(&cfg.output_dir.join("comparison.csv"), &csv, &mut out)?;
    for (label, p) in report.labels.iter().zip(&report.posterior_probs) {
        eprintln!("[compare] P({label} | y) = {p:.4}");
    }
    Ok(out)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = &cfg.simulate;
    s.params
        .validate(s.stationary)
        .map_err(|e| CliError::Validation(format!("simulate.params: {e}")))?;
    s.mechanism
        .validate()
        .map_err(|e| CliError::Validation(format!("simulate.mechanism: {e}")))?;
    if s.init == InitPolicy::Unconditional && s.params.persistence() >= 1.0 {
        return Err(CliError::Validation(format!(
            "simulate.init unconditional needs alpha1 + beta1 < 1, got {}; use a fixed initial variance",
            s.params.persistence()
        )));
    }
    if s.n == 0 {
        return Err(CliError::Validation("simulate.n must be at least 1".into()));
    }
    let y = simulate(&s.params, &s.mechanism, s.n, s.seed, s.init).map_err(|e| CliError::Stage {
        stage: "simulate",
        message: e.to_string(),
    })?;
    ensure_dir(&cfg.output_dir)?;
    let mut out = Outcome::default();
    let csv = csv_with_header(
        "skewgarch simulated excess returns",
        &[format!("seed: {}", s.seed)],
        cfg,
        &y.to_csv_string(),
    );
    write_file(&cfg.output_dir.join(&s.output), &csv, &mut out)?;
    eprintln!("[simulate] wrote {} observations", y.len());
    Ok(out)
}

pub fn cmd_convert(cfg: &RunConfig) -> Result<Outcome, CliError> {
    for p in [&cfg.data.prices, &cfg.data.riskfree].into_iter().flatten() {
        if !p.exists() {
            return Err(CliError::Validation(format!("file not found: {}", p.display())));
        }
    }
    let y = convert_prices(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    let mut out = Outcome::default();
    let meta = serde_json::to_string(y.meta()).expect("record serializes");
    let csv = csv_with_header("skewgarch excess returns", &[format!("construction: {meta}")], cfg, &y.to_csv_string());
    write_file(&cfg.output_dir.join("excess_returns.csv"), &csv, &mut out)?;
    eprintln!("[convert] wrote {} excess returns", y.len());
    Ok(out)
}
