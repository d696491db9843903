use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use skewgarch::data::{ColumnMapping, DayCount};
use skewgarch::garch::{GarchParams, InitPolicy};
use skewgarch::inference::{PriorSpec, SamplerConfig};
use skewgarch::model_selection::EvidenceConfig;
use skewgarch::{MechanismKind, SkewMechanism};

use crate::CliError;

/// Where the observations come from. Either `returns` (an excess-return
/// CSV) or `prices` (optionally with `riskfree`) must be set for `fit` and
/// `compare`; `convert` needs `prices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub returns: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub riskfree: Option<PathBuf>,
    pub returns_schema: ColumnMapping,
    pub price_schema: ColumnMapping,
    pub riskfree_schema: ColumnMapping,
    pub day_count: DayCount,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            returns: None,
            prices: None,
            riskfree: None,
            returns_schema: ColumnMapping::new("date", "excess_return"),
            price_schema: ColumnMapping::default(),
            riskfree_schema: ColumnMapping::default(),
            day_count: DayCount::Act365,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub params: GarchParams,
    pub mechanism: SkewMechanism,
    pub n: usize,
    pub seed: u64,
    pub init: InitPolicy,
    /// Reject parameters with α₁ + β₁ ≥ 1.
    pub stationary: bool,
    /// File name inside the output directory.
    pub output: String,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            params: GarchParams {
                alpha: 0.15,
                alpha0: 0.05,
                alpha1: 0.08,
                beta1: 0.9,
                nu: 8.0,
            },
            mechanism: SkewMechanism::BetaTwo { a: 3.0, b: 1.0 },
            n: 1000,
            seed: 0,
            init: InitPolicy::Unconditional,
            stationary: false,
            output: "simulated.csv".into(),
        }
    }
}

/// Everything a run needs. Loaded from a single JSON document; command
/// line flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(serialize_with = "ser_models", deserialize_with = "de_models")]
    pub models: Vec<MechanismKind>,
    pub prior: PriorSpec,
    pub sampler: SamplerConfig,
    /// Independent chains per model; chain `k` of the model at position
    /// `m` in the canonical order uses seed `sampler.seed + 1000 m + k`.
    pub chains: usize,
    pub init: InitPolicy,
    pub evidence: EvidenceConfig,
    /// Prior model probabilities aligned with `models` (equal if absent).
    pub prior_model_probs: Option<Vec<f64>>,
    /// JSON list of precomputed evidence values; `compare` then skips fitting.
    pub evidence_fixture: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            models: MechanismKind::ALL.to_vec(),
            prior: PriorSpec::default(),
            sampler: SamplerConfig::default(),
            chains: 1,
            init: InitPolicy::default(),
            evidence: EvidenceConfig::default(),
            prior_model_probs: None,
            evidence_fixture: None,
            output_dir: PathBuf::from("output"),
            simulate: SimulateConfig::default(),
        }
    }
}

fn ser_models<S: Serializer>(models: &[MechanismKind], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(models.iter().map(|m| m.name()))
}

fn de_models<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<MechanismKind>, D::Error> {
    let names = Vec::<String>::deserialize(d)?;
    names.iter().map(|n| parse_model(n).map_err(serde::de::Error::custom)).collect()
}

pub fn parse_model(name: &str) -> Result<MechanismKind, String> {
    MechanismKind::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = MechanismKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown model {name:?} (expected M0..M6 or one of {})", known.join(", "))
    })
}

pub fn parse_models(list: &str) -> Result<Vec<MechanismKind>, String> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(parse_model).collect()
}

/// Flag overrides, applied after the file is read.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub models: Option<Vec<MechanismKind>>,
    pub output_dir: Option<PathBuf>,
    /// `Some(None)` is `--riskfree none`.
    pub riskfree: Option<Option<PathBuf>>,
    pub day_count: Option<DayCount>,
    pub returns: Option<PathBuf>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
}

impl RunConfig {
    /// Reads `path` (or starts from defaults) and applies `overrides`.
    /// Relative data paths in the file are taken relative to the file.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Validation(format!("config file {}: {e}", p.display())))?;
                let mut cfg: RunConfig =
                    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config file {}: {e}", p.display())))?;
                let base = p.parent().unwrap_or(Path::new(""));
                let rebase = |q: &mut Option<PathBuf>| {
                    if let Some(v) = q.as_mut() {
                        if v.is_relative() {
                            *v = base.join(&*v);
                        }
                    }
                };
                rebase(&mut cfg.data.returns);
                rebase(&mut cfg.data.prices);
                rebase(&mut cfg.data.riskfree);
                rebase(&mut cfg.evidence_fixture);
                cfg
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = overrides.seed {
            cfg.sampler.seed = seed;
            cfg.evidence.seed = seed;
            cfg.simulate.seed = seed;
        }
        if let Some(m) = &overrides.models {
            cfg.models = m.clone();
        }
        if let Some(o) = &overrides.output_dir {
            cfg.output_dir = o.clone();
        }
        if let Some(r) = &overrides.riskfree {
            cfg.data.riskfree = r.clone();
        }
        if let Some(d) = overrides.day_count {
            cfg.data.day_count = d;
        }
        if let Some(r) = &overrides.returns {
            cfg.data.returns = Some(r.clone());
        }
        if let Some(n) = overrides.iterations {
            cfg.sampler.iterations = n;
        }
        if let Some(n) = overrides.burn_in {
            cfg.sampler.burn_in = n;
        }
        Ok(cfg)
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.models.is_empty() {
            return bad("model list is empty".into());
        }
        let mut seen = self.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.models.len() {
            return bad("model list has duplicates".into());
        }
        if self.chains == 0 {
            return bad("chains must be at least 1".into());
        }
        if let Some(p) = &self.prior_model_probs {
            if p.len() != self.models.len() {
                return bad(format!("prior_model_probs has {} entries for {} models", p.len(), self.models.len()));
            }
        }
        self.sampler.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        self.prior.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        for p in [&self.data.returns, &self.data.prices, &self.data.riskfree, &self.evidence_fixture]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return bad(format!("file not found: {}", p.display()));
            }
        }
        Ok(())
    }

    pub fn model_index(kind: MechanismKind) -> u64 {
        MechanismKind::ALL.iter().position(|k| *k == kind).expect("known kind") as u64
    }

    pub fn chain_seed(&self, kind: MechanismKind, chain: usize) -> u64 {
        self.sampler
            .seed
            .wrapping_add(1000 * Self::model_index(kind))
            .wrapping_add(chain as u64)
    }

    pub fn evidence_seed(&self, kind: MechanismKind) -> u64 {
        self.evidence.seed.wrapping_add(1000 * Self::model_index(kind)).wrapping_add(500)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
