use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::MechanismKind;
use crate::stats;

use super::{InferenceError, ParamSpace};

/// Post-burn-in MCMC draws on the original (constrained) scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    pub mechanism: MechanismKind,
    pub names: Vec<String>,
    /// One row per retained draw, columns in `names` order.
    pub draws: Vec<Vec<f64>>,
    /// Log prior + log likelihood at each draw.
    pub log_posterior: Vec<f64>,
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: f64,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub mechanism: MechanismKind,
    pub draws: usize,
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: f64,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub parameters: Vec<ParameterSummary>,
}

impl PosteriorChain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[k]).collect()
    }

    /// Draws mapped to the sampler's unconstrained scale.
    pub fn unconstrained(&self) -> Result<Vec<Vec<f64>>, InferenceError> {
        let space = ParamSpace::new(self.mechanism);
        self.draws.iter().map(|d| space.to_unconstrained(d)).collect()
    }

    pub fn summary(&self) -> Result<ChainSummary, InferenceError> {
        if self.is_empty() {
            return Err(InferenceError::EmptyChain);
        }
        let parameters = self
            .names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let col = self.column(k);
                let q = stats::quantiles(&col, &[0.025, 0.5, 0.975]);
                ParameterSummary {
                    name: name.clone(),
                    mean: stats::mean(&col),
                    sd: stats::std_dev(&col),
                    q025: q[0],
                    q50: q[1],
                    q975: q[2],
                    ess: stats::effective_sample_size(&col),
                }
            })
            .collect();
        Ok(ChainSummary {
            mechanism: self.mechanism,
            draws: self.len(),
            acceptance_rate: self.acceptance_rate,
            burn_in_acceptance_rate: self.burn_in_acceptance_rate,
            seed: self.seed,
            iterations: self.iterations,
            burn_in: self.burn_in,
            thinning: self.thinning,
            parameters,
        })
    }

    /// CSV with header `draw,<parameters…>,log_posterior`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("draw");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push_str(",log_posterior\n");
        for (i, (d, lp)) in self.draws.iter().zip(&self.log_posterior).enumerate() {
            let _ = write!(s, "{i}");
            for v in d {
                let _ = write!(s, ",{v}");
            }
            let _ = writeln!(s, ",{lp}");
        }
        s
    }

    /// Reads draws written by [`to_csv_string`](Self::to_csv_string)
    /// (`#` comment lines allowed). Sampler metadata other than the draws is
    /// not stored in the CSV and comes back zeroed.
    pub fn read_csv(path: &Path, mechanism: MechanismKind) -> Result<Self, InferenceError> {
        let csv_err = |e: csv::Error| InferenceError::ChainFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        };
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let names = ParamSpace::new(mechanism).names();
        let mut idx = Vec::with_capacity(names.len());
        for n in names.iter().chain(std::iter::once(&"log_posterior".to_string())) {
            let i = headers.iter().position(|h| h == n).ok_or_else(|| InferenceError::ChainFile {
                path: path.display().to_string(),
                reason: format!("missing column {n:?}"),
            })?;
            idx.push(i);
        }
        let mut draws = Vec::new();
        let mut log_posterior = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let mut row = Vec::with_capacity(idx.len());
            for &i in &idx {
                let v: f64 = rec.get(i).unwrap_or("").parse().map_err(|_| InferenceError::ChainFile {
                    path: path.display().to_string(),
                    reason: format!("unparseable value {:?}", rec.get(i).unwrap_or("")),
                })?;
                row.push(v);
            }
            log_posterior.push(row.pop().expect("log_posterior column"));
            draws.push(row);
        }
        Ok(Self {
            mechanism,
            names,
            draws,
            log_posterior,
            acceptance_rate: 0.0,
            burn_in_acceptance_rate: 0.0,
            seed: 0,
            iterations: 0,
            burn_in: 0,
            thinning: 1,
        })
    }
}
