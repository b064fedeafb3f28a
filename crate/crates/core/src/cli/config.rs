//! JSON experiment configuration.

use std::path::Path;

use serde::Deserialize;

use crate::approx::ApproxMode;
use crate::error::{Error, Result};
use crate::model::{AgentSubset, RiskParams};
use crate::netgen::BlockModel;
use crate::ruin::Sampler;

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "RUINNET_SEED";
pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_NS_GRID: [usize; 4] = [3, 4, 5, 6];
pub const DEFAULT_OUTER_NETWORKS: usize = 200;
pub const DEFAULT_INNER_PATHS: usize = 500;
pub const DEFAULT_SAMPLED_CONFIGS: usize = 1_000;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Premiums {
    Explicit(Vec<f64>),
    /// `low` on the first `ns` objects, `high` on the rest.
    TwoValue { low: f64, high: f64, ns: usize },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl ScalarOrVec {
    fn expand(&self, len: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            Self::Scalar(x) => Ok(vec![*x; len]),
            Self::Vector(v) if v.len() == len => Ok(v.clone()),
            Self::Vector(v) => Err(Error::DimensionMismatch(format!("{what} has {} entries, expected {len}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Network {
    /// Every edge present independently; `p` defaults to `d^{-β}`.
    Bernoulli { p: Option<f64> },
    Sbm {
        #[serde(rename = "K")]
        k: Option<usize>,
        #[serde(rename = "L")]
        l: Option<usize>,
        w: Vec<f64>,
        v: Vec<f64>,
        p: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged, deny_unknown_fields)]
pub enum Group {
    Size { size: usize },
    /// 1-based agent labels.
    Indices { indices: Vec<usize> },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum ApproxChoice {
    /// Closed form for single-type models, otherwise exact with a sampled fallback.
    #[default]
    Auto,
    Exact,
    Sampled,
    ClosedForm,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "one")]
    pub lambda: f64,
    pub q: usize,
    pub d: usize,
    pub premiums: Premiums,
    #[serde(default = "scalar_one")]
    pub mu: ScalarOrVec,
    #[serde(default = "scalar_one")]
    pub reserves: ScalarOrVec,
    pub network: Network,
    pub group: Option<Group>,
    pub beta: Option<f64>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub sampler: Sampler,
    pub ns_grid: Option<Vec<usize>>,
    pub horizon: Option<f64>,
    pub outer_networks: Option<usize>,
    pub inner_paths: Option<usize>,
    #[serde(default)]
    pub approx: ApproxChoice,
    pub approx_configs: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn scalar_one() -> ScalarOrVec {
    ScalarOrVec::Scalar(1.0)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks everything that can be checked without choosing `ns` or `|Q|`.
    pub fn validate(&self) -> Result<()> {
        self.params(None)?;
        self.model()?;
        self.group()?;
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::InvalidBeta(beta));
            }
        }
        if let Some(grid) = &self.ns_grid {
            if let Some(&ns) = grid.iter().find(|&&ns| ns > self.d) {
                return Err(Error::invalid(format!("ns = {ns} exceeds d = {}", self.d)));
            }
        }
        Ok(())
    }

    /// Risk parameters; `ns` replaces the split of a two-value premium scheme.
    pub fn params(&self, ns: Option<usize>) -> Result<RiskParams> {
        let premium = match (&self.premiums, ns) {
            (Premiums::Explicit(_), Some(_)) => {
                return Err(Error::Config("an ns grid needs premiums given as {low, high, ns}".into()))
            }
            (Premiums::Explicit(c), None) => ScalarOrVec::Vector(c.clone()).expand(self.d, "premiums")?,
            (&Premiums::TwoValue { low, high, ns: own }, ns) => {
                let ns = ns.unwrap_or(own);
                if ns > self.d {
                    return Err(Error::invalid(format!("ns = {ns} exceeds d = {}", self.d)));
                }
                (0..self.d).map(|j| if j < ns { low } else { high }).collect()
            }
        };
        RiskParams::new(
            self.lambda,
            premium,
            self.mu.expand(self.d, "mu")?,
            self.reserves.expand(self.q, "reserves")?,
        )
    }

    pub fn model(&self) -> Result<BlockModel> {
        match &self.network {
            Network::Bernoulli { p: Some(p) } => BlockModel::bernoulli(*p),
            Network::Bernoulli { p: None } => match self.beta {
                Some(beta) => BlockModel::bernoulli((self.d as f64).powf(-beta)),
                None => Err(Error::Config("bernoulli network needs p or beta".into())),
            },
            Network::Sbm { k, l, w, v, p } => {
                if k.is_some_and(|k| k != w.len()) || l.is_some_and(|l| l != v.len()) {
                    return Err(Error::DimensionMismatch("K and L must match the lengths of w and v".into()));
                }
                BlockModel::new(w.clone(), v.clone(), p.clone())
            }
        }
    }

    pub fn group(&self) -> Result<Option<AgentSubset>> {
        match &self.group {
            None => Ok(None),
            Some(Group::Size { size }) => AgentSubset::prefix(*size, self.q).map(Some),
            Some(Group::Indices { indices }) => AgentSubset::from_labels(indices, self.q).map(Some),
        }
    }

    pub fn require_group(&self) -> Result<AgentSubset> {
        self.group()?.ok_or_else(|| Error::Config("this command needs a group ({size} or {indices})".into()))
    }

    /// Number of objects on the low premium, when the scheme defines one.
    pub fn scheme_ns(&self) -> Option<usize> {
        match self.premiums {
            Premiums::TwoValue { ns, .. } => Some(ns),
            Premiums::Explicit(_) => None,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(crate::pathsim::DEFAULT_HORIZON)
    }

    pub fn approx_mode(&self, model: &BlockModel) -> ApproxMode {
        let configs = self.approx_configs.unwrap_or(DEFAULT_SAMPLED_CONFIGS);
        match self.approx {
            ApproxChoice::Auto if model.is_bernoulli() => ApproxMode::ClosedForm,
            ApproxChoice::Auto | ApproxChoice::Exact => ApproxMode::Exact,
            ApproxChoice::Sampled => ApproxMode::Sampled { configs },
            ApproxChoice::ClosedForm => ApproxMode::ClosedForm,
        }
    }
}

/// Seed precedence: flag, then file, then `RUINNET_SEED`, then 42.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}
