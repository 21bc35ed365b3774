use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{DiscreteDistribution, Prior};
use crate::model::SystemParameter;
use crate::policies::{PolicyMapping, DEFAULT_DP_BUDGET};
use crate::valuation::DEFAULT_NODE_BUDGET;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Bayesian,
    Frequentist,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bayesian" => Ok(Mode::Bayesian),
            "frequentist" => Ok(Mode::Frequentist),
            other => Err(Error::Config(format!("unknown mode {other:?}; expected bayesian or frequentist"))),
        }
    }
}

/// Where the prior comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorSpec {
    /// Independent uniform prior per arm over `values x values` for
    /// `(p01, p11)`.
    Grid { values: Vec<f64> },
    /// Explicit joint support; weights default to uniform.
    Support {
        params: Vec<SystemParameter<f64>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// JSON file holding a `support` object, resolved against the config
    /// file's directory when relative.
    SupportFile { path: PathBuf },
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Grid {
            values: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Deserialize)]
struct SupportDoc {
    params: Vec<SystemParameter<f64>>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

impl PriorSpec {
    pub fn build(&self, num_arms: usize, base: Option<&Path>) -> Result<Prior<f64>> {
        match self {
            PriorSpec::Grid { values } => {
                if values.is_empty() {
                    return Err(Error::Config("prior grid is empty".into()));
                }
                Prior::uniform_grid(num_arms, values)
            }
            PriorSpec::Support { params, weights } => joint(params.clone(), weights.as_deref(), num_arms),
            PriorSpec::SupportFile { path } => {
                let path = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::io(format!("reading prior support {}", path.display()), e))?;
                let doc: SupportDoc = serde_json::from_str(&text)
                    .map_err(|e| Error::json(format!("parsing prior support {}", path.display()), e))?;
                joint(doc.params, doc.weights.as_deref(), num_arms)
            }
        }
    }
}

fn joint(params: Vec<SystemParameter<f64>>, weights: Option<&[f64]>, num_arms: usize) -> Result<Prior<f64>> {
    if let Some(p) = params.iter().find(|p| p.num_arms() != num_arms) {
        return Err(Error::Config(format!(
            "prior support point has {} arms, expected {num_arms}",
            p.num_arms()
        )));
    }
    let dist = match weights {
        Some(w) => DiscreteDistribution::from_weights(params, w)?,
        None => DiscreteDistribution::uniform(params)?,
    };
    Ok(Prior::Joint(dist))
}

/// A fixed parameter: either `(p01, p11)` pairs for action-independent,
/// stationary-init arms, or a full parameter document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Pairs(Vec<(f64, f64)>),
    Full(SystemParameter<f64>),
}

impl ThetaSpec {
    pub fn build(&self) -> Result<SystemParameter<f64>> {
        match self {
            ThetaSpec::Pairs(pairs) => SystemParameter::gilbert_elliott(pairs),
            ThetaSpec::Full(p) => Ok(p.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueMethod {
    /// Exact evaluation when the node budget admits it, Monte Carlo
    /// otherwise.
    ExactIfFeasible,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValueEval {
    pub method: ValueMethod,
    /// Episodes per Monte Carlo estimate of a sampled policy's value.
    pub replications: usize,
    /// Episodes per Monte Carlo estimate of the benchmark value.
    pub benchmark_replications: usize,
    pub node_budget: usize,
}

impl Default for ValueEval {
    fn default() -> Self {
        Self {
            method: ValueMethod::ExactIfFeasible,
            replications: 1000,
            benchmark_replications: 100_000,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Budget for prior-averaged benchmark values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorValue {
    pub draws: usize,
    pub episodes_per_draw: usize,
}

impl Default for PriorValue {
    fn default() -> Self {
        Self {
            draws: 10_000,
            episodes_per_draw: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "K")]
    pub num_arms: usize,
    #[serde(rename = "N")]
    pub n_active: usize,
    #[serde(rename = "L")]
    pub episode_length: usize,
    #[serde(rename = "m")]
    pub episodes: usize,
    pub mapping_name: String,
    #[serde(default)]
    pub prior: PriorSpec,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<ThetaSpec>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub value_eval: ValueEval,
    #[serde(default)]
    pub prior_value: PriorValue,
    #[serde(default = "default_dp_budget")]
    pub dp_budget: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Directory relative support files are resolved against; set when
    /// loading from a file.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_replications() -> usize {
    100
}

fn default_dp_budget() -> usize {
    DEFAULT_DP_BUDGET
}

fn default_delta() -> f64 {
    0.01
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn mapping(&self) -> Result<PolicyMapping> {
        Ok(match self.mapping_name.parse()? {
            PolicyMapping::OptimalDp { .. } => PolicyMapping::OptimalDp { budget: self.dp_budget },
            m => m,
        })
    }

    pub fn prior(&self) -> Result<Prior<f64>> {
        self.prior.build(self.num_arms, self.base_dir.as_deref())
    }

    pub fn theta_star(&self) -> Result<SystemParameter<f64>> {
        let spec = self
            .theta_star
            .as_ref()
            .ok_or_else(|| Error::Config("frequentist mode needs theta_star".into()))?;
        spec.build()
    }

    /// Checks sizes, names and, in frequentist mode, that `theta_star` has
    /// positive prior mass.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.num_arms == 0 {
            return fail("K must be at least 1".into());
        }
        if self.n_active == 0 || self.n_active > self.num_arms {
            return fail(format!("N must be in 1..={}, got {}", self.num_arms, self.n_active));
        }
        if self.episode_length == 0 {
            return fail("L must be at least 1".into());
        }
        if self.episodes == 0 {
            return fail("m must be at least 1".into());
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.value_eval.replications == 0 || self.value_eval.benchmark_replications == 0 {
            return fail("value_eval replications must be at least 1".into());
        }
        if self.prior_value.draws == 0 || self.prior_value.episodes_per_draw == 0 {
            return fail("prior_value draws and episodes_per_draw must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must be in (0, 1), got {}", self.delta));
        }
        self.mapping()?;
        let prior = self.prior()?;
        if self.mode == Mode::Frequentist {
            let theta = self.theta_star()?;
            if theta.num_arms() != self.num_arms {
                return fail(format!("theta_star has {} arms, expected {}", theta.num_arms(), self.num_arms));
            }
            if prior.mass(&theta) <= 0.0 {
                return fail("theta_star is not a support point with positive prior mass".into());
            }
        }
        Ok(())
    }
}
