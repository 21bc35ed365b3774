//! Deterministic policies and the mappings that build them from a system
//! parameter.

mod optimal;
mod whittle;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Action, HistorySummary, SystemParameter};
use crate::scalar::Real;

pub use optimal::{OptimalPolicy, DEFAULT_DP_BUDGET};
pub use whittle::{whittle_index, WhittlePolicy};

/// A pure decision rule `(t, h) -> Action`.
pub trait Policy: Send + Sync {
    fn name(&self) -> &str;

    /// Arms pulled per round.
    fn n_active(&self) -> usize;

    /// Action for round `t` (1-based) given the episode's summary so far.
    fn act(&self, t: usize, h: &HistorySummary) -> Action;
}

/// Resolution at which scores are compared. Indices and beliefs computed
/// along different arithmetic paths can differ in the last bits for arms
/// that are tied in exact arithmetic; snapping to this grid lets the
/// lowest-index rule decide those ties.
const TIE_RESOLUTION: f64 = 1.0 / (1u64 << 40) as f64;

fn tie_key<T: Real>(score: T) -> Option<f64> {
    let s = score.as_f64();
    (!s.is_nan()).then(|| (s / TIE_RESOLUTION).round())
}

/// Picks the `n` largest scores, breaking ties by lowest arm index. Scores
/// are compared on a grid of spacing 2^-40; NaN ranks last.
pub fn top_n<T: Real>(scores: &[T], n: usize) -> Action {
    let keys: Vec<Option<f64>> = scores.iter().map(|&s| tie_key(s)).collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let rank = match (keys[a], keys[b]) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        rank.then(a.cmp(&b))
    });
    order.truncate(n);
    order.sort_unstable();
    Action::from_sorted(order)
}

/// Which policy a parameter maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyMapping {
    BestFixed,
    Myopic,
    Whittle,
    OptimalDp { budget: usize },
}

impl PolicyMapping {
    pub const NAMES: [&'static str; 4] = ["best_fixed", "myopic", "whittle", "optimal_dp"];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyMapping::BestFixed => "best_fixed",
            PolicyMapping::Myopic => "myopic",
            PolicyMapping::Whittle => "whittle",
            PolicyMapping::OptimalDp { .. } => "optimal_dp",
        }
    }

    /// Builds the policy for `param`. `horizon` is the episode length, used
    /// only by the dynamic-programming mapping.
    pub fn build<T: Real>(
        &self,
        param: &SystemParameter<T>,
        n_active: usize,
        horizon: usize,
    ) -> Result<Box<dyn Policy>> {
        check_n_active(param, n_active)?;
        Ok(match *self {
            PolicyMapping::BestFixed => Box::new(BestFixedPolicy::new(param, n_active)?),
            PolicyMapping::Myopic => Box::new(MyopicPolicy::new(param.clone(), n_active)),
            PolicyMapping::Whittle => Box::new(WhittlePolicy::new(param.clone(), n_active)?),
            PolicyMapping::OptimalDp { budget } => {
                Box::new(OptimalPolicy::new(param.clone(), n_active, horizon, budget)?)
            }
        })
    }
}

impl fmt::Display for PolicyMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyMapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best_fixed" => Ok(PolicyMapping::BestFixed),
            "myopic" => Ok(PolicyMapping::Myopic),
            "whittle" => Ok(PolicyMapping::Whittle),
            "optimal_dp" => Ok(PolicyMapping::OptimalDp {
                budget: DEFAULT_DP_BUDGET,
            }),
            other => Err(Error::Config(format!(
                "unknown mapping {other:?}; expected one of {:?}",
                Self::NAMES
            ))),
        }
    }
}

fn check_n_active<T: Real>(param: &SystemParameter<T>, n_active: usize) -> Result<()> {
    if n_active == 0 || n_active > param.num_arms() {
        return Err(Error::InvalidModel(format!(
            "arms per round must be in 1..={}, got {n_active}",
            param.num_arms()
        )));
    }
    Ok(())
}

// ── Best fixed arms ──────────────────────────────────────────────────────

/// Always pulls the arms with the largest stationary rates of their active
/// chains.
#[derive(Debug, Clone)]
pub struct BestFixedPolicy {
    action: Action,
}

impl BestFixedPolicy {
    pub fn new<T: Real>(param: &SystemParameter<T>, n_active: usize) -> Result<Self> {
        let rates = param
            .arms()
            .iter()
            .map(|a| a.active.stationary())
            .collect::<Result<Vec<T>>>()?;
        Ok(Self {
            action: top_n(&rates, n_active),
        })
    }
}

impl Policy for BestFixedPolicy {
    fn name(&self) -> &str {
        "best_fixed"
    }

    fn n_active(&self) -> usize {
        self.action.len()
    }

    fn act(&self, _t: usize, _h: &HistorySummary) -> Action {
        self.action.clone()
    }
}

// ── Myopic ───────────────────────────────────────────────────────────────

/// Pulls the arms with the highest current beliefs.
#[derive(Debug, Clone)]
pub struct MyopicPolicy<T> {
    param: SystemParameter<T>,
    n_active: usize,
}

impl<T: Real> MyopicPolicy<T> {
    pub fn new(param: SystemParameter<T>, n_active: usize) -> Self {
        Self { param, n_active }
    }
}

impl<T: Real> Policy for MyopicPolicy<T> {
    fn name(&self) -> &str {
        "myopic"
    }

    fn n_active(&self) -> usize {
        self.n_active
    }

    fn act(&self, _t: usize, h: &HistorySummary) -> Action {
        top_n(&self.param.beliefs(h), self.n_active)
    }
}
