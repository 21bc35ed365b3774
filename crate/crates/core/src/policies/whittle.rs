//! Average-reward Whittle index for action-independent two-state arms.
//!
//! With `w` the stationary rate, `T^k` the k-step passive belief map and
//! `q = T(p11)`:
//!
//! Positively correlated arms (`p11 >= p01`):
//!
//! ```text
//! W(b) = b                                              b <= p01 or b >= p11
//! W(b) = b / (1 - p11 + b)                              w <= b < p11
//! W(b) = (d (L + 1) + T^L(p01)) / (1 - p11 + d L + T^L(p01))   p01 < b < w
//! ```
//!
//! where `d = b - T(b)` and `L = min { k : T^k(p01) > b }`.
//!
//! Negatively correlated arms (`p11 < p01`):
//!
//! ```text
//! W(b) = b                                              b <= p11 or b >= p01
//! W(b) = p01 / (1 + p01 - b)                            q <= b < p01
//! W(b) = p01 / (1 + p01 - q)                            w <= b < q
//! W(b) = (b - T(b) + p01) / (1 + p01 - q - b + T(b))    p11 < b < w
//! ```

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::model::{ArmModel, HistorySummary, SystemParameter};
use crate::scalar::Real;

use super::{top_n, Policy};

/// Hard cap on the passive-steps search; `T^k(p01)` approaches `w`
/// geometrically so this is only hit when `b` is within rounding of `w`.
const MAX_PASSIVE_STEPS: usize = 1 << 20;

/// Whittle index of `arm` at `belief`.
pub fn whittle_index<T: Real>(arm: &ArmModel<T>, belief: T) -> Result<T> {
    if !arm.is_action_independent() {
        return Err(Error::UnsupportedModel(
            "Whittle index requires identical active and passive chains".into(),
        ));
    }
    if !belief.is_probability() {
        return Err(Error::InvalidProbability {
            what: "belief",
            value: belief.as_f64(),
        });
    }
    let w = arm.active.stationary()?;
    Ok(index_with_stationary(&arm.active, w, belief))
}

fn index_with_stationary<T: Real>(c: &Chain<T>, w: T, b: T) -> T {
    let (p01, p11) = (c.p01(), c.p11());
    let one = T::one();
    if p11 >= p01 {
        if b <= p01 || b >= p11 {
            return b;
        }
        if b >= w {
            return b / (one - p11 + b);
        }
        let mut steps = 1usize;
        let mut reached = c.step_belief(p01);
        while reached <= b && steps < MAX_PASSIVE_STEPS {
            reached = c.step_belief(reached);
            steps += 1;
        }
        if reached <= b {
            return b / (one - p11 + b);
        }
        let l = T::of(steps as f64);
        let d = b - c.step_belief(b);
        (d * (l + one) + reached) / (one - p11 + d * l + reached)
    } else {
        if b <= p11 || b >= p01 {
            return b;
        }
        let q = c.step_belief(p11);
        if b >= q {
            p01 / (one + p01 - b)
        } else if b >= w {
            p01 / (one + p01 - q)
        } else {
            let tb = c.step_belief(b);
            (b - tb + p01) / (one + p01 - q - b + tb)
        }
    }
}

/// Pulls the arms with the largest Whittle indices at their current
/// beliefs.
#[derive(Debug, Clone)]
pub struct WhittlePolicy<T> {
    param: SystemParameter<T>,
    stationary: Vec<T>,
    n_active: usize,
}

impl<T: Real> WhittlePolicy<T> {
    pub fn new(param: SystemParameter<T>, n_active: usize) -> Result<Self> {
        let stationary = param
            .arms()
            .iter()
            .map(|arm| {
                if !arm.is_action_independent() {
                    return Err(Error::UnsupportedModel(
                        "Whittle index requires identical active and passive chains".into(),
                    ));
                }
                arm.active.stationary()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            param,
            stationary,
            n_active,
        })
    }

    pub fn indices(&self, h: &HistorySummary) -> Vec<T> {
        self.param
            .arms()
            .iter()
            .zip(&self.stationary)
            .zip(h.arms())
            .map(|((arm, &w), s)| index_with_stationary(&arm.active, w, arm.belief(s)))
            .collect()
    }
}

impl<T: Real> Policy for WhittlePolicy<T> {
    fn name(&self) -> &str {
        "whittle"
    }

    fn n_active(&self) -> usize {
        self.n_active
    }

    fn act(&self, _t: usize, h: &HistorySummary) -> Action {
        top_n(&self.indices(h), self.n_active)
    }
}

use crate::model::Action;
