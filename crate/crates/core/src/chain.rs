//! Two-state Markov chains: transitions, stationary rates and belief
//! propagation.
//!
//! State 1 is the "good" state that yields reward 1 when observed. A chain is
//! the row-stochastic matrix
//!
//! ```text
//! [ 1 - p01   p01 ]
//! [ 1 - p11   p11 ]
//! ```
//!
//! and a belief is the probability of being in state 1.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{clamp_unit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chain<T> {
    p01: T,
    p11: T,
}

impl<T: Real> Chain<T> {
    pub fn new(p01: T, p11: T) -> Result<Self> {
        for (what, value) in [("p01", p01), ("p11", p11)] {
            if !value.is_probability() {
                return Err(Error::InvalidProbability {
                    what,
                    value: value.as_f64(),
                });
            }
        }
        Ok(Self { p01, p11 })
    }

    /// Chain whose next state does not depend on the current one.
    pub fn memoryless(p: T) -> Result<Self> {
        Self::new(p, p)
    }

    #[inline]
    pub fn p01(&self) -> T {
        self.p01
    }

    #[inline]
    pub fn p11(&self) -> T {
        self.p11
    }

    /// Second eigenvalue `p11 - p01`; positive for positively correlated
    /// chains.
    #[inline]
    pub fn correlation(&self) -> T {
        self.p11 - self.p01
    }

    /// Identity matrix: both states absorbing.
    #[inline]
    pub fn is_degenerate(&self) -> bool {
        self.p01 == T::zero() && self.p11 == T::one()
    }

    /// Long-run probability of state 1, `p01 / (p01 + 1 - p11)`.
    pub fn stationary(&self) -> Result<T> {
        if self.is_degenerate() {
            return Err(Error::DegenerateChain);
        }
        Ok(self.p01 / (self.p01 + T::one() - self.p11))
    }

    /// One step of belief propagation, `b * p11 + (1 - b) * p01`.
    #[inline]
    pub fn step_belief(&self, belief: T) -> T {
        belief * self.p11 + (T::one() - belief) * self.p01
    }

    /// Belief after `n` steps starting from `belief0`, by direct recursion.
    pub fn propagate_belief(&self, belief0: T, n: usize) -> T {
        let mut b = belief0;
        for _ in 0..n {
            b = self.step_belief(b);
        }
        clamp_unit(b)
    }

    /// Same as [`Chain::propagate_belief`] via
    /// `w + (p11 - p01)^n (b - w)` with `w` the stationary rate. Falls back to
    /// the recursion for the degenerate chain, which never moves.
    pub fn propagate_belief_closed(&self, belief0: T, n: usize) -> T {
        if n == 0 {
            return belief0;
        }
        match self.stationary() {
            Ok(w) => {
                let decay = self.correlation().powi(n.min(i32::MAX as usize) as i32);
                clamp_unit(w + decay * (belief0 - w))
            }
            Err(_) => belief0,
        }
    }

    /// Next hidden state from `state`, using exactly one uniform draw.
    pub fn sample_step<R: Rng + ?Sized>(&self, state: bool, rng: &mut R) -> bool {
        let p = if state { self.p11 } else { self.p01 };
        T::of(rng.gen::<f64>()) < p
    }
}
