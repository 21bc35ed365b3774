//! System parameters, actions, history summaries and the episodic
//! environment.

use std::fmt;

use rand::Rng;
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::policies::Policy;
use crate::scalar::Real;

// ── Parameters ───────────────────────────────────────────────────────────

/// One arm: transition chains when pulled and when resting, plus the
/// probability that the arm starts an episode in state 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmModel<T> {
    pub active: Chain<T>,
    pub passive: Chain<T>,
    pub initial_rate: T,
}

impl<T: Real> ArmModel<T> {
    pub fn new(active: Chain<T>, passive: Chain<T>, initial_rate: T) -> Result<Self> {
        if !initial_rate.is_probability() {
            return Err(Error::InvalidProbability {
                what: "initial_rate",
                value: initial_rate.as_f64(),
            });
        }
        Ok(Self {
            active,
            passive,
            initial_rate,
        })
    }

    /// Action-independent chain started from its stationary distribution
    /// (the Gilbert-Elliott channel).
    pub fn stationary_init(chain: Chain<T>) -> Result<Self> {
        Self::new(chain, chain, chain.stationary()?)
    }

    pub fn gilbert_elliott(p01: T, p11: T) -> Result<Self> {
        Self::stationary_init(Chain::new(p01, p11)?)
    }

    /// True when pulling the arm does not change its dynamics.
    pub fn is_action_independent(&self) -> bool {
        self.active == self.passive
    }

    /// Probability that the arm is in state 1 given its summary. One active
    /// step follows a pull, every later step is passive. An unobserved arm at
    /// `since = t` has been passive for `t - 1` steps.
    pub fn belief(&self, summary: &ArmSummary) -> T {
        let rest = summary.since.saturating_sub(1);
        match summary.last {
            LastObs::Unobserved => self.passive.propagate_belief_closed(self.initial_rate, rest),
            LastObs::Bit(r) => {
                let start = if r { T::one() } else { T::zero() };
                if summary.since == 0 {
                    return start;
                }
                let after_pull = self.active.step_belief(start);
                self.passive.propagate_belief_closed(after_pull, rest)
            }
        }
    }
}

/// Full system parameter: one [`ArmModel`] per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParameter<T> {
    arms: Vec<ArmModel<T>>,
}

impl<T: Real> SystemParameter<T> {
    pub fn new(arms: Vec<ArmModel<T>>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::InvalidModel("at least one arm is required".into()));
        }
        Ok(Self { arms })
    }

    /// Gilbert-Elliott system from `(p01, p11)` pairs.
    pub fn gilbert_elliott(pairs: &[(T, T)]) -> Result<Self> {
        let arms = pairs
            .iter()
            .map(|&(p01, p11)| ArmModel::gilbert_elliott(p01, p11))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms)
    }

    #[inline]
    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    #[inline]
    pub fn arms(&self) -> &[ArmModel<T>] {
        &self.arms
    }

    #[inline]
    pub fn arm(&self, k: usize) -> &ArmModel<T> {
        &self.arms[k]
    }

    /// Belief that arm `k` is in state 1 under this parameter.
    #[inline]
    pub fn belief(&self, h: &HistorySummary, k: usize) -> T {
        self.arms[k].belief(&h.arms[k])
    }

    pub fn beliefs(&self, h: &HistorySummary) -> Vec<T> {
        (0..self.num_arms()).map(|k| self.belief(h, k)).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("system parameter", e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct ArmDoc {
    p01_active: f64,
    p11_active: f64,
    p01_passive: f64,
    p11_passive: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_rate: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamDoc {
    arms: Vec<ArmDoc>,
}

impl<T: Real> Serialize for SystemParameter<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = ParamDoc {
            arms: self
                .arms
                .iter()
                .map(|a| ArmDoc {
                    p01_active: a.active.p01().as_f64(),
                    p11_active: a.active.p11().as_f64(),
                    p01_passive: a.passive.p01().as_f64(),
                    p11_passive: a.passive.p11().as_f64(),
                    initial_rate: Some(a.initial_rate.as_f64()),
                })
                .collect(),
        };
        doc.serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for SystemParameter<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = ParamDoc::deserialize(deserializer)?;
        let arms = doc
            .arms
            .into_iter()
            .map(|a| {
                let active = Chain::new(T::of(a.p01_active), T::of(a.p11_active))?;
                let passive = Chain::new(T::of(a.p01_passive), T::of(a.p11_passive))?;
                match a.initial_rate {
                    Some(rate) => ArmModel::new(active, passive, T::of(rate)),
                    None if active == passive => ArmModel::stationary_init(active),
                    None => Err(Error::InvalidModel(
                        "initial_rate may only be omitted when active and passive chains agree"
                            .into(),
                    )),
                }
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        SystemParameter::new(arms).map_err(D::Error::custom)
    }
}

// ── Actions and histories ────────────────────────────────────────────────

/// Sorted set of the arms pulled in one round.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    active: Vec<usize>,
}

impl Action {
    /// Validates that `arms` holds `n_active` distinct indices below
    /// `num_arms`.
    pub fn new(mut arms: Vec<usize>, num_arms: usize, n_active: usize) -> Result<Self> {
        arms.sort_unstable();
        if arms.len() != n_active {
            return Err(Error::InvalidAction(format!(
                "expected {n_active} arms, got {}",
                arms.len()
            )));
        }
        if arms.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidAction(format!("duplicate arm in {arms:?}")));
        }
        if let Some(&k) = arms.last() {
            if k >= num_arms {
                return Err(Error::InvalidAction(format!(
                    "arm {k} out of range for {num_arms} arms"
                )));
            }
        }
        Ok(Self { active: arms })
    }

    /// Caller guarantees `arms` is sorted and distinct.
    pub(crate) fn from_sorted(arms: Vec<usize>) -> Self {
        debug_assert!(arms.windows(2).all(|w| w[0] < w[1]));
        Self { active: arms }
    }

    #[inline]
    pub fn arms(&self) -> &[usize] {
        &self.active
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.active.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    #[inline]
    pub fn contains(&self, k: usize) -> bool {
        self.active.binary_search(&k).is_ok()
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.active)
    }
}

/// Last observation of an arm within the current episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LastObs {
    Unobserved,
    Bit(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArmSummary {
    pub last: LastObs,
    /// Rounds since the last observation; equals the round index `t` for an
    /// arm never pulled this episode.
    pub since: usize,
}

/// Per-arm `(last observation, rounds since)` compression of an episode's
/// history. Beliefs are computed from it against any parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HistorySummary {
    arms: Vec<ArmSummary>,
}

impl HistorySummary {
    /// Summary at round 1 of an episode.
    pub fn fresh(num_arms: usize) -> Self {
        Self {
            arms: vec![
                ArmSummary {
                    last: LastObs::Unobserved,
                    since: 1,
                };
                num_arms
            ],
        }
    }

    pub fn from_arms(arms: Vec<ArmSummary>) -> Self {
        Self { arms }
    }

    #[inline]
    pub fn arms(&self) -> &[ArmSummary] {
        &self.arms
    }

    #[inline]
    pub fn arm(&self, k: usize) -> &ArmSummary {
        &self.arms[k]
    }

    #[inline]
    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Pulled arms record their reward with `since = 1`; the rest age by one
    /// round. `rewards` is aligned with `action.arms()`.
    pub fn apply(&mut self, action: &Action, rewards: &[bool]) {
        debug_assert_eq!(action.len(), rewards.len());
        for s in &mut self.arms {
            s.since += 1;
        }
        for (&k, &x) in action.arms().iter().zip(rewards) {
            self.arms[k] = ArmSummary {
                last: LastObs::Bit(x),
                since: 1,
            };
        }
    }

    pub fn updated(&self, action: &Action, rewards: &[bool]) -> Self {
        let mut next = self.clone();
        next.apply(action, rewards);
        next
    }
}

// ── Episodes ─────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub action: Action,
    /// One reward per arm in `action`, in the same order.
    pub rewards: Vec<bool>,
}

/// Actions and observed rewards of one episode, in round order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub steps: Vec<Step>,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_reward(&self) -> usize {
        self.steps
            .iter()
            .map(|s| s.rewards.iter().filter(|&&x| x).count())
            .sum()
    }

    /// Summaries in force before each step, plus the final one.
    pub fn summaries(&self, num_arms: usize) -> impl Iterator<Item = (&Step, HistorySummary)> + '_ {
        let mut h = HistorySummary::fresh(num_arms);
        self.steps.iter().map(move |step| {
            let before = h.clone();
            h.apply(&step.action, &step.rewards);
            (step, before)
        })
    }

    pub fn validate(&self, num_arms: usize, n_active: usize, length: usize) -> Result<()> {
        if self.steps.len() != length {
            return Err(Error::InvalidModel(format!(
                "episode record has {} steps, expected {length}",
                self.steps.len()
            )));
        }
        for step in &self.steps {
            Action::new(step.action.arms().to_vec(), num_arms, n_active)?;
            if step.rewards.len() != n_active {
                return Err(Error::InvalidModel(format!(
                    "step has {} rewards for {n_active} active arms",
                    step.rewards.len()
                )));
            }
        }
        Ok(())
    }
}

/// Hidden-state simulator for one episode at a time. Only the rewards of
/// pulled arms leave this type.
#[derive(Debug, Clone)]
pub struct Environment<T> {
    param: SystemParameter<T>,
    hidden: Vec<bool>,
    clock: usize,
    episode_length: usize,
    n_active: usize,
}

impl<T: Real> Environment<T> {
    pub fn new(param: SystemParameter<T>, n_active: usize, episode_length: usize) -> Result<Self> {
        let k = param.num_arms();
        if n_active == 0 || n_active > k {
            return Err(Error::InvalidModel(format!(
                "arms per round must be in 1..={k}, got {n_active}"
            )));
        }
        Ok(Self {
            hidden: vec![false; k],
            clock: episode_length + 1,
            param,
            episode_length,
            n_active,
        })
    }

    pub fn param(&self) -> &SystemParameter<T> {
        &self.param
    }

    pub fn episode_length(&self) -> usize {
        self.episode_length
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    /// Round about to be played (1-based).
    pub fn clock(&self) -> usize {
        self.clock
    }

    pub fn num_arms(&self) -> usize {
        self.param.num_arms()
    }

    /// Draws fresh hidden states and rewinds the clock to round 1.
    pub fn reset_episode<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for (state, arm) in self.hidden.iter_mut().zip(&self.param.arms) {
            *state = T::of(rng.gen::<f64>()) < arm.initial_rate;
        }
        self.clock = 1;
    }

    /// Reads the pulled arms' states as rewards, then moves every arm one
    /// step along its active or passive chain.
    pub fn apply_action<R: Rng + ?Sized>(&mut self, action: &Action, rng: &mut R) -> Result<Vec<bool>> {
        if self.clock > self.episode_length {
            return Err(Error::EpisodeExhausted {
                clock: self.clock,
                length: self.episode_length,
            });
        }
        if action.len() != self.n_active || action.arms().iter().any(|&k| k >= self.num_arms()) {
            return Err(Error::InvalidAction(format!(
                "{action} is not a set of {} arms out of {}",
                self.n_active,
                self.num_arms()
            )));
        }
        let rewards = action.arms().iter().map(|&k| self.hidden[k]).collect();
        self.transition(action, rng);
        self.clock += 1;
        Ok(rewards)
    }

    fn transition<R: Rng + ?Sized>(&mut self, action: &Action, rng: &mut R) {
        let mut pulled = action.arms().iter().peekable();
        for (k, (state, arm)) in self.hidden.iter_mut().zip(&self.param.arms).enumerate() {
            let chain = if pulled.peek() == Some(&&k) {
                pulled.next();
                &arm.active
            } else {
                &arm.passive
            };
            *state = chain.sample_step(*state, rng);
        }
    }

    /// Plays a whole episode under `policy` and records it.
    pub fn run_episode<R: Rng + ?Sized>(&mut self, policy: &dyn Policy, rng: &mut R) -> Result<EpisodeRecord> {
        self.reset_episode(rng);
        let mut h = HistorySummary::fresh(self.num_arms());
        let mut steps = Vec::with_capacity(self.episode_length);
        for t in 1..=self.episode_length {
            let action = policy.act(t, &h);
            let rewards = self.apply_action(&action, rng)?;
            h.apply(&action, &rewards);
            steps.push(Step { action, rewards });
        }
        Ok(EpisodeRecord { steps })
    }

    /// Total reward of one episode under `policy`, without recording it.
    pub fn episode_reward<R: Rng + ?Sized>(&mut self, policy: &dyn Policy, rng: &mut R) -> Result<usize> {
        self.reset_episode(rng);
        let mut h = HistorySummary::fresh(self.num_arms());
        let mut total = 0;
        for t in 1..=self.episode_length {
            let action = policy.act(t, &h);
            let rewards = self.apply_action(&action, rng)?;
            total += rewards.iter().filter(|&&x| x).count();
            h.apply(&action, &rewards);
        }
        Ok(total)
    }

    #[cfg(test)]
    pub(crate) fn hidden(&self) -> &[bool] {
        &self.hidden
    }

    #[cfg(test)]
    pub(crate) fn set_hidden(&mut self, states: &[bool]) {
        self.hidden.copy_from_slice(states);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn ge(pairs: &[(f64, f64)]) -> SystemParameter<f64> {
        SystemParameter::gilbert_elliott(pairs).unwrap()
    }

    fn fixed_rate_arm(p01: f64, p11: f64, rate: f64) -> ArmModel<f64> {
        let c = Chain::new(p01, p11).unwrap();
        ArmModel::new(c, c, rate).unwrap()
    }

    #[test]
    fn action_validation() {
        assert_eq!(Action::new(vec![2, 0], 3, 2).unwrap().arms(), &[0, 2]);
        assert!(Action::new(vec![1, 1], 3, 2).is_err());
        assert!(Action::new(vec![3], 3, 1).is_err());
        assert!(Action::new(vec![0], 3, 2).is_err());
    }

    #[test]
    fn reset_with_deterministic_rates() {
        let mut r = rng::stream(3, 0);
        let ones = SystemParameter::new(vec![fixed_rate_arm(0.2, 0.6, 1.0); 3]).unwrap();
        let mut env = Environment::new(ones, 1, 4).unwrap();
        env.reset_episode(&mut r);
        assert!(env.hidden().iter().all(|&s| s));
        assert_eq!(env.clock(), 1);

        let zeros = SystemParameter::new(vec![fixed_rate_arm(0.2, 0.6, 0.0); 3]).unwrap();
        let mut env = Environment::new(zeros, 1, 4).unwrap();
        env.reset_episode(&mut r);
        assert!(env.hidden().iter().all(|&s| !s));
    }

    #[test]
    fn reset_frequency() {
        let mut r = rng::stream(4, 0);
        let p = SystemParameter::new(vec![fixed_rate_arm(0.2, 0.6, 0.5); 2]).unwrap();
        let mut env = Environment::new(p, 1, 1).unwrap();
        let mut counts = [0usize; 2];
        let reps = 100_000;
        for _ in 0..reps {
            env.reset_episode(&mut r);
            for (c, &s) in counts.iter_mut().zip(env.hidden()) {
                *c += s as usize;
            }
        }
        for c in counts {
            assert_abs_diff_eq!(c as f64 / reps as f64, 0.5, epsilon = 0.01);
        }
    }

    #[test]
    fn reward_is_read_before_transition() {
        let mut r = rng::stream(5, 0);
        let p = SystemParameter::new(vec![fixed_rate_arm(0.0, 0.0, 0.5); 2]).unwrap();
        let mut env = Environment::new(p, 1, 3).unwrap();
        env.reset_episode(&mut r);
        env.set_hidden(&[true, false]);
        let a = Action::new(vec![0], 2, 1).unwrap();
        assert_eq!(env.apply_action(&a, &mut r).unwrap(), vec![true]);
        assert!(env.hidden().iter().all(|&s| !s));
        assert_eq!(env.clock(), 2);
    }

    #[test]
    fn exhausted_episode_errors() {
        let mut r = rng::stream(6, 0);
        let mut env = Environment::new(ge(&[(0.3, 0.7)]), 1, 1).unwrap();
        let a = Action::new(vec![0], 1, 1).unwrap();
        assert!(matches!(env.apply_action(&a, &mut r), Err(Error::EpisodeExhausted { .. })));
        env.reset_episode(&mut r);
        assert_eq!(env.apply_action(&a, &mut r).unwrap().len(), 1);
        assert!(matches!(env.apply_action(&a, &mut r), Err(Error::EpisodeExhausted { .. })));
    }

    #[test]
    fn stationary_marginal_persists() {
        let mut r = rng::stream(7, 0);
        let mut env = Environment::new(ge(&[(0.3, 0.7)]), 1, 2).unwrap();
        let a = Action::new(vec![0], 1, 1).unwrap();
        let reps = 100_000;
        let mut ones = 0;
        for _ in 0..reps {
            env.reset_episode(&mut r);
            env.apply_action(&a, &mut r).unwrap();
            ones += env.apply_action(&a, &mut r).unwrap()[0] as usize;
        }
        assert_abs_diff_eq!(ones as f64 / reps as f64, 0.5, epsilon = 0.01);
    }

    #[test]
    fn history_updates() {
        let h = HistorySummary::fresh(3);
        let a = Action::new(vec![0], 3, 1).unwrap();
        let h1 = h.updated(&a, &[true]);
        assert_eq!(*h1.arm(0), ArmSummary { last: LastObs::Bit(true), since: 1 });
        assert_eq!(*h1.arm(1), ArmSummary { last: LastObs::Unobserved, since: 2 });

        let mut h = HistorySummary::from_arms(vec![
            ArmSummary { last: LastObs::Bit(false), since: 3 },
            ArmSummary { last: LastObs::Unobserved, since: 3 },
        ]);
        h.apply(&Action::new(vec![1], 2, 1).unwrap(), &[false]);
        assert_eq!(*h.arm(0), ArmSummary { last: LastObs::Bit(false), since: 4 });

        let length = 5;
        let mut h = HistorySummary::fresh(2);
        let a = Action::new(vec![0], 2, 1).unwrap();
        for _ in 0..length {
            h.apply(&a, &[true]);
        }
        assert_eq!(*h.arm(1), ArmSummary { last: LastObs::Unobserved, since: length + 1 });
    }

    #[test]
    fn belief_examples() {
        let arm = ArmModel::gilbert_elliott(0.3, 0.7).unwrap();
        let played = ArmSummary { last: LastObs::Bit(true), since: 1 };
        assert_abs_diff_eq!(arm.belief(&played), 0.7, epsilon = 1e-15);

        let fresh = ArmSummary { last: LastObs::Unobserved, since: 1 };
        assert_abs_diff_eq!(arm.belief(&fresh), 0.5, epsilon = 1e-15);

        let sure = fixed_rate_arm(0.3, 0.7, 1.0);
        let aged = ArmSummary { last: LastObs::Unobserved, since: 3 };
        assert_abs_diff_eq!(sure.belief(&aged), 0.58, epsilon = 1e-12);
    }

    #[test]
    fn belief_uses_active_then_passive() {
        let arm = ArmModel::new(
            Chain::new(0.1, 0.9).unwrap(),
            Chain::new(0.5, 0.5).unwrap(),
            0.5,
        )
        .unwrap();
        let s = ArmSummary { last: LastObs::Bit(true), since: 1 };
        assert_abs_diff_eq!(arm.belief(&s), 0.9, epsilon = 1e-15);
        let s = ArmSummary { last: LastObs::Bit(true), since: 2 };
        assert_abs_diff_eq!(arm.belief(&s), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn unplayed_stationary_arm_keeps_its_rate() {
        let arm = ArmModel::<f64>::gilbert_elliott(0.2, 0.9).unwrap();
        let w = arm.initial_rate;
        for t in 1..60 {
            let s = ArmSummary { last: LastObs::Unobserved, since: t };
            assert!((arm.belief(&s) - w).abs() < 1e-12);
        }
    }

    #[test]
    fn json_schema() {
        let text = r#"{"arms":[
            {"p01_active":0.3,"p11_active":0.7,"p01_passive":0.3,"p11_passive":0.7},
            {"p01_active":0.1,"p11_active":0.9,"p01_passive":0.5,"p11_passive":0.5,"initial_rate":0.25}
        ]}"#;
        let p = SystemParameter::<f64>::from_json(text).unwrap();
        assert_abs_diff_eq!(p.arm(0).initial_rate, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.arm(1).initial_rate, 0.25);
        let back = SystemParameter::<f64>::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);

        let mixed = r#"{"arms":[{"p01_active":0.3,"p11_active":0.7,"p01_passive":0.5,"p11_passive":0.5}]}"#;
        assert!(SystemParameter::<f64>::from_json(mixed).is_err());
        assert!(SystemParameter::<f64>::from_json(r#"{"arms":[]}"#).is_err());
    }
}
