//! Episode value functions: exact evaluation over reward outcomes, Monte
//! Carlo evaluation, the one-step Bellman operator and checks built on them.
//!
//! Exact evaluation branches on the `2^N` reward vectors of each round rather
//! than on the `2^K` hidden-state vectors: given a summary, the pulled arms'
//! rewards are independent with probabilities equal to their beliefs.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Environment, HistorySummary, SystemParameter};
use crate::policies::Policy;
use crate::rng;
use crate::scalar::Real;
use crate::stats::MeanVar;

pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;
pub const DEFAULT_MC_REPLICATIONS: usize = 10_000;

/// Replications per parallel work unit. Fixed so results do not depend on
/// the worker count.
const MC_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// Expected total reward of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub method: Method,
    pub replications: usize,
}

impl ValueEstimate {
    pub fn exact(mean: f64) -> Self {
        Self {
            mean,
            stderr: 0.0,
            method: Method::Exact,
            replications: 0,
        }
    }
}

/// Probabilities of every reward vector for independent Bernoulli rewards
/// with the given success rates. Entry `x` corresponds to reward `i` being
/// bit `i` of `x`.
pub fn outcome_probabilities<T: Real>(rates: &[T]) -> Vec<T> {
    let mut probs = vec![T::one()];
    for &rate in rates {
        let mut next = vec![T::zero(); probs.len() * 2];
        let half = probs.len();
        for (x, &p) in probs.iter().enumerate() {
            next[x] = p * (T::one() - rate);
            next[x + half] = p * rate;
        }
        probs = next;
    }
    probs
}

fn outcome_bits(x: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (x >> i) & 1 == 1).collect()
}

// ── Exact evaluation ─────────────────────────────────────────────────────

/// Memoised evaluator of `V(t, h)` for one parameter and policy.
pub struct ExactEvaluator<'a, T> {
    param: &'a SystemParameter<T>,
    policy: &'a dyn Policy,
    horizon: usize,
    budget: usize,
    memo: HashMap<(usize, HistorySummary), T>,
}

impl<'a, T: Real> ExactEvaluator<'a, T> {
    pub fn new(param: &'a SystemParameter<T>, policy: &'a dyn Policy, horizon: usize, budget: usize) -> Self {
        Self {
            param,
            policy,
            horizon,
            budget,
            memo: HashMap::new(),
        }
    }

    /// Expected reward collected from round `t` through the horizon,
    /// starting from summary `h`. Zero past the horizon.
    pub fn value(&mut self, t: usize, h: &HistorySummary) -> Result<T> {
        if t > self.horizon {
            return Ok(T::zero());
        }
        if let Some(&v) = self.memo.get(&(t, h.clone())) {
            return Ok(v);
        }
        if self.memo.len() >= self.budget {
            return Err(Error::BudgetExceeded {
                count: self.memo.len() + 1,
                budget: self.budget,
            });
        }
        let action = self.policy.act(t, h);
        let rates: Vec<T> = action.arms().iter().map(|&k| self.param.belief(h, k)).collect();
        let mut v: T = rates.iter().copied().sum();
        if t < self.horizon {
            for (x, p) in outcome_probabilities(&rates).into_iter().enumerate() {
                if p > T::zero() {
                    let next = h.updated(&action, &outcome_bits(x, rates.len()));
                    v = v + p * self.value(t + 1, &next)?;
                }
            }
        }
        self.memo.insert((t, h.clone()), v);
        Ok(v)
    }

    pub fn states_evaluated(&self) -> usize {
        self.memo.len()
    }
}

/// `V(i, start)` for `policy` under `param` over an episode of `horizon`
/// rounds.
pub fn exact_value<T: Real>(
    param: &SystemParameter<T>,
    policy: &dyn Policy,
    horizon: usize,
    start: &HistorySummary,
    round: usize,
    budget: usize,
) -> Result<T> {
    ExactEvaluator::new(param, policy, horizon, budget).value(round, start)
}

/// Episode value from an empty history.
pub fn exact_episode_value<T: Real>(
    param: &SystemParameter<T>,
    policy: &dyn Policy,
    horizon: usize,
    budget: usize,
) -> Result<T> {
    exact_value(param, policy, horizon, &HistorySummary::fresh(param.num_arms()), 1, budget)
}

/// One application of the Bellman operator at `(t, h)`: expected immediate
/// reward of the policy's action plus the expected continuation `next`.
pub fn bellman_apply<T: Real>(
    param: &SystemParameter<T>,
    policy: &dyn Policy,
    next: &mut dyn FnMut(&HistorySummary) -> Result<T>,
    t: usize,
    h: &HistorySummary,
) -> Result<T> {
    let action = policy.act(t, h);
    let rates: Vec<T> = action.arms().iter().map(|&k| param.belief(h, k)).collect();
    let mut v: T = rates.iter().copied().sum();
    for (x, p) in outcome_probabilities(&rates).into_iter().enumerate() {
        let h_next = h.updated(&action, &outcome_bits(x, rates.len()));
        v = v + p * next(&h_next)?;
    }
    Ok(v)
}

/// Both sides of the per-episode decomposition
///
/// ```text
/// V[sampled](1, {}) - V[truth](1, {})
///     = E[truth] sum_t (B[sampled] - B[truth]) V[sampled](t + 1, .) (h_{t-1})
/// ```
///
/// where `B` is the Bellman operator of `policy` and the expectation runs
/// over summaries generated under `truth`.
pub fn telescoping_check<T: Real>(
    truth: &SystemParameter<T>,
    sampled: &SystemParameter<T>,
    policy: &dyn Policy,
    horizon: usize,
    budget: usize,
) -> Result<(T, T)> {
    let fresh = HistorySummary::fresh(truth.num_arms());
    let mut eval_sampled = ExactEvaluator::new(sampled, policy, horizon, budget);
    let mut eval_truth = ExactEvaluator::new(truth, policy, horizon, budget);
    let lhs = eval_sampled.value(1, &fresh)? - eval_truth.value(1, &fresh)?;

    let mut rhs = T::zero();
    let mut level: HashMap<HistorySummary, T> = HashMap::from([(fresh, T::one())]);
    for t in 1..=horizon {
        let mut next_level: HashMap<HistorySummary, T> = HashMap::new();
        let mut entries: Vec<(HistorySummary, T)> = level.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for (h, weight) in entries {
            let mut cont = |hn: &HistorySummary| eval_sampled.value(t + 1, hn);
            let with_sampled = bellman_apply(sampled, policy, &mut cont, t, &h)?;
            let mut cont = |hn: &HistorySummary| eval_sampled.value(t + 1, hn);
            let with_truth = bellman_apply(truth, policy, &mut cont, t, &h)?;
            rhs = rhs + weight * (with_sampled - with_truth);

            let action = policy.act(t, &h);
            let rates: Vec<T> = action.arms().iter().map(|&k| truth.belief(&h, k)).collect();
            for (x, p) in outcome_probabilities(&rates).into_iter().enumerate() {
                if p > T::zero() {
                    let hn = h.updated(&action, &outcome_bits(x, rates.len()));
                    let slot = next_level.entry(hn).or_insert_with(T::zero);
                    *slot = *slot + weight * p;
                }
            }
        }
        level = next_level;
    }
    Ok((lhs, rhs))
}

/// Both sides of
/// `sum_x |prod_i a_i^x_i (1 - a_i)^(1 - x_i) - prod_i b_i^x_i (1 - b_i)^(1 - x_i)| <= 2 sum_i |a_i - b_i|`.
pub fn product_difference_bound_check<T: Real>(a: &[T], b: &[T]) -> Result<(T, T)> {
    if a.len() != b.len() {
        return Err(Error::InvalidDistribution(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() > 12 {
        return Err(Error::InvalidDistribution(format!(
            "at most 12 coordinates supported, got {}",
            a.len()
        )));
    }
    if let Some(&bad) = a.iter().chain(b).find(|p| !p.is_probability()) {
        return Err(Error::InvalidProbability {
            what: "coordinate",
            value: bad.as_f64(),
        });
    }
    let lhs = outcome_probabilities(a)
        .into_iter()
        .zip(outcome_probabilities(b))
        .map(|(pa, pb)| (pa - pb).abs())
        .sum();
    let rhs = T::of(2.0) * a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum::<T>();
    Ok((lhs, rhs))
}

/// Cumulative regret after `values.len()` episodes computed as
/// `m * benchmark - sum(values)` and as `sum(benchmark - value)`.
pub fn cumulative_regret_forms(benchmark: f64, values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let direct = m * benchmark - values.iter().sum::<f64>();
    let per_episode = values.iter().map(|v| benchmark - v).sum();
    (direct, per_episode)
}

// ── Monte Carlo ──────────────────────────────────────────────────────────

/// Average episode reward over `replications` simulated episodes. Episode
/// `i` uses its own stream derived from `seed`, so the estimate is
/// independent of the worker count and common across policies evaluated
/// with the same seed.
pub fn mc_value_seeded<T: Real>(
    param: &SystemParameter<T>,
    policy: &dyn Policy,
    horizon: usize,
    replications: usize,
    seed: u64,
) -> Result<ValueEstimate> {
    if replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let env = Environment::new(param.clone(), policy.n_active(), horizon)?;
    let chunks = replications.div_ceil(MC_CHUNK);
    let partials = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut env = env.clone();
            let mut acc = MeanVar::new();
            let end = ((c + 1) * MC_CHUNK).min(replications);
            for i in c * MC_CHUNK..end {
                let mut stream = rng::stream(seed, i as u64);
                acc.push(env.episode_reward(policy, &mut stream)? as f64);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<MeanVar>>>()?;
    let mut total = MeanVar::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(ValueEstimate {
        mean: total.mean(),
        stderr: total.stderr(),
        method: Method::MonteCarlo,
        replications,
    })
}

/// [`mc_value_seeded`] with the seed drawn from `rng`.
pub fn mc_value<T: Real, R: rand::Rng + ?Sized>(
    param: &SystemParameter<T>,
    policy: &dyn Policy,
    horizon: usize,
    replications: usize,
    rng: &mut R,
) -> Result<ValueEstimate> {
    mc_value_seeded(param, policy, horizon, replications, rng.gen())
}

/// Exact value when the outcome tree fits in `budget`, Monte Carlo with
/// `replications` episodes otherwise.
pub fn evaluate<T: Real>(
    param: &SystemParameter<T>,
    policy: &dyn Policy,
    horizon: usize,
    budget: usize,
    replications: usize,
    seed: u64,
) -> Result<ValueEstimate> {
    if exact_state_bound(param.num_arms(), policy.n_active(), horizon) <= budget as f64 {
        match exact_episode_value(param, policy, horizon, budget) {
            Ok(v) => return Ok(ValueEstimate::exact(v.as_f64())),
            Err(Error::BudgetExceeded { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    mc_value_seeded(param, policy, horizon, replications, seed)
}

/// Upper bound on the number of `(t, h)` states exact evaluation can visit:
/// per round the smaller of the outcome-tree width `2^(N (t - 1))` and the
/// number of distinct summaries `(2t - 1)^K`.
pub fn exact_state_bound(num_arms: usize, n_active: usize, horizon: usize) -> f64 {
    (1..=horizon)
        .map(|t| {
            let tree = 2f64.powf((n_active * (t - 1)) as f64);
            let summaries = ((2 * t - 1) as f64).powi(num_arms as i32);
            tree.min(summaries)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Chain;
    use crate::model::ArmModel;
    use crate::policies::PolicyMapping;
    use approx::assert_abs_diff_eq;

    fn single(p01: f64, p11: f64, rate: f64) -> SystemParameter<f64> {
        let c = Chain::new(p01, p11).unwrap();
        SystemParameter::new(vec![ArmModel::new(c, c, rate).unwrap()]).unwrap()
    }

    #[test]
    fn outcome_probabilities_sum_to_one() {
        let p = outcome_probabilities(&[0.2, 0.7, 0.5]);
        assert_eq!(p.len(), 8);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        // x = 0b011: first two rewards 1, third 0
        assert_abs_diff_eq!(p[3], 0.2 * 0.7 * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn exact_value_examples() {
        let p = single(0.5, 0.5, 0.5);
        let pi = PolicyMapping::Myopic.build(&p, 1, 1).unwrap();
        assert_abs_diff_eq!(exact_episode_value(&p, pi.as_ref(), 1, 100).unwrap(), 0.5);

        let p = single(0.7, 0.7, 0.7);
        let pi = PolicyMapping::Myopic.build(&p, 1, 2).unwrap();
        assert_abs_diff_eq!(exact_episode_value(&p, pi.as_ref(), 2, 100).unwrap(), 1.4, epsilon = 1e-12);
    }

    #[test]
    fn exact_value_budget() {
        let p = SystemParameter::gilbert_elliott(&[(0.3, 0.7), (0.6, 0.4), (0.2, 0.5)]).unwrap();
        let pi = PolicyMapping::Myopic.build(&p, 2, 12).unwrap();
        assert!(matches!(
            exact_episode_value(&p, pi.as_ref(), 12, 5),
            Err(Error::BudgetExceeded { budget: 5, .. })
        ));
    }

    #[test]
    fn mc_deterministic_reward_stream() {
        let p = single(1.0, 1.0, 1.0);
        let pi = PolicyMapping::Myopic.build(&p, 1, 7).unwrap();
        let est = mc_value_seeded(&p, pi.as_ref(), 7, 500, 11).unwrap();
        assert_eq!(est.mean, 7.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.method, Method::MonteCarlo);
    }

    #[test]
    fn mc_independent_of_worker_count() {
        let p = SystemParameter::gilbert_elliott(&[(0.3, 0.7), (0.6, 0.4), (0.2, 0.5)]).unwrap();
        let pi = PolicyMapping::Whittle.build(&p, 1, 20).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_value_seeded(&p, pi.as_ref(), 20, 3000, 99).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.mean.to_bits(), four.mean.to_bits());
        assert_eq!(one.stderr.to_bits(), four.stderr.to_bits());
    }

    #[test]
    fn bellman_with_constant_continuation() {
        let p = SystemParameter::gilbert_elliott(&[(0.3, 0.7), (0.6, 0.4)]).unwrap();
        let pi = PolicyMapping::Myopic.build(&p, 1, 3).unwrap();
        let h = HistorySummary::fresh(2);
        let immediate = bellman_apply(&p, pi.as_ref(), &mut |_| Ok(0.0), 1, &h).unwrap();
        assert_abs_diff_eq!(immediate, 0.5, epsilon = 1e-15);
        let shifted = bellman_apply(&p, pi.as_ref(), &mut |_| Ok(3.25), 1, &h).unwrap();
        assert_abs_diff_eq!(shifted, 3.75, epsilon = 1e-12);
    }

    #[test]
    fn telescoping_trivial_cases() {
        let a = SystemParameter::gilbert_elliott(&[(0.3, 0.7), (0.6, 0.4)]).unwrap();
        let b = SystemParameter::gilbert_elliott(&[(0.2, 0.9), (0.5, 0.5)]).unwrap();
        let pi = PolicyMapping::Whittle.build(&b, 1, 3).unwrap();
        let (l, r) = telescoping_check(&a, &a, pi.as_ref(), 3, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!((l, r), (0.0, 0.0));

        let (l, r) = telescoping_check(&a, &b, pi.as_ref(), 1, DEFAULT_NODE_BUDGET).unwrap();
        let h = HistorySummary::fresh(2);
        let arm = pi.act(1, &h).arms()[0];
        let expected = b.belief(&h, arm) - a.belief(&h, arm);
        assert_abs_diff_eq!(l, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(r, expected, epsilon = 1e-15);
    }

    #[test]
    fn product_difference_examples() {
        let (l, r) = product_difference_bound_check(&[0.3, 0.8], &[0.3, 0.8]).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let (l, r) = product_difference_bound_check(&[1.0], &[0.0]).unwrap();
        assert_eq!((l, r), (2.0, 2.0));
        assert!(product_difference_bound_check(&[0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn regret_forms_agree() {
        let (a, b) = cumulative_regret_forms(10.0, &[9.5, 9.75, 10.0, 10.25]);
        assert_eq!(a, b);
    }
}
