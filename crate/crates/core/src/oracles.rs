//! Brute-force reference computations used by the test suites.
//!
//! Nothing here calls the closed forms or recursions it is meant to check:
//! every routine works from raw transition probabilities and explicit
//! enumeration.

use crate::model::{EpisodeRecord, SystemParameter};

/// Whittle index by bisection on the passive subsidy over an exact
/// single-arm finite-horizon dynamic program.
///
/// Reachable beliefs are indexed by `(source, k)`: `k` passive-chain steps
/// after starting from `belief`, from state 0 or from state 1. The subsidy is
/// the point where pulling and resting the arm at `belief` with `horizon`
/// rounds to go have equal optimal value.
pub fn whittle_bisection(p01: f64, p11: f64, belief: f64, horizon: usize) -> f64 {
    let width = horizon + 2;
    let mut beliefs = vec![[0.0f64; 3]; width];
    let mut cur = [belief, 0.0, 1.0];
    for row in beliefs.iter_mut() {
        *row = cur;
        for b in cur.iter_mut() {
            *b = *b * p11 + (1.0 - *b) * p01;
        }
    }

    let advantage = |subsidy: f64| -> f64 {
        // value[k][s] with `rounds` rounds to go
        let mut value = vec![[0.0f64; 3]; width];
        let mut next = vec![[0.0f64; 3]; width];
        for _ in 1..horizon {
            let after_zero = value[1][1];
            let after_one = value[1][2];
            for k in 0..width {
                for s in 0..3 {
                    let b = beliefs[k][s];
                    let pull = b + b * after_one + (1.0 - b) * after_zero;
                    let rest = if k + 1 < width {
                        subsidy + value[k + 1][s]
                    } else {
                        f64::NEG_INFINITY
                    };
                    next[k][s] = pull.max(rest);
                }
            }
            std::mem::swap(&mut value, &mut next);
        }
        let pull = belief + belief * value[1][2] + (1.0 - belief) * value[1][1];
        let rest = subsidy + value[1][0];
        pull - rest
    };

    let (mut lo, mut hi) = (-1.0f64, 2.0f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if advantage(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Probability of the observed rewards in `record` given its actions, by
/// summing over every joint hidden-state path of every arm.
pub fn hidden_path_likelihood(param: &SystemParameter<f64>, record: &EpisodeRecord) -> f64 {
    let k = param.num_arms();
    let rounds = record.len();
    let bits = k * rounds;
    assert!(bits <= 24, "enumeration too large");
    let mut total = 0.0;
    for path in 0u64..(1u64 << bits) {
        // state of arm a at round t (0-based) is bit t*k + a
        let state = |t: usize, a: usize| (path >> (t * k + a)) & 1 == 1;
        let mut prob = 1.0;
        for a in 0..k {
            let rate = param.arm(a).initial_rate;
            prob *= if state(0, a) { rate } else { 1.0 - rate };
        }
        for (t, step) in record.steps.iter().enumerate() {
            for (&a, &x) in step.action.arms().iter().zip(&step.rewards) {
                if state(t, a) != x {
                    prob = 0.0;
                }
            }
            if prob == 0.0 {
                break;
            }
            if t + 1 < rounds {
                for a in 0..k {
                    let arm = param.arm(a);
                    let chain = if step.action.contains(a) {
                        &arm.active
                    } else {
                        &arm.passive
                    };
                    let up = if state(t, a) { chain.p11() } else { chain.p01() };
                    prob *= if state(t + 1, a) { up } else { 1.0 - up };
                }
            }
        }
        total += prob;
    }
    total
}

/// Exact distribution of reward sequences for a single arm pulled every
/// round, indexed by the sequence read as a little-endian bit pattern.
pub fn single_arm_sequence_distribution(p01: f64, p11: f64, initial_rate: f64, rounds: usize) -> Vec<f64> {
    (0u32..(1 << rounds))
        .map(|seq| {
            let bit = |t: usize| (seq >> t) & 1 == 1;
            let mut prob = if bit(0) { initial_rate } else { 1.0 - initial_rate };
            for t in 1..rounds {
                let up = if bit(t - 1) { p11 } else { p01 };
                prob *= if bit(t) { up } else { 1.0 - up };
            }
            prob
        })
        .collect()
}
