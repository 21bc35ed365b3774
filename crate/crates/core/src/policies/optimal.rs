//! Exact finite-horizon optimal policy by backward induction over reachable
//! history summaries.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Action, HistorySummary, SystemParameter};
use crate::scalar::Real;
use crate::valuation::outcome_probabilities;

use super::{top_n, Policy};

pub const DEFAULT_DP_BUDGET: usize = 1_000_000;

/// Relative slack under which two action values count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Optimal policy for a known parameter. Ties go to the lexicographically
/// smallest action.
#[derive(Debug, Clone)]
pub struct OptimalPolicy<T> {
    param: SystemParameter<T>,
    n_active: usize,
    horizon: usize,
    table: Vec<HashMap<HistorySummary, (Action, T)>>,
}

/// All `n`-subsets of `0..k` in lexicographic order.
pub(crate) fn all_actions(k: usize, n: usize) -> Vec<Action> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(Action::from_sorted(cur.clone()));
        let Some(i) = (0..n).rev().find(|&i| cur[i] < k - n + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..n {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn outcome_bits(n: usize) -> Vec<Vec<bool>> {
    (0u32..(1 << n))
        .map(|x| (0..n).map(|i| (x >> i) & 1 == 1).collect())
        .collect()
}

impl<T: Real> OptimalPolicy<T> {
    pub fn new(param: SystemParameter<T>, n_active: usize, horizon: usize, budget: usize) -> Result<Self> {
        let k = param.num_arms();
        let actions = all_actions(k, n_active);
        let outcomes = outcome_bits(n_active);

        // Forward pass: every summary reachable under some action sequence.
        let mut levels: Vec<Vec<HistorySummary>> = Vec::with_capacity(horizon);
        let mut count = 0usize;
        if horizon > 0 {
            levels.push(vec![HistorySummary::fresh(k)]);
            count = 1;
        }
        for t in 1..horizon {
            let mut seen: HashMap<HistorySummary, ()> = HashMap::new();
            for h in &levels[t - 1] {
                for a in &actions {
                    for x in &outcomes {
                        seen.entry(h.updated(a, x)).or_insert(());
                        if count + seen.len() > budget {
                            return Err(Error::BudgetExceeded {
                                count: count + seen.len(),
                                budget,
                            });
                        }
                    }
                }
            }
            count += seen.len();
            let mut level: Vec<HistorySummary> = seen.into_keys().collect();
            level.sort_unstable();
            levels.push(level);
        }

        // Backward induction.
        let tol = T::of(TIE_TOLERANCE);
        let mut table: Vec<HashMap<HistorySummary, (Action, T)>> = vec![HashMap::new(); horizon];
        for t in (0..horizon).rev() {
            let mut current = HashMap::with_capacity(levels[t].len());
            for h in &levels[t] {
                let beliefs = param.beliefs(h);
                let mut best: Option<(Action, T)> = None;
                for a in &actions {
                    let picked: Vec<T> = a.arms().iter().map(|&i| beliefs[i]).collect();
                    let mut q: T = picked.iter().copied().sum();
                    if t + 1 < horizon {
                        let next = &table[t + 1];
                        for (x, p) in outcomes.iter().zip(outcome_probabilities(&picked)) {
                            if p > T::zero() {
                                q = q + p * next[&h.updated(a, x)].1;
                            }
                        }
                    }
                    let better = match &best {
                        None => true,
                        Some((_, v)) => q > *v + tol * v.abs().max(T::one()),
                    };
                    if better {
                        best = Some((a.clone(), q));
                    }
                }
                current.insert(h.clone(), best.expect("at least one action"));
            }
            table[t] = current;
        }

        Ok(Self {
            param,
            n_active,
            horizon,
            table,
        })
    }

    /// Optimal expected reward from round 1.
    pub fn value(&self) -> T {
        if self.horizon == 0 {
            return T::zero();
        }
        self.table[0][&HistorySummary::fresh(self.param.num_arms())].1
    }

    /// Number of `(t, h)` states in the table.
    pub fn state_count(&self) -> usize {
        self.table.iter().map(HashMap::len).sum()
    }
}

impl<T: Real> Policy for OptimalPolicy<T> {
    fn name(&self) -> &str {
        "optimal_dp"
    }

    fn n_active(&self) -> usize {
        self.n_active
    }

    /// Summaries outside the reachable table (round past the horizon or an
    /// inconsistent summary) fall back to the myopic choice.
    fn act(&self, t: usize, h: &HistorySummary) -> Action {
        t.checked_sub(1)
            .and_then(|i| self.table.get(i))
            .and_then(|level| level.get(h))
            .map(|(a, _)| a.clone())
            .unwrap_or_else(|| top_n(&self.param.beliefs(h), self.n_active))
    }
}
