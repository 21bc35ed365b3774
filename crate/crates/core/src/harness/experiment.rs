use std::collections::HashMap;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Mode, ValueMethod};
use crate::error::{Error, Result};
use crate::learner::{Prior, ThompsonOptions, ThompsonSampler};
use crate::model::{Environment, SystemParameter};
use crate::policies::{Policy, PolicyMapping};
use crate::rng;
use crate::stats::MeanVar;
use crate::valuation::{self, Method, ValueEstimate};

/// One episode of a regret curve, averaged over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretRow {
    pub episode: usize,
    pub benchmark_value: f64,
    pub algo_value: f64,
    pub regret: f64,
    /// Prefix sum of `regret`.
    pub cum_regret: f64,
    /// Standard error of the cumulative regret across replications.
    pub stderr: f64,
    /// Standard error of this episode's regret across replications.
    pub regret_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretSeries {
    pub rows: Vec<RegretRow>,
    /// Replication-averaged posterior weight on each arm's true parameters,
    /// indexed `[episode][arm]`; frequentist runs only.
    pub posterior_weights: Option<Vec<Vec<f64>>>,
    pub replications: usize,
}

impl RegretSeries {
    pub fn cum_regret(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.cum_regret).collect()
    }

    /// Series from per-episode values; cumulative regret is the running
    /// sum of `benchmark - algo`.
    pub fn from_values(benchmark: &[f64], algo: &[f64]) -> Self {
        let mut cum = 0.0;
        let rows = benchmark
            .iter()
            .zip(algo)
            .enumerate()
            .map(|(l, (&b, &a))| {
                let regret = b - a;
                cum += regret;
                RegretRow {
                    episode: l + 1,
                    benchmark_value: b,
                    algo_value: a,
                    regret,
                    cum_regret: cum,
                    stderr: 0.0,
                    regret_stderr: 0.0,
                }
            })
            .collect();
        Self {
            rows,
            posterior_weights: None,
            replications: 1,
        }
    }
}

struct Evaluator {
    method: ValueMethod,
    node_budget: usize,
    n_active: usize,
    horizon: usize,
}

impl Evaluator {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            method: cfg.value_eval.method,
            node_budget: cfg.value_eval.node_budget,
            n_active: cfg.n_active,
            horizon: cfg.episode_length,
        }
    }

    fn value(&self, theta: &SystemParameter<f64>, policy: &dyn Policy, reps: usize, seed: u64) -> Result<ValueEstimate> {
        debug_assert_eq!(policy.n_active(), self.n_active);
        match self.method {
            ValueMethod::ExactIfFeasible => {
                valuation::evaluate(theta, policy, self.horizon, self.node_budget, reps, seed)
            }
            ValueMethod::Mc => valuation::mc_value_seeded(theta, policy, self.horizon, reps, seed),
        }
    }
}

/// Value of `mapping(theta)` at `theta` with the configured benchmark
/// budget.
pub fn benchmark_value(cfg: &ExperimentConfig, theta: &SystemParameter<f64>, seed: u64) -> Result<ValueEstimate> {
    let policy = cfg.mapping()?.build(theta, cfg.n_active, cfg.episode_length)?;
    Evaluator::new(cfg).value(theta, policy.as_ref(), cfg.value_eval.benchmark_replications, seed)
}

/// `E_{theta ~ prior} V^theta_{mapping(theta)}`: `draws` parameters, each
/// played for `episodes_per_draw` episodes. The standard error is taken
/// across per-draw means.
pub fn prior_averaged_value(
    prior: &Prior<f64>,
    mapping: PolicyMapping,
    n_active: usize,
    horizon: usize,
    draws: usize,
    episodes_per_draw: usize,
    seed: u64,
) -> Result<ValueEstimate> {
    if draws == 0 || episodes_per_draw == 0 {
        return Err(Error::Config("draws and episodes per draw must be at least 1".into()));
    }
    let means = (0..draws)
        .into_par_iter()
        .map(|j| {
            let mut stream = rng::stream(seed, j as u64);
            let theta = prior.sample(&mut stream)?.param;
            let policy = mapping.build(&theta, n_active, horizon)?;
            let mut env = Environment::new(theta, n_active, horizon)?;
            let mut total = 0usize;
            for _ in 0..episodes_per_draw {
                total += env.episode_reward(policy.as_ref(), &mut stream)?;
            }
            Ok(total as f64 / episodes_per_draw as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let acc: MeanVar = means.into_iter().collect();
    Ok(ValueEstimate {
        mean: acc.mean(),
        stderr: acc.stderr(),
        method: Method::MonteCarlo,
        replications: draws * episodes_per_draw,
    })
}

struct Replication {
    benchmark: f64,
    algo: Vec<f64>,
    weights: Option<Vec<Vec<f64>>>,
}

fn param_key(theta: &SystemParameter<f64>) -> Vec<u64> {
    theta
        .arms()
        .iter()
        .flat_map(|a| {
            [a.active.p01(), a.active.p11(), a.passive.p01(), a.passive.p11(), a.initial_rate].map(f64::to_bits)
        })
        .collect()
}

/// One replication: fix or draw the truth, run Thompson sampling and value
/// every sampled policy against the truth. All policies of a replication
/// are valued on the same simulation streams.
fn replicate(
    cfg: &ExperimentConfig,
    prior: &Prior<f64>,
    mapping: PolicyMapping,
    fixed: Option<&SystemParameter<f64>>,
    index: usize,
) -> Result<Replication> {
    let seed = rng::derive_seed(cfg.master_seed, index as u64);
    let value_seed = rng::derive_seed(seed, 2);
    let mut run_rng = rng::stream(seed, 1);
    let theta = match fixed {
        Some(t) => t.clone(),
        None => prior.sample(&mut rng::stream(seed, 0))?.param,
    };
    let eval = Evaluator::new(cfg);
    let star = mapping.build(&theta, cfg.n_active, cfg.episode_length)?;
    let benchmark = eval
        .value(&theta, star.as_ref(), cfg.value_eval.benchmark_replications, value_seed)?
        .mean;

    let mut env = Environment::new(theta.clone(), cfg.n_active, cfg.episode_length)?;
    let options = ThompsonOptions {
        snapshot_every: 0,
        keep_records: false,
    };
    let mut sampler = ThompsonSampler::new(prior.clone(), mapping, options);
    let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut algo = Vec::with_capacity(cfg.episodes);
    let mut weights = fixed.map(|_| Vec::with_capacity(cfg.episodes));
    for _ in 0..cfg.episodes {
        let (entry, policy) = sampler.play_episode_with_policy(&mut env, &mut run_rng)?;
        let sampled = entry.theta.expect("sampler records the sampled parameter");
        // Sampling the truth means playing the benchmark policy itself.
        let value = if sampled == theta {
            benchmark
        } else {
            let key = param_key(&sampled);
            match cache.get(&key) {
                Some(&v) => v,
                None => {
                    let v = eval
                        .value(&theta, policy.as_ref(), cfg.value_eval.replications, value_seed)?
                        .mean;
                    cache.insert(key, v);
                    v
                }
            }
        };
        algo.push(value);
        if let Some(w) = weights.as_mut() {
            let post = sampler.posterior();
            w.push((0..theta.num_arms()).map(|k| post.marginal(k, theta.arm(k))).collect());
        }
    }
    Ok(Replication {
        benchmark,
        algo,
        weights,
    })
}

fn aggregate(reps: &[Replication], episodes: usize) -> RegretSeries {
    let mut rows = Vec::with_capacity(episodes);
    let mut cum = 0.0;
    let mut rep_cum = vec![0.0; reps.len()];
    for l in 0..episodes {
        let mut bench = MeanVar::new();
        let mut algo = MeanVar::new();
        let mut regret = MeanVar::new();
        let mut cum_acc = MeanVar::new();
        for (r, c) in reps.iter().zip(rep_cum.iter_mut()) {
            let g = r.benchmark - r.algo[l];
            *c += g;
            bench.push(r.benchmark);
            algo.push(r.algo[l]);
            regret.push(g);
            cum_acc.push(*c);
        }
        cum += regret.mean();
        rows.push(RegretRow {
            episode: l + 1,
            benchmark_value: bench.mean(),
            algo_value: algo.mean(),
            regret: regret.mean(),
            cum_regret: cum,
            stderr: cum_acc.stderr(),
            regret_stderr: regret.stderr(),
        });
    }
    let posterior_weights = reps.first().and_then(|r| r.weights.as_ref()).map(|first| {
        let arms = first.first().map_or(0, Vec::len);
        (0..episodes)
            .map(|l| {
                (0..arms)
                    .map(|k| {
                        let total: f64 = reps.iter().map(|r| r.weights.as_ref().unwrap()[l][k]).sum();
                        total / reps.len() as f64
                    })
                    .collect()
            })
            .collect()
    });
    RegretSeries {
        rows,
        posterior_weights,
        replications: reps.len(),
    }
}

fn regret_experiment(cfg: &ExperimentConfig, fixed: Option<&SystemParameter<f64>>) -> Result<RegretSeries> {
    let prior = cfg.prior()?;
    let mapping = cfg.mapping()?;
    let reps = (0..cfg.replications)
        .into_par_iter()
        .map(|i| replicate(cfg, &prior, mapping, fixed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&reps, cfg.episodes))
}

/// Regret averaged over truths drawn from the prior.
pub fn bayesian_regret_experiment(cfg: &ExperimentConfig) -> Result<RegretSeries> {
    if cfg.mode != Mode::Bayesian {
        return Err(Error::Config("bayesian experiment needs mode = bayesian".into()));
    }
    cfg.validate()?;
    regret_experiment(cfg, None)
}

/// Regret for the configured fixed truth, with the posterior weight on its
/// per-arm parameters.
pub fn frequentist_regret_experiment(cfg: &ExperimentConfig) -> Result<RegretSeries> {
    if cfg.mode != Mode::Frequentist {
        return Err(Error::Config("frequentist experiment needs mode = frequentist".into()));
    }
    cfg.validate()?;
    let theta = cfg.theta_star()?;
    regret_experiment(cfg, Some(&theta))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RegretSeries> {
    match cfg.mode {
        Mode::Bayesian => bayesian_regret_experiment(cfg),
        Mode::Frequentist => frequentist_regret_experiment(cfg),
    }
}
