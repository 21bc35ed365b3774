use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Prior;
use crate::error::{Error, Result};
use crate::model::{EpisodeRecord, Environment, SystemParameter};
use crate::policies::{Policy, PolicyMapping};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThompsonOptions {
    /// Store the posterior after every `snapshot_every`-th episode (the
    /// first one included); 0 stores none.
    pub snapshot_every: usize,
    /// Keep each episode's action/reward record in the run record.
    pub keep_records: bool,
}

impl Default for ThompsonOptions {
    fn default() -> Self {
        Self {
            snapshot_every: 1,
            keep_records: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct EpisodeEntry<T> {
    pub theta_index: u64,
    #[serde(skip)]
    pub theta: Option<SystemParameter<T>>,
    #[serde(skip)]
    pub policy: String,
    #[serde(skip)]
    pub record: EpisodeRecord,
    pub reward: usize,
    /// Posterior weights after this episode's update; empty when thinned.
    pub posterior: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct RunRecord<T> {
    /// Sizes of the prior's independent factors; a joint prior has one.
    pub factor_sizes: Vec<usize>,
    pub episodes: Vec<EpisodeEntry<T>>,
}

impl<T: Real> RunRecord<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("run records always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("run record", e))
    }
}

/// Posterior state carried across episodes.
#[derive(Debug, Clone)]
pub struct ThompsonSampler<T> {
    posterior: Prior<T>,
    mapping: PolicyMapping,
    options: ThompsonOptions,
    episodes: usize,
}

impl<T: Real> ThompsonSampler<T> {
    pub fn new(prior: Prior<T>, mapping: PolicyMapping, options: ThompsonOptions) -> Self {
        Self {
            posterior: prior,
            mapping,
            options,
            episodes: 0,
        }
    }

    pub fn posterior(&self) -> &Prior<T> {
        &self.posterior
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    /// Samples a parameter, plays one episode with its policy and updates
    /// the posterior.
    pub fn play_episode<R: Rng + ?Sized>(&mut self, env: &mut Environment<T>, rng: &mut R) -> Result<EpisodeEntry<T>> {
        self.play_episode_with_policy(env, rng).map(|(entry, _)| entry)
    }

    /// As [`ThompsonSampler::play_episode`], also returning the policy
    /// that was played.
    pub fn play_episode_with_policy<R: Rng + ?Sized>(
        &mut self,
        env: &mut Environment<T>,
        rng: &mut R,
    ) -> Result<(EpisodeEntry<T>, Box<dyn Policy>)> {
        if self.posterior.num_arms() != env.num_arms() {
            return Err(Error::InvalidModel(format!(
                "prior has {} arms but the environment has {}",
                self.posterior.num_arms(),
                env.num_arms()
            )));
        }
        let sample = self.posterior.sample(rng)?;
        let policy = self.mapping.build(&sample.param, env.n_active(), env.episode_length())?;
        let record = env.run_episode(policy.as_ref(), rng)?;
        self.posterior.update(&record)?;

        let every = self.options.snapshot_every;
        let posterior = if every > 0 && self.episodes.is_multiple_of(every) {
            self.posterior.snapshot()
        } else {
            Vec::new()
        };
        self.episodes += 1;
        let entry = EpisodeEntry {
            theta_index: sample.index,
            theta: Some(sample.param),
            policy: policy.name().to_string(),
            reward: record.total_reward(),
            record: if self.options.keep_records {
                record
            } else {
                EpisodeRecord::default()
            },
            posterior,
        };
        Ok((entry, policy))
    }
}

/// Runs `episodes` episodes of Thompson sampling from `prior`.
pub fn run_thompson<T: Real, R: Rng + ?Sized>(
    prior: &Prior<T>,
    mapping: PolicyMapping,
    env: &mut Environment<T>,
    episodes: usize,
    rng: &mut R,
) -> Result<RunRecord<T>> {
    run_thompson_with(prior, mapping, env, episodes, ThompsonOptions::default(), rng).map(|(r, _)| r)
}

/// As [`run_thompson`], also returning the final posterior.
pub fn run_thompson_with<T: Real, R: Rng + ?Sized>(
    prior: &Prior<T>,
    mapping: PolicyMapping,
    env: &mut Environment<T>,
    episodes: usize,
    options: ThompsonOptions,
    rng: &mut R,
) -> Result<(RunRecord<T>, Prior<T>)> {
    let mut sampler = ThompsonSampler::new(prior.clone(), mapping, options);
    let mut run = RunRecord {
        factor_sizes: prior.factor_sizes(),
        episodes: Vec::with_capacity(episodes),
    };
    for _ in 0..episodes {
        run.episodes.push(sampler.play_episode(env, rng)?);
    }
    Ok((run, sampler.posterior))
}
