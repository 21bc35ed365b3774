//! Thompson sampling over discrete priors: likelihoods, posteriors, the
//! episode loop and the concentration diagnostics.

mod diagnostics;
mod distribution;
mod thompson;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ArmModel, ArmSummary, EpisodeRecord, LastObs, SystemParameter};
use crate::scalar::Real;

pub use diagnostics::{confidence_radius, confidence_set_contains, counts, CountTable};
pub use distribution::{DiscreteDistribution, LOG_FLOOR};
pub use thompson::{run_thompson, run_thompson_with, EpisodeEntry, RunRecord, ThompsonOptions, ThompsonSampler};

// ── Likelihood ───────────────────────────────────────────────────────────

/// Summary state and observed reward of every pull of arm `k` in `record`.
pub fn arm_pulls(record: &EpisodeRecord, k: usize) -> Vec<(ArmSummary, bool)> {
    let mut summary = ArmSummary {
        last: LastObs::Unobserved,
        since: 1,
    };
    let mut pulls = Vec::new();
    for step in &record.steps {
        match step.action.arms().iter().position(|&a| a == k) {
            Some(i) => {
                let x = step.rewards[i];
                pulls.push((summary, x));
                summary = ArmSummary {
                    last: LastObs::Bit(x),
                    since: 1,
                };
            }
            None => summary.since += 1,
        }
    }
    pulls
}

/// Log-probability of one arm's observations, with each term floored at
/// [`LOG_FLOOR`]. The flag reports whether some observation had probability
/// zero.
pub fn arm_log_likelihood<T: Real>(arm: &ArmModel<T>, pulls: &[(ArmSummary, bool)]) -> (T, bool) {
    let floor = T::of(LOG_FLOOR);
    let mut total = T::zero();
    let mut impossible = false;
    for (summary, x) in pulls {
        let b = arm.belief(summary);
        let p = if *x { b } else { T::one() - b };
        if p <= T::zero() {
            impossible = true;
            total = total + floor;
        } else {
            total = total + p.ln().max(floor);
        }
    }
    (total, impossible)
}

fn log_likelihood_with_flag<T: Real>(param: &SystemParameter<T>, record: &EpisodeRecord) -> (T, bool) {
    (0..param.num_arms())
        .map(|k| arm_log_likelihood(param.arm(k), &arm_pulls(record, k)))
        .fold((T::zero(), false), |(s, f), (ll, imp)| (s + ll, f || imp))
}

/// Log-probability of an episode's observations given its actions. Arms
/// evolve independently, so this is a sum of per-arm terms; observations
/// with probability zero contribute [`LOG_FLOOR`].
pub fn episode_log_likelihood<T: Real>(param: &SystemParameter<T>, record: &EpisodeRecord) -> T {
    log_likelihood_with_flag(param, record).0
}

/// Posterior after observing `record`.
pub fn posterior_update<T: Real>(
    dist: &DiscreteDistribution<SystemParameter<T>, T>,
    record: &EpisodeRecord,
) -> Result<DiscreteDistribution<SystemParameter<T>, T>> {
    let (lls, flags): (Vec<T>, Vec<bool>) = dist
        .support()
        .iter()
        .map(|p| log_likelihood_with_flag(p, record))
        .unzip();
    let mut next = dist.clone();
    next.absorb(&lls, &flags)?;
    Ok(next)
}

// ── Priors ───────────────────────────────────────────────────────────────

/// Draw from a [`Prior`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    /// Row-major position in the support (mixed radix over the factors for
    /// a product prior).
    pub index: u64,
    pub param: SystemParameter<T>,
}

/// Discrete prior or posterior over system parameters.
///
/// `Product` holds independent per-arm factors. Because the likelihood
/// factorises over arms, a product prior stays a product after every update,
/// which keeps grids like 81 points per arm over 8 arms tractable.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior<T> {
    Joint(DiscreteDistribution<SystemParameter<T>, T>),
    Product(Vec<DiscreteDistribution<ArmModel<T>, T>>),
}

impl<T: Real> Prior<T> {
    /// Independent uniform prior over `values x values` for each arm's
    /// `(p01, p11)`, with action-independent chains started from their
    /// stationary rates.
    pub fn uniform_grid(num_arms: usize, values: &[T]) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::InvalidModel("at least one arm is required".into()));
        }
        let mut support = Vec::with_capacity(values.len() * values.len());
        for &p01 in values {
            for &p11 in values {
                support.push(ArmModel::gilbert_elliott(p01, p11)?);
            }
        }
        let factor = DiscreteDistribution::uniform(support)?;
        Ok(Prior::Product(vec![factor; num_arms]))
    }

    /// The nine-point grid `{0.1, ..., 0.9}` per parameter.
    pub fn default_grid(num_arms: usize) -> Result<Self> {
        let values: Vec<T> = (1..=9).map(|i| T::of(i as f64 / 10.0)).collect();
        Self::uniform_grid(num_arms, &values)
    }

    pub fn point_mass(param: SystemParameter<T>) -> Self {
        Prior::Joint(DiscreteDistribution::point_mass(param))
    }

    pub fn num_arms(&self) -> usize {
        match self {
            Prior::Joint(d) => d.support()[0].num_arms(),
            Prior::Product(f) => f.len(),
        }
    }

    pub fn factor_sizes(&self) -> Vec<usize> {
        match self {
            Prior::Joint(d) => vec![d.len()],
            Prior::Product(f) => f.iter().map(DiscreteDistribution::len).collect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Sample<T>> {
        match self {
            Prior::Joint(d) => {
                let i = d.sample_index(rng);
                Ok(Sample {
                    index: i as u64,
                    param: d.support()[i].clone(),
                })
            }
            Prior::Product(factors) => {
                let mut index = 0u64;
                let mut arms = Vec::with_capacity(factors.len());
                for f in factors {
                    let i = f.sample_index(rng);
                    index = index.saturating_mul(f.len() as u64).saturating_add(i as u64);
                    arms.push(f.support()[i]);
                }
                Ok(Sample {
                    index,
                    param: SystemParameter::new(arms)?,
                })
            }
        }
    }

    /// Bayes update with one episode.
    pub fn update(&mut self, record: &EpisodeRecord) -> Result<()> {
        match self {
            Prior::Joint(d) => {
                *d = posterior_update(d, record)?;
                Ok(())
            }
            Prior::Product(factors) => {
                for (k, f) in factors.iter_mut().enumerate() {
                    let pulls = arm_pulls(record, k);
                    if pulls.is_empty() {
                        continue;
                    }
                    let (lls, flags): (Vec<T>, Vec<bool>) = f
                        .support()
                        .iter()
                        .map(|arm| arm_log_likelihood(arm, &pulls))
                        .unzip();
                    f.absorb(&lls, &flags)?;
                }
                Ok(())
            }
        }
    }

    /// Normalised weights, factors concatenated in arm order.
    pub fn snapshot(&self) -> Vec<T> {
        match self {
            Prior::Joint(d) => d.weights(),
            Prior::Product(f) => f.iter().flat_map(DiscreteDistribution::weights).collect(),
        }
    }

    /// Probability of arm `k` being `arm` under the weights in `snapshot`
    /// (laid out as by [`Prior::snapshot`]).
    pub fn marginal_from_snapshot(&self, snapshot: &[T], k: usize, arm: &ArmModel<T>) -> T {
        match self {
            Prior::Joint(d) => d
                .support()
                .iter()
                .zip(snapshot)
                .filter(|(p, _)| p.arm(k) == arm)
                .map(|(_, &w)| w)
                .sum(),
            Prior::Product(factors) => {
                let offset: usize = factors[..k].iter().map(DiscreteDistribution::len).sum();
                factors[k]
                    .support()
                    .iter()
                    .zip(&snapshot[offset..offset + factors[k].len()])
                    .filter(|(a, _)| *a == arm)
                    .map(|(_, &w)| w)
                    .sum()
            }
        }
    }

    pub fn marginal(&self, k: usize, arm: &ArmModel<T>) -> T {
        self.marginal_from_snapshot(&self.snapshot(), k, arm)
    }

    /// Probability of exactly `param`.
    pub fn mass(&self, param: &SystemParameter<T>) -> T {
        match self {
            Prior::Joint(d) => d
                .support()
                .iter()
                .zip(d.weights())
                .filter(|(p, _)| *p == param)
                .map(|(_, w)| w)
                .sum(),
            Prior::Product(factors) => {
                if param.num_arms() != factors.len() {
                    return T::zero();
                }
                (0..factors.len())
                    .map(|k| self.marginal(k, param.arm(k)))
                    .fold(T::one(), |a, b| a * b)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Action, Step};
    use crate::oracles::hidden_path_likelihood;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn step(arms: &[usize], rewards: &[bool], k: usize) -> Step {
        Step {
            action: Action::new(arms.to_vec(), k, arms.len()).unwrap(),
            rewards: rewards.to_vec(),
        }
    }

    #[test]
    fn empty_record_has_zero_log_likelihood() {
        let p = SystemParameter::gilbert_elliott(&[(0.3, 0.7)]).unwrap();
        assert_eq!(episode_log_likelihood(&p, &EpisodeRecord::default()), 0.0);
    }

    #[test]
    fn first_pull_uses_initial_rate() {
        let p = SystemParameter::gilbert_elliott(&[(0.3, 0.7)]).unwrap();
        let r = EpisodeRecord {
            steps: vec![step(&[0], &[true], 1)],
        };
        assert_abs_diff_eq!(episode_log_likelihood(&p, &r), 0.5f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn factorised_matches_hidden_paths_single_arm() {
        let p = SystemParameter::gilbert_elliott(&[(0.2, 0.6)]).unwrap();
        let r = EpisodeRecord {
            steps: vec![
                step(&[0], &[true], 1),
                step(&[0], &[false], 1),
                step(&[0], &[false], 1),
            ],
        };
        let oracle = hidden_path_likelihood(&p, &r).ln();
        assert_abs_diff_eq!(episode_log_likelihood(&p, &r), oracle, epsilon = 1e-10);
    }

    #[test]
    fn impossible_observation_hits_floor() {
        let c = crate::chain::Chain::new(0.0, 1.0).unwrap();
        let arm = ArmModel::new(c, c, 1.0).unwrap();
        let p = SystemParameter::new(vec![arm]).unwrap();
        let r = EpisodeRecord {
            steps: vec![step(&[0], &[false], 1)],
        };
        assert_eq!(episode_log_likelihood(&p, &r), LOG_FLOOR);
        let prior = DiscreteDistribution::point_mass(p);
        assert!(matches!(posterior_update(&prior, &r), Err(Error::AllWeightsAtFloor)));
    }

    #[test]
    fn zero_probability_point_keeps_its_slot() {
        let c = crate::chain::Chain::new(0.0, 1.0).unwrap();
        let sure = SystemParameter::new(vec![ArmModel::new(c, c, 1.0).unwrap()]).unwrap();
        let fair = SystemParameter::gilbert_elliott(&[(0.5, 0.5)]).unwrap();
        let prior = DiscreteDistribution::uniform(vec![sure, fair]).unwrap();
        let r = EpisodeRecord {
            steps: vec![step(&[0], &[false], 1)],
        };
        let post = posterior_update(&prior, &r).unwrap();
        assert_eq!(post.len(), 2);
        let w = post.weights();
        assert!(w[0] < 1e-300);
        assert_abs_diff_eq!(w[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_point_bayes() {
        let hi = SystemParameter::gilbert_elliott(&[(0.9, 0.9)]).unwrap();
        let lo = SystemParameter::gilbert_elliott(&[(0.1, 0.1)]).unwrap();
        let prior = DiscreteDistribution::uniform(vec![hi, lo]).unwrap();
        let r = EpisodeRecord {
            steps: vec![step(&[0], &[true], 1)],
        };
        let w = posterior_update(&prior, &r).unwrap().weights();
        assert_abs_diff_eq!(w[0], 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn product_and_joint_updates_agree() {
        let grid = [0.2, 0.5, 0.8];
        let product = Prior::<f64>::uniform_grid(2, &grid).unwrap();
        let Prior::Product(factors) = &product else { unreachable!() };
        let mut joint_support = Vec::new();
        for a in factors[0].support() {
            for b in factors[1].support() {
                joint_support.push(SystemParameter::new(vec![*a, *b]).unwrap());
            }
        }
        let mut joint = Prior::Joint(DiscreteDistribution::uniform(joint_support).unwrap());
        let mut product = product.clone();
        let truth = SystemParameter::gilbert_elliott(&[(0.2, 0.8), (0.5, 0.2)]).unwrap();
        let mut env = crate::model::Environment::new(truth, 1, 6).unwrap();
        let pi = crate::PolicyMapping::Myopic
            .build(&SystemParameter::gilbert_elliott(&[(0.5, 0.5), (0.8, 0.8)]).unwrap(), 1, 6)
            .unwrap();
        let mut r = rng::stream(21, 0);
        for _ in 0..5 {
            let record = env.run_episode(pi.as_ref(), &mut r).unwrap();
            joint.update(&record).unwrap();
            product.update(&record).unwrap();
        }
        let arm = ArmModel::gilbert_elliott(0.2, 0.8).unwrap();
        assert_abs_diff_eq!(joint.marginal(0, &arm), product.marginal(0, &arm), epsilon = 1e-12);
        let theta = SystemParameter::gilbert_elliott(&[(0.2, 0.8), (0.5, 0.2)]).unwrap();
        assert_abs_diff_eq!(joint.mass(&theta), product.mass(&theta), epsilon = 1e-12);
    }

    #[test]
    fn grid_prior_layout() {
        let prior = Prior::<f64>::default_grid(3).unwrap();
        assert_eq!(prior.factor_sizes(), vec![81, 81, 81]);
        let snap = prior.snapshot();
        assert_eq!(snap.len(), 243);
        assert_abs_diff_eq!(snap.iter().sum::<f64>(), 3.0, epsilon = 1e-12);
        let arm = ArmModel::gilbert_elliott(0.3, 0.7).unwrap();
        assert_abs_diff_eq!(prior.marginal(1, &arm), 1.0 / 81.0, epsilon = 1e-15);

        let mut r = rng::stream(5, 5);
        let s = prior.sample(&mut r).unwrap();
        assert!(s.index < 81u64.pow(3));
        assert_eq!(s.param.num_arms(), 3);
    }
}
