use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Floor for a single log-likelihood term and for log-weights; roughly the
/// log of the smallest subnormal double.
pub const LOG_FLOOR: f64 = -745.0;

/// Finite support with log-space weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<S, T> {
    support: Vec<S>,
    log_weights: Vec<T>,
}

impl<S, T: Real> DiscreteDistribution<S, T> {
    pub fn new(support: Vec<S>, log_weights: Vec<T>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if support.len() != log_weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} support points but {} weights",
                support.len(),
                log_weights.len()
            )));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == T::infinity()) {
            return Err(Error::InvalidDistribution("log-weights must be finite or -inf".into()));
        }
        if log_weights.iter().all(|w| *w == T::neg_infinity()) {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        let mut d = Self {
            support,
            log_weights,
        };
        d.normalize();
        Ok(d)
    }

    pub fn uniform(support: Vec<S>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![T::zero(); n])
    }

    /// From linear (unnormalised, non-negative) weights.
    pub fn from_weights(support: Vec<S>, weights: &[T]) -> Result<Self> {
        if weights.iter().any(|w| *w < T::zero()) {
            return Err(Error::InvalidDistribution("negative weight".into()));
        }
        Self::new(support, weights.iter().map(|w| w.ln()).collect())
    }

    pub fn point_mass(point: S) -> Self {
        Self {
            support: vec![point],
            log_weights: vec![T::zero()],
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[S] {
        &self.support
    }

    pub fn log_weights(&self) -> &[T] {
        &self.log_weights
    }

    /// Normalised linear weights.
    pub fn weights(&self) -> Vec<T> {
        let max = self.max_log_weight();
        let raw: Vec<T> = self.log_weights.iter().map(|&w| (w - max).exp()).collect();
        let total: T = raw.iter().copied().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    pub fn weight(&self, index: usize) -> T {
        self.weights()[index]
    }

    fn max_log_weight(&self) -> T {
        self.log_weights
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max)
    }

    /// Shifts log-weights so they log-sum to zero.
    fn normalize(&mut self) {
        let max = self.max_log_weight();
        let total: T = self.log_weights.iter().map(|&w| (w - max).exp()).sum();
        let log_total = max + total.ln();
        for w in &mut self.log_weights {
            *w = *w - log_total;
        }
    }

    /// Adds per-point log-likelihoods and renormalises. `impossible[j]` marks
    /// points that gave the observations probability zero; when every point
    /// does, the update fails and the distribution is left unchanged.
    pub fn absorb(&mut self, log_likelihoods: &[T], impossible: &[bool]) -> Result<()> {
        assert_eq!(log_likelihoods.len(), self.len());
        if !impossible.is_empty() && impossible.iter().all(|&x| x) {
            return Err(Error::AllWeightsAtFloor);
        }
        for (w, &ll) in self.log_weights.iter_mut().zip(log_likelihoods) {
            *w = *w + ll;
        }
        self.normalize();
        Ok(())
    }

    /// Inverse-CDF draw over the stored order using one uniform variate.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = T::of(rng.gen::<f64>());
        let mut cum = T::zero();
        let weights = self.weights();
        for (i, &w) in weights.iter().enumerate() {
            cum = cum + w;
            if u < cum {
                return i;
            }
        }
        // round-off: fall back to the last point with positive weight
        weights.iter().rposition(|&w| w > T::zero()).unwrap_or(self.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn validation() {
        assert!(DiscreteDistribution::<u8, f64>::new(vec![], vec![]).is_err());
        assert!(DiscreteDistribution::new(vec![1, 2], vec![0.0]).is_err());
        assert!(DiscreteDistribution::new(vec![1], vec![f64::NEG_INFINITY]).is_err());
        assert!(DiscreteDistribution::from_weights(vec![1, 2], &[1.0, -1.0]).is_err());
    }

    #[test]
    fn weights_normalise() {
        let d = DiscreteDistribution::new(vec!['a', 'b', 'c'], vec![-1000.0, -1000.0, -1001.0]).unwrap();
        let w = d.weights();
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[0], w[1], epsilon = 1e-15);
    }

    #[test]
    fn point_mass_always_sampled() {
        let d = DiscreteDistribution::<_, f64>::point_mass("only");
        let mut r = rng::stream(1, 1);
        for _ in 0..100 {
            assert_eq!(d.sample_index(&mut r), 0);
        }
    }

    #[test]
    fn zero_weight_never_sampled() {
        let d = DiscreteDistribution::from_weights(vec![0, 1, 2], &[0.5, 0.0, 0.5]).unwrap();
        let mut r = rng::stream(2, 1);
        for _ in 0..10_000 {
            assert_ne!(d.sample_index(&mut r), 1);
        }
    }

    #[test]
    fn sampling_frequencies() {
        let mut r = rng::stream(3, 1);
        let draws = 100_000;
        let d = DiscreteDistribution::<_, f64>::uniform((0..9).collect()).unwrap();
        let mut counts = [0usize; 9];
        for _ in 0..draws {
            counts[d.sample_index(&mut r)] += 1;
        }
        for c in counts {
            assert_abs_diff_eq!(c as f64 / draws as f64, 1.0 / 9.0, epsilon = 0.005);
        }
        let d = DiscreteDistribution::from_weights(vec![0, 1], &[0.9, 0.1]).unwrap();
        let ones = (0..draws).filter(|_| d.sample_index(&mut r) == 1).count();
        assert_abs_diff_eq!(ones as f64 / draws as f64, 0.1, epsilon = 0.01);
    }

    #[test]
    fn absorb_applies_bayes_rule() {
        let mut d = DiscreteDistribution::<_, f64>::uniform(vec![0, 1]).unwrap();
        d.absorb(&[0.9f64.ln(), 0.1f64.ln()], &[false, false]).unwrap();
        let w = d.weights();
        assert_abs_diff_eq!(w[0], 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.1, epsilon = 1e-12);

        let before = d.clone();
        d.absorb(&[-3.0, -3.0], &[false, false]).unwrap();
        for (a, b) in d.weights().iter().zip(before.weights()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(matches!(
            d.absorb(&[LOG_FLOOR, LOG_FLOOR], &[true, true]),
            Err(Error::AllWeightsAtFloor)
        ));
    }
}
