#![allow(dead_code)]

use rand::Rng;
use rmab::chain::Chain;
use rmab::model::{ArmModel, SystemParameter};

pub fn prob<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0.02..0.98)
}

/// Arm with independent active and passive chains and initial rate.
pub fn general_arm<R: Rng>(rng: &mut R) -> ArmModel<f64> {
    let active = Chain::new(prob(rng), prob(rng)).unwrap();
    let passive = Chain::new(prob(rng), prob(rng)).unwrap();
    ArmModel::new(active, passive, prob(rng)).unwrap()
}

pub fn general_param<R: Rng>(rng: &mut R, k: usize) -> SystemParameter<f64> {
    SystemParameter::new((0..k).map(|_| general_arm(rng)).collect()).unwrap()
}

/// Action-independent, stationary-init arms.
pub fn ge_param<R: Rng>(rng: &mut R, k: usize) -> SystemParameter<f64> {
    let pairs: Vec<(f64, f64)> = (0..k).map(|_| (prob(rng), prob(rng))).collect();
    SystemParameter::gilbert_elliott(&pairs).unwrap()
}
