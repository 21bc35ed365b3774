use crate::model::{EpisodeRecord, LastObs, SystemParameter};
use crate::scalar::Real;

use super::arm_pulls;

/// Pull counts `N(k, r, n)` and one-observation counts per cell, where `r`
/// is the arm's last observation (or none) and `n` in `1..=L` the rounds
/// since it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    num_arms: usize,
    length: usize,
    pulls: Vec<u64>,
    ones: Vec<u64>,
}

fn last_index(last: LastObs) -> usize {
    match last {
        LastObs::Bit(false) => 0,
        LastObs::Bit(true) => 1,
        LastObs::Unobserved => 2,
    }
}

const LASTS: [LastObs; 3] = [LastObs::Bit(false), LastObs::Bit(true), LastObs::Unobserved];

impl CountTable {
    pub fn new(num_arms: usize, length: usize) -> Self {
        let cells = num_arms * 3 * length;
        Self {
            num_arms,
            length,
            pulls: vec![0; cells],
            ones: vec![0; cells],
        }
    }

    fn cell(&self, k: usize, last: LastObs, n: usize) -> usize {
        assert!(k < self.num_arms && (1..=self.length).contains(&n), "cell ({k}, {last:?}, {n}) out of range");
        (k * 3 + last_index(last)) * self.length + (n - 1)
    }

    pub fn record(&mut self, record: &EpisodeRecord) {
        for k in 0..self.num_arms {
            for (summary, x) in arm_pulls(record, k) {
                let c = self.cell(k, summary.last, summary.since);
                self.pulls[c] += 1;
                self.ones[c] += u64::from(x);
            }
        }
    }

    pub fn count(&self, k: usize, last: LastObs, n: usize) -> u64 {
        self.pulls[self.cell(k, last, n)]
    }

    pub fn ones(&self, k: usize, last: LastObs, n: usize) -> u64 {
        self.ones[self.cell(k, last, n)]
    }

    /// Empirical one-rate of a cell; 0 for a cell never pulled.
    pub fn empirical(&self, k: usize, last: LastObs, n: usize) -> f64 {
        let c = self.cell(k, last, n);
        if self.pulls[c] == 0 {
            0.0
        } else {
            self.ones[c] as f64 / self.pulls[c] as f64
        }
    }

    pub fn total(&self) -> u64 {
        self.pulls.iter().sum()
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Every `(k, r, n)` cell.
    pub fn cells(&self) -> impl Iterator<Item = (usize, LastObs, usize)> + '_ {
        (0..self.num_arms).flat_map(move |k| LASTS.into_iter().flat_map(move |r| (1..=self.length).map(move |n| (k, r, n))))
    }
}

/// Counts over a history of episodes.
pub fn counts<'a>(
    records: impl IntoIterator<Item = &'a EpisodeRecord>,
    num_arms: usize,
    length: usize,
) -> CountTable {
    let mut table = CountTable::new(num_arms, length);
    for r in records {
        table.record(r);
    }
    table
}

/// Hoeffding radius `sqrt(2 ln(1/delta) / max(1, count))`.
pub fn confidence_radius(count: u64, delta: f64) -> f64 {
    (2.0 * (1.0 / delta).ln() / count.max(1) as f64).sqrt()
}

/// Whether every cell's belief under `param` lies strictly within the
/// confidence radius of the empirical rate.
pub fn confidence_set_contains<T: Real>(param: &SystemParameter<T>, table: &CountTable, delta: f64) -> bool {
    table.cells().all(|(k, last, n)| {
        let belief = param
            .arm(k)
            .belief(&crate::model::ArmSummary { last, since: n })
            .as_f64();
        (table.empirical(k, last, n) - belief).abs() < confidence_radius(table.count(k, last, n), delta)
    })
}
