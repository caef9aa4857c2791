//! Seeded random workloads for fuzzing and property tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::workload::{Process, Time, Workload};

/// Value ranges for generated workloads (all bounds inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkloadShape {
    pub min_processes: usize,
    pub max_processes: usize,
    pub max_arrival: Time,
    pub max_service: Time,
    pub max_priority: i64,
}

impl Default for WorkloadShape {
    fn default() -> Self {
        Self {
            min_processes: 1,
            max_processes: 50,
            max_arrival: 100,
            max_service: 20,
            max_priority: 9,
        }
    }
}

/// A workload whose indices are a shuffled `1..=n`, so list order and index
/// order differ. Every other field may repeat.
pub fn random_workload<R: Rng>(rng: &mut R, shape: &WorkloadShape) -> Workload {
    let n = rng.gen_range(shape.min_processes..=shape.max_processes);
    let mut indices: Vec<i64> = (1..=n as i64).collect();
    indices.shuffle(rng);
    let processes = indices
        .into_iter()
        .map(|pi| {
            Process::new(
                pi,
                rng.gen_range(0..=shape.max_arrival),
                rng.gen_range(1..=shape.max_service),
                rng.gen_range(0..=shape.max_priority),
            )
        })
        .collect();
    Workload::new("random", processes)
}

pub fn seeded_workload(seed: u64, shape: &WorkloadShape) -> Workload {
    let mut w = random_workload(&mut ChaCha8Rng::seed_from_u64(seed), shape);
    w.name = format!("random-{seed}");
    w
}
