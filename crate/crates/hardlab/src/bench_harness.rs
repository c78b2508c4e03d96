//! Synthetic MAX-k-CUT datasets and solver benchmarking.
//!
//! Twenty models: five families, four settings each. Model `id` (1..=20)
//! maps to family `(id - 1) / 4` and setting `(id - 1) % 4`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kcut_solver::{solve, Backend, Clause, KCutInstance, SolveError};
use crate::Rational;

pub const MODEL_COUNT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BenchError {
    #[error("no backends requested")]
    NoBackends,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("model id {0} outside 1..=20")]
    Model(usize),
    #[error("count must be at least 1")]
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    UniformRandom,
    PlantedKPartition,
    GadgetShaped,
    PowerLawDegree,
    BipartiteLike,
}

const FAMILIES: [Family; 5] =
    [Family::UniformRandom, Family::PlantedKPartition, Family::GadgetShaped, Family::PowerLawDegree, Family::BipartiteLike];
const DENSITY: [f64; 4] = [0.2, 0.35, 0.5, 0.8];
const NOISE: [f64; 4] = [0.0, 0.05, 0.15, 0.3];
const WEIGHT_MAX: [u32; 4] = [1, 3, 9, 20];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceModel {
    pub id: usize,
    pub family: Family,
    pub density: f64,
    /// Probability scale for edges that break the planted structure.
    pub noise: f64,
    pub weight_max: u32,
}

impl InstanceModel {
    pub fn get(id: usize) -> Result<Self, BenchError> {
        if !(1..=MODEL_COUNT).contains(&id) {
            return Err(BenchError::Model(id));
        }
        let s = (id - 1) % 4;
        Ok(Self { id, family: FAMILIES[(id - 1) / 4], density: DENSITY[s], noise: NOISE[s], weight_max: WEIGHT_MAX[s] })
    }

    pub fn all() -> Vec<Self> {
        (1..=MODEL_COUNT).map(|id| Self::get(id).expect("in range")).collect()
    }

    fn rng(&self, seed: u64, m: usize, k: usize) -> ChaCha8Rng {
        let mix = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((self.id as u64) << 40)
            .wrapping_add((m as u64) << 16)
            .wrapping_add(k as u64);
        ChaCha8Rng::seed_from_u64(mix)
    }

    /// Pure function of `(id, seed, m, k)`. Also returns the planted
    /// coloring for the planted and bipartite-like families.
    pub fn generate_planted(&self, seed: u64, m: usize, k: usize) -> (KCutInstance, Option<Vec<u8>>) {
        let mut rng = self.rng(seed, m, k);
        let mut inst = KCutInstance::new(k, m);
        let weight = |rng: &mut ChaCha8Rng| Rational::from_integer(rng.gen_range(1..=self.weight_max as i64).into());
        let mut planted = None;
        match self.family {
            Family::UniformRandom => {
                for a in 0..m {
                    for b in a + 1..m {
                        if rng.gen_bool(self.density) {
                            let w = weight(&mut rng);
                            inst.clauses.push(Clause { a, b, w });
                        }
                    }
                }
            }
            Family::PlantedKPartition | Family::BipartiteLike => {
                let parts = if self.family == Family::BipartiteLike { 2.min(k) } else { k };
                let h: Vec<u8> = (0..m).map(|_| rng.gen_range(0..parts) as u8).collect();
                for a in 0..m {
                    for b in a + 1..m {
                        let p = if h[a] != h[b] { self.density } else { self.density * self.noise };
                        if p > 0.0 && rng.gen_bool(p) {
                            let w = weight(&mut rng);
                            inst.clauses.push(Clause { a, b, w });
                        }
                    }
                }
                planted = Some(h);
            }
            Family::GadgetShaped => {
                // 3 primaries and k globals as hubs, auxiliaries wired to hubs and sparsely to each other.
                let hubs = (3 + k).min(m);
                for a in hubs..m {
                    for b in 0..hubs {
                        if rng.gen_bool(self.density) {
                            let w = weight(&mut rng);
                            inst.clauses.push(Clause { a, b, w });
                        }
                    }
                    for b in a + 1..m {
                        if rng.gen_bool(self.density / 2.0) {
                            let w = weight(&mut rng);
                            inst.clauses.push(Clause { a, b, w });
                        }
                    }
                }
                for a in 3..hubs {
                    for b in a + 1..hubs {
                        let w = weight(&mut rng);
                        inst.clauses.push(Clause { a, b, w });
                    }
                }
            }
            Family::PowerLawDegree => {
                // Chung-Lu with expected degrees proportional to (v + 1)^(-1/2).
                let wts: Vec<f64> = (0..m).map(|v| ((v + 1) as f64).powf(-0.5)).collect();
                let total: f64 = wts.iter().sum();
                let scale = self.density * m as f64;
                for a in 0..m {
                    for b in a + 1..m {
                        let p = (scale * wts[a] * wts[b] / total).min(1.0);
                        if rng.gen_bool(p) {
                            let w = weight(&mut rng);
                            inst.clauses.push(Clause { a, b, w });
                        }
                    }
                }
            }
        }
        (inst, planted)
    }

    pub fn generate(&self, seed: u64, m: usize, k: usize) -> KCutInstance {
        self.generate_planted(seed, m, k).0
    }
}

/// `count` instances cycling through models 1..=20; instance `i` uses model
/// `i % 20 + 1` with seed `seed + i / 20`.
pub fn generate_instances(k: usize, m: usize, count: usize, seed: u64) -> Result<Vec<KCutInstance>, BenchError> {
    if count == 0 {
        return Err(BenchError::Count);
    }
    let models = InstanceModel::all();
    Ok((0..count).map(|i| models[i % MODEL_COUNT].generate(seed.wrapping_add((i / MODEL_COUNT) as u64), m, k)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct BackendStats {
    pub backend: String,
    pub mean_secs: f64,
    pub median_secs: f64,
    pub max_secs: f64,
    pub solved: usize,
    pub timeouts: usize,
    /// Optimal values as `p/q` strings, `None` on timeout.
    pub values: Vec<Option<String>>,
    #[serde(skip)]
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub instances: usize,
    pub threads: usize,
    pub deadline_secs: f64,
    pub backends: Vec<BackendStats>,
    /// Instances on which two backends that both finished disagree.
    pub disagreements: Vec<usize>,
}

impl BenchReport {
    pub fn agreement(&self) -> bool {
        self.disagreements.is_empty()
    }
}

fn backend_name(b: Backend) -> &'static str {
    match b {
        Backend::Brute => "brute",
        Backend::Bnb => "bnb",
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Times every backend on every instance. Timed-out runs count the full
/// deadline.
pub fn run_bench(dataset: &[KCutInstance], backends: &[Backend], deadline: Duration) -> Result<BenchReport, BenchError> {
    if backends.is_empty() {
        return Err(BenchError::NoBackends);
    }
    if dataset.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    let mut stats = Vec::new();
    for &b in backends {
        let runs: Vec<(f64, Option<Rational>)> = dataset
            .par_iter()
            .map(|inst| {
                let start = Instant::now();
                let r = solve(inst, b, Some(start + deadline));
                let secs = start.elapsed().as_secs_f64();
                match r {
                    Ok(s) => (secs, Some(s.value)),
                    Err(SolveError::Timeout) => (deadline.as_secs_f64(), None),
                    Err(_) => (secs, None),
                }
            })
            .collect();
        let times: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let solved = runs.iter().filter(|r| r.1.is_some()).count();
        stats.push((
            BackendStats {
                backend: backend_name(b).into(),
                mean_secs: times.iter().sum::<f64>() / times.len() as f64,
                median_secs: median(&times),
                max_secs: times.iter().copied().fold(0.0, f64::max),
                solved,
                timeouts: runs.len() - solved,
                values: runs.iter().map(|r| r.1.as_ref().map(|v| v.to_string())).collect(),
                times,
            },
            runs.into_iter().map(|r| r.1).collect::<Vec<_>>(),
        ));
    }
    let disagreements = (0..dataset.len())
        .filter(|&i| {
            let vals: Vec<&Rational> = stats.iter().filter_map(|(_, v)| v[i].as_ref()).collect();
            vals.windows(2).any(|w| w[0] != w[1])
        })
        .collect();
    Ok(BenchReport {
        instances: dataset.len(),
        threads: rayon::current_num_threads(),
        deadline_secs: deadline.as_secs_f64(),
        backends: stats.into_iter().map(|(s, _)| s).collect(),
        disagreements,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HeadlinePoint {
    pub m: usize,
    pub mean_secs: f64,
}

/// Largest `m` in `m_from..=m_to` at which `backend` averages at most
/// `budget` per instance, scanning upward and stopping at the first miss.
pub fn headline_m(
    backend: Backend,
    k: usize,
    count: usize,
    seed: u64,
    m_from: usize,
    m_to: usize,
    budget: Duration,
) -> Result<(Option<usize>, Vec<HeadlinePoint>), BenchError> {
    let mut best = None;
    let mut curve = Vec::new();
    for m in m_from..=m_to {
        let data = generate_instances(k, m, count, seed)?;
        let r = run_bench(&data, &[backend], budget * 2)?;
        let mean = r.backends[0].mean_secs;
        curve.push(HeadlinePoint { m, mean_secs: mean });
        if mean > budget.as_secs_f64() {
            break;
        }
        best = Some(m);
    }
    Ok((best, curve))
}
