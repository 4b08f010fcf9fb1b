//! Classical sample-set producers.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qubo::{all_energies, Bitstring, QuboProblem, SampleSet};
use crate::seed::{child_seed, rng_from_seed};

/// Largest problem the enumeration-based samplers accept.
pub const BOLTZMANN_CAP: usize = 20;

/// Common shape of every sampler: a QUBO, a shot budget and a seed in,
/// a deduplicated sample set out.
pub trait Sampler: Sync {
    fn name(&self) -> &str;
    fn sample(&self, q: &QuboProblem, shots: u64, seed: u64) -> Result<SampleSet>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaSchedule {
    Geometric,
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaConfig {
    pub num_sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub schedule: BetaSchedule,
    pub shots: u64,
    pub seed: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig { num_sweeps: 1000, beta_start: 0.1, beta_end: 10.0, schedule: BetaSchedule::Geometric, shots: 1000, seed: 0 }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_sweeps == 0 {
            return Err(Error::InvalidArgument("num_sweeps must be at least 1".into()));
        }
        let ok = |b: f64| b.is_finite() && b > 0.0;
        if !(ok(self.beta_start) && ok(self.beta_end) && self.beta_start <= self.beta_end) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < beta_start <= beta_end, got {} and {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    /// Inverse temperature used during sweep `s`.
    pub fn beta_at(&self, s: usize) -> f64 {
        if self.num_sweeps == 1 {
            return self.beta_start;
        }
        let frac = s as f64 / (self.num_sweeps - 1) as f64;
        match self.schedule {
            BetaSchedule::Geometric => self.beta_start * (self.beta_end / self.beta_start).powf(frac),
            BetaSchedule::Linear => self.beta_start + (self.beta_end - self.beta_start) * frac,
        }
    }
}

/// Single-spin-flip Metropolis annealing. Shot `k` runs on its own stream
/// seeded by `child_seed(cfg.seed, k)`, so the result does not depend on how
/// shots are scheduled across threads.
pub fn sa_sample(q: &QuboProblem, cfg: &SaConfig) -> Result<SampleSet> {
    cfg.validate()?;
    if q.num_vars() == 0 {
        return Err(Error::InvalidArgument("cannot anneal a problem with no variables".into()));
    }
    let adj = q.adjacency();
    let linear = q.linear_dense();
    let betas: Vec<f64> = (0..cfg.num_sweeps).map(|s| cfg.beta_at(s)).collect();
    let shots: Vec<Bitstring> =
        (0..cfg.shots).into_par_iter().map(|k| anneal_one(&adj, &linear, &betas, child_seed(cfg.seed, k))).collect();
    SampleSet::from_shots(q, shots)
}

fn anneal_one(adj: &[Vec<(usize, f64)>], linear: &[f64], betas: &[f64], seed: u64) -> Bitstring {
    let n = linear.len();
    let mut rng = rng_from_seed(seed);
    let mut x: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    // field[i] = a_i + Σ_j b_ij x_j
    let mut field = linear.to_vec();
    for i in 0..n {
        if x[i] {
            for &(j, b) in &adj[i] {
                field[j] += b;
            }
        }
    }
    for &beta in betas {
        for i in 0..n {
            let delta = if x[i] { -field[i] } else { field[i] };
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                x[i] = !x[i];
                let sign = if x[i] { 1.0 } else { -1.0 };
                for &(j, b) in &adj[i] {
                    field[j] += sign * b;
                }
            }
        }
    }
    Bitstring::from_bools(x)
}

/// Exact Gibbs sampling: all `2^n` probabilities `∝ exp(−E/temperature)` are
/// computed and `shots` independent draws are made from them.
pub fn boltzmann_sample(q: &QuboProblem, temperature: f64, shots: u64, seed: u64) -> Result<SampleSet> {
    let n = q.num_vars();
    if n > BOLTZMANN_CAP {
        return Err(Error::SizeCap { num_vars: n, cap: BOLTZMANN_CAP });
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {temperature}")));
    }
    let energies = all_energies(q);
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (-(e - e_min) / temperature).exp()).collect();
    draw_counts(q, &weights, shots, seed)
}

/// Draws `shots` basis indices from unnormalized `weights` (index bit 0 = variable 0).
pub(crate) fn draw_counts(q: &QuboProblem, weights: &[f64], shots: u64, seed: u64) -> Result<SampleSet> {
    if shots == 0 {
        return Ok(SampleSet::empty());
    }
    let dist = WeightedIndex::new(weights).map_err(|e| Error::InvalidArgument(format!("sampling weights: {e}")))?;
    let mut rng = rng_from_seed(seed);
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..shots {
        *counts.entry(dist.sample(&mut rng)).or_insert(0) += 1;
    }
    let n = q.num_vars();
    let counts = counts.into_iter().map(|(b, c)| (Bitstring::from_index(b as u64, n), c)).collect();
    SampleSet::from_counts(q, counts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedAnnealing {
    pub num_sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub schedule: BetaSchedule,
}

impl Default for SimulatedAnnealing {
    fn default() -> Self {
        let d = SaConfig::default();
        SimulatedAnnealing { num_sweeps: d.num_sweeps, beta_start: d.beta_start, beta_end: d.beta_end, schedule: d.schedule }
    }
}

impl Sampler for SimulatedAnnealing {
    fn name(&self) -> &str {
        "sa"
    }

    fn sample(&self, q: &QuboProblem, shots: u64, seed: u64) -> Result<SampleSet> {
        let cfg = SaConfig {
            num_sweeps: self.num_sweeps,
            beta_start: self.beta_start,
            beta_end: self.beta_end,
            schedule: self.schedule,
            shots,
            seed,
        };
        sa_sample(q, &cfg)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Boltzmann {
    pub temperature: f64,
}

impl Sampler for Boltzmann {
    fn name(&self) -> &str {
        "boltzmann"
    }

    fn sample(&self, q: &QuboProblem, shots: u64, seed: u64) -> Result<SampleSet> {
        boltzmann_sample(q, self.temperature, shots, seed)
    }
}

/// Returns every bitstring once, ignoring the shot budget and seed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Exhaustive;

impl Sampler for Exhaustive {
    fn name(&self) -> &str {
        "exhaustive"
    }

    fn sample(&self, q: &QuboProblem, _shots: u64, _seed: u64) -> Result<SampleSet> {
        let n = q.num_vars();
        if n > BOLTZMANN_CAP {
            return Err(Error::SizeCap { num_vars: n, cap: BOLTZMANN_CAP });
        }
        let counts = (0..1u64 << n).map(|b| (Bitstring::from_index(b, n), 1)).collect();
        SampleSet::from_counts(q, counts)
    }
}
