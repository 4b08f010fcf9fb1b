//! Dense statevector QAOA for diagonal QUBO Hamiltonians.
//!
//! Basis index `b` encodes the bitstring with variable 0 as its least
//! significant bit. One layer applies `exp(−iγE)` to every amplitude and then
//! `exp(−iβX)` to every qubit.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qubo::{QuboProblem, SampleSet};
use crate::samplers::draw_counts;

pub const QAOA_CAP: usize = 20;

/// Below this many qubits the mixer runs on one thread.
const PARALLEL_MIXER_QUBITS: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct QaoaParams {
    betas: Vec<f64>,
    gammas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(betas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() || betas.len() != gammas.len() {
            return Err(Error::InvalidArgument(format!(
                "need p >= 1 betas and gammas of equal length, got {} and {}",
                betas.len(),
                gammas.len()
            )));
        }
        if betas.iter().chain(&gammas).any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        Ok(QaoaParams { betas, gammas })
    }

    pub fn single(beta: f64, gamma: f64) -> Result<Self> {
        QaoaParams::new(vec![beta], vec![gamma])
    }

    pub fn p(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|+⟩^{⊗n}`.
    pub fn uniform(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Statevector { num_qubits, amps: vec![a; dim] }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Multiplies amplitude `b` by `exp(−iγ·energies[b])`.
    pub fn apply_cost(&mut self, energies: &[f64], gamma: f64) {
        for (a, &e) in self.amps.iter_mut().zip(energies) {
            *a *= Complex64::cis(-gamma * e);
        }
    }

    /// Applies `exp(−iβX)` to every qubit.
    pub fn apply_mixer(&mut self, beta: f64) {
        let (c, s) = (beta.cos(), beta.sin());
        let parallel = self.num_qubits >= PARALLEL_MIXER_QUBITS;
        for k in 0..self.num_qubits {
            let half = 1usize << k;
            let rotate = |chunk: &mut [Complex64]| {
                let (lo, hi) = chunk.split_at_mut(half);
                for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x0, x1) = (*a0, *a1);
                    *a0 = x0 * c - Complex64::i() * x1 * s;
                    *a1 = x1 * c - Complex64::i() * x0 * s;
                }
            };
            if parallel {
                self.amps.par_chunks_mut(2 * half).for_each(rotate);
            } else {
                self.amps.chunks_mut(2 * half).for_each(rotate);
            }
        }
    }

    /// `Σ_b |amp_b|²·energies[b]`, summed in index order.
    pub fn expectation(&self, energies: &[f64]) -> f64 {
        self.amps.iter().zip(energies).map(|(a, e)| a.norm_sqr() * e).sum()
    }

    /// Draws `shots` bitstrings from `|amp|²` and scores them with `q`.
    pub fn sample(&self, q: &QuboProblem, shots: u64, seed: u64) -> Result<SampleSet> {
        if q.num_vars() != self.num_qubits {
            return Err(Error::Dimension { expected: self.num_qubits, got: q.num_vars() });
        }
        draw_counts(q, &self.probabilities(), shots, seed)
    }
}

fn check_size(q: &QuboProblem) -> Result<()> {
    if q.num_vars() > QAOA_CAP {
        return Err(Error::SizeCap { num_vars: q.num_vars(), cap: QAOA_CAP });
    }
    Ok(())
}

/// Energies of every basis state, by index.
pub fn diagonal(q: &QuboProblem) -> Result<Vec<f64>> {
    check_size(q)?;
    Ok((0..1u64 << q.num_vars()).into_par_iter().map(|b| q.evaluate_index(b)).collect())
}

fn evolve(n: usize, energies: &[f64], params: &QaoaParams, mut observe: impl FnMut(usize, &Statevector)) -> Statevector {
    let mut psi = Statevector::uniform(n);
    for (l, (&beta, &gamma)) in params.betas.iter().zip(&params.gammas).enumerate() {
        psi.apply_cost(energies, gamma);
        psi.apply_mixer(beta);
        observe(l, &psi);
    }
    psi
}

pub fn qaoa_state(q: &QuboProblem, params: &QaoaParams) -> Result<Statevector> {
    qaoa_state_observed(q, params, |_, _| {})
}

/// Like [`qaoa_state`], calling `observe(layer, state)` after each layer.
pub fn qaoa_state_observed(
    q: &QuboProblem,
    params: &QaoaParams,
    observe: impl FnMut(usize, &Statevector),
) -> Result<Statevector> {
    let energies = diagonal(q)?;
    Ok(evolve(q.num_vars(), &energies, params, observe))
}

pub fn expectation(q: &QuboProblem, params: &QaoaParams) -> Result<f64> {
    let energies = diagonal(q)?;
    Ok(evolve(q.num_vars(), &energies, params, |_, _| {}).expectation(&energies))
}

pub fn qaoa_sample(q: &QuboProblem, params: &QaoaParams, shots: u64, seed: u64) -> Result<SampleSet> {
    qaoa_state(q, params)?.sample(q, shots, seed)
}

/// `count` evenly spaced points on `[0, π)`.
pub fn default_beta_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| PI * i as f64 / count as f64).collect()
}

/// `count` evenly spaced points on `[0, 2π)`.
pub fn default_gamma_grid(count: usize) -> Vec<f64> {
    (0..count).map(|j| 2.0 * PI * j as f64 / count as f64).collect()
}

pub const DEFAULT_BETA_POINTS: usize = 32;
pub const DEFAULT_GAMMA_POINTS: usize = 64;

/// `values[i][j]` is the p = 1 expectation at `(betas[i], gammas[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct Landscape {
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Landscape {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Row-major CSV with header `beta,gamma,expectation`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["beta", "gamma", "expectation"])?;
        for (i, &b) in self.betas.iter().enumerate() {
            for (j, &g) in self.gammas.iter().enumerate() {
                out.write_record([b.to_string(), g.to_string(), self.values[i][j].to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub best: QaoaParams,
    pub best_index: (usize, usize),
    pub best_value: f64,
    pub landscape: Landscape,
}

/// Evaluates every grid point at p = 1. The best point is the first, in
/// row-major order, whose value is within `1e-12·max(1, |min|)` of the minimum.
pub fn grid_search(q: &QuboProblem, betas: &[f64], gammas: &[f64]) -> Result<GridResult> {
    if betas.is_empty() || gammas.is_empty() {
        return Err(Error::InvalidArgument("beta and gamma grids must be nonempty".into()));
    }
    if betas.iter().chain(gammas).any(|a| !a.is_finite()) {
        return Err(Error::InvalidArgument("grid angles must be finite".into()));
    }
    let energies = diagonal(q)?;
    let n = q.num_vars();
    let flat: Vec<f64> = (0..betas.len() * gammas.len())
        .into_par_iter()
        .map(|k| {
            let params = QaoaParams { betas: vec![betas[k / gammas.len()]], gammas: vec![gammas[k % gammas.len()]] };
            evolve(n, &energies, &params, |_, _| {}).expectation(&energies)
        })
        .collect();
    let min = flat.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * min.abs().max(1.0);
    let k = flat.iter().position(|&v| v <= min + tol).expect("grid is nonempty");
    let (i, j) = (k / gammas.len(), k % gammas.len());
    let values = flat.chunks(gammas.len()).map(<[f64]>::to_vec).collect();
    Ok(GridResult {
        best: QaoaParams::single(betas[i], gammas[j])?,
        best_index: (i, j),
        best_value: flat[k],
        landscape: Landscape { betas: betas.to_vec(), gammas: gammas.to_vec(), values },
    })
}
