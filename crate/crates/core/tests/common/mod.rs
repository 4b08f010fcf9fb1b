//! Test-side reference implementations. None of these call into the
//! library's enumeration, encoding or simulation code.
#![allow(dead_code)]

use num_complex::Complex64;
use qrobust::qubo::QuboProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random QUBO with coefficients in `[-5, 5)` and roughly half the pairs coupled.
pub fn random_qubo(n: usize, seed: u64) -> QuboProblem {
    let mut r = rng(seed);
    let linear: Vec<_> = (0..n).map(|i| (i, r.random_range(-5.0..5.0))).collect();
    let mut quad = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(0.5) {
                quad.push(((i, j), r.random_range(-5.0..5.0)));
            }
        }
    }
    QuboProblem::new(n, linear, quad, r.random_range(-2.0..2.0)).unwrap()
}

/// Random QUBO with small integer coefficients.
pub fn random_integer_qubo(n: usize, seed: u64) -> QuboProblem {
    let mut r = rng(seed);
    let linear: Vec<_> = (0..n).map(|i| (i, r.random_range(-4..=4) as f64)).collect();
    let mut quad = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            quad.push(((i, j), r.random_range(-4..=4) as f64));
        }
    }
    QuboProblem::new(n, linear, quad, 0.0).unwrap()
}

/// Energy from the coefficient maps, with bit `i` of `index` as variable `i`.
pub fn energy_of_index(q: &QuboProblem, index: u64) -> f64 {
    let x: Vec<f64> = (0..q.num_vars()).map(|i| ((index >> i) & 1) as f64).collect();
    let mut e = q.offset();
    for (&i, &a) in q.linear() {
        e += a * x[i];
    }
    for (&(i, j), &b) in q.quadratic() {
        e += b * x[i] * x[j];
    }
    e
}

/// Minimum energy and every index attaining it within `tol`, by plain scan.
pub fn brute_force_min(q: &QuboProblem, tol: f64) -> (f64, Vec<u64>) {
    let energies: Vec<f64> = (0..1u64 << q.num_vars()).map(|b| energy_of_index(q, b)).collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let argmins = (0..energies.len() as u64).filter(|&b| energies[b as usize] <= min + tol).collect();
    (min, argmins)
}

pub type Matrix = Vec<Vec<Complex64>>;

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matvec(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Explicit `2^n × 2^n` mixer `⊗_k exp(−iβX)`, with qubit 0 as the least
/// significant index bit (rightmost Kronecker factor).
pub fn dense_mixer(n: usize, beta: f64) -> Matrix {
    let (c, s) = (Complex64::new(beta.cos(), 0.0), Complex64::new(0.0, -beta.sin()));
    let rx: Matrix = vec![vec![c, s], vec![s, c]];
    let mut m: Matrix = vec![vec![Complex64::new(1.0, 0.0)]];
    for _ in 0..n {
        m = kron(&rx, &m);
    }
    m
}

/// Explicit diagonal cost unitary `exp(−iγE)`.
pub fn dense_cost(q: &QuboProblem, gamma: f64) -> Matrix {
    let dim = 1usize << q.num_vars();
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for (b, row) in m.iter_mut().enumerate() {
        row[b] = Complex64::from_polar(1.0, -gamma * energy_of_index(q, b as u64));
    }
    m
}

/// Reference QAOA state by dense matrix products, one state per layer.
pub fn dense_qaoa_layers(q: &QuboProblem, betas: &[f64], gammas: &[f64]) -> Vec<Vec<Complex64>> {
    let n = q.num_vars();
    let dim = 1usize << n;
    let mut psi = vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim];
    let mut layers = Vec::new();
    for (&b, &g) in betas.iter().zip(gammas) {
        psi = matvec(&dense_cost(q, g), &psi);
        psi = matvec(&dense_mixer(n, b), &psi);
        layers.push(psi.clone());
    }
    layers
}

pub fn instance_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

/// Runs the binary and returns its exit code.
pub fn run_cli(args: &[&str]) -> i32 {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_qrobust")).args(args).output().unwrap();
    out.status.code().expect("terminated by signal")
}

/// Every file in `dir` with its bytes, keyed by file name.
pub fn dir_contents(dir: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}
