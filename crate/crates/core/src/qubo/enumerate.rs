//! Exhaustive minimization, the classical ground-truth oracle.

use rayon::prelude::*;

use super::{Bitstring, QuboProblem, ENERGY_TOL};
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Low bits walked in Gray-code order inside one block. Each block restarts
/// from an exactly evaluated energy, which bounds incremental drift.
const BLOCK_BITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub energy: f64,
    /// All minimizers, sorted lexicographically.
    pub argmins: Vec<Bitstring>,
}

pub fn enumerate_optimum(
    q: &QuboProblem,
    feasible: Option<&(dyn Fn(&Bitstring) -> bool + Sync)>,
) -> Result<Optimum> {
    enumerate_optimum_with_cap(q, feasible, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_optimum_with_cap(
    q: &QuboProblem,
    feasible: Option<&(dyn Fn(&Bitstring) -> bool + Sync)>,
    cap: usize,
) -> Result<Optimum> {
    let n = q.num_vars();
    if n > cap || n >= 63 {
        return Err(Error::SizeCap { num_vars: n, cap });
    }
    let low = n.min(BLOCK_BITS);
    let blocks = 1u64 << (n - low);
    let linear = q.linear_dense();
    let adj = q.adjacency();
    let coef_mass: f64 = q.linear().values().chain(q.quadratic().values()).map(|v| v.abs()).sum();
    let slack = 1e-7 * (1.0 + coef_mass);

    let candidates: Vec<u64> = (0..blocks)
        .into_par_iter()
        .map(|block| scan_block(q, &linear, &adj, block << low, low, slack, feasible))
        .reduce(Vec::new, |mut a, b| {
            a.extend(b);
            a
        });

    if candidates.is_empty() {
        return Err(Error::Infeasible { scenario: None });
    }
    let exact: Vec<(u64, f64)> = candidates.into_iter().map(|idx| (idx, q.evaluate_index(idx))).collect();
    let energy = exact.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min);
    let mut argmins: Vec<Bitstring> = exact
        .into_iter()
        .filter(|&(_, e)| e <= energy + ENERGY_TOL)
        .map(|(idx, _)| Bitstring::from_index(idx, n))
        .collect();
    argmins.sort();
    Ok(Optimum { energy, argmins })
}

/// Energy of every basis state, indexed like [`QuboProblem::evaluate_index`].
/// Blocks of `2^12` states are walked in Gray-code order from an exact
/// starting energy, so rounding drift stays within a block.
pub(crate) fn all_energies(q: &QuboProblem) -> Vec<f64> {
    let n = q.num_vars();
    let linear = q.linear_dense();
    let adj = q.adjacency();
    let low = n.min(BLOCK_BITS);
    let blocks = 1u64 << (n - low);
    let per_block: Vec<Vec<(u64, f64)>> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut idx = blk << low;
            let mut e = q.evaluate_index(idx);
            let mut out = Vec::with_capacity(1 << low);
            out.push((idx, e));
            for g in 1u64..(1u64 << low) {
                let k = g.trailing_zeros() as usize;
                let mut field = linear[k];
                for &(j, b) in &adj[k] {
                    if (idx >> j) & 1 == 1 {
                        field += b;
                    }
                }
                if (idx >> k) & 1 == 1 {
                    e -= field;
                } else {
                    e += field;
                }
                idx ^= 1 << k;
                out.push((idx, e));
            }
            out
        })
        .collect();
    let mut energies = vec![0.0; 1usize << n];
    for (idx, e) in per_block.into_iter().flatten() {
        energies[idx as usize] = e;
    }
    energies
}

/// Walks the `2^low` assignments sharing the high bits of `base` and returns
/// every (feasible) index whose approximate energy is within `slack` of the
/// block's best.
fn scan_block(
    q: &QuboProblem,
    linear: &[f64],
    adj: &[Vec<(usize, f64)>],
    base: u64,
    low: usize,
    slack: f64,
    feasible: Option<&(dyn Fn(&Bitstring) -> bool + Sync)>,
) -> Vec<u64> {
    let n = q.num_vars();
    let mut idx = base;
    let mut e = q.evaluate_index(idx);
    let mut best = f64::INFINITY;
    let mut kept: Vec<(u64, f64)> = Vec::new();

    let consider = |idx: u64, e: f64, best: &mut f64, kept: &mut Vec<(u64, f64)>| {
        if e > *best + slack {
            return;
        }
        if let Some(pred) = feasible {
            if !pred(&Bitstring::from_index(idx, n)) {
                return;
            }
        }
        if e < *best {
            *best = e;
            let cutoff = e + slack;
            kept.retain(|&(_, ke)| ke <= cutoff);
        }
        kept.push((idx, e));
    };

    consider(idx, e, &mut best, &mut kept);
    for g in 1u64..(1u64 << low) {
        let k = g.trailing_zeros() as usize;
        let bit_set = (idx >> k) & 1 == 1;
        let mut field = linear[k];
        for &(j, b) in &adj[k] {
            if (idx >> j) & 1 == 1 {
                field += b;
            }
        }
        if bit_set {
            e -= field;
        } else {
            e += field;
        }
        idx ^= 1 << k;
        consider(idx, e, &mut best, &mut kept);
    }
    kept.into_iter().map(|(i, _)| i).collect()
}
