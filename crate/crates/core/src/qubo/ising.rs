use std::collections::BTreeMap;

use super::{QuboBuilder, QuboProblem};
use crate::error::{Error, Result};

/// `offset + Σ h_i s_i + Σ_{i<j} J_ij s_i s_j` over spins `s_i ∈ {−1, +1}`.
///
/// Bits and spins are related by `x = (1 − s) / 2`, so `s = +1` is `x = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingProblem {
    pub h: Vec<f64>,
    pub couplings: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl IsingProblem {
    pub fn num_spins(&self) -> usize {
        self.h.len()
    }

    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.h.len() {
            return Err(Error::Dimension { expected: self.h.len(), got: spins.len() });
        }
        let mut e = self.offset;
        for (hi, &s) in self.h.iter().zip(spins) {
            e += hi * f64::from(s);
        }
        for (&(i, j), &jij) in &self.couplings {
            e += jij * f64::from(spins[i] * spins[j]);
        }
        Ok(e)
    }

    /// Spin configuration corresponding to a bit assignment.
    pub fn spins_from_bits(bits: &[u8]) -> Vec<i8> {
        bits.iter().map(|&b| 1 - 2 * b as i8).collect()
    }
}

impl QuboProblem {
    pub fn to_ising(&self) -> IsingProblem {
        let mut h = vec![0.0; self.num_vars()];
        let mut offset = self.offset();
        for (&i, &a) in self.linear() {
            h[i] -= a / 2.0;
            offset += a / 2.0;
        }
        let mut couplings = BTreeMap::new();
        for (&(i, j), &b) in self.quadratic() {
            let q = b / 4.0;
            couplings.insert((i, j), q);
            h[i] -= q;
            h[j] -= q;
            offset += q;
        }
        IsingProblem { h, couplings, offset }
    }

    pub fn from_ising(ising: &IsingProblem) -> Result<QuboProblem> {
        let mut b = QuboBuilder::new(ising.h.len());
        b.add_offset(ising.offset);
        for (i, &hi) in ising.h.iter().enumerate() {
            b.add_offset(hi);
            b.add_linear(i, -2.0 * hi);
        }
        for (&(i, j), &jij) in &ising.couplings {
            if i >= j {
                return Err(Error::InvalidQubo(format!("coupling key ({i},{j}) must satisfy i < j")));
            }
            b.add_offset(jij);
            b.add_linear(i, -2.0 * jij);
            b.add_linear(j, -2.0 * jij);
            b.add_quadratic(i, j, 4.0 * jij);
        }
        b.build()
    }
}
