//! Quadratic unconstrained binary optimization problems.
//!
//! [`QuboProblem`] is the exchange format between the use-case models, the
//! samplers and the QAOA simulator. Coefficients are stored sparsely with the
//! quadratic keys strictly upper-triangular; exact zeros are dropped when a
//! problem is built.

mod enumerate;
mod ising;
mod penalty;
mod sample_set;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use enumerate::{enumerate_optimum, enumerate_optimum_with_cap, Optimum, DEFAULT_ENUMERATION_CAP};
pub use ising::IsingProblem;
pub use penalty::{penalty_and_gadget, penalty_linear_eq};
pub(crate) use enumerate::all_energies;
pub(crate) use penalty::{add_and_not_gadget, add_square};
pub use sample_set::{SampleEntry, SampleSet};

/// Absolute tolerance used when two energies are considered equal.
pub const ENERGY_TOL: f64 = 1e-9;

/// An assignment of 0/1 values to the variables of a QUBO, variable 0 first.
///
/// Ordering is lexicographic over the variables, which is the tie-break
/// used everywhere a unique winner is needed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bitstring(Vec<u8>);

impl Bitstring {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Bitstring(bits))
    }

    pub fn zeros(n: usize) -> Self {
        Bitstring(vec![0; n])
    }

    /// Decodes a basis index with variable 0 as the least significant bit.
    pub fn from_index(index: u64, n: usize) -> Self {
        Bitstring((0..n).map(|i| ((index >> i) & 1) as u8).collect())
    }

    /// Inverse of [`Bitstring::from_index`].
    pub fn to_index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        Bitstring(bits.into_iter().map(u8::from).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = u8::from(value);
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitstring({self})")
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidArgument(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Bitstring)
    }
}

/// Sparse QUBO: `offset + Σ linear_i x_i + Σ_{i<j} quadratic_ij x_i x_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuboProblem {
    num_vars: usize,
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
    labels: BTreeMap<String, usize>,
}

impl QuboProblem {
    /// A problem with no terms at all.
    pub fn empty(num_vars: usize) -> Self {
        QuboProblem {
            num_vars,
            linear: BTreeMap::new(),
            quadratic: BTreeMap::new(),
            offset: 0.0,
            labels: BTreeMap::new(),
        }
    }

    /// Builds a problem from explicit coefficient lists; repeated keys are summed
    /// and `(j, i)` keys are folded onto `(i, j)`.
    pub fn new(
        num_vars: usize,
        linear: impl IntoIterator<Item = (usize, f64)>,
        quadratic: impl IntoIterator<Item = ((usize, usize), f64)>,
        offset: f64,
    ) -> Result<Self> {
        let mut b = QuboBuilder::new(num_vars);
        for (i, v) in linear {
            b.add_linear(i, v);
        }
        for ((i, j), v) in quadratic {
            b.add_quadratic(i, j, v);
        }
        b.add_offset(offset);
        b.build()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self) -> &BTreeMap<usize, f64> {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn labels(&self) -> &BTreeMap<String, usize> {
        &self.labels
    }

    pub fn linear_coef(&self, i: usize) -> f64 {
        self.linear.get(&i).copied().unwrap_or(0.0)
    }

    pub fn quadratic_coef(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.quadratic.get(&key).copied().unwrap_or(0.0)
    }

    /// Attaches variable names. The map must be empty or a bijection onto
    /// `0..num_vars`.
    pub fn with_labels(mut self, labels: BTreeMap<String, usize>) -> Result<Self> {
        validate_labels(self.num_vars, &labels)?;
        self.labels = labels;
        Ok(self)
    }

    pub fn evaluate(&self, x: &Bitstring) -> Result<f64> {
        if x.len() != self.num_vars {
            return Err(Error::Dimension { expected: self.num_vars, got: x.len() });
        }
        Ok(self.evaluate_bits(x.bits()))
    }

    /// Energy of a 0/1 slice; the caller guarantees the length.
    pub(crate) fn evaluate_bits(&self, x: &[u8]) -> f64 {
        let mut e = self.offset;
        for (&i, &a) in &self.linear {
            if x[i] == 1 {
                e += a;
            }
        }
        for (&(i, j), &b) in &self.quadratic {
            if x[i] == 1 && x[j] == 1 {
                e += b;
            }
        }
        e
    }

    /// Energy of the basis state `index` (variable 0 is the least significant bit).
    pub fn evaluate_index(&self, index: u64) -> f64 {
        let bit = |i: usize| (index >> i) & 1 == 1;
        let mut e = self.offset;
        for (&i, &a) in &self.linear {
            if bit(i) {
                e += a;
            }
        }
        for (&(i, j), &b) in &self.quadratic {
            if bit(i) && bit(j) {
                e += b;
            }
        }
        e
    }

    /// Largest absolute linear or quadratic coefficient (0 for a constant problem).
    pub fn max_abs_coefficient(&self) -> f64 {
        self.linear
            .values()
            .chain(self.quadratic.values())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Divides every coefficient (offset included) by the largest absolute
    /// coefficient. Returns the scaled problem and the scale that was divided out.
    pub fn normalized(&self) -> (QuboProblem, f64) {
        let scale = self.max_abs_coefficient();
        if scale == 0.0 {
            return (self.clone(), 1.0);
        }
        (self.scaled(1.0 / scale), scale)
    }

    pub fn scaled(&self, factor: f64) -> QuboProblem {
        let mut b = QuboBuilder::new(self.num_vars);
        b.add_scaled(self, factor);
        let mut q = b.build_unchecked();
        q.labels = self.labels.clone();
        q
    }

    /// Per-variable adjacency: `(neighbour, coefficient)` for every quadratic term.
    pub(crate) fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_vars];
        for (&(i, j), &b) in &self.quadratic {
            adj[i].push((j, b));
            adj[j].push((i, b));
        }
        adj
    }

    /// Dense linear coefficient vector.
    pub(crate) fn linear_dense(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.num_vars];
        for (&i, &a) in &self.linear {
            h[i] = a;
        }
        h
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&QuboJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: QuboJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let raw: QuboJson = serde_json::from_slice(bytes)?;
        raw.try_into()
    }
}

fn validate_labels(num_vars: usize, labels: &BTreeMap<String, usize>) -> Result<()> {
    if labels.is_empty() {
        return Ok(());
    }
    if labels.len() != num_vars {
        return Err(Error::InvalidQubo(format!(
            "{} labels for {num_vars} variables",
            labels.len()
        )));
    }
    let mut seen = vec![false; num_vars];
    for (name, &idx) in labels {
        if idx >= num_vars || seen[idx] {
            return Err(Error::InvalidQubo(format!("label {name:?} maps to invalid or repeated index {idx}")));
        }
        seen[idx] = true;
    }
    Ok(())
}

/// Accumulates terms; `build` validates and drops exact zeros.
#[derive(Clone, Debug)]
pub struct QuboBuilder {
    num_vars: usize,
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
    labels: BTreeMap<String, usize>,
}

impl QuboBuilder {
    pub fn new(num_vars: usize) -> Self {
        QuboBuilder {
            num_vars,
            linear: BTreeMap::new(),
            quadratic: BTreeMap::new(),
            offset: 0.0,
            labels: BTreeMap::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn label(&mut self, name: impl Into<String>, index: usize) -> &mut Self {
        self.labels.insert(name.into(), index);
        self
    }

    pub fn add_offset(&mut self, value: f64) -> &mut Self {
        self.offset += value;
        self
    }

    pub fn add_linear(&mut self, i: usize, value: f64) -> &mut Self {
        *self.linear.entry(i).or_insert(0.0) += value;
        self
    }

    /// `x_i x_j`; a diagonal term collapses to linear since `x² = x`.
    pub fn add_quadratic(&mut self, i: usize, j: usize, value: f64) -> &mut Self {
        if i == j {
            return self.add_linear(i, value);
        }
        let key = if i < j { (i, j) } else { (j, i) };
        *self.quadratic.entry(key).or_insert(0.0) += value;
        self
    }

    /// Adds `factor · other` term by term. `other` may use fewer variables.
    pub fn add_scaled(&mut self, other: &QuboProblem, factor: f64) -> &mut Self {
        self.offset += factor * other.offset;
        for (&i, &a) in &other.linear {
            self.add_linear(i, factor * a);
        }
        for (&(i, j), &b) in &other.quadratic {
            self.add_quadratic(i, j, factor * b);
        }
        self
    }

    fn build_unchecked(self) -> QuboProblem {
        QuboProblem {
            num_vars: self.num_vars,
            linear: self.linear.into_iter().filter(|&(_, v)| v != 0.0).collect(),
            quadratic: self.quadratic.into_iter().filter(|&(_, v)| v != 0.0).collect(),
            offset: self.offset,
            labels: self.labels,
        }
    }

    pub fn build(self) -> Result<QuboProblem> {
        let n = self.num_vars;
        if !self.offset.is_finite() {
            return Err(Error::InvalidQubo("non-finite offset".into()));
        }
        for (&i, &v) in &self.linear {
            if i >= n {
                return Err(Error::InvalidQubo(format!("linear index {i} out of range for {n} variables")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidQubo(format!("non-finite linear coefficient at {i}")));
            }
        }
        for (&(i, j), &v) in &self.quadratic {
            if j >= n {
                return Err(Error::InvalidQubo(format!("quadratic index ({i},{j}) out of range for {n} variables")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidQubo(format!("non-finite quadratic coefficient at ({i},{j})")));
            }
        }
        validate_labels(n, &self.labels)?;
        Ok(self.build_unchecked())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuboJson {
    num_vars: usize,
    #[serde(default)]
    offset: f64,
    #[serde(default)]
    linear: BTreeMap<String, f64>,
    #[serde(default)]
    quadratic: BTreeMap<String, f64>,
    #[serde(default)]
    labels: BTreeMap<String, usize>,
}

impl From<&QuboProblem> for QuboJson {
    fn from(q: &QuboProblem) -> Self {
        QuboJson {
            num_vars: q.num_vars,
            offset: q.offset,
            linear: q.linear.iter().map(|(i, v)| (i.to_string(), *v)).collect(),
            quadratic: q.quadratic.iter().map(|((i, j), v)| (format!("{i},{j}"), *v)).collect(),
            labels: q.labels.clone(),
        }
    }
}

fn parse_index(s: &str) -> Result<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::InvalidQubo(format!("bad variable index {s:?}")));
    }
    s.parse().map_err(|_| Error::InvalidQubo(format!("bad variable index {s:?}")))
}

impl TryFrom<QuboJson> for QuboProblem {
    type Error = Error;

    fn try_from(raw: QuboJson) -> Result<Self> {
        let mut b = QuboBuilder::new(raw.num_vars);
        b.add_offset(raw.offset);
        for (k, v) in &raw.linear {
            b.add_linear(parse_index(k)?, *v);
        }
        for (k, v) in &raw.quadratic {
            let (i, j) = k
                .split_once(',')
                .ok_or_else(|| Error::InvalidQubo(format!("quadratic key {k:?} is not \"i,j\"")))?;
            let (i, j) = (parse_index(i)?, parse_index(j)?);
            if i >= j {
                return Err(Error::InvalidQubo(format!("quadratic key {k:?} must satisfy i < j")));
            }
            if b.quadratic.contains_key(&(i, j)) {
                return Err(Error::InvalidQubo(format!("duplicate quadratic key {k:?}")));
            }
            b.add_quadratic(i, j, *v);
        }
        b.labels = raw.labels;
        b.build()
    }
}
