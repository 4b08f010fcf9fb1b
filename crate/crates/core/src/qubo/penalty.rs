use std::collections::BTreeMap;

use super::{QuboBuilder, QuboProblem};
use crate::error::{Error, Result};

fn check_weight(weight: f64) -> Result<()> {
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::InvalidArgument(format!("penalty weight must be positive, got {weight}")));
    }
    Ok(())
}

/// `weight · (Σ a_i x_i − rhs)²` expanded with `x_i² = x_i`.
///
/// The fragment spans variables `0..=max index`.
pub fn penalty_linear_eq(coeffs: &BTreeMap<usize, f64>, rhs: f64, weight: f64) -> Result<QuboProblem> {
    check_weight(weight)?;
    let n = coeffs.keys().next_back().map_or(0, |&m| m + 1);
    let mut b = QuboBuilder::new(n);
    add_square(&mut b, coeffs.iter().map(|(&i, &a)| (i, a)), rhs, weight);
    b.build()
}

/// Adds `weight · (Σ a_i x_i − rhs)²` to a builder. Repeated indices are fine.
pub(crate) fn add_square(b: &mut QuboBuilder, terms: impl IntoIterator<Item = (usize, f64)>, rhs: f64, weight: f64) {
    let terms: Vec<(usize, f64)> = terms.into_iter().collect();
    b.add_offset(weight * rhs * rhs);
    for (k, &(i, a)) in terms.iter().enumerate() {
        b.add_linear(i, weight * (a * a - 2.0 * rhs * a));
        for &(j, c) in &terms[k + 1..] {
            b.add_quadratic(i, j, 2.0 * weight * a * c);
        }
    }
}

/// Penalty that vanishes exactly when `z = x · (1 − y)` and is at least
/// `weight` otherwise.
///
/// Rosenberg's AND penalty `x w − 2 (x + w) z + 3 z` with `w = 1 − y`
/// substituted: `x − x y − 2 x z + z + 2 y z`.
pub fn penalty_and_gadget(x: usize, y: usize, z: usize, weight: f64) -> Result<QuboProblem> {
    check_weight(weight)?;
    if x == y || y == z || x == z {
        return Err(Error::InvalidArgument(format!("gadget variables must be distinct, got ({x}, {y}, {z})")));
    }
    let n = x.max(y).max(z) + 1;
    let mut b = QuboBuilder::new(n);
    add_and_not_gadget(&mut b, x, y, z, weight);
    b.build()
}

pub(crate) fn add_and_not_gadget(b: &mut QuboBuilder, x: usize, y: usize, z: usize, weight: f64) {
    b.add_linear(x, weight)
        .add_linear(z, weight)
        .add_quadratic(x, y, -weight)
        .add_quadratic(x, z, -2.0 * weight)
        .add_quadratic(y, z, 2.0 * weight);
}
