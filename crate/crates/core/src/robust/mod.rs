//! Scenario-based robust selection.
//!
//! A [`ScenarioObjective`] scores a bitstring under each scenario of a
//! discrete set. The exact oracle enumerates every feasible assignment; the
//! harvesting pipelines score only what a sampler returned.

mod harvest;
mod objectives;
mod report;
mod stochastic;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qubo::{Bitstring, DEFAULT_ENUMERATION_CAP};
use crate::scenario::ScenarioSet;

pub use harvest::{evaluate_candidates, harvest, two_step_qaoa, Allocation, HarvestOutcome, TwoStepConfig, TwoStepOutcome};
pub use objectives::{EvObjective, UcpObjective};
pub use report::{read_report_csv, CandidateRow, RobustnessReport};
pub use stochastic::{expected_value_solution, stochastic_measures, StochasticMeasures};

/// `f(x, ξ_k)` over a fixed scenario set, plus the feasible set `X`.
pub trait ScenarioObjective: Sync {
    fn num_vars(&self) -> usize;

    fn scenarios(&self) -> &ScenarioSet;

    fn num_scenarios(&self) -> usize {
        self.scenarios().len()
    }

    fn value(&self, x: &Bitstring, k: usize) -> Result<f64>;

    fn is_feasible(&self, x: &Bitstring) -> Result<bool>;

    /// Optional split of `f(x, ξ_k)` into a scenario-independent cost and a
    /// scenario-dependent mismatch term.
    fn decompose(&self, _x: &Bitstring, _k: usize) -> Result<Option<(f64, f64)>> {
        Ok(None)
    }

    /// Every feasible assignment exactly once, when the objective can list
    /// them faster than a scan over all `2^n` assignments.
    fn feasible_set(&self) -> Option<Result<Vec<Bitstring>>> {
        None
    }

    fn values(&self, x: &Bitstring) -> Result<Vec<f64>> {
        (0..self.num_scenarios()).map(|k| self.value(x, k)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    WorstCase,
    Regret,
}

impl Measure {
    pub fn evaluate(self, values: &[f64], f_star: &[f64]) -> Result<f64> {
        match self {
            Measure::WorstCase => worst_case_value(values),
            Measure::Regret => regret_value(values, f_star),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::WorstCase => "worst_case",
            Measure::Regret => "regret",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "worst_case" => Ok(Measure::WorstCase),
            "regret" => Ok(Measure::Regret),
            other => Err(Error::InvalidArgument(format!("unknown measure {other:?}"))),
        }
    }
}

pub fn worst_case_value(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no scenario values".into()));
    }
    Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

pub fn regret_value(values: &[f64], f_star: &[f64]) -> Result<f64> {
    if values.len() != f_star.len() {
        return Err(Error::Dimension { expected: f_star.len(), got: values.len() });
    }
    let gaps: Vec<f64> = values.iter().zip(f_star).map(|(v, s)| v - s).collect();
    worst_case_value(&gaps)
}

/// Exact solver over all `2^n` assignments, for `n` up to `cap`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactOracle {
    pub cap: usize,
}

impl Default for ExactOracle {
    fn default() -> Self {
        ExactOracle { cap: DEFAULT_ENUMERATION_CAP }
    }
}

const SCAN_BLOCK: u64 = 1 << 12;

impl ExactOracle {
    /// Maps every feasible assignment and folds the results with `merge`.
    /// `merge` must be associative and commutative for the result to be
    /// independent of scheduling; min/max style folds qualify.
    pub fn fold_feasible<O, T, M, R>(&self, obj: &O, map: M, merge: R) -> Result<Option<T>>
    where
        O: ScenarioObjective + ?Sized,
        T: Send,
        M: Fn(&Bitstring) -> Result<T> + Sync,
        R: Fn(T, T) -> T + Sync,
    {
        let n = obj.num_vars();
        if n > self.cap {
            return Err(Error::SizeCap { num_vars: n, cap: self.cap });
        }
        let fold_block = |xs: &mut dyn Iterator<Item = Bitstring>, check: bool| -> Result<Option<T>> {
            let mut acc: Option<T> = None;
            for x in xs {
                if !check || obj.is_feasible(&x)? {
                    let v = map(&x)?;
                    acc = Some(match acc {
                        Some(a) => merge(a, v),
                        None => v,
                    });
                }
            }
            Ok(acc)
        };
        let partial: Vec<Result<Option<T>>> = match obj.feasible_set() {
            Some(listed) => listed?
                .par_chunks(SCAN_BLOCK as usize)
                .map(|chunk| fold_block(&mut chunk.iter().cloned(), false))
                .collect(),
            None => {
                let total = 1u64 << n;
                (0..total.div_ceil(SCAN_BLOCK))
                    .into_par_iter()
                    .map(|blk| {
                        let end = ((blk + 1) * SCAN_BLOCK).min(total);
                        fold_block(&mut (blk * SCAN_BLOCK..end).map(|idx| Bitstring::from_index(idx, n)), true)
                    })
                    .collect()
            }
        };
        let mut acc = None;
        for p in partial {
            if let Some(v) = p? {
                acc = Some(match acc {
                    Some(a) => merge(a, v),
                    None => v,
                });
            }
        }
        Ok(acc)
    }
}

fn elementwise_min(a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.into_iter().zip(b).map(|(x, y)| x.min(y)).collect()
}

/// Lower value wins; equal values go to the lexicographically smaller bitstring.
pub(crate) fn better(a: (f64, Bitstring), b: (f64, Bitstring)) -> (f64, Bitstring) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// `f*_k = min_{x∈X} f(x, ξ_k)` for every scenario.
pub fn scenario_optima<O: ScenarioObjective + ?Sized>(obj: &O, oracle: &ExactOracle) -> Result<Vec<f64>> {
    if obj.num_scenarios() == 0 {
        return Err(Error::InvalidArgument("scenario set is empty".into()));
    }
    oracle
        .fold_feasible(obj, |x| obj.values(x), elementwise_min)?
        .ok_or(Error::Infeasible { scenario: Some(0) })
}

/// The feasible assignment minimizing `measure`, with its value.
pub fn robust_optimum<O: ScenarioObjective + ?Sized>(
    obj: &O,
    oracle: &ExactOracle,
    measure: Measure,
    f_star: &[f64],
) -> Result<(Bitstring, f64)> {
    oracle
        .fold_feasible(obj, |x| Ok((measure.evaluate(&obj.values(x)?, f_star)?, x.clone())), better)?
        .map(|(v, x)| (x, v))
        .ok_or(Error::Infeasible { scenario: None })
}
