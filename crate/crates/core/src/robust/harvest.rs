use std::collections::BTreeMap;

use rayon::prelude::*;

use super::report::{CandidateRow, RobustnessReport};
use super::{Measure, ScenarioObjective};
use crate::error::{Error, Result};
use crate::qaoa::{grid_search, qaoa_state, GridResult, QaoaParams};
use crate::qubo::{Bitstring, QuboProblem};
use crate::samplers::Sampler;
use crate::scenario::allocate_shots;
use crate::seed::child_seed;

type Pool = BTreeMap<Bitstring, BTreeMap<String, u64>>;

#[derive(Clone, Debug)]
pub struct HarvestOutcome {
    pub best: Bitstring,
    pub value: f64,
    pub report: RobustnessReport,
}

/// Scores every pooled candidate and marks the one minimizing `measure`
/// (ties to the lexicographically smallest bitstring). `selected` stays
/// `None` when no candidate is feasible.
pub fn evaluate_candidates<O: ScenarioObjective + ?Sized>(
    obj: &O,
    measure: Measure,
    f_star: &[f64],
    pool: Pool,
) -> Result<RobustnessReport> {
    if f_star.len() != obj.num_scenarios() {
        return Err(Error::Dimension { expected: obj.num_scenarios(), got: f_star.len() });
    }
    let pool: Vec<_> = pool.into_iter().collect();
    let candidates = pool
        .into_par_iter()
        .map(|(bitstring, provenance)| score(obj, f_star, bitstring, provenance))
        .collect::<Result<Vec<_>>>()?;
    let mut selected: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if let Some(v) = c.measure(measure) {
            // Rows are in bitstring order, so strict improvement keeps the smallest on ties.
            if selected.is_none_or(|s| v < candidates[s].measure(measure).expect("selected rows are feasible")) {
                selected = Some(i);
            }
        }
    }
    Ok(RobustnessReport { measure, f_star: f_star.to_vec(), candidates, selected })
}

fn score<O: ScenarioObjective + ?Sized>(
    obj: &O,
    f_star: &[f64],
    bitstring: Bitstring,
    provenance: BTreeMap<String, u64>,
) -> Result<CandidateRow> {
    if !obj.is_feasible(&bitstring)? {
        return Ok(CandidateRow {
            bitstring,
            feasible: false,
            values: Vec::new(),
            det_cost: None,
            mismatch_regret: None,
            worst_case: None,
            regret: None,
            provenance,
        });
    }
    let values = obj.values(&bitstring)?;
    let mut det_cost = None;
    let mut mismatch_regret: Option<f64> = None;
    for k in 0..obj.num_scenarios() {
        if let Some((det, mismatch)) = obj.decompose(&bitstring, k)? {
            det_cost = Some(det);
            mismatch_regret = Some(mismatch_regret.map_or(mismatch, |m| m.max(mismatch)));
        }
    }
    Ok(CandidateRow {
        worst_case: Some(Measure::WorstCase.evaluate(&values, f_star)?),
        regret: Some(Measure::Regret.evaluate(&values, f_star)?),
        bitstring,
        feasible: true,
        values,
        det_cost,
        mismatch_regret,
        provenance,
    })
}

fn finish(report: RobustnessReport) -> Result<HarvestOutcome> {
    match report.selected {
        Some(i) => {
            let row = &report.candidates[i];
            let value = row.measure(report.measure).expect("selected rows are feasible");
            Ok(HarvestOutcome { best: row.bitstring.clone(), value, report })
        }
        None => Err(Error::EmptyHarvest(Box::new(report))),
    }
}

fn check_layout(q: &QuboProblem, num_vars: usize) -> Result<()> {
    if q.num_vars() != num_vars {
        return Err(Error::Dimension { expected: num_vars, got: q.num_vars() });
    }
    Ok(())
}

/// Samples the expected-value QUBO once and picks the most robust feasible
/// sample under `measure`.
#[allow(clippy::too_many_arguments)]
pub fn harvest<O: ScenarioObjective + ?Sized>(
    expected_qubo: &QuboProblem,
    sampler: &dyn Sampler,
    shots: u64,
    seed: u64,
    obj: &O,
    measure: Measure,
    f_star: &[f64],
) -> Result<HarvestOutcome> {
    check_layout(expected_qubo, obj.num_vars())?;
    let samples = sampler.sample(expected_qubo, shots, seed)?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("sampler returned no samples".into()));
    }
    let pool = samples
        .entries()
        .iter()
        .map(|e| (e.bitstring.clone(), BTreeMap::from([(sampler.name().to_string(), e.multiplicity)])))
        .collect();
    finish(evaluate_candidates(obj, measure, f_star, pool)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Allocation {
    /// Equal shares of the budget.
    Uniform,
    /// Shares proportional to scenario probabilities.
    Probability,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoStepConfig {
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub shots_total: u64,
    pub allocation: Allocation,
    /// Divide every QUBO by the expected QUBO's largest coefficient before
    /// building circuits. Candidate scoring is unaffected.
    pub normalize: bool,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct TwoStepOutcome {
    pub best: Bitstring,
    pub value: f64,
    pub report: RobustnessReport,
    pub params: QaoaParams,
    pub grid: GridResult,
    pub shots: Vec<u64>,
    /// Factor the QUBOs were divided by (1 without normalization).
    pub scale: f64,
}

/// Grid-searches p = 1 angles on the expected QUBO, reuses them on every
/// scenario QUBO, pools all samples and picks the most robust feasible one.
/// Scenario `k` samples with seed `child_seed(cfg.seed, k)`.
pub fn two_step_qaoa<O: ScenarioObjective + ?Sized>(
    expected_qubo: &QuboProblem,
    scenario_qubos: &[QuboProblem],
    cfg: &TwoStepConfig,
    obj: &O,
    measure: Measure,
    f_star: &[f64],
) -> Result<TwoStepOutcome> {
    let n = obj.num_vars();
    check_layout(expected_qubo, n)?;
    if scenario_qubos.len() != obj.num_scenarios() {
        return Err(Error::Dimension { expected: obj.num_scenarios(), got: scenario_qubos.len() });
    }
    for q in scenario_qubos {
        check_layout(q, n)?;
        if q.labels() != expected_qubo.labels() {
            return Err(Error::InvalidArgument("scenario QUBO labels differ from the expected QUBO".into()));
        }
    }
    let scale = if cfg.normalize { expected_qubo.normalized().1 } else { 1.0 };
    let grid = grid_search(&expected_qubo.scaled(1.0 / scale), &cfg.betas, &cfg.gammas)?;
    let params = grid.best.clone();

    let k = scenario_qubos.len();
    let probs = match cfg.allocation {
        Allocation::Uniform => vec![1.0 / k as f64; k],
        Allocation::Probability => obj.scenarios().weights(),
    };
    let shots = allocate_shots(&probs, cfg.shots_total)?;

    let samples = scenario_qubos
        .par_iter()
        .enumerate()
        .map(|(s, q)| qaoa_state(&q.scaled(1.0 / scale), &params)?.sample(q, shots[s], child_seed(cfg.seed, s as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut pool: Pool = BTreeMap::new();
    for (s, set) in samples.iter().enumerate() {
        for e in set.entries() {
            pool.entry(e.bitstring.clone()).or_default().insert(format!("scenario-{s}"), e.multiplicity);
        }
    }
    if pool.is_empty() {
        return Err(Error::EmptyHarvest(Box::new(RobustnessReport {
            measure,
            f_star: f_star.to_vec(),
            candidates: Vec::new(),
            selected: None,
        })));
    }
    let out = finish(evaluate_candidates(obj, measure, f_star, pool)?)?;
    Ok(TwoStepOutcome { best: out.best, value: out.value, report: out.report, params, grid, shots, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ev::{EvInstance, PvDistribution};
    use crate::robust::{robust_optimum, scenario_optima, EvObjective, ExactOracle};
    use crate::samplers::{Boltzmann, Exhaustive};
    use crate::scenario::ScenarioSet;

    fn ev_objective(supplies: Vec<Vec<f64>>) -> EvObjective {
        let inst = EvInstance::new(
            2,
            PvDistribution::Gaussian { mu: vec![1.0, 1.5], sigma: vec![0.5, 0.5] },
            vec![0, 0],
            vec![3, 3],
            1.0,
            5.0,
            vec![2, 2],
        )
        .unwrap();
        EvObjective::with_default_weight(inst, ScenarioSet::uniform(supplies).unwrap()).unwrap()
    }

    #[test]
    fn exhaustive_harvest_matches_oracle() {
        let obj = ev_objective(vec![vec![0.5, 2.0], vec![2.5, 1.0], vec![1.0, 1.0]]);
        let oracle = ExactOracle::default();
        let fs = scenario_optima(&obj, &oracle).unwrap();
        let q = obj.expected_qubo().unwrap();
        for m in [Measure::Regret, Measure::WorstCase] {
            let (x, v) = robust_optimum(&obj, &oracle, m, &fs).unwrap();
            let h = harvest(&q, &Exhaustive, 1, 0, &obj, m, &fs).unwrap();
            assert_eq!((h.best, h.value), (x, v));
        }
    }

    #[test]
    fn single_scenario_reduces_to_deterministic() {
        let obj = ev_objective(vec![vec![2.0, 1.0]]);
        let fs = scenario_optima(&obj, &ExactOracle::default()).unwrap();
        let h = harvest(&obj.expected_qubo().unwrap(), &Exhaustive, 1, 0, &obj, Measure::Regret, &fs).unwrap();
        assert_eq!(h.value, 0.0);
        assert_eq!(obj.layout().decode(&h.best).unwrap().j, vec![2, 1]);
    }

    #[test]
    fn empty_harvest_keeps_report() {
        let obj = ev_objective(vec![vec![1.0, 1.0]]);
        let fs = scenario_optima(&obj, &ExactOracle::default()).unwrap();
        // Only infeasible candidates: total charge 0 is below the window.
        let zero = Bitstring::zeros(obj.num_vars());
        let pool = BTreeMap::from([(zero, BTreeMap::from([("manual".to_string(), 1)]))]);
        let report = evaluate_candidates(&obj, Measure::Regret, &fs, pool).unwrap();
        assert_eq!(report.selected, None);
        match finish(report) {
            Err(Error::EmptyHarvest(r)) => assert_eq!(r.candidates.len(), 1),
            other => panic!("expected empty harvest, got {other:?}"),
        }
    }

    #[test]
    fn harvest_is_deterministic() {
        let obj = ev_objective(vec![vec![0.5, 2.0], vec![2.5, 1.0]]);
        let fs = scenario_optima(&obj, &ExactOracle::default()).unwrap();
        let q = obj.expected_qubo().unwrap();
        let s = Boltzmann { temperature: 2.0 };
        let a = harvest(&q, &s, 300, 9, &obj, Measure::Regret, &fs).unwrap();
        let b = harvest(&q, &s, 300, 9, &obj, Measure::Regret, &fs).unwrap();
        assert_eq!(a.report, b.report);
    }

    #[test]
    fn probability_allocation_split() {
        let mut obj = ev_objective(vec![vec![0.5, 2.0], vec![2.5, 1.0]]);
        obj = EvObjective::new(
            obj.instance().clone(),
            ScenarioSet::new(obj.scenarios().scenarios().to_vec(), Some(vec![0.8, 0.2])).unwrap(),
            obj.lambda_total(),
        )
        .unwrap();
        let fs = scenario_optima(&obj, &ExactOracle::default()).unwrap();
        let cfg = TwoStepConfig {
            betas: vec![0.3],
            gammas: vec![0.2],
            shots_total: 100,
            allocation: Allocation::Probability,
            normalize: false,
            seed: 1,
        };
        let out =
            two_step_qaoa(&obj.expected_qubo().unwrap(), &obj.scenario_qubos().unwrap(), &cfg, &obj, Measure::Regret, &fs)
                .unwrap();
        assert_eq!(out.shots, vec![80, 20]);
        let total: u64 = out.report.candidates.iter().flat_map(|c| c.provenance.values()).sum();
        assert_eq!(total, 100);
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let obj = ev_objective(vec![vec![0.5, 2.0]]);
        let fs = scenario_optima(&obj, &ExactOracle::default()).unwrap();
        let cfg = TwoStepConfig {
            betas: vec![0.3],
            gammas: vec![0.2],
            shots_total: 10,
            allocation: Allocation::Uniform,
            normalize: true,
            seed: 1,
        };
        let wrong = vec![QuboProblem::empty(obj.num_vars() + 1)];
        assert!(two_step_qaoa(&obj.expected_qubo().unwrap(), &wrong, &cfg, &obj, Measure::Regret, &fs).is_err());
    }
}
