mod common;

use qrobust::ev::{EvInstance, PvDistribution};
use qrobust::qaoa::{default_beta_grid, default_gamma_grid, grid_search};
use qrobust::qubo::Bitstring;
use qrobust::robust::{
    expected_value_solution, harvest, robust_optimum, scenario_optima, stochastic_measures, two_step_qaoa,
    Allocation, EvObjective, ExactOracle, Measure, ScenarioObjective, TwoStepConfig, UcpObjective,
};
use qrobust::samplers::Exhaustive;
use qrobust::scenario::ScenarioSet;
use qrobust::ucp::{UcpInstance, UcpWeights, Unit};
use qrobust::Result;
use rand::Rng;

fn ev_instance(t_max: usize, mu: Vec<f64>, sigma: Vec<f64>, e_min: f64, e_max: f64) -> EvInstance {
    EvInstance::new(t_max, PvDistribution::Gaussian { mu, sigma }, vec![0; t_max], vec![3; t_max], e_min, e_max, vec![2; t_max])
        .unwrap()
}

/// Every feasible level vector, enumerated directly in level space.
fn feasible_levels(inst: &EvInstance) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for t in 0..inst.num_steps {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (inst.j_min[t]..=inst.j_max[t]).map(move |j| {
                    let mut v = prefix.clone();
                    v.push(j);
                    v
                })
            })
            .collect();
    }
    out.retain(|j| {
        let total = j.iter().sum::<u64>() as f64;
        total >= inst.e_min && total <= inst.e_max
    });
    out
}

fn cost(j: &[u64], e: &[f64]) -> f64 {
    j.iter().zip(e).map(|(&j, e)| (j as f64 - e).powi(2)).sum()
}

fn random_supplies(r: &mut impl Rng, k: usize, t_max: usize) -> Vec<Vec<f64>> {
    (0..k).map(|_| (0..t_max).map(|_| r.random_range(0.0..3.5)).collect()).collect()
}

#[test]
fn scenario_optima_match_level_space_brute_force() {
    let mut r = common::rng(4);
    for _ in 0..8 {
        let inst = ev_instance(3, vec![1.0, 2.0, 1.5], vec![0.5; 3], 3.0, 6.0);
        let supplies = random_supplies(&mut r, 4, 3);
        let obj = EvObjective::with_default_weight(inst.clone(), ScenarioSet::uniform(supplies.clone()).unwrap()).unwrap();
        let oracle = ExactOracle::default();
        let fs = scenario_optima(&obj, &oracle).unwrap();
        let levels = feasible_levels(&inst);
        for (k, e) in supplies.iter().enumerate() {
            let brute = levels.iter().map(|j| cost(j, e)).fold(f64::INFINITY, f64::min);
            assert!((fs[k] - brute).abs() < 1e-9);
        }
        let brute_regret = levels
            .iter()
            .map(|j| supplies.iter().zip(&fs).map(|(e, f)| cost(j, e) - f).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min);
        let (x, v) = robust_optimum(&obj, &oracle, Measure::Regret, &fs).unwrap();
        assert!((v - brute_regret).abs() < 1e-9);
        assert!(obj.is_feasible(&x).unwrap());
    }
}

fn small_ucp() -> UcpObjective {
    let u = |varcost, startcost, mingen, maxgen, minup, mindown| Unit { varcost, startcost, mingen, maxgen, minup, mindown, step: 1.0 };
    let inst = UcpInstance::new(vec![u(1.0, 0.0, 2.0, 2.0, 1, 1), u(0.5, 3.0, 1.0, 2.0, 2, 2)], 3).unwrap();
    let scen = ScenarioSet::uniform(vec![vec![0.0, 3.0, 4.0], vec![2.0, 2.0, 0.0], vec![1.0, 0.0, 3.0]]).unwrap();
    UcpObjective::new(inst.clone(), UcpWeights::default_for(&inst), scen).unwrap()
}

#[test]
fn exhaustive_harvest_recovers_the_robust_optimum() {
    let mut r = common::rng(9);
    let ev = EvObjective::with_default_weight(
        ev_instance(2, vec![1.5, 2.0], vec![0.8, 0.6], 2.0, 5.0),
        ScenarioSet::uniform(random_supplies(&mut r, 6, 2)).unwrap(),
    )
    .unwrap();
    let ucp = small_ucp();
    let oracle = ExactOracle::default();
    for m in [Measure::Regret, Measure::WorstCase] {
        let fs = scenario_optima(&ev, &oracle).unwrap();
        let opt = robust_optimum(&ev, &oracle, m, &fs).unwrap();
        let h = harvest(&ev.expected_qubo().unwrap(), &Exhaustive, 1, 0, &ev, m, &fs).unwrap();
        assert_eq!((h.best, h.value), opt);

        let fs = scenario_optima(&ucp, &oracle).unwrap();
        let opt = robust_optimum(&ucp, &oracle, m, &fs).unwrap();
        let h = harvest(&ucp.expected_qubo().unwrap(), &Exhaustive, 1, 0, &ucp, m, &fs).unwrap();
        assert_eq!((h.best, h.value), opt);
    }
}

/// Arbitrary values over 4 variables with an explicit feasibility mask.
struct Table {
    scenarios: ScenarioSet,
    values: Vec<Vec<f64>>,
    feasible: Vec<bool>,
}

impl Table {
    fn random(seed: u64, k: usize) -> Table {
        let mut r = common::rng(seed);
        let values = (0..16).map(|_| (0..k).map(|_| r.random_range(-8..8) as f64 / 4.0).collect()).collect();
        let mut feasible: Vec<bool> = (0..16).map(|_| r.random_bool(0.6)).collect();
        feasible[5] = true;
        Table { scenarios: ScenarioSet::uniform(vec![vec![0.0]; k]).unwrap(), values, feasible }
    }

    fn map(&self, f: impl Fn(usize, f64) -> f64) -> Table {
        let values = self.values.iter().map(|row| row.iter().enumerate().map(|(k, &v)| f(k, v)).collect()).collect();
        Table { scenarios: self.scenarios.clone(), values, feasible: self.feasible.clone() }
    }

    fn with_scenario(&self, extra: &[f64]) -> Table {
        let values = self.values.iter().zip(extra).map(|(row, &e)| row.iter().copied().chain([e]).collect()).collect();
        let scenarios = ScenarioSet::uniform(vec![vec![0.0]; self.scenarios.len() + 1]).unwrap();
        Table { scenarios, values, feasible: self.feasible.clone() }
    }
}

impl ScenarioObjective for Table {
    fn num_vars(&self) -> usize {
        4
    }
    fn scenarios(&self) -> &ScenarioSet {
        &self.scenarios
    }
    fn value(&self, x: &Bitstring, k: usize) -> Result<f64> {
        Ok(self.values[x.to_index() as usize][k])
    }
    fn is_feasible(&self, x: &Bitstring) -> Result<bool> {
        Ok(self.feasible[x.to_index() as usize])
    }
}

fn solve(t: &Table, m: Measure) -> (Bitstring, f64) {
    let oracle = ExactOracle::default();
    let fs = scenario_optima(t, &oracle).unwrap();
    robust_optimum(t, &oracle, m, &fs).unwrap()
}

#[test]
fn positive_scaling_scales_the_value_and_keeps_the_choice() {
    for seed in 0..20 {
        let t = Table::random(seed, 3);
        for m in [Measure::Regret, Measure::WorstCase] {
            let (x, v) = solve(&t, m);
            let (y, w) = solve(&t.map(|_, v| 4.0 * v), m);
            assert_eq!((x, 4.0 * v), (y, w));
        }
    }
}

#[test]
fn per_scenario_shift_leaves_regret_unchanged() {
    for seed in 0..20 {
        let t = Table::random(seed, 3);
        let shifted = t.map(|k, v| v + [1.0, -2.5, 8.0][k]);
        assert_eq!(solve(&t, Measure::Regret), solve(&shifted, Measure::Regret));
    }
}

#[test]
fn adding_a_scenario_never_lowers_the_robust_value() {
    let mut r = common::rng(77);
    for seed in 0..20 {
        let t = Table::random(seed, 3);
        let extra: Vec<f64> = (0..16).map(|_| r.random_range(-8..8) as f64 / 4.0).collect();
        let bigger = t.with_scenario(&extra);
        for m in [Measure::Regret, Measure::WorstCase] {
            assert!(solve(&bigger, m).1 >= solve(&t, m).1);
        }
    }
}

#[test]
fn stochastic_measures_match_brute_force() {
    let mut r = common::rng(31);
    for _ in 0..10 {
        let mu = vec![r.random_range(0.0..3.0), r.random_range(0.0..3.0)];
        let sigma = vec![r.random_range(0.0..1.0), r.random_range(0.0..1.0)];
        let inst = ev_instance(2, mu.clone(), sigma.clone(), 2.0, 5.0);
        let supplies = random_supplies(&mut r, 5, 2);
        let raw: Vec<f64> = (0..5).map(|_| r.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let obj = EvObjective::with_default_weight(inst.clone(), ScenarioSet::new(supplies.clone(), Some(p.clone())).unwrap())
            .unwrap();
        let oracle = ExactOracle::default();
        let x_ev = expected_value_solution(&obj.expected_qubo().unwrap(), &obj, &oracle).unwrap();
        let m = stochastic_measures(&obj, &oracle, &x_ev).unwrap();

        let levels = feasible_levels(&inst);
        let expect = |j: &[u64]| -> f64 { supplies.iter().zip(&p).map(|(e, p)| p * cost(j, e)).sum() };
        let ws: f64 = supplies
            .iter()
            .zip(&p)
            .map(|(e, p)| p * levels.iter().map(|j| cost(j, e)).fold(f64::INFINITY, f64::min))
            .sum();
        let rp = levels.iter().map(|j| expect(j)).fold(f64::INFINITY, f64::min);
        let ev_obj = |j: &[u64]| -> f64 { (0..2).map(|t| (j[t] as f64 - mu[t]).powi(2) + sigma[t] * sigma[t]).sum() };
        let best_ev = levels.iter().map(|j| ev_obj(j)).fold(f64::INFINITY, f64::min);
        let eevs: Vec<f64> = levels.iter().filter(|j| ev_obj(j) <= best_ev + 1e-9).map(|j| expect(j)).collect();

        assert!((m.ws - ws).abs() < 1e-9);
        assert!((m.rp - rp).abs() < 1e-9);
        assert!(eevs.iter().any(|e| (m.eev - e).abs() < 1e-9), "eev {} not in {eevs:?}", m.eev);
        assert!(m.vss >= 0.0 && m.evpi >= 0.0);
    }
}

#[test]
fn two_step_on_identical_scenarios() {
    let inst = ev_instance(2, vec![1.5, 2.0], vec![0.8, 0.6], 2.0, 5.0);
    let obj = EvObjective::with_default_weight(inst, ScenarioSet::uniform(vec![vec![1.0, 2.0]; 4]).unwrap()).unwrap();
    let qubos = obj.scenario_qubos().unwrap();
    let cfg = TwoStepConfig {
        betas: default_beta_grid(8),
        gammas: default_gamma_grid(16),
        shots_total: 400,
        allocation: Allocation::Uniform,
        normalize: false,
        seed: 3,
    };
    let fs = scenario_optima(&obj, &ExactOracle::default()).unwrap();
    let out = two_step_qaoa(&qubos[0], &qubos, &cfg, &obj, Measure::Regret, &fs).unwrap();
    assert_eq!(out.shots, vec![100; 4]);
    assert_eq!(out.grid, grid_search(&qubos[0], &cfg.betas, &cfg.gammas).unwrap());
    // One scenario: regret is the plain gap to the optimum, so level (1, 2) wins with 0.
    assert_eq!(out.value, 0.0);
    assert_eq!(obj.layout().decode(&out.best).unwrap().j, vec![1, 2]);
    for row in &out.report.candidates {
        assert!(row.provenance.keys().all(|k| k.starts_with("scenario-")));
    }
}
