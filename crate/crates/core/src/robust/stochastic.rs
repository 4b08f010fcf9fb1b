use super::{better, scenario_optima, ExactOracle, ScenarioObjective};
use crate::error::{Error, Result};
use crate::qubo::{enumerate_optimum_with_cap, Bitstring, QuboProblem};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StochasticMeasures {
    /// Wait-and-see: `Σ_k p_k f*_k`.
    pub ws: f64,
    /// Recourse problem: `min_{x∈X} Σ_k p_k f(x, ξ_k)`.
    pub rp: f64,
    /// Expected result of the expected-value solution.
    pub eev: f64,
    pub vss: f64,
    pub evpi: f64,
}

fn weighted(p: &[f64], values: &[f64]) -> f64 {
    p.iter().zip(values).map(|(p, v)| p * v).sum()
}

/// Lexicographically smallest feasible minimizer of the expected-value QUBO.
pub fn expected_value_solution<O: ScenarioObjective + ?Sized>(
    expected_qubo: &QuboProblem,
    obj: &O,
    oracle: &ExactOracle,
) -> Result<Bitstring> {
    if expected_qubo.num_vars() != obj.num_vars() {
        return Err(Error::Dimension { expected: obj.num_vars(), got: expected_qubo.num_vars() });
    }
    let feasible = |x: &Bitstring| obj.is_feasible(x).unwrap_or(false);
    let opt = enumerate_optimum_with_cap(expected_qubo, Some(&feasible), oracle.cap)?;
    Ok(opt.argmins.into_iter().next().expect("optimum has at least one argmin"))
}

/// WS, RP, EEV, VSS = EEV − RP and EVPI = RP − WS. All probability-weighted
/// sums use the same summation order, so VSS and EVPI are never negative.
pub fn stochastic_measures<O: ScenarioObjective + ?Sized>(
    obj: &O,
    oracle: &ExactOracle,
    x_ev: &Bitstring,
) -> Result<StochasticMeasures> {
    let p = obj
        .scenarios()
        .probabilities()
        .ok_or_else(|| Error::InvalidArgument("stochastic measures need scenario probabilities".into()))?
        .to_vec();
    if !obj.is_feasible(x_ev)? {
        return Err(Error::InvalidArgument(format!("expected-value solution {x_ev} is infeasible")));
    }
    let f_star = scenario_optima(obj, oracle)?;
    let ws = weighted(&p, &f_star);
    let (rp, _) = oracle
        .fold_feasible(obj, |x| Ok((weighted(&p, &obj.values(x)?), x.clone())), better)?
        .ok_or(Error::Infeasible { scenario: None })?;
    let eev = weighted(&p, &obj.values(x_ev)?);
    Ok(StochasticMeasures { ws, rp, eev, vss: eev - rp, evpi: rp - ws })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ev::{EvInstance, PvDistribution};
    use crate::robust::EvObjective;
    use crate::scenario::ScenarioSet;

    fn objective(supplies: Vec<Vec<f64>>, probs: Vec<f64>) -> EvObjective {
        let inst = EvInstance::new(
            2,
            PvDistribution::Gaussian { mu: vec![1.0, 1.0], sigma: vec![0.0, 0.0] },
            vec![0, 0],
            vec![1, 1],
            0.0,
            2.0,
            vec![1, 1],
        )
        .unwrap();
        EvObjective::with_default_weight(inst, ScenarioSet::new(supplies, Some(probs)).unwrap()).unwrap()
    }

    #[test]
    fn single_scenario_has_no_value_of_information() {
        let obj = objective(vec![vec![1.0, 1.0]], vec![1.0]);
        let oracle = ExactOracle::default();
        let x_ev = expected_value_solution(&obj.expected_qubo().unwrap(), &obj, &oracle).unwrap();
        let m = stochastic_measures(&obj, &oracle, &x_ev).unwrap();
        assert_eq!((m.ws, m.rp, m.eev, m.vss, m.evpi), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn measures_match_hand_values() {
        // Scenarios (0,0) and (1,1) at 1/2 each; every j gives RP = 1, WS = 0.
        let obj = objective(vec![vec![0.0, 0.0], vec![1.0, 1.0]], vec![0.5, 0.5]);
        let oracle = ExactOracle::default();
        let x_ev = expected_value_solution(&obj.expected_qubo().unwrap(), &obj, &oracle).unwrap();
        let m = stochastic_measures(&obj, &oracle, &x_ev).unwrap();
        assert_eq!((m.ws, m.rp, m.eev), (0.0, 1.0, 1.0));
        assert_eq!((m.vss, m.evpi), (0.0, 1.0));
    }

    #[test]
    fn needs_probabilities() {
        let obj = objective(vec![vec![1.0, 1.0]], vec![1.0]);
        let bare = EvObjective::new(
            obj.instance().clone(),
            ScenarioSet::new(vec![vec![1.0, 1.0]], None).unwrap(),
            obj.lambda_total(),
        )
        .unwrap();
        assert!(stochastic_measures(&bare, &ExactOracle::default(), &Bitstring::zeros(2)).is_err());
    }
}
