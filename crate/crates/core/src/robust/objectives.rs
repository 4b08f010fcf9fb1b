use super::ScenarioObjective;
use crate::error::{Error, Result};
use crate::ev::{encode_ev, ev_cost, EvInstance, EvLayout};
use crate::qubo::{Bitstring, QuboProblem};
use crate::scenario::ScenarioSet;
use crate::ucp::{check_feasible, decode_ucp, encode_ucp, ucp_objective, UcpEncoding, UcpInstance, UcpWeights};

/// UCP with scenarios of residual demand. `f(x, ξ) = det_cost + λ_demand·mismatch`;
/// the feasible set is every assignment that passes the unit-logic filter.
pub struct UcpObjective {
    inst: UcpInstance,
    enc: UcpEncoding,
    scenarios: ScenarioSet,
}

impl UcpObjective {
    pub fn new(inst: UcpInstance, weights: UcpWeights, scenarios: ScenarioSet) -> Result<Self> {
        inst.validate()?;
        if scenarios.is_empty() {
            return Err(Error::InvalidArgument("scenario set is empty".into()));
        }
        if scenarios.dim() != inst.num_steps {
            return Err(Error::Dimension { expected: inst.num_steps, got: scenarios.dim() });
        }
        // Builds once to validate the weights.
        let (_, enc) = encode_ucp(&inst, scenarios.get(0), weights)?;
        Ok(UcpObjective { inst, enc, scenarios })
    }

    pub fn instance(&self) -> &UcpInstance {
        &self.inst
    }

    pub fn encoding(&self) -> &UcpEncoding {
        &self.enc
    }

    /// QUBO for the probability-weighted mean demand.
    pub fn expected_qubo(&self) -> Result<QuboProblem> {
        let mean = self.scenarios.expected_scenario()?;
        Ok(encode_ucp(&self.inst, &mean, self.enc.weights)?.0)
    }

    pub fn scenario_qubos(&self) -> Result<Vec<QuboProblem>> {
        self.scenarios
            .scenarios()
            .iter()
            .map(|d| Ok(encode_ucp(&self.inst, d, self.enc.weights)?.0))
            .collect()
    }

    /// Walks on/off patterns, derives the start bits, keeps patterns that pass
    /// the logic checks and then expands the generation bits of running cells.
    pub fn enumerate_feasible(&self) -> Result<Vec<Bitstring>> {
        let (t_max, n) = (self.inst.num_steps, self.inst.num_units());
        let cells = t_max * n;
        if cells >= 64 {
            return Err(Error::SizeCap { num_vars: self.enc.num_vars(), cap: 63 });
        }
        let mut out = Vec::new();
        for pattern in 0..1u64 << cells {
            let on = |t: usize, i: usize| (pattern >> (t * n + i)) & 1 == 1;
            let mut base = Bitstring::zeros(self.enc.num_vars());
            let mut free = Vec::new();
            for t in 0..t_max {
                for i in 0..n {
                    if on(t, i) {
                        base.set(self.enc.on_var(t, i), true);
                        base.set(self.enc.start_var(t, i), t == 0 || !on(t - 1, i));
                        free.extend((0..self.enc.gen_bits()[i]).map(|b| self.enc.gen_var(t, i, b)));
                    }
                }
            }
            if !self.is_feasible(&base)? {
                continue;
            }
            for mask in 0..1u64 << free.len() {
                let mut x = base.clone();
                for (k, &v) in free.iter().enumerate() {
                    x.set(v, (mask >> k) & 1 == 1);
                }
                if mask == 0 || self.is_feasible(&x)? {
                    out.push(x);
                }
            }
        }
        Ok(out)
    }
}

impl ScenarioObjective for UcpObjective {
    fn num_vars(&self) -> usize {
        self.enc.num_vars()
    }

    fn scenarios(&self) -> &ScenarioSet {
        &self.scenarios
    }

    fn value(&self, x: &Bitstring, k: usize) -> Result<f64> {
        let (det, mismatch) = self.decompose(x, k)?.expect("ucp values always decompose");
        Ok(det + mismatch)
    }

    fn is_feasible(&self, x: &Bitstring) -> Result<bool> {
        let s = decode_ucp(&self.enc, &self.inst, x)?;
        Ok(check_feasible(&self.inst, &s)?.is_empty())
    }

    fn feasible_set(&self) -> Option<Result<Vec<Bitstring>>> {
        Some(self.enumerate_feasible())
    }

    fn decompose(&self, x: &Bitstring, k: usize) -> Result<Option<(f64, f64)>> {
        let s = decode_ucp(&self.enc, &self.inst, x)?;
        Ok(Some(ucp_objective(&self.inst, &s, self.scenarios.get(k), self.enc.weights.demand)?))
    }
}

/// EV charging with scenarios of PV supply. `f(x, ξ) = Σ_t (j_t − supply_t)²`;
/// the feasible set is every assignment whose decoded levels meet the bounds.
pub struct EvObjective {
    inst: EvInstance,
    layout: EvLayout,
    scenarios: ScenarioSet,
    lambda_total: f64,
}

impl EvObjective {
    pub fn new(inst: EvInstance, scenarios: ScenarioSet, lambda_total: f64) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::InvalidArgument("scenario set is empty".into()));
        }
        if scenarios.dim() != inst.num_steps {
            return Err(Error::Dimension { expected: inst.num_steps, got: scenarios.dim() });
        }
        let (_, layout) = encode_ev(&inst, None, lambda_total)?;
        Ok(EvObjective { inst, layout, scenarios, lambda_total })
    }

    /// Uses the default window weight for this instance and scenario set.
    pub fn with_default_weight(inst: EvInstance, scenarios: ScenarioSet) -> Result<Self> {
        let w = inst.default_total_weight(Some(&scenarios));
        EvObjective::new(inst, scenarios, w)
    }

    pub fn instance(&self) -> &EvInstance {
        &self.inst
    }

    pub fn layout(&self) -> &EvLayout {
        &self.layout
    }

    pub fn lambda_total(&self) -> f64 {
        self.lambda_total
    }

    /// QUBO of the expected cost under the instance's PV distribution.
    pub fn expected_qubo(&self) -> Result<QuboProblem> {
        Ok(encode_ev(&self.inst, None, self.lambda_total)?.0)
    }

    pub fn scenario_qubos(&self) -> Result<Vec<QuboProblem>> {
        self.scenarios
            .scenarios()
            .iter()
            .map(|e| Ok(encode_ev(&self.inst, Some(e), self.lambda_total)?.0))
            .collect()
    }
}

impl ScenarioObjective for EvObjective {
    fn num_vars(&self) -> usize {
        self.layout.num_vars()
    }

    fn scenarios(&self) -> &ScenarioSet {
        &self.scenarios
    }

    fn value(&self, x: &Bitstring, k: usize) -> Result<f64> {
        ev_cost(&self.layout.decode(x)?, self.scenarios.get(k))
    }

    fn is_feasible(&self, x: &Bitstring) -> Result<bool> {
        Ok(self.inst.is_feasible(&self.layout.decode(x)?))
    }
}
