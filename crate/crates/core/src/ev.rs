//! EV fleet charging against uncertain PV supply.
//!
//! The charging level `j_t` at step `t` is an integer encoded as
//! `j_min_t + Σ_k 2^k·bit_{t,k}`. The objective per step is
//! `(j_t − E_t)²` for a realized supply `E_t`, or its expectation
//! `j_t² − C_t·j_t + D_t` with `C_t = 2·E[E_t]` and `D_t = E[E_t²]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{add_square, Bitstring, QuboBuilder, QuboProblem};
use crate::scenario::ScenarioSet;

const MAX_BITS_PER_STEP: u32 = 30;

#[derive(Clone, Debug, PartialEq)]
pub enum PvDistribution {
    Gaussian { mu: Vec<f64>, sigma: Vec<f64> },
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
}

impl PvDistribution {
    /// Per-step mean and variance.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            PvDistribution::Gaussian { mu, sigma } => (mu.clone(), sigma.iter().map(|s| s * s).collect()),
            PvDistribution::Uniform { lo, hi } => (
                lo.iter().zip(hi).map(|(l, h)| (l + h) / 2.0).collect(),
                lo.iter().zip(hi).map(|(l, h)| (h - l) * (h - l) / 12.0).collect(),
            ),
        }
    }

    /// A supply level that is rarely exceeded: `hi` or `μ + 5σ`.
    fn upper(&self) -> Vec<f64> {
        match self {
            PvDistribution::Gaussian { mu, sigma } => mu.iter().zip(sigma).map(|(m, s)| m + 5.0 * s).collect(),
            PvDistribution::Uniform { hi, .. } => hi.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EvJson", into = "EvJson")]
pub struct EvInstance {
    pub num_steps: usize,
    pub pv: PvDistribution,
    pub j_min: Vec<u64>,
    pub j_max: Vec<u64>,
    pub e_min: f64,
    pub e_max: f64,
    pub bits: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PvJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvJson {
    num_steps: usize,
    pv: PvJson,
    j_min: Vec<u64>,
    j_max: Vec<u64>,
    e_min: f64,
    e_max: f64,
    bits: Vec<u32>,
}

impl TryFrom<EvJson> for EvInstance {
    type Error = Error;

    fn try_from(raw: EvJson) -> Result<Self> {
        let missing = |what: &str| Error::InvalidInstance(format!("{} distribution needs {what}", raw.pv.kind));
        let pv = match raw.pv.kind.as_str() {
            "gaussian" => PvDistribution::Gaussian {
                mu: raw.pv.mu.clone().ok_or_else(|| missing("mu"))?,
                sigma: raw.pv.sigma.clone().ok_or_else(|| missing("sigma"))?,
            },
            "uniform" => PvDistribution::Uniform {
                lo: raw.pv.lo.clone().ok_or_else(|| missing("lo"))?,
                hi: raw.pv.hi.clone().ok_or_else(|| missing("hi"))?,
            },
            other => return Err(Error::InvalidInstance(format!("unknown pv kind {other:?}"))),
        };
        EvInstance::new(raw.num_steps, pv, raw.j_min, raw.j_max, raw.e_min, raw.e_max, raw.bits)
    }
}

impl From<EvInstance> for EvJson {
    fn from(i: EvInstance) -> Self {
        let pv = match i.pv {
            PvDistribution::Gaussian { mu, sigma } => {
                PvJson { kind: "gaussian".into(), mu: Some(mu), sigma: Some(sigma), lo: None, hi: None }
            }
            PvDistribution::Uniform { lo, hi } => {
                PvJson { kind: "uniform".into(), mu: None, sigma: None, lo: Some(lo), hi: Some(hi) }
            }
        };
        EvJson { num_steps: i.num_steps, pv, j_min: i.j_min, j_max: i.j_max, e_min: i.e_min, e_max: i.e_max, bits: i.bits }
    }
}

impl EvInstance {
    pub fn new(
        num_steps: usize,
        pv: PvDistribution,
        j_min: Vec<u64>,
        j_max: Vec<u64>,
        e_min: f64,
        e_max: f64,
        bits: Vec<u32>,
    ) -> Result<Self> {
        let inst = EvInstance { num_steps, pv, j_min, j_max, e_min, e_max, bits };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.num_steps;
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        let (a, b) = match &self.pv {
            PvDistribution::Gaussian { mu, sigma } => (mu, sigma),
            PvDistribution::Uniform { lo, hi } => (lo, hi),
        };
        for len in [a.len(), b.len(), self.j_min.len(), self.j_max.len(), self.bits.len()] {
            if len != t {
                return Err(Error::Dimension { expected: t, got: len });
            }
        }
        if a.iter().chain(b).any(|v| !v.is_finite()) {
            return bad("pv parameters must be finite".into());
        }
        match &self.pv {
            PvDistribution::Gaussian { sigma, .. } if sigma.iter().any(|s| *s < 0.0) => {
                return bad("sigma must be nonnegative".into());
            }
            PvDistribution::Uniform { lo, hi } if lo.iter().zip(hi).any(|(l, h)| l > h) => {
                return bad("need lo <= hi".into());
            }
            _ => {}
        }
        if !(self.e_min.is_finite() && self.e_max.is_finite() && self.e_min <= self.e_max) {
            return bad("need finite e_min <= e_max".into());
        }
        for s in 0..t {
            if self.bits[s] > MAX_BITS_PER_STEP {
                return bad(format!("step {s}: at most {MAX_BITS_PER_STEP} bits"));
            }
            if self.j_min[s] > self.j_max[s] {
                return bad(format!("step {s}: need j_min <= j_max"));
            }
            if self.j_max[s] > self.j_hi(s) {
                return bad(format!("step {s}: j_max exceeds j_min + 2^bits - 1"));
            }
        }
        Ok(())
    }

    /// Largest encodable charging level at step `t`.
    pub fn j_hi(&self, t: usize) -> u64 {
        self.j_min[t].saturating_add((1u64 << self.bits[t]) - 1)
    }

    /// Charging levels within per-step and total bounds.
    pub fn is_feasible(&self, s: &EvSchedule) -> bool {
        if s.j.len() != self.num_steps {
            return false;
        }
        let per_step = s.j.iter().enumerate().all(|(t, &j)| j >= self.j_min[t] && j <= self.j_max[t]);
        let total: u64 = s.j.iter().sum();
        per_step && total as f64 >= self.e_min && total as f64 <= self.e_max
    }

    /// `1 + Σ_t max(j_hi_t, supply_t)²` with supply taken as the distribution's
    /// upper level and any scenario value, whichever is larger.
    pub fn default_total_weight(&self, scenarios: Option<&ScenarioSet>) -> f64 {
        let mut w = 1.0;
        for (t, up) in self.pv.upper().into_iter().enumerate() {
            let mut m = (self.j_hi(t) as f64).max(up);
            if let Some(set) = scenarios {
                for s in set.scenarios() {
                    if let Some(v) = s.get(t) {
                        m = m.max(*v);
                    }
                }
            }
            w += m * m;
        }
        w
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvCoefficients {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

/// `C_t = 2μ_t`, `D_t = μ_t² + σ_t²`; for a uniform law `μ = (lo + hi)/2`
/// and `σ² = (hi − lo)²/12`.
pub fn ev_coefficients(inst: &EvInstance) -> EvCoefficients {
    let (mean, var) = inst.pv.moments();
    EvCoefficients {
        c: mean.iter().map(|m| 2.0 * m).collect(),
        d: mean.iter().zip(&var).map(|(m, v)| m * m + v).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvLayout {
    j_min: Vec<u64>,
    step_offsets: Vec<usize>,
    bits: Vec<usize>,
    slack_offset: usize,
    /// Weights of the slack bits; their sums cover exactly `0..=upper − lower`.
    slack_coeffs: Vec<u64>,
    /// Effective total-charge window `[lower, upper]`; `None` when it can never bind.
    window: Option<(u64, u64)>,
    num_vars: usize,
}

impl EvLayout {
    fn new(inst: &EvInstance) -> Result<Self> {
        let t = inst.num_steps;
        let mut step_offsets = Vec::with_capacity(t);
        let mut next = 0;
        let bits: Vec<usize> = inst.bits.iter().map(|&b| b as usize).collect();
        for &b in &bits {
            step_offsets.push(next);
            next += b;
        }
        let sum_min: u64 = inst.j_min.iter().sum();
        let sum_max: u64 = inst.j_max.iter().sum();
        let sum_hi: u64 = (0..t).map(|s| inst.j_hi(s)).sum();
        let lo_req = inst.e_min.ceil();
        let hi_req = inst.e_max.floor();
        if (sum_min as f64) > hi_req || (sum_max as f64) < lo_req || lo_req > hi_req {
            return Err(Error::InvalidInstance(format!(
                "total-charge window [{}, {}] cannot be met with per-step bounds (sum {sum_min}..={sum_max})",
                inst.e_min, inst.e_max
            )));
        }
        let lower = (lo_req.max(0.0) as u64).max(sum_min);
        let upper = (hi_req as u64).min(sum_hi);
        let window = (lower > sum_min || upper < sum_hi).then_some((lower, upper));
        let slack_coeffs = match window {
            Some((l, u)) => bounded_binary(u - l),
            None => Vec::new(),
        };
        let slack_offset = next;
        let num_vars = next + slack_coeffs.len();
        Ok(EvLayout { j_min: inst.j_min.clone(), step_offsets, bits, slack_offset, slack_coeffs, window, num_vars })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_slack_bits(&self) -> usize {
        self.slack_coeffs.len()
    }

    pub fn window(&self) -> Option<(u64, u64)> {
        self.window
    }

    pub fn bit_var(&self, t: usize, k: usize) -> usize {
        self.step_offsets[t] + k
    }

    pub fn slack_var(&self, s: usize) -> usize {
        self.slack_offset + s
    }

    fn step_terms(&self, t: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.bits[t]).map(move |k| (self.bit_var(t, k), 2f64.powi(k as i32)))
    }

    fn labels(&self) -> BTreeMap<String, usize> {
        let mut labels = BTreeMap::new();
        for t in 0..self.bits.len() {
            for k in 0..self.bits[t] {
                labels.insert(format!("j[{t},{k}]"), self.bit_var(t, k));
            }
        }
        for s in 0..self.slack_coeffs.len() {
            labels.insert(format!("slack[{s}]"), self.slack_var(s));
        }
        labels
    }

    pub fn decode(&self, x: &Bitstring) -> Result<EvSchedule> {
        if x.len() != self.num_vars {
            return Err(Error::Dimension { expected: self.num_vars, got: x.len() });
        }
        let j = (0..self.bits.len())
            .map(|t| {
                let m: u64 = (0..self.bits[t]).filter(|&k| x.get(self.bit_var(t, k))).map(|k| 1u64 << k).sum();
                self.j_min[t] + m
            })
            .collect();
        Ok(EvSchedule { j })
    }

    /// Bits for a schedule; the slack register is set to balance the window
    /// when the schedule satisfies it.
    pub fn encode_schedule(&self, s: &EvSchedule) -> Result<Bitstring> {
        if s.j.len() != self.bits.len() {
            return Err(Error::Dimension { expected: self.bits.len(), got: s.j.len() });
        }
        let mut x = Bitstring::zeros(self.num_vars);
        for (t, &j) in s.j.iter().enumerate() {
            let m = j
                .checked_sub(self.j_min[t])
                .filter(|m| *m < (1u64 << self.bits[t]))
                .ok_or_else(|| Error::InvalidArgument(format!("j[{t}] = {j} is not encodable")))?;
            for k in 0..self.bits[t] {
                x.set(self.bit_var(t, k), (m >> k) & 1 == 1);
            }
        }
        if let Some((lower, upper)) = self.window {
            let total: u64 = s.j.iter().sum();
            if total >= lower && total <= upper {
                let mut rest = total - lower;
                for (i, &c) in self.slack_coeffs.iter().enumerate().rev() {
                    if rest >= c {
                        x.set(self.slack_var(i), true);
                        rest -= c;
                    }
                }
            }
        }
        Ok(x)
    }
}

/// Weights `1, 2, …, 2^(m−2), r − (2^(m−1) − 1)` whose subset sums are exactly `0..=r`.
fn bounded_binary(r: u64) -> Vec<u64> {
    if r == 0 {
        return Vec::new();
    }
    let m = 64 - r.leading_zeros();
    let mut coeffs: Vec<u64> = (0..m - 1).map(|k| 1u64 << k).collect();
    coeffs.push(r - ((1u64 << (m - 1)) - 1));
    coeffs
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EvSchedule {
    pub j: Vec<u64>,
}

/// Builds the charging QUBO.
///
/// With `supply = None` the objective is the expectation
/// `Σ_t (j_t² − C_t j_t + D_t)`; with a realized supply it is
/// `Σ_t (j_t − supply_t)²`. A binding total-charge window adds
/// `λ_total · (Σ_t j_t − lower − slack)²`.
pub fn encode_ev(inst: &EvInstance, supply: Option<&[f64]>, lambda_total: f64) -> Result<(QuboProblem, EvLayout)> {
    inst.validate()?;
    if !(lambda_total.is_finite() && lambda_total > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda_total must be positive, got {lambda_total}")));
    }
    let (c, d) = match supply {
        Some(e) => {
            if e.len() != inst.num_steps {
                return Err(Error::Dimension { expected: inst.num_steps, got: e.len() });
            }
            if e.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("supply must be finite".into()));
            }
            (e.iter().map(|v| 2.0 * v).collect::<Vec<_>>(), e.iter().map(|v| v * v).collect::<Vec<_>>())
        }
        None => {
            let co = ev_coefficients(inst);
            (co.c, co.d)
        }
    };
    let layout = EvLayout::new(inst)?;
    let mut b = QuboBuilder::new(layout.num_vars);
    for t in 0..inst.num_steps {
        // j² − C j + D = (j − C/2)² + D − C²/4
        let centre = c[t] / 2.0;
        add_square(&mut b, layout.step_terms(t), centre - inst.j_min[t] as f64, 1.0);
        b.add_offset(d[t] - centre * centre);
    }
    if let Some((lower, _)) = layout.window {
        let sum_min: u64 = inst.j_min.iter().sum();
        let terms: Vec<(usize, f64)> = (0..inst.num_steps)
            .flat_map(|t| layout.step_terms(t).collect::<Vec<_>>())
            .chain(layout.slack_coeffs.iter().enumerate().map(|(s, &w)| (layout.slack_var(s), -(w as f64))))
            .collect();
        add_square(&mut b, terms, lower as f64 - sum_min as f64, lambda_total);
    }
    let q = b.build()?.with_labels(layout.labels())?;
    Ok((q, layout))
}

/// `Σ_t (j_t − supply_t)²`.
pub fn ev_cost(s: &EvSchedule, supply: &[f64]) -> Result<f64> {
    if s.j.len() != supply.len() {
        return Err(Error::Dimension { expected: supply.len(), got: s.j.len() });
    }
    Ok(s.j.iter().zip(supply).map(|(&j, &e)| (j as f64 - e) * (j as f64 - e)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::enumerate_optimum;

    fn binary_inst(t: usize, mu: Vec<f64>) -> EvInstance {
        EvInstance::new(
            t,
            PvDistribution::Gaussian { sigma: vec![0.0; t], mu },
            vec![0; t],
            vec![1; t],
            0.0,
            t as f64,
            vec![1; t],
        )
        .unwrap()
    }

    #[test]
    fn uniform_unit_interval_coefficients() {
        let inst = EvInstance::new(
            1,
            PvDistribution::Uniform { lo: vec![0.0], hi: vec![1.0] },
            vec![0],
            vec![1],
            0.0,
            1.0,
            vec![1],
        )
        .unwrap();
        let co = ev_coefficients(&inst);
        assert_eq!(co.c, vec![1.0]);
        assert!((co.d[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_supply_coefficients() {
        let co = ev_coefficients(&binary_inst(1, vec![2.0]));
        assert_eq!((co.c[0], co.d[0]), (4.0, 4.0));
    }

    #[test]
    fn gaussian_coefficients() {
        let inst = EvInstance::new(
            1,
            PvDistribution::Gaussian { mu: vec![1.0], sigma: vec![0.5] },
            vec![0],
            vec![1],
            0.0,
            1.0,
            vec![1],
        )
        .unwrap();
        let co = ev_coefficients(&inst);
        assert_eq!((co.c[0], co.d[0]), (2.0, 1.25));
    }

    #[test]
    fn one_step_scenario_optimum() {
        let inst = binary_inst(1, vec![1.0]);
        let (q, layout) = encode_ev(&inst, Some(&[1.0]), 10.0).unwrap();
        assert_eq!(layout.num_slack_bits(), 0);
        let opt = enumerate_optimum(&q, None).unwrap();
        assert_eq!(opt.energy, 0.0);
        assert_eq!(layout.decode(&opt.argmins[0]).unwrap().j, vec![1]);
    }

    #[test]
    fn zero_supply_optimum() {
        let inst = binary_inst(2, vec![0.0, 0.0]);
        let (q, layout) = encode_ev(&inst, Some(&[0.0, 0.0]), 10.0).unwrap();
        let opt = enumerate_optimum(&q, None).unwrap();
        assert_eq!(opt.argmins.len(), 1);
        assert_eq!(layout.decode(&opt.argmins[0]).unwrap().j, vec![0, 0]);
    }

    #[test]
    fn cost_examples() {
        assert_eq!(ev_cost(&EvSchedule { j: vec![1, 2] }, &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ev_cost(&EvSchedule { j: vec![0, 0] }, &[1.0, 1.0]).unwrap(), 2.0);
        assert!(ev_cost(&EvSchedule { j: vec![0] }, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn bounded_binary_covers_range() {
        for r in 0..40u64 {
            let c = bounded_binary(r);
            let mut sums: Vec<u64> = (0..1u64 << c.len())
                .map(|m| c.iter().enumerate().filter(|(k, _)| (m >> k) & 1 == 1).map(|(_, w)| w).sum())
                .collect();
            sums.sort();
            sums.dedup();
            assert_eq!(sums, (0..=r).collect::<Vec<_>>(), "r = {r}");
        }
    }

    #[test]
    fn window_register_only_when_binding() {
        let loose = binary_inst(3, vec![1.0; 3]);
        assert_eq!(EvLayout::new(&loose).unwrap().window(), None);
        let mut tight = loose.clone();
        tight.e_min = 1.0;
        tight.e_max = 2.0;
        let layout = EvLayout::new(&tight).unwrap();
        assert_eq!(layout.window(), Some((1, 2)));
        assert_eq!(layout.num_slack_bits(), 1);
    }

    #[test]
    fn infeasible_window_is_rejected() {
        let mut inst = binary_inst(2, vec![1.0; 2]);
        inst.e_min = 3.0;
        inst.e_max = 4.0;
        assert!(encode_ev(&inst, None, 1.0).is_err());
        let mut inst = binary_inst(2, vec![1.0; 2]);
        inst.j_min = vec![1, 1];
        inst.j_max = vec![1, 1];
        inst.e_max = 1.0;
        assert!(encode_ev(&inst, None, 1.0).is_err());
    }

    #[test]
    fn schedule_roundtrip_sets_slack() {
        let mut inst = binary_inst(2, vec![1.0; 2]);
        inst.bits = vec![2, 2];
        inst.j_max = vec![3, 3];
        inst.e_min = 2.0;
        inst.e_max = 4.0;
        let (q, layout) = encode_ev(&inst, Some(&[1.0, 2.0]), 50.0).unwrap();
        let s = EvSchedule { j: vec![1, 2] };
        let x = layout.encode_schedule(&s).unwrap();
        assert_eq!(layout.decode(&x).unwrap(), s);
        assert_eq!(q.evaluate(&x).unwrap(), 0.0);
    }

    #[test]
    fn json_forms() {
        let text = r#"{"num_steps":2,"pv":{"kind":"uniform","lo":[0,0],"hi":[1,2]},
            "j_min":[0,0],"j_max":[1,1],"e_min":0,"e_max":2,"bits":[1,1]}"#;
        let inst = EvInstance::from_json(text).unwrap();
        assert_eq!(EvInstance::from_json(&inst.to_json().unwrap()).unwrap(), inst);
        let missing = r#"{"num_steps":1,"pv":{"kind":"gaussian","mu":[1]},
            "j_min":[0],"j_max":[1],"e_min":0,"e_max":1,"bits":[1]}"#;
        assert!(EvInstance::from_json(missing).is_err());
        let overflow = r#"{"num_steps":1,"pv":{"kind":"gaussian","mu":[1],"sigma":[0]},
            "j_min":[0],"j_max":[9],"e_min":0,"e_max":9,"bits":[2]}"#;
        assert!(EvInstance::from_json(overflow).is_err());
    }
}
