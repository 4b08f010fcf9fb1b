//! Unit commitment: thermal units scheduled over a horizon to meet a residual
//! demand, encoded as a QUBO with a logarithmic generation encoding.
//!
//! Variable layout for `N` units and `T` steps (all indices 0-based):
//!
//! | block  | index                         |
//! |--------|-------------------------------|
//! | on     | `t·N + i`                     |
//! | start  | `T·N + t·N + i`               |
//! | gen    | `2·T·N + gen_offset[t][i] + b`|
//!
//! Generation of unit `i` at step `t` is
//! `mingen_i·on + step_i·Σ_b 2^b·gen_b`. Before the horizon every unit is off.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{penalty_linear_eq, Bitstring, QuboBuilder, QuboProblem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Unit {
    pub varcost: f64,
    pub startcost: f64,
    pub mingen: f64,
    pub maxgen: f64,
    pub minup: usize,
    pub mindown: usize,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcpInstance {
    pub units: Vec<Unit>,
    pub num_steps: usize,
}

/// Upper bound on generation bits per unit; keeps `2^b` exact in `f64`.
const MAX_GEN_BITS: usize = 40;

impl UcpInstance {
    pub fn new(units: Vec<Unit>, num_steps: usize) -> Result<Self> {
        let inst = UcpInstance { units, num_steps };
        inst.validate()?;
        Ok(inst)
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.num_steps;
        if t == 0 {
            return Err(Error::InvalidInstance("num_steps must be at least 1".into()));
        }
        for (i, u) in self.units.iter().enumerate() {
            let bad = |msg: &str| Err(Error::InvalidInstance(format!("unit {i}: {msg}")));
            let vals = [u.varcost, u.startcost, u.mingen, u.maxgen, u.step];
            if vals.iter().any(|v| !v.is_finite()) {
                return bad("non-finite parameter");
            }
            if u.varcost < 0.0 || u.startcost < 0.0 {
                return bad("costs must be nonnegative");
            }
            if !(0.0 <= u.mingen && u.mingen <= u.maxgen) {
                return bad("need 0 <= mingen <= maxgen");
            }
            if u.step <= 0.0 {
                return bad("step must be positive");
            }
            if u.minup < 1 || u.minup > t || u.mindown < 1 || u.mindown > t {
                return bad("minup and mindown must lie in 1..=num_steps");
            }
            if gen_bits(u) > MAX_GEN_BITS {
                return bad("generation range needs too many bits");
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: UcpInstance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let inst: UcpInstance = serde_json::from_slice(bytes)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `floor(log2((maxgen − mingen) / step)) + 1`, or 0 for a fixed-output unit.
pub fn gen_bits(u: &Unit) -> usize {
    if u.maxgen <= u.mingen {
        return 0;
    }
    let ratio = (u.maxgen - u.mingen) / u.step;
    if !ratio.is_finite() || ratio >= 2f64.powi(62) {
        return usize::MAX;
    }
    // The small epsilon absorbs ratios like 0.8 / 0.1 = 7.999999999999999.
    let m = (ratio + 1e-9).floor() as u64;
    (64 - m.leading_zeros()) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcpWeights {
    pub demand: f64,
    pub link: f64,
    pub start: f64,
    pub minup: f64,
    pub mindown: f64,
}

impl UcpWeights {
    /// Logic weights exceed any achievable deterministic cost; the demand
    /// weight is 1.
    pub fn default_for(inst: &UcpInstance) -> Self {
        let t = inst.num_steps as f64;
        let bound = 1.0
            + inst
                .units
                .iter()
                .map(|u| u.startcost + t * u.varcost * u.maxgen)
                .sum::<f64>();
        UcpWeights { demand: 1.0, link: bound, start: bound, minup: bound, mindown: bound }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.demand, self.link, self.start, self.minup, self.mindown];
        if all.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument(format!("penalty weights must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UcpEncoding {
    num_units: usize,
    num_steps: usize,
    gen_bits: Vec<usize>,
    gen_offsets: Vec<Vec<usize>>,
    num_vars: usize,
    pub weights: UcpWeights,
}

impl UcpEncoding {
    pub fn new(inst: &UcpInstance, weights: UcpWeights) -> Self {
        let (n, t) = (inst.num_units(), inst.num_steps);
        let gen_bits: Vec<usize> = inst.units.iter().map(gen_bits).collect();
        let mut next = 2 * t * n;
        let gen_offsets = (0..t)
            .map(|_| {
                gen_bits
                    .iter()
                    .map(|&d| {
                        let o = next;
                        next += d;
                        o
                    })
                    .collect()
            })
            .collect();
        UcpEncoding { num_units: n, num_steps: t, gen_bits, gen_offsets, num_vars: next, weights }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn gen_bits(&self) -> &[usize] {
        &self.gen_bits
    }

    pub fn on_var(&self, t: usize, i: usize) -> usize {
        t * self.num_units + i
    }

    pub fn start_var(&self, t: usize, i: usize) -> usize {
        self.num_steps * self.num_units + t * self.num_units + i
    }

    pub fn gen_var(&self, t: usize, i: usize, b: usize) -> usize {
        self.gen_offsets[t][i] + b
    }

    fn check_len(&self, x: &Bitstring) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(Error::Dimension { expected: self.num_vars, got: x.len() });
        }
        Ok(())
    }

    /// Power terms `(var, MW per unit of var)` of unit `i` at step `t`.
    fn power_terms(&self, inst: &UcpInstance, t: usize, i: usize) -> Vec<(usize, f64)> {
        let u = &inst.units[i];
        let mut terms = vec![(self.on_var(t, i), u.mingen)];
        for b in 0..self.gen_bits[i] {
            terms.push((self.gen_var(t, i, b), u.step * 2f64.powi(b as i32)));
        }
        terms
    }

    fn labels(&self) -> BTreeMap<String, usize> {
        let mut labels = BTreeMap::new();
        for t in 0..self.num_steps {
            for i in 0..self.num_units {
                labels.insert(format!("on[{t},{i}]"), self.on_var(t, i));
                labels.insert(format!("start[{t},{i}]"), self.start_var(t, i));
                for b in 0..self.gen_bits[i] {
                    labels.insert(format!("gen[{t},{i},{b}]"), self.gen_var(t, i, b));
                }
            }
        }
        labels
    }
}

/// The three additive pieces of the UCP QUBO over one shared layout.
#[derive(Clone, Debug)]
pub struct UcpQuboParts {
    /// Variable plus start-up cost.
    pub cost: QuboProblem,
    /// `λ_demand · Σ_t (Σ_i P_ti − rd_t)²`.
    pub demand: QuboProblem,
    /// On/generation linkage, start logic, minimum up and down time.
    pub logic: QuboProblem,
}

impl UcpQuboParts {
    pub fn total(&self) -> Result<QuboProblem> {
        let mut b = QuboBuilder::new(self.cost.num_vars());
        b.add_scaled(&self.cost, 1.0).add_scaled(&self.demand, 1.0).add_scaled(&self.logic, 1.0);
        b.build()?.with_labels(self.cost.labels().clone())
    }
}

pub fn encode_ucp_parts(inst: &UcpInstance, demand: &[f64], weights: UcpWeights) -> Result<(UcpQuboParts, UcpEncoding)> {
    inst.validate()?;
    weights.validate()?;
    if demand.len() != inst.num_steps {
        return Err(Error::Dimension { expected: inst.num_steps, got: demand.len() });
    }
    if demand.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument("demand must be finite".into()));
    }
    let enc = UcpEncoding::new(inst, weights);
    let (n, t_max) = (inst.num_units(), inst.num_steps);
    let nv = enc.num_vars;

    let mut cost = QuboBuilder::new(nv);
    for t in 0..t_max {
        for (i, u) in inst.units.iter().enumerate() {
            for (v, mw) in enc.power_terms(inst, t, i) {
                cost.add_linear(v, u.varcost * mw);
            }
            cost.add_linear(enc.start_var(t, i), u.startcost);
        }
    }

    let mut dem = QuboBuilder::new(nv);
    for (t, &rd) in demand.iter().enumerate() {
        let mut coeffs: BTreeMap<usize, f64> = BTreeMap::new();
        for i in 0..n {
            for (v, mw) in enc.power_terms(inst, t, i) {
                *coeffs.entry(v).or_insert(0.0) += mw;
            }
        }
        dem.add_scaled(&penalty_linear_eq(&coeffs, rd, weights.demand)?, 1.0);
    }

    let mut logic = QuboBuilder::new(nv);
    for t in 0..t_max {
        for (i, u) in inst.units.iter().enumerate() {
            let on = enc.on_var(t, i);
            let start = enc.start_var(t, i);
            for b in 0..enc.gen_bits[i] {
                let g = enc.gen_var(t, i, b);
                logic.add_linear(g, weights.link).add_quadratic(g, on, -weights.link);
            }
            if t == 0 {
                // start = on, since the unit is off before the horizon.
                logic
                    .add_linear(on, weights.start)
                    .add_linear(start, weights.start)
                    .add_quadratic(on, start, -2.0 * weights.start);
            } else {
                crate::qubo::add_and_not_gadget(&mut logic, on, enc.on_var(t - 1, i), start, weights.start);
            }
            for tau in t..(t + u.minup).min(t_max) {
                logic
                    .add_linear(start, weights.minup)
                    .add_quadratic(start, enc.on_var(tau, i), -weights.minup);
            }
            for prev in t.saturating_sub(u.mindown)..t {
                logic.add_quadratic(start, enc.on_var(prev, i), weights.mindown);
            }
        }
    }

    let labels = enc.labels();
    let parts = UcpQuboParts {
        cost: cost.build()?.with_labels(labels.clone())?,
        demand: dem.build()?.with_labels(labels.clone())?,
        logic: logic.build()?.with_labels(labels)?,
    };
    Ok((parts, enc))
}

/// Deterministic UCP QUBO for one residual-demand vector.
pub fn encode_ucp(inst: &UcpInstance, demand: &[f64], weights: UcpWeights) -> Result<(QuboProblem, UcpEncoding)> {
    let (parts, enc) = encode_ucp_parts(inst, demand, weights)?;
    Ok((parts.total()?, enc))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UcpSchedule {
    /// `on[t][i]`
    pub on: Vec<Vec<bool>>,
    pub start: Vec<Vec<bool>>,
    /// MW
    pub power: Vec<Vec<f64>>,
}

impl UcpSchedule {
    pub fn all_off(num_steps: usize, num_units: usize) -> Self {
        UcpSchedule {
            on: vec![vec![false; num_units]; num_steps],
            start: vec![vec![false; num_units]; num_steps],
            power: vec![vec![0.0; num_units]; num_steps],
        }
    }

    fn check_shape(&self, inst: &UcpInstance) -> Result<()> {
        let (t, n) = (inst.num_steps, inst.num_units());
        for grid_len in [self.on.len(), self.start.len(), self.power.len()] {
            if grid_len != t {
                return Err(Error::Dimension { expected: t, got: grid_len });
            }
        }
        for row in self.on.iter().map(Vec::len).chain(self.start.iter().map(Vec::len)).chain(self.power.iter().map(Vec::len)) {
            if row != n {
                return Err(Error::Dimension { expected: n, got: row });
            }
        }
        Ok(())
    }

    /// CSV with columns `t, unit, on, start, power`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "unit", "on", "start", "power"])?;
        for (t, row) in self.on.iter().enumerate() {
            for i in 0..row.len() {
                wr.write_record([
                    t.to_string(),
                    i.to_string(),
                    u8::from(self.on[t][i]).to_string(),
                    u8::from(self.start[t][i]).to_string(),
                    self.power[t][i].to_string(),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn decode_ucp(enc: &UcpEncoding, inst: &UcpInstance, x: &Bitstring) -> Result<UcpSchedule> {
    enc.check_len(x)?;
    let (t_max, n) = (enc.num_steps, enc.num_units);
    let mut s = UcpSchedule::all_off(t_max, n);
    for t in 0..t_max {
        for i in 0..n {
            s.on[t][i] = x.get(enc.on_var(t, i));
            s.start[t][i] = x.get(enc.start_var(t, i));
            s.power[t][i] = enc
                .power_terms(inst, t, i)
                .into_iter()
                .filter(|&(v, _)| x.get(v))
                .fold(0.0, |acc, (_, mw)| acc + mw);
        }
    }
    Ok(s)
}

/// Inverse of [`decode_ucp`] for schedules whose power lies on the encoding lattice.
pub fn schedule_to_bits(enc: &UcpEncoding, inst: &UcpInstance, s: &UcpSchedule) -> Result<Bitstring> {
    s.check_shape(inst)?;
    let mut x = Bitstring::zeros(enc.num_vars);
    for t in 0..enc.num_steps {
        for (i, u) in inst.units.iter().enumerate() {
            x.set(enc.on_var(t, i), s.on[t][i]);
            x.set(enc.start_var(t, i), s.start[t][i]);
            let base = if s.on[t][i] { u.mingen } else { 0.0 };
            let steps = (s.power[t][i] - base) / u.step;
            let m = steps.round();
            let d = enc.gen_bits[i];
            if (steps - m).abs() > 1e-9 || m < 0.0 || m >= 2f64.powi(d as i32) {
                return Err(Error::InvalidArgument(format!(
                    "power {} of unit {i} at step {t} is not representable",
                    s.power[t][i]
                )));
            }
            let m = m as u64;
            for b in 0..d {
                x.set(enc.gen_var(t, i, b), (m >> b) & 1 == 1);
            }
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// `start ≠ on · (1 − on_prev)`.
    StartLogic { t: usize, unit: usize },
    /// A start at `t` not followed by `minup` on-steps (within the horizon).
    MinUp { t: usize, unit: usize },
    /// A start at `t` less than `mindown` steps after the unit was last on.
    MinDown { t: usize, unit: usize },
    /// Power off the `{0} ∪ [mingen, maxgen]` range.
    PowerBounds { t: usize, unit: usize, power: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::StartLogic { t, unit } => write!(f, "start logic broken for unit {unit} at step {t}"),
            Violation::MinUp { t, unit } => write!(f, "minimum up time violated by unit {unit} starting at step {t}"),
            Violation::MinDown { t, unit } => write!(f, "minimum down time violated by unit {unit} starting at step {t}"),
            Violation::PowerBounds { t, unit, power } => {
                write!(f, "power {power} of unit {unit} at step {t} is out of bounds")
            }
        }
    }
}

/// Unit-logic feasibility. Demand is not checked; it lives in the objective.
pub fn check_feasible(inst: &UcpInstance, s: &UcpSchedule) -> Result<Vec<Violation>> {
    s.check_shape(inst)?;
    let mut out = Vec::new();
    let t_max = inst.num_steps;
    for (i, u) in inst.units.iter().enumerate() {
        for t in 0..t_max {
            let prev_on = t > 0 && s.on[t - 1][i];
            if s.start[t][i] != (s.on[t][i] && !prev_on) {
                out.push(Violation::StartLogic { t, unit: i });
            }
            if s.start[t][i] {
                if (t..(t + u.minup).min(t_max)).any(|tau| !s.on[tau][i]) {
                    out.push(Violation::MinUp { t, unit: i });
                }
                if (t.saturating_sub(u.mindown)..t).any(|prev| s.on[prev][i]) {
                    out.push(Violation::MinDown { t, unit: i });
                }
            }
            let p = s.power[t][i];
            let ok = if s.on[t][i] {
                p >= u.mingen - 1e-9 && p <= u.maxgen + 1e-9
            } else {
                p == 0.0
            };
            if !ok {
                out.push(Violation::PowerBounds { t, unit: i, power: p });
            }
        }
    }
    Ok(out)
}

/// `(det_cost, mismatch_pen)`; `f(x, ξ)` is their sum.
pub fn ucp_objective(inst: &UcpInstance, s: &UcpSchedule, demand: &[f64], lambda_demand: f64) -> Result<(f64, f64)> {
    s.check_shape(inst)?;
    if demand.len() != inst.num_steps {
        return Err(Error::Dimension { expected: inst.num_steps, got: demand.len() });
    }
    let mut det = 0.0;
    let mut mismatch = 0.0;
    for (t, &rd) in demand.iter().enumerate() {
        let mut total = 0.0;
        for (i, u) in inst.units.iter().enumerate() {
            det += u.varcost * s.power[t][i];
            if s.start[t][i] {
                det += u.startcost;
            }
            total += s.power[t][i];
        }
        mismatch += (total - rd) * (total - rd);
    }
    Ok((det, lambda_demand * mismatch))
}
