use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::Measure;
use crate::error::{Error, Result};
use crate::qubo::Bitstring;

const HEADER: [&str; 8] =
    ["bitstring", "feasible", "det_cost", "mismatch_regret", "worst_case", "regret", "provenance", "values"];

/// One distinct sampled candidate. Measure columns are `None` for
/// candidates rejected by the feasibility filter.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateRow {
    pub bitstring: Bitstring,
    pub feasible: bool,
    /// `f(x, ξ_k)` for every scenario.
    pub values: Vec<f64>,
    pub det_cost: Option<f64>,
    /// Largest scenario mismatch term, `max_k mismatch_k`.
    pub mismatch_regret: Option<f64>,
    pub worst_case: Option<f64>,
    pub regret: Option<f64>,
    /// Sample counts keyed by the sampler or scenario that produced them.
    pub provenance: BTreeMap<String, u64>,
}

impl CandidateRow {
    pub fn measure(&self, m: Measure) -> Option<f64> {
        match m {
            Measure::WorstCase => self.worst_case,
            Measure::Regret => self.regret,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessReport {
    pub measure: Measure,
    pub f_star: Vec<f64>,
    /// Sorted by bitstring.
    pub candidates: Vec<CandidateRow>,
    pub selected: Option<usize>,
}

impl RobustnessReport {
    pub fn selected_row(&self) -> Option<&CandidateRow> {
        self.selected.map(|i| &self.candidates[i])
    }

    pub fn num_feasible(&self) -> usize {
        self.candidates.iter().filter(|c| c.feasible).count()
    }

    /// One row per candidate; an empty report produces just the header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(HEADER)?;
        for c in &self.candidates {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let provenance = c.provenance.iter().map(|(k, n)| format!("{k}={n}")).collect::<Vec<_>>().join(";");
            let values = c.values.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
            out.write_record([
                c.bitstring.to_string(),
                c.feasible.to_string(),
                opt(c.det_cost),
                opt(c.mismatch_regret),
                opt(c.worst_case),
                opt(c.regret),
                provenance,
                values,
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn bad(msg: String) -> Error {
    Error::InvalidArgument(format!("report csv: {msg}"))
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| bad(format!("bad number {s:?}")))
}

/// Parses rows written by [`RobustnessReport::write_csv`].
pub fn read_report_csv<R: Read>(r: R) -> Result<Vec<CandidateRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    if rdr.headers()?.iter().ne(HEADER) {
        return Err(bad("unexpected header".into()));
    }
    let mut rows: Vec<CandidateRow> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != HEADER.len() {
            return Err(bad(format!("expected {} fields, got {}", HEADER.len(), rec.len())));
        }
        let bitstring: Bitstring = rec[0].parse()?;
        let feasible = match &rec[1] {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("bad feasible flag {other:?}"))),
        };
        let mut provenance = BTreeMap::new();
        for part in rec[6].split(';').filter(|p| !p.is_empty()) {
            let (k, n) = part.split_once('=').ok_or_else(|| bad(format!("bad provenance {part:?}")))?;
            let n: u64 = n.parse().map_err(|_| bad(format!("bad provenance count {n:?}")))?;
            if provenance.insert(k.to_string(), n).is_some() {
                return Err(bad(format!("duplicate provenance key {k:?}")));
            }
        }
        let values = rec[7]
            .split(';')
            .filter(|p| !p.is_empty())
            .map(|v| v.parse().map_err(|_| bad(format!("bad value {v:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(prev) = rows.last() {
            if prev.bitstring >= bitstring {
                return Err(bad("rows are not sorted by bitstring".into()));
            }
            if prev.bitstring.len() != bitstring.len() {
                return Err(bad("bitstrings differ in length".into()));
            }
        }
        rows.push(CandidateRow {
            bitstring,
            feasible,
            values,
            det_cost: parse_opt(&rec[2])?,
            mismatch_regret: parse_opt(&rec[3])?,
            worst_case: parse_opt(&rec[4])?,
            regret: parse_opt(&rec[5])?,
            provenance,
        });
    }
    Ok(rows)
}
