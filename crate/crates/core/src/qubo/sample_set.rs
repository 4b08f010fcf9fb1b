use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Bitstring, QuboProblem};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SampleEntry {
    pub bitstring: Bitstring,
    pub energy: f64,
    pub multiplicity: u64,
}

/// Distinct bitstrings with their energies and how often they were drawn.
/// Entries are kept in lexicographic bitstring order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleSet {
    entries: Vec<SampleEntry>,
    total_shots: u64,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    bitstring: String,
    energy: f64,
    multiplicity: u64,
}

impl SampleSet {
    pub fn empty() -> Self {
        SampleSet::default()
    }

    /// Counts and scores raw shots.
    pub fn from_shots(q: &QuboProblem, shots: impl IntoIterator<Item = Bitstring>) -> Result<Self> {
        let mut counts: BTreeMap<Bitstring, u64> = BTreeMap::new();
        for s in shots {
            *counts.entry(s).or_insert(0) += 1;
        }
        SampleSet::from_counts(q, counts)
    }

    pub fn from_counts(q: &QuboProblem, counts: BTreeMap<Bitstring, u64>) -> Result<Self> {
        let mut entries = Vec::with_capacity(counts.len());
        let mut total = 0;
        for (bitstring, multiplicity) in counts {
            if multiplicity == 0 {
                continue;
            }
            let energy = q.evaluate(&bitstring)?;
            total += multiplicity;
            entries.push(SampleEntry { bitstring, energy, multiplicity });
        }
        Ok(SampleSet { entries, total_shots: total })
    }

    pub fn entries(&self) -> &[SampleEntry] {
        &self.entries
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lowest-energy entry; ties go to the lexicographically smallest bitstring.
    pub fn best(&self) -> Option<&SampleEntry> {
        self.entries.iter().fold(None, |best: Option<&SampleEntry>, e| match best {
            Some(b) if b.energy <= e.energy => Some(b),
            _ => Some(e),
        })
    }

    pub fn multiplicity(&self, b: &Bitstring) -> u64 {
        self.entries
            .binary_search_by(|e| e.bitstring.cmp(b))
            .map_or(0, |i| self.entries[i].multiplicity)
    }

    /// Checks the stored energies against `q` to `rel_tol` relative precision.
    pub fn verify(&self, q: &QuboProblem, rel_tol: f64) -> Result<()> {
        let mut total = 0;
        for (k, e) in self.entries.iter().enumerate() {
            let exact = q.evaluate(&e.bitstring)?;
            if (exact - e.energy).abs() > rel_tol * exact.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "stored energy {} for {} differs from {exact}",
                    e.energy, e.bitstring
                )));
            }
            if k > 0 && self.entries[k - 1].bitstring >= e.bitstring {
                return Err(Error::InvalidArgument("sample bitstrings are not distinct and sorted".into()));
            }
            total += e.multiplicity;
        }
        if total != self.total_shots {
            return Err(Error::InvalidArgument("multiplicities do not sum to total_shots".into()));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        // Header is written explicitly so that an empty set still gets one.
        wr.write_record(["bitstring", "energy", "multiplicity"])?;
        for e in &self.entries {
            wr.write_record([e.bitstring.to_string(), e.energy.to_string(), e.multiplicity.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Parses the CSV export. Energies are taken as written, not re-evaluated.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut entries: Vec<SampleEntry> = Vec::new();
        let mut total: u64 = 0;
        for row in rd.deserialize() {
            let row: CsvRow = row?;
            let bitstring: Bitstring = row.bitstring.parse()?;
            if row.multiplicity == 0 {
                return Err(Error::InvalidArgument("zero multiplicity".into()));
            }
            if let Some(prev) = entries.last() {
                if prev.bitstring >= bitstring || prev.bitstring.len() != bitstring.len() {
                    return Err(Error::InvalidArgument("bitstrings must be distinct, sorted and equal-length".into()));
                }
            }
            total = total
                .checked_add(row.multiplicity)
                .ok_or_else(|| Error::InvalidArgument("shot count overflow".into()))?;
            entries.push(SampleEntry { bitstring, energy: row.energy, multiplicity: row.multiplicity });
        }
        Ok(SampleSet { entries, total_shots: total })
    }
}
