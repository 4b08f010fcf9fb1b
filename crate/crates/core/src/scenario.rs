//! Discrete uncertainty sets.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

const PROBABILITY_TOL: f64 = 1e-9;

/// Scenario vectors (one value per time step) with optional probabilities.
/// Without probabilities every scenario is equally likely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioJson", into = "ScenarioJson")]
pub struct ScenarioSet {
    scenarios: Vec<Vec<f64>>,
    probabilities: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioJson {
    scenarios: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probabilities: Option<Vec<f64>>,
}

impl TryFrom<ScenarioJson> for ScenarioSet {
    type Error = Error;

    fn try_from(raw: ScenarioJson) -> Result<Self> {
        ScenarioSet::new(raw.scenarios, raw.probabilities)
    }
}

impl From<ScenarioSet> for ScenarioJson {
    fn from(s: ScenarioSet) -> Self {
        ScenarioJson { scenarios: s.scenarios, probabilities: s.probabilities }
    }
}

pub fn validate_distribution(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidArgument("probabilities must be finite and nonnegative".into()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::InvalidArgument(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Vec<f64>>, probabilities: Option<Vec<f64>>) -> Result<Self> {
        if let Some(first) = scenarios.first() {
            let dim = first.len();
            for (k, s) in scenarios.iter().enumerate() {
                if s.len() != dim {
                    return Err(Error::Dimension { expected: dim, got: s.len() });
                }
                if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidArgument(format!("scenario {k} has a negative or non-finite entry")));
                }
            }
        }
        if let Some(p) = &probabilities {
            if p.len() != scenarios.len() {
                return Err(Error::Dimension { expected: scenarios.len(), got: p.len() });
            }
            validate_distribution(p)?;
        }
        Ok(ScenarioSet { scenarios, probabilities })
    }

    pub fn uniform(scenarios: Vec<Vec<f64>>) -> Result<Self> {
        ScenarioSet::new(scenarios, None)
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Number of time steps per scenario (0 for an empty set).
    pub fn dim(&self) -> usize {
        self.scenarios.first().map_or(0, Vec::len)
    }

    pub fn scenarios(&self) -> &[Vec<f64>] {
        &self.scenarios
    }

    pub fn get(&self, k: usize) -> &[f64] {
        &self.scenarios[k]
    }

    pub fn probabilities(&self) -> Option<&[f64]> {
        self.probabilities.as_deref()
    }

    /// Probabilities, falling back to uniform weights.
    pub fn weights(&self) -> Vec<f64> {
        match &self.probabilities {
            Some(p) => p.clone(),
            None => vec![1.0 / self.len() as f64; self.len()],
        }
    }

    pub fn with_uniform_probabilities(&self) -> ScenarioSet {
        ScenarioSet { scenarios: self.scenarios.clone(), probabilities: Some(self.weights()) }
    }

    pub fn expected_scenario(&self) -> Result<Vec<f64>> {
        if self.is_empty() {
            return Err(Error::InvalidArgument("expected scenario of an empty set".into()));
        }
        let w = self.weights();
        let mut mean = vec![0.0; self.dim()];
        for (s, wk) in self.scenarios.iter().zip(&w) {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += wk * v;
            }
        }
        Ok(mean)
    }

    /// Merges identical scenarios; probabilities become the merged weights.
    /// First-occurrence order is kept.
    pub fn collapse_duplicates(&self) -> ScenarioSet {
        let w = self.weights();
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (s, wk) in self.scenarios.iter().zip(w) {
            match out.iter().position(|o| o == s) {
                Some(i) => probs[i] += wk,
                None => {
                    out.push(s.clone());
                    probs.push(wk);
                }
            }
        }
        ScenarioSet { scenarios: out, probabilities: Some(probs) }
    }

    /// Equal-width 2D histogram over a two-step scenario set.
    pub fn histogram_3d(&self, bins_per_axis: usize) -> Result<Histogram2d> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedShape(format!(
                "histogram needs two time steps per scenario, got {}",
                self.dim()
            )));
        }
        if bins_per_axis == 0 {
            return Err(Error::InvalidArgument("bins_per_axis must be at least 1".into()));
        }
        let axis = |t: usize| {
            let lo = self.scenarios.iter().map(|s| s[t]).fold(f64::INFINITY, f64::min);
            let hi = self.scenarios.iter().map(|s| s[t]).fold(f64::NEG_INFINITY, f64::max);
            (lo, (hi - lo) / bins_per_axis as f64)
        };
        let (x_lo, x_width) = axis(0);
        let (y_lo, y_width) = axis(1);
        let bin = |v: f64, lo: f64, width: f64| {
            if width > 0.0 {
                (((v - lo) / width).floor() as usize).min(bins_per_axis - 1)
            } else {
                0
            }
        };
        let mut counts = vec![vec![0u64; bins_per_axis]; bins_per_axis];
        for s in &self.scenarios {
            counts[bin(s[0], x_lo, x_width)][bin(s[1], y_lo, y_width)] += 1;
        }
        Ok(Histogram2d { x_lo, x_width, y_lo, y_width, counts })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

/// Draws `count` scenarios with per-step values from `Normal(mu_t, sigma_t)`,
/// clamped at zero. Scenarios are drawn in order, time steps within each
/// scenario in order, all from one ChaCha8 stream keyed by `seed`.
pub fn generate_gaussian_scenarios(mu: &[f64], sigma: &[f64], count: usize, seed: u64) -> Result<ScenarioSet> {
    if mu.len() != sigma.len() {
        return Err(Error::Dimension { expected: mu.len(), got: sigma.len() });
    }
    if count == 0 {
        return Err(Error::InvalidArgument("scenario count must be at least 1".into()));
    }
    if sigma.iter().chain(mu).any(|v| !v.is_finite()) || sigma.iter().any(|s| *s < 0.0) {
        return Err(Error::InvalidArgument("mu must be finite and sigma finite and nonnegative".into()));
    }
    let mut rng = rng_from_seed(seed);
    let scenarios = (0..count)
        .map(|_| {
            mu.iter()
                .zip(sigma)
                .map(|(&m, &s)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (m + s * z).max(0.0)
                })
                .collect()
        })
        .collect();
    ScenarioSet::uniform(scenarios)
}

/// Largest-remainder apportionment of `total` shots; ties in the remainder
/// go to the lower index.
pub fn allocate_shots(probs: &[f64], total: u64) -> Result<Vec<u64>> {
    validate_distribution(probs)?;
    let quotas: Vec<f64> = probs.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    let frac = |i: usize| quotas[i] - quotas[i].floor();
    if assigned <= total {
        order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
        for &i in order.iter().cycle().take((total - assigned) as usize) {
            counts[i] += 1;
        }
    } else {
        // Only reachable through rounding when the probabilities sum to slightly above one.
        order.sort_by(|&a, &b| frac(a).total_cmp(&frac(b)).then(b.cmp(&a)));
        let mut excess = assigned - total;
        for &i in order.iter().cycle() {
            if excess == 0 {
                break;
            }
            if counts[i] > 0 {
                counts[i] -= 1;
                excess -= 1;
            }
        }
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram2d {
    pub x_lo: f64,
    pub x_width: f64,
    pub y_lo: f64,
    pub y_width: f64,
    /// `counts[ix][iy]`
    pub counts: Vec<Vec<u64>>,
}

impl Histogram2d {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// One row per cell: `bin_x_lo, bin_y_lo, count`, x-major.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["bin_x_lo", "bin_y_lo", "count"])?;
        for (ix, row) in self.counts.iter().enumerate() {
            for (iy, c) in row.iter().enumerate() {
                let x = self.x_lo + ix as f64 * self.x_width;
                let y = self.y_lo + iy as f64 * self.y_width;
                wr.write_record([x.to_string(), y.to_string(), c.to_string()])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_of_symmetric_pair() {
        let s = ScenarioSet::uniform(vec![vec![1.0, 3.0], vec![3.0, 1.0]]).unwrap();
        assert_eq!(s.expected_scenario().unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn expected_of_single_scenario_is_identity() {
        let s = ScenarioSet::uniform(vec![vec![0.25, 7.5, 1.0]]).unwrap();
        assert_eq!(s.expected_scenario().unwrap(), vec![0.25, 7.5, 1.0]);
    }

    #[test]
    fn expected_of_empty_set_fails() {
        assert!(ScenarioSet::uniform(vec![]).unwrap().expected_scenario().is_err());
    }

    #[test]
    fn weighted_mean_from_multiplicities() {
        // Coarse rounding forces repeated scenarios so the collapse is non-trivial.
        let raw = generate_gaussian_scenarios(&[1.0, 2.0], &[0.5, 0.5], 25, 11).unwrap();
        let rounded: Vec<Vec<f64>> =
            raw.scenarios().iter().map(|s| s.iter().map(|v| (v * 2.0).round() / 2.0).collect()).collect();
        let set = ScenarioSet::uniform(rounded.clone()).unwrap().collapse_duplicates();
        assert!(set.len() < 25);
        let got = set.expected_scenario().unwrap();
        for t in 0..2 {
            let direct: f64 = rounded.iter().map(|s| s[t]).sum::<f64>() / 25.0;
            assert!((got[t] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        assert!(ScenarioSet::uniform(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(ScenarioSet::uniform(vec![vec![-1.0]]).is_err());
        assert!(ScenarioSet::new(vec![vec![1.0], vec![2.0]], Some(vec![0.5, 0.6])).is_err());
        assert!(ScenarioSet::new(vec![vec![1.0], vec![2.0]], Some(vec![0.5])).is_err());
        assert!(ScenarioSet::new(vec![vec![1.0], vec![2.0]], Some(vec![0.25, 0.75])).is_ok());
    }

    #[test]
    fn json_shape() {
        let s = ScenarioSet::new(vec![vec![1.0, 2.0]], Some(vec![1.0])).unwrap();
        let text = s.to_json().unwrap();
        assert_eq!(ScenarioSet::from_json(&text).unwrap(), s);
        let no_p = ScenarioSet::from_json(r#"{"scenarios":[[1.5],[2.5]]}"#).unwrap();
        assert_eq!(no_p.probabilities(), None);
        assert!(!no_p.to_json().unwrap().contains("probabilities"));
        assert!(ScenarioSet::from_json(r#"{"scenarios":[[1.5]],"probabilities":[0.5]}"#).is_err());
    }

    #[test]
    fn zero_sigma_gives_constant_scenarios() {
        let s = generate_gaussian_scenarios(&[1.5, 0.0, 4.0], &[0.0; 3], 7, 1).unwrap();
        assert_eq!(s.len(), 7);
        assert!(s.scenarios().iter().all(|v| v == &[1.5, 0.0, 4.0]));
    }

    #[test]
    fn generation_count_and_determinism() {
        let a = generate_gaussian_scenarios(&[1.0, 2.0], &[0.5, 0.5], 25, 42).unwrap();
        let b = generate_gaussian_scenarios(&[1.0, 2.0], &[0.5, 0.5], 25, 42).unwrap();
        let c = generate_gaussian_scenarios(&[1.0, 2.0], &[0.5, 0.5], 25, 43).unwrap();
        assert_eq!(a.len(), 25);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.scenarios().iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn sample_mean_concentrates() {
        let (mu, sigma, n) = ([3.0, 5.0], [0.7, 1.3], 100_000usize);
        let s = generate_gaussian_scenarios(&mu, &sigma, n, 2024).unwrap();
        let mean = s.expected_scenario().unwrap();
        for t in 0..2 {
            assert!((mean[t] - mu[t]).abs() < 4.0 * sigma[t] / (n as f64).sqrt(), "t={t}: {}", mean[t]);
        }
    }

    #[test]
    fn generation_rejects_bad_input() {
        assert!(generate_gaussian_scenarios(&[1.0], &[1.0, 1.0], 3, 0).is_err());
        assert!(generate_gaussian_scenarios(&[1.0], &[-1.0], 3, 0).is_err());
        assert!(generate_gaussian_scenarios(&[1.0], &[1.0], 0, 0).is_err());
    }

    #[test]
    fn shot_allocation_examples() {
        assert_eq!(allocate_shots(&[0.5, 0.5], 100).unwrap(), vec![50, 50]);
        assert_eq!(allocate_shots(&[1.0, 0.0], 7).unwrap(), vec![7, 0]);
        let third = 1.0 / 3.0;
        assert_eq!(allocate_shots(&[third, third, third], 100).unwrap(), vec![34, 33, 33]);
        assert_eq!(allocate_shots(&[0.8, 0.2], 100).unwrap(), vec![80, 20]);
        assert_eq!(allocate_shots(&[0.5, 0.5], 0).unwrap(), vec![0, 0]);
        assert!(allocate_shots(&[0.5, 0.6], 10).is_err());
    }

    #[test]
    fn histogram_basics() {
        let one = ScenarioSet::uniform(vec![vec![1.0, 2.0]]).unwrap();
        let h = one.histogram_3d(4).unwrap();
        assert_eq!(h.total(), 1);
        assert_eq!(h.counts.iter().flatten().filter(|&&c| c > 0).count(), 1);

        let same = ScenarioSet::uniform(vec![vec![1.0, 1.0]; 6]).unwrap();
        let h = same.histogram_3d(3).unwrap();
        assert_eq!(h.counts.iter().flatten().copied().max(), Some(6));

        let draws = generate_gaussian_scenarios(&[1.0, 1.0], &[0.5, 0.5], 25, 3).unwrap();
        let h = draws.histogram_3d(5).unwrap();
        assert_eq!(h.total(), 25);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 26);

        let three = ScenarioSet::uniform(vec![vec![1.0, 1.0, 1.0]]).unwrap();
        assert!(matches!(three.histogram_3d(2), Err(Error::UnsupportedShape(_))));
    }
}
