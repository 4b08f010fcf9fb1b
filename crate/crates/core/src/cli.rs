//! Command-line front end.
//!
//! Every pipeline run writes `manifest.json` next to its outputs. The
//! manifest holds the parsed command (minus `--out-dir` and `--threads`), so
//! `qrobust replay --manifest <file>` reproduces the run byte for byte.
//!
//! One master `--seed` fans out to named sub-seeds: `scenario-gen` for
//! scenario generation, `sampler` for the harvest sampler and `qaoa` for the
//! per-scenario QAOA draws (scenario `k` uses `child_seed(qaoa, k)`).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ev::{EvInstance, PvDistribution};
use crate::qaoa::{default_beta_grid, default_gamma_grid, DEFAULT_BETA_POINTS, DEFAULT_GAMMA_POINTS};
use crate::qubo::{Bitstring, QuboProblem};
use crate::robust::{
    harvest, robust_optimum, scenario_optima, two_step_qaoa, Allocation, EvObjective, ExactOracle, Measure,
    RobustnessReport, ScenarioObjective, TwoStepConfig, UcpObjective,
};
use crate::samplers::{BetaSchedule, Boltzmann, Exhaustive, Sampler, SimulatedAnnealing};
use crate::scenario::{generate_gaussian_scenarios, ScenarioSet};
use crate::seed::named_seed;
use crate::ucp::{decode_ucp, UcpInstance, UcpWeights};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_SIZE_CAP: i32 = 4;

const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "qrobust", version, about = "Robust candidate selection from sampled QUBO solutions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact robust optimum and per-scenario optima by enumeration.
    Oracle(OracleArgs),
    /// Sample the expected-value QUBO and pick the most robust sample.
    Harvest(HarvestArgs),
    /// Grid-searched QAOA angles reused on every scenario QUBO, samples pooled.
    QaoaRobust(QaoaArgs),
    /// Generate Gaussian scenarios and their histogram.
    Scenarios(ScenarioArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Ucp,
    Ev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureArg {
    #[value(name = "worst_case")]
    WorstCase,
    Regret,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::WorstCase => Measure::WorstCase,
            MeasureArg::Regret => Measure::Regret,
        }
    }
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct ScenarioSource {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    /// Per-step means for generated scenarios; EV defaults to the instance's Gaussian.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gen_mu: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub gen_sigma: Option<Vec<f64>>,
    #[arg(long)]
    pub gen_count: Option<usize>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct WeightArgs {
    #[arg(long)]
    pub lambda_demand: Option<f64>,
    #[arg(long)]
    pub lambda_link: Option<f64>,
    #[arg(long)]
    pub lambda_start: Option<f64>,
    #[arg(long)]
    pub lambda_minup: Option<f64>,
    #[arg(long)]
    pub lambda_mindown: Option<f64>,
    /// EV total-charge window weight.
    #[arg(long)]
    pub lambda_total: Option<f64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
pub struct RunPlacement {
    /// Directory for all outputs.
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct CommonArgs {
    #[arg(long, value_enum)]
    pub problem: ProblemKind,
    #[arg(long)]
    pub instance: PathBuf,
    #[command(flatten)]
    pub source: ScenarioSource,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "regret")]
    pub measure: MeasureArg,
    #[command(flatten)]
    pub weights: WeightArgs,
    /// Largest variable count the exact oracle will enumerate.
    #[arg(long, default_value_t = crate::qubo::DEFAULT_ENUMERATION_CAP)]
    pub oracle_cap: usize,
    #[command(flatten)]
    pub placement: RunPlacement,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Sa,
    Boltzmann,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleArg {
    Geometric,
    Linear,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct HarvestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "sa")]
    pub sampler: SamplerKind,
    #[arg(long, default_value_t = 1000)]
    pub shots: u64,
    /// Boltzmann sampler temperature.
    #[arg(long, default_value_t = 0.1)]
    pub temperature: f64,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub beta_start: f64,
    #[arg(long, default_value_t = 10.0)]
    pub beta_end: f64,
    #[arg(long, value_enum, default_value = "geometric")]
    pub schedule: ScheduleArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationArg {
    Uniform,
    Probability,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct QaoaArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// β grid size over [0, π).
    #[arg(long, default_value_t = DEFAULT_BETA_POINTS)]
    pub beta_points: usize,
    /// γ grid size over [0, 2π).
    #[arg(long, default_value_t = DEFAULT_GAMMA_POINTS)]
    pub gamma_points: usize,
    /// Total budget is this times the scenario count, unless --shots-total is given.
    #[arg(long, default_value_t = 100)]
    pub shots_per_scenario: u64,
    #[arg(long)]
    pub shots_total: Option<u64>,
    #[arg(long, value_enum, default_value = "uniform")]
    pub allocation: AllocationArg,
    /// Divide QUBOs by the expected QUBO's largest coefficient before building circuits.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ScenarioArgs {
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub gen_mu: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub gen_sigma: Vec<f64>,
    #[arg(long, default_value_t = 25)]
    pub gen_count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Histogram bins per axis (two-step scenarios only).
    #[arg(long, default_value_t = 5)]
    pub bins: usize,
    #[command(flatten)]
    pub placement: RunPlacement,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub placement: RunPlacement,
}

/// Contents of `manifest.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifest_version: u32,
    pub command: Command,
    /// Derived settings recorded for reference; replay ignores them.
    #[serde(default)]
    pub derived: Value,
}

impl Manifest {
    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let m: Manifest = serde_json::from_slice(bytes)?;
        if m.manifest_version != MANIFEST_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported manifest version {}", m.manifest_version)));
        }
        if matches!(m.command, Command::Replay(_)) {
            return Err(Error::InvalidArgument("a manifest cannot record a replay".into()));
        }
        Ok(m)
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. } | Error::EmptyHarvest(_) => EXIT_INFEASIBLE,
        Error::SizeCap { .. } => EXIT_SIZE_CAP,
        Error::InvalidArgument(_) | Error::InvalidInstance(_) | Error::Dimension { .. } | Error::Json(_) => EXIT_USAGE,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
        _ => 1,
    }
}

/// Runs one parsed command.
pub fn run(command: Command) -> Result<()> {
    let threads = match &command {
        Command::Oracle(a) => a.common.placement.threads,
        Command::Harvest(a) => a.common.placement.threads,
        Command::QaoaRobust(a) => a.common.placement.threads,
        Command::Scenarios(a) => a.placement.threads,
        Command::Replay(a) => a.placement.threads,
    };
    match threads {
        Some(0) => Err(Error::InvalidArgument("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| dispatch(command)),
        None => dispatch(command),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Harvest(a) => cmd_harvest(&a),
        Command::QaoaRobust(a) => cmd_qaoa_robust(&a),
        Command::Scenarios(a) => cmd_scenarios(&a),
        Command::Replay(a) => cmd_replay(&a),
    }
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let m = Manifest::from_json_slice(&fs::read(&a.manifest)?)?;
    let mut command = m.command;
    let placement = match &mut command {
        Command::Oracle(c) => &mut c.common.placement,
        Command::Harvest(c) => &mut c.common.placement,
        Command::QaoaRobust(c) => &mut c.common.placement,
        Command::Scenarios(c) => &mut c.placement,
        Command::Replay(_) => unreachable!("rejected when parsing the manifest"),
    };
    placement.out_dir = a.placement.out_dir.clone();
    placement.threads = None;
    dispatch(command)
}

enum Problem {
    Ucp(UcpObjective),
    Ev(EvObjective),
}

impl Problem {
    fn objective(&self) -> &dyn ScenarioObjective {
        match self {
            Problem::Ucp(o) => o,
            Problem::Ev(o) => o,
        }
    }

    fn expected_qubo(&self) -> Result<QuboProblem> {
        match self {
            Problem::Ucp(o) => o.expected_qubo(),
            Problem::Ev(o) => o.expected_qubo(),
        }
    }

    fn scenario_qubos(&self) -> Result<Vec<QuboProblem>> {
        match self {
            Problem::Ucp(o) => o.scenario_qubos(),
            Problem::Ev(o) => o.scenario_qubos(),
        }
    }

    fn schedule(&self, x: &Bitstring) -> Result<Value> {
        Ok(match self {
            Problem::Ucp(o) => serde_json::to_value(decode_ucp(o.encoding(), o.instance(), x)?)?,
            Problem::Ev(o) => serde_json::to_value(o.layout().decode(x)?)?,
        })
    }

    fn weights(&self) -> Value {
        match self {
            Problem::Ucp(o) => json!(o.encoding().weights),
            Problem::Ev(o) => json!({ "total": o.lambda_total() }),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn load_scenarios(c: &CommonArgs, ev: Option<&EvInstance>) -> Result<ScenarioSet> {
    let src = &c.source;
    if let Some(path) = &src.scenarios {
        if src.gen_count.is_some() || src.gen_mu.is_some() || src.gen_sigma.is_some() {
            return Err(Error::InvalidArgument("--scenarios excludes the --gen-* options".into()));
        }
        return ScenarioSet::from_json_slice(&read(path)?);
    }
    let count = src
        .gen_count
        .ok_or_else(|| Error::InvalidArgument("give --scenarios or --gen-count".into()))?;
    let from_instance = ev.and_then(|i| match &i.pv {
        PvDistribution::Gaussian { mu, sigma } => Some((mu.clone(), sigma.clone())),
        PvDistribution::Uniform { .. } => None,
    });
    let (mu, sigma) = match (&src.gen_mu, &src.gen_sigma, from_instance) {
        (Some(m), Some(s), _) => (m.clone(), s.clone()),
        (None, None, Some(ms)) => ms,
        _ => return Err(Error::InvalidArgument("give both --gen-mu and --gen-sigma".into())),
    };
    generate_gaussian_scenarios(&mu, &sigma, count, named_seed(c.seed, "scenario-gen"))
}

fn load_problem(c: &CommonArgs) -> Result<Problem> {
    let bytes = read(&c.instance)?;
    let w = &c.weights;
    match c.problem {
        ProblemKind::Ucp => {
            if w.lambda_total.is_some() {
                return Err(Error::InvalidArgument("--lambda-total applies to ev problems".into()));
            }
            let inst = UcpInstance::from_json_slice(&bytes)?;
            let scenarios = load_scenarios(c, None)?;
            let d = UcpWeights::default_for(&inst);
            let weights = UcpWeights {
                demand: w.lambda_demand.unwrap_or(d.demand),
                link: w.lambda_link.unwrap_or(d.link),
                start: w.lambda_start.unwrap_or(d.start),
                minup: w.lambda_minup.unwrap_or(d.minup),
                mindown: w.lambda_mindown.unwrap_or(d.mindown),
            };
            Ok(Problem::Ucp(UcpObjective::new(inst, weights, scenarios)?))
        }
        ProblemKind::Ev => {
            let ucp_only = [w.lambda_demand, w.lambda_link, w.lambda_start, w.lambda_minup, w.lambda_mindown];
            if ucp_only.iter().any(Option::is_some) {
                return Err(Error::InvalidArgument("only --lambda-total applies to ev problems".into()));
            }
            let inst = EvInstance::from_json_slice(&bytes)?;
            let scenarios = load_scenarios(c, Some(&inst))?;
            let lambda = w.lambda_total.unwrap_or_else(|| inst.default_total_weight(Some(&scenarios)));
            Ok(Problem::Ev(EvObjective::new(inst, scenarios, lambda)?))
        }
    }
}

struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        if dir.as_os_str().is_empty() {
            return Err(Error::InvalidArgument("--out-dir is required".into()));
        }
        fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf() })
    }

    fn write_with(&self, name: &str, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(self.dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    fn manifest(&self, command: Command, derived: Value) -> Result<()> {
        self.json("manifest.json", &Manifest { manifest_version: MANIFEST_VERSION, command, derived })
    }

    fn report(&self, r: &RobustnessReport) -> Result<()> {
        self.write_with("report.csv", |w| r.write_csv(w))
    }

    fn scenarios(&self, s: &ScenarioSet) -> Result<()> {
        self.write_with("scenarios.json", |w| {
            w.write_all(s.to_json()?.as_bytes())?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }
}

fn cmd_oracle(a: &OracleArgs) -> Result<()> {
    let c = &a.common;
    let out = Outputs::new(&c.placement.out_dir)?;
    let problem = load_problem(c)?;
    let obj = problem.objective();
    out.scenarios(obj.scenarios())?;
    out.manifest(Command::Oracle(a.clone()), json!({ "weights": problem.weights() }))?;
    let oracle = ExactOracle { cap: c.oracle_cap };
    let measure = Measure::from(c.measure);
    let f_star = scenario_optima(obj, &oracle)?;
    let (x, value) = robust_optimum(obj, &oracle, measure, &f_star)?;
    out.json(
        "solution.json",
        &json!({
            "measure": measure.to_string(),
            "bitstring": x.to_string(),
            "value": value,
            "f_star": f_star,
            "schedule": problem.schedule(&x)?,
        }),
    )
}

fn cmd_harvest(a: &HarvestArgs) -> Result<()> {
    let c = &a.common;
    let out = Outputs::new(&c.placement.out_dir)?;
    let problem = load_problem(c)?;
    let obj = problem.objective();
    out.scenarios(obj.scenarios())?;
    let sampler_seed = named_seed(c.seed, "sampler");
    out.manifest(
        Command::Harvest(a.clone()),
        json!({ "weights": problem.weights(), "sampler_seed": sampler_seed }),
    )?;
    let sampler: Box<dyn Sampler> = match a.sampler {
        SamplerKind::Sa => Box::new(SimulatedAnnealing {
            num_sweeps: a.sweeps,
            beta_start: a.beta_start,
            beta_end: a.beta_end,
            schedule: match a.schedule {
                ScheduleArg::Geometric => BetaSchedule::Geometric,
                ScheduleArg::Linear => BetaSchedule::Linear,
            },
        }),
        SamplerKind::Boltzmann => Box::new(Boltzmann { temperature: a.temperature }),
        SamplerKind::Exhaustive => Box::new(Exhaustive),
    };
    let measure = Measure::from(c.measure);
    let f_star = scenario_optima(obj, &ExactOracle { cap: c.oracle_cap })?;
    let expected = problem.expected_qubo()?;
    let outcome = match harvest(&expected, sampler.as_ref(), a.shots, sampler_seed, obj, measure, &f_star) {
        Ok(o) => o,
        Err(Error::EmptyHarvest(report)) => {
            out.report(&report)?;
            return Err(Error::EmptyHarvest(report));
        }
        Err(e) => return Err(e),
    };
    out.report(&outcome.report)?;
    out.json(
        "solution.json",
        &json!({
            "measure": measure.to_string(),
            "bitstring": outcome.best.to_string(),
            "value": outcome.value,
            "f_star": f_star,
            "schedule": problem.schedule(&outcome.best)?,
            "num_candidates": outcome.report.candidates.len(),
            "num_feasible": outcome.report.num_feasible(),
        }),
    )
}

fn cmd_qaoa_robust(a: &QaoaArgs) -> Result<()> {
    let c = &a.common;
    let out = Outputs::new(&c.placement.out_dir)?;
    let problem = load_problem(c)?;
    let obj = problem.objective();
    out.scenarios(obj.scenarios())?;
    let qaoa_seed = named_seed(c.seed, "qaoa");
    out.manifest(
        Command::QaoaRobust(a.clone()),
        json!({ "weights": problem.weights(), "qaoa_seed": qaoa_seed }),
    )?;
    let cfg = TwoStepConfig {
        betas: default_beta_grid(a.beta_points),
        gammas: default_gamma_grid(a.gamma_points),
        shots_total: a.shots_total.unwrap_or(a.shots_per_scenario * obj.num_scenarios() as u64),
        allocation: match a.allocation {
            AllocationArg::Uniform => Allocation::Uniform,
            AllocationArg::Probability => Allocation::Probability,
        },
        normalize: a.normalize,
        seed: qaoa_seed,
    };
    let measure = Measure::from(c.measure);
    let f_star = scenario_optima(obj, &ExactOracle { cap: c.oracle_cap })?;
    let expected = problem.expected_qubo()?;
    let outcome = match two_step_qaoa(&expected, &problem.scenario_qubos()?, &cfg, obj, measure, &f_star) {
        Ok(o) => o,
        Err(Error::EmptyHarvest(report)) => {
            out.report(&report)?;
            return Err(Error::EmptyHarvest(report));
        }
        Err(e) => return Err(e),
    };
    out.report(&outcome.report)?;
    out.write_with("landscape.csv", |w| outcome.grid.landscape.write_csv(w))?;
    out.json(
        "solution.json",
        &json!({
            "measure": measure.to_string(),
            "bitstring": outcome.best.to_string(),
            "value": outcome.value,
            "f_star": f_star,
            "schedule": problem.schedule(&outcome.best)?,
            "beta": outcome.params.betas()[0],
            "gamma": outcome.params.gammas()[0],
            "grid_index": [outcome.grid.best_index.0, outcome.grid.best_index.1],
            "expectation": outcome.grid.best_value,
            "scale": outcome.scale,
            "shots": outcome.shots,
            "num_candidates": outcome.report.candidates.len(),
            "num_feasible": outcome.report.num_feasible(),
        }),
    )
}

fn cmd_scenarios(a: &ScenarioArgs) -> Result<()> {
    let out = Outputs::new(&a.placement.out_dir)?;
    let seed = named_seed(a.seed, "scenario-gen");
    let set = generate_gaussian_scenarios(&a.gen_mu, &a.gen_sigma, a.gen_count, seed)?;
    out.manifest(Command::Scenarios(a.clone()), json!({ "scenario_seed": seed }))?;
    out.scenarios(&set)?;
    if set.dim() == 2 {
        let h = set.histogram_3d(a.bins)?;
        out.write_with("histogram.csv", |w| h.write_csv(w))?;
    }
    Ok(())
}
