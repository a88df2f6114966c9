//! `xlma`: placement plans, sweeps, maps, benchmark tables and the identity
//! suite, driven by a JSON scenario file or a named preset.
//!
//! Exit codes: 0 success, 1 invalid input or a failed check, 2 runtime failure.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use xlma_core::benchmarks::{fpa_layout, BenchmarkKind};
use xlma_core::channel::ArrayLayout;
use xlma_core::geom::Vec3;
use xlma_core::montecarlo::{correlation_map, power_gain_map, MapRequest};
use xlma_core::optimizer::{successive_replacement, TraceRecord, DEFAULT_EXHAUSTIVE_LIMIT};
use xlma_core::rate::RateModel;
use xlma_core::scenario::{Scenario, ScenarioConfig};
use xlma_core::sweep::{self, Evaluator, Scheme, SweepParameter, SweepSpec};
use xlma_core::validate::{self, ValidateOptions};
use xlma_core::{config, linear_to_db, presets, Error, Result};

#[derive(Parser)]
#[command(name = "xlma", version, about = "Movable-subarray placement and evaluation")]
struct Cli {
    /// Worker threads; defaults to the number of cores. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the placement and write it as JSON.
    Plan {
        #[command(flatten)]
        source: Source,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the optimizer trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate schemes over a parameter sweep; one CSV per evaluator.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Sweep specification (JSON).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Export a power (dB) or correlation map as a CSV matrix.
    Map {
        #[command(flatten)]
        source: Source,
        /// Map specification (JSON); replaces the map flags below.
        #[arg(long, conflicts_with_all = ["kind", "layout", "resolution", "z", "probe"])]
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MapKind::Power)]
        kind: MapKind,
        /// `proposed` or a fixed layout name.
        #[arg(long, default_value = "proposed")]
        layout: String,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        #[arg(long)]
        z: Option<f64>,
        /// Reference point `x,y,z` of correlation maps.
        #[arg(long, value_parser = parse_point)]
        probe: Option<Vec3>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the identity suite; nonzero exit if any check fails.
    Validate {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = ValidateOptions::default().draws)]
        draws: usize,
        #[arg(long, default_value_t = ValidateOptions::default().trials)]
        trials: usize,
        /// Seed of the Monte Carlo draws.
        #[arg(long, default_value_t = ValidateOptions::default().seed)]
        mc_seed: u64,
        /// Scale every correlation kernel by this factor before checking.
        #[arg(long, hide = true)]
        corrupt_kernels: Option<f64>,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the proposed placement with the fixed layouts as CSV.
    Benchmark {
        #[command(flatten)]
        source: Source,
        /// Schemes to evaluate; the proposed placement and every fixed layout by default.
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<Scheme>,
        #[arg(long, value_delimiter = ',', default_value = "approx_mrc,sim_mrc,sim_mmse,upper_bound")]
        evaluators: Vec<Evaluator>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceGroup {
    /// Scenario file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
    preset: Option<String>,
}

#[derive(Args)]
struct Source {
    #[command(flatten)]
    which: SourceGroup,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut c = match (&self.which.config, &self.which.preset) {
            (Some(path), _) => config::load(path)?,
            (None, Some(name)) => presets::by_name(name)?,
            (None, None) => return Err(Error::config("config", "a scenario file or preset is required")),
        };
        if let Some(seed) = self.seed {
            c.rng_seed = seed;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MapKind {
    Power,
    Correlation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapSpec {
    kind: MapKind,
    #[serde(default = "default_layout")]
    layout: String,
    #[serde(flatten)]
    request: MapRequest,
}

fn default_layout() -> String {
    "proposed".into()
}

fn parse_point(s: &str) -> std::result::Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok([x, y, z]),
        _ => Err(format!("expected x,y,z, got {} values", v.len())),
    }
}

/// Placement artifact. Slot and candidate indices are 1-based.
#[derive(Serialize)]
struct PlanArtifact<'a> {
    n_subarrays: usize,
    n_candidates: usize,
    objective: f64,
    /// Candidate occupied by each subarray slot.
    n_mu: Vec<usize>,
    /// Occupancy of every candidate position.
    chi: Vec<u8>,
    /// Nonzero entry of each placement-matrix row as `[slot, candidate]`.
    phi_rows: Vec<[usize; 2]>,
    positions: Vec<Vec3>,
    initial_n_mu: Vec<usize>,
    initial_objective: f64,
    lp_objective: f64,
    lp_penalized: bool,
    trace: &'a [TraceRecord],
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn plan(source: &Source, out: Option<&Path>, trace: Option<&Path>) -> Result<()> {
    let scenario = Scenario::build(source.load()?)?;
    let model = RateModel::for_candidates(&scenario)?;
    let plan = successive_replacement(&model, scenario.n_subarrays())?;
    log::info!("objective {:.6} after {} iterations", plan.objective, plan.trace.len());
    let artifact = PlanArtifact {
        n_subarrays: plan.n_mu.len(),
        n_candidates: plan.chi.len(),
        objective: plan.objective,
        n_mu: one_based(&plan.n_mu),
        chi: plan.chi.iter().map(|&c| c as u8).collect(),
        phi_rows: plan
            .matrix()
            .rows
            .iter()
            .enumerate()
            .map(|(slot, &n)| [slot + 1, n + 1])
            .collect(),
        positions: plan.n_mu.iter().map(|&n| scenario.config.ma_region.position(n)).collect(),
        initial_n_mu: one_based(&plan.initial_n_mu),
        initial_objective: plan.initial_objective,
        lp_objective: plan.lp.objective,
        lp_penalized: plan.lp.penalized,
        trace: &plan.trace,
    };
    write_json(&artifact, out)?;
    if let Some(path) = trace {
        fs::write(path, plan.trace_jsonl()?)?;
    }
    Ok(())
}

fn run_sweep(source: &Source, spec_path: &Path, out_dir: &Path) -> Result<()> {
    let spec: SweepSpec = serde_json::from_str(&fs::read_to_string(spec_path)?)?;
    let rows = sweep::run_sweep(&source.load()?, &spec)?;
    fs::create_dir_all(out_dir)?;
    for ev in &spec.evaluators {
        let mine: Vec<_> = rows.iter().filter(|r| r.evaluator == ev.name()).cloned().collect();
        let path = out_dir.join(format!("{}.csv", ev.name()));
        sweep::write_csv(&mine, BufWriter::new(File::create(&path)?))?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn layout_by_name(name: &str, scenario: &Scenario) -> Result<ArrayLayout> {
    if name == "proposed" {
        let model = RateModel::for_candidates(scenario)?;
        let plan = successive_replacement(&model, scenario.n_subarrays())?;
        return ArrayLayout::from_candidates(scenario, &plan.n_mu);
    }
    let kind: BenchmarkKind = name.parse().map_err(|_| {
        let names: Vec<_> = BenchmarkKind::ALL.iter().map(|k| k.name()).collect();
        Error::config("layout", format!("unknown layout {name:?}; expected proposed, {}", names.join(", ")))
    })?;
    fpa_layout(kind, scenario)
}

fn map(source: &Source, spec: &MapSpec, out: Option<&Path>) -> Result<()> {
    let scenario = Scenario::build(source.load()?)?;
    let layout = layout_by_name(&spec.layout, &scenario)?;
    let grid = match spec.kind {
        MapKind::Power => power_gain_map(&scenario, &layout, &spec.request)?.map_values(linear_to_db),
        MapKind::Correlation => {
            if spec.request.probe.is_none() {
                return Err(Error::config("probe", "correlation maps need a probe point"));
            }
            correlation_map(&scenario, &layout, &spec.request)?
        }
    };
    let mut w = output(out)?;
    grid.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn run_validate(source: &Source, opts: &ValidateOptions, out: Option<&Path>) -> Result<bool> {
    let scenario = Scenario::build(source.load()?)?;
    let report = validate::run_suite(&scenario, opts)?;
    for line in report.lines() {
        println!("{line}");
    }
    if let Some(path) = out {
        write_json(&report, Some(path))?;
    }
    Ok(report.all_passed())
}

fn benchmark(source: &Source, schemes: &[Scheme], evaluators: &[Evaluator], trials: usize, out: Option<&Path>) -> Result<()> {
    let config = source.load()?;
    let schemes = if schemes.is_empty() {
        std::iter::once(Scheme::Proposed)
            .chain(BenchmarkKind::ALL.into_iter().map(Scheme::Fixed))
            .collect()
    } else {
        schemes.to_vec()
    };
    let m_h = config.subarray.m_h as f64;
    let spec = SweepSpec {
        parameter: SweepParameter::MH,
        values: vec![m_h],
        schemes,
        evaluators: evaluators.to_vec(),
        trials,
        seed: None,
        exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
    };
    spec.validate()?;
    let rows = sweep::evaluate_config(config, m_h, &spec)?;
    let mut w = output(out)?;
    sweep::write_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::config("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::domain(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Plan { source, out, trace } => plan(&source, out.as_deref(), trace.as_deref())?,
        Command::Sweep { source, spec, out_dir } => run_sweep(&source, &spec, &out_dir)?,
        Command::Map {
            source,
            spec,
            kind,
            layout,
            resolution,
            z,
            probe,
            out,
        } => {
            let spec = match spec {
                Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
                None => MapSpec {
                    kind,
                    layout,
                    request: MapRequest {
                        z,
                        probe,
                        ..MapRequest::new(resolution)
                    },
                },
            };
            map(&source, &spec, out.as_deref())?
        }
        Command::Validate {
            source,
            draws,
            trials,
            mc_seed,
            corrupt_kernels,
            out,
        } => {
            let opts = ValidateOptions {
                draws,
                trials,
                seed: mc_seed,
                corrupt_kernels,
            };
            return run_validate(&source, &opts, out.as_deref());
        }
        Command::Benchmark {
            source,
            schemes,
            evaluators,
            trials,
            out,
        } => benchmark(&source, &schemes, &evaluators, trials, out.as_deref())?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
