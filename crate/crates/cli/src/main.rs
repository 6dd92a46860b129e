//! `sba-ik`: data generation, calibration, training, sweeps and trajectory
//! evaluation from one JSON config.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical
//! failure (divergence, unreachable target).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use sba_ik::actuation::equal_pressurization_samples;
use sba_ik::bpnet::{self, hidden_sweep, mac_count, mape, r_squared, TrainedModel};
use sba_ik::config::RunConfig;
use sba_ik::datagen::{simulate_platform, split_dataset, Dataset, Split};
use sba_ik::trajectory::{evaluate, plan, EvalSettings, PressureSchedule, Solver, TrajectoryReport};
use sba_ik::{calibrate, CalibrationFit, Error};

#[derive(Parser)]
#[command(name = "sba-ik", version, about = "Inverse kinematics pipeline for a three-chamber soft actuator")]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the sampling platform and write the train/test dataset.
    Generate {
        /// Dataset CSV; the provenance sidecar is written next to it.
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
    },
    /// Fit the compliance k from equal-pressurization samples.
    Calibrate {
        /// CSV with columns `p_kPa,l_mm`. Without it, noiseless samples at the
        /// configured pressure levels are used.
        #[arg(long, value_name = "CSV")]
        samples: Option<PathBuf>,
        #[arg(long, value_name = "JSON")]
        out: Option<PathBuf>,
    },
    /// Train the network on the dataset's train split.
    Train {
        #[arg(long, value_name = "CSV")]
        data: Option<PathBuf>,
        #[arg(long, value_name = "JSON")]
        out: Option<PathBuf>,
    },
    /// Train every candidate hidden size for each sweep seed.
    Sweep {
        #[arg(long, value_name = "CSV")]
        data: Option<PathBuf>,
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
    },
    /// Compute the pressure schedule for the figure-8 waypoints.
    Plan {
        #[arg(long, value_enum, default_value_t = SolverArg::Analytical)]
        solver: SolverArg,
        /// Trained model; required with `--solver bpnet`.
        #[arg(long, value_name = "JSON")]
        model: Option<PathBuf>,
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
    },
    /// Play a schedule through the forward model and report tracking errors.
    Evaluate {
        #[arg(long, value_name = "CSV")]
        schedule: Option<PathBuf>,
        /// Per-waypoint CSV; the summary JSON is written next to it.
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
        /// Also write an SVG plot next to the report.
        #[arg(long)]
        svg: bool,
    },
    /// Plan and evaluate with both solvers and write a comparison table.
    Report {
        #[arg(long, value_name = "JSON")]
        model: Option<PathBuf>,
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
        /// Also write one SVG plot per solver next to the table.
        #[arg(long)]
        svg: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Analytical,
    Bpnet,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_numerical() => 3,
            Error::Io(_) => 1,
            Error::Csv(c) if c.is_io_error() => 1,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, Failure>;
}

impl<T> Context<T> for sba_ik::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, Failure> {
        self.map_err(|e| {
            let mut f = Failure::from(e);
            f.message = format!("{}: {}", what(), f.message);
            f
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).context(|| format!("config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let default_path = |name: &str| cfg.output_dir.join(name);
    match cli.command {
        Command::Generate { out } => generate(&cfg, &out.unwrap_or_else(|| default_path("data.csv"))),
        Command::Calibrate { samples, out } => calibrate_cmd(
            &cfg,
            samples.as_deref(),
            &out.unwrap_or_else(|| default_path("calibration.json")),
        ),
        Command::Train { data, out } => train(
            &cfg,
            &data.unwrap_or_else(|| default_path("data.csv")),
            &out.unwrap_or_else(|| default_path("model.json")),
        ),
        Command::Sweep { data, out } => sweep(
            &cfg,
            &data.unwrap_or_else(|| default_path("data.csv")),
            &out.unwrap_or_else(|| default_path("sweep.csv")),
        ),
        Command::Plan { solver, model, out } => plan_cmd(
            &cfg,
            solver,
            model.as_deref(),
            &out.unwrap_or_else(|| default_path("schedule.csv")),
        ),
        Command::Evaluate { schedule, out, svg } => evaluate_cmd(
            &cfg,
            &schedule.unwrap_or_else(|| default_path("schedule.csv")),
            &out.unwrap_or_else(|| default_path("report.csv")),
            svg,
        ),
        Command::Report { model, out, svg } => report(
            &cfg,
            &model.unwrap_or_else(|| default_path("model.json")),
            &out.unwrap_or_else(|| default_path("comparison.csv")),
            svg,
        ),
    }
}

/// Creates the parent directory of an output file.
fn prepare(out: &Path) -> Result<(), Failure> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure {
            code: 1,
            message: format!("cannot create {}: {e}", parent.display()),
        })?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    prepare(path)?;
    fs::write(path, text).map_err(|e| Failure {
        code: 1,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn generate(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let geo = cfg.geometry()?;
    let ds = simulate_platform(&cfg.data.levels, &geo, &cfg.noise, cfg.seed)?;
    let ds = split_dataset(&ds, &cfg.data.train_p1_levels)?;
    prepare(out)?;
    ds.save(out).context(|| format!("writing {}", out.display()))?;
    println!("train={} test={}", ds.count(Split::Train), ds.count(Split::Test));
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRow {
    #[serde(rename = "p_kPa")]
    p_kpa: f64,
    l_mm: f64,
}

#[derive(Serialize)]
struct CalibrationOutput {
    #[serde(flatten)]
    fit: CalibrationFit,
    samples: usize,
}

fn read_samples(path: &Path) -> sba_ik::Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: SampleRow = row?;
        out.push((row.p_kpa, row.l_mm));
    }
    Ok(out)
}

fn calibrate_cmd(cfg: &RunConfig, samples: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let geo = cfg.geometry()?;
    let samples = match samples {
        Some(path) => read_samples(path).context(|| format!("samples {}", path.display()))?,
        None => equal_pressurization_samples(&cfg.data.levels, &geo)?,
    };
    let fit = calibrate(&samples, &geo)?;
    let mut json = serde_json::to_string_pretty(&CalibrationOutput {
        fit,
        samples: samples.len(),
    })
    .map_err(|e| Failure::from(Error::from(e)))?;
    json.push('\n');
    write_text(out, &json)?;
    println!(
        "k_hat={:.6} MPa^-1 mu0_hat={:.6} MPa residual={:.3e} MPa",
        fit.k_hat, fit.mu0_hat, fit.residual
    );
    Ok(())
}

fn load_dataset(path: &Path) -> Result<Dataset, Failure> {
    let ds = Dataset::load(path).context(|| format!("dataset {}", path.display()))?;
    for split in [Split::Train, Split::Test] {
        if ds.count(split) == 0 {
            return Err(Failure::invalid(format!(
                "dataset {}: the {split} split is empty",
                path.display()
            )));
        }
    }
    Ok(ds)
}

fn train(cfg: &RunConfig, data: &Path, out: &Path) -> Result<(), Failure> {
    let ds = load_dataset(data)?;
    let (train_x, train_t) = ds.arrays(Split::Train);
    let (test_x, test_t) = ds.arrays(Split::Test);
    let net = cfg.network_config();
    let (model, history) = bpnet::train(&net, &train_x, &train_t)?;
    prepare(out)?;
    model.save(out).context(|| format!("writing {}", out.display()))?;
    let preds: Vec<[f64; 3]> = test_x.iter().map(|x| model.predict(*x)).collect();
    let test_mape = mape(&preds, &test_t)?;
    let test_r2 = r_squared(&preds, &test_t)?;
    println!("final_train_mse={:.6}", history.final_mse());
    println!("test_mape={:.3}%", test_mape.percent);
    println!("test_r2={:.6}", test_r2);
    println!("mac_count={}", mac_count(&net, train_x.len() as u64));
    Ok(())
}

fn sweep(cfg: &RunConfig, data: &Path, out: &Path) -> Result<(), Failure> {
    let ds = load_dataset(data)?;
    let (train_x, train_t) = ds.arrays(Split::Train);
    let (test_x, test_t) = ds.arrays(Split::Test);
    let result = hidden_sweep(
        &cfg.network_config(),
        &cfg.network.sweep_seeds,
        (&train_x, &train_t),
        (&test_x, &test_t),
    )?;
    prepare(out)?;
    result.save_csv(out).context(|| format!("writing {}", out.display()))?;
    for row in result.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: cell m={} seed={} failed: {}",
            row.hidden,
            row.seed,
            row.error.as_deref().unwrap_or_default()
        );
    }
    for (m, r2) in &result.mean_r2 {
        println!("m={m:<2} mean_test_r2={r2:.6}");
    }
    println!("selected m={}", result.selected_hidden);
    Ok(())
}

fn load_model(path: &Path) -> Result<TrainedModel, Failure> {
    TrainedModel::load(path).map_err(|e| Failure::invalid(format!("model {}: {e}", path.display())))
}

fn plan_cmd(cfg: &RunConfig, solver: SolverArg, model: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let geo = cfg.geometry()?;
    let waypoints = cfg.trajectory.waypoints()?;
    let loaded;
    let solver = match solver {
        SolverArg::Analytical => Solver::Analytical,
        SolverArg::Bpnet => {
            let path = model.ok_or_else(|| Failure::invalid("--solver bpnet requires --model"))?;
            loaded = load_model(path)?;
            Solver::Network(&loaded)
        }
    };
    let schedule = plan(&waypoints, solver, &geo)?;
    prepare(out)?;
    schedule.save(out).context(|| format!("writing {}", out.display()))?;
    let clamped = schedule.entries.iter().filter(|e| e.clamped).count();
    println!("waypoints={} clamped={clamped} solver={}", schedule.entries.len(), schedule.solver);
    Ok(())
}

fn eval_settings(cfg: &RunConfig) -> EvalSettings {
    EvalSettings {
        noise: cfg.trajectory.eval_noise,
        seed: cfg.seed,
        reference_length: cfg.trajectory.reference_length,
    }
}

fn write_report(report: &TrajectoryReport, out: &Path, svg: Option<PathBuf>) -> Result<(), Failure> {
    prepare(out)?;
    report.save_csv(out).context(|| format!("writing {}", out.display()))?;
    let summary = out.with_extension("summary.json");
    report
        .save_summary(&summary)
        .context(|| format!("writing {}", summary.display()))?;
    if let Some(path) = svg {
        write_text(&path, &report.to_svg())?;
    }
    Ok(())
}

fn evaluate_cmd(cfg: &RunConfig, schedule: &Path, out: &Path, svg: bool) -> Result<(), Failure> {
    let geo = cfg.geometry()?;
    let waypoints = cfg.trajectory.waypoints()?;
    let schedule = PressureSchedule::load(schedule).context(|| format!("schedule {}", schedule.display()))?;
    let report = evaluate(&schedule, &waypoints, &geo, &eval_settings(cfg))?;
    write_report(&report, out, svg.then(|| out.with_extension("svg")))?;
    let s = &report.summary;
    println!(
        "solver={} mean={:.4} mm max={:.4} mm std={:.4} mm relative={:.3}%",
        s.solver, s.mean_error_mm, s.max_error_mm, s.std_error_mm, s.relative_mean_error_pct
    );
    Ok(())
}

fn report(cfg: &RunConfig, model: &Path, out: &Path, svg: bool) -> Result<(), Failure> {
    let geo = cfg.geometry()?;
    let waypoints = cfg.trajectory.waypoints()?;
    let model = load_model(model)?;
    let settings = eval_settings(cfg);
    let mut table =
        String::from("solver,waypoints,clamped,mean_error_mm,max_error_mm,std_error_mm,relative_mean_error_pct\n");
    for solver in [Solver::Analytical, Solver::Network(&model)] {
        let kind = solver.kind();
        let schedule = plan(&waypoints, solver, &geo)?;
        let report = evaluate(&schedule, &waypoints, &geo, &settings)?;
        let stem = out.with_extension("");
        let per_solver = PathBuf::from(format!("{}.{kind}.csv", stem.display()));
        let svg_path = svg.then(|| per_solver.with_extension("svg"));
        write_report(&report, &per_solver, svg_path)?;
        let s = &report.summary;
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.solver,
            s.waypoints,
            s.clamped,
            s.mean_error_mm,
            s.max_error_mm,
            s.std_error_mm,
            s.relative_mean_error_pct
        ));
    }
    write_text(out, &table)?;
    print!("{table}");
    Ok(())
}
