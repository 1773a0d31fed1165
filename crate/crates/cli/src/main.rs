use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lmcpf_core::diagnostics::{chi_mean_scale, simulate_norm_histogram, DecayModel};
use lmcpf_core::experiment::{
    compare_weights_curve, kappa_grid, read_states_file, recompute_diagnostics,
    run_cycle_experiment, run_forecasts, weights_instance, write_forecast_csv, write_outputs,
};
use lmcpf_core::{ExperimentConfig, FilterKind};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "lmcpf",
    version,
    about = "Localized particle filter and LETKF twin experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a cycled twin experiment and write CSV diagnostics.
    Cycle(Common),
    /// Run the experiment, then score free ensemble forecasts from every analysis.
    Forecast(Common),
    /// Sweep κ and write exact and approximate particle weights at one analysis point.
    Weights(WeightsArgs),
    /// Simulate norms of Gaussian draws with power-law variances.
    Simhist(SimhistArgs),
    /// Recompute scores from a saved state file.
    Diag(DiagArgs),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration (defaults are used when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    filter: Option<FilterKind>,
    #[arg(long)]
    cycles: Option<usize>,
}

#[derive(Args)]
struct WeightsArgs {
    #[command(flatten)]
    common: Common,
    /// Cycle whose background is used.
    #[arg(long, default_value_t = 50)]
    cycle: usize,
    /// Analysis-point slot.
    #[arg(long, default_value_t = 0)]
    point: usize,
    #[arg(long, default_value_t = 5.0)]
    kappa_max: f64,
    #[arg(long, default_value_t = 51)]
    kappa_count: usize,
}

#[derive(Args)]
struct SimhistArgs {
    #[arg(long, default_value_t = 4.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    #[arg(long, default_value_t = 40)]
    dim: usize,
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Histogram bin width (Freedman-Diaconis when omitted).
    #[arg(long)]
    bin_width: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct DiagArgs {
    /// State file written by `cycle` (`states.csv` or `final_state.csv`).
    #[arg(long)]
    states: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => {
            ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(kind) = c.filter {
        cfg.filter.kind = kind;
    }
    if let Some(n) = c.cycles {
        cfg.cycles = n;
    }
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    std::fs::create_dir_all(dir)?;
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(
        dir.join(name),
    )?)))
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Cycle(c) => {
            let cfg = load_config(&c)?;
            let run = run_cycle_experiment(&cfg)?;
            let files = write_outputs(&run, &cfg.output_dir)?;
            Ok(json!({
                "command": "cycle",
                "filter": cfg.filter.kind.name(),
                "summary": run.summary(),
                "cycles_csv": files.cycles,
            }))
        }
        Command::Forecast(c) => {
            let cfg = load_config(&c)?;
            let run = run_cycle_experiment(&cfg)?;
            write_outputs(&run, &cfg.output_dir)?;
            let rows = run_forecasts(&cfg, &run)?;
            let path = cfg.output_dir.join("forecast.csv");
            write_forecast_csv(BufWriter::new(File::create(&path)?), &rows)?;
            Ok(json!({ "command": "forecast", "forecast_csv": path, "leads": rows }))
        }
        Command::Weights(w) => {
            let cfg = load_config(&w.common)?;
            let ctx = weights_instance(&cfg, w.cycle, w.point)?;
            let rows = compare_weights_curve(&ctx, &kappa_grid(w.kappa_max, w.kappa_count.max(2)))?;
            let mut out = csv_writer(&cfg.output_dir, "weights.csv")?;
            for r in &rows {
                out.serialize(r)?;
            }
            out.flush()?;
            Ok(json!({
                "command": "weights",
                "observations": ctx.n_obs(),
                "rows": rows.len(),
                "weights_csv": cfg.output_dir.join("weights.csv"),
            }))
        }
        Command::Simhist(s) => {
            let model = DecayModel {
                eta: s.eta,
                nu: s.nu,
            };
            let sim = simulate_norm_histogram(&model, s.dim, s.draws, s.seed, s.bin_width)?;
            let mut out = csv_writer(&s.out, "simhist.csv")?;
            out.write_record(["bin_start", "count"])?;
            for (start, count) in sim.histogram.bins() {
                out.write_record([start.to_string(), count.to_string()])?;
            }
            out.flush()?;
            let mut report = json!({
                "command": "simhist",
                "mean_norm": sim.mean,
                "bin_width": sim.histogram.bin_width,
                "simhist_csv": s.out.join("simhist.csv"),
            });
            if s.nu == 0.0 {
                report["analytic_mean_norm"] = json!(s.eta * chi_mean_scale(s.dim));
            }
            Ok(report)
        }
        Command::Diag(d) => {
            let states = read_states_file(&d.states)
                .with_context(|| format!("reading {}", d.states.display()))?;
            let rows = recompute_diagnostics(&states)?;
            let mut out = csv_writer(&d.out, "diag.csv")?;
            for r in &rows {
                out.serialize(r)?;
            }
            out.flush()?;
            Ok(
                json!({ "command": "diag", "cycles": rows.len(), "diag_csv": d.out.join("diag.csv") }),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = e
                .downcast_ref::<lmcpf_core::Error>()
                .map_or("Error", |core| core.kind());
            eprintln!("{}", json!({ "error": kind, "message": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}
