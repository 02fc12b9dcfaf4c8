//! Command-line front end over the scenario layer.

use clap::{Parser, Subcommand};
use pdc_sim::error::Error;
use pdc_sim::optics::spatial_gained_2d;
use pdc_sim::scenario::{
    self, emit, resolve, run_aperture_scan, run_gain_scan, run_hbt_point, run_position_scan,
    ScanResult, ScenarioConfig,
};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "pdc-sim",
    about = "Mode-structure simulator for high-gain parametric down-conversion",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the sampler seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (CSV for scans and hbt, JSON for calibrate).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the pulse count.
    #[arg(long, global = true)]
    pulses: Option<usize>,
    /// Worker threads; defaults to SCHMIDT_BENCH_WORKERS or all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long, global = true)]
    gnuplot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose the configured kernel and report (or export) the mode basis.
    Decompose,
    /// Run the gain and kernel calibrations and report the fitted constants.
    Calibrate,
    /// g2 versus parametric gain.
    ScanGain,
    /// g2 versus aperture diameter at the focal plane.
    ScanAperture,
    /// g2 versus detection-plane position.
    ScanPosition,
    /// Single full-collection HBT run; exports the per-pulse batch.
    Hbt,
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let mut config = ScenarioConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        config.sampler.seed = seed;
    }
    if let Some(pulses) = cli.pulses {
        config.sampler.pulses = pulses;
    }
    config.validate()?;
    Ok(config)
}

fn emit_scan(result: &ScanResult, out: Option<&Path>, gnuplot: bool) -> Result<(), Error> {
    match out {
        Some(path) => {
            emit(result, path)?;
            if gnuplot {
                scenario::emit_gnuplot(result, path)?;
            }
            eprintln!("wrote {} rows to {}", result.rows.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            scenario::write_csv(result, stdout.lock()).map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Decompose => {
            let resolved = resolve(&config)?;
            let spectrum = &resolved.spectrum_1d;
            let gained = spatial_gained_2d(spectrum, config.modes_per_axis, resolved.gain)?;
            println!(
                "per-axis modes: {}  K_1d = {:.4}  K_s(2D, G={:.3}) = {:.4}",
                spectrum.len(),
                spectrum.schmidt_number(),
                resolved.gain,
                gained.schmidt_number()
            );
            let head: Vec<String> = spectrum
                .weights()
                .iter()
                .take(6)
                .map(|w| format!("{w:.6}"))
                .collect();
            println!("leading weights: {}", head.join(", "));
            if let Some(path) = &cli.out {
                let file = std::fs::File::create(path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                resolved
                    .signal_basis
                    .write_csv(std::io::BufWriter::new(file))
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                eprintln!("wrote mode basis to {}", path.display());
            }
        }
        Command::Calibrate => {
            let resolved = resolve(&config)?;
            let gained =
                spatial_gained_2d(&resolved.spectrum_1d, config.modes_per_axis, resolved.gain)?;
            let report = serde_json::json!({
                "resolved_gain": resolved.gain,
                "gain_proportionality": resolved.gain_calibration.map(|c| c.proportionality),
                "gain_fit_residual": resolved.gain_calibration.map(|c| c.fit_residual),
                "fitted_sigma_c_um": resolved.config.kernel.sigma_c_um,
                "spatial_ks_at_gain": gained.schmidt_number(),
            });
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            match &cli.out {
                Some(path) => {
                    std::fs::write(path, text)
                        .map_err(|e| Error::io(path.display().to_string(), e))?;
                    eprintln!("wrote calibration report to {}", path.display());
                }
                None => println!("{text}"),
            }
        }
        Command::ScanGain => emit_scan(&run_gain_scan(&config)?, cli.out.as_deref(), cli.gnuplot)?,
        Command::ScanAperture => {
            emit_scan(&run_aperture_scan(&config)?, cli.out.as_deref(), cli.gnuplot)?
        }
        Command::ScanPosition => {
            emit_scan(&run_position_scan(&config)?, cli.out.as_deref(), cli.gnuplot)?
        }
        Command::Hbt => {
            let (result, batch) = run_hbt_point(&config)?;
            let row = result.rows[0];
            println!(
                "g2 = {:.5} +/- {:.5} over {} pulses (analytic {:.5}, K = {:.3})",
                row.g2_montecarlo,
                row.std_error,
                batch.len(),
                row.g2_analytic,
                row.k_effective
            );
            if let Some(path) = &cli.out {
                let file = std::fs::File::create(path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                batch
                    .write_csv(std::io::BufWriter::new(file), &result.metadata.config.sampler)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                eprintln!("wrote pulse batch to {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let workers = cli.workers.or_else(|| {
        std::env::var("SCHMIDT_BENCH_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build();
    let outcome = match pool {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(Error::Config(format!("cannot build worker pool: {e}"))),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
