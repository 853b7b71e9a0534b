use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use topoflock::config::initial_state;
use topoflock::harness::{
    run_benchmark, run_validation, write_bench_csv, write_validation_csv, ValidationSpec,
};
use topoflock::snapshot::{CsvSink, FractionCsvSink, Tee};
use topoflock::{meso, micro, validate_config, Mode, Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "topoflock", version, about = "Leader-follower swarm simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write snapshots.csv, fractions.csv and config.toml.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario snapshot cadence, in steps.
        #[arg(long)]
        snapshot_every: Option<u64>,
    },
    /// Run the alignment-only validation sweep and write validation.csv.
    Validate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure neighbor-search cost and write bench.csv.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn run(config: &Path, seed: Option<u64>, out: &Path, every: Option<u64>) -> Result<()> {
    let mut cfg = ScenarioConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(every) = every {
        cfg.snapshot_every = every;
    }
    let cfg = validate_config(cfg)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    let mut snaps = CsvSink::new(create(out, "snapshots.csv")?);
    let mut fracs = FractionCsvSink::new(create(out, "fractions.csv")?);
    let initial = initial_state(&cfg)?;
    let mut sink = Tee(&mut snaps, &mut fracs);
    let end = match cfg.mode {
        Mode::Micro => micro::run_micro_from(&cfg, initial, &mut sink)?,
        Mode::Meso => meso::run_meso_from(&cfg, initial, &mut sink)?,
    };
    snaps.into_inner()?;
    fracs.into_inner()?;
    let (f, l) = end.label_fractions();
    log::info!(
        "finished at step {} (t = {}): followers {f:.4}, leaders {l:.4}",
        end.step,
        end.time
    );
    Ok(())
}

fn validate(spec: &Path, out: &Path) -> Result<()> {
    let spec = ValidationSpec::load(spec)?;
    let rows = run_validation(&spec)?;
    fs::create_dir_all(out)?;
    let mut w = create(out, "validation.csv")?;
    write_validation_csv(&mut w, &spec, &rows)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            seed,
            out,
            snapshot_every,
        } => run(config, *seed, out, *snapshot_every),
        Command::Validate { spec, out } => validate(spec, out),
        Command::Bench {
            sizes,
            rho,
            p,
            out,
            dim,
            seed,
        } => run_benchmark(sizes, rho, p, *dim, *seed).and_then(|rows| {
            fs::create_dir_all(out)?;
            let mut w = create(out, "bench.csv")?;
            write_bench_csv(&mut w, &rows)
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
