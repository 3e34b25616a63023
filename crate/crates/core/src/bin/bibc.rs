use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bibc::harness::{self, figures, ExperimentSpec};
use bibc::{Error, Result, SystemConfig};

#[derive(Parser)]
#[command(name = "bibc", version, about = "Cell-free bistatic backscatter simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON spec.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; BIBC_THREADS takes precedence.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Regenerate the data series of one figure.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(3..=9))]
        figure: u8,
        #[arg(long)]
        out: PathBuf,
        /// Drops per point (noise trials for figure 4).
        #[arg(long)]
        drops: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Estimation NMSE against pilot power.
    Nmse {
        /// Pilot lengths, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "5,7,11")]
        tau: Vec<usize>,
        /// Pilot powers in dBm, `start:step:stop` or a comma list.
        #[arg(long = "pp-dbm", default_value = "0:2:20")]
        pp_dbm: String,
        #[arg(long, default_value_t = figures::NMSE_TRIALS)]
        trials: usize,
        /// Optional JSON system config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; the table goes to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn thread_count(flag: Option<usize>) -> Result<usize> {
    if let Ok(env) = std::env::var("BIBC_THREADS") {
        return env
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("BIBC_THREADS must be a positive integer, got {env:?}")));
    }
    Ok(flag.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1))
}

/// `0:2:20` (inclusive) or `0,5,10`.
fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot read {text:?} as start:step:stop or a comma list"));
    let nums = |sep| text.split(sep).map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>();
    if text.contains(':') {
        let parts = nums(':')?;
        let [start, step, stop] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| start + step * i as f64).collect())
    } else {
        nums(',')
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(spec_path: &Path, out: &Path, seed: Option<u64>, threads: usize) -> Result<()> {
    let mut spec = ExperimentSpec::from_json(&std::fs::read_to_string(spec_path)?)?;
    if seed.is_some() {
        spec.seed = seed;
    }
    std::fs::create_dir_all(out)?;
    let first = spec.sweep_var.apply(&spec.config, spec.values[0])?;
    let geo = bibc::place_network(&first, bibc::rng::drop_seed(spec.seed(), 0))?;
    geo.write_csv(create(&out.join("geometry_drop0.csv"))?)?;
    let result = harness::run_experiment(&spec, threads)?;
    harness::write_aggregate_csv(&harness::aggregate(&result.records), create(&out.join("aggregate.csv"))?)?;
    harness::write_records_csv(&result.records, create(&out.join("records.csv"))?)?;
    harness::write_trace_csvs(&result, spec.sweep_var, out)?;
    eprintln!("{} records written to {}", result.records.len(), out.display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { spec, out, seed, threads } => run(&spec, &out, seed, thread_count(threads)?),
        Command::Reproduce { figure, out, drops, seed, threads } => {
            for path in figures::reproduce(figure, &out, drops, seed, thread_count(threads)?)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Nmse { tau, pp_dbm, trials, config, out, seed, threads } => {
            let config = match config {
                Some(path) => SystemConfig::from_json(&std::fs::read_to_string(path)?)?,
                None => SystemConfig::default(),
            };
            let rows = harness::nmse_sweep(&config, &tau, &parse_grid(&pp_dbm)?, trials, seed, thread_count(threads)?)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    harness::write_nmse_csv(&rows, create(&dir.join("nmse.csv"))?)
                }
                None => harness::write_nmse_csv(&rows, std::io::stdout().lock()),
            }
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bibc: {e}");
            ExitCode::FAILURE
        }
    }
}
