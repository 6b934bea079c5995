use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mccdma::detectors::DetectorSpec;
use mccdma::simkit::{self, Metric, RecordWriter, StopRule};
use mccdma::sysmodel::{ConfigMap, SystemParams};
use mccdma::{Error, Result};

#[derive(Parser)]
#[command(name = "mccdma", version, about = "Downlink MC-CDMA link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an Eb/N0 x load sweep and append the records to a CSV file.
    Simulate(SimulateArgs),
    /// Interpolate the Eb/N0 needed to reach a target error rate.
    Extract(ExtractArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// `key = value` file with system parameters and stop rule.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated detector ids, e.g. `mmsec,gmmse,pic:stages=2`.
    #[arg(long, value_delimiter = ',', required = true)]
    detectors: Vec<String>,
    /// Eb/N0 grid in dB as `start:step:stop`.
    #[arg(long)]
    ebn0: String,
    /// Comma-separated numbers of active users; defaults to the configured K.
    #[arg(long, value_delimiter = ',')]
    users: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Starting point before the configuration file is applied.
    #[arg(long, default_value = "desk")]
    preset: String,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
    /// Run only shard `i` of `n` (round robin over sweep points), as `i/n`.
    #[arg(long)]
    shard: Option<String>,
}

#[derive(Args)]
#[group(id = "target", required = true, multiple = false)]
struct TargetArgs {
    #[arg(long)]
    target_ber: Option<f64>,
    #[arg(long)]
    target_fer: Option<f64>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long)]
    out: PathBuf,
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut params = SystemParams::preset(&args.preset)?;
    let mut stop = StopRule::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        let mut config = ConfigMap::parse(&text)?;
        params.apply_config(&mut config)?;
        stop.apply_config(&mut config)?;
        config.finish()?;
    }
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    let master_seed = params.seed;
    let checked = params.validate()?;
    let detectors: Vec<DetectorSpec> = args.detectors.iter().map(|d| d.parse()).collect::<Result<_>>()?;
    let grid = simkit::parse_grid(&args.ebn0)?;
    let users = if args.users.is_empty() {
        vec![checked.params().n_users]
    } else {
        args.users.clone()
    };
    for &k in &users {
        checked.with_users(k)?;
    }
    let mut points = simkit::sweep_points(&detectors, &grid, &users);
    if let Some(s) = &args.shard {
        let parsed = s
            .split_once('/')
            .and_then(|(i, n)| Some((i.parse().ok()?, n.parse().ok()?)));
        let (i, n) = parsed.ok_or_else(|| Error::Config(format!("bad shard '{s}', expected i/n")))?;
        points = simkit::shard(&points, i, n).map_err(|e| Error::Config(e.to_string()))?;
    }
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let mut writer = RecordWriter::append(&args.out)?;
    simkit::run_points(&checked, &points, &stop, master_seed, workers, |r| {
        eprintln!(
            "{:<40} K={:<3} {:>6.2} dB  BER {:.3e}  FER {:.3e}  ({} frames, {:.1?})",
            r.detector, r.n_users, r.ebn0_db, r.ber, r.fer, r.frames_sent, r.elapsed
        );
        writer.write(r)
    })?;
    Ok(())
}

fn extract(args: ExtractArgs) -> Result<()> {
    let (metric, target) = match (args.target.target_ber, args.target.target_fer) {
        (Some(t), None) => (Metric::Ber, t),
        (None, Some(t)) => (Metric::Fer, t),
        _ => unreachable!("clap enforces exactly one target"),
    };
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Config(format!("target {target} must be in (0, 1)")));
    }
    let records = simkit::read_records(&args.input)?;
    let rows = simkit::extract(&records, target, metric)?;
    simkit::write_extract(&args.out, &rows)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Format(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Extract(a) => extract(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
