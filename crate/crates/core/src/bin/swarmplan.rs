use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use swarmplan::sim::{benchmark, run, write_csv, Outcome, SimConfig, SimError};
use swarmplan::world::{generate, CommRange, EnvKind, Scenario};

const EXIT_VIOLATION: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "swarmplan", version, about = "Decentralized multi-agent trajectory planner and lockstep simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario file.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's range: metres or `inf`.
        #[arg(long)]
        comm_range: Option<CommRange>,
        /// Tie-breaking seed; defaults to the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Step log, one JSON object per line.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Simulated-time limit in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
    /// Run a benchmark suite and write the aggregate table as CSV.
    Bench {
        #[arg(long)]
        env: EnvKind,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,inf")]
        comm_range: Vec<CommRange>,
        /// First trial seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a benchmark scenario file.
    Gen {
        #[arg(long)]
        env: EnvKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "inf")]
        comm_range: CommRange,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Violation(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", path.display())))
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { scenario, comm_range, seed, log, timeout } => {
            let mut sc = Scenario::load(&scenario).map_err(|e| Failure::Config(e.to_string()))?;
            if let Some(r) = comm_range {
                sc = sc.with_comm_range(r).map_err(|e| Failure::Config(e.to_string()))?;
            }
            let config = SimConfig { timeout_s: timeout, ..SimConfig::default() }.with_seed(seed.unwrap_or(sc.seed));
            let mut sink = log.as_ref().map(create).transpose()?;
            let metrics = run(&sc, &config, sink.as_mut().map(|w| w as &mut dyn Write))?;
            if let Some(mut w) = sink {
                w.flush().map_err(|e| Failure::Config(e.to_string()))?;
            }
            println!("{}", serde_json::to_string(&metrics).expect("metrics serialize"));
            match metrics.outcome {
                Outcome::Success => Ok(()),
                Outcome::Violation(kind) => Err(Failure::Violation(format!(
                    "monitor violation {kind:?} at step {}",
                    metrics.violations.first().map_or(0, |v| v.step)
                ))),
                Outcome::Timeout => Err(Failure::Violation("timed out before every agent arrived".into())),
            }
        }
        Command::Bench { env, trials, comm_range, seed, out } => {
            if env == EnvKind::Custom {
                return Err(Failure::Config("bench needs forest, sparse or dense".into()));
            }
            let report = benchmark(env, &comm_range, trials, seed, &SimConfig::default(), |t| {
                eprintln!(
                    "{} r_c={} seed={} {:?} T_f={:?}",
                    t.env, t.comm_range, t.seed, t.metrics.outcome, t.metrics.flight_time_s
                );
            })?;
            match out {
                Some(path) => write_csv(create(&path)?, &report.rows)?,
                None => write_csv(std::io::stdout().lock(), &report.rows)?,
            }
            if report.trials.iter().any(|t| matches!(t.metrics.outcome, Outcome::Violation(_))) {
                return Err(Failure::Violation("at least one trial reported a monitor violation".into()));
            }
            Ok(())
        }
        Command::Gen { env, seed, comm_range, out } => {
            let sc = generate(env, seed, comm_range).map_err(|e| Failure::Config(e.to_string()))?;
            sc.save(&out).map_err(|e| Failure::Config(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Violation(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(EXIT_VIOLATION)
        }
    }
}
