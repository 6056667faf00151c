//! The `ttn` command-line front end.
//!
//! Every command prints canonical JSON on stdout and a one-line summary on
//! stderr. Exit codes: 0 success or affirmative verdict, 1 negative verdict,
//! 2 input error, 3 local/global inconsistency.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::io::{inline_bundle, read_bundle, BundleFile, read_topology, to_canonical_json, write_bundle, write_tensor, TensorFile};
use crate::network::DEFAULT_MEMORY_BUDGET;
use crate::reduction::reduce_to_minimal;
use crate::sampling::{genericity_experiment, sample_network};
use crate::tensor::DEFAULT_TOL;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;

const MIN_MEMORY_BUDGET: usize = 1 << 16;

#[derive(Debug, Parser)]
#[command(name = "ttn", version, about = "Bond-dimension minimality for tree tensor networks")]
pub struct Cli {
    /// Relative singular-value threshold for numerical rank.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    /// Largest intermediate tensor, in scalars, a contraction may build.
    #[arg(long, global = true, default_value_t = DEFAULT_MEMORY_BUDGET)]
    pub memory_budget: usize,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide admissibility of the bonds in a topology file.
    Check { topology: PathBuf },
    /// Sample a network with standard-normal local tensors.
    Sample {
        topology: PathBuf,
        /// Bundle path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Store local tensors in TTN1 side files next to the bundle.
        #[arg(long, requires = "out")]
        binary: bool,
    },
    /// Contract a network bundle to its full tensor.
    Contract {
        network: PathBuf,
        /// Tensor path (`.ttn` for binary); stdout JSON when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Effective multilinear ranks and the minimality certificate.
    Ranks {
        network: PathBuf,
        /// Also compare against the ranks of the contracted tensor.
        #[arg(long)]
        verify_global: bool,
    },
    /// Reduce a network to minimal bonds; prints the trace.
    Reduce {
        network: PathBuf,
        /// Reduced bundle path; written inline into the output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, requires = "out")]
        binary: bool,
    },
    /// Count how many sampled networks are minimal.
    Genericity {
        topology: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn emit(stdout: &mut dyn Write, bytes: &[u8]) -> Result<(), Failure> {
    stdout
        .write_all(bytes)
        .map_err(|e| input_error(format!("writing output: {e}")))
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(input_error(format!("--tol must be positive, got {}", cli.tol)));
    }
    if cli.memory_budget < MIN_MEMORY_BUDGET {
        return Err(input_error(format!(
            "--memory-budget must be at least {MIN_MEMORY_BUDGET} scalars"
        )));
    }
    let (tol, budget) = (cli.tol, cli.memory_budget);

    match &cli.command {
        Command::Check { topology } => {
            let verdict = read_topology(topology)?.is_admissible();
            emit(stdout, &to_canonical_json(&verdict))?;
            let _ = writeln!(
                stderr,
                "{}: {} ({} violations)",
                topology.display(),
                if verdict.admissible { "admissible" } else { "inadmissible" },
                verdict.violations.len()
            );
            Ok(if verdict.admissible { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Sample { topology, out, binary } => {
            let net = sample_network(&read_topology(topology)?, cli.seed);
            match out {
                Some(path) => write_bundle(path, &net, *binary)?,
                None => emit(stdout, &to_canonical_json(&inline_bundle(&net)))?,
            }
            let _ = writeln!(stderr, "sampled {} local tensors with seed {}", net.tensors().len(), cli.seed);
            Ok(EXIT_OK)
        }
        Command::Contract { network, out } => {
            let t = read_bundle(network)?.contract(budget)?;
            match out {
                Some(path) => write_tensor(path, &t)?,
                None => emit(stdout, &to_canonical_json(&TensorFile::from(&t)))?,
            }
            let _ = writeln!(stderr, "contracted to dims {:?}", t.dims());
            Ok(EXIT_OK)
        }
        Command::Ranks { network, verify_global } => ranks(network, *verify_global, tol, budget, stdout, stderr),
        Command::Reduce { network, out, binary } => {
            let net = read_bundle(network)?;
            let (reduced, trace) = reduce_to_minimal(&net, tol, budget)?;
            match out {
                Some(path) => {
                    write_bundle(path, &reduced, *binary)?;
                    emit(stdout, &to_canonical_json(&trace))?;
                }
                None => {
                    #[derive(serde::Serialize)]
                    struct Both<'a> {
                        trace: &'a crate::reduction::ReductionTrace,
                        network: BundleFile,
                    }
                    let network = inline_bundle(&reduced);
                    emit(stdout, &to_canonical_json(&Both { trace: &trace, network }))?;
                }
            }
            let _ = writeln!(
                stderr,
                "{} truncations, bonds {:?} -> {:?}",
                trace.truncations(),
                trace.before,
                trace.after
            );
            Ok(EXIT_OK)
        }
        Command::Genericity { topology, trials } => {
            let result = genericity_experiment(&read_topology(topology)?, *trials, cli.seed, tol);
            emit(stdout, &to_canonical_json(&result))?;
            let _ = writeln!(stderr, "{}/{} sampled networks minimal", result.minimal_count, result.trials);
            Ok(EXIT_OK)
        }
    }
}

fn ranks(
    network: &Path,
    verify_global: bool,
    tol: f64,
    budget: usize,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let net = read_bundle(network)?;
    let mut cert = net.check_minimality(tol);
    let mut code = if cert.minimal { EXIT_OK } else { EXIT_NEGATIVE };
    if verify_global {
        match net.cross_validate(tol, budget) {
            Ok(report) => cert.report = report,
            Err(Error::InconsistencyDetected { edges, report }) => {
                cert.report = *report;
                let _ = writeln!(stderr, "inconsistent edges: {edges:?}");
                code = EXIT_INCONSISTENT;
            }
            Err(e) => return Err(e.into()),
        }
    }
    emit(stdout, &to_canonical_json(&cert))?;
    let _ = writeln!(
        stderr,
        "{}: {} ({} shortfalls)",
        network.display(),
        if cert.minimal { "minimal" } else { "not minimal" },
        cert.failures.len()
    );
    Ok(code)
}
