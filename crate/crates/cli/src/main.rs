//! `spinphase`: exact solvers, samplers and identity checks for Ising models.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use spinphase::algebra::identity_suite;
use spinphase::direct::{estimate_observables_weighted, estimate_partition, DirectConfig};
use spinphase::ensemble::Executor;
use spinphase::exact::{brute_force_pairs, transfer_log_z, two_site_closed_form};
use spinphase::langevin::{run_ensemble, LangevinConfig, Relaxation};
use spinphase::model::{parse_model_file, CouplingGraph, Lattice};
use spinphase::observable::{parse_observables, Observable};
use spinphase::oracle::Oracle;
use spinphase::output::{emit_results, render, OutputFormat, ResultRecord};
use spinphase::{Error, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "spinphase", version, about = "Phase-space sampling of Ising models with exact oracles")]
#[command(after_help = "Any flag can also be given in a `key = value` file passed with --config; the command line wins.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the spin-algebra identity checks.
    Verify(VerifyArgs),
    /// Evaluate an exact solver.
    Exact(ExactArgs),
    /// Weighted direct sampling of the link noises.
    Direct(DirectArgs),
    /// Unweighted Langevin relaxation of the link noises.
    Langevin(LangevinArgs),
}

#[derive(Debug, Clone, Copy)]
struct LatticeSpec {
    width: usize,
    height: usize,
}

impl FromStr for LatticeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("invalid lattice dimension `{v}`"));
        Ok(Self { width: parse(w)?, height: parse(h)? })
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Rectangular nearest-neighbour lattice, `WxH`.
    #[arg(long, conflicts_with = "model")]
    lattice: Option<LatticeSpec>,
    /// Periodic boundaries for --lattice.
    #[arg(long)]
    periodic: bool,
    /// Model file (`sites`, `edge`, `field` lines).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Uniform coupling for --lattice.
    #[arg(long = "J", default_value_t = 1.0)]
    coupling: f64,
    /// Uniform field for --lattice.
    #[arg(long = "h", default_value_t = 0.0, allow_negative_numbers = true)]
    field: f64,
}

struct Model {
    graph: CouplingGraph,
    lattice: Option<Lattice>,
}

impl ModelArgs {
    fn load(&self) -> Result<Model, Error> {
        match (&self.lattice, &self.model) {
            (Some(spec), None) => {
                let lattice = Lattice::new(spec.width, spec.height, self.coupling, self.field, self.periodic);
                Ok(Model { graph: lattice.graph()?, lattice: Some(lattice) })
            }
            (None, Some(path)) => Ok(Model { graph: parse_model_file(path)?, lattice: None }),
            _ => Err(Error::Config("give exactly one of --lattice or --model".into())),
        }
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Inverse temperature; repeat for a sweep.
    #[arg(long, default_values_t = [1.0])]
    beta: Vec<f64>,
    /// Observables: `nn`, `i,j` or `m<i>`, separated by `;`.
    #[arg(long, default_value = "nn")]
    pairs: String,
}

impl SweepArgs {
    fn observables(&self, graph: &CouplingGraph) -> Result<Vec<Observable>, Error> {
        let list = parse_observables(&self.pairs).map_err(Error::Config)?;
        if list.is_empty() {
            return Err(Error::Config("no observables requested".into()));
        }
        for o in &list {
            o.validate(graph).map_err(Error::Config)?;
        }
        Ok(list)
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, default_value = "csv")]
    output: OutputFormat,
    /// Output file, written atomically; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParallelArgs {
    /// Worker threads; 1 runs sequentially. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

impl ParallelArgs {
    fn executor(&self) -> Executor {
        self.threads.map(Executor::with_threads).unwrap_or_default()
    }
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Brute,
    Transfer,
    Onsager,
    TwoSite,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brute" => Ok(Method::Brute),
            "transfer" => Ok(Method::Transfer),
            "onsager" => Ok(Method::Onsager),
            "two-site" => Ok(Method::TwoSite),
            other => Err(format!("unknown method `{other}` (expected brute, transfer, onsager or two-site)")),
        }
    }
}

impl Method {
    fn oracle(self) -> Oracle {
        match self {
            Method::Brute => Oracle::Brute,
            Method::Transfer => Oracle::Transfer,
            Method::Onsager => Oracle::Onsager,
            Method::TwoSite => Oracle::TwoSite,
        }
    }
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Exact solver.
    #[arg(long, default_value = "brute")]
    method: Method,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct DirectArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Number of independent samples.
    #[arg(long, default_value_t = 100_000)]
    trajectories: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference values to attach.
    #[arg(long, default_value = "none")]
    oracle: Oracle,
    #[command(flatten)]
    parallel: ParallelArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct LangevinArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Number of independent trajectories.
    #[arg(long, default_value_t = LangevinConfig::default().trajectories)]
    trajectories: usize,
    /// Fictitious-time step.
    #[arg(long, default_value_t = LangevinConfig::default().step)]
    step: f64,
    /// Midpoint fixed-point iterations per step.
    #[arg(long, default_value_t = LangevinConfig::default().iterations)]
    iterations: usize,
    /// Fictitious time discarded before measuring.
    #[arg(long = "burn-in", default_value_t = LangevinConfig::default().burn_in)]
    burn_in: f64,
    /// Fictitious time at which each trajectory stops.
    #[arg(long = "total-tau", default_value_t = LangevinConfig::default().total_tau)]
    total_tau: f64,
    /// Fictitious time between samples.
    #[arg(long = "measure-every", default_value_t = LangevinConfig::default().measure_every)]
    measure_every: f64,
    /// Larger step for the start of the burn-in (needs --relax-tau).
    #[arg(long = "relax-step", requires = "relax_tau")]
    relax_step: Option<f64>,
    /// Length of the leading interval run with --relax-step.
    #[arg(long = "relax-tau", requires = "relax_step")]
    relax_tau: Option<f64>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference values to attach.
    #[arg(long, default_value = "none")]
    oracle: Oracle,
    #[command(flatten)]
    parallel: ParallelArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn write(records: &[ResultRecord], output: &OutputArgs) -> Result<(), Error> {
    match &output.out {
        Some(path) => emit_results(records, output.output, path),
        None => {
            print!("{}", render(records, output.output)?);
            Ok(())
        }
    }
}

fn verify(args: &VerifyArgs) -> Result<(), Error> {
    let checks = identity_suite()?;
    let records: Vec<ResultRecord> = checks
        .iter()
        .map(|c| ResultRecord {
            beta: 0.0,
            observable: c.name.to_string(),
            pair: None,
            estimate: c.deviation,
            stderr: 0.0,
            n_replicas: c.cases as u64,
            oracle_name: Some("tolerance".into()),
            oracle_value: Some(c.tolerance),
        })
        .collect();
    write(&records, &args.output)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("identity checks failed: {}", failed.join(", "))))
    }
}

fn exact(args: &ExactArgs) -> Result<(), Error> {
    let model = args.model.load()?;
    let observables = args.sweep.observables(&model.graph)?;
    let oracle = args.method.oracle();
    let mut records = Vec::new();
    for &beta in &args.sweep.beta {
        let log_z = match args.method {
            Method::Brute => Some(brute_force_pairs(&model.graph, beta, &[])?.log_z),
            Method::Transfer => {
                let lattice = model.lattice.as_ref().ok_or_else(|| Error::Config("--method transfer needs --lattice".into()))?;
                Some(transfer_log_z(lattice, beta)?)
            }
            Method::TwoSite => {
                oracle.values(&model.graph, None, beta, &[])?;
                let edge = model.graph.edges()[0];
                Some(two_site_closed_form(edge.coupling, model.graph.fields()[0], beta).log_z)
            }
            Method::Onsager => None,
        };
        if let Some(value) = log_z {
            records.push(ResultRecord::exact(beta, "log_z", None, value));
        }
        let values = oracle.values(&model.graph, model.lattice.as_ref(), beta, &observables)?;
        for (o, v) in observables.iter().zip(values) {
            let v = v.ok_or_else(|| Error::Config(format!("this method does not provide `{o}` for this model")))?;
            records.push(ResultRecord::exact(beta, o.name(), Some(o.pair_label()), v));
        }
    }
    write(&records, &args.output)
}

fn direct(args: &DirectArgs) -> Result<(), Error> {
    let model = args.model.load()?;
    let observables = args.sweep.observables(&model.graph)?;
    let config = DirectConfig { trajectories: args.trajectories, seed: args.seed, executor: args.parallel.executor() };
    let mut records = Vec::new();
    for &beta in &args.sweep.beta {
        let log_z = estimate_partition(&model.graph, beta, &config)?;
        let mut row = ResultRecord::from_estimate(beta, Observable::NearestNeighbour, log_z);
        row.observable = "log_z".into();
        row.pair = None;
        records.push(row);
        let estimates = estimate_observables_weighted(&model.graph, beta, &config, &observables)?;
        let oracle = args.oracle.values(&model.graph, model.lattice.as_ref(), beta, &observables)?;
        for ((o, e), v) in observables.iter().zip(estimates).zip(oracle) {
            records.push(ResultRecord::from_estimate(beta, *o, e).with_oracle(args.oracle.name(), v));
        }
    }
    write(&records, &args.output)
}

fn langevin(args: &LangevinArgs) -> Result<(), Error> {
    let model = args.model.load()?;
    let observables = args.sweep.observables(&model.graph)?;
    let mut records = Vec::new();
    for &beta in &args.sweep.beta {
        let config = LangevinConfig {
            beta,
            step: args.step,
            iterations: args.iterations,
            trajectories: args.trajectories,
            burn_in: args.burn_in,
            measure_every: args.measure_every,
            total_tau: args.total_tau,
            seed: args.seed,
            executor: args.parallel.executor(),
            relax: args.relax_step.zip(args.relax_tau).map(|(step, tau)| Relaxation { step, tau }),
        };
        let result = run_ensemble(&model.graph, &config, &observables)?;
        let oracle = args.oracle.values(&model.graph, model.lattice.as_ref(), beta, &observables)?;
        for ((o, e), v) in observables.iter().zip(result.estimates).zip(oracle) {
            records.push(ResultRecord::from_estimate(beta, *o, e).with_oracle(args.oracle.name(), v));
        }
    }
    write(&records, &args.output)
}

fn fail(kind: ErrorKind, message: &str) -> ExitCode {
    let report = serde_json::json!({ "error": kind.name(), "exit_code": kind.exit_code(), "message": message });
    eprintln!("{report}");
    ExitCode::from(kind.exit_code() as u8)
}

fn main() -> ExitCode {
    let argv = match config::expand_config(std::env::args().collect()) {
        Ok(argv) => argv,
        Err(e) => return fail(ErrorKind::Parse, &e.message),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(ErrorKind::Parse, e.to_string().trim()),
    };
    let result = match &cli.command {
        Command::Verify(a) => verify(a),
        Command::Exact(a) => exact(a),
        Command::Direct(a) => direct(a),
        Command::Langevin(a) => langevin(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(m)) if m.starts_with("identity checks failed") => fail(ErrorKind::Other, &m),
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
