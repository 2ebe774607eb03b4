mod output;
mod report;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tiered_vqa::cloudsim::{run_sweep, FidelityMetric, Policy, Scenario};
use tiered_vqa::optimizer::SpsaConfig;
use tiered_vqa::tiering::{
    estimate_p_correct, parse_fleet, run_multirestart, run_single_restart, ConvergenceConfig,
    DeviceProfile, TierPlan, DEFAULT_THRESHOLD,
};
use tiered_vqa::vqa::{
    erdos_renyi, MaxCutProblem, PauliHamiltonian, QaoaMaxCut, VqaProblem, VqeTwoLocal,
};

use report::{MultiRestartReport, SingleRestartReport};

/// Noisy VQA experiments across fidelity-tiered devices.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep scheduling policies over a simulated multi-device cloud; writes CSV.
    QueueSim(QueueSimArgs),
    /// Many QAOA restarts through the device tiers, plus single-device baselines; writes JSON.
    Multirestart(MultiRestartArgs),
    /// One QAOA restart through the tiers without pruning, plus single-device baselines; writes JSON.
    SingleRestart(SingleRestartArgs),
    /// Two-local VQE restarts through the tiers, plus single-device baselines; writes JSON.
    Vqe(VqeArgs),
    /// Estimated success probability of QAOA circuits on each fleet device; prints a table.
    PCorrect(PCorrectArgs),
}

#[derive(Args)]
struct QueueSimArgs {
    /// Scenario TOML file.
    scenario: PathBuf,
    /// Comma-separated policies overriding the scenario's list.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<Policy>>,
    /// Comma-separated runtime-session fractions overriding the scenario's list.
    #[arg(long, value_delimiter = ',')]
    runtime_fractions: Option<Vec<f64>>,
    /// Comma-separated seeds overriding the scenario's list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Aggregation reported in the mean_relative_fidelity column.
    #[arg(long, default_value = "sessions")]
    fidelity_metric: FidelityMetric,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProblemArgs {
    /// Nodes of the G(n, 0.5) graph drawn with --seed.
    #[arg(long, default_value_t = 7)]
    nodes: usize,
    /// Graph file (node count, then one `u v` edge per line); overrides --nodes.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    layers: usize,
}

#[derive(Args)]
struct TuningArgs {
    /// Device fleet TOML file.
    #[arg(long)]
    fleet: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Initial SPSA step gain.
    #[arg(long)]
    spsa_a: Option<f64>,
    /// Minimum estimated success probability for a device to be used.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    tol_expectation: Option<f64>,
    /// Entropy tolerance in bits.
    #[arg(long)]
    tol_entropy: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MultiRestartArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct SingleRestartArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct VqeArgs {
    /// Hamiltonian file: one `coefficient pauli_string` per line.
    #[arg(long)]
    hamiltonian: PathBuf,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct PCorrectArgs {
    #[arg(long)]
    fleet: PathBuf,
    #[arg(long, default_value_t = 7)]
    nodes: usize,
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Seed of the random graph.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated QAOA layer counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    layers: Vec<usize>,
    /// Also write the table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::QueueSim(args) => queue_sim(args),
        Command::Multirestart(args) => multirestart(args),
        Command::SingleRestart(args) => single_restart(args),
        Command::Vqe(args) => vqe(args),
        Command::PCorrect(args) => p_correct(args),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_fleet(path: &Path) -> Result<Vec<DeviceProfile>> {
    parse_fleet(&read(path)?).with_context(|| format!("invalid fleet file {}", path.display()))
}

fn load_graph(problem: &ProblemArgs, seed: u64) -> Result<MaxCutProblem> {
    Ok(match &problem.graph {
        Some(path) => MaxCutProblem::parse(&read(path)?)
            .with_context(|| format!("invalid graph file {}", path.display()))?,
        None => erdos_renyi(problem.nodes, 0.5, seed)?,
    })
}

impl TuningArgs {
    fn spsa(&self, default_a: Option<f64>) -> SpsaConfig {
        let mut config = SpsaConfig::new(self.max_iters, self.seed);
        if let Some(a) = self.spsa_a.or(default_a) {
            config.a = a;
        }
        config
    }

    fn convergence(&self) -> Result<ConvergenceConfig> {
        let defaults = ConvergenceConfig::default();
        let conv = ConvergenceConfig {
            tol_expectation: self.tol_expectation.unwrap_or(defaults.tol_expectation),
            tol_entropy: self.tol_entropy.unwrap_or(defaults.tol_entropy),
            ..defaults
        };
        conv.validate()?;
        Ok(conv)
    }
}

fn queue_sim(args: QueueSimArgs) -> Result<()> {
    let mut scenario = Scenario::parse(&read(&args.scenario)?)
        .with_context(|| format!("invalid scenario file {}", args.scenario.display()))?;
    if let Some(p) = args.policies {
        scenario.policies = p;
    }
    if let Some(f) = args.runtime_fractions {
        scenario.runtime_fractions = f;
    }
    if let Some(s) = args.seeds {
        scenario.seeds = s;
    }
    if scenario.seeds.is_empty()
        || scenario.policies.is_empty()
        || scenario.runtime_fractions.is_empty()
    {
        bail!("policies, runtime fractions and seeds must all be non-empty");
    }
    let rows = run_sweep(&scenario)?;
    output::emit(
        args.out.as_deref(),
        &report::queue_csv(&rows, args.fidelity_metric)?,
    )
}

fn multirestart(args: MultiRestartArgs) -> Result<()> {
    let t = &args.tuning;
    if args.restarts == 0 {
        bail!("--restarts must be at least 1");
    }
    let problem = QaoaMaxCut::new(load_graph(&args.problem, t.seed)?, args.problem.layers)?;
    let fleet = load_fleet(&t.fleet)?;
    let plan = TierPlan::new(&problem.circuit_stats(), &fleet, t.threshold)?;
    let (spsa, conv) = (t.spsa(None), t.convergence()?);

    let mut report = MultiRestartReport::new("qaoa-maxcut", problem.ground_truth(), &plan);
    report.push(
        "tiered",
        &run_multirestart(&problem, &plan, args.restarts, &spsa, &conv, t.seed)?,
    )?;
    for device in &fleet {
        let alone = run_multirestart(
            &problem,
            &TierPlan::single(device.clone()),
            args.restarts,
            &spsa,
            &conv,
            t.seed,
        )?;
        report.push(&format!("single:{}", device.id), &alone)?;
    }
    output::emit(t.out.as_deref(), &output::json(&report)?)
}

fn single_restart(args: SingleRestartArgs) -> Result<()> {
    let t = &args.tuning;
    let problem = QaoaMaxCut::new(load_graph(&args.problem, t.seed)?, args.problem.layers)?;
    let fleet = load_fleet(&t.fleet)?;
    let plan = TierPlan::new(&problem.circuit_stats(), &fleet, t.threshold)?;
    let (spsa, conv) = (t.spsa(None), t.convergence()?);

    let mut report = SingleRestartReport::new(problem.ground_truth(), &plan);
    report.push(
        "tiered",
        &run_single_restart(&problem, &plan, &spsa, &conv, t.seed)?,
    )?;
    for device in &fleet {
        let alone = run_single_restart(
            &problem,
            &TierPlan::single(device.clone()),
            &spsa,
            &conv,
            t.seed,
        )?;
        report.push(&format!("single:{}", device.id), &alone)?;
    }
    output::emit(t.out.as_deref(), &output::json(&report)?)
}

/// Default SPSA step gain for VQE, whose energy landscape is flatter than max-cut's.
const VQE_SPSA_A: f64 = 1.0;

fn vqe(args: VqeArgs) -> Result<()> {
    let t = &args.tuning;
    if args.restarts == 0 {
        bail!("--restarts must be at least 1");
    }
    let hamiltonian = PauliHamiltonian::parse(&read(&args.hamiltonian)?)
        .with_context(|| format!("invalid Hamiltonian file {}", args.hamiltonian.display()))?;
    let problem = VqeTwoLocal::new(hamiltonian, args.reps)?;
    let fleet = load_fleet(&t.fleet)?;
    let plan = TierPlan::new(&problem.circuit_stats(), &fleet, t.threshold)?;
    let (spsa, conv) = (t.spsa(Some(VQE_SPSA_A)), t.convergence()?);

    let mut report = MultiRestartReport::new("vqe-two-local", problem.ground_truth(), &plan);
    report.push(
        "tiered",
        &run_multirestart(&problem, &plan, args.restarts, &spsa, &conv, t.seed)?,
    )?;
    for device in &fleet {
        let alone = run_multirestart(
            &problem,
            &TierPlan::single(device.clone()),
            args.restarts,
            &spsa,
            &conv,
            t.seed,
        )?;
        report.push(&format!("single:{}", device.id), &alone)?;
    }
    output::emit(t.out.as_deref(), &output::json(&report)?)
}

fn p_correct(args: PCorrectArgs) -> Result<()> {
    let fleet = load_fleet(&args.fleet)?;
    let graph = load_graph(
        &ProblemArgs {
            nodes: args.nodes,
            graph: args.graph.clone(),
            layers: 1,
        },
        args.seed,
    )?;
    if args.layers.is_empty() || args.layers.contains(&0) {
        bail!("--layers needs one or more positive layer counts");
    }
    let mut rows = Vec::new();
    for &layers in &args.layers {
        let stats = QaoaMaxCut::new(graph.clone(), layers)?.circuit_stats();
        for device in &fleet {
            rows.push((
                device.id.clone(),
                layers,
                stats.clone(),
                estimate_p_correct(&stats, device)?,
            ));
        }
    }
    print!("{}", report::p_correct_table(&rows));
    if let Some(out) = &args.out {
        output::write_atomic(out, &report::p_correct_csv(&rows))?;
    }
    Ok(())
}
