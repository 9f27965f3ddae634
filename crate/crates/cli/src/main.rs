use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use randimpact::dp::Mode;
use randimpact::mc::McConfig;
use randimpact::{
    compare_random_vs_baseline, evaluate_discrete, evaluate_rate_analytic, extract_schedule,
    fixed_gamma_tilde_params, simulate_continuous, simulate_discrete, solve, to_rate,
    total_mi_cost, Config, DiscreteSchedule, ExperimentPlan, NoiseModel, RateSchedule, Scenario,
    SolveSpec, UtilityFn,
};

/// Optimal liquidation under random multiplicative market impact.
#[derive(Parser)]
#[command(name = "randimpact", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Random,
    Baseline,
    Selloff,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Random => Mode::RandomImpact,
            ModeArg::Baseline => Mode::DeterministicBaseline,
            ModeArg::Selloff => Mode::SellOff,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanArg {
    FixedGamma,
    FixedGammaTilde,
    Converge,
    Compare,
    Tc,
}

impl From<PlanArg> for Scenario {
    fn from(p: PlanArg) -> Self {
        match p {
            PlanArg::FixedGamma => Scenario::FixedGamma,
            PlanArg::FixedGammaTilde => Scenario::FixedGammaTilde,
            PlanArg::Converge => Scenario::ConvergenceSweep,
            PlanArg::Compare => Scenario::Comparison,
            PlanArg::Tc => Scenario::TotalCost,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the discrete value surface and extract the optimal schedule.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "random")]
        mode: ModeArg,
        /// Value surface CSV (j, phi, value, psi_star).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optimal schedule from phi0 as (index, psi) CSV.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Evaluate a schedule exactly and by Monte Carlo.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Block (index, psi) or rate (r_start, r_end, zeta) schedule CSV.
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        /// Time steps of the continuous simulation.
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        antithetic: bool,
        /// Estimates CSV (estimator, value, std_error, paths).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random impact against its mean-field baseline over an alpha1 sweep.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// `alpha1=v1,v2,...`
        #[arg(long, default_value = "alpha1=0,1,3")]
        sweep: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Total market-impact cost table (alpha1, phi0, value, tc).
    Tc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,10")]
        phi0: Vec<f64>,
        /// `alpha1=v1,...`; defaults to the configured alpha1.
        #[arg(long)]
        sweep: Option<String>,
        /// Hold `gamma + alpha1 beta1` at this value instead of fixing gamma.
        #[arg(long)]
        gamma_tilde: Option<f64>,
        /// Jump variance `alpha1 beta1^2` of the fixed-gamma-tilde family.
        #[arg(long, default_value_t = 0.5)]
        jump_var: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment plan and write its artifacts under `--out`.
    Experiment {
        #[arg(long, value_enum)]
        plan: PlanArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the plan's grid size.
        #[arg(long)]
        grid: Option<usize>,
        /// Monte Carlo paths per schedule oracle (0 disables it).
        #[arg(long)]
        mc_paths: Option<usize>,
    },
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<randimpact::Error> for Failure {
    fn from(e: randimpact::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load_config(path: &Path) -> CliResult<Config> {
    let cfg =
        Config::load(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()
        .and_then(|()| cfg.market_params()?.require_positive_drift())
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn parse_sweep(arg: &str) -> CliResult<Vec<f64>> {
    let values = arg
        .strip_prefix("alpha1=")
        .ok_or_else(|| Failure::Run(format!("sweep {arg:?} must look like alpha1=0,1,3")))?;
    values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Run(format!("sweep value {v:?}: {e}")))
        })
        .collect()
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_solve(
    config: &Path,
    mode: ModeArg,
    out: Option<&Path>,
    schedule: Option<&Path>,
) -> CliResult<()> {
    let cfg = load_config(config)?;
    let spec = SolveSpec::from_config(&cfg, mode.into())?;
    let surface = solve(&spec)?;
    let phi0 = cfg.problem.phi0;
    let s0 = spec.market.s0();
    let sched = extract_schedule(&surface, phi0)?;
    println!("mode = {}", spec.mode);
    println!(
        "steps = {}, grid intervals = {}",
        surface.steps(),
        surface.grid_points()
    );
    println!("value = {}", surface.value_at(0.0, phi0, s0));
    println!("normalized value = {}", surface.normalized_value(phi0));
    println!("remaining at horizon = {}", sched.remaining());
    if let Some(p) = out {
        surface.write_csv(create(p)?)?;
    }
    if let Some(p) = schedule {
        sched.write_csv(create(p)?)?;
    }
    Ok(())
}

enum Loaded {
    Blocks(DiscreteSchedule),
    Rates(RateSchedule),
}

fn load_schedule(path: &Path, cfg: &Config) -> CliResult<Loaded> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let header = text.lines().next().unwrap_or_default().trim();
    let phi0 = cfg.problem.phi0;
    match header {
        "index,psi" => Ok(Loaded::Blocks(DiscreteSchedule::read_csv(
            text.as_bytes(),
            cfg.problem.n,
            phi0,
        )?)),
        "r_start,r_end,zeta" => Ok(Loaded::Rates(RateSchedule::read_csv(
            text.as_bytes(),
            phi0,
        )?)),
        other => Err(Failure::Run(format!(
            "{}: unrecognized schedule header {other:?}",
            path.display()
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    config: &Path,
    schedule: &Path,
    paths: usize,
    steps: usize,
    seed: u64,
    antithetic: bool,
    out: Option<&Path>,
) -> CliResult<()> {
    let cfg = load_config(config)?;
    let spec = SolveSpec::from_config(&cfg, Mode::RandomImpact)?;
    let (market, impact, noise) = (spec.market, spec.impact, spec.noise);
    let s0 = market.s0();
    let u = UtilityFn::risk_neutral();
    let mc = McConfig::new(paths, steps, seed).with_antithetic(antithetic);
    let mut rows: Vec<(&str, f64, f64, usize)> = Vec::new();
    let rate = match load_schedule(schedule, &cfg)? {
        Loaded::Blocks(d) => {
            rows.push(("discrete_exact", s0 * evaluate_discrete(&d, &spec)?, 0.0, 0));
            let e = simulate_discrete(&d, &market, &impact, &noise, &mc, &u)?;
            rows.push(("discrete_mc", e.value, e.std_error, e.paths));
            to_rate(&d)
        }
        Loaded::Rates(r) => r,
    };
    rows.push((
        "continuous_analytic",
        s0 * evaluate_rate_analytic(&rate, &market, &impact, &noise)?,
        0.0,
        0,
    ));
    let e = simulate_continuous(&rate, &market, &impact, &noise, &mc, &u)?;
    rows.push(("continuous_mc", e.value, e.std_error, e.paths));

    for (name, v, se, n) in &rows {
        println!("{name:<20} {v:.8} +- {se:.2e} ({n} paths)");
    }
    if let Some(p) = out {
        let mut w = csv::Writer::from_writer(create(p)?);
        w.write_record(["estimator", "value", "std_error", "paths"])
            .map_err(csv_err)?;
        for (name, v, se, n) in &rows {
            w.write_record([
                name.to_string(),
                v.to_string(),
                se.to_string(),
                n.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::Run(e.to_string())
}

fn cmd_compare(config: &Path, sweep: &str, out: Option<&Path>) -> CliResult<()> {
    let cfg = load_config(config)?;
    let alphas = parse_sweep(sweep)?;
    let spec = SolveSpec::from_config(&cfg, Mode::RandomImpact)?;
    let report = compare_random_vs_baseline(&spec, &alphas, &[cfg.problem.phi0])?;
    for p in &report.points {
        println!(
            "alpha1 = {:<6} random = {:.8} baseline = {:.8} gap = {:.3e}",
            p.alpha1, p.value_random, p.value_baseline, p.gap
        );
    }
    println!("min node gap = {:e}", report.min_gap());
    if let Some(p) = out {
        report.write_csv(create(p)?)?;
    }
    Ok(())
}

fn cmd_tc(
    config: &Path,
    phi0s: &[f64],
    sweep: Option<&str>,
    gamma_tilde: Option<f64>,
    jump_var: f64,
    out: Option<&Path>,
) -> CliResult<()> {
    let cfg = load_config(config)?;
    let alphas = match sweep {
        Some(s) => parse_sweep(s)?,
        None => vec![cfg.noise.alpha1],
    };
    let mut rows = Vec::new();
    for &phi0 in phi0s {
        for &a in &alphas {
            let noise = match gamma_tilde {
                Some(gt) => {
                    let (gamma, beta1) = fixed_gamma_tilde_params(gt, jump_var, a)?;
                    NoiseModel::new(gamma, a, beta1.unwrap_or(0.0))?
                }
                None => NoiseModel::new(
                    cfg.noise.gamma,
                    a,
                    if a > 0.0 { cfg.noise.beta1 } else { 0.0 },
                )?,
            };
            let mut c = cfg.clone();
            c.problem.phi0 = phi0;
            let spec = SolveSpec::from_config(&c, Mode::RandomImpact)?.with_noise(noise);
            let value = solve(&spec)?.normalized_value(phi0);
            let tc = total_mi_cost(value, phi0, 1.0)?;
            println!("alpha1 = {a:<6} phi0 = {phi0:<6} value = {value:.8} tc = {tc:.6}");
            rows.push([a, phi0, value, tc]);
        }
    }
    if let Some(p) = out {
        let mut w = csv::Writer::from_writer(create(p)?);
        w.write_record(["alpha1", "phi0", "value", "tc"])
            .map_err(csv_err)?;
        for r in &rows {
            w.write_record(r.map(|x| x.to_string())).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_experiment(
    plan: PlanArg,
    config: &Path,
    out: &Path,
    seed: u64,
    grid: Option<usize>,
    mc_paths: Option<usize>,
) -> CliResult<()> {
    let cfg = load_config(config)?;
    let mut p = ExperimentPlan::new(plan.into(), cfg, out).with_seed(seed);
    if let Some(m) = grid {
        p = p.with_grid(m);
    }
    if let Some(n) = mc_paths {
        p = p.with_mc_paths(n);
    }
    let manifest = randimpact::experiment::run(&p)?;
    println!(
        "{}: {} files in {}",
        manifest.scenario,
        manifest.files.len(),
        p.scenario_dir().display()
    );
    for f in &manifest.files {
        println!("  {}  {}", &f.sha256[..12], f.path);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve {
            config,
            mode,
            out,
            schedule,
        } => cmd_solve(config, *mode, out.as_deref(), schedule.as_deref()),
        Command::Simulate {
            config,
            schedule,
            paths,
            steps,
            seed,
            antithetic,
            out,
        } => cmd_simulate(
            config,
            schedule,
            *paths,
            *steps,
            *seed,
            *antithetic,
            out.as_deref(),
        ),
        Command::Compare { config, sweep, out } => cmd_compare(config, sweep, out.as_deref()),
        Command::Tc {
            config,
            phi0,
            sweep,
            gamma_tilde,
            jump_var,
            out,
        } => cmd_tc(
            config,
            phi0,
            sweep.as_deref(),
            *gamma_tilde,
            *jump_var,
            out.as_deref(),
        ),
        Command::Experiment {
            plan,
            config,
            out,
            seed,
            grid,
            mc_paths,
        } => cmd_experiment(*plan, config, out, *seed, *grid, *mc_paths),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("invalid config: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
