//! End-to-end experiment runner.
//!
//! A plan names one scenario, takes market, impact and horizon from a
//! [`Config`] and writes every artifact under `<out>/<scenario>/`:
//!
//! | scenario            | files                                                          |
//! |---------------------|----------------------------------------------------------------|
//! | `fixed-gamma`       | `strategy_phi<P>_alpha<A>.csv`, `values.csv`, `oracles.csv`    |
//! | `fixed-gamma-tilde` | same as `fixed-gamma`                                          |
//! | `converge`          | `convergence.csv`                                              |
//! | `compare`           | `compare.csv`                                                  |
//! | `tc`                | `tc.csv`                                                       |
//!
//! plus `manifest.json` on success or `error.json` on failure. Output is a
//! pure function of the config and plan: no timestamps are recorded and
//! the Monte Carlo oracle uses per-path streams of the plan seed.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{
    compare_noise_family, fixed_gamma_tilde_noise, total_mi_cost, ComparisonReport,
};
use crate::dp::{convergence_sweep, evaluate_discrete, extract_schedule, solve, Mode, SolveSpec};
use crate::error::{Error, Result};
use crate::evaluator::evaluate_rate_analytic;
use crate::mc::{simulate_discrete, McConfig};
use crate::model::{Config, NoiseModel, UtilityFn};
use crate::strategy::{to_rate, DiscreteSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// `gamma` and `beta1` held fixed while `alpha1` varies.
    FixedGamma,
    /// Mean `gamma + alpha1 beta1` and jump variance `alpha1 beta1^2` fixed.
    FixedGammaTilde,
    ConvergenceSweep,
    Comparison,
    TotalCost,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::FixedGamma => "fixed-gamma",
            Scenario::FixedGammaTilde => "fixed-gamma-tilde",
            Scenario::ConvergenceSweep => "converge",
            Scenario::Comparison => "compare",
            Scenario::TotalCost => "tc",
        }
    }
}

impl Serialize for Scenario {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-gamma" => Ok(Scenario::FixedGamma),
            "fixed-gamma-tilde" => Ok(Scenario::FixedGammaTilde),
            "converge" => Ok(Scenario::ConvergenceSweep),
            "compare" => Ok(Scenario::Comparison),
            "tc" => Ok(Scenario::TotalCost),
            other => Err(Error::InvalidParameter(format!(
                "unknown plan {other:?} (expected fixed-gamma|fixed-gamma-tilde|converge|compare|tc)"
            ))),
        }
    }
}

/// Noise family swept over `alpha1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum NoiseFamily {
    FixedGamma { gamma: f64, beta1: f64 },
    FixedGammaTilde { gamma_tilde: f64, jump_var: f64 },
}

impl NoiseFamily {
    pub fn member(&self, alpha1: f64) -> Result<NoiseModel> {
        match *self {
            NoiseFamily::FixedGamma { gamma, beta1 } => {
                NoiseModel::new(gamma, alpha1, if alpha1 > 0.0 { beta1 } else { 0.0 })
            }
            NoiseFamily::FixedGammaTilde {
                gamma_tilde,
                jump_var,
            } => fixed_gamma_tilde_noise(gamma_tilde, jump_var, alpha1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentPlan {
    pub scenario: Scenario,
    #[serde(skip)]
    pub config: Config,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub family: NoiseFamily,
    pub phi0s: Vec<f64>,
    pub alpha1s: Vec<f64>,
    /// Grid intervals `M` for every solve of the plan.
    pub grid_points: usize,
    /// Trading frequencies of the convergence sweep.
    pub n_list: Vec<u32>,
    pub seed: u64,
    /// Paths of the Monte Carlo oracle; 0 disables it.
    pub mc_paths: usize,
}

impl ExperimentPlan {
    /// Plan with the default parameter lists of `scenario`.
    ///
    /// Strategy scenarios solve on `M = 10_000` intervals so that the rate
    /// quantum `n * phi0 / M` stays well below the optimal rates.
    pub fn new(scenario: Scenario, config: Config, out_dir: impl Into<PathBuf>) -> Self {
        let fixed_gamma = NoiseFamily::FixedGamma {
            gamma: 1.0,
            beta1: 2.0,
        };
        let fixed_tilde = NoiseFamily::FixedGammaTilde {
            gamma_tilde: 1.0,
            jump_var: 0.5,
        };
        let phi0 = config.problem.phi0;
        let (family, phi0s, alpha1s, grid_points) = match scenario {
            Scenario::FixedGamma => (
                fixed_gamma,
                vec![1.0, 10.0, 100.0],
                vec![0.0, 1.0, 3.0],
                10_000,
            ),
            Scenario::FixedGammaTilde => (
                fixed_tilde,
                vec![1.0, 10.0, 100.0],
                vec![0.0, 0.5, 1.0],
                10_000,
            ),
            Scenario::TotalCost => (
                fixed_tilde,
                vec![1.0, 10.0],
                vec![0.0, 0.25, 0.5, 0.75, 1.0],
                10_000,
            ),
            Scenario::Comparison => (
                NoiseFamily::FixedGamma {
                    gamma: config.noise.gamma,
                    beta1: config.noise.beta1,
                },
                vec![phi0],
                vec![0.0, 1.0, 3.0],
                config.grid_points(),
            ),
            Scenario::ConvergenceSweep => (
                NoiseFamily::FixedGamma {
                    gamma: config.noise.gamma,
                    beta1: config.noise.beta1,
                },
                vec![phi0],
                vec![config.noise.alpha1],
                config.grid_points(),
            ),
        };
        Self {
            scenario,
            config,
            out_dir: out_dir.into(),
            family,
            phi0s,
            alpha1s,
            grid_points,
            n_list: vec![50, 100, 200, 400, 800],
            seed: 0,
            mc_paths: 10_000,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_grid(mut self, grid_points: usize) -> Self {
        self.grid_points = grid_points;
        self
    }

    pub fn with_phi0s(mut self, phi0s: Vec<f64>) -> Self {
        self.phi0s = phi0s;
        self
    }

    pub fn with_alpha1s(mut self, alpha1s: Vec<f64>) -> Self {
        self.alpha1s = alpha1s;
        self
    }

    pub fn with_mc_paths(mut self, paths: usize) -> Self {
        self.mc_paths = paths;
        self
    }

    pub fn scenario_dir(&self) -> PathBuf {
        self.out_dir.join(self.scenario.as_str())
    }

    fn spec(&self, noise: NoiseModel, phi0: f64) -> Result<SolveSpec> {
        SolveSpec::new(
            self.config.market_params()?,
            self.config.impact_model()?,
            noise,
            self.config.problem.n,
            self.config.problem.t,
            phi0,
            self.grid_points,
            Mode::RandomImpact,
        )
    }
}

/// Outcome of condition `[D]` (`gamma >= alpha1 beta1 / 8`) for one member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionD {
    pub alpha1: f64,
    pub gamma: f64,
    pub beta1: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub scenario: Scenario,
    pub config_sha256: String,
    pub seed: u64,
    pub crate_version: &'static str,
    pub plan: ExperimentPlan,
    pub condition_d: Vec<ConditionD>,
    pub files: Vec<FileDigest>,
}

#[derive(Debug, Serialize)]
struct ErrorManifest<'a> {
    scenario: Scenario,
    config_sha256: &'a str,
    seed: u64,
    crate_version: &'static str,
    error: String,
}

/// One row of `values.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueRow {
    pub phi0: f64,
    pub alpha1: f64,
    pub gamma: f64,
    pub beta1: f64,
    pub value: f64,
    pub phi_t: f64,
    pub tc: f64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(config: &Config) -> String {
    sha256_hex(config.to_toml_string().as_bytes())
}

/// Float label for file names: `1`, `0.5`, `100`.
fn label(x: f64) -> String {
    format!("{x}")
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<FileDigest>,
}

impl Artifacts {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.files.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn write_csv<F>(&mut self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
    {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            fill(&mut w)?;
            w.flush()?;
        }
        self.write(name, &buf)
    }
}

/// Strategy curve at rate-form resolution `1/n`: rows `r = l/n` with the
/// rate `zeta = n psi_l` on `(l/n, (l+1)/n]` and the inventory held at `r`.
pub fn write_strategy_curve<W: Write>(sched: &DiscreteSchedule, writer: W) -> Result<()> {
    let n = f64::from(sched.n());
    let inventory = sched.inventory_path();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["r", "zeta", "phi"])?;
    for (l, phi) in inventory.iter().enumerate() {
        let zeta = sched.blocks().get(l).map_or(0.0, |psi| psi * n);
        w.write_record([
            (l as f64 / n).to_string(),
            zeta.to_string(),
            phi.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `plan`, returning its manifest. On failure `error.json` is written
/// to the scenario directory and the error is returned.
pub fn run(plan: &ExperimentPlan) -> Result<Manifest> {
    let hash = config_hash(&plan.config);
    let dir = plan.scenario_dir();
    match run_inner(plan, &hash, &dir) {
        Ok(m) => Ok(m),
        Err(e) => {
            let record = ErrorManifest {
                scenario: plan.scenario,
                config_sha256: &hash,
                seed: plan.seed,
                crate_version: env!("CARGO_PKG_VERSION"),
                error: e.to_string(),
            };
            if fs::create_dir_all(&dir).is_ok() {
                if let Ok(text) = serde_json::to_string_pretty(&record) {
                    let _ = fs::write(dir.join("error.json"), text + "\n");
                }
            }
            Err(e)
        }
    }
}

fn run_inner(plan: &ExperimentPlan, hash: &str, dir: &Path) -> Result<Manifest> {
    plan.config.validate()?;
    let stale = dir.join("error.json");
    if stale.exists() {
        fs::remove_file(stale)?;
    }
    let mut art = Artifacts::new(dir.to_path_buf())?;
    let condition_d = plan
        .alpha1s
        .iter()
        .map(|&a| {
            let noise = plan.family.member(a)?;
            let passed = noise.gamma() >= noise.alpha1() * noise.beta1() / 8.0;
            if !passed {
                warn!("alpha1 = {a}: condition [D] fails, deterministic reduction not guaranteed");
            }
            Ok(ConditionD {
                alpha1: a,
                gamma: noise.gamma(),
                beta1: noise.beta1(),
                passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    info!("running {} into {}", plan.scenario, dir.display());
    match plan.scenario {
        Scenario::FixedGamma | Scenario::FixedGammaTilde => run_strategies(plan, &mut art)?,
        Scenario::TotalCost => run_total_cost(plan, &mut art)?,
        Scenario::Comparison => run_comparison(plan, &mut art)?,
        Scenario::ConvergenceSweep => run_convergence(plan, &mut art)?,
    }
    let manifest = Manifest {
        scenario: plan.scenario,
        config_sha256: hash.to_string(),
        seed: plan.seed,
        crate_version: env!("CARGO_PKG_VERSION"),
        plan: plan.clone(),
        condition_d,
        files: art.files,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(manifest)
}

/// Solves one member and extracts its optimal schedule from `phi0`.
pub fn solve_member(
    plan: &ExperimentPlan,
    phi0: f64,
    alpha1: f64,
) -> Result<(SolveSpec, f64, DiscreteSchedule)> {
    let spec = plan.spec(plan.family.member(alpha1)?, phi0)?;
    let surface = solve(&spec)?;
    let sched = extract_schedule(&surface, phi0)?;
    Ok((spec, surface.normalized_value(phi0), sched))
}

fn run_strategies(plan: &ExperimentPlan, art: &mut Artifacts) -> Result<()> {
    let mut values = Vec::new();
    let mut oracles = Vec::new();
    for &phi0 in &plan.phi0s {
        for &a in &plan.alpha1s {
            let (spec, value, sched) = solve_member(plan, phi0, a)?;
            let mut buf = Vec::new();
            write_strategy_curve(&sched, &mut buf)?;
            art.write(
                &format!("strategy_phi{}_alpha{}.csv", label(phi0), label(a)),
                &buf,
            )?;
            values.push(ValueRow {
                phi0,
                alpha1: a,
                gamma: spec.noise.gamma(),
                beta1: spec.noise.beta1(),
                value,
                phi_t: sched.remaining(),
                tc: total_mi_cost(value, phi0, 1.0)?,
            });
            oracles.push(oracle_row(plan, &spec, value, &sched)?);
        }
    }
    art.write_csv("values.csv", |w| {
        w.write_record(["phi0", "alpha1", "gamma", "beta1", "value", "phi_T", "tc"])?;
        for r in &values {
            w.write_record(
                [r.phi0, r.alpha1, r.gamma, r.beta1, r.value, r.phi_t, r.tc].map(|x| x.to_string()),
            )?;
        }
        Ok(())
    })?;
    art.write_csv("oracles.csv", |w| {
        w.write_record([
            "phi0",
            "alpha1",
            "dp_value",
            "discrete_eval",
            "continuous_eval",
            "mc_value",
            "mc_std_error",
            "mc_paths",
        ])?;
        for r in &oracles {
            w.write_record(r)?;
        }
        Ok(())
    })
}

fn oracle_row(
    plan: &ExperimentPlan,
    spec: &SolveSpec,
    value: f64,
    sched: &DiscreteSchedule,
) -> Result<Vec<String>> {
    let discrete = evaluate_discrete(sched, spec)?;
    let continuous =
        evaluate_rate_analytic(&to_rate(sched), &spec.market, &spec.impact, &spec.noise)?;
    let mut row = vec![
        spec.phi_max.to_string(),
        spec.noise.alpha1().to_string(),
        value.to_string(),
        discrete.to_string(),
        continuous.to_string(),
    ];
    if plan.mc_paths > 0 {
        let mc = McConfig::new(plan.mc_paths, 0, plan.seed);
        let est = simulate_discrete(
            sched,
            &spec.market,
            &spec.impact,
            &spec.noise,
            &mc,
            &UtilityFn::risk_neutral(),
        )?;
        let s0 = spec.market.s0();
        row.extend([
            (est.value / s0).to_string(),
            (est.std_error / s0).to_string(),
            est.paths.to_string(),
        ]);
    } else {
        row.extend([String::new(), String::new(), "0".to_string()]);
    }
    Ok(row)
}

/// Rows `(alpha1, phi0, value, tc)` of the total-cost table.
pub fn total_cost_table(plan: &ExperimentPlan) -> Result<Vec<[f64; 4]>> {
    let mut rows = Vec::new();
    for &phi0 in &plan.phi0s {
        for &a in &plan.alpha1s {
            let spec = plan.spec(plan.family.member(a)?, phi0)?;
            let value = solve(&spec)?.normalized_value(phi0);
            rows.push([a, phi0, value, total_mi_cost(value, phi0, 1.0)?]);
        }
    }
    Ok(rows)
}

fn run_total_cost(plan: &ExperimentPlan, art: &mut Artifacts) -> Result<()> {
    let rows = total_cost_table(plan)?;
    art.write_csv("tc.csv", |w| {
        w.write_record(["alpha1", "phi0", "value", "tc"])?;
        for r in &rows {
            w.write_record(r.map(|x| x.to_string()))?;
        }
        Ok(())
    })
}

pub fn comparison(plan: &ExperimentPlan) -> Result<ComparisonReport> {
    let phi_max = plan.phi0s.iter().cloned().fold(0.0, f64::max);
    let noises = plan
        .alpha1s
        .iter()
        .map(|&a| plan.family.member(a))
        .collect::<Result<Vec<_>>>()?;
    let base = plan.spec(
        noises
            .first()
            .copied()
            .unwrap_or(plan.config.noise_model()?),
        phi_max,
    )?;
    compare_noise_family(&base, &noises, &plan.phi0s)
}

fn run_comparison(plan: &ExperimentPlan, art: &mut Artifacts) -> Result<()> {
    let report = comparison(plan)?;
    if report.min_gap() < 0.0 {
        warn!("negative node gap {:e}", report.min_gap());
    }
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    art.write("compare.csv", &buf)
}

fn run_convergence(plan: &ExperimentPlan, art: &mut Artifacts) -> Result<()> {
    let noise = plan
        .family
        .member(plan.alpha1s.first().copied().unwrap_or(0.0))?;
    let phi0 = plan
        .phi0s
        .first()
        .copied()
        .unwrap_or(plan.config.problem.phi0);
    let rows = convergence_sweep(&plan.spec(noise, phi0)?, &plan.n_list)?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    art.write_csv("convergence.csv", |w| {
        w.write_record(["n", "steps", "value", "gap_prev", "gap_closed_form"])?;
        for r in &rows {
            w.write_record([
                r.n.to_string(),
                r.steps.to_string(),
                r.value.to_string(),
                opt(r.gap_prev),
                opt(r.gap_closed_form),
            ])?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
[market]
mu = 0.05
sigma = 0.0
s0 = 1.0

[impact]
kind = "quadratic"
alpha0 = 0.01

[noise]
gamma = 1.0
alpha1 = 1.0
beta1 = 2.0

[problem]
t = 1.0
n = 20
phi0 = 1.0
"#;

    fn small(scenario: Scenario, dir: &Path) -> ExperimentPlan {
        ExperimentPlan::new(scenario, Config::from_toml_str(CONFIG).unwrap(), dir)
            .with_grid(100)
            .with_phi0s(vec![1.0, 2.0])
            .with_mc_paths(200)
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in [
            Scenario::FixedGamma,
            Scenario::FixedGammaTilde,
            Scenario::ConvergenceSweep,
            Scenario::Comparison,
            Scenario::TotalCost,
        ] {
            assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
        }
        assert!("figures".parse::<Scenario>().is_err());
    }

    #[test]
    fn defaults_follow_the_families() {
        let cfg = Config::from_toml_str(CONFIG).unwrap();
        let p = ExperimentPlan::new(Scenario::FixedGamma, cfg.clone(), "x");
        assert_eq!(p.alpha1s, vec![0.0, 1.0, 3.0]);
        assert_eq!(p.phi0s, vec![1.0, 10.0, 100.0]);
        let t = ExperimentPlan::new(Scenario::FixedGammaTilde, cfg, "x");
        let n = t.family.member(1.0).unwrap();
        assert!((n.gamma_tilde() - 1.0).abs() < 1e-12);
        assert!((n.alpha1() * n.beta1() * n.beta1() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn strategy_curve_rows() {
        let d = DiscreteSchedule::new(4, 1.0, vec![0.25, 0.5, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_strategy_curve(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "r,zeta,phi\n0,1,1\n0.25,2,0.75\n0.5,0,0.25\n0.75,0,0.25\n"
        );
    }

    #[test]
    fn fixed_gamma_run_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let plan = small(Scenario::FixedGamma, dir.path());
        let m1 = run(&plan).unwrap();
        assert_eq!(m1.files.len(), 6 + 2);
        assert!(m1.condition_d.iter().all(|c| c.passed));
        let m2 = run(&plan).unwrap();
        assert_eq!(m1, m2);
        let manifest = fs::read_to_string(plan.scenario_dir().join("manifest.json")).unwrap();
        assert!(manifest.contains(&config_hash(&plan.config)));
    }

    #[test]
    fn failure_writes_error_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let plan = small(Scenario::FixedGammaTilde, dir.path()).with_alpha1s(vec![0.0, 5.0]);
        assert!(run(&plan).is_err());
        let err = fs::read_to_string(plan.scenario_dir().join("error.json")).unwrap();
        assert!(err.contains("\"scenario\": \"fixed-gamma-tilde\""));
    }

    #[test]
    fn tables_have_expected_shape() {
        let dir = tempfile::tempdir().unwrap();
        run(&small(Scenario::TotalCost, dir.path()).with_alpha1s(vec![0.0, 0.5])).unwrap();
        let tc = fs::read_to_string(dir.path().join("tc/tc.csv")).unwrap();
        assert_eq!(tc.lines().next(), Some("alpha1,phi0,value,tc"));
        assert_eq!(tc.lines().count(), 1 + 4);

        let mut conv = small(Scenario::ConvergenceSweep, dir.path());
        conv.n_list = vec![10, 20];
        run(&conv).unwrap();
        let c = fs::read_to_string(dir.path().join("converge/convergence.csv")).unwrap();
        assert_eq!(c.lines().count(), 3);

        let m = run(&small(Scenario::Comparison, dir.path())).unwrap();
        assert_eq!(m.files[0].path, "compare.csv");
    }
}
