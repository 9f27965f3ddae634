//! Backward induction for the risk-neutral discrete-time value function.
//!
//! With `j` steps remaining and inventory `phi` on a uniform grid, the
//! normalized value satisfies
//!
//! ```text
//! G_0(phi) = 0
//! G_j(phi) = max_{psi <= phi, psi on grid} D(psi) * (psi + exp(-mu_tilde / n) * G_{j-1}(phi - psi))
//! ```
//!
//! where `D(psi)` is the expected per-step impact factor: the exact Gamma
//! Laplace factor for random impact, or `exp(-gamma_tilde g_n(psi))` for the
//! deterministic baseline. The sell-off variant replaces `G_0` by `-inf` away
//! from `phi = 0`, which forces full liquidation. Values are per unit price
//! with zero starting cash; `V = w + s * G`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::loglinear_value;
use crate::error::{Error, Result};
use crate::model::{
    log_step_decay_factor, Config, ImpactKind, ImpactModel, MarketParams, NoiseModel,
};
use crate::strategy::DiscreteSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Impact multiplier `gamma + Gamma(alpha1/n, n beta1)` per step.
    #[serde(rename = "random")]
    RandomImpact,
    /// Impact multiplier replaced by its mean `gamma_tilde`.
    #[serde(rename = "baseline")]
    DeterministicBaseline,
    /// Random impact with the whole inventory sold by the horizon.
    #[serde(rename = "selloff")]
    SellOff,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::RandomImpact => "random",
            Mode::DeterministicBaseline => "baseline",
            Mode::SellOff => "selloff",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Mode::RandomImpact),
            "baseline" => Ok(Mode::DeterministicBaseline),
            "selloff" => Ok(Mode::SellOff),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode {other:?} (expected random|baseline|selloff)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSpec {
    pub market: MarketParams,
    pub impact: ImpactModel,
    pub noise: NoiseModel,
    /// Trading steps per unit time.
    pub n: u32,
    /// Horizon in `[0, 1]`; the number of steps is `floor(n t)`.
    pub t: f64,
    /// Upper end of the inventory grid.
    pub phi_max: f64,
    /// Number of grid intervals `M`; nodes are `i * phi_max / M`, `i = 0..=M`.
    pub grid_points: usize,
    pub mode: Mode,
}

impl SolveSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        market: MarketParams,
        impact: ImpactModel,
        noise: NoiseModel,
        n: u32,
        t: f64,
        phi_max: f64,
        grid_points: usize,
        mode: Mode,
    ) -> Result<Self> {
        let spec = Self {
            market,
            impact,
            noise,
            n,
            t,
            phi_max,
            grid_points,
            mode,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_config(cfg: &Config, mode: Mode) -> Result<Self> {
        Self::new(
            cfg.market_params()?,
            cfg.impact_model()?,
            cfg.noise_model()?,
            cfg.problem.n,
            cfg.problem.t,
            cfg.problem.phi0,
            cfg.grid_points(),
            mode,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.market.require_positive_drift()?;
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::domain("t", self.t, "horizon must lie in [0, 1]"));
        }
        if !(self.phi_max > 0.0 && self.phi_max.is_finite()) {
            return Err(Error::domain(
                "phi_max",
                self.phi_max,
                "inventory grid must end above 0",
            ));
        }
        if self.grid_points > u32::MAX as usize {
            return Err(Error::InvalidParameter("grid too large".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (f64::from(self.n) * self.t + 1e-9).floor() as usize
    }

    pub fn grid_step(&self) -> f64 {
        if self.grid_points == 0 {
            0.0
        } else {
            self.phi_max / self.grid_points as f64
        }
    }

    /// Noise actually felt by the solver: the mean field in baseline mode.
    pub fn effective_noise(&self) -> NoiseModel {
        match self.mode {
            Mode::DeterministicBaseline => self.noise.mean_field(),
            Mode::RandomImpact | Mode::SellOff => self.noise,
        }
    }

    /// `ln D(psi)` for this mode.
    pub fn log_decay(&self, psi: f64) -> Result<f64> {
        log_step_decay_factor(&self.impact, &self.effective_noise(), self.n, psi)
    }

    /// One-step price discount `exp(-mu_tilde / n)`.
    pub fn discount(&self) -> f64 {
        (-self.market.mu_tilde() / f64::from(self.n)).exp()
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_grid(mut self, phi_max: f64, grid_points: usize) -> Self {
        self.phi_max = phi_max;
        self.grid_points = grid_points;
        self
    }
}

/// Normalized value `G_j(phi_i)` and optimal block index for every
/// `(steps remaining j, grid node i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    n: u32,
    steps: usize,
    grid_points: usize,
    grid_step: f64,
    mode: Mode,
    values: Vec<f64>,
    policy: Vec<u32>,
}

impl ValueSurface {
    fn width(&self) -> usize {
        self.grid_points + 1
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn phi(&self, i: usize) -> f64 {
        i as f64 * self.grid_step
    }

    /// Largest grid node at or below `phi`.
    pub fn node_at(&self, phi: f64) -> usize {
        if self.grid_step == 0.0 || phi <= 0.0 {
            return 0;
        }
        ((phi / self.grid_step + 1e-9).floor() as usize).min(self.grid_points)
    }

    pub fn value(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.width() + i]
    }

    /// Row `G_j` over all grid nodes.
    pub fn layer(&self, j: usize) -> &[f64] {
        let w = self.width();
        &self.values[j * w..(j + 1) * w]
    }

    /// Optimal block in grid units at `(j, i)`; 0 on the `j = 0` row.
    pub fn policy_index(&self, j: usize, i: usize) -> usize {
        self.policy[j * self.width() + i] as usize
    }

    pub fn block(&self, j: usize, i: usize) -> f64 {
        self.policy_index(j, i) as f64 * self.grid_step
    }

    /// `G_k(phi)` with all steps remaining, `phi` snapped down to the grid.
    pub fn normalized_value(&self, phi: f64) -> f64 {
        self.value(self.steps, self.node_at(phi))
    }

    /// Risk-neutral value `w + s G_k(phi)`.
    pub fn value_at(&self, w: f64, phi: f64, s: f64) -> f64 {
        w + s * self.normalized_value(phi)
    }

    /// CSV with columns `j,phi,value,psi_star`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["j", "phi", "value", "psi_star"])?;
        for j in 0..=self.steps {
            for i in 0..=self.grid_points {
                w.write_record([
                    j.to_string(),
                    self.phi(i).to_string(),
                    self.value(j, i).to_string(),
                    self.block(j, i).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Slack on the `D(psi) phi` upper bound used to stop the block scan.
const BOUND_SLACK: f64 = 1.0 + 1e-12;

fn best_block(i: usize, dx: f64, decay: &[f64], disc: f64, prev: &[f64]) -> (f64, usize) {
    const LANES: usize = 8;
    let bound = i as f64 * dx * BOUND_SLACK;
    let decay = &decay[..=i];
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    let mut start = 0;
    // Candidates are evaluated a chunk at a time; the stop test and the
    // strict `>` update are then applied in order, so the result matches a
    // plain sequential scan.
    while start <= i {
        let len = LANES.min(i + 1 - start);
        let mut v = [0.0; LANES];
        for (l, slot) in v.iter_mut().enumerate().take(len) {
            let p = start + l;
            *slot = decay[p] * (p as f64 * dx + disc * prev[i - p]);
        }
        for l in 0..len {
            // Every candidate is at most D(psi) * phi since G_{j-1}(x) <= x,
            // and D is decreasing: nothing beyond this point can beat `best`.
            if decay[start + l] * bound < best {
                return (best, arg);
            }
            if v[l] > best {
                best = v[l];
                arg = start + l;
            }
        }
        start += len;
    }
    (best, arg)
}

fn backward(spec: &SolveSpec, sell_off: bool) -> Result<ValueSurface> {
    spec.validate()?;
    let m = spec.grid_points;
    let k = spec.steps();
    let dx = spec.grid_step();
    if m < k {
        warn!("grid has {m} intervals for {k} steps; block sizes will be coarse");
    }
    if spec.impact.kind() == ImpactKind::Quadratic
        && spec.mode != Mode::DeterministicBaseline
        && spec.noise.gamma() < spec.noise.jump_mean() / 8.0
    {
        warn!(
            "condition [D] violated: gamma = {} < alpha1 beta1 / 8 = {}",
            spec.noise.gamma(),
            spec.noise.jump_mean() / 8.0
        );
    }

    let decay = (0..=m)
        .map(|p| spec.log_decay(p as f64 * dx).map(f64::exp))
        .collect::<Result<Vec<f64>>>()?;
    let disc = spec.discount();
    let width = m + 1;
    let mut values = vec![0.0; (k + 1) * width];
    let mut policy = vec![0u32; (k + 1) * width];
    if sell_off {
        values[1..width].fill(f64::NEG_INFINITY);
    }

    for j in 1..=k {
        let (done, rest) = values.split_at_mut(j * width);
        let prev = &done[(j - 1) * width..];
        let cur = &mut rest[..width];
        let pol = &mut policy[j * width..(j + 1) * width];
        if sell_off && j == 1 {
            for (i, (v, a)) in cur.iter_mut().zip(pol.iter_mut()).enumerate() {
                *v = decay[i] * (i as f64 * dx);
                *a = i as u32;
            }
            continue;
        }
        cur.par_iter_mut()
            .zip(pol.par_iter_mut())
            .enumerate()
            .for_each(|(i, (v, a))| {
                let (best, arg) = best_block(i, dx, &decay, disc, prev);
                *v = best;
                *a = arg as u32;
            });
    }

    Ok(ValueSurface {
        n: spec.n,
        steps: k,
        grid_points: m,
        grid_step: dx,
        mode: spec.mode,
        values,
        policy,
    })
}

/// Solves the value surface for `spec.mode`; `SellOff` delegates to
/// [`solve_selloff`].
pub fn solve(spec: &SolveSpec) -> Result<ValueSurface> {
    match spec.mode {
        Mode::SellOff => solve_selloff(spec),
        Mode::RandomImpact | Mode::DeterministicBaseline => backward(spec, false),
    }
}

/// Random-impact value with the sell-off constraint `sum psi = phi`. The
/// returned surface carries `-inf` on the `j = 0` row away from `phi = 0`.
pub fn solve_selloff(spec: &SolveSpec) -> Result<ValueSurface> {
    let spec = spec.with_mode(Mode::SellOff);
    backward(&spec, true)
}

/// Forward pass over the stored policy from `phi0` (snapped down to the grid).
pub fn extract_schedule(surface: &ValueSurface, phi0: f64) -> Result<DiscreteSchedule> {
    let mut i = surface.node_at(phi0);
    let snapped = surface.phi(i);
    if (snapped - phi0).abs() > 1e-9 * phi0.abs().max(1.0) {
        info!("phi0 = {phi0} snapped down to grid node {snapped}");
    }
    let mut blocks = Vec::with_capacity(surface.steps());
    for j in (1..=surface.steps()).rev() {
        let p = surface.policy_index(j, i);
        blocks.push(p as f64 * surface.grid_step());
        i -= p;
    }
    DiscreteSchedule::new(surface.n(), snapped, blocks)
}

/// Exact expected normalized proceeds of a block schedule:
/// `sum_l psi_l exp(-mu_tilde l / n) prod_{m <= l} D(psi_m)`.
pub fn evaluate_discrete(schedule: &DiscreteSchedule, spec: &SolveSpec) -> Result<f64> {
    if schedule.n() != spec.n {
        return Err(Error::Schedule(format!(
            "schedule uses n = {} but the spec uses n = {}",
            schedule.n(),
            spec.n
        )));
    }
    if schedule.len() > spec.steps() {
        return Err(Error::Schedule(format!(
            "schedule has {} blocks but the horizon allows {}",
            schedule.len(),
            spec.steps()
        )));
    }
    let rate = spec.market.mu_tilde() / f64::from(spec.n);
    let mut log_impact = 0.0;
    let mut total = 0.0;
    for (l, &psi) in schedule.blocks().iter().enumerate() {
        log_impact += spec.log_decay(psi)?;
        total += psi * (log_impact - rate * l as f64).exp();
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: u32,
    pub steps: usize,
    /// Normalized value `G_[nt](phi_max)`.
    pub value: f64,
    /// `|value - previous value|`.
    pub gap_prev: Option<f64>,
    /// `|value - closed form|`, linear impact only.
    pub gap_closed_form: Option<f64>,
}

/// Solves `spec` at each `n` (strictly increasing) and reports the values at
/// `phi_max` with successive gaps.
pub fn convergence_sweep(spec: &SolveSpec, n_list: &[u32]) -> Result<Vec<ConvergenceRow>> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "n_list must be strictly increasing".into(),
        ));
    }
    let closed = match spec.impact.kind() {
        ImpactKind::Linear => Some(loglinear_value(
            0.0,
            spec.phi_max,
            1.0,
            spec.effective_noise().gamma(),
            spec.impact.alpha0(),
        )?),
        ImpactKind::Quadratic => None,
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let s = spec.with_n(n);
        let surface = solve(&s)?;
        let value = surface.normalized_value(spec.phi_max);
        rows.push(ConvergenceRow {
            n,
            steps: s.steps(),
            value,
            gap_prev: rows.last().map(|r| (value - r.value).abs()),
            gap_closed_form: closed.map(|c| (value - c).abs()),
        });
    }
    Ok(rows)
}

/// Impact-free reference for tests and sanity checks.
pub fn frictionless(spec: &SolveSpec) -> SolveSpec {
    let mut s = *spec;
    s.impact = ImpactModel::new(spec.impact.kind(), 0.0).expect("zero impact is valid");
    s
}
