//! Monte Carlo simulation of the discrete recursion and of the continuous
//! Lévy-driven dynamics under a deterministic schedule.
//!
//! Every path draws from its own ChaCha8 stream (`stream = path index`) of the
//! master seed, and the per-path results are reduced by pairwise summation in
//! path order, so estimates are bit-identical for a fixed configuration
//! regardless of the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ImpactModel, MarketParams, NoiseModel, UtilityFn};
use crate::strategy::{DiscreteSchedule, RateSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    /// Number of sample paths. Must be even with antithetic sampling.
    pub paths: usize,
    /// Time steps over the horizon of a continuous simulation.
    pub time_steps: usize,
    pub seed: u64,
    /// Pair each path with its Gaussian mirror image (jump draws shared).
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(paths: usize, time_steps: usize, seed: u64) -> Self {
        Self {
            paths,
            time_steps,
            seed,
            antithetic: false,
        }
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Mc("at least one path is required".into()));
        }
        if self.antithetic && !self.paths.is_multiple_of(2) {
            return Err(Error::Mc(
                "antithetic sampling needs an even path count".into(),
            ));
        }
        Ok(())
    }

    /// Independent samples entering the standard error.
    fn samples(&self) -> usize {
        if self.antithetic {
            self.paths / 2
        } else {
            self.paths
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// State of one simulated path at time `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathState {
    pub r: f64,
    /// Log price.
    pub x: f64,
    /// Price `exp(x)`.
    pub s: f64,
    /// Cash.
    pub w: f64,
    pub phi: f64,
}

/// Log-price coefficients `dX = b(X) dr + sigma(X) dB`.
pub trait PriceDynamics: Sync {
    fn drift(&self, x: f64) -> f64;

    fn vol(&self, x: f64) -> f64;

    /// Exact transition over `dt` driven by the standard normal `z`, when
    /// one is available.
    fn exact_step(&self, _x: f64, _dt: f64, _z: f64) -> Option<f64> {
        None
    }

    /// Exact step if available, else Euler.
    fn step(&self, x: f64, dt: f64, z: f64) -> f64 {
        self.exact_step(x, dt, z)
            .unwrap_or_else(|| x + self.drift(x) * dt + self.vol(x) * dt.sqrt() * z)
    }
}

/// `b(x) = -mu`, `sigma(x) = sigma`; sampled exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficients {
    pub mu: f64,
    pub sigma: f64,
}

impl From<&MarketParams> for ConstantCoefficients {
    fn from(m: &MarketParams) -> Self {
        Self {
            mu: m.mu(),
            sigma: m.sigma(),
        }
    }
}

impl PriceDynamics for ConstantCoefficients {
    fn drift(&self, _x: f64) -> f64 {
        -self.mu
    }

    fn vol(&self, _x: f64) -> f64 {
        self.sigma
    }

    fn exact_step(&self, x: f64, dt: f64, z: f64) -> Option<f64> {
        Some(x - self.mu * dt + self.sigma * dt.sqrt() * z)
    }
}

/// General bounded Lipschitz coefficients, stepped with Euler–Maruyama.
pub struct LipschitzCoefficients<B, S> {
    pub drift: B,
    pub vol: S,
}

impl<B, S> PriceDynamics for LipschitzCoefficients<B, S>
where
    B: Fn(f64) -> f64 + Sync,
    S: Fn(f64) -> f64 + Sync,
{
    fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    fn vol(&self, x: f64) -> f64 {
        (self.vol)(x)
    }
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Exact Gamma sampler (Marsaglia–Tsang, with the `U^(1/shape)` boost for
/// shapes below one); `None` when the shape is zero.
fn gamma_sampler(shape: f64, scale: f64) -> Result<Option<Gamma<f64>>> {
    if shape <= 0.0 {
        return Ok(None);
    }
    Gamma::new(shape, scale)
        .map(Some)
        .map_err(|e| Error::Mc(format!("gamma({shape}, {scale}): {e}")))
}

/// Order-fixed pairwise sum.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn summarize(samples: &[f64], paths: usize) -> Estimate {
    let n = samples.len() as f64;
    let mean = pairwise_sum(samples) / n;
    let dev: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = if samples.len() > 1 {
        pairwise_sum(&dev) / (n - 1.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        std_error: (var / n).sqrt(),
        paths,
    }
}

/// Sample mean and variance with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleMoments {
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub draws: usize,
}

impl SampleMoments {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = pairwise_sum(xs) / n;
        let c2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        let c4: Vec<f64> = xs.iter().map(|x| (x - mean).powi(4)).collect();
        let m2 = pairwise_sum(&c2) / n;
        let m4 = pairwise_sum(&c4) / n;
        let variance = m2 * n / (n - 1.0);
        Self {
            mean,
            variance,
            se_mean: (variance / n).sqrt(),
            se_variance: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
            draws: xs.len(),
        }
    }
}

struct DiscreteSim<'a, P: PriceDynamics> {
    sched: &'a DiscreteSchedule,
    impact: &'a ImpactModel,
    noise: &'a NoiseModel,
    dynamics: &'a P,
    s0: f64,
    substeps: usize,
    jumps: Option<Gamma<f64>>,
}

impl<P: PriceDynamics> DiscreteSim<'_, P> {
    fn run(
        &self,
        rng: &mut ChaCha8Rng,
        mirror: bool,
        mut trace: Option<&mut Vec<PathState>>,
    ) -> (f64, f64, f64) {
        let n = self.sched.n();
        let dt = 1.0 / f64::from(n) / self.substeps as f64;
        let sign = if mirror { -1.0 } else { 1.0 };
        let mut x = self.s0.ln();
        let mut w = 0.0;
        let mut phi = self.sched.phi0();
        let record = |trace: &mut Option<&mut Vec<PathState>>, r: f64, x: f64, w: f64, phi: f64| {
            if let Some(t) = trace.as_deref_mut() {
                t.push(PathState {
                    r,
                    x,
                    s: x.exp(),
                    w,
                    phi,
                });
            }
        };
        record(&mut trace, 0.0, x, w, phi);
        for (l, &psi) in self.sched.blocks().iter().enumerate() {
            let c = self.noise.gamma() + self.jumps.map_or(0.0, |g| g.sample(rng));
            let impact = c * self.impact.g_n(n, psi);
            w += psi * x.exp() * (-impact).exp();
            phi = (phi - psi).max(0.0);
            x -= impact;
            for _ in 0..self.substeps {
                let z: f64 = rng.sample(StandardNormal);
                x = self.dynamics.step(x, dt, sign * z);
            }
            record(&mut trace, (l + 1) as f64 / f64::from(n), x, w, phi);
        }
        (w, phi, x.exp())
    }
}

/// Draws pairs share one stream: both paths see the same jump draws while
/// the second path negates every Gaussian draw.
fn with_mirrored_stream<F>(seed: u64, index: usize, mut run: F) -> (f64, f64)
where
    F: FnMut(&mut ChaCha8Rng, bool) -> f64,
{
    let mut rng = path_rng(seed, index);
    let mut replay = rng.clone();
    let a = run(&mut rng, false);
    let b = run(&mut replay, true);
    (a, b)
}

fn estimate<F>(mc: &McConfig, sample: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng, bool) -> f64 + Sync,
{
    let samples: Vec<f64> = if mc.antithetic {
        (0..mc.samples())
            .into_par_iter()
            .map(|i| {
                let (a, b) = with_mirrored_stream(mc.seed, i, &sample);
                0.5 * (a + b)
            })
            .collect()
    } else {
        (0..mc.samples())
            .into_par_iter()
            .map(|i| sample(&mut path_rng(mc.seed, i), false))
            .collect()
    };
    summarize(&samples, mc.paths)
}

/// Estimates `E[u(W_k, phi_k, S_k)]` for a block schedule under the discrete
/// recursion with exact lognormal price steps and `c = gamma + Gamma(alpha1/n,
/// n beta1)` impact multipliers. Starting cash is 0 and the starting price
/// is `market.s0()`.
pub fn simulate_discrete(
    sched: &DiscreteSchedule,
    market: &MarketParams,
    impact: &ImpactModel,
    noise: &NoiseModel,
    mc: &McConfig,
    u: &UtilityFn,
) -> Result<Estimate> {
    simulate_discrete_with(
        sched,
        &ConstantCoefficients::from(market),
        market.s0(),
        impact,
        noise,
        mc,
        u,
    )
}

/// [`simulate_discrete`] for arbitrary price dynamics. Without an exact
/// transition, each trading interval is split into
/// `max(1, time_steps / blocks)` Euler steps.
pub fn simulate_discrete_with<P: PriceDynamics>(
    sched: &DiscreteSchedule,
    dynamics: &P,
    s0: f64,
    impact: &ImpactModel,
    noise: &NoiseModel,
    mc: &McConfig,
    u: &UtilityFn,
) -> Result<Estimate> {
    let sim = discrete_sim(sched, dynamics, s0, impact, noise, mc)?;
    Ok(estimate(mc, |rng, mirror| {
        let (w, phi, s) = sim.run(rng, mirror, None);
        u.eval(w, phi, s)
    }))
}

fn discrete_sim<'a, P: PriceDynamics>(
    sched: &'a DiscreteSchedule,
    dynamics: &'a P,
    s0: f64,
    impact: &'a ImpactModel,
    noise: &'a NoiseModel,
    mc: &McConfig,
) -> Result<DiscreteSim<'a, P>> {
    mc.validate()?;
    if !(s0 > 0.0) {
        return Err(Error::Mc(format!("initial price {s0} must be > 0")));
    }
    let exact = dynamics.exact_step(0.0, 1.0, 0.0).is_some();
    let substeps = if exact || sched.is_empty() {
        1
    } else {
        (mc.time_steps / sched.len()).max(1)
    };
    let jumps = match noise.step_gamma_params(sched.n()) {
        Some((shape, scale)) => gamma_sampler(shape, scale)?,
        None => None,
    };
    Ok(DiscreteSim {
        sched,
        impact,
        noise,
        dynamics,
        s0,
        substeps,
        jumps,
    })
}

/// States after every block of one discrete path (`stream = index`).
pub fn trace_discrete(
    sched: &DiscreteSchedule,
    market: &MarketParams,
    impact: &ImpactModel,
    noise: &NoiseModel,
    seed: u64,
    index: usize,
) -> Result<Vec<PathState>> {
    let dynamics = ConstantCoefficients::from(market);
    let mc = McConfig::new(1, 0, seed);
    let sim = discrete_sim(sched, &dynamics, market.s0(), impact, noise, &mc)?;
    let mut trace = Vec::with_capacity(sched.len() + 1);
    sim.run(&mut path_rng(seed, index), false, Some(&mut trace));
    Ok(trace)
}

struct ContinuousSim<'a, P: PriceDynamics> {
    sched: &'a RateSchedule,
    impact: &'a ImpactModel,
    noise: &'a NoiseModel,
    dynamics: &'a P,
    s0: f64,
    steps: usize,
    jumps: Option<Gamma<f64>>,
}

impl<P: PriceDynamics> ContinuousSim<'_, P> {
    fn dt(&self) -> f64 {
        self.sched.horizon() / self.steps as f64
    }

    fn run(
        &self,
        rng: &mut ChaCha8Rng,
        mirror: bool,
        mut trace: Option<&mut Vec<PathState>>,
    ) -> (f64, f64, f64) {
        let dt = self.dt();
        let sign = if mirror { -1.0 } else { 1.0 };
        let mut x = self.s0.ln();
        let mut w = 0.0;
        let mut phi = self.sched.phi0();
        if let Some(t) = trace.as_deref_mut() {
            t.push(PathState {
                r: 0.0,
                x,
                s: x.exp(),
                w,
                phi,
            });
        }
        for i in 0..self.steps {
            let r = i as f64 * dt;
            let sold = (rate_on_step(self.sched, r) * dt).min(phi);
            let zeta = sold / dt;
            w += sold * x.exp();
            phi -= sold;
            let z: f64 = rng.sample(StandardNormal);
            let dl = self.noise.gamma() * dt + self.jumps.map_or(0.0, |g| g.sample(rng));
            x = self.dynamics.step(x, dt, sign * z) - self.impact.g(zeta) * dl;
            if let Some(t) = trace.as_deref_mut() {
                t.push(PathState {
                    r: r + dt,
                    x,
                    s: x.exp(),
                    w,
                    phi,
                });
            }
        }
        (w, phi, x.exp())
    }
}

/// Rate of the piece containing the left part of the step starting at `r`.
fn rate_on_step(sched: &RateSchedule, r: f64) -> f64 {
    let bps = sched.breakpoints();
    let i = bps.partition_point(|&b| b <= r + 1e-12 * (1.0 + r.abs()));
    if i == 0 || i > sched.rates().len() {
        0.0
    } else {
        sched.rates()[i - 1]
    }
}

fn continuous_sim<'a, P: PriceDynamics>(
    sched: &'a RateSchedule,
    dynamics: &'a P,
    s0: f64,
    impact: &'a ImpactModel,
    noise: &'a NoiseModel,
    mc: &McConfig,
) -> Result<ContinuousSim<'a, P>> {
    mc.validate()?;
    if !(s0 > 0.0) {
        return Err(Error::Mc(format!("initial price {s0} must be > 0")));
    }
    let pieces = sched.rates().len();
    if mc.time_steps < pieces.max(1) {
        return Err(Error::Mc(format!(
            "{} time steps cannot resolve {pieces} schedule pieces",
            mc.time_steps
        )));
    }
    let dt = sched.horizon() / mc.time_steps as f64;
    let jumps = if noise.has_jumps() {
        gamma_sampler(noise.alpha1() * dt, noise.beta1())?
    } else {
        None
    };
    Ok(ContinuousSim {
        sched,
        impact,
        noise,
        dynamics,
        s0,
        steps: mc.time_steps,
        jumps,
    })
}

/// Euler estimate of `E[u(W_t, phi_t, S_t)]` for the continuous model
///
/// ```text
/// dW = zeta S dr,  dphi = -zeta dr,  dX = sigma dB + b dr - g(zeta) dL
/// ```
///
/// on `mc.time_steps` equal steps over the schedule horizon. Proceeds use the
/// left-endpoint price; the step impact uses the step's rate and the full
/// increment `dL = gamma dr + Gamma(alpha1 dr, beta1)`.
pub fn simulate_continuous(
    sched: &RateSchedule,
    market: &MarketParams,
    impact: &ImpactModel,
    noise: &NoiseModel,
    mc: &McConfig,
    u: &UtilityFn,
) -> Result<Estimate> {
    simulate_continuous_with(
        sched,
        &ConstantCoefficients::from(market),
        market.s0(),
        impact,
        noise,
        mc,
        u,
    )
}

pub fn simulate_continuous_with<P: PriceDynamics>(
    sched: &RateSchedule,
    dynamics: &P,
    s0: f64,
    impact: &ImpactModel,
    noise: &NoiseModel,
    mc: &McConfig,
    u: &UtilityFn,
) -> Result<Estimate> {
    let sim = continuous_sim(sched, dynamics, s0, impact, noise, mc)?;
    Ok(estimate(mc, |rng, mirror| {
        let (w, phi, s) = sim.run(rng, mirror, None);
        u.eval(w, phi, s)
    }))
}

/// States at every time step of one continuous path (`stream = index`).
pub fn trace_continuous(
    sched: &RateSchedule,
    market: &MarketParams,
    impact: &ImpactModel,
    noise: &NoiseModel,
    time_steps: usize,
    seed: u64,
    index: usize,
) -> Result<Vec<PathState>> {
    let dynamics = ConstantCoefficients::from(market);
    let mc = McConfig::new(1, time_steps, seed);
    let sim = continuous_sim(sched, &dynamics, market.s0(), impact, noise, &mc)?;
    let mut trace = Vec::with_capacity(time_steps + 1);
    sim.run(&mut path_rng(seed, index), false, Some(&mut trace));
    Ok(trace)
}

/// Draws of the jump part `L_t - gamma t`, each built from `steps` Gamma
/// increments as in [`simulate_continuous`].
pub fn simulate_subordinator(
    noise: &NoiseModel,
    t: f64,
    steps: usize,
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if steps == 0 || draws == 0 {
        return Err(Error::Mc("steps and draws must be >= 1".into()));
    }
    let sampler = gamma_sampler(noise.alpha1() * t / steps as f64, noise.beta1())?;
    Ok((0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let incs: Vec<f64> = (0..steps)
                .map(|_| sampler.map_or(0.0, |g| g.sample(&mut rng)))
                .collect();
            pairwise_sum(&incs)
        })
        .collect())
}
