use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(name, value, "must be finite"))
    }
}

/// Constant-coefficient log-price dynamics `dX = -mu dt + sigma dB`.
///
/// The risk-adjusted drift `mu_tilde = mu - sigma^2 / 2` is always derived,
/// so that `E[S_{r+dt} / S_r] = exp(-mu_tilde dt)` in the absence of impact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    mu: f64,
    sigma: f64,
    s0: f64,
}

impl MarketParams {
    pub fn new(mu: f64, sigma: f64, s0: f64) -> Result<Self> {
        check_finite("mu", mu)?;
        check_finite("sigma", sigma)?;
        check_finite("s0", s0)?;
        if mu < 0.0 {
            return Err(Error::domain("mu", mu, "drift magnitude must be >= 0"));
        }
        if sigma < 0.0 {
            return Err(Error::domain("sigma", sigma, "volatility must be >= 0"));
        }
        if s0 <= 0.0 {
            return Err(Error::domain("s0", s0, "initial price must be > 0"));
        }
        Ok(Self { mu, sigma, s0 })
    }

    /// Market with the given risk-adjusted drift and volatility.
    pub fn from_mu_tilde(mu_tilde: f64, sigma: f64, s0: f64) -> Result<Self> {
        Self::new(mu_tilde + 0.5 * sigma * sigma, sigma, s0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn mu_tilde(&self) -> f64 {
        self.mu - 0.5 * self.sigma * self.sigma
    }

    /// Log-price drift `b(x) = -mu`.
    pub fn drift(&self) -> f64 {
        -self.mu
    }

    /// Fails unless `mu_tilde > 0`, which every liquidation experiment assumes.
    pub fn require_positive_drift(&self) -> Result<()> {
        let mt = self.mu_tilde();
        if mt > 0.0 {
            Ok(())
        } else {
            Err(Error::domain(
                "mu_tilde",
                mt,
                "risk-adjusted drift mu - sigma^2/2 must be > 0",
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpactKind {
    Linear,
    Quadratic,
}

impl std::str::FromStr for ImpactKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ImpactKind::Linear),
            "quadratic" => Ok(ImpactKind::Quadratic),
            other => Err(Error::InvalidParameter(format!(
                "unknown impact kind {other:?} (expected linear|quadratic)"
            ))),
        }
    }
}

/// Deterministic part of the impact function.
///
/// | kind      | `g_n(psi)`        | `h(zeta)`      | `g(zeta)`        |
/// |-----------|-------------------|----------------|------------------|
/// | linear    | `a0 psi`          | `a0`           | `a0 zeta`        |
/// | quadratic | `n a0 psi^2`      | `2 a0 zeta`    | `a0 zeta^2`      |
///
/// Both kinds satisfy `g_n'(psi) = h(n psi)` exactly for every `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactModel {
    kind: ImpactKind,
    alpha0: f64,
}

impl ImpactModel {
    pub fn new(kind: ImpactKind, alpha0: f64) -> Result<Self> {
        check_finite("alpha0", alpha0)?;
        if alpha0 < 0.0 {
            return Err(Error::domain(
                "alpha0",
                alpha0,
                "impact coefficient must be >= 0",
            ));
        }
        Ok(Self { kind, alpha0 })
    }

    pub fn linear(alpha0: f64) -> Result<Self> {
        Self::new(ImpactKind::Linear, alpha0)
    }

    pub fn quadratic(alpha0: f64) -> Result<Self> {
        Self::new(ImpactKind::Quadratic, alpha0)
    }

    pub fn kind(&self) -> ImpactKind {
        self.kind
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Per-step impact of selling a block `psi` when there are `n` steps per
    /// unit time.
    pub fn g_n(&self, n: u32, psi: f64) -> f64 {
        match self.kind {
            ImpactKind::Linear => self.alpha0 * psi,
            ImpactKind::Quadratic => f64::from(n) * self.alpha0 * psi * psi,
        }
    }

    pub fn g_n_derivative(&self, n: u32, psi: f64) -> f64 {
        match self.kind {
            ImpactKind::Linear => self.alpha0,
            ImpactKind::Quadratic => 2.0 * f64::from(n) * self.alpha0 * psi,
        }
    }

    /// Marginal impact rate `h(zeta)`.
    pub fn h(&self, zeta: f64) -> f64 {
        match self.kind {
            ImpactKind::Linear => self.alpha0,
            ImpactKind::Quadratic => 2.0 * self.alpha0 * zeta,
        }
    }

    /// Continuous-time impact rate `g(zeta) = int_0^zeta h`.
    pub fn g(&self, zeta: f64) -> f64 {
        match self.kind {
            ImpactKind::Linear => self.alpha0 * zeta,
            ImpactKind::Quadratic => self.alpha0 * zeta * zeta,
        }
    }

    /// `lim h(zeta)` as `zeta -> inf`.
    pub fn h_at_infinity(&self) -> f64 {
        match self.kind {
            ImpactKind::Linear => self.alpha0,
            ImpactKind::Quadratic if self.alpha0 == 0.0 => 0.0,
            ImpactKind::Quadratic => f64::INFINITY,
        }
    }
}

/// Random impact multiplier `c = gamma + Gamma(shape = alpha1 / n, scale = n beta1)`
/// per discrete step; in the continuous limit the multiplier is the
/// subordinator `L_t = gamma t + (Gamma process with Lévy measure
/// (alpha1 / z) exp(-z / beta1) dz)`.
///
/// `beta1` is a **scale** (not a rate): the unit-time jump part has mean
/// `alpha1 beta1` and variance `alpha1 beta1^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    gamma: f64,
    alpha1: f64,
    beta1: f64,
}

impl NoiseModel {
    pub fn new(gamma: f64, alpha1: f64, beta1: f64) -> Result<Self> {
        check_finite("gamma", gamma)?;
        check_finite("alpha1", alpha1)?;
        check_finite("beta1", beta1)?;
        if gamma < 0.0 {
            return Err(Error::domain("gamma", gamma, "noise floor must be >= 0"));
        }
        if alpha1 < 0.0 {
            return Err(Error::domain("alpha1", alpha1, "Gamma shape must be >= 0"));
        }
        if alpha1 > 0.0 && beta1 <= 0.0 {
            return Err(Error::domain(
                "beta1",
                beta1,
                "Gamma scale must be > 0 when alpha1 > 0",
            ));
        }
        if beta1 < 0.0 {
            return Err(Error::domain("beta1", beta1, "Gamma scale must be >= 0"));
        }
        Ok(Self {
            gamma,
            alpha1,
            beta1,
        })
    }

    /// Impact multiplier fixed at `gamma`.
    pub fn deterministic(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.0, 0.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn has_jumps(&self) -> bool {
        self.alpha1 > 0.0
    }

    /// `E[L_1] = gamma + alpha1 beta1`.
    pub fn gamma_tilde(&self) -> f64 {
        self.gamma + self.jump_mean()
    }

    /// `int z nu(dz) = alpha1 beta1`.
    pub fn jump_mean(&self) -> f64 {
        self.alpha1 * self.beta1
    }

    /// `int z^2 nu(dz) = alpha1 beta1^2`, the unit-time jump variance.
    pub fn jump_variance(&self) -> f64 {
        self.alpha1 * self.beta1 * self.beta1
    }

    /// Lévy density `(alpha1 / z) exp(-z / beta1)` for `z > 0`.
    pub fn levy_density(&self, z: f64) -> f64 {
        if z <= 0.0 || !self.has_jumps() {
            0.0
        } else {
            self.alpha1 / z * (-z / self.beta1).exp()
        }
    }

    /// Noise with every multiplier replaced by its mean `gamma_tilde`.
    pub fn mean_field(&self) -> Self {
        Self {
            gamma: self.gamma_tilde(),
            alpha1: 0.0,
            beta1: 0.0,
        }
    }

    /// Shape and scale of the per-step Gamma component for `n` steps per unit
    /// time, or `None` when there are no jumps.
    pub fn step_gamma_params(&self, n: u32) -> Option<(f64, f64)> {
        self.has_jumps().then(|| {
            let n = f64::from(n);
            (self.alpha1 / n, n * self.beta1)
        })
    }
}

/// `ln E[exp(-c g_n(psi))]` with `c = gamma + Gamma(alpha1/n, n beta1)`.
pub fn log_step_decay_factor(
    impact: &ImpactModel,
    noise: &NoiseModel,
    n: u32,
    psi: f64,
) -> Result<f64> {
    if !(psi >= 0.0) || !psi.is_finite() {
        return Err(Error::domain(
            "psi",
            psi,
            "block size must be finite and >= 0",
        ));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("step count n must be >= 1".into()));
    }
    let g = impact.g_n(n, psi);
    let mut log_d = -noise.gamma() * g;
    if noise.has_jumps() {
        log_d -= noise.alpha1() / f64::from(n) * (f64::from(n) * noise.beta1() * g).ln_1p();
    }
    Ok(log_d)
}

/// Exact expected per-step impact factor
/// `E[exp(-c g_n(psi))] = exp(-gamma g) (1 + n beta1 g)^(-alpha1 / n)`.
pub fn step_decay_factor(
    impact: &ImpactModel,
    noise: &NoiseModel,
    n: u32,
    psi: f64,
) -> Result<f64> {
    log_step_decay_factor(impact, noise, n, psi).map(f64::exp)
}

/// Laplace exponent of the impact subordinator:
/// `-ln E[exp(-u L_1)] = gamma u + alpha1 ln(1 + beta1 u)`.
pub fn laplace_exponent(noise: &NoiseModel, u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::domain("u", u, "Laplace argument must be >= 0"));
    }
    let mut value = noise.gamma() * u;
    if noise.has_jumps() {
        value += noise.alpha1() * (noise.beta1() * u).ln_1p();
    }
    Ok(value)
}

/// Effective impact rate `ghat(zeta) = laplace_exponent(g(zeta))`; the
/// instantaneous log-decay of expected price is `mu_tilde + ghat(zeta)`.
pub fn effective_impact_ghat(impact: &ImpactModel, noise: &NoiseModel, zeta: f64) -> Result<f64> {
    if !(zeta >= 0.0) {
        return Err(Error::domain("zeta", zeta, "rate must be >= 0"));
    }
    laplace_exponent(noise, impact.g(zeta))
}

/// Derivative of [`effective_impact_ghat`]:
/// `hhat(zeta) = (gamma + alpha1 beta1 / (1 + beta1 g(zeta))) h(zeta)`.
pub fn effective_impact_hhat(impact: &ImpactModel, noise: &NoiseModel, zeta: f64) -> Result<f64> {
    if !(zeta >= 0.0) {
        return Err(Error::domain("zeta", zeta, "rate must be >= 0"));
    }
    let tilted_mean = if noise.has_jumps() {
        noise.jump_mean() / (1.0 + noise.beta1() * impact.g(zeta))
    } else {
        0.0
    };
    Ok((noise.gamma() + tilted_mean) * impact.h(zeta))
}
