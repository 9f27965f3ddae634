//! Closed-form targets and the random-versus-deterministic impact comparison.

use log::warn;
use serde::Serialize;

use crate::dp::{solve, Mode, SolveSpec};
use crate::error::{Error, Result};
use crate::model::NoiseModel;

/// Below this `gamma * alpha0` the series branch is used.
const SERIES_THRESHOLD: f64 = 1e-8;

/// Risk-neutral value under log-linear impact,
/// `w + (1 - exp(-gamma alpha0 phi)) / (gamma alpha0) * s`, for every `t > 0`.
pub fn loglinear_value(w: f64, phi: f64, s: f64, gamma: f64, alpha0: f64) -> Result<f64> {
    if !(phi >= 0.0) {
        return Err(Error::domain("phi", phi, "inventory must be >= 0"));
    }
    let x = gamma * alpha0;
    if !(x >= 0.0) {
        return Err(Error::domain("gamma*alpha0", x, "must be >= 0"));
    }
    let proceeds = if x < SERIES_THRESHOLD {
        let y = x * phi;
        phi * (1.0 - y / 2.0 + y * y / 6.0)
    } else {
        -(-x * phi).exp_m1() / x
    };
    Ok(w + proceeds * s)
}

/// Total market-impact cost `-ln(V / (phi0 s))`.
pub fn total_mi_cost(value: f64, phi0: f64, s: f64) -> Result<f64> {
    if !(value > 0.0) {
        return Err(Error::domain("value", value, "must be > 0"));
    }
    if !(phi0 > 0.0 && s > 0.0) {
        return Err(Error::domain("phi0*s", phi0 * s, "must be > 0"));
    }
    let frictionless = phi0 * s;
    if value > frictionless {
        warn!("value {value} exceeds the frictionless proceeds {frictionless}");
    }
    Ok(-(value / frictionless).ln())
}

/// `(gamma, beta1)` with `gamma + alpha1 beta1 = gamma_tilde` and
/// `alpha1 beta1^2 = jump_var`. Without jumps `beta1` is undefined and
/// `gamma = gamma_tilde`.
pub fn fixed_gamma_tilde_params(
    gamma_tilde: f64,
    jump_var: f64,
    alpha1: f64,
) -> Result<(f64, Option<f64>)> {
    if !(alpha1 >= 0.0) {
        return Err(Error::domain("alpha1", alpha1, "must be >= 0"));
    }
    if alpha1 == 0.0 {
        return Ok((gamma_tilde, None));
    }
    if !(jump_var > 0.0) {
        return Err(Error::domain(
            "jump_var",
            jump_var,
            "must be > 0 when alpha1 > 0",
        ));
    }
    let beta1 = (jump_var / alpha1).sqrt();
    let gamma = gamma_tilde - alpha1 * beta1;
    if gamma < 0.0 {
        return Err(Error::Infeasible(format!(
            "gamma = {gamma} < 0 for gamma_tilde = {gamma_tilde}, var = {jump_var}, alpha1 = {alpha1}"
        )));
    }
    Ok((gamma, Some(beta1)))
}

/// Noise model for one point of the fixed-`gamma_tilde` family.
pub fn fixed_gamma_tilde_noise(gamma_tilde: f64, jump_var: f64, alpha1: f64) -> Result<NoiseModel> {
    let (gamma, beta1) = fixed_gamma_tilde_params(gamma_tilde, jump_var, alpha1)?;
    NoiseModel::new(gamma, alpha1, beta1.unwrap_or(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonPoint {
    pub phi: f64,
    pub alpha1: f64,
    pub value_random: f64,
    pub value_baseline: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub points: Vec<ComparisonPoint>,
    /// Per `alpha1`: smallest `random - baseline` over every `(j, phi)` node.
    pub min_node_gap: Vec<(f64, f64)>,
}

impl ComparisonReport {
    pub fn min_gap(&self) -> f64 {
        self.min_node_gap
            .iter()
            .map(|&(_, g)| g)
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns `phi,alpha1,value_random,value_baseline,gap`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["phi", "alpha1", "value_random", "value_baseline", "gap"])?;
        for p in &self.points {
            w.write_record([
                p.phi.to_string(),
                p.alpha1.to_string(),
                p.value_random.to_string(),
                p.value_baseline.to_string(),
                p.gap.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solves random-impact and mean-field baseline surfaces on a shared grid
/// for each `alpha1` (keeping `gamma` and `beta1` of `base.noise`) and
/// reports both values at each requested `phi`.
pub fn compare_random_vs_baseline(
    base: &SolveSpec,
    alpha1s: &[f64],
    phis: &[f64],
) -> Result<ComparisonReport> {
    let noises = alpha1s
        .iter()
        .map(|&a| {
            let beta1 = if a > 0.0 { base.noise.beta1() } else { 0.0 };
            NoiseModel::new(base.noise.gamma(), a, beta1)
        })
        .collect::<Result<Vec<_>>>()?;
    compare_noise_family(base, &noises, phis)
}

/// Same as [`compare_random_vs_baseline`] over explicit noise models.
pub fn compare_noise_family(
    base: &SolveSpec,
    noises: &[NoiseModel],
    phis: &[f64],
) -> Result<ComparisonReport> {
    let mut points = Vec::new();
    let mut min_node_gap = Vec::new();
    for noise in noises {
        let spec = base.with_noise(*noise);
        let random = solve(&spec.with_mode(Mode::RandomImpact))?;
        let baseline = solve(&spec.with_mode(Mode::DeterministicBaseline))?;
        let mut min_gap = f64::INFINITY;
        for j in 0..=random.steps() {
            for (r, b) in random.layer(j).iter().zip(baseline.layer(j)) {
                min_gap = min_gap.min(r - b);
            }
        }
        min_node_gap.push((noise.alpha1(), min_gap));
        for &phi in phis {
            let value_random = random.normalized_value(phi);
            let value_baseline = baseline.normalized_value(phi);
            points.push(ComparisonPoint {
                phi: random.phi(random.node_at(phi)),
                alpha1: noise.alpha1(),
                value_random,
                value_baseline,
                gap: value_random - value_baseline,
            });
        }
    }
    Ok(ComparisonReport {
        points,
        min_node_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn loglinear_examples() {
        assert_eq!(loglinear_value(0.3, 0.0, 1.0, 1.0, 0.01).unwrap(), 0.3);
        let v = loglinear_value(0.0, 1.0, 1.0, 1.0, 0.01).unwrap();
        assert_relative_eq!(v, 0.99501663, epsilon = 5e-9);
        assert_relative_eq!(v, (1.0 - (-0.01f64).exp()) / 0.01, max_relative = 1e-14);
        assert_relative_eq!(
            loglinear_value(0.0, 10.0, 1.0, 1.0, 0.01).unwrap(),
            0.9516258 * 10.0,
            epsilon = 1e-6
        );
        assert!(loglinear_value(0.0, -1.0, 1.0, 1.0, 0.01).is_err());
    }

    #[test]
    fn loglinear_frictionless_limit() {
        for x in [1e-9, 1e-12, 0.0] {
            let v = loglinear_value(2.0, 3.0, 1.5, 1.0, x).unwrap();
            assert_relative_eq!(v, 2.0 + 3.0 * 1.5, max_relative = 1e-8);
        }
        // both branches agree near the threshold
        let below = loglinear_value(0.0, 5.0, 1.0, 1.0, 0.999e-8).unwrap();
        let above = loglinear_value(0.0, 5.0, 1.0, 1.0, 1.001e-8).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-10);
    }

    #[test]
    fn total_cost_examples() {
        assert_eq!(total_mi_cost(4.0, 2.0, 2.0).unwrap(), 0.0);
        let v = loglinear_value(0.0, 1.0, 1.0, 1.0, 0.01).unwrap();
        let tc = total_mi_cost(v, 1.0, 1.0).unwrap();
        assert_relative_eq!(tc, 0.0049958, epsilon = 5e-8);
        assert!(total_mi_cost(0.0, 1.0, 1.0).is_err());
        assert!(total_mi_cost(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn total_cost_composes_with_closed_form() {
        for phi in [0.5, 1.0, 10.0] {
            let x = 0.01 * phi;
            let tc = total_mi_cost(loglinear_value(0.0, phi, 1.0, 1.0, 0.01).unwrap(), phi, 1.0)
                .unwrap();
            assert_relative_eq!(tc, -((1.0 - (-x).exp()) / x).ln(), max_relative = 1e-9);
        }
    }

    #[test]
    fn fixed_gamma_tilde_examples() {
        let (g, b) = fixed_gamma_tilde_params(1.0, 0.5, 0.5).unwrap();
        assert_relative_eq!(b.unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(g, 0.5, epsilon = 1e-15);
        let (g, b) = fixed_gamma_tilde_params(1.0, 0.5, 1.0).unwrap();
        let b = b.unwrap();
        assert_relative_eq!(b, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(g, 1.0 - 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(g + 1.0 * b, 1.0, epsilon = 1e-15);
        assert_relative_eq!(1.0 * b * b, 0.5, epsilon = 1e-15);
        assert_eq!(
            fixed_gamma_tilde_params(1.0, 0.5, 0.0).unwrap(),
            (1.0, None)
        );
        assert!(matches!(
            fixed_gamma_tilde_params(1.0, 0.5, 100.0),
            Err(Error::Infeasible(_))
        ));
    }
}
