//! Exact expectations for deterministic continuous-time strategies and the
//! instantaneous-liquidation operator `J`.

use crate::error::{Error, Result};
use crate::model::{effective_impact_ghat, ImpactModel, MarketParams, NoiseModel, UtilityFn};
use crate::strategy::RateSchedule;

/// Expected normalized proceeds of a deterministic rate schedule in the
/// continuous model,
///
/// ```text
/// E[W_t] / s = int_0^t zeta_r exp(-mu_tilde r - int_0^r ghat(zeta_v) dv) dr,
/// ```
///
/// using `E[exp(-u (L_b - L_a))] = exp(-(b - a) laplace_exponent(u))`. The
/// exponent is linear on each constant piece, so each piece integrates in
/// closed form.
pub fn evaluate_rate_analytic(
    sched: &RateSchedule,
    market: &MarketParams,
    impact: &ImpactModel,
    noise: &NoiseModel,
) -> Result<f64> {
    let mu_tilde = market.mu_tilde();
    let mut exponent = 0.0_f64;
    let mut total = 0.0;
    for (a, b, zeta) in sched.pieces() {
        let len = b - a;
        let kappa = mu_tilde + effective_impact_ghat(impact, noise, zeta)?;
        if zeta > 0.0 {
            let x = kappa * len;
            let piece = if x.abs() < 1e-300 {
                len
            } else {
                -(-x).exp_m1() / kappa
            };
            total += zeta * (-exponent).exp() * piece;
        }
        exponent += kappa * len;
    }
    Ok(total)
}

/// `J u(w, phi, s)`: best utility from selling `psi in [0, phi]` instantly
/// at total impact rate `gamma h(inf)`,
/// `u(w + (1 - e^{-a psi}) / a * s, phi - psi, s e^{-a psi})` with
/// `a = gamma h(inf)`, or `u(w + psi s, phi - psi, s)` when `a = 0`.
pub fn j_operator(u: &UtilityFn, gamma_h_inf: f64, w: f64, phi: f64, s: f64) -> Result<f64> {
    j_operator_argmax(u, gamma_h_inf, w, phi, s).map(|(_, v)| v)
}

/// [`j_operator`] together with the maximizing `psi`.
pub fn j_operator_argmax(
    u: &UtilityFn,
    gamma_h_inf: f64,
    w: f64,
    phi: f64,
    s: f64,
) -> Result<(f64, f64)> {
    if gamma_h_inf.is_infinite() {
        return Err(Error::JUndefined);
    }
    if !(gamma_h_inf >= 0.0) {
        return Err(Error::domain("gamma_h_inf", gamma_h_inf, "must be >= 0"));
    }
    if !(phi >= 0.0) {
        return Err(Error::domain("phi", phi, "inventory must be >= 0"));
    }
    let a = gamma_h_inf;
    let objective = |psi: f64| {
        let (cash, price) = if a == 0.0 {
            (psi, s)
        } else {
            (-(-a * psi).exp_m1() / a, s * (-a * psi).exp())
        };
        u.eval(w + cash * s, phi - psi, price)
    };
    Ok(maximize_on_interval(objective, 0.0, phi, 1000, 1e-8))
}

/// `J` for a given impact model; fails with [`Error::JUndefined`] when
/// `h(inf) = inf`.
pub fn j_operator_for(
    impact: &ImpactModel,
    noise: &NoiseModel,
    u: &UtilityFn,
    w: f64,
    phi: f64,
    s: f64,
) -> Result<f64> {
    let h_inf = impact.h_at_infinity();
    if h_inf.is_infinite() {
        return Err(Error::JUndefined);
    }
    j_operator(u, noise.gamma() * h_inf, w, phi, s)
}

/// Grid scan with `seeds` intervals, then golden-section refinement of the
/// bracket around the best node. Returns `(argmax, max)`.
fn maximize_on_interval<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    seeds: usize,
    tol: f64,
) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let h = (hi - lo) / seeds as f64;
    let (mut best_x, mut best_v) = (lo, f(lo));
    let mut best_i = 0;
    for i in 1..=seeds {
        let x = if i == seeds { hi } else { lo + h * i as f64 };
        let v = f(x);
        if v > best_v {
            best_x = x;
            best_v = v;
            best_i = i;
        }
    }
    let mut a = lo + h * best_i.saturating_sub(1) as f64;
    let mut b = (lo + h * (best_i + 1) as f64).min(hi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    if fm > best_v {
        (mid, fm)
    } else {
        (best_x, best_v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::nearly_block;
    use approx::assert_relative_eq;

    fn market() -> MarketParams {
        MarketParams::from_mu_tilde(0.05, 0.0, 1.0).unwrap()
    }

    #[test]
    fn zero_schedule_has_no_proceeds() {
        let lin = ImpactModel::linear(0.01).unwrap();
        let noise = NoiseModel::new(1.0, 3.0, 2.0).unwrap();
        let z = RateSchedule::zero(1.0, 1.0).unwrap();
        assert_eq!(
            evaluate_rate_analytic(&z, &market(), &lin, &noise).unwrap(),
            0.0
        );
    }

    #[test]
    fn constant_rate_linear_example() {
        let lin = ImpactModel::linear(0.01).unwrap();
        let det = NoiseModel::deterministic(1.0).unwrap();
        let c = RateSchedule::constant(1.0, 1.0, 1.0).unwrap();
        let v = evaluate_rate_analytic(&c, &market(), &lin, &det).unwrap();
        let expected = (1.0 - (-0.06f64).exp()) / 0.06;
        assert_relative_eq!(v, expected, epsilon = 1e-14);
        assert_relative_eq!(v, 0.970591, epsilon = 5e-7);
    }

    #[test]
    fn split_pieces_agree_with_single_piece() {
        let q = ImpactModel::quadratic(0.01).unwrap();
        let noise = NoiseModel::new(1.0, 1.0, 2.0).unwrap();
        let one = RateSchedule::new(2.0, vec![0.0, 0.8], vec![2.0]).unwrap();
        let split = RateSchedule::new(2.0, vec![0.0, 0.3, 0.55, 0.8], vec![2.0; 3]).unwrap();
        let a = evaluate_rate_analytic(&one, &market(), &q, &noise).unwrap();
        let b = evaluate_rate_analytic(&split, &market(), &q, &noise).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-14);
    }

    #[test]
    fn nearly_block_tends_to_closed_form() {
        let lin = ImpactModel::linear(0.01).unwrap();
        let noise = NoiseModel::new(1.0, 3.0, 2.0).unwrap();
        let closed = (1.0 - (-0.1f64).exp()) / 0.01;
        let mut last_gap = f64::INFINITY;
        for delta in [0.1, 0.01, 0.001, 1e-4, 1e-6] {
            let s = nearly_block(10.0, delta, 1.0).unwrap();
            let v = evaluate_rate_analytic(&s, &market(), &lin, &noise).unwrap();
            let gap = (v - closed).abs();
            assert!(gap < last_gap);
            last_gap = gap;
        }
        assert!(last_gap / closed < 1e-3);
    }

    #[test]
    fn j_risk_neutral_examples() {
        let u = UtilityFn::risk_neutral();
        assert_relative_eq!(
            j_operator(&u, 0.0, 0.5, 2.0, 1.5).unwrap(),
            0.5 + 3.0,
            epsilon = 1e-12
        );
        let (psi, v) = j_operator_argmax(&u, 0.01, 0.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(v, 0.9950166, epsilon = 1e-7);
        assert_relative_eq!(psi, 1.0, epsilon = 1e-12);
        let lin = ImpactModel::linear(0.01).unwrap();
        let noise = NoiseModel::new(1.0, 3.0, 2.0).unwrap();
        assert_relative_eq!(
            j_operator_for(&lin, &noise, &u, 0.0, 1.0, 1.0).unwrap(),
            0.99501663,
            epsilon = 1e-8
        );
    }

    #[test]
    fn j_undefined_for_quadratic() {
        let u = UtilityFn::risk_neutral();
        let q = ImpactModel::quadratic(0.01).unwrap();
        let noise = NoiseModel::new(1.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            j_operator_for(&q, &noise, &u, 0.0, 1.0, 1.0),
            Err(Error::JUndefined)
        ));
        assert!(matches!(
            j_operator(&u, f64::INFINITY, 0.0, 1.0, 1.0),
            Err(Error::JUndefined)
        ));
        assert!(j_operator(&u, -1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn j_interior_maximum_matches_fine_scan() {
        let u = UtilityFn::new("exp", 2.0, 1.0, |w: f64, phi, s| {
            1.0 - (-2.0 * w).exp() + 0.8 * phi * s
        });
        let a = 0.8;
        let (psi, v) = j_operator_argmax(&u, a, 0.0, 1.0, 1.0).unwrap();
        assert!(psi > 0.0 && psi < 1.0);
        let scan = (0..=10_000)
            .map(|i| {
                let p = f64::from(i) / 10_000.0;
                let cash = (1.0 - (-a * p).exp()) / a;
                u.eval(cash, 1.0 - p, (-a * p).exp())
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((v - scan).abs() < 1e-6);
        assert!(v >= scan - 1e-12);
    }
}
