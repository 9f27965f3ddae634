use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Eval = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// Utility `u(w, phi, s)` on cash, remaining inventory and price.
///
/// Admissible utilities are non-decreasing in each argument, non-negative and
/// bounded by `growth_c * (1 + |w|^growth_m + s^growth_m)`. These properties
/// cannot be proven for an arbitrary closure; [`UtilityFn::validate_on_grid`]
/// samples them.
#[derive(Clone)]
pub struct UtilityFn {
    name: String,
    eval: Arc<Eval>,
    growth_c: f64,
    growth_m: f64,
}

impl fmt::Debug for UtilityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UtilityFn")
            .field("name", &self.name)
            .field("growth_c", &self.growth_c)
            .field("growth_m", &self.growth_m)
            .finish()
    }
}

impl UtilityFn {
    pub fn new<F>(name: impl Into<String>, growth_c: f64, growth_m: f64, eval: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            growth_c,
            growth_m,
        }
    }

    /// `u(w, phi, s) = w`.
    pub fn risk_neutral() -> Self {
        Self::new("risk_neutral", 1.0, 1.0, |w, _, _| w)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_risk_neutral(&self) -> bool {
        self.name == "risk_neutral"
    }

    pub fn eval(&self, w: f64, phi: f64, s: f64) -> f64 {
        (self.eval)(w, phi, s)
    }

    /// Samples monotonicity, non-negativity and the growth bound on a
    /// `points^3` grid over `[0, w_max] x [0, phi_max] x [0, s_max]`.
    pub fn validate_on_grid(
        &self,
        w_max: f64,
        phi_max: f64,
        s_max: f64,
        points: usize,
    ) -> Result<()> {
        let points = points.max(2);
        let axis = |max: f64| -> Vec<f64> {
            (0..points)
                .map(|i| max * i as f64 / (points - 1) as f64)
                .collect()
        };
        let (ws, phis, ss) = (axis(w_max), axis(phi_max), axis(s_max));
        let tol = 1e-12;
        for (iw, &w) in ws.iter().enumerate() {
            for (ip, &phi) in phis.iter().enumerate() {
                for (is, &s) in ss.iter().enumerate() {
                    let u = self.eval(w, phi, s);
                    let fail = |what: &str| {
                        Error::InvalidParameter(format!(
                            "utility {} {what} at (w, phi, s) = ({w}, {phi}, {s})",
                            self.name
                        ))
                    };
                    if !u.is_finite() {
                        return Err(fail("is not finite"));
                    }
                    if u < -tol {
                        return Err(fail("is negative"));
                    }
                    let bound =
                        self.growth_c * (1.0 + w.abs().powf(self.growth_m) + s.powf(self.growth_m));
                    if u > bound + tol {
                        return Err(fail("violates its growth bound"));
                    }
                    if iw > 0 && u + tol < self.eval(ws[iw - 1], phi, s) {
                        return Err(fail("decreases in w"));
                    }
                    if ip > 0 && u + tol < self.eval(w, phis[ip - 1], s) {
                        return Err(fail("decreases in phi"));
                    }
                    if is > 0 && u + tol < self.eval(w, phi, ss[is - 1]) {
                        return Err(fail("decreases in s"));
                    }
                }
            }
        }
        Ok(())
    }
}
