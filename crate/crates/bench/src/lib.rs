//! Shared fixtures for the solver benchmarks.

use randimpact::dp::Mode;
use randimpact::{ImpactModel, MarketParams, NoiseModel, SolveSpec};

/// Quadratic-impact problem on `[0, 1]` with inventory `phi0` on a grid of
/// `grid_points` intervals.
pub fn quadratic_spec(n: u32, phi0: f64, alpha1: f64, grid_points: usize) -> SolveSpec {
    SolveSpec::new(
        MarketParams::from_mu_tilde(0.05, 0.2, 1.0).expect("market"),
        ImpactModel::quadratic(0.01).expect("impact"),
        NoiseModel::new(1.0, alpha1, 2.0).expect("noise"),
        n,
        1.0,
        phi0,
        grid_points,
        Mode::RandomImpact,
    )
    .expect("spec")
}

/// Linear-impact counterpart of [`quadratic_spec`].
pub fn linear_spec(n: u32, phi0: f64, alpha1: f64, grid_points: usize) -> SolveSpec {
    SolveSpec {
        impact: ImpactModel::linear(0.01).expect("impact"),
        ..quadratic_spec(n, phi0, alpha1, grid_points)
    }
}
