//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

/// Adaptive Simpson quadrature of `f` over `[a, b]`, with `a` and `b` also
/// used as breakpoints when the caller splits the range.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Quadrature over consecutive breakpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: f64) -> f64 {
    breakpoints
        .windows(2)
        .map(|w| simpson(&f, w[0], w[1], tol))
        .sum()
}

/// Breakpoints spanning `[0, 60 * scale]`, refined near zero.
pub fn tail_breakpoints(scale: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    b.extend(
        [
            1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0,
        ]
        .map(|x| x * scale),
    );
    b
}

/// `integral z^k nu(dz)` for `nu(dz) = alpha1 / z exp(-z / beta1) dz`, `k >= 1`.
pub fn levy_moment(alpha1: f64, beta1: f64, k: i32) -> f64 {
    integrate(
        |z| alpha1 * z.powi(k - 1) * (-z / beta1).exp(),
        &tail_breakpoints(beta1),
        1e-13,
    )
}

/// `gamma u + integral (1 - e^{-u z}) nu(dz)`.
pub fn laplace_exponent_quad(gamma: f64, alpha1: f64, beta1: f64, u: f64) -> f64 {
    let jump = integrate(
        |z: f64| {
            if z == 0.0 {
                alpha1 * u
            } else {
                alpha1 * (-(-u * z).exp_m1()) / z * (-z / beta1).exp()
            }
        },
        &tail_breakpoints(beta1),
        1e-13,
    );
    gamma * u + jump
}

/// `E[exp(-x g)]` for `x ~ Gamma(shape, scale)` by quadrature in
/// `y = x^shape`, which removes the density singularity at zero.
pub fn gamma_laplace_quad(shape: f64, scale: f64, g: f64) -> f64 {
    let norm = statrs::function::gamma::gamma(shape + 1.0) * scale.powf(shape);
    let y_max = (60.0 * scale).powf(shape);
    let f = |y: f64| {
        let x = y.powf(1.0 / shape);
        (-x * g - x / scale).exp() / norm
    };
    let mut b: Vec<f64> = vec![0.0];
    b.extend([1e-8, 1e-6, 1e-4, 1e-2, 0.1, 0.3, 0.6, 1.0].map(|t| t * y_max));
    integrate(f, &b, 1e-14)
}
