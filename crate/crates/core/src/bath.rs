//! Closed-form Ohmic-bath kernels and the quadrature oracles that validate
//! them.
//!
//! The closed forms are what the master-equation builders consume; the
//! frequency-integral definitions are kept alongside as independent checks
//! (they also back the `verify` subcommand).

use crate::error::{Error, Result};

/// SI inputs for the kernel formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Damping rate gamma, rad/s.
    pub gamma: f64,
    /// Cutoff frequency Omega, rad/s.
    pub cutoff: f64,
    /// Capacitance, F.
    pub capacitance: f64,
    /// System frequency omega0, rad/s.
    pub omega0: f64,
}

const HBAR: f64 = 1.054571817e-34;

/// Lorentz-Drude spectral density J(w) = (2 C gamma / pi) w Omega^2/(Omega^2 + w^2).
pub fn spectral_density(omega: f64, p: &KernelParams) -> Result<f64> {
    if omega < 0.0 {
        return Err(Error::ParamDomain { field: "omega", value: omega });
    }
    let o2 = p.cutoff * p.cutoff;
    Ok(2.0 * p.capacitance * p.gamma / std::f64::consts::PI * omega * o2 / (o2 + omega * omega))
}

/// Dissipation kernel D(-tau) = 2 C gamma hbar Omega^2 e^{-Omega|tau|} sgn(tau).
pub fn dissipation_kernel(tau: f64, p: &KernelParams) -> f64 {
    let mag = 2.0 * p.capacitance * p.gamma * HBAR * p.cutoff * p.cutoff
        * (-p.cutoff * tau.abs()).exp();
    mag * tau.signum()
}

/// Zero-temperature noise kernel D1(-tau) = C hbar gamma Omega omega0 e^{-Omega|tau|}.
pub fn noise_kernel_t0(tau: f64, p: &KernelParams) -> f64 {
    p.capacitance * HBAR * p.gamma * p.cutoff * p.omega0 * (-p.cutoff * tau.abs()).exp()
}

/// Moment identity Omega^{n+1} int_0^inf tau^n e^{-Omega tau} dtau = n!.
/// Returns (analytic n!, quadrature value) so tests can compare the two.
pub fn moment_identity_check(n: u32, cutoff: f64) -> Result<(f64, f64)> {
    if n > 6 {
        return Err(Error::UnsupportedOrder(n as usize, 6));
    }
    let analytic = (1..=n).map(|k| k as f64).product::<f64>().max(1.0);
    // integrate to 100/Omega; the tail beyond is ~ e^-100
    let f = |tau: f64| tau.powi(n as i32) * (-cutoff * tau).exp();
    let integral =
        integrate_panels(&f, 0.0, 100.0 / cutoff, 200, 1e-12 * analytic / cutoff.powi(n as i32 + 1));
    Ok((analytic, cutoff.powi(n as i32 + 1) * integral))
}

/// Quadrature evaluation of the dissipation-kernel definition
/// 2 hbar int_0^inf J(w) sin(w tau) dw. The integrand decays only as 1/w, so
/// a plain cut-off integral converges too slowly; split off the 1/w asymptote
/// (Dirichlet: int_0^inf sin(w tau)/w dw = pi/2) and integrate the remaining
/// absolutely convergent piece, which falls off as 1/w^3.
pub fn dissipation_kernel_quadrature(tau: f64, p: &KernelParams) -> Result<f64> {
    let prefactor = 2.0 * p.capacitance * p.gamma / std::f64::consts::PI * p.cutoff * p.cutoff;
    let o2 = p.cutoff * p.cutoff;
    let ta = tau.abs();
    // J(w) sin(w tau) = prefactor [sin(w tau)/w - w sin(w tau) O^2/(w^2(w^2+O^2))]
    // ... the remainder here is sin(w tau) O^2 / (w (w^2 + O^2)).
    let rem = |w: f64| {
        if w == 0.0 {
            ta
        } else {
            (w * ta).sin() * o2 / (w * (w * w + o2))
        }
    };
    let remainder = oscillatory_integral(&rem, ta, 1000.0 * p.cutoff);
    Ok(2.0 * HBAR * prefactor * (std::f64::consts::PI / 2.0 - remainder) * tau.signum())
}

/// Quadrature evaluation of the slow/fast-separated noise-kernel form,
/// hbar omega0 coth(hbar omega0 / 2 kB T) int_0^inf J(w)/w cos(w tau) dw,
/// in the T -> 0 limit where coth -> 1. This prefactor is the one consistent
/// with the closed form `noise_kernel_t0`.
pub fn noise_kernel_t0_quadrature(tau: f64, p: &KernelParams) -> Result<f64> {
    let f = |w: f64| {
        if w == 0.0 {
            // J(w)/w -> 2 C gamma / pi as w -> 0
            2.0 * p.capacitance * p.gamma / std::f64::consts::PI * (w * tau).cos()
        } else {
            spectral_density(w, p).unwrap() / w * (w * tau).cos()
        }
    };
    let head = oscillatory_integral(&f, tau.abs(), 100.0 * p.cutoff);
    // the 1/w^2 tail converges slowly under plain truncation; sum half-period
    // panels past the cut with Euler acceleration of the alternating series
    let tail = if tau != 0.0 {
        alternating_tail(&f, 100.0 * p.cutoff, std::f64::consts::PI / tau.abs(), 24)
    } else {
        // no oscillation: extend the smooth integral tenfold, tail ~ O/1000
        oscillatory_integral(&f, 0.0, 1000.0 * p.cutoff)
            - oscillatory_integral(&f, 0.0, 100.0 * p.cutoff)
    };
    Ok(HBAR * p.omega0 * (head + tail))
}

/// Euler-accelerated sum of an alternating oscillatory tail: integrate
/// `terms` consecutive half-periods from `start` and repeatedly average the
/// partial sums.
fn alternating_tail(f: &dyn Fn(f64) -> f64, start: f64, half_period: f64, terms: usize) -> f64 {
    let mut partial = Vec::with_capacity(terms);
    let mut acc = 0.0;
    for k in 0..terms {
        let a = start + k as f64 * half_period;
        let b = a + half_period;
        let fscale = (0..=16)
            .map(|j| f(a + (b - a) * j as f64 / 16.0).abs())
            .fold(f64::MIN_POSITIVE, f64::max);
        acc += adaptive_simpson(f, a, b, 1e-10 * fscale * (b - a), 24);
        partial.push(acc);
    }
    while partial.len() > 1 {
        partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    partial[0]
}

/// Integrate f over [0, upper], splitting at the zeros of the trig factor
/// (spacing pi/tau) so each panel is smooth for the adaptive rule.
fn oscillatory_integral(f: &dyn Fn(f64) -> f64, tau: f64, upper: f64) -> f64 {
    let mut total = 0.0;
    let mut a = 0.0;
    // split at the trig zeros, but never coarser than the Lorentzian width
    // scale (upper/512), or the first adaptive probe misses the structure
    // near the origin entirely
    let step = if tau > 0.0 {
        (std::f64::consts::PI / tau).min(upper / 512.0)
    } else {
        upper / 512.0
    };
    // tolerance scaled to the integrand magnitude (SI kernels are ~1e-60)
    let fscale = (0..=256)
        .map(|k| f(upper * k as f64 / 256.0).abs())
        .fold(f64::MIN_POSITIVE, f64::max);
    while a < upper {
        let b = (a + step).min(upper);
        total += adaptive_simpson(f, a, b, 1e-9 * fscale * (b - a), 30);
        a = b;
    }
    total
}

/// Uniform pre-split of [a, b] with adaptive refinement inside each panel;
/// guards against a single coarse probe missing localized structure.
fn integrate_panels(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * width;
            adaptive_simpson(f, lo, lo + width, tol / panels as f64, 30)
        })
        .sum()
}

/// Plain adaptive Simpson with recursion-depth cap.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, left, tol / 2.0, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, right, tol / 2.0, depth - 1)
    }
}
