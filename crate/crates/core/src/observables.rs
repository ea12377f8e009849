//! Steady-state observables (purity, screening current), the zeta-weighting
//! optimizer, and flux sweeps that generate the figure data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master::{build_generator, GeneratorKind, Superoperator, ZetaSplit};
use crate::operators::{build_xp, trace, CMat};
use crate::params::DerivedScales;
use crate::steady::{steady_state, SteadyStateResult};

/// Tr rho^2. Rejects inputs whose trace has drifted from one.
pub fn purity(rho: &CMat) -> Result<f64> {
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::InvalidState(format!("purity input has trace {tr}")));
    }
    Ok(trace(&rho.dot(rho)).re)
}

/// Screening current <Phi>/L in amperes: current_scale * <X>.
pub fn screening_current(rho: &CMat, scales: &DerivedScales) -> Result<f64> {
    let n = rho.nrows();
    let (x, _) = build_xp(n)?;
    Ok(scales.current_scale * trace(&x.matrix().dot(rho)).re)
}

/// How the second-order Lindblad split is chosen during sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ZetaMode {
    /// Use a fixed zeta at every flux point.
    Fixed(f64),
    /// zeta = 1 - xi, the printed convention.
    PaperConvention,
    /// Minimize |purity_first - purity_second| over zeta at each flux point.
    Optimize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ZetaOptimum {
    pub zeta_star: f64,
    /// Attained |purity_first - purity_second|.
    pub delta_min: f64,
    /// Set when the 21-point coarse grid shows more than one local minimum.
    pub multimodal: bool,
}

const COARSE_POINTS: usize = 21;
const GOLDEN_TOL: f64 = 1e-4;

fn second_order_purity(
    scales: &DerivedScales,
    flux_fraction: f64,
    zeta: f64,
    n: usize,
) -> Result<f64> {
    let split = ZetaSplit::new(zeta)?;
    let gen = build_generator(GeneratorKind::Lind2, scales, flux_fraction, Some(split), n)?;
    let result = steady_state(&gen)?;
    purity(&result.rho)
}

/// Minimize |purity_first - purity_second(zeta)| over zeta in (0, 1): coarse
/// 21-point grid, then golden-section refinement around the grid minimum.
pub fn zeta_optimize(
    scales: &DerivedScales,
    flux_fraction: f64,
    n: usize,
    purity_first: Option<f64>,
) -> Result<ZetaOptimum> {
    let p1 = match purity_first {
        Some(p) => p,
        None => {
            let gen = build_generator(GeneratorKind::Lind1, scales, flux_fraction, None, n)?;
            purity(&steady_state(&gen)?.rho)?
        }
    };
    let objective =
        |zeta: f64| -> Result<f64> { Ok((second_order_purity(scales, flux_fraction, zeta, n)? - p1).abs()) };

    // interior coarse grid: k/(COARSE_POINTS+1), k = 1..=COARSE_POINTS
    let h = 1.0 / (COARSE_POINTS + 1) as f64;
    let mut values = Vec::with_capacity(COARSE_POINTS);
    for k in 1..=COARSE_POINTS {
        values.push(objective(k as f64 * h)?);
    }
    let mut best = 0;
    for k in 1..values.len() {
        if values[k] < values[best] {
            best = k;
        }
    }
    let local_minima = (0..values.len())
        .filter(|&k| {
            let left_ok = k == 0 || values[k] < values[k - 1];
            let right_ok = k == values.len() - 1 || values[k] <= values[k + 1];
            left_ok && right_ok
        })
        .count();
    let multimodal = local_minima > 1;

    let mut lo = ((best + 1) as f64 - 1.0) * h;
    let mut hi = ((best + 1) as f64 + 1.0) * h;
    lo = lo.max(h * 0.25);
    hi = hi.min(1.0 - h * 0.25);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut m1 = hi - phi * (hi - lo);
    let mut m2 = lo + phi * (hi - lo);
    let mut f1 = objective(m1)?;
    let mut f2 = objective(m2)?;
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - phi * (hi - lo);
            f1 = objective(m1)?;
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + phi * (hi - lo);
            f2 = objective(m2)?;
        }
    }
    let zeta_star = 0.5 * (lo + hi);
    let delta_min = objective(zeta_star)?;
    Ok(ZetaOptimum { zeta_star, delta_min, multimodal })
}

/// One flux point of a sweep; mirrors the CSV column contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub flux_fraction: f64,
    pub xi: f64,
    pub purity_first: f64,
    pub purity_second: f64,
    pub current_first_a: f64,
    pub current_second_a: f64,
    pub zeta_star: f64,
    pub residual_first: f64,
    pub residual_second: f64,
    pub gap_first: f64,
    pub gap_second: f64,
    pub basis_size: usize,
    /// Per-row failure note; the sweep continues past failed points.
    pub error: Option<String>,
}

impl SweepRecord {
    fn failed(flux_fraction: f64, xi: f64, basis_size: usize, message: String) -> Self {
        SweepRecord {
            flux_fraction,
            xi,
            purity_first: f64::NAN,
            purity_second: f64::NAN,
            current_first_a: f64::NAN,
            current_second_a: f64::NAN,
            zeta_star: f64::NAN,
            residual_first: f64::NAN,
            residual_second: f64::NAN,
            gap_first: f64::NAN,
            gap_second: f64::NAN,
            basis_size,
            error: Some(message),
        }
    }
}

fn solve_point(
    kind: GeneratorKind,
    scales: &DerivedScales,
    flux_fraction: f64,
    zeta: Option<ZetaSplit>,
    n: usize,
) -> Result<(SteadyStateResult, f64, f64)> {
    let gen: Superoperator = build_generator(kind, scales, flux_fraction, zeta, n)?;
    let result = steady_state(&gen)?;
    let p = purity(&result.rho)?;
    let i = screening_current(&result.rho, scales)?;
    Ok((result, p, i))
}

fn sweep_point(
    scales: &DerivedScales,
    flux_fraction: f64,
    n: usize,
    zeta_mode: ZetaMode,
) -> Result<SweepRecord> {
    let (first, purity_first, current_first) =
        solve_point(GeneratorKind::Lind1, scales, flux_fraction, None, n)?;

    // At xi = 0 every second-order correction carries a factor of xi, so the
    // second-order equation coincides with the first-order one and the
    // two-Lindblad split degenerates; report the first-order solution.
    if scales.xi == 0.0 {
        return Ok(SweepRecord {
            flux_fraction,
            xi: 0.0,
            purity_first,
            purity_second: purity_first,
            current_first_a: current_first,
            current_second_a: current_first,
            zeta_star: 1.0,
            residual_first: first.residual_norm,
            residual_second: first.residual_norm,
            gap_first: first.spectral_gap,
            gap_second: first.spectral_gap,
            basis_size: n,
            error: None,
        });
    }

    let zeta_star = match zeta_mode {
        ZetaMode::Fixed(z) => z,
        ZetaMode::PaperConvention => 1.0 - scales.xi,
        ZetaMode::Optimize => {
            zeta_optimize(scales, flux_fraction, n, Some(purity_first))?.zeta_star
        }
    };
    let split = ZetaSplit::new(zeta_star)?;
    let (second, purity_second, current_second) =
        solve_point(GeneratorKind::Lind2, scales, flux_fraction, Some(split), n)?;

    Ok(SweepRecord {
        flux_fraction,
        xi: scales.xi,
        purity_first,
        purity_second,
        current_first_a: current_first,
        current_second_a: current_second,
        zeta_star,
        residual_first: first.residual_norm,
        residual_second: second.residual_norm,
        gap_first: first.spectral_gap,
        gap_second: second.spectral_gap,
        basis_size: n,
        error: None,
    })
}

/// Sweep the flux grid at a fixed cutoff ratio; one record per grid point,
/// order-stable, with per-point failures captured rather than aborting.
pub fn flux_sweep(
    scales: &DerivedScales,
    flux_grid: &[f64],
    n: usize,
    zeta_mode: ZetaMode,
) -> Vec<SweepRecord> {
    flux_grid
        .par_iter()
        .map(|&phi| {
            sweep_point(scales, phi, n, zeta_mode)
                .unwrap_or_else(|e| SweepRecord::failed(phi, scales.xi, n, e.to_string()))
        })
        .collect()
}
