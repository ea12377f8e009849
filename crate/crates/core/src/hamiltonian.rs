//! Translated-basis SQUID Hamiltonian, inductance renormalization, squeezing
//! term and Bogoliubov frequency shift.
//!
//! Everything is dimensionless: energies in hbar*omega0, quadratures X, P at
//! the bare omega0. Renormalization enters as a multiplicative (1 - lambda) on
//! the X^2 coefficient, keeping the basis fixed across comparisons.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    anticommutator, build_xp, hermitian_function, CMat, OperatorMatrix,
};
use crate::params::DerivedScales;

/// Which inductance renormalization to fold into the quadratic coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RenormalizationOrder {
    None,
    First,
    Second,
}

/// Options for the system Hamiltonian builder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianConfig {
    /// External flux as a fraction of the flux quantum.
    pub flux_fraction: f64,
    pub renormalization_order: RenormalizationOrder,
    pub include_squeeze: bool,
    pub include_second_order_sin_term: bool,
}

impl HamiltonianConfig {
    pub fn bare(flux_fraction: f64) -> Self {
        HamiltonianConfig {
            flux_fraction,
            renormalization_order: RenormalizationOrder::None,
            include_squeeze: false,
            include_second_order_sin_term: false,
        }
    }
}

/// First-order inductance shift lambda = x/(1+x), x = 2 Omega gamma / omega0^2.
///
/// In the ideal-cutoff limit (Omega infinite, xi = 0) the shift is dropped:
/// that series is the standard annihilator-Lindblad model with the bare ring.
pub fn lambda_first_order(gamma: f64, omega_cut: f64, omega0: f64) -> Result<f64> {
    lambda_with_correction(gamma, omega_cut, omega0, 1.0)
}

/// Second-order shift: x -> x (1 - omega0^2/Omega^2) in lambda = x/(1+x).
pub fn lambda_second_order(gamma: f64, omega_cut: f64, omega0: f64) -> Result<f64> {
    let correction = if omega_cut.is_infinite() {
        1.0
    } else {
        1.0 - (omega0 / omega_cut).powi(2)
    };
    lambda_with_correction(gamma, omega_cut, omega0, correction)
}

fn lambda_with_correction(
    gamma: f64,
    omega_cut: f64,
    omega0: f64,
    correction: f64,
) -> Result<f64> {
    if !(omega0 > 0.0) {
        return Err(Error::ParamDomain { field: "omega0", value: omega0 });
    }
    if !(omega_cut > 0.0) {
        return Err(Error::ParamDomain { field: "cutoff_frequency", value: omega_cut });
    }
    if gamma < 0.0 {
        return Err(Error::ParamDomain { field: "damping_rate", value: gamma });
    }
    if gamma == 0.0 || omega_cut.is_infinite() {
        return Ok(0.0);
    }
    let x = 2.0 * omega_cut * gamma / (omega0 * omega0) * correction;
    Ok(x / (1.0 + x))
}

fn lambda_for(scales: &DerivedScales, order: RenormalizationOrder) -> Result<f64> {
    let omega_cut = if scales.xi == 0.0 { f64::INFINITY } else { scales.omega0 / scales.xi };
    let gamma = scales.gamma_over_omega0 * scales.omega0;
    match order {
        RenormalizationOrder::None => Ok(0.0),
        RenormalizationOrder::First => lambda_first_order(gamma, omega_cut, scales.omega0),
        RenormalizationOrder::Second => lambda_second_order(gamma, omega_cut, scales.omega0),
    }
}

/// sin(sqrt(beta omega0/nu) X + 2 pi phi_x), the dissipator sine operator.
pub fn sin_operator(scales: &DerivedScales, flux_fraction: f64, n: usize) -> Result<OperatorMatrix> {
    let (x, _) = build_xp(n)?;
    let c = (scales.beta / scales.nu_ratio).sqrt();
    let phase = 2.0 * std::f64::consts::PI * flux_fraction;
    hermitian_function(&x, move |v| (c * v + phase).sin(), 0.0)
}

/// System Hamiltonian in the translated (external flux) basis, hbar*omega0 units:
/// H = P^2/2 + (1 - lambda) X^2/2 - (nu/omega0) cos(sqrt(beta omega0/nu) X + 2 pi phi_x),
/// optionally plus the squeeze and second-order sine terms.
pub fn build_system_hamiltonian(
    scales: &DerivedScales,
    config: &HamiltonianConfig,
    n: usize,
) -> Result<OperatorMatrix> {
    let lambda = lambda_for(scales, config.renormalization_order)?;
    if lambda >= 1.0 {
        return Err(Error::RenormalizationTooLarge(lambda));
    }
    let (x, p) = build_xp(n)?;
    let half = C64::new(0.5, 0.0);
    let mut h = p.matrix().dot(p.matrix()) * half
        + x.matrix().dot(x.matrix()) * half * C64::new(1.0 - lambda, 0.0);
    if scales.nu_ratio != 0.0 {
        let c = (scales.beta / scales.nu_ratio).sqrt();
        let phase = 2.0 * std::f64::consts::PI * config.flux_fraction;
        let cos_op = hermitian_function(&x, move |v| (c * v + phase).cos(), 0.0)?;
        h = h - cos_op.matrix() * C64::new(scales.nu_ratio, 0.0);
    }
    if config.include_squeeze {
        let squeeze = squeeze_term(scales.gamma_over_omega0, n)?;
        h = h + squeeze.matrix();
    }
    if config.include_second_order_sin_term {
        // The completion scan (verify module) shows the commutator structure
        // fixes this term's weight at gamma/omega0 times the printed
        // sqrt(beta xi nu/Omega); the extra damping factor enters here.
        let sin_term = second_order_sin_hamiltonian_term(scales, config.flux_fraction, n)?;
        h = h + sin_term.matrix() * C64::new(scales.gamma_over_omega0, 0.0);
    }
    OperatorMatrix::hermitian(h)
}

/// Squeeze term (gamma/2 omega0)(XP + PX) in hbar*omega0 units.
pub fn squeeze_term(gamma_over_omega0: f64, n: usize) -> Result<OperatorMatrix> {
    let (x, p) = build_xp(n)?;
    let xp_px = anticommutator(x.matrix(), p.matrix())?;
    OperatorMatrix::hermitian(xp_px * C64::new(gamma_over_omega0 / 2.0, 0.0))
}

/// Bogoliubov-shifted frequency omega * sqrt(1 - gamma^2/omega^2).
pub fn bogoliubov_shift(omega: f64, gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::ParamDomain { field: "damping_rate", value: gamma });
    }
    if gamma > omega {
        return Err(Error::Overdamped { gamma, omega });
    }
    Ok(omega * (1.0 - (gamma / omega).powi(2)).sqrt())
}

/// Symmetrized second-order Hamiltonian sine term,
/// sqrt(beta xi nu/Omega) * (X S + S X)/2 with S the dissipator sine operator.
pub fn second_order_sin_hamiltonian_term(
    scales: &DerivedScales,
    flux_fraction: f64,
    n: usize,
) -> Result<OperatorMatrix> {
    let (x, _) = build_xp(n)?;
    let s = sin_operator(scales, flux_fraction, n)?;
    let sym = anticommutator(x.matrix(), s.matrix())? * C64::new(0.5, 0.0);
    // sqrt(beta xi nu/Omega) = xi sqrt(beta nu/omega0)
    let coeff = scales.xi * (scales.beta * scales.nu_ratio).sqrt();
    OperatorMatrix::hermitian(sym * C64::new(coeff, 0.0))
}

/// Parity operator diag((-1)^n) in the number basis; conjugation realizes X -> -X.
pub fn parity_operator(n: usize) -> CMat {
    let mut pi = CMat::zeros((n, n));
    for k in 0..n {
        pi[[k, k]] = C64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    pi
}
