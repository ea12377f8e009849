//! Power-series expansion of the Heisenberg-picture flux operator and the
//! truncated dissipator sums built from it.
//!
//! Conventions: H in hbar*omega0 units, tau in 1/omega0 units, so the
//! dissipator weights n!/Omega^n become pure xi^n factors.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::sin_operator;
use crate::operators::{build_xp, commutator, dagger, CMat, OperatorMatrix};
use crate::params::DerivedScales;

/// Highest nested-commutator order kept available (convergence experiments).
pub const MAX_BCH_ORDER: usize = 4;

/// n-th series coefficient A_n = (1/n!) [-iH, [... [-iH, X]]] (n nestings).
pub fn bch_coefficient(n: usize, h: &OperatorMatrix, x: &OperatorMatrix) -> Result<OperatorMatrix> {
    if n > MAX_BCH_ORDER {
        return Err(Error::UnsupportedOrder(n, MAX_BCH_ORDER));
    }
    let minus_i_h = h.matrix() * C64::new(0.0, -1.0);
    let mut term = x.matrix().clone();
    let mut factorial = 1.0;
    for k in 1..=n {
        term = commutator(&minus_i_h, &term)?;
        factorial *= k as f64;
    }
    let coeff = term * C64::new(1.0 / factorial, 0.0);
    // each nesting of [-iH, .] preserves Hermiticity of the operand
    OperatorMatrix::hermitian(coeff)
}

/// Truncated dissipator sum Sum_n (n! xi^n) A_n in closed form:
/// order 1: X - xi P; order 2 subtracts xi^2 (X + sqrt(beta nu/omega0) S).
pub fn truncated_flux_series(
    order: usize,
    scales: &DerivedScales,
    flux_fraction: f64,
    n: usize,
) -> Result<OperatorMatrix> {
    if order == 0 || order > 2 {
        return Err(Error::UnsupportedOrder(order, 2));
    }
    let (x, p) = build_xp(n)?;
    let xi = scales.xi;
    let mut sum = x.matrix() - &(p.matrix() * C64::new(xi, 0.0));
    if order == 2 {
        let s = sin_operator(scales, flux_fraction, n)?;
        let second = x.matrix() + &(s.matrix() * C64::new((scales.beta * scales.nu_ratio).sqrt(), 0.0));
        sum = sum - second * C64::new(xi * xi, 0.0);
    }
    OperatorMatrix::hermitian(sum)
}

/// Exact Heisenberg-picture operator X(-tau) = e^{-iH tau} X e^{iH tau},
/// through the spectral decomposition of H.
pub fn heisenberg_flux_exact(
    tau: f64,
    h: &OperatorMatrix,
    x: &OperatorMatrix,
) -> Result<OperatorMatrix> {
    let (w, v) = h.eigh()?;
    let dim = h.dim();
    let mut u = CMat::zeros((dim, dim));
    for (j, mut col) in u.columns_mut().into_iter().enumerate() {
        let phase = C64::from_polar(1.0, -w[j] * tau);
        col.assign(&(&v.column(j).to_owned() * phase));
    }
    // U = V e^{-i Lambda tau} V†; X(-tau) = U X U†
    let u = u.dot(&dagger(&v));
    let result = u.dot(x.matrix()).dot(&dagger(&u));
    OperatorMatrix::hermitian(result)
}
