//! Truncated number-basis operators and matrix functions of Hermitian operators.
//!
//! The basis is the eigenbasis of the dimensionless harmonic part
//! (X^2 + P^2)/2 at the bare omega0; X = (a + a†)/sqrt(2), P = (a - a†)/(i sqrt(2)),
//! so [X, P] = i on the leading block of the truncated space.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Array2<C64>;

/// Relative tolerance for the Hermitian hint check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex operator in the truncated number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    mat: CMat,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wrap a matrix, checking the Hermitian hint against the entries.
    pub fn new(mat: CMat, hermitian_hint: bool) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimMismatch(mat.nrows(), mat.ncols()));
        }
        if hermitian_hint {
            let asym = hermitian_defect(&mat);
            let scale = max_abs(&mat).max(f64::MIN_POSITIVE);
            if asym > HERMITIAN_TOL * scale {
                return Err(Error::NonHermitian {
                    asymmetry: asym,
                    tolerance: HERMITIAN_TOL * scale,
                });
            }
        }
        Ok(OperatorMatrix { mat, hermitian: hermitian_hint })
    }

    pub fn hermitian(mat: CMat) -> Result<Self> {
        Self::new(mat, true)
    }

    pub fn general(mat: CMat) -> Result<Self> {
        Self::new(mat, false)
    }

    pub fn zeros(n: usize) -> Self {
        OperatorMatrix { mat: CMat::zeros((n, n)), hermitian: true }
    }

    pub fn identity(n: usize) -> Self {
        OperatorMatrix { mat: CMat::eye(n), hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn is_hermitian_hint(&self) -> bool {
        self.hermitian
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    /// Eigendecomposition; requires the Hermitian hint.
    pub fn eigh(&self) -> Result<(Array1<f64>, CMat)> {
        self.require_hermitian()?;
        let (w, v) = self.mat.eigh(UPLO::Lower)?;
        // The LAPACK bridge hands back eigenvectors of the conjugate matrix
        // for row-major storage (V diag(w) V^dag reconstructs conj(A));
        // conjugating restores A = V diag(w) V^dag.
        Ok((w, v.mapv(|z| z.conj())))
    }

    fn require_hermitian(&self) -> Result<()> {
        let asym = hermitian_defect(&self.mat);
        let scale = max_abs(&self.mat).max(f64::MIN_POSITIVE);
        if asym > 1e-10 * scale {
            return Err(Error::NonHermitian { asymmetry: asym, tolerance: 1e-10 * scale });
        }
        Ok(())
    }

    /// Dump as CSV: header line `N`, then row-major `re,im` pairs.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.dim())?;
        for row in self.mat.rows() {
            let cells: Vec<String> =
                row.iter().map(|z| format!("{:.16e},{:.16e}", z.re, z.im)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn hermitian_defect(a: &CMat) -> f64 {
    let adag = dagger(a);
    (a - &adag).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &CMat) -> C64 {
    a.diag().sum()
}

/// Annihilation and creation operators on an N-level truncation.
pub fn build_ladder(n: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if n < 2 {
        return Err(Error::BasisTooSmall(n));
    }
    let mut a = CMat::zeros((n, n));
    for k in 1..n {
        a[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    let adag = dagger(&a);
    Ok((OperatorMatrix::general(a)?, OperatorMatrix::general(adag)?))
}

/// Dimensionless quadratures X = (a + a†)/sqrt(2), P = (a - a†)/(i sqrt(2)).
pub fn build_xp(n: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let (a, adag) = build_ladder(n)?;
    let inv_sqrt2 = C64::new(1.0 / 2f64.sqrt(), 0.0);
    let x = (a.matrix() + adag.matrix()) * inv_sqrt2;
    // (a - a†)/(i sqrt(2)) = -i (a - a†)/sqrt(2)
    let p = (a.matrix() - adag.matrix()) * inv_sqrt2 * C64::new(0.0, -1.0);
    Ok((OperatorMatrix::hermitian(x)?, OperatorMatrix::hermitian(p)?))
}

/// Evaluate f(A + phase * I) through the spectral decomposition of A.
pub fn hermitian_function<F>(a: &OperatorMatrix, f: F, phase: f64) -> Result<OperatorMatrix>
where
    F: Fn(f64) -> f64,
{
    let (w, v) = a.eigh()?;
    let n = a.dim();
    let vdag = dagger(&v);
    let mut scaled = CMat::zeros((n, n));
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let fw = C64::new(f(w[j] + phase), 0.0);
        col.assign(&(&v.column(j).to_owned() * fw));
    }
    let result = scaled.dot(&vdag);
    // f real on a real spectrum keeps the result Hermitian up to roundoff;
    // symmetrize to keep the hint valid.
    let result = (&result + &dagger(&result)) * C64::new(0.5, 0.0);
    OperatorMatrix::hermitian(result)
}

/// AB - BA.
pub fn commutator(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimMismatch(a.nrows(), b.nrows()));
    }
    Ok(a.dot(b) - b.dot(a))
}

/// AB + BA.
pub fn anticommutator(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimMismatch(a.nrows(), b.nrows()));
    }
    Ok(a.dot(b) + b.dot(a))
}
