//! First- and second-order master-equation generators: the Caldeira-Leggett
//! forms, their Lindblad completions, and dense superoperator assembly.
//!
//! Dimensionless throughout: time in 1/omega0, energies in hbar*omega0,
//! quadratures X and P at the bare omega0. Vectorization is column-stacking:
//! vec(rho)[i + N j] = rho[i, j], so vec(A rho B) = (B^T (x) A) vec(rho).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_system_hamiltonian, second_order_sin_hamiltonian_term, sin_operator, HamiltonianConfig,
    RenormalizationOrder,
};
use crate::operators::{build_xp, dagger, fro_norm, CMat, OperatorMatrix};
use crate::params::DerivedScales;

/// Which generator a superoperator represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    /// First-order Caldeira-Leggett equation.
    Cl1,
    /// Second-order Caldeira-Leggett equation.
    Cl2,
    /// First-order Lindblad completion.
    Lind1,
    /// Second-order Lindblad completion (two Lindblads).
    Lind2,
}

impl GeneratorKind {
    pub fn is_lindblad(self) -> bool {
        matches!(self, GeneratorKind::Lind1 | GeneratorKind::Lind2)
    }

    pub fn order(self) -> usize {
        match self {
            GeneratorKind::Cl1 | GeneratorKind::Lind1 => 1,
            GeneratorKind::Cl2 | GeneratorKind::Lind2 => 2,
        }
    }
}

/// Effective Hamiltonian plus Lindblad operators for Eq.-of-motion assembly.
#[derive(Debug, Clone)]
pub struct LindbladSpec {
    pub h_eff: OperatorMatrix,
    pub lindblads: Vec<OperatorMatrix>,
    pub kind: GeneratorKind,
}

/// Dense N^2 x N^2 generator acting on vectorized density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    mat: Array2<C64>,
    dim: usize,
    pub kind: GeneratorKind,
}

impl Superoperator {
    pub fn new(mat: Array2<C64>, dim: usize, kind: GeneratorKind) -> Result<Self> {
        if mat.nrows() != dim * dim || mat.ncols() != dim * dim {
            return Err(Error::DimMismatch(mat.nrows(), dim * dim));
        }
        Ok(Superoperator { mat, dim, kind })
    }

    /// Hilbert-space dimension N (the matrix is N^2 x N^2).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    /// Apply to a density matrix.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let v = vectorize(rho);
        unvectorize(&self.mat.dot(&v), self.dim)
    }

    pub fn fro_norm(&self) -> f64 {
        fro_norm(&self.mat)
    }
}

/// Column-stacking vectorization.
pub fn vectorize(rho: &CMat) -> Array1<C64> {
    let n = rho.nrows();
    Array1::from_shape_fn(n * n, |k| rho[[k % n, k / n]])
}

/// Inverse of `vectorize`.
pub fn unvectorize(v: &Array1<C64>, n: usize) -> CMat {
    CMat::from_shape_fn((n, n), |(i, j)| v[i + n * j])
}

/// Kronecker product, row-major convention matching column-stacking vec.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    let mut out = CMat::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.slice_mut(ndarray::s![i * rb..(i + 1) * rb, j * cb..(j + 1) * cb]);
            block.assign(&(b * aij));
        }
    }
    out
}

/// Superoperator for rho -> A rho.
pub fn left_mul_super(a: &CMat) -> CMat {
    kron(&CMat::eye(a.nrows()), a)
}

/// Superoperator for rho -> rho B.
pub fn right_mul_super(b: &CMat) -> CMat {
    kron(&b.t().to_owned(), &CMat::eye(b.nrows()))
}

/// Superoperator for [A, rho].
pub fn commutator_super(a: &CMat) -> CMat {
    left_mul_super(a) - right_mul_super(a)
}

/// Superoperator for [A, {B, rho}].
pub fn comm_acomm_super(a: &CMat, b: &CMat) -> CMat {
    let ab = a.dot(b);
    let ba = b.dot(a);
    left_mul_super(&ab) + kron(&b.t().to_owned(), a) - kron(&a.t().to_owned(), b)
        - right_mul_super(&ba)
}

/// Superoperator for [A, [B, rho]].
pub fn comm_comm_super(a: &CMat, b: &CMat) -> CMat {
    let ab = a.dot(b);
    let ba = b.dot(a);
    left_mul_super(&ab) - kron(&b.t().to_owned(), a) - kron(&a.t().to_owned(), b)
        + right_mul_super(&ba)
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

const I: C64 = C64::new(0.0, 1.0);

/// First-order Caldeira-Leggett generator (renormalization absorbed into H):
/// d rho/ds = -i[H1, rho] - i g [X,{P,rho}] - (g/2)[X,[X,rho]] + (g xi/2)[X,[P,rho]].
pub fn build_cl_first(
    scales: &DerivedScales,
    flux_fraction: f64,
    n: usize,
) -> Result<Superoperator> {
    let g = scales.gamma_over_omega0;
    let config = HamiltonianConfig {
        flux_fraction,
        renormalization_order: RenormalizationOrder::First,
        include_squeeze: false,
        include_second_order_sin_term: false,
    };
    let h = build_system_hamiltonian(scales, &config, n)?;
    let (x, p) = build_xp(n)?;
    let mat = commutator_super(h.matrix()) * (-I)
        + comm_acomm_super(x.matrix(), p.matrix()) * (-I * c(g))
        + comm_comm_super(x.matrix(), x.matrix()) * c(-g / 2.0)
        + comm_comm_super(x.matrix(), p.matrix()) * c(g * scales.xi / 2.0);
    Superoperator::new(mat, n, GeneratorKind::Cl1)
}

/// Second-order Caldeira-Leggett generator with the sine dissipator terms:
/// adds -i g xi sqrt(beta nu/w0) [X,{S,rho}], scales the noise by (1 - xi^2)
/// and adds +(g/2) xi^2 sqrt(beta nu/w0) [X,[S,rho]].
pub fn build_cl_second(
    scales: &DerivedScales,
    flux_fraction: f64,
    n: usize,
) -> Result<Superoperator> {
    let g = scales.gamma_over_omega0;
    let xi = scales.xi;
    let config = HamiltonianConfig {
        flux_fraction,
        renormalization_order: RenormalizationOrder::Second,
        include_squeeze: false,
        include_second_order_sin_term: false,
    };
    let h = build_system_hamiltonian(scales, &config, n)?;
    let (x, p) = build_xp(n)?;
    let s = sin_operator(scales, flux_fraction, n)?;
    let sin_weight = (scales.beta * scales.nu_ratio).sqrt();
    let mat = commutator_super(h.matrix()) * (-I)
        + comm_acomm_super(x.matrix(), p.matrix()) * (-I * c(g))
        + comm_acomm_super(x.matrix(), s.matrix()) * (-I * c(g * xi * sin_weight))
        + comm_comm_super(x.matrix(), x.matrix()) * c(-g / 2.0 * (1.0 - xi * xi))
        + comm_comm_super(x.matrix(), p.matrix()) * c(g * xi / 2.0)
        + comm_comm_super(x.matrix(), s.matrix()) * c(g / 2.0 * xi * xi * sin_weight);
    Superoperator::new(mat, n, GeneratorKind::Cl2)
}

/// First-order Lindblad completion: L = sqrt(g)[X + (i - xi/2) P],
/// H_eff = H1 + (g/2)(XP + PX).
pub fn build_lindblad_first(
    scales: &DerivedScales,
    flux_fraction: f64,
    n: usize,
) -> Result<LindbladSpec> {
    let g = scales.gamma_over_omega0;
    let config = HamiltonianConfig {
        flux_fraction,
        renormalization_order: RenormalizationOrder::First,
        include_squeeze: true,
        include_second_order_sin_term: false,
    };
    let h_eff = build_system_hamiltonian(scales, &config, n)?;
    let (x, p) = build_xp(n)?;
    let l = x.matrix() * c(g.sqrt())
        + p.matrix() * (c(g.sqrt()) * (I - c(scales.xi / 2.0)));
    Ok(LindbladSpec {
        h_eff,
        lindblads: vec![OperatorMatrix::general(l)?],
        kind: GeneratorKind::Lind1,
    })
}

/// Weighting of the shared (1 - xi^2)[X,[X,rho]] noise between the two
/// second-order Lindblads. The reported zeta follows the prose convention
/// (fraction assigned to L2 is 1 - zeta); zeta = 1 - xi reproduces the
/// printed second-order Lindblad pair exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaSplit {
    zeta: f64,
}

impl ZetaSplit {
    pub fn new(zeta: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta < 1.0) {
            return Err(Error::DegenerateZetaSplit(zeta));
        }
        Ok(ZetaSplit { zeta })
    }

    /// The split that reproduces the printed equation at cutoff ratio xi.
    pub fn paper_convention(xi: f64) -> Result<Self> {
        ZetaSplit::new(1.0 - xi)
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Fraction of the shared noise carried by L2.
    pub fn l2_fraction(&self) -> f64 {
        1.0 - self.zeta
    }
}

/// Second-order Lindblad completion: two Lindblads
///   L1 = sqrt(g)[ a1 X + (i - xi/2)/a1 P ],        a1^2 = (1-z')(1-xi^2)
///   L2 = sqrt(g)[ a2 X + (i - xi/2) xi w S / a2 ], a2^2 = z'(1-xi^2)
/// with z' the L2 noise fraction, w = sqrt(beta nu/omega0) and S the sine
/// operator; H_eff includes the squeeze and symmetrized sine terms. The
/// sine weights keep the dissipative part equal to the second-order
/// Caldeira-Leggett form for every split.
pub fn build_lindblad_second(
    scales: &DerivedScales,
    flux_fraction: f64,
    zeta: ZetaSplit,
    n: usize,
) -> Result<LindbladSpec> {
    let g = scales.gamma_over_omega0;
    let xi = scales.xi;
    let zp = zeta.l2_fraction();
    let config = HamiltonianConfig {
        flux_fraction,
        renormalization_order: RenormalizationOrder::Second,
        include_squeeze: true,
        include_second_order_sin_term: true,
    };
    let h_eff = build_system_hamiltonian(scales, &config, n)?;
    let (x, p) = build_xp(n)?;
    let s = sin_operator(scales, flux_fraction, n)?;
    let sin_weight = (scales.beta * scales.nu_ratio).sqrt();
    let one_m_xi2 = 1.0 - xi * xi;
    let a1 = ((1.0 - zp) * one_m_xi2).sqrt();
    let a2 = (zp * one_m_xi2).sqrt();
    let coeff_p = (I - c(xi / 2.0)) / c(a1);
    let coeff_s = (I - c(xi / 2.0)) * c(xi * sin_weight / a2);
    let l1 = x.matrix() * c(g.sqrt() * a1) + p.matrix() * (c(g.sqrt()) * coeff_p);
    let l2 = x.matrix() * c(g.sqrt() * a2) + s.matrix() * (c(g.sqrt()) * coeff_s);
    Ok(LindbladSpec {
        h_eff,
        lindblads: vec![OperatorMatrix::general(l1)?, OperatorMatrix::general(l2)?],
        kind: GeneratorKind::Lind2,
    })
}

/// Matrix representation of -i[H, .] + Sum_j (L_j . L_j† - {L_j†L_j, .}/2).
pub fn assemble_liouvillian(spec: &LindbladSpec) -> Result<Superoperator> {
    let n = spec.h_eff.dim();
    let mut mat = commutator_super(spec.h_eff.matrix()) * (-I);
    for l in &spec.lindblads {
        if l.dim() != n {
            return Err(Error::DimMismatch(l.dim(), n));
        }
        let lm = l.matrix();
        let ldag = dagger(lm);
        let ldl = ldag.dot(lm);
        mat = mat + kron(&lm.mapv(|z| z.conj()), lm)
            - left_mul_super(&ldl) * c(0.5)
            - right_mul_super(&ldl) * c(0.5);
    }
    Superoperator::new(mat, n, spec.kind)
}

/// Build any of the four generators as a superoperator.
pub fn build_generator(
    kind: GeneratorKind,
    scales: &DerivedScales,
    flux_fraction: f64,
    zeta: Option<ZetaSplit>,
    n: usize,
) -> Result<Superoperator> {
    match kind {
        GeneratorKind::Cl1 => build_cl_first(scales, flux_fraction, n),
        GeneratorKind::Cl2 => build_cl_second(scales, flux_fraction, n),
        GeneratorKind::Lind1 => {
            assemble_liouvillian(&build_lindblad_first(scales, flux_fraction, n)?)
        }
        GeneratorKind::Lind2 => {
            let zeta = zeta.map(Ok).unwrap_or_else(|| ZetaSplit::paper_convention(scales.xi))?;
            assemble_liouvillian(&build_lindblad_second(scales, flux_fraction, zeta, n)?)
        }
    }
}

/// Outcome of fitting the Lindblad-minus-CL defect onto double-commutator
/// superoperators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefectReport {
    pub order: usize,
    /// Fitted coefficients, keyed by basis-term name.
    pub coefficients: Vec<(String, f64)>,
    /// Residual Frobenius norm over defect Frobenius norm after the fit.
    pub relative_residual: f64,
    /// Defect norm relative to the generator norm (how big the completion is).
    pub defect_scale: f64,
    /// Order 2 only: the Hamiltonian sine-term weight (units of the printed
    /// sqrt(beta xi nu/Omega)) that minimizes the defect residual.
    pub optimal_sin_coefficient: Option<f64>,
}

/// Compare a Lindblad completion against the same-order Caldeira-Leggett
/// generator and fit the difference to the expected completion terms.
pub fn verify_lindblad_consistency(
    order: usize,
    scales: &DerivedScales,
    flux_fraction: f64,
    zeta: Option<ZetaSplit>,
    n: usize,
) -> Result<DefectReport> {
    let (lind, cl) = match order {
        1 => (
            build_generator(GeneratorKind::Lind1, scales, flux_fraction, None, n)?,
            build_generator(GeneratorKind::Cl1, scales, flux_fraction, None, n)?,
        ),
        2 => (
            build_generator(GeneratorKind::Lind2, scales, flux_fraction, zeta, n)?,
            build_generator(GeneratorKind::Cl2, scales, flux_fraction, None, n)?,
        ),
        _ => return Err(Error::UnsupportedOrder(order, 2)),
    };
    let delta = lind.matrix() - cl.matrix();
    let (x, p) = build_xp(n)?;
    // [X,P] deviates from iI in the truncation corner; the symmetrized X-P
    // cross noise leaves that edge piece behind as a commutator term.
    let xp = x.matrix().dot(p.matrix()) - p.matrix().dot(x.matrix());
    let mut basis: Vec<(String, CMat)> = vec![
        ("[P,[P,.]]".to_string(), comm_comm_super(p.matrix(), p.matrix())),
        ("[[X,P],.]".to_string(), commutator_super(&xp)),
    ];
    if order == 2 {
        let s = sin_operator(scales, flux_fraction, n)?;
        basis.push(("[S,[S,.]]".to_string(), comm_comm_super(s.matrix(), s.matrix())));
        basis.push((
            "[P,[S,.]]+[S,[P,.]]".to_string(),
            comm_comm_super(p.matrix(), s.matrix()) + comm_comm_super(s.matrix(), p.matrix()),
        ));
    }
    let (coeffs, residual) = fit_superoperator(&delta, &basis);
    let coefficients: Vec<(String, f64)> =
        basis.iter().map(|(name, _)| name.clone()).zip(coeffs).collect();
    let defect_norm = fro_norm(&delta);
    let optimal_sin_coefficient = if order == 2 {
        Some(scan_sin_coefficient(scales, flux_fraction, zeta, n)?)
    } else {
        None
    };
    Ok(DefectReport {
        order,
        coefficients,
        relative_residual: residual / defect_norm.max(f64::MIN_POSITIVE),
        defect_scale: defect_norm / lind.fro_norm(),
        optimal_sin_coefficient,
    })
}

/// Least-squares fit of a superoperator onto real multiples of basis
/// superoperators; returns (coefficients, residual Frobenius norm).
fn fit_superoperator(delta: &Array2<C64>, basis: &[(String, CMat)]) -> (Vec<f64>, f64) {
    let k = basis.len();
    // normal equations over the real inner product Re<A, B>
    let mut gram = Array2::<f64>::zeros((k, k));
    let mut rhs = Array1::<f64>::zeros(k);
    let inner = |a: &Array2<C64>, b: &Array2<C64>| -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
    };
    for i in 0..k {
        for j in 0..k {
            gram[[i, j]] = inner(&basis[i].1, &basis[j].1);
        }
        rhs[i] = inner(&basis[i].1, delta);
    }
    let coeffs = solve_small_real(&gram, &rhs);
    let mut residual = delta.clone();
    for (i, (_, b)) in basis.iter().enumerate() {
        residual = residual - b * c(coeffs[i]);
    }
    (coeffs.to_vec(), fro_norm(&residual))
}

/// Gaussian elimination for the tiny normal-equation systems.
fn solve_small_real(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let k = a.nrows();
    let mut m = a.clone();
    let mut v = b.clone();
    for col in 0..k {
        let mut pivot = col;
        for r in col + 1..k {
            if m[[r, col]].abs() > m[[pivot, col]].abs() {
                pivot = r;
            }
        }
        if pivot != col {
            for cc in 0..k {
                m.swap([col, cc], [pivot, cc]);
            }
            v.swap(col, pivot);
        }
        let d = m[[col, col]];
        if d == 0.0 {
            continue;
        }
        for r in col + 1..k {
            let f = m[[r, col]] / d;
            for cc in col..k {
                m[[r, cc]] -= f * m[[col, cc]];
            }
            v[r] -= f * v[col];
        }
    }
    let mut out = Array1::<f64>::zeros(k);
    for col in (0..k).rev() {
        let mut acc = v[col];
        for cc in col + 1..k {
            acc -= m[[col, cc]] * out[cc];
        }
        out[col] = if m[[col, col]] != 0.0 { acc / m[[col, col]] } else { 0.0 };
    }
    out
}

/// Scan the weight of the Hamiltonian sine term (in units of the printed
/// sqrt(beta xi nu/Omega)) for the value minimizing the completion defect
/// after the double-commutator fit. The commutator algebra puts the optimum
/// at gamma/omega0; the printed coefficient corresponds to weight 1.
fn scan_sin_coefficient(
    scales: &DerivedScales,
    flux_fraction: f64,
    zeta: Option<ZetaSplit>,
    n: usize,
) -> Result<f64> {
    let zeta = zeta.map(Ok).unwrap_or_else(|| ZetaSplit::paper_convention(scales.xi))?;
    let cl = build_cl_second(scales, flux_fraction, n)?;
    let spec = build_lindblad_second(scales, flux_fraction, zeta, n)?;
    // strip the sine term that build_lindblad_second folded into H_eff
    let sin_term = second_order_sin_hamiltonian_term(scales, flux_fraction, n)?;
    let g = scales.gamma_over_omega0;
    let base_h =
        spec.h_eff.matrix() - &(sin_term.matrix() * c(g));
    let (_, p) = build_xp(n)?;
    let s = sin_operator(scales, flux_fraction, n)?;
    let (x, _) = build_xp(n)?;
    let xp = x.matrix().dot(p.matrix()) - p.matrix().dot(x.matrix());
    let basis = vec![
        ("pp".to_string(), comm_comm_super(p.matrix(), p.matrix())),
        ("ss".to_string(), comm_comm_super(s.matrix(), s.matrix())),
        (
            "ps".to_string(),
            comm_comm_super(p.matrix(), s.matrix()) + comm_comm_super(s.matrix(), p.matrix()),
        ),
        ("xp".to_string(), commutator_super(&xp)),
    ];
    let sin_super = commutator_super(sin_term.matrix()) * (-I);
    let mut dissipator = commutator_super(&base_h) * (-I);
    for l in &spec.lindblads {
        let lm = l.matrix();
        let ldag = dagger(lm);
        let ldl = ldag.dot(lm);
        dissipator = dissipator + kron(&lm.mapv(|z| z.conj()), lm)
            - left_mul_super(&ldl) * c(0.5)
            - right_mul_super(&ldl) * c(0.5);
    }
    let residual_at = |w: f64| -> f64 {
        let delta = &dissipator + &(&sin_super * c(w)) - cl.matrix();
        fit_superoperator(&delta, &basis).1
    };
    // coarse bracket in [0, 1.5] of the printed weight, then golden section
    let mut best_w = 0.0;
    let mut best_r = f64::INFINITY;
    for k in 0..=60 {
        let w = 1.5 * k as f64 / 60.0;
        let r = residual_at(w);
        if r < best_r {
            best_r = r;
            best_w = w;
        }
    }
    let span = 1.5 / 60.0;
    let (mut lo, mut hi) = ((best_w - span).max(0.0), best_w + span);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut m1 = hi - phi * (hi - lo);
    let mut m2 = lo + phi * (hi - lo);
    let mut f1 = residual_at(m1);
    let mut f2 = residual_at(m2);
    while hi - lo > 1e-8 {
        if f1 <= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - phi * (hi - lo);
            f1 = residual_at(m1);
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + phi * (hi - lo);
            f2 = residual_at(m2);
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::parity_operator;
    use crate::operators::max_abs;
    use crate::params::{derive_scales, BathParams, SquidParams};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn paper_scales() -> DerivedScales {
        let squid = SquidParams::paper_defaults();
        let bath = BathParams {
            damping_rate: 1e-3 * 8.164_965_809_277_26e11,
            cutoff_frequency: 10.0 * 8.164_965_809_277_26e11,
            temperature: 0.0,
        };
        derive_scales(&squid, &bath).unwrap()
    }

    fn random_density(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Array2::from_shape_fn((n, n), |_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = m.dot(&dagger(&m));
        let tr = crate::operators::trace(&h);
        h / tr
    }

    fn rel_err(a: &CMat, b: &CMat) -> f64 {
        fro_norm(&(a - b)) / fro_norm(b).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn vectorize_round_trip_and_kron_identity() {
        let n = 7;
        let rho = random_density(n, 1);
        let back = unvectorize(&vectorize(&rho), n);
        assert!(rel_err(&back, &rho) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Array2::from_shape_fn((n, n), |_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let b = Array2::from_shape_fn((n, n), |_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let direct = a.dot(&rho).dot(&b);
        let via_kron = unvectorize(&kron(&b.t().to_owned(), &a).dot(&vectorize(&rho)), n);
        assert!(rel_err(&via_kron, &direct) < 1e-13);
    }

    #[test]
    fn cl_first_matches_direct_evaluation() {
        let scales = paper_scales();
        let n = 12;
        let gen = build_cl_first(&scales, 0.3, n).unwrap();
        let rho = random_density(n, 3);
        let g = scales.gamma_over_omega0;
        let config = HamiltonianConfig {
            flux_fraction: 0.3,
            renormalization_order: RenormalizationOrder::First,
            include_squeeze: false,
            include_second_order_sin_term: false,
        };
        let h = build_system_hamiltonian(&scales, &config, n).unwrap();
        let (x, p) = build_xp(n).unwrap();
        let (hm, xm, pm) = (h.matrix(), x.matrix(), p.matrix());
        let comm = |a: &CMat, b: &CMat| a.dot(b) - b.dot(a);
        let acop = pm.dot(&rho) + rho.dot(pm);
        let direct = comm(hm, &rho) * (-I)
            + (xm.dot(&acop) - acop.dot(xm)) * (-I * c(g))
            + comm(xm, &comm(xm, &rho)) * c(-g / 2.0)
            + comm(xm, &comm(pm, &rho)) * c(g * scales.xi / 2.0);
        assert!(rel_err(&gen.apply(&rho), &direct) < 1e-12);
    }

    #[test]
    fn cl_second_matches_direct_evaluation() {
        let scales = paper_scales();
        let n = 12;
        let gen = build_cl_second(&scales, 0.45, n).unwrap();
        let rho = random_density(n, 4);
        let g = scales.gamma_over_omega0;
        let xi = scales.xi;
        let w = (scales.beta * scales.nu_ratio).sqrt();
        let config = HamiltonianConfig {
            flux_fraction: 0.45,
            renormalization_order: RenormalizationOrder::Second,
            include_squeeze: false,
            include_second_order_sin_term: false,
        };
        let h = build_system_hamiltonian(&scales, &config, n).unwrap();
        let (x, p) = build_xp(n).unwrap();
        let s = sin_operator(&scales, 0.45, n).unwrap();
        let (hm, xm, pm, sm) = (h.matrix(), x.matrix(), p.matrix(), s.matrix());
        let comm = |a: &CMat, b: &CMat| a.dot(b) - b.dot(a);
        let acomm = |a: &CMat, b: &CMat| a.dot(b) + b.dot(a);
        let direct = comm(hm, &rho) * (-I)
            + comm(xm, &acomm(pm, &rho)) * (-I * c(g))
            + comm(xm, &acomm(sm, &rho)) * (-I * c(g * xi * w))
            + comm(xm, &comm(xm, &rho)) * c(-g / 2.0 * (1.0 - xi * xi))
            + comm(xm, &comm(pm, &rho)) * c(g * xi / 2.0)
            + comm(xm, &comm(sm, &rho)) * c(g / 2.0 * xi * xi * w);
        assert!(rel_err(&gen.apply(&rho), &direct) < 1e-12);
    }

    #[test]
    fn lindblad_assembly_matches_direct_evaluation() {
        let scales = paper_scales();
        let n = 12;
        for (kind, zeta) in [(GeneratorKind::Lind1, None), (GeneratorKind::Lind2, None)] {
            let spec = match kind {
                GeneratorKind::Lind1 => build_lindblad_first(&scales, 0.2, n).unwrap(),
                _ => build_lindblad_second(
                    &scales,
                    0.2,
                    zeta.unwrap_or_else(|| ZetaSplit::paper_convention(scales.xi).unwrap()),
                    n,
                )
                .unwrap(),
            };
            let gen = assemble_liouvillian(&spec).unwrap();
            let rho = random_density(n, 5);
            let hm = spec.h_eff.matrix();
            let mut direct = (hm.dot(&rho) - rho.dot(hm)) * (-I);
            for l in &spec.lindblads {
                let lm = l.matrix();
                let ld = dagger(lm);
                let ldl = ld.dot(lm);
                direct = direct + lm.dot(&rho).dot(&ld)
                    - (ldl.dot(&rho) + rho.dot(&ldl)) * c(0.5);
            }
            assert!(rel_err(&gen.apply(&rho), &direct) < 1e-12, "kind {:?}", kind);
        }
    }

    #[test]
    fn all_generators_annihilate_trace() {
        let scales = paper_scales();
        let n = 10;
        for kind in [
            GeneratorKind::Cl1,
            GeneratorKind::Cl2,
            GeneratorKind::Lind1,
            GeneratorKind::Lind2,
        ] {
            let gen = build_generator(kind, &scales, 0.37, None, n).unwrap();
            let rho = random_density(n, 6);
            let deriv = gen.apply(&rho);
            let tr = crate::operators::trace(&deriv).norm();
            assert!(
                tr < 1e-12 * gen.fro_norm(),
                "trace not conserved for {:?}: {}",
                kind,
                tr
            );
        }
    }

    #[test]
    fn zero_damping_reduces_to_pure_hamiltonian_flow() {
        let scales = paper_scales().with_gamma(0.0);
        let n = 10;
        let gen = build_generator(GeneratorKind::Lind1, &scales, 0.1, None, n).unwrap();
        let config = HamiltonianConfig::bare(0.1);
        let h = build_system_hamiltonian(&scales, &config, n).unwrap();
        let expected = commutator_super(h.matrix()) * (-I);
        assert!(fro_norm(&(gen.matrix() - &expected)) < 1e-12 * fro_norm(&expected));
    }

    #[test]
    fn ideal_cutoff_first_order_lindblad_is_annihilator() {
        let scales = paper_scales().with_xi(0.0);
        let n = 10;
        let spec = build_lindblad_first(&scales, 0.0, n).unwrap();
        let g = scales.gamma_over_omega0;
        let (a, _) = crate::operators::build_ladder(n).unwrap();
        let expected = a.matrix() * c((2.0 * g).sqrt());
        assert!(max_abs(&(spec.lindblads[0].matrix() - &expected)) < 1e-14);
    }

    #[test]
    fn second_order_lindblad_coefficients_at_paper_split() {
        let scales = paper_scales();
        let n = 8;
        let zeta = ZetaSplit::paper_convention(scales.xi).unwrap();
        assert!((zeta.zeta() - 0.9).abs() < 1e-12);
        let spec = build_lindblad_second(&scales, 0.5, zeta, n).unwrap();
        let g = scales.gamma_over_omega0;
        // X coefficient of L1 by trace projection (tr(XP) = 0):
        // sqrt(g (1 - zp)(1 - xi^2)) with zp = xi.
        let (x, _) = build_xp(n).unwrap();
        let xm = x.matrix();
        let got = crate::operators::trace(&xm.dot(spec.lindblads[0].matrix()))
            / crate::operators::trace(&xm.dot(xm));
        let a1 = ((1.0 - scales.xi) * (1.0 - scales.xi * scales.xi)).sqrt();
        assert!((got - c(g.sqrt() * a1)).norm() < 1e-14);
        assert!((a1 * a1 - 0.891).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_zeta_split() {
        assert!(matches!(ZetaSplit::new(0.0), Err(Error::DegenerateZetaSplit(_))));
        assert!(matches!(ZetaSplit::new(1.0), Err(Error::DegenerateZetaSplit(_))));
        assert!(matches!(ZetaSplit::new(f64::NAN), Err(Error::DegenerateZetaSplit(_))));
        assert!(ZetaSplit::new(0.5).is_ok());
    }

    #[test]
    fn first_order_defect_is_momentum_double_commutator() {
        let scales = paper_scales();
        let report = verify_lindblad_consistency(1, &scales, 0.25, None, 14).unwrap();
        assert!(report.relative_residual < 1e-10, "residual {}", report.relative_residual);
        let g = scales.gamma_over_omega0;
        let expect_pp = -g / 2.0 * (1.0 + scales.xi * scales.xi / 4.0);
        let expect_xp = -g * scales.xi / 4.0;
        let get = |name: &str| {
            report
                .coefficients
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| *v)
                .unwrap()
        };
        assert!((get("[P,[P,.]]") - expect_pp).abs() < 1e-12 * g);
        assert!((get("[[X,P],.]") - expect_xp).abs() < 1e-12 * g);
    }

    #[test]
    fn second_order_defect_matches_closed_form_for_two_splits() {
        let scales = paper_scales();
        let g = scales.gamma_over_omega0;
        let xi = scales.xi;
        let w2 = scales.beta * scales.nu_ratio;
        for zeta in [ZetaSplit::paper_convention(xi).unwrap(), ZetaSplit::new(0.5).unwrap()] {
            let zp = zeta.l2_fraction();
            let report =
                verify_lindblad_consistency(2, &scales, 0.5, Some(zeta), 14).unwrap();
            assert!(report.relative_residual < 1e-10, "residual {}", report.relative_residual);
            let get = |name: &str| {
                report
                    .coefficients
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| *v)
                    .unwrap()
            };
            let expect_pp = -g * (1.0 + xi * xi / 4.0) / (2.0 * (1.0 - zp) * (1.0 - xi * xi));
            let expect_ss = -g * (1.0 + xi * xi / 4.0) * xi * xi * w2
                / (2.0 * zp * (1.0 - xi * xi));
            assert!((get("[P,[P,.]]") - expect_pp).abs() < 1e-10 * g);
            assert!((get("[S,[S,.]]") - expect_ss).abs() < 1e-10 * g);
            assert!(get("[P,[S,.]]+[S,[P,.]]").abs() < 1e-10 * g);
        }
    }

    #[test]
    fn sin_coefficient_scan_recovers_damping_weight() {
        let scales = paper_scales().with_gamma(5e-3);
        let report = verify_lindblad_consistency(2, &scales, 0.5, None, 10).unwrap();
        let w = report.optimal_sin_coefficient.unwrap();
        assert!(
            (w - scales.gamma_over_omega0).abs() < 1e-6,
            "scan found {w}, expected {}",
            scales.gamma_over_omega0
        );
    }

    #[test]
    fn unsupported_order_is_rejected() {
        let scales = paper_scales();
        assert!(matches!(
            verify_lindblad_consistency(3, &scales, 0.0, None, 8),
            Err(Error::UnsupportedOrder(3, 2))
        ));
    }

    #[test]
    fn lindblad_spectrum_lies_in_left_half_plane() {
        use ndarray_linalg::Eig;
        let scales = paper_scales();
        let n = 8;
        for kind in [GeneratorKind::Lind1, GeneratorKind::Lind2] {
            let gen = build_generator(kind, &scales, 0.3, None, n).unwrap();
            let (eigs, _) = gen.matrix().eig().unwrap();
            let scale = gen.fro_norm();
            for ev in eigs.iter() {
                assert!(
                    ev.re < 1e-10 * scale,
                    "{:?} eigenvalue {} in right half plane",
                    kind,
                    ev
                );
            }
        }
    }

    #[test]
    fn generators_commute_with_parity_at_zero_flux() {
        let scales = paper_scales();
        let n = 12;
        let pi = parity_operator(n);
        let parity_super = kron(&pi.t().to_owned(), &pi);
        for kind in [
            GeneratorKind::Cl1,
            GeneratorKind::Cl2,
            GeneratorKind::Lind1,
            GeneratorKind::Lind2,
        ] {
            let gen = build_generator(kind, &scales, 0.0, None, n).unwrap();
            let comm = gen.matrix().dot(&parity_super) - parity_super.dot(gen.matrix());
            assert!(
                fro_norm(&comm) < 1e-11 * gen.fro_norm(),
                "parity broken for {:?}",
                kind
            );
        }
    }

    #[test]
    fn renormalization_absorption_identity() {
        // (1 - lambda)(1 + x) = 1 with x = 2 Omega gamma / omega0^2: moving the
        // lambda X^2/2 shift out of H and into a bare-frequency term changes
        // the generator by exactly the counter-term commutator.
        let scales = paper_scales();
        let n = 10;
        let lam = crate::hamiltonian::lambda_first_order(
            scales.gamma_over_omega0 * scales.omega0,
            scales.omega0 / scales.xi,
            scales.omega0,
        )
        .unwrap();
        let x_param = 2.0 * scales.gamma_over_omega0 / scales.xi;
        assert!(((1.0 - lam) * (1.0 + x_param) - 1.0).abs() < 1e-13);

        let config_first = HamiltonianConfig {
            flux_fraction: 0.3,
            renormalization_order: RenormalizationOrder::First,
            include_squeeze: false,
            include_second_order_sin_term: false,
        };
        let config_bare = HamiltonianConfig::bare(0.3);
        let h_ren = build_system_hamiltonian(&scales, &config_first, n).unwrap();
        let h_bare = build_system_hamiltonian(&scales, &config_bare, n).unwrap();
        let (x, _) = build_xp(n).unwrap();
        let x2 = x.matrix().dot(x.matrix());
        let diff = commutator_super(h_bare.matrix()) - commutator_super(h_ren.matrix());
        let counter = commutator_super(&x2) * c(lam / 2.0);
        assert!(fro_norm(&(diff - counter)) < 1e-12);
    }
}
