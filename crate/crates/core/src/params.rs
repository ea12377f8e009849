//! Circuit and bath parameters, and the dimensionless scales derived from them.
//!
//! All SI inputs are converted once, here, into the dimensionless quantities
//! (omega0, xi, beta, nu/omega0, gamma/omega0) that every downstream module
//! consumes. Energies are measured in units of hbar*omega0 and time in units
//! of 1/omega0 throughout the rest of the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Flux quantum h/2e, Wb.
    pub flux_quantum: f64,
    /// Elementary charge, C.
    pub electron_charge: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            hbar: 1.054571817e-34,
            flux_quantum: 2.067833848e-15,
            electron_charge: 1.602176634e-19,
        }
    }
}

impl PhysicalConstants {
    /// Consistency of the hard-coded values: Phi_0 = pi hbar / e.
    pub fn flux_quantum_consistent(&self) -> bool {
        let phi0 = std::f64::consts::PI * self.hbar / self.electron_charge;
        ((phi0 - self.flux_quantum) / self.flux_quantum).abs() < 1e-9
    }
}

/// SQUID ring circuit values, SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquidParams {
    /// Effective capacitance, F.
    pub capacitance: f64,
    /// Effective ring inductance, H.
    pub inductance: f64,
    /// Josephson coupling energy hbar*nu, J.
    pub josephson_energy: f64,
    /// External flux bias, Wb.
    pub external_flux: f64,
}

impl SquidParams {
    /// Parameters used for all figures: C = 5 fF, L = 0.3 nH,
    /// hbar*nu = 9.99e-22 J (I_c about 3 uA).
    pub fn paper_defaults() -> Self {
        SquidParams {
            capacitance: 5e-15,
            inductance: 3e-10,
            josephson_energy: 9.99e-22,
            external_flux: 0.0,
        }
    }

    /// External flux as a fraction of the flux quantum.
    pub fn flux_fraction(&self, constants: &PhysicalConstants) -> f64 {
        self.external_flux / constants.flux_quantum
    }
}

/// Ohmic bath with a Lorentz-Drude cutoff, SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    /// Damping rate gamma, rad/s.
    pub damping_rate: f64,
    /// Cutoff frequency Omega, rad/s. `f64::INFINITY` selects the ideal
    /// (xi = 0) limit.
    pub cutoff_frequency: f64,
    /// Bath temperature, K. Only 0 is supported.
    pub temperature: f64,
}

/// Dimensionless quantities every formula consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    /// Harmonic frequency 1/sqrt(LC), rad/s.
    pub omega0: f64,
    /// Cutoff ratio omega0/Omega.
    pub xi: f64,
    /// Screening parameter 2 pi L I_c / Phi_0.
    pub beta: f64,
    /// Josephson ratio nu/omega0.
    pub nu_ratio: f64,
    /// Damping ratio gamma/omega0.
    pub gamma_over_omega0: f64,
    /// Critical current 2 pi hbar nu / Phi_0, A.
    pub critical_current: f64,
    /// Zero-point flux sqrt(hbar/(C omega0)), Wb. Converts dimensionless
    /// X expectation values back to flux.
    pub flux_zero_point: f64,
    /// Screening-current conversion flux_zero_point / L, A per unit X.
    pub current_scale: f64,
}

impl DerivedScales {
    /// Copy with a different damping ratio (used by gamma scans).
    pub fn with_gamma(&self, gamma_over_omega0: f64) -> Self {
        DerivedScales { gamma_over_omega0, ..*self }
    }

    /// Copy with a different cutoff ratio.
    pub fn with_xi(&self, xi: f64) -> Self {
        DerivedScales { xi, ..*self }
    }
}

fn require_positive(field: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::ParamDomain { field, value });
    }
    Ok(())
}

/// Convert SI circuit/bath values to the dimensionless scales.
pub fn derive_scales(squid: &SquidParams, bath: &BathParams) -> Result<DerivedScales> {
    let constants = PhysicalConstants::default();
    require_positive("capacitance", squid.capacitance)?;
    require_positive("inductance", squid.inductance)?;
    require_positive("josephson_energy", squid.josephson_energy)?;
    if bath.damping_rate < 0.0 || !bath.damping_rate.is_finite() {
        return Err(Error::ParamDomain { field: "damping_rate", value: bath.damping_rate });
    }
    if !(bath.cutoff_frequency > 0.0) {
        return Err(Error::ParamDomain { field: "cutoff_frequency", value: bath.cutoff_frequency });
    }
    if !squid.external_flux.is_finite() {
        return Err(Error::ParamDomain { field: "external_flux", value: squid.external_flux });
    }

    let omega0 = 1.0 / (squid.inductance * squid.capacitance).sqrt();
    let xi = if bath.cutoff_frequency.is_infinite() { 0.0 } else { omega0 / bath.cutoff_frequency };
    let nu = squid.josephson_energy / constants.hbar;
    let critical_current =
        2.0 * std::f64::consts::PI * squid.josephson_energy / constants.flux_quantum;
    let beta = 2.0 * std::f64::consts::PI * squid.inductance * critical_current
        / constants.flux_quantum;
    let flux_zero_point = (constants.hbar / (squid.capacitance * omega0)).sqrt();
    Ok(DerivedScales {
        omega0,
        xi,
        beta,
        nu_ratio: nu / omega0,
        gamma_over_omega0: bath.damping_rate / omega0,
        critical_current,
        flux_zero_point,
        current_scale: flux_zero_point / squid.inductance,
    })
}

/// Severity of a single validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Warning,
    Violation,
}

/// One finding from `validate_params`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

/// Report-only validation of a full parameter set. Never aborts.
pub fn validate_params(squid: &SquidParams, bath: &BathParams, basis_size: usize) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut violation = |msg: String| {
        findings.push(Finding { severity: Severity::Violation, message: msg });
    };
    if !(squid.capacitance > 0.0) {
        violation(format!("capacitance must be positive, got {}", squid.capacitance));
    }
    if !(squid.inductance > 0.0) {
        violation(format!("inductance must be positive, got {}", squid.inductance));
    }
    if !(squid.josephson_energy > 0.0) {
        violation(format!("josephson_energy must be positive, got {}", squid.josephson_energy));
    }
    if !squid.external_flux.is_finite() {
        violation(format!("external_flux must be finite, got {}", squid.external_flux));
    }
    if bath.temperature != 0.0 {
        violation(format!("only T=0 supported, got temperature = {} K", bath.temperature));
    }
    if bath.damping_rate < 0.0 {
        violation(format!("damping_rate must be non-negative, got {}", bath.damping_rate));
    }
    if !(bath.cutoff_frequency > 0.0) {
        violation(format!("cutoff_frequency must be positive, got {}", bath.cutoff_frequency));
    }
    if basis_size < 2 {
        violation(format!("basis_size must be at least 2, got {basis_size}"));
    }
    if bath.damping_rate == 0.0 {
        findings.push(Finding {
            severity: Severity::Warning,
            message: "gamma = 0: Liouvillian kernel degenerate; steady state not unique"
                .to_string(),
        });
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_bath() -> BathParams {
        BathParams { damping_rate: 0.0, cutoff_frequency: f64::INFINITY, temperature: 0.0 }
    }

    #[test]
    fn flux_quantum_is_pi_hbar_over_e() {
        assert!(PhysicalConstants::default().flux_quantum_consistent());
    }

    #[test]
    fn omega0_from_paper_circuit() {
        let s = derive_scales(&SquidParams::paper_defaults(), &paper_bath()).unwrap();
        // 1/sqrt(3e-10 * 5e-15)
        assert!((s.omega0 - 8.165e11).abs() / 8.165e11 < 1e-3);
        assert!((s.omega0 * s.omega0 * 3e-10 * 5e-15 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn xi_from_cutoff_ratio() {
        let squid = SquidParams::paper_defaults();
        let mut bath = paper_bath();
        let omega0 = derive_scales(&squid, &bath).unwrap().omega0;
        bath.cutoff_frequency = 10.0 * omega0;
        let s = derive_scales(&squid, &bath).unwrap();
        assert!((s.xi - 0.1).abs() < 1e-12);
    }

    #[test]
    fn critical_current_matches_three_microamps() {
        let s = derive_scales(&SquidParams::paper_defaults(), &paper_bath()).unwrap();
        assert!((s.critical_current - 3.04e-6).abs() < 0.02e-6);
    }

    #[test]
    fn beta_from_paper_parameters() {
        let s = derive_scales(&SquidParams::paper_defaults(), &paper_bath()).unwrap();
        assert!((s.beta - 2.77).abs() < 0.01);
    }

    #[test]
    fn beta_two_routes_agree() {
        let squid = SquidParams::paper_defaults();
        let s = derive_scales(&squid, &paper_bath()).unwrap();
        let constants = PhysicalConstants::default();
        // beta directly from 2 pi L (2 pi hbar nu / Phi_0) / Phi_0
        let ic = 2.0 * std::f64::consts::PI * squid.josephson_energy / constants.flux_quantum;
        let beta = 2.0 * std::f64::consts::PI * squid.inductance * ic / constants.flux_quantum;
        assert!((beta - s.beta).abs() / s.beta < 1e-12);
    }

    #[test]
    fn nonpositive_inputs_are_rejected_by_field() {
        let mut squid = SquidParams::paper_defaults();
        squid.inductance = -1.0;
        match derive_scales(&squid, &paper_bath()) {
            Err(Error::ParamDomain { field, .. }) => assert_eq!(field, "inductance"),
            other => panic!("expected ParamDomain, got {other:?}"),
        }
    }

    #[test]
    fn validate_flags_finite_temperature() {
        let squid = SquidParams::paper_defaults();
        let bath = BathParams { damping_rate: 1.0, cutoff_frequency: 1.0, temperature: 4.0 };
        let report = validate_params(&squid, &bath, 40);
        assert!(report
            .iter()
            .any(|f| f.severity == Severity::Violation && f.message.contains("T=0")));
    }

    #[test]
    fn validate_warns_on_zero_damping() {
        let squid = SquidParams::paper_defaults();
        let report = validate_params(&squid, &paper_bath(), 40);
        assert!(report.iter().all(|f| f.severity != Severity::Violation));
        assert!(report.iter().any(|f| f.severity == Severity::Warning));
    }

    #[test]
    fn validate_passes_paper_defaults() {
        let squid = SquidParams::paper_defaults();
        let bath = BathParams { damping_rate: 1e8, cutoff_frequency: 1e13, temperature: 0.0 };
        assert!(validate_params(&squid, &bath, 40).is_empty());
    }
}
