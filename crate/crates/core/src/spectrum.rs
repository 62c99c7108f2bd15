//! Linear-dynamics matrices and the supermode spectrum.
//!
//! Quadratures are ordered `u = (q1, p1, q2, p2)` with mode 1 the lossy cavity
//! and mode 2 the amplified resonator. In the frame rotating at the common
//! resonance frequency the noiseless equations read
//!
//! ```text
//! dq1/dt = -kappa/2 q1 - G p2      dq2/dt = gamma/2 q2 - G p1
//! dp1/dt = -kappa/2 p1 + G q2      dp2/dt = gamma/2 p2 + G q1
//! ```

use nalgebra::Matrix4;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DispersiveInputs, SystemParams};
use crate::table::SweepTable;

/// Tolerance (in units of kappa) within which `G` counts as sitting on the
/// exceptional point.
pub const EP_TOLERANCE: f64 = 1e-12;

/// Ratio `g/Δ` above which the dispersive elimination is flagged as unreliable.
pub const DISPERSIVE_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(Matrix4<f64>);

impl DriftMatrix {
    pub fn as_matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn from_matrix(a: Matrix4<f64>) -> Self {
        Self(a)
    }

    /// Numerical eigenvalues (real Schur route); independent of [`eigenfrequencies`].
    pub fn eigenvalues(&self) -> [Complex64; 4] {
        let ev = self.0.complex_eigenvalues();
        [ev[0], ev[1], ev[2], ev[3]]
    }
}

/// Diagonal matrix of symmetrized input-noise strengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMatrix(Matrix4<f64>);

impl NoiseMatrix {
    pub fn as_matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// No injected noise. Not physical for lossy or amplifying modes; useful
    /// for isolating the coherent part of the flow.
    pub fn zero() -> Self {
        Self(Matrix4::zeros())
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [self.0[(0, 0)], self.0[(1, 1)], self.0[(2, 2)], self.0[(3, 3)]]
    }
}

/// Which input noise drives the covariance flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Noise {
    /// Vacuum cavity noise plus thermal noise on the resonator.
    #[default]
    Physical,
    /// No injected noise; only the coherent part of the flow.
    Off,
}

impl Noise {
    pub fn matrix(&self, p: &SystemParams) -> NoiseMatrix {
        match self {
            Noise::Physical => noise_matrix(p),
            Noise::Off => NoiseMatrix::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtPhase {
    /// Real spectrum, coherent exchange between the modes.
    PtSymmetric,
    /// Purely imaginary splitting, energy localised in one mode.
    Broken,
    ExceptionalPoint,
}

impl PtPhase {
    pub fn label(&self) -> &'static str {
        match self {
            PtPhase::PtSymmetric => "pt_symmetric",
            PtPhase::Broken => "broken",
            PtPhase::ExceptionalPoint => "exceptional_point",
        }
    }
}

/// The two complex supermode frequencies.
///
/// `phase` is only assigned a symmetric/broken label for balanced gain and
/// loss; for `s != 1` it is `None` unless `G` sits on the coalescence point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub omega_plus: Complex64,
    pub omega_minus: Complex64,
    pub g_c: f64,
    pub phase: Option<PtPhase>,
}

/// Result of eliminating the qubit in the dispersive regime.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveReduction {
    pub omega_c0: f64,
    pub omega_m0: f64,
    pub coupling_g: f64,
    /// Human-readable warnings when `g/Δc` or `λ/Δm` exceeds [`DISPERSIVE_LIMIT`].
    pub warnings: Vec<String>,
}

impl DispersiveReduction {
    pub fn is_valid(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Effective cavity/resonator frequencies and coupling after adiabatic
/// elimination of the qubit.
pub fn dispersive_reduction(inputs: &DispersiveInputs) -> Result<DispersiveReduction> {
    inputs.validate()?;
    let DispersiveInputs { g, lambda, delta_c, delta_m, omega_c, omega_m } = *inputs;
    let mut warnings = Vec::new();
    if (g / delta_c).abs() > DISPERSIVE_LIMIT {
        warnings.push(format!("g/delta_c = {:.3} exceeds {DISPERSIVE_LIMIT}", g / delta_c));
    }
    if (lambda / delta_m).abs() > DISPERSIVE_LIMIT {
        warnings.push(format!("lambda/delta_m = {:.3} exceeds {DISPERSIVE_LIMIT}", lambda / delta_m));
    }
    Ok(DispersiveReduction {
        omega_c0: omega_c - g * g / delta_c,
        omega_m0: omega_m - lambda * lambda / delta_m,
        coupling_g: g * lambda * (delta_c + delta_m) / (2.0 * delta_c * delta_m),
        warnings,
    })
}

pub fn drift_matrix(p: &SystemParams) -> DriftMatrix {
    let l = -p.kappa() / 2.0;
    let a = p.gamma() / 2.0;
    let g = p.coupling_g();
    #[rustfmt::skip]
    let m = Matrix4::new(
        l,   0.0, 0.0, -g,
        0.0, l,   g,   0.0,
        0.0, -g,  a,   0.0,
        g,   0.0, 0.0, a,
    );
    DriftMatrix(m)
}

/// `diag(kappa/2, kappa/2, gamma (n_th + 1/2), gamma (n_th + 1/2))`.
pub fn noise_matrix(p: &SystemParams) -> NoiseMatrix {
    let cav = p.kappa() / 2.0;
    let mech = p.gamma() * (p.n_th() + 0.5);
    NoiseMatrix(Matrix4::from_diagonal(&nalgebra::Vector4::new(cav, cav, mech, mech)))
}

/// Closed-form supermode frequencies
/// `ω± = i(γ-κ)/4 ± sqrt(G² - ((γ+κ)/4)²)` on the principal branch.
pub fn eigenfrequencies(p: &SystemParams) -> Spectrum {
    let g_c = p.critical_coupling();
    let g = p.coupling_g();
    let shift = (p.gamma() - p.kappa()) / 4.0;
    let disc = g * g - g_c * g_c;
    // principal root, split by hand so zero parts stay exactly zero
    let (re, im) = if disc >= 0.0 { (disc.sqrt(), 0.0) } else { (0.0, (-disc).sqrt()) };
    let omega_plus = Complex64::new(re, shift + im);
    let omega_minus = Complex64::new(-re, shift - im);

    let phase = if (g - g_c).abs() <= EP_TOLERANCE * p.kappa() {
        Some(PtPhase::ExceptionalPoint)
    } else if p.is_balanced() {
        Some(if g > g_c { PtPhase::PtSymmetric } else { PtPhase::Broken })
    } else {
        None
    };
    Spectrum { omega_plus, omega_minus, g_c, phase }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub g_over_kappa: f64,
    pub spectrum: Spectrum,
}

/// Evaluate [`eigenfrequencies`] at `G = ratio * kappa` for every ratio,
/// preserving input order.
pub fn spectrum_sweep(template: &SystemParams, g_over_kappa: &[f64]) -> Result<Vec<SpectrumRow>> {
    if g_over_kappa.is_empty() {
        return Err(Error::invalid("g_over_kappa", "empty ratio list"));
    }
    if let Some(bad) = g_over_kappa.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::invalid("g_over_kappa", format!("ratios must be finite and >= 0, got {bad}")));
    }
    g_over_kappa
        .par_iter()
        .map(|&ratio| {
            let p = template.with_coupling(ratio * template.kappa())?;
            Ok(SpectrumRow { g_over_kappa: ratio, spectrum: eigenfrequencies(&p) })
        })
        .collect()
}

/// CSV/JSON table with columns
/// `g_over_kappa,re_omega_plus,re_omega_minus,im_omega_plus,im_omega_minus`.
pub fn spectrum_table(rows: &[SpectrumRow]) -> SweepTable {
    let mut table =
        SweepTable::new(["g_over_kappa", "re_omega_plus", "re_omega_minus", "im_omega_plus", "im_omega_minus"]);
    for row in rows {
        let sp = &row.spectrum;
        table.push(vec![
            Some(row.g_over_kappa),
            Some(sp.omega_plus.re),
            Some(sp.omega_minus.re),
            Some(sp.omega_plus.im),
            Some(sp.omega_minus.im),
        ]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params_from_ratio;

    fn params(s: f64, g: f64) -> SystemParams {
        params_from_ratio(1.0, s, g, 0.0, 0.0).unwrap()
    }

    #[test]
    fn symmetric_detunings_collapse() {
        let d = 3.0;
        let g = 0.2;
        let r = dispersive_reduction(&DispersiveInputs::new(g, g, d, d, 10.0, 9.0).unwrap()).unwrap();
        assert!((r.coupling_g - g * g / d).abs() < 1e-15);
        assert!(r.is_valid());
    }

    #[test]
    fn decoupled_cavity() {
        let r = dispersive_reduction(&DispersiveInputs::new(0.0, 0.3, 2.0, 5.0, 10.0, 9.0).unwrap()).unwrap();
        assert_eq!(r.coupling_g, 0.0);
        assert_eq!(r.omega_c0, 10.0);
        assert!((r.omega_m0 - (9.0 - 0.09 / 5.0)).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_detunings() {
        let d = 7.0;
        let r =
            dispersive_reduction(&DispersiveInputs::new(0.05 * d, 0.05 * d, d, 2.0 * d, 0.0, 0.0).unwrap()).unwrap();
        // 0.05 * 0.05 * 3 / 4 = 1.875e-3
        assert!((r.coupling_g - 1.875e-3 * d).abs() < 1e-15);
    }

    #[test]
    fn dispersive_warning() {
        let r = dispersive_reduction(&DispersiveInputs::new(0.5, 0.01, 1.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(r.warnings.len(), 1);
        let bad = DispersiveInputs { g: 0.1, lambda: 0.1, delta_c: -1.0, delta_m: 1.0, omega_c: 0.0, omega_m: 0.0 };
        assert!(dispersive_reduction(&bad).is_err());
    }

    #[test]
    fn decoupled_drift_is_diagonal() {
        let a = drift_matrix(&params(1.0, 0.0));
        assert_eq!(*a.as_matrix(), Matrix4::from_diagonal(&nalgebra::Vector4::new(-0.5, -0.5, 0.5, 0.5)));
    }

    #[test]
    fn drift_trace() {
        for (s, g) in [(1.0, 1.5), (2.0, 2.3), (0.0, 0.4), (2.7, 0.1)] {
            let a = drift_matrix(&params(s, g));
            assert_eq!(a.as_matrix().trace(), s - 1.0);
        }
    }

    #[test]
    fn balanced_drift_eigenvalues() {
        let ev = drift_matrix(&params(1.0, 1.5)).eigenvalues();
        for z in ev {
            assert!(z.re.abs() < 1e-12);
            assert!((z.im.abs() - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn unbalanced_drift_real_parts() {
        for z in drift_matrix(&params(2.0, 2.3)).eigenvalues() {
            assert!((z.re - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_diagonals() {
        assert_eq!(noise_matrix(&params(1.0, 0.0)).diagonal(), [0.5; 4]);
        assert_eq!(noise_matrix(&params(2.0, 0.0)).diagonal(), [0.5, 0.5, 1.0, 1.0]);
        let p = params_from_ratio(1.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(noise_matrix(&p).diagonal(), [0.5, 0.5, 1.5, 1.5]);
    }

    #[test]
    fn balanced_exceptional_point() {
        let sp = eigenfrequencies(&params(1.0, 0.5));
        assert_eq!(sp.omega_plus, Complex64::new(0.0, 0.0));
        assert_eq!(sp.omega_minus, Complex64::new(0.0, 0.0));
        assert_eq!(sp.phase, Some(PtPhase::ExceptionalPoint));
        assert_eq!(sp.g_c, 0.5);
    }

    #[test]
    fn decoupled_frequencies_are_imaginary() {
        let sp = eigenfrequencies(&params(1.0, 0.0));
        assert_eq!(sp.omega_plus, Complex64::new(0.0, 0.5));
        assert_eq!(sp.omega_minus, Complex64::new(0.0, -0.5));
        assert_eq!(sp.phase, Some(PtPhase::Broken));
    }

    #[test]
    fn unbalanced_coalescence() {
        let sp = eigenfrequencies(&params(2.0, 0.75));
        assert_eq!(sp.g_c, 0.75);
        assert_eq!(sp.omega_plus, Complex64::new(0.0, 0.25));
        assert_eq!(sp.omega_minus, Complex64::new(0.0, 0.25));
        assert_eq!(sp.phase, Some(PtPhase::ExceptionalPoint));
        assert_eq!(eigenfrequencies(&params(2.0, 1.0)).phase, None);
    }

    #[test]
    fn sweep_rows() {
        let rows = spectrum_sweep(&params(1.0, 0.0), &[0.0, 0.25, 0.5, 1.0, 0.6]).unwrap();
        for row in &rows[..3] {
            assert_eq!(row.spectrum.omega_plus.re, 0.0);
            assert_eq!(row.spectrum.omega_minus.re, 0.0);
        }
        let at_one = rows[3].spectrum;
        assert!((at_one.omega_plus.re - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((at_one.omega_minus.re + 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(rows[4].spectrum.omega_plus.im, 0.0);
        assert_eq!(rows[4].spectrum.omega_minus.im, 0.0);
        assert_eq!(rows[4].spectrum.phase, Some(PtPhase::PtSymmetric));
    }

    #[test]
    fn unbalanced_strong_coupling_shift() {
        let rows = spectrum_sweep(&params(2.0, 0.0), &[5.0, 50.0]).unwrap();
        for row in rows {
            assert_eq!(row.spectrum.omega_plus.im, 0.25);
            assert_eq!(row.spectrum.omega_minus.im, 0.25);
        }
    }

    #[test]
    fn sweep_rejects_bad_ratios() {
        let p = params(1.0, 0.0);
        assert!(spectrum_sweep(&p, &[]).is_err());
        assert!(spectrum_sweep(&p, &[0.1, -0.2]).is_err());
        assert!(spectrum_sweep(&p, &[f64::INFINITY]).is_err());
    }
}
