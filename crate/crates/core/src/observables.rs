//! Physical quantities read off a covariance matrix: occupations, cross-mode
//! moments, logarithmic negativity and the inter-mode antibunching correlator.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{
    propagate_closed_form, propagate_rk4, relative_deviation, tmsv_initial, CovarianceMatrix, TrajectoryGrid,
};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::spectrum::{drift_matrix, noise_matrix, NoiseMatrix};
use crate::table::SweepTable;

/// Largest RK4 step (in `1/kappa`) accepted by [`evolve_observables`].
pub const MAX_STEP: f64 = 0.01;

const OCCUPANCY_CLAMP: f64 = 1e-12;
const OCCUPANCY_FLOOR: f64 = -1e-9;
const DISCRIMINANT_CLAMP: f64 = 1e-12;
const UNDEFINED_DENOMINATOR: f64 = 1e-12;
/// Above this entry size the determinant of `W` carries no significant
/// digits at the scale of the vacuum, so a nonphysical reading there is
/// rounding, not physics.
pub const PRECISION_SCALE: f64 = 1e3;

/// Occupations and cross-mode moments of mode 1 (cavity, `c`) and mode 2
/// (resonator, `b`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoments {
    /// `⟨c†c⟩`
    pub n_p: f64,
    /// `⟨b†b⟩`
    pub n_s: f64,
    /// `⟨bc⟩`
    pub m_bc: Complex64,
    /// `⟨b†c⟩`
    pub m_bdc: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableSample {
    pub t: f64,
    pub e_n: f64,
    /// `None` when the occupations are too small for the ratio to be defined.
    pub antibunch: Option<f64>,
    pub n_p: f64,
    pub n_s: f64,
}

fn clamp_occupancy(name: &str, n: f64) -> Result<f64> {
    if n < OCCUPANCY_FLOOR {
        Err(Error::Nonphysical(format!("{name} = {n:e} is negative")))
    } else if (-OCCUPANCY_CLAMP..0.0).contains(&n) {
        Ok(0.0)
    } else {
        Ok(n)
    }
}

/// Invert the quadrature definitions `q = (a + a†)/√2`, `p = (a - a†)/(i√2)`.
pub fn mode_moments(w: &CovarianceMatrix) -> Result<SecondMoments> {
    let e = |i: usize, j: usize| w.get(i - 1, j - 1);
    let n_p = clamp_occupancy("n_p", (e(1, 1) + e(2, 2) - 1.0) / 2.0)?;
    let n_s = clamp_occupancy("n_s", (e(3, 3) + e(4, 4) - 1.0) / 2.0)?;
    // cross-mode operators commute, so symmetrized moments are the plain ones
    let m_bc = Complex64::new(e(1, 3) - e(2, 4), e(1, 4) + e(2, 3)) / 2.0;
    let m_cdb = Complex64::new(e(1, 3) + e(2, 4), e(1, 4) - e(2, 3)) / 2.0;
    Ok(SecondMoments { n_p, n_s, m_bc, m_bdc: m_cdb.conj() })
}

fn block(w: &CovarianceMatrix, r: usize, c: usize) -> Matrix2<f64> {
    w.as_matrix().fixed_view::<2, 2>(r, c).into_owned()
}

/// Smaller symplectic eigenvalue of the partially transposed covariance.
pub fn partial_transpose_min_symplectic(w: &CovarianceMatrix) -> Result<f64> {
    let sigma = block(w, 0, 0).determinant() + block(w, 2, 2).determinant() - 2.0 * block(w, 0, 2).determinant();
    let det = w.as_matrix().determinant();
    let mut disc = sigma * sigma - 4.0 * det;
    if disc < 0.0 {
        // near-pure states touch zero from above; scale with the magnitude of Σ²
        if disc < -DISCRIMINANT_CLAMP * (sigma * sigma).max(1.0) {
            return Err(Error::Nonphysical(format!("negative discriminant {disc:e}")));
        }
        disc = 0.0;
    }
    let denom = sigma + disc.sqrt();
    if !(det > 0.0) || !(denom > 0.0) {
        return Err(Error::Nonphysical(format!("det W = {det:e}, Σ = {sigma:e}")));
    }
    // (Σ - √disc)/2 rewritten as 2 det / (Σ + √disc) to avoid cancellation
    Ok((2.0 * det / denom).sqrt())
}

/// `E_N = max(0, -ln(2 W⁻))`.
pub fn log_negativity(w: &CovarianceMatrix) -> Result<f64> {
    let nu = partial_transpose_min_symplectic(w)?;
    Ok((-(2.0 * nu).ln()).max(0.0))
}

/// Normalised excess `(⟨b†c†bc⟩ - n_p n_s) / (n_p n_s)`, with the fourth
/// moment factorised for a zero-mean Gaussian state. `None` at vanishing
/// occupations.
pub fn antibunching(w: &CovarianceMatrix) -> Result<Option<f64>> {
    let m = mode_moments(w)?;
    Ok(antibunching_from_moments(&m))
}

fn antibunching_from_moments(m: &SecondMoments) -> Option<f64> {
    let denom = m.n_p * m.n_s;
    (denom > UNDEFINED_DENOMINATOR).then(|| (m.m_bc.norm_sqr() + m.m_bdc.norm_sqr()) / denom)
}

pub fn sample(t: f64, w: &CovarianceMatrix) -> Result<ObservableSample> {
    let m = mode_moments(w)?;
    Ok(ObservableSample {
        t,
        e_n: log_negativity(w)?,
        antibunch: antibunching_from_moments(&m),
        n_p: m.n_p,
        n_s: m.n_s,
    })
}

/// Observable series along one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub samples: Vec<ObservableSample>,
    /// Grid index where propagation overflowed or the observables lost
    /// their precision; samples stop before it.
    pub diverged_at: Option<usize>,
    /// Relative deviation of the final RK4 state from the exact propagator.
    pub closed_form_deviation: Option<f64>,
}

impl Evolution {
    pub fn e_n(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.e_n)
    }

    /// Columns `t,e_n,antibunching,n_p,n_s`; undefined antibunching is empty.
    pub fn to_table(&self) -> SweepTable {
        let mut table = SweepTable::new(["t", "e_n", "antibunching", "n_p", "n_s"]);
        for s in &self.samples {
            table.push(vec![Some(s.t), Some(s.e_n), s.antibunch, Some(s.n_p), Some(s.n_s)]);
        }
        table
    }
}

/// Propagate the squeezed initial state with RK4 and evaluate every
/// observable on the grid.
pub fn evolve_observables(p: &SystemParams, grid: &TrajectoryGrid) -> Result<Evolution> {
    evolve_observables_with_noise(p, grid, &noise_matrix(p))
}

/// As [`evolve_observables`] with an explicit noise matrix, e.g.
/// [`NoiseMatrix::zero`] for the coherent part of the flow only.
pub fn evolve_observables_with_noise(p: &SystemParams, grid: &TrajectoryGrid, z: &NoiseMatrix) -> Result<Evolution> {
    if grid.step() * p.kappa() > MAX_STEP * (1.0 + 1e-12) {
        return Err(Error::invalid("n_steps", format!("step {} exceeds {MAX_STEP}/kappa", grid.step())));
    }
    let a = drift_matrix(p);
    let w0 = tmsv_initial(p.squeeze_r())?;
    let series = propagate_rk4(&w0, &a, z, grid)?;

    let closed_form_deviation = series.last().and_then(|last| {
        let t = grid.time(series.states.len() - 1) - grid.t0();
        propagate_closed_form(&w0, &a, z, t).ok().map(|exact| relative_deviation(last, &exact))
    });

    let results: Vec<Result<ObservableSample>> =
        series.states.par_iter().enumerate().map(|(k, w)| sample(grid.time(k), w)).collect();
    let mut samples = Vec::with_capacity(results.len());
    let mut diverged_at = series.diverged_at;
    for (k, result) in results.into_iter().enumerate() {
        match result {
            Ok(s) => samples.push(s),
            Err(Error::Nonphysical(_)) if series.states[k].max_abs() > PRECISION_SCALE => {
                diverged_at = Some(k);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Evolution { samples, diverged_at, closed_form_deviation })
}
