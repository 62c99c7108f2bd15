//! Brute-force verifiers, independent of the propagators they check.
//!
//! * [`sde_ensemble`] samples the linear Langevin equations with
//!   Euler–Maruyama and estimates the covariance empirically. First and
//!   second moments of linear quantum Langevin equations coincide with those
//!   of the classical Gaussian SDE, so the estimate must agree with the
//!   Lyapunov solution within sampling error.
//! * [`fock_tmsv_moments`] sums the two-mode squeezed vacuum directly in a
//!   truncated Fock basis.

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dynamics::{tmsv_initial, CovarianceMatrix, TrajectoryGrid, DIVERGENCE_LIMIT};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::spectrum::{drift_matrix, noise_matrix};

/// Largest Euler–Maruyama step accepted, in `1/kappa`.
pub const MAX_SDE_STEP: f64 = 0.005;
/// Step used by [`sde_ensemble`]; small enough that the O(h) weak bias stays
/// well below the sampling error of 10⁵ trajectories.
pub const DEFAULT_SDE_STEP: f64 = 0.001;
pub const MIN_TRAJECTORIES: usize = 100;
/// Largest accepted Fock-space tail bound.
pub const TRUNCATION_LIMIT: f64 = 1e-10;

const CHUNK: usize = 256;

/// Empirical covariance at every point of the observation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub grid: TrajectoryGrid,
    pub mean_cm: Vec<Matrix4<f64>>,
    pub std_err: Vec<Matrix4<f64>>,
    pub n_traj: usize,
    pub seed: u64,
    /// Euler–Maruyama steps per observation interval.
    pub substeps: usize,
    /// First observation index at which any trajectory overflowed.
    pub diverged_at: Option<usize>,
}

impl EnsembleEstimate {
    /// Fraction of independent entries (upper triangle) over all grid points
    /// with `|mean - reference| <= k * std_err`.
    pub fn agreement_fraction(&self, reference: &[CovarianceMatrix], k: f64) -> f64 {
        let mut hits = 0usize;
        let mut total = 0usize;
        for ((mean, se), exact) in self.mean_cm.iter().zip(&self.std_err).zip(reference) {
            for i in 0..4 {
                for j in i..4 {
                    total += 1;
                    if (mean[(i, j)] - exact.get(i, j)).abs() <= k * se[(i, j)] {
                        hits += 1;
                    }
                }
            }
        }
        hits as f64 / total as f64
    }
}

#[derive(Clone)]
struct Sums {
    first: Vec<Matrix4<f64>>,
    second: Vec<Matrix4<f64>>,
    diverged_at: Option<usize>,
}

impl Sums {
    fn zeros(n: usize) -> Self {
        Self { first: vec![Matrix4::zeros(); n], second: vec![Matrix4::zeros(); n], diverged_at: None }
    }

    fn add(&mut self, other: &Sums) {
        for (a, b) in self.first.iter_mut().zip(&other.first) {
            *a += b;
        }
        for (a, b) in self.second.iter_mut().zip(&other.second) {
            *a += b;
        }
        self.diverged_at = match (self.diverged_at, other.diverged_at) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }

    fn record(&mut self, k: usize, u: &Vector4<f64>) {
        let outer = u * u.transpose();
        self.first[k] += outer;
        self.second[k] += outer.component_mul(&outer);
    }
}

/// [`sde_ensemble_with_step`] with [`DEFAULT_SDE_STEP`].
pub fn sde_ensemble(p: &SystemParams, grid: &TrajectoryGrid, n_traj: usize, seed: u64) -> Result<EnsembleEstimate> {
    sde_ensemble_with_step(p, grid, n_traj, seed, DEFAULT_SDE_STEP)
}

/// Euler–Maruyama ensemble of `du = A u dt + dξ`, `Cov(dξ) = Z dt`, with
/// initial samples drawn from the squeezed-vacuum covariance.
///
/// `grid` is the observation grid; each interval is split into the fewest
/// equal substeps not exceeding `max_step`. Trajectory `i` draws from its own
/// ChaCha stream `i` under `seed`, and partial sums are combined in a fixed
/// order, so results do not depend on thread scheduling.
pub fn sde_ensemble_with_step(
    p: &SystemParams,
    grid: &TrajectoryGrid,
    n_traj: usize,
    seed: u64,
    max_step: f64,
) -> Result<EnsembleEstimate> {
    if n_traj < MIN_TRAJECTORIES {
        return Err(Error::invalid("n_traj", format!("need at least {MIN_TRAJECTORIES}, got {n_traj}")));
    }
    if !(max_step > 0.0) || max_step * p.kappa() > MAX_SDE_STEP {
        return Err(Error::invalid("max_step", format!("must lie in (0, {MAX_SDE_STEP}/kappa], got {max_step}")));
    }
    let substeps = (grid.step() / max_step).ceil().max(1.0) as usize;
    let h = grid.step() / substeps as f64;

    let a = drift_matrix(p);
    let step_map = Matrix4::identity() + a.as_matrix() * h;
    let noise_sd = Vector4::from(noise_matrix(p).diagonal().map(|z| (z * h).sqrt()));
    let w0 = tmsv_initial(p.squeeze_r())?;
    let chol = nalgebra::Cholesky::new(*w0.as_matrix())
        .ok_or_else(|| Error::Nonphysical("initial covariance is not positive definite".into()))?
        .l();
    let n_points = grid.len();

    let run_chunk = |chunk: usize| -> Sums {
        let mut sums = Sums::zeros(n_points);
        let end = ((chunk + 1) * CHUNK).min(n_traj);
        for traj in chunk * CHUNK..end {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(traj as u64);
            let mut normals = || Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let mut u: Vector4<f64> = chol * normals();
            sums.record(0, &u);
            'grid: for k in 1..n_points {
                for _ in 0..substeps {
                    u = step_map * u + noise_sd.component_mul(&normals());
                }
                if !u.iter().all(|x| x.is_finite() && x.abs() <= DIVERGENCE_LIMIT.sqrt()) {
                    sums.diverged_at = Some(sums.diverged_at.map_or(k, |d| d.min(k)));
                    break 'grid;
                }
                sums.record(k, &u);
            }
        }
        sums
    };

    let n_chunks = n_traj.div_ceil(CHUNK);
    let partial: Vec<Sums> = (0..n_chunks).into_par_iter().map(run_chunk).collect();
    let mut total = Sums::zeros(n_points);
    for s in &partial {
        total.add(s);
    }

    let n = n_traj as f64;
    let kept = total.diverged_at.unwrap_or(n_points);
    let mut mean_cm = Vec::with_capacity(kept);
    let mut std_err = Vec::with_capacity(kept);
    for k in 0..kept {
        let mean = total.first[k] / n;
        let var = (total.second[k] - mean.component_mul(&mean) * n) / (n - 1.0);
        mean_cm.push(mean);
        std_err.push(var.map(|v| (v.max(0.0) / n).sqrt()));
    }
    Ok(EnsembleEstimate { grid: *grid, mean_cm, std_err, n_traj, seed, substeps, diverged_at: total.diverged_at })
}

/// Moments of the squeezed vacuum `sech r Σ tanhⁿ r |n, n⟩` from direct
/// summation over `n = 0..=cutoff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockMoments {
    /// Occupation of either mode.
    pub n: f64,
    /// `⟨bc⟩` (real for real `r`).
    pub m_bc: f64,
    /// `⟨b†c†bc⟩`.
    pub fourth: f64,
    pub cutoff: usize,
    /// Bound on the neglected tail of the slowest-converging sum.
    pub truncation_error: f64,
}

impl FockMoments {
    /// `(⟨b†c†bc⟩ - n²) / n²`, or `None` for the vacuum.
    pub fn antibunching(&self) -> Option<f64> {
        let denom = self.n * self.n;
        (denom > 1e-12).then(|| (self.fourth - denom) / denom)
    }
}

/// Bound on `Σ_{n>N} n² (1-q) qⁿ` via the geometric ratio of consecutive terms.
fn tail_bound(q: f64, cutoff: usize) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let n1 = (cutoff + 1) as f64;
    let ratio = ((n1 + 1.0) / n1).powi(2) * q;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    (1.0 - q) * n1 * n1 * q.powf(n1) / (1.0 - ratio)
}

pub fn fock_tmsv_moments(squeeze_r: f64, cutoff: usize) -> Result<FockMoments> {
    if !(squeeze_r >= 0.0) || !squeeze_r.is_finite() {
        return Err(Error::invalid("squeeze_r", format!("must be finite and >= 0, got {squeeze_r}")));
    }
    if cutoff < 10 {
        return Err(Error::invalid("cutoff", format!("must be >= 10, got {cutoff}")));
    }
    let t = squeeze_r.tanh();
    let q = t * t;
    let truncation_error = tail_bound(q, cutoff);
    if !(truncation_error < TRUNCATION_LIMIT) {
        return Err(Error::CutoffTooSmall { cutoff, squeeze_r, tail: truncation_error });
    }

    let sech = 1.0 / squeeze_r.cosh();
    // amplitudes ψ_n = sech r · tanhⁿ r
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut psi = sech;
    for _ in 0..=cutoff {
        amps.push(psi);
        psi *= t;
    }
    let mut n_sum = 0.0;
    let mut fourth = 0.0;
    let mut m_bc = 0.0;
    for (n, &psi) in amps.iter().enumerate() {
        let prob = psi * psi;
        let nf = n as f64;
        n_sum += nf * prob;
        // b†c†bc |n,n⟩ = n² |n,n⟩
        fourth += nf * nf * prob;
        if let Some(&next) = amps.get(n + 1) {
            // bc |n+1,n+1⟩ = (n+1) |n,n⟩
            m_bc += psi * next * (nf + 1.0);
        }
    }
    Ok(FockMoments { n: n_sum, m_bc, fourth, cutoff, truncation_error })
}

/// Smallest cutoff whose tail bound is below [`TRUNCATION_LIMIT`].
pub fn sufficient_cutoff(squeeze_r: f64) -> usize {
    let q = squeeze_r.tanh().powi(2);
    let mut cutoff = 10;
    while !(tail_bound(q, cutoff) < TRUNCATION_LIMIT) {
        cutoff += 10;
    }
    cutoff
}
