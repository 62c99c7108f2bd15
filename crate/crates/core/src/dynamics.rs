//! Covariance-matrix propagation under `dW/dt = A W + W Aᵀ + Z`.
//!
//! Two independent routes are provided: an exact propagator built from the
//! exponential of the 8×8 block matrix `[[A, Z], [0, -Aᵀ]]`, and a classical
//! fixed-step RK4 integrator. The block route stays valid at the exceptional
//! point, where `A` is defective and eigendecomposition breaks down.

use nalgebra::{Matrix4, SMatrix};

use crate::error::{Error, Result};
use crate::spectrum::{DriftMatrix, NoiseMatrix};
use crate::table::SweepTable;

/// Any covariance entry beyond this magnitude is reported as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e100;

/// Slack for the uncertainty-principle check `W + iΩ/2 ≥ 0`.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-9;

type Matrix8 = SMatrix<f64, 8, 8>;

/// Symplectic form with `[[0, 1], [-1, 0]]` blocks per mode.
pub fn symplectic_form() -> Matrix4<f64> {
    #[rustfmt::skip]
    let omega = Matrix4::new(
        0.0,  1.0, 0.0,  0.0,
        -1.0, 0.0, 0.0,  0.0,
        0.0,  0.0, 0.0,  1.0,
        0.0,  0.0, -1.0, 0.0,
    );
    omega
}

/// Symmetrized quadrature covariance in the basis `(q1, p1, q2, p2)`.
///
/// The vacuum is `I/2`. Symmetry is exact: every constructor symmetrizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(Matrix4<f64>);

impl CovarianceMatrix {
    pub fn from_matrix(m: Matrix4<f64>) -> Self {
        Self((m + m.transpose()) * 0.5)
    }

    pub fn vacuum() -> Self {
        Self(Matrix4::identity() * 0.5)
    }

    pub fn as_matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// Zero-based entry accessor.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// The ten entries `w11, w12, .., w44` of the upper triangle, row-major.
    pub fn upper_triangle(&self) -> [f64; 10] {
        let mut out = [0.0; 10];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                out[k] = self.0[(i, j)];
                k += 1;
            }
        }
        out
    }

    /// Exchange the roles of the two modes.
    pub fn swap_modes(&self) -> Self {
        let perm = [2, 3, 0, 1];
        Self(Matrix4::from_fn(|i, j| self.0[(perm[i], perm[j])]))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn is_finite_within_guard(&self) -> bool {
        self.0.iter().all(|x| x.is_finite() && x.abs() <= DIVERGENCE_LIMIT)
    }

    /// Smallest eigenvalue of the Hermitian matrix `W + iΩ/2`.
    ///
    /// Computed through the real 8×8 embedding `[[W, -Ω/2], [Ω/2, W]]`,
    /// whose spectrum is that of the Hermitian matrix with each value doubled.
    pub fn min_physical_eigenvalue(&self) -> f64 {
        let half_omega = symplectic_form() * 0.5;
        let mut m = Matrix8::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.0);
        m.fixed_view_mut::<4, 4>(4, 4).copy_from(&self.0);
        m.fixed_view_mut::<4, 4>(0, 4).copy_from(&(-half_omega));
        m.fixed_view_mut::<4, 4>(4, 0).copy_from(&half_omega);
        m.symmetric_eigenvalues().min()
    }

    pub fn is_physical(&self) -> bool {
        self.min_physical_eigenvalue() >= -PHYSICALITY_TOLERANCE
    }
}

/// Uniform time grid `t0, t0 + h, .., t_end` with `n_steps + 1` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryGrid {
    t0: f64,
    t_end: f64,
    n_steps: usize,
}

impl TrajectoryGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t0 >= 0.0) || !t0.is_finite() {
            return Err(Error::invalid("t0", format!("must be finite and >= 0, got {t0}")));
        }
        if !(t_end > t0) || !t_end.is_finite() {
            return Err(Error::invalid("t_end", format!("must be finite and > t0 = {t0}, got {t_end}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be positive"));
        }
        Ok(Self { t0, t_end, n_steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    /// Number of grid points, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t0 + k as f64 * self.step()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSeries {
    pub grid: TrajectoryGrid,
    pub states: Vec<CovarianceMatrix>,
    /// Grid index at which the overflow guard fired; `states` holds only the
    /// points before it.
    pub diverged_at: Option<usize>,
}

impl CovarianceSeries {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.times().take(self.states.len())
    }

    pub fn last(&self) -> Option<&CovarianceMatrix> {
        self.states.last()
    }

    /// CSV/JSON table with columns `t,w11,w12,..,w44`.
    pub fn to_table(&self) -> SweepTable {
        let mut header = vec!["t".to_string()];
        for i in 1..=4 {
            for j in i..=4 {
                header.push(format!("w{i}{j}"));
            }
        }
        let mut table = SweepTable::new(header);
        for (t, w) in self.times().zip(&self.states) {
            let mut row = vec![Some(t)];
            row.extend(w.upper_triangle().iter().map(|&x| Some(x)));
            table.push(row);
        }
        table
    }
}

/// Covariance of the two-mode squeezed vacuum `exp[r(c†b† - cb)]|0,0⟩`.
pub fn tmsv_initial(squeeze_r: f64) -> Result<CovarianceMatrix> {
    if !(squeeze_r >= 0.0) || !squeeze_r.is_finite() {
        return Err(Error::invalid("squeeze_r", format!("must be finite and >= 0, got {squeeze_r}")));
    }
    let d = (2.0 * squeeze_r).cosh() / 2.0;
    let c = (2.0 * squeeze_r).sinh() / 2.0;
    #[rustfmt::skip]
    let w = Matrix4::new(
        d,   0.0, c,   0.0,
        0.0, d,   0.0, -c,
        c,   0.0, d,   0.0,
        0.0, -c,  0.0, d,
    );
    Ok(CovarianceMatrix(w))
}

/// Exact one-interval map `W -> F W Fᵀ + Q` with `F = exp(A t)` and
/// `Q = ∫₀ᵗ exp(A s) Z exp(Aᵀ s) ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub flow: Matrix4<f64>,
    pub noise: Matrix4<f64>,
}

impl Propagator {
    pub fn new(a: &DriftMatrix, z: &NoiseMatrix, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
        }
        let a = a.as_matrix();
        let mut block = Matrix8::zeros();
        block.fixed_view_mut::<4, 4>(0, 0).copy_from(&(a * t));
        block.fixed_view_mut::<4, 4>(0, 4).copy_from(&(z.as_matrix() * t));
        block.fixed_view_mut::<4, 4>(4, 4).copy_from(&(-a.transpose() * t));
        let e = block.exp();
        let flow: Matrix4<f64> = e.fixed_view::<4, 4>(0, 0).into_owned();
        // upper-right block is ∫ e^{A(t-s)} Z e^{-Aᵀ s} ds; right-multiplying by
        // e^{Aᵀ t} turns it into the noise integral
        let noise = e.fixed_view::<4, 4>(0, 4) * flow.transpose();
        Ok(Self { flow, noise: (noise + noise.transpose()) * 0.5 })
    }

    pub fn apply(&self, w: &CovarianceMatrix) -> CovarianceMatrix {
        CovarianceMatrix::from_matrix(self.flow * w.0 * self.flow.transpose() + self.noise)
    }
}

/// Exact covariance at time `t` starting from `w0` at time 0.
pub fn propagate_closed_form(
    w0: &CovarianceMatrix,
    a: &DriftMatrix,
    z: &NoiseMatrix,
    t: f64,
) -> Result<CovarianceMatrix> {
    let w = Propagator::new(a, z, t)?.apply(w0);
    if w.is_finite_within_guard() {
        Ok(w)
    } else {
        Err(Error::Divergence { t })
    }
}

fn lyapunov_rhs(a: &Matrix4<f64>, z: &Matrix4<f64>, w: &Matrix4<f64>) -> Matrix4<f64> {
    a * w + w * a.transpose() + z
}

/// Classical fixed-step RK4 on the grid. Stops at the first state that trips
/// the overflow guard and records its index in `diverged_at`.
pub fn propagate_rk4(
    w0: &CovarianceMatrix,
    a: &DriftMatrix,
    z: &NoiseMatrix,
    grid: &TrajectoryGrid,
) -> Result<CovarianceSeries> {
    if grid.n_steps() == 0 {
        return Err(Error::invalid("n_steps", "must be positive"));
    }
    let h = grid.step();
    let a = a.as_matrix();
    let z = z.as_matrix();
    let mut states = Vec::with_capacity(grid.len());
    let mut w = *w0;
    if !w.is_finite_within_guard() {
        return Ok(CovarianceSeries { grid: *grid, states, diverged_at: Some(0) });
    }
    states.push(w);
    for k in 1..grid.len() {
        let m = &w.0;
        let k1 = lyapunov_rhs(a, z, m);
        let k2 = lyapunov_rhs(a, z, &(m + k1 * (h / 2.0)));
        let k3 = lyapunov_rhs(a, z, &(m + k2 * (h / 2.0)));
        let k4 = lyapunov_rhs(a, z, &(m + k3 * h));
        w = CovarianceMatrix::from_matrix(m + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0));
        if !w.is_finite_within_guard() {
            return Ok(CovarianceSeries { grid: *grid, states, diverged_at: Some(k) });
        }
        states.push(w);
    }
    Ok(CovarianceSeries { grid: *grid, states, diverged_at: None })
}

/// Largest entrywise deviation between two matrices, relative to the largest
/// entry of `reference`.
pub fn relative_deviation(w: &CovarianceMatrix, reference: &CovarianceMatrix) -> f64 {
    (w.0 - reference.0).amax() / reference.max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params_from_ratio;
    use crate::spectrum::{drift_matrix, noise_matrix};

    fn mats(s: f64, g: f64) -> (DriftMatrix, NoiseMatrix) {
        let p = params_from_ratio(1.0, s, g, 0.0, 0.0).unwrap();
        (drift_matrix(&p), noise_matrix(&p))
    }

    #[test]
    fn vacuum_is_tmsv_zero() {
        assert_eq!(tmsv_initial(0.0).unwrap(), CovarianceMatrix::vacuum());
        assert!(tmsv_initial(-0.1).is_err());
    }

    #[test]
    fn tmsv_entries() {
        let w = tmsv_initial(1.0).unwrap();
        for i in 0..4 {
            assert!((w.get(i, i) - 1.881_097_845_541_815_7).abs() < 1e-15);
        }
        assert!((w.get(0, 2) - 1.813_430_203_923_509_4).abs() < 1e-15);
        assert!((w.get(1, 3) + 1.813_430_203_923_509_4).abs() < 1e-15);
        for (i, j) in [(0, 1), (0, 3), (1, 2), (2, 3)] {
            assert_eq!(w.get(i, j), 0.0);
        }
    }

    #[test]
    fn tmsv_is_pure_and_physical() {
        for r in [0.0, 0.3, 1.0, 2.0] {
            let w = tmsv_initial(r).unwrap();
            assert!((w.as_matrix().determinant() - 1.0 / 16.0).abs() < 1e-9);
            assert!(w.min_physical_eigenvalue().abs() < 1e-9);
        }
    }

    #[test]
    fn nonphysical_detected() {
        let w = CovarianceMatrix::from_matrix(Matrix4::identity() * 0.3);
        assert!(!w.is_physical());
        assert!((w.min_physical_eigenvalue() + 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let (a, z) = mats(2.0, 2.3);
        let w0 = tmsv_initial(1.0).unwrap();
        assert_eq!(propagate_closed_form(&w0, &a, &z, 0.0).unwrap(), w0);
    }

    #[test]
    fn decoupled_vacuum() {
        // scalar solutions: cavity stays at 1/2, resonator follows e^{t} - 1/2
        let (a, z) = mats(1.0, 0.0);
        for t in [0.1, 1.0, 3.0] {
            let w = propagate_closed_form(&CovarianceMatrix::vacuum(), &a, &z, t).unwrap();
            assert!((w.get(0, 0) - 0.5).abs() < 1e-13);
            assert!((w.get(1, 1) - 0.5).abs() < 1e-13);
            let mech = t.exp() - 0.5;
            assert!((w.get(2, 2) - mech).abs() < 1e-12 * mech);
            assert!((w.get(3, 3) - mech).abs() < 1e-12 * mech);
            assert!(w.get(0, 2).abs() < 1e-14);
        }
    }

    #[test]
    fn semigroup() {
        let w0 = tmsv_initial(1.0).unwrap();
        for (s, g) in [(1.0, 1.5), (1.0, 0.5), (2.0, 2.3), (0.5, 0.2)] {
            let (a, z) = mats(s, g);
            let direct = propagate_closed_form(&w0, &a, &z, 2.5).unwrap();
            let half = propagate_closed_form(&w0, &a, &z, 1.0).unwrap();
            let composed = propagate_closed_form(&half, &a, &z, 1.5).unwrap();
            assert!(relative_deviation(&composed, &direct) < 1e-10, "s={s} G={g}");
        }
    }

    #[test]
    fn noiseless_balanced_flow_is_periodic() {
        let (a, _) = mats(1.0, 1.5);
        let z = NoiseMatrix::zero();
        let period = std::f64::consts::PI / (1.5f64 * 1.5 - 0.25).sqrt();
        let w0 = tmsv_initial(1.0).unwrap();
        for t in [0.0, 0.4, 1.3] {
            let w = propagate_closed_form(&w0, &a, &z, t).unwrap();
            let later = propagate_closed_form(&w0, &a, &z, t + period).unwrap();
            assert!((w.0 - later.0).amax() < 1e-8);
        }
    }

    #[test]
    fn rk4_keeps_cavity_vacuum() {
        let (a, z) = mats(1.0, 0.0);
        let grid = TrajectoryGrid::new(0.0, 1.0, 100).unwrap();
        let series = propagate_rk4(&CovarianceMatrix::vacuum(), &a, &z, &grid).unwrap();
        assert_eq!(series.states.len(), 101);
        for w in &series.states {
            assert!((w.get(0, 0) - 0.5).abs() < 1e-10);
            assert!((w.get(1, 1) - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn rk4_matches_closed_form() {
        let w0 = tmsv_initial(1.0).unwrap();
        for (s, g) in [(1.0, 1.5), (1.0, 0.7), (2.0, 1.3), (0.0, 0.3), (1.0, 0.5)] {
            let (a, z) = mats(s, g);
            let grid = TrajectoryGrid::new(0.0, 3.0, 1500).unwrap();
            let series = propagate_rk4(&w0, &a, &z, &grid).unwrap();
            let exact = propagate_closed_form(&w0, &a, &z, 3.0).unwrap();
            let dev = relative_deviation(series.last().unwrap(), &exact);
            assert!(dev < 1e-8, "s={s} G={g}: {dev:e}");
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let w0 = tmsv_initial(1.0).unwrap();
        let (a, z) = mats(1.0, 1.5);
        let exact = propagate_closed_form(&w0, &a, &z, 2.0).unwrap();
        let err = |n| {
            let grid = TrajectoryGrid::new(0.0, 2.0, n).unwrap();
            let s = propagate_rk4(&w0, &a, &z, &grid).unwrap();
            (s.last().unwrap().0 - exact.0).amax()
        };
        let ratio = err(50) / err(100);
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }

    #[test]
    fn rk4_flags_divergence() {
        let p = params_from_ratio(1.0, 400.0, 0.0, 0.0, 0.0).unwrap();
        let grid = TrajectoryGrid::new(0.0, 2.0, 4000).unwrap();
        let series = propagate_rk4(&CovarianceMatrix::vacuum(), &drift_matrix(&p), &noise_matrix(&p), &grid).unwrap();
        let k = series.diverged_at.expect("should overflow");
        assert_eq!(series.states.len(), k);
        assert!(series.states.iter().all(|w| w.is_finite_within_guard()));
        assert!(matches!(
            propagate_closed_form(&CovarianceMatrix::vacuum(), &drift_matrix(&p), &noise_matrix(&p), 2.0),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(TrajectoryGrid::new(0.0, 1.0, 0).is_err());
        assert!(TrajectoryGrid::new(1.0, 1.0, 10).is_err());
        assert!(TrajectoryGrid::new(-1.0, 1.0, 10).is_err());
        let g = TrajectoryGrid::new(0.0, 2.0, 4).unwrap();
        assert_eq!(g.times().collect::<Vec<_>>(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn series_table_header() {
        let (a, z) = mats(1.0, 1.0);
        let grid = TrajectoryGrid::new(0.0, 0.1, 2).unwrap();
        let table = propagate_rk4(&CovarianceMatrix::vacuum(), &a, &z, &grid).unwrap().to_table();
        assert_eq!(table.header().join(","), "t,w11,w12,w13,w14,w22,w23,w24,w33,w34,w44");
        assert_eq!(table.rows().len(), 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn trajectories_stay_physical(s in 0.0f64..3.0, g in 0.0f64..3.0, r in 0.0f64..2.0, n_th in 0.0f64..2.0) {
                let p = params_from_ratio(1.0, s, g, n_th, r).unwrap();
                let prop = Propagator::new(&drift_matrix(&p), &noise_matrix(&p), 0.25).unwrap();
                let mut w = tmsv_initial(r).unwrap();
                for _ in 0..16 {
                    w = prop.apply(&w);
                    prop_assert_eq!(w.as_matrix(), &w.as_matrix().transpose());
                    prop_assert!(w.min_physical_eigenvalue() >= -PHYSICALITY_TOLERANCE);
                }
            }
        }
    }
}
