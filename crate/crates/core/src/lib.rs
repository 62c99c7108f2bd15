//! Gaussian dynamics of a lossy microwave cavity coupled to an amplified
//! nanomechanical resonator.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the parameter container and unit helpers,
//! * [`spectrum`] builds the drift/noise matrices and the supermode spectrum,
//! * [`dynamics`] propagates the quadrature covariance matrix,
//! * [`observables`] extracts entanglement, occupations and antibunching,
//! * [`analysis`] reduces observable series (death time, period) and runs
//!   parameter-grid sweeps,
//! * [`oracle`] contains brute-force verifiers used by tests and `verify`,
//! * [`table`] serialises results to CSV/JSON.
//!
//! All rates are in units of the cavity loss `kappa`, and time in `1/kappa`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
mod error;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod spectrum;
pub mod table;

pub use error::{Error, Result};

pub use analysis::{death_time, max_en, period_estimate, Reduction, SweepAxis, SweepParam, SweepSpec};
pub use dynamics::{
    propagate_closed_form, propagate_rk4, tmsv_initial, CovarianceMatrix, CovarianceSeries, Propagator, TrajectoryGrid,
};
pub use model::{params_from_ratio, thermal_occupancy, DispersiveInputs, SystemParams};
pub use observables::{
    antibunching, evolve_observables, evolve_observables_with_noise, log_negativity, mode_moments, Evolution,
    ObservableSample, SecondMoments,
};
pub use oracle::{fock_tmsv_moments, sde_ensemble, EnsembleEstimate, FockMoments};
pub use spectrum::{
    dispersive_reduction, drift_matrix, eigenfrequencies, noise_matrix, spectrum_sweep, spectrum_table, DriftMatrix,
    Noise, NoiseMatrix, PtPhase, Spectrum, SpectrumRow,
};
pub use table::SweepTable;
