//! System parameters and unit conventions.
//!
//! Every rate is expressed in units of the cavity loss `kappa` (normally 1),
//! so time is measured in `1/kappa`. The only place dimensional SI units
//! appear is [`thermal_occupancy`].

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Mean Bose–Einstein occupancy `1 / (exp(ħω/k_B T) - 1)` of a mode at
/// angular frequency `omega_m0` (rad/s) and temperature `temperature` (K).
pub fn thermal_occupancy(omega_m0: f64, temperature: f64) -> Result<f64> {
    if !(omega_m0 > 0.0) || !omega_m0.is_finite() {
        return Err(Error::invalid("omega_m0", format!("must be positive and finite, got {omega_m0}")));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::invalid("temperature", format!("must be >= 0 and finite, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega_m0 / (K_B * temperature);
    Ok(1.0 / x.exp_m1())
}

/// Rates and regime knobs of the two-mode system.
///
/// Mode 1 is the cavity (loss `kappa`), mode 2 the mechanical resonator
/// (gain `gamma = s * kappa`). Values are validated on construction and
/// immutable afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    kappa: f64,
    s: f64,
    gamma: f64,
    coupling_g: f64,
    n_th: f64,
    squeeze_r: f64,
}

impl SystemParams {
    pub fn new(kappa: f64, s: f64, coupling_g: f64, n_th: f64, squeeze_r: f64) -> Result<Self> {
        fn check(name: &'static str, v: f64, positive: bool) -> Result<()> {
            let ok = v.is_finite() && if positive { v > 0.0 } else { v >= 0.0 };
            if ok {
                Ok(())
            } else {
                let bound = if positive { "> 0" } else { ">= 0" };
                Err(Error::invalid(name, format!("must be finite and {bound}, got {v}")))
            }
        }
        check("kappa", kappa, true)?;
        check("s", s, false)?;
        check("coupling_g", coupling_g, false)?;
        check("n_th", n_th, false)?;
        check("squeeze_r", squeeze_r, false)?;
        Ok(Self { kappa, s, gamma: s * kappa, coupling_g, n_th, squeeze_r })
    }

    /// Balanced vacuum-noise defaults: `kappa = 1`, `s = 1`, no coupling or squeezing.
    pub fn balanced() -> Self {
        Self { kappa: 1.0, s: 1.0, gamma: 1.0, coupling_g: 0.0, n_th: 0.0, squeeze_r: 0.0 }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn coupling_g(&self) -> f64 {
        self.coupling_g
    }
    pub fn n_th(&self) -> f64 {
        self.n_th
    }
    pub fn squeeze_r(&self) -> f64 {
        self.squeeze_r
    }

    /// Critical coupling `(gamma + kappa) / 4` at which the supermodes coalesce.
    pub fn critical_coupling(&self) -> f64 {
        (self.gamma + self.kappa) / 4.0
    }

    pub fn is_balanced(&self) -> bool {
        self.gamma == self.kappa
    }

    pub fn with_ratio(self, s: f64) -> Result<Self> {
        Self::new(self.kappa, s, self.coupling_g, self.n_th, self.squeeze_r)
    }
    pub fn with_coupling(self, coupling_g: f64) -> Result<Self> {
        Self::new(self.kappa, self.s, coupling_g, self.n_th, self.squeeze_r)
    }
    pub fn with_n_th(self, n_th: f64) -> Result<Self> {
        Self::new(self.kappa, self.s, self.coupling_g, n_th, self.squeeze_r)
    }
    pub fn with_squeeze(self, squeeze_r: f64) -> Result<Self> {
        Self::new(self.kappa, self.s, self.coupling_g, self.n_th, squeeze_r)
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::balanced()
    }
}

/// Build [`SystemParams`] from the loss rate and the gain-to-loss ratio.
pub fn params_from_ratio(kappa: f64, s: f64, coupling_g: f64, n_th: f64, squeeze_r: f64) -> Result<SystemParams> {
    SystemParams::new(kappa, s, coupling_g, n_th, squeeze_r)
}

/// Bare circuit couplings and detunings feeding the dispersive elimination
/// of the qubit. All values in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveInputs {
    pub g: f64,
    pub lambda: f64,
    pub delta_c: f64,
    pub delta_m: f64,
    pub omega_c: f64,
    pub omega_m: f64,
}

impl DispersiveInputs {
    pub fn new(g: f64, lambda: f64, delta_c: f64, delta_m: f64, omega_c: f64, omega_m: f64) -> Result<Self> {
        let inputs = Self { g, lambda, delta_c, delta_m, omega_c, omega_m };
        inputs.validate()?;
        Ok(inputs)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.delta_c > 0.0) || !self.delta_c.is_finite() {
            return Err(Error::invalid("delta_c", format!("detuning must be positive, got {}", self.delta_c)));
        }
        if !(self.delta_m > 0.0) || !self.delta_m.is_finite() {
            return Err(Error::invalid("delta_m", format!("detuning must be positive, got {}", self.delta_m)));
        }
        for (name, v) in [("g", self.g), ("lambda", self.lambda), ("omega_c", self.omega_c), ("omega_m", self.omega_m)]
        {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}
