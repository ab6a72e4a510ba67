//! Physical parameters of the three-cavity ring and the quantities derived
//! directly from them.
//!
//! Energies are carried in whatever absolute unit the caller chooses (the
//! figure recipes use `omega = 0.2`). The coupling is stored in its scaled
//! form `g1 = g / sqrt(delta * omega)`, so changing the frequency ratio at
//! fixed `g1` rescales the bare coupling automatically.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wrap an angle into the canonical interval `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > PI {
        t -= two_pi;
    }
    // rem_euclid can land exactly on 2pi for tiny negative inputs
    if t <= -PI {
        t += two_pi;
    }
    t
}

/// Parameters of the ring: cavity frequency, atomic gap, scaled coupling,
/// hopping amplitude and hopping phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    omega: f64,
    delta: f64,
    g1: f64,
    j: f64,
    theta: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    omega: f64,
    delta: f64,
    g1: f64,
    j: f64,
    theta: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.omega, r.delta, r.g1, r.j, r.theta)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams { omega: p.omega, delta: p.delta, g1: p.g1, j: p.j, theta: p.theta }
    }
}

impl ModelParams {
    /// Validates the parameters and wraps `theta` into `(-pi, pi]`.
    pub fn new(omega: f64, delta: f64, g1: f64, j: f64, theta: f64) -> Result<Self> {
        let bad = |name: &'static str, value: f64, rule: &'static str| {
            Err(Error::InvalidParameter { name, value, rule })
        };
        if !(omega.is_finite() && omega > 0.0) {
            return bad("omega", omega, "must be finite and > 0");
        }
        if !(delta.is_finite() && delta > 0.0) {
            return bad("delta", delta, "must be finite and > 0");
        }
        if !(g1.is_finite() && g1 >= 0.0) {
            return bad("g1", g1, "must be finite and >= 0");
        }
        if !(j.is_finite() && j >= 0.0) {
            return bad("j", j, "must be finite and >= 0");
        }
        if !theta.is_finite() {
            return bad("theta", theta, "must be finite");
        }
        Ok(Self { omega, delta, g1, j, theta: wrap_angle(theta) })
    }

    /// Builds parameters from a frequency ratio `eta = delta / omega`.
    pub fn with_ratio(omega: f64, eta: FrequencyRatio, g1: f64, j: f64, theta: f64) -> Result<Self> {
        Self::new(omega, eta.eta() * omega, g1, j, theta)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn g1(&self) -> f64 {
        self.g1
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn ratio(&self) -> FrequencyRatio {
        FrequencyRatio { eta: self.delta / self.omega }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta: wrap_angle(theta), ..*self }
    }

    pub fn with_g1(&self, g1: f64) -> Result<Self> {
        Self::new(self.omega, self.delta, g1, self.j, self.theta)
    }

    pub fn with_j(&self, j: f64) -> Result<Self> {
        Self::new(self.omega, self.delta, self.g1, j, self.theta)
    }

    /// Same `omega`, `g1`, `j`, `theta`; atomic gap set to `eta * omega`.
    pub fn with_eta(&self, eta: FrequencyRatio) -> Self {
        Self { delta: eta.eta() * self.omega, ..*self }
    }

    /// `J / omega`.
    pub fn hopping_ratio(&self) -> f64 {
        self.j / self.omega
    }
}

/// Bare atom-photon coupling `g = g1 * sqrt(delta * omega)`.
pub fn bare_coupling(p: &ModelParams) -> f64 {
    p.g1 * (p.delta * p.omega).sqrt()
}

/// Flux through the ring, `3 theta`, wrapped to `(-pi, pi]`.
pub fn flux(p: &ModelParams) -> f64 {
    wrap_angle(3.0 * p.theta)
}

/// `eta = delta / omega`; plays the role of the thermodynamic-limit parameter.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FrequencyRatio {
    eta: f64,
}

impl FrequencyRatio {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter { name: "eta", value: eta, rule: "must be finite and > 0" });
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}
