//! Closed-form physics of the ring in the limit `delta / omega -> infinity`.
//!
//! Momentum convention: the cavity operators are Fourier transformed as
//! `a_n^dag = 3^{-1/2} sum_q e^{i n q} a_q^dag`, so a mode `q` disperses as
//! `omega - 2 omega g1^2 + 2 J cos(theta - q)`. A single photon created by
//! `a_q^dag` is an eigenvector of the site translation `n -> n + 1` with
//! eigenvalue `e^{+iq}`; the plane-wave states built in
//! [`crate::observables::make_one_photon_state`] use the opposite sign, so
//! the analytic mode `q` corresponds to the state label `-q` there.

mod bdg;
mod coherent;
mod critical;
mod incoherent;
mod meanfield;

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use bdg::{
    analytic_ground_state, ccp_excitations, coherent_ground_energy, displaced_quadratic_form, AnalyticGround,
    QuadraticForm,
};
pub use coherent::{
    canonicalize, ccp_displacement, ccp_seed, displacement_residual, ncp_displacement, ncp_excitation,
    DisplacementSolution, FixedPointOptions,
};
pub use critical::{
    classify_phase, critical_coupling, tricritical_point, PhaseClassification, PhaseLabel, TricriticalPoint,
};
pub use incoherent::{bogoliubov_lambda, icp_excitation, icp_ground_energy, omega_q};
pub use meanfield::{
    default_seeds, meanfield_energy, meanfield_gradient, minimize_meanfield, MinimizerOptions,
};

/// One of the three quasi-momenta of the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumMode {
    Zero,
    /// `q = +2 pi / 3`
    Plus,
    /// `q = -2 pi / 3`
    Minus,
}

impl MomentumMode {
    pub const ALL: [MomentumMode; 3] = [MomentumMode::Zero, MomentumMode::Plus, MomentumMode::Minus];

    pub fn q(self) -> f64 {
        match self {
            MomentumMode::Zero => 0.0,
            MomentumMode::Plus => 2.0 * PI / 3.0,
            MomentumMode::Minus => -2.0 * PI / 3.0,
        }
    }

    pub fn neg(self) -> Self {
        match self {
            MomentumMode::Zero => MomentumMode::Zero,
            MomentumMode::Plus => MomentumMode::Minus,
            MomentumMode::Minus => MomentumMode::Plus,
        }
    }

    /// Integer label `k` with `q = 2 pi k / 3`, `k` in `{-1, 0, 1}`.
    pub fn index(self) -> i32 {
        match self {
            MomentumMode::Zero => 0,
            MomentumMode::Plus => 1,
            MomentumMode::Minus => -1,
        }
    }

    /// Nearest admissible momentum to an arbitrary angle.
    pub fn nearest(q: f64) -> Self {
        let k = (crate::model::wrap_angle(q) * 3.0 / (2.0 * PI)).round() as i32;
        match k.rem_euclid(3) {
            0 => MomentumMode::Zero,
            1 => MomentumMode::Plus,
            _ => MomentumMode::Minus,
        }
    }
}

impl fmt::Display for MomentumMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentumMode::Zero => "0",
            MomentumMode::Plus => "+2pi/3",
            MomentumMode::Minus => "-2pi/3",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn momentum_roundtrip() {
        for m in MomentumMode::ALL {
            assert_eq!(MomentumMode::nearest(m.q()), m);
            assert_eq!(m.neg().neg(), m);
            assert!((m.neg().q() + m.q()).abs() < 1e-15);
        }
        assert_eq!(MomentumMode::nearest(4.0 * PI / 3.0), MomentumMode::Minus);
    }
}
