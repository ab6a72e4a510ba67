//! Incoherent (normal) phase: spectrum of the Schrieffer-Wolff projected
//! quadratic photon Hamiltonian.

use super::MomentumMode;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Bare dispersion of mode `q` in the effective photon Hamiltonian,
/// `omega - 2 omega g1^2 + 2 J cos(theta - q)`.
pub fn omega_q(p: &ModelParams, q: MomentumMode) -> f64 {
    let w = p.omega();
    w - 2.0 * w * p.g1() * p.g1() + 2.0 * p.j() * (p.theta() - q.q()).cos()
}

/// `4 omega g1^2`, the pairing scale of the squeezing term.
fn pairing(p: &ModelParams) -> f64 {
    4.0 * p.omega() * p.g1() * p.g1()
}

/// Bogoliubov excitation energy of mode `q` in the incoherent phase.
///
/// Fails when `q` (or its partner `-q`) is past its gap closing.
pub fn icp_excitation(p: &ModelParams, q: MomentumMode) -> Result<f64> {
    let wq = omega_q(p, q);
    let wmq = omega_q(p, q.neg());
    let sum = wq + wmq;
    let pair = pairing(p);
    let radicand = sum * sum - pair * pair;
    // rounding slack only: exactly at threshold the radicand is ~0 for q = 0
    if sum <= 0.0 || radicand < -1e-12 * sum * sum {
        return Err(Error::domain(
            "icp_excitation",
            format!("negative radicand {radicand:.3e} at q = {q} (coupling beyond the incoherent phase)"),
        ));
    }
    let eps = 0.5 * (radicand.max(0.0).sqrt() + wq - wmq);
    let slack = 1e-12 * p.omega();
    if eps < -slack {
        return Err(Error::domain(
            "icp_excitation",
            format!("negative excitation energy {eps:.3e} at q = {q} (coupling beyond g1c)"),
        ));
    }
    Ok(eps.max(0.0))
}

/// Constant shift left over after projecting onto the atomic ground states.
fn icp_energy_constant(p: &ModelParams) -> f64 {
    let (w, d, g1, j) = (p.omega(), p.delta(), p.g1(), p.j());
    -1.5 * d - 3.0 * w * g1 * g1 + 3.0 * (w + j) * g1 * g1 * w / d
}

/// Ground energy `sum_q (eps_q - omega_q) / 2 + E0` of the incoherent phase.
pub fn icp_ground_energy(p: &ModelParams) -> Result<f64> {
    let mut zero_point = 0.0;
    for q in MomentumMode::ALL {
        zero_point += 0.5 * (icp_excitation(p, q)? - omega_q(p, q));
    }
    Ok(zero_point + icp_energy_constant(p))
}

/// Squeezing parameter of the two-mode Bogoliubov transformation for `+-q`.
pub fn bogoliubov_lambda(p: &ModelParams, q: MomentumMode) -> Result<f64> {
    let sum = omega_q(p, q) + omega_q(p, q.neg());
    let pair = pairing(p);
    if sum - pair <= 0.0 {
        return Err(Error::domain(
            "bogoliubov_lambda",
            format!("omega_q + omega_-q = {sum:.6e} does not exceed 4 omega g1^2 = {pair:.6e}"),
        ));
    }
    Ok(((sum + pair) / (sum - pair)).ln() / 8.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::critical_coupling;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(g1: f64, j: f64, theta: f64) -> ModelParams {
        ModelParams::new(0.2, 15.0, g1, j, theta).unwrap()
    }

    #[test]
    fn omega_q_examples() {
        let p = params(0.0, 0.0, 0.7);
        for q in MomentumMode::ALL {
            assert_eq!(omega_q(&p, q), 0.2);
        }
        let p = params(0.1, 0.01, 0.0);
        assert!((omega_q(&p, MomentumMode::Zero) - 0.216).abs() < 1e-15);
        let p = params(0.3, 0.02, 2.0 * PI / 3.0);
        let expect = 0.2 - 2.0 * 0.2 * 0.09 + 0.04;
        assert!((omega_q(&p, MomentumMode::Plus) - expect).abs() < 1e-15);
    }

    #[test]
    fn excitation_examples() {
        let p = params(0.0, 0.01, 0.4);
        for q in MomentumMode::ALL {
            let bare = 0.2 + 0.02 * (0.4 - q.q()).cos();
            assert!((icp_excitation(&p, q).unwrap() - bare).abs() < 1e-15);
        }
        let p = params(0.1, 0.01, 0.0);
        let e = icp_excitation(&p, MomentumMode::Zero).unwrap();
        assert!((e - 0.215_962_959_787_089_4).abs() < 1e-13, "{e}");
    }

    #[test]
    fn excitation_vanishes_at_critical_coupling() {
        for &theta in &[0.0, 0.3, 1.2, 2.5, -2.0, PI] {
            for q in MomentumMode::ALL {
                let base = ModelParams::new(0.2, 10.0, 0.0, 0.01, theta).unwrap();
                let gc = critical_coupling(&base, q).unwrap();
                let p = base.with_g1(gc).unwrap();
                // the softer of the +-q pair closes
                let e = icp_excitation(&p, q).unwrap().min(icp_excitation(&p, q.neg()).unwrap());
                assert!(e.abs() < 1e-7, "theta {theta} q {q} eps {e}");
            }
        }
    }

    #[test]
    fn excitation_domain_error_past_threshold() {
        let p = params(0.8, 0.01, 0.0);
        assert!(matches!(icp_excitation(&p, MomentumMode::Zero), Err(Error::Domain { .. })));
        assert!(icp_ground_energy(&p).is_err());
        assert!(bogoliubov_lambda(&p, MomentumMode::Zero).is_err());
    }

    #[test]
    fn ground_energy_decoupled() {
        let p = params(0.0, 0.0, 1.0);
        assert!((icp_ground_energy(&p).unwrap() + 22.5).abs() < 1e-12);
    }

    #[test]
    fn lambda_examples() {
        let p = params(0.0, 0.01, 0.5);
        for q in MomentumMode::ALL {
            assert_eq!(bogoliubov_lambda(&p, q).unwrap(), 0.0);
        }
        let p = params(0.1, 0.01, 0.0);
        let l = bogoliubov_lambda(&p, MomentumMode::Zero).unwrap();
        assert!((l - (0.44f64 / 0.424).ln() / 8.0).abs() < 1e-15);
        assert!((l - 0.004_630_158_960_043_6).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn lambda_symmetric(theta in -PI..PI, g1 in 0.0f64..0.4) {
            let p = params(g1, 0.01, theta);
            for q in MomentumMode::ALL {
                let a = bogoliubov_lambda(&p, q).unwrap();
                let b = bogoliubov_lambda(&p, q.neg()).unwrap();
                prop_assert!((a - b).abs() < 1e-15);
                prop_assert!(a >= 0.0);
            }
        }

        #[test]
        fn time_reversal(theta in -PI..PI, g1 in 0.0f64..0.4) {
            let p = params(g1, 0.01, theta);
            let m = params(g1, 0.01, -theta);
            for q in MomentumMode::ALL {
                prop_assert!((omega_q(&p, q) - omega_q(&m, q.neg())).abs() < 1e-14);
                let a = icp_excitation(&p, q).unwrap();
                let b = icp_excitation(&m, q.neg()).unwrap();
                prop_assert!((a - b).abs() < 1e-13);
            }
            prop_assert!((icp_ground_energy(&p).unwrap() - icp_ground_energy(&m).unwrap()).abs() < 1e-12);
        }
    }
}
