//! Quadratic photon Hamiltonian about a displacement, after each atom has
//! been projected onto its local dressed ground state, and its normal modes.

use nalgebra::{Matrix3, SMatrix};
use num_complex::Complex64 as C64;

use serde::{Deserialize, Serialize};

use super::coherent::{ccp_displacement, ccp_seed, ncp_displacement, DisplacementSolution, FixedPointOptions};
use super::critical::{classify_phase, PhaseLabel};
use super::incoherent::icp_ground_energy;
use super::meanfield::meanfield_energy;
use crate::error::{Error, Result};
use crate::model::{bare_coupling, ModelParams};

/// `H = sum a_ij c_i^dag c_j + 1/2 sum (b_ij c_i^dag c_j^dag + h.c.) + constant`
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub a: Matrix3<C64>,
    pub b: Matrix3<C64>,
    pub constant: f64,
}

/// Builds the displaced-frame quadratic form.
///
/// Per site the atom sees a gap `Delta'_n` and transverse coupling
/// `g'_n = g delta / Delta'_n`; eliminating it to second order gives
/// `-(g'^2 / Delta') (c + c^dag)^2`. The constant collects the mean-field
/// energy, the normal-ordering shift and the `(omega + J) g'^2 / Delta'^2`
/// correction that reduces to the incoherent-phase constant at zero
/// displacement.
pub fn displaced_quadratic_form(p: &ModelParams, d: &DisplacementSolution) -> QuadraticForm {
    let g = bare_coupling(p);
    let (w, delta, j) = (p.omega(), p.delta(), p.j());
    let hop = C64::from_polar(j, p.theta());
    let mut a = Matrix3::<C64>::zeros();
    let mut b = Matrix3::<C64>::zeros();
    let mut constant = meanfield_energy(p, &d.alpha());
    for n in 0..3 {
        let dp = (delta * delta + 16.0 * g * g * d.a[n] * d.a[n]).sqrt();
        let gp2 = (g * delta / dp).powi(2);
        let shift = gp2 / dp;
        a[(n, n)] = C64::new(w - 2.0 * shift, 0.0);
        b[(n, n)] = C64::new(-2.0 * shift, 0.0);
        a[(n, (n + 1) % 3)] += hop;
        a[((n + 1) % 3, n)] += hop.conj();
        constant += -shift + (w + j) * gp2 / (dp * dp);
    }
    QuadraticForm { a, b, constant }
}

impl QuadraticForm {
    /// Normal-mode energies in ascending order.
    ///
    /// Fails if the form is not positive semidefinite or the dynamical matrix
    /// has complex eigenvalues.
    pub fn normal_modes(&self) -> Result<[f64; 3]> {
        let scale = self.a.iter().chain(self.b.iter()).fold(0.0f64, |m, z| m.max(z.norm())).max(1e-300);
        let tol = 1e-9 * scale;

        let mut big = SMatrix::<C64, 6, 6>::zeros();
        let mut dynamical = SMatrix::<C64, 6, 6>::zeros();
        for r in 0..3 {
            for c in 0..3 {
                big[(r, c)] = self.a[(r, c)];
                big[(r, c + 3)] = self.b[(r, c)];
                big[(r + 3, c)] = self.b[(r, c)].conj();
                big[(r + 3, c + 3)] = self.a[(r, c)].conj();
                dynamical[(r, c)] = self.a[(r, c)];
                dynamical[(r, c + 3)] = self.b[(r, c)];
                dynamical[(r + 3, c)] = -self.b[(r, c)].conj();
                dynamical[(r + 3, c + 3)] = -self.a[(r, c)].conj();
            }
        }
        let min_eig = big.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, v| m.min(*v));
        if min_eig < -tol {
            return Err(Error::Instability(format!(
                "quadratic form has a negative direction (lowest eigenvalue {min_eig:.3e})"
            )));
        }
        let eig = dynamical
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::Instability("Schur decomposition did not converge".into()))?;
        let mut vals: Vec<C64> = eig.iter().copied().collect();
        // a zero mode is a Jordan block; its eigenvalues split by ~sqrt(eps)
        let jordan_tol = 1e-6 * scale;
        if let Some(bad) = vals.iter().find(|z| z.im.abs() > jordan_tol.max(tol)) {
            return Err(Error::Instability(format!("complex mode frequency {bad}")));
        }
        vals.sort_by(|x, y| x.re.total_cmp(&y.re));
        let top: [f64; 3] = std::array::from_fn(|k| vals[3 + k].re);
        if top[0] < -jordan_tol {
            return Err(Error::Instability(format!("negative mode frequency {:.3e}", top[0])));
        }
        Ok(top.map(|v| v.max(0.0)))
    }

    /// `constant + (sum of normal modes - tr a) / 2`
    pub fn ground_energy(&self) -> Result<f64> {
        let modes = self.normal_modes()?;
        let trace: f64 = (0..3).map(|n| self.a[(n, n)].re).sum();
        Ok(self.constant + 0.5 * (modes.iter().sum::<f64>() - trace))
    }
}

fn require_converged(d: &DisplacementSolution, what: &'static str) -> Result<()> {
    if !d.converged {
        return Err(Error::domain(what, format!("displacement not converged (residual {:.3e})", d.residual)));
    }
    Ok(())
}

/// Normal-mode energies about a converged displacement, ascending.
pub fn ccp_excitations(p: &ModelParams, d: &DisplacementSolution) -> Result<[f64; 3]> {
    require_converged(d, "ccp_excitations")?;
    displaced_quadratic_form(p, d).normal_modes()
}

/// Mean-field energy plus the zero-point energy of the displaced quadratic form.
pub fn coherent_ground_energy(p: &ModelParams, d: &DisplacementSolution) -> Result<f64> {
    require_converged(d, "coherent_ground_energy")?;
    displaced_quadratic_form(p, d).ground_energy()
}

/// Infinite-frequency ground state selected by [`classify_phase`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticGround {
    pub label: PhaseLabel,
    pub energy: f64,
    /// Zero in the incoherent phase.
    pub displacement: DisplacementSolution,
}

/// Incoherent closed form below threshold, the uniform displacement in the
/// nCP and the chiral fixed point seeded at `q*` in the cCP.
pub fn analytic_ground_state(p: &ModelParams) -> Result<AnalyticGround> {
    let class = classify_phase(p)?;
    let (energy, displacement) = match class.label {
        PhaseLabel::Incoherent => (icp_ground_energy(p)?, DisplacementSolution::zero()),
        PhaseLabel::NormalCoherent => {
            let d = ncp_displacement(p)?;
            (coherent_ground_energy(p, &d)?, d)
        }
        PhaseLabel::ChiralPlus | PhaseLabel::ChiralMinus => {
            let d = ccp_displacement(p, &ccp_seed(p, class.q_star), &FixedPointOptions::default())?;
            if !d.converged {
                return Err(Error::NotConverged { what: "ccp_displacement", iterations: d.iterations, residual: d.residual });
            }
            (coherent_ground_energy(p, &d)?, d)
        }
    };
    Ok(AnalyticGround { label: class.label, energy, displacement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{
        ccp_displacement, ccp_seed, classify_phase, critical_coupling, icp_excitation, icp_ground_energy,
        ncp_displacement, ncp_excitation, FixedPointOptions, MomentumMode,
    };
    use std::f64::consts::PI;

    fn params(g1: f64, theta: f64) -> ModelParams {
        ModelParams::new(0.2, 10.0, g1, 0.01, theta).unwrap()
    }

    fn chiral(p: &ModelParams) -> DisplacementSolution {
        let q = classify_phase(p).unwrap().q_star;
        ccp_displacement(p, &ccp_seed(p, q), &FixedPointOptions::default()).unwrap()
    }

    #[test]
    fn zero_displacement_reproduces_incoherent_phase() {
        let p = params(0.3, 0.9);
        let d = DisplacementSolution::zero();
        let modes = ccp_excitations(&p, &d).unwrap();
        let mut expect: Vec<f64> = MomentumMode::ALL.iter().map(|&q| icp_excitation(&p, q).unwrap()).collect();
        expect.sort_by(f64::total_cmp);
        for k in 0..3 {
            assert!((modes[k] - expect[k]).abs() < 1e-10);
        }
        let e = coherent_ground_energy(&p, &d).unwrap();
        assert!((e - icp_ground_energy(&p).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn uniform_displacement_reproduces_ncp_spectrum() {
        for &th in &[PI, 2.4, -2.9] {
            let p = params(0.7, th);
            let d = ncp_displacement(&p).unwrap();
            let modes = ccp_excitations(&p, &d).unwrap();
            let mut expect: Vec<f64> = MomentumMode::ALL.iter().map(|&q| ncp_excitation(&p, q).unwrap()).collect();
            expect.sort_by(f64::total_cmp);
            for k in 0..3 {
                assert!((modes[k] - expect[k]).abs() < 1e-8, "{modes:?} vs {expect:?}");
            }
        }
    }

    #[test]
    fn chiral_modes_are_stable() {
        for &th in &[0.0, 0.2 * PI, 0.4 * PI, -0.3 * PI] {
            let p = params(0.7, th);
            let modes = ccp_excitations(&p, &chiral(&p)).unwrap();
            assert!(modes.iter().all(|m| *m > 0.05), "{th}: {modes:?}");
        }
    }

    #[test]
    fn chiral_gap_closes_on_critical_line() {
        let base = params(0.0, 0.25 * PI);
        let gc = critical_coupling(&base, MomentumMode::Plus).unwrap();
        let p = base.with_g1(gc).unwrap();
        let modes = ccp_excitations(&p, &DisplacementSolution::zero()).unwrap();
        assert!(modes[0].abs() < 1e-6, "{modes:?}");
    }

    #[test]
    fn ground_energy_even_in_theta() {
        for &th in &[0.15 * PI, 0.35 * PI] {
            let a = coherent_ground_energy(&params(0.7, th), &chiral(&params(0.7, th))).unwrap();
            let b = coherent_ground_energy(&params(0.7, -th), &chiral(&params(0.7, -th))).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn unconverged_input_rejected() {
        let mut d = DisplacementSolution::zero();
        d.converged = false;
        assert!(ccp_excitations(&params(0.3, 0.0), &d).is_err());
    }

    #[test]
    fn chiral_pattern_beats_uniform_inside_chiral_region() {
        for &th in &[0.0, 0.1 * PI, 0.4 * PI] {
            let p = params(0.7, th);
            let uniform = coherent_ground_energy(&p, &ncp_displacement(&p).unwrap()).unwrap();
            let chiral = coherent_ground_energy(&p, &chiral(&p)).unwrap();
            assert!(chiral < uniform - 1e-6, "{th}: {chiral} vs {uniform}");
        }
    }

    #[test]
    fn ground_energy_kinks_at_first_order_line() {
        let tc = crate::analytic::tricritical_point(&params(0.7, 0.0)).theta_c;
        let e = |th: f64| analytic_ground_state(&params(0.7, th)).unwrap().energy;
        let h = 1e-4;
        let left = (e(tc - h) - e(tc - 2.0 * h)) / h;
        let right = (e(tc + 2.0 * h) - e(tc + h)) / h;
        assert!(left > 0.0 && right < 0.0, "{left} {right}");
        assert!((e(tc - 1e-9) - e(tc + 1e-9)).abs() < 1e-6);
        assert_eq!(analytic_ground_state(&params(0.7, tc - h)).unwrap().label, PhaseLabel::ChiralPlus);
        assert_eq!(analytic_ground_state(&params(0.7, tc + h)).unwrap().label, PhaseLabel::NormalCoherent);
        assert_eq!(analytic_ground_state(&params(0.1, tc)).unwrap().label, PhaseLabel::Incoherent);
    }
}
