//! Coherent phases: photon displacements solving the stationarity
//! equations, and the normal-coherent excitation spectrum.
//!
//! With `c = cos theta`, `s = sin theta`, `Delta'_n = sqrt(delta^2 + 16 g^2 A_n^2)`:
//!
//! ```text
//! A_n (omega - 4 g^2 / Delta'_n - M) = -N (A_{n+1} + A_{n-1})
//! B_n (omega - J c)                  = -J s (A_{n+1} - A_{n-1})
//! N = J c + J^2 s^2 / (omega - J c),   M = 2 J^2 s^2 / (omega - J c)
//! ```

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::MomentumMode;
use crate::error::{Error, Result};
use crate::model::{bare_coupling, ModelParams};

/// Per-cavity displacement `alpha_n = A_n + i B_n` in units of photon
/// amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSolution {
    pub a: [f64; 3],
    pub b: [f64; 3],
    /// Largest violation of the displacement equations, both sides divided by `omega`.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl DisplacementSolution {
    pub fn alpha(&self) -> [C64; 3] {
        std::array::from_fn(|n| C64::new(self.a[n], self.b[n]))
    }

    pub fn zero() -> Self {
        Self { a: [0.0; 3], b: [0.0; 3], residual: 0.0, converged: true, iterations: 0 }
    }

    /// Mean-field photon number `sum_n |alpha_n|^2`.
    pub fn photon_number(&self) -> f64 {
        self.alpha().iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.a.iter().chain(self.b.iter()).fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

struct Coefficients {
    g: f64,
    omega: f64,
    delta: f64,
    /// `omega - J cos theta`
    omega_minus: f64,
    n_coef: f64,
    m_coef: f64,
    js: f64,
}

fn coefficients(p: &ModelParams) -> Coefficients {
    let (s, c) = p.theta().sin_cos();
    let (w, j) = (p.omega(), p.j());
    let omega_minus = w - j * c;
    Coefficients {
        g: bare_coupling(p),
        omega: w,
        delta: p.delta(),
        omega_minus,
        n_coef: j * c + j * j * s * s / omega_minus,
        m_coef: 2.0 * j * j * s * s / omega_minus,
        js: j * s,
    }
}

impl Coefficients {
    fn renormalized_gap(&self, a: f64) -> f64 {
        (self.delta * self.delta + 16.0 * self.g * self.g * a * a).sqrt()
    }

    /// Left side minus right side of the real-part equation.
    fn real_eq(&self, a: &[f64; 3], n: usize) -> f64 {
        let dp = self.renormalized_gap(a[n]);
        let den = self.omega - 4.0 * self.g * self.g / dp - self.m_coef;
        a[n] * den + self.n_coef * (a[(n + 1) % 3] + a[(n + 2) % 3])
    }

    fn imag_from_real(&self, a: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|n| -self.js / self.omega_minus * (a[(n + 1) % 3] - a[(n + 2) % 3]))
    }
}

/// Residual of the displacement equations at `(a, b)`, in units of photon
/// amplitude.
pub fn displacement_residual(p: &ModelParams, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let k = coefficients(p);
    let mut r = 0.0f64;
    for n in 0..3 {
        r = r.max(k.real_eq(a, n).abs());
        let im = b[n] * k.omega_minus + k.js * (a[(n + 1) % 3] - a[(n + 2) % 3]);
        r = r.max(im.abs());
    }
    r / k.omega
}

/// Uniform real amplitude for an effective frequency `w_eff`; zero below
/// threshold. Used for seeding only.
pub(crate) fn ncp_amplitude_at(p: &ModelParams, w_eff: f64) -> f64 {
    let g = bare_coupling(p);
    if g == 0.0 || w_eff <= 0.0 {
        return 0.0;
    }
    let r2 = g * g / (w_eff * w_eff) - (p.delta() / (4.0 * g)).powi(2);
    r2.max(0.0).sqrt()
}

/// Uniform real displacement of the normal-coherent phase.
pub fn ncp_displacement(p: &ModelParams) -> Result<DisplacementSolution> {
    let g = bare_coupling(p);
    let w_eff = p.omega() + 2.0 * p.j() * p.theta().cos();
    if w_eff <= 0.0 {
        return Err(Error::domain("ncp_displacement", format!("omega + 2 J cos(theta) = {w_eff:.3e} <= 0")));
    }
    if g == 0.0 {
        return Err(Error::domain("ncp_displacement", "zero coupling has no coherent phase"));
    }
    let first = g * g / (w_eff * w_eff);
    let r2 = first - (p.delta() / (4.0 * g)).powi(2);
    if r2 < -1e-12 * first {
        return Err(Error::domain(
            "ncp_displacement",
            format!("negative radicand {r2:.3e}: g1 = {} is below the q = 0 threshold", p.g1()),
        ));
    }
    let amp = r2.max(0.0).sqrt();
    let a = [amp; 3];
    let b = [0.0; 3];
    let residual = displacement_residual(p, &a, &b);
    Ok(DisplacementSolution { a, b, residual, converged: residual <= 1e-10, iterations: 0 })
}

/// Excitation energy of mode `q` about the uniform displacement.
pub fn ncp_excitation(p: &ModelParams, q: MomentumMode) -> Result<f64> {
    let d = ncp_displacement(p)?;
    let k = coefficients(p);
    let dp = k.renormalized_gap(d.a[0]);
    let ratio = p.delta() / dp;
    let w = p.omega();
    let g1 = p.g1();
    let gp2 = (k.g * ratio).powi(2);
    let wp = |m: MomentumMode| w - 2.0 * gp2 / dp + 2.0 * p.j() * (p.theta() - m.q()).cos();
    let (wq, wmq) = (wp(q), wp(q.neg()));
    let sum = wq + wmq;
    let pair = 4.0 * w * g1 * g1 * ratio.powi(3);
    let radicand = sum * sum - pair * pair;
    if sum <= 0.0 || radicand < -1e-12 * sum * sum {
        return Err(Error::domain("ncp_excitation", format!("negative radicand {radicand:.3e} at q = {q}")));
    }
    let eps = 0.5 * (wq - wmq + radicand.max(0.0).sqrt());
    if eps < -1e-12 * w {
        return Err(Error::domain(
            "ncp_excitation",
            format!("negative excitation {eps:.3e} at q = {q}: uniform displacement is unstable here"),
        ));
    }
    Ok(eps.max(0.0))
}

/// Settings for [`ccp_displacement`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FixedPointOptions {
    /// Relative step tolerance on the amplitudes, also the residual bound.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 200 }
    }
}

/// Plane-wave starting point `A_n = r cos(q* n)` for the chiral solver, with
/// `r` from the uniform closed form at `|omega + 2 J cos(theta - q*)|`.
pub fn ccp_seed(p: &ModelParams, q_star: MomentumMode) -> DisplacementSolution {
    let w_eff = (p.omega() + 2.0 * p.j() * (p.theta() - q_star.q()).cos()).abs();
    let r = ncp_amplitude_at(p, w_eff).max(1e-3);
    let a: [f64; 3] = std::array::from_fn(|n| r * (q_star.q() * (n + 1) as f64).cos());
    let b = coefficients(p).imag_from_real(&a);
    DisplacementSolution { residual: displacement_residual(p, &a, &b), a, b, converged: false, iterations: 0 }
}

/// Solves the displacement equations from `init` by damped Newton iteration
/// on the real-part equations; the imaginary parts follow in closed form.
///
/// Returns the last iterate with `converged = false` when `max_iter` is hit.
pub fn ccp_displacement(
    p: &ModelParams,
    init: &DisplacementSolution,
    opts: &FixedPointOptions,
) -> Result<DisplacementSolution> {
    let k = coefficients(p);
    let mut a = init.a;
    let norm = |v: &[f64; 3]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let fval = |a: &[f64; 3]| -> [f64; 3] { std::array::from_fn(|n| k.real_eq(a, n)) };
    let mut f = fval(&a);
    let mut iterations = 0;
    let mut converged = false;
    let tol = opts.tol;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut jac = nalgebra::Matrix3::<f64>::zeros();
        for n in 0..3 {
            let dp = k.renormalized_gap(a[n]);
            let den = k.omega - 4.0 * k.g * k.g / dp - k.m_coef;
            jac[(n, n)] = den + 64.0 * k.g.powi(4) * a[n] * a[n] / dp.powi(3);
            jac[(n, (n + 1) % 3)] = k.n_coef;
            jac[(n, (n + 2) % 3)] = k.n_coef;
        }
        let rhs = nalgebra::Vector3::new(-f[0], -f[1], -f[2]);
        let Some(step) = jac.lu().solve(&rhs) else {
            return Err(Error::NotConverged {
                what: "ccp_displacement (singular Jacobian)",
                iterations,
                residual: norm(&f) / k.omega,
            });
        };
        // backtrack on the residual norm
        let f0 = norm(&f);
        let mut lambda = 1.0;
        let mut next = a;
        let mut fnext = f;
        for _ in 0..40 {
            next = std::array::from_fn(|n| a[n] + lambda * step[n]);
            fnext = fval(&next);
            if norm(&fnext) <= (1.0 - 1e-4 * lambda) * f0 || f0 == 0.0 {
                break;
            }
            lambda *= 0.5;
        }
        let moved = lambda * step.amax();
        a = next;
        f = fnext;
        if moved <= tol * norm(&a).max(1.0) && norm(&f) / k.omega <= tol * norm(&a).max(1.0) {
            converged = true;
            break;
        }
    }
    let b = k.imag_from_real(&a);
    let residual = displacement_residual(p, &a, &b);
    if norm(&a) < 1e-8 && init.max_amplitude() > 1e-6 {
        log::warn!("ccp_displacement collapsed onto the trivial solution at theta = {}", p.theta());
    }
    let converged = converged && residual <= tol * norm(&a).max(1.0);
    Ok(canonicalize(&DisplacementSolution { a, b, residual, converged, iterations }))
}

/// Picks a reproducible representative of the parity x translation orbit:
/// the lexicographically largest `(A_1, A_2, A_3)` among the six images, so
/// that `A_1 >= |A_2|, |A_3|`.
pub fn canonicalize(d: &DisplacementSolution) -> DisplacementSolution {
    let scale = d.max_amplitude().max(1.0);
    let eps = 1e-9 * scale;
    let mut best = *d;
    let mut first = true;
    for shift in 0..3 {
        for sign in [1.0, -1.0] {
            let a: [f64; 3] = std::array::from_fn(|n| sign * d.a[(n + shift) % 3]);
            let b: [f64; 3] = std::array::from_fn(|n| sign * d.b[(n + shift) % 3]);
            let greater = a
                .iter()
                .zip(best.a.iter())
                .find(|(x, y)| (*x - *y).abs() > eps)
                .map(|(x, y)| x > y)
                .unwrap_or(false);
            if first || greater {
                best = DisplacementSolution { a, b, ..*d };
                first = false;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{
        classify_phase, critical_coupling, default_seeds, icp_excitation, minimize_meanfield, tricritical_point,
        MinimizerOptions,
    };
    use std::f64::consts::PI;

    fn params(g1: f64, theta: f64) -> ModelParams {
        ModelParams::new(0.2, 10.0, g1, 0.01, theta).unwrap()
    }

    #[test]
    fn ncp_closed_form_value() {
        let d = ncp_displacement(&params(0.7, PI)).unwrap();
        for n in 0..3 {
            assert!((d.a[n] - 4.885_628_164_303_824).abs() < 1e-12);
            assert_eq!(d.b[n], 0.0);
        }
        assert!(d.residual < 1e-12);
        assert!(d.converged);
        // parity partner also solves the equations
        let neg = [-d.a[0]; 3];
        assert!(displacement_residual(&params(0.7, PI), &neg, &[0.0; 3]) < 1e-12);
    }

    #[test]
    fn ncp_onset_is_continuous() {
        let base = params(0.0, PI);
        let gc = critical_coupling(&base, MomentumMode::Zero).unwrap();
        let d = ncp_displacement(&base.with_g1(gc * (1.0 + 1e-12)).unwrap()).unwrap();
        assert!(d.a[0] < 1e-3);
        assert!(ncp_displacement(&base.with_g1(gc * 0.99).unwrap()).is_err());
    }

    #[test]
    fn ncp_excitation_closes_at_threshold_and_matches_icp() {
        let base = params(0.0, 2.8);
        let gc = critical_coupling(&base, MomentumMode::Zero).unwrap();
        let at = base.with_g1(gc).unwrap();
        assert!(ncp_excitation(&at, MomentumMode::Zero).unwrap().abs() < 1e-6);
        for q in MomentumMode::ALL {
            let a = ncp_excitation(&at, q).unwrap();
            let b = icp_excitation(&at, q).unwrap();
            assert!((a - b).abs() < 1e-6, "{q}: {a} vs {b}");
        }
    }

    #[test]
    fn ncp_excitation_time_reversal() {
        for &th in &[2.0, 2.6, PI - 0.1] {
            for q in MomentumMode::ALL {
                let a = ncp_excitation(&params(0.7, th), q).unwrap();
                let b = ncp_excitation(&params(0.7, -th), q.neg()).unwrap();
                assert!((a - b).abs() < 1e-13);
                assert!(a >= 0.0);
            }
        }
    }

    #[test]
    fn ncp_excitation_domain_error_below_threshold() {
        assert!(ncp_excitation(&params(0.3, PI), MomentumMode::Zero).is_err());
    }

    #[test]
    fn newton_recovers_closed_form() {
        let p = params(0.7, 2.7);
        let mut seed = ncp_displacement(&p).unwrap();
        seed.a = [seed.a[0] * 1.3, seed.a[1] * 0.8, seed.a[2] * 1.1];
        let d = ccp_displacement(&p, &seed, &FixedPointOptions::default()).unwrap();
        let c = ncp_displacement(&p).unwrap();
        assert!(d.converged);
        for n in 0..3 {
            assert!((d.a[n] - c.a[n]).abs() < 1e-10);
            assert!(d.b[n].abs() < 1e-10);
        }
    }

    #[test]
    fn chiral_solution_matches_minimizer() {
        let p = params(0.7, 0.3 * PI);
        let q = classify_phase(&p).unwrap().q_star;
        let d = ccp_displacement(&p, &ccp_seed(&p, q), &FixedPointOptions::default()).unwrap();
        assert!(d.converged, "{d:?}");
        assert!(d.residual < 1e-10);
        assert!(d.b.iter().any(|b| b.abs() > 1e-3));
        let m = minimize_meanfield(&p, &default_seeds(&p), &MinimizerOptions::default()).unwrap();
        for n in 0..3 {
            assert!((d.a[n] - m.a[n]).abs() < 1e-8, "{d:?} vs {m:?}");
            assert!((d.b[n] - m.b[n]).abs() < 1e-8, "{d:?} vs {m:?}");
        }
    }

    #[test]
    fn chiral_solution_real_at_zero_phase() {
        let p = params(0.7, 0.0);
        let q = classify_phase(&p).unwrap().q_star;
        let d = ccp_displacement(&p, &ccp_seed(&p, q), &FixedPointOptions::default()).unwrap();
        assert!(d.converged);
        assert!(d.b.iter().all(|b| b.abs() < 1e-14));
        // frustrated pattern: one large site against two equal partners
        assert!((d.a[1] - d.a[2]).abs() < 1e-10);
        assert!(d.a[1] < 0.0);
    }

    #[test]
    fn first_order_line_pattern() {
        let base = params(0.7, 0.0);
        let t = tricritical_point(&base);
        let p = base.with_theta(t.theta_c);
        let d = ccp_displacement(&p, &ccp_seed(&p, MomentumMode::Minus), &FixedPointOptions::default()).unwrap();
        assert!(d.converged);
        let a = d.a[0];
        assert!((d.a[1] - a).abs() < 1e-9 && (d.a[2] + a).abs() < 1e-9, "{d:?}");
    }

    #[test]
    fn canonical_orbit_representative() {
        let d = DisplacementSolution { a: [1.0, -2.0, 1.0], b: [0.1, 0.0, -0.1], residual: 0.0, converged: true, iterations: 0 };
        let c = canonicalize(&d);
        assert_eq!(c.a, [2.0, -1.0, -1.0]);
        assert_eq!(c.b, [0.0, 0.1, -0.1]);
        assert!(c.a[0] >= c.a[1].abs() && c.a[0] >= c.a[2].abs());
        assert_eq!(canonicalize(&c), c);
    }
}
