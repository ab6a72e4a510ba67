use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytic::{
    ccp_displacement, ccp_seed, critical_coupling, default_seeds, minimize_meanfield, ncp_displacement, omega_q,
    DisplacementSolution, FixedPointOptions, MinimizerOptions, MomentumMode,
};
use crate::ed::{dense_lowest, lanczos_eigenpairs, translate, Hamiltonian, LanczosOptions, StateVector, Truncation};
use crate::error::Result;
use crate::model::ModelParams;
use crate::scaling::ols;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self { name, value, tolerance, passed: value <= tolerance && value.is_finite() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{:<34} {:>12.3e} {:>10.1e}  {status}", self.name, self.value, self.tolerance)
    }
}

fn random_state(t: Truncation, rng: &mut ChaCha8Rng) -> StateVector {
    let amps = (0..t.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    StateVector::new(t, amps).expect("dimension matches").normalized().expect("nonzero")
}

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amps().iter().zip(b.amps()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn parity_op(psi: &StateVector) -> StateVector {
    let t = psi.truncation();
    let amps = psi
        .amps()
        .iter()
        .enumerate()
        .map(|(idx, a)| {
            let (n, s) = t.decode(idx);
            let c = n.iter().sum::<usize>() + s.iter().filter(|&&u| u).count();
            if c % 2 == 0 {
                *a
            } else {
                -*a
            }
        })
        .collect();
    StateVector::new(t, amps).expect("dimension matches")
}

fn generic_params(theta: f64) -> ModelParams {
    ModelParams::new(0.2, 3.0, 0.6, 0.05, theta).expect("valid parameters")
}

fn operator(theta: f64, t: Truncation, fault: bool) -> Hamiltonian {
    let h = Hamiltonian::new(&generic_params(theta), t);
    if fault {
        h.with_flipped_bond(1)
    } else {
        h
    }
}

fn hermiticity(fault: bool) -> Check {
    let t = Truncation::new(4).expect("valid cutoff");
    let h = operator(0.7, t, fault);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = random_state(t, &mut rng);
        let b = random_state(t, &mut rng);
        let lhs = a.inner(&h.apply(&b).expect("dimension matches"));
        let rhs = b.inner(&h.apply(&a).expect("dimension matches")).conj();
        worst = worst.max((lhs - rhs).norm());
    }
    Check::below("hermiticity", worst, 1e-12)
}

fn commutators(fault: bool) -> [Check; 2] {
    let t = Truncation::new(4).expect("valid cutoff");
    let h = operator(0.7, t, fault);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut par, mut tr) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let psi = random_state(t, &mut rng);
        let hp = h.apply(&parity_op(&psi)).expect("dimension matches");
        let ph = parity_op(&h.apply(&psi).expect("dimension matches"));
        par = par.max(max_diff(&hp, &ph));
        let ht = h.apply(&translate(&psi)).expect("dimension matches");
        let th = translate(&h.apply(&psi).expect("dimension matches"));
        tr = tr.max(max_diff(&ht, &th));
    }
    [Check::below("[H, parity]", par, 1e-12), Check::below("[H, translation]", tr, 1e-12)]
}

fn mirror_spectrum(fault: bool) -> Result<Check> {
    let t = Truncation::new(2)?;
    let mut worst = 0.0f64;
    for theta in [0.3, 1.1, 2.5] {
        let a = dense_lowest(&operator(theta, t, fault).to_dense()?, t.dim())?;
        let b = dense_lowest(&operator(-theta, t, fault).to_dense()?, t.dim())?;
        let d = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
    }
    Ok(Check::below("spectrum(theta) = spectrum(-theta)", worst, 1e-10))
}

fn gap_closing() -> Result<Check> {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let theta = -PI + 2.0 * PI * (i as f64 + 0.5) / 20.0;
        let base = ModelParams::new(0.2, 10.0, 0.0, 0.01, theta)?;
        for q in MomentumMode::ALL {
            let g = critical_coupling(&base, q)?;
            let p = base.with_g1(g)?;
            let lhs = omega_q(&p, q) * omega_q(&p, q.neg());
            let rhs = 4.0 * 0.04 * g.powi(4);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(Check::below("gap closing w_q w_-q = 4 w^2 g1^4", worst, 1e-10))
}

fn dense_vs_lanczos(fault: bool) -> Result<Check> {
    let t = Truncation::new(2)?;
    let h = operator(0.9, t, fault);
    let dense = dense_lowest(&h.to_dense()?, 6)?;
    let opts = LanczosOptions { tol: 1e-11, ..LanczosOptions::default() };
    let lz = lanczos_eigenpairs(&h, 6, &opts)?;
    let d = dense.values.iter().zip(&lz.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(Check::below("dense vs Lanczos, n_tr = 2", d, 1e-9))
}

fn displacement_gap(a: &DisplacementSolution, b: &DisplacementSolution) -> f64 {
    a.a.iter().chain(&a.b).zip(b.a.iter().chain(&b.b)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn minimizer_vs_fixed_point() -> Result<Check> {
    let mut worst = 0.0f64;
    for theta in [0.15 * PI, 0.3 * PI, -0.4 * PI] {
        let p = ModelParams::new(0.2, 10.0, 0.7, 0.01, theta)?;
        let q = crate::analytic::classify_phase(&p)?.q_star;
        let fp = ccp_displacement(&p, &ccp_seed(&p, q), &FixedPointOptions::default())?;
        let mf = minimize_meanfield(&p, &default_seeds(&p), &MinimizerOptions::default())?;
        worst = worst.max(displacement_gap(&fp, &mf));
    }
    Ok(Check::below("mean-field minimizer vs fixed point", worst, 1e-8))
}

fn ncp_closed_form_recovered() -> Result<Check> {
    let mut worst = 0.0f64;
    for theta in [0.6 * PI, 0.8 * PI, PI] {
        let p = ModelParams::new(0.2, 10.0, 0.7, 0.01, theta)?;
        let exact = ncp_displacement(&p)?;
        let mut seed = ccp_seed(&p, MomentumMode::Zero);
        seed.a = [0.8 * seed.a[0], 1.1 * seed.a[1], 0.95 * seed.a[2]];
        let solved = ccp_displacement(&p, &seed, &FixedPointOptions::default())?;
        worst = worst.max(displacement_gap(&exact, &solved));
    }
    Ok(Check::below("nCP closed form by generic solver", worst, 1e-10))
}

/// Order parameter `|alpha|` against `g1 - g1c` just above the `q = 0` line.
fn onset_exponent() -> Result<Check> {
    let base = ModelParams::new(0.2, 10.0, 0.0, 0.01, PI)?;
    let gc = critical_coupling(&base, MomentumMode::Zero)?;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for i in 0..8 {
        let dg = gc * 10f64.powf(-6.0 + 3.0 * i as f64 / 7.0);
        let p = base.with_g1(gc + dg)?;
        let mut seed = ccp_seed(&p, MomentumMode::Zero);
        seed.a = seed.a.map(|v| 1.3 * v);
        let d = ccp_displacement(&p, &seed, &FixedPointOptions::default())?;
        x.push(dg.ln());
        y.push(d.a[0].abs().ln());
    }
    let (slope, _, _) = ols(&x, &y);
    Ok(Check::below("order-parameter onset exponent", (slope - 0.5).abs(), 0.01))
}

/// Runs every invariant. `fault` flips the hopping sign on one bond of the
/// ED Hamiltonian so that the translation check must fail.
pub fn run_suite(fault: bool) -> Result<Vec<Check>> {
    let mut out = vec![hermiticity(fault)];
    out.extend(commutators(fault));
    out.push(mirror_spectrum(fault)?);
    out.push(gap_closing()?);
    out.push(dense_vs_lanczos(fault)?);
    out.push(minimizer_vs_fixed_point()?);
    out.push(ncp_closed_form_recovered()?);
    out.push(onset_exponent()?);
    Ok(out)
}
