//! Mean-field energy of a product of coherent photon states with each atom
//! relaxed into its local ground state.
//!
//! `E(alpha) = sum_n [omega |alpha_n|^2 - sqrt(delta^2 + 16 g^2 A_n^2) / 2]
//!           + 2 J sum_n Re(e^{i theta} alpha_n^* alpha_{n+1})`
//!
//! with `alpha_n = A_n + i B_n`. Its stationary points are exactly the
//! solutions of the displacement equations, which makes the minimizer below
//! an independent check of [`super::ccp_displacement`].

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64 as C64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::coherent::{canonicalize, displacement_residual, ncp_amplitude_at, DisplacementSolution};
use crate::error::{Error, Result};
use crate::model::{bare_coupling, ModelParams};

type V6 = SVector<f64, 6>;
type M6 = SMatrix<f64, 6, 6>;

/// Packs `(A_1, A_2, A_3, B_1, B_2, B_3)`.
fn pack(alpha: &[C64; 3]) -> V6 {
    V6::new(alpha[0].re, alpha[1].re, alpha[2].re, alpha[0].im, alpha[1].im, alpha[2].im)
}

fn unpack(x: &V6) -> [C64; 3] {
    [C64::new(x[0], x[3]), C64::new(x[1], x[4]), C64::new(x[2], x[5])]
}

pub fn meanfield_energy(p: &ModelParams, alpha: &[C64; 3]) -> f64 {
    let g = bare_coupling(p);
    let (w, d, j) = (p.omega(), p.delta(), p.j());
    let phase = C64::from_polar(1.0, p.theta());
    let mut e = 0.0;
    for n in 0..3 {
        let a = alpha[n];
        e += w * a.norm_sqr() - 0.5 * (d * d + 16.0 * g * g * a.re * a.re).sqrt();
        e += 2.0 * j * (phase * a.conj() * alpha[(n + 1) % 3]).re;
    }
    e
}

/// Gradient with respect to `(A_1, A_2, A_3, B_1, B_2, B_3)`.
pub fn meanfield_gradient(p: &ModelParams, alpha: &[C64; 3]) -> [f64; 6] {
    let x = pack(alpha);
    let gr = gradient(p, &x);
    [gr[0], gr[1], gr[2], gr[3], gr[4], gr[5]]
}

fn gradient(p: &ModelParams, x: &V6) -> V6 {
    let g = bare_coupling(p);
    let (w, d, j) = (p.omega(), p.delta(), p.j());
    let (s, c) = p.theta().sin_cos();
    let mut out = V6::zeros();
    for n in 0..3 {
        let (up, dn) = ((n + 1) % 3, (n + 2) % 3);
        let (a, b) = (x[n], x[n + 3]);
        let dp = (d * d + 16.0 * g * g * a * a).sqrt();
        out[n] = 2.0 * w * a - 8.0 * g * g * a / dp
            + 2.0 * j * (c * (x[up] + x[dn]) - s * (x[up + 3] - x[dn + 3]));
        out[n + 3] = 2.0 * w * b + 2.0 * j * (c * (x[up + 3] + x[dn + 3]) + s * (x[up] - x[dn]));
    }
    out
}

fn hessian(p: &ModelParams, x: &V6) -> M6 {
    let g = bare_coupling(p);
    let (w, d, j) = (p.omega(), p.delta(), p.j());
    let (s, c) = p.theta().sin_cos();
    let mut h = M6::zeros();
    for n in 0..3 {
        let (up, dn) = ((n + 1) % 3, (n + 2) % 3);
        let a = x[n];
        let dp = (d * d + 16.0 * g * g * a * a).sqrt();
        h[(n, n)] = 2.0 * w - 8.0 * g * g * d * d / (dp * dp * dp);
        h[(n + 3, n + 3)] = 2.0 * w;
        h[(n, up)] = 2.0 * j * c;
        h[(n, dn)] = 2.0 * j * c;
        h[(n + 3, up + 3)] = 2.0 * j * c;
        h[(n + 3, dn + 3)] = 2.0 * j * c;
        h[(n, up + 3)] = -2.0 * j * s;
        h[(n, dn + 3)] = 2.0 * j * s;
        h[(up + 3, n)] = -2.0 * j * s;
        h[(dn + 3, n)] = 2.0 * j * s;
    }
    h
}

fn energy_v(p: &ModelParams, x: &V6) -> f64 {
    meanfield_energy(p, &unpack(x))
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizerOptions {
    /// Stop when the largest gradient component falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Accepted displacement-equation residual for the returned point.
    pub residual_tol: f64,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-13, max_iter: 2000, residual_tol: 1e-10 }
    }
}

struct LocalMin {
    x: V6,
    energy: f64,
    iterations: usize,
    converged: bool,
}

/// BFGS with Armijo backtracking followed by a few Newton steps with the
/// analytic Hessian.
fn local_minimize(p: &ModelParams, x0: V6, opts: &MinimizerOptions) -> LocalMin {
    let mut x = x0;
    let mut f = energy_v(p, &x);
    let mut gr = gradient(p, &x);
    let mut hinv = M6::identity() * (1.0 / (2.0 * p.omega()));
    let mut it = 0;
    while it < opts.max_iter && gr.amax() > opts.grad_tol.max(1e-9) {
        it += 1;
        let mut dir = -(hinv * gr);
        if dir.dot(&gr) >= 0.0 {
            hinv = M6::identity() * (1.0 / (2.0 * p.omega()));
            dir = -(hinv * gr);
        }
        let slope = dir.dot(&gr);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = x + dir * step;
            let fnew = energy_v(p, &xn);
            if fnew <= f + 1e-4 * step * slope {
                accepted = Some((xn, fnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else { break };
        let gn = gradient(p, &xn);
        let sv = xn - x;
        let yv = gn - gr;
        let sy = sv.dot(&yv);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let ident = M6::identity();
            let left = ident - sv * yv.transpose() * rho;
            let right = ident - yv * sv.transpose() * rho;
            hinv = left * hinv * right + sv * sv.transpose() * rho;
        }
        x = xn;
        f = fnew;
        gr = gn;
    }
    // Newton polish: quadratic convergence to machine precision
    for _ in 0..20 {
        if gr.amax() <= opts.grad_tol {
            break;
        }
        let h = hessian(p, &x);
        let Some(chol) = h.cholesky() else { break };
        let dx = chol.solve(&(-gr));
        let xn = x + dx;
        let gn = gradient(p, &xn);
        if gn.amax() >= gr.amax() {
            break;
        }
        x = xn;
        gr = gn;
        it += 1;
    }
    f = energy_v(p, &x);
    LocalMin { x, energy: f, iterations: it, converged: gr.amax() <= opts.grad_tol * 10.0 }
}

/// Deterministic starting points: uniform real, the three real standing
/// waves of momentum 2pi/3, complex plane waves of both chiralities and a few
/// seeded random points.
pub fn default_seeds(p: &ModelParams) -> Vec<[C64; 3]> {
    let r = ncp_amplitude_at(p, (p.omega() + 2.0 * p.j() * p.theta().cos()).abs()).max(1.0);
    let tau = 2.0 * std::f64::consts::PI / 3.0;
    let mut seeds = vec![[C64::new(r, 0.0); 3]];
    for shift in 0..3 {
        let ph = tau * shift as f64;
        seeds.push(std::array::from_fn(|n| C64::new(r * (tau * (n + 1) as f64 + ph).cos(), 0.0)));
    }
    for sign in [1.0, -1.0] {
        seeds.push(std::array::from_fn(|n| C64::from_polar(r, sign * tau * (n + 1) as f64)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_a1);
    for _ in 0..4 {
        seeds.push(std::array::from_fn(|_| {
            C64::new(rng.random_range(-r..r), rng.random_range(-r..r) * 0.3)
        }));
    }
    seeds
}

/// Lowest-energy local minimum of the mean-field functional over the seeds.
pub fn minimize_meanfield(
    p: &ModelParams,
    seeds: &[[C64; 3]],
    opts: &MinimizerOptions,
) -> Result<DisplacementSolution> {
    let mut best: Option<LocalMin> = None;
    for seed in seeds {
        let m = local_minimize(p, pack(seed), opts);
        if !m.converged {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => m.energy < b.energy - 1e-12 * b.energy.abs().max(1.0),
        };
        if better {
            best = Some(m);
        }
    }
    let best = best.ok_or(Error::NotConverged {
        what: "minimize_meanfield",
        iterations: opts.max_iter,
        residual: f64::NAN,
    })?;
    let a = [best.x[0], best.x[1], best.x[2]];
    let b = [best.x[3], best.x[4], best.x[5]];
    let residual = displacement_residual(p, &a, &b);
    let sol = DisplacementSolution {
        a,
        b,
        residual,
        converged: residual <= opts.residual_tol,
        iterations: best.iterations,
    };
    Ok(canonicalize(&sol))
}
