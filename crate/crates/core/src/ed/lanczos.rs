//! Thick-restart Lanczos with full reorthogonalization.
//!
//! The projected matrix stays real symmetric (tridiagonal plus an arrow
//! block after each restart), so a real start vector on a real Hamiltonian
//! yields real eigenvectors.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Hamiltonian, StateVector, Truncation};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Largest dimension for which the dense matrix may be assembled.
pub const DENSE_LIMIT: usize = 4096;

/// Dimensions up to this size are solved densely by [`solve`].
pub const DENSE_SOLVE_LIMIT: usize = 1000;

/// Relative width under which eigenvalues count as one multiplet.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LanczosOptions {
    /// Target residual: `||H psi - E psi|| <= tol * max(1, |E|)`.
    pub tol: f64,
    pub max_matvecs: usize,
    /// Krylov vectors per restart cycle; 0 picks `max(2k + 20, 30)`.
    pub basis_size: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_matvecs: 20_000, basis_size: 0, seed: 0x1a2c_05 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    pub vectors: Vec<StateVector>,
    /// `||H psi - E psi||` recomputed from the returned vectors.
    pub residuals: Vec<f64>,
    pub n_tr_used: usize,
    pub converged: bool,
    pub matvecs: usize,
}

impl EigenSolution {
    /// Index ranges of eigenvalues closer than [`DEGENERACY_TOL`]` * max(1, |E|)`.
    pub fn multiplets(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.values.len() {
            let split = i == self.values.len() || {
                let e = self.values[i - 1];
                self.values[i] - e > DEGENERACY_TOL * e.abs().max(1.0)
            };
            if split {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    pub fn ground_energy(&self) -> f64 {
        self.values[0]
    }

    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            return Ok(self);
        }
        let worst = self.residuals.iter().cloned().fold(0.0, f64::max);
        Err(Error::NotConverged { what: "lowest_eigenpairs", iterations: self.matvecs, residual: worst })
    }
}

/// Raw eigenpairs of an abstract Hermitian operator.
#[derive(Debug, Clone)]
pub struct RawEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    pub converged: bool,
    pub matvecs: usize,
}

const CHUNK: usize = 1 << 14;

fn pdot(a: &[C64], b: &[C64]) -> C64 {
    let parts: Vec<C64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).fold(C64::new(0.0, 0.0), |s, (u, v)| s + u.conj() * v))
        .collect();
    parts.into_iter().sum()
}

fn pnorm(a: &[C64]) -> f64 {
    let parts: Vec<f64> = a.par_chunks(CHUNK).map(|x| x.iter().map(|z| z.norm_sqr()).sum::<f64>()).collect();
    parts.into_iter().sum::<f64>().sqrt()
}

fn paxpy(y: &mut [C64], c: C64, x: &[C64]) {
    y.par_chunks_mut(CHUNK).zip(x.par_chunks(CHUNK)).for_each(|(u, v)| {
        for (a, b) in u.iter_mut().zip(v) {
            *a += c * b;
        }
    });
}

fn pscale(y: &mut [C64], c: f64) {
    y.par_chunks_mut(CHUNK).for_each(|u| u.iter_mut().for_each(|a| *a *= c));
}

/// Classical Gram-Schmidt against `locked` and `basis`, repeated once when
/// the first pass cancels most of the norm.
fn orthogonalize(w: &mut [C64], locked: &[Vec<C64>], basis: &[Vec<C64>]) {
    let mut before = pnorm(w);
    for _ in 0..2 {
        let coef: Vec<C64> = locked.iter().chain(basis).map(|q| pdot(q, w)).collect();
        w.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let off = c * CHUNK;
            let len = chunk.len();
            for (q, k) in locked.iter().chain(basis).zip(&coef) {
                for (a, b) in chunk.iter_mut().zip(&q[off..off + len]) {
                    *a -= k * b;
                }
            }
        });
        let after = pnorm(w);
        if after > 0.7 * before {
            break;
        }
        before = after;
    }
}

fn random_real(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..dim).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect()
}

/// `out[i] = sum_j coef[(j, i)] basis[j]` for the first `count` columns.
fn combine(basis: &[Vec<C64>], coef: &DMatrix<f64>, count: usize) -> Vec<Vec<C64>> {
    let dim = basis[0].len();
    (0..count)
        .map(|i| {
            let mut out = vec![C64::new(0.0, 0.0); dim];
            out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
                let off = c * CHUNK;
                let len = chunk.len();
                for (j, v) in basis.iter().enumerate() {
                    let y = coef[(j, i)];
                    if y != 0.0 {
                        for (o, x) in chunk.iter_mut().zip(&v[off..off + len]) {
                            *o += x * y;
                        }
                    }
                }
            });
            out
        })
        .collect()
}

fn sorted_eigen(t: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = t.nrows();
    let e = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

fn run<F>(op: &F, dim: usize, k: usize, opts: &LanczosOptions, seed: u64, locked: &[Vec<C64>]) -> RawEigen
where
    F: Fn(&[C64], &mut [C64]) + Sync,
{
    let free = dim - locked.len();
    let wanted = if opts.basis_size == 0 { (2 * k + 20).max(30) } else { opts.basis_size.max(k + 2) };
    let m = wanted.min(free);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut start = random_real(dim, &mut rng);
    orthogonalize(&mut start, locked, &[]);
    let n0 = pnorm(&start);
    pscale(&mut start, 1.0 / n0);

    let mut v: Vec<Vec<C64>> = vec![start];
    let mut alpha = vec![0.0; m];
    let mut beta = vec![0.0; m];
    let mut kept: Vec<f64> = Vec::new();
    let mut arrow: Vec<f64> = Vec::new();
    let mut matvecs = 0;
    let mut w = vec![C64::new(0.0, 0.0); dim];

    loop {
        let l = kept.len();
        for j in l..m {
            op(&v[j], &mut w);
            matvecs += 1;
            alpha[j] = pdot(&v[j], &w).re;
            paxpy(&mut w, C64::new(-alpha[j], 0.0), &v[j]);
            if j == l {
                for (i, s) in arrow.iter().enumerate() {
                    paxpy(&mut w, C64::new(-s, 0.0), &v[i]);
                }
            } else {
                paxpy(&mut w, C64::new(-beta[j - 1], 0.0), &v[j - 1]);
            }
            orthogonalize(&mut w, locked, &v);
            let b = pnorm(&w);
            let scale = alpha[j].abs().max(1.0);
            if b > 1e-12 * scale {
                beta[j] = b;
                let mut next = w.clone();
                pscale(&mut next, 1.0 / b);
                v.push(next);
            } else {
                // invariant subspace: continue with a fresh orthogonal direction
                beta[j] = 0.0;
                let mut next = if v.len() + locked.len() < dim { random_real(dim, &mut rng) } else { vec![C64::new(0.0, 0.0); dim] };
                orthogonalize(&mut next, locked, &v);
                let nn = pnorm(&next);
                if nn > 0.0 {
                    pscale(&mut next, 1.0 / nn);
                }
                v.push(next);
            }
        }

        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..l {
            t[(i, i)] = kept[i];
            t[(i, l)] = arrow[i];
            t[(l, i)] = arrow[i];
        }
        for j in l..m {
            t[(j, j)] = alpha[j];
            if j + 1 < m {
                t[(j, j + 1)] = beta[j];
                t[(j + 1, j)] = beta[j];
            }
        }
        let (theta, y) = sorted_eigen(t);
        let tail = beta[m - 1];
        let converged = (0..k).all(|i| (tail * y[(m - 1, i)]).abs() <= opts.tol * theta[i].abs().max(1.0));

        if converged || matvecs >= opts.max_matvecs || m <= k + 1 {
            let vectors = combine(&v[..m], &y, k);
            return RawEigen { values: theta[..k].to_vec(), vectors, converged: converged || m == free, matvecs };
        }

        let keep = (k + (m - k) / 2).min(m - 2).max(k);
        let mut next = combine(&v[..m], &y, keep);
        next.push(v.pop().expect("residual direction"));
        arrow = (0..keep).map(|i| tail * y[(m - 1, i)]).collect();
        kept = theta[..keep].to_vec();
        v = next;
    }
}

/// `k` lowest eigenpairs of a Hermitian operator given as a matvec closure.
///
/// After the main run, further single-vector runs deflated against the
/// found vectors pick up exact degeneracies a single Krylov space cannot
/// see.
pub fn lanczos_lowest<F>(op: &F, dim: usize, k: usize, opts: &LanczosOptions) -> Result<RawEigen>
where
    F: Fn(&[C64], &mut [C64]) + Sync,
{
    if k == 0 || k > dim {
        return Err(Error::domain("lanczos_lowest", format!("k = {k} with dimension {dim}")));
    }
    let mut sol = run(op, dim, k, opts, opts.seed, &[]);
    if k >= 2 {
        for attempt in 0..k {
            if sol.vectors.len() >= dim {
                break;
            }
            let extra = run(op, dim, 1, opts, opts.seed.wrapping_add(1 + attempt as u64), &sol.vectors);
            sol.matvecs += extra.matvecs;
            let last = sol.values[k - 1];
            if extra.values[0] >= last - DEGENERACY_TOL * last.abs().max(1.0) {
                break;
            }
            sol.converged &= extra.converged;
            let pos = sol.values.partition_point(|&e| e <= extra.values[0]);
            sol.values.insert(pos, extra.values[0]);
            sol.vectors.insert(pos, extra.vectors.into_iter().next().expect("one vector"));
            sol.values.truncate(k);
            sol.vectors.truncate(k);
        }
    }
    Ok(sol)
}

/// Lowest `k` eigenpairs of a dense Hermitian matrix.
pub fn dense_lowest(m: &DMatrix<C64>, k: usize) -> Result<RawEigen> {
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::domain("dense_lowest", format!("k = {k} with dimension {n}")));
    }
    let e = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = order[..k].iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = order[..k].iter().map(|&i| e.eigenvectors.column(i).iter().copied().collect()).collect();
    Ok(RawEigen { values, vectors, converged: true, matvecs: 0 })
}

fn finish(h: &Hamiltonian, raw: RawEigen, opts: &LanczosOptions) -> Result<EigenSolution> {
    let t: Truncation = h.truncation();
    let mut residuals = Vec::with_capacity(raw.values.len());
    let mut vectors = Vec::with_capacity(raw.values.len());
    let mut hv = vec![C64::new(0.0, 0.0); t.dim()];
    let mut converged = raw.converged;
    for (e, v) in raw.values.iter().zip(raw.vectors) {
        let sv = StateVector::new(t, v)?.normalized()?;
        h.apply_to(sv.amps(), &mut hv);
        paxpy(&mut hv, C64::new(-e, 0.0), sv.amps());
        let r = pnorm(&hv);
        // the Ritz estimate can be optimistic by the loss of orthogonality
        converged &= r <= 10.0 * opts.tol * e.abs().max(1.0);
        residuals.push(r);
        vectors.push(sv);
    }
    if !converged {
        log::warn!("eigensolver not converged at n_tr = {}: residuals {residuals:?}", t.n_tr());
    }
    Ok(EigenSolution { values: raw.values, vectors, residuals, n_tr_used: t.n_tr(), converged, matvecs: raw.matvecs })
}

/// Solves an explicit Hamiltonian, densely when small.
pub fn solve(h: &Hamiltonian, k: usize, opts: &LanczosOptions) -> Result<EigenSolution> {
    let raw = if h.dim() <= DENSE_SOLVE_LIMIT {
        dense_lowest(&h.to_dense()?, k)?
    } else {
        lanczos_lowest(&|x: &[C64], y: &mut [C64]| h.apply_to(x, y), h.dim(), k, opts)?
    };
    finish(h, raw, opts)
}

/// `k` lowest eigenpairs at `p` on truncation `t`. Non-convergence is
/// reported through [`EigenSolution::converged`] with the residuals kept.
pub fn lowest_eigenpairs(p: &ModelParams, t: Truncation, k: usize, opts: &LanczosOptions) -> Result<EigenSolution> {
    solve(&Hamiltonian::new(p, t), k, opts)
}

/// Lanczos on a Hamiltonian regardless of its size; used to check the
/// iterative path against the dense one.
pub fn lanczos_eigenpairs(h: &Hamiltonian, k: usize, opts: &LanczosOptions) -> Result<EigenSolution> {
    let raw = lanczos_lowest(&|x: &[C64], y: &mut [C64]| h.apply_to(x, y), h.dim(), k, opts)?;
    finish(h, raw, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{icp_excitation, icp_ground_energy, MomentumMode};
    use std::f64::consts::PI;

    fn params(g1: f64, j: f64, theta: f64) -> ModelParams {
        ModelParams::new(0.2, 10.0, g1, j, theta).unwrap()
    }

    #[test]
    fn decoupled_spectrum_by_hand() {
        let t = Truncation::new(1).unwrap();
        let sol = lowest_eigenpairs(&params(0.0, 0.0, 0.0), t, 8, &LanczosOptions::default()).unwrap();
        // -15 + {0, 0.2 x3, 0.4 x3, 0.6}
        let want = [-15.0, -14.8, -14.8, -14.8, -14.6, -14.6, -14.6, -14.4];
        for (g, w) in sol.values.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
        assert_eq!(sol.multiplets(), vec![0..1, 1..4, 4..7, 7..8]);
    }

    #[test]
    fn lanczos_matches_dense() {
        let t = Truncation::new(2).unwrap();
        for &(g1, j, th) in &[(0.3, 0.01, 0.0), (0.7, 0.05, 0.9), (0.5, 0.02, PI), (0.1, 0.03, 2.0 * PI / 3.0)] {
            let h = Hamiltonian::new(&params(g1, j, th), t);
            let dense = solve(&h, 6, &LanczosOptions::default()).unwrap();
            let opts = LanczosOptions { basis_size: 30, ..LanczosOptions::default() };
            let lz = lanczos_eigenpairs(&h, 6, &opts).unwrap();
            assert!(lz.converged);
            for (a, b) in dense.values.iter().zip(&lz.values) {
                assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", dense.values, lz.values);
            }
            for v in &lz.vectors {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
            for a in 0..6 {
                for b in 0..a {
                    assert!(lz.vectors[a].inner(&lz.vectors[b]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn exact_degeneracy_is_found() {
        // at theta = 0 the +-2pi/3 one-photon levels are degenerate
        let t = Truncation::new(2).unwrap();
        let h = Hamiltonian::new(&params(0.1, 0.01, 0.0), t);
        let dense = solve(&h, 4, &LanczosOptions::default()).unwrap();
        let lz = lanczos_eigenpairs(&h, 4, &LanczosOptions { basis_size: 30, ..Default::default() }).unwrap();
        assert_eq!(dense.multiplets().len(), 3);
        for (a, b) in dense.values.iter().zip(&lz.values) {
            assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", dense.values, lz.values);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let h = Hamiltonian::new(&params(0.4, 0.02, 0.3), Truncation::new(4).unwrap());
        let a = lanczos_eigenpairs(&h, 2, &LanczosOptions::default()).unwrap();
        let b = lanczos_eigenpairs(&h, 2, &LanczosOptions::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn real_hamiltonian_gives_real_vectors() {
        let h = Hamiltonian::new(&params(0.4, 0.02, 0.0), Truncation::new(4).unwrap());
        let sol = lanczos_eigenpairs(&h, 1, &LanczosOptions::default()).unwrap();
        assert!(sol.vectors[0].amps().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn incoherent_levels_follow_analytic_curves() {
        let p = ModelParams::new(0.2, 15.0, 0.1, 0.01, 0.4).unwrap();
        let sol = lowest_eigenpairs(&p, Truncation::new(8).unwrap(), 4, &LanczosOptions::default()).unwrap();
        assert!(sol.converged);
        let eg = icp_ground_energy(&p).unwrap();
        assert!(((sol.values[0] - eg) / eg).abs() < 1e-4);
        let mut gaps: Vec<f64> = MomentumMode::ALL.iter().map(|&q| icp_excitation(&p, q).unwrap()).collect();
        gaps.sort_by(f64::total_cmp);
        for i in 0..3 {
            let got = sol.values[i + 1] - sol.values[0];
            assert!(((got - gaps[i]) / gaps[i]).abs() < 0.02, "{got} vs {}", gaps[i]);
        }
    }

    #[test]
    fn k_larger_than_dimension_rejected() {
        let m = DMatrix::<C64>::identity(3, 3);
        assert!(dense_lowest(&m, 4).is_err());
    }
}
