//! Exact diagonalization on the truncated `Fock^3 (x) qubit^3` space.
//!
//! Basis index of `|n1 n2 n3, s1 s2 s3>` is
//! `((n1 * d + n2) * d + n3) * 8 + (s1 << 2 | s2 << 1 | s3)` with `d = n_tr + 1`
//! and `s = 1` for spin up: spin bits run fastest, the site-1 photon number
//! slowest.

mod checkpoint;
mod hamiltonian;
mod lanczos;
mod truncation;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use hamiltonian::{apply_hamiltonian, dense_hamiltonian, Hamiltonian};
pub use lanczos::{
    dense_lowest, lanczos_eigenpairs, lanczos_lowest, lowest_eigenpairs, solve, EigenSolution, LanczosOptions, RawEigen,
    DEGENERACY_TOL, DENSE_LIMIT, DENSE_SOLVE_LIMIT,
};
pub use truncation::{converge_truncation, converge_truncation_partial, TruncationPolicy};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported per-cavity photon cutoff.
pub const MAX_N_TR: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    n_tr: usize,
}

impl Truncation {
    pub fn new(n_tr: usize) -> Result<Self> {
        if n_tr == 0 {
            return Err(Error::InvalidParameter { name: "n_tr", value: 0.0, rule: ">= 1" });
        }
        if n_tr > MAX_N_TR {
            return Err(Error::TruncationCap { n_tr, cap: MAX_N_TR });
        }
        Ok(Self { n_tr })
    }

    pub fn n_tr(self) -> usize {
        self.n_tr
    }

    /// States per cavity, `n_tr + 1`.
    pub fn levels(self) -> usize {
        self.n_tr + 1
    }

    pub fn dim(self) -> usize {
        8 * self.levels().pow(3)
    }

    pub fn index(self, n: [usize; 3], spins: [bool; 3]) -> usize {
        let d = self.levels();
        let s = (spins[0] as usize) << 2 | (spins[1] as usize) << 1 | spins[2] as usize;
        ((n[0] * d + n[1]) * d + n[2]) * 8 + s
    }

    pub fn decode(self, idx: usize) -> ([usize; 3], [bool; 3]) {
        let d = self.levels();
        let s = idx & 7;
        let mut f = idx >> 3;
        let n3 = f % d;
        f /= d;
        ([f / d, f % d, n3], [s & 4 != 0, s & 2 != 0, s & 1 != 0])
    }
}

/// Amplitudes over the basis of a [`Truncation`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    trunc: Truncation,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(trunc: Truncation, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != trunc.dim() {
            return Err(Error::DimensionMismatch { expected: trunc.dim(), got: amps.len() });
        }
        Ok(Self { trunc, amps })
    }

    pub fn zeros(trunc: Truncation) -> Self {
        Self { trunc, amps: vec![C64::new(0.0, 0.0); trunc.dim()] }
    }

    /// Product basis state `|n1 n2 n3, s1 s2 s3>`.
    pub fn basis(trunc: Truncation, n: [usize; 3], spins: [bool; 3]) -> Result<Self> {
        if n.iter().any(|&k| k > trunc.n_tr()) {
            return Err(Error::domain("StateVector::basis", format!("occupation {n:?} above n_tr {}", trunc.n_tr())));
        }
        let mut v = Self::zeros(trunc);
        v.amps[trunc.index(n, spins)] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// Photon and atomic vacuum `|000, down down down>`.
    pub fn vacuum(trunc: Truncation) -> Self {
        let mut v = Self::zeros(trunc);
        v.amps[0] = C64::new(1.0, 0.0);
        v
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> C64 {
        dot(&self.amps, &other.amps)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::domain("StateVector::normalized", format!("norm {n}")));
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(self)
    }

    pub(crate) fn check_same(&self, other: &StateVector) -> Result<()> {
        if self.trunc != other.trunc {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(C64::new(0.0, 0.0), |s, (x, y)| s + x.conj() * y)
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Expectation of the global parity `exp[i pi sum_n (a_n^dag a_n + sigma_n^+ sigma_n^-)]`.
pub fn parity_expectation(psi: &StateVector) -> f64 {
    let t = psi.truncation();
    psi.amps()
        .iter()
        .enumerate()
        .map(|(idx, a)| {
            let (n, s) = t.decode(idx);
            let count = n.iter().sum::<usize>() + s.iter().filter(|&&up| up).count();
            if count % 2 == 0 {
                a.norm_sqr()
            } else {
                -a.norm_sqr()
            }
        })
        .sum()
}

/// Cyclic relabeling `n -> n + 1` of both photons and atoms, so that
/// `|100> -> |010>`.
pub fn translate(psi: &StateVector) -> StateVector {
    let t = psi.truncation();
    let mut out = StateVector::zeros(t);
    for (idx, a) in psi.amps().iter().enumerate() {
        let (n, s) = t.decode(idx);
        out.amps[t.index([n[2], n[0], n[1]], [s[2], s[0], s[1]])] = *a;
    }
    out
}
