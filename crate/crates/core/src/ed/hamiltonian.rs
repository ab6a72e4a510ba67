use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{StateVector, Truncation};
use crate::error::{Error, Result};
use crate::model::{bare_coupling, ModelParams};

/// Matrix-free Hamiltonian on a fixed truncation.
///
/// Every output amplitude is gathered from its neighbours in a fixed term
/// order (diagonal, atom-photon per site, hopping per bond), so results do
/// not depend on how rows are split across threads.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    trunc: Truncation,
    omega: f64,
    half_delta: f64,
    g: f64,
    /// `J e^{i theta}` for the bonds `1->2, 2->3, 3->1`.
    hop: [C64; 3],
    sqrt: Vec<f64>,
}

/// Site strides in the flattened index.
fn strides(t: Truncation) -> [usize; 3] {
    let d = t.levels();
    [d * d * 8, d * 8, 8]
}

const SPIN_BIT: [usize; 3] = [4, 2, 1];

impl Hamiltonian {
    pub fn new(p: &ModelParams, trunc: Truncation) -> Self {
        let h = C64::from_polar(p.j(), p.theta());
        Self {
            trunc,
            omega: p.omega(),
            half_delta: 0.5 * p.delta(),
            g: bare_coupling(p),
            hop: [h; 3],
            sqrt: (0..=trunc.levels()).map(|n| (n as f64).sqrt()).collect(),
        }
    }

    /// Negates the hopping on one bond. Breaks translation symmetry on
    /// purpose; used only to check that the validation suite catches it.
    pub fn with_flipped_bond(mut self, bond: usize) -> Self {
        self.hop[bond % 3] = -self.hop[bond % 3];
        self
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn dim(&self) -> usize {
        self.trunc.dim()
    }

    /// `y = H x` on raw amplitude slices.
    pub fn apply_to(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        let d = self.trunc.levels();
        let slab = d * d * 8;
        y.par_chunks_mut(slab).enumerate().for_each(|(n1, out)| self.apply_slab(n1, x, out));
    }

    fn apply_slab(&self, n1: usize, x: &[C64], out: &mut [C64]) {
        let d = self.trunc.levels();
        let nmax = self.trunc.n_tr();
        let st = strides(self.trunc);
        let sq = &self.sqrt;
        let mut spin_diag = [0.0; 8];
        for (s, v) in spin_diag.iter_mut().enumerate() {
            *v = (0..3).map(|i| if s & SPIN_BIT[i] != 0 { self.half_delta } else { -self.half_delta }).sum();
        }
        for n2 in 0..d {
            for n3 in 0..d {
                let n = [n1, n2, n3];
                let base = ((n1 * d + n2) * d + n3) * 8;
                let photon = self.omega * (n1 + n2 + n3) as f64;
                for s in 0..8 {
                    let idx = base + s;
                    let mut acc = x[idx] * (photon + spin_diag[s]);
                    for site in 0..3 {
                        let flip = base + (s ^ SPIN_BIT[site]);
                        let ni = n[site];
                        if ni > 0 {
                            acc += x[flip - st[site]] * (self.g * sq[ni]);
                        }
                        if ni < nmax {
                            acc += x[flip + st[site]] * (self.g * sq[ni + 1]);
                        }
                    }
                    for bond in 0..3 {
                        let (i, j) = (bond, (bond + 1) % 3);
                        let h = self.hop[bond];
                        // a_i^dag a_j
                        if n[i] > 0 && n[j] < nmax {
                            acc += x[idx - st[i] + st[j]] * (h * (sq[n[i]] * sq[n[j] + 1]));
                        }
                        // a_j^dag a_i
                        if n[j] > 0 && n[i] < nmax {
                            acc += x[idx + st[i] - st[j]] * (h.conj() * (sq[n[i] + 1] * sq[n[j]]));
                        }
                    }
                    out[(n2 * d + n3) * 8 + s] = acc;
                }
            }
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.truncation() != self.trunc {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: psi.dim() });
        }
        let mut out = StateVector::zeros(self.trunc);
        self.apply_to(psi.amps(), out.amps_mut());
        Ok(out)
    }

    /// Assembles the full matrix column by column.
    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        let n = self.dim();
        if n > super::DENSE_LIMIT {
            return Err(Error::domain("dense_hamiltonian", format!("dimension {n} above {}", super::DENSE_LIMIT)));
        }
        let mut m = DMatrix::<C64>::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for c in 0..n {
            e[c] = C64::new(1.0, 0.0);
            self.apply_to(&e, &mut col);
            e[c] = C64::new(0.0, 0.0);
            for r in 0..n {
                m[(r, c)] = col[r];
            }
        }
        Ok(m)
    }
}

/// `H psi` for the given parameters.
pub fn apply_hamiltonian(p: &ModelParams, t: Truncation, psi: &StateVector) -> Result<StateVector> {
    Hamiltonian::new(p, t).apply(psi)
}

/// Dense matrix of `H`; only for dimensions up to [`super::DENSE_LIMIT`].
pub fn dense_hamiltonian(p: &ModelParams, t: Truncation) -> Result<DMatrix<C64>> {
    Hamiltonian::new(p, t).to_dense()
}
