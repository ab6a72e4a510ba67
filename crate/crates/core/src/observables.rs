//! Photon number, photon current and chirality of ring states, plus the
//! momentum resolution of degenerate levels.
//!
//! State labels here follow the translation eigenvalue: a state labelled
//! `q` satisfies `T psi = e^{-iq} psi` for the relabeling `n -> n + 1`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analytic::MomentumMode;
use crate::ed::{parity_expectation, translate, EigenSolution, StateVector, Truncation};
use crate::error::{Error, Result};

/// Per-cavity occupations `<a_n^dag a_n>`.
pub fn site_occupations(psi: &StateVector) -> [f64; 3] {
    let t = psi.truncation();
    let mut occ = [0.0; 3];
    for (idx, a) in psi.amps().iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let (n, _) = t.decode(idx);
        for s in 0..3 {
            occ[s] += w * n[s] as f64;
        }
    }
    occ
}

/// `N_p = sum_n <a_n^dag a_n>`.
pub fn photon_number(psi: &StateVector) -> f64 {
    site_occupations(psi).iter().sum()
}

fn stride(t: Truncation, site: usize) -> usize {
    let d = t.levels();
    [d * d * 8, d * 8, 8][site]
}

/// `<a_j^dag a_i w(n_k)>` with `k` the third site.
fn hop_expectation(psi: &StateVector, i: usize, j: usize, weight: impl Fn(usize) -> f64) -> C64 {
    let t = psi.truncation();
    let k = 3 - i - j;
    let (si, sj) = (stride(t, i), stride(t, j));
    let amps = psi.amps();
    let mut acc = C64::new(0.0, 0.0);
    for (idx, a) in amps.iter().enumerate() {
        let (n, _) = t.decode(idx);
        if n[i] == 0 || n[j] == t.n_tr() {
            continue;
        }
        let to = idx - si + sj;
        let me = ((n[i] * (n[j] + 1)) as f64).sqrt() * weight(n[k]);
        acc += amps[to].conj() * a * me;
    }
    acc
}

/// `<K>` with `K = a_1^dag a_2 + a_2^dag a_3 + a_3^dag a_1`.
fn forward_hopping(psi: &StateVector) -> C64 {
    (0..3).map(|n| hop_expectation(psi, (n + 1) % 3, n, |_| 1.0)).sum()
}

/// Full complex expectation of `i[K e^{i theta} - h.c.]`; the imaginary
/// part is rounding noise.
pub fn photon_current_complex(psi: &StateVector, theta: f64) -> C64 {
    let i = C64::new(0.0, 1.0);
    let k = forward_hopping(psi);
    let k_dag: C64 = (0..3).map(|n| hop_expectation(psi, n, (n + 1) % 3, |_| 1.0)).sum();
    i * C64::from_polar(1.0, theta) * k - i * C64::from_polar(1.0, -theta) * k_dag
}

/// Photon current `<i[(a_1^dag a_2 + a_2^dag a_3 + a_3^dag a_1) e^{i theta} - h.c.]>`.
///
/// Carries no factor of `J`: for an eigenstate it equals `(1/J) dE/dtheta`.
pub fn photon_current(psi: &StateVector, theta: f64) -> f64 {
    photon_current_complex(psi, theta).re
}

/// Full complex expectation of the chirality operator.
pub fn chirality_complex(psi: &StateVector) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..3 {
        let j = (i + 1) % 3;
        let w = |nk: usize| nk as f64 - 0.5;
        acc += hop_expectation(psi, i, j, w) - hop_expectation(psi, j, i, w);
    }
    C64::new(0.0, -2.0) * acc
}

/// Photon chirality `<-2i sum_cyc (a_j^dag a_i - a_i^dag a_j)(n_k - 1/2)>`
/// over `(i, j, k) = (1, 2, 3), (2, 3, 1), (3, 1, 2)`.
///
/// `n_k - 1/2` plays the role of `S^z` in the spin chirality
/// `S_i . (S_j x S_k)`; with a bare `n_k` the operator vanishes on every
/// one-photon state. The orientation gives `+sqrt 3` on the `q = +2pi/3`
/// plane wave of [`make_one_photon_state`].
pub fn chirality(psi: &StateVector) -> f64 {
    chirality_complex(psi).re
}

/// `3^{-1/2} (e^{iq}|100> + e^{2iq}|010> + e^{3iq}|001>)` with all atoms down.
pub fn make_one_photon_state(q: MomentumMode, t: Truncation) -> StateVector {
    let mut psi = StateVector::zeros(t);
    let norm = 1.0 / 3f64.sqrt();
    for site in 0..3 {
        let mut n = [0; 3];
        n[site] = 1;
        let phase = q.q() * (site + 1) as f64;
        psi.amps_mut()[t.index(n, [false; 3])] = C64::from_polar(norm, phase);
    }
    psi
}

/// Translation eigenstate carved out of a degenerate subspace.
#[derive(Debug, Clone)]
pub struct LabeledState {
    pub state: StateVector,
    pub q: MomentumMode,
}

fn label_of(eigenvalue: C64) -> MomentumMode {
    MomentumMode::nearest(-eigenvalue.arg())
}

/// Rotates a degenerate set of states into eigenstates of the translation
/// `T`, ordered `q = 0, +2pi/3, -2pi/3`.
///
/// Fails if `T` maps the span outside itself by more than `tol`.
pub fn resolve_multiplet(states: &[StateVector], tol: f64) -> Result<Vec<LabeledState>> {
    let m = states.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    for s in &states[1..] {
        states[0].check_same(s)?;
    }
    let shifted: Vec<StateVector> = states.iter().map(translate).collect();
    let tm = DMatrix::<C64>::from_fn(m, m, |a, b| states[a].inner(&shifted[b]));

    for b in 0..m {
        let mut rest = shifted[b].clone();
        for a in 0..m {
            let c = tm[(a, b)];
            for (r, x) in rest.amps_mut().iter_mut().zip(states[a].amps()) {
                *r -= c * x;
            }
        }
        let leak = rest.norm();
        if leak > tol {
            return Err(Error::NotSymmetric { leakage: leak });
        }
    }

    if m == 1 {
        return Ok(vec![LabeledState { state: states[0].clone(), q: label_of(tm[(0, 0)]) }]);
    }

    let mut out = Vec::with_capacity(m);
    let t2 = &tm * &tm;
    for q in MomentumMode::ALL {
        // projector onto T = e^{-iq}
        let lam = C64::from_polar(1.0, q.q());
        let proj = (DMatrix::<C64>::identity(m, m) + &tm * lam + &t2 * (lam * lam)) / C64::new(3.0, 0.0);
        let herm = (&proj + proj.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        for (c, &val) in eig.eigenvalues.iter().enumerate() {
            if val < 0.5 {
                continue;
            }
            let coef = eig.eigenvectors.column(c);
            let mut v = StateVector::zeros(states[0].truncation());
            for (a, s) in states.iter().enumerate() {
                let k = coef[a];
                for (o, x) in v.amps_mut().iter_mut().zip(s.amps()) {
                    *o += k * x;
                }
            }
            out.push(LabeledState { state: v.normalized()?, q });
        }
    }
    if out.len() != m {
        return Err(Error::NotSymmetric { leakage: (out.len() as f64 - m as f64).abs() });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub state_index: usize,
    pub energy: f64,
    pub n_photons: f64,
    pub current: f64,
    pub chirality: f64,
    pub parity: f64,
    /// Translation label, when the state is (or was rotated into) a `T` eigenstate.
    pub q: Option<MomentumMode>,
    /// Index of the degenerate multiplet the state belongs to.
    pub multiplet: usize,
}

pub fn observe(psi: &StateVector, energy: f64, theta: f64, state_index: usize) -> ObservableSet {
    ObservableSet {
        state_index,
        energy,
        n_photons: photon_number(psi),
        current: photon_current(psi, theta),
        chirality: chirality(psi),
        parity: parity_expectation(psi),
        q: None,
        multiplet: state_index,
    }
}

/// Observables of every returned eigenstate; degenerate multiplets are
/// reported in the translation eigenbasis.
pub fn observe_solution(sol: &EigenSolution, theta: f64) -> Result<Vec<ObservableSet>> {
    let mut out = Vec::with_capacity(sol.values.len());
    for (mi, range) in sol.multiplets().into_iter().enumerate() {
        let group = &sol.vectors[range.clone()];
        let tol = 1e-6;
        let resolved = match resolve_multiplet(group, tol) {
            Ok(r) => r.into_iter().map(|l| (l.state, Some(l.q))).collect::<Vec<_>>(),
            // an incomplete multiplet at the edge of the requested window
            Err(Error::NotSymmetric { .. }) => group.iter().map(|s| (s.clone(), None)).collect(),
            Err(e) => return Err(e),
        };
        for (offset, (state, q)) in resolved.into_iter().enumerate() {
            let idx = range.start + offset;
            let mut o = observe(&state, sol.values[idx], theta, idx);
            o.q = q;
            o.multiplet = mi;
            out.push(o);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::{lowest_eigenpairs, LanczosOptions};
    use crate::model::ModelParams;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_state(t: Truncation, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..t.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        StateVector::new(t, amps).unwrap().normalized().unwrap()
    }

    /// `<a_q^dag a_q>` with `a_q^dag = 3^{-1/2} sum_n e^{-iqn} a_n^dag`.
    fn mode_occupation(psi: &StateVector, q: f64) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for n in 0..3 {
            for m in 0..3 {
                // <a_n^dag a_m>
                let c = if n == m {
                    C64::new(site_occupations(psi)[n], 0.0)
                } else {
                    hop_expectation(psi, m, n, |_| 1.0)
                };
                acc += C64::from_polar(1.0, -q * (n as f64 - m as f64)) * c;
            }
        }
        acc.re / 3.0
    }

    #[test]
    fn photon_number_examples() {
        let t = Truncation::new(2).unwrap();
        assert_eq!(photon_number(&StateVector::vacuum(t)), 0.0);
        for q in MomentumMode::ALL {
            assert!((photon_number(&make_one_photon_state(q, t)) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn one_photon_chirality() {
        let t = Truncation::new(2).unwrap();
        let s3 = 3f64.sqrt();
        assert!((chirality(&make_one_photon_state(MomentumMode::Plus, t)) - s3).abs() < 1e-12);
        assert!((chirality(&make_one_photon_state(MomentumMode::Minus, t)) + s3).abs() < 1e-12);
        assert!(chirality(&make_one_photon_state(MomentumMode::Zero, t)).abs() < 1e-12);
    }

    #[test]
    fn one_photon_translation_eigenvalue() {
        let t = Truncation::new(1).unwrap();
        for q in MomentumMode::ALL {
            let psi = make_one_photon_state(q, t);
            let ev = psi.inner(&translate(&psi));
            assert!((ev - C64::from_polar(1.0, -q.q())).norm() < 1e-14);
        }
    }

    #[test]
    fn one_photon_current_is_hopping_derivative() {
        // energy of the plane wave is omega + 2J cos(theta + q)
        let t = Truncation::new(1).unwrap();
        for q in MomentumMode::ALL {
            for &th in &[0.3, -1.7, 2.9] {
                let i = photon_current(&make_one_photon_state(q, t), th);
                assert!((i + 2.0 * (th + q.q()).sin()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn momentum_space_current_identity() {
        let t = Truncation::new(3).unwrap();
        for seed in 0..10 {
            let psi = random_state(t, seed);
            let th = 0.37 * seed as f64 - 1.5;
            let direct = photon_current(&psi, th);
            let via_modes: f64 = MomentumMode::ALL.iter().map(|q| -2.0 * (th - q.q()).sin() * mode_occupation(&psi, q.q())).sum();
            assert!((direct - via_modes).abs() < 1e-10, "{direct} vs {via_modes}");
        }
    }

    #[test]
    fn expectations_are_real() {
        let t = Truncation::new(3).unwrap();
        for seed in 0..5 {
            let psi = random_state(t, 50 + seed);
            assert!(photon_current_complex(&psi, 0.8).im.abs() < 1e-10);
            assert!(chirality_complex(&psi).im.abs() < 1e-10);
        }
    }

    #[test]
    fn real_vector_has_no_current_or_chirality() {
        let t = Truncation::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let amps = (0..t.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
        let psi = StateVector::new(t, amps).unwrap().normalized().unwrap();
        assert!(photon_current(&psi, 0.0).abs() < 1e-14);
        assert!(photon_current(&psi, PI).abs() < 1e-14);
        assert!(chirality(&psi).abs() < 1e-14);
    }

    #[test]
    fn observables_invariant_under_translation() {
        let t = Truncation::new(2).unwrap();
        let psi = random_state(t, 8);
        let shifted = translate(&psi);
        assert!((chirality(&psi) - chirality(&shifted)).abs() < 1e-12);
        assert!((photon_current(&psi, 0.4) - photon_current(&shifted, 0.4)).abs() < 1e-12);
    }

    #[test]
    fn time_reversal_negates_current_and_chirality() {
        let t = Truncation::new(2).unwrap();
        let psi = random_state(t, 9);
        let conj = StateVector::new(t, psi.amps().iter().map(|z| z.conj()).collect()).unwrap();
        assert!((chirality(&psi) + chirality(&conj)).abs() < 1e-12);
        assert!((photon_current(&psi, 0.4) + photon_current(&conj, -0.4)).abs() < 1e-12);
    }

    #[test]
    fn nondegenerate_input_unchanged() {
        let t = Truncation::new(1).unwrap();
        let psi = make_one_photon_state(MomentumMode::Plus, t);
        let r = resolve_multiplet(std::slice::from_ref(&psi), 1e-10).unwrap();
        assert_eq!(r[0].state, psi);
        assert_eq!(r[0].q, MomentumMode::Plus);
    }

    #[test]
    fn threefold_single_excitation_level() {
        // g = J = 0: |100>, |010>, |001> are degenerate
        let t = Truncation::new(1).unwrap();
        let sites: Vec<StateVector> = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
            .iter()
            .map(|&n| StateVector::basis(t, n, [false; 3]).unwrap())
            .collect();
        let r = resolve_multiplet(&sites, 1e-10).unwrap();
        let labels: Vec<MomentumMode> = r.iter().map(|l| l.q).collect();
        assert_eq!(labels, MomentumMode::ALL.to_vec());
        for l in &r {
            let want = 2.0 * l.q.q().sin();
            assert!((chirality(&l.state) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn non_closed_subspace_rejected() {
        let t = Truncation::new(1).unwrap();
        let a = StateVector::basis(t, [1, 0, 0], [false; 3]).unwrap();
        let b = StateVector::basis(t, [0, 1, 0], [false; 3]).unwrap();
        assert!(matches!(resolve_multiplet(&[a, b], 1e-6), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn incoherent_first_excited_pair_at_zero_phase() {
        let p = ModelParams::new(0.2, 10.0, 0.1, 0.01, 0.0).unwrap();
        let t = Truncation::new(4).unwrap();
        let sol = lowest_eigenpairs(&p, t, 4, &LanczosOptions::default()).unwrap();
        let obs = observe_solution(&sol, 0.0).unwrap();
        assert!((obs[0].parity - 1.0).abs() < 1e-8);
        assert!(obs[0].current.abs() < 1e-12);
        assert_eq!(obs[1].multiplet, obs[2].multiplet);
        let s3 = 3f64.sqrt();
        assert!((obs[1].chirality.abs() - s3).abs() < 0.05);
        assert!((obs[1].chirality + obs[2].chirality).abs() < 1e-8);
    }
}
