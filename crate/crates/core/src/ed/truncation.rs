use serde::{Deserialize, Serialize};

use super::{lowest_eigenpairs, EigenSolution, LanczosOptions, Truncation, MAX_N_TR};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// How the photon cutoff is raised until the low spectrum stops moving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationPolicy {
    pub n_tr_start: usize,
    pub step: usize,
    pub cap: usize,
    /// Absolute change allowed in each of the `k` energies between cutoffs.
    pub energy_tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { n_tr_start: 15, step: 5, cap: MAX_N_TR, energy_tol: 1e-8 }
    }
}

/// Solves at `n_tr_start, n_tr_start + step, ...` until all `k` energies
/// change by less than `energy_tol` between consecutive cutoffs.
///
/// Returns the smaller cutoff of the first agreeing pair: its energies are
/// the ones certified by the comparison.
pub fn converge_truncation(
    p: &ModelParams,
    k: usize,
    policy: &TruncationPolicy,
    opts: &LanczosOptions,
) -> Result<EigenSolution> {
    match converge_truncation_partial(p, k, policy, opts)? {
        (sol, true) => Ok(sol),
        (sol, false) => Err(Error::TruncationCap { n_tr: sol.n_tr_used + policy.step, cap: policy.cap.min(MAX_N_TR) }),
    }
}

/// Like [`converge_truncation`], but hitting the cap returns the solution at
/// the largest cutoff tried together with `false`.
pub fn converge_truncation_partial(
    p: &ModelParams,
    k: usize,
    policy: &TruncationPolicy,
    opts: &LanczosOptions,
) -> Result<(EigenSolution, bool)> {
    let cap = policy.cap.min(MAX_N_TR);
    if policy.step == 0 {
        return Err(Error::InvalidParameter { name: "step", value: 0.0, rule: ">= 1" });
    }
    if policy.n_tr_start > cap {
        return Err(Error::TruncationCap { n_tr: policy.n_tr_start, cap });
    }
    let mut n = policy.n_tr_start;
    let mut prev: Option<EigenSolution> = None;
    while n <= cap {
        let sol = lowest_eigenpairs(p, Truncation::new(n)?, k, opts)?.require_converged()?;
        if let Some(old) = prev {
            let shift = old.values.iter().zip(&sol.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            log::debug!("n_tr {} -> {n}: max energy shift {shift:.3e}", old.n_tr_used);
            if shift < policy.energy_tol {
                return Ok((old, true));
            }
        }
        prev = Some(sol);
        n += policy.step;
    }
    Ok((prev.expect("at least one cutoff tried"), false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_converges_at_start() {
        let p = ModelParams::new(0.2, 10.0, 0.0, 0.0, 0.3).unwrap();
        let policy = TruncationPolicy { n_tr_start: 2, ..Default::default() };
        let sol = converge_truncation(&p, 2, &policy, &LanczosOptions::default()).unwrap();
        assert_eq!(sol.n_tr_used, 2);
        assert!((sol.values[0] + 15.0).abs() < 1e-12);
    }

    #[test]
    fn incoherent_point_converges_quickly() {
        let p = ModelParams::new(0.2, 15.0, 0.1, 0.01, 0.0).unwrap();
        let policy = TruncationPolicy { n_tr_start: 5, ..Default::default() };
        let sol = converge_truncation(&p, 1, &policy, &LanczosOptions::default()).unwrap();
        assert!(sol.n_tr_used <= 15);
    }

    #[test]
    fn cap_exceeded() {
        let p = ModelParams::new(0.2, 10.0, 0.9, 0.01, 3.0).unwrap();
        let policy = TruncationPolicy { n_tr_start: 1, step: 1, cap: 3, energy_tol: 1e-12 };
        assert!(matches!(
            converge_truncation(&p, 1, &policy, &LanczosOptions::default()),
            Err(Error::TruncationCap { .. })
        ));
    }
}
