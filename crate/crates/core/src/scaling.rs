//! Finite-frequency scaling at the critical coupling and log-log exponent fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{classify_phase, critical_coupling, MomentumMode};
use crate::ed::{converge_truncation_partial, LanczosOptions, TruncationPolicy};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::observables::photon_number;

pub const DEFAULT_ETAS: [f64; 6] = [25.0, 50.0, 100.0, 200.0, 400.0, 800.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingQuantity {
    /// `|E_g / eta + 3 omega / 2|`
    EnergyExcess,
    /// `N_p / eta`
    PhotonDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub eta: f64,
    pub value: f64,
    pub n_tr: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub quantity: ScalingQuantity,
    pub theta: f64,
    pub g1: f64,
    /// Mode whose critical line fixes `g1`.
    pub q_star: MomentumMode,
    pub points: Vec<ScalingPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub window: [f64; 2],
    pub n_points: usize,
    /// `(1 / eta_mid, slope)` between consecutive converged points, with
    /// `eta_mid` the geometric mean of the pair.
    pub local_slopes: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub policy: TruncationPolicy,
    pub lanczos: LanczosOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            policy: TruncationPolicy { n_tr_start: 10, step: 5, cap: 60, energy_tol: 1e-5 },
            lanczos: LanczosOptions::default(),
        }
    }
}

/// Ground-state energy and photon series along `eta` at the critical
/// coupling `g1c(q*)` of the given phase.
pub fn critical_sweep(
    omega: f64,
    j: f64,
    theta: f64,
    etas: &[f64],
    opts: &SweepOptions,
) -> Result<(ScalingSeries, ScalingSeries)> {
    if etas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("eta grid must be strictly increasing: {etas:?}")));
    }
    let base = ModelParams::new(omega, omega, 0.0, j, theta)?;
    let q_star = classify_phase(&base)?.q_star;
    let g1 = critical_coupling(&base, q_star)?;
    let c0 = -1.5 * omega;

    let results: Vec<Result<(ScalingPoint, ScalingPoint)>> = etas
        .par_iter()
        .enumerate()
        .map(|(i, &eta)| {
            let p = ModelParams::new(omega, eta * omega, g1, j, theta)?;
            let lanczos = LanczosOptions { seed: opts.lanczos.seed.wrapping_add(i as u64), ..opts.lanczos };
            let (sol, converged) = converge_truncation_partial(&p, 1, &opts.policy, &lanczos)?;
            if !converged {
                log::warn!("eta {eta}: truncation not converged by n_tr {}", sol.n_tr_used);
            }
            let e = sol.values[0];
            let np = photon_number(&sol.vectors[0]);
            let n_tr = sol.n_tr_used;
            Ok((
                ScalingPoint { eta, value: (e / eta - c0).abs(), n_tr, converged },
                ScalingPoint { eta, value: np / eta, n_tr, converged },
            ))
        })
        .collect();

    let mut energy = Vec::with_capacity(etas.len());
    let mut photons = Vec::with_capacity(etas.len());
    for r in results {
        let (a, b) = r?;
        energy.push(a);
        photons.push(b);
    }
    let series = |quantity, points| ScalingSeries { quantity, theta, g1, q_star, points };
    Ok((series(ScalingQuantity::EnergyExcess, energy), series(ScalingQuantity::PhotonDensity, photons)))
}

/// Upper half of the grid, widened to the last four points when shorter.
pub fn default_window(etas: &[f64]) -> Option<[f64; 2]> {
    let n = etas.len();
    if n < 4 {
        return None;
    }
    let take = n.div_ceil(2).max(4);
    Some([etas[n - take], etas[n - 1]])
}

/// Ordinary least squares `y = intercept + slope x`; returns
/// `(slope, intercept, stderr of slope)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if n > 2.0 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, intercept, stderr)
}

/// Log-log slope of the converged points inside `window` (the default window
/// when `None`).
pub fn loglog_slope(series: &ScalingSeries, window: Option<[f64; 2]>) -> Result<ScalingFit> {
    let usable: Vec<&ScalingPoint> = series
        .points
        .iter()
        .filter(|p| {
            if !p.converged {
                log::warn!("eta {}: excluded, truncation not converged", p.eta);
                return false;
            }
            if !(p.value > 0.0 && p.value.is_finite()) {
                log::warn!("eta {}: excluded, value {} has no logarithm", p.eta, p.value);
                return false;
            }
            true
        })
        .collect();
    let etas: Vec<f64> = series.points.iter().map(|p| p.eta).collect();
    let window = window
        .or_else(|| default_window(&etas))
        .ok_or_else(|| Error::Fit(format!("need at least 4 grid points, have {}", etas.len())))?;
    let inside: Vec<&&ScalingPoint> = usable.iter().filter(|p| p.eta >= window[0] && p.eta <= window[1]).collect();
    if inside.len() < 4 {
        return Err(Error::Fit(format!("{} usable points in window {window:?}, need 4", inside.len())));
    }
    let x: Vec<f64> = inside.iter().map(|p| p.eta.ln()).collect();
    let y: Vec<f64> = inside.iter().map(|p| p.value.ln()).collect();
    let (slope, intercept, stderr) = ols(&x, &y);

    let local_slopes: Vec<(f64, f64)> = usable
        .windows(2)
        .map(|w| {
            let s = (w[1].value / w[0].value).ln() / (w[1].eta / w[0].eta).ln();
            (1.0 / (w[0].eta * w[1].eta).sqrt(), s)
        })
        .collect();
    if local_slopes.len() >= 3 {
        let tail = &local_slopes[local_slopes.len() - 3..];
        let d1 = tail[1].1 - tail[0].1;
        let d2 = tail[2].1 - tail[1].1;
        if d1 * d2 < 0.0 {
            log::warn!("local slopes not monotone over the last three points: {tail:?}");
        }
    }
    Ok(ScalingFit { slope, intercept, stderr, window, n_points: inside.len(), local_slopes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(c: f64, power: f64, etas: &[f64]) -> ScalingSeries {
        ScalingSeries {
            quantity: ScalingQuantity::PhotonDensity,
            theta: 0.0,
            g1: 0.5,
            q_star: MomentumMode::Zero,
            points: etas.iter().map(|&eta| ScalingPoint { eta, value: c * eta.powf(power), n_tr: 10, converged: true }).collect(),
        }
    }

    #[test]
    fn synthetic_inverse_law() {
        let fit = loglog_slope(&synthetic(3.0, -1.0, &DEFAULT_ETAS), None).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
        assert_eq!(fit.window, [100.0, 800.0]);
        assert_eq!(fit.n_points, 4);
        assert_eq!(fit.local_slopes.len(), 5);
    }

    #[test]
    fn default_window_examples() {
        assert_eq!(default_window(&[1.0, 2.0, 3.0]), None);
        assert_eq!(default_window(&DEFAULT_ETAS), Some([100.0, 800.0]));
        let ten: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        assert_eq!(default_window(&ten), Some([6.0, 10.0]));
    }

    #[test]
    fn unconverged_and_nonpositive_points_excluded() {
        let mut s = synthetic(1.0, -0.5, &[10.0, 20.0, 40.0, 80.0, 160.0, 320.0]);
        s.points[5].converged = false;
        assert!(loglog_slope(&s, None).is_err());
        let fit = loglog_slope(&s, Some([10.0, 320.0])).unwrap();
        assert_eq!(fit.n_points, 5);
        s.points[0].value = -1.0;
        let fit = loglog_slope(&s, Some([10.0, 320.0])).unwrap();
        assert_eq!(fit.n_points, 4);
        assert!((fit.slope + 0.5).abs() < 1e-12);
    }

    #[test]
    fn non_increasing_grid_rejected() {
        assert!(critical_sweep(0.2, 0.01, 0.0, &[50.0, 25.0], &SweepOptions::default()).is_err());
    }

    #[test]
    fn ols_noise_gives_stderr() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 1.1, 1.9, 3.0];
        let (s, _, e) = ols(&x, &y);
        assert!((s - 0.98).abs() < 1e-12);
        assert!(e > 0.0 && e < 0.1);
    }

    proptest! {
        #[test]
        fn recovers_planted_exponent(power in -2.0f64..1.0, c in 0.01f64..100.0) {
            let fit = loglog_slope(&synthetic(c, power, &DEFAULT_ETAS), None).unwrap();
            prop_assert!((fit.slope - power).abs() < 1e-10);
            prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
        }
    }
}
