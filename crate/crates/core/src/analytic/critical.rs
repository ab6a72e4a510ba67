//! Critical couplings, the tricritical point and the resulting phase map.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{omega_q, MomentumMode};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Coupling `g1c(q)` at which the incoherent-phase gap of the `+-q` pair
/// closes. Independent of `delta` and of the current `g1`.
pub fn critical_coupling(p: &ModelParams, q: MomentumMode) -> Result<f64> {
    let r = p.hopping_ratio();
    let th = p.theta();
    let qq = q.q();
    let den = 4.0 * (1.0 + 2.0 * r * th.cos() * qq.cos());
    if den <= 0.0 {
        return Err(Error::domain(
            "critical_coupling",
            format!("denominator {den:.3e} <= 0 (J/omega = {r} too large)"),
        ));
    }
    let num = 1.0 + 4.0 * r * th.cos() * qq.cos() + 4.0 * r * r * (th + qq).cos() * (th - qq).cos();
    if num < 0.0 {
        return Err(Error::domain("critical_coupling", format!("negative numerator {num:.3e}")));
    }
    Ok((num / den).sqrt())
}

/// Meeting point of the `q = 0` and `q = +-2pi/3` critical lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TricriticalPoint {
    /// Positive branch; the diagram is mirror symmetric in `theta`.
    pub theta_c: f64,
    pub g_tc: f64,
}

pub fn tricritical_point(p: &ModelParams) -> TricriticalPoint {
    let (w, j) = (p.omega(), p.j());
    let root = (8.0 * j * j + w * w).sqrt();
    let theta_c = (-2.0 * j / (root + w)).acos();
    let g_tc = 0.5 * (1.5 - root / (2.0 * w)).sqrt();
    TricriticalPoint { theta_c, g_tc }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseLabel {
    #[serde(rename = "iCP")]
    Incoherent,
    #[serde(rename = "nCP")]
    NormalCoherent,
    #[serde(rename = "cCP+")]
    ChiralPlus,
    #[serde(rename = "cCP-")]
    ChiralMinus,
}

impl PhaseLabel {
    pub fn is_coherent(self) -> bool {
        !matches!(self, PhaseLabel::Incoherent)
    }

    pub fn is_chiral(self) -> bool {
        matches!(self, PhaseLabel::ChiralPlus | PhaseLabel::ChiralMinus)
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseLabel::Incoherent => "iCP",
            PhaseLabel::NormalCoherent => "nCP",
            PhaseLabel::ChiralPlus => "cCP+",
            PhaseLabel::ChiralMinus => "cCP-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseClassification {
    pub label: PhaseLabel,
    /// Analytic mode whose excitation energy closes first (see the module
    /// convention note in [`crate::analytic`]).
    pub q_star: MomentumMode,
    pub g1c_at_theta: f64,
}

/// Relative tolerance under which the two critical lines count as equal.
const TIE_TOL: f64 = 1e-12;

/// Classifies the ground state at `p` in the infinite-frequency phase diagram.
///
/// Between the `+-2pi/3` pair the softer mode (smaller `omega_q`) is the one
/// that closes; at `theta = 0` the pair is degenerate and `Minus` is reported,
/// together with the `cCP+` label.
pub fn classify_phase(p: &ModelParams) -> Result<PhaseClassification> {
    let g0 = critical_coupling(p, MomentumMode::Zero)?;
    let gpm = critical_coupling(p, MomentumMode::Plus)?;
    let (q_star, gc) = if gpm < g0 * (1.0 - TIE_TOL) {
        let soft = if omega_q(p, MomentumMode::Plus) < omega_q(p, MomentumMode::Minus) {
            MomentumMode::Plus
        } else {
            MomentumMode::Minus
        };
        (soft, gpm)
    } else {
        (MomentumMode::Zero, g0)
    };
    let label = if p.g1() < gc {
        PhaseLabel::Incoherent
    } else if q_star == MomentumMode::Zero {
        PhaseLabel::NormalCoherent
    } else if p.theta() >= 0.0 {
        PhaseLabel::ChiralPlus
    } else {
        PhaseLabel::ChiralMinus
    };
    Ok(PhaseClassification { label, q_star, g1c_at_theta: gc })
}
