use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EdConfig, RunConfig};
use super::output::{num, opt, Cache, PointStatus, ResultEnvelope, Table};
use crate::analytic::{
    analytic_ground_state, ccp_excitations, classify_phase, critical_coupling, default_seeds, icp_excitation,
    meanfield_energy, minimize_meanfield, tricritical_point, MinimizerOptions, MomentumMode,
    PhaseLabel,
};
use crate::ed::{converge_truncation_partial, lowest_eigenpairs, EigenSolution, Truncation};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::observables::{observe_solution, ObservableSet};
use crate::scaling::{critical_sweep, loglog_slope, ScalingSeries, SweepOptions, DEFAULT_ETAS};

/// Lowest `k` eigenpairs at a fixed cutoff, or under the truncation policy.
/// The flag is false when either the eigensolver or the cutoff search did
/// not converge.
pub fn solve_point(p: &ModelParams, ed: &EdConfig, k: usize) -> Result<(EigenSolution, bool)> {
    match ed.n_tr {
        Some(n) => {
            let sol = lowest_eigenpairs(p, Truncation::new(n)?, k, &ed.lanczos)?;
            let ok = sol.converged;
            Ok((sol, ok))
        }
        None => {
            let (sol, ok) = converge_truncation_partial(p, k, &ed.policy, &ed.lanczos)?;
            let ok = ok && sol.converged;
            Ok((sol, ok))
        }
    }
}

/// Analytic energies for the first `k` levels where the phase fixes them:
/// ground plus single-quasiparticle levels in the iCP, ground only otherwise.
pub fn analytic_levels(p: &ModelParams, k: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; k];
    let Ok(ground) = analytic_ground_state(p) else { return out };
    out[0] = Some(ground.energy);
    if ground.label == PhaseLabel::Incoherent {
        let mut eps: Vec<f64> = MomentumMode::ALL.iter().filter_map(|&q| icp_excitation(p, q).ok()).collect();
        eps.sort_by(f64::total_cmp);
        for (slot, e) in out.iter_mut().skip(1).zip(eps) {
            *slot = Some(ground.energy + e);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpectrumPoint {
    theta_pi: f64,
    label: Option<PhaseLabel>,
    n_tr: usize,
    converged: bool,
    levels: Vec<ObservableSet>,
    analytic: Vec<Option<f64>>,
}

fn q_label(q: Option<MomentumMode>) -> String {
    q.map(|m| m.to_string()).unwrap_or_default()
}

fn label_str(l: Option<PhaseLabel>) -> String {
    l.map(|l| l.to_string()).unwrap_or_default()
}

/// Each point goes through the cache; results come back in grid order.
fn map_points<T, F>(cfg: &RunConfig, cache: &Cache, command: &str, n: usize, f: F) -> Result<Vec<T>>
where
    T: Serialize + for<'de> Deserialize<'de> + Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let hash = cfg.hash();
    (0..n)
        .into_par_iter()
        .map(|i| cache.get_or_compute(&hash, command, i, || f(i)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn spectrum(cfg: &RunConfig, cache: &Cache) -> Result<(ResultEnvelope, Vec<(&'static str, Table)>)> {
    let thetas = cfg.theta_points()?;
    let k = cfg.ed.k;
    let points: Vec<SpectrumPoint> = map_points(cfg, cache, "spectrum", thetas.len(), |i| {
        let p = cfg.model.params()?.with_theta(thetas[i] * PI);
        let (sol, converged) = solve_point(&p, &cfg.ed, k)?;
        if !converged {
            log::warn!("spectrum point {i} (theta/pi = {}) not converged", thetas[i]);
        }
        Ok(SpectrumPoint {
            theta_pi: thetas[i],
            label: classify_phase(&p).ok().map(|c| c.label),
            n_tr: sol.n_tr_used,
            converged,
            levels: observe_solution(&sol, p.theta())?,
            analytic: analytic_levels(&p, k),
        })
    })?;

    let hash = cfg.hash();
    let mut t = Table::new(vec![
        "point", "theta_pi", "index", "E", "E_analytic", "N_p", "I_ph", "C_ph", "parity", "q_label", "multiplet",
        "phase", "n_tr", "converged", "config_hash",
    ]);
    let mut env = ResultEnvelope::new("spectrum", cfg);
    for (i, pt) in points.iter().enumerate() {
        for o in &pt.levels {
            t.push(vec![
                i.to_string(),
                num(pt.theta_pi),
                o.state_index.to_string(),
                num(o.energy),
                opt(pt.analytic.get(o.state_index).copied().flatten()),
                num(o.n_photons),
                num(o.current),
                num(o.chirality),
                num(o.parity),
                q_label(o.q),
                o.multiplet.to_string(),
                label_str(pt.label),
                pt.n_tr.to_string(),
                pt.converged.to_string(),
                hash.clone(),
            ]);
        }
        env.points.push(PointStatus { index: i, converged: pt.converged, n_tr: Some(pt.n_tr) });
    }
    Ok((env, vec![("spectrum.csv", t)]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OrderParameters {
    n_photons: f64,
    current: f64,
    n_tr: usize,
    converged: bool,
}

pub fn phase_diagram(cfg: &RunConfig, cache: &Cache) -> Result<(ResultEnvelope, Vec<(&'static str, Table)>)> {
    let thetas = cfg.theta_points()?;
    let g1s = match &cfg.grids.g1 {
        Some(g) => g.points()?,
        None => vec![cfg.model.g1],
    };
    let base = cfg.model.params()?;
    let stride = cfg.phase_diagram.ed_stride;
    let n = thetas.len() * g1s.len();
    let grid = |idx: usize| (idx / g1s.len(), idx % g1s.len());

    let ed: Vec<Option<OrderParameters>> = map_points(cfg, cache, "phase-diagram", n, |idx| {
        let (it, ig) = grid(idx);
        if stride == 0 || it % stride != 0 || ig % stride != 0 {
            return Ok(None);
        }
        let p = base.with_theta(thetas[it] * PI).with_g1(g1s[ig])?;
        let (sol, converged) = solve_point(&p, &cfg.ed, 1)?;
        let obs = observe_solution(&sol, p.theta())?;
        Ok(Some(OrderParameters { n_photons: obs[0].n_photons, current: obs[0].current, n_tr: sol.n_tr_used, converged }))
    })?;

    let hash = cfg.hash();
    let mut env = ResultEnvelope::new("phase-diagram", cfg);
    let mut t = Table::new(vec![
        "point", "theta_pi", "g1", "phase", "q_star", "g1c", "N_p", "I_ph", "n_tr", "converged", "config_hash",
    ]);
    for idx in 0..n {
        let (it, ig) = grid(idx);
        let p = base.with_theta(thetas[it] * PI).with_g1(g1s[ig])?;
        let class = classify_phase(&p);
        let e = ed[idx].as_ref();
        let converged = e.map(|o| o.converged).unwrap_or(true) && class.is_ok();
        t.push(vec![
            idx.to_string(),
            num(thetas[it]),
            num(g1s[ig]),
            class.as_ref().map(|c| c.label.to_string()).unwrap_or_default(),
            class.as_ref().map(|c| c.q_star.to_string()).unwrap_or_default(),
            opt(class.as_ref().ok().map(|c| c.g1c_at_theta)),
            opt(e.map(|o| o.n_photons)),
            opt(e.map(|o| o.current)),
            e.map(|o| o.n_tr.to_string()).unwrap_or_default(),
            converged.to_string(),
            hash.clone(),
        ]);
        env.points.push(PointStatus { index: idx, converged, n_tr: e.map(|o| o.n_tr) });
    }

    let tc = tricritical_point(&base);
    let g_top = g1s.iter().copied().fold(tc.g_tc, f64::max);
    let mut b = Table::new(vec!["curve", "theta_pi", "g1"]);
    let m = cfg.phase_diagram.boundary_points.max(2);
    for i in 0..m {
        let th = -1.0 + 2.0 * i as f64 / (m - 1) as f64;
        let p = base.with_theta(th * PI);
        for (name, q) in [("g1c_q0", MomentumMode::Zero), ("g1c_q2pi3", MomentumMode::Plus)] {
            b.push(vec![name.to_string(), num(th), opt(critical_coupling(&p, q).ok())]);
        }
    }
    for (name, sign) in [("first_order_plus", 1.0), ("first_order_minus", -1.0)] {
        for g in [tc.g_tc, g_top] {
            b.push(vec![name.to_string(), num(sign * tc.theta_c / PI), num(g)]);
        }
    }
    env.extra = serde_json::json!({ "tricritical": { "theta_c_pi": tc.theta_c / PI, "g_tc": tc.g_tc } });
    Ok((env, vec![("phase_diagram.csv", t), ("phase_boundaries.csv", b)]))
}

pub fn displacement(cfg: &RunConfig, cache: &Cache) -> Result<(ResultEnvelope, Vec<(&'static str, Table)>)> {
    let thetas = cfg.theta_points()?;
    let base = cfg.model.params()?;
    #[derive(Serialize, Deserialize)]
    struct Row {
        cells: Vec<String>,
        converged: bool,
    }
    let rows: Vec<Row> = map_points(cfg, cache, "displacement", thetas.len(), |i| {
        let p = base.with_theta(thetas[i] * PI);
        let g = analytic_ground_state(&p)?;
        let d = g.displacement;
        let modes: Vec<Option<f64>> = if g.label.is_coherent() {
            let m = ccp_excitations(&p, &d)?;
            m.iter().map(|&x| Some(x)).collect()
        } else {
            MomentumMode::ALL.iter().map(|&q| icp_excitation(&p, q).ok()).collect()
        };
        let mf_min = minimize_meanfield(&p, &default_seeds(&p), &MinimizerOptions::default())
            .map(|m| meanfield_energy(&p, &m.alpha()))
            .ok();
        let mut cells = vec![i.to_string(), num(thetas[i]), g.label.to_string()];
        cells.extend(d.a.iter().chain(&d.b).map(|&x| num(x)));
        cells.extend([
            num(d.residual),
            d.converged.to_string(),
            d.iterations.to_string(),
            num(meanfield_energy(&p, &d.alpha())),
            opt(mf_min),
            num(g.energy),
        ]);
        cells.extend(modes.into_iter().map(opt));
        Ok(Row { cells, converged: d.converged })
    })?;
    let hash = cfg.hash();
    let mut t = Table::new(vec![
        "point", "theta_pi", "phase", "A1", "A2", "A3", "B1", "B2", "B3", "residual", "converged", "iterations",
        "E_meanfield", "E_meanfield_min", "E_ground", "eps1", "eps2", "eps3", "config_hash",
    ]);
    let mut env = ResultEnvelope::new("displacement", cfg);
    for (i, r) in rows.into_iter().enumerate() {
        let mut cells = r.cells;
        cells.push(hash.clone());
        t.push(cells);
        env.points.push(PointStatus { index: i, converged: r.converged, n_tr: None });
    }
    Ok((env, vec![("displacement.csv", t)]))
}

pub fn scaling(cfg: &RunConfig, cache: &Cache) -> Result<(ResultEnvelope, Vec<(&'static str, Table)>)> {
    let etas = match &cfg.grids.eta {
        Some(g) => g.points()?,
        None => DEFAULT_ETAS.to_vec(),
    };
    let base = cfg.model.params()?;
    let scale = if cfg.scaling.relative_to_theta_c { tricritical_point(&base).theta_c } else { PI };
    let thetas: Vec<f64> = cfg.theta_points()?.iter().map(|t| t * scale).collect();
    let opts = SweepOptions { policy: cfg.scaling.policy, lanczos: cfg.ed.lanczos };
    let hash = cfg.hash();

    // the sweep parallelizes over eta, so theta points run in order
    let mut series: Vec<(ScalingSeries, ScalingSeries)> = Vec::new();
    for (i, &th) in thetas.iter().enumerate() {
        series.push(cache.get_or_compute(&hash, "scaling", i, || {
            critical_sweep(base.omega(), base.j(), th, &etas, &opts)
        })?);
    }

    let mut t = Table::new(vec![
        "point", "theta_pi", "g1", "q_star", "quantity", "eta", "value", "n_tr", "converged", "config_hash",
    ]);
    let mut env = ResultEnvelope::new("scaling", cfg);
    let mut fits = Vec::new();
    let mut fit_failed = false;
    for (i, pair) in series.iter().enumerate() {
        for s in [&pair.0, &pair.1] {
            let quantity = serde_json::to_value(s.quantity).expect("enum serializes");
            let quantity = quantity.as_str().unwrap_or_default().to_string();
            for pt in &s.points {
                t.push(vec![
                    i.to_string(),
                    num(s.theta / PI),
                    num(s.g1),
                    s.q_star.to_string(),
                    quantity.clone(),
                    num(pt.eta),
                    num(pt.value),
                    pt.n_tr.to_string(),
                    pt.converged.to_string(),
                    hash.clone(),
                ]);
            }
            let fit = loglog_slope(s, cfg.scaling.fit_window);
            if let Err(e) = &fit {
                log::warn!("theta/pi = {}: {quantity} fit failed: {e}", s.theta / PI);
                fit_failed = true;
            }
            fits.push(serde_json::json!({
                "point": i,
                "theta_pi": s.theta / PI,
                "quantity": quantity,
                "fit": fit.as_ref().ok(),
                "error": fit.as_ref().err().map(|e| e.to_string()),
            }));
        }
        let converged = pair.0.points.iter().all(|p| p.converged);
        env.points.push(PointStatus { index: i, converged, n_tr: None });
    }
    if fit_failed {
        env.points.iter_mut().for_each(|p| p.converged = false);
    }
    env.extra = serde_json::json!({ "fits": fits });
    Ok((env, vec![("scaling.csv", t)]))
}

/// Errors that are the caller's fault rather than the solver's.
pub fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Domain { .. } | Error::Io(_) | Error::Checkpoint(_)
    )
}
