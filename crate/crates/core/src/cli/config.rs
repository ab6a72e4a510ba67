use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ed::{LanczosOptions, TruncationPolicy};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Model parameters as written in a config file. `theta` is in units of pi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub omega: f64,
    pub delta: f64,
    pub g1: f64,
    pub j: f64,
    pub theta: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { omega: 0.2, delta: 10.0, g1: 0.1, j: 0.01, theta: 0.0 }
    }
}

impl ModelConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.omega, self.delta, self.g1, self.j, self.theta * PI)
    }
}

/// Either an explicit list or `n` evenly spaced points from `start` to `stop`
/// inclusive. Parses from `"a,b,c"` or `"start:stop:n"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, n: usize },
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, n } => match n {
                0 => Vec::new(),
                1 => vec![*start],
                _ => (0..*n).map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64).collect(),
            },
        };
        if pts.is_empty() {
            return Err(Error::Config("empty grid".into()));
        }
        if let Some(x) = pts.iter().find(|x| !x.is_finite()) {
            return Err(Error::Config(format!("non-finite grid value {x}")));
        }
        Ok(pts)
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("grid value {t:?}: {e}")));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [a, b, n] => Ok(Grid::Range {
                start: num(a)?,
                stop: num(b)?,
                n: n.trim().parse().map_err(|e| Error::Config(format!("grid count {n:?}: {e}")))?,
            }),
            [_] => Ok(Grid::List(s.split(',').map(num).collect::<Result<_>>()?)),
            _ => Err(Error::Config(format!("grid {s:?}: expected a,b,c or start:stop:n"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdConfig {
    /// Fixed cutoff; when absent the truncation policy picks it.
    pub n_tr: Option<usize>,
    pub k: usize,
    pub policy: TruncationPolicy,
    pub lanczos: LanczosOptions,
}

impl Default for EdConfig {
    fn default() -> Self {
        Self { n_tr: None, k: 4, policy: TruncationPolicy::default(), lanczos: LanczosOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Units of pi, or of `theta_c` for `scaling` when `relative_to_theta_c` is set.
    pub theta: Option<Grid>,
    pub g1: Option<Grid>,
    pub eta: Option<Grid>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub fit_window: Option<[f64; 2]>,
    pub relative_to_theta_c: bool,
    pub policy: TruncationPolicy,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            fit_window: None,
            relative_to_theta_c: false,
            policy: crate::scaling::SweepOptions::default().policy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseDiagramConfig {
    /// ED order parameters on every `ed_stride`-th point of both grids; 0 disables.
    pub ed_stride: usize,
    /// Sampling of the boundary curves along theta.
    pub boundary_points: usize,
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        Self { ed_stride: 0, boundary_points: 201 }
    }
}

/// Resolved run configuration. Serialized verbatim next to every result.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub ed: EdConfig,
    pub grids: GridConfig,
    pub scaling: ScalingConfig,
    pub phase_diagram: PhaseDiagramConfig,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    pub g1: Option<f64>,
    pub j: Option<f64>,
    pub theta: Option<f64>,
    pub n_tr: Option<usize>,
    pub k: Option<usize>,
    pub eta_grid: Option<Grid>,
    pub theta_grid: Option<Grid>,
    pub g1_grid: Option<Grid>,
    pub fit_window: Option<[f64; 2]>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let m = &mut self.model;
        for (dst, src) in [(&mut m.omega, o.omega), (&mut m.delta, o.delta), (&mut m.g1, o.g1), (&mut m.j, o.j), (&mut m.theta, o.theta)] {
            if let Some(v) = src {
                *dst = v;
            }
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if let Some(seed) = self.seed {
            self.ed.lanczos.seed = seed;
        }
        if o.n_tr.is_some() {
            self.ed.n_tr = o.n_tr;
        }
        if let Some(k) = o.k {
            self.ed.k = k;
        }
        if o.eta_grid.is_some() {
            self.grids.eta = o.eta_grid.clone();
        }
        if o.theta_grid.is_some() {
            self.grids.theta = o.theta_grid.clone();
        }
        if o.g1_grid.is_some() {
            self.grids.g1 = o.g1_grid.clone();
        }
        if o.fit_window.is_some() {
            self.scaling.fit_window = o.fit_window;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.params()?;
        if self.ed.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        for g in [&self.grids.theta, &self.grids.g1, &self.grids.eta].into_iter().flatten() {
            g.points()?;
        }
        if let Some([a, b]) = self.scaling.fit_window {
            if !(a < b) {
                return Err(Error::Config(format!("fit window [{a}, {b}] is empty")));
            }
        }
        Ok(())
    }

    /// Theta values in units of pi: the grid when given, else the single model value.
    pub fn theta_points(&self) -> Result<Vec<f64>> {
        match &self.grids.theta {
            Some(g) => g.points(),
            None => Ok(vec![self.model.theta]),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

pub fn parse_window(s: &str) -> Result<[f64; 2]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("fit window {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::Config(format!("fit window {s:?}: expected lo,hi"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!("0:1:5".parse::<Grid>().unwrap().points().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!("25, 50,100".parse::<Grid>().unwrap().points().unwrap(), vec![25.0, 50.0, 100.0]);
        assert!("1:2".parse::<Grid>().is_err());
        assert!("a,b".parse::<Grid>().is_err());
        assert!(Grid::Range { start: 0.0, stop: 1.0, n: 0 }.points().is_err());
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let text = r#"
            seed = 7
            [model]
            g1 = 0.7
            theta = 0.3
            [grids]
            theta = { start = -1.0, stop = 1.0, n = 41 }
            eta = [25.0, 50.0]
        "#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.model.g1, 0.7);
        assert_eq!(c.model.delta, 10.0);
        assert_eq!(c.grids.theta.as_ref().unwrap().points().unwrap().len(), 41);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert!(RunConfig::from_toml("[model]\ngamma = 1.0").is_err());
        assert!(RunConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut c = RunConfig::from_toml("[model]\ng1 = 0.7\ndelta = 15.0").unwrap();
        c.apply(&Overrides { g1: Some(0.1), seed: Some(3), k: Some(2), ..Default::default() });
        assert_eq!(c.model.g1, 0.1);
        assert_eq!(c.model.delta, 15.0);
        assert_eq!(c.ed.lanczos.seed, 3);
        assert_eq!(c.ed.k, 2);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.model.g1 = 0.2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = RunConfig::default();
        c.model.omega = -1.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.scaling.fit_window = Some([800.0, 100.0]);
        assert!(c.validate().is_err());
        assert_eq!(parse_window("100,800").unwrap(), [100.0, 800.0]);
        assert!(parse_window("100").is_err());
    }
}
