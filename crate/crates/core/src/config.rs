//! Run configuration: flat `section.key = value` files, strict keys, and the
//! built-in scenario presets.
//!
//! ```text
//! # comments start with '#'
//! scenario.preset = beat
//! mesh.nx = 16
//! mesh.ny = 16
//! material.model = stvk
//! sim.dt = 5e-4
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::fem::{BodyLoad, BoundaryLoad};
use crate::material::MaterialModel;
use crate::mesh::{Mesh, MeshError, Side};
use crate::stepper::{ConstraintMode, SimConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown key '{key}'")]
    UnknownKey { key: String },
    #[error("{key} {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown scenario preset '{0}'")]
    UnknownPreset(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl ConfigError {
    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Self::Invalid { key: key.to_string(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    File(PathBuf),
    Square { nx: usize, ny: usize, dirichlet: Vec<Side> },
}

impl MeshSource {
    pub fn build(&self) -> Result<Mesh, MeshError> {
        match self {
            Self::File(p) => Mesh::load(p),
            Self::Square { nx, ny, dirichlet } => Mesh::structured_square(*nx, *ny, dirichlet),
        }
    }
}

/// Closed-form loads selectable from a config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadSpec {
    None,
    /// `g = A sin²(πt/P) x₁ n`: a periodic normal traction growing along x.
    Beat { amplitude: f64, period: f64 },
    /// `g = −A min(t/τ, 1) x₁ n`: a ramped inward traction, uneven along x
    /// so the pressure cannot absorb it.
    Crush { amplitude: f64, ramp: f64 },
    /// Data of the manufactured solution `v = (t sin πx, 0)`, `p = t` on the
    /// unit square with Γ_D the left side.
    Manufactured { kappa: f64 },
}

impl LoadSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Beat { .. } => "beat",
            Self::Crush { .. } => "crush",
            Self::Manufactured { .. } => "manufactured",
        }
    }

    pub fn body(&self, gravity: f64) -> BodyLoad {
        match *self {
            Self::Manufactured { kappa } => {
                Arc::new(move |x, t| [(1.0 + kappa * PI * PI * t) * (PI * x[0]).sin(), -gravity])
            }
            _ => Arc::new(move |_, _| [0.0, -gravity]),
        }
    }

    pub fn boundary(&self) -> BoundaryLoad {
        match *self {
            Self::None => Arc::new(|_, _, _| [0.0, 0.0]),
            Self::Beat { amplitude, period } => Arc::new(move |x, n, t| {
                let s = amplitude * (PI * t / period).sin().powi(2) * x[0];
                [s * n[0], s * n[1]]
            }),
            Self::Crush { amplitude, ramp } => Arc::new(move |x, n, t| {
                let s = -amplitude * (t / ramp).min(1.0) * x[0];
                [s * n[0], s * n[1]]
            }),
            Self::Manufactured { kappa } => Arc::new(move |x, n, t| {
                let dv = kappa * PI * t * (PI * x[0]).cos();
                [dv * n[0] + t * n[0], t * n[1]]
            }),
        }
    }
}

/// Exact velocity and pressure for [`LoadSpec::Manufactured`].
pub fn manufactured_velocity(x: [f64; 2], t: f64) -> [f64; 2] {
    [t * (PI * x[0]).sin(), 0.0]
}

pub fn manufactured_pressure(t: f64) -> f64 {
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write a VTK snapshot every this many accepted steps; 0 disables.
    pub snapshot_every: usize,
    pub csv_name: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), snapshot_every: 0, csv_name: "series.csv".into() }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub mesh: MeshSource,
    pub sim: SimConfig,
    pub load: LoadSpec,
    pub gravity: f64,
    pub output: OutputConfig,
}

impl RunConfig {
    /// 8×8 square clamped on the left, StVK (μ = λ = 1), no loads.
    pub fn base() -> Self {
        Self {
            scenario: None,
            mesh: MeshSource::Square { nx: 8, ny: 8, dirichlet: vec![Side::Left] },
            sim: SimConfig::new(MaterialModel::StVenantKirchhoff { mu: 1.0, lambda: 1.0 }),
            load: LoadSpec::None,
            gravity: 0.0,
            output: OutputConfig::default(),
        }
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let mut c = Self::base();
        c.scenario = Some(name.to_string());
        match name {
            "equilibrium" => {
                c.sim.t_end = 0.05;
            }
            "beat" => {
                c.mesh = MeshSource::Square { nx: 32, ny: 32, dirichlet: vec![Side::Left] };
                c.sim.dt = 1e-3;
                c.sim.t_end = 0.5;
                c.load = LoadSpec::Beat { amplitude: 0.5, period: 0.1 };
            }
            "crush" => {
                c.mesh = MeshSource::Square { nx: 16, ny: 16, dirichlet: vec![Side::Left] };
                c.sim.dt = 1e-3;
                c.sim.t_end = 0.5;
                c.sim.dt_min = 1e-5;
                c.load = LoadSpec::Crush { amplitude: 5e5, ramp: 0.05 };
            }
            "mms-linear" => {
                c.mesh = MeshSource::Square { nx: 16, ny: 16, dirichlet: vec![Side::Left] };
                c.sim.linear = true;
                c.sim.dt = 1.0 / 256.0;
                c.sim.t_end = 0.25;
                c.load = LoadSpec::Manufactured { kappa: c.sim.kappa };
            }
            _ => return Err(ConfigError::UnknownPreset(name.to_string())),
        }
        c.apply_loads();
        Ok(c)
    }

    /// Rebuilds the load closures in `sim` from `load` and `gravity`.
    pub fn apply_loads(&mut self) {
        if let LoadSpec::Manufactured { kappa } = &mut self.load {
            *kappa = self.sim.kappa;
        }
        self.sim.body_load = self.load.body(self.gravity);
        self.sim.boundary_load = self.load.boundary();
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::parse(&text)?;
        if let MeshSource::File(p) = &mut cfg.mesh {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, reason: "expected 'key = value'".into() })?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if !key.contains('.') {
                return Err(ConfigError::Syntax { line: i + 1, reason: format!("key '{key}' has no section") });
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(ConfigError::Syntax { line: i + 1, reason: format!("duplicate key '{key}'") });
            }
        }
        let mut cfg = match entries.remove("scenario.preset") {
            Some(name) => Self::preset(&name)?,
            None => Self::base(),
        };
        let mut r = Reader { entries };
        cfg.read_mesh(&mut r)?;
        cfg.read_material(&mut r)?;
        cfg.read_sim(&mut r)?;
        cfg.read_load(&mut r)?;
        cfg.read_output(&mut r)?;
        if let Some(key) = r.entries.keys().next() {
            return Err(ConfigError::UnknownKey { key: key.clone() });
        }
        cfg.apply_loads();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim.validate().map_err(|e| {
            let msg = e.to_string();
            let msg = msg.trim_start_matches("invalid configuration: ").to_string();
            match msg.split_once(' ') {
                Some((key, rest)) if key.starts_with("sim.") => ConfigError::invalid(key, rest),
                _ => ConfigError::invalid("material", msg),
            }
        })?;
        if let MeshSource::Square { nx, ny, .. } = self.mesh {
            if nx == 0 || ny == 0 {
                return Err(ConfigError::invalid("mesh.nx", "must be >= 1"));
            }
        }
        if self.output.csv_name.is_empty() {
            return Err(ConfigError::invalid("output.csv_name", "must not be empty"));
        }
        Ok(())
    }

    fn read_mesh(&mut self, r: &mut Reader) -> Result<(), ConfigError> {
        if let Some(file) = r.take("mesh.file") {
            for k in ["mesh.nx", "mesh.ny", "mesh.dirichlet"] {
                if r.entries.contains_key(k) {
                    return Err(ConfigError::invalid(k, "cannot be combined with mesh.file"));
                }
            }
            self.mesh = MeshSource::File(PathBuf::from(file));
            return Ok(());
        }
        let (mut nx, mut ny, mut dirichlet) = match &self.mesh {
            MeshSource::Square { nx, ny, dirichlet } => (*nx, *ny, dirichlet.clone()),
            MeshSource::File(_) => unreachable!("presets use structured squares"),
        };
        if let Some(v) = r.parse::<usize>("mesh.nx")? {
            nx = v;
            if !r.entries.contains_key("mesh.ny") {
                ny = v;
            }
        }
        if let Some(v) = r.parse::<usize>("mesh.ny")? {
            ny = v;
        }
        if let Some(list) = r.take("mesh.dirichlet") {
            dirichlet = list
                .split(',')
                .map(|s| {
                    Side::parse(s.trim())
                        .ok_or_else(|| ConfigError::invalid("mesh.dirichlet", format!("unknown side '{}'", s.trim())))
                })
                .collect::<Result<_, _>>()?;
        }
        self.mesh = MeshSource::Square { nx, ny, dirichlet };
        Ok(())
    }

    fn read_material(&mut self, r: &mut Reader) -> Result<(), ConfigError> {
        let model = r.take("material.model");
        let current = self.sim.material.name().to_string();
        let name = model.as_deref().unwrap_or(&current);
        let material = match name {
            "stvk" => {
                let (mu0, l0) = match self.sim.material {
                    MaterialModel::StVenantKirchhoff { mu, lambda } => (mu, lambda),
                    _ => (1.0, 1.0),
                };
                MaterialModel::StVenantKirchhoff {
                    mu: r.parse("material.mu")?.unwrap_or(mu0),
                    lambda: r.parse("material.lambda")?.unwrap_or(l0),
                }
            }
            "fung" => MaterialModel::Fung {
                w0: r.parse("material.w0")?.unwrap_or(0.0),
                beta: r.parse("material.beta")?.unwrap_or(1.0),
                gamma: r.parse("material.gamma")?.unwrap_or(1.0),
            },
            "ogden" => {
                let terms = match r.take("material.ogden") {
                    Some(list) => parse_ogden_terms(&list)?,
                    None => vec![(0.5, 2.0), (0.25, -1.0)],
                };
                MaterialModel::ogden(&terms).map_err(|e| ConfigError::invalid("material.ogden", e.to_string()))?
            }
            other => return Err(ConfigError::invalid("material.model", format!("unknown model '{other}'"))),
        };
        material.validate().map_err(|e| ConfigError::invalid("material", e.to_string()))?;
        self.sim.material = material;
        Ok(())
    }

    fn read_sim(&mut self, r: &mut Reader) -> Result<(), ConfigError> {
        let s = &mut self.sim;
        if let Some(v) = r.parse("sim.kappa")? {
            s.kappa = v;
        }
        if let Some(v) = r.parse("sim.dt")? {
            s.dt = v;
            if s.dt_min >= v && !r.entries.contains_key("sim.dt_min") {
                s.dt_min = v / 1024.0;
            }
        }
        if let Some(v) = r.parse("sim.t_end")? {
            s.t_end = v;
        }
        if let Some(v) = r.parse("sim.fp_tol")? {
            s.fp_tol = v;
        }
        if let Some(v) = r.parse("sim.fp_max_iters")? {
            s.fp_max_iters = v;
        }
        if let Some(v) = r.take("sim.constraint_mode") {
            s.constraint_mode = ConstraintMode::parse(&v)
                .ok_or_else(|| ConfigError::invalid("sim.constraint_mode", format!("unknown mode '{v}'")))?;
        }
        if let Some(v) = r.parse("sim.newton_accel")? {
            s.newton_accel = v;
        }
        if let Some(v) = r.parse("sim.dt_min")? {
            s.dt_min = v;
        }
        if let Some(v) = r.parse("sim.rho")? {
            s.rho = v;
        }
        if let Some(v) = r.parse("sim.linear")? {
            s.linear = v;
        }
        Ok(())
    }

    fn read_load(&mut self, r: &mut Reader) -> Result<(), ConfigError> {
        if let Some(v) = r.parse("load.gravity")? {
            self.gravity = v;
        }
        let kind = r.take("load.kind");
        let amplitude: Option<f64> = r.parse("load.amplitude")?;
        let period: Option<f64> = r.parse("load.period")?;
        let ramp: Option<f64> = r.parse("load.ramp")?;
        let kind = kind.as_deref().unwrap_or(self.load.name()).to_string();
        let (a0, p0, r0) = match self.load {
            LoadSpec::Beat { amplitude, period } => (amplitude, period, 0.05),
            LoadSpec::Crush { amplitude, ramp } => (amplitude, 0.1, ramp),
            _ => (1.0, 0.1, 0.05),
        };
        let unused = |key: &str, v: Option<f64>| match v {
            Some(_) => Err(ConfigError::invalid(key, format!("not used by load.kind = {kind}"))),
            None => Ok(()),
        };
        self.load = match kind.as_str() {
            "none" | "manufactured" => {
                unused("load.amplitude", amplitude)?;
                unused("load.period", period)?;
                unused("load.ramp", ramp)?;
                if kind == "none" { LoadSpec::None } else { LoadSpec::Manufactured { kappa: self.sim.kappa } }
            }
            "beat" => {
                unused("load.ramp", ramp)?;
                let period = period.unwrap_or(p0);
                if !(period > 0.0) {
                    return Err(ConfigError::invalid("load.period", "must be > 0"));
                }
                LoadSpec::Beat { amplitude: amplitude.unwrap_or(a0), period }
            }
            "crush" => {
                unused("load.period", period)?;
                let ramp = ramp.unwrap_or(r0);
                if !(ramp > 0.0) {
                    return Err(ConfigError::invalid("load.ramp", "must be > 0"));
                }
                LoadSpec::Crush { amplitude: amplitude.unwrap_or(a0), ramp }
            }
            other => return Err(ConfigError::invalid("load.kind", format!("unknown load '{other}'"))),
        };
        Ok(())
    }

    fn read_output(&mut self, r: &mut Reader) -> Result<(), ConfigError> {
        if let Some(v) = r.take("output.dir") {
            self.output.dir = PathBuf::from(v);
        }
        if let Some(v) = r.parse("output.snapshot_every")? {
            self.output.snapshot_every = v;
        }
        if let Some(v) = r.take("output.csv_name") {
            self.output.csv_name = v;
        }
        Ok(())
    }
}

fn parse_ogden_terms(list: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    list.split(',')
        .map(|term| {
            let (c, g) = term
                .split_once(':')
                .ok_or_else(|| ConfigError::invalid("material.ogden", "expected 'coeff:exponent, ...'"))?;
            let num = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| ConfigError::invalid("material.ogden", format!("bad number '{}'", s.trim())))
            };
            Ok((num(c)?, num(g)?))
        })
        .collect()
}

struct Reader {
    entries: BTreeMap<String, String>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::invalid(key, format!("cannot parse '{v}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let c = RunConfig::parse("mesh.nx = 4\nmaterial.model = stvk\n").unwrap();
        assert_eq!(c.sim.kappa, 1.0);
        assert_eq!(c.sim.dt, 1e-3);
        assert_eq!(c.sim.fp_tol, 1e-10);
        assert_eq!(c.sim.constraint_mode, ConstraintMode::Split);
        assert_eq!(c.mesh, MeshSource::Square { nx: 4, ny: 4, dirichlet: vec![Side::Left] });
    }

    #[test]
    fn invalid_values_name_the_key() {
        let e = RunConfig::parse("sim.kappa = -1\n").unwrap_err();
        assert_eq!(e.to_string(), "sim.kappa must be > 0");
        let e = RunConfig::parse("sim.kapa = 1\n").unwrap_err();
        assert_eq!(e.to_string(), "unknown key 'sim.kapa'");
        assert!(matches!(RunConfig::parse("sim.dt = abc"), Err(ConfigError::Invalid { .. })));
        assert!(matches!(RunConfig::parse("kappa = 1"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::parse("sim.dt = 1\nsim.dt = 2"), Err(ConfigError::Syntax { line: 2, .. })));
        assert!(RunConfig::parse("load.kind = none\nload.amplitude = 2").is_err());
        assert!(matches!(RunConfig::parse("scenario.preset = nope"), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn preset_values_can_be_overridden() {
        let c = RunConfig::parse("scenario.preset = beat\nmesh.nx = 8\nload.amplitude = 0.25 # smaller\n").unwrap();
        assert_eq!(c.load, LoadSpec::Beat { amplitude: 0.25, period: 0.1 });
        assert_eq!(c.mesh, MeshSource::Square { nx: 8, ny: 8, dirichlet: vec![Side::Left] });
        assert_eq!(c.scenario.as_deref(), Some("beat"));
        for name in ["equilibrium", "beat", "crush", "mms-linear"] {
            RunConfig::preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn materials_parse() {
        let c = RunConfig::parse("material.model = ogden\nmaterial.ogden = 0.5:1.5, 0.2:-1").unwrap();
        assert_eq!(c.sim.material, MaterialModel::ogden(&[(0.5, 1.5), (0.2, -1.0)]).unwrap());
        let c = RunConfig::parse("material.model = fung\nmaterial.beta = 2").unwrap();
        assert_eq!(c.sim.material, MaterialModel::Fung { w0: 0.0, beta: 2.0, gamma: 1.0 });
        assert!(RunConfig::parse("material.model = fung\nmaterial.mu = 2").is_err());
        assert!(RunConfig::parse("material.model = stvk\nmaterial.mu = -2").is_err());
    }

    #[test]
    fn manufactured_data_match_the_exact_solution() {
        let kappa = 0.7;
        let load = LoadSpec::Manufactured { kappa };
        let g = load.boundary();
        let t = 0.3;
        // right edge: κ ∂v/∂x + p n
        let right = g([1.0, 0.4], [1.0, 0.0], t);
        assert!((right[0] - (-kappa * PI * t + t)).abs() < 1e-15 && right[1] == 0.0);
        let top = g([0.3, 1.0], [0.0, 1.0], t);
        assert!(top[0].abs() < 1e-15 && (top[1] - t).abs() < 1e-15);
        let f = load.body(0.0)([0.25, 0.5], t);
        assert!((f[0] - (1.0 + kappa * PI * PI * t) * (PI * 0.25).sin()).abs() < 1e-15);
    }
}
