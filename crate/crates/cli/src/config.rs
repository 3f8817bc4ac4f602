//! Run configuration in a line-oriented `section.key = value` format.
//!
//! Blank lines and text after `#` are ignored. Every key is optional; the
//! defaults describe two identical Lorentz–ohmic plates at unit separation
//! and temperature.

use crate::error::CliError;
use casimir_core::em_green::Geometry;
use casimir_core::material::{inverse_temperature, load_epsilon_table, BathModel, Material, Medium};
use casimir_core::pressure::PressureOptions;
use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlateKind {
    LorentzOhmic,
    LorentzCutoff,
    Undamped,
    Table,
}

impl PlateKind {
    fn parse(v: &str) -> Option<Self> {
        match v {
            "lorentz_ohmic" => Some(Self::LorentzOhmic),
            "lorentz_cutoff" => Some(Self::LorentzCutoff),
            "undamped" => Some(Self::Undamped),
            "table" => Some(Self::Table),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::LorentzOhmic => "lorentz_ohmic",
            Self::LorentzCutoff => "lorentz_cutoff",
            Self::Undamped => "undamped",
            Self::Table => "table",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateConfig {
    pub kind: PlateKind,
    pub lambda0: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub cutoff: f64,
    pub mass: f64,
    /// Oscillator temperature; the bath temperature when absent.
    pub t_dof: Option<f64>,
    pub table: Option<PathBuf>,
}

impl Default for PlateConfig {
    fn default() -> Self {
        Self {
            kind: PlateKind::LorentzOhmic,
            lambda0: 1.0,
            omega0: 1.0,
            gamma: 0.1,
            cutoff: 10.0,
            mass: 1.0,
            t_dof: None,
            table: None,
        }
    }
}

impl PlateConfig {
    /// The plate medium with its bath at temperature `t`.
    pub fn medium(&self, t: f64) -> Result<Medium, CliError> {
        let beta = inverse_temperature(t).map_err(CliError::from_core_config)?;
        if self.kind == PlateKind::Table {
            let path = self.table.as_ref().ok_or_else(|| CliError::config(None, "table plate needs a table path"))?;
            let file = File::open(path).map_err(|e| CliError::config(None, format!("{}: {e}", path.display())))?;
            let table = load_epsilon_table(file).map_err(|e| CliError::config(None, format!("{}: {e}", path.display())))?;
            return Ok(Medium::Table { table: Arc::new(table), beta });
        }
        let bath = match self.kind {
            PlateKind::LorentzOhmic => BathModel::ohmic(self.gamma),
            PlateKind::LorentzCutoff => BathModel::ohmic_lorentz_cutoff(self.gamma, self.cutoff),
            _ => BathModel::none(),
        };
        let beta_dof = match self.t_dof {
            Some(t) => inverse_temperature(t).map_err(CliError::from_core_config)?,
            None => beta,
        };
        let m = Material::new(self.omega0, self.mass, self.lambda0, bath, beta, beta_dof)
            .map_err(CliError::from_core_config)?;
        Ok(m.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Gap,
    TLeft,
    TRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                let x = k as f64 / n;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * x,
                    Spacing::Log => self.start * (self.stop / self.start).powf(x),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gap: f64,
    pub t_left: f64,
    pub t_right: f64,
    pub beta_em: Option<f64>,
    pub z_field: f64,
    pub left: PlateConfig,
    pub right: PlateConfig,
    pub sweep: Option<Sweep>,
    pub options: PressureOptions,
    pub output: Option<PathBuf>,
    pub si_scale_hz: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gap: 1.0,
            t_left: 1.0,
            t_right: 1.0,
            beta_em: None,
            z_field: 0.0,
            left: PlateConfig::default(),
            right: PlateConfig::default(),
            sweep: None,
            options: PressureOptions::default(),
            output: None,
            si_scale_hz: None,
        }
    }
}

/// One resolved sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub gap: f64,
    pub t_left: f64,
    pub t_right: f64,
}

fn number(line: usize, key: &str, v: &str) -> Result<f64, CliError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::config(Some(line), format!("{key}: expected a finite number, got '{v}'")))
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::config(Some(line), format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn positive(line: usize, key: &str, v: &str) -> Result<f64, CliError> {
    let x = number(line, key, v)?;
    if x <= 0.0 {
        return Err(CliError::config(Some(line), format!("{key}: must be > 0, got {x}")));
    }
    Ok(x)
}

fn non_negative(line: usize, key: &str, v: &str) -> Result<f64, CliError> {
    let x = number(line, key, v)?;
    if x < 0.0 {
        return Err(CliError::config(Some(line), format!("{key}: must be ≥ 0, got {x}")));
    }
    Ok(x)
}

fn plate_key(p: &mut PlateConfig, line: usize, key: &str, field: &str, v: &str, base: &Path) -> Result<(), CliError> {
    match field {
        "kind" => {
            p.kind = PlateKind::parse(v).ok_or_else(|| {
                CliError::config(
                    Some(line),
                    format!("{key}: unknown kind '{v}' (lorentz_ohmic, lorentz_cutoff, undamped, table)"),
                )
            })?
        }
        "lambda0" => p.lambda0 = non_negative(line, key, v)?,
        "omega0" => p.omega0 = positive(line, key, v)?,
        "gamma" => p.gamma = non_negative(line, key, v)?,
        "cutoff" => p.cutoff = positive(line, key, v)?,
        "mass" => p.mass = positive(line, key, v)?,
        "T_dof" => p.t_dof = Some(non_negative(line, key, v)?),
        "table" => {
            let path = base.join(v);
            if !path.is_file() {
                return Err(CliError::config(Some(line), format!("{key}: table '{}' does not exist", path.display())));
            }
            p.table = Some(path);
        }
        _ => return Err(CliError::config(Some(line), format!("unknown key '{key}'"))),
    }
    Ok(())
}

impl RunConfig {
    /// Parses configuration text; relative table paths resolve against
    /// `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut sweep: BTreeMap<&str, (usize, String)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::config(Some(line), format!("expected 'section.key = value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(CliError::config(Some(line), format!("'{key}' already set on line {first}")));
            }
            let (section, field) = key
                .split_once('.')
                .ok_or_else(|| CliError::config(Some(line), format!("key '{key}' has no section")))?;
            match (section, field) {
                ("geometry", "l") => cfg.gap = positive(line, key, value)?,
                ("geometry", "T_L") => cfg.t_left = non_negative(line, key, value)?,
                ("geometry", "T_R") => cfg.t_right = non_negative(line, key, value)?,
                ("geometry", "beta_em") => cfg.beta_em = Some(positive(line, key, value)?),
                ("geometry", "z_field") => cfg.z_field = number(line, key, value)?,
                ("left", f) => plate_key(&mut cfg.left, line, key, f, value, base)?,
                ("right", f) => plate_key(&mut cfg.right, line, key, f, value, base)?,
                ("sweep", f @ ("variable" | "start" | "stop" | "points" | "spacing")) => {
                    sweep.insert(f, (line, value.to_string()));
                }
                ("options", "rel_tol") => cfg.options.rel_tol = positive(line, key, value)?,
                ("options", "subtract_infinite_separation") => {
                    cfg.options.subtract_infinite_separation = boolean(line, key, value)?
                }
                ("options", "omega_max") => cfg.options.omega_max = Some(positive(line, key, value)?),
                ("options", "sector_split") => cfg.options.sector_split = boolean(line, key, value)?,
                ("output", "path") => cfg.output = Some(PathBuf::from(value)),
                ("units", "si_scale_hz") => cfg.si_scale_hz = Some(positive(line, key, value)?),
                _ => return Err(CliError::config(Some(line), format!("unknown key '{key}'"))),
            }
        }
        if !sweep.is_empty() {
            cfg.sweep = Some(parse_sweep(&sweep)?);
        }
        if let Err(e) = cfg.options.validate() {
            return Err(CliError::config(seen.get("options.rel_tol").copied(), e.to_string()));
        }
        for (name, plate) in [("left", &cfg.left), ("right", &cfg.right)] {
            if plate.kind == PlateKind::Table && plate.table.is_none() {
                return Err(CliError::config(None, format!("{name}.table is required for kind = table")));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(None, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn points(&self) -> Vec<Point> {
        let base = Point { gap: self.gap, t_left: self.t_left, t_right: self.t_right };
        match &self.sweep {
            None => vec![base],
            Some(s) => s
                .values()
                .into_iter()
                .map(|v| match s.variable {
                    SweepVariable::Gap => Point { gap: v, ..base },
                    SweepVariable::TLeft => Point { t_left: v, ..base },
                    SweepVariable::TRight => Point { t_right: v, ..base },
                })
                .collect(),
        }
    }

    pub fn geometry(&self, p: &Point) -> Result<Geometry, CliError> {
        let g = Geometry::new(p.gap, self.left.medium(p.t_left)?, self.right.medium(p.t_right)?)
            .and_then(|g| g.with_z_field(self.z_field))
            .map_err(CliError::from_core_config)?;
        Ok(g)
    }

    /// Every setting in `section.key = value` form, sorted by key.
    pub fn resolved(&self) -> Vec<String> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        kv.insert("geometry.l".into(), self.gap.to_string());
        kv.insert("geometry.T_L".into(), self.t_left.to_string());
        kv.insert("geometry.T_R".into(), self.t_right.to_string());
        kv.insert("geometry.z_field".into(), self.z_field.to_string());
        if let Some(b) = self.beta_em {
            kv.insert("geometry.beta_em".into(), b.to_string());
        }
        for (name, p) in [("left", &self.left), ("right", &self.right)] {
            kv.insert(format!("{name}.kind"), p.kind.name().into());
            if p.kind == PlateKind::Table {
                if let Some(t) = &p.table {
                    kv.insert(format!("{name}.table"), t.display().to_string());
                }
                continue;
            }
            kv.insert(format!("{name}.lambda0"), p.lambda0.to_string());
            kv.insert(format!("{name}.omega0"), p.omega0.to_string());
            kv.insert(format!("{name}.mass"), p.mass.to_string());
            if p.kind != PlateKind::Undamped {
                kv.insert(format!("{name}.gamma"), p.gamma.to_string());
            }
            if p.kind == PlateKind::LorentzCutoff {
                kv.insert(format!("{name}.cutoff"), p.cutoff.to_string());
            }
            if let Some(t) = p.t_dof {
                kv.insert(format!("{name}.T_dof"), t.to_string());
            }
        }
        if let Some(s) = &self.sweep {
            let var = match s.variable {
                SweepVariable::Gap => "l",
                SweepVariable::TLeft => "T_L",
                SweepVariable::TRight => "T_R",
            };
            kv.insert("sweep.variable".into(), var.into());
            kv.insert("sweep.start".into(), s.start.to_string());
            kv.insert("sweep.stop".into(), s.stop.to_string());
            kv.insert("sweep.points".into(), s.points.to_string());
            let sp = if s.spacing == Spacing::Log { "log" } else { "linear" };
            kv.insert("sweep.spacing".into(), sp.into());
        }
        let o = &self.options;
        kv.insert("options.rel_tol".into(), o.rel_tol.to_string());
        kv.insert("options.subtract_infinite_separation".into(), o.subtract_infinite_separation.to_string());
        kv.insert("options.sector_split".into(), o.sector_split.to_string());
        if let Some(w) = o.omega_max {
            kv.insert("options.omega_max".into(), w.to_string());
        }
        if let Some(p) = &self.output {
            kv.insert("output.path".into(), p.display().to_string());
        }
        if let Some(f) = self.si_scale_hz {
            kv.insert("units.si_scale_hz".into(), f.to_string());
        }
        kv.into_iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }
}

fn parse_sweep(s: &BTreeMap<&str, (usize, String)>) -> Result<Sweep, CliError> {
    let get = |k: &str| s.get(k).ok_or_else(|| CliError::config(None, format!("sweep.{k} is required for a sweep")));
    let (line, v) = get("variable")?;
    let variable = match v.as_str() {
        "l" => SweepVariable::Gap,
        "T_L" => SweepVariable::TLeft,
        "T_R" => SweepVariable::TRight,
        _ => return Err(CliError::config(Some(*line), format!("sweep.variable: expected l, T_L or T_R, got '{v}'"))),
    };
    let (l1, v1) = get("start")?;
    let (l2, v2) = get("stop")?;
    let start = positive(*l1, "sweep.start", v1)?;
    let stop = positive(*l2, "sweep.stop", v2)?;
    let (lp, vp) = get("points")?;
    let points: usize = vp
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::config(Some(*lp), format!("sweep.points: expected an integer ≥ 1, got '{vp}'")))?;
    let spacing = match s.get("spacing") {
        None => Spacing::Linear,
        Some((_, v)) if v == "linear" => Spacing::Linear,
        Some((_, v)) if v == "log" => Spacing::Log,
        Some((l, v)) => return Err(CliError::config(Some(*l), format!("sweep.spacing: expected linear or log, got '{v}'"))),
    };
    Ok(Sweep { variable, start, stop, points, spacing })
}
