//! The `pressure`, `epsilon`, `poles` and `compare-eq` commands.

use crate::config::{Point, RunConfig};
use crate::error::CliError;
use casimir_core::em_green::{Plate, Polarization};
use casimir_core::pressure::{equilibrium_matsubara, steady_pressure, PressureResult, Sector};
use casimir_core::spectral::{find_qbm_poles, PoleReport};
use serde::Serialize;
use std::io::Write;

const HBAR: f64 = 1.054_571_817e-34;
const C_LIGHT: f64 = 299_792_458.0;
const K_B: f64 = 1.380_649e-23;

/// `#`-prefixed provenance lines written ahead of every CSV.
pub fn header(out: &mut dyn Write, command: &str, cfg: &RunConfig) -> std::io::Result<()> {
    writeln!(out, "# casimir {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# command: {command}")?;
    for line in cfg.resolved() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Shortest representation that parses back to the same double.
pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn sector_name(s: Sector) -> &'static str {
    match s {
        Sector::Propagating => "prop",
        Sector::Evanescent => "evan",
    }
}

fn breakdown_columns() -> Vec<String> {
    let mut cols = Vec::with_capacity(8);
    for plate in Plate::BOTH {
        for pol in Polarization::BOTH {
            for sector in Sector::BOTH {
                cols.push(format!("P_{plate:?}_{pol:?}_{}", sector_name(sector)));
            }
        }
    }
    cols
}

/// SI units for a natural frequency unit `2π·f`.
struct SiScale {
    length: f64,
    pressure: f64,
    temperature: f64,
}

impl SiScale {
    fn new(f_hz: f64) -> Self {
        let w = 2.0 * std::f64::consts::PI * f_hz;
        Self { length: C_LIGHT / w, pressure: HBAR * w.powi(4) / C_LIGHT.powi(3), temperature: HBAR * w / K_B }
    }
}

pub struct PressureRow {
    pub point: Point,
    pub result: PressureResult,
}

pub fn compute_pressures(cfg: &RunConfig) -> Result<Vec<PressureRow>, CliError> {
    cfg.points()
        .into_iter()
        .map(|point| {
            let geom = cfg.geometry(&point)?;
            let ctx = format!("l = {}, T_L = {}, T_R = {}", point.gap, point.t_left, point.t_right);
            let result = steady_pressure(&geom, &cfg.options).map_err(CliError::numerical(ctx))?;
            Ok(PressureRow { point, result })
        })
        .collect()
}

pub fn write_pressure_csv(out: &mut dyn Write, cfg: &RunConfig, rows: &[PressureRow]) -> Result<(), CliError> {
    header(out, "pressure", cfg)?;
    let si = cfg.si_scale_hz.map(SiScale::new);
    let mut w = csv::Writer::from_writer(out);
    let mut cols: Vec<String> = ["l", "T_L", "T_R", "value", "err"].iter().map(|s| s.to_string()).collect();
    cols.extend(breakdown_columns());
    cols.push("baseline_subtracted".into());
    if si.is_some() {
        cols.extend(["l_m", "T_L_K", "T_R_K", "value_Pa", "err_Pa"].iter().map(|s| s.to_string()));
    }
    w.write_record(&cols)?;
    for row in rows {
        let (p, r) = (&row.point, &row.result);
        let mut rec = vec![fmt(p.gap), fmt(p.t_left), fmt(p.t_right), fmt(r.value), fmt(r.err)];
        rec.extend(r.breakdown.entries().iter().map(|e| fmt(e.3)));
        rec.push(r.baseline_subtracted.to_string());
        if let Some(s) = &si {
            rec.extend([
                fmt(p.gap * s.length),
                fmt(p.t_left * s.temperature),
                fmt(p.t_right * s.temperature),
                fmt(r.value * s.pressure),
                fmt(r.err * s.pressure),
            ]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pressure_summary(out: &mut dyn Write, rows: &[PressureRow]) -> std::io::Result<()> {
    writeln!(out, "{:>12} {:>10} {:>10} {:>16} {:>10}", "l", "T_L", "T_R", "P", "err")?;
    for row in rows {
        let (p, r) = (&row.point, &row.result);
        writeln!(out, "{:>12.5} {:>10.4} {:>10.4} {:>16.8e} {:>10.2e}", p.gap, p.t_left, p.t_right, r.value, r.err)?;
    }
    Ok(())
}

pub fn epsilon_csv(
    out: &mut dyn Write,
    cfg: &RunConfig,
    plate: Plate,
    omega_min: f64,
    omega_max: f64,
    points: usize,
) -> Result<(), CliError> {
    if !(omega_min >= 0.0 && omega_max > omega_min && points >= 2) {
        return Err(CliError::config(None, "need 0 ≤ omega-min < omega-max and at least 2 points"));
    }
    let (pc, t) = match plate {
        Plate::L => (&cfg.left, cfg.t_left),
        Plate::R => (&cfg.right, cfg.t_right),
    };
    let medium = pc.medium(t)?;
    header(out, "epsilon", cfg)?;
    writeln!(out, "# plate: {plate:?}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega", "re_eps", "im_eps", "re_eps_neg", "im_eps_neg"])?;
    for k in 0..points {
        let omega = omega_min + (omega_max - omega_min) * k as f64 / (points - 1) as f64;
        let e = medium.eps_fourier(omega).map_err(CliError::numerical(format!("ε at ω = {omega}")))?;
        let en = medium.eps_fourier(-omega).map_err(CliError::numerical(format!("ε at ω = {}", -omega)))?;
        w.write_record([fmt(omega), fmt(e.re), fmt(e.im), fmt(en.re), fmt(en.im)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct PlatePoles {
    pub plate: String,
    pub report: PoleReport,
}

pub fn poles(cfg: &RunConfig, plate: Plate) -> Result<PlatePoles, CliError> {
    let (pc, t) = match plate {
        Plate::L => (&cfg.left, cfg.t_left),
        Plate::R => (&cfg.right, cfg.t_right),
    };
    let medium = pc.medium(t)?;
    let mat = medium.material().ok_or_else(|| CliError::config(None, "poles need an oscillator plate"))?;
    let report = find_qbm_poles(mat).map_err(CliError::numerical("pole search"))?;
    Ok(PlatePoles { plate: format!("{plate:?}"), report })
}

pub struct Comparison {
    pub point: Point,
    pub steady: f64,
    pub matsubara: f64,
}

impl Comparison {
    pub fn relative_difference(&self) -> f64 {
        let d = (self.steady - self.matsubara).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.matsubara.abs()
        }
    }
}

pub fn compare_eq(cfg: &RunConfig) -> Result<Vec<Comparison>, CliError> {
    cfg.points()
        .into_iter()
        .map(|point| {
            if point.t_left != point.t_right {
                return Err(CliError::config(None, "compare-eq needs T_L = T_R at every point"));
            }
            let geom = cfg.geometry(&point)?;
            let ctx = format!("l = {}, T = {}", point.gap, point.t_left);
            let steady = steady_pressure(&geom, &cfg.options).map_err(CliError::numerical(ctx.clone()))?;
            let matsubara = equilibrium_matsubara(&geom, point.t_left, &cfg.options).map_err(CliError::numerical(ctx))?;
            Ok(Comparison { point, steady: steady.value, matsubara })
        })
        .collect()
}

pub fn write_compare_csv(out: &mut dyn Write, cfg: &RunConfig, rows: &[Comparison]) -> Result<(), CliError> {
    header(out, "compare-eq", cfg)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["l", "T", "steady", "matsubara", "rel_diff"])?;
    for c in rows {
        w.write_record([
            fmt(c.point.gap),
            fmt(c.point.t_left),
            fmt(c.steady),
            fmt(c.matsubara),
            fmt(c.relative_difference()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
