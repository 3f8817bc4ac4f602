//! Property suite behind `casimir verify`.

use crate::config::{Point, RunConfig};
use crate::error::CliError;
use casimir_core::em_green::{Geometry, Plate, Polarization};
use casimir_core::material::{fdr_epsilon_identity, Medium};
use casimir_core::pressure::transient::{dof_taxonomy, ic_taxonomy, TaxonomyOptions};
use casimir_core::pressure::{bath_integrand, bath_integrand_pre_fdr, equilibrium_matsubara, steady_pressure};
use casimir_core::spectral::{find_qbm_poles, imaginary_axis_grid, invert_laplace_qbm, modified_mode_check, scan_dmu_imaginary_axis};
use serde::Serialize;

/// One verified property with its measured margin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: measured <= threshold, measured, threshold, detail: detail.into() }
    }

    fn at_least(name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: measured > threshold, measured, threshold, detail: detail.into() }
    }

    fn skipped(name: impl Into<String>, why: &str) -> Self {
        Self { name: name.into(), passed: true, measured: 0.0, threshold: 0.0, detail: format!("not applicable: {why}") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

fn relative(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}

const DMU_Q: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
const MODE_SAMPLES: [(f64, f64); 3] = [(0.5, 1.2), (1.5, -0.7), (0.2, 2.5)];

fn plate_checks(plate: Plate, medium: &Medium, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let tag = format!("{plate:?}");
    let Some(mat) = medium.material() else {
        for name in ["causality", "talbot_initial_values", "fdr_identity"] {
            checks.push(Check::skipped(format!("{name}.{tag}"), "tabulated permittivity"));
        }
        return Ok(());
    };
    let poles = find_qbm_poles(mat).map_err(CliError::numerical("pole search"))?;
    let detail = if poles.marginal {
        "poles on the imaginary axis: undamped oscillator, no decay to a steady state".to_string()
    } else {
        format!("{} poles, all in the left half-plane", poles.roots.len())
    };
    checks.push(Check {
        name: format!("causality.{tag}"),
        passed: poles.causal && !poles.marginal,
        measured: poles.max_re(),
        threshold: 0.0,
        detail,
    });

    let h = 1e-3;
    let g = invert_laplace_qbm(mat, &[0.0, h, 2.0 * h, 3.0 * h, 4.0 * h]).map_err(CliError::numerical("Talbot inversion"))?;
    let d0 = (-25.0 * g[0] + 48.0 * g[1] - 36.0 * g[2] + 16.0 * g[3] - 3.0 * g[4]) / (12.0 * h);
    checks.push(Check::at_most(
        format!("talbot_initial_values.{tag}"),
        g[0].abs().max((d0 - 1.0).abs()),
        1e-6,
        format!("G(0) = {:e}, G'(0) = {d0}", g[0]),
    ));

    let mut worst = 0.0f64;
    for k in 1..=25 {
        let omega = 0.4 * k as f64;
        let (lhs, rhs) = fdr_epsilon_identity(mat, omega).map_err(CliError::numerical("FDR identity"))?;
        worst = worst.max(relative(lhs, rhs));
    }
    checks.push(Check::at_most(format!("fdr_identity.{tag}"), worst, 1e-12, "Im ε̄ against the dissipation kernel, ω ∈ (0, 10]"));
    Ok(())
}

fn is_oscillator(g: &Geometry) -> bool {
    g.left.material().is_some() && g.right.material().is_some()
}

/// Runs every property at the configuration's first point.
pub fn run_verify(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let point = cfg.points()[0];
    let geom = cfg.geometry(&point)?;
    let mut checks = Vec::new();
    plate_checks(Plate::L, &geom.left, &mut checks)?;
    plate_checks(Plate::R, &geom.right, &mut checks)?;

    let grid = imaginary_axis_grid(20.0, geom.gap, 4001);
    let mut floor = f64::INFINITY;
    for q in DMU_Q {
        for pol in Polarization::BOTH {
            let scan = scan_dmu_imaginary_axis(&geom, pol, q, &grid).map_err(CliError::numerical("D_μ scan"))?;
            floor = floor.min(scan.min_abs);
        }
    }
    checks.push(Check::at_least("dmu_imaginary_axis", floor, 1e-3, format!("{} nodes on ω ∈ [−20, 20], Q ∈ {DMU_Q:?}", grid.len())));

    if is_oscillator(&geom) {
        let (mut spread, mut removable) = (0.0f64, true);
        for (q, kz) in MODE_SAMPLES {
            let r = modified_mode_check(&geom, q, kz).map_err(CliError::numerical("modified modes"))?;
            removable &= r.removable;
            spread = spread.max(r.direction_spread);
        }
        let mut c = Check::at_most("modified_modes_removable", spread, 1e-6, format!("{} (Q, k_z) samples", MODE_SAMPLES.len()));
        c.passed &= removable;
        checks.push(c);

        let mut worst = 0.0f64;
        for (omega, q) in [(0.3, 0.1), (0.9, 0.5), (1.1, 2.0), (2.5, 1.0), (4.0, 6.0), (7.0, 3.0)] {
            let a = bath_integrand(&geom, omega, q).map_err(CliError::numerical("bath integrand"))?;
            let b = bath_integrand_pre_fdr(&geom, omega, q).map_err(CliError::numerical("bath integrand"))?;
            let d = (a - b).norm();
            worst = worst.max(if d == 0.0 { 0.0 } else { d / a.norm() });
        }
        checks.push(Check::at_most("fdr_integrand_paths", worst, 1e-10, "noise-kernel and Im ε̄ forms of the bath integrand"));
    } else {
        checks.push(Check::skipped("modified_modes_removable", "tabulated permittivity"));
        checks.push(Check::skipped("fdr_integrand_paths", "tabulated permittivity"));
    }

    let eq_point = Point { t_right: point.t_left, ..point };
    let eq_geom = cfg.geometry(&eq_point)?;
    let steady = steady_pressure(&eq_geom, &cfg.options).map_err(CliError::numerical("steady pressure"))?;
    let mats = equilibrium_matsubara(&eq_geom, point.t_left, &cfg.options).map_err(CliError::numerical("Matsubara sum"))?;
    checks.push(Check::at_most(
        "equal_temperature_reduction",
        relative(steady.value, mats),
        1e-3,
        format!("T = {}: steady {:e}, Matsubara {mats:e}", point.t_left, steady.value),
    ));

    let p = steady_pressure(&geom, &cfg.options).map_err(CliError::numerical("steady pressure"))?;
    let pm = steady_pressure(&geom.mirrored(), &cfg.options).map_err(CliError::numerical("steady pressure"))?;
    checks.push(Check::at_most("mirror_symmetry", relative(p.value, pm.value), 1e-10, format!("P = {:e}", p.value)));
    let tol = 1e-8 * p.value.abs();
    let reality = if p.imag == 0.0 { 0.0 } else { p.imag.abs() / p.value.abs().max(f64::MIN_POSITIVE) };
    let mut c = Check::at_most("reality", reality, 1e-8, "accumulated imaginary part relative to the pressure");
    c.passed = p.imag.abs() <= tol;
    checks.push(c);

    let coupled = geom.left.material().zip(geom.right.material()).map_or(false, |(a, b)| a.lambda0 > 0.0 && b.lambda0 > 0.0);
    if coupled {
        let o = TaxonomyOptions::default();
        let dof = dof_taxonomy(&geom, 0.8, &o).map_err(CliError::numerical("DOF taxonomy"))?;
        let ic = ic_taxonomy(&geom, [0.5, 0.3, 0.7], cfg.beta_em.unwrap_or(1.0), &o).map_err(CliError::numerical("IC taxonomy"))?;
        for (name, counts, ok, survivor, sec) in [
            ("pole_taxonomy.dof", dof.counts, dof.matches_expected(), dof.steady_survivor(), dof.second_order_sum),
            ("pole_taxonomy.ic", ic.counts, ic.matches_expected(), ic.steady_survivor(), ic.second_order_sum),
        ] {
            checks.push(Check {
                name: name.into(),
                passed: ok && !survivor,
                measured: if survivor { 1.0 } else { 0.0 },
                threshold: 0.0,
                detail: format!("pieces by class (none, first, second, higher) = {counts:?}; second-order sum {sec:?}"),
            });
        }
    } else {
        checks.push(Check::skipped("pole_taxonomy.dof", "needs coupled oscillator plates"));
        checks.push(Check::skipped("pole_taxonomy.ic", "needs coupled oscillator plates"));
    }
    Ok(VerifyReport { checks })
}
