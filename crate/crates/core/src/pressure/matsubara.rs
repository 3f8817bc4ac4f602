//! Equilibrium Lifshitz pressure as a Matsubara sum.

use super::PressureOptions;
use crate::em_green::{fresnel, Geometry, C};
use crate::error::{Error, Result};
use crate::material::Medium;
use crate::quad::{integrate_semi_infinite, QuadOptions};
use std::f64::consts::PI;

/// `∫₀^∞ Q dQ κ Σ_μ r₁r₂e^{−2κl}/(1 − r₁r₂e^{−2κl})` at imaginary frequency ξ.
fn xi_term(left: &Medium, right: &Medium, gap: f64, xi: f64, rel_tol: f64) -> Result<f64> {
    let s = C::new(xi, 0.0);
    let static_limit = xi == 0.0;
    let (e1, e2) = (left.eps(s)?, right.eps(s)?);
    let opts = QuadOptions { rel_tol, abs_tol: 0.0, max_subdivisions: 2000 };
    let r = integrate_semi_infinite(
        |kappa: f64| {
            let q = (kappa * kappa - xi * xi).max(0.0).sqrt();
            let (r1, r2) = if static_limit {
                // Only TM reflects at zero frequency.
                ([0.0, ((e1 - 1.0) / (e1 + 1.0)).re], [0.0, ((e2 - 1.0) / (e2 + 1.0)).re])
            } else {
                let f1 = fresnel(left, s, q)?;
                let f2 = fresnel(right, s, q)?;
                ([f1.r_te.re, f1.r_tm.re], [f2.r_te.re, f2.r_tm.re])
            };
            let e = (-2.0 * kappa * gap).exp();
            let mut acc = 0.0;
            for mu in 0..2 {
                let x = r1[mu] * r2[mu] * e;
                acc += x / (1.0 - x);
            }
            // Q dQ = κ dκ.
            Ok([kappa * kappa * acc])
        },
        xi,
        1.0 / gap,
        &[1.0],
        &opts,
    )?;
    Ok(r.value[0])
}

/// Equilibrium pressure at temperature `t`; `t = 0` uses the continuous
/// frequency integral.
pub fn equilibrium_matsubara(geom: &Geometry, t: f64, opts: &PressureOptions) -> Result<f64> {
    opts.validate()?;
    geom.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("temperature must be finite and ≥ 0, got {t}")));
    }
    if geom.left.is_vacuum() || geom.right.is_vacuum() {
        return Ok(0.0);
    }
    let tol = 0.1 * opts.rel_tol;
    if t == 0.0 {
        let r = integrate_semi_infinite(
            |xi: f64| Ok([xi_term(&geom.left, &geom.right, geom.gap, xi, tol)?]),
            0.0,
            1.0 / geom.gap,
            &[1.0],
            &QuadOptions { rel_tol: 0.5 * opts.rel_tol, abs_tol: 0.0, max_subdivisions: 2000 },
        )?;
        return Ok(-r.value[0] / (2.0 * PI * PI));
    }
    let mut sum = 0.5 * xi_term(&geom.left, &geom.right, geom.gap, 0.0, tol)?;
    let mut j = 1usize;
    loop {
        let xi = 2.0 * PI * t * j as f64;
        let term = xi_term(&geom.left, &geom.right, geom.gap, xi, tol)?;
        sum += term;
        if term.abs() <= 0.01 * opts.rel_tol * sum.abs() || term == 0.0 {
            break;
        }
        j += 1;
        if j > 1_000_000 {
            return Err(Error::Quadrature("Matsubara sum did not converge".into()));
        }
    }
    Ok(-t / PI * sum)
}
