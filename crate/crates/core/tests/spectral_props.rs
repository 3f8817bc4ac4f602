mod common;

use casimir_core::em_green::{Geometry, Polarization, C};
use casimir_core::material::{BathModel, Material};
use casimir_core::spectral::*;
use common::*;
use std::time::Instant;

fn damped(gamma: f64, omega: f64, t: f64) -> f64 {
    let w1 = (omega * omega - 0.25 * gamma * gamma).sqrt();
    (-0.5 * gamma * t).exp() * (w1 * t).sin() / w1
}

#[test]
fn talbot_reproduces_undamped_sine() {
    let m = Material::new(1.0, 1.0, 1.0, BathModel::none(), 1.0, 1.0).unwrap();
    let g = invert_laplace_qbm(&m, &[std::f64::consts::FRAC_PI_2]).unwrap();
    assert!((g[0] - 1.0).abs() < 1e-10);
}

#[test]
fn talbot_reproduces_damped_oscillator() {
    let m = Material::lorentz_ohmic(1.0, 1.0, 0.2, 1.0).unwrap();
    let ts: Vec<f64> = (0..=60).map(|k| 0.5 * k as f64).collect();
    let t0 = Instant::now();
    let g = invert_laplace_qbm(&m, &ts).unwrap();
    eprintln!("61 points: {:?}", t0.elapsed());
    let err = ts.iter().zip(&g).map(|(t, v)| (v - damped(0.2, 1.0, *t)).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-6, "sup error {err:e}");
    assert_eq!(g[0], 0.0);
    let h = 1e-3;
    let s = invert_laplace_qbm(&m, &[0.0, h, 2.0 * h, 3.0 * h, 4.0 * h]).unwrap();
    let d0 = (-25.0 * s[0] + 48.0 * s[1] - 36.0 * s[2] + 16.0 * s[3] - 3.0 * s[4]) / (12.0 * h);
    assert!((d0 - 1.0).abs() <= 1e-6, "{d0}");
}

#[test]
fn talbot_cutoff_bath_decays() {
    let m = Material::new(1.0, 1.0, 1.0, BathModel::ohmic_lorentz_cutoff(0.2, 50.0), 1.0, 1.0).unwrap();
    let ts = [260.0, 300.0];
    let t0 = Instant::now();
    let g = invert_laplace_qbm(&m, &ts).unwrap();
    eprintln!("late times: {:?}", t0.elapsed());
    for v in g {
        assert!(v.abs() < 1e-8, "{v}");
    }
}

#[test]
fn unsorted_time_grid_is_rejected() {
    let m = Material::lorentz_ohmic(1.0, 1.0, 0.2, 1.0).unwrap();
    assert!(invert_laplace_qbm(&m, &[1.0, 0.5]).is_err());
}

#[test]
fn vacuum_scan_is_unity() {
    let v = lorentz(0.0, 1.0, 0.1);
    let g = Geometry::new(1.0, v.clone(), v).unwrap();
    let scan = scan_dmu_imaginary_axis(&g, Polarization::TM, 0.3, &imaginary_axis_grid(20.0, 1.0, 401)).unwrap();
    assert_eq!(scan.min_abs, 1.0);
}

#[test]
fn lossy_scan_stays_away_from_zero_and_floor_shrinks_with_loss() {
    let mut prev = f64::INFINITY;
    for gamma in [0.3, 0.1, 0.03, 0.01] {
        let m = lorentz(1.0, 1.0, gamma);
        let g = Geometry::new(1.0, m.clone(), m).unwrap();
        let grid = imaginary_axis_grid(20.0, 1.0, 4001);
        let mut floor = f64::INFINITY;
        for pol in Polarization::BOTH {
            floor = floor.min(scan_dmu_imaginary_axis(&g, pol, 0.3, &grid).unwrap().min_abs);
        }
        assert!(floor > 0.0);
        assert!(floor <= prev + 1e-12, "γ = {gamma}: {floor} > {prev}");
        prev = floor;
    }
}

#[test]
fn light_line_nodes_are_excluded_from_the_scan() {
    let m = lorentz(1.0, 1.0, 0.1);
    let g = Geometry::new(1.0, m.clone(), m).unwrap();
    let grid = imaginary_axis_grid(20.0, 1.0, 4001);
    for pol in Polarization::BOTH {
        let scan = scan_dmu_imaginary_axis(&g, pol, 1.0, &grid).unwrap();
        assert_eq!(scan.branch_points, 2);
        assert!(scan.min_abs > 1e-3, "{scan:?}");
    }
    // Approaching the light line, D_μ vanishes like q_z.
    let near: Vec<f64> = [1e-4, 1e-6].iter().map(|e| 1.0 + e).collect();
    let a = scan_dmu_imaginary_axis(&g, Polarization::TE, 1.0, &near[..1]).unwrap().min_abs;
    let b = scan_dmu_imaginary_axis(&g, Polarization::TE, 1.0, &near[1..]).unwrap().min_abs;
    assert!((a / b - 10.0).abs() < 0.1, "{a} {b}");
}

#[test]
fn branch_points() {
    let v = lorentz(0.0, 1.0, 0.1);
    let g = Geometry::new(1.0, v.clone(), v).unwrap();
    let inv = branch_inventory(&g, 2.0).unwrap();
    assert_eq!(inv.cuts[0].kind, CutKind::GapSqrt);
    assert_eq!(inv.cuts[0].endpoints, (C::new(0.0, -2.0), C::new(0.0, 2.0)));
    let inv0 = branch_inventory(&g, 0.0).unwrap();
    assert_eq!(inv0.cuts[0].endpoints.0, inv0.cuts[0].endpoints.1);

    let m = cutoff(1.5, 1.0, 0.2, 4.0);
    let g = Geometry::new(1.0, lorentz(1.0, 1.0, 0.1), m).unwrap();
    let inv = branch_inventory(&g, 0.8).unwrap();
    let plate: Vec<_> = inv.cuts.iter().filter(|c| c.kind == CutKind::PlateSqrt).collect();
    assert!(!plate.is_empty());
    for c in plate {
        for e in [c.endpoints.0, c.endpoints.1] {
            assert!(e.re <= 0.0);
            let eps = g.medium(c.plate.unwrap()).eps(e).unwrap();
            assert!((eps * e * e + 0.64).norm() < 1e-8 * (1.0 + (eps * e * e).norm()));
        }
    }
}

#[test]
fn modified_modes_free_case() {
    let v = lorentz(0.0, 1.0, 0.1);
    let g = Geometry::new(1.0, v.clone(), v).unwrap().with_z_field(0.1).unwrap();
    let r = modified_mode_check(&g, 0.5, 1.2).unwrap();
    assert!(r.removable, "{r:?}");
    assert!(r.num_zero <= 1e-8 && r.den_zero <= 1e-8);
    assert!(r.lhopital_limit.is_finite());
    // Lossless plates put the plate denominators on the axis.
    assert!(!r.plate_roots_decaying);
    assert_eq!(r.full_direction_spread, None);
}

#[test]
fn modified_modes_lossy_case() {
    let g = Geometry::new(1.0, lorentz(1.0, 1.0, 0.1), cutoff(0.7, 1.4, 0.3, 6.0)).unwrap();
    let r = modified_mode_check(&g, 0.5, 1.2).unwrap();
    assert!(r.removable, "{r:?}");
    assert!(r.plate_roots_decaying);
    assert!(r.full_direction_spread.unwrap() <= 1e-6);
    let r = modified_mode_check(&g, 0.5, -0.7).unwrap();
    assert!(r.removable, "{r:?}");
}
