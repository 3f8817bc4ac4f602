mod common;

use casimir_core::em_green::{fresnel, green_gap_from_plate, z_integrated_pair_blocks, Geometry, Plate, Tensor3, C};
use casimir_core::material::{EpsilonTable, Material, Medium};
use casimir_core::pressure::transient::{
    assemble_dof_integrand, assemble_ic_integrand, dof_pieces, dof_taxonomy, ic_pieces, ic_taxonomy, TaxonomyOptions,
};
use casimir_core::pressure::{
    bath_integrand, bath_integrand_pre_fdr, equilibrium_matsubara, regularize, steady_pressure, theta_contract,
    PressureOptions,
};
use casimir_core::quad::{integrate_semi_infinite, QuadOptions};
use common::{cutoff, lorentz};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn plates(l: f64, t: f64) -> Geometry {
    let m: Medium = Material::lorentz_ohmic(1.0, 1.0, 0.1, t).unwrap().into();
    Geometry::new(l, m.clone(), m).unwrap()
}

fn levi(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `Θ` applied by differencing the z′-integrated pair at displaced field
/// points; parallel coordinates enter through `e^{iQ(x₁ − x₂)}`.
fn theta_by_differences(geom: &Geometry, plate: Plate, s1: C, s2: C, q: f64, z: f64) -> C {
    let b1 = green_gap_from_plate(geom, plate, s1, q, [1.0, 0.0]).unwrap();
    let b2 = green_gap_from_plate(geom, plate, s2, q, [-1.0, 0.0]).unwrap();
    // Field points (x, z); y never enters.
    let field = |x1: f64, z1: f64, x2: f64, z2: f64| -> Tensor3 {
        let t = z_integrated_pair_blocks(&b1, &b2, z1, z2).unwrap();
        let ph = (C::new(0.0, q) * (x1 - x2)).exp();
        t.map(|row| row.map(|v| v * ph))
    };
    let mixed = |r: usize, l: usize, h: f64| -> Tensor3 {
        let shift = |dir: usize, d: f64| if dir == 0 { (d, 0.0) } else { (0.0, d) };
        let mut acc = [[C::new(0.0, 0.0); 3]; 3];
        for (a, b, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
            let (dx1, dz1) = shift(r, a * h);
            let (dx2, dz2) = shift(l, b * h);
            let f = field(dx1, z + dz1, dx2, z + dz2);
            for j in 0..3 {
                for k in 0..3 {
                    acc[j][k] += sign * f[j][k] / (4.0 * h * h);
                }
            }
        }
        acc
    };
    // Derivative index 0 → x, 2 → z, 1 → y (zero).
    let h = 1e-3;
    let deriv = |r: usize, l: usize| -> Tensor3 {
        let (rr, ll) = (if r == 0 { 0 } else { 1 }, if l == 0 { 0 } else { 1 });
        let d1 = mixed(rr, ll, h);
        let d2 = mixed(rr, ll, h / 2.0);
        let mut out = [[C::new(0.0, 0.0); 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                out[j][k] = (4.0 * d2[j][k] - d1[j][k]) / 3.0;
            }
        }
        out
    };
    let f0 = field(0.0, z, 0.0, z);
    let lam = [1.0, 1.0, -1.0];
    let mut total = C::new(0.0, 0.0);
    for i in 0..3 {
        total += lam[i] * s1 * s2 * f0[i][i];
    }
    for r in [0usize, 2] {
        for l in [0usize, 2] {
            let d = deriv(r, l);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let w = lam[i] * levi(i, r, j) * levi(i, l, k);
                        if w != 0.0 {
                            total += w * d[j][k];
                        }
                    }
                }
            }
        }
    }
    total
}

#[test]
fn theta_contraction_matches_finite_differences() {
    let geom = Geometry::new(1.2, lorentz(1.0, 1.0, 0.2), cutoff(0.7, 1.5, 0.3, 8.0)).unwrap();
    for (s1, s2, q, z) in [
        (C::new(0.0, -0.8), C::new(0.0, 0.8), 0.5, 0.1),
        (C::new(0.0, -1.7), C::new(0.0, 1.7), 2.5, -0.3),
        (C::new(0.4, 0.3), C::new(0.7, -0.2), 1.1, 0.25),
    ] {
        for plate in Plate::BOTH {
            let g = geom.clone().with_z_field(z).unwrap();
            let b1 = green_gap_from_plate(&g, plate, s1, q, [1.0, 0.0]).unwrap();
            let b2 = green_gap_from_plate(&g, plate, s2, q, [-1.0, 0.0]).unwrap();
            let got = theta_contract(&b1, &b2, s1, s2).unwrap();
            let want = theta_by_differences(&g, plate, s1, s2, q, z);
            assert!((got - want).norm() <= 1e-8 * want.norm(), "{plate:?} {got} vs {want}");
        }
    }
}

#[test]
fn theta_contraction_is_symmetric_under_exchange() {
    let geom = Geometry::new(0.8, lorentz(1.0, 1.0, 0.2), lorentz(0.6, 2.0, 0.1)).unwrap();
    let (s1, s2, q) = (C::new(0.3, -1.1), C::new(0.2, 0.6), 0.9);
    for plate in Plate::BOTH {
        let a1 = green_gap_from_plate(&geom, plate, s1, q, [1.0, 0.0]).unwrap();
        let a2 = green_gap_from_plate(&geom, plate, s2, q, [-1.0, 0.0]).unwrap();
        let b1 = green_gap_from_plate(&geom, plate, s2, q, [1.0, 0.0]).unwrap();
        let b2 = green_gap_from_plate(&geom, plate, s1, q, [-1.0, 0.0]).unwrap();
        let x = theta_contract(&a1, &a2, s1, s2).unwrap();
        let y = theta_contract(&b2, &b1, s1, s2).unwrap();
        let y2 = theta_contract(&b1, &b2, s2, s1).unwrap();
        assert!((x - y2).norm() <= 1e-12 * x.norm());
        assert!(theta_contract(&a1, &b1, s1, s2).is_err());
        let _ = y;
    }
}

#[test]
fn zero_coupling_gives_zero_integrand_and_pressure() {
    let geom = Geometry::new(1.0, lorentz(0.0, 1.0, 0.1), lorentz(1.0, 1.0, 0.1)).unwrap();
    let o = PressureOptions::default();
    let one = steady_pressure(&geom, &o).unwrap();
    assert!(one.value.abs() <= 1e-12 * one.baseline.total().abs());
    let both = Geometry::new(1.0, lorentz(0.0, 1.0, 0.1), lorentz(0.0, 2.0, 0.3)).unwrap();
    assert_eq!(bath_integrand(&both, 1.3, 0.7).unwrap(), C::new(0.0, 0.0));
    assert_eq!(equilibrium_matsubara(&geom, 1.0, &o).unwrap(), 0.0);
}

#[test]
fn zero_point_trace_matches_lifshitz_form() {
    // The zero-point part is −(1/4π²)∫dξ∫κdκ g; at equal zero temperature it
    // must equal −(1/2π²)∫dξ∫κ²dκ Σ rr e^{−2κl}/(1 − rr e^{−2κl}).
    let geom = Geometry::new(0.9, lorentz(1.0, 1.0, 0.1), cutoff(0.8, 1.4, 0.2, 6.0)).unwrap();
    let zero_t = |m: &Medium| m.with_beta(f64::INFINITY);
    let g0 = Geometry::new(0.9, zero_t(&geom.left), zero_t(&geom.right)).unwrap();
    let o = PressureOptions { rel_tol: 1e-8, ..Default::default() };
    let p = steady_pressure(&g0, &o).unwrap();
    let lif = integrate_semi_infinite(
        |xi: f64| {
            let r = integrate_semi_infinite(
                |kappa: f64| {
                    let s = C::new(xi, 0.0);
                    let q = (kappa * kappa - xi * xi).max(0.0).sqrt();
                    let f1 = fresnel(&g0.left, s, q)?;
                    let f2 = fresnel(&g0.right, s, q)?;
                    let e = (-2.0 * kappa * 0.9).exp();
                    let sum: f64 = [f1.r_te * f2.r_te, f1.r_tm * f2.r_tm].iter().map(|rr| (rr * e / (1.0 - rr * e)).re).sum();
                    Ok([kappa * kappa * sum])
                },
                xi,
                1.0,
                &[1.0],
                &QuadOptions { rel_tol: 1e-11, ..Default::default() },
            )?;
            Ok(r.value)
        },
        0.0,
        1.0,
        &[1.0],
        &QuadOptions { rel_tol: 1e-10, ..Default::default() },
    )
    .unwrap();
    let want = -lif.value[0] / (2.0 * PI * PI);
    assert!((p.value - want).abs() <= 1e-7 * want.abs(), "{} vs {want}", p.value);
}

#[test]
fn equal_temperatures_reproduce_matsubara() {
    for (l, t) in [(1.0, 1.0), (0.5, 0.1)] {
        let g = plates(l, t);
        let o = PressureOptions::default();
        let p = steady_pressure(&g, &o).unwrap();
        let m = equilibrium_matsubara(&g, t, &o).unwrap();
        assert!(((p.value - m) / m).abs() <= 1e-5, "l={l} T={t}: {} vs {m}", p.value);
        assert!(m < 0.0);
        assert!(p.reality_ok());
    }
}

#[test]
fn result_invariants_and_regularization() {
    let geom = Geometry::new(
        0.7,
        Material::lorentz_ohmic(1.0, 1.0, 0.1, 0.5).unwrap().into(),
        cutoff(0.8, 1.5, 0.3, 5.0),
    )
    .unwrap();
    let o = PressureOptions::default();
    let raw = steady_pressure(&geom, &PressureOptions { subtract_infinite_separation: false, ..o }).unwrap();
    let reg = steady_pressure(&geom, &o).unwrap();
    assert!(!raw.baseline_subtracted && reg.baseline_subtracted);
    let once = regularize(&raw);
    assert!((once.value - reg.value).abs() <= 1e-8 * reg.value.abs().max(1e-300));
    assert_eq!(regularize(&once), once);
    for r in [&raw, &reg] {
        assert!((r.breakdown.total() - r.value).abs() <= 1e-12 * r.value.abs());
        assert!(r.reality_ok());
    }
    let mirrored = steady_pressure(&geom.mirrored(), &o).unwrap();
    assert!((mirrored.value - reg.value).abs() <= 1e-10 * reg.value.abs());
    let shifted = steady_pressure(&geom.clone().with_z_field(-0.2).unwrap(), &o).unwrap();
    assert!((shifted.value - reg.value).abs() <= 1e-6 * reg.value.abs());
    let unsplit = steady_pressure(&geom, &PressureOptions { sector_split: false, ..o }).unwrap();
    assert!((unsplit.value - reg.value).abs() <= 1e-5 * reg.value.abs());
}

#[test]
fn ideal_mirror_limit_of_lifshitz_sum() {
    let table = Arc::new(EpsilonTable::constant(1e6).unwrap());
    let m = Medium::Table { table, beta: f64::INFINITY };
    let g = Geometry::new(1.0, m.clone(), m).unwrap();
    let p = equilibrium_matsubara(&g, 0.0, &PressureOptions::default()).unwrap();
    let ideal = -PI * PI / 240.0;
    assert!(((p - ideal) / ideal).abs() < 0.02, "{p} vs {ideal}");
}

#[test]
fn transient_pieces_sum_to_assembled_integrands() {
    let geom = Geometry::new(1.0, lorentz(1.0, 1.0, 0.1), cutoff(0.8, 1.5, 0.2, 6.0)).unwrap().with_z_field(0.15).unwrap();
    let (s1, s2) = (C::new(0.3, 0.9), C::new(0.5, -0.4));
    let sum: C = dof_pieces(&geom, 0.8, s1, s2).unwrap().iter().map(|p| p.1).sum();
    let full = assemble_dof_integrand(&geom, 0.8, s1, s2).unwrap();
    assert!((sum - full).norm() <= 1e-12 * full.norm());
    let k = [0.4, -0.3, 0.9];
    let sum: C = ic_pieces(&geom, k, s1, s2, 2.0).unwrap().iter().map(|p| p.1).sum();
    let full = assemble_ic_integrand(&geom, k, s1, s2, 2.0).unwrap();
    assert!((sum - full).norm() <= 1e-12 * full.norm());
}

#[test]
fn transient_integrand_limits() {
    let geom = Geometry::new(1.0, lorentz(0.0, 1.0, 0.1), lorentz(0.0, 1.0, 0.1)).unwrap();
    assert_eq!(assemble_dof_integrand(&geom, 0.8, C::new(0.3, 0.9), C::new(0.5, -0.4)).unwrap(), C::new(0.0, 0.0));
    let geom = plates(1.0, 1.0);
    let k = [0.4, -0.3, 0.9];
    let w = (0.16f64 + 0.09 + 0.81).sqrt();
    let (s1, s2) = (C::new(0.3, 0.9), C::new(0.5, -0.4));
    let cold = assemble_ic_integrand(&geom, k, s1, s2, f64::INFINITY).unwrap();
    let cool = assemble_ic_integrand(&geom, k, s1, s2, 1e3).unwrap();
    let hot = assemble_ic_integrand(&geom, k, s1, s2, 1e-4).unwrap();
    assert!((cool - cold).norm() <= 1e-14 * cold.norm());
    let ratio = hot / cold;
    assert!((ratio.re - 2.0 / (1e-4 * w)).abs() <= 1e-6 * ratio.re && ratio.im.abs() <= 1e-9 * ratio.re);
}

#[test]
fn origin_taxonomy_of_transient_integrands() {
    let geom = Geometry::new(1.0, lorentz(1.0, 1.0, 0.1), cutoff(0.8, 1.5, 0.2, 6.0)).unwrap().with_z_field(0.1).unwrap();
    let o = TaxonomyOptions::default();
    let dof = dof_taxonomy(&geom, 0.8, &o).unwrap();
    assert!(dof.matches_expected(), "{:?} {:?} {:?}", dof.counts, dof.second_order_sum, dof.total);
    assert!(!dof.steady_survivor());
    let ic = ic_taxonomy(&geom, [0.5, 0.3, 0.7], 1.0, &o).unwrap();
    assert!(ic.matches_expected(), "{:?} {:?} {:?}", ic.counts, ic.second_order_sum, ic.total);
    assert!(!ic.steady_survivor());
}

fn medium_strategy() -> impl Strategy<Value = Medium> {
    (0.2..1.5f64, 0.5..2.0f64, 0.05..0.5f64, 0.2..3.0f64)
        .prop_map(|(lam, w, g, t)| Material::lorentz_ohmic(lam, w, g, t).unwrap().into())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bath_integrand_fdr_paths_agree(a in medium_strategy(), b in medium_strategy(), l in 0.3..3.0f64,
                                      w in 0.01..6.0f64, q in 0.0..8.0f64) {
        let g = Geometry::new(l, a, b).unwrap();
        let post = bath_integrand(&g, w, q).unwrap();
        let pre = bath_integrand_pre_fdr(&g, w, q).unwrap();
        prop_assert!((post - pre).norm() <= 1e-10 * post.norm().max(1e-300));
        prop_assert!(post.im.abs() <= 1e-12 * post.re.abs().max(1e-300));
    }

    #[test]
    fn bath_integrand_is_mirror_symmetric(a in medium_strategy(), b in medium_strategy(), l in 0.3..3.0f64,
                                          w in 0.01..6.0f64, q in 0.0..8.0f64) {
        let g = Geometry::new(l, a, b).unwrap();
        let x = bath_integrand(&g, w, q).unwrap();
        let y = bath_integrand(&g.mirrored(), w, q).unwrap();
        prop_assert!((x - y).norm() <= 1e-10 * x.norm().max(1e-300));
    }

    #[test]
    fn matsubara_pressure_is_attractive_for_identical_plates(m in medium_strategy(), l in 0.3..3.0f64, t in 0.05..2.0f64) {
        let g = Geometry::new(l, m.clone(), m).unwrap();
        let p = equilibrium_matsubara(&g, t, &PressureOptions { rel_tol: 1e-4, ..Default::default() }).unwrap();
        prop_assert!(p < 0.0);
    }
}
