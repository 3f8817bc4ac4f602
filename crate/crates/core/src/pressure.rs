//! Casimir pressure on the plates in the long-time steady state.
//!
//! Only the bath-driven part of the field correlator survives at long times.
//! Its pressure is
//!
//! ```text
//! P = (1/4π²) ∫₀^∞ dω ∫₀^∞ Q dQ Σ_n ω² coth(β_n ω/2) Im ε̄_n(ω) K_n(ω, Q)
//! ```
//!
//! where `K_n` is the Θ-contraction of the plate-`n` Green blocks at
//! `(s₁, s₂) = (−iω, +iω)` integrated over the source plate. Writing
//! `coth = 1 + 2n(ω)`, the zero-point part is rotated onto the real Laplace
//! axis, and the thermal part is integrated on the real-frequency axis with
//! the `l → ∞` radiation baseline removed.

mod matsubara;
pub mod transient;

pub use matsubara::equilibrium_matsubara;

use crate::em_green::{
    check_pairing, dot, green_gap_bulk_scattered_with, green_gap_from_plate_with, lambda_dot, pair_integral_at,
    Branch, Geometry, GreenBlock, GreenTerm, Interfaces, Plate, Polarization, C,
};
use crate::error::{Error, Result};
use crate::material::{bose, coth_half, noise_fourier, qbm_green, Medium};
use crate::quad::{integrate, integrate_semi_infinite, QuadOptions};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const XHAT: [f64; 2] = [1.0, 0.0];
const MXHAT: [f64; 2] = [-1.0, 0.0];
/// `1/(4π²)`.
const PREF: f64 = 1.0 / (4.0 * PI * PI);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureOptions {
    pub rel_tol: f64,
    pub subtract_infinite_separation: bool,
    /// Upper frequency of the thermal integral; chosen from the
    /// temperatures when absent and then extended until the tail is small.
    pub omega_max: Option<f64>,
    pub sector_split: bool,
}

impl Default for PressureOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-6, subtract_infinite_separation: true, omega_max: None, sector_split: true }
    }
}

impl PressureOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::InvalidParameter(format!("rel_tol must lie in (0, 1e-2], got {}", self.rel_tol)));
        }
        if let Some(w) = self.omega_max {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("omega_max must be > 0, got {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    Propagating,
    Evanescent,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::Propagating, Sector::Evanescent];

    fn index(self) -> usize {
        match self {
            Sector::Propagating => 0,
            Sector::Evanescent => 1,
        }
    }
}

/// Pressure split by source plate, polarization and gap sector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Breakdown {
    values: [[[f64; 2]; 2]; 2],
}

impl Breakdown {
    pub fn get(&self, plate: Plate, pol: Polarization, sector: Sector) -> f64 {
        self.values[plate.index()][pol.index()][sector.index()]
    }

    pub fn get_mut(&mut self, plate: Plate, pol: Polarization, sector: Sector) -> &mut f64 {
        &mut self.values[plate.index()][pol.index()][sector.index()]
    }

    /// Entries in the fixed order L/R × TE/TM × propagating/evanescent.
    pub fn entries(&self) -> Vec<(Plate, Polarization, Sector, f64)> {
        let mut out = Vec::with_capacity(8);
        for plate in Plate::BOTH {
            for pol in Polarization::BOTH {
                for sector in Sector::BOTH {
                    out.push((plate, pol, sector, self.get(plate, pol, sector)));
                }
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.entries().iter().map(|e| e.3).sum()
    }

    fn sub(&self, other: &Breakdown) -> Breakdown {
        let mut out = *self;
        for plate in Plate::BOTH {
            for pol in Polarization::BOTH {
                for sector in Sector::BOTH {
                    *out.get_mut(plate, pol, sector) -= other.get(plate, pol, sector);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureResult {
    pub value: f64,
    pub err: f64,
    pub breakdown: Breakdown,
    pub baseline_subtracted: bool,
    /// The `l → ∞` limit, kept so that subtraction can be applied later.
    pub baseline: Breakdown,
    /// Accumulated imaginary part of the integrand.
    pub imag: f64,
}

impl PressureResult {
    pub fn reality_ok(&self) -> bool {
        self.imag.abs() <= 1e-8 * self.value.abs().max(f64::MIN_POSITIVE)
    }
}

/// `Σ_i Λ_i`-weighted electric plus magnetic product of two terms.
fn term_theta(t1: &GreenTerm, t2: &GreenTerm, s1: C, s2: C) -> C {
    t1.extra * t2.extra * dot(&t1.source, &t2.source) * (s1 * s2 * lambda_dot(&t1.coeff, &t2.coeff) + lambda_dot(&t1.curl, &t2.curl))
}

/// Θ-contraction of two blocks at coincident field points, split by
/// polarization and integrated over the common source region.
pub fn theta_pair(b1: &GreenBlock, b2: &GreenBlock, s1: C, s2: C) -> Result<[C; 2]> {
    check_pairing(b1, b2)?;
    let z = b1.z_field;
    let mut out = [C::new(0.0, 0.0); 2];
    for t1 in &b1.terms {
        for t2 in &b2.terms {
            if t1.polarization != t2.polarization {
                continue;
            }
            let w = term_theta(t1, t2, s1, s2);
            if w == C::new(0.0, 0.0) {
                continue;
            }
            out[t1.polarization.index()] += w * pair_integral_at(t1, t2, z, z, b1.half)?;
        }
    }
    Ok(out)
}

/// `Θ^{sm}(s₁, s₂)` applied to `Σ_b ∫dz′ 𝒢^{sb}_1 𝒢^{mb}_2` at coincidence.
pub fn theta_contract(b1: &GreenBlock, b2: &GreenBlock, s1: C, s2: C) -> Result<C> {
    let [a, b] = theta_pair(b1, b2, s1, s2)?;
    Ok(a + b)
}

/// Θ applied to a single Green block with both points at the field point;
/// `∂` on the second point acts on the source factor. Step (bulk) terms are
/// excluded.
pub fn theta_single(block: &GreenBlock, s1: C, s2: C) -> [C; 2] {
    let z = block.z_field;
    let mut out = [C::new(0.0, 0.0); 2];
    for t in &block.terms {
        if t.step != crate::em_green::Step::None {
            continue;
        }
        let w = t.weight(z, z);
        out[t.polarization.index()] +=
            w * (s1 * s2 * lambda_dot(&t.coeff, &t.source) + lambda_dot(&t.curl, &t.source_curl));
    }
    out
}

/// Permittivities and occupations of both plates at one real frequency.
#[derive(Debug, Clone, Copy)]
struct FreqData {
    omega: f64,
    eps: [C; 2],
    bose: [f64; 2],
}

impl FreqData {
    fn new(geom: &Geometry, omega: f64) -> Result<Self> {
        let eps = [geom.left.eps_fourier(omega)?, geom.right.eps_fourier(omega)?];
        let bose = [bose(geom.left.beta(), omega), bose(geom.right.beta(), omega)];
        Ok(Self { omega, eps, bose })
    }
}

/// `K_n` by plate and polarization, zero for lossless plates; with `average` the multiple-reflection
/// denominators are replaced by their phase average.
fn plate_kernels(fd: &FreqData, q: f64, gap: f64, z: f64, average: bool) -> Result<[[C; 2]; 2]> {
    let s1 = C::new(0.0, -fd.omega);
    let s2 = C::new(0.0, fd.omega);
    let mut i1 = Interfaces::from_eps(fd.eps, s1, q, gap, Branch::Retarded)?;
    let mut i2 = Interfaces::from_eps([fd.eps[0].conj(), fd.eps[1].conj()], s2, q, gap, Branch::Retarded)?;
    let mut avg = [1.0; 2];
    if average {
        for pol in Polarization::BOTH {
            let p = pol.index();
            let rr = (i1.fresnel[0].r(pol) * i1.fresnel[1].r(pol)).norm_sqr();
            avg[p] = 1.0 / (1.0 - rr);
        }
        i1.d = [C::new(1.0, 0.0); 2];
        i2.d = [C::new(1.0, 0.0); 2];
    }
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for plate in Plate::BOTH {
        // A lossless plate emits nothing and its source integral diverges.
        if fd.eps[plate.index()].im == 0.0 {
            continue;
        }
        let b1 = green_gap_from_plate_with(&i1, plate, XHAT)?.at(z);
        let b2 = green_gap_from_plate_with(&i2, plate, MXHAT)?.at(z);
        let k = theta_pair(&b1, &b2, s1, s2)?;
        out[plate.index()] = [k[0] * avg[0], k[1] * avg[1]];
    }
    Ok(out)
}

fn small_omega(omega: f64) -> f64 {
    if omega == 0.0 {
        1e-7
    } else {
        omega
    }
}

/// The `(ω, Q)` integrand of the bath pressure, `P = ∫dω ∫Q dQ (·)`, in the
/// `Im ε̄·coth` form. At `ω = 0` the value at a tiny frequency is returned.
pub fn bath_integrand(geom: &Geometry, omega: f64, q: f64) -> Result<C> {
    let omega = small_omega(omega.abs());
    let fd = FreqData::new(geom, omega)?;
    let k = plate_kernels(&fd, q, geom.gap, geom.z_field, false)?;
    let mut acc = C::new(0.0, 0.0);
    for plate in Plate::BOTH {
        let n = plate.index();
        let medium = geom.medium(plate);
        let w = omega * omega * coth_half(medium.beta(), omega) * fd.eps[n].im;
        acc += w * (k[n][0] + k[n][1]);
    }
    Ok(PREF * acc)
}

/// The same integrand built from the bath noise kernel `N̄` and the
/// oscillator propagators, before the fluctuation–dissipation relation is
/// used.
pub fn bath_integrand_pre_fdr(geom: &Geometry, omega: f64, q: f64) -> Result<C> {
    let omega = small_omega(omega.abs());
    let fd = FreqData::new(geom, omega)?;
    let k = plate_kernels(&fd, q, geom.gap, geom.z_field, false)?;
    let mut acc = C::new(0.0, 0.0);
    for plate in Plate::BOTH {
        let n = plate.index();
        let mat = match geom.medium(plate) {
            Medium::Oscillator(m) => m,
            Medium::Table { .. } => {
                return Err(Error::Domain("the noise-kernel form needs oscillator plates".into()));
            }
        };
        let gg = qbm_green(mat, C::new(0.0, -omega))? * qbm_green(mat, C::new(0.0, omega))?;
        let w = omega * omega * 2.0 * mat.lambda0 * mat.lambda0 * noise_fourier(mat, omega) * gg;
        acc += w * (k[n][0] + k[n][1]);
    }
    Ok(PREF * acc)
}

/// `g(ξ, Q)` by polarization: Θ of the reflected gap Green function at
/// `(s₁, s₂) = (ξ, −ξ)`.
fn reflected_trace(eps: [C; 2], xi: f64, q: f64, gap: f64, z: f64) -> Result<[f64; 2]> {
    let s = C::new(xi, 0.0);
    let ifc = Interfaces::from_eps(eps, s, q, gap, Branch::Retarded)?;
    let b = green_gap_bulk_scattered_with(&ifc, XHAT, false).at(z);
    let g = theta_single(&b, s, -s);
    Ok([g[0].re, g[1].re])
}

/// Zero-point part `−(1/4π²)∫dξ ∫κ dκ g(ξ, Q)` by polarization.
fn zero_point(geom: &Geometry, rel_tol: f64) -> Result<([f64; 2], f64)> {
    if geom.left.is_vacuum() || geom.right.is_vacuum() {
        return Ok(([0.0; 2], 0.0));
    }
    let c = 1.0 / geom.gap;
    let inner = |xi: f64, opts: &QuadOptions| -> Result<[f64; 2]> {
        let s = C::new(xi, 0.0);
        let eps = [geom.left.eps(s)?, geom.right.eps(s)?];
        let r = integrate_semi_infinite(
            |kappa: f64| {
                let q = (kappa * kappa - xi * xi).max(0.0).sqrt();
                let g = reflected_trace(eps, xi, q, geom.gap, geom.z_field)?;
                Ok([-PREF * kappa * g[0], -PREF * kappa * g[1]])
            },
            xi,
            c,
            &[1.0, 1.0],
            opts,
        )?;
        Ok(r.value)
    };
    // Magnitude near ξ = 0 sets the absolute floor for the exponentially
    // small large-ξ region.
    let probe = inner(0.1 * c, &QuadOptions { rel_tol: 1e-4, abs_tol: 0.0, max_subdivisions: 2000 })?;
    let size = (probe[0] + probe[1]).abs().max(f64::MIN_POSITIVE);
    let inner_opts = QuadOptions { rel_tol: 0.1 * rel_tol, abs_tol: 1e-3 * rel_tol * size, max_subdivisions: 2000 };
    let outer_opts = QuadOptions { rel_tol: 0.5 * rel_tol, abs_tol: 0.05 * rel_tol * size * c, max_subdivisions: 2000 };
    let outer = |xi: f64| inner(xi, &inner_opts);
    let r = integrate_semi_infinite(outer, 0.0, c, &[1.0, 1.0], &outer_opts)?;
    Ok((r.value, r.err))
}

/// Layout of the thermal integrand vector: raw `[plate][pol]`, baseline
/// `[plate][pol]`, imaginary part.
const TH_N: usize = 9;

fn thermal_point(fd: &FreqData, q: f64, geom: &Geometry, propagating: bool) -> Result<[f64; TH_N]> {
    let mut out = [0.0; TH_N];
    let w2 = fd.omega * fd.omega;
    let weights = [2.0 * fd.bose[0] * fd.eps[0].im * w2 * PREF, 2.0 * fd.bose[1] * fd.eps[1].im * w2 * PREF];
    if weights.iter().all(|w| *w == 0.0) {
        return Ok(out);
    }
    // At Q = ω the multiple-reflection denominator vanishes; the limit is
    // finite and is taken from the adjacent side.
    let q = if (q - fd.omega).abs() <= 1e-12 * fd.omega {
        fd.omega * if propagating { 1.0 - 1e-12 } else { 1.0 + 1e-12 }
    } else {
        q
    };
    let k = plate_kernels(fd, q, geom.gap, geom.z_field, false)?;
    let mut im = 0.0;
    for n in 0..2 {
        for p in 0..2 {
            let v = weights[n] * k[n][p];
            out[2 * n + p] = v.re;
            im += v.im;
        }
    }
    out[8] = im;
    if propagating {
        let ka = plate_kernels(fd, q, geom.gap, geom.z_field, true)?;
        for n in 0..2 {
            for p in 0..2 {
                out[4 + 2 * n + p] = (weights[n] * ka[n][p]).re;
            }
        }
    }
    Ok(out)
}

/// Error control acts on the regularized combination so that the baseline
/// is resolved even when it is only reported.
const FUNCTIONAL: [f64; TH_N] = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0, 0.0];

/// `∫Q dQ` of the thermal integrand at fixed ω, both sectors.
fn thermal_inner(geom: &Geometry, omega: f64, opts: &PressureOptions, abs_tol: f64) -> Result<[f64; 2 * TH_N]> {
    let fd = FreqData::new(geom, omega)?;
    let mut out = [0.0; 2 * TH_N];
    if fd.bose.iter().zip(&fd.eps).all(|(b, e)| *b == 0.0 || e.im == 0.0) {
        return Ok(out);
    }
    let qo = QuadOptions { rel_tol: 0.1 * opts.rel_tol, abs_tol, max_subdivisions: 2000 };
    let wts = FUNCTIONAL;
    if opts.sector_split {
        // Q dQ = k_z dk_z with Q² = ω² − k_z².
        let prop = integrate(
            |kz: f64| {
                let q = (omega * omega - kz * kz).max(0.0).sqrt();
                let mut v = thermal_point(&fd, q, geom, true)?;
                v.iter_mut().for_each(|x| *x *= kz);
                Ok(v)
            },
            0.0,
            omega,
            &wts,
            &qo,
        )?;
        // Q dQ = κ dκ with Q² = ω² + κ².
        let evan = integrate_semi_infinite(
            |kappa: f64| {
                let q = (omega * omega + kappa * kappa).sqrt();
                let mut v = thermal_point(&fd, q, geom, false)?;
                v.iter_mut().for_each(|x| *x *= kappa);
                Ok(v)
            },
            0.0,
            1.0 / geom.gap,
            &wts,
            &qo,
        )?;
        out[..TH_N].copy_from_slice(&prop.value);
        out[TH_N..].copy_from_slice(&evan.value);
    } else {
        let mut w2 = [0.0; 2 * TH_N];
        w2[..TH_N].copy_from_slice(&wts);
        w2[TH_N..].copy_from_slice(&wts);
        let r = integrate_semi_infinite(
            |q: f64| {
                let propagating = q <= omega;
                let v = thermal_point(&fd, q, geom, propagating)?;
                let mut o = [0.0; 2 * TH_N];
                let off = if propagating { 0 } else { TH_N };
                for i in 0..TH_N {
                    o[off + i] = q * v[i];
                }
                Ok(o)
            },
            0.0,
            omega.max(1.0 / geom.gap),
            &w2,
            &qo,
        )?;
        out = r.value;
    }
    Ok(out)
}

struct Thermal {
    values: [f64; 2 * TH_N],
    err: f64,
}

fn thermal(geom: &Geometry, opts: &PressureOptions, scale: f64) -> Result<Thermal> {
    let beta_min = geom.left.beta().min(geom.right.beta());
    if beta_min.is_infinite() {
        return Ok(Thermal { values: [0.0; 2 * TH_N], err: 0.0 });
    }
    let mut w2 = [0.0; 2 * TH_N];
    w2[..TH_N].copy_from_slice(&FUNCTIONAL);
    w2[TH_N..].copy_from_slice(&FUNCTIONAL);
    let mut omega_max = opts.omega_max.unwrap_or(45.0 / beta_min);
    let abs_outer = 0.05 * opts.rel_tol * scale;
    let abs_inner = 0.05 * opts.rel_tol * scale / omega_max;
    let outer_opts = QuadOptions { rel_tol: 0.5 * opts.rel_tol, abs_tol: abs_outer, max_subdivisions: 2000 };
    let f = |w: f64| thermal_inner(geom, w, opts, abs_inner);
    let main = integrate(f, 0.0, omega_max, &w2, &outer_opts)?;
    let mut values = main.value;
    let mut err = main.err;
    let functional_of = |v: &[f64; 2 * TH_N]| v.iter().zip(&w2).map(|(a, b)| a * b).sum::<f64>();
    // Doubling check on the truncated tail.
    for _ in 0..6 {
        let tail = integrate(f, omega_max, 2.0 * omega_max, &w2, &outer_opts)?;
        for (v, t) in values.iter_mut().zip(tail.value) {
            *v += t;
        }
        err += tail.err;
        omega_max *= 2.0;
        let total = (functional_of(&values).abs()).max(scale);
        if functional_of(&tail.value).abs() <= 0.1 * opts.rel_tol * total {
            return Ok(Thermal { values, err });
        }
    }
    Err(Error::Quadrature(format!("thermal tail still significant at ω = {omega_max}")))
}

/// Steady-state pressure on the plates (attraction negative).
pub fn steady_pressure(geom: &Geometry, opts: &PressureOptions) -> Result<PressureResult> {
    opts.validate()?;
    geom.validate()?;
    let (zp, zp_err) = zero_point(geom, opts.rel_tol)?;
    // The blackbody pressure `π²T⁴/90` floors the scale when the zero-point
    // part vanishes.
    let t_max = 1.0 / geom.left.beta().min(geom.right.beta());
    let scale = (zp[0] + zp[1]).abs().max(1e-3 * PI * PI * t_max.powi(4) / 90.0).max(f64::MIN_POSITIVE);
    let th = thermal(geom, opts, scale)?;
    let mut raw = Breakdown::default();
    let mut base = Breakdown::default();
    for plate in Plate::BOTH {
        for pol in Polarization::BOTH {
            let (n, p) = (plate.index(), pol.index());
            let i = 2 * n + p;
            *raw.get_mut(plate, pol, Sector::Propagating) = th.values[i];
            *raw.get_mut(plate, pol, Sector::Evanescent) = th.values[TH_N + i] + 0.5 * zp[p];
            *base.get_mut(plate, pol, Sector::Propagating) = th.values[4 + i];
        }
    }
    let imag = th.values[8] + th.values[TH_N + 8];
    let result = PressureResult {
        value: raw.total(),
        err: zp_err + th.err,
        breakdown: raw,
        baseline_subtracted: false,
        baseline: base,
        imag,
    };
    Ok(if opts.subtract_infinite_separation { regularize(&result) } else { result })
}

/// Removes the `l → ∞` baseline; applying it twice changes nothing.
pub fn regularize(raw: &PressureResult) -> PressureResult {
    if raw.baseline_subtracted {
        return raw.clone();
    }
    let breakdown = raw.breakdown.sub(&raw.baseline);
    PressureResult { value: breakdown.total(), breakdown, baseline_subtracted: true, ..raw.clone() }
}

/// The `l → ∞` limit of the pressure that `regularize` removes.
pub fn baseline_pressure(geom: &Geometry, opts: &PressureOptions) -> Result<f64> {
    let r = steady_pressure(geom, &PressureOptions { subtract_infinite_separation: true, ..*opts })?;
    Ok(r.baseline.total())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakdown_order_and_total() {
        let mut b = Breakdown::default();
        *b.get_mut(Plate::R, Polarization::TM, Sector::Evanescent) = 2.0;
        *b.get_mut(Plate::L, Polarization::TE, Sector::Propagating) = 1.0;
        assert_eq!(b.total(), 3.0);
        let e = b.entries();
        assert_eq!(e[0], (Plate::L, Polarization::TE, Sector::Propagating, 1.0));
        assert_eq!(e[7], (Plate::R, Polarization::TM, Sector::Evanescent, 2.0));
    }

    #[test]
    fn options_validation() {
        assert!(PressureOptions::default().validate().is_ok());
        assert!(PressureOptions { rel_tol: 0.1, ..Default::default() }.validate().is_err());
        assert!(PressureOptions { omega_max: Some(-1.0), ..Default::default() }.validate().is_err());
    }
}

