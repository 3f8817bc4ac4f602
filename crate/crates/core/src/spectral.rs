//! Analytic structure of the Laplace-domain integrands: oscillator poles,
//! zeros of the multiple-reflection denominator on the imaginary axis,
//! branch points, removability of the modified modes, pole order at the
//! origin, and time-domain recovery of the oscillator propagator.

mod talbot;

pub use talbot::{invert_laplace_qbm, invert_laplace_rational, TalbotOptions};

use crate::em_green::{
    self, green_gap_bulk_scattered_with, green_gap_from_plate_with, ic_terms_of_block, Branch, Geometry, GreenBlock,
    GreenTerm, Interfaces, Plate, Polarization, Tensor3,
};
use crate::error::{Error, Result};
use crate::material::{horner, qbm_green_polynomials, Material, Medium};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    AnalyticQuadratic,
    ContourWinding,
    NewtonPolish,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleRoot {
    pub s: C,
    pub order: u32,
    pub residue: Option<C>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleReport {
    pub roots: Vec<PoleRoot>,
    pub causal: bool,
    /// A root sits on the imaginary axis within tolerance.
    pub marginal: bool,
    pub method: RootMethod,
    /// Zeros of the denominator inside a right-half-plane rectangle, counted
    /// by the argument principle; absent when a root lies on its boundary.
    pub rhp_winding: Option<i64>,
}

impl PoleReport {
    pub fn max_re(&self) -> f64 {
        self.roots.iter().map(|r| r.s.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(k, x)| k as f64 * x).collect()
}

fn poly_scale(c: &[f64], s: C) -> f64 {
    c.iter().enumerate().map(|(k, x)| x.abs() * s.norm().powi(k as i32)).sum()
}

fn trim(c: &[f64]) -> Vec<f64> {
    let mut v = c.to_vec();
    while v.len() > 1 && *v.last().unwrap() == 0.0 {
        v.pop();
    }
    v
}

/// Roots of a real polynomial (lowest degree first) from the eigenvalues of
/// its companion matrix, each polished by Newton iteration on the original
/// coefficients.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<C>> {
    let c = trim(coeffs);
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = c[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    let eig = m.complex_eigenvalues();
    let d = poly_deriv(&c);
    let mut roots = Vec::with_capacity(n);
    for z0 in eig.iter() {
        let mut z = *z0;
        for _ in 0..60 {
            let p = horner(&c, z);
            let dp = horner(&d, z);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let next = z - step;
            if !(next.re.is_finite() && next.im.is_finite()) {
                break;
            }
            // Never let polishing jump to a different root.
            if step.norm() > 0.1 * (z.norm() + 1.0) {
                break;
            }
            z = next;
            if step.norm() <= 1e-16 * z.norm().max(1e-300) {
                break;
            }
        }
        let resid = horner(&c, z).norm() / poly_scale(&c, z).max(1e-300);
        if !(resid <= 1e-8) {
            return Err(Error::RootFinding { last: z });
        }
        roots.push(z);
    }
    // Restore exact conjugate symmetry.
    for r in roots.iter_mut() {
        if r.im.abs() <= 1e-13 * r.norm() {
            r.im = 0.0;
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Number of zeros of `p` inside the rectangle, by the argument principle.
pub fn winding_count(p: &[f64], re: (f64, f64), im: (f64, f64)) -> Option<i64> {
    let corners = [C::new(re.0, im.0), C::new(re.1, im.0), C::new(re.1, im.1), C::new(re.0, im.1)];
    let mut total = 0.0;
    for k in 0..4 {
        total += edge_arg(p, corners[k], corners[(k + 1) % 4], 0)?;
    }
    Some((total / (2.0 * std::f64::consts::PI)).round() as i64)
}

fn edge_arg(p: &[f64], a: C, b: C, depth: u32) -> Option<f64> {
    const N: usize = 256;
    let mut acc = 0.0;
    let mut prev = horner(p, a);
    let floor = 1e-12;
    for k in 1..=N {
        let z = a + (b - a) * (k as f64 / N as f64);
        let v = horner(p, z);
        if v.norm() <= floor * poly_scale(p, z) {
            return None;
        }
        let d = (v / prev).arg();
        if d.abs() > 0.5 && depth < 12 {
            let za = a + (b - a) * ((k - 1) as f64 / N as f64);
            acc += edge_arg(p, za, z, depth + 1)?;
        } else {
            acc += d;
        }
        prev = v;
    }
    Some(acc)
}

fn cauchy_bound(c: &[f64]) -> f64 {
    let c = trim(c);
    let n = c.len() - 1;
    1.0 + c[..n].iter().map(|x| (x / c[n]).abs()).fold(0.0, f64::max)
}

fn pair_root_clusters(roots: Vec<C>, scale: f64) -> Vec<(C, u32)> {
    let mut out: Vec<(C, u32)> = Vec::new();
    for r in roots {
        if let Some(e) = out.iter_mut().find(|(z, _)| (*z - r).norm() <= 1e-6 * scale) {
            e.0 = (e.0 * e.1 as f64 + r) / (e.1 as f64 + 1.0);
            e.1 += 1;
        } else {
            out.push((r, 1));
        }
    }
    out
}

/// Poles of the retarded oscillator propagator `G(s)`.
pub fn find_qbm_poles(mat: &Material) -> Result<PoleReport> {
    mat.validate()?;
    let (num, den) = qbm_green_polynomials(mat);
    let (raw, method) = if den.len() == 3 {
        let (w2, g) = (den[0], den[1]);
        let disc = g * g - 4.0 * w2;
        let r = if disc >= 0.0 {
            // Cancellation-free pair.
            let big = -0.5 * (g + disc.sqrt());
            vec![C::new(big, 0.0), C::new(w2 / big, 0.0)]
        } else {
            let im = 0.5 * (-disc).sqrt();
            vec![C::new(-0.5 * g, -im), C::new(-0.5 * g, im)]
        };
        (r, RootMethod::AnalyticQuadratic)
    } else {
        (polynomial_roots(&den)?, RootMethod::NewtonPolish)
    };
    let scale = raw.iter().map(|z| z.norm()).fold(1e-300, f64::max);
    let clusters = pair_root_clusters(raw, scale);
    let d = poly_deriv(&den);
    let roots: Vec<PoleRoot> = clusters
        .into_iter()
        .map(|(s, order)| PoleRoot { s, order, residue: (order == 1).then(|| horner(&num, s) / horner(&d, s)) })
        .collect();
    let tol = 1e-12 * scale.max(1.0);
    let max_re = roots.iter().map(|r| r.s.re).fold(f64::NEG_INFINITY, f64::max);
    let bound = 2.0 * cauchy_bound(&den);
    Ok(PoleReport {
        causal: max_re < -tol,
        marginal: max_re.abs() <= tol,
        method,
        rhp_winding: winding_count(&den, (0.0, bound), (-bound, bound)),
        roots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmuScan {
    pub min_abs: f64,
    pub argmin: f64,
    pub points: usize,
    /// Nodes on the light line `|ω| = Q`, where `q_z = 0` is a branch point
    /// and `D_μ` vanishes with it.
    pub branch_points: usize,
}

/// Uniform grid on `[−ω_max, ω_max]` with at least `points` nodes and at
/// least eight nodes per gap round-trip period `π/l`.
pub fn imaginary_axis_grid(omega_max: f64, gap: f64, points: usize) -> Vec<f64> {
    let needed = (2.0 * omega_max / (std::f64::consts::PI / gap) * 8.0).ceil() as usize + 1;
    let n = points.max(needed).max(2);
    (0..n).map(|k| -omega_max + 2.0 * omega_max * k as f64 / (n - 1) as f64).collect()
}

fn dmu_on_axis(geom: &Geometry, pol: Polarization, q: f64, omega: f64) -> Result<f64> {
    let s = C::new(0.0, omega);
    match Interfaces::new(geom, s, q, Branch::Retarded) {
        Ok(ifc) => Ok(ifc.d[pol.index()].norm()),
        Err(Error::Singularity { .. }) => {
            let eta = 1e-9 * omega.abs().max(1.0);
            Ok(Interfaces::new(geom, C::new(0.0, omega + eta), q, Branch::Retarded)?.d[pol.index()].norm())
        }
        Err(e) => Err(e),
    }
}

fn on_light_line(omega: f64, q: f64) -> bool {
    (omega.abs() - q).abs() <= 1e-12 * q.max(1.0)
}

/// Minimum of `|D_μ(iω)|` over the grid, light-line nodes excluded; ties
/// resolve to the first node.
pub fn scan_dmu_imaginary_axis(geom: &Geometry, pol: Polarization, q: f64, omega_grid: &[f64]) -> Result<DmuScan> {
    let nodes: Vec<f64> = omega_grid.iter().copied().filter(|&w| !on_light_line(w, q)).collect();
    if nodes.is_empty() {
        return Err(Error::Usage("empty frequency grid".into()));
    }
    let vals: Vec<f64> = nodes.par_iter().map(|&w| dmu_on_axis(geom, pol, q, w)).collect::<Result<_>>()?;
    let (mut best, mut arg) = (f64::INFINITY, nodes[0]);
    for (v, w) in vals.iter().zip(&nodes) {
        if *v < best {
            best = *v;
            arg = *w;
        }
    }
    Ok(DmuScan { min_abs: best, argmin: arg, points: omega_grid.len(), branch_points: omega_grid.len() - nodes.len() })
}

/// Roots of `ε(s)s² + c = 0` after clearing the denominator of `ε`.
pub fn eps_s2_roots(mat: &Material, c: f64) -> Result<Vec<C>> {
    if mat.lambda0 == 0.0 {
        let r = c.max(0.0).sqrt();
        return Ok(vec![C::new(0.0, -r), C::new(0.0, r)]);
    }
    let (num, den) = qbm_green_polynomials(mat);
    let l2 = mat.lambda0 * mat.lambda0;
    let poly = poly_add(&poly_mul(&den, &[c, 0.0, 1.0]), &poly_mul(&num, &[0.0, 0.0, l2]));
    polynomial_roots(&poly)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    GapSqrt,
    PlateSqrt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub kind: CutKind,
    pub plate: Option<Plate>,
    pub endpoints: (C, C),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchInventory {
    pub cuts: Vec<Cut>,
    /// Plates whose permittivity is tabulated; their cut endpoints are not
    /// available in closed form.
    pub skipped: Vec<Plate>,
}

fn pair_conjugates(mut roots: Vec<C>) -> Vec<(C, C)> {
    let mut pairs = Vec::new();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = roots[i].conj();
        let j = (0..roots.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (roots[a] - target).norm().total_cmp(&(roots[b] - target).norm()));
        match j {
            Some(j) => {
                used[j] = true;
                let (a, b) = if roots[i].im <= roots[j].im { (roots[i], roots[j]) } else { (roots[j], roots[i]) };
                pairs.push((a, b));
            }
            None => pairs.push((roots[i], roots[i])),
        }
    }
    pairs
}

/// Branch points of `q_z` in the gap and in each plate at fixed `Q`.
pub fn branch_inventory(geom: &Geometry, q: f64) -> Result<BranchInventory> {
    let mut cuts = vec![Cut { kind: CutKind::GapSqrt, plate: None, endpoints: (C::new(0.0, -q), C::new(0.0, q)) }];
    let mut skipped = Vec::new();
    for plate in Plate::BOTH {
        match geom.medium(plate) {
            Medium::Oscillator(m) => {
                for endpoints in pair_conjugates(eps_s2_roots(m, q * q)?) {
                    cuts.push(Cut { kind: CutKind::PlateSqrt, plate: Some(plate), endpoints });
                }
            }
            Medium::Table { .. } => skipped.push(plate),
        }
    }
    Ok(BranchInventory { cuts, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedModeReport {
    /// Normalized numerator of the vanishing gap terms at `s = ±iω_k`.
    pub num_zero: f64,
    /// Normalized denominator `q_z ± i k_z` there.
    pub den_zero: f64,
    /// Sum of the entries of the vanishing terms' limit at `s = −iω_k`.
    pub lhopital_limit: C,
    /// Relative spread of the vanishing terms over four approach directions.
    pub direction_spread: f64,
    /// Relative gap between the L'Hôpital value and the directional mean.
    pub lhopital_mismatch: f64,
    /// Same two checks on the complete source-phase integral; only
    /// available when every plate denominator decays.
    pub full_direction_spread: Option<f64>,
    pub full_lhopital_mismatch: Option<f64>,
    /// Largest real part among zeros of the plate denominators.
    pub plate_root_max_re: f64,
    pub plate_roots_decaying: bool,
    pub removable: bool,
}

const DIRECTION_TOL: f64 = 1e-6;
const ZERO_TOL: f64 = 1e-8;

fn gap_block(geom: &Geometry, s: C, q: f64, qhat: [f64; 2]) -> Result<(Interfaces, GreenBlock)> {
    let ifc = Interfaces::new(geom, s, q, Branch::Continued)?;
    let block = green_gap_bulk_scattered_with(&ifc, qhat, true);
    Ok((ifc, block))
}

/// `β·∫ dz′ (term) e^{i k_z z′}` at the field point, together with `β`.
fn singular_numerator(t: &GreenTerm, kz: f64, half: f64, z: f64) -> (Tensor3, C, f64) {
    let beta = t.exp_src + C::new(0.0, kz);
    let (lo, hi) = em_green::source_interval(t.plate, t.step, z, half);
    let field = t.extra * (t.exp_z * (z - t.z_anchor)).exp();
    let up = (beta * hi - t.exp_src * t.src_anchor).exp();
    let down = (beta * lo - t.exp_src * t.src_anchor).exp();
    let w = field * (up - down);
    let mut out = [[C::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = w * t.coeff[i] * t.source[j];
        }
    }
    let cmax = t.coeff.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let smax = t.source.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let scale = field.norm() * (up.norm() + down.norm()) * cmax * smax;
    (out, beta, scale)
}

fn singular_indices(block: &GreenBlock, kz: f64) -> Vec<usize> {
    block
        .terms
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            let beta = t.exp_src + C::new(0.0, kz);
            beta.norm() <= 1e-6 * (t.exp_src.norm() + kz.abs())
        })
        .map(|(i, _)| i)
        .collect()
}

fn tensor_add(a: &mut Tensor3, b: &Tensor3, w: C) {
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] += w * b[i][j];
        }
    }
}

fn tensor_norm(a: &Tensor3) -> f64 {
    em_green::tensor_max_abs(a)
}

fn zero_tensor() -> Tensor3 {
    [[C::new(0.0, 0.0); 3]; 3]
}

/// Source-phase integral with the listed gap terms removed.
fn regular_part(geom: &Geometry, s: C, q: f64, qhat: [f64; 2], kz: f64, skip: &[usize]) -> Result<Tensor3> {
    let (ifc, mut gap) = gap_block(geom, s, q, qhat)?;
    let mut terms = Vec::new();
    for plate in Plate::BOTH {
        ic_terms_of_block(&green_gap_from_plate_with(&ifc, plate, qhat)?, kz, ifc.half, &mut terms)?;
    }
    gap.terms = gap.terms.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, t)| *t).collect();
    ic_terms_of_block(&gap, kz, ifc.half, &mut terms)?;
    let mut out = zero_tensor();
    for t in &terms {
        let w = t.weight(geom.z_field);
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += w * t.coeff[i] * t.source[j];
            }
        }
    }
    out[2][2] += -(C::new(0.0, kz * geom.z_field)).exp() / (s * s);
    Ok(out)
}

/// Contribution of the vanishing-denominator gap terms at `s ≠ s₀`.
fn singular_part(geom: &Geometry, s: C, q: f64, qhat: [f64; 2], kz: f64, idx: &[usize]) -> Result<Tensor3> {
    let (_, block) = gap_block(geom, s, q, qhat)?;
    let mut out = zero_tensor();
    for &i in idx {
        let (n, beta, _) = singular_numerator(&block.terms[i], kz, 0.5 * geom.gap, geom.z_field);
        tensor_add(&mut out, &n, 1.0 / beta);
    }
    Ok(out)
}

/// Largest relative deviation of `vals` from their mean, and the mean.
fn spread_of(vals: &[Tensor3]) -> (f64, Tensor3) {
    let mut mean = zero_tensor();
    for v in vals {
        tensor_add(&mut mean, v, C::new(1.0 / vals.len() as f64, 0.0));
    }
    let scale = tensor_norm(&mean).max(1e-300);
    let mut worst = 0.0f64;
    for v in vals {
        let mut d = *v;
        tensor_add(&mut d, &mean, C::new(-1.0, 0.0));
        worst = worst.max(tensor_norm(&d) / scale);
    }
    (worst, mean)
}

fn relative_gap(a: &Tensor3, b: &Tensor3) -> f64 {
    let mut d = *a;
    tensor_add(&mut d, b, C::new(-1.0, 0.0));
    tensor_norm(&d) / tensor_norm(b).max(1e-300)
}

/// Limit along one approach direction from the values at one and two steps,
/// cancelling the term linear in the step.
fn extrapolate<F: Fn(f64) -> Result<Tensor3>>(f: F) -> Result<Tensor3> {
    let one = f(1.0)?;
    let mut out = zero_tensor();
    tensor_add(&mut out, &one, C::new(2.0, 0.0));
    tensor_add(&mut out, &f(2.0)?, C::new(-1.0, 0.0));
    Ok(out)
}

/// Checks that the candidate poles of the initial-condition integrand at
/// `s = ±iω_k` are removable.
pub fn modified_mode_check(geom: &Geometry, q: f64, kz: f64) -> Result<ModifiedModeReport> {
    geom.validate()?;
    if kz == 0.0 {
        return Err(Error::InvalidParameter("k_z must be non-zero".into()));
    }
    let wk = (q * q + kz * kz).sqrt();
    let mut plate_max_re = f64::NEG_INFINITY;
    // Nearest branch point or pole of anything entering the integrand, seen
    // from either candidate mode; both step sizes scale with it.
    let mut nearby = vec![C::new(0.0, q), C::new(0.0, -q)];
    for plate in Plate::BOTH {
        match geom.medium(plate) {
            Medium::Oscillator(m) => {
                let roots = eps_s2_roots(m, wk * wk)?;
                plate_max_re = roots.iter().fold(plate_max_re, |a, r| a.max(r.re));
                if m.lambda0 != 0.0 {
                    nearby.extend(roots);
                    nearby.extend(eps_s2_roots(m, q * q)?);
                    nearby.extend(polynomial_roots(&qbm_green_polynomials(m).1)?);
                }
            }
            Medium::Table { .. } => {
                return Err(Error::Domain("modified-mode check needs oscillator plates".into()));
            }
        }
    }
    let decaying = plate_max_re < -1e-12 * wk;
    let qhat = [1.0, 0.0];
    let half = 0.5 * geom.gap;
    let z = geom.z_field;
    let reach = nearby
        .iter()
        .flat_map(|r| [(r - C::new(0.0, wk)).norm(), (r - C::new(0.0, -wk)).norm()])
        .fold(wk, f64::min);
    let delta = 1e-5 * reach;
    let h = 1e-3 * reach;
    let directions: Vec<C> =
        (0..4).map(|k| C::from_polar(delta, 0.5 * std::f64::consts::PI * k as f64)).collect();
    let (mut num_zero, mut den_zero, mut spread, mut mismatch) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut full_spread, mut full_mismatch) = (0.0f64, 0.0f64);
    let mut lhopital = C::new(0.0, 0.0);
    for s0 in [C::new(0.0, -wk), C::new(0.0, wk)] {
        let (_, block0) = gap_block(geom, s0, q, qhat)?;
        let idx = singular_indices(&block0, kz);
        if idx.is_empty() {
            return Err(Error::Domain(format!("no vanishing gap denominator at s = {s0}")));
        }
        for &i in &idx {
            let (n, beta, scale) = singular_numerator(&block0.terms[i], kz, half, z);
            num_zero = num_zero.max(tensor_norm(&n) / scale.max(1e-300));
            den_zero = den_zero.max(beta.norm() / (block0.terms[i].exp_src.norm() + kz.abs()));
        }

        let mut sing_lim = zero_tensor();
        let stencil = [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)];
        let blocks =
            stencil.iter().map(|&(k, _)| Ok(gap_block(geom, s0 + k * h, q, qhat)?.1)).collect::<Result<Vec<_>>>()?;
        for &i in &idx {
            let mut dn = zero_tensor();
            let mut dbeta = C::new(0.0, 0.0);
            for (blk, &(_, w)) in blocks.iter().zip(&stencil) {
                let (n, beta, _) = singular_numerator(&blk.terms[i], kz, half, z);
                tensor_add(&mut dn, &n, C::new(w / (12.0 * h), 0.0));
                dbeta += beta * (w / (12.0 * h));
            }
            if dbeta.norm() == 0.0 {
                return Err(Error::Singularity { s: s0, context: "double zero of the gap denominator".into() });
            }
            tensor_add(&mut sing_lim, &dn, dbeta.inv());
        }
        let vals = directions
            .iter()
            .map(|d| extrapolate(|u| singular_part(geom, s0 + u * d, q, qhat, kz, &idx)))
            .collect::<Result<Vec<_>>>()?;
        let (sp, mean) = spread_of(&vals);
        spread = spread.max(sp);
        mismatch = mismatch.max(relative_gap(&sing_lim, &mean));
        if s0.im < 0.0 {
            lhopital = sing_lim.iter().flatten().sum();
        }

        if decaying {
            let vals = directions
                .iter()
                .map(|d| extrapolate(|u| Ok(em_green::ic_z_terms(geom, s0 + u * d, q, qhat, kz, Branch::Continued)?.tensor(z))))
                .collect::<Result<Vec<_>>>()?;
            let (sp, mean) = spread_of(&vals);
            full_spread = full_spread.max(sp);
            let mut total = regular_part(geom, s0, q, qhat, kz, &idx)?;
            tensor_add(&mut total, &sing_lim, C::new(1.0, 0.0));
            full_mismatch = full_mismatch.max(relative_gap(&total, &mean));
        }
    }
    let full_ok = !decaying || (full_spread <= DIRECTION_TOL && full_mismatch <= DIRECTION_TOL);
    let removable = num_zero <= ZERO_TOL
        && den_zero <= ZERO_TOL
        && spread <= DIRECTION_TOL
        && mismatch <= DIRECTION_TOL
        && lhopital.is_finite()
        && full_ok;
    Ok(ModifiedModeReport {
        num_zero,
        den_zero,
        lhopital_limit: lhopital,
        direction_spread: spread,
        lhopital_mismatch: mismatch,
        full_direction_spread: decaying.then_some(full_spread),
        full_lhopital_mismatch: decaying.then_some(full_mismatch),
        plate_root_max_re: plate_max_re,
        plate_roots_decaying: decaying,
        removable,
    })
}

/// Pole order of a function at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleClass {
    NoPole,
    FirstOrder,
    SecondOrder,
    Higher,
}

impl PoleClass {
    pub fn from_order(k: i32) -> Self {
        match k {
            i32::MIN..=0 => PoleClass::NoPole,
            1 => PoleClass::FirstOrder,
            2 => PoleClass::SecondOrder,
            _ => PoleClass::Higher,
        }
    }

    pub fn order(self) -> i32 {
        match self {
            PoleClass::NoPole => 0,
            PoleClass::FirstOrder => 1,
            PoleClass::SecondOrder => 2,
            PoleClass::Higher => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    /// Growth exponent `k` with `|f(s)| ~ |s|^{−k}`; `None` for an
    /// identically vanishing function.
    pub order: Option<i32>,
    pub slope: f64,
    /// `s^k f(s)` settles to a finite non-zero limit along the ray.
    pub converged: bool,
}

impl OrderEstimate {
    pub fn class(&self) -> PoleClass {
        PoleClass::from_order(self.order.unwrap_or(i32::MIN))
    }
}

/// Estimates the order of the singularity of `f` at `s = 0` along the ray
/// `s = r e^{iθ}` by halving `r` from `r0` `steps` times.
pub fn origin_order<F>(f: F, theta: f64, r0: f64, steps: usize) -> Result<OrderEstimate>
where
    F: Fn(C) -> Result<C>,
{
    Ok(origin_orders(|s| Ok(vec![f(s)?]), theta, r0, steps)?[0])
}

/// `origin_order` for every component of a vector-valued function.
pub fn origin_orders<F>(f: F, theta: f64, r0: f64, steps: usize) -> Result<Vec<OrderEstimate>>
where
    F: Fn(C) -> Result<Vec<C>>,
{
    let steps = steps.max(3);
    let dir = C::new(theta.cos(), theta.sin());
    let mut rs = Vec::with_capacity(steps);
    let mut vs: Vec<Vec<C>> = Vec::with_capacity(steps);
    for j in 0..steps {
        let r = r0 * 0.5f64.powi(j as i32);
        rs.push(r);
        vs.push(f(r * dir)?);
    }
    let n = steps;
    let width = vs[0].len();
    if vs.iter().any(|v| v.len() != width) {
        return Err(Error::InvalidParameter("component count changed along the ray".into()));
    }
    let estimate = |c: usize| {
        if vs.iter().all(|v| v[c].norm() == 0.0) {
            return OrderEstimate { order: None, slope: f64::NEG_INFINITY, converged: true };
        }
        let slope = -((vs[n - 1][c].norm() / vs[n - 3][c].norm()).ln() / (rs[n - 1] / rs[n - 3]).ln());
        let k = slope.round();
        let order = ((slope - k).abs() <= 0.15).then_some(k as i32);
        let converged = match order {
            Some(k) => {
                let a = vs[n - 1][c] * (rs[n - 1] * dir).powi(k);
                let b = vs[n - 2][c] * (rs[n - 2] * dir).powi(k);
                (a - b).norm() <= 0.1 * a.norm()
            }
            None => false,
        };
        OrderEstimate { order, slope, converged }
    };
    Ok((0..width).map(estimate).collect())
}
