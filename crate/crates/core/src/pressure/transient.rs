//! Double-Laplace integrands of the transient contributions and the
//! classification of their singularities at `s₁ = s₂ = 0`.
//!
//! The oscillator (DOF) and initial-field (IC) parts of the pressure are not
//! inverted in time. Their integrands are assembled exactly and split into
//! elementary pieces: a scalar factor, one component of the Θ operator and a
//! polarization pair. Each piece is then classified by the order of its pole
//! at the origin in each Laplace variable.

use crate::em_green::{
    check_pairing, dot, green_gap_from_plate, ic_z_terms, pair_integral_at, Branch, Geometry, GreenBlock, IcBlock,
    Plate, Polarization, C,
};
use crate::error::{Error, Result};
use crate::material::{coth_half, qbm_green, Material};
use crate::spectral::{origin_orders, OrderEstimate, PoleClass};
use serde::{Deserialize, Serialize};

const LAMBDA: [f64; 3] = [1.0, 1.0, -1.0];

/// Component of `Θ^{jk}(s₁, s₂)`: `0..3` are the electric terms
/// `s₁s₂Λ^{ii}`, `3..15` the magnetic Levi-Civita products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThetaPiece(pub u8);

impl ThetaPiece {
    pub const COUNT: usize = 15;

    pub fn all() -> impl Iterator<Item = ThetaPiece> {
        (0..Self::COUNT as u8).map(ThetaPiece)
    }

    pub fn is_electric(self) -> bool {
        self.0 < 3
    }

    /// `(p, r, j, l, k, sign)` of `Λ^{pp} ε^{prj} ε^{plk}`.
    fn magnetic_indices(self) -> (usize, usize, usize, usize, usize, f64) {
        let m = (self.0 - 3) as usize;
        let (p, a, b) = (m / 4, (m / 2) % 2, m % 2);
        let pick = |o: usize| if o == 0 { ((p + 1) % 3, (p + 2) % 3, 1.0) } else { ((p + 2) % 3, (p + 1) % 3, -1.0) };
        let (r, j, s1) = pick(a);
        let (l, k, s2) = pick(b);
        (p, r, j, l, k, s1 * s2)
    }

    /// Value for field factors `c₁, c₂` with gradients `g₁, g₂`.
    fn value(self, s1: C, s2: C, c1: &[C; 3], g1: &[C; 3], c2: &[C; 3], g2: &[C; 3]) -> C {
        if self.is_electric() {
            let i = self.0 as usize;
            s1 * s2 * LAMBDA[i] * c1[i] * c2[i]
        } else {
            let (p, r, j, l, k, sign) = self.magnetic_indices();
            sign * LAMBDA[p] * g1[r] * c1[j] * g2[l] * c2[k]
        }
    }
}

/// Scalar factor multiplying the Green-function product in the DOF
/// integrand, after expanding
/// `(s₁²G₁ − 1)(s₂²G₂ − 1) + Ω²s₁s₂G₁G₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DofFactor {
    /// `s₁²s₂²G₁G₂`
    BothResponse,
    /// `−s₁²G₁`
    FirstResponse,
    /// `−s₂²G₂`
    SecondResponse,
    /// `1`
    Unit,
    /// `Ω²s₁s₂G₁G₂`
    Velocity,
}

impl DofFactor {
    pub const ALL: [DofFactor; 5] =
        [DofFactor::BothResponse, DofFactor::FirstResponse, DofFactor::SecondResponse, DofFactor::Unit, DofFactor::Velocity];

    fn value(self, mat: &Material, s1: C, s2: C) -> Result<C> {
        let g1 = qbm_green(mat, s1)?;
        let g2 = qbm_green(mat, s2)?;
        Ok(match self {
            DofFactor::BothResponse => s1 * s1 * s2 * s2 * g1 * g2,
            DofFactor::FirstResponse => -s1 * s1 * g1,
            DofFactor::SecondResponse => -s2 * s2 * g2,
            DofFactor::Unit => C::new(1.0, 0.0),
            DofFactor::Velocity => mat.omega0 * mat.omega0 * s1 * s2 * g1 * g2,
        })
    }
}

/// Scalar factor `s₁s₂ + ω_k²` of the IC integrand, split in two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IcFactor {
    /// `s₁s₂`
    Product,
    /// `ω_k²`
    Frequency,
}

impl IcFactor {
    pub const ALL: [IcFactor; 2] = [IcFactor::Product, IcFactor::Frequency];

    fn value(self, s1: C, s2: C, omega_k: f64) -> C {
        match self {
            IcFactor::Product => s1 * s2,
            IcFactor::Frequency => C::new(omega_k * omega_k, 0.0),
        }
    }
}

/// Polarization of an IC term; `Longitudinal` is the local `δ_{j3}δ_{b3}`
/// part of the Green tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IcPolarization {
    TE,
    TM,
    Longitudinal,
}

impl IcPolarization {
    pub const ALL: [IcPolarization; 3] = [IcPolarization::TE, IcPolarization::TM, IcPolarization::Longitudinal];

    fn of(p: Option<Polarization>) -> Self {
        match p {
            Some(Polarization::TE) => IcPolarization::TE,
            Some(Polarization::TM) => IcPolarization::TM,
            None => IcPolarization::Longitudinal,
        }
    }

    fn index(self) -> usize {
        match self {
            IcPolarization::TE => 0,
            IcPolarization::TM => 1,
            IcPolarization::Longitudinal => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DofLabel {
    pub plate: Plate,
    pub factor: DofFactor,
    pub theta: ThetaPiece,
    pub polarization: Polarization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IcLabel {
    pub factor: IcFactor,
    pub theta: ThetaPiece,
    pub polarizations: (IcPolarization, IcPolarization),
}

fn oscillator(geom: &Geometry, plate: Plate) -> Result<&Material> {
    geom.medium(plate)
        .material()
        .ok_or_else(|| Error::Domain("oscillator contributions need oscillator plates".into()))
}

/// `λ₀²M/(2Ω)·coth(β_P Ω/2)` of one plate.
fn dof_prefactor(mat: &Material) -> f64 {
    mat.lambda0 * mat.lambda0 * mat.mass / (2.0 * mat.omega0) * coth_half(mat.beta_dof, mat.omega0)
}

fn dof_blocks(geom: &Geometry, plate: Plate, q: f64, s1: C, s2: C) -> Result<(GreenBlock, GreenBlock)> {
    let b1 = green_gap_from_plate(geom, plate, s1, q, [1.0, 0.0])?;
    let b2 = green_gap_from_plate(geom, plate, s2, q, [-1.0, 0.0])?;
    check_pairing(&b1, &b2)?;
    Ok((b1, b2))
}

/// Θ pieces of the z′-integrated pair by polarization: `[pol][piece]`.
fn dof_theta_pieces(b1: &GreenBlock, b2: &GreenBlock, s1: C, s2: C) -> Result<[[C; ThetaPiece::COUNT]; 2]> {
    let z = b1.z_field;
    let mut out = [[C::new(0.0, 0.0); ThetaPiece::COUNT]; 2];
    for t1 in &b1.terms {
        let g1 = t1.field_gradient(b1.q, b1.qhat);
        for t2 in &b2.terms {
            if t1.polarization != t2.polarization {
                continue;
            }
            let sd = dot(&t1.source, &t2.source);
            if sd == C::new(0.0, 0.0) {
                continue;
            }
            let g2 = t2.field_gradient(b2.q, b2.qhat);
            let w = t1.extra * t2.extra * sd * pair_integral_at(t1, t2, z, z, b1.half)?;
            let row = &mut out[t1.polarization.index()];
            for piece in ThetaPiece::all() {
                row[piece.0 as usize] += w * piece.value(s1, s2, &t1.coeff, &g1, &t2.coeff, &g2);
            }
        }
    }
    Ok(out)
}

/// Elementary pieces of the DOF integrand; they sum to
/// `assemble_dof_integrand`.
pub fn dof_pieces(geom: &Geometry, q: f64, s1: C, s2: C) -> Result<Vec<(DofLabel, C)>> {
    let mut out = Vec::with_capacity(2 * 5 * 2 * ThetaPiece::COUNT);
    for plate in Plate::BOTH {
        let mat = oscillator(geom, plate)?;
        let pre = dof_prefactor(mat);
        let (b1, b2) = dof_blocks(geom, plate, q, s1, s2)?;
        let theta = dof_theta_pieces(&b1, &b2, s1, s2)?;
        for factor in DofFactor::ALL {
            let f = pre * factor.value(mat, s1, s2)?;
            for pol in Polarization::BOTH {
                for piece in ThetaPiece::all() {
                    let label = DofLabel { plate, factor, theta: piece, polarization: pol };
                    out.push((label, f * theta[pol.index()][piece.0 as usize]));
                }
            }
        }
    }
    Ok(out)
}

/// The `(s₁, s₂, Q)` integrand of the oscillator contribution, up to the
/// constant `−1/(8π)` and the `d²Q/(2π)²` measure.
pub fn assemble_dof_integrand(geom: &Geometry, q: f64, s1: C, s2: C) -> Result<C> {
    let mut acc = C::new(0.0, 0.0);
    for plate in Plate::BOTH {
        let mat = oscillator(geom, plate)?;
        if mat.lambda0 == 0.0 {
            continue;
        }
        let g1 = qbm_green(mat, s1)?;
        let g2 = qbm_green(mat, s2)?;
        let bracket = (s1 * s1 * g1 - 1.0) * (s2 * s2 * g2 - 1.0) + mat.omega0 * mat.omega0 * s1 * s2 * g1 * g2;
        let (b1, b2) = dof_blocks(geom, plate, q, s1, s2)?;
        let theta = super::theta_contract(&b1, &b2, s1, s2)?;
        acc += dof_prefactor(mat) * bracket * theta;
    }
    Ok(acc)
}

/// `δ^{bm} − k^b k^m/ω_k²`.
pub fn transverse_projector(k: [f64; 3]) -> Result<[[f64; 3]; 3]> {
    let w2: f64 = k.iter().map(|x| x * x).sum();
    if !(w2 > 0.0) {
        return Err(Error::InvalidParameter("wave vector must be non-zero".into()));
    }
    let mut p = [[0.0; 3]; 3];
    for b in 0..3 {
        for m in 0..3 {
            p[b][m] = if b == m { 1.0 } else { 0.0 } - k[b] * k[m] / w2;
        }
    }
    Ok(p)
}

fn ic_blocks(geom: &Geometry, k: [f64; 3], s1: C, s2: C) -> Result<(IcBlock, IcBlock, f64)> {
    let q = k[0].hypot(k[1]);
    let qhat = if q > 0.0 { [k[0] / q, k[1] / q] } else { [1.0, 0.0] };
    let i1 = ic_z_terms(geom, s1, q, qhat, k[2], Branch::Retarded)?;
    let i2 = ic_z_terms(geom, s2, q, [-qhat[0], -qhat[1]], -k[2], Branch::Retarded)?;
    Ok((i1, i2, q))
}

fn ic_pieces_raw(geom: &Geometry, k: [f64; 3], s1: C, s2: C) -> Result<[[[C; ThetaPiece::COUNT]; 3]; 3]> {
    let (i1, i2, q) = ic_blocks(geom, k, s1, s2)?;
    let proj = transverse_projector(k)?;
    let z = geom.z_field;
    let mut out = [[[C::new(0.0, 0.0); ThetaPiece::COUNT]; 3]; 3];
    for t1 in &i1.terms {
        let g1 = t1.gradient(q, i1.qhat);
        let w1 = t1.weight(z);
        for t2 in &i2.terms {
            let mut sp = C::new(0.0, 0.0);
            for b in 0..3 {
                for m in 0..3 {
                    sp += t1.source[b] * proj[b][m] * t2.source[m];
                }
            }
            if sp == C::new(0.0, 0.0) {
                continue;
            }
            let g2 = t2.gradient(q, i2.qhat);
            let w = w1 * t2.weight(z) * sp;
            let cell = &mut out[IcPolarization::of(t1.polarization).index()][IcPolarization::of(t2.polarization).index()];
            for piece in ThetaPiece::all() {
                cell[piece.0 as usize] += w * piece.value(s1, s2, &t1.coeff, &g1, &t2.coeff, &g2);
            }
        }
    }
    Ok(out)
}

fn ic_prefactor(k: [f64; 3], beta_em: f64) -> f64 {
    let w = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    coth_half(beta_em, w) / (2.0 * w)
}

/// Elementary pieces of the IC integrand; they sum to
/// `assemble_ic_integrand`.
pub fn ic_pieces(geom: &Geometry, k: [f64; 3], s1: C, s2: C, beta_em: f64) -> Result<Vec<(IcLabel, C)>> {
    let raw = ic_pieces_raw(geom, k, s1, s2)?;
    let w = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let pre = ic_prefactor(k, beta_em);
    let mut out = Vec::with_capacity(2 * 9 * ThetaPiece::COUNT);
    for factor in IcFactor::ALL {
        let f = pre * factor.value(s1, s2, w);
        for p1 in IcPolarization::ALL {
            for p2 in IcPolarization::ALL {
                for piece in ThetaPiece::all() {
                    let label = IcLabel { factor, theta: piece, polarizations: (p1, p2) };
                    out.push((label, f * raw[p1.index()][p2.index()][piece.0 as usize]));
                }
            }
        }
    }
    Ok(out)
}

/// The `(s₁, s₂, k)` integrand of the initial-field contribution, up to the
/// constant `−1/(8π)` and the `d³k/(2π)³` measure.
pub fn assemble_ic_integrand(geom: &Geometry, k: [f64; 3], s1: C, s2: C, beta_em: f64) -> Result<C> {
    let raw = ic_pieces_raw(geom, k, s1, s2)?;
    let w = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let total: C = raw.iter().flatten().flatten().sum();
    Ok(ic_prefactor(k, beta_em) * (s1 * s2 + w * w) * total)
}

/// Settings of the origin classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyOptions {
    /// Directions of the rays `s = r e^{iθ}` approaching the origin.
    pub rays: [f64; 2],
    pub r0: f64,
    pub steps: usize,
    /// Value held by the other Laplace variable.
    pub spectator: C,
    /// Pieces below this fraction of the largest piece at `r0` are treated
    /// as identically zero.
    pub zero_floor: f64,
}

impl Default for TaxonomyOptions {
    fn default() -> Self {
        Self { rays: [0.3, -0.7], r0: 1e-2, steps: 9, spectator: C::new(0.45, 0.3), zero_floor: 1e-13 }
    }
}

/// Order of one piece at the origin in each Laplace variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PieceOrder<L> {
    pub label: L,
    /// `None` when the piece vanishes identically.
    pub orders: Option<(i32, i32)>,
    pub class: PoleClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyReport<L> {
    pub pieces: Vec<PieceOrder<L>>,
    /// Number of non-vanishing pieces per class: none, first, second, higher.
    pub counts: [usize; 4],
    /// Pieces whose order could not be read off consistently on all rays.
    pub unresolved: usize,
    /// Class of the sum of the second-order pieces.
    pub second_order_sum: PoleClass,
    /// Class of the complete integrand.
    pub total: PoleClass,
}

impl<L> TaxonomyReport<L> {
    /// All three classes occur, nothing beyond second order, and the
    /// second-order pieces cancel in the sum.
    pub fn matches_expected(&self) -> bool {
        self.unresolved == 0
            && self.counts[0] > 0
            && self.counts[1] > 0
            && self.counts[2] > 0
            && self.counts[3] == 0
            && self.second_order_sum.order() <= 1
            && self.total.order() <= 1
    }

    /// A joint pole of order two or higher would leave a time-independent
    /// remainder after discarding the first-order switch-on terms.
    pub fn steady_survivor(&self) -> bool {
        self.total.order() >= 2 || self.second_order_sum.order() >= 2
    }
}

fn joint_class(o1: i32, o2: i32) -> PoleClass {
    if o1 <= 0 || o2 <= 0 {
        PoleClass::NoPole
    } else {
        PoleClass::from_order(o1.max(o2))
    }
}

/// Orders in `s₁` (with `s₂` held) and in `s₂` (with `s₁` held) of every
/// component of `f`, on every ray. Components appended past `labels.len()`
/// are derived sums.
fn classify<L: Copy, F>(labels: &[L], f: F, opts: &TaxonomyOptions, derived: usize) -> Result<(Vec<PieceOrder<L>>, Vec<PoleClass>, usize)>
where
    F: Fn(C, C) -> Result<Vec<C>>,
{
    let width = labels.len() + derived;
    let reference = f(C::new(opts.r0, 0.0), opts.spectator)?;
    let mut per_var: Vec<[Vec<OrderEstimate>; 2]> = Vec::new();
    for &theta in &opts.rays {
        let a = origin_orders(|s| f(s, opts.spectator), theta, opts.r0, opts.steps)?;
        let b = origin_orders(|s| f(opts.spectator, s), theta, opts.r0, opts.steps)?;
        per_var.push([a, b]);
    }
    // Magnitudes at the innermost point on the first ray decide which
    // pieces are numerically zero.
    let rmin = opts.r0 * 0.5f64.powi(opts.steps as i32 - 1);
    let dir = C::new(opts.rays[0].cos(), opts.rays[0].sin());
    let inner1 = f(rmin * dir, opts.spectator)?;
    let inner2 = f(opts.spectator, rmin * dir)?;
    let mut unresolved = 0;
    let mut orders = Vec::with_capacity(width);
    for c in 0..width {
        let tiny = |v: &[C]| v[c].norm() <= opts.zero_floor * v.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if tiny(&reference) && tiny(&inner1) && tiny(&inner2) {
            orders.push(None);
            continue;
        }
        let mut pair = [None, None];
        for var in 0..2 {
            let mut got: Option<i32> = None;
            let mut ok = true;
            for ray in &per_var {
                match ray[var][c].order {
                    Some(k) if got.is_none() || got == Some(k) => got = Some(k),
                    _ => ok = false,
                }
            }
            pair[var] = if ok { got } else { None };
        }
        match pair {
            [Some(a), Some(b)] => orders.push(Some((a, b))),
            _ => {
                unresolved += 1;
                orders.push(Some((i32::MAX, i32::MAX)));
            }
        }
    }
    let pieces = labels
        .iter()
        .zip(&orders)
        .map(|(&label, o)| PieceOrder {
            label,
            orders: *o,
            class: o.map_or(PoleClass::NoPole, |(a, b)| joint_class(a, b)),
        })
        .collect();
    let derived_classes = orders[labels.len()..]
        .iter()
        .map(|o| o.map_or(PoleClass::NoPole, |(a, b)| joint_class(a, b)))
        .collect();
    Ok((pieces, derived_classes, unresolved))
}

fn report<L: Copy>(labels: &[L], f: impl Fn(C, C) -> Result<Vec<C>>, opts: &TaxonomyOptions) -> Result<TaxonomyReport<L>> {
    // First pass: classes of the elementary pieces.
    let (pieces, _, unresolved) = classify(labels, &f, opts, 0)?;
    let second: Vec<bool> = pieces.iter().map(|p| p.class == PoleClass::SecondOrder).collect();
    // Second pass: the sum over second-order pieces and the full integrand.
    let with_sums = |s1: C, s2: C| -> Result<Vec<C>> {
        let mut v = f(s1, s2)?;
        let sec: C = v.iter().zip(&second).filter(|(_, &m)| m).map(|(x, _)| *x).sum();
        let tot: C = v.iter().sum();
        v.push(sec);
        v.push(tot);
        Ok(v)
    };
    let (_, derived, _) = classify(labels, with_sums, opts, 2)?;
    let mut counts = [0usize; 4];
    for p in &pieces {
        if p.orders.is_some() {
            counts[p.class.order() as usize] += 1;
        }
    }
    Ok(TaxonomyReport { pieces, counts, unresolved, second_order_sum: derived[0], total: derived[1] })
}

/// Classifies every elementary piece of the DOF integrand at the origin.
pub fn dof_taxonomy(geom: &Geometry, q: f64, opts: &TaxonomyOptions) -> Result<TaxonomyReport<DofLabel>> {
    let probe = dof_pieces(geom, q, C::new(opts.r0, 0.0), opts.spectator)?;
    let labels: Vec<DofLabel> = probe.iter().map(|p| p.0).collect();
    report(&labels, |s1, s2| Ok(dof_pieces(geom, q, s1, s2)?.into_iter().map(|p| p.1).collect()), opts)
}

/// Classifies every elementary piece of the IC integrand at the origin.
pub fn ic_taxonomy(geom: &Geometry, k: [f64; 3], beta_em: f64, opts: &TaxonomyOptions) -> Result<TaxonomyReport<IcLabel>> {
    let probe = ic_pieces(geom, k, C::new(opts.r0, 0.0), opts.spectator, beta_em)?;
    let labels: Vec<IcLabel> = probe.iter().map(|p| p.0).collect();
    report(&labels, |s1, s2| Ok(ic_pieces(geom, k, s1, s2, beta_em)?.into_iter().map(|p| p.1).collect()), opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnetic_pieces_cover_levi_civita_products() {
        let mut seen = std::collections::HashSet::new();
        for piece in ThetaPiece::all().filter(|p| !p.is_electric()) {
            let (p, r, j, l, k, _) = piece.magnetic_indices();
            assert!(r != p && j != p && r != j && l != p && k != p && l != k);
            assert!(seen.insert((p, r, j, l, k)));
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn projector_is_idempotent_with_trace_two() {
        let p = transverse_projector([0.3, -1.2, 0.7]).unwrap();
        let tr: f64 = (0..3).map(|i| p[i][i]).sum();
        assert!((tr - 2.0).abs() < 1e-14);
        for i in 0..3 {
            for j in 0..3 {
                let pp: f64 = (0..3).map(|m| p[i][m] * p[m][j]).sum();
                assert!((pp - p[i][j]).abs() < 1e-14);
            }
        }
    }
}
