//! Laplace-domain electromagnetic Green tensor of the two-half-space geometry.
//!
//! Plate 1 (`L`) fills `z < −l/2`, plate 2 (`R`) fills `z > l/2`, the gap is
//! vacuum and the origin sits mid-gap. After a Fourier transform parallel to
//! the plates every block is a finite sum of plane-wave terms
//!
//! ```text
//! extra · coeff_i · source_b · exp(a (z − z_a)) · exp(b (z′ − z_b))
//! ```
//!
//! with `z` the field point and `z′` the source point. Anchors `z_a`, `z_b`
//! are chosen so every exponential stays bounded. Curls of `coeff` and of
//! `source` are stored in closed form so derivatives are exact.

use crate::error::{Error, Result};
use crate::material::Medium;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C = Complex64;
pub type Vec3 = [C; 3];
pub type Tensor3 = [[C; 3]; 3];

const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::TE, Polarization::TM];

    pub fn index(self) -> usize {
        match self {
            Polarization::TE => 0,
            Polarization::TM => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Plate {
    L,
    R,
}

impl Plate {
    pub const BOTH: [Plate; 2] = [Plate::L, Plate::R];

    pub fn index(self) -> usize {
        match self {
            Plate::L => 0,
            Plate::R => 1,
        }
    }
}

/// Region holding the source point of a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    L,
    R,
    Gap,
}

impl From<Plate> for Region {
    fn from(p: Plate) -> Self {
        match p {
            Plate::L => Region::L,
            Plate::R => Region::R,
        }
    }
}

/// Restriction of a bulk term to one side of the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    None,
    /// Valid for `z > z′`.
    Above,
    /// Valid for `z < z′`.
    Below,
}

/// Choice of square-root branch for the normal wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Principal root, `Re q ≥ 0`; the retarded limit on the imaginary axis.
    Retarded,
    /// `s·√(ε + Q²/s²)`: analytic across the imaginary axis away from the
    /// finite cuts, used to approach points from `Re s < 0`.
    Continued,
}

/// Lifshitz configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub gap: f64,
    pub left: Medium,
    pub right: Medium,
    /// Field point inside the gap.
    pub z_field: f64,
}

impl Geometry {
    pub fn new(gap: f64, left: Medium, right: Medium) -> Result<Self> {
        let g = Self { gap, left, right, z_field: 0.0 };
        g.validate()?;
        Ok(g)
    }

    pub fn with_z_field(mut self, z: f64) -> Result<Self> {
        self.z_field = z;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return Err(Error::InvalidParameter(format!("gap must be > 0, got {}", self.gap)));
        }
        let h = 0.5 * self.gap;
        if !(self.z_field > -h && self.z_field < h) {
            return Err(Error::InvalidParameter(format!("field point {} outside the gap", self.z_field)));
        }
        for m in [&self.left, &self.right] {
            if let Some(mat) = m.material() {
                mat.validate()?;
            }
        }
        Ok(())
    }

    pub fn medium(&self, plate: Plate) -> &Medium {
        match plate {
            Plate::L => &self.left,
            Plate::R => &self.right,
        }
    }

    /// Same configuration seen through the mirror `z → −z`.
    pub fn mirrored(&self) -> Self {
        Self { gap: self.gap, left: self.right.clone(), right: self.left.clone(), z_field: -self.z_field }
    }
}

/// `√(ε s² + Q²)` with `Re ≥ 0`.
///
/// When the radicand lies on the negative real axis (within round-off) the
/// retarded limit `s → s + 0⁺` selects the sign of the imaginary part.
pub fn qz(eps: C, s: C, q: f64) -> C {
    let arg = eps * s * s + q * q;
    if arg.re < 0.0 && arg.im.abs() <= 1e-14 * arg.re.abs() {
        let eta = 1e-9 * s.norm().max(1.0);
        let shifted = eps * (s + eta) * (s + eta) + q * q;
        let sign = if shifted.im < 0.0 { -1.0 } else { 1.0 };
        return C::new(0.0, sign * (-arg.re).sqrt());
    }
    arg.sqrt()
}

/// `s·√(ε + Q²/s²)`, the branch whose cuts are finite segments.
pub fn qz_continued(eps: C, s: C, q: f64) -> Result<C> {
    if s.norm() == 0.0 {
        return Err(Error::Singularity { s, context: "continued branch undefined at s = 0".into() });
    }
    Ok(s * (eps + q * q / (s * s)).sqrt())
}

fn qz_branch(eps: C, s: C, q: f64, branch: Branch) -> Result<C> {
    match branch {
        Branch::Retarded => Ok(qz(eps, s, q)),
        Branch::Continued => qz_continued(eps, s, q),
    }
}

/// `Q̂ × ẑ` for `Q̂ = (cx, cy, 0)`.
pub fn te_vector(qhat: [f64; 2]) -> Vec3 {
    [C::new(qhat[1], 0.0), C::new(-qhat[0], 0.0), ZERO]
}

/// `(Q ẑ − σ i q Q̂)/(√ε i s)` for a wave travelling along `σ ẑ`.
pub fn tm_vector(sqrt_eps: C, s: C, q_mag: f64, qn: C, qhat: [f64; 2], sigma: f64) -> Vec3 {
    let den = sqrt_eps * I * s;
    let t = -sigma * I * qn;
    [t * qhat[0] / den, t * qhat[1] / den, C::new(q_mag, 0.0) / den]
}

/// TE and TM polarization vectors of a wave travelling along `sign·ẑ`.
pub fn polarization_vectors(eps: C, s: C, q: f64, qhat: [f64; 2], sign: f64) -> Result<(Vec3, Vec3)> {
    if s.norm() == 0.0 {
        return Err(Error::Singularity { s, context: "TM polarization vector has a pole at s = 0".into() });
    }
    let qn = qz(eps, s, q);
    Ok((te_vector(qhat), tm_vector(eps.sqrt(), s, q, qn, qhat, sign.signum())))
}

/// Curl of a plane-wave term `v·exp(iQ·x∥ + a z)` with `a = −σ q_n`.
fn field_curl(pol: Polarization, q_mag: f64, qhat: [f64; 2], a: C, s: C, sqrt_eps: C) -> Vec3 {
    match pol {
        Polarization::TE => [a * qhat[0], a * qhat[1], -I * q_mag],
        Polarization::TM => {
            let t = te_vector(qhat);
            let k = -sqrt_eps * s;
            [k * t[0], k * t[1], k * t[2]]
        }
    }
}

fn neg(v: Vec3) -> Vec3 {
    [-v[0], -v[1], -v[2]]
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Bilinear (not Hermitian) dot product.
pub fn dot(a: &Vec3, b: &Vec3) -> C {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `Σ_i Λ_i a_i b_i` with `Λ = diag(1, 1, −1)`.
pub fn lambda_dot(a: &Vec3, b: &Vec3) -> C {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

/// Reflection and transmission coefficients of one plate, seen from the gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fresnel {
    pub r_te: C,
    pub r_tm: C,
    /// Plate to gap.
    pub t_te: C,
    pub t_tm: C,
}

impl Fresnel {
    pub fn r(&self, pol: Polarization) -> C {
        match pol {
            Polarization::TE => self.r_te,
            Polarization::TM => self.r_tm,
        }
    }

    pub fn t(&self, pol: Polarization) -> C {
        match pol {
            Polarization::TE => self.t_te,
            Polarization::TM => self.t_tm,
        }
    }
}

fn fresnel_from(eps: C, sqrt_eps: C, q: C, qn: C, s: C) -> Result<Fresnel> {
    let den_te = q + qn;
    let den_tm = eps * q + qn;
    let scale = q.norm() + qn.norm() + eps.norm() * q.norm();
    if den_te.norm() <= 1e-300 || den_tm.norm() <= 1e-15 * scale {
        return Err(Error::Singularity { s, context: "vanishing Fresnel denominator".into() });
    }
    Ok(Fresnel {
        r_te: (q - qn) / den_te,
        r_tm: (eps * q - qn) / den_tm,
        t_te: 2.0 * qn / den_te,
        t_tm: 2.0 * sqrt_eps * qn / den_tm,
    })
}

/// Fresnel coefficients between the vacuum gap and a plate.
pub fn fresnel(matside: &Medium, s: C, q: f64) -> Result<Fresnel> {
    let eps = matside.eps(s)?;
    fresnel_from(eps, eps.sqrt(), qz(C::new(1.0, 0.0), s, q), qz(eps, s, q), s)
}

/// All interface data of the geometry at one `(s, Q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interfaces {
    pub s: C,
    pub q_mag: f64,
    pub half: f64,
    /// Gap normal wavenumber.
    pub q: C,
    pub eps: [C; 2],
    pub sqrt_eps: [C; 2],
    pub qn: [C; 2],
    pub fresnel: [Fresnel; 2],
    /// `exp(−q l)`.
    pub phase: C,
    /// `D_μ` indexed by polarization.
    pub d: [C; 2],
}

impl Interfaces {
    pub fn new(geom: &Geometry, s: C, q: f64, branch: Branch) -> Result<Self> {
        let eps = [geom.left.eps(s)?, geom.right.eps(s)?];
        Self::from_eps(eps, s, q, geom.gap, branch)
    }

    pub fn from_eps(eps: [C; 2], s: C, q: f64, gap: f64, branch: Branch) -> Result<Self> {
        let one = C::new(1.0, 0.0);
        let qg = qz_branch(one, s, q, branch)?;
        let qn = [qz_branch(eps[0], s, q, branch)?, qz_branch(eps[1], s, q, branch)?];
        let sqrt_eps = [eps[0].sqrt(), eps[1].sqrt()];
        let f = [
            fresnel_from(eps[0], sqrt_eps[0], qg, qn[0], s)?,
            fresnel_from(eps[1], sqrt_eps[1], qg, qn[1], s)?,
        ];
        let phase = (-qg * gap).exp();
        let p2 = phase * phase;
        let d = [1.0 - f[0].r_te * f[1].r_te * p2, 1.0 - f[0].r_tm * f[1].r_tm * p2];
        Ok(Self { s, q_mag: q, half: 0.5 * gap, q: qg, eps, sqrt_eps, qn, fresnel: f, phase, d })
    }

    /// Rebuilds the Fresnel data after `sqrt_eps` was changed.
    pub fn refresh(&mut self) -> Result<()> {
        for n in 0..2 {
            self.fresnel[n] = fresnel_from(self.eps[n], self.sqrt_eps[n], self.q, self.qn[n], self.s)?;
        }
        Ok(())
    }
}

/// Multiple-reflection denominator `D_μ = 1 − r₁ r₂ e^{−2 q l}`.
pub fn dmu(geom: &Geometry, s: C, q: f64, pol: Polarization) -> Result<C> {
    Ok(Interfaces::new(geom, s, q, Branch::Retarded)?.d[pol.index()])
}

/// One plane-wave term of a Green block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenTerm {
    pub polarization: Polarization,
    pub plate: Region,
    pub coeff: Vec3,
    pub curl: Vec3,
    /// Field-side exponent `a`.
    pub exp_z: C,
    pub z_anchor: f64,
    pub source: Vec3,
    pub source_curl: Vec3,
    /// Source-side exponent `b`.
    pub exp_src: C,
    pub src_anchor: f64,
    pub extra: C,
    pub step: Step,
}

impl GreenTerm {
    /// Scalar `extra·exp(a(z − z_a) + b(z′ − z_b))`, honouring the step.
    pub fn weight(&self, z: f64, z_src: f64) -> C {
        let active = match self.step {
            Step::None => true,
            Step::Above => z > z_src,
            Step::Below => z < z_src,
        };
        if !active {
            return ZERO;
        }
        self.extra * (self.exp_z * (z - self.z_anchor) + self.exp_src * (z_src - self.src_anchor)).exp()
    }

    /// Field-side derivative vector `(iQ cx, iQ cy, a)`.
    pub fn field_gradient(&self, q_mag: f64, qhat: [f64; 2]) -> Vec3 {
        [I * q_mag * qhat[0], I * q_mag * qhat[1], self.exp_z]
    }

    /// Source-side derivative vector `(−iQ cx, −iQ cy, b)`.
    pub fn source_gradient(&self, q_mag: f64, qhat: [f64; 2]) -> Vec3 {
        [-I * q_mag * qhat[0], -I * q_mag * qhat[1], self.exp_src]
    }
}

/// Sum of plane-wave terms representing `𝒢^{ij}(z, z′; Q, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenBlock {
    pub terms: Vec<GreenTerm>,
    pub s: C,
    pub q: f64,
    pub qhat: [f64; 2],
    /// Set when the local `−δ_{z3}δ_{b3}δ(z − z′)/s²` term belongs to the
    /// block. It is never evaluated numerically.
    pub delta_zz: bool,
    pub half: f64,
    /// Field point used by contractions at coincidence.
    pub z_field: f64,
}

impl GreenBlock {
    /// `𝒢^{ij}(z, z′)` excluding the local δ term.
    pub fn tensor(&self, z: f64, z_src: f64) -> Tensor3 {
        let mut out = [[ZERO; 3]; 3];
        for t in &self.terms {
            let w = t.weight(z, z_src);
            if w == ZERO {
                continue;
            }
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += w * t.coeff[i] * t.source[j];
                }
            }
        }
        out
    }

    pub fn at(mut self, z: f64) -> Self {
        self.z_field = z;
        self
    }

    pub fn polarization_part(&self, pol: Polarization) -> GreenBlock {
        GreenBlock {
            terms: self.terms.iter().copied().filter(|t| t.polarization == pol).collect(),
            delta_zz: self.delta_zz && pol == Polarization::TM,
            ..self.clone()
        }
    }
}

fn wave_vector(ifc: &Interfaces, pol: Polarization, medium: Option<usize>, qhat: [f64; 2], sigma: f64) -> (Vec3, C, C) {
    let (qn, sqrt_eps) = match medium {
        None => (ifc.q, C::new(1.0, 0.0)),
        Some(n) => (ifc.qn[n], ifc.sqrt_eps[n]),
    };
    let v = match pol {
        Polarization::TE => te_vector(qhat),
        Polarization::TM => tm_vector(sqrt_eps, ifc.s, ifc.q_mag, qn, qhat, sigma),
    };
    (v, qn, sqrt_eps)
}

/// Term builder: field wave `σ_f` in the gap, source wave `σ_s` in `src_medium`.
#[allow(clippy::too_many_arguments)]
fn make_term(
    ifc: &Interfaces,
    pol: Polarization,
    qhat: [f64; 2],
    region: Region,
    sigma_f: f64,
    z_anchor: f64,
    src_medium: Option<usize>,
    sigma_s: f64,
    src_anchor: f64,
    extra: C,
    step: Step,
) -> GreenTerm {
    let (coeff, q, _) = wave_vector(ifc, pol, None, qhat, sigma_f);
    let a = -sigma_f * q;
    let curl = field_curl(pol, ifc.q_mag, qhat, a, ifc.s, C::new(1.0, 0.0));
    let (source, qs, sqrt_eps_s) = wave_vector(ifc, pol, src_medium, qhat, sigma_s);
    // The source factor grows like exp(σ_s q z′); its curl is minus the curl
    // of the wave with exponent −σ_s q.
    let b = sigma_s * qs;
    let source_curl = neg(field_curl(pol, ifc.q_mag, qhat, -b, ifc.s, sqrt_eps_s));
    GreenTerm {
        polarization: pol,
        plate: region,
        coeff,
        curl,
        exp_z: a,
        z_anchor,
        source,
        source_curl,
        exp_src: b,
        src_anchor,
        extra,
        step,
    }
}

fn check_nonzero_s(s: C) -> Result<()> {
    if s.norm() == 0.0 {
        return Err(Error::Singularity { s, context: "Green tensor has a pole at s = 0".into() });
    }
    Ok(())
}

/// Field point in the gap, source inside `plate`.
pub fn green_gap_from_plate(geom: &Geometry, plate: Plate, s: C, q: f64, qhat: [f64; 2]) -> Result<GreenBlock> {
    check_nonzero_s(s)?;
    let ifc = Interfaces::new(geom, s, q, Branch::Retarded)?;
    Ok(green_gap_from_plate_with(&ifc, plate, qhat)?.at(geom.z_field))
}

pub fn green_gap_from_plate_with(ifc: &Interfaces, plate: Plate, qhat: [f64; 2]) -> Result<GreenBlock> {
    let h = ifc.half;
    let n = plate.index();
    let other = 1 - n;
    let mut terms = Vec::with_capacity(4);
    for pol in Polarization::BOTH {
        let p = pol.index();
        let t = ifc.fresnel[n].t(pol);
        let r_other = ifc.fresnel[other].r(pol);
        let base = -t / (2.0 * ifc.qn[n] * ifc.d[p]);
        match plate {
            Plate::L => {
                terms.push(make_term(ifc, pol, qhat, Region::L, 1.0, -h, Some(0), 1.0, -h, base, Step::None));
                terms.push(make_term(
                    ifc,
                    pol,
                    qhat,
                    Region::L,
                    -1.0,
                    h,
                    Some(0),
                    1.0,
                    -h,
                    base * r_other * ifc.phase,
                    Step::None,
                ));
            }
            Plate::R => {
                terms.push(make_term(ifc, pol, qhat, Region::R, -1.0, h, Some(1), -1.0, h, base, Step::None));
                terms.push(make_term(
                    ifc,
                    pol,
                    qhat,
                    Region::R,
                    1.0,
                    -h,
                    Some(1),
                    -1.0,
                    h,
                    base * r_other * ifc.phase,
                    Step::None,
                ));
            }
        }
    }
    Ok(GreenBlock { terms, s: ifc.s, q: ifc.q_mag, qhat, delta_zz: false, half: h, z_field: 0.0 })
}

/// Field and source points in the gap: bulk (free) part plus the four
/// multiply-reflected terms per polarization.
pub fn green_gap_bulk_scattered(geom: &Geometry, s: C, q: f64, qhat: [f64; 2]) -> Result<GreenBlock> {
    check_nonzero_s(s)?;
    let ifc = Interfaces::new(geom, s, q, Branch::Retarded)?;
    Ok(green_gap_bulk_scattered_with(&ifc, qhat, true).at(geom.z_field))
}

pub fn green_gap_bulk_scattered_with(ifc: &Interfaces, qhat: [f64; 2], include_bulk: bool) -> GreenBlock {
    let h = ifc.half;
    let mut terms = Vec::with_capacity(12);
    for pol in Polarization::BOTH {
        let p = pol.index();
        let r1 = ifc.fresnel[0].r(pol);
        let r2 = ifc.fresnel[1].r(pol);
        let base = -1.0 / (2.0 * ifc.q * ifc.d[p]);
        let rr = r1 * r2 * ifc.phase;
        if include_bulk {
            let b = -1.0 / (2.0 * ifc.q);
            terms.push(make_term(ifc, pol, qhat, Region::Gap, 1.0, 0.0, None, 1.0, 0.0, b, Step::Above));
            terms.push(make_term(ifc, pol, qhat, Region::Gap, -1.0, 0.0, None, -1.0, 0.0, b, Step::Below));
        }
        terms.push(make_term(ifc, pol, qhat, Region::Gap, 1.0, -h, None, 1.0, h, base * rr, Step::None));
        terms.push(make_term(ifc, pol, qhat, Region::Gap, 1.0, -h, None, -1.0, -h, base * r1, Step::None));
        terms.push(make_term(ifc, pol, qhat, Region::Gap, -1.0, h, None, 1.0, h, base * r2, Step::None));
        terms.push(make_term(ifc, pol, qhat, Region::Gap, -1.0, h, None, -1.0, -h, base * rr, Step::None));
    }
    GreenBlock { terms, s: ifc.s, q: ifc.q_mag, qhat, delta_zz: include_bulk, half: h, z_field: 0.0 }
}

pub fn source_interval(region: Region, step: Step, z: f64, half: f64) -> (f64, f64) {
    let (mut lo, mut hi) = match region {
        Region::L => (f64::NEG_INFINITY, -half),
        Region::R => (half, f64::INFINITY),
        Region::Gap => (-half, half),
    };
    match step {
        Step::None => {}
        Step::Above => hi = hi.min(z),
        Step::Below => lo = lo.max(z),
    }
    (lo, hi)
}

/// `∫_{lo}^{hi} exp(B z′ − c) dz′` with infinite ends allowed when convergent.
fn exp_integral(bsum: C, c: C, lo: f64, hi: f64) -> Result<C> {
    if hi <= lo {
        return Ok(ZERO);
    }
    let upper = if hi.is_infinite() {
        if bsum.re >= 0.0 {
            return Err(Error::Domain(format!("source integral diverges at +∞ (exponent {bsum})")));
        }
        ZERO
    } else {
        (bsum * hi - c).exp()
    };
    let lower = if lo.is_infinite() {
        if bsum.re <= 0.0 {
            return Err(Error::Domain(format!("source integral diverges at −∞ (exponent {bsum})")));
        }
        ZERO
    } else {
        (bsum * lo - c).exp()
    };
    if bsum.norm() < 1e-12 {
        // exp(−c)·(hi − lo) to first order.
        let mid = 0.5 * (hi + lo);
        return Ok((bsum * mid - c).exp() * (hi - lo));
    }
    Ok((upper - lower) / bsum)
}

fn pair_source_integral(t1: &GreenTerm, t2: &GreenTerm, z: f64, half: f64) -> Result<C> {
    if t1.plate != t2.plate {
        return Err(Error::Usage("paired terms have sources in different regions".into()));
    }
    let (lo1, hi1) = source_interval(t1.plate, t1.step, z, half);
    let (lo2, hi2) = source_interval(t2.plate, t2.step, z, half);
    let (lo, hi) = (lo1.max(lo2), hi1.min(hi2));
    let bsum = t1.exp_src + t2.exp_src;
    let c = t1.exp_src * t1.src_anchor + t2.exp_src * t2.src_anchor;
    exp_integral(bsum, c, lo, hi)
}

pub fn check_pairing(b1: &GreenBlock, b2: &GreenBlock) -> Result<()> {
    let dq = (b1.q - b2.q).abs();
    let dh = (b1.qhat[0] + b2.qhat[0]).abs() + (b1.qhat[1] + b2.qhat[1]).abs();
    if dq > 1e-12 * b1.q.max(1.0) || dh > 1e-12 {
        return Err(Error::Usage(format!(
            "blocks must carry Q and −Q (got |Q| {} vs {}, directions {:?} vs {:?})",
            b1.q, b2.q, b1.qhat, b2.qhat
        )));
    }
    Ok(())
}

/// `Σ_b ∫ dz′ 𝒢^{jb}(z₁, z′; Q, s₁) 𝒢^{kb}(z₂, z′; −Q, s₂)` over the source
/// region shared by both blocks.
pub fn z_integrated_pair_blocks(b1: &GreenBlock, b2: &GreenBlock, z1: f64, z2: f64) -> Result<Tensor3> {
    check_pairing(b1, b2)?;
    let half = b1.half;
    let mut out = [[ZERO; 3]; 3];
    for t1 in &b1.terms {
        for t2 in &b2.terms {
            if t1.polarization != t2.polarization {
                continue;
            }
            let sd = dot(&t1.source, &t2.source);
            if sd == ZERO {
                continue;
            }
            let zint = pair_integral_at(t1, t2, z1, z2, half)?;
            let w = t1.extra * t2.extra * sd * zint;
            for j in 0..3 {
                for k in 0..3 {
                    out[j][k] += w * t1.coeff[j] * t2.coeff[k];
                }
            }
        }
    }
    Ok(out)
}

pub fn pair_integral_at(t1: &GreenTerm, t2: &GreenTerm, z1: f64, z2: f64, half: f64) -> Result<C> {
    if t1.step != Step::None || t2.step != Step::None {
        if z1 != z2 {
            return Err(Error::Usage("bulk terms are paired only at coincident field points".into()));
        }
    }
    let field = (t1.exp_z * (z1 - t1.z_anchor) + t2.exp_z * (z2 - t2.z_anchor)).exp();
    Ok(field * pair_source_integral(t1, t2, z1, half)?)
}

/// z′-integrated pair of gap-from-plate blocks at the geometry's field point.
pub fn z_integrated_pair(geom: &Geometry, plate: Plate, s1: C, s2: C, q: f64, qhat: [f64; 2]) -> Result<Tensor3> {
    let b1 = green_gap_from_plate(geom, plate, s1, q, qhat)?;
    let b2 = green_gap_from_plate(geom, plate, s2, q, [-qhat[0], -qhat[1]])?;
    z_integrated_pair_blocks(&b1, &b2, geom.z_field, geom.z_field)
}

/// Flattened 3×3 tensor helper for tests and reports.
pub fn tensor_max_abs(t: &Tensor3) -> f64 {
    t.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

/// One term of the closed-form source-phase integral
/// `∫ dz′ 𝒢^{jb}(z₁, z′) e^{i k_z z′}`, as a function of `z₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcTerm {
    /// `None` marks the local longitudinal term.
    pub polarization: Option<Polarization>,
    pub coeff: Vec3,
    pub source: Vec3,
    pub exp_z: C,
    pub z_anchor: f64,
    pub scalar: C,
}

impl IcTerm {
    pub fn weight(&self, z: f64) -> C {
        self.scalar * (self.exp_z * (z - self.z_anchor)).exp()
    }

    pub fn gradient(&self, q_mag: f64, qhat: [f64; 2]) -> Vec3 {
        [I * q_mag * qhat[0], I * q_mag * qhat[1], self.exp_z]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcBlock {
    pub terms: Vec<IcTerm>,
    pub s: C,
    pub q: f64,
    pub qhat: [f64; 2],
    pub kz: f64,
}

impl IcBlock {
    pub fn tensor(&self, z: f64) -> Tensor3 {
        let mut out = [[ZERO; 3]; 3];
        for t in &self.terms {
            let w = t.weight(z);
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += w * t.coeff[i] * t.source[j];
                }
            }
        }
        out
    }
}

/// Appends the closed-form source-phase integrals of every term of `block`.
pub fn ic_terms_of_block(block: &GreenBlock, kz: f64, half: f64, out: &mut Vec<IcTerm>) -> Result<()> {
    let ikz = C::new(0.0, kz);
    for t in &block.terms {
        let beta = t.exp_src + ikz;
        let scale = t.exp_src.norm() + kz.abs();
        if beta.norm() <= 1e-13 * scale.max(1e-300) {
            return Err(Error::Singularity {
                s: block.s,
                context: format!("denominator b + i k_z vanishes (b = {})", t.exp_src),
            });
        }
        let (lo, hi) = source_interval(t.plate, Step::None, 0.0, half);
        let push_bound = |out: &mut Vec<IcTerm>, bound: f64, sign: f64| {
            let scalar = sign * t.extra * (beta * bound - t.exp_src * t.src_anchor).exp() / beta;
            out.push(IcTerm {
                polarization: Some(t.polarization),
                coeff: t.coeff,
                source: t.source,
                exp_z: t.exp_z,
                z_anchor: t.z_anchor,
                scalar,
            });
        };
        let push_moving = |out: &mut Vec<IcTerm>, sign: f64| {
            let scalar = sign * t.extra * (-t.exp_z * t.z_anchor - t.exp_src * t.src_anchor).exp() / beta;
            out.push(IcTerm {
                polarization: Some(t.polarization),
                coeff: t.coeff,
                source: t.source,
                exp_z: t.exp_z + beta,
                z_anchor: 0.0,
                scalar,
            });
        };
        match t.step {
            Step::None => {
                if hi.is_finite() {
                    if lo.is_infinite() && beta.re <= 0.0 {
                        return Err(Error::Domain("plate source integral diverges".into()));
                    }
                    push_bound(out, hi, 1.0);
                }
                if lo.is_finite() {
                    if hi.is_infinite() && beta.re >= 0.0 {
                        return Err(Error::Domain("plate source integral diverges".into()));
                    }
                    push_bound(out, lo, -1.0);
                }
            }
            Step::Above => {
                push_moving(out, 1.0);
                push_bound(out, lo, -1.0);
            }
            Step::Below => {
                push_bound(out, hi, 1.0);
                push_moving(out, -1.0);
            }
        }
    }
    Ok(())
}

/// Closed form of `∫ dz′ 𝒢^{jb}(z₁, z′; Q, s) e^{i k_z z′}` over all space.
pub fn ic_z_terms_with(ifc: &Interfaces, qhat: [f64; 2], kz: f64) -> Result<IcBlock> {
    let mut terms = Vec::with_capacity(40);
    for plate in Plate::BOTH {
        ic_terms_of_block(&green_gap_from_plate_with(ifc, plate, qhat)?, kz, ifc.half, &mut terms)?;
    }
    ic_terms_of_block(&green_gap_bulk_scattered_with(ifc, qhat, true), kz, ifc.half, &mut terms)?;
    let z = [ZERO, ZERO, C::new(1.0, 0.0)];
    terms.push(IcTerm {
        polarization: None,
        coeff: z,
        source: z,
        exp_z: C::new(0.0, kz),
        z_anchor: 0.0,
        scalar: -1.0 / (ifc.s * ifc.s),
    });
    Ok(IcBlock { terms, s: ifc.s, q: ifc.q_mag, qhat, kz })
}

pub fn ic_z_terms(geom: &Geometry, s: C, q: f64, qhat: [f64; 2], kz: f64, branch: Branch) -> Result<IcBlock> {
    check_nonzero_s(s)?;
    let ifc = Interfaces::new(geom, s, q, branch)?;
    ic_z_terms_with(&ifc, qhat, kz)
}

/// The source-phase integral evaluated at the geometry's field point.
pub fn ic_z_integral(geom: &Geometry, s: C, q: f64, qhat: [f64; 2], kz: f64) -> Result<Tensor3> {
    Ok(ic_z_terms(geom, s, q, qhat, kz, Branch::Retarded)?.tensor(geom.z_field))
}
