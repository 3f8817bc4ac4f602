//! Independent reference Green functions for a three-layer medium, built from
//! scalar transfer-matrix solutions of the TE and TM boundary-value problems.
#![allow(dead_code)]

use casimir_core::em_green::{Tensor3, C};
use casimir_core::material::{BathModel, Material, Medium};

pub fn lorentz(lambda: f64, omega: f64, gamma: f64) -> Medium {
    Material::lorentz_ohmic(lambda, omega, gamma, 1.0).unwrap().into()
}

pub fn cutoff(lambda: f64, omega: f64, gamma: f64, cut: f64) -> Medium {
    Material::new(omega, 1.0, lambda, BathModel::ohmic_lorentz_cutoff(gamma, cut), 1.0, 1.0).unwrap().into()
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Te,
    Tm,
}

/// Scalar problem `(p u′)′ − w u = δ(z − z′)` on three layers.
pub struct Layered {
    pub half: f64,
    pub k: [C; 3],
    pub p: [C; 3],
    pub s: C,
    pub q: f64,
}

fn principal_q(eps: C, s: C, q: f64) -> C {
    (eps * s * s + q * q).sqrt()
}

impl Layered {
    pub fn new(eps1: C, eps2: C, s: C, q: f64, gap: f64, mode: Mode) -> Self {
        let eps = [eps1, C::new(1.0, 0.0), eps2];
        let k = [principal_q(eps[0], s, q), principal_q(eps[1], s, q), principal_q(eps[2], s, q)];
        let p = match mode {
            Mode::Te => [C::new(1.0, 0.0); 3],
            Mode::Tm => [0, 1, 2].map(|n| eps[n] * s * s / (k[n] * k[n])),
        };
        Self { half: 0.5 * gap, k, p, s, q }
    }

    pub fn layer(&self, z: f64) -> usize {
        if z < -self.half {
            0
        } else if z > self.half {
            2
        } else {
            1
        }
    }

    /// Propagates `(u, p u′)` from `z0` to `z` inside layer `n`.
    fn step(&self, n: usize, z0: f64, u: C, flux: C, z: f64) -> (C, C) {
        let k = self.k[n];
        let x = k * (z - z0);
        let (ch, sh) = (x.cosh(), x.sinh());
        let u1 = u * ch + flux / (self.p[n] * k) * sh;
        let f1 = u * self.p[n] * k * sh + flux * ch;
        (u1, f1)
    }

    /// Solution regular at −∞: returns `(u, p u′)`.
    pub fn lower(&self, z: f64) -> (C, C) {
        let h = self.half;
        let n = self.layer(z);
        let start = (C::new(1.0, 0.0), self.p[0] * self.k[0]);
        if n == 0 {
            let e = (self.k[0] * (z + h)).exp();
            return (e, start.1 * e);
        }
        let (u, f) = self.step(1, -h, start.0, start.1, z.min(h));
        if n == 1 {
            return (u, f);
        }
        self.step(2, h, u, f, z)
    }

    /// Solution regular at +∞.
    pub fn upper(&self, z: f64) -> (C, C) {
        let h = self.half;
        let n = self.layer(z);
        let start = (C::new(1.0, 0.0), -self.p[2] * self.k[2]);
        if n == 2 {
            let e = (-self.k[2] * (z - h)).exp();
            return (e, start.1 * e);
        }
        let (u, f) = self.step(1, h, start.0, start.1, z.max(-h));
        if n == 1 {
            return (u, f);
        }
        self.step(0, -h, u, f, z)
    }

    fn wronskian(&self) -> C {
        let (a, fa) = self.lower(0.0);
        let (b, fb) = self.upper(0.0);
        a * fb - fa * b
    }

    /// `[g, ∂_z g, ∂_{z′} g, ∂_z ∂_{z′} g]` for `z ≠ z′`.
    pub fn green(&self, z: f64, zs: f64) -> [C; 4] {
        let w = self.wronskian();
        let pz = self.p[self.layer(z)];
        let ps = self.p[self.layer(zs)];
        let (lo_z, lo_s, up_z, up_s) = if z > zs {
            (None, Some(self.lower(zs)), Some(self.upper(z)), None)
        } else {
            (Some(self.lower(z)), None, None, Some(self.upper(zs)))
        };
        if z > zs {
            let (a, fa) = lo_s.unwrap();
            let (b, fb) = up_z.unwrap();
            [a * b / w, a * (fb / pz) / w, (fa / ps) * b / w, (fa / ps) * (fb / pz) / w]
        } else {
            let (a, fa) = lo_z.unwrap();
            let (b, fb) = up_s.unwrap();
            [a * b / w, (fa / pz) * b / w, a * (fb / ps) / w, (fa / pz) * (fb / ps) / w]
        }
    }

    pub fn k_at(&self, z: f64) -> C {
        self.k[self.layer(z)]
    }
}

/// Cartesian Green tensor `𝒢^{ij}(z, z′)` without local δ terms.
pub fn oracle_tensor(eps1: C, eps2: C, s: C, q: f64, qhat: [f64; 2], gap: f64, z: f64, zs: f64) -> Tensor3 {
    let te = Layered::new(eps1, eps2, s, q, gap, Mode::Te).green(z, zs);
    let tmo = Layered::new(eps1, eps2, s, q, gap, Mode::Tm);
    let tm = tmo.green(z, zs);
    let i = C::new(0.0, 1.0);
    let kz2 = tmo.k_at(z) * tmo.k_at(z);
    let ks2 = tmo.k_at(zs) * tmo.k_at(zs);
    let g_qq = tm[0];
    let g_zq = -i * q * tm[1] / kz2;
    let g_qz = i * q * tm[2] / ks2;
    let g_zz = q * q / (kz2 * ks2) * tm[3];
    let t = [qhat[1], -qhat[0], 0.0];
    let qv = [qhat[0], qhat[1], 0.0];
    let zv = [0.0, 0.0, 1.0];
    let mut out = [[C::new(0.0, 0.0); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            out[a][b] = te[0] * t[a] * t[b]
                + g_qq * qv[a] * qv[b]
                + g_qz * qv[a] * zv[b]
                + g_zq * zv[a] * qv[b]
                + g_zz * zv[a] * zv[b];
        }
    }
    out
}

pub fn max_diff(a: &Tensor3, b: &Tensor3) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}
