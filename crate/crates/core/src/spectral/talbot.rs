//! Fixed-Talbot inversion of rational Laplace transforms in multiprecision.
//!
//! The contour `s(θ) = rθ(cot θ + i)` amplifies round-off by roughly
//! `e^{rt} = e^{0.4M}`, so nodes are evaluated with `≈ 0.58 M + 64` bits.

use super::find_qbm_poles;
use crate::error::{Error, Result};
use crate::material::{qbm_green_polynomials, Material};
use astro_float::{BigFloat, Consts, RoundingMode, Sign};

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TalbotOptions {
    /// Minimum number of contour nodes.
    pub nodes: usize,
    /// The contour must cross the imaginary axis above `margin·max|Im pole|`.
    pub margin: f64,
    pub max_nodes: usize,
}

impl Default for TalbotOptions {
    fn default() -> Self {
        Self { nodes: 64, margin: 1.25, max_nodes: 20_000 }
    }
}

fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    match x.as_raw_parts() {
        Some((words, _, sign, exp, _)) => {
            let top = *words.last().unwrap() as f64;
            let v = top * 2f64.powi(exp - 64);
            if sign == Sign::Neg {
                -v
            } else {
                v
            }
        }
        None => f64::NAN,
    }
}

#[derive(Clone)]
struct Mpc {
    re: BigFloat,
    im: BigFloat,
}

struct Ctx {
    p: usize,
    cc: Consts,
}

impl Ctx {
    fn new(p: usize) -> Result<Self> {
        let cc = Consts::new().map_err(|e| Error::Domain(format!("multiprecision constants: {e:?}")))?;
        Ok(Self { p, cc })
    }

    fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    fn c(&self, re: &BigFloat, im: &BigFloat) -> Mpc {
        Mpc { re: re.clone(), im: im.clone() }
    }

    fn mul(&self, a: &Mpc, b: &Mpc) -> Mpc {
        let p = self.p;
        Mpc {
            re: a.re.mul(&b.re, p, RM).sub(&a.im.mul(&b.im, p, RM), p, RM),
            im: a.re.mul(&b.im, p, RM).add(&a.im.mul(&b.re, p, RM), p, RM),
        }
    }

    fn div(&self, a: &Mpc, b: &Mpc) -> Mpc {
        let p = self.p;
        let den = b.re.mul(&b.re, p, RM).add(&b.im.mul(&b.im, p, RM), p, RM);
        let re = a.re.mul(&b.re, p, RM).add(&a.im.mul(&b.im, p, RM), p, RM);
        let im = a.im.mul(&b.re, p, RM).sub(&a.re.mul(&b.im, p, RM), p, RM);
        Mpc { re: re.div(&den, p, RM), im: im.div(&den, p, RM) }
    }

    fn exp(&mut self, a: &Mpc) -> Mpc {
        let p = self.p;
        let m = a.re.exp(p, RM, &mut self.cc);
        let c = a.im.cos(p, RM, &mut self.cc);
        let s = a.im.sin(p, RM, &mut self.cc);
        Mpc { re: m.mul(&c, p, RM), im: m.mul(&s, p, RM) }
    }

    fn horner(&self, coeffs: &[f64], s: &Mpc) -> Mpc {
        let mut acc = Mpc { re: self.num(0.0), im: self.num(0.0) };
        for &k in coeffs.iter().rev() {
            acc = self.mul(&acc, s);
            acc.re = acc.re.add(&self.num(k), self.p, RM);
        }
        acc
    }

    fn norm_f64(&self, a: &Mpc) -> f64 {
        to_f64(&a.re).hypot(to_f64(&a.im))
    }
}

/// Fixed-Talbot estimate of `f(t)` for `F = num/den`, both real polynomials
/// listed lowest degree first.
fn talbot_point(num: &[f64], den: &[f64], t: f64, m: usize, r_scale: f64) -> Result<f64> {
    let bits = ((0.58 * m as f64) as usize + 64).max(128);
    let mut ctx = Ctx::new(bits)?;
    let p = ctx.p;
    let r = ctx.num(2.0 * m as f64 / (5.0 * t) * r_scale);
    let tt = ctx.num(t);
    let pi = ctx.cc.pi(p, RM);
    let one = ctx.num(1.0);
    let zero = ctx.num(0.0);
    let mf = ctx.num(m as f64);

    let eval = |ctx: &mut Ctx, s: &Mpc| -> Result<Mpc> {
        let d = ctx.horner(den, s);
        let scale: f64 = {
            let sn = ctx.norm_f64(s);
            den.iter().enumerate().map(|(k, c)| c.abs() * sn.powi(k as i32)).sum()
        };
        if ctx.norm_f64(&d) <= 1e-30 * scale {
            return Err(Error::Singularity { s: num_complex::Complex64::new(to_f64(&s.re), to_f64(&s.im)), context: "Talbot node on a pole".into() });
        }
        Ok(ctx.div(&ctx.horner(num, s), &d))
    };

    // θ = 0 node.
    let s0 = ctx.c(&r, &zero);
    let f0 = eval(&mut ctx, &s0)?;
    let e0 = ctx.exp(&ctx.c(&r.mul(&tt, p, RM), &zero));
    let half = ctx.num(0.5);
    let mut sum = ctx.mul(&f0, &e0).re.mul(&half, p, RM);

    for k in 1..m {
        let theta = pi.mul(&ctx.num(k as f64), p, RM).div(&mf, p, RM);
        let cot = theta.cos(p, RM, &mut ctx.cc).div(&theta.sin(p, RM, &mut ctx.cc), p, RM);
        let tc = theta.mul(&cot, p, RM);
        let s = ctx.c(&r.mul(&tc, p, RM), &r.mul(&theta, p, RM));
        let sigma = theta.add(&tc.sub(&one, p, RM).mul(&cot, p, RM), p, RM);
        let fs = eval(&mut ctx, &s)?;
        let ts = ctx.c(&s.re.mul(&tt, p, RM), &s.im.mul(&tt, p, RM));
        let e = ctx.exp(&ts);
        let w = ctx.c(&one, &sigma);
        let term = ctx.mul(&ctx.mul(&e, &fs), &w);
        sum = sum.add(&term.re, p, RM);
    }
    Ok(to_f64(&sum.mul(&r, p, RM).div(&mf, p, RM)))
}

/// Inverse Laplace transform of `num/den` on `t_grid`. `pole_height` is the
/// largest `|Im|` among the poles of the transform.
pub fn invert_laplace_rational(
    num: &[f64],
    den: &[f64],
    pole_height: f64,
    t_grid: &[f64],
    opts: &TalbotOptions,
) -> Result<Vec<f64>> {
    let degree_gap = den.len() as i64 - num.len() as i64;
    t_grid
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("time must be finite and ≥ 0, got {t}")));
            }
            if t == 0.0 {
                // Initial-value theorem: lim s·F(s) vanishes when the degree gap exceeds one.
                return if degree_gap >= 2 {
                    Ok(0.0)
                } else {
                    Err(Error::Domain("f(0) is not finite for this transform".into()))
                };
            }
            let r_min = opts.margin * pole_height;
            let m = opts.nodes.max((2.5 * r_min * t).ceil() as usize);
            if m > opts.max_nodes {
                return Err(Error::InvalidParameter(format!("t = {t} needs {m} Talbot nodes (limit {})", opts.max_nodes)));
            }
            let mut scale = 1.0;
            for _ in 0..5 {
                match talbot_point(num, den, t, m, scale) {
                    Err(Error::Singularity { .. }) => scale *= 1.01,
                    other => return other,
                }
            }
            Err(Error::Singularity { s: num_complex::Complex64::new(0.0, 0.0), context: format!("Talbot contour kept hitting poles at t = {t}") })
        })
        .collect()
}

/// Time-domain oscillator propagator `G(t)` on a sorted grid of `t ≥ 0`.
pub fn invert_laplace_qbm(mat: &Material, t_grid: &[f64]) -> Result<Vec<f64>> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("time grid must be sorted".into()));
    }
    let (num, den) = qbm_green_polynomials(mat);
    let height = find_qbm_poles(mat)?.roots.iter().map(|r| r.s.im.abs()).fold(0.0, f64::max);
    invert_laplace_rational(&num, &den, height, t_grid, &TalbotOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn raw_conversion() {
        for x in [3.0, -0.15625, 1e-30, 7.25e20] {
            assert_relative_eq!(to_f64(&BigFloat::from_f64(x, 128)), x, max_relative = 1e-15);
        }
    }

    #[test]
    fn exponential_transform() {
        // 1/(s + 1) ↔ e^{−t}
        let v = invert_laplace_rational(&[1.0], &[1.0, 1.0], 0.0, &[0.5, 2.0, 10.0], &TalbotOptions::default()).unwrap();
        for (t, f) in [0.5f64, 2.0, 10.0].iter().zip(v) {
            assert_relative_eq!(f, (-t).exp(), max_relative = 1e-12);
        }
    }
}
