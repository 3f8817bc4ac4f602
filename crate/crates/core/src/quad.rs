//! Adaptive 15-point Gauss–Kronrod quadrature for vector-valued integrands.
//!
//! The integrand returns a fixed-size array. Subdivision is driven by the
//! error of one linear functional of that array, so components that cancel
//! inside the functional do not force needless refinement.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 0.0, max_subdivisions: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    /// Error estimate of the weighted functional.
    pub err: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    err: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn dot<const N: usize>(w: &[f64; N], v: &[f64; N]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// One Gauss–Kronrod 15-point panel: returns (integral, functional error).
pub fn gk15<const N: usize, F>(f: &F, a: f64, b: f64, weights: &[f64; N]) -> Result<([f64; N], f64)>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut vals = [[0.0; N]; 15];
    vals[7] = f(c)?;
    for j in 0..7 {
        let dx = h * XGK[j];
        vals[j] = f(c - dx)?;
        vals[14 - j] = f(c + dx)?;
    }
    let wk = |j: usize| if j < 8 { WGK[j] } else { WGK[14 - j] };
    let mut res_k = [0.0; N];
    for (j, v) in vals.iter().enumerate() {
        let w = wk(j);
        for (r, x) in res_k.iter_mut().zip(v) {
            *r += w * x;
        }
    }
    let fc: Vec<f64> = vals.iter().map(|v| dot(weights, v)).collect();
    let mut kf = 0.0;
    let mut gf = 0.0;
    let mut absf = 0.0;
    for j in 0..15 {
        kf += wk(j) * fc[j];
        absf += wk(j) * fc[j].abs();
    }
    for (i, &w) in WG.iter().enumerate() {
        let j = 2 * i + 1;
        if j == 7 {
            gf += w * fc[7];
        } else {
            gf += w * (fc[j] + fc[14 - j]);
        }
    }
    let mean = 0.5 * kf;
    let mut asc = 0.0;
    for j in 0..15 {
        asc += wk(j) * (fc[j] - mean).abs();
    }
    let mut err = ((kf - gf) * h).abs();
    let resasc = asc * h.abs();
    let resabs = absf * h.abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    for r in res_k.iter_mut() {
        *r *= h;
    }
    Ok((res_k, err))
}

/// Globally adaptive integration on `[a, b]` (finite).
pub fn integrate<const N: usize, F>(
    f: F,
    a: f64,
    b: f64,
    weights: &[f64; N],
    opts: &QuadOptions,
) -> Result<Integral<N>>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits [{a}, {b}] not finite")));
    }
    if a == b {
        return Ok(Integral { value: [0.0; N], err: 0.0, evals: 0 });
    }
    let (v, e) = gk15(&f, a, b, weights)?;
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let mut total = v;
    let mut err_sum = e;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * dot(weights, &total).abs());
        if err_sum <= tol {
            break;
        }
        if heap.len() >= opts.max_subdivisions {
            let worst = heap.peek().expect("non-empty heap");
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] after {} panels: error {err_sum:.3e} > tol {tol:.3e}; worst panel [{}, {}] err {:.3e}",
                heap.len(),
                worst.a,
                worst.b,
                worst.err
            )));
        }
        let p = heap.pop().expect("non-empty heap");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            return Err(Error::Quadrature(format!(
                "panel [{}, {}] cannot be bisected further (err {:.3e})",
                p.a, p.b, p.err
            )));
        }
        let (v1, e1) = gk15(&f, p.a, m, weights)?;
        let (v2, e2) = gk15(&f, m, p.b, weights)?;
        evals += 30;
        for k in 0..N {
            total[k] += v1[k] + v2[k] - p.value[k];
        }
        err_sum += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
    }
    // Re-sum from the panels so the result does not carry update round-off.
    let mut panels: Vec<Panel<N>> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [0.0; N];
    let mut err = 0.0;
    for p in &panels {
        for k in 0..N {
            value[k] += p.value[k];
        }
        err += p.err;
    }
    Ok(Integral { value, err, evals })
}

/// Integral of a scalar function on `[a, b]`.
pub fn integrate_scalar<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = integrate(|x| Ok([f(x)?]), a, b, &[1.0], opts)?;
    Ok((r.value[0], r.err))
}

/// Integral over `[a, ∞)` through `x = a + c·t/(1−t)`.
pub fn integrate_semi_infinite<const N: usize, F>(
    f: F,
    a: f64,
    c: f64,
    weights: &[f64; N],
    opts: &QuadOptions,
) -> Result<Integral<N>>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    integrate(
        |t| {
            if t >= 1.0 {
                return Ok([0.0; N]);
            }
            let u = 1.0 - t;
            let x = a + c * t / u;
            let jac = c / (u * u);
            let mut v = f(x)?;
            for y in v.iter_mut() {
                *y *= jac;
            }
            Ok(v)
        },
        0.0,
        1.0,
        weights,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate_scalar(|x| Ok(x.powi(5) - 2.0 * x), 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let (v, _) = integrate_scalar(|x| Ok(1.0 / x.sqrt()), 0.0, 1.0, &QuadOptions::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_semi_infinite(|x| Ok([(-x).exp(), x * (-x).exp()]), 0.0, 1.0, &[1.0, 1.0], &QuadOptions::default())
            .unwrap();
        assert!((r.value[0] - 1.0).abs() < 1e-9);
        assert!((r.value[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn functional_ignores_zero_weight_component() {
        let r = integrate(|x| Ok([x.cos(), 1.0 / (1e-6 + x * x)]), -1.0, 1.0, &[1.0, 0.0], &QuadOptions::default())
            .unwrap();
        assert!((r.value[0] - 2.0 * 1f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn reports_failure() {
        let opts = QuadOptions { rel_tol: 1e-14, abs_tol: 0.0, max_subdivisions: 3 };
        let r = integrate_scalar(|x| Ok((1.0 / x).sin()), 1e-6, 1.0, &opts);
        assert!(matches!(r, Err(Error::Quadrature(_))));
    }
}
