//! Tabulated permittivity on the real frequency axis.

use crate::error::{Error, Result};
use crate::quad::gk15;
use num_complex::Complex64;
use std::io::Read;

/// Rows `(ω, ε̄(ω))` with strictly increasing ω > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonTable {
    rows: Vec<(f64, Complex64)>,
}

impl EpsilonTable {
    pub fn new(rows: Vec<(f64, Complex64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("permittivity table is empty".into()));
        }
        for (i, (w, e)) in rows.iter().enumerate() {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("row {i}: omega must be finite and > 0, got {w}")));
            }
            if !(e.re.is_finite() && e.im.is_finite()) || e.im < 0.0 {
                return Err(Error::InvalidParameter(format!("row {i}: eps must be finite with Im ≥ 0, got {e}")));
            }
            if i > 0 && *w <= rows[i - 1].0 {
                return Err(Error::InvalidParameter(format!("row {i}: omega not strictly increasing")));
            }
        }
        Ok(Self { rows })
    }

    /// Frequency-independent table with a single real value.
    pub fn constant(eps: f64) -> Result<Self> {
        Self::new(vec![(1.0, Complex64::new(eps, 0.0))])
    }

    pub fn rows(&self) -> &[(f64, Complex64)] {
        &self.rows
    }

    /// High-frequency value used as the Kramers–Kronig constant.
    pub fn eps_infinity(&self) -> f64 {
        self.rows.last().expect("non-empty").1.re
    }

    /// `ε̄(ω)`: log-frequency linear interpolation inside the table.
    ///
    /// Below the first row Re ε is held and Im ε falls linearly to zero at
    /// ω = 0; above the last row Re ε is held and Im ε is zero. Negative
    /// frequencies follow from `ε̄(−ω) = ε̄(ω)*`.
    pub fn eps_fourier(&self, omega: f64) -> Complex64 {
        if omega < 0.0 {
            return self.eps_fourier(-omega).conj();
        }
        let (w1, e1) = self.rows[0];
        if omega <= w1 {
            return Complex64::new(e1.re, e1.im * omega / w1);
        }
        let (wn, en) = *self.rows.last().expect("non-empty");
        if omega > wn {
            return Complex64::new(en.re, 0.0);
        }
        let k = self.rows.partition_point(|(w, _)| *w < omega).max(1);
        let (wa, ea) = self.rows[k - 1];
        let (wb, eb) = self.rows[k];
        let t = (omega / wa).ln() / (wb / wa).ln();
        ea + (eb - ea) * t
    }

    /// `ε(s)` for `Re s ≥ 0`.
    ///
    /// On the imaginary axis this is the table itself at ω = −Im s. Elsewhere
    /// it is `ε_∞ + (2/π)∫₀^∞ ω Im ε̄(ω)/(ω² + s²) dω`.
    pub fn eps_laplace(&self, s: Complex64) -> Result<Complex64> {
        let tol = 1e-6 * s.norm();
        if s.norm() > 0.0 && s.re.abs() <= tol {
            return Ok(self.eps_fourier(-s.im));
        }
        if s.re < 0.0 {
            return Err(Error::Domain(format!("tabulated permittivity is not continued to Re s < 0 (s = {s})")));
        }
        Ok(self.eps_infinity() + self.kramers_kronig(s))
    }

    fn kramers_kronig(&self, s: Complex64) -> Complex64 {
        let s2 = s * s;
        let (w1, e1) = self.rows[0];
        let mut acc = Complex64::new(0.0, 0.0);
        if e1.im != 0.0 {
            // ∫₀^{ω₁} ω² / (ω² + s²) dω in closed form.
            let low = if s.norm() == 0.0 {
                Complex64::new(w1, 0.0)
            } else {
                w1 - s * (w1 / s).atan()
            };
            acc += e1.im / w1 * low;
        }
        for pair in self.rows.windows(2) {
            let (wa, ea) = pair[0];
            let (wb, eb) = pair[1];
            if ea.im == 0.0 && eb.im == 0.0 {
                continue;
            }
            let (ua, ub) = (wa.ln(), wb.ln());
            let pieces = ((ub - ua) / 0.25).ceil().max(1.0) as usize;
            let h = (ub - ua) / pieces as f64;
            let integrand = |u: f64| -> Result<[f64; 2]> {
                let w = u.exp();
                let im = ea.im + (eb.im - ea.im) * (u - ua) / (ub - ua);
                let v = w * w * im / (w * w + s2);
                Ok([v.re, v.im])
            };
            for p in 0..pieces {
                let a = ua + p as f64 * h;
                let (v, _) = gk15(&integrand, a, a + h, &[1.0, 0.0]).expect("integrand is infallible");
                acc += Complex64::new(v[0], v[1]);
            }
        }
        acc * (2.0 / std::f64::consts::PI)
    }
}

/// Parses CSV rows `omega,eps_re,eps_im`.
///
/// Blank lines, `#` comments and one optional leading header row are
/// accepted. Errors carry the 1-based input line.
pub fn load_epsilon_table<R: Read>(source: R) -> Result<EpsilonTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let mut rows: Vec<(f64, Complex64)> = Vec::new();
    let mut last_line = 0;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
        last_line = line;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if idx == 0 && record.get(0).map(|f| f.eq_ignore_ascii_case("omega")).unwrap_or(false) {
            continue;
        }
        if record.len() != 3 {
            return Err(Error::Parse { line, message: format!("expected 3 fields, found {}", record.len()) });
        }
        let mut v = [0.0; 3];
        for (k, field) in record.iter().enumerate() {
            v[k] = field
                .parse::<f64>()
                .map_err(|_| Error::Parse { line, message: format!("field {} is not a number: {field:?}", k + 1) })?;
            if !v[k].is_finite() {
                return Err(Error::Parse { line, message: format!("field {} is not finite", k + 1) });
            }
        }
        if v[0] <= 0.0 {
            return Err(Error::Parse { line, message: format!("omega must be > 0, got {}", v[0]) });
        }
        if v[2] < 0.0 {
            return Err(Error::Parse { line, message: format!("negative Im eps {} violates passivity", v[2]) });
        }
        if let Some((prev, _)) = rows.last() {
            if v[0] <= *prev {
                return Err(Error::Parse { line, message: format!("omega {} does not increase (previous {prev})", v[0]) });
            }
        }
        rows.push((v[0], Complex64::new(v[1], v[2])));
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: last_line.max(1), message: "no data rows".into() });
    }
    EpsilonTable::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_two_rows() {
        let t = load_epsilon_table("1.0,2.0,0.1\n2.0,1.5,0.05".as_bytes()).unwrap();
        assert_eq!(t.rows().len(), 2);
        assert_eq!(t.rows()[1].1, Complex64::new(1.5, 0.05));
    }

    #[test]
    fn header_and_comments() {
        let t = load_epsilon_table("# made up\nomega,eps_re,eps_im\n\n1,2,0\n3,4,0.5\n".as_bytes()).unwrap();
        assert_eq!(t.rows().len(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(load_epsilon_table("".as_bytes()), Err(Error::Parse { .. })));
        match load_epsilon_table("1,2,0\n0.5,2,0\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match load_epsilon_table("1,2,0\n2,2,-0.1\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match load_epsilon_table("1,2,0\n2,x,0\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(load_epsilon_table("1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn interpolation_is_log_linear() {
        let t = EpsilonTable::new(vec![(1.0, Complex64::new(2.0, 1.0)), (100.0, Complex64::new(4.0, 3.0))]).unwrap();
        let mid = t.eps_fourier(10.0);
        assert_relative_eq!(mid.re, 3.0, epsilon = 1e-14);
        assert_relative_eq!(mid.im, 2.0, epsilon = 1e-14);
        assert_eq!(t.eps_fourier(-10.0), mid.conj());
        assert_eq!(t.eps_fourier(1000.0), Complex64::new(4.0, 0.0));
        assert_relative_eq!(t.eps_fourier(0.5).im, 0.5);
    }

    #[test]
    fn dispersionless_continuation() {
        let t = EpsilonTable::constant(1e4).unwrap();
        assert_eq!(t.eps_laplace(Complex64::new(3.0, 0.0)).unwrap(), Complex64::new(1e4, 0.0));
        assert_eq!(t.eps_laplace(Complex64::new(0.0, -2.0)).unwrap(), Complex64::new(1e4, 0.0));
    }

    #[test]
    fn kramers_kronig_of_a_lorentzian_line() {
        // Im ε of a narrow Lorentz line sampled densely; the imaginary-axis value
        // must approach the analytic 1 + λ²/(ξ² + γξ + Ω²).
        let (l2, w0, g) = (1.0, 1.0, 0.1);
        let rows: Vec<(f64, Complex64)> = (0..4001)
            .map(|k| {
                let w = 10f64.powf(-3.0 + 6.0 * k as f64 / 4000.0);
                let e = 1.0 + l2 / Complex64::new(w0 * w0 - w * w, -g * w);
                (w, Complex64::new(e.re, e.im.max(0.0)))
            })
            .collect();
        let mut rows = rows;
        let last = rows.len() - 1;
        rows[last].1.re = 1.0;
        let t = EpsilonTable::new(rows).unwrap();
        for xi in [0.3, 1.0, 3.0] {
            let want = 1.0 + l2 / (xi * xi + g * xi + w0 * w0);
            let got = t.eps_laplace(Complex64::new(xi, 0.0)).unwrap();
            assert_relative_eq!(got.re, want, max_relative = 2e-4);
            assert!(got.im.abs() < 1e-12);
        }
    }
}
