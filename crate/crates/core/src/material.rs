//! Microscopic dielectric response of the plates.
//!
//! Each plate is a continuum of damped harmonic oscillators coupled to the
//! vector potential with strength `lambda0` and to a bosonic bath. The bath
//! enters through its Laplace-domain dissipation kernel `D(s)`, which fixes
//! both the retarded oscillator propagator `G(s) = 1/(s² + Ω² − 2D(s))` and
//! the permittivity `ε(s) = 1 + λ₀² G(s)`.
//!
//! Conventions: natural units, Laplace variable `s`, Fourier frequency `ω`
//! reached through `s = −iω`.

mod table;

pub use table::{load_epsilon_table, EpsilonTable};

use crate::error::{check_finite, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Spectral form of the bath coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathKind {
    None,
    Ohmic,
    OhmicLorentzCutoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathModel {
    pub kind: BathKind,
    pub gamma: f64,
    pub cutoff: f64,
}

impl BathModel {
    pub fn none() -> Self {
        Self { kind: BathKind::None, gamma: 0.0, cutoff: f64::INFINITY }
    }

    pub fn ohmic(gamma: f64) -> Self {
        Self { kind: BathKind::Ohmic, gamma, cutoff: f64::INFINITY }
    }

    pub fn ohmic_lorentz_cutoff(gamma: f64, cutoff: f64) -> Self {
        Self { kind: BathKind::OhmicLorentzCutoff, gamma, cutoff }
    }

    /// Damping rate actually felt by the oscillator (zero for `None`).
    pub fn effective_gamma(&self) -> f64 {
        match self.kind {
            BathKind::None => 0.0,
            _ => self.gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be finite and ≥ 0, got {}", self.gamma)));
        }
        if self.kind == BathKind::OhmicLorentzCutoff && !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff must be finite and > 0, got {}", self.cutoff)));
        }
        Ok(())
    }
}

/// Oscillator parameters of one plate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub omega0: f64,
    pub mass: f64,
    pub lambda0: f64,
    pub bath: BathModel,
    /// Bath inverse temperature; `f64::INFINITY` is zero temperature.
    pub beta_bath: f64,
    /// Initial inverse temperature of the polarization oscillators.
    pub beta_dof: f64,
}

impl Material {
    pub fn new(omega0: f64, mass: f64, lambda0: f64, bath: BathModel, beta_bath: f64, beta_dof: f64) -> Result<Self> {
        let m = Self { omega0, mass, lambda0, bath, beta_bath, beta_dof };
        m.validate()?;
        Ok(m)
    }

    /// Ohmic plate with unit mass and equal bath/oscillator temperatures.
    pub fn lorentz_ohmic(lambda0: f64, omega0: f64, gamma: f64, temperature: f64) -> Result<Self> {
        let beta = inverse_temperature(temperature)?;
        Self::new(omega0, 1.0, lambda0, BathModel::ohmic(gamma), beta, beta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be > 0, got {}", self.mass)));
        }
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda0 must be ≥ 0, got {}", self.lambda0)));
        }
        if !(self.beta_bath > 0.0) || self.beta_bath.is_nan() {
            return Err(Error::InvalidParameter(format!("beta_bath must be > 0, got {}", self.beta_bath)));
        }
        if !(self.beta_dof > 0.0) || self.beta_dof.is_nan() {
            return Err(Error::InvalidParameter(format!("beta_dof must be > 0, got {}", self.beta_dof)));
        }
        self.bath.validate()
    }

    pub fn with_beta_bath(mut self, beta: f64) -> Self {
        self.beta_bath = beta;
        self
    }
}

/// `1/T`, with `T = 0` mapped to an infinite β.
pub fn inverse_temperature(t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("temperature must be finite and ≥ 0, got {t}")));
    }
    Ok(if t == 0.0 { f64::INFINITY } else { 1.0 / t })
}

/// Laplace transform `D(s)` of the bath dissipation kernel.
pub fn bath_dissipation(bath: &BathModel, s: Complex64) -> Result<Complex64> {
    check_finite(s, "bath_dissipation")?;
    Ok(match bath.kind {
        BathKind::None => Complex64::new(0.0, 0.0),
        BathKind::Ohmic => -0.5 * bath.gamma * s,
        BathKind::OhmicLorentzCutoff => {
            let den = s + bath.cutoff;
            if den.norm() <= 1e-300 {
                return Err(Error::Singularity { s, context: "bath cutoff pole at s = −Λ".into() });
            }
            -0.5 * bath.gamma * s * bath.cutoff / den
        }
    })
}

/// Numerator and denominator of `G(s)` as polynomials in `s`, lowest degree first.
pub fn qbm_green_polynomials(mat: &Material) -> (Vec<f64>, Vec<f64>) {
    let w2 = mat.omega0 * mat.omega0;
    let g = mat.bath.effective_gamma();
    match mat.bath.kind {
        BathKind::None | BathKind::Ohmic => (vec![1.0], vec![w2, g, 1.0]),
        BathKind::OhmicLorentzCutoff => {
            let l = mat.bath.cutoff;
            (vec![l, 1.0], vec![w2 * l, w2 + g * l, l, 1.0])
        }
    }
}

pub(crate) fn horner(c: &[f64], s: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * s + k)
}

/// Retarded oscillator propagator `G(s)`.
///
/// The cutoff bath is evaluated in cleared-denominator form so that the
/// removable point `s = −Λ` is harmless.
pub fn qbm_green(mat: &Material, s: Complex64) -> Result<Complex64> {
    check_finite(s, "qbm_green")?;
    let (num, den) = qbm_green_polynomials(mat);
    let d = horner(&den, s);
    let scale: f64 = den.iter().enumerate().map(|(k, c)| c.abs() * s.norm().powi(k as i32)).sum();
    if d.norm() <= 1e-14 * scale {
        return Err(Error::Singularity { s, context: "pole of the oscillator propagator".into() });
    }
    Ok(horner(&num, s) / d)
}

/// Permittivity `ε(s) = 1 + λ₀² G(s)`.
pub fn permittivity(mat: &Material, s: Complex64) -> Result<Complex64> {
    Ok(1.0 + mat.lambda0 * mat.lambda0 * qbm_green(mat, s)?)
}

/// Permittivity on the real frequency axis, `ε̄(ω) = ε(−iω + 0⁺)`.
pub fn permittivity_fourier(mat: &Material, omega: f64) -> Result<Complex64> {
    let s = Complex64::new(0.0, -omega);
    match permittivity(mat, s) {
        Err(Error::Singularity { .. }) => {
            let eta = 1e-9 * omega.abs().max(1.0);
            permittivity(mat, s + eta)
        }
        other => other,
    }
}

/// `Im D̄(ω)` with `D̄(ω) = D(−iω)`, evaluated in closed form.
pub fn im_dissipation_fourier(bath: &BathModel, omega: f64) -> f64 {
    match bath.kind {
        BathKind::None => 0.0,
        BathKind::Ohmic => 0.5 * bath.gamma * omega,
        BathKind::OhmicLorentzCutoff => {
            let l = bath.cutoff;
            0.5 * bath.gamma * omega * l * l / (l * l + omega * omega)
        }
    }
}

/// `x·coth(x)`, finite and even at the origin.
pub fn x_coth_x(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 3.0 - x2 * x2 / 45.0
    } else if ax > 40.0 {
        ax
    } else {
        ax / ax.tanh()
    }
}

/// `coth(βω/2)` for ω ≠ 0, with the `β = ∞` limit giving `sign(ω)`.
pub fn coth_half(beta: f64, omega: f64) -> f64 {
    if beta.is_infinite() {
        return omega.signum();
    }
    let x = 0.5 * beta * omega;
    x_coth_x(x) / x
}

/// Bose occupation `n(ω) = 1/(e^{βω} − 1)` for ω > 0 (zero at β = ∞).
pub fn bose(beta: f64, omega: f64) -> f64 {
    if beta.is_infinite() {
        return 0.0;
    }
    let x = beta * omega;
    if x > 700.0 {
        0.0
    } else {
        1.0 / x.exp_m1()
    }
}

/// Bath noise kernel `N̄(ω) = coth(βω/2)·Im D̄(ω)`.
///
/// Written as `(2/β)·(x coth x)·(Im D̄(ω)/ω)` with `x = βω/2` so the
/// ω → 0 value is reached without division by zero.
pub fn noise_fourier(mat: &Material, omega: f64) -> f64 {
    let beta = mat.beta_bath;
    if omega == 0.0 {
        if beta.is_infinite() {
            return 0.0;
        }
        let slope = match mat.bath.kind {
            BathKind::None => 0.0,
            _ => 0.5 * mat.bath.gamma,
        };
        return 2.0 / beta * slope;
    }
    let im_d = im_dissipation_fourier(&mat.bath, omega);
    if beta.is_infinite() {
        return im_d.abs();
    }
    let x = 0.5 * beta * omega;
    2.0 / beta * x_coth_x(x) * (im_d / omega)
}

/// Both sides of `Im ε̄(ω) = 2λ₀²·Im D̄(ω)·G(−iω)·G(iω)`.
pub fn fdr_epsilon_identity(mat: &Material, omega: f64) -> Result<(f64, f64)> {
    let lhs = permittivity_fourier(mat, omega)?.im;
    let im_d = im_dissipation_fourier(&mat.bath, omega);
    if im_d == 0.0 {
        return Ok((lhs, 0.0));
    }
    let gm = qbm_green(mat, Complex64::new(0.0, -omega))?;
    let gp = qbm_green(mat, Complex64::new(0.0, omega))?;
    let rhs = 2.0 * mat.lambda0 * mat.lambda0 * im_d * (gm * gp).re;
    Ok((lhs, rhs))
}

/// Dielectric filling of one half-space.
#[derive(Debug, Clone, PartialEq)]
pub enum Medium {
    Oscillator(Material),
    Table { table: Arc<EpsilonTable>, beta: f64 },
}

impl Medium {
    /// `ε(s)`. Tables are continued off the real-frequency axis by a
    /// Kramers–Kronig integral and are only defined for `Re s ≥ 0`.
    pub fn eps(&self, s: Complex64) -> Result<Complex64> {
        match self {
            Medium::Oscillator(m) => permittivity(m, s),
            Medium::Table { table, .. } => table.eps_laplace(s),
        }
    }

    pub fn eps_fourier(&self, omega: f64) -> Result<Complex64> {
        match self {
            Medium::Oscillator(m) => permittivity_fourier(m, omega),
            Medium::Table { table, .. } => Ok(table.eps_fourier(omega)),
        }
    }

    /// Inverse temperature of the fluctuation sources.
    pub fn beta(&self) -> f64 {
        match self {
            Medium::Oscillator(m) => m.beta_bath,
            Medium::Table { beta, .. } => *beta,
        }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        match self {
            Medium::Oscillator(m) => Medium::Oscillator(m.with_beta_bath(beta)),
            Medium::Table { table, .. } => Medium::Table { table: table.clone(), beta },
        }
    }

    pub fn material(&self) -> Option<&Material> {
        match self {
            Medium::Oscillator(m) => Some(m),
            Medium::Table { .. } => None,
        }
    }

    /// True when the medium is indistinguishable from vacuum.
    pub fn is_vacuum(&self) -> bool {
        match self {
            Medium::Oscillator(m) => m.lambda0 == 0.0,
            Medium::Table { table, .. } => table.rows().iter().all(|(_, e)| (*e - 1.0).norm() == 0.0),
        }
    }
}

impl From<Material> for Medium {
    fn from(m: Material) -> Self {
        Medium::Oscillator(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lorentz(lambda0: f64, gamma: f64) -> Material {
        Material::lorentz_ohmic(lambda0, 1.0, gamma, 1.0).unwrap()
    }

    #[test]
    fn dissipation_examples() {
        let s = Complex64::new(1.0, 2.0);
        assert_eq!(bath_dissipation(&BathModel::none(), s).unwrap(), Complex64::new(0.0, 0.0));
        let d = bath_dissipation(&BathModel::ohmic(0.2), Complex64::new(3.0, 0.0)).unwrap();
        assert_relative_eq!(d.re, -0.3, epsilon = 1e-15);
        let far = bath_dissipation(&BathModel::ohmic_lorentz_cutoff(0.2, 50.0), Complex64::new(1e12, 0.0)).unwrap();
        assert_relative_eq!(2.0 * far.re, -10.0, max_relative = 1e-9);
    }

    #[test]
    fn green_matches_kernel_form() {
        let m = Material::new(1.3, 1.0, 0.7, BathModel::ohmic_lorentz_cutoff(0.3, 7.0), 1.0, 1.0).unwrap();
        for s in [Complex64::new(0.4, 2.0), Complex64::new(2.0, -0.5), Complex64::new(0.01, 0.0)] {
            let direct = 1.0 / (s * s + 1.69 - 2.0 * bath_dissipation(&m.bath, s).unwrap());
            assert_relative_eq!((qbm_green(&m, s).unwrap() - direct).norm(), 0.0, epsilon = 1e-14 * direct.norm());
        }
    }

    #[test]
    fn green_examples() {
        let m = lorentz(1.0, 0.1);
        assert_relative_eq!(qbm_green(&m, Complex64::new(1.0, 0.0)).unwrap().re, 1.0 / 2.1, epsilon = 1e-15);
        let undamped = lorentz(1.0, 0.0);
        assert!(matches!(qbm_green(&undamped, Complex64::new(0.0, 1.0)), Err(Error::Singularity { .. })));
    }

    #[test]
    fn static_and_vacuum_permittivity() {
        assert_eq!(permittivity(&lorentz(0.0, 0.1), Complex64::new(0.3, 0.2)).unwrap(), Complex64::new(1.0, 0.0));
        assert_relative_eq!(permittivity(&lorentz(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap().re, 2.0);
    }

    #[test]
    fn fourier_sign_convention() {
        let e = permittivity_fourier(&lorentz(1.0, 0.1), 1.0).unwrap();
        assert_relative_eq!(e.re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.im, 10.0, epsilon = 1e-12);
        assert_eq!(permittivity_fourier(&lorentz(1.0, 0.1), 0.0).unwrap().im, 0.0);
    }

    #[test]
    fn noise_limits() {
        let mut m = lorentz(1.0, 0.2);
        m.beta_bath = f64::INFINITY;
        assert_relative_eq!(noise_fourier(&m, 0.7), 0.07, epsilon = 1e-15);
        m.beta_bath = 1.0;
        assert_relative_eq!(noise_fourier(&m, 0.01), 0.2, max_relative = 1e-4);
        assert_relative_eq!(noise_fourier(&m, 0.0), 0.2, max_relative = 1e-15);
        assert_eq!(noise_fourier(&Material { bath: BathModel::none(), ..m }, 0.3), 0.0);
    }

    #[test]
    fn fdr_examples() {
        let (l, r) = fdr_epsilon_identity(&lorentz(1.0, 0.1), 0.7).unwrap();
        assert_relative_eq!(l, r, max_relative = 1e-12);
        assert_eq!(fdr_epsilon_identity(&lorentz(0.0, 0.1), 0.7).unwrap(), (0.0, 0.0));
        let (l, r) = fdr_epsilon_identity(&lorentz(1.0, 0.0), 0.7).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
    }

    #[test]
    fn x_coth_x_is_smooth() {
        for x in [1e-6, 9.99e-5, 1.001e-4, 0.5, 39.9, 40.1] {
            assert_relative_eq!(x_coth_x(x), x / x.tanh(), max_relative = 1e-13);
        }
    }
}
