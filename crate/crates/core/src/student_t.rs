//! Special functions and the symmetric Student-t density and distribution function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Continued-fraction iteration cap for the incomplete beta function.
pub const BETA_CF_MAX_ITER: usize = 300;
/// Relative convergence tolerance of the continued fraction.
pub const BETA_CF_TOL: f64 = 1e-14;
const LENTZ_TINY: f64 = 1e-300;

/// Degrees of freedom of a Student-t law.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Dof(f64);

impl Dof {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu > 0.0 {
            Ok(Dof(nu))
        } else {
            Err(Error::Domain(format!(
                "degrees of freedom must be finite and > 0, got {nu}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Dof {
    type Error = Error;

    fn try_from(nu: f64) -> Result<Self> {
        Dof::new(nu)
    }
}

impl From<Dof> for f64 {
    fn from(nu: Dof) -> f64 {
        nu.0
    }
}

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, 9 terms).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)
}

fn check_beta_args(a: f64, b: f64, x: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
        return Err(Error::Domain(format!(
            "incomplete beta requires a, b > 0, got a={a}, b={b}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "incomplete beta requires 0 <= x <= 1, got {x}"
        )));
    }
    Ok(())
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    check_beta_args(a, b, x)?;
    reg_inc_beta_xy(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` with the complement `y = 1 - x` supplied separately, so callers
/// that know `y` more accurately than `1 - x` keep the precision.
fn reg_inc_beta_xy(a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if y <= 0.0 {
        return Ok(1.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - ln_beta_cf_term(b, a, y, x)?.exp())
    } else {
        Ok(ln_beta_cf_term(a, b, x, y)?.exp())
    }
}

/// `ln I_x(a, b)`, computed in log space on the non-switched branch so that
/// tiny lower tails do not underflow.
fn ln_reg_inc_beta_xy(a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok((-ln_beta_cf_term(b, a, y, x)?.exp()).ln_1p())
    } else {
        ln_beta_cf_term(a, b, x, y)
    }
}

/// `ln( x^a y^b / (a B(a,b)) * cf )`, the continued-fraction evaluation of
/// `ln I_x(a, b)` (modified Lentz).
fn ln_beta_cf_term(a: f64, b: f64, x: f64, y: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < LENTZ_TINY {
        d = LENTZ_TINY;
    }
    d = 1.0 / d;
    let mut f = d;

    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + even * d;
        if d.abs() < LENTZ_TINY {
            d = LENTZ_TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < LENTZ_TINY {
            c = LENTZ_TINY;
        }
        d = 1.0 / d;
        f *= d * c;

        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + odd * d;
        if d.abs() < LENTZ_TINY {
            d = LENTZ_TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < LENTZ_TINY {
            c = LENTZ_TINY;
        }
        d = 1.0 / d;
        let step = d * c;
        f *= step;

        if (step - 1.0).abs() < BETA_CF_TOL {
            let ln_prefix = a * x.ln() + b * y.ln() - ln_beta(a, b) - a.ln();
            return Ok(ln_prefix + f.ln());
        }
    }
    Err(Error::Convergence("incomplete beta continued fraction"))
}

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires finite x, got {x}")))
    }
}

/// Log density of the standard Student-t.
pub fn t_log_pdf(x: f64, nu: Dof) -> Result<f64> {
    check_finite(x, "t_log_pdf")?;
    let nu = nu.get();
    let norm = ln_gamma_unchecked(0.5 * (nu + 1.0))
        - ln_gamma_unchecked(0.5 * nu)
        - 0.5 * (nu * PI).ln();
    Ok(norm - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p())
}

pub fn t_pdf(x: f64, nu: Dof) -> Result<f64> {
    t_log_pdf(x, nu).map(f64::exp)
}

/// Lower tail `P(T <= -|x|)`, i.e. the smaller of the two tails.
fn t_small_tail(x: f64, nu: f64) -> Result<f64> {
    let x2 = x * x;
    let denom = nu + x2;
    Ok(0.5 * reg_inc_beta_xy(0.5 * nu, 0.5, nu / denom, x2 / denom)?)
}

/// Student-t distribution function `P(T <= x)`.
pub fn t_cdf(x: f64, nu: Dof) -> Result<f64> {
    check_finite(x, "t_cdf")?;
    let tail = t_small_tail(x, nu.get())?;
    Ok(if x <= 0.0 { tail } else { 1.0 - tail })
}

/// `ln P(T <= x)`, accurate far into the lower tail.
pub fn t_log_cdf(x: f64, nu: Dof) -> Result<f64> {
    check_finite(x, "t_log_cdf")?;
    let nu = nu.get();
    if x <= 0.0 {
        let x2 = x * x;
        let denom = nu + x2;
        Ok(0.5f64.ln() + ln_reg_inc_beta_xy(0.5 * nu, 0.5, nu / denom, x2 / denom)?)
    } else {
        Ok((-t_small_tail(x, nu)?).ln_1p())
    }
}
