//! Gauss hypergeometric function ₂F₁(a, b; c; z) for real arguments z < 1.
//!
//! The defining power series is used for |z| < 0.9. Large negative z goes
//! through the Pfaff transformation z → z/(z−1), and arguments close to 1
//! through the 1−z connection formula, including the logarithmic cases
//! where c − a − b is an integer.

use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

const SERIES_RADIUS: f64 = 0.9;
const MAX_TERMS: usize = 20_000;
const INTEGER_TOL: f64 = 1e-12;

fn nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && (x - x.round()).abs() < INTEGER_TOL
}

/// ln|Γ(x)| and the sign of Γ(x); `None` at the poles.
fn ln_gamma_signed(x: f64) -> Option<(f64, f64)> {
    if nonpositive_integer(x) {
        return None;
    }
    if x > 0.0 {
        return Some((ln_gamma(x), 1.0));
    }
    // Γ(x) = π / (sin(πx) Γ(1 − x))
    let s = (std::f64::consts::PI * x).sin();
    Some((std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x), s.signum()))
}

/// Π Γ(num) / Π Γ(den); a pole in the denominator gives zero, a pole in
/// the numerator is a caller bug.
fn gamma_ratio(num: &[f64], den: &[f64]) -> f64 {
    let mut log = 0.0;
    let mut sign = 1.0;
    for &x in num {
        let (l, s) = ln_gamma_signed(x).expect("gamma pole in numerator");
        log += l;
        sign *= s;
    }
    for &x in den {
        match ln_gamma_signed(x) {
            None => return 0.0,
            Some((l, s)) => {
                log -= l;
                sign *= s;
            }
        }
    }
    sign * log.exp()
}

/// Plain power series; also used for terminating (polynomial) cases.
fn series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        if term == 0.0 || term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Evaluates ₂F₁(a, b; c; z).
///
/// Errors when c is a non-positive integer (pole) or when z ≥ 1 lies
/// outside the region where the function is real and finite.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && z.is_finite()) {
        return Err(Error::domain("hyp2f1 arguments must be finite"));
    }
    if nonpositive_integer(c) {
        return Err(Error::domain(format!("hyp2f1 has a pole at c = {c}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if nonpositive_integer(a) || nonpositive_integer(b) {
        return Ok(series(a, b, c, z));
    }
    if z >= 1.0 {
        if z == 1.0 && c - a - b > 0.0 {
            return Ok(gamma_ratio(&[c, c - a - b], &[c - a, c - b]));
        }
        return Err(Error::domain(format!("hyp2f1 is not real-valued or diverges at z = {z}")));
    }
    if z.abs() < SERIES_RADIUS {
        return Ok(series(a, b, c, z));
    }
    if z > 0.0 {
        return Ok(near_one(a, b, c, z, 1.0 - z));
    }
    // Pfaff: F(a, b; c; z) = (1 − z)^(−a) F(a, c − b; c; z/(z − 1))
    let w = z / (z - 1.0);
    let prefactor = (1.0 - z).powf(-a);
    let b2 = c - b;
    // 1 − w computed without cancellation
    let inner =
        if nonpositive_integer(b2) || w < SERIES_RADIUS { series(a, b2, c, w) } else { near_one(a, b2, c, w, 1.0 / (1.0 - z)) };
    Ok(prefactor * inner)
}

/// ₂F₁ for SERIES_RADIUS ≤ x < 1 through the 1 − x connection formulas;
/// `y` is 1 − x supplied by the caller at full precision.
fn near_one(a: f64, b: f64, c: f64, x: f64, y: f64) -> f64 {
    debug_assert!(x >= SERIES_RADIUS);
    let m = c - a - b;
    let mr = m.round();
    if (m - mr).abs() >= INTEGER_TOL {
        // Precision degrades like 1e-16 / |m − round(m)| as m approaches an
        // integer, because the two terms below nearly cancel.
        let t1 = gamma_ratio(&[c, m], &[c - a, c - b]) * series(a, b, 1.0 - m, y);
        let t2 = y.powf(m) * gamma_ratio(&[c, -m], &[a, b]) * series(c - a, c - b, m + 1.0, y);
        return t1 + t2;
    }
    let mi = mr as i64;
    if mi >= 0 {
        log_case_nonnegative(a, b, mi as usize, y)
    } else {
        log_case_negative(a, b, (-mi) as usize, y)
    }
}

/// c = a + b + m with m ≥ 0 an integer (A&S 15.3.10–15.3.11).
fn log_case_nonnegative(a: f64, b: f64, m: usize, y: f64) -> f64 {
    let mf = m as f64;
    let c = a + b + mf;
    let ln_y = y.ln();
    let mut finite = 0.0;
    if m > 0 {
        let pre = gamma_ratio(&[mf, c], &[a + mf, b + mf]);
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 0..m {
            let nf = n as f64;
            sum += term;
            term *= (a + nf) * (b + nf) / ((nf + 1.0) * (1.0 - mf + nf)) * y;
        }
        finite = pre * sum;
    }
    // Σ (a+m)_n (b+m)_n / (n! (n+m)!) yⁿ [ln y − ψ(n+1) − ψ(n+m+1) + ψ(a+n+m) + ψ(b+n+m)]
    let pre = gamma_ratio(&[c], &[a, b]) * if m % 2 == 0 { 1.0 } else { -1.0 } * y.powi(m as i32);
    let mut coef = 1.0 / gamma_ratio(&[mf + 1.0], &[]);
    let mut sum = 0.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let bracket = ln_y - digamma(nf + 1.0) - digamma(nf + mf + 1.0) + digamma(a + nf + mf) + digamma(b + nf + mf);
        let t = coef * bracket;
        sum += t;
        if n > 2 && t.abs() <= 1e-17 * sum.abs() {
            break;
        }
        coef *= (a + mf + nf) * (b + mf + nf) / ((nf + 1.0) * (nf + mf + 1.0)) * y;
    }
    finite - pre * sum
}

/// c = a + b − m with m ≥ 1 an integer (A&S 15.3.12).
fn log_case_negative(a: f64, b: f64, m: usize, y: f64) -> f64 {
    let mf = m as f64;
    let c = a + b - mf;
    let ln_y = y.ln();
    let pre = gamma_ratio(&[mf, c], &[a, b]) * y.powi(-(m as i32));
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 0..m {
        let nf = n as f64;
        sum += term;
        term *= (a - mf + nf) * (b - mf + nf) / ((nf + 1.0) * (1.0 - mf + nf)) * y;
    }
    let finite = pre * sum;

    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let pre = sign * gamma_ratio(&[c], &[a - mf, b - mf]);
    if pre == 0.0 {
        return finite;
    }
    let mut coef = 1.0 / gamma_ratio(&[mf + 1.0], &[]);
    let mut sum = 0.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let bracket = ln_y - digamma(nf + 1.0) - digamma(nf + mf + 1.0) + digamma(a + nf) + digamma(b + nf);
        let t = coef * bracket;
        sum += t;
        if n > 2 && t.abs() <= 1e-17 * sum.abs() {
            break;
        }
        coef *= (a + nf) * (b + nf) / ((nf + 1.0) * (nf + mf + 1.0)) * y;
    }
    finite - pre * sum
}
