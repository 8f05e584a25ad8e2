//! Log-gamma and digamma.
//!
//! `ln_gamma` uses the Lanczos approximation (g = 7, nine terms) with the
//! reflection formula below 0.5. `digamma` shifts small arguments above 6
//! with the recurrence and then applies the asymptotic series.
//!
//! The negative binomial loss only ever needs differences such as
//! `ln Γ(m + y) - ln Γ(m)` for integral `y`; [`ln_gamma_shift`] and
//! [`digamma_shift`] evaluate those as finite sums when `y` is small, which
//! avoids cancellation when `m = 1/α` is very large.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln(sqrt(2π))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this count the shifted differences are summed term by term.
const SHIFT_SUM_LIMIT: u64 = 64;

/// Natural log of the gamma function for `x > 0`. Returns NaN otherwise.
pub fn ln_gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x < 0.5 {
        // Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + a.ln()
}

/// Digamma ψ(x) = d ln Γ(x) / dx, defined for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma requires a finite x > 0, got {x}")));
    }
    Ok(digamma_positive(x))
}

pub(crate) fn digamma_positive(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    acc + x.ln() - 0.5 / x - asymptotic_series(x)
}

/// Σ_{k=1..7} B_2k / (2k x^2k), valid for x ≥ 6.
fn asymptotic_series(x: f64) -> f64 {
    let inv2 = 1.0 / (x * x);
    inv2 * (1.0 / 12.0
        - inv2
            * (1.0 / 120.0
                - inv2
                    * (1.0 / 252.0
                        - inv2
                            * (1.0 / 240.0
                                - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))))
}

/// `ln Γ(m + y) - ln Γ(m)` for `m > 0` and a non-negative integer `y`.
pub fn ln_gamma_shift(m: f64, y: u64) -> f64 {
    if y < SHIFT_SUM_LIMIT {
        (0..y).map(|k| (m + k as f64).ln()).sum()
    } else {
        ln_gamma(m + y as f64) - ln_gamma(m)
    }
}

/// `ψ(m + y) - ψ(m)` for `m > 0` and a non-negative integer `y`.
pub fn digamma_shift(m: f64, y: u64) -> f64 {
    if y < SHIFT_SUM_LIMIT {
        (0..y).map(|k| 1.0 / (m + k as f64)).sum()
    } else if m >= 6.0 {
        let yf = y as f64;
        let top = m + yf;
        (yf / m).ln_1p() - 0.5 * (1.0 / top - 1.0 / m) - (asymptotic_series(top) - asymptotic_series(m))
    } else {
        digamma_positive(m + y as f64) - digamma_positive(m)
    }
}

/// `ln(y!)`.
pub fn ln_factorial(y: u64) -> f64 {
    if y < 2 {
        0.0
    } else {
        ln_gamma(y as f64 + 1.0)
    }
}
