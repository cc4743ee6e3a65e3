//! Complete and upper incomplete gamma functions.
//!
//! The upper incomplete gamma function is needed at negative, non-integer
//! orders (`-b`, `1-b`, `2-b` for a Pareto exponent `b`), which most
//! libraries do not cover. Evaluation strategy:
//!
//! * `p >= max(1, z + 1)`: modified Lentz continued fraction, valid for any
//!   real order.
//! * `0 < z`, small `p`: complete gamma minus the lower-incomplete series.
//! * `z < 0`, small `p`: evaluate at the fractional order in `(0, 1)` and
//!   step down with the integration-by-parts recursion
//!   `Γ(z,p) = (Γ(z+1,p) - p^z e^{-p}) / z`.

use crate::error::{domain, Result};

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;

/// Above this argument the upper incomplete gamma is reported as zero.
pub const UNDERFLOW_ARG: f64 = 700.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
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

/// Complete gamma function Γ(x) for real, non-pole `x`.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (k, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + k as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

fn is_nonpositive_integer(z: f64) -> bool {
    z <= 0.0 && z.fract() == 0.0
}

fn check_args(z: f64, p: f64) -> Result<()> {
    if !p.is_finite() || p <= 0.0 {
        return Err(domain(format!("incomplete gamma needs p > 0, got {p}")));
    }
    if !z.is_finite() || !(-3.0..=3.0).contains(&z) {
        return Err(domain(format!("incomplete gamma order {z} outside [-3, 3]")));
    }
    if is_nonpositive_integer(z) {
        return Err(domain(format!("incomplete gamma order {z} is a non-positive integer")));
    }
    Ok(())
}

/// Upper incomplete gamma function Γ(z, p) = ∫_p^∞ e^{-x} x^{z-1} dx.
///
/// Accepts `z ∈ [-3, 3]` excluding non-positive integers, and `p > 0`.
/// Returns exactly `0.0` for `p > 700`.
pub fn upper_incomplete_gamma(z: f64, p: f64) -> Result<f64> {
    check_args(z, p)?;
    Ok(upper_gamma_raw(z, p))
}

/// Γ(z, p) evaluated through one step of the integration-by-parts recursion,
/// `Γ(z,p) = -z^{-1} p^z e^{-p} + z^{-1} Γ(z+1, p)`.
pub fn gamma_recursion_shift(z: f64, p: f64) -> Result<f64> {
    check_args(z, p)?;
    if p > UNDERFLOW_ARG {
        return Ok(0.0);
    }
    let boundary = (z * p.ln() - p).exp();
    Ok((upper_gamma_raw(z + 1.0, p) - boundary) / z)
}

/// Unchecked evaluation. Also handles `z = 0` (the exponential integral),
/// which the Pareto kernels need at exponent `b = 2`.
pub(crate) fn upper_gamma_raw(z: f64, p: f64) -> f64 {
    if p > UNDERFLOW_ARG {
        return 0.0;
    }
    if p >= (z + 1.0).max(1.0) {
        return (z * p.ln() - p).exp() * continued_fraction(z, p);
    }
    if z > 0.0 {
        return gamma(z) - lower_series(z, p);
    }
    if z == 0.0 {
        return exp_integral_e1(p);
    }
    // Step down from the fractional order z0 ∈ (0, 1).
    let steps = (-z).floor() as usize + 1;
    let z0 = z + steps as f64;
    let ln_p = p.ln();
    let mut value = if z0 >= 1.0 { (-p).exp() } else { gamma(z0) - lower_series(z0, p) };
    for k in 1..=steps {
        let zc = z0 - k as f64;
        value = (value - (zc * ln_p - p).exp()) / zc;
    }
    value
}

/// Scaled continued fraction `e^{p} p^{-z} Γ(z, p)` for `p >= 1`.
///
/// Used by the Pareto kernels to avoid forming `e^{-p}` and `p^z`
/// separately when they would underflow.
pub(crate) fn scaled_upper_gamma(z: f64, p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    continued_fraction(z, p)
}

fn continued_fraction(z: f64, p: f64) -> f64 {
    let mut b = p + 1.0 - z;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let i = i as f64;
        let an = -i * (i - z);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lower incomplete gamma γ(z, p) for `z > 0` by its power series.
fn lower_series(z: f64, p: f64) -> f64 {
    let mut ap = z;
    let mut del = 1.0 / z;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= p / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (z * p.ln() - p).exp()
}

/// E1(p) for `0 < p < 1` by its convergent series.
fn exp_integral_e1(p: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..MAX_ITER {
        let k = k as f64;
        term *= -p / k;
        let contrib = term / k;
        sum += contrib;
        if contrib.abs() < EPS * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - p.ln() - sum
}
