//! Independent numerical oracles: adaptive Gauss–Kronrod quadrature and
//! plain bisection.
//!
//! Nothing here calls into the special-function or limit-curve code; these
//! routines exist to cross-check them and are exposed on the command line
//! for auditing.

use serde::Serialize;

/// A quadrature (or root) value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Estimate {
    let mut intervals = vec![(a, b, kronrod(&f, a, b))];
    for _ in 0..20_000 {
        let value: f64 = intervals.iter().map(|iv| iv.2 .0).sum();
        let error: f64 = intervals.iter().map(|iv| iv.2 .1).sum();
        if error <= rel_tol * value.abs() || error < 1e-300 {
            break;
        }
        let (idx, _) = intervals.iter().enumerate().max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1)).expect("non-empty");
        let (lo, hi, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, kronrod(&f, lo, mid)));
        intervals.push((mid, hi, kronrod(&f, mid, hi)));
    }
    Estimate { value: intervals.iter().map(|iv| iv.2 .0).sum(), error: intervals.iter().map(|iv| iv.2 .1).sum() }
}

/// Bisection on an increasing function over `[lo, hi]`, to the given width.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64, width: f64) -> Estimate {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Estimate { value: 0.5 * (lo + hi), error: 0.5 * (hi - lo) }
}

// Substituting x = p e^u (or w = a e^u) turns the power-law tails below into
// doubly-exponentially decaying integrands on [0, U].
fn log_span(start: f64, scale: f64) -> f64 {
    ((start * scale + 745.0) / (start * scale)).ln()
}

/// Γ(z, p) by quadrature of its defining integral.
pub fn upper_gamma_quadrature(z: f64, p: f64) -> Estimate {
    // p^z e^{-p} is factored out so the integral stays O(1) near underflow.
    let upper = log_span(p, 1.0);
    let scaled = integrate(|u| (z * u - p * u.exp_m1()).exp(), 0.0, upper, 1e-13);
    let factor = (z * p.ln() - p).exp();
    Estimate { value: factor * scaled.value, error: factor * scaled.error }
}

/// ∫_lo^hi e^{-wt} b a^b w^{-b-1} dw for the Pareto law (`hi` may be infinite).
pub fn pareto_band_laplace_quadrature(a: f64, b: f64, t: f64, lo: f64, hi: f64) -> Estimate {
    pareto_band_moment_quadrature(a, b, t, lo, hi, 0)
}

/// ∫_lo^hi w^k e^{-wt} b a^b w^{-b-1} dw for k ∈ {0, 1}.
pub fn pareto_band_moment_quadrature(a: f64, b: f64, t: f64, lo: f64, hi: f64, k: i32) -> Estimate {
    let lo = lo.max(a);
    if hi <= lo {
        return Estimate { value: 0.0, error: 0.0 };
    }
    let exponent = k as f64 - b;
    // w = lo e^u: integrand b a^b w^{k-b} e^{-wt} du.
    let upper = if hi.is_finite() {
        (hi / lo).ln()
    } else if t > 0.0 {
        log_span(lo, t)
    } else {
        // Pure power tail: exact integral.
        let value = if exponent < 0.0 { b * a.powf(b) * lo.powf(exponent) / -exponent } else { f64::INFINITY };
        return Estimate { value, error: 0.0 };
    };
    integrate(
        |u| {
            let w = lo * u.exp();
            b * a.powf(b) * (exponent * w.ln() - w * t).exp()
        },
        0.0,
        upper,
        1e-13,
    )
}

/// Pareto Laplace transform L(t) by quadrature.
pub fn pareto_laplace_quadrature(a: f64, b: f64, t: f64) -> Estimate {
    pareto_band_laplace_quadrature(a, b, t, a, f64::INFINITY)
}

/// q(r) = a t₀(r) for the Pareto law, by bisection on the quadrature curve.
pub fn pareto_q_bisection(b: f64, r: f64) -> Estimate {
    let y = |q: f64| 1.0 - pareto_laplace_quadrature(1.0, b, q).value;
    let mut hi = 1.0;
    while y(hi) < r {
        hi *= 2.0;
    }
    bisect_increasing(y, r, 0.0, hi, 1e-13 * hi)
}

/// lim S̃(r1, r2)/N for the Pareto law with scale `a = 1`, by quadrature of
/// ∫ w (e^{-w q1} - e^{-w q2}) λ(dw).
pub fn pareto_ranking_share_quadrature(b: f64, r1: f64, r2: f64) -> Estimate {
    let q1 = if r1 == 0.0 { 0.0 } else { pareto_q_bisection(b, r1).value };
    let m1 = pareto_band_moment_quadrature(1.0, b, q1, 1.0, f64::INFINITY, 1);
    let m2 = if r2 >= 1.0 {
        Estimate { value: 0.0, error: 0.0 }
    } else {
        let q2 = pareto_q_bisection(b, r2).value;
        pareto_band_moment_quadrature(1.0, b, q2, 1.0, f64::INFINITY, 1)
    };
    Estimate { value: m1.value - m2.value, error: m1.error + m2.error }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_of_polynomial_is_exact() {
        let e = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-14);
        assert!((e.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn gamma_quadrature_matches_closed_forms() {
        let e = upper_gamma_quadrature(1.0, 2.0);
        assert!((e.value - (-2.0f64).exp()).abs() < 1e-14);
        let e = upper_gamma_quadrature(0.5, 1e-12);
        assert!((e.value - 1.772_451_850_905_516).abs() < 1e-10);
    }

    #[test]
    fn laplace_quadrature_at_zero_is_one() {
        let e = pareto_laplace_quadrature(2.0, 0.7, 0.0);
        assert!((e.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bisection_finds_sqrt_two() {
        let e = bisect_increasing(|x| x * x, 2.0, 0.0, 2.0, 1e-15);
        assert!((e.value - 2f64.sqrt()).abs() < 1e-14);
    }
}
