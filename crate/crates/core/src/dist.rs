//! Sales-rate distributions and their Laplace transforms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::{scaled_upper_gamma, upper_gamma_raw};

/// Half-width of the excluded neighbourhood around `b = 1`.
pub const B_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionKind {
    Pareto,
    ParetoCutoff,
    Empirical,
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Pareto {
        a: f64,
        b: f64,
    },
    Cutoff {
        a: f64,
        b: f64,
        gamma: f64,
        upper: f64,
    },
    /// Rates sorted in decreasing order.
    Empirical {
        rates: Vec<f64>,
    },
}

/// The distribution λ of per-item sales rates.
///
/// * `Pareto { a, b }`: λ([w, ∞)) = (a/w)^b for w ≥ a.
/// * `ParetoCutoff { a, b, γ }`: the continuum form of
///   `w_i = a ((N + n₀)/(i + n₀))^{1/b}` with `n₀ = γN`, i.e. density
///   `(1+γ) b a^b w^{-b-1}` on `[a, a (1 + 1/γ)^{1/b}]`.
/// * `Empirical`: the uniform measure on a finite list of positive rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SalesRateDistribution {
    law: Law,
}

fn check_pareto(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(domain(format!("minimum sales rate a must be positive, got {a}")));
    }
    if !(b.is_finite() && b > 0.0 && b <= 2.0) {
        return Err(domain(format!("Pareto exponent b must lie in (0, 2], got {b}")));
    }
    if (b - 1.0).abs() < B_GUARD {
        return Err(domain(format!("Pareto exponent b = {b} is inside the b = 1 guard band")));
    }
    Ok(())
}

impl SalesRateDistribution {
    pub fn pareto(a: f64, b: f64) -> Result<Self> {
        check_pareto(a, b)?;
        Ok(Self { law: Law::Pareto { a, b } })
    }

    /// Pareto law with the head cut off at `n₀ = γN`. `gamma = 0` is the plain
    /// Pareto law and is evaluated by exactly the same code path.
    pub fn pareto_cutoff(a: f64, b: f64, gamma: f64) -> Result<Self> {
        check_pareto(a, b)?;
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(domain(format!("cutoff ratio must be non-negative, got {gamma}")));
        }
        let upper = if gamma == 0.0 { f64::INFINITY } else { a * (1.0 + 1.0 / gamma).powf(1.0 / b) };
        Ok(Self { law: Law::Cutoff { a, b, gamma, upper } })
    }

    pub fn empirical(rates: impl Into<Vec<f64>>) -> Result<Self> {
        let mut rates = rates.into();
        if rates.is_empty() {
            return Err(domain("empirical distribution needs at least one rate"));
        }
        if let Some(bad) = rates.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(domain(format!("empirical rates must be strictly positive and finite, got {bad}")));
        }
        rates.sort_by(|x, y| y.total_cmp(x));
        Ok(Self { law: Law::Empirical { rates } })
    }

    /// Discrete Pareto rates `w_i = a ((N + n₀)/(i + n₀))^{1/b}`, `i = 1..=N`.
    pub fn discrete_pareto_rates(a: f64, b: f64, gamma: f64, n: usize) -> Result<Vec<f64>> {
        check_pareto(a, b)?;
        if n == 0 {
            return Err(domain("number of items must be positive"));
        }
        let n0 = gamma * n as f64;
        let top = n as f64 + n0;
        Ok((1..=n).map(|i| a * (top / (i as f64 + n0)).powf(1.0 / b)).collect())
    }

    /// Reads a one-column CSV with header `w`.
    pub fn from_rates_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| crate::io::csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| crate::io::csv_error(path, e))?.clone();
        if headers.len() != 1 || &headers[0] != "w" {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("expected header `w`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut rates = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| crate::io::csv_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let w: f64 = crate::io::parse_field(path, line, &record[0])?;
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("rate must be strictly positive, got {w}"),
                });
            }
            rates.push(w);
        }
        Self::empirical(rates)
    }

    pub fn kind(&self) -> DistributionKind {
        match self.law {
            Law::Pareto { .. } => DistributionKind::Pareto,
            Law::Cutoff { .. } => DistributionKind::ParetoCutoff,
            Law::Empirical { .. } => DistributionKind::Empirical,
        }
    }

    /// Minimum sales rate `a` (Pareto kinds only).
    pub fn a(&self) -> Option<f64> {
        match self.law {
            Law::Pareto { a, .. } | Law::Cutoff { a, .. } => Some(a),
            Law::Empirical { .. } => None,
        }
    }

    /// Pareto exponent `b` (Pareto kinds only).
    pub fn b(&self) -> Option<f64> {
        match self.law {
            Law::Pareto { b, .. } | Law::Cutoff { b, .. } => Some(b),
            Law::Empirical { .. } => None,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self.law {
            Law::Cutoff { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    /// Empirical rates in decreasing order.
    pub fn rates(&self) -> Option<&[f64]> {
        match &self.law {
            Law::Empirical { rates } => Some(rates),
            _ => None,
        }
    }

    /// Smallest and largest rate in the support.
    pub fn support(&self) -> (f64, f64) {
        match &self.law {
            Law::Pareto { a, .. } => (*a, f64::INFINITY),
            Law::Cutoff { a, upper, .. } => (*a, *upper),
            Law::Empirical { rates } => (rates[rates.len() - 1], rates[0]),
        }
    }

    /// A characteristic rate, used to seed root brackets.
    pub(crate) fn rate_scale(&self) -> f64 {
        self.support().0
    }

    /// L(t) = ∫ e^{-wt} λ(dw).
    pub fn laplace_transform(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.laplace_unchecked(t))
    }

    pub(crate) fn laplace_unchecked(&self, t: f64) -> f64 {
        match &self.law {
            Law::Pareto { a, b } => unit_tail_laplace(*b, a * t),
            Law::Cutoff { gamma, .. } if *gamma == 0.0 => self.pareto_view().laplace_unchecked(t),
            Law::Cutoff { a, b, gamma, upper } => {
                // (1+γ) [L_P(at) - (a/W)^b L_P(Wt)] with (a/W)^b = γ/(1+γ).
                (1.0 + gamma) * unit_tail_laplace(*b, a * t) - gamma * unit_tail_laplace(*b, upper * t)
            }
            Law::Empirical { rates } => rates.iter().map(|w| (-w * t).exp()).sum::<f64>() / rates.len() as f64,
        }
    }

    /// 1 - L(t), evaluated without cancellation at small t.
    pub(crate) fn one_minus_laplace(&self, t: f64) -> f64 {
        match &self.law {
            Law::Pareto { a, b } => unit_tail_survival(*b, a * t),
            Law::Cutoff { gamma, .. } if *gamma == 0.0 => self.pareto_view().one_minus_laplace(t),
            Law::Cutoff { a, b, gamma, upper } => {
                (1.0 + gamma) * unit_tail_survival(*b, a * t) - gamma * unit_tail_survival(*b, upper * t)
            }
            Law::Empirical { rates } => rates.iter().map(|w| -(-w * t).exp_m1()).sum::<f64>() / rates.len() as f64,
        }
    }

    fn pareto_view(&self) -> Self {
        let (a, b) = (self.a().expect("pareto kind"), self.b().expect("pareto kind"));
        Self { law: Law::Pareto { a, b } }
    }

    /// ∫_{[lo, hi]} w^k e^{-wt} λ(dw) for k ∈ {0, 1}; `hi` may be infinite.
    pub(crate) fn band_moment(&self, lo: f64, hi: f64, t: f64, k: u8) -> f64 {
        if t == 0.0 {
            if let Law::Pareto { a, b } | Law::Cutoff { a, b, .. } = self.law {
                let (lo, hi) = (lo.max(a), hi.min(self.support().1));
                if hi <= lo {
                    return 0.0;
                }
                let weight = match self.law {
                    Law::Cutoff { gamma, .. } => 1.0 + gamma,
                    _ => 1.0,
                };
                return weight * pareto_power_moment(a, b, lo, hi, k);
            }
        }
        match &self.law {
            Law::Empirical { rates } => {
                let sum: f64 = rates
                    .iter()
                    .filter(|w| **w >= lo && **w <= hi)
                    .map(|w| if k == 0 { (-w * t).exp() } else { w * (-w * t).exp() })
                    .sum();
                sum / rates.len() as f64
            }
            Law::Pareto { a, b } => pareto_tail_moment(*a, *b, lo, t, k) - pareto_tail_moment(*a, *b, hi, t, k),
            Law::Cutoff { a, b, gamma, upper } => {
                let (lo, hi) = (lo.max(*a), hi.min(*upper));
                if hi <= lo {
                    return 0.0;
                }
                (1.0 + gamma) * (pareto_tail_moment(*a, *b, lo, t, k) - pareto_tail_moment(*a, *b, hi, t, k))
            }
        }
    }

    /// First moment ∫ w e^{-wt} λ(dw); at t = 0 this is the mean rate, which
    /// is infinite for the plain Pareto law with b < 1.
    pub fn first_moment(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.band_moment(0.0, f64::INFINITY, t, 1))
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || t.is_nan() {
        return Err(domain(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// ∫_lo^hi w^k b a^b w^{-b-1} dw with `a <= lo < hi <= ∞`.
fn pareto_power_moment(a: f64, b: f64, lo: f64, hi: f64, k: u8) -> f64 {
    if k == 0 {
        return (a / lo).powf(b) - (a / hi).powf(b);
    }
    if hi.is_infinite() && b < 1.0 {
        return f64::INFINITY;
    }
    b * a.powf(b) * (lo.powf(1.0 - b) - hi.powf(1.0 - b)) / (b - 1.0)
}

/// ∫_u^∞ w^k e^{-wt} b a^b w^{-b-1} dw for the Pareto law (k ∈ {0, 1}).
fn pareto_tail_moment(a: f64, b: f64, u: f64, t: f64, k: u8) -> f64 {
    if u == f64::INFINITY {
        return 0.0;
    }
    let u = u.max(a);
    let ratio = (a / u).powf(b);
    match k {
        0 => ratio * unit_tail_laplace(b, u * t),
        _ => b * u * ratio * unit_tail_first_moment(b, u * t),
    }
}

/// ∫_1^∞ e^{-xy} b y^{-b-1} dy = b x^b Γ(-b, x): the Laplace transform of the
/// unit Pareto law.
pub(crate) fn unit_tail_laplace(b: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x >= 1.0 {
        return b * (-x).exp() * scaled_upper_gamma(-b, x);
    }
    let e = (-x).exp();
    if b < 1.0 {
        e - x.powf(b) * upper_gamma_raw(1.0 - b, x)
    } else {
        e - (x * e - x.powf(b) * upper_gamma_raw(2.0 - b, x)) / (b - 1.0)
    }
}

/// 1 - unit_tail_laplace(b, x), accurate for small x.
pub(crate) fn unit_tail_survival(b: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0 - unit_tail_laplace(b, x);
    }
    let m = -(-x).exp_m1();
    if b < 1.0 {
        m + x.powf(b) * upper_gamma_raw(1.0 - b, x)
    } else {
        m + (x * (-x).exp() - x.powf(b) * upper_gamma_raw(2.0 - b, x)) / (b - 1.0)
    }
}

/// ∫_1^∞ y^{-b} e^{-xy} dy = x^{b-1} Γ(1-b, x). Infinite at x = 0 when b < 1.
pub(crate) fn unit_tail_first_moment(b: f64, x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    if x == 0.0 {
        return if b > 1.0 { 1.0 / (b - 1.0) } else { f64::INFINITY };
    }
    if x >= 1.0 {
        return (-x).exp() * scaled_upper_gamma(1.0 - b, x);
    }
    if b < 1.0 {
        x.powf(b - 1.0) * upper_gamma_raw(1.0 - b, x)
    } else {
        ((-x).exp() - x.powf(b - 1.0) * upper_gamma_raw(2.0 - b, x)) / (b - 1.0)
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // reference values keep all their digits
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn laplace_at_zero_is_one() {
        let dists = [
            SalesRateDistribution::pareto(0.3, 0.6).unwrap(),
            SalesRateDistribution::pareto(0.3, 1.6).unwrap(),
            SalesRateDistribution::pareto_cutoff(0.3, 0.6, 1e-3).unwrap(),
            SalesRateDistribution::empirical(vec![0.1, 2.0, 7.0]).unwrap(),
        ];
        for d in &dists {
            assert!((d.laplace_transform(0.0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_single_rate() {
        let d = SalesRateDistribution::empirical(vec![1.0]).unwrap();
        assert!((d.laplace_transform(std::f64::consts::LN_2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pareto_matches_quadrature() {
        let d = SalesRateDistribution::pareto(3.939e-4, 0.6312).unwrap();
        let v = d.laplace_transform(100.0).unwrap();
        assert!(rel(v, 0.753_934_042_845_098_911_38) < 1e-10);
        let q = oracle::pareto_laplace_quadrature(3.939e-4, 0.6312, 100.0);
        assert!(rel(v, q.value) < 1e-9);

        for &(a, b) in &[(1.0, 0.3), (1.0, 0.95), (2.0, 1.05), (0.5, 1.5), (1.0, 1.99), (1.0, 2.0)] {
            let d = SalesRateDistribution::pareto(a, b).unwrap();
            for &t in &[1e-6, 0.01, 0.3, 0.999, 1.001, 4.0, 60.0] {
                let v = d.laplace_transform(t).unwrap();
                let q = oracle::pareto_laplace_quadrature(a, b, t).value;
                assert!(rel(v, q) < 1e-9, "a={a} b={b} t={t}: {v} vs {q}");
            }
        }
    }

    #[test]
    fn kernel_branches_meet_at_one() {
        for b in [0.2, 0.6312, 0.97, 1.03, 1.5, 1.9] {
            let below = unit_tail_laplace(b, 1.0 - 1e-12);
            let above = unit_tail_laplace(b, 1.0);
            assert!(rel(below, above) < 1e-11, "b={b}");
            let below = unit_tail_first_moment(b, 1.0 - 1e-12);
            let above = unit_tail_first_moment(b, 1.0);
            assert!(rel(below, above) < 1e-11, "b={b}");
        }
    }

    #[test]
    fn band_moments_match_quadrature() {
        let (a, b) = (1.0, 1.5);
        let d = SalesRateDistribution::pareto(a, b).unwrap();
        for &(lo, hi, t) in &[(1.0, 2.0, 0.3), (1.5, 40.0, 0.02), (3.0, f64::INFINITY, 1.2), (0.0, 2.0, 0.0)] {
            for k in [0u8, 1] {
                let v = d.band_moment(lo, hi, t, k);
                let q = oracle::pareto_band_moment_quadrature(a, b, t, lo, hi, k as i32).value;
                assert!(rel(v, q) < 1e-9, "lo={lo} hi={hi} t={t} k={k}: {v} vs {q}");
            }
        }
    }

    #[test]
    fn discrete_rates_reproduce_closed_form() {
        let (a, b, n) = (1.0, 0.6312, 100_000);
        let rates = SalesRateDistribution::discrete_pareto_rates(a, b, 0.0, n).unwrap();
        assert!((rates[n - 1] - a).abs() < 1e-15);
        let emp = SalesRateDistribution::empirical(rates).unwrap();
        let par = SalesRateDistribution::pareto(a, b).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=200 {
            let t = 1e-4 * 10f64.powf(k as f64 * 6.0 / 200.0);
            let diff = (emp.laplace_transform(t).unwrap() - par.laplace_transform(t).unwrap()).abs();
            worst = worst.max(diff);
        }
        assert!(worst <= 5e-4, "max deviation {worst}");
    }

    #[test]
    fn cutoff_reduces_to_pareto() {
        let p = SalesRateDistribution::pareto(3.939e-4, 0.6312).unwrap();
        let c0 = SalesRateDistribution::pareto_cutoff(3.939e-4, 0.6312, 0.0).unwrap();
        let c = SalesRateDistribution::pareto_cutoff(3.939e-4, 0.6312, 1e-9).unwrap();
        for k in 0..=100 {
            let t = 1e4 * k as f64 / 100.0;
            let lp = p.laplace_transform(t).unwrap();
            assert_eq!(lp.to_bits(), c0.laplace_transform(t).unwrap().to_bits());
            assert!((lp - c.laplace_transform(t).unwrap()).abs() <= 1e-6, "t={t}");
        }
    }

    #[test]
    fn cutoff_matches_band_quadrature() {
        let (a, b, g) = (1.0, 0.7, 0.01);
        let d = SalesRateDistribution::pareto_cutoff(a, b, g).unwrap();
        let (_, upper) = d.support();
        for t in [0.0, 0.01, 0.5, 3.0] {
            let q = (1.0 + g) * oracle::pareto_band_laplace_quadrature(a, b, t, a, upper).value;
            assert!(rel(d.laplace_transform(t).unwrap(), q) < 1e-9, "t={t}");
        }
    }

    #[test]
    fn validation() {
        assert!(SalesRateDistribution::pareto(0.0, 0.5).is_err());
        assert!(SalesRateDistribution::pareto(1.0, 1.0 + 5e-7).is_err());
        assert!(SalesRateDistribution::pareto(1.0, 2.5).is_err());
        assert!(SalesRateDistribution::pareto_cutoff(1.0, 0.5, -0.1).is_err());
        assert!(SalesRateDistribution::empirical(vec![1.0, 0.0]).is_err());
        assert!(SalesRateDistribution::empirical(Vec::new()).is_err());
        let d = SalesRateDistribution::pareto(1.0, 0.5).unwrap();
        assert!(d.laplace_transform(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn laplace_strictly_decreasing(
            a in 0.01f64..10.0,
            b in prop_oneof![0.05f64..0.99, 1.01f64..1.99],
            t1 in 0.0f64..20.0,
            dt in 1e-3f64..20.0,
        ) {
            let d = SalesRateDistribution::pareto(a, b).unwrap();
            let t2 = t1 + dt;
            prop_assume!(a * t2 < 600.0);
            prop_assert!(d.laplace_transform(t1).unwrap() > d.laplace_transform(t2).unwrap());
        }

        #[test]
        fn empirical_laplace_decreasing(rates in proptest::collection::vec(0.01f64..5.0, 1..20), t1 in 0.0f64..10.0, dt in 1e-3f64..10.0) {
            let d = SalesRateDistribution::empirical(rates).unwrap();
            prop_assert!(d.laplace_transform(t1).unwrap() > d.laplace_transform(t1 + dt).unwrap());
        }
    }
}
