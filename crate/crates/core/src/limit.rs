//! Infinite-particle limit of the ranking process: the boundary curve y_C,
//! its inverse, the stationary joint law of (rate, scaled rank), and the
//! sales-share functionals built on them.

use std::io::Write;

use serde::Serialize;

use crate::dist::SalesRateDistribution;
use crate::error::{domain, Error, Result};
use crate::io;
use crate::special::gamma;

const BISECTION_ITERS: usize = 200;
const BISECTION_REL_WIDTH: f64 = 1e-14;

/// y_C(t) = 1 - L(t): scaled rank at time t of an item that sold at t = 0.
pub fn y_c(dist: &SalesRateDistribution, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain(format!("time must be non-negative, got {t}")));
    }
    Ok(dist.one_minus_laplace(t))
}

/// Leading short-time behaviour `(at)^b Γ(1-b)` of y_C for a Pareto law
/// with b < 1.
pub fn y_c_short_time(dist: &SalesRateDistribution, t: f64) -> Result<f64> {
    let (a, b) = pareto_params(dist)?;
    if b >= 1.0 {
        return Err(domain(format!("short-time power law needs b < 1, got b = {b}")));
    }
    if !(t >= 0.0) {
        return Err(domain(format!("time must be non-negative, got {t}")));
    }
    Ok((a * t).powf(b) * gamma(1.0 - b))
}

/// x_C(t) ≈ N y_C(t), the rank number of the boundary item.
pub fn x_c(dist: &SalesRateDistribution, t: f64, n_titles: u64) -> Result<f64> {
    if n_titles == 0 {
        return Err(domain("number of titles must be at least 1"));
    }
    Ok(n_titles as f64 * y_c(dist, t)?)
}

/// t₀(y): the time at which y_C reaches `y`, by bracketed bisection.
pub fn invert_y_c(dist: &SalesRateDistribution, y: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&y) {
        return Err(domain(format!("y must lie in [0, 1), got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let curve = |t: f64| dist.one_minus_laplace(t);
    let mut hi = 1.0 / dist.rate_scale();
    let mut doublings = 0;
    while curve(hi) <= y {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2100 || !hi.is_finite() {
            return Err(domain(format!("y = {y} is numerically indistinguishable from 1")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_ITERS {
        if hi - lo <= BISECTION_REL_WIDTH * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if curve(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dimensionless inverse `q(r) = a t₀(r)`. The endpoints are reported as
/// distinct states rather than as floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QValue {
    Zero,
    Finite(f64),
    Infinite,
}

impl QValue {
    pub fn value(self) -> f64 {
        match self {
            QValue::Zero => 0.0,
            QValue::Finite(q) => q,
            QValue::Infinite => f64::INFINITY,
        }
    }
}

pub fn q_of_r(dist: &SalesRateDistribution, r: f64) -> Result<QValue> {
    let (a, _) = pareto_params(dist)?;
    if !(0.0..=1.0).contains(&r) {
        return Err(domain(format!("r must lie in [0, 1], got {r}")));
    }
    Ok(if r == 0.0 {
        QValue::Zero
    } else if r == 1.0 {
        QValue::Infinite
    } else {
        QValue::Finite(a * invert_y_c(dist, r)?)
    })
}

fn check_band(r1: f64, r2: f64) -> Result<()> {
    if !(0.0 <= r1 && r1 < r2 && r2 <= 1.0) {
        return Err(domain(format!("need 0 <= r1 < r2 <= 1, got r1 = {r1}, r2 = {r2}")));
    }
    Ok(())
}

/// lim S(r1, r2)/N: sales per unit time per item from the items ranked
/// between r1·N and r2·N by their true sales rate.
pub fn sales_share_potential(dist: &SalesRateDistribution, r1: f64, r2: f64) -> Result<f64> {
    check_band(r1, r2)?;
    if let Some(rates) = dist.rates() {
        return Ok(empirical_quantile_integral(rates, r1, r2));
    }
    let (a, b) = pareto_params(dist)?;
    let gamma = dist.gamma().unwrap_or(0.0);
    if gamma == 0.0 && b < 1.0 && r1 == 0.0 {
        return Err(Error::Divergent(format!("head sales S(0, r) diverge for the uncut Pareto law with b = {b} < 1")));
    }
    // a ∫_{r1}^{r2} ((1+γ)/(x+γ))^{1/b} dx
    let e = (b - 1.0) / b;
    Ok(a * (1.0 + gamma).powf(1.0 / b) * b / (b - 1.0) * ((r2 + gamma).powf(e) - (r1 + gamma).powf(e)))
}

/// ∫_{r1}^{r2} w_{⌈xN⌉} dx over rates sorted in decreasing order.
fn empirical_quantile_integral(rates: &[f64], r1: f64, r2: f64) -> f64 {
    let n = rates.len() as f64;
    let (x1, x2) = (r1 * n, r2 * n);
    let mut total = 0.0;
    let first = x1.floor() as usize;
    let last = (x2.ceil() as usize).min(rates.len());
    for (i, w) in rates.iter().enumerate().take(last).skip(first) {
        let lo = (i as f64).max(x1);
        let hi = ((i + 1) as f64).min(x2);
        if hi > lo {
            total += w * (hi - lo);
        }
    }
    total / n
}

/// lim S̃(r1, r2)/N: sales per unit time per item from the items occupying
/// ranking positions r1·N to r2·N at a stationary instant,
/// ∫ w (e^{-w t₀(r1)} - e^{-w t₀(r2)}) λ(dw).
pub fn sales_share_ranking(dist: &SalesRateDistribution, r1: f64, r2: f64) -> Result<f64> {
    check_band(r1, r2)?;
    let head = ranking_tail_moment(dist, r1)?;
    let tail = ranking_tail_moment(dist, r2)?;
    if head.is_infinite() {
        return Err(Error::Divergent(
            "ranking head sales S̃(0, r) diverge for this distribution (b < 1 without cutoff)".into(),
        ));
    }
    Ok(head - tail)
}

/// ∫ w e^{-w t₀(r)} λ(dw), i.e. lim S̃(r, 1)/N.
fn ranking_tail_moment(dist: &SalesRateDistribution, r: f64) -> Result<f64> {
    if r >= 1.0 {
        return Ok(0.0);
    }
    let t0 = invert_y_c(dist, r)?;
    dist.first_moment(t0)
}

fn check_rate_band(w_lo: f64, w_hi: f64) -> Result<()> {
    if !(w_lo >= 0.0 && w_lo <= w_hi) || w_lo.is_infinite() {
        return Err(domain(format!("need 0 <= w_lo <= w_hi, got [{w_lo}, {w_hi}]")));
    }
    Ok(())
}

fn covers_support(dist: &SalesRateDistribution, w_lo: f64, w_hi: f64) -> bool {
    let (lo, hi) = dist.support();
    w_lo <= lo && w_hi >= hi
}

/// Fraction of all items that have rate in `[w_lo, w_hi]` and scaled rank in
/// `[0, y]` once the ranking is stationary: ∫ (1 - e^{-w t₀(y)}) λ(dw).
pub fn stationary_joint_cdf(dist: &SalesRateDistribution, y: f64, w_lo: f64, w_hi: f64) -> Result<f64> {
    check_rate_band(w_lo, w_hi)?;
    if y == 1.0 {
        return Ok(dist.band_moment(w_lo, w_hi, 0.0, 0));
    }
    let t0 = invert_y_c(dist, y)?;
    if covers_support(dist, w_lo, w_hi) {
        return Ok(y);
    }
    Ok(dist.band_moment(w_lo, w_hi, 0.0, 0) - dist.band_moment(w_lo, w_hi, t0, 0))
}

/// Same measure as [`stationary_joint_cdf`] for ranks behind the boundary
/// (`y > y_C(t)`), at time `t` after a launch where initial ranks were
/// independent of rates.
pub fn nonstationary_joint_cdf(dist: &SalesRateDistribution, y: f64, w_lo: f64, w_hi: f64, t: f64) -> Result<f64> {
    check_rate_band(w_lo, w_hi)?;
    let boundary = y_c(dist, t)?;
    if !(y > boundary && y <= 1.0) {
        return Err(domain(format!("y = {y} is not behind the boundary y_C(t) = {boundary}; use the stationary form")));
    }
    let survivors = dist.laplace_unchecked(t);
    let y_hat = 1.0 - (1.0 - y) / survivors;
    if covers_support(dist, w_lo, w_hi) {
        return Ok(boundary + y_hat * survivors);
    }
    let unsold = dist.band_moment(w_lo, w_hi, t, 0);
    Ok(dist.band_moment(w_lo, w_hi, 0.0, 0) - unsold + y_hat * unsold)
}

fn pareto_params(dist: &SalesRateDistribution) -> Result<(f64, f64)> {
    match (dist.a(), dist.b()) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(domain("operation requires a Pareto-type distribution")),
    }
}

/// Tail shares by true rate and by ranking over a grid of r values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SalesShareReport {
    pub rows: Vec<ShareRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShareRow {
    pub r: f64,
    pub q: f64,
    pub s_potential: f64,
    pub s_ranking: f64,
    pub ratio: f64,
}

pub const SHARES_HEADER: [&str; 5] = ["r", "q", "S_potential", "S_ranking", "ratio"];

impl SalesShareReport {
    /// Tabulates S(r, 1), S̃(r, 1) and their ratio. At `r = 1` both vanish and
    /// the ratio is reported as 1.
    pub fn tail_shares(dist: &SalesRateDistribution, r_grid: &[f64]) -> Result<Self> {
        let mut rows = Vec::with_capacity(r_grid.len());
        for &r in r_grid {
            if !(r > 0.0 && r <= 1.0) {
                return Err(domain(format!("grid values must lie in (0, 1], got {r}")));
            }
            let q = q_of_r(dist, r)?.value();
            let (s_potential, s_ranking) = if r == 1.0 {
                (0.0, 0.0)
            } else {
                (sales_share_potential(dist, r, 1.0)?, sales_share_ranking(dist, r, 1.0)?)
            };
            let ratio = if r == 1.0 { 1.0 } else { s_ranking / s_potential };
            rows.push(ShareRow { r, q, s_potential, s_ranking, ratio });
        }
        Ok(Self { rows })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        io::write_numeric_csv(
            out,
            &SHARES_HEADER,
            self.rows.iter().map(|r| vec![r.r, r.q, r.s_potential, r.s_ranking, r.ratio]),
        )
    }

    pub fn read_csv(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let rows = io::read_numeric_csv(path.as_ref(), &SHARES_HEADER)?;
        Ok(Self {
            rows: rows
                .into_iter()
                .map(|(_, v)| ShareRow { r: v[0], q: v[1], s_potential: v[2], s_ranking: v[3], ratio: v[4] })
                .collect(),
        })
    }
}

/// Evenly spaced grid `start, start + step, …` up to `stop` inclusive.
pub fn r_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop <= 1.0 && start <= stop && step > 0.0) {
        return Err(domain(format!("invalid grid {start}:{step}:{stop}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| io::round_sig(start + k as f64 * step)).collect())
}
