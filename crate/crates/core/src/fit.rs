//! Least-squares recovery of the Pareto triple (N, a, b) from one ranking
//! trajectory, using the model `rank(t) = N · y_C(t; a, b)`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{unit_tail_survival, B_GUARD};
use crate::error::{Error, Result};
use crate::io::round_sig;
use crate::simplex;
use crate::trajectory::RankingTrajectory;

pub const MIN_OBSERVATIONS: usize = 6;

const N_START_FACTORS: [f64; 4] = [1.05, 2.0, 5.0, 10.0];
const A_START_FACTORS: [f64; 4] = [0.3, 1.0, 3.0, 10.0];
const B_STARTS: [f64; 6] = [0.3, 0.5, 0.7, 0.9, 1.2, 1.5];
const B_MAX: f64 = 2.0 - 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Simplex diameter (in log N, log a, b) below which a start has converged.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Explicit starting points `(N, a, b)`; the coarse grid is used if empty.
    pub starts: Vec<(f64, f64, f64)>,
    /// Weight residuals by `1/rank²` instead of uniformly.
    pub relative_weights: bool,
    /// Worker threads for the multi-start; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 2000, starts: Vec::new(), relative_weights: false, threads: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub n_star: f64,
    pub a_star: f64,
    pub b_star: f64,
    pub chi2: f64,
    pub delta_y_c: f64,
    pub converged: bool,
    pub starts_tried: usize,
}

impl FitResult {
    /// Flat JSON object, numbers rounded to 12 significant digits.
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        let rounded = FitResult {
            n_star: round_sig(self.n_star),
            a_star: round_sig(self.a_star),
            b_star: round_sig(self.b_star),
            chi2: round_sig(self.chi2),
            delta_y_c: round_sig(self.delta_y_c),
            ..self.clone()
        };
        serde_json::to_writer_pretty(&mut out, &rounded)?;
        writeln!(out).map_err(|source| Error::Io { path: "<json>".into(), source })?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Model curve `N y_C(t)` for the plain Pareto law, without validation.
fn model(n: f64, a: f64, b: f64, t: f64) -> f64 {
    n * unit_tail_survival(b, a * t)
}

fn admissible_b(b: f64) -> Option<f64> {
    if !(b > 0.0 && b <= B_MAX) {
        return None;
    }
    Some(if (b - 1.0).abs() < B_GUARD {
        if b < 1.0 {
            1.0 - B_GUARD
        } else {
            1.0 + B_GUARD
        }
    } else {
        b
    })
}

/// Sum of squared rank residuals against `n · y_C(t; a, b)`.
pub fn chi2(traj: &RankingTrajectory, n: f64, a: f64, b: f64) -> Result<f64> {
    crate::dist::SalesRateDistribution::pareto(a, b)?;
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Domain(format!("N must be positive, got {n}")));
    }
    Ok(weighted_chi2(traj, n, a, b, false))
}

fn weighted_chi2(traj: &RankingTrajectory, n: f64, a: f64, b: f64, relative: bool) -> f64 {
    traj.points
        .iter()
        .map(|&(t, rank)| {
            let r = rank - model(n, a, b, t);
            if relative {
                (r / rank).powi(2)
            } else {
                r * r
            }
        })
        .sum()
}

fn check_data(traj: &RankingTrajectory) -> Result<()> {
    if traj.n_d() < MIN_OBSERVATIONS {
        return Err(Error::InsufficientObservations { got: traj.n_d(), need: MIN_OBSERVATIONS });
    }
    let first = traj.points[0];
    if traj.points.iter().all(|p| p.1 == first.1) {
        return Err(Error::Degenerate("all ranks are identical".into()));
    }
    if traj.points.iter().all(|p| p.0 == first.0) {
        return Err(Error::Degenerate("all observations share one time".into()));
    }
    Ok(())
}

/// Coarse start grid around the data scale.
pub fn start_grid(traj: &RankingTrajectory) -> Vec<(f64, f64, f64)> {
    let max_rank = traj.ranks().fold(0.0, f64::max);
    let span = traj.times().fold(0.0, f64::max) - traj.times().fold(f64::INFINITY, f64::min);
    let span = if span > 0.0 { span } else { 1.0 };
    let mut starts = Vec::with_capacity(96);
    for nf in N_START_FACTORS {
        for af in A_START_FACTORS {
            for b in B_STARTS {
                starts.push((nf * max_rank, af / span, b));
            }
        }
    }
    starts
}

/// Multi-start simplex fit of `(N, a, b)`.
pub fn fit_pareto(traj: &RankingTrajectory, options: &FitOptions) -> Result<FitResult> {
    check_data(traj)?;
    let starts = if options.starts.is_empty() { start_grid(traj) } else { options.starts.clone() };
    let relative = options.relative_weights;
    let objective = |x: &[f64; 3]| match admissible_b(x[2]) {
        Some(b) => weighted_chi2(traj, x[0].exp(), x[1].exp(), b, relative),
        None => f64::INFINITY,
    };
    let descend = |&(n, a, b): &(f64, f64, f64)| {
        simplex::minimize(objective, [n.ln(), a.ln(), b], [0.1, 0.3, 0.05], options.tolerance, options.max_iterations)
    };
    let outcomes: Vec<_> = match options.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?
            .install(|| starts.par_iter().map(descend).collect()),
        None => starts.par_iter().map(descend).collect(),
    };
    let any_converged = outcomes.iter().any(|o| o.converged);
    let best = outcomes.into_iter().min_by(|x, y| x.f.total_cmp(&y.f)).expect("at least one start");

    let (mut n, a) = (best.x[0].exp(), best.x[1].exp());
    let b = admissible_b(best.x[2]).expect("finite optimum has admissible b");
    // N enters linearly; its exact optimum for the final (a, b) can only help.
    if !relative {
        let (num, den) = traj.points.iter().fold((0.0, 0.0), |(num, den), &(t, rank)| {
            let y = unit_tail_survival(b, a * t);
            (num + rank * y, den + y * y)
        });
        let profiled = num / den;
        if profiled > 0.0 && weighted_chi2(traj, profiled, a, b, false) < weighted_chi2(traj, n, a, b, false) {
            n = profiled;
        }
    }
    let chi2 = weighted_chi2(traj, n, a, b, false);
    Ok(FitResult {
        n_star: n,
        a_star: a,
        b_star: b,
        chi2,
        delta_y_c: (chi2 / traj.n_d() as f64).sqrt() / n,
        converged: any_converged,
        starts_tried: starts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// b < 1: the head dominates total sales.
    GreatHits,
    /// b > 1: the aggregate tail dominates.
    LongTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShortTimeShape {
    /// y_C ∝ t^b near 0: concave, tangential to the rank axis.
    ConcavePowerLaw,
    /// y_C ∝ t near 0.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeAssessment {
    pub regime: Regime,
    pub short_time: ShortTimeShape,
    pub b: f64,
}

pub const DEFAULT_REGIME_GUARD: f64 = 0.02;

pub fn classify_regime(result: &FitResult, guard: f64) -> Result<RegimeAssessment> {
    if !result.converged {
        return Err(Error::Domain("cannot classify a fit that did not converge".into()));
    }
    let b = result.b_star;
    if (b - 1.0).abs() < guard {
        return Err(Error::Indeterminate { b, guard });
    }
    Ok(if b < 1.0 {
        RegimeAssessment { regime: Regime::GreatHits, short_time: ShortTimeShape::ConcavePowerLaw, b }
    } else {
        RegimeAssessment { regime: Regime::LongTail, short_time: ShortTimeShape::Linear, b }
    })
}
