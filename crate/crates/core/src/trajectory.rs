use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

pub const TRAJECTORY_HEADER: [&str; 2] = ["t_hours", "rank"];

/// Observed ranks of one item between two of its own sales. `t = 0` is the
/// sale that reset the item to rank 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankingTrajectory {
    pub points: Vec<(f64, f64)>,
    pub meta: String,
}

impl RankingTrajectory {
    /// Builds a trajectory, checking that times strictly increase and ranks
    /// are at least 1.
    pub fn new(points: Vec<(f64, f64)>, meta: impl Into<String>) -> Result<Self> {
        for (k, &(t, rank)) in points.iter().enumerate() {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::Domain(format!("point {k}: time {t} must be finite and non-negative")));
            }
            if !(rank.is_finite() && rank >= 1.0) {
                return Err(Error::Domain(format!("point {k}: rank {rank} must be at least 1")));
            }
            if k > 0 && t <= points[k - 1].0 {
                return Err(Error::Domain(format!("point {k}: times must be strictly increasing")));
            }
        }
        Ok(Self { points, meta: meta.into() })
    }

    pub fn n_d(&self) -> usize {
        self.points.len()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn ranks(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let rows = io::read_numeric_csv(path, &TRAJECTORY_HEADER)?;
        let mut points = Vec::with_capacity(rows.len());
        for (line, row) in rows {
            let (t, rank) = (row[0], row[1]);
            let bad = |msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
            if !(t.is_finite() && t >= 0.0) {
                return Err(bad(format!("time {t} must be non-negative")));
            }
            if !(rank.is_finite() && rank >= 1.0) {
                return Err(bad(format!("rank {rank} must be at least 1")));
            }
            if let Some(&(prev, _)) = points.last() {
                if t <= prev {
                    return Err(bad(format!("time {t} does not increase past {prev}")));
                }
            }
            points.push((t, rank));
        }
        Ok(Self { points, meta: path.display().to_string() })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        io::write_numeric_csv(out, &TRAJECTORY_HEADER, self.points.iter().map(|&(t, r)| vec![t, r]))
    }
}
