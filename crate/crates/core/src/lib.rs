//! Finite-N simulation, infinite-particle limit and parameter fitting for
//! the stochastic ranking (move-to-front) process.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod fit;
pub mod io;
pub mod limit;
pub mod oracle;
pub mod sim;
mod simplex;
pub mod special;
pub mod trajectory;

pub use dist::{DistributionKind, SalesRateDistribution};
pub use error::{Error, Result};
pub use fit::{chi2, classify_regime, fit_pareto, FitOptions, FitResult, Regime};
pub use limit::{
    invert_y_c, nonstationary_joint_cdf, q_of_r, sales_share_potential, sales_share_ranking, stationary_joint_cdf, x_c,
    y_c, y_c_short_time, QValue, SalesShareReport,
};
pub use sim::{run_simulation, SimulationConfig, SimulationRun};
pub use trajectory::RankingTrajectory;
