//! Event-driven simulation of the finite-N stochastic ranking process.
//!
//! Every item carries an independent exponential sales clock. A sale moves
//! the item to rank 1 and pushes the items that were ahead of it down by one.
//! The move-to-front order equals the reverse order of last sale, so ranks
//! are not maintained per event; they are reconstructed from last-sale
//! sequence numbers when a snapshot is taken.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1, Normal};
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::dist::SalesRateDistribution;
use crate::error::{Error, Result};
use crate::io;
use crate::limit::y_c;
use crate::trajectory::RankingTrajectory;

pub const GENERATOR: &str = "xoshiro256++ (seed_from_u64)";
pub const DEFAULT_MAX_EVENTS: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Sales rate of each item (1/time).
    pub rates: Vec<f64>,
    /// Initial rank (1-based) of each item; a permutation of `1..=N`.
    pub initial_ranks: Vec<usize>,
    pub horizon: f64,
    pub seed: u64,
    /// Sorted, non-negative, at most `horizon`.
    pub observe_times: Vec<f64>,
    /// Item whose rank is followed at every observation time.
    pub track_item: Option<usize>,
    /// Record the full ranking at every observation time.
    pub full_snapshots: bool,
    pub record_events: bool,
    /// Upper bound on the expected number of events, `Σw · horizon`.
    pub max_events: f64,
}

impl SimulationConfig {
    /// Items start in index order; no observations, no tracking.
    pub fn new(rates: Vec<f64>, horizon: f64, seed: u64) -> Self {
        let n = rates.len();
        Self {
            rates,
            initial_ranks: (1..=n).collect(),
            horizon,
            seed,
            observe_times: Vec::new(),
            track_item: None,
            full_snapshots: false,
            record_events: false,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    pub fn n_items(&self) -> usize {
        self.rates.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rates.len();
        if n == 0 {
            return Err(Error::Config("at least one item is required".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::Config(format!("{n} items exceed the supported maximum")));
        }
        if let Some(w) = self.rates.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Config(format!("every sales rate must be positive, found {w}")));
        }
        if self.initial_ranks.len() != n {
            return Err(Error::Config("initial order must list one rank per item".into()));
        }
        let mut seen = vec![false; n];
        for &r in &self.initial_ranks {
            if r == 0 || r > n || std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::Config("initial order is not a permutation of 1..=N".into()));
            }
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        for pair in self.observe_times.windows(2) {
            if pair[1] < pair[0] {
                return Err(Error::Config("observation times must be sorted".into()));
            }
        }
        if let Some(&t) = self.observe_times.iter().find(|t| !(**t >= 0.0 && **t <= self.horizon)) {
            return Err(Error::Config(format!("observation time {t} lies outside [0, horizon]")));
        }
        if let Some(i) = self.track_item {
            if i >= n {
                return Err(Error::Config(format!("tracked item {i} does not exist")));
            }
        }
        Ok(())
    }

    /// Writes the configuration as flat `key=value` lines.
    pub fn write_kv<W: Write>(&self, mut out: W) -> Result<()> {
        let io_err = |source| Error::Io { path: "<config>".into(), source };
        writeln!(out, "n_items={}", self.n_items()).map_err(io_err)?;
        writeln!(out, "horizon={}", io::fmt_num(self.horizon)).map_err(io_err)?;
        writeln!(out, "seed={}", self.seed).map_err(io_err)?;
        writeln!(out, "generator={GENERATOR}").map_err(io_err)?;
        if let Some(i) = self.track_item {
            writeln!(out, "track_item={}", i + 1).map_err(io_err)?;
        }
        writeln!(out, "observations={}", self.observe_times.len()).map_err(io_err)?;
        writeln!(out, "max_events={}", io::fmt_num(self.max_events)).map_err(io_err)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaleEvent {
    pub t: f64,
    pub item: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: f64,
    /// Number of distinct items that have sold in (0, t]: x_C^{(N)}(t).
    pub sold: usize,
    /// Rank of the tracked item, if any.
    pub tracked_rank: Option<usize>,
    /// Time of the tracked item's last rank reset (its last sale, or 0 when
    /// it started at rank 1 and has not sold yet).
    pub tracked_reset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// Rank of each item (1-based).
    pub ranks: Vec<u32>,
    /// Last sale time of each item, `None` if it has not sold.
    pub last_sale: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub rates: Vec<f64>,
    pub initial_ranks: Vec<usize>,
    pub events: Vec<SaleEvent>,
    pub n_events: u64,
    pub last_sale: Vec<Option<f64>>,
    pub observations: Vec<Observation>,
    pub snapshots: Vec<Snapshot>,
    pub track_item: Option<usize>,
    pub generator: &'static str,
    pub seed: u64,
}

struct State<'a> {
    initial_ranks: &'a [usize],
    by_initial_rank: Vec<usize>,
    last_seq: Vec<u64>,
    last_time: Vec<f64>,
    sold: usize,
    tracked: Option<Tracker>,
}

/// O(1) rank bookkeeping for one item: the rank is one plus the number of
/// distinct other items sold since its last sale.
struct Tracker {
    item: usize,
    initial_rank: usize,
    epoch: u32,
    stamp: Vec<u32>,
    distinct_since: usize,
    sold_ahead: usize,
    reset: Option<f64>,
}

impl Tracker {
    fn rank(&self, sold: usize, has_sold: bool) -> usize {
        if has_sold {
            1 + self.distinct_since
        } else {
            sold + (self.initial_rank - 1 - self.sold_ahead) + 1
        }
    }
}

impl State<'_> {
    fn record_sale(&mut self, item: usize, t: f64, seq: u64) {
        let first = self.last_seq[item] == 0;
        if first {
            self.sold += 1;
        }
        if let Some(tr) = self.tracked.as_mut() {
            if item == tr.item {
                tr.epoch += 1;
                tr.distinct_since = 0;
                tr.reset = Some(t);
            } else {
                if first && self.initial_ranks[item] < tr.initial_rank {
                    tr.sold_ahead += 1;
                }
                if self.last_seq[tr.item] != 0 && tr.stamp[item] != tr.epoch {
                    tr.stamp[item] = tr.epoch;
                    tr.distinct_since += 1;
                }
            }
        }
        self.last_seq[item] = seq;
        self.last_time[item] = t;
    }

    fn observe(&self, t: f64) -> Observation {
        let (tracked_rank, tracked_reset) = match &self.tracked {
            Some(tr) => (Some(tr.rank(self.sold, self.last_seq[tr.item] != 0)), tr.reset),
            None => (None, None),
        };
        Observation { t, sold: self.sold, tracked_rank, tracked_reset }
    }

    fn snapshot(&self, t: f64) -> Snapshot {
        let n = self.last_seq.len();
        let mut sold: Vec<usize> = (0..n).filter(|&i| self.last_seq[i] != 0).collect();
        sold.sort_unstable_by_key(|&i| std::cmp::Reverse(self.last_seq[i]));
        let mut ranks = vec![0u32; n];
        let unsold = self.by_initial_rank.iter().copied().filter(|&i| self.last_seq[i] == 0);
        for (k, i) in sold.into_iter().chain(unsold).enumerate() {
            ranks[i] = (k + 1) as u32;
        }
        let last_sale = (0..n).map(|i| (self.last_seq[i] != 0).then_some(self.last_time[i])).collect();
        Snapshot { t, ranks, last_sale }
    }
}

/// Runs the process up to `config.horizon`.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationRun> {
    config.validate()?;
    let n = config.n_items();
    let total_rate: f64 = config.rates.iter().sum();
    let expected = total_rate * config.horizon;
    if expected > config.max_events {
        return Err(Error::Capacity { expected, cap: config.max_events });
    }
    let alias = WeightedAliasIndex::new(config.rates.clone())
        .map_err(|e| Error::Config(format!("cannot build alias table: {e}")))?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);

    let mut by_initial_rank = vec![0; n];
    for (i, &r) in config.initial_ranks.iter().enumerate() {
        by_initial_rank[r - 1] = i;
    }
    let tracked = config.track_item.map(|item| {
        let initial_rank = config.initial_ranks[item];
        Tracker {
            item,
            initial_rank,
            epoch: 0,
            stamp: vec![0; n],
            distinct_since: 0,
            sold_ahead: 0,
            reset: (initial_rank == 1).then_some(0.0),
        }
    });
    let mut state = State {
        initial_ranks: &config.initial_ranks,
        by_initial_rank,
        last_seq: vec![0; n],
        last_time: vec![0.0; n],
        sold: 0,
        tracked,
    };

    let mut events = Vec::new();
    let mut observations = Vec::with_capacity(config.observe_times.len());
    let mut snapshots = Vec::new();
    let mut pending = config.observe_times.iter().copied().peekable();
    let mut t = 0.0;
    let mut seq: u64 = 0;
    loop {
        let dt: f64 = Exp1.sample(&mut rng);
        t += dt / total_rate;
        while let Some(obs) = pending.next_if(|&o| o < t) {
            observations.push(state.observe(obs));
            if config.full_snapshots {
                snapshots.push(state.snapshot(obs));
            }
        }
        if t > config.horizon {
            break;
        }
        let item = alias.sample(&mut rng);
        seq += 1;
        state.record_sale(item, t, seq);
        if config.record_events {
            events.push(SaleEvent { t, item });
        }
    }

    let last_sale = (0..n).map(|i| (state.last_seq[i] != 0).then_some(state.last_time[i])).collect();
    Ok(SimulationRun {
        rates: config.rates.clone(),
        initial_ranks: config.initial_ranks.clone(),
        events,
        n_events: seq,
        last_sale,
        observations,
        snapshots,
        track_item: config.track_item,
        generator: GENERATOR,
        seed: config.seed,
    })
}

/// 2-D histogram of (scaled rank, sales rate), normalized by N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointHistogram {
    pub y_edges: Vec<f64>,
    pub w_edges: Vec<f64>,
    /// `mass[y_bin][w_bin]`.
    pub mass: Vec<Vec<f64>>,
}

fn bin_of(edges: &[f64], x: f64) -> Option<usize> {
    let last = edges.len() - 1;
    if x < edges[0] || x > edges[last] {
        return None;
    }
    if x == edges[last] {
        return Some(last - 1);
    }
    Some(edges.partition_point(|&e| e <= x) - 1)
}

impl SimulationRun {
    pub fn n_items(&self) -> usize {
        self.rates.len()
    }

    pub fn snapshot_at(&self, t: f64) -> Result<&Snapshot> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1.0)).ok_or(Error::MissingSnapshot(t))
    }

    /// Scaled boundary y_C^{(N)}(t) = x_C^{(N)}(t)/N at every observation.
    pub fn boundary_curve(&self) -> Vec<(f64, f64)> {
        let n = self.n_items() as f64;
        self.observations.iter().map(|o| (o.t, o.sold as f64 / n)).collect()
    }

    /// x_C^{(N)}(t) + 1: the rank of an item that sat at rank 1 at t = 0 and
    /// has not sold since. Observations at t = 0 are skipped.
    pub fn boundary_trajectory(&self) -> RankingTrajectory {
        let points = self.observations.iter().filter(|o| o.t > 0.0).map(|o| (o.t, (o.sold + 1) as f64)).collect();
        RankingTrajectory { points, meta: format!("boundary x_C+1, seed {}", self.seed) }
    }

    /// Rank trajectory of `item` over its first observed segment between
    /// rank resets, with time measured from the reset.
    ///
    /// Works for the tracked item, or any item when full snapshots exist.
    pub fn x_c_trajectory(&self, item: usize) -> Result<RankingTrajectory> {
        if item >= self.n_items() {
            return Err(Error::Domain(format!("item {item} does not exist")));
        }
        let samples: Vec<(f64, usize, Option<f64>)> = if self.track_item == Some(item) {
            self.observations.iter().map(|o| (o.t, o.tracked_rank.expect("tracked"), o.tracked_reset)).collect()
        } else if !self.snapshots.is_empty() && self.snapshots.len() == self.observations.len() {
            let starts_first = self.initial_ranks[item] == 1;
            self.snapshots
                .iter()
                .map(|s| {
                    let reset = s.last_sale[item].or(starts_first.then_some(0.0));
                    (s.t, s.ranks[item] as usize, reset)
                })
                .collect()
        } else {
            return Err(Error::Domain(format!("item {item} is not tracked and the run has no full snapshots")));
        };
        let mut points = Vec::new();
        let mut segment: Option<f64> = None;
        for (t, rank, reset) in samples {
            match (segment, reset) {
                (None, Some(r)) => segment = Some(r),
                (Some(s), Some(r)) if r != s => break,
                _ => {}
            }
            if let (Some(s), Some(_)) = (segment, reset) {
                if t > s {
                    points.push((t - s, rank as f64));
                }
            }
        }
        Ok(RankingTrajectory { points, meta: format!("item {} seed {}", item + 1, self.seed) })
    }

    /// Histogram of (Y_i, w_i) with `Y_i = (X_i(t) - 1)/N`. Bins are half-open
    /// except the last, which is closed.
    pub fn empirical_joint_measure(&self, t: f64, y_edges: &[f64], w_edges: &[f64]) -> Result<JointHistogram> {
        for edges in [y_edges, w_edges] {
            if edges.len() < 2 || edges.windows(2).any(|p| !(p[1] > p[0])) {
                return Err(Error::Domain("bin edges must be increasing with at least two entries".into()));
            }
        }
        let snap = self.snapshot_at(t)?;
        let n = self.n_items() as f64;
        let mut mass = vec![vec![0.0; w_edges.len() - 1]; y_edges.len() - 1];
        for (i, &rank) in snap.ranks.iter().enumerate() {
            let y = (rank as f64 - 1.0) / n;
            if let (Some(yb), Some(wb)) = (bin_of(y_edges, y), bin_of(w_edges, self.rates[i])) {
                mass[yb][wb] += 1.0 / n;
            }
        }
        Ok(JointHistogram { y_edges: y_edges.to_vec(), w_edges: w_edges.to_vec(), mass })
    }

    /// Events as CSV `t,item` with 1-based item indices.
    pub fn write_events_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "item"])?;
        for e in &self.events {
            w.write_record([io::fmt_num(e.t), (e.item + 1).to_string()])?;
        }
        w.flush().map_err(|source| Error::Io { path: "<events>".into(), source })?;
        Ok(())
    }

    /// One snapshot as CSV `item,w,rank`.
    pub fn write_snapshot_csv<W: Write>(&self, snap: &Snapshot, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["item", "w", "rank"])?;
        for (i, &rank) in snap.ranks.iter().enumerate() {
            w.write_record([(i + 1).to_string(), io::fmt_num(self.rates[i]), rank.to_string()])?;
        }
        w.flush().map_err(|source| Error::Io { path: "<snapshot>".into(), source })?;
        Ok(())
    }
}

/// Samples `n_titles · y_C(t_k)` plus Gaussian noise, clamped to `[1, n_titles]`.
pub fn synthesize_noisy_trajectory(
    dist: &SalesRateDistribution,
    n_titles: f64,
    observe_times: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<RankingTrajectory> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Domain(format!("noise sigma must be non-negative, got {noise_sigma}")));
    }
    if !(n_titles >= 1.0) {
        return Err(Error::Domain(format!("number of titles must be at least 1, got {n_titles}")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let mut points = Vec::with_capacity(observe_times.len());
    for &t in observe_times {
        let clean = n_titles * y_c(dist, t)?;
        let rank = if noise_sigma > 0.0 { clean + noise.sample(&mut rng) } else { clean };
        points.push((t, rank.clamp(1.0, n_titles)));
    }
    RankingTrajectory::new(points, format!("synthetic, sigma {noise_sigma}, seed {seed}"))
}

/// Flat `key=value` simulation settings, as read from a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    pub n_items: usize,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub horizon: f64,
    pub seed: u64,
    pub observe_every: f64,
    /// 1-based index in decreasing-rate order; defaults to the slowest item.
    pub track_item: Option<usize>,
    pub max_events: f64,
    pub record_events: bool,
    pub snapshots: bool,
}

impl SimulationSettings {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Parse { path: path.to_path_buf(), line: k as u64 + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{line}`")))?;
            let key = key.trim();
            const KEYS: [&str; 11] = [
                "n_items",
                "a",
                "b",
                "gamma",
                "horizon",
                "seed",
                "observe_every",
                "track_item",
                "max_events",
                "record_events",
                "snapshots",
            ];
            if !KEYS.contains(&key) {
                return Err(bad(format!("unknown key `{key}`")));
            }
            if map.insert(key.to_string(), (k as u64 + 1, value.trim().to_string())).is_some() {
                return Err(bad(format!("duplicate key `{key}`")));
            }
        }
        fn get<T: std::str::FromStr>(map: &BTreeMap<String, (u64, String)>, path: &Path, key: &str) -> Result<Option<T>>
        where
            T::Err: std::fmt::Display,
        {
            map.get(key).map(|(line, v)| io::parse_field(path, *line, v)).transpose()
        }
        let required = |key: &str| Error::Config(format!("{}: missing required key `{key}`", path.display()));
        let settings = Self {
            n_items: get(&map, path, "n_items")?.ok_or_else(|| required("n_items"))?,
            a: get(&map, path, "a")?.ok_or_else(|| required("a"))?,
            b: get(&map, path, "b")?.ok_or_else(|| required("b"))?,
            gamma: get(&map, path, "gamma")?.unwrap_or(0.0),
            horizon: get(&map, path, "horizon")?.ok_or_else(|| required("horizon"))?,
            seed: get(&map, path, "seed")?.unwrap_or(0),
            observe_every: get(&map, path, "observe_every")?.ok_or_else(|| required("observe_every"))?,
            track_item: get(&map, path, "track_item")?,
            max_events: get(&map, path, "max_events")?.unwrap_or(DEFAULT_MAX_EVENTS),
            record_events: get(&map, path, "record_events")?.unwrap_or(true),
            snapshots: get(&map, path, "snapshots")?.unwrap_or(false),
        };
        Ok(settings)
    }

    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "n_items={}\na={}\nb={}\ngamma={}\nhorizon={}\nseed={}\nobserve_every={}\n",
            self.n_items,
            io::fmt_num(self.a),
            io::fmt_num(self.b),
            io::fmt_num(self.gamma),
            io::fmt_num(self.horizon),
            self.seed,
            io::fmt_num(self.observe_every)
        );
        if let Some(i) = self.track_item {
            s.push_str(&format!("track_item={i}\n"));
        }
        s.push_str(&format!(
            "max_events={}\nrecord_events={}\nsnapshots={}\n",
            io::fmt_num(self.max_events),
            self.record_events,
            self.snapshots
        ));
        s
    }

    /// Discrete (cut-off) Pareto rates, tracked item moved to rank 1, the
    /// others in decreasing-rate order, observations every `observe_every`.
    pub fn to_config(&self) -> Result<SimulationConfig> {
        let rates = SalesRateDistribution::discrete_pareto_rates(self.a, self.b, self.gamma, self.n_items)
            .map_err(|e| Error::Config(e.to_string()))?;
        let n = self.n_items;
        let track = self.track_item.unwrap_or(n);
        if track == 0 || track > n {
            return Err(Error::Config(format!("track_item must lie in 1..={n}, got {track}")));
        }
        let track = track - 1;
        let initial_ranks = (0..n)
            .map(|i| match i.cmp(&track) {
                std::cmp::Ordering::Less => i + 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Greater => i + 1,
            })
            .collect();
        if !(self.observe_every > 0.0) {
            return Err(Error::Config(format!("observe_every must be positive, got {}", self.observe_every)));
        }
        let steps = (self.horizon / self.observe_every + 1e-9).floor() as usize;
        let observe_times = (1..=steps).map(|k| k as f64 * self.observe_every).filter(|&t| t <= self.horizon).collect();
        Ok(SimulationConfig {
            rates,
            initial_ranks,
            horizon: self.horizon,
            seed: self.seed,
            observe_times,
            track_item: Some(track),
            full_snapshots: self.snapshots,
            record_events: self.record_events,
            max_events: self.max_events,
        })
    }
}
