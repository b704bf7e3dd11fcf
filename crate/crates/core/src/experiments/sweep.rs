//! Rate sweeps with sequential stopping.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{split_seed, Estimate, RunningStats};
use crate::simulator::{run, MetricsRecord, SimConfig};
use crate::topology::TreeTopology;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub p_values: Vec<f64>,
    /// End-node counts; each must be a power of the base tree's `k`.
    pub n_values: Vec<u64>,
    pub b_values: Vec<u32>,
    pub max_reps: u32,
    pub min_reps: u32,
    pub ci_level: f64,
    /// Stop once the full interval width is below this share of the range.
    pub ci_width_fraction: f64,
    pub base_seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            p_values: vec![1e-3, 2e-3, 3e-3, 5e-3, 1e-2, 3e-2, 1e-1],
            n_values: vec![64],
            b_values: vec![1],
            max_reps: 1000,
            min_reps: 10,
            ci_level: 0.90,
            ci_width_fraction: 0.01,
            base_seed: 0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.min_reps < 2 {
            return Err(Error::param("min_reps", self.min_reps, ">= 2"));
        }
        if self.max_reps < self.min_reps {
            return Err(Error::param("max_reps", self.max_reps, ">= min_reps"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::param("ci_level", self.ci_level, "in (0, 1)"));
        }
        if !(self.ci_width_fraction > 0.0) {
            return Err(Error::param("ci_width_fraction", self.ci_width_fraction, "> 0"));
        }
        if self.p_values.is_empty() || self.n_values.is_empty() || self.b_values.is_empty() {
            return Err(Error::param("grid", "empty", "at least one p, N and b"));
        }
        Ok(())
    }

    /// Grid in (N, b, p) order; the position is the grid index for seeding.
    pub fn grid(&self) -> Vec<(u64, u32, f64)> {
        let mut g = Vec::new();
        for &n in &self.n_values {
            for &b in &self.b_values {
                for &p in &self.p_values {
                    g.push((n, b, p));
                }
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    #[serde(rename = "N")]
    pub end_nodes: u64,
    pub b: u32,
    pub p: f64,
    pub reps: u32,
    /// False when `max_reps` was hit before the intervals closed.
    pub converged: bool,
    pub success_rate: Option<Estimate>,
    pub mean_latency: Option<Estimate>,
    pub mean_buffered: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-metric accumulators for one grid point.
#[derive(Debug, Clone, Copy, Default)]
pub struct PointStats {
    pub success: RunningStats,
    pub latency: RunningStats,
    pub buffered: RunningStats,
}

impl PointStats {
    pub fn push(&mut self, m: &MetricsRecord) {
        if let Some(s) = m.success_rate {
            self.success.push(s);
        }
        if let Some(l) = m.mean_latency {
            self.latency.push(l);
        }
        self.buffered.push(m.mean_buffered);
    }

    /// Both the success-rate and latency intervals are narrow enough.
    pub fn converged(&self, level: f64, fraction: f64, timeout: f64) -> bool {
        narrow(&self.success, level, fraction * 1.0) && narrow(&self.latency, level, fraction * timeout)
    }
}

fn narrow(s: &RunningStats, level: f64, width: f64) -> bool {
    match s.count {
        0 => true,
        1 => false,
        _ => 2.0 * s.half_width(level).expect("count >= 2") < width,
    }
}

fn height_for(k: u32, end_nodes: u64) -> Result<u32> {
    let mut v = 1u64;
    for n in 1..64 {
        v = v.saturating_mul(u64::from(k));
        if v == end_nodes {
            return Ok(n);
        }
        if v > end_nodes {
            break;
        }
    }
    Err(Error::param("N", end_nodes, "a power of k"))
}

/// Replicates one configuration until both intervals close or `max_reps`.
/// Replicates run in parallel batches but are folded in index order, so the
/// result does not depend on the thread count.
pub fn replicate(spec: &SweepSpec, cfg: &SimConfig, grid_index: u64) -> Result<(PointStats, u32, bool)> {
    cfg.validate()?;
    let timeout = cfg.request_timeout as f64;
    let mut stats = PointStats::default();
    let mut done = 0u32;
    let batch = (rayon::current_num_threads() as u32 * 2).max(spec.min_reps);
    while done < spec.max_reps {
        let hi = (done + batch).min(spec.max_reps);
        let records: Vec<MetricsRecord> = (done..hi)
            .into_par_iter()
            .map(|rep| {
                let c = SimConfig { seed: split_seed(spec.base_seed, grid_index, u64::from(rep)), ..*cfg };
                run(&c)
            })
            .collect::<Result<_>>()?;
        for m in &records {
            stats.push(m);
            done += 1;
            if done >= spec.min_reps && stats.converged(spec.ci_level, spec.ci_width_fraction, timeout) {
                return Ok((stats, done, true));
            }
        }
    }
    Ok((stats, done, false))
}

/// Runs every grid point. Errors stay with their point.
pub fn sweep(spec: &SweepSpec, base: &SimConfig) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let k = base.topology.k();
    let m = base.topology.buffering();
    let grid = spec.grid();
    Ok(grid
        .par_iter()
        .enumerate()
        .map(|(gi, &(end_nodes, b, p))| {
            let empty = SweepPoint {
                end_nodes,
                b,
                p,
                reps: 0,
                converged: false,
                success_rate: None,
                mean_latency: None,
                mean_buffered: None,
                error: None,
            };
            let attempt = height_for(k, end_nodes).and_then(|n| TreeTopology::new(k, n, m)).and_then(|topology| {
                let cfg = SimConfig { topology, b, p, ..*base };
                replicate(spec, &cfg, gi as u64)
            });
            match attempt {
                Ok((s, reps, converged)) => SweepPoint {
                    reps,
                    converged,
                    success_rate: s.success.estimate(spec.ci_level),
                    mean_latency: s.latency.estimate(spec.ci_level),
                    mean_buffered: s.buffered.estimate(spec.ci_level),
                    ..empty
                },
                Err(e) => SweepPoint { error: Some(e.to_string()), ..empty },
            }
        })
        .collect())
}

pub const SWEEP_CSV_HEADER: &str =
    "N,b,p,reps,converged,success_rate,success_hw,mean_latency,latency_hw,mean_buffered,buffered_hw,error";

pub fn write_sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    let pair = |e: &Option<Estimate>| match e {
        Some(e) => format!("{},{}", e.mean, e.half_width),
        None => ",".to_string(),
    };
    for pt in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            pt.end_nodes,
            pt.b,
            pt.p,
            pt.reps,
            pt.converged,
            pair(&pt.success_rate),
            pair(&pt.mean_latency),
            pair(&pt.mean_buffered),
            pt.error.as_deref().unwrap_or("").replace(',', ";")
        );
    }
    out
}

/// Outcome of locating the success-rate crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    At(f64),
    /// Every point is at or above the level.
    AboveRange,
    /// Already below the level at the smallest rate.
    BelowRange,
}

impl Threshold {
    pub fn value(&self) -> Option<f64> {
        match self {
            Threshold::At(p) => Some(*p),
            _ => None,
        }
    }
}

/// Default success level that defines the threshold.
pub const THRESHOLD_LEVEL: f64 = 0.95;

/// First downward crossing of `level` by the success rate, interpolated
/// linearly in `log10 p`, among the points for (`end_nodes`, `b`).
pub fn estimate_threshold(points: &[SweepPoint], end_nodes: u64, b: u32, level: f64) -> Result<Threshold> {
    let mut curve: Vec<(f64, f64)> = points
        .iter()
        .filter(|pt| pt.end_nodes == end_nodes && pt.b == b && pt.p > 0.0)
        .filter_map(|pt| pt.success_rate.map(|s| (pt.p, s.mean)))
        .collect();
    if curve.len() < 2 {
        return Err(Error::Degenerate(format!("need two rates with results for N={end_nodes} b={b}")));
    }
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(crossing(&curve, level))
}

/// Crossing on a sorted `(p, success)` curve.
pub fn crossing(curve: &[(f64, f64)], level: f64) -> Threshold {
    if curve[0].1 < level {
        return Threshold::BelowRange;
    }
    for w in curve.windows(2) {
        let ((p0, s0), (p1, s1)) = (w[0], w[1]);
        if s0 >= level && s1 < level {
            let f = (s0 - level) / (s0 - s1);
            let lp = p0.log10() + f * (p1.log10() - p0.log10());
            return Threshold::At(10f64.powf(lp));
        }
    }
    Threshold::AboveRange
}
