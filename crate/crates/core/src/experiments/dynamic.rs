//! Step-response ensembles with time binning.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::split_seed;
use crate::simulator::{CycleStats, SimConfig, Simulation};
use crate::topology::TreeTopology;
use crate::{Error, Result};

/// Piecewise-constant request rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicSchedule {
    /// `(start_cycle, p)`; the first entry starts at cycle 0.
    pub steps: Vec<(u64, f64)>,
    pub cycles: u64,
    pub ensemble: u32,
    pub bin_width: u64,
    pub base_seed: u64,
}

impl DynamicSchedule {
    /// Rate `1e-3`, raised to `1e-2` over cycles `[1e4, 2e4)`, 512 members,
    /// 64-cycle bins.
    pub fn fig3e() -> Self {
        DynamicSchedule {
            steps: vec![(0, 1e-3), (10_000, 1e-2), (20_000, 1e-3)],
            cycles: 30_000,
            ensemble: 512,
            bin_width: 64,
            base_seed: 0,
        }
    }

    /// The tree used with [`fig3e`](Self::fig3e): `k = 4`, `N = 64`, `m = 10`.
    pub fn fig3e_base() -> SimConfig {
        SimConfig::new(TreeTopology::new(4, 3, 10).expect("valid tree"), 1e-3)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() || self.steps[0].0 != 0 {
            return Err(Error::param("steps", format!("{:?}", self.steps), "a first step at cycle 0"));
        }
        if self.steps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::param("steps", format!("{:?}", self.steps), "strictly increasing start cycles"));
        }
        if self.steps.last().map(|s| s.0 >= self.cycles).unwrap_or(true) {
            return Err(Error::param("cycles", self.cycles, "longer than the last step start"));
        }
        if self.bin_width < 1 {
            return Err(Error::param("bin_width", self.bin_width, ">= 1"));
        }
        if self.ensemble < 1 {
            return Err(Error::param("ensemble", self.ensemble, ">= 1"));
        }
        Ok(())
    }

    pub fn rate_at(&self, cycle: u64) -> f64 {
        self.steps.iter().rev().find(|s| s.0 <= cycle).map(|s| s.1).unwrap_or(0.0)
    }
}

/// Summed counters over one bin. Requests are binned by the cycle in which
/// they resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinTotals {
    pub cycles: u64,
    pub arrived: u64,
    pub completed: u64,
    pub expired: u64,
    pub latency_sum: u64,
    pub buffered_sum: u64,
    pub buffered_routers_sum: u64,
}

impl BinTotals {
    fn add(&mut self, o: &BinTotals) {
        self.cycles += o.cycles;
        self.arrived += o.arrived;
        self.completed += o.completed;
        self.expired += o.expired;
        self.latency_sum += o.latency_sum;
        self.buffered_sum += o.buffered_sum;
        self.buffered_routers_sum += o.buffered_routers_sum;
    }

    fn record(&mut self, st: &CycleStats) {
        self.cycles += 1;
        self.arrived += st.requests_arrived;
        self.completed += st.requests_completed;
        self.expired += st.requests_expired;
        self.latency_sum += st.latency_sum;
        self.buffered_sum += st.buffered;
        self.buffered_routers_sum += st.buffered_routers;
    }

    pub fn success_rate(&self) -> Option<f64> {
        let n = self.completed + self.expired;
        (n > 0).then(|| self.completed as f64 / n as f64)
    }

    pub fn mean_latency(&self) -> Option<f64> {
        let n = self.completed + self.expired;
        (n > 0).then(|| self.latency_sum as f64 / n as f64)
    }

    /// Mean buffered pairs per cycle per ensemble member.
    pub fn buffered(&self) -> f64 {
        self.buffered_sum as f64 / self.cycles.max(1) as f64
    }

    pub fn buffered_routers(&self) -> f64 {
        self.buffered_routers_sum as f64 / self.cycles.max(1) as f64
    }
}

/// Bins a per-cycle series.
pub fn bin_series(series: &[CycleStats], bin_width: u64) -> Vec<BinTotals> {
    let mut bins: Vec<BinTotals> = Vec::new();
    for st in series {
        let i = (st.cycle / bin_width) as usize;
        if bins.len() <= i {
            bins.resize(i + 1, BinTotals::default());
        }
        bins[i].record(st);
    }
    bins
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SuccessRate,
    MeanLatency,
    Buffered,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::SuccessRate => "success_rate",
            Metric::MeanLatency => "mean_latency",
            Metric::Buffered => "buffered",
        }
    }

    fn value(&self, b: &BinTotals) -> Option<f64> {
        match self {
            Metric::SuccessRate => b.success_rate(),
            Metric::MeanLatency => b.mean_latency(),
            Metric::Buffered => Some(b.buffered()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Rise,
    Fall,
}

/// 10-90 timing of one metric after one rate change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub metric: Metric,
    pub step_cycle: u64,
    pub direction: Direction,
    pub pre_level: f64,
    pub post_level: f64,
    /// Bin indices where 10% and 90% of the change were first reached.
    pub bin_10: Option<usize>,
    pub bin_90: Option<usize>,
    /// `(bin_90 - bin_10) * bin_width`; absent when unresolved.
    pub duration: Option<u64>,
    /// Largest value within the first 10 bins after the step.
    pub early_peak: Option<f64>,
}

impl Transition {
    /// Cycle at which the change reached 90%.
    pub fn completed_at(&self, bin_width: u64) -> Option<u64> {
        self.bin_90.map(|b| b as u64 * bin_width)
    }
}

/// Bins averaged over plateau estimates.
pub const PLATEAU_BINS: usize = 10;

pub fn transitions(bins: &[BinTotals], schedule: &DynamicSchedule) -> Vec<Transition> {
    let bw = schedule.bin_width;
    let mut out = Vec::new();
    for (i, &(start, _)) in schedule.steps.iter().enumerate().skip(1) {
        let end = schedule.steps.get(i + 1).map(|s| s.0).unwrap_or(schedule.cycles);
        let b_start = (start / bw) as usize;
        let b_end = ((end / bw) as usize).min(bins.len());
        for metric in [Metric::SuccessRate, Metric::MeanLatency, Metric::Buffered] {
            out.push(transition(bins, metric, start, b_start, b_end, bw));
        }
    }
    out
}

fn plateau(bins: &[BinTotals], metric: Metric, end: usize) -> Option<f64> {
    let lo = end.checked_sub(PLATEAU_BINS)?;
    let vals: Vec<f64> = bins[lo..end].iter().filter_map(|b| metric.value(b)).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn transition(bins: &[BinTotals], metric: Metric, step: u64, b_start: usize, b_end: usize, bw: u64) -> Transition {
    let pre = plateau(bins, metric, b_start).unwrap_or(f64::NAN);
    let post = plateau(bins, metric, b_end).unwrap_or(f64::NAN);
    let direction = if post >= pre { Direction::Rise } else { Direction::Fall };
    let early_peak = bins[b_start..(b_start + PLATEAU_BINS).min(b_end)]
        .iter()
        .filter_map(|b| metric.value(b))
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    let mut t = Transition {
        metric,
        step_cycle: step,
        direction,
        pre_level: pre,
        post_level: post,
        bin_10: None,
        bin_90: None,
        duration: None,
        early_peak,
    };
    let delta = post - pre;
    if !delta.is_finite() || delta.abs() <= 1e-9 * pre.abs().max(post.abs()).max(1e-300) {
        return t;
    }
    let progress = |b: &BinTotals| metric.value(b).map(|v| (v - pre) / delta);
    let mut idx = b_start;
    while idx < b_end && progress(&bins[idx]).is_none_or(|f| f < 0.1) {
        idx += 1;
    }
    if idx >= b_end {
        return t;
    }
    t.bin_10 = Some(idx);
    while idx < b_end && progress(&bins[idx]).is_none_or(|f| f < 0.9) {
        idx += 1;
    }
    if idx < b_end {
        t.bin_90 = Some(idx);
        t.duration = Some((idx - t.bin_10.expect("set")) as u64 * bw);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicResponse {
    pub bin_width: u64,
    pub ensemble: u32,
    /// Totals summed over the ensemble.
    pub bins: Vec<BinTotals>,
    pub transitions: Vec<Transition>,
}

impl DynamicResponse {
    pub fn transition(&self, metric: Metric, step_cycle: u64) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.metric == metric && t.step_cycle == step_cycle)
    }

    pub fn series(&self, metric: Metric) -> Vec<Option<f64>> {
        self.bins.iter().map(|b| metric.value(b)).collect()
    }
}

fn run_member(schedule: &DynamicSchedule, base: &SimConfig, member: u32) -> Result<Vec<BinTotals>> {
    let cfg = SimConfig { p: schedule.steps[0].1, ..*base };
    let mut sim = Simulation::new(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(schedule.base_seed, 0, u64::from(member)));
    let bw = schedule.bin_width;
    let mut bins = vec![BinTotals::default(); schedule.cycles.div_ceil(bw) as usize];
    let mut next = 1;
    for c in 0..schedule.cycles {
        if next < schedule.steps.len() && schedule.steps[next].0 == c {
            sim.set_rate(schedule.steps[next].1)?;
            next += 1;
        }
        let st = sim.step(&mut rng);
        bins[(c / bw) as usize].record(&st);
    }
    Ok(bins)
}

/// Runs the ensemble and extracts 10-90 rise and fall times.
pub fn dynamic_response(schedule: &DynamicSchedule, base: &SimConfig) -> Result<DynamicResponse> {
    schedule.validate()?;
    for &(_, p) in &schedule.steps {
        SimConfig { p, ..*base }.validate()?;
    }
    let nbins = schedule.cycles.div_ceil(schedule.bin_width) as usize;
    let bins = (0..schedule.ensemble).into_par_iter().map(|m| run_member(schedule, base, m)).try_reduce(
        || vec![BinTotals::default(); nbins],
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.add(y);
            }
            Ok(a)
        },
    )?;
    let transitions = transitions(&bins, schedule);
    Ok(DynamicResponse { bin_width: schedule.bin_width, ensemble: schedule.ensemble, bins, transitions })
}

pub const DYNAMIC_CSV_HEADER: &str = "bin_start,p,success_rate,mean_latency,buffered,buffered_routers,arrived,completed,expired";

pub fn write_dynamic_csv(resp: &DynamicResponse, schedule: &DynamicSchedule) -> String {
    let mut out = String::from(DYNAMIC_CSV_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, b) in resp.bins.iter().enumerate() {
        let start = i as u64 * resp.bin_width;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            start,
            schedule.rate_at(start),
            opt(b.success_rate()),
            opt(b.mean_latency()),
            b.buffered(),
            b.buffered_routers(),
            b.arrived,
            b.completed,
            b.expired
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::run_with_series;

    fn small_base() -> SimConfig {
        let t = TreeTopology::new(4, 2, 4).unwrap();
        SimConfig { p_e: 0.01, coherence: 100, request_timeout: 100, ..SimConfig::new(t, 0.0) }
    }

    #[test]
    fn bins_sum_to_series_totals() {
        let cfg = SimConfig { p: 0.02, warmup: 100, measure: 900, seed: 3, ..small_base() };
        let m = run_with_series(&cfg).unwrap();
        let series = m.series.unwrap();
        let bins = bin_series(&series, 64);
        let sum = |f: fn(&CycleStats) -> u64| series.iter().map(f).sum::<u64>();
        assert_eq!(bins.iter().map(|b| b.completed).sum::<u64>(), sum(|s| s.requests_completed));
        assert_eq!(bins.iter().map(|b| b.expired).sum::<u64>(), sum(|s| s.requests_expired));
        assert_eq!(bins.iter().map(|b| b.latency_sum).sum::<u64>(), sum(|s| s.latency_sum));
        assert_eq!(bins.iter().map(|b| b.buffered_sum).sum::<u64>(), sum(|s| s.buffered));
        assert_eq!(bins.iter().map(|b| b.cycles).sum::<u64>(), series.len() as u64);
    }

    #[test]
    fn schedule_validation() {
        let mut s = DynamicSchedule::fig3e();
        assert!(s.validate().is_ok());
        assert_eq!(s.rate_at(15_000), 1e-2);
        s.steps[1].0 = 30_000;
        assert!(s.validate().is_err());
        let s = DynamicSchedule { steps: vec![(5, 0.1)], ..DynamicSchedule::fig3e() };
        assert!(s.validate().is_err());
    }

    #[test]
    fn synthetic_fall_time() {
        // buffered level 100 for 20 bins, then linear ramp to 0 over 10 bins
        let bw = 10;
        let mut bins = Vec::new();
        for i in 0..60u64 {
            let level = if i < 20 {
                100
            } else if i < 30 {
                100 - (i - 20) * 10
            } else {
                0
            };
            bins.push(BinTotals { cycles: bw, buffered_sum: level * bw, ..BinTotals::default() });
        }
        let sched = DynamicSchedule { steps: vec![(0, 0.0), (200, 0.0)], cycles: 600, ensemble: 1, bin_width: bw, base_seed: 0 };
        let t = transitions(&bins, &sched);
        let buf = t.iter().find(|t| t.metric == Metric::Buffered).unwrap();
        assert_eq!(buf.direction, Direction::Fall);
        // 10% at level 90 (bin 21), 90% at level 10 (bin 29)
        assert_eq!((buf.bin_10, buf.bin_90), (Some(21), Some(29)));
        assert_eq!(buf.duration, Some(80));
        let succ = t.iter().find(|t| t.metric == Metric::SuccessRate).unwrap();
        assert_eq!(succ.duration, None);
    }

    #[test]
    fn ensemble_is_deterministic_and_flat_when_constant() {
        let sched =
            DynamicSchedule { steps: vec![(0, 0.01), (2000, 0.01)], cycles: 4000, ensemble: 6, bin_width: 100, base_seed: 9 };
        let a = dynamic_response(&sched, &small_base()).unwrap();
        let b = dynamic_response(&sched, &small_base()).unwrap();
        assert_eq!(a, b);
        let buf: Vec<f64> = a.series(Metric::Buffered).into_iter().skip(10).map(|v| v.unwrap()).collect();
        let mean = buf.iter().sum::<f64>() / buf.len() as f64;
        assert!(buf.iter().all(|v| (v / mean - 1.0).abs() < 0.25), "{buf:?}");
        let csv = write_dynamic_csv(&a, &sched);
        assert_eq!(csv.lines().count(), 41);
    }
}
