//! Cycle-based simulation of entanglement routing on a tree.
//!
//! Each cycle runs five phases in a fixed order: expiry, request arrival,
//! link generation, FIFO fulfilment, bookkeeping. Pairs generated in a cycle
//! can serve requests in the same cycle.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::topology::TreeTopology;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub topology: TreeTopology,
    /// Per-slot, per-cycle heralding probability.
    pub p_e: f64,
    /// Pair lifetime in cycles.
    pub coherence: u64,
    pub request_timeout: u64,
    /// Request rate per end node per cycle.
    pub p: f64,
    /// Requests enqueued per sampled end-node pair.
    pub b: u32,
    pub warmup: u64,
    pub measure: u64,
    pub seed: u64,
}

impl SimConfig {
    /// Defaults used throughout: `p_e = 1e-3`, coherence and timeout of 1000
    /// cycles, 2000 warmup and 10000 measured cycles.
    pub fn new(topology: TreeTopology, p: f64) -> Self {
        SimConfig { topology, p_e: 1e-3, coherence: 1000, request_timeout: 1000, p, b: 1, warmup: 2000, measure: 10_000, seed: 0 }
    }

    /// `N(N-1)/2`.
    pub fn pair_count(&self) -> u64 {
        let n = self.topology.leaves();
        n * (n - 1) / 2
    }

    /// Per-pair, per-cycle request probability `N p / (2 n0 b)`.
    pub fn pair_request_probability(&self) -> f64 {
        pair_probability(&self.topology, self.p, self.b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_e > 0.0 && self.p_e <= 1.0) {
            return Err(Error::param("p_e", self.p_e, "0 < p_e <= 1"));
        }
        if self.coherence < 1 {
            return Err(Error::param("coherence", self.coherence, ">= 1"));
        }
        if self.request_timeout < 1 {
            return Err(Error::param("request_timeout", self.request_timeout, ">= 1"));
        }
        if self.b < 1 {
            return Err(Error::param("b", self.b, ">= 1"));
        }
        if self.topology.leaves() < 2 {
            return Err(Error::param("N", self.topology.leaves(), ">= 2"));
        }
        if self.topology.leaves() > u32::MAX as u64 {
            return Err(Error::param("N", self.topology.leaves(), "< 2^32 end nodes"));
        }
        check_rate(&self.topology, self.p, self.b)?;
        Ok(())
    }
}

fn pair_probability(tree: &TreeTopology, p: f64, b: u32) -> f64 {
    let n = tree.leaves() as f64;
    let n0 = n * (n - 1.0) / 2.0;
    n * p / (2.0 * n0 * f64::from(b))
}

fn check_rate(tree: &TreeTopology, p: f64, b: u32) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", p, "0 <= p <= 1"));
    }
    let p0 = pair_probability(tree, p, b);
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::param("p0", p0, "pair request probability in [0, 1]"));
    }
    Ok(())
}

/// Entangled-pair slots of one edge. Pairs are kept oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub capacity: u32,
    created: VecDeque<u64>,
}

impl LinkState {
    fn new(capacity: u32) -> Self {
        LinkState { capacity, created: VecDeque::with_capacity(capacity as usize) }
    }

    pub fn occupied(&self) -> u32 {
        self.created.len() as u32
    }

    pub fn free(&self) -> u32 {
        self.capacity - self.occupied()
    }

    /// Creation cycles of the held pairs, oldest first.
    pub fn pairs(&self) -> impl Iterator<Item = u64> + '_ {
        self.created.iter().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "cycle")]
pub enum RequestStatus {
    Pending,
    Completed(u64),
    Expired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    /// Leaf ordinals, `a < b`.
    pub endpoints: (u32, u32),
    pub arrival_cycle: u64,
    pub status: RequestStatus,
}

#[derive(Debug, Clone)]
struct Pending {
    request: Request,
    path: Box<[u32]>,
}

/// A request that completed or expired during the last step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub id: u64,
    pub arrival_cycle: u64,
    pub latency: u64,
    pub completed: bool,
}

/// Counters for one cycle. Buffered counts are taken after fulfilment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleStats {
    pub cycle: u64,
    pub pairs_created: u64,
    pub pairs_consumed: u64,
    pub pairs_expired: u64,
    pub requests_arrived: u64,
    pub requests_completed: u64,
    pub requests_expired: u64,
    /// Sum of latencies over requests resolved this cycle.
    pub latency_sum: u64,
    pub buffered: u64,
    /// Buffered pairs on router-to-router edges only.
    pub buffered_routers: u64,
}

/// Mutable simulation state.
#[derive(Debug, Clone)]
pub struct Simulation {
    tree: TreeTopology,
    p_e: f64,
    coherence: u64,
    timeout: u64,
    b: u32,
    p0: f64,
    pair_count: u64,
    links: Vec<LinkState>,
    /// First edge index that touches a leaf.
    leaf_edge_start: usize,
    pending: VecDeque<Pending>,
    next_id: u64,
    cycle: u64,
    buffered: u64,
    buffered_routers: u64,
    resolved: Vec<Resolution>,
    scratch: Vec<u32>,
}

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let tree = cfg.topology;
        let links = tree
            .edge_capacities()
            .into_iter()
            .map(|c| u32::try_from(c).map(LinkState::new))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::param("capacity", "> 2^32", "edge capacity below 2^32"))?;
        let leaf_edge_start = links.len() - tree.leaves() as usize;
        Ok(Simulation {
            tree,
            p_e: cfg.p_e,
            coherence: cfg.coherence,
            timeout: cfg.request_timeout,
            b: cfg.b,
            p0: cfg.pair_request_probability(),
            pair_count: cfg.pair_count(),
            links,
            leaf_edge_start,
            pending: VecDeque::new(),
            next_id: 0,
            cycle: 0,
            buffered: 0,
            buffered_routers: 0,
            resolved: Vec::new(),
            scratch: Vec::new(),
        })
    }

    /// Changes the request rate from the next cycle on.
    pub fn set_rate(&mut self, p: f64) -> Result<()> {
        check_rate(&self.tree, p, self.b)?;
        self.p0 = pair_probability(&self.tree, p, self.b);
        Ok(())
    }

    /// Index of the next cycle to run.
    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn links(&self) -> &[LinkState] {
        &self.links
    }

    /// Total occupied slots.
    pub fn buffered(&self) -> u64 {
        self.buffered
    }

    pub fn pending(&self) -> impl Iterator<Item = &Request> {
        self.pending.iter().map(|p| &p.request)
    }

    /// Requests resolved by the last [`step`](Self::step).
    pub fn last_resolved(&self) -> &[Resolution] {
        &self.resolved
    }

    /// Enqueues a request arriving in the upcoming cycle.
    pub fn submit(&mut self, a: u32, b: u32) -> Result<u64> {
        let n = self.tree.leaves();
        if a == b || u64::from(a.max(b)) >= n {
            return Err(Error::param("endpoints", format!("({a}, {b})"), "two distinct leaves"));
        }
        Ok(self.enqueue(a.min(b), a.max(b)))
    }

    fn enqueue(&mut self, a: u32, b: u32) -> u64 {
        self.scratch.clear();
        self.tree.path_edge_indices(u64::from(a), u64::from(b), &mut self.scratch);
        let id = self.next_id;
        self.next_id += 1;
        self.pending.push_back(Pending {
            request: Request { id, endpoints: (a, b), arrival_cycle: self.cycle, status: RequestStatus::Pending },
            path: self.scratch.as_slice().into(),
        });
        id
    }

    fn is_router_edge(&self, e: usize) -> bool {
        e < self.leaf_edge_start
    }

    /// Runs one cycle.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> CycleStats {
        let now = self.cycle;
        let mut st = CycleStats { cycle: now, ..CycleStats::default() };
        self.resolved.clear();

        // 1. expiry
        for e in 0..self.links.len() {
            let link = &mut self.links[e];
            let mut gone = 0;
            while let Some(&c) = link.created.front() {
                if now - c >= self.coherence {
                    link.created.pop_front();
                    gone += 1;
                } else {
                    break;
                }
            }
            st.pairs_expired += gone;
            if e < self.leaf_edge_start {
                self.buffered_routers -= gone;
            }
        }
        self.buffered -= st.pairs_expired;
        while let Some(front) = self.pending.front() {
            let age = now - front.request.arrival_cycle;
            if age < self.timeout {
                break;
            }
            let p = self.pending.pop_front().expect("front exists");
            st.requests_expired += 1;
            st.latency_sum += self.timeout;
            self.resolved.push(Resolution {
                id: p.request.id,
                arrival_cycle: p.request.arrival_cycle,
                latency: self.timeout,
                completed: false,
            });
        }

        // 2. arrivals
        if self.p0 > 0.0 {
            let hits = sample_binomial(rng, self.pair_count, self.p0);
            if hits > 0 {
                let pairs = distinct_pairs(rng, self.tree.leaves() as u32, hits as usize);
                for (a, b) in pairs {
                    for _ in 0..self.b {
                        self.enqueue(a, b);
                    }
                    st.requests_arrived += u64::from(self.b);
                }
            }
        }

        // 3. generation; per-slot trials summed per edge
        for e in 0..self.links.len() {
            let free = self.links[e].free();
            if free == 0 {
                continue;
            }
            let made = sample_binomial(rng, u64::from(free), self.p_e);
            if made > 0 {
                let link = &mut self.links[e];
                link.created.extend(std::iter::repeat_n(now, made as usize));
                st.pairs_created += made;
                if self.is_router_edge(e) {
                    self.buffered_routers += made;
                }
            }
        }
        self.buffered += st.pairs_created;

        // 4. FIFO fulfilment
        let links = &mut self.links;
        let leaf_start = self.leaf_edge_start;
        let mut consumed = 0u64;
        let mut consumed_routers = 0u64;
        let resolved = &mut self.resolved;
        self.pending.retain(|p| {
            if p.path.iter().any(|&e| links[e as usize].created.is_empty()) {
                return true;
            }
            for &e in p.path.iter() {
                links[e as usize].created.pop_front();
                if (e as usize) < leaf_start {
                    consumed_routers += 1;
                }
            }
            consumed += p.path.len() as u64;
            let latency = now - p.request.arrival_cycle;
            st.requests_completed += 1;
            st.latency_sum += latency;
            resolved.push(Resolution { id: p.request.id, arrival_cycle: p.request.arrival_cycle, latency, completed: true });
            false
        });
        st.pairs_consumed = consumed;
        self.buffered -= consumed;
        self.buffered_routers -= consumed_routers;

        // 5. record
        st.buffered = self.buffered;
        st.buffered_routers = self.buffered_routers;
        self.cycle += 1;
        st
    }
}

fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// `count` distinct unordered leaf pairs, uniformly at random.
fn distinct_pairs<R: Rng + ?Sized>(rng: &mut R, leaves: u32, count: usize) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(0..leaves);
        let b = rng.random_range(0..leaves - 1);
        let b = if b >= a { b + 1 } else { b };
        let pair = (a.min(b), a.max(b));
        if !out.contains(&pair) {
            out.push(pair);
        }
    }
    out
}

/// Aggregate metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Absent when no request arrived in the measurement window.
    pub success_rate: Option<f64>,
    pub mean_latency: Option<f64>,
    /// Mean occupied slots over the measurement window, all edges.
    pub mean_buffered: f64,
    pub mean_buffered_routers: f64,
    pub completed: u64,
    pub expired: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<CycleStats>>,
}

impl MetricsRecord {
    pub const CSV_HEADER: &'static str =
        "seed,p,b,N,success_rate,mean_latency,mean_buffered,mean_buffered_routers,completed,expired";

    pub fn csv_row(&self, cfg: &SimConfig) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            cfg.seed,
            cfg.p,
            cfg.b,
            cfg.topology.leaves(),
            opt(self.success_rate),
            opt(self.mean_latency),
            self.mean_buffered,
            self.mean_buffered_routers,
            self.completed,
            self.expired
        )
    }
}

/// Warmup, measurement window, then `request_timeout` trailing cycles so
/// that every counted request resolves. Requests keep arriving throughout.
pub fn run(cfg: &SimConfig) -> Result<MetricsRecord> {
    run_inner(cfg, false)
}

/// [`run`] also returning every cycle's counters.
pub fn run_with_series(cfg: &SimConfig) -> Result<MetricsRecord> {
    run_inner(cfg, true)
}

fn run_inner(cfg: &SimConfig, keep_series: bool) -> Result<MetricsRecord> {
    let mut sim = Simulation::new(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = cfg.warmup;
    let end = cfg.warmup + cfg.measure;
    let total = end + cfg.request_timeout;
    let mut series = keep_series.then(|| Vec::with_capacity(total as usize));
    let (mut completed, mut expired, mut latency) = (0u64, 0u64, 0u64);
    let (mut buf, mut buf_r) = (0u128, 0u128);
    for c in 0..total {
        let st = sim.step(&mut rng);
        if (start..end).contains(&c) {
            buf += u128::from(st.buffered);
            buf_r += u128::from(st.buffered_routers);
        }
        for r in sim.last_resolved() {
            if (start..end).contains(&r.arrival_cycle) {
                latency += r.latency;
                if r.completed {
                    completed += 1;
                } else {
                    expired += 1;
                }
            }
        }
        if let Some(s) = series.as_mut() {
            s.push(st);
        }
    }
    debug_assert!(sim.pending().all(|r| r.arrival_cycle >= end));
    let resolved = completed + expired;
    let cycles = cfg.measure.max(1) as f64;
    Ok(MetricsRecord {
        success_rate: (resolved > 0).then(|| completed as f64 / resolved as f64),
        mean_latency: (resolved > 0).then(|| latency as f64 / resolved as f64),
        mean_buffered: buf as f64 / cycles,
        mean_buffered_routers: buf_r as f64 / cycles,
        completed,
        expired,
        series,
    })
}

/// Stationary occupancy of one slot: `p_e c / (1 + p_e c)` when free slots
/// retry every cycle and pairs live `c` cycles.
pub fn slot_occupancy(p_e: f64, coherence: u64) -> f64 {
    let x = p_e * coherence as f64;
    x / (1.0 + x)
}

/// Exact stationary occupancy of the slot chain: a free slot fills with
/// probability `p_e` each cycle and a pair is dropped once `c` cycles old.
pub fn slot_occupancy_exact(p_e: f64, coherence: u64) -> f64 {
    // renewal cycle: geometric wait with mean (1-p_e)/p_e free cycles, then
    // `c` occupied cycles (the creation cycle counts as occupied)
    let free = (1.0 - p_e) / p_e;
    let busy = coherence as f64;
    busy / (busy + free)
}
