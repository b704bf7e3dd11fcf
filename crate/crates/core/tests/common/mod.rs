//! Property checks shared by the property tests and the acceptance runner.

#![allow(dead_code)]

use std::collections::HashMap;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use qtn::experiments::sweep::replicate;
use qtn::experiments::{fit_power_law, fit_proportional, SweepSpec};
use qtn::simulator::{run, run_with_series, SimConfig, Simulation};
use qtn::topology::TreeTopology;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Check = std::result::Result<(), TestCaseError>;

pub const CASES: u32 = 1000;

pub fn small_config() -> impl Strategy<Value = SimConfig> {
    (2u32..=4, 1u32..=3, 1u32..=4, 0.01f64..1.0, 1u64..30, 1u64..30, 0.0f64..1.0, 1u32..=3, any::<u64>()).prop_map(
        |(k, n, m, p_e, coherence, timeout, p, b, seed)| {
            let topology = TreeTopology::new(k, n, m).unwrap();
            // keep the pair probability inside [0, 1]
            let p = p * (topology.leaves() as f64 - 1.0).min(1.0);
            SimConfig { p_e, coherence, request_timeout: timeout, b, warmup: 5, measure: 40, seed, ..SimConfig::new(topology, p) }
        },
    )
}

pub fn conservation(cfg: SimConfig) -> Check {
    let mut sim = Simulation::new(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut before = 0u64;
    for _ in 0..60 {
        let st = sim.step(&mut rng);
        prop_assert_eq!(before + st.pairs_created - st.pairs_consumed - st.pairs_expired, st.buffered);
        let occupied: u64 = sim.links().iter().map(|l| u64::from(l.occupied())).sum();
        prop_assert_eq!(occupied, st.buffered);
        prop_assert!(st.buffered_routers <= st.buffered);
        before = st.buffered;
    }
    Ok(())
}

pub fn determinism(cfg: SimConfig) -> Check {
    prop_assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    prop_assert_eq!(run_with_series(&cfg).unwrap(), run_with_series(&cfg).unwrap());
    Ok(())
}

pub type Submissions = Vec<(u32, u32, u64)>;

pub fn submissions() -> impl Strategy<Value = Submissions> {
    prop::collection::vec((any::<u32>(), any::<u32>(), 0u64..40), 0..40)
}

/// No edge overfills and each completion consumes one pair per path edge.
pub fn capacity_safety(cfg: SimConfig, submits: Submissions) -> Check {
    let cfg = SimConfig { p: 0.0, ..cfg };
    let tree = cfg.topology;
    let leaves = tree.leaves() as u32;
    let mut sim = Simulation::new(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let caps = tree.edge_capacities();
    let mut path_len = HashMap::new();
    for c in 0..60u64 {
        for &(a, b, at) in &submits {
            let (a, b) = (a % leaves, b % leaves);
            if at == c && a != b {
                let id = sim.submit(a, b).unwrap();
                let path = tree.routing_path(&tree.leaf(u64::from(a)), &tree.leaf(u64::from(b))).unwrap();
                path_len.insert(id, path.edges.len() as u64);
            }
        }
        let st = sim.step(&mut rng);
        for (l, &cap) in sim.links().iter().zip(&caps) {
            prop_assert!(u64::from(l.occupied()) <= cap);
            prop_assert_eq!(u64::from(l.capacity), cap);
        }
        let used: u64 = sim.last_resolved().iter().filter(|r| r.completed).map(|r| path_len[&r.id]).sum();
        prop_assert_eq!(used, st.pairs_consumed);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StopCase {
    pub min_reps: u32,
    pub extra: u32,
    pub level: f64,
    pub fraction: f64,
    pub base_seed: u64,
}

pub fn stop_case() -> impl Strategy<Value = StopCase> {
    (2u32..6, 0u32..15, 0.5f64..0.99, 0.01f64..0.5, any::<u64>())
        .prop_map(|(min_reps, extra, level, fraction, base_seed)| StopCase { min_reps, extra, level, fraction, base_seed })
}

/// At stop, either both intervals are below the threshold or the cap was hit.
pub fn ci_stopping(cfg: SimConfig, c: StopCase) -> Check {
    let cfg = SimConfig { measure: 20, ..cfg };
    let spec = SweepSpec {
        max_reps: c.min_reps + c.extra,
        min_reps: c.min_reps,
        ci_level: c.level,
        ci_width_fraction: c.fraction,
        base_seed: c.base_seed,
        ..SweepSpec::default()
    };
    let (stats, reps, converged) = replicate(&spec, &cfg, 0).unwrap();
    prop_assert!(reps >= c.min_reps && reps <= spec.max_reps);
    prop_assert_eq!(stats.buffered.count, u64::from(reps));
    if converged {
        for (s, range) in [(&stats.success, 1.0), (&stats.latency, cfg.request_timeout as f64)] {
            if s.count > 0 {
                prop_assert!(s.count >= 2);
                prop_assert!(2.0 * s.half_width(c.level).unwrap() < c.fraction * range);
            }
        }
    } else {
        prop_assert_eq!(reps, spec.max_reps);
    }
    Ok(())
}

pub fn power_law_case() -> impl Strategy<Value = (f64, f64, f64, usize)> {
    (1e-3f64..1e3, -3.0f64..3.0, 0.1f64..10.0, 3usize..12)
}

pub fn power_law_recovery((a, b, x0, n): (f64, f64, f64, usize)) -> Check {
    let xs: Vec<f64> = (0..n).map(|i| x0 * 1.7f64.powi(i as i32)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| a * x.powf(b)).collect();
    let f = fit_power_law(&xs, &ys).unwrap();
    prop_assert!((f.value("prefactor") - a).abs() <= 1e-9 * a);
    prop_assert!((f.value("exponent") - b).abs() <= 1e-9 * b.abs().max(1.0));
    Ok(())
}

pub fn proportional_case() -> impl Strategy<Value = (f64, f64, usize)> {
    (1e-3f64..1e3, 0.5f64..3.0, 2usize..10)
}

pub fn proportional_recovery((c, q, n): (f64, f64, usize)) -> Check {
    let xs: Vec<f64> = (1..=n).map(|i| i as f64 * 100.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(q)).collect();
    let f = fit_proportional(&xs, &ys, q).unwrap();
    prop_assert!((f.value("coefficient") - c).abs() <= 1e-9 * c);
    Ok(())
}
