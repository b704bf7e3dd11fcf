//! Subcommand bodies: resolve the configuration, run, write outputs.

use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use qtn::deployment::{layout, DeploymentMode};
use qtn::experiments::dynamic::{dynamic_response, write_dynamic_csv, DynamicSchedule, Metric};
use qtn::experiments::sweep::write_sweep_csv;
use qtn::experiments::{estimate_threshold, SweepSpec};
use qtn::mesh::{density_map, fit_scaling, run_instances, summarize, write_instances_csv, write_mesh_csv, SegmentSet};
use qtn::overhead::{heights_in_range, CodeFamily, EcConfig, Regime};
use qtn::simulator::{run, run_with_series, SimConfig};
use qtn::topology::TreeTopology;

use crate::config::{self, DeployConfig, DynamicConfig, MeshConfig, OverheadConfig, SimulateConfig, SweepConfig};
use crate::error::CliError;
use crate::output::RunDir;
use crate::plot::{self, Chart, Series};
use crate::Common;

/// defaults < preset < file < flags
fn resolve<T: Serialize + DeserializeOwned + Default>(
    subcommand: &str,
    common: &Common,
    flags: &impl Serialize,
) -> Result<T, CliError> {
    let mut layers = Vec::new();
    if let Some(p) = &common.preset {
        layers.push(config::to_map(config::preset(subcommand, p)?));
    }
    if let Some(f) = &common.config {
        layers.push(config::read_file(f, subcommand)?);
    }
    let mut fl = config::to_map(serde_json::to_value(flags).expect("serializable"));
    if let Some(s) = common.seed {
        fl.insert("seed".into(), Value::from(s));
    }
    layers.push(fl);
    if let Some(j) = common.jobs {
        if j == 0 {
            return Err(CliError::Validation("jobs = 0: expected >= 1".into()));
        }
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    config::resolve(layers)
}

fn check_rate(name: &str, p: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::Validation(format!("{name} = {p} is outside [0, 1]")));
    }
    Ok(())
}

fn finish(dir: RunDir) -> Result<(), CliError> {
    let manifest_path = dir.path(&dir.manifest_name());
    let m = dir.finish()?;
    for o in &m.outputs {
        println!("wrote {}", manifest_path.with_file_name(o).display());
    }
    println!("wrote {}", manifest_path.display());
    Ok(())
}

fn svg(dir: &mut RunDir, name: &str, chart: Chart, series: &[Series]) -> Result<(), CliError> {
    plot::draw(&dir.path(name), &chart, series)?;
    dir.register(name);
    Ok(())
}

pub fn simulate(common: &Common, args: &crate::SimulateArgs) -> Result<(), CliError> {
    let c: SimulateConfig = resolve("simulate", common, args)?;
    let (Some(k), Some(n), Some(p)) = (c.k, c.n, c.p) else {
        return Err(CliError::Usage("simulate needs k, n and p (flags --k --n --p or a config file)".into()));
    };
    check_rate("p", p)?;
    check_rate("pe", c.pe)?;
    let topology = TreeTopology::new(k, n, c.m).map_err(CliError::validation)?;
    let cfg = SimConfig {
        p_e: c.pe,
        coherence: c.coherence,
        request_timeout: c.timeout,
        b: c.b,
        warmup: c.warmup,
        measure: c.measure,
        seed: c.seed,
        ..SimConfig::new(topology, p)
    };
    cfg.validate().map_err(CliError::validation)?;
    let rec = if c.series || common.svg { run_with_series(&cfg) } else { run(&cfg) }.map_err(CliError::runtime)?;
    let mut dir = RunDir::create(&common.out, "simulate", serde_json::to_value(&c).expect("serializable"), c.seed)?;
    let row = rec.csv_row(&cfg);
    dir.write_csv("simulate.csv", &[], &format!("{}\n{row}\n", qtn::simulator::MetricsRecord::CSV_HEADER))?;
    println!("{}", qtn::simulator::MetricsRecord::CSV_HEADER);
    println!("{row}");
    let series = rec.series.as_deref().unwrap_or(&[]);
    if c.series {
        let mut s = String::from("cycle,pairs_created,pairs_consumed,pairs_expired,requests_arrived,requests_completed,requests_expired,latency_sum,buffered,buffered_routers\n");
        for st in series {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                st.cycle,
                st.pairs_created,
                st.pairs_consumed,
                st.pairs_expired,
                st.requests_arrived,
                st.requests_completed,
                st.requests_expired,
                st.latency_sum,
                st.buffered,
                st.buffered_routers
            );
        }
        dir.write_csv("simulate_series.csv", &[], &s)?;
    }
    if common.svg {
        let all =
            Series { name: "all edges".into(), points: series.iter().map(|s| (s.cycle as f64, s.buffered as f64)).collect() };
        let routers = Series {
            name: "router edges".into(),
            points: series.iter().map(|s| (s.cycle as f64, s.buffered_routers as f64)).collect(),
        };
        let chart = Chart {
            title: "Buffered entanglement",
            x_label: "cycle",
            y_label: "occupied slots",
            log_x: false,
            log_y: false,
            scatter: false,
        };
        svg(&mut dir, "simulate_buffered.svg", chart, &[all, routers])?;
    }
    finish(dir)
}

pub fn sweep(common: &Common, args: &crate::SweepArgs) -> Result<(), CliError> {
    let c: SweepConfig = resolve("sweep", common, args)?;
    for &p in &c.p {
        check_rate("p", p)?;
    }
    check_rate("pe", c.pe)?;
    check_rate("threshold_level", c.threshold_level)?;
    let spec = SweepSpec {
        p_values: c.p.clone(),
        n_values: c.end_nodes.clone(),
        b_values: c.b.clone(),
        max_reps: c.max_reps,
        min_reps: c.min_reps,
        ci_level: c.ci_level,
        ci_width_fraction: c.ci_width,
        base_seed: c.seed,
    };
    spec.validate().map_err(CliError::validation)?;
    let topology = TreeTopology::new(c.k, 1, c.m).map_err(CliError::validation)?;
    let base = SimConfig {
        p_e: c.pe,
        coherence: c.coherence,
        request_timeout: c.timeout,
        warmup: c.warmup,
        measure: c.measure,
        ..SimConfig::new(topology, c.p[0])
    };
    let points = qtn::experiments::sweep(&spec, &base).map_err(CliError::validation)?;
    if let Some(bad) = points.iter().find_map(|p| p.error.as_ref()) {
        if points.iter().all(|p| p.error.is_some()) {
            return Err(CliError::Validation(bad.clone()));
        }
    }
    let mut meta = vec![format!("threshold: success_rate crossing {} interpolated in log10 p", c.threshold_level)];
    let mut th = String::from("N,b,level,p_th,status\n");
    for &n in &c.end_nodes {
        for &b in &c.b {
            let (val, status) = match estimate_threshold(&points, n, b, c.threshold_level) {
                Ok(t) => (
                    t.value().map(|v| v.to_string()).unwrap_or_default(),
                    format!("{t:?}").split('(').next().unwrap_or("").to_lowercase(),
                ),
                Err(e) => (String::new(), e.to_string()),
            };
            let _ = writeln!(th, "{n},{b},{},{val},{status}", c.threshold_level);
            meta.push(format!("p_th N={n} b={b}: {}", if val.is_empty() { status.clone() } else { val.clone() }));
        }
    }
    let mut dir = RunDir::create(&common.out, "sweep", serde_json::to_value(&c).expect("serializable"), c.seed)?;
    dir.write_csv("sweep.csv", &meta, &write_sweep_csv(&points))?;
    dir.write_csv("sweep_thresholds.csv", &[], &th)?;
    for m in &meta[1..] {
        println!("{m}");
    }
    if common.svg {
        let curves = |f: &dyn Fn(&qtn::experiments::SweepPoint) -> Option<f64>| -> Vec<Series> {
            let mut out = Vec::new();
            for &n in &c.end_nodes {
                for &b in &c.b {
                    let pts =
                        points.iter().filter(|p| p.end_nodes == n && p.b == b).filter_map(|p| f(p).map(|y| (p.p, y))).collect();
                    out.push(Series { name: format!("N={n} b={b}"), points: pts });
                }
            }
            out
        };
        let s = curves(&|p| p.success_rate.map(|e| e.mean));
        let chart = Chart {
            title: "Success rate",
            x_label: "request rate p",
            y_label: "success rate",
            log_x: true,
            log_y: false,
            scatter: false,
        };
        svg(&mut dir, "sweep_success.svg", chart, &s)?;
        let l = curves(&|p| p.mean_latency.map(|e| e.mean));
        let chart = Chart {
            title: "Mean latency",
            x_label: "request rate p",
            y_label: "cycles",
            log_x: true,
            log_y: false,
            scatter: false,
        };
        svg(&mut dir, "sweep_latency.svg", chart, &l)?;
    }
    finish(dir)
}

pub fn dynamic(common: &Common, args: &crate::DynamicArgs) -> Result<(), CliError> {
    let c: DynamicConfig = resolve("dynamic", common, args)?;
    for &(_, p) in &c.steps {
        check_rate("steps p", p)?;
    }
    check_rate("pe", c.pe)?;
    let schedule =
        DynamicSchedule { steps: c.steps.clone(), cycles: c.cycles, ensemble: c.ensemble, bin_width: c.bin, base_seed: c.seed };
    schedule.validate().map_err(CliError::validation)?;
    let topology = TreeTopology::new(c.k, c.n, c.m).map_err(CliError::validation)?;
    let base = SimConfig {
        p_e: c.pe,
        coherence: c.coherence,
        request_timeout: c.timeout,
        b: c.b,
        ..SimConfig::new(topology, c.steps[0].1)
    };
    base.validate().map_err(CliError::validation)?;
    let resp = dynamic_response(&schedule, &base).map_err(CliError::validation)?;
    let mut dir = RunDir::create(&common.out, "dynamic", serde_json::to_value(&c).expect("serializable"), c.seed)?;
    dir.write_csv(
        "dynamic.csv",
        &[format!("bins of {} cycles, series by resolution cycle", c.bin)],
        &write_dynamic_csv(&resp, &schedule),
    )?;
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut t = String::from("metric,step_cycle,direction,pre_level,post_level,bin_10,bin_90,duration,early_peak\n");
    for tr in &resp.transitions {
        let _ = writeln!(
            t,
            "{},{},{},{},{},{},{},{},{}",
            tr.metric.as_str(),
            tr.step_cycle,
            format!("{:?}", tr.direction).to_lowercase(),
            tr.pre_level,
            tr.post_level,
            opt(tr.bin_10.map(|b| b as u64)),
            opt(tr.bin_90.map(|b| b as u64)),
            opt(tr.duration),
            tr.early_peak.map(|x| x.to_string()).unwrap_or_default()
        );
        println!(
            "{} {:?} at {}: {}",
            tr.metric.as_str(),
            tr.direction,
            tr.step_cycle,
            tr.duration.map_or("unresolved".into(), |d| format!("{d} cycles"))
        );
    }
    dir.write_csv("dynamic_transitions.csv", &[], &t)?;
    if common.svg {
        for (m, name, label) in [
            (Metric::SuccessRate, "dynamic_success.svg", "success rate"),
            (Metric::MeanLatency, "dynamic_latency.svg", "mean latency (cycles)"),
            (Metric::Buffered, "dynamic_buffered.svg", "buffered entanglement"),
        ] {
            let pts =
                resp.series(m).into_iter().enumerate().filter_map(|(i, v)| v.map(|y| ((i as u64 * c.bin) as f64, y))).collect();
            let chart = Chart { title: label, x_label: "cycle", y_label: label, log_x: false, log_y: false, scatter: false };
            svg(&mut dir, name, chart, &[Series { name: String::new(), points: pts }])?;
        }
    }
    finish(dir)
}

fn parse<T: std::str::FromStr<Err = qtn::Error>>(s: &str) -> Result<T, CliError> {
    s.parse().map_err(CliError::validation)
}

pub fn overhead(common: &Common, args: &crate::OverheadArgs) -> Result<(), CliError> {
    let c: OverheadConfig = resolve("overhead", common, args)?;
    let mode: DeploymentMode = parse(&c.mode)?;
    let family: CodeFamily = parse(&c.family)?;
    let regime: Regime = parse(&c.regime)?;
    let (lo, hi) = config::parse_range(&c.n_range)?;
    let ec = EcConfig {
        epsilon: c.epsilon,
        epsilon_th: c.epsilon_th,
        epsilon_0: c.epsilon_0,
        family,
        r: c.r,
        t_override: c.t,
        prefactor: c.prefactor,
    };
    ec.validate().map_err(CliError::validation)?;
    let heights = heights_in_range(c.k, lo, hi);
    if heights.is_empty() {
        return Err(CliError::Validation(format!("no power of k = {} inside N_range {}", c.k, c.n_range)));
    }
    let rows = qtn::overhead::sweep(c.k, heights, mode, &ec, regime).map_err(CliError::validation)?;
    let mut dir = RunDir::create(&common.out, "overhead", serde_json::to_value(&c).expect("serializable"), c.seed)?;
    dir.write_csv("overhead.csv", &[], &qtn::overhead::write_sweep_csv(&rows))?;
    for r in &rows {
        println!("N={} t={} per_node={:.6} closed_form={:.6}", r.end_nodes, r.t, r.per_node, r.per_node_closed_form);
    }
    if common.svg {
        let exact =
            Series { name: "layer by layer".into(), points: rows.iter().map(|r| (r.end_nodes as f64, r.per_node)).collect() };
        let closed = Series {
            name: "closed form".into(),
            points: rows.iter().map(|r| (r.end_nodes as f64, r.per_node_closed_form)).collect(),
        };
        let title = format!("k={} {} {}", c.k, mode.as_str(), family.as_str());
        let chart = Chart {
            title: &title,
            x_label: "end nodes N",
            y_label: "qubits per end node",
            log_x: true,
            log_y: true,
            scatter: false,
        };
        svg(&mut dir, "overhead.svg", chart, &[exact, closed])?;
    }
    finish(dir)
}

pub fn deploy(common: &Common, args: &crate::DeployArgs) -> Result<(), CliError> {
    let c: DeployConfig = resolve("deploy", common, args)?;
    let mode: DeploymentMode = parse(&c.mode)?;
    let tree = TreeTopology::new(c.k, c.n, 1).map_err(CliError::validation)?;
    let plan = layout(&tree, mode, c.l0).map_err(CliError::validation)?;
    let mut dir = RunDir::create(&common.out, "deploy", serde_json::to_value(&c).expect("serializable"), c.seed)?;
    let meta = [format!("growth_rate: {}", plan.growth_rate), format!("area_km2: {}", plan.area)];
    dir.write_csv("deploy.csv", &meta, &qtn::deployment::write_layout_csv(&plan))?;
    let mut ch = String::from("parent_depth,channel_length_km,repeaters\n");
    for (i, (l, r)) in plan.channel_lengths.iter().zip(&plan.repeater_counts).enumerate() {
        let _ = writeln!(ch, "{i},{l},{r}");
    }
    dir.write_csv("deploy_channels.csv", &meta, &ch)?;
    println!("growth rate {} area {} km^2, {} nodes", plan.growth_rate, plan.area, plan.positions.len());
    if common.svg {
        let series: Vec<Series> = (0..=c.n)
            .map(|d| Series {
                name: format!("depth {d}"),
                points: plan.positions.iter().filter(|p| p.depth == d).map(|p| (p.x_km, p.y_km)).collect(),
            })
            .collect();
        let title = format!("k={} n={} {}", c.k, c.n, mode.as_str());
        let chart = Chart { title: &title, x_label: "x (km)", y_label: "y (km)", log_x: false, log_y: false, scatter: true };
        svg(&mut dir, "deploy.svg", chart, &series)?;
    }
    finish(dir)
}

pub fn mesh(common: &Common, args: &crate::MeshArgs) -> Result<(), CliError> {
    let c: MeshConfig = resolve("mesh", common, args)?;
    if c.ne.is_empty() {
        return Err(CliError::Validation("ne: expected at least one path count".into()));
    }
    if let Some(g) = c.grid.iter().find(|&&g| g == 0) {
        return Err(CliError::Validation(format!("grid = {g}: expected >= 1")));
    }
    let instances = run_instances(&c.ne, c.reps, c.seed).map_err(CliError::validation)?;
    let points = summarize(&c.ne, &instances);
    let mut dir = RunDir::create(&common.out, "mesh", serde_json::to_value(&c).expect("serializable"), c.seed)?;
    dir.write_csv("mesh.csv", &[], &write_mesh_csv(&points))?;
    dir.write_csv("mesh_instances.csv", &[], &write_instances_csv(&instances))?;
    let fits = if c.ne.len() >= 3 && points.iter().all(|p| p.mean_center > 0.0 && p.std_center > 0.0) {
        fit_scaling(&points).ok()
    } else {
        None
    };
    if let Some(f) = &fits {
        let mut s = String::from("quantity,model,param,value,stderr\n");
        for (q, r) in
            [("total", &f.quadratic), ("total", &f.total_power), ("center_mean", &f.center_linear), ("center_std", &f.center_std)]
        {
            for p in &r.params {
                let _ = writeln!(
                    s,
                    "{q},{},{},{},{}",
                    serde_json::to_value(r.model).expect("enum").as_str().unwrap_or(""),
                    p.name,
                    p.value,
                    p.stderr
                );
            }
        }
        dir.write_csv("mesh_fits.csv", &[], &s)?;
        println!(
            "total = {:.4} N_e^2 (free exponent {:.4}); center = {:.4} N_e; center std exponent {:.4}",
            f.quadratic.value("coefficient"),
            f.total_power.value("exponent"),
            f.center_linear.value("coefficient"),
            f.center_std.value("exponent")
        );
    }
    let largest = *c.ne.iter().max().expect("non-empty");
    if let Some(inst) = instances.iter().find(|i| i.n_e == largest) {
        let hits = qtn::mesh::count_intersections(&SegmentSet::random(largest, inst.seed));
        for &g in &c.grid {
            let grid = density_map(&hits.points, g).map_err(CliError::validation)?;
            let meta = [format!("density grid {g}x{g}, N_e = {largest}, instance seed {}, top row first, normalized", inst.seed)];
            dir.write_csv(&format!("mesh_grid_{g}.txt"), &meta, &grid.to_text(true))?;
        }
    }
    if common.svg {
        let xs = |f: &dyn Fn(&qtn::mesh::MeshPoint) -> f64| points.iter().map(|p| (p.n_e as f64, f(p))).collect::<Vec<_>>();
        let mut total = vec![Series { name: "mean intersections".into(), points: xs(&|p| p.mean_total) }];
        let mut center = vec![
            Series { name: "center cell mean".into(), points: xs(&|p| p.mean_center) },
            Series { name: "center cell std".into(), points: xs(&|p| p.std_center) },
        ];
        if let Some(f) = &fits {
            let q = f.quadratic.value("coefficient");
            total.push(Series { name: format!("{q:.3} N_e^2"), points: xs(&|p| q * (p.n_e as f64).powi(2)) });
            let l = f.center_linear.value("coefficient");
            center.push(Series { name: format!("{l:.3} N_e"), points: xs(&|p| l * p.n_e as f64) });
        }
        let chart = Chart {
            title: "Path intersections",
            x_label: "paths N_e",
            y_label: "intersections",
            log_x: true,
            log_y: true,
            scatter: false,
        };
        svg(&mut dir, "mesh_total.svg", chart, &total)?;
        let chart = Chart {
            title: "Center cell",
            x_label: "paths N_e",
            y_label: "intersections",
            log_x: true,
            log_y: true,
            scatter: false,
        };
        svg(&mut dir, "mesh_center.svg", chart, &center)?;
    }
    finish(dir)
}
