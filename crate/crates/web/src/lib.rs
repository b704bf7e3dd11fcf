//! Browser bindings: overhead curves, deployment layouts and mesh density
//! maps, each returned as a JSON string for the demo page.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qtn::deployment::{layout, DeploymentMode};
use qtn::mesh::{count_intersections, density_map, SegmentSet};
use qtn::overhead::{heights_in_range, sweep, CodeFamily, EcConfig, Regime};
use qtn::topology::TreeTopology;

#[derive(Serialize)]
struct CurvePoint {
    n: u64,
    t: u32,
    per_node: f64,
    closed_form: f64,
}

#[derive(Serialize)]
struct Curve {
    k: u32,
    mode: &'static str,
    family: &'static str,
    exponent: f64,
    points: Vec<CurvePoint>,
}

/// Per-node overhead for every `k^n` in `[lo, hi]`.
pub fn overhead_curve_json(k: u32, mode: &str, family: &str, r: u32, lo: u64, hi: u64) -> Result<String, String> {
    let mode: DeploymentMode = mode.parse().map_err(|e: qtn::Error| e.to_string())?;
    let family: CodeFamily = family.parse().map_err(|e: qtn::Error| e.to_string())?;
    let cfg = EcConfig::preset(family).with_nesting(r);
    cfg.validate().map_err(|e| e.to_string())?;
    let heights = heights_in_range(k, lo, hi);
    if heights.is_empty() {
        return Err(format!("no power of {k} between {lo} and {hi}"));
    }
    let rows = sweep(k, heights, mode, &cfg, Regime::Sparse).map_err(|e| e.to_string())?;
    let curve = Curve {
        k,
        mode: mode.as_str(),
        family: family.as_str(),
        exponent: rows[0].exponent,
        points: rows
            .iter()
            .map(|r| CurvePoint { n: r.end_nodes, t: r.t, per_node: r.per_node, closed_form: r.per_node_closed_form })
            .collect(),
    };
    Ok(serde_json::to_string(&curve).expect("serializable"))
}

#[derive(Serialize)]
struct Node {
    label: String,
    depth: u32,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct Layout {
    growth_rate: f64,
    area: f64,
    nodes: Vec<Node>,
}

/// Node coordinates in units of the elementary link length.
pub fn layout_json(k: u32, n: u32, mode: &str) -> Result<String, String> {
    let mode: DeploymentMode = mode.parse().map_err(|e: qtn::Error| e.to_string())?;
    let tree = TreeTopology::new(k, n, 1).map_err(|e| e.to_string())?;
    if tree.node_count() > 20_000 {
        return Err(format!("{} nodes is too many to draw", tree.node_count()));
    }
    let plan = layout(&tree, mode, 1.0).map_err(|e| e.to_string())?;
    let nodes =
        plan.positions.iter().map(|p| Node { label: p.label.to_string(), depth: p.depth, x: p.x_km, y: p.y_km }).collect();
    Ok(serde_json::to_string(&Layout { growth_rate: plan.growth_rate, area: plan.area, nodes }).expect("serializable"))
}

#[derive(Serialize)]
struct Density {
    g: usize,
    total: u64,
    /// Row-major, bottom row first, shares of the total.
    cells: Vec<f64>,
}

/// Intersection density of one random instance.
pub fn mesh_density_json(n_e: usize, g: usize, seed: u64) -> Result<String, String> {
    if !(2..=3000).contains(&n_e) {
        return Err(format!("N_e = {n_e}: expected 2..=3000"));
    }
    let hits = count_intersections(&SegmentSet::random(n_e, seed));
    let grid = density_map(&hits.points, g).map_err(|e| e.to_string())?;
    let d = Density { g, total: grid.total(), cells: grid.normalized() };
    Ok(serde_json::to_string(&d).expect("serializable"))
}

#[wasm_bindgen]
pub fn overhead_curve(k: u32, mode: &str, family: &str, r: u32, lo: f64, hi: f64) -> Result<String, JsError> {
    overhead_curve_json(k, mode, family, r, lo as u64, hi as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn deployment_layout(k: u32, n: u32, mode: &str) -> Result<String, JsError> {
    layout_json(k, n, mode).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn mesh_density(n_e: u32, g: u32, seed: u32) -> Result<String, JsError> {
    mesh_density_json(n_e as usize, g as usize, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn curve() {
        let v: Value = serde_json::from_str(&overhead_curve_json(4, "2d", "css", 1, 64, 1 << 20).unwrap()).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 8);
        assert!((v["exponent"].as_f64().unwrap() - 0.25).abs() < 1e-12);
        assert!(overhead_curve_json(4, "hex", "css", 1, 64, 1024).is_err());
        assert!(overhead_curve_json(4, "2d", "css", 1, 5000, 6000).is_err());
    }

    #[test]
    fn layout_nodes() {
        let v: Value = serde_json::from_str(&layout_json(7, 2, "2d").unwrap()).unwrap();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 57);
        assert!(layout_json(3, 2, "sq").is_err());
    }

    #[test]
    fn density_sums_to_one() {
        let v: Value = serde_json::from_str(&mesh_density_json(200, 10, 1).unwrap()).unwrap();
        let s: f64 = v["cells"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-9);
        assert!(mesh_density_json(1, 10, 1).is_err());
        assert!(mesh_density_json(100, 0, 1).is_err());
    }
}
