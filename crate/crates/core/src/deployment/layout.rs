use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::covering::{covering_table, CoveringSolution, MAX_TABLE_K};
use crate::error::{Error, Result};
use crate::topology::{NodeLabel, TreeTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeploymentMode {
    /// Children disperse to minimally cover their parent's service disk.
    SurfaceCovering,
    /// End nodes on a square grid, quaternary routers at block centers.
    SquareLattice,
}

impl DeploymentMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DeploymentMode::SurfaceCovering => "2d",
            DeploymentMode::SquareLattice => "sq",
        }
    }
}

impl FromStr for DeploymentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2d" | "surface" | "surface_covering" => Ok(DeploymentMode::SurfaceCovering),
            "sq" | "square" | "square_lattice" => Ok(DeploymentMode::SquareLattice),
            other => Err(Error::param("mode", other, "one of 2d, sq")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePosition {
    pub label: NodeLabel,
    pub depth: u32,
    pub x_km: f64,
    pub y_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentPlan {
    pub mode: DeploymentMode,
    pub k: u32,
    pub n: u32,
    /// Ratio of consecutive layer channel lengths.
    pub growth_rate: f64,
    /// Elementary link length in km.
    pub l0: f64,
    /// `channel_lengths[i - 1]` is the nominal length `l0 * a^(n - i)` between
    /// depth `i - 1` and depth `i`.
    pub channel_lengths: Vec<f64>,
    /// Repeater stations on one channel of each layer interval.
    pub repeater_counts: Vec<u64>,
    /// Empty unless produced by [`layout`].
    pub positions: Vec<NodePosition>,
    /// Network area in km^2.
    pub area: f64,
}

impl DeploymentPlan {
    /// Area in units of `l0^2`.
    pub fn area_l0(&self) -> f64 {
        self.area / (self.l0 * self.l0)
    }

    /// Stations crossed on a root-to-leaf walk.
    pub fn stations_root_to_leaf(&self) -> u64 {
        self.repeater_counts.iter().sum()
    }

    /// Coverage radius of a node at `depth` (surface covering only).
    pub fn coverage_radius(&self, depth: u32) -> f64 {
        self.l0 * self.growth_rate.powi((self.n - depth) as i32)
    }
}

/// Growth rate `a_k` of a deployment mode.
pub fn growth_rate(k: u32, mode: DeploymentMode) -> Result<f64> {
    match mode {
        DeploymentMode::SquareLattice if k == 4 => Ok(2.0),
        DeploymentMode::SquareLattice => Err(Error::Unsupported(format!("square-lattice embedding needs k = 4, got k = {k}"))),
        DeploymentMode::SurfaceCovering => Ok(covering_for(k)?.radius),
    }
}

fn covering_for(k: u32) -> Result<CoveringSolution> {
    if !(2..=MAX_TABLE_K).contains(&k) {
        return Err(Error::Unsupported(format!("surface covering is tabulated for 2 <= k <= {MAX_TABLE_K}, got k = {k}")));
    }
    let table = covering_table(MAX_TABLE_K)?;
    Ok(table.into_iter().find(|e| e.k == k).expect("validated table has every k"))
}

/// Stations needed so that no elementary link exceeds `l0`:
/// `ceil(length / l0) - 1`.
pub fn repeater_count(channel_length: f64, l0: f64) -> Result<u64> {
    if !(l0 > 0.0) || !l0.is_finite() {
        return Err(Error::param("l0", l0, "l0 > 0"));
    }
    let ratio = channel_length / l0;
    if !ratio.is_finite() || ratio < 1.0 - 1e-12 {
        return Err(Error::param("channel_length", channel_length, "channel_length >= l0"));
    }
    // absorb floating noise from a^j products with integral values
    let ceil = (ratio - 1e-9).ceil().max(1.0);
    Ok(ceil as u64 - 1)
}

/// Geometry without node positions.
pub fn plan(tree: &TreeTopology, mode: DeploymentMode, l0: f64) -> Result<DeploymentPlan> {
    let k = tree.k();
    let n = tree.height();
    let a = growth_rate(k, mode)?;
    if !(l0 > 0.0) || !l0.is_finite() {
        return Err(Error::param("l0", l0, "l0 > 0"));
    }
    let channel_lengths: Vec<f64> = (1..=n).map(|i| l0 * a.powi((n - i) as i32)).collect();
    let repeater_counts = channel_lengths.iter().map(|&len| repeater_count(len, l0)).collect::<Result<Vec<_>>>()?;
    let span = a.powi(n as i32) * l0;
    let area = match mode {
        DeploymentMode::SurfaceCovering => std::f64::consts::PI * span * span,
        DeploymentMode::SquareLattice => 2.0 * span * span,
    };
    Ok(DeploymentPlan { mode, k, n, growth_rate: a, l0, channel_lengths, repeater_counts, positions: Vec::new(), area })
}

/// Geometry with planar coordinates for every node, root first, in
/// breadth-first order.
pub fn layout(tree: &TreeTopology, mode: DeploymentMode, l0: f64) -> Result<DeploymentPlan> {
    let mut plan = plan(tree, mode, l0)?;
    plan.positions = match mode {
        DeploymentMode::SurfaceCovering => surface_positions(tree, &covering_for(tree.k())?, l0),
        DeploymentMode::SquareLattice => square_positions(tree, l0),
    };
    Ok(plan)
}

fn surface_positions(tree: &TreeTopology, cover: &CoveringSolution, l0: f64) -> Vec<NodePosition> {
    let n = tree.height();
    let a = cover.radius;
    let mut out = Vec::with_capacity(tree.node_count() as usize);
    out.push(NodePosition { label: NodeLabel::root(), depth: 0, x_km: 0.0, y_km: 0.0 });
    let mut start = 0;
    for depth in 0..n {
        let end = out.len();
        // children of a depth-d node cover its disk with disks of radius R_d / a;
        // covering centers are expressed in units of that child radius
        let child_radius = l0 * a.powi((n - depth - 1) as i32);
        for idx in start..end {
            let (label, px, py) = {
                let p = &out[idx];
                (p.label.clone(), p.x_km, p.y_km)
            };
            for (j, c) in cover.centers.iter().enumerate() {
                out.push(NodePosition {
                    label: label.child(j as u32),
                    depth: depth + 1,
                    x_km: px + c[0] * child_radius,
                    y_km: py + c[1] * child_radius,
                });
            }
        }
        start = end;
    }
    out
}

fn square_positions(tree: &TreeTopology, l0: f64) -> Vec<NodePosition> {
    let n = tree.height();
    let spacing = std::f64::consts::SQRT_2 * l0;
    let mut out = Vec::with_capacity(tree.node_count() as usize);
    for depth in 0..=n {
        let block = (1u64 << (n - depth)) as f64;
        for label in tree.labels_at_depth(depth) {
            let (mut bx, mut by) = (0u64, 0u64);
            for &digit in label.digits() {
                bx = 2 * bx + (digit & 1) as u64;
                by = 2 * by + (digit >> 1) as u64;
            }
            out.push(NodePosition {
                label,
                depth,
                x_km: (bx as f64 + 0.5) * block * spacing,
                y_km: (by as f64 + 0.5) * block * spacing,
            });
        }
    }
    out
}

/// Writes positions as `label,depth,x_km,y_km` rows under a header.
pub fn write_layout_csv(plan: &DeploymentPlan) -> String {
    let mut s = String::from("label,depth,x_km,y_km\n");
    for p in &plan.positions {
        writeln!(s, "{},{},{},{}", p.label, p.depth, p.x_km, p.y_km).expect("write to string");
    }
    s
}
