//! Congestion of straight-line routing paths in the unit square.
//!
//! Every pair of random segments is tested (O(N_e^2)); intersection points
//! are binned into grids to find where memories would be needed.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::experiments::fit::{fit_power_law, fit_proportional, FitResult};
use crate::experiments::stats::{split_seed, RunningStats};
use crate::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Result<Self> {
        if a == b {
            return Err(Error::Degenerate(format!("zero-length segment at {a:?}")));
        }
        Ok(Segment { a, b })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSet {
    pub seed: u64,
    pub segments: Vec<Segment>,
}

impl SegmentSet {
    /// `n_e` segments with both endpoints uniform in the unit square.
    pub fn random(n_e: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut segments = Vec::with_capacity(n_e);
        while segments.len() < n_e {
            let a = [rng.random::<f64>(), rng.random::<f64>()];
            let b = [rng.random::<f64>(), rng.random::<f64>()];
            if a != b {
                segments.push(Segment { a, b });
            }
        }
        SegmentSet { seed, segments }
    }
}

const EXACT_BELOW: f64 = 1e-12;

/// Sign of the turn p -> q -> r. Falls back to exact rational arithmetic
/// when the floating determinant is tiny.
pub fn orientation(p: Point, q: Point, r: Point) -> i8 {
    let det = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    if det.abs() >= EXACT_BELOW {
        return if det > 0.0 { 1 } else { -1 };
    }
    let f = |v: f64| BigRational::from_float(v).expect("finite coordinate");
    let (px, py) = (f(p[0]), f(p[1]));
    let d = (f(q[0]) - &px) * (f(r[1]) - &py) - (f(q[1]) - &py) * (f(r[0]) - &px);
    if d.is_zero() {
        0
    } else if d > BigRational::zero() {
        1
    } else {
        -1
    }
}

/// `r` lies in the bounding box of `p`, `q` (used once collinear).
fn on_segment(p: Point, q: Point, r: Point) -> bool {
    r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
}

fn intersects(s: &Segment, t: &Segment) -> bool {
    let o1 = orientation(s.a, s.b, t.a);
    let o2 = orientation(s.a, s.b, t.b);
    let o3 = orientation(t.a, t.b, s.a);
    let o4 = orientation(t.a, t.b, s.b);
    // proper crossing, or one endpoint exactly on the other line
    if o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0 {
        return true;
    }
    (o1 == 0 && on_segment(s.a, s.b, t.a))
        || (o2 == 0 && on_segment(s.a, s.b, t.b))
        || (o3 == 0 && on_segment(t.a, t.b, s.a))
        || (o4 == 0 && on_segment(t.a, t.b, s.b))
}

/// Closed segments share a point. Collinear overlaps and touching ends count.
pub fn segments_intersect(s: &Segment, t: &Segment) -> Result<bool> {
    if s.a == s.b || t.a == t.b {
        return Err(Error::Degenerate("zero-length segment".into()));
    }
    Ok(intersects(s, t))
}

/// A representative common point of two intersecting segments.
pub fn intersection_point(s: &Segment, t: &Segment) -> Option<Point> {
    if !intersects(s, t) {
        return None;
    }
    let r = [s.b[0] - s.a[0], s.b[1] - s.a[1]];
    let q = [t.b[0] - t.a[0], t.b[1] - t.a[1]];
    let den = r[0] * q[1] - r[1] * q[0];
    if den != 0.0 {
        let w = [t.a[0] - s.a[0], t.a[1] - s.a[1]];
        let u = ((w[0] * q[1] - w[1] * q[0]) / den).clamp(0.0, 1.0);
        return Some([s.a[0] + u * r[0], s.a[1] + u * r[1]]);
    }
    // collinear overlap: an endpoint inside the other segment
    [t.a, t.b, s.a, s.b].into_iter().find(|&p| on_segment(s.a, s.b, p) && on_segment(t.a, t.b, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersections {
    pub count: u64,
    pub points: Vec<Point>,
}

/// Tests all `C(N_e, 2)` pairs.
pub fn count_intersections(set: &SegmentSet) -> Intersections {
    let segs = &set.segments;
    let mut points = Vec::new();
    for (i, s) in segs.iter().enumerate() {
        for t in &segs[i + 1..] {
            if let Some(p) = intersection_point(s, t) {
                points.push(p);
            }
        }
    }
    Intersections { count: points.len() as u64, points }
}

/// Count only, without storing points.
pub fn count_only(set: &SegmentSet) -> u64 {
    let segs = &set.segments;
    let mut n = 0;
    for (i, s) in segs.iter().enumerate() {
        n += segs[i + 1..].iter().filter(|t| intersects(s, t)).count() as u64;
    }
    n
}

/// `g x g` intersection counts, row `y`, column `x`, origin bottom-left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub g: usize,
    pub counts: Vec<u64>,
}

impl DensityGrid {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn get(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.g + ix]
    }

    /// Shares of the total; all zero when there are no intersections.
    pub fn normalized(&self) -> Vec<f64> {
        let t = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// Plain-text matrix, top row first.
    pub fn to_text(&self, normalized: bool) -> String {
        let vals: Vec<f64> = if normalized { self.normalized() } else { self.counts.iter().map(|&c| c as f64).collect() };
        let mut out = String::new();
        for iy in (0..self.g).rev() {
            let row: Vec<String> = (0..self.g).map(|ix| vals[iy * self.g + ix].to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// Cell of a coordinate in `[0, 1]` on a `g`-cell axis; 1.0 joins the last cell.
pub fn cell_index(v: f64, g: usize) -> usize {
    ((v * g as f64).floor().max(0.0) as usize).min(g - 1)
}

pub fn density_map(points: &[Point], g: usize) -> Result<DensityGrid> {
    if g < 1 {
        return Err(Error::param("g", g, ">= 1"));
    }
    let mut counts = vec![0u64; g * g];
    for p in points {
        counts[cell_index(p[1], g) * g + cell_index(p[0], g)] += 1;
    }
    Ok(DensityGrid { g, counts })
}

/// Side of the per-node grid: `round(sqrt(N_e) / 2)`, at least 1.
pub fn center_grid_side(n_e: usize) -> usize {
    (((n_e as f64).sqrt() / 2.0).round() as usize).max(1)
}

/// Center cell index on each axis; for even sides the cell just below and
/// left of the exact center.
pub fn center_cell(side: usize) -> usize {
    (side - 1) / 2
}

/// Intersections falling inside the center cell of the per-node grid.
pub fn center_cell_count(points: &[Point], n_e: usize) -> u64 {
    let s = center_grid_side(n_e);
    let c = center_cell(s);
    points.iter().filter(|p| cell_index(p[0], s) == c && cell_index(p[1], s) == c).count() as u64
}

/// Summary over instances at one `N_e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPoint {
    pub n_e: usize,
    pub reps: u32,
    pub mean_total: f64,
    pub std_total: f64,
    pub mean_center: f64,
    pub std_center: f64,
}

/// Per-instance record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshInstance {
    pub seed: u64,
    pub n_e: usize,
    pub count: u64,
    pub center: u64,
}

pub fn run_instances(n_values: &[usize], reps: u32, base_seed: u64) -> Result<Vec<MeshInstance>> {
    if let Some(&n) = n_values.iter().find(|&&n| n < 2) {
        return Err(Error::param("N_e", n, ">= 2"));
    }
    if reps < 1 {
        return Err(Error::param("reps", reps, ">= 1"));
    }
    let jobs: Vec<(usize, usize, u32)> =
        n_values.iter().enumerate().flat_map(|(gi, &n)| (0..reps).map(move |r| (gi, n, r))).collect();
    Ok(jobs
        .into_par_iter()
        .map(|(gi, n_e, rep)| {
            let seed = split_seed(base_seed, gi as u64, u64::from(rep));
            let hits = count_intersections(&SegmentSet::random(n_e, seed));
            MeshInstance { seed, n_e, count: hits.count, center: center_cell_count(&hits.points, n_e) }
        })
        .collect())
}

pub fn summarize(n_values: &[usize], instances: &[MeshInstance]) -> Vec<MeshPoint> {
    n_values
        .iter()
        .map(|&n_e| {
            let (mut tot, mut cen) = (RunningStats::default(), RunningStats::default());
            for i in instances.iter().filter(|i| i.n_e == n_e) {
                tot.push(i.count as f64);
                cen.push(i.center as f64);
            }
            MeshPoint {
                n_e,
                reps: tot.count as u32,
                mean_total: tot.mean().unwrap_or(f64::NAN),
                std_total: tot.variance().unwrap_or(0.0).sqrt(),
                mean_center: cen.mean().unwrap_or(f64::NAN),
                std_center: cen.variance().unwrap_or(0.0).sqrt(),
            }
        })
        .collect()
}

/// Fits describing how congestion grows with the number of paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshScaling {
    /// `mean_total = c N_e^2`.
    pub quadratic: FitResult,
    /// Free power law on `mean_total`.
    pub total_power: FitResult,
    /// `mean_center = c N_e`.
    pub center_linear: FitResult,
    /// Power law on the center-cell standard deviation.
    pub center_std: FitResult,
}

pub fn fit_scaling(points: &[MeshPoint]) -> Result<MeshScaling> {
    let xs: Vec<f64> = points.iter().map(|p| p.n_e as f64).collect();
    let tot: Vec<f64> = points.iter().map(|p| p.mean_total).collect();
    let cen: Vec<f64> = points.iter().map(|p| p.mean_center).collect();
    let sd: Vec<f64> = points.iter().map(|p| p.std_center).collect();
    Ok(MeshScaling {
        quadratic: fit_proportional(&xs, &tot, 2.0)?,
        total_power: fit_power_law(&xs, &tot)?,
        center_linear: fit_proportional(&xs, &cen, 1.0)?,
        center_std: fit_power_law(&xs, &sd)?,
    })
}

/// Center-cell mean and standard-deviation fits.
pub fn center_cell_scaling(n_values: &[usize], reps: u32, base_seed: u64) -> Result<(FitResult, FitResult)> {
    if let Some(&n) = n_values.iter().find(|&&n| n < 16) {
        return Err(Error::param("N_e", n, ">= 16"));
    }
    let inst = run_instances(n_values, reps, base_seed)?;
    let s = fit_scaling(&summarize(n_values, &inst))?;
    Ok((s.center_linear, s.center_std))
}

pub const MESH_CSV_HEADER: &str = "N_e,reps,mean_total,std_total,mean_center,std_center";

pub fn write_mesh_csv(points: &[MeshPoint]) -> String {
    let mut out = String::from(MESH_CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(out, "{},{},{},{},{},{}", p.n_e, p.reps, p.mean_total, p.std_total, p.mean_center, p.std_center);
    }
    out
}

pub const INSTANCE_CSV_HEADER: &str = "seed,N_e,count,center";

pub fn write_instances_csv(instances: &[MeshInstance]) -> String {
    let mut out = String::from(INSTANCE_CSV_HEADER);
    out.push('\n');
    for i in instances {
        let _ = writeln!(out, "{},{},{},{}", i.seed, i.n_e, i.count, i.center);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: Point, b: Point) -> Segment {
        Segment::new(a, b).unwrap()
    }

    /// Parametric solve on the two supporting lines.
    fn oracle(s: &Segment, t: &Segment) -> bool {
        let r = [s.b[0] - s.a[0], s.b[1] - s.a[1]];
        let q = [t.b[0] - t.a[0], t.b[1] - t.a[1]];
        let w = [t.a[0] - s.a[0], t.a[1] - s.a[1]];
        let den = r[0] * q[1] - r[1] * q[0];
        if den == 0.0 {
            return false;
        }
        let u = (w[0] * q[1] - w[1] * q[0]) / den;
        let v = (w[0] * r[1] - w[1] * r[0]) / den;
        (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)
    }

    #[test]
    fn basic_cases() {
        let d1 = seg([0.0, 0.0], [1.0, 1.0]);
        let d2 = seg([0.0, 1.0], [1.0, 0.0]);
        assert!(segments_intersect(&d1, &d2).unwrap());
        assert_eq!(intersection_point(&d1, &d2), Some([0.5, 0.5]));
        let h1 = seg([0.0, 0.0], [1.0, 0.0]);
        let h2 = seg([0.0, 1.0], [1.0, 1.0]);
        assert!(!segments_intersect(&h1, &h2).unwrap());
        // collinear overlap and touching ends
        assert!(segments_intersect(&seg([0.0, 0.0], [0.6, 0.0]), &seg([0.4, 0.0], [1.0, 0.0])).unwrap());
        assert!(!segments_intersect(&seg([0.0, 0.0], [0.4, 0.0]), &seg([0.6, 0.0], [1.0, 0.0])).unwrap());
        assert!(segments_intersect(&seg([0.0, 0.0], [0.5, 0.5]), &seg([0.5, 0.5], [1.0, 0.0])).unwrap());
        assert!(segments_intersect(&seg([0.0, 0.0], [1.0, 0.0]), &seg([0.5, 0.0], [0.5, 1.0])).unwrap());
        let bad = Segment { a: [0.2, 0.2], b: [0.2, 0.2] };
        assert!(segments_intersect(&bad, &d1).is_err());
    }

    #[test]
    fn exact_fallback_on_near_collinear() {
        let p = [0.1, 0.1];
        let q = [0.3, 0.3];
        let r = [0.7, 0.7 + 1e-17];
        // 0.7 + 1e-17 rounds to 0.7: exactly collinear in binary
        assert_eq!(orientation(p, q, r), orientation(p, q, [0.7, 0.7]));
        let r2 = [0.7, f64::from_bits(0.7f64.to_bits() + 1)];
        assert_eq!(orientation(p, q, r2), 1);
        let r3 = [0.7, f64::from_bits(0.7f64.to_bits() - 1)];
        assert_eq!(orientation(p, q, r3), -1);
    }

    #[test]
    fn matches_parametric_oracle() {
        let set = SegmentSet::random(200, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10_000 {
            let s = &set.segments[rng.random_range(0..200)];
            let t = &set.segments[rng.random_range(0..200)];
            if s == t {
                continue;
            }
            assert_eq!(segments_intersect(s, t).unwrap(), oracle(s, t));
            assert_eq!(segments_intersect(s, t).unwrap(), segments_intersect(t, s).unwrap());
        }
    }

    #[test]
    fn parallel_family_has_no_crossings() {
        let segs: Vec<Segment> = (0..20).map(|i| seg([0.0, f64::from(i) / 20.0], [1.0, f64::from(i) / 20.0])).collect();
        let set = SegmentSet { seed: 0, segments: segs };
        assert_eq!(count_intersections(&set).count, 0);
        assert_eq!(count_only(&set), 0);
    }

    #[test]
    fn grid_partition() {
        let set = SegmentSet::random(300, 1);
        let hits = count_intersections(&set);
        assert_eq!(hits.count, count_only(&set));
        for g in [1, 10, 50] {
            let grid = density_map(&hits.points, g).unwrap();
            assert_eq!(grid.total(), hits.count);
            assert!((grid.normalized().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let edge = density_map(&[[1.0, 1.0], [0.0, 0.0], [1.0, 0.0]], 4).unwrap();
        assert_eq!((edge.get(3, 3), edge.get(0, 0), edge.get(3, 0)), (1, 1, 1));
        assert_eq!(density_map(&hits.points, 10).unwrap().to_text(false).lines().count(), 10);
    }

    #[test]
    fn center_cell_rule() {
        assert_eq!(center_grid_side(125), 6);
        assert_eq!(center_grid_side(500), 11);
        assert_eq!(center_cell(11), 5);
        assert_eq!(center_cell(6), 2);
        assert_eq!(center_cell(1), 0);
    }

    #[test]
    fn two_segment_probability() {
        let n = 200_000u64;
        let hits: u64 = (0..n).into_par_iter().map(|i| count_only(&SegmentSet::random(2, split_seed(99, 0, i)))).sum();
        let q = hits as f64 / n as f64;
        // 2 * 0.115 within Monte Carlo error
        assert!((q - 0.23).abs() < 0.01, "{q}");
    }
}
