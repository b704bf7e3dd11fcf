//! Minimal disk covering: the largest disk that `k` unit disks can cover.
//!
//! The covered radius for a configuration is found exactly. For centers
//! `c_1..c_k` and a target disk `D`, the function `x -> min_j |x - c_j|` is
//! convex on each Voronoi cell, so its maximum over `D` lies on a Voronoi
//! vertex inside `D`, on a bisector/boundary crossing, or at the boundary
//! point diametrically opposite a center. Evaluating those candidates gives
//! the farthest uncovered distance without sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Frozen covering table shipped with the crate.
pub const COVERING_TABLE_JSON: &str = include_str!("../../data/covering_table.json");

pub const MAX_TABLE_K: u32 = 12;

/// `k` unit disks whose union covers the origin-centered disk of `radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringSolution {
    pub k: u32,
    pub radius: f64,
    pub centers: Vec<Point>,
    #[serde(default)]
    pub source: CoveringSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoveringSource {
    Analytic,
    #[default]
    Optimized,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CoveringTableFile {
    version: u32,
    entries: Vec<CoveringSolution>,
}

impl CoveringSolution {
    /// Largest distance from a point of the target disk to its nearest center.
    pub fn max_uncovered_distance(&self) -> f64 {
        farthest_point_distance(&self.centers, self.radius)
    }

    /// Every point of the target disk is within `1 + tol` of some center.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.centers.len() == self.k as usize && self.max_uncovered_distance() <= 1.0 + tol
    }
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn nearest(centers: &[Point], x: Point) -> f64 {
    centers.iter().map(|&c| dist(c, x)).fold(f64::INFINITY, f64::min)
}

fn circumcenter(a: Point, b: Point, c: Point) -> Option<Point> {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    if d.abs() < 1e-14 {
        return None;
    }
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    Some([
        (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d,
        (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d,
    ])
}

/// Calls `visit` with every candidate location for the farthest point.
fn for_each_candidate(centers: &[Point], radius: f64, mut visit: impl FnMut(Point)) {
    let r2 = radius * radius;
    for (i, &ci) in centers.iter().enumerate() {
        let norm = (ci[0] * ci[0] + ci[1] * ci[1]).sqrt();
        if norm > 1e-15 {
            visit([-ci[0] / norm * radius, -ci[1] / norm * radius]);
        } else {
            visit([radius, 0.0]);
        }
        for (j, &cj) in centers.iter().enumerate().skip(i + 1) {
            // bisector of ci, cj meets the boundary circle
            let mid = [(ci[0] + cj[0]) / 2.0, (ci[1] + cj[1]) / 2.0];
            let dir = [-(cj[1] - ci[1]), cj[0] - ci[0]];
            let dd = dir[0] * dir[0] + dir[1] * dir[1];
            if dd > 1e-30 {
                let b = mid[0] * dir[0] + mid[1] * dir[1];
                let c = mid[0] * mid[0] + mid[1] * mid[1] - r2;
                let disc = b * b - dd * c;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    for t in [(-b - s) / dd, (-b + s) / dd] {
                        visit([mid[0] + t * dir[0], mid[1] + t * dir[1]]);
                    }
                }
            }
            for &cl in centers.iter().skip(j + 1) {
                if let Some(v) = circumcenter(ci, cj, cl) {
                    if v[0] * v[0] + v[1] * v[1] <= r2 * (1.0 + 1e-12) {
                        visit(v);
                    }
                }
            }
        }
    }
}

/// Max over the disk of radius `radius` of the distance to the nearest
/// center.
pub fn farthest_point_distance(centers: &[Point], radius: f64) -> f64 {
    if centers.is_empty() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for_each_candidate(centers, radius, |x| worst = worst.max(nearest(centers, x)));
    worst
}

/// Log-sum-exp smoothing of [`farthest_point_distance`] on the unit disk.
fn soft_farthest(centers: &[Point], beta: f64, values: &mut Vec<f64>) -> f64 {
    values.clear();
    for_each_candidate(centers, 1.0, |x| values.push(nearest(centers, x)));
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|v| (beta * (v - top)).exp()).sum();
    top + sum.ln() / beta
}

/// Closed-form optimal coverings.
pub fn analytic_covering(k: u32) -> Option<CoveringSolution> {
    let (radius, centers): (f64, Vec<Point>) = match k {
        // One unit disk already covers the best possible disk; the second
        // center is placed halfway out so children stay distinguishable.
        2 => (1.0, vec![[0.0, 0.0], [0.5, 0.0]]),
        3 => {
            let r = 2.0 / 3f64.sqrt();
            let d = 1.0 / 3f64.sqrt();
            let centers = (0..3)
                .map(|j| {
                    let th = std::f64::consts::FRAC_PI_2 + j as f64 * 2.0 * std::f64::consts::PI / 3.0;
                    [d * th.cos(), d * th.sin()]
                })
                .collect();
            (r, centers)
        }
        4 => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            (2f64.sqrt(), vec![[h, h], [-h, h], [-h, -h], [h, -h]])
        }
        7 => {
            let d = 3f64.sqrt();
            let mut centers = vec![[0.0, 0.0]];
            centers.extend((0..6).map(|j| {
                let th = std::f64::consts::PI / 6.0 + j as f64 * std::f64::consts::PI / 3.0;
                [d * th.cos(), d * th.sin()]
            }));
            (2.0, centers)
        }
        _ => return None,
    };
    Some(CoveringSolution { k, radius, centers, source: CoveringSource::Analytic })
}

/// Local search for a good covering of the unit disk by `k` equal disks,
/// returned rescaled to unit disks.
///
/// Each restart seeds centers at random, runs minimax Lloyd iterations on a
/// sampled disk (every center moves to the minimal enclosing circle of the
/// samples it serves), then polishes with a (1+1) evolution strategy on the
/// exact covered radius using the one-fifth success rule. Moves perturb a
/// random subset of centers so that kinks shared by several centers can
/// still be escaped.
pub fn optimize_covering(k: u32, restarts: u32, iterations: u32, seed: u64) -> CoveringSolution {
    assert!(k >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let kk = k as usize;
    let samples = disk_samples(48, 720);
    let mut best: Option<(f64, Vec<Point>)> = None;
    for _ in 0..restarts.max(1) {
        let mut x: Vec<Point> = (0..kk).map(|_| random_in_disk(&mut rng, 1.0)).collect();
        lloyd_minimax(&mut x, &samples, 200, &mut rng);
        soft_descent(&mut x, 3000);
        let mut fx = farthest_point_distance(&x, 1.0);
        let mut sigma = 0.05;
        let mut y = x.clone();
        for _ in 0..iterations {
            y.copy_from_slice(&x);
            let moved = rng.random_range(1..=kk);
            for _ in 0..moved {
                let i = rng.random_range(0..kk);
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                y[i] = project_into_disk([y[i][0] + sigma * dx, y[i][1] + sigma * dy]);
            }
            let fy = farthest_point_distance(&y, 1.0);
            if fy <= fx {
                std::mem::swap(&mut x, &mut y);
                fx = fy;
                sigma *= 1.5;
            } else {
                sigma *= 0.9036; // 1.5^(-1/4)
            }
            sigma = sigma.clamp(1e-9, 0.5);
        }
        if best.as_ref().is_none_or(|(fb, _)| fx < *fb) {
            best = Some((fx, x));
        }
    }
    let (rho, centers) = best.expect("at least one restart");
    let scale = 1.0 / rho;
    CoveringSolution {
        k,
        radius: scale,
        centers: centers.iter().map(|c| [c[0] * scale, c[1] * scale]).collect(),
        source: CoveringSource::Optimized,
    }
}

/// Adam descent on the smoothed covered radius with a sharpening schedule.
/// Gradients are central finite differences.
fn soft_descent(x: &mut [Point], steps: usize) {
    let dim = 2 * x.len();
    let (b1, b2) = (0.9, 0.999);
    let mut m = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut scratch = Vec::new();
    let h = 1e-7;
    for step in 0..steps {
        let frac = step as f64 / steps as f64;
        let beta = 30.0 * (1e5f64 / 30.0).powf(frac);
        let lr = 2e-3 * (1.0 - frac) + 1e-5;
        for (p, g) in grad.iter_mut().enumerate() {
            let (i, c) = (p / 2, p % 2);
            let orig = x[i][c];
            x[i][c] = orig + h;
            let up = soft_farthest(x, beta, &mut scratch);
            x[i][c] = orig - h;
            let down = soft_farthest(x, beta, &mut scratch);
            x[i][c] = orig;
            *g = (up - down) / (2.0 * h);
        }
        let t = (step + 1) as i32;
        for p in 0..dim {
            m[p] = b1 * m[p] + (1.0 - b1) * grad[p];
            v[p] = b2 * v[p] + (1.0 - b2) * grad[p] * grad[p];
            let mh = m[p] / (1.0 - b1.powi(t));
            let vh = v[p] / (1.0 - b2.powi(t));
            x[p / 2][p % 2] -= lr * mh / (vh.sqrt() + 1e-12);
        }
        for c in x.iter_mut() {
            *c = project_into_disk(*c);
        }
    }
}

/// Polar grid over the unit disk plus a dense boundary ring.
fn disk_samples(rings: usize, boundary: usize) -> Vec<Point> {
    let mut pts = vec![[0.0, 0.0]];
    for i in 1..rings {
        let r = i as f64 / rings as f64;
        let spokes = 6 * i;
        for j in 0..spokes {
            let th = (j as f64 + 0.5 * (i % 2) as f64) * std::f64::consts::TAU / spokes as f64;
            pts.push([r * th.cos(), r * th.sin()]);
        }
    }
    for j in 0..boundary {
        let th = j as f64 * std::f64::consts::TAU / boundary as f64;
        pts.push([th.cos(), th.sin()]);
    }
    pts
}

fn lloyd_minimax(centers: &mut [Point], samples: &[Point], rounds: usize, rng: &mut impl Rng) {
    let kk = centers.len();
    let mut cells: Vec<Vec<Point>> = vec![Vec::new(); kk];
    for _ in 0..rounds {
        cells.iter_mut().for_each(Vec::clear);
        for &s in samples {
            let mut best = 0;
            let mut bd = f64::INFINITY;
            for (j, &c) in centers.iter().enumerate() {
                let d = (s[0] - c[0]).powi(2) + (s[1] - c[1]).powi(2);
                if d < bd {
                    bd = d;
                    best = j;
                }
            }
            cells[best].push(s);
        }
        let mut shift: f64 = 0.0;
        for (c, cell) in centers.iter_mut().zip(cells.iter_mut()) {
            let next = if cell.is_empty() { random_in_disk(rng, 1.0) } else { minimal_enclosing_circle(cell, rng).0 };
            shift = shift.max(dist(*c, next));
            *c = next;
        }
        if shift < 1e-10 {
            break;
        }
    }
}

/// Welzl's randomized minimal enclosing circle, returned as (center, radius).
fn minimal_enclosing_circle(points: &mut [Point], rng: &mut impl Rng) -> (Point, f64) {
    use rand::seq::SliceRandom;
    points.shuffle(rng);
    let eps = 1e-12;
    let inside = |c: Point, r: f64, p: Point| dist(c, p) <= r + eps;
    let mut c = points[0];
    let mut r = 0.0;
    for i in 1..points.len() {
        if inside(c, r, points[i]) {
            continue;
        }
        c = points[i];
        r = 0.0;
        for j in 0..i {
            if inside(c, r, points[j]) {
                continue;
            }
            c = [(points[i][0] + points[j][0]) / 2.0, (points[i][1] + points[j][1]) / 2.0];
            r = dist(c, points[i]);
            for l in 0..j {
                if inside(c, r, points[l]) {
                    continue;
                }
                c = circumcenter(points[i], points[j], points[l]).unwrap_or(c);
                r = dist(c, points[l]).max(dist(c, points[i]));
            }
        }
    }
    (c, r)
}

fn random_in_disk(rng: &mut impl Rng, r: f64) -> Point {
    loop {
        let x = rng.random_range(-r..r);
        let y = rng.random_range(-r..r);
        if x * x + y * y <= r * r {
            return [x, y];
        }
    }
}

fn project_into_disk(p: Point) -> Point {
    let n = (p[0] * p[0] + p[1] * p[1]).sqrt();
    if n > 1.0 {
        [p[0] / n, p[1] / n]
    } else {
        p
    }
}

/// Entries for `k` in `2..=k_max`, loaded from the frozen data file and
/// validated for feasibility and the area bound `radius <= sqrt(k)`.
pub fn covering_table(k_max: u32) -> Result<Vec<CoveringSolution>> {
    if !(2..=MAX_TABLE_K).contains(&k_max) {
        return Err(Error::param("k_max", k_max, "2 <= k_max <= 12"));
    }
    let all = load_table(COVERING_TABLE_JSON)?;
    Ok(all.into_iter().filter(|e| e.k <= k_max).collect())
}

/// Parses and validates a covering table document.
pub fn load_table(text: &str) -> Result<Vec<CoveringSolution>> {
    let file: CoveringTableFile = serde_json::from_str(text).map_err(|e| Error::CoveringTable(e.to_string()))?;
    if file.version != 1 {
        return Err(Error::CoveringTable(format!("unsupported version {}", file.version)));
    }
    let mut entries = file.entries;
    entries.sort_by_key(|e| e.k);
    for (i, e) in entries.iter().enumerate() {
        if e.k != i as u32 + 2 {
            return Err(Error::CoveringTable(format!("missing entry for k = {}", i + 2)));
        }
        if !e.is_feasible(1e-9) {
            return Err(Error::CoveringTable(format!(
                "k = {}: radius {} is not covered (farthest point at {})",
                e.k,
                e.radius,
                e.max_uncovered_distance()
            )));
        }
        if e.radius > (e.k as f64).sqrt() {
            return Err(Error::CoveringTable(format!("k = {}: radius exceeds sqrt(k)", e.k)));
        }
    }
    Ok(entries)
}

/// Serializes entries in the data-file layout.
pub fn table_to_json(entries: &[CoveringSolution]) -> String {
    let file = CoveringTableFile { version: 1, entries: entries.to_vec() };
    serde_json::to_string_pretty(&file).expect("covering table serializes") + "\n"
}

/// SHA-256 of the shipped covering table, hex encoded.
pub fn covering_table_hash() -> String {
    let digest = Sha256::digest(COVERING_TABLE_JSON.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
