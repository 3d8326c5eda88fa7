//! Voronoi partition of the deployment area, computed per site by clipping
//! the rectangle against the perpendicular bisectors of all other sites.
//! Cell boundaries include the area walls, so boundary distances are always
//! finite.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::geometry::Deployment;

/// One device's cell: a convex polygon clipped to the area, plus the
/// minimum / mean / maximum distance from the site to the cell boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiCell {
    pub device_id: usize,
    /// Counter-clockwise vertex ring (closed implicitly).
    pub vertices: Vec<(f64, f64)>,
    pub omega_min: f64,
    pub omega_mean: f64,
    pub omega_max: f64,
}

impl VoronoiCell {
    /// Polygon area by the shoelace formula.
    pub fn area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        // Convex ring: the point must sit on the inner side of every edge.
        let n = self.vertices.len();
        for i in 0..n {
            let (x1, y1) = self.vertices[i];
            let (x2, y2) = self.vertices[(i + 1) % n];
            let cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1);
            if cross < -1e-9 {
                return false;
            }
        }
        true
    }
}

fn shoelace(ring: &[(f64, f64)]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let (x1, y1) = ring[i];
        let (x2, y2) = ring[(i + 1) % n];
        acc += x1 * y2 - x2 * y1;
    }
    acc.abs() * 0.5
}

/// Number of boundary samples used for the mean site-to-boundary distance.
const BOUNDARY_SAMPLES: usize = 256;

/// Partition the area into per-device cells.
///
/// Coincident device positions are perturbed by `1e-9 * min(L, H)` toward
/// the area center before clipping (degenerate diagrams otherwise); a
/// deployment whose devices all share one position is rejected.
pub fn voronoi_partition(dep: &Deployment) -> Result<Vec<VoronoiCell>> {
    let area = dep.area();
    let n = dep.len();
    let mut sites: Vec<(f64, f64)> = dep.devices().iter().map(|d| (d.x, d.y)).collect();

    if n >= 2 {
        let all_same = sites.iter().all(|&(x, y)| {
            (x - sites[0].0).abs() < f64::EPSILON && (y - sites[0].1).abs() < f64::EPSILON
        });
        if all_same {
            return Err(ModelError::DegenerateGeometry(
                "all devices share one position; the diagram is undefined".into(),
            ));
        }
        perturb_duplicates(&mut sites, area.length, area.height);
    }

    let rect = vec![
        (0.0, 0.0),
        (area.length, 0.0),
        (area.length, area.height),
        (0.0, area.height),
    ];

    let mut cells = Vec::with_capacity(n);
    for j in 0..n {
        let mut poly = rect.clone();
        for k in 0..n {
            if k == j {
                continue;
            }
            poly = clip_to_closer_side(&poly, sites[j], sites[k]);
            if poly.len() < 3 {
                return Err(ModelError::DegenerateGeometry(format!(
                    "cell of device {j} collapsed during clipping"
                )));
            }
        }
        dedup_ring(&mut poly, 1e-12 * area.length.max(area.height));
        let (omega_min, omega_mean, omega_max) = boundary_distances(&poly, sites[j]);
        cells.push(VoronoiCell {
            device_id: j,
            vertices: poly,
            omega_min,
            omega_mean,
            omega_max,
        });
    }
    Ok(cells)
}

fn perturb_duplicates(sites: &mut [(f64, f64)], length: f64, height: f64) {
    let eps = 1e-9 * length.min(height);
    let cx = length * 0.5;
    let cy = height * 0.5;
    for i in 0..sites.len() {
        let mut bump = 0usize;
        for k in 0..i {
            if (sites[i].0 - sites[k].0).abs() < eps && (sites[i].1 - sites[k].1).abs() < eps {
                bump += 1;
            }
        }
        if bump > 0 {
            // Shift later duplicates toward the center by multiples of eps;
            // the direction keeps the perturbed site inside the rectangle.
            let (x, y) = sites[i];
            let (mut dx, mut dy) = (cx - x, cy - y);
            let norm = dx.hypot(dy);
            if norm < eps {
                dx = 1.0;
                dy = 0.5;
            } else {
                dx /= norm;
                dy /= norm;
            }
            sites[i].0 = (x + dx * eps * bump as f64).clamp(0.0, length);
            sites[i].1 = (y + dy * eps * bump as f64).clamp(0.0, height);
        }
    }
}

/// Sutherland-Hodgman clip of `poly` against the half-plane of points at
/// least as close to `keep` as to `other`.
fn clip_to_closer_side(
    poly: &[(f64, f64)],
    keep: (f64, f64),
    other: (f64, f64),
) -> Vec<(f64, f64)> {
    let mx = (keep.0 + other.0) * 0.5;
    let my = (keep.1 + other.1) * 0.5;
    let nx = keep.0 - other.0;
    let ny = keep.1 - other.1;
    let side = |p: (f64, f64)| (p.0 - mx) * nx + (p.1 - my) * ny;

    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let cur = poly[i];
        let nxt = poly[(i + 1) % n];
        let sc = side(cur);
        let sn = side(nxt);
        if sc >= 0.0 {
            out.push(cur);
        }
        if (sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0) {
            let t = sc / (sc - sn);
            out.push((cur.0 + t * (nxt.0 - cur.0), cur.1 + t * (nxt.1 - cur.1)));
        }
    }
    out
}

fn dedup_ring(ring: &mut Vec<(f64, f64)>, tol: f64) {
    if ring.len() < 2 {
        return;
    }
    let mut cleaned: Vec<(f64, f64)> = Vec::with_capacity(ring.len());
    for &p in ring.iter() {
        if let Some(&last) = cleaned.last() {
            if (p.0 - last.0).abs() <= tol && (p.1 - last.1).abs() <= tol {
                continue;
            }
        }
        cleaned.push(p);
    }
    if cleaned.len() >= 2 {
        let first = cleaned[0];
        let last = *cleaned.last().unwrap();
        if (first.0 - last.0).abs() <= tol && (first.1 - last.1).abs() <= tol {
            cleaned.pop();
        }
    }
    *ring = cleaned;
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let abx = b.0 - a.0;
    let aby = b.1 - a.1;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return (p.0 - a.0).hypot(p.1 - a.1);
    }
    let t = (((p.0 - a.0) * abx + (p.1 - a.1) * aby) / len2).clamp(0.0, 1.0);
    let qx = a.0 + t * abx;
    let qy = a.1 + t * aby;
    (p.0 - qx).hypot(p.1 - qy)
}

/// (min, mean, max) distance from `site` to the polygon boundary. The mean
/// is taken over uniform arc-length samples of the boundary.
fn boundary_distances(ring: &[(f64, f64)], site: (f64, f64)) -> (f64, f64, f64) {
    let n = ring.len();
    let mut omega_min = f64::INFINITY;
    let mut omega_max: f64 = 0.0;
    let mut perimeter = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        omega_min = omega_min.min(point_segment_distance(site, a, b));
        omega_max = omega_max.max((site.0 - a.0).hypot(site.1 - a.1));
        perimeter += (b.0 - a.0).hypot(b.1 - a.1);
    }

    let step = perimeter / BOUNDARY_SAMPLES as f64;
    let mut acc = 0.0;
    let mut sampled = 0usize;
    let mut next_at = step * 0.5;
    let mut walked = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let seg = (b.0 - a.0).hypot(b.1 - a.1);
        while sampled < BOUNDARY_SAMPLES && next_at <= walked + seg {
            let t = (next_at - walked) / seg;
            let qx = a.0 + t * (b.0 - a.0);
            let qy = a.1 + t * (b.1 - a.1);
            acc += (site.0 - qx).hypot(site.1 - qy);
            sampled += 1;
            next_at += step;
        }
        walked += seg;
    }
    let omega_mean = if sampled > 0 { acc / sampled as f64 } else { omega_min };
    (omega_min, omega_mean, omega_max)
}
