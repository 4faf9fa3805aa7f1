use serde::Serialize;
use thiserror::Error;

use crate::geometry::{TorusPoint, Vec2};
use crate::map_core::{AlmostAnosovMap, MapError};

use super::{stable_direction, unstable_direction, DEFAULT_COCYCLE_STEPS};

/// Number of iterates between the seed segment and the base point.
pub const MANIFOLD_STEPS: usize = 8;
pub const DEFAULT_MANIFOLD_ARC: f64 = 0.05;

const MAX_DOUBLINGS: usize = 16;
const MAX_REFINE_PASSES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Error)]
pub enum ManifoldError {
    #[error("manifold did not reach arc length {arc} after {doublings} seed doublings")]
    TrimFailed { arc: f64, doublings: usize },
    #[error("arc {0} outside (0, 1/4)")]
    BadArc(f64),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// A local stable or unstable manifold through `base`, stored as a polyline.
///
/// Every vertex is an exact image of a point on a short straight seed
/// segment through the anchor `f^{±m}(base)`, so points can be re-evaluated
/// at any seed parameter.
#[derive(Debug, Clone)]
pub struct ManifoldCurve {
    base: TorusPoint,
    side: Side,
    anchor: TorusPoint,
    seed_dir: Vec2,
    steps: usize,
    params: Vec<f64>,
    offsets: Vec<Vec2>,
    arclen: Vec<f64>,
}

impl ManifoldCurve {
    pub fn base(&self) -> TorusPoint {
        self.base
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Vertex displacements from the base point (unwrapped).
    pub fn offsets(&self) -> &[Vec2] {
        &self.offsets
    }

    /// Seed parameters of the vertices.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Signed arc length of each vertex from the base point.
    pub fn arc_lengths(&self) -> &[f64] {
        &self.arclen
    }

    pub fn points(&self) -> Vec<TorusPoint> {
        self.offsets.iter().map(|v| self.base.translate(*v)).collect()
    }

    /// Exact manifold point for seed parameter `s`.
    pub fn point_at_param(&self, map: &AlmostAnosovMap, s: f64) -> Result<TorusPoint, MapError> {
        let q = self.anchor.translate(self.seed_dir * s);
        match self.side {
            Side::Stable => map.iterate_inverse(&q, self.steps),
            Side::Unstable => Ok(map.iterate(&q, self.steps)),
        }
    }

    /// Seed parameter at signed arc length `s` (linear in each segment).
    pub fn param_at_arclength(&self, s: f64) -> f64 {
        let a = &self.arclen;
        let k = match a.iter().position(|&v| v >= s) {
            Some(0) => 1,
            Some(k) => k,
            None => a.len() - 1,
        };
        let (s0, s1) = (a[k - 1], a[k]);
        let w = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
        self.params[k - 1] + w * (self.params[k] - self.params[k - 1])
    }

    /// Manifold point at (approximately) signed arc length `s` from the base.
    pub fn point_at_arclength(&self, map: &AlmostAnosovMap, s: f64) -> Result<TorusPoint, MapError> {
        self.point_at_param(map, self.param_at_arclength(s))
    }

    /// Unit secant through the vertices adjacent to the base point.
    pub fn tangent_at_base(&self) -> Vec2 {
        let k = self
            .arclen
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let lo = k.saturating_sub(1);
        let hi = (k + 1).min(self.offsets.len() - 1);
        (self.offsets[hi] - self.offsets[lo]).normalized()
    }
}

struct Trace {
    params: Vec<f64>,
    offsets: Vec<Vec2>,
}

fn cumulative(offsets: &[Vec2], center: usize) -> Vec<f64> {
    let mut out = vec![0.0; offsets.len()];
    for k in center + 1..offsets.len() {
        out[k] = out[k - 1] + (offsets[k] - offsets[k - 1]).norm();
    }
    for k in (0..center).rev() {
        out[k] = out[k + 1] - (offsets[k + 1] - offsets[k]).norm();
    }
    out
}

/// Local manifold of half-length `arc` on each side of `p`, resampled to
/// `n_pts` vertices equally spaced in arc length.
///
/// A segment of length `2L` along `E^s(f^8 p)` (resp. `E^u(f^{-8} p)`) is
/// pulled back by `f^{-8}` (resp. pushed forward by `f^8`), refined where
/// vertices spread apart, and trimmed. `L` doubles until the image reaches
/// `arc` on both sides.
pub fn local_manifold(
    map: &AlmostAnosovMap,
    p: &TorusPoint,
    side: Side,
    arc: f64,
    n_pts: usize,
) -> Result<ManifoldCurve, ManifoldError> {
    if !(arc > 0.0 && arc < 0.25) {
        return Err(ManifoldError::BadArc(arc));
    }
    let n_pts = n_pts.max(3);
    let steps = MANIFOLD_STEPS;
    let (anchor, seed_dir) = match side {
        Side::Stable => {
            let q = map.iterate(p, steps);
            (q, stable_direction(map, &q, DEFAULT_COCYCLE_STEPS).direction)
        }
        Side::Unstable => {
            let q = map.iterate_inverse(p, steps)?;
            (q, unstable_direction(map, &q, DEFAULT_COCYCLE_STEPS).direction)
        }
    };
    let mut curve = ManifoldCurve {
        base: *p,
        side,
        anchor,
        seed_dir,
        steps,
        params: vec![],
        offsets: vec![],
        arclen: vec![],
    };
    let eval = |c: &ManifoldCurve, s: f64| -> Result<Vec2, MapError> {
        if s == 0.0 {
            return Ok(Vec2::ZERO);
        }
        Ok(p.displacement_to(&c.point_at_param(map, s)?))
    };
    let spacing = arc / n_pts as f64;
    let mut half = 1.5 * arc / map.eigen().lambda_u.abs().powi(steps as i32);
    for doubling in 0..=MAX_DOUBLINGS {
        let m = 2 * n_pts;
        let mut trace = Trace { params: Vec::with_capacity(m + 1), offsets: Vec::with_capacity(m + 1) };
        for k in 0..=m {
            let s = half * (2.0 * k as f64 / m as f64 - 1.0);
            let s = if k == n_pts { 0.0 } else { s };
            trace.params.push(s);
            trace.offsets.push(eval(&curve, s)?);
        }
        for _ in 0..MAX_REFINE_PASSES {
            let mut inserted = false;
            let mut params = Vec::with_capacity(trace.params.len() * 2);
            let mut offsets = Vec::with_capacity(trace.params.len() * 2);
            for k in 0..trace.params.len() {
                if k > 0 && (trace.offsets[k] - trace.offsets[k - 1]).norm() > spacing {
                    let s = 0.5 * (trace.params[k - 1] + trace.params[k]);
                    params.push(s);
                    offsets.push(eval(&curve, s)?);
                    inserted = true;
                }
                params.push(trace.params[k]);
                offsets.push(trace.offsets[k]);
            }
            trace = Trace { params, offsets };
            if !inserted {
                break;
            }
        }
        let center = trace.params.iter().position(|&s| s == 0.0).expect("zero parameter kept");
        let arclen = cumulative(&trace.offsets, center);
        let reach = arclen[0].abs().min(*arclen.last().unwrap());
        if reach >= arc {
            curve.params = trace.params;
            curve.offsets = trace.offsets;
            curve.arclen = arclen;
            return resample(map, curve, arc, n_pts);
        }
        if doubling == MAX_DOUBLINGS {
            break;
        }
        half *= 2.0;
    }
    Err(ManifoldError::TrimFailed { arc, doublings: MAX_DOUBLINGS })
}

fn resample(
    map: &AlmostAnosovMap,
    fine: ManifoldCurve,
    arc: f64,
    n_pts: usize,
) -> Result<ManifoldCurve, ManifoldError> {
    let mut params = Vec::with_capacity(n_pts);
    for k in 0..n_pts {
        let s = -arc + 2.0 * arc * k as f64 / (n_pts - 1) as f64;
        // keep the base vertex exact when it falls on the grid
        let s = if s.abs() < 1e-15 * arc { 0.0 } else { s };
        params.push(if s == 0.0 { 0.0 } else { fine.param_at_arclength(s) });
    }
    let mut offsets = Vec::with_capacity(n_pts);
    for &s in &params {
        offsets.push(if s == 0.0 { Vec2::ZERO } else { fine.base.displacement_to(&fine.point_at_param(map, s)?) });
    }
    // arc length measured on the coarse polyline from the vertex nearest the base
    let center = params
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(k, _)| k)
        .unwrap();
    let mut arclen = cumulative(&offsets, center);
    let shift = if params[center] == 0.0 { 0.0 } else { fine.arclen_at_param(params[center]) };
    for a in &mut arclen {
        *a += shift;
    }
    Ok(ManifoldCurve { params, offsets, arclen, ..fine })
}

impl ManifoldCurve {
    fn arclen_at_param(&self, s: f64) -> f64 {
        let p = &self.params;
        let k = match p.iter().position(|&v| v >= s) {
            Some(0) => 1,
            Some(k) => k,
            None => p.len() - 1,
        };
        let w = if p[k] > p[k - 1] { (s - p[k - 1]) / (p[k] - p[k - 1]) } else { 0.0 };
        self.arclen[k - 1] + w * (self.arclen[k] - self.arclen[k - 1])
    }
}
