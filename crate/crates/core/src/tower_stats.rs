//! First-return statistics over a rectangle away from the singularity:
//! return-time tails, the arithmetic condition, contraction along stable
//! segments and bounded distortion of the induced map.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cone_dynamics::{local_manifold, unstable_direction, Side, DEFAULT_COCYCLE_STEPS};
use crate::geometry::{distance_to_singularity, Mat2, TorusPoint, Vec2};
use crate::map_core::AlmostAnosovMap;
use crate::seed::task_rng;

/// Default return-time cap.
pub const DEFAULT_N_MAX: usize = 10_000;
/// Stand-in for exactly zero suprema in the log-linear fit.
pub const DISTORTION_FLOOR: f64 = 1e-300;

const BLOCK: usize = 1024;
const MIN_PAIR_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum TowerError {
    #[error("rectangle meets B_r1(0) (clearance {clearance:.4}, r1 = {r1})")]
    TouchesSingularity { clearance: f64, r1: f64 },
    #[error("rectangle diameter {0:.4} is not below 0.2")]
    TooLarge(f64),
    #[error("only {found} populated bins, need {needed}")]
    InsufficientBins { found: usize, needed: usize },
    #[error("empty histogram")]
    Empty,
}

/// A rectangle with sides along the eigendirections of `A`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Rectangle {
    pub center: TorusPoint,
    pub u_half: f64,
    pub s_half: f64,
    #[serde(skip)]
    eu: Vec2,
    #[serde(skip)]
    es: Vec2,
}

impl Rectangle {
    pub fn new(map: &AlmostAnosovMap, center: TorusPoint, u_half: f64, s_half: f64) -> Result<Self, TowerError> {
        let e = map.eigen();
        let rect = Rectangle { center, u_half, s_half, eu: e.unstable, es: e.stable };
        let diameter = rect.diameter();
        if diameter >= 0.2 {
            return Err(TowerError::TooLarge(diameter));
        }
        let clearance = rect.corners().iter().fold(distance_to_singularity(&center), |m, c| m.min(distance_to_singularity(c)));
        let clearance = clearance.min(distance_to_singularity(&center) - 0.5 * diameter);
        let r1 = map.r1();
        if clearance <= r1 {
            return Err(TowerError::TouchesSingularity { clearance, r1 });
        }
        Ok(rect)
    }

    /// Centered at `(0.5, 0.5)` with half-lengths 0.05.
    pub fn default_for(map: &AlmostAnosovMap) -> Self {
        Self::new(map, TorusPoint::new(0.5, 0.5), 0.05, 0.05).expect("default rectangle is admissible")
    }

    fn corners(&self) -> [TorusPoint; 4] {
        let (u, s) = (self.eu * self.u_half, self.es * self.s_half);
        [u + s, u - s, -u + s, -u - s].map(|v| self.center.translate(v))
    }

    pub fn diameter(&self) -> f64 {
        let (u, s) = (self.eu * self.u_half, self.es * self.s_half);
        2.0 * (u + s).norm().max((u - s).norm())
    }

    /// Lebesgue area.
    pub fn area(&self) -> f64 {
        4.0 * self.u_half * self.s_half * self.eu.cross(self.es).abs()
    }

    /// Coordinates of `p` along the unstable and stable axes.
    pub fn local_coords(&self, p: &TorusPoint) -> Vec2 {
        Mat2::from_columns(self.eu, self.es)
            .solve(self.center.displacement_to(p))
            .expect("eigenvectors are independent")
    }

    pub fn contains(&self, p: &TorusPoint) -> bool {
        let v = self.local_coords(p);
        v.x.abs() <= self.u_half && v.y.abs() <= self.s_half
    }

    /// Strict interior; returns to the boundary do not count.
    pub fn contains_interior(&self, p: &TorusPoint) -> bool {
        let v = self.local_coords(p);
        v.x.abs() < self.u_half && v.y.abs() < self.s_half
    }

    pub fn point_at(&self, u: f64, s: f64) -> TorusPoint {
        self.center.translate(self.eu * u + self.es * s)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> TorusPoint {
        let u = self.u_half * (2.0 * rng.gen::<f64>() - 1.0);
        let s = self.s_half * (2.0 * rng.gen::<f64>() - 1.0);
        self.point_at(u, s)
    }
}

/// Least `n` in `[1, n_max]` with `f^n(x)` in the interior of `rect`, or `None` on timeout.
pub fn first_return_time(map: &AlmostAnosovMap, rect: &Rectangle, x: &TorusPoint, n_max: usize) -> Option<usize> {
    let mut p = *x;
    for n in 1..=n_max {
        p = map.apply(&p);
        if rect.contains_interior(&p) {
            return Some(n);
        }
    }
    None
}

/// First return time together with the returned point.
pub fn first_return(map: &AlmostAnosovMap, rect: &Rectangle, x: &TorusPoint, n_max: usize) -> Option<(usize, TorusPoint)> {
    let n = first_return_time(map, rect, x, n_max)?;
    Some((n, map.iterate(x, n)))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReturnTimeHistogram {
    pub counts: BTreeMap<usize, u64>,
    pub samples: u64,
    pub n_max: usize,
    pub timeouts: u64,
}

impl ReturnTimeHistogram {
    pub fn timeout_fraction(&self) -> f64 {
        self.timeouts as f64 / self.samples.max(1) as f64
    }

    /// Mean over returned samples.
    pub fn mean_return_time(&self) -> f64 {
        let returned: u64 = self.counts.values().sum();
        let total: f64 = self.counts.iter().map(|(&n, &c)| n as f64 * c as f64).sum();
        total / returned.max(1) as f64
    }

    pub fn min_return_time(&self) -> Option<usize> {
        self.counts.keys().next().copied()
    }

    /// `(n, S_n, cumulative fraction of all samples)`.
    pub fn rows(&self) -> Vec<(usize, u64, f64)> {
        let mut acc = 0u64;
        self.counts
            .iter()
            .map(|(&n, &c)| {
                acc += c;
                (n, c, acc as f64 / self.samples.max(1) as f64)
            })
            .collect()
    }

    fn merge(mut self, other: ReturnTimeHistogram) -> Self {
        for (n, c) in other.counts {
            *self.counts.entry(n).or_default() += c;
        }
        self.samples += other.samples;
        self.timeouts += other.timeouts;
        self
    }
}

/// Return times of `samples` uniform points of `rect`, drawn in blocks of
/// 1024 with one derived stream per block.
pub fn return_time_histogram(
    map: &AlmostAnosovMap,
    rect: &Rectangle,
    samples: usize,
    n_max: usize,
    seed: u64,
) -> ReturnTimeHistogram {
    let blocks = samples.div_ceil(BLOCK);
    let parts: Vec<ReturnTimeHistogram> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = task_rng(seed, "returns", b as u64);
            let len = BLOCK.min(samples - b * BLOCK);
            let mut h = ReturnTimeHistogram { n_max, ..Default::default() };
            for _ in 0..len {
                let x = rect.sample(&mut rng);
                h.samples += 1;
                match first_return_time(map, rect, &x, n_max) {
                    Some(n) => *h.counts.entry(n).or_default() += 1,
                    None => h.timeouts += 1,
                }
            }
            h
        })
        .collect();
    parts
        .into_iter()
        .fold(ReturnTimeHistogram { n_max, ..Default::default() }, ReturnTimeHistogram::merge)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailFit {
    pub h_fit: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_range: (usize, usize),
    pub bins: usize,
}

/// Least squares `(slope, intercept, r^2)`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Fits `log S_n = c + h n` over the upper half of the populated range.
pub fn fit_tail_rate(hist: &ReturnTimeHistogram) -> Result<TailFit, TowerError> {
    let (&lo, &hi) = match (hist.counts.keys().next(), hist.counts.keys().next_back()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(TowerError::Empty),
    };
    let mid = (lo + hi).div_ceil(2);
    let (xs, ys): (Vec<f64>, Vec<f64>) = hist
        .counts
        .range(mid..=hi)
        .filter(|(_, &c)| c > 0)
        .map(|(&n, &c)| (n as f64, (c as f64).ln()))
        .unzip();
    if xs.len() < 5 {
        return Err(TowerError::InsufficientBins { found: xs.len(), needed: 5 });
    }
    let (h_fit, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(TailFit { h_fit, intercept, r_squared, n_range: (mid, hi), bins: xs.len() })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// gcd of the observed return times (0 for an empty histogram).
pub fn check_arithmetic_condition(hist: &ReturnTimeHistogram) -> usize {
    hist.counts.iter().filter(|(_, &c)| c > 0).fold(0, |g, (&n, _)| gcd(g, n))
}

/// `y` at signed arc length `delta` along `W^s(x)`.
pub fn stable_partner(map: &AlmostAnosovMap, x: &TorusPoint, delta: f64) -> Option<TorusPoint> {
    manifold_partner(map, x, Side::Stable, delta)
}

pub fn unstable_partner(map: &AlmostAnosovMap, x: &TorusPoint, delta: f64) -> Option<TorusPoint> {
    manifold_partner(map, x, Side::Unstable, delta)
}

fn manifold_partner(map: &AlmostAnosovMap, x: &TorusPoint, side: Side, delta: f64) -> Option<TorusPoint> {
    let arc = delta.abs() * 1.25;
    let curve = local_manifold(map, x, side, arc, 9).ok()?;
    curve.point_at_arclength(map, delta).ok()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StablePair {
    pub x: TorusPoint,
    pub y: TorusPoint,
}

/// Pairs `(x, y)` in `rect` with `y` on `W^s(x)` at arc length `±delta`,
/// `delta` log-uniform in `[1e-4, 1e-2]`.
pub fn stable_pairs(map: &AlmostAnosovMap, rect: &Rectangle, pairs: usize, seed: u64) -> Vec<StablePair> {
    (0..pairs)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = task_rng(seed, "stable-pairs", k as u64);
            for _ in 0..16 {
                let x = rect.sample(&mut rng);
                let delta = 10f64.powf(-4.0 + 2.0 * rng.gen::<f64>());
                let delta = if rng.gen::<bool>() { delta } else { -delta };
                if let Some(y) = stable_partner(map, &x, delta) {
                    if rect.contains_interior(&y) && x.distance(&y) >= MIN_PAIR_DISTANCE {
                        return Some(StablePair { x, y });
                    }
                }
            }
            None
        })
        .collect()
}

/// Gap below which a tracked stable pair is rescaled.
pub const TRACK_MIN_GAP: f64 = 1e-6;
const RESEED_EVERY: usize = 8;

/// A point `x` and a partner on its local stable manifold, advanced together.
///
/// The partner's forward orbit picks up roundoff along `E^u` that grows like
/// `lambda^n`, so every few steps it is projected back onto `W^s` of the
/// current `x` at the current gap. Once the gap falls below
/// [`TRACK_MIN_GAP`] the partner is reset to that gap and the lost factor is
/// kept in `log_scale`; quantities that scale with the gap are multiplied back.
#[derive(Debug, Clone, Copy)]
pub struct StableTracker {
    pub x: TorusPoint,
    pub y: TorusPoint,
    pub log_scale: f64,
    since_reseed: usize,
}

impl StableTracker {
    pub fn new(pair: StablePair) -> Self {
        Self { x: pair.x, y: pair.y, log_scale: 0.0, since_reseed: 0 }
    }

    /// `d(x, y)` rescaled to the true gap.
    pub fn gap(&self) -> f64 {
        self.x.distance(&self.y) * self.log_scale.exp()
    }

    pub fn step(&mut self, map: &AlmostAnosovMap) {
        self.x = map.apply(&self.x);
        self.y = map.apply(&self.y);
        self.since_reseed += 1;
        if self.since_reseed >= RESEED_EVERY {
            self.reseed(map);
        }
    }

    fn reseed(&mut self, map: &AlmostAnosovMap) {
        self.since_reseed = 0;
        let d = self.x.distance(&self.y);
        if d == 0.0 {
            return;
        }
        let target = d.max(TRACK_MIN_GAP);
        let near = [target, -target]
            .into_iter()
            .filter_map(|s| stable_partner(map, &self.x, s))
            .min_by(|a, b| a.distance(&self.y).total_cmp(&b.distance(&self.y)));
        if let Some(y) = near {
            self.y = y;
            self.log_scale += (d / target).ln();
        }
    }
}

/// Outcome of following a tracked pair to the first return of `x`.
#[derive(Debug, Clone, Copy)]
enum PairReturn {
    Returned { tau: usize },
    Timeout,
    Split,
}

/// Advances `tr` to the first return of `x`; the partner must enter the
/// interior at the same step and not before. `before_step` sees the state
/// at `j = 0..tau-1`.
fn track_return<F: FnMut(&StableTracker)>(
    map: &AlmostAnosovMap,
    rect: &Rectangle,
    tr: &mut StableTracker,
    n_max: usize,
    mut before_step: F,
) -> PairReturn {
    for n in 1..=n_max {
        before_step(tr);
        tr.step(map);
        let (ix, iy) = (rect.contains_interior(&tr.x), rect.contains_interior(&tr.y));
        match (ix, iy) {
            (true, true) => return PairReturn::Returned { tau: n },
            (false, false) => {}
            _ => return PairReturn::Split,
        }
    }
    PairReturn::Timeout
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    /// Largest `d(Fx, Fy) / d(x, y)`.
    pub worst_a: f64,
    pub used: usize,
    /// Pairs where `x` timed out.
    pub timeouts: usize,
    /// Pairs whose return times differ.
    pub split: usize,
    /// Longest common return time among used pairs.
    pub max_tau: usize,
}

impl ContractionReport {
    pub fn pass(&self) -> bool {
        self.used > 0 && self.worst_a < 1.0
    }
}

/// Contraction of the first-return map `F` along stable pairs with a common return time.
pub fn check_contraction(map: &AlmostAnosovMap, rect: &Rectangle, pairs: &[StablePair], n_max: usize) -> ContractionReport {
    let out: Vec<(PairReturn, f64)> = pairs
        .par_iter()
        .map(|pr| {
            let mut tr = StableTracker::new(*pr);
            let r = track_return(map, rect, &mut tr, n_max, |_| {});
            (r, tr.gap() / pr.x.distance(&pr.y))
        })
        .collect();
    let mut rep = ContractionReport { worst_a: 0.0, used: 0, timeouts: 0, split: 0, max_tau: 0 };
    for (r, a) in out {
        match r {
            PairReturn::Returned { tau } => {
                rep.used += 1;
                rep.max_tau = rep.max_tau.max(tau);
                rep.worst_a = rep.worst_a.max(a);
            }
            PairReturn::Timeout => rep.timeouts += 1,
            PairReturn::Split => rep.split += 1,
        }
    }
    rep
}

/// `log J^u F(x)` over a return block of length `tau`: the sum of
/// `log |Df u_j|` with `u_0 = E^u(x)` pushed along the orbit.
pub fn log_unstable_jacobian_block(map: &AlmostAnosovMap, x: &TorusPoint, tau: usize) -> f64 {
    let mut u = unstable_direction(map, x, DEFAULT_COCYCLE_STEPS).direction;
    let mut p = *x;
    let mut sum = 0.0;
    for _ in 0..tau {
        let w = map.differential(&p).apply(u);
        let g = w.norm();
        sum += g.ln();
        u = w * (1.0 / g);
        p = map.apply(&p);
    }
    sum
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    /// `sup |log J^uF(F^n x) - log J^uF(F^n y)|` for `n = 0..`.
    pub suprema: Vec<f64>,
    /// Pairs still synchronized at each `n`.
    pub pairs_at: Vec<usize>,
    pub c: f64,
    pub kappa: f64,
    pub r_squared: f64,
    pub theta_used: f64,
    pub skipped: usize,
}

impl DistortionReport {
    pub fn pass(&self) -> bool {
        self.kappa > 0.0 && self.kappa < 1.0
    }
}

/// Distortion of `J^u F` along composed returns of stable pairs.
///
/// Both Jacobians are accumulated along the tracked pair; per-step
/// differences of a rescaled pair are multiplied by the scale factor
/// (`theta_used = 1`). Suprema are floored at [`DISTORTION_FLOOR`] before the
/// log-linear fit `sup_n ~ c kappa^n`.
pub fn check_distortion(
    map: &AlmostAnosovMap,
    rect: &Rectangle,
    pairs: &[StablePair],
    n_compositions: usize,
    n_max: usize,
) -> DistortionReport {
    let n_compositions = n_compositions.clamp(1, 8);
    let per_pair: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|pr| {
            let mut tr = StableTracker::new(*pr);
            let mut out = Vec::with_capacity(n_compositions + 1);
            for _ in 0..=n_compositions {
                let mut ux = unstable_direction(map, &tr.x, DEFAULT_COCYCLE_STEPS).direction;
                let mut uy = unstable_direction(map, &tr.y, DEFAULT_COCYCLE_STEPS).direction;
                let mut diff = 0.0;
                let r = track_return(map, rect, &mut tr, n_max, |t| {
                    let wx = map.differential(&t.x).apply(ux);
                    let wy = map.differential(&t.y).apply(uy);
                    let (gx, gy) = (wx.norm(), wy.norm());
                    diff += (gx.ln() - gy.ln()) * t.log_scale.exp();
                    ux = wx * (1.0 / gx);
                    uy = wy * (1.0 / gy);
                });
                if !matches!(r, PairReturn::Returned { .. }) {
                    break;
                }
                out.push(diff.abs());
            }
            out
        })
        .collect();
    let mut suprema = vec![0.0f64; n_compositions + 1];
    let mut pairs_at = vec![0usize; n_compositions + 1];
    let mut skipped = 0;
    for v in &per_pair {
        if v.is_empty() {
            skipped += 1;
        }
        for (n, &r) in v.iter().enumerate() {
            suprema[n] = suprema[n].max(r);
            pairs_at[n] += 1;
        }
    }
    let last = pairs_at.iter().rposition(|&c| c > 0).map_or(0, |k| k + 1);
    let xs: Vec<f64> = (0..last).map(|n| n as f64).collect();
    let ys: Vec<f64> = suprema[..last].iter().map(|s| s.max(DISTORTION_FLOOR).ln()).collect();
    let (slope, intercept, r_squared) = if xs.len() >= 2 { linear_fit(&xs, &ys) } else { (f64::NAN, f64::NAN, 0.0) };
    DistortionReport {
        suprema,
        pairs_at,
        c: intercept.exp(),
        kappa: slope.exp(),
        r_squared,
        theta_used: 1.0,
        skipped,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntermediateReport {
    pub worst_k_stable: f64,
    pub worst_k_unstable: f64,
    /// Fraction of unstable pairs whose maximum sits at `j = tau`.
    pub unstable_max_at_return: f64,
    pub stable_used: usize,
    pub unstable_used: usize,
}

impl IntermediateReport {
    pub fn worst(&self) -> f64 {
        self.worst_k_stable.max(self.worst_k_unstable)
    }
}

/// `max_j d(f^j x, f^j y) / max(d(x, y), d(Fx, Fy))` for a pair iterated
/// directly for `tau` steps, with the maximizing `j`.
pub fn intermediate_ratio(map: &AlmostAnosovMap, x: &TorusPoint, y: &TorusPoint, tau: usize) -> (f64, usize) {
    let d0 = x.distance(y);
    if d0 == 0.0 {
        return (0.0, 0);
    }
    let (mut a, mut b) = (*x, *y);
    let mut best = (d0, 0);
    for j in 1..=tau {
        a = map.apply(&a);
        b = map.apply(&b);
        let d = a.distance(&b);
        if d > best.0 {
            best = (d, j);
        }
    }
    (best.0 / d0.max(a.distance(&b)), best.1)
}

/// Intermediate-distance bound on tracked stable pairs, and on unstable
/// pairs offset by `0.01 lambda^{-tau}` for returns with `tau <= 20`.
pub fn check_intermediate_bound(
    map: &AlmostAnosovMap,
    rect: &Rectangle,
    pairs: &[StablePair],
    n_max: usize,
    seed: u64,
) -> IntermediateReport {
    let stable: Vec<f64> = pairs
        .par_iter()
        .filter_map(|pr| {
            let d0 = pr.x.distance(&pr.y);
            let mut tr = StableTracker::new(*pr);
            let mut peak = d0;
            let r = track_return(map, rect, &mut tr, n_max, |t| peak = peak.max(t.gap()));
            let end = tr.gap();
            matches!(r, PairReturn::Returned { .. }).then(|| peak.max(end) / d0.max(end))
        })
        .collect();
    let lambda = map.eigen().lambda_u.abs();
    let unstable: Vec<(f64, bool)> = (0..pairs.len())
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = task_rng(seed, "unstable-pairs", k as u64);
            let x = rect.sample(&mut rng);
            let tau = first_return_time(map, rect, &x, 20)?;
            let delta = 0.01 * lambda.powi(-(tau as i32));
            let y = unstable_partner(map, &x, delta)?;
            if first_return_time(map, rect, &y, tau)? != tau {
                return None;
            }
            let (k_ratio, j) = intermediate_ratio(map, &x, &y, tau);
            Some((k_ratio, j == tau))
        })
        .collect();
    IntermediateReport {
        worst_k_stable: stable.iter().copied().fold(0.0, f64::max),
        worst_k_unstable: unstable.iter().map(|u| u.0).fold(0.0, f64::max),
        unstable_max_at_return: unstable.iter().filter(|u| u.1).count() as f64 / unstable.len().max(1) as f64,
        stable_used: stable.len(),
        unstable_used: unstable.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::MapSpec;

    fn default_map() -> AlmostAnosovMap {
        AlmostAnosovMap::new(MapSpec::default()).unwrap()
    }

    #[test]
    fn rectangle_rules() {
        let f = default_map();
        let r = Rectangle::default_for(&f);
        assert!((r.area() - 0.01).abs() < 1e-12);
        assert!(r.contains_interior(&r.center));
        let edge = r.point_at(0.05, 0.0);
        assert!(!r.contains_interior(&edge));
        assert!(Rectangle::new(&f, TorusPoint::new(0.06, 0.0), 0.02, 0.02).is_err());
        assert!(matches!(Rectangle::new(&f, TorusPoint::new(0.5, 0.5), 0.1, 0.1), Err(TowerError::TooLarge(_))));
    }

    #[test]
    fn return_time_matches_orbit_replay() {
        let f = default_map();
        let rect = Rectangle::default_for(&f);
        let mut rng = task_rng(1, "t", 0);
        for _ in 0..1000 {
            let x = rect.sample(&mut rng);
            let n = first_return_time(&f, &rect, &x, 5000);
            let mut replay = None;
            for k in 1..=5000 {
                if rect.contains_interior(&f.iterate(&x, k)) {
                    replay = Some(k);
                    break;
                }
            }
            assert_eq!(n, replay);
        }
    }

    #[test]
    fn return_to_boundary_does_not_count() {
        let f = AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap();
        let rect = Rectangle::default_for(&f);
        let edge = rect.point_at(0.05, 0.0);
        let pre = f.apply_inverse(&edge).unwrap();
        let inside = rect.point_at(0.01, 0.01);
        let pre_inside = f.apply_inverse(&inside).unwrap();
        assert_ne!(first_return_time(&f, &rect, &pre, 1), Some(1));
        assert_eq!(first_return_time(&f, &rect, &pre_inside, 1), Some(1));
    }

    #[test]
    fn histogram_kac_and_determinism() {
        let f = AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap();
        let rect = Rectangle::default_for(&f);
        let h = return_time_histogram(&f, &rect, 20_000, 10_000, 3);
        assert_eq!(h.counts.values().sum::<u64>() + h.timeouts, h.samples);
        let kac = h.mean_return_time() * rect.area();
        assert!((kac - 1.0).abs() < 0.1, "{kac}");
        assert_eq!(h, return_time_histogram(&f, &rect, 20_000, 10_000, 3));
        let small = Rectangle::new(&f, TorusPoint::new(0.5, 0.5), 0.03, 0.03).unwrap();
        let hs = return_time_histogram(&f, &small, 20_000, 10_000, 3);
        assert!(hs.mean_return_time() > h.mean_return_time());
    }

    #[test]
    fn tail_fit_synthetic() {
        let mut h = ReturnTimeHistogram { n_max: 40, ..Default::default() };
        for n in 1..=30 {
            h.counts.insert(n, (0.5 * n as f64).exp().round() as u64);
        }
        let fit = fit_tail_rate(&h).unwrap();
        assert!((fit.h_fit - 0.5).abs() < 0.02);
        let mut c = ReturnTimeHistogram::default();
        for n in 1..=30 {
            c.counts.insert(n, 17);
        }
        assert!(fit_tail_rate(&c).unwrap().h_fit.abs() < 1e-12);
        let mut few = ReturnTimeHistogram::default();
        few.counts.insert(3, 1);
        few.counts.insert(9, 1);
        assert!(matches!(fit_tail_rate(&few), Err(TowerError::InsufficientBins { .. })));
    }

    #[test]
    fn gcd_examples() {
        let mut h = ReturnTimeHistogram::default();
        for n in [2, 4, 6] {
            h.counts.insert(n, 1);
        }
        assert_eq!(check_arithmetic_condition(&h), 2);
        let mut h = ReturnTimeHistogram::default();
        h.counts.insert(3, 4);
        h.counts.insert(5, 1);
        assert_eq!(check_arithmetic_condition(&h), 1);
    }

    #[test]
    fn linear_contraction_is_the_stable_eigenvalue() {
        let f = AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap();
        let rect = Rectangle::default_for(&f);
        let pairs = stable_pairs(&f, &rect, 20, 5);
        let lam = f.eigen().lambda_u;
        let rep = check_contraction(&f, &rect, &pairs, 10_000);
        assert!(rep.used >= 15, "{rep:?}");
        for pr in &pairs {
            let mut tr = StableTracker::new(*pr);
            let PairReturn::Returned { tau } = track_return(&f, &rect, &mut tr, 10_000, |_| {}) else { continue };
            let ratio = tr.gap() / pr.x.distance(&pr.y);
            assert!((ratio / lam.powi(-(tau as i32)) - 1.0).abs() < 1e-4, "{ratio} at tau {tau}");
        }
    }

    #[test]
    fn distortion_is_zero_for_the_linear_map_and_for_equal_points() {
        let f = AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap();
        let rect = Rectangle::default_for(&f);
        let pairs = stable_pairs(&f, &rect, 10, 2);
        let rep = check_distortion(&f, &rect, &pairs, 3, 10_000);
        assert!(rep.suprema.iter().all(|&s| s == 0.0), "{:?}", rep.suprema);
        let g = default_map();
        let x = rect.point_at(0.01, -0.02);
        let rep = check_distortion(&g, &rect, &[StablePair { x, y: x }], 3, 10_000);
        assert!(rep.suprema.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn intermediate_bound_examples() {
        let f = default_map();
        let rect = Rectangle::default_for(&f);
        let x = rect.point_at(0.0, 0.0);
        assert_eq!(intermediate_ratio(&f, &x, &x, 10), (0.0, 0));
        let pairs = stable_pairs(&f, &rect, 40, 9);
        let rep = check_intermediate_bound(&f, &rect, &pairs, 10_000, 9);
        assert!(rep.stable_used > 20);
        assert!(rep.worst_k_stable <= 1.0 + 1e-6, "{rep:?}");
        assert!(rep.unstable_used > 0);
        assert!(rep.unstable_max_at_return > 0.9, "{rep:?}");
    }
}
