//! Anosov approximants `H_eps` of the almost Anosov map.
//!
//! Inside `B_r0` the map has differential
//! `[[1 + 3a x^2 + b y^2, 2b x y], [-2c x y, 1 - c x^2 - 3d y^2]]` in chart
//! coordinates. Lowering `3a` by `alpha` and `3d` by `beta` keeps it
//! hyperbolic up to some margins `(pi, rho)`; their radial infima
//! `alpha(s)`, `beta(s)` define
//!
//! ```text
//! g_eps(t) = 1/4 ∫_t^{eps^2} alpha(sqrt u) du,   h_eps likewise with beta,
//! H_eps(x, y) = (x (1 + g_eps(r^2) + a x^2 + b y^2), y (1 - h_eps(r^2) - c x^2 - d y^2)),
//! ```
//!
//! which is hyperbolic everywhere (including the origin) and converges to `f`
//! in `C^0` as `eps -> 0`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Mat2, TorusPoint, Vec2};
use crate::map_core::{hyperbolicity_certificate, AlmostAnosovMap, HyperbolicityReport};

/// Factor applied to tabulated margins.
pub const MARGIN_SAFETY: f64 = 0.9;
/// Quadrature nodes for `g_eps`, `h_eps`.
pub const PROFILE_NODES: usize = 2049;

const MARGIN_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Error)]
pub enum HomotopyError {
    #[error("epsilon {epsilon} outside (0, r0 = {r0}]")]
    EpsilonOutOfRange { epsilon: f64, r0: f64 },
    #[error("margin grid needs at least 8 radial and angular nodes")]
    GridTooSmall,
}

/// The perturbed inner differential with `3a -> 3a - alpha`, `3d -> 3d - beta`.
pub fn bad_differential(coef: [f64; 4], x: f64, y: f64, alpha: f64, beta: f64) -> Mat2 {
    let [a, b, c, d] = coef;
    Mat2::new(
        1.0 + (3.0 * a - alpha) * x * x + b * y * y,
        2.0 * b * x * y,
        -2.0 * c * x * y,
        1.0 - c * x * x - (3.0 * d - beta) * y * y,
    )
}

/// Hyperbolicity of [`bad_differential`] via the sign of its characteristic
/// polynomial at 1, evaluated on the unit circle (the condition
/// `Phi Psi > 4 b c x^2 y^2` is homogeneous in `(x, y)`).
fn bad_is_hyperbolic(coef: [f64; 4], x: f64, y: f64, alpha: f64, beta: f64) -> bool {
    let [a, b, c, d] = coef;
    let r = x.hypot(y);
    let (x, y) = (x / r, y / r);
    let phi = (3.0 * a - alpha) * x * x + b * y * y;
    let psi = c * x * x + (3.0 * d - beta) * y * y;
    phi > 0.0 && psi > 0.0 && phi * psi > 4.0 * b * c * x * x * y * y
}

/// Joint margins `(alpha*, beta*) = (3a s*, 3d s*)` for chart point `(x, y)`,
/// with `s*` the largest `s` in `[0, 1]` keeping the perturbed matrix
/// hyperbolic. Hyperbolicity is monotone in each of `alpha`, `beta`, so the
/// whole rectangle `[0, alpha*] x [0, beta*]` is admissible.
pub fn margin_at(coef: [f64; 4], x: f64, y: f64) -> (f64, f64) {
    if x == 0.0 && y == 0.0 {
        return (0.0, 0.0);
    }
    let [a, _, _, d] = coef;
    let ok = |s: f64| bad_is_hyperbolic(coef, x, y, 3.0 * a * s, 3.0 * d * s);
    if !ok(0.0) {
        return (0.0, 0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if ok(hi) {
        return (3.0 * a, 3.0 * d);
    }
    while hi - lo > MARGIN_REL_TOL * lo.max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    (3.0 * a * lo, 3.0 * d * lo)
}

/// `(pi(p), rho(p))` for `0 < d(p, 0) <= r0`; `(0, 0)` at the origin.
pub fn hyperbolicity_margin(map: &AlmostAnosovMap, p: &TorusPoint) -> (f64, f64) {
    let v = map.to_chart(p.lift());
    let s = map.spec();
    margin_at([s.a, s.b, s.c, s.d], v.x, v.y)
}

/// Margins on a polar grid over `B_r0 \ {0}` and their radial infima.
///
/// Stored margins are `0.9 * raw * (s / r0)`: the raw margins only depend on
/// the angle, and the radial taper makes them continuous with value 0 at
/// the origin.
#[derive(Debug, Clone, Serialize)]
pub struct MarginField {
    pub r0: f64,
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    /// `pi[i][j]` at radius `radii[i]`, angle `angles[j]`.
    pub pi: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl MarginField {
    fn interp(&self, table: &[f64], s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let h = self.r0 / self.radii.len() as f64;
        let u = s / h;
        if u >= self.radii.len() as f64 {
            return *table.last().unwrap();
        }
        let k = u.floor() as usize;
        let w = u - k as f64;
        let left = if k == 0 { 0.0 } else { table[k - 1] };
        left + w * (table[k] - left)
    }

    /// `alpha(s)`, linear between radial nodes, `alpha(0) = 0`.
    pub fn alpha_at(&self, s: f64) -> f64 {
        self.interp(&self.alpha, s)
    }

    pub fn beta_at(&self, s: f64) -> f64 {
        self.interp(&self.beta, s)
    }
}

/// Tabulates margins at radii `r0 (i + 1) / radial_n` and angles `2 pi j / angular_n`.
pub fn build_margin_field(map: &AlmostAnosovMap, radial_n: usize, angular_n: usize) -> Result<MarginField, HomotopyError> {
    if radial_n < 8 || angular_n < 8 {
        return Err(HomotopyError::GridTooSmall);
    }
    let r0 = map.spec().r0;
    let radii: Vec<f64> = (0..radial_n).map(|i| r0 * (i + 1) as f64 / radial_n as f64).collect();
    let angles: Vec<f64> = (0..angular_n)
        .map(|j| std::f64::consts::TAU * (j as f64 / angular_n as f64))
        .collect();
    let s = map.spec();
    let coef = [s.a, s.b, s.c, s.d];
    let rows: Vec<(Vec<f64>, Vec<f64>)> = radii
        .par_iter()
        .map(|&rad| {
            let taper = MARGIN_SAFETY * rad / r0;
            angles
                .iter()
                .map(|&th| {
                    let (pi, rho) = margin_at(coef, rad * th.cos(), rad * th.sin());
                    (taper * pi, taper * rho)
                })
                .unzip()
        })
        .collect();
    let (pi, rho): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    let min = |v: &Vec<f64>| v.iter().copied().fold(f64::INFINITY, f64::min);
    let alpha = pi.iter().map(min).collect();
    let beta = rho.iter().map(min).collect();
    Ok(MarginField { r0, radii, angles, pi, rho, alpha, beta })
}

/// `H_eps` together with its tabulated profiles `g_eps`, `h_eps`.
#[derive(Debug, Clone)]
pub struct HomotopyMember {
    pub epsilon: f64,
    map: AlmostAnosovMap,
    margin: MarginField,
    step: f64,
    g: Vec<f64>,
    h: Vec<f64>,
}

/// Builds `g_eps`, `h_eps` by the composite trapezoid rule on
/// [`PROFILE_NODES`] equally spaced nodes of `[0, eps^2]`.
pub fn build_homotopy_member(
    map: &AlmostAnosovMap,
    margin: &MarginField,
    epsilon: f64,
) -> Result<HomotopyMember, HomotopyError> {
    let r0 = map.spec().r0;
    if !(epsilon > 0.0 && epsilon <= r0) {
        return Err(HomotopyError::EpsilonOutOfRange { epsilon, r0 });
    }
    let n = PROFILE_NODES;
    let step = epsilon * epsilon / (n - 1) as f64;
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let a = |k: usize| margin.alpha_at((k as f64 * step).sqrt());
    let b = |k: usize| margin.beta_at((k as f64 * step).sqrt());
    for k in (0..n - 1).rev() {
        g[k] = g[k + 1] + 0.125 * step * (a(k) + a(k + 1));
        h[k] = h[k + 1] + 0.125 * step * (b(k) + b(k + 1));
    }
    Ok(HomotopyMember {
        epsilon,
        map: map.clone(),
        margin: margin.clone(),
        step,
        g,
        h,
    })
}

impl HomotopyMember {
    fn table(&self, table: &[f64], t: f64) -> f64 {
        if t >= self.epsilon * self.epsilon {
            return 0.0;
        }
        let u = (t.max(0.0)) / self.step;
        let k = (u.floor() as usize).min(table.len() - 2);
        let w = u - k as f64;
        table[k] + w * (table[k + 1] - table[k])
    }

    pub fn g(&self, t: f64) -> f64 {
        self.table(&self.g, t)
    }

    pub fn h(&self, t: f64) -> f64 {
        self.table(&self.h, t)
    }

    /// `g_eps'(t) = -alpha(sqrt t) / 4` for `t < eps^2`, else 0.
    pub fn g_prime(&self, t: f64) -> f64 {
        if t >= self.epsilon * self.epsilon {
            0.0
        } else {
            -0.25 * self.margin.alpha_at(t.max(0.0).sqrt())
        }
    }

    pub fn h_prime(&self, t: f64) -> f64 {
        if t >= self.epsilon * self.epsilon {
            0.0
        } else {
            -0.25 * self.margin.beta_at(t.max(0.0).sqrt())
        }
    }

    pub fn map(&self) -> &AlmostAnosovMap {
        &self.map
    }

    pub fn margin(&self) -> &MarginField {
        &self.margin
    }

    /// Chart coordinates of `p` when `p` is inside `B_eps` (chart radius).
    fn local(&self, p: &TorusPoint) -> Option<Vec2> {
        let v = self.map.to_chart(p.lift());
        if v.dot(v) < self.epsilon * self.epsilon {
            Some(v)
        } else {
            None
        }
    }

    pub fn apply(&self, p: &TorusPoint) -> TorusPoint {
        let base = self.map.apply(p);
        match self.local(p) {
            Some(v) => {
                let t = v.dot(v);
                let shift = Vec2::new(v.x * self.g(t), -v.y * self.h(t));
                base.translate(self.map.from_chart(shift))
            }
            None => base,
        }
    }

    pub fn differential(&self, p: &TorusPoint) -> Mat2 {
        let base = self.map.differential(p);
        match self.local(p) {
            Some(v) => {
                let t = v.dot(v);
                let (g, h, gp, hp) = (self.g(t), self.h(t), self.g_prime(t), self.h_prime(t));
                let (x, y) = (v.x, v.y);
                let extra = Mat2::new(
                    g + 2.0 * x * x * gp,
                    2.0 * x * y * gp,
                    -2.0 * x * y * hp,
                    -h - 2.0 * y * y * hp,
                );
                let c = self.map.chart();
                let c_inv = c.inverse().expect("chart is invertible");
                base + c * extra * c_inv
            }
            None => base,
        }
    }
}

pub fn apply_homotopy(member: &HomotopyMember, p: &TorusPoint) -> TorusPoint {
    member.apply(p)
}

pub fn differential_homotopy(member: &HomotopyMember, p: &TorusPoint) -> Mat2 {
    member.differential(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct HomotopyVerification {
    pub epsilon: f64,
    pub checked: usize,
    pub all_hyperbolic: bool,
    pub first_failure: Option<(TorusPoint, HyperbolicityReport)>,
    /// Sampled `max_p d(H_eps(p), f(p))`.
    pub c0_distance: f64,
}

/// Grid points used by [`verify_homotopy`]: `grid_n^2` points on the torus,
/// on `[-r1, r1]^2` and on `[-r0, r0]^2`. They do not depend on `eps`.
pub fn verification_grid(map: &AlmostAnosovMap, grid_n: usize) -> Vec<TorusPoint> {
    let mut pts = Vec::with_capacity(3 * grid_n * grid_n);
    let n = grid_n as f64;
    for j in 0..grid_n {
        for i in 0..grid_n {
            pts.push(TorusPoint::new(i as f64 / n, j as f64 / n));
        }
    }
    for half in [map.spec().r1, map.spec().r0] {
        for j in 0..grid_n {
            for i in 0..grid_n {
                let x = -half + 2.0 * half * i as f64 / (n - 1.0);
                let y = -half + 2.0 * half * j as f64 / (n - 1.0);
                pts.push(TorusPoint::new(x, y));
            }
        }
    }
    pts
}

/// Checks every grid differential of `H_eps` and measures the sampled `C^0` distance to `f`.
pub fn verify_homotopy(member: &HomotopyMember, grid_n: usize) -> HomotopyVerification {
    assert!(grid_n >= 2);
    let pts = verification_grid(&member.map, grid_n);
    let results: Vec<(bool, HyperbolicityReport, f64)> = pts
        .par_iter()
        .map(|p| {
            let rep = hyperbolicity_certificate(&member.differential(p));
            let d = member.apply(p).distance(&member.map.apply(p));
            (rep.hyperbolic, rep, d)
        })
        .collect();
    let mut out = HomotopyVerification {
        epsilon: member.epsilon,
        checked: pts.len(),
        all_hyperbolic: true,
        first_failure: None,
        c0_distance: 0.0,
    };
    for (p, (ok, rep, d)) in pts.iter().zip(results) {
        out.c0_distance = out.c0_distance.max(d);
        if !ok {
            out.all_hyperbolic = false;
            if out.first_failure.is_none() {
                out.first_failure = Some((*p, rep));
            }
        }
    }
    out
}

/// One row of the homotopy CSV.
#[derive(Debug, Clone, Serialize)]
pub struct HomotopyRow {
    pub epsilon: f64,
    pub c0_distance: f64,
    pub all_hyperbolic: bool,
}

/// Verifies `H_eps` for each `eps` in `fractions * r0`.
pub fn homotopy_sweep(
    map: &AlmostAnosovMap,
    fractions: &[f64],
    grid_n: usize,
    radial_n: usize,
    angular_n: usize,
) -> Result<Vec<HomotopyVerification>, HomotopyError> {
    let field = build_margin_field(map, radial_n, angular_n)?;
    fractions
        .iter()
        .map(|&f| {
            let m = build_homotopy_member(map, &field, f * map.spec().r0)?;
            Ok(verify_homotopy(&m, grid_n))
        })
        .collect()
}

/// `d(p, 0)` below which `H_eps` differs from `f`.
pub fn support_radius(member: &HomotopyMember) -> f64 {
    member.epsilon
}
