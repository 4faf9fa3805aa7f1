//! The invariant splitting `E^u ⊕ E^s`, the geometric potential, Lyapunov
//! exponents, local stable/unstable manifolds and the local product bracket.

mod bracket;
mod manifold;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{TorusPoint, Vec2};
use crate::map_core::{AlmostAnosovMap, MapError};

pub use bracket::{bracket, BracketError, DEFAULT_BRACKET_DELTA};
pub use manifold::{local_manifold, ManifoldCurve, ManifoldError, Side, DEFAULT_MANIFOLD_ARC, MANIFOLD_STEPS};

/// Cocycle length used when none is given.
pub const DEFAULT_COCYCLE_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitTangent {
    pub base: TorusPoint,
    pub direction: Vec2,
}

impl UnitTangent {
    fn new(base: TorusPoint, v: Vec2, reference: Vec2) -> Self {
        let d = v.normalized();
        // orient consistently with the eigendirection of A
        let d = if d.dot(reference) < 0.0 { -d } else { d };
        Self { base, direction: d }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialValue {
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Error)]
pub enum DynamicsError {
    #[error("orbit landed on the fixed point at step {step}")]
    HitSingularity { step: usize },
    #[error(transparent)]
    Map(#[from] MapError),
}

/// `E^u(p)`: the unstable eigendirection of `A` pushed through `Df^m` along
/// the backward orbit `f^{-m}(p), ..., f^{-1}(p)`.
///
/// If an inverse step fails to converge the cocycle is shortened to the
/// orbit computed so far.
pub fn unstable_direction(map: &AlmostAnosovMap, p: &TorusPoint, m: usize) -> UnitTangent {
    let eu = map.eigen().unstable;
    let mut orbit = Vec::with_capacity(m);
    let mut q = *p;
    for _ in 0..m {
        match map.apply_inverse(&q) {
            Ok(prev) => {
                q = prev;
                orbit.push(q);
            }
            Err(_) => break,
        }
    }
    let mut v = eu;
    for q in orbit.iter().rev() {
        v = map.differential(q).apply(v).normalized();
    }
    UnitTangent::new(*p, v, eu)
}

/// `E^s(p)`: the stable eigendirection pulled back through `Df^{-m}` along the
/// forward orbit.
pub fn stable_direction(map: &AlmostAnosovMap, p: &TorusPoint, m: usize) -> UnitTangent {
    let es = map.eigen().stable;
    let mut orbit = Vec::with_capacity(m);
    let mut q = *p;
    for _ in 0..m {
        orbit.push(q);
        q = map.apply(&q);
    }
    let mut v = es;
    for q in orbit.iter().rev() {
        let Some(w) = map.differential(q).solve(v) else { break };
        v = w.normalized();
    }
    UnitTangent::new(*p, v, es)
}

/// Result of an adaptive direction computation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AdaptiveDirection {
    pub tangent: UnitTangent,
    pub steps: usize,
    /// Angle between the last two estimates.
    pub increment: f64,
}

fn adaptive<F>(start: usize, tol: f64, max_steps: usize, eval: F) -> AdaptiveDirection
where
    F: Fn(usize) -> UnitTangent,
{
    let mut m = start.max(1);
    let mut prev = eval(m);
    loop {
        let next_m = (2 * m).min(max_steps);
        if next_m == m {
            return AdaptiveDirection { tangent: prev, steps: m, increment: f64::NAN };
        }
        let next = eval(next_m);
        let increment = prev.direction.line_angle(next.direction);
        if increment < tol || next_m == max_steps {
            return AdaptiveDirection { tangent: next, steps: next_m, increment };
        }
        m = next_m;
        prev = next;
    }
}

/// Doubles `m` from `start` until successive unstable directions differ by less than `tol` radians.
pub fn unstable_direction_adaptive(
    map: &AlmostAnosovMap,
    p: &TorusPoint,
    start: usize,
    tol: f64,
    max_steps: usize,
) -> AdaptiveDirection {
    adaptive(start, tol, max_steps, |m| unstable_direction(map, p, m))
}

pub fn stable_direction_adaptive(
    map: &AlmostAnosovMap,
    p: &TorusPoint,
    start: usize,
    tol: f64,
    max_steps: usize,
) -> AdaptiveDirection {
    adaptive(start, tol, max_steps, |m| stable_direction(map, p, m))
}

/// `log |Df_p u|` with `u = E^u(p)`.
pub fn log_unstable_jacobian(map: &AlmostAnosovMap, p: &TorusPoint, m: usize) -> f64 {
    let u = unstable_direction(map, p, m).direction;
    map.differential(p).apply(u).norm().ln()
}

/// `phi_t(p) = -t log |Df_p|_{E^u(p)}|`.
pub fn geometric_potential(map: &AlmostAnosovMap, p: &TorusPoint, t: f64, m: usize) -> PotentialValue {
    PotentialValue {
        t,
        value: -t * log_unstable_jacobian(map, p, m),
    }
}

/// Unstable Lyapunov exponent along the orbit of `p0`: the average of
/// `log |Df u_k|` over `n` steps after `burn_in`, with `u_k` the propagated
/// unit vector started at the unstable eigendirection of `A`.
pub fn lyapunov_exponent(
    map: &AlmostAnosovMap,
    p0: &TorusPoint,
    n: usize,
    burn_in: usize,
) -> Result<f64, DynamicsError> {
    if *p0 == TorusPoint::ORIGIN {
        return Ok(0.0);
    }
    let mut p = *p0;
    let mut v = map.eigen().unstable;
    let mut sum = 0.0;
    for k in 0..burn_in + n {
        let w = map.differential(&p).apply(v);
        let g = w.norm();
        if k >= burn_in {
            sum += g.ln();
        }
        v = w * (1.0 / g);
        p = map.apply(&p);
        if p == TorusPoint::ORIGIN {
            return Err(DynamicsError::HitSingularity { step: k + 1 });
        }
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::MapSpec;
    use rand::{Rng, SeedableRng};

    fn default_map() -> AlmostAnosovMap {
        AlmostAnosovMap::new(MapSpec::default()).unwrap()
    }

    const LOG_GOLDEN: f64 = 0.962_423_650_119_206_9;

    #[test]
    fn linear_region_directions_are_eigendirections() {
        let f = AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap();
        let p = TorusPoint::new(0.3, 0.6);
        let u = unstable_direction(&f, &p, 40).direction;
        let s = stable_direction(&f, &p, 40).direction;
        assert!(u.line_angle(f.eigen().unstable) < 1e-14);
        assert!(s.line_angle(f.eigen().stable) < 1e-14);
    }

    #[test]
    fn origin_directions_are_eigendirections() {
        let f = default_map();
        let u = unstable_direction(&f, &TorusPoint::ORIGIN, 40).direction;
        assert!(u.line_angle(f.eigen().unstable) < 1e-15);
    }

    #[test]
    fn directions_converge_in_m_and_are_invariant() {
        let f = default_map();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = TorusPoint::new(rng.gen(), rng.gen());
            let u40 = unstable_direction(&f, &p, 40).direction;
            let u60 = unstable_direction(&f, &p, 60).direction;
            assert!(u40.line_angle(u60) <= 1e-8, "{p}");
            let fu = f.differential(&p).apply(u40);
            let ufp = unstable_direction(&f, &f.apply(&p), 40).direction;
            assert!(fu.line_angle(ufp) <= 1e-6);
            let s = stable_direction(&f, &p, 40).direction;
            let fs = f.differential(&p).apply(s);
            let sfp = stable_direction(&f, &f.apply(&p), 40).direction;
            assert!(fs.line_angle(sfp) <= 1e-6);
        }
    }

    #[test]
    fn potential_examples() {
        let f = default_map();
        let p = TorusPoint::new(0.5, 0.5);
        assert_eq!(geometric_potential(&f, &p, 0.0, 40).value, 0.0);
        assert_eq!(geometric_potential(&f, &TorusPoint::ORIGIN, 1.7, 40).value, 0.0);
        let one = geometric_potential(&f, &p, 1.0, 40).value;
        assert!((one + LOG_GOLDEN).abs() < 1e-12);
        assert_eq!(geometric_potential(&f, &p, 2.5, 40).value, 2.5 * one);
    }

    #[test]
    fn lyapunov_examples() {
        let lin = AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap();
        let l = lyapunov_exponent(&lin, &TorusPoint::new(0.1234, 0.5678), 1000, 10).unwrap();
        assert!((l - LOG_GOLDEN).abs() < 1e-10);
        let f = default_map();
        assert_eq!(lyapunov_exponent(&f, &TorusPoint::ORIGIN, 1000, 0).unwrap(), 0.0);
    }

    #[test]
    fn adaptive_mode_reports_convergence() {
        let f = default_map();
        let a = unstable_direction_adaptive(&f, &TorusPoint::new(0.03, 0.01), 10, 1e-9, 1280);
        assert!(a.increment < 1e-9, "{a:?}");
        // inside B_r0 the backward orbit creeps away from 0 polynomially slowly
        let slow = unstable_direction_adaptive(&f, &TorusPoint::new(0.003, 0.001), 10, 1e-9, 1280);
        assert_eq!(slow.steps, 1280);
        assert!(slow.increment > 1e-9 && slow.increment < 1e-2);
    }
}
