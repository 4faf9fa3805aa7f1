use thiserror::Error;

use crate::geometry::{Mat2, TorusPoint, Vec2};
use crate::map_core::AlmostAnosovMap;

use super::manifold::{local_manifold, ManifoldCurve, ManifoldError, Side};

/// Largest `d(x, y)` accepted by [`bracket`].
pub const DEFAULT_BRACKET_DELTA: f64 = 0.05;

const BRACKET_POINTS: usize = 65;
const NEWTON_ITERS: usize = 30;

#[derive(Debug, Clone, Error)]
pub enum BracketError {
    #[error("points are {distance} apart, more than {delta}")]
    TooFar { distance: f64, delta: f64 },
    #[error("W^u(x) and W^s(y) do not meet within {eps}")]
    NoIntersection { eps: f64 },
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// `(t, u)` with `a + t (b - a) = c + u (d - c)`, both in `[0, 1]`.
fn segment_intersection(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<(f64, f64)> {
    let r = b - a;
    let s = d - c;
    let den = r.cross(s);
    if den == 0.0 {
        return None;
    }
    let w = c - a;
    let t = w.cross(s) / den;
    let u = w.cross(r) / den;
    let slack = 1e-12;
    if (-slack..=1.0 + slack).contains(&t) && (-slack..=1.0 + slack).contains(&u) {
        Some((t.clamp(0.0, 1.0), u.clamp(0.0, 1.0)))
    } else {
        None
    }
}

/// Seed parameters of the first crossing of the two polylines, both measured from `origin`.
fn polyline_crossing(origin: &TorusPoint, wu: &ManifoldCurve, ws: &ManifoldCurve) -> Option<(f64, f64)> {
    let shift = origin.displacement_to(&ws.base());
    let us = wu.offsets();
    let ss: Vec<Vec2> = ws.offsets().iter().map(|v| *v + shift).collect();
    let (pu, ps) = (wu.params(), ws.params());
    for i in 1..us.len() {
        for j in 1..ss.len() {
            if let Some((t, u)) = segment_intersection(us[i - 1], us[i], ss[j - 1], ss[j]) {
                return Some((
                    pu[i - 1] + t * (pu[i] - pu[i - 1]),
                    ps[j - 1] + u * (ps[j] - ps[j - 1]),
                ));
            }
        }
    }
    None
}

/// `[x, y] = W^u_eps(x) ∩ W^s_eps(y)`.
///
/// The crossing of the two polylines seeds a Newton iteration on the seed
/// parameters of the two curves, so the result lies on both manifolds to
/// roughly the accuracy of the inverse map.
pub fn bracket(map: &AlmostAnosovMap, x: &TorusPoint, y: &TorusPoint, eps: f64) -> Result<TorusPoint, BracketError> {
    let distance = x.distance(y);
    if distance >= DEFAULT_BRACKET_DELTA {
        return Err(BracketError::TooFar { distance, delta: DEFAULT_BRACKET_DELTA });
    }
    let wu = local_manifold(map, x, Side::Unstable, eps, BRACKET_POINTS)?;
    let ws = local_manifold(map, y, Side::Stable, eps, BRACKET_POINTS)?;
    let (mut a, mut b) = polyline_crossing(x, &wu, &ws).ok_or(BracketError::NoIntersection { eps })?;

    let eval = |a: f64, b: f64| -> Result<(TorusPoint, Vec2), BracketError> {
        let pu = wu.point_at_param(map, a).map_err(ManifoldError::from)?;
        let ps = ws.point_at_param(map, b).map_err(ManifoldError::from)?;
        Ok((pu, ps.displacement_to(&pu)))
    };
    let scale = |params: &[f64]| {
        params.windows(2).map(|w| (w[1] - w[0]).abs()).fold(f64::INFINITY, f64::min) * 1e-3
    };
    let (ha, hb) = (scale(wu.params()), scale(ws.params()));
    let (mut point, mut gap) = eval(a, b)?;
    for _ in 0..NEWTON_ITERS {
        if gap.norm() < 1e-15 {
            break;
        }
        let da = (eval(a + ha, b)?.1 - eval(a - ha, b)?.1) * (0.5 / ha);
        let db = (eval(a, b + hb)?.1 - eval(a, b - hb)?.1) * (0.5 / hb);
        let Some(step) = Mat2::from_columns(da, db).solve(gap) else { break };
        let (na, nb) = (a - step.x, b - step.y);
        let (np, ng) = eval(na, nb)?;
        if ng.norm() >= gap.norm() {
            break;
        }
        a = na;
        b = nb;
        point = np;
        gap = ng;
    }
    Ok(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::MapSpec;

    #[test]
    fn bracket_of_a_point_with_itself() {
        let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
        let x = TorusPoint::new(0.31, 0.77);
        assert!(bracket(&f, &x, &x, 0.02).unwrap().distance(&x) < 1e-9);
    }

    #[test]
    fn linear_bracket_is_the_eigenline_intersection() {
        let f = AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap();
        let x = TorusPoint::new(0.4, 0.4);
        let y = TorusPoint::new(0.41, 0.385);
        let z = bracket(&f, &x, &y, 0.04).unwrap();
        // x + s e_u = y + t e_s
        let (eu, es) = (f.eigen().unstable, f.eigen().stable);
        let st = Mat2::from_columns(eu, -es).solve(x.displacement_to(&y)).unwrap();
        let expected = x.translate(eu * st.x);
        assert!(z.distance(&expected) < 1e-10, "{z} vs {expected}");
    }

    #[test]
    fn bracket_is_idempotent_and_local() {
        let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
        for (x, y) in [
            (TorusPoint::new(0.2, 0.3), TorusPoint::new(0.207, 0.295)),
            (TorusPoint::new(0.03, 0.02), TorusPoint::new(0.035, 0.012)),
            (TorusPoint::new(0.99, 0.005), TorusPoint::new(0.004, 0.998)),
        ] {
            let z = bracket(&f, &x, &y, 0.03).unwrap();
            let again = bracket(&f, &x, &z, 0.03).unwrap();
            assert!(again.distance(&z) < 1e-8, "{x} {y}");
            let d = x.distance(&y);
            assert!(z.distance(&x) + z.distance(&y) <= 4.0 * d);
        }
    }

    #[test]
    fn distant_points_are_rejected() {
        let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
        let r = bracket(&f, &TorusPoint::new(0.1, 0.1), &TorusPoint::new(0.3, 0.3), 0.05);
        assert!(matches!(r, Err(BracketError::TooFar { .. })));
    }
}
