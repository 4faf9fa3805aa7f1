use crate::geometry::{Mat2, TorusPoint, Vec2};

use super::bump::RadialBump;
use super::spec::{validate_spec, ChartKind, MapSpec, SpecViolation};
use super::MapError;

const INVERSE_MAX_ITER: usize = 50;
const INVERSE_TOL: f64 = 1e-13;

/// Unstable/stable eigendata of a hyperbolic 2x2 integer matrix with positive eigenvalues.
#[derive(Debug, Clone, Copy)]
pub struct Eigenbasis {
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub unstable: Vec2,
    pub stable: Vec2,
}

impl Eigenbasis {
    pub fn of(m: &Mat2) -> Eigenbasis {
        let tr = m.trace();
        let det = m.det();
        let disc = (tr * tr - 4.0 * det).sqrt();
        let big = (tr + tr.signum() * disc) / 2.0;
        let small = det / big;
        let (lambda_u, lambda_s) = if big.abs() >= small.abs() { (big, small) } else { (small, big) };
        Eigenbasis {
            lambda_u,
            lambda_s,
            unstable: eigenvector(m, lambda_u),
            stable: eigenvector(m, lambda_s),
        }
    }
}

fn eigenvector(m: &Mat2, lambda: f64) -> Vec2 {
    let [[p, q], [r, s]] = m.0;
    let c1 = Vec2::new(q, lambda - p);
    let c2 = Vec2::new(lambda - s, r);
    let v = if c1.norm() >= c2.norm() { c1 } else { c2 };
    let v = v.normalized();
    // first nonzero coordinate positive
    if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
        -v
    } else {
        v
    }
}

/// `N(x, y) = (x(1 + a x^2 + b y^2), y(1 - c x^2 - d y^2))`.
pub fn normal_form(a: f64, b: f64, c: f64, d: f64, v: Vec2) -> Vec2 {
    let (x, y) = (v.x, v.y);
    let x2 = x * x;
    let y2 = y * y;
    Vec2::new(x * (1.0 + a * x2 + b * y2), y * (1.0 - c * x2 - d * y2))
}

/// `DN = [[1 + 3a x^2 + b y^2, 2b x y], [-2c x y, 1 - c x^2 - 3d y^2]]`.
pub fn normal_form_jacobian(a: f64, b: f64, c: f64, d: f64, v: Vec2) -> Mat2 {
    let (x, y) = (v.x, v.y);
    let x2 = x * x;
    let y2 = y * y;
    Mat2::new(
        1.0 + 3.0 * a * x2 + b * y2,
        2.0 * b * x * y,
        -2.0 * c * x * y,
        1.0 - c * x2 - 3.0 * d * y2,
    )
}

/// Which piece of the construction a point falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `d(p, 0) <= r0`: the local normal form.
    Inner,
    /// `r0 < d(p, 0) < r1`: bump-blended.
    Annulus,
    /// `d(p, 0) >= r1`: the linear automorphism.
    Linear,
}

/// The glued diffeomorphism `f = omega * N + (1 - omega) * A` of `T^2`.
///
/// `N(x, y) = (x(1 + a x^2 + b y^2), y(1 - c x^2 - d y^2))` is written in the
/// chart selected by [`ChartKind`] and evaluated on the lift of `p` nearest the
/// origin.
#[derive(Debug, Clone)]
pub struct AlmostAnosovMap {
    spec: MapSpec,
    matrix: Mat2,
    matrix_inv: Mat2,
    eigen: Eigenbasis,
    /// columns: chart axes in torus coordinates
    chart: Mat2,
    chart_inv: Mat2,
    bump: RadialBump,
    linear_only: bool,
}

impl AlmostAnosovMap {
    pub fn new(spec: MapSpec) -> Result<Self, MapError> {
        let spec = validate_spec(spec).map_err(MapError::InvalidSpec)?;
        Ok(Self::build(spec, false))
    }

    /// The unperturbed automorphism `p -> A p mod 1` (the `r1 -> 0` limit).
    pub fn linear(matrix: [[i64; 2]; 2]) -> Result<Self, MapError> {
        let spec = MapSpec {
            matrix,
            ..MapSpec::default()
        };
        let v: Vec<SpecViolation> = spec
            .violations()
            .into_iter()
            .filter(|v| {
                matches!(
                    v,
                    SpecViolation::DeterminantNotOne { .. } | SpecViolation::NotHyperbolic { .. }
                )
            })
            .collect();
        if !v.is_empty() {
            return Err(MapError::InvalidSpec(v));
        }
        Ok(Self::build(spec, true))
    }

    fn build(spec: MapSpec, linear_only: bool) -> Self {
        let matrix = Mat2::from_int(spec.matrix);
        let matrix_inv = matrix.inverse().expect("det A = 1");
        let eigen = Eigenbasis::of(&matrix);
        let chart = match spec.chart {
            ChartKind::Eigen => Mat2::from_columns(eigen.unstable, eigen.stable),
            ChartKind::Standard => Mat2::IDENTITY,
        };
        let chart_inv = chart.inverse().expect("eigenvectors are independent");
        let bump = RadialBump::new(spec.r0, spec.r1, spec.bump);
        Self {
            spec,
            matrix,
            matrix_inv,
            eigen,
            chart,
            chart_inv,
            bump,
            linear_only,
        }
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    pub fn matrix(&self) -> Mat2 {
        self.matrix
    }

    pub fn eigen(&self) -> &Eigenbasis {
        &self.eigen
    }

    pub fn is_linear_only(&self) -> bool {
        self.linear_only
    }

    pub fn r0(&self) -> f64 {
        if self.linear_only {
            0.0
        } else {
            self.spec.r0
        }
    }

    pub fn r1(&self) -> f64 {
        if self.linear_only {
            0.0
        } else {
            self.spec.r1
        }
    }

    /// Chart axes (columns) in torus coordinates.
    pub fn chart(&self) -> Mat2 {
        self.chart
    }

    pub fn region(&self, p: &TorusPoint) -> Region {
        let r = p.lift().norm();
        if self.linear_only || r >= self.spec.r1 {
            Region::Linear
        } else if r <= self.spec.r0 {
            Region::Inner
        } else {
            Region::Annulus
        }
    }

    /// Torus coordinates of a lifted point -> chart coordinates.
    pub fn to_chart(&self, lifted: Vec2) -> Vec2 {
        self.chart_inv.apply(lifted)
    }

    pub fn from_chart(&self, local: Vec2) -> Vec2 {
        self.chart.apply(local)
    }

    /// The normal form in chart coordinates.
    pub fn local_form(&self, v: Vec2) -> Vec2 {
        let s = &self.spec;
        normal_form(s.a, s.b, s.c, s.d, v)
    }

    /// Jacobian of [`Self::local_form`] in chart coordinates.
    pub fn local_differential(&self, v: Vec2) -> Mat2 {
        let s = &self.spec;
        normal_form_jacobian(s.a, s.b, s.c, s.d, v)
    }

    /// Normal form expressed in torus coordinates on a lifted point.
    fn normal_form_lifted(&self, q: Vec2) -> Vec2 {
        self.from_chart(self.local_form(self.to_chart(q)))
    }

    fn normal_form_jacobian_lifted(&self, q: Vec2) -> Mat2 {
        self.chart * self.local_differential(self.to_chart(q)) * self.chart_inv
    }

    #[inline]
    fn linear_image(&self, p: &TorusPoint) -> TorusPoint {
        TorusPoint::from_vec(self.matrix.apply(p.coords()))
    }

    /// Image of a lifted point before reduction mod 1.
    pub(crate) fn apply_lifted(&self, q: Vec2) -> Vec2 {
        let r = q.norm();
        if self.linear_only || r >= self.spec.r1 {
            return self.matrix.apply(q);
        }
        let local = self.normal_form_lifted(q);
        if r <= self.spec.r0 {
            return local;
        }
        let (w, _) = self.bump.eval(r);
        local * w + self.matrix.apply(q) * (1.0 - w)
    }

    pub fn apply(&self, p: &TorusPoint) -> TorusPoint {
        if self.linear_only {
            return self.linear_image(p);
        }
        let q = p.lift();
        if q.norm() >= self.spec.r1 {
            return self.linear_image(p);
        }
        TorusPoint::from_vec(self.apply_lifted(q))
    }

    /// `f^n(p)`.
    pub fn iterate(&self, p: &TorusPoint, n: usize) -> TorusPoint {
        let mut q = *p;
        for _ in 0..n {
            q = self.apply(&q);
        }
        q
    }

    pub fn differential(&self, p: &TorusPoint) -> Mat2 {
        if self.linear_only {
            return self.matrix;
        }
        let q = p.lift();
        let r = q.norm();
        if r >= self.spec.r1 {
            return self.matrix;
        }
        if r == 0.0 {
            return Mat2::IDENTITY;
        }
        let dn = self.normal_form_jacobian_lifted(q);
        if r <= self.spec.r0 {
            return dn;
        }
        let (w, dw) = self.bump.eval(r);
        let gap = self.normal_form_lifted(q) - self.matrix.apply(q);
        let grad_w = q * (dw / r);
        dn.scale(w) + self.matrix.scale(1.0 - w) + Mat2::outer(gap, grad_w)
    }

    /// `f^{-1}(p)` by damped Newton iteration seeded at `A^{-1} p`.
    pub fn apply_inverse(&self, p: &TorusPoint) -> Result<TorusPoint, MapError> {
        let linear_guess = TorusPoint::from_vec(self.matrix_inv.apply(p.coords()));
        if self.linear_only {
            return Ok(linear_guess);
        }
        let mut best = (f64::INFINITY, linear_guess);
        for seed in [linear_guess, *p] {
            match self.newton_inverse(p, seed) {
                Ok(q) => return Ok(q),
                Err((res, q)) => {
                    if res < best.0 {
                        best = (res, q);
                    }
                }
            }
        }
        Err(MapError::InverseNotConverged {
            target: *p,
            residual: best.0,
            iterations: INVERSE_MAX_ITER,
        })
    }

    fn newton_inverse(&self, target: &TorusPoint, seed: TorusPoint) -> Result<TorusPoint, (f64, TorusPoint)> {
        let residual = |q: &TorusPoint| self.apply(q).displacement_to(target);
        let mut q = seed;
        let mut res = residual(&q);
        let mut res_norm = res.norm();
        for _ in 0..INVERSE_MAX_ITER {
            if res_norm <= INVERSE_TOL {
                return Ok(q);
            }
            let jac = self.differential(&q);
            let Some(step) = jac.solve(res) else {
                return Err((res_norm, q));
            };
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = q.translate(step * scale);
                let cand_res = residual(&cand);
                let cand_norm = cand_res.norm();
                if cand_norm < res_norm || cand_norm <= INVERSE_TOL {
                    q = cand;
                    res = cand_res;
                    res_norm = cand_norm;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let _ = res;
        if res_norm <= INVERSE_TOL {
            Ok(q)
        } else {
            Err((res_norm, q))
        }
    }

    /// `f^{-n}(p)`.
    pub fn iterate_inverse(&self, p: &TorusPoint, n: usize) -> Result<TorusPoint, MapError> {
        let mut q = *p;
        for _ in 0..n {
            q = self.apply_inverse(&q)?;
        }
        Ok(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::BumpProfile;

    fn default_map() -> AlmostAnosovMap {
        AlmostAnosovMap::new(MapSpec::default()).unwrap()
    }

    /// Standard-axis chart with an inner disc large enough for the reference points.
    fn standard_map(a: f64, b: f64, c: f64, d: f64) -> AlmostAnosovMap {
        AlmostAnosovMap::new(MapSpec {
            a,
            b,
            c,
            d,
            r0: 0.024,
            r1: 0.24,
            chart: ChartKind::Standard,
            ..MapSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn origin_is_fixed() {
        let f = default_map();
        assert_eq!(f.apply(&TorusPoint::ORIGIN), TorusPoint::ORIGIN);
        assert_eq!(f.apply_inverse(&TorusPoint::ORIGIN).unwrap(), TorusPoint::ORIGIN);
    }

    #[test]
    fn linear_region_image() {
        let f = default_map();
        // A (0.5, 0.5) = (1.5, 1.0) = (0.5, 0.0) mod 1
        let q = f.apply(&TorusPoint::new(0.5, 0.5));
        assert!((q.x() - 0.5).abs() < 1e-15 && q.y().abs() < 1e-15);
        let back = f.apply_inverse(&TorusPoint::new(0.5, 0.0)).unwrap();
        assert!(back.distance(&TorusPoint::new(0.5, 0.5)) < 1e-14);
    }

    #[test]
    fn normal_form_on_the_x_axis() {
        let f = standard_map(4.0, 3.0, 1.0, 1.0);
        // 0.01 (1 + 4e-4) = 0.010004
        let q = f.apply(&TorusPoint::new(0.01, 0.0));
        assert!((q.x() - 0.010004).abs() < 1e-15, "{q}");
        assert_eq!(q.y(), 0.0);
    }

    #[test]
    fn reference_local_differential() {
        let m = normal_form_jacobian(1.0, 1.0, 1.0, 1.0, Vec2::new(0.01, 0.02));
        let expected = Mat2::new(1.0007, 0.0004, -0.0004, 0.9987);
        assert!((m - expected).max_abs() < 1e-15, "{m}");
        // in the standard chart the glued map reproduces it inside B_r0
        let f = standard_map(4.0, 3.0, 1.0, 1.0);
        let p = TorusPoint::new(0.01, 0.02);
        let direct = normal_form_jacobian(4.0, 3.0, 1.0, 1.0, Vec2::new(0.01, 0.02));
        assert!((f.differential(&p) - direct).max_abs() < 1e-15);
    }

    #[test]
    fn differential_at_origin_is_identity() {
        let f = default_map();
        assert!((f.differential(&TorusPoint::ORIGIN) - Mat2::IDENTITY).max_abs() <= 1e-12);
    }

    #[test]
    fn differential_outside_glue_is_matrix() {
        let f = default_map();
        for p in [TorusPoint::new(0.3, 0.7), TorusPoint::new(0.06, 0.0), TorusPoint::new(0.97, 0.96)] {
            assert_eq!(f.differential(&p), f.matrix());
        }
    }

    #[test]
    fn inverse_round_trip_across_regions() {
        for bump in [BumpProfile::Smooth, BumpProfile::Poly9] {
            let f = AlmostAnosovMap::new(MapSpec {
                bump,
                ..MapSpec::default()
            })
            .unwrap();
            for i in 0..400 {
                let theta = i as f64 * 0.731;
                let r = 0.06 * (i as f64 + 0.5) / 400.0;
                let p = TorusPoint::new(r * theta.cos(), r * theta.sin());
                let q = f.apply_inverse(&f.apply(&p)).unwrap();
                assert!(q.distance(&p) < 1e-10, "{p} -> {q}");
            }
        }
    }

    #[test]
    fn linear_only_map_is_automorphism() {
        let f = AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap();
        let p = TorusPoint::new(0.001, 0.002);
        let q = f.apply(&p);
        assert!((q.x() - 0.004).abs() < 1e-15 && (q.y() - 0.003).abs() < 1e-15);
        assert!(AlmostAnosovMap::linear([[1, 1], [0, 1]]).is_err());
    }

    #[test]
    fn eigenbasis_of_cat_matrix() {
        let e = Eigenbasis::of(&Mat2::new(2.0, 1.0, 1.0, 1.0));
        let golden = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((e.lambda_u - golden).abs() < 1e-14);
        assert!((e.lambda_u * e.lambda_s - 1.0).abs() < 1e-14);
        let av = Mat2::new(2.0, 1.0, 1.0, 1.0).apply(e.unstable);
        assert!((av - e.unstable * golden).norm() < 1e-14);
    }
}
