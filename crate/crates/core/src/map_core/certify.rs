use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cone_dynamics::{stable_direction, unstable_direction, DEFAULT_COCYCLE_STEPS};
use crate::geometry::{distance_to_singularity, Mat2, TorusPoint, Vec2};
use crate::seed::task_rng;

use super::map::{AlmostAnosovMap, Region};

/// Default cone half-angle (15 degrees).
pub const DEFAULT_CONE_HALF_ANGLE: f64 = 15.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolicityReport {
    pub hyperbolic: bool,
    /// Real eigenvalues ordered by decreasing modulus; `None` for a complex pair.
    pub eigenvalues: Option<[f64; 2]>,
    pub expanding_modulus: f64,
    pub contracting_modulus: f64,
}

impl HyperbolicityReport {
    /// `min(|lambda_1| - 1, 1 - |lambda_2|)`; positive iff hyperbolic with real eigenvalues.
    pub fn margin(&self) -> f64 {
        if self.eigenvalues.is_none() {
            return -1.0;
        }
        (self.expanding_modulus - 1.0).min(1.0 - self.contracting_modulus)
    }
}

/// Eigenvalue test for a 2x2 matrix: real, with moduli strictly on both sides of 1.
pub fn hyperbolicity_certificate(m: &Mat2) -> HyperbolicityReport {
    let tr = m.trace();
    let det = m.det();
    let disc = tr * tr - 4.0 * det;
    if !(disc > 0.0) || !m.is_finite() {
        let modulus = det.abs().sqrt();
        return HyperbolicityReport {
            hyperbolic: false,
            eigenvalues: if disc == 0.0 { Some([tr / 2.0, tr / 2.0]) } else { None },
            expanding_modulus: modulus,
            contracting_modulus: modulus,
        };
    }
    let root = disc.sqrt();
    // avoid cancellation: the larger root from the sum, the smaller from the product
    let sign = if tr >= 0.0 { 1.0 } else { -1.0 };
    let big = (tr + sign * root) / 2.0;
    let small = if big != 0.0 { det / big } else { (tr - sign * root) / 2.0 };
    let (l1, l2) = if big.abs() >= small.abs() { (big, small) } else { (small, big) };
    HyperbolicityReport {
        hyperbolic: l1.abs() > 1.0 && l2.abs() < 1.0,
        eigenvalues: Some([l1, l2]),
        expanding_modulus: l1.abs(),
        contracting_modulus: l2.abs(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub grid_n: usize,
    pub exclusion_radius: f64,
    pub checked: usize,
    pub failures: usize,
    /// First failing point in row-major grid order.
    pub first_failure: Option<(TorusPoint, HyperbolicityReport)>,
    pub worst_point: TorusPoint,
    pub worst_margin: f64,
    pub min_det: f64,
}

impl SweepReport {
    pub fn all_pass(&self) -> bool {
        self.failures == 0 && self.min_det > 0.0
    }

    pub fn pass_fraction(&self) -> f64 {
        if self.checked == 0 {
            return 1.0;
        }
        (self.checked - self.failures) as f64 / self.checked as f64
    }
}

struct RowSweep {
    checked: usize,
    failures: usize,
    first_failure: Option<(TorusPoint, HyperbolicityReport)>,
    worst: (f64, TorusPoint),
    min_det: f64,
}

/// Certifies `Df` at the `grid_n^2` lattice points `(i/n, j/n)` with `d(p, 0) > exclusion_radius`.
pub fn sweep_hyperbolicity(map: &AlmostAnosovMap, grid_n: usize, exclusion_radius: f64) -> SweepReport {
    assert!(grid_n >= 2, "grid_n must be at least 2");
    let h = 1.0 / grid_n as f64;
    let rows: Vec<RowSweep> = (0..grid_n)
        .into_par_iter()
        .map(|j| {
            let mut row = RowSweep {
                checked: 0,
                failures: 0,
                first_failure: None,
                worst: (f64::INFINITY, TorusPoint::ORIGIN),
                min_det: f64::INFINITY,
            };
            for i in 0..grid_n {
                let p = TorusPoint::new(i as f64 * h, j as f64 * h);
                if distance_to_singularity(&p) <= exclusion_radius && exclusion_radius > 0.0 {
                    continue;
                }
                let m = map.differential(&p);
                let rep = hyperbolicity_certificate(&m);
                row.checked += 1;
                row.min_det = row.min_det.min(m.det());
                let margin = rep.margin();
                if margin < row.worst.0 {
                    row.worst = (margin, p);
                }
                if !rep.hyperbolic {
                    row.failures += 1;
                    if row.first_failure.is_none() {
                        row.first_failure = Some((p, rep));
                    }
                }
            }
            row
        })
        .collect();
    let mut report = SweepReport {
        grid_n,
        exclusion_radius,
        checked: 0,
        failures: 0,
        first_failure: None,
        worst_point: TorusPoint::ORIGIN,
        worst_margin: f64::INFINITY,
        min_det: f64::INFINITY,
    };
    for row in rows {
        report.checked += row.checked;
        report.failures += row.failures;
        if report.first_failure.is_none() {
            report.first_failure = row.first_failure;
        }
        if row.worst.0 < report.worst_margin {
            report.worst_margin = row.worst.0;
            report.worst_point = row.worst.1;
        }
        report.min_det = report.min_det.min(row.min_det);
    }
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub kappa_u: f64,
    pub kappa_s: f64,
    pub sample_count: usize,
    /// Sample attaining the smaller of the two constants.
    pub worst_point: TorusPoint,
    /// Set when some sample failed to expand `E^u` or contract `E^s` at all.
    pub degenerate: bool,
    /// Smallest `|Df v|` over unstable samples (the uniform `K^u(r)` away from `B_r`).
    pub min_expansion: f64,
    /// Largest `|Df v|` over stable samples (`K^s(r)`).
    pub max_contraction: f64,
}

/// Empirical constants in `|Df v| >= (1 + kappa_u d^2)|v|` on `E^u` and
/// `|Df v| <= (1 - kappa_s d^2)|v|` on `E^s`, with `d = d(x, 0) > r`.
///
/// Half of the samples are uniform on the torus, half are log-uniform in
/// radius between `r` and `r1` so the glue region is well covered.
pub fn check_nondegeneracy(map: &AlmostAnosovMap, sample_n: usize, r: f64) -> NondegeneracyReport {
    assert!(sample_n >= 1);
    let r1 = map.r1();
    let seed = map.spec().seed;
    let samples: Vec<(f64, f64, f64, TorusPoint)> = (0..sample_n)
        .into_par_iter()
        .map(|k| {
            let mut rng = task_rng(seed, "nondegeneracy", k as u64);
            let p = loop {
                let p = if k % 2 == 1 && r1 > r.max(1e-12) {
                    let lo = r.max(1e-6 * r1);
                    let rad = lo * (r1 / lo).powf(rng.gen::<f64>());
                    let th = rng.gen::<f64>() * std::f64::consts::TAU;
                    TorusPoint::new(rad * th.cos(), rad * th.sin())
                } else {
                    TorusPoint::new(rng.gen(), rng.gen())
                };
                if distance_to_singularity(&p) > r {
                    break p;
                }
            };
            let d = distance_to_singularity(&p);
            let df = map.differential(&p);
            let eu = unstable_direction(map, &p, DEFAULT_COCYCLE_STEPS).direction;
            let es = stable_direction(map, &p, DEFAULT_COCYCLE_STEPS).direction;
            let gu = df.apply(eu).norm();
            let gs = df.apply(es).norm();
            (gu, gs, d, p)
        })
        .collect();
    let mut report = NondegeneracyReport {
        kappa_u: f64::INFINITY,
        kappa_s: f64::INFINITY,
        sample_count: samples.len(),
        worst_point: TorusPoint::ORIGIN,
        degenerate: false,
        min_expansion: f64::INFINITY,
        max_contraction: 0.0,
    };
    let mut worst = f64::INFINITY;
    for (gu, gs, d, p) in samples {
        report.min_expansion = report.min_expansion.min(gu);
        report.max_contraction = report.max_contraction.max(gs);
        if gu <= 1.0 || gs >= 1.0 {
            report.degenerate = true;
        }
        let d2 = d * d;
        let ku = (gu - 1.0) / d2;
        let ks = (1.0 - gs) / d2;
        report.kappa_u = report.kappa_u.min(ku);
        report.kappa_s = report.kappa_s.min(ks);
        if ku.min(ks) < worst {
            worst = ku.min(ks);
            report.worst_point = p;
        }
    }
    if report.degenerate {
        report.kappa_u = report.kappa_u.max(0.0);
        report.kappa_s = report.kappa_s.max(0.0);
        if report.min_expansion <= 1.0 {
            report.kappa_u = 0.0;
        }
        if report.max_contraction >= 1.0 {
            report.kappa_s = 0.0;
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConeSide {
    Unstable,
    Stable,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConeViolation {
    pub point: TorusPoint,
    pub side: ConeSide,
    /// Angle of the worst boundary image beyond the half-angle, in radians.
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeReport {
    pub half_angle: f64,
    pub samples: usize,
    pub violations_inner: usize,
    pub violations_annulus: usize,
    pub violations_linear: usize,
    /// Violation with the largest excess angle.
    pub worst: Option<ConeViolation>,
}

impl ConeReport {
    pub fn pass(&self) -> bool {
        self.violations() == 0
    }

    pub fn violations(&self) -> usize {
        self.violations_inner + self.violations_annulus + self.violations_linear
    }
}

fn rotate(v: Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Worst image angle (relative to `axis`) of the two boundary rays of the
/// sector of half-angle `theta` about `axis` under `m`.
fn boundary_image_angle(m: &Mat2, axis: Vec2, theta: f64) -> f64 {
    [theta, -theta]
        .into_iter()
        .map(|a| m.apply(rotate(axis, a)).line_angle(axis))
        .fold(0.0, f64::max)
}

/// Checks `Df_x C^u ⊆ C^u` and `Df_x^{-1} C^s ⊆ C^s` for the constant sectors of
/// half-angle `half_angle` about the eigendirections of `A`, on a
/// `sample_n x sample_n` grid. Inclusion must be strict except where `Df = Id`.
pub fn check_cone_invariance(map: &AlmostAnosovMap, half_angle: f64, sample_n: usize) -> ConeReport {
    assert!(sample_n >= 1);
    let eu = map.eigen().unstable;
    let es = map.eigen().stable;
    let h = 1.0 / sample_n as f64;
    let rows: Vec<([usize; 3], Option<ConeViolation>)> = (0..sample_n)
        .into_par_iter()
        .map(|j| {
            let mut counts = [0usize; 3];
            let mut worst: Option<ConeViolation> = None;
            for i in 0..sample_n {
                let p = TorusPoint::new(i as f64 * h, j as f64 * h);
                let df = map.differential(&p);
                let identity = df == Mat2::IDENTITY;
                let inside = |angle: f64| if identity { angle <= half_angle + 1e-12 } else { angle < half_angle };
                let au = boundary_image_angle(&df, eu, half_angle);
                let as_ = match df.inverse() {
                    Some(inv) => boundary_image_angle(&inv, es, half_angle),
                    None => f64::INFINITY,
                };
                let mut record = |side, angle: f64| {
                    let slot = match map.region(&p) {
                        Region::Inner => 0,
                        Region::Annulus => 1,
                        Region::Linear => 2,
                    };
                    counts[slot] += 1;
                    let excess = angle - half_angle;
                    if worst.map_or(true, |w| excess > w.excess) {
                        worst = Some(ConeViolation { point: p, side, excess });
                    }
                };
                if !inside(au) {
                    record(ConeSide::Unstable, au);
                } else if !inside(as_) {
                    record(ConeSide::Stable, as_);
                }
            }
            (counts, worst)
        })
        .collect();
    let mut report = ConeReport {
        half_angle,
        samples: sample_n * sample_n,
        violations_inner: 0,
        violations_annulus: 0,
        violations_linear: 0,
        worst: None,
    };
    for (c, w) in rows {
        report.violations_inner += c[0];
        report.violations_annulus += c[1];
        report.violations_linear += c[2];
        if let Some(w) = w {
            if report.worst.map_or(true, |cur| w.excess > cur.excess) {
                report.worst = Some(w);
            }
        }
    }
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessReport {
    pub samples: usize,
    pub step: f64,
    pub max_dev_linear: f64,
    pub max_dev_inner: f64,
    pub max_dev_annulus: f64,
}

impl SmoothnessReport {
    pub const TOL_LINEAR: f64 = 1e-9;
    pub const TOL_INNER: f64 = 1e-7;
    pub const TOL_ANNULUS: f64 = 1e-6;

    pub fn passes(&self) -> bool {
        self.max_dev_linear <= Self::TOL_LINEAR
            && self.max_dev_inner <= Self::TOL_INNER
            && self.max_dev_annulus <= Self::TOL_ANNULUS
    }
}

/// Five-point central-difference Jacobian of `f` at `p` with step `h`.
pub(crate) fn finite_difference_jacobian<F>(f: F, p: &TorusPoint, h: f64) -> Mat2
where
    F: Fn(&TorusPoint) -> TorusPoint,
{
    let fp = f(p);
    let column = |e: Vec2| {
        let at = |k: f64| fp.displacement_to(&f(&p.translate(e * (k * h))));
        (at(-2.0) - at(2.0) + (at(1.0) - at(-1.0)) * 8.0) * (1.0 / (12.0 * h))
    };
    Mat2::from_columns(column(Vec2::new(1.0, 0.0)), column(Vec2::new(0.0, 1.0)))
}

/// Largest entrywise gap between `differential` and finite differences of
/// `apply`, over `sample_n` random points in each of the three regions.
pub fn smoothness_check(map: &AlmostAnosovMap, sample_n: usize) -> SmoothnessReport {
    let step = f64::EPSILON.cbrt();
    let seed = map.spec().seed;
    let (r0, r1) = (map.spec().r0, map.spec().r1);
    let dev_for = |label: &str, draw: &(dyn Fn(&mut rand_chacha::ChaCha8Rng) -> TorusPoint + Sync)| -> f64 {
        (0..sample_n)
            .into_par_iter()
            .map(|k| {
                let mut rng = task_rng(seed, label, k as u64);
                let p = draw(&mut rng);
                let fd = finite_difference_jacobian(|q| map.apply(q), &p, step);
                (fd - map.differential(&p)).max_abs()
            })
            .reduce(|| 0.0, f64::max)
    };
    let polar = |rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| {
        let rad = lo + (hi - lo) * rng.gen::<f64>();
        let th = rng.gen::<f64>() * std::f64::consts::TAU;
        TorusPoint::new(rad * th.cos(), rad * th.sin())
    };
    let max_dev_linear = dev_for("smooth-linear", &|rng| loop {
        let p = TorusPoint::new(rng.gen(), rng.gen());
        if distance_to_singularity(&p) > r1 + 4.0 * step {
            break p;
        }
    });
    let max_dev_inner = dev_for("smooth-inner", &|rng| polar(rng, 0.0, r0));
    let max_dev_annulus = dev_for("smooth-annulus", &|rng| polar(rng, r0, r1));
    SmoothnessReport {
        samples: 3 * sample_n,
        step,
        max_dev_linear,
        max_dev_inner,
        max_dev_annulus,
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
    fn certificate_examples() {
        assert!(!hyperbolicity_certificate(&Mat2::IDENTITY).hyperbolic);
        let cat = hyperbolicity_certificate(&Mat2::new(2.0, 1.0, 1.0, 1.0));
        assert!(cat.hyperbolic);
        let [l1, l2] = cat.eigenvalues.unwrap();
        assert!((l1 - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!((l1 * l2 - 1.0).abs() < 1e-12);
        let near = hyperbolicity_certificate(&Mat2::new(1.0007, 0.0004, -0.0004, 0.9987));
        assert!(near.hyperbolic);
        let [l1, l2] = near.eigenvalues.unwrap();
        assert!((l1 - 1.0006).abs() < 5e-5 && (l2 - 0.9988).abs() < 5e-5, "{l1} {l2}");
        let rot = hyperbolicity_certificate(&Mat2::new(0.0, -1.0, 1.0, 0.0));
        assert!(!rot.hyperbolic && rot.eigenvalues.is_none());
    }

    #[test]
    fn sweep_excludes_only_the_origin_neighbourhood() {
        let f = default_map();
        let rep = sweep_hyperbolicity(&f, 128, 1e-3);
        assert!(rep.all_pass(), "{rep:?}");
        let with_origin = sweep_hyperbolicity(&f, 128, 0.0);
        assert_eq!(with_origin.failures, 1);
        assert_eq!(with_origin.first_failure.unwrap().0, TorusPoint::ORIGIN);
    }

    #[test]
    fn linear_region_certificates_match_matrix() {
        let f = default_map();
        let reference = hyperbolicity_certificate(&f.matrix());
        for j in 0..64 {
            for i in 0..64 {
                let p = TorusPoint::new(i as f64 / 64.0, j as f64 / 64.0);
                if distance_to_singularity(&p) >= f.r1() {
                    assert_eq!(hyperbolicity_certificate(&f.differential(&p)), reference);
                }
            }
        }
    }

    #[test]
    fn smoothness_within_tolerances() {
        for bump in [crate::map_core::BumpProfile::Smooth, crate::map_core::BumpProfile::Poly9] {
            let f = AlmostAnosovMap::new(MapSpec { bump, ..MapSpec::default() }).unwrap();
            let rep = smoothness_check(&f, 200);
            assert!(rep.passes(), "{rep:?}");
        }
    }

    #[test]
    fn cones_hold_away_from_the_glue() {
        let f = default_map();
        let rep = check_cone_invariance(&f, DEFAULT_CONE_HALF_ANGLE, 256);
        assert_eq!(rep.violations_linear, 0);
        // inside B_r0 the stable sector needs a half-angle above ~19.3 degrees
        let wide = check_cone_invariance(&f, 30f64.to_radians(), 1024);
        assert_eq!(wide.violations_linear + wide.violations_inner, 0, "{wide:?}");
        let everything = check_cone_invariance(&f, std::f64::consts::FRAC_PI_2, 16);
        assert!(everything.violations_linear > 0);
        assert_eq!(everything.worst.unwrap().side, ConeSide::Unstable);
    }

    #[test]
    fn inner_sector_bounds_match_closed_form() {
        // a = 4, b = 3, c = 1, d = 1: the inner region admits half-angles with
        // 3t^2 - sqrt(78) t + 1 < 0 (unstable) and t^2 - sqrt(78) t + 3 < 0 (stable), t = tan
        let f = default_map();
        let s78 = 78f64.sqrt();
        let t_s = (s78 - (78.0 - 12.0f64).sqrt()) / 2.0;
        let lo = t_s.atan();
        let inner_only = |deg: f64| {
            let r = check_cone_invariance(&f, deg.to_radians(), 2048);
            r.violations_inner
        };
        assert!(lo.to_degrees() > 19.0 && lo.to_degrees() < 19.5);
        assert!(inner_only(15.0) > 0);
        assert_eq!(inner_only(25.0), 0);
    }

    #[test]
    fn linear_map_nondegeneracy_bound() {
        let f = AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap();
        let rep = check_nondegeneracy(&f, 400, 0.0);
        let lambda = (3.0 + 5f64.sqrt()) / 2.0;
        // diam(T^2) = sqrt(2)/2, so d^2 <= 1/2
        assert!(rep.kappa_u >= (lambda - 1.0) / 0.5 - 1e-9, "{rep:?}");
        assert!(!rep.degenerate);
    }

    #[test]
    fn default_map_is_nondegenerate() {
        let f = default_map();
        let rep = check_nondegeneracy(&f, 2000, 1e-3);
        assert!(!rep.degenerate, "{rep:?}");
        assert!(rep.kappa_u > 0.0 && rep.kappa_s > 0.0);
    }
}
