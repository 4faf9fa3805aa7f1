use std::sync::OnceLock;

use almost_anosov::geometry::distance_to_singularity;
use almost_anosov::homotopy::{build_homotopy_member, build_margin_field, support_radius, HomotopyMember};
use almost_anosov::map_core::hyperbolicity_certificate;
use almost_anosov::stats_lab::{correlation_series, ks_distance_normal, MeasureSampler, Observable};
use almost_anosov::thermo::{leading_eigen, MeasureOnGrid, TransitionSample, UlamGrid};
use almost_anosov::tower_stats::{first_return_time, Rectangle};
use almost_anosov::{AlmostAnosovMap, MapSpec, TorusPoint};
use proptest::prelude::*;

fn map() -> &'static AlmostAnosovMap {
    static MAP: OnceLock<AlmostAnosovMap> = OnceLock::new();
    MAP.get_or_init(|| AlmostAnosovMap::new(MapSpec::default()).unwrap())
}

fn member() -> &'static HomotopyMember {
    static H: OnceLock<HomotopyMember> = OnceLock::new();
    H.get_or_init(|| {
        let f = map();
        let field = build_margin_field(f, 32, 64).unwrap();
        build_homotopy_member(f, &field, 0.5 * f.r0()).unwrap()
    })
}

fn small_sample() -> &'static TransitionSample {
    static S: OnceLock<TransitionSample> = OnceLock::new();
    S.get_or_init(|| TransitionSample::build(map(), UlamGrid::new(12), 16, 4).unwrap())
}

fn torus_point() -> impl Strategy<Value = TorusPoint> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| TorusPoint::new(x, y))
}

/// Points log-uniform in radius between `lo` and `hi` around the origin.
fn near_origin(lo: f64, hi: f64) -> impl Strategy<Value = TorusPoint> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(move |(u, th)| {
        let r = lo * (hi / lo).powf(u);
        TorusPoint::new(r * th.cos(), r * th.sin())
    })
}

fn any_point() -> impl Strategy<Value = TorusPoint> {
    prop_oneof![torus_point(), near_origin(1e-6, 0.06)]
}

fn observable() -> impl Strategy<Value = Observable> {
    prop_oneof![
        (1u32..4).prop_map(|k| Observable::CosX { k }),
        (1u32..4).prop_map(|k| Observable::CosY { k }),
        (0.0..1.0f64, 0.0..1.0f64, 0.05..0.4f64).prop_map(|(cx, cy, radius)| Observable::Bump { cx, cy, radius }),
        (0.1..1.0f64).prop_map(|power| Observable::DistPower { power }),
        (-2.0..2.0f64).prop_map(|value| Observable::Constant { value }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_round_trip(p in any_point()) {
        let f = map();
        let q = f.apply_inverse(&f.apply(&p)).unwrap();
        prop_assert!(q.distance(&p) <= 1e-10);
    }

    #[test]
    fn linear_outside_r1(p in torus_point()) {
        let f = map();
        prop_assume!(distance_to_singularity(&p) >= f.r1());
        let lin = TorusPoint::from_vec(f.matrix().apply(p.coords()));
        prop_assert!(f.apply(&p).distance(&lin) <= 1e-12);
    }

    #[test]
    fn differential_is_hyperbolic_away_from_origin(p in prop_oneof![torus_point(), near_origin(1e-3, 0.06)]) {
        let f = map();
        prop_assume!(distance_to_singularity(&p) >= 1e-3);
        let df = f.differential(&p);
        prop_assert!(hyperbolicity_certificate(&df).hyperbolic, "{p:?}");
        prop_assert!(df.det() > 0.0);
    }

    #[test]
    fn homotopy_member_is_hyperbolic_everywhere(p in prop_oneof![torus_point(), near_origin(1e-7, 0.006)]) {
        let h = member();
        prop_assert!(hyperbolicity_certificate(&h.differential(&p)).hyperbolic, "{p:?}");
    }

    #[test]
    fn homotopy_member_agrees_with_map_off_support(p in any_point()) {
        let h = member();
        prop_assume!(distance_to_singularity(&p) > support_radius(h));
        prop_assert_eq!(h.apply(&p), map().apply(&p));
    }

    #[test]
    fn torus_distance_is_a_metric(p in torus_point(), q in torus_point(), r in torus_point()) {
        prop_assert!((p.distance(&q) - q.distance(&p)).abs() <= 1e-15);
        prop_assert!(p.distance(&q) <= 0.5f64.sqrt() + 1e-15);
        prop_assert!(p.distance(&r) <= p.distance(&q) + q.distance(&r) + 1e-15);
    }

    #[test]
    fn rectangle_coordinates_round_trip(u in -0.05..0.05f64, s in -0.05..0.05f64) {
        let rect = Rectangle::default_for(map());
        let p = rect.point_at(u, s);
        let v = rect.local_coords(&p);
        prop_assert!((v.x - u).abs() < 1e-12 && (v.y - s).abs() < 1e-12);
        prop_assert!(rect.contains(&p));
    }

    #[test]
    fn first_return_is_first(u in -0.049..0.049f64, s in -0.049..0.049f64) {
        let f = map();
        let rect = Rectangle::default_for(f);
        let x = rect.point_at(u, s);
        let n = first_return_time(f, &rect, &x, 500);
        let mut p = x;
        for k in 1..=500 {
            p = f.apply(&p);
            if rect.contains_interior(&p) {
                prop_assert_eq!(n, Some(k));
                return Ok(());
            }
        }
        prop_assert_eq!(n, None);
    }

    #[test]
    fn observables_respect_declared_holder_bounds(h in observable(), p in torus_point(), q in torus_point()) {
        let (alpha, c) = h.holder();
        let lhs = (h.eval(&p) - h.eval(&q)).abs();
        prop_assert!(lhs <= c * p.distance(&q).powf(alpha) + 1e-12, "{h:?}");
    }

    #[test]
    fn ks_distance_is_in_unit_interval(v in prop::collection::vec(-10.0..10.0f64, 1..200), sigma in 0.01..5.0f64) {
        let d = ks_distance_normal(&v, sigma);
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn measure_normalization_and_tv(w in prop::collection::vec(0.0..1.0f64, 16), z in prop::collection::vec(0.0..1.0f64, 16)) {
        prop_assume!(w.iter().sum::<f64>() > 0.0 && z.iter().sum::<f64>() > 0.0);
        let a = MeasureOnGrid::new(UlamGrid::new(4), w);
        let b = MeasureOnGrid::new(UlamGrid::new(4), z);
        prop_assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let tv = a.total_variation(&b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&tv));
        prop_assert!((tv - b.total_variation(&a)).abs() < 1e-15);
        prop_assert!(a.total_variation(&a) == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ulam_operator_at_t1_is_stochastic(seed in any::<u64>()) {
        let s = TransitionSample::build(map(), UlamGrid::new(8), 16, seed).unwrap();
        for r in s.operator(1.0).row_sums() {
            prop_assert!((r - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn leading_eigenvalue_is_relabeling_invariant(perm in Just((0..144usize).collect::<Vec<_>>()).prop_shuffle(), t in -0.5..2.0f64) {
        let op = small_sample().operator(t);
        let a = leading_eigen(&op, 1e-10, 100_000).unwrap().lambda;
        let b = leading_eigen(&op.relabeled(&perm), 1e-10, 100_000).unwrap().lambda;
        prop_assert!((a.ln() - b.ln()).abs() < 1e-8);
    }

    #[test]
    fn leading_eigenvalue_scales(s in 0.1..10.0f64) {
        let op = small_sample().operator(0.5);
        let a = leading_eigen(&op, 1e-10, 100_000).unwrap().lambda;
        let b = leading_eigen(&op.scaled(s), 1e-10, 100_000).unwrap().lambda;
        prop_assert!((b / (s * a) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn correlation_with_constant_vanishes(h in observable(), v in -3.0..3.0f64, seed in any::<u64>()) {
        let series = correlation_series(map(), &MeasureSampler::srb(), &h, &Observable::Constant { value: v }, 5, 100_000, seed);
        for &(_, c) in &series.values {
            prop_assert!(c.abs() <= series.noise_floor);
        }
        let dirac = correlation_series(map(), &MeasureSampler::Dirac, &h, &h, 5, 1_000, seed);
        prop_assert!(dirac.values.iter().all(|&(_, c)| c == 0.0));
    }
}
