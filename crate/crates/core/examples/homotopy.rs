//! Anosov approximants H_eps of the almost Anosov map.

use almost_anosov::homotopy::{build_homotopy_member, build_margin_field, support_radius, verify_homotopy};
use almost_anosov::{AlmostAnosovMap, MapSpec, TorusPoint};

fn main() {
    let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
    let field = build_margin_field(&f, 32, 64).unwrap();
    for frac in [1.0, 0.5, 0.2] {
        let h = build_homotopy_member(&f, &field, frac * f.r0()).unwrap();
        let v = verify_homotopy(&h, 64);
        println!(
            "eps = {:.1e}: support {:.2e}, C0 distance {:.3e}, {} points, hyperbolic {}",
            h.epsilon,
            support_radius(&h),
            v.c0_distance,
            v.checked,
            v.all_hyperbolic
        );
        println!("  DH(0) = {}", h.differential(&TorusPoint::ORIGIN));
    }
}
