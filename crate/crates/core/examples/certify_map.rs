//! Build the default map, validate it and run the pointwise certificates.

use almost_anosov::map_core::{check_cone_invariance, sweep_hyperbolicity, DEFAULT_CONE_HALF_ANGLE};
use almost_anosov::{AlmostAnosovMap, MapSpec, TorusPoint};

fn main() {
    let spec = MapSpec::default();
    println!("{}", spec.to_json());
    for w in spec.glue_warnings() {
        println!("warning: {w}");
    }
    let f = AlmostAnosovMap::new(spec).expect("default spec is valid");

    let p = TorusPoint::new(0.003, 0.001);
    println!("f({p:?}) = {:?}", f.apply(&p));
    println!("Df(0) = {}", f.differential(&TorusPoint::ORIGIN));

    let sweep = sweep_hyperbolicity(&f, 256, 1e-3);
    println!(
        "sweep 256^2: {} checked, {} failures, worst margin {:.3e} at {:?}",
        sweep.checked, sweep.failures, sweep.worst_margin, sweep.worst_point
    );
    let cones = check_cone_invariance(&f, DEFAULT_CONE_HALF_ANGLE, 5_000);
    println!(
        "15 deg cones: {} inner / {} annulus / {} linear violations",
        cones.violations_inner, cones.violations_annulus, cones.violations_linear
    );
}
