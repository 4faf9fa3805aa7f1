//! Invariant splitting, local manifolds, the bracket and Lyapunov exponents.

use almost_anosov::cone_dynamics::{
    bracket, local_manifold, lyapunov_exponent, stable_direction, unstable_direction, Side,
};
use almost_anosov::{AlmostAnosovMap, MapSpec, TorusPoint};

fn main() {
    let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
    for p in [TorusPoint::new(0.5, 0.5), TorusPoint::new(0.01, 0.002)] {
        let u = unstable_direction(&f, &p, 40).direction;
        let s = stable_direction(&f, &p, 40).direction;
        println!("{p:?}: E^u angle {:.4}, E^s angle {:.4}", u.angle(), s.angle());
    }

    let p = TorusPoint::new(0.3, 0.7);
    let wu = local_manifold(&f, &p, Side::Unstable, 0.05, 11).unwrap();
    let ws = local_manifold(&f, &p, Side::Stable, 0.05, 11).unwrap();
    println!("W^u ends {:?} .. {:?}", wu.points()[0], wu.points()[10]);
    println!("W^s ends {:?} .. {:?}", ws.points()[0], ws.points()[10]);

    let z = bracket(&f, &p, &TorusPoint::new(0.31, 0.705), 0.05).unwrap();
    println!("[x, y] = {z:?}");

    // orbits linger near the indifferent fixed point, pulling the average down
    for k in 0..3 {
        let p0 = TorusPoint::new(0.1 + 0.2 * k as f64, 0.37);
        let l = lyapunov_exponent(&f, &p0, 200_000, 1_000).unwrap();
        println!("lambda_u from {p0:?}: {l:.4}");
    }
}
