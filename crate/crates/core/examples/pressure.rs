//! Pressure curve, SRB density and entropy from the Ulam operator.

use almost_anosov::thermo::{
    entropy_estimate, margulis_ruelle_check, pressure_point, srb_density_from, TransitionSample, UlamGrid,
    DEFAULT_EIGEN_MAX_ITER, DEFAULT_EIGEN_TOL,
};
use almost_anosov::stats_lab::{sample_measure, MeasureSampler};
use almost_anosov::{AlmostAnosovMap, MapSpec};

fn main() {
    let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
    let sample = TransitionSample::build(&f, UlamGrid::new(128), 32, 1).unwrap();
    println!("t,pressure,origin_mass,branch,punctured");
    for t in [-0.5, 0.0, 0.5, 1.0, 1.5, 2.0] {
        let p = pressure_point(&f, &sample, t, DEFAULT_EIGEN_TOL, DEFAULT_EIGEN_MAX_ITER);
        println!("{t},{:.5},{:.4},{:?},{:.5}", p.pressure, p.origin_mass, p.branch, p.punctured_pressure);
    }

    let mu = srb_density_from(&sample, DEFAULT_EIGEN_TOL, DEFAULT_EIGEN_MAX_ITER).unwrap();
    let starts = sample_measure(&f, &MeasureSampler::srb_independent(), 200, 1);
    let h = entropy_estimate(&f, &starts, 12, 1_000_000);
    let mr = margulis_ruelle_check(&sample, &mu, h.value);
    println!("entropy {:.4}, lambda_u {:.4}, Margulis-Ruelle holds: {}", mr.entropy, mr.lyapunov, mr.inequality_holds);
}
