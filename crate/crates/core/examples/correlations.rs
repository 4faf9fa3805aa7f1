//! Correlation decay and the central limit experiment, cat map vs the default map.

use almost_anosov::stats_lab::{clt_experiment, correlation_series, fit_exponential_decay, MeasureSampler, Observable};
use almost_anosov::{AlmostAnosovMap, MapSpec};

fn main() {
    let h = Observable::CosX { k: 1 };
    let g = Observable::Bump { cx: 0.5, cy: 0.5, radius: 0.25 };
    let maps = [
        ("cat", AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap()),
        ("default", AlmostAnosovMap::new(MapSpec::default()).unwrap()),
    ];
    for (name, f) in &maps {
        let s = correlation_series(f, &MeasureSampler::srb(), &g, &g, 10, 200_000, 1);
        let c: Vec<String> = s.values.iter().map(|(_, c)| format!("{c:.4}")).collect();
        println!("{name}: C_n = [{}]", c.join(", "));
        println!("  fit {:?}", fit_exponential_decay(&s, (1, 10)));
        let r = clt_experiment(f, &MeasureSampler::srb(), &h, 500, 2_000, 1);
        println!("  clt: sigma {:.3}, KS {:.4}", r.sigma, r.ks_distance);
    }
}
