//! Acceptance criteria at reduced sizes. `cargo test --test acceptance` runs the full sizes.

use almost_anosov::acceptance::{run_acceptance, AcceptanceSettings};
use almost_anosov::{AlmostAnosovMap, MapSpec};

fn main() {
    let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
    let run = run_acceptance(&f, &AcceptanceSettings::quick(1), |r| println!("{}", r.line()));
    println!("{} of {} pass (quick sizes)", run.passed(), run.results.len());
}
