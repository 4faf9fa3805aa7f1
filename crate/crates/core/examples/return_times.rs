//! First-return statistics and tower checks for the default rectangle.

use almost_anosov::tower_stats::{
    check_arithmetic_condition, check_contraction, fit_tail_rate, return_time_histogram, stable_pairs, Rectangle,
};
use almost_anosov::{AlmostAnosovMap, MapSpec};

fn main() {
    let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
    let rect = Rectangle::default_for(&f);
    let hist = return_time_histogram(&f, &rect, 20_000, 200, 1);
    println!(
        "mean return {:.1} (Kac for Lebesgue: {:.1}), min {:?}, timeouts {:.1}%",
        hist.mean_return_time(),
        1.0 / rect.area(),
        hist.min_return_time(),
        100.0 * hist.timeout_fraction()
    );
    if let Ok(fit) = fit_tail_rate(&hist) {
        println!("tail: h = {:.4}, R^2 = {:.3} over {:?}", fit.h_fit, fit.r_squared, fit.n_range);
    }
    println!("gcd = {}", check_arithmetic_condition(&hist));

    let pairs = stable_pairs(&f, &rect, 200, 1);
    let c = check_contraction(&f, &rect, &pairs, 5_000);
    println!("contraction: worst a = {:.4} over {} pairs", c.worst_a, c.used);
}
