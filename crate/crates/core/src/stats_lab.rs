//! Correlation decay and central limit experiments for Hölder observables
//! under sampled invariant measures.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::geometry::{distance_to_singularity, TorusPoint};
use crate::map_core::AlmostAnosovMap;
use crate::seed::task_rng;
use crate::thermo::MeasureOnGrid;
use crate::tower_stats::linear_fit;

/// Built-in observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// `cos(2 pi k x)`.
    CosX { k: u32 },
    /// `cos(2 pi k y)`.
    CosY { k: u32 },
    /// `max(0, 1 - (d(p, c) / radius)^2)^2`.
    Bump { cx: f64, cy: f64, radius: f64 },
    /// `d(p, 0)^power`, `0 < power <= 1`.
    DistPower { power: f64 },
    Constant { value: f64 },
}

impl Observable {
    pub fn eval(&self, p: &TorusPoint) -> f64 {
        use std::f64::consts::TAU;
        match *self {
            Observable::CosX { k } => (TAU * k as f64 * p.x()).cos(),
            Observable::CosY { k } => (TAU * k as f64 * p.y()).cos(),
            Observable::Bump { cx, cy, radius } => {
                let d = p.distance(&TorusPoint::new(cx, cy)) / radius;
                if d >= 1.0 {
                    0.0
                } else {
                    (1.0 - d * d).powi(2)
                }
            }
            Observable::DistPower { power } => distance_to_singularity(p).powf(power),
            Observable::Constant { value } => value,
        }
    }

    /// Declared Hölder `(exponent, constant)` for the torus distance.
    pub fn holder(&self) -> (f64, f64) {
        use std::f64::consts::TAU;
        match *self {
            Observable::CosX { k } | Observable::CosY { k } => (1.0, TAU * k as f64),
            Observable::Bump { radius, .. } => (1.0, 16.0 / (3.0 * 3f64.sqrt() * radius)),
            Observable::DistPower { power } => (power, 1.0),
            Observable::Constant { .. } => (1.0, 0.0),
        }
    }

    /// Parses `cosx`, `cosx:2`, `cosy`, `bump:x,y,r`, `dist:p`, `const:v`.
    pub fn parse(s: &str) -> Option<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            vec![]
        } else {
            args.split(',').map(|a| a.trim().parse().ok()).collect::<Option<_>>()?
        };
        match (name, nums.as_slice()) {
            ("cosx", []) => Some(Observable::CosX { k: 1 }),
            ("cosx", [k]) => Some(Observable::CosX { k: *k as u32 }),
            ("cosy", []) => Some(Observable::CosY { k: 1 }),
            ("cosy", [k]) => Some(Observable::CosY { k: *k as u32 }),
            ("bump", [x, y, r]) => Some(Observable::Bump { cx: *x, cy: *y, radius: *r }),
            ("dist", [p]) => Some(Observable::DistPower { power: *p }),
            ("const", [v]) => Some(Observable::Constant { value: *v }),
            _ => None,
        }
    }
}

/// Where sample points come from.
#[derive(Debug, Clone)]
pub enum MeasureSampler {
    /// Points along generic orbits: each chain starts uniformly, discards
    /// `burn_in` iterates and then keeps every `stride`-th point,
    /// `per_chain` points per chain.
    Srb { burn_in: usize, stride: usize, per_chain: usize },
    /// Cell drawn by weight, then uniform inside the cell.
    Ulam(MeasureOnGrid),
    /// The fixed point.
    Dirac,
}

impl MeasureSampler {
    pub fn srb() -> Self {
        MeasureSampler::Srb { burn_in: 10_000, stride: 50, per_chain: 64 }
    }

    /// One point per chain. Slower, but samples are independent even when
    /// orbits linger near the fixed point for longer than the stride.
    pub fn srb_independent() -> Self {
        MeasureSampler::Srb { burn_in: 10_000, stride: 50, per_chain: 1 }
    }

    pub fn is_orbit_based(&self) -> bool {
        matches!(self, MeasureSampler::Srb { .. })
    }
}

pub fn sample_measure(map: &AlmostAnosovMap, which: &MeasureSampler, count: usize, seed: u64) -> Vec<TorusPoint> {
    match which {
        MeasureSampler::Dirac => vec![TorusPoint::ORIGIN; count],
        MeasureSampler::Srb { burn_in, stride, per_chain } => {
            let per_chain = (*per_chain).max(1);
            let chains = count.div_ceil(per_chain);
            let mut pts: Vec<TorusPoint> = (0..chains)
                .into_par_iter()
                .flat_map_iter(|c| {
                    let mut rng = task_rng(seed, "srb-chain", c as u64);
                    let mut p = map.iterate(&TorusPoint::new(rng.gen(), rng.gen()), *burn_in);
                    let mut out = Vec::with_capacity(per_chain);
                    for _ in 0..per_chain {
                        out.push(p);
                        p = map.iterate(&p, *stride);
                    }
                    out
                })
                .collect();
            pts.truncate(count);
            pts
        }
        MeasureSampler::Ulam(mu) => {
            let cdf = mu.cumulative();
            let total = *cdf.last().unwrap_or(&1.0);
            let h = 1.0 / mu.grid.n as f64;
            let mut rng = task_rng(seed, "ulam-sample", 0);
            (0..count)
                .map(|_| {
                    let u = rng.gen::<f64>() * total;
                    let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                    let (i, j) = mu.grid.coords(k);
                    TorusPoint::new((i as f64 + rng.gen::<f64>()) * h, (j as f64 + rng.gen::<f64>()) * h)
                })
                .collect()
        }
    }
}

/// Mean computed as `v_0 + mean(v - v_0)`, exact for constant data.
fn shifted_mean(v: &[f64]) -> f64 {
    match v.first() {
        None => 0.0,
        Some(&v0) => v0 + v.iter().map(|x| x - v0).sum::<f64>() / v.len() as f64,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSeries {
    /// `(n, C_n)` for `n = 0..=n_max`.
    pub values: Vec<(usize, f64)>,
    pub orbit_len: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// `3 / sqrt(orbit_len)`.
    pub noise_floor: f64,
}

/// `C_n = <h1(f^n x) h2(x)> - <h1><h2>`.
///
/// For orbit-based samplers the average runs along one orbit of length
/// `orbit_len` started at a sampled point; otherwise over `orbit_len`
/// independent samples, each iterated `n` times.
pub fn correlation_series(
    map: &AlmostAnosovMap,
    sampler: &MeasureSampler,
    h1: &Observable,
    h2: &Observable,
    n_max: usize,
    orbit_len: usize,
    seed: u64,
) -> CorrelationSeries {
    let burn_in = match sampler {
        MeasureSampler::Srb { burn_in, .. } => *burn_in,
        _ => 0,
    };
    let values = if sampler.is_orbit_based() {
        let start = sample_measure(map, sampler, 1, seed)[0];
        let mut orbit = Vec::with_capacity(orbit_len + n_max);
        let mut p = start;
        for _ in 0..orbit_len + n_max {
            orbit.push(p);
            p = map.apply(&p);
        }
        let a: Vec<f64> = orbit.iter().map(|q| h1.eval(q)).collect();
        let b: Vec<f64> = orbit[..orbit_len].iter().map(|q| h2.eval(q)).collect();
        let mb = shifted_mean(&b);
        let db: Vec<f64> = b.iter().map(|v| v - mb).collect();
        (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let win = &a[n..n + orbit_len];
                let ma = shifted_mean(win);
                let c = win.iter().zip(&db).map(|(x, y)| (x - ma) * y).sum::<f64>() / orbit_len as f64;
                (n, c)
            })
            .collect()
    } else {
        let starts = sample_measure(map, sampler, orbit_len, seed);
        let b: Vec<f64> = starts.iter().map(|q| h2.eval(q)).collect();
        let mb = shifted_mean(&b);
        let mut cur = starts;
        let mut out = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let a: Vec<f64> = cur.iter().map(|q| h1.eval(q)).collect();
            let ma = shifted_mean(&a);
            let c = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / orbit_len as f64;
            out.push((n, c));
            cur = cur.par_iter().map(|q| map.apply(q)).collect();
        }
        out
    };
    CorrelationSeries { values, orbit_len, burn_in, seed, noise_floor: 3.0 / (orbit_len as f64).sqrt() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DecayFit {
    Fitted { c: f64, kappa: f64, r_squared: f64, points: usize },
    /// Fewer than five points above the noise floor; `first_below` is the
    /// first `n` in range with `|C_n|` under the floor.
    DecayedToNoise { first_below: Option<usize> },
}

impl DecayFit {
    /// Fitted with `kappa < 1` and `R^2 >= 0.9`, or decayed to noise by `n = 10`.
    pub fn shows_exponential_decay(&self) -> bool {
        match *self {
            DecayFit::Fitted { kappa, r_squared, .. } => kappa < 1.0 && r_squared >= 0.9,
            DecayFit::DecayedToNoise { first_below } => first_below.is_some_and(|n| n <= 10),
        }
    }
}

/// Least squares on `log |C_n|` over `n_range` using points above the noise floor.
pub fn fit_exponential_decay(series: &CorrelationSeries, n_range: (usize, usize)) -> DecayFit {
    fit_decay_values(&series.values, series.noise_floor, n_range)
}

pub fn fit_decay_values(values: &[(usize, f64)], noise_floor: f64, n_range: (usize, usize)) -> DecayFit {
    let in_range: Vec<(usize, f64)> = values.iter().copied().filter(|(n, _)| (n_range.0..=n_range.1).contains(n)).collect();
    let first_below = in_range.iter().find(|(_, c)| c.abs() <= noise_floor).map(|(n, _)| *n);
    let (xs, ys): (Vec<f64>, Vec<f64>) = in_range
        .iter()
        .filter(|(_, c)| c.abs() > noise_floor)
        .map(|&(n, c)| (n as f64, c.abs().ln()))
        .unzip();
    if xs.len() < 5 {
        return DecayFit::DecayedToNoise { first_below };
    }
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    DecayFit::Fitted { c: intercept.exp(), kappa: slope.exp(), r_squared, points: xs.len() }
}

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub sigma: f64,
    pub ks_distance: f64,
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    /// `sigma == 0`: the observable looks like a coboundary.
    pub coboundary_candidate: bool,
    /// `(bin_center, density)` of the normalized sums.
    pub histogram: Vec<(f64, f64)>,
}

/// Kolmogorov-Smirnov distance between the sample and `N(0, sigma^2)`.
pub fn ks_distance_normal(sample: &[f64], sigma: f64) -> f64 {
    let normal = Normal::new(0.0, sigma).expect("sigma > 0");
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

fn histogram(z: &[f64], sigma: f64, bins: usize) -> Vec<(f64, f64)> {
    let half = 4.0 * sigma;
    let w = 2.0 * half / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in z {
        let k = ((v + half) / w).floor();
        if k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        }
    }
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (-half + (k as f64 + 0.5) * w, c as f64 / (z.len() as f64 * w)))
        .collect()
}

/// Normalized Birkhoff sums `(1/sqrt n) sum_{i<n} (h(f^i x) - mean)` over
/// `trials` sampled starts. With the orbit sampler every trial gets its own
/// chain, so trials are independent.
pub fn clt_experiment(
    map: &AlmostAnosovMap,
    sampler: &MeasureSampler,
    h: &Observable,
    n: usize,
    trials: usize,
    seed: u64,
) -> CltReport {
    let sampler = match sampler {
        MeasureSampler::Srb { burn_in, stride, .. } => MeasureSampler::Srb { burn_in: *burn_in, stride: *stride, per_chain: 1 },
        other => other.clone(),
    };
    let starts = sample_measure(map, &sampler, trials, seed);
    let sums: Vec<f64> = starts
        .par_iter()
        .map(|x| {
            let mut p = *x;
            let mut s = 0.0;
            for _ in 0..n {
                s += h.eval(&p);
                p = map.apply(&p);
            }
            s
        })
        .collect();
    let mean = shifted_mean(&sums) / n as f64;
    let sq = (n as f64).sqrt();
    let z: Vec<f64> = sums.iter().map(|s| (s - n as f64 * mean) / sq).collect();
    let zm = shifted_mean(&z);
    let var = z.iter().map(|v| (v - zm).powi(2)).sum::<f64>() / (z.len().max(2) - 1) as f64;
    let sigma = var.sqrt();
    let coboundary_candidate = !(sigma > 1e-12);
    let (ks_distance, histogram) = if coboundary_candidate {
        (1.0, vec![])
    } else {
        (ks_distance_normal(&z, sigma), histogram(&z, sigma, 40))
    };
    CltReport { sigma, ks_distance, n, trials, mean, coboundary_candidate, histogram }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::MapSpec;
    use crate::thermo::UlamGrid;
    use statrs::distribution::ChiSquared;

    fn cat() -> AlmostAnosovMap {
        AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap()
    }

    #[test]
    fn observables_and_parsing() {
        let p = TorusPoint::new(0.25, 0.5);
        assert!(Observable::CosX { k: 1 }.eval(&p).abs() < 1e-15);
        assert_eq!(Observable::CosY { k: 1 }.eval(&p), -1.0);
        assert_eq!(Observable::Bump { cx: 0.25, cy: 0.5, radius: 0.1 }.eval(&p), 1.0);
        assert_eq!(Observable::DistPower { power: 1.0 }.eval(&TorusPoint::ORIGIN), 0.0);
        assert_eq!(Observable::parse("cosx:3"), Some(Observable::CosX { k: 3 }));
        assert_eq!(Observable::parse("bump:0.5,0.5,0.1"), Some(Observable::Bump { cx: 0.5, cy: 0.5, radius: 0.1 }));
        assert_eq!(Observable::parse("nope"), None);
    }

    #[test]
    fn dirac_and_determinism() {
        let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
        assert!(sample_measure(&f, &MeasureSampler::Dirac, 10, 1).iter().all(|p| *p == TorusPoint::ORIGIN));
        let a = sample_measure(&f, &MeasureSampler::srb(), 200, 3);
        assert_eq!(a, sample_measure(&f, &MeasureSampler::srb(), 200, 3));
        let s = correlation_series(&f, &MeasureSampler::Dirac, &Observable::CosX { k: 1 }, &Observable::CosY { k: 1 }, 5, 1000, 1);
        assert!(s.values.iter().all(|&(_, c)| c == 0.0));
    }

    #[test]
    fn cat_srb_samples_look_uniform() {
        let f = cat();
        let pts = sample_measure(&f, &MeasureSampler::srb(), 6400, 5);
        let g = UlamGrid::new(8);
        let mut counts = vec![0.0; 64];
        for p in &pts {
            counts[g.cell_of(p)] += 1.0;
        }
        let e = 100.0;
        let chi2: f64 = counts.iter().map(|c| (c - e) * (c - e) / e).sum();
        let crit = ChiSquared::new(63.0).unwrap().inverse_cdf(0.999);
        assert!(chi2 < crit, "{chi2} vs {crit}");
    }

    #[test]
    fn constant_observable_gives_zero_correlation() {
        let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
        let s = correlation_series(&f, &MeasureSampler::srb(), &Observable::CosX { k: 1 }, &Observable::Constant { value: 1.0 }, 10, 100_000, 2);
        assert!(s.values.iter().all(|&(_, c)| c.abs() <= s.noise_floor));
        let h = Observable::CosX { k: 1 };
        let g = Observable::Bump { cx: 0.3, cy: 0.6, radius: 0.2 };
        let a = correlation_series(&f, &MeasureSampler::srb(), &h, &g, 0, 100_000, 2);
        let b = correlation_series(&f, &MeasureSampler::srb(), &g, &h, 0, 100_000, 2);
        assert!((a.values[0].1 - b.values[0].1).abs() < 1e-12);
    }

    #[test]
    fn synthetic_decay_fits() {
        let geo: Vec<(usize, f64)> = (0..=30).map(|n| (n, 0.8f64.powi(n as i32))).collect();
        match fit_decay_values(&geo, 1e-6, (1, 30)) {
            DecayFit::Fitted { kappa, r_squared, .. } => {
                assert!((kappa - 0.8).abs() < 0.01);
                assert!(r_squared > 0.999);
            }
            other => panic!("{other:?}"),
        }
        let poly: Vec<(usize, f64)> = (1..=30).map(|n| (n, 1.0 / (n * n) as f64)).collect();
        let fit = fit_decay_values(&poly, 1e-6, (1, 30));
        assert!(!fit.shows_exponential_decay(), "{fit:?}");
        let zero: Vec<(usize, f64)> = (0..=30).map(|n| (n, 0.0)).collect();
        assert_eq!(fit_decay_values(&zero, 1e-3, (1, 30)), DecayFit::DecayedToNoise { first_below: Some(1) });
    }

    #[test]
    fn clt_zero_observable_is_flagged() {
        let f = cat();
        let r = clt_experiment(&f, &MeasureSampler::srb(), &Observable::Constant { value: 0.0 }, 1000, 200, 1);
        assert_eq!(r.sigma, 0.0);
        assert!(r.coboundary_candidate);
    }

    #[test]
    fn cat_clt_is_gaussian() {
        let f = cat();
        let r = clt_experiment(&f, &MeasureSampler::srb(), &Observable::CosX { k: 1 }, 1000, 4000, 7);
        assert!(!r.coboundary_candidate);
        // cos(2 pi x) is uncorrelated with its images under the cat map, so sigma^2 = 1/2
        assert!((r.sigma - 0.5f64.sqrt()).abs() < 0.05, "{r:?}");
        assert!(r.ks_distance < 0.05);
    }

    #[test]
    fn cat_clt_sigma_and_ks_stabilize() {
        let f = cat();
        let h = Observable::CosX { k: 1 };
        let s1 = clt_experiment(&f, &MeasureSampler::srb(), &h, 1000, 2000, 3).sigma;
        let s2 = clt_experiment(&f, &MeasureSampler::srb(), &h, 2000, 2000, 3).sigma;
        assert!((s2 - s1).abs() / s1 < 0.1, "{s1} {s2}");
        let small = clt_experiment(&f, &MeasureSampler::srb(), &h, 200, 500, 4).ks_distance;
        let large = clt_experiment(&f, &MeasureSampler::srb(), &h, 200, 4000, 4).ks_distance;
        assert!(large <= small + 0.01, "{small} {large}");
    }
}
