//! The acceptance criteria AC-1..AC-13 as reusable checks.
//!
//! [`run_acceptance`] evaluates every criterion against one map and returns
//! the verdicts together with the data products of each stage, so the CLI can
//! write them out without recomputing.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::cone_dynamics::{log_unstable_jacobian, lyapunov_exponent};
use crate::geometry::{distance_to_singularity, TorusPoint};
use crate::homotopy::{homotopy_sweep, HomotopyVerification};
use crate::map_core::{sweep_hyperbolicity, AlmostAnosovMap};
use crate::seed::task_rng;
use crate::stats_lab::{
    clt_experiment, correlation_series, fit_exponential_decay, sample_measure, CltReport, CorrelationSeries, DecayFit,
    MeasureSampler, Observable,
};
use crate::thermo::{
    entropy_estimate, margulis_ruelle_check, pressure_point, srb_density_from, MargulisRuelleReport, MeasureOnGrid,
    PressureCurve, TransitionSample, UlamGrid, ENTROPY_CAP,
};
use crate::tower_stats::{
    check_arithmetic_condition, check_contraction, check_distortion, fit_tail_rate, return_time_histogram,
    stable_pairs, ContractionReport, DistortionReport, Rectangle, ReturnTimeHistogram, TailFit, DEFAULT_N_MAX,
};

/// `log((3 + sqrt 5) / 2)`.
pub const LOG_GOLDEN: f64 = 0.962_423_650_119_206_9;

/// Slack allowed in the Dirac-trend monotonicity, matching the eigen tolerance.
pub const TREND_SLACK: f64 = 1e-4;

/// Criteria that fail on the default map for reasons documented in the
/// README (intermittency at the indifferent fixed point).
pub const KNOWN_FAILURES: &[&str] = &["AC-4", "AC-9", "AC-10"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Sizes exactly as stated in the criteria.
    Full,
    /// Reduced sizes for smoke runs; verdicts are indicative only.
    Quick,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceSettings {
    pub preset: Preset,
    pub seed: u64,
    pub random_points: usize,
    pub sweep_grid: usize,
    pub sweep_exclusion: f64,
    pub lyapunov_len: usize,
    pub lyapunov_burn_in: usize,
    pub ulam_grid: usize,
    pub samples_per_cell: usize,
    pub pressure_t: Vec<f64>,
    pub return_samples: usize,
    pub return_n_max: usize,
    pub pairs: usize,
    pub compositions: usize,
    pub pair_n_max: usize,
    pub clt_n: usize,
    pub clt_trials: usize,
    pub corr_orbit_len: usize,
    pub corr_n_max: usize,
    pub homotopy_fractions: Vec<f64>,
    pub homotopy_grid: usize,
    pub margin_radial: usize,
    pub margin_angular: usize,
    pub entropy_starts: usize,
    pub entropy_word: usize,
}

impl AcceptanceSettings {
    pub fn full(seed: u64) -> Self {
        Self {
            preset: Preset::Full,
            seed,
            random_points: 10_000,
            sweep_grid: 512,
            sweep_exclusion: 1e-3,
            lyapunov_len: 1_000_000,
            lyapunov_burn_in: 1_000,
            ulam_grid: 256,
            samples_per_cell: 64,
            pressure_t: vec![-0.5, 0.0, 0.5, 1.0, 1.2, 1.5, 2.0],
            return_samples: 100_000,
            return_n_max: 200,
            pairs: 1_000,
            compositions: 8,
            pair_n_max: DEFAULT_N_MAX,
            clt_n: 1_000,
            clt_trials: 10_000,
            corr_orbit_len: 1_000_000,
            corr_n_max: 30,
            homotopy_fractions: vec![1.0, 0.5, 0.2],
            homotopy_grid: 64,
            margin_radial: 32,
            margin_angular: 64,
            entropy_starts: 400,
            entropy_word: 12,
        }
    }

    pub fn quick(seed: u64) -> Self {
        Self {
            preset: Preset::Quick,
            random_points: 2_000,
            sweep_grid: 128,
            lyapunov_len: 100_000,
            ulam_grid: 64,
            samples_per_cell: 32,
            return_samples: 10_000,
            pairs: 100,
            compositions: 4,
            pair_n_max: 2_000,
            clt_trials: 1_000,
            corr_orbit_len: 100_000,
            homotopy_grid: 24,
            margin_radial: 16,
            margin_angular: 32,
            entropy_starts: 60,
            entropy_word: 8,
            ..Self::full(seed)
        }
    }

    pub fn for_preset(preset: Preset, seed: u64) -> Self {
        match preset {
            Preset::Full => Self::full(seed),
            Preset::Quick => Self::quick(seed),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AcResult {
    pub id: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    pub seconds: f64,
}

impl AcResult {
    /// One line: `AC-n PASS|FAIL title: detail (time)`.
    pub fn line(&self) -> String {
        format!(
            "{:<6} {} {}: {} ({:.1} s)",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.seconds
        )
    }

    pub fn number(&self) -> u32 {
        self.id.trim_start_matches("AC-").parse().unwrap_or(0)
    }
}

/// Stage outputs kept for writing to disk.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub homotopy: Vec<HomotopyVerification>,
    pub returns: Option<ReturnTimeHistogram>,
    pub tail: Option<TailFit>,
    pub contraction: Option<ContractionReport>,
    pub distortion: Option<DistortionReport>,
    pub pressure: Option<PressureCurve>,
    pub srb: Option<MeasureOnGrid>,
    pub margulis_ruelle: Option<MargulisRuelleReport>,
    pub correlations: Option<CorrelationSeries>,
    pub decay: Option<DecayFit>,
    pub clt: Option<CltReport>,
}

#[derive(Debug, Clone)]
pub struct AcceptanceRun {
    /// Sorted by criterion number.
    pub results: Vec<AcResult>,
    pub artifacts: Artifacts,
    /// `(stage, seconds)` in execution order.
    pub stage_seconds: Vec<(&'static str, f64)>,
}

impl AcceptanceRun {
    pub fn get(&self, id: &str) -> Option<&AcResult> {
        self.results.iter().find(|r| r.id == id)
    }

    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.pass).count()
    }
}

struct Builder {
    id: &'static str,
    title: &'static str,
    start: Instant,
    metrics: BTreeMap<String, f64>,
}

impl Builder {
    fn new(id: &'static str, title: &'static str) -> Self {
        Self { id, title, start: Instant::now(), metrics: BTreeMap::new() }
    }

    fn metric(mut self, k: &str, v: f64) -> Self {
        self.metrics.insert(k.to_string(), v);
        self
    }

    fn finish(self, pass: bool, detail: String) -> AcResult {
        AcResult {
            id: self.id,
            title: self.title,
            pass,
            detail,
            metrics: self.metrics,
            seconds: self.start.elapsed().as_secs_f64(),
        }
    }
}

fn random_points(seed: u64, label: &str, count: usize) -> Vec<TorusPoint> {
    let mut rng = task_rng(seed, label, 0);
    (0..count).map(|_| TorusPoint::new(rng.gen(), rng.gen())).collect()
}

pub fn ac1_identity_at_origin(map: &AlmostAnosovMap) -> AcResult {
    let b = Builder::new("AC-1", "identity at the singularity");
    let err = (map.differential(&TorusPoint::ORIGIN) - crate::geometry::Mat2::IDENTITY).max_abs();
    b.metric("max_abs_error", err).finish(err <= 1e-12, format!("|Df(0) - I| = {err:.2e} (<= 1e-12)"))
}

pub fn ac2_linear_agreement(map: &AlmostAnosovMap, s: &AcceptanceSettings) -> AcResult {
    let b = Builder::new("AC-2", "linear agreement outside B_r1");
    let a = map.matrix();
    let r1 = map.r1();
    let mut rng = task_rng(s.seed, "ac2", 0);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    while used < s.random_points {
        let p = TorusPoint::new(rng.gen(), rng.gen());
        if distance_to_singularity(&p) < r1 {
            continue;
        }
        used += 1;
        let lin = TorusPoint::from_vec(a.apply(p.coords()));
        worst = worst.max(map.apply(&p).distance(&lin));
    }
    b.metric("max_error", worst).metric("points", used as f64).finish(
        worst <= 1e-12,
        format!("max |f(p) - Ap| = {worst:.2e} over {used} points (<= 1e-12)"),
    )
}

pub fn ac3_hyperbolicity_sweep(map: &AlmostAnosovMap, s: &AcceptanceSettings) -> AcResult {
    let b = Builder::new("AC-3", "hyperbolicity sweep");
    let r = sweep_hyperbolicity(map, s.sweep_grid, s.sweep_exclusion);
    b.metric("checked", r.checked as f64)
        .metric("failures", r.failures as f64)
        .metric("pass_fraction", r.pass_fraction())
        .metric("min_det", r.min_det)
        .finish(
            r.all_pass(),
            format!(
                "{}^2 grid, {} checked, {} failures, min det {:.3e}",
                s.sweep_grid, r.checked, r.failures, r.min_det
            ),
        )
}

pub fn ac4_lyapunov(map: &AlmostAnosovMap, s: &AcceptanceSettings) -> AcResult {
    let b = Builder::new("AC-4", "unstable Lyapunov exponent");
    let p0 = random_points(s.seed, "ac4", 1)[0];
    match lyapunov_exponent(map, &p0, s.lyapunov_len, s.lyapunov_burn_in) {
        Ok(l) => {
            let rel = (l - LOG_GOLDEN).abs() / LOG_GOLDEN;
            b.metric("lyapunov", l).metric("relative_error", rel).finish(
                rel <= 0.1,
                format!("lambda_u = {l:.4} vs {LOG_GOLDEN:.4}, rel. error {:.1}% (<= 10%)", 100.0 * rel),
            )
        }
        Err(e) => b.finish(false, format!("orbit failed: {e}")),
    }
}

struct PressureOutcome {
    result: AcResult,
    curve: PressureCurve,
    sample: TransitionSample,
}

fn ac5_pressure(map: &AlmostAnosovMap, s: &AcceptanceSettings) -> Result<PressureOutcome, AcResult> {
    let b = Builder::new("AC-5", "pressure regimes");
    let sample = match TransitionSample::build(map, UlamGrid::new(s.ulam_grid), s.samples_per_cell, s.seed) {
        Ok(x) => x,
        Err(e) => return Err(b.finish(false, format!("operator: {e}"))),
    };
    let mut ts = s.pressure_t.clone();
    for t in [0.0, 1.0, 1.2, 1.5, 2.0] {
        if !ts.iter().any(|&u| u == t) {
            ts.push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    let points: Vec<_> = ts
        .iter()
        .map(|&t| pressure_point(map, &sample, t, crate::thermo::DEFAULT_EIGEN_TOL, crate::thermo::DEFAULT_EIGEN_MAX_ITER))
        .collect();
    let curve = PressureCurve { points };
    let p0 = curve.at(0.0).expect("t = 0 present");
    let p1 = curve.at(1.0).expect("t = 1 present");
    let rel0 = (p0.pressure - LOG_GOLDEN).abs() / LOG_GOLDEN;
    let ok_a = rel0 <= 0.05 && p0.converged;
    let ok_b = p1.pressure.abs() <= 0.02 && p1.converged;
    let trend: Vec<f64> = [1.0, 1.2, 1.5, 2.0].iter().map(|&t| curve.at(t).expect("present").origin_mass).collect();
    let mono = trend.windows(2).all(|w| w[1] >= w[0] - TREND_SLACK);
    let at15 = trend[2];
    let ok_c = mono && at15 >= 0.5;
    let result = b
        .metric("p0", p0.pressure)
        .metric("p1", p1.pressure)
        .metric("origin_mass_1.0", trend[0])
        .metric("origin_mass_1.2", trend[1])
        .metric("origin_mass_1.5", trend[2])
        .metric("origin_mass_2.0", trend[3])
        .finish(
            ok_a && ok_b && ok_c,
            format!(
                "(a) P(0) = {:.4} [{}] (b) P(1) = {:.4} [{}] (c) origin mass {:.4}, {:.4}, {:.4}, {:.4} [{}]",
                p0.pressure,
                verdict(ok_a),
                p1.pressure,
                verdict(ok_b),
                trend[0],
                trend[1],
                trend[2],
                trend[3],
                verdict(ok_c)
            ),
        );
    Ok(PressureOutcome { result, curve, sample })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "fail"
    }
}

fn ac6_ac7_returns(map: &AlmostAnosovMap, s: &AcceptanceSettings) -> (AcResult, AcResult, ReturnTimeHistogram, Option<TailFit>) {
    let b6 = Builder::new("AC-6", "return-time tail bound");
    let rect = Rectangle::default_for(map);
    let hist = return_time_histogram(map, &rect, s.return_samples, s.return_n_max, s.seed);
    let fit = fit_tail_rate(&hist).ok();
    let ac6 = match fit {
        Some(f) => b6
            .metric("h_fit", f.h_fit)
            .metric("r_squared", f.r_squared)
            .metric("timeout_fraction", hist.timeout_fraction())
            .finish(
                f.r_squared >= 0.8 && f.h_fit < LOG_GOLDEN,
                format!(
                    "h = {:.4} (< {LOG_GOLDEN:.4}), R^2 = {:.3} (>= 0.8), timeouts {:.1}%",
                    f.h_fit,
                    f.r_squared,
                    100.0 * hist.timeout_fraction()
                ),
            ),
        None => b6.finish(false, "too few populated bins to fit".into()),
    };
    let b7 = Builder::new("AC-7", "arithmetic condition");
    let g = check_arithmetic_condition(&hist);
    let ac7 = b7.metric("gcd", g as f64).finish(g == 1, format!("gcd of return times = {g}"));
    (ac6, ac7, hist, fit)
}

fn ac8_contraction_distortion(
    map: &AlmostAnosovMap,
    s: &AcceptanceSettings,
) -> (AcResult, ContractionReport, DistortionReport) {
    let b = Builder::new("AC-8", "contraction and distortion");
    let rect = Rectangle::default_for(map);
    let pairs = stable_pairs(map, &rect, s.pairs, s.seed);
    let c = check_contraction(map, &rect, &pairs, s.pair_n_max);
    let d = check_distortion(map, &rect, &pairs, s.compositions, s.pair_n_max);
    let r = b
        .metric("worst_a", c.worst_a)
        .metric("kappa", d.kappa)
        .metric("r_squared", d.r_squared)
        .finish(
            c.pass() && d.pass(),
            format!(
                "a = {:.4} over {} pairs (< 1); distortion kappa = {:.3e}, R^2 = {:.3}",
                c.worst_a, c.used, d.kappa, d.r_squared
            ),
        );
    (r, c, d)
}

fn ac9_clt(map: &AlmostAnosovMap, s: &AcceptanceSettings) -> (AcResult, CltReport) {
    let b = Builder::new("AC-9", "central limit theorem");
    let r = clt_experiment(map, &MeasureSampler::srb(), &Observable::CosX { k: 1 }, s.clt_n, s.clt_trials, s.seed);
    let res = b.metric("sigma", r.sigma).metric("ks_distance", r.ks_distance).finish(
        r.ks_distance < 0.05 && r.sigma > 0.0,
        format!("sigma = {:.4} (> 0), KS = {:.4} (< 0.05), n = {}, trials = {}", r.sigma, r.ks_distance, r.n, r.trials),
    );
    (res, r)
}

fn ac10_correlations(map: &AlmostAnosovMap, s: &AcceptanceSettings) -> (AcResult, CorrelationSeries, DecayFit) {
    let b = Builder::new("AC-10", "correlation decay");
    let h = Observable::CosX { k: 1 };
    let series = correlation_series(map, &MeasureSampler::srb(), &h, &h, s.corr_n_max, s.corr_orbit_len, s.seed);
    let fit = fit_exponential_decay(&series, (1, s.corr_n_max));
    let detail = match fit {
        DecayFit::Fitted { kappa, r_squared, .. } => {
            format!("kappa = {kappa:.4} (< 1), R^2 = {r_squared:.3} (>= 0.9) over n in [1, {}]", s.corr_n_max)
        }
        DecayFit::DecayedToNoise { first_below } => format!("decayed to noise at n = {first_below:?}"),
    };
    let b = match fit {
        DecayFit::Fitted { kappa, r_squared, .. } => b.metric("kappa", kappa).metric("r_squared", r_squared),
        DecayFit::DecayedToNoise { .. } => b,
    };
    (b.finish(fit.shows_exponential_decay(), detail), series, fit)
}

pub fn ac11_inverse_round_trip(map: &AlmostAnosovMap, s: &AcceptanceSettings) -> AcResult {
    let b = Builder::new("AC-11", "inverse round trip");
    let mut worst: f64 = 0.0;
    let mut failed = 0;
    for p in random_points(s.seed, "ac11", s.random_points) {
        match map.apply_inverse(&map.apply(&p)) {
            Ok(q) => worst = worst.max(q.distance(&p)),
            Err(_) => failed += 1,
        }
    }
    b.metric("max_error", worst).metric("inverse_failures", failed as f64).finish(
        failed == 0 && worst <= 1e-10,
        format!("max |f^-1(f(p)) - p| = {worst:.2e} (<= 1e-10), {failed} inverse failures"),
    )
}

fn ac12_homotopy(map: &AlmostAnosovMap, s: &AcceptanceSettings) -> (AcResult, Vec<HomotopyVerification>) {
    let b = Builder::new("AC-12", "homotopy to Anosov maps");
    let mut fr = s.homotopy_fractions.clone();
    fr.sort_by(|a, b| b.total_cmp(a));
    match homotopy_sweep(map, &fr, s.homotopy_grid, s.margin_radial, s.margin_angular) {
        Ok(rows) => {
            let all = rows.iter().all(|r| r.all_hyperbolic);
            let mono = rows.windows(2).all(|w| w[1].c0_distance <= w[0].c0_distance);
            let desc: Vec<String> = rows
                .iter()
                .map(|r| format!("eps/r0 = {:.2}: d0 = {:.3e} {}", r.epsilon / map.r0(), r.c0_distance, verdict(r.all_hyperbolic)))
                .collect();
            let mut b = b;
            for r in &rows {
                b = b.metric(&format!("c0_distance_{:.2}", r.epsilon / map.r0()), r.c0_distance);
            }
            let res = b.finish(all && mono, format!("{}; monotone {}", desc.join(", "), verdict(mono)));
            (res, rows)
        }
        Err(e) => (b.finish(false, format!("homotopy: {e}")), vec![]),
    }
}

fn ac13_margulis_ruelle(
    map: &AlmostAnosovMap,
    s: &AcceptanceSettings,
    sample: Option<&TransitionSample>,
) -> (AcResult, Option<MeasureOnGrid>, Option<MargulisRuelleReport>) {
    let b = Builder::new("AC-13", "Margulis-Ruelle and Pesin");
    let owned;
    let sample = match sample {
        Some(x) => x,
        None => match TransitionSample::build(map, UlamGrid::new(s.ulam_grid), s.samples_per_cell, s.seed) {
            Ok(x) => {
                owned = x;
                &owned
            }
            Err(e) => return (b.finish(false, format!("operator: {e}")), None, None),
        },
    };
    let mu = match srb_density_from(sample, crate::thermo::DEFAULT_EIGEN_TOL, crate::thermo::DEFAULT_EIGEN_MAX_ITER) {
        Ok(m) => m,
        Err(e) => return (b.finish(false, format!("srb density: {e}")), None, None),
    };
    let starts = sample_measure(map, &MeasureSampler::srb_independent(), s.entropy_starts, s.seed);
    let h = entropy_estimate(map, &starts, s.entropy_word, ENTROPY_CAP);
    let srb = margulis_ruelle_check(sample, &mu, h.value);
    // delta_0 exactly: the itinerary of the fixed point and log |Df_0 u| = 0
    let h0 = entropy_estimate(map, &[TorusPoint::ORIGIN; 4], s.entropy_word, 1_000).value;
    let l0 = log_unstable_jacobian(map, &TorusPoint::ORIGIN, 40);
    let dirac = MargulisRuelleReport {
        entropy: h0,
        lyapunov: l0,
        slack: l0 + 0.05 - h0,
        inequality_holds: h0 <= l0 + 0.05,
        pesin_gap: (h0 - l0).abs(),
        pesin_holds: true,
    };
    let pass = srb.inequality_holds && srb.pesin_holds && dirac.inequality_holds;
    let res = b
        .metric("entropy_srb", srb.entropy)
        .metric("lambda_u_srb", srb.lyapunov)
        .metric("entropy_dirac", dirac.entropy)
        .metric("lambda_u_dirac", dirac.lyapunov)
        .metric("censored", h.censored as f64)
        .finish(
            pass,
            format!(
                "SRB h = {:.4}, lambda_u = {:.4}, MR {} Pesin gap {:.4} {}; delta_0 h = {:.3} <= {:.3} {}",
                srb.entropy,
                srb.lyapunov,
                verdict(srb.inequality_holds),
                srb.pesin_gap,
                verdict(srb.pesin_holds),
                dirac.entropy,
                dirac.lyapunov,
                verdict(dirac.inequality_holds)
            ),
        );
    (res, Some(mu), Some(srb))
}

/// Runs every criterion, stage by stage: certify, homotopy, lyapunov,
/// returns, distortion, pressure, srb, correlations, clt. `progress` is
/// called with each verdict as soon as it is known.
pub fn run_acceptance(
    map: &AlmostAnosovMap,
    s: &AcceptanceSettings,
    mut progress: impl FnMut(&AcResult),
) -> AcceptanceRun {
    let mut results = Vec::new();
    let mut art = Artifacts::default();
    let mut stages = Vec::new();
    let mut push = |r: AcResult, results: &mut Vec<AcResult>| {
        progress(&r);
        results.push(r);
    };

    let t = Instant::now();
    push(ac1_identity_at_origin(map), &mut results);
    push(ac2_linear_agreement(map, s), &mut results);
    push(ac3_hyperbolicity_sweep(map, s), &mut results);
    push(ac11_inverse_round_trip(map, s), &mut results);
    stages.push(("certify", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r, rows) = ac12_homotopy(map, s);
    art.homotopy = rows;
    push(r, &mut results);
    stages.push(("homotopy", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    push(ac4_lyapunov(map, s), &mut results);
    stages.push(("lyapunov", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r6, r7, hist, fit) = ac6_ac7_returns(map, s);
    art.returns = Some(hist);
    art.tail = fit;
    push(r6, &mut results);
    push(r7, &mut results);
    stages.push(("returns", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r, c, d) = ac8_contraction_distortion(map, s);
    art.contraction = Some(c);
    art.distortion = Some(d);
    push(r, &mut results);
    stages.push(("distortion", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let sample = match ac5_pressure(map, s) {
        Ok(p) => {
            art.pressure = Some(p.curve);
            push(p.result, &mut results);
            Some(p.sample)
        }
        Err(r) => {
            push(r, &mut results);
            None
        }
    };
    stages.push(("pressure", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r, mu, mr) = ac13_margulis_ruelle(map, s, sample.as_ref());
    art.srb = mu;
    art.margulis_ruelle = mr;
    push(r, &mut results);
    stages.push(("srb", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r, series, fit) = ac10_correlations(map, s);
    art.correlations = Some(series);
    art.decay = Some(fit);
    push(r, &mut results);
    stages.push(("correlations", t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let (r, clt) = ac9_clt(map, s);
    art.clt = Some(clt);
    push(r, &mut results);
    stages.push(("clt", t.elapsed().as_secs_f64()));

    results.sort_by_key(AcResult::number);
    AcceptanceRun { results, artifacts: art, stage_seconds: stages }
}
