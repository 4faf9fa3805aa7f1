//! Acceptance criteria AC-1..AC-13 on the default map at full size.
//!
//! Prints one PASS/FAIL line per criterion. Criteria listed in
//! `KNOWN_FAILURES` are reported but do not fail the test; every other
//! criterion must pass.

use std::io::Write;

use almost_anosov::acceptance::{run_acceptance, AcceptanceSettings, KNOWN_FAILURES};
use almost_anosov::{AlmostAnosovMap, MapSpec};

#[test]
fn acceptance_criteria() {
    let map = AlmostAnosovMap::new(MapSpec::default()).expect("default spec is valid");
    let settings = AcceptanceSettings::full(MapSpec::default().seed);
    let run = run_acceptance(&map, &settings, |_| {});

    // written past the test harness capture so the lines show up in `cargo test` output
    let mut out = std::io::stdout().lock();
    writeln!(out, "acceptance: default map, seed {}", settings.seed).unwrap();
    for r in &run.results {
        let note = if !r.pass && KNOWN_FAILURES.contains(&r.id) { "  [known]" } else { "" };
        writeln!(out, "{}{note}", r.line()).unwrap();
    }
    writeln!(out, "{} of {} pass", run.passed(), run.results.len()).unwrap();
    drop(out);

    let ids: Vec<&str> = run.results.iter().map(|r| r.id).collect();
    let expected: Vec<String> = (1..=13).map(|k| format!("AC-{k}")).collect();
    assert_eq!(ids, expected);

    let unexpected: Vec<&str> = run
        .results
        .iter()
        .filter(|r| !r.pass && !KNOWN_FAILURES.contains(&r.id))
        .map(|r| r.id)
        .collect();
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
}
