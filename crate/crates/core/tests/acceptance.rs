//! Runs every experiment at its default config and seed and prints one line
//! per criterion. Criteria listed in `KNOWN_FAILURES` are out of reach at
//! desk scale (see the README); the target fails on any other failure, or
//! if a listed criterion starts passing so the list can be updated.

use std::process::ExitCode;

use bbmlab::experiments::{acceptance, acceptance_config, DEFAULT_SEED};

/// Criteria that fail at the default seed, each documented with evidence.
const KNOWN_FAILURES: &[u32] = &[7, 9, 12, 18];

fn main() -> ExitCode {
    let t0 = std::time::Instant::now();
    let report = match acceptance(&acceptance_config(), DEFAULT_SEED) {
        Ok(r) => r,
        Err(e) => {
            println!("acceptance run failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut bad = Vec::new();
    for id in 1..=18u32 {
        let found: Vec<_> = report.criteria.iter().filter(|c| c.id == id).collect();
        if found.is_empty() {
            println!("criterion {id}: FAIL (not reported)");
            bad.push(id);
            continue;
        }
        for c in found {
            let known = KNOWN_FAILURES.contains(&id);
            let tag = match (c.passed, known) {
                (true, _) => "PASS",
                (false, true) => "FAIL (known)",
                (false, false) => "FAIL",
            };
            println!("criterion {id}: {tag} {}: {}", c.name, c.detail);
            if c.passed == known {
                bad.push(id);
            }
        }
    }
    println!("acceptance finished in {:.0} s", t0.elapsed().as_secs_f64());
    if bad.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {bad:?}");
        ExitCode::FAILURE
    }
}
