//! Acceptance gate: one PASS/FAIL line per criterion, with pinned tolerances
//! and wall-clock bounds. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qmi_core::demos::{run_demo, DEMOS};
use qmi_core::report::Report;
use qmi_core::suites::{run_suite, SuiteContext};
use qmi_core::Tolerance;

const SEED: u64 = 42;
const TOL: f64 = 1e-9;

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Vec<Report>,
}

fn suite(name: &str, trials: usize) -> Report {
    let ctx = SuiteContext::new(SEED, trials, Tolerance::new(TOL).unwrap());
    run_suite(name, &ctx).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn demos() -> Vec<Report> {
    DEMOS
        .iter()
        .map(|name| {
            let r = run_demo(name).unwrap();
            let cited = r.lines.iter().all(|l| l.citation.starts_with(&format!("{name}: ")));
            assert!(cited, "{name} has an uncited line");
            r
        })
        .collect()
}

fn criteria() -> Vec<Criterion> {
    let secs = |s| Some(Duration::from_secs(s));
    vec![
        Criterion { name: "duality: 100 mixed instruments, d ∈ {2,3,4}", limit: secs(5), run: || vec![suite("duality", 100)] },
        Criterion { name: "lemma21: 100 qubit/qutrit triples", limit: secs(5), run: || vec![suite("lemma21", 100)] },
        Criterion {
            name: "effect-algebra: E(H) model and U_I on 50 generators",
            limit: secs(10),
            run: || vec![suite("effect-algebra", 20), suite("thm32", 50)],
        },
        Criterion { name: "sob-closure: Holevo, sharp Lüders, constant-state witnesses", limit: secs(10), run: || vec![suite("sob-closure", 100)] },
        Criterion { name: "convexity: V witness and U_I scalar closure", limit: None, run: || vec![suite("convexity", 100)] },
        Criterion { name: "thm36: eight clauses and the distribution identity", limit: None, run: || vec![suite("thm36", 100)] },
        Criterion { name: "thm41: four identities on 50 instrument pairs", limit: secs(10), run: || vec![suite("thm41", 50)] },
        Criterion { name: "demos: example1..example8", limit: secs(5), run: demos },
        Criterion { name: "extensions: 50 sub-observables and sub-instruments", limit: None, run: || vec![suite("extensions", 50)] },
        Criterion { name: "measured: Lüders, Holevo, constant-state", limit: None, run: || vec![suite("measured", 100)] },
    ]
}

fn main() -> ExitCode {
    let mut failed = 0;
    for c in criteria() {
        let start = Instant::now();
        let reports = (c.run)();
        let elapsed = start.elapsed();
        let max = reports.iter().map(|r| r.max_residual).fold(0.0, f64::max);
        let cases: usize = reports.iter().map(|r| r.cases).sum();
        let pinned = reports.iter().all(|r| r.params.get("tol").and_then(|v| v.as_f64()) == Some(TOL));
        let checks_ok = reports.iter().all(|r| r.passed) && pinned && cases > 0;
        let time_ok = c.limit.is_none_or(|l| elapsed <= l);
        let ok = checks_ok && time_ok;
        if !ok {
            failed += 1;
        }
        let limit = c.limit.map_or("none".to_string(), |l| format!("{}s", l.as_secs()));
        println!(
            "{} {} | cases {cases} | max residual {max:.3e} | {:.3}s (limit {limit})",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
        );
        for r in reports.iter().filter(|r| !r.passed) {
            for f in r.failures.iter().take(5) {
                println!("    {}: {f:?}", r.check);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
