//! Scenario-driven verification, demo reproduction and closure search.

pub mod error;
pub mod scenario;

use std::path::Path;
use std::time::Instant;

use qmi_core::effect_algebra::{check_sob_closure, search_luders_counterexample, ClosureVerdict, LudersSearchReport, SobFamilySpec};
use qmi_core::random::{self, trial_rng};
use qmi_core::report::{Report, ReportBuilder};
use qmi_core::suites::{run_suite, SuiteContext, SUITES};
use qmi_core::{Effect, Tolerance};
use serde::Serialize;

pub use error::CliError;
pub use scenario::{load_scenario, parse_scenario, RawInstrument, Scenario};

pub const ENV_TOL: &str = "QMI_TOL";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: usize = 100;

/// Picks the tolerance: flag, then `QMI_TOL`, then the scenario, then 1e-9.
pub fn resolve_tolerance(flag: Option<f64>, env: Option<&str>, scenario: Option<f64>) -> Result<Tolerance, CliError> {
    if let Some(t) = flag {
        return Tolerance::new(t).map_err(|e| CliError::invalid("--tol", e));
    }
    if let Some(raw) = env {
        let t: f64 = raw.trim().parse().map_err(|_| CliError::EnvTolerance(raw.to_string()))?;
        return Tolerance::new(t).map_err(|_| CliError::EnvTolerance(raw.to_string()));
    }
    match scenario {
        Some(t) => Tolerance::new(t).map_err(|e| CliError::invalid("tol", e)),
        None => Ok(Tolerance::DEFAULT),
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    pub checks: Vec<String>,
    pub passed: bool,
    pub reports: Vec<Report>,
    pub wall_time: f64,
}

impl VerifyReport {
    /// JSON with every wall-time field zeroed.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.wall_time = 0.0;
        for rep in &mut r.reports {
            rep.wall_time = 0.0;
        }
        to_json(&r)
    }
}

pub fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

pub fn run_verify(s: &Scenario, opts: &RunOptions, env_tol: Option<&str>) -> Result<VerifyReport, CliError> {
    let start = Instant::now();
    let tol = resolve_tolerance(opts.tol, env_tol, s.tol)?;
    let seed = opts.seed.or(s.seed).unwrap_or(DEFAULT_SEED);
    let trials = opts.trials.or(s.trials).unwrap_or(DEFAULT_TRIALS);
    let checks: Vec<String> = match &s.checks {
        Some(c) => c.clone(),
        None => SUITES.iter().map(|s| s.to_string()).collect(),
    };
    if let Some(bad) = checks.iter().find(|c| !SUITES.contains(&c.as_str())) {
        return Err(CliError::Core(qmi_core::Error::UnknownName {
            kind: "check",
            name: bad.clone(),
        }));
    }
    let mut ctx = SuiteContext::new(seed, trials, tol);
    ctx.instruments = s.instruments.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    ctx.states = s.states.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    ctx.effects = s.effects.iter().map(|(k, v)| (k.clone(), v.clone())).collect();

    let reports: Vec<Report> = checks
        .iter()
        .map(|name| {
            run_suite(name, &ctx).unwrap_or_else(|e| {
                // a suite that cannot evaluate is a failed check, not an input error
                let mut b = ReportBuilder::new(name, "suite aborted", trials, tol);
                b.record_error(name, None, e);
                b.finish()
            })
        })
        .collect();
    Ok(VerifyReport {
        seed,
        trials,
        tol: tol.eps(),
        passed: reports.iter().all(|r| r.passed),
        checks,
        reports,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub fn run_demo(name: &str) -> Result<Report, CliError> {
    Ok(qmi_core::demos::run_demo(name)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub family: String,
    pub kind: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    /// Pairs whose summed sub-observable stays in Sob(H).
    pub tested: usize,
    pub perpendicular: usize,
    pub witnesses: usize,
    /// Closed-form witnesses that failed; a genuine check failure.
    pub criterion_violated: usize,
    /// No witness found by search; evidence only.
    pub unknown: usize,
    pub max_witness_residual: f64,
    pub best_unknown_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub luders: Option<LudersSearchReport>,
    pub wall_time: f64,
}

impl SearchReport {
    pub fn passed(&self) -> bool {
        self.criterion_violated == 0
    }

    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.wall_time = 0.0;
        to_json(&r)
    }
}

/// Tests S3 for `U_I` of the named scenario instrument on random pairs whose
/// summed sub-observable stays in Sob(H).
pub fn run_search(s: &Scenario, family: &str, opts: &RunOptions, env_tol: Option<&str>) -> Result<SearchReport, CliError> {
    let start = Instant::now();
    let tol = resolve_tolerance(opts.tol, env_tol, s.tol)?;
    let seed = opts.seed.or(s.seed).unwrap_or(DEFAULT_SEED);
    let trials = opts.trials.or(s.trials).unwrap_or(DEFAULT_TRIALS);
    let instrument = s.instruments.get(family).ok_or_else(|| CliError::Dangling {
        object: "--family".into(),
        kind: "instrument",
        name: family.into(),
    })?;
    let (kind, spec, luders_obs) = match &s.kinds[family] {
        RawInstrument::Holevo { observable, state } => (
            "holevo",
            SobFamilySpec::Holevo {
                alpha: s.states[state].clone(),
                observable: s.observables[observable].clone(),
            },
            None,
        ),
        RawInstrument::Luders { observable } => {
            let obs = s.observables[observable].clone();
            if obs.is_sharp(tol) {
                ("sharp-luders", SobFamilySpec::SharpLuders { observable: obs }, None)
            } else {
                ("luders", SobFamilySpec::Determined { instrument: instrument.clone() }, Some(obs))
            }
        }
        RawInstrument::ConstantState { source, state } => (
            "constant-state",
            SobFamilySpec::ConstantState {
                source: s.instruments[source].clone(),
                alpha: s.states[state].clone(),
            },
            None,
        ),
        RawInstrument::FiniteHolevo { .. } | RawInstrument::Kraus { .. } => {
            ("determined", SobFamilySpec::Determined { instrument: instrument.clone() }, None)
        }
    };

    let d = s.dimension;
    let all = instrument.space().all();
    let mut report = SearchReport {
        family: family.to_string(),
        kind,
        seed,
        trials,
        tol: tol.eps(),
        tested: 0,
        perpendicular: 0,
        witnesses: 0,
        criterion_violated: 0,
        unknown: 0,
        max_witness_residual: 0.0,
        best_unknown_violation: None,
        luders: None,
        wall_time: 0.0,
    };
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        let dual_max = |m: &qmi_core::Matrix| instrument.dual_indices(&all, m).eigh(tol).map(|e| e.max());
        // odd trials probe a rank-one effect against a multiple of itself
        let (x, y) = if t % 2 == 0 {
            let x = random::effect(&mut rng, d);
            let y = random::effect(&mut rng, d);
            let top = dual_max(&(x.matrix() + y.matrix()))?;
            if top > 1.0 {
                let k = rand::Rng::random_range(&mut rng, 0.5..1.0) / top;
                (x.scale(k)?, y.scale(k)?)
            } else {
                (x, y)
            }
        } else {
            let x = Effect::new(random::pure_state(&mut rng, d).into_matrix())?;
            let room = (1.0 / dual_max(x.matrix())? - 1.0).clamp(0.0, 1.0);
            let k = room * rand::Rng::random_range(&mut rng, 0.5..1.0);
            (x.clone(), x.scale(k)?)
        };
        if Effect::is_perp(&x, &y, tol)? {
            report.perpendicular += 1;
        }
        let verdict = match check_sob_closure(&spec, &x, &y, tol, seed.wrapping_add(t as u64)) {
            Ok(v) => v,
            Err(qmi_core::Error::Precondition(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        report.tested += 1;
        match verdict {
            ClosureVerdict::Witness { residual, .. } | ClosureVerdict::ListMember { residual, .. } => {
                report.witnesses += 1;
                report.max_witness_residual = report.max_witness_residual.max(residual);
            }
            ClosureVerdict::CriterionViolated { .. } => report.criterion_violated += 1,
            ClosureVerdict::Unknown { best_violation } => {
                report.unknown += 1;
                let best = report.best_unknown_violation.map_or(best_violation, |b| b.min(best_violation));
                report.best_unknown_violation = Some(best);
            }
        }
    }
    if let Some(obs) = luders_obs {
        report.luders = Some(search_luders_counterexample(&obs, trials, seed, tol)?);
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

pub fn write_report(path: &Path, json: &str) -> Result<(), CliError> {
    std::fs::write(path, json).map_err(|e| CliError::Report {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_precedence() {
        let t = |f, e, s| resolve_tolerance(f, e, s).unwrap().eps();
        assert_eq!(t(Some(1e-5), Some("1e-6"), Some(1e-7)), 1e-5);
        assert_eq!(t(None, Some("1e-6"), Some(1e-7)), 1e-6);
        assert_eq!(t(None, None, Some(1e-7)), 1e-7);
        assert_eq!(t(None, None, None), 1e-9);
        assert!(matches!(resolve_tolerance(None, Some("abc"), None), Err(CliError::EnvTolerance(_))));
        assert!(resolve_tolerance(Some(-1.0), None, None).is_err());
    }
}
