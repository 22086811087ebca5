//! Scenario files: named effects, states, observables and instruments in JSON.
//!
//! Complex entries are `[re, im]` pairs and matrices are row-major.

use std::collections::BTreeMap;
use std::path::Path;

use qmi_core::{Effect, Instrument, Matrix, Observable, OutcomeSpace, State, Tolerance, C64};
use serde::Deserialize;

use crate::error::CliError;

pub type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub dimension: usize,
    #[serde(default)]
    pub effects: BTreeMap<String, RawMatrix>,
    #[serde(default)]
    pub states: BTreeMap<String, RawMatrix>,
    /// Observable name → (outcome label → effect name).
    #[serde(default)]
    pub observables: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    pub instruments: BTreeMap<String, RawInstrument>,
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawInstrument {
    Luders { observable: String },
    Holevo { observable: String, state: String },
    FiniteHolevo { observable: String, states: BTreeMap<String, String> },
    ConstantState { source: String, state: String },
    /// Outcome label → Kraus operators.
    Kraus { outcomes: BTreeMap<String, Vec<RawMatrix>> },
}

/// A fully resolved and validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub dimension: usize,
    pub effects: BTreeMap<String, Effect>,
    pub states: BTreeMap<String, State>,
    pub observables: BTreeMap<String, Observable>,
    pub instruments: BTreeMap<String, Instrument>,
    pub kinds: BTreeMap<String, RawInstrument>,
    pub checks: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build(raw)
}

fn matrix(object: &str, raw: &RawMatrix, dim: usize) -> Result<Matrix, CliError> {
    let rows = raw
        .iter()
        .map(|row| row.iter().map(|[re, im]| C64::new(*re, *im)).collect())
        .collect();
    let m = Matrix::from_rows(rows).map_err(|e| CliError::invalid(object, e))?;
    if m.dim() != dim {
        return Err(CliError::invalid(
            object,
            qmi_core::Error::DimensionMismatch {
                expected: dim,
                found: m.dim(),
            },
        ));
    }
    Ok(m)
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, object: &str, kind: &'static str, name: &str) -> Result<&'a T, CliError> {
    map.get(name).ok_or_else(|| CliError::Dangling {
        object: object.to_string(),
        kind,
        name: name.to_string(),
    })
}

fn build(raw: RawScenario) -> Result<Scenario, CliError> {
    let d = raw.dimension;
    if d == 0 {
        return Err(CliError::invalid("dimension", qmi_core::Error::EmptyMatrix));
    }
    if let Some(tol) = raw.tol {
        Tolerance::new(tol).map_err(|e| CliError::invalid("tol", e))?;
    }
    let mut effects = BTreeMap::new();
    for (name, m) in &raw.effects {
        let object = format!("effect {name:?}");
        let e = Effect::new(matrix(&object, m, d)?).map_err(|e| CliError::invalid(&object, e))?;
        effects.insert(name.clone(), e);
    }
    let mut states = BTreeMap::new();
    for (name, m) in &raw.states {
        let object = format!("state {name:?}");
        let s = State::new(matrix(&object, m, d)?).map_err(|e| CliError::invalid(&object, e))?;
        states.insert(name.clone(), s);
    }
    let mut observables = BTreeMap::new();
    for (name, map) in &raw.observables {
        let object = format!("observable {name:?}");
        let space = OutcomeSpace::new(map.keys().cloned()).map_err(|e| CliError::invalid(&object, e))?;
        let members = map
            .values()
            .map(|e| lookup(&effects, &object, "effect", e).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let obs = Observable::new(space, members).map_err(|e| CliError::invalid(&object, e))?;
        observables.insert(name.clone(), obs);
    }

    // constant-state instruments refer to other instruments; resolve in dependency order
    let mut instruments: BTreeMap<String, Instrument> = BTreeMap::new();
    let mut pending: Vec<&String> = raw.instruments.keys().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for name in pending {
            let object = format!("instrument {name:?}");
            let spec = &raw.instruments[name];
            if let RawInstrument::ConstantState { source, .. } = spec {
                if !raw.instruments.contains_key(source) {
                    return Err(CliError::Dangling {
                        object,
                        kind: "instrument",
                        name: source.clone(),
                    });
                }
                if !instruments.contains_key(source) {
                    rest.push(name);
                    continue;
                }
            }
            let built = build_instrument(&object, spec, d, &states, &observables, &instruments)?;
            instruments.insert(name.clone(), built);
        }
        if rest.len() == before {
            return Err(CliError::Cycle(rest.iter().map(|s| s.to_string()).collect()));
        }
        pending = rest;
    }

    Ok(Scenario {
        dimension: d,
        effects,
        states,
        observables,
        instruments,
        kinds: raw.instruments,
        checks: raw.checks,
        seed: raw.seed,
        trials: raw.trials,
        tol: raw.tol,
    })
}

fn build_instrument(
    object: &str,
    spec: &RawInstrument,
    d: usize,
    states: &BTreeMap<String, State>,
    observables: &BTreeMap<String, Observable>,
    instruments: &BTreeMap<String, Instrument>,
) -> Result<Instrument, CliError> {
    let invalid = |e| CliError::invalid(object, e);
    match spec {
        RawInstrument::Luders { observable } => Ok(Instrument::luders(lookup(observables, object, "observable", observable)?)),
        RawInstrument::Holevo { observable, state } => {
            let a = lookup(observables, object, "observable", observable)?;
            let alpha = lookup(states, object, "state", state)?;
            Instrument::holevo(alpha, a).map_err(invalid)
        }
        RawInstrument::FiniteHolevo { observable, states: map } => {
            let a = lookup(observables, object, "observable", observable)?;
            let alphas = map
                .iter()
                .map(|(label, s)| Ok((label.clone(), lookup(states, object, "state", s)?.clone())))
                .collect::<Result<BTreeMap<_, _>, CliError>>()?;
            Instrument::finite_holevo(&alphas, a).map_err(invalid)
        }
        RawInstrument::ConstantState { source, state } => {
            let alpha = lookup(states, object, "state", state)?;
            Instrument::constant_state(&instruments[source], alpha).map_err(invalid)
        }
        RawInstrument::Kraus { outcomes } => {
            let space = OutcomeSpace::new(outcomes.keys().cloned()).map_err(invalid)?;
            let kraus = outcomes
                .values()
                .map(|ks| ks.iter().map(|k| matrix(object, k, d)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            Instrument::from_kraus(space, kraus).map_err(invalid)
        }
    }
}
