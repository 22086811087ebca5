//! Finite-outcome sub-observables and observables.
//!
//! Outcome spaces are finite label sets carrying the power-set σ-algebra, so
//! an event is any subset of labels and `A(Δ) = Σ_{x∈Δ} a_x`.

use std::ops::Deref;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize};

use crate::effects::{Effect, State};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Tolerance};

/// Label used for the one-point extension when the caller does not pick one.
pub const DEFAULT_EXTENSION_LABEL: &str = "⊥ext";

/// Finite ordered set of distinct outcome labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct OutcomeSpace {
    labels: Vec<String>,
}

impl OutcomeSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptyOutcomeSpace);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(OutcomeSpace { labels })
    }

    /// `x0, x1, …, x{n-1}`.
    pub fn indexed(n: usize) -> Self {
        assert!(n > 0, "outcome space must be non-empty");
        OutcomeSpace {
            labels: (0..n).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index_of(label).is_some()
    }

    /// Sorted, de-duplicated indices of the event's labels.
    pub fn resolve<S: AsRef<str>>(&self, event: &[S]) -> Result<Vec<usize>> {
        let mut idx = event
            .iter()
            .map(|l| {
                let l = l.as_ref();
                self.index_of(l).ok_or_else(|| Error::UnknownLabel(l.to_owned()))
            })
            .collect::<Result<Vec<_>>>()?;
        idx.sort_unstable();
        idx.dedup();
        Ok(idx)
    }

    /// Every index, i.e. the event `Ω`.
    pub fn all(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    /// `Ω ∪ {y}` for a fresh label `y`.
    pub fn extended(&self, y: &str) -> Result<OutcomeSpace> {
        if self.contains(y) {
            return Err(Error::LabelCollision(y.to_owned()));
        }
        let mut labels = self.labels.clone();
        labels.push(y.to_owned());
        Ok(OutcomeSpace { labels })
    }

    /// Same label set, ignoring order.
    pub fn same_set(&self, other: &OutcomeSpace) -> bool {
        self.len() == other.len() && self.labels.iter().all(|l| other.contains(l))
    }

    /// Every subset of the space, as sorted index lists. Exponential; small spaces only.
    pub fn events(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        assert!(n < 20, "too many outcomes to enumerate events");
        (0u32..1 << n)
            .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
            .collect()
    }
}

impl<'de> Deserialize<'de> for OutcomeSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<String>::deserialize(d)?;
        OutcomeSpace::new(labels).map_err(serde::de::Error::custom)
    }
}

/// Effect-valued measure on a finite space whose total may fall short of `I`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubObservable {
    space: OutcomeSpace,
    effects: Vec<Effect>,
}

/// A sub-observable whose effects sum to `I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable(SubObservable);

fn max_eigenvalue(m: &Matrix, tol: Tolerance) -> Result<f64> {
    Ok(m.eigh(tol)?.max())
}

fn sum_effects<'a>(dim: usize, effects: impl IntoIterator<Item = &'a Effect>) -> Matrix {
    let mut acc = Matrix::zeros(dim);
    for e in effects {
        acc += e.matrix();
    }
    acc
}

impl SubObservable {
    pub fn new(space: OutcomeSpace, effects: Vec<Effect>) -> Result<Self> {
        SubObservable::with_tol(space, effects, Tolerance::DEFAULT)
    }

    pub fn with_tol(space: OutcomeSpace, effects: Vec<Effect>, tol: Tolerance) -> Result<Self> {
        if effects.len() != space.len() {
            return Err(Error::ArityMismatch {
                expected: space.len(),
                found: effects.len(),
            });
        }
        let dim = effects[0].dim();
        for e in &effects[1..] {
            e.matrix().check_dim(effects[0].matrix())?;
        }
        let max = max_eigenvalue(&sum_effects(dim, &effects), tol)?;
        if max > 1.0 + tol.eps() {
            return Err(Error::SumEscapesSob {
                max_eigenvalue: max,
            });
        }
        Ok(SubObservable { space, effects })
    }

    /// Labels `x0, x1, …` in order.
    pub fn from_effects(effects: Vec<Effect>) -> Result<Self> {
        let n = effects.len();
        if n == 0 {
            return Err(Error::EmptyOutcomeSpace);
        }
        SubObservable::new(OutcomeSpace::indexed(n), effects)
    }

    pub(crate) fn from_trusted(space: OutcomeSpace, effects: Vec<Effect>) -> Self {
        debug_assert_eq!(space.len(), effects.len());
        SubObservable { space, effects }
    }

    pub fn zero(space: OutcomeSpace, dim: usize) -> Self {
        let effects = vec![Effect::zero(dim); space.len()];
        SubObservable { space, effects }
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn labels(&self) -> &[String] {
        self.space.labels()
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effect(&self, label: &str) -> Result<&Effect> {
        self.space
            .index_of(label)
            .map(|i| &self.effects[i])
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    /// `A(Ω)`.
    pub fn total(&self) -> Effect {
        Effect::from_trusted(sum_effects(self.dim(), &self.effects))
    }

    /// `A(Δ) = Σ_{x∈Δ} a_x`; the empty event maps to `0`.
    pub fn eval_event<S: AsRef<str>>(&self, event: &[S]) -> Result<Effect> {
        let idx = self.space.resolve(event)?;
        Ok(self.eval_indices(&idx))
    }

    pub fn eval_indices(&self, idx: &[usize]) -> Effect {
        Effect::from_trusted(sum_effects(self.dim(), idx.iter().map(|&i| &self.effects[i])))
    }

    /// `x ↦ tr(ρ a_x)` in label order.
    pub fn distribution(&self, rho: &State) -> Result<Vec<(String, f64)>> {
        rho.matrix().check_dim(self.effects[0].matrix())?;
        Ok(self
            .labels()
            .iter()
            .zip(&self.effects)
            .map(|(l, e)| (l.clone(), rho.prob(e)))
            .collect())
    }

    /// `‖A(Ω) − I‖_max ≤ eps`.
    pub fn is_observable(&self, tol: Tolerance) -> bool {
        self.total().matrix().max_abs_diff(&Matrix::identity(self.dim())) <= tol.eps()
    }

    /// One-point completion: keeps every `a_x` and adds `y ↦ I − A(Ω)`.
    pub fn minimal_extension(&self, y: &str) -> Result<Observable> {
        let space = self.space.extended(y)?;
        let mut effects = self.effects.clone();
        effects.push(self.total().complement());
        Ok(Observable(SubObservable { space, effects }))
    }

    /// Pointwise sum, provided the result is still a sub-observable.
    pub fn add(&self, other: &SubObservable, tol: Tolerance) -> Result<SubObservable> {
        self.check_compatible(other)?;
        let effects: Vec<Effect> = self
            .effects
            .iter()
            .zip(&other.effects)
            .map(|(a, b)| Effect::from_trusted(a.matrix() + b.matrix()))
            .collect();
        // positivity makes every partial sum dominated by the total
        let max = max_eigenvalue(&sum_effects(self.dim(), &effects), tol)?;
        if max > 1.0 + tol.eps() {
            return Err(Error::SumEscapesSob {
                max_eigenvalue: max,
            });
        }
        Ok(SubObservable {
            space: self.space.clone(),
            effects,
        })
    }

    /// Pointwise `λ·a_x` for `λ ∈ [0, 1]`.
    pub fn scale(&self, lambda: f64) -> Result<SubObservable> {
        let effects = self
            .effects
            .iter()
            .map(|e| e.scale(lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(SubObservable {
            space: self.space.clone(),
            effects,
        })
    }

    /// `A ≤ B`, checked on singletons (events are sums of positive singletons).
    pub fn leq(&self, other: &SubObservable, tol: Tolerance) -> Result<bool> {
        self.check_compatible(other)?;
        for (a, b) in self.effects.iter().zip(&other.effects) {
            if !a.leq(b, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest entrywise difference over all outcomes.
    pub fn max_abs_diff(&self, other: &SubObservable) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .effects
            .iter()
            .zip(&other.effects)
            .map(|(a, b)| a.matrix().max_abs_diff(b.matrix()))
            .fold(0.0, f64::max))
    }

    /// The same measure viewed on a subset of its labels.
    pub fn restrict(&self, space: &OutcomeSpace) -> Result<SubObservable> {
        let effects = space
            .labels()
            .iter()
            .map(|l| self.effect(l).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(SubObservable {
            space: space.clone(),
            effects,
        })
    }

    fn check_compatible(&self, other: &SubObservable) -> Result<()> {
        if self.space != other.space {
            return Err(Error::OutcomeSpaceMismatch);
        }
        self.effects[0].matrix().check_dim(other.effects[0].matrix())
    }
}

impl Observable {
    pub fn new(space: OutcomeSpace, effects: Vec<Effect>) -> Result<Self> {
        Observable::from_sub(SubObservable::new(space, effects)?, Tolerance::DEFAULT)
    }

    pub fn from_effects(effects: Vec<Effect>) -> Result<Self> {
        Observable::from_sub(SubObservable::from_effects(effects)?, Tolerance::DEFAULT)
    }

    pub fn from_sub(sub: SubObservable, tol: Tolerance) -> Result<Self> {
        let deviation = sub
            .total()
            .matrix()
            .max_abs_diff(&Matrix::identity(sub.dim()));
        if deviation > tol.eps() {
            return Err(Error::NotObservable { deviation });
        }
        Ok(Observable(sub))
    }

    pub(crate) fn from_trusted(sub: SubObservable) -> Self {
        Observable(sub)
    }

    /// The single-outcome observable `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Observable(SubObservable {
            space: OutcomeSpace::indexed(1),
            effects: vec![Effect::identity(dim)],
        })
    }

    pub fn as_sub(&self) -> &SubObservable {
        &self.0
    }

    pub fn into_sub(self) -> SubObservable {
        self.0
    }

    /// Whether every effect is a projection.
    pub fn is_sharp(&self, tol: Tolerance) -> bool {
        self.0.effects.iter().all(|e| e.is_projection(tol))
    }
}

impl Deref for Observable {
    type Target = SubObservable;
    fn deref(&self) -> &SubObservable {
        &self.0
    }
}

impl From<Observable> for SubObservable {
    fn from(o: Observable) -> Self {
        o.0
    }
}

/// `{labels: [...], effects: {label: matrix}}`.
impl Serialize for SubObservable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Effects<'a>(&'a SubObservable);
        impl Serialize for Effects<'_> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (l, e) in self.0.labels().iter().zip(&self.0.effects) {
                    m.serialize_entry(l, e)?;
                }
                m.end()
            }
        }
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("labels", &self.space)?;
        m.serialize_entry("effects", &Effects(self))?;
        m.end()
    }
}

impl<'de> Deserialize<'de> for SubObservable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            labels: OutcomeSpace,
            effects: std::collections::HashMap<String, Matrix>,
        }
        use serde::de::Error as _;
        let mut raw = Raw::deserialize(d)?;
        if raw.effects.len() != raw.labels.len() {
            return Err(D::Error::custom("effects must list exactly the labels"));
        }
        let effects = raw
            .labels
            .labels()
            .iter()
            .map(|l| {
                let m = raw
                    .effects
                    .remove(l)
                    .ok_or_else(|| D::Error::custom(format!("missing effect for {l:?}")))?;
                Effect::new(m).map_err(|e| D::Error::custom(format!("effect {l:?}: {e}")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        SubObservable::new(raw.labels, effects).map_err(D::Error::custom)
    }
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    const TOL: Tolerance = Tolerance::DEFAULT;

    fn p(i: usize) -> Effect {
        let mut d = [0.0, 0.0];
        d[i] = 1.0;
        Effect::new(Matrix::diag(&d)).unwrap()
    }

    fn plus() -> State {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        State::pure(&[C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap()
    }

    fn sharp() -> Observable {
        Observable::from_effects(vec![p(0), p(1)]).unwrap()
    }

    #[test]
    fn outcome_space_validation() {
        assert_eq!(OutcomeSpace::new(Vec::<String>::new()).unwrap_err(), Error::EmptyOutcomeSpace);
        assert_eq!(OutcomeSpace::new(["a", "a"]).unwrap_err(), Error::DuplicateLabel("a".into()));
        let s = OutcomeSpace::new(["a", "b"]).unwrap();
        assert_eq!(s.resolve(&["b", "a", "b"]).unwrap(), vec![0, 1]);
        assert_eq!(s.resolve(&["c"]).unwrap_err(), Error::UnknownLabel("c".into()));
        assert_eq!(s.extended("a").unwrap_err(), Error::LabelCollision("a".into()));
        assert_eq!(s.events().len(), 4);
    }

    #[test]
    fn events() {
        let a = sharp();
        let empty: [&str; 0] = [];
        assert_eq!(a.eval_event(&empty).unwrap(), Effect::zero(2));
        assert_eq!(a.eval_event(&["x0", "x1"]).unwrap().matrix(), &Matrix::identity(2));
        assert_eq!(a.eval_event(&["x0"]).unwrap(), p(0));
        assert!(a.eval_event(&["nope"]).is_err());
    }

    #[test]
    fn distributions() {
        let d = sharp().distribution(&plus()).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d[0].1 - 0.5).abs() < 1e-15 && (d[1].1 - 0.5).abs() < 1e-15);

        let single = Observable::trivial(2).distribution(&plus()).unwrap();
        assert!((single[0].1 - 1.0).abs() < 1e-15);

        let deficient = SubObservable::from_effects(vec![p(0).scale(0.5).unwrap()]).unwrap();
        let rho = State::new(Matrix::diag(&[1.0, 0.0])).unwrap();
        assert!((deficient.distribution(&rho).unwrap()[0].1 - 0.5).abs() < 1e-15);
        assert!(sharp().distribution(&State::maximally_mixed(3)).is_err());
    }

    #[test]
    fn observable_detection() {
        assert!(sharp().is_observable(TOL));
        let half = SubObservable::from_effects(vec![Effect::scalar(2, 0.5).unwrap()]).unwrap();
        assert!(!half.is_observable(TOL));
        let a = Effect::new(Matrix::real(&[0.7, 0.2, 0.2, 0.4])).unwrap();
        assert!(SubObservable::from_effects(vec![a.clone(), a.complement()]).unwrap().is_observable(TOL));
        assert!(matches!(Observable::from_sub(half, TOL), Err(Error::NotObservable { .. })));
    }

    #[test]
    fn minimal_extension_single_outcome() {
        let a = Effect::new(Matrix::real(&[0.7, 0.2, 0.2, 0.4])).unwrap();
        let sub = SubObservable::new(OutcomeSpace::new(["x"]).unwrap(), vec![a.clone()]).unwrap();
        let b = sub.minimal_extension("y").unwrap();
        assert_eq!(b.labels(), &["x".to_string(), "y".to_string()]);
        assert_eq!(b.effect("x").unwrap(), &a);
        assert!(b.effect("y").unwrap().matrix().max_abs_diff(a.complement().matrix()) < 1e-15);
        assert!(b.is_observable(TOL));
        assert_eq!(b.restrict(sub.space()).unwrap(), sub);
    }

    #[test]
    fn minimal_extension_of_observable_adds_zero() {
        let b = sharp().minimal_extension(DEFAULT_EXTENSION_LABEL).unwrap();
        assert!(b.effect(DEFAULT_EXTENSION_LABEL).unwrap().matrix().max_abs() < 1e-15);
        assert_eq!(
            sharp().minimal_extension("x0").unwrap_err(),
            Error::LabelCollision("x0".into())
        );
    }

    #[test]
    fn addition() {
        let a = SubObservable::from_effects(vec![p(0).scale(0.3).unwrap()]).unwrap();
        let b = SubObservable::from_effects(vec![p(0).scale(0.4).unwrap()]).unwrap();
        let s = a.add(&b, TOL).unwrap();
        assert!(s.effects()[0].matrix().max_abs_diff(&Matrix::diag(&[0.7, 0.0])) < 1e-15);
        let z = SubObservable::zero(a.space().clone(), 2);
        assert_eq!(a.add(&z, TOL).unwrap(), a);
        assert!(matches!(sharp().add(&sharp(), TOL), Err(Error::SumEscapesSob { .. })));
        assert_eq!(a.add(&sharp(), TOL).unwrap_err(), Error::OutcomeSpaceMismatch);
    }

    #[test]
    fn scaling() {
        let a = sharp();
        assert_eq!(&a.scale(1.0).unwrap(), a.as_sub());
        assert_eq!(a.scale(0.0).unwrap(), SubObservable::zero(a.space().clone(), 2));
        let h = a.scale(0.5).unwrap();
        assert_eq!(h.effects()[0].matrix(), &Matrix::diag(&[0.5, 0.0]));
        assert_eq!(h.effects()[1].matrix(), &Matrix::diag(&[0.0, 0.5]));
        assert_eq!(a.scale(1.5).unwrap_err(), Error::ScaleOutOfRange(1.5));
    }

    #[test]
    fn ordering() {
        let a = sharp();
        assert!(a.leq(&a, TOL).unwrap());
        assert!(a.scale(0.5).unwrap().leq(&a, TOL).unwrap());
        let swapped = Observable::from_effects(vec![p(1), p(0)]).unwrap();
        assert!(!a.leq(&swapped, TOL).unwrap());
        let other = Observable::new(OutcomeSpace::new(["u", "v"]).unwrap(), vec![p(0), p(1)]).unwrap();
        assert_eq!(a.leq(&other, TOL).unwrap_err(), Error::OutcomeSpaceMismatch);
    }

    #[test]
    fn serialization_shape() {
        let json = serde_json::to_value(sharp()).unwrap();
        assert_eq!(json["labels"], serde_json::json!(["x0", "x1"]));
        assert_eq!(json["effects"]["x1"], serde_json::json!([[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]));
        let back: SubObservable = serde_json::from_value(json).unwrap();
        assert_eq!(&back, sharp().as_sub());
    }
}
