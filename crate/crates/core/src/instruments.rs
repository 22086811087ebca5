//! Operations, instruments and sub-instruments in Kraus form, with their duals.

use std::collections::BTreeMap;
use std::ops::Deref;

use crate::effects::{clamped_sqrt, Effect, PartialState, State};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Tolerance};
use crate::observables::{Observable, OutcomeSpace, SubObservable};
use crate::C64;

/// Completely positive, trace-non-increasing map `ρ ↦ Σ K ρ K†`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operation {
    kraus: Vec<Matrix>,
}

impl Operation {
    pub fn new(kraus: Vec<Matrix>) -> Result<Self> {
        Operation::with_tol(kraus, Tolerance::DEFAULT)
    }

    pub fn with_tol(kraus: Vec<Matrix>, tol: Tolerance) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyKraus)?;
        for k in &kraus[1..] {
            k.check_dim(first)?;
        }
        let op = Operation { kraus };
        let max = op.kraus_sum().eigh(tol)?.max();
        if max > 1.0 + tol.eps() {
            return Err(Error::TraceIncreasing {
                max_eigenvalue: max,
            });
        }
        Ok(op)
    }

    pub(crate) fn from_trusted(kraus: Vec<Matrix>) -> Self {
        debug_assert!(!kraus.is_empty());
        Operation { kraus }
    }

    pub fn zero(dim: usize) -> Self {
        Operation {
            kraus: vec![Matrix::zeros(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Operation {
            kraus: vec![Matrix::identity(dim)],
        }
    }

    /// `ρ ↦ tr(ρ a)·σ` for an effect `a` and a positive operator `σ`.
    ///
    /// Kraus operators `√(μ_j ν_v)·|φ_j⟩⟨w_v|` from the spectral
    /// decompositions `σ = Σ μ_j|φ_j⟩⟨φ_j|` and `a = Σ ν_v|w_v⟩⟨w_v|`.
    pub fn measure_and_prepare(a: &Effect, sigma: &Matrix) -> Result<Self> {
        sigma.check_dim(a.matrix())?;
        let tol = Tolerance::DEFAULT;
        let s = sigma.eigh(tol)?;
        if s.min() < -tol.eps() {
            return Err(Error::NotPsd {
                min_eigenvalue: s.min(),
            });
        }
        let e = a.matrix().eigh(tol)?;
        let mut kraus = Vec::new();
        for (j, &mu) in s.values.iter().enumerate() {
            if mu <= 0.0 {
                continue;
            }
            let phi = s.vectors.column(j);
            for (v, &nu) in e.values.iter().enumerate() {
                if nu <= 0.0 {
                    continue;
                }
                let w = e.vectors.column(v);
                kraus.push(Matrix::ket_bra(&phi, &w).scale((mu * nu).sqrt()));
            }
        }
        if kraus.is_empty() {
            return Ok(Operation::zero(a.dim()));
        }
        Ok(Operation { kraus })
    }

    /// `ρ ↦ tr(ρ)·σ`.
    pub fn constant(sigma: &Matrix) -> Result<Self> {
        Operation::measure_and_prepare(&Effect::identity(sigma.dim()), sigma)
    }

    pub fn kraus(&self) -> &[Matrix] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].dim()
    }

    /// `Σ K ρ K†`. Panics on dimension mismatch.
    pub fn apply(&self, rho: &Matrix) -> Matrix {
        let mut acc = Matrix::zeros(self.dim());
        for k in &self.kraus {
            acc += &k.sandwich(rho);
        }
        acc.hermitian_part()
    }

    /// Heisenberg picture `a ↦ Σ K† a K`. Panics on dimension mismatch.
    pub fn dual(&self, a: &Matrix) -> Matrix {
        let mut acc = Matrix::zeros(self.dim());
        for k in &self.kraus {
            acc += &k.adjoint().sandwich(a);
        }
        acc.hermitian_part()
    }

    /// `Σ K†K`, the dual image of the identity.
    pub fn kraus_sum(&self) -> Matrix {
        self.dual(&Matrix::identity(self.dim()))
    }

    /// `next ∘ self`: Kraus operators `N·K` for every pair.
    pub fn then(&self, next: &Operation) -> Operation {
        let kraus = next
            .kraus
            .iter()
            .flat_map(|n| self.kraus.iter().map(move |k| n * k))
            .collect();
        Operation { kraus }
    }
}

/// Operation-valued measure whose total need not be trace preserving.
#[derive(Clone, Debug, PartialEq)]
pub struct SubInstrument {
    space: OutcomeSpace,
    ops: Vec<Operation>,
}

/// Sub-instrument whose total `Ī = I(Ω)` is a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument(SubInstrument);

impl SubInstrument {
    pub fn new(space: OutcomeSpace, ops: Vec<Operation>) -> Result<Self> {
        SubInstrument::with_tol(space, ops, Tolerance::DEFAULT)
    }

    pub fn with_tol(space: OutcomeSpace, ops: Vec<Operation>, tol: Tolerance) -> Result<Self> {
        if ops.len() != space.len() {
            return Err(Error::ArityMismatch {
                expected: space.len(),
                found: ops.len(),
            });
        }
        for op in &ops[1..] {
            op.kraus[0].check_dim(&ops[0].kraus[0])?;
        }
        let s = SubInstrument { space, ops };
        let max = s.deficiency_matrix().eigh(tol)?.max();
        if max > 1.0 + tol.eps() {
            return Err(Error::TraceIncreasing {
                max_eigenvalue: max,
            });
        }
        Ok(s)
    }

    pub fn from_kraus(space: OutcomeSpace, kraus: Vec<Vec<Matrix>>) -> Result<Self> {
        let ops = kraus
            .into_iter()
            .map(Operation::new)
            .collect::<Result<Vec<_>>>()?;
        SubInstrument::new(space, ops)
    }

    pub(crate) fn from_trusted(space: OutcomeSpace, ops: Vec<Operation>) -> Self {
        debug_assert_eq!(space.len(), ops.len());
        SubInstrument { space, ops }
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn labels(&self) -> &[String] {
        self.space.labels()
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn op(&self, label: &str) -> Result<&Operation> {
        self.space
            .index_of(label)
            .map(|i| &self.ops[i])
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    fn deficiency_matrix(&self) -> Matrix {
        self.dual_indices(&self.space.all(), &Matrix::identity(self.dim()))
    }

    /// `D = Σ_x Σ_i C_{x,i}† C_{x,i}`.
    pub fn deficiency(&self) -> Effect {
        Effect::from_trusted(self.deficiency_matrix())
    }

    pub fn is_instrument(&self, tol: Tolerance) -> bool {
        self.deficiency_matrix()
            .max_abs_diff(&Matrix::identity(self.dim()))
            <= tol.eps()
    }

    /// `Σ_{x∈Δ} I(x)(ρ)` on index sets. Panics on dimension mismatch.
    pub fn apply_indices(&self, idx: &[usize], rho: &Matrix) -> Matrix {
        let mut acc = Matrix::zeros(self.dim());
        for &i in idx {
            acc += &self.ops[i].apply(rho);
        }
        acc
    }

    /// `Σ_{x∈Δ} I(x)*(a)` on index sets. Panics on dimension mismatch.
    pub fn dual_indices(&self, idx: &[usize], a: &Matrix) -> Matrix {
        let mut acc = Matrix::zeros(self.dim());
        for &i in idx {
            acc += &self.ops[i].dual(a);
        }
        acc
    }

    /// `I(Δ)` applied to an arbitrary operator.
    pub fn apply_matrix<S: AsRef<str>>(&self, event: &[S], rho: &Matrix) -> Result<Matrix> {
        rho.check_dim(&self.ops[0].kraus[0])?;
        Ok(self.apply_indices(&self.space.resolve(event)?, rho))
    }

    /// `I(Δ)(ρ)`.
    pub fn apply<S: AsRef<str>>(&self, event: &[S], rho: &State) -> Result<PartialState> {
        self.apply_matrix(event, rho.matrix())
            .map(PartialState::from_trusted)
    }

    /// `Ī(ρ) = I(Ω)(ρ)`. Panics on dimension mismatch.
    pub fn total_apply(&self, rho: &Matrix) -> Matrix {
        self.apply_indices(&self.space.all(), rho)
    }

    /// State after observing an outcome in `Δ`.
    pub fn update_state<S: AsRef<str>>(
        &self,
        event: &[S],
        rho: &State,
        tol: Tolerance,
    ) -> Result<State> {
        let out = self.apply(event, rho)?;
        let trace = out.trace();
        if trace <= tol.eps() {
            return Err(Error::ZeroProbability { trace });
        }
        out.normalize(tol)
    }

    /// `x ↦ tr[I(x)(ρ)]` in label order.
    pub fn distribution(&self, rho: &State) -> Result<Vec<(String, f64)>> {
        rho.matrix().check_dim(&self.ops[0].kraus[0])?;
        Ok(self
            .labels()
            .iter()
            .zip(&self.ops)
            .map(|(l, op)| (l.clone(), op.apply(rho.matrix()).trace().re))
            .collect())
    }

    /// `I*(Δ)(X)` for an arbitrary operator.
    pub fn dual_apply_matrix<S: AsRef<str>>(&self, event: &[S], a: &Matrix) -> Result<Matrix> {
        a.check_dim(&self.ops[0].kraus[0])?;
        Ok(self.dual_indices(&self.space.resolve(event)?, a))
    }

    /// `I*(Δ)(a)`, again an effect.
    pub fn dual_apply<S: AsRef<str>>(&self, event: &[S], a: &Effect) -> Result<Effect> {
        self.dual_apply_matrix(event, a.matrix())
            .map(Effect::from_trusted)
    }

    /// `I_a*: Δ ↦ I*(Δ)(a)`.
    pub fn determined_subobservable(&self, a: &Effect) -> Result<SubObservable> {
        a.matrix().check_dim(&self.ops[0].kraus[0])?;
        let effects = self
            .ops
            .iter()
            .map(|op| Effect::from_trusted(op.dual(a.matrix())))
            .collect();
        Ok(SubObservable::from_trusted(self.space.clone(), effects))
    }

    /// `I_I*`, an observable exactly when this is an instrument.
    pub fn measured_subobservable(&self) -> SubObservable {
        self.determined_subobservable(&Effect::identity(self.dim()))
            .expect("identity has matching dimension")
    }

    /// `I_a*` is an observable, i.e. `I*(Ω)(a) = I`.
    pub fn is_determined_observable(&self, a: &Effect, tol: Tolerance) -> Result<bool> {
        a.matrix().check_dim(&self.ops[0].kraus[0])?;
        Ok(self
            .dual_indices(&self.space.all(), a.matrix())
            .max_abs_diff(&Matrix::identity(self.dim()))
            <= tol.eps())
    }

    /// Adds outcome `y` with Kraus operator `(I − D)^{1/2}`.
    pub fn minimal_extension(&self, y: &str) -> Result<Instrument> {
        let space = self.space.extended(y)?;
        let rest = clamped_sqrt(&(&Matrix::identity(self.dim()) - &self.deficiency_matrix()));
        let mut ops = self.ops.clone();
        ops.push(Operation::from_trusted(vec![rest]));
        Ok(Instrument(SubInstrument { space, ops }))
    }
}

impl Instrument {
    pub fn new(space: OutcomeSpace, ops: Vec<Operation>) -> Result<Self> {
        Instrument::from_sub(SubInstrument::new(space, ops)?, Tolerance::DEFAULT)
    }

    pub fn from_kraus(space: OutcomeSpace, kraus: Vec<Vec<Matrix>>) -> Result<Self> {
        Instrument::from_sub(SubInstrument::from_kraus(space, kraus)?, Tolerance::DEFAULT)
    }

    pub fn from_sub(sub: SubInstrument, tol: Tolerance) -> Result<Self> {
        let deviation = sub
            .deficiency_matrix()
            .max_abs_diff(&Matrix::identity(sub.dim()));
        if deviation > tol.eps() {
            return Err(Error::NotChannel { deviation });
        }
        Ok(Instrument(sub))
    }

    pub(crate) fn from_trusted(sub: SubInstrument) -> Self {
        Instrument(sub)
    }

    /// Single outcome `x0` doing nothing.
    pub fn identity(dim: usize) -> Self {
        Instrument(SubInstrument {
            space: OutcomeSpace::indexed(1),
            ops: vec![Operation::identity(dim)],
        })
    }

    /// `L_x(ρ) = a_x∘ρ`.
    pub fn luders(a: &Observable) -> Self {
        let ops = a
            .effects()
            .iter()
            .map(|e| Operation::from_trusted(vec![e.sqrt()]))
            .collect();
        Instrument(SubInstrument {
            space: a.space().clone(),
            ops,
        })
    }

    /// `H(x)(ρ) = tr(ρ a_x)·α`.
    pub fn holevo(alpha: &State, a: &Observable) -> Result<Self> {
        alpha.matrix().check_dim(a.effects()[0].matrix())?;
        let ops = a
            .effects()
            .iter()
            .map(|e| Operation::measure_and_prepare(e, alpha.matrix()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Instrument(SubInstrument {
            space: a.space().clone(),
            ops,
        }))
    }

    /// `H(x)(ρ) = tr(ρ a_x)·α_x` with one state per outcome.
    pub fn finite_holevo(alphas: &BTreeMap<String, State>, a: &Observable) -> Result<Self> {
        if alphas.len() != a.len() {
            return Err(Error::OutcomeSpaceMismatch);
        }
        let ops = a
            .labels()
            .iter()
            .zip(a.effects())
            .map(|(l, e)| {
                let alpha = alphas.get(l).ok_or(Error::OutcomeSpaceMismatch)?;
                Operation::measure_and_prepare(e, alpha.matrix())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Instrument(SubInstrument {
            space: a.space().clone(),
            ops,
        }))
    }

    /// `I_α(x)(ρ) = tr(ρ)·I(x)(α)`: ignore the input and report `I` run on `α`.
    pub fn constant_state(source: &Instrument, alpha: &State) -> Result<Self> {
        alpha.matrix().check_dim(&source.ops[0].kraus[0])?;
        let ops = source
            .ops
            .iter()
            .map(|op| Operation::constant(&op.apply(alpha.matrix())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Instrument(SubInstrument {
            space: source.space.clone(),
            ops,
        }))
    }

    pub fn as_sub(&self) -> &SubInstrument {
        &self.0
    }

    pub fn into_sub(self) -> SubInstrument {
        self.0
    }

    /// `Î = I_I*`.
    pub fn measured_observable(&self) -> Observable {
        Observable::from_trusted(self.0.measured_subobservable())
    }

    /// Adds a fresh outcome mapped to the zero operation.
    pub fn extended_by_zero(&self, y: &str) -> Result<Instrument> {
        let space = self.0.space.extended(y)?;
        let mut ops = self.0.ops.clone();
        ops.push(Operation::zero(self.dim()));
        Ok(Instrument(SubInstrument { space, ops }))
    }
}

impl Deref for Instrument {
    type Target = SubInstrument;
    fn deref(&self) -> &SubInstrument {
        &self.0
    }
}

impl From<Instrument> for SubInstrument {
    fn from(i: Instrument) -> Self {
        i.0
    }
}

/// Column vector helper for building rank-one operators.
pub fn basis_vector(dim: usize, k: usize) -> Vec<C64> {
    (0..dim)
        .map(|i| C64::new(if i == k { 1.0 } else { 0.0 }, 0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: Tolerance = Tolerance::DEFAULT;

    fn p(i: usize) -> Effect {
        let mut d = [0.0, 0.0];
        d[i] = 1.0;
        Effect::new(Matrix::diag(&d)).unwrap()
    }

    fn plus() -> State {
        State::new(Matrix::real(&[0.5, 0.5, 0.5, 0.5])).unwrap()
    }

    fn sharp() -> Observable {
        Observable::from_effects(vec![p(0), p(1)]).unwrap()
    }

    fn noisy() -> Observable {
        let a = Effect::new(Matrix::real(&[0.6, 0.2, 0.2, 0.3])).unwrap();
        Observable::from_effects(vec![a.clone(), a.complement()]).unwrap()
    }

    fn close(a: &Matrix, b: &Matrix) -> bool {
        a.max_abs_diff(b) < 1e-12
    }

    #[test]
    fn operation_validation() {
        assert_eq!(Operation::new(vec![]).unwrap_err(), Error::EmptyKraus);
        let big = Matrix::identity(2).scale(1.1);
        assert!(matches!(Operation::new(vec![big]), Err(Error::TraceIncreasing { .. })));
        assert!(Operation::new(vec![Matrix::identity(2), Matrix::identity(3)]).is_err());
    }

    #[test]
    fn measure_and_prepare_realizes_its_map() {
        let a = noisy().effects()[0].clone();
        let sigma = Matrix::real(&[0.3, 0.1, 0.1, 0.2]);
        let op = Operation::measure_and_prepare(&a, &sigma).unwrap();
        let rho = plus();
        let expected = sigma.scale(rho.prob(&a));
        assert!(close(&op.apply(rho.matrix()), &expected));
        assert!(close(&op.kraus_sum(), &a.matrix().scale(sigma.trace().re)));
    }

    #[test]
    fn identity_instrument() {
        let id = Instrument::identity(2);
        let rho = plus();
        assert_eq!(id.apply(&["x0"], &rho).unwrap().matrix(), rho.matrix());
        assert_eq!(id.update_state(&["x0"], &rho, TOL).unwrap(), rho);
        assert_eq!(id.distribution(&rho).unwrap(), vec![("x0".to_string(), 1.0)]);
    }

    #[test]
    fn empty_event_gives_zero() {
        let empty: [&str; 0] = [];
        let out = Instrument::luders(&noisy()).apply(&empty, &plus()).unwrap();
        assert_eq!(out, PartialState::zero(2));
    }

    #[test]
    fn luders_on_plus() {
        let l = Instrument::luders(&sharp());
        let rho = plus();
        let out = l.apply(&["x0"], &rho).unwrap();
        assert!(close(out.matrix(), &Matrix::diag(&[0.5, 0.0])));
        let upd = l.update_state(&["x0"], &rho, TOL).unwrap();
        assert!(close(upd.matrix(), p(0).matrix()));
        let d = l.distribution(&rho).unwrap();
        assert!((d[0].1 - 0.5).abs() < 1e-12 && (d[1].1 - 0.5).abs() < 1e-12);
        assert!(close(&l.ops()[0].kraus()[0], p(0).matrix()));
        assert!(close(&l.ops()[1].kraus()[0], p(1).matrix()));
    }

    #[test]
    fn luders_scalar_roots() {
        let a = Observable::from_effects(vec![
            Effect::scalar(2, 0.25).unwrap(),
            Effect::scalar(2, 0.75).unwrap(),
        ])
        .unwrap();
        let l = Instrument::luders(&a);
        assert!(close(&l.ops()[0].kraus()[0], &Matrix::identity(2).scale(0.5)));
        assert!(close(&l.ops()[1].kraus()[0], &Matrix::identity(2).scale(0.75f64.sqrt())));
        let single = Instrument::luders(&Observable::trivial(2));
        assert!(close(&single.ops()[0].kraus()[0], &Matrix::identity(2)));
    }

    #[test]
    fn zero_probability_update() {
        let l = Instrument::luders(&sharp());
        let rho = State::new(Matrix::diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(
            l.update_state(&["x1"], &rho, TOL),
            Err(Error::ZeroProbability { .. })
        ));
    }

    #[test]
    fn luders_dual_is_sandwich() {
        let a = noisy();
        let l = Instrument::luders(&a);
        let b = Effect::new(Matrix::real(&[0.2, 0.1, 0.1, 0.9])).unwrap();
        for (x, ax) in a.labels().iter().zip(a.effects()) {
            let got = l.dual_apply(&[x], &b).unwrap();
            assert!(close(got.matrix(), ax.seq_product(&b).matrix()));
        }
        assert!(close(l.measured_observable().total().matrix(), &Matrix::identity(2)));
        assert!(l.measured_observable().max_abs_diff(&a).unwrap() < 1e-12);
    }

    #[test]
    fn holevo_family() {
        let alpha = State::new(Matrix::real(&[0.7, 0.2, 0.2, 0.3])).unwrap();
        let a = noisy();
        let h = Instrument::holevo(&alpha, &a).unwrap();
        let rho = plus();
        for (x, ax) in a.labels().iter().zip(a.effects()) {
            let out = h.apply(&[x], &rho).unwrap();
            assert!(close(out.matrix(), &alpha.matrix().scale(rho.prob(ax))));
            let upd = h.update_state(&[x], &rho, TOL).unwrap();
            assert!(close(upd.matrix(), alpha.matrix()));
        }
        let b = Effect::new(Matrix::diag(&[0.9, 0.1])).unwrap();
        let det = h.determined_subobservable(&b).unwrap();
        let scale = alpha.prob(&b);
        for (got, ax) in det.effects().iter().zip(a.effects()) {
            assert!(close(got.matrix(), &ax.matrix().scale(scale)));
        }
        assert!(h.measured_observable().max_abs_diff(&a).unwrap() < 1e-12);

        let p0 = State::new(p(0).into_matrix()).unwrap();
        let h = Instrument::holevo(&p0, &sharp()).unwrap();
        assert!(close(h.apply(&["x0"], &plus()).unwrap().matrix(), &Matrix::diag(&[0.5, 0.0])));
        let any = Instrument::holevo(&alpha, &Observable::trivial(2)).unwrap();
        assert!(close(any.apply(&["x0"], &plus()).unwrap().matrix(), alpha.matrix()));
    }

    #[test]
    fn finite_holevo_family() {
        let a = noisy();
        let s0 = State::new(Matrix::diag(&[1.0, 0.0])).unwrap();
        let s1 = State::new(Matrix::real(&[0.5, 0.5, 0.5, 0.5])).unwrap();
        let alphas: BTreeMap<String, State> =
            [("x0".to_string(), s0.clone()), ("x1".to_string(), s1.clone())].into();
        let h = Instrument::finite_holevo(&alphas, &a).unwrap();
        let rho = State::maximally_mixed(2);
        assert!(close(
            h.apply(&["x1"], &rho).unwrap().matrix(),
            &s1.matrix().scale(rho.prob(&a.effects()[1]))
        ));
        let b = p(0);
        let det = h.determined_subobservable(&b).unwrap();
        assert!(close(det.effects()[0].matrix(), &a.effects()[0].matrix().scale(s0.prob(&b))));
        assert!(close(det.effects()[1].matrix(), &a.effects()[1].matrix().scale(s1.prob(&b))));
        // tr(α_0 P0) = 1 but tr(α_1 P0) = 1/2
        assert!(!h.is_determined_observable(&b, TOL).unwrap());
        let same: BTreeMap<String, State> =
            [("x0".to_string(), s0.clone()), ("x1".to_string(), s0.clone())].into();
        let h0 = Instrument::finite_holevo(&same, &a).unwrap();
        assert!(h0.is_determined_observable(&b, TOL).unwrap());
        let h1 = Instrument::holevo(&s0, &a).unwrap();
        for x in a.labels() {
            assert!(close(
                h0.apply(&[x], &plus()).unwrap().matrix(),
                h1.apply(&[x], &plus()).unwrap().matrix()
            ));
        }
        let wrong: BTreeMap<String, State> = [("x0".to_string(), s0)].into();
        assert_eq!(Instrument::finite_holevo(&wrong, &a).unwrap_err(), Error::OutcomeSpaceMismatch);
    }

    #[test]
    fn constant_state_family() {
        let alpha = State::new(Matrix::real(&[0.6, 0.3, 0.3, 0.4])).unwrap();
        let source = Instrument::luders(&noisy());
        let c = Instrument::constant_state(&source, &alpha).unwrap();
        assert!(c.is_instrument(TOL));
        for x in c.labels() {
            let target = source.apply(&[x], &alpha).unwrap();
            for rho in [plus(), State::maximally_mixed(2)] {
                assert!(close(c.apply(&[x], &rho).unwrap().matrix(), target.matrix()));
            }
        }
        let a = Effect::new(Matrix::diag(&[0.8, 0.3])).unwrap();
        let det = c.determined_subobservable(&a).unwrap();
        for (x, got) in c.labels().iter().zip(det.effects()) {
            let w = a.trace_with(source.apply(&[x], &alpha).unwrap().matrix());
            assert!(close(got.matrix(), &Matrix::identity(2).scale(w)));
        }
        let m = c.measured_observable();
        for (x, got) in c.labels().iter().zip(m.effects()) {
            let w = source.apply(&[x], &alpha).unwrap().trace();
            assert!(close(got.matrix(), &Matrix::identity(2).scale(w)));
        }
        let id = Instrument::constant_state(&Instrument::identity(2), &alpha).unwrap();
        assert!(close(id.apply(&["x0"], &plus()).unwrap().matrix(), alpha.matrix()));
    }

    #[test]
    fn determined_observable_criteria() {
        let l = Instrument::luders(&noisy());
        assert!(l.is_determined_observable(&Effect::identity(2), TOL).unwrap());
        assert!(!l.is_determined_observable(&Effect::scalar(2, 0.99).unwrap(), TOL).unwrap());
        // constant-state with Ī(α) = P1: a fixes ψ1 exactly when determined
        let p1 = State::new(p(1).into_matrix()).unwrap();
        let c = Instrument::constant_state(&Instrument::luders(&sharp()), &p1).unwrap();
        let fixes = Effect::new(Matrix::diag(&[0.3, 1.0])).unwrap();
        let moves = Effect::new(Matrix::diag(&[1.0, 0.9])).unwrap();
        assert!(c.is_determined_observable(&fixes, TOL).unwrap());
        assert!(!c.is_determined_observable(&moves, TOL).unwrap());
        let zero = l.determined_subobservable(&Effect::zero(2)).unwrap();
        assert_eq!(zero, SubObservable::zero(l.space().clone(), 2));
    }

    #[test]
    fn sub_instrument_extension() {
        let l = Instrument::luders(&sharp());
        let part = SubInstrument::new(OutcomeSpace::indexed(1), vec![l.ops()[0].clone()]).unwrap();
        assert!(!part.is_instrument(TOL));
        assert!(close(part.deficiency().matrix(), p(0).matrix()));
        let ext = part.minimal_extension("y").unwrap();
        assert!(ext.is_instrument(TOL));
        assert!(close(&ext.op("y").unwrap().kraus()[0], p(1).matrix()));
        let full = l.minimal_extension("y").unwrap();
        assert!(full.op("y").unwrap().kraus()[0].max_abs() < 1e-12);
        assert_eq!(l.minimal_extension("x0").unwrap_err(), Error::LabelCollision("x0".into()));
    }

    #[test]
    fn sub_instrument_rejects_excess() {
        let l = Instrument::luders(&sharp());
        let doubled = vec![l.ops()[0].clone(), l.ops()[0].clone()];
        assert!(matches!(
            SubInstrument::new(OutcomeSpace::indexed(2), doubled),
            Err(Error::TraceIncreasing { .. })
        ));
        let half = vec![Matrix::identity(2).scale(0.5)];
        assert!(matches!(
            Instrument::from_kraus(OutcomeSpace::indexed(1), vec![half]),
            Err(Error::NotChannel { .. })
        ));
    }

    #[test]
    fn composition_of_operations() {
        let a = Operation::identity(2).then(&Operation::new(vec![p(0).into_matrix()]).unwrap());
        assert!(close(&a.apply(plus().matrix()), &Matrix::diag(&[0.5, 0.0])));
    }

    #[test]
    fn basis_vectors() {
        assert_eq!(basis_vector(3, 1)[1], C64::new(1.0, 0.0));
        assert_eq!(basis_vector(3, 1)[0], C64::new(0.0, 0.0));
    }
}
