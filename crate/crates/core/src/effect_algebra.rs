//! Effect-algebra axioms, determined families `U_I = {I_a*}`, Sob closure and convexity.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::effects::{clamped_sqrt, Effect, State};
use crate::error::{Error, Result};
use crate::instruments::Instrument;
use crate::linalg::{Matrix, Tolerance};
use crate::observables::{Observable, SubObservable};
use crate::random;
use crate::C64;

/// Eigenvalue slack used when deciding whether a searched candidate is an effect.
pub const SEARCH_SLACK: f64 = 1e-7;
/// Smallest singular value above which a linear map on Hermitian matrices counts as injective.
pub const INJECTIVE_FLOOR: f64 = 1e-6;

/// Constraint residual at which a feasible search candidate stops being refined.
const POLISHED: f64 = 1e-14;

/// A partial algebra `(E, 0, 1, ⊕)` to be checked against E1–E4.
pub trait EffectAlgebra {
    type Elem: Clone;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    /// `Some(a ⊕ b)` when `a ⊥ b`.
    fn oplus(&self, a: &Self::Elem, b: &Self::Elem) -> Option<Self::Elem>;
    fn same(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
    /// The model's candidate for `a′`, if it has one.
    fn complement(&self, a: &Self::Elem) -> Option<Self::Elem>;
}

/// Outcome of one axiom over a sample set. Witnesses are sample indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub passed: bool,
    pub cases: usize,
    pub witness: Option<Vec<usize>>,
}

impl AxiomCheck {
    fn new() -> Self {
        AxiomCheck {
            passed: true,
            cases: 0,
            witness: None,
        }
    }

    fn fail(&mut self, witness: Vec<usize>) {
        if self.passed {
            self.passed = false;
            self.witness = Some(witness);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub e1: AxiomCheck,
    pub e2: AxiomCheck,
    pub e3: AxiomCheck,
    pub e4: AxiomCheck,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.e1.passed && self.e2.passed && self.e3.passed && self.e4.passed
    }
}

/// Evaluates E1–E4 over every pair and triple drawn from `samples`.
pub fn check_axioms<M: EffectAlgebra>(model: &M, samples: &[M::Elem]) -> AxiomReport {
    let n = samples.len();
    let sums: Vec<Vec<Option<M::Elem>>> = (0..n)
        .map(|i| (0..n).map(|j| model.oplus(&samples[i], &samples[j])).collect())
        .collect();

    // E1: a ⊥ b ⇒ b ⊥ a and a ⊕ b = b ⊕ a
    let mut e1 = AxiomCheck::new();
    for i in 0..n {
        for j in 0..n {
            if let Some(ab) = &sums[i][j] {
                e1.cases += 1;
                match &sums[j][i] {
                    Some(ba) if model.same(ab, ba) => {}
                    _ => e1.fail(vec![i, j]),
                }
            }
        }
    }

    // E2: a ⊥ b, (a ⊕ b) ⊥ c ⇒ b ⊥ c, a ⊥ (b ⊕ c), and the two bracketings agree
    let mut e2 = AxiomCheck::new();
    for i in 0..n {
        for j in 0..n {
            let Some(ab) = &sums[i][j] else { continue };
            for k in 0..n {
                let Some(ab_c) = model.oplus(ab, &samples[k]) else {
                    continue;
                };
                e2.cases += 1;
                let ok = sums[j][k]
                    .as_ref()
                    .and_then(|bc| model.oplus(&samples[i], bc))
                    .is_some_and(|a_bc| model.same(&a_bc, &ab_c));
                if !ok {
                    e2.fail(vec![i, j, k]);
                }
            }
        }
    }

    // E3: a′ exists with a ⊕ a′ = 1, and it is the only sample doing so
    let mut e3 = AxiomCheck::new();
    let one = model.one();
    for i in 0..n {
        e3.cases += 1;
        let Some(c) = model.complement(&samples[i]) else {
            e3.fail(vec![i]);
            continue;
        };
        if !model
            .oplus(&samples[i], &c)
            .is_some_and(|s| model.same(&s, &one))
        {
            e3.fail(vec![i]);
            continue;
        }
        for j in 0..n {
            if sums[i][j].as_ref().is_some_and(|s| model.same(s, &one))
                && !model.same(&samples[j], &c)
            {
                e3.fail(vec![i, j]);
            }
        }
    }

    // E4: a ⊥ 1 ⇒ a = 0
    let mut e4 = AxiomCheck::new();
    let zero = model.zero();
    for (i, a) in samples.iter().enumerate() {
        e4.cases += 1;
        if model.oplus(a, &one).is_some() && !model.same(a, &zero) {
            e4.fail(vec![i]);
        }
    }

    AxiomReport { e1, e2, e3, e4 }
}

/// Effect algebra given by an explicit partial addition table on ids `0..size`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteEffectAlgebraModel {
    size: usize,
    zero: usize,
    one: usize,
    table: BTreeMap<(usize, usize), usize>,
}

impl FiniteEffectAlgebraModel {
    pub fn new(
        size: usize,
        zero: usize,
        one: usize,
        table: impl IntoIterator<Item = ((usize, usize), usize)>,
    ) -> Result<Self> {
        let table: BTreeMap<_, _> = table.into_iter().collect();
        let in_range = |k: usize| k < size;
        if !in_range(zero) || !in_range(one) {
            return Err(Error::Precondition("zero and one must be elements".into()));
        }
        if table
            .iter()
            .any(|(&(a, b), &c)| !in_range(a) || !in_range(b) || !in_range(c))
        {
            return Err(Error::Precondition("addition table names an unknown element".into()));
        }
        Ok(FiniteEffectAlgebraModel {
            size,
            zero,
            one,
            table,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn elements(&self) -> Vec<usize> {
        (0..self.size).collect()
    }

    pub fn check(&self) -> AxiomReport {
        check_axioms(self, &self.elements())
    }
}

impl EffectAlgebra for FiniteEffectAlgebraModel {
    type Elem = usize;

    fn zero(&self) -> usize {
        self.zero
    }

    fn one(&self) -> usize {
        self.one
    }

    fn oplus(&self, a: &usize, b: &usize) -> Option<usize> {
        self.table.get(&(*a, *b)).copied()
    }

    fn same(&self, a: &usize, b: &usize) -> bool {
        a == b
    }

    fn complement(&self, a: &usize) -> Option<usize> {
        (0..self.size).find(|b| self.oplus(a, b) == Some(self.one))
    }
}

/// The effects `E(H)` with `a ⊥ b ⇔ a + b ≤ I`.
#[derive(Clone, Copy, Debug)]
pub struct EffectSpace {
    pub dim: usize,
    pub tol: Tolerance,
}

impl EffectAlgebra for EffectSpace {
    type Elem = Effect;

    fn zero(&self) -> Effect {
        Effect::zero(self.dim)
    }

    fn one(&self) -> Effect {
        Effect::identity(self.dim)
    }

    fn oplus(&self, a: &Effect, b: &Effect) -> Option<Effect> {
        a.oplus(b, self.tol).ok()
    }

    fn same(&self, a: &Effect, b: &Effect) -> bool {
        a.matrix().max_abs_diff(b.matrix()) <= self.tol.eps()
    }

    fn complement(&self, a: &Effect) -> Option<Effect> {
        Some(a.complement())
    }
}

/// A member `I_a*` of a determined family together with its generator `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub generator: Effect,
    pub sub: SubObservable,
}

/// `U_I = {I_a* : a ∈ E(H)}` with `I_a* ⊕ I_b* = I_{a+b}*` whenever `a ⊥ b`.
#[derive(Clone, Debug)]
pub struct DeterminedFamily {
    instrument: Instrument,
    tol: Tolerance,
}

/// Result of checking `F(a) = I_a*` against the ⊕ structure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorphismReport {
    pub pairs: usize,
    pub max_residual: f64,
    pub unit_residual: f64,
    pub failures: Vec<usize>,
    pub passed: bool,
}

impl DeterminedFamily {
    pub fn new(instrument: Instrument, tol: Tolerance) -> Self {
        DeterminedFamily { instrument, tol }
    }

    pub fn instrument(&self) -> &Instrument {
        &self.instrument
    }

    pub fn member(&self, a: &Effect) -> Result<Member> {
        Ok(Member {
            generator: a.clone(),
            sub: self.instrument.determined_subobservable(a)?,
        })
    }

    /// `I_a* ⊕ I_b* = I_{a+b}*`, defined only when `a ⊥ b`.
    pub fn oplus(&self, a: &Effect, b: &Effect) -> Result<SubObservable> {
        let s = a.oplus(b, self.tol)?;
        self.instrument.determined_subobservable(&s)
    }

    /// `‖(I_a*)′ − I_{a′}*‖` where `(I_a*)′ = Î − I_a*` pointwise.
    pub fn complement_residual(&self, a: &Effect) -> Result<f64> {
        let hat = self.instrument.measured_observable();
        let ia = self.instrument.determined_subobservable(a)?;
        let ia_c = self.instrument.determined_subobservable(&a.complement())?;
        Ok(hat
            .effects()
            .iter()
            .zip(ia.effects())
            .zip(ia_c.effects())
            .map(|((h, x), y)| (h.matrix() - x.matrix()).max_abs_diff(y.matrix()))
            .fold(0.0, f64::max))
    }

    /// `F(a ⊕ b) = F(a) + F(b)` pointwise for each pair, and `F(I) = Î`.
    pub fn check_morphism(&self, pairs: &[(Effect, Effect)]) -> Result<MorphismReport> {
        let mut max_residual: f64 = 0.0;
        let mut failures = Vec::new();
        for (k, (a, b)) in pairs.iter().enumerate() {
            let joint = self.oplus(a, b)?;
            let ia = self.instrument.determined_subobservable(a)?;
            let ib = self.instrument.determined_subobservable(b)?;
            let r = joint
                .effects()
                .iter()
                .zip(ia.effects().iter().zip(ib.effects()))
                .map(|(s, (x, y))| s.matrix().max_abs_diff(&(x.matrix() + y.matrix())))
                .fold(0.0, f64::max);
            if r > self.tol.eps() {
                failures.push(k);
            }
            max_residual = max_residual.max(r);
        }
        let unit = self
            .instrument
            .determined_subobservable(&Effect::identity(self.instrument.dim()))?
            .max_abs_diff(&self.instrument.measured_observable())?;
        let passed = failures.is_empty() && unit <= self.tol.eps();
        Ok(MorphismReport {
            pairs: pairs.len(),
            max_residual,
            unit_residual: unit,
            failures,
            passed,
        })
    }
}

impl EffectAlgebra for DeterminedFamily {
    type Elem = Member;

    fn zero(&self) -> Member {
        self.member(&Effect::zero(self.instrument.dim()))
            .expect("matching dimension")
    }

    fn one(&self) -> Member {
        self.member(&Effect::identity(self.instrument.dim()))
            .expect("matching dimension")
    }

    fn oplus(&self, a: &Member, b: &Member) -> Option<Member> {
        let s = a.generator.oplus(&b.generator, self.tol).ok()?;
        self.member(&s).ok()
    }

    fn same(&self, a: &Member, b: &Member) -> bool {
        a.sub
            .max_abs_diff(&b.sub)
            .is_ok_and(|r| r <= self.tol.eps())
    }

    fn complement(&self, a: &Member) -> Option<Member> {
        self.member(&a.generator.complement()).ok()
    }
}

/// Families of sub-observables whose Sob effect-algebra conditions can be tested.
#[derive(Clone, Debug)]
pub enum SobFamilySpec {
    /// `U_H` for the Holevo instrument `H_(α, A)`.
    Holevo { alpha: State, observable: Observable },
    /// `U_L` for the Lüders instrument of a projection-valued observable.
    SharpLuders { observable: Observable },
    /// `U_{I_α}` for the constant-state instrument built from `source` and `α`.
    ConstantState { source: Instrument, alpha: State },
    /// An explicit finite list; it must contain exactly one observable `Z`.
    ExplicitList { members: Vec<SubObservable> },
    /// `{λZ : λ ∈ [0, 1]}` for an observable `Z`.
    Scalings { z: Observable },
    /// `U_I` for an arbitrary instrument, searched without a closed-form witness.
    Determined { instrument: Instrument },
}

impl SobFamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            SobFamilySpec::Holevo { .. } => "holevo",
            SobFamilySpec::SharpLuders { .. } => "sharp-luders",
            SobFamilySpec::ConstantState { .. } => "constant-state",
            SobFamilySpec::ExplicitList { .. } => "explicit-list",
            SobFamilySpec::Scalings { .. } => "scalings",
            SobFamilySpec::Determined { .. } => "determined",
        }
    }

    /// The instrument `I` when the family is `U_I`.
    pub fn instrument(&self) -> Result<Option<Instrument>> {
        Ok(match self {
            SobFamilySpec::Holevo { alpha, observable } => {
                Some(Instrument::holevo(alpha, observable)?)
            }
            SobFamilySpec::SharpLuders { observable } => Some(Instrument::luders(observable)),
            SobFamilySpec::ConstantState { source, alpha } => {
                Some(Instrument::constant_state(source, alpha)?)
            }
            SobFamilySpec::Determined { instrument } => Some(instrument.clone()),
            SobFamilySpec::ExplicitList { .. } | SobFamilySpec::Scalings { .. } => None,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            SobFamilySpec::Holevo { alpha, .. } => alpha.dim(),
            SobFamilySpec::SharpLuders { observable } => observable.dim(),
            SobFamilySpec::ConstantState { alpha, .. } => alpha.dim(),
            SobFamilySpec::ExplicitList { members } => members[0].dim(),
            SobFamilySpec::Scalings { z } => z.dim(),
            SobFamilySpec::Determined { instrument } => instrument.dim(),
        }
    }
}

/// Whether `I_a* + I_b*` is again a member of the family.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ClosureVerdict {
    /// `c` is an effect with `I_c* = I_a* + I_b*` up to `residual`.
    Witness { c: Effect, residual: f64 },
    /// The sum is the list member at `index`.
    ListMember { index: usize, residual: f64 },
    /// The constructive witness failed; `residual` measures by how much.
    CriterionViolated { residual: f64 },
    /// No witness found by search; `best_violation` is the closest eigenvalue excess.
    Unknown { best_violation: f64 },
}

impl ClosureVerdict {
    pub fn closed(&self) -> bool {
        matches!(self, ClosureVerdict::Witness { .. } | ClosureVerdict::ListMember { .. })
    }
}

fn sum_in_sob(x: &SubObservable, y: &SubObservable, tol: Tolerance) -> Result<SubObservable> {
    x.add(y, tol).map_err(|e| match e {
        Error::SumEscapesSob { max_eigenvalue } => Error::Precondition(format!(
            "sum of the two members leaves Sob(H) (largest eigenvalue {max_eigenvalue})"
        )),
        other => other,
    })
}

fn witness_verdict(
    instrument: &Instrument,
    c: Matrix,
    target: &SubObservable,
    tol: Tolerance,
) -> Result<ClosureVerdict> {
    let Ok(c) = Effect::with_tol(c, tol) else {
        return Ok(ClosureVerdict::CriterionViolated {
            residual: f64::INFINITY,
        });
    };
    let residual = instrument.determined_subobservable(&c)?.max_abs_diff(target)?;
    Ok(if residual <= tol.eps() {
        ClosureVerdict::Witness { c, residual }
    } else {
        ClosureVerdict::CriterionViolated { residual }
    })
}

/// Tests S3 for `I_a* + I_b*` in a parameterized family, using the family's
/// constructive witness or, for constant-state families, a feasibility search.
pub fn check_sob_closure(
    spec: &SobFamilySpec,
    a: &Effect,
    b: &Effect,
    tol: Tolerance,
    seed: u64,
) -> Result<ClosureVerdict> {
    let Some(instrument) = spec.instrument()? else {
        return Err(Error::Precondition(format!(
            "{} families are not indexed by effects",
            spec.name()
        )));
    };
    a.matrix().check_dim(b.matrix())?;
    let ia = instrument.determined_subobservable(a)?;
    let ib = instrument.determined_subobservable(b)?;
    let target = sum_in_sob(&ia, &ib, tol)?;
    let dim = a.dim();
    let ab = a.matrix() + b.matrix();
    match spec {
        SobFamilySpec::Holevo { alpha, .. } => {
            let w = alpha.prob(a) + alpha.prob(b);
            witness_verdict(&instrument, Matrix::identity(dim).scale(w), &target, tol)
        }
        SobFamilySpec::SharpLuders { observable } => {
            if !observable.is_sharp(tol) {
                return Err(Error::Precondition("observable is not projection-valued".into()));
            }
            let mut c = Matrix::zeros(dim);
            for p in observable.effects() {
                c += &p.matrix().sandwich(&ab);
            }
            witness_verdict(&instrument, c.hermitian_part(), &target, tol)
        }
        SobFamilySpec::ConstantState { source, alpha } => {
            if a.is_perp(b, tol)? {
                return witness_verdict(&instrument, ab, &target, tol);
            }
            // tr[σ_x c] = tr[σ_x (a + b)] with σ_x = I(x)(α)
            let rows: Vec<Vec<f64>> = source
                .ops()
                .iter()
                .map(|op| op.apply(alpha.matrix()).hermitian_coords())
                .collect();
            let set = AffineSet::new(dim, rows, &ab);
            let mut rng = random::rng(seed);
            let found = search_effect(&set, &ab, &mut rng, &SearchOptions::default());
            match found.witness {
                Some(c) => witness_verdict(&instrument, c.into_matrix(), &target, tol),
                None => Ok(ClosureVerdict::Unknown {
                    best_violation: found.best_violation,
                }),
            }
        }
        SobFamilySpec::Determined { instrument } => {
            if a.is_perp(b, tol)? {
                return witness_verdict(instrument, ab, &target, tol);
            }
            let set = AffineSet::new(dim, dual_rows(instrument), &ab);
            let mut rng = random::rng(seed);
            let found = search_effect(&set, &ab, &mut rng, &SearchOptions::default());
            match found.witness {
                Some(c) => witness_verdict(instrument, c.into_matrix(), &target, tol),
                None => Ok(ClosureVerdict::Unknown {
                    best_violation: found.best_violation,
                }),
            }
        }
        SobFamilySpec::ExplicitList { .. } | SobFamilySpec::Scalings { .. } => unreachable!(),
    }
}

/// Rows of `c ↦ (I*(x)(c))_x` in Hermitian coordinates, one block per outcome.
fn dual_rows(instrument: &Instrument) -> Vec<Vec<f64>> {
    let d = instrument.dim();
    let n = d * d;
    let mut rows = Vec::with_capacity(instrument.len() * n);
    for op in instrument.ops() {
        let images: Vec<Vec<f64>> = (0..n)
            .map(|l| {
                let mut e = vec![0.0; n];
                e[l] = 1.0;
                op.dual(&Matrix::from_hermitian_coords(d, &e)).hermitian_coords()
            })
            .collect();
        rows.extend((0..n).map(|k| (0..n).map(|l| images[l][k]).collect::<Vec<f64>>()));
    }
    rows
}

/// Tests S3 for the sum of two members of an explicit list.
pub fn check_list_closure(
    members: &[SubObservable],
    i: usize,
    j: usize,
    tol: Tolerance,
) -> Result<ClosureVerdict> {
    let (x, y) = (list_get(members, i)?, list_get(members, j)?);
    let target = sum_in_sob(x, y, tol)?;
    Ok(match find_member(members, &target, tol) {
        Some((index, residual)) => ClosureVerdict::ListMember { index, residual },
        None => ClosureVerdict::CriterionViolated {
            residual: nearest_member(members, &target),
        },
    })
}

fn list_get(members: &[SubObservable], i: usize) -> Result<&SubObservable> {
    members
        .get(i)
        .ok_or_else(|| Error::Precondition(format!("no list member {i}")))
}

fn find_member(members: &[SubObservable], s: &SubObservable, tol: Tolerance) -> Option<(usize, f64)> {
    members.iter().enumerate().find_map(|(k, m)| {
        let r = m.max_abs_diff(s).ok()?;
        (r <= tol.eps()).then_some((k, r))
    })
}

fn nearest_member(members: &[SubObservable], s: &SubObservable) -> f64 {
    members
        .iter()
        .filter_map(|m| m.max_abs_diff(s).ok())
        .fold(f64::INFINITY, f64::min)
}

/// Conditions S1–S3 for an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ListSobReport {
    /// Indices of members that are observables.
    pub observables: Vec<usize>,
    pub s1: bool,
    pub s2: bool,
    pub s2_witness: Option<usize>,
    pub s3: bool,
    pub s3_witness: Option<(usize, usize)>,
}

impl ListSobReport {
    pub fn passed(&self) -> bool {
        self.s1 && self.s2 && self.s3
    }
}

fn difference(z: &SubObservable, a: &SubObservable, tol: Tolerance) -> Option<SubObservable> {
    if z.space() != a.space() {
        return None;
    }
    let effects = z
        .effects()
        .iter()
        .zip(a.effects())
        .map(|(p, q)| Effect::with_tol(p.matrix() - q.matrix(), tol).ok())
        .collect::<Option<Vec<_>>>()?;
    SubObservable::with_tol(z.space().clone(), effects, tol).ok()
}

/// Checks S1 (one observable `Z`), S2 (`Z − A` in the list) and S3 (closure under defined sums).
pub fn check_list_sob_conditions(members: &[SubObservable], tol: Tolerance) -> Result<ListSobReport> {
    if members.is_empty() {
        return Err(Error::Precondition("empty family".into()));
    }
    let observables: Vec<usize> = members
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_observable(tol))
        .map(|(k, _)| k)
        .collect();
    let s1 = observables.len() == 1;
    let mut s2_witness = None;
    if let Some(&z) = observables.first() {
        for (k, a) in members.iter().enumerate() {
            let ok = difference(&members[z], a, tol).is_some_and(|d| find_member(members, &d, tol).is_some());
            if !ok {
                s2_witness = Some(k);
                break;
            }
        }
    }
    let mut s3_witness = None;
    'outer: for i in 0..members.len() {
        for j in 0..members.len() {
            if let Ok(s) = members[i].add(&members[j], tol) {
                if find_member(members, &s, tol).is_none() {
                    s3_witness = Some((i, j));
                    break 'outer;
                }
            }
        }
    }
    Ok(ListSobReport {
        s2: s1 && s2_witness.is_none(),
        s1,
        observables,
        s2_witness,
        s3: s3_witness.is_none(),
        s3_witness,
    })
}

/// The finite effect algebra of a list: `A ⊥ B ⇔ A + B ∈ Sob(H)`, zero `0`, one `Z`.
pub fn list_model(members: &[SubObservable], tol: Tolerance) -> Result<FiniteEffectAlgebraModel> {
    let z = members
        .iter()
        .position(|m| m.is_observable(tol))
        .ok_or_else(|| Error::Precondition("family has no observable".into()))?;
    let zero = members
        .iter()
        .position(|m| m.effects().iter().all(|e| e.matrix().max_abs() <= tol.eps()))
        .ok_or_else(|| Error::Precondition("family has no zero member".into()))?;
    let mut table = Vec::new();
    for i in 0..members.len() {
        for j in 0..members.len() {
            if let Ok(s) = members[i].add(&members[j], tol) {
                if let Some((k, _)) = find_member(members, &s, tol) {
                    table.push(((i, j), k));
                }
            }
        }
    }
    FiniteEffectAlgebraModel::new(members.len(), zero, z, table)
}

/// Scalar-closure test for convexity: `A ∈ U, λ ∈ [0, 1] ⇒ λA ∈ U`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub family: String,
    pub convex: bool,
    pub checked: usize,
    pub max_residual: f64,
    /// `(member index or trial, λ)` of the first failure.
    pub witness: Option<(usize, f64)>,
}

/// Scaling factors tried on explicit lists before the random ones.
pub const CONVEXITY_GRID: [f64; 3] = [0.5, 0.25, 0.75];

pub fn check_convexity(
    spec: &SobFamilySpec,
    trials: usize,
    seed: u64,
    tol: Tolerance,
) -> Result<ConvexityReport> {
    let mut report = ConvexityReport {
        family: spec.name().to_string(),
        convex: true,
        checked: 0,
        max_residual: 0.0,
        witness: None,
    };
    let record = |report: &mut ConvexityReport, k: usize, lambda: f64, residual: f64| {
        report.checked += 1;
        report.max_residual = report.max_residual.max(residual);
        if residual > tol.eps() && report.convex {
            report.convex = false;
            report.witness = Some((k, lambda));
        }
    };
    match spec {
        SobFamilySpec::ExplicitList { members } => {
            let mut rng = random::rng(seed);
            let mut lambdas = CONVEXITY_GRID.to_vec();
            lambdas.extend((0..trials).map(|_| rng.random::<f64>()));
            for &lambda in &lambdas {
                for (k, m) in members.iter().enumerate() {
                    let scaled = m.scale(lambda)?;
                    let r = nearest_member(members, &scaled);
                    record(&mut report, k, lambda, r);
                }
            }
        }
        SobFamilySpec::Scalings { z } => {
            for t in 0..trials {
                let mut rng = random::trial_rng(seed, t as u64);
                let (mu, lambda) = (rng.random::<f64>(), rng.random::<f64>());
                let scaled = z.scale(mu)?.scale(lambda)?;
                record(&mut report, t, lambda, scaling_residual(&scaled, z)?);
            }
        }
        _ => {
            let instrument = spec.instrument()?.expect("parameterized family");
            let dim = spec.dim();
            for t in 0..trials {
                let mut rng = random::trial_rng(seed, t as u64);
                let a = random::effect(&mut rng, dim);
                let lambda = rng.random::<f64>();
                let lhs = instrument.determined_subobservable(&a)?.scale(lambda)?;
                let rhs = instrument.determined_subobservable(&a.scale(lambda)?)?;
                record(&mut report, t, lambda, lhs.max_abs_diff(&rhs)?);
            }
        }
    }
    Ok(report)
}

/// Distance from `s` to the nearest `λZ`, `λ ∈ [0, 1]`.
fn scaling_residual(s: &SubObservable, z: &SubObservable) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in s.effects().iter().zip(z.effects()) {
        num += x.matrix().trace_product(y.matrix()).re;
        den += y.matrix().trace_product(y.matrix()).re;
    }
    let lambda = if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 0.0 };
    s.max_abs_diff(&z.scale(lambda)?)
}

/// Affine subspace `{c : R·coords(c) = R·coords(c₀)}` of Hermitian matrices.
struct AffineSet {
    dim: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    gram_pinv: Vec<Vec<f64>>,
}

fn real_symmetric_pinv(g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = g.len();
    let mat = Matrix::from_fn(m, |i, j| C64::new(0.5 * (g[i][j] + g[j][i]), 0.0));
    let eig = mat.eigh(Tolerance::DEFAULT).expect("symmetric input");
    let cut = 1e-12 * eig.values.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    let p = eig.map(|l| if l.abs() > cut { 1.0 / l } else { 0.0 });
    (0..m).map(|i| (0..m).map(|j| p[(i, j)].re).collect()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl AffineSet {
    fn new(dim: usize, rows: Vec<Vec<f64>>, anchor: &Matrix) -> Self {
        let v = anchor.hermitian_coords();
        let rhs = rows.iter().map(|r| dot(r, &v)).collect();
        let gram: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| rows.iter().map(|s| dot(r, s)).collect())
            .collect();
        AffineSet {
            dim,
            gram_pinv: real_symmetric_pinv(&gram),
            rows,
            rhs,
        }
    }

    /// Orthogonal projection `v − Rᵀ (R Rᵀ)⁺ (R v − t)`.
    fn project(&self, c: &Matrix) -> Matrix {
        let mut v = c.hermitian_coords();
        let defect: Vec<f64> = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, t)| dot(r, &v) - t)
            .collect();
        for (k, row) in self.rows.iter().enumerate() {
            let w = dot(&self.gram_pinv[k], &defect);
            for (vi, ri) in v.iter_mut().zip(row) {
                *vi -= w * ri;
            }
        }
        Matrix::from_hermitian_coords(self.dim, &v)
    }

    fn residual(&self, c: &Matrix) -> f64 {
        let v = c.hermitian_coords();
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, t)| (dot(r, &v) - t).abs())
            .fold(0.0, f64::max)
    }
}

fn effect_violation(c: &Matrix) -> f64 {
    let eig = c.hermitian_part().eigh(Tolerance::DEFAULT).expect("Hermitian input");
    (-eig.min()).max(eig.max() - 1.0).max(0.0)
}

fn clamp_to_effects(c: &Matrix) -> Matrix {
    c.hermitian_part()
        .eigh(Tolerance::DEFAULT)
        .expect("Hermitian input")
        .map(|l| l.clamp(0.0, 1.0))
        .hermitian_part()
}

#[derive(Clone, Copy, Debug)]
struct SearchOptions {
    iterations: usize,
    restarts: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            iterations: 200,
            restarts: 3,
        }
    }
}

struct SearchOutcome {
    witness: Option<Effect>,
    best_violation: f64,
}

/// Alternating projections between the affine set and `{0 ≤ c ≤ I}`, from
/// `start` and then from random effects.
fn search_effect(set: &AffineSet, start: &Matrix, rng: &mut random::QmiRng, opts: &SearchOptions) -> SearchOutcome {
    let mut best = f64::INFINITY;
    let mut found: Option<(f64, Matrix)> = None;
    for restart in 0..=opts.restarts {
        let init = if restart == 0 {
            start.clone()
        } else {
            random::effect(rng, set.dim).into_matrix()
        };
        let mut c = set.project(&init);
        for _ in 0..opts.iterations {
            let v = effect_violation(&c);
            best = best.min(v);
            if v <= SEARCH_SLACK {
                let clamped = clamp_to_effects(&c);
                let r = set.residual(&clamped);
                if r <= SEARCH_SLACK && found.as_ref().is_none_or(|(fr, _)| r < *fr) {
                    found = Some((r, clamped));
                }
                if r <= POLISHED {
                    break;
                }
            }
            c = set.project(&clamp_to_effects(&c));
        }
        if found.is_some() {
            break;
        }
    }
    SearchOutcome {
        witness: found.map(|(_, c)| Effect::from_trusted(c)),
        best_violation: best,
    }
}

/// A sampled pair for which no effect `c` with `L(c) = L(a + b)` was found.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LudersCandidate {
    pub trial: usize,
    pub a: Effect,
    pub b: Effect,
    /// Smallest eigenvalue excess outside `[0, 1]` reached by the search.
    pub violation: f64,
    /// Largest eigenvalue of `Σ_x a_x∘(a + b)`, at most 1 by sampling.
    pub dual_total_max: f64,
    /// The map is injective, so `c = a + b` is the only solution, and `a + b ≰ I`.
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LudersSearchReport {
    pub trials: usize,
    pub projective: bool,
    pub perpendicular_pairs: usize,
    pub feasible: usize,
    /// Smallest singular value of `c ↦ Σ_x a_x^{1/2} c a_x^{1/2}` on Hermitian matrices.
    pub min_singular_value: f64,
    pub candidates: Vec<LudersCandidate>,
}

impl LudersSearchReport {
    pub fn feasibility_rate(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.feasible as f64 / self.trials as f64
        }
    }
}

/// Matrix of `c ↦ Σ_x a_x^{1/2} c a_x^{1/2}` in Hermitian coordinates (row-major).
fn luders_total_dual_map(a: &Observable) -> Vec<Vec<f64>> {
    let d = a.dim();
    let n = d * d;
    let roots: Vec<Matrix> = a.effects().iter().map(|e| e.sqrt()).collect();
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|l| {
            let mut e = vec![0.0; n];
            e[l] = 1.0;
            let basis = Matrix::from_hermitian_coords(d, &e);
            let mut image = Matrix::zeros(d);
            for r in &roots {
                image += &(&(r * &basis) * r);
            }
            image.hermitian_coords()
        })
        .collect();
    (0..n).map(|k| (0..n).map(|l| columns[l][k]).collect()).collect()
}

fn min_singular_value(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mtm = Matrix::from_fn(n, |i, j| C64::new((0..n).map(|k| m[k][i] * m[k][j]).sum(), 0.0));
    let eig = mtm.eigh(Tolerance::DEFAULT).expect("symmetric input");
    eig.min().max(0.0).sqrt()
}

/// Searches for pairs `(a, b)` with `L_a* + L_b* ∈ Sob(H)` but no effect `c`
/// satisfying `L_c* = L_a* + L_b*`.
///
/// Even trials sample two random effects rescaled into the admissible region;
/// odd trials probe `a = |ψ⟩⟨ψ|`, `b = t·a` with `t` as large as admissibility
/// allows. A candidate is `certified` only when the map is injective, so that
/// `a + b` itself is the unique solution and it is not an effect.
pub fn search_luders_counterexample(
    a: &Observable,
    trials: usize,
    seed: u64,
    tol: Tolerance,
) -> Result<LudersSearchReport> {
    let dim = a.dim();
    let l = Instrument::luders(a);
    let map = luders_total_dual_map(a);
    let mut report = LudersSearchReport {
        trials,
        projective: a.is_sharp(tol),
        perpendicular_pairs: 0,
        feasible: 0,
        min_singular_value: min_singular_value(&map),
        candidates: Vec::new(),
    };
    let all = l.space().all();
    let dual_total = |m: &Matrix| l.dual_indices(&all, m);
    for t in 0..trials {
        let mut rng = random::trial_rng(seed, t as u64);
        let (x, y) = if t % 2 == 0 {
            let x = random::effect(&mut rng, dim);
            let y = random::effect(&mut rng, dim);
            let s = dual_total(&(x.matrix() + y.matrix())).eigh(tol)?.max();
            if s > 1.0 {
                let k = rng.random_range(0.5..1.0) / s;
                (x.scale(k)?, y.scale(k)?)
            } else {
                (x, y)
            }
        } else {
            let psi = random::pure_state(&mut rng, dim);
            let x = Effect::new(psi.into_matrix())?;
            let s = dual_total(x.matrix()).eigh(tol)?.max();
            let room = (1.0 / s - 1.0).clamp(0.0, 1.0);
            let k = room * rng.random_range(0.5..1.0);
            (x.clone(), x.scale(k)?)
        };
        let ab = x.matrix() + y.matrix();
        let perp = x.is_perp(&y, tol)?;
        if perp {
            report.perpendicular_pairs += 1;
            report.feasible += 1;
            continue;
        }
        let set = AffineSet::new(dim, map.clone(), &ab);
        let out = search_effect(&set, &ab, &mut rng, &SearchOptions::default());
        if out.witness.is_some() {
            report.feasible += 1;
        } else {
            let certified = report.min_singular_value > INJECTIVE_FLOOR && ab.eigh(tol)?.max() > 1.0 + SEARCH_SLACK;
            report.candidates.push(LudersCandidate {
                trial: t,
                certified,
                dual_total_max: dual_total(&ab).eigh(tol)?.max(),
                a: x,
                b: y,
                violation: out.best_violation,
            });
        }
    }
    Ok(report)
}

/// One clause of the sequential-product law list for determined families.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClauseResult {
    pub clause: u8,
    pub applicable: bool,
    pub residual: f64,
    pub passed: bool,
}

fn clause(clause: u8, applicable: bool, residual: f64, tol: Tolerance) -> ClauseResult {
    ClauseResult {
        clause,
        applicable,
        residual: if applicable { residual } else { 0.0 },
        passed: !applicable || residual <= tol.eps(),
    }
}

/// Pointwise `‖I_x* − I_y*‖` for two generators.
fn det_diff(i: &Instrument, x: &Matrix, y: &Matrix) -> f64 {
    i.ops()
        .iter()
        .map(|op| op.dual(x).max_abs_diff(&op.dual(y)))
        .fold(0.0, f64::max)
}

/// Largest negative eigenvalue of `I*(x)(hi − lo)` over outcomes, i.e. the slack in `lo ≤ hi`.
fn det_order_violation(i: &Instrument, lo: &Matrix, hi: &Matrix) -> f64 {
    let diff = hi - lo;
    i.ops()
        .iter()
        .map(|op| {
            let m = op.dual(&diff);
            let min = m.eigh(Tolerance::DEFAULT).map(|e| e.min()).unwrap_or(f64::NEG_INFINITY);
            (-min).max(0.0)
        })
        .fold(0.0, f64::max)
}

/// Evaluates one clause (1–8) of the sequential-product laws for `I_a* ∘ I_b* = I_{a∘b}*`.
///
/// Clauses whose side condition fails on the given inputs are reported as not applicable.
/// `bs` are the mixture components for clause 2, weighted by `lambdas`.
pub fn seq_product_clause(
    k: u8,
    i: &Instrument,
    a: &Effect,
    b: &Effect,
    c: &Effect,
    lambdas: &[f64],
    bs: &[Effect],
    tol: Tolerance,
) -> Result<ClauseResult> {
    let id = Effect::identity(a.dim());
    let sp = |x: &Effect, y: &Effect| x.seq_product(y);
    Ok(match k {
        1 => {
            let ok = b.is_perp(c, tol)?;
            let r = if ok {
                let lhs = a.seq_apply(&(b.matrix() + c.matrix()));
                let rhs = sp(a, b).matrix() + sp(a, c).matrix();
                det_diff(i, &lhs, &rhs)
            } else {
                0.0
            };
            clause(1, ok, r, tol)
        }
        2 => {
            let total: f64 = lambdas.iter().sum();
            let ok = lambdas.len() == bs.len()
                && !bs.is_empty()
                && (total - 1.0).abs() <= tol.eps()
                && lambdas.iter().all(|l| (0.0..=1.0).contains(l));
            let r = if ok {
                let mut mix = Matrix::zeros(a.dim());
                let mut rhs = Matrix::zeros(a.dim());
                for (l, bi) in lambdas.iter().zip(bs) {
                    mix += &bi.matrix().scale(*l);
                    rhs += &sp(a, bi).matrix().scale(*l);
                }
                det_diff(i, &a.seq_apply(&mix), &rhs)
            } else {
                0.0
            };
            clause(2, ok, r, tol)
        }
        3 => {
            let r = det_diff(i, sp(&id, a).matrix(), a.matrix())
                .max(det_diff(i, sp(a, &id).matrix(), a.matrix()));
            clause(3, true, r, tol)
        }
        4 => {
            let ok = sp(a, b).matrix().max_abs() <= tol.eps();
            let r = if ok {
                det_diff(i, sp(a, b).matrix(), sp(b, a).matrix())
            } else {
                0.0
            };
            clause(4, ok, r, tol)
        }
        5 => {
            let ok = a.commutes_with(b);
            let r = if ok {
                det_diff(i, sp(a, &sp(b, c)).matrix(), sp(&sp(a, b), c).matrix())
            } else {
                0.0
            };
            clause(5, ok, r, tol)
        }
        6 => {
            let ok = a.commutes_with(c) && b.commutes_with(c);
            let r = if ok {
                let ab = sp(a, b);
                let mut r = det_diff(i, sp(c, &ab).matrix(), sp(&ab, c).matrix());
                if a.is_perp(b, tol)? {
                    let s = a.oplus(b, tol)?;
                    r = r.max(det_diff(i, sp(c, &s).matrix(), sp(&s, c).matrix()));
                }
                r
            } else {
                0.0
            };
            clause(6, ok, r, tol)
        }
        7 => {
            let r = det_order_violation(i, sp(a, b).matrix(), a.matrix());
            clause(7, true, r, tol)
        }
        8 => {
            let ok = a.leq(b, tol)?;
            let r = if ok {
                det_order_violation(i, sp(c, a).matrix(), sp(c, b).matrix())
            } else {
                0.0
            };
            clause(8, ok, r, tol)
        }
        other => return Err(Error::Precondition(format!("no clause {other}"))),
    })
}

/// All eight clauses on one input tuple.
pub fn check_seq_product_laws(
    i: &Instrument,
    a: &Effect,
    b: &Effect,
    c: &Effect,
    lambdas: &[f64],
    bs: &[Effect],
    tol: Tolerance,
) -> Result<Vec<ClauseResult>> {
    (1..=8)
        .map(|k| seq_product_clause(k, i, a, b, c, lambdas, bs, tol))
        .collect()
}

/// `I_c*` for `c = Σ_x a_x (a + b) a_x` (sharp Lüders witness), exposed for reporting.
pub fn sharp_luders_witness(observable: &Observable, a: &Effect, b: &Effect) -> Matrix {
    let ab = a.matrix() + b.matrix();
    let mut c = Matrix::zeros(a.dim());
    for p in observable.effects() {
        c += &p.matrix().sandwich(&ab);
    }
    c.hermitian_part()
}

/// Square root helper for callers building Lüders-type maps by hand.
pub fn effect_root(a: &Effect) -> Matrix {
    clamped_sqrt(a.matrix())
}
