//! Seeded property suites. Each suite returns one [`Report`]; trial `t` draws
//! from `trial_rng(seed, t)` so reports are reproducible and order-independent.

use rand::Rng;

use crate::effect_algebra::{
    check_axioms, check_convexity, check_list_closure, check_list_sob_conditions, check_sob_closure,
    list_model, search_luders_counterexample, seq_product_clause, ClosureVerdict, DeterminedFamily,
    EffectSpace, FiniteEffectAlgebraModel, SobFamilySpec,
};
use crate::effects::{Effect, State};
use crate::error::{Error, Result};
use crate::instruments::{Instrument, Operation, SubInstrument};
use crate::linalg::{Matrix, Tolerance};
use crate::observables::{Observable, OutcomeSpace, SubObservable, DEFAULT_EXTENSION_LABEL};
use crate::random::{self, trial_rng, Family, QmiRng};
use crate::report::{Report, ReportBuilder};
use crate::sequential::{
    composition_duality_residuals, determined_seq_product, instr_conditioned, instr_seq_product,
    ProductOutcomeSpace,
};
use crate::C64;

pub const SUITES: [&str; 12] = [
    "duality",
    "lemma21",
    "effect-algebra",
    "thm32",
    "thm33",
    "thm34",
    "thm36",
    "thm41",
    "convexity",
    "sob-closure",
    "extensions",
    "measured",
];

/// Dimensions cycled by the duality and composition suites.
pub const DIMS: [usize; 3] = [2, 3, 4];
/// Sample cap for the sampled `E(H)` model.
pub const EFFECT_SPACE_SAMPLES: usize = 20;
/// Generator cap for the determined-family checks.
pub const GENERATORS: usize = 50;
/// Bound multiplier for identities that rely on an exact commutation.
pub const COMMUTING_FACTOR: f64 = 10.0;

const UI_FAMILIES: [Family; 4] = [
    Family::Luders,
    Family::Holevo,
    Family::FiniteHolevo,
    Family::ConstantState,
];

/// Run parameters plus optional fixed objects supplied by a scenario.
#[derive(Clone, Debug)]
pub struct SuiteContext {
    pub seed: u64,
    pub trials: usize,
    pub tol: Tolerance,
    pub instruments: Vec<(String, Instrument)>,
    pub states: Vec<(String, State)>,
    pub effects: Vec<(String, Effect)>,
}

impl SuiteContext {
    pub fn new(seed: u64, trials: usize, tol: Tolerance) -> Self {
        SuiteContext {
            seed,
            trials,
            tol,
            instruments: Vec::new(),
            states: Vec::new(),
            effects: Vec::new(),
        }
    }

    fn rng(&self, t: usize) -> QmiRng {
        trial_rng(self.seed, t as u64)
    }

    fn builder(&self, check: &str, citation: &str) -> ReportBuilder {
        let mut b = ReportBuilder::new(check, citation, self.trials, self.tol);
        b.param("seed", self.seed);
        b
    }
}

impl Default for SuiteContext {
    fn default() -> Self {
        SuiteContext::new(42, 100, Tolerance::DEFAULT)
    }
}

pub fn run_suite(name: &str, ctx: &SuiteContext) -> Result<Report> {
    Ok(match name {
        "duality" => duality(ctx),
        "lemma21" => lemma21(ctx),
        "effect-algebra" => effect_algebra(ctx)?,
        "thm32" => thm32(ctx),
        "thm33" => thm33(ctx),
        "thm34" => thm34(ctx),
        "thm36" => thm36(ctx),
        "thm41" => thm41(ctx),
        "convexity" => convexity(ctx)?,
        "sob-closure" => sob_closure(ctx)?,
        "extensions" => extensions(ctx),
        "measured" => measured(ctx),
        _ => {
            return Err(Error::UnknownName {
                kind: "suite",
                name: name.to_string(),
            })
        }
    })
}

fn random_event(rng: &mut QmiRng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.random_bool(0.5)).collect()
}

fn negativity(x: &Matrix) -> f64 {
    let min = x.eigh(Tolerance::DEFAULT).map(|e| e.min()).unwrap_or(f64::NAN);
    (-min).max(0.0)
}

/// `x^{1/2} y x^{1/2}` through the spectral square root, independent of [`Effect::seq_product`].
fn circ(x: &Matrix, y: &Matrix) -> Matrix {
    match x.psd_sqrt(Tolerance::DEFAULT) {
        Ok(r) => &(&r * y) * &r,
        Err(_) => Matrix::from_fn(x.dim(), |_, _| C64::new(f64::NAN, 0.0)),
    }
}

fn block_diag(top: &Matrix, bottom: &Matrix) -> Matrix {
    let m = top.dim();
    Matrix::from_fn(m + bottom.dim(), |i, j| match (i < m, j < m) {
        (true, true) => top[(i, j)],
        (false, false) => bottom[(i - m, j - m)],
        _ => C64::new(0.0, 0.0),
    })
}

fn diag_effect(rng: &mut QmiRng, n: usize) -> Matrix {
    Matrix::diag(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>())
}

/// `0`, `I`, then pairs `(e/2, I − e/2)`: the halves are pairwise perpendicular,
/// so sums, complements and triples all occur among the samples.
fn generator_samples(rng: &mut QmiRng, n: usize, dim: usize) -> Vec<Effect> {
    let mut out = Vec::with_capacity(n);
    for (k, e) in [Effect::zero(dim), Effect::identity(dim)].into_iter().enumerate() {
        if k < n {
            out.push(e);
        }
    }
    while out.len() < n {
        let half = random::effect(rng, dim).scale(0.5).expect("0.5 is a valid scale");
        out.push(half.clone());
        if out.len() < n {
            out.push(half.complement());
        }
    }
    out
}

fn duality(ctx: &SuiteContext) -> Report {
    let mut b = ctx.builder("duality", "tr[ρ I*(Δ)(a)] = tr[I(Δ)(ρ) a]");
    for t in 0..ctx.trials {
        let mut rng = ctx.rng(t);
        let d = DIMS[t % DIMS.len()];
        let family = Family::ALL[t % Family::ALL.len()];
        let instrument = random::instrument(&mut rng, d, family);
        let rho = random::state(&mut rng, d);
        let a = random::effect(&mut rng, d);
        let event = random_event(&mut rng, instrument.len());
        let lhs = rho.matrix().trace_product(&instrument.dual_indices(&event, a.matrix()));
        let rhs = instrument.apply_indices(&event, rho.matrix()).trace_product(a.matrix());
        b.record(&format!("{} d={d}", family.name()), Some(t), (lhs - rhs).norm());
    }
    for (name, instrument) in &ctx.instruments {
        for (sn, rho) in ctx.states.iter().filter(|(_, s)| s.dim() == instrument.dim()) {
            for (en, a) in ctx.effects.iter().filter(|(_, e)| e.dim() == instrument.dim()) {
                for event in instrument.space().events() {
                    let lhs = rho.matrix().trace_product(&instrument.dual_indices(&event, a.matrix()));
                    let rhs = instrument.apply_indices(&event, rho.matrix()).trace_product(a.matrix());
                    b.record(&format!("{name} {sn} {en} {event:?}"), None, (lhs - rhs).norm());
                }
            }
        }
    }
    b.finish()
}

fn lemma21(ctx: &SuiteContext) -> Report {
    let mut b = ctx.builder("lemma21", "properties of the sequential product a∘b = a^{1/2} b a^{1/2}");
    let loose = ctx.tol.eps() * COMMUTING_FACTOR;
    b.param("commuting_bound", loose);
    for t in 0..ctx.trials {
        let mut rng = ctx.rng(t);
        let d = 2 + t % 2;
        let a = random::effect(&mut rng, d);
        let (p, q) = random::perpendicular_pair(&mut rng, d);
        let sum = p.matrix() + q.matrix();
        let r1 = a
            .seq_apply(&sum)
            .max_abs_diff(&(a.seq_product(&p).matrix() + a.seq_product(&q).matrix()));
        b.record("(1) a∘(b⊕c) = a∘b ⊕ a∘c", Some(t), r1);

        let id = Effect::identity(d);
        let r2 = id
            .seq_product(&a)
            .matrix()
            .max_abs_diff(a.matrix())
            .max(a.seq_product(&id).matrix().max_abs_diff(a.matrix()));
        b.record("(2) I∘a = a∘I = a", Some(t), r2);

        let x = random::effect(&mut rng, d);
        b.record("(6) a∘b ≤ a", Some(t), negativity(&(a.matrix() - a.seq_product(&x).matrix())));

        let (lo, hi) = random::ordered_pair(&mut rng, d);
        let c = random::effect(&mut rng, d);
        b.record(
            "(7) a ≤ b ⇒ c∘a ≤ c∘b",
            Some(t),
            negativity(&(c.seq_product(&hi).matrix() - c.seq_product(&lo).matrix())),
        );

        // (3): b supported on ker(a) makes a∘b = 0
        let u = random::unitary(&mut rng, d);
        let k = rng.random_range(1..d);
        let top = diag_effect(&mut rng, k);
        let bottom = random::effect(&mut rng, d - k).into_matrix();
        let a0 = u.sandwich(&block_diag(&top, &Matrix::zeros(d - k))).hermitian_part();
        let b0 = u.sandwich(&block_diag(&Matrix::zeros(k), &bottom)).hermitian_part();
        let r3 = circ(&a0, &b0).max_abs().max(a0.commutator_norm(&b0));
        b.record_within("(3) a∘b = 0 ⇒ ab = ba", Some(t), r3, loose);

        let fam = random::commuting_effects(&mut rng, d, 2);
        let c = random::effect(&mut rng, d);
        let (fa, fb) = (&fam[0], &fam[1]);
        let r4 = fa
            .seq_product(&fb.seq_product(&c))
            .matrix()
            .max_abs_diff(fa.seq_product(fb).seq_product(&c).matrix());
        b.record_within("(4) ab = ba ⇒ a∘(b∘c) = (a∘b)∘c", Some(t), r4, loose);

        // (5): c is scalar on a block that carries arbitrary parts of a and b
        let (a5, b5, c5) = commuting_with_c(&mut rng, d);
        let ab = a5.seq_product(&b5);
        let s = a5.matrix() + b5.matrix();
        let r5 = c5.matrix().commutator_norm(ab.matrix()).max(c5.matrix().commutator_norm(&s));
        b.record_within("(5) ac = ca, bc = cb ⇒ c(a∘b) = (a∘b)c, c(a⊕b) = (a⊕b)c", Some(t), r5, loose);
    }
    b.finish()
}

/// `(a, b, c)` with `ac = ca`, `bc = cb`, `a ⊥ b` and `a`, `b` non-commuting in general.
fn commuting_with_c(rng: &mut QmiRng, d: usize) -> (Effect, Effect, Effect) {
    let u = random::unitary(rng, d);
    let m = if d == 2 { 2 } else { d - 1 };
    let gamma = rng.random::<f64>();
    let c_diag: Vec<f64> = (0..d).map(|i| if i < m { gamma } else { rng.random::<f64>() }).collect();
    let part = |rng: &mut QmiRng| {
        let top = random::effect(rng, m).into_matrix().scale(0.5);
        let full = if m == d { top } else { block_diag(&top, &diag_effect(rng, d - m).scale(0.5)) };
        Effect::new(u.sandwich(&full).hermitian_part()).expect("half-scaled effect")
    };
    let a = part(rng);
    let b = part(rng);
    let c = Effect::new(u.sandwich(&Matrix::diag(&c_diag)).hermitian_part()).expect("spectrum in [0, 1]");
    (a, b, c)
}

fn effect_algebra(ctx: &SuiteContext) -> Result<Report> {
    let mut b = ctx.builder("effect-algebra", "effect-algebra axioms E1–E4 and Sob conditions S1–S3");
    let n = ctx.trials.min(EFFECT_SPACE_SAMPLES);
    b.param("effect_space_samples", n);
    let samples = generator_samples(&mut ctx.rng(0), n, 2);
    let space = EffectSpace { dim: 2, tol: ctx.tol };
    record_axioms(&mut b, "E(H) d=2", &check_axioms(&space, &samples));

    let two = FiniteEffectAlgebraModel::new(2, 0, 1, [((0, 0), 0), ((0, 1), 1), ((1, 0), 1)])?;
    record_axioms(&mut b, "two-element model", &two.check());

    // a ⊥ 1 with a ≠ 0 must be caught by E4
    let bad = FiniteEffectAlgebraModel::new(
        3,
        0,
        1,
        [((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((0, 2), 2), ((2, 0), 2), ((2, 1), 1), ((1, 2), 1)],
    )?;
    let e4 = bad.check().e4;
    b.record_bool("E4 violation detected", None, !e4.passed && e4.witness == Some(vec![2]), || {
        format!("E4 check returned {e4:?}")
    });

    let v = v_family(2);
    let a = random::observable(&mut ctx.rng(1), 2, 2);
    let halves = vec![
        SubObservable::zero(a.space().clone(), 2),
        a.scale(0.5)?,
        a.as_sub().clone(),
    ];
    for (name, members) in [("V", &v), ("{0, A/2, A}", &halves)] {
        let sob = check_list_sob_conditions(members, ctx.tol)?;
        b.record_bool(&format!("{name} S1–S3"), None, sob.passed(), || format!("{sob:?}"));
        b.record_bool(&format!("{name} unique observable"), None, sob.observables.len() == 1, || {
            format!("observables at {:?}", sob.observables)
        });
        let model = list_model(members, ctx.tol)?;
        record_axioms(&mut b, &format!("{name} as effect algebra"), &model.check());
    }
    Ok(b.finish())
}

/// `V = {{0, 0}, {0, I}}` on two outcomes.
fn v_family(dim: usize) -> Vec<SubObservable> {
    let space = OutcomeSpace::indexed(2);
    let z = SubObservable::new(space.clone(), vec![Effect::zero(dim), Effect::identity(dim)])
        .expect("valid sub-observable");
    vec![SubObservable::zero(space, dim), z]
}

fn record_axioms(b: &mut ReportBuilder, name: &str, r: &crate::effect_algebra::AxiomReport) {
    for (axiom, check) in [("E1", &r.e1), ("E2", &r.e2), ("E3", &r.e3), ("E4", &r.e4)] {
        b.record_bool(&format!("{name} {axiom}"), None, check.passed, || {
            format!("witness {:?}", check.witness)
        });
    }
}

fn thm32(ctx: &SuiteContext) -> Report {
    let mut b = ctx.builder("thm32", "U_I = {I_a*} with I_a* ⊕ I_b* = I_{a+b}* is an effect algebra");
    let n = ctx.trials.min(GENERATORS);
    b.param("generators", n);
    let mut families: Vec<(String, Instrument)> = UI_FAMILIES
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let d = 2 + k % 2;
            let mut rng = trial_rng(ctx.seed, 10_000 + k as u64);
            (format!("{} d={d}", f.name()), random::instrument(&mut rng, d, f))
        })
        .collect();
    families.extend(ctx.instruments.iter().cloned());
    for (k, (name, instrument)) in families.into_iter().enumerate() {
        let d = instrument.dim();
        let mut rng = trial_rng(ctx.seed, 20_000 + k as u64);
        let gens = generator_samples(&mut rng, n, d);
        let family = DeterminedFamily::new(instrument, ctx.tol);
        let members: Result<Vec<_>> = gens.iter().map(|g| family.member(g)).collect();
        let members = match members {
            Ok(m) => m,
            Err(e) => {
                b.record_error(&name, None, e);
                continue;
            }
        };
        record_axioms(&mut b, &name, &check_axioms(&family, &members));
        for (t, g) in gens.iter().enumerate() {
            match family.complement_residual(g) {
                Ok(r) => b.record(&format!("{name} (I_a*)′ = I_{{a′}}*"), Some(t), r),
                Err(e) => {
                    b.record_error(&name, Some(t), e);
                    false
                }
            };
        }
        let pairs: Vec<(Effect, Effect)> = (0..n).map(|_| random::perpendicular_pair(&mut rng, d)).collect();
        match family.check_morphism(&pairs) {
            Ok(m) => {
                b.record(&format!("{name} F(a ⊕ b) = F(a) ⊕ F(b)"), None, m.max_residual);
                b.record(&format!("{name} F(I) = Î"), None, m.unit_residual);
            }
            Err(e) => b.record_error(&name, None, e),
        }
    }
    b.finish()
}

fn closure_residual(verdict: &ClosureVerdict) -> f64 {
    match verdict {
        ClosureVerdict::Witness { residual, .. } | ClosureVerdict::ListMember { residual, .. } => *residual,
        ClosureVerdict::CriterionViolated { residual } => *residual,
        ClosureVerdict::Unknown { .. } => f64::INFINITY,
    }
}

fn holevo_witness_cases(ctx: &SuiteContext, b: &mut ReportBuilder) {
    for t in 0..ctx.trials {
        let mut rng = ctx.rng(t);
        let d = 2 + t % 2;
        let alpha = random::state(&mut rng, d);
        let observable = random::observable(&mut rng, d, 2 + t % 2);
        let (x, y) = random::perpendicular_pair(&mut rng, d);
        let expected = Matrix::identity(d).scale(alpha.prob(&x) + alpha.prob(&y));
        let spec = SobFamilySpec::Holevo { alpha, observable };
        match check_sob_closure(&spec, &x, &y, ctx.tol, ctx.seed) {
            Ok(v) => {
                let r = match &v {
                    ClosureVerdict::Witness { c, residual } => residual.max(c.matrix().max_abs_diff(&expected)),
                    other => closure_residual(other),
                };
                b.record("holevo c = [tr(αa) + tr(αb)]I", Some(t), r);
            }
            Err(e) => b.record_error("holevo", Some(t), e),
        }
    }
}

fn sharp_luders_cases(ctx: &SuiteContext, b: &mut ReportBuilder) {
    for t in 0..ctx.trials {
        let mut rng = ctx.rng(t);
        let d = 2 + t % 2;
        let observable = random::sharp_observable(&mut rng, d, d);
        let (x, y) = random::perpendicular_pair(&mut rng, d);
        let ab = x.matrix() + y.matrix();
        let mut expected = Matrix::zeros(d);
        for p in observable.effects() {
            expected += &(&(p.matrix() * &ab) * p.matrix());
        }
        let spec = SobFamilySpec::SharpLuders { observable };
        match check_sob_closure(&spec, &x, &y, ctx.tol, ctx.seed) {
            Ok(v) => {
                let r = match &v {
                    ClosureVerdict::Witness { c, residual } => residual.max(c.matrix().max_abs_diff(&expected)),
                    other => closure_residual(other),
                };
                b.record("sharp lüders c = Σ a_x(a+b)a_x", Some(t), r);
            }
            Err(e) => b.record_error("sharp lüders", Some(t), e),
        }
    }
}

fn constant_state_cases(ctx: &SuiteContext, b: &mut ReportBuilder) {
    for t in 0..ctx.trials {
        let mut rng = ctx.rng(t);
        let d = 2 + t % 2;
        let source = random::kraus_instrument(&mut rng, d, 2 + t % 2, 2);
        let alpha = random::state(&mut rng, d);
        let (x, y) = random::perpendicular_pair(&mut rng, d);
        let ab = x.matrix() + y.matrix();
        let spec = SobFamilySpec::ConstantState { source, alpha };
        match check_sob_closure(&spec, &x, &y, ctx.tol, ctx.seed) {
            Ok(v) => {
                let r = match &v {
                    ClosureVerdict::Witness { c, residual } => residual.max(c.matrix().max_abs_diff(&ab)),
                    other => closure_residual(other),
                };
                b.record("constant-state a + b ≤ I ⇒ c = a + b", Some(t), r);
            }
            Err(e) => b.record_error("constant-state", Some(t), e),
        }
    }
}

fn thm33(ctx: &SuiteContext) -> Report {
    let mut b = ctx.builder("thm33", "U_H is a Sob effect algebra with witness c = [tr(αa) + tr(αb)]I");
    holevo_witness_cases(ctx, &mut b);
    b.finish()
}

fn thm34(ctx: &SuiteContext) -> Report {
    let mut b = ctx.builder(
        "thm34",
        "U_{I_α} closure criterion tr[I(Δ)(α)c] = tr[I(Δ)(α)(a+b)] and (I_α*)_a + (I_α*)_b = tr[I(Δ)(α)(a+b)]I",
    );
    constant_state_cases(ctx, &mut b);
    let mut searched = 0;
    let mut found = 0;
    for t in 0..ctx.trials {
        let mut rng = ctx.rng(t);
        let d = 2 + t % 2;
        let source = random::kraus_instrument(&mut rng, d, 2, 2);
        let alpha = random::state(&mut rng, d);
        let ia = match Instrument::constant_state(&source, &alpha) {
            Ok(i) => i,
            Err(e) => {
                b.record_error("constant-state", Some(t), e);
                continue;
            }
        };
        let x = random::effect(&mut rng, d);
        let y = random::effect(&mut rng, d);
        let ab = x.matrix() + y.matrix();
        let (Ok(sx), Ok(sy)) = (ia.determined_subobservable(&x), ia.determined_subobservable(&y)) else {
            continue;
        };
        let r = source
            .space()
            .events()
            .iter()
            .map(|ev| {
                let sigma = source.apply_indices(ev, alpha.matrix());
                let want = Matrix::identity(d).scale(sigma.trace_product(&ab).re);
                (sx.eval_indices(ev).matrix() + sy.eval_indices(ev).matrix()).max_abs_diff(&want)
            })
            .fold(0.0, f64::max);
        b.record("(I_α*)_a(Δ) + (I_α*)_b(Δ) = tr[I(Δ)(α)(a+b)]I", Some(t), r);

        // beyond a ⊥ b the criterion needs a search; outcomes are evidence only
        let Ok(total) = sx.add(&sy, ctx.tol) else { continue };
        let _ = total;
        let spec = SobFamilySpec::ConstantState { source, alpha };
        if let Ok(v) = check_sob_closure(&spec, &x, &y, ctx.tol, ctx.seed.wrapping_add(t as u64)) {
            searched += 1;
            if v.closed() {
                found += 1;
            }
        }
    }
    b.detail("search_cases", searched).detail("search_witnesses", found);
    b.finish()
}

fn sob_closure(ctx: &SuiteContext) -> Result<Report> {
    let mut b = ctx.builder("sob-closure", "Sob closure witnesses: Holevo, sharp Lüders, constant-state, explicit lists");
    holevo_witness_cases(ctx, &mut b);
    sharp_luders_cases(ctx, &mut b);
    constant_state_cases(ctx, &mut b);

    let v = v_family(2);
    for i in 0..v.len() {
        for j in 0..v.len() {
            match check_list_closure(&v, i, j, ctx.tol) {
                Ok(verdict) => {
                    b.record_bool(&format!("V[{i}] + V[{j}] ∈ V"), None, verdict.closed(), || format!("{verdict:?}"));
                }
                Err(Error::Precondition(_)) => {}
                Err(e) => b.record_error("V", None, e),
            }
        }
    }

    let noisy = noisy_qubit()?;
    let search = search_luders_counterexample(&noisy, ctx.trials.min(GENERATORS), ctx.seed, ctx.tol)?;
    b.detail("luders_search_trials", search.trials)
        .detail("luders_search_feasible", search.feasible)
        .detail("luders_search_candidates", search.candidates.len())
        .detail("luders_min_singular_value", search.min_singular_value);
    Ok(b.finish())
}

/// `{0.7P0 + 0.3P1, 0.3P0 + 0.7P1}`.
pub fn noisy_qubit() -> Result<Observable> {
    Observable::from_effects(vec![
        Effect::new(Matrix::diag(&[0.7, 0.3]))?,
        Effect::new(Matrix::diag(&[0.3, 0.7]))?,
    ])
}

fn convexity(ctx: &SuiteContext) -> Result<Report> {
    let mut b = ctx.builder("convexity", "U is convex iff A ∈ U, λ ∈ [0, 1] ⇒ λA ∈ U");
    let v = check_convexity(&SobFamilySpec::ExplicitList { members: v_family(2) }, 0, ctx.seed, ctx.tol)?;
    b.record_bool("V = {{0,0},{0,I}} not convex", None, !v.convex && v.witness == Some((1, 0.5)), || {
        format!("{v:?}")
    });
    b.detail("v_witness", v.witness);
    let mut rng = trial_rng(ctx.seed, 30_000);
    let mut specs = Vec::new();
    for f in UI_FAMILIES {
        let instrument = random::instrument(&mut rng, 2, f);
        let spec = match f {
            Family::Luders | Family::FiniteHolevo => SobFamilySpec::Determined { instrument },
            Family::Holevo => SobFamilySpec::Holevo {
                alpha: random::state(&mut rng, 2),
                observable: random::observable(&mut rng, 2, 2),
            },
            _ => SobFamilySpec::ConstantState {
                source: random::kraus_instrument(&mut rng, 2, 2, 2),
                alpha: random::state(&mut rng, 2),
            },
        };
        specs.push((f.name(), spec));
    }
    specs.push(("scalings", SobFamilySpec::Scalings { z: random::observable(&mut rng, 2, 3) }));
    for (name, spec) in specs {
        let r = check_convexity(&spec, ctx.trials, ctx.seed, ctx.tol)?;
        b.record(&format!("{name} λ·I_a* = I_{{λa}}*"), None, r.max_residual);
        b.record_bool(&format!("{name} convex"), None, r.convex, || format!("witness {:?}", r.witness));
    }
    Ok(b.finish())
}

fn thm36(ctx: &SuiteContext) -> Report {
    let mut b = ctx.builder("thm36", "laws of the sequential product I_a*∘I_b* = I_{a∘b}*");
    for t in 0..ctx.trials {
        let mut rng = ctx.rng(t);
        let d = 2 + t % 2;
        let family = Family::ALL[t % Family::ALL.len()];
        let i = random::instrument(&mut rng, d, family);
        let a = random::effect(&mut rng, d);
        let x = random::effect(&mut rng, d);
        let (p, q) = random::perpendicular_pair(&mut rng, d);
        let bs: Vec<Effect> = (0..3).map(|_| random::effect(&mut rng, d)).collect();
        let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let mut lambdas: Vec<f64> = w.iter().map(|v| v / total).collect();
        lambdas[2] = 1.0 - lambdas[0] - lambdas[1];

        let u = random::unitary(&mut rng, d);
        let k = rng.random_range(1..d);
        let top = diag_effect(&mut rng, k);
        let bottom = random::effect(&mut rng, d - k).into_matrix();
        let a4 = Effect::new(u.sandwich(&block_diag(&top, &Matrix::zeros(d - k))).hermitian_part());
        let b4 = Effect::new(u.sandwich(&block_diag(&Matrix::zeros(k), &bottom)).hermitian_part());
        let fam = random::commuting_effects(&mut rng, d, 2);
        let (a6, b6, c6) = commuting_with_c(&mut rng, d);
        let (lo, hi) = random::ordered_pair(&mut rng, d);
        let (Ok(a4), Ok(b4)) = (a4, b4) else {
            b.record_error("clause 4 construction", Some(t), "kernel construction left E(H)");
            continue;
        };

        let inputs: [(u8, &Effect, &Effect, &Effect); 8] = [
            (1, &a, &p, &q),
            (2, &a, &x, &x),
            (3, &a, &x, &x),
            (4, &a4, &b4, &x),
            (5, &fam[0], &fam[1], &x),
            (6, &a6, &b6, &c6),
            (7, &a, &x, &x),
            (8, &lo, &hi, &a),
        ];
        for (clause, ea, eb, ec) in inputs {
            let case = format!("({clause}) {} d={d}", family.name());
            match seq_product_clause(clause, &i, ea, eb, ec, &lambdas, &bs, ctx.tol) {
                Ok(r) if r.applicable => {
                    b.record(&case, Some(t), r.residual);
                }
                Ok(_) => {
                    b.record_bool(&case, Some(t), false, || "side condition not met by construction".into());
                }
                Err(e) => b.record_error(&case, Some(t), e),
            }
        }

        // tr[ρ I_{a∘b}*(Δ)] = tr[(a∘I(Δ)(ρ)) b]
        let rho = random::state(&mut rng, d);
        let event = random_event(&mut rng, i.len());
        match determined_seq_product(&i, &a, &x) {
            Ok(prod) => {
                let lhs = rho.matrix().trace_product(prod.eval_indices(&event).matrix()).re;
                let rhs = circ(a.matrix(), &i.apply_indices(&event, rho.matrix()))
                    .trace_product(x.matrix())
                    .re;
                b.record("tr[ρ I_{a∘b}*(Δ)] = tr[(a∘I(Δ)(ρ))b]", Some(t), (lhs - rhs).abs());
            }
            Err(e) => b.record_error("distribution", Some(t), e),
        }
    }
    b.finish()
}

fn thm41(ctx: &SuiteContext) -> Report {
    let mut b = ctx.builder("thm41", "duals of I∘J and (J|I) in terms of I*, J_a* and Ĵ");
    for t in 0..ctx.trials {
        let mut rng = ctx.rng(t);
        let d = DIMS[t % DIMS.len()];
        let fi = Family::ALL[t % Family::ALL.len()];
        let fj = Family::ALL[(t / Family::ALL.len() + t) % Family::ALL.len()];
        let i = random::instrument(&mut rng, d, fi);
        let j = random::instrument(&mut rng, d, fj);
        let a = random::effect(&mut rng, d);
        let rho = random::state(&mut rng, d);
        let case = format!("{}∘{} d={d}", fi.name(), fj.name());
        composition_cases(&mut b, &case, Some(t), &i, &j, &a, &rho);
    }
    for (ni, i) in &ctx.instruments {
        for (nj, j) in ctx.instruments.iter().filter(|(_, j)| j.dim() == i.dim()) {
            for (na, a) in ctx.effects.iter().filter(|(_, a)| a.dim() == i.dim()) {
                let rho = State::maximally_mixed(i.dim());
                composition_cases(&mut b, &format!("{ni}∘{nj} {na}"), None, i, j, a, &rho);
            }
        }
    }
    b.finish()
}

fn composition_cases(
    b: &mut ReportBuilder,
    case: &str,
    trial: Option<usize>,
    i: &Instrument,
    j: &Instrument,
    a: &Effect,
    rho: &State,
) {
    match composition_duality_residuals(i, j, a) {
        Ok(r) => {
            b.record(&format!("{case} (1) (I∘J)_a*(Δ×Γ) = I*(Δ)[J_a*(Γ)]"), trial, r.product_dual);
            b.record(&format!("{case} (2) (I∘J)_I*(Δ×Γ) = I*(Δ)[Ĵ(Γ)]"), trial, r.product_measured);
            b.record(&format!("{case} (3) (J|I)_a*(Γ) = I*(Ω_I)[J_a*(Γ)]"), trial, r.conditioned_dual);
            b.record(&format!("{case} (4) (J|I)_I*(Γ) = I*(Ω_I)[Ĵ(Γ)]"), trial, r.conditioned_measured);
        }
        Err(e) => {
            b.record_error(case, trial, e);
            return;
        }
    }
    // the composed instruments themselves, state side
    let (Ok(ij), Ok(cond), Ok(ps)) = (
        instr_seq_product(i, j),
        instr_conditioned(j, i),
        ProductOutcomeSpace::new(i.space(), j.space()),
    ) else {
        b.record_error(case, trial, "composition failed");
        return;
    };
    let mut r: f64 = 0.0;
    for (x, opx) in i.ops().iter().enumerate() {
        let mid = opx.apply(rho.matrix());
        for (y, opy) in j.ops().iter().enumerate() {
            r = r.max(ij.apply_indices(&[ps.index(x, y)], rho.matrix()).max_abs_diff(&opy.apply(&mid)));
        }
    }
    let mean = i.total_apply(rho.matrix());
    for (y, opy) in j.ops().iter().enumerate() {
        r = r.max(cond.apply_indices(&[y], rho.matrix()).max_abs_diff(&opy.apply(&mean)));
    }
    b.record(&format!("{case} (I∘J)(x,y)(ρ) = J(y)[I(x)(ρ)], (J|I)(y)(ρ) = J(y)[Ī(ρ)]"), trial, r);
}

fn extensions(ctx: &SuiteContext) -> Report {
    let mut b = ctx.builder("extensions", "minimal extensions of sub-observables and sub-instruments");
    let y = DEFAULT_EXTENSION_LABEL;
    for t in 0..ctx.trials {
        let mut rng = ctx.rng(t);
        let d = 2 + t % 3;
        let n = 2 + t % 2;
        let obs = random::observable(&mut rng, d, n);
        let effects: Vec<Effect> = obs
            .effects()
            .iter()
            .map(|e| e.scale(rng.random::<f64>()).expect("scale in [0, 1]"))
            .collect();
        let sub = match SubObservable::new(obs.space().clone(), effects) {
            Ok(s) => s,
            Err(e) => {
                b.record_error("sub-observable", Some(t), e);
                continue;
            }
        };
        match sub.minimal_extension(y) {
            Ok(ext) => {
                let valid = Observable::new(ext.space().clone(), ext.effects().to_vec()).is_ok();
                b.record_bool("extension is an observable", Some(t), valid, || "extension failed validation".into());
                let back = ext.restrict(sub.space()).and_then(|r| r.max_abs_diff(&sub));
                b.record("extension restricts to A", Some(t), back.unwrap_or(f64::NAN));
                let rest = ext.effect(y).map(|e| e.matrix().max_abs_diff(&sub.total().complement().into_matrix()));
                b.record("extension(y) = I − A(Ω)", Some(t), rest.unwrap_or(f64::NAN));
            }
            Err(e) => b.record_error("sub-observable extension", Some(t), e),
        }

        let inst = random::kraus_instrument(&mut rng, d, n, 2);
        let ops: Result<Vec<Operation>> = inst
            .ops()
            .iter()
            .map(|op| {
                let s = rng.random::<f64>().sqrt();
                Operation::new(op.kraus().iter().map(|k| k.scale(s)).collect())
            })
            .collect();
        let si = match ops.and_then(|ops| SubInstrument::new(inst.space().clone(), ops)) {
            Ok(s) => s,
            Err(e) => {
                b.record_error("sub-instrument", Some(t), e);
                continue;
            }
        };
        match si.minimal_extension(y) {
            Ok(ext) => {
                b.record_bool("extension is an instrument", Some(t), ext.is_instrument(ctx.tol), || {
                    "extension is not trace preserving".into()
                });
                let rho = random::state(&mut rng, d);
                let a = random::effect(&mut rng, d);
                let mut r: f64 = 0.0;
                for (k, op) in si.ops().iter().enumerate() {
                    r = r.max(ext.ops()[k].apply(rho.matrix()).max_abs_diff(&op.apply(rho.matrix())));
                    r = r.max(ext.ops()[k].dual(a.matrix()).max_abs_diff(&op.dual(a.matrix())));
                }
                b.record("extension restricts to I", Some(t), r);
                let want = si.measured_subobservable().minimal_extension(y);
                let r = want.and_then(|w| ext.measured_observable().max_abs_diff(&w));
                b.record("extension measures the extended Î", Some(t), r.unwrap_or(f64::NAN));
            }
            Err(e) => b.record_error("sub-instrument extension", Some(t), e),
        }

        // D(Δ∪{y}) = tr(αa)A(Δ) + [1 − tr(αa)]I for the Holevo determined sub-observable
        let alpha = random::state(&mut rng, d);
        let a = random::effect(&mut rng, d);
        let Ok(h) = Instrument::holevo(&alpha, &obs) else { continue };
        let ta = alpha.prob(&a);
        let dext = h.determined_subobservable(&a).and_then(|s| s.minimal_extension(y));
        match dext {
            Ok(dext) => {
                let r = obs
                    .space()
                    .events()
                    .iter()
                    .map(|ev| {
                        let mut with_y = ev.clone();
                        with_y.push(n);
                        let want = &obs.eval_indices(ev).matrix().scale(ta) + &Matrix::identity(d).scale(1.0 - ta);
                        dext.eval_indices(&with_y).matrix().max_abs_diff(&want)
                    })
                    .fold(0.0, f64::max);
                b.record("D(Δ∪{y}) = tr(αa)A(Δ) + [1 − tr(αa)]I", Some(t), r);
            }
            Err(e) => b.record_error("holevo extension", Some(t), e),
        }
    }
    b.finish()
}

fn measured(ctx: &SuiteContext) -> Report {
    let mut b = ctx.builder("measured", "observables measured by the Lüders, Holevo and constant-state instruments");
    for t in 0..ctx.trials {
        let mut rng = ctx.rng(t);
        let d = DIMS[t % DIMS.len()];
        let obs = random::observable(&mut rng, d, 2 + t % 2);
        let alpha = random::state(&mut rng, d);
        let l = Instrument::luders(&obs);
        b.record("L̂ = A", Some(t), l.measured_observable().max_abs_diff(&obs).unwrap_or(f64::NAN));
        match Instrument::holevo(&alpha, &obs) {
            Ok(h) => {
                b.record("Ĥ = A", Some(t), h.measured_observable().max_abs_diff(&obs).unwrap_or(f64::NAN));
            }
            Err(e) => b.record_error("holevo", Some(t), e),
        }
        let source = random::kraus_instrument(&mut rng, d, 2 + t % 2, 2);
        match Instrument::constant_state(&source, &alpha) {
            Ok(ia) => {
                let hat = ia.measured_observable();
                let r = source
                    .space()
                    .events()
                    .iter()
                    .map(|ev| {
                        let p = source.apply_indices(ev, alpha.matrix()).trace().re;
                        hat.eval_indices(ev).matrix().max_abs_diff(&Matrix::identity(d).scale(p))
                    })
                    .fold(0.0, f64::max);
                b.record("Î_α(Δ) = tr[I(Δ)(α)]I", Some(t), r);
            }
            Err(e) => b.record_error("constant-state", Some(t), e),
        }
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_on_a_short_run() {
        let ctx = SuiteContext::new(7, 6, Tolerance::DEFAULT);
        for name in SUITES {
            let r = run_suite(name, &ctx).unwrap();
            assert!(r.passed, "{name}: {:?}", r.failures);
            assert!(r.cases > 0, "{name}");
        }
    }

    #[test]
    fn zero_trials_is_a_valid_report() {
        let ctx = SuiteContext::new(1, 0, Tolerance::DEFAULT);
        for name in SUITES {
            assert!(run_suite(name, &ctx).unwrap().passed, "{name}");
        }
    }

    #[test]
    fn impossible_tolerance_fails() {
        let ctx = SuiteContext::new(1, 4, Tolerance::new(1e-30).unwrap());
        let r = run_suite("duality", &ctx).unwrap();
        assert!(!r.passed);
        assert!(r.failures.iter().all(|f| f.residual.is_some()));
    }

    #[test]
    fn unknown_suite() {
        let ctx = SuiteContext::default();
        assert!(matches!(run_suite("thm99", &ctx), Err(Error::UnknownName { .. })));
    }

    #[test]
    fn generator_samples_have_requested_size() {
        let mut rng = random::rng(3);
        assert_eq!(generator_samples(&mut rng, 7, 2).len(), 7);
        assert_eq!(generator_samples(&mut rng, 1, 2).len(), 1);
    }
}
