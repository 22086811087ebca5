//! Fixed qubit reproductions of the eight worked examples.
//!
//! Each demo builds its objects with the library and compares them with closed
//! forms evaluated directly from the defining matrices.

use std::collections::BTreeMap;

use crate::effect_algebra::{check_sob_closure, ClosureVerdict, SobFamilySpec};
use crate::effects::{Effect, State};
use crate::error::{Error, Result};
use crate::instruments::Instrument;
use crate::linalg::{Matrix, Tolerance};
use crate::observables::{Observable, OutcomeSpace, SubObservable, DEFAULT_EXTENSION_LABEL};
use crate::report::{Report, ReportBuilder};
use crate::sequential::{
    determined_seq_product, instr_conditioned, instr_seq_product, sob_conditioned,
    sob_conditioned_restricted, sob_seq_product, ProductOutcomeSpace,
};
use crate::C64;

pub const DEMOS: [&str; 8] = [
    "example1", "example2", "example3", "example4", "example5", "example6", "example7", "example8",
];

const SUMMARIES: [&str; 8] = [
    "Lüders determined sub-observables, their minimal extension and two measuring instruments",
    "Holevo determined sub-observable, its extension D and the H_(β,D)-sequential product",
    "sharp Lüders closure witness c = Σ a_x(a+b)a_x",
    "Holevo and constant-state sequential products of determined sub-observables",
    "sequential product and conditioning of two Holevo instruments",
    "sequential product and conditioning of two Lüders instruments",
    "sequential product and conditioning of two constant-state instruments",
    "Lüders and finite Holevo instruments in both orders",
];

pub fn run_demo(name: &str) -> Result<Report> {
    let k = DEMOS.iter().position(|d| *d == name).ok_or_else(|| Error::UnknownName {
        kind: "demo",
        name: name.to_string(),
    })?;
    let mut d = Demo {
        name: DEMOS[k],
        b: ReportBuilder::new(DEMOS[k], SUMMARIES[k], 0, Tolerance::DEFAULT),
    };
    let f = Fixture::new()?;
    match k {
        0 => example1(&mut d, &f)?,
        1 => example2(&mut d, &f)?,
        2 => example3(&mut d)?,
        3 => example4(&mut d, &f)?,
        4 => example5(&mut d, &f)?,
        5 => example6(&mut d, &f)?,
        6 => example7(&mut d, &f)?,
        _ => example8(&mut d, &f)?,
    }
    Ok(d.b.finish())
}

struct Demo {
    name: &'static str,
    b: ReportBuilder,
}

impl Demo {
    fn check(&mut self, formula: &str, residual: f64) {
        self.b.line(&format!("{}: {}", self.name, formula), residual);
    }
}

fn m2(e: [(f64, f64); 4]) -> Matrix {
    Matrix::from_fn(2, |i, j| {
        let (re, im) = e[2 * i + j];
        C64::new(re, im)
    })
}

fn id() -> Matrix {
    Matrix::identity(2)
}

fn tr(x: &Matrix, y: &Matrix) -> f64 {
    x.trace_product(y).re
}

/// `x∘y = x^{1/2} y x^{1/2}` computed from scratch.
fn circ(x: &Matrix, y: &Matrix) -> Matrix {
    let r = x.psd_sqrt(Tolerance::DEFAULT).expect("positive input");
    &(&r * y) * &r
}

fn sum_over(ms: &[Matrix], idx: &[usize]) -> Matrix {
    let mut acc = Matrix::zeros(ms[0].dim());
    for &i in idx {
        acc += &ms[i];
    }
    acc
}

fn events(n: usize) -> Vec<Vec<usize>> {
    OutcomeSpace::indexed(n).events()
}

fn worst(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |a, r| if r.is_nan() { f64::NAN } else { a.max(r) })
}

fn mats(o: &SubObservable) -> Vec<Matrix> {
    o.effects().iter().map(|e| e.matrix().clone()).collect()
}

/// Largest negative eigenvalue of `x`, as a non-negative slack.
fn negativity(x: &Matrix) -> f64 {
    let min = x.eigh(Tolerance::DEFAULT).map(|e| e.min()).unwrap_or(f64::NAN);
    (-min).max(0.0)
}

struct Fixture {
    a_obs: Observable,
    b_obs: Observable,
    alpha: State,
    beta: State,
    rho: State,
    a: Effect,
    b: Effect,
    c: Effect,
}

impl Fixture {
    fn new() -> Result<Self> {
        let a0 = m2([(0.7, 0.0), (0.2, 0.0), (0.2, 0.0), (0.3, 0.0)]);
        let b0 = m2([(0.4, 0.0), (0.0, 0.1), (0.0, -0.1), (0.6, 0.0)]);
        let two = |m: Matrix, labels: [&str; 2]| -> Result<Observable> {
            let rest = &id() - &m;
            Observable::new(OutcomeSpace::new(labels)?, vec![Effect::new(m)?, Effect::new(rest)?])
        };
        Ok(Fixture {
            a_obs: two(a0, ["x0", "x1"])?,
            b_obs: two(b0, ["y0", "y1"])?,
            alpha: State::new(m2([(0.6, 0.0), (0.2, -0.1), (0.2, 0.1), (0.4, 0.0)]))?,
            beta: State::new(m2([(0.3, 0.0), (0.1, 0.0), (0.1, 0.0), (0.7, 0.0)]))?,
            rho: State::new(m2([(0.55, 0.0), (0.15, 0.2), (0.15, -0.2), (0.45, 0.0)]))?,
            a: Effect::new(m2([(0.5, 0.0), (0.2, 0.0), (0.2, 0.0), (0.3, 0.0)]))?,
            b: Effect::new(m2([(0.35, 0.0), (0.0, 0.1), (0.0, -0.1), (0.25, 0.0)]))?,
            c: Effect::new(m2([(0.8, 0.0), (-0.1, 0.0), (-0.1, 0.0), (0.2, 0.0)]))?,
        })
    }
}

fn example1(d: &mut Demo, f: &Fixture) -> Result<()> {
    let l = Instrument::luders(&f.a_obs);
    let ax = mats(&f.a_obs);
    let n = ax.len();
    let (b, c, rho) = (f.b.matrix(), f.c.matrix(), f.rho.matrix());
    let lb = l.determined_subobservable(&f.b)?;
    let lc = l.determined_subobservable(&f.c)?;
    let axb: Vec<Matrix> = ax.iter().map(|x| circ(x, b)).collect();
    let azc: Vec<Matrix> = ax.iter().map(|x| circ(x, c)).collect();
    let b1 = sum_over(&axb, &(0..n).collect::<Vec<_>>());
    let b1c = &id() - &b1;

    d.check(
        "L_b*(Δ) = Σ_{x∈Δ} a_x∘b",
        worst(events(n).iter().map(|ev| lb.eval_indices(ev).matrix().max_abs_diff(&sum_over(&axb, ev)))),
    );
    d.check("b_1 = L_b*(Ω) = Σ_{x∈Ω} a_x∘b", lb.total().matrix().max_abs_diff(&b1));

    let ext = lb.minimal_extension(DEFAULT_EXTENSION_LABEL)?;
    let y = n;
    d.check(
        "L_{b,1}*(x) = a_x∘b",
        worst((0..n).map(|x| ext.effects()[x].matrix().max_abs_diff(&axb[x]))),
    );
    d.check("L_{b,1}*(y) = b_1′", ext.effects()[y].matrix().max_abs_diff(&b1c));
    d.check(
        "L_{b,1}*(Δ∪{y}) = Σ_{x∈Δ} a_x∘b + b_1′",
        worst(events(n).iter().map(|ev| {
            let mut with_y = ev.clone();
            with_y.push(y);
            ext.eval_indices(&with_y).matrix().max_abs_diff(&(&sum_over(&axb, ev) + &b1c))
        })),
    );

    let mut kraus: Vec<Vec<Matrix>> = axb
        .iter()
        .map(|m| m.psd_sqrt(Tolerance::DEFAULT).map(|r| vec![r]))
        .collect::<Result<_>>()?;
    kraus.push(vec![b1c.psd_sqrt(Tolerance::DEFAULT)?]);
    let j = Instrument::from_kraus(ext.space().clone(), kraus)?;
    d.check(
        "J(x)(ρ) = (a_x∘b)∘ρ",
        worst((0..n).map(|x| j.apply_indices(&[x], rho).max_abs_diff(&circ(&axb[x], rho)))),
    );
    d.check("J(y)(ρ) = b_1′∘ρ", j.apply_indices(&[y], rho).max_abs_diff(&circ(&b1c, rho)));
    d.check("Ĵ = L_{b,1}*", j.measured_observable().max_abs_diff(&ext)?);

    let ps = ProductOutcomeSpace::new(lb.space(), lc.space())?;
    let prod = sob_seq_product(&lb, &lc, &j)?;
    d.check(
        "L_b*[J]L_c*(x,z) = J*(x)(a_z∘c) = (a_x∘b)∘(a_z∘c)",
        worst((0..n).flat_map(|x| {
            let (prod, ps, axb, azc) = (&prod, &ps, &axb, &azc);
            (0..n).map(move |z| prod.effects()[ps.index(x, z)].matrix().max_abs_diff(&circ(&axb[x], &azc[z])))
        })),
    );
    let restricted = sob_conditioned_restricted(&lc, &j, &lb)?;
    let full = sob_conditioned(&lc, &j, &lb)?;
    let oracle_r: Vec<Matrix> = (0..n)
        .map(|z| {
            let terms: Vec<Matrix> = axb.iter().map(|m| circ(m, &azc[z])).collect();
            sum_over(&terms, &(0..n).collect::<Vec<_>>())
        })
        .collect();
    d.check(
        "(L_c*|J|L_b*)(z) = L_b*[J]L_c*(Ω×z) = Σ_{x∈Ω} (a_x∘b)∘(a_z∘c)",
        worst((0..n).map(|z| restricted.effects()[z].matrix().max_abs_diff(&oracle_r[z]))),
    );
    d.check(
        "J̄*(a_z∘c) over Ω∪{y} = Σ_{x∈Ω} (a_x∘b)∘(a_z∘c) + b_1′∘(a_z∘c)",
        worst((0..n).map(|z| {
            full.effects()[z]
                .matrix()
                .max_abs_diff(&(&oracle_r[z] + &circ(&b1c, &azc[z])))
        })),
    );

    let states = [&f.alpha, &f.beta, &f.rho];
    let alphas: BTreeMap<String, State> = ext
        .labels()
        .iter()
        .zip(states)
        .map(|(l, s)| (l.clone(), s.clone()))
        .collect();
    let h = Instrument::finite_holevo(&alphas, &ext)?;
    d.check("Ĥ_(α,L_{b,1}*) = L_{b,1}*", h.measured_observable().max_abs_diff(&ext)?);
    let prod = sob_seq_product(&lb, &lc, &h)?;
    d.check(
        "L_b*[H_(α,L_{b,1}*)]L_c*(x,z) = tr[α_x(a_z∘c)]·a_x∘b",
        worst((0..n).flat_map(|x| {
            let (prod, ps, axb, azc, states) = (&prod, &ps, &axb, &azc, &states);
            (0..n).map(move |z| {
                let want = axb[x].scale(tr(states[x].matrix(), &azc[z]));
                prod.effects()[ps.index(x, z)].matrix().max_abs_diff(&want)
            })
        })),
    );
    let restricted = sob_conditioned_restricted(&lc, &h, &lb)?;
    let full = sob_conditioned(&lc, &h, &lb)?;
    let oracle_r: Vec<Matrix> = (0..n)
        .map(|z| {
            let terms: Vec<Matrix> = (0..n).map(|x| axb[x].scale(tr(states[x].matrix(), &azc[z]))).collect();
            sum_over(&terms, &(0..n).collect::<Vec<_>>())
        })
        .collect();
    d.check(
        "(L_c*|H_(α,L_{b,1}*)|L_b*)(z) = Σ_{x∈Ω} tr[α_x(a_z∘c)]·a_x∘b",
        worst((0..n).map(|z| restricted.effects()[z].matrix().max_abs_diff(&oracle_r[z]))),
    );
    d.check(
        "H̄*(a_z∘c) over Ω∪{y} = Σ_{x∈Ω} tr[α_x(a_z∘c)]·a_x∘b + tr[α_y(a_z∘c)]·b_1′",
        worst((0..n).map(|z| {
            let extra = b1c.scale(tr(states[y].matrix(), &azc[z]));
            full.effects()[z].matrix().max_abs_diff(&(&oracle_r[z] + &extra))
        })),
    );
    Ok(())
}

fn example2(d: &mut Demo, f: &Fixture) -> Result<()> {
    let h = Instrument::holevo(&f.alpha, &f.a_obs)?;
    let ax = mats(&f.a_obs);
    let n = ax.len();
    let (alpha, beta) = (f.alpha.matrix(), f.beta.matrix());
    let ta = tr(alpha, f.a.matrix());
    let tb = tr(alpha, f.b.matrix());
    let ha = h.determined_subobservable(&f.a)?;
    let hb = h.determined_subobservable(&f.b)?;
    d.check(
        "(H_(α,A)*)_a(Δ) = tr(αa)A(Δ)",
        worst(events(n).iter().map(|ev| ha.eval_indices(ev).matrix().max_abs_diff(&sum_over(&ax, ev).scale(ta)))),
    );

    let dx = ha.minimal_extension(DEFAULT_EXTENSION_LABEL)?;
    let y = n;
    let dval = |ev: &[usize]| dx.eval_indices(ev).into_matrix();
    d.check(
        "D(Δ) = tr(αa)A(Δ)",
        worst(events(n).iter().map(|ev| dval(ev).max_abs_diff(&sum_over(&ax, ev).scale(ta)))),
    );
    d.check(
        "D(Δ∪{y}) = tr(αa)A(Δ) + [1 − tr(αa)]I",
        worst(events(n).iter().map(|ev| {
            let mut with_y = ev.clone();
            with_y.push(y);
            let want = &sum_over(&ax, ev).scale(ta) + &id().scale(1.0 - ta);
            dval(&with_y).max_abs_diff(&want)
        })),
    );
    let mut additivity: f64 = 0.0;
    for delta in events(n) {
        for gamma in events(n) {
            if delta.iter().any(|x| gamma.contains(x)) {
                continue;
            }
            let mut dy = delta.clone();
            dy.push(y);
            let mut all = dy.clone();
            all.extend(&gamma);
            additivity = additivity.max(dval(&all).max_abs_diff(&(&dval(&dy) + &dval(&gamma))));
        }
    }
    d.check("D(Δ∪{y}∪Γ) = D(Δ∪{y}) + D(Γ) for disjoint Δ, Γ", additivity);

    let hbd = Instrument::holevo(&f.beta, &dx)?;
    d.check("Ĥ_(β,D) = D", hbd.measured_observable().max_abs_diff(&dx)?);
    let ps = ProductOutcomeSpace::new(ha.space(), hb.space())?;
    let prod = sob_seq_product(&ha, &hb, &hbd)?;
    let mut r: f64 = 0.0;
    for delta in events(n) {
        for gamma in events(n) {
            let got = prod.eval_indices(&ps.rectangle(&delta, &gamma));
            let want = sum_over(&ax, &delta).scale(tb * ta * tr(beta, &sum_over(&ax, &gamma)));
            r = r.max(got.matrix().max_abs_diff(&want));
        }
    }
    d.check("(H*)_a[H_(β,D)](H*)_b(Δ×Γ) = tr(αb)tr(αa)tr[βA(Γ)]A(Δ)", r);

    let restricted = sob_conditioned_restricted(&hb, &hbd, &ha)?;
    let full = sob_conditioned(&hb, &hbd, &ha)?;
    d.check(
        "((H*)_b|H_(β,D)|(H*)_a)(Γ) = (H*)_a[H_(β,D)](H*)_b(Ω_A×Γ) = tr(αb)tr(αa)tr[βA(Γ)]I",
        worst(events(n).iter().map(|g| {
            let want = id().scale(tb * ta * tr(beta, &sum_over(&ax, g)));
            restricted.eval_indices(g).matrix().max_abs_diff(&want)
        })),
    );
    d.check(
        "H̄_(β,D)*[(H*)_b(Γ)] over Ω_A∪{y} = tr(αb)tr[βA(Γ)]I",
        worst(events(n).iter().map(|g| {
            let want = id().scale(tb * tr(beta, &sum_over(&ax, g)));
            full.eval_indices(g).matrix().max_abs_diff(&want)
        })),
    );
    Ok(())
}

fn example3(d: &mut Demo) -> Result<()> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [C64::new(s, 0.0), C64::new(s, 0.0)];
    let minus = [C64::new(s, 0.0), C64::new(-s, 0.0)];
    let sharp = Observable::from_effects(vec![
        Effect::new(Matrix::projector(&plus))?,
        Effect::new(Matrix::projector(&minus))?,
    ])?;
    let ps = mats(&sharp);
    let a = Effect::new(Matrix::diag(&[0.9, 0.0]))?;
    let b = Effect::new(Matrix::diag(&[0.8, 0.1]))?;
    let ab = a.matrix() + b.matrix();
    let l = Instrument::luders(&sharp);
    let la = l.determined_subobservable(&a)?;
    let lb = l.determined_subobservable(&b)?;

    d.check(
        "L_a* + L_b* ∈ Sob(H), although a + b ≰ I",
        worst((0..2).map(|x| {
            let sum = la.effects()[x].matrix() + lb.effects()[x].matrix();
            (sum.eigh(Tolerance::DEFAULT).map(|e| e.max()).unwrap_or(f64::NAN) - 1.0).max(0.0)
        })),
    );
    let c = sum_over(&ps.iter().map(|p| p.sandwich(&ab)).collect::<Vec<_>>(), &[0, 1]);
    let via_duals = &la.total().into_matrix() + &lb.total().into_matrix();
    d.check("c = Σ_x a_x(a+b)a_x = Σ_x [(L_a*)_x + (L_b*)_x]", c.max_abs_diff(&via_duals));
    d.check(
        "0 ≤ c ≤ I",
        negativity(&c).max(negativity(&(&id() - &c))),
    );
    let lc = l.determined_subobservable(&Effect::new(c.clone())?)?;
    d.check(
        "(L_c*)_y = a_y c a_y = a_y(a+b)a_y",
        worst((0..2).map(|y| lc.effects()[y].matrix().max_abs_diff(&ps[y].sandwich(&ab)))),
    );
    d.check(
        "(L_c*)_y = (L_a*)_y + (L_b*)_y",
        worst((0..2).map(|y| {
            lc.effects()[y]
                .matrix()
                .max_abs_diff(&(la.effects()[y].matrix() + lb.effects()[y].matrix()))
        })),
    );
    let spec = SobFamilySpec::SharpLuders { observable: sharp };
    let residual = match check_sob_closure(&spec, &a, &b, Tolerance::DEFAULT, 0)? {
        ClosureVerdict::Witness { c: w, residual } => residual.max(w.matrix().max_abs_diff(&c)),
        _ => f64::INFINITY,
    };
    d.check("L_a* + L_b* = L_c* ∈ U_L", residual);
    Ok(())
}

fn example4(d: &mut Demo, f: &Fixture) -> Result<()> {
    let h = Instrument::holevo(&f.alpha, &f.a_obs)?;
    let ax = mats(&f.a_obs);
    let n = ax.len();
    let (alpha, beta, rho) = (f.alpha.matrix(), f.beta.matrix(), f.rho.matrix());
    let (a, b) = (f.a.matrix(), f.b.matrix());
    let ab = circ(a, b);
    let ha = h.determined_subobservable(&f.a)?;
    let prod = determined_seq_product(&h, &f.a, &f.b)?;
    let evs = events(n);

    d.check(
        "(H*)_a∘(H*)_b(Δ) = (H*)_{a∘b}(Δ) = tr(α a∘b)A(Δ)",
        worst(evs.iter().map(|ev| prod.eval_indices(ev).matrix().max_abs_diff(&sum_over(&ax, ev).scale(tr(alpha, &ab))))),
    );
    let lambda = tr(alpha, &ab) / tr(alpha, a);
    d.check(
        "(H*)_a∘(H*)_b = λ(H*)_a with λ = tr(α a∘b)/tr(αa)",
        worst(evs.iter().map(|ev| prod.eval_indices(ev).matrix().max_abs_diff(&ha.eval_indices(ev).matrix().scale(lambda)))),
    );
    d.check(
        "(H*)_a∘(H*)_b ≤ (H*)_a",
        worst(evs.iter().map(|ev| negativity(&(ha.eval_indices(ev).matrix() - prod.eval_indices(ev).matrix())))),
    );
    let k = tr(&circ(a, alpha), b);
    d.check(
        "tr[ρ(I_a*∘I_b*)(Δ)] = tr[(a∘α)b]tr[ρA(Δ)]",
        worst(evs.iter().map(|ev| (tr(rho, prod.eval_indices(ev).matrix()) - k * tr(rho, &sum_over(&ax, ev))).abs())),
    );
    d.check(
        "tr[ρ(I_a*∘I_b*)(Δ)] = tr[(a∘α)b]tr[I(Δ)(ρ)]",
        worst(evs.iter().map(|ev| (tr(rho, prod.eval_indices(ev).matrix()) - k * h.apply_indices(ev, rho).trace().re).abs())),
    );

    // constant-state instrument over a Lüders source
    let bm = mats(&f.b_obs);
    let src = Instrument::luders(&f.b_obs);
    let ia = Instrument::constant_state(&src, &f.alpha)?;
    let cprod = determined_seq_product(&ia, &f.a, &f.b)?;
    let sig: Vec<Matrix> = bm.iter().map(|y| circ(y, alpha)).collect();
    d.check(
        "(I_α*)_a∘(I_α*)_b(Δ) = (I_α*)_{a∘b}(Δ) = tr[I(Δ)(α)a∘b]I",
        worst(evs.iter().map(|ev| cprod.eval_indices(ev).matrix().max_abs_diff(&id().scale(tr(&sum_over(&sig, ev), &ab))))),
    );
    d.check(
        "(I_α*)_a∘(I_α*)_b(Δ) = tr[(a∘I(Δ)α)b]I",
        worst(evs.iter().map(|ev| cprod.eval_indices(ev).matrix().max_abs_diff(&id().scale(tr(&circ(a, &sum_over(&sig, ev)), b))))),
    );

    // constant-state instrument over a Holevo source
    let hs = Instrument::holevo(&f.beta, &f.a_obs)?;
    let ha_alpha = Instrument::constant_state(&hs, &f.alpha)?;
    let det = ha_alpha.determined_subobservable(&f.a)?;
    d.check(
        "I = H_(β,A): (I_α*)_a(Δ) = tr[H_(β,A)(Δ)(α)a]I = tr[αA(Δ)]tr(βa)I",
        worst(evs.iter().map(|ev| det.eval_indices(ev).matrix().max_abs_diff(&id().scale(tr(alpha, &sum_over(&ax, ev)) * tr(beta, a))))),
    );
    let hprod = determined_seq_product(&ha_alpha, &f.a, &f.b)?;
    d.check(
        "I = H_(β,A): (I_α*)_a∘(I_α*)_b(Δ) = tr[αA(Δ)]tr[(a∘β)b]I",
        worst(evs.iter().map(|ev| {
            hprod
                .eval_indices(ev)
                .matrix()
                .max_abs_diff(&id().scale(tr(alpha, &sum_over(&ax, ev)) * tr(&circ(a, beta), b)))
        })),
    );
    d.b.detail(
        "note",
        "the intermediate form tr(αa)tr[(a∘b)~b] is not asserted; the constant is λ = tr(α a∘b)/tr(αa) = tr[(a∘α)b]/tr(αa)",
    );
    Ok(())
}

fn example5(d: &mut Demo, f: &Fixture) -> Result<()> {
    let i = Instrument::holevo(&f.alpha, &f.a_obs)?;
    let j = Instrument::holevo(&f.beta, &f.b_obs)?;
    let (ax, bx) = (mats(&f.a_obs), mats(&f.b_obs));
    let (alpha, beta, rho, a) = (f.alpha.matrix(), f.beta.matrix(), f.rho.matrix(), f.a.matrix());
    let ij = instr_seq_product(&i, &j)?;
    let ps = ProductOutcomeSpace::new(i.space(), j.space())?;
    let ij_a = ij.determined_subobservable(&f.a)?;
    let ij_hat = ij.measured_observable();
    let (mut r_op, mut r_a, mut r_hat) = (0.0f64, 0.0f64, 0.0f64);
    for delta in events(ax.len()) {
        for gamma in events(bx.len()) {
            let rect = ps.rectangle(&delta, &gamma);
            let (ad, bg) = (sum_over(&ax, &delta), sum_over(&bx, &gamma));
            let want = beta.scale(tr(rho, &ad) * tr(alpha, &bg));
            r_op = r_op.max(ij.apply_indices(&rect, rho).max_abs_diff(&want));
            r_a = r_a.max(ij_a.eval_indices(&rect).matrix().max_abs_diff(&ad.scale(tr(beta, a) * tr(alpha, &bg))));
            r_hat = r_hat.max(ij_hat.eval_indices(&rect).matrix().max_abs_diff(&ad.scale(tr(alpha, &bg))));
        }
    }
    d.check("(I∘J)(Δ×Γ)(ρ) = tr[ρA(Δ)]tr[αB(Γ)]β", r_op);
    d.check("(I∘J)_a*(Δ×Γ) = I*(Δ)[J*(Γ)(a)] = tr(βa)tr[αB(Γ)]A(Δ)", r_a);
    d.check("(I∘J)_I*(Δ×Γ) = tr[αB(Γ)]A(Δ)", r_hat);

    let cond = instr_conditioned(&j, &i)?;
    let cond_a = cond.determined_subobservable(&f.a)?;
    let cond_hat = cond.measured_observable();
    let gs = events(bx.len());
    d.check(
        "(J|I)(Γ)(ρ) = J(Γ)[Ī(ρ)] = J(Γ)(α) = tr[αB(Γ)]β",
        worst(gs.iter().map(|g| cond.apply_indices(g, rho).max_abs_diff(&beta.scale(tr(alpha, &sum_over(&bx, g)))))),
    );
    d.check(
        "(J|I)_a*(Γ) = I*(Ω_I)[J_a*(Γ)] = tr(βa)tr[αB(Γ)]I",
        worst(gs.iter().map(|g| cond_a.eval_indices(g).matrix().max_abs_diff(&id().scale(tr(beta, a) * tr(alpha, &sum_over(&bx, g)))))),
    );
    d.check(
        "(J|I)_I*(Γ) = tr[αB(Γ)]I",
        worst(gs.iter().map(|g| cond_hat.eval_indices(g).matrix().max_abs_diff(&id().scale(tr(alpha, &sum_over(&bx, g)))))),
    );
    Ok(())
}

fn example6(d: &mut Demo, f: &Fixture) -> Result<()> {
    let i = Instrument::luders(&f.a_obs);
    let j = Instrument::luders(&f.b_obs);
    let (ax, bx) = (mats(&f.a_obs), mats(&f.b_obs));
    let (rho, a) = (f.rho.matrix(), f.a.matrix());
    let ij = instr_seq_product(&i, &j)?;
    let ps = ProductOutcomeSpace::new(i.space(), j.space())?;
    let ij_a = ij.determined_subobservable(&f.a)?;
    let ij_hat = ij.measured_observable();
    let (mut r_op, mut r_a, mut r_hat) = (0.0f64, 0.0f64, 0.0f64);
    for (x, ax_) in ax.iter().enumerate() {
        for (y, by) in bx.iter().enumerate() {
            let k = ps.index(x, y);
            r_op = r_op.max(ij.apply_indices(&[k], rho).max_abs_diff(&circ(by, &circ(ax_, rho))));
            r_a = r_a.max(ij_a.effects()[k].matrix().max_abs_diff(&circ(ax_, &circ(by, a))));
            r_hat = r_hat.max(ij_hat.effects()[k].matrix().max_abs_diff(&circ(ax_, by)));
        }
    }
    d.check("(I∘J)(x,y)(ρ) = J_y[I_x(ρ)] = b_y∘(a_x∘ρ)", r_op);
    d.check("(I∘J)_a*(x,y) = I_x*[J_y*(a)] = a_x∘(b_y∘a)", r_a);
    d.check("(I∘J)_I*(x,y) = a_x∘b_y", r_hat);

    let cond = instr_conditioned(&j, &i)?;
    let cond_a = cond.determined_subobservable(&f.a)?;
    let cond_hat = cond.measured_observable();
    let sum_x = |g: &dyn Fn(&Matrix) -> Matrix| -> Matrix {
        let terms: Vec<Matrix> = ax.iter().map(g).collect();
        sum_over(&terms, &(0..ax.len()).collect::<Vec<_>>())
    };
    d.check(
        "(J|I)_y(ρ) = J_y[Ī(ρ)] = Σ_x b_y∘(a_x∘ρ)",
        worst(bx.iter().enumerate().map(|(y, by)| cond.apply_indices(&[y], rho).max_abs_diff(&sum_x(&|ax_| circ(by, &circ(ax_, rho)))))),
    );
    d.check(
        "(J|I)_a*(y) = I*(Ω_I)[J_a*(y)] = Σ_x a_x∘(b_y∘a)",
        worst(bx.iter().enumerate().map(|(y, by)| cond_a.effects()[y].matrix().max_abs_diff(&sum_x(&|ax_| circ(ax_, &circ(by, a)))))),
    );
    d.check(
        "(J|I)_I*(y) = Σ_x a_x∘b_y",
        worst(bx.iter().enumerate().map(|(y, by)| cond_hat.effects()[y].matrix().max_abs_diff(&sum_x(&|ax_| circ(ax_, by))))),
    );
    Ok(())
}

fn example7(d: &mut Demo, f: &Fixture) -> Result<()> {
    let (ax, bx) = (mats(&f.a_obs), mats(&f.b_obs));
    let (alpha, beta, a) = (f.alpha.matrix(), f.beta.matrix(), f.a.matrix());
    let i_alpha = Instrument::constant_state(&Instrument::luders(&f.a_obs), &f.alpha)?;
    let j_beta = Instrument::constant_state(&Instrument::luders(&f.b_obs), &f.beta)?;
    // I(x)(α) = a_x∘α and J(y)(β) = b_y∘β
    let sig: Vec<Matrix> = ax.iter().map(|m| circ(m, alpha)).collect();
    let tau: Vec<Matrix> = bx.iter().map(|m| circ(m, beta)).collect();
    let (ds, gs) = (events(ax.len()), events(bx.len()));

    d.check(
        "I_α*(Δ)(a) = tr[I(Δ)(α)a]I",
        worst(ds.iter().map(|ev| i_alpha.dual_indices(ev, a).max_abs_diff(&id().scale(tr(&sum_over(&sig, ev), a))))),
    );
    d.check(
        "J_β*(Γ)(a) = tr[J(Γ)(β)a]I",
        worst(gs.iter().map(|ev| j_beta.dual_indices(ev, a).max_abs_diff(&id().scale(tr(&sum_over(&tau, ev), a))))),
    );

    let ij = instr_seq_product(&i_alpha, &j_beta)?;
    let ps = ProductOutcomeSpace::new(i_alpha.space(), j_beta.space())?;
    let ij_a = ij.determined_subobservable(&f.a)?;
    let ij_hat = ij.measured_observable();
    let (mut r_op, mut r_a, mut r_hat) = (0.0f64, 0.0f64, 0.0f64);
    for delta in &ds {
        for gamma in &gs {
            let rect = ps.rectangle(delta, gamma);
            let (s, t) = (sum_over(&sig, delta), sum_over(&tau, gamma));
            r_op = r_op.max(ij.apply_indices(&rect, f.rho.matrix()).max_abs_diff(&t.scale(s.trace().re)));
            r_a = r_a.max(ij_a.eval_indices(&rect).matrix().max_abs_diff(&id().scale(tr(&t, a) * s.trace().re)));
            r_hat = r_hat.max(ij_hat.eval_indices(&rect).matrix().max_abs_diff(&id().scale(t.trace().re * s.trace().re)));
        }
    }
    d.check("(I_α∘J_β)(Δ×Γ)(ρ) = tr[I(Δ)(α)]J(Γ)(β)", r_op);
    d.check("(I_α∘J_β)_a*(Δ×Γ) = tr[J(Γ)(β)a]tr[I(Δ)(α)]I", r_a);
    d.check("(I_α∘J_β)_I*(Δ×Γ) = tr[J(Γ)(β)]tr[I(Δ)(α)]I", r_hat);

    let cond = instr_conditioned(&j_beta, &i_alpha)?;
    let inputs = [f.rho.matrix(), alpha, beta, f.a.matrix()];
    d.check(
        "(J_β|I_α)(Γ)(ρ) = J_β(Γ)[Ī_α(ρ)] = J(Γ)(β), so (J_β|I_α) = J_β",
        worst(gs.iter().flat_map(|g| {
            let (cond, j_beta, tau) = (&cond, &j_beta, &tau);
            inputs.iter().map(move |&x| {
                let want = sum_over(tau, g).scale(x.trace().re);
                cond.apply_indices(g, x)
                    .max_abs_diff(&want)
                    .max(cond.apply_indices(g, x).max_abs_diff(&j_beta.apply_indices(g, x)))
            })
        })),
    );
    let cond_a = cond.determined_subobservable(&f.a)?;
    let cond_hat = cond.measured_observable();
    d.check(
        "(J_β|I_α)_a*(Γ) = (J_β*)_a(Γ) = tr[J(Γ)(β)a]I",
        worst(gs.iter().map(|g| cond_a.eval_indices(g).matrix().max_abs_diff(&id().scale(tr(&sum_over(&tau, g), a))))),
    );
    d.check(
        "(J_β|I_α)_I*(Γ) = tr[J(Γ)(β)]I",
        worst(gs.iter().map(|g| cond_hat.eval_indices(g).matrix().max_abs_diff(&id().scale(sum_over(&tau, g).trace().re)))),
    );
    Ok(())
}

fn example8(d: &mut Demo, f: &Fixture) -> Result<()> {
    let (ax, bx) = (mats(&f.a_obs), mats(&f.b_obs));
    let (rho, a) = (f.rho.matrix(), f.a.matrix());
    let i = Instrument::luders(&f.a_obs);
    let beta_states = [f.beta.clone(), f.alpha.clone()];
    let betas: BTreeMap<String, State> = f
        .b_obs
        .labels()
        .iter()
        .cloned()
        .zip(beta_states.iter().cloned())
        .collect();
    let bs: Vec<Matrix> = beta_states.iter().map(|s| s.matrix().clone()).collect();
    let j = Instrument::finite_holevo(&betas, &f.b_obs)?;
    let (nx, ny) = (ax.len(), bx.len());

    let ij = instr_seq_product(&i, &j)?;
    let ps = ProductOutcomeSpace::new(i.space(), j.space())?;
    let ij_a = ij.determined_subobservable(&f.a)?;
    let ij_hat = ij.measured_observable();
    let (mut r_op, mut r_a, mut r_hat) = (0.0f64, 0.0f64, 0.0f64);
    for x in 0..nx {
        for y in 0..ny {
            let k = ps.index(x, y);
            r_op = r_op.max(ij.apply_indices(&[k], rho).max_abs_diff(&bs[y].scale(tr(&circ(&ax[x], rho), &bx[y]))));
            r_a = r_a.max(ij_a.effects()[k].matrix().max_abs_diff(&circ(&ax[x], &bx[y]).scale(tr(&bs[y], a))));
            r_hat = r_hat.max(ij_hat.effects()[k].matrix().max_abs_diff(&circ(&ax[x], &bx[y])));
        }
    }
    d.check("(I∘J)(x,y)(ρ) = J_y[a_x∘ρ] = tr[(a_x∘ρ)B_y]β_y", r_op);
    d.check("(I∘J)_a*(x,y) = I_x*[J_y*(a)] = tr(β_y a)a_x∘B_y", r_a);
    d.check("(I∘J)_I*(x,y) = a_x∘B_y", r_hat);

    let cy: Vec<Matrix> = (0..ny)
        .map(|y| sum_over(&ax.iter().map(|m| circ(m, &bx[y])).collect::<Vec<_>>(), &(0..nx).collect::<Vec<_>>()))
        .collect();
    let c_obs = Observable::new(
        f.b_obs.space().clone(),
        cy.iter().map(|m| Effect::new(m.clone())).collect::<Result<_>>()?,
    )?;
    let hc = Instrument::finite_holevo(&betas, &c_obs)?;
    let cond = instr_conditioned(&j, &i)?;
    d.check(
        "(J|I)_y(ρ) = J_y[Ī(ρ)] = tr[ρC_y]β_y = H_(β,C)(y)(ρ), C_y = Σ_x a_x∘B_y",
        worst((0..ny).map(|y| {
            let got = cond.apply_indices(&[y], rho);
            got.max_abs_diff(&bs[y].scale(tr(rho, &cy[y])))
                .max(got.max_abs_diff(&hc.apply_indices(&[y], rho)))
        })),
    );
    let cond_a = cond.determined_subobservable(&f.a)?;
    let cond_hat = cond.measured_observable();
    d.check(
        "(J|I)_a*(y) = I*(Ω_I)[J_a*(y)] = tr(β_y a)C_y",
        worst((0..ny).map(|y| cond_a.effects()[y].matrix().max_abs_diff(&cy[y].scale(tr(&bs[y], a))))),
    );
    d.check(
        "(J|I)_I*(y) = Σ_x a_x∘B_y = C_y = (B|A)_y",
        worst((0..ny).map(|y| cond_hat.effects()[y].matrix().max_abs_diff(&cy[y]))),
    );

    // the other order: outcomes are (y, x)
    let ji = instr_seq_product(&j, &i)?;
    let qs = ProductOutcomeSpace::new(j.space(), i.space())?;
    let ji_a = ji.determined_subobservable(&f.a)?;
    let ji_hat = ji.measured_observable();
    let (mut r_op, mut r_a, mut r_hat) = (0.0f64, 0.0f64, 0.0f64);
    for y in 0..ny {
        for x in 0..nx {
            let k = qs.index(y, x);
            r_op = r_op.max(ji.apply_indices(&[k], rho).max_abs_diff(&circ(&ax[x], &bs[y]).scale(tr(rho, &bx[y]))));
            r_a = r_a.max(ji_a.effects()[k].matrix().max_abs_diff(&bx[y].scale(tr(&bs[y], &circ(&ax[x], a)))));
            r_hat = r_hat.max(ji_hat.effects()[k].matrix().max_abs_diff(&bx[y].scale(tr(&bs[y], &ax[x]))));
        }
    }
    d.check("(J∘I)(y,x)(ρ) = I_x[J_y(ρ)] = tr(ρB_y)a_x∘β_y", r_op);
    d.check("(J∘I)_a*(y,x) = J_y*[I_x*(a)] = tr[β_y(a_x∘a)]B_y", r_a);
    d.check("(J∘I)_I*(y,x) = tr(β_y a_x)B_y", r_hat);

    let cond = instr_conditioned(&i, &j)?;
    let cond_a = cond.determined_subobservable(&f.a)?;
    let cond_hat = cond.measured_observable();
    let sum_y = |g: &dyn Fn(usize) -> Matrix| -> Matrix {
        let terms: Vec<Matrix> = (0..ny).map(g).collect();
        sum_over(&terms, &(0..ny).collect::<Vec<_>>())
    };
    d.check(
        "(I|J)_x(ρ) = I_x[J̄(ρ)] = Σ_y tr(ρB_y)a_x∘β_y",
        worst((0..nx).map(|x| cond.apply_indices(&[x], rho).max_abs_diff(&sum_y(&|y| circ(&ax[x], &bs[y]).scale(tr(rho, &bx[y])))))),
    );
    d.check(
        "(I|J)_a*(x) = J*(Ω_J)[I_a*(x)] = Σ_y tr[β_y I_a*(x)]B_y",
        worst((0..nx).map(|x| cond_a.effects()[x].matrix().max_abs_diff(&sum_y(&|y| bx[y].scale(tr(&bs[y], &circ(&ax[x], a))))))),
    );
    d.check(
        "(I|J)_I*(x) = Σ_y tr(β_y a_x)B_y",
        worst((0..nx).map(|x| cond_hat.effects()[x].matrix().max_abs_diff(&sum_y(&|y| bx[y].scale(tr(&bs[y], &ax[x])))))),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_demo_passes_and_cites_itself() {
        for name in DEMOS {
            let r = run_demo(name).unwrap();
            assert!(r.passed, "{name}: {:?}", r.failures);
            assert!(r.lines.len() >= 3, "{name}");
            for line in &r.lines {
                assert!(line.citation.starts_with(&format!("{name}: ")));
            }
        }
    }

    #[test]
    fn unknown_demo() {
        assert!(matches!(run_demo("example9"), Err(Error::UnknownName { .. })));
    }

    #[test]
    fn example2_full_and_restricted_differ() {
        // the extension term tr(αb)[1 − tr(αa)]tr[βA(Γ)]I is non-zero for the fixture
        let f = Fixture::new().unwrap();
        let ta = tr(f.alpha.matrix(), f.a.matrix());
        assert!(ta > 0.0 && ta < 1.0);
    }
}
