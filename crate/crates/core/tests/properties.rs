use proptest::prelude::*;

use qmi_core::effect_algebra::{check_sob_closure, ClosureVerdict, DeterminedFamily, SobFamilySpec};
use qmi_core::random::{self, Family};
use qmi_core::sequential::{instr_conditioned, instr_seq_product, marginal_right, ProductOutcomeSpace};
use qmi_core::{Effect, Instrument, Matrix, Tolerance};

const TOL: Tolerance = Tolerance::DEFAULT;

fn min_eig(m: &Matrix) -> f64 {
    m.eigh(TOL).unwrap().min()
}

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn duality_holds_on_every_event(seed in any::<u64>(), d in 2usize..=4, f in family()) {
        let mut rng = random::rng(seed);
        let i = random::instrument(&mut rng, d, f);
        let rho = random::state(&mut rng, d);
        let a = random::effect(&mut rng, d);
        for ev in i.space().events() {
            let lhs = rho.matrix().trace_product(&i.dual_indices(&ev, a.matrix()));
            let rhs = i.apply_indices(&ev, rho.matrix()).trace_product(a.matrix());
            prop_assert!((lhs - rhs).norm() <= 1e-9);
        }
    }

    #[test]
    fn measured_observable_sums_to_identity(seed in any::<u64>(), d in 2usize..=4, f in family()) {
        let mut rng = random::rng(seed);
        let i = random::instrument(&mut rng, d, f);
        prop_assert!(i.measured_observable().is_observable(TOL));
        prop_assert!(i.is_instrument(TOL));
    }

    #[test]
    fn sequential_product_is_below_first_factor(seed in any::<u64>(), d in 2usize..=4) {
        let mut rng = random::rng(seed);
        let a = random::effect(&mut rng, d);
        let b = random::effect(&mut rng, d);
        let ab = a.seq_product(&b);
        prop_assert!(min_eig(&(a.matrix() - ab.matrix())) >= -1e-9);
        prop_assert!(min_eig(ab.matrix()) >= -1e-9);
    }

    #[test]
    fn complement_is_an_involution(seed in any::<u64>(), d in 2usize..=4) {
        let a = random::effect(&mut random::rng(seed), d);
        prop_assert!(a.complement().complement().matrix().max_abs_diff(a.matrix()) <= 1e-15);
        prop_assert!(a.is_perp(&a.complement(), TOL).unwrap());
    }

    #[test]
    fn determined_subobservables_are_additive(seed in any::<u64>(), d in 2usize..=3, f in family()) {
        let mut rng = random::rng(seed);
        let i = random::instrument(&mut rng, d, f);
        let (a, b) = random::perpendicular_pair(&mut rng, d);
        let fam = DeterminedFamily::new(i.clone(), TOL);
        let sum = fam.oplus(&a, &b).unwrap();
        let ia = i.determined_subobservable(&a).unwrap();
        let joint = ia.add(&i.determined_subobservable(&b).unwrap(), TOL).unwrap();
        prop_assert!(sum.max_abs_diff(&joint).unwrap() <= 1e-9);
        prop_assert!(fam.complement_residual(&a).unwrap() <= 1e-9);
        prop_assert!(ia.leq(&i.measured_observable(), TOL).unwrap());
    }

    #[test]
    fn product_marginal_is_conditioning(seed in any::<u64>(), d in 2usize..=3, f in family(), g in family()) {
        let mut rng = random::rng(seed);
        let i = random::instrument(&mut rng, d, f);
        let j = random::instrument(&mut rng, d, g);
        let a = random::effect(&mut rng, d);
        let ij = instr_seq_product(&i, &j).unwrap();
        let cond = instr_conditioned(&j, &i).unwrap();
        let ps = ProductOutcomeSpace::new(i.space(), j.space()).unwrap();
        let joint = ij.determined_subobservable(&a).unwrap();
        let marginal = marginal_right(&joint, &ps, &i.space().all());
        let direct = cond.determined_subobservable(&a).unwrap();
        prop_assert!(marginal.max_abs_diff(&direct).unwrap() <= 1e-9);
    }

    #[test]
    fn holevo_witness_is_exact(seed in any::<u64>(), d in 2usize..=3) {
        let mut rng = random::rng(seed);
        let alpha = random::state(&mut rng, d);
        let observable = random::observable(&mut rng, d, 3);
        let (a, b) = random::perpendicular_pair(&mut rng, d);
        let v = check_sob_closure(&SobFamilySpec::Holevo { alpha, observable }, &a, &b, TOL, seed).unwrap();
        let exact = matches!(v, ClosureVerdict::Witness { residual, .. } if residual <= 1e-9);
        prop_assert!(exact);
    }

    #[test]
    fn scaling_commutes_with_determination(seed in any::<u64>(), lambda in 0.0f64..=1.0, f in family()) {
        let mut rng = random::rng(seed);
        let i = random::instrument(&mut rng, 2, f);
        let a = random::effect(&mut rng, 2);
        let lhs = i.determined_subobservable(&a).unwrap().scale(lambda).unwrap();
        let rhs = i.determined_subobservable(&a.scale(lambda).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
    }

    #[test]
    fn extensions_restrict_exactly(seed in any::<u64>(), d in 2usize..=4) {
        let mut rng = random::rng(seed);
        let obs = random::observable(&mut rng, d, 3);
        let sub = obs.scale(0.6).unwrap();
        let ext = sub.minimal_extension("rest").unwrap();
        prop_assert_eq!(ext.restrict(sub.space()).unwrap(), sub);
    }

    #[test]
    fn luders_measures_its_observable(seed in any::<u64>(), d in 2usize..=4) {
        let obs = random::observable(&mut random::rng(seed), d, 3);
        let l = Instrument::luders(&obs);
        prop_assert!(l.measured_observable().max_abs_diff(&obs).unwrap() <= 1e-9);
        let e = Effect::identity(d);
        prop_assert!(l.is_determined_observable(&e, TOL).unwrap());
    }
}
