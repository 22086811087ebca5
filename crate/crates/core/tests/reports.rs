use qmi_core::demos::{run_demo, DEMOS};
use qmi_core::effect_algebra::{check_sob_closure, ClosureVerdict, SobFamilySpec};
use qmi_core::random;
use qmi_core::suites::{run_suite, SuiteContext, SUITES};
use qmi_core::{Error, Tolerance};

#[test]
fn suites_are_deterministic() {
    let ctx = SuiteContext::new(11, 5, Tolerance::DEFAULT);
    for name in SUITES {
        let a = run_suite(name, &ctx).unwrap().canonical_json();
        let b = run_suite(name, &ctx).unwrap().canonical_json();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn seeds_change_the_samples() {
    let a = run_suite("duality", &SuiteContext::new(1, 5, Tolerance::DEFAULT)).unwrap();
    let b = run_suite("duality", &SuiteContext::new(2, 5, Tolerance::DEFAULT)).unwrap();
    assert_ne!(a.max_residual, b.max_residual);
}

#[test]
fn demo_lines_cite_their_example() {
    for name in DEMOS {
        let r = run_demo(name).unwrap();
        assert!(r.passed);
        assert!(r.lines.iter().all(|l| l.citation.starts_with(&format!("{name}: ")) && l.residual <= 1e-9));
        assert_eq!(r.canonical_json(), run_demo(name).unwrap().canonical_json());
    }
}

#[test]
fn example4_notes_the_unasserted_form() {
    let r = run_demo("example4").unwrap();
    assert!(r.details.contains_key("note"));
}

#[test]
fn unknown_names_are_errors() {
    assert!(matches!(run_demo("example0"), Err(Error::UnknownName { kind: "demo", .. })));
    let ctx = SuiteContext::default();
    assert!(matches!(run_suite("nope", &ctx), Err(Error::UnknownName { kind: "suite", .. })));
}

#[test]
fn general_family_search_finds_perpendicular_witness() {
    let mut rng = random::rng(5);
    let instrument = random::kraus_instrument(&mut rng, 2, 2, 2);
    let (a, b) = random::perpendicular_pair(&mut rng, 2);
    let spec = SobFamilySpec::Determined { instrument };
    let v = check_sob_closure(&spec, &a, &b, Tolerance::DEFAULT, 5).unwrap();
    assert!(matches!(v, ClosureVerdict::Witness { .. }));
}

#[test]
fn general_family_search_finds_witness_beyond_perpendicular() {
    // a + b ≰ I, yet tr(α(a+b)) ≤ 1 so some scalar c reproduces the sum
    let alpha = qmi_core::State::new(qmi_core::Matrix::diag(&[0.2, 0.8])).unwrap();
    let obs = random::observable(&mut random::rng(9), 2, 2);
    let instrument = qmi_core::Instrument::holevo(&alpha, &obs).unwrap();
    let a = qmi_core::Effect::new(qmi_core::Matrix::diag(&[0.9, 0.1])).unwrap();
    let b = qmi_core::Effect::new(qmi_core::Matrix::diag(&[0.3, 0.1])).unwrap();
    assert!(!a.is_perp(&b, Tolerance::DEFAULT).unwrap());
    let spec = SobFamilySpec::Determined { instrument };
    let v = check_sob_closure(&spec, &a, &b, Tolerance::DEFAULT, 3).unwrap();
    assert!(v.closed(), "{v:?}");
}
