//! Seeded generators for random states, effects, observables and instruments.
//!
//! Every trial of a randomized check draws from `trial_rng(seed, index)`, so
//! trials are independent and reproducible in any order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::effects::{Effect, State};
use crate::instruments::Instrument;
use crate::linalg::{Matrix, Tolerance};
use crate::observables::{Observable, OutcomeSpace};
use crate::C64;

pub type QmiRng = ChaCha8Rng;

pub fn rng(seed: u64) -> QmiRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> QmiRng {
    rng(seed.wrapping_add(index))
}

/// Instrument families available to the generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Luders,
    Holevo,
    FiniteHolevo,
    ConstantState,
    Kraus,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Luders,
        Family::Holevo,
        Family::FiniteHolevo,
        Family::ConstantState,
        Family::Kraus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Luders => "luders",
            Family::Holevo => "holevo",
            Family::FiniteHolevo => "finite_holevo",
            Family::ConstantState => "constant_state",
            Family::Kraus => "kraus",
        }
    }
}

fn gaussian(rng: &mut QmiRng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rng: &mut QmiRng, dim: usize) -> Matrix {
    Matrix::from_fn(dim, |_, _| gaussian(rng))
}

/// Unitary from Gram–Schmidt on the columns of a Ginibre matrix.
pub fn unitary(rng: &mut QmiRng, dim: usize) -> Matrix {
    loop {
        let g = ginibre(rng, dim);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
        let mut degenerate = false;
        for j in 0..dim {
            let mut v = g.column(j);
            for u in &cols {
                let dot: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= dot * ui;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                degenerate = true;
                break;
            }
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
        if !degenerate {
            return Matrix::from_fn(dim, |i, j| cols[j][i]);
        }
    }
}

/// Mixed state `G G† / tr(G G†)` with `G` Ginibre.
pub fn state(rng: &mut QmiRng, dim: usize) -> State {
    let g = ginibre(rng, dim);
    let w = &g * &g.adjoint();
    let t = w.trace().re;
    State::new(w.scale(1.0 / t).hermitian_part()).expect("Ginibre state is valid")
}

pub fn pure_state(rng: &mut QmiRng, dim: usize) -> State {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    State::pure(&v).expect("Gaussian vector is non-zero")
}

/// `U diag(λ) U†` with eigenvalues uniform in `[0, 1]`.
pub fn effect(rng: &mut QmiRng, dim: usize) -> Effect {
    let u = unitary(rng, dim);
    let d: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    effect_with_spectrum(&u, &d)
}

/// Random projection of random rank (possibly 0 or full).
pub fn projection(rng: &mut QmiRng, dim: usize) -> Effect {
    let u = unitary(rng, dim);
    let d: Vec<f64> = (0..dim).map(|_| f64::from(rng.random::<bool>() as u8)).collect();
    effect_with_spectrum(&u, &d)
}

pub fn effect_with_spectrum(u: &Matrix, spectrum: &[f64]) -> Effect {
    Effect::new(u.sandwich(&Matrix::diag(spectrum)).hermitian_part()).expect("spectrum lies in [0, 1]")
}

/// `n` effects sharing one random eigenbasis.
pub fn commuting_effects(rng: &mut QmiRng, dim: usize, n: usize) -> Vec<Effect> {
    let u = unitary(rng, dim);
    (0..n)
        .map(|_| {
            let d: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            effect_with_spectrum(&u, &d)
        })
        .collect()
}

/// `(a, b)` with `a + b ≤ I`: `b = a′∘e` for a random effect `e`.
pub fn perpendicular_pair(rng: &mut QmiRng, dim: usize) -> (Effect, Effect) {
    let a = effect(rng, dim);
    let e = effect(rng, dim);
    let b = a.complement().seq_product(&e);
    (a, b)
}

/// `(a, b)` with `a ≤ b`: `a = b∘e` for a random effect `e`.
pub fn ordered_pair(rng: &mut QmiRng, dim: usize) -> (Effect, Effect) {
    let b = effect(rng, dim);
    let e = effect(rng, dim);
    (b.seq_product(&e), b)
}

fn inverse_sqrt(m: &Matrix) -> Matrix {
    m.hermitian_part()
        .eigh(Tolerance::DEFAULT)
        .expect("Hermitian input")
        .map(|l| 1.0 / l.sqrt())
}

/// Observable `x ↦ S^{-1/2} G_x S^{-1/2}` with `G_x` random positive and `S = Σ G_x`.
pub fn observable(rng: &mut QmiRng, dim: usize, outcomes: usize) -> Observable {
    let parts: Vec<Matrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(rng, dim);
            &g * &g.adjoint()
        })
        .collect();
    let mut total = Matrix::zeros(dim);
    for p in &parts {
        total += p;
    }
    let s = inverse_sqrt(&total);
    let effects = parts
        .iter()
        .map(|p| Effect::new(s.sandwich(p).hermitian_part()).expect("normalized part is an effect"))
        .collect();
    Observable::from_effects(effects).expect("normalized parts sum to the identity")
}

/// Observable whose effects are projections onto a random orthonormal basis, grouped.
pub fn sharp_observable(rng: &mut QmiRng, dim: usize, outcomes: usize) -> Observable {
    let u = unitary(rng, dim);
    let outcomes = outcomes.clamp(1, dim);
    let effects = (0..outcomes)
        .map(|x| {
            let d: Vec<f64> = (0..dim).map(|k| if k % outcomes == x { 1.0 } else { 0.0 }).collect();
            effect_with_spectrum(&u, &d)
        })
        .collect();
    Observable::from_effects(effects).expect("projections partition the identity")
}

/// Instrument with `ops` random Kraus operators per outcome, normalized by `S^{-1/2}`.
pub fn kraus_instrument(rng: &mut QmiRng, dim: usize, outcomes: usize, ops: usize) -> Instrument {
    let raw: Vec<Vec<Matrix>> = (0..outcomes)
        .map(|_| (0..ops).map(|_| ginibre(rng, dim)).collect())
        .collect();
    let mut total = Matrix::zeros(dim);
    for k in raw.iter().flatten() {
        total += &(&k.adjoint() * k);
    }
    let s = inverse_sqrt(&total);
    let kraus = raw
        .into_iter()
        .map(|ks| ks.into_iter().map(|k| &k * &s).collect())
        .collect();
    Instrument::from_kraus(OutcomeSpace::indexed(outcomes), kraus).expect("normalized Kraus family")
}

/// Random instrument of the given family with 2 or 3 outcomes.
pub fn instrument(rng: &mut QmiRng, dim: usize, family: Family) -> Instrument {
    let outcomes = rng.random_range(2..=3);
    match family {
        Family::Luders => Instrument::luders(&observable(rng, dim, outcomes)),
        Family::Holevo => {
            let alpha = state(rng, dim);
            Instrument::holevo(&alpha, &observable(rng, dim, outcomes)).expect("matching dimensions")
        }
        Family::FiniteHolevo => {
            let a = observable(rng, dim, outcomes);
            let alphas: BTreeMap<String, State> =
                a.labels().iter().map(|l| (l.clone(), state(rng, dim))).collect();
            Instrument::finite_holevo(&alphas, &a).expect("labels match")
        }
        Family::ConstantState => {
            let source = kraus_instrument(rng, dim, outcomes, 2);
            Instrument::constant_state(&source, &state(rng, dim)).expect("matching dimensions")
        }
        Family::Kraus => kraus_instrument(rng, dim, outcomes, 2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(1);
        for d in 1..=4 {
            let u = unitary(&mut r, d);
            assert!((&u * &u.adjoint()).max_abs_diff(&Matrix::identity(d)) < 1e-12);
        }
    }

    #[test]
    fn generators_are_reproducible() {
        let a = effect(&mut trial_rng(7, 3), 3);
        let b = effect(&mut trial_rng(7, 3), 3);
        assert_eq!(a, b);
        assert_ne!(a, effect(&mut trial_rng(7, 4), 3));
    }

    #[test]
    fn pairs_satisfy_their_relations() {
        let mut r = rng(5);
        let tol = Tolerance::DEFAULT;
        for _ in 0..20 {
            let (a, b) = perpendicular_pair(&mut r, 3);
            assert!(a.is_perp(&b, tol).unwrap());
            let (a, b) = ordered_pair(&mut r, 3);
            assert!(a.leq(&b, tol).unwrap());
        }
        let cs = commuting_effects(&mut r, 3, 3);
        assert!(cs[0].commutes_with(&cs[1]) && cs[1].commutes_with(&cs[2]));
    }

    #[test]
    fn random_instruments_are_channels() {
        let mut r = rng(11);
        for d in 2..=4 {
            for f in Family::ALL {
                let i = instrument(&mut r, d, f);
                assert!(i.is_instrument(Tolerance::DEFAULT), "{f:?} d={d}");
            }
        }
        assert!(sharp_observable(&mut r, 3, 2).is_sharp(Tolerance::DEFAULT));
    }
}
