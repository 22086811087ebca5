//! Effects `0 ≤ a ≤ I`, states and partial states, the partial sum `⊕`, and
//! the standard sequential product `a∘b = a^{1/2} b a^{1/2}`.
//!
//! All three types validate at construction and store the Hermitian part of
//! the input, so every later computation may assume validity.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Tolerance};

/// Threshold for "these operators commute" checks; products amplify roundoff.
pub const COMMUTE_TOL: f64 = 1e-8;

/// An operator `a` with `0 ≤ a ≤ I`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Effect(Matrix);

/// Positive semidefinite operator with trace at most one.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PartialState(Matrix);

/// Density operator: positive semidefinite with unit trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct State(Matrix);

/// Square root of a matrix already known to be Hermitian and PSD up to roundoff.
pub(crate) fn clamped_sqrt(m: &Matrix) -> Matrix {
    let eig = m
        .hermitian_part()
        .eigh(Tolerance::DEFAULT)
        .expect("Jacobi converges on Hermitian input");
    eig.sqrt().hermitian_part()
}

/// `s X s`, the sandwich by a Hermitian square root.
pub(crate) fn sqrt_sandwich(sqrt: &Matrix, x: &Matrix) -> Matrix {
    (&(sqrt * x) * sqrt).hermitian_part()
}

fn spectrum(m: &Matrix, tol: Tolerance) -> Result<(f64, f64)> {
    let eig = m.eigh(tol)?;
    Ok((eig.min(), eig.max()))
}

impl Effect {
    /// Validates with the default tolerance.
    pub fn new(m: Matrix) -> Result<Self> {
        Effect::with_tol(m, Tolerance::DEFAULT)
    }

    pub fn with_tol(m: Matrix, tol: Tolerance) -> Result<Self> {
        let (min, max) = spectrum(&m, tol)?;
        if min < -tol.eps() || max > 1.0 + tol.eps() {
            return Err(Error::NotEffect {
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        Ok(Effect(m.hermitian_part()))
    }

    /// For results that are effects by construction (sums, sandwiches).
    pub(crate) fn from_trusted(m: Matrix) -> Self {
        Effect(m.hermitian_part())
    }

    pub fn zero(dim: usize) -> Self {
        Effect(Matrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Effect(Matrix::identity(dim))
    }

    /// `s·I` for `s ∈ [0, 1]`.
    pub fn scalar(dim: usize, s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::ScaleOutOfRange(s));
        }
        Ok(Effect(Matrix::identity(dim).scale(s)))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `a' = I − a`.
    pub fn complement(&self) -> Effect {
        Effect(&Matrix::identity(self.dim()) - &self.0)
    }

    /// `λa` for `λ ∈ [0, 1]`.
    pub fn scale(&self, lambda: f64) -> Result<Effect> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::ScaleOutOfRange(lambda));
        }
        Ok(Effect(self.0.scale(lambda)))
    }

    /// `a ⊥ b` iff `a + b ≤ I`.
    pub fn is_perp(&self, other: &Effect, tol: Tolerance) -> Result<bool> {
        self.0.check_dim(&other.0)?;
        let (_, max) = spectrum(&(&self.0 + &other.0), tol)?;
        Ok(max <= 1.0 + tol.eps())
    }

    /// `a ⊕ b = a + b`, defined when `a ⊥ b`.
    pub fn oplus(&self, other: &Effect, tol: Tolerance) -> Result<Effect> {
        self.0.check_dim(&other.0)?;
        let sum = &self.0 + &other.0;
        let (_, max) = spectrum(&sum, tol)?;
        if max > 1.0 + tol.eps() {
            return Err(Error::NotPerpendicular {
                max_eigenvalue: max,
            });
        }
        Ok(Effect(sum))
    }

    /// `a^{1/2}`.
    pub fn sqrt(&self) -> Matrix {
        clamped_sqrt(&self.0)
    }

    /// Sequential product `a∘b = a^{1/2} b a^{1/2}`: measure `a`, then `b`.
    ///
    /// Panics on dimension mismatch.
    pub fn seq_product(&self, b: &Effect) -> Effect {
        Effect(sqrt_sandwich(&self.sqrt(), &b.0))
    }

    /// `a∘X = a^{1/2} X a^{1/2}` for an arbitrary operator `X`.
    pub fn seq_apply(&self, x: &Matrix) -> Matrix {
        sqrt_sandwich(&self.sqrt(), x)
    }

    /// `a ≤ b`: all eigenvalues of `b − a` are at least `−eps`.
    pub fn leq(&self, other: &Effect, tol: Tolerance) -> Result<bool> {
        self.0.check_dim(&other.0)?;
        let (min, _) = spectrum(&(&other.0 - &self.0), tol)?;
        Ok(min >= -tol.eps())
    }

    /// `‖a² − a‖_max ≤ eps`.
    pub fn is_projection(&self, tol: Tolerance) -> bool {
        (&self.0 * &self.0).max_abs_diff(&self.0) <= tol.eps()
    }

    pub fn commutes_with(&self, other: &Effect) -> bool {
        self.0.commutator_norm(&other.0) <= COMMUTE_TOL
    }

    /// `tr(a·X)`, real part.
    pub fn trace_with(&self, x: &Matrix) -> f64 {
        self.0.trace_product(x).re
    }
}

fn psd_trace(m: &Matrix, tol: Tolerance) -> Result<f64> {
    let (min, _) = spectrum(m, tol)?;
    if min < -tol.eps() {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(m.trace().re)
}

impl PartialState {
    pub fn new(m: Matrix) -> Result<Self> {
        PartialState::with_tol(m, Tolerance::DEFAULT)
    }

    pub fn with_tol(m: Matrix, tol: Tolerance) -> Result<Self> {
        let trace = psd_trace(&m, tol)?;
        if trace > 1.0 + tol.eps() {
            return Err(Error::TraceOutOfRange {
                kind: "partial state",
                trace,
            });
        }
        Ok(PartialState(m.hermitian_part()))
    }

    pub(crate) fn from_trusted(m: Matrix) -> Self {
        PartialState(m.hermitian_part())
    }

    pub fn zero(dim: usize) -> Self {
        PartialState(Matrix::zeros(dim))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `p / tr(p)`; fails when `tr(p) ≤ eps`.
    pub fn normalize(&self, tol: Tolerance) -> Result<State> {
        let trace = self.trace();
        if trace <= tol.eps() {
            return Err(Error::ZeroTrace { trace });
        }
        Ok(State(self.0.scale(1.0 / trace)))
    }
}

impl State {
    pub fn new(m: Matrix) -> Result<Self> {
        State::with_tol(m, Tolerance::DEFAULT)
    }

    pub fn with_tol(m: Matrix, tol: Tolerance) -> Result<Self> {
        let trace = psd_trace(&m, tol)?;
        if (trace - 1.0).abs() > tol.eps() {
            return Err(Error::TraceOutOfRange {
                kind: "state",
                trace,
            });
        }
        Ok(State(m.hermitian_part()))
    }

    /// `|ψ⟩⟨ψ|` for a vector normalized here.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroTrace { trace: norm });
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(State(Matrix::projector(&v)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        State(Matrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_partial(&self) -> PartialState {
        PartialState(self.0.clone())
    }

    /// Probability `tr(ρa)` of the effect `a`.
    pub fn prob(&self, a: &Effect) -> f64 {
        let t = self.0.trace_product(a.matrix());
        debug_assert!(t.im.abs() <= 1e-9, "imaginary trace {}", t.im);
        t.re
    }
}

impl From<State> for PartialState {
    fn from(s: State) -> Self {
        PartialState(s.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: Tolerance = Tolerance::DEFAULT;

    fn p0() -> Effect {
        Effect::new(Matrix::diag(&[1.0, 0.0])).unwrap()
    }

    fn plus_state() -> State {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        State::pure(&[C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap()
    }

    fn plus_effect() -> Effect {
        Effect::new(plus_state().into_matrix()).unwrap()
    }

    #[test]
    fn validation_rejects_out_of_range() {
        assert!(matches!(Effect::new(Matrix::diag(&[1.5, 0.0])), Err(Error::NotEffect { .. })));
        assert!(matches!(Effect::new(Matrix::diag(&[-0.1, 0.0])), Err(Error::NotEffect { .. })));
        assert!(Effect::new(Matrix::real(&[0.0, 1.0, 0.0, 0.0])).is_err());
        assert!(matches!(
            PartialState::new(Matrix::diag(&[0.8, 0.4])),
            Err(Error::TraceOutOfRange { .. })
        ));
        assert!(matches!(State::new(Matrix::diag(&[0.5, 0.4])), Err(Error::TraceOutOfRange { .. })));
        assert!(matches!(State::new(Matrix::diag(&[1.2, -0.2])), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn complement_cases() {
        assert_eq!(Effect::zero(2).complement(), Effect::identity(2));
        assert_eq!(Effect::identity(2).complement(), Effect::zero(2));
        let a = Effect::new(Matrix::diag(&[0.3, 0.7])).unwrap();
        assert!(a.complement().matrix().max_abs_diff(&Matrix::diag(&[0.7, 0.3])) < 1e-15);
        assert!(a.complement().complement().matrix().max_abs_diff(a.matrix()) < 1e-15);
    }

    #[test]
    fn perpendicularity() {
        let a = plus_effect();
        assert!(a.is_perp(&a.complement(), TOL).unwrap());
        assert!(!Effect::identity(2).is_perp(&Effect::identity(2), TOL).unwrap());
        let six = Effect::scalar(2, 0.6).unwrap();
        assert!(!six.is_perp(&six, TOL).unwrap());
        assert!(matches!(six.oplus(&six, TOL), Err(Error::NotPerpendicular { .. })));
        assert!(a.is_perp(&Effect::zero(3), TOL).is_err());
    }

    #[test]
    fn oplus_cases() {
        let a = plus_effect();
        let s = a.oplus(&a.complement(), TOL).unwrap();
        assert!(s.matrix().max_abs_diff(&Matrix::identity(2)) < 1e-15);
        assert_eq!(a.oplus(&Effect::zero(2), TOL).unwrap(), a);
        let x = Effect::new(Matrix::diag(&[0.2, 0.5])).unwrap();
        let y = Effect::new(Matrix::diag(&[0.3, 0.1])).unwrap();
        assert!(x.oplus(&y, TOL).unwrap().matrix().max_abs_diff(&Matrix::diag(&[0.5, 0.6])) < 1e-15);
    }

    #[test]
    fn seq_product_cases() {
        let a = plus_effect();
        assert!(Effect::identity(2).seq_product(&a).matrix().max_abs_diff(a.matrix()) < 1e-15);
        assert!(a.seq_product(&Effect::identity(2)).matrix().max_abs_diff(a.matrix()) < 1e-14);
        // P0 |+⟩⟨+| P0 = ½ P0
        let got = p0().seq_product(&a);
        assert!(got.matrix().max_abs_diff(&Matrix::diag(&[0.5, 0.0])) < 1e-15);
        assert_eq!(a.seq_product(&Effect::zero(2)).matrix().max_abs(), 0.0);
    }

    #[test]
    fn normalize_cases() {
        let rho = plus_state();
        let back = rho.as_partial().normalize(TOL).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let half = PartialState::new(Matrix::diag(&[0.5, 0.0])).unwrap();
        assert_eq!(half.normalize(TOL).unwrap().matrix(), &Matrix::diag(&[1.0, 0.0]));
        assert!(matches!(PartialState::zero(2).normalize(TOL), Err(Error::ZeroTrace { .. })));
    }

    #[test]
    fn probabilities() {
        let rho = plus_state();
        assert!((rho.prob(&Effect::identity(2)) - 1.0).abs() < 1e-15);
        assert_eq!(rho.prob(&Effect::zero(2)), 0.0);
        assert!((rho.prob(&p0()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scalar_and_scale_ranges() {
        assert!(Effect::scalar(2, 1.1).is_err());
        assert!(plus_effect().scale(-0.1).is_err());
        assert!(plus_effect().scale(0.5).is_ok());
    }

    #[test]
    fn projection_detection() {
        assert!(p0().is_projection(TOL));
        assert!(!Effect::scalar(2, 0.5).unwrap().is_projection(TOL));
    }
}
