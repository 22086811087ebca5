//! Dense complex square matrices sized for small Hilbert spaces.
//!
//! Everything downstream (effects, states, Kraus operators) is a [`Matrix`].
//! Entries are stored row-major as `Complex64`, i.e. `(re, im)` pairs of
//! `f64`. The Hermitian eigensolver is a cyclic complex Jacobi iteration,
//! which is accurate to a few ulps for the dimensions used here (d ≤ 16).

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm (relative to `max(1, ‖A‖_F)`) at which Jacobi stops.
pub const JACOBI_OFF_TOL: f64 = 1e-13;
/// Maximum number of cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative size below which an eigenvalue is treated as zero by square roots.
pub const SQRT_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Absolute tolerance for operator comparisons and validation.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Tolerance(f64);

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance(1e-9);

    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps.is_finite() {
            Ok(Tolerance(eps))
        } else {
            Err(Error::InvalidTolerance(eps))
        }
    }

    #[inline]
    pub fn eps(self) -> f64 {
        self.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::DEFAULT
    }
}

impl TryFrom<f64> for Tolerance {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Tolerance::new(v)
    }
}

impl From<Tolerance> for f64 {
    fn from(t: Tolerance) -> f64 {
        t.0
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

/// Eigendecomposition `A = V diag(values) V†` of a Hermitian matrix.
///
/// `values` are ascending; column `k` of `vectors` is the eigenvector for
/// `values[k]`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Eigh {
    pub fn reconstruct(&self) -> Matrix {
        self.map(|x| x)
    }

    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.vectors.dim;
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        Matrix::from_fn(n, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, w) in weights.iter().enumerate() {
                if *w != 0.0 {
                    acc += self.vectors[(i, k)] * self.vectors[(j, k)].conj() * *w;
                }
            }
            acc
        })
    }

    /// Square root of the spectrum; eigenvalues within roundoff of zero map to zero.
    pub fn sqrt(&self) -> Matrix {
        let radius = self.values.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        let floor = SQRT_FLOOR * radius;
        self.map(|l| if l <= floor { 0.0 } else { l.sqrt() })
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Matrix::from_fn(dim, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Matrix { dim, data }
    }

    /// Builds a matrix from rows, rejecting ragged, empty, or non-finite input.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    cols: row.len(),
                });
            }
            for (j, z) in row.into_iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                data.push(z);
            }
        }
        Ok(Matrix { dim, data })
    }

    /// Real matrix from a row-major slice of length `dim²`.
    ///
    /// Panics if the length is not a perfect square; intended for literals.
    pub fn real(entries: &[f64]) -> Self {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        assert_eq!(dim * dim, entries.len(), "entry count is not a square");
        Matrix {
            dim,
            data: entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Matrix::from_fn(n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `|v⟩⟨w|`.
    pub fn ket_bra(v: &[C64], w: &[C64]) -> Self {
        assert_eq!(v.len(), w.len());
        Matrix::from_fn(v.len(), |i, j| v[i] * w[j].conj())
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &[C64]) -> Self {
        Matrix::ket_bra(v, v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Checked matrix product.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        self.check_dim(rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    fn mul_unchecked(&self, rhs: &Matrix) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.data[i * n + k];
                if aik.re == 0.0 && aik.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += aik * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn check_dim(&self, other: &Matrix) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: C64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `M X M†`.
    pub fn sandwich(&self, x: &Matrix) -> Matrix {
        &(self * x) * &self.adjoint()
    }

    /// `tr(self · rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &Matrix) -> C64 {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * rhs.data[k * n + i];
            }
        }
        acc
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self − other`. Panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// True iff every entry of `self − other` has modulus at most `tol`.
    pub fn approx_eq(&self, other: &Matrix, tol: Tolerance) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.max_abs_diff(other) <= tol.eps())
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: Tolerance) -> bool {
        self.hermitian_deviation() <= tol.eps()
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Largest entry modulus of `AB − BA`.
    pub fn commutator_norm(&self, other: &Matrix) -> f64 {
        let ab = self * other;
        let ba = other * self;
        ab.max_abs_diff(&ba)
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
    pub fn eigh(&self, tol: Tolerance) -> Result<Eigh> {
        let deviation = self.hermitian_deviation();
        if deviation > tol.eps() {
            return Err(Error::NotHermitian { deviation });
        }
        jacobi(self.hermitian_part())
    }

    /// Ascending eigenvalues of a Hermitian matrix.
    pub fn eigenvalues(&self, tol: Tolerance) -> Result<Vec<f64>> {
        Ok(self.eigh(tol)?.values)
    }

    /// Unique positive semidefinite square root.
    ///
    /// Eigenvalues in `[-eps, 0)` are clamped to zero; anything below is an error.
    pub fn psd_sqrt(&self, tol: Tolerance) -> Result<Matrix> {
        let eig = self.eigh(tol)?;
        let min = eig.min();
        if min < -tol.eps() {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(eig.sqrt().hermitian_part())
    }

    /// Coordinates of the Hermitian part in an orthonormal real basis.
    ///
    /// Diagonal entries first, then `√2·Re x_ij` and `√2·Im x_ij` for `i < j`,
    /// so that `Re tr(X Y)` is the dot product of coordinates.
    pub fn hermitian_coords(&self) -> Vec<f64> {
        let n = self.dim;
        let h = self.hermitian_part();
        let mut v: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
        for i in 0..n {
            for j in i + 1..n {
                v.push(std::f64::consts::SQRT_2 * h[(i, j)].re);
                v.push(std::f64::consts::SQRT_2 * h[(i, j)].im);
            }
        }
        v
    }

    /// Inverse of [`Matrix::hermitian_coords`]. Panics unless `coords.len() == dim²`.
    pub fn from_hermitian_coords(dim: usize, coords: &[f64]) -> Matrix {
        assert_eq!(coords.len(), dim * dim, "expected dim² coordinates");
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(coords[i], 0.0);
        }
        let mut k = dim;
        for i in 0..dim {
            for j in i + 1..dim {
                let z = C64::new(coords[k], coords[k + 1]) / std::f64::consts::SQRT_2;
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
                k += 2;
            }
        }
        m
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.dim;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(mut a: Matrix) -> Result<Eigh> {
    let n = a.dim;
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_OFF_TOL * a.frobenius_norm().max(1.0);
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off < threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = Matrix::from_fn(n, |i, k| v[(i, order[k])]);
    Ok(Eigh { values, vectors })
}

/// Annihilates `a[(p, q)]` with the unitary `G = diag(1, e^{-iφ}) R(θ)` acting
/// on coordinates `p, q`: `a ← G† a G`, `v ← v G`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = (apq / r).conj();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = 0.5 * (2.0 * r).atan2(app - aqq);
    let (s, c) = theta.sin_cos();
    let g00 = C64::new(c, 0.0);
    let g01 = C64::new(-s, 0.0);
    let g10 = phase * s;
    let g11 = phase * c;

    let n = a.dim;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g00 + akq * g10;
        a[(k, q)] = akp * g01 + akq * g11;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g00.conj() * apk + g10.conj() * aqk;
        a[(q, k)] = g01.conj() * apk + g11.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g00 + vkq * g10;
        v[(k, q)] = vkp * g01 + vkq * g11;
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim) {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Add<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;
    fn mul(self, s: f64) -> Matrix {
        self.scale(s)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl AddAssign<&Matrix> for Matrix {
    fn add_assign(&mut self, rhs: &Matrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// Serialized as nested rows of `[re, im]` pairs.
impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .data
            .chunks(self.dim)
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        Matrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn plus() -> Matrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Matrix::projector(&[c(h, 0.0), c(h, 0.0)])
    }

    #[test]
    fn identity_is_neutral() {
        let m = Matrix::from_rows(vec![vec![c(1.0, 2.0), c(0.5, -1.0)], vec![c(3.0, 0.0), c(-2.0, 0.25)]]).unwrap();
        assert_eq!(Matrix::identity(2).matmul(&m).unwrap(), m);
        assert_eq!(m.matmul(&Matrix::identity(2)).unwrap(), m);
    }

    #[test]
    fn orthogonal_projections_multiply_to_zero() {
        let p = Matrix::diag(&[1.0, 0.0]);
        let q = Matrix::diag(&[0.0, 1.0]);
        assert_eq!(p.matmul(&q).unwrap(), Matrix::zeros(2));
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let err = Matrix::identity(2).matmul(&Matrix::identity(3)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
        assert!(Matrix::identity(2).approx_eq(&Matrix::identity(3), Tolerance::DEFAULT).is_err());
    }

    #[test]
    fn adjoint_of_shift() {
        let shift = Matrix::real(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(shift.adjoint(), Matrix::real(&[0.0, 0.0, 1.0, 0.0]));
        let h = Matrix::from_rows(vec![vec![c(1.0, 0.0), c(0.0, -2.0)], vec![c(0.0, 2.0), c(3.0, 0.0)]]).unwrap();
        assert_eq!(h.adjoint(), h);
    }

    #[test]
    fn traces() {
        assert_eq!(Matrix::identity(2).trace(), c(2.0, 0.0));
        assert!((plus().trace() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_eigendecomposition_sorts_ascending() {
        let eig = Matrix::diag(&[3.0, 1.0]).eigh(Tolerance::DEFAULT).unwrap();
        assert_eq!(eig.values, vec![1.0, 3.0]);
        // columns are a permutation of the identity columns
        assert_eq!(eig.vectors, Matrix::real(&[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn projection_spectrum() {
        let eig = plus().eigh(Tolerance::DEFAULT).unwrap();
        assert!(eig.values[0].abs() < 1e-15);
        assert!((eig.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = Matrix::real(&[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(m.eigh(Tolerance::DEFAULT), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_cases() {
        let tol = Tolerance::DEFAULT;
        assert_eq!(Matrix::identity(3).psd_sqrt(tol).unwrap(), Matrix::identity(3));
        let s = Matrix::diag(&[4.0, 1.0]).psd_sqrt(tol).unwrap();
        assert!(s.max_abs_diff(&Matrix::diag(&[2.0, 1.0])) < 1e-15);
        let p = plus();
        assert!(p.psd_sqrt(tol).unwrap().max_abs_diff(&p) < 1e-15);
    }

    #[test]
    fn sqrt_clamps_roundoff_but_rejects_negative() {
        let tol = Tolerance::DEFAULT;
        let tiny = Matrix::diag(&[1.0, -5e-10]);
        assert_eq!(tiny.psd_sqrt(tol).unwrap(), Matrix::diag(&[1.0, 0.0]));
        let neg = Matrix::diag(&[1.0, -1e-6]);
        assert!(matches!(neg.psd_sqrt(tol), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn approx_eq_thresholds() {
        let tol = Tolerance::DEFAULT;
        let eps = tol.eps();
        let m = plus();
        assert!(m.approx_eq(&m, tol).unwrap());
        assert!(!Matrix::zeros(2).approx_eq(&Matrix::identity(2).scale(2.0 * eps), tol).unwrap());
        let mut bumped = m.clone();
        bumped[(0, 1)] += c(eps / 2.0, 0.0);
        assert!(m.approx_eq(&bumped, tol).unwrap());
    }

    #[test]
    fn tolerance_must_be_positive() {
        assert!(Tolerance::new(0.0).is_err());
        assert!(Tolerance::new(-1.0).is_err());
        assert!(Tolerance::new(f64::NAN).is_err());
        assert_eq!(Tolerance::default().eps(), 1e-9);
    }

    #[test]
    fn from_rows_validates() {
        assert_eq!(Matrix::from_rows(vec![]).unwrap_err(), Error::EmptyMatrix);
        assert!(matches!(
            Matrix::from_rows(vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0)]]),
            Err(Error::NotSquare { .. })
        ));
        assert_eq!(
            Matrix::from_rows(vec![vec![c(f64::NAN, 0.0)]]).unwrap_err(),
            Error::NonFinite { row: 0, col: 0 }
        );
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let m = Matrix::from_rows(vec![vec![c(0.1, -0.3), c(1e-17, 2.5)], vec![c(-7.0, 0.0), c(0.333, 0.1)]]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[[0.1,-0.3],[1e-17,2.5]],[[-7.0,0.0],[0.333,0.1]]]");
        let back: Matrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn hermitian_coords_are_isometric() {
        let x = Matrix::from_rows(vec![
            vec![C64::new(0.4, 0.0), C64::new(0.1, -0.2)],
            vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.0)],
        ])
        .unwrap();
        let y = Matrix::from_rows(vec![
            vec![C64::new(1.0, 0.0), C64::new(-0.5, 0.7)],
            vec![C64::new(-0.5, -0.7), C64::new(2.0, 0.0)],
        ])
        .unwrap();
        let dot: f64 = x.hermitian_coords().iter().zip(y.hermitian_coords()).map(|(a, b)| a * b).sum();
        assert!((dot - x.trace_product(&y).re).abs() < 1e-14);
        let back = Matrix::from_hermitian_coords(2, &x.hermitian_coords());
        assert!(back.max_abs_diff(&x) < 1e-15);
    }
}
