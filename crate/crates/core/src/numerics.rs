//! Small dense complex linear algebra.
//!
//! Only what the precoders need: Hermitian inner products, a right
//! pseudo-inverse for wide matrices, Gauss-Jordan inversion and power
//! iteration for the dominant left singular vector. Matrices here are at
//! most a few antennas by a few users, so everything is dense and
//! allocation-light.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Ratio of smallest to largest eigenvalue of `H Hᴴ` below which the
/// right inverse is refused.
pub const SINGULARITY_RATIO: f64 = 1e-12;

/// Power iteration stops once successive Rayleigh quotients differ by less
/// than this (relative to the quotient).
pub const RAYLEIGH_TOL: f64 = 1e-12;

/// Power iteration also requires the iterate itself to settle to this.
pub const VECTOR_TOL: f64 = 1e-14;

pub const MAX_POWER_ITERATIONS: usize = 10_000;

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must be at least 1x1");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from row slices. Every row must have the same length
    /// and every entry must be finite.
    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::Degenerate("matrix has no rows"));
        }
        let n_cols = rows[0].as_ref().len();
        if n_cols == 0 {
            return Err(Error::Degenerate("matrix has no columns"));
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::Dimension {
                    expected: n_cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Degenerate("matrix has non-finite entries"));
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    /// Builds a matrix whose k-th column is `columns[k]`.
    pub fn from_columns<C: AsRef<[Complex64]>>(columns: &[C]) -> Result<Self> {
        Ok(Self::from_rows(columns)?.transpose())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Adds `value` to every diagonal entry.
    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += value;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Dimension {
                expected: self.rows,
                actual: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::Singular { ratio: 0.0 });
        }

        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
                .unwrap();
            let pivot = a[(pivot_row, col)];
            if pivot.norm() <= f64::EPSILON * scale {
                return Err(Error::Singular {
                    ratio: pivot.norm() / scale,
                });
            }
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let pivot_inv = pivot.inv();
            for c in 0..n {
                a[(col, c)] *= pivot_inv;
                inv[(col, c)] *= pivot_inv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                for c in 0..n {
                    let ac = a[(col, c)];
                    let ic = inv[(col, c)];
                    a[(r, c)] -= factor * ac;
                    inv[(r, c)] -= factor * ic;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

/// `Σ conj(a_n)·b_n`.
pub fn hermitian_inner(a: &[Complex64], b: &[Complex64]) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Degenerate("empty vectors"));
    }
    Ok(inner(a, b))
}

/// Unchecked `aᴴb`; callers guarantee equal lengths.
#[inline]
pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `|aᴴb|²`.
#[inline]
pub(crate) fn gain(a: &[Complex64], b: &[Complex64]) -> f64 {
    inner(a, b).norm_sqr()
}

#[inline]
pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

#[inline]
pub fn norm(v: &[Complex64]) -> f64 {
    norm_sqr(v).sqrt()
}

/// Scales `v` to unit norm. Fails on the zero vector.
pub fn normalized(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Degenerate("cannot normalize a zero vector"));
    }
    Ok(v.iter().map(|z| z / n).collect())
}

/// Rotates `v` so that its first non-negligible entry is real and positive.
pub fn normalize_phase(v: &mut [Complex64]) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-12 * scale) {
        let rot = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Right inverse `Hᴴ(HHᴴ)⁻¹` of a full-row-rank matrix with
/// `rows <= cols`.
pub fn pseudo_inverse(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h.rows() > h.cols() {
        return Err(Error::Singular { ratio: 0.0 });
    }
    let h_adj = h.adjoint();
    let gram = h * &h_adj;
    let gram_inv = gram.inverse()?;

    // Eigenvalues of a Hermitian PD matrix are its singular values;
    // λ_min = 1 / λ_max(gram⁻¹).
    let largest = largest_eigenvalue(&gram);
    let smallest = 1.0 / largest_eigenvalue(&gram_inv);
    let ratio = smallest / largest;
    if !ratio.is_finite() || ratio < SINGULARITY_RATIO {
        return Err(Error::Singular { ratio });
    }
    Ok(&h_adj * &gram_inv)
}

/// `Hᴴ(HHᴴ + λI)⁻¹`, the regularized right inverse.
pub fn regularized_pseudo_inverse(h: &ComplexMatrix, lambda: f64) -> Result<ComplexMatrix> {
    let h_adj = h.adjoint();
    let mut gram = h * &h_adj;
    gram.add_diagonal(lambda);
    Ok(&h_adj * &gram.inverse()?)
}

/// Unit-norm `u` maximizing `‖uᴴH‖`, i.e. the dominant eigenvector of
/// `HHᴴ`, with its first non-negligible entry made real and positive.
///
/// Power iteration starts from the column of `HHᴴ` with the largest norm
/// (lowest index on ties), which keeps the result deterministic and picks
/// the lowest-index axis when the top eigenvalue is repeated.
pub fn dominant_left_singular_vector(h: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if h.is_zero() {
        return Err(Error::Degenerate("all-zero matrix"));
    }
    let gram = h * &h.adjoint();
    let (mut u, _) = power_iteration(&gram, true);
    normalize_phase(&mut u);
    Ok(u)
}

fn largest_eigenvalue(a: &ComplexMatrix) -> f64 {
    power_iteration(a, false).1
}

/// Power iteration on a Hermitian PSD matrix. Returns the iterate and its
/// Rayleigh quotient. With `settle_vector` the iterate itself must also
/// stop moving, which the eigenvector callers need and the
/// eigenvalue-only callers do not.
fn power_iteration(a: &ComplexMatrix, settle_vector: bool) -> (Vec<Complex64>, f64) {
    let n = a.rows();
    let mut best = 0;
    let mut best_norm = -1.0;
    for c in 0..n {
        let col_norm = norm_sqr(&a.column(c));
        if col_norm > best_norm {
            best_norm = col_norm;
            best = c;
        }
    }
    let start = a.column(best);
    let mut x = match normalized(&start) {
        Ok(x) => x,
        Err(_) => return (unit_axis(n, 0), 0.0),
    };
    normalize_phase(&mut x);
    let mut rayleigh = inner(&x, &a.mul_vec(&x)).re;

    for _ in 0..MAX_POWER_ITERATIONS {
        let y = a.mul_vec(&x);
        let mut next = match normalized(&y) {
            Ok(v) => v,
            // x lies in the null space; the quotient is already 0.
            Err(_) => break,
        };
        normalize_phase(&mut next);
        let next_rayleigh = inner(&next, &a.mul_vec(&next)).re;
        let moved = x.iter().zip(&next).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        let rq_settled = (next_rayleigh - rayleigh).abs() <= RAYLEIGH_TOL * next_rayleigh.abs().max(f64::MIN_POSITIVE);
        x = next;
        rayleigh = next_rayleigh;
        if rq_settled && (!settle_vector || moved <= VECTOR_TOL) {
            break;
        }
    }
    (x, rayleigh)
}

pub(crate) fn unit_axis(n: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_diag(d: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&d.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn inner_product_examples() {
        assert_eq!(
            hermitian_inner(&[c(1., 0.), c(0., 0.)], &[c(0., 0.), c(1., 0.)]).unwrap(),
            c(0., 0.)
        );
        assert_eq!(
            hermitian_inner(&[c(1., 0.), c(0., 0.)], &[c(1., 0.), c(0., 0.)]).unwrap(),
            c(1., 0.)
        );
        assert_eq!(
            hermitian_inner(&[c(1., 0.), c(0., 1.)], &[c(1., 0.), c(1., 0.)]).unwrap(),
            c(1., -1.)
        );
    }

    #[test]
    fn inner_product_length_mismatch() {
        assert!(matches!(
            hermitian_inner(&[c(1., 0.)], &[c(1., 0.), c(0., 0.)]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn pseudo_inverse_of_identity_and_diagonal() {
        let eye = ComplexMatrix::identity(2);
        assert!(pseudo_inverse(&eye).unwrap().max_abs_diff(&eye) < 1e-15);

        let g = pseudo_inverse(&real_diag(&[1.0, 2.0])).unwrap();
        assert!(g.max_abs_diff(&real_diag(&[1.0, 0.5])) < 1e-15);
    }

    #[test]
    fn pseudo_inverse_rejects_repeated_rows() {
        let h = ComplexMatrix::from_rows(&[[c(1., 2.), c(3., -1.)], [c(1., 2.), c(3., -1.)]]).unwrap();
        assert!(matches!(pseudo_inverse(&h), Err(Error::Singular { .. })));
    }

    #[test]
    fn pseudo_inverse_rejects_tall_matrix() {
        let h = ComplexMatrix::from_rows(&[[c(1., 0.)], [c(0., 1.)]]).unwrap();
        assert!(pseudo_inverse(&h).is_err());
    }

    #[test]
    fn pseudo_inverse_of_wide_matrix() {
        let h = ComplexMatrix::from_rows(&[
            [c(1., 0.5), c(0.2, -1.), c(0.3, 0.3)],
            [c(-0.4, 0.1), c(1., 1.), c(0.0, -2.)],
        ])
        .unwrap();
        let g = pseudo_inverse(&h).unwrap();
        assert_eq!((g.rows(), g.cols()), (3, 2));
        assert!((&h * &g).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn inverse_needs_pivoting() {
        let m = ComplexMatrix::from_rows(&[[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]]).unwrap();
        let inv = m.inverse().unwrap();
        assert!((&m * &inv).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn dominant_vector_axis_cases() {
        let u = dominant_left_singular_vector(&real_diag(&[2.0, 1.0])).unwrap();
        assert!((u[0] - c(1., 0.)).norm() < 1e-12 && u[1].norm() < 1e-12);

        // repeated singular value: lowest-index axis
        let u = dominant_left_singular_vector(&real_diag(&[1.0, 1.0])).unwrap();
        assert!((u[0] - c(1., 0.)).norm() < 1e-12 && u[1].norm() < 1e-12);

        let u = dominant_left_singular_vector(&real_diag(&[1.0, 3.0])).unwrap();
        assert!(u[0].norm() < 1e-12 && (u[1] - c(1., 0.)).norm() < 1e-12);
    }

    #[test]
    fn dominant_vector_when_all_ones_is_orthogonal() {
        // Dominant direction [1, -1]/√2 is orthogonal to the all-ones vector.
        let h = ComplexMatrix::from_rows(&[[c(1., 0.), c(0.1, 0.)], [c(-1., 0.), c(0.1, 0.)]]).unwrap();
        let u = dominant_left_singular_vector(&h).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u[0] - c(s, 0.)).norm() < 1e-12);
        assert!((u[1] - c(-s, 0.)).norm() < 1e-12);
    }

    #[test]
    fn dominant_vector_rejects_zero_matrix() {
        assert!(matches!(
            dominant_left_singular_vector(&ComplexMatrix::zeros(2, 2)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn phase_normalization_makes_first_entry_positive() {
        let mut v = vec![c(0., 0.), c(0., -2.), c(1., 1.)];
        normalize_phase(&mut v);
        assert_eq!(v[0], c(0., 0.));
        assert!((v[1] - c(2., 0.)).norm() < 1e-15);
    }
}
