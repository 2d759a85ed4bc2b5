//! Matrix aliases and the small set of Hermitian/symmetric helpers the rest of
//! the crate leans on.

use nalgebra::{Cholesky, Complex, DMatrix, DVector, Dyn, SymmetricEigen};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest entrywise deviation `max |A - A^H|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entrywise deviation `max |A - A^T|`.
pub fn symmetric_defect(m: &RMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `(A + A^T) / 2`.
pub fn symmetrize(m: &RMatrix) -> RMatrix {
    (m + m.transpose()) * 0.5
}

/// `(A + A^H) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(hermitize(m)).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigenvalues of a real symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &RMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Smallest eigenvalue of `a - b`; non-negative iff `a ⪰ b`.
pub fn lowner_margin(a: &RMatrix, b: &RMatrix) -> f64 {
    symmetric_eigenvalues(&(a - b)).first().copied().unwrap_or(0.0)
}

/// Spectral norm of a real symmetric matrix.
pub fn symmetric_norm(m: &RMatrix) -> f64 {
    symmetric_eigenvalues(m).iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn cholesky(m: &CMatrix) -> Option<Cholesky<C64, Dyn>> {
    Cholesky::new(m.clone())
}

/// `log det` of a Hermitian positive definite matrix from its Cholesky factor.
pub fn log_det(chol: &Cholesky<C64, Dyn>) -> f64 {
    chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Relative Frobenius distance `||a - b||_F / ||b||_F`.
pub fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

/// Outer product `x y^H`.
pub fn outer(x: &CVector, y: &CVector) -> CMatrix {
    x * y.adjoint()
}

/// Compensated (Kahan–Babuška) accumulator for real matrices.
///
/// Terms are folded in call order, so a fixed order gives bit-identical sums.
#[derive(Debug, Clone)]
pub struct CompensatedSum {
    sum: RMatrix,
    carry: RMatrix,
}

impl CompensatedSum {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { sum: RMatrix::zeros(rows, cols), carry: RMatrix::zeros(rows, cols) }
    }

    pub fn add(&mut self, term: &RMatrix) {
        for ((s, c), &x) in self.sum.iter_mut().zip(self.carry.iter_mut()).zip(term.iter()) {
            let t = *s + x;
            if s.abs() >= x.abs() {
                *c += (*s - t) + x;
            } else {
                *c += (x - t) + *s;
            }
            *s = t;
        }
    }

    pub fn finish(self) -> RMatrix {
        self.sum + self.carry
    }
}

pub fn zeros_c(rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_element(rows, cols, ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::zeros(1, 1);
        acc.add(&RMatrix::from_element(1, 1, 1.0));
        for _ in 0..1000 {
            acc.add(&RMatrix::from_element(1, 1, 1e-16));
        }
        let naive = (0..1000).fold(1.0, |s, _| s + 1e-16);
        assert_eq!(naive, 1.0);
        assert!((acc.finish()[(0, 0)] - (1.0 + 1e-13)).abs() < 1e-28);
    }

    #[test]
    fn trace_of_product_matches_dense() {
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 + 0.5, j as f64 - 1.0));
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new((i * j) as f64, 1.0 + i as f64));
        let dense = (&a * &b).trace();
        assert!((trace_of_product(&a, &b) - dense).norm() < 1e-12);
    }

    #[test]
    fn log_det_of_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(5.0, 0.0)]));
        let chol = cholesky(&m).unwrap();
        assert!((log_det(&chol) - 10f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn lowner_margin_detects_order() {
        let a = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0]));
        let b = RMatrix::identity(2, 2);
        assert!((lowner_margin(&a, &b) - 1.0).abs() < 1e-14);
        assert!(lowner_margin(&b, &a) < 0.0);
    }
}
