use nalgebra::{Cholesky, ComplexField, DMatrix, SymmetricEigen};

use super::{CMatrix, CVector, RMatrix, C64};
use crate::error::{dim_err, Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;

/// Largest entry modulus.
pub fn max_abs<T: ComplexField>(m: &DMatrix<T>) -> f64
where
    T::RealField: Into<f64>,
{
    m.iter()
        .map(|x| x.clone().modulus().into())
        .fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = max_abs(m).max(1.0);
    let n = m.nrows();
    for j in 0..n {
        for i in 0..=j {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Eigenpairs of a real symmetric matrix, eigenvalues sorted descending.
///
/// Values are reported raw: tiny negative eigenvalues from rounding are kept,
/// consumers that need a spectrum of singular values call [`Self::clamped`].
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Column `i` pairs with `values[i]`.
    pub vectors: RMatrix,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn clamped(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v.max(0.0)).collect()
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> RMatrix {
        let n = self.len();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        let out = &scaled * self.vectors.transpose();
        debug_assert_eq!(out.nrows(), n);
        out
    }

    /// `max |V^T V - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let gram = self.vectors.transpose() * &self.vectors;
        max_abs(&(gram - RMatrix::identity(self.len(), self.len())))
    }
}

/// Dense symmetric eigendecomposition (Householder tridiagonalization followed
/// by implicit symmetric QR).
pub fn sym_eig(m: &RMatrix) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(dim_err(format!(
            "sym_eig needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let scale = max_abs(m).max(1.0);
    for j in 0..n {
        for i in 0..j {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > SYMMETRY_TOL * scale {
                return Err(Error::Contract(format!(
                    "matrix not symmetric: |m[{i},{j}] - m[{j},{i}]| = {gap:e}"
                )));
            }
        }
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Vec::new(),
            vectors: RMatrix::zeros(0, 0),
        });
    }

    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the output reproducible when eigenvalues tie.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = RMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Solves `(V + lambda I) x = b` for Hermitian PSD `V` by a fresh Cholesky
/// factorization. This is the reference path for [`InverseTracker`].
pub fn regularized_solve(v: &CMatrix, lambda: f64, b: &CVector) -> Result<CVector> {
    if !v.is_square() || v.nrows() != b.len() {
        return Err(dim_err(format!(
            "regularized_solve: V is {}x{}, b has length {}",
            v.nrows(),
            v.ncols(),
            b.len()
        )));
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if !is_hermitian(v, HERMITIAN_TOL) {
        return Err(Error::Contract("V is not Hermitian".into()));
    }
    let k = v.nrows();
    let mut reg = v.clone();
    for i in 0..k {
        reg[(i, i)] += C64::new(lambda, 0.0);
    }
    // Symmetrize away rounding so the factorization sees an exactly Hermitian matrix.
    let reg = (&reg + reg.adjoint()).scale(0.5);
    let chol = Cholesky::new(reg)
        .ok_or_else(|| Error::Numerical("V + lambda I is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Running inverse `(lambda I + sum_s h_s h_s^dagger)^{-1}`, maintained with
/// Sherman-Morrison rank-one updates in `O(k^2)` per step.
#[derive(Clone, Debug)]
pub struct InverseTracker {
    inv: CMatrix,
}

impl InverseTracker {
    pub fn new(k: usize, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            inv: CMatrix::identity(k, k).scale(1.0 / lambda),
        })
    }

    pub fn dim(&self) -> usize {
        self.inv.nrows()
    }

    pub fn rank_one_update(&mut self, h: &CVector) -> Result<()> {
        if h.len() != self.dim() {
            return Err(dim_err(format!(
                "rank-one update of size {} on a {}-dim tracker",
                h.len(),
                self.dim()
            )));
        }
        let ph = &self.inv * h;
        let denom = 1.0 + h.dotc(&ph).re;
        if !denom.is_finite() || denom <= 0.0 {
            return Err(Error::Numerical(format!("Sherman-Morrison denominator {denom}")));
        }
        // P <- P - (P h)(P h)^dagger / (1 + h^dagger P h); P stays Hermitian.
        self.inv.gerc(C64::new(-1.0 / denom, 0.0), &ph, &ph, C64::new(1.0, 0.0));
        Ok(())
    }

    pub fn apply(&self, b: &CVector) -> Result<CVector> {
        if b.len() != self.dim() {
            return Err(dim_err("tracker/apply length mismatch"));
        }
        Ok(&self.inv * b)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.inv
    }
}

/// `exp(-i * t * H)` for Hermitian `H`, through its eigendecomposition.
pub fn hermitian_exp(h: &CMatrix, t: f64) -> Result<CMatrix> {
    if !h.is_square() {
        return Err(dim_err("hermitian_exp needs a square matrix"));
    }
    if !is_hermitian(h, 1e-12) {
        return Err(Error::Contract("hermitian_exp: matrix is not Hermitian".into()));
    }
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..n {
        let phase = C64::from_polar(1.0, -t * eig.eigenvalues[j]);
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= phase);
    }
    Ok(scaled * eig.eigenvectors.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{complex_gaussian, SeedStream};
    use rand::Rng;

    fn random_symmetric(n: usize, seed: u64) -> RMatrix {
        let mut rng = SeedStream::new(seed).rng();
        let a = RMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()).scale(0.5)
    }

    fn random_psd(k: usize, seed: u64) -> CMatrix {
        let mut rng = SeedStream::new(seed).rng();
        let mut v = CMatrix::zeros(k, k);
        for _ in 0..k + 3 {
            let h = complex_gaussian(k, &mut rng);
            v += &h * h.adjoint();
        }
        v
    }

    #[test]
    fn identity_eigenvalues() {
        let e = sym_eig(&RMatrix::identity(5, 5)).unwrap();
        assert_eq!(e.values, vec![1.0; 5]);
        assert!(e.orthonormality_residual() < 1e-14);
    }

    #[test]
    fn diagonal_is_sorted_with_permuted_basis() {
        let m = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = sym_eig(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        // Column 0 is ±e1, column 1 is ±e3, column 2 is ±e2.
        assert!((e.vectors[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((e.vectors[(2, 1)].abs() - 1.0).abs() < 1e-14);
        assert!((e.vectors[(1, 2)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_symmetric_invariants() {
        for (n, seed) in [(2, 1), (10, 2), (50, 3), (200, 4)] {
            let m = random_symmetric(n, seed);
            let e = sym_eig(&m).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            assert!(e.orthonormality_residual() <= 1e-10, "n={n}");
            let err = max_abs(&(e.reconstruct() - &m));
            assert!(err <= 1e-10 * max_abs(&m).max(1.0), "n={n} err={err:e}");
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(sym_eig(&RMatrix::zeros(2, 3)), Err(Error::Dimension(_))));
        let mut m = RMatrix::identity(3, 3);
        m[(0, 1)] = 1e-6;
        assert!(matches!(sym_eig(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn pure_regularizer_and_scaling() {
        let mut e1 = CVector::zeros(3);
        e1[0] = C64::new(1.0, 0.0);
        let x = regularized_solve(&CMatrix::zeros(3, 3), 1.0, &e1).unwrap();
        assert!((x - &e1).norm() < 1e-15);

        let b = CVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, 0.0)]);
        let x = regularized_solve(&CMatrix::identity(2, 2), 1.0, &b).unwrap();
        assert!((x[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(x[1].norm() < 1e-15);
    }

    #[test]
    fn regularized_solve_residual_on_random_psd() {
        let v = random_psd(8, 11);
        let mut rng = SeedStream::new(12).rng();
        let b = complex_gaussian(8, &mut rng);
        let lambda = 0.3;
        let x = regularized_solve(&v, lambda, &b).unwrap();
        let reg = &v + CMatrix::identity(8, 8).scale(lambda);
        assert!((&reg * &x - &b).norm() <= 1e-8 * b.norm());
        // LU is an independent dense route.
        let lu = reg.lu().solve(&b).unwrap();
        assert!((x - lu).norm() <= 1e-10 * b.norm());
    }

    #[test]
    fn regularized_solve_errors() {
        let b = CVector::zeros(3);
        assert!(matches!(
            regularized_solve(&CMatrix::zeros(2, 2), 1.0, &b),
            Err(Error::Dimension(_))
        ));
        assert!(regularized_solve(&CMatrix::zeros(3, 3), 0.0, &b).is_err());
    }

    #[test]
    fn tracker_matches_fresh_solve_after_updates() {
        let k = 6;
        let lambda = 1e-3;
        let mut tracker = InverseTracker::new(k, lambda).unwrap();
        let mut v = CMatrix::zeros(k, k);
        let mut rng = SeedStream::new(99).rng();
        for _ in 0..40 {
            let h = complex_gaussian(k, &mut rng);
            tracker.rank_one_update(&h).unwrap();
            v += &h * h.adjoint();
            let b = complex_gaussian(k, &mut rng);
            let fast = tracker.apply(&b).unwrap();
            let slow = regularized_solve(&v, lambda, &b).unwrap();
            assert!((fast - &slow).norm() <= 1e-8 * slow.norm());
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let u = hermitian_exp(&CMatrix::zeros(3, 3), 0.7).unwrap();
        assert!(max_abs(&(u - CMatrix::identity(3, 3))) < 1e-15);
    }
}
