//! Dense complex linear algebra for bipartite quantum objects.
//!
//! Composite indices follow the usual Kronecker convention: basis state
//! `|i⟩|a⟩` of a `d_A ⊗ d_B` system sits at row `i * d_B + a`.

mod density;

pub use density::{DensityMatrix, MatrixFile, PureState};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default tolerance on Hermiticity checks (max absolute entry deviation).
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Which tensor factor of a bipartite system an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Build a matrix from row-major entries.
pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> CMatrix {
    CMatrix::from_row_slice(rows, cols, entries)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c64(values[i], 0.0) } else { ZERO })
}

/// Block-diagonal sum `m ⊕ 0_pad`.
pub fn direct_sum_zero(m: &CMatrix, pad: usize) -> CMatrix {
    let (r, c) = m.shape();
    let mut out = CMatrix::zeros(r + pad, c + pad);
    out.view_mut((0, 0), (r, c)).copy_from(m);
    out
}

/// `|ψ⟩⟨ψ|`
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Computational basis ket `|index⟩` in dimension `dim`.
pub fn basis(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = ONE;
    v
}

pub fn sigma_x() -> CMatrix {
    from_rows(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMatrix {
    from_rows(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> CMatrix {
    from_rows(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// The operator basis `{I, X, Y, Z}` in that order.
pub fn pauli_basis() -> [CMatrix; 4] {
    [CMatrix::identity(2, 2), sigma_x(), sigma_y(), sigma_z()]
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of two kets.
pub fn tensor_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Trace out one factor of a matrix on `dim_a ⊗ dim_b`, keeping `keep`.
pub fn partial_trace_raw(m: &CMatrix, dim_a: usize, dim_b: usize, keep: Side) -> CMatrix {
    debug_assert_eq!(m.nrows(), dim_a * dim_b);
    match keep {
        Side::A => CMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|a| m[(i * dim_b + a, j * dim_b + a)]).sum()
        }),
        Side::B => CMatrix::from_fn(dim_b, dim_b, |a, b| {
            (0..dim_a).map(|i| m[(i * dim_b + a, i * dim_b + b)]).sum()
        }),
    }
}

pub fn partial_trace(rho: &DensityMatrix, keep: Side) -> CMatrix {
    partial_trace_raw(rho.matrix(), rho.dim_a(), rho.dim_b(), keep)
}

/// Transpose a single tensor factor of a matrix on `dim_a ⊗ dim_b`.
pub fn partial_transpose_raw(m: &CMatrix, dim_a: usize, dim_b: usize, side: Side) -> CMatrix {
    let n = dim_a * dim_b;
    CMatrix::from_fn(n, n, |r, c| {
        let (i, a) = (r / dim_b, r % dim_b);
        let (j, b) = (c / dim_b, c % dim_b);
        match side {
            Side::A => m[(j * dim_b + a, i * dim_b + b)],
            Side::B => m[(i * dim_b + b, j * dim_b + a)],
        }
    })
}

pub fn partial_transpose(rho: &DensityMatrix, side: Side) -> CMatrix {
    partial_transpose_raw(rho.matrix(), rho.dim_a(), rho.dim_b(), side)
}

/// Largest absolute entry of `m - m†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest absolute entry of `u†u - I`.
pub fn unitary_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let g = u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols());
    g.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `(m + m†) / 2`
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }
    pub fn min(&self) -> f64 {
        self.values[0]
    }
    pub fn reconstruct(&self) -> CMatrix {
        let lambda = diag(&self.values);
        &self.vectors * lambda * self.vectors.adjoint()
    }
}

/// Eigen-decomposition of a Hermitian matrix; the input is symmetrized
/// before decomposition.
pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    let dev = hermitian_deviation(m);
    if dev > 1e-10 {
        return Err(Error::NonHermitian(dev));
    }
    Ok(herm_eig_unchecked(&hermitize(m)))
}

pub(crate) fn herm_eig_unchecked(m: &CMatrix) -> HermEig {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    HermEig { values, vectors }
}

/// Largest eigenvalue of a Hermitian matrix (symmetrized first).
pub fn lambda_max(m: &CMatrix) -> f64 {
    herm_eig_unchecked(&hermitize(m)).max()
}

/// Smallest eigenvalue of a Hermitian matrix (symmetrized first).
pub fn lambda_min(m: &CMatrix) -> f64 {
    herm_eig_unchecked(&hermitize(m)).min()
}

/// Schatten ∞-norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s))
}

/// Unitary factor `W V†` of the polar decomposition `m = (W V†)(V Σ V†)`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V†");
    u * v_t
}

/// Principal square root of a positive semidefinite matrix; eigenvalues
/// within rounding of zero are clamped.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(m)?;
    if eig.min() < -1e-10 {
        return Err(Error::InvalidParameter(format!(
            "matrix is not positive semidefinite (min eigenvalue {:e})",
            eig.min()
        )));
    }
    let roots: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok(&eig.vectors * diag(&roots) * eig.vectors.adjoint())
}

/// Complex matrix `exp(iH)` for Hermitian `h`.
pub fn unitary_from_generator(h: &CMatrix) -> CMatrix {
    (h * I).exp()
}

/// Hermitian matrix from `d²` unconstrained reals: `d` diagonal entries
/// followed by real/imaginary pairs of the strict upper triangle.
pub fn hermitian_from_params(d: usize, params: &[f64]) -> CMatrix {
    debug_assert_eq!(params.len(), d * d);
    let mut h = CMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = c64(params[i], 0.0);
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = c64(params[k], params[k + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// Standard complex Gaussian entry with `E|z|² = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix,
/// with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Haar-random pure state in dimension `d`.
pub fn haar_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(d, |_, _| complex_gaussian(rng));
    let n = v.norm();
    v.unscale(n)
}

/// Frobenius norm of `a - b`.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `Σ_{ij} |i⟩⟨j| ⊗ |j⟩⟨i|` on `d ⊗ d`.
pub fn swap_operator(d: usize) -> CMatrix {
    let n = d * d;
    let mut v = CMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            v[(i * d + j, j * d + i)] = ONE;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tensor_identity_and_basis_projector() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(tensor(&i2, &i2), CMatrix::identity(4, 4));

        let p0 = outer(&basis(2, 0));
        let p1 = outer(&basis(2, 1));
        let t = tensor(&p0, &p1);
        for r in 0..4 {
            for c in 0..4 {
                let expect = if r == 1 && c == 1 { 1.0 } else { 0.0 };
                assert_eq!(t[(r, c)], c64(expect, 0.0));
            }
        }
    }

    #[test]
    fn tensor_z_x_by_hand() {
        let t = tensor(&sigma_z(), &sigma_x());
        #[rustfmt::skip]
        let expect = from_rows(4, 4, &[
            ZERO, ONE, ZERO, ZERO,
            ONE, ZERO, ZERO, ZERO,
            ZERO, ZERO, ZERO, -ONE,
            ZERO, ZERO, -ONE, ZERO,
        ]);
        assert_eq!(t, expect);
    }

    #[test]
    fn partial_trace_of_product_and_bell() {
        let phi = {
            let mut v = CVector::zeros(4);
            v[0] = c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            v[3] = v[0];
            v
        };
        let rho = DensityMatrix::from_pure(&PureState::new(2, 2, phi).unwrap());
        let red = partial_trace(&rho, Side::A);
        assert!(max_abs_diff(&red, &CMatrix::identity(2, 2).scale(0.5)) < 1e-15);

        let prod = DensityMatrix::product(&outer(&basis(2, 0)), &outer(&basis(2, 1))).unwrap();
        assert!(max_abs_diff(&partial_trace(&prod, Side::A), &outer(&basis(2, 0))) < 1e-15);
        assert!(max_abs_diff(&partial_trace(&prod, Side::B), &outer(&basis(2, 1))) < 1e-15);
    }

    #[test]
    fn partial_transpose_cases() {
        let mixed = DensityMatrix::maximally_mixed(2, 2);
        assert!(max_abs_diff(&partial_transpose(&mixed, Side::B), mixed.matrix()) < 1e-15);

        let mut phi = CVector::zeros(4);
        phi[0] = c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        phi[3] = phi[0];
        let bell = DensityMatrix::from_pure(&PureState::new(2, 2, phi).unwrap());
        let pt = partial_transpose(&bell, Side::B);
        assert!((lambda_min(&pt) + 0.5).abs() < 1e-12);
        // Flip operator / 2.
        assert!(max_abs_diff(&pt, &swap_operator(2).scale(0.5)) < 1e-15);

        let prod = DensityMatrix::product(&outer(&basis(2, 0)), &outer(&basis(2, 1))).unwrap();
        let pt = partial_transpose(&prod, Side::A);
        assert!(max_abs_diff(&pt, prod.matrix()) < 1e-15);
        assert!(lambda_min(&pt) >= -1e-15);
    }

    #[test]
    fn herm_eig_examples() {
        let e = herm_eig(&diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);

        let e = herm_eig(&sigma_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);

        // Singlet projector.
        let mut psi = CVector::zeros(4);
        psi[1] = c64(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi[2] = -psi[1];
        let e = herm_eig(&outer(&psi)).unwrap();
        let expect = [0.0, 0.0, 0.0, 1.0];
        for (got, want) in e.values.iter().zip(expect) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = from_rows(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(herm_eig(&m), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn herm_eig_reconstructs_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2, 4, 9, 16] {
            let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(&mut rng));
            let h = hermitize(&g);
            let e = herm_eig(&h).unwrap();
            assert!(frobenius_distance(&e.reconstruct(), &h) <= 1e-9 * h.norm());
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn op_norm_examples() {
        assert!((op_norm(&CMatrix::identity(3, 3)) - 1.0).abs() < 1e-14);
        assert!((op_norm(&diag(&[0.25, 1.0])) - 1.0).abs() < 1e-14);
        let af = direct_sum_zero(&sigma_z(), 3);
        assert!((op_norm(&af) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=8 {
            let u = haar_unitary(d, &mut rng);
            assert!(unitary_deviation(&u) < 1e-12);
        }
    }

    #[test]
    fn polar_factor_is_unitary_and_recovers_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = haar_unitary(4, &mut rng);
        assert!(max_abs_diff(&polar_unitary(&u.scale(3.0)), &u) < 1e-12);
        let g = CMatrix::from_fn(3, 3, |_, _| complex_gaussian(&mut rng));
        assert!(unitary_deviation(&polar_unitary(&g)) < 1e-12);
    }

    #[test]
    fn generator_exponential_is_unitary() {
        let params: Vec<f64> = (0..9).map(|k| 0.3 * k as f64 - 1.0).collect();
        let h = hermitian_from_params(3, &params);
        assert!(hermitian_deviation(&h) == 0.0);
        assert!(unitary_deviation(&unitary_from_generator(&h)) < 1e-12);
    }
}
