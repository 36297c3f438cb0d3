use serde::{Deserialize, Serialize};

use super::{
    c64, hermitian_deviation, hermitize, herm_eig_unchecked, outer, tensor, CMatrix, CVector, C64,
    HERMITIAN_TOL,
};
use crate::error::{Error, Result};

const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;

/// Unit-trace positive semidefinite operator on `dim_a ⊗ dim_b`.
///
/// The stored matrix is exactly Hermitian: constructors symmetrize after
/// validating.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim_a: usize,
    dim_b: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(dim_a: usize, dim_b: usize, mat: CMatrix) -> Result<Self> {
        let n = dim_a * dim_b;
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::InvalidDensity("zero local dimension".into()));
        }
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: mat.nrows(),
            });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let dev = hermitian_deviation(&mat);
        if dev > HERMITIAN_TOL {
            return Err(Error::NonHermitian(dev));
        }
        let mat = hermitize(&mat);
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = herm_eig_unchecked(&mat).min();
        if min < -PSD_TOL {
            return Err(Error::InvalidDensity(format!("min eigenvalue {min:e}")));
        }
        Ok(Self { dim_a, dim_b, mat })
    }

    /// Normalize an unnormalized state `tau`, returning the state and its
    /// original trace. Fails when the trace is at most `min_trace`.
    pub fn from_unnormalized(
        dim_a: usize,
        dim_b: usize,
        tau: &CMatrix,
        min_trace: f64,
    ) -> Result<(Self, f64)> {
        let tau = hermitize(tau);
        let p = tau.trace().re;
        if p.is_nan() || p <= min_trace {
            return Err(Error::ZeroProbability(p));
        }
        let state = Self::new(dim_a, dim_b, tau.unscale(p))?;
        Ok((state, p))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            dim_a: psi.dim_a,
            dim_b: psi.dim_b,
            mat: hermitize(&outer(&psi.amplitudes)),
        }
    }

    /// Convex mixture `Σ w_k |ψ_k⟩⟨ψ_k|` of pure states; weights must sum to one.
    pub fn mixture(terms: &[(f64, &PureState)]) -> Result<Self> {
        let (dim_a, dim_b) = match terms.first() {
            Some((_, psi)) => (psi.dim_a, psi.dim_b),
            None => return Err(Error::InvalidDensity("empty mixture".into())),
        };
        let n = dim_a * dim_b;
        let mut mat = CMatrix::zeros(n, n);
        for (w, psi) in terms {
            if psi.dim_a != dim_a || psi.dim_b != dim_b {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: psi.amplitudes.len(),
                });
            }
            mat += outer(&psi.amplitudes).scale(*w);
        }
        Self::new(dim_a, dim_b, mat)
    }

    pub fn maximally_mixed(dim_a: usize, dim_b: usize) -> Self {
        let n = dim_a * dim_b;
        Self {
            dim_a,
            dim_b,
            mat: CMatrix::identity(n, n).unscale(n as f64),
        }
    }

    /// `a ⊗ b` for single-system density matrices `a`, `b`.
    pub fn product(a: &CMatrix, b: &CMatrix) -> Result<Self> {
        Self::new(a.nrows(), b.nrows(), tensor(a, b))
    }

    /// Single-system state, stored as `d ⊗ 1`.
    pub fn single(mat: CMatrix) -> Result<Self> {
        Self::new(mat.nrows(), 1, mat)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    /// Common local dimension, or an error when the two sides differ.
    pub fn local_dim(&self) -> Result<usize> {
        if self.dim_a == self.dim_b {
            Ok(self.dim_a)
        } else {
            Err(Error::WrongDimension {
                expected: "d x d",
                got_a: self.dim_a,
                got_b: self.dim_b,
            })
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// `tr(ρ O)`
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (&self.mat * op).trace()
    }

    /// `⟨ψ|ρ|ψ⟩` for a (not necessarily normalized) vector.
    pub fn overlap(&self, psi: &CVector) -> f64 {
        (psi.adjoint() * &self.mat * psi)[(0, 0)].re
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eig_unchecked(&self.mat).values
    }

    /// Re-embed into `new_a ⊗ new_b` by padding with zeros or dropping
    /// trailing basis states. Dropping is only allowed when the discarded
    /// block carries no weight.
    pub fn resize_local(&self, new_a: usize, new_b: usize) -> Result<Self> {
        let n = new_a * new_b;
        let mut out = CMatrix::zeros(n, n);
        let mut kept = 0.0;
        for i in 0..self.dim_a.min(new_a) {
            for a in 0..self.dim_b.min(new_b) {
                for j in 0..self.dim_a.min(new_a) {
                    for b in 0..self.dim_b.min(new_b) {
                        let z = self.mat[(i * self.dim_b + a, j * self.dim_b + b)];
                        out[(i * new_b + a, j * new_b + b)] = z;
                    }
                }
                kept += self.mat[(i * self.dim_b + a, i * self.dim_b + a)].re;
            }
        }
        if (kept - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidParameter(format!(
                "resizing discards weight {:e}",
                1.0 - kept
            )));
        }
        Self::new(new_a, new_b, out)
    }
}

/// Normalized pure state on `dim_a ⊗ dim_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub(crate) dim_a: usize,
    pub(crate) dim_b: usize,
    pub(crate) amplitudes: CVector,
}

impl PureState {
    pub fn new(dim_a: usize, dim_b: usize, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != dim_a * dim_b {
            return Err(Error::DimensionMismatch {
                expected: dim_a * dim_b,
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidPureState(norm));
        }
        Ok(Self {
            dim_a,
            dim_b,
            amplitudes,
        })
    }

    /// Single-system ket, stored as `d ⊗ 1`.
    pub fn single(amplitudes: CVector) -> Result<Self> {
        let d = amplitudes.len();
        Self::new(d, 1, amplitudes)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

/// On-disk matrix format: row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim_a: usize,
    pub dim_b: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let n = rho.dim();
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let z = rho.mat[(r, c)];
                entries.push([z.re, z.im]);
            }
        }
        Self {
            dim_a: rho.dim_a,
            dim_b: rho.dim_b,
            entries,
        }
    }

    pub fn into_density(self) -> Result<DensityMatrix> {
        let n = self.dim_a * self.dim_b;
        if self.entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: self.entries.len(),
            });
        }
        let flat: Vec<C64> = self.entries.iter().map(|[re, im]| c64(*re, *im)).collect();
        DensityMatrix::new(self.dim_a, self.dim_b, CMatrix::from_row_slice(n, n, &flat))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{basis, diag, ZERO};

    #[test]
    fn rejects_bad_trace_and_negative_spectrum() {
        assert!(DensityMatrix::new(2, 1, diag(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(2, 1, diag(&[1.1, -0.1])).is_err());
        assert!(DensityMatrix::new(2, 1, diag(&[0.25, 0.75])).is_ok());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = diag(&[0.5, 0.5]);
        m[(0, 1)] = c64(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(2, 1, m), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn zero_trace_is_zero_probability() {
        let z = CMatrix::from_element(4, 4, ZERO);
        assert!(matches!(
            DensityMatrix::from_unnormalized(2, 2, &z, 1e-14),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn pure_state_norm_is_checked() {
        let v = basis(4, 0).scale(1.1);
        assert!(PureState::new(2, 2, v).is_err());
    }

    #[test]
    fn matrix_file_round_trip() {
        let rho = DensityMatrix::maximally_mixed(2, 3);
        let text = serde_json::to_string(&MatrixFile::from_density(&rho)).unwrap();
        let back: MatrixFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_density().unwrap(), rho);
    }

    #[test]
    fn resize_pads_and_truncates() {
        let rho = DensityMatrix::product(&outer(&basis(2, 0)), &outer(&basis(2, 1))).unwrap();
        let big = rho.resize_local(4, 4).unwrap();
        assert_eq!(big.dim(), 16);
        let back = big.resize_local(2, 2).unwrap();
        assert_eq!(back, rho);
        let mixed = DensityMatrix::maximally_mixed(3, 3);
        assert!(mixed.resize_local(2, 2).is_err());
    }
}
