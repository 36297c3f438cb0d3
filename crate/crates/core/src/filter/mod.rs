//! Local filters `ρ → (A⊗B)ρ(A⊗B)†/p`.

mod kraus;
mod named;
mod optimize;
mod search;

pub use kraus::{kraus_completion, KrausSet};
pub use named::*;
pub use optimize::{optimize_filter_cost_k, optimize_filter_fef, OptimizeOptions, OptimizedFilter};
pub use search::{qubit_projection_search, ProjectionResult, SearchOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::max_entangled;
use crate::fef::{fef_auto, FefOptions};
use crate::qmat::{op_norm, tensor, CMatrix, DensityMatrix};

/// Below this success probability the filtered state is undefined.
pub const P_GUARD: f64 = 1e-14;
const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sides {
    /// Alice filters, Bob does nothing.
    One,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    a: CMatrix,
    b: CMatrix,
}

impl Filter {
    pub fn new(a: CMatrix, b: CMatrix) -> Result<Self> {
        for m in [&a, &b] {
            if m.nrows() != m.ncols() {
                return Err(Error::InvalidParameter(format!(
                    "filter factor is {}x{}, expected square",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let n = op_norm(m);
            if n > 1.0 + NORM_TOL {
                return Err(Error::NormViolation(n));
            }
        }
        Ok(Self { a, b })
    }

    pub fn identity(d: usize) -> Self {
        Self::one_sided(CMatrix::identity(d, d))
    }

    /// `A ⊗ I`. Panics if `a` has norm above one; use [`Filter::new`] for
    /// checked construction.
    pub fn one_sided(a: CMatrix) -> Self {
        let d = a.nrows();
        Self::new(a, CMatrix::identity(d, d)).expect("valid one-sided filter")
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn operator(&self) -> CMatrix {
        tensor(&self.a, &self.b)
    }

    /// Unnormalized `τ = (A⊗B)ρ(A⊗B)†`.
    pub fn apply_unnormalized(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        if self.a.nrows() != rho.dim_a() || self.b.nrows() != rho.dim_b() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                got: self.a.nrows() * self.b.nrows(),
            });
        }
        let k = self.operator();
        Ok(&k * rho.matrix() * k.adjoint())
    }
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub p_success: f64,
    pub filtered: DensityMatrix,
    pub fef_before: f64,
    pub fef_after: f64,
    /// `p·F_after + (1−p)/d`
    pub cost_k: f64,
}

pub fn apply_filter(rho: &DensityMatrix, f: &Filter) -> Result<FilterOutcome> {
    apply_filter_with(rho, f, &FefOptions::default())
}

pub fn apply_filter_with(
    rho: &DensityMatrix,
    f: &Filter,
    opts: &FefOptions,
) -> Result<FilterOutcome> {
    let d = rho.local_dim()?;
    let tau = f.apply_unnormalized(rho)?;
    let (filtered, p) = DensityMatrix::from_unnormalized(rho.dim_a(), rho.dim_b(), &tau, P_GUARD)?;
    let fef_before = fef_auto(rho, opts)?.value;
    let fef_after = fef_auto(&filtered, opts)?.value;
    Ok(FilterOutcome {
        p_success: p,
        filtered,
        fef_before,
        fef_after,
        cost_k: p * fef_after + (1.0 - p) / d as f64,
    })
}

/// `K = ⟨Φ+|τ|Φ+⟩ + (1−p)/d`, the overlap of the deterministic average of
/// filtered state and separable fallback with `|Φ+⟩`.
pub fn cost_k(rho: &DensityMatrix, f: &Filter) -> Result<f64> {
    let d = rho.local_dim()?;
    let tau = f.apply_unnormalized(rho)?;
    let p = tau.trace().re;
    let phi = max_entangled(d);
    let overlap = (phi.amplitudes().adjoint() * &tau * phi.amplitudes())[(0, 0)].re;
    Ok(overlap + (1.0 - p) / d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{rank_two, werner, RankTwoParams, WernerParams};
    use crate::qmat::{diag, max_abs_diff};

    #[test]
    fn identity_filter_is_trivial() {
        let rho = werner(WernerParams::new(3, 0.2).unwrap());
        let out = apply_filter(&rho, &Filter::identity(3)).unwrap();
        assert!((out.p_success - 1.0).abs() < 1e-14);
        assert!(max_abs_diff(out.filtered.matrix(), rho.matrix()) < 1e-14);
        let x = rho.overlap(max_entangled(3).amplitudes());
        assert!((cost_k(&rho, &Filter::identity(3)).unwrap() - x).abs() < 1e-14);
    }

    #[test]
    fn zero_filter_has_zero_probability() {
        let rho = rank_two(RankTwoParams::new(2, 0.5).unwrap());
        let f = Filter::one_sided(CMatrix::zeros(2, 2));
        assert!(matches!(apply_filter(&rho, &f), Err(Error::ZeroProbability(_))));
        assert!((cost_k(&rho, &f).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_norm_above_one() {
        assert!(matches!(
            Filter::new(diag(&[1.1, 0.5]), CMatrix::identity(2, 2)),
            Err(Error::NormViolation(_))
        ));
    }

    #[test]
    fn rejects_mismatched_dimension() {
        let rho = rank_two(RankTwoParams::new(3, 0.5).unwrap());
        assert!(apply_filter(&rho, &Filter::identity(2)).is_err());
    }
}
