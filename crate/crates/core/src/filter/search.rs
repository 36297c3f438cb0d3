//! Search for local qubit projections with a useful two-qubit image.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::families::{max_entangled, ppt_min_eig};
use crate::fef::fef_two_qubit_magic;
use crate::optim::{bfgs, BfgsOptions};
use crate::qmat::{
    haar_unitary, hermitian_from_params, tensor, unitary_from_generator, CMatrix, CVector,
    DensityMatrix,
};
use crate::rng::stream_rng;

use super::P_GUARD;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 200,
            seed: 0,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// `d×2` isometry on Alice's side; its columns span the kept subspace.
    pub proj_a: CMatrix,
    pub proj_b: CMatrix,
    pub state: DensityMatrix,
    pub p_success: f64,
    pub fef: f64,
    pub ppt_min_eig: f64,
    pub entangled: bool,
}

fn isometry(v0: &CMatrix, params: &[f64]) -> CMatrix {
    let d = v0.nrows();
    unitary_from_generator(&hermitian_from_params(d, params)) * v0
}

fn project(rho: &DensityMatrix, va: &CMatrix, vb: &CMatrix) -> (CMatrix, f64) {
    let k = tensor(&va.adjoint(), &vb.adjoint());
    let tau = &k * rho.matrix() * k.adjoint();
    let p = tau.trace().re;
    (tau, p)
}

/// Draw a pair of random qubit subspaces with non-negligible weight.
fn sample_start(rho: &DensityMatrix, seed: u64, restart: usize) -> Result<(CMatrix, CMatrix)> {
    let mut rng = stream_rng(seed, restart as u64);
    for _ in 0..100 {
        let va = haar_unitary(rho.dim_a(), &mut rng).columns(0, 2).into_owned();
        let vb = haar_unitary(rho.dim_b(), &mut rng).columns(0, 2).into_owned();
        if project(rho, &va, &vb).1 > P_GUARD {
            return Ok((va, vb));
        }
    }
    Err(Error::ZeroProbability(0.0))
}

/// Maximize the two-qubit FEF over local rank-2 projections. Each restart
/// starts from random subspaces and refines them by varying local
/// unitaries. The F_2 reported is exact (magic basis), together with the
/// partial-transpose verdict on the projected state.
pub fn qubit_projection_search(rho: &DensityMatrix, opts: &SearchOptions) -> Result<ProjectionResult> {
    let (da, db) = (rho.dim_a(), rho.dim_b());
    if da < 2 || db < 2 {
        return Err(Error::WrongDimension {
            expected: "d x d with d >= 2",
            got_a: da,
            got_b: db,
        });
    }
    let phi: CVector = max_entangled(2).amplitudes().clone();
    let bfgs_opts = BfgsOptions {
        max_iter: opts.max_iter,
        ftol: 1e-12,
        ..Default::default()
    };

    let candidates: Vec<(usize, f64, f64, CMatrix, CMatrix)> = (0..opts.restarts.max(1))
        .into_par_iter()
        .filter_map(|k| {
            let (va0, vb0) = sample_start(rho, opts.seed, k).ok()?;
            let objective = |x: &[f64]| {
                let va = isometry(&va0, &x[..da * da]);
                let vb = isometry(&vb0, &x[da * da..]);
                let (tau, p) = project(rho, &va, &vb);
                if p <= P_GUARD {
                    return 0.0;
                }
                -(phi.adjoint() * &tau * &phi)[(0, 0)].re / p
            };
            let m = bfgs(objective, &vec![0.0; da * da + db * db], &bfgs_opts);
            let va = isometry(&va0, &m.x[..da * da]);
            let vb = isometry(&vb0, &m.x[da * da..]);
            let (tau, p) = project(rho, &va, &vb);
            let (state, _) = DensityMatrix::from_unnormalized(2, 2, &tau, P_GUARD).ok()?;
            let f2 = fef_two_qubit_magic(&state).ok()?;
            Some((k, f2, p, va, vb))
        })
        .collect();

    let (_, fef, p_success, proj_a, proj_b) = candidates
        .into_iter()
        .reduce(|x, y| {
            let better = y.1 > x.1 || (y.1 == x.1 && (y.2 > x.2 || (y.2 == x.2 && y.0 < x.0)));
            if better {
                y
            } else {
                x
            }
        })
        .ok_or(Error::ZeroProbability(0.0))?;

    let (tau, _) = project(rho, &proj_a, &proj_b);
    let (state, _) = DensityMatrix::from_unnormalized(2, 2, &tau, P_GUARD)?;
    let ppt = ppt_min_eig(&state);
    Ok(ProjectionResult {
        proj_a,
        proj_b,
        state,
        p_success,
        fef,
        ppt_min_eig: ppt,
        entangled: ppt < -1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximally_entangled_qutrits_project_to_a_bell_pair() {
        let rho = max_entangled(3).density();
        let res = qubit_projection_search(
            &rho,
            &SearchOptions {
                restarts: 8,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((res.fef - 1.0).abs() < 1e-8, "{}", res.fef);
        assert!(res.entangled);
    }
}
