//! Numerical search over local filters.
//!
//! Each side is parametrized as `A = exp(iH₁)·diag(sin²x)·exp(iH₂)`, which
//! keeps `‖A‖ ≤ 1` at every point. The unitary freedom in the FEF is folded
//! into the filter itself, so objectives only ever use `|Φ+⟩`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{apply_filter_with, Filter, FilterOutcome, Sides, P_GUARD};
use crate::error::Result;
use crate::families::max_entangled;
use crate::fef::FefOptions;
use crate::optim::{bfgs, BfgsOptions};
use crate::qmat::{
    c64, hermitian_from_params, tensor, unitary_from_generator, CMatrix, CVector, DensityMatrix,
};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub sides: Sides,
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            sides: Sides::One,
            restarts: 24,
            tol: 1e-12,
            max_iter: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizedFilter {
    pub filter: Filter,
    pub outcome: FilterOutcome,
    /// Objective at the optimum: the `|Φ+⟩` overlap of the filtered state,
    /// or the cost `K`.
    pub objective: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
enum Objective {
    Fef,
    CostK,
}

fn side_len(d: usize) -> usize {
    d + 2 * d * d
}

fn side_matrix(d: usize, x: &[f64]) -> CMatrix {
    let (s, rest) = x.split_at(d);
    let (h1, h2) = rest.split_at(d * d);
    let u1 = unitary_from_generator(&hermitian_from_params(d, h1));
    let u2 = unitary_from_generator(&hermitian_from_params(d, h2));
    let mut a = u1;
    for (j, sj) in s.iter().enumerate() {
        let w = sj.sin().powi(2);
        for i in 0..d {
            a[(i, j)] *= w;
        }
    }
    a * u2
}

fn build_filter(d: usize, sides: Sides, x: &[f64]) -> (CMatrix, CMatrix) {
    let a = side_matrix(d, &x[..side_len(d)]);
    let b = match sides {
        Sides::One => CMatrix::identity(d, d),
        Sides::Both => side_matrix(d, &x[side_len(d)..]),
    };
    (a, b)
}

struct Evaluator<'a> {
    rho: &'a CMatrix,
    phi: CVector,
    d: usize,
    sides: Sides,
    objective: Objective,
}

impl Evaluator<'_> {
    /// `(⟨Φ+|τ|Φ+⟩, p)` for the filter at `x`.
    fn overlap_and_p(&self, x: &[f64]) -> (f64, f64) {
        let (a, b) = build_filter(self.d, self.sides, x);
        let k = tensor(&a, &b);
        let psi = k.adjoint() * &self.phi;
        let overlap = (psi.adjoint() * self.rho * &psi)[(0, 0)].re;
        let p = (self.rho * (k.adjoint() * &k)).trace().re;
        (overlap, p)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (overlap, p) = self.overlap_and_p(x);
        match self.objective {
            Objective::Fef if p > P_GUARD => overlap / p,
            Objective::Fef => 0.0,
            Objective::CostK => overlap + (1.0 - p) / self.d as f64,
        }
    }
}

fn identity_start(d: usize, sides: Sides) -> Vec<f64> {
    let mut one = vec![0.0; side_len(d)];
    one[..d].fill(std::f64::consts::FRAC_PI_2);
    match sides {
        Sides::One => one,
        Sides::Both => [one.clone(), one].concat(),
    }
}

fn random_start(d: usize, sides: Sides, seed: u64, restart: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, restart as u64);
    let per_side = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut v: Vec<f64> = (0..d)
            .map(|_| rng.random_range(0.2..std::f64::consts::FRAC_PI_2))
            .collect();
        v.extend((0..2 * d * d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        v
    };
    let mut x = per_side(&mut rng);
    if sides == Sides::Both {
        x.extend(per_side(&mut rng));
    }
    x
}

fn optimize(rho: &DensityMatrix, objective: Objective, opts: &OptimizeOptions) -> Result<OptimizedFilter> {
    let d = rho.local_dim()?;
    let eval = Evaluator {
        rho: rho.matrix(),
        phi: max_entangled(d).amplitudes().clone(),
        d,
        sides: opts.sides,
        objective,
    };
    let bfgs_opts = BfgsOptions {
        max_iter: opts.max_iter,
        ftol: opts.tol,
        ..Default::default()
    };

    let runs: Vec<(usize, f64, f64, Vec<f64>, bool)> = (0..=opts.restarts)
        .into_par_iter()
        .map(|k| {
            let x0 = if k == 0 {
                identity_start(d, opts.sides)
            } else {
                random_start(d, opts.sides, opts.seed, k)
            };
            let m = bfgs(|x| -eval.value(x), &x0, &bfgs_opts);
            let (_, p) = eval.overlap_and_p(&m.x);
            (k, -m.value, p, m.x, m.converged)
        })
        .collect();

    // Lexicographic on (value, p_success), then restart index.
    let best = runs
        .into_iter()
        .reduce(|x, y| {
            let better = y.1 > x.1 || (y.1 == x.1 && (y.2 > x.2 || (y.2 == x.2 && y.0 < x.0)));
            if better {
                y
            } else {
                x
            }
        })
        .expect("at least one start");

    let (a, b) = build_filter(d, opts.sides, &best.3);
    let filter = Filter::new(clean(a), clean(b))?;
    let fef_opts = FefOptions {
        seed: opts.seed,
        ..Default::default()
    };
    let outcome = apply_filter_with(rho, &filter, &fef_opts)?;
    Ok(OptimizedFilter {
        filter,
        outcome,
        objective: best.1,
        converged: best.4,
    })
}

/// Rounding in the matrix exponential can leave singular values a few ulps
/// above one; rescale so the norm check passes.
fn clean(m: CMatrix) -> CMatrix {
    let n = crate::qmat::op_norm(&m);
    if n > 1.0 {
        m * c64(1.0 / n, 0.0)
    } else {
        m
    }
}

/// Maximize the `|Φ+⟩` overlap of the filtered state.
pub fn optimize_filter_fef(rho: &DensityMatrix, opts: &OptimizeOptions) -> Result<OptimizedFilter> {
    optimize(rho, Objective::Fef, opts)
}

/// Maximize the cost function `K = ⟨Φ+|τ|Φ+⟩ + (1−p)/d`.
pub fn optimize_filter_cost_k(rho: &DensityMatrix, opts: &OptimizeOptions) -> Result<OptimizedFilter> {
    optimize(rho, Objective::CostK, opts)
}
