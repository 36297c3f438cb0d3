//! Standard qubit teleportation through a noisy shared state, and process
//! tomography of the resulting channel.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::bell_states;
use crate::fef::fef_two_qubit;
use crate::qmat::{
    c64, haar_ket, outer, pauli_basis, sigma_x, sigma_y, sigma_z, tensor, CMatrix, CVector,
    DensityMatrix, C64, I, ONE,
};
use crate::rng::stream_rng;

/// A map on single-qubit operators, given by its action on 2×2 matrices.
pub trait QubitChannel: Sync {
    fn apply(&self, rho: &CMatrix) -> CMatrix;
}

/// Wrap any closure as a channel.
pub struct FnChannel<F>(pub F);

impl<F: Fn(&CMatrix) -> CMatrix + Sync> QubitChannel for FnChannel<F> {
    fn apply(&self, rho: &CMatrix) -> CMatrix {
        (self.0)(rho)
    }
}

/// Default per-outcome corrections for Bell outcomes `Φ+, Φ−, Ψ+, Ψ−`:
/// `I, Z, X, ZX`.
pub fn standard_corrections() -> [CMatrix; 4] {
    [
        CMatrix::identity(2, 2),
        sigma_z(),
        sigma_x(),
        sigma_z() * sigma_x(),
    ]
}

#[derive(Debug, Clone)]
pub struct TeleportChannel {
    shared: DensityMatrix,
    corrections: [CMatrix; 4],
}

impl TeleportChannel {
    pub fn new(shared: DensityMatrix) -> Result<Self> {
        Self::with_corrections(shared, standard_corrections())
    }

    pub fn with_corrections(shared: DensityMatrix, corrections: [CMatrix; 4]) -> Result<Self> {
        if shared.dim_a() != 2 || shared.dim_b() != 2 {
            return Err(Error::WrongDimension {
                expected: "2 x 2",
                got_a: shared.dim_a(),
                got_b: shared.dim_b(),
            });
        }
        Ok(Self {
            shared,
            corrections,
        })
    }

    /// Corrections `C_k U†`, undoing a fixed rotation `U` on Bob's half.
    pub fn aligned(shared: DensityMatrix, u: &CMatrix) -> Result<Self> {
        let corrections = standard_corrections().map(|c| c * u.adjoint());
        Self::with_corrections(shared, corrections)
    }

    /// Align to the maximally entangled state attaining the FEF, so the
    /// average fidelity reaches `(2F + 1)/3`.
    pub fn fef_aligned(shared: DensityMatrix) -> Result<Self> {
        let u = fef_two_qubit(&shared)?.optimizer_unitary;
        Self::aligned(shared, &u)
    }

    pub fn shared(&self) -> &DensityMatrix {
        &self.shared
    }

    pub fn corrections(&self) -> &[CMatrix; 4] {
        &self.corrections
    }

    /// Unnormalized Bob states conditioned on each Bell outcome, before
    /// correction. Their traces are the outcome probabilities.
    pub fn conditional_states(&self, input: &CMatrix) -> [CMatrix; 4] {
        let total = tensor(input, self.shared.matrix());
        bell_states().map(|beta| {
            CMatrix::from_fn(2, 2, |b, b2| {
                let mut acc = C64::new(0.0, 0.0);
                for ca in 0..4 {
                    for ca2 in 0..4 {
                        acc += beta[ca].conj() * total[(ca * 2 + b, ca2 * 2 + b2)] * beta[ca2];
                    }
                }
                acc
            })
        })
    }
}

impl QubitChannel for TeleportChannel {
    fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.conditional_states(rho)
            .iter()
            .zip(&self.corrections)
            .fold(CMatrix::zeros(2, 2), |acc, (s, c)| acc + c * s * c.adjoint())
    }
}

/// Teleport a single-qubit state (stored as `2 ⊗ 1`).
pub fn teleport(channel: &TeleportChannel, input: &DensityMatrix) -> Result<DensityMatrix> {
    if input.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: input.dim(),
        });
    }
    DensityMatrix::single(channel.apply(input.matrix()))
}

/// Process matrix over `{I, X, Y, Z}` in the convention
/// `E(ρ) = Σ χ_mn A_n ρ A_m†`. This is the transpose of the
/// `Σ χ_mn A_m ρ A_n†` convention; diagonal entries agree.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    pub chi: CMatrix,
}

impl ProcessMatrix {
    pub fn trace(&self) -> f64 {
        self.chi.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        crate::qmat::lambda_min(&self.chi)
    }

    /// Apply the channel the matrix describes.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let a = pauli_basis();
        let mut out = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                out += (&a[n] * rho * a[m].adjoint()) * self.chi[(m, n)];
            }
        }
        out
    }
}

/// Tomography input states `|0⟩, |1⟩, |+⟩, |R⟩`.
pub fn tomography_inputs() -> [CVector; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        CVector::from_vec(vec![ONE, c64(0.0, 0.0)]),
        CVector::from_vec(vec![c64(0.0, 0.0), ONE]),
        CVector::from_vec(vec![c64(h, 0.0), c64(h, 0.0)]),
        CVector::from_vec(vec![c64(h, 0.0), c64(0.0, h)]),
    ]
}

/// Linear inversion from the outputs on `|0⟩, |1⟩, |+⟩, |R⟩`.
pub fn chi_from_outputs(outputs: &[CMatrix; 4]) -> ProcessMatrix {
    let [e0, e1, ep, er] = outputs;
    // |0⟩⟨1| = (X + iY)/2 with X = 2|+⟩⟨+| − I and Y = 2|R⟩⟨R| − I.
    let ex = ep.scale(2.0) - e0 - e1;
    let ey = er.scale(2.0) - e0 - e1;
    let e01 = (ex + ey * I).scale(0.5);
    let e10 = e01.adjoint();
    let blocks = [[e0, &e01], [&e10, e1]];

    let mut choi = CMatrix::zeros(4, 4);
    for j in 0..2 {
        for k in 0..2 {
            for r in 0..2 {
                for c in 0..2 {
                    choi[(j * 2 + r, k * 2 + c)] = blocks[j][k][(r, c)];
                }
            }
        }
    }

    // χ^NC_mn = ⟨⟨A_m|J|A_n⟩⟩ / 4 with |A⟩⟩ = Σ_j |j⟩ ⊗ A|j⟩.
    let vecs: Vec<CVector> = pauli_basis()
        .iter()
        .map(|a| CVector::from_fn(4, |r, _| a[(r % 2, r / 2)]))
        .collect();
    let chi_nc = CMatrix::from_fn(4, 4, |m, n| (vecs[m].adjoint() * &choi * &vecs[n])[(0, 0)] * 0.25);
    ProcessMatrix {
        chi: chi_nc.transpose(),
    }
}

pub fn qpt<C: QubitChannel + ?Sized>(channel: &C) -> ProcessMatrix {
    let outputs = tomography_inputs().map(|psi| channel.apply(&outer(&psi)));
    chi_from_outputs(&outputs)
}

/// Estimate a qubit state from `shots` measurements each of X, Y and Z.
pub fn sample_state<R: Rng + ?Sized>(rho: &CMatrix, shots: u64, rng: &mut R) -> CMatrix {
    let mut est = CMatrix::identity(2, 2);
    for p in [sigma_x(), sigma_y(), sigma_z()] {
        let mean = (rho * &p).trace().re.clamp(-1.0, 1.0);
        let prob_up = (1.0 + mean) / 2.0;
        let ups = Binomial::new(shots, prob_up).expect("valid probability").sample(rng);
        let estimate = 2.0 * ups as f64 / shots as f64 - 1.0;
        est += p * c64(estimate, 0.0);
    }
    est.scale(0.5)
}

/// Tomography with finite statistics: `shots` per Pauli setting and input.
pub fn qpt_with_shots<C: QubitChannel + ?Sized>(channel: &C, shots: u64, seed: u64) -> Result<ProcessMatrix> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    let mut k = 0u64;
    let outputs = tomography_inputs().map(|psi| {
        let mut rng = stream_rng(seed, k);
        k += 1;
        sample_state(&channel.apply(&outer(&psi)), shots, &mut rng)
    });
    Ok(chi_from_outputs(&outputs))
}

/// `F_p = tr(χ_id χ) = χ_II`
pub fn process_fidelity(chi: &ProcessMatrix) -> f64 {
    chi.chi[(0, 0)].re
}

/// Average fidelity `(2F_p + 1)/3` of a qubit channel.
pub fn avg_fidelity_from_process(f_p: f64) -> f64 {
    (2.0 * f_p + 1.0) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

const MC_CHUNK: usize = 4096;

/// Haar average of `⟨ψ|E(|ψ⟩⟨ψ|)|ψ⟩` with its standard error.
pub fn avg_fidelity_mc<C: QubitChannel + ?Sized>(channel: &C, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut sum = 0.0;
            let mut sq = 0.0;
            for _ in 0..n {
                let psi = haar_ket(2, &mut rng);
                let out = channel.apply(&outer(&psi));
                let f = (psi.adjoint() * out * &psi)[(0, 0)].re;
                sum += f;
                sq += f * f;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = partial.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        ((sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
    })
}
