//! State families and entanglement witnesses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{
    basis, lambda_min, outer, partial_trace, partial_transpose, swap_operator, tensor, tensor_vec,
    CMatrix, CVector, DensityMatrix, PureState, Side, C64, ONE,
};

/// Witness values within this band of zero are read as "not entangled".
const WITNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WernerParams {
    pub d: usize,
    pub v: f64,
}

impl WernerParams {
    pub fn new(d: usize, v: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("d = {d} < 2")));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("v = {v} outside [0, 1]")));
        }
        Ok(Self { d, v })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankTwoParams {
    pub d: usize,
    pub q: f64,
}

impl RankTwoParams {
    pub fn new(d: usize, q: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("d = {d} < 2")));
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidParameter(format!("q = {q} outside (0, 1]")));
        }
        Ok(Self { d, q })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    /// `tr(Vρ)` for states of Werner form; negative iff entangled.
    SwapExpectation,
    /// Minimum eigenvalue of the partial transpose.
    PptMinEig,
    /// Minimum eigenvalue of `ρ_A ⊗ I − ρ`.
    ReductionMinEig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementVerdict {
    pub entangled: bool,
    pub witness: Witness,
    pub value: f64,
}

/// `|Φ+_d⟩ = Σ_i |ii⟩ / √d`
pub fn max_entangled(d: usize) -> PureState {
    let mut v = CVector::zeros(d * d);
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    PureState::new(d, d, v).expect("normalized by construction")
}

/// Projector onto the symmetric (`sign = +1`) or antisymmetric (`sign = −1`)
/// subspace of `d ⊗ d`.
pub fn symmetric_projector(d: usize, sign: f64) -> CMatrix {
    let n = d * d;
    (CMatrix::identity(n, n) + swap_operator(d).scale(sign)).scale(0.5)
}

/// `W(v) = 2v/(d(d+1)) P₊ + 2(1−v)/(d(d−1)) P₋`
pub fn werner(p: WernerParams) -> DensityMatrix {
    let d = p.d as f64;
    let sym = symmetric_projector(p.d, 1.0).scale(2.0 * p.v / (d * (d + 1.0)));
    let anti = symmetric_projector(p.d, -1.0).scale(2.0 * (1.0 - p.v) / (d * (d - 1.0)));
    DensityMatrix::new(p.d, p.d, sym + anti).expect("Werner state is a valid density matrix")
}

/// `ρ(q) = q|Φ+_d⟩⟨Φ+_d| + (1−q)|0⟩⟨0|⊗|1⟩⟨1|`
pub fn rank_two(p: RankTwoParams) -> DensityMatrix {
    let phi = max_entangled(p.d);
    let ket01 = tensor_vec(&basis(p.d, 0), &basis(p.d, 1));
    let mat = outer(phi.amplitudes()).scale(p.q) + outer(&ket01).scale(1.0 - p.q);
    DensityMatrix::new(p.d, p.d, mat).expect("rank-two state is a valid density matrix")
}

/// If `rho` is of Werner form (a combination of identity and swap), the
/// corresponding `v`.
pub fn werner_parameter(rho: &DensityMatrix) -> Option<f64> {
    let d = rho.local_dim().ok()?;
    if d < 2 {
        return None;
    }
    let swap = rho.expectation(&swap_operator(d)).re;
    let v = ((1.0 + swap) / 2.0).clamp(0.0, 1.0);
    let rebuilt = werner(WernerParams { d, v });
    if (rebuilt.matrix() - rho.matrix()).norm() <= 1e-10 {
        Some(v)
    } else {
        None
    }
}

pub fn ppt_min_eig(rho: &DensityMatrix) -> f64 {
    lambda_min(&partial_transpose(rho, Side::B))
}

/// Minimum eigenvalue of `ρ_A ⊗ I − ρ`; negative values violate the
/// reduction criterion.
pub fn reduction_min_eig(rho: &DensityMatrix) -> f64 {
    let rho_a = partial_trace(rho, Side::A);
    let id_b = CMatrix::identity(rho.dim_b(), rho.dim_b());
    lambda_min(&(tensor(&rho_a, &id_b) - rho.matrix()))
}

/// Witness-based entanglement test.
///
/// Werner-form states use the swap expectation. Otherwise the partial
/// transpose decides at `d_A·d_B ≤ 6`; at larger dimensions a negative
/// partial transpose or reduction-criterion violation certifies
/// entanglement and anything else is reported as inconclusive.
pub fn is_entangled(rho: &DensityMatrix) -> Result<EntanglementVerdict> {
    if werner_parameter(rho).is_some() {
        let d = rho.dim_a();
        let value = rho.expectation(&swap_operator(d)).re;
        return Ok(EntanglementVerdict {
            entangled: value < -WITNESS_TOL,
            witness: Witness::SwapExpectation,
            value,
        });
    }
    let ppt = ppt_min_eig(rho);
    if rho.dim() <= 6 || ppt < -WITNESS_TOL {
        return Ok(EntanglementVerdict {
            entangled: ppt < -WITNESS_TOL,
            witness: Witness::PptMinEig,
            value: ppt,
        });
    }
    let red = reduction_min_eig(rho);
    if red < -WITNESS_TOL {
        return Ok(EntanglementVerdict {
            entangled: true,
            witness: Witness::ReductionMinEig,
            value: red,
        });
    }
    Err(Error::Inconclusive {
        dim_a: rho.dim_a(),
        dim_b: rho.dim_b(),
    })
}

/// The four two-qubit Bell states in the order `Φ+, Φ−, Ψ+, Ψ−`.
pub fn bell_states() -> [CVector; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ket = |a: [f64; 4]| CVector::from_iterator(4, a.iter().map(|&x| ONE * (x * h)));
    [
        ket([1.0, 0.0, 0.0, 1.0]),
        ket([1.0, 0.0, 0.0, -1.0]),
        ket([0.0, 1.0, 1.0, 0.0]),
        ket([0.0, 1.0, -1.0, 0.0]),
    ]
}
