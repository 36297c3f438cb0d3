//! Linear-optics model of the photonic experiment: a noisy channel built from
//! an unbalanced interferometer, a polarization filter, and teleportation
//! between the path and polarization of photon 1.
//!
//! The state is a classical mixture of pure branches over the modes
//! (photon-1 polarization, photon-1 path, photon-2 polarization). Each
//! post-selection renormalizes the branches and multiplies the accumulated
//! success probability. Beam splitters carry real amplitudes `1/√2` with no
//! reflection phase, since every phase they could add is removed by the
//! subsequent post-selection or incoherent recombination.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fef::{fef_two_qubit, fef_two_qubit_magic};
use crate::filter::{rank2_kappa, rank2_kappa_prime};
use crate::htp::KAPPA_SLACK;
use crate::qmat::{c64, herm_eig, sigma_x, sigma_z, CMatrix, DensityMatrix, C64, I, ONE, ZERO};
use crate::rng::{derive_seed, stream_rng};
use crate::teleport::{
    avg_fidelity_from_process, chi_from_outputs, process_fidelity, sample_state, tomography_inputs, ProcessMatrix,
    QubitChannel, TeleportChannel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const ALL: [Pol; 2] = [Pol::H, Pol::V];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Spatial modes of photon 1. `Main` is the single beam between
/// stages; the others are the arms opened by beam splitters and displacers.
/// `L` labels both the long interferometer arm and the third BSM path; they
/// never coexist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Path {
    Main,
    S,
    L,
    H,
    V,
    M,
    R,
}

impl Path {
    pub const ALL: [Path; 7] = [Path::Main, Path::S, Path::L, Path::H, Path::V, Path::M, Path::R];
    const COUNT: usize = 7;

    pub fn index(self) -> usize {
        self as usize
    }
}

const MODES: usize = 2 * Path::COUNT * 2;

fn mode(p1: Pol, path: Path, p2: Pol) -> usize {
    (p1.index() * Path::COUNT + path.index()) * 2 + p2.index()
}

fn each_mode() -> impl Iterator<Item = (Pol, Path, Pol)> {
    Pol::ALL
        .into_iter()
        .flat_map(|a| Path::ALL.into_iter().flat_map(move |p| Pol::ALL.into_iter().map(move |b| (a, p, b))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveplateKind {
    Hwp,
    Qwp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveplateSetting {
    pub kind: WaveplateKind,
    /// Fast-axis angle from vertical, in radians.
    pub angle: f64,
}

impl WaveplateSetting {
    pub fn hwp(angle: f64) -> Self {
        Self {
            kind: WaveplateKind::Hwp,
            angle,
        }
    }

    pub fn qwp(angle: f64) -> Self {
        Self {
            kind: WaveplateKind::Qwp,
            angle,
        }
    }

    pub fn matrix(&self) -> CMatrix {
        waveplate(self.kind, self.angle)
    }
}

/// Jones matrix in the `(H, V)` basis.
pub fn waveplate(kind: WaveplateKind, angle: f64) -> CMatrix {
    let (s, c) = (2.0 * angle).sin_cos();
    let hwp = sigma_z().scale(c) + sigma_x().scale(s);
    match kind {
        WaveplateKind::Hwp => hwp,
        WaveplateKind::Qwp => (CMatrix::identity(2, 2) + hwp * I).scale(FRAC_1_SQRT_2),
    }
}

/// The four input states used for tomography.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedInput {
    H,
    V,
    Plus,
    R,
}

impl NamedInput {
    /// Order matching [`tomography_inputs`].
    pub const ALL: [NamedInput; 4] = [NamedInput::H, NamedInput::V, NamedInput::Plus, NamedInput::R];

    pub fn setting(self) -> WaveplateSetting {
        match self {
            NamedInput::H => WaveplateSetting::hwp(0.0),
            NamedInput::V => WaveplateSetting::hwp(FRAC_PI_4),
            NamedInput::Plus => WaveplateSetting::hwp(FRAC_PI_8),
            NamedInput::R => WaveplateSetting::qwp(FRAC_PI_4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub weight: f64,
    amps: [C64; MODES],
}

impl Branch {
    fn empty(weight: f64) -> Self {
        Self {
            weight,
            amps: [ZERO; MODES],
        }
    }

    pub fn amp(&self, p1: Pol, path: Path, p2: Pol) -> C64 {
        self.amps[mode(p1, path, p2)]
    }

    fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn scale(&mut self, s: f64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub label: String,
    pub branches: Vec<Branch>,
    pub accumulated: f64,
}

const BRANCH_FLOOR: f64 = 1e-15;

/// Mixture of pure branches with the accumulated post-selection probability
/// and a snapshot after every stage.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    branches: Vec<Branch>,
    accumulated: f64,
    trace: Vec<Snapshot>,
}

impl HybridState {
    /// A two-photon polarization state on the `Main` path, split into pure
    /// branches by eigendecomposition.
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        if rho.dim_a() != 2 || rho.dim_b() != 2 {
            return Err(Error::WrongDimension {
                expected: "2 x 2",
                got_a: rho.dim_a(),
                got_b: rho.dim_b(),
            });
        }
        let eig = herm_eig(rho.matrix())?;
        let mut branches = Vec::new();
        for (k, &w) in eig.values.iter().enumerate() {
            if w <= BRANCH_FLOOR {
                continue;
            }
            let mut b = Branch::empty(w);
            for p1 in Pol::ALL {
                for p2 in Pol::ALL {
                    b.amps[mode(p1, Path::Main, p2)] = eig.vectors[(p1.index() * 2 + p2.index(), k)];
                }
            }
            branches.push(b);
        }
        Ok(Self::from_branches(branches, "input"))
    }

    /// `V|Ψ+⟩⟨Ψ+| + (1 − V)I/4`, the source output at visibility `V`.
    pub fn source(visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::InvalidParameter(format!("visibility {visibility} outside [0, 1]")));
        }
        let mut branches = Vec::new();
        if visibility > 0.0 {
            let mut psi = Branch::empty(visibility);
            psi.amps[mode(Pol::H, Path::Main, Pol::V)] = c64(FRAC_1_SQRT_2, 0.0);
            psi.amps[mode(Pol::V, Path::Main, Pol::H)] = c64(FRAC_1_SQRT_2, 0.0);
            branches.push(psi);
        }
        if visibility < 1.0 {
            for p1 in Pol::ALL {
                for p2 in Pol::ALL {
                    let mut b = Branch::empty((1.0 - visibility) / 4.0);
                    b.amps[mode(p1, Path::Main, p2)] = ONE;
                    branches.push(b);
                }
            }
        }
        Ok(Self::from_branches(branches, "source"))
    }

    fn from_branches(branches: Vec<Branch>, label: &str) -> Self {
        let mut s = Self {
            branches,
            accumulated: 1.0,
            trace: Vec::new(),
        };
        s.record(label);
        s
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn accumulated_postselect_prob(&self) -> f64 {
        self.accumulated
    }

    pub fn trace(&self) -> &[Snapshot] {
        &self.trace
    }

    pub fn snapshot(&self, label: &str) -> Option<&Snapshot> {
        self.trace.iter().rev().find(|s| s.label == label)
    }

    fn record(&mut self, label: &str) {
        self.trace.push(Snapshot {
            label: label.to_string(),
            branches: self.branches.clone(),
            accumulated: self.accumulated,
        });
    }

    /// Apply `w` to photon-1 polarization on the listed paths.
    pub fn waveplate(&mut self, w: &CMatrix, paths: &[Path], label: &str) {
        for b in &mut self.branches {
            for &path in paths {
                for p2 in Pol::ALL {
                    let h = b.amps[mode(Pol::H, path, p2)];
                    let v = b.amps[mode(Pol::V, path, p2)];
                    b.amps[mode(Pol::H, path, p2)] = w[(0, 0)] * h + w[(0, 1)] * v;
                    b.amps[mode(Pol::V, path, p2)] = w[(1, 0)] * h + w[(1, 1)] * v;
                }
            }
        }
        self.record(label);
    }

    /// Move each `(polarization, path)` of photon 1 to a new path, dropping
    /// modes mapped to `None`. Dropped amplitude is post-selected away.
    pub fn route<F: Fn(Pol, Path) -> Option<Path>>(&mut self, f: F, label: &str) -> Result<()> {
        for b in &mut self.branches {
            let mut next = [ZERO; MODES];
            for (p1, path, p2) in each_mode() {
                if let Some(to) = f(p1, path) {
                    next[mode(p1, to, p2)] += b.amps[mode(p1, path, p2)];
                }
            }
            b.amps = next;
        }
        self.renormalize()?;
        self.record(label);
        Ok(())
    }

    /// Coherent split of `from` into the given paths and amplitudes.
    pub fn split(&mut self, from: Path, to: &[(Path, C64)], label: &str) -> Result<()> {
        for b in &mut self.branches {
            let mut next = b.amps;
            for p1 in Pol::ALL {
                for p2 in Pol::ALL {
                    let a = b.amps[mode(p1, from, p2)];
                    next[mode(p1, from, p2)] = ZERO;
                    for &(path, t) in to {
                        next[mode(p1, path, p2)] += t * a;
                    }
                }
            }
            b.amps = next;
        }
        self.renormalize()?;
        self.record(label);
        Ok(())
    }

    /// Incoherent recombination: each branch becomes one branch per listed
    /// path, relabeled to `into`.
    pub fn recombine_incoherently(&mut self, paths: &[Path], into: Path, label: &str) {
        let mut next = Vec::new();
        for b in &self.branches {
            let mut rest = b.clone();
            for &path in paths {
                let mut part = Branch::empty(0.0);
                for p1 in Pol::ALL {
                    for p2 in Pol::ALL {
                        let a = b.amps[mode(p1, path, p2)];
                        part.amps[mode(p1, into, p2)] = a;
                        rest.amps[mode(p1, path, p2)] = ZERO;
                    }
                }
                let n = part.norm_sqr();
                if n > BRANCH_FLOOR {
                    part.weight = b.weight * n;
                    part.scale(1.0 / n.sqrt());
                    next.push(part);
                }
            }
            let n = rest.norm_sqr();
            if n > BRANCH_FLOOR {
                rest.weight = b.weight * n;
                rest.scale(1.0 / n.sqrt());
                next.push(rest);
            }
        }
        self.branches = next;
        self.record(label);
    }

    /// State-independent loss, e.g. keeping one output port of a beam splitter.
    pub fn attenuate(&mut self, kept: f64, label: &str) {
        self.accumulated *= kept;
        self.record(label);
    }

    fn renormalize(&mut self) -> Result<()> {
        let total: f64 = self.branches.iter().map(|b| b.weight * b.norm_sqr()).sum();
        if total <= BRANCH_FLOOR {
            return Err(Error::ZeroProbability(total));
        }
        let mut next = Vec::with_capacity(self.branches.len());
        for mut b in self.branches.drain(..) {
            let n = b.norm_sqr();
            if n * b.weight <= BRANCH_FLOOR * total {
                continue;
            }
            b.weight = b.weight * n / total;
            b.scale(1.0 / n.sqrt());
            next.push(b);
        }
        self.branches = next;
        self.accumulated *= total;
        Ok(())
    }

    /// Two-photon polarization density on one path, unnormalized if other
    /// paths carry weight.
    pub fn density_on(&self, path: Path) -> CMatrix {
        let mut rho = CMatrix::zeros(4, 4);
        for b in &self.branches {
            let v: Vec<C64> = Pol::ALL
                .iter()
                .flat_map(|&a| Pol::ALL.iter().map(move |&c| (a, c)))
                .map(|(a, c)| b.amp(a, path, c))
                .collect();
            for r in 0..4 {
                for c in 0..4 {
                    rho[(r, c)] += v[r] * v[c].conj() * b.weight;
                }
            }
        }
        rho
    }

    /// The polarization state, when every branch is on the `Main` path.
    pub fn polarization_state(&self) -> Result<DensityMatrix> {
        let rho = self.density_on(Path::Main);
        let tr = rho.trace().re;
        if (tr - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "photon 1 is not on the main path (weight {tr})"
            )));
        }
        DensityMatrix::new(2, 2, rho)
    }

    /// Unnormalized photon-2 state given photon 1 in `(p1, path)`.
    pub fn conditional_photon2(&self, p1: Pol, path: Path) -> CMatrix {
        let mut rho = CMatrix::zeros(2, 2);
        for b in &self.branches {
            for r in Pol::ALL {
                for c in Pol::ALL {
                    rho[(r.index(), c.index())] += b.amp(p1, path, r) * b.amp(p1, path, c).conj() * b.weight;
                }
            }
        }
        rho
    }
}

/// `q(θ1) = 2sin²2θ1 / (1 + 2sin²2θ1)`
pub fn q_of_theta1(theta1: f64) -> f64 {
    let s2 = (2.0 * theta1).sin().powi(2);
    2.0 * s2 / (1.0 + 2.0 * s2)
}

/// Inverse of [`q_of_theta1`] on `[0, π/4]`, defined for `q ∈ [0, 2/3]`.
pub fn theta1_for_q(q: f64) -> Result<f64> {
    if !(0.0..=2.0 / 3.0 + 1e-12).contains(&q) {
        return Err(Error::InvalidParameter(format!("q = {q} outside [0, 2/3]")));
    }
    let s2 = (q / (2.0 * (1.0 - q))).min(1.0);
    Ok(s2.sqrt().asin() / 2.0)
}

/// `θ2` with `sin 2θ2 = κ`.
pub fn theta2_for_kappa(kappa: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::KappaOutOfRange(kappa));
    }
    Ok(kappa.asin() / 2.0)
}

fn check_angle(name: &str, theta: f64) -> Result<()> {
    if (-1e-12..=FRAC_PI_4 + 1e-12).contains(&theta) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {theta} outside [0, π/4]")))
    }
}

/// The interferometer attenuating the short arm by `sin²2θ1`, applied to
/// photon 1 of `state`. Ends on the `Main` path after keeping one output
/// port of the recombining beam splitter.
pub fn noisy_channel_stage(mut state: HybridState, theta1: f64) -> Result<HybridState> {
    check_angle("theta1", theta1)?;
    let h = c64(FRAC_1_SQRT_2, 0.0);
    state.split(Path::Main, &[(Path::S, h), (Path::L, h)], "BS1")?;
    state.route(
        |p, path| match (p, path) {
            (Pol::V, Path::L) => None,
            _ => Some(path),
        },
        "PBS on long arm",
    )?;
    state.route(
        |p, path| match (p, path) {
            (Pol::H, Path::S) => Some(Path::H),
            (Pol::V, Path::S) => Some(Path::V),
            _ => Some(path),
        },
        "BD1",
    )?;
    state.waveplate(&waveplate(WaveplateKind::Hwp, theta1), &[Path::H, Path::V], "HWP theta1");
    state.route(
        |p, path| match (p, path) {
            (Pol::V, Path::H) | (Pol::H, Path::V) => Some(Path::S),
            (_, Path::H) | (_, Path::V) => None,
            _ => Some(path),
        },
        "BD2",
    )?;
    state.recombine_incoherently(&[Path::S, Path::L], Path::Main, "BS2");
    state.attenuate(0.5, "output port 1'");
    Ok(state)
}

/// Noisy channel on the ideal source: `(ρ(q), q)` with
/// `ρ(q) = q|Φ+⟩⟨Φ+| + (1−q)|HV⟩⟨HV|`.
pub fn noisy_channel(theta1: f64) -> Result<(DensityMatrix, f64)> {
    let state = noisy_channel_stage(HybridState::source(1.0)?, theta1)?;
    Ok((state.polarization_state()?, q_of_theta1(theta1)))
}

/// `diag[sin2θ2, 1]` on photon-1 polarization, with post-selection.
pub fn local_filter_stage(mut state: HybridState, theta2: f64) -> Result<HybridState> {
    check_angle("theta2", theta2)?;
    state.route(
        |p, path| match (p, path) {
            (Pol::H, Path::Main) => Some(Path::H),
            (Pol::V, Path::Main) => Some(Path::V),
            _ => Some(path),
        },
        "filter BD1",
    )?;
    state.waveplate(&waveplate(WaveplateKind::Hwp, theta2), &[Path::H], "HWP theta2 on h");
    state.waveplate(&waveplate(WaveplateKind::Hwp, FRAC_PI_4), &[Path::V], "HWP 45 on v");
    state.route(
        |p, path| match (p, path) {
            (Pol::V, Path::H) | (Pol::H, Path::V) => Some(Path::Main),
            (_, Path::H) | (_, Path::V) => None,
            _ => Some(path),
        },
        "filter BD2",
    )?;
    state.waveplate(&waveplate(WaveplateKind::Hwp, FRAC_PI_4), &[Path::Main], "HWP 45");
    Ok(state)
}

/// Move photon-1 polarization into its path, then write the input state
/// with `setting` across both paths.
pub fn prepare_teleport_input(mut state: HybridState, setting: &WaveplateSetting) -> Result<HybridState> {
    state.route(
        |p, path| match (p, path) {
            (Pol::H, Path::Main) => Some(Path::H),
            (Pol::V, Path::Main) => Some(Path::V),
            _ => Some(path),
        },
        "prep BD",
    )?;
    state.waveplate(&waveplate(WaveplateKind::Hwp, FRAC_PI_4), &[Path::V], "HWP 45 on v");
    state.waveplate(&setting.matrix(), &[Path::H, Path::V], "input waveplate");
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinalHwp {
    #[serde(rename = "22.5")]
    Deg22_5,
    #[serde(rename = "67.5")]
    Deg67_5,
}

impl FinalHwp {
    pub fn angle(self) -> f64 {
        match self {
            FinalHwp::Deg22_5 => FRAC_PI_8,
            FinalHwp::Deg67_5 => 3.0 * FRAC_PI_8,
        }
    }

    /// Correction on photon 2 for each detected `(path, polarization)`.
    pub fn correction(self, path: Path, pol: Pol) -> CMatrix {
        let zx = sigma_z() * sigma_x();
        match (self, path, pol) {
            (FinalHwp::Deg22_5, Path::M, Pol::V) | (FinalHwp::Deg67_5, Path::M, Pol::H) => CMatrix::identity(2, 2),
            (FinalHwp::Deg22_5, Path::R, Pol::H) | (FinalHwp::Deg67_5, Path::R, Pol::V) => sigma_x(),
            (FinalHwp::Deg22_5, Path::M, Pol::H) | (FinalHwp::Deg67_5, Path::M, Pol::V) => sigma_z(),
            _ => zx,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BsmMode {
    Full,
    /// Only the transmitted (H) port is detected.
    #[default]
    Partial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsmOutcome {
    pub path: Path,
    pub pol: Pol,
    pub probability: f64,
    /// Normalized photon-2 state before correction.
    pub state: CMatrix,
    pub correction: CMatrix,
}

#[derive(Debug, Clone)]
pub struct BsmResult {
    pub final_hwp: FinalHwp,
    pub outcomes: Vec<BsmOutcome>,
    pub kept_probability: f64,
    pub final_state: HybridState,
}

impl BsmResult {
    /// `Σ_k p_k C_k U† σ_k U C_k†`, unnormalized.
    pub fn corrected_sum(&self, align: Option<&CMatrix>) -> CMatrix {
        let mut out = CMatrix::zeros(2, 2);
        for o in &self.outcomes {
            let c = match align {
                Some(u) => &o.correction * u.adjoint(),
                None => o.correction.clone(),
            };
            out += (&c * &o.state * c.adjoint()).scale(o.probability);
        }
        out
    }
}

/// Bell measurement between photon-1 path and polarization.
pub fn bsm_stage(mut state: HybridState, final_hwp: FinalHwp, mode: BsmMode) -> Result<BsmResult> {
    let x = waveplate(WaveplateKind::Hwp, FRAC_PI_4);
    state.waveplate(&x, &[Path::H], "HWP 45 on h");
    state.route(
        |p, path| match (path, p) {
            (Path::H, Pol::V) | (Path::V, Pol::H) => Some(Path::M),
            (Path::H, Pol::H) => Some(Path::R),
            (Path::V, Pol::V) => Some(Path::L),
            _ => Some(path),
        },
        "BSM BD1",
    )?;
    state.waveplate(&x, &[Path::L, Path::R], "HWP 45 on l, r");
    state.waveplate(&waveplate(WaveplateKind::Hwp, 0.0), &[Path::M], "HWP 0 on m");
    state.route(
        |p, path| match (path, p) {
            (Path::M, Pol::V) | (Path::L, Pol::H) => Some(Path::M),
            (Path::R, Pol::V) | (Path::M, Pol::H) => Some(Path::R),
            (Path::L, _) | (Path::R, _) => None,
            _ => Some(path),
        },
        "BSM BD2",
    )?;
    state.waveplate(
        &waveplate(WaveplateKind::Hwp, final_hwp.angle()),
        &[Path::M, Path::R],
        "final HWP",
    );

    let pols: &[Pol] = match mode {
        BsmMode::Full => &Pol::ALL,
        BsmMode::Partial => &[Pol::H],
    };
    let mut outcomes = Vec::new();
    for path in [Path::M, Path::R] {
        for &pol in pols {
            let sigma = state.conditional_photon2(pol, path);
            let p = sigma.trace().re;
            let normalized = if p > BRANCH_FLOOR { sigma.unscale(p) } else { sigma };
            outcomes.push(BsmOutcome {
                path,
                pol,
                probability: p,
                state: normalized,
                correction: final_hwp.correction(path, pol),
            });
        }
    }
    let kept_probability = outcomes.iter().map(|o| o.probability).sum();
    Ok(BsmResult {
        final_hwp,
        outcomes,
        kept_probability,
        final_state: state,
    })
}

/// Bob's corrected output for one prepared input, with the detection
/// probability per run. Partial mode pools one run at each final HWP
/// setting, which together detect all four outcomes.
pub fn teleport_output(prepared: &HybridState, mode: BsmMode, align: Option<&CMatrix>) -> Result<(CMatrix, f64)> {
    match mode {
        BsmMode::Full => {
            let r = bsm_stage(prepared.clone(), FinalHwp::Deg22_5, BsmMode::Full)?;
            Ok((r.corrected_sum(align).unscale(r.kept_probability), r.kept_probability))
        }
        BsmMode::Partial => {
            let a = bsm_stage(prepared.clone(), FinalHwp::Deg22_5, BsmMode::Partial)?;
            let b = bsm_stage(prepared.clone(), FinalHwp::Deg67_5, BsmMode::Partial)?;
            let kept = a.kept_probability + b.kept_probability;
            let out = (a.corrected_sum(align) + b.corrected_sum(align)).unscale(kept);
            Ok((out, kept / 2.0))
        }
    }
}

/// Optical teleportation of photon-1 polarization to photon 2, using the
/// polarization state of `shared` carried into the path of photon 1.
#[derive(Debug, Clone)]
pub struct OpticalTeleporter {
    outputs: [CMatrix; 4],
    detection: [f64; 4],
}

impl OpticalTeleporter {
    pub fn new(shared: &HybridState, mode: BsmMode, align: Option<&CMatrix>) -> Result<Self> {
        let mut outputs = tomography_inputs().map(|_| CMatrix::zeros(2, 2));
        let mut detection = [0.0; 4];
        for (k, input) in NamedInput::ALL.iter().enumerate() {
            let prepared = prepare_teleport_input(shared.clone(), &input.setting())?;
            let (out, p) = teleport_output(&prepared, mode, align)?;
            outputs[k] = out;
            detection[k] = p;
        }
        Ok(Self { outputs, detection })
    }

    /// Outputs for `|H⟩, |V⟩, |+⟩, |R⟩`.
    pub fn outputs(&self) -> &[CMatrix; 4] {
        &self.outputs
    }

    /// Per-run detection probability for each named input.
    pub fn detection(&self) -> [f64; 4] {
        self.detection
    }
}

impl QubitChannel for OpticalTeleporter {
    /// Linear extension from the four prepared inputs.
    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let [e0, e1, ep, er] = &self.outputs;
        let ex = ep.scale(2.0) - e0 - e1;
        let ey = er.scale(2.0) - e0 - e1;
        let e01 = (&ex + &ey * I).scale(0.5);
        let e10 = (ex - ey * I).scale(0.5);
        e0 * rho[(0, 0)] + e1 * rho[(1, 1)] + e01 * rho[(0, 1)] + e10 * rho[(1, 0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpticalFilter {
    #[default]
    None,
    Kappa,
    KappaPrime,
}

impl std::str::FromStr for OpticalFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "kappa" => Ok(Self::Kappa),
            "kappa_prime" | "kappa-prime" => Ok(Self::KappaPrime),
            other => Err(Error::InvalidParameter(format!("unknown filter {other:?}"))),
        }
    }
}

impl OpticalFilter {
    /// Attenuation for `ρ(q)` at d = 2. `κ` is clamped to 1 within
    /// slack at `q = 2/3`.
    pub fn kappa(self, q: f64) -> Result<Option<f64>> {
        match self {
            OpticalFilter::None => Ok(None),
            OpticalFilter::Kappa => {
                let k = rank2_kappa(2, q);
                if k > 1.0 + KAPPA_SLACK {
                    Err(Error::KappaOutOfRange(k))
                } else {
                    Ok(Some(k.min(1.0)))
                }
            }
            OpticalFilter::KappaPrime => Ok(Some(rank2_kappa_prime(2, q))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub filter: OpticalFilter,
    pub bsm: BsmMode,
    /// Correct with `C_k U†`, `U` the FEF-optimal rotation of the shared state.
    pub align: bool,
    pub shots: Option<u64>,
    pub seed: u64,
    /// Coincidence rate that post-selection probabilities scale.
    pub base_rate: f64,
    /// Source visibility; `None` is the ideal `|Ψ+⟩`.
    pub source_visibility: Option<f64>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            filter: OpticalFilter::None,
            bsm: BsmMode::Partial,
            align: false,
            shots: None,
            seed: 0,
            base_rate: 1.0,
            source_visibility: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedRates {
    /// After the noisy channel.
    pub shared: f64,
    /// After the filter; equal to `shared` without a filter.
    pub filtered: f64,
    /// Per BSM run.
    pub teleported: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub theta1: f64,
    pub q: f64,
    pub theta2: Option<f64>,
    pub kappa: Option<f64>,
    pub shared_before: DensityMatrix,
    pub shared: DensityMatrix,
    pub fef_before: f64,
    pub fef_after: f64,
    pub p_filter: f64,
    pub chi: ProcessMatrix,
    pub process_fidelity: f64,
    pub f: f64,
    pub rates: PredictedRates,
}

/// Source, noisy channel, optional filter, and teleportation with process
/// tomography over the four named inputs.
pub fn end_to_end(theta1: f64, opts: &ExperimentOptions) -> Result<ExperimentResult> {
    let source = HybridState::source(opts.source_visibility.unwrap_or(1.0))?;
    let noisy = noisy_channel_stage(source, theta1)?;
    let q = q_of_theta1(theta1);
    let shared_before = noisy.polarization_state()?;
    let p_noisy = noisy.accumulated_postselect_prob();

    let kappa = opts.filter.kappa(q)?;
    let (theta2, filtered) = match kappa {
        Some(k) => {
            let t2 = theta2_for_kappa(k)?;
            (Some(t2), local_filter_stage(noisy, t2)?)
        }
        None => (None, noisy),
    };
    let shared = filtered.polarization_state()?;
    let p_filter = filtered.accumulated_postselect_prob() / p_noisy;

    let align = if opts.align {
        Some(fef_two_qubit(&shared)?.optimizer_unitary)
    } else {
        None
    };
    let teleporter = OpticalTeleporter::new(&filtered, opts.bsm, align.as_ref())?;
    let chi = match opts.shots {
        None => chi_from_outputs(teleporter.outputs()),
        Some(0) => return Err(Error::InvalidParameter("shots must be positive".into())),
        Some(n) => {
            let mut k = 0u64;
            let sampled = teleporter.outputs().clone().map(|out| {
                let mut rng = stream_rng(opts.seed, k);
                k += 1;
                sample_state(&out, n, &mut rng)
            });
            chi_from_outputs(&sampled)
        }
    };
    let fp = process_fidelity(&chi);
    let detection = teleporter.detection().iter().sum::<f64>() / 4.0;
    let acc = filtered.accumulated_postselect_prob();
    Ok(ExperimentResult {
        theta1,
        q,
        theta2,
        kappa,
        fef_before: fef_two_qubit_magic(&shared_before)?,
        fef_after: fef_two_qubit_magic(&shared)?,
        shared_before,
        shared,
        p_filter,
        chi,
        process_fidelity: fp,
        f: avg_fidelity_from_process(fp),
        rates: PredictedRates {
            shared: opts.base_rate * p_noisy,
            filtered: opts.base_rate * acc,
            teleported: opts.base_rate * acc * detection,
        },
    })
}

/// One row of an experiment sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub q: f64,
    pub theta1: f64,
    pub filter: OpticalFilter,
    pub kappa: Option<f64>,
    #[serde(rename = "F_before")]
    pub f_before: f64,
    #[serde(rename = "F_after")]
    pub f_after: f64,
    #[serde(rename = "F_p")]
    pub f_p: f64,
    pub f: f64,
    pub p_success: f64,
    pub rate_shared: f64,
    pub rate_filtered: f64,
}

/// [`end_to_end`] over a list of `q` values, in parallel. Each row draws
/// shot noise from its own seed derived from `opts.seed` and the row index.
pub fn experiment_sweep(qs: &[f64], opts: &ExperimentOptions) -> Result<Vec<ExperimentRow>> {
    let angles = qs.iter().map(|&q| theta1_for_q(q)).collect::<Result<Vec<_>>>()?;
    sweep_rows(qs, &angles, opts)
}

/// Like [`experiment_sweep`], but driven by `θ1` angles in radians.
pub fn experiment_sweep_angles(theta1s: &[f64], opts: &ExperimentOptions) -> Result<Vec<ExperimentRow>> {
    let qs: Vec<f64> = theta1s.iter().map(|&t| q_of_theta1(t)).collect();
    sweep_rows(&qs, theta1s, opts)
}

fn sweep_rows(qs: &[f64], angles: &[f64], opts: &ExperimentOptions) -> Result<Vec<ExperimentRow>> {
    qs.par_iter()
        .zip(angles)
        .enumerate()
        .map(|(k, (&q, &theta1))| {
            let row_opts = ExperimentOptions {
                seed: derive_seed(opts.seed, k as u64),
                ..*opts
            };
            let r = end_to_end(theta1, &row_opts)?;
            Ok(ExperimentRow {
                q,
                theta1,
                filter: opts.filter,
                kappa: r.kappa,
                f_before: r.fef_before,
                f_after: r.fef_after,
                f_p: r.process_fidelity,
                f: r.f,
                p_success: r.p_filter,
                rate_shared: r.rates.shared,
                rate_filtered: r.rates.filtered,
            })
        })
        .collect()
}

/// The ideal-protocol channel on the same shared state, for comparison.
pub fn reference_channel(result: &ExperimentResult, align: bool) -> Result<TeleportChannel> {
    if align {
        TeleportChannel::fef_aligned(result.shared.clone())
    } else {
        TeleportChannel::new(result.shared.clone())
    }
}
