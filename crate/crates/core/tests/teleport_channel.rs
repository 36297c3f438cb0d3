use htplab_core::families::{rank_two, RankTwoParams};
use htplab_core::fef::{fef_two_qubit, fef_two_qubit_magic, fidelity_from_fef};
use htplab_core::qmat::{c64, complex_gaussian, CVector, haar_ket, max_abs_diff, outer, CMatrix, DensityMatrix};
use htplab_core::rng::stream_rng;
use htplab_core::teleport::*;

fn random_density(seed: u64) -> DensityMatrix {
    let mut rng = stream_rng(seed, 0);
    let g = CMatrix::from_fn(4, 4, |_, _| complex_gaussian(&mut rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(2, 2, m.unscale(tr)).unwrap()
}

/// Exact Haar average: the six Pauli eigenstates form a 2-design.
fn octahedron_average(ch: &TeleportChannel) -> f64 {
    let mut states = tomography_inputs().to_vec();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    states.push(CVector::from_vec(vec![c64(h, 0.0), c64(-h, 0.0)]));
    states.push(CVector::from_vec(vec![c64(h, 0.0), c64(0.0, -h)]));
    let total: f64 = states
        .iter()
        .map(|psi| (psi.adjoint() * ch.apply(&outer(psi)) * psi)[(0, 0)].re)
        .sum();
    total / 6.0
}

#[test]
fn channel_is_trace_preserving() {
    for seed in 0..10 {
        let ch = TeleportChannel::new(random_density(seed)).unwrap();
        let mut rng = stream_rng(seed, 7);
        for _ in 0..5 {
            let out = ch.apply(&outer(&haar_ket(2, &mut rng)));
            assert!((out.trace().re - 1.0).abs() <= 1e-12);
            assert!(out.trace().im.abs() <= 1e-12);
        }
    }
}

#[test]
fn rank_two_third_matches_fidelity_from_fef() {
    let rho = rank_two(RankTwoParams::new(2, 1.0 / 3.0).unwrap());
    let f2 = fef_two_qubit_magic(&rho).unwrap();
    let ch = TeleportChannel::new(rho).unwrap();
    let fp = process_fidelity(&qpt(&ch));
    assert!((avg_fidelity_from_process(fp) - fidelity_from_fef(f2, 2)).abs() <= 1e-9);
    let est = avg_fidelity_mc(&ch, 100_000, 11).unwrap();
    assert!((est.mean - fidelity_from_fef(f2, 2)).abs() <= 3.0 * est.stderr);
}

#[test]
fn fidelity_chain_on_random_states() {
    for seed in 0..30 {
        let rho = random_density(100 + seed);
        let f2 = fef_two_qubit_magic(&rho).unwrap();
        let naive = TeleportChannel::new(rho.clone()).unwrap();
        let chi = qpt(&naive);
        let predicted = avg_fidelity_from_process(process_fidelity(&chi));
        let est = avg_fidelity_mc(&naive, 20_000, seed).unwrap();
        assert!((octahedron_average(&naive) - predicted).abs() <= 1e-12, "seed {seed}");
        // 30 draws at 3σ would fail by chance alone every dozen runs or so.
        assert!((est.mean - predicted).abs() <= 4.0 * est.stderr, "seed {seed}");
        assert!(fidelity_from_fef(f2, 2) >= est.mean - 3.0 * est.stderr);

        let aligned = TeleportChannel::fef_aligned(rho).unwrap();
        let fp = process_fidelity(&qpt(&aligned));
        assert!((avg_fidelity_from_process(fp) - fidelity_from_fef(f2, 2)).abs() <= 1e-9, "seed {seed}");
    }
}

#[test]
fn chi_is_a_valid_process_matrix() {
    for seed in 0..20 {
        let rho = random_density(200 + seed);
        let u = fef_two_qubit(&rho).unwrap().optimizer_unitary;
        for ch in [TeleportChannel::new(rho.clone()).unwrap(), TeleportChannel::aligned(rho, &u).unwrap()] {
            let chi = qpt(&ch);
            let herm = max_abs_diff(&chi.chi, &chi.chi.adjoint());
            assert!(herm <= 1e-12);
            assert!((chi.trace() - 1.0).abs() <= 1e-10);
            assert!(chi.min_eigenvalue() >= -1e-10);
            let mut rng = stream_rng(seed, 3);
            for _ in 0..4 {
                let r = outer(&haar_ket(2, &mut rng));
                assert!(max_abs_diff(&chi.apply(&r), &ch.apply(&r)) <= 1e-10);
            }
        }
    }
}

#[test]
fn shot_noise_recovers_process_fidelity() {
    let ch = TeleportChannel::new(rank_two(RankTwoParams::new(2, 0.6).unwrap())).unwrap();
    let exact = process_fidelity(&qpt(&ch));
    let noisy = qpt_with_shots(&ch, 100_000, 42).unwrap();
    assert!((process_fidelity(&noisy) - exact).abs() <= 0.01);
    assert_eq!(noisy, qpt_with_shots(&ch, 100_000, 42).unwrap());
    assert_ne!(noisy, qpt_with_shots(&ch, 100_000, 43).unwrap());
    assert!(qpt_with_shots(&ch, 0, 0).is_err());
}
