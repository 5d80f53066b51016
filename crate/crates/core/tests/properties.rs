use cvim::dynamics::{oscillator_observables, IntegrationStats, Probe, Series, TrajectoryRecord};
use cvim::fockspace::{
    cat_state, create, destroy, embed, expectation, parity_operator, FockDims, Operator,
    StateVector,
};
use cvim::ising::{brute_force_ground, npp_to_ising, success_cvim, IsingProblem};
use cvim::models::{
    cvim_hamiltonian, qubit_annealer_hamiltonian, KpoSystemParams, QubitAnnealerParams,
};
use cvim::semiclassical::{
    bifurcation_thresholds, classical_rhs, steady_amplitude, MeanFieldState,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn symmetric(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            m[(i, j)] = entries[k];
            m[(j, i)] = entries[k];
            k += 1;
        }
    }
    m
}

fn cost_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..=7).prop_flat_map(|n| {
        prop::collection::vec(-2.0f64..2.0, n * (n - 1) / 2).prop_map(move |e| symmetric(n, &e))
    })
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn record_of(state: &StateVector) -> TrajectoryRecord {
    let observables = oscillator_observables(state.dims())
        .unwrap()
        .into_iter()
        .map(|o| match o.probe {
            Probe::Expectation(op) => Series {
                name: o.name,
                real: false,
                values: vec![expectation(state, &op).unwrap()],
            },
            Probe::Fidelity(_) => unreachable!(),
        })
        .collect();
    TrajectoryRecord {
        sample_times: vec![0.0],
        observables,
        jumps: vec![],
        final_state: state.clone(),
        seed: 0,
        max_leakage: 0.0,
        stats: IntegrationStats::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ladder_operators_are_adjoint(dim in 2usize..40) {
        let a = destroy(dim).unwrap();
        prop_assert_eq!(a.adjoint().to_dense(), create(dim).unwrap().to_dense());
    }

    #[test]
    fn parity_commutes_with_two_photon_terms(dims in prop::collection::vec(2usize..6, 1..4), mode in 0usize..3) {
        let dims = FockDims::new(dims).unwrap();
        let mode = mode % dims.modes();
        let d = dims.as_slice()[mode];
        let a = embed(&destroy(d).unwrap(), mode, &dims).unwrap();
        let ad = a.adjoint();
        let p = parity_operator(&dims);
        for op in [&a * &a, &ad * &ad, &ad * &a] {
            prop_assert!(op.commutator(&p).norm() < 1e-10);
        }
    }

    #[test]
    fn embedding_preserves_spectra(
        dims in prop::collection::vec(2usize..5, 1..4),
        mode in 0usize..3,
        seed in prop::collection::vec(-1.0f64..1.0, 32),
    ) {
        let dims = FockDims::new(dims).unwrap();
        let mode = mode % dims.modes();
        let d = dims.as_slice()[mode];
        let m = DMatrix::from_fn(d, d, |i, j| {
            let (lo, hi) = (i.min(j), i.max(j));
            let re = seed[(lo * 5 + hi) % 32];
            let im = if i == j { 0.0 } else if i < j { seed[(hi * 7 + lo) % 32] } else { -seed[(hi * 7 + lo) % 32] };
            Complex64::new(re, im)
        });
        let single = Operator::from_dense(FockDims::uniform(1, d).unwrap(), &m).unwrap();
        let full = embed(&single, mode, &dims).unwrap();
        let local = single.hermitian_eigenvalues();
        let multiplicity = dims.total() / d;
        let expect = sorted(local.iter().flat_map(|&l| std::iter::repeat_n(l, multiplicity)).collect());
        let got = sorted(full.hermitian_eigenvalues());
        prop_assert_eq!(got.len(), expect.len());
        for (x, y) in got.iter().zip(&expect) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn opposite_parity_cats_are_orthogonal(re in 0.3f64..1.5, im in -1.0f64..1.0, flip in any::<bool>()) {
        let dims = FockDims::uniform(2, 20).unwrap();
        let a = Complex64::new(re, im);
        let b = if flip { -a } else { a };
        let plus = cat_state(&dims, &[a, b], 1).unwrap();
        let minus = cat_state(&dims, &[a, b], -1).unwrap();
        prop_assert!(plus.inner(&minus).norm() < 1e-10);
        let p = parity_operator(&dims);
        prop_assert!((expectation(&plus, &p).unwrap().re - 1.0).abs() < 1e-8);
        prop_assert!((expectation(&minus, &p).unwrap().re + 1.0).abs() < 1e-8);
    }

    #[test]
    fn oscillator_hamiltonians_are_hermitian_and_conserve_parity(
        detuning in -3.0f64..-1.0,
        coupling in -0.9f64..0.9,
        kerr in 0.1f64..1.0,
        eps in 0.0f64..3.0,
        dim in 3usize..7,
    ) {
        let params = KpoSystemParams::pair(detuning, coupling, kerr, 0.0).unwrap();
        let dims = FockDims::uniform(2, dim.max(4)).unwrap();
        let h = cvim_hamiltonian(&params, &dims).unwrap();
        prop_assert!(h.hermiticity_error() < 1e-10);
        prop_assert!(h.at(eps).commutator(&parity_operator(&dims)).norm() < 1e-10);
    }

    #[test]
    fn qubit_hamiltonians_are_hermitian(cost in cost_matrix(), eps in 0.0f64..6.0) {
        let params = QubitAnnealerParams::new(cost, 6.0, 10.0, 0.0).unwrap();
        let h = qubit_annealer_hamiltonian(&params).unwrap();
        prop_assert!(h.hermiticity_error() < 1e-10);
        prop_assert!(h.at(eps).hermiticity_error() < 1e-10);
    }

    #[test]
    fn ground_set_is_flip_closed(cost in cost_matrix()) {
        let p = IsingProblem::from_matrix(cost).unwrap();
        let g = brute_force_ground(&p).unwrap();
        for s in &g.configs {
            let flipped: Vec<i8> = s.iter().map(|v| -v).collect();
            prop_assert!(g.contains(&flipped));
            prop_assert!((p.energy(s) - p.energy(&flipped)).abs() < 1e-12);
            prop_assert!((p.energy(s) - g.energy).abs() < 1e-9);
        }
    }

    #[test]
    fn positive_scaling_keeps_the_argmin(cost in cost_matrix(), factor in 1e-3f64..1e3) {
        let p = IsingProblem::from_matrix(cost).unwrap();
        let a = brute_force_ground(&p).unwrap();
        let b = brute_force_ground(&p.scaled(factor)).unwrap();
        prop_assert_eq!(a.configs, b.configs);
    }

    #[test]
    fn partition_minimizers_are_balanced_signings(assets in prop::collection::vec(1u64..30, 2..8)) {
        let g = brute_force_ground(&npp_to_ising(&assets).unwrap()).unwrap();
        let n = assets.len();
        let imbalance = |bits: usize| -> i64 {
            (0..n).map(|i| if bits >> i & 1 == 1 { -(assets[i] as i64) } else { assets[i] as i64 }).sum()
        };
        let best = (0..1usize << n).map(|b| imbalance(b).pow(2)).min().unwrap();
        let mut minimizers: Vec<Vec<i8>> = (0..1usize << n)
            .filter(|&b| imbalance(b).pow(2) == best)
            .map(|b| (0..n).map(|i| if b >> i & 1 == 1 { -1 } else { 1 }).collect())
            .collect();
        minimizers.sort();
        prop_assert_eq!(g.configs, minimizers);
    }

    #[test]
    fn steady_amplitude_is_stationary(
        detuning in -2.0f64..-0.6,
        j_mag in 0.0f64..0.5,
        kerr in 0.1f64..1.5,
        eps in 0.0f64..3.0,
        kappa in 0.0f64..0.5,
        ferro in any::<bool>(),
    ) {
        let coupling = if ferro { j_mag } else { -j_mag };
        prop_assume!(detuning + j_mag < 0.0);
        let Ok(a) = steady_amplitude(detuning, coupling, kerr, eps, kappa) else {
            return Ok(());
        };
        let params = KpoSystemParams::pair(detuning, coupling, kerr, kappa).unwrap();
        let b = if ferro { a } else { -a };
        let d = classical_rhs(&MeanFieldState::new(vec![a, b]).unwrap(), &params, eps).unwrap();
        prop_assert!(d.norm() < 1e-10 * (1.0 + a.norm_sqr()), "residual {}", d.norm());
        if kappa == 0.0 {
            prop_assert_eq!(a.arg(), 0.0);
        }
    }

    #[test]
    fn lossless_steady_phase_is_zero(detuning in -2.0f64..-0.6, eps in 1.0f64..3.0) {
        let a = steady_amplitude(detuning, -0.3, 0.5, eps, 0.0).unwrap();
        prop_assert_eq!(a.im, 0.0);
    }

    #[test]
    fn thresholds_are_ordered_and_grow_with_loss(
        detuning in -3.0f64..3.0,
        coupling in -1.0f64..1.0,
        kappa in 0.0f64..1.0,
        extra in 1e-3f64..1.0,
    ) {
        let t = bifurcation_thresholds(detuning, coupling, kappa);
        prop_assert!(t.soft <= t.hard);
        let u = bifurcation_thresholds(detuning, coupling, kappa + extra);
        prop_assert!(u.soft > t.soft && u.hard > t.hard);
    }

    #[test]
    fn cvim_readout_ignores_global_phase(theta in 0.0f64..std::f64::consts::TAU, anti in any::<bool>()) {
        let dims = FockDims::uniform(2, 16).unwrap();
        let a = Complex64::new(1.5, 0.0);
        let b = if anti { -a } else { a };
        let psi = cat_state(&dims, &[a, b], 1).unwrap();
        let phase = Complex64::from_polar(1.0, theta);
        let rotated = StateVector::new(dims.clone(), psi.amplitudes().iter().map(|x| x * phase).collect()).unwrap();
        let ground = brute_force_ground(&npp_to_ising(&[1, 1]).unwrap()).unwrap();
        let x = success_cvim(&record_of(&psi), &ground, 0.1).unwrap();
        let y = success_cvim(&record_of(&rotated), &ground, 0.1).unwrap();
        prop_assert_eq!(x, y);
        prop_assert_eq!(x, anti);
    }
}
