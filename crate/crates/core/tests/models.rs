use cvim::dynamics::{evolve_coherent, EvolveOptions};
use cvim::fockspace::{
    create, destroy, embed, expectation, parity_operator, product_coherent_state, FockDims,
    Operator, StateVector,
};
use cvim::ising::{brute_force_ground, npp_to_ising, spins_to_index};
use cvim::models::{
    circuit_to_model, cvim_hamiltonian, kpo_hamiltonian, qubit_annealer_hamiltonian,
    shunt_equilibrium_phase, two_kpo_normal_mode_hamiltonian, CircuitParams, DriveSchedule,
    KpoSystemParams, QubitAnnealerParams, Shunt,
};
use cvim::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn kpo_vacuum_is_static_eigenstate() {
    let h = kpo_hamiltonian(-1.0, 0.7, 8).unwrap();
    let dims = h.dims().clone();
    let out = h.static_part.apply(&StateVector::vacuum(&dims)).unwrap();
    assert!(out.norm() < 1e-14);
    let one = StateVector::fock(&dims, &[1]).unwrap();
    assert!((expectation(&one, &h.static_part).unwrap().re + 1.0).abs() < 1e-14);
}

#[test]
fn kpo_needs_four_levels() {
    assert!(kpo_hamiltonian(-1.0, 0.7, 3).is_err());
}

#[test]
fn single_mode_cvim_equals_kpo() {
    let params = KpoSystemParams::uniform(-1.0, 0.7, 0.0, DMatrix::zeros(1, 1)).unwrap();
    let dims = FockDims::uniform(1, 9).unwrap();
    let h = cvim_hamiltonian(&params, &dims).unwrap();
    let k = kpo_hamiltonian(-1.0, 0.7, 9).unwrap();
    assert!((&h.static_part - &k.static_part).norm() < 1e-12);
    assert!((&h.total_drive() - &k.total_drive()).norm() < 1e-12);
}

#[test]
fn fig2_pair_is_hermitian_and_conserves_parity() {
    let params = KpoSystemParams::pair(-1.0, -0.5, 0.7, 0.0).unwrap();
    let dims = FockDims::uniform(2, 10).unwrap();
    let h = cvim_hamiltonian(&params, &dims).unwrap();
    assert!(h.hermiticity_error() < 1e-10);
    let p = parity_operator(&dims);
    for eps in [0.0, 0.25, 1.0, 2.0] {
        assert!(h.at(eps).commutator(&p).norm() < 1e-10);
    }
}

#[test]
fn decoupled_pair_keeps_product_states() {
    let params = KpoSystemParams::pair(-1.0, 0.0, 0.7, 0.0).unwrap();
    let dims = FockDims::uniform(2, 8).unwrap();
    let h = cvim_hamiltonian(&params, &dims).unwrap();
    let single = kpo_hamiltonian(-1.0, 0.7, 8).unwrap();
    let one = FockDims::uniform(1, 8).unwrap();
    let schedule = DriveSchedule::up(0.6, 5.0).unwrap();
    let psi0 = product_coherent_state(&dims, &[Complex64::new(0.4, 0.0), Complex64::new(0.0, 0.3)])
        .unwrap();
    let a0 = product_coherent_state(&one, &[Complex64::new(0.4, 0.0)]).unwrap();
    let b0 = product_coherent_state(&one, &[Complex64::new(0.0, 0.3)]).unwrap();
    let opts = EvolveOptions::default();
    let joint = evolve_coherent(&h, &schedule, &psi0, &[5.0], &[], opts).unwrap();
    let a = evolve_coherent(&single, &schedule, &a0, &[5.0], &[], opts).unwrap();
    let b = evolve_coherent(&single, &schedule, &b0, &[5.0], &[], opts).unwrap();
    let product = a.final_state.tensor(&b.final_state);
    assert!((joint.final_state.fidelity(&product) - 1.0).abs() < 1e-7);
}

#[test]
fn normal_mode_form_is_unitarily_equivalent() {
    let (delta, j, k) = (-1.0, -0.5, 0.7);
    let dims = FockDims::uniform(2, 12).unwrap();
    let lab = cvim_hamiltonian(&KpoSystemParams::pair(delta, j, k, 0.0).unwrap(), &dims).unwrap();
    let normal = two_kpo_normal_mode_hamiltonian(delta, j, k, &dims, true).unwrap();
    // both conserve total photon number at ε = 0; compare the N ≤ 6 blocks,
    // which are untouched by truncation
    let n_tot = {
        let a = embed(&destroy(12).unwrap(), 0, &dims).unwrap();
        let b = embed(&destroy(12).unwrap(), 1, &dims).unwrap();
        &(&a.adjoint() * &a) + &(&b.adjoint() * &b)
    };
    let low_block = |h: &Operator| -> Vec<f64> {
        let keep: Vec<usize> = (0..dims.total())
            .filter(|&i| dims.occupations_of(i).iter().sum::<usize>() <= 6)
            .collect();
        let dense = h.to_dense();
        let sub = DMatrix::from_fn(keep.len(), keep.len(), |r, c| dense[(keep[r], keep[c])]);
        sorted(sub.symmetric_eigenvalues().iter().copied().collect())
    };
    assert!(lab.static_part.commutator(&n_tot).norm() < 1e-10);
    assert!(normal.static_part.commutator(&n_tot).norm() < 1e-10);
    let l = low_block(&lab.static_part);
    let n = low_block(&normal.static_part);
    for (x, y) in l.iter().zip(&n) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn rwa_form_has_shifted_detunings() {
    let dims = FockDims::uniform(2, 6).unwrap();
    let h = two_kpo_normal_mode_hamiltonian(-1.0, -0.5, 0.7, &dims, false).unwrap();
    let d1 = StateVector::fock(&dims, &[1, 0]).unwrap();
    let c1 = StateVector::fock(&dims, &[0, 1]).unwrap();
    assert!((expectation(&d1, &h.static_part).unwrap().re - (-1.5)).abs() < 1e-12);
    assert!((expectation(&c1, &h.static_part).unwrap().re - (-0.5)).abs() < 1e-12);
}

#[test]
fn normal_modes_decouple_without_kerr() {
    let dims = FockDims::uniform(2, 6).unwrap();
    let h = two_kpo_normal_mode_hamiltonian(-1.0, -0.5, 0.0, &dims, true).unwrap();
    let d = embed(&destroy(6).unwrap(), 0, &dims).unwrap();
    let c = embed(&destroy(6).unwrap(), 1, &dims).unwrap();
    let nd = &d.adjoint() * &d;
    let nc = &c.adjoint() * &c;
    let expect = &nd.scale(-1.5) + &nc.scale(-0.5);
    assert!((&h.static_part - &expect).norm() < 1e-12);
}

#[test]
fn qubit_ising_diagonal_matches_oracle() {
    let ising = npp_to_ising(&[4, 5, 6, 7]).unwrap();
    let params = QubitAnnealerParams::new(ising.cost.clone(), 6.0, 600.0, 0.0).unwrap();
    let h = qubit_annealer_hamiltonian(&params).unwrap();
    let dense = h.static_part.to_dense();
    for bits in 0..16usize {
        let s: Vec<i8> = (0..4)
            .map(|q| if bits >> (3 - q) & 1 == 1 { -1 } else { 1 })
            .collect();
        assert_eq!(spins_to_index(&s), bits);
        assert!((dense[(bits, bits)].re - ising.energy(&s)).abs() < 1e-12);
    }
    let off: f64 = (0..16)
        .flat_map(|i| (0..16).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| dense[(i, j)].norm())
        .sum();
    assert_eq!(off, 0.0);
}

#[test]
fn qubit_initial_state_is_all_minus() {
    let ising = npp_to_ising(&[4, 5, 6, 7]).unwrap();
    let params = QubitAnnealerParams::new(ising.cost, 6.0, 600.0, 0.0).unwrap();
    let h = qubit_annealer_hamiltonian(&params).unwrap();
    let ground = cvim::harness::qubit_initial_state(&h, 6.0).unwrap();
    let minus = Complex64::new(0.25, 0.0);
    let signs: Vec<Complex64> = (0..16usize)
        .map(|k| {
            if k.count_ones() % 2 == 0 {
                minus
            } else {
                -minus
            }
        })
        .collect();
    let target = StateVector::new(FockDims::qubits(4).unwrap(), signs).unwrap();
    assert!(ground.fidelity(&target) > 0.99);
}

#[test]
fn qubit_capacity_limit() {
    let cost = DMatrix::from_element(13, 13, 1.0) - DMatrix::identity(13, 13);
    let params = QubitAnnealerParams::new(cost, 6.0, 10.0, 0.0).unwrap();
    assert!(matches!(
        qubit_annealer_hamiltonian(&params),
        Err(Error::Capacity(_))
    ));
}

#[test]
fn ground_of_coupling_matches_oracle_sign() {
    let ising = npp_to_ising(&[4, 5, 6, 7]).unwrap();
    let j = cvim::ising::cvim_coupling(&ising);
    let ground = brute_force_ground(&ising).unwrap();
    let best = (0..16usize)
        .map(|bits| {
            (0..4)
                .map(|q| if bits >> q & 1 == 1 { -1i8 } else { 1 })
                .collect::<Vec<_>>()
        })
        .max_by(|a, b| {
            let f = |s: &Vec<i8>| -> f64 {
                (0..4)
                    .flat_map(|n| (0..4).map(move |m| (n, m)))
                    .map(|(n, m)| j[(n, m)] * f64::from(s[n] * s[m]))
                    .sum()
            };
            f(a).total_cmp(&f(b))
        })
        .unwrap();
    assert!(ground.contains(&best));
    assert!(j
        .iter()
        .enumerate()
        .all(|(k, &v)| if k % 5 == 0 { v == 0.0 } else { v < 0.0 }));
}

fn transmons(shunt: Shunt) -> CircuitParams {
    CircuitParams {
        charging_energy: vec![0.2, 0.2],
        josephson_energy: vec![50.0, 50.0],
        flux_dc: vec![0.0, 0.0],
        flux_ac: vec![0.01, 0.01],
        shunt,
        detuning: -1.0,
        loss: 0.0,
    }
}

#[test]
fn circuit_frequency_and_kerr() {
    let d = transmons(Shunt::Inductor { inductance: 100.0 })
        .derive()
        .unwrap();
    assert!((d.frequency[0] - 4.0 * 10f64.sqrt()).abs() < 1e-12);
    assert!((d.frequency[0] - 12.649).abs() < 1e-3);
    assert!((d.kerr[0] - 0.1).abs() < 1e-15);
}

#[test]
fn inductive_shunt_is_ferromagnetic() {
    let p = circuit_to_model(&transmons(Shunt::Inductor { inductance: 100.0 })).unwrap();
    assert!(p.coupling[(0, 1)] > 0.0 && p.coupling[(1, 0)] > 0.0);
}

#[test]
fn junction_shunt_is_antiferromagnetic_and_bounded() {
    let mut c = transmons(Shunt::Junction {
        josephson_energy: 5.0,
    });
    c.flux_dc = vec![0.3, 0.3];
    let p = circuit_to_model(&c).unwrap();
    assert!(p.coupling[(0, 1)] < 0.0);
    c.shunt = Shunt::Junction {
        josephson_energy: 25.0,
    };
    assert!(matches!(circuit_to_model(&c), Err(Error::Stability(_))));
}

#[test]
fn shunt_phase_below_and_above_criticality() {
    assert_eq!(shunt_equilibrium_phase(0.2, 4).unwrap(), 0.0);
    assert_eq!(shunt_equilibrium_phase(0.25, 4).unwrap(), 0.0);
    let phi = shunt_equilibrium_phase(0.3, 4).unwrap();
    assert!(phi > 0.0 && phi < std::f64::consts::PI / 4.0);
    assert!((phi - 0.3 * (4.0 * phi).sin()).abs() < 1e-10);
}

#[test]
fn cvim_rejects_broken_couplings() {
    let mut j = DMatrix::from_element(2, 2, -0.2);
    j[(0, 0)] = 0.0;
    j[(1, 1)] = 0.0;
    j[(0, 1)] = -0.3;
    assert!(KpoSystemParams::uniform(-1.0, 0.7, 0.0, j).is_err());
    assert!(KpoSystemParams::pair(-1.0, -0.5, -0.7, 0.0).is_err());
    assert!(KpoSystemParams::pair(-1.0, -0.5, 0.7, -0.1).is_err());
}

#[test]
fn drives_are_two_photon() {
    let dims = FockDims::uniform(1, 6).unwrap();
    let h = kpo_hamiltonian(-1.0, 0.7, 6).unwrap();
    let a = destroy(6).unwrap();
    let ad = create(6).unwrap();
    let expect = &(&a * &a) + &(&ad * &ad);
    assert_eq!(h.total_drive().to_dense(), expect.to_dense());
    assert_eq!(h.dims(), &dims);
}

#[test]
fn ramps_are_linear() {
    let up = DriveSchedule::up(2.0, 400.0).unwrap();
    let down = DriveSchedule::down(6.0, 600.0).unwrap();
    assert!((up.epsilon(50.0) - 0.25).abs() < 1e-15);
    assert!((down.epsilon(150.0) - 4.5).abs() < 1e-15);
    assert!((up.time_of(0.25).unwrap() - 50.0).abs() < 1e-12);
    assert!((up.inverse_ramp_rate() - 200.0).abs() < 1e-12);
    assert!(DriveSchedule::up(0.0, 1.0).is_err());
    assert!(DriveSchedule::up(1.0, -1.0).is_err());
}
