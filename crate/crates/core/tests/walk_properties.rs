mod common;

use common::{random_operator, random_vector, reflecting_line, superposition};
use ddtqw::{
    eigendecompose, evolve_step, run_driven_walk, run_driven_walk_with, AmplitudeState, Boundary,
    Coin, CoinAssignment, Execution, InjectionSchedule, Topology, WalkOperator, C64,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn walk_preserves_norm(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_operator(16, 7, &mut rng);
        let a = random_vector(op.mode_count(), &mut rng);
        let ua = op.apply(&a);
        prop_assert!((ua.norm() - a.norm()).abs() <= 1e-10 * a.norm());
    }

    #[test]
    fn driven_walk_is_a_superposition(seed in any::<u64>(), phi in -PI..PI, steps in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_operator(8, 4, &mut rng);
        let base = random_vector(op.mode_count(), &mut rng);
        let schedule = InjectionSchedule::new(base, phi, steps);
        let record = run_driven_walk(&op, &schedule, None).unwrap();
        let injections: Vec<_> = (1..=steps).map(|k| schedule.injection(k)).collect();
        let expect = superposition(&op.to_dense(), &injections, steps);
        let got = record.final_state.amplitudes();
        prop_assert!((got - &expect).norm() <= 1e-9 * expect.norm().max(1.0));
    }

    #[test]
    fn linear_in_the_injection(seed in any::<u64>(), phi in -PI..PI) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_operator(8, 4, &mut rng);
        let a = random_vector(op.mode_count(), &mut rng);
        let b = random_vector(op.mode_count(), &mut rng);
        let z = C64::new(0.3, -1.7);
        let run = |v: DVector<C64>| {
            run_driven_walk(&op, &InjectionSchedule::new(v, phi, 12), None)
                .unwrap()
                .final_state
                .into_amplitudes()
        };
        let lhs = run(&a + &b * z);
        let rhs = run(a) + run(b) * z;
        prop_assert!((&lhs - &rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn reflecting_line_never_crosses_the_seam(seed in any::<u64>(), n in 3usize..16, phi in -PI..PI) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = reflecting_line(n, &mut rng);
        // Drive the interior only: an end vertex's X coin sends injected
        // amplitude straight out through the wall.
        let mut base = random_vector(op.mode_count(), &mut rng);
        for m in [0, 1, 2 * n - 2, 2 * n - 1] {
            base[m] = C64::new(0.0, 0.0);
        }
        let record = run_driven_walk(&op, &InjectionSchedule::new(base, phi, 64), None).unwrap();
        prop_assert_eq!(record.wrap_leak, Some(0.0));
        prop_assert!(record.check_boundary(0.0).is_ok());
    }
}

#[test]
fn undriven_walk_returns_to_start() {
    // U^-1 = U^dagger: stepping forward then applying the adjoint recovers
    // the initial state.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let op = random_operator(10, 5, &mut rng);
        let a0 = random_vector(op.mode_count(), &mut rng);
        let mut state = AmplitudeState::new(*op.topology(), a0.clone(), 0).unwrap();
        for _ in 0..20 {
            state = evolve_step(&state, &op).unwrap();
        }
        let ud = op.to_dense().adjoint();
        let mut back = state.into_amplitudes();
        for _ in 0..20 {
            back = &ud * back;
        }
        assert!((back - a0).norm() < 1e-10);
    }
}

#[test]
fn zero_injection_stays_vacuum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let op = random_operator(6, 3, &mut rng);
    let schedule = InjectionSchedule::new(DVector::zeros(op.mode_count()), 0.4, 25);
    let record = run_driven_walk(&op, &schedule, None).unwrap();
    assert!(record.total_intensity().iter().all(|&i| i == 0.0));
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let topology = Topology::torus(30, 30).unwrap();
    let op = common::haar_operator(topology, true, &mut rng);
    assert!(op.mode_count() > 2048);
    let base = random_vector(op.mode_count(), &mut rng);
    let schedule = InjectionSchedule::new(base, 0.2, 10);
    let seq = run_driven_walk_with(&op, &schedule, None, Execution::Sequential).unwrap();
    let par = run_driven_walk_with(&op, &schedule, None, Execution::Parallel).unwrap();
    assert_eq!(seq.final_state.amplitudes(), par.final_state.amplitudes());
}

#[test]
fn identity_coin_cycle_has_circulant_spectrum() {
    // With the identity coin the R and L sectors each shift rigidly round
    // the cycle, so the spectrum is the n-th roots of unity twice over.
    let n = 8;
    let topology = Topology::line(n, Boundary::Cyclic).unwrap();
    let coins = CoinAssignment::uniform(topology, Coin::identity(2)).unwrap();
    let op = WalkOperator::build(topology, &coins, false).unwrap();
    let e = eigendecompose(&op).unwrap();
    let mut expect: Vec<f64> = (0..n)
        .flat_map(|k| {
            let w = ddtqw::wrap_phase(2.0 * PI * k as f64 / n as f64);
            [w, w]
        })
        .collect();
    expect.sort_by(f64::total_cmp);
    for (got, want) in e.frequencies().iter().zip(&expect) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}
