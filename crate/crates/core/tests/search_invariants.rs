mod common;

use ddtqw::search::{
    build_search_instance, default_steps, localized_mode, localized_mode_check, run_batch,
    run_search, search_operator, SearchInstance,
};
use ddtqw::{eigendecompose, Execution, Topology, C64};
use nalgebra::{DMatrix, DVector};

fn instance(side: usize, central: (usize, usize), target: (usize, usize)) -> SearchInstance {
    build_search_instance(side, central, target, 1.0).unwrap()
}

#[test]
fn default_waiting_time() {
    assert_eq!(default_steps(11), 24);
    assert_eq!(default_steps(5), 9);
}

#[test]
fn target_accumulates_intensity() {
    for (side, central, target) in [(11, (6, 6), (10, 10)), (7, (3, 3), (6, 0))] {
        let inst = instance(side, central, target);
        let full = run_search(&inst).unwrap();
        let t = inst.steps();
        assert!(full.target_series[t - 1] > full.target_series[t / 2 - 1]);
        assert!(full.found(&inst), "L={side}: detected {:?}", full.detected);
    }
}

#[test]
fn detection_holds_past_the_waiting_time() {
    let inst = instance(11, (6, 6), (10, 10));
    for steps in inst.steps()..=inst.steps() + 6 {
        let r = run_search(&inst.clone().with_steps(steps)).unwrap();
        assert_eq!(r.detected, (10, 10), "steps={steps}");
    }
}

#[test]
fn intensity_scales_with_amplitude_squared() {
    let a = build_search_instance(11, (6, 6), (10, 10), 1.0).unwrap();
    let b = build_search_instance(11, (6, 6), (10, 10), 3.0).unwrap();
    let (ra, rb) = (run_search(&a).unwrap(), run_search(&b).unwrap());
    for (x, y) in ra.intensity_map.iter().zip(&rb.intensity_map) {
        assert!((9.0 * x - y).abs() <= 1e-10 * (1.0 + y));
    }
    assert_eq!(ra.detected, rb.detected);
}

#[test]
fn translating_the_marked_pair_translates_the_map() {
    let side = 9;
    let (dx, dy) = (3, 5);
    let a = instance(side, (2, 2), (6, 7));
    let b = instance(
        side,
        ((2 + dx) % side, (2 + dy) % side),
        ((6 + dx) % side, (7 + dy) % side),
    );
    let (ra, rb) = (run_search(&a).unwrap(), run_search(&b).unwrap());
    let topo = Topology::torus(side, side).unwrap();
    for v in 0..topo.vertex_count() {
        let (x, y) = topo.coords(v);
        let w = topo.vertex_at((x + dx) % side, (y + dy) % side).unwrap();
        assert!((ra.intensity_map[v] - rb.intensity_map[w]).abs() < 1e-9);
    }
    assert_eq!(
        rb.detected,
        ((ra.detected.0 + dx) % side, (ra.detected.1 + dy) % side)
    );
}

#[test]
fn batch_matches_individual_runs() {
    let insts: Vec<_> = [(1, 9), (9, 1), (2, 2), (10, 3)]
        .into_iter()
        .map(|t| instance(11, (6, 6), t))
        .collect();
    for exec in [Execution::Sequential, Execution::Parallel] {
        let batch = run_batch(&insts, exec).unwrap();
        for (inst, r) in insts.iter().zip(batch) {
            assert_eq!(r.intensity_map, run_search(inst).unwrap().intensity_map);
        }
    }
}

#[test]
fn unmarked_lattice_has_no_localization() {
    let inst = instance(7, (3, 3), (0, 5));
    let op = search_operator(7, &[]).unwrap();
    let e = eigendecompose(&op).unwrap();
    let marked = [inst.central_vertex(), inst.target_vertex()];
    let lm = localized_mode(&e, inst.topology(), &inst.injection_base(), &marked).unwrap();
    assert!((lm.fraction - 2.0 / 49.0).abs() < 1e-9, "{}", lm.fraction);
}

#[test]
fn localized_mode_matches_null_space_of_u_minus_one() {
    let inst = instance(5, (2, 2), (4, 0));
    let lm = localized_mode_check(&inst).unwrap();
    assert!(lm.frequency.abs() < 1e-8);

    // Independent route: orthonormal basis of ker(U - I) from the SVD.
    let u = inst.operator().to_dense();
    let n = u.nrows();
    let svd = (u - DMatrix::<C64>::identity(n, n)).svd(false, true);
    let v_t = svd.v_t.unwrap();
    let base = inst.injection_base();
    let mut proj = DVector::<C64>::zeros(n);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < 1e-8 {
            let row = v_t.row(i).adjoint();
            proj += &row * row.dotc(&base);
        }
    }
    assert_eq!(
        lm.multiplicity,
        svd.singular_values.iter().filter(|s| **s < 1e-8).count()
    );
    let total = proj.norm_squared();
    let topo = inst.topology();
    for v in 0..topo.vertex_count() {
        let w: f64 = (0..4).map(|c| proj[4 * v + c].norm_sqr()).sum::<f64>() / total;
        assert!((w - lm.weights[v]).abs() < 1e-8, "vertex {v}");
    }
}
