//! Coin and shift operators, the single-step unitary `U = S C`, and the
//! driven recursion `a_t = U (a_{t-1} + alpha_t)`.
//!
//! Each step displaces first, then applies the coin, then the shift.

use nalgebra::{DMatrix, DVector};

use crate::coin::{unitarity_residual, CoinAssignment};
use crate::error::{Error, Result};
use crate::lattice::{vertex_intensities, AmplitudeState, Boundary, Direction, Topology, C64};
use crate::par::Execution;
use crate::sparse::CsrMatrix;
use crate::spectrum::EigenDecomposition;

/// Tolerance on `B B^dagger = I` for each coin block of a walk operator.
pub const OPERATOR_UNITARITY_TOL: f64 = 1e-10;

/// Block-diagonal coin operator, one block per vertex.
#[derive(Debug, Clone)]
pub struct CoinOperator {
    coins: CoinAssignment,
    blocks: Vec<DMatrix<C64>>,
}

impl CoinOperator {
    pub fn topology(&self) -> &Topology {
        self.coins.topology()
    }

    pub fn coins(&self) -> &CoinAssignment {
        &self.coins
    }

    pub fn block(&self, vertex: usize) -> &DMatrix<C64> {
        &self.blocks[vertex]
    }

    pub fn apply(&self, a: &DVector<C64>) -> DVector<C64> {
        let d = self.topology().coin_dim();
        let mut out = DVector::zeros(a.len());
        for (v, block) in self.blocks.iter().enumerate() {
            let x = a.rows(d * v, d);
            out.rows_mut(d * v, d).copy_from(&(block * x));
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.topology().coin_dim();
        let n = self.topology().mode_count();
        let mut m = DMatrix::zeros(n, n);
        for (v, block) in self.blocks.iter().enumerate() {
            m.view_mut((d * v, d * v), (d, d)).copy_from(block);
        }
        m
    }
}

pub fn build_coin_operator(topology: &Topology, coins: &CoinAssignment) -> Result<CoinOperator> {
    if coins.topology() != topology {
        return Err(Error::config(format!(
            "coin assignment built for {}, operator requested for {topology}",
            coins.topology()
        )));
    }
    if let Some(v) = coins.missing_vertex() {
        return Err(Error::config(format!("no coin assigned to vertex {v}")));
    }
    let blocks = (0..topology.vertex_count())
        .map(|v| coins.get(v).expect("checked above").matrix().clone())
        .collect();
    Ok(CoinOperator {
        coins: coins.clone(),
        blocks,
    })
}

/// Coin-conditioned shift, stored as the permutation `source mode -> target mode`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOperator {
    topology: Topology,
    flip_flop: bool,
    dest: Vec<usize>,
    wraps: Vec<usize>,
}

impl StepOperator {
    /// The trivial shift `S = I`.
    pub fn identity(topology: &Topology) -> Self {
        StepOperator {
            topology: *topology,
            flip_flop: false,
            dest: (0..topology.mode_count()).collect(),
            wraps: Vec::new(),
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn flip_flop(&self) -> bool {
        self.flip_flop
    }

    pub fn target_of(&self, mode: usize) -> usize {
        self.dest[mode]
    }

    /// Source modes whose move crosses the periodic seam of a line. On a
    /// hard-boundary line these must never carry amplitude.
    pub fn wrap_sources(&self) -> &[usize] {
        &self.wraps
    }

    pub fn apply(&self, a: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(a.len());
        for (src, &dst) in self.dest.iter().enumerate() {
            out[dst] = a[src];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dest.len();
        let mut m = DMatrix::zeros(n, n);
        for (src, &dst) in self.dest.iter().enumerate() {
            m[(dst, src)] = C64::new(1.0, 0.0);
        }
        m
    }

    fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.dest.len()];
        self.dest
            .iter()
            .all(|&d| d < seen.len() && !std::mem::replace(&mut seen[d], true))
    }
}

pub fn build_step_operator(topology: &Topology, flip_flop: bool) -> StepOperator {
    let d = topology.coin_dim();
    let mut dest = Vec::with_capacity(topology.mode_count());
    let mut wraps = Vec::new();
    for v in 0..topology.vertex_count() {
        for (c, &dir) in topology.coin_set().iter().enumerate() {
            let target = topology.neighbor(v, dir);
            let coin = if flip_flop { dir.reversed() } else { dir };
            let c_out = topology
                .coin_index(coin)
                .expect("coin sets are closed under reversal");
            dest.push(d * target + c_out);
            if let Topology::Line { n, .. } = *topology {
                let crosses =
                    (dir == Direction::Right && v == n - 1) || (dir == Direction::Left && v == 0);
                if crosses {
                    wraps.push(d * v + c);
                }
            }
        }
    }
    StepOperator {
        topology: *topology,
        flip_flop,
        dest,
        wraps,
    }
}

/// The single-step unitary `U = S C`, stored as CSR: each row holds
/// `coin_dim` entries whatever the lattice size.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    step: StepOperator,
    coin: CoinOperator,
    matrix: CsrMatrix,
}

pub fn compose_walk_operator(step: StepOperator, coin: CoinOperator) -> Result<WalkOperator> {
    let topology = *step.topology();
    if coin.topology() != &topology {
        return Err(Error::Dimension {
            expected: topology.mode_count(),
            actual: coin.topology().mode_count(),
        });
    }
    if !step.is_permutation() {
        return Err(Error::NumericalIntegrity {
            what: "step operator is not a permutation".into(),
            residual: 1.0,
        });
    }
    // S is a permutation, so U is unitary exactly when every coin block is.
    let block_residual = coin
        .blocks
        .iter()
        .map(unitarity_residual)
        .fold(0.0, f64::max);
    if block_residual > OPERATOR_UNITARITY_TOL {
        return Err(Error::NumericalIntegrity {
            what: "coin operator is not unitary".into(),
            residual: block_residual,
        });
    }

    let d = topology.coin_dim();
    let n = topology.mode_count();
    let mut triplets = Vec::with_capacity(n * d);
    for src in 0..n {
        let (v, c) = (src / d, src % d);
        let block = &coin.blocks[v];
        for k in 0..d {
            triplets.push((step.dest[src], d * v + k, block[(c, k)]));
        }
    }
    Ok(WalkOperator {
        step,
        coin,
        matrix: CsrMatrix::from_triplets(n, triplets),
    })
}

impl WalkOperator {
    pub fn build(topology: Topology, coins: &CoinAssignment, flip_flop: bool) -> Result<Self> {
        let coin = build_coin_operator(&topology, coins)?;
        compose_walk_operator(build_step_operator(&topology, flip_flop), coin)
    }

    pub fn topology(&self) -> &Topology {
        self.step.topology()
    }

    pub fn mode_count(&self) -> usize {
        self.topology().mode_count()
    }

    pub fn flip_flop(&self) -> bool {
        self.step.flip_flop()
    }

    pub fn coins(&self) -> &CoinAssignment {
        self.coin.coins()
    }

    pub fn step_operator(&self) -> &StepOperator {
        &self.step
    }

    pub fn coin_operator(&self) -> &CoinOperator {
        &self.coin
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn apply(&self, a: &DVector<C64>) -> DVector<C64> {
        self.apply_with(a, Execution::Parallel)
    }

    pub fn apply_with(&self, a: &DVector<C64>, exec: Execution) -> DVector<C64> {
        self.matrix.mul_vec(a, exec)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.to_dense()
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension { expected, actual });
    }
    Ok(())
}

/// Undriven step `a' = U a`.
pub fn evolve_step(state: &AmplitudeState, op: &WalkOperator) -> Result<AmplitudeState> {
    check_dim(op.mode_count(), state.amplitudes().len())?;
    AmplitudeState::new(
        *op.topology(),
        op.apply(state.amplitudes()),
        state.step() + 1,
    )
}

/// Displace by `injection`, then walk: `a' = U (a + alpha)`. Coherent
/// displacements add amplitudes; their global phase is dropped.
pub fn driven_step(
    state: &AmplitudeState,
    op: &WalkOperator,
    injection: &DVector<C64>,
) -> Result<AmplitudeState> {
    check_dim(op.mode_count(), state.amplitudes().len())?;
    check_dim(op.mode_count(), injection.len())?;
    AmplitudeState::new(
        *op.topology(),
        op.apply(&(state.amplitudes() + injection)),
        state.step() + 1,
    )
}

/// Per-step injection vectors: `base * exp(i phi k)` at step `k >= 1`,
/// unless an explicit list overrides it.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSchedule {
    base: DVector<C64>,
    phase_per_step: f64,
    overrides: Option<Vec<DVector<C64>>>,
    steps: usize,
}

impl InjectionSchedule {
    pub fn new(base: DVector<C64>, phase_per_step: f64, steps: usize) -> Self {
        InjectionSchedule {
            base,
            phase_per_step,
            overrides: None,
            steps,
        }
    }

    /// Explicit injection for every step; `steps` is the list length.
    pub fn explicit(injections: Vec<DVector<C64>>) -> Result<Self> {
        let dim = injections.first().map_or(0, |v| v.len());
        for v in &injections {
            check_dim(dim, v.len())?;
        }
        Ok(InjectionSchedule {
            base: DVector::zeros(dim),
            phase_per_step: 0.0,
            steps: injections.len(),
            overrides: Some(injections),
        })
    }

    pub fn base(&self) -> &DVector<C64> {
        &self.base
    }

    pub fn phase_per_step(&self) -> f64 {
        self.phase_per_step
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn injection(&self, k: usize) -> DVector<C64> {
        match &self.overrides {
            Some(list) => list[k - 1].clone(),
            None => &self.base * C64::from_polar(1.0, self.phase_per_step * k as f64),
        }
    }
}

/// Time series of a driven run. Row `t - 1` holds the state after step `t`.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub vertex_intensity: Vec<Vec<f64>>,
    pub mode_intensity: Vec<Vec<f64>>,
    /// `|b_j(t)|^2`, present when a decomposition was supplied.
    pub eigenmode_intensity: Option<Vec<Vec<f64>>>,
    pub final_state: AmplitudeState,
    /// Largest amplitude that crossed the seam of a hard-boundary line.
    pub wrap_leak: Option<f64>,
}

impl RunRecord {
    pub fn total_intensity(&self) -> Vec<f64> {
        self.mode_intensity.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn check_boundary(&self, tol: f64) -> Result<()> {
        match self.wrap_leak {
            Some(leak) if leak > tol => Err(Error::NumericalIntegrity {
                what: "amplitude crossed the seam of a hard-boundary line; boundary coins do not reflect".into(),
                residual: leak,
            }),
            _ => Ok(()),
        }
    }
}

/// Run `schedule.steps()` driven steps from the vacuum.
pub fn run_driven_walk(
    op: &WalkOperator,
    schedule: &InjectionSchedule,
    eigen: Option<&EigenDecomposition>,
) -> Result<RunRecord> {
    run_driven_walk_with(op, schedule, eigen, Execution::Parallel)
}

/// [`run_driven_walk`] with an explicit execution mode for the sparse
/// propagation.
pub fn run_driven_walk_with(
    op: &WalkOperator,
    schedule: &InjectionSchedule,
    eigen: Option<&EigenDecomposition>,
    exec: Execution,
) -> Result<RunRecord> {
    let topology = *op.topology();
    let n = op.mode_count();
    if schedule.steps() > 0 {
        check_dim(n, schedule.injection(1).len())?;
    }
    if let Some(e) = eigen {
        check_dim(n, e.dim())?;
    }
    let hard = matches!(
        topology,
        Topology::Line {
            boundary: Boundary::Hard,
            ..
        }
    );
    let seam: Vec<usize> = op
        .step
        .wrap_sources()
        .iter()
        .map(|&src| op.step.target_of(src))
        .collect();

    let mut state = AmplitudeState::vacuum(topology);
    let mut vertex_intensity = Vec::with_capacity(schedule.steps());
    let mut mode_intensity = Vec::with_capacity(schedule.steps());
    let mut eigenmode_intensity = eigen.map(|_| Vec::with_capacity(schedule.steps()));
    let mut leak: f64 = 0.0;

    for k in 1..=schedule.steps() {
        let injection = schedule.injection(k);
        check_dim(n, injection.len())?;
        let next = op.apply_with(&(state.amplitudes() + injection), exec);
        state = AmplitudeState::new(topology, next, k as u64)?;
        let a = state.amplitudes();
        vertex_intensity.push(vertex_intensities(&topology, a.as_slice()));
        mode_intensity.push(state.mode_intensities());
        if let (Some(e), Some(rows)) = (eigen, eigenmode_intensity.as_mut()) {
            rows.push(e.to_eigenbasis(a).iter().map(|b| b.norm_sqr()).collect());
        }
        if hard {
            leak = seam.iter().map(|&m| a[m].norm()).fold(leak, f64::max);
        }
    }

    Ok(RunRecord {
        vertex_intensity,
        mode_intensity,
        eigenmode_intensity,
        final_state: state,
        wrap_leak: hard.then_some(leak),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::Coin;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    pub(crate) fn line5_reflecting() -> WalkOperator {
        let t = Topology::line(5, Boundary::Hard).unwrap();
        let coins = CoinAssignment::uniform(t, Coin::hadamard())
            .unwrap()
            .with(0, Coin::pauli_x())
            .unwrap()
            .with(4, Coin::pauli_x())
            .unwrap();
        WalkOperator::build(t, &coins, false).unwrap()
    }

    fn unit(n: usize, i: usize) -> DVector<C64> {
        let mut v = DVector::zeros(n);
        v[i] = c(1.0, 0.0);
        v
    }

    #[test]
    fn hadamard_block_on_two_vertex_line() {
        let t = Topology::line(2, Boundary::Cyclic).unwrap();
        let coins = CoinAssignment::uniform(t, Coin::hadamard()).unwrap();
        let op = build_coin_operator(&t, &coins).unwrap();
        let out = op.apply(&unit(4, 0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = DVector::from_vec(vec![c(h, 0.0), c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!((out - &expected).norm() < 1e-15);
        assert!((op.to_dense() * unit(4, 0) - expected).norm() < 1e-15);
    }

    #[test]
    fn reflecting_line_has_pauli_x_at_the_ends() {
        let op = line5_reflecting();
        assert_eq!(op.coin_operator().block(0), Coin::pauli_x().matrix());
        assert_eq!(op.coin_operator().block(4), Coin::pauli_x().matrix());
        assert_eq!(op.coin_operator().block(2), Coin::hadamard().matrix());
    }

    #[test]
    fn grover_block_fixes_uniform_coin_vector() {
        let t = Topology::torus(2, 2).unwrap();
        let coins = CoinAssignment::uniform(t, Coin::grover4()).unwrap();
        let op = build_coin_operator(&t, &coins).unwrap();
        let mut a = DVector::zeros(16);
        for k in 0..4 {
            a[k] = c(0.5, 0.0);
        }
        assert!((op.apply(&a) - a).norm() < 1e-15);
    }

    #[test]
    fn missing_coin_is_a_config_error() {
        let t = Topology::line(3, Boundary::Cyclic).unwrap();
        let coins = CoinAssignment::new(t).with(0, Coin::hadamard()).unwrap();
        assert!(matches!(
            build_coin_operator(&t, &coins),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn step_examples() {
        let t = Topology::line(3, Boundary::Cyclic).unwrap();
        let s = build_step_operator(&t, false);
        let r2 = crate::mode_index(&t, Direction::Right, 2).unwrap();
        assert_eq!(
            s.target_of(r2),
            crate::mode_index(&t, Direction::Right, 0).unwrap()
        );

        let t5 = Topology::line(5, Boundary::Hard).unwrap();
        let s5 = build_step_operator(&t5, false);
        let l3 = crate::mode_index(&t5, Direction::Left, 3).unwrap();
        assert_eq!(
            s5.target_of(l3),
            crate::mode_index(&t5, Direction::Left, 2).unwrap()
        );
        assert_eq!(s5.wrap_sources(), &[1, 8]);

        // flip-flop: move right, then swap R -> L
        let tt = Topology::torus(3, 3).unwrap();
        let sf = build_step_operator(&tt, true);
        let from = crate::mode_index(&tt, Direction::Right, tt.vertex_at(0, 0).unwrap()).unwrap();
        let to = crate::mode_index(&tt, Direction::Left, tt.vertex_at(1, 0).unwrap()).unwrap();
        assert_eq!(sf.target_of(from), to);
        assert!(sf.is_permutation());
    }

    #[test]
    fn identity_composition() {
        let t = Topology::line(4, Boundary::Cyclic).unwrap();
        let coins = CoinAssignment::uniform(t, Coin::identity(2)).unwrap();
        let coin = build_coin_operator(&t, &coins).unwrap();
        let op = compose_walk_operator(StepOperator::identity(&t), coin).unwrap();
        let id: DMatrix<C64> = DMatrix::identity(8, 8);
        assert_eq!(op.to_dense(), id);
    }

    #[test]
    fn non_unitary_coin_fails_composition() {
        let t = Topology::line(2, Boundary::Cyclic).unwrap();
        let coins = CoinAssignment::uniform(t, Coin::hadamard()).unwrap();
        let mut coin = build_coin_operator(&t, &coins).unwrap();
        coin.blocks[1][(0, 0)] = c(2.0, 0.0);
        let err = compose_walk_operator(build_step_operator(&t, false), coin).unwrap_err();
        assert!(matches!(err, Error::NumericalIntegrity { .. }));
    }

    #[test]
    fn mismatched_topologies_rejected() {
        let t2 = Topology::line(2, Boundary::Cyclic).unwrap();
        let t3 = Topology::line(3, Boundary::Cyclic).unwrap();
        let coin =
            build_coin_operator(&t2, &CoinAssignment::uniform(t2, Coin::hadamard()).unwrap())
                .unwrap();
        assert!(compose_walk_operator(build_step_operator(&t3, false), coin).is_err());
    }

    #[test]
    fn driven_step_examples() {
        let op = line5_reflecting();
        let vac = AmplitudeState::vacuum(*op.topology());
        let out = driven_step(&vac, &op, &unit(10, 0)).unwrap();
        let col = op.to_dense().column(0).into_owned();
        assert!((out.amplitudes() - col).norm() < 1e-15);
        assert_eq!(out.step(), 1);

        let zero = evolve_step(&vac, &op).unwrap();
        assert_eq!(zero.total_intensity(), 0.0);

        assert!(driven_step(&vac, &op, &unit(4, 0)).is_err());
    }

    #[test]
    fn sequential_and_parallel_apply_agree() {
        let t = Topology::torus(32, 32).unwrap();
        let coins = CoinAssignment::uniform(t, Coin::grover4()).unwrap();
        let op = WalkOperator::build(t, &coins, true).unwrap();
        assert_eq!(op.matrix().nnz(), 4 * 4096);
        let a = DVector::from_fn(4096, |i, _| c((i as f64).sin(), (i as f64).cos()));
        let seq = op.apply_with(&a, Execution::Sequential);
        let par = op.apply_with(&a, Execution::Parallel);
        assert_eq!(seq, par);
        assert!((seq.norm() - a.norm()).abs() < 1e-10 * a.norm());
    }

    #[test]
    fn dense_and_sparse_apply_agree() {
        let op = line5_reflecting();
        let a = DVector::from_fn(10, |i, _| c((i as f64).sin(), (i as f64).cos()));
        let dense = op.to_dense() * &a;
        assert!((op.apply(&a) - dense).norm() < 1e-14);
    }

    #[test]
    fn zero_injection_gives_zero_record() {
        let op = line5_reflecting();
        let sched = InjectionSchedule::new(DVector::zeros(10), 0.3, 7);
        let rec = run_driven_walk(&op, &sched, None).unwrap();
        assert_eq!(rec.vertex_intensity.len(), 7);
        assert!(rec.total_intensity().iter().all(|&x| x == 0.0));
        assert_eq!(rec.wrap_leak, Some(0.0));
    }

    #[test]
    fn zero_steps_gives_empty_record() {
        let op = line5_reflecting();
        let rec = run_driven_walk(&op, &InjectionSchedule::new(unit(10, 4), 0.0, 0), None).unwrap();
        assert!(rec.vertex_intensity.is_empty());
        assert_eq!(rec.final_state.step(), 0);
    }

    #[test]
    fn hard_line_with_hadamard_ends_leaks() {
        let t = Topology::line(5, Boundary::Hard).unwrap();
        let coins = CoinAssignment::uniform(t, Coin::hadamard()).unwrap();
        let op = WalkOperator::build(t, &coins, false).unwrap();
        let rec =
            run_driven_walk(&op, &InjectionSchedule::new(unit(10, 4), 0.0, 20), None).unwrap();
        assert!(rec.wrap_leak.unwrap() > 1e-3);
        assert!(rec.check_boundary(1e-12).is_err());
    }
}
