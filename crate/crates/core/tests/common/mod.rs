//! Instance generators and brute-force oracles shared by the integration
//! tests and the acceptance suite.
#![allow(dead_code)]

use std::path::PathBuf;

use ddtqw::{Boundary, Coin, CoinAssignment, Topology, WalkOperator, C64};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(format!("{name}.toml"))
}

pub fn random_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<C64> {
    DVector::from_fn(n, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Haar coins on every vertex of the given topology.
pub fn haar_operator<R: Rng + ?Sized>(
    topology: Topology,
    flip_flop: bool,
    rng: &mut R,
) -> WalkOperator {
    let mut coins = CoinAssignment::new(topology);
    for v in 0..topology.vertex_count() {
        coins
            .assign(v, Coin::haar_random(topology.coin_dim(), rng))
            .unwrap();
    }
    WalkOperator::build(topology, &coins, flip_flop).unwrap()
}

/// A hard-walled line: Haar coins inside, reflecting `X` coins at both ends.
pub fn reflecting_line<R: Rng + ?Sized>(n: usize, rng: &mut R) -> WalkOperator {
    let topology = Topology::line(n, Boundary::Hard).unwrap();
    let mut coins = CoinAssignment::new(topology);
    for v in 0..n {
        let coin = if v == 0 || v == n - 1 {
            Coin::pauli_x()
        } else {
            Coin::haar_random(2, rng)
        };
        coins.assign(v, coin).unwrap();
    }
    WalkOperator::build(topology, &coins, false).unwrap()
}

/// Random line (n <= `max_line`) or torus (side <= `max_side`) with Haar
/// coins and a random shift convention.
pub fn random_operator<R: Rng + ?Sized>(
    max_line: usize,
    max_side: usize,
    rng: &mut R,
) -> WalkOperator {
    let flip_flop = rng.random_bool(0.5);
    if rng.random_bool(0.5) {
        let n = rng.random_range(2..=max_line);
        let boundary = if rng.random_bool(0.5) {
            Boundary::Cyclic
        } else {
            Boundary::Hard
        };
        if boundary == Boundary::Hard && !flip_flop {
            return reflecting_line(n, rng);
        }
        haar_operator(Topology::line(n, Boundary::Cyclic).unwrap(), flip_flop, rng)
    } else {
        let nx = rng.random_range(2..=max_side);
        let ny = rng.random_range(2..=max_side);
        haar_operator(Topology::torus(nx, ny).unwrap(), flip_flop, rng)
    }
}

/// `sum_{k=1}^{t} U^{t-k+1} alpha_k` by explicit dense matrix powers.
pub fn superposition(u: &DMatrix<C64>, injections: &[DVector<C64>], t: usize) -> DVector<C64> {
    let n = u.nrows();
    let mut acc = DVector::zeros(n);
    for (k, alpha) in injections.iter().enumerate().take(t) {
        let power = t - k; // t - (k + 1) + 1
        let mut term = alpha.clone();
        for _ in 0..power {
            term = u * term;
        }
        acc += term;
    }
    acc
}

/// `I(t) = c t^2` least-squares fit through the origin; returns `(c, R^2)`.
pub fn quadratic_fit(series: &[f64]) -> (f64, f64) {
    let t2: Vec<f64> = (1..=series.len()).map(|t| (t * t) as f64).collect();
    let c = series.iter().zip(&t2).map(|(y, x)| y * x).sum::<f64>()
        / t2.iter().map(|x| x * x).sum::<f64>();
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let ss_res: f64 = series
        .iter()
        .zip(&t2)
        .map(|(y, x)| (y - c * x).powi(2))
        .sum();
    let ss_tot: f64 = series.iter().map(|y| (y - mean).powi(2)).sum();
    (c, 1.0 - ss_res / ss_tot)
}
