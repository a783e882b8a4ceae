//! Unitary coin matrices and their per-vertex assignment.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::{Topology, C64};

/// Tolerance for `C C^dagger = I` on user-supplied coins.
pub const COIN_UNITARITY_TOL: f64 = 1e-12;

/// A validated unitary coin.
#[derive(Debug, Clone, PartialEq)]
pub struct Coin(DMatrix<C64>);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl Coin {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::config(format!(
                "coin must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let residual = unitarity_residual(&matrix);
        if residual > COIN_UNITARITY_TOL {
            return Err(Error::NumericalIntegrity {
                what: "coin matrix is not unitary".into(),
                residual,
            });
        }
        Ok(Coin(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        Coin(DMatrix::identity(dim, dim))
    }

    pub fn hadamard() -> Self {
        let h = FRAC_1_SQRT_2;
        Coin(DMatrix::from_row_slice(
            2,
            2,
            &[re(h), re(h), re(h), re(-h)],
        ))
    }

    pub fn pauli_x() -> Self {
        Coin(DMatrix::from_row_slice(
            2,
            2,
            &[re(0.0), re(1.0), re(1.0), re(0.0)],
        ))
    }

    /// `(2/d) J - I` for `d = 4`.
    pub fn grover4() -> Self {
        Coin(DMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                re(-0.5)
            } else {
                re(0.5)
            }
        }))
    }

    /// The marked-vertex coin `-I_4`.
    pub fn minus_identity4() -> Self {
        Coin(-DMatrix::identity(4, 4))
    }

    pub fn named(name: &str) -> Option<Self> {
        match name {
            "hadamard" => Some(Coin::hadamard()),
            "pauli_x" | "sigma_x" => Some(Coin::pauli_x()),
            "grover4" | "grover" => Some(Coin::grover4()),
            "minus_identity4" | "marked" => Some(Coin::minus_identity4()),
            "identity2" => Some(Coin::identity(2)),
            "identity4" => Some(Coin::identity(4)),
            _ => None,
        }
    }

    /// Haar-distributed unitary via QR of a complex Ginibre matrix, with the
    /// phases of `R`'s diagonal folded back into `Q`.
    pub fn haar_random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 {
                d / d.norm()
            } else {
                re(1.0)
            };
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
        Coin(q)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }
}

/// Max-entry deviation of `M M^dagger` from the identity.
pub fn unitarity_residual(m: &DMatrix<C64>) -> f64 {
    let p = m * m.adjoint();
    p.iter()
        .enumerate()
        .map(|(k, z)| {
            let (i, j) = (k % p.nrows(), k / p.nrows());
            let target = if i == j { 1.0 } else { 0.0 };
            (z - re(target)).norm()
        })
        .fold(0.0, f64::max)
}

/// Which coin acts at which vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinAssignment {
    topology: Topology,
    per_vertex: BTreeMap<usize, Coin>,
}

impl CoinAssignment {
    pub fn new(topology: Topology) -> Self {
        CoinAssignment {
            topology,
            per_vertex: BTreeMap::new(),
        }
    }

    pub fn uniform(topology: Topology, coin: Coin) -> Result<Self> {
        let mut a = CoinAssignment::new(topology);
        for v in 0..topology.vertex_count() {
            a.assign(v, coin.clone())?;
        }
        Ok(a)
    }

    pub fn assign(&mut self, vertex: usize, coin: Coin) -> Result<&mut Self> {
        if vertex >= self.topology.vertex_count() {
            return Err(Error::index(format!(
                "vertex {vertex} outside {}",
                self.topology
            )));
        }
        if coin.dim() != self.topology.coin_dim() {
            return Err(Error::config(format!(
                "coin at vertex {vertex} is {}x{0}, {} needs {}x{2}",
                coin.dim(),
                self.topology,
                self.topology.coin_dim()
            )));
        }
        self.per_vertex.insert(vertex, coin);
        Ok(self)
    }

    pub fn with(mut self, vertex: usize, coin: Coin) -> Result<Self> {
        self.assign(vertex, coin)?;
        Ok(self)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn get(&self, vertex: usize) -> Option<&Coin> {
        self.per_vertex.get(&vertex)
    }

    /// First vertex without a coin, if any.
    pub fn missing_vertex(&self) -> Option<usize> {
        (0..self.topology.vertex_count()).find(|v| !self.per_vertex.contains_key(v))
    }
}
