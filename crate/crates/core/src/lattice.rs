//! Topologies, mode indexing and the coherent amplitude state.
//!
//! Modes are flattened coin-major within a vertex: `index = |C| * vertex + coin`.
//! On a torus, vertices are flattened row-major, `vertex = y * nx + x`.
//! Coin order is `[R, L]` on a line and `[L, R, U, D]` on a torus; the
//! 4-state order is a frozen convention, the Grover coin is symmetric under
//! any relabelling.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Cyclic,
    /// Reflecting ends realised with boundary coins; the shift itself stays
    /// cyclic and wrap-around traffic is monitored instead of truncated.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
    #[serde(rename = "U")]
    Up,
    #[serde(rename = "D")]
    Down,
}

impl Direction {
    pub fn label(self) -> char {
        match self {
            Direction::Left => 'L',
            Direction::Right => 'R',
            Direction::Up => 'U',
            Direction::Down => 'D',
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "L" | "l" | "left" => Some(Direction::Left),
            "R" | "r" | "right" => Some(Direction::Right),
            "U" | "u" | "up" => Some(Direction::Up),
            "D" | "d" | "down" => Some(Direction::Down),
            _ => None,
        }
    }

    /// The direction a flip-flop shift swaps this one into.
    pub fn reversed(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

const LINE_COINS: [Direction; 2] = [Direction::Right, Direction::Left];
const TORUS_COINS: [Direction; 4] = [
    Direction::Left,
    Direction::Right,
    Direction::Up,
    Direction::Down,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Topology {
    Line { n: usize, boundary: Boundary },
    Torus { nx: usize, ny: usize },
}

impl Topology {
    pub fn line(n: usize, boundary: Boundary) -> Result<Self> {
        if n < 2 {
            return Err(Error::config(format!("line needs n >= 2, got {n}")));
        }
        Ok(Topology::Line { n, boundary })
    }

    pub fn torus(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::config(format!(
                "torus needs nx, ny >= 2, got {nx}x{ny}"
            )));
        }
        Ok(Topology::Torus { nx, ny })
    }

    pub fn vertex_count(&self) -> usize {
        match *self {
            Topology::Line { n, .. } => n,
            Topology::Torus { nx, ny } => nx * ny,
        }
    }

    pub fn coin_dim(&self) -> usize {
        self.coin_set().len()
    }

    pub fn mode_count(&self) -> usize {
        self.coin_dim() * self.vertex_count()
    }

    /// Coin labels in matrix row order.
    pub fn coin_set(&self) -> &'static [Direction] {
        match self {
            Topology::Line { .. } => &LINE_COINS,
            Topology::Torus { .. } => &TORUS_COINS,
        }
    }

    pub fn coin_index(&self, coin: Direction) -> Option<usize> {
        self.coin_set().iter().position(|&c| c == coin)
    }

    /// Flattened vertex index of torus coordinates `(x, y)`; on a line `y`
    /// must be zero.
    pub fn vertex_at(&self, x: usize, y: usize) -> Result<usize> {
        match *self {
            Topology::Line { n, .. } if y == 0 && x < n => Ok(x),
            Topology::Torus { nx, ny } if x < nx && y < ny => Ok(y * nx + x),
            _ => Err(Error::index(format!("vertex ({x}, {y}) outside {self}"))),
        }
    }

    pub fn coords(&self, vertex: usize) -> (usize, usize) {
        match *self {
            Topology::Line { .. } => (vertex, 0),
            Topology::Torus { nx, .. } => (vertex % nx, vertex / nx),
        }
    }

    /// Neighbour of `vertex` one step along `dir`, with periodic wrap.
    pub fn neighbor(&self, vertex: usize, dir: Direction) -> usize {
        match *self {
            Topology::Line { n, .. } => match dir {
                Direction::Right => (vertex + 1) % n,
                Direction::Left => (vertex + n - 1) % n,
                _ => vertex,
            },
            Topology::Torus { nx, ny } => {
                let (x, y) = (vertex % nx, vertex / nx);
                let (x, y) = match dir {
                    Direction::Left => ((x + nx - 1) % nx, y),
                    Direction::Right => ((x + 1) % nx, y),
                    Direction::Up => (x, (y + 1) % ny),
                    Direction::Down => (x, (y + ny - 1) % ny),
                };
                y * nx + x
            }
        }
    }

    pub fn mode(&self, index: usize) -> Result<Mode> {
        if index >= self.mode_count() {
            return Err(Error::index(format!(
                "mode {index} outside [0, {})",
                self.mode_count()
            )));
        }
        let d = self.coin_dim();
        Ok(Mode {
            coin: self.coin_set()[index % d],
            vertex: index / d,
        })
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Line { n, boundary } => write!(f, "line({n}, {boundary:?})"),
            Topology::Torus { nx, ny } => write!(f, "torus({nx}x{ny})"),
        }
    }
}

/// One bosonic mode: a coin state at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mode {
    pub coin: Direction,
    pub vertex: usize,
}

pub fn mode_index(topology: &Topology, coin: Direction, vertex: usize) -> Result<usize> {
    if vertex >= topology.vertex_count() {
        return Err(Error::index(format!(
            "vertex {vertex} outside [0, {}) on {topology}",
            topology.vertex_count()
        )));
    }
    let c = topology
        .coin_index(coin)
        .ok_or_else(|| Error::index(format!("coin {coin} not in the coin set of {topology}")))?;
    Ok(topology.coin_dim() * vertex + c)
}

/// Coherent amplitudes of every mode after `step` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    topology: Topology,
    amplitudes: DVector<C64>,
    step: u64,
}

impl AmplitudeState {
    pub fn vacuum(topology: Topology) -> Self {
        AmplitudeState {
            amplitudes: DVector::zeros(topology.mode_count()),
            topology,
            step: 0,
        }
    }

    pub fn new(topology: Topology, amplitudes: DVector<C64>, step: u64) -> Result<Self> {
        if amplitudes.len() != topology.mode_count() {
            return Err(Error::Dimension {
                expected: topology.mode_count(),
                actual: amplitudes.len(),
            });
        }
        Ok(AmplitudeState {
            topology,
            amplitudes,
            step,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn mode_intensities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn total_intensity(&self) -> f64 {
        self.amplitudes.norm_squared()
    }
}

/// Coin-traced intensity per vertex, `P(v) = sum_c |a_{c,v}|^2`.
pub fn intensity_by_vertex(state: &AmplitudeState) -> Vec<f64> {
    vertex_intensities(state.topology(), state.amplitudes().as_slice())
}

pub(crate) fn vertex_intensities(topology: &Topology, amplitudes: &[C64]) -> Vec<f64> {
    amplitudes
        .chunks_exact(topology.coin_dim())
        .map(|block| block.iter().map(|a| a.norm_sqr()).sum())
        .collect()
}
