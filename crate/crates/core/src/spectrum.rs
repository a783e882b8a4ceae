//! Spectral decomposition of a walk unitary and the phase-mismatch profile.
//!
//! A unitary `U` is diagonalised through Hermitian eigenproblems. First
//! `Re(e^{-i theta} U)`, whose eigenvalues are `cos(omega - theta)`. That
//! pairs up `omega` with its mirror image about `theta`, so every cluster of
//! (near-)equal eigenvalues is split again with `Im(e^{-i theta} U)`
//! restricted to the cluster. Eigenphases are read off as Rayleigh quotients.
//!
//! Conventions: `U v_j = e^{i omega_j} v_j`, `omega_j` in `(-pi, pi]` sorted
//! ascending, and `b = T a` with `T = V^dagger`.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::coin::unitarity_residual;
use crate::error::{Error, Result};
use crate::lattice::{vertex_intensities, AmplitudeState, Topology, C64};
use crate::walk::WalkOperator;

/// Reconstruction tolerance `max |T^dagger diag(e^{i omega}) T - U|`.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Frequencies closer than this are treated as one eigenspace.
pub const EIGENSPACE_TOL: f64 = 1e-8;

/// Frequencies within this of the reference are excluded from the gap.
pub const GAP_EXCLUSION_TOL: f64 = 1e-9;

const INPUT_UNITARITY_TOL: f64 = 1e-8;

// Generic split angle; any value works unless it happens to sit exactly
// halfway between two eigenphases.
const SPLIT_ANGLE: f64 = 0.577_215_664_901_532_9;

// Cosine eigenvalues closer than this are re-split by the sine part.
const CLUSTER_TOL: f64 = 1e-6;

/// Wrap a phase into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    frequencies: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Eigenvectors as columns (`T^dagger`).
    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    /// The physical-to-eigenmode transform `T`.
    pub fn transform(&self) -> DMatrix<C64> {
        self.vectors.adjoint()
    }

    pub fn to_eigenbasis(&self, a: &DVector<C64>) -> DVector<C64> {
        self.vectors.ad_mul(a)
    }

    pub fn from_eigenbasis(&self, b: &DVector<C64>) -> DVector<C64> {
        &self.vectors * b
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (j, &w) in self.frequencies.iter().enumerate() {
            let phase = C64::from_polar(1.0, w);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruction_residual(&self, u: &DMatrix<C64>) -> f64 {
        max_abs_diff(&self.reconstruct(), u)
    }

    /// Index ranges of (numerically) degenerate eigenspaces.
    pub fn eigenspaces(&self, tol: f64) -> Vec<Range<usize>> {
        group_sorted(&self.frequencies, tol)
    }

    /// Orthogonal projection of `v` onto the span of eigenvectors `range`.
    pub fn project(&self, range: Range<usize>, v: &DVector<C64>) -> DVector<C64> {
        let cols = self.vectors.columns(range.start, range.len());
        cols * cols.ad_mul(v)
    }

    /// Coin-traced weight of eigenvector `j` on every vertex.
    pub fn vertex_weights(&self, j: usize, topology: &Topology) -> Vec<f64> {
        let col: Vec<C64> = self.vectors.column(j).iter().copied().collect();
        vertex_intensities(topology, &col)
    }
}

fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn group_sorted(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

fn hermitian_eigen(m: DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or(Error::Convergence { residual: f64::NAN })?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok((values, vectors))
}

/// Eigendecomposition of an arbitrary unitary matrix.
pub fn eigendecompose_matrix(u: &DMatrix<C64>) -> Result<EigenDecomposition> {
    if !u.is_square() {
        return Err(Error::Dimension {
            expected: u.nrows(),
            actual: u.ncols(),
        });
    }
    let n = u.nrows();
    let residual = unitarity_residual(u);
    if residual > INPUT_UNITARITY_TOL {
        return Err(Error::NumericalIntegrity {
            what: "matrix to decompose is not unitary".into(),
            residual,
        });
    }

    let rot = C64::from_polar(1.0, -SPLIT_ANGLE);
    let half = C64::new(0.5, 0.0);
    let cos_part = (u * rot + u.adjoint() * rot.conj()) * half;
    let (cos_values, basis) = hermitian_eigen(cos_part)?;

    let mut pairs: Vec<(f64, DVector<C64>)> = Vec::with_capacity(n);
    for cluster in group_sorted(&cos_values, CLUSTER_TOL) {
        let vc = basis.columns(cluster.start, cluster.len()).into_owned();
        let restricted = vc.ad_mul(&(u * &vc));
        let (vc, restricted) = if cluster.len() == 1 {
            (vc, restricted)
        } else {
            let i_half = C64::new(0.0, -0.5);
            let sin_part = (&restricted * rot - restricted.adjoint() * rot.conj()) * i_half;
            let (_, w) = hermitian_eigen(sin_part)?;
            let r = w.ad_mul(&(&restricted * &w));
            (vc * w, r)
        };
        for k in 0..vc.ncols() {
            pairs.push((
                wrap_phase(restricted[(k, k)].arg()),
                vc.column(k).into_owned(),
            ));
        }
    }

    // e^{i pi} may come out as -pi + eps; keep one representative.
    for (w, _) in pairs.iter_mut() {
        if *w < -PI + 1e-12 {
            *w = PI;
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let frequencies = pairs.iter().map(|p| p.0).collect();
    let columns: Vec<DVector<C64>> = pairs.into_iter().map(|p| p.1).collect();
    let e = EigenDecomposition {
        frequencies,
        vectors: DMatrix::from_columns(&columns),
    };
    let residual = e.reconstruction_residual(u);
    if residual.is_nan() || residual > RECONSTRUCTION_TOL {
        return Err(Error::Convergence { residual });
    }
    Ok(e)
}

pub fn eigendecompose(op: &WalkOperator) -> Result<EigenDecomposition> {
    eigendecompose_matrix(&op.to_dense())
}

pub fn to_eigenbasis(state: &AmplitudeState, e: &EigenDecomposition) -> Result<DVector<C64>> {
    if state.amplitudes().len() != e.dim() {
        return Err(Error::Dimension {
            expected: e.dim(),
            actual: state.amplitudes().len(),
        });
    }
    Ok(e.to_eigenbasis(state.amplitudes()))
}

/// Per-mode phase mismatch `Delta_j = phi - omega_j` and coupling
/// `beta_j = (T alpha)_j` of a base injection vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchProfile {
    pub phi: f64,
    pub deltas: Vec<f64>,
    pub couplings: Vec<C64>,
}

impl MismatchProfile {
    /// Index of the mode closest to phase matching among those with
    /// `|beta_j|^2 > min_coupling`.
    pub fn best_matched(&self, min_coupling: f64) -> Option<usize> {
        (0..self.deltas.len())
            .filter(|&j| self.couplings[j].norm_sqr() > min_coupling)
            .min_by(|&i, &j| self.deltas[i].abs().total_cmp(&self.deltas[j].abs()))
    }
}

pub fn mismatch_profile(
    e: &EigenDecomposition,
    phi: f64,
    base: &DVector<C64>,
) -> Result<MismatchProfile> {
    if base.len() != e.dim() {
        return Err(Error::Dimension {
            expected: e.dim(),
            actual: base.len(),
        });
    }
    Ok(MismatchProfile {
        phi,
        deltas: e.frequencies.iter().map(|&w| wrap_phase(phi - w)).collect(),
        couplings: e.to_eigenbasis(base).iter().copied().collect(),
    })
}

/// Smallest wrapped distance from `reference` to a frequency not equal to it.
pub fn spectral_gap(e: &EigenDecomposition, reference: f64) -> Result<f64> {
    e.frequencies
        .iter()
        .map(|&w| wrap_phase(w - reference).abs())
        .filter(|&d| d > GAP_EXCLUSION_TOL)
        .min_by(f64::total_cmp)
        .ok_or(Error::UndefinedGap { reference })
}
