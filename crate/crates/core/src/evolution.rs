//! Sector-wise spectral decomposition and the propagator `V(t) = exp(-iHt)`.

use std::ops::Mul;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::basis::BasisCatalog;
use crate::chain::HamiltonianBlocks;
use crate::error::{Error, Result};

/// Default working time in units of the inverse bulk coupling.
pub const DEFAULT_TIME: f64 = 58.9826;

#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SectorSpectrum {
    fn new(h: &DMatrix<f64>, sector: usize) -> Result<Self> {
        let dim = h.nrows();
        let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0)
            .ok_or(Error::Numerical { sector, dim })?;
        Ok(Self { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max |Q diag(λ) Qᵀ - H|`.
    pub fn reconstruction_error(&self, h: &DMatrix<f64>) -> f64 {
        let q = &self.eigenvectors;
        let qd = DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * self.eigenvalues[j]);
        (qd * q.transpose() - h).amax()
    }

    /// `max |QᵀQ - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let q = &self.eigenvectors;
        (q.transpose() * q - DMatrix::identity(q.ncols(), q.ncols())).amax()
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        self.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * t)).collect()
    }

    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        let q = &self.eigenvectors;
        let ph = self.phases(t);
        let n = self.dim();
        let qp = DMatrix::from_fn(n, n, |i, k| ph[k] * q[(i, k)]);
        let qc = q.map(|x| C64::new(x, 0.0));
        qp * qc.transpose()
    }

    /// Column `j` of the propagator without forming the full matrix.
    pub fn propagator_column(&self, t: f64, j: usize) -> DVector<C64> {
        let q = &self.eigenvectors;
        let ph = self.phases(t);
        let weights: Vec<C64> = (0..self.dim()).map(|k| ph[k] * q[(j, k)]).collect();
        DVector::from_fn(self.dim(), |i, _| {
            (0..self.dim()).map(|k| weights[k] * q[(i, k)]).sum()
        })
    }
}

/// Eigen-decompositions of the one- and two-excitation blocks.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub sectors: [SectorSpectrum; 2],
}

pub fn eigendecompose(blocks: &HamiltonianBlocks) -> Result<SpectralData> {
    Ok(SpectralData { sectors: [SectorSpectrum::new(&blocks.h1, 1)?, SectorSpectrum::new(&blocks.h2, 2)?] })
}

impl SpectralData {
    pub fn propagator(&self, t: f64) -> BlockOperator {
        BlockOperator {
            blocks: [
                DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
                self.sectors[0].propagator(t),
                self.sectors[1].propagator(t),
            ],
        }
    }

    pub fn sector(&self, k: usize) -> &SectorSpectrum {
        &self.sectors[k - 1]
    }
}

/// Operator that is block diagonal over the 0/1/2-excitation sectors.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockOperator {
    pub blocks: [DMatrix<C64>; 3],
}

impl BlockOperator {
    pub fn identity(catalog: &BasisCatalog) -> Self {
        let [d0, d1, d2] = catalog.sector_dims();
        Self { blocks: [DMatrix::identity(d0, d0), DMatrix::identity(d1, d1), DMatrix::identity(d2, d2)] }
    }

    pub fn block(&self, k: usize) -> &DMatrix<C64> {
        &self.blocks[k]
    }

    pub fn adjoint(&self) -> Self {
        Self { blocks: self.blocks.clone().map(|b| b.adjoint()) }
    }

    /// Largest per-block `max |B†B - I|`.
    pub fn unitarity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.ncols();
                (b.adjoint() * b - DMatrix::<C64>::identity(n, n)).map(|z| z.norm()).max()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).map(|z| z.norm()).max())
            .fold(0.0, f64::max)
    }

    /// Matrix element between two configurations given by sector and offset.
    pub fn element(&self, sector: usize, row: usize, col: usize) -> C64 {
        self.blocks[sector][(row, col)]
    }
}

impl Mul for &BlockOperator {
    type Output = BlockOperator;

    fn mul(self, rhs: &BlockOperator) -> BlockOperator {
        BlockOperator {
            blocks: [
                &self.blocks[0] * &rhs.blocks[0],
                &self.blocks[1] * &rhs.blocks[1],
                &self.blocks[2] * &rhs.blocks[2],
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_positions, coupling_matrix, hamiltonian_blocks, ChainSpec};
    use std::f64::consts::PI;

    fn two_site() -> (BasisCatalog, HamiltonianBlocks) {
        let cat = BasisCatalog::new(2).unwrap();
        let d = coupling_matrix(&[0.0, 1.0]).unwrap();
        let h = hamiltonian_blocks(&d, &cat).unwrap();
        (cat, h)
    }

    #[test]
    fn two_site_spectrum_and_closed_form_propagator() {
        let (_, h) = two_site();
        assert_eq!(h.h1, DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));
        let s = eigendecompose(&h).unwrap();
        let mut ev: Vec<f64> = s.sectors[0].eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 0.5).abs() < 1e-14 && (ev[1] - 0.5).abs() < 1e-14);
        let v = s.sectors[0].propagator(PI);
        let want = [C64::new(0.0, 0.0), C64::new(0.0, -1.0)];
        assert!((v[(0, 0)] - want[0]).norm() < 1e-12);
        assert!((v[(0, 1)] - want[1]).norm() < 1e-12);
        assert!((v[(1, 0)] - want[1]).norm() < 1e-12);
        assert!((v[(1, 1)] - want[0]).norm() < 1e-12);
    }

    fn chain(n: usize) -> (BasisCatalog, HamiltonianBlocks, SpectralData) {
        let spec = ChainSpec { n_sites: n, ..Default::default() };
        let cat = BasisCatalog::new(n).unwrap();
        let d = coupling_matrix(&build_positions(&spec).unwrap()).unwrap();
        let h = hamiltonian_blocks(&d, &cat).unwrap();
        let s = eigendecompose(&h).unwrap();
        (cat, h, s)
    }

    #[test]
    fn identity_at_zero_time_and_trace_zero() {
        let (cat, h, s) = chain(8);
        let v = s.propagator(0.0);
        assert!(v.max_abs_diff(&BlockOperator::identity(&cat)) < 1e-12);
        let sum: f64 = s.sectors[0].eigenvalues.sum();
        assert!((sum - h.h1.trace()).abs() < 1e-12);
        assert!(s.sectors[0].reconstruction_error(&h.h1) < 1e-12);
        assert!(s.sectors[1].reconstruction_error(&h.h2) < 1e-12);
        assert!(s.sectors[1].orthonormality_error() < 1e-12);
    }

    #[test]
    fn group_property_and_unitarity() {
        let (_, _, s) = chain(10);
        for (t1, t2) in [(0.3, 1.7), (12.5, -4.25), (58.9826, 3.0)] {
            let a = s.propagator(t1);
            let b = s.propagator(t2);
            let ab = &a * &b;
            assert!(ab.max_abs_diff(&s.propagator(t1 + t2)) < 1e-12);
            assert!(a.unitarity_error() < 1e-12);
        }
    }

    #[test]
    fn column_matches_full_propagator() {
        let (_, _, s) = chain(9);
        let full = s.sectors[1].propagator(7.5);
        for j in [0, 5, 35] {
            let col = s.sectors[1].propagator_column(7.5, j);
            for i in 0..col.len() {
                assert!((col[i] - full[(i, j)]).norm() < 1e-13);
            }
        }
    }
}
