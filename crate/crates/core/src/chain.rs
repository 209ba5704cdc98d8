//! Chain geometry and the dipolar XX Hamiltonian in the 1- and 2-excitation sectors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::BasisCatalog;
use crate::error::{Error, Result};

pub const DEFAULT_SITES: usize = 42;
pub const DEFAULT_DELTA_1: f64 = 0.3005;
pub const DEFAULT_DELTA_2: f64 = 0.5311;

/// Nearest-neighbour coupling profile. End couplings are multiples of `delta_bulk`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSpec {
    pub n_sites: usize,
    pub delta_bulk: f64,
    pub delta_1: f64,
    pub delta_2: f64,
    /// Mirror the end couplings onto the receiver end.
    pub symmetric: bool,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            n_sites: DEFAULT_SITES,
            delta_bulk: 1.0,
            delta_1: DEFAULT_DELTA_1,
            delta_2: DEFAULT_DELTA_2,
            symmetric: true,
        }
    }
}

impl ChainSpec {
    pub fn uniform(n_sites: usize) -> Self {
        Self { n_sites, delta_bulk: 1.0, delta_1: 1.0, delta_2: 1.0, symmetric: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 6 || self.n_sites > 63 {
            return Err(Error::Parameter(format!("n_sites = {} outside 6..=63", self.n_sites)));
        }
        for (name, v) in
            [("delta_bulk", self.delta_bulk), ("delta_1", self.delta_1), ("delta_2", self.delta_2)]
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// Couplings between sites i and i+1, for i = 1..N-1.
    pub fn nearest_neighbor_couplings(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.n_sites;
        let mut deltas = vec![self.delta_bulk; n - 1];
        deltas[0] = self.delta_1 * self.delta_bulk;
        deltas[1] = self.delta_2 * self.delta_bulk;
        if self.symmetric {
            deltas[n - 2] = deltas[0];
            deltas[n - 3] = deltas[1];
        }
        Ok(deltas)
    }
}

/// Site coordinates such that the nearest-neighbour dipolar couplings equal the prescribed ones.
pub fn build_positions(spec: &ChainSpec) -> Result<Vec<f64>> {
    let deltas = spec.nearest_neighbor_couplings()?;
    let mut x = Vec::with_capacity(spec.n_sites);
    x.push(0.0);
    for d in deltas {
        let last = *x.last().unwrap();
        x.push(last + d.powf(-1.0 / 3.0));
    }
    Ok(x)
}

#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    pub positions: Vec<f64>,
    pub d: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }
}

/// All-pairs couplings `D_ij = |x_i - x_j|^-3`.
pub fn coupling_matrix(positions: &[f64]) -> Result<CouplingMatrix> {
    let n = positions.len();
    if n < 2 {
        return Err(Error::Parameter("need at least two sites".into()));
    }
    for i in 0..n - 1 {
        if positions[i + 1] <= positions[i] {
            return Err(Error::SingularGeometry { i, j: i + 1, position: positions[i] });
        }
    }
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (positions[i] - positions[j]).abs().powi(-3)
        }
    });
    Ok(CouplingMatrix { positions: positions.to_vec(), d })
}

/// Hamiltonian restricted to the one- and two-excitation sectors. The vacuum block is zero.
#[derive(Clone, Debug)]
pub struct HamiltonianBlocks {
    pub h1: DMatrix<f64>,
    pub h2: DMatrix<f64>,
}

impl HamiltonianBlocks {
    pub fn h0(&self) -> DMatrix<f64> {
        DMatrix::zeros(1, 1)
    }
}

/// Flip-flop amplitude `D_kl / 2` between configurations that differ by one hop k -> l.
pub fn hamiltonian_blocks(coupling: &CouplingMatrix, catalog: &BasisCatalog) -> Result<HamiltonianBlocks> {
    let n = coupling.n_sites();
    if n != catalog.n_sites() {
        return Err(Error::Parameter(format!(
            "coupling matrix has {n} sites, catalog has {}",
            catalog.n_sites()
        )));
    }
    let mut blocks = [DMatrix::zeros(n, n), {
        let m = catalog.sector(2).len();
        DMatrix::zeros(m, m)
    }];
    for (slot, k) in [(0usize, 1usize), (1, 2)] {
        let h = &mut blocks[slot];
        for (col, c) in catalog.sector(k).iter().enumerate() {
            for from in c.sites() {
                for to in (0..n).filter(|&s| !c.is_excited(s)) {
                    let hopped = c.mask() ^ (1 << (n - 1 - from)) ^ (1 << (n - 1 - to));
                    let (_, row) = catalog.index_of_mask(hopped)?;
                    h[(row, col)] = 0.5 * coupling.d[(from, to)];
                }
            }
        }
    }
    let [h1, h2] = blocks;
    Ok(HamiltonianBlocks { h1, h2 })
}
