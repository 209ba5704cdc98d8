//! The 11x11 extended-receiver unitary as a product of 42 planar rotations,
//! and its embedding `E ⊗ U` into the chain's sector space.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{er_index, BasisCatalog, Configuration, ER_ORDER, ER_SITES};
use crate::error::{Error, Result};
use crate::evolution::BlockOperator;

pub type ErMatrix = SMatrix<C64, 11, 11>;

/// Index pairs (1-based positions in [`ER_ORDER`]) that carry rotation angles,
/// sorted lexicographically.
pub const PAIRS: [(usize, usize); 21] = [
    (2, 3), (2, 5), (2, 8), (3, 5), (3, 8),
    (4, 6), (4, 7), (4, 9), (4, 10), (4, 11),
    (5, 8),
    (6, 7), (6, 9), (6, 10), (6, 11),
    (7, 9), (7, 10), (7, 11),
    (9, 10), (9, 11),
    (10, 11),
];

pub const N_ANGLES: usize = 2 * PAIRS.len();

pub fn pair_index(n: usize, m: usize) -> Option<usize> {
    PAIRS.iter().position(|&p| p == (n, m))
}

/// Generator family. `Symmetric` has real off-diagonal entries 1, `Antisymmetric`
/// has entries -i at (n,m) and +i at (m,n).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Symmetric = 1,
    Antisymmetric = 2,
}

impl Kind {
    pub fn from_number(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Kind::Symmetric),
            2 => Ok(Kind::Antisymmetric),
            _ => Err(Error::Parameter(format!("rotation kind must be 1 or 2, got {k}"))),
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    /// `exp(iφγ)` restricted to the (n,m) plane, row-major.
    pub fn rotation_2x2(self, phi: f64) -> [C64; 4] {
        let (s, c) = phi.sin_cos();
        match self {
            Kind::Symmetric => [C64::new(c, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(c, 0.0)],
            Kind::Antisymmetric => [C64::new(c, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(c, 0.0)],
        }
    }
}

/// Order in which the 42 factors are multiplied.
///
/// `Canonical` puts pair (2,3) rightmost and (10,11) leftmost, with the antisymmetric factor
/// to the left of the symmetric one inside each pair. `Alternate` reverses the pair order.
/// The `*Swapped` variants additionally exchange the two factors inside each pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    #[default]
    Canonical,
    Alternate,
    CanonicalSwapped,
    AlternateSwapped,
}

impl Ordering {
    pub const ALL: [Ordering; 4] =
        [Ordering::Canonical, Ordering::Alternate, Ordering::CanonicalSwapped, Ordering::AlternateSwapped];

    pub fn name(self) -> &'static str {
        match self {
            Ordering::Canonical => "canonical",
            Ordering::Alternate => "alternate",
            Ordering::CanonicalSwapped => "canonical-swapped",
            Ordering::AlternateSwapped => "alternate-swapped",
        }
    }

    fn pairs_ascending(self) -> bool {
        matches!(self, Ordering::Canonical | Ordering::CanonicalSwapped)
    }

    fn symmetric_first(self) -> bool {
        matches!(self, Ordering::Canonical | Ordering::Alternate)
    }

    /// Factor sequence in order of application (rightmost factor first).
    pub fn factors(self) -> Vec<(Kind, usize)> {
        let pairs: Vec<usize> = if self.pairs_ascending() {
            (0..PAIRS.len()).collect()
        } else {
            (0..PAIRS.len()).rev().collect()
        };
        let kinds = if self.symmetric_first() {
            [Kind::Symmetric, Kind::Antisymmetric]
        } else {
            [Kind::Antisymmetric, Kind::Symmetric]
        };
        pairs.into_iter().flat_map(|p| kinds.map(|k| (k, p))).collect()
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ordering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ordering::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown ordering {s:?}")))
    }
}

/// The 42 rotation angles, stored in `[0, 2π)`.
#[derive(Clone, Copy, PartialEq)]
pub struct PhiVector {
    angles: [[f64; 21]; 2],
}

impl fmt::Debug for PhiVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiVector")
            .field("symmetric", &self.angles[0])
            .field("antisymmetric", &self.angles[1])
            .finish()
    }
}

fn wrap(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU { 0.0 } else { w }
}

impl PhiVector {
    pub fn zeros() -> Self {
        Self { angles: [[0.0; 21]; 2] }
    }

    /// Flat layout: 21 symmetric-kind angles in [`PAIRS`] order, then 21 antisymmetric.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() != N_ANGLES {
            return Err(Error::Parameter(format!("expected {N_ANGLES} angles, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite angle {v}")));
        }
        let mut angles = [[0.0; 21]; 2];
        for (i, &v) in values.iter().enumerate() {
            angles[i / 21][i % 21] = wrap(v);
        }
        Ok(Self { angles })
    }

    pub fn to_flat(&self) -> [f64; N_ANGLES] {
        let mut out = [0.0; N_ANGLES];
        out[..21].copy_from_slice(&self.angles[0]);
        out[21..].copy_from_slice(&self.angles[1]);
        out
    }

    pub fn get(&self, kind: Kind, n: usize, m: usize) -> Result<f64> {
        let p = pair_index(n, m).ok_or_else(|| Error::Parameter(format!("pair ({n},{m}) carries no angle")))?;
        Ok(self.angles[kind as usize - 1][p])
    }

    pub fn set(&mut self, kind: Kind, n: usize, m: usize, phi: f64) -> Result<()> {
        let p = pair_index(n, m).ok_or_else(|| Error::Parameter(format!("pair ({n},{m}) carries no angle")))?;
        if !phi.is_finite() {
            return Err(Error::Parameter(format!("non-finite angle {phi}")));
        }
        self.angles[kind as usize - 1][p] = wrap(phi);
        Ok(())
    }

    fn by_index(&self, kind: Kind, pair: usize) -> f64 {
        self.angles[kind as usize - 1][pair]
    }

    /// `(kind, n, m, φ)` for all 42 angles.
    pub fn entries(&self) -> impl Iterator<Item = (Kind, usize, usize, f64)> + '_ {
        [Kind::Symmetric, Kind::Antisymmetric].into_iter().flat_map(move |k| {
            PAIRS.iter().enumerate().map(move |(p, &(n, m))| (k, n, m, self.by_index(k, p)))
        })
    }

    /// Largest wrap-aware angular distance to another vector.
    pub fn max_angle_distance(&self, other: &Self) -> f64 {
        self.to_flat()
            .iter()
            .zip(other.to_flat())
            .map(|(a, b)| {
                let d = (a - b).rem_euclid(TAU);
                d.min(TAU - d)
            })
            .fold(0.0, f64::max)
    }
}

/// Full 11x11 matrix of a single factor `exp(iφγ^(kind;nm))`. Indices are 1-based.
pub fn elementary_rotation(kind: Kind, n: usize, m: usize, phi: f64) -> Result<DMatrix<C64>> {
    if pair_index(n, m).is_none() {
        return Err(Error::Parameter(format!("pair ({n},{m}) carries no angle")));
    }
    let g = kind.rotation_2x2(phi);
    let mut r = DMatrix::identity(11, 11);
    let (a, b) = (n - 1, m - 1);
    r[(a, a)] = g[0];
    r[(a, b)] = g[1];
    r[(b, a)] = g[2];
    r[(b, b)] = g[3];
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErUnitary {
    pub u: ErMatrix,
}

impl ErUnitary {
    pub fn identity() -> Self {
        Self { u: ErMatrix::identity() }
    }

    pub fn adjoint(&self) -> Self {
        Self { u: self.u.adjoint() }
    }

    pub fn unitarity_error(&self) -> f64 {
        (self.u.adjoint() * self.u - ErMatrix::identity()).map(|z| z.norm()).max()
    }

    /// Largest entry connecting ER states with different excitation counts.
    pub fn sector_leakage(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..11 {
            for j in 0..11 {
                if ER_ORDER[i].count_ones() != ER_ORDER[j].count_ones() {
                    worst = worst.max(self.u[(i, j)].norm());
                }
            }
        }
        worst
    }
}

/// Left-multiply `u` by a planar rotation on rows `a`, `b` (0-based).
#[inline]
fn rotate_rows(u: &mut ErMatrix, a: usize, b: usize, g: &[C64; 4]) {
    for col in 0..11 {
        let x = u[(a, col)];
        let y = u[(b, col)];
        u[(a, col)] = g[0] * x + g[1] * y;
        u[(b, col)] = g[2] * x + g[3] * y;
    }
}

pub fn compose(phi: &PhiVector, ordering: Ordering) -> ErUnitary {
    let mut u = ErMatrix::identity();
    for (kind, p) in ordering.factors() {
        let (n, m) = PAIRS[p];
        rotate_rows(&mut u, n - 1, m - 1, &kind.rotation_2x2(phi.by_index(kind, p)));
    }
    ErUnitary { u }
}

/// `E ⊗ U` on a chain whose last four sites form the extended receiver.
pub fn embed(u: &ErUnitary, catalog: &BasisCatalog) -> Result<BlockOperator> {
    let n = catalog.n_sites();
    if n < 6 {
        return Err(Error::Parameter(format!("embedding needs at least 6 sites, got {n}")));
    }
    let mut out = BlockOperator::identity(catalog);
    for k in 0..3 {
        let block = &mut out.blocks[k];
        block.fill(C64::new(0.0, 0.0));
        for (col, c) in catalog.sector(k).iter().enumerate() {
            let (head, tail) = c.split_tail(ER_SITES)?;
            let j = er_index(tail.mask()).ok_or(Error::OutOfSubspace { excitations: tail.excitations() })?;
            for (i, &t) in ER_ORDER.iter().enumerate() {
                if t.count_ones() != tail.excitations() {
                    continue;
                }
                let row_cfg = Configuration::concat(&head, &Configuration::from_mask(ER_SITES, t)?);
                let (_, row) = catalog.index_of(&row_cfg)?;
                block[(row, col)] = u.u[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Rows of one sector grouped by the configuration of the first `n - 4` sites.
/// `rows[p]` is the sector offset of `head | ER_ORDER[p]`, when that state lies in the sector.
#[derive(Clone, Debug)]
pub struct HeadGroup {
    pub head: u64,
    pub head_excitations: u32,
    pub rows: [Option<usize>; 11],
}

/// Positions in [`ER_ORDER`] per excitation count.
pub const ER_SECTORS: [&[usize]; 3] = [&[0], &[1, 2, 4, 7], &[3, 5, 6, 8, 9, 10]];

pub fn head_groups(catalog: &BasisCatalog, sector: usize) -> Result<Vec<HeadGroup>> {
    let mut groups: Vec<HeadGroup> = Vec::new();
    let mut by_head = std::collections::HashMap::new();
    for (row, c) in catalog.sector(sector).iter().enumerate() {
        let (head, tail) = c.split_tail(ER_SITES)?;
        let p = er_index(tail.mask()).ok_or(Error::OutOfSubspace { excitations: tail.excitations() })?;
        let g = *by_head.entry(head.mask()).or_insert_with(|| {
            groups.push(HeadGroup { head: head.mask(), head_excitations: head.excitations(), rows: [None; 11] });
            groups.len() - 1
        });
        groups[g].rows[p] = Some(row);
    }
    groups.sort_by_key(|g| g.head);
    Ok(groups)
}

/// Multiply the 11-vector of ER amplitudes `amps` by `u`, touching only the
/// excitation block `tail_excitations`.
#[inline]
pub fn apply_er_block(u: &ErMatrix, amps: &mut [C64; 11], tail_excitations: usize) {
    let idx = ER_SECTORS[tail_excitations];
    let mut out = [C64::new(0.0, 0.0); 6];
    for (o, &i) in out.iter_mut().zip(idx) {
        *o = idx.iter().map(|&j| u[(i, j)] * amps[j]).sum();
    }
    for (o, &i) in out.iter().zip(idx) {
        amps[i] = *o;
    }
}

/// `embed(u) · op` computed group by group instead of as a dense product.
pub fn apply_embedded(u: &ErUnitary, op: &BlockOperator, catalog: &BasisCatalog) -> Result<BlockOperator> {
    let mut out = op.clone();
    for k in 1..3 {
        let groups = head_groups(catalog, k)?;
        let block = &mut out.blocks[k];
        for g in groups.iter().filter(|g| (g.head_excitations as usize) < k) {
            let tail_exc = k - g.head_excitations as usize;
            for col in 0..block.ncols() {
                let mut amps = [C64::new(0.0, 0.0); 11];
                for (p, r) in g.rows.iter().enumerate() {
                    if let Some(r) = r {
                        amps[p] = block[(*r, col)];
                    }
                }
                apply_er_block(&u.u, &mut amps, tail_exc);
                for (p, r) in g.rows.iter().enumerate() {
                    if let Some(r) = r {
                        block[(*r, col)] = amps[p];
                    }
                }
            }
        }
    }
    Ok(out)
}
