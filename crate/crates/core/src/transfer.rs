//! Sender-to-receiver map: total evolution `W = (E ⊗ U) V(t)`, its Kraus form,
//! the receiver state, the 16x16 transfer tensor and the transfer coefficients.
//!
//! Two-qubit matrices use the basis `00, 01, 10, 11` with the first listed bit on
//! the site nearer the chain's start.

use std::collections::BTreeMap;

use nalgebra::{Matrix4, SMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisCatalog, Configuration, ER_ORDER};
use crate::chain::{build_positions, coupling_matrix, hamiltonian_blocks, ChainSpec};
use crate::error::{Error, Result};
use crate::er_unitary::{apply_embedded, apply_er_block, compose, head_groups, ErUnitary, Ordering, PhiVector};
use crate::evolution::{eigendecompose, BlockOperator, SpectralData};

pub type Matrix16 = SMatrix<C64, 16, 16>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Excitation count of a two-qubit basis index.
pub fn excitations(idx: usize) -> i32 {
    (idx as u32).count_ones() as i32
}

/// Index into the one-excitation pair `{01, 10}` used by the coefficient arrays.
pub const E01: usize = 0;
pub const E10: usize = 1;

/// Two-qubit basis index of a one-excitation label.
pub const ONE_EXC: [usize; 2] = [0b01, 0b10];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState {
    pub rho: Matrix4<C64>,
}

impl TwoQubitState {
    pub fn new(rho: Matrix4<C64>) -> Self {
        Self { rho }
    }

    pub fn from_rows(rows: &[[C64; 4]; 4]) -> Self {
        Self::new(Matrix4::from_fn(|i, j| rows[i][j]))
    }

    pub fn ground() -> Self {
        let mut rho = Matrix4::zeros();
        rho[(0, 0)] = C64::new(1.0, 0.0);
        Self { rho }
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.rho - self.rho.adjoint()).map(|z| z.norm()).max()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    /// Hermitian, unit trace, and no eigenvalue below `-tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.hermiticity_error() < 1e-12
            && (self.trace() - C64::new(1.0, 0.0)).norm() < 1e-10
            && self.min_eigenvalue() >= -tol
    }

    /// Row-major vectorization.
    pub fn to_vec16(&self) -> SMatrix<C64, 16, 1> {
        SMatrix::from_fn(|k, _| self.rho[(k / 4, k % 4)])
    }

    pub fn from_vec16(v: &SMatrix<C64, 16, 1>) -> Self {
        Self { rho: Matrix4::from_fn(|i, j| v[4 * i + j]) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.rho - other.rho).map(|z| z.norm()).max()
    }
}

/// Multiple-quantum coherence components, indexed by order `n + 2` for `n` in `-2..=2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceDecomposition {
    pub components: [Matrix4<C64>; 5],
}

impl CoherenceDecomposition {
    pub fn order(&self, n: i32) -> &Matrix4<C64> {
        &self.components[(n + 2) as usize]
    }

    pub fn sum(&self) -> Matrix4<C64> {
        self.components.iter().sum()
    }
}

/// Coherence order of entry (row, col): excitations of col minus excitations of row.
pub fn coherence_order(row: usize, col: usize) -> i32 {
    excitations(col) - excitations(row)
}

pub fn coherence_decompose(rho: &Matrix4<C64>) -> CoherenceDecomposition {
    let mut components = [Matrix4::zeros(); 5];
    for i in 0..4 {
        for j in 0..4 {
            components[(coherence_order(i, j) + 2) as usize][(i, j)] = rho[(i, j)];
        }
    }
    CoherenceDecomposition { components }
}

/// Kraus operators `K_J[n][i] = W[J n; i 0…0]`, one per configuration J of the
/// first N-2 sites that is reachable from the sender subspace.
#[derive(Clone, Debug)]
pub struct KrausSet {
    /// Sorted by head mask.
    pub ops: Vec<(u64, Matrix4<C64>)>,
}

impl KrausSet {
    pub fn completeness_error(&self) -> f64 {
        let s: Matrix4<C64> = self.ops.iter().map(|(_, k)| k.adjoint() * k).sum();
        (s - Matrix4::identity()).map(|z| z.norm()).max()
    }

    pub fn head(&self, mask: u64) -> Option<&Matrix4<C64>> {
        self.ops.binary_search_by_key(&mask, |(h, _)| *h).ok().map(|i| &self.ops[i].1)
    }

    pub fn apply(&self, rho_s: &TwoQubitState) -> TwoQubitState {
        TwoQubitState { rho: self.ops.iter().map(|(_, k)| k * rho_s.rho * k.adjoint()).sum() }
    }

    /// `T[(n,m),(i,j)] = Σ_J K_J[n][i] conj(K_J[m][j])`, row-major vectorization on both sides.
    pub fn tensor(&self) -> Matrix16 {
        let mut t = Matrix16::zeros();
        for (_, k) in &self.ops {
            for r in 0..16 {
                let (n, m) = (r / 4, r % 4);
                for c in 0..16 {
                    let (i, j) = (c / 4, c % 4);
                    t[(r, c)] += k[(n, i)] * k[(m, j)].conj();
                }
            }
        }
        t
    }

    pub fn coefficients(&self, n_sites: usize) -> TransferCoefficients {
        let vacuum = self.head(0).copied().unwrap_or_else(Matrix4::zeros);
        let single: Vec<&Matrix4<C64>> =
            (0..n_sites - 2).filter_map(|s| self.head(1u64 << s)).collect();
        let mut co = TransferCoefficients::from_direct(
            |n, i| vacuum[(ONE_EXC[n], ONE_EXC[i])].conj(),
            vacuum[(3, 3)].conj(),
        );
        for n in 0..2 {
            for i in 0..2 {
                co.b[n][i] = single.iter().map(|k| k[(0, ONE_EXC[i])] * k[(ONE_EXC[n], 3)].conj()).sum();
            }
        }
        co.f_11_11 = single.iter().map(|k| k[(0b01, 3)] * k[(0b10, 3)].conj()).sum();
        co
    }
}

/// Build the Kraus set from a full block operator `W`.
pub fn kraus_operators(w: &BlockOperator, catalog: &BasisCatalog) -> Result<KrausSet> {
    let n = catalog.n_sites();
    let mut ops: BTreeMap<u64, Matrix4<C64>> = BTreeMap::new();
    for input in 0..4usize {
        let cfg = Configuration::from_mask(n, (input as u64) << (n - 2))?;
        let (k, col) = catalog.index_of(&cfg)?;
        for (row, r) in catalog.sector(k).iter().enumerate() {
            let amp = w.element(k, row, col);
            let (head, tail) = r.split_tail(2)?;
            ops.entry(head.mask()).or_insert_with(Matrix4::zeros)[(tail.mask() as usize, input)] = amp;
        }
    }
    Ok(KrausSet { ops: ops.into_iter().collect() })
}

pub fn receiver_state(rho_s: &TwoQubitState, w: &BlockOperator, catalog: &BasisCatalog) -> Result<TwoQubitState> {
    Ok(kraus_operators(w, catalog)?.apply(rho_s))
}

pub fn transfer_tensor(w: &BlockOperator, catalog: &BasisCatalog) -> Result<Matrix16> {
    Ok(kraus_operators(w, catalog)?.tensor())
}

pub fn coefficients(w: &BlockOperator, catalog: &BasisCatalog) -> Result<TransferCoefficients> {
    Ok(kraus_operators(w, catalog)?.coefficients(catalog.n_sites()))
}

/// Complex scalars through which the upper off-diagonal receiver entries depend on the sender.
/// Arrays are indexed `[n][i]` with `0 ↔ 01` and `1 ↔ 10`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferCoefficients {
    pub d: C64,
    pub a: [[C64; 2]; 2],
    pub b: [[C64; 2]; 2],
    pub c: [[C64; 2]; 2],
    pub f: [[C64; 2]; 2],
    pub f_11_11: C64,
}

impl TransferCoefficients {
    pub fn zero() -> Self {
        Self { d: ZERO, a: [[ZERO; 2]; 2], b: [[ZERO; 2]; 2], c: [[ZERO; 2]; 2], f: [[ZERO; 2]; 2], f_11_11: ZERO }
    }

    /// Fill `a`, `d` and the derived `c = conj(a)·d`, `f[n][m] = conj(a[01][n])·a[10][m]`.
    fn from_direct(a_of: impl Fn(usize, usize) -> C64, d: C64) -> Self {
        let mut co = Self::zero();
        co.d = d;
        for n in 0..2 {
            for i in 0..2 {
                co.a[n][i] = a_of(n, i);
            }
        }
        for n in 0..2 {
            for i in 0..2 {
                co.c[n][i] = co.a[n][i].conj() * d;
                co.f[n][i] = co.a[E01][n].conj() * co.a[E10][i];
            }
        }
        co
    }

    /// Receiver entries `(00;11)`, `(00;n)`, `(n;11)` and `(01;10)` predicted from the sender state.
    pub fn predict_upper(&self, rho_s: &TwoQubitState) -> Vec<((usize, usize), C64)> {
        let r = &rho_s.rho;
        let mut out = vec![((0, 3), self.d * r[(0, 3)])];
        for n in 0..2 {
            let v = self.a[n][E01] * r[(0, 1)]
                + self.a[n][E10] * r[(0, 2)]
                + self.b[n][E01] * r[(1, 3)]
                + self.b[n][E10] * r[(2, 3)];
            out.push(((0, ONE_EXC[n]), v));
        }
        for n in 0..2 {
            let v = self.c[n][E01] * r[(1, 3)] + self.c[n][E10] * r[(2, 3)];
            out.push(((ONE_EXC[n], 3), v));
        }
        let zero_order = self.f[E01][E01] * r[(1, 1)]
            + self.f[E10][E10] * r[(2, 2)]
            + self.f[E01][E10] * r[(1, 2)]
            + self.f[E10][E01] * r[(2, 1)]
            + self.f_11_11 * r[(3, 3)];
        out.push(((1, 2), zero_order));
        out
    }

    /// Largest violation of `c = conj(a)d` and `f = conj(a)a`.
    pub fn identity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in 0..2 {
            for i in 0..2 {
                worst = worst.max((self.c[n][i] - self.a[n][i].conj() * self.d).norm());
                worst = worst.max((self.f[n][i] - self.a[E01][n].conj() * self.a[E10][i]).norm());
            }
        }
        worst
    }

    /// Named scalars, in a fixed order, for reports.
    pub fn named(&self) -> Vec<(String, C64)> {
        let lab = ["01", "10"];
        let mut out = vec![("d".to_string(), self.d)];
        for (name, arr) in [("a", &self.a), ("b", &self.b), ("c", &self.c), ("f", &self.f)] {
            for n in 0..2 {
                for i in 0..2 {
                    out.push((format!("{name}[{}][{}]", lab[n], lab[i]), arr[n][i]));
                }
            }
        }
        out.push(("f[11][11]".to_string(), self.f_11_11));
        out
    }

    pub fn get(&self, name: &str) -> Option<C64> {
        self.named().into_iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

/// Everything about a chain that does not depend on the extended-receiver angles.
#[derive(Clone, Debug)]
pub struct TransferModel {
    pub chain: ChainSpec,
    pub catalog: BasisCatalog,
    pub spectral: SpectralData,
}

impl TransferModel {
    pub fn build(chain: &ChainSpec) -> Result<Self> {
        chain.validate()?;
        let catalog = BasisCatalog::new(chain.n_sites)?;
        let coupling = coupling_matrix(&build_positions(chain)?)?;
        let blocks = hamiltonian_blocks(&coupling, &catalog)?;
        let spectral = eigendecompose(&blocks)?;
        Ok(Self { chain: chain.clone(), catalog, spectral })
    }

    pub fn n_sites(&self) -> usize {
        self.catalog.n_sites()
    }

    /// `W = embed(U(φ)) · V(t)`.
    pub fn total_w(&self, phi: &PhiVector, ordering: Ordering, t: f64) -> Result<BlockOperator> {
        total_w(&compose(phi, ordering), &self.spectral.propagator(t), &self.catalog)
    }

    pub fn evaluator(&self, t: f64) -> Result<CoefficientEvaluator> {
        CoefficientEvaluator::new(self, t)
    }
}

pub fn total_w(u: &ErUnitary, v: &BlockOperator, catalog: &BasisCatalog) -> Result<BlockOperator> {
    apply_embedded(u, v, catalog)
}

/// One propagated sender column `V(t)|i 0…0>`, grouped by the first N-4 sites.
#[derive(Clone, Debug)]
struct GroupedColumn {
    sector: usize,
    /// `(head mask, head excitations, ER amplitudes)`, sorted by head.
    groups: Vec<(u64, usize, [C64; 11])>,
}

// ER positions of the receiver-only and ancilla states used below:
// 0001 -> 1, 0010 -> 2, 0011 -> 3, 0100 -> 4, 0101 -> 5, 0110 -> 6, 1000 -> 7, 1001 -> 8, 1010 -> 9
const RECV: [usize; 2] = [1, 2];
const ANC: [(usize, [usize; 2]); 2] = [(4, [5, 6]), (7, [8, 9])];
const SINGLE: [usize; 4] = [1, 2, 4, 7];

/// Fast route from a unitary `U` to the Kraus set or the transfer coefficients.
///
/// `V(t)` is applied once to the sender basis inputs. The coefficient path further
/// contracts the sums over heads with one excitation into a few small matrices, so
/// an evaluation costs a handful of 11x11 products regardless of the chain length.
#[derive(Clone, Debug)]
pub struct CoefficientEvaluator {
    n_sites: usize,
    t: f64,
    /// Inputs 01, 10, 11.
    columns: [GroupedColumn; 3],
    /// Head-vacuum ER amplitudes of the three inputs.
    vac: [[C64; 11]; 3],
    /// `g[i][q] = Σ_h V[h 0000; i 0] conj(V[h q; 11 0])` over one-excitation heads `h`.
    g: [[C64; 4]; 2],
    /// `gram[q][q'] = Σ_h V[h q; 11 0] conj(V[h q'; 11 0])`.
    gram: [[C64; 4]; 4],
}

impl CoefficientEvaluator {
    pub fn new(model: &TransferModel, t: f64) -> Result<Self> {
        let n = model.n_sites();
        let catalog = &model.catalog;
        let mut cols = Vec::with_capacity(3);
        for input in 1..4u64 {
            let cfg = Configuration::from_mask(n, input << (n - 2))?;
            let (k, col) = catalog.index_of(&cfg)?;
            let v = model.spectral.sector(k).propagator_column(t, col);
            let groups = head_groups(catalog, k)?
                .into_iter()
                .map(|g| {
                    let mut amps = [ZERO; 11];
                    for (p, r) in g.rows.iter().enumerate() {
                        if let Some(r) = r {
                            amps[p] = v[*r];
                        }
                    }
                    (g.head, g.head_excitations as usize, amps)
                })
                .collect();
            cols.push(GroupedColumn { sector: k, groups });
        }
        let columns: [GroupedColumn; 3] = cols.try_into().map_err(|_| Error::Parameter("column setup".into()))?;

        let head_vac = |c: &GroupedColumn| c.groups.iter().find(|x| x.0 == 0).map(|x| x.2).unwrap_or([ZERO; 11]);
        let vac = [head_vac(&columns[0]), head_vac(&columns[1]), head_vac(&columns[2])];

        let singles = |c: &GroupedColumn| -> BTreeMap<u64, [C64; 11]> {
            c.groups.iter().filter(|x| x.1 == 1).map(|x| (x.0, x.2)).collect()
        };
        let s01 = singles(&columns[0]);
        let s10 = singles(&columns[1]);
        let mut g = [[ZERO; 4]; 2];
        let mut gram = [[ZERO; 4]; 4];
        for (head, a11) in columns[2].groups.iter().filter(|x| x.1 == 1).map(|x| (x.0, x.2)) {
            for (i, s) in [&s01, &s10].into_iter().enumerate() {
                if let Some(ai) = s.get(&head) {
                    for (q, &pq) in SINGLE.iter().enumerate() {
                        g[i][q] += ai[0] * a11[pq].conj();
                    }
                }
            }
            for (q, &pq) in SINGLE.iter().enumerate() {
                for (r, &pr) in SINGLE.iter().enumerate() {
                    gram[q][r] += a11[pq] * a11[pr].conj();
                }
            }
        }
        Ok(Self { n_sites: n, t, columns, vac, g, gram })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn kraus(&self, u: &ErUnitary) -> KrausSet {
        let mut ops: BTreeMap<u64, Matrix4<C64>> = BTreeMap::new();
        ops.entry(0).or_insert_with(Matrix4::zeros)[(0, 0)] = C64::new(1.0, 0.0);
        for (input, col) in (1..4).zip(&self.columns) {
            for (head, he, amps) in &col.groups {
                let mut amps = *amps;
                if *he < col.sector {
                    apply_er_block(&u.u, &mut amps, col.sector - he);
                }
                for (p, &tail) in ER_ORDER.iter().enumerate() {
                    if amps[p] == ZERO {
                        continue;
                    }
                    let j = (head << 2) | (tail >> 2);
                    ops.entry(j).or_insert_with(Matrix4::zeros)[((tail & 0b11) as usize, input)] = amps[p];
                }
            }
        }
        KrausSet { ops: ops.into_iter().collect() }
    }

    pub fn coefficients(&self, u: &ErUnitary) -> TransferCoefficients {
        let u = &u.u;
        let mut w = self.vac;
        apply_er_block(u, &mut w[0], 1);
        apply_er_block(u, &mut w[1], 1);
        apply_er_block(u, &mut w[2], 2);
        let mut co = TransferCoefficients::from_direct(|n, i| w[i][RECV[n]].conj(), w[2][3].conj());

        for n in 0..2 {
            for i in 0..2 {
                let mut acc = ZERO;
                for (anc00, anc_n) in ANC {
                    acc += w[i][anc00] * w[2][anc_n[n]].conj();
                }
                for (q, &pq) in SINGLE.iter().enumerate() {
                    acc += u[(RECV[n], pq)].conj() * self.g[i][q];
                }
                co.b[n][i] = acc;
            }
        }
        let mut f11 = ZERO;
        for (_, anc_n) in ANC {
            f11 += w[2][anc_n[0]] * w[2][anc_n[1]].conj();
        }
        for (q, &pq) in SINGLE.iter().enumerate() {
            for (r, &pr) in SINGLE.iter().enumerate() {
                f11 += u[(1, pq)] * self.gram[q][r] * u[(2, pr)].conj();
            }
        }
        co.f_11_11 = f11;
        co
    }

    pub fn receiver_state(&self, u: &ErUnitary, rho_s: &TwoQubitState) -> TwoQubitState {
        self.kraus(u).apply(rho_s)
    }
}
