#![allow(dead_code)]

use erxfer_core::basis::ER_ORDER;
use erxfer_core::chain::{build_positions, coupling_matrix};
use erxfer_core::{ChainSpec, ErUnitary, PhiVector, TwoQubitState, C64};
use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen};
use rand::Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn on_site(n: usize, site: usize, m: &Matrix2<C64>) -> DMatrix<C64> {
    let left = DMatrix::<C64>::identity(1 << site, 1 << site);
    let right = DMatrix::<C64>::identity(1 << (n - 1 - site), 1 << (n - 1 - site));
    let m = DMatrix::from_iterator(2, 2, m.iter().copied());
    left.kronecker(&m).kronecker(&right)
}

/// Full 2^N Hamiltonian `sum_{i<j} D_ij/4 (X_i X_j + Y_i Y_j)`, site 1 most significant.
pub fn dense_hamiltonian(chain: &ChainSpec) -> DMatrix<f64> {
    let n = chain.n_sites;
    let d = coupling_matrix(&build_positions(chain).unwrap()).unwrap().d;
    let x = Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
    let y = Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0));
    let xs: Vec<_> = (0..n).map(|i| on_site(n, i, &x)).collect();
    let ys: Vec<_> = (0..n).map(|i| on_site(n, i, &y)).collect();
    let dim = 1 << n;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..n {
        for j in i + 1..n {
            h += (&xs[i] * &xs[j] + &ys[i] * &ys[j]) * c(d[(i, j)] / 4.0, 0.0);
        }
    }
    assert!(h.iter().all(|z| z.im.abs() < 1e-15));
    h.map(|z| z.re)
}

pub fn dense_propagator(h: &DMatrix<f64>, t: f64) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let q = eig.eigenvectors.map(|x| c(x, 0.0));
    let phase = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)));
    &q * phase * q.transpose()
}

/// Receiver state from dense evolution of `rho_s ⊗ |0…0⟩` under `(I ⊗ U) e^{-iHt}`,
/// with `h` from [`dense_hamiltonian`].
/// `U` acts as identity on the five 4-site tails it does not address.
pub fn brute_force_receiver(h: &DMatrix<f64>, u: &ErUnitary, t: f64, rho_s: &TwoQubitState) -> Matrix4<C64> {
    let n = h.nrows().trailing_zeros() as usize;
    let v = dense_propagator(h, t);
    let mut u16 = DMatrix::<C64>::identity(16, 16);
    for (p, &tp) in ER_ORDER.iter().enumerate() {
        for (q, &tq) in ER_ORDER.iter().enumerate() {
            u16[(tp as usize, tq as usize)] = u.u[(p, q)];
        }
    }
    let w = DMatrix::<C64>::identity(1 << (n - 4), 1 << (n - 4)).kronecker(&u16) * v;
    let dim = 1 << n;
    let mut rho0 = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..4 {
        for j in 0..4 {
            rho0[(i << (n - 2), j << (n - 2))] = rho_s.rho[(i, j)];
        }
    }
    let rho = &w * rho0 * w.adjoint();
    let mut out = Matrix4::zeros();
    for h in 0..1usize << (n - 2) {
        for r in 0..4 {
            for s in 0..4 {
                out[(r, s)] += rho[((h << 2) | r, (h << 2) | s)];
            }
        }
    }
    out
}

pub fn random_state<R: Rng>(rng: &mut R) -> TwoQubitState {
    let g = Matrix4::from_fn(|_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = g * g.adjoint();
    let tr = m.trace();
    TwoQubitState::new(m / tr)
}

pub fn random_phi<R: Rng>(rng: &mut R) -> PhiVector {
    let v: Vec<f64> = (0..42).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    PhiVector::from_flat(&v).unwrap()
}

pub fn max_diff(a: &Matrix4<C64>, b: &Matrix4<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
