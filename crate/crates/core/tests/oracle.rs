mod common;

use common::{brute_force_receiver, dense_hamiltonian, dense_propagator, max_diff, random_phi, random_state};
use erxfer_core::basis::BasisCatalog;
use erxfer_core::er_unitary::compose;
use erxfer_core::transfer::receiver_state;
use erxfer_core::{ChainSpec, ErUnitary, Ordering, TransferModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_chain(n: usize) -> ChainSpec {
    ChainSpec { n_sites: n, ..ChainSpec::default() }
}

#[test]
fn sector_blocks_match_dense_hamiltonian() {
    for n in [6, 7] {
        let chain = small_chain(n);
        let h = dense_hamiltonian(&chain);
        let model = TransferModel::build(&chain).unwrap();
        let cat = BasisCatalog::new(n).unwrap();
        let v = model.spectral.propagator(1.7);
        let dense = dense_propagator(&h, 1.7);
        for k in 0..=2 {
            for (i, ci) in cat.sector(k).iter().enumerate() {
                for (j, cj) in cat.sector(k).iter().enumerate() {
                    let diff = (v.element(k, i, j) - dense[(ci.mask() as usize, cj.mask() as usize)]).norm();
                    assert!(diff < 1e-12, "n={n} k={k} ({i},{j}) diff {diff:e}");
                }
            }
        }
    }
}

#[test]
fn free_evolution_matches_dense_receiver() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let chain = small_chain(6);
    let model = TransferModel::build(&chain).unwrap();
    let h = dense_hamiltonian(&chain);
    for _ in 0..5 {
        let t = rng.random_range(0.0..20.0);
        let rho = random_state(&mut rng);
        let want = brute_force_receiver(&h, &ErUnitary::identity(), t, &rho);
        let w = model.spectral.propagator(t);
        let got = receiver_state(&rho, &w, &model.catalog).unwrap();
        assert!(max_diff(&got.rho, &want) < 1e-12);
    }
}

#[test]
fn controlled_evolution_matches_dense_receiver() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [6, 8] {
        let chain = small_chain(n);
        let model = TransferModel::build(&chain).unwrap();
        let h = dense_hamiltonian(&chain);
        for _ in 0..4 {
            let t = rng.random_range(0.0..30.0);
            let phi = random_phi(&mut rng);
            let rho = random_state(&mut rng);
            let u = compose(&phi, Ordering::Canonical);
            let want = brute_force_receiver(&h, &u, t, &rho);
            let w = model.total_w(&phi, Ordering::Canonical, t).unwrap();
            let full = receiver_state(&rho, &w, &model.catalog).unwrap();
            let fast = model.evaluator(t).unwrap().receiver_state(&u, &rho);
            assert!(max_diff(&full.rho, &want) < 1e-12, "n={n}");
            assert!(max_diff(&fast.rho, &want) < 1e-12, "n={n}");
        }
    }
}
