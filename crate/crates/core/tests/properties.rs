mod common;

use std::sync::OnceLock;

use common::max_diff;
use erxfer_core::er_unitary::{compose, embed};
use erxfer_core::evolution::DEFAULT_TIME;
use erxfer_core::transfer::{coherence_order, receiver_state};
use erxfer_core::{BasisCatalog, ChainSpec, CoefficientEvaluator, Ordering, PhiVector, TransferModel, TwoQubitState, C64};
use nalgebra::Matrix4;
use proptest::prelude::*;

struct Fixture {
    model: TransferModel,
    evaluator: CoefficientEvaluator,
}

fn default_chain() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let model = TransferModel::build(&ChainSpec::default()).unwrap();
        let evaluator = model.evaluator(DEFAULT_TIME).unwrap();
        Fixture { model, evaluator }
    })
}

fn small_model() -> &'static TransferModel {
    static M: OnceLock<TransferModel> = OnceLock::new();
    M.get_or_init(|| TransferModel::build(&ChainSpec { n_sites: 7, ..ChainSpec::default() }).unwrap())
}

fn angles() -> impl Strategy<Value = PhiVector> {
    prop::collection::vec(-10.0f64..10.0, 42).prop_map(|v| PhiVector::from_flat(&v).unwrap())
}

fn ordering() -> impl Strategy<Value = Ordering> {
    prop::sample::select(Ordering::ALL.to_vec())
}

fn state() -> impl Strategy<Value = TwoQubitState> {
    prop::collection::vec(-1.0f64..1.0, 32).prop_map(|v| {
        let g = Matrix4::from_fn(|i, j| C64::new(v[2 * (4 * i + j)], v[2 * (4 * i + j) + 1]));
        let m = g * g.adjoint();
        let tr = m.trace();
        TwoQubitState::new(m / tr)
    })
}

fn reversed(o: Ordering) -> Ordering {
    match o {
        Ordering::Canonical => Ordering::AlternateSwapped,
        Ordering::AlternateSwapped => Ordering::Canonical,
        Ordering::Alternate => Ordering::CanonicalSwapped,
        Ordering::CanonicalSwapped => Ordering::Alternate,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn er_unitary_is_unitary_and_conserves_excitations(phi in angles(), o in ordering()) {
        let u = compose(&phi, o);
        prop_assert!(u.unitarity_error() < 1e-12);
        prop_assert!(u.sector_leakage() == 0.0);
        prop_assert_eq!(u.u[(0, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn negated_reversed_product_is_inverse(phi in angles(), o in ordering()) {
        let neg = PhiVector::from_flat(&phi.to_flat().map(|x| -x)).unwrap();
        let inv = compose(&neg, reversed(o));
        let adj = compose(&phi, o).adjoint();
        prop_assert!((inv.u - adj.u).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn wrapping_does_not_change_the_unitary(phi in angles(), k in -3i32..3) {
        let shifted: Vec<f64> = phi.to_flat().iter().map(|x| x + k as f64 * std::f64::consts::TAU).collect();
        let a = compose(&phi, Ordering::Canonical);
        let b = compose(&PhiVector::from_flat(&shifted).unwrap(), Ordering::Canonical);
        prop_assert!((a.u - b.u).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn embedded_unitary_and_total_w_are_unitary(phi in angles(), t in 0.0f64..40.0) {
        let m = small_model();
        let e = embed(&compose(&phi, Ordering::Canonical), &m.catalog).unwrap();
        prop_assert!(e.unitarity_error() < 1e-12);
        let w = m.total_w(&phi, Ordering::Canonical, t).unwrap();
        prop_assert!(w.unitarity_error() < 1e-12);
    }

    #[test]
    fn kraus_set_is_complete(phi in angles(), o in ordering()) {
        let k = default_chain().evaluator.kraus(&compose(&phi, o));
        prop_assert!(k.completeness_error() < 1e-12);
    }

    #[test]
    fn receiver_state_is_a_density_matrix(phi in angles(), rho in state()) {
        let out = default_chain().evaluator.receiver_state(&compose(&phi, Ordering::Canonical), &rho);
        prop_assert!(out.hermiticity_error() < 1e-12);
        prop_assert!((out.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(out.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn channel_is_linear(phi in angles(), r1 in state(), r2 in state(), p in 0.0f64..1.0) {
        let ev = &default_chain().evaluator;
        let u = compose(&phi, Ordering::Canonical);
        let mix = TwoQubitState::new(r1.rho * C64::new(p, 0.0) + r2.rho * C64::new(1.0 - p, 0.0));
        let lhs = ev.receiver_state(&u, &mix).rho;
        let rhs = ev.receiver_state(&u, &r1).rho * C64::new(p, 0.0) + ev.receiver_state(&u, &r2).rho * C64::new(1.0 - p, 0.0);
        prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn transfer_tensor_respects_coherence_orders(phi in angles()) {
        let t = default_chain().evaluator.kraus(&compose(&phi, Ordering::Canonical)).tensor();
        for r in 0..16 {
            for c in 0..16 {
                if coherence_order(r / 4, r % 4) != coherence_order(c / 4, c % 4) {
                    prop_assert!(t[(r, c)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn coefficient_identities_hold(phi in angles(), o in ordering()) {
        let co = default_chain().evaluator.coefficients(&compose(&phi, o));
        prop_assert!(co.identity_error() < 1e-12);
    }

    #[test]
    fn coefficients_predict_receiver_entries(phi in angles(), rho in state()) {
        let ev = &default_chain().evaluator;
        let u = compose(&phi, Ordering::Canonical);
        let out = ev.receiver_state(&u, &rho);
        for (idx, v) in ev.coefficients(&u).predict_upper(&rho) {
            prop_assert!((out.rho[idx] - v).norm() < 1e-12);
        }
    }
}

#[test]
fn fast_evaluator_agrees_with_full_route_at_default_size() {
    let f = default_chain();
    let phi = PhiVector::from_flat(&(0..42).map(|i| 0.37 * i as f64).collect::<Vec<_>>()).unwrap();
    let w = f.model.total_w(&phi, Ordering::Canonical, DEFAULT_TIME).unwrap();
    assert!(w.unitarity_error() < 1e-12);
    let cat: &BasisCatalog = &f.model.catalog;
    let rho = TwoQubitState::new(Matrix4::from_fn(|i, j| if i == j { C64::new(0.25, 0.0) } else { C64::new(0.05, 0.01 * (i as f64 - j as f64)) }));
    let full = receiver_state(&rho, &w, cat).unwrap();
    let fast = f.evaluator.receiver_state(&compose(&phi, Ordering::Canonical), &rho);
    assert!(full.max_abs_diff(&fast) < 1e-12);
}
