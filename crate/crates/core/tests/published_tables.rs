use erxfer_core::er_unitary::compose;
use erxfer_core::evolution::DEFAULT_TIME;
use erxfer_core::io::reference::verify_rows;
use erxfer_core::io::{Reference, Status};
use erxfer_core::operations::verify_application;
use erxfer_core::{ChainSpec, Ordering, TransferModel};

fn evaluator() -> erxfer_core::CoefficientEvaluator {
    TransferModel::build(&ChainSpec::default()).unwrap().evaluator(DEFAULT_TIME).unwrap()
}

#[test]
fn printed_values_are_self_consistent() {
    let verdicts = Reference::bundled().check_printed().unwrap();
    assert!(!verdicts.is_empty());
    for v in verdicts {
        assert_eq!(v.status, Status::Pass, "{v:?}");
    }
}

#[test]
fn published_angles_reproduce_published_coefficients_only_under_canonical_ordering() {
    let ev = evaluator();
    let reference = Reference::bundled();
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/phi");
    for ordering in Ordering::ALL {
        let rows = verify_rows(&reference, &ev, ordering, Some(&dir)).unwrap();
        assert_eq!(rows.len(), 4);
        let all_pass = rows.iter().all(|r| r.verdicts.iter().all(|v| v.status == Status::Pass));
        assert_eq!(all_pass, ordering == Ordering::Canonical, "{ordering}");
    }
}

#[test]
fn published_angles_implement_their_operations_to_table_precision() {
    let ev = evaluator();
    let reference = Reference::bundled();
    for row in reference.row.iter().filter(|r| r.phi_table.is_some()) {
        let phi = row.load_phi(None).unwrap().unwrap();
        let spec = row.operation_config().to_spec().unwrap();
        let u = compose(&phi, Ordering::Canonical);
        let co = ev.coefficients(&u);
        // angles are printed with four decimals
        let rep = verify_application(&spec, &ev.kraus(&u), &co, 1e-3).unwrap();
        assert!(rep.passed(), "{}: {:?}", row.name, rep.failures());
        assert!(spec.residual(&co).unwrap().norm < 1e-3, "{}", row.name);
    }
}
