//! φ-table files: CSV rows `kind,n,m,phi_radians`, one per angle, any order.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::er_unitary::{pair_index, Kind, PhiVector, N_ANGLES};
use crate::error::{Error, Result};

pub const HEADER: [&str; 4] = ["kind", "n", "m", "phi_radians"];

pub fn read_phi_table<R: Read>(reader: R) -> Result<PhiVector> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut phi = PhiVector::zeros();
    let mut seen = BTreeSet::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))?;
        if line == 0 && rec.iter().eq(HEADER) {
            continue;
        }
        if rec.len() != 4 {
            return Err(Error::Format(format!("row {}: expected 4 fields, got {}", line + 1, rec.len())));
        }
        let field = |i: usize| rec[i].to_string();
        let parse_u = |i: usize| {
            field(i).parse::<usize>().map_err(|_| Error::Format(format!("row {}: bad integer {:?}", line + 1, field(i))))
        };
        let kind = Kind::from_number(parse_u(0)? as u8)
            .map_err(|_| Error::Format(format!("row {}: kind must be 1 or 2", line + 1)))?;
        let (n, m) = (parse_u(1)?, parse_u(2)?);
        if pair_index(n, m).is_none() {
            return Err(Error::Format(format!("row {}: pair ({n},{m}) carries no angle", line + 1)));
        }
        let value: f64 = field(3)
            .parse()
            .map_err(|_| Error::Format(format!("row {}: bad angle {:?}", line + 1, field(3))))?;
        if !seen.insert((kind, n, m)) {
            return Err(Error::Format(format!("row {}: duplicate entry for kind {} pair ({n},{m})", line + 1, kind.number())));
        }
        phi.set(kind, n, m, value).map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))?;
    }
    if seen.len() != N_ANGLES {
        return Err(Error::Format(format!("expected {N_ANGLES} rows, found {}", seen.len())));
    }
    Ok(phi)
}

pub fn load_phi_table(path: &Path) -> Result<PhiVector> {
    let file = std::fs::File::open(path)?;
    read_phi_table(file).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_phi_table<W: Write>(phi: &PhiVector, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for (kind, n, m, v) in phi.entries() {
        w.write_record([kind.number().to_string(), n.to_string(), m.to_string(), format!("{v:.17}")]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_phi_table(phi: &PhiVector, path: &Path) -> Result<()> {
    write_phi_table(phi, std::fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(rows: &[String]) -> String {
        let mut s = "kind,n,m,phi_radians\n".to_string();
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    fn full_rows() -> Vec<String> {
        PhiVector::zeros().entries().map(|(k, n, m, _)| format!("{},{n},{m},0.5", k.number())).collect()
    }

    #[test]
    fn reads_complete_table_in_any_order() {
        let mut rows = full_rows();
        rows.reverse();
        let phi = read_phi_table(table(&rows).as_bytes()).unwrap();
        assert!(phi.to_flat().iter().all(|&x| x == 0.5));
    }

    #[test]
    fn rejects_duplicates_and_missing_rows() {
        let mut rows = full_rows();
        rows[3] = rows[2].clone();
        let err = read_phi_table(table(&rows).as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        let rows = &full_rows()[..41];
        assert!(read_phi_table(table(rows).as_bytes()).is_err());
    }

    #[test]
    fn rejects_malformed_rows() {
        for bad in ["1,1,2,0.5", "3,2,3,0.5", "1,2,3,abc", "1,2,3"] {
            let mut rows = full_rows();
            rows[0] = bad.to_string();
            assert!(matches!(read_phi_table(table(&rows).as_bytes()), Err(Error::Format(_))), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn write_read_round_trip(vals in proptest::collection::vec(-20.0f64..20.0, N_ANGLES)) {
            let phi = PhiVector::from_flat(&vals).unwrap();
            let mut buf = Vec::new();
            write_phi_table(&phi, &mut buf).unwrap();
            let back = read_phi_table(buf.as_slice()).unwrap();
            prop_assert!(phi.max_angle_distance(&back) < 1e-14);
        }
    }
}
