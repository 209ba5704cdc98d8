//! Published coefficient values and the checks run against them.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::er_unitary::{compose, Ordering, PhiVector};
use crate::error::{Error, Result};
use crate::io::config::OperationConfig;
use crate::io::phi_table::{load_phi_table, read_phi_table};
use crate::io::report::{phase_distance, Verdict};
use crate::operations::{residual_unchecked, DEFAULT_SYSTEM};
use crate::transfer::{CoefficientEvaluator, TransferCoefficients};

const BUNDLED: &str = include_str!("../../../../data/reference.toml");

const BUNDLED_TABLES: [(&str, &str); 4] = [
    ("phi/row1_zero1.csv", include_str!("../../../../data/phi/row1_zero1.csv")),
    ("phi/row2_rearrange.csv", include_str!("../../../../data/phi/row2_rearrange.csv")),
    ("phi/row3_lincomb.csv", include_str!("../../../../data/phi/row3_lincomb.csv")),
    ("phi/row4_linsys.csv", include_str!("../../../../data/phi/row4_linsys.csv")),
];

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrintedTolerances {
    pub magnitude_tol: f64,
    pub phase_tol: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientTolerances {
    pub magnitude_tol: f64,
    pub phase_tol: f64,
    pub zero_tol: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRow {
    pub name: String,
    pub source: String,
    pub phi_table: Option<String>,
    pub operation: String,
    pub system: Option<[[f64; 2]; 2]>,
    pub others_zero: bool,
    /// Polar `[magnitude, phase]` per coefficient name.
    #[serde(default)]
    pub expected: BTreeMap<String, [f64; 2]>,
    pub objective: Option<f64>,
}

impl ReferenceRow {
    pub fn operation_config(&self) -> OperationConfig {
        OperationConfig { name: self.operation.clone(), system: self.system.unwrap_or(DEFAULT_SYSTEM), lincomb: None }
    }

    /// The row's angle table, from `dir` when given, otherwise the bundled copy.
    pub fn load_phi(&self, dir: Option<&Path>) -> Result<Option<PhiVector>> {
        let Some(file) = &self.phi_table else { return Ok(None) };
        if let Some(dir) = dir {
            return load_phi_table(&dir.join(Path::new(file).file_name().unwrap_or_default())).map(Some);
        }
        let text = BUNDLED_TABLES
            .iter()
            .find(|(name, _)| name == file)
            .map(|(_, t)| *t)
            .ok_or_else(|| Error::Format(format!("no bundled angle table {file}")))?;
        read_phi_table(text.as_bytes()).map(Some)
    }

    /// Compare computed coefficients with this row.
    pub fn check(&self, co: &TransferCoefficients, tol: &CoefficientTolerances) -> Result<Vec<Verdict>> {
        let mut out = Vec::new();
        for (name, [mag, phase]) in &self.expected {
            let z = co.get(name).ok_or_else(|| Error::Format(format!("row {}: unknown coefficient {name}", self.name)))?;
            out.push(Verdict::measured(
                format!("{} |{name}|", self.name),
                (z.norm() - mag).abs(),
                tol.magnitude_tol,
                format!("computed {:.6}, expected {mag:.4}", z.norm()),
            ));
            out.push(Verdict::measured(
                format!("{} arg {name}", self.name),
                phase_distance(z.arg(), *phase),
                tol.phase_tol,
                format!("computed {:.6}, expected {phase:.4}", z.arg()),
            ));
        }
        if self.others_zero {
            let (worst, which) = co
                .named()
                .into_iter()
                .filter(|(n, _)| !self.expected.contains_key(n))
                .map(|(n, z)| (z.norm(), n))
                .fold((0.0, String::new()), |acc, x| if x.0 > acc.0 { x } else { acc });
            out.push(Verdict::measured(
                format!("{} designated zeros", self.name),
                worst,
                tol.zero_tol,
                format!("largest unlisted coefficient {which}"),
            ));
        }
        if let Some(expected) = self.objective {
            let spec = self.operation_config().to_spec()?;
            let r = residual_unchecked(&spec, co);
            out.push(Verdict::measured(
                format!("{} pattern residual", self.name),
                r.norm,
                tol.zero_tol,
                format!("{} residual norm", spec.name()),
            ));
            out.push(Verdict::measured(
                format!("{} objective", self.name),
                (r.objective - expected).abs(),
                tol.magnitude_tol,
                format!("computed {:.6}, expected {expected:.4}", r.objective),
            ));
        }
        Ok(out)
    }
}

/// `target = conj(x)·y` among printed values of one row.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityCheck {
    pub row: String,
    pub target: String,
    pub x: String,
    pub y: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub printed: PrintedTolerances,
    pub coefficients: CoefficientTolerances,
    pub row: Vec<ReferenceRow>,
    #[serde(default)]
    pub identity: Vec<IdentityCheck>,
}

impl Reference {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled reference data parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("reference data: {e}")))
    }

    pub fn row(&self, name: &str) -> Option<&ReferenceRow> {
        self.row.iter().find(|r| r.name == name)
    }

    fn printed(&self, row: &str, name: &str) -> Result<C64> {
        let [m, p] = self
            .row(row)
            .and_then(|r| r.expected.get(name))
            .ok_or_else(|| Error::Format(format!("identity refers to missing value {row}/{name}")))?;
        Ok(C64::from_polar(*m, *p))
    }

    /// Check the product identities on the printed values themselves.
    pub fn check_printed(&self) -> Result<Vec<Verdict>> {
        let mut out = Vec::new();
        for id in &self.identity {
            let t = self.printed(&id.row, &id.target)?;
            let x = self.printed(&id.row, &id.x)?;
            let y = self.printed(&id.row, &id.y)?;
            let p = x.conj() * y;
            let label = format!("printed {} {} = conj({})·{}", id.row, id.target, id.x, id.y);
            out.push(Verdict::measured(
                format!("{label} magnitude"),
                (t.norm() - p.norm()).abs(),
                self.printed.magnitude_tol,
                format!("{:.4} vs {:.4}×{:.4} = {:.5}", t.norm(), x.norm(), y.norm(), p.norm()),
            ));
            out.push(Verdict::measured(
                format!("{label} phase"),
                phase_distance(t.arg(), y.arg() - x.arg()),
                self.printed.phase_tol,
                format!("{:.4} vs {:.4} - ({:.4})", t.arg(), y.arg(), x.arg()),
            ));
        }
        Ok(out)
    }
}

/// Outcome of evaluating one published angle table.
#[derive(Clone, Debug)]
pub struct RowOutcome {
    pub row: String,
    pub coefficients: TransferCoefficients,
    pub verdicts: Vec<Verdict>,
}

/// Evaluate every row with an angle table and compare with its published values.
pub fn verify_rows(
    reference: &Reference,
    evaluator: &CoefficientEvaluator,
    ordering: Ordering,
    table_dir: Option<&Path>,
) -> Result<Vec<RowOutcome>> {
    let mut out = Vec::new();
    for row in &reference.row {
        let Some(phi) = row.load_phi(table_dir)? else { continue };
        let co = evaluator.coefficients(&compose(&phi, ordering));
        let verdicts = row.check(&co, &reference.coefficients)?;
        out.push(RowOutcome { row: row.name.clone(), coefficients: co, verdicts });
    }
    Ok(out)
}
