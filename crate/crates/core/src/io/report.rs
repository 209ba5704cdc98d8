//! Machine-readable reports.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::er_unitary::Ordering;
use crate::operations::{Check, ResidualReport};
use crate::transfer::TransferCoefficients;

/// Distance between two phases on the circle, in `[0, π]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    ((a - b + PI).rem_euclid(TAU) - PI).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Verdict {
    pub fn measured(name: impl Into<String>, error: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let status = if error <= tolerance { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, error: Some(error), tolerance: Some(tolerance), detail: detail.into() }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { name: name.into(), status: Status::Skipped, error: None, tolerance: None, detail: reason.into() }
    }

    pub fn from_check(check: &Check, tolerance: f64) -> Self {
        Self::measured(&check.name, check.max_error, tolerance, &check.detail)
    }
}

/// A complex number in both cartesian and polar form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
    pub phase: f64,
}

impl From<C64> for ComplexEntry {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im, magnitude: z.norm(), phase: z.arg() }
    }
}

impl ComplexEntry {
    fn is_finite(&self) -> bool {
        [self.re, self.im, self.magnitude, self.phase].iter().all(|x| x.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedCoefficient {
    pub name: String,
    #[serde(flatten)]
    pub value: ComplexEntry,
}

pub fn coefficient_entries(co: &TransferCoefficients) -> Vec<NamedCoefficient> {
    co.named().into_iter().map(|(name, z)| NamedCoefficient { name, value: z.into() }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub ordering: Ordering,
    pub seed: Option<u64>,
    pub config_digest: String,
    pub n_sites: usize,
    pub time: f64,
}

impl Provenance {
    pub fn new(ordering: Ordering, seed: Option<u64>, config_digest: String, n_sites: usize, time: f64) -> Self {
        Self { version: env!("CARGO_PKG_VERSION").to_string(), ordering, seed, config_digest, n_sites, time }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub coefficients: Vec<NamedCoefficient>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub patterns: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub residuals: Vec<ComplexEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux: Option<ComplexEntry>,
    pub verdicts: Vec<Verdict>,
    /// Command-specific payload.
    #[serde(skip_serializing_if = "serde_json::Value::is_null", default)]
    pub data: serde_json::Value,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(command: &str, provenance: Provenance) -> Self {
        Self {
            command: command.into(),
            operation: None,
            coefficients: Vec::new(),
            patterns: Vec::new(),
            residuals: Vec::new(),
            residual_norm: None,
            objective: None,
            aux: None,
            verdicts: Vec::new(),
            data: serde_json::Value::Null,
            provenance,
        }
    }

    pub fn set_residuals(&mut self, r: &ResidualReport) {
        self.residuals = r.residuals.iter().map(|&z| z.into()).collect();
        self.residual_norm = Some(r.norm);
        self.objective = Some(r.objective);
        self.aux = r.aux.map(Into::into);
    }

    /// Fail if any verdict failed; skipped verdicts do not count.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.status != Status::Fail)
    }

    /// Replace non-finite numbers by a failing verdict so that the document stays valid.
    pub fn finalize(&mut self) {
        let mut bad = Vec::new();
        for c in &self.coefficients {
            if !c.value.is_finite() {
                bad.push(c.name.clone());
            }
        }
        if self.residuals.iter().any(|r| !r.is_finite()) {
            bad.push("residuals".into());
        }
        for (name, v) in [("residual_norm", self.residual_norm), ("objective", self.objective)] {
            if v.is_some_and(|x| !x.is_finite()) {
                bad.push(name.into());
            }
        }
        if self.aux.as_ref().is_some_and(|a| !a.is_finite()) {
            bad.push("aux".into());
        }
        for v in &mut self.verdicts {
            if v.error.is_some_and(|e| !e.is_finite()) {
                v.error = None;
                v.status = Status::Fail;
                v.detail = format!("{} (non-finite error)", v.detail);
            }
        }
        if !bad.is_empty() {
            self.verdicts.push(Verdict {
                name: "finite values".into(),
                status: Status::Fail,
                error: None,
                tolerance: None,
                detail: format!("non-finite: {}", bad.join(", ")),
            });
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_distance_wraps() {
        assert!((phase_distance(3.1, -3.1) - (TAU - 6.2)).abs() < 1e-12);
        assert!(phase_distance(0.5, 0.5 + 4.0 * PI) < 1e-12);
        assert!((phase_distance(0.0, PI) - PI).abs() < 1e-12);
        assert!((phase_distance(1.0, 0.9) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn verdict_status() {
        assert_eq!(Verdict::measured("x", 1e-4, 1e-3, "").status, Status::Pass);
        assert_eq!(Verdict::measured("x", 1e-2, 1e-3, "").status, Status::Fail);
        assert_eq!(Verdict::measured("x", f64::NAN, 1e-3, "").status, Status::Fail);
    }

    #[test]
    fn non_finite_values_fail_the_report() {
        let mut r = Report::new("test", Provenance::new(Ordering::Canonical, None, String::new(), 6, 1.0));
        r.verdicts.push(Verdict::skipped("a", "nothing to do"));
        assert!(r.passed());
        r.objective = Some(f64::NAN);
        r.finalize();
        assert!(!r.passed());
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["verdicts"][0]["status"], "skipped");
    }
}
