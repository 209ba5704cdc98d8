//! Target operations on the transferred density matrix, expressed as residuals
//! over the transfer coefficients and checked directly on receiver states.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transfer::{KrausSet, TransferCoefficients, TwoQubitState, E01, E10};

/// Minimum objective for a solution to count as non-degenerate.
pub const DEFAULT_OBJECTIVE_FLOOR: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroVariant {
    /// Zeroes the entries fed by `a[01][01]`.
    First = 1,
    /// Zeroes the entries fed by `a[10][10]`.
    Second = 2,
    /// Zeroes the entries fed by `d`.
    Third = 3,
}

impl ZeroVariant {
    pub fn from_number(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            3 => Ok(Self::Third),
            _ => Err(Error::Parameter(format!("zero-triplet variant must be 1, 2 or 3, got {v}"))),
        }
    }
}

/// Target ratios, per unit α, of the coefficients in the receiver entries
/// `(00;01)` and `(00;10)` (sources `00;01`, `00;10`, `01;11`, `10;11`) and of `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinCombTargets {
    pub alpha: [C64; 4],
    pub beta: [C64; 4],
    pub gamma: C64,
}

impl Default for LinCombTargets {
    /// Truncated series of `α(e^x - 1)` and `α(e^-x - 1)`, and `α/5!` for the fifth power.
    fn default() -> Self {
        let r = |x: f64| C64::new(x, 0.0);
        Self {
            alpha: [r(1.0), r(0.5), r(1.0 / 6.0), r(1.0 / 24.0)],
            beta: [r(-1.0), r(0.5), r(-1.0 / 6.0), r(1.0 / 24.0)],
            gamma: r(1.0 / 120.0),
        }
    }
}

impl LinCombTargets {
    fn weights(&self) -> [C64; 9] {
        let [a1, a2, a3, a4] = self.alpha;
        let [b1, b2, b3, b4] = self.beta;
        [a1, a2, a3, a4, b1, b2, b3, b4, self.gamma]
    }

    fn validate(&self) -> Result<()> {
        let w = self.weights();
        if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parameter("linear-combination ratios must be finite".into()));
        }
        if w.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::Parameter("linear-combination ratios are all zero".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OperationSpec {
    Restore,
    ZeroTriplet(ZeroVariant),
    Rearrange,
    LinComb(LinCombTargets),
    /// Real 2x2 system matrix.
    LinSys([[f64; 2]; 2]),
}

/// The system matrix used for the linear-system demonstration.
pub const DEFAULT_SYSTEM: [[f64; 2]; 2] = [[0.4, 0.3], [0.6, 0.2]];

impl OperationSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            OperationSpec::LinComb(t) => t.validate(),
            OperationSpec::LinSys(a) => {
                if a.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::Parameter("system matrix must be finite".into()));
                }
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
                if det.abs() <= 1e-12 * scale * scale.max(1e-300) || det == 0.0 {
                    return Err(Error::Parameter(format!("system matrix is singular (det = {det:e})")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            OperationSpec::Restore => "restore".into(),
            OperationSpec::ZeroTriplet(v) => format!("zero{}", *v as u8),
            OperationSpec::Rearrange => "rearrange".into(),
            OperationSpec::LinComb(_) => "lincomb".into(),
            OperationSpec::LinSys(_) => "linsys".into(),
        }
    }

    /// Residual vector and figure of merit for the given coefficients.
    pub fn residual(&self, co: &TransferCoefficients) -> Result<ResidualReport> {
        self.validate()?;
        Ok(residual_unchecked(self, co))
    }
}

impl fmt::Display for OperationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residuals: Vec<C64>,
    pub norm: f64,
    pub objective: f64,
    /// Fitted α (linear combinations) or c (linear systems).
    pub aux: Option<C64>,
}

impl ResidualReport {
    fn new(residuals: Vec<C64>, objective: f64, aux: Option<C64>) -> Self {
        let norm = residuals.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Self { residuals, norm, objective, aux }
    }
}

fn restore_residuals(co: &TransferCoefficients) -> Vec<C64> {
    vec![
        co.a[E01][E10],
        co.a[E10][E01],
        co.b[E01][E01],
        co.b[E01][E10],
        co.b[E10][E01],
        co.b[E10][E10],
        co.f_11_11,
    ]
}

/// `residual` without validating the spec; used in the optimizer's inner loop.
pub fn residual_unchecked(spec: &OperationSpec, co: &TransferCoefficients) -> ResidualReport {
    let abs = |z: C64| z.norm();
    match spec {
        OperationSpec::Restore => {
            let objective = abs(co.a[E01][E01])
                + abs(co.a[E10][E10])
                + abs(co.c[E01][E01])
                + abs(co.c[E10][E10])
                + abs(co.f[E01][E10])
                + abs(co.d);
            ResidualReport::new(restore_residuals(co), objective, None)
        }
        OperationSpec::ZeroTriplet(v) => {
            let mut r = restore_residuals(co);
            let objective = match v {
                ZeroVariant::First => {
                    r.push(co.a[E01][E01]);
                    abs(co.a[E10][E10]) + abs(co.c[E10][E10]) + abs(co.d)
                }
                ZeroVariant::Second => {
                    r.push(co.a[E10][E10]);
                    abs(co.a[E01][E01]) + abs(co.c[E01][E01]) + abs(co.d)
                }
                ZeroVariant::Third => {
                    r.push(co.d);
                    abs(co.a[E01][E01]) + abs(co.a[E10][E10]) + abs(co.f[E01][E10])
                }
            };
            ResidualReport::new(r, objective, None)
        }
        OperationSpec::Rearrange => {
            let r = vec![
                co.a[E01][E01],
                co.a[E10][E10],
                co.b[E01][E01],
                co.b[E01][E10],
                co.b[E10][E01],
                co.b[E10][E10],
                co.f_11_11,
            ];
            let objective = abs(co.a[E01][E10])
                + abs(co.a[E10][E01])
                + abs(co.c[E01][E10])
                + abs(co.c[E10][E01])
                + abs(co.f[E10][E01])
                + abs(co.d);
            ResidualReport::new(r, objective, None)
        }
        OperationSpec::LinComb(targets) => {
            let y = lincomb_observed(co);
            let w = targets.weights();
            let den: f64 = w.iter().map(|z| z.norm_sqr()).sum();
            let alpha: C64 = w.iter().zip(&y).map(|(wk, yk)| wk.conj() * yk).sum::<C64>() / den;
            let r = y.iter().zip(&w).map(|(yk, wk)| yk - wk * alpha).collect();
            ResidualReport::new(r, alpha.norm(), Some(alpha))
        }
        OperationSpec::LinSys(a) => {
            let m = system_response(co, a);
            let c = (m[0][0] + m[1][1]) * 0.5;
            let r = vec![m[0][1], m[1][0], m[0][0] - c, m[1][1] - c, C64::new(c.im, 0.0)];
            ResidualReport::new(r, c.re, Some(c))
        }
    }
}

/// The nine coefficients a linear-combination target constrains, in target order.
fn lincomb_observed(co: &TransferCoefficients) -> [C64; 9] {
    [
        co.a[E01][E01],
        co.a[E01][E10],
        co.b[E01][E01],
        co.b[E01][E10],
        co.a[E10][E01],
        co.a[E10][E10],
        co.b[E10][E01],
        co.b[E10][E10],
        co.d,
    ]
}

/// `a · A`: receiver first-order entries as functions of the unknowns `x`.
pub fn system_response(co: &TransferCoefficients, a: &[[f64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for n in 0..2 {
        for j in 0..2 {
            m[n][j] = (0..2).map(|i| co.a[n][i] * a[i][j]).sum();
        }
    }
    m
}

/// Classical solution of a 2x2 system by Cramer's rule.
pub fn solve_2x2(a: &[[f64; 2]; 2], b: [f64; 2]) -> Result<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Parameter("system matrix is singular".into()));
    }
    Ok([(b[0] * a[1][1] - a[0][1] * b[1]) / det, (a[0][0] * b[1] - b[0] * a[1][0]) / det])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub max_error: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub operation: String,
    pub tolerance: f64,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (error {:.3e}): {}", c.name, c.max_error, c.detail))
            .collect()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::Verification(self.failures()))
        }
    }

    fn push(&mut self, name: impl Into<String>, err: f64, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed: err <= self.tolerance, max_error: err, detail: detail.into() });
    }
}

/// Matrix with a single unit entry.
fn unit(i: usize, j: usize) -> TwoQubitState {
    let mut s = TwoQubitState::new(nalgebra::Matrix4::zeros());
    s.rho[(i, j)] = C64::new(1.0, 0.0);
    s
}


fn label(idx: usize) -> &'static str {
    ["00", "01", "10", "11"][idx]
}

/// Expected source map for the pattern operations: destination -> (source, factor).
fn pattern_map(spec: &OperationSpec, co: &TransferCoefficients) -> Option<Vec<((usize, usize), Option<((usize, usize), C64)>)>> {
    let zero = C64::new(0.0, 0.0);
    let restore = |z1: bool, z2: bool, z3: bool| {
        let k = |keep: bool, v: C64| if keep { v } else { zero };
        vec![
            ((0, 1), Some(((0, 1), k(!z1, co.a[E01][E01])))),
            ((0, 2), Some(((0, 2), k(!z2, co.a[E10][E10])))),
            ((0, 3), Some(((0, 3), k(!z3, co.d)))),
            ((1, 3), Some(((1, 3), k(!(z1 || z3), co.c[E01][E01])))),
            ((2, 3), Some(((2, 3), k(!(z2 || z3), co.c[E10][E10])))),
            ((1, 2), Some(((1, 2), k(!(z1 || z2), co.f[E01][E10])))),
        ]
    };
    match spec {
        OperationSpec::Restore => Some(restore(false, false, false)),
        OperationSpec::ZeroTriplet(ZeroVariant::First) => Some(restore(true, false, false)),
        OperationSpec::ZeroTriplet(ZeroVariant::Second) => Some(restore(false, true, false)),
        OperationSpec::ZeroTriplet(ZeroVariant::Third) => Some(restore(false, false, true)),
        OperationSpec::Rearrange => Some(vec![
            ((0, 1), Some(((0, 2), co.a[E01][E10]))),
            ((0, 2), Some(((0, 1), co.a[E10][E01]))),
            ((0, 3), Some(((0, 3), co.d))),
            ((1, 3), Some(((2, 3), co.c[E01][E10]))),
            ((2, 3), Some(((1, 3), co.c[E10][E01]))),
            // the surviving zero-order term carries the conjugate partner (10;01)
            ((1, 2), Some(((2, 1), co.f[E10][E01]))),
        ]),
        _ => None,
    }
}

/// Sender matrix with the monomial assignment `x, x², x³, x⁴, x⁵` on the off-diagonal
/// entries `(00;01)`, `(00;10)`, `(01;11)`, `(10;11)`, `(00;11)` (real `x`, Hermitian completion).
pub fn monomial_sender(x: f64) -> TwoQubitState {
    let mut rho = nalgebra::Matrix4::zeros();
    for (k, &(i, j)) in [(0, 1), (0, 2), (1, 3), (2, 3), (0, 3)].iter().enumerate() {
        let v = C64::new(x.powi(k as i32 + 1), 0.0);
        rho[(i, j)] = v;
        rho[(j, i)] = v;
    }
    for i in 0..4 {
        rho[(i, i)] = C64::new(0.25, 0.0);
    }
    TwoQubitState::new(rho)
}

/// Sender state carrying `b` on `(00;01)`, `(00;10)` and zero on `(01;11)`, `(10;11)`.
/// Returns `None` when the state would not be positive semidefinite.
pub fn linsys_sender(b: [f64; 2]) -> Option<TwoQubitState> {
    let mut rho = nalgebra::Matrix4::zeros();
    let p = [0.55, 0.15, 0.15, 0.15];
    for i in 0..4 {
        rho[(i, i)] = C64::new(p[i], 0.0);
    }
    rho[(0, 1)] = C64::new(b[0], 0.0);
    rho[(1, 0)] = C64::new(b[0], 0.0);
    rho[(0, 2)] = C64::new(b[1], 0.0);
    rho[(2, 0)] = C64::new(b[1], 0.0);
    let s = TwoQubitState::new(rho);
    (s.min_eigenvalue() >= 0.0).then_some(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinSysSolution {
    /// Recovered solution, receiver entries divided by `c` (and by `scale`).
    pub x_hat: [f64; 2],
    /// Imaginary parts of the recovered entries; zero for an exact channel.
    pub x_hat_imag: [f64; 2],
    pub c: C64,
    /// Factor applied to `b` so that the sender state is positive semidefinite.
    pub scale: f64,
    /// `‖A·x̂ − b‖`.
    pub classical_residual: f64,
}

/// Encode `b` in a sender state, apply the channel and read `x = A⁻¹b` off the receiver.
pub fn solve_linear_system(kraus: &KrausSet, co: &TransferCoefficients, a: &[[f64; 2]; 2], b: [f64; 2]) -> Result<LinSysSolution> {
    let spec = OperationSpec::LinSys(*a);
    spec.validate()?;
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parameter("right-hand side must be finite".into()));
    }
    let c = residual_unchecked(&spec, co).aux.unwrap_or_default();
    if c.norm() < 1e-12 {
        return Err(Error::Parameter("channel has c = 0; the angles do not implement the system".into()));
    }
    let mut scale = 1.0;
    let sender = loop {
        if let Some(s) = linsys_sender([b[0] * scale, b[1] * scale]) {
            break s;
        }
        scale *= 0.5;
        if scale < 1e-12 {
            return Err(Error::Parameter(format!("no physical sender state encodes b = {b:?}")));
        }
    };
    let out = kraus.apply(&sender);
    let raw = [out.rho[(0, 1)] / (c * scale), out.rho[(0, 2)] / (c * scale)];
    let x_hat = [raw[0].re, raw[1].re];
    let r0 = a[0][0] * x_hat[0] + a[0][1] * x_hat[1] - b[0];
    let r1 = a[1][0] * x_hat[0] + a[1][1] * x_hat[1] - b[1];
    Ok(LinSysSolution { x_hat, x_hat_imag: [raw[0].im, raw[1].im], c, scale, classical_residual: r0.hypot(r1) })
}

/// Apply the channel to probe sender states and compare with the operation's target pattern.
pub fn verify_application(spec: &OperationSpec, kraus: &KrausSet, co: &TransferCoefficients, tol: f64) -> Result<VerificationReport> {
    spec.validate()?;
    let report_of = residual_unchecked(spec, co);
    let mut rep = VerificationReport { operation: spec.name(), tolerance: tol, checks: Vec::new() };

    // trace bookkeeping on every unit probe
    let mut trace_err = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let out = kraus.apply(&unit(i, j));
            let want = if i == j { 1.0 } else { 0.0 };
            trace_err = trace_err.max((out.trace() - C64::new(want, 0.0)).norm());
        }
    }
    rep.push("trace preservation", trace_err, "tr(out) = tr(in) on all 16 unit probes");

    if let Some(map) = pattern_map(spec, co) {
        for (dest, expected) in map {
            let mut worst = 0.0f64;
            let mut where_ = String::new();
            for i in 0..4 {
                for j in 0..4 {
                    let got = kraus.apply(&unit(i, j)).rho[dest];
                    let want = match expected {
                        Some((src, f)) if src == (i, j) => f,
                        _ => C64::new(0.0, 0.0),
                    };
                    let e = (got - want).norm();
                    if e > worst {
                        worst = e;
                        where_ = format!("source ({};{})", label(i), label(j));
                    }
                }
            }
            let name = format!("receiver ({};{})", label(dest.0), label(dest.1));
            let detail = match expected {
                Some((src, f)) if f != C64::new(0.0, 0.0) => {
                    format!("expects {:.4}·e^({:.4}i) × sender ({};{}); worst at {where_}", f.norm(), f.arg(), label(src.0), label(src.1))
                }
                _ => format!("expects zero; worst at {where_}"),
            };
            rep.push(name, worst, detail);
        }
    }

    match spec {
        OperationSpec::LinComb(t) => {
            let alpha = report_of.aux.unwrap_or_default();
            for x in [0.1, 0.0] {
                let out = kraus.apply(&monomial_sender(x));
                let poly = |r: &[C64; 4]| -> C64 { (0..4).map(|k| r[k] * x.powi(k as i32 + 1)).sum::<C64>() * alpha };
                let targets = [((0, 1), poly(&t.alpha)), ((0, 2), poly(&t.beta)), ((0, 3), t.gamma * alpha * x.powi(5))];
                for (dest, want) in targets {
                    rep.push(
                        format!("monomial x={x} receiver ({};{})", label(dest.0), label(dest.1)),
                        (out.rho[dest] - want).norm(),
                        format!("target {:.6e}{:+.6e}i", want.re, want.im),
                    );
                }
            }
        }
        OperationSpec::LinSys(a) => {
            let c = report_of.aux.unwrap_or_default();
            for x in [[0.05, 0.05], [0.05, -0.02], [0.0, 0.0]] {
                let b = [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]];
                let Some(sender) = linsys_sender(b) else {
                    rep.push(format!("system x={x:?}"), f64::INFINITY, "probe state not positive semidefinite");
                    continue;
                };
                let out = kraus.apply(&sender);
                let err = (out.rho[(0, 1)] - c * x[0]).norm().max((out.rho[(0, 2)] - c * x[1]).norm());
                rep.push(format!("system x={x:?}"), err, format!("receiver (00;01), (00;10) = c·x with c = {:.6}", c.re));
            }
        }
        _ => {}
    }
    Ok(rep)
}

/// Names of the operation patterns the coefficients satisfy at `tol`.
pub fn matching_patterns(co: &TransferCoefficients, system: &[[f64; 2]; 2], tol: f64, floor: f64) -> Vec<String> {
    let specs = [
        OperationSpec::Restore,
        OperationSpec::ZeroTriplet(ZeroVariant::First),
        OperationSpec::ZeroTriplet(ZeroVariant::Second),
        OperationSpec::ZeroTriplet(ZeroVariant::Third),
        OperationSpec::Rearrange,
        OperationSpec::LinComb(LinCombTargets::default()),
        OperationSpec::LinSys(*system),
    ];
    specs
        .iter()
        .filter(|s| {
            let r = residual_unchecked(s, co);
            r.norm < tol && r.objective > floor
        })
        .map(|s| s.name())
        .collect()
}
