//! Multi-start search over the 42 rotation angles.
//!
//! Each restart minimizes the squared residual norm of an operation from a random
//! starting point: a short Nelder–Mead phase followed by a damped Gauss–Newton
//! (Levenberg–Marquardt) polish with central finite-difference Jacobians. Feasible
//! solutions are then ranked by the operation's objective.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::er_unitary::{compose, Ordering, PhiVector, N_ANGLES};
use crate::error::{Error, Result};
use crate::operations::{residual_unchecked, OperationSpec, ResidualReport, DEFAULT_OBJECTIVE_FLOOR};
use crate::transfer::{CoefficientEvaluator, TransferCoefficients};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub restarts: usize,
    pub seed: u64,
    pub residual_tol: f64,
    /// Gauss–Newton iterations per restart.
    pub max_iterations: usize,
    /// Nelder–Mead iterations before the polish; 0 disables the phase.
    pub simplex_iterations: usize,
    pub objective_floor: f64,
    pub fd_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 1000,
            seed: 0,
            residual_tol: 1e-8,
            max_iterations: 200,
            simplex_iterations: 100,
            objective_floor: DEFAULT_OBJECTIVE_FLOOR,
            fd_step: 1e-6,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Parameter("restarts must be at least 1".into()));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::Parameter(format!("residual_tol = {} must be positive", self.residual_tol)));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Parameter(format!("fd_step = {} must be positive", self.fd_step)));
        }
        Ok(())
    }
}

/// An operation bound to a fixed chain, time and factor ordering.
pub struct Problem<'a> {
    pub spec: OperationSpec,
    pub evaluator: &'a CoefficientEvaluator,
    pub ordering: Ordering,
}

impl Problem<'_> {
    pub fn coefficients(&self, phi: &[f64]) -> TransferCoefficients {
        let phi = PhiVector::from_flat(phi).expect("angle vector of length 42");
        self.evaluator.coefficients(&compose(&phi, self.ordering))
    }

    pub fn report(&self, phi: &[f64]) -> ResidualReport {
        residual_unchecked(&self.spec, &self.coefficients(phi))
    }

    fn residual_vector(&self, x: &[f64]) -> Vec<f64> {
        self.report(x).residuals.iter().flat_map(|z: &C64| [z.re, z.im]).collect()
    }
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[derive(Clone, Debug)]
pub struct LocalSolution {
    pub phi: PhiVector,
    pub report: ResidualReport,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, iterations: usize, evals: &mut usize) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    *evals += n + 1;
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let point = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (w - c)).collect() };
        let xr = point(-1.0);
        let fr = f(&xr);
        *evals += 1;
        if fr < simplex[0].1 {
            let xe = point(-2.0);
            let fe = f(&xe);
            *evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = if fr < worst.1 { point(-0.5) } else { point(0.5) };
            let fc = f(&xc);
            *evals += 1;
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    p.0 = best.iter().zip(&p.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    p.1 = f(&p.0);
                }
                *evals += n;
            }
        }
    }
    simplex.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0
}

fn jacobian(problem: &Problem, x: &[f64], h: f64, m: usize, evals: &mut usize) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let rp = problem.residual_vector(&xp);
        xp[j] = x[j] - h;
        let rm = problem.residual_vector(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    *evals += 2 * x.len();
    jac
}

/// Local minimization of the squared residual norm from `phi0`.
pub fn local_solve(problem: &Problem, phi0: &PhiVector, config: &SearchConfig) -> LocalSolution {
    let mut evals = 0usize;
    let start = phi0.to_flat().to_vec();
    let mut x = if config.simplex_iterations > 0 {
        let f = |x: &[f64]| sq(&problem.residual_vector(x));
        nelder_mead(&f, &start, 0.2, config.simplex_iterations, &mut evals)
    } else {
        start
    };

    let target = config.residual_tol * 1e-3;
    let mut r = problem.residual_vector(&x);
    let mut cost = sq(&r);
    evals += 1;
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < config.max_iterations && cost.sqrt() > target {
        iterations += 1;
        let jac = jacobian(problem, &x, config.fd_step, r.len(), &mut evals);
        let rv = DVector::from_column_slice(&r);
        let jt = jac.transpose();
        let grad = &jt * &rv;
        let jtj = &jt * &jac;
        let scale = jtj.diagonal().max().max(1e-12);
        let mut improved = false;
        while lambda < 1e10 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * scale;
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = problem.residual_vector(&trial);
            evals += 1;
            let ct = sq(&rt);
            if ct < cost {
                let tiny = step.norm() < 1e-15;
                x = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = !tiny;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }

    let phi = PhiVector::from_flat(&x).expect("finite angles");
    let report = problem.report(&phi.to_flat());
    evals += 1;
    LocalSolution { converged: report.norm <= config.residual_tol, phi, report, iterations, evaluations: evals }
}

/// Starting point of restart `index`: an independent ChaCha stream per restart.
pub fn start_point(seed: u64, index: u64) -> PhiVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let v: Vec<f64> = (0..N_ANGLES).map(|_| rng.random::<f64>() * TAU).collect();
    PhiVector::from_flat(&v).expect("finite angles")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub residual_norm: f64,
    pub objective: f64,
    pub converged: bool,
    pub feasible: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub index: usize,
    pub phi: PhiVector,
    pub report: ResidualReport,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub operation: String,
    /// Best feasible solution, or the lowest-residual one when nothing was feasible.
    pub best: Candidate,
    pub feasible: bool,
    pub feasible_count: usize,
    pub log: Vec<RestartSummary>,
}

impl SearchResult {
    pub fn best_phi(&self) -> &PhiVector {
        &self.best.phi
    }

    pub fn residual_norm(&self) -> f64 {
        self.best.report.norm
    }

    pub fn objective(&self) -> f64 {
        self.best.report.objective
    }

    pub fn aux(&self) -> Option<C64> {
        self.best.report.aux
    }
}

const TIE: f64 = 1e-9;

fn better(a: &Candidate, b: &Candidate) -> bool {
    let (oa, ob) = (a.report.objective, b.report.objective);
    if (oa - ob).abs() > TIE {
        return oa > ob;
    }
    if a.report.norm != b.report.norm {
        return a.report.norm < b.report.norm;
    }
    a.index < b.index
}

/// Run `config.restarts` local solves and select the feasible solution with the
/// largest objective. Restarts run in parallel; the reduction is ordered by restart index.
pub fn multistart(
    problem: &Problem,
    config: &SearchConfig,
    progress: Option<&(dyn Fn(&RestartSummary) + Sync)>,
) -> Result<SearchResult> {
    config.validate()?;
    problem.spec.validate()?;
    let outcomes: Vec<(Candidate, RestartSummary)> = (0..config.restarts)
        .into_par_iter()
        .map(|index| {
            let sol = local_solve(problem, &start_point(config.seed, index as u64), config);
            let feasible = sol.report.norm < config.residual_tol && sol.report.objective > config.objective_floor;
            let summary = RestartSummary {
                index,
                residual_norm: sol.report.norm,
                objective: sol.report.objective,
                converged: sol.converged,
                feasible,
                iterations: sol.iterations,
                evaluations: sol.evaluations,
            };
            if let Some(cb) = progress {
                cb(&summary);
            }
            (Candidate { index, phi: sol.phi, report: sol.report }, summary)
        })
        .collect();

    let mut best_feasible: Option<Candidate> = None;
    let mut lowest: Option<Candidate> = None;
    let mut log = Vec::with_capacity(outcomes.len());
    for (cand, summary) in outcomes {
        if summary.feasible && best_feasible.as_ref().is_none_or(|b| better(&cand, b)) {
            best_feasible = Some(cand.clone());
        }
        if lowest.as_ref().is_none_or(|l| cand.report.norm < l.report.norm) {
            lowest = Some(cand);
        }
        log.push(summary);
    }
    let feasible_count = log.iter().filter(|s| s.feasible).count();
    let feasible = best_feasible.is_some();
    let best = best_feasible.or(lowest).expect("at least one restart");
    Ok(SearchResult { operation: problem.spec.name(), best, feasible, feasible_count, log })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_points_are_reproducible_and_distinct() {
        let a = start_point(7, 3);
        assert_eq!(a, start_point(7, 3));
        assert_ne!(a, start_point(7, 4));
        assert_ne!(a, start_point(8, 3));
        assert!(a.to_flat().iter().all(|&x| (0.0..TAU).contains(&x)));
    }

    #[test]
    fn nelder_mead_minimizes_a_quadratic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
        let mut evals = 0;
        let x = nelder_mead(&f, &[0.0, 0.0], 0.5, 400, &mut evals);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig { restarts: 0, ..Default::default() }.validate().is_err());
        assert!(SearchConfig { residual_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SearchConfig::default().validate().is_ok());
    }
}
