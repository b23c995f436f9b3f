use serde::{Deserialize, Serialize};

use crate::berman::system::DetSystem;
use crate::error::{Error, Result};
use crate::field::{Field, HermitianFormField};
use crate::linalg::{gmres, LuFactor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonParams {
    pub max_iter: usize,
    /// Stop once `sup |R|` of the determinant residual is at most this.
    pub tol_residual_sup: f64,
    pub damping_min: f64,
    /// Resolution floor added to the right-hand side: the solver resolves
    /// `det G / det omega` down to this level.
    pub det_floor: f64,
    pub linear_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self {
            max_iter: 60,
            tol_residual_sup: 1e-9,
            damping_min: 2f64.powi(-20),
            det_floor: 1e-9,
            linear_tol: 1e-10,
            gmres_restart: 30,
            gmres_max_iter: 40,
        }
    }
}

impl NewtonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual_sup > 0.0 && self.tol_residual_sup <= 1e-8) {
            return Err(Error::InvalidInput(format!(
                "tol_residual_sup = {:e} must lie in (0, 1e-8]",
                self.tol_residual_sup
            )));
        }
        if !(self.damping_min > 0.0 && self.damping_min < 1.0) {
            return Err(Error::InvalidInput("damping_min must lie in (0, 1)".into()));
        }
        if !(self.det_floor >= 0.0) {
            return Err(Error::InvalidInput("det_floor must be >= 0".into()));
        }
        Ok(())
    }
}

/// Counters shared across the solves of one `eps` branch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearStats {
    pub factorizations: usize,
    pub gmres_iterations: usize,
    pub direct_solves: usize,
}

/// Factorization kept alive across Newton steps and `beta` levels.
pub struct Workspace {
    lu: Option<LuFactor>,
    pub stats: LinearStats,
}

impl Default for Workspace {
    fn default() -> Self {
        Self::new()
    }
}

impl Workspace {
    pub fn new() -> Self {
        Self {
            lu: None,
            stats: LinearStats::default(),
        }
    }
}

pub struct NewtonOutcome {
    pub u: Field,
    pub form: HermitianFormField,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub min_eigen_path: Vec<f64>,
    pub converged: bool,
    /// Floors visited before the target floor; empty for a direct solve.
    pub floor_stages: Vec<f64>,
}

fn sup_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Smallest eigenvalue of the form relative to `omega` over all interior
/// nodes, or the first inadmissible node.
pub fn min_eigen(
    sys: &DetSystem,
    form: &HermitianFormField,
) -> std::result::Result<f64, (usize, f64)> {
    if let Some(bad) = form.first_non_positive() {
        return Err(bad);
    }
    let g = &sys.grid;
    let n = g.layer_len();
    let mut m = f64::INFINITY;
    for j in 0..form.len() {
        let k = (j + n) / n;
        m = m.min(form.lambda_min_relative(j, 1.0, sys.det_omega(k)));
    }
    Ok(m)
}

/// Damped Newton from an admissible `init`. Steps and backtracking use the
/// logarithmic residual; convergence is declared on the determinant residual.
pub fn newton(
    sys: &mut DetSystem,
    beta: f64,
    init: Field,
    params: &NewtonParams,
    ws: &mut Workspace,
) -> Result<NewtonOutcome> {
    let g = sys.grid;
    let n = g.layer_len();
    let mut u = init;
    let mut form = sys.form(&u)?;
    let mut eig = min_eigen(sys, &form).map_err(|(idx, det)| Error::Inadmissible {
        node: g.node(idx),
        det,
    })?;
    let mut r = sys.log_residual(&u, &form, beta);
    let mut merit = sup_abs(&r);
    let mut det_res = sup_abs(&sys.residual(&u, &form, beta));
    let mut history = vec![det_res];
    let mut min_eigen_path = vec![eig];
    let mut iterations = 0;
    while det_res > params.tol_residual_sup {
        if iterations >= params.max_iter {
            return Ok(NewtonOutcome {
                u,
                form,
                iterations,
                history,
                min_eigen_path,
                converged: false,
                floor_stages: Vec::new(),
            });
        }
        iterations += 1;
        let jac = sys.jacobian(&u, &form, beta, true)?;
        let rhs: Vec<f64> = r
            .iter()
            .zip(sys.row_scale(&form))
            .map(|(x, s)| -x * s)
            .collect();
        let mut step = vec![0.0; rhs.len()];
        let mut solved = false;
        if let Some(lu) = &ws.lu {
            let out = gmres(
                &jac,
                |v| lu.solve(v),
                &rhs,
                &mut step,
                params.linear_tol,
                params.gmres_restart,
                params.gmres_max_iter,
            );
            ws.stats.gmres_iterations += out.iterations;
            solved = out.converged;
            if out.iterations > params.gmres_restart / 2 {
                // The factor has gone stale; refresh it on the next step.
                ws.lu = None;
            }
        }
        if !solved {
            let lu = sys.pattern_mut().lu(&jac)?;
            ws.stats.factorizations += 1;
            step = lu.solve(&rhs);
            ws.stats.direct_solves += 1;
            ws.lu = Some(lu);
            let res = crate::linalg::norm2(&jac.residual(&step, &rhs))
                / crate::linalg::norm2(&rhs).max(f64::MIN_POSITIVE);
            if !(res <= params.linear_tol) {
                // One round of iterative refinement with the fresh factor.
                let lu = ws.lu.as_ref().expect("set above");
                let out = gmres(
                    &jac,
                    |v| lu.solve(v),
                    &rhs,
                    &mut step,
                    params.linear_tol,
                    params.gmres_restart,
                    params.gmres_max_iter,
                );
                ws.stats.gmres_iterations += out.iterations;
                if !out.converged {
                    return Err(Error::LinearSolve(format!(
                        "Newton system residual {:.3e} above {:e}",
                        out.relative_residual, params.linear_tol
                    )));
                }
            }
        }

        let mut lambda = 1.0;
        loop {
            let mut trial = u.clone();
            for (v, s) in trial.values_mut()[n..n + step.len()].iter_mut().zip(&step) {
                *v += lambda * s;
            }
            let tform = sys.form(&trial)?;
            if let Ok(te) = min_eigen(sys, &tform) {
                let tr = sys.log_residual(&trial, &tform, beta);
                let tm = sup_abs(&tr);
                if tm <= (1.0 - 1e-4 * lambda) * merit {
                    det_res = sup_abs(&sys.residual(&trial, &tform, beta));
                    u = trial;
                    form = tform;
                    r = tr;
                    merit = tm;
                    eig = te;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < params.damping_min {
                return Err(Error::NewtonFailure {
                    reason: format!(
                        "step length fell below {:e} at beta = {beta} after {iterations} iterations",
                        params.damping_min
                    ),
                    history,
                });
            }
        }
        history.push(det_res);
        min_eigen_path.push(eig);
    }
    Ok(NewtonOutcome {
        u,
        form,
        iterations,
        history,
        min_eigen_path,
        converged: true,
        floor_stages: Vec::new(),
    })
}

/// Iteration budget of the direct attempt in [`newton_with_homotopy`].
pub const DIRECT_ATTEMPT_ITERS: usize = 20;

/// [`newton`], falling back to a homotopy in the determinant floor when the
/// direct solve fails: the floor starts at 1 and drops by 10 per stage down
/// to `params.det_floor`, each stage warm-started from the last. Large
/// floors keep the iterates away from the degenerate cone, which matters
/// where `a` vanishes and only `eps omega` is left.
pub fn newton_with_homotopy(
    sys: &mut DetSystem,
    beta: f64,
    init: Field,
    params: &NewtonParams,
    ws: &mut Workspace,
) -> Result<NewtonOutcome> {
    let quick = NewtonParams {
        max_iter: params.max_iter.min(DIRECT_ATTEMPT_ITERS),
        ..*params
    };
    let direct = newton(sys, beta, init.clone(), &quick, ws);
    if matches!(&direct, Ok(out) if out.converged) || params.det_floor >= 1.0 {
        return direct;
    }
    let target = params.det_floor;
    let mut floors = Vec::new();
    let mut f = 1.0;
    while f > target * 1.000001 {
        floors.push(f);
        f /= 10.0;
    }
    let mut u = init;
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut min_eigen_path = Vec::new();
    let mut stage = *params;
    let result = (|| {
        for &fl in &floors {
            stage.det_floor = fl;
            sys.det_floor = fl;
            let out = newton(sys, beta, u.clone(), &stage, ws)?;
            iterations += out.iterations;
            history.extend(out.history);
            min_eigen_path.extend(out.min_eigen_path);
            if !out.converged {
                return Err(Error::NewtonFailure {
                    reason: format!("floor homotopy stalled at floor {fl:e}, beta = {beta}"),
                    history: history.clone(),
                });
            }
            u = out.u;
        }
        sys.det_floor = target;
        let mut out = newton(sys, beta, u.clone(), params, ws)?;
        out.iterations += iterations;
        history.extend(out.history);
        out.history = history.clone();
        min_eigen_path.extend(out.min_eigen_path);
        out.min_eigen_path = min_eigen_path.clone();
        out.floor_stages = floors.clone();
        Ok(out)
    })();
    sys.det_floor = target;
    result
}
