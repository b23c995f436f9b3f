//! Damped Newton with continuation in `beta` for
//! `(alpha + eps omega + i ddbar u)^2 = e^{beta (u - h_eps)} (eps/4)^2 omega^2`.
//!
//! Newton runs on the determinant form
//! `R = det G / det omega - (eps/4)^2 e^{beta (u - h)} - eta`. For large
//! `beta` the exponential underflows away from the boundary and `det G`
//! carries roundoff near `1e-12`, so the logarithmic residual cannot be
//! driven to a small tolerance in double precision. The floor `eta` fixes the
//! smallest determinant the solver resolves. [`residual`] still returns the
//! logarithmic form for diagnostics.

mod newton;
mod system;

use serde::{Deserialize, Serialize};

pub use newton::{
    min_eigen, newton, newton_with_homotopy, LinearStats, NewtonOutcome, NewtonParams, Workspace,
};
pub use system::DetSystem;

use crate::error::{Error, Result};
use crate::field::{hermitian_hessian, Field};
use crate::model::{BaseForm, BoundaryFamily};
use crate::obstacle::ObstacleSolution;

/// Complex dimension of the model manifold.
pub const N_DIM: f64 = 2.0;
pub const SANDWICH_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-6;

/// `log det G - log det omega - beta (u - h) - n log(eps/4)` at every
/// interior node; zero exactly at a discrete solution without floor.
pub fn residual(
    u: &Field,
    base: &BaseForm,
    phi_eps: &Field,
    obstacle: &ObstacleSolution,
    eps: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    let g = *u.grid();
    for k in [0, g.nt() - 1] {
        if u.layer(k) != phi_eps.layer(k) {
            return Err(Error::MissingDirichlet(format!(
                "u differs from the boundary data on layer k={k}"
            )));
        }
    }
    let form = hermitian_hessian(u, base, eps)?;
    let n = g.layer_len();
    let mut out = Vec::with_capacity(form.len());
    for j in 0..form.len() {
        let idx = j + n;
        let det = form.det(j);
        if !(det > 0.0) {
            return Err(Error::Inadmissible {
                node: g.node(idx),
                det,
            });
        }
        let t = g.t(idx / n);
        out.push(
            det.ln()
                - base.omega_ww(t).ln()
                - beta * (u.values()[idx] - obstacle.h.values()[idx])
                - N_DIM * (eps / 4.0).ln(),
        );
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    /// Decreasing, inside `(0, 1]`.
    pub eps_list: Vec<f64>,
    /// Increasing.
    pub beta_list: Vec<f64>,
    pub beta0: f64,
    pub newton: NewtonParams,
}

impl ContinuationSchedule {
    /// `eps = 2^-e_first .. 2^-(e_first + levels - 1)`, `beta = 2^p_min .. 2^p_max`.
    pub fn powers_of_two(e_first: i32, levels: usize, p_min: i32, p_max: i32) -> Self {
        Self {
            eps_list: (0..levels as i32)
                .map(|i| 2f64.powi(-(e_first + i)))
                .collect(),
            beta_list: (p_min..=p_max).map(|p| 2f64.powi(p)).collect(),
            beta0: 2f64.powi(p_min),
            newton: NewtonParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() || self.beta_list.is_empty() {
            return Err(Error::InvalidInput(
                "schedule needs at least one eps and one beta".into(),
            ));
        }
        if let Some(e) = self.eps_list.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::InvalidInput(format!("eps = {e} is outside (0, 1]")));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput(
                "eps_list must be strictly decreasing".into(),
            ));
        }
        if self.beta_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "beta_list must be strictly increasing".into(),
            ));
        }
        if self.beta_list[0] < self.beta0 || !(self.beta0 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "beta_list must start at or above beta0 = {}",
                self.beta0
            )));
        }
        self.newton.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub eps: f64,
    pub beta: f64,
    pub u: Field,
    pub newton_iters: usize,
    pub residual_sup: f64,
    pub residual_history: Vec<f64>,
    pub min_eigen_path: Vec<f64>,
    pub converged: bool,
    /// Determinant floors used on the way in, see [`newton_with_homotopy`].
    pub floor_stages: Vec<f64>,
    /// Largest `phi_eps - u` and `u - h_eps`, positive when violated.
    pub below_phi: f64,
    pub above_h: f64,
    pub sandwich_ok: bool,
    /// Smallest `(eps/2) tr_G omega` over interior nodes.
    pub trace_min: f64,
    pub trace_bound_ok: bool,
    pub linear: LinearStats,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveSummary {
    pub eps: f64,
    pub beta: f64,
    pub newton_iters: usize,
    pub residual_sup: f64,
    pub converged: bool,
    pub floor_stages: usize,
    pub min_eigen: f64,
    pub below_phi: f64,
    pub above_h: f64,
    pub sandwich_ok: bool,
    pub trace_min: f64,
    pub trace_bound_ok: bool,
    pub factorizations: usize,
    pub gmres_iterations: usize,
}

impl SolveReport {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            eps: self.eps,
            beta: self.beta,
            newton_iters: self.newton_iters,
            residual_sup: self.residual_sup,
            converged: self.converged,
            floor_stages: self.floor_stages.len(),
            min_eigen: self
                .min_eigen_path
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
            below_phi: self.below_phi,
            above_h: self.above_h,
            sandwich_ok: self.sandwich_ok,
            trace_min: self.trace_min,
            trace_bound_ok: self.trace_bound_ok,
            factorizations: self.linear.factorizations,
            gmres_iterations: self.linear.gmres_iterations,
        }
    }
}

fn finish_report(
    sys: &DetSystem,
    phi_eps: &Field,
    out: NewtonOutcome,
    beta: f64,
    linear: LinearStats,
) -> SolveReport {
    let g = sys.grid;
    let n = g.layer_len();
    let mut below: f64 = f64::NEG_INFINITY;
    let mut above: f64 = f64::NEG_INFINITY;
    for idx in 0..g.len() {
        let u = out.u.values()[idx];
        below = below.max(phi_eps.values()[idx] - u);
        above = above.max(u - sys.h.values()[idx]);
    }
    let mut trace_min = f64::INFINITY;
    for j in 0..out.form.len() {
        let k = (j + n) / n;
        let tr = out.form.trace_of_reference(j, 1.0, sys.det_omega(k));
        trace_min = trace_min.min(0.5 * sys.eps * tr);
    }
    SolveReport {
        eps: sys.eps,
        beta,
        newton_iters: out.iterations,
        residual_sup: *out.history.last().expect("nonempty"),
        residual_history: out.history,
        min_eigen_path: out.min_eigen_path,
        converged: out.converged,
        floor_stages: out.floor_stages,
        below_phi: below,
        above_h: above,
        sandwich_ok: below <= SANDWICH_TOL && above <= SANDWICH_TOL,
        trace_min,
        trace_bound_ok: trace_min >= 2.0 * N_DIM - TRACE_TOL,
        u: out.u,
        linear,
    }
}

/// One Newton solve at fixed `(eps, beta)`.
#[allow(clippy::too_many_arguments)]
pub fn solve_fixed(
    base: &BaseForm,
    family: &BoundaryFamily,
    obstacle: &ObstacleSolution,
    eps: f64,
    beta: f64,
    init: Field,
    params: &NewtonParams,
) -> Result<SolveReport> {
    let phi_eps = family.phi_eps(eps)?;
    let mut sys = DetSystem::new(base, eps, &obstacle.h, params.det_floor)?;
    sys.check_boundary(&init, phi_eps)?;
    let mut ws = Workspace::new();
    let out = newton_with_homotopy(&mut sys, beta, init, params, &mut ws)?;
    Ok(finish_report(&sys, phi_eps, out, beta, ws.stats))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CauchyEntry {
    pub eps: f64,
    /// The larger of the two `beta` levels compared.
    pub beta: f64,
    pub sup_diff: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchFailure {
    pub eps: f64,
    pub beta: f64,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ContinuationResult {
    pub reports: Vec<SolveReport>,
    pub cauchy: Vec<CauchyEntry>,
    pub failures: Vec<BranchFailure>,
}

/// For each `eps`, sweeps `beta` upward from `phi_eps` with warm starts.
/// A failed solve ends that `eps` branch; earlier reports are kept.
pub fn continuation_solve(
    schedule: &ContinuationSchedule,
    base: &BaseForm,
    family: &BoundaryFamily,
    mut obstacle: impl FnMut(f64) -> Result<ObstacleSolution>,
    mut progress: impl FnMut(&SolveReport),
) -> Result<ContinuationResult> {
    schedule.validate()?;
    let mut reports = Vec::new();
    let mut cauchy = Vec::new();
    let mut failures = Vec::new();
    for &eps in &schedule.eps_list {
        let phi_eps = family.phi_eps(eps)?.clone();
        let obs = obstacle(eps)?;
        let mut sys = DetSystem::new(base, eps, &obs.h, schedule.newton.det_floor)?;
        let mut ws = Workspace::new();
        let mut u = phi_eps.clone();
        let mut prev: Option<Field> = None;
        for (i, &beta) in schedule.beta_list.iter().enumerate() {
            let before = ws.stats;
            let attempt = if i == 0 {
                newton_with_homotopy(&mut sys, beta, u.clone(), &schedule.newton, &mut ws)
            } else {
                newton(&mut sys, beta, u.clone(), &schedule.newton, &mut ws)
            };
            match attempt {
                Ok(out) if out.converged => {
                    let stats = LinearStats {
                        factorizations: ws.stats.factorizations - before.factorizations,
                        gmres_iterations: ws.stats.gmres_iterations - before.gmres_iterations,
                        direct_solves: ws.stats.direct_solves - before.direct_solves,
                    };
                    let rep = finish_report(&sys, &phi_eps, out, beta, stats);
                    if let Some(p) = &prev {
                        cauchy.push(CauchyEntry {
                            eps,
                            beta,
                            sup_diff: rep.u.max_abs_diff(p)?,
                        });
                    }
                    prev = Some(rep.u.clone());
                    u = rep.u.clone();
                    progress(&rep);
                    reports.push(rep);
                }
                Ok(out) => {
                    failures.push(BranchFailure {
                        eps,
                        beta,
                        message: format!(
                            "no convergence in {} iterations (residual {:.3e})",
                            out.iterations,
                            out.history.last().copied().unwrap_or(f64::NAN)
                        ),
                    });
                    break;
                }
                Err(e) => {
                    failures.push(BranchFailure {
                        eps,
                        beta,
                        message: e.to_string(),
                    });
                    break;
                }
            }
        }
    }
    Ok(ContinuationResult {
        reports,
        cauchy,
        failures,
    })
}

#[derive(Clone, Debug)]
pub struct Envelope {
    pub v: Field,
    pub eps: f64,
    pub beta: f64,
    /// Last `sup |u_beta - u_{beta/2}|` at that `eps`; infinite when only
    /// one level is available.
    pub uncertainty: f64,
    pub flagged: bool,
}

/// Largest-`beta` iterate at the smallest `eps`.
pub fn extract_envelope(reports: &[SolveReport]) -> Result<Envelope> {
    let eps = reports.iter().map(|r| r.eps).fold(f64::INFINITY, f64::min);
    let at_eps: Vec<&SolveReport> = reports.iter().filter(|r| r.eps == eps).collect();
    let best = at_eps
        .iter()
        .max_by(|a, b| a.beta.total_cmp(&b.beta))
        .ok_or_else(|| Error::InvalidInput("no reports to extract from".into()))?;
    let prev = at_eps
        .iter()
        .filter(|r| r.beta < best.beta)
        .max_by(|a, b| a.beta.total_cmp(&b.beta));
    let uncertainty = match prev {
        Some(p) => best.u.max_abs_diff(&p.u)?,
        None => f64::INFINITY,
    };
    Ok(Envelope {
        v: best.u.clone(),
        eps,
        beta: best.beta,
        uncertainty,
        flagged: !uncertainty.is_finite(),
    })
}
