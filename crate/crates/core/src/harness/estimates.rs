use serde::{Deserialize, Serialize};

use crate::berman::SolveReport;
use crate::error::{Error, Result};
use crate::field::{derivative_stats, Field};
use crate::model::SingularModel;

/// Largest max/min ratio across the schedule tail still called uniform.
pub const UNIFORM_FACTOR: f64 = 2.0;
pub const MIN_MASK_CELLS: f64 = 2.0;
pub const DEFAULT_LADDER: [f64; 5] = [0.0, 1.0, 2.0, 4.0, 8.0];
/// Physical radius of the neighbourhood of the singular set used by
/// [`hessian_near_singularity`]. Leaves a ring of unmasked nodes around the
/// default 4-cell mask on a 16-cell torus.
pub const NEAR_RADIUS: f64 = 0.375;

/// Which shifted potential enters the gradient quantity `Q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QVariant {
    /// `u - (1 + delta) psi`.
    #[default]
    Gradient,
    /// `u - (1 + delta/2) tilde_psi`.
    Interior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub eps: f64,
    pub beta: f64,
    pub b_used: f64,
    pub delta_used: f64,
    pub mask_radius: f64,
    /// `sup e^{B psi} |grad u|`.
    pub weighted_grad: f64,
    /// `sup e^{H(u~)} |grad u|^2` with `H(s) = -B s + 1 / (s + 1)`.
    pub q_sup: f64,
    /// `sup e^{B (F + psi)} |hess u|` over the two layers next to each wall.
    pub weighted_hess_boundary: f64,
    /// `sup e^{B tilde_psi} |lap u|`.
    pub weighted_lap: f64,
    /// `sup e^{B tilde_psi} |hess u|`.
    pub weighted_hess: f64,
    pub unweighted_grad: f64,
    pub unweighted_hess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    WeightedGrad,
    QSup,
    WeightedHessBoundary,
    WeightedLap,
    WeightedHess,
}

impl Estimate {
    pub const ALL: [Estimate; 5] = [
        Estimate::WeightedGrad,
        Estimate::QSup,
        Estimate::WeightedHessBoundary,
        Estimate::WeightedLap,
        Estimate::WeightedHess,
    ];

    pub fn of(&self, r: &EstimateReport) -> f64 {
        match self {
            Estimate::WeightedGrad => r.weighted_grad,
            Estimate::QSup => r.q_sup,
            Estimate::WeightedHessBoundary => r.weighted_hess_boundary,
            Estimate::WeightedLap => r.weighted_lap,
            Estimate::WeightedHess => r.weighted_hess,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Uniform {
        spread: f64,
    },
    /// Least-squares slopes of `log sup` against `log beta` (at the smallest
    /// `eps`) and against `log(1/eps)` (at the largest `beta`).
    Growth {
        spread: f64,
        beta_exponent: f64,
        eps_exponent: f64,
    },
}

impl Verdict {
    pub fn is_uniform(&self) -> bool {
        matches!(self, Verdict::Uniform { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateVerdict {
    pub estimate: Estimate,
    pub b: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateScan {
    pub reports: Vec<EstimateReport>,
    pub verdicts: Vec<EstimateVerdict>,
}

impl EstimateScan {
    pub fn verdict(&self, estimate: Estimate, b: f64) -> Option<&Verdict> {
        self.verdicts
            .iter()
            .find(|v| v.estimate == estimate && v.b == b)
            .map(|v| &v.verdict)
    }
}

/// Weighted sups of one solution at one `B`.
pub fn estimate_report(
    u: &Field,
    eps: f64,
    beta: f64,
    model: &SingularModel,
    b: f64,
    variant: QVariant,
) -> Result<EstimateReport> {
    let g = *u.grid();
    model.grid().ensure_same(&g)?;
    if model.mask.radius_cells < MIN_MASK_CELLS {
        return Err(Error::InvalidInput(format!(
            "mask radius of {} cells is below the minimum of {MIN_MASK_CELLS}",
            model.mask.radius_cells
        )));
    }
    let (grad, hess, lap) = derivative_stats(u, |i1, i2, _| !model.masked(i1, i2))?;
    let n = g.layer_len();
    let last = g.nt() - 1;
    let mut r = EstimateReport {
        eps,
        beta,
        b_used: b,
        delta_used: model.delta,
        mask_radius: model.mask.radius(&g),
        weighted_grad: 0.0,
        q_sup: 0.0,
        weighted_hess_boundary: 0.0,
        weighted_lap: 0.0,
        weighted_hess: 0.0,
        unweighted_grad: 0.0,
        unweighted_hess: 0.0,
    };
    for idx in 0..g.len() {
        let node = g.node(idx);
        if model.masked(node.i1, node.i2) {
            continue;
        }
        let j = idx % n;
        let (psi, tpsi, f) = (
            model.psi.values()[j],
            model.tilde_psi.values()[j],
            model.f.values()[j],
        );
        let (gr, he, la) = (grad.values()[idx], hess.values()[idx], lap.values()[idx]);
        r.unweighted_grad = r.unweighted_grad.max(gr);
        r.unweighted_hess = r.unweighted_hess.max(he);
        r.weighted_grad = r.weighted_grad.max((b * psi).exp() * gr);
        r.weighted_lap = r.weighted_lap.max((b * tpsi).exp() * la.abs());
        r.weighted_hess = r.weighted_hess.max((b * tpsi).exp() * he);
        if node.k <= 1 || node.k + 1 >= last {
            r.weighted_hess_boundary = r.weighted_hess_boundary.max((b * (f + psi)).exp() * he);
        }
        let s = match variant {
            QVariant::Gradient => u.values()[idx] - (1.0 + model.delta) * psi,
            QVariant::Interior => u.values()[idx] - (1.0 + 0.5 * model.delta) * tpsi,
        };
        let q = if s > -1.0 {
            (-b * s + 1.0 / (s + 1.0)).exp() * gr * gr
        } else {
            f64::INFINITY
        };
        r.q_sup = r.q_sup.max(q);
    }
    Ok(r)
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !hi.is_finite() {
        f64::INFINITY
    } else if hi == 0.0 {
        1.0
    } else if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Verdict for one estimate over the reports of one `B`: UNIFORM when the
/// sup varies by at most [`UNIFORM_FACTOR`] over the top half of the `beta`
/// levels and the two smallest `eps`.
pub fn verdict(reports: &[&EstimateReport], estimate: Estimate) -> Verdict {
    let mut betas: Vec<f64> = reports.iter().map(|r| r.beta).collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    let mut epss: Vec<f64> = reports.iter().map(|r| r.eps).collect();
    epss.sort_by(f64::total_cmp);
    epss.dedup();
    let beta_cut = betas[betas.len() / 2];
    let eps_keep = &epss[..epss.len().min(2)];
    let tail: Vec<f64> = reports
        .iter()
        .filter(|r| r.beta >= beta_cut && eps_keep.contains(&r.eps))
        .map(|r| estimate.of(r))
        .collect();
    let sp = spread(&tail);
    if sp <= UNIFORM_FACTOR {
        return Verdict::Uniform { spread: sp };
    }
    let log_pts = |pts: Vec<(f64, f64)>| -> Vec<(f64, f64)> {
        pts.into_iter()
            .filter(|p| p.1 > 0.0 && p.1.is_finite())
            .map(|(x, y)| (x.ln(), y.ln()))
            .collect()
    };
    let eps_min = epss[0];
    let beta_max = betas[betas.len() - 1];
    let by_beta = log_pts(
        reports
            .iter()
            .filter(|r| r.eps == eps_min)
            .map(|r| (r.beta, estimate.of(r)))
            .collect(),
    );
    let by_eps = log_pts(
        reports
            .iter()
            .filter(|r| r.beta == beta_max)
            .map(|r| (1.0 / r.eps, estimate.of(r)))
            .collect(),
    );
    Verdict::Growth {
        spread: sp,
        beta_exponent: fit_slope(&by_beta),
        eps_exponent: fit_slope(&by_eps),
    }
}

/// One solution handed to [`estimate_scan_fields`].
#[derive(Clone, Copy, Debug)]
pub struct ScanInput<'a> {
    pub eps: f64,
    pub beta: f64,
    pub u: &'a Field,
}

/// Weighted estimates of every converged report at every `B` on `ladder`,
/// with a verdict per estimate and `B`. Reports must satisfy both solver
/// invariants.
pub fn estimate_scan(
    reports: &[SolveReport],
    model: &SingularModel,
    ladder: &[f64],
    variant: QVariant,
) -> Result<EstimateScan> {
    if let Some(r) = reports
        .iter()
        .find(|r| !(r.converged && r.sandwich_ok && r.trace_bound_ok))
    {
        return Err(Error::InvalidInput(format!(
            "report at eps = {}, beta = {} is not converged with both invariants",
            r.eps, r.beta
        )));
    }
    let inputs: Vec<ScanInput> = reports
        .iter()
        .map(|r| ScanInput {
            eps: r.eps,
            beta: r.beta,
            u: &r.u,
        })
        .collect();
    estimate_scan_fields(&inputs, model, ladder, variant)
}

/// [`estimate_scan`] on bare fields, for solutions read back from disk.
pub fn estimate_scan_fields(
    inputs: &[ScanInput],
    model: &SingularModel,
    ladder: &[f64],
    variant: QVariant,
) -> Result<EstimateScan> {
    if inputs.is_empty() || ladder.is_empty() {
        return Err(Error::InvalidInput(
            "estimate scan needs reports and a B ladder".into(),
        ));
    }
    let mut out = Vec::with_capacity(inputs.len() * ladder.len());
    for &b in ladder {
        for r in inputs {
            out.push(estimate_report(r.u, r.eps, r.beta, model, b, variant)?);
        }
    }
    let mut verdicts = Vec::new();
    for &b in ladder {
        let at_b: Vec<&EstimateReport> = out.iter().filter(|r| r.b_used == b).collect();
        for e in Estimate::ALL {
            verdicts.push(EstimateVerdict {
                estimate: e,
                b,
                verdict: verdict(&at_b, e),
            });
        }
    }
    Ok(EstimateScan {
        reports: out,
        verdicts,
    })
}

/// Sup of the unweighted real Hessian over unmasked nodes within
/// `radius` of the singular set.
pub fn hessian_near_singularity(u: &Field, model: &SingularModel, radius: f64) -> Result<f64> {
    let g = *u.grid();
    let (_, hess, _) = derivative_stats(u, |i1, i2, _| !model.masked(i1, i2))?;
    let mut sup: f64 = 0.0;
    let mut count = 0usize;
    for idx in 0..g.len() {
        let n = g.node(idx);
        let near = model
            .mask
            .points
            .iter()
            .any(|&p| g.torus_distance(n.i1, n.i2, p) <= radius);
        if near && !model.masked(n.i1, n.i2) {
            sup = sup.max(hess.values()[idx]);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidInput(format!(
            "no unmasked node within {radius} of the singular set"
        )));
    }
    Ok(sup)
}
