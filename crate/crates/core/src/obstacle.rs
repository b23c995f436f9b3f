//! Obstacle `h_eps` and barrier `b`: linear Dirichlet problems for the
//! flat strip Laplacian.
//!
//! Convention: `Delta u = u_{z zbar} / 1 + u_{w wbar} / kappa` with
//! `u_{z zbar} = Delta_x u / 4` and `u_{w wbar} = u_tt / 4`. The obstacle
//! solves `Delta h = -4` (that is `-2n` with `n = 2`), the barrier
//! `Delta b = -1`. The flat reference `diag(1, kappa)` dominates the
//! annulus metric `diag(1, kappa e^{-2t})`, which keeps `v <= h_eps` for
//! every `(alpha + eps omega)`-psh `v` with the same boundary values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{derivative_norm, Field, ProductGrid};
use crate::linalg::{norm2, Pattern};
use crate::model::{BaseForm, BoundaryFamily, SingularModel};

pub const OBSTACLE_SOURCE: f64 = -4.0;
pub const BARRIER_SOURCE: f64 = -1.0;
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleSolution {
    pub h: Field,
    /// `None` for the barrier.
    pub eps: Option<f64>,
    /// `|b - A h| / |b|` of the interior system.
    pub residual_norm: f64,
}

/// Solves `Delta u = source` with `u = bottom` at `t = 0` and `u = top` at
/// `t = 1`.
pub fn solve_dirichlet(
    grid: ProductGrid,
    kappa: f64,
    source: f64,
    bottom: &[f64],
    top: &[f64],
) -> Result<(Field, f64)> {
    let g = grid;
    let n = g.layer_len();
    if bottom.len() != n || top.len() != n {
        return Err(Error::GridMismatch(
            "boundary data does not match the layer size".into(),
        ));
    }
    let ni = g.nt() - 2;
    let (c1, c2) = (0.25 / (g.hx1() * g.hx1()), 0.25 / (g.hx2() * g.hx2()));
    let ct = 0.25 / (kappa * g.ht() * g.ht());
    // Unknown row r = (k - 1) * n + layer index; the operator is -Delta.
    let mut entries = Vec::with_capacity(7 * n * ni);
    let mut vals = Vec::with_capacity(7 * n * ni);
    let mut rhs = vec![-source; n * ni];
    for k in 1..=ni {
        for i2 in 0..g.nx2() {
            for i1 in 0..g.nx1() {
                let j = g.layer_index(i1, i2);
                let r = (k - 1) * n + j;
                entries.push((r, r));
                vals.push(2.0 * (c1 + c2 + ct));
                for (jj, c) in [
                    (g.layer_index(g.next1(i1), i2), c1),
                    (g.layer_index(g.prev1(i1), i2), c1),
                    (g.layer_index(i1, g.next2(i2)), c2),
                    (g.layer_index(i1, g.prev2(i2)), c2),
                ] {
                    let col = (k - 1) * n + jj;
                    if col > r {
                        entries.push((col, r));
                        vals.push(-c);
                    }
                }
                if k == 1 {
                    rhs[r] += ct * bottom[j];
                }
                if k == ni {
                    rhs[r] += ct * top[j];
                } else {
                    entries.push((r + n, r));
                    vals.push(-ct);
                }
            }
        }
    }
    let mut pattern = Pattern::new(n * ni, &entries)?;
    let lower = pattern.matrix(&vals)?;
    let x = pattern.cholesky(&lower)?.solve(&rhs);

    // Residual against the full symmetric operator.
    let mut full_e = entries.clone();
    let mut full_v = vals.clone();
    for (&(r, c), &v) in entries.iter().zip(&vals) {
        if r != c {
            full_e.push((c, r));
            full_v.push(v);
        }
    }
    let full = Pattern::new(n * ni, &full_e)?.matrix(&full_v)?;
    let res = norm2(&full.residual(&x, &rhs)) / norm2(&rhs).max(f64::MIN_POSITIVE);
    if !(res <= RESIDUAL_TOL) {
        return Err(Error::LinearSolve(format!(
            "Dirichlet solve residual {res:.3e} above {RESIDUAL_TOL:e}"
        )));
    }
    let mut values = Vec::with_capacity(g.len());
    values.extend_from_slice(bottom);
    values.extend_from_slice(&x);
    values.extend_from_slice(top);
    Ok((Field::from_values(g, values)?, res))
}

/// Obstacle `h_eps` with the boundary values of `phi_eps`.
pub fn solve_obstacle(
    family: &BoundaryFamily,
    base: &BaseForm,
    eps: f64,
) -> Result<ObstacleSolution> {
    let phi = family.phi_eps(eps)?;
    let g = *phi.grid();
    let (h, residual_norm) = solve_dirichlet(
        g,
        base.kappa(),
        OBSTACLE_SOURCE,
        phi.layer(0),
        phi.layer(g.nt() - 1),
    )?;
    Ok(ObstacleSolution {
        h,
        eps: Some(eps),
        residual_norm,
    })
}

/// Barrier `b` with zero boundary values.
pub fn solve_barrier(grid: ProductGrid, kappa: f64) -> Result<ObstacleSolution> {
    let zero = vec![0.0; grid.layer_len()];
    let (h, residual_norm) = solve_dirichlet(grid, kappa, BARRIER_SOURCE, &zero, &zero)?;
    Ok(ObstacleSolution {
        h,
        eps: None,
        residual_norm,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateScan {
    pub b: f64,
    pub weighted_sup_coarse: f64,
    pub weighted_sup_fine: f64,
    pub refinement_ratio: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub order: usize,
    /// Smallest stable `B` on the ladder, if any.
    pub b: Option<f64>,
    pub weighted_sup: Option<f64>,
    pub refinement_ratio: Option<f64>,
    pub scan: Vec<CertificateScan>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub eps: Option<f64>,
    pub entries: Vec<CertificateEntry>,
    /// `h <= phi_eps + e^{-B psi} b` on the fine grid with `B` the largest
    /// certified value (or the top of the ladder).
    pub barrier_sandwich_b: f64,
    pub barrier_sandwich_ok: bool,
}

/// Largest refinement ratio counted as stable.
pub const STABILITY_FACTOR: f64 = 2.0;

fn weighted_sup(h: &Field, model: &SingularModel, order: usize, b: f64) -> Result<f64> {
    let g = *h.grid();
    let norms = derivative_norm(h, order)?;
    let mut sup: f64 = 0.0;
    for (idx, v) in norms.values().iter().enumerate() {
        let n = g.node(idx);
        if model.masked(n.i1, n.i2) {
            continue;
        }
        sup = sup.max(v * (b * model.psi.values()[idx % g.layer_len()]).exp());
    }
    Ok(sup)
}

/// Scans `B` on `ladder` for the weighted bounds `|nabla^j h| e^{B psi}`,
/// `j = 1..=max_order`, comparing a coarse and a once-refined solution.
#[allow(clippy::too_many_arguments)]
pub fn appendix_certificates(
    coarse: &ObstacleSolution,
    coarse_model: &SingularModel,
    fine: &ObstacleSolution,
    fine_model: &SingularModel,
    fine_phi: &Field,
    fine_barrier: &ObstacleSolution,
    max_order: usize,
    ladder: &[f64],
) -> Result<CertificateReport> {
    if fine.h.grid() != &coarse.h.grid().refined() {
        return Err(Error::GridMismatch(
            "fine grid is not one refinement of the coarse grid".into(),
        ));
    }
    let mut entries = Vec::new();
    for order in 1..=max_order {
        let mut scan = Vec::new();
        for &b in ladder {
            let c = weighted_sup(&coarse.h, coarse_model, order, b)?;
            let f = weighted_sup(&fine.h, fine_model, order, b)?;
            let ratio = if c > 0.0 {
                f / c
            } else if f > 0.0 {
                f64::INFINITY
            } else {
                1.0
            };
            scan.push(CertificateScan {
                b,
                weighted_sup_coarse: c,
                weighted_sup_fine: f,
                refinement_ratio: ratio,
                stable: ratio.is_finite() && ratio <= STABILITY_FACTOR && f.is_finite(),
            });
        }
        let best = scan.iter().find(|s| s.stable).cloned();
        entries.push(CertificateEntry {
            order,
            b: best.as_ref().map(|s| s.b),
            weighted_sup: best.as_ref().map(|s| s.weighted_sup_fine),
            refinement_ratio: best.as_ref().map(|s| s.refinement_ratio),
            scan,
        });
    }
    let sandwich_b = entries
        .iter()
        .filter_map(|e| e.b)
        .fold(f64::NEG_INFINITY, f64::max);
    let sandwich_b = if sandwich_b.is_finite() {
        sandwich_b
    } else {
        ladder.iter().copied().fold(0.0, f64::max)
    };
    let g = *fine.h.grid();
    let mut ok = true;
    for idx in 0..g.len() {
        let psi = fine_model.psi.values()[idx % g.layer_len()];
        let bound =
            fine_phi.values()[idx] + (-sandwich_b * psi).exp() * fine_barrier.h.values()[idx];
        if fine.h.values()[idx] > bound + 1e-10 {
            ok = false;
            break;
        }
    }
    Ok(CertificateReport {
        eps: fine.eps,
        entries,
        barrier_sandwich_b: sandwich_b,
        barrier_sandwich_ok: ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_independent_closed_forms() {
        let g = ProductGrid::new(8, 8, 17, true).unwrap();
        let n = g.layer_len();
        let (h, res) =
            solve_dirichlet(g, 1.0, OBSTACLE_SOURCE, &vec![0.0; n], &vec![1.0; n]).unwrap();
        assert!(res <= RESIDUAL_TOL);
        for k in 0..g.nt() {
            let t = g.t(k);
            assert!((h.at(2, 5, k) - (8.0 * t * (1.0 - t) + t)).abs() < 1e-10);
        }
        let b = solve_barrier(g, 1.0).unwrap();
        for k in 0..g.nt() {
            let t = g.t(k);
            assert!((b.h.at(1, 1, k) - 2.0 * t * (1.0 - t)).abs() < 1e-10);
        }
        assert!((b.h.at(0, 0, 8) - 0.5).abs() < 1e-10);
        assert!(b.h.values()[n..g.len() - n].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn third_derivative_of_obstacle_vanishes() {
        let g = ProductGrid::new(8, 8, 17, true).unwrap();
        let n = g.layer_len();
        let (h, _) =
            solve_dirichlet(g, 1.0, OBSTACLE_SOURCE, &vec![0.0; n], &vec![0.0; n]).unwrap();
        let d3 = derivative_norm(&h, 3).unwrap();
        assert!(d3.sup() < 1e-7, "{}", d3.sup());
    }
}
