use serde::{Deserialize, Serialize};

use crate::error::{Error, NodeIndex, Result};
use crate::field::{derivative_stats, hermitian_hessian, Field, ProductGrid, TorusField};
use crate::model::kahler::{solve_kahler_potential, KahlerNewton};
use crate::model::{annulus_potential, reg_max, BaseForm, SingularModel, DEFAULT_SPREAD};

/// `C = 1 + max(1, sup |phi0 - phi1|)`: large enough that at each end of
/// the strip the matching branch leads the other by at least 1.
pub fn gap_constant(phi0: &TorusField, phi1: &TorusField) -> f64 {
    let d = phi0
        .values()
        .iter()
        .zip(phi1.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    1.0 + d.max(1.0)
}

fn branch(grid: ProductGrid, x: &TorusField, slope: f64, at_one: bool) -> Field {
    let mut f = Field::pullback(x);
    let n = grid.layer_len();
    for k in 0..grid.nt() {
        let t = grid.t(k);
        let s = if at_one { slope * (1.0 - t) } else { slope * t };
        for v in &mut f.values_mut()[k * n..(k + 1) * n] {
            *v -= s;
        }
    }
    f
}

/// Endpoint subsolution `reg_max{phi0 - Ct, phi1 - C(1-t)} + f` and its `C`.
pub fn endpoint_subsolution(phi0: &TorusField, phi1: &TorusField) -> Result<(f64, Field)> {
    let g = *phi0.grid();
    g.ensure_same(phi1.grid())?;
    let c = gap_constant(phi0, phi1);
    let b0 = branch(g, phi0, c, false);
    let b1 = branch(g, phi1, c, true);
    let m = reg_max(&[&b0, &b1], DEFAULT_SPREAD)?;
    let f = annulus_potential(g);
    Ok((c, m.zip_with(&f, |a, b| a + b)?))
}

/// What the boundary family achieves at one `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyPositivity {
    /// Smallest eigenvalue of `alpha + eps omega + i ddbar phi_eps` relative
    /// to `omega`, over unmasked interior nodes.
    pub lambda_min: f64,
    /// Smallest `lambda_min / e^{B0 tilde_psi}`: the achieved `c`.
    pub c_achieved: f64,
    pub worst_node: NodeIndex,
    /// Smallest `lambda_min / (e^F + eps/2)`.
    pub strengthened_ratio: f64,
    /// Sup of `(|grad phi_eps| + |hess phi_eps|) e^{B0 psi}` over all
    /// unmasked nodes and over the two layers at each end.
    pub derivative_bound_global: f64,
    pub derivative_bound_boundary: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyLevel {
    pub eps: f64,
    pub c_eps: f64,
    pub v_eps: TorusField,
    pub phi_eps: Field,
    pub key: KeyPositivity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFamily {
    pub phi0: TorusField,
    pub phi1: TorusField,
    pub c_gap: f64,
    /// Endpoint subsolution without the `v_eps` branch.
    pub phi: Field,
    pub beta0: f64,
    pub levels: Vec<FamilyLevel>,
}

impl BoundaryFamily {
    pub fn grid(&self) -> &ProductGrid {
        self.phi.grid()
    }

    pub fn level(&self, eps: f64) -> Result<&FamilyLevel> {
        self.levels
            .iter()
            .find(|l| (l.eps - eps).abs() <= 1e-14 * eps.abs())
            .ok_or_else(|| {
                Error::InvalidInput(format!("eps = {eps} is not in the boundary family"))
            })
    }

    pub fn phi_eps(&self, eps: f64) -> Result<&Field> {
        Ok(&self.level(eps)?.phi_eps)
    }
}

/// `C_eps = -log(eps/2) + C + 2`.
pub fn c_eps_rule(eps: f64, c_gap: f64) -> f64 {
    -(eps / 2.0).ln() + c_gap + 2.0
}

fn key_positivity(
    phi_eps: &Field,
    base: &BaseForm,
    model: &SingularModel,
    eps: f64,
) -> Result<KeyPositivity> {
    let g = *phi_eps.grid();
    let h = hermitian_hessian(phi_eps, base, eps)?;
    let mut out = KeyPositivity {
        lambda_min: f64::INFINITY,
        c_achieved: f64::INFINITY,
        worst_node: NodeIndex { i1: 0, i2: 0, k: 0 },
        strengthened_ratio: f64::INFINITY,
        derivative_bound_global: 0.0,
        derivative_bound_boundary: 0.0,
    };
    let mut violation: Option<(NodeIndex, f64, f64)> = None;
    for j in 0..h.len() {
        let node = g.node(h.node_index(j));
        if model.masked(node.i1, node.i2) {
            continue;
        }
        let lam = h.lambda_min_relative(j, 1.0, base.omega_ww(g.t(node.k)));
        let tj = g.layer_index(node.i1, node.i2);
        let weight = (model.b0 * model.tilde_psi.values()[tj]).exp();
        let ratio = lam / weight;
        if ratio < out.c_achieved {
            out.c_achieved = ratio;
            out.worst_node = node;
        }
        out.lambda_min = out.lambda_min.min(lam);
        let strong = model.f.values()[tj].exp() + 0.5 * eps;
        out.strengthened_ratio = out.strengthened_ratio.min(lam / strong);
        if lam < model.c_pos * weight && violation.is_none() {
            violation = Some((node, lam, model.c_pos * weight));
        }
    }
    if let Some((node, lambda_min, bound)) = violation {
        return Err(Error::KeyPositivity {
            node,
            lambda_min,
            bound,
        });
    }
    let (gr, he, _) = derivative_stats(phi_eps, |i1, i2, _| !model.masked(i1, i2))?;
    let last = g.nt() - 1;
    for idx in 0..g.len() {
        let n = g.node(idx);
        if model.masked(n.i1, n.i2) {
            continue;
        }
        let w = (model.b0 * model.psi.values()[idx % g.layer_len()]).exp();
        let v = (gr.values()[idx] + he.values()[idx]) * w;
        out.derivative_bound_global = out.derivative_bound_global.max(v);
        if n.k <= 1 || n.k + 1 >= last {
            out.derivative_bound_boundary = out.derivative_bound_boundary.max(v);
        }
    }
    Ok(out)
}

/// Boundary family `phi_eps = reg_max{phi0 - Ct, phi1 - C(1-t), v_eps - C_eps} + f`
/// for every `eps` in `eps_list`, with key positivity checked off the mask.
pub fn build_boundary_family(
    phi0: &TorusField,
    phi1: &TorusField,
    base: &BaseForm,
    model: &SingularModel,
    eps_list: &[f64],
    beta0: f64,
) -> Result<BoundaryFamily> {
    let g = *base.grid();
    g.ensure_same(phi0.grid())?;
    g.ensure_same(phi1.grid())?;
    if let Some(e) = eps_list
        .iter()
        .find(|&&e| !(e > 0.0 && e <= base.eps_cap()))
    {
        return Err(Error::InvalidInput(format!(
            "eps = {e} is outside (0, {}]",
            base.eps_cap()
        )));
    }
    let (c_gap, phi) = endpoint_subsolution(phi0, phi1)?;
    let opts = KahlerNewton::default();
    let v1 = solve_kahler_potential(base, 1.0, beta0, opts)?;
    let top = v1.sup();
    let b0 = branch(g, phi0, c_gap, false);
    let b1 = branch(g, phi1, c_gap, true);
    let f = annulus_potential(g);
    let mut levels = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let v_eps = solve_kahler_potential(base, eps, beta0, opts)?.map(|v| v - top);
        let c_eps = c_eps_rule(eps, c_gap);
        let b2 = Field::pullback(&v_eps.map(|v| v - c_eps));
        let phi_eps = reg_max(&[&b0, &b1, &b2], DEFAULT_SPREAD)?.zip_with(&f, |a, b| a + b)?;
        let key = key_positivity(&phi_eps, base, model, eps)?;
        levels.push(FamilyLevel {
            eps,
            c_eps,
            v_eps,
            phi_eps,
            key,
        });
    }
    Ok(BoundaryFamily {
        phi0: phi0.clone(),
        phi1: phi1.clone(),
        c_gap,
        phi,
        beta0,
        levels,
    })
}
