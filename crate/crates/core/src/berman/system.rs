//! Discrete penalized Monge-Ampere operator and its Jacobian.

use crate::error::{Error, Result};
use crate::field::{hermitian_hessian, Field, HermitianFormField, ProductGrid};
use crate::linalg::{Matrix, Pattern};
use crate::model::BaseForm;

/// `det G / det omega - (eps/4)^2 e^{beta (u - h)} - det_floor` on the
/// interior nodes, with `G = alpha + eps omega + i ddbar u`.
pub struct DetSystem<'a> {
    pub grid: ProductGrid,
    pub base: &'a BaseForm,
    pub eps: f64,
    pub h: &'a Field,
    pub det_floor: f64,
    det_omega: Vec<f64>,
    pattern: Pattern,
    /// Start of each row's run of values in assembly order.
    row_start: Vec<usize>,
    nnz: usize,
}

/// Position of a neighbour relative to the row node. Each row lists the
/// center, the four x-neighbours, then for every interior t-neighbour the
/// neighbour itself and its four x-corners.
#[derive(Clone, Copy)]
enum Slot {
    Center,
    X1(bool),
    X2(bool),
    T(bool),
    Corner1(bool, bool),
    Corner2(bool, bool),
}

fn row_slots(k: usize, nt: usize) -> impl Iterator<Item = Slot> {
    let base = [
        Slot::Center,
        Slot::X1(true),
        Slot::X1(false),
        Slot::X2(true),
        Slot::X2(false),
    ];
    let mut t = Vec::with_capacity(10);
    for up in [true, false] {
        let nb = if up { k + 1 } else { k - 1 };
        if nb >= 1 && nb + 1 < nt {
            t.extend([
                Slot::T(up),
                Slot::Corner1(true, up),
                Slot::Corner1(false, up),
                Slot::Corner2(true, up),
                Slot::Corner2(false, up),
            ]);
        }
    }
    base.into_iter().chain(t)
}

impl<'a> DetSystem<'a> {
    pub fn new(base: &'a BaseForm, eps: f64, h: &'a Field, det_floor: f64) -> Result<Self> {
        let g = *h.grid();
        base.grid().ensure_same(&g)?;
        let n = g.layer_len();
        let det_omega = (0..g.nt()).map(|k| base.omega_ww(g.t(k))).collect();
        let mut entries = Vec::with_capacity(15 * g.interior_len());
        let mut row_start = Vec::with_capacity(g.interior_len());
        for k in 1..g.nt() - 1 {
            for i2 in 0..g.nx2() {
                for i1 in 0..g.nx1() {
                    let row = g.index(i1, i2, k) - n;
                    row_start.push(entries.len());
                    for s in row_slots(k, g.nt()) {
                        let col = Self::neighbour(&g, i1, i2, k, s) - n;
                        entries.push((row, col));
                    }
                }
            }
        }
        let pattern = Pattern::new(g.interior_len(), &entries)?;
        let nnz = entries.len();
        Ok(Self {
            grid: g,
            base,
            eps,
            h,
            det_floor,
            det_omega,
            pattern,
            row_start,
            nnz,
        })
    }

    fn neighbour(g: &ProductGrid, i1: usize, i2: usize, k: usize, s: Slot) -> usize {
        let kk = |up: bool| if up { k + 1 } else { k - 1 };
        let x1 = |p: bool| if p { g.next1(i1) } else { g.prev1(i1) };
        let x2 = |p: bool| if p { g.next2(i2) } else { g.prev2(i2) };
        match s {
            Slot::Center => g.index(i1, i2, k),
            Slot::X1(p) => g.index(x1(p), i2, k),
            Slot::X2(p) => g.index(i1, x2(p), k),
            Slot::T(up) => g.index(i1, i2, kk(up)),
            Slot::Corner1(p, up) => g.index(x1(p), i2, kk(up)),
            Slot::Corner2(p, up) => g.index(i1, x2(p), kk(up)),
        }
    }

    pub fn pattern_mut(&mut self) -> &mut Pattern {
        &mut self.pattern
    }

    /// `det omega` at layer `k`.
    pub fn det_omega(&self, k: usize) -> f64 {
        self.det_omega[k]
    }

    pub fn form(&self, u: &Field) -> Result<HermitianFormField> {
        hermitian_hessian(u, self.base, self.eps)
    }

    fn penalty(&self, u: f64, h: f64, beta: f64) -> f64 {
        let q = 0.25 * self.eps;
        q * q * (beta * (u - h)).exp()
    }

    /// Residual at every interior node.
    pub fn residual(&self, u: &Field, form: &HermitianFormField, beta: f64) -> Vec<f64> {
        let n = self.grid.layer_len();
        (0..form.len())
            .map(|j| {
                let idx = j + n;
                let k = idx / n;
                form.det(j) / self.det_omega[k]
                    - self.penalty(u.values()[idx], self.h.values()[idx], beta)
                    - self.det_floor
            })
            .collect()
    }

    /// `log(det G / det omega) - log((eps/4)^2 e^{beta (u - h)} + det_floor)`.
    /// Same zero set as [`Self::residual`]; the logarithm acts as a barrier
    /// against `det G -> 0`, which is what the Newton step is computed from.
    pub fn log_residual(&self, u: &Field, form: &HermitianFormField, beta: f64) -> Vec<f64> {
        let n = self.grid.layer_len();
        (0..form.len())
            .map(|j| {
                let idx = j + n;
                let k = idx / n;
                (form.det(j) / self.det_omega[k]).ln()
                    - (self.penalty(u.values()[idx], self.h.values()[idx], beta) + self.det_floor)
                        .ln()
            })
            .collect()
    }

    /// Jacobian of [`Self::residual`] (`log_form = false`) or of
    /// [`Self::log_residual`] with respect to the interior values. In log
    /// form row `j` is multiplied by [`Self::row_scale`] so both matrices
    /// share the same scaling.
    pub fn jacobian(
        &self,
        u: &Field,
        form: &HermitianFormField,
        beta: f64,
        log_form: bool,
    ) -> Result<Matrix> {
        let g = &self.grid;
        let n = g.layer_len();
        let (h1, h2, ht) = (g.hx1(), g.hx2(), g.ht());
        let (c11, c22, ctt) = (0.25 / (h1 * h1), 0.25 / (h2 * h2), 0.25 / (ht * ht));
        let (c1t, c2t) = (0.25 / (4.0 * h1 * ht), 0.25 / (4.0 * h2 * ht));
        let mut vals = vec![0.0; self.nnz];
        for j in 0..form.len() {
            let idx = j + n;
            let k = idx / n;
            let p_u = self.penalty(u.values()[idx], self.h.values()[idx], beta);
            let (inv, center_rhs) = if log_form {
                let s = form.det(j) / self.det_omega[k];
                (
                    1.0 / self.det_omega[k],
                    s * beta * p_u / (p_u + self.det_floor),
                )
            } else {
                (1.0 / self.det_omega[k], beta * p_u)
            };
            let (gzz, gww, re, im) = (form.gzz[j], form.gww[j], form.gzw_re[j], form.gzw_im[j]);
            let mut p = self.row_start[j];
            for s in row_slots(k, g.nt()) {
                let v = match s {
                    Slot::Center => -2.0 * (gww * (c11 + c22) + gzz * ctt) * inv - center_rhs,
                    Slot::X1(_) => gww * c11 * inv,
                    Slot::X2(_) => gww * c22 * inv,
                    Slot::T(_) => gzz * ctt * inv,
                    Slot::Corner1(px, up) => {
                        let sign = if px == up { 1.0 } else { -1.0 };
                        -2.0 * re * sign * c1t * inv
                    }
                    Slot::Corner2(px, up) => {
                        let sign = if px == up { 1.0 } else { -1.0 };
                        -2.0 * im * sign * c2t * inv
                    }
                };
                vals[p] = v;
                p += 1;
            }
        }
        self.pattern.matrix(&vals)
    }

    /// `det G / det omega` per interior node.
    pub fn row_scale(&self, form: &HermitianFormField) -> Vec<f64> {
        let n = self.grid.layer_len();
        (0..form.len())
            .map(|j| form.det(j) / self.det_omega[(j + n) / n])
            .collect()
    }

    /// Checks that `u` carries the boundary values of `phi` exactly.
    pub fn check_boundary(&self, u: &Field, phi: &Field) -> Result<()> {
        let g = &self.grid;
        for k in [0, g.nt() - 1] {
            if u.layer(k) != phi.layer(k) {
                return Err(Error::MissingDirichlet(format!(
                    "iterate differs from the boundary data on layer k={k}"
                )));
            }
        }
        Ok(())
    }
}
