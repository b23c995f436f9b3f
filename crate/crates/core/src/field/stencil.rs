//! Finite-difference operators on a [`ProductGrid`].
//!
//! Second differences are centered and compact: `u_{x1x1}` uses the three
//! points along `x1`, mixed terms use the four diagonal corners. At the two
//! `t`-boundaries [`derivative_stats`] switches to one-sided second-order
//! formulas in `t`.

use crate::error::{Error, Result};
use crate::field::{Field, ProductGrid};
use crate::model::BaseForm;

/// Samples of the 2x2 Hermitian form `alpha + eps*omega + i ddbar u` at the
/// interior nodes, in the reduced coordinates `z = x1 + i x2`, `w = t - i theta`.
///
/// Entry `j` belongs to the interior node with `t`-layer `j / layer_len + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianFormField {
    grid: ProductGrid,
    pub gzz: Vec<f64>,
    pub gww: Vec<f64>,
    pub gzw_re: Vec<f64>,
    pub gzw_im: Vec<f64>,
}

impl HermitianFormField {
    pub fn grid(&self) -> &ProductGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.gzz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gzz.is_empty()
    }

    /// Product-grid index of interior entry `j`.
    pub fn node_index(&self, j: usize) -> usize {
        j + self.grid.layer_len()
    }

    #[inline]
    pub fn det(&self, j: usize) -> f64 {
        self.gzz[j] * self.gww[j]
            - self.gzw_re[j] * self.gzw_re[j]
            - self.gzw_im[j] * self.gzw_im[j]
    }

    /// Smallest eigenvalue at entry `j` relative to the diagonal reference
    /// `diag(r_zz, r_ww)`.
    pub fn lambda_min_relative(&self, j: usize, r_zz: f64, r_ww: f64) -> f64 {
        let a = self.gzz[j] / r_zz;
        let d = self.gww[j] / r_ww;
        let off2 =
            (self.gzw_re[j] * self.gzw_re[j] + self.gzw_im[j] * self.gzw_im[j]) / (r_zz * r_ww);
        let mean = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + off2).sqrt();
        let hi = mean + disc;
        // Use the determinant for the small root to avoid cancellation.
        let det = a * d - off2;
        if hi > 0.0 {
            det / hi
        } else {
            mean - disc
        }
    }

    /// Trace of the reference `diag(r_zz, r_ww)` against the inverse form.
    pub fn trace_of_reference(&self, j: usize, r_zz: f64, r_ww: f64) -> f64 {
        (self.gww[j] * r_zz + self.gzz[j] * r_ww) / self.det(j)
    }

    /// Whether both leading minors are positive at every entry; returns the
    /// first failing product-grid node otherwise.
    pub fn first_non_positive(&self) -> Option<(usize, f64)> {
        (0..self.len())
            .find(|&j| !(self.gzz[j] > 0.0 && self.det(j) > 0.0))
            .map(|j| (self.node_index(j), self.det(j)))
    }
}

fn check_closure(u: &Field) -> Result<()> {
    let g = u.grid();
    for k in [0, g.nt() - 1] {
        if let Some(p) = u.layer(k).iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingDirichlet(format!(
                "boundary layer k={k} has a non-finite value at node {}",
                g.node(k * g.layer_len() + p)
            )));
        }
    }
    Ok(())
}

/// Complex Hessian form of `u` against `base` with `eps*omega` added.
pub fn hermitian_hessian(u: &Field, base: &BaseForm, eps: f64) -> Result<HermitianFormField> {
    let g = *u.grid();
    base.grid().ensure_same(&g)?;
    check_closure(u)?;
    let v = u.values();
    if let Some(idx) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            node: g.node(idx),
            what: "u in hermitian_hessian",
        });
    }
    let (h1, h2, ht) = (g.hx1(), g.hx2(), g.ht());
    let (c11, c22, ctt) = (1.0 / (h1 * h1), 1.0 / (h2 * h2), 1.0 / (ht * ht));
    let (c1t, c2t) = (1.0 / (4.0 * h1 * ht), 1.0 / (4.0 * h2 * ht));
    let n = g.interior_len();
    let mut out = HermitianFormField {
        grid: g,
        gzz: Vec::with_capacity(n),
        gww: Vec::with_capacity(n),
        gzw_re: Vec::with_capacity(n),
        gzw_im: Vec::with_capacity(n),
    };
    let a = base.a().values();
    for k in 1..g.nt() - 1 {
        let ww_ref = eps * base.omega_ww(g.t(k));
        for i2 in 0..g.nx2() {
            let (p2, m2) = (g.next2(i2), g.prev2(i2));
            for i1 in 0..g.nx1() {
                let (p1, m1) = (g.next1(i1), g.prev1(i1));
                let at = |j1: usize, j2: usize, kk: usize| v[g.index(j1, j2, kk)];
                let c = at(i1, i2, k);
                let u11 = (at(p1, i2, k) - 2.0 * c + at(m1, i2, k)) * c11;
                let u22 = (at(i1, p2, k) - 2.0 * c + at(i1, m2, k)) * c22;
                let utt = (at(i1, i2, k + 1) - 2.0 * c + at(i1, i2, k - 1)) * ctt;
                let u1t = (at(p1, i2, k + 1) - at(m1, i2, k + 1) - at(p1, i2, k - 1)
                    + at(m1, i2, k - 1))
                    * c1t;
                let u2t = (at(i1, p2, k + 1) - at(i1, m2, k + 1) - at(i1, p2, k - 1)
                    + at(i1, m2, k - 1))
                    * c2t;
                out.gzz
                    .push(a[g.layer_index(i1, i2)] + eps + 0.25 * (u11 + u22));
                out.gww.push(ww_ref + 0.25 * utt);
                out.gzw_re.push(0.25 * u1t);
                out.gzw_im.push(0.25 * u2t);
            }
        }
    }
    Ok(out)
}

/// Determinant of each interior sample.
pub fn ma_density(h: &HermitianFormField) -> Vec<f64> {
    (0..h.len()).map(|j| h.det(j)).collect()
}

/// Real second partials of a field at one node, in the order
/// `(11, 22, tt, 12, 1t, 2t)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Hessian {
    pub d11: f64,
    pub d22: f64,
    pub dtt: f64,
    pub d12: f64,
    pub d1t: f64,
    pub d2t: f64,
}

impl Hessian {
    pub fn frobenius(&self) -> f64 {
        (self.d11 * self.d11
            + self.d22 * self.d22
            + self.dtt * self.dtt
            + 2.0 * (self.d12 * self.d12 + self.d1t * self.d1t + self.d2t * self.d2t))
            .sqrt()
    }
}

/// Stencil evaluator for first and second partials with one-sided `t`
/// formulas on the boundary layers. Requires `nt >= 4`, which every valid
/// grid satisfies.
pub struct Differ<'a> {
    g: ProductGrid,
    v: &'a [f64],
}

impl<'a> Differ<'a> {
    pub fn new(u: &'a Field) -> Self {
        Self {
            g: *u.grid(),
            v: u.values(),
        }
    }

    #[inline]
    fn at(&self, i1: usize, i2: usize, k: usize) -> f64 {
        self.v[self.g.index(i1, i2, k)]
    }

    /// First `t`-derivative of the function `k -> f(k)` at layer `k`.
    #[inline]
    fn dt_of(&self, k: usize, f: impl Fn(usize) -> f64) -> f64 {
        let ht = self.g.ht();
        let last = self.g.nt() - 1;
        if k == 0 {
            (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * ht)
        } else if k == last {
            (3.0 * f(last) - 4.0 * f(last - 1) + f(last - 2)) / (2.0 * ht)
        } else {
            (f(k + 1) - f(k - 1)) / (2.0 * ht)
        }
    }

    pub fn gradient(&self, i1: usize, i2: usize, k: usize) -> [f64; 3] {
        let g = &self.g;
        let d1 = (self.at(g.next1(i1), i2, k) - self.at(g.prev1(i1), i2, k)) / (2.0 * g.hx1());
        let d2 = (self.at(i1, g.next2(i2), k) - self.at(i1, g.prev2(i2), k)) / (2.0 * g.hx2());
        let dt = self.dt_of(k, |kk| self.at(i1, i2, kk));
        [d1, d2, dt]
    }

    pub fn hessian(&self, i1: usize, i2: usize, k: usize) -> Hessian {
        let g = &self.g;
        let (p1, m1, p2, m2) = (g.next1(i1), g.prev1(i1), g.next2(i2), g.prev2(i2));
        let (h1, h2, ht) = (g.hx1(), g.hx2(), g.ht());
        let c = self.at(i1, i2, k);
        let d11 = (self.at(p1, i2, k) - 2.0 * c + self.at(m1, i2, k)) / (h1 * h1);
        let d22 = (self.at(i1, p2, k) - 2.0 * c + self.at(i1, m2, k)) / (h2 * h2);
        let d12 = (self.at(p1, p2, k) - self.at(m1, p2, k) - self.at(p1, m2, k)
            + self.at(m1, m2, k))
            / (4.0 * h1 * h2);
        let last = g.nt() - 1;
        let f = |kk: usize| self.at(i1, i2, kk);
        let dtt = if k == 0 {
            (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / (ht * ht)
        } else if k == last {
            (2.0 * f(last) - 5.0 * f(last - 1) + 4.0 * f(last - 2) - f(last - 3)) / (ht * ht)
        } else {
            (f(k + 1) - 2.0 * f(k) + f(k - 1)) / (ht * ht)
        };
        let d1t = self.dt_of(k, |kk| {
            (self.at(p1, i2, kk) - self.at(m1, i2, kk)) / (2.0 * h1)
        });
        let d2t = self.dt_of(k, |kk| {
            (self.at(i1, p2, kk) - self.at(i1, m2, kk)) / (2.0 * h2)
        });
        Hessian {
            d11,
            d22,
            dtt,
            d12,
            d1t,
            d2t,
        }
    }
}

/// Gradient magnitude, real-Hessian Frobenius norm and flat Laplacian
/// `u_{x1x1} + u_{x2x2} + u_tt` at the nodes selected by `mask`. Unselected
/// nodes carry 0.
pub fn derivative_stats(
    u: &Field,
    mask: impl Fn(usize, usize, usize) -> bool,
) -> Result<(Field, Field, Field)> {
    let g = *u.grid();
    let d = Differ::new(u);
    let (mut grad, mut hess, mut lap) =
        (vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]);
    for k in 0..g.nt() {
        for i2 in 0..g.nx2() {
            for i1 in 0..g.nx1() {
                if !mask(i1, i2, k) {
                    continue;
                }
                let idx = g.index(i1, i2, k);
                let gr = d.gradient(i1, i2, k);
                let h = d.hessian(i1, i2, k);
                let gm = (gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2]).sqrt();
                let hn = h.frobenius();
                let l = h.d11 + h.d22 + h.dtt;
                if !(gm.is_finite() && hn.is_finite() && l.is_finite()) {
                    return Err(Error::NonFinite {
                        node: g.node(idx),
                        what: "stencil touches a non-finite value",
                    });
                }
                grad[idx] = gm;
                hess[idx] = hn;
                lap[idx] = l;
            }
        }
    }
    Ok((
        Field::from_values(g, grad)?,
        Field::from_values(g, hess)?,
        Field::from_values(g, lap)?,
    ))
}

/// Frobenius norm of the `order`-th derivative tensor (orders 1 to 3) at
/// every node. Order 3 applies first differences to the compact second
/// differences.
pub fn derivative_norm(u: &Field, order: usize) -> Result<Field> {
    let g = *u.grid();
    let d = Differ::new(u);
    let mut out = Vec::with_capacity(g.len());
    match order {
        1 | 2 => {
            for k in 0..g.nt() {
                for i2 in 0..g.nx2() {
                    for i1 in 0..g.nx1() {
                        out.push(if order == 1 {
                            let gr = d.gradient(i1, i2, k);
                            (gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2]).sqrt()
                        } else {
                            d.hessian(i1, i2, k).frobenius()
                        });
                    }
                }
            }
        }
        3 => {
            let mut parts: [Vec<f64>; 6] = Default::default();
            for k in 0..g.nt() {
                for i2 in 0..g.nx2() {
                    for i1 in 0..g.nx1() {
                        let h = d.hessian(i1, i2, k);
                        for (p, x) in parts
                            .iter_mut()
                            .zip([h.d11, h.d22, h.dtt, h.d12, h.d1t, h.d2t])
                        {
                            p.push(x);
                        }
                    }
                }
            }
            let fields: Vec<Field> = parts
                .into_iter()
                .map(|p| Field::from_values(g, p))
                .collect::<Result<_>>()?;
            let differs: Vec<Differ> = fields.iter().map(Differ::new).collect();
            for k in 0..g.nt() {
                for i2 in 0..g.nx2() {
                    for i1 in 0..g.nx1() {
                        let gr: Vec<[f64; 3]> =
                            differs.iter().map(|df| df.gradient(i1, i2, k)).collect();
                        let [h11, h22, htt, h12, h1t, h2t] =
                            [&gr[0], &gr[1], &gr[2], &gr[3], &gr[4], &gr[5]];
                        // Distinct third partials with their multiplicities.
                        let terms = [
                            (h11[0], 1.0),
                            (h22[1], 1.0),
                            (htt[2], 1.0),
                            (h11[1], 3.0),
                            (h11[2], 3.0),
                            (h22[0], 3.0),
                            (h22[2], 3.0),
                            (htt[0], 3.0),
                            (htt[1], 3.0),
                            ((h12[2] + h1t[1] + h2t[0]) / 3.0, 6.0),
                        ];
                        out.push(terms.iter().map(|(x, m)| m * x * x).sum::<f64>().sqrt());
                    }
                }
            }
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "derivative order {order} is outside 1..=3"
            )))
        }
    }
    Field::from_values(g, out)
}
