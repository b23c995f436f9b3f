use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Differ, Field};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub sup: f64,
    pub mean: f64,
    /// Sup of the difference of first differences along `x1`, `x2` and `t`.
    pub first_difference_sup: f64,
    /// Sup over interior layers only.
    pub interior_sup: f64,
}

/// Pointwise and `C^1` comparison of a solution with a reference.
pub fn oracle_compare(num: &Field, oracle: &Field) -> Result<CompareReport> {
    let g = *num.grid();
    if oracle.grid() != &g {
        return Err(Error::GridMismatch(format!(
            "cannot compare a field on {:?} with one on {:?}",
            g,
            oracle.grid()
        )));
    }
    let d: Vec<f64> = num
        .values()
        .iter()
        .zip(oracle.values())
        .map(|(a, b)| a - b)
        .collect();
    let sup = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mean = d.iter().map(|x| x.abs()).sum::<f64>() / d.len() as f64;
    let n = g.layer_len();
    let interior_sup = d[n..g.len() - n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut fd: f64 = 0.0;
    for k in 0..g.nt() {
        for i2 in 0..g.nx2() {
            for i1 in 0..g.nx1() {
                let here = d[g.index(i1, i2, k)];
                let mut nb = vec![
                    (d[g.index(g.next1(i1), i2, k)], g.hx1()),
                    (d[g.index(i1, g.next2(i2), k)], g.hx2()),
                ];
                if k + 1 < g.nt() {
                    nb.push((d[g.index(i1, i2, k + 1)], g.ht()));
                }
                for (v, h) in nb {
                    fd = fd.max((v - here).abs() / h);
                }
            }
        }
    }
    Ok(CompareReport {
        sup,
        mean,
        first_difference_sup: fd,
        interior_sup,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub hess_sup_coarse: f64,
    pub hess_sup_fine: f64,
    /// Fine over coarse; near 1 when the Hessian stays bounded.
    pub hess_ratio: f64,
    pub jump_coarse: f64,
    pub jump_fine: f64,
    /// Fine over coarse; near 1/2 or below for a `C^2` field, near 1 when
    /// the Hessian jumps.
    pub jump_ratio: f64,
}

/// Largest Hessian norm and largest Hessian jump between neighbouring
/// interior nodes.
fn hessian_profile(v: &Field) -> (f64, f64) {
    let g = *v.grid();
    let d = Differ::new(v);
    let comps = |i1: usize, i2: usize, k: usize| {
        let h = d.hessian(i1, i2, k);
        [h.d11, h.d22, h.dtt, h.d12, h.d1t, h.d2t]
    };
    let norm = |a: [f64; 6]| {
        (a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + 2.0 * (a[3] * a[3] + a[4] * a[4] + a[5] * a[5]))
            .sqrt()
    };
    let mut sup: f64 = 0.0;
    let mut jump: f64 = 0.0;
    for k in 1..g.nt() - 1 {
        for i2 in 0..g.nx2() {
            for i1 in 0..g.nx1() {
                let here = comps(i1, i2, k);
                sup = sup.max(norm(here));
                let mut nbs = vec![comps(g.next1(i1), i2, k), comps(i1, g.next2(i2), k)];
                if k + 2 < g.nt() {
                    nbs.push(comps(i1, i2, k + 1));
                }
                for nb in nbs {
                    let mut diff = [0.0; 6];
                    for c in 0..6 {
                        diff[c] = nb[c] - here[c];
                    }
                    jump = jump.max(norm(diff));
                }
            }
        }
    }
    (sup, jump)
}

/// Hessian bound and Hessian continuity of one path at two resolutions.
/// Diagnostic only.
pub fn c11_probe(coarse: &Field, fine: &Field) -> Result<ProbeReport> {
    let (gc, gf) = (coarse.grid(), fine.grid());
    if gf.nx1() <= gc.nx1() && gf.nt() <= gc.nt() {
        return Err(Error::GridMismatch(
            "the fine field is not finer than the coarse one".into(),
        ));
    }
    let (hc, jc) = hessian_profile(coarse);
    let (hf, jf) = hessian_profile(fine);
    let ratio = |a: f64, b: f64| {
        if b > 0.0 {
            a / b
        } else if a > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    };
    Ok(ProbeReport {
        hess_sup_coarse: hc,
        hess_sup_fine: hf,
        hess_ratio: ratio(hf, hc),
        jump_coarse: jc,
        jump_fine: jf,
        jump_ratio: ratio(jf, jc),
    })
}
