use crate::error::{Error, Result};
use crate::field::{ProductGrid, TorusField};
use crate::linalg::Pattern;
use crate::model::BaseForm;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KahlerNewton {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KahlerNewton {
    fn default() -> Self {
        Self {
            max_iter: 60,
            tol: 1e-12,
        }
    }
}

/// Entries of `-Delta_x / 4` on the periodic torus grid, diagonal first in
/// every row. Lower triangle only when `lower` is set.
fn torus_pattern(g: &ProductGrid, lower: bool) -> (Vec<(usize, usize)>, Vec<f64>) {
    let (c1, c2) = (0.25 / (g.hx1() * g.hx1()), 0.25 / (g.hx2() * g.hx2()));
    let mut e = Vec::with_capacity(5 * g.layer_len());
    let mut v = Vec::with_capacity(5 * g.layer_len());
    for i2 in 0..g.nx2() {
        for i1 in 0..g.nx1() {
            let r = g.layer_index(i1, i2);
            e.push((r, r));
            v.push(2.0 * (c1 + c2));
            for (j, c) in [
                (g.layer_index(g.next1(i1), i2), c1),
                (g.layer_index(g.prev1(i1), i2), c1),
                (g.layer_index(i1, g.next2(i2)), c2),
                (g.layer_index(i1, g.prev2(i2)), c2),
            ] {
                if !lower || j > r {
                    e.push((j, r));
                    v.push(-c);
                }
            }
        }
    }
    (e, v)
}

/// Solves `a + eps/2 + Delta_x v / 4 = e^{beta0 v}` on the torus by damped
/// Newton. The negated Jacobian `-Delta_x/4 + beta0 e^{beta0 v}` is SPD.
pub fn solve_kahler_potential(
    base: &BaseForm,
    eps: f64,
    beta0: f64,
    opts: KahlerNewton,
) -> Result<TorusField> {
    let g = *base.grid();
    if !(beta0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "beta0 = {beta0} must be positive"
        )));
    }
    let a = base.a().values();
    let rhs0: Vec<f64> = a.iter().map(|&ai| ai + 0.5 * eps).collect();
    let mean = rhs0.iter().sum::<f64>() / rhs0.len() as f64;
    if !(rhs0.iter().any(|&r| r > 0.0)) {
        return Err(Error::InvalidInput("a + eps/2 vanishes identically".into()));
    }
    let (entries, lap_vals) = torus_pattern(&g, true);
    let diag_pos: Vec<usize> = entries
        .iter()
        .enumerate()
        .filter(|(_, (r, c))| r == c)
        .map(|(p, _)| p)
        .collect();
    let mut pattern = Pattern::new(g.layer_len(), &entries)?;

    let residual = |v: &TorusField| -> Vec<f64> {
        v.laplacian()
            .iter()
            .zip(&rhs0)
            .zip(v.values())
            .map(|((l, r), vi)| r + 0.25 * l - (beta0 * vi).exp())
            .collect()
    };
    let sup = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut v = TorusField::constant(g, mean.ln() / beta0);
    let mut r = residual(&v);
    let mut history = vec![sup(&r)];
    for _ in 0..opts.max_iter {
        if *history.last().expect("nonempty") <= opts.tol {
            return Ok(v);
        }
        let mut vals = lap_vals.clone();
        for (j, &p) in diag_pos.iter().enumerate() {
            vals[p] += beta0 * (beta0 * v.values()[j]).exp();
        }
        let m = pattern.matrix(&vals)?;
        let step = pattern.cholesky(&m)?.solve(&r);
        let mut lambda = 1.0;
        loop {
            let trial = TorusField::from_values(
                g,
                v.values()
                    .iter()
                    .zip(&step)
                    .map(|(x, s)| x + lambda * s)
                    .collect(),
            )?;
            let rt = residual(&trial);
            if sup(&rt) < *history.last().expect("nonempty") || lambda < 1e-6 {
                v = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
        }
        history.push(sup(&r));
    }
    if *history.last().expect("nonempty") <= opts.tol {
        return Ok(v);
    }
    Err(Error::NewtonFailure {
        reason: format!("Kaehler potential did not reach {:e}", opts.tol),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_degenerate_form;

    #[test]
    fn flat_form_gives_zero() {
        let g = ProductGrid::new(16, 16, 9, true).unwrap();
        let base = BaseForm::constant(g, 1.0, 1.0).unwrap();
        let v = solve_kahler_potential(&base, 0.0, 1.0, KahlerNewton::default()).unwrap();
        assert!(v.values().iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn constant_balance() {
        let g = ProductGrid::new(16, 16, 9, true).unwrap();
        let base = BaseForm::constant(g, 2.0, 1.0).unwrap();
        for beta0 in [0.5, 1.0, 3.0] {
            let v = solve_kahler_potential(&base, 0.0, beta0, KahlerNewton::default()).unwrap();
            assert!(v
                .values()
                .iter()
                .all(|x| (x - 2f64.ln() / beta0).abs() < 1e-13));
        }
    }

    #[test]
    fn monotone_in_eps() {
        let g = ProductGrid::new(32, 32, 9, true).unwrap();
        let base = make_degenerate_form(g, 4.0).unwrap();
        let mut prev: Option<TorusField> = None;
        for eps in [1.0, 0.5, 0.25, 0.125] {
            let v = solve_kahler_potential(&base, eps, 1.0, KahlerNewton::default()).unwrap();
            if let Some(p) = &prev {
                assert!(v.values().iter().zip(p.values()).all(|(a, b)| a <= b));
            }
            prev = Some(v);
        }
    }
}
