use crate::field::{Field, ProductGrid};

/// Rotationally symmetric potential of the flat annulus metric in the log
/// coordinate: `f_tt / 4 = e^{-2t}` with `f(0) = f(1) = 0`.
pub fn annulus_potential_at(t: f64) -> f64 {
    (-2.0 * t).exp() - ((-2.0f64).exp() - 1.0) * t - 1.0
}

pub fn annulus_potential(grid: ProductGrid) -> Field {
    let mut f = Field::from_fn(grid, |_, _, t| annulus_potential_at(t));
    // Pin the boundary layers to the exact zero rather than roundoff.
    let n = grid.layer_len();
    let last = grid.nt() - 1;
    f.values_mut()[..n].fill(0.0);
    f.values_mut()[last * n..].fill(0.0);
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values_and_midpoint() {
        assert_eq!(annulus_potential_at(0.0), 0.0);
        assert!(annulus_potential_at(1.0).abs() < 1e-16);
        // Closed form at t = 1/2 is e^{-1} - (e^{-2} - 1)/2 - 1.
        assert!((annulus_potential_at(0.5) + 0.199_788_200_446_864_07).abs() < 1e-15);
        assert!((annulus_potential_at(0.5) + 0.199_788_6).abs() < 1e-6);
    }

    #[test]
    fn discrete_equation_second_order() {
        let err = |nt: usize| {
            let g = ProductGrid::new(8, 8, nt, false).unwrap();
            let f = annulus_potential(g);
            let ht = g.ht();
            (1..nt - 1)
                .map(|k| {
                    let d2 =
                        (f.at(0, 0, k + 1) - 2.0 * f.at(0, 0, k) + f.at(0, 0, k - 1)) / (ht * ht);
                    (d2 / 4.0 - (-2.0 * g.t(k)).exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(17), err(33));
        assert!(e1 < 1e-2);
        assert!(((e1 / e2).log2() - 2.0).abs() < 0.1);
        let g = ProductGrid::new(8, 8, 17, false).unwrap();
        let f = annulus_potential(g);
        assert_eq!(f.at(3, 3, 0), 0.0);
        assert_eq!(f.at(3, 3, 16), 0.0);
    }
}
