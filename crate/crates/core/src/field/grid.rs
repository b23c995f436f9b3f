use serde::{Deserialize, Serialize};

use crate::error::{Error, NodeIndex, Result};

/// Discretization of the model manifold `T^2 x [0,1]`.
///
/// The two torus directions are periodic with `nx` nodes each and spacing
/// `1/nx`; the `t` direction carries `nt` nodes including both Dirichlet
/// boundaries, spacing `1/(nt-1)`. With `offset` the torus nodes sit at
/// half-cell positions `(i + 1/2)/nx`, which keeps every lattice point
/// (and therefore every singular point of the shipped models) off the grid.
///
/// Linear node order is `x1` fastest, then `x2`, then `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductGrid {
    nx1: usize,
    nx2: usize,
    nt: usize,
    offset: bool,
}

pub const MIN_TORUS_NODES: usize = 8;
pub const MIN_T_NODES: usize = 9;

impl ProductGrid {
    pub fn new(nx1: usize, nx2: usize, nt: usize, offset: bool) -> Result<Self> {
        for (name, n) in [("nx1", nx1), ("nx2", nx2)] {
            if n < MIN_TORUS_NODES {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} is below the minimum of {MIN_TORUS_NODES}"
                )));
            }
            if n % 2 != 0 {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be even")));
            }
        }
        if nt < MIN_T_NODES {
            return Err(Error::InvalidGrid(format!(
                "nt = {nt} is below the minimum of {MIN_T_NODES}"
            )));
        }
        Ok(Self {
            nx1,
            nx2,
            nt,
            offset,
        })
    }

    pub fn nx1(&self) -> usize {
        self.nx1
    }

    pub fn nx2(&self) -> usize {
        self.nx2
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn offset(&self) -> bool {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.nx1 * self.nx2 * self.nt
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of nodes in one `t`-layer.
    pub fn layer_len(&self) -> usize {
        self.nx1 * self.nx2
    }

    /// Number of nodes strictly between the two `t`-boundaries.
    pub fn interior_len(&self) -> usize {
        self.layer_len() * (self.nt - 2)
    }

    pub fn hx1(&self) -> f64 {
        1.0 / self.nx1 as f64
    }

    pub fn hx2(&self) -> f64 {
        1.0 / self.nx2 as f64
    }

    pub fn ht(&self) -> f64 {
        1.0 / (self.nt - 1) as f64
    }

    fn shift(&self) -> f64 {
        if self.offset {
            0.5
        } else {
            0.0
        }
    }

    pub fn x1(&self, i1: usize) -> f64 {
        (i1 as f64 + self.shift()) / self.nx1 as f64
    }

    pub fn x2(&self, i2: usize) -> f64 {
        (i2 as f64 + self.shift()) / self.nx2 as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 / (self.nt - 1) as f64
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, k: usize) -> usize {
        (k * self.nx2 + i2) * self.nx1 + i1
    }

    #[inline]
    pub fn layer_index(&self, i1: usize, i2: usize) -> usize {
        i2 * self.nx1 + i1
    }

    pub fn node(&self, idx: usize) -> NodeIndex {
        let i1 = idx % self.nx1;
        let rest = idx / self.nx1;
        NodeIndex {
            i1,
            i2: rest % self.nx2,
            k: rest / self.nx2,
        }
    }

    #[inline]
    pub fn next1(&self, i1: usize) -> usize {
        if i1 + 1 == self.nx1 {
            0
        } else {
            i1 + 1
        }
    }

    #[inline]
    pub fn prev1(&self, i1: usize) -> usize {
        if i1 == 0 {
            self.nx1 - 1
        } else {
            i1 - 1
        }
    }

    #[inline]
    pub fn next2(&self, i2: usize) -> usize {
        if i2 + 1 == self.nx2 {
            0
        } else {
            i2 + 1
        }
    }

    #[inline]
    pub fn prev2(&self, i2: usize) -> usize {
        if i2 == 0 {
            self.nx2 - 1
        } else {
            i2 - 1
        }
    }

    pub fn is_t_boundary(&self, k: usize) -> bool {
        k == 0 || k + 1 == self.nt
    }

    /// Periodic distance on the torus between node `(i1, i2)` and `point`.
    pub fn torus_distance(&self, i1: usize, i2: usize, point: [f64; 2]) -> f64 {
        let wrap = |d: f64| {
            let d = d - d.round();
            d.abs()
        };
        let d1 = wrap(self.x1(i1) - point[0]);
        let d2 = wrap(self.x2(i2) - point[1]);
        d1.hypot(d2)
    }

    /// Same grid with every spacing halved (`nt - 1` doubled).
    pub fn refined(&self) -> Self {
        Self {
            nx1: self.nx1 * 2,
            nx2: self.nx2 * 2,
            nt: (self.nt - 1) * 2 + 1,
            offset: self.offset,
        }
    }

    pub fn ensure_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}
