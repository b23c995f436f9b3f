use crate::error::{Error, Result};
use crate::field::ProductGrid;

/// One real value per node of a [`ProductGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: ProductGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: ProductGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: ProductGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::NonFinite {
                node: grid.node(idx),
                what: "NaN in field",
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x1, x2, t)` at every node.
    pub fn from_fn(grid: ProductGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.nt() {
            let t = grid.t(k);
            for i2 in 0..grid.nx2() {
                let x2 = grid.x2(i2);
                for i1 in 0..grid.nx1() {
                    values.push(f(grid.x1(i1), x2, t));
                }
            }
        }
        Self { grid, values }
    }

    /// Pulls a torus field back along the projection onto `T^2`.
    pub fn pullback(x: &TorusField) -> Self {
        let grid = x.grid;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.nt() {
            values.extend_from_slice(x.values());
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &ProductGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize, k: usize) -> f64 {
        self.values[self.grid.index(i1, i2, k)]
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        let n = self.grid.layer_len();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
    }

    pub fn sup(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// One real value per node of the torus factor `T^2` of a product grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    grid: ProductGrid,
    values: Vec<f64>,
}

impl TorusField {
    pub fn constant(grid: ProductGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.layer_len()],
        }
    }

    pub fn from_values(grid: ProductGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.layer_len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a torus layer of {} nodes",
                values.len(),
                grid.layer_len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::NonFinite {
                node: grid.node(idx),
                what: "NaN in torus field",
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: ProductGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.layer_len());
        for i2 in 0..grid.nx2() {
            for i1 in 0..grid.nx1() {
                values.push(f(grid.x1(i1), grid.x2(i2)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &ProductGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.layer_index(i1, i2)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sup(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Periodic five-point Laplacian `u_{x1x1} + u_{x2x2}` at every node.
    pub fn laplacian(&self) -> Vec<f64> {
        let g = &self.grid;
        let (c1, c2) = (1.0 / (g.hx1() * g.hx1()), 1.0 / (g.hx2() * g.hx2()));
        let mut out = Vec::with_capacity(self.values.len());
        for i2 in 0..g.nx2() {
            for i1 in 0..g.nx1() {
                let u = self.at(i1, i2);
                let d11 = (self.at(g.next1(i1), i2) - 2.0 * u + self.at(g.prev1(i1), i2)) * c1;
                let d22 = (self.at(i1, g.next2(i2)) - 2.0 * u + self.at(i1, g.prev2(i2))) * c2;
                out.push(d11 + d22);
            }
        }
        out
    }
}
