//! Field persistence: a flat little-endian `f64` array next to a JSON
//! header, and a plotting CSV.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, ProductGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub grid: ProductGrid,
    pub hx1: f64,
    pub hx2: f64,
    pub ht: f64,
    pub axis_order: String,
    pub dtype: String,
    pub len: usize,
}

impl FieldHeader {
    pub fn for_grid(grid: ProductGrid) -> Self {
        Self {
            grid,
            hx1: grid.hx1(),
            hx2: grid.hx2(),
            ht: grid.ht(),
            axis_order: "x1,x2,t (x1 fastest)".into(),
            dtype: "f64-le".into(),
            len: grid.len(),
        }
    }
}

pub fn to_bytes(field: &Field) -> Vec<u8> {
    let mut out = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn from_bytes(grid: ProductGrid, bytes: &[u8]) -> Result<Field> {
    if bytes.len() != grid.len() * 8 {
        return Err(Error::GridMismatch(format!(
            "{} bytes for a grid of {} nodes",
            bytes.len(),
            grid.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Field::from_values(grid, values)
}

fn header_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `<path>` (binary) and `<path>` with a `.json` extension (header).
/// Returns the bytes of the binary file.
pub fn write_field(field: &Field, path: &Path) -> Result<Vec<u8>> {
    let bytes = to_bytes(field);
    std::fs::write(path, &bytes)?;
    let header = serde_json::to_vec_pretty(&FieldHeader::for_grid(*field.grid()))?;
    std::fs::write(header_path(path), header)?;
    Ok(bytes)
}

pub fn read_field(path: &Path) -> Result<Field> {
    let header: FieldHeader = serde_json::from_slice(&std::fs::read(header_path(path))?)?;
    from_bytes(header.grid, &std::fs::read(path)?)
}

pub fn write_csv(field: &Field, mut w: impl Write) -> Result<()> {
    let g = field.grid();
    writeln!(w, "x1,x2,t,value")?;
    for (idx, v) in field.values().iter().enumerate() {
        let n = g.node(idx);
        writeln!(w, "{},{},{},{}", g.x1(n.i1), g.x2(n.i2), g.t(n.k), v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_roundtrip() {
        let g = ProductGrid::new(8, 8, 9, true).unwrap();
        let f = Field::from_fn(g, |a, b, t| a - 2.0 * b + t * t);
        assert_eq!(from_bytes(g, &to_bytes(&f)).unwrap(), f);
    }

    #[test]
    fn file_roundtrip() {
        let dir = std::env::temp_dir().join(format!("envelope-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let g = ProductGrid::new(8, 10, 9, false).unwrap();
        let f = Field::from_fn(g, |a, _, t| a * t);
        let p = dir.join("f.bin");
        write_field(&f, &p).unwrap();
        assert_eq!(read_field(&p).unwrap(), f);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let g = ProductGrid::new(8, 8, 9, false).unwrap();
        let mut buf = Vec::new();
        write_csv(&Field::zeros(g), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), g.len() + 1);
        assert!(text.starts_with("x1,x2,t,value\n0,0,0,0\n"));
    }
}
