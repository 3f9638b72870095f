//! Uniform sampled scalar fields on an interval or a rectangle, with the
//! JSON / CSV interchange formats.

use crate::error::{Error, Result};
use crate::geometry::Rect;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

/// Physical support of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Extent {
    Interval { a: f64, b: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

/// A scalar field sampled on the nodes of a uniform grid. Nodes include
/// both endpoints of each axis: spacing = extent / (shape - 1). 2D values
/// are row-major with the x index major: values[i * ny + j] = u(x_i, y_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub dim: usize,
    pub extent: Extent,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new_1d(a: f64, b: f64, values: Vec<f64>) -> Result<Self> {
        if b <= a {
            return Err(Error::Domain("empty interval".into()));
        }
        if values.len() < 2 {
            return Err(Error::Domain("need >= 2 samples".into()));
        }
        let g = GridFunction {
            dim: 1,
            extent: Extent::Interval { a, b },
            shape: vec![values.len()],
            values,
        };
        g.check_finite()?;
        Ok(g)
    }

    pub fn from_fn_1d(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = (b - a) / (n - 1) as f64;
        let values = (0..n).map(|i| f(a + i as f64 * h)).collect();
        Self::new_1d(a, b, values)
    }

    pub fn new_2d(rect: Rect, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if rect.width() <= 0.0 || rect.height() <= 0.0 {
            return Err(Error::Domain("empty rectangle".into()));
        }
        if values.len() != nx * ny {
            return Err(Error::Domain(format!(
                "value count {} != {}*{}",
                values.len(),
                nx,
                ny
            )));
        }
        let g = GridFunction {
            dim: 2,
            extent: Extent::Rect {
                x0: rect.x0,
                y0: rect.y0,
                x1: rect.x1,
                y1: rect.y1,
            },
            shape: vec![nx, ny],
            values,
        };
        g.check_finite()?;
        Ok(g)
    }

    pub fn from_fn_2d(rect: Rect, nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let hx = rect.width() / (nx - 1) as f64;
        let hy = rect.height() / (ny - 1) as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                values.push(f(rect.x0 + i as f64 * hx, rect.y0 + j as f64 * hy));
            }
        }
        Self::new_2d(rect, nx, ny, values)
    }

    fn check_finite(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("grid holds non-finite values".into()));
        }
        Ok(())
    }

    pub fn interval(&self) -> (f64, f64) {
        match self.extent {
            Extent::Interval { a, b } => (a, b),
            Extent::Rect { .. } => panic!("1d accessor on a 2d grid"),
        }
    }

    pub fn rect(&self) -> Rect {
        match self.extent {
            Extent::Rect { x0, y0, x1, y1 } => Rect::new(x0, y0, x1, y1),
            Extent::Interval { .. } => panic!("2d accessor on a 1d grid"),
        }
    }

    /// Grid spacing per axis.
    pub fn spacing(&self) -> Vec<f64> {
        match self.extent {
            Extent::Interval { a, b } => vec![(b - a) / (self.shape[0] - 1) as f64],
            Extent::Rect { x0, y0, x1, y1 } => vec![
                (x1 - x0) / (self.shape[0] - 1) as f64,
                (y1 - y0) / (self.shape[1] - 1) as f64,
            ],
        }
    }

    pub fn node_1d(&self, i: usize) -> f64 {
        let (a, _) = self.interval();
        a + i as f64 * self.spacing()[0]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.shape[1] + j]
    }

    /// Mean value (uniform node weights).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Discrete total variation (1D): sum of |u_{i+1} - u_i|.
    pub fn total_variation_1d(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// Inline JSON with the values embedded.
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer(BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path)?;
        let g: GridFunction = serde_json::from_str(&data)?;
        g.check_finite()?;
        Ok(g)
    }

    /// Split format: a JSON header next to a flat CSV of values
    /// (one value per line), for grids too large to inline.
    pub fn save_split(&self, header_path: &Path, csv_path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Header<'a> {
            dim: usize,
            extent: &'a Extent,
            shape: &'a [usize],
        }
        let f = std::fs::File::create(header_path)?;
        serde_json::to_writer(
            BufWriter::new(f),
            &Header {
                dim: self.dim,
                extent: &self.extent,
                shape: &self.shape,
            },
        )?;
        let mut w = BufWriter::new(std::fs::File::create(csv_path)?);
        writeln!(w, "value")?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn load_split(header_path: &Path, csv_path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            dim: usize,
            extent: Extent,
            shape: Vec<usize>,
        }
        let h: Header = serde_json::from_str(&std::fs::read_to_string(header_path)?)?;
        let file = std::fs::File::open(csv_path)?;
        let mut values = Vec::new();
        for (k, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (k == 0 && line.parse::<f64>().is_err()) {
                continue; // header row
            }
            values.push(
                line.parse::<f64>()
                    .map_err(|e| Error::Validation(format!("bad value line {k}: {e}")))?,
            );
        }
        let g = GridFunction {
            dim: h.dim,
            extent: h.extent,
            shape: h.shape,
            values,
        };
        if g.values.len() != g.shape.iter().product::<usize>() {
            return Err(Error::Validation("value count does not match shape".into()));
        }
        g.check_finite()?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_nodes() {
        let g = GridFunction::from_fn_1d(0.0, 1.0, 11, |x| x).unwrap();
        assert!((g.spacing()[0] - 0.1).abs() < 1e-15);
        assert!((g.node_1d(10) - 1.0).abs() < 1e-15);
        assert!((g.total_variation_1d() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonfinite() {
        assert!(GridFunction::new_1d(0.0, 1.0, vec![0.0, f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn row_major_layout() {
        let r = Rect::new(0.0, 0.0, 1.0, 2.0);
        let g = GridFunction::from_fn_2d(r, 3, 5, |x, y| 10.0 * x + y).unwrap();
        assert!((g.at(2, 4) - 12.0).abs() < 1e-12);
        assert!((g.at(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let dir = std::env::temp_dir().join("gamma_pm_grid_test");
        std::fs::create_dir_all(&dir).unwrap();
        let g = GridFunction::from_fn_1d(0.0, 2.0, 17, |x| x * x).unwrap();
        let p = dir.join("g.json");
        g.save_json(&p).unwrap();
        let back = GridFunction::load_json(&p).unwrap();
        assert_eq!(g, back);

        let hp = dir.join("g_header.json");
        let cp = dir.join("g_values.csv");
        g.save_split(&hp, &cp).unwrap();
        let back = GridFunction::load_split(&hp, &cp).unwrap();
        assert_eq!(g, back);
    }
}
