//! Point clouds and the sample CSV format.
//!
//! The format is one point per row with comma-separated coordinates. A header
//! row is tolerated (skipped if it does not parse as numbers) and an optional
//! `# dim=d` comment pins the dimension.

use std::io::{BufRead, Write};

use crate::error::{GofError, Result};

/// A set of points in R^d stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    dim: usize,
    data: Vec<f64>,
}

impl Sample {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(GofError::InvalidParameter("sample dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(GofError::Data(format!(
                "{} values do not split into points of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(GofError::Empty("sample rows"))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            if row.len() != dim {
                return Err(GofError::DimensionMismatch { expected: dim, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    /// One-dimensional sample from scalars.
    pub fn from_scalars(xs: &[f64]) -> Self {
        Self { dim: 1, data: xs.to_vec() }
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, data: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(GofError::DimensionMismatch { expected: self.dim, got: point.len() });
        }
        self.data.extend_from_slice(point);
        Ok(())
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Sample) -> Result<Sample> {
        if self.dim != other.dim {
            return Err(GofError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Sample { dim: self.dim, data })
    }

    pub fn select(&self, idx: &[usize]) -> Sample {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.point(i));
        }
        Sample { dim: self.dim, data }
    }

    /// The first `k` points (all of them if `k >= len`).
    pub fn head(&self, k: usize) -> Sample {
        let k = k.min(self.len());
        Sample { dim: self.dim, data: self.data[..k * self.dim].to_vec() }
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Sample> {
        let mut declared_dim = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("dim=") {
                    let d = v.trim().parse::<usize>().map_err(|_| {
                        GofError::Data(format!("line {}: bad dim comment {trimmed:?}", lineno + 1))
                    })?;
                    declared_dim = Some(d);
                }
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                trimmed.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match parsed {
                Ok(row) => {
                    if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                        return Err(GofError::Data(format!(
                            "line {}: non-finite coordinate {bad}",
                            lineno + 1
                        )));
                    }
                    rows.push(row)
                }
                // a single non-numeric first row is a header
                Err(_) if rows.is_empty() && lineno == 0 => continue,
                Err(e) => {
                    return Err(GofError::Data(format!("line {}: {e}", lineno + 1)));
                }
            }
        }
        if rows.is_empty() {
            return Err(GofError::Data("no points in sample file".into()));
        }
        let sample = Sample::from_rows(&rows).map_err(|e| GofError::Data(e.to_string()))?;
        if let Some(d) = declared_dim {
            if d != sample.dim {
                return Err(GofError::Data(format!(
                    "declared dim={d} but rows have {} coordinates",
                    sample.dim
                )));
            }
        }
        Ok(sample)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# dim={}", self.dim)?;
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_header_and_dim_comment() {
        let text = "x,y\n# dim=2\n0.5,1.5\n-1,2e-3\n";
        let s = Sample::read_csv(text.as_bytes()).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.len(), 2);
        assert_eq!(s.point(1), &[-1.0, 2e-3]);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let err = Sample::read_csv("1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, GofError::Data(_)));
    }

    #[test]
    fn csv_rejects_dim_conflict() {
        assert!(Sample::read_csv("# dim=3\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = Sample::from_rows(&[vec![0.1, 1.0 / 3.0], vec![-2.5, 1e-300]]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(Sample::read_csv(buf.as_slice()).unwrap(), s);
    }
}
