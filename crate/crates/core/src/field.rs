//! Grid functions on the polar mesh and their plain-text snapshot format.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

const SNAPSHOT_MAGIC: &str = "minkflow-field v1";

/// Scalar values on an `n_r × n_theta` mesh, stored row-major by radius
/// index, with an optional ghost row just outside the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    n_r: usize,
    n_theta: usize,
    values: Vec<f64>,
    ghost: Option<Vec<f64>>,
}

impl Field {
    pub fn zeros(n_r: usize, n_theta: usize) -> Self {
        Self {
            n_r,
            n_theta,
            values: vec![0.0; n_r * n_theta],
            ghost: None,
        }
    }

    pub fn from_values(n_r: usize, n_theta: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_r * n_theta {
            return Err(Error::ShapeMismatch {
                expected: (n_r, n_theta),
                found: (values.len() / n_theta.max(1), n_theta),
            });
        }
        Ok(Self {
            n_r,
            n_theta,
            values,
            ghost: None,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_r, self.n_theta)
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    #[inline]
    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.n_theta + k]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        self.values[j * self.n_theta + k] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_theta..(j + 1) * self.n_theta]
    }

    pub fn ghost(&self) -> Option<&[f64]> {
        self.ghost.as_deref()
    }

    pub fn set_ghost(&mut self, ghost: Vec<f64>) {
        assert_eq!(ghost.len(), self.n_theta, "ghost row length");
        self.ghost = Some(ghost);
    }

    pub fn clear_ghost(&mut self) {
        self.ghost = None;
    }

    /// Mutable access to the ghost row, creating a zero row if absent.
    pub fn ghost_mut(&mut self) -> &mut [f64] {
        let n = self.n_theta;
        self.ghost.get_or_insert_with(|| vec![0.0; n])
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First non-finite interior node, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| (i / self.n_theta, i % self.n_theta))
    }

    /// `max |self - other|` over interior nodes.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Writes the interior values with 17 significant digits.
    pub fn write_snapshot<W: Write>(&self, mut w: W, t: f64) -> std::io::Result<()> {
        writeln!(
            w,
            "{SNAPSHOT_MAGIC} n_r={} n_theta={} t={t:e}",
            self.n_r, self.n_theta
        )?;
        let mut line = String::new();
        for j in 0..self.n_r {
            line.clear();
            for (k, v) in self.row(j).iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Parses a snapshot written by [`Field::write_snapshot`], returning the
    /// field (without ghost row) and its time stamp.
    pub fn read_snapshot<R: BufRead>(r: R) -> Result<(Field, f64)> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Snapshot("empty input".into()))?
            .map_err(|e| Error::Snapshot(e.to_string()))?;
        let rest = header
            .strip_prefix(SNAPSHOT_MAGIC)
            .ok_or_else(|| Error::Snapshot(format!("bad header: {header}")))?;
        let mut n_r = None;
        let mut n_theta = None;
        let mut t = None;
        for item in rest.split_whitespace() {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Snapshot(format!("bad header item: {item}")))?;
            let bad = |_| Error::Snapshot(format!("bad value for {key}: {value}"));
            match key {
                "n_r" => n_r = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "n_theta" => {
                    n_theta = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?)
                }
                "t" => t = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                _ => return Err(Error::Snapshot(format!("unknown header key {key}"))),
            }
        }
        let (n_r, n_theta, t) = match (n_r, n_theta, t) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(Error::Snapshot("header missing n_r, n_theta or t".into())),
        };
        let mut values = Vec::with_capacity(n_r * n_theta);
        for (j, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Snapshot(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let before = values.len();
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::Snapshot(format!("row {j}: bad number {tok}")))?,
                );
            }
            if values.len() - before != n_theta {
                return Err(Error::Snapshot(format!(
                    "row {j}: expected {n_theta} values, found {}",
                    values.len() - before
                )));
            }
        }
        Ok((Field::from_values(n_r, n_theta, values)?, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_format() {
        let f = Field::zeros(2, 3);
        let mut buf = Vec::new();
        f.write_snapshot(&mut buf, 0.5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("minkflow-field v1 n_r=2 n_theta=3 t=5e-1\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn rejects_ragged_rows() {
        let text = "minkflow-field v1 n_r=2 n_theta=2 t=0e0\n1 2\n3\n";
        assert!(Field::read_snapshot(text.as_bytes()).is_err());
        assert!(Field::read_snapshot("garbage\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn snapshot_round_trip(vals in proptest::collection::vec(-1e3..1e3f64, 12), t in 0.0..100.0f64) {
            let f = Field::from_values(3, 4, vals).unwrap();
            let mut buf = Vec::new();
            f.write_snapshot(&mut buf, t).unwrap();
            let (g, t2) = Field::read_snapshot(buf.as_slice()).unwrap();
            prop_assert_eq!(t, t2);
            prop_assert!(f.max_abs_diff(&g) <= 1e-13 * f.sup_abs().max(1.0));
        }
    }
}
