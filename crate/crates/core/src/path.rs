//! Vector-valued paths sampled on a uniform time grid.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A function `[t_0, t_0 + T] → R^d` known at `n + 1` equally spaced times.
///
/// Values are stored row-major: point `k` occupies `values[k*d..(k+1)*d]`.
/// Paths produced by sampling start at `t_0 = 0`; restricting a path with
/// [`GridPath::slice`] keeps absolute times, so the origin may be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    origin: f64,
    horizon: f64,
    steps: usize,
    dim: usize,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(horizon: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_origin(0.0, horizon, dim, values)
    }

    pub fn with_origin(origin: f64, horizon: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return invalid(format!("horizon must be positive and finite, got {horizon}"));
        }
        if !origin.is_finite() {
            return invalid("origin must be finite");
        }
        if dim == 0 {
            return invalid("path dimension must be positive");
        }
        if !values.len().is_multiple_of(dim) {
            return invalid(format!(
                "{} values do not split into points of dimension {dim}",
                values.len()
            ));
        }
        let points = values.len() / dim;
        if points < 2 {
            return invalid(format!("a path needs at least two grid points, got {points}"));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value at grid point {}", k / dim));
        }
        Ok(Self {
            origin,
            horizon,
            steps: points - 1,
            dim,
            values,
        })
    }

    /// Scalar path from its grid values.
    pub fn scalar(horizon: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(horizon, 1, values)
    }

    /// Samples `f` at `t_k = kT/n`; `f` writes the point into the provided slice.
    pub fn from_fn(
        horizon: f64,
        steps: usize,
        dim: usize,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        if steps == 0 {
            return invalid("grid must have at least one step");
        }
        let mut values = vec![0.0; (steps + 1) * dim];
        for (k, chunk) in values.chunks_exact_mut(dim.max(1)).enumerate() {
            f(horizon * k as f64 / steps as f64, chunk);
        }
        Self::new(horizon, dim, values)
    }

    pub fn from_scalar_fn(horizon: f64, steps: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(horizon, steps, 1, |t, out| out[0] = f(t))
    }

    pub fn constant(horizon: f64, steps: usize, point: &[f64]) -> Result<Self> {
        Self::from_fn(horizon, steps, point.len(), |_, out| out.copy_from_slice(point))
    }

    /// Stacks scalar components into one path; all must share the grid.
    pub fn from_components(horizon: f64, components: &[Vec<f64>]) -> Result<Self> {
        let dim = components.len();
        if dim == 0 {
            return invalid("no components");
        }
        let points = components[0].len();
        if components.iter().any(|c| c.len() != points) {
            return invalid("components have different lengths");
        }
        let mut values = Vec::with_capacity(points * dim);
        for k in 0..points {
            values.extend(components.iter().map(|c| c[k]));
        }
        Self::new(horizon, dim, values)
    }

    #[inline]
    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Length `T` of the time interval.
    #[inline]
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of grid intervals `n`.
    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Grid spacing `T / n`.
    #[inline]
    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Absolute time of grid point `k`.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.origin + self.horizon * k as f64 / self.steps as f64
    }

    pub fn end_time(&self) -> f64 {
        self.origin + self.horizon
    }

    #[inline]
    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn first(&self) -> &[f64] {
        self.point(0)
    }

    pub fn last(&self) -> &[f64] {
        self.point(self.steps)
    }

    /// Grid index of absolute time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.origin) / self.step();
        let k = x.round();
        if (x - k).abs() > 1e-9 * x.abs().max(1.0) || k < 0.0 || k > self.steps as f64 {
            return invalid(format!(
                "time {t} is not a grid point of [{}, {}] with {} steps",
                self.origin,
                self.end_time(),
                self.steps
            ));
        }
        Ok(k as usize)
    }

    pub fn component(&self, j: usize) -> Result<GridPath> {
        if j >= self.dim {
            return invalid(format!("component {j} out of range for dimension {}", self.dim));
        }
        let values = (0..self.len()).map(|k| self.point(k)[j]).collect();
        Self::with_origin(self.origin, self.horizon, 1, values)
    }

    pub fn component_values(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.point(k)[j]).collect()
    }

    /// Restriction to grid points `start..=end`, keeping absolute times.
    pub fn slice(&self, start: usize, end: usize) -> Result<GridPath> {
        if start >= end || end > self.steps {
            return invalid(format!("invalid slice {start}..={end} of a {}-step path", self.steps));
        }
        let values = self.values[start * self.dim..(end + 1) * self.dim].to_vec();
        let h = self.step();
        Ok(Self {
            origin: self.time(start),
            horizon: h * (end - start) as f64,
            steps: end - start,
            dim: self.dim,
            values,
        })
    }

    /// Time reversal `t ↦ f(t_0 + T - (t - t_0))`.
    pub fn reversed(&self) -> GridPath {
        let mut values = Vec::with_capacity(self.values.len());
        for k in (0..self.len()).rev() {
            values.extend_from_slice(self.point(k));
        }
        Self { values, ..self.clone() }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<GridPath> {
        Self::with_origin(
            self.origin,
            self.horizon,
            self.dim,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> GridPath {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn same_grid(&self, other: &GridPath) -> bool {
        self.steps == other.steps
            && (self.horizon - other.horizon).abs() <= 1e-12 * self.horizon
            && (self.origin - other.origin).abs() <= 1e-12 * self.horizon.max(self.origin.abs())
    }

    pub fn check_same_grid(&self, other: &GridPath) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            invalid(format!(
                "grid mismatch: [{}, {}]/{} vs [{}, {}]/{}",
                self.origin,
                self.end_time(),
                self.steps,
                other.origin,
                other.end_time(),
                other.steps
            ))
        }
    }

    fn zip_with(&self, other: &GridPath, f: impl Fn(f64, f64) -> f64) -> Result<GridPath> {
        self.check_same_grid(other)?;
        if self.dim != other.dim {
            return invalid(format!("dimension mismatch: {} vs {}", self.dim, other.dim));
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..self.clone()
        })
    }

    pub fn add(&self, other: &GridPath) -> Result<GridPath> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridPath) -> Result<GridPath> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Every `factor`-th grid point; the coarse grid spans the same interval.
    pub fn subsample(&self, factor: usize) -> Result<GridPath> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return invalid(format!("{factor} does not divide {} steps", self.steps));
        }
        let mut values = Vec::with_capacity((self.steps / factor + 1) * self.dim);
        for k in (0..=self.steps).step_by(factor) {
            values.extend_from_slice(self.point(k));
        }
        Self::with_origin(self.origin, self.horizon, self.dim, values)
    }

    /// Euclidean distance `|f(t_k) - f(t_l)|`.
    #[inline]
    pub fn distance(&self, k: usize, l: usize) -> f64 {
        if self.dim == 1 {
            return (self.values[k] - self.values[l]).abs();
        }
        let (a, b) = (self.point(k), self.point(l));
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[inline]
    pub fn norm_at(&self, k: usize) -> f64 {
        euclid(self.point(k))
    }

    /// CSV with header `t,x1,...,xd` and 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(self.dim + 1);
        for k in 0..self.len() {
            row.clear();
            row.push(format_f64(self.time(k)));
            row.extend(self.point(k).iter().map(|&v| format_f64(v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.get(0) != Some("t") || header.len() < 2 {
            return Err(Error::Parse("expected header `t,x1,...,xd`".into()));
        }
        let dim = header.len() - 1;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))
            };
            times.push(parse(&rec[0])?);
            for field in rec.iter().skip(1) {
                values.push(parse(field)?);
            }
        }
        if times.len() < 2 {
            return invalid("csv path needs at least two rows");
        }
        let origin = times[0];
        let horizon = times[times.len() - 1] - origin;
        let path = Self::with_origin(origin, horizon, dim, values)?;
        let tol = 1e-9 * path.step();
        for (k, &t) in times.iter().enumerate() {
            if (t - path.time(k)).abs() > tol.max(4.0 * f64::EPSILON * t.abs()) {
                return Err(Error::Parse(format!("row {k}: time {t} is not on a uniform grid")));
            }
        }
        Ok(path)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[inline]
pub(crate) fn euclid(v: &[f64]) -> f64 {
    if v.len() == 1 {
        v[0].abs()
    } else {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Full-precision float formatting (17 significant digits).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Hölder exponent `λ ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct HolderOrder(f64);

impl HolderOrder {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda <= 1.0 {
            Ok(Self(lambda))
        } else {
            crate::error::domain(format!("Hölder order must lie in (0, 1], got {lambda}"))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}
