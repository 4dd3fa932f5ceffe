//! Points, metrics, loss functions and pairwise/set-to-set distances.
//!
//! Everything here is pure and safe to call from any number of threads.

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in d-dimensional real space, d >= 1, all coordinates finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptySet("point coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        Ok(Self { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// A nonempty sample of points sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Point>,
    dim: usize,
}

impl Dataset {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::EmptySet("dataset"));
        };
        let dim = first.dim();
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: p.dim(),
                });
            }
        }
        Ok(Self { points, dim })
    }

    /// 1-d convenience constructor.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&v| Point::new(vec![v]))
                .collect::<Result<_>>()?,
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        self.points[i].coords()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Reads one point per row from CSV text. A single non-numeric first row
    /// is treated as a header and skipped.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(reader);
        let mut points = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Malformed(format!("csv: {e}")))?;
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(coords) => points.push(Point::new(coords)?),
                Err(_) if row == 0 => continue, // header row
                Err(_) => {
                    return Err(Error::Malformed(format!(
                        "row {} contains a non-numeric field",
                        row + 1
                    )))
                }
            }
        }
        Self::new(points)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }
}

/// Base metric on R^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L1,
    L2,
    #[serde(rename = "linf")]
    LInf,
}

impl Metric {
    /// Distance between two coordinate slices of equal length.
    pub(crate) fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::LInf => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::LInf => "linf",
        })
    }
}

/// Distance between two points under `metric`.
pub fn distance(metric: Metric, x: &Point, y: &Point) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: y.dim(),
        });
    }
    Ok(metric.eval(x.coords(), y.coords()))
}

/// Loss transform applied to distances: non-decreasing, continuous, zero only
/// at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    #[serde(rename = "id")]
    Identity,
    Sqrt,
    Square,
}

impl Loss {
    pub(crate) fn eval(self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            Loss::Identity => t,
            Loss::Sqrt => t.sqrt(),
            Loss::Square => t * t,
        }
    }

    /// Checked transform; errors on negative input.
    pub fn apply(self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::NegativeLossInput(t));
        }
        Ok(self.eval(t))
    }

    /// Exact modulus of continuity on `[0, diameter]`: the supremum of
    /// `|phi(s) - phi(t)|` over `|s - t| <= h` within the interval.
    pub fn modulus(self, h: f64, diameter: f64) -> f64 {
        let h = h.clamp(0.0, diameter);
        match self {
            Loss::Identity => h,
            Loss::Sqrt => h.sqrt(),
            Loss::Square => h * (2.0 * diameter - h),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Identity => "id",
            Loss::Sqrt => "sqrt",
            Loss::Square => "square",
        })
    }
}

/// Checked loss application, `phi(t)`.
pub fn loss_apply(loss: Loss, t: f64) -> Result<f64> {
    loss.apply(t)
}

/// Symmetric n x n matrix of pairwise dissimilarities with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validating constructor for externally supplied entries (row-major).
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySet("distance matrix"));
        }
        if entries.len() != n * n {
            return Err(Error::Malformed(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::Malformed(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let d = entries[i * n + j];
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(Error::Malformed(format!("invalid entry at ({i},{j})")));
                }
                if d != entries[j * n + i] {
                    return Err(Error::Malformed(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Row `i` as a slice of length n.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Applies a monotone transform entrywise. The caller is responsible for
    /// the transform being strictly increasing with t(0) = 0, so that the
    /// result is still a dissimilarity matrix.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|&d| f(d)).collect(),
        }
    }

    /// Largest entry.
    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// All pairwise distances of a dataset.
pub fn pairwise_matrix(data: &Dataset, metric: Metric) -> DistanceMatrix {
    let n = data.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = metric.eval(data.coords(i), data.coords(j));
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    DistanceMatrix { n, entries }
}

/// Directed Hausdorff distance `H(A|B) = sup_{a in A} inf_{b in B} d(a, b)`.
///
/// Zero exactly when every point of `A` occurs in `B`; not symmetric.
pub fn directed_hausdorff(a: &[Point], b: &[Point], metric: Metric) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptySet("first point set"));
    }
    if b.is_empty() {
        return Err(Error::EmptySet("second point set"));
    }
    let dim = a[0].dim();
    for p in a.iter().chain(b) {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.dim(),
            });
        }
    }
    let mut sup = 0.0f64;
    for p in a {
        let nearest = b
            .iter()
            .map(|q| metric.eval(p.coords(), q.coords()))
            .fold(f64::INFINITY, f64::min);
        sup = sup.max(nearest);
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> Point {
        Point::from_slice(coords).unwrap()
    }

    #[test]
    fn distances_on_hand_examples() {
        let a = pt(&[0.0, 0.0]);
        let b = pt(&[1.0, 1.0]);
        assert_eq!(distance(Metric::L1, &a, &b).unwrap(), 2.0);
        assert_eq!(distance(Metric::LInf, &a, &b).unwrap(), 1.0);
        let c = pt(&[3.0, 4.0]);
        assert_eq!(distance(Metric::L2, &a, &c).unwrap(), 5.0);
    }

    #[test]
    fn distance_rejects_dimension_mismatch() {
        let a = pt(&[0.0]);
        let b = pt(&[0.0, 1.0]);
        assert!(matches!(
            distance(Metric::L2, &a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn loss_values() {
        assert_eq!(loss_apply(Loss::Identity, 2.0).unwrap(), 2.0);
        assert_eq!(loss_apply(Loss::Square, 3.0).unwrap(), 9.0);
        assert_eq!(loss_apply(Loss::Sqrt, 4.0).unwrap(), 2.0);
        assert!(matches!(
            loss_apply(Loss::Identity, -0.5),
            Err(Error::NegativeLossInput(_))
        ));
    }

    #[test]
    fn pairwise_hand_example() {
        let data = Dataset::from_values(&[0.0, 1.0, 3.0]).unwrap();
        let m = pairwise_matrix(&data, Metric::L1);
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(1, 2), 2.0);
        assert_eq!(m.get(2, 1), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn pairwise_single_and_duplicate_points() {
        let single = Dataset::from_values(&[4.2]).unwrap();
        let m = pairwise_matrix(&single, Metric::L2);
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 0.0);

        let dup = Dataset::from_values(&[1.0, 1.0]).unwrap();
        let m = pairwise_matrix(&dup, Metric::L2);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn hausdorff_hand_examples() {
        let a = vec![pt(&[0.0]), pt(&[5.0])];
        let b = vec![pt(&[1.0])];
        assert_eq!(directed_hausdorff(&a, &a, Metric::L1).unwrap(), 0.0);
        assert_eq!(directed_hausdorff(&b, &a, Metric::L1).unwrap(), 1.0);
        assert_eq!(directed_hausdorff(&a, &b, Metric::L1).unwrap(), 4.0);
        // A subset of B
        let sub = vec![pt(&[0.0])];
        assert_eq!(directed_hausdorff(&sub, &a, Metric::L1).unwrap(), 0.0);
        assert!(matches!(
            directed_hausdorff(&[], &a, Metric::L1),
            Err(Error::EmptySet(_))
        ));
    }

    #[test]
    fn point_and_dataset_validation() {
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(vec![]).is_err());
        assert!(Dataset::new(vec![]).is_err());
        assert!(Dataset::new(vec![pt(&[1.0]), pt(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn csv_header_autodetected() {
        let with_header = "x,y\n0.0,0.0\n1.5,2.0\n";
        let d = Dataset::from_csv_reader(with_header.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.coords(1), &[1.5, 2.0]);

        let without = "0.0,0.0\n1.5,2.0\n";
        let d = Dataset::from_csv_reader(without.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);

        let bad = "0.0,0.0\noops,2.0\n";
        assert!(Dataset::from_csv_reader(bad.as_bytes()).is_err());
    }

    #[test]
    fn distance_matrix_validation() {
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![0.5, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
    }
}
