//! Empirical and population clustering risks.
//!
//! The population risk is always estimated by Monte Carlo on a fresh sample;
//! the standard error of the estimate is reported alongside the value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experiments::GeneratorSpec;
use crate::space::{directed_hausdorff, Dataset, Loss, Metric, Point};

/// A set of k cluster centers: either medoid indices into a dataset or free
/// points.
#[derive(Debug, Clone, PartialEq)]
pub enum CenterSet {
    Medoids(Vec<usize>),
    Free(Vec<Point>),
}

impl CenterSet {
    pub fn medoids(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySet("centers"));
        }
        let mut seen = indices.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCenters("duplicate medoid index".into()));
        }
        Ok(CenterSet::Medoids(indices))
    }

    pub fn free(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet("centers"));
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::InvalidCenters("mixed dimensions".into()));
        }
        Ok(CenterSet::Free(points))
    }

    pub fn k(&self) -> usize {
        match self {
            CenterSet::Medoids(m) => m.len(),
            CenterSet::Free(p) => p.len(),
        }
    }

    /// Materializes the centers as points, resolving medoid indices against
    /// `data`.
    pub fn resolve(&self, data: &Dataset) -> Result<Vec<Point>> {
        match self {
            CenterSet::Medoids(indices) => indices
                .iter()
                .map(|&i| {
                    if i < data.len() {
                        Ok(data.point(i).clone())
                    } else {
                        Err(Error::InvalidCenters(format!(
                            "medoid index {i} out of range for n = {}",
                            data.len()
                        )))
                    }
                })
                .collect(),
            CenterSet::Free(points) => {
                if points[0].dim() != data.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: data.dim(),
                        actual: points[0].dim(),
                    });
                }
                Ok(points.clone())
            }
        }
    }
}

/// A Monte Carlo estimate of a population quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples_used: usize,
}

fn min_transformed_distance(coords: &[f64], centers: &[Point], metric: Metric, loss: Loss) -> f64 {
    let mut best = f64::INFINITY;
    for c in centers {
        let d = metric.eval(coords, c.coords());
        if d < best {
            best = d;
        }
    }
    loss.eval(best)
}

/// Empirical risk `L(A, Q_n)`: the sample average of the minimum transformed
/// distance to the center set.
pub fn empirical_risk(
    centers: &CenterSet,
    data: &Dataset,
    metric: Metric,
    loss: Loss,
) -> Result<f64> {
    let pts = centers.resolve(data)?;
    if pts[0].dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            actual: pts[0].dim(),
        });
    }
    let sum: f64 = (0..data.len())
        .map(|i| min_transformed_distance(data.coords(i), &pts, metric, loss))
        .sum();
    Ok(sum / data.len() as f64)
}

/// Monte Carlo estimate of the population risk `L(A, Q)` from `m` fresh draws
/// of the sampler. Deterministic given `seed`.
pub fn population_risk_mc(
    centers: &[Point],
    sampler: &GeneratorSpec,
    metric: Metric,
    loss: Loss,
    m: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    if centers.is_empty() {
        return Err(Error::EmptySet("centers"));
    }
    if m < 100 {
        return Err(Error::TooFewSamples { needed: 100, got: m });
    }
    sampler.validate()?;
    if centers[0].dim() != sampler.dimension() {
        return Err(Error::DimensionMismatch {
            expected: sampler.dimension(),
            actual: centers[0].dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stream = sampler.stream(&mut rng);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..m {
        let coords = stream.next_coords();
        let v = min_transformed_distance(&coords, centers, metric, loss);
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / m as f64;
    let var = ((sum_sq - sum * sum / m as f64) / (m as f64 - 1.0)).max(0.0);
    Ok(RiskEstimate {
        value: mean,
        stderr: (var / m as f64).sqrt(),
        samples_used: m,
    })
}

/// Directed Hausdorff distance from the reference points to the data points:
/// how well the sample covers the reference.
pub fn covering_radius(data: &Dataset, reference: &Dataset, metric: Metric) -> Result<f64> {
    directed_hausdorff(reference.points(), data.points(), metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::GeneratorSpec;

    #[test]
    fn empirical_risk_hand_examples() {
        let data = Dataset::from_values(&[0.0, 2.0]).unwrap();
        let a = CenterSet::medoids(vec![0]).unwrap();
        assert_eq!(
            empirical_risk(&a, &data, Metric::L1, Loss::Identity).unwrap(),
            1.0
        );

        let data = Dataset::from_values(&[0.0, 1.0, 3.0]).unwrap();
        let a = CenterSet::medoids(vec![0, 2]).unwrap();
        let r = empirical_risk(&a, &data, Metric::L1, Loss::Identity).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-15);

        // all points as medoids: zero risk under any loss
        let all = CenterSet::medoids(vec![0, 1, 2]).unwrap();
        for loss in [Loss::Identity, Loss::Sqrt, Loss::Square] {
            assert_eq!(empirical_risk(&all, &data, Metric::L2, loss).unwrap(), 0.0);
        }
    }

    #[test]
    fn center_set_validation() {
        assert!(CenterSet::medoids(vec![]).is_err());
        assert!(CenterSet::medoids(vec![1, 1]).is_err());
        let data = Dataset::from_values(&[0.0, 1.0]).unwrap();
        let out_of_range = CenterSet::Medoids(vec![5]);
        assert!(empirical_risk(&out_of_range, &data, Metric::L1, Loss::Identity).is_err());
    }

    #[test]
    fn population_risk_on_point_mass_is_zero() {
        let gen = GeneratorSpec::UniformBoxUnion {
            dimension: 1,
            boxes: vec![vec![(0.5, 0.5)]],
        };
        let centers = vec![Point::from_slice(&[0.5]).unwrap()];
        let est =
            population_risk_mc(&centers, &gen, Metric::L1, Loss::Identity, 500, 1).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.samples_used, 500);
    }

    #[test]
    fn population_risk_matches_analytic_integrals() {
        let gen = GeneratorSpec::UniformBoxUnion {
            dimension: 1,
            boxes: vec![vec![(0.0, 1.0)]],
        };
        let centers = vec![Point::from_slice(&[0.5]).unwrap()];
        // E|X - 0.5| = 1/4
        let est =
            population_risk_mc(&centers, &gen, Metric::L1, Loss::Identity, 200_000, 9).unwrap();
        assert!((est.value - 0.25).abs() <= 3.0 * est.stderr);
        // E(X - 0.5)^2 = 1/12
        let est =
            population_risk_mc(&centers, &gen, Metric::L2, Loss::Square, 200_000, 9).unwrap();
        assert!((est.value - 1.0 / 12.0).abs() <= 3.0 * est.stderr);
    }

    #[test]
    fn population_risk_rejects_small_m_and_bad_sampler() {
        let gen = GeneratorSpec::UniformBoxUnion {
            dimension: 1,
            boxes: vec![vec![(0.0, 1.0)]],
        };
        let centers = vec![Point::from_slice(&[0.5]).unwrap()];
        assert!(population_risk_mc(&centers, &gen, Metric::L1, Loss::Identity, 99, 0).is_err());
        let bad = GeneratorSpec::UniformBoxUnion {
            dimension: 1,
            boxes: vec![],
        };
        assert!(population_risk_mc(&centers, &bad, Metric::L1, Loss::Identity, 1000, 0).is_err());
    }

    #[test]
    fn covering_radius_hand_examples() {
        let data = Dataset::from_values(&[0.0, 10.0]).unwrap();
        let reference = Dataset::from_values(&[5.0]).unwrap();
        assert_eq!(covering_radius(&data, &reference, Metric::L1).unwrap(), 5.0);
        assert_eq!(covering_radius(&data, &data, Metric::L1).unwrap(), 0.0);

        let grid = Dataset::from_values(&(0..=10).map(f64::from).collect::<Vec<_>>()).unwrap();
        let reference = Dataset::from_values(&[0.5]).unwrap();
        assert_eq!(covering_radius(&grid, &reference, Metric::L1).unwrap(), 0.5);
    }
}
