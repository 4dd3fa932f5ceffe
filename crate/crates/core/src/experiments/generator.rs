//! Synthetic data generators with deterministic seeded sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::SupportSpec;
use crate::space::{Dataset, Point};

/// One isotropic Gaussian mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: f64,
}

/// A sampling distribution: isotropic Gaussian mixture or the uniform
/// distribution over a union of axis-aligned boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    GaussianMixture {
        dimension: usize,
        components: Vec<MixtureComponent>,
    },
    UniformBoxUnion {
        dimension: usize,
        /// Per box, one closed `(low, high)` interval per dimension.
        boxes: Vec<Vec<(f64, f64)>>,
    },
}

impl GeneratorSpec {
    pub fn two_gaussians(separation_center: f64, variance: f64) -> Self {
        GeneratorSpec::GaussianMixture {
            dimension: 2,
            components: vec![
                MixtureComponent {
                    weight: 0.5,
                    mean: vec![-separation_center, 0.0],
                    variance,
                },
                MixtureComponent {
                    weight: 0.5,
                    mean: vec![separation_center, 0.0],
                    variance,
                },
            ],
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            GeneratorSpec::GaussianMixture { dimension, .. } => *dimension,
            GeneratorSpec::UniformBoxUnion { dimension, .. } => *dimension,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension() == 0 {
            return Err(Error::InvalidGenerator("dimension must be >= 1".into()));
        }
        match self {
            GeneratorSpec::GaussianMixture {
                dimension,
                components,
            } => {
                if components.is_empty() {
                    return Err(Error::InvalidGenerator("no mixture components".into()));
                }
                let mut total = 0.0;
                for c in components {
                    if !(c.weight > 0.0) || !c.weight.is_finite() {
                        return Err(Error::InvalidGenerator(format!(
                            "component weight {} must be positive",
                            c.weight
                        )));
                    }
                    if !(c.variance > 0.0) || !c.variance.is_finite() {
                        return Err(Error::InvalidGenerator(format!(
                            "component variance {} must be positive",
                            c.variance
                        )));
                    }
                    if c.mean.len() != *dimension {
                        return Err(Error::InvalidGenerator(format!(
                            "mean has dimension {}, expected {dimension}",
                            c.mean.len()
                        )));
                    }
                    if c.mean.iter().any(|m| !m.is_finite()) {
                        return Err(Error::InvalidGenerator("non-finite mean".into()));
                    }
                    total += c.weight;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidGenerator(format!(
                        "weights sum to {total}, expected 1"
                    )));
                }
            }
            GeneratorSpec::UniformBoxUnion { dimension, boxes } => {
                if boxes.is_empty() {
                    return Err(Error::InvalidGenerator("no boxes".into()));
                }
                for b in boxes {
                    if b.len() != *dimension {
                        return Err(Error::InvalidGenerator(format!(
                            "box has dimension {}, expected {dimension}",
                            b.len()
                        )));
                    }
                    for &(lo, hi) in b {
                        if !lo.is_finite() || !hi.is_finite() || lo > hi {
                            return Err(Error::InvalidGenerator(format!(
                                "invalid interval [{lo}, {hi}]"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The support as a box union, when it is one. Gaussian mixtures are
    /// supported on the whole space.
    pub fn support(&self) -> SupportSpec {
        match self {
            GeneratorSpec::GaussianMixture { .. } => SupportSpec::Unrestricted,
            GeneratorSpec::UniformBoxUnion { boxes, .. } => SupportSpec::BoxUnion(boxes.clone()),
        }
    }

    /// Ground-truth centers: component means, or box midpoints.
    pub fn true_centers(&self) -> Vec<Point> {
        match self {
            GeneratorSpec::GaussianMixture { components, .. } => components
                .iter()
                .map(|c| Point::new(c.mean.clone()).expect("validated mean"))
                .collect(),
            GeneratorSpec::UniformBoxUnion { boxes, .. } => boxes
                .iter()
                .map(|b| {
                    Point::new(b.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect())
                        .expect("validated box")
                })
                .collect(),
        }
    }

    /// Component selection weights: mixture weights, or box volumes (equal
    /// weights when every box is degenerate).
    fn component_weights(&self) -> Vec<f64> {
        match self {
            GeneratorSpec::GaussianMixture { components, .. } => {
                components.iter().map(|c| c.weight).collect()
            }
            GeneratorSpec::UniformBoxUnion { boxes, .. } => {
                let volumes: Vec<f64> = boxes
                    .iter()
                    .map(|b| b.iter().map(|&(lo, hi)| hi - lo).product())
                    .collect();
                let total: f64 = volumes.iter().sum();
                if total > 0.0 {
                    volumes.iter().map(|v| v / total).collect()
                } else {
                    vec![1.0 / boxes.len() as f64; boxes.len()]
                }
            }
        }
    }

    /// One draw; returns coordinates and the component index used.
    pub(crate) fn draw<R: Rng>(&self, weights: &[f64], rng: &mut R) -> (Vec<f64>, usize) {
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        let mut comp = weights.len() - 1;
        for (c, w) in weights.iter().enumerate() {
            cum += w;
            if u < cum {
                comp = c;
                break;
            }
        }
        let coords = match self {
            GeneratorSpec::GaussianMixture { components, .. } => {
                let c = &components[comp];
                let normal = Normal::new(0.0, c.variance.sqrt()).expect("positive sd");
                c.mean
                    .iter()
                    .map(|&m| m + normal.sample(rng))
                    .collect()
            }
            GeneratorSpec::UniformBoxUnion { boxes, .. } => boxes[comp]
                .iter()
                .map(|&(lo, hi)| {
                    if hi > lo {
                        lo + rng.gen::<f64>() * (hi - lo)
                    } else {
                        lo
                    }
                })
                .collect(),
        };
        (coords, comp)
    }

    /// `n` iid draws plus their component labels; deterministic given `seed`.
    pub fn sample_labeled(&self, n: usize, seed: u64) -> Result<(Dataset, Vec<usize>)> {
        self.validate()?;
        if n == 0 {
            return Err(Error::EmptySet("sample"));
        }
        let weights = self.component_weights();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let (coords, comp) = self.draw(&weights, &mut rng);
            points.push(Point::new(coords)?);
            labels.push(comp);
        }
        Ok((Dataset::new(points)?, labels))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        Ok(self.sample_labeled(n, seed)?.0)
    }

    /// Streaming draws for Monte Carlo estimators.
    pub(crate) fn stream<'a, R: Rng>(&'a self, rng: &'a mut R) -> GeneratorStream<'a, R> {
        GeneratorStream {
            spec: self,
            weights: self.component_weights(),
            rng,
        }
    }
}

pub(crate) struct GeneratorStream<'a, R: Rng> {
    spec: &'a GeneratorSpec,
    weights: Vec<f64>,
    rng: &'a mut R,
}

impl<R: Rng> GeneratorStream<'_, R> {
    pub(crate) fn next_coords(&mut self) -> Vec<f64> {
        self.spec.draw(&self.weights, self.rng).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1_like() -> GeneratorSpec {
        GeneratorSpec::two_gaussians(0.5, 0.1)
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = table1_like();
        let a = g.sample(100, 7).unwrap();
        let b = g.sample(100, 7).unwrap();
        assert_eq!(a, b);
        let c = g.sample(100, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn near_point_mass_draw_is_at_the_mean() {
        let g = GeneratorSpec::GaussianMixture {
            dimension: 2,
            components: vec![MixtureComponent {
                weight: 1.0,
                mean: vec![0.25, -1.0],
                variance: 1e-12,
            }],
        };
        let d = g.sample(1, 3).unwrap();
        assert!((d.coords(0)[0] - 0.25).abs() < 1e-4);
        assert!((d.coords(0)[1] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn mixture_empirical_mean_near_zero() {
        let g = table1_like();
        let d = g.sample(2000, 11).unwrap();
        for c in 0..2 {
            let mean: f64 = (0..d.len()).map(|i| d.coords(i)[c]).sum::<f64>() / d.len() as f64;
            assert!(mean.abs() < 0.06, "coordinate {c} mean {mean}");
        }
    }

    #[test]
    fn labels_follow_components() {
        let g = GeneratorSpec::UniformBoxUnion {
            dimension: 1,
            boxes: vec![vec![(-2.0, -1.0)], vec![(1.0, 2.0)]],
        };
        let (d, labels) = g.sample_labeled(500, 5).unwrap();
        for i in 0..d.len() {
            let x = d.coords(i)[0];
            assert_eq!(labels[i], usize::from(x >= 0.0));
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad_weights = GeneratorSpec::GaussianMixture {
            dimension: 1,
            components: vec![MixtureComponent {
                weight: 0.7,
                mean: vec![0.0],
                variance: 1.0,
            }],
        };
        assert!(bad_weights.sample(10, 0).is_err());

        let bad_box = GeneratorSpec::UniformBoxUnion {
            dimension: 1,
            boxes: vec![vec![(2.0, 1.0)]],
        };
        assert!(bad_box.sample(10, 0).is_err());
    }
}
