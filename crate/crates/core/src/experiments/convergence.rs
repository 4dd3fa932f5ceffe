//! Convergence diagnostics across sample sizes: the population-risk gap
//! between k-medoids and support-restricted k-means, the uniform-convergence
//! error of the empirical risk over fixed center sets, and the covering
//! radius of the sample.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::GeneratorSpec;
use crate::risk::{covering_radius, empirical_risk, population_risk_mc, CenterSet};
use crate::seeding::{derive, mix64};
use crate::solvers::{generalized_kmeans, multi_start, Objective};
use crate::space::{pairwise_matrix, Loss, Metric, Point};

const DIAGNOSTIC_TUPLES: usize = 100;
const REFERENCE_POINTS: usize = 2500;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub generator: GeneratorSpec,
    pub metric: Metric,
    pub loss: Loss,
    pub k: usize,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    /// Monte Carlo sample size for every population-risk estimate.
    pub mc_samples: usize,
    pub starts: usize,
}

/// Per-sample-size medians over the replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub gap_median: f64,
    pub gap_stderr_sum_median: f64,
    pub sup_risk_err_median: f64,
    pub covering_radius_median: f64,
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

struct RepOutcome {
    gap: f64,
    stderr_sum: f64,
    sup_err: f64,
    covering: f64,
}

/// Runs the study. For each n and replication the k-medoids solution and a
/// restricted k-means refinement of it are compared by their Monte Carlo
/// population risks (common random numbers), the empirical risks of 100 fixed
/// random k-tuples are compared against their cached population risks, and
/// the covering radius is measured against a fixed reference sample.
pub fn convergence_study(config: &ConvergenceConfig) -> Result<Vec<ConvergenceRow>> {
    config.generator.validate()?;
    if config.k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    if config.replications == 0 {
        return Err(Error::InvalidConfig("replications must be >= 1".into()));
    }
    if config.n_grid.is_empty() {
        return Err(Error::InvalidConfig("empty n grid".into()));
    }
    if config.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("n grid must be increasing".into()));
    }
    if config.n_grid[0] < config.k {
        return Err(Error::InvalidConfig("grid entries must be >= k".into()));
    }
    if config.mc_samples < 100 {
        return Err(Error::TooFewSamples {
            needed: 100,
            got: config.mc_samples,
        });
    }
    if config.starts == 0 {
        return Err(Error::InvalidConfig("starts must be >= 1".into()));
    }

    let support = config.generator.support();

    // fixed random k-tuples with cached population risks
    let tuples: Vec<Vec<Point>> = (0..DIAGNOSTIC_TUPLES)
        .map(|j| {
            Ok(config
                .generator
                .sample(config.k, derive(config.base_seed, 0x9000 + j as u64))?
                .points()
                .to_vec())
        })
        .collect::<Result<_>>()?;
    let tuple_risks: Vec<f64> = tuples
        .par_iter()
        .enumerate()
        .map(|(j, centers)| {
            population_risk_mc(
                centers,
                &config.generator,
                config.metric,
                config.loss,
                config.mc_samples,
                derive(config.base_seed, 0xa000 + j as u64),
            )
            .map(|e| e.value)
        })
        .collect::<Result<_>>()?;

    let reference = config
        .generator
        .sample(REFERENCE_POINTS, derive(config.base_seed, 0xb000))?;

    let mut rows = Vec::with_capacity(config.n_grid.len());
    for (n_idx, &n) in config.n_grid.iter().enumerate() {
        let outcomes: Vec<RepOutcome> = (0..config.replications)
            .into_par_iter()
            .map(|rep| -> Result<RepOutcome> {
                let rep_seed = mix64(
                    config.base_seed ^ (0xc000 + (n_idx * config.replications + rep) as u64),
                );
                let data = config.generator.sample(n, derive(rep_seed, 0))?;

                let dmat = pairwise_matrix(&data, config.metric);
                let obj = Objective::metric(&dmat, config.loss);
                let medoid_sol = multi_start(&obj, config.k, config.starts, derive(rep_seed, 1))?;
                let medoid_points = medoid_sol.centers.resolve(&data)?;

                let kmeans_sol = generalized_kmeans(
                    &data,
                    config.metric,
                    config.loss,
                    config.k,
                    &support,
                    &medoid_points,
                    100,
                    1e-9,
                )?;
                let kmeans_points = match &kmeans_sol.centers {
                    CenterSet::Free(points) => points.clone(),
                    CenterSet::Medoids(_) => unreachable!("k-means returns free centers"),
                };

                // common random numbers: the same MC sample scores both sets
                let pop_seed = derive(rep_seed, 2);
                let pop_medoid = population_risk_mc(
                    &medoid_points,
                    &config.generator,
                    config.metric,
                    config.loss,
                    config.mc_samples,
                    pop_seed,
                )?;
                let pop_kmeans = population_risk_mc(
                    &kmeans_points,
                    &config.generator,
                    config.metric,
                    config.loss,
                    config.mc_samples,
                    pop_seed,
                )?;

                let mut sup_err = 0.0f64;
                for (centers, &pop) in tuples.iter().zip(&tuple_risks) {
                    let emp = empirical_risk(
                        &CenterSet::Free(centers.clone()),
                        &data,
                        config.metric,
                        config.loss,
                    )?;
                    sup_err = sup_err.max((emp - pop).abs());
                }

                let covering = covering_radius(&data, &reference, config.metric)?;

                Ok(RepOutcome {
                    gap: pop_medoid.value - pop_kmeans.value,
                    stderr_sum: pop_medoid.stderr + pop_kmeans.stderr,
                    sup_err,
                    covering,
                })
            })
            .collect::<Result<_>>()?;

        rows.push(ConvergenceRow {
            n,
            gap_median: median(outcomes.iter().map(|o| o.gap).collect()),
            gap_stderr_sum_median: median(outcomes.iter().map(|o| o.stderr_sum).collect()),
            sup_risk_err_median: median(outcomes.iter().map(|o| o.sup_err).collect()),
            covering_radius_median: median(outcomes.iter().map(|o| o.covering).collect()),
        });
    }
    Ok(rows)
}

pub fn convergence_to_csv(rows: &[ConvergenceRow]) -> String {
    let mut out =
        String::from("n,gap_median,gap_mc_stderr_sum_median,sup_risk_err_median,covering_radius_median\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n, r.gap_median, r.gap_stderr_sum_median, r.sup_risk_err_median, r.covering_radius_median
        )
        .expect("writing to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study_runs_on_a_tiny_grid() {
        let config = ConvergenceConfig {
            generator: GeneratorSpec::two_gaussians(0.5, 0.1),
            metric: Metric::L2,
            loss: Loss::Square,
            k: 2,
            n_grid: vec![40, 80],
            replications: 2,
            base_seed: 5,
            mc_samples: 2000,
            starts: 3,
        };
        let rows = convergence_study(&config).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            // medoid risk dominates restricted k-means risk up to MC noise
            assert!(r.gap_median >= -6.0 * r.gap_stderr_sum_median);
            assert!(r.sup_risk_err_median >= 0.0);
            assert!(r.covering_radius_median > 0.0);
        }
        let csv = convergence_to_csv(&rows);
        assert!(csv.starts_with("n,gap_median,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn study_rejects_bad_grids() {
        let base = ConvergenceConfig {
            generator: GeneratorSpec::two_gaussians(0.5, 0.1),
            metric: Metric::L2,
            loss: Loss::Square,
            k: 2,
            n_grid: vec![80, 40],
            replications: 2,
            base_seed: 5,
            mc_samples: 2000,
            starts: 2,
        };
        assert!(convergence_study(&base).is_err());
        let empty = ConvergenceConfig {
            n_grid: vec![],
            ..base.clone()
        };
        assert!(convergence_study(&empty).is_err());
    }

    #[test]
    fn point_mass_generator_has_zero_gap() {
        let config = ConvergenceConfig {
            generator: GeneratorSpec::UniformBoxUnion {
                dimension: 1,
                boxes: vec![vec![(1.5, 1.5)]],
            },
            metric: Metric::L1,
            loss: Loss::Identity,
            k: 1,
            n_grid: vec![50],
            replications: 2,
            base_seed: 9,
            mc_samples: 1000,
            starts: 1,
        };
        let rows = convergence_study(&config).unwrap();
        assert_eq!(rows[0].gap_median, 0.0);
        assert_eq!(rows[0].covering_radius_median, 0.0);
    }
}
