//! Replication harness: data generators, quality metrics, presets and
//! convergence diagnostics.
//!
//! Every replication derives its own seed from the base seed, replications run
//! in parallel, and aggregation is done in replication order, so a report is
//! reproducible for a fixed config regardless of thread count (the runtime
//! column, being wall-clock time, is the one exception).

mod convergence;
mod generator;
mod metrics;
mod presets;

pub use convergence::{convergence_study, convergence_to_csv, ConvergenceConfig, ConvergenceRow};
pub use generator::{GeneratorSpec, MixtureComponent};
pub use metrics::{adjusted_rand_index, average_center_error};
pub use presets::{preset, PRESET_NAMES};

use std::fmt;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinal::{bad_variant_ranks, quadruple_ranks, triple_ranks, RankTable};
use crate::risk::CenterSet;
use crate::seeding::{derive, mix64};
use crate::solvers::{generalized_kmeans, multi_start, Objective, Solution, SupportSpec};
use crate::space::{pairwise_matrix, Dataset, Loss, Metric, Point};

/// `n` iid draws from a generator; deterministic given `seed`.
pub fn sample(generator: &GeneratorSpec, n: usize, seed: u64) -> Result<Dataset> {
    generator.sample(n, seed)
}

/// As [`sample`], also returning the component index of each draw.
pub fn sample_labeled(
    generator: &GeneratorSpec,
    n: usize,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    generator.sample_labeled(n, seed)
}

/// A clustering method the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "kmeans")]
    KMeans,
    #[serde(rename = "kmedoids")]
    KMedoids,
    #[serde(rename = "ordinal_quadruple")]
    OrdinalQuadruple,
    #[serde(rename = "ordinal_triple")]
    OrdinalTriple,
    #[serde(rename = "bad_variant")]
    BadVariant,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::KMeans => "kmeans",
            Method::KMedoids => "kmedoids",
            Method::OrdinalQuadruple => "ordinal_quadruple",
            Method::OrdinalTriple => "ordinal_triple",
            Method::BadVariant => "bad_variant",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One (metric, loss) row of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricLoss {
    pub metric: Metric,
    pub loss: Loss,
}

/// Full experiment description; serializable as lower_snake_case JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    pub n: usize,
    pub k: usize,
    pub metric_loss_list: Vec<MetricLoss>,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub starts: usize,
    pub base_seed: u64,
    pub population_mc_samples: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if self.n < self.k {
            return Err(Error::InvalidConfig(format!(
                "n = {} must be >= k = {}",
                self.n, self.k
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self.starts == 0 {
            return Err(Error::InvalidConfig("starts must be >= 1".into()));
        }
        if self.metric_loss_list.is_empty() {
            return Err(Error::InvalidConfig("empty metric/loss list".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        Ok(())
    }
}

/// Aggregated results for one (method, metric, loss) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub metric: Metric,
    pub loss: Loss,
    pub ari_mean: f64,
    pub ari_sd: f64,
    pub center_err_mean: f64,
    pub center_err_sd: f64,
    pub cost_mean: f64,
    pub runtime_ms_mean: f64,
}

/// Per-replication measurements for one report cell.
#[derive(Debug, Clone, Copy)]
struct CellSample {
    ari: f64,
    center_err: f64,
    cost: f64,
    runtime_ms: f64,
}

struct SolvedMethod {
    labels: Vec<usize>,
    centers: Vec<Point>,
    cost: f64,
    runtime_ms: f64,
}

fn solve_medoid_objective(
    obj: &Objective,
    data: &Dataset,
    k: usize,
    starts: usize,
    seed: u64,
) -> Result<SolvedMethod> {
    let t0 = Instant::now();
    let sol = multi_start(obj, k, starts, seed)?;
    let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
    let centers = sol.centers.resolve(data)?;
    Ok(SolvedMethod {
        labels: sol.labels,
        centers,
        cost: sol.cost,
        runtime_ms,
    })
}

fn solution_free_centers(sol: &Solution) -> Vec<Point> {
    match &sol.centers {
        CenterSet::Free(points) => points.clone(),
        CenterSet::Medoids(_) => unreachable!("k-means returns free centers"),
    }
}

fn run_one_replication(
    config: &ExperimentConfig,
    truth_centers: &[Point],
    rep: usize,
) -> Result<Vec<Vec<CellSample>>> {
    let rep_seed = mix64(config.base_seed ^ rep as u64);
    let (data, truth_labels) = config
        .generator
        .sample_labeled(config.n, derive(rep_seed, 0x00))?;

    let needs_quad = config.methods.contains(&Method::OrdinalQuadruple);
    let needs_triple = config.methods.contains(&Method::OrdinalTriple);
    let needs_bad = config.methods.contains(&Method::BadVariant);
    let needs_medoid_solution = config.methods.contains(&Method::KMedoids)
        || config.methods.contains(&Method::KMeans);

    let mut results: Vec<Vec<Option<CellSample>>> =
        vec![vec![None; config.methods.len()]; config.metric_loss_list.len()];

    // group rows per metric so distance matrices and rank tables are shared
    let mut metrics_seen: Vec<Metric> = Vec::new();
    for row in &config.metric_loss_list {
        if !metrics_seen.contains(&row.metric) {
            metrics_seen.push(row.metric);
        }
    }

    for (metric_idx, &metric) in metrics_seen.iter().enumerate() {
        let dmat = pairwise_matrix(&data, metric);
        let quad: Option<RankTable> = if needs_quad {
            Some(quadruple_ranks(&dmat)?)
        } else {
            None
        };
        let triple: Option<RankTable> = if needs_triple {
            Some(triple_ranks(&dmat)?)
        } else {
            None
        };
        let bad: Option<RankTable> = if needs_bad {
            Some(bad_variant_ranks(&dmat)?)
        } else {
            None
        };

        // rank objectives never see the loss: solve once per metric
        let mut ordinal_cache: Vec<Option<SolvedMethod>> = vec![None, None, None];
        let solve_ordinal = |code: usize, table: &RankTable| -> Result<SolvedMethod> {
            let obj = Objective::ordinal(table);
            solve_medoid_objective(
                &obj,
                &data,
                config.k,
                config.starts,
                derive(rep_seed, 0x200 + (metric_idx as u64) * 8 + code as u64),
            )
        };

        for (row_idx, row) in config.metric_loss_list.iter().enumerate() {
            if row.metric != metric {
                continue;
            }
            let loss = row.loss;
            let metric_obj = Objective::metric(&dmat, loss);
            let medoid_sol: Option<SolvedMethod> = if needs_medoid_solution {
                Some(solve_medoid_objective(
                    &metric_obj,
                    &data,
                    config.k,
                    config.starts,
                    derive(rep_seed, 0x300 + row_idx as u64),
                )?)
            } else {
                None
            };

            for (method_idx, &method) in config.methods.iter().enumerate() {
                let solved: SolvedMethod = match method {
                    Method::KMedoids => {
                        let m = medoid_sol.as_ref().expect("computed above");
                        SolvedMethod {
                            labels: m.labels.clone(),
                            centers: m.centers.clone(),
                            cost: m.cost,
                            runtime_ms: m.runtime_ms,
                        }
                    }
                    Method::KMeans => {
                        let m = medoid_sol.as_ref().expect("computed above");
                        let t0 = Instant::now();
                        let sol = generalized_kmeans(
                            &data,
                            metric,
                            loss,
                            config.k,
                            &SupportSpec::Unrestricted,
                            &m.centers,
                            100,
                            1e-9,
                        )?;
                        let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
                        SolvedMethod {
                            centers: solution_free_centers(&sol),
                            labels: sol.labels,
                            cost: sol.cost,
                            runtime_ms,
                        }
                    }
                    Method::OrdinalQuadruple | Method::OrdinalTriple | Method::BadVariant => {
                        let (code, table) = match method {
                            Method::OrdinalQuadruple => (0usize, quad.as_ref()),
                            Method::OrdinalTriple => (1, triple.as_ref()),
                            Method::BadVariant => (2, bad.as_ref()),
                            _ => unreachable!(),
                        };
                        let table = table.expect("built above");
                        if ordinal_cache[code].is_none() {
                            ordinal_cache[code] = Some(solve_ordinal(code, table)?);
                        }
                        let m = ordinal_cache[code].as_ref().expect("cached");
                        SolvedMethod {
                            labels: m.labels.clone(),
                            centers: m.centers.clone(),
                            cost: m.cost,
                            runtime_ms: m.runtime_ms,
                        }
                    }
                };

                let ari = adjusted_rand_index(&truth_labels, &solved.labels)?;
                let center_err = if solved.centers.len() == truth_centers.len() {
                    average_center_error(&solved.centers, truth_centers)?
                } else {
                    f64::NAN
                };
                results[row_idx][method_idx] = Some(CellSample {
                    ari,
                    center_err,
                    cost: solved.cost,
                    runtime_ms: solved.runtime_ms,
                });
            }
        }
    }

    Ok(results
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|cell| cell.expect("every (row, method) cell filled"))
                .collect()
        })
        .collect())
}

fn mean_and_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Runs every (metric/loss, method) cell over all replications and aggregates
/// means and sample standard deviations. Rows come out in metric/loss-major,
/// method-minor order.
pub fn run_replications(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    config.validate()?;
    let truth_centers = config.generator.true_centers();

    let per_rep: Vec<Vec<Vec<CellSample>>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_one_replication(config, &truth_centers, rep))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(config.metric_loss_list.len() * config.methods.len());
    for (row_idx, ml) in config.metric_loss_list.iter().enumerate() {
        for (method_idx, &method) in config.methods.iter().enumerate() {
            let cells = || per_rep.iter().map(move |r| r[row_idx][method_idx]);
            let (ari_mean, ari_sd) = mean_and_sd(cells().map(|c| c.ari));
            let (err_mean, err_sd) = mean_and_sd(cells().map(|c| c.center_err));
            let (cost_mean, _) = mean_and_sd(cells().map(|c| c.cost));
            let (runtime_ms_mean, _) = mean_and_sd(cells().map(|c| c.runtime_ms));
            rows.push(ReportRow {
                method,
                metric: ml.metric,
                loss: ml.loss,
                ari_mean,
                ari_sd,
                center_err_mean: err_mean,
                center_err_sd: err_sd,
                cost_mean,
                runtime_ms_mean,
            });
        }
    }
    Ok(rows)
}

/// CSV rendering with the fixed report header.
pub fn report_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(
        "method,metric,loss,ari_mean,ari_sd,center_err_mean,center_err_sd,cost_mean,runtime_ms_mean\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3}",
            r.method,
            r.metric,
            r.loss,
            r.ari_mean,
            r.ari_sd,
            r.center_err_mean,
            r.center_err_sd,
            r.cost_mean,
            r.runtime_ms_mean
        )
        .expect("writing to string");
    }
    out
}

/// Markdown table: one error line and one ARI line per metric/loss row, one
/// column per method.
pub fn report_to_markdown(rows: &[ReportRow]) -> String {
    let mut methods: Vec<Method> = Vec::new();
    let mut groups: Vec<MetricLoss> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
        let g = MetricLoss {
            metric: r.metric,
            loss: r.loss,
        };
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    let cell = |g: &MetricLoss, m: Method| -> Option<&ReportRow> {
        rows.iter()
            .find(|r| r.metric == g.metric && r.loss == g.loss && r.method == m)
    };

    let mut out = String::new();
    write!(out, "| metric | loss | quantity |").expect("string");
    for m in &methods {
        write!(out, " {m} |").expect("string");
    }
    out.push('\n');
    write!(out, "|---|---|---|").expect("string");
    for _ in &methods {
        write!(out, "---|").expect("string");
    }
    out.push('\n');
    for g in &groups {
        write!(out, "| {} | {} | error |", g.metric, g.loss).expect("string");
        for &m in &methods {
            match cell(g, m) {
                Some(r) => write!(out, " {:.3e} ({:.1e}) |", r.center_err_mean, r.center_err_sd)
                    .expect("string"),
                None => write!(out, " - |").expect("string"),
            }
        }
        out.push('\n');
        write!(out, "| {} | {} | ARI |", g.metric, g.loss).expect("string");
        for &m in &methods {
            match cell(g, m) {
                Some(r) => {
                    write!(out, " {:.3} ({:.3}) |", r.ari_mean, r.ari_sd).expect("string")
                }
                None => write!(out, " - |").expect("string"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            generator: GeneratorSpec::two_gaussians(0.5, 0.05),
            n: 60,
            k: 2,
            metric_loss_list: vec![MetricLoss {
                metric: Metric::L2,
                loss: Loss::Square,
            }],
            methods: vec![
                Method::KMeans,
                Method::KMedoids,
                Method::OrdinalQuadruple,
                Method::OrdinalTriple,
            ],
            replications: 3,
            starts: 4,
            base_seed: 99,
            population_mc_samples: 1000,
        }
    }

    #[test]
    fn harness_runs_and_is_deterministic_modulo_runtime() {
        let config = tiny_config();
        let a = run_replications(&config).unwrap();
        let b = run_replications(&config).unwrap();
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.method, y.method);
            assert_eq!(x.ari_mean, y.ari_mean);
            assert_eq!(x.ari_sd, y.ari_sd);
            assert_eq!(x.center_err_mean, y.center_err_mean);
            assert_eq!(x.cost_mean, y.cost_mean);
        }
        for r in &a {
            assert!(r.ari_mean > 0.5, "{:?} separates two clear clusters", r.method);
            assert!(r.center_err_mean >= 0.0);
        }
    }

    #[test]
    fn report_csv_has_fixed_header() {
        let config = tiny_config();
        let rows = run_replications(&config).unwrap();
        let csv = report_to_csv(&rows);
        assert!(csv.starts_with(
            "method,metric,loss,ari_mean,ari_sd,center_err_mean,center_err_sd,cost_mean,runtime_ms_mean\n"
        ));
        assert_eq!(csv.lines().count(), 1 + rows.len());
        let md = report_to_markdown(&rows);
        assert!(md.contains("| ARI |") || md.contains("ARI"));
    }

    #[test]
    fn config_validation_errors() {
        let mut c = tiny_config();
        c.replications = 0;
        assert!(run_replications(&c).is_err());
        let mut c = tiny_config();
        c.k = 0;
        assert!(run_replications(&c).is_err());
        let mut c = tiny_config();
        c.methods.clear();
        assert!(run_replications(&c).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = tiny_config();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"metric_loss_list\""));
        assert!(json.contains("\"base_seed\""));
        assert!(json.contains("\"kmeans\""));
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(c, back);
    }
}
