//! Generalized Lloyd iteration: alternate nearest-center assignment with a
//! per-cluster center update matched to the (metric, loss) pair.
//!
//! Updates: (L2, Square) is the mean, (L1, Identity) the coordinate-wise
//! median, (L2, Identity) the geometric median via Weiszfeld, and every other
//! pair a derivative-free simplex refinement seeded at the cluster medoid. A
//! candidate center is kept only if it does not increase the cluster cost, so
//! the overall cost never increases.

use crate::error::{Error, Result};
use crate::risk::CenterSet;
use crate::solvers::simplex::nelder_mead;
use crate::solvers::{Solution, SupportSpec};
use crate::space::{Dataset, Loss, Metric, Point};

const WEISZFELD_MAX_STEPS: usize = 200;
const WEISZFELD_TOL: f64 = 1e-10;
const SIMPLEX_MAX_ITER: usize = 200;
const SIMPLEX_EDGE_FRACTION: f64 = 0.1;

/// Per-point index of the nearest center under `phi(d(., .))`, ties to the
/// lowest center index.
pub fn assign_labels(
    centers: &[Point],
    data: &Dataset,
    metric: Metric,
    loss: Loss,
) -> Result<Vec<usize>> {
    if centers.is_empty() {
        return Err(Error::EmptySet("centers"));
    }
    for c in centers {
        if c.dim() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                actual: c.dim(),
            });
        }
    }
    Ok((0..data.len())
        .map(|i| {
            let coords = data.coords(i);
            let mut best = 0usize;
            let mut best_score = f64::INFINITY;
            for (pos, c) in centers.iter().enumerate() {
                let s = loss.eval(metric.eval(coords, c.coords()));
                if s < best_score {
                    best_score = s;
                    best = pos;
                }
            }
            best
        })
        .collect())
}

fn cluster_cost(members: &[usize], data: &Dataset, center: &[f64], metric: Metric, loss: Loss) -> f64 {
    members
        .iter()
        .map(|&i| loss.eval(metric.eval(data.coords(i), center)))
        .sum()
}

fn total_cost(centers: &[Point], data: &Dataset, metric: Metric, loss: Loss) -> f64 {
    let sum: f64 = (0..data.len())
        .map(|i| {
            centers
                .iter()
                .map(|c| loss.eval(metric.eval(data.coords(i), c.coords())))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    sum / data.len() as f64
}

fn cluster_mean(members: &[usize], data: &Dataset) -> Vec<f64> {
    let dim = data.dim();
    let mut mean = vec![0.0; dim];
    for &i in members {
        for (m, &x) in mean.iter_mut().zip(data.coords(i)) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= members.len() as f64;
    }
    mean
}

/// Coordinate-wise median; even counts take the midpoint of the two central
/// order statistics.
fn cluster_median(members: &[usize], data: &Dataset) -> Vec<f64> {
    let dim = data.dim();
    let mut out = vec![0.0; dim];
    let mut vals: Vec<f64> = Vec::with_capacity(members.len());
    for (c, o) in out.iter_mut().enumerate() {
        vals.clear();
        vals.extend(members.iter().map(|&i| data.coords(i)[c]));
        vals.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        let mid = vals.len() / 2;
        *o = if vals.len() % 2 == 1 {
            vals[mid]
        } else {
            0.5 * (vals[mid - 1] + vals[mid])
        };
    }
    out
}

/// Weiszfeld iteration for the geometric median, started at the cluster mean.
/// If an iterate lands on a data point, that point is returned.
fn cluster_geometric_median(members: &[usize], data: &Dataset) -> Vec<f64> {
    let mut current = cluster_mean(members, data);
    for _ in 0..WEISZFELD_MAX_STEPS {
        let mut num = vec![0.0; current.len()];
        let mut den = 0.0;
        for &i in members {
            let coords = data.coords(i);
            let d = Metric::L2.eval(coords, &current);
            if d <= 1e-14 {
                return coords.to_vec();
            }
            let w = 1.0 / d;
            for (nu, &x) in num.iter_mut().zip(coords) {
                *nu += w * x;
            }
            den += w;
        }
        let next: Vec<f64> = num.iter().map(|v| v / den).collect();
        let step = Metric::L2.eval(&next, &current);
        current = next;
        if step <= WEISZFELD_TOL {
            break;
        }
    }
    current
}

/// Index of the member minimizing the cluster cost among cluster points.
fn cluster_medoid(members: &[usize], data: &Dataset, metric: Metric, loss: Loss) -> usize {
    let mut best = members[0];
    let mut best_cost = f64::INFINITY;
    for &a in members {
        let cost = cluster_cost(members, data, data.coords(a), metric, loss);
        if cost < best_cost {
            best_cost = cost;
            best = a;
        }
    }
    best
}

fn simplex_update(members: &[usize], data: &Dataset, metric: Metric, loss: Loss) -> Vec<f64> {
    let dim = data.dim();
    let medoid = cluster_medoid(members, data, metric, loss);
    let start = data.coords(medoid).to_vec();
    let mut edges = vec![0.0; dim];
    for (c, e) in edges.iter_mut().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in members {
            let x = data.coords(i)[c];
            lo = lo.min(x);
            hi = hi.max(x);
        }
        let range = hi - lo;
        *e = if range > 0.0 {
            SIMPLEX_EDGE_FRACTION * range
        } else {
            1e-8
        };
    }
    nelder_mead(
        |x| cluster_cost(members, data, x, metric, loss),
        &start,
        &edges,
        SIMPLEX_MAX_ITER,
    )
}

fn update_center(members: &[usize], data: &Dataset, metric: Metric, loss: Loss) -> Vec<f64> {
    match (metric, loss) {
        (Metric::L2, Loss::Square) => cluster_mean(members, data),
        (Metric::L1, Loss::Identity) => cluster_median(members, data),
        (Metric::L2, Loss::Identity) => cluster_geometric_median(members, data),
        _ => simplex_update(members, data, metric, loss),
    }
}

/// Generalized k-means.
///
/// Alternates assignment and per-cluster center updates until the cost
/// decrease drops below `tol` or `max_iter` iterations. Updated centers are
/// projected onto `support`; empty clusters are reseeded with the point
/// farthest from its assigned center.
pub fn generalized_kmeans(
    data: &Dataset,
    metric: Metric,
    loss: Loss,
    k: usize,
    support: &SupportSpec,
    init: &[Point],
    max_iter: usize,
    tol: f64,
) -> Result<Solution> {
    let n = data.len();
    if k == 0 {
        return Err(Error::EmptySet("centers"));
    }
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    if init.len() != k {
        return Err(Error::InvalidInit(format!(
            "expected {k} initial centers, got {}",
            init.len()
        )));
    }
    for p in init {
        if p.dim() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                actual: p.dim(),
            });
        }
    }
    support.validate(data.dim())?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidConfig(format!("tol must be >= 0, got {tol}")));
    }

    let mut centers: Vec<Point> = init.to_vec();
    let mut cost = total_cost(&centers, data, metric, loss);
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let mut labels = assign_labels(&centers, data, metric, loss)?;

        // reseed empty clusters with the farthest point from its center
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        if counts.iter().any(|&c| c == 0) {
            let mut claimed = vec![false; n];
            for c in 0..k {
                if counts[c] > 0 {
                    continue;
                }
                let mut far_i = usize::MAX;
                let mut far_score = f64::NEG_INFINITY;
                for i in 0..n {
                    if claimed[i] || counts[labels[i]] <= 1 {
                        continue;
                    }
                    let s = loss.eval(metric.eval(data.coords(i), centers[labels[i]].coords()));
                    if s > far_score {
                        far_score = s;
                        far_i = i;
                    }
                }
                if far_i == usize::MAX {
                    continue; // k == n style corner: nothing to move
                }
                claimed[far_i] = true;
                counts[labels[far_i]] -= 1;
                counts[c] += 1;
                centers[c] = data.point(far_i).clone();
                labels[far_i] = c;
            }
        }

        // per-cluster center update, kept only if it does not increase the
        // cluster cost under the current assignment
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        for c in 0..k {
            if members[c].is_empty() {
                continue;
            }
            let mut candidate = update_center(&members[c], data, metric, loss);
            if let SupportSpec::BoxUnion(_) = support {
                candidate = support.project(&candidate, metric);
            }
            let old = cluster_cost(&members[c], data, centers[c].coords(), metric, loss);
            let new = cluster_cost(&members[c], data, &candidate, metric, loss);
            if new <= old {
                centers[c] = Point::new(candidate)?;
            }
        }

        let new_cost = total_cost(&centers, data, metric, loss);
        let decrease = cost - new_cost;
        cost = new_cost;
        if decrease < tol {
            converged = true;
            break;
        }
    }

    let labels = assign_labels(&centers, data, metric, loss)?;
    Ok(Solution {
        centers: CenterSet::Free(centers),
        labels,
        cost,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(vals: &[f64]) -> Vec<Point> {
        vals.iter()
            .map(|&v| Point::from_slice(&[v]).unwrap())
            .collect()
    }

    #[test]
    fn square_loss_k1_returns_the_mean() {
        let data = Dataset::from_values(&[0.0, 1.0, 3.0]).unwrap();
        let sol = generalized_kmeans(
            &data,
            Metric::L2,
            Loss::Square,
            1,
            &SupportSpec::Unrestricted,
            &pts(&[0.0]),
            100,
            1e-12,
        )
        .unwrap();
        let CenterSet::Free(centers) = &sol.centers else {
            panic!("free centers expected")
        };
        assert!((centers[0].coords()[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!(sol.converged);
    }

    #[test]
    fn absolute_loss_k1_returns_the_median() {
        let data = Dataset::from_values(&[0.0, 1.0, 3.0]).unwrap();
        let sol = generalized_kmeans(
            &data,
            Metric::L1,
            Loss::Identity,
            1,
            &SupportSpec::Unrestricted,
            &pts(&[3.0]),
            100,
            1e-12,
        )
        .unwrap();
        let CenterSet::Free(centers) = &sol.centers else {
            panic!("free centers expected")
        };
        assert_eq!(centers[0].coords()[0], 1.0);
        assert!((sol.cost - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_clusters_under_square_loss() {
        let data = Dataset::from_values(&[0.0, 1.0, 10.0, 11.0]).unwrap();
        let sol = generalized_kmeans(
            &data,
            Metric::L2,
            Loss::Square,
            2,
            &SupportSpec::Unrestricted,
            &pts(&[0.0, 10.0]),
            100,
            1e-12,
        )
        .unwrap();
        assert_eq!(sol.labels, vec![0, 0, 1, 1]);
        let CenterSet::Free(centers) = &sol.centers else {
            panic!("free centers expected")
        };
        assert!((centers[0].coords()[0] - 0.5).abs() < 1e-12);
        assert!((centers[1].coords()[0] - 10.5).abs() < 1e-12);
    }

    #[test]
    fn geometric_median_update_in_two_dimensions() {
        // three points; the geometric median of a triangle has a known cost
        // minimum that Weiszfeld reaches
        let data = Dataset::new(vec![
            Point::from_slice(&[0.0, 0.0]).unwrap(),
            Point::from_slice(&[1.0, 0.0]).unwrap(),
            Point::from_slice(&[0.5, 1.0]).unwrap(),
        ])
        .unwrap();
        let sol = generalized_kmeans(
            &data,
            Metric::L2,
            Loss::Identity,
            1,
            &SupportSpec::Unrestricted,
            &[Point::from_slice(&[0.0, 0.0]).unwrap()],
            200,
            1e-12,
        )
        .unwrap();
        let CenterSet::Free(centers) = &sol.centers else {
            panic!("free centers expected")
        };
        let c = centers[0].coords();
        // symmetric in x; inside the triangle
        assert!((c[0] - 0.5).abs() < 1e-6);
        assert!(c[1] > 0.0 && c[1] < 1.0);
    }

    #[test]
    fn simplex_update_handles_nonstandard_pairs() {
        let data = Dataset::from_values(&[0.0, 1.0, 10.0, 11.0]).unwrap();
        let sol = generalized_kmeans(
            &data,
            Metric::LInf,
            Loss::Identity,
            2,
            &SupportSpec::Unrestricted,
            &pts(&[0.0, 10.0]),
            100,
            1e-12,
        )
        .unwrap();
        assert_eq!(sol.labels, vec![0, 0, 1, 1]);
        assert!(sol.cost <=  0.5 + 1e-12);
    }

    #[test]
    fn assignment_breaks_ties_toward_lowest_center() {
        let data = Dataset::from_values(&[5.0]).unwrap();
        let centers = pts(&[0.0, 10.0]);
        let labels = assign_labels(&centers, &data, Metric::L1, Loss::Identity).unwrap();
        assert_eq!(labels, vec![0]);
        let one = assign_labels(&pts(&[1.0]), &data, Metric::L1, Loss::Identity).unwrap();
        assert_eq!(one, vec![0]);
    }

    #[test]
    fn support_restriction_projects_centers() {
        let data = Dataset::from_values(&[-1.8, -1.2, 1.2, 1.8]).unwrap();
        let support = SupportSpec::BoxUnion(vec![vec![(-2.0, -1.0)], vec![(1.0, 2.0)]]);
        let sol = generalized_kmeans(
            &data,
            Metric::L2,
            Loss::Square,
            1,
            &support,
            &pts(&[1.2]),
            100,
            1e-12,
        )
        .unwrap();
        let CenterSet::Free(centers) = &sol.centers else {
            panic!("free centers expected")
        };
        let c = centers[0].coords()[0];
        assert!((-2.0..=-1.0).contains(&c) || (1.0..=2.0).contains(&c));
    }

    #[test]
    fn cost_never_increases_and_k_gt_n_rejected() {
        let data = Dataset::from_values(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            generalized_kmeans(
                &data,
                Metric::L2,
                Loss::Square,
                3,
                &SupportSpec::Unrestricted,
                &pts(&[0.0, 0.5, 1.0]),
                10,
                1e-9,
            ),
            Err(Error::KExceedsN { .. })
        ));

        let data = Dataset::from_values(&[0.0, 0.4, 1.0, 5.0, 5.5, 9.0]).unwrap();
        // bad init far from the data still ends at finite cost
        let sol = generalized_kmeans(
            &data,
            Metric::L2,
            Loss::Square,
            2,
            &SupportSpec::Unrestricted,
            &pts(&[100.0, -100.0]),
            50,
            1e-12,
        )
        .unwrap();
        assert!(sol.cost.is_finite());
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // both initial centers in the left blob: the right blob would leave
        // center 1 empty without reseeding
        let data = Dataset::from_values(&[0.0, 0.1, 0.2, 50.0, 50.1]).unwrap();
        let sol = generalized_kmeans(
            &data,
            Metric::L2,
            Loss::Square,
            2,
            &SupportSpec::Unrestricted,
            &pts(&[0.0, 0.1]),
            100,
            1e-12,
        )
        .unwrap();
        let mut sorted = sol.labels.clone();
        sorted.dedup();
        assert!(sol.labels.iter().any(|&l| l == 0));
        assert!(sol.labels.iter().any(|&l| l == 1));
        // the two blobs are separated
        assert_eq!(sol.labels[0], sol.labels[1]);
        assert_eq!(sol.labels[3], sol.labels[4]);
        assert_ne!(sol.labels[0], sol.labels[3]);
    }
}
