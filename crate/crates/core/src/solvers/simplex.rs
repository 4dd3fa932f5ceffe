//! A small deterministic Nelder–Mead simplex minimizer used for center
//! updates without closed form.

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

/// Minimizes `f` starting from `start`, with per-coordinate initial simplex
/// edges `edges`. Runs at most `max_iter` iterations and returns the best
/// vertex seen.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    edges: &[f64],
    max_iter: usize,
) -> Vec<f64> {
    let dim = start.len();
    debug_assert_eq!(edges.len(), dim);

    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(dim + 1);
    simplex.push((f(start), start.to_vec()));
    for j in 0..dim {
        let mut v = start.to_vec();
        v[j] += edges[j];
        simplex.push((f(&v), v));
    }

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite costs"));
        let best = simplex[0].0;
        let worst = simplex[dim].0;
        if worst - best <= 1e-14 * (1.0 + best.abs()) {
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; dim];
        for (_, v) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let worst_v = simplex[dim].1.clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst_v)
            .map(|(c, w)| c + ALPHA * (c - w))
            .collect();
        let fr = f(&reflect);

        let second_worst = simplex[dim - 1].0;
        if fr < simplex[0].0 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst_v)
                .map(|(c, w)| c + GAMMA * (c - w))
                .collect();
            let fe = f(&expand);
            simplex[dim] = if fe < fr { (fe, expand) } else { (fr, reflect) };
        } else if fr < second_worst {
            simplex[dim] = (fr, reflect);
        } else {
            let contract: Vec<f64> = if fr < simplex[dim].0 {
                centroid
                    .iter()
                    .zip(&reflect)
                    .map(|(c, r)| c + RHO * (r - c))
                    .collect()
            } else {
                centroid
                    .iter()
                    .zip(&worst_v)
                    .map(|(c, w)| c + RHO * (w - c))
                    .collect()
            };
            let fc = f(&contract);
            if fc < simplex[dim].0.min(fr) {
                simplex[dim] = (fc, contract);
            } else {
                // shrink toward the best vertex
                let anchor = simplex[0].1.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = anchor
                        .iter()
                        .zip(&entry.1)
                        .map(|(a, x)| a + SIGMA * (x - a))
                        .collect();
                    *entry = (f(&v), v);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite costs"));
    simplex.swap_remove(0).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_shifted_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1] + 1.5).powi(2);
        let best = nelder_mead(f, &[0.0, 0.0], &[0.5, 0.5], 200);
        assert!((best[0] - 3.0).abs() < 1e-4);
        assert!((best[1] + 1.5).abs() < 1e-4);
    }

    #[test]
    fn handles_one_dimension() {
        let f = |x: &[f64]| (x[0] - 0.25).abs();
        let best = nelder_mead(f, &[2.0], &[0.3], 200);
        assert!((best[0] - 0.25).abs() < 1e-6);
    }

    #[test]
    fn is_deterministic() {
        let f = |x: &[f64]| x[0].powi(4) + (x[1] - 1.0).powi(2) + (x[0] * x[1]).powi(2);
        let a = nelder_mead(f, &[1.0, -1.0], &[0.2, 0.2], 200);
        let b = nelder_mead(f, &[1.0, -1.0], &[0.2, 0.2], 200);
        assert_eq!(a, b);
    }
}
