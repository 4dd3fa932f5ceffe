//! Optimizers for k-medoids over metric or rank objectives, plus generalized
//! k-means with per-loss center updates.

mod kmeans;
mod simplex;

pub use kmeans::{assign_labels, generalized_kmeans};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ordinal::{s_rank, RankTable};
use crate::risk::CenterSet;
use crate::space::{DistanceMatrix, Loss};

/// Largest instance the exhaustive solver accepts.
pub const EXACT_LIMIT: usize = 25;

/// Swap improvements smaller than this (in mean-cost units) are ignored, so
/// the search cannot cycle on floating-point plateaus.
pub const IMPROVEMENT_EPS: f64 = 1e-12;

/// A medoid clustering objective: transformed distances or normalized ranks.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    Metric {
        matrix: &'a DistanceMatrix,
        loss: Loss,
    },
    Ordinal {
        table: &'a RankTable,
    },
}

impl<'a> Objective<'a> {
    pub fn metric(matrix: &'a DistanceMatrix, loss: Loss) -> Self {
        Objective::Metric { matrix, loss }
    }

    pub fn ordinal(table: &'a RankTable) -> Self {
        Objective::Ordinal { table }
    }

    pub fn n(&self) -> usize {
        match self {
            Objective::Metric { matrix, .. } => matrix.n(),
            Objective::Ordinal { table } => table.n(),
        }
    }

    /// Per-point cost of serving point `i` from candidate medoid `a`.
    #[inline]
    pub fn point_score(&self, i: usize, a: usize) -> f64 {
        match self {
            Objective::Metric { matrix, loss } => loss.eval(matrix.get(i, a)),
            Objective::Ordinal { table } => {
                table.rank(i, a) as f64 / table.normalizer() as f64
            }
        }
    }

    fn validate_medoids(&self, medoids: &[usize]) -> Result<()> {
        if medoids.is_empty() {
            return Err(Error::EmptySet("medoids"));
        }
        let n = self.n();
        let mut seen = medoids.to_vec();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCenters("duplicate medoid index".into()));
        }
        if let Some(&a) = seen.last() {
            if a >= n {
                return Err(Error::InvalidCenters(format!(
                    "medoid index {a} out of range for n = {n}"
                )));
            }
        }
        Ok(())
    }

    /// The objective value at a medoid set. Rank objectives go through the
    /// exact integer-sum path of [`s_rank`].
    pub fn cost(&self, medoids: &[usize]) -> Result<f64> {
        self.validate_medoids(medoids)?;
        match self {
            Objective::Metric { matrix, loss } => {
                let n = matrix.n();
                let sum: f64 = (0..n)
                    .map(|i| {
                        medoids
                            .iter()
                            .map(|&a| loss.eval(matrix.get(i, a)))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .sum();
                Ok(sum / n as f64)
            }
            Objective::Ordinal { table } => s_rank(medoids, table),
        }
    }

    /// Per-point assignment to the nearest medoid by point score, ties to the
    /// lowest center index.
    pub fn labels(&self, medoids: &[usize]) -> Result<Vec<usize>> {
        self.validate_medoids(medoids)?;
        let n = self.n();
        Ok((0..n)
            .map(|i| {
                let mut best_pos = 0usize;
                let mut best = f64::INFINITY;
                for (pos, &a) in medoids.iter().enumerate() {
                    let s = self.point_score(i, a);
                    if s < best {
                        best = s;
                        best_pos = pos;
                    }
                }
                best_pos
            })
            .collect())
    }
}

/// A clustering result.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub centers: CenterSet,
    pub labels: Vec<usize>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Solution {
    /// Medoid indices when the solution is medoid-based.
    pub fn medoids(&self) -> Option<&[usize]> {
        match &self.centers {
            CenterSet::Medoids(m) => Some(m),
            CenterSet::Free(_) => None,
        }
    }
}

/// The support of a distribution as a union of axis-aligned closed boxes, or
/// the whole space.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportSpec {
    Unrestricted,
    /// Per box, one `(low, high)` interval per dimension.
    BoxUnion(Vec<Vec<(f64, f64)>>),
}

impl SupportSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if let SupportSpec::BoxUnion(boxes) = self {
            if boxes.is_empty() {
                return Err(Error::InvalidSupport("no boxes".into()));
            }
            for b in boxes {
                if b.len() != dim {
                    return Err(Error::InvalidSupport(format!(
                        "box has dimension {}, expected {dim}",
                        b.len()
                    )));
                }
                for &(lo, hi) in b {
                    if !lo.is_finite() || !hi.is_finite() || lo > hi {
                        return Err(Error::InvalidSupport(format!(
                            "invalid interval [{lo}, {hi}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Projects coordinates onto the support: coordinate clamp per box, the
    /// nearest box wins under `metric`, lowest box index on ties.
    pub(crate) fn project(&self, coords: &[f64], metric: crate::space::Metric) -> Vec<f64> {
        match self {
            SupportSpec::Unrestricted => coords.to_vec(),
            SupportSpec::BoxUnion(boxes) => {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for b in boxes {
                    let clamped: Vec<f64> = coords
                        .iter()
                        .zip(b)
                        .map(|(&c, &(lo, hi))| c.clamp(lo, hi))
                        .collect();
                    let d = metric.eval(coords, &clamped);
                    if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                        best = Some((d, clamped));
                    }
                }
                best.expect("validated box union is nonempty").1
            }
        }
    }
}

/// Column-major per-point scores; column `a` is the cost of each point when
/// served by candidate `a`.
struct Scores {
    n: usize,
    cols: Vec<f64>,
}

impl Scores {
    fn build(obj: &Objective) -> Self {
        let n = obj.n();
        let mut cols = vec![0.0; n * n];
        match obj {
            Objective::Metric { matrix, loss } => {
                for a in 0..n {
                    let row = matrix.row(a); // symmetric: row a == column a
                    let out = &mut cols[a * n..(a + 1) * n];
                    for (i, &d) in row.iter().enumerate() {
                        out[i] = loss.eval(d);
                    }
                }
            }
            Objective::Ordinal { table } => {
                let norm = table.normalizer() as f64;
                for a in 0..n {
                    let out = &mut cols[a * n..(a + 1) * n];
                    for (i, v) in out.iter_mut().enumerate() {
                        *v = table.rank(i, a) as f64 / norm;
                    }
                }
            }
        }
        Self { n, cols }
    }

    #[inline]
    fn col(&self, a: usize) -> &[f64] {
        &self.cols[a * self.n..(a + 1) * self.n]
    }
}

/// Nearest/second-nearest bookkeeping for the swap search.
struct SwapState {
    d1: Vec<f64>,
    d2: Vec<f64>,
    /// Position (0..k) of each point's nearest medoid.
    near: Vec<u32>,
}

impl SwapState {
    fn compute(scores: &Scores, medoids: &[usize]) -> Self {
        let n = scores.n;
        let mut d1 = vec![f64::INFINITY; n];
        let mut d2 = vec![f64::INFINITY; n];
        let mut near = vec![0u32; n];
        for (pos, &m) in medoids.iter().enumerate() {
            let col = scores.col(m);
            for i in 0..n {
                let s = col[i];
                if s < d1[i] {
                    d2[i] = d1[i];
                    d1[i] = s;
                    near[i] = pos as u32;
                } else if s < d2[i] {
                    d2[i] = s;
                }
            }
        }
        Self { d1, d2, near }
    }
}

/// One best-improvement pass: the most improving (candidate, medoid) swap.
fn best_swap(
    scores: &Scores,
    medoids: &[usize],
    is_medoid: &[bool],
    state: &SwapState,
) -> (f64, usize, usize) {
    let n = scores.n;
    let k = medoids.len();
    let mut best = (f64::INFINITY, usize::MAX, usize::MAX);

    if k == 1 {
        let cur: f64 = state.d1.iter().sum();
        for b in 0..n {
            if is_medoid[b] {
                continue;
            }
            let delta = scores.col(b).iter().sum::<f64>() - cur;
            if delta < best.0 {
                best = (delta, b, 0);
            }
        }
        return best;
    }

    // Cost increase per medoid if it were removed with no replacement taken.
    let mut removal_loss = vec![0.0; k];
    for i in 0..n {
        removal_loss[state.near[i] as usize] += state.d2[i] - state.d1[i];
    }

    let mut ploss = vec![0.0; k];
    for b in 0..n {
        if is_medoid[b] {
            continue;
        }
        ploss.copy_from_slice(&removal_loss);
        let mut acc = 0.0;
        let col = scores.col(b);
        for i in 0..n {
            let s = col[i];
            let d1 = state.d1[i];
            if s < d1 {
                // Point moves to b whichever medoid is removed.
                acc += s - d1;
                ploss[state.near[i] as usize] += d1 - state.d2[i];
            } else {
                let d2 = state.d2[i];
                if s < d2 {
                    // If its nearest medoid is removed the point takes b
                    // rather than its second nearest.
                    ploss[state.near[i] as usize] += s - d2;
                }
            }
        }
        let mut m_best = 0usize;
        let mut m_val = ploss[0];
        for (m, &v) in ploss.iter().enumerate().skip(1) {
            if v < m_val {
                m_val = v;
                m_best = m;
            }
        }
        let delta = acc + m_val;
        if delta < best.0 {
            best = (delta, b, m_best);
        }
    }
    best
}

/// Best-improvement swap descent. Returns (accepted swaps, converged).
fn swap_descent(scores: &Scores, medoids: &mut Vec<usize>, max_iter: usize) -> (usize, bool) {
    let n = scores.n;
    let k = medoids.len();
    if k >= n {
        return (0, true);
    }
    let threshold = IMPROVEMENT_EPS * n as f64;
    let mut is_medoid = vec![false; n];
    for &m in medoids.iter() {
        is_medoid[m] = true;
    }
    let mut state = SwapState::compute(scores, medoids);
    let mut iters = 0usize;
    while iters < max_iter {
        let (delta, b, m_pos) = best_swap(scores, medoids, &is_medoid, &state);
        if !(delta < -threshold) {
            return (iters, true);
        }
        is_medoid[medoids[m_pos]] = false;
        medoids[m_pos] = b;
        is_medoid[b] = true;
        medoids.sort_unstable();
        state = SwapState::compute(scores, medoids);
        iters += 1;
    }
    (iters, false)
}

fn solution_from_medoids(obj: &Objective, medoids: Vec<usize>, iterations: usize, converged: bool) -> Result<Solution> {
    let cost = obj.cost(&medoids)?;
    let labels = obj.labels(&medoids)?;
    Ok(Solution {
        centers: CenterSet::Medoids(medoids),
        labels,
        cost,
        iterations,
        converged,
    })
}

/// Global minimum over all C(n, k) medoid subsets, in lexicographic order so
/// ties resolve to the lexicographically first set. Guarded to n <= 25.
pub fn exact_kmedoids(obj: &Objective, k: usize) -> Result<Solution> {
    let n = obj.n();
    if n > EXACT_LIMIT {
        return Err(Error::InstanceTooLarge {
            limit: EXACT_LIMIT,
            got: n,
        });
    }
    if k == 0 {
        return Err(Error::EmptySet("medoids"));
    }
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let cost = obj.cost(&subset)?;
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, subset.clone()));
        }
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                let (cost, medoids) = best.expect("at least one subset");
                return solution_from_medoids(obj, medoids, 0, true)
                    .map(|s| Solution { cost, ..s });
            }
            i -= 1;
            if subset[i] != i + n - k {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Greedy BUILD-style seeding: start from the best singleton and repeatedly
/// add the candidate that lowers the objective most (ties to the lowest
/// index). Deterministic; returns a sorted index set.
pub fn greedy_build_init(obj: &Objective, k: usize) -> Result<Vec<usize>> {
    let n = obj.n();
    if k == 0 {
        return Err(Error::EmptySet("medoids"));
    }
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    let scores = Scores::build(obj);
    greedy_build_with_scores(&scores, k)
}

fn greedy_build_with_scores(scores: &Scores, k: usize) -> Result<Vec<usize>> {
    let n = scores.n;
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let mut best1 = vec![f64::INFINITY; n];
    for _ in 0..k {
        let mut best_b = usize::MAX;
        let mut best_cost = f64::INFINITY;
        for b in 0..n {
            if taken[b] {
                continue;
            }
            let col = scores.col(b);
            let cost: f64 = best1.iter().zip(col).map(|(&c, &s)| c.min(s)).sum();
            if cost < best_cost {
                best_cost = cost;
                best_b = b;
            }
        }
        taken[best_b] = true;
        chosen.push(best_b);
        let col = scores.col(best_b);
        for i in 0..n {
            best1[i] = best1[i].min(col[i]);
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

fn validate_init(n: usize, init: &[usize]) -> Result<()> {
    if init.is_empty() {
        return Err(Error::InvalidInit("empty".into()));
    }
    let mut seen = init.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInit("duplicate index".into()));
    }
    if *seen.last().expect("nonempty") >= n {
        return Err(Error::InvalidInit(format!(
            "index {} out of range for n = {n}",
            seen.last().expect("nonempty")
        )));
    }
    Ok(())
}

/// Best-improvement swap local search from a given initial medoid set.
///
/// Each iteration scans all k(n-k) swaps and applies the best one when it
/// lowers the cost by more than [`IMPROVEMENT_EPS`]; stops at a local optimum
/// or after `max_iter` swaps.
pub fn pam_swap(obj: &Objective, init: &[usize], max_iter: usize) -> Result<Solution> {
    validate_init(obj.n(), init)?;
    let scores = Scores::build(obj);
    let mut medoids = init.to_vec();
    medoids.sort_unstable();
    let (iterations, converged) = swap_descent(&scores, &mut medoids, max_iter);
    solution_from_medoids(obj, medoids, iterations, converged)
}

/// Swap descent from the greedy BUILD seed plus `starts - 1` uniformly random
/// distinct-index seeds; the best run wins (cost, then start order).
/// Deterministic given `seed`.
pub fn multi_start(
    obj: &Objective,
    k: usize,
    starts: usize,
    seed: u64,
) -> Result<Solution> {
    if starts == 0 {
        return Err(Error::InvalidConfig("starts must be >= 1".into()));
    }
    let n = obj.n();
    if k == 0 {
        return Err(Error::EmptySet("medoids"));
    }
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    let scores = Scores::build(obj);
    let max_iter = usize::MAX;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best: Option<(f64, Vec<usize>, usize, bool)> = None;
    for s in 0..starts {
        let mut medoids = if s == 0 {
            greedy_build_with_scores(&scores, k)?
        } else {
            let mut m = rand::seq::index::sample(&mut rng, n, k).into_vec();
            m.sort_unstable();
            m
        };
        let (iters, converged) = swap_descent(&scores, &mut medoids, max_iter);
        let cost = obj.cost(&medoids)?;
        if best.as_ref().map_or(true, |(c, ..)| cost < *c) {
            best = Some((cost, medoids, iters, converged));
        }
    }
    let (cost, medoids, iterations, converged) = best.expect("starts >= 1");
    solution_from_medoids(obj, medoids, iterations, converged).map(|s| Solution { cost, ..s })
}
