//! Rank-only clustering objectives.
//!
//! Ranks are counts of `<=` comparisons, so each rank table is a pure
//! function of the ordering of the dissimilarities: applying any strictly
//! increasing transform to the distances leaves the tables unchanged. The
//! quadruple scheme ranks `d(x_i, a)` among all pairwise distances, the
//! triple scheme ranks it within row `i` only, and the bad variant ranks it
//! within column `a` (kept as a negative control: its k = 1 objective is the
//! same constant for every medoid).

use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experiments::GeneratorSpec;
use crate::risk::RiskEstimate;
use crate::seeding::derive;
use crate::space::{DistanceMatrix, Metric, Point};

/// Which comparison scheme a rank table was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RankScheme {
    Quadruple,
    Triple,
    BadVariant,
}

impl RankScheme {
    pub fn name(self) -> &'static str {
        match self {
            RankScheme::Quadruple => "quadruple",
            RankScheme::Triple => "triple",
            RankScheme::BadVariant => "bad_variant",
        }
    }

    fn normalizer(self, n: usize) -> u64 {
        match self {
            RankScheme::Quadruple => (n as u64) * (n as u64 - 1) / 2,
            RankScheme::Triple | RankScheme::BadVariant => n as u64 - 1,
        }
    }
}

impl FromStr for RankScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadruple" => Ok(RankScheme::Quadruple),
            "triple" => Ok(RankScheme::Triple),
            "bad_variant" => Ok(RankScheme::BadVariant),
            other => Err(Error::Malformed(format!("unknown rank scheme `{other}`"))),
        }
    }
}

/// Dense n x n table of ranks `R_i(x_a)` plus the scheme normalizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    scheme: RankScheme,
    n: usize,
    normalizer: u64,
    /// Row-major: `ranks[i * n + a] = R_i(x_a)`.
    ranks: Vec<u64>,
}

impl RankTable {
    pub fn scheme(&self) -> RankScheme {
        self.scheme
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn normalizer(&self) -> u64 {
        self.normalizer
    }

    #[inline]
    pub fn rank(&self, i: usize, a: usize) -> u64 {
        self.ranks[i * self.n + a]
    }

    /// Writes the table as CSV: a one-line header `scheme,normalizer`
    /// followed by the n x n integer matrix.
    pub fn to_csv_writer<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{},{}", self.scheme.name(), self.normalizer)?;
        for i in 0..self.n {
            let row = &self.ranks[i * self.n..(i + 1) * self.n];
            let line = row
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads a table written by [`RankTable::to_csv_writer`].
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Malformed("empty rank table".into()))??;
        let mut parts = header.trim().split(',');
        let scheme: RankScheme = parts
            .next()
            .ok_or_else(|| Error::Malformed("missing scheme".into()))?
            .trim()
            .parse()?;
        let normalizer: u64 = parts
            .next()
            .ok_or_else(|| Error::Malformed("missing normalizer".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::Malformed(format!("normalizer: {e}")))?;
        if parts.next().is_some() {
            return Err(Error::Malformed("extra header fields".into()));
        }

        let mut ranks = Vec::new();
        let mut n = 0usize;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<u64>, _> =
                line.trim().split(',').map(|f| f.trim().parse()).collect();
            let row = row.map_err(|e| Error::Malformed(format!("rank entry: {e}")))?;
            if n == 0 {
                n = row.len();
            } else if row.len() != n {
                return Err(Error::Malformed("ragged rank matrix".into()));
            }
            ranks.extend(row);
        }
        if n == 0 || ranks.len() != n * n {
            return Err(Error::Malformed(format!(
                "expected a square matrix, got {} entries for n = {n}",
                ranks.len()
            )));
        }
        if normalizer != scheme.normalizer(n) {
            return Err(Error::Malformed(format!(
                "normalizer {normalizer} does not match scheme `{}` at n = {n}",
                scheme.name()
            )));
        }
        Ok(Self {
            scheme,
            n,
            normalizer,
            ranks,
        })
    }
}

fn check_min_points(d: &DistanceMatrix) -> Result<usize> {
    let n = d.n();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    Ok(n)
}

fn sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    values
}

/// Number of elements of the ascending slice `<= t`.
#[inline]
fn count_le(sorted: &[f64], t: f64) -> u64 {
    sorted.partition_point(|&v| v <= t) as u64
}

/// Ranks against the global ordering of all pairwise distances:
/// `R_i(a) = #{(l, m), l < m : d(x_l, x_m) <= d(x_i, a)}`.
pub fn quadruple_ranks(d: &DistanceMatrix) -> Result<RankTable> {
    let n = check_min_points(d)?;
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            pairs.push(d.get(i, j));
        }
    }
    let pairs = sorted(pairs);
    let mut ranks = vec![0u64; n * n];
    for i in 0..n {
        let row = d.row(i);
        let out = &mut ranks[i * n..(i + 1) * n];
        for (a, &dia) in row.iter().enumerate() {
            out[a] = count_le(&pairs, dia);
        }
    }
    Ok(RankTable {
        scheme: RankScheme::Quadruple,
        n,
        normalizer: RankScheme::Quadruple.normalizer(n),
        ranks,
    })
}

/// Ranks within each row: `R_i(a) = #{j != i : d(x_i, x_j) <= d(x_i, a)}`.
pub fn triple_ranks(d: &DistanceMatrix) -> Result<RankTable> {
    let n = check_min_points(d)?;
    let mut ranks = vec![0u64; n * n];
    let mut row_buf = Vec::with_capacity(n - 1);
    for i in 0..n {
        row_buf.clear();
        let row = d.row(i);
        row_buf.extend(
            row.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v),
        );
        row_buf.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let out = &mut ranks[i * n..(i + 1) * n];
        for (a, &dia) in row.iter().enumerate() {
            out[a] = count_le(&row_buf, dia);
        }
    }
    Ok(RankTable {
        scheme: RankScheme::Triple,
        n,
        normalizer: RankScheme::Triple.normalizer(n),
        ranks,
    })
}

/// Ranks within each column: `R_i(a) = #{j in [n] : d(x_j, a) <= d(x_i, a)}`.
pub fn bad_variant_ranks(d: &DistanceMatrix) -> Result<RankTable> {
    let n = check_min_points(d)?;
    let mut ranks = vec![0u64; n * n];
    let mut col_buf = Vec::with_capacity(n);
    for a in 0..n {
        col_buf.clear();
        col_buf.extend((0..n).map(|j| d.get(j, a)));
        col_buf.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite distances"));
        for i in 0..n {
            ranks[i * n + a] = count_le(&col_buf, d.get(i, a));
        }
    }
    Ok(RankTable {
        scheme: RankScheme::BadVariant,
        n,
        normalizer: RankScheme::BadVariant.normalizer(n),
        ranks,
    })
}

/// The rank objective `S_rank(A, Q_n)`: the average over points of the
/// minimum normalized rank over the medoid set.
///
/// Computed as an exact integer sum divided once, so equal integer rank sums
/// give bitwise-equal values.
pub fn s_rank(medoids: &[usize], table: &RankTable) -> Result<f64> {
    if medoids.is_empty() {
        return Err(Error::EmptySet("medoids"));
    }
    let n = table.n;
    for &a in medoids {
        if a >= n {
            return Err(Error::InvalidCenters(format!(
                "medoid index {a} out of range for n = {n}"
            )));
        }
    }
    let mut total: u64 = 0;
    for i in 0..n {
        let row = &table.ranks[i * n..(i + 1) * n];
        let min = medoids.iter().map(|&a| row[a]).min().expect("nonempty");
        total += min;
    }
    Ok(total as f64 / (n as f64 * table.normalizer as f64))
}

/// A right-continuous empirical distribution function stored as distinct
/// sorted support values with cumulative step heights.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfEstimate {
    support: Vec<f64>,
    heights: Vec<f64>,
}

impl CdfEstimate {
    pub fn from_samples(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySet("cdf sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        let total = values.len() as f64;
        let values = sorted(values);
        let mut support = Vec::new();
        let mut heights = Vec::new();
        let mut seen = 0usize;
        let mut idx = 0usize;
        while idx < values.len() {
            let v = values[idx];
            let mut run = 0usize;
            while idx < values.len() && values[idx] == v {
                run += 1;
                idx += 1;
            }
            seen += run;
            support.push(v);
            heights.push(seen as f64 / total);
        }
        Ok(Self { support, heights })
    }

    /// `F(t)`: the fraction of sample values `<= t`.
    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.support.partition_point(|&v| v <= t);
        if idx == 0 {
            0.0
        } else {
            self.heights[idx - 1]
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Largest absolute difference against `other` over a fixed grid.
    pub fn sup_diff_on_grid(&self, other: &CdfEstimate, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&t| (self.eval(t) - other.eval(t)).abs())
            .fold(0.0, f64::max)
    }
}

/// Empirical CDF of all n(n-1)/2 pairwise distances.
pub fn empirical_pair_cdf(d: &DistanceMatrix) -> Result<CdfEstimate> {
    let n = check_min_points(d)?;
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            pairs.push(d.get(i, j));
        }
    }
    CdfEstimate::from_samples(pairs)
}

/// Empirical CDF of the distances from point `i` to the other sample points.
pub fn empirical_row_cdf(d: &DistanceMatrix, i: usize) -> Result<CdfEstimate> {
    let n = check_min_points(d)?;
    if i >= n {
        return Err(Error::InvalidCenters(format!(
            "row {i} out of range for n = {n}"
        )));
    }
    let values: Vec<f64> = d
        .row(i)
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .collect();
    CdfEstimate::from_samples(values)
}

/// Monte Carlo estimate of `G(t) = P(d(X, X') <= t)` from `m_pairs`
/// independent distance draws. Deterministic given `seed`.
pub fn population_pair_cdf_mc(
    sampler: &GeneratorSpec,
    metric: Metric,
    m_pairs: usize,
    seed: u64,
) -> Result<CdfEstimate> {
    if m_pairs < 1000 {
        return Err(Error::TooFewSamples {
            needed: 1000,
            got: m_pairs,
        });
    }
    sampler.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stream = sampler.stream(&mut rng);
    let mut dists = Vec::with_capacity(m_pairs);
    for _ in 0..m_pairs {
        let x = stream.next_coords();
        let y = stream.next_coords();
        dists.push(metric.eval(&x, &y));
    }
    CdfEstimate::from_samples(dists)
}

/// Monte Carlo estimate of the population rank objective
/// `S(A, Q) = E[min_a G(d(X, a))]`.
///
/// The quadruple scheme plugs a pair-distance CDF estimate into the
/// definition; the triple scheme estimates the anchored CDF `G^x` by a nested
/// fresh sample of size `ceil(sqrt(m))` per outer draw.
pub fn population_s_mc(
    centers: &[Point],
    sampler: &GeneratorSpec,
    metric: Metric,
    scheme: RankScheme,
    m: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    if centers.is_empty() {
        return Err(Error::EmptySet("centers"));
    }
    if m < 1000 {
        return Err(Error::TooFewSamples { needed: 1000, got: m });
    }
    sampler.validate()?;
    if centers[0].dim() != sampler.dimension() {
        return Err(Error::DimensionMismatch {
            expected: sampler.dimension(),
            actual: centers[0].dim(),
        });
    }

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    match scheme {
        RankScheme::Quadruple => {
            let g = population_pair_cdf_mc(sampler, metric, m, derive(seed, 1))?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, 2));
            let mut stream = sampler.stream(&mut rng);
            for _ in 0..m {
                let x = stream.next_coords();
                let v = centers
                    .iter()
                    .map(|a| g.eval(metric.eval(&x, a.coords())))
                    .fold(f64::INFINITY, f64::min);
                sum += v;
                sum_sq += v * v;
            }
        }
        RankScheme::Triple => {
            let inner = (m as f64).sqrt().ceil() as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, 3));
            let mut stream = sampler.stream(&mut rng);
            let mut inner_dists = Vec::with_capacity(inner);
            for _ in 0..m {
                let x = stream.next_coords();
                inner_dists.clear();
                for _ in 0..inner {
                    let y = stream.next_coords();
                    inner_dists.push(metric.eval(&x, &y));
                }
                inner_dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
                let v = centers
                    .iter()
                    .map(|a| {
                        count_le(&inner_dists, metric.eval(&x, a.coords())) as f64 / inner as f64
                    })
                    .fold(f64::INFINITY, f64::min);
                sum += v;
                sum_sq += v * v;
            }
        }
        RankScheme::BadVariant => {
            return Err(Error::InvalidConfig(
                "population S is defined for the quadruple and triple schemes".into(),
            ));
        }
    }
    let mean = sum / m as f64;
    let var = ((sum_sq - sum * sum / m as f64) / (m as f64 - 1.0)).max(0.0);
    Ok(RiskEstimate {
        value: mean,
        stderr: (var / m as f64).sqrt(),
        samples_used: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{pairwise_matrix, Dataset};

    fn three_point_matrix() -> DistanceMatrix {
        // 1-d points {0, 1, 3} under L1: pair distances 1, 3, 2.
        let data = Dataset::from_values(&[0.0, 1.0, 3.0]).unwrap();
        pairwise_matrix(&data, Metric::L1)
    }

    #[test]
    fn quadruple_ranks_hand_example() {
        let t = quadruple_ranks(&three_point_matrix()).unwrap();
        assert_eq!(t.normalizer(), 3);
        assert_eq!(t.rank(0, 2), 3); // d(x1,x3)=3: all pairs <= 3
        assert_eq!(t.rank(1, 2), 2); // d(x2,x3)=2: pairs {1,2}
        assert_eq!(t.rank(0, 1), 1); // d(x1,x2)=1: pair {1}
        for i in 0..3 {
            assert_eq!(t.rank(i, i), 0, "diagonal rank at distinct points");
        }
    }

    #[test]
    fn triple_ranks_hand_example() {
        let t = triple_ranks(&three_point_matrix()).unwrap();
        assert_eq!(t.normalizer(), 2);
        assert_eq!(t.rank(0, 1), 1);
        assert_eq!(t.rank(1, 0), 1);
        assert_eq!(t.rank(2, 1), 1);
        for i in 0..3 {
            assert_eq!(t.rank(i, i), 0);
        }
    }

    #[test]
    fn bad_variant_columns_are_permutations() {
        let t = bad_variant_ranks(&three_point_matrix()).unwrap();
        assert_eq!(t.normalizer(), 2);
        for a in 0..3 {
            let mut col: Vec<u64> = (0..3).map(|i| t.rank(i, a)).collect();
            col.sort_unstable();
            assert_eq!(col, vec![1, 2, 3]);
        }
        // k = 1 objective value is (n+1)/(2(n-1)) = 1 for every medoid
        for a in 0..3 {
            assert_eq!(s_rank(&[a], &t).unwrap(), 1.0);
        }
    }

    #[test]
    fn bad_variant_constant_matches_closed_form() {
        for n in [4usize, 7, 23] {
            let data = Dataset::from_values(
                &(0..n).map(|i| (i * i) as f64 * 0.37 + i as f64).collect::<Vec<_>>(),
            )
            .unwrap();
            let d = pairwise_matrix(&data, Metric::L1);
            let t = bad_variant_ranks(&d).unwrap();
            let expected = (n as f64 + 1.0) / (2.0 * (n as f64 - 1.0));
            for a in 0..n {
                assert_eq!(s_rank(&[a], &t).unwrap(), expected, "n={n} a={a}");
            }
        }
    }

    #[test]
    fn s_rank_hand_example() {
        let t = quadruple_ranks(&three_point_matrix()).unwrap();
        // A = {x_2}: ranks 1, 0, 2 over normalizer 3 -> mean 1/3
        let v = s_rank(&[1], &t).unwrap();
        assert_eq!(v, 3.0 / 9.0);
        // all points: rank 0 each
        assert_eq!(s_rank(&[0, 1, 2], &t).unwrap(), 0.0);
        assert!(s_rank(&[], &t).is_err());
        assert!(s_rank(&[9], &t).is_err());
    }

    #[test]
    fn monotone_transform_leaves_tables_unchanged() {
        let d = three_point_matrix();
        let cubed = d.map(|t| t * t * t);
        assert_eq!(
            quadruple_ranks(&d).unwrap(),
            quadruple_ranks(&cubed).unwrap()
        );
        assert_eq!(triple_ranks(&d).unwrap(), triple_ranks(&cubed).unwrap());
        assert_eq!(
            bad_variant_ranks(&d).unwrap(),
            bad_variant_ranks(&cubed).unwrap()
        );
    }

    #[test]
    fn rank_table_rejects_tiny_matrices() {
        let one = DistanceMatrix::new(1, vec![0.0]).unwrap();
        assert!(quadruple_ranks(&one).is_err());
        assert!(triple_ranks(&one).is_err());
        assert!(bad_variant_ranks(&one).is_err());
    }

    #[test]
    fn empirical_pair_cdf_hand_example() {
        let cdf = empirical_pair_cdf(&three_point_matrix()).unwrap();
        assert_eq!(cdf.eval(2.0), 2.0 / 3.0);
        assert_eq!(cdf.eval(0.5), 0.0);
        assert_eq!(cdf.eval(3.0), 1.0);
        assert_eq!(cdf.eval(100.0), 1.0);
    }

    #[test]
    fn bridge_identities_are_exact() {
        let data = Dataset::from_values(&[0.0, 0.7, 1.9, 4.1, 4.15]).unwrap();
        let d = pairwise_matrix(&data, Metric::L1);
        let n = d.n();
        let quad = quadruple_ranks(&d).unwrap();
        let pair_cdf = empirical_pair_cdf(&d).unwrap();
        for i in 0..n {
            let row_cdf = empirical_row_cdf(&d, i).unwrap();
            let tri = triple_ranks(&d).unwrap();
            for a in 0..n {
                let lhs = quad.rank(i, a) as f64 / quad.normalizer() as f64;
                assert_eq!(lhs, pair_cdf.eval(d.get(i, a)), "quad bridge ({i},{a})");
                let lhs = tri.rank(i, a) as f64 / tri.normalizer() as f64;
                assert_eq!(lhs, row_cdf.eval(d.get(i, a)), "triple bridge ({i},{a})");
            }
        }
    }

    #[test]
    fn rank_table_csv_round_trip() {
        let t = quadruple_ranks(&three_point_matrix()).unwrap();
        let mut buf = Vec::new();
        t.to_csv_writer(&mut buf).unwrap();
        let back = RankTable::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(t, back);

        let bad_header = "quadruple,99\n0,1,3\n1,0,2\n3,2,0\n";
        assert!(RankTable::from_csv_reader(bad_header.as_bytes()).is_err());
    }

    #[test]
    fn population_pair_cdf_on_uniform() {
        let gen = GeneratorSpec::UniformBoxUnion {
            dimension: 1,
            boxes: vec![vec![(0.0, 1.0)]],
        };
        let cdf = population_pair_cdf_mc(&gen, Metric::L1, 20_000, 4).unwrap();
        // P(|X - X'| <= 0.5) = 0.75
        assert!((cdf.eval(0.5) - 0.75).abs() < 0.02);
        assert_eq!(cdf.eval(-0.1), 0.0);
        assert_eq!(cdf.eval(1.0), 1.0);
        // non-decreasing over a grid
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        for w in grid.windows(2) {
            assert!(cdf.eval(w[0]) <= cdf.eval(w[1]));
        }
        assert!(population_pair_cdf_mc(&gen, Metric::L1, 10, 4).is_err());
    }

    #[test]
    fn population_s_on_point_mass_is_one() {
        let gen = GeneratorSpec::UniformBoxUnion {
            dimension: 1,
            boxes: vec![vec![(0.25, 0.25)]],
        };
        let centers = vec![Point::from_slice(&[0.25]).unwrap()];
        for scheme in [RankScheme::Quadruple, RankScheme::Triple] {
            let est = population_s_mc(&centers, &gen, Metric::L1, scheme, 2000, 5).unwrap();
            assert_eq!(est.value, 1.0, "{scheme:?}");
            assert_eq!(est.stderr, 0.0);
        }
        assert!(
            population_s_mc(&centers, &gen, Metric::L1, RankScheme::BadVariant, 2000, 5).is_err()
        );
    }

    #[test]
    fn population_s_montotone_in_centers() {
        let gen = GeneratorSpec::two_gaussians(0.5, 0.1);
        let a = vec![Point::from_slice(&[-0.5, 0.0]).unwrap()];
        let ab = vec![
            Point::from_slice(&[-0.5, 0.0]).unwrap(),
            Point::from_slice(&[0.5, 0.0]).unwrap(),
        ];
        for scheme in [RankScheme::Quadruple, RankScheme::Triple] {
            let va = population_s_mc(&a, &gen, Metric::L2, scheme, 4000, 6).unwrap();
            let vab = population_s_mc(&ab, &gen, Metric::L2, scheme, 4000, 6).unwrap();
            assert!(vab.value <= va.value, "{scheme:?}");
            assert!(va.value >= 0.0 && va.value <= 1.0);
        }
    }
}
