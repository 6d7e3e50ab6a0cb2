//! Rank-based dependence estimators: Kendall's tau, the empirical upper
//! tail dependence coefficient and the empirical stable tail dependence
//! function.

use std::io::Read;
use std::path::Path;

use rayon::prelude::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{prim_max_tree, Tree, WeightMatrix};

/// `n × d` observations with per-column ranks.
///
/// Ranks are `1..=n` per column; ties are broken by row index, so the
/// earlier row gets the smaller rank.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    names: Vec<String>,
    /// Column-major values.
    columns: Vec<Vec<f64>>,
    /// Column-major ranks.
    ranks: Vec<Vec<u32>>,
}

fn column_ranks(col: &[f64]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..col.len()).collect();
    // sort_by is stable, so equal values keep row order.
    order.sort_by(|&i, &j| col[i].total_cmp(&col[j]));
    let mut ranks = vec![0u32; col.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = (r + 1) as u32;
    }
    ranks
}

impl SampleMatrix {
    /// Build from columns of equal length `n ≥ 2`; values must be finite.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let names = (1..=columns.len()).map(|v| format!("V{v}")).collect();
        Self::with_names(columns, names)
    }

    pub fn with_names(mut columns: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        // fold -0.0 into 0.0 so sorting and tie detection agree
        columns.iter_mut().flatten().for_each(|x| *x += 0.0);
        let d = columns.len();
        if d == 0 {
            return Err(Error::invalid("sample has no columns"));
        }
        if names.len() != d {
            return Err(Error::invalid("column name count does not match column count"));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("columns have different lengths"));
        }
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 observations, got {n}")));
        }
        for (v, c) in columns.iter().enumerate() {
            if let Some(i) = c.iter().position(|x| !x.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite value at row {}, column {}",
                    i + 1,
                    v + 1
                )));
            }
        }
        let ranks = columns.par_iter().map(|c| column_ranks(c)).collect();
        Ok(SampleMatrix { n, d, names, columns, ranks })
    }

    /// Build from observation rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("rows have different lengths"));
        }
        let columns = (0..d).map(|v| rows.iter().map(|r| r[v]).collect()).collect();
        Self::from_columns(columns)
    }

    /// Parse CSV with a header row of column names and one observation per
    /// row. Empty or non-numeric cells are rejected with their location.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if names.is_empty() {
            return Err(Error::Input("CSV header is empty".into()));
        }
        let mut columns = vec![Vec::new(); names.len()];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Input(format!("row {}: {e}", i + 2)))?;
            if rec.len() != names.len() {
                return Err(Error::Input(format!(
                    "row {}: expected {} fields, found {}",
                    i + 2,
                    names.len(),
                    rec.len()
                )));
            }
            for (v, field) in rec.iter().enumerate() {
                let x: f64 = field.parse().map_err(|_| {
                    Error::Input(format!("row {}, column '{}': cannot parse '{field}'", i + 2, names[v]))
                })?;
                if !x.is_finite() {
                    return Err(Error::Input(format!("row {}, column '{}': missing or non-finite value", i + 2, names[v])));
                }
                columns[v].push(x);
            }
        }
        Self::with_names(columns, names).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Input(m),
            other => other,
        })
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for i in 0..self.n {
            w.write_record(self.columns.iter().map(|c| format!("{}", c[i])))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Values of 1-based column `v`.
    pub fn column(&self, v: usize) -> &[f64] {
        &self.columns[v - 1]
    }

    /// Ranks of 1-based column `v`.
    pub fn ranks(&self, v: usize) -> &[u32] {
        &self.ranks[v - 1]
    }

    pub fn value(&self, row: usize, v: usize) -> f64 {
        self.columns[v - 1][row]
    }

    /// Keep only the given 1-based columns, in that order.
    pub fn select(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&v) = cols.iter().find(|&&v| v == 0 || v > self.d) {
            return Err(Error::invalid(format!("column {v} outside 1..={}", self.d)));
        }
        Self::with_names(
            cols.iter().map(|&v| self.columns[v - 1].clone()).collect(),
            cols.iter().map(|&v| self.names[v - 1].clone()).collect(),
        )
    }

    /// Apply `f(column, value)` to every entry.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64 + Sync) -> Result<Self> {
        let columns = self
            .columns
            .iter()
            .enumerate()
            .map(|(v, c)| c.iter().map(|&x| f(v + 1, x)).collect())
            .collect();
        Self::with_names(columns, self.names.clone())
    }

    /// Error if some column is constant, which makes every rank statistic
    /// meaningless.
    pub fn ensure_nondegenerate(&self) -> Result<()> {
        for (v, c) in self.columns.iter().enumerate() {
            if c.iter().all(|&x| x == c[0]) {
                return Err(Error::Input(format!("column '{}' ({}) is constant", self.names[v], v + 1)));
            }
        }
        Ok(())
    }
}

fn unordered_pairs(d: usize) -> Vec<(usize, usize)> {
    (1..=d).flat_map(|a| (a + 1..=d).map(move |b| (a, b))).collect()
}

/// Kendall's tau (tau-a, tied pairs count as 0) for two columns by
/// Knight's O(n log n) algorithm.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    assert_eq!(n, y.len());
    let n0 = (n as f64) * (n as f64 - 1.0) / 2.0;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(y[i].total_cmp(&y[j])));

    let tie_pairs = |len: u64| len * len.saturating_sub(1) / 2;
    let (mut n1, mut n3) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in 1..n {
        let (p, q) = (idx[w - 1], idx[w]);
        if x[p] == x[q] {
            run_x += 1;
            if y[p] == y[q] {
                run_xy += 1;
            } else {
                n3 += tie_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            n1 += tie_pairs(run_x);
            n3 += tie_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    n1 += tie_pairs(run_x);
    n3 += tie_pairs(run_xy);

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut n2 = 0u64;
    let mut run_y = 1u64;
    for w in 1..n {
        if ys[w] == ys[w - 1] {
            run_y += 1;
        } else {
            n2 += tie_pairs(run_y);
            run_y = 1;
        }
    }
    n2 += tie_pairs(run_y);

    let s = n0 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    s / n0
}

/// Sort `v` ascending, returning the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Pairwise Kendall's tau matrix with unit diagonal.
pub fn kendall_tau_matrix(sample: &SampleMatrix) -> Result<WeightMatrix> {
    let pairs = unordered_pairs(sample.d());
    let taus: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| kendall_tau(sample.column(a), sample.column(b)))
        .collect();
    let mut m = WeightMatrix::new(sample.d(), 1.0);
    for (&(a, b), t) in pairs.iter().zip(taus) {
        m.set(a, b, t);
    }
    Ok(m)
}

/// Empirical upper tail dependence coefficients: the fraction of the top
/// `k_lambda` ranks of column `a` that are also among the top `k_lambda`
/// of column `b`. Unit diagonal.
pub fn empirical_tdc_matrix(sample: &SampleMatrix, k_lambda: usize) -> Result<WeightMatrix> {
    let n = sample.n();
    if k_lambda == 0 || k_lambda > n {
        return Err(Error::invalid(format!("k_lambda = {k_lambda} outside 1..={n}")));
    }
    let cut = (n - k_lambda) as u32;
    let pairs = unordered_pairs(sample.d());
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let ra = sample.ranks(a);
            let rb = sample.ranks(b);
            let joint = ra.iter().zip(rb).filter(|(&x, &y)| x > cut && y > cut).count();
            (joint as f64 / k_lambda as f64).clamp(0.0, 1.0)
        })
        .collect();
    let mut m = WeightMatrix::new(sample.d(), 1.0);
    for (&(a, b), v) in pairs.iter().zip(vals) {
        m.set(a, b, v);
    }
    Ok(m)
}

/// Dependence measure used as edge weight when learning a tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWeight {
    Lambda,
    Tau,
}

impl std::str::FromStr for EdgeWeight {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lambda" | "tdc" => Ok(EdgeWeight::Lambda),
            "tau" | "kendall" => Ok(EdgeWeight::Tau),
            _ => Err(Error::invalid(format!("unknown edge weight '{s}' (expected lambda or tau)"))),
        }
    }
}

/// Weight matrix for `weight` (`k_lambda` only matters for λ).
pub fn dependence_weights(sample: &SampleMatrix, weight: EdgeWeight, k_lambda: usize) -> Result<WeightMatrix> {
    match weight {
        EdgeWeight::Lambda => empirical_tdc_matrix(sample, k_lambda),
        EdgeWeight::Tau => kendall_tau_matrix(sample),
    }
}

/// Maximum dependence tree of a sample together with its weight matrix.
pub fn learn_tree(sample: &SampleMatrix, weight: EdgeWeight, k_lambda: usize) -> Result<(Tree, WeightMatrix)> {
    if sample.d() < 2 {
        return Err(Error::invalid("learning a tree needs at least two columns"));
    }
    sample.ensure_nondegenerate()?;
    let w = dependence_weights(sample, weight, k_lambda)?;
    Ok((prim_max_tree(&w)?, w))
}

/// Number of reverse ranks `A = n + 1 − R` in `1..=n` with `A < k x + 1/2`.
fn exceed_count(n: usize, k: usize, x: f64) -> usize {
    let t = k as f64 * x + 0.5;
    if t <= 1.0 {
        return 0;
    }
    let m = (t.ceil() - 1.0).max(0.0);
    if m >= n as f64 {
        n
    } else {
        m as usize
    }
}

/// Empirical stdf of columns `(a, b)` at `x`, by direct count.
pub fn empirical_stdf(sample: &SampleMatrix, k: usize, coords: (usize, usize), x: (f64, f64)) -> Result<f64> {
    let (n, d) = (sample.n(), sample.d());
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} outside 1..={n}")));
    }
    let (a, b) = coords;
    if a == 0 || b == 0 || a > d || b > d {
        return Err(Error::invalid(format!("coordinates ({a}, {b}) outside 1..={d}")));
    }
    if !(x.0 >= 0.0 && x.1 >= 0.0 && x.0.is_finite() && x.1.is_finite()) {
        return Err(Error::invalid("stdf arguments must be finite and nonnegative"));
    }
    let ta = n as f64 + 0.5 - k as f64 * x.0;
    let tb = n as f64 + 0.5 - k as f64 * x.1;
    let count = sample
        .ranks(a)
        .iter()
        .zip(sample.ranks(b))
        .filter(|(&ra, &rb)| ra as f64 > ta || rb as f64 > tb)
        .count();
    Ok(count as f64 / k as f64)
}

/// Fast evaluator of the empirical stdf of one column pair.
///
/// With `m_a, m_b` the exceedance counts at `x`, the value is
/// `(m_a + m_b − C(m_a, m_b)) / k` where `C` counts rows exceeding in both
/// coordinates; `C` is tabulated as a 2-D cumulative table over the top
/// ranks reachable for arguments up to `x_max`.
#[derive(Debug, Clone)]
pub struct PairStdf {
    n: usize,
    k: usize,
    m: usize,
    /// `(m + 1)²` cumulative counts, row index = reverse rank of `a`.
    table: Vec<u32>,
    rev_a: Vec<u32>,
    rev_b: Vec<u32>,
}

impl PairStdf {
    pub fn new(sample: &SampleMatrix, k: usize, a: usize, b: usize, x_max: f64) -> Result<Self> {
        let n = sample.n();
        if k == 0 || k > n {
            return Err(Error::invalid(format!("k = {k} outside 1..={n}")));
        }
        let rev = |v: usize| -> Vec<u32> { sample.ranks(v).iter().map(|&r| n as u32 + 1 - r).collect() };
        let rev_a = rev(a);
        let rev_b = rev(b);
        let m = exceed_count(n, k, x_max.max(0.0));
        let w = m + 1;
        let mut table = vec![0u32; w * w];
        for (&ra, &rb) in rev_a.iter().zip(&rev_b) {
            if (ra as usize) <= m && (rb as usize) <= m {
                table[ra as usize * w + rb as usize] += 1;
            }
        }
        for i in 0..w {
            for j in 0..w {
                let mut s = table[i * w + j];
                if i > 0 {
                    s += table[(i - 1) * w + j];
                }
                if j > 0 {
                    s += table[i * w + j - 1];
                }
                if i > 0 && j > 0 {
                    s -= table[(i - 1) * w + j - 1];
                }
                table[i * w + j] = s;
            }
        }
        Ok(PairStdf { n, k, m, table, rev_a, rev_b })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Points in `(0, upper)` where the exceedance count of one coordinate
    /// jumps; `ℓ̂` is constant on the cells they cut out.
    pub fn breakpoints(&self, upper: f64) -> Vec<f64> {
        (1..=self.n).map(|a| (a as f64 - 0.5) / self.k as f64).take_while(|&c| c < upper).collect()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let ma = exceed_count(self.n, self.k, x.max(0.0));
        let mb = exceed_count(self.n, self.k, y.max(0.0));
        let joint = if ma <= self.m && mb <= self.m {
            self.table[ma * (self.m + 1) + mb] as usize
        } else {
            self.rev_a
                .iter()
                .zip(&self.rev_b)
                .filter(|(&ra, &rb)| ra as usize <= ma && rb as usize <= mb)
                .count()
        };
        (ma + mb - joint) as f64 / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kendall_quadratic(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let sx = (x[i] - x[j]).partial_cmp(&0.0).unwrap() as i32 as f64;
                let sy = (y[i] - y[j]).partial_cmp(&0.0).unwrap() as i32 as f64;
                s += sx * sy;
            }
        }
        2.0 * s / (n as f64 * (n as f64 - 1.0))
    }

    fn sample2(a: &[f64], b: &[f64]) -> SampleMatrix {
        SampleMatrix::from_columns(vec![a.to_vec(), b.to_vec()]).unwrap()
    }

    #[test]
    fn ranks_break_ties_by_row() {
        let s = sample2(&[3.0, 1.0, 3.0, 2.0], &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.ranks(1), &[3, 1, 4, 2]);
        assert_eq!(s.ranks(2), &[1, 2, 3, 4]);
        assert!(s.ensure_nondegenerate().is_err());
    }

    #[test]
    fn tau_examples() {
        let t = |a: &[f64], b: &[f64]| kendall_tau_matrix(&sample2(a, b)).unwrap().get(1, 2);
        assert_eq!(t(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
        assert_eq!(t(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        assert!((t(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!(SampleMatrix::from_columns(vec![vec![1.0], vec![2.0]]).is_err());
    }

    proptest! {
        #[test]
        fn tau_matches_quadratic_oracle(
            pairs in prop::collection::vec((0i32..8, 0i32..8), 2..500)
        ) {
            // small integer support forces many ties
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            prop_assert!((kendall_tau(&x, &y) - kendall_quadratic(&x, &y)).abs() < 1e-12);
        }

        #[test]
        fn rank_statistics_are_invariant_under_monotone_maps(
            xs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 20..200)
        ) {
            let s = SampleMatrix::from_rows(&xs.iter().map(|p| vec![p.0, p.1]).collect::<Vec<_>>()).unwrap();
            let t = s.map_values(|v, x| if v == 1 { x.exp() } else { x * x * x + 3.0 * x }).unwrap();
            prop_assert_eq!(kendall_tau_matrix(&s).unwrap(), kendall_tau_matrix(&t).unwrap());
            let k = s.n() / 5 + 1;
            prop_assert_eq!(empirical_tdc_matrix(&s, k).unwrap(), empirical_tdc_matrix(&t, k).unwrap());
            for &p in &[(0.3, 0.9), (1.0, 1.0), (1.7, 0.2)] {
                prop_assert_eq!(empirical_stdf(&s, k, (1, 2), p).unwrap(), empirical_stdf(&t, k, (1, 2), p).unwrap());
            }
        }

        #[test]
        fn pair_stdf_matches_direct_count(
            xs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 10..300),
            x in 0.0f64..3.0, y in 0.0f64..3.0, kf in 0.05f64..0.9
        ) {
            let s = SampleMatrix::from_rows(&xs.iter().map(|p| vec![p.0, p.1]).collect::<Vec<_>>()).unwrap();
            let k = ((s.n() as f64 * kf) as usize).max(1);
            let fast = PairStdf::new(&s, k, 1, 2, 2.0).unwrap();
            prop_assert_eq!(fast.eval(x, y), empirical_stdf(&s, k, (1, 2), (x, y)).unwrap());
        }

        #[test]
        fn stdf_and_tdc_agree_at_unit_point(
            xs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 10..300), kf in 0.05f64..0.9
        ) {
            let s = SampleMatrix::from_rows(&xs.iter().map(|p| vec![p.0, p.1]).collect::<Vec<_>>()).unwrap();
            let k = ((s.n() as f64 * kf) as usize).max(1);
            let l = empirical_stdf(&s, k, (1, 2), (1.0, 1.0)).unwrap();
            let lam = empirical_tdc_matrix(&s, k).unwrap().get(1, 2);
            prop_assert!(((2.0 - l) - lam).abs() <= 2.0 / k as f64);
        }
    }

    #[test]
    fn tdc_examples() {
        let up: Vec<f64> = (1..=10).map(f64::from).collect();
        let down: Vec<f64> = up.iter().rev().copied().collect();
        for k in 1..=10 {
            assert_eq!(empirical_tdc_matrix(&sample2(&up, &up), k).unwrap().get(1, 2), 1.0);
        }
        for k in 1..=5 {
            assert_eq!(empirical_tdc_matrix(&sample2(&up, &down), k).unwrap().get(1, 2), 0.0);
        }
        let s = sample2(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 3.0]);
        assert_eq!(empirical_tdc_matrix(&s, 2).unwrap().get(1, 2), 1.0);
        assert!(empirical_tdc_matrix(&s, 0).is_err());
        assert!(empirical_tdc_matrix(&s, 5).is_err());
    }

    #[test]
    fn stdf_examples() {
        let a = [0.3, 2.0, 1.1, 0.7, 5.0, 4.2, 0.1, 3.3, 2.9, 0.5];
        let b = [1.0, 0.2, 3.0, 0.4, 2.2, 0.9, 4.4, 0.3, 5.5, 1.7];
        let s = sample2(&a, &b);
        assert_eq!(empirical_stdf(&s, 3, (1, 2), (0.0, 0.0)).unwrap(), 0.0);
        // 0-based top-3 rows: a -> {4,5,7}, b -> {2,6,8}; the union has 6 rows
        let v = empirical_stdf(&s, 3, (1, 2), (1.0, 1.0)).unwrap();
        assert!((v - 6.0 / 3.0).abs() < 1e-15);
        assert!(v >= 1.0 && v <= 2.0);

        let up: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(empirical_stdf(&sample2(&up, &up), 5, (1, 2), (1.0, 1.0)).unwrap(), 1.0);
    }

    #[test]
    fn csv_ingestion() {
        let s = SampleMatrix::from_csv_reader("x,y\n1,2\n3,4\n5,0.5\n".as_bytes()).unwrap();
        assert_eq!(s.names(), &["x", "y"]);
        assert_eq!(s.column(2), &[2.0, 4.0, 0.5]);
        let err = SampleMatrix::from_csv_reader("x,y\n1,2\n3,\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Input(ref m) if m.contains("row 3")), "{err}");
        assert!(SampleMatrix::from_csv_reader("x,y\n1,2\n3\n".as_bytes()).is_err());
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        assert_eq!(SampleMatrix::from_csv_reader(out.as_slice()).unwrap(), s);
    }
}
