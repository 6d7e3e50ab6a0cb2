//! Univariate margins: declustering of daily series into events, empirical
//! quantiles, GPD fits of threshold excesses and the hybrid
//! empirical/GPD distribution function.

use std::io::Read;
use std::ops::Range;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::depmeasures::SampleMatrix;
use crate::error::{Error, Result};
use crate::treemodel::MarginalCdf;

pub const DEFAULT_WINDOW: usize = 9;
pub const DEFAULT_THRESHOLD_P: f64 = 0.9;
/// Admissible GPD shapes.
pub const SHAPE_RANGE: (f64, f64) = (-0.99, 5.0);
const MIN_EXCESSES: usize = 10;

/// Order-statistic quantile: the `ceil(n p)`-th smallest value.
pub fn empirical_quantile(values: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("quantile level {p} outside (0, 1)")));
    }
    if values.is_empty() {
        return Err(Error::invalid("empirical quantile of an empty vector"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((v.len() as f64 * p - 1e-9).ceil() as usize).clamp(1, v.len());
    Ok(v[idx - 1])
}

/// Maximum-likelihood GPD parameters of a set of excesses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdMle {
    pub sigma: f64,
    pub shape: f64,
    pub log_likelihood: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// GPD log-likelihood of `excesses`; `-inf` outside the support.
pub fn gpd_log_likelihood(excesses: &[f64], sigma: f64, shape: f64) -> f64 {
    if sigma <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n = excesses.len() as f64;
    if shape.abs() < 1e-12 {
        return -n * sigma.ln() - excesses.iter().sum::<f64>() / sigma;
    }
    let mut s = 0.0;
    for &x in excesses {
        let t = shape * x / sigma;
        if t <= -1.0 {
            return f64::NEG_INFINITY;
        }
        s += t.ln_1p();
    }
    -n * sigma.ln() - (1.0 + 1.0 / shape) * s
}

/// Profile over `θ = ϑ/σ`: `ϑ(θ) = mean log(1+θx)`, `σ = ϑ/θ`.
fn profile(excesses: &[f64], theta: f64) -> (f64, f64, f64) {
    let n = excesses.len() as f64;
    let x_max = excesses.iter().copied().fold(0.0, f64::max);
    let (s, ratio) = if (theta * x_max).abs() < 1e-8 {
        // S/θ to second order
        let s1: f64 = excesses.iter().sum();
        let s2: f64 = excesses.iter().map(|x| x * x).sum();
        (theta * s1 - theta * theta * s2 / 2.0, s1 - theta * s2 / 2.0)
    } else {
        let s: f64 = excesses.iter().map(|&x| (theta * x).ln_1p()).sum();
        (s, s / theta)
    };
    let shape = s / n;
    let sigma = ratio / n;
    (shape, sigma, -n * sigma.ln() - s - n)
}

/// GPD maximum likelihood by a scan and golden-section refinement of the
/// profile likelihood in `θ`.
pub fn gpd_fit_mle(excesses: &[f64]) -> Result<GpdMle> {
    if excesses.len() < MIN_EXCESSES {
        return Err(Error::invalid(format!("need at least {MIN_EXCESSES} excesses, got {}", excesses.len())));
    }
    if let Some(x) = excesses.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid(format!("excesses must be positive and finite, found {x}")));
    }
    let x_max = excesses.iter().copied().fold(0.0, f64::max);
    let x_min = excesses.iter().copied().fold(f64::INFINITY, f64::min);
    if x_max - x_min <= 1e-12 * x_max {
        return Err(Error::estimation("all excesses are equal: degenerate GPD likelihood"));
    }
    let objective = |s: f64| -> f64 {
        let theta = s.exp_m1() / x_max;
        let (shape, sigma, ll) = profile(excesses, theta);
        if shape > SHAPE_RANGE.0 && shape < SHAPE_RANGE.1 && sigma > 0.0 && ll.is_finite() {
            ll
        } else {
            f64::NEG_INFINITY
        }
    };
    let (lo, hi) = (-30.0, 30.0);
    let n_scan = 601;
    let grid: Vec<f64> = (0..n_scan).map(|i| lo + (hi - lo) * i as f64 / (n_scan - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| objective(s)).collect();
    let best = (0..n_scan).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    if !vals[best].is_finite() {
        return Err(Error::estimation("no admissible GPD parameters"));
    }
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n_scan - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (objective(c), objective(d));
    let mut evals = n_scan + 2;
    while b - a > 1e-12 && evals < 5000 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = objective(d);
        }
        evals += 1;
    }
    let mut s = if fc > fd { c } else { d };
    if vals[best] > objective(s) {
        s = grid[best];
    }
    let theta = s.exp_m1() / x_max;
    let (shape, sigma, ll) = profile(excesses, theta);
    let converged = best != 0 && best != n_scan - 1 && ll.is_finite();
    if !converged {
        return Err(Error::estimation(format!(
            "GPD likelihood maximum at the edge of the search range (shape {shape:.4}, sigma {sigma:.4})"
        )));
    }
    Ok(GpdMle { sigma, shape, log_likelihood: ll, evaluations: evals, converged })
}

/// GPD tail fit above an empirical threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub threshold: f64,
    /// Fraction of observations strictly above the threshold.
    pub exceed_fraction: f64,
    pub sigma: f64,
    pub shape: f64,
}

impl GpdFit {
    /// Fit the excesses of `values` over their empirical `p`-quantile.
    pub fn fit(values: &[f64], p: f64) -> Result<Self> {
        let q = empirical_quantile(values, p)?;
        let excesses: Vec<f64> = values.iter().filter(|&&x| x > q).map(|&x| x - q).collect();
        let mle = gpd_fit_mle(&excesses)?;
        Ok(GpdFit {
            threshold: q,
            exceed_fraction: excesses.len() as f64 / values.len() as f64,
            sigma: mle.sigma,
            shape: mle.shape,
        })
    }

    /// `P(X > x)` for `x ≥ threshold`.
    pub fn tail_prob(&self, x: f64) -> Result<f64> {
        if !(x >= self.threshold) {
            return Err(Error::invalid(format!(
                "x = {x} below the threshold {}; use the empirical distribution there",
                self.threshold
            )));
        }
        Ok(self.exceed_fraction * gpd_survival(x - self.threshold, self.sigma, self.shape))
    }
}

/// GPD survival function `(1 + ϑz/σ)^(−1/ϑ)`.
pub fn gpd_survival(z: f64, sigma: f64, shape: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    if shape.abs() < 1e-12 {
        return (-z / sigma).exp();
    }
    let t = shape * z / sigma;
    if t <= -1.0 {
        return 0.0;
    }
    (-(t.ln_1p()) / shape).exp()
}

pub fn tail_prob(fit: &GpdFit, x: f64) -> Result<f64> {
    fit.tail_prob(x)
}

/// Empirical CDF below the threshold, GPD tail above it.
#[derive(Debug, Clone)]
pub struct HybridMargin {
    sorted: Vec<f64>,
    fit: GpdFit,
}

impl HybridMargin {
    pub fn new(values: &[f64], fit: GpdFit) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("hybrid margin needs observations"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(HybridMargin { sorted, fit })
    }

    pub fn fit(values: &[f64], p: f64) -> Result<Self> {
        Self::new(values, GpdFit::fit(values, p)?)
    }

    pub fn gpd(&self) -> &GpdFit {
        &self.fit
    }

    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }
}

impl MarginalCdf for HybridMargin {
    fn cdf(&self, x: f64) -> f64 {
        if x >= self.fit.threshold {
            1.0 - self.fit.tail_prob(x).expect("x above threshold")
        } else {
            self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
        }
    }
}

/// One row of a mean-residual-life table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrlRow {
    pub p: f64,
    pub threshold: f64,
    pub mean_excess: f64,
    pub n_exceed: usize,
}

pub fn mean_residual_life(values: &[f64], levels: &[f64]) -> Result<Vec<MrlRow>> {
    levels
        .iter()
        .map(|&p| {
            let q = empirical_quantile(values, p)?;
            let ex: Vec<f64> = values.iter().filter(|&&x| x > q).map(|&x| x - q).collect();
            let mean_excess = if ex.is_empty() { f64::NAN } else { ex.iter().sum::<f64>() / ex.len() as f64 };
            Ok(MrlRow { p, threshold: q, mean_excess, n_exceed: ex.len() })
        })
        .collect()
}

/// Daily observations of several stations.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub dates: Vec<NaiveDate>,
    pub names: Vec<String>,
    /// One vector per station.
    pub values: Vec<Vec<f64>>,
}

impl DailySeries {
    pub fn new(dates: Vec<NaiveDate>, names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != values.len() || values.iter().any(|v| v.len() != dates.len()) {
            return Err(Error::invalid("daily series columns do not match the date index"));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("dates must be strictly increasing".into()));
        }
        Ok(DailySeries { dates, names, values })
    }

    /// CSV with header `date,<station>,…` and ISO dates.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
            return Err(Error::Input("daily CSV header must be 'date,<station>,...'".into()));
        }
        let names = header[1..].to_vec();
        let mut dates = Vec::new();
        let mut values = vec![Vec::new(); names.len()];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Input(format!("row {}: {e}", i + 2)))?;
            if rec.len() != header.len() {
                return Err(Error::Input(format!("row {}: expected {} fields, found {}", i + 2, header.len(), rec.len())));
            }
            let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
                .map_err(|e| Error::Input(format!("row {}: bad date '{}': {e}", i + 2, &rec[0])))?;
            dates.push(date);
            for (v, field) in rec.iter().skip(1).enumerate() {
                let x: f64 = field
                    .parse()
                    .ok()
                    .filter(|x: &f64| x.is_finite())
                    .ok_or_else(|| Error::Input(format!("row {}, column '{}': cannot parse '{field}'", i + 2, names[v])))?;
                values[v].push(x);
            }
        }
        Self::new(dates, names, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Maximal runs of consecutive days within one year whose month is in
    /// `months` (all months when empty).
    pub fn periods(&self, months: &[u32]) -> Vec<Range<usize>> {
        let keep = |d: &NaiveDate| months.is_empty() || months.contains(&d.month());
        let mut out = Vec::new();
        let mut start: Option<usize> = None;
        for i in 0..self.dates.len() {
            let continues = start.is_some() && {
                let prev = self.dates[i - 1];
                self.dates[i].year() == prev.year() && (self.dates[i] - prev).num_days() == 1
            };
            match (keep(&self.dates[i]), start) {
                (true, Some(_)) if continues => {}
                (true, _) => {
                    if let Some(s) = start {
                        out.push(s..i);
                    }
                    start = Some(i);
                }
                (false, Some(s)) => {
                    out.push(s..i);
                    start = None;
                }
                (false, None) => {}
            }
        }
        if let Some(s) = start {
            out.push(s..self.dates.len());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclusterMode {
    Multivariate,
    Univariate,
}

/// A window event within one period; indices are relative to the period.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEvent {
    pub peak: usize,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    /// Window maximum of each series.
    pub values: Vec<f64>,
}

/// Greedy declustering of one period. Each step picks the highest-ranked
/// remaining day over all `series` (earliest day on ties) among days that
/// still sit in a gap of at least `window` days, places a `window`-day
/// window centred on it (shifted to stay inside the gap), records the
/// per-series maxima and deletes the window.
pub fn decluster_period(series: &[&[f64]], window: usize) -> Result<Vec<WindowEvent>> {
    if window == 0 {
        return Err(Error::invalid("window must be at least 1"));
    }
    let len = series.first().map_or(0, |s| s.len());
    if series.iter().any(|s| s.len() != len) {
        return Err(Error::invalid("series of one period must have equal length"));
    }
    // rank = #values ≤ x, so tied values share a rank
    let ranks: Vec<Vec<usize>> = series
        .iter()
        .map(|s| {
            let mut sorted = s.to_vec();
            sorted.sort_by(f64::total_cmp);
            s.iter().map(|&x| sorted.partition_point(|&v| v <= x)).collect()
        })
        .collect();
    let best_rank: Vec<usize> = (0..len).map(|t| ranks.iter().map(|r| r[t]).max().unwrap_or(0)).collect();
    let mut free = vec![true; len];
    let mut events = Vec::new();
    loop {
        let mut gaps = Vec::new();
        let mut t = 0;
        while t < len {
            if free[t] {
                let s = t;
                while t < len && free[t] {
                    t += 1;
                }
                if t - s >= window {
                    gaps.push(s..t);
                }
            } else {
                t += 1;
            }
        }
        let pick = gaps
            .iter()
            .flat_map(|g| g.clone().map(move |t| (t, g.clone())))
            .max_by(|(a, _), (b, _)| best_rank[*a].cmp(&best_rank[*b]).then(b.cmp(a)));
        let Some((peak, gap)) = pick else { break };
        let half = (window - 1) / 2;
        let start = peak.saturating_sub(half).max(gap.start).min(gap.end - window);
        let end = start + window;
        let values = series.iter().map(|s| s[start..end].iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        free[start..end].iter_mut().for_each(|f| *f = false);
        events.push(WindowEvent { peak, start, end, values });
    }
    events.sort_by_key(|e| e.start);
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub date: NaiveDate,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub values: Vec<f64>,
}

/// Declustered events. Multivariate mode gives one list whose events hold
/// a value per station; univariate mode gives one single-valued list per
/// station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSeries {
    pub names: Vec<String>,
    pub mode: DeclusterMode,
    pub events: Vec<Vec<Event>>,
    /// Indices of periods skipped because they were empty.
    pub skipped_periods: Vec<usize>,
}

impl EventSeries {
    /// Event values of the multivariate list as a sample.
    pub fn to_sample(&self) -> Result<SampleMatrix> {
        if self.mode != DeclusterMode::Multivariate {
            return Err(Error::invalid("only multivariate events form a joint sample"));
        }
        let d = self.names.len();
        let cols = (0..d).map(|v| self.events[0].iter().map(|e| e.values[v]).collect()).collect();
        SampleMatrix::with_names(cols, self.names.clone())
    }

    /// Event values of station `v` (1-based).
    pub fn station_values(&self, v: usize) -> Vec<f64> {
        match self.mode {
            DeclusterMode::Multivariate => self.events[0].iter().map(|e| e.values[v - 1]).collect(),
            DeclusterMode::Univariate => self.events[v - 1].iter().map(|e| e.values[0]).collect(),
        }
    }
}

pub fn decluster(series: &DailySeries, periods: &[Range<usize>], window: usize, mode: DeclusterMode) -> Result<EventSeries> {
    let d = series.names.len();
    let lists = match mode {
        DeclusterMode::Multivariate => 1,
        DeclusterMode::Univariate => d,
    };
    let mut events = vec![Vec::new(); lists];
    let mut skipped = Vec::new();
    for (pi, range) in periods.iter().enumerate() {
        if range.is_empty() {
            skipped.push(pi);
            continue;
        }
        let slices: Vec<&[f64]> = series.values.iter().map(|v| &v[range.clone()]).collect();
        let groups: Vec<Vec<&[f64]>> = match mode {
            DeclusterMode::Multivariate => vec![slices],
            DeclusterMode::Univariate => slices.into_iter().map(|s| vec![s]).collect(),
        };
        for (list, group) in events.iter_mut().zip(groups) {
            for w in decluster_period(&group, window)? {
                let at = |i: usize| series.dates[range.start + i];
                list.push(Event { date: at(w.peak), start: at(w.start), end: at(w.end - 1), values: w.values });
            }
        }
    }
    Ok(EventSeries { names: series.names.clone(), mode, events, skipped_periods: skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Exp};

    #[test]
    fn quantile_examples() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(empirical_quantile(&v, 0.9).unwrap(), 9.0);
        let w: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(empirical_quantile(&w, 0.95).unwrap(), 95.0);
        for p in [0.01, 0.5, 0.99] {
            assert_eq!(empirical_quantile(&[3.5], p).unwrap(), 3.5);
        }
        assert!(empirical_quantile(&v, 1.0).is_err());
        assert!(empirical_quantile(&v, 0.0).is_err());
    }

    fn gpd_sample(n: usize, sigma: f64, shape: f64, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::substream(seed, 0);
        (0..n)
            .map(|_| {
                let u: f64 = 1.0 - rng.random::<f64>();
                if shape == 0.0 { -sigma * u.ln() } else { sigma * (u.powf(-shape) - 1.0) / shape }
            })
            .collect()
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    #[test]
    fn mle_recovers_exponential() {
        let fits: Vec<GpdMle> = (0..20)
            .map(|r| {
                let mut rng = crate::rng::substream(100 + r, 0);
                let x: Vec<f64> = (0..10_000).map(|_| Exp::new(1.0).unwrap().sample(&mut rng)).collect();
                gpd_fit_mle(&x).unwrap()
            })
            .collect();
        let shape = median(fits.iter().map(|f| f.shape).collect());
        let sigma = median(fits.iter().map(|f| f.sigma).collect());
        assert!(shape.abs() <= 0.05 && (sigma - 1.0).abs() <= 0.05, "{shape} {sigma}");
    }

    #[test]
    fn mle_recovers_gpd() {
        let fits: Vec<GpdMle> = (0..20).map(|r| gpd_fit_mle(&gpd_sample(10_000, 2.0, 0.2, 200 + r)).unwrap()).collect();
        let shape = median(fits.iter().map(|f| f.shape).collect());
        let sigma = median(fits.iter().map(|f| f.sigma).collect());
        assert!((shape - 0.2).abs() <= 0.05 && (sigma - 2.0).abs() <= 0.05, "{shape} {sigma}");
    }

    #[test]
    fn mle_beats_random_parameters() {
        for (shape, seed) in [(-0.3, 1), (0.0, 2), (0.5, 3)] {
            let x = gpd_sample(500, 1.5, shape, seed);
            let fit = gpd_fit_mle(&x).unwrap();
            assert!((fit.log_likelihood - gpd_log_likelihood(&x, fit.sigma, fit.shape)).abs() < 1e-6 * fit.log_likelihood.abs());
            let mut rng = crate::rng::substream(seed, 1);
            for _ in 0..50 {
                let s = rng.random_range(0.1..5.0);
                let k = rng.random_range(SHAPE_RANGE.0..SHAPE_RANGE.1);
                assert!(gpd_log_likelihood(&x, s, k) <= fit.log_likelihood + 1e-9);
            }
            // local optimality
            for (ds, dk) in [(1e-4, 0.0), (-1e-4, 0.0), (0.0, 1e-4), (0.0, -1e-4)] {
                assert!(gpd_log_likelihood(&x, fit.sigma + ds, fit.shape + dk) <= fit.log_likelihood + 1e-9);
            }
        }
    }

    #[test]
    fn mle_errors() {
        assert!(matches!(gpd_fit_mle(&[1.0; 9]), Err(Error::InvalidArgument(_))));
        let mut x = vec![1.0; 12];
        assert!(gpd_fit_mle(&x).unwrap_err().is_estimation_failure());
        x[3] = 0.0;
        assert!(matches!(gpd_fit_mle(&x), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn tail_prob_examples() {
        let fit = GpdFit { threshold: 10.0, exceed_fraction: 0.1, sigma: 3.0, shape: 0.0 };
        assert_eq!(fit.tail_prob(10.0).unwrap(), 0.1);
        assert!((fit.tail_prob(10.0 + 3.0 * 2f64.ln()).unwrap() - 0.05).abs() < 1e-15);
        assert!(fit.tail_prob(9.0).is_err());
        let neg = GpdFit { shape: -0.5, ..fit };
        assert_eq!(neg.tail_prob(10.0 + 6.0 + 1.0).unwrap(), 0.0);
        let mut prev = 1.0;
        for i in 0..100 {
            let p = GpdFit { shape: 0.3, ..fit }.tail_prob(10.0 + i as f64 * 0.5).unwrap();
            assert!(p < prev || i == 0);
            prev = p;
        }
    }

    #[test]
    fn hybrid_margin_is_continuous_at_threshold() {
        let x = gpd_sample(2000, 1.0, 0.1, 7);
        let m = HybridMargin::fit(&x, 0.9).unwrap();
        let q = m.gpd().threshold;
        let below = m.cdf(q - 1e-12);
        let at = m.cdf(q);
        assert!((at - (1.0 - m.gpd().exceed_fraction)).abs() < 1e-15);
        assert!((below - at).abs() <= 1.0 / 2000.0 + 1e-12);
        assert!(m.cdf(q + 1.0) > at && m.cdf(q + 1.0) < 1.0);
    }

    #[test]
    fn decreasing_period_gives_two_events() {
        let s: Vec<f64> = (0..18).map(|t| 100.0 - t as f64).collect();
        let ev = decluster_period(&[&s], 9).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].peak, ev[0].start, ev[0].values[0]), (0, 0, 100.0));
        assert_eq!((ev[1].peak, ev[1].start, ev[1].values[0]), (9, 9, 91.0));
    }

    #[test]
    fn constant_and_short_periods() {
        let c = vec![5.0; 30];
        let ev = decluster_period(&[&c], 9).unwrap();
        assert_eq!(ev.len(), 3);
        assert!(ev.iter().all(|e| e.values[0] == 5.0));
        assert_eq!(ev.iter().map(|e| e.start).collect::<Vec<_>>(), vec![0, 9, 18]);
        assert!(decluster_period(&[&c[..8]], 9).unwrap().is_empty());
    }

    #[test]
    fn events_are_window_maxima_and_disjoint() {
        let mut rng = crate::rng::substream(11, 0);
        for len in [9usize, 40, 92, 150] {
            let a: Vec<f64> = (0..len).map(|_| rng.random()).collect();
            let b: Vec<f64> = (0..len).map(|_| rng.random()).collect();
            let ev = decluster_period(&[&a, &b], 9).unwrap();
            assert!(ev.len() <= len.div_ceil(9));
            for w in ev.windows(2) {
                assert!(w[1].start >= w[0].end);
            }
            for e in &ev {
                assert_eq!(e.end - e.start, 9);
                assert!(e.peak >= e.start && e.peak < e.end);
                assert_eq!(e.values[0], a[e.start..e.end].iter().copied().fold(f64::MIN, f64::max));
                assert_eq!(e.values[1], b[e.start..e.end].iter().copied().fold(f64::MIN, f64::max));
            }
            // no gap of 9 free days is left
            let mut free = vec![true; len];
            for e in &ev {
                free[e.start..e.end].iter_mut().for_each(|f| *f = false);
            }
            let longest = free.split(|f| !f).map(|r| r.len()).max().unwrap_or(0);
            assert!(longest < 9);
        }
    }

    #[test]
    fn daily_csv_and_periods() {
        let mut csv = String::from("date,station_1,station_2\n");
        let start = NaiveDate::from_ymd_opt(2000, 5, 25).unwrap();
        let mut day = start;
        for i in 0..500 {
            csv.push_str(&format!("{},{},{}\n", day.format("%Y-%m-%d"), i as f64, (i % 7) as f64));
            day = day.succ_opt().unwrap();
        }
        let s = DailySeries::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(s.len(), 500);
        let p = s.periods(&[6, 7, 8]);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].len(), 92);
        assert_eq!(s.dates[p[0].start], NaiveDate::from_ymd_opt(2000, 6, 1).unwrap());
        assert_eq!(s.dates[p[1].start], NaiveDate::from_ymd_opt(2001, 6, 1).unwrap());
        let ev = decluster(&s, &p, 9, DeclusterMode::Multivariate).unwrap();
        assert_eq!(ev.events.len(), 1);
        let uni = decluster(&s, &p, 9, DeclusterMode::Univariate).unwrap();
        assert_eq!(uni.events.len(), 2);
        assert_eq!(ev.to_sample().unwrap().d(), 2);
        assert!(DailySeries::from_csv_reader("date,a\n2000-01-01,x\n".as_bytes()).is_err());
        assert!(DailySeries::from_csv_reader("day,a\n2000-01-01,1\n".as_bytes()).is_err());
        let mrl = mean_residual_life(&s.values[0], &[0.5, 0.9]).unwrap();
        assert!(mrl[0].mean_excess > mrl[1].mean_excess);
    }
}
