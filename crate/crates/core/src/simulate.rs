//! Exact samplers for max-stable data-generating processes, Fréchet noise,
//! the convolution oracle for the joint CDF of noisy samples, error
//! metrics, and the replication harness of the simulation study.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depmeasures::{empirical_tdc_matrix, learn_tree, EdgeWeight, SampleMatrix};
use crate::error::{Error, Result};
use crate::estimators::{fit_tree_model, EstimatorConfig};
use crate::graph::{tree_weight_sum, Tree, WeightMatrix};
use crate::margins::empirical_quantile;
use crate::normal;
use crate::quadrature::{cubature, integrate};
use crate::rng;
use crate::treemodel::{approximation_error_d, hr_stdf_closed, rare_event_probability, MarginSet, TreeModel};

pub const DEFAULT_NOISE_SHAPE: f64 = 2.0;

fn unit_frechet<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    -1.0 / u.ln()
}

/// Data-generating distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    HuslerReiss { gamma: Vec<Vec<f64>> },
    AsymLogistic { psi: Vec<f64> },
}

impl Generator {
    pub fn husler_reiss(gamma: &WeightMatrix) -> Self {
        Generator::HuslerReiss { gamma: gamma.rows() }
    }

    pub fn asym_logistic(psi: &[f64]) -> Self {
        Generator::AsymLogistic { psi: psi.to_vec() }
    }

    pub fn d(&self) -> usize {
        match self {
            Generator::HuslerReiss { gamma } => gamma.len(),
            Generator::AsymLogistic { psi } => psi.len(),
        }
    }

    pub fn gamma(&self) -> Option<WeightMatrix> {
        match self {
            Generator::HuslerReiss { gamma } => WeightMatrix::from_rows(gamma).ok(),
            Generator::AsymLogistic { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Generator::HuslerReiss { gamma } => check_variogram(&WeightMatrix::from_rows(gamma)?),
            Generator::AsymLogistic { psi } => check_psi(psi),
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleMatrix> {
        match self {
            Generator::HuslerReiss { gamma } => sample_husler_reiss(&WeightMatrix::from_rows(gamma)?, n, seed),
            Generator::AsymLogistic { psi } => sample_asym_logistic(psi, n, seed),
        }
    }

    /// Stable tail dependence function of the generator.
    pub fn stdf(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.d() {
            return Err(Error::invalid(format!("argument has length {}, expected {}", y.len(), self.d())));
        }
        match self {
            Generator::HuslerReiss { gamma } => hr_stdf_closed(&WeightMatrix::from_rows(gamma)?, y),
            Generator::AsymLogistic { psi } => Ok(alog_stdf(psi, y)),
        }
    }

    /// Pairwise tail dependence coefficients.
    pub fn lambda_matrix(&self) -> Result<WeightMatrix> {
        match self {
            Generator::HuslerReiss { gamma } => {
                let g = WeightMatrix::from_rows(gamma)?;
                Ok(WeightMatrix::from_fn(g.dim(), 1.0, |a, b| 2.0 * normal::sf(g.get(a, b).sqrt() / 2.0)))
            }
            Generator::AsymLogistic { psi } => {
                Ok(WeightMatrix::from_fn(psi.len(), 1.0, |a, b| psi[a - 1].min(psi[b - 1])))
            }
        }
    }

    /// Tree model whose edges carry the generator's bivariate margins.
    pub fn tree_model(&self, tree: &Tree) -> Result<TreeModel> {
        match self {
            Generator::HuslerReiss { gamma } => TreeModel::husler_reiss(tree.clone(), &WeightMatrix::from_rows(gamma)?),
            Generator::AsymLogistic { psi } => TreeModel::asym_logistic(tree.clone(), psi),
        }
    }
}

fn alog_stdf(psi: &[f64], y: &[f64]) -> f64 {
    let common = psi.iter().zip(y).map(|(p, v)| p * v).fold(0.0, f64::max);
    common + psi.iter().zip(y).map(|(p, v)| (1.0 - p) * v).sum::<f64>()
}

/// `(S, D)` of `tree` for the generator: the sum of edge λ and the
/// approximation error over non-adjacent pairs.
pub fn tree_summary(generator: &Generator, tree: &Tree, n_mc: usize, seed: u64) -> Result<(f64, f64)> {
    let lambda = generator.lambda_matrix()?;
    let model = generator.tree_model(tree)?;
    Ok((tree_weight_sum(tree, &lambda), approximation_error_d(&model, &lambda, n_mc, seed)?))
}

fn check_psi(psi: &[f64]) -> Result<()> {
    if psi.is_empty() {
        return Err(Error::invalid("psi vector is empty"));
    }
    if let Some(p) = psi.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("psi entries must lie in [0, 1], found {p}")));
    }
    Ok(())
}

/// Symmetric, zero diagonal, and `aᵀΓa < 0` for 25 random zero-sum `a`.
pub fn check_variogram(gamma: &WeightMatrix) -> Result<()> {
    let d = gamma.dim();
    if !gamma.is_finite() {
        return Err(Error::invalid("variogram has non-finite entries"));
    }
    for a in 1..=d {
        if gamma.get(a, a) != 0.0 {
            return Err(Error::invalid(format!("variogram diagonal entry ({a},{a}) is not zero")));
        }
        for b in a + 1..=d {
            if gamma.get(a, b) != gamma.get(b, a) {
                return Err(Error::invalid(format!("variogram is not symmetric at ({a},{b})")));
            }
            if gamma.get(a, b) < 0.0 {
                return Err(Error::invalid(format!("variogram entry ({a},{b}) is negative")));
            }
        }
    }
    if d < 2 {
        return Ok(());
    }
    let mut r = rng::substream(0x5eed_c0de, 0);
    for _ in 0..25 {
        let mut a: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut r)).collect();
        let mean = a.iter().sum::<f64>() / d as f64;
        a.iter_mut().for_each(|x| *x -= mean);
        let q: f64 = (1..=d).flat_map(|i| (1..=d).map(move |j| (i, j))).map(|(i, j)| a[i - 1] * a[j - 1] * gamma.get(i, j)).sum();
        if !(q < 0.0) {
            return Err(Error::invalid("variogram is not conditionally negative definite"));
        }
    }
    Ok(())
}

/// Lower Cholesky factor, `None` if not positive definite.
fn cholesky(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = m[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 1e-12 * m[i][i].abs().max(1.0)) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Exact simulation of the simple Hüsler–Reiss distribution by extremal
/// functions.
#[derive(Debug, Clone)]
pub struct HrSampler {
    d: usize,
    gamma: WeightMatrix,
    /// Per anchor: the other nodes and the Cholesky factor of their
    /// covariance given the anchor.
    factors: Vec<(Vec<usize>, Vec<Vec<f64>>)>,
}

impl HrSampler {
    pub fn new(gamma: &WeightMatrix) -> Result<Self> {
        check_variogram(gamma)?;
        let d = gamma.dim();
        let mut factors = Vec::with_capacity(d);
        for j in 1..=d {
            let others: Vec<usize> = (1..=d).filter(|&v| v != j).collect();
            let sigma: Vec<Vec<f64>> = others
                .iter()
                .map(|&a| others.iter().map(|&b| (gamma.get(a, j) + gamma.get(b, j) - gamma.get(a, b)) / 2.0).collect())
                .collect();
            let l = cholesky(&sigma)
                .ok_or_else(|| Error::invalid(format!("covariance for anchor {j} is not positive definite")))?;
            factors.push((others, l));
        }
        Ok(HrSampler { d, gamma: gamma.clone(), factors })
    }

    /// Spectral function normalised at anchor `j` (0-based).
    fn spectral<R: Rng + ?Sized>(&self, j: usize, rng: &mut R, out: &mut [f64], z: &mut [f64]) {
        let (others, l) = &self.factors[j];
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        out[j] = 1.0;
        for (i, &v) in others.iter().enumerate() {
            let g: f64 = l[i][..=i].iter().zip(&z[..=i]).map(|(a, b)| a * b).sum();
            out[v - 1] = (g - self.gamma.get(j + 1, v) / 2.0).exp();
        }
    }

    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R, row: &mut [f64]) {
        let d = self.d;
        row.iter_mut().for_each(|x| *x = 0.0);
        let mut y = vec![0.0; d];
        let mut z = vec![0.0; d.saturating_sub(1)];
        for j in 0..d {
            let mut e: f64 = Exp1.sample(rng);
            let mut zeta = 1.0 / e;
            while zeta > row[j] {
                self.spectral(j, rng, &mut y, &mut z);
                if (0..j).all(|i| zeta * y[i] < row[i]) {
                    for (r, &yv) in row.iter_mut().zip(&y) {
                        *r = r.max(zeta * yv);
                    }
                }
                let step: f64 = Exp1.sample(rng);
                e += step;
                zeta = 1.0 / e;
            }
        }
    }
}

fn sample_rows(n: usize, d: usize, seed: u64, fill: impl Fn(&mut rand_chacha::ChaCha8Rng, &mut [f64]) + Sync) -> Result<SampleMatrix> {
    let chunks: Vec<(u64, usize, usize)> = rng::chunks(n).collect();
    let parts: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&(c, start, end)| {
            let mut r = rng::substream(seed, c);
            let mut buf = vec![0.0; (end - start) * d];
            for row in buf.chunks_mut(d) {
                fill(&mut r, row);
            }
            buf
        })
        .collect();
    let mut columns = vec![Vec::with_capacity(n); d];
    for part in parts {
        for row in part.chunks(d) {
            for (c, &x) in columns.iter_mut().zip(row) {
                c.push(x);
            }
        }
    }
    SampleMatrix::from_columns(columns)
}

pub fn sample_husler_reiss(gamma: &WeightMatrix, n: usize, seed: u64) -> Result<SampleMatrix> {
    let s = HrSampler::new(gamma)?;
    sample_rows(n, s.d, seed, |r, row| s.sample_row(r, row))
}

/// `Z_v = max(ψ_v ε, (1 − ψ_v) ε_v)` with independent unit-Fréchet `ε, ε_v`.
pub fn sample_asym_logistic(psi: &[f64], n: usize, seed: u64) -> Result<SampleMatrix> {
    check_psi(psi)?;
    sample_rows(n, psi.len(), seed, |r, row| {
        let common = unit_frechet(r);
        for (x, &p) in row.iter_mut().zip(psi) {
            *x = (p * common).max((1.0 - p) * unit_frechet(r));
        }
    })
}

/// Add i.i.d. noise with CDF `exp(−x^(−shape))` to every entry.
pub fn add_frechet_noise(sample: &SampleMatrix, shape: f64, seed: u64) -> Result<SampleMatrix> {
    if !(shape > 1.0) || !shape.is_finite() {
        return Err(Error::invalid(format!("noise shape must be finite and > 1, got {shape}")));
    }
    let (n, d) = (sample.n(), sample.d());
    let noise = sample_rows(n, d, seed, |r, row| {
        for x in row.iter_mut() {
            let u: f64 = Open01.sample(r);
            *x = (-u.ln()).powf(-1.0 / shape);
        }
    })?;
    let columns = (1..=d).map(|v| sample.column(v).iter().zip(noise.column(v)).map(|(a, b)| a + b).collect()).collect();
    SampleMatrix::with_names(columns, sample.names().to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    #[serde(flatten)]
    pub generator: Generator,
    pub n: usize,
    /// `None` for noise-free max-stable samples.
    pub noise_shape: Option<f64>,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn new(generator: Generator, n: usize, seed: u64) -> Self {
        SimulationSpec { generator, n, noise_shape: Some(DEFAULT_NOISE_SHAPE), seed }
    }

    pub fn sample(&self) -> Result<SampleMatrix> {
        let z = self.generator.sample(self.n, self.seed)?;
        match self.noise_shape {
            Some(s) => add_frechet_noise(&z, s, rng::derive_seed(self.seed, 1)),
            None => Ok(z),
        }
    }
}

/// Joint CDF of `Z + ε` at `u`, its complement, and the error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCdf {
    pub cdf: f64,
    /// `1 − cdf`, computed directly.
    pub survival: f64,
    pub error: f64,
}
/// `P(Z + ε ≤ u)` for the generator plus Fréchet(`noise_shape`) noise,
/// restricted to the finite coordinates of `u` (at most four). The
/// complement is integrated directly so small exceedance probabilities
/// keep their relative accuracy; `tol` bounds the error relative to it.
///
/// Asymmetric logistic generators condition on the common factor, which
/// leaves one-dimensional integrals; Hüsler–Reiss generators use adaptive
/// cubature over the noise of the finite coordinates.
pub fn oracle_joint_cdf(generator: &Generator, u: &[f64], noise_shape: f64, tol: f64) -> Result<OracleCdf> {
    let fin = oracle_checks(generator, u, noise_shape, tol)?;
    if fin.is_empty() {
        return Ok(OracleCdf { cdf: 1.0, survival: 0.0, error: 0.0 });
    }
    match generator {
        Generator::AsymLogistic { psi } => alog_survival_conditional(psi, u, &fin, noise_shape, tol),
        Generator::HuslerReiss { .. } => {
            if fin.len() > 3 {
                return Err(Error::Unsupported("Hüsler–Reiss oracle supports at most 3 finite coordinates".into()));
            }
            survival_by_cubature(generator, u, &fin, noise_shape, tol)
        }
    }
}

fn oracle_checks(generator: &Generator, u: &[f64], noise_shape: f64, tol: f64) -> Result<Vec<usize>> {
    generator.validate()?;
    let d = generator.d();
    if u.len() != d {
        return Err(Error::invalid(format!("threshold vector has length {}, expected {d}", u.len())));
    }
    if !(1e-8..=1e-3).contains(&tol) {
        return Err(Error::invalid(format!("tolerance {tol} outside [1e-8, 1e-3]")));
    }
    if !(noise_shape > 1.0) {
        return Err(Error::invalid("noise shape must be > 1"));
    }
    if let Some(x) = u.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::invalid(format!("thresholds must be positive, found {x}")));
    }
    let fin: Vec<usize> = (0..d).filter(|&v| u[v].is_finite()).collect();
    if fin.len() > 4 {
        return Err(Error::Unsupported(format!("{} finite coordinates (at most 4)", fin.len())));
    }
    Ok(fin)
}

fn noise_density(x: f64, s: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let xs = x.powf(-s);
    s * xs / x * (-xs).exp()
}

fn quad_failure(tol: f64, error: f64, survival: f64) -> Error {
    Error::estimation(format!("oracle integration did not reach tolerance {tol:e}: error {error:.3e} on survival {survival:.6e}"))
}

/// Given the common factor `e`, coordinate `v` fails to stay below `u_v`
/// with probability `P(ε' > u − ψe) + ∫_{x ≤ u−ψe} P((1−ψ)ε_v > u − x) dF_ε'(x)`.
fn alog_survival_conditional(psi: &[f64], u: &[f64], fin: &[usize], s: f64, tol: f64) -> Result<OracleCdf> {
    let converged = std::cell::Cell::new(true);
    let miss = |v: usize, e: f64, abs_tol: f64| -> f64 {
        let (p, uv) = (psi[v], u[v]);
        let top = uv - p * e;
        if top <= 0.0 {
            return 1.0;
        }
        let noise_out = -(-top.powf(-s)).exp_m1();
        if p >= 1.0 {
            return noise_out;
        }
        // substitute q = F_ε(x) so the noise peak is not missed on wide ranges
        let r = integrate(
            |q| {
                if q <= 0.0 {
                    return 0.0;
                }
                let x = (-q.ln()).powf(-1.0 / s);
                -(-(1.0 - p) / (uv - x)).exp_m1()
            },
            0.0,
            (-top.powf(-s)).exp(),
            abs_tol,
            0.1 * tol,
            50_000,
        );
        converged.set(converged.get() && r.converged);
        noise_out + r.value
    };
    // lower bound of the survival from e = 0
    let floor = -(fin.iter().map(|&v| (-miss(v, 0.0, 1e-300)).ln_1p()).sum::<f64>()).exp_m1();
    let inner_abs = 0.01 * tol * floor;
    // integrate over p = exp(−1/e) ∈ (0, 1)
    let outer = integrate(
        |p| {
            if p <= 0.0 {
                return floor;
            }
            if p >= 1.0 {
                return 1.0;
            }
            let e = -1.0 / p.ln();
            let log_stay: f64 = fin.iter().map(|&v| (-miss(v, e, inner_abs)).ln_1p()).sum();
            -log_stay.exp_m1()
        },
        0.0,
        1.0,
        0.5 * tol * floor,
        0.5 * tol,
        200_000,
    );
    let survival = outer.value;
    // each inner integral is off by at most inner_abs over a unit interval
    let error = outer.error + inner_abs * fin.len() as f64;
    if !outer.converged || !converged.get() || !(survival > 0.0) || error > tol * survival {
        return Err(quad_failure(tol, error, survival));
    }
    Ok(OracleCdf { cdf: 1.0 - survival, survival, error })
}

/// `1 − F(u) = P(some ε_v > u_v) + E[1{ε ≤ u}(1 − G(u − ε))]`, integrated
/// over `t = log ε` of the finite coordinates.
fn survival_by_cubature(generator: &Generator, u: &[f64], fin: &[usize], s: f64, tol: f64) -> Result<OracleCdf> {
    let d = generator.d();
    let m = fin.len();
    let excess = |z: &[f64]| -> f64 {
        let mut y = vec![0.0; d];
        for (k, &v) in fin.iter().enumerate() {
            if z[k] <= 0.0 {
                return 1.0;
            }
            y[v] = 1.0 / z[k];
        }
        match generator.stdf(&y) {
            Ok(l) => -(-l).exp_m1(),
            Err(_) => f64::NAN,
        }
    };
    let lower: Vec<f64> = fin.iter().map(|&v| (0.2f64.powf(2.0 / s)).min(u[v] / 2.0).ln()).collect();
    let upper: Vec<f64> = fin.iter().map(|&v| u[v].ln()).collect();
    let integrand = |t: &[f64]| -> f64 {
        let mut w = 1.0;
        let mut z = [0.0; 4];
        for (k, &v) in fin.iter().enumerate() {
            let x = t[k].exp();
            w *= noise_density(x, s) * x;
            z[k] = u[v] - x;
        }
        if w == 0.0 {
            0.0
        } else {
            w * excess(&z[..m])
        }
    };
    let log_c: f64 = fin.iter().map(|&v| -u[v].powf(-s)).sum();
    let outside = -log_c.exp_m1();
    let floor = outside + log_c.exp() * excess(&fin.iter().map(|&v| u[v]).collect::<Vec<_>>());
    let q = cubature(&integrand, &lower, &upper, 0.5 * tol * floor, 0.5 * tol, 20_000_000);
    let survival = outside + q.value;
    if !q.converged || !q.value.is_finite() || q.error > tol * survival {
        return Err(quad_failure(tol, q.error, survival));
    }
    Ok(OracleCdf { cdf: 1.0 - survival, survival, error: q.error })
}

/// `log(estimate / truth)` of two exceedance probabilities.
pub fn approximation_error(estimate: f64, truth: f64) -> Result<f64> {
    if !(estimate > 0.0 && truth > 0.0) {
        return Err(Error::invalid(format!("probabilities must be positive (estimate {estimate}, truth {truth})")));
    }
    Ok((estimate / truth).ln())
}

/// `‖est − truth‖_F / ‖truth‖_F`.
pub fn variogram_distance(estimate: &WeightMatrix, truth: &WeightMatrix) -> Result<f64> {
    if estimate.dim() != truth.dim() {
        return Err(Error::invalid("matrices have different dimensions"));
    }
    let d = truth.dim();
    let (mut num, mut den) = (0.0, 0.0);
    for a in 1..=d {
        for b in 1..=d {
            num += (estimate.get(a, b) - truth.get(a, b)).powi(2);
            den += truth.get(a, b).powi(2);
        }
    }
    if den == 0.0 {
        return Err(Error::invalid("reference matrix has zero norm"));
    }
    Ok(num.sqrt() / den.sqrt())
}

/// One simulation-study configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub generator: Generator,
    pub n: usize,
    pub noise_shape: f64,
    pub weight: EdgeWeight,
    pub k_lambda: usize,
    pub estimator: EstimatorConfig,
    /// Tree the generator is Markov to, for the recovery flag.
    pub true_tree: Option<Tree>,
    /// 1-based coordinates with a finite threshold in the rare-event metric.
    pub rare_coords: Vec<usize>,
    /// Empirical quantile level of the finite thresholds.
    pub rare_p: f64,
    pub oracle_tol: f64,
    pub n_mc: usize,
}

impl StudyConfig {
    pub fn new(generator: Generator, estimator: EstimatorConfig) -> Self {
        let d = generator.d();
        StudyConfig {
            generator,
            n: 1000,
            noise_shape: DEFAULT_NOISE_SHAPE,
            weight: EdgeWeight::Tau,
            k_lambda: 100,
            estimator,
            true_tree: None,
            rare_coords: (1..=d.min(3)).collect(),
            rare_p: 0.999,
            oracle_tol: 1e-5,
            n_mc: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub rep: usize,
    pub seed: u64,
    pub tree_correct: Option<bool>,
    pub wrong_edges: Option<usize>,
    pub variogram_distance: Option<f64>,
    pub d_hat: Option<f64>,
    pub estimate: Option<f64>,
    pub truth: Option<f64>,
    pub ae: Option<f64>,
    pub error: Option<String>,
}

/// Generate, learn the tree, fit it, and compute the study metrics.
pub fn run_replication(cfg: &StudyConfig, rep: usize, seed: u64) -> Replication {
    let mut out = Replication {
        rep,
        seed,
        tree_correct: None,
        wrong_edges: None,
        variogram_distance: None,
        d_hat: None,
        estimate: None,
        truth: None,
        ae: None,
        error: None,
    };
    if let Err(e) = replicate_into(cfg, seed, &mut out) {
        out.error = Some(e.to_string());
    }
    out
}

fn replicate_into(cfg: &StudyConfig, seed: u64, out: &mut Replication) -> Result<()> {
    let spec = SimulationSpec { generator: cfg.generator.clone(), n: cfg.n, noise_shape: Some(cfg.noise_shape), seed };
    let sample = spec.sample()?;
    let (tree, _) = learn_tree(&sample, cfg.weight, cfg.k_lambda)?;
    if let Some(t) = &cfg.true_tree {
        let wrong = t.edges().len() - t.common_edges(&tree);
        out.wrong_edges = Some(wrong);
        out.tree_correct = Some(wrong == 0);
    }
    let fitted = fit_tree_model(&sample, &tree, &cfg.estimator)?;
    let lam_hat = empirical_tdc_matrix(&sample, cfg.k_lambda)?;
    out.d_hat = Some(approximation_error_d(&fitted.model, &lam_hat, cfg.n_mc, rng::derive_seed(seed, 2))?);
    if let (Some(truth), Ok(est)) = (cfg.generator.gamma(), fitted.model.variogram_tree()) {
        out.variogram_distance = Some(variogram_distance(&est, &truth)?);
    }
    if !cfg.rare_coords.is_empty() {
        let d = sample.d();
        let mut u = vec![f64::INFINITY; d];
        for &v in &cfg.rare_coords {
            if v == 0 || v > d {
                return Err(Error::invalid(format!("rare-event coordinate {v} outside 1..={d}")));
            }
            u[v - 1] = empirical_quantile(sample.column(v), cfg.rare_p)?;
        }
        let est = rare_event_probability(&fitted.model, &MarginSet::unit_frechet(d), &u, cfg.n_mc, rng::derive_seed(seed, 3))?;
        let truth = oracle_joint_cdf(&cfg.generator, &u, cfg.noise_shape, cfg.oracle_tol)?;
        out.estimate = Some(est.probability);
        out.truth = Some(truth.survival);
        out.ae = Some(approximation_error(est.probability, truth.survival)?);
    }
    Ok(())
}

/// Run `reps` replications in parallel; replication `r` uses
/// `derive_seed(master_seed, r)` and results are ordered by `r`.
pub fn run_study(cfg: &StudyConfig, reps: usize, master_seed: u64) -> Vec<Replication> {
    (0..reps).into_par_iter().map(|r| run_replication(cfg, r, rng::derive_seed(master_seed, r as u64))).collect()
}
