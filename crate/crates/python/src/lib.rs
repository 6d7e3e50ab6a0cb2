//! Python bindings: `import tailtree`.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyNotImplementedError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tailtree_core::depmeasures::{self, EdgeWeight};
use tailtree_core::estimators::{self, EstimatorConfig, Method};
use tailtree_core::families::FamilyKind;
use tailtree_core::margins::{self, HybridMargin};
use tailtree_core::simulate::{self as sim, Generator};
use tailtree_core::treemodel::{self, MarginSet, MarginalCdf, DEFAULT_N_MC};
use tailtree_core::{EdgeFamily, Error, SampleMatrix, Tree, TreeModel, WeightMatrix};

create_exception!(tailtree, EstimationError, PyRuntimeError);

fn err(e: Error) -> PyErr {
    match e {
        Error::EstimationFailure(_) | Error::EdgeFailures(_) => EstimationError::new_err(e.to_string()),
        Error::Unsupported(_) => PyNotImplementedError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn matrix_rows(w: &WeightMatrix) -> Vec<Vec<f64>> {
    w.rows()
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<WeightMatrix> {
    WeightMatrix::from_rows(&rows).map_err(err)
}

/// Spanning tree over nodes `1..=d`.
#[pyclass(name = "Tree", module = "tailtree", frozen, from_py_object)]
#[derive(Clone)]
struct PyTree(Tree);

#[pymethods]
impl PyTree {
    #[new]
    fn new(d: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Tree::new(d, edges).map(PyTree).map_err(err)
    }

    #[staticmethod]
    fn chain(order: Vec<usize>) -> PyResult<Self> {
        Tree::chain(&order).map(PyTree).map_err(err)
    }

    #[staticmethod]
    fn star(d: usize, center: usize) -> PyResult<Self> {
        Tree::star(d, center).map(PyTree).map_err(err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.node_count()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().to_vec()
    }

    fn path(&self, a: usize, b: usize) -> PyResult<Vec<(usize, usize)>> {
        self.0.path_between(a, b).map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("tree json")
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        serde_json::from_str(s).map(PyTree).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Tree(d={}, edges={:?})", self.0.node_count(), self.0.edges())
    }
}

/// Observations in columns, with ranks precomputed.
#[pyclass(name = "Sample", module = "tailtree", frozen)]
struct PySample(SampleMatrix);

#[pymethods]
impl PySample {
    /// Build from a list of rows (`n × d`).
    #[new]
    #[pyo3(signature = (rows, names=None))]
    fn new(rows: Vec<Vec<f64>>, names: Option<Vec<String>>) -> PyResult<Self> {
        let s = SampleMatrix::from_rows(&rows).map_err(err)?;
        match names {
            None => Ok(PySample(s)),
            Some(n) => {
                let cols = (1..=s.d()).map(|v| s.column(v).to_vec()).collect();
                SampleMatrix::with_names(cols, n).map(PySample).map_err(err)
            }
        }
    }

    #[staticmethod]
    fn from_csv(path: &str) -> PyResult<Self> {
        SampleMatrix::from_csv_path(path).map(PySample).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.0.names().to_vec()
    }

    /// Column `v` (1-based).
    fn column(&self, v: usize) -> PyResult<Vec<f64>> {
        if v == 0 || v > self.0.d() {
            return Err(PyValueError::new_err(format!("column {v} outside 1..={}", self.0.d())));
        }
        Ok(self.0.column(v).to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Sample(n={}, d={})", self.0.n(), self.0.d())
    }
}

/// A bivariate stable tail dependence function.
#[pyclass(name = "Family", module = "tailtree", frozen, from_py_object)]
#[derive(Clone)]
struct PyFamily(EdgeFamily);

#[pymethods]
impl PyFamily {
    #[staticmethod]
    fn husler_reiss(gamma: f64) -> PyResult<Self> {
        FamilyKind::HuslerReiss.with_params(&[gamma]).map(PyFamily).map_err(err)
    }

    #[staticmethod]
    fn asym_logistic(psi_p: f64, psi_s: f64) -> PyResult<Self> {
        FamilyKind::AsymLogisticSpecial.with_params(&[psi_p, psi_s]).map(PyFamily).map_err(err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.0.kind() {
            FamilyKind::HuslerReiss => "hr",
            FamilyKind::AsymLogisticSpecial => "alog",
        }
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.0.params()
    }

    fn stdf(&self, x: f64, y: f64) -> PyResult<f64> {
        self.0.stdf(x, y).map_err(err)
    }

    fn tdc(&self) -> f64 {
        self.0.tdc()
    }

    fn __repr__(&self) -> String {
        format!("Family({:?})", self.0)
    }
}

/// Tree with one bivariate family per edge.
#[pyclass(name = "TreeModel", module = "tailtree", frozen, from_py_object)]
#[derive(Clone)]
struct PyTreeModel(TreeModel);

#[pymethods]
impl PyTreeModel {
    /// `edges` lists `(a, b, family)`, the family oriented `a → b`.
    #[new]
    fn new(tree: &PyTree, edges: Vec<(usize, usize, PyFamily)>) -> PyResult<Self> {
        TreeModel::new(tree.0.clone(), edges.into_iter().map(|(a, b, f)| ((a, b), f.0))).map(PyTreeModel).map_err(err)
    }

    #[staticmethod]
    fn husler_reiss(tree: &PyTree, gamma: Vec<Vec<f64>>) -> PyResult<Self> {
        TreeModel::husler_reiss(tree.0.clone(), &matrix(gamma)?).map(PyTreeModel).map_err(err)
    }

    #[staticmethod]
    fn asym_logistic(tree: &PyTree, psi: Vec<f64>) -> PyResult<Self> {
        TreeModel::asym_logistic(tree.0.clone(), &psi).map(PyTreeModel).map_err(err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn tree(&self) -> PyTree {
        PyTree(self.0.tree().clone())
    }

    /// `(a, b, family)` oriented parent to child.
    fn edges(&self) -> Vec<(usize, usize, PyFamily)> {
        self.0.edges().into_iter().map(|((a, b), f)| (a, b, PyFamily(f))).collect()
    }

    /// `(value, std_error, exact)`.
    #[pyo3(signature = (y, n_mc=DEFAULT_N_MC, seed=0))]
    fn stdf(&self, py: Python<'_>, y: Vec<f64>, n_mc: usize, seed: u64) -> PyResult<(f64, f64, bool)> {
        let (est, method) = py.detach(|| treemodel::stdf_tree(&self.0, &y, n_mc, seed)).map_err(err)?;
        Ok((est.estimate, est.std_error, method == treemodel::EvalMethod::Exact))
    }

    /// `(value, std_error, exact)`.
    #[pyo3(signature = (a, b, n_mc=DEFAULT_N_MC, seed=0))]
    fn tdc(&self, a: usize, b: usize, n_mc: usize, seed: u64) -> PyResult<(f64, f64, bool)> {
        let t = treemodel::tdc_tree(&self.0, a, b, n_mc, seed).map_err(err)?;
        Ok((t.value, t.std_error, t.exact))
    }

    /// `(λ, standard errors)` as nested lists.
    #[pyo3(signature = (n_mc=DEFAULT_N_MC, seed=0))]
    fn tdc_matrix(&self, py: Python<'_>, n_mc: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let (l, s) = py.detach(|| treemodel::tdc_matrix(&self.0, n_mc, seed)).map_err(err)?;
        Ok((matrix_rows(&l), matrix_rows(&s)))
    }

    fn variogram(&self) -> PyResult<Vec<Vec<f64>>> {
        self.0.variogram_tree().map(|g| matrix_rows(&g)).map_err(err)
    }

    /// `Σ |λ^M_ab − λ_ab|` over non-adjacent pairs.
    #[pyo3(signature = (lambda_ref, n_mc=DEFAULT_N_MC, seed=0))]
    fn approximation_error(&self, lambda_ref: Vec<Vec<f64>>, n_mc: usize, seed: u64) -> PyResult<f64> {
        treemodel::approximation_error_d(&self.0, &matrix(lambda_ref)?, n_mc, seed).map_err(err)
    }

    /// `P(∪ {X_v > u_v})`; `u_v = inf` leaves node `v` free. Unit-Fréchet
    /// margins unless `data` is given, in which case each column gets an
    /// empirical body with a GPD tail above its `threshold_p` quantile.
    #[pyo3(signature = (u, data=None, threshold_p=margins::DEFAULT_THRESHOLD_P, n_mc=DEFAULT_N_MC, seed=0))]
    fn rare_event(
        &self,
        py: Python<'_>,
        u: Vec<f64>,
        data: Option<&PySample>,
        threshold_p: f64,
        n_mc: usize,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        let ms = match data {
            None => MarginSet::unit_frechet(self.0.d()),
            Some(s) => {
                if s.0.d() != self.0.d() {
                    return Err(PyValueError::new_err("data and model dimensions differ"));
                }
                let mut v: Vec<Arc<dyn MarginalCdf>> = Vec::new();
                for j in 1..=s.0.d() {
                    v.push(Arc::new(HybridMargin::fit(s.0.column(j), threshold_p).map_err(err)?));
                }
                MarginSet::new(v)
            }
        };
        let r = py.detach(|| treemodel::rare_event_probability(&self.0, &ms, &u, n_mc, seed)).map_err(err)?;
        Ok((r.probability, r.std_error))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("model json")
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        serde_json::from_str(s).map(PyTreeModel).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("TreeModel(d={}, edges={:?})", self.0.d(), self.0.tree().edges())
    }
}

#[pyfunction]
fn kendall_tau_matrix(sample: &PySample) -> PyResult<Vec<Vec<f64>>> {
    depmeasures::kendall_tau_matrix(&sample.0).map(|w| matrix_rows(&w)).map_err(err)
}

#[pyfunction]
fn empirical_tdc_matrix(sample: &PySample, k_lambda: usize) -> PyResult<Vec<Vec<f64>>> {
    depmeasures::empirical_tdc_matrix(&sample.0, k_lambda).map(|w| matrix_rows(&w)).map_err(err)
}

#[pyfunction]
fn max_spanning_tree(weights: Vec<Vec<f64>>) -> PyResult<PyTree> {
    tailtree_core::graph::prim_max_tree(&matrix(weights)?).map(PyTree).map_err(err)
}

/// Maximum dependence tree and its weight matrix.
#[pyfunction]
#[pyo3(signature = (sample, weight="tau", k_lambda=None))]
fn learn_tree(sample: &PySample, weight: &str, k_lambda: Option<usize>) -> PyResult<(PyTree, Vec<Vec<f64>>)> {
    let w: EdgeWeight = parse(weight)?;
    let k = k_lambda.unwrap_or_else(|| ((sample.0.n() as f64 * 0.1).round() as usize).max(1));
    let (t, m) = depmeasures::learn_tree(&sample.0, w, k).map_err(err)?;
    Ok((PyTree(t), matrix_rows(&m)))
}

/// Fit every edge; returns the model and a JSON list of per-edge reports.
#[pyfunction]
#[pyo3(signature = (sample, tree, method="m", family="hr", k=100))]
fn fit_tree(py: Python<'_>, sample: &PySample, tree: &PyTree, method: &str, family: &str, k: usize) -> PyResult<(PyTreeModel, String)> {
    let cfg = EstimatorConfig::new(parse::<Method>(method)?, parse::<FamilyKind>(family)?, k);
    let fitted = py.detach(|| estimators::fit_tree_model(&sample.0, &tree.0, &cfg)).map_err(err)?;
    Ok((PyTreeModel(fitted.model), serde_json::to_string(&fitted.edges).expect("reports json")))
}

/// Bivariate fit of columns `(a, b)`: the family parameters.
#[pyfunction]
#[pyo3(signature = (sample, a, b, method="m", family="hr", k=100))]
fn fit_edge(sample: &PySample, a: usize, b: usize, method: &str, family: &str, k: usize) -> PyResult<PyFamily> {
    let cfg = EstimatorConfig::new(parse::<Method>(method)?, parse::<FamilyKind>(family)?, k);
    estimators::fit_edge(&sample.0, (a, b), &cfg).map(|f| PyFamily(f.family)).map_err(err)
}

fn generator(gamma: Option<Vec<Vec<f64>>>, psi: Option<Vec<f64>>) -> PyResult<Generator> {
    match (gamma, psi) {
        (Some(g), None) => Ok(Generator::husler_reiss(&matrix(g)?)),
        (None, Some(p)) => Ok(Generator::asym_logistic(&p)),
        _ => Err(PyValueError::new_err("give exactly one of gamma or psi")),
    }
}

/// Sample a Hüsler–Reiss (`gamma`) or max-linear (`psi`) model, optionally
/// with additive Fréchet(`noise_shape`) noise.
#[pyfunction]
#[pyo3(signature = (n, seed=0, gamma=None, psi=None, noise_shape=None))]
fn simulate(
    py: Python<'_>,
    n: usize,
    seed: u64,
    gamma: Option<Vec<Vec<f64>>>,
    psi: Option<Vec<f64>>,
    noise_shape: Option<f64>,
) -> PyResult<PySample> {
    let spec = sim::SimulationSpec { generator: generator(gamma, psi)?, n, noise_shape, seed };
    py.detach(|| spec.sample()).map(PySample).map_err(err)
}

/// `(cdf, survival, error)` of generator plus noise at `u`.
#[pyfunction]
#[pyo3(signature = (u, gamma=None, psi=None, noise_shape=2.0, tol=1e-6))]
fn oracle_joint_cdf(
    py: Python<'_>,
    u: Vec<f64>,
    gamma: Option<Vec<Vec<f64>>>,
    psi: Option<Vec<f64>>,
    noise_shape: f64,
    tol: f64,
) -> PyResult<(f64, f64, f64)> {
    let g = generator(gamma, psi)?;
    let r = py.detach(|| sim::oracle_joint_cdf(&g, &u, noise_shape, tol)).map_err(err)?;
    Ok((r.cdf, r.survival, r.error))
}

/// `(S, D)` of `tree` for a generator.
#[pyfunction]
#[pyo3(signature = (tree, gamma=None, psi=None, n_mc=DEFAULT_N_MC, seed=0))]
fn tree_summary(tree: &PyTree, gamma: Option<Vec<Vec<f64>>>, psi: Option<Vec<f64>>, n_mc: usize, seed: u64) -> PyResult<(f64, f64)> {
    sim::tree_summary(&generator(gamma, psi)?, &tree.0, n_mc, seed).map_err(err)
}

/// GPD fit above the empirical `p` quantile: dict with `threshold`,
/// `exceed_fraction`, `sigma`, `shape`.
#[pyfunction]
#[pyo3(signature = (values, p=margins::DEFAULT_THRESHOLD_P))]
fn gpd_fit(values: Vec<f64>, p: f64) -> PyResult<std::collections::BTreeMap<&'static str, f64>> {
    let f = margins::GpdFit::fit(&values, p).map_err(err)?;
    Ok([("threshold", f.threshold), ("exceed_fraction", f.exceed_fraction), ("sigma", f.sigma), ("shape", f.shape)].into())
}

#[pymodule]
fn tailtree(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTree>()?;
    m.add_class::<PySample>()?;
    m.add_class::<PyFamily>()?;
    m.add_class::<PyTreeModel>()?;
    m.add("EstimationError", m.py().get_type::<EstimationError>())?;
    m.add_function(wrap_pyfunction!(kendall_tau_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_tdc_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(max_spanning_tree, m)?)?;
    m.add_function(wrap_pyfunction!(learn_tree, m)?)?;
    m.add_function(wrap_pyfunction!(fit_tree, m)?)?;
    m.add_function(wrap_pyfunction!(fit_edge, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_joint_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(tree_summary, m)?)?;
    m.add_function(wrap_pyfunction!(gpd_fit, m)?)?;
    Ok(())
}
