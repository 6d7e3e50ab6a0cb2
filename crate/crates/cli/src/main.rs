//! `tailtree`: learn, fit and evaluate tree-structured extreme value models.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use tailtree::depmeasures::{empirical_tdc_matrix, learn_tree, EdgeWeight};
use tailtree::estimators::{fit_tree_model_with, EstimatorConfig, Method};
use tailtree::families::FamilyKind;
use tailtree::graph::tree_weight_sum;
use tailtree::margins::{decluster, mean_residual_life, DailySeries, DeclusterMode, HybridMargin, DEFAULT_THRESHOLD_P, DEFAULT_WINDOW};
use tailtree::simulate::{run_study, tree_summary, Generator, SimulationSpec, StudyConfig};
use tailtree::treemodel::{approximation_error_d, rare_event_probability, MarginSet, MarginalCdf, DEFAULT_N_MC};
use tailtree::{fixtures, Error, SampleMatrix, Tree, TreeModel, WeightMatrix};

use config::{pick, RunConfig};

pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError { code: 2, message: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_estimation_failure() { 3 } else { 2 };
        CliError { code, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "tailtree", version, about = "Tree-structured multivariate extreme value models")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TAILTREE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn the maximum dependence tree of a sample.
    LearnTree(LearnArgs),
    /// Fit a bivariate stdf on every tree edge.
    Fit(FitArgs),
    /// Estimate a joint exceedance probability from a fitted model.
    RareEvent(RareArgs),
    /// Draw a sample from a bundled or user-supplied generator.
    Simulate(SimArgs),
    /// Repeat generate, learn, fit and evaluate for many seeds.
    Simstudy(StudyArgs),
    /// `(S, D)` of every 4-node tree for the bundled 4-variate models.
    Table1(Table1Args),
    /// Extract declustered events from a daily series.
    Decluster(DeclusterArgs),
}

#[derive(Args)]
struct LearnArgs {
    /// Sample CSV with a header row.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Edge weight: tau or lambda.
    #[arg(long)]
    weight: Option<String>,
    /// Order statistics for λ̂ (default 0.1·n).
    #[arg(long)]
    k_lambda: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Tree JSON; learned from the sample when absent.
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    weight: Option<String>,
    /// One or more k; several values run a sweep.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    k_lambda: Option<usize>,
    /// mm, m or wls.
    #[arg(long)]
    method: Option<String>,
    /// Default edge family: hr or alog.
    #[arg(long)]
    family: Option<String>,
    /// Per-edge family, e.g. `1-2=alog`.
    #[arg(long = "edge-family", value_parser = parse_edge_family)]
    edge_family: Vec<(String, String)>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_mc: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RareArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Data whose columns give the GPD margins.
    #[arg(long)]
    input: Option<PathBuf>,
    /// One threshold per node; `inf` leaves a node unconstrained.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    thresholds: Option<Vec<f64>>,
    /// gpd (needs --input) or unit-frechet.
    #[arg(long)]
    margins: Option<String>,
    #[arg(long)]
    threshold_p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_mc: Option<usize>,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct GeneratorArgs {
    /// gamma1, gamma2, gamma3, gamma4, psi1, psi2 or psi3.
    #[arg(long)]
    fixture: Option<String>,
    /// Variogram matrix CSV (no header).
    #[arg(long)]
    gamma: Option<PathBuf>,
    /// Max-linear weights.
    #[arg(long, value_delimiter = ',')]
    psi: Option<Vec<f64>>,
    /// All-HR model JSON whose tree completion is the variogram.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long)]
    n: Option<usize>,
    /// Shape of additive Fréchet noise; none when absent.
    #[arg(long)]
    noise_shape: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    noise_shape: Option<f64>,
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k_lambda: Option<usize>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    family: Option<String>,
    /// Tree JSON the generator is Markov to.
    #[arg(long)]
    true_tree: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    rare_coords: Option<Vec<usize>>,
    #[arg(long)]
    rare_p: Option<f64>,
    #[arg(long)]
    oracle_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_mc: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Table1Args {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_mc: Option<usize>,
    /// CSV file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DeclusterArgs {
    /// Daily CSV: `date,station1,...` with ISO dates.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Months forming the season (default: all).
    #[arg(long, value_delimiter = ',')]
    months: Option<Vec<u32>>,
    #[arg(long)]
    window: Option<usize>,
    /// multivariate or univariate.
    #[arg(long)]
    mode: Option<String>,
    /// Quantile levels for a mean-residual-life table per station.
    #[arg(long, value_delimiter = ',')]
    mrl: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_edge_family(s: &str) -> Result<(String, String), String> {
    let (edge, fam) = s.split_once('=').ok_or_else(|| format!("expected a-b=family, got '{s}'"))?;
    Ok((edge.trim().to_owned(), fam.trim().to_owned()))
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> CliResult<T> {
    s.parse().map_err(CliError::from)
}

fn require<T>(v: Option<T>, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::input(format!("missing --{what}")))
}

fn out_dir(out: Option<PathBuf>) -> CliResult<PathBuf> {
    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, v: &Value) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(v).expect("json value");
    s.push('\n');
    write_file(path, s.as_bytes())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn default_k_lambda(n: usize) -> usize {
    ((n as f64 * 0.1).round() as usize).max(1)
}

fn weight_matrix_csv(w: &WeightMatrix, names: &[String]) -> CliResult<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| CliError::input(e.to_string());
    wr.write_record(std::iter::once("").chain(names.iter().map(String::as_str))).map_err(map)?;
    for a in 1..=w.dim() {
        let row = std::iter::once(names[a - 1].clone()).chain((1..=w.dim()).map(|b| w.get(a, b).to_string()));
        wr.write_record(row).map_err(map)?;
    }
    wr.into_inner().map_err(|e| CliError::input(e.to_string()))
}

fn cmd_learn_tree(a: LearnArgs, cfg: &RunConfig) -> CliResult<()> {
    let input = require(pick(a.input, cfg.input.clone()), "input")?;
    let sample = SampleMatrix::from_csv_path(&input)?;
    let weight: EdgeWeight = parse_with(&pick(a.weight, cfg.weight.clone()).unwrap_or_else(|| "tau".into()))?;
    let k_lambda = pick(a.k_lambda, cfg.k_lambda).unwrap_or_else(|| default_k_lambda(sample.n()));
    let (tree, w) = learn_tree(&sample, weight, k_lambda)?;
    let dir = out_dir(pick(a.out, cfg.out.clone()))?;
    let mut doc = serde_json::to_value(&tree).expect("tree json");
    doc["weight"] = json!(weight);
    doc["k_lambda"] = json!(k_lambda);
    doc["total_weight"] = json!(tree_weight_sum(&tree, &w));
    doc["names"] = json!(sample.names());
    write_json(&dir.join("tree.json"), &doc)?;
    write_file(&dir.join("weights.csv"), &weight_matrix_csv(&w, sample.names())?)?;
    println!("{}", serde_json::to_string(&doc).expect("json"));
    Ok(())
}

/// Edge `"a-b"` to family, for either orientation.
fn edge_family_overrides(pairs: impl IntoIterator<Item = (String, String)>) -> CliResult<BTreeMap<(usize, usize), FamilyKind>> {
    let mut out = BTreeMap::new();
    for (edge, fam) in pairs {
        let (a, b) = edge.split_once('-').ok_or_else(|| CliError::input(format!("edge '{edge}' should look like 1-2")))?;
        let a: usize = a.trim().parse().map_err(|_| CliError::input(format!("bad node in edge '{edge}'")))?;
        let b: usize = b.trim().parse().map_err(|_| CliError::input(format!("bad node in edge '{edge}'")))?;
        out.insert((a.min(b), a.max(b)), parse_with(&fam)?);
    }
    Ok(out)
}

fn cmd_fit(a: FitArgs, cfg: &RunConfig) -> CliResult<()> {
    let input = require(pick(a.input, cfg.input.clone()), "input")?;
    let sample = SampleMatrix::from_csv_path(&input)?;
    if sample.d() < 2 {
        return Err(Error::InvalidArgument("a tree model needs at least two variables".into()).into());
    }
    let k_lambda = pick(a.k_lambda, cfg.k_lambda).unwrap_or_else(|| default_k_lambda(sample.n()));
    let tree: Tree = match pick(a.tree, cfg.tree.clone()) {
        Some(p) => read_json(&p)?,
        None => {
            let weight: EdgeWeight = parse_with(&pick(a.weight, cfg.weight.clone()).unwrap_or_else(|| "tau".into()))?;
            learn_tree(&sample, weight, k_lambda)?.0
        }
    };
    let method: Method = parse_with(&pick(a.method, cfg.method.clone()).unwrap_or_else(|| "m".into()))?;
    let family: FamilyKind = parse_with(&pick(a.family, cfg.family.clone()).unwrap_or_else(|| "hr".into()))?;
    let overrides = if a.edge_family.is_empty() {
        edge_family_overrides(cfg.edge_family.clone())?
    } else {
        edge_family_overrides(a.edge_family)?
    };
    for &(u, v) in overrides.keys() {
        if !tree.is_adjacent(u, v) {
            return Err(CliError::input(format!("family override for ({u},{v}), which is not a tree edge")));
        }
    }
    let ks = pick(a.k, cfg.k.clone()).unwrap_or_else(|| vec![100]);
    if ks.is_empty() {
        return Err(CliError::input("empty k grid"));
    }
    let seed = pick(a.seed, cfg.seed).unwrap_or(0);
    let n_mc = pick(a.n_mc, cfg.n_mc).unwrap_or(DEFAULT_N_MC);
    let dir = out_dir(pick(a.out, cfg.out.clone()))?;
    let lam_hat = empirical_tdc_matrix(&sample, k_lambda)?;
    let mut sweep = Vec::new();
    for &k in &ks {
        let edge_cfg = |p: usize, c: usize| {
            let fam = overrides.get(&(p.min(c), p.max(c))).copied().unwrap_or(family);
            EstimatorConfig::new(method, fam, k)
        };
        for &(p, c) in &tree.oriented_edges() {
            edge_cfg(p, c).validate()?;
        }
        let fitted = fit_tree_model_with(&sample, &tree, edge_cfg)?;
        let d_hat = approximation_error_d(&fitted.model, &lam_hat, n_mc, seed)?;
        let mut model = serde_json::to_value(&fitted.model).expect("model json");
        model["seed"] = json!(seed);
        model["n_mc"] = json!(n_mc);
        let report = json!({
            "k": k,
            "k_lambda": k_lambda,
            "method": method,
            "seed": seed,
            "n_mc": n_mc,
            "d_hat": d_hat,
            "edges": fitted.edges,
        });
        let suffix = if ks.len() > 1 { format!("_k{k}") } else { String::new() };
        write_json(&dir.join(format!("model{suffix}.json")), &model)?;
        write_json(&dir.join(format!("report{suffix}.json")), &report)?;
        sweep.push(json!({"k": k, "d_hat": d_hat}));
    }
    println!("{}", serde_json::to_string(&json!({"seed": seed, "n_mc": n_mc, "fits": sweep})).expect("json"));
    Ok(())
}

fn cmd_rare_event(a: RareArgs, cfg: &RunConfig) -> CliResult<()> {
    let model: TreeModel = read_json(&require(pick(a.model, cfg.model.clone()), "model")?)?;
    let d = model.d();
    let u = require(pick(a.thresholds, cfg.thresholds.clone()), "thresholds")?;
    if u.len() != d {
        return Err(CliError::input(format!("{} thresholds for a {d}-node model", u.len())));
    }
    let input = pick(a.input, cfg.input.clone());
    let kind = pick(a.margins, cfg.margins.clone()).unwrap_or_else(|| if input.is_some() { "gpd" } else { "unit-frechet" }.into());
    let seed = pick(a.seed, cfg.seed).unwrap_or(0);
    let n_mc = pick(a.n_mc, cfg.n_mc).unwrap_or(DEFAULT_N_MC);
    let mut warnings = Vec::new();
    let mut margin_info = Vec::new();
    let mut empirical = Value::Null;
    let margins = match kind.as_str() {
        "unit-frechet" => MarginSet::unit_frechet(d),
        "gpd" => {
            let input = require(input, "input")?;
            let sample = SampleMatrix::from_csv_path(&input)?;
            if sample.d() != d {
                return Err(CliError::input(format!("data has {} columns, model has {d} nodes", sample.d())));
            }
            let p = pick(a.threshold_p, cfg.threshold_p).unwrap_or(DEFAULT_THRESHOLD_P);
            let mut ms: Vec<Arc<dyn MarginalCdf>> = Vec::with_capacity(d);
            for v in 1..=d {
                let m = HybridMargin::fit(sample.column(v), p)?;
                let g = *m.gpd();
                if u[v - 1].is_finite() && u[v - 1] < g.threshold {
                    let msg = format!(
                        "threshold {} for node {v} is below the GPD threshold {}; using the empirical CDF",
                        u[v - 1],
                        g.threshold
                    );
                    eprintln!("warning: {msg}");
                    warnings.push(msg);
                }
                margin_info.push(json!({"node": v, "threshold": g.threshold, "exceed_fraction": g.exceed_fraction, "sigma": g.sigma, "shape": g.shape}));
                ms.push(Arc::new(m));
            }
            let hits = (0..sample.n()).filter(|&i| (1..=d).any(|v| sample.value(i, v) > u[v - 1])).count();
            empirical = json!({"probability": hits as f64 / sample.n() as f64, "exceedances": hits, "n": sample.n()});
            MarginSet::new(ms)
        }
        other => return Err(CliError::input(format!("unknown margins '{other}' (expected gpd or unit-frechet)"))),
    };
    let r = rare_event_probability(&model, &margins, &u, n_mc, seed)?;
    let report = json!({
        "probability": r.probability,
        "std_error": r.std_error,
        "method": r.method,
        "y": r.y,
        "stdf": r.stdf,
        "thresholds": u.iter().map(|x| if x.is_finite() { json!(x) } else { json!("inf") }).collect::<Vec<_>>(),
        "margins": kind,
        "margin_fits": margin_info,
        "empirical": empirical,
        "warnings": warnings,
        "seed": seed,
        "n_mc": n_mc,
    });
    match pick(a.out, cfg.out.clone()) {
        Some(p) => write_json(&p, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report).expect("json")),
    }
    Ok(())
}

fn fixture_generator(name: &str) -> CliResult<(Generator, Option<Tree>)> {
    Ok(match name {
        "gamma1" => (Generator::husler_reiss(&fixtures::gamma1()), Some(Tree::star(4, 1)?)),
        "gamma2" => (Generator::husler_reiss(&fixtures::gamma2()), Some(Tree::chain(&[1, 2, 3, 4])?)),
        "gamma3" => (Generator::husler_reiss(&fixtures::gamma3_tree_variogram()), Some(fixtures::gamma3_tree())),
        "gamma4" => (Generator::husler_reiss(&fixtures::gamma4()), None),
        "psi1" => (Generator::asym_logistic(&fixtures::PSI1), None),
        "psi2" => (Generator::asym_logistic(&fixtures::PSI2), None),
        "psi3" => (Generator::asym_logistic(&fixtures::PSI3), None),
        other => return Err(CliError::input(format!("unknown fixture '{other}'"))),
    })
}

fn read_matrix_csv(path: &Path) -> CliResult<WeightMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::input(format!("{} row {}: {e}", path.display(), i + 1)))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, f)| f.parse::<f64>().map_err(|_| CliError::input(format!("{} row {}, column {}: cannot parse '{f}'", path.display(), i + 1, j + 1))))
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(WeightMatrix::from_rows(&rows)?)
}

enum GenSource {
    Fixture(String),
    Gamma(PathBuf),
    Psi(Vec<f64>),
    Model(PathBuf),
}

fn generator_source(fixture: Option<String>, gamma: Option<PathBuf>, psi: Option<Vec<f64>>, model: Option<PathBuf>) -> Option<GenSource> {
    fixture
        .map(GenSource::Fixture)
        .or(gamma.map(GenSource::Gamma))
        .or(psi.map(GenSource::Psi))
        .or(model.map(GenSource::Model))
}

/// Generator and the tree it is Markov to, if known. Any generator flag
/// outranks the config file.
fn resolve_generator(g: GeneratorArgs, cfg: &RunConfig) -> CliResult<(Generator, Option<Tree>)> {
    let src = generator_source(g.fixture, g.gamma, g.psi, g.model)
        .or_else(|| generator_source(cfg.fixture.clone(), cfg.gamma.clone(), cfg.psi.clone(), cfg.model.clone()))
        .ok_or_else(|| CliError::input("no generator: give --fixture, --gamma, --psi or --model"))?;
    let gen = match src {
        GenSource::Fixture(name) => fixture_generator(&name)?,
        GenSource::Gamma(p) => (Generator::husler_reiss(&read_matrix_csv(&p)?), None),
        GenSource::Psi(psi) => (Generator::asym_logistic(&psi), None),
        GenSource::Model(p) => {
            let m: TreeModel = read_json(&p)?;
            (Generator::husler_reiss(&m.variogram_tree()?), Some(m.tree().clone()))
        }
    };
    gen.0.validate()?;
    Ok(gen)
}

fn cmd_simulate(a: SimArgs, cfg: &RunConfig) -> CliResult<()> {
    let (generator, _) = resolve_generator(a.generator, cfg)?;
    let n = pick(a.n, cfg.n).unwrap_or(1000);
    let seed = pick(a.seed, cfg.seed).unwrap_or(0);
    let noise_shape = pick(a.noise_shape, cfg.noise_shape);
    let spec = SimulationSpec { generator, n, noise_shape, seed };
    let sample = spec.sample()?;
    let dir = out_dir(pick(a.out, cfg.out.clone()))?;
    let mut buf = Vec::new();
    sample.write_csv(&mut buf)?;
    write_file(&dir.join("sample.csv"), &buf)?;
    let manifest = serde_json::to_value(&spec).expect("spec json");
    write_json(&dir.join("manifest.json"), &manifest)?;
    println!("{}", serde_json::to_string(&manifest).expect("json"));
    Ok(())
}

fn opt_csv<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_simstudy(a: StudyArgs, cfg: &RunConfig) -> CliResult<()> {
    let (generator, known_tree) = resolve_generator(a.generator, cfg)?;
    let method: Method = parse_with(&pick(a.method, cfg.method.clone()).unwrap_or_else(|| "m".into()))?;
    let family: FamilyKind = parse_with(&pick(a.family, cfg.family.clone()).unwrap_or_else(|| "hr".into()))?;
    let k = pick(a.k, cfg.k.as_ref().and_then(|k| k.first().copied())).unwrap_or(100);
    let est = EstimatorConfig::new(method, family, k);
    est.validate()?;
    let mut sc = StudyConfig::new(generator, est);
    sc.n = pick(a.n, cfg.n).unwrap_or(sc.n);
    sc.noise_shape = pick(a.noise_shape, cfg.noise_shape).unwrap_or(sc.noise_shape);
    if let Some(w) = pick(a.weight, cfg.weight.clone()) {
        sc.weight = parse_with(&w)?;
    }
    sc.k_lambda = pick(a.k_lambda, cfg.k_lambda).unwrap_or_else(|| default_k_lambda(sc.n));
    sc.true_tree = match pick(a.true_tree, cfg.true_tree.clone()) {
        Some(p) => Some(read_json(&p)?),
        None => known_tree,
    };
    sc.rare_coords = pick(a.rare_coords, cfg.rare_coords.clone()).unwrap_or(sc.rare_coords);
    sc.rare_p = pick(a.rare_p, cfg.rare_p).unwrap_or(sc.rare_p);
    sc.oracle_tol = pick(a.oracle_tol, cfg.oracle_tol).unwrap_or(sc.oracle_tol);
    sc.n_mc = pick(a.n_mc, cfg.n_mc).unwrap_or(sc.n_mc);
    if sc.n < 2 || sc.k_lambda == 0 || sc.k_lambda > sc.n {
        return Err(CliError::input(format!("need n ≥ 2 and 1 ≤ k_lambda ≤ n (n = {}, k_lambda = {})", sc.n, sc.k_lambda)));
    }
    let reps = pick(a.reps, cfg.reps).unwrap_or(50);
    let seed = pick(a.seed, cfg.seed).unwrap_or(0);
    let results = run_study(&sc, reps, seed);
    let dir = out_dir(pick(a.out, cfg.out.clone()))?;
    let mut wr = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| CliError::input(e.to_string());
    wr.write_record(["rep", "seed", "tree_correct", "wrong_edges", "variogram_distance", "d_hat", "estimate", "truth", "ae", "error"])
        .map_err(map)?;
    for r in &results {
        wr.write_record([
            r.rep.to_string(),
            r.seed.to_string(),
            opt_csv(r.tree_correct),
            opt_csv(r.wrong_edges),
            opt_csv(r.variogram_distance),
            opt_csv(r.d_hat),
            opt_csv(r.estimate),
            opt_csv(r.truth),
            opt_csv(r.ae),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(map)?;
    }
    write_file(&dir.join("replications.csv"), &wr.into_inner().map_err(|e| CliError::input(e.to_string()))?)?;
    let flags: Vec<bool> = results.iter().filter_map(|r| r.tree_correct).collect();
    let recovery = (!flags.is_empty()).then(|| flags.iter().filter(|&&c| c).count() as f64 / flags.len() as f64);
    let mut ae: Vec<f64> = results.iter().filter_map(|r| r.ae).collect();
    ae.sort_by(f64::total_cmp);
    let median_ae = (!ae.is_empty()).then(|| {
        let m = ae.len();
        if m % 2 == 1 { ae[m / 2] } else { 0.5 * (ae[m / 2 - 1] + ae[m / 2]) }
    });
    let summary = json!({
        "config": sc,
        "reps": reps,
        "seed": seed,
        "n_mc": sc.n_mc,
        "failures": results.iter().filter(|r| r.error.is_some()).count(),
        "tree_recovery_fraction": recovery,
        "median_ae": median_ae,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string(&json!({"reps": reps, "seed": seed, "n_mc": sc.n_mc, "tree_recovery_fraction": recovery, "median_ae": median_ae})).expect("json"));
    Ok(())
}

fn cmd_table1(a: Table1Args, cfg: &RunConfig) -> CliResult<()> {
    let seed = pick(a.seed, cfg.seed).unwrap_or(0);
    let n_mc = pick(a.n_mc, cfg.n_mc).unwrap_or(DEFAULT_N_MC);
    let gens = [
        ("gamma1", Generator::husler_reiss(&fixtures::gamma1())),
        ("gamma2", Generator::husler_reiss(&fixtures::gamma2())),
        ("psi1", Generator::asym_logistic(&fixtures::PSI1)),
        ("psi2", Generator::asym_logistic(&fixtures::PSI2)),
    ];
    let mut wr = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| CliError::input(e.to_string());
    wr.write_record(["shape", "labels", "model", "S", "D", "S_published", "D_published", "seed", "n_mc"]).map_err(map)?;
    for row in &fixtures::TABLE1 {
        let tree = row.tree();
        let labels = row.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-");
        for ((name, gen), &(s0, d0)) in gens.iter().zip(&row.values) {
            let (s, d) = tree_summary(gen, &tree, n_mc, seed)?;
            wr.write_record([
                format!("{:?}", row.shape).to_lowercase(),
                labels.clone(),
                name.to_string(),
                format!("{s:.3}"),
                format!("{d:.3}"),
                format!("{s0:.3}"),
                format!("{d0:.3}"),
                seed.to_string(),
                n_mc.to_string(),
            ])
            .map_err(map)?;
        }
    }
    let bytes = wr.into_inner().map_err(|e| CliError::input(e.to_string()))?;
    match pick(a.out, cfg.out.clone()) {
        Some(p) => write_file(&p, &bytes),
        None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::input(e.to_string())),
    }
}

fn cmd_decluster(a: DeclusterArgs, cfg: &RunConfig) -> CliResult<()> {
    let input = require(pick(a.input, cfg.input.clone()), "input")?;
    let series = DailySeries::from_csv_path(&input)?;
    let months = pick(a.months, cfg.months.clone()).unwrap_or_else(|| (1..=12).collect());
    let window = pick(a.window, cfg.window).unwrap_or(DEFAULT_WINDOW);
    let mode = match pick(a.mode, cfg.mode.clone()).as_deref().unwrap_or("multivariate") {
        "multivariate" => DeclusterMode::Multivariate,
        "univariate" => DeclusterMode::Univariate,
        other => return Err(CliError::input(format!("unknown mode '{other}' (expected multivariate or univariate)"))),
    };
    let periods = series.periods(&months);
    let events = decluster(&series, &periods, window, mode)?;
    let dir = out_dir(pick(a.out, cfg.out.clone()))?;
    let mut wr = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| CliError::input(e.to_string());
    match mode {
        DeclusterMode::Multivariate => {
            wr.write_record(["date", "start", "end"].into_iter().map(String::from).chain(events.names.iter().cloned())).map_err(map)?;
            for e in &events.events[0] {
                let row = [e.date.to_string(), e.start.to_string(), e.end.to_string()].into_iter().chain(e.values.iter().map(|x| x.to_string()));
                wr.write_record(row).map_err(map)?;
            }
        }
        DeclusterMode::Univariate => {
            wr.write_record(["station", "date", "start", "end", "value"]).map_err(map)?;
            for (name, list) in events.names.iter().zip(&events.events) {
                for e in list {
                    wr.write_record([name.clone(), e.date.to_string(), e.start.to_string(), e.end.to_string(), e.values[0].to_string()])
                        .map_err(map)?;
                }
            }
        }
    }
    write_file(&dir.join("events.csv"), &wr.into_inner().map_err(|e| CliError::input(e.to_string()))?)?;
    if let Some(levels) = pick(a.mrl, cfg.mrl.clone()) {
        let mut wr = csv::Writer::from_writer(Vec::new());
        wr.write_record(["station", "p", "threshold", "mean_excess", "n_exceed"]).map_err(map)?;
        for (v, name) in events.names.iter().enumerate() {
            for r in mean_residual_life(&events.station_values(v + 1), &levels)? {
                wr.write_record([name.clone(), r.p.to_string(), r.threshold.to_string(), r.mean_excess.to_string(), r.n_exceed.to_string()])
                    .map_err(map)?;
            }
        }
        write_file(&dir.join("mrl.csv"), &wr.into_inner().map_err(|e| CliError::input(e.to_string()))?)?;
    }
    let counts: Vec<usize> = events.events.iter().map(Vec::len).collect();
    println!("{}", serde_json::to_string(&json!({"mode": mode, "window": window, "periods": periods.len(), "skipped_periods": events.skipped_periods, "events": counts})).expect("json"));
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::input("threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::input(format!("cannot configure threads: {e}")))?;
    }
    match cli.command {
        Command::LearnTree(a) => cmd_learn_tree(a, &cfg),
        Command::Fit(a) => cmd_fit(a, &cfg),
        Command::RareEvent(a) => cmd_rare_event(a, &cfg),
        Command::Simulate(a) => cmd_simulate(a, &cfg),
        Command::Simstudy(a) => cmd_simstudy(a, &cfg),
        Command::Table1(a) => cmd_table1(a, &cfg),
        Command::Decluster(a) => cmd_decluster(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
