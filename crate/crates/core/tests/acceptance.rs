//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tailtree::depmeasures::{empirical_tdc_matrix, learn_tree, EdgeWeight};
use tailtree::estimators::{fit_source, fit_tree_model, EstimatorConfig, ExactStdf, Method};
use tailtree::families::FamilyKind;
use tailtree::graph::{prim_max_tree, tree_weight_sum};
use tailtree::margins::{gpd_fit_mle, GpdFit};
use tailtree::simulate::{run_study, tree_summary, Generator, SimulationSpec, StudyConfig};
use tailtree::treemodel::{stdf_tree_closed_alog, stdf_tree_mc, tdc_tree, tdc_tree_mc};
use tailtree::{fixtures, EdgeFamily, SampleMatrix, Tree, TreeModel, WeightMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn within_budget(elapsed: Duration, secs: u64) -> bool {
    elapsed <= Duration::from_secs(secs)
}

fn random_tree(d: usize, rng: &mut ChaCha8Rng) -> Tree {
    let edges: Vec<(usize, usize)> = (2..=d).map(|v| (rng.random_range(1..v), v)).collect();
    // relabel so the root is not always node 1
    let mut perm: Vec<usize> = (1..=d).collect();
    for i in (1..d).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    Tree::new(d, edges.into_iter().map(|(a, b)| (perm[a - 1], perm[b - 1]))).unwrap()
}

fn random_family(kind: Option<FamilyKind>, rng: &mut ChaCha8Rng) -> EdgeFamily {
    let kind = kind.unwrap_or(if rng.random_bool(0.5) { FamilyKind::HuslerReiss } else { FamilyKind::AsymLogisticSpecial });
    match kind {
        FamilyKind::HuslerReiss => EdgeFamily::HuslerReiss { gamma: rng.random_range(0.2..4.0) },
        FamilyKind::AsymLogisticSpecial => {
            EdgeFamily::AsymLogisticSpecial { psi_p: rng.random_range(0.1..1.0), psi_s: rng.random_range(0.1..1.0) }
        }
    }
}

fn random_model(kind: Option<FamilyKind>, rng: &mut ChaCha8Rng) -> TreeModel {
    let d = rng.random_range(4..=6);
    let tree = random_tree(d, rng);
    let edges: Vec<_> = tree.edges().iter().map(|&e| (e, random_family(kind, rng))).collect();
    TreeModel::new(tree, edges).unwrap()
}

fn table1() -> Outcome {
    let t = Instant::now();
    let gens = [
        Generator::husler_reiss(&fixtures::gamma1()),
        Generator::husler_reiss(&fixtures::gamma2()),
        Generator::asym_logistic(&fixtures::PSI1),
        Generator::asym_logistic(&fixtures::PSI2),
    ];
    let mut worst: f64 = 0.0;
    let mut off = 0;
    for row in &fixtures::TABLE1 {
        for (gen, &(s0, d0)) in gens.iter().zip(&row.values) {
            let (s, d) = tree_summary(gen, &row.tree(), 1000, 0).unwrap();
            let diff = (s - s0).abs().max((d - d0).abs());
            if diff > 1e-3 {
                off += 1;
            }
            worst = worst.max(diff);
        }
    }
    let el = t.elapsed();
    outcome(worst <= 1e-3 + 1e-12 && within_budget(el, 5), format!("max |diff| {worst:.2e}, {off}/64 cells off, {el:.2?}"))
}

fn closed_vs_mc() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = rng.random_range(4..=6);
        let psi: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
        let m = TreeModel::asym_logistic(random_tree(d, &mut rng), &psi).unwrap();
        let y: Vec<f64> = (0..m.d()).map(|_| rng.random_range(0.0..2.0)).collect();
        let exact = stdf_tree_closed_alog(&m, &y).unwrap();
        let mc = stdf_tree_mc(&m, &y, 100_000, 100 + i).unwrap();
        worst = worst.max((mc.estimate - exact).abs() / mc.std_error);
    }
    for i in 0..20 {
        let m = random_model(Some(FamilyKind::HuslerReiss), &mut rng);
        let d = m.d();
        let a = rng.random_range(1..=d);
        let b = loop {
            let b = rng.random_range(1..=d);
            if b != a {
                break b;
            }
        };
        let exact = tdc_tree(&m, a, b, 0, 0).unwrap();
        assert!(exact.exact);
        let mc = tdc_tree_mc(&m, &[(a, b)], 100_000, 200 + i).unwrap()[0];
        worst = worst.max((mc.estimate - exact.value).abs() / mc.std_error);
    }
    let el = t.elapsed();
    outcome(worst <= 3.0 && within_budget(el, 60), format!("max |mc − exact| / SE {worst:.2}, {el:.2?}"))
}

fn three_point_inequality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut checked = 0;
    for i in 0..50 {
        let m = random_model(None, &mut rng);
        let d = m.d();
        let pairs: Vec<(usize, usize)> = (1..=d).flat_map(|a| (1..=d).filter(move |&b| b != a).map(move |b| (a, b))).collect();
        let est = tdc_tree_mc(&m, &pairs, 100_000, 300 + i).unwrap();
        let lam = |a: usize, b: usize| est[pairs.iter().position(|&p| p == (a, b)).unwrap()];
        for a in 1..=d {
            for b in a + 1..=d {
                let path = m.tree().path_between(a, b).unwrap();
                for &(_, u) in &path[..path.len() - 1] {
                    let (ab, au, ub) = (lam(a, b), lam(a, u), lam(u, b));
                    let se = (ab.std_error.powi(2) + (ub.estimate * au.std_error).powi(2) + (au.estimate * ub.std_error).powi(2)).sqrt();
                    checked += 1;
                    if ab.estimate < au.estimate * ub.estimate - 3.0 * se
                        || ab.estimate > au.estimate.min(ub.estimate) + 3.0 * se
                    {
                        violations += 1;
                    }
                }
            }
        }
    }
    // Y_j = max(Y_2, ε_j)/2 on the chain 1 − 2 − 3
    let chain = Tree::chain(&[1, 2, 3]).unwrap();
    let m = TreeModel::new(
        chain,
        [
            ((1, 2), EdgeFamily::AsymLogisticSpecial { psi_p: 0.5, psi_s: 1.0 }),
            ((2, 3), EdgeFamily::AsymLogisticSpecial { psi_p: 1.0, psi_s: 0.5 }),
        ],
    )
    .unwrap();
    let est = tdc_tree_mc(&m, &[(1, 2), (2, 3), (1, 3)], 100_000, 7).unwrap();
    let dev = est.iter().map(|e| (e.estimate - 0.5).abs()).fold(0.0, f64::max);
    outcome(
        violations == 0 && dev <= 0.01,
        format!("{violations}/{checked} triples violate; counter-example max |λ − 1/2| {dev:.4}"),
    )
}

/// Decode a Prüfer sequence into the edge list of a labelled tree on `1..=d`.
fn prufer_edges(seq: &[usize], d: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; d + 1];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::new();
    for &s in seq {
        let leaf = (1..=d).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (1..=d).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

fn prim_vs_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for _ in 0..100 {
        let d = rng.random_range(2..=6);
        let w = WeightMatrix::from_fn(d, 1.0, |_, _| rng.random_range(-1.0..1.0));
        let prim = tree_weight_sum(&prim_max_tree(&w).unwrap(), &w);
        let mut best = f64::NEG_INFINITY;
        let total = d.pow(d.saturating_sub(2) as u32);
        for code in 0..total {
            let mut c = code;
            let seq: Vec<usize> = (0..d.saturating_sub(2))
                .map(|_| {
                    let s = c % d + 1;
                    c /= d;
                    s
                })
                .collect();
            let sum: f64 = prufer_edges(&seq, d).iter().map(|&(a, b)| w.get(a, b)).sum();
            best = best.max(sum);
        }
        if (prim - best).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches}/100 optimum mismatches"))
}

fn tree_recovery() -> Outcome {
    let t = Instant::now();
    let gen = Generator::husler_reiss(&fixtures::gamma3_tree_variogram());
    let truth = fixtures::gamma3_tree();
    let reps = 50;
    let (mut tau_ok, mut lam_wrong) = (0, 0);
    for r in 0..reps {
        let spec = SimulationSpec { generator: gen.clone(), n: 1000, noise_shape: Some(2.0), seed: 5000 + r };
        let s = spec.sample().unwrap();
        let (tt, _) = learn_tree(&s, EdgeWeight::Tau, 100).unwrap();
        let (tl, _) = learn_tree(&s, EdgeWeight::Lambda, 100).unwrap();
        tau_ok += usize::from(tt == truth);
        lam_wrong += usize::from(tl != truth);
    }
    let el = t.elapsed();
    let tau_frac = tau_ok as f64 / reps as f64;
    let lam_frac = lam_wrong as f64 / reps as f64;
    outcome(
        tau_frac >= 0.9 && (0.05..=0.5).contains(&lam_frac) && within_budget(el, 600),
        format!("τ correct {tau_frac:.2}, λ wrong {lam_frac:.2}, {el:.2?}"),
    )
}

fn estimator_consistency() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for gamma0 in [0.5, 1.0, 2.0] {
        let g = WeightMatrix::from_fn(2, 0.0, |_, _| gamma0);
        let samples: Vec<SampleMatrix> =
            (0..50).map(|r| SimulationSpec::new(Generator::husler_reiss(&g), 5000, 6000 + r).sample().unwrap()).collect();
        for method in [Method::Moments, Method::M, Method::Wls] {
            let cfg = EstimatorConfig::new(method, FamilyKind::HuslerReiss, 200);
            let mut est: Vec<f64> = samples
                .iter()
                .map(|s| tailtree::estimators::fit_edge(s, (1, 2), &cfg).unwrap().family.params()[0])
                .collect();
            let med = median(&mut est);
            let rel = (med / gamma0 - 1.0).abs();
            ok &= rel <= 0.3;
            let fixed = fit_source(&ExactStdf(EdgeFamily::HuslerReiss { gamma: gamma0 }), &cfg).unwrap().family.params()[0];
            ok &= (fixed - gamma0).abs() <= 1e-6;
            parts.push(format!("γ0={gamma0} {method}: median {med:.3}, fixed {:.1e}", (fixed - gamma0).abs()));
        }
    }
    outcome(ok, parts.join("; "))
}

fn sampler_validation() -> Outcome {
    let n = 200_000;
    let mut ok = true;
    let mut worst_cdf: f64 = 0.0;
    let mut worst_lam: f64 = 0.0;
    for (i, gen) in [Generator::husler_reiss(&fixtures::gamma1()), Generator::asym_logistic(&fixtures::PSI1)].iter().enumerate() {
        let s = gen.sample(n, 70 + i as u64).unwrap();
        for v in 1..=s.d() {
            for x in [0.5f64, 1.0, 2.0, 5.0, 20.0] {
                let p = (-1.0 / x).exp();
                let se = (p * (1.0 - p) / n as f64).sqrt();
                let f = s.column(v).iter().filter(|&&z| z <= x).count() as f64 / n as f64;
                worst_cdf = worst_cdf.max((f - p).abs() / se);
            }
        }
        let lam_hat = empirical_tdc_matrix(&s, 2000).unwrap();
        let lam = gen.lambda_matrix().unwrap();
        for a in 1..=s.d() {
            for b in a + 1..=s.d() {
                worst_lam = worst_lam.max((lam_hat.get(a, b) - lam.get(a, b)).abs());
            }
        }
    }
    ok &= worst_cdf <= 3.0 && worst_lam <= 0.03;
    outcome(ok, format!("max CDF deviation {worst_cdf:.2} SE, max |λ̂ − λ| {worst_lam:.4}"))
}

fn rare_event_pipeline() -> Outcome {
    let t = Instant::now();
    let gen = Generator::asym_logistic(&fixtures::PSI3);
    let est = EstimatorConfig::new(Method::M, FamilyKind::HuslerReiss, 100);
    let cfg = StudyConfig::new(gen, est);
    let reps = run_study(&cfg, 30, 8);
    let failed: Vec<&String> = reps.iter().filter_map(|r| r.error.as_ref()).collect();
    let mut ae: Vec<f64> = reps.iter().filter_map(|r| r.ae).collect();
    let mut abs_ae: Vec<f64> = ae.iter().map(|x| x.abs()).collect();
    let el = t.elapsed();
    if !failed.is_empty() {
        return outcome(false, format!("{} replications failed, first: {}", failed.len(), failed[0]));
    }
    let (m_abs, m) = (median(&mut abs_ae), median(&mut ae));
    outcome(m_abs < 1.5 && m < 0.0 && within_budget(el, 900), format!("median |AE| {m_abs:.3}, median AE {m:.3}, {el:.2?}"))
}

fn gpd_margins() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut sig, mut xi) = (Vec::new(), Vec::new());
    for _ in 0..20 {
        let ex: Vec<f64> = (0..10_000).map(|_| -(1.0 - rng.random::<f64>()).ln()).filter(|&x| x > 0.0).collect();
        let fit = gpd_fit_mle(&ex).unwrap();
        sig.push(fit.sigma);
        xi.push(fit.shape);
    }
    let (ms, mx) = (median(&mut sig), median(&mut xi));
    let values: Vec<f64> = (0..5000).map(|_| rng.random_range(0.0..10.0f64).powi(2)).collect();
    let fit = GpdFit::fit(&values, 0.9).unwrap();
    let n_j = values.iter().filter(|&&x| x > fit.threshold).count() as f64;
    let exact = fit.tail_prob(fit.threshold).unwrap() == n_j / values.len() as f64;
    outcome(
        (ms - 1.0).abs() <= 0.05 && mx.abs() <= 0.05 && exact,
        format!("median σ {ms:.4}, median ϑ {mx:.4}, tail_prob(threshold) = n_j/N_j: {exact}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 table of tree summaries", table1),
        ("2 closed form vs Monte Carlo", closed_vs_mc),
        ("3 three-point tdc inequality", three_point_inequality),
        ("4 Prim vs enumeration", prim_vs_enumeration),
        ("5 tree recovery", tree_recovery),
        ("6 estimator consistency", estimator_consistency),
        ("7 sampler validation", sampler_validation),
        ("8 rare-event pipeline", rare_event_pipeline),
        ("9 GPD margins", gpd_margins),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let o = run();
        all &= o.pass;
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("criterion 10 river discharge tables: SKIP (data not available)");
    assert!(all, "some acceptance criteria failed");
}
