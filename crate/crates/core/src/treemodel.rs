//! The tree-structured extreme value model: its stable tail dependence
//! function, pairwise tail dependence coefficients, variogram completion,
//! the goodness-of-fit measure `D_T` and rare-event probabilities.
//!
//! Given an extreme at node `i`, the tail tree is `Θ_ij = Π M_e` over the
//! directed edges of the path from `i` to `j`; increments are independent
//! and their law depends on the direction of travel. With the fixed node
//! order `1..d`,
//!
//! ```text
//! ℓ(y) = Σ_i E[ max_{j ≥ i} y_j Θ_ij − max_{j > i} y_j Θ_ij ].
//! ```

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{EdgeFamily, FamilyKind, IncrementLaw};
use crate::graph::{Tree, WeightMatrix};
use crate::normal;
use crate::rng::{chunks, substream};

/// Default Monte Carlo replicate count.
pub const DEFAULT_N_MC: usize = 100_000;

/// A tree with one bivariate family per edge, oriented parent to child
/// from root 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    tree: Tree,
    /// Indexed like [`Tree::oriented_edges`].
    families: Vec<EdgeFamily>,
    /// `(forward, backward)` increment laws per oriented edge.
    laws: Vec<(IncrementLaw, IncrementLaw)>,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        McEstimate { estimate: value, std_error: 0.0 }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelEdgeRepr {
    a: usize,
    b: usize,
    #[serde(flatten)]
    family: EdgeFamily,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    tree: Tree,
    edges: Vec<ModelEdgeRepr>,
}

impl Serialize for TreeModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let edges = self
            .tree
            .oriented_edges()
            .into_iter()
            .zip(&self.families)
            .map(|((a, b), &family)| ModelEdgeRepr { a, b, family })
            .collect();
        ModelRepr { tree: self.tree.clone(), edges }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TreeModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ModelRepr::deserialize(d)?;
        TreeModel::new(r.tree, r.edges.into_iter().map(|e| ((e.a, e.b), e.family)))
            .map_err(serde::de::Error::custom)
    }
}

impl TreeModel {
    /// Assemble a model. Each family is given for the edge oriented `a → b`
    /// and is re-oriented parent to child if needed.
    pub fn new(tree: Tree, edge_families: impl IntoIterator<Item = ((usize, usize), EdgeFamily)>) -> Result<Self> {
        let mut slots: Vec<Option<EdgeFamily>> = vec![None; tree.node_count() - 1];
        for ((a, b), fam) in edge_families {
            fam.validate()?;
            let idx = tree
                .edge_index(a, b)
                .ok_or_else(|| Error::invalid(format!("({a}, {b}) is not a tree edge")))?;
            if slots[idx].is_some() {
                return Err(Error::invalid(format!("edge ({a}, {b}) has more than one family")));
            }
            let parent = tree.parent(idx + 2).expect("non-root child");
            slots[idx] = Some(if parent == a { fam } else { fam.reversed() });
        }
        let oriented = tree.oriented_edges();
        let mut families = Vec::with_capacity(slots.len());
        for (slot, (p, c)) in slots.into_iter().zip(&oriented) {
            families.push(slot.ok_or_else(|| Error::invalid(format!("edge ({p}, {c}) has no family")))?);
        }
        let laws = families.iter().map(|f| (f.increment_law(), f.reverse_increment_law())).collect();
        Ok(TreeModel { tree, families, laws })
    }

    /// Hüsler–Reiss on every edge with `gamma_e` read from `gamma`.
    pub fn husler_reiss(tree: Tree, gamma: &WeightMatrix) -> Result<Self> {
        if gamma.dim() != tree.node_count() {
            return Err(Error::invalid("variogram dimension does not match tree"));
        }
        let edges: Vec<_> = tree
            .oriented_edges()
            .into_iter()
            .map(|(a, b)| ((a, b), EdgeFamily::HuslerReiss { gamma: gamma.get(a, b) }))
            .collect();
        TreeModel::new(tree, edges)
    }

    /// The max-linear model's edge margins for the node weights `psi`.
    pub fn asym_logistic(tree: Tree, psi: &[f64]) -> Result<Self> {
        if psi.len() != tree.node_count() {
            return Err(Error::invalid("psi length does not match tree"));
        }
        let edges: Vec<_> = tree
            .oriented_edges()
            .into_iter()
            .map(|(a, b)| ((a, b), EdgeFamily::AsymLogisticSpecial { psi_p: psi[a - 1], psi_s: psi[b - 1] }))
            .collect();
        TreeModel::new(tree, edges)
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn d(&self) -> usize {
        self.tree.node_count()
    }

    /// `((parent, child), family)` pairs.
    pub fn edges(&self) -> Vec<((usize, usize), EdgeFamily)> {
        self.tree.oriented_edges().into_iter().zip(self.families.iter().copied()).collect()
    }

    /// Family of edge `{a, b}` oriented `a → b`.
    pub fn family(&self, a: usize, b: usize) -> Option<EdgeFamily> {
        let idx = self.tree.edge_index(a, b)?;
        let f = self.families[idx];
        Some(if self.tree.parent(idx + 2) == Some(a) { f } else { f.reversed() })
    }

    fn all_of(&self, kind: FamilyKind) -> bool {
        self.families.iter().all(|f| f.kind() == kind)
    }

    /// Path-sum completion `Γ_uv = Σ_{e ∈ p(u,v)} γ_e` (all edges HR).
    pub fn variogram_tree(&self) -> Result<WeightMatrix> {
        if !self.all_of(FamilyKind::HuslerReiss) {
            return Err(Error::invalid("variogram completion needs Hüsler–Reiss on every edge"));
        }
        let d = self.d();
        let gamma: Vec<f64> = self
            .families
            .iter()
            .map(|f| match *f {
                EdgeFamily::HuslerReiss { gamma } => gamma,
                _ => unreachable!(),
            })
            .collect();
        let mut m = WeightMatrix::new(d, 0.0);
        for u in 1..=d {
            let dist = self.accumulate_from(u, |idx, _, _| gamma[idx], 0.0, |acc, w| acc + w);
            for v in u + 1..=d {
                m.set(u, v, dist[v]);
            }
        }
        Ok(m)
    }

    /// Fold edge values outward from `root`: `out[root] = init`,
    /// `out[w] = combine(out[u], value(edge_idx, u, w))`. 1-based output.
    fn accumulate_from<T: Copy>(
        &self,
        root: usize,
        value: impl Fn(usize, usize, usize) -> T,
        init: T,
        combine: impl Fn(T, T) -> T,
    ) -> Vec<T> {
        let d = self.d();
        let mut out = vec![init; d + 1];
        let mut seen = vec![false; d + 1];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for &w in self.tree.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    let idx = self.tree.edge_index(u, w).expect("tree edge");
                    out[w] = combine(out[u], value(idx, u, w));
                    stack.push(w);
                }
            }
        }
        out
    }

    /// Edges `(index, nearer, farther)` in depth-first order from `root`.
    fn edges_outward(&self, root: usize) -> Vec<(usize, usize, usize)> {
        let d = self.d();
        let mut out = Vec::with_capacity(d - 1);
        let mut seen = vec![false; d + 1];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for &w in self.tree.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    out.push((self.tree.edge_index(u, w).expect("tree edge"), u, w));
                    stack.push(w);
                }
            }
        }
        out
    }

    /// A consistent node weight vector if every edge is asymmetric
    /// logistic and the endpoint weights agree across edges.
    pub fn psi_vector(&self) -> Result<Vec<f64>> {
        let d = self.d();
        let mut psi: Vec<Option<f64>> = vec![None; d + 1];
        for ((p, c), fam) in self.edges() {
            let EdgeFamily::AsymLogisticSpecial { psi_p, psi_s } = fam else {
                return Err(Error::invalid("closed form needs asymmetric logistic on every edge"));
            };
            for (v, val) in [(p, psi_p), (c, psi_s)] {
                match psi[v] {
                    None => psi[v] = Some(val),
                    Some(old) if (old - val).abs() <= 1e-12 => {}
                    Some(old) => {
                        return Err(Error::invalid(format!(
                            "inconsistent psi at node {v}: {old} vs {val}"
                        )))
                    }
                }
            }
        }
        Ok(psi[1..].iter().map(|p| p.expect("every node lies on an edge")).collect())
    }
}

fn check_y(y: &[f64], d: usize) -> Result<()> {
    if y.len() != d {
        return Err(Error::invalid(format!("argument has length {}, model has d = {d}", y.len())));
    }
    if y.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid("stdf arguments must be finite and nonnegative"));
    }
    Ok(())
}

/// One replicate's increments for both directions of every edge.
struct Draws {
    fwd: Vec<f64>,
    back: Vec<f64>,
}

impl TreeModel {
    fn draw<R: rand::Rng>(&self, rng: &mut R, out: &mut Draws) {
        for (e, (f, b)) in self.laws.iter().enumerate() {
            out.fwd[e] = f.sample(rng);
            out.back[e] = b.sample(rng);
        }
    }

    /// `theta[j] = Θ_ij` for the current draw (1-based).
    fn theta_from(&self, i: usize, draws: &Draws, theta: &mut [f64], stack: &mut Vec<usize>, seen: &mut [bool]) {
        seen.iter_mut().for_each(|s| *s = false);
        theta[i] = 1.0;
        seen[i] = true;
        stack.clear();
        stack.push(i);
        while let Some(u) = stack.pop() {
            for &w in self.tree.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    let idx = self.tree.edge_index(u, w).expect("tree edge");
                    let m = if self.tree.parent(w) == Some(u) { draws.fwd[idx] } else { draws.back[idx] };
                    theta[w] = theta[u] * m;
                    stack.push(w);
                }
            }
        }
    }

    /// Run `n_mc` replicates; `eval` maps one draw to a vector of
    /// statistics whose means and standard errors are returned.
    fn monte_carlo<F>(&self, n_mc: usize, seed: u64, width: usize, eval: F) -> Vec<McEstimate>
    where
        F: Fn(&Self, &Draws, &mut Scratch, &mut [f64]) + Sync,
    {
        let d = self.d();
        let ranges: Vec<_> = chunks(n_mc).collect();
        let partials: Vec<(Vec<f64>, Vec<f64>)> = ranges
            .par_iter()
            .map(|&(c, start, end)| {
                let mut rng = substream(seed, c);
                let mut draws = Draws { fwd: vec![0.0; d - 1], back: vec![0.0; d - 1] };
                let mut scratch = Scratch::new(d);
                let mut vals = vec![0.0; width];
                let mut sum = vec![0.0; width];
                let mut sum2 = vec![0.0; width];
                for _ in start..end {
                    self.draw(&mut rng, &mut draws);
                    eval(self, &draws, &mut scratch, &mut vals);
                    for k in 0..width {
                        sum[k] += vals[k];
                        sum2[k] += vals[k] * vals[k];
                    }
                }
                (sum, sum2)
            })
            .collect();
        let mut sum = vec![0.0; width];
        let mut sum2 = vec![0.0; width];
        for (s, s2) in partials {
            for k in 0..width {
                sum[k] += s[k];
                sum2[k] += s2[k];
            }
        }
        let n = n_mc as f64;
        (0..width)
            .map(|k| {
                let mean = sum[k] / n;
                let var = if n_mc > 1 { ((sum2[k] - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
                McEstimate { estimate: mean, std_error: (var / n).sqrt() }
            })
            .collect()
    }
}

struct Scratch {
    theta: Vec<f64>,
    stack: Vec<usize>,
    seen: Vec<bool>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Scratch { theta: vec![0.0; d + 1], stack: Vec::with_capacity(d), seen: vec![false; d + 1] }
    }
}

/// One replicate of the telescoping sum for the node order `order`.
fn telescoping(model: &TreeModel, draws: &Draws, s: &mut Scratch, y: &[f64], order: &[usize]) -> f64 {
    let mut total = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        let tail = &order[pos + 1..];
        if tail.iter().all(|&j| y[j - 1] == 0.0) {
            // remaining maxima reduce to y_i
            total += y[i - 1];
            continue;
        }
        let (theta, stack, seen) = (&mut s.theta, &mut s.stack, &mut s.seen);
        model.theta_from(i, draws, theta, stack, seen);
        let rest = tail.iter().map(|&j| y[j - 1] * theta[j]).fold(0.0, f64::max);
        total += y[i - 1].max(rest) - rest;
    }
    total
}

/// Monte Carlo estimate of `ℓ(y)` with node order `1..d`.
pub fn stdf_tree_mc(model: &TreeModel, y: &[f64], n_mc: usize, seed: u64) -> Result<McEstimate> {
    let order: Vec<usize> = (1..=model.d()).collect();
    stdf_tree_mc_ordered(model, y, &order, n_mc, seed)
}

/// As [`stdf_tree_mc`], with the nodes visited in `order` (any
/// permutation of `1..=d` gives the same expectation).
pub fn stdf_tree_mc_ordered(model: &TreeModel, y: &[f64], order: &[usize], n_mc: usize, seed: u64) -> Result<McEstimate> {
    Ok(stdf_tree_mc_batch_ordered(model, &[y.to_vec()], order, n_mc, seed)?[0])
}

/// `ℓ` at several points under common random numbers.
pub fn stdf_tree_mc_batch(model: &TreeModel, ys: &[Vec<f64>], n_mc: usize, seed: u64) -> Result<Vec<McEstimate>> {
    let order: Vec<usize> = (1..=model.d()).collect();
    stdf_tree_mc_batch_ordered(model, ys, &order, n_mc, seed)
}

fn stdf_tree_mc_batch_ordered(
    model: &TreeModel,
    ys: &[Vec<f64>],
    order: &[usize],
    n_mc: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    let d = model.d();
    if n_mc == 0 {
        return Err(Error::invalid("n_mc must be at least 1"));
    }
    for y in ys {
        check_y(y, d)?;
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (1..=d).collect::<Vec<_>>() {
        return Err(Error::invalid("order must be a permutation of 1..=d"));
    }
    Ok(model.monte_carlo(n_mc, seed, ys.len(), |m, draws, s, out| {
        for (k, y) in ys.iter().enumerate() {
            out[k] = telescoping(m, draws, s, y, order);
        }
    }))
}

/// Exact `ℓ(y)` for an all-asymmetric-logistic model with node weights
/// `ψ`, by the maximum–minimums identity over subsets.
///
/// For term `i` and `S ⊆ {i, …, d}`,
/// `E[max_{j∈S} y_j Θ_ij] = Σ_{∅≠U⊆S} (−1)^{|U|+1} P(U) min_{j∈U} y_j ψ_j/ψ_i`
/// where `P(U)` is the product of the weights of the tails (as seen from
/// `i`) of all edges on the paths from `i` to `U`.
pub fn stdf_tree_closed_alog(model: &TreeModel, y: &[f64]) -> Result<f64> {
    let d = model.d();
    check_y(y, d)?;
    if d > 20 {
        return Err(Error::invalid(format!("subset enumeration is limited to d ≤ 20, got {d}")));
    }
    let psi = model.psi_vector()?;
    let mut total = 0.0;
    for i in 1..=d {
        let tail: Vec<usize> = (i + 1..=d).filter(|&j| y[j - 1] > 0.0).collect();
        if psi[i - 1] == 0.0 || tail.is_empty() {
            total += y[i - 1];
            continue;
        }
        // edge masks of the paths from i, and the weight of each edge's
        // endpoint nearer to i
        let masks = model.accumulate_from(i, |idx, _, _| 1u32 << idx, 0u32, |a, b| a | b);
        let mut tail_weight = vec![1.0; d - 1];
        for (idx, u, _) in model.edges_outward(i) {
            tail_weight[idx] = psi[u - 1];
        }
        let items: Vec<(u32, f64)> = tail.iter().map(|&j| (masks[j], y[j - 1] * psi[j - 1] / psi[i - 1])).collect();
        let with_i = expected_max(&items, Some(y[i - 1]), &tail_weight);
        let without_i = expected_max(&items, None, &tail_weight);
        total += with_i - without_i;
    }
    Ok(total)
}

/// `E[max]` over `items` (plus the sure item `own`) by inclusion–exclusion.
fn expected_max(items: &[(u32, f64)], own: Option<f64>, tail_weight: &[f64]) -> f64 {
    let m = items.len();
    let count = 1usize << m;
    let mut mask = vec![0u32; count];
    let mut minv = vec![f64::INFINITY; count];
    let mut sum = 0.0;
    for s in 1..count {
        let low = s.trailing_zeros() as usize;
        let prev = s & (s - 1);
        mask[s] = mask[prev] | items[low].0;
        minv[s] = minv[prev].min(items[low].1);
        let mut prob = 1.0;
        let mut bits = mask[s];
        while bits != 0 {
            prob *= tail_weight[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        let sign = if s.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * prob * minv[s];
        if let Some(o) = own {
            // the same subset together with i: one more element, sign flips
            sum -= sign * prob * minv[s].min(o);
        }
    }
    if let Some(o) = own {
        sum += o;
    }
    sum
}

/// A tail dependence coefficient, exact or estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdcValue {
    pub value: f64,
    pub std_error: f64,
    pub exact: bool,
}

/// `λ_ab = E[min(1, Π_{e ∈ p(a,b)} M_e)]`, in closed form when every edge on
/// the path shares a built-in family, else by Monte Carlo.
pub fn tdc_tree(model: &TreeModel, a: usize, b: usize, n_mc: usize, seed: u64) -> Result<TdcValue> {
    let path = model.tree().path_between(a, b)?;
    let fams: Vec<EdgeFamily> = path.iter().map(|&(u, w)| model.family(u, w).expect("path edge")).collect();
    if fams.iter().all(|f| f.kind() == FamilyKind::HuslerReiss) {
        let g: f64 = fams.iter().map(|f| f.params()[0]).sum();
        return Ok(TdcValue { value: 2.0 * normal::sf(g.sqrt() / 2.0), std_error: 0.0, exact: true });
    }
    if fams.iter().all(|f| f.kind() == FamilyKind::AsymLogisticSpecial) {
        let (mut tp, mut ts) = (1.0, 1.0);
        for f in &fams {
            if let EdgeFamily::AsymLogisticSpecial { psi_p, psi_s } = *f {
                tp *= psi_p;
                ts *= psi_s;
            }
        }
        return Ok(TdcValue { value: tp.min(ts), std_error: 0.0, exact: true });
    }
    if n_mc == 0 {
        return Err(Error::invalid("n_mc must be at least 1"));
    }
    let est = tdc_tree_mc(model, &[(a, b)], n_mc, seed)?[0];
    Ok(TdcValue { value: est.estimate, std_error: est.std_error, exact: false })
}

/// Monte Carlo `λ` for several pairs under common random numbers.
pub fn tdc_tree_mc(model: &TreeModel, pairs: &[(usize, usize)], n_mc: usize, seed: u64) -> Result<Vec<McEstimate>> {
    let d = model.d();
    for &(a, b) in pairs {
        if a == b || a == 0 || b == 0 || a > d || b > d {
            return Err(Error::invalid(format!("invalid pair ({a}, {b})")));
        }
    }
    if n_mc == 0 {
        return Err(Error::invalid("n_mc must be at least 1"));
    }
    let paths: Vec<Vec<(usize, usize)>> = pairs.iter().map(|&(a, b)| model.tree().path_between(a, b)).collect::<Result<_>>()?;
    let idx: Vec<Vec<(usize, bool)>> = paths
        .iter()
        .map(|p| {
            p.iter()
                .map(|&(u, w)| (model.tree().edge_index(u, w).expect("edge"), model.tree().parent(w) == Some(u)))
                .collect()
        })
        .collect();
    Ok(model.monte_carlo(n_mc, seed, pairs.len(), |_, draws, _, out| {
        for (k, p) in idx.iter().enumerate() {
            let prod: f64 = p.iter().map(|&(e, fwd)| if fwd { draws.fwd[e] } else { draws.back[e] }).product();
            out[k] = prod.min(1.0);
        }
    }))
}

/// All pairwise `λ_ab` of the model (unit diagonal). Pairs needing Monte
/// Carlo share one run.
pub fn tdc_matrix(model: &TreeModel, n_mc: usize, seed: u64) -> Result<(WeightMatrix, WeightMatrix)> {
    let d = model.d();
    let mut lam = WeightMatrix::new(d, 1.0);
    let mut se = WeightMatrix::new(d, 0.0);
    let mut mc_pairs = Vec::new();
    for a in 1..=d {
        for b in a + 1..=d {
            let path = model.tree().path_between(a, b)?;
            let kinds: Vec<_> = path.iter().map(|&(u, w)| model.family(u, w).unwrap().kind()).collect();
            if kinds.windows(2).all(|w| w[0] == w[1]) {
                lam.set(a, b, tdc_tree(model, a, b, 1, seed)?.value);
            } else {
                mc_pairs.push((a, b));
            }
        }
    }
    if !mc_pairs.is_empty() {
        for (&(a, b), est) in mc_pairs.iter().zip(tdc_tree_mc(model, &mc_pairs, n_mc, seed)?) {
            lam.set(a, b, est.estimate);
            se.set(a, b, est.std_error);
        }
    }
    Ok((lam, se))
}

/// `D = Σ_{non-adjacent a<b} |λ_ab(model) − λ_ref,ab|`.
pub fn approximation_error_d(model: &TreeModel, lambda_ref: &WeightMatrix, n_mc: usize, seed: u64) -> Result<f64> {
    let d = model.d();
    if lambda_ref.dim() != d {
        return Err(Error::invalid(format!(
            "reference matrix is {}×{}, model has d = {d}",
            lambda_ref.dim(),
            lambda_ref.dim()
        )));
    }
    let (lam, _) = tdc_matrix(model, n_mc, seed)?;
    let mut total = 0.0;
    for a in 1..=d {
        for b in a + 1..=d {
            if !model.tree().is_adjacent(a, b) {
                total += (lam.get(a, b) - lambda_ref.get(a, b)).abs();
            }
        }
    }
    Ok(total)
}

/// Closed-form Hüsler–Reiss stdf for at most three positive coordinates.
///
/// `ℓ(y) = Σ_j y_j Φ_{k−1}(η^{(j)}; R^{(j)})` with
/// `η^{(j)}_l = (log(y_j/y_l) + Γ_jl/2)/√Γ_jl`.
pub fn hr_stdf_closed(gamma: &WeightMatrix, y: &[f64]) -> Result<f64> {
    check_y(y, gamma.dim())?;
    let active: Vec<usize> = (1..=y.len()).filter(|&v| y[v - 1] > 0.0).collect();
    match active.len() {
        0 => Ok(0.0),
        1 => Ok(y[active[0] - 1]),
        2 => {
            let (a, b) = (active[0], active[1]);
            Ok(crate::families::hr_stdf(gamma.get(a, b), y[a - 1], y[b - 1]))
        }
        3 => {
            let mut total = 0.0;
            for (pos, &j) in active.iter().enumerate() {
                let others: Vec<usize> = active.iter().enumerate().filter(|&(p, _)| p != pos).map(|(_, &v)| v).collect();
                let (k, l) = (others[0], others[1]);
                let (gk, gl, gkl) = (gamma.get(j, k), gamma.get(j, l), gamma.get(k, l));
                let yj = y[j - 1];
                let eta = |v: usize, g: f64| ((yj / y[v - 1]).ln() + g / 2.0) / g.sqrt();
                let rho = (gk + gl - gkl) / (2.0 * (gk * gl).sqrt());
                total += yj * normal::bvn_cdf(eta(k, gk), eta(l, gl), rho);
            }
            Ok(total)
        }
        n => Err(Error::Unsupported(format!(
            "closed-form Hüsler–Reiss stdf for {n} positive coordinates"
        ))),
    }
}

/// A univariate CDF used to map thresholds to stdf arguments.
pub trait MarginalCdf: Send + Sync {
    fn cdf(&self, x: f64) -> f64;
}

/// Unit-Fréchet margin `exp(−1/x)`.
#[derive(Debug, Clone, Copy)]
pub struct UnitFrechet;

impl MarginalCdf for UnitFrechet {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-1.0 / x).exp()
        }
    }
}

/// Per-node marginal CDFs.
#[derive(Clone)]
pub struct MarginSet {
    margins: Vec<Arc<dyn MarginalCdf>>,
}

impl MarginSet {
    pub fn new(margins: Vec<Arc<dyn MarginalCdf>>) -> Self {
        MarginSet { margins }
    }

    pub fn unit_frechet(d: usize) -> Self {
        MarginSet { margins: (0..d).map(|_| Arc::new(UnitFrechet) as Arc<dyn MarginalCdf>).collect() }
    }

    pub fn len(&self) -> usize {
        self.margins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.margins.is_empty()
    }

    pub fn cdf(&self, v: usize, x: f64) -> f64 {
        self.margins[v - 1].cdf(x)
    }
}

/// How a rare-event probability was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RareEvent {
    /// `P(∪_v {X_v > u_v})`.
    pub probability: f64,
    pub std_error: f64,
    pub method: EvalMethod,
    /// Stdf arguments `−log F_v(u_v)`.
    pub y: Vec<f64>,
    pub stdf: f64,
}

/// Compute the stdf arguments `y_v = −log F_v(u_v)` (0 for `u_v = ∞`).
pub fn stdf_arguments(margins: &MarginSet, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != margins.len() {
        return Err(Error::invalid("threshold vector length does not match margins"));
    }
    u.iter()
        .enumerate()
        .map(|(i, &uv)| {
            if uv == f64::INFINITY {
                return Ok(0.0);
            }
            if uv.is_nan() {
                return Err(Error::invalid(format!("threshold {} is NaN", i + 1)));
            }
            let f = margins.cdf(i + 1, uv);
            if f <= 0.0 {
                return Err(Error::invalid(format!(
                    "F_{}({uv}) = 0: the union probability is 1 and the approximation degenerates",
                    i + 1
                )));
            }
            Ok(-f.min(1.0).ln())
        })
        .collect()
}

/// `ℓ(y)` using the best available route: exact for a single positive
/// coordinate, consistent all-asymmetric-logistic models and
/// all-Hüsler–Reiss models with at most three positive coordinates; Monte
/// Carlo otherwise.
pub fn stdf_tree(model: &TreeModel, y: &[f64], n_mc: usize, seed: u64) -> Result<(McEstimate, EvalMethod)> {
    check_y(y, model.d())?;
    let active = y.iter().filter(|&&v| v > 0.0).count();
    if active <= 1 {
        return Ok((McEstimate::exact(y.iter().sum()), EvalMethod::Exact));
    }
    if let Ok(v) = stdf_tree_closed_alog(model, y) {
        return Ok((McEstimate::exact(v), EvalMethod::Exact));
    }
    if active <= 3 {
        if let Ok(g) = model.variogram_tree() {
            return Ok((McEstimate::exact(hr_stdf_closed(&g, y)?), EvalMethod::Exact));
        }
    }
    Ok((stdf_tree_mc(model, y, n_mc, seed)?, EvalMethod::MonteCarlo))
}

/// `1 − G_M` at the thresholds `u`, i.e. the probability that at least one
/// coordinate exceeds its threshold under the model.
pub fn rare_event_probability(model: &TreeModel, margins: &MarginSet, u: &[f64], n_mc: usize, seed: u64) -> Result<RareEvent> {
    if margins.len() != model.d() {
        return Err(Error::invalid("margin count does not match model dimension"));
    }
    let y = stdf_arguments(margins, u)?;
    let (l, method) = stdf_tree(model, &y, n_mc, seed)?;
    Ok(RareEvent {
        probability: -(-l.estimate).exp_m1(),
        // delta method for 1 − exp(−ℓ)
        std_error: (-l.estimate).exp() * l.std_error,
        method,
        y,
        stdf: l.estimate,
    })
}
