//! Trees over the node set `1..=d`, unique-path queries and maximum
//! spanning trees by Prim's algorithm.
//!
//! Nodes are 1-based throughout the public API, matching the JSON format
//! `{"d": int, "edges": [[a,b], ...]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected spanning tree on nodes `1..=d`.
///
/// Stored as adjacency lists plus a parent array rooted at node 1, so both
/// orientation queries and path extraction are O(d).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr", into = "TreeRepr")]
pub struct Tree {
    d: usize,
    /// Edges as supplied, normalised so that `a < b`, sorted.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    /// `parent[v]` for 1-based `v`; `parent[1] == 0`.
    parent: Vec<usize>,
    depth: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    d: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<TreeRepr> for Tree {
    type Error = Error;
    fn try_from(r: TreeRepr) -> Result<Self> {
        Tree::new(r.d, r.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<Tree> for TreeRepr {
    fn from(t: Tree) -> Self {
        TreeRepr { d: t.d, edges: t.edges.iter().map(|&(a, b)| [a, b]).collect() }
    }
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.edges == other.edges
    }
}
impl Eq for Tree {}

impl Tree {
    /// Build a tree, validating node range, edge count, self-loops,
    /// duplicates and connectivity (which, with `d - 1` edges, implies
    /// acyclicity).
    pub fn new(d: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("a tree needs at least 2 nodes, got d = {d}")));
        }
        let mut normalized = Vec::with_capacity(d - 1);
        for (a, b) in edges {
            if a == b {
                return Err(Error::invalid(format!("self-loop at node {a}")));
            }
            for v in [a, b] {
                if v == 0 || v > d {
                    return Err(Error::invalid(format!("node {v} outside 1..={d}")));
                }
            }
            normalized.push((a.min(b), a.max(b)));
        }
        if normalized.len() != d - 1 {
            return Err(Error::invalid(format!(
                "a tree on {d} nodes has {} edges, got {}",
                d - 1,
                normalized.len()
            )));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate edge"));
        }

        let mut adjacency = vec![Vec::new(); d + 1];
        for &(a, b) in &normalized {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable();
        }

        let mut parent = vec![0usize; d + 1];
        let mut depth = vec![0usize; d + 1];
        let mut seen = vec![false; d + 1];
        let mut stack = vec![1usize];
        seen[1] = true;
        let mut visited = 1;
        while let Some(u) = stack.pop() {
            for &w in &adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = u;
                    depth[w] = depth[u] + 1;
                    visited += 1;
                    stack.push(w);
                }
            }
        }
        if visited != d {
            return Err(Error::invalid("edges do not form a connected graph (cycle present)"));
        }
        Ok(Tree { d, edges: normalized, adjacency, parent, depth })
    }

    /// Path graph `order[0] - order[1] - ... - order[d-1]`.
    pub fn chain(order: &[usize]) -> Result<Self> {
        Tree::new(order.len(), order.windows(2).map(|w| (w[0], w[1])))
    }

    /// Star with the given center over nodes `1..=d`.
    pub fn star(d: usize, center: usize) -> Result<Self> {
        Tree::new(d, (1..=d).filter(|&v| v != center).map(|v| (center, v)))
    }

    pub fn node_count(&self) -> usize {
        self.d
    }

    /// Edges with `a < b`, in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edges oriented `(parent, child)` away from node 1, ordered by child.
    pub fn oriented_edges(&self) -> Vec<(usize, usize)> {
        (2..=self.d).map(|v| (self.parent[v], v)).collect()
    }

    /// Parent of `v` when rooted at node 1 (`None` for the root).
    pub fn parent(&self, v: usize) -> Option<usize> {
        (v != 1).then(|| self.parent[v])
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Position of the edge `{a, b}` in [`Tree::oriented_edges`], i.e. the
    /// index of its child node minus 2.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        if a == 0 || b == 0 || a > self.d || b > self.d {
            return None;
        }
        if a != 1 && self.parent[a] == b {
            Some(a - 2)
        } else if b != 1 && self.parent[b] == a {
            Some(b - 2)
        } else {
            None
        }
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v == 0 || v > self.d {
            Err(Error::invalid(format!("node {v} outside 1..={}", self.d)))
        } else {
            Ok(())
        }
    }

    /// The unique path from `a` to `b` as directed edges
    /// `(u0,u1),(u1,u2),...,(u_{m-1},u_m)` with `u0 = a`, `u_m = b`.
    pub fn path_between(&self, a: usize, b: usize) -> Result<Vec<(usize, usize)>> {
        self.check_node(a)?;
        self.check_node(b)?;
        if a == b {
            return Err(Error::invalid(format!("path endpoints coincide ({a})")));
        }
        let (mut x, mut y) = (a, b);
        let mut up = Vec::new();
        let mut down = Vec::new();
        while self.depth[x] > self.depth[y] {
            up.push((x, self.parent[x]));
            x = self.parent[x];
        }
        while self.depth[y] > self.depth[x] {
            down.push((self.parent[y], y));
            y = self.parent[y];
        }
        while x != y {
            up.push((x, self.parent[x]));
            x = self.parent[x];
            down.push((self.parent[y], y));
            y = self.parent[y];
        }
        up.extend(down.into_iter().rev());
        Ok(up)
    }

    /// Number of edges shared with `other` (both trees on the same node set).
    pub fn common_edges(&self, other: &Tree) -> usize {
        self.edges.iter().filter(|e| other.edges.binary_search(e).is_ok()).count()
    }
}

/// Symmetric `d × d` matrix of pairwise weights; the diagonal is unused by
/// tree algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    d: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    /// A matrix filled with `diagonal` on the diagonal and zeros elsewhere.
    pub fn new(d: usize, diagonal: f64) -> Self {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = diagonal;
        }
        WeightMatrix { d, data }
    }

    /// From row-major rows; must be square and symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("weight matrix must be square"));
        }
        let mut m = WeightMatrix::new(d, 0.0);
        for i in 0..d {
            for j in 0..d {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * rows[i][j].abs().max(1.0) {
                    return Err(Error::invalid(format!(
                        "weight matrix not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                m.data[i * d + j] = rows[i][j];
            }
        }
        Ok(m)
    }

    /// Build from a function of 1-based unordered pairs `a < b`.
    pub fn from_fn(d: usize, diagonal: f64, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = WeightMatrix::new(d, diagonal);
        for a in 1..=d {
            for b in a + 1..=d {
                m.set(a, b, f(a, b));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Entry for 1-based nodes.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[(a - 1) * self.d + (b - 1)]
    }

    /// Set both `(a, b)` and `(b, a)`.
    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        let d = self.d;
        self.data[(a - 1) * d + (b - 1)] = value;
        self.data[(b - 1) * d + (a - 1)] = value;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.d).map(|r| r.to_vec()).collect()
    }

    /// Off-diagonal entries are all finite.
    pub fn is_finite(&self) -> bool {
        (1..=self.d).all(|a| (1..=self.d).all(|b| a == b || self.get(a, b).is_finite()))
    }
}

/// Sum of `weights` over the edges of `tree`.
pub fn tree_weight_sum(tree: &Tree, weights: &WeightMatrix) -> f64 {
    tree.edges().iter().map(|&(a, b)| weights.get(a, b)).sum()
}

/// Maximum-weight spanning tree by Prim's algorithm started at node 1.
///
/// Among frontier edges of equal maximal weight the one with the smallest
/// `(min node, max node)` label is taken, so the output is deterministic.
pub fn prim_max_tree(weights: &WeightMatrix) -> Result<Tree> {
    let d = weights.dim();
    if d < 2 {
        return Err(Error::invalid(format!("need at least 2 nodes, got {d}")));
    }
    if !weights.is_finite() {
        return Err(Error::invalid("weight matrix has non-finite entries"));
    }
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut in_tree = vec![false; d + 1];
    // best[v] = (weight, in-tree endpoint) of the best connection of v.
    let mut best: Vec<Option<(f64, usize)>> = vec![None; d + 1];
    in_tree[1] = true;
    for v in 2..=d {
        best[v] = Some((weights.get(1, v), 1));
    }
    let mut edges = Vec::with_capacity(d - 1);
    for _ in 1..d {
        let mut pick: Option<(usize, f64, (usize, usize))> = None;
        for v in 2..=d {
            if in_tree[v] {
                continue;
            }
            let (w, u) = best[v].expect("frontier entry");
            let k = key(u, v);
            let better = match pick {
                None => true,
                Some((_, pw, pk)) => w > pw || (w == pw && k < pk),
            };
            if better {
                pick = Some((v, w, k));
            }
        }
        let (v, _, k) = pick.expect("frontier is non-empty while tree is incomplete");
        in_tree[v] = true;
        edges.push(k);
        for x in 2..=d {
            if in_tree[x] {
                continue;
            }
            let w = weights.get(v, x);
            let (bw, bu) = best[x].expect("frontier entry");
            if w > bw || (w == bw && key(v, x) < key(bu, x)) {
                best[x] = Some((w, v));
            }
        }
    }
    Tree::new(d, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_trees() {
        assert!(Tree::new(1, []).is_err());
        assert!(Tree::new(3, [(1, 2)]).is_err());
        assert!(Tree::new(3, [(1, 1), (2, 3)]).is_err());
        assert!(Tree::new(3, [(1, 2), (2, 1)]).is_err());
        assert!(Tree::new(3, [(1, 4), (2, 3)]).is_err());
        assert!(Tree::new(4, [(1, 2), (2, 3), (3, 1)]).is_err());
    }

    #[test]
    fn chain_path() {
        let t = Tree::chain(&[1, 2, 3]).unwrap();
        assert_eq!(t.path_between(1, 3).unwrap(), vec![(1, 2), (2, 3)]);
        assert_eq!(t.path_between(3, 1).unwrap(), vec![(3, 2), (2, 1)]);
        assert!(t.path_between(2, 2).is_err());
        assert!(t.path_between(0, 2).is_err());
        assert!(t.path_between(1, 4).is_err());
    }

    #[test]
    fn star_path() {
        let t = Tree::star(4, 1).unwrap();
        assert_eq!(t.path_between(2, 4).unwrap(), vec![(2, 1), (1, 4)]);
    }

    #[test]
    fn rooted_orientation() {
        let t = Tree::chain(&[3, 1, 2, 4]).unwrap();
        assert_eq!(t.oriented_edges(), vec![(1, 2), (1, 3), (2, 4)]);
        assert_eq!(t.edge_index(3, 1), Some(1));
        assert_eq!(t.edge_index(4, 2), Some(2));
        assert_eq!(t.edge_index(3, 4), None);
    }

    #[test]
    fn prim_small_cases() {
        let w = WeightMatrix::from_rows(&[
            vec![1.0, 0.5, 0.4],
            vec![0.5, 1.0, 0.3],
            vec![0.4, 0.3, 1.0],
        ])
        .unwrap();
        assert_eq!(prim_max_tree(&w).unwrap().edges(), &[(1, 2), (1, 3)]);

        let w2 = WeightMatrix::from_rows(&[vec![1.0, -0.2], vec![-0.2, 1.0]]).unwrap();
        assert_eq!(prim_max_tree(&w2).unwrap().edges(), &[(1, 2)]);
    }

    #[test]
    fn prim_ties_take_lowest_label() {
        let w = WeightMatrix::from_fn(5, 1.0, |_, _| 0.7);
        // Every frontier step prefers an edge out of node 1.
        assert_eq!(prim_max_tree(&w).unwrap(), Tree::star(5, 1).unwrap());
    }

    #[test]
    fn prim_rejects_nan() {
        let mut w = WeightMatrix::from_fn(3, 1.0, |_, _| 0.1);
        w.set(2, 3, f64::NAN);
        assert!(prim_max_tree(&w).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = Tree::chain(&[2, 1, 3]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"d":3,"edges":[[1,2],[1,3]]}"#);
        let back: Tree = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<Tree>(r#"{"d":3,"edges":[[1,2]]}"#).is_err());
    }
}
