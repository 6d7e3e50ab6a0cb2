//! Bundled parameter sets: the 4-variate variograms `Γ1`, `Γ2`, the
//! 10-variate `Γ3` (tree-structured) and `Γ4`, the max-linear weight
//! vectors `Ψ1`–`Ψ3`, and the published `(S, D)` table for all 4-node trees.

use crate::graph::{Tree, WeightMatrix};

fn symmetric_from_upper(d: usize, upper: &[f64]) -> WeightMatrix {
    assert_eq!(upper.len(), d * (d - 1) / 2);
    let mut it = upper.iter();
    WeightMatrix::from_fn(d, 0.0, |_, _| *it.next().unwrap())
}

pub fn gamma1() -> WeightMatrix {
    symmetric_from_upper(4, &[4.0, 4.0, 4.0, 8.0, 8.0, 8.0])
}

pub fn gamma2() -> WeightMatrix {
    symmetric_from_upper(4, &[4.0, 8.0, 16.0, 4.0, 8.0, 4.0])
}

#[rustfmt::skip]
const GAMMA3_UPPER: [f64; 45] = [
    1.499, 3.563, 3.258, 2.168, 0.500, 2.395, 1.814, 2.852, 1.246,
    2.064, 1.759, 0.669, 0.999, 0.896, 0.315, 1.353, 1.745,
    0.305, 2.733, 3.063, 1.168, 2.379, 1.624, 3.809,
    2.428, 2.758, 0.863, 2.074, 1.319, 3.504,
    1.668, 1.565, 0.354, 2.022, 2.413,
    1.895, 1.313, 2.352, 0.746,
    1.211, 0.456, 2.641,
    1.667, 2.059,
    3.097,
];

#[rustfmt::skip]
const GAMMA4_UPPER: [f64; 45] = [
    1.154, 1.352, 0.981, 1.415, 1.044, 0.773, 0.877, 0.860, 1.373,
    2.797, 2.060, 2.789, 2.092, 1.684, 1.901, 1.762, 2.754,
    2.366, 2.935, 2.473, 2.117, 2.245, 2.220, 2.908,
    2.422, 1.989, 1.699, 1.826, 1.782, 2.379,
    2.518, 2.184, 2.305, 2.283, 2.923,
    1.720, 1.866, 1.801, 2.476,
    1.581, 1.513, 2.135,
    1.660, 2.260,
    2.235,
];

/// The published 10-variate tree-structured variogram (3 decimals).
pub fn gamma3() -> WeightMatrix {
    symmetric_from_upper(10, &GAMMA3_UPPER)
}

/// A 10-variate variogram that is not tree-structured.
pub fn gamma4() -> WeightMatrix {
    symmetric_from_upper(10, &GAMMA4_UPPER)
}

/// Edges of the tree underlying `Γ3`.
pub const GAMMA3_TREE_EDGES: [(usize, usize); 9] =
    [(1, 6), (2, 6), (2, 7), (2, 8), (3, 4), (4, 7), (5, 8), (6, 10), (7, 9)];

pub fn gamma3_tree() -> Tree {
    Tree::new(10, GAMMA3_TREE_EDGES).expect("valid fixture tree")
}

/// `Γ3` restricted to its tree edges and completed by path sums, which is
/// the variogram the samples are drawn from.
pub fn gamma3_tree_variogram() -> WeightMatrix {
    let g = gamma3();
    crate::treemodel::TreeModel::husler_reiss(gamma3_tree(), &g)
        .and_then(|m| m.variogram_tree())
        .expect("valid fixture model")
}

pub const PSI1: [f64; 4] = [0.8, 0.7, 0.4, 0.2];
pub const PSI2: [f64; 4] = [0.5, 0.4, 0.3, 0.2];
pub const PSI3: [f64; 5] = [0.763, 0.835, 0.602, 0.747, 0.859];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Path `v_a − v_b − v_c − v_d`.
    Chain,
    /// Star with center `v_a`.
    Star,
}

/// One row of the published table: the tree and `(S, D)` for `Γ1`, `Γ2`,
/// `Ψ1`, `Ψ2` in that order.
#[derive(Debug, Clone, Copy)]
pub struct Table1Row {
    pub shape: Shape,
    pub labels: [usize; 4],
    pub values: [(f64, f64); 4],
}

impl Table1Row {
    pub fn tree(&self) -> Tree {
        match self.shape {
            Shape::Chain => Tree::chain(&self.labels).expect("valid chain"),
            Shape::Star => Tree::star(4, self.labels[0]).expect("valid star"),
        }
    }
}

macro_rules! row {
    ($shape:ident, [$a:expr, $b:expr, $c:expr, $d:expr], $($s:expr, $dd:expr),*) => {
        Table1Row { shape: Shape::$shape, labels: [$a, $b, $c, $d], values: [$(($s, $dd)),*] }
    };
}

#[rustfmt::skip]
pub const TABLE1: [Table1Row; 16] = [
    row!(Chain, [1, 2, 3, 4], 0.632, 0.638, 0.952, 0.038, 1.3, 0.376, 0.9, 0.490),
    row!(Chain, [1, 2, 4, 3], 0.632, 0.638, 0.792, 0.384, 1.1, 0.716, 0.8, 0.630),
    row!(Chain, [1, 3, 2, 4], 0.632, 0.638, 0.632, 0.488, 1.0, 0.568, 0.8, 0.560),
    row!(Chain, [1, 3, 4, 2], 0.632, 0.638, 0.632, 0.564, 0.8, 1.076, 0.7, 0.750),
    row!(Chain, [1, 4, 2, 3], 0.632, 0.638, 0.520, 0.686, 0.8, 0.908, 0.7, 0.700),
    row!(Chain, [1, 4, 3, 2], 0.632, 0.638, 0.680, 0.435, 0.8, 1.076, 0.7, 0.750),
    row!(Chain, [2, 1, 3, 4], 0.792, 0.346, 0.792, 0.384, 1.3, 0.344, 0.9, 0.466),
    row!(Chain, [2, 1, 4, 3], 0.792, 0.346, 0.680, 0.567, 1.1, 0.704, 0.8, 0.616),
    row!(Chain, [2, 3, 1, 4], 0.792, 0.346, 0.520, 0.686, 1.0, 0.548, 0.8, 0.540),
    row!(Chain, [2, 4, 1, 3], 0.792, 0.346, 0.360, 0.919, 0.8, 0.888, 0.7, 0.680),
    row!(Chain, [3, 2, 1, 4], 0.792, 0.346, 0.680, 0.435, 1.3, 0.296, 0.9, 0.450),
    row!(Chain, [3, 1, 2, 4], 0.792, 0.346, 0.632, 0.564, 1.3, 0.284, 0.9, 0.446),
    row!(Star, [1, 2, 3, 4], 0.952, 0.0, 0.520, 0.669, 1.3, 0.160, 0.9, 0.350),
    row!(Star, [2, 3, 4, 1], 0.632, 0.580, 0.792, 0.272, 1.3, 0.240, 0.9, 0.420),
    row!(Star, [3, 4, 1, 2], 0.632, 0.580, 0.792, 0.272, 1.0, 0.660, 0.8, 0.560),
    row!(Star, [4, 1, 2, 3], 0.632, 0.580, 0.520, 0.669, 0.6, 1.200, 0.6, 0.800),
];
