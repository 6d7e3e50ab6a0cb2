//! Tree-structured multivariate extreme value models.
//!
//! The pipeline is: learn a maximum dependence tree from ranks
//! ([`graph`], [`depmeasures`]), fit a bivariate stable tail dependence
//! function on every edge ([`estimators`], [`families`]), and evaluate the
//! glued model ([`treemodel`]) for tail dependence coefficients and
//! rare-event probabilities with GPD margins ([`margins`]). [`simulate`]
//! holds the exact samplers and numerical oracles used to validate it all.

pub mod depmeasures;
pub mod error;
pub mod estimators;
pub mod families;
pub mod fixtures;
pub mod graph;
pub mod margins;
pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod simulate;
pub mod treemodel;

pub use depmeasures::SampleMatrix;
pub use error::{Error, Result};
pub use families::{EdgeFamily, IncrementLaw};
pub use graph::{Tree, WeightMatrix};
pub use margins::GpdFit;
pub use treemodel::TreeModel;
