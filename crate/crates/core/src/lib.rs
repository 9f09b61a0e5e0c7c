//! Exact isotopic fine structure: the `k` most abundant isotopologue peaks of
//! a chemical formula, with no binning or rounding of masses.
//!
//! Each element contributes a leaf that enumerates its subisotopologues in
//! descending probability ([`multinomial`]). Leaves are merged pairwise in a
//! balanced binary tree of online X+Y selectors ([`pairwise`], [`tree`]).
//! Every stream in the tree is layer-ordered ([`loh`]): each layer bounds the
//! next, and layer sizes grow geometrically by a factor `alpha`.

pub mod cli;
pub mod formula;
pub mod isotope_data;
pub mod loh;
pub mod multinomial;
pub mod oracle;
pub mod pairwise;
pub mod peak;
pub mod tree;

pub use formula::{parse_formula, Composition, FormulaError};
pub use isotope_data::{Isotope, IsotopeTable, TableError};
pub use loh::{LayerCursor, LayerSchedule, LayeredValues};
pub use multinomial::{MultinomialConfig, MultinomialGenerator};
pub use pairwise::{LayerStream, PairwiseSelector};
pub use peak::Peak;
pub use tree::{build_tree, BuildError, Selection, SelectionRequest, TreeNode};
