//! Mixed cells and scaled mixed volume by tropical-flag pivoting.
//!
//! The lower facets of a lifted Cayley configuration form a connected graph;
//! each facet is kept as its active label set and an inverse of the active
//! rows, and neighbours are reached by ratio tests over real polynomials in a
//! tropical parameter. Mixed cells are the quota facets of the deepest level.

pub mod cells;
pub mod driver;
pub mod error;
pub mod generators;
pub mod hull;
pub mod lattice;
pub mod linalg;
pub mod oracle;
pub mod parallel;
pub mod pivot;
pub mod rpoly;
pub mod support;
pub mod traversal;

pub use cells::{CellsFile, MixedCell};
pub use driver::{all_mixed_cells_full, RunOptions, RunReport};
pub use error::{Error, Result};
pub use support::{Lifting, SupportSystem};
