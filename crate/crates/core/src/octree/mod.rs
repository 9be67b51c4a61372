//! Out-of-core octree. Leaves hold original points, inner cells hold uniform
//! random subsamples of their descendants, and every cell is addressed by a
//! level-indexed lattice coordinate.

mod build;
mod index;
mod manifest;
pub mod store;
mod tree;

pub use build::{BuildConfig, OctreeBuilder};
pub use index::CellIndex;
pub use manifest::{OctreeManifest, FORMAT_VERSION, HIERARCHY_FILE, MANIFEST_FILE};
pub use store::{CellMeta, CellStore, DirStore, Hierarchy, MemStore};
pub use tree::{IoStats, Octree, OctreeCell, DEFAULT_CACHE_BYTES};
