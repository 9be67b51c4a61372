//! Interactive planar reconstruction from large point clouds: incremental
//! plane regression, an out-of-core octree, seeded region growing with
//! adaptive resolution, and edge/corner synthesis.

pub mod eigen;
pub mod error;
pub mod features;
pub mod geometry;
pub mod grow;
pub mod ingest;
pub mod octree;
pub mod plane;
pub mod ransac;
pub mod regression;

pub use eigen::{eig_sym3, CovarianceMatrix, SymEigen, SymMat3};
pub use error::{Error, Result};
pub use geometry::{Aabb, Point3, Ray, Vec3};
pub use plane::{intersect_planes2, intersect_planes3, Line, Plane};
pub use regression::IncrementalPlaneRegression;
