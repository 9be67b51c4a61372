//! Synthetic room scans and the accuracy experiments run on them.

pub mod baseline;
pub mod error;
pub mod scan;
pub mod sweep;

pub use baseline::{ransac_baseline, BaselineConfig, BaselineResult};
pub use error::{Error, Result};
pub use scan::{simulate_scan, GroundTruth, Scan, ScanConfig, ScanStream, ScanWindow, TruthEdge};
pub use sweep::{run_accuracy_sweep, AccuracyReport, Detail, LevelSummary, Method, RunRecord, SweepConfig};
