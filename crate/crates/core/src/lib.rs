//! Depth-based local center clustering.

pub mod assign;
pub mod data;
pub mod depth;
pub mod eev;
pub mod error;
pub mod forest;
pub mod grouping_max;
pub mod grouping_min;
pub mod kmeans;
pub mod linalg;
pub mod local_centers;
pub mod metrics;
pub mod pipeline;
pub mod similarity;
pub mod util;

pub use data::DataMatrix;
pub use error::{DlccError, Result};
pub use pipeline::{dlcc, ClusteringResult, DlccConfig, Strategy};
