pub mod bench;
pub mod dsu;
pub mod engine;
pub mod error;
pub mod graph;
pub mod heuristic;
pub mod io;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod preprocess;
pub mod reductions;
pub mod scalar;

pub use error::{Error, Result};
pub use graph::{partition_weight, Partition, WeightedGraph};
pub use scalar::Scalar;

pub type Graph = WeightedGraph<f64>;
