//! Adaptive SIS epidemics on networks: threshold analysis, exact transient
//! solutions for tiny graphs, event-driven simulation and optimal allocation
//! of link-cutting rates.

pub mod error;
pub mod expm;
pub mod graph;
pub mod optimize;
pub mod oracle;
pub mod params;
pub mod simulate;
pub mod sparse;
pub mod threshold;

pub use error::{Error, Result};
pub use graph::Graph;
pub use params::{AsisParams, ParamFile, QIndex};
pub use threshold::{EigenConfig, Irreducibility, Perron, ThresholdMatrix};
