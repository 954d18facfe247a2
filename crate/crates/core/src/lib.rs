//! Statistical depth for temporal point processes.
//!
//! Event-time vectors are smoothed with a proper kernel into functions on
//! `[0, T]`; the L^p distance between smoothed functions is a metric on the
//! point-process space. On top of that metric this crate provides h-depth,
//! center-based (modified) h-depth, a modified band depth baseline, and an
//! estimator of the depth center (the empirical Karcher mean) that combines
//! reversible-jump annealing with gradient line search.

pub mod analysis;
pub mod center;
pub mod depth;
pub mod error;
pub mod io;
pub mod kernel;
pub mod numeric;
mod par;
pub mod process;
pub mod smooth;

pub use center::{
    AnnealSchedule, CenterConfig, CenterEstimate, CenterMethod, Cooling, LineSearchConfig, ProposalMix,
    SsdObjective,
};
pub use depth::{DepthConfig, DepthMethod, DepthReport, HRule};
pub use error::{Error, Result};
pub use kernel::{KernelFamily, KernelSpec};
pub use process::{IntensitySpec, MixtureComponent, PointProcess};
pub use smooth::{DistanceMethod, Metric, SmoothedCurve};
