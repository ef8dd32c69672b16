//! Simulation toolkit for the one-dimensional forest fire process.
//!
//! * [`event_sources`]: shared space-time marks and per-site growth clocks.
//! * [`lattice`]: exact event-driven simulation of the discrete process on a box.
//! * [`limit`]: exact simulation of the limit process driven by the same marks.
//! * [`rescale`]: rescaling maps, path distances and coupled runs.
//! * [`stats`]: Monte Carlo estimators for cluster-size laws and localization.

pub mod error;
pub mod event_sources;
pub mod lattice;
pub mod limit;
pub mod rescale;
pub mod rng;
pub mod scaling;
pub mod stats;

pub use error::{FireError, Result};
pub use event_sources::{
    marks_to_ignitions, sample_marks, site_growth_times, Ignition, IgnitionSchedule, MarkSet,
    SpaceTimeMark,
};
pub use lattice::{
    BurnEvent, IgnitionSource, LatticeConfig, LatticeRun, LatticeSim, LatticeState, ProbeRecord,
    SiteInterval,
};
pub use limit::{simulate, LffpState, Timeline};
pub use rescale::{coupled_run, CoupledRun, Interval, PathDistance, RescaledTrajectory};
pub use rng::SeedSpec;
pub use scaling::Scaling;
pub use stats::{CoincidenceReport, TailEstimate};
