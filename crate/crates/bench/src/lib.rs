//! Benchmark inputs shared by the criterion targets.

use fireline_core::lattice::{IgnitionSource, LatticeConfig};
use fireline_core::{marks_to_ignitions, sample_marks, MarkSet, Scaling, SeedSpec};

/// Lattice run to rescaled time `t` on `[−A, A]`, fires from shared marks.
pub fn lattice_config(lambda: f64, half_width: f64, t: f64, seed: u64) -> LatticeConfig {
    let marks = sample_marks(t, half_width, &SeedSpec::new(seed, "marks")).expect("valid box");
    LatticeConfig {
        lambda,
        half_width,
        raw_horizon: Scaling::new(lambda).expect("lambda in (0,1)").raw_time(t),
        growth_seed: SeedSpec::new(seed, "growth"),
        ignition: IgnitionSource::Schedule(marks_to_ignitions(&marks, lambda).expect("valid lambda")),
    }
}

pub fn marks(half_width: f64, t: f64, seed: u64) -> MarkSet {
    sample_marks(t, half_width, &SeedSpec::new(seed, "marks")).expect("valid box")
}
