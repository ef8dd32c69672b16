//! Rescaled observables, the path distance `δ_T`, and coupled runs.
//!
//! A lattice cluster `⟦l, r⟧` at raw time `t·log(1/λ)` is seen as the real
//! interval `[l·w, r·w]` (with `w = λ log(1/λ)`) and as the size exponent
//! `log(1 + #C) / log(1/λ)`. The limit process is observed directly. Both
//! observables are piecewise simple in time, so `δ_T` is evaluated exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::event_sources::{fmt_f64, marks_to_ignitions, sample_marks, MarkSet};
use crate::lattice::{self, cluster_size, IgnitionSource, LatticeConfig, ProbeRecord, SiteInterval};
use crate::limit::{simulate, Timeline};
use crate::rng::SeedSpec;
use crate::scaling::Scaling;

/// Closed real interval, possibly empty or a single point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Interval {
    Empty,
    Closed { a: f64, b: f64 },
}

impl Interval {
    pub fn closed(a: f64, b: f64) -> Self {
        debug_assert!(a <= b, "[{a}, {b}]");
        Interval::Closed { a, b }
    }

    pub fn point(x: f64) -> Self {
        Interval::Closed { a: x, b: x }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Interval::Empty => 0.0,
            Interval::Closed { a, b } => b - a,
        }
    }

    /// `(L, R)`, with the `(1, 0)` sentinel for the empty interval.
    pub fn endpoints(&self) -> (f64, f64) {
        match *self {
            Interval::Empty => (1.0, 0.0),
            Interval::Closed { a, b } => (a, b),
        }
    }
}

/// `δ([a,b],[c,d]) = |a−c| + |b−d|`, `δ([a,b],∅) = b − a`, `δ(∅,∅) = 0`.
pub fn interval_delta(i: &Interval, j: &Interval) -> f64 {
    match (*i, *j) {
        (Interval::Empty, Interval::Empty) => 0.0,
        (Interval::Empty, Interval::Closed { a, b }) | (Interval::Closed { a, b }, Interval::Empty) => b - a,
        (Interval::Closed { a, b }, Interval::Closed { a: c, b: d }) => (a - c).abs() + (b - d).abs(),
    }
}

/// `⟦l, r⟧ ↦ [l·w, r·w]`, empty stays empty.
pub fn rescale_cluster(cluster: Option<SiteInterval>, lambda: f64) -> Result<Interval> {
    let w = Scaling::new(lambda)?.site_width();
    Ok(scaled_cluster(cluster, w))
}

fn scaled_cluster(cluster: Option<SiteInterval>, w: f64) -> Interval {
    match cluster {
        None => Interval::Empty,
        Some(c) => Interval::closed(c.l as f64 * w, c.r as f64 * w),
    }
}

/// `log(1 + #C) / log(1/λ)`.
pub fn rescale_size_exponent(cluster: Option<SiteInterval>, lambda: f64) -> Result<f64> {
    let scaling = Scaling::new(lambda)?;
    Ok(size_exponent(cluster_size(cluster), &scaling))
}

pub fn size_exponent(size: u64, scaling: &Scaling) -> f64 {
    (size as f64).ln_1p() / scaling.log_inv()
}

/// Time profile of `z` on one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ZPath {
    Flat(f64),
    /// `z(t) = t − origin`.
    Ramp { origin: f64 },
}

impl ZPath {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            ZPath::Flat(v) => v,
            ZPath::Ramp { origin } => t - origin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajSegment {
    pub start: f64,
    pub end: f64,
    pub z: ZPath,
    pub d: Interval,
}

/// Right-continuous path `t ↦ (z_t, D_t)` of one probe on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledTrajectory {
    pub probe: f64,
    pub segments: Vec<TrajSegment>,
}

impl RescaledTrajectory {
    pub fn horizon(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    fn segment_at(&self, t: f64) -> &TrajSegment {
        let k = self.segments.partition_point(|s| s.start <= t);
        &self.segments[k.saturating_sub(1)]
    }

    pub fn z_at(&self, t: f64) -> f64 {
        self.segment_at(t).z.value(t)
    }

    pub fn d_at(&self, t: f64) -> Interval {
        self.segment_at(t).d
    }

    fn push(&mut self, seg: TrajSegment) {
        if seg.end <= seg.start {
            return;
        }
        if let Some(last) = self.segments.last_mut() {
            if last.d == seg.d && last.z == seg.z && last.end == seg.start {
                last.end = seg.end;
                return;
            }
        }
        self.segments.push(seg);
    }

    /// Lattice probe history seen through the rescaling.
    ///
    /// `rescale_time` maps raw event times to rescaled times; the last
    /// segment is closed at `horizon`.
    pub fn from_probe_record(
        record: &ProbeRecord,
        scaling: &Scaling,
        horizon: f64,
        rescale_time: impl Fn(f64) -> f64,
    ) -> Self {
        let mut out = RescaledTrajectory {
            probe: record.x0,
            segments: Vec::with_capacity(record.segments.len()),
        };
        let n = record.segments.len();
        for (k, seg) in record.segments.iter().enumerate() {
            let start = rescale_time(seg.t_start);
            let end = if k + 1 == n { horizon } else { rescale_time(seg.t_end) };
            out.push(TrajSegment {
                start,
                end,
                z: ZPath::Flat(size_exponent(cluster_size(seg.cluster), scaling)),
                d: scaled_cluster(seg.cluster, scaling.site_width()),
            });
        }
        out
    }

    /// Exact path of the limit process at `x0` over the whole timeline.
    pub fn from_timeline(timeline: &Timeline, x0: f64) -> Result<Self> {
        let horizon = timeline.horizon();
        let events = timeline.events();
        let mut out = RescaledTrajectory {
            probe: x0,
            segments: Vec::new(),
        };
        for (k, state) in timeline.states().iter().enumerate() {
            let from = if k == 0 { 0.0 } else { events[k - 1].mark.t };
            let to = events.get(k).map_or(horizon, |e| e.mark.t);
            if to <= from {
                continue;
            }
            let reset = state.reset_time_at(x0)?;
            let mut cuts = vec![from];
            cuts.extend(state.critical_times(from, to));
            cuts.push(to);
            for w in cuts.windows(2) {
                let (s, e) = (w[0], w[1]);
                let (a, b) = state.d_at(s, x0)?;
                let z = if s - reset >= 1.0 {
                    ZPath::Flat(1.0)
                } else {
                    ZPath::Ramp { origin: reset }
                };
                out.push(TrajSegment {
                    start: s,
                    end: e,
                    z,
                    d: Interval::closed(a, b),
                });
            }
        }
        Ok(out)
    }

    /// CSV `t_start,t_end,z,L,R` with `z` taken at `t_start`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_start,t_end,z,L,R\n");
        for seg in &self.segments {
            let (l, r) = seg.d.endpoints();
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                fmt_f64(seg.start),
                fmt_f64(seg.end),
                fmt_f64(seg.z.value(seg.start)),
                fmt_f64(l),
                fmt_f64(r)
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathDistance {
    /// `sup_{[0,T]} |z − z'|`.
    pub sup_z: f64,
    /// `∫_0^T δ(D_t, D'_t) dt`.
    pub int_d: f64,
}

impl PathDistance {
    pub fn total(&self) -> f64 {
        self.sup_z + self.int_d
    }
}

fn covers(p: &RescaledTrajectory, horizon: f64) -> bool {
    let tol = 1e-9 * horizon.max(1.0);
    !p.segments.is_empty() && p.segments[0].start.abs() <= tol && (p.horizon() - horizon).abs() <= tol
}

/// `δ_T(P, Q) = sup_{[0,T]} |z_P − z_Q| + ∫_0^T δ(D_P, D_Q) dt`, exactly.
///
/// On every piece between merged breakpoints both `z` are affine, so the
/// supremum is attained at a piece's start (right value) or end (left limit).
pub fn path_distance(p: &RescaledTrajectory, q: &RescaledTrajectory, horizon: f64) -> Result<PathDistance> {
    if !covers(p, horizon) || !covers(q, horizon) {
        return domain(format!(
            "trajectories cover [0, {}] and [0, {}], expected [0, {horizon}]",
            p.horizon(),
            q.horizon()
        ));
    }
    let mut cuts: Vec<f64> = p
        .segments
        .iter()
        .chain(&q.segments)
        .map(|s| s.start)
        .filter(|&s| s < horizon)
        .collect();
    cuts.push(horizon);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let (mut ip, mut iq) = (0usize, 0usize);
    let mut sup_z = 0.0f64;
    let mut int_d = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        while ip + 1 < p.segments.len() && p.segments[ip + 1].start <= a {
            ip += 1;
        }
        while iq + 1 < q.segments.len() && q.segments[iq + 1].start <= a {
            iq += 1;
        }
        let (sp, sq) = (&p.segments[ip], &q.segments[iq]);
        let at_a = (sp.z.value(a) - sq.z.value(a)).abs();
        let at_b = (sp.z.value(b) - sq.z.value(b)).abs();
        sup_z = sup_z.max(at_a).max(at_b);
        int_d += (b - a) * interval_delta(&sp.d, &sq.d);
    }
    Ok(PathDistance { sup_z, int_d })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeComparison {
    pub probe: f64,
    pub lattice: RescaledTrajectory,
    pub limit: RescaledTrajectory,
    pub distance: PathDistance,
}

/// Lattice and limit processes driven by the same marks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledRun {
    pub lambda: f64,
    pub half_width: f64,
    pub horizon: f64,
    pub mark_seed: Option<SeedSpec>,
    pub growth_seed: SeedSpec,
    pub marks: MarkSet,
    pub probes: Vec<ProbeComparison>,
}

/// One JSON line per (run, probe).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledSummary {
    pub lambda: f64,
    #[serde(rename = "A")]
    pub half_width: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub seed: u64,
    pub probe: f64,
    #[serde(rename = "delta_T")]
    pub delta_t: f64,
    pub sup_z: f64,
    #[serde(rename = "int_D")]
    pub int_d: f64,
}

impl CoupledRun {
    pub fn summaries(&self) -> Vec<CoupledSummary> {
        let seed = self.mark_seed.as_ref().map_or(0, |s| s.master_seed);
        self.probes
            .iter()
            .map(|p| CoupledSummary {
                lambda: self.lambda,
                half_width: self.half_width,
                horizon: self.horizon,
                seed,
                probe: p.probe,
                delta_t: p.distance.total(),
                sup_z: p.distance.sup_z,
                int_d: p.distance.int_d,
            })
            .collect()
    }
}

/// Sample marks once, then run both processes on them.
pub fn coupled_run(
    lambda: f64,
    half_width: f64,
    horizon: f64,
    mark_seed: &SeedSpec,
    growth_seed: &SeedSpec,
    probes: &[f64],
) -> Result<CoupledRun> {
    let marks = sample_marks(horizon, half_width, mark_seed)?;
    let mut run = coupled_run_with_marks(lambda, half_width, horizon, marks, growth_seed, probes)?;
    run.mark_seed = Some(mark_seed.clone());
    Ok(run)
}

pub fn coupled_run_with_marks(
    lambda: f64,
    half_width: f64,
    horizon: f64,
    marks: MarkSet,
    growth_seed: &SeedSpec,
    probes: &[f64],
) -> Result<CoupledRun> {
    let scaling = Scaling::new(lambda)?;
    let schedule = marks_to_ignitions(&marks, lambda)?;
    // ignition raw times map back to their mark times exactly
    let mark_time: HashMap<u64, f64> = marks
        .marks()
        .iter()
        .map(|m| (scaling.raw_time(m.t).to_bits(), m.t))
        .collect();
    let config = LatticeConfig {
        lambda,
        half_width,
        raw_horizon: scaling.raw_time(horizon),
        growth_seed: growth_seed.clone(),
        ignition: IgnitionSource::Schedule(schedule),
    };
    let lattice_run = lattice::run(&config, probes, &[])?;
    let timeline = simulate(half_width, horizon, &marks)?;
    let rescale_time = |raw: f64| {
        mark_time
            .get(&raw.to_bits())
            .copied()
            .unwrap_or_else(|| scaling.rescaled_time(raw))
    };
    let probes = lattice_run
        .probes
        .iter()
        .map(|rec| {
            let lat = RescaledTrajectory::from_probe_record(rec, &scaling, horizon, rescale_time);
            let lim = RescaledTrajectory::from_timeline(&timeline, rec.x0)?;
            let distance = path_distance(&lat, &lim, horizon)?;
            Ok(ProbeComparison {
                probe: rec.x0,
                lattice: lat,
                limit: lim,
                distance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoupledRun {
        lambda,
        half_width,
        horizon,
        mark_seed: None,
        growth_seed: growth_seed.clone(),
        marks,
        probes,
    })
}
