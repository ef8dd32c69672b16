//! Event-driven simulation of the forest fire process on a finite box.
//!
//! Trees grow at rate 1 on vacant sites; an ignition at an occupied site
//! destroys its whole cluster at once. The box `⟦−A_λ, A_λ⟧` is clamped:
//! clusters stop at the box edge, nothing wraps around.
//!
//! The state is the set of vacant sites. Clusters are never stored; they
//! are recovered as the gap between the nearest vacant neighbours.

mod vacant;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use vacant::VacantSet;

use crate::error::{config, domain, FireError, Result};
use crate::event_sources::{fmt_f64, Ignition, IgnitionSchedule};
use crate::rng::{PoissonClock, SeedSpec, StreamKey};
use crate::scaling::Scaling;

/// Closed integer interval `⟦l, r⟧` with `l ≤ r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SiteInterval {
    pub l: i64,
    pub r: i64,
}

impl SiteInterval {
    pub fn new(l: i64, r: i64) -> Self {
        debug_assert!(l <= r);
        Self { l, r }
    }

    pub fn len(&self) -> u64 {
        (self.r - self.l + 1) as u64
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: i64) -> bool {
        self.l <= i && i <= self.r
    }
}

/// Number of sites of an optional cluster (`0` when empty).
pub fn cluster_size(c: Option<SiteInterval>) -> u64 {
    c.map_or(0, |c| c.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurnEvent {
    pub raw_time: f64,
    pub interval: SiteInterval,
    pub trigger_site: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    raw_time: f64,
    lo: i64,
    hi: i64,
    vacant: VacantSet,
}

impl LatticeState {
    /// All-vacant box `⟦lo, hi⟧` at time 0.
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty box");
        Self {
            raw_time: 0.0,
            lo,
            hi,
            vacant: VacantSet::full((hi - lo + 1) as usize),
        }
    }

    /// Box `⟦lo, lo + occupancy.len() − 1⟧` with the given occupancy.
    pub fn from_occupancy(lo: i64, occupancy: &[bool]) -> Self {
        assert!(!occupancy.is_empty(), "empty box");
        let mut vacant = VacantSet::empty(occupancy.len());
        for (k, &occ) in occupancy.iter().enumerate() {
            if !occ {
                vacant.insert(k);
            }
        }
        Self {
            raw_time: 0.0,
            lo,
            hi: lo + occupancy.len() as i64 - 1,
            vacant,
        }
    }

    pub fn raw_time(&self) -> f64 {
        self.raw_time
    }

    pub fn bounds(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn site_count(&self) -> usize {
        self.vacant.capacity()
    }

    pub fn vacant_count(&self) -> usize {
        self.vacant.len()
    }

    pub fn is_vacant(&self, i: i64) -> Result<bool> {
        let k = self.index(i)?;
        Ok(self.vacant.contains(k))
    }

    fn index(&self, i: i64) -> Result<usize> {
        if i < self.lo || i > self.hi {
            return domain(format!("site {i} outside box [{}, {}]", self.lo, self.hi));
        }
        Ok((i - self.lo) as usize)
    }

    fn advance_clock(&mut self, raw_time: f64) -> Result<()> {
        if raw_time < self.raw_time {
            return domain(format!(
                "event at {raw_time} precedes current time {}",
                self.raw_time
            ));
        }
        self.raw_time = raw_time;
        Ok(())
    }

    /// Maximal occupied run containing `i`, or `None` when `i` is vacant.
    pub fn cluster_of(&self, i: i64) -> Result<Option<SiteInterval>> {
        let k = self.index(i)?;
        Ok(self.cluster_at_index(k))
    }

    fn cluster_at_index(&self, k: usize) -> Option<SiteInterval> {
        if self.vacant.contains(k) {
            return None;
        }
        let left = match k.checked_sub(1).and_then(|j| self.vacant.pred(j)) {
            Some(v) => v + 1,
            None => 0,
        };
        let right = match self.vacant.succ(k + 1) {
            Some(v) => v - 1,
            None => self.vacant.capacity() - 1,
        };
        Some(SiteInterval::new(
            self.lo + left as i64,
            self.lo + right as i64,
        ))
    }

    /// A tree appears at `site` if it is vacant. Returns whether the state changed.
    pub fn apply_growth(&mut self, raw_time: f64, site: i64) -> Result<bool> {
        let k = self.index(site)?;
        self.advance_clock(raw_time)?;
        Ok(self.vacant.remove(k))
    }

    /// Fire at `site`: if occupied, its whole cluster becomes vacant.
    pub fn apply_ignition(&mut self, raw_time: f64, site: i64) -> Result<Option<BurnEvent>> {
        let k = self.index(site)?;
        self.advance_clock(raw_time)?;
        let Some(cluster) = self.cluster_at_index(k) else {
            return Ok(None);
        };
        self.vacant.insert_range(
            (cluster.l - self.lo) as usize,
            (cluster.r - self.lo) as usize,
        );
        Ok(Some(BurnEvent {
            raw_time,
            interval: cluster,
            trigger_site: site,
        }))
    }

    pub fn vacant_density(&self) -> f64 {
        self.vacant.len() as f64 / self.site_count() as f64
    }

    /// Maximal occupied runs, left to right.
    pub fn occupied_runs(&self) -> Vec<SiteInterval> {
        let mut runs = Vec::new();
        let mut start = 0usize;
        let n = self.site_count();
        for v in self.vacant.iter().chain(std::iter::once(n)) {
            if v > start {
                runs.push(SiteInterval::new(
                    self.lo + start as i64,
                    self.lo + v as i64 - 1,
                ));
            }
            start = v + 1;
        }
        runs
    }

    pub fn occupancy(&self) -> Vec<bool> {
        (0..self.site_count()).map(|k| !self.vacant.contains(k)).collect()
    }

    /// Full scan: clusters and vacant sites must tile the box, and
    /// `cluster_of` must agree with the scan at every site.
    pub fn check_partition(&self) -> Result<()> {
        let runs = self.occupied_runs();
        let mut covered = self.vacant.len() as u64;
        let mut prev_end: Option<i64> = None;
        for run in &runs {
            covered += run.len();
            if let Some(e) = prev_end {
                if run.l <= e + 1 {
                    return Err(FireError::Invariant(format!("runs {e} and {} touch", run.l)));
                }
            }
            prev_end = Some(run.r);
            for i in [run.l, (run.l + run.r) / 2, run.r] {
                if self.cluster_of(i)? != Some(*run) {
                    return Err(FireError::Invariant(format!(
                        "cluster_of({i}) disagrees with scan run {run:?}"
                    )));
                }
            }
        }
        if covered != self.site_count() as u64 {
            return Err(FireError::Invariant(format!(
                "clusters and vacant sites cover {covered} of {} sites",
                self.site_count()
            )));
        }
        Ok(())
    }
}

/// Where fires come from.
#[derive(Debug, Clone, PartialEq)]
pub enum IgnitionSource {
    /// Ignitions mapped from shared space-time marks.
    Schedule(IgnitionSchedule),
    /// Independent rate-λ clocks per site.
    Clocks(SeedSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    pub lambda: f64,
    /// Rescaled half-width `A`.
    pub half_width: f64,
    pub raw_horizon: f64,
    pub growth_seed: SeedSpec,
    pub ignition: IgnitionSource,
}

impl LatticeConfig {
    pub fn scaling(&self) -> Result<Scaling> {
        Scaling::new(self.lambda)
    }

    /// `A_λ`, after validating the whole configuration.
    pub fn validate(&self) -> Result<i64> {
        let scaling = self.scaling()?;
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return config(format!("half-width A must be positive, got {}", self.half_width));
        }
        if !(self.raw_horizon > 0.0 && self.raw_horizon.is_finite()) {
            return config(format!("raw horizon must be positive, got {}", self.raw_horizon));
        }
        let bound = scaling.box_bound(self.half_width);
        if bound < 1 {
            return config(format!(
                "box degenerate: A_lambda = {bound} < 1 for A = {}, lambda = {}",
                self.half_width, self.lambda
            ));
        }
        Ok(bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub cluster: Option<SiteInterval>,
}

/// Piecewise-constant cluster history of the site under a probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub x0: f64,
    pub site: i64,
    pub segments: Vec<ProbeSegment>,
}

impl ProbeRecord {
    /// Right-continuous cluster at `raw_time`.
    pub fn cluster_at(&self, raw_time: f64) -> Option<SiteInterval> {
        let k = self.segments.partition_point(|s| s.t_start <= raw_time);
        self.segments[k.saturating_sub(1)].cluster
    }

    /// CSV `t_start,t_end,l,r`; an empty cluster is written as `1,0`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_start,t_end,l,r\n");
        for seg in &self.segments {
            let (l, r) = seg.cluster.map_or((1, 0), |c| (c.l, c.r));
            let _ = writeln!(s, "{},{},{l},{r}", fmt_f64(seg.t_start), fmt_f64(seg.t_end));
        }
        s
    }
}

#[derive(Debug, Clone)]
struct ProbeTracker {
    x0: f64,
    site: i64,
    current: Option<SiteInterval>,
    starts: Vec<(f64, Option<SiteInterval>)>,
}

impl ProbeTracker {
    fn touched_by_growth(&self, s: i64) -> bool {
        match self.current {
            None => s == self.site,
            Some(c) => s == c.l - 1 || s == c.r + 1,
        }
    }

    fn set(&mut self, t: f64, cluster: Option<SiteInterval>) {
        if cluster != self.current {
            self.current = cluster;
            self.starts.push((t, cluster));
        }
    }

    fn finish(self, horizon: f64) -> ProbeRecord {
        let n = self.starts.len();
        let segments = (0..n)
            .map(|k| ProbeSegment {
                t_start: self.starts[k].0,
                t_end: if k + 1 < n { self.starts[k + 1].0 } else { horizon },
                cluster: self.starts[k].1,
            })
            .collect();
        ProbeRecord {
            x0: self.x0,
            site: self.site,
            segments,
        }
    }
}

/// Occupied runs at a requested time (post-event configuration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub raw_time: f64,
    pub runs: Vec<SiteInterval>,
}

impl Snapshot {
    /// `raw_time;l1-r1,l2-r2,...`
    pub fn to_line(&self) -> String {
        let runs: Vec<String> = self.runs.iter().map(|r| format!("{}-{}", r.l, r.r)).collect();
        format!("{};{}", fmt_f64(self.raw_time), runs.join(","))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub growth_scheduled: u64,
    pub growth_applied: u64,
    pub ignitions_total: u64,
    pub ignitions_consumed: u64,
    pub burns: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct PendingGrowth {
    time: OrdTime,
    site: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdTime(f64);

impl Eq for OrdTime {}

impl PartialOrd for OrdTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Stepwise driver of one lattice replica.
///
/// Events are processed in `(raw_time, site, kind)` order with growth
/// before ignition at exact ties.
pub struct LatticeSim {
    scaling: Scaling,
    horizon: f64,
    state: LatticeState,
    growth_key: StreamKey,
    pending: BinaryHeap<Reverse<PendingGrowth>>,
    ignitions: Vec<Ignition>,
    next_ignition: usize,
    burns: Vec<BurnEvent>,
    probes: Vec<ProbeTracker>,
    counts: EventCounts,
    verify: bool,
}

enum NextEvent {
    Growth(f64, i64),
    Ignition(f64, i64),
}

impl LatticeSim {
    pub fn new(config: &LatticeConfig) -> Result<Self> {
        let bound = config.validate()?;
        let scaling = config.scaling()?;
        let horizon = config.raw_horizon;
        let state = LatticeState::new(-bound, bound);

        let mut ignitions: Vec<Ignition> = match &config.ignition {
            IgnitionSource::Schedule(s) => {
                if let Some(bad) = s.events.iter().find(|e| e.site.abs() > bound) {
                    return domain(format!("ignition site {} outside box", bad.site));
                }
                s.events.iter().copied().filter(|e| e.raw_time <= horizon).collect()
            }
            IgnitionSource::Clocks(seed) => {
                let key = seed.key();
                let mut v = Vec::new();
                for site in -bound..=bound {
                    let clock = PoissonClock::new(key.child(site as u64), config.lambda);
                    v.extend(clock.points(horizon).into_iter().map(|raw_time| Ignition { raw_time, site }));
                }
                v
            }
        };
        ignitions.sort_by(|a, b| a.raw_time.total_cmp(&b.raw_time).then(a.site.cmp(&b.site)));

        let growth_key = config.growth_seed.key();
        let first: Vec<_> = (-bound..=bound)
            .filter_map(|site| {
                PoissonClock::new(growth_key.child(site as u64), 1.0)
                    .next_after(0.0, horizon)
                    .map(|t| Reverse(PendingGrowth { time: OrdTime(t), site }))
            })
            .collect();
        let counts = EventCounts {
            growth_scheduled: first.len() as u64,
            ignitions_total: ignitions.len() as u64,
            ..EventCounts::default()
        };
        Ok(Self {
            scaling,
            horizon,
            state,
            growth_key,
            pending: BinaryHeap::from(first),
            ignitions,
            next_ignition: 0,
            burns: Vec::new(),
            probes: Vec::new(),
            counts,
            verify: false,
        })
    }

    /// Run full invariant scans after every event (small boxes only).
    pub fn with_verification(mut self, on: bool) -> Self {
        self.verify = on;
        self
    }

    /// Track the cluster of the site under rescaled position `x0`.
    pub fn add_probe(&mut self, x0: f64) -> Result<()> {
        let site = self.scaling.site_of(x0);
        let cluster = self.state.cluster_of(site)?;
        self.probes.push(ProbeTracker {
            x0,
            site,
            current: cluster,
            starts: vec![(self.state.raw_time, cluster)],
        });
        Ok(())
    }

    pub fn state(&self) -> &LatticeState {
        &self.state
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn burns(&self) -> &[BurnEvent] {
        &self.burns
    }

    pub fn counts(&self) -> EventCounts {
        self.counts
    }

    fn peek(&self) -> Option<NextEvent> {
        let growth = self.pending.peek().map(|Reverse(p)| (p.time.0, p.site));
        let ignition = self.ignitions.get(self.next_ignition).map(|e| (e.raw_time, e.site));
        match (growth, ignition) {
            (None, None) => None,
            (Some((t, s)), None) => Some(NextEvent::Growth(t, s)),
            (None, Some((t, s))) => Some(NextEvent::Ignition(t, s)),
            (Some((gt, gs)), Some((it, is))) => {
                let growth_first = match gt.total_cmp(&it) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => gs <= is,
                };
                Some(if growth_first {
                    NextEvent::Growth(gt, gs)
                } else {
                    NextEvent::Ignition(it, is)
                })
            }
        }
    }

    /// Process every event with time `≤ raw_time`.
    pub fn advance_to(&mut self, raw_time: f64) -> Result<()> {
        while let Some(ev) = self.peek() {
            match ev {
                NextEvent::Growth(t, s) if t <= raw_time => {
                    self.pending.pop();
                    self.growth(t, s)?;
                }
                NextEvent::Ignition(t, s) if t <= raw_time => {
                    self.next_ignition += 1;
                    self.ignite(t, s)?;
                }
                _ => break,
            }
        }
        if raw_time > self.state.raw_time {
            self.state.raw_time = raw_time;
        }
        Ok(())
    }

    fn growth(&mut self, t: f64, site: i64) -> Result<()> {
        let vacant_before = self.state.vacant_count();
        if self.state.apply_growth(t, site)? {
            self.counts.growth_applied += 1;
            for p in &mut self.probes {
                if p.touched_by_growth(site) {
                    let c = self.state.cluster_of(p.site)?;
                    p.set(t, c);
                }
            }
        }
        if self.verify {
            if self.state.vacant_count() > vacant_before {
                return Err(FireError::Invariant("vacant set grew on a growth event".into()));
            }
            self.state.check_partition()?;
        }
        Ok(())
    }

    fn ignite(&mut self, t: f64, site: i64) -> Result<()> {
        self.counts.ignitions_consumed += 1;
        if self.verify {
            if let Some(c) = self.state.cluster_of(site)? {
                let (lo, hi) = self.state.bounds();
                for edge in [c.l - 1, c.r + 1] {
                    if edge >= lo && edge <= hi && !self.state.is_vacant(edge)? {
                        return Err(FireError::Invariant(format!("cluster {c:?} not maximal")));
                    }
                }
            }
        }
        let Some(burn) = self.state.apply_ignition(t, site)? else {
            return Ok(());
        };
        for s in burn.interval.l..=burn.interval.r {
            if let Some(next) = PoissonClock::new(self.growth_key.child(s as u64), 1.0).next_after(t, self.horizon) {
                self.pending.push(Reverse(PendingGrowth { time: OrdTime(next), site: s }));
                self.counts.growth_scheduled += 1;
            }
        }
        for p in &mut self.probes {
            if burn.interval.contains(p.site) {
                p.set(t, None);
            }
        }
        if self.verify {
            for s in burn.interval.l..=burn.interval.r {
                if !self.state.is_vacant(s)? {
                    return Err(FireError::Invariant(format!("site {s} survived burn")));
                }
            }
            self.state.check_partition()?;
        }
        self.counts.burns += 1;
        self.burns.push(burn);
        Ok(())
    }

    pub fn finish(mut self) -> Result<LatticeRun> {
        self.advance_to(self.horizon)?;
        let horizon = self.horizon;
        if self.counts.ignitions_consumed != self.counts.ignitions_total {
            return Err(FireError::Invariant("unconsumed ignitions at horizon".into()));
        }
        Ok(LatticeRun {
            burns: self.burns,
            probes: self.probes.into_iter().map(|p| p.finish(horizon)).collect(),
            snapshots: Vec::new(),
            counts: self.counts,
            final_state: self.state,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LatticeRun {
    pub burns: Vec<BurnEvent>,
    pub probes: Vec<ProbeRecord>,
    pub snapshots: Vec<Snapshot>,
    pub counts: EventCounts,
    pub final_state: LatticeState,
}

impl LatticeRun {
    /// CSV `raw_time,l,r,trigger`.
    pub fn burns_csv(&self) -> String {
        let mut s = String::from("raw_time,l,r,trigger\n");
        for b in &self.burns {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_f64(b.raw_time),
                b.interval.l,
                b.interval.r,
                b.trigger_site
            );
        }
        s
    }

    pub fn snapshots_text(&self) -> String {
        self.snapshots.iter().map(|s| s.to_line() + "\n").collect()
    }
}

/// Full run with probes at rescaled positions and snapshots at raw times.
pub fn run(config: &LatticeConfig, probes: &[f64], snapshot_times: &[f64]) -> Result<LatticeRun> {
    run_with(config, probes, snapshot_times, false)
}

pub fn run_with(
    config: &LatticeConfig,
    probes: &[f64],
    snapshot_times: &[f64],
    verify: bool,
) -> Result<LatticeRun> {
    let mut sim = LatticeSim::new(config)?.with_verification(verify);
    for &x in probes {
        if !(x.abs() < config.half_width) {
            return domain(format!("probe {x} outside (-A, A)"));
        }
        sim.add_probe(x)?;
    }
    let mut times = snapshot_times.to_vec();
    times.sort_by(f64::total_cmp);
    let mut snapshots = Vec::with_capacity(times.len());
    for t in times {
        if !(0.0..=config.raw_horizon).contains(&t) {
            return domain(format!("snapshot time {t} outside [0, {}]", config.raw_horizon));
        }
        sim.advance_to(t)?;
        snapshots.push(Snapshot {
            raw_time: t,
            runs: sim.state().occupied_runs(),
        });
    }
    let mut out = sim.finish()?;
    out.snapshots = snapshots;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_sources::{marks_to_ignitions, sample_marks};

    fn occ(bits: &[u8]) -> LatticeState {
        LatticeState::from_occupancy(0, &bits.iter().map(|&b| b == 1).collect::<Vec<_>>())
    }

    #[test]
    fn cluster_of_examples() {
        let empty = LatticeState::new(-5, 5);
        assert_eq!(empty.cluster_of(3).unwrap(), None);

        let full = LatticeState::from_occupancy(-5, &[true; 11]);
        assert_eq!(full.cluster_of(3).unwrap(), Some(SiteInterval::new(-5, 5)));

        let s = occ(&[1, 1, 0, 1]);
        assert_eq!(s.cluster_of(0).unwrap(), Some(SiteInterval::new(0, 1)));
        assert_eq!(s.cluster_of(3).unwrap(), Some(SiteInterval::new(3, 3)));
        assert!(matches!(s.cluster_of(4), Err(FireError::Domain(_))));
    }

    #[test]
    fn growth_examples() {
        let mut s = LatticeState::new(0, 9);
        assert!(s.apply_growth(0.5, 4).unwrap());
        assert!(!s.is_vacant(4).unwrap());
        let before = s.clone();
        assert!(!s.apply_growth(0.6, 4).unwrap());
        assert_eq!(s.occupancy(), before.occupancy());
        for i in 0..10 {
            s.apply_growth(1.0, i).unwrap();
        }
        assert_eq!(s.vacant_count(), 0);
        assert!(s.apply_growth(2.0, 10).is_err());
        assert!(s.apply_growth(0.1, 1).is_err(), "time went backwards");
    }

    #[test]
    fn ignition_examples() {
        let mut s = occ(&[1, 1, 0, 1]);
        let burn = s.apply_ignition(1.0, 1).unwrap().unwrap();
        assert_eq!(burn.interval, SiteInterval::new(0, 1));
        assert_eq!(burn.trigger_site, 1);
        assert_eq!(s.occupancy(), vec![false, false, false, true]);

        let before = s.clone();
        assert!(s.apply_ignition(1.5, 2).unwrap().is_none());
        assert_eq!(s.occupancy(), before.occupancy());

        let mut full = LatticeState::from_occupancy(-5, &[true; 11]);
        full.apply_ignition(0.0, 2).unwrap();
        assert_eq!(full.vacant_count(), 11);
    }

    #[test]
    fn vacant_density_examples() {
        assert_eq!(LatticeState::new(-3, 3).vacant_density(), 1.0);
        assert_eq!(LatticeState::from_occupancy(0, &[true; 4]).vacant_density(), 0.0);
        assert_eq!(occ(&[1, 1, 0, 1]).vacant_density(), 0.25);
    }

    #[test]
    fn occupied_runs_and_partition() {
        let s = occ(&[1, 1, 0, 1, 0, 0, 1, 1, 1]);
        assert_eq!(
            s.occupied_runs(),
            vec![SiteInterval::new(0, 1), SiteInterval::new(3, 3), SiteInterval::new(6, 8)]
        );
        s.check_partition().unwrap();
    }

    fn small_config(seed: u64) -> LatticeConfig {
        let lambda = 0.5;
        let w = Scaling::new(lambda).unwrap().site_width();
        LatticeConfig {
            lambda,
            half_width: 5.5 * w,
            raw_horizon: 5.0,
            growth_seed: SeedSpec::replica(seed, 0, "growth"),
            ignition: IgnitionSource::Clocks(SeedSpec::replica(seed, 0, "ignition")),
        }
    }

    #[test]
    fn config_validation() {
        let mut c = small_config(1);
        c.lambda = 1.5;
        assert!(matches!(LatticeSim::new(&c), Err(FireError::Config(_))));
        let mut c = small_config(1);
        c.half_width = 0.01;
        assert!(matches!(LatticeSim::new(&c), Err(FireError::Config(_))));
        assert_eq!(small_config(1).validate().unwrap(), 5);
    }

    #[test]
    fn verified_runs_hold_invariants() {
        for seed in 0..50 {
            let r = run_with(&small_config(seed), &[0.0], &[1.0, 2.5], true).unwrap();
            assert!(r.counts.growth_applied <= r.counts.growth_scheduled);
            assert_eq!(r.counts.ignitions_consumed, r.counts.ignitions_total);
        }
    }

    #[test]
    fn probe_record_matches_snapshots() {
        let cfg = small_config(9);
        let times = [0.5, 1.0, 2.0, 3.0, 4.0, 4.9];
        let r = run(&cfg, &[0.0], &times).unwrap();
        let probe = &r.probes[0];
        assert_eq!(probe.segments.first().unwrap().t_start, 0.0);
        assert_eq!(probe.segments.last().unwrap().t_end, 5.0);
        for w in probe.segments.windows(2) {
            assert_eq!(w[0].t_end, w[1].t_start);
        }
        for snap in &r.snapshots {
            let from_snap = snap.runs.iter().copied().find(|run| run.contains(0));
            assert_eq!(probe.cluster_at(snap.raw_time), from_snap);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let marks = sample_marks(2.0, 3.0, &SeedSpec::new(4, "marks")).unwrap();
        let cfg = LatticeConfig {
            lambda: 0.05,
            half_width: 3.0,
            raw_horizon: 2.0 * 20f64.ln(),
            growth_seed: SeedSpec::new(4, "growth"),
            ignition: IgnitionSource::Schedule(marks_to_ignitions(&marks, 0.05).unwrap()),
        };
        let a = run(&cfg, &[0.0, 1.0], &[1.0, 3.0]).unwrap();
        let b = run(&cfg, &[0.0, 1.0], &[1.0, 3.0]).unwrap();
        assert_eq!(a.burns_csv(), b.burns_csv());
        assert_eq!(a.probes, b.probes);
        assert_eq!(a.snapshots_text(), b.snapshots_text());
    }

    #[test]
    fn monotone_growth_between_fires() {
        let mut sim = LatticeSim::new(&small_config(3)).unwrap();
        let mut prev_vacant = sim.state().vacant_count();
        let mut prev_burns = 0;
        let mut t = 0.0;
        while t < 5.0 {
            t += 0.01;
            sim.advance_to(t).unwrap();
            let v = sim.state().vacant_count();
            if sim.burns().len() == prev_burns {
                assert!(v <= prev_vacant);
            }
            prev_burns = sim.burns().len();
            prev_vacant = v;
        }
    }

    #[test]
    fn snapshot_line_format() {
        let snap = Snapshot {
            raw_time: 1.5,
            runs: vec![SiteInterval::new(-3, -1), SiteInterval::new(2, 2)],
        };
        assert_eq!(snap.to_line(), "1.5000000000000000e0;-3--1,2-2");
    }

    #[test]
    fn empty_probe_cluster_uses_sentinel() {
        let rec = ProbeRecord {
            x0: 0.0,
            site: 0,
            segments: vec![ProbeSegment { t_start: 0.0, t_end: 1.0, cluster: None }],
        };
        assert!(rec.to_csv().ends_with(",1,0\n"));
    }
}
