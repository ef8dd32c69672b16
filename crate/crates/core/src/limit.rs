//! Exact simulation of the limit forest fire process on `[−A, A]`.
//!
//! Between marks nothing random happens: `Z` grows at unit speed up to 1
//! and every barrier clock `H` decays at unit speed down to 0. The state is
//! therefore kept lazily. Each point `x` remembers the last time its `Z`
//! was reset to 0, so `Z_t(x) = min(1, t − reset)`, and each past
//! microscopic mark remembers when its barrier expires, so
//! `H_t(x) = max(0, expiry − t)`.
//!
//! Space is tiled by breakpoints (past microscopic mark sites plus the two
//! box edges) and the open cells between them, on which `Z` is constant.
//! A point blocks cluster growth when `Z < 1` or `H > 0`; the cluster
//! `D_t(x)` runs between the nearest blocking points on each side, clamped
//! to the box.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, FireError, Result};
use crate::event_sources::{fmt_f64, MarkSet, SpaceTimeMark};

#[inline]
fn z_value(reset: f64, t: f64) -> f64 {
    (t - reset).min(1.0)
}

/// `Z` has reached 1. Exact ties count as saturated.
#[inline]
fn saturated(reset: f64, t: f64) -> bool {
    t - reset >= 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub x: f64,
    /// Last time `Z` at this point restarted from 0.
    pub reset_time: f64,
    /// `H` is positive exactly on `[mark time, barrier_until)`.
    pub barrier_until: f64,
}

impl Breakpoint {
    pub fn z(&self, t: f64) -> f64 {
        z_value(self.reset_time, t)
    }

    pub fn h(&self, t: f64) -> f64 {
        (self.barrier_until - t).max(0.0)
    }

    pub fn barrier_active(&self, t: f64) -> bool {
        t < self.barrier_until
    }

    pub fn blocks(&self, t: f64) -> bool {
        !saturated(self.reset_time, t) || self.barrier_active(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub left: f64,
    pub right: f64,
    pub reset_time: f64,
}

impl Cell {
    pub fn z(&self, t: f64) -> f64 {
        z_value(self.reset_time, t)
    }

    pub fn blocks(&self, t: f64) -> bool {
        !saturated(self.reset_time, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FireKind {
    Microscopic,
    Macroscopic,
}

/// How one mark changed the breakpoint/cell arrays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StateDelta {
    /// A breakpoint was inserted at this index, splitting the cell before it.
    Inserted { index: usize },
    /// Cells and breakpoints strictly between breakpoints `first` and `last`
    /// were reset; the flags tell whether each endpoint was reset too.
    Reset {
        first: usize,
        last: usize,
        first_reset: bool,
        last_reset: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub mark: SpaceTimeMark,
    pub kind: FireKind,
    /// Destroyed cluster `[a, b]` for macroscopic fires.
    pub burned: Option<(f64, f64)>,
    pub delta: StateDelta,
}

enum Location {
    Breakpoint(usize),
    Cell(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LffpState {
    time: f64,
    half_width: f64,
    breakpoints: Vec<Breakpoint>,
    cells: Vec<Cell>,
}

impl LffpState {
    /// Empty forest: one cell `(−A, A)` and the two edge sentinels, `Z ≡ H ≡ 0`.
    pub fn new(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return config(format!("half-width A must be positive, got {half_width}"));
        }
        let edge = |x| Breakpoint {
            x,
            reset_time: 0.0,
            barrier_until: 0.0,
        };
        Ok(Self {
            time: 0.0,
            half_width,
            breakpoints: vec![edge(-half_width), edge(half_width)],
            cells: vec![Cell {
                left: -half_width,
                right: half_width,
                reset_time: 0.0,
            }],
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    fn locate(&self, x: f64) -> Location {
        let k = self.breakpoints.partition_point(|b| b.x < x);
        if k < self.breakpoints.len() && self.breakpoints[k].x == x {
            Location::Breakpoint(k)
        } else {
            Location::Cell(k - 1)
        }
    }

    fn check_query(&self, t: f64, x: f64) -> Result<()> {
        if !(t >= self.time) {
            return domain(format!("query time {t} precedes state time {}", self.time));
        }
        if !(x.abs() <= self.half_width) {
            return domain(format!("x = {x} outside [-{0}, {0}]", self.half_width));
        }
        Ok(())
    }

    /// `Z_t(x)`, for `t` between this state's time and the next mark.
    pub fn z_at(&self, t: f64, x: f64) -> Result<f64> {
        self.check_query(t, x)?;
        Ok(match self.locate(x) {
            Location::Breakpoint(k) => self.breakpoints[k].z(t),
            Location::Cell(c) => self.cells[c].z(t),
        })
    }

    pub fn h_at(&self, t: f64, x: f64) -> Result<f64> {
        self.check_query(t, x)?;
        Ok(match self.locate(x) {
            Location::Breakpoint(k) => self.breakpoints[k].h(t),
            Location::Cell(_) => 0.0,
        })
    }

    /// Last time `Z` restarted from 0 at `x`.
    pub fn reset_time_at(&self, x: f64) -> Result<f64> {
        self.check_query(self.time, x)?;
        Ok(match self.locate(x) {
            Location::Breakpoint(k) => self.breakpoints[k].reset_time,
            Location::Cell(c) => self.cells[c].reset_time,
        })
    }

    /// The breakpoint sitting exactly at `x`, if any.
    pub fn breakpoint_at(&self, x: f64) -> Option<&Breakpoint> {
        match self.locate(x) {
            Location::Breakpoint(k) => Some(&self.breakpoints[k]),
            Location::Cell(_) => None,
        }
    }

    /// `D_t(x) = [L, R]`.
    pub fn d_at(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        self.check_query(t, x)?;
        Ok(match self.locate(x) {
            Location::Breakpoint(k) => {
                if self.breakpoints[k].blocks(t) {
                    (x, x)
                } else {
                    self.span(self.left_edge(k, t), self.right_edge(k, t))
                }
            }
            Location::Cell(c) => {
                if self.cells[c].blocks(t) {
                    (x, x)
                } else {
                    self.span(self.left_edge(c, t), self.right_edge(c + 1, t))
                }
            }
        })
    }

    fn span(&self, a: usize, b: usize) -> (f64, f64) {
        (self.breakpoints[a].x, self.breakpoints[b].x)
    }

    /// Nearest breakpoint at or left of `k` that bounds a cluster from the left.
    fn left_edge(&self, mut k: usize, t: f64) -> usize {
        loop {
            if k == 0 || self.breakpoints[k].blocks(t) || self.cells[k - 1].blocks(t) {
                return k;
            }
            k -= 1;
        }
    }

    fn right_edge(&self, mut k: usize, t: f64) -> usize {
        let last = self.breakpoints.len() - 1;
        loop {
            if k == last || self.breakpoints[k].blocks(t) || self.cells[k].blocks(t) {
                return k;
            }
            k += 1;
        }
    }

    /// Apply one mark of the driving Poisson measure.
    ///
    /// A mark on a saturated point (`Z = 1`) burns its whole cluster `[a, b]`:
    /// `Z` restarts from 0 on `(a, b)`, and at `a` (resp. `b`) only if `Z` was 1
    /// there. A mark on an unsaturated point leaves `Z` alone and starts a
    /// barrier there with `H = Z`.
    pub fn apply_mark(&mut self, mark: SpaceTimeMark) -> Result<EventRecord> {
        let t = mark.t;
        if !(t >= self.time) {
            return domain(format!("mark time {t} precedes state time {}", self.time));
        }
        if !(mark.x.abs() < self.half_width) {
            if mark.x.abs() == self.half_width {
                return Err(FireError::DuplicateCoordinate(mark.x));
            }
            return domain(format!("mark x = {} outside (-A, A)", mark.x));
        }
        let c = match self.locate(mark.x) {
            Location::Breakpoint(_) => return Err(FireError::DuplicateCoordinate(mark.x)),
            Location::Cell(c) => c,
        };
        self.time = t;
        let cell = self.cells[c];
        if !saturated(cell.reset_time, t) {
            let z = t - cell.reset_time;
            let index = c + 1;
            self.breakpoints.insert(
                index,
                Breakpoint {
                    x: mark.x,
                    reset_time: cell.reset_time,
                    barrier_until: t + z,
                },
            );
            self.cells[c].right = mark.x;
            self.cells.insert(
                index,
                Cell {
                    left: mark.x,
                    right: cell.right,
                    reset_time: cell.reset_time,
                },
            );
            return Ok(EventRecord {
                mark,
                kind: FireKind::Microscopic,
                burned: None,
                delta: StateDelta::Inserted { index },
            });
        }

        let first = self.left_edge(c, t);
        let last = self.right_edge(c + 1, t);
        for cell in &mut self.cells[first..last] {
            cell.reset_time = t;
        }
        for bp in &mut self.breakpoints[first + 1..last] {
            bp.reset_time = t;
        }
        let mut reset_endpoint = |k: usize| {
            let bp = &mut self.breakpoints[k];
            let was_saturated = saturated(bp.reset_time, t);
            if was_saturated {
                bp.reset_time = t;
            }
            was_saturated
        };
        let first_reset = reset_endpoint(first);
        let last_reset = reset_endpoint(last);
        Ok(EventRecord {
            mark,
            kind: FireKind::Macroscopic,
            burned: Some(self.span(first, last)),
            delta: StateDelta::Reset {
                first,
                last,
                first_reset,
                last_reset,
            },
        })
    }

    /// Times in the open interval `(from, to)` at which some `Z` reaches 1
    /// or some barrier expires, ascending and deduplicated.
    pub fn critical_times(&self, from: f64, to: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .cells
            .iter()
            .map(|c| c.reset_time + 1.0)
            .chain(
                self.breakpoints
                    .iter()
                    .flat_map(|b| [b.reset_time + 1.0, b.barrier_until]),
            )
            .filter(|&s| s > from && s < to)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Structural self-check.
    pub fn check_structure(&self) -> Result<()> {
        let bps = &self.breakpoints;
        let ok = bps.len() == self.cells.len() + 1
            && bps[0].x == -self.half_width
            && bps[bps.len() - 1].x == self.half_width
            && bps.windows(2).all(|w| w[0].x < w[1].x)
            && self
                .cells
                .iter()
                .enumerate()
                .all(|(i, c)| c.left == bps[i].x && c.right == bps[i + 1].x);
        if ok {
            Ok(())
        } else {
            Err(FireError::Invariant("breakpoints and cells do not tile [-A, A]".into()))
        }
    }

    /// `t;x:Z:H,...;left:right:Z,...` evaluated at `t`.
    pub fn dump_line(&self, t: f64) -> String {
        let bps: Vec<String> = self
            .breakpoints
            .iter()
            .map(|b| format!("{}:{}:{}", fmt_f64(b.x), fmt_f64(b.z(t)), fmt_f64(b.h(t))))
            .collect();
        let cells: Vec<String> = self
            .cells
            .iter()
            .map(|c| format!("{}:{}:{}", fmt_f64(c.left), fmt_f64(c.right), fmt_f64(c.z(t))))
            .collect();
        format!("{};{};{}", fmt_f64(t), bps.join(","), cells.join(","))
    }
}

/// Exact history of one A-LFFP realization on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    half_width: f64,
    horizon: f64,
    events: Vec<EventRecord>,
    /// `states[0]` is the initial state, `states[k]` the state right after event `k`.
    states: Vec<LffpState>,
}

/// Fold every mark into an A-LFFP started from the empty forest.
pub fn simulate(half_width: f64, horizon: f64, marks: &MarkSet) -> Result<Timeline> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return config(format!("horizon T must be positive, got {horizon}"));
    }
    let mut state = LffpState::new(half_width)?;
    let mut events = Vec::with_capacity(marks.len());
    let mut states = Vec::with_capacity(marks.len() + 1);
    states.push(state.clone());
    for &m in marks.marks() {
        if !(m.t >= 0.0 && m.t <= horizon) {
            return domain(format!("mark time {} outside [0, {horizon}]", m.t));
        }
        events.push(state.apply_mark(m)?);
        states.push(state.clone());
    }
    Ok(Timeline {
        half_width,
        horizon,
        events,
        states,
    })
}

/// Apply every mark with time `≤ t` to a fresh state and return it.
pub fn state_at_time(half_width: f64, marks: &[SpaceTimeMark], t: f64) -> Result<LffpState> {
    let mut state = LffpState::new(half_width)?;
    for &m in marks.iter().take_while(|m| m.t <= t) {
        state.apply_mark(m)?;
    }
    Ok(state)
}

impl Timeline {
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn initial_state(&self) -> &LffpState {
        &self.states[0]
    }

    /// Post-event states, `states()[0]` being the initial one.
    pub fn states(&self) -> &[LffpState] {
        &self.states
    }

    /// Right-continuous state in force at time `t`.
    pub fn state_at(&self, t: f64) -> Result<&LffpState> {
        if !(0.0..=self.horizon).contains(&t) {
            return domain(format!("time {t} outside [0, {}]", self.horizon));
        }
        let k = self.events.partition_point(|e| e.mark.t <= t);
        Ok(&self.states[k])
    }

    pub fn query_z(&self, t: f64, x: f64) -> Result<f64> {
        self.state_at(t)?.z_at(t, x)
    }

    pub fn query_h(&self, t: f64, x: f64) -> Result<f64> {
        self.state_at(t)?.h_at(t, x)
    }

    pub fn query_d(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        self.state_at(t)?.d_at(t, x)
    }

    /// The driving marks, recovered from the event log.
    pub fn marks(&self) -> Vec<SpaceTimeMark> {
        self.events.iter().map(|e| e.mark).collect()
    }

    /// Re-simulate from the recorded marks.
    pub fn replay(&self) -> Result<Timeline> {
        let marks = MarkSet::from_marks(self.horizon, self.half_width, self.marks())?;
        simulate(self.half_width, self.horizon, &marks)
    }

    /// CSV `t,x,kind,a,b`; `a,b` are empty for microscopic fires.
    pub fn events_csv(&self) -> String {
        let mut s = String::from("t,x,kind,a,b\n");
        for e in &self.events {
            let (kind, a, b) = match (e.kind, e.burned) {
                (FireKind::Macroscopic, Some((a, b))) => ("macroscopic", fmt_f64(a), fmt_f64(b)),
                _ => ("microscopic", String::new(), String::new()),
            };
            let _ = writeln!(s, "{},{},{kind},{a},{b}", fmt_f64(e.mark.t), fmt_f64(e.mark.x));
        }
        s
    }

    /// One dump line per requested time.
    pub fn dump(&self, times: &[f64]) -> Result<String> {
        let mut s = String::new();
        for &t in times {
            s.push_str(&self.state_at(t)?.dump_line(t));
            s.push('\n');
        }
        Ok(s)
    }
}
