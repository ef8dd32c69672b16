//! Shared space-time marks and per-site growth clocks.
//!
//! A [`MarkSet`] realizes a rate-1 Poisson measure on `[0,T] × [−A,A]`.
//! The same marks drive fires at every scale: the limit process reads
//! them directly, the lattice process reads them through
//! [`marks_to_ignitions`].

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{config, FireError, Result};
use crate::rng::{PoissonClock, SeedSpec};
use crate::scaling::Scaling;

/// One point of the space-time Poisson measure, in rescaled units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeMark {
    pub t: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkSet {
    horizon: f64,
    half_width: f64,
    marks: Vec<SpaceTimeMark>,
}

impl MarkSet {
    pub fn empty(horizon: f64, half_width: f64) -> Self {
        Self {
            horizon,
            half_width,
            marks: Vec::new(),
        }
    }

    /// Build from explicit marks, checking box membership, strict time
    /// order and distinct positions.
    pub fn from_marks(horizon: f64, half_width: f64, mut marks: Vec<SpaceTimeMark>) -> Result<Self> {
        if !(horizon > 0.0 && half_width > 0.0) {
            return config("horizon and half-width must be positive");
        }
        marks.sort_by(|a, b| a.t.total_cmp(&b.t));
        let mut seen = HashSet::with_capacity(marks.len());
        for (i, m) in marks.iter().enumerate() {
            if !(m.t >= 0.0 && m.t <= horizon && m.x.abs() <= half_width) {
                return Err(FireError::Domain(format!(
                    "mark ({}, {}) outside [0,{horizon}]x[-{half_width},{half_width}]",
                    m.t, m.x
                )));
            }
            if i > 0 && marks[i - 1].t == m.t {
                return config(format!("two marks share time t = {}", m.t));
            }
            if !seen.insert(m.x.to_bits()) {
                return Err(FireError::DuplicateCoordinate(m.x));
            }
        }
        Ok(Self {
            horizon,
            half_width,
            marks,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn marks(&self) -> &[SpaceTimeMark] {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Marks falling in `[0,horizon] × [−half_width, half_width]`.
    pub fn restrict(&self, horizon: f64, half_width: f64) -> MarkSet {
        MarkSet {
            horizon,
            half_width,
            marks: self
                .marks
                .iter()
                .copied()
                .filter(|m| m.t <= horizon && m.x.abs() <= half_width)
                .collect(),
        }
    }

    /// CSV with header `t,x`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x\n");
        for m in &self.marks {
            let _ = writeln!(s, "{},{}", fmt_f64(m.t), fmt_f64(m.x));
        }
        s
    }

    pub fn from_csv(text: &str, horizon: f64, half_width: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut marks = Vec::new();
        for rec in rdr.deserialize::<SpaceTimeMark>() {
            marks.push(rec.map_err(|e| FireError::Parse(e.to_string()))?);
        }
        Self::from_marks(horizon, half_width, marks)
    }
}

/// Decimal rendering with 17 significant digits (exact round trip).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Rate-1 Poisson marks on `[0,T] × [−A,A]`, sorted by time.
///
/// Times are cumulative Exp(2A) gaps, positions uniform. Exact duplicate
/// positions are rejected and redrawn from the next counter.
pub fn sample_marks(horizon: f64, half_width: f64, seed: &SeedSpec) -> Result<MarkSet> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return config(format!("horizon T must be positive, got {horizon}"));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return config(format!("half-width A must be positive, got {half_width}"));
    }
    let times = seed.key().child(0);
    let places = seed.key().child(1);
    let rate = 2.0 * half_width;
    let mut marks = Vec::new();
    let mut seen = HashSet::new();
    let mut t = 0.0;
    let mut place_counter = 0u64;
    for k in 0u64.. {
        let gap = times.exponential(k) / rate;
        let next = t + gap;
        // a zero gap (t + gap == t) would tie with the previous mark
        if next == t {
            continue;
        }
        t = next;
        if t > horizon {
            break;
        }
        let x = loop {
            let x = -half_width + 2.0 * half_width * places.uniform(place_counter);
            place_counter += 1;
            if seen.insert(x.to_bits()) {
                break x;
            }
        };
        marks.push(SpaceTimeMark { t, x });
    }
    Ok(MarkSet {
        horizon,
        half_width,
        marks,
    })
}

/// One fire attempt on the lattice, in unrescaled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ignition {
    pub raw_time: f64,
    pub site: i64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IgnitionSchedule {
    pub events: Vec<Ignition>,
}

impl IgnitionSchedule {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("raw_time,site\n");
        for e in &self.events {
            let _ = writeln!(s, "{},{}", fmt_f64(e.raw_time), e.site);
        }
        s
    }
}

/// Map each mark `(t,x)` to `(t·log(1/λ), ⌊x/(λ log(1/λ))⌋)`.
///
/// Marks landing on sites outside `⟦−A_λ, A_λ⟧` are dropped.
pub fn marks_to_ignitions(marks: &MarkSet, lambda: f64) -> Result<IgnitionSchedule> {
    let scaling = Scaling::new(lambda)?;
    let bound = scaling.box_bound(marks.half_width);
    let events = marks
        .marks
        .iter()
        .map(|m| Ignition {
            raw_time: scaling.raw_time(m.t),
            site: scaling.site_of(m.x),
        })
        .filter(|e| e.site.abs() <= bound)
        .collect();
    Ok(IgnitionSchedule { events })
}

/// Growth clock of one site: a rate-1 Poisson process on `[0, horizon]`.
pub fn growth_clock(site: i64, seed: &SeedSpec) -> PoissonClock {
    PoissonClock::new(seed.key().child(site as u64), 1.0)
}

/// Realization of the growth clock of `site` on `[0, horizon]`.
///
/// The stream depends on `(seed, site)` only, never on λ, so one family of
/// clocks serves every scale.
pub fn site_growth_times(site: i64, horizon: f64, seed: &SeedSpec) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return config(format!("horizon must be positive, got {horizon}"));
    }
    Ok(growth_clock(site, seed).points(horizon))
}
