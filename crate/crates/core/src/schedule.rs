//! Piecewise-constant force protocols.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::internal_force;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Start time (τ_r).
    pub start: f64,
    /// Fa/E_r on this segment (may be zero or negative).
    pub force: f64,
}

/// F(t) constant between switch times; the last segment extends forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceSchedule {
    segments: Vec<Segment>,
}

impl ForceSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments.first().ok_or_else(|| Error::invalid("schedule", "no segments"))?;
        if first.start != 0.0 {
            return Err(Error::invalid("schedule", "first segment must start at t = 0"));
        }
        if segments.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(Error::invalid("schedule", "switch times must increase"));
        }
        if segments.iter().any(|s| !s.force.is_finite() || !s.start.is_finite()) {
            return Err(Error::invalid("schedule", "non-finite entry"));
        }
        Ok(Self { segments })
    }

    pub fn constant(force: f64) -> Self {
        Self { segments: vec![Segment { start: 0.0, force }] }
    }

    /// F until `switch`, then −F.
    pub fn reverse_at(force: f64, switch: f64) -> Self {
        Self { segments: vec![Segment { start: 0.0, force }, Segment { start: switch, force: -force }] }
    }

    /// F until `switch`, then zero.
    pub fn freeze_at(force: f64, switch: f64) -> Self {
        Self { segments: vec![Segment { start: 0.0, force }, Segment { start: switch, force: 0.0 }] }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// End of segment `i` (infinite for the last one).
    pub fn segment_end(&self, i: usize) -> f64 {
        self.segments.get(i + 1).map_or(f64::INFINITY, |s| s.start)
    }

    pub fn force_at(&self, t: f64) -> f64 {
        self.segments.iter().rev().find(|s| s.start <= t).map_or(self.segments[0].force, |s| s.force)
    }

    /// Accumulated momentum kick A(t) = ∫₀ᵗ F(s)/π ds (units of k).
    pub fn momentum_kick(&self, t: f64) -> f64 {
        let mut total = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            if t <= s.start {
                break;
            }
            let end = self.segment_end(i).min(t);
            total += internal_force(s.force) * (end - s.start);
        }
        total
    }

    pub fn switch_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().skip(1).map(|s| s.start)
    }

    /// Largest |F| appearing anywhere.
    pub fn max_force(&self) -> f64 {
        self.segments.iter().map(|s| s.force.abs()).fold(0.0, f64::max)
    }
}
