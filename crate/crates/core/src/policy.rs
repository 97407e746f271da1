//! Time-varying transmission policies.
//!
//! A policy is an ordered list of contiguous segments covering `[0, horizon]`.
//! Each segment is either a constant level or the release ramp
//! `b(t) = beta / (1 + beta * gamma * (tau2 - t))`, which holds the infected
//! share exactly at `gamma` while the susceptible share falls linearly.
//!
//! Policies are left-continuous with right limits: a segment owns the
//! half-open interval `(t_start, t_end]`, and `b(0)` takes the first
//! segment's value.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::ModelParams;

/// Shape of one policy segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentShape {
    /// Constant transmission level (>= 0).
    Constant { level: f64 },
    /// `b(t) = beta / (1 + beta * gamma * (tau2 - t))`: rises continuously and
    /// reaches `beta` exactly at `t = tau2`.
    OptimalRamp { tau2: f64 },
}

impl SegmentShape {
    /// Transmission level at time `t` (within the owning segment).
    pub fn level(&self, params: &ModelParams, t: f64) -> f64 {
        match *self {
            SegmentShape::Constant { level } => level,
            SegmentShape::OptimalRamp { tau2 } => {
                params.beta / (1.0 + params.beta * params.gamma * (tau2 - t))
            }
        }
    }
}

/// One segment of a policy, owning `(t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySegment {
    pub t_start: f64,
    pub t_end: f64,
    pub shape: SegmentShape,
}

/// An admissible control policy: finitely many contiguous segments starting
/// at `t = 0`, every evaluated level non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPolicy {
    segments: Vec<PolicySegment>,
}

impl ControlPolicy {
    /// Build a policy from ordered segments; checks contiguity from zero,
    /// positive segment lengths and non-negative levels.
    pub fn from_segments(segments: Vec<PolicySegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(CoreError::PolicyGap {
                needed_from: 0.0,
                needed_to: 0.0,
                reason: "policy has no segments".into(),
            });
        }
        let mut expected_start = 0.0;
        for seg in &segments {
            if (seg.t_start - expected_start).abs() > 1e-12 * expected_start.max(1.0) {
                return Err(CoreError::PolicyGap {
                    needed_from: expected_start,
                    needed_to: seg.t_start,
                    reason: "segments are not contiguous".into(),
                });
            }
            if !(seg.t_end > seg.t_start) {
                return Err(CoreError::PolicyGap {
                    needed_from: seg.t_start,
                    needed_to: seg.t_end,
                    reason: "segment has non-positive length".into(),
                });
            }
            match seg.shape {
                SegmentShape::Constant { level } => {
                    if !(level >= 0.0) || !level.is_finite() {
                        return Err(CoreError::InvalidParameter {
                            name: "level",
                            reason: format!("segment level must be finite and >= 0, got {level}"),
                        });
                    }
                }
                SegmentShape::OptimalRamp { tau2 } => {
                    // The ramp is only defined up to tau2, where it reaches beta.
                    if seg.t_end > tau2 + 1e-9 {
                        return Err(CoreError::InvalidParameter {
                            name: "tau2",
                            reason: format!(
                                "ramp segment ends at {} after its tau2 = {tau2}",
                                seg.t_end
                            ),
                        });
                    }
                }
            }
            expected_start = seg.t_end;
        }
        Ok(Self { segments })
    }

    /// A single constant-level policy on `[0, horizon]`.
    pub fn constant(level: f64, horizon: f64) -> Result<Self> {
        Self::from_segments(vec![PolicySegment {
            t_start: 0.0,
            t_end: horizon,
            shape: SegmentShape::Constant { level },
        }])
    }

    /// Piecewise-constant policy from `(t_end, level)` pairs; the first
    /// segment starts at 0, each subsequent at the previous end.
    pub fn piecewise_constant(breaks: &[(f64, f64)]) -> Result<Self> {
        let mut segments = Vec::with_capacity(breaks.len());
        let mut start = 0.0;
        for &(t_end, level) in breaks {
            segments.push(PolicySegment {
                t_start: start,
                t_end,
                shape: SegmentShape::Constant { level },
            });
            start = t_end;
        }
        Self::from_segments(segments)
    }

    pub fn segments(&self) -> &[PolicySegment] {
        &self.segments
    }

    /// End of the last segment.
    pub fn horizon(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    /// Interior breakpoints (segment joins), strictly inside `(0, horizon)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments
            .iter()
            .skip(1)
            .map(|s| s.t_start)
            .collect()
    }

    /// Error unless the policy covers `[0, t]`.
    pub fn require_coverage(&self, t: f64) -> Result<()> {
        if self.horizon() + 1e-12 >= t {
            Ok(())
        } else {
            Err(CoreError::PolicyGap {
                needed_from: 0.0,
                needed_to: t,
                reason: format!("policy ends at {}", self.horizon()),
            })
        }
    }

    /// Index of the segment owning time `t` under left-continuity:
    /// the segment with `t_start < t <= t_end` (the first segment for `t = 0`).
    pub fn segment_index_at(&self, t: f64) -> Option<usize> {
        if t < 0.0 {
            return None;
        }
        if t == 0.0 {
            return Some(0);
        }
        self.segments
            .iter()
            .position(|s| t > s.t_start && t <= s.t_end)
    }

    /// Transmission level at time `t` (left-continuous).
    pub fn eval(&self, params: &ModelParams, t: f64) -> f64 {
        match self.segment_index_at(t) {
            Some(i) => {
                let s = &self.segments[i];
                s.shape.level(params, t)
            }
            // Beyond the horizon the policy is undefined; callers must check
            // coverage first. Clamp to the last segment for robustness.
            None => {
                let s = self.segments.last().expect("non-empty");
                s.shape.level(params, t.min(s.t_end))
            }
        }
    }

    /// True if any segment is exactly the zero level.
    pub fn has_zero_segment(&self) -> bool {
        self.segments
            .iter()
            .any(|s| matches!(s.shape, SegmentShape::Constant { level } if level == 0.0))
    }
}
