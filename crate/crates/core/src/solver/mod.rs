//! Controlled SIR integration with event detection.
//!
//! Dynamics: `x' = -b(t) x y`, `y' = b(t) x y - alpha y`, plus the running
//! suppression cost `c' = (beta - b(t))_+`. Integration restarts at every
//! policy breakpoint so each Runge-Kutta step sees a smooth right-hand side.
//! Events (`y` or `x` reaching a level) are located by bisection on the
//! integrator's dense output.

mod dopri;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{EpidemicState, ModelParams};
use crate::policy::{ControlPolicy, SegmentShape};
use dopri::{DenseStep, State, StepOutcome};

/// Absolute time tolerance for event location.
pub const EVENT_TIME_TOL: f64 = 1e-10;

/// Integrator and sampling configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Relative step tolerance.
    pub rel_tol: f64,
    /// Absolute step tolerance.
    pub abs_tol: f64,
    /// Maximum step length.
    pub max_step: f64,
    /// Terminate once the infected share falls below this.
    pub y_stop: f64,
    /// Hard horizon cap.
    pub t_max: f64,
    /// Sampling interval for emitted trajectory rows.
    pub output_dt: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        // Tight defaults: downstream identities are checked at 1e-6.
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1.0,
            y_stop: 1e-9,
            t_max: 400.0,
            output_dt: 0.1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("y_stop", self.y_stop),
            ("t_max", self.t_max),
            ("output_dt", self.output_dt),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// One emitted trajectory row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub b: f64,
    pub cumulative_cost: f64,
}

/// A detected event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub label: String,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Why integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    YBelowStop,
    HorizonCap,
    EventHit,
}

/// Time-stamped solution of the controlled system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub events: Vec<TrajectoryEvent>,
    pub terminated_by: Termination,
    /// Largest infected share seen anywhere on the trajectory (interior
    /// peaks are located by bisection on `y' = 0`, not just sampled).
    pub max_y: f64,
}

impl Trajectory {
    pub fn final_sample(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has samples")
    }

    /// Total suppression cost accumulated on the trajectory.
    pub fn cost(&self) -> f64 {
        self.final_sample().cumulative_cost
    }
}

/// Terminal event specification for [`simulate_until`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSpec {
    YReaches { level: f64 },
    XReaches { level: f64 },
}

impl EventSpec {
    fn level(&self) -> f64 {
        match *self {
            EventSpec::YReaches { level } | EventSpec::XReaches { level } => level,
        }
    }

    fn gap(&self, x: f64, y: f64) -> f64 {
        match *self {
            EventSpec::YReaches { level } => y - level,
            EventSpec::XReaches { level } => x - level,
        }
    }

    fn label(&self) -> String {
        match *self {
            EventSpec::YReaches { level } => format!("y_reaches {level}"),
            EventSpec::XReaches { level } => format!("x_reaches {level}"),
        }
    }
}

/// Integrate the controlled system over `[0, cfg.t_max]` (or until the
/// infected share falls below `cfg.y_stop`).
pub fn simulate(
    params: &ModelParams,
    policy: &ControlPolicy,
    init: &EpidemicState,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    run(params, policy, init, cfg, None).map(|(tr, _)| tr)
}

/// Integrate until the first crossing of the event level, returning the
/// truncated trajectory and the event time (bisection-located to
/// [`EVENT_TIME_TOL`]).
pub fn simulate_until(
    params: &ModelParams,
    policy: &ControlPolicy,
    init: &EpidemicState,
    cfg: &SimConfig,
    event: EventSpec,
) -> Result<(Trajectory, f64)> {
    let (trajectory, hit) = run(params, policy, init, cfg, Some(event))?;
    match hit {
        Some(t) => Ok((trajectory, t)),
        None => Err(CoreError::EventNotReached {
            what: event.label(),
        }),
    }
}

struct Recorder {
    samples: Vec<TrajectorySample>,
    max_y: f64,
    next_k: u64,
    output_dt: f64,
    y_stop: f64,
    termination: Option<Termination>,
    event_hit: Option<f64>,
}

impl Recorder {
    fn emit(&mut self, t: f64, s: &State, b: f64) {
        if let Some(last) = self.samples.last() {
            if t <= last.t + 1e-13 * t.abs().max(1.0) {
                return;
            }
        }
        self.samples.push(TrajectorySample {
            t,
            x: s[0],
            y: s[1],
            b,
            cumulative_cost: s[2],
        });
    }

    /// Handle one accepted step: event location, stop checks, peak tracking,
    /// grid sampling.
    fn observe(
        &mut self,
        dense: &DenseStep,
        params: &ModelParams,
        shape: &SegmentShape,
        event: Option<&EventSpec>,
    ) -> StepOutcome {
        let t0 = dense.t0;
        let t1 = dense.t_end();
        let s1 = dense.eval(t1);

        let mut t_cut = t1;
        let mut outcome = StepOutcome::Continue;

        if let Some(ev) = event {
            let s0 = dense.eval(t0);
            let g0 = ev.gap(s0[0], s0[1]);
            let g1 = ev.gap(s1[0], s1[1]);
            if let Some(t_ev) = locate_crossing(dense, ev, g0, g1, t0, t1) {
                self.termination = Some(Termination::EventHit);
                self.event_hit = Some(t_ev);
                t_cut = t_ev;
                outcome = StepOutcome::Stop { t: t_ev };
            }
        }

        if matches!(outcome, StepOutcome::Continue) && s1[1] < self.y_stop {
            self.termination = Some(Termination::YBelowStop);
            outcome = StepOutcome::Stop { t: t1 };
        }

        self.track_peak(dense, params, shape, t0, t_cut);

        // Emit grid samples inside (t0, t_cut].
        loop {
            let t_k = self.next_k as f64 * self.output_dt;
            if t_k > t_cut {
                break;
            }
            if t_k > t0 {
                let s = dense.eval(t_k);
                self.emit(t_k, &s, shape.level(params, t_k));
            }
            self.next_k += 1;
        }

        let s_cut = dense.eval(t_cut);
        self.max_y = self.max_y.max(s_cut[1]);
        if self.termination.is_some() {
            // Final row at the stopping time.
            self.emit(t_cut, &s_cut, shape.level(params, t_cut));
        }
        outcome
    }

    /// Locate an interior maximum of `y` (a sign change of
    /// `s(t) = b(t) x(t) - alpha`) and fold it into `max_y`.
    fn track_peak(
        &mut self,
        dense: &DenseStep,
        params: &ModelParams,
        shape: &SegmentShape,
        t0: f64,
        t1: f64,
    ) {
        let slope = |t: f64| {
            let s = dense.eval(t);
            shape.level(params, t) * s[0] - params.alpha
        };
        let g0 = slope(t0);
        let g1 = slope(t1);
        if g0 > 0.0 && g1 <= 0.0 {
            let mut lo = t0;
            let mut hi = t1;
            while hi - lo > EVENT_TIME_TOL {
                let mid = 0.5 * (lo + hi);
                if slope(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = dense.eval(0.5 * (lo + hi));
            self.max_y = self.max_y.max(s[1]);
        }
    }
}

fn locate_crossing(
    dense: &DenseStep,
    ev: &EventSpec,
    g0: f64,
    g1: f64,
    t0: f64,
    t1: f64,
) -> Option<f64> {
    if g0 == 0.0 {
        return Some(t0);
    }
    if g1 == 0.0 {
        return Some(t1);
    }
    if g0.signum() == g1.signum() {
        return None;
    }
    let mut lo = t0;
    let mut hi = t1;
    while hi - lo > EVENT_TIME_TOL {
        let mid = 0.5 * (lo + hi);
        let s = dense.eval(mid);
        let gm = ev.gap(s[0], s[1]);
        if gm == 0.0 {
            return Some(mid);
        }
        if gm.signum() == g0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn run(
    params: &ModelParams,
    policy: &ControlPolicy,
    init: &EpidemicState,
    cfg: &SimConfig,
    event: Option<EventSpec>,
) -> Result<(Trajectory, Option<f64>)> {
    params.validate()?;
    init.validate()?;
    cfg.validate()?;
    policy.require_coverage(cfg.t_max)?;

    let mut rec = Recorder {
        samples: Vec::new(),
        max_y: init.y,
        next_k: 1,
        output_dt: cfg.output_dt,
        y_stop: cfg.y_stop,
        termination: None,
        event_hit: None,
    };
    let b0 = policy.eval(params, 0.0);
    let mut state: State = [init.x, init.y, 0.0];
    rec.emit(0.0, &state, b0);

    // Event already satisfied at t = 0.
    if let Some(ev) = &event {
        if ev.gap(init.x, init.y) == 0.0 {
            let trajectory = finish(rec, Termination::EventHit, &[event_record(ev, 0.0, &state)]);
            return Ok((trajectory, Some(0.0)));
        }
    }
    if init.y < cfg.y_stop {
        let trajectory = finish(rec, Termination::YBelowStop, &[]);
        return Ok((trajectory, None));
    }

    let mut t = 0.0;
    for seg in policy.segments() {
        if seg.t_start >= cfg.t_max || rec.termination.is_some() {
            break;
        }
        let seg_end = seg.t_end.min(cfg.t_max);
        if seg_end <= t {
            continue;
        }
        let shape = seg.shape;
        let rhs = |tt: f64, s: &State| {
            let b = shape.level(params, tt);
            let infection = b * s[0] * s[1];
            [
                -infection,
                infection - params.alpha * s[1],
                (params.beta - b).max(0.0),
            ]
        };
        let (t_fin, s_fin) = dopri::integrate(
            rhs,
            t,
            seg_end,
            state,
            cfg.rel_tol,
            cfg.abs_tol,
            cfg.max_step,
            |dense| rec.observe(dense, params, &shape, event.as_ref()),
        )?;
        t = t_fin;
        state = s_fin;
        if rec.termination.is_none() {
            // Row at the breakpoint, evaluated on the ending segment
            // (left-continuity).
            rec.emit(t, &state, shape.level(params, t));
        }
    }

    let termination = rec.termination.unwrap_or(Termination::HorizonCap);
    let event_time = rec.event_hit;
    let records: Vec<TrajectoryEvent> = match (&event, event_time) {
        (Some(ev), Some(t_ev)) => vec![event_record(ev, t_ev, &state)],
        _ => Vec::new(),
    };
    let trajectory = finish(rec, termination, &records);
    Ok((trajectory, event_time))
}

fn event_record(ev: &EventSpec, t: f64, state: &State) -> TrajectoryEvent {
    // Pin the crossing coordinate to the requested level; the other one is
    // read off the integrated state.
    let (x, y) = match ev {
        EventSpec::YReaches { .. } => (state[0], ev.level()),
        EventSpec::XReaches { .. } => (ev.level(), state[1]),
    };
    TrajectoryEvent {
        label: ev.label(),
        t,
        x,
        y,
    }
}

fn finish(rec: Recorder, terminated_by: Termination, events: &[TrajectoryEvent]) -> Trajectory {
    Trajectory {
        samples: rec.samples,
        events: events.to_vec(),
        terminated_by,
        max_y: rec.max_y,
    }
}
