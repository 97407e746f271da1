//! Controlled SIR dynamics under a hard cap on the infected share.
//!
//! The crate simulates `x' = -b(t) x y`, `y' = b(t) x y - alpha y` for
//! arbitrary piecewise policies `b(t)`, prices suppression as
//! `int (beta - b(t))_+ dt`, and solves for the cost-minimal policy that
//! keeps `y(t) <= gamma`: unregulated spread, a discontinuous shutdown to
//! `alpha/x` once `y` first touches `gamma`, a rising release ramp riding
//! the constraint, and unregulated spread again once the susceptible share
//! passes `alpha/beta`.
//!
//! Layers:
//! - [`model`], [`policy`]: parameters, states, admissible controls;
//! - [`solver`]: adaptive Runge-Kutta integration with event detection;
//! - [`orbit`]: closed forms for constant transmission;
//! - [`optimal`]: the closed-form minimizer and its cost;
//! - [`policies`]: named baselines and the cost functional;
//! - [`phase`]: the `y = phi(x)` view, its cost functional, and the
//!   minimizing phase density;
//! - [`verify`]: brute-force search over discretized controls.

pub mod error;
pub mod model;
pub mod optimal;
pub mod orbit;
pub mod phase;
pub mod policies;
pub mod policy;
pub mod rootfind;
pub mod solver;
pub mod verify;

pub use error::{CoreError, Result};
pub use model::{EpidemicState, ModelParams};
pub use optimal::{
    build_optimal_policy, laissez_faire_is_optimal, optimal_cost_closed_form, ConstrainedOptimum,
    OptimalSolution, Regime,
};
pub use orbit::{limit_susceptible, orbit_constant, peak_infected};
pub use phase::{
    optimal_phase_density, phase_cost, reconstruct_policy, solve_x_star, to_phase, OptimalPhase,
    PhaseFunction, PhaseJump,
};
pub use policies::{
    constant_shutdown, evaluate_cost, flatten_curve, flatten_level, laissez_faire, CostReport,
};
pub use policy::{ControlPolicy, PolicySegment, SegmentShape};
pub use solver::{
    simulate, simulate_until, EventSpec, SimConfig, Termination, Trajectory, TrajectoryEvent,
    TrajectorySample,
};
pub use verify::{
    brute_force_search, project_optimal, uniqueness_probe, DescentStart, DiscretePolicy,
    FeasibilityMode, SearchOptions, SearchReport, SearchStrategy, UniquenessReport,
};
