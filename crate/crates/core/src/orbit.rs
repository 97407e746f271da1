//! Closed forms for constant-rate transmission.
//!
//! Along any stretch where `b(t) = delta` is constant, the solution stays on
//! the orbit `y = y0 + (alpha/delta) ln(x/x0) - x + x0`. From it follow the
//! peak infected share and the limiting susceptible share.

use crate::error::{CoreError, Result};
use crate::model::{EpidemicState, ModelParams};
use crate::rootfind::bisect;

/// Infected share on the constant-`delta` orbit through `from`, evaluated at
/// susceptible share `x` (requires `0 < x <= from.x`).
pub fn orbit_constant(
    params: &ModelParams,
    delta: f64,
    from: &EpidemicState,
    x: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(CoreError::Precondition(format!(
            "orbit requires delta > 0, got {delta}"
        )));
    }
    if !(x > 0.0 && x <= from.x) {
        return Err(CoreError::Precondition(format!(
            "orbit evaluation point must satisfy 0 < x <= {}, got {x}",
            from.x
        )));
    }
    Ok(from.y + params.alpha / delta * (x / from.x).ln() - x + from.x)
}

/// Peak infected share under constant `delta` starting from the initial
/// state: `1 + (alpha/delta) ln(alpha/(delta(1-eps))) - alpha/delta`.
/// Requires `delta > alpha/(1-eps)` (otherwise the peak is at t = 0).
pub fn peak_infected(params: &ModelParams, delta: f64) -> Result<f64> {
    let a = params.alpha;
    let x0 = params.x0();
    if !(delta >= a / x0) {
        return Err(CoreError::Precondition(format!(
            "peak formula requires delta >= alpha/(1-eps) = {}, got {delta}",
            a / x0
        )));
    }
    Ok(1.0 + a / delta * (a / (delta * x0)).ln() - a / delta)
}

/// Limiting susceptible share under constant `delta` from `from`: the unique
/// root in `(0, from.x)` of
/// `x = (alpha/delta) ln(x/from.x) + from.x + from.y`.
pub fn limit_susceptible(params: &ModelParams, delta: f64, from: &EpidemicState) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(CoreError::Precondition(format!(
            "limit requires delta > 0, got {delta}"
        )));
    }
    from.validate()?;
    let g = |x: f64| x - params.alpha / delta * (x / from.x).ln() - from.x - from.y;
    // g(from.x) = -from.y < 0 and g -> +inf as x -> 0+; walk the lower end
    // down until it brackets.
    let mut lo = from.x * 0.5;
    while g(lo) <= 0.0 {
        lo *= 0.25;
        if lo < 1e-300 {
            return Err(CoreError::NoSignChange { lo, hi: from.x });
        }
    }
    bisect(lo, from.x, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::ControlPolicy;
    use crate::solver::{simulate, simulate_until, EventSpec, SimConfig};
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::new(0.3, 1.0, 0.2, 0.01).unwrap()
    }

    #[test]
    fn orbit_identity_at_start_point() {
        let p = params();
        let from = EpidemicState::new(0.7, 0.15).unwrap();
        assert_eq!(orbit_constant(&p, 0.8, &from, 0.7).unwrap(), 0.15);
    }

    #[test]
    fn orbit_value_matches_direct_formula_and_simulation() {
        let p = params();
        let from = EpidemicState::initial(&p);
        let y = orbit_constant(&p, 1.0, &from, 0.3).unwrap();
        // Independent evaluation (frozen from high-precision arithmetic).
        assert_relative_eq!(y, 0.34182325945826963, epsilon = 1e-15);
        // Cross-check: simulate with b = 1 and read y when x crosses 0.3.
        let cfg = SimConfig::default();
        let policy = ControlPolicy::constant(1.0, cfg.t_max).unwrap();
        let (tr, _) =
            simulate_until(&p, &policy, &from, &cfg, EventSpec::XReaches { level: 0.3 }).unwrap();
        assert_relative_eq!(tr.final_sample().y, y, epsilon = 1e-8);
    }

    #[test]
    fn orbit_log_term_vanishes_for_large_delta() {
        let p = params();
        let from = EpidemicState::initial(&p);
        let y = orbit_constant(&p, 1e12, &from, 0.3).unwrap();
        assert_relative_eq!(y, from.y - 0.3 + from.x, epsilon = 1e-10);
    }

    #[test]
    fn peak_equals_epsilon_at_lower_delta_bound() {
        let p = params();
        let y_hat = peak_infected(&p, p.alpha / p.x0()).unwrap();
        assert_relative_eq!(y_hat, p.epsilon, epsilon = 1e-12);
    }

    #[test]
    fn peak_value_and_monotonicity_in_delta() {
        let p = params();
        assert_relative_eq!(
            peak_infected(&p, 1.0).unwrap(),
            0.34182325945826963,
            epsilon = 1e-14
        );
        // Finite-difference sign check on the formula.
        let y05 = peak_infected(&p, 0.5).unwrap();
        let y075 = peak_infected(&p, 0.75).unwrap();
        let y1 = peak_infected(&p, 1.0).unwrap();
        assert!(y05 < y075 && y075 < y1);
        // Cross-check against a fine laissez-faire simulation.
        let cfg = SimConfig::default();
        let policy = ControlPolicy::constant(1.0, cfg.t_max).unwrap();
        let tr = simulate(&p, &policy, &EpidemicState::initial(&p), &cfg).unwrap();
        assert_relative_eq!(tr.max_y, y1, epsilon = 1e-8);
    }

    #[test]
    fn limit_susceptible_matches_long_simulation() {
        let p = params();
        let from = EpidemicState::initial(&p);
        let x_inf = limit_susceptible(&p, 1.0, &from).unwrap();
        assert_relative_eq!(x_inf, 0.040409735241711709, epsilon = 1e-12);
        let cfg = SimConfig {
            y_stop: 1e-10,
            ..SimConfig::default()
        };
        let policy = ControlPolicy::constant(1.0, cfg.t_max).unwrap();
        let tr = simulate(&p, &policy, &from, &cfg).unwrap();
        assert!((tr.final_sample().x - x_inf).abs() < 1e-4);
        assert!(x_inf < from.x);
    }

    #[test]
    fn limit_approaches_start_when_already_past_herd_immunity() {
        let p = params();
        // from.x < alpha/delta and a tiny infected share: x barely moves.
        let from = EpidemicState::new(0.2, 1e-9).unwrap();
        let x_inf = limit_susceptible(&p, 1.0, &from).unwrap();
        assert!((x_inf - from.x).abs() < 1e-7);
        assert!(x_inf < from.x);
    }
}
