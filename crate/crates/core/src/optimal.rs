//! The cost-minimal suppression policy under the capacity constraint.
//!
//! If the unregulated peak stays below `gamma`, doing nothing is optimal at
//! zero cost. Otherwise the minimizer runs unregulated until the infected
//! share first reaches `gamma` (time `tau1`), drops transmission
//! discontinuously to `alpha / x(tau1)`, rides the constraint `y = gamma`
//! with the ramp `b(t) = beta / (1 + beta gamma (tau2 - t))` until the
//! susceptible share reaches `alpha/beta` (time `tau2`), and is unregulated
//! afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::{EpidemicState, ModelParams};
use crate::orbit::peak_infected;
use crate::policy::{ControlPolicy, PolicySegment, SegmentShape};
use crate::rootfind::bisect;
use crate::solver::{simulate_until, EventSpec, SimConfig};

/// Tolerance used to classify the degenerate boundary where the unregulated
/// peak equals `gamma` exactly.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Cross-check tolerance between the two closed-form cost expressions.
pub const COST_IDENTITY_TOL: f64 = 1e-12;

/// Which regime the parameters fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    LaissezFaireOptimal,
    Constrained,
}

/// Solved quantities of the constrained optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedOptimum {
    /// First time the infected share reaches `gamma` under no regulation.
    pub tau1: f64,
    /// Release time: `tau1 + (x(tau1) - alpha/beta) / (alpha gamma)`.
    pub tau2: f64,
    /// Susceptible share at `tau1` (larger fixed-point root).
    pub x_tau1: f64,
    /// Level just after the shutdown: `alpha / x(tau1)`.
    pub jump_level: f64,
    /// Minimized cost in closed form.
    pub cost_closed_form: f64,
}

/// Outcome of the policy construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OptimalSolution {
    /// No regulation needed; cost 0.
    LaissezFaire,
    Constrained(ConstrainedOptimum),
}

impl OptimalSolution {
    pub fn regime(&self) -> Regime {
        match self {
            OptimalSolution::LaissezFaire => Regime::LaissezFaireOptimal,
            OptimalSolution::Constrained(_) => Regime::Constrained,
        }
    }

    pub fn cost_closed_form(&self) -> f64 {
        match self {
            OptimalSolution::LaissezFaire => 0.0,
            OptimalSolution::Constrained(c) => c.cost_closed_form,
        }
    }
}

/// True iff no regulation is needed: the unregulated peak stays below the
/// capacity share.
///
/// Evaluates both the peak test `1 + (a/b) ln(a/(b(1-eps))) - a/b <= gamma`
/// and its rearrangement `gamma >= (a/b)(ln(a/b) - 1 + b/a - ln(1-eps))`;
/// the two are the same expression and must agree.
pub fn laissez_faire_is_optimal(params: &ModelParams) -> Result<bool> {
    params.validate()?;
    if params.alpha >= params.beta || params.beta * params.x0() <= params.alpha {
        // Infections decline from the outset; the program is trivial.
        return Ok(true);
    }
    let ab = params.alpha / params.beta;
    let peak = peak_infected(params, params.beta)?;
    let quantitative = ab * ((ab).ln() - 1.0 + params.beta / params.alpha - params.x0().ln());
    let by_peak = peak <= params.gamma + BOUNDARY_TOL;
    let by_quantitative = quantitative <= params.gamma + BOUNDARY_TOL;
    if by_peak != by_quantitative {
        return Err(CoreError::CrossCheckFailed {
            what: "peak test vs quantitative regime test".into(),
            delta: (peak - quantitative).abs(),
            tol: BOUNDARY_TOL,
        });
    }
    Ok(by_peak)
}

fn require_constrained(params: &ModelParams) -> Result<()> {
    if laissez_faire_is_optimal(params)? {
        return Err(CoreError::Precondition(
            "parameters are in the laissez-faire-optimal regime".into(),
        ));
    }
    if params.epsilon >= params.gamma {
        return Err(CoreError::Precondition(format!(
            "initial infected share {} already exceeds capacity {}",
            params.epsilon, params.gamma
        )));
    }
    Ok(())
}

/// Susceptible share when the constraint is first touched: the larger root of
/// `x = 1 - gamma + (alpha/beta) ln(x/(1-eps))`, bracketed in
/// `[alpha/beta, 1-eps]` and bisected to floating-point resolution.
pub fn solve_x_tau1(params: &ModelParams) -> Result<f64> {
    require_constrained(params)?;
    let ab = params.alpha / params.beta;
    let x0 = params.x0();
    let g = |x: f64| x - (1.0 - params.gamma) - ab * (x / x0).ln();
    let root = bisect(ab, x0, g)?;
    let residual = g(root).abs();
    if residual > 1e-12 {
        return Err(CoreError::CrossCheckFailed {
            what: "fixed-point residual of x(tau1)".into(),
            delta: residual,
            tol: 1e-12,
        });
    }
    Ok(root)
}

/// First time the infected share reaches `gamma` under no regulation, located
/// by the integrator's event detection and cross-checked against
/// [`solve_x_tau1`] to 1e-6.
pub fn compute_tau1(params: &ModelParams, cfg: &SimConfig) -> Result<f64> {
    require_constrained(params)?;
    let policy = ControlPolicy::constant(params.beta, cfg.t_max)?;
    let init = EpidemicState::initial(params);
    let (trajectory, tau1) = simulate_until(
        params,
        &policy,
        &init,
        cfg,
        EventSpec::YReaches {
            level: params.gamma,
        },
    )?;
    let x_event = trajectory.final_sample().x;
    let x_root = solve_x_tau1(params)?;
    let delta = (x_event - x_root).abs();
    if delta > 1e-6 {
        return Err(CoreError::CrossCheckFailed {
            what: "event x(tau1) vs fixed-point root".into(),
            delta,
            tol: 1e-6,
        });
    }
    Ok(tau1)
}

/// Minimized cost in closed form, from the fixed-point root:
///
/// `C = (beta/(alpha gamma)) (x1 - (alpha/beta) ln x1) + (1/gamma)(ln(alpha/beta) - 1)`.
///
/// Cross-checked against the parameter-only form
/// `(1/gamma)(ln(alpha/beta) - 1 + beta/alpha - ln(1-eps)) - beta/alpha`
/// to 1e-12; the two are related by the fixed-point equation for `x1`.
pub fn optimal_cost_closed_form(params: &ModelParams) -> Result<f64> {
    let x1 = solve_x_tau1(params)?;
    let cost = cost_from_x_tau1(params, x1);
    let corollary = corollary_min_cost(params)?;
    let delta = (cost - corollary).abs();
    if delta > COST_IDENTITY_TOL {
        return Err(CoreError::CrossCheckFailed {
            what: "closed-form cost vs parameter-only form".into(),
            delta,
            tol: COST_IDENTITY_TOL,
        });
    }
    Ok(cost)
}

/// The fixed-point-root form of the minimized cost (no cross-check).
pub fn cost_from_x_tau1(params: &ModelParams, x_tau1: f64) -> f64 {
    let a = params.alpha;
    let b = params.beta;
    let g = params.gamma;
    b / (a * g) * (x_tau1 - a / b * x_tau1.ln()) + (1.0 / g) * ((a / b).ln() - 1.0)
}

/// Parameter-only form of the minimized cost:
/// `(1/gamma)(ln(alpha/beta) - 1 + beta/alpha - ln(1-eps)) - beta/alpha`.
pub fn corollary_min_cost(params: &ModelParams) -> Result<f64> {
    require_constrained(params)?;
    let ab = params.alpha / params.beta;
    Ok((1.0 / params.gamma) * (ab.ln() - 1.0 + 1.0 / ab - params.x0().ln()) - 1.0 / ab)
}

/// Build the optimal policy over `[0, cfg.t_max]` together with its solved
/// quantities.
pub fn build_optimal_policy(
    params: &ModelParams,
    cfg: &SimConfig,
) -> Result<(ControlPolicy, OptimalSolution)> {
    params.validate()?;
    cfg.validate()?;
    if laissez_faire_is_optimal(params)? {
        let policy = ControlPolicy::constant(params.beta, cfg.t_max)?;
        return Ok((policy, OptimalSolution::LaissezFaire));
    }
    let tau1 = compute_tau1(params, cfg)?;
    let x_tau1 = solve_x_tau1(params)?;
    let tau2 = tau1 + (x_tau1 - params.herd_threshold()) / (params.alpha * params.gamma);
    if tau2 >= cfg.t_max {
        return Err(CoreError::Precondition(format!(
            "horizon t_max = {} does not cover the release time tau2 = {tau2}",
            cfg.t_max
        )));
    }
    let policy = ControlPolicy::from_segments(vec![
        PolicySegment {
            t_start: 0.0,
            t_end: tau1,
            shape: SegmentShape::Constant { level: params.beta },
        },
        PolicySegment {
            t_start: tau1,
            t_end: tau2,
            shape: SegmentShape::OptimalRamp { tau2 },
        },
        PolicySegment {
            t_start: tau2,
            t_end: cfg.t_max,
            shape: SegmentShape::Constant { level: params.beta },
        },
    ])?;
    let solution = ConstrainedOptimum {
        tau1,
        tau2,
        x_tau1,
        jump_level: params.alpha / x_tau1,
        cost_closed_form: optimal_cost_closed_form(params)?,
    };
    Ok((policy, OptimalSolution::Constrained(solution)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::simulate;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::new(0.3, 1.0, 0.2, 0.01).unwrap()
    }

    #[test]
    fn regime_classification() {
        let p = params();
        assert!(!laissez_faire_is_optimal(&p).unwrap());
        let roomy = ModelParams::new(0.3, 1.0, 0.99, 0.01).unwrap();
        assert!(laissez_faire_is_optimal(&roomy).unwrap());
        let declining = ModelParams::new(1.1, 1.0, 0.2, 0.01).unwrap();
        assert!(laissez_faire_is_optimal(&declining).unwrap());
    }

    #[test]
    fn fixed_point_root_value_and_residual() {
        let p = params();
        let x1 = solve_x_tau1(&p).unwrap();
        assert_relative_eq!(x1, 0.69299562124933186, epsilon = 1e-13);
        let g = x1 - 0.8 - 0.3 * (x1 / 0.99f64).ln();
        assert!(g.abs() <= 1e-12);
        assert!(x1 > p.herd_threshold());
    }

    #[test]
    fn closed_form_cost_value_and_identity() {
        let p = params();
        let cost = optimal_cost_closed_form(&p).unwrap();
        assert_relative_eq!(cost, 2.3637209909711606, epsilon = 1e-13);
        let cor = corollary_min_cost(&p).unwrap();
        assert!((cost - cor).abs() <= 1e-12);
    }

    #[test]
    fn cost_identity_on_parameter_grid() {
        // (alpha/beta, gamma) grid inside the constrained regime.
        for &ab in &[0.15, 0.25, 0.35, 0.45, 0.55] {
            for &gamma in &[0.02, 0.05, 0.08, 0.10, 0.12] {
                let p = ModelParams::new(ab, 1.0, gamma, 0.01).unwrap();
                assert!(!laissez_faire_is_optimal(&p).unwrap(), "ab={ab} gamma={gamma}");
                let x1 = solve_x_tau1(&p).unwrap();
                let eq_i = cost_from_x_tau1(&p, x1);
                let cor = corollary_min_cost(&p).unwrap();
                assert!(
                    (eq_i - cor).abs() <= 1e-12,
                    "identity gap {} at ab={ab} gamma={gamma}",
                    (eq_i - cor).abs()
                );
            }
        }
    }

    #[test]
    fn cost_decreases_in_gamma() {
        let mut last = f64::INFINITY;
        for &gamma in &[0.05, 0.1, 0.15, 0.2, 0.25, 0.3] {
            let p = ModelParams::new(0.3, 1.0, gamma, 0.01).unwrap();
            let c = corollary_min_cost(&p).unwrap();
            assert!(c < last, "cost not decreasing at gamma={gamma}");
            last = c;
        }
    }

    #[test]
    fn tau1_cross_check_and_policy_shape() {
        let p = params();
        let cfg = SimConfig::default();
        let (policy, solution) = build_optimal_policy(&p, &cfg).unwrap();
        let sol = match solution {
            OptimalSolution::Constrained(c) => c,
            _ => panic!("expected constrained regime"),
        };
        assert_eq!(policy.segments().len(), 3);
        // tau2 definition and jump identity.
        assert_relative_eq!(
            sol.tau2 - sol.tau1,
            (sol.x_tau1 - 0.3) / (0.3 * 0.2),
            epsilon = 1e-12
        );
        let ramp_start = p.beta / (1.0 + p.beta * p.gamma * (sol.tau2 - sol.tau1));
        assert!((sol.jump_level - ramp_start).abs() <= 1e-12);
        assert_relative_eq!(sol.jump_level, 0.43290316821794671, epsilon = 1e-9);
        // Ramp is continuous at tau2: b(tau2) = beta exactly.
        assert_eq!(policy.eval(&p, sol.tau2), p.beta);
        // Discontinuous at tau1.
        let before = policy.eval(&p, sol.tau1);
        let after = policy.eval(&p, sol.tau1 + 1e-9);
        assert_eq!(before, p.beta);
        assert!((after - sol.jump_level).abs() < 1e-6);
    }

    #[test]
    fn simulated_policy_rides_the_constraint_and_releases_at_herd_threshold() {
        let p = params();
        let cfg = SimConfig {
            output_dt: 0.05,
            ..SimConfig::default()
        };
        let (policy, solution) = build_optimal_policy(&p, &cfg).unwrap();
        let sol = match solution {
            OptimalSolution::Constrained(c) => c,
            _ => unreachable!(),
        };
        let tr = simulate(&p, &policy, &EpidemicState::initial(&p), &cfg).unwrap();
        let mut x_at_tau2 = None;
        for s in &tr.samples {
            if s.t >= sol.tau1 && s.t <= sol.tau2 {
                assert!((s.y - p.gamma).abs() < 1e-6, "plateau broken at t={}", s.t);
            }
            if (s.t - sol.tau2).abs() < 1e-9 {
                x_at_tau2 = Some(s.x);
            }
        }
        let x_at_tau2 = x_at_tau2.expect("sample at tau2");
        assert!((x_at_tau2 - p.herd_threshold()).abs() < 1e-6);
        // Numeric cost of the built policy matches the closed form.
        assert_relative_eq!(tr.cost(), sol.cost_closed_form, max_relative = 1e-6);
        assert!(tr.max_y <= p.gamma + 1e-7);
    }

    #[test]
    fn laissez_faire_regime_yields_single_segment() {
        let p = ModelParams::new(0.3, 1.0, 0.99, 0.01).unwrap();
        let cfg = SimConfig::default();
        let (policy, solution) = build_optimal_policy(&p, &cfg).unwrap();
        assert_eq!(policy.segments().len(), 1);
        assert_eq!(solution.regime(), Regime::LaissezFaireOptimal);
        assert_eq!(solution.cost_closed_form(), 0.0);
        assert!(matches!(
            solve_x_tau1(&p),
            Err(CoreError::Precondition(_))
        ));
        assert!(matches!(
            compute_tau1(&p, &cfg),
            Err(CoreError::Precondition(_))
        ));
    }

    #[test]
    fn x_infinity_higher_under_optimal_policy_than_laissez_faire() {
        use crate::orbit::limit_susceptible;
        let p = params();
        // Laissez-faire continuation from the initial state.
        let lf = limit_susceptible(&p, p.beta, &EpidemicState::initial(&p)).unwrap();
        // Optimal continuation: released at (alpha/beta, gamma) under b = beta.
        let release = EpidemicState::new(p.herd_threshold(), p.gamma).unwrap();
        let opt = limit_susceptible(&p, p.beta, &release).unwrap();
        assert_relative_eq!(lf, 0.040409735241711709, epsilon = 1e-12);
        assert_relative_eq!(opt, 0.072042618703531383, epsilon = 1e-12);
        assert!(opt > lf);
    }
}
