//! Phase-space view of suppression costs.
//!
//! Along any trajectory whose transmission stays positive, the infected share
//! is a function of the susceptible share: `y = phi(x)` on `(x_inf, x0]`.
//! Stops (`b = 0`) freeze `x` while `y` decays, and appear as upward jumps of
//! `phi` at a fixed `x`. The time-domain suppression cost equals the phase
//! functional
//!
//! `J(phi) = int L(xi, phi, phi') dxi + (beta/alpha) sum ln(phi(u)/phi(u-))`
//!
//! with `L(xi, p, p') = (beta/alpha) ((1 + p')/p - alpha/(beta xi p))_+`,
//! the sum running over the jumps.
//!
//! For sampled phase functions the integral is evaluated per grid interval by
//! the midpoint rule, with `phi'` taken as the interval secant (the one-sided
//! difference toward larger `x`). At an interval midpoint the secant matches
//! the local derivative to second order, so segments where the integrand
//! vanishes (unregulated stretches) contribute only O(h^2) noise.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::model::ModelParams;
use crate::optimal::laissez_faire_is_optimal;
use crate::rootfind::bisect;
use crate::solver::{Termination, Trajectory, TrajectorySample};

/// An upward jump of the phase function at a frozen susceptible share:
/// `y_upper = phi(x)` (infected share entering the stop),
/// `y_lower = phi(x-)` (infected share when transmission resumes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseJump {
    pub x: f64,
    pub y_upper: f64,
    pub y_lower: f64,
}

/// Sampled phase function on a strictly decreasing grid of susceptible
/// shares. At a jump location the `values` column holds the right-continuous
/// value `phi(x) = y_upper`; the jump record carries the left limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub jumps: Vec<PhaseJump>,
}

impl PhaseFunction {
    pub fn from_parts(grid: Vec<f64>, values: Vec<f64>, jumps: Vec<PhaseJump>) -> Result<Self> {
        let phi = Self {
            grid,
            values,
            jumps,
        };
        phi.validate()?;
        Ok(phi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.len() != self.values.len() || self.grid.len() < 2 {
            return Err(CoreError::InvalidPhase(format!(
                "need matching grid/value lengths >= 2, got {} and {}",
                self.grid.len(),
                self.values.len()
            )));
        }
        for w in self.grid.windows(2) {
            if !(w[1] < w[0]) {
                return Err(CoreError::InvalidPhase(format!(
                    "grid not strictly decreasing at x = {}",
                    w[0]
                )));
            }
        }
        for &v in &self.values {
            if !(v > 0.0 && v < 1.0) {
                return Err(CoreError::InvalidPhase(format!(
                    "phase value {v} outside (0, 1)"
                )));
            }
        }
        for j in &self.jumps {
            if !(j.y_lower > 0.0 && j.y_upper >= j.y_lower) {
                return Err(CoreError::InvalidPhase(format!(
                    "jump at x = {} must satisfy 0 < y_lower <= y_upper",
                    j.x
                )));
            }
        }
        Ok(())
    }

    /// Largest grid value.
    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// Transform a simulated trajectory into its phase function.
///
/// Runs of samples with `b = 0` (transmission stopped, `x` frozen) become
/// jump records; everywhere else `x` must be non-increasing.
pub fn to_phase(trajectory: &Trajectory) -> Result<PhaseFunction> {
    let samples = &trajectory.samples;
    if samples.len() < 2 {
        return Err(CoreError::InvalidPhase(
            "trajectory too short for a phase transform".into(),
        ));
    }
    let mut grid: Vec<f64> = Vec::with_capacity(samples.len());
    let mut values: Vec<f64> = Vec::with_capacity(samples.len());
    let mut jumps: Vec<PhaseJump> = Vec::new();
    let mut stop: Option<(f64, f64)> = None; // (x frozen, current y)

    for s in samples {
        if s.b == 0.0 {
            match stop {
                None => {
                    if grid.last() != Some(&s.x) {
                        // Trajectory starts inside a stop: anchor the jump at
                        // the first sample.
                        grid.push(s.x);
                        values.push(s.y);
                    }
                    stop = Some((s.x, s.y));
                }
                Some((x_frozen, _)) => {
                    if (s.x - x_frozen).abs() > 1e-13 * x_frozen.max(1.0) {
                        return Err(CoreError::InvalidPhase(format!(
                            "x moved from {x_frozen} to {} inside a zero-transmission interval",
                            s.x
                        )));
                    }
                    stop = Some((x_frozen, s.y));
                }
            }
            continue;
        }
        if let Some((x_frozen, y_last)) = stop.take() {
            jumps.push(PhaseJump {
                x: x_frozen,
                y_upper: *values.last().expect("anchored stop"),
                y_lower: y_last,
            });
        }
        match grid.last() {
            None => {
                grid.push(s.x);
                values.push(s.y);
            }
            Some(&x_top) => {
                if s.x > x_top + 1e-12 * x_top.max(1.0) {
                    return Err(CoreError::InvalidPhase(format!(
                        "x increased from {x_top} to {} outside a zero-transmission interval",
                        s.x
                    )));
                }
                // Drop sub-resolution stalls.
                if x_top - s.x > 1e-15 * x_top.max(1.0) {
                    grid.push(s.x);
                    values.push(s.y);
                }
            }
        }
    }
    if let Some((x_frozen, y_last)) = stop {
        jumps.push(PhaseJump {
            x: x_frozen,
            y_upper: *values.last().expect("anchored stop"),
            y_lower: y_last,
        });
    }
    PhaseFunction::from_parts(grid, values, jumps)
}

/// The clipped integrand `L(xi, phi, phi')`.
fn l_integrand(params: &ModelParams, xi: f64, phi: f64, slope: f64) -> f64 {
    let v = (1.0 + slope) / phi - params.alpha / (params.beta * xi * phi);
    params.beta / params.alpha * v.max(0.0)
}

/// Evaluate the phase cost functional `J(phi)` on a sampled phase function.
pub fn phase_cost(params: &ModelParams, phi: &PhaseFunction) -> Result<f64> {
    phi.validate()?;
    let lower_at: HashMap<u64, f64> = phi
        .jumps
        .iter()
        .map(|j| (j.x.to_bits(), j.y_lower))
        .collect();
    let mut total = 0.0;
    for i in 0..phi.grid.len() - 1 {
        let xh = phi.grid[i];
        let xl = phi.grid[i + 1];
        // Below a jump the function continues from its left limit.
        let vh = lower_at.get(&xh.to_bits()).copied().unwrap_or(phi.values[i]);
        let vl = phi.values[i + 1];
        total += interval_cost(params, xl, xh, vl, vh);
    }
    for j in &phi.jumps {
        total += params.beta / params.alpha * (j.y_upper / j.y_lower).ln();
    }
    Ok(total)
}

/// Midpoint-rule contribution of one grid interval, slope = interval secant.
fn interval_cost(params: &ModelParams, xl: f64, xh: f64, vl: f64, vh: f64) -> f64 {
    let s = (vh - vl) / (xh - xl);
    let mid = 0.5 * (xl + xh);
    let v_mid = 0.5 * (vl + vh);
    (xh - xl) * l_integrand(params, mid, v_mid, s)
}

/// The susceptible share where the optimal phase density switches on: the
/// root of `x - (alpha/beta) ln x = 1 - gamma - (alpha/beta) ln(1 - eps)` in
/// `[alpha/beta, 1 - eps]`. Coincides with the share at which the
/// unregulated trajectory first touches `gamma`.
pub fn solve_x_star(params: &ModelParams) -> Result<f64> {
    if laissez_faire_is_optimal(params)? {
        return Err(CoreError::Precondition(
            "x* requires the constrained regime".into(),
        ));
    }
    let ab = params.alpha / params.beta;
    let rhs = 1.0 - params.gamma - ab * params.x0().ln();
    let g = |x: f64| x - ab * x.ln() - rhs;
    let root = bisect(ab, params.x0(), g)?;
    let residual = g(root).abs();
    if residual > 1e-12 {
        return Err(CoreError::CrossCheckFailed {
            what: "x* residual".into(),
            delta: residual,
            tol: 1e-12,
        });
    }
    Ok(root)
}

/// The optimal phase profile: density `f*`, its integral `F`, the comparison
/// density `nu_F`, and the closed-form `phi*`.
#[derive(Debug, Clone, Copy)]
pub struct OptimalPhase {
    params: ModelParams,
    x_star: f64,
}

impl OptimalPhase {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(Self {
            params: *params,
            x_star: solve_x_star(params)?,
        })
    }

    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    /// `gamma exp(F(x))` in closed form: `gamma` on `[alpha/beta, x*]`, the
    /// unregulated orbit through `(x*, gamma)` above.
    pub fn phi(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        if x <= self.x_star {
            return Ok(self.params.gamma);
        }
        let v = self.params.gamma - self.excess(x);
        if v <= 0.0 {
            return Err(CoreError::Precondition(format!(
                "phi* non-positive at x = {x}"
            )));
        }
        Ok(v)
    }

    /// The minimizing density: `0` for `x <= x*`, otherwise
    /// `-(gamma - (x - x* - (alpha/beta) ln(x/x*)))^{-1} (1 - alpha/(beta x))`.
    pub fn density(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        if x <= self.x_star {
            return Ok(0.0);
        }
        let den = self.params.gamma - self.excess(x);
        if den <= 0.0 {
            return Err(CoreError::Precondition(format!(
                "density denominator non-positive at x = {x}; point outside the admissible range"
            )));
        }
        Ok(-(1.0 - self.params.alpha / (self.params.beta * x)) / den)
    }

    /// `F(x) = int_{alpha/beta}^x f*`, by adaptive quadrature of the density
    /// (the integrand vanishes below `x*`).
    pub fn density_integral(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        if x <= self.x_star {
            return Ok(0.0);
        }
        let f = |u: f64| self.density(u).unwrap_or(f64::NAN);
        let v = adaptive_simpson(&f, self.x_star, x, 1e-12, 40);
        if v.is_nan() {
            return Err(CoreError::Precondition(
                "density quadrature left the admissible range".into(),
            ));
        }
        Ok(v)
    }

    /// `nu_F(x) = (1/gamma)(1 - alpha/(beta x)) exp(-F(x))` for a given value
    /// of `F(x)`.
    pub fn nu_f(&self, x: f64, big_f: f64) -> f64 {
        (1.0 - self.params.alpha / (self.params.beta * x)) * (-big_f).exp() / self.params.gamma
    }

    /// `J(phi*)` by composite trapezoid with the analytic one-sided slopes,
    /// split at `x*` so the kink sits on a piece boundary. Roughly `n` nodes.
    pub fn cost_quadrature(&self, n: usize) -> f64 {
        let p = &self.params;
        let lo = p.herd_threshold();
        let hi = p.x0();
        let n = n.max(16);
        let n_left = ((n as f64 * (self.x_star - lo) / (hi - lo)).round() as usize).max(8);
        let n_right = (n - n_left.min(n)).max(8);
        // Left piece: phi = gamma, slope 0; the integrand is positive there.
        let f_left = |x: f64| l_integrand(p, x, p.gamma, 0.0);
        let mut total = trapezoid(&f_left, lo, self.x_star, n_left);
        // Right piece: the unregulated orbit, slope alpha/(beta x) - 1; the
        // integrand evaluates to zero up to rounding.
        let f_right = |x: f64| {
            let phi = p.gamma - self.excess(x);
            l_integrand(p, x, phi, p.alpha / (p.beta * x) - 1.0)
        };
        total += trapezoid(&f_right, self.x_star, hi, n_right);
        total
    }

    /// Sample `phi*` on a grid of roughly `n` points that contains `x*`
    /// exactly (jump-free).
    pub fn phase_function(&self, n: usize) -> Result<PhaseFunction> {
        let p = &self.params;
        let lo = p.herd_threshold();
        let hi = p.x0();
        let n = n.max(8);
        let mut grid_up: Vec<f64> = Vec::with_capacity(n + 2);
        let left = self.x_star - lo;
        let right = hi - self.x_star;
        let n_left = (((n as f64) * left / (left + right)).round() as usize).max(2);
        let n_right = n.saturating_sub(n_left).max(2);
        for i in 0..n_left {
            grid_up.push(lo + left * i as f64 / n_left as f64);
        }
        grid_up.push(self.x_star);
        for i in 1..=n_right {
            grid_up.push(self.x_star + right * i as f64 / n_right as f64);
        }
        let mut grid: Vec<f64> = grid_up.into_iter().rev().collect();
        grid.dedup();
        let mut values = Vec::with_capacity(grid.len());
        for &x in &grid {
            values.push(self.phi(x)?);
        }
        PhaseFunction::from_parts(grid, values, Vec::new())
    }

    fn check_range(&self, x: f64) -> Result<()> {
        let lo = self.params.herd_threshold();
        let hi = self.params.x0();
        if x < lo - 1e-12 || x > hi + 1e-12 {
            return Err(CoreError::Precondition(format!(
                "x = {x} outside [alpha/beta, 1 - eps] = [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// `x - x* - (alpha/beta) ln(x/x*)`, the drop of `phi*` below `gamma`.
    fn excess(&self, x: f64) -> f64 {
        x - self.x_star - self.params.alpha / self.params.beta * (x / self.x_star).ln()
    }
}

/// The optimal phase density at one point (convenience wrapper; solves `x*`
/// on every call).
pub fn optimal_phase_density(params: &ModelParams, x: f64) -> Result<f64> {
    OptimalPhase::new(params)?.density(x)
}

/// Reconstruct the time course (and so the policy) from a jump-free phase
/// function: `x' = -alpha phi(x)/(1 + phi'(x))`, `y = phi(x)`,
/// `b = alpha/(x (1 + phi'(x)))`.
///
/// Samples are emitted at interval midpoints of the grid, where the secant
/// slope matches the local derivative to second order. The cumulative-cost
/// column integrates the phase integrand, which equals the time-domain cost
/// of the reconstructed policy.
pub fn reconstruct_policy(params: &ModelParams, phi: &PhaseFunction) -> Result<Trajectory> {
    phi.validate()?;
    if !phi.jumps.is_empty() {
        return Err(CoreError::InvalidPhase(
            "reconstruction requires a jump-free phase function".into(),
        ));
    }
    let mut samples: Vec<TrajectorySample> = Vec::with_capacity(phi.grid.len() + 2);
    let mut t = 0.0;
    let mut cost = 0.0;
    let mut max_y: f64 = 0.0;

    {
        let x0 = phi.grid[0];
        let v0 = phi.values[0];
        let s0 = (phi.values[0] - phi.values[1]) / (phi.grid[0] - phi.grid[1]);
        samples.push(TrajectorySample {
            t: 0.0,
            x: x0,
            y: v0,
            b: level_from_slope(params, x0, s0)?,
            cumulative_cost: 0.0,
        });
        max_y = max_y.max(v0);
    }

    for i in 0..phi.grid.len() - 1 {
        let xh = phi.grid[i];
        let xl = phi.grid[i + 1];
        let vh = phi.values[i];
        let vl = phi.values[i + 1];
        let s = (vh - vl) / (xh - xl);
        let one_plus = 1.0 + s;
        if one_plus <= 0.0 {
            return Err(CoreError::InvalidPhase(format!(
                "1 + phi' <= 0 on the interval [{xl}, {xh}]"
            )));
        }
        let x_mid = 0.5 * (xl + xh);
        let v_mid = 0.5 * (vl + vh);
        // Travel times from xh down: dt = (1+s)/alpha * int dxi/phihat.
        let t_mid = t + one_plus / params.alpha * inv_phi_integral(xl, vl, s, x_mid, xh);
        let t_bot = t + one_plus / params.alpha * inv_phi_integral(xl, vl, s, xl, xh);
        // Midpoint-rule cost on the two halves of the interval.
        let cost_mid = cost
            + (xh - x_mid) * l_integrand(params, 0.75 * xh + 0.25 * xl, 0.5 * (vh + v_mid), s);
        let cost_bot = cost_mid
            + (x_mid - xl) * l_integrand(params, 0.25 * xh + 0.75 * xl, 0.5 * (v_mid + vl), s);
        samples.push(TrajectorySample {
            t: t_mid,
            x: x_mid,
            y: v_mid,
            b: level_from_slope(params, x_mid, s)?,
            cumulative_cost: cost_mid,
        });
        max_y = max_y.max(vh).max(vl);
        t = t_bot;
        cost = cost_bot;
    }

    // Closing row at the bottom of the grid, using the last interval's slope.
    let last = phi.grid.len() - 1;
    let s_last = (phi.values[last - 1] - phi.values[last]) / (phi.grid[last - 1] - phi.grid[last]);
    samples.push(TrajectorySample {
        t,
        x: phi.grid[last],
        y: phi.values[last],
        b: level_from_slope(params, phi.grid[last], s_last)?,
        cumulative_cost: cost,
    });

    Ok(Trajectory {
        samples,
        events: Vec::new(),
        terminated_by: Termination::HorizonCap,
        max_y,
    })
}

fn level_from_slope(params: &ModelParams, x: f64, slope: f64) -> Result<f64> {
    let one_plus = 1.0 + slope;
    if one_plus <= 0.0 {
        return Err(CoreError::InvalidPhase(format!(
            "1 + phi' <= 0 at x = {x}"
        )));
    }
    Ok(params.alpha / (x * one_plus))
}

/// `int_a^b dxi / phihat(xi)` for the linear interpolant
/// `phihat(xi) = vl + s (xi - xl)`.
fn inv_phi_integral(xl: f64, vl: f64, s: f64, a: f64, b: f64) -> f64 {
    if s == 0.0 {
        (b - a) / vl
    } else {
        let phi_a = vl + s * (a - xl);
        (s * (b - a) / phi_a).ln_1p() / s
    }
}

fn trapezoid(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n {
        acc += f(a + h * i as f64);
    }
    acc * h
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
