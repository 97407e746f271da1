//! Dormand-Prince 5(4) embedded Runge-Kutta pair with dense output.
//!
//! The state is the fixed triple `[x, y, c]` (susceptible, infected,
//! accumulated suppression cost). The right-hand side is smooth within one
//! policy segment; the driver restarts integration at segment breakpoints,
//! so no discontinuity is ever crossed inside a step.

use crate::error::CoreError;

pub const DIM: usize = 3;
pub type State = [f64; DIM];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// Row 7 doubles as the 5th-order solution weights (FSAL).
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights (error estimator).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output coefficients.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Quartic interpolant over one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    cont: [State; 5],
}

impl DenseStep {
    /// Interpolated state at `t` in `[t0, t0 + h]`.
    pub fn eval(&self, t: f64) -> State {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        let mut out = [0.0; DIM];
        for i in 0..DIM {
            out[i] = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + th1
                            * (self.cont[2][i]
                                + theta * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
        out
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.h
    }
}

/// What the observer wants after seeing an accepted step.
pub enum StepOutcome {
    Continue,
    /// Stop integration; the final state is the dense interpolant at `t`.
    Stop { t: f64 },
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` (`t1 > t0`).
///
/// `observe` is called after every accepted step with the dense interpolant;
/// returning [`StepOutcome::Stop`] truncates the run at the given time.
/// Returns the final `(t, state)`.
pub fn integrate<F, O>(
    rhs: F,
    t0: f64,
    t1: f64,
    y0: State,
    rel_tol: f64,
    abs_tol: f64,
    max_step: f64,
    mut observe: O,
) -> Result<(f64, State), CoreError>
where
    F: Fn(f64, &State) -> State,
    O: FnMut(&DenseStep) -> StepOutcome,
{
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok((t0, y0));
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&rhs, t, &y, &k1, rel_tol, abs_tol)
        .min(max_step)
        .min(span);
    let mut rejected_last = false;

    loop {
        if t >= t1 {
            return Ok((t, y));
        }
        h = h.min(max_step).min(t1 - t);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(CoreError::StepSizeUnderflow { t });
        }

        let k2 = rhs(t + C2 * h, &add(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &add(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h, &add(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(
            t + C5 * h,
            &add(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &add(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = add(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = rhs(t + h, &y_new);

        if y_new.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteState { t });
        }

        // Scaled RMS error of the embedded 4th-order difference.
        let mut err_sq = 0.0;
        for i in 0..DIM {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = abs_tol + rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / DIM as f64).sqrt();

        if err <= 1.0 {
            let dense = make_dense(t, h, &y, &y_new, &k1, &k3, &k4, &k5, &k6, &k7);
            match observe(&dense) {
                StepOutcome::Continue => {}
                StepOutcome::Stop { t: t_stop } => {
                    let y_stop = dense.eval(t_stop);
                    return Ok((t_stop, y_stop));
                }
            }
            t += h;
            y = y_new;
            k1 = k7; // FSAL
            let facmax = if rejected_last { 1.0 } else { 5.0 };
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, facmax);
            h *= fac;
            rejected_last = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            rejected_last = true;
        }
    }
}

fn add(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for i in 0..DIM {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn make_dense(
    t: f64,
    h: f64,
    y0: &State,
    y1: &State,
    k1: &State,
    k3: &State,
    k4: &State,
    k5: &State,
    k6: &State,
    k7: &State,
) -> DenseStep {
    let mut cont = [[0.0; DIM]; 5];
    for i in 0..DIM {
        let ydiff = y1[i] - y0[i];
        let bspl = h * k1[i] - ydiff;
        cont[0][i] = y0[i];
        cont[1][i] = ydiff;
        cont[2][i] = bspl;
        cont[3][i] = ydiff - h * k7[i] - bspl;
        cont[4][i] =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    DenseStep { t0: t, h, cont }
}

/// Hairer-style starting step size estimate.
fn initial_step<F: Fn(f64, &State) -> State>(
    rhs: &F,
    t: f64,
    y: &State,
    f0: &State,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    let sc: Vec<f64> = y.iter().map(|v| abs_tol + rel_tol * v.abs()).collect();
    let d0 = rms(y, &sc);
    let d1 = rms(f0, &sc);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = add(y, h0, &[(1.0, f0)]);
    let f1 = rhs(t + h0, &y1);
    let mut diff = [0.0; DIM];
    for i in 0..DIM {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = rms(&diff, &sc) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

fn rms(v: &State, sc: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..DIM {
        s += (v[i] / sc[i]) * (v[i] / sc[i]);
    }
    (s / DIM as f64).sqrt()
}
