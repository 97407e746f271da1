//! Model constants and the epidemic state.
//!
//! The population is split into a susceptible share `x` and an infected share
//! `y`; removed individuals make up the rest. Transmission is controlled by a
//! time-varying rate `b(t)` with unregulated level `beta`, removal happens at
//! rate `alpha`, and the infected share must stay below the care capacity
//! `gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Epidemic constants: removal rate, unregulated transmission rate, capacity
/// share and initial infected share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Removal rate of infected individuals (1/time, > 0).
    pub alpha: f64,
    /// Unregulated transmission rate (1/time, > 0).
    pub beta: f64,
    /// Capacity share: the infected share may never exceed this (in (0,1)).
    pub gamma: f64,
    /// Initially infected population share (in (0,1)).
    pub epsilon: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CoreError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        let unit = |name, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(CoreError::InvalidParameter {
                    name,
                    reason: format!("must lie in (0, 1), got {v}"),
                })
            }
        };
        unit("gamma", self.gamma)?;
        unit("epsilon", self.epsilon)?;
        Ok(())
    }

    /// Initial susceptible share, `1 - epsilon`.
    pub fn x0(&self) -> f64 {
        1.0 - self.epsilon
    }

    /// Initial infected share, `epsilon`.
    pub fn y0(&self) -> f64 {
        self.epsilon
    }

    /// Susceptible share below which infections decline under the unregulated
    /// rate: `alpha / beta`.
    pub fn herd_threshold(&self) -> f64 {
        self.alpha / self.beta
    }

    /// Whether the instance is in the interesting regime: the epidemic grows
    /// (`alpha < beta`) and the initial infected share is below capacity.
    pub fn is_interesting(&self) -> bool {
        self.epsilon < self.gamma && self.alpha < self.beta
    }
}

/// A point of the epidemic state space: susceptible and infected shares with
/// `0 < x < 1`, `0 < y < 1` and `x + y <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicState {
    pub x: f64,
    pub y: f64,
}

impl EpidemicState {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let s = Self { x, y };
        s.validate()?;
        Ok(s)
    }

    /// The initial state `(1 - epsilon, epsilon)`.
    pub fn initial(params: &ModelParams) -> Self {
        Self {
            x: params.x0(),
            y: params.y0(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.x > 0.0
            && self.x < 1.0
            && self.y > 0.0
            && self.y < 1.0
            && self.x + self.y <= 1.0
            && self.x.is_finite()
            && self.y.is_finite();
        if ok {
            Ok(())
        } else {
            Err(CoreError::InvalidState {
                x: self.x,
                y: self.y,
                reason: "requires 0 < x < 1, 0 < y < 1, x + y <= 1".into(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(ModelParams::new(0.0, 1.0, 0.2, 0.01).is_err());
        assert!(ModelParams::new(0.3, -1.0, 0.2, 0.01).is_err());
        assert!(ModelParams::new(0.3, 1.0, 1.0, 0.01).is_err());
        assert!(ModelParams::new(0.3, 1.0, 0.2, 0.0).is_err());
        assert!(ModelParams::new(0.3, 1.0, 0.2, 0.01).is_ok());
    }

    #[test]
    fn interesting_regime_flag() {
        let p = ModelParams::new(0.3, 1.0, 0.2, 0.01).unwrap();
        assert!(p.is_interesting());
        let p = ModelParams::new(1.3, 1.0, 0.2, 0.01).unwrap();
        assert!(!p.is_interesting());
        let p = ModelParams::new(0.3, 1.0, 0.2, 0.25).unwrap();
        assert!(!p.is_interesting());
    }

    #[test]
    fn state_simplex_bounds() {
        assert!(EpidemicState::new(0.99, 0.01).is_ok());
        assert!(EpidemicState::new(0.99, 0.02).is_err());
        assert!(EpidemicState::new(0.0, 0.5).is_err());
        assert!(EpidemicState::new(0.5, 0.0).is_err());
    }
}
