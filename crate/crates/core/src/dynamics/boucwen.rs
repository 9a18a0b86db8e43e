//! Smooth Bouc-Wen hysteresis on interstory drift.
//!
//! The dimensionless hysteretic variable `z` evolves as
//!
//! ```text
//! dz/dt = ( A xdot - beta |xdot| |z|^(n-1) z - gamma xdot |z|^n ) / u_y
//! ```
//!
//! and the story shear is `V = alpha k x + (1 - alpha) k u_y z`. With the
//! usual choice `A = 1`, `beta + gamma = 1` the monotonic large-ductility
//! asymptote is `V -> alpha k x + (1 - alpha) k u_y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoucWenParams {
    /// Yield displacement `u_y`, m.
    pub yield_disp: f64,
    /// Post-yield stiffness ratio `alpha` in [0, 1].
    pub alpha: f64,
    /// Shape parameter `A` (amplitude of the elastic branch of dz/dx).
    pub a_bw: f64,
    pub beta_bw: f64,
    pub gamma_bw: f64,
    /// Sharpness exponent `n >= 1`.
    pub n_bw: f64,
}

impl BoucWenParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.yield_disp > 0.0) {
            return Err(Error::Config("yield_disp must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config("alpha must lie in [0, 1]".into()));
        }
        if self.n_bw < 1.0 {
            return Err(Error::Config("n_bw must be >= 1".into()));
        }
        if self.beta_bw + self.gamma_bw <= 0.0 {
            return Err(Error::Config("beta_bw + gamma_bw must be positive".into()));
        }
        Ok(())
    }

    /// Right-hand side of the hysteretic ODE.
    #[inline]
    pub fn z_rate(&self, z: f64, xdot: f64) -> f64 {
        // n = 2 is the default; avoid powf on the hot path.
        let (zn1z, zn) = if self.n_bw == 2.0 {
            (z.abs() * z, z * z)
        } else {
            (z.abs().powf(self.n_bw - 1.0) * z, z.abs().powf(self.n_bw))
        };
        (self.a_bw * xdot - self.beta_bw * xdot.abs() * zn1z - self.gamma_bw * xdot * zn)
            / self.yield_disp
    }

    /// Advance `z` over a step of length `h` with the drift rate varying
    /// linearly from `xdot0` to `xdot1`, using one explicit 4-stage
    /// Runge-Kutta step.
    #[inline]
    pub fn advance_z(&self, z: f64, xdot0: f64, xdot1: f64, h: f64) -> f64 {
        let xdot_mid = 0.5 * (xdot0 + xdot1);
        let k1 = self.z_rate(z, xdot0);
        let k2 = self.z_rate(z + 0.5 * h * k1, xdot_mid);
        let k3 = self.z_rate(z + 0.5 * h * k2, xdot_mid);
        let k4 = self.z_rate(z + h * k3, xdot1);
        z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// Instantaneous tangent `dz/dx` used for the Newton stiffness.
    #[inline]
    pub fn z_tangent(&self, z: f64, xdot: f64) -> f64 {
        let zn = if self.n_bw == 2.0 {
            z * z
        } else {
            z.abs().powf(self.n_bw)
        };
        let sgn = if xdot * z >= 0.0 { 1.0 } else { -1.0 };
        (self.a_bw - zn * (self.gamma_bw + self.beta_bw * sgn)) / self.yield_disp
    }
}
