//! Structural dynamics: the high-fidelity nonlinear time-history solver and
//! the cheap elastic modal model used for the stratification variable.
//!
//! The structure is a multi-story shear model. Each story carries a lumped
//! mass and a hysteretic spring acting on the interstory drift, with smooth
//! Bouc-Wen hysteresis on top of a linear post-yield branch. Damping is
//! Rayleigh, calibrated on the initial-stiffness modes.

mod boucwen;
mod modal;
mod solver;

pub use boucwen::BoucWenParams;
pub use modal::{modal_accel_series, ModalCache, SvEvaluator};
pub use solver::{NonlinearSolver, SolverSettings, SolverStage, StepLog};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rayleigh damping coefficients: `C = alpha_m * M + beta_k * K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighDamping {
    pub alpha_m: f64,
    pub beta_k: f64,
}

/// Multi-story hysteretic shear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralModel {
    pub n_dof: usize,
    /// Story masses, kg.
    pub masses: Vec<f64>,
    /// Story stiffnesses, N/m (spring between story i and i-1).
    pub elastic_stiffness: Vec<f64>,
    /// Per-story hysteresis parameters.
    pub bouc_wen: Vec<BoucWenParams>,
    pub rayleigh: RayleighDamping,
    /// Height of each story above the base, m (lever arms for the base moment).
    pub story_heights: Vec<f64>,
}

impl StructuralModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_dof;
        if n == 0 {
            return Err(Error::Config("n_dof must be >= 1".into()));
        }
        if self.masses.len() != n
            || self.elastic_stiffness.len() != n
            || self.bouc_wen.len() != n
            || self.story_heights.len() != n
        {
            return Err(Error::Config(
                "masses, elastic_stiffness, bouc_wen and story_heights must all have n_dof entries"
                    .into(),
            ));
        }
        if self.masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::Config("masses must be positive".into()));
        }
        if self.elastic_stiffness.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::Config("stiffnesses must be positive".into()));
        }
        for (i, bw) in self.bouc_wen.iter().enumerate() {
            bw.validate()
                .map_err(|e| Error::Config(format!("bouc_wen[{i}]: {e}")))?;
        }
        Ok(())
    }

    /// Assembled elastic stiffness matrix of the shear model.
    pub fn stiffness_matrix(&self) -> DMatrix<f64> {
        let n = self.n_dof;
        let k = &self.elastic_stiffness;
        let mut mat = DMatrix::zeros(n, n);
        for i in 0..n {
            mat[(i, i)] += k[i];
            if i + 1 < n {
                mat[(i, i)] += k[i + 1];
                mat[(i, i + 1)] = -k[i + 1];
                mat[(i + 1, i)] = -k[i + 1];
            }
        }
        mat
    }

    pub fn mass_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.masses.clone()))
    }

    pub fn damping_matrix(&self) -> DMatrix<f64> {
        self.mass_matrix() * self.rayleigh.alpha_m + self.stiffness_matrix() * self.rayleigh.beta_k
    }
}

/// Displacement time histories produced by a solver run.
#[derive(Debug, Clone)]
pub struct ResponseRecord {
    /// `n_dof x t_rec` displacements, meters, sampled at `i * dt_record`.
    pub displacements: DMatrix<f64>,
    pub dt_record: f64,
    /// One entry per base time step of the adaptive solve.
    pub solver_log: Vec<StepLog>,
}

impl ResponseRecord {
    pub fn n_channels(&self) -> usize {
        self.displacements.nrows()
    }

    pub fn t_rec(&self) -> usize {
        self.displacements.ncols()
    }
}

/// Peak absolute displacement per monitored channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoIVector {
    pub peaks: Vec<f64>,
}

/// Classical two-frequency Rayleigh damping fit.
///
/// `alpha_m = 2 zeta w1 w2 / (w1 + w2)`, `beta_k = 2 zeta / (w1 + w2)`,
/// with `w = 2 pi f`, giving the damping ratio `zeta` exactly at `f1` and `f2`.
pub fn rayleigh_calibrate(f1_hz: f64, f2_hz: f64, zeta: f64) -> Result<RayleighDamping> {
    if !(f1_hz > 0.0) || !(f2_hz > f1_hz) {
        return Err(Error::Config(format!(
            "rayleigh calibration requires 0 < f1 < f2 (got f1 = {f1_hz}, f2 = {f2_hz})"
        )));
    }
    if zeta < 0.0 {
        return Err(Error::Config("damping ratio must be >= 0".into()));
    }
    let w1 = 2.0 * std::f64::consts::PI * f1_hz;
    let w2 = 2.0 * std::f64::consts::PI * f2_hz;
    Ok(RayleighDamping {
        alpha_m: 2.0 * zeta * w1 * w2 / (w1 + w2),
        beta_k: 2.0 * zeta / (w1 + w2),
    })
}

/// Extract `max_t |y_c(t)|` for each requested channel.
pub fn quantity_of_interest(response: &ResponseRecord, channels: &[usize]) -> Result<QoIVector> {
    if response.t_rec() == 0 {
        return Err(Error::Estimator("empty response record".into()));
    }
    let mut peaks = Vec::with_capacity(channels.len());
    for &c in channels {
        if c >= response.n_channels() {
            return Err(Error::DimensionMismatch(format!(
                "channel {c} out of range (record has {})",
                response.n_channels()
            )));
        }
        let peak = (0..response.t_rec())
            .map(|i| response.displacements[(c, i)].abs())
            .fold(0.0f64, f64::max);
        peaks.push(peak);
    }
    Ok(QoIVector { peaks })
}
