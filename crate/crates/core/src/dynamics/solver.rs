//! Newmark-beta time integration of the hysteretic shear model with an
//! adaptive nonconvergence cascade.
//!
//! Average-acceleration Newmark (`gamma = 1/2`, `beta = 1/4`) with the
//! Bouc-Wen state advanced by one explicit 4-stage Runge-Kutta step inside
//! each equilibrium iteration. When a base step fails to converge the solver
//! retries it through an ordered cascade:
//!
//! 1. Newton with line search at the base step,
//! 2. Newton with line search at base/10,
//! 3. plain Newton at base/20,
//! 4. quasi-Newton (initial-stiffness iteration matrix) at base/20.
//!
//! Only when every stage fails does the run abort, carrying the failing time.
//! Loads are linearly interpolated from the excitation grid to the solver
//! grid. The Jacobian of the shear model is tridiagonal, so equilibrium
//! corrections use the Thomas algorithm and the hot loop never allocates.

use serde::{Deserialize, Serialize};

use super::{ResponseRecord, StructuralModel};
use crate::error::{Error, Result};
use crate::excitation::ExcitationRealization;

const NEWMARK_GAMMA: f64 = 0.5;
const NEWMARK_BETA: f64 = 0.25;

/// Cascade stage identifiers, in retry order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStage {
    /// Newton with line search at the base step.
    NewtonLineSearch = 1,
    /// Newton with line search at base/10.
    NewtonLineSearchFine = 2,
    /// Plain Newton at base/20.
    PlainNewton = 3,
    /// Quasi-Newton (elastic iteration matrix) at base/20.
    QuasiNewton = 4,
}

impl SolverStage {
    fn all() -> [(SolverStage, usize, bool, bool); 4] {
        // (stage, substep divisor, line search, quasi-newton)
        [
            (SolverStage::NewtonLineSearch, 1, true, false),
            (SolverStage::NewtonLineSearchFine, 10, true, false),
            (SolverStage::PlainNewton, 20, false, false),
            (SolverStage::QuasiNewton, 20, false, true),
        ]
    }
}

/// Per-base-step solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub stage: SolverStage,
    pub sub_step: f64,
    pub iterations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Base solver step, s.
    pub dt_solve: f64,
    /// Recording interval, s; must be an integer multiple of `dt_solve`.
    pub dt_record: f64,
    /// Relative equilibrium tolerance (against the step force scale).
    pub tol_rel: f64,
    /// Absolute equilibrium tolerance, N.
    pub tol_abs: f64,
    /// Newton iteration cap per sub-step (quasi-Newton gets 4x).
    pub max_newton_iter: usize,
    /// Declared step-refinement tolerance on quantities of interest; a run
    /// repeated with a 10x smaller base step must agree within this.
    pub qoi_convergence_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dt_solve: 0.01,
            dt_record: 0.05,
            tol_rel: 1.0e-8,
            tol_abs: 1.0e-9,
            max_newton_iter: 25,
            qoi_convergence_tol: 0.02,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_solve > 0.0) || !(self.dt_record > 0.0) {
            return Err(Error::Config("solver steps must be positive".into()));
        }
        let ratio = self.dt_record / self.dt_solve;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 - 1e-9 {
            return Err(Error::Config(
                "dt_record must be an integer multiple of dt_solve".into(),
            ));
        }
        if self.max_newton_iter == 0 {
            return Err(Error::Config("max_newton_iter must be >= 1".into()));
        }
        Ok(())
    }

    fn record_every(&self) -> usize {
        (self.dt_record / self.dt_solve).round() as usize
    }
}

/// Reusable high-fidelity solver for one structural model.
pub struct NonlinearSolver<'a> {
    model: &'a StructuralModel,
    settings: SolverSettings,
}

impl<'a> NonlinearSolver<'a> {
    pub fn new(model: &'a StructuralModel, settings: SolverSettings) -> Result<Self> {
        model.validate()?;
        settings.validate()?;
        Ok(Self { model, settings })
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    /// Integrate from rest (zero displacement, velocity and hysteretic state).
    pub fn integrate(&self, excitation: &ExcitationRealization) -> Result<ResponseRecord> {
        let n = self.model.n_dof;
        self.integrate_with_ic(&vec![0.0; n], &vec![0.0; n], &vec![0.0; n], excitation)
    }

    /// Integrate from a prescribed initial state. `z0` is the initial
    /// hysteretic variable per story (use `drift / u_y` to start from an
    /// elastically consistent displaced state).
    pub fn integrate_with_ic(
        &self,
        u0: &[f64],
        v0: &[f64],
        z0: &[f64],
        excitation: &ExcitationRealization,
    ) -> Result<ResponseRecord> {
        let n = self.model.n_dof;
        if excitation.n_channels() != n {
            return Err(Error::DimensionMismatch(format!(
                "excitation has {} channels, model has {} stories",
                excitation.n_channels(),
                n
            )));
        }
        if u0.len() != n || v0.len() != n || z0.len() != n {
            return Err(Error::DimensionMismatch("initial state length".into()));
        }

        let duration = excitation.t_n() as f64 * excitation.dt;
        let rec_every = self.settings.record_every();
        let t_rec = (duration / self.settings.dt_record).round() as usize;
        let n_base = (t_rec.saturating_sub(1)) * rec_every;

        let mut ws = Workspace::new(n);
        let mut state = State {
            u: u0.to_vec(),
            v: v0.to_vec(),
            z: z0.to_vec(),
            acc: vec![0.0; n],
            xdot: vec![0.0; n],
        };
        // Consistent initial acceleration: M a0 = F(0) - C v0 - f_s(u0, z0).
        self.drifts(&state.u, &mut ws.x1);
        self.drifts(&state.v, &mut ws.xd1);
        state.xdot.copy_from_slice(&ws.xd1);
        self.load_at(excitation, 0.0, &mut ws.f1);
        self.story_forces_into(&ws.x1, &state.z, &mut ws.shear);
        for i in 0..n {
            let cv = self.damping_force(i, &state.v);
            let nodal = ws.shear[i] - if i + 1 < n { ws.shear[i + 1] } else { 0.0 };
            state.acc[i] = (ws.f1[i] - cv - nodal) / self.model.masses[i];
        }

        let mut displacements = nalgebra::DMatrix::zeros(n, t_rec.max(1));
        for i in 0..n {
            displacements[(i, 0)] = state.u[i];
        }
        let mut solver_log = Vec::with_capacity(n_base);

        let h_base = self.settings.dt_solve;
        for step in 0..n_base {
            let t0 = step as f64 * h_base;
            let mut accepted = None;
            for (stage, divisor, line_search, quasi) in SolverStage::all() {
                let mut trial = state.clone();
                match self.advance_base_step(
                    &mut trial,
                    excitation,
                    t0,
                    h_base,
                    divisor,
                    line_search,
                    quasi,
                    &mut ws,
                ) {
                    Ok(iters) => {
                        accepted = Some((trial, StepLog {
                            stage,
                            sub_step: h_base / divisor as f64,
                            iterations: iters,
                        }));
                        break;
                    }
                    Err(_) => continue,
                }
            }
            match accepted {
                Some((trial, log)) => {
                    state = trial;
                    solver_log.push(log);
                }
                None => {
                    return Err(Error::NonConvergence {
                        time: t0 + h_base,
                        sample: None,
                        detail: "all cascade stages failed".into(),
                    });
                }
            }
            if (step + 1) % rec_every == 0 {
                let col = (step + 1) / rec_every;
                if col < t_rec {
                    for i in 0..n {
                        displacements[(i, col)] = state.u[i];
                    }
                }
            }
        }

        Ok(ResponseRecord {
            displacements,
            dt_record: self.settings.dt_record,
            solver_log,
        })
    }

    /// Advance one base step as `divisor` equal sub-steps; returns the total
    /// iteration count or an error if any sub-step fails to converge.
    #[allow(clippy::too_many_arguments)]
    fn advance_base_step(
        &self,
        state: &mut State,
        excitation: &ExcitationRealization,
        t0: f64,
        h_base: f64,
        divisor: usize,
        line_search: bool,
        quasi: bool,
        ws: &mut Workspace,
    ) -> Result<u32> {
        let h = h_base / divisor as f64;
        let mut total_iters = 0;
        for sub in 0..divisor {
            let t1 = t0 + (sub + 1) as f64 * h;
            total_iters += self.newton_substep(state, excitation, t1, h, line_search, quasi, ws)?;
        }
        Ok(total_iters)
    }

    /// One Newmark sub-step solved by (quasi-)Newton iteration.
    #[allow(clippy::too_many_arguments)]
    fn newton_substep(
        &self,
        state: &mut State,
        excitation: &ExcitationRealization,
        t1: f64,
        h: f64,
        line_search: bool,
        quasi: bool,
        ws: &mut Workspace,
    ) -> Result<u32> {
        let n = self.model.n_dof;
        let a0c = 1.0 / (NEWMARK_BETA * h * h);
        let a1c = NEWMARK_GAMMA / (NEWMARK_BETA * h);
        let a2c = 1.0 / (NEWMARK_BETA * h);
        let a3c = 1.0 / (2.0 * NEWMARK_BETA) - 1.0;

        self.load_at(excitation, t1, &mut ws.f1);

        // Explicit predictor.
        for i in 0..n {
            ws.u1[i] = state.u[i] + h * state.v[i] + 0.5 * h * h * state.acc[i];
        }

        let max_iter = if quasi {
            self.settings.max_newton_iter * 4
        } else {
            self.settings.max_newton_iter
        };

        let mut res_norm = self.residual(state, h, a0c, a2c, a3c, ws);
        let mut tol = self.settings.tol_abs + self.settings.tol_rel * ws.force_scale.max(1e-8);
        let mut stall_count = 0;
        let mut iters = 0u32;
        while res_norm > tol {
            if iters as usize >= max_iter {
                return Err(Error::NonConvergence {
                    time: t1,
                    sample: None,
                    detail: format!("{res_norm:.3e} residual after {iters} iterations"),
                });
            }
            self.assemble_jacobian(a0c, a1c, quasi, ws);
            thomas_solve(&ws.jl, &ws.jd, &ws.ju, &ws.r, &mut ws.delta, &mut ws.scratch);

            let mut lambda = 1.0;
            let mut improved = false;
            let halvings = if line_search { 6 } else { 0 };
            ws.u_backup.copy_from_slice(&ws.u1);
            for _ in 0..=halvings {
                for i in 0..n {
                    ws.u1[i] = ws.u_backup[i] + lambda * ws.delta[i];
                }
                let new_norm = self.residual(state, h, a0c, a2c, a3c, ws);
                if new_norm < res_norm || !line_search {
                    res_norm = new_norm;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                // Keep the smallest-step trial and count a stall.
                res_norm = self.residual(state, h, a0c, a2c, a3c, ws);
                stall_count += 1;
                if stall_count >= 3 {
                    return Err(Error::NonConvergence {
                        time: t1,
                        sample: None,
                        detail: "line search stalled".into(),
                    });
                }
            } else {
                stall_count = 0;
            }
            if !res_norm.is_finite() {
                return Err(Error::NonConvergence {
                    time: t1,
                    sample: None,
                    detail: "non-finite residual".into(),
                });
            }
            tol = self.settings.tol_abs + self.settings.tol_rel * ws.force_scale.max(1e-8);
            iters += 1;
        }

        // Commit the converged state.
        for i in 0..n {
            let acc1 = a0c * (ws.u1[i] - state.u[i]) - a2c * state.v[i] - a3c * state.acc[i];
            let v1 = state.v[i] + h * ((1.0 - NEWMARK_GAMMA) * state.acc[i] + NEWMARK_GAMMA * acc1);
            state.u[i] = ws.u1[i];
            state.v[i] = v1;
            state.acc[i] = acc1;
        }
        state.z.copy_from_slice(&ws.z1);
        self.drifts(&state.v, &mut state.xdot);
        Ok(iters)
    }

    /// Evaluate the equilibrium residual at the current trial `ws.u1`.
    ///
    /// Side effects: fills `ws.r`, `ws.z1`, `ws.xd1`, `ws.kt`, and updates
    /// `ws.force_scale` with the largest force magnitude seen at this step.
    /// Returns the residual infinity norm.
    #[allow(clippy::too_many_arguments)]
    fn residual(
        &self,
        state: &State,
        h: f64,
        a0c: f64,
        a2c: f64,
        a3c: f64,
        ws: &mut Workspace,
    ) -> f64 {
        let n = self.model.n_dof;
        let m = &self.model.masses;

        // Kinematics of the trial state.
        for i in 0..n {
            ws.acc1[i] = a0c * (ws.u1[i] - state.u[i]) - a2c * state.v[i] - a3c * state.acc[i];
            ws.v1[i] = state.v[i]
                + h * ((1.0 - NEWMARK_GAMMA) * state.acc[i] + NEWMARK_GAMMA * ws.acc1[i]);
        }
        self.drifts(&ws.u1, &mut ws.x1);
        self.drifts(&ws.v1, &mut ws.xd1);

        // Hysteretic state and story shears.
        for i in 0..n {
            let bw = &self.model.bouc_wen[i];
            ws.z1[i] = bw.advance_z(state.z[i], state.xdot[i], ws.xd1[i], h);
            ws.kt[i] = bw.alpha * self.model.elastic_stiffness[i]
                + (1.0 - bw.alpha)
                    * self.model.elastic_stiffness[i]
                    * bw.yield_disp
                    * bw.z_tangent(ws.z1[i], ws.xd1[i]);
        }
        self.story_forces_into(&ws.x1, &ws.z1, &mut ws.shear);

        let mut norm = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            let inertia = m[i] * ws.acc1[i];
            let damping = self.damping_force(i, &ws.v1);
            let nodal = ws.shear[i] - if i + 1 < n { ws.shear[i + 1] } else { 0.0 };
            let r = ws.f1[i] - inertia - damping - nodal;
            ws.r[i] = r;
            norm = norm.max(r.abs());
            scale = scale
                .max(ws.f1[i].abs())
                .max(inertia.abs())
                .max(damping.abs())
                .max(nodal.abs());
        }
        ws.force_scale = scale;
        norm
    }

    /// Tridiagonal Newton matrix `a0 M + a1 C + K_t` (elastic `K` when `quasi`).
    fn assemble_jacobian(&self, a0c: f64, a1c: f64, quasi: bool, ws: &mut Workspace) {
        let n = self.model.n_dof;
        let m = &self.model.masses;
        let k = &self.model.elastic_stiffness;
        let ray = &self.model.rayleigh;
        for i in 0..n {
            let kt_i = if quasi { k[i] } else { ws.kt[i] };
            let spring_i = a1c * ray.beta_k * k[i] + kt_i;
            let mut diag = (a0c + a1c * ray.alpha_m) * m[i] + spring_i;
            if i + 1 < n {
                let kt_u = if quasi { k[i + 1] } else { ws.kt[i + 1] };
                let spring_u = a1c * ray.beta_k * k[i + 1] + kt_u;
                diag += spring_u;
                ws.ju[i] = -spring_u;
                ws.jl[i + 1] = -spring_u;
            }
            ws.jd[i] = diag;
        }
    }

    /// Interstory drifts (or drift rates) of a nodal vector.
    #[inline]
    fn drifts(&self, nodal: &[f64], out: &mut [f64]) {
        out[0] = nodal[0];
        for i in 1..nodal.len() {
            out[i] = nodal[i] - nodal[i - 1];
        }
    }

    /// Story shear forces from drifts and hysteretic state.
    fn story_forces_into(&self, x: &[f64], z: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            let bw = &self.model.bouc_wen[i];
            let k = self.model.elastic_stiffness[i];
            out[i] = bw.alpha * k * x[i] + (1.0 - bw.alpha) * k * bw.yield_disp * z[i];
        }
    }

    /// Row `i` of `C v` with `C = alpha_m M + beta_k K`.
    #[inline]
    fn damping_force(&self, i: usize, v: &[f64]) -> f64 {
        let n = self.model.n_dof;
        let k = &self.model.elastic_stiffness;
        let ray = &self.model.rayleigh;
        let mut kv = k[i] * (v[i] - if i > 0 { v[i - 1] } else { 0.0 });
        if i + 1 < n {
            kv -= k[i + 1] * (v[i + 1] - v[i]);
        }
        ray.alpha_m * self.model.masses[i] * v[i] + ray.beta_k * kv
    }

    /// Interpolated load vector at time `t`.
    fn load_at(&self, excitation: &ExcitationRealization, t: f64, out: &mut [f64]) {
        for (c, slot) in out.iter_mut().enumerate() {
            *slot = excitation.interp(c, t);
        }
    }
}

#[derive(Clone)]
struct State {
    u: Vec<f64>,
    v: Vec<f64>,
    z: Vec<f64>,
    acc: Vec<f64>,
    /// Drift rates at the step start (needed by the hysteresis update).
    xdot: Vec<f64>,
}

struct Workspace {
    f1: Vec<f64>,
    u1: Vec<f64>,
    u_backup: Vec<f64>,
    v1: Vec<f64>,
    acc1: Vec<f64>,
    x1: Vec<f64>,
    xd1: Vec<f64>,
    z1: Vec<f64>,
    kt: Vec<f64>,
    shear: Vec<f64>,
    r: Vec<f64>,
    delta: Vec<f64>,
    jl: Vec<f64>,
    jd: Vec<f64>,
    ju: Vec<f64>,
    scratch: Vec<f64>,
    force_scale: f64,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            f1: vec![0.0; n],
            u1: vec![0.0; n],
            u_backup: vec![0.0; n],
            v1: vec![0.0; n],
            acc1: vec![0.0; n],
            x1: vec![0.0; n],
            xd1: vec![0.0; n],
            z1: vec![0.0; n],
            kt: vec![0.0; n],
            shear: vec![0.0; n],
            r: vec![0.0; n],
            delta: vec![0.0; n],
            jl: vec![0.0; n],
            jd: vec![0.0; n],
            ju: vec![0.0; n],
            scratch: vec![0.0; 2 * n],
            force_scale: 0.0,
        }
    }
}

/// Thomas algorithm for a tridiagonal system; `l[0]` and `u[n-1]` are unused.
fn thomas_solve(l: &[f64], d: &[f64], u: &[f64], rhs: &[f64], out: &mut [f64], scratch: &mut [f64]) {
    let n = d.len();
    let (cp, dp) = scratch.split_at_mut(n);
    cp[0] = u[0] / d[0];
    dp[0] = rhs[0] / d[0];
    for i in 1..n {
        let denom = d[i] - l[i] * cp[i - 1];
        cp[i] = if i + 1 < n { u[i] / denom } else { 0.0 };
        dp[i] = (rhs[i] - l[i] * dp[i - 1]) / denom;
    }
    out[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = dp[i] - cp[i] * out[i + 1];
    }
}
