//! Time integration of the homogeneous flow dA/dt = H(A) A.
//!
//! The spatial discretization turns the flow into a large ODE system
//! (method of lines), integrated by classical RK4 or explicit Euler. The
//! same trajectory can be integrated in framing form (the state is A(t)) or
//! in gauge form (the state is a(t) with A(t) = A_0 a(t)); the two are
//! algebraically identical and serve as mutual oracles.
//!
//! Leaving the space of positive framings (det A below a floor), norm
//! blow-up, and step exhaustion are recorded run outcomes, never silent
//! failures and never panics: divergence of the flow is data.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::Matrix3;

use crate::curvature::{contract_h, curvature_with_structure, field_norms, Contraction};
use crate::error::{HfError, Result};
use crate::framing::{invert_field, polar_project, Framing, GaugeField};
use crate::s3_geometry::{Grid, MatrixField};
use crate::topology::DegreeCalibrator;

/// Positivity floor: the run stops when det A at any node falls to or below
/// this value (the framing is about to leave the positive cone).
pub const DET_FLOOR: f64 = 1e-6;
/// Blow-up ceiling on the sup norms of A, H, and R.
pub const BLOWUP_CEILING: f64 = 1e8;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum StepControl {
    /// Keep the configured dt (final step clipped to land on t_max).
    #[default]
    Fixed,
    /// Halve dt (down to 1/1024 of the configured value) when a stage
    /// evaluation fails, instead of stopping immediately.
    Halving,
}

/// Integration controls and convergence tolerances.
#[derive(Clone, Debug)]
pub struct FlowParams {
    pub dt: f64,
    pub t_max: f64,
    pub max_steps: usize,
    /// stationarity tolerance on sup ||H||
    pub tol_h: f64,
    /// tolerance on the relative change of A between recorded samples
    pub tol_drift: f64,
    /// how many trailing recorded samples must sit inside both tolerances
    pub window: usize,
    pub contraction: Contraction,
    pub integrator: Integrator,
    pub step_control: StepControl,
    /// record a trace row every this many steps (the initial and final
    /// states are always recorded)
    pub sample_stride: usize,
    /// keep a full framing snapshot every this many recorded rows
    /// (0 disables snapshots)
    pub snapshot_stride: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            dt: 1e-3,
            t_max: 1.0,
            max_steps: 1_000_000,
            tol_h: 1e-5,
            tol_drift: 1e-5,
            window: 20,
            contraction: Contraction::default(),
            integrator: Integrator::default(),
            step_control: StepControl::default(),
            sample_stride: 1,
            snapshot_stride: 0,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(HfError::InvalidInput(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(HfError::InvalidInput(format!("t_max must be positive and finite, got {}", self.t_max)));
        }
        if self.max_steps == 0 {
            return Err(HfError::InvalidInput("max_steps must be at least 1".into()));
        }
        if !(self.tol_h > 0.0) || !(self.tol_drift > 0.0) {
            return Err(HfError::InvalidInput("tolerances must be positive".into()));
        }
        if self.window < 2 {
            return Err(HfError::InvalidInput(format!("window must be at least 2, got {}", self.window)));
        }
        if self.sample_stride == 0 {
            return Err(HfError::InvalidInput("sample_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// How a flow run ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowOutcome {
    /// reached t_max
    Completed,
    /// det A dropped to the floor at some node: the framing left the
    /// positive cone (or became numerically singular there)
    PositivityLost { t: f64, node: usize },
    /// a monitored norm exceeded the ceiling
    Blowup { t: f64 },
    /// max_steps exhausted before t_max
    StepLimit { t: f64 },
}

impl FlowOutcome {
    /// Compact machine-readable label.
    pub fn label(&self) -> &'static str {
        match self {
            FlowOutcome::Completed => "completed",
            FlowOutcome::PositivityLost { .. } => "positivity_lost",
            FlowOutcome::Blowup { .. } => "blowup",
            FlowOutcome::StepLimit { .. } => "step_limit",
        }
    }
}

impl std::fmt::Display for FlowOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FlowOutcome::Completed => write!(f, "completed"),
            FlowOutcome::PositivityLost { t, node } => write!(f, "positivity_lost(t={t:.6}, node={node})"),
            FlowOutcome::Blowup { t } => write!(f, "blowup(t={t:.6})"),
            FlowOutcome::StepLimit { t } => write!(f, "step_limit(t={t:.6})"),
        }
    }
}

/// One recorded sample of a flow run.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub t: f64,
    pub sup_h: f64,
    pub l2_h: f64,
    pub sup_r: f64,
    pub l2_r: f64,
    /// rounded degree of the polar-projected relative gauge a(t)
    pub deg_a: i64,
    /// max node-to-node variation of the structure functions
    pub c_drift: f64,
    /// relative change of A since the previously recorded sample (0 on the
    /// first row); this is what the drift tolerance is checked against
    pub a_rel_change: f64,
}

/// Full record of one flow run.
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
    /// full framing snapshots (time, field), kept when snapshot_stride > 0
    pub snapshots: Vec<(f64, MatrixField)>,
    pub outcome: FlowOutcome,
    /// last successfully reached framing w(t)
    pub final_framing: Framing,
    /// last successfully reached relative gauge a(t) (w(t) = w0 compose a)
    pub final_gauge: GaugeField,
    pub steps_taken: usize,
    pub wall_seconds: f64,
}

impl FlowTrace {
    /// CSV rendering of the recorded rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,sup_H,l2_H,sup_R,l2_R,deg_a,c_drift\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.9},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e}\n",
                r.t, r.sup_h, r.l2_h, r.sup_r, r.l2_r, r.deg_a, r.c_drift
            ));
        }
        s
    }
}

/// Verdict of plateau detection on a trace.
pub struct ConvergenceReport {
    pub converged: bool,
    /// earliest recorded time from which both tolerances hold to the end
    pub t_prime: Option<f64>,
    /// the limit framing (the final state; within the drift tolerance it
    /// equals the state at t_prime)
    pub limit: Option<Framing>,
    /// (sup ||H||, sup ||R||) at the last recorded sample
    pub final_norms: (f64, f64),
    /// degree of a(t) stayed 0 at every recorded sample
    pub orbit_preserved: bool,
    /// when converged: whether sup ||R|| <= 50 * tol_h, i.e. whether
    /// stationarity of H really certified flatness (None if not converged)
    pub contraction_fidelity: Option<bool>,
}

struct Diag {
    sup_h: f64,
    l2_h: f64,
    sup_r: f64,
    l2_r: f64,
    c_var: f64,
}

enum Eval {
    Go { deriv: MatrixField, diag: Diag },
    Stop(FlowOutcome),
}

/// Right-hand side dA/dt = H(A) A of the flow.
pub fn hf_rhs(w: &Framing, contraction: Contraction) -> Result<MatrixField> {
    let (_, _, rf) = curvature_with_structure(w)?;
    let h = contract_h(&rf, contraction);
    Ok(h.h.iter().zip(&w.field).map(|(hm, am)| hm * am).collect())
}

/// Guarded right-hand-side evaluation on a raw framing field: checks the
/// positivity floor first, maps singular-node failures to the positivity
/// outcome, and checks the blow-up ceiling on the computed norms.
fn eval_framing_rhs(grid: &Arc<Grid>, field: &MatrixField, contraction: Contraction, t: f64) -> Result<Eval> {
    for (node, m) in field.iter().enumerate() {
        if !(m.determinant() > DET_FLOOR) {
            return Ok(Eval::Stop(FlowOutcome::PositivityLost { t, node }));
        }
    }
    let w = Framing { grid: grid.clone(), field: field.clone() };
    let (_b, cs, rf) = match curvature_with_structure(&w) {
        Ok(v) => v,
        Err(HfError::SingularField { node, .. }) => {
            return Ok(Eval::Stop(FlowOutcome::PositivityLost { t, node }))
        }
        Err(e) => return Err(e),
    };
    let h = contract_h(&rf, contraction);
    let (sup_h, l2_h) = field_norms(&h);
    let (sup_r, l2_r) = field_norms(&rf);
    let sup_a = field.iter().map(|m| m.norm_squared()).fold(0.0f64, f64::max).sqrt();
    if !(sup_h.is_finite() && sup_r.is_finite())
        || sup_h > BLOWUP_CEILING
        || sup_r > BLOWUP_CEILING
        || sup_a > BLOWUP_CEILING
    {
        return Ok(Eval::Stop(FlowOutcome::Blowup { t }));
    }
    // node-to-node spread of every structure-function component
    let mut c_var = 0.0f64;
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for tns in &cs.c {
                    let v = tns[k][i][j];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                c_var = c_var.max(hi - lo);
            }
        }
    }
    let deriv = h.h.iter().zip(field).map(|(hm, am)| hm * am).collect();
    Ok(Eval::Go { deriv, diag: Diag { sup_h, l2_h, sup_r, l2_r, c_var } })
}

struct RunCtx<'a> {
    grid: &'a Arc<Grid>,
    a0: &'a MatrixField,
    b0: &'a MatrixField,
    gauge_form: bool,
    contraction: Contraction,
}

impl RunCtx<'_> {
    /// Framing field corresponding to the integrator state.
    fn framing_of(&self, state: &MatrixField) -> MatrixField {
        if self.gauge_form {
            self.a0.iter().zip(state).map(|(a0, a)| a0 * a).collect()
        } else {
            state.clone()
        }
    }

    /// Relative gauge a(t) corresponding to the integrator state.
    fn gauge_of(&self, state: &MatrixField) -> MatrixField {
        if self.gauge_form {
            state.clone()
        } else {
            self.b0.iter().zip(state).map(|(b0, a)| b0 * a).collect()
        }
    }

    fn eval(&self, state: &MatrixField, t: f64) -> Result<Eval> {
        let af = self.framing_of(state);
        match eval_framing_rhs(self.grid, &af, self.contraction, t)? {
            Eval::Go { deriv, diag } => {
                let deriv = if self.gauge_form {
                    self.b0.iter().zip(&deriv).map(|(b0, d)| b0 * d).collect()
                } else {
                    deriv
                };
                Ok(Eval::Go { deriv, diag })
            }
            stop => Ok(stop),
        }
    }
}

fn axpy(base: &MatrixField, k: &MatrixField, c: f64) -> MatrixField {
    base.iter().zip(k).map(|(b, kk)| b + kk * c).collect()
}

fn run_flow(w0: &Framing, params: &FlowParams, gauge_form: bool) -> Result<FlowTrace> {
    params.validate()?;
    let start = Instant::now();
    let grid = w0.grid.clone();
    let b0 = invert_field(&w0.field)?;
    let calib = DegreeCalibrator::new(&grid)?;
    let n = grid.node_count();
    let ctx = RunCtx { grid: &grid, a0: &w0.field, b0: &b0, gauge_form, contraction: params.contraction };

    let mut state: MatrixField =
        if gauge_form { vec![Matrix3::identity(); n] } else { w0.field.clone() };
    let mut t = 0.0f64;
    let mut dt = params.dt;
    let min_dt = params.dt / 1024.0;
    let t_end_eps = params.t_max * 1e-12;

    let mut rows: Vec<TraceRow> = Vec::new();
    let mut snapshots: Vec<(f64, MatrixField)> = Vec::new();
    let mut prev_recorded: Option<MatrixField> = None;
    let mut last_record_step: Option<usize> = None;
    let mut steps = 0usize;
    let outcome;

    'run: loop {
        let finished = params.t_max - t <= t_end_eps;
        // evaluate at the current state; this is also stage 1 of the step
        let (deriv, diag) = match ctx.eval(&state, t)? {
            Eval::Go { deriv, diag } => (deriv, diag),
            Eval::Stop(o) => {
                outcome = o;
                break 'run;
            }
        };

        if (finished || steps.is_multiple_of(params.sample_stride)) && last_record_step != Some(steps) {
            let af = ctx.framing_of(&state);
            let a_rel_change = match &prev_recorded {
                None => 0.0,
                Some(prev) => {
                    let num = af.iter().zip(prev).map(|(a, p)| (a - p).norm_squared()).fold(0.0f64, f64::max);
                    let den = prev.iter().map(|p| p.norm_squared()).fold(0.0f64, f64::max);
                    (num / den.max(f64::MIN_POSITIVE)).sqrt()
                }
            };
            let gauge = GaugeField { grid: grid.clone(), field: ctx.gauge_of(&state) };
            let deg_a = match polar_project(&gauge).and_then(|p| calib.raw_degree(&p)) {
                Ok(raw) => raw.round() as i64,
                Err(HfError::SingularField { node, .. }) => {
                    outcome = FlowOutcome::PositivityLost { t, node };
                    break 'run;
                }
                Err(e) => return Err(e),
            };
            rows.push(TraceRow {
                t,
                sup_h: diag.sup_h,
                l2_h: diag.l2_h,
                sup_r: diag.sup_r,
                l2_r: diag.l2_r,
                deg_a,
                c_drift: diag.c_var,
                a_rel_change,
            });
            if params.snapshot_stride > 0 && (rows.len() - 1).is_multiple_of(params.snapshot_stride) {
                snapshots.push((t, af.clone()));
            }
            prev_recorded = Some(af);
            last_record_step = Some(steps);
        }

        if finished {
            outcome = FlowOutcome::Completed;
            break 'run;
        }
        if steps >= params.max_steps {
            outcome = FlowOutcome::StepLimit { t };
            break 'run;
        }

        let h = dt.min(params.t_max - t);
        // inner Result: Ok(next state) or Err(stage failure outcome);
        // outer Result: genuine errors, propagated with ?
        let stepped: std::result::Result<MatrixField, FlowOutcome> = match params.integrator {
            Integrator::Euler => Ok(axpy(&state, &deriv, h)),
            Integrator::Rk4 => (|| -> Result<std::result::Result<MatrixField, FlowOutcome>> {
                let k1 = &deriv;
                let s2 = axpy(&state, k1, 0.5 * h);
                let k2 = match ctx.eval(&s2, t + 0.5 * h)? {
                    Eval::Go { deriv, .. } => deriv,
                    Eval::Stop(o) => return Ok(Err(o)),
                };
                let s3 = axpy(&state, &k2, 0.5 * h);
                let k3 = match ctx.eval(&s3, t + 0.5 * h)? {
                    Eval::Go { deriv, .. } => deriv,
                    Eval::Stop(o) => return Ok(Err(o)),
                };
                let s4 = axpy(&state, &k3, h);
                let k4 = match ctx.eval(&s4, t + h)? {
                    Eval::Go { deriv, .. } => deriv,
                    Eval::Stop(o) => return Ok(Err(o)),
                };
                let mut next = state.clone();
                for (i, m) in next.iter_mut().enumerate() {
                    *m += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
                }
                Ok(Ok(next))
            })()?,
        };

        match stepped {
            Ok(next) => {
                state = next;
                t += h;
                steps += 1;
            }
            Err(stage_outcome) => {
                if matches!(params.step_control, StepControl::Halving) && dt * 0.5 >= min_dt {
                    dt *= 0.5;
                    continue 'run;
                }
                outcome = stage_outcome;
                break 'run;
            }
        }
    }

    let final_field = ctx.framing_of(&state);
    let final_gauge_field = ctx.gauge_of(&state);
    Ok(FlowTrace {
        rows,
        snapshots,
        outcome,
        final_framing: Framing { grid: grid.clone(), field: final_field },
        final_gauge: GaugeField { grid: grid.clone(), field: final_gauge_field },
        steps_taken: steps,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Integrate the flow with the framing A(t) as the state variable.
pub fn integrate_flow(w0: &Framing, params: &FlowParams) -> Result<FlowTrace> {
    run_flow(w0, params, false)
}

/// Integrate the flow in gauge form: the state is a(t) with a(0) = Id and
/// da/dt = A_0^{-1} H(A_0 a) A_0 a, so that w(t) = w0 compose a(t).
pub fn integrate_flow_gauge(w0: &Framing, params: &FlowParams) -> Result<FlowTrace> {
    run_flow(w0, params, true)
}

/// Plateau detection on a finished trace.
///
/// Converged means: the run completed its horizon AND the trailing `window`
/// recorded samples all have sup ||H|| <= tol_h and relative A-change
/// <= tol_drift. The reported limit is the final framing, which within the
/// certified drift tolerance equals the state at t_prime.
pub fn detect_convergence(trace: &FlowTrace, params: &FlowParams) -> ConvergenceReport {
    let rows = &trace.rows;
    if rows.is_empty() {
        return ConvergenceReport {
            converged: false,
            t_prime: None,
            limit: None,
            final_norms: (f64::INFINITY, f64::INFINITY),
            orbit_preserved: false,
            contraction_fidelity: None,
        };
    }
    let good = |r: &TraceRow| r.sup_h <= params.tol_h && r.a_rel_change <= params.tol_drift;
    let mut first_good = rows.len();
    while first_good > 0 && good(&rows[first_good - 1]) {
        first_good -= 1;
    }
    let suffix = rows.len() - first_good;
    let completed = matches!(trace.outcome, FlowOutcome::Completed);
    let converged = completed && suffix >= params.window;
    let last = rows.last().expect("rows nonempty");
    ConvergenceReport {
        converged,
        t_prime: if converged { Some(rows[first_good].t) } else { None },
        limit: if converged { Some(trace.final_framing.clone()) } else { None },
        final_norms: (last.sup_h, last.sup_r),
        orbit_preserved: rows.iter().all(|r| r.deg_a == 0),
        contraction_fidelity: if converged { Some(last.sup_r <= 50.0 * params.tol_h) } else { None },
    }
}
