//! Reproducible experiment driver: seeded perturbation generation, run
//! orchestration, persistence, and sweep reporting.
//!
//! A run directory is self-describing: it always contains the config echo
//! and an outcome record (meta.json), even when the run fails. All data
//! files are deterministic functions of the config — seeded RNG, fixed
//! reduction order, and no timestamps inside data files (wall-clock timing
//! lives only in meta.json).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::analysis::{llg_check, LieLimitReport, CLASS_TOL};
use crate::config::{ExperimentConfig, Forms};
use crate::container::{save_framing, save_gauge};
use crate::curvature::{structure_functions, Contraction};
use crate::error::{HfError, Result};
use crate::flow::{
    detect_convergence, integrate_flow, integrate_flow_gauge, ConvergenceReport, FlowParams,
    FlowTrace, Integrator, StepControl, BLOWUP_CEILING, DET_FLOOR,
};
use crate::framing::{gauge_apply, matrix_exp, Framing, GaugeField};
use crate::s3_geometry::{build_grid, integrate, Grid, MatrixField};
use crate::topology::{
    canonical_framing, covering_map_field, defect_report, DefectValue, DegreeCalibrator,
    OrbitClass, OrbitLabel, Side,
};

/// Constancy tolerance applied when checking the Lie-limit structure of a
/// converged flow.
pub const LIMIT_LLG_TOL: f64 = 1e-3;

/// Everything a finished experiment produced.
pub struct RunArtifact {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub orbit: OrbitClass,
    pub defect: DefectValue,
    pub primal: Option<FlowTrace>,
    pub gauge: Option<FlowTrace>,
    pub convergence: ConvergenceReport,
    pub report: Option<LieLimitReport>,
}

impl RunArtifact {
    /// The trace convergence and reporting are based on: the framing-form
    /// trace when available, the gauge-form trace otherwise.
    pub fn main_trace(&self) -> &FlowTrace {
        self.primal.as_ref().or(self.gauge.as_ref()).expect("at least one form ran")
    }
}

/// All exponent tuples (for w, x, y, z) of total degree 1..=cutoff, in a
/// fixed deterministic order.
fn monomials(cutoff: usize) -> Vec<[u32; 4]> {
    let mut out = Vec::new();
    for d in 1..=cutoff as u32 {
        for ew in (0..=d).rev() {
            for ex in (0..=d - ew).rev() {
                for ey in (0..=d - ew - ex).rev() {
                    out.push([ew, ex, ey, d - ew - ex - ey]);
                }
            }
        }
    }
    out
}

/// Seeded random gauge deformation exp(eps * s), where s is a matrix field
/// of quaternion-coordinate polynomials up to degree `cutoff`, normalized
/// to sup Frobenius norm 1.
///
/// The exponential form makes the result positive for every amplitude and
/// homotopic to the identity along t -> exp(t eps s), so applying it never
/// changes the orbit of a framing. Same seed, same field, bit for bit.
pub fn random_deformation(grid: &Arc<Grid>, seed: u64, eps: f64, cutoff: usize) -> Result<GaugeField> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(HfError::InvalidInput(format!("eps must be non-negative and finite, got {eps}")));
    }
    if cutoff == 0 {
        return Err(HfError::InvalidInput("cutoff must be at least 1".into()));
    }
    let mons = monomials(cutoff);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let coeffs: Vec<[f64; 9]> = mons
        .iter()
        .map(|_| {
            let mut c = [0.0f64; 9];
            for v in &mut c {
                *v = rng.sample(StandardNormal);
            }
            c
        })
        .collect();

    let mut s_field: MatrixField = grid
        .nodes
        .iter()
        .map(|q| {
            let mut m = Matrix3::zeros();
            for (mon, c) in mons.iter().zip(&coeffs) {
                let v = q.w.powi(mon[0] as i32)
                    * q.x.powi(mon[1] as i32)
                    * q.y.powi(mon[2] as i32)
                    * q.z.powi(mon[3] as i32);
                for (e, ce) in c.iter().enumerate() {
                    m[(e / 3, e % 3)] += ce * v;
                }
            }
            m
        })
        .collect();

    let sup = s_field.iter().map(|m| m.norm_squared()).fold(0.0f64, f64::max).sqrt();
    if sup > 0.0 {
        for m in &mut s_field {
            *m /= sup;
        }
    }
    let field = s_field.iter().map(|m| matrix_exp(&(m * eps))).collect();
    GaugeField::new(grid.clone(), field)
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
    }
}

fn orbit_label_name(label: &OrbitLabel) -> String {
    match label {
        OrbitLabel::LeftCanonical => "left_canonical".into(),
        OrbitLabel::RightCanonical => "right_canonical".into(),
        OrbitLabel::Twisted(k) => format!("twisted({k})"),
        OrbitLabel::Unknown => "unknown".into(),
    }
}

struct RunCore {
    orbit: OrbitClass,
    defect: DefectValue,
    primal: Option<FlowTrace>,
    gauge: Option<FlowTrace>,
    convergence: ConvergenceReport,
    report: Option<LieLimitReport>,
}

fn execute(cfg: &ExperimentConfig) -> Result<RunCore> {
    let (na, nb, ng) = cfg.grid;
    let grid = Arc::new(build_grid(na, nb, ng)?);
    let (base, orbit) = canonical_framing(&grid, cfg.side, cfg.twist)?;
    let defect = defect_report(&orbit, cfg.defect_assignment);
    let deform = random_deformation(&grid, cfg.seed, cfg.eps, cfg.cutoff)?;
    let w0 = gauge_apply(&base, &deform)?;

    let primal = match cfg.forms {
        Forms::Both | Forms::FramingOnly => Some(integrate_flow(&w0, &cfg.flow)?),
        Forms::GaugeOnly => None,
    };
    let gauge = match cfg.forms {
        Forms::Both | Forms::GaugeOnly => Some(integrate_flow_gauge(&w0, &cfg.flow)?),
        Forms::FramingOnly => None,
    };
    let main = primal.as_ref().or(gauge.as_ref()).expect("at least one form ran");
    let convergence = detect_convergence(main, &cfg.flow);
    let report = match &convergence.limit {
        Some(limit) => Some(llg_check(limit, LIMIT_LLG_TOL)?),
        None => None,
    };
    Ok(RunCore { orbit, defect, primal, gauge, convergence, report })
}

fn trace_meta(trace: &FlowTrace) -> serde_json::Value {
    serde_json::json!({
        "outcome": trace.outcome.label(),
        "outcome_detail": trace.outcome.to_string(),
        "steps": trace.steps_taken,
        "wall_seconds": trace.wall_seconds,
        "rows": trace.rows.len(),
        "snapshots": trace.snapshots.len(),
    })
}

/// Run one experiment and persist the full artifact into its directory.
///
/// Files written: `config.txt` (byte-exact echo of the input text),
/// `trace_primal.csv` / `trace_gauge.csv` (per form), `final_framing.hfc`,
/// `final_gauge.hfc`, `snapshot_NNNN.hfc` (when snapshots were kept),
/// `report.json` (when the run converged), and `meta.json` (always — it
/// records the error when a run fails).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifact> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let echo = if cfg.raw_text.is_empty() { cfg.render() } else { cfg.raw_text.clone() };
    std::fs::write(cfg.out_dir.join("config.txt"), &echo)?;

    let core = match execute(cfg) {
        Ok(core) => core,
        Err(err) => {
            let meta = serde_json::json!({
                "status": "error",
                "error": err.to_string(),
            });
            std::fs::write(cfg.out_dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
            return Err(err);
        }
    };

    if let Some(trace) = &core.primal {
        std::fs::write(cfg.out_dir.join("trace_primal.csv"), trace.to_csv())?;
    }
    if let Some(trace) = &core.gauge {
        std::fs::write(cfg.out_dir.join("trace_gauge.csv"), trace.to_csv())?;
    }
    let main = core.primal.as_ref().or(core.gauge.as_ref()).expect("at least one form ran");
    save_framing(&cfg.out_dir.join("final_framing.hfc"), &main.final_framing)?;
    save_gauge(&cfg.out_dir.join("final_gauge.hfc"), &main.final_gauge)?;
    let mut snapshot_files = Vec::new();
    for (idx, (t, field)) in main.snapshots.iter().enumerate() {
        let name = format!("snapshot_{idx:04}.hfc");
        let snap = Framing { grid: main.final_framing.grid.clone(), field: field.clone() };
        save_framing(&cfg.out_dir.join(&name), &snap)?;
        snapshot_files.push(serde_json::json!({ "file": name, "t": t }));
    }
    if let Some(report) = &core.report {
        std::fs::write(cfg.out_dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    }

    let meta = serde_json::json!({
        "status": "ok",
        "grid": [cfg.grid.0, cfg.grid.1, cfg.grid.2],
        "side": side_name(cfg.side),
        "twist": cfg.twist,
        "seed": cfg.seed,
        "eps": cfg.eps,
        "cutoff": cfg.cutoff,
        "flow": {
            "dt": cfg.flow.dt,
            "t_max": cfg.flow.t_max,
            "max_steps": cfg.flow.max_steps,
            "tol_H": cfg.flow.tol_h,
            "tol_drift": cfg.flow.tol_drift,
            "window": cfg.flow.window,
            "sample_stride": cfg.flow.sample_stride,
            "snapshot_stride": cfg.flow.snapshot_stride,
            "contraction": match cfg.flow.contraction { Contraction::DivK => "div_k", Contraction::TraceI => "trace_i" },
            "integrator": match cfg.flow.integrator { Integrator::Rk4 => "rk4", Integrator::Euler => "euler" },
            "step_control": match cfg.flow.step_control { StepControl::Fixed => "fixed", StepControl::Halving => "halving" },
        },
        "orbit": { "degree": core.orbit.degree, "label": orbit_label_name(&core.orbit.label) },
        "defect": core.defect.value,
        "traces": {
            "framing_form": core.primal.as_ref().map(trace_meta),
            "gauge_form": core.gauge.as_ref().map(trace_meta),
        },
        "convergence": {
            "converged": core.convergence.converged,
            "t_prime": core.convergence.t_prime,
            "final_sup_H": core.convergence.final_norms.0,
            "final_sup_R": core.convergence.final_norms.1,
            "orbit_preserved": core.convergence.orbit_preserved,
            "contraction_fidelity": core.convergence.contraction_fidelity,
        },
        "classification": core.report.as_ref().map(|r| r.classification.to_string()),
        "tolerances": {
            "det_floor": DET_FLOOR,
            "blowup_ceiling": BLOWUP_CEILING,
            "class_tol": CLASS_TOL,
            "llg_tol": LIMIT_LLG_TOL,
        },
        "snapshots": snapshot_files,
    });
    std::fs::write(cfg.out_dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;

    Ok(RunArtifact {
        dir: cfg.out_dir.clone(),
        config: cfg.clone(),
        orbit: core.orbit,
        defect: core.defect,
        primal: core.primal,
        gauge: core.gauge,
        convergence: core.convergence,
        report: core.report,
    })
}

/// Run a list of experiments and collect the one-row-per-run CSV summary.
/// Individual run failures become `error` rows; the sweep itself completes.
pub fn sweep(configs: &[ExperimentConfig]) -> Result<String> {
    if configs.is_empty() {
        return Err(HfError::InvalidInput("sweep needs at least one config".into()));
    }
    let mut csv = String::from("side,twist,eps,seed,outcome,t_prime,sup_R_final,class\n");
    for cfg in configs {
        let prefix = format!("{},{},{},{}", side_name(cfg.side), cfg.twist, cfg.eps, cfg.seed);
        match run_experiment(cfg) {
            Ok(art) => {
                let main = art.main_trace();
                let t_prime = art.convergence.t_prime.map(|t| t.to_string()).unwrap_or_default();
                let sup_r = main
                    .rows
                    .last()
                    .map(|r| format!("{:.6e}", r.sup_r))
                    .unwrap_or_default();
                let class = art
                    .report
                    .as_ref()
                    .map(|r| r.classification.to_string())
                    .unwrap_or_default();
                csv.push_str(&format!(
                    "{prefix},{},{t_prime},{sup_r},{class}\n",
                    main.outcome.label()
                ));
            }
            Err(_) => csv.push_str(&format!("{prefix},error,,,\n")),
        }
    }
    Ok(csv)
}

/// The standard three-run probe: both Lie fixed points unperturbed, plus a
/// perturbed start on the left orbit.
pub fn standard_sweep(out_base: &Path) -> Vec<ExperimentConfig> {
    let flow = FlowParams {
        dt: 5e-3,
        t_max: 2.0,
        sample_stride: 10,
        ..FlowParams::default()
    };
    [
        ("lie_left", Side::Left, 0.0, 1),
        ("lie_right", Side::Right, 0.0, 1),
        ("perturbed_left", Side::Left, 0.05, 42),
    ]
    .into_iter()
    .map(|(name, side, eps, seed)| ExperimentConfig {
        grid: (16, 16, 32),
        side,
        twist: 0,
        seed,
        eps,
        cutoff: 2,
        flow: flow.clone(),
        forms: Forms::FramingOnly,
        out_dir: out_base.join(name),
        ..ExperimentConfig::default()
    })
    .collect()
}

/// Human-readable calibration summary for a grid: quadrature, reference
/// brackets, and degree normalization.
pub fn calibration_report(na: usize, nb: usize, ng: usize) -> Result<String> {
    let grid = Arc::new(build_grid(na, nb, ng)?);
    let n = grid.node_count();
    let vol = integrate(&grid, &vec![1.0; n]);
    let vol_expected = 2.0 * PI * PI;

    let left = crate::framing::reference_left_framing(&grid);
    let cs = structure_functions(&left)?;
    let mut bracket_dev = 0.0f64;
    for t in &cs.c {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let want = match (k, i, j) {
                        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 2.0,
                        (0, 2, 1) | (1, 0, 2) | (2, 1, 0) => -2.0,
                        _ => 0.0,
                    };
                    bracket_dev = bracket_dev.max((t[k][i][j] - want).abs());
                }
            }
        }
    }

    let calib = DegreeCalibrator::new(&grid)?;
    let const_expected = 16.0 * PI * PI;
    let (raw, rounded) = calib.degree_of(&covering_map_field(&grid))?;

    Ok(format!(
        "grid: {na} x {nb} x {ng} ({n} nodes)\n\
         volume integral: {vol:.12e} (expected {vol_expected:.12e}, rel err {:.3e})\n\
         left-frame bracket deviation: {bracket_dev:.3e}\n\
         degree normalization: {:.9e} (analytic {const_expected:.9e}, rel err {:.3e})\n\
         covering-map degree: raw {raw:.9} -> {rounded}\n",
        (vol - vol_expected).abs() / vol_expected,
        calib.constant,
        (calib.constant - const_expected).abs() / const_expected,
    ))
}
