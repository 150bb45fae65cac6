//! Flat key=value experiment configuration.
//!
//! The format is deliberately plain: one `key = value` pair per line,
//! `#` starts a comment, blank lines are skipped. Unknown keys and
//! duplicate keys are errors — a config never silently ignores input.
//! Every key has a default, so the empty file is a valid config.
//!
//! Keys:
//!
//! | key                 | values                         | default   |
//! |---------------------|--------------------------------|-----------|
//! | grid                | three comma-separated counts   | 16,16,32  |
//! | side                | left, right                    | left      |
//! | twist               | integer in [-8, 8]             | 0         |
//! | seed                | unsigned integer               | 0         |
//! | eps                 | perturbation amplitude >= 0    | 0         |
//! | cutoff              | harmonic degree cutoff >= 1    | 2         |
//! | dt                  | time step > 0                  | 1e-3      |
//! | t_max               | horizon > 0                    | 1.0       |
//! | max_steps           | step budget >= 1               | 1000000   |
//! | tol_H               | stationarity tolerance > 0     | 1e-5      |
//! | tol_drift           | drift tolerance > 0            | 1e-5      |
//! | window              | trailing samples >= 2          | 20        |
//! | sample_stride       | steps per recorded row >= 1    | 1         |
//! | snapshot_stride     | rows per snapshot (0 = off)    | 0         |
//! | contraction         | div_k, trace_i                 | div_k     |
//! | integrator          | rk4, euler                     | rk4       |
//! | step_control        | fixed, halving                 | fixed     |
//! | forms               | both, framing, gauge           | both      |
//! | out_dir             | run directory path             | run_out   |
//! | defect_assignment   | left_plus, left_minus          | left_plus |

use std::collections::HashSet;
use std::path::PathBuf;

use crate::curvature::Contraction;
use crate::error::{HfError, Result};
use crate::flow::{FlowParams, Integrator, StepControl};
use crate::topology::{DefectAssignment, Side};

/// Which formulations of the flow a run integrates.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Forms {
    #[default]
    Both,
    FramingOnly,
    GaugeOnly,
}

/// A fully resolved experiment description.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub grid: (usize, usize, usize),
    pub side: Side,
    pub twist: i64,
    pub seed: u64,
    pub eps: f64,
    pub cutoff: usize,
    pub flow: FlowParams,
    pub forms: Forms,
    pub out_dir: PathBuf,
    pub defect_assignment: DefectAssignment,
    /// the exact text this config was parsed from, echoed byte-for-byte
    /// into the run directory
    pub raw_text: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid: (16, 16, 32),
            side: Side::Left,
            twist: 0,
            seed: 0,
            eps: 0.0,
            cutoff: 2,
            flow: FlowParams::default(),
            forms: Forms::default(),
            out_dir: PathBuf::from("run_out"),
            defect_assignment: DefectAssignment::default(),
            raw_text: String::new(),
        }
    }
}

fn bad(key: &str, value: &str, expected: &str) -> HfError {
    HfError::Config(format!("key '{key}': cannot parse '{value}' ({expected})"))
}

impl ExperimentConfig {
    /// Parse a flat key=value text into a config. The original text is
    /// retained verbatim in `raw_text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig { raw_text: text.to_string(), ..ExperimentConfig::default() };
        let mut seen: HashSet<String> = HashSet::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HfError::Config(format!(
                    "line {}: expected 'key = value', got '{}'",
                    lineno + 1,
                    raw_line.trim()
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(HfError::Config(format!("duplicate key '{key}' (line {})", lineno + 1)));
            }
            match key {
                "grid" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(bad(key, value, "need three comma-separated counts"));
                    }
                    let mut dims = [0usize; 3];
                    for (d, p) in dims.iter_mut().zip(&parts) {
                        *d = p.parse().map_err(|_| bad(key, value, "counts must be positive integers"))?;
                    }
                    cfg.grid = (dims[0], dims[1], dims[2]);
                }
                "side" => {
                    cfg.side = match value {
                        "left" => Side::Left,
                        "right" => Side::Right,
                        _ => return Err(bad(key, value, "left or right")),
                    }
                }
                "twist" => cfg.twist = value.parse().map_err(|_| bad(key, value, "integer"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad(key, value, "unsigned integer"))?,
                "eps" => cfg.eps = value.parse().map_err(|_| bad(key, value, "real number"))?,
                "cutoff" => cfg.cutoff = value.parse().map_err(|_| bad(key, value, "positive integer"))?,
                "dt" => cfg.flow.dt = value.parse().map_err(|_| bad(key, value, "real number"))?,
                "t_max" => cfg.flow.t_max = value.parse().map_err(|_| bad(key, value, "real number"))?,
                "max_steps" => {
                    cfg.flow.max_steps = value.parse().map_err(|_| bad(key, value, "positive integer"))?
                }
                "tol_H" => cfg.flow.tol_h = value.parse().map_err(|_| bad(key, value, "real number"))?,
                "tol_drift" => {
                    cfg.flow.tol_drift = value.parse().map_err(|_| bad(key, value, "real number"))?
                }
                "window" => cfg.flow.window = value.parse().map_err(|_| bad(key, value, "integer >= 2"))?,
                "sample_stride" => {
                    cfg.flow.sample_stride =
                        value.parse().map_err(|_| bad(key, value, "positive integer"))?
                }
                "snapshot_stride" => {
                    cfg.flow.snapshot_stride =
                        value.parse().map_err(|_| bad(key, value, "non-negative integer"))?
                }
                "contraction" => {
                    cfg.flow.contraction = match value {
                        "div_k" => Contraction::DivK,
                        "trace_i" => Contraction::TraceI,
                        _ => return Err(bad(key, value, "div_k or trace_i")),
                    }
                }
                "integrator" => {
                    cfg.flow.integrator = match value {
                        "rk4" => Integrator::Rk4,
                        "euler" => Integrator::Euler,
                        _ => return Err(bad(key, value, "rk4 or euler")),
                    }
                }
                "step_control" => {
                    cfg.flow.step_control = match value {
                        "fixed" => StepControl::Fixed,
                        "halving" => StepControl::Halving,
                        _ => return Err(bad(key, value, "fixed or halving")),
                    }
                }
                "forms" => {
                    cfg.forms = match value {
                        "both" => Forms::Both,
                        "framing" => Forms::FramingOnly,
                        "gauge" => Forms::GaugeOnly,
                        _ => return Err(bad(key, value, "both, framing, or gauge")),
                    }
                }
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "defect_assignment" => {
                    cfg.defect_assignment = match value {
                        "left_plus" => DefectAssignment::LeftPlus,
                        "left_minus" => DefectAssignment::LeftMinus,
                        _ => return Err(bad(key, value, "left_plus or left_minus")),
                    }
                }
                _ => return Err(HfError::Config(format!("unknown key '{key}' (line {})", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(HfError::Config(format!("eps must be non-negative and finite, got {}", self.eps)));
        }
        if self.cutoff == 0 {
            return Err(HfError::Config("cutoff must be at least 1".into()));
        }
        if self.twist.abs() > 8 {
            return Err(HfError::Config(format!("twist must lie in [-8, 8], got {}", self.twist)));
        }
        self.flow.validate().map_err(|e| HfError::Config(e.to_string()))?;
        Ok(())
    }

    /// Canonical rendering of the resolved settings (not the raw echo);
    /// used for reports and for writing programmatically built configs.
    pub fn render(&self) -> String {
        let (ga, gb, gc) = self.grid;
        format!(
            "grid = {ga},{gb},{gc}\n\
             side = {}\n\
             twist = {}\n\
             seed = {}\n\
             eps = {}\n\
             cutoff = {}\n\
             dt = {}\n\
             t_max = {}\n\
             max_steps = {}\n\
             tol_H = {}\n\
             tol_drift = {}\n\
             window = {}\n\
             sample_stride = {}\n\
             snapshot_stride = {}\n\
             contraction = {}\n\
             integrator = {}\n\
             step_control = {}\n\
             forms = {}\n\
             out_dir = {}\n\
             defect_assignment = {}\n",
            match self.side {
                Side::Left => "left",
                Side::Right => "right",
            },
            self.twist,
            self.seed,
            self.eps,
            self.cutoff,
            self.flow.dt,
            self.flow.t_max,
            self.flow.max_steps,
            self.flow.tol_h,
            self.flow.tol_drift,
            self.flow.window,
            self.flow.sample_stride,
            self.flow.snapshot_stride,
            match self.flow.contraction {
                Contraction::DivK => "div_k",
                Contraction::TraceI => "trace_i",
            },
            match self.flow.integrator {
                Integrator::Rk4 => "rk4",
                Integrator::Euler => "euler",
            },
            match self.flow.step_control {
                StepControl::Fixed => "fixed",
                StepControl::Halving => "halving",
            },
            match self.forms {
                Forms::Both => "both",
                Forms::FramingOnly => "framing",
                Forms::GaugeOnly => "gauge",
            },
            self.out_dir.display(),
            match self.defect_assignment {
                DefectAssignment::LeftPlus => "left_plus",
                DefectAssignment::LeftMinus => "left_minus",
            },
        )
    }
}
