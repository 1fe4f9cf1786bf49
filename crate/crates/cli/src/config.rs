//! Run configuration: a TOML document with dotted keys.
//!
//! ```toml
//! alpha = 1.0
//! gamma = 3.0
//! rho = 2.5
//! solver.n_max = 4
//! forcing.kind = "power_law"
//! forcing.n = 1
//! forcing.amplitude = 1e-3
//! ```

use std::fmt;
use std::path::PathBuf;

use exdisk::{PhysParams, SolverParams};
use log::warn;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Verify,
    Sweep,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Solve => "solve",
            Mode::Verify => "verify",
            Mode::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    Zero,
    /// `amplitude · r^{-exponent} cos(nθ) e_θ`; the exponent defaults to `2ρ − 1`.
    PowerLaw { n: i32, amplitude: f64, exponent: Option<f64> },
    /// Directory of `mode_<n>.csv` vector files on the solver grid.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    n_max: Option<usize>,
    r_max: Option<f64>,
    m_nodes: Option<usize>,
    n_quad: Option<usize>,
    quad_tol: Option<f64>,
    picard_tol: Option<f64>,
    picard_max_iter: Option<usize>,
    delta: Option<f64>,
    c0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    mode: Option<Mode>,
    alpha: f64,
    gamma: f64,
    rho: Option<f64>,
    output: Option<PathBuf>,
    solver: Option<SolverSection>,
    #[serde(default)]
    forcing: ForcingSpec,
    #[serde(default)]
    sweep: SweepSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub phys: PhysParams,
    pub solver: SolverParams,
    pub forcing: ForcingSpec,
    pub output: PathBuf,
    pub sweep: SweepSpec,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub const DEFAULT_OUTPUT: &str = "exdisk-out";

/// Parses and validates a configuration. `mode` (from the subcommand) takes
/// precedence over a `mode` key in the document.
pub fn parse_config(text: &str, mode: Option<Mode>) -> Result<RunConfig, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError(e.message().to_string()))?;
    let mode = mode.or(doc.mode).unwrap_or(Mode::Solve);
    let phys = PhysParams { alpha: doc.alpha, gamma: doc.gamma };
    let mut solver = SolverParams::default();
    if let Some(rho) = doc.rho {
        solver.rho = rho;
    }
    if let Some(s) = doc.solver {
        macro_rules! take {
            ($($k:ident),*) => { $( if let Some(v) = s.$k { solver.$k = v; } )* };
        }
        take!(n_max, r_max, m_nodes, quad_tol, picard_tol, picard_max_iter, c0);
        solver.n_quad = s.n_quad.or(solver.n_quad);
        solver.delta = s.delta.or(solver.delta);
    }
    let config = RunConfig {
        mode,
        phys,
        solver,
        forcing: doc.forcing,
        output: doc.output.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
        sweep: doc.sweep,
    };
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        let err = |e: exdisk::Error| ConfigError(e.to_string());
        self.phys.validate().map_err(err)?;
        let nonlinear = self.mode != Mode::Verify;
        self.solver.validate(&self.phys, nonlinear).map_err(err)?;
        for &v in &self.sweep.gamma {
            PhysParams::new(self.phys.alpha, v).map_err(err)?;
        }
        if let Some(bad) = self.sweep.rho.iter().find(|r| !(**r > 2.0 && **r < 3.0)) {
            return Err(ConfigError(format!("sweep.rho entries must satisfy 2 < rho < 3, got {bad}")));
        }
        if let ForcingSpec::PowerLaw { n, amplitude, exponent } = &self.forcing {
            if n.unsigned_abs() as usize > self.solver.n_max {
                return Err(ConfigError(format!("forcing.n = {n} exceeds solver.n_max = {}", self.solver.n_max)));
            }
            if !amplitude.is_finite() {
                return Err(ConfigError("forcing.amplitude must be finite".into()));
            }
            if let Some(e) = exponent {
                if *e < 2.0 * self.solver.rho - 1.0 {
                    warn!("forcing exponent {e} < 2 rho - 1; the run cannot be certified");
                }
            }
        }
        Ok(())
    }
}
