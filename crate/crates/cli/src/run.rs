//! Orchestration of the three run modes and artifact emission.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use exdisk::fields::{read_vector_csv, write_scalar_csv, write_vector_csv, FieldExpansion, ModeVector};
use exdisk::nonlinear::{solve_ns_observed, FullSolution, RunReport};
use exdisk::oracle::{run_verification, VerificationReport};
use exdisk::{Error, PhysParams, RadialGrid, SolverParams};
use log::{info, warn};
use serde::Serialize;

use crate::config::{ForcingSpec, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::InvalidParameter(_) | Error::Parse(_) | Error::GridMismatch(_) => EXIT_CONFIG,
        Error::Io(_) | Error::Csv(_) => EXIT_FAILURE,
        Error::Mode { source, .. } => exit_code(source),
        _ => EXIT_NUMERICAL,
    }
}

/// Forcing expansion on the solver grid.
pub fn build_forcing(spec: &ForcingSpec, phys: &PhysParams, solver: &SolverParams) -> Result<FieldExpansion, Error> {
    let grid = RadialGrid::shared(solver.r_max, solver.m_nodes)?;
    match spec {
        ForcingSpec::Zero => Ok(FieldExpansion::new(grid)),
        ForcingSpec::PowerLaw { n, amplitude, exponent } => {
            let e = exponent.unwrap_or(2.0 * solver.rho - 1.0);
            FieldExpansion::power_law(grid, *n, *amplitude, e)
        }
        ForcingSpec::File { path } => read_forcing_dir(path, phys, grid),
    }
}

fn read_forcing_dir(dir: &Path, phys: &PhysParams, grid: Arc<RadialGrid>) -> Result<FieldExpansion, Error> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("mode_") && n.ends_with(".csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Parse(format!("no mode_<n>.csv files in {}", dir.display())));
    }
    let mut out = FieldExpansion::new(grid.clone());
    for path in files {
        let (header, mode) = read_vector_csv(BufReader::new(File::open(&path)?))?;
        if header.gamma != phys.gamma || header.alpha != phys.alpha {
            warn!("{}: header alpha/gamma differ from the run configuration", path.display());
        }
        let same = mode.grid().len() == grid.len()
            && mode.grid().nodes().iter().zip(grid.nodes()).all(|(a, b)| (a - b).abs() <= 1e-12 * b);
        if !same {
            return Err(Error::GridMismatch("forcing file nodes differ from the solver grid"));
        }
        out.insert(ModeVector::new(header.n, grid.clone(), mode.v_r().to_vec(), mode.v_theta().to_vec())?)?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct Summary<'a> {
    status: &'static str,
    config: &'a RunConfig,
    report: &'a RunReport,
}

fn write_modes<'a, T: 'a>(
    dir: &Path,
    items: impl Iterator<Item = (i32, &'a T)>,
    write: impl Fn(BufWriter<File>, &T) -> Result<(), Error>,
) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    for (n, item) in items {
        write(BufWriter::new(File::create(dir.join(format!("mode_{n}.csv")))?), item)?;
    }
    Ok(())
}

fn write_artifacts(out: &Path, cfg: &RunConfig, sol: &FullSolution) -> Result<(), Error> {
    let p = &cfg.phys;
    write_modes(&out.join("velocity"), sol.perturbation.modes().map(|m| (m.n(), m)), |w, m| write_vector_csv(w, m, p))?;
    write_modes(&out.join("pressure_gradient"), sol.pressure_gradient.modes().map(|m| (m.n(), m)), |w, m| {
        write_vector_csv(w, m, p)
    })?;
    write_modes(&out.join("vorticity"), sol.vorticity.modes().map(|m| (m.n(), m)), |w, m| write_scalar_csv(w, m, p))?;
    write_modes(&out.join("pressure"), sol.pressure_modes.modes().map(|m| (m.n(), m)), |w, m| write_scalar_csv(w, m, p))?;
    let summary = Summary { status: "converged", config: cfg, report: &sol.report };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(out.join("summary.json"), json + "\n")?;
    fs::write(out.join("report.txt"), sol.report.to_key_value())?;
    Ok(())
}

/// Solves the configured problem and writes every artifact under
/// `cfg.output`. On divergence the convergence log and a short report are
/// still written.
pub fn run_solve(cfg: &RunConfig) -> Result<RunReport, Error> {
    let out = &cfg.output;
    fs::create_dir_all(out)?;
    let forcing = build_forcing(&cfg.forcing, &cfg.phys, &cfg.solver)?;
    let mut log_lines = Vec::new();
    let result = solve_ns_observed(&forcing, &cfg.phys, &cfg.solver, &mut |rec| log_lines.push(rec.log_line()));
    let mut log = log_lines.join("\n");
    log.push('\n');
    fs::write(out.join("convergence.log"), &log)?;
    match result {
        Ok(sol) => {
            write_artifacts(out, cfg, &sol)?;
            info!("wrote artifacts to {}", out.display());
            Ok(sol.report)
        }
        Err(e) => {
            let status = if e.is_divergence() { "diverged" } else { "failed" };
            fs::write(out.join("report.txt"), format!("status = {status}\nerror = {e}\n"))?;
            Err(e)
        }
    }
}

/// Runs the oracle suite; writes `verification.txt` and `verification.json`
/// when `output` is given.
pub fn run_verify(quick: bool, output: Option<&Path>) -> Result<VerificationReport, Error> {
    let report = run_verification(quick)?;
    if let Some(dir) = output {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("verification.txt"), report.to_table())?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(dir.join("verification.json"), json + "\n")?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
    pub status: String,
    pub iterations: Option<usize>,
    pub contraction_rate: Option<f64>,
    pub velocity_slope: Option<f64>,
    pub vorticity_slope: Option<f64>,
    pub certified: bool,
}

fn or_base(v: &[f64], base: f64) -> Vec<f64> {
    if v.is_empty() {
        vec![base]
    } else {
        v.to_vec()
    }
}

/// Solves every `(α, γ, ρ)` of the sweep grid and writes `sweep.csv`.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, Error> {
    let mut rows = Vec::new();
    for alpha in or_base(&cfg.sweep.alpha, cfg.phys.alpha) {
        for gamma in or_base(&cfg.sweep.gamma, cfg.phys.gamma) {
            for rho in or_base(&cfg.sweep.rho, cfg.solver.rho) {
                let phys = PhysParams::new(alpha, gamma)?;
                let solver = SolverParams { rho, ..cfg.solver.clone() };
                let mut row = SweepRow {
                    alpha,
                    gamma,
                    rho,
                    status: String::new(),
                    iterations: None,
                    contraction_rate: None,
                    velocity_slope: None,
                    vorticity_slope: None,
                    certified: false,
                };
                let outcome = build_forcing(&cfg.forcing, &phys, &solver)
                    .and_then(|f| solve_ns_observed(&f, &phys, &solver, &mut |_| {}));
                match outcome {
                    Ok(sol) => {
                        let r = &sol.report;
                        row.status = "converged".into();
                        row.iterations = Some(r.iterations);
                        row.contraction_rate = r.rate;
                        row.certified = r.certified;
                        if let Some(a) = &r.asymptotics {
                            row.velocity_slope = a.velocity_fit.map(|f| f.slope);
                            row.vorticity_slope = a.vorticity_fit.map(|f| f.slope);
                        }
                    }
                    Err(e) => row.status = if e.is_divergence() { "diverged".into() } else { format!("error: {e}") },
                }
                info!("sweep alpha={alpha} gamma={gamma} rho={rho}: {}", row.status);
                rows.push(row);
            }
        }
    }
    fs::create_dir_all(&cfg.output)?;
    fs::write(cfg.output.join("sweep.csv"), sweep_table(&rows, ','))?;
    Ok(rows)
}

/// Delimited table of sweep rows with a header line.
pub fn sweep_table(rows: &[SweepRow], sep: char) -> String {
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6e}"));
    let mut out = ["alpha", "gamma", "rho", "status", "iterations", "contraction_rate", "velocity_slope", "vorticity_slope", "certified"]
        .join(&sep.to_string());
    out.push('\n');
    for r in rows {
        let fields = [
            format!("{}", r.alpha),
            format!("{}", r.gamma),
            format!("{}", r.rho),
            r.status.replace(sep, ";"),
            r.iterations.map_or_else(String::new, |i| i.to_string()),
            opt(r.contraction_rate),
            opt(r.velocity_slope),
            opt(r.vorticity_slope),
            r.certified.to_string(),
        ];
        out.push_str(&fields.join(&sep.to_string()));
        out.push('\n');
    }
    out
}
