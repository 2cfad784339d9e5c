use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kdv_core::io::{spectrum_text, study_records, study_table, DiagnosticRecord, Exact, Snapshot};
use kdv_core::{
    invariants, invariants_for, l2_norm, local_error_study, project, spatial_study, temporal_study, EvolveError,
    HarnessError, Integrator, Problem, Rhs, StudyKind, StudyReport,
};
use thiserror::Error;

use crate::config::{ConfigErrors, RunConfig};
use crate::output::{ensure_dir, write_atomic, IoFailure};

/// Real-space samples per retained mode in the final snapshot.
const SNAPSHOT_OVERSAMPLING: usize = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Input(String),
    #[error("acceptance violation: {0}")]
    Acceptance(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O failure: {0}")]
    Io(#[from] IoFailure),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 1,
            CliError::Acceptance(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn evolve_failure(e: EvolveError) -> CliError {
    match e.step_index() {
        Some(n) => CliError::Numerical(format!("failed at step {n}: {e}")),
        None => numerical(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub t_final: f64,
    pub relative_l2_drift: f64,
    pub files: Vec<PathBuf>,
}

/// Evolves the configured problem, writing `diagnostics.txt`, `snapshot.txt`
/// and `spectrum.txt` into `output.dir`.
///
/// On a stepping failure the records gathered so far are still written, but
/// no snapshot or spectrum is.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let rhs = Rhs::new(cfg.spec, cfg.modes).map_err(numerical)?;
    let it = Integrator::new(cfg.scheme.clone(), rhs, cfg.solver).map_err(numerical)?;
    let u0 = cfg.initial.project(cfg.modes);
    ensure_dir(&cfg.output_dir)?;

    let mut diagnostics = String::new();
    let mut failure = None;
    let mut steps = 0;
    let norm0 = l2_norm(&u0);
    let mut max_drift = 0.0f64;
    let result = it.evolve(&u0, cfg.t_final, cfg.output_every, |o| {
        if failure.is_some() {
            return;
        }
        match invariants_for(o.state, &cfg.spec) {
            Ok((i1, i2, i3)) => {
                let l2 = l2_norm(o.state);
                max_drift = max_drift.max((l2 - norm0).abs());
                steps = o.n;
                let record = DiagnosticRecord {
                    n: o.n,
                    t: o.t,
                    l2,
                    i1,
                    i2,
                    i3,
                    stage_iters_max: o.window.max_iterations,
                    gamma_max: o.window.max_gamma_estimate,
                };
                let _ = writeln!(diagnostics, "{record}");
            }
            Err(e) => failure = Some(numerical(e)),
        }
    });
    let diagnostics_path = cfg.output_dir.join("diagnostics.txt");
    write_atomic(&diagnostics_path, &diagnostics)?;
    let state = result.map_err(evolve_failure)?;
    if let Some(e) = failure {
        return Err(e);
    }

    let snapshot = Snapshot::from_field(&state, SNAPSHOT_OVERSAMPLING * cfg.modes, cfg.t_final).map_err(numerical)?;
    let snapshot_path = cfg.output_dir.join("snapshot.txt");
    write_atomic(&snapshot_path, &snapshot.to_text())?;
    let spectrum_path = cfg.output_dir.join("spectrum.txt");
    write_atomic(&spectrum_path, &spectrum_text(&state))?;

    Ok(RunSummary {
        steps,
        t_final: cfg.t_final,
        relative_l2_drift: if norm0 > 0.0 { max_drift / norm0 } else { max_drift },
        files: vec![diagnostics_path, snapshot_path, spectrum_path],
    })
}

fn harness_failure(e: HarnessError) -> CliError {
    match e {
        HarnessError::Run { .. } | HarnessError::Setup(_) => numerical(e),
        other => CliError::Input(other.to_string()),
    }
}

/// Runs a convergence study, writes `study_<kind>.txt` and
/// `study_<kind>_records.txt`, then checks the optional order bounds.
/// The report is returned even when the bounds are violated.
pub fn cmd_study(cfg: &RunConfig, kind: StudyKind) -> Result<(StudyReport, Result<(), CliError>), CliError> {
    cfg.require_study(kind)?;
    let problem = Problem {
        spec: cfg.spec,
        flux: kdv_core::FluxMode::Full,
        solver: cfg.solver,
    };
    let study = &cfg.study;
    let report = match kind {
        StudyKind::Temporal => {
            let u0 = cfg.initial.project(cfg.modes);
            temporal_study(&problem, &u0, &cfg.scheme, cfg.t_final, study.k_list.as_deref().unwrap_or_default())
        }
        StudyKind::Local => {
            let u0 = cfg.initial.project(cfg.modes);
            local_error_study(&problem, &u0, &cfg.scheme, study.k_list.as_deref().unwrap_or_default())
        }
        StudyKind::Spatial => spatial_study(
            &problem,
            &cfg.initial,
            &cfg.scheme,
            cfg.solver.k,
            study.n_list.as_deref().unwrap_or_default(),
            cfg.t_final,
            study.n_ref,
        ),
    }
    .map_err(harness_failure)?;

    ensure_dir(&cfg.output_dir)?;
    let name = kind.name();
    write_atomic(&cfg.output_dir.join(format!("study_{name}.txt")), &study_table(&report))?;
    write_atomic(
        &cfg.output_dir.join(format!("study_{name}_records.txt")),
        &study_records(&report),
    )?;
    let verdict = check_order(&report, study.order_min, study.order_max);
    Ok((report, verdict))
}

fn check_order(report: &StudyReport, min: Option<f64>, max: Option<f64>) -> Result<(), CliError> {
    if min.is_none() && max.is_none() {
        return Ok(());
    }
    let lo = min.unwrap_or(f64::NEG_INFINITY);
    let hi = max.unwrap_or(f64::INFINITY);
    match report.estimated_order {
        Some(p) if (lo..=hi).contains(&p) => Ok(()),
        Some(p) => Err(CliError::Acceptance(format!(
            "fitted {} order {p:.4} outside [{lo}, {hi}]",
            report.kind
        ))),
        None => Err(CliError::Acceptance(format!(
            "no {} order could be fitted ({:?}, {} point(s) above the round-off floor); bounds [{lo}, {hi}]",
            report.kind,
            report.status,
            report.points_used()
        ))),
    }
}

/// Reads a snapshot file, projects it onto its degree and formats the
/// invariants `i1 i2 i3` and the L² norm as one record line.
pub fn cmd_invariants(path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoFailure::new(path, e))?;
    let snap = Snapshot::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let field = project(&snap.samples, snap.modes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let inv = invariants(&field).map_err(numerical)?;
    Ok(format!(
        "t={} N={} l2={} i1={} i2={} i3={}",
        Exact(snap.t),
        snap.modes,
        Exact(l2_norm(&field)),
        Exact(inv.i1),
        Exact(inv.i2),
        Exact(inv.i3)
    ))
}
