//! The four subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use fracmax_core::helmholtz::{pi, pi_inverse};
use fracmax_core::maxwell::FracParams;
use fracmax_core::solver::{classical_reference_solve, manufactured_solve, solve_scattering, ScatterSolution};
use fracmax_core::FracError;
use rayon::prelude::*;

use crate::config::{Resolved, ScatterConfig};
use crate::error::{CliError, CliResult};
use crate::field_file::{read_vector, write_scalar, write_vector};
use crate::output::{fmt_csv, write_slice_csv, Report};
use crate::validate::{render_table, run_suite, Check, Suite};

pub const REPORT_FILE: &str = "report.txt";
pub const SLICE_FILE: &str = "e_s_slice.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// `--out` wins over `output_dir` in the config.
pub fn output_dir(cli: Option<&Path>, config: &ScatterConfig) -> CliResult<PathBuf> {
    cli.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| CliError::Usage("no output directory: pass --out or set output_dir".into()))
}

fn describe_problem(report: &mut Report, config: &ScatterConfig, resolved: &Resolved) {
    let p = &resolved.problem;
    report
        .put("seed", p.seed)
        .num("s", p.fp.s())
        .num("k", p.fp.k())
        .num("delta", p.fp.delta())
        .put("n", p.grid.n())
        .num("L", p.grid.l())
        .num("eps_amplitude", p.permittivity.amplitude)
        .num("eps_width", p.permittivity.width)
        .num("eps_cutoff_radius", p.permittivity.cutoff_radius)
        .put("incident_p", fmt_vec(p.incident.p))
        .put("incident_d", fmt_vec(p.incident.d))
        .num("tol", p.controls.tol)
        .put("max_iter", p.controls.max_iter)
        .put("restart", p.controls.restart)
        .put("precond", format!("{:?}", p.controls.precond))
        .put("snap", config.snap);
    if let Some(snap) = &resolved.snap {
        report
            .num("L_requested", snap.l_requested)
            .put("d_requested", fmt_vec(snap.d_requested))
            .put("lattice_mode", snap.mode);
    }
}

fn fmt_vec(v: [f64; 3]) -> String {
    v.map(crate::output::fmt_f64).join(",")
}

/// Summary of one solve, as written to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveSummary {
    pub report: Report,
    /// `Err` when GMRES failed; files other than the report are then absent.
    pub status: Result<(), FracError>,
}

/// Solves `config` and writes every output into `dir`.
pub fn solve_into(config: &ScatterConfig, dir: &Path) -> CliResult<SolveSummary> {
    Ok(solve_keep(config, dir)?.0)
}

fn solve_keep(config: &ScatterConfig, dir: &Path) -> CliResult<(SolveSummary, Option<(Resolved, ScatterSolution)>)> {
    let resolved = config.resolve()?;
    ensure_dir(dir)?;
    let mut report = Report::new();
    report.put("command", "solve");
    describe_problem(&mut report, config, &resolved);
    let mut kept = None;
    let status = match solve_scattering(&resolved.problem) {
        Ok(sol) => {
            write_solution(dir, &sol)?;
            record_solution(&mut report, &sol);
            kept = Some(sol);
            Ok(())
        }
        Err(e) => {
            record_failure(&mut report, &e)?;
            Err(e)
        }
    };
    let status = match status {
        Ok(()) if config.manufactured => {
            let band = (resolved.problem.grid.n() as i64 / 4).max(1);
            match manufactured_solve(&resolved.problem, band) {
                Ok(m) => {
                    report
                        .num("manufactured_relative_error", m.relative_error)
                        .put("manufactured_iterations", m.gmres.iterations);
                    Ok(())
                }
                Err(e) => {
                    report
                        .put("manufactured_status", "failed")
                        .put("manufactured_error", &e);
                    Err(e)
                }
            }
        }
        other => other,
    };
    report.write(&dir.join(REPORT_FILE))?;
    Ok((SolveSummary { report, status }, kept.map(|s| (resolved, s))))
}

fn write_solution(dir: &Path, sol: &ScatterSolution) -> CliResult<()> {
    write_vector(&dir.join("e_s.f3d"), &sol.e_s)?;
    write_vector(&dir.join("h.f3d"), &sol.h)?;
    write_vector(&dir.join("e_i.f3d"), &sol.e_i)?;
    write_slice_csv(&dir.join(SLICE_FILE), &sol.e_s)
}

fn record_solution(report: &mut Report, sol: &ScatterSolution) {
    let r = &sol.report;
    report
        .put("status", "converged")
        .put("iterations", r.iterations)
        .num("final_relative_residual", r.final_relative_residual)
        .num("esei_residual", r.esei_residual)
        .num("curlcurl_form_residual", r.curlcurl_form_residual)
        .num("divergence_constraint_residual", r.divergence_constraint_residual)
        .num("solution_l2", r.solution_l2)
        .num("solution_l2_delta", r.solution_norms.l2_delta)
        .num("solution_hs_delta", r.solution_norms.hs_delta)
        .num("total_field_l2", r.total_field_l2)
        .num("incident_amplitude", r.incident_amplitude)
        .num("rhs_l2", r.rhs_l2)
        .num("rhs_dual_norm_proxy", r.rhs_dual_proxy);
    if let Some(flag) = r.homogeneous_uniqueness_flag {
        report.put("homogeneous_uniqueness_flag", flag);
    }
    for w in &r.warnings {
        report.put("warning", w);
    }
    report.list("residual_history", &r.residual_history);
}

fn record_failure(report: &mut Report, e: &FracError) -> CliResult<()> {
    match e {
        FracError::NotConverged {
            iterations,
            last,
            history,
        } => {
            report
                .put("status", "not_converged")
                .put("iterations", iterations)
                .num("final_relative_residual", *last)
                .list("residual_history", history);
            Ok(())
        }
        FracError::NanInIterate { iteration } => {
            report.put("status", "nan_in_iterate").put("iterations", iteration);
            Ok(())
        }
        other => Err(CliError::Numerics(other.clone())),
    }
}

pub fn cmd_solve(config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<SolveSummary> {
    let mut config = ScatterConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let dir = output_dir(out, &config)?;
    let summary = solve_into(&config, &dir)?;
    summary.status.clone().map_err(CliError::Numerics)?;
    Ok(summary)
}

/// Runs the suites, prints the table to `sink` and optionally writes it to
/// `out/validate.txt`. Fails with `ChecksFailed` if any check fails.
pub fn cmd_validate(
    suite: Suite,
    n: usize,
    seed: u64,
    out: Option<&Path>,
    sink: &mut impl Write,
) -> CliResult<Vec<Check>> {
    let checks = run_suite(suite, n, seed)?;
    let mut table = format!("suite = {}\nn = {n}\nseed = {seed}\n", suite.name());
    table.push_str(&render_table(&checks));
    let failed = checks.iter().filter(|c| !c.pass()).count();
    table.push_str(&format!(
        "{} of {} checks passed\n",
        checks.len() - failed,
        checks.len()
    ));
    sink.write_all(table.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let path = dir.join("validate.txt");
        std::fs::write(&path, &table).map_err(|e| CliError::io(&path, e))?;
    }
    if failed > 0 {
        return Err(CliError::ChecksFailed {
            failed,
            total: checks.len(),
        });
    }
    Ok(checks)
}

/// Splits a stored vector field into fractional Helmholtz potentials.
pub fn cmd_decompose(field_path: &Path, s: f64, out: &Path) -> CliResult<Report> {
    FracParams::new(s, 1.0, 1.0)?;
    let v = read_vector(field_path)?;
    let e = pi_inverse(&v, s)?;
    let back = pi(&e)?;
    let vn = v.norm();
    let err = if vn == 0.0 { 0.0 } else { (&back - &v).norm() / vn };
    ensure_dir(out)?;
    write_scalar(&out.join("phi.f3d"), &e.phi)?;
    write_vector(&out.join("a.f3d"), &e.a)?;
    let mut report = Report::new();
    report
        .put("command", "decompose")
        .put("input", field_path.display())
        .num("s", s)
        .put("n", v.grid().n())
        .num("L", v.grid().l())
        .num("phi_l2", e.phi.norm())
        .num("a_l2", e.a.norm())
        .num("gauge_ratio", e.gauge_ratio())
        .num("reconstruction_error", err);
    report.write(&out.join(REPORT_FILE))?;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    S,
    K,
    Amplitude,
}

impl std::str::FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "s" => Ok(Self::S),
            "k" => Ok(Self::K),
            "amplitude" => Ok(Self::Amplitude),
            other => Err(CliError::Usage(format!(
                "unknown sweep parameter `{other}`; expected s, k or amplitude"
            ))),
        }
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::S => "s",
            Self::K => "k",
            Self::Amplitude => "amplitude",
        }
    }

    fn check(self, v: f64) -> CliResult<()> {
        let ok = v.is_finite()
            && match self {
                Self::S => (0.5..1.0).contains(&v),
                Self::K => v > 0.0,
                Self::Amplitude => v > -1.0,
            };
        if ok {
            Ok(())
        } else {
            let range = match self {
                Self::S => "[0.5, 1)",
                Self::K => "(0, inf)",
                Self::Amplitude => "(-1, inf)",
            };
            Err(CliError::Usage(format!(
                "sweep value {v} for `{}` outside {range}",
                self.name()
            )))
        }
    }

    fn apply(self, config: &ScatterConfig, v: f64) -> ScatterConfig {
        let mut c = config.clone();
        match self {
            Self::S => c.s = v,
            Self::K => c.k = v,
            Self::Amplitude => c.permittivity.amplitude = v,
        }
        c
    }
}

/// Parses a comma separated list and checks range and strict monotonicity.
pub fn parse_values(param: SweepParam, text: &str) -> CliResult<Vec<f64>> {
    let values = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad sweep value `{}`: {e}", t.trim())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if values.is_empty() {
        return Err(CliError::Usage("--values is empty".into()));
    }
    for &v in &values {
        param.check(v)?;
    }
    let up = values.windows(2).all(|w| w[0] < w[1]);
    let down = values.windows(2).all(|w| w[0] > w[1]);
    if !(up || down) {
        return Err(CliError::Usage("sweep values must be strictly monotone".into()));
    }
    Ok(values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub summary: Option<SolveSummary>,
    /// `‖Ẽ_s(s) - Ẽ_s(1)‖ / ‖Ẽ_s(1)‖` on the same grid, for `param = s`.
    pub gap_to_classical: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

fn sweep_one(config: &ScatterConfig, param: SweepParam, value: f64, dir: &Path) -> SweepRow {
    let cfg = param.apply(config, value);
    let mut row = SweepRow {
        value,
        summary: None,
        gap_to_classical: None,
        error: None,
    };
    let kept = match solve_keep(&cfg, dir) {
        Ok((summary, kept)) => {
            if let Err(e) = &summary.status {
                row.error = Some(e.to_string());
            }
            row.summary = Some(summary);
            kept
        }
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    if let (SweepParam::S, Some((resolved, sol))) = (param, kept) {
        match classical_reference_solve(&resolved.problem) {
            Ok(c) => row.gap_to_classical = Some((&sol.e_s - &c.e_s).norm() / c.e_s.norm()),
            Err(e) => row.error = Some(format!("classical reference: {e}")),
        }
    }
    row
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "value",
    "status",
    "iterations",
    "final_relative_residual",
    "esei_residual",
    "curlcurl_form_residual",
    "divergence_constraint_residual",
    "solution_l2",
    "solution_l2_delta",
    "solution_hs_delta",
    "gap_to_classical",
];

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let get = |k: &str| {
            row.summary
                .as_ref()
                .and_then(|s| s.report.get(k))
                .and_then(|v| v.parse::<f64>().ok())
                .map(fmt_csv)
                .unwrap_or_default()
        };
        let status = if row.ok() { "ok" } else { "failed" };
        let mut fields = vec![fmt_csv(row.value), status.to_string()];
        fields.push(
            row.summary
                .as_ref()
                .and_then(|s| s.report.get("iterations"))
                .unwrap_or("")
                .to_string(),
        );
        for k in &SWEEP_COLUMNS[3..10] {
            fields.push(get(k));
        }
        fields.push(row.gap_to_classical.map(fmt_csv).unwrap_or_default());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Subdirectory of the `i`-th sweep value.
pub fn sweep_subdir(out: &Path, param: SweepParam, i: usize) -> PathBuf {
    out.join(format!("{}_{i:03}", param.name()))
}

/// One solve per value, run concurrently. Failures are recorded in the CSV
/// and turned into `SweepFailed` after every value has run.
pub fn cmd_sweep(
    config_path: &Path,
    param: SweepParam,
    values: &str,
    out: Option<&Path>,
    seed: Option<u64>,
) -> CliResult<Vec<SweepRow>> {
    let mut config = ScatterConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let values = parse_values(param, values)?;
    let dir = output_dir(out, &config)?;
    // every value must resolve before anything runs
    for &v in &values {
        param.apply(&config, v).resolve()?;
    }
    ensure_dir(&dir)?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| sweep_one(&config, param, v, &sweep_subdir(&dir, param, i)))
        .collect();
    let path = dir.join(SWEEP_FILE);
    std::fs::write(&path, sweep_csv(&rows)).map_err(|e| CliError::io(&path, e))?;
    let failed = rows.iter().filter(|r| !r.ok()).count();
    if failed > 0 {
        return Err(CliError::SweepFailed {
            failed,
            total: rows.len(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values_are_checked() {
        assert_eq!(
            parse_values(SweepParam::S, "0.5, 0.9,0.99").unwrap(),
            vec![0.5, 0.9, 0.99]
        );
        assert!(parse_values(SweepParam::S, "0.9,0.5").is_ok());
        for bad in ["0.4,0.9", "0.9,1.0", "0.6,0.6", "0.6,0.9,0.7", "x", ""] {
            assert_eq!(parse_values(SweepParam::S, bad).unwrap_err().exit_code(), 1, "{bad}");
        }
        assert!(parse_values(SweepParam::Amplitude, "-1").is_err());
        assert!(parse_values(SweepParam::K, "0").is_err());
        assert!("q".parse::<SweepParam>().is_err());
    }

    #[test]
    fn csv_row_layout() {
        let row = SweepRow {
            value: 0.9,
            summary: None,
            gap_to_classical: None,
            error: Some("boom".into()),
        };
        let csv = sweep_csv(&[row]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0].split(',').count(), SWEEP_COLUMNS.len());
        assert_eq!(lines[1].split(',').count(), SWEEP_COLUMNS.len());
        assert!(lines[1].contains("failed"));
    }
}
