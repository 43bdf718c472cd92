//! CSV (RFC 4180, 17 significant digits) and JSON writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use transonic_core::background::{BackgroundSolution, Branch};
use transonic_core::subsonic::IterationReport;
use transonic_core::supersonic::{CompatibilityReport, SupersonicField};

use crate::error::{HarnessError, Result};
use crate::pipeline::SolutionBundle;
use crate::reconstruct::{EulerianFields, ShockCurve};
use crate::verify::VerifyInput;

/// Round-trip formatting of a float.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Write { path: dir.to_path_buf(), source })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let f = fs::File::create(path).map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })?;
    Ok(csv::WriterBuilder::new().quote_style(csv::QuoteStyle::Necessary).from_writer(f))
}

/// Writes a header and rows of formatted cells.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

pub fn write_shock_csv(path: &Path, shock: &ShockCurve) -> Result<()> {
    write_csv(path, &["theta", "xi"], shock.theta.iter().zip(&shock.xi).map(|(t, x)| vec![fmt17(*t), fmt17(*x)]))
}

pub fn write_fields_csv(path: &Path, fields: &EulerianFields) -> Result<()> {
    let header = ["r", "theta", "U1", "U2", "U3", "P", "S", "Mach", "region"];
    write_csv(
        path,
        &header,
        fields.samples.iter().map(|s| {
            let st = &s.state;
            let mut row: Vec<String> = [s.r, s.theta, st.u1, st.u2, st.u3, st.p, st.s, s.mach].map(fmt17).to_vec();
            row.push(s.region.as_str().to_string());
            row
        }),
    )
}

pub fn write_convergence_jsonl(path: &Path, report: &IterationReport) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })?;
    for r in &report.records {
        let line = json!({
            "k": r.k,
            "norm": r.norm,
            "update": r.update,
            "ratio": r.ratio,
            "residual": r.residual,
            "axis": r.axis.max(),
            "solve_residual": r.stats.residual,
            "min_pivot": r.stats.min_pivot,
        });
        writeln!(f, "{line}").map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })?;
    }
    Ok(())
}

pub fn background_json(bg: &BackgroundSolution) -> Value {
    json!({
        "r_b": bg.r_b,
        "exit_pressure": bg.exit_pressure,
        "admissible_exit_pressure": bg.range.map(|r| [r.p1, r.p2]),
        "bisection_iterations": bg.bisection_iterations,
        "mass_flux": bg.m,
        "bernoulli": bg.b,
        "entropy_upstream": bg.s_minus,
        "entropy_downstream": bg.s_plus,
        "upstream": { "U": bg.upstream.u1, "P": bg.upstream.p, "Mach": bg.upstream.mach(&bg.gas) },
        "downstream": { "U": bg.downstream.u1, "P": bg.downstream.p, "Mach": bg.downstream.mach(&bg.gas) },
    })
}

pub fn write_background(dir: &Path, bg: &BackgroundSolution, points: usize) -> Result<Vec<PathBuf>> {
    let g = &bg.gas;
    let rows = bg.table(points)?;
    let csv_path = dir.join("background.csv");
    write_csv(
        &csv_path,
        &["r", "branch", "U", "P", "S", "rho", "Mach"],
        rows.iter().map(|(r, branch, st)| {
            let name = match branch {
                Branch::Supersonic => "supersonic",
                Branch::Subsonic => "subsonic",
            };
            vec![fmt17(*r), name.into(), fmt17(st.u1), fmt17(st.p), fmt17(st.s), fmt17(st.density(g)), fmt17(st.mach(g))]
        }),
    )?;
    let json_path = dir.join("background.json");
    write_json(&json_path, &background_json(bg))?;
    Ok(vec![csv_path, json_path])
}

pub fn compatibility_json(c: &CompatibilityReport) -> Value {
    Value::Array(
        c.checks
            .iter()
            .map(|k| json!({ "name": k.name, "residual": k.residual, "tolerance": k.tolerance, "pass": k.pass }))
            .collect(),
    )
}

pub fn write_supersonic(dir: &Path, field: &SupersonicField, compat: &CompatibilityReport, bg: &BackgroundSolution) -> Result<Vec<PathBuf>> {
    let g = &field.gas;
    let csv_path = dir.join("supersonic.csv");
    let rows = (0..field.n_rows()).flat_map(|i| {
        (0..=field.n_sigma).map(move |j| {
            let st = field.state(i, j);
            [field.radii[i], field.theta(i, j), st.u1, st.u2, st.u3, st.p, st.s, st.mach(g)].map(fmt17).to_vec()
        })
    });
    write_csv(&csv_path, &["r", "theta", "U1", "U2", "U3", "P", "S", "Mach"], rows)?;
    let json_path = dir.join("supersonic.json");
    write_json(
        &json_path,
        &json!({
            "epsilon": field.epsilon,
            "rows": field.n_rows(),
            "angular_intervals": field.n_sigma,
            "min_radial_mach": field.min_radial_mach(),
            "max_deviation_from_background": field.deviation_from_background(bg)?,
            "compatibility": compatibility_json(compat),
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

/// Run summary; contains no timings so that reruns are bit-identical.
pub fn report_json(b: &SolutionBundle) -> Value {
    let rep = &b.report;
    let (slope_axis, slope_wall) = b.shock.end_slopes();
    let xi_min = b.shock.xi.iter().cloned().fold(f64::INFINITY, f64::min);
    let xi_max = b.shock.xi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let [n1, n2] = b.case.numerics.grid;
    json!({
        "epsilon": b.case.perturbation.epsilon,
        "grid": [n1, n2],
        "background": background_json(&b.background),
        "converged": rep.converged,
        "iterations": rep.iterations(),
        "final_norm": rep.final_norm(),
        "final_update": rep.final_update(),
        "tol": rep.tol,
        "delta": rep.delta,
        "contraction_ratio": rep.contraction_ratio,
        "terminal_residual": rep.terminal_residual,
        "shock_residual": rep.shock_residual,
        "shock": {
            "xi_min": xi_min,
            "xi_max": xi_max,
            "max_deviation": b.shock.max_deviation(b.background.r_b),
            "slope_axis": slope_axis,
            "slope_wall": slope_wall,
        },
        "compatibility": compatibility_json(&b.compatibility),
    })
}

/// Writes `shock.csv`, `fields.csv`, `convergence.jsonl`, `report.json`
/// and the node and shock-trace tables the verify checks are computed from.
pub fn write_solution(dir: &Path, b: &SolutionBundle) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let names = ["shock.csv", "fields.csv", "convergence.jsonl", "report.json", "nodes.csv", "shock_trace.csv"];
    let paths = names.map(|f| dir.join(f));
    write_shock_csv(&paths[0], &b.shock)?;
    write_fields_csv(&paths[1], &b.eulerian)?;
    write_convergence_jsonl(&paths[2], &b.report)?;
    write_json(&paths[3], &report_json(b))?;
    VerifyInput::from_bundle(b)?.write_tables(dir)?;
    Ok(paths.to_vec())
}
