//! Parameter sweeps: independent solves of one base configuration with a
//! single parameter varied, run concurrently and reported in input order.

use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;
use transonic_core::numerics::observed_order;

use crate::config::CaseConfig;
use crate::error::Result;
use crate::output::{fmt17, write_csv, write_json};
use crate::pipeline::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    Epsilon,
    /// Square grids `n x n`.
    Grid,
    ExitPressure,
}

impl FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "epsilon" => Ok(SweepParameter::Epsilon),
            "grid" => Ok(SweepParameter::Grid),
            "exit-pressure" | "exit_pressure" | "pe" => Ok(SweepParameter::ExitPressure),
            other => Err(format!("unknown sweep parameter `{other}` (expected epsilon, grid or exit-pressure)")),
        }
    }
}

impl SweepParameter {
    /// The base configuration with this parameter set to `value`.
    pub fn apply(&self, base: &CaseConfig, value: f64) -> CaseConfig {
        let mut cfg = base.clone();
        match self {
            SweepParameter::Epsilon => cfg.perturbation.epsilon = value,
            SweepParameter::Grid => {
                let n = value.round().max(0.0) as usize;
                cfg.numerics.grid = [n, n];
            }
            SweepParameter::ExitPressure => cfg.geometry.exit_pressure = value,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseStatus {
    Ok,
    Invalid,
    Failed,
}

/// Outcome of one case. Failed cases keep their error and leave the
/// numbers empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: CaseStatus,
    pub iterations: Option<usize>,
    pub norm: Option<f64>,
    pub contraction_ratio: Option<f64>,
    pub shock_residual: Option<f64>,
    pub terminal_residual: Option<f64>,
    pub r_b: Option<f64>,
    pub runtime_s: f64,
    pub error: Option<String>,
}

fn run_case(base: &CaseConfig, param: SweepParameter, value: f64) -> SweepRow {
    let t = Instant::now();
    let mut row = SweepRow {
        value,
        status: CaseStatus::Ok,
        iterations: None,
        norm: None,
        contraction_ratio: None,
        shock_residual: None,
        terminal_residual: None,
        r_b: None,
        runtime_s: 0.0,
        error: None,
    };
    match param.apply(base, value).case() {
        Err(e) => {
            row.status = CaseStatus::Invalid;
            row.error = Some(e.to_string());
        }
        Ok(case) => match solve(&case) {
            Ok(b) => {
                row.iterations = Some(b.report.iterations());
                row.norm = Some(b.report.final_norm());
                row.contraction_ratio = b.report.contraction_ratio;
                row.shock_residual = Some(b.report.shock_residual);
                row.terminal_residual = Some(b.report.terminal_residual);
                row.r_b = Some(b.background.r_b);
            }
            Err(e) => {
                row.status = CaseStatus::Failed;
                row.error = Some(e.to_string());
            }
        },
    }
    row.runtime_s = t.elapsed().as_secs_f64();
    if let Some(e) = &row.error {
        warn!("sweep case {value}: {e}");
    } else {
        info!("sweep case {value}: done in {:.2} s", row.runtime_s);
    }
    row
}

/// Runs every value on up to `threads` worker threads. Rows come back in
/// the order of `values` whatever order the cases finish in.
pub fn sweep(base: &CaseConfig, param: SweepParameter, values: &[f64], threads: usize) -> Vec<SweepRow> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<SweepRow>>> = values.iter().map(|_| Mutex::new(None)).collect();
    let workers = threads.clamp(1, values.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&value) = values.get(k) else { break };
                let row = run_case(base, param, value);
                *slots[k].lock().unwrap_or_else(|p| p.into_inner()) = Some(row);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|p| p.into_inner()).expect("every case ran"))
        .collect()
}

/// Least-squares fit `norm = K eps` through the origin, with the largest
/// relative deviation of a point from the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub k: f64,
    pub max_deviation: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if x.is_empty() || !(sxx > 0.0) {
        return None;
    }
    let k = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let max_deviation = x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max(((b - k * a) / (k * a)).abs()));
    Some(LinearFit { k, max_deviation })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub parameter: SweepParameter,
    pub cases: usize,
    pub passed: usize,
    /// Epsilon sweeps: terminal norm against `eps`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_fit: Option<LinearFit>,
    /// Epsilon sweeps: contraction ratio against `eps`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_fit: Option<LinearFit>,
    /// Grid sweeps: least-squares order of the jump residual in `1/n`, and
    /// the order between each consecutive pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shock_residual_order: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pairwise_orders: Vec<f64>,
    /// Exit-pressure sweeps: whether `r_b` strictly decreases as the exit
    /// pressure increases.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_b_decreasing: Option<bool>,
}

pub fn summarize(param: SweepParameter, rows: &[SweepRow]) -> SweepSummary {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.status == CaseStatus::Ok).collect();
    let mut s = SweepSummary {
        parameter: param,
        cases: rows.len(),
        passed: ok.len(),
        norm_fit: None,
        ratio_fit: None,
        shock_residual_order: None,
        pairwise_orders: Vec::new(),
        r_b_decreasing: None,
    };
    match param {
        SweepParameter::Epsilon => {
            let pos: Vec<&&SweepRow> = ok.iter().filter(|r| r.value > 0.0).collect();
            let x: Vec<f64> = pos.iter().map(|r| r.value).collect();
            let y: Vec<f64> = pos.iter().map(|r| r.norm.unwrap_or(f64::NAN)).collect();
            s.norm_fit = linear_fit(&x, &y);
            let with_ratio: Vec<(f64, f64)> = pos.iter().filter_map(|r| r.contraction_ratio.map(|q| (r.value, q))).collect();
            let (x, y): (Vec<f64>, Vec<f64>) = with_ratio.into_iter().unzip();
            s.ratio_fit = linear_fit(&x, &y);
        }
        SweepParameter::Grid => {
            let mut pts: Vec<(f64, f64)> =
                ok.iter().filter_map(|r| r.shock_residual.map(|e| (1.0 / r.value, e))).filter(|(_, e)| *e > 0.0).collect();
            pts.sort_by(|a, b| b.0.total_cmp(&a.0));
            if pts.len() >= 2 {
                let (h, e): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
                s.shock_residual_order = Some(observed_order(&h, &e));
                s.pairwise_orders = pts.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect();
            }
        }
        SweepParameter::ExitPressure => {
            let mut pts: Vec<(f64, f64)> = ok.iter().filter_map(|r| r.r_b.map(|rb| (r.value, rb))).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pts.len() >= 2 {
                s.r_b_decreasing = Some(pts.windows(2).all(|w| w[1].1 < w[0].1));
            }
        }
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

/// Writes `sweep.csv` and `sweep_summary.json`. The runtime column is the
/// only entry that differs between reruns.
pub fn write_sweep(dir: &Path, rows: &[SweepRow], summary: &SweepSummary) -> Result<()> {
    let header = [
        "value",
        "status",
        "iterations",
        "norm",
        "contraction_ratio",
        "shock_residual",
        "terminal_residual",
        "r_b",
        "runtime_s",
        "error",
    ];
    write_csv(
        &dir.join("sweep.csv"),
        &header,
        rows.iter().map(|r| {
            let status = match r.status {
                CaseStatus::Ok => "ok",
                CaseStatus::Invalid => "invalid",
                CaseStatus::Failed => "failed",
            };
            vec![
                fmt17(r.value),
                status.to_string(),
                r.iterations.map(|n| n.to_string()).unwrap_or_default(),
                opt(r.norm),
                opt(r.contraction_ratio),
                opt(r.shock_residual),
                opt(r.terminal_residual),
                opt(r.r_b),
                format!("{:.3}", r.runtime_s),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    write_json(&dir.join("sweep_summary.json"), summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_through_the_origin() {
        let f = linear_fit(&[1.0, 2.0, 4.0], &[10.0, 20.0, 40.0]).unwrap();
        assert!((f.k - 10.0).abs() < 1e-12 && f.max_deviation < 1e-12);
        let f = linear_fit(&[1.0, 2.0], &[1.1, 2.0]).unwrap();
        assert!((f.k - 5.1 / 5.0).abs() < 1e-12);
        assert!((f.max_deviation - (1.1 - 1.02) / 1.02).abs() < 1e-12);
        assert!(linear_fit(&[], &[]).is_none());
    }

    #[test]
    fn parameters_parse_and_apply() {
        let base = crate::config::default_config();
        assert_eq!("grid".parse::<SweepParameter>().unwrap(), SweepParameter::Grid);
        assert!("mach".parse::<SweepParameter>().is_err());
        assert_eq!(SweepParameter::Grid.apply(&base, 48.0).numerics.grid, [48, 48]);
        assert_eq!(SweepParameter::ExitPressure.apply(&base, 1.5).geometry.exit_pressure, 1.5);
        assert_eq!(SweepParameter::Epsilon.apply(&base, 2e-3).perturbation.epsilon, 2e-3);
    }

    #[test]
    fn invalid_cases_are_recorded_and_the_sweep_continues() {
        let mut base = crate::config::default_config();
        base.numerics.grid = [16, 16];
        let rows = sweep(&base, SweepParameter::Epsilon, &[1.0, 5e-4], 2);
        assert_eq!(rows[0].status, CaseStatus::Invalid);
        assert!(rows[0].error.as_deref().unwrap().contains("epsilon0"));
        assert_eq!(rows[1].status, CaseStatus::Ok);
        assert!(rows[1].norm.unwrap() > 0.0);
    }

    #[test]
    fn exit_pressure_summary_detects_monotonicity() {
        let row = |value, r_b| SweepRow {
            value,
            status: CaseStatus::Ok,
            iterations: Some(1),
            norm: Some(0.0),
            contraction_ratio: None,
            shock_residual: None,
            terminal_residual: None,
            r_b: Some(r_b),
            runtime_s: 0.0,
            error: None,
        };
        let s = summarize(SweepParameter::ExitPressure, &[row(1.7, 1.2), row(1.5, 1.6)]);
        assert_eq!(s.r_b_decreasing, Some(true));
        let s = summarize(SweepParameter::ExitPressure, &[row(1.7, 1.6), row(1.5, 1.2)]);
        assert_eq!(s.r_b_decreasing, Some(false));
    }
}
