//! CSV and report serialization: 17-significant-digit floats (round-trip
//! exact), deterministic row order, write-then-rename file creation.

use std::fs;
use std::path::{Path, PathBuf};

use crate::cascade::CascadeReport;
use crate::error::Result;
use crate::integrate::Trajectory;
use crate::lyapunov::DecayReport;

/// Round-trip exact float formatting (17 significant digits).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `contents` to `path` atomically (temporary file plus rename), so a
/// failing run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = PathBuf::from(path);
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    tmp.set_file_name(format!("{file_name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Long-format trajectory table: one row per (sample, mode).
pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from("tau,eta,re_omega,im_omega,abs_omega\n");
    for (tau, state) in &trajectory.samples {
        for (i, amp) in state.amplitudes().iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_float(*tau),
                fmt_float(state.eta_at(i)),
                fmt_float(amp.re),
                fmt_float(amp.im),
                fmt_float(amp.norm()),
            ));
        }
    }
    out
}

/// Cascade table: one row per sampled step.
pub fn cascade_csv(report: &CascadeReport) -> String {
    let mut out = String::from("j,T_j,res_amp,sup_amp,dominance,ratio,d_pow_j\n");
    for step in &report.steps {
        let ratio = step.ratio.map(fmt_float).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            step.j,
            fmt_float(step.time),
            fmt_float(step.resonant_amp),
            fmt_float(step.sup_amp),
            step.dominant,
            ratio,
            fmt_float(report.d_grow.powi(step.j as i32)),
        ));
    }
    out
}

/// Weighted-functional table: one row per (sample, order).
pub fn functional_csv(report: &DecayReport) -> String {
    let mut out = String::from("tau,order,functional\n");
    for series in &report.orders {
        for (tau, value) in &series.values {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_float(*tau),
                series.order,
                fmt_float(*value)
            ));
        }
    }
    out
}

/// One row of the path-sum comparison table.
pub struct PathsumRow {
    pub eta: f64,
    pub re_partial: f64,
    pub im_partial: f64,
    pub re_integrated: f64,
    pub im_integrated: f64,
    pub abs_diff: f64,
}

pub fn pathsum_csv(rows: &[PathsumRow], tail_bound: f64) -> String {
    let mut out =
        String::from("eta,re_partial,im_partial,re_integrated,im_integrated,abs_diff,tail_bound\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_float(r.eta),
            fmt_float(r.re_partial),
            fmt_float(r.im_partial),
            fmt_float(r.re_integrated),
            fmt_float(r.im_integrated),
            fmt_float(r.abs_diff),
            fmt_float(tail_bound),
        ));
    }
    out
}

/// One row of the sweep summary.
pub struct SweepRow {
    pub c: f64,
    pub torus_length: f64,
    pub label: String,
    pub max_growth_ratio: Option<f64>,
    pub check: &'static str,
    pub check_pass: Option<bool>,
    pub error: Option<String>,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("c,L,label,max_growth_ratio,check,check_pass,error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_float(r.c),
            fmt_float(r.torus_length),
            r.label,
            r.max_growth_ratio.map(fmt_float).unwrap_or_default(),
            r.check,
            r.check_pass.map(|b| b.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ));
    }
    out
}
