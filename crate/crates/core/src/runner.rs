//! Command execution: maps each configured command onto the library
//! operations, writes artifacts, and collects asserted property checks.
//!
//! Exit-code contract: 0 when every asserted check passes, 1 when any
//! asserted check fails (the report still lists all of them), 2 for
//! configuration or runtime errors (handled by the binary).

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cascade::{run_cascade, verify_growth, GrowthVerdict, RATIO_FLOOR};
use crate::config::{CommandKind, RunConfig, SweepBlock};
use crate::duhamel::{partial_sum, pathsum_envelope, series_tail_bound, smallness_check};
use crate::error::{Error, Result};
use crate::integrate::{gronwall_check, integrate, IntegratorConfig, Trajectory};
use crate::lattice::{
    build_lattice, classify_regime, total_sum, InitSpec, ModeLattice, Params, RegimeLabel,
};
use crate::lyapunov::{decay_monitor, WeightSpec, DECAY_TOL_REL};
use crate::output::{
    self, cascade_csv, fmt_float, functional_csv, pathsum_csv, sweep_csv, trajectory_csv,
    PathsumRow, SweepRow,
};

/// One named check; `passed == None` marks a purely informational line.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub passed: Option<bool>,
    pub detail: String,
}

impl CheckLine {
    fn assert(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckLine {
            name: name.into(),
            passed: Some(passed),
            detail: detail.into(),
        }
    }

    fn info(name: impl Into<String>, detail: impl Into<String>) -> Self {
        CheckLine {
            name: name.into(),
            passed: None,
            detail: detail.into(),
        }
    }
}

/// Result of one run.
#[derive(Debug)]
pub struct RunOutcome {
    pub command: CommandKind,
    pub checks: Vec<CheckLine>,
    pub files: Vec<PathBuf>,
    pub report_path: PathBuf,
}

impl RunOutcome {
    /// Number of asserted checks that failed.
    pub fn failures(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.passed == Some(false))
            .count()
    }
}

fn uniform_samples(tau0: f64, tau_end: f64, count: u32) -> Vec<f64> {
    let span = tau_end - tau0;
    let n = count.max(1);
    (1..=n)
        .map(|i| {
            if i == n {
                tau_end
            } else {
                tau0 + span * (i as f64 / n as f64)
            }
        })
        .collect()
}

fn build_window_lattice(
    window: (i64, i64),
    init: &InitSpec,
    params: &Params,
) -> Result<ModeLattice> {
    build_lattice(params.eta_star, window.0, window.1, init)
}

struct ReportBuilder {
    lines: Vec<String>,
}

impl ReportBuilder {
    fn new(command: CommandKind, config: &RunConfig) -> Self {
        let mut echo = config.clone();
        echo.command = Some(command);
        let json = serde_json::to_string_pretty(&echo)
            .unwrap_or_else(|e| format!("<config serialization failed: {e}>"));
        let lines = vec![
            format!("etachain run report: {command}"),
            String::new(),
            "--- effective config ---".to_string(),
            json,
            String::new(),
            "--- results ---".to_string(),
        ];
        ReportBuilder { lines }
    }

    fn push(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn finish(mut self, checks: &[CheckLine]) -> String {
        self.push(String::new());
        self.push("--- checks ---".to_string());
        for c in checks {
            let tag = match c.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "INFO",
            };
            self.push(format!("{tag} {}: {}", c.name, c.detail));
        }
        let failures = checks.iter().filter(|c| c.passed == Some(false)).count();
        self.push(String::new());
        self.push(if failures == 0 {
            "overall: PASS".to_string()
        } else {
            format!("overall: FAIL ({failures} failed check(s))")
        });
        self.lines.join("\n") + "\n"
    }
}

/// Execute `command` with the given configuration, writing artifacts under
/// `out_dir`. `workers` bounds sweep concurrency (0 = library default).
pub fn run(
    config: &RunConfig,
    command: CommandKind,
    out_dir: &Path,
    workers: usize,
) -> Result<RunOutcome> {
    if let Some(declared) = config.command {
        if declared != command {
            return Err(Error::Config(format!(
                "config declares command `{declared}` but `{command}` was requested"
            )));
        }
    }
    let params = config.params.to_params()?;
    let int_config = config.integrator.to_config();

    let mut report = ReportBuilder::new(command, config);
    let mut checks = Vec::new();
    let mut files = Vec::new();

    match command {
        CommandKind::Classify => {
            let classification = classify_regime(&params);
            report.push(format!("label: {}", classification.label));
            for cond in &classification.conditions {
                report.push(format!(
                    "condition {}: value {} threshold {} satisfied {}",
                    cond.name,
                    fmt_float(cond.value),
                    fmt_float(cond.threshold),
                    cond.satisfied
                ));
            }
            let small = smallness_check(&params);
            report.push(format!(
                "smallness chain: r = {}, delta = {}, r*delta = {} (chain bound {}), pass = {}",
                fmt_float(small.r),
                fmt_float(small.delta),
                fmt_float(small.r_delta),
                fmt_float(small.r_delta_chain_bound),
                small.pass
            ));
            let mut csv = String::from("name,value,threshold,satisfied\n");
            for cond in &classification.conditions {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    cond.name,
                    fmt_float(cond.value),
                    fmt_float(cond.threshold),
                    cond.satisfied
                ));
            }
            let path = out_dir.join("classification.csv");
            output::write_atomic(&path, &csv)?;
            files.push(path);
            checks.push(CheckLine::info(
                "classification",
                classification.label.to_string(),
            ));
        }

        CommandKind::Simulate => {
            let block = config
                .simulate
                .clone()
                .ok_or_else(|| Error::Config("simulate block missing".into()))?;
            let init = block.init.to_init_spec(config.seed)?;
            let lattice = build_window_lattice(block.window, &init, &params)?;
            let sample_times = match &block.sample_times {
                Some(times) => times.clone(),
                None => uniform_samples(lattice.tau(), block.tau_end, block.samples),
            };
            let trajectory =
                integrate(&lattice, &params, &int_config, block.tau_end, &sample_times)?;
            simulate_checks(
                &trajectory,
                &params,
                &int_config,
                &init,
                &mut checks,
                &mut report,
            );

            let path = out_dir.join("trajectory.csv");
            output::write_atomic(&path, &trajectory_csv(&trajectory))?;
            files.push(path);
        }

        CommandKind::Lyapunov => {
            let block = config
                .lyapunov
                .clone()
                .ok_or_else(|| Error::Config("lyapunov block missing".into()))?;
            let init = block.init.to_init_spec(config.seed)?;
            let lattice = build_window_lattice(block.window, &init, &params)?;
            let sample_times = uniform_samples(lattice.tau(), block.tau_end, block.samples);
            let trajectory =
                integrate(&lattice, &params, &int_config, block.tau_end, &sample_times)?;

            let spec = WeightSpec {
                c1: block.c1.unwrap_or(4.0 / params.k),
                c2: block.c2.unwrap_or(1.0 / params.k),
                order_j: block.order,
            };
            spec.validate()?;
            let decay = decay_monitor(&trajectory, &spec, &params);
            report.push(format!(
                "weight: c1 = {}, c2 = {}, orders 0..={}",
                fmt_float(spec.c1),
                fmt_float(spec.c2),
                spec.order_j
            ));
            for series in &decay.orders {
                report.push(format!(
                    "order {}: worst relative increase {}",
                    series.order,
                    fmt_float(series.worst_rel_increase)
                ));
            }
            if decay.regime_ok {
                checks.push(CheckLine::assert(
                    "lyapunov_monotonicity",
                    decay.passed,
                    format!(
                        "functional non-increasing within {DECAY_TOL_REL:.1e} for orders 0..={}",
                        spec.order_j
                    ),
                ));
            } else {
                checks.push(CheckLine::info(
                    "lyapunov_monotonicity",
                    format!(
                        "decay condition 4-2exp(2cL) > 0 not satisfied; monitored only, passed = {}",
                        decay.passed
                    ),
                ));
            }

            let path = out_dir.join("functional.csv");
            output::write_atomic(&path, &functional_csv(&decay))?;
            files.push(path);
        }

        CommandKind::Pathsum => {
            let block = config
                .pathsum
                .clone()
                .ok_or_else(|| Error::Config("pathsum block missing".into()))?;
            let init = block.init.to_init_spec(config.seed)?;
            let lattice = build_window_lattice(block.window, &init, &params)?.with_tau(block.t0);
            let picard = partial_sum(&lattice, &params, block.t0, block.t1, block.j_max as usize)?;
            let trajectory = integrate(&lattice, &params, &int_config, block.t1, &[])?;
            let (_, integrated) = trajectory.last();

            let tail = series_tail_bound(&params, block.t1 - block.t0, block.j_max as usize)
                * lattice.l1_norm();
            let mut rows = Vec::new();
            let mut worst = 0.0f64;
            for n in picard.n_min()..=picard.n_max() {
                let a = picard.amplitude(n);
                let b = integrated.amplitude(n);
                let diff = (a - b).norm();
                worst = worst.max(diff);
                rows.push(PathsumRow {
                    eta: params.eta_star + n as f64,
                    re_partial: a.re,
                    im_partial: a.im,
                    re_integrated: b.re,
                    im_integrated: b.im,
                    abs_diff: diff,
                });
            }
            report.push(format!(
                "depth {} partial sum vs integration: worst |diff| = {}, tail bound = {}",
                block.j_max,
                fmt_float(worst),
                fmt_float(tail)
            ));
            checks.push(CheckLine::assert(
                "pathsum_tail_bound",
                worst <= tail,
                format!(
                    "worst |diff| {} <= tail bound {}",
                    fmt_float(worst),
                    fmt_float(tail)
                ),
            ));

            let path = out_dir.join("pathsum.csv");
            output::write_atomic(&path, &pathsum_csv(&rows, tail))?;
            files.push(path);
        }

        CommandKind::Cascade => {
            let block = config.cascade.clone().unwrap_or_default();
            let init = block.init.to_init_spec(config.seed)?;
            let lattice = build_window_lattice(block.window, &init, &params)?;
            let cascade = run_cascade(&params, &lattice, block.j_max, &int_config)?;
            cascade_checks(&cascade, &params, &mut checks, &mut report);

            let path = out_dir.join("cascade.csv");
            output::write_atomic(&path, &cascade_csv(&cascade))?;
            files.push(path);
        }

        CommandKind::Sweep => {
            let block = config
                .sweep
                .clone()
                .ok_or_else(|| Error::Config("sweep block missing".into()))?;
            let rows = sweep(&block, &params, &int_config, workers)?;
            let all_ok = rows
                .iter()
                .all(|r| r.check_pass != Some(false) && r.error.is_none());
            for r in &rows {
                report.push(format!(
                    "cell c = {}, L = {}: {} check {} -> {:?}{}",
                    fmt_float(r.c),
                    fmt_float(r.torus_length),
                    r.label,
                    r.check,
                    r.check_pass,
                    r.error
                        .as_deref()
                        .map(|e| format!(" error: {e}"))
                        .unwrap_or_default()
                ));
            }
            checks.push(CheckLine::assert(
                "sweep_theorem_checks",
                all_ok,
                format!("{} grid cells", rows.len()),
            ));

            let path = out_dir.join("sweep.csv");
            output::write_atomic(&path, &sweep_csv(&rows))?;
            files.push(path);
        }
    }

    let report_text = report.finish(&checks);
    let report_path = out_dir.join("report.txt");
    output::write_atomic(&report_path, &report_text)?;

    Ok(RunOutcome {
        command,
        checks,
        files,
        report_path,
    })
}

fn simulate_checks(
    trajectory: &Trajectory,
    params: &Params,
    int_config: &IntegratorConfig,
    init: &InitSpec,
    checks: &mut Vec<CheckLine>,
    report: &mut ReportBuilder,
) {
    let (_, initial) = trajectory.initial();
    let initial_sum = total_sum(initial);
    let mut worst_drift = 0.0f64;
    for (_, state) in &trajectory.samples {
        worst_drift = worst_drift.max((total_sum(state) - initial_sum).norm());
    }
    let l1 = initial.l1_norm();
    report.push(format!(
        "steps: {} accepted, {} rejected; boundary max {}",
        trajectory.stats.accepted,
        trajectory.stats.rejected,
        fmt_float(trajectory.boundary_max)
    ));
    report.push(format!(
        "worst |total_sum drift| = {}",
        fmt_float(worst_drift)
    ));
    if trajectory.boundary_max <= int_config.window.boundary_tol {
        checks.push(CheckLine::assert(
            "conservation",
            worst_drift <= 1e-8 * l1.max(f64::MIN_POSITIVE),
            format!(
                "drift {} <= 1e-8 * l1 norm {}",
                fmt_float(worst_drift),
                fmt_float(l1)
            ),
        ));
    } else {
        checks.push(CheckLine::info(
            "conservation",
            format!(
                "boundary max {} exceeded the tolerance; drift {} reported only",
                fmt_float(trajectory.boundary_max),
                fmt_float(worst_drift)
            ),
        ));
    }

    let gronwall = gronwall_check(trajectory, params);
    checks.push(CheckLine::assert(
        "gronwall_envelope",
        gronwall.passed,
        format!(
            "worst log margin {} against rate c*L^2 = {}",
            fmt_float(gronwall.worst_log_margin),
            fmt_float(gronwall.envelope_rate)
        ),
    ));

    // Pointwise deviation envelope for single-mode data in the path-sum regime.
    if let InitSpec::Delta { index } = init {
        if classify_regime(params).label == RegimeLabel::PathsumStable {
            let mut worst_ratio = 0.0f64;
            let mut violations = 0usize;
            for (_, state) in &trajectory.samples {
                for n in state.n_min()..=state.n_max() {
                    let initial_amp = initial.amplitude(n);
                    let dev = (state.amplitude(n) - initial_amp).norm();
                    let dist = crate::duhamel::lattice_distance(n, *index);
                    let bound =
                        pathsum_envelope(params, dist).expect("pathsum regime implies 2d < 1");
                    if dev > bound {
                        violations += 1;
                    }
                    worst_ratio = worst_ratio.max(dev / bound);
                }
            }
            checks.push(CheckLine::assert(
                "pathsum_stability_envelope",
                violations == 0,
                format!("worst deviation/bound ratio {}", fmt_float(worst_ratio)),
            ));
        }
    }
}

fn cascade_checks(
    cascade: &crate::cascade::CascadeReport,
    params: &Params,
    checks: &mut Vec<CheckLine>,
    report: &mut ReportBuilder,
) {
    for step in &cascade.steps {
        report.push(format!(
            "j = {}: T = {}, res = {}, sup = {}, dominant = {}, ratio = {}",
            step.j,
            fmt_float(step.time),
            fmt_float(step.resonant_amp),
            fmt_float(step.sup_amp),
            step.dominant,
            step.ratio.map(fmt_float).unwrap_or_else(|| "-".into())
        ));
    }
    let diag = cascade.rho_diagnostic_threshold();
    let below_diag: Vec<u32> = cascade
        .ratios()
        .filter(|(_, r)| *r < diag)
        .map(|(j, _)| j)
        .collect();
    report.push(format!(
        "diagnostic: (3/4)*r_exact = {}; ratios below it: {:?}",
        fmt_float(diag),
        below_diag
    ));
    if let Some(w) = &cascade.regime_warning {
        report.push(format!("warning: {w}"));
    }
    if !cascade.hypothesis_ok {
        report.push("warning: initial data violates |w0(0)| >= 0.5*max|w0|".to_string());
    }

    let asserted = cascade.regime_warning.is_none();
    let min_ratio = cascade
        .ratios()
        .map(|(_, r)| r)
        .fold(f64::INFINITY, f64::min);
    let growth = verify_growth(cascade, params);
    if asserted {
        checks.push(CheckLine::assert(
            "cascade_dominance",
            cascade.all_dominant(),
            "resonant amplitude >= 0.5 * sup at every T_j",
        ));
        checks.push(CheckLine::assert(
            "cascade_ratio_floor",
            cascade.ratios().count() > 0 && min_ratio >= RATIO_FLOOR,
            format!(
                "min ratio {} >= {}",
                fmt_float(min_ratio),
                fmt_float(RATIO_FLOOR)
            ),
        ));
        let (ok, detail) = match growth {
            GrowthVerdict::Verified { worst_margin } => (
                true,
                format!(
                    "all |w(T_j, j)| >= d^j, worst margin {}",
                    fmt_float(worst_margin)
                ),
            ),
            GrowthVerdict::NotApplicable { d_grow } => (
                true,
                format!("d = {} <= 1, bound vacuous", fmt_float(d_grow)),
            ),
            GrowthVerdict::Failed {
                j,
                amplitude,
                required,
            } => (
                false,
                format!(
                    "step {}: amplitude {} < required {}",
                    j,
                    fmt_float(amplitude),
                    fmt_float(required)
                ),
            ),
        };
        checks.push(CheckLine::assert("cascade_growth", ok, detail));
    } else {
        checks.push(CheckLine::info(
            "cascade_growth",
            format!("not asserted outside the unstable regime; verdict {growth:?}"),
        ));
    }
}

/// Grid scan: classification plus the applicable theorem check per cell.
///
/// Cells run concurrently (bounded by `workers`; 0 keeps the global default)
/// but rows come back in grid order, so the summary is byte-identical to a
/// serial run.
pub fn sweep(
    block: &SweepBlock,
    base: &Params,
    int_config: &IntegratorConfig,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    let mut cells = Vec::new();
    for &c in &block.c_values {
        for &l in &block.l_values {
            cells.push((c, l));
        }
    }

    let run_cell = |&(c, l): &(f64, f64)| -> SweepRow {
        match sweep_cell(c, l, base.eta_star, block, int_config) {
            Ok(row) => row,
            Err(e) => SweepRow {
                c,
                torus_length: l,
                label: "ERROR".into(),
                max_growth_ratio: None,
                check: "error",
                check_pass: None,
                error: Some(e.to_string()),
            },
        }
    };

    let rows: Vec<SweepRow> = if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run_cell).collect())
    } else {
        cells.par_iter().map(run_cell).collect()
    };
    Ok(rows)
}

fn sweep_cell(
    c: f64,
    l: f64,
    eta_star: f64,
    block: &SweepBlock,
    int_config: &IntegratorConfig,
) -> Result<SweepRow> {
    let params = Params::from_length(c, l)?.with_eta_star(eta_star)?;
    let classification = classify_regime(&params);
    let label = classification.label.to_string();

    match classification.label {
        RegimeLabel::Unstable => {
            let init = build_lattice(params.eta_star, -8, 8, &InitSpec::Delta { index: 0 })?;
            let cascade = run_cascade(&params, &init, block.cascade_j, int_config)?;
            let max_ratio = cascade
                .ratios()
                .map(|(_, r)| r)
                .fold(f64::NEG_INFINITY, f64::max);
            let pass = verify_growth(&cascade, &params).is_verified() && cascade.all_dominant();
            Ok(SweepRow {
                c,
                torus_length: l,
                label,
                max_growth_ratio: if max_ratio.is_finite() {
                    Some(max_ratio)
                } else {
                    None
                },
                check: "cascade_growth",
                check_pass: Some(pass),
                error: None,
            })
        }
        RegimeLabel::PathsumStable | RegimeLabel::LyapunovStable => {
            let init = build_lattice(params.eta_star, -8, 8, &InitSpec::Delta { index: 0 })?;
            let samples = uniform_samples(0.0, block.tau_end, 41);
            let trajectory = integrate(&init, &params, int_config, block.tau_end, &samples)?;
            let sup0 = init.sup_abs();
            let mut max_growth = 0.0f64;
            for (_, state) in &trajectory.samples {
                max_growth = max_growth.max(state.sup_abs() / sup0);
            }
            let pass = if classification.label == RegimeLabel::PathsumStable {
                // Envelope factor 2 plus the pointwise deviation bound.
                let mut ok = max_growth <= 2.0;
                for (_, state) in &trajectory.samples {
                    for n in state.n_min()..=state.n_max() {
                        let dev = (state.amplitude(n) - init.amplitude(n)).norm();
                        let bound =
                            pathsum_envelope(&params, crate::duhamel::lattice_distance(n, 0))?;
                        if dev > bound {
                            ok = false;
                        }
                    }
                }
                ok
            } else {
                let spec = WeightSpec::decay_choice(&params);
                let decay = decay_monitor(&trajectory, &spec, &params);
                max_growth <= 2.0 && decay.passed
            };
            Ok(SweepRow {
                c,
                torus_length: l,
                label,
                max_growth_ratio: Some(max_growth),
                check: "stable_envelope",
                check_pass: Some(pass),
                error: None,
            })
        }
        RegimeLabel::Indeterminate => Ok(SweepRow {
            c,
            torus_length: l,
            label,
            max_growth_ratio: None,
            check: "none",
            check_pass: None,
            error: None,
        }),
    }
}
