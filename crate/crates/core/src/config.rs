//! Run configuration: a flat JSON document with a params block, an integrator
//! block, and one block per command, all defaults echoed back on parse.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{IntegratorConfig, WindowPolicy};
use crate::lattice::{InitSpec, Params};

/// The six run commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Simulate,
    Lyapunov,
    Pathsum,
    Cascade,
    Classify,
    Sweep,
}

impl std::fmt::Display for CommandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Lyapunov => "lyapunov",
            CommandKind::Pathsum => "pathsum",
            CommandKind::Cascade => "cascade",
            CommandKind::Classify => "classify",
            CommandKind::Sweep => "sweep",
        };
        f.write_str(s)
    }
}

/// Physical parameters; exactly one of `k` or `L` may be omitted (the other
/// is derived from k·L = 1), and if both are given they must be consistent.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub torus_length: Option<f64>,
    #[serde(default)]
    pub eta_star: f64,
}

impl ParamsBlock {
    pub fn to_params(&self) -> Result<Params> {
        let params = match (self.k, self.torus_length) {
            (None, None) => {
                return Err(Error::Config(
                    "params: one of `k` or `L` is required".into(),
                ))
            }
            (Some(k), None) => Params::from_k(self.c, k)?,
            (None, Some(l)) => Params::from_length(self.c, l)?,
            (Some(k), Some(l)) => {
                if (k * l - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "params: k and L are inconsistent, kL = {} but the convention requires kL = 1",
                        k * l
                    )));
                }
                Params::from_length(self.c, l)?
            }
        };
        params.with_eta_star(self.eta_star)
    }
}

/// Integrator settings (flat mirror of [`IntegratorConfig`]).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorBlock {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub resonance_cap_factor: f64,
    pub window_initial_radius: i64,
    pub window_growth_margin: i64,
    pub window_boundary_tol: f64,
    pub window_max_modes: usize,
}

impl Default for IntegratorBlock {
    fn default() -> Self {
        let c = IntegratorConfig::default();
        IntegratorBlock {
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
            max_step: c.max_step,
            resonance_cap_factor: c.resonance_cap_factor,
            window_initial_radius: c.window.initial_radius,
            window_growth_margin: c.window.growth_margin,
            window_boundary_tol: c.window.boundary_tol,
            window_max_modes: c.window.max_modes,
        }
    }
}

impl IntegratorBlock {
    pub fn to_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            resonance_cap_factor: self.resonance_cap_factor,
            window: WindowPolicy {
                initial_radius: self.window_initial_radius,
                growth_margin: self.window_growth_margin,
                boundary_tol: self.window_boundary_tol,
                max_modes: self.window_max_modes,
            },
            max_steps: IntegratorConfig::default().max_steps,
        }
    }
}

/// Initial data description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum InitBlock {
    Delta {
        #[serde(default)]
        index: i64,
    },
    /// Modes as (index, re, im) triples.
    Support { modes: Vec<(i64, f64, f64)> },
    /// Uses the run seed; an explicit seed is required.
    Random,
}

impl Default for InitBlock {
    fn default() -> Self {
        InitBlock::Delta { index: 0 }
    }
}

impl InitBlock {
    pub fn to_init_spec(&self, seed: Option<u64>) -> Result<InitSpec> {
        match self {
            InitBlock::Delta { index } => Ok(InitSpec::Delta { index: *index }),
            InitBlock::Support { modes } => Ok(InitSpec::Support {
                modes: modes
                    .iter()
                    .map(|(n, re, im)| (*n, Complex64::new(*re, *im)))
                    .collect(),
            }),
            InitBlock::Random => match seed {
                Some(s) => Ok(InitSpec::RandomComplex { seed: s }),
                None => Err(Error::Config("random init requires a seed".into())),
            },
        }
    }

    fn needs_seed(&self) -> bool {
        matches!(self, InitBlock::Random)
    }
}

fn default_simulate_window() -> (i64, i64) {
    (-16, 16)
}

fn default_samples() -> u32 {
    101
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub tau_end: f64,
    #[serde(default = "default_simulate_window")]
    pub window: (i64, i64),
    #[serde(default)]
    pub init: InitBlock,
    /// Number of uniform sample intervals over [0, tau_end].
    #[serde(default = "default_samples")]
    pub samples: u32,
    /// Explicit sample times override the uniform grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_times: Option<Vec<f64>>,
}

fn default_lyapunov_window() -> (i64, i64) {
    (-10, 10)
}

fn default_order() -> u32 {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LyapunovBlock {
    pub tau_end: f64,
    #[serde(default = "default_lyapunov_window")]
    pub window: (i64, i64),
    #[serde(default)]
    pub init: InitBlock,
    #[serde(default = "default_samples")]
    pub samples: u32,
    /// Weight strength; defaults to 4/k.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    /// Weight slope; defaults to 1/k.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default = "default_order")]
    pub order: u32,
}

fn default_pathsum_window() -> (i64, i64) {
    (-3, 3)
}

fn default_depth() -> u32 {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PathsumBlock {
    pub t1: f64,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_pathsum_window")]
    pub window: (i64, i64),
    #[serde(default)]
    pub init: InitBlock,
    #[serde(default = "default_depth")]
    pub j_max: u32,
}

fn default_cascade_j() -> u32 {
    6
}

fn default_cascade_window() -> (i64, i64) {
    (-16, 16)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CascadeBlock {
    #[serde(default = "default_cascade_j")]
    pub j_max: u32,
    #[serde(default = "default_cascade_window")]
    pub window: (i64, i64),
    #[serde(default)]
    pub init: InitBlock,
}

impl Default for CascadeBlock {
    fn default() -> Self {
        CascadeBlock {
            j_max: default_cascade_j(),
            window: default_cascade_window(),
            init: InitBlock::default(),
        }
    }
}

fn default_sweep_cascade_j() -> u32 {
    4
}

fn default_sweep_tau_end() -> f64 {
    10.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub c_values: Vec<f64>,
    #[serde(rename = "L_values")]
    pub l_values: Vec<f64>,
    #[serde(default = "default_sweep_cascade_j")]
    pub cascade_j: u32,
    #[serde(default = "default_sweep_tau_end")]
    pub tau_end: f64,
}

/// Top-level run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    pub params: ParamsBlock,
    #[serde(default)]
    pub integrator: IntegratorBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pathsum: Option<PathsumBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cascade: Option<CascadeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        self.params.to_params()?;
        let needs_seed = self.simulate.as_ref().is_some_and(|b| b.init.needs_seed())
            || self.lyapunov.as_ref().is_some_and(|b| b.init.needs_seed())
            || self.pathsum.as_ref().is_some_and(|b| b.init.needs_seed())
            || self.cascade.as_ref().is_some_and(|b| b.init.needs_seed());
        if needs_seed && self.seed.is_none() {
            return Err(Error::Config(
                "random init requires a top-level seed".into(),
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.c_values.is_empty() || sweep.l_values.is_empty() {
                return Err(Error::Config(
                    "sweep: c_values and L_values must be nonempty".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Parse and validate a configuration document.
///
/// Unknown keys, missing required keys, and a k/L inconsistency are all
/// reported with serde's line/column diagnostics where available.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_cascade_config_fills_defaults() {
        let cfg = parse_config(
            r#"{"command": "cascade", "params": {"c": 0.03, "L": 300.0}, "cascade": {"j_max": 6}}"#,
        )
        .unwrap();
        assert_eq!(cfg.command, Some(CommandKind::Cascade));
        let block = cfg.cascade.clone().unwrap();
        assert_eq!(block.j_max, 6);
        assert_eq!(block.window, (-16, 16));
        assert_eq!(block.init, InitBlock::Delta { index: 0 });
        assert_eq!(cfg.integrator, IntegratorBlock::default());
        let p = cfg.params.to_params().unwrap();
        assert_eq!(p.torus_length, 300.0);
        assert_eq!(p.k, 1.0 / 300.0);
    }

    #[test]
    fn consistent_k_and_l_accepted() {
        let cfg =
            parse_config(r#"{"params": {"c": 0.03, "k": 0.0033333333333333335, "L": 300.0}}"#)
                .unwrap();
        let p = cfg.params.to_params().unwrap();
        assert_eq!(p.torus_length, 300.0);
    }

    #[test]
    fn inconsistent_k_and_l_rejected() {
        let err = parse_config(r#"{"params": {"c": 0.03, "k": 1.0, "L": 300.0}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("inconsistent") && msg.contains("kL"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let err = parse_config("{\n  \"params\": {\"c\": 0.03, \"L\": 300.0},\n  \"oops\": 1\n}")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("oops") && msg.contains("line"), "{msg}");
    }

    #[test]
    fn missing_required_key_rejected() {
        let err = parse_config(r#"{"params": {"L": 300.0}}"#).unwrap_err();
        assert!(err.to_string().contains("`c`"), "{err}");
        let err = parse_config(r#"{"params": {"c": 0.03}}"#).unwrap_err();
        assert!(err.to_string().contains("one of `k` or `L`"), "{err}");
    }

    #[test]
    fn random_init_requires_seed() {
        let err = parse_config(
            r#"{"params": {"c": 0.03, "k": 1.0},
                "lyapunov": {"tau_end": 10.0, "init": {"type": "random"}}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");

        let ok = parse_config(
            r#"{"params": {"c": 0.03, "k": 1.0}, "seed": 7,
                "lyapunov": {"tau_end": 10.0, "init": {"type": "random"}}}"#,
        )
        .unwrap();
        assert_eq!(ok.seed, Some(7));
    }

    #[test]
    fn config_echo_round_trips() {
        let text = r#"{"command": "simulate",
            "params": {"c": 0.03, "k": 1.0},
            "simulate": {"tau_end": 50.0}}"#;
        let cfg = parse_config(text).unwrap();
        let echoed = serde_json::to_string_pretty(&cfg).unwrap();
        let back = parse_config(&echoed).unwrap();
        assert_eq!(cfg, back);
        // Defaults are visible in the echo.
        assert!(echoed.contains("rel_tol"));
    }
}
