//! Nearest-neighbor paths, their iterated Duhamel integrals, partial series
//! sums (Picard iterates), and the closed-form constants of the two path-sum
//! arguments (stability for small cL, resonant growth for large cL).
//!
//! A path of length j from η0 to η1 is a walk (γ_0, ..., γ_j) with unit steps.
//! Its Duhamel integral is the ordered-time iterated integral of the step
//! factors; it is evaluated here by the nested running-integral scheme
//! F_0 ≡ 1, F_{i+1}(τ) = ∫_{t0}^{τ} factor(γ_i, s)·F_i(s) ds, which turns a
//! j-dimensional simplex integral into a triangular linear ODE along the path.
//!
//! Two factor conventions are first-class: the unsigned `c` convention used by
//! all closed-form bounds, and the exact signed `c/2` convention of the
//! dynamics (upward steps +, downward steps −). Dynamical identities are
//! always checked in the exact convention.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{ModeLattice, Params};
use crate::rk;

/// Default cap on enumerated or summed paths.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

// Tolerance per accepted step of the path ODE; the acceptance comparisons
// need the summed path integrals accurate to well below 1e-9.
const PATH_ODE_TOL: f64 = 1e-13;

/// Factor convention for path integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Convention {
    /// Unsigned factor c/(k² + (γ_i − τ)²): the bound-side convention.
    UnsignedC,
    /// Signed factor σ_i·(c/2)/(k² + (γ_i − τ)²): the exact dynamics.
    ExactHalfCSigned,
}

/// A nearest-neighbor walk on the lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    nodes: Vec<i64>,
}

impl Path {
    /// Validate unit steps and minimum length 1.
    pub fn new(nodes: Vec<i64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidInput(
                "a path needs at least two nodes".into(),
            ));
        }
        for w in nodes.windows(2) {
            if (w[1] - w[0]).abs() != 1 {
                return Err(Error::InvalidInput(format!(
                    "consecutive path nodes must differ by 1: {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Path { nodes })
    }

    pub fn nodes(&self) -> &[i64] {
        &self.nodes
    }

    /// Number of steps |γ| (always at least 1).
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> i64 {
        self.nodes[0]
    }

    pub fn end(&self) -> i64 {
        *self.nodes.last().expect("paths are nonempty")
    }

    /// Per-step signs: +1 for an upward step, −1 for a downward step.
    pub fn step_signs(&self) -> Vec<i8> {
        self.nodes.windows(2).map(|w| (w[1] - w[0]) as i8).collect()
    }

    /// Product of the step signs.
    pub fn sign(&self) -> f64 {
        let downs = self.nodes.windows(2).filter(|w| w[1] < w[0]).count();
        if downs % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Shortest nontrivial path length between two lattice indices:
/// |a − b| when distinct, 2 when equal (leave and come back).
pub fn lattice_distance(a: i64, b: i64) -> u64 {
    if a == b {
        2
    } else {
        a.abs_diff(b)
    }
}

/// All paths from `eta0` to `eta1` of length at most `max_len`, ordered by
/// length then lexicographically by node sequence.
pub fn enumerate_paths(eta0: i64, eta1: i64, max_len: usize) -> Result<Vec<Path>> {
    enumerate_paths_capped(eta0, eta1, max_len, DEFAULT_PATH_CAP)
}

/// [`enumerate_paths`] with an explicit cap on the number of paths.
pub fn enumerate_paths_capped(
    eta0: i64,
    eta1: i64,
    max_len: usize,
    cap: usize,
) -> Result<Vec<Path>> {
    if max_len < 1 {
        return Err(Error::InvalidInput("max_len must be at least 1".into()));
    }
    let mut out = Vec::new();
    let dist = lattice_distance(eta0, eta1) as usize;
    for len in 1..=max_len {
        if len < dist || !(len - eta0.abs_diff(eta1) as usize).is_multiple_of(2) {
            continue;
        }
        let mut current = Vec::with_capacity(len + 1);
        current.push(eta0);
        dfs_paths(&mut current, len, eta1, cap, &mut out)?;
    }
    Ok(out)
}

fn dfs_paths(
    current: &mut Vec<i64>,
    steps_left: usize,
    target: i64,
    cap: usize,
    out: &mut Vec<Path>,
) -> Result<()> {
    if steps_left == 0 {
        if out.len() >= cap {
            return Err(Error::PathCapExceeded { cap });
        }
        out.push(Path {
            nodes: current.clone(),
        });
        return Ok(());
    }
    let last = *current.last().expect("current path is nonempty");
    for step in [-1i64, 1] {
        let next = last + step;
        let remaining = steps_left - 1;
        let need = next.abs_diff(target) as usize;
        if need <= remaining && (remaining - need).is_multiple_of(2) {
            current.push(next);
            dfs_paths(current, remaining, target, cap, out)?;
            current.pop();
        }
    }
    Ok(())
}

/// A computed path integral.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathIntegralResult {
    pub value: f64,
    pub convention: Convention,
    /// Accumulated local error estimate of the evaluation.
    pub quadrature_error: f64,
}

fn effective_c(params: &Params, convention: Convention) -> f64 {
    match convention {
        Convention::UnsignedC => params.c,
        Convention::ExactHalfCSigned => 0.5 * params.c,
    }
}

/// Unsigned integral of one step factor over the whole interval:
/// (c_eff/k)·[arctan((t1−γ)/k) − arctan((t0−γ)/k)].
pub fn single_step_bound(
    params: &Params,
    node: i64,
    t0: f64,
    t1: f64,
    convention: Convention,
) -> f64 {
    let gamma = params.eta_star + node as f64;
    let ce = effective_c(params, convention);
    ce / params.k * (((t1 - gamma) / params.k).atan() - ((t0 - gamma) / params.k).atan())
}

/// Step cap near the path's own resonance peaks (the node frequencies).
fn path_step_cap(tau: f64, peaks: &[f64], k: f64, cap_factor: f64) -> f64 {
    let cap = cap_factor * k;
    let zone = 10.0 * k;
    let mut entry_min = f64::INFINITY;
    for &p in peaks {
        let d = p - tau;
        if d.abs() < zone {
            return cap;
        }
        if d > 0.0 {
            entry_min = entry_min.min(d - zone);
        }
    }
    if entry_min.is_finite() {
        entry_min.max(cap)
    } else {
        f64::INFINITY
    }
}

/// Ordered-time iterated integral of the path's step factors over [t0, t1].
pub fn path_integral(
    path: &Path,
    params: &Params,
    t0: f64,
    t1: f64,
    convention: Convention,
) -> Result<PathIntegralResult> {
    params.validate()?;
    if !(t0 < t1) {
        return Err(Error::InvalidInput(format!(
            "need t0 < t1, got [{t0}, {t1}]"
        )));
    }
    let sign = match convention {
        Convention::UnsignedC => 1.0,
        Convention::ExactHalfCSigned => path.sign(),
    };

    if path.len() == 1 {
        // Single step: the running integral is the arctan antiderivative.
        let magnitude = single_step_bound(params, path.nodes[0], t0, t1, convention);
        return Ok(PathIntegralResult {
            value: sign * magnitude,
            convention,
            quadrature_error: 4.0 * f64::EPSILON * magnitude.abs(),
        });
    }

    // Triangular linear ODE along the path: F_0 ≡ 1,
    // F_{i+1}' = factor(γ_i, τ)·F_i, solved with the embedded pair.
    let ce = effective_c(params, convention);
    let k = params.k;
    let k2 = k * k;
    let gammas: Vec<f64> = path.nodes[..path.len()]
        .iter()
        .map(|n| params.eta_star + *n as f64)
        .collect();

    let mut rhs = |t: f64, y: &[f64], out: &mut [f64]| {
        out[0] = 0.0;
        for (i, g) in gammas.iter().enumerate() {
            let d = g - t;
            out[i + 1] = ce / (k2 + d * d) * y[i];
        }
    };

    let mut y = vec![0.0; path.len() + 1];
    y[0] = 1.0;
    let mut t = t0;
    let mut h = (t1 - t0) / 8.0;
    let mut total_err = 0.0;
    let mut guard: u64 = 0;

    while t < t1 {
        guard += 1;
        if guard > 20_000_000 {
            return Err(Error::IntegrationFailure(format!(
                "path integral step budget exhausted at t = {t}"
            )));
        }
        let cap = path_step_cap(t, &gammas, k, 0.5);
        let remaining = t1 - t;
        let h_eff = h.min(cap).min(remaining);
        let (y_new, err_vec) = rk::dopri5_step(&mut rhs, t, &y, h_eff);
        let err = rk::l2_norm(&err_vec);
        let tol = PATH_ODE_TOL * (1.0 + rk::l2_norm(&y));
        if err <= tol {
            y = y_new;
            t = if h_eff == remaining { t1 } else { t + h_eff };
            total_err += err;
            h = h_eff * rk::next_step_factor(err, tol);
        } else {
            h = h_eff / 2.0;
            if h < 1e-15 * t.abs().max(1.0) {
                return Err(Error::QuadratureNonConvergence { a: t, b: t1, err });
            }
        }
    }

    Ok(PathIntegralResult {
        value: sign * y[path.len()],
        convention,
        quadrature_error: total_err,
    })
}

/// Product of per-step unsigned full-interval integrals; dominates the path
/// integral's magnitude (the ordered simplex is a subset of the box).
pub fn single_step_bound_product(
    path: &Path,
    params: &Params,
    t0: f64,
    t1: f64,
    convention: Convention,
) -> f64 {
    path.nodes[..path.len()]
        .iter()
        .map(|n| single_step_bound(params, *n, t0, t1, convention))
        .product()
}

/// Truncated path-sum propagation of finitely supported data from t0 to t1:
/// the output is the Picard iterate of depth `j_max` of the integral equation,
/// with exact signed weights.
///
/// `omega0` is taken as data at `t0` regardless of its time stamp; the output
/// lives on the same window and is stamped `t1`. Depth 0 returns the data
/// unchanged.
pub fn partial_sum(
    omega0: &ModeLattice,
    params: &Params,
    t0: f64,
    t1: f64,
    j_max: usize,
) -> Result<ModeLattice> {
    partial_sum_capped(omega0, params, t0, t1, j_max, DEFAULT_PATH_CAP)
}

/// [`partial_sum`] with an explicit path cap.
pub fn partial_sum_capped(
    omega0: &ModeLattice,
    params: &Params,
    t0: f64,
    t1: f64,
    j_max: usize,
    cap: usize,
) -> Result<ModeLattice> {
    params.validate()?;
    if j_max > 0 && !(t0 < t1) {
        return Err(Error::InvalidInput(format!(
            "need t0 < t1, got [{t0}, {t1}]"
        )));
    }

    let mut out = omega0.amplitudes().to_vec();
    if j_max == 0 {
        return Ok(ModeLattice::from_parts(
            t1,
            omega0.eta_star(),
            omega0.n_min(),
            omega0.n_max(),
            out,
        ));
    }

    let sources: Vec<(i64, Complex64)> = omega0
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(i, a)| (omega0.n_min() + i as i64, *a))
        .collect();

    // 2^(j+1) − 2 sign sequences of length <= j per source.
    let per_source = (1usize << (j_max + 1)) - 2;
    if sources.len().saturating_mul(per_source) > cap {
        return Err(Error::PathCapExceeded { cap });
    }

    for (n0, amp0) in &sources {
        let walker = PathWalker {
            params,
            t0,
            t1,
            amp0: *amp0,
            window: omega0,
        };
        let mut nodes = vec![*n0];
        walker.accumulate(&mut nodes, j_max, &mut out)?;
    }

    Ok(ModeLattice::from_parts(
        t1,
        omega0.eta_star(),
        omega0.n_min(),
        omega0.n_max(),
        out,
    ))
}

// Depth-first walk over all sign sequences from one source mode; every
// prefix is itself a path and contributes its integral to its endpoint.
struct PathWalker<'a> {
    params: &'a Params,
    t0: f64,
    t1: f64,
    amp0: Complex64,
    window: &'a ModeLattice,
}

impl PathWalker<'_> {
    fn accumulate(
        &self,
        nodes: &mut Vec<i64>,
        depth_left: usize,
        out: &mut [Complex64],
    ) -> Result<()> {
        if depth_left == 0 {
            return Ok(());
        }
        let last = *nodes.last().expect("prefix is nonempty");
        for step in [-1i64, 1] {
            let endpoint = last + step;
            nodes.push(endpoint);
            if let Some(idx) = self.window.index_of(endpoint) {
                let path = Path {
                    nodes: nodes.clone(),
                };
                let integral = path_integral(
                    &path,
                    self.params,
                    self.t0,
                    self.t1,
                    Convention::ExactHalfCSigned,
                )?;
                out[idx] += self.amp0 * integral.value;
            }
            self.accumulate(nodes, depth_left - 1, out)?;
            nodes.pop();
        }
        Ok(())
    }
}

/// j-th series term bound (C_b·t)^j / j! with C_b = c·L²
/// (two neighbors, each coefficient at most (c/2)·L²).
pub fn series_term(params: &Params, t: f64, j: usize) -> f64 {
    let x = params.c * params.torus_length * params.torus_length * t;
    if x == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let ln_term = (j as f64) * x.ln() - ln_factorial(j);
    ln_term.exp()
}

/// Tail bound Σ_{j > J} (C_b·t)^j/j! ≤ (C_b·t)^(J+1)/(J+1)! · exp(C_b·t),
/// evaluated in log space.
pub fn series_tail_bound(params: &Params, t: f64, j_max: usize) -> f64 {
    let x = params.c * params.torus_length * params.torus_length * t;
    if x == 0.0 {
        return 0.0;
    }
    let j1 = j_max + 1;
    let ln_bound = x + (j1 as f64) * x.ln() - ln_factorial(j1);
    ln_bound.exp()
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// The non-resonant step bound δ = 4c with the sharper sup-value bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NonresonantBound {
    /// δ = 4c.
    pub delta: f64,
    /// Sharper bound c/(k² + 1/4) × (unit interval length).
    pub sharp: f64,
    /// Whether δ < 1/4 (required by the resonant-growth smallness chain).
    pub delta_below_quarter: bool,
}

/// Bound on ∫ over a unit time window of the step factor at distance ≥ 1 from
/// the resonance: the integrand is at most c/(k² + 1/4) ≤ 4c there.
pub fn nonresonant_bound(params: &Params) -> NonresonantBound {
    let delta = params.delta();
    let sharp = params.c / (params.k * params.k + 0.25);
    NonresonantBound {
        delta,
        sharp,
        delta_below_quarter: delta < 0.25,
    }
}

/// The single-resonance gain r = (2c/k)·arctan(1/(2k)); approaches c·π/k as
/// k → 0.
pub fn resonance_gain(params: &Params) -> f64 {
    params.r_unsigned()
}

/// Report on the smallness chain rδ < 1/4, δ < 1/4, r > 10.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmallnessReport {
    pub r: f64,
    pub delta: f64,
    pub r_delta: f64,
    /// The chain's comparison value 8·π·c²·L (an upper bound for rδ).
    pub r_delta_chain_bound: f64,
    pub r_delta_ok: bool,
    pub delta_ok: bool,
    pub r_ok: bool,
    pub pass: bool,
}

/// Evaluate each smallness inequality separately with numeric margins.
///
/// The three inequalities are reported independently because desk-scale
/// unstable parameters generally fail the rδ < 1/4 requirement even while the
/// cascade mechanism operates.
pub fn smallness_check(params: &Params) -> SmallnessReport {
    let r = params.r_unsigned();
    let delta = params.delta();
    let r_delta = r * delta;
    let r_delta_chain_bound =
        8.0 * std::f64::consts::PI * params.c * params.c * params.torus_length;
    let r_delta_ok = r_delta < 0.25;
    let delta_ok = delta < 0.25;
    let r_ok = r > 10.0;
    SmallnessReport {
        r,
        delta,
        r_delta,
        r_delta_chain_bound,
        r_delta_ok,
        delta_ok,
        r_ok,
        pass: r_delta_ok && delta_ok && r_ok,
    }
}

/// Closed-form bound on the total contribution of resonant paths from η0 to η
/// across the window around the resonance at j:
/// (1−2δ)⁻³·(1−2rδ)⁻¹·r·(2δ)^(|η0−j| + min(|η−j+1|, |η−j−1|)).
pub fn resonant_path_bound(params: &Params, eta0: i64, eta: i64, j: i64) -> Result<f64> {
    resonant_path_bound_with(params.delta(), params.r_unsigned(), eta0, eta, j)
}

/// [`resonant_path_bound`] with explicit δ and r.
pub fn resonant_path_bound_with(delta: f64, r: f64, eta0: i64, eta: i64, j: i64) -> Result<f64> {
    if !(2.0 * delta < 1.0) {
        return Err(Error::Domain(format!(
            "requires 2δ < 1, got 2δ = {}",
            2.0 * delta
        )));
    }
    if !(2.0 * r * delta < 1.0) {
        return Err(Error::Domain(format!(
            "requires 2rδ < 1, got 2rδ = {}",
            2.0 * r * delta
        )));
    }
    let d0 = eta0.abs_diff(j);
    let d1 = eta.abs_diff(j - 1).min(eta.abs_diff(j + 1));
    let exponent = (d0 + d1) as i32;
    let prefactor = (1.0 - 2.0 * delta).powi(-3) * (1.0 - 2.0 * r * delta).recip() * r;
    Ok(prefactor * (2.0 * delta).powi(exponent))
}

/// Pointwise deviation envelope of the small-cL path-sum stability bound for
/// single-mode data: (1−2d)⁻¹·(2d)^dist with d = c·π/k. Requires 2d < 1.
pub fn pathsum_envelope(params: &Params, dist: u64) -> Result<f64> {
    let d = params.d_stab();
    if !(2.0 * d < 1.0) {
        return Err(Error::Domain(format!(
            "requires 2d < 1, got 2d = {}",
            2.0 * d
        )));
    }
    Ok((2.0 * d).powi(dist as i32) / (1.0 - 2.0 * d))
}
