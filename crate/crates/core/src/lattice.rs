//! Mode lattice, physical parameters, the nearest-neighbor coupling, and the
//! regime classifier.
//!
//! The model is an ODE system on a one-dimensional lattice of y-frequencies
//! η ∈ η* + Z, driven in rescaled time τ:
//!
//!   dω(η)/dτ = −(c/2)/(k² + (η+1−τ)²) · ω(η+1) + (c/2)/(k² + (η−1−τ)²) · ω(η−1)
//!
//! Only nearest neighbors interact, so the lattice decouples into classes with
//! offset η* ∈ [0, 1). The coupling coefficient is a Lorentzian of width k
//! peaking when the source frequency equals τ (the resonant time).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Physical and spectral parameters of the lattice model.
///
/// The torus convention is `k * torus_length = 1`: the minimal x-frequency of
/// the torus of length `torus_length` is `k`. Constructors derive one from the
/// other so the convention holds bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    /// Perturbation amplitude of the shear profile, 0 <= c < 1/2.
    pub c: f64,
    /// x-frequency, k > 0.
    pub k: f64,
    /// Torus length L with k*L = 1.
    pub torus_length: f64,
    /// Lattice offset in [0, 1).
    pub eta_star: f64,
}

impl Params {
    /// Build from the x-frequency; the torus length is derived as 1/k.
    pub fn from_k(c: f64, k: f64) -> Result<Self> {
        let p = Params {
            c,
            k,
            torus_length: 1.0 / k,
            eta_star: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Build from the torus length; the x-frequency is derived as 1/L.
    pub fn from_length(c: f64, torus_length: f64) -> Result<Self> {
        let p = Params {
            c,
            k: 1.0 / torus_length,
            torus_length,
            eta_star: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Replace the lattice offset (must lie in [0, 1)).
    pub fn with_eta_star(mut self, eta_star: f64) -> Result<Self> {
        self.eta_star = eta_star;
        self.validate()?;
        Ok(self)
    }

    /// Check all parameter invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c >= 0.0 && self.c < 0.5) {
            return Err(Error::InvalidParams(format!(
                "c must satisfy 0 <= c < 1/2, got {}",
                self.c
            )));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::InvalidParams(format!(
                "k must be positive, got {}",
                self.k
            )));
        }
        if !(self.torus_length.is_finite() && self.torus_length > 0.0) {
            return Err(Error::InvalidParams(format!(
                "torus length must be positive, got {}",
                self.torus_length
            )));
        }
        // Bit-exact in at least one direction of the k*L = 1 convention.
        if self.k != 1.0 / self.torus_length && self.torus_length != 1.0 / self.k {
            return Err(Error::InvalidParams(format!(
                "k*L = 1 convention violated: k = {}, L = {}",
                self.k, self.torus_length
            )));
        }
        if !(self.eta_star >= 0.0 && self.eta_star < 1.0) {
            return Err(Error::InvalidParams(format!(
                "eta_star must lie in [0, 1), got {}",
                self.eta_star
            )));
        }
        Ok(())
    }

    /// Non-resonant step bound delta = 4c.
    pub fn delta(&self) -> f64 {
        4.0 * self.c
    }

    /// Single-resonance integral in the unsigned-c convention:
    /// r = (2c/k) * arctan(1/(2k)).
    pub fn r_unsigned(&self) -> f64 {
        (2.0 * self.c / self.k) * (1.0 / (2.0 * self.k)).atan()
    }

    /// Single-resonance integral in the exact signed c/2 convention, r/2.
    pub fn r_exact(&self) -> f64 {
        self.r_unsigned() / 2.0
    }

    /// Path-sum stability constant d = c*pi/k (the full-line Lorentzian mass).
    pub fn d_stab(&self) -> f64 {
        self.c * PI / self.k
    }

    /// Guaranteed cascade growth rate d = (pi/10)*c*L.
    pub fn d_grow(&self) -> f64 {
        (PI / 10.0) * self.c * self.torus_length
    }
}

/// The exact ODE coefficient (c/2)/(k² + (η−τ)²).
///
/// `eta` is the source frequency of the transfer; the coefficient depends on
/// (η − τ) only and peaks at τ = η with value (c/2)/k².
pub fn coupling(params: &Params, eta: f64, tau: f64) -> f64 {
    let d = eta - tau;
    0.5 * params.c / (params.k * params.k + d * d)
}

/// Complex amplitudes on a truncated window of the lattice η* + Z.
///
/// Window bounds are the integer indices `n_min..=n_max`; the frequency of
/// index n is η* + n. Amplitudes are stored in ascending index order and all
/// reductions (sums, norms) run in that fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLattice {
    tau: f64,
    eta_star: f64,
    n_min: i64,
    n_max: i64,
    amplitudes: Vec<Complex64>,
}

/// Initial data specifications for [`build_lattice`].
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// A single unit mode at the given lattice index.
    Delta { index: i64 },
    /// Finitely many (index, amplitude) pairs.
    Support { modes: Vec<(i64, Complex64)> },
    /// Every window mode gets Re, Im drawn uniformly from [-1, 1).
    RandomComplex { seed: u64 },
}

/// Build a lattice at τ = 0 with the given window and initial data.
pub fn build_lattice(
    eta_star: f64,
    n_min: i64,
    n_max: i64,
    init: &InitSpec,
) -> Result<ModeLattice> {
    if !(0.0..1.0).contains(&eta_star) {
        return Err(Error::InvalidInput(format!(
            "eta_star must lie in [0, 1), got {eta_star}"
        )));
    }
    if n_min > n_max {
        return Err(Error::InvalidInput(format!(
            "window bounds reversed: [{n_min}, {n_max}]"
        )));
    }
    let len = (n_max - n_min + 1) as usize;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); len];
    match init {
        InitSpec::Delta { index } => {
            if *index < n_min || *index > n_max {
                return Err(Error::ModeOutsideWindow {
                    index: *index,
                    n_min,
                    n_max,
                });
            }
            amplitudes[(index - n_min) as usize] = Complex64::new(1.0, 0.0);
        }
        InitSpec::Support { modes } => {
            for (index, amp) in modes {
                if *index < n_min || *index > n_max {
                    return Err(Error::ModeOutsideWindow {
                        index: *index,
                        n_min,
                        n_max,
                    });
                }
                if !amp.re.is_finite() || !amp.im.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "non-finite amplitude at index {index}"
                    )));
                }
                amplitudes[(index - n_min) as usize] = *amp;
            }
        }
        InitSpec::RandomComplex { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for a in amplitudes.iter_mut() {
                let re: f64 = rng.gen_range(-1.0..1.0);
                let im: f64 = rng.gen_range(-1.0..1.0);
                *a = Complex64::new(re, im);
            }
        }
    }
    Ok(ModeLattice {
        tau: 0.0,
        eta_star,
        n_min,
        n_max,
        amplitudes,
    })
}

impl ModeLattice {
    pub(crate) fn from_parts(
        tau: f64,
        eta_star: f64,
        n_min: i64,
        n_max: i64,
        amplitudes: Vec<Complex64>,
    ) -> Self {
        debug_assert_eq!((n_max - n_min + 1) as usize, amplitudes.len());
        ModeLattice {
            tau,
            eta_star,
            n_min,
            n_max,
            amplitudes,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn eta_star(&self) -> f64 {
        self.eta_star
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// The frequency η* + n of the mode stored at vector position `idx`.
    pub fn eta_at(&self, idx: usize) -> f64 {
        self.eta_star + (self.n_min + idx as i64) as f64
    }

    /// Vector position of lattice index n, if inside the window.
    pub fn index_of(&self, n: i64) -> Option<usize> {
        if n < self.n_min || n > self.n_max {
            None
        } else {
            Some((n - self.n_min) as usize)
        }
    }

    /// Amplitude at lattice index n; modes outside the window are zero.
    pub fn amplitude(&self, n: i64) -> Complex64 {
        match self.index_of(n) {
            Some(i) => self.amplitudes[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Re-stamp the lattice time (the data is taken as given at the new τ).
    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// Grow the window by padding zero modes on either side.
    pub fn extend_window(&mut self, lower_by: i64, upper_by: i64) {
        debug_assert!(lower_by >= 0 && upper_by >= 0);
        if lower_by > 0 {
            let mut padded = vec![Complex64::new(0.0, 0.0); lower_by as usize];
            padded.extend_from_slice(&self.amplitudes);
            self.amplitudes = padded;
            self.n_min -= lower_by;
        }
        if upper_by > 0 {
            let new_len = self.amplitudes.len() + upper_by as usize;
            self.amplitudes.resize(new_len, Complex64::new(0.0, 0.0));
            self.n_max += upper_by;
        }
    }

    /// Lattice indices of the first and last nonzero amplitude, if any.
    pub fn support_bounds(&self) -> Option<(i64, i64)> {
        let first = self.amplitudes.iter().position(|a| a.norm_sqr() > 0.0)?;
        let last = self.amplitudes.iter().rposition(|a| a.norm_sqr() > 0.0)?;
        Some((self.n_min + first as i64, self.n_min + last as i64))
    }

    /// sup over the window of |ω|.
    pub fn sup_abs(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Unweighted ℓ² norm, summed in ascending index order.
    pub fn l2_norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// ℓ¹ norm, summed in ascending index order.
    pub fn l1_norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tau.is_finite()
            && self
                .amplitudes
                .iter()
                .all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Right-hand side of the lattice ODE on this window (truncation: modes
    /// outside the window are zero).
    pub fn rhs(&self, params: &Params) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        rhs_into(
            &mut out,
            &self.amplitudes,
            self.tau,
            self.eta_star,
            self.n_min,
            params,
        );
        out
    }
}

/// Evaluate the lattice RHS into `out` for amplitudes given at time `tau`.
pub(crate) fn rhs_into(
    out: &mut [Complex64],
    amps: &[Complex64],
    tau: f64,
    eta_star: f64,
    n_min: i64,
    params: &Params,
) {
    let len = amps.len();
    for i in 0..len {
        let eta = eta_star + (n_min + i as i64) as f64;
        let upper = if i + 1 < len {
            amps[i + 1]
        } else {
            Complex64::new(0.0, 0.0)
        };
        let lower = if i > 0 {
            amps[i - 1]
        } else {
            Complex64::new(0.0, 0.0)
        };
        out[i] =
            lower * coupling(params, eta - 1.0, tau) - upper * coupling(params, eta + 1.0, tau);
    }
}

/// Free-function form of [`ModeLattice::rhs`].
pub fn rhs(lattice: &ModeLattice, params: &Params) -> Vec<Complex64> {
    lattice.rhs(params)
}

/// Sum of all window amplitudes in ascending index order.
///
/// On the infinite lattice this quantity is conserved exactly (the two shifted
/// sums in the stencil cancel), so it serves as an integrator check.
pub fn total_sum(lattice: &ModeLattice) -> Complex64 {
    lattice.amplitudes.iter().sum()
}

/// Stability/instability regime labels, strongest guarantee first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeLabel {
    LyapunovStable,
    PathsumStable,
    Unstable,
    Indeterminate,
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeLabel::LyapunovStable => "LYAPUNOV_STABLE",
            RegimeLabel::PathsumStable => "PATHSUM_STABLE",
            RegimeLabel::Unstable => "UNSTABLE",
            RegimeLabel::Indeterminate => "INDETERMINATE",
        };
        f.write_str(s)
    }
}

/// One evaluated regime condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

/// Result of [`classify_regime`]: a single label plus every evaluated
/// condition with its numeric value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeClassification {
    pub label: RegimeLabel,
    pub conditions: Vec<ConditionCheck>,
}

impl RegimeClassification {
    pub fn satisfied_conditions(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.conditions.iter().filter(|c| c.satisfied)
    }

    fn condition(&self, name: &str) -> bool {
        self.conditions
            .iter()
            .any(|c| c.name == name && c.satisfied)
    }

    /// pi*c*L > 20 together with pi*c²*L < 1.
    pub fn unstable_condition(&self) -> bool {
        self.condition("pi_c_L_gt_20") && self.condition("pi_c2_L_lt_1")
    }

    /// 2*pi*c*L < 1 (the path-sum stability threshold).
    pub fn pathsum_condition(&self) -> bool {
        self.condition("two_pi_c_L_lt_1")
    }

    /// 4 − 2*exp(2cL) > 0 (the Lyapunov functional's decay condition).
    pub fn lyapunov_condition(&self) -> bool {
        self.condition("lyapunov_margin_pos")
    }
}

/// Classify the parameter regime against the model's thresholds.
///
/// Label precedence: UNSTABLE (pi c L > 20 and pi c² L < 1), else
/// PATHSUM_STABLE (2 pi c L < 1), else LYAPUNOV_STABLE (4 − 2 exp(2cL) > 0),
/// else INDETERMINATE. The regions for UNSTABLE and PATHSUM_STABLE are
/// disjoint; the path-sum condition implies the Lyapunov condition, so the
/// conditions list still records both when the label is PATHSUM_STABLE.
pub fn classify_regime(params: &Params) -> RegimeClassification {
    let cl = params.c * params.torus_length;
    let pi_c_l = PI * cl;
    let pi_c2_l = PI * params.c * cl;
    let two_pi_c_l = 2.0 * PI * cl;
    let lyap_margin = 4.0 - 2.0 * (2.0 * cl).exp();

    let conditions = vec![
        ConditionCheck {
            name: "pi_c_L_gt_20",
            value: pi_c_l,
            threshold: 20.0,
            satisfied: pi_c_l > 20.0,
        },
        ConditionCheck {
            name: "pi_c2_L_lt_1",
            value: pi_c2_l,
            threshold: 1.0,
            satisfied: pi_c2_l < 1.0,
        },
        ConditionCheck {
            name: "two_pi_c_L_lt_1",
            value: two_pi_c_l,
            threshold: 1.0,
            satisfied: two_pi_c_l < 1.0,
        },
        ConditionCheck {
            name: "lyapunov_margin_pos",
            value: lyap_margin,
            threshold: 0.0,
            satisfied: lyap_margin > 0.0,
        },
    ];

    let unstable = conditions[0].satisfied && conditions[1].satisfied;
    let pathsum = conditions[2].satisfied;
    let lyapunov = conditions[3].satisfied;

    let label = if unstable {
        RegimeLabel::Unstable
    } else if pathsum {
        RegimeLabel::PathsumStable
    } else if lyapunov {
        RegimeLabel::LyapunovStable
    } else {
        RegimeLabel::Indeterminate
    };

    RegimeClassification { label, conditions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(c: f64, k: f64) -> Params {
        Params::from_k(c, k).unwrap()
    }

    #[test]
    fn coupling_direct_values() {
        let p = params(0.2, 1.0);
        assert_eq!(coupling(&p, 0.0, 0.0), 0.1);

        let p = params(0.0, 1.0);
        assert_eq!(coupling(&p, 3.0, -2.5), 0.0);

        // Resonant peak value (c/2)/k².
        let p = Params::from_length(0.03, 300.0).unwrap();
        assert_relative_eq!(
            coupling(&p, 5.0, 5.0),
            0.015 * 300.0 * 300.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn coupling_peaks_at_resonance() {
        let p = params(0.1, 0.5);
        let peak = coupling(&p, 2.0, 2.0);
        assert_eq!(peak, 0.5 * 0.1 / (0.5 * 0.5));
        for off in [0.1, 0.5, 3.0] {
            assert!(coupling(&p, 2.0, 2.0 + off) < peak);
            assert!(coupling(&p, 2.0, 2.0 - off) < peak);
        }
    }

    #[test]
    fn params_derived_constants() {
        let p = Params::from_length(0.03, 300.0).unwrap();
        assert_eq!(p.delta(), 0.12);
        assert_relative_eq!(p.r_unsigned(), 18.0 * 150.0f64.atan(), max_relative = 1e-15);
        assert_eq!(p.r_exact(), p.r_unsigned() / 2.0);
        assert_relative_eq!(p.d_grow(), 0.9 * PI, max_relative = 1e-15);
        assert_relative_eq!(p.d_stab(), 0.03 * PI * 300.0, max_relative = 1e-12);
        // Recomputation is bit-for-bit reproducible.
        assert_eq!(p.r_unsigned(), p.r_unsigned());
        assert_eq!(p.torus_length * p.k, 300.0 * (1.0 / 300.0));
    }

    #[test]
    fn params_rejects_bad_ranges() {
        assert!(Params::from_k(0.5, 1.0).is_err());
        assert!(Params::from_k(-0.1, 1.0).is_err());
        assert!(Params::from_k(0.1, 0.0).is_err());
        assert!(Params::from_k(0.1, 1.0)
            .unwrap()
            .with_eta_star(1.0)
            .is_err());
        assert!(Params::from_k(0.0, 1.0).is_ok()); // degenerate but constructible
    }

    #[test]
    fn build_delta_lattice() {
        let l = build_lattice(0.0, -10, 10, &InitSpec::Delta { index: 0 }).unwrap();
        assert_eq!(l.len(), 21);
        assert_eq!(l.amplitude(0), Complex64::new(1.0, 0.0));
        assert_eq!(
            l.amplitudes().iter().filter(|a| a.norm_sqr() > 0.0).count(),
            1
        );
        assert_eq!(l.tau(), 0.0);
        // Satisfies the instability hypothesis: the index-0 amplitude carries
        // at least half the sup.
        assert!(l.amplitude(0).norm() >= 0.5 * l.sup_abs());
    }

    #[test]
    fn build_rejects_out_of_window_mode() {
        let err = build_lattice(0.0, -2, 2, &InitSpec::Delta { index: 5 }).unwrap_err();
        assert!(matches!(err, Error::ModeOutsideWindow { index: 5, .. }));
        let err = build_lattice(
            0.0,
            -2,
            2,
            &InitSpec::Support {
                modes: vec![
                    (0, Complex64::new(1.0, 0.0)),
                    (-3, Complex64::new(1.0, 0.0)),
                ],
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::ModeOutsideWindow { index: -3, .. }));
    }

    #[test]
    fn seeded_random_init_is_reproducible() {
        let a = build_lattice(0.0, -5, 5, &InitSpec::RandomComplex { seed: 42 }).unwrap();
        let b = build_lattice(0.0, -5, 5, &InitSpec::RandomComplex { seed: 42 }).unwrap();
        assert_eq!(a, b);
        let c = build_lattice(0.0, -5, 5, &InitSpec::RandomComplex { seed: 43 }).unwrap();
        assert_ne!(a, c);
        for amp in a.amplitudes() {
            assert!(amp.re.abs() < 1.0 && amp.im.abs() < 1.0);
        }
    }

    #[test]
    fn total_sum_values() {
        let l = build_lattice(0.0, -4, 4, &InitSpec::Delta { index: 2 }).unwrap();
        assert_eq!(total_sum(&l), Complex64::new(1.0, 0.0));

        let l = build_lattice(
            0.0,
            0,
            1,
            &InitSpec::Support {
                modes: vec![(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(0.0, 1.0))],
            },
        )
        .unwrap();
        assert_eq!(total_sum(&l), Complex64::new(1.0, 1.0));
    }

    #[test]
    fn rhs_zero_for_zero_amplitude() {
        let p = params(0.0, 1.0);
        let l = build_lattice(0.0, -3, 3, &InitSpec::RandomComplex { seed: 7 }).unwrap();
        for d in l.rhs(&p) {
            assert_eq!(d, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rhs_single_mode_stencil() {
        let p = params(0.2, 1.0);
        let l = build_lattice(0.0, -4, 4, &InitSpec::Delta { index: 0 })
            .unwrap()
            .with_tau(0.3);
        let d = l.rhs(&p);
        let i0 = l.index_of(0).unwrap();
        // Source mode itself has zero derivative; only the neighbors move.
        assert_eq!(d[i0], Complex64::new(0.0, 0.0));
        assert!(d[i0 + 1].re > 0.0, "upper neighbor gains with + sign");
        assert!(d[i0 - 1].re < 0.0, "lower neighbor gains with - sign");
        assert_eq!(d[i0 + 1].re, coupling(&p, 0.0, 0.3));
        assert_eq!(d[i0 - 1].re, -coupling(&p, 0.0, 0.3));
        for (i, v) in d.iter().enumerate() {
            if i != i0 - 1 && i != i0 + 1 {
                assert_eq!(*v, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn classify_examples() {
        let c = classify_regime(&Params::from_length(0.03, 1.0).unwrap());
        assert_eq!(c.label, RegimeLabel::PathsumStable);
        assert!(c.pathsum_condition());
        assert!(c.lyapunov_condition());
        assert!(!c.unstable_condition());

        let c = classify_regime(&Params::from_length(0.03, 300.0).unwrap());
        assert_eq!(c.label, RegimeLabel::Unstable);

        let c = classify_regime(&Params::from_length(0.1, 100.0).unwrap());
        assert_eq!(c.label, RegimeLabel::Indeterminate);
        assert!(c.condition("pi_c_L_gt_20"));
        assert!(!c.condition("pi_c2_L_lt_1"));
    }

    #[test]
    fn classify_lyapunov_only_band() {
        // cL in (1/(2pi), ln2/2): path-sum fails but the Lyapunov margin holds.
        let c = classify_regime(&Params::from_length(0.2, 1.0).unwrap());
        assert_eq!(c.label, RegimeLabel::LyapunovStable);
        assert!(!c.pathsum_condition());
        assert!(c.lyapunov_condition());
    }

    #[test]
    fn classify_is_pure() {
        let p = Params::from_length(0.03, 300.0).unwrap();
        assert_eq!(classify_regime(&p), classify_regime(&p));
    }

    proptest! {
        #[test]
        fn coupling_even_in_eta_minus_tau(x in -50.0f64..50.0, c in 0.0f64..0.49, k in 0.01f64..2.0) {
            let p = params(c, k);
            // Exact evenness at tau = 0 (negation is exact in IEEE).
            prop_assert_eq!(coupling(&p, x, 0.0), coupling(&p, -x, 0.0));
            // Depends on eta and tau only through their difference.
            let shift = 3.25;
            let a = coupling(&p, x + shift, shift);
            let b = coupling(&p, x, 0.0);
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }

        #[test]
        fn rhs_total_sum_telescopes(seed in 0u64..1_000, c in 0.0f64..0.49, tau in -5.0f64..5.0) {
            let p = params(c, 1.0);
            // Support on [-3, 3], window padded well beyond.
            let inner = build_lattice(0.0, -3, 3, &InitSpec::RandomComplex { seed }).unwrap();
            let mut modes = Vec::new();
            for (i, a) in inner.amplitudes().iter().enumerate() {
                modes.push((inner.n_min() + i as i64, *a));
            }
            let l = build_lattice(0.0, -6, 6, &InitSpec::Support { modes }).unwrap().with_tau(tau);
            let d = l.rhs(&p);
            let total: Complex64 = d.iter().sum();
            let scale: f64 = d.iter().map(|v| v.norm()).sum::<f64>().max(1.0);
            prop_assert!(total.norm() <= 1e-14 * scale, "total = {total}, scale = {scale}");
        }

        #[test]
        fn rhs_preserves_reality(seed in 0u64..1_000, tau in -5.0f64..5.0) {
            let p = params(0.3, 0.7);
            let src = build_lattice(0.0, -4, 4, &InitSpec::RandomComplex { seed }).unwrap();
            let modes: Vec<(i64, Complex64)> = src
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(i, a)| (src.n_min() + i as i64, Complex64::new(a.re, 0.0)))
                .collect();
            let l = build_lattice(0.0, -4, 4, &InitSpec::Support { modes }).unwrap().with_tau(tau);
            for v in l.rhs(&p) {
                prop_assert_eq!(v.im, 0.0);
            }
        }
    }
}
