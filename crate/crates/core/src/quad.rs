//! Adaptive Gauss-Kronrod quadrature (G7/K15 pair with bisection refinement).
//!
//! Used as the independent oracle for the closed-form resonance integrals and
//! for verifying the non-resonant step bounds. The Lorentzian integrands here
//! have width k, which can be as small as 1/300 at desk scale; adaptive
//! bisection resolves the peak without special-casing.

use crate::error::{Error, Result};

// Full-precision tabulated values; the compiler rounds them correctly.
#[allow(clippy::excessive_precision)]
// 15-point Kronrod nodes on [-1, 1] (positive half; symmetric).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

// Kronrod weights matching XGK.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// 7-point Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the center.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);

    let fc = f(center);
    let mut result_kronrod = WGK[7] * fc;
    let mut result_gauss = WG[3] * fc;

    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(center - x) + f(center + x);
        result_kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * fsum;
        }
    }

    let value = result_kronrod * half;
    let err = ((result_kronrod - result_gauss) * half).abs();
    (value, err)
}

/// Integrate `f` over `[a, b]` to the requested absolute tolerance.
///
/// Bisects the subinterval with the largest error estimate until the total
/// estimate drops below `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<QuadResult> {
    if !(a < b) {
        return Err(Error::InvalidInput(format!(
            "quadrature interval reversed: [{a}, {b}]"
        )));
    }
    if !(abs_tol > 0.0) {
        return Err(Error::InvalidInput(
            "quadrature tolerance must be positive".into(),
        ));
    }

    const MAX_INTERVALS: usize = 4096;

    // (error, a, b, value); refined greedily by worst error.
    let (v0, e0) = gk15(&f, a, b);
    let mut intervals: Vec<(f64, f64, f64, f64)> = vec![(e0, a, b, v0)];
    let mut subdivisions = 0;

    loop {
        let total_err: f64 = intervals.iter().map(|iv| iv.0).sum();
        if total_err <= abs_tol {
            let value: f64 = {
                // Deterministic summation: ascending left endpoint.
                let mut sorted: Vec<&(f64, f64, f64, f64)> = intervals.iter().collect();
                sorted.sort_by(|x, y| x.1.total_cmp(&y.1));
                sorted.iter().map(|iv| iv.3).sum()
            };
            return Ok(QuadResult {
                value,
                error_estimate: total_err,
                subdivisions,
            });
        }
        if intervals.len() >= MAX_INTERVALS {
            let worst = intervals
                .iter()
                .max_by(|x, y| x.0.total_cmp(&y.0))
                .expect("nonempty interval list");
            return Err(Error::QuadratureNonConvergence {
                a: worst.1,
                b: worst.2,
                err: worst.0,
            });
        }

        let worst_idx = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .map(|(i, _)| i)
            .expect("nonempty interval list");
        let (_, wa, wb, _) = intervals.swap_remove(worst_idx);
        let mid = 0.5 * (wa + wb);
        let (vl, el) = gk15(&f, wa, mid);
        let (vr, er) = gk15(&f, mid, wb);
        intervals.push((el, wa, mid, vl));
        intervals.push((er, mid, wb, vr));
        subdivisions += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x, 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(r.value, 1.0 / 3.0, max_relative = 1e-14);
        assert_eq!(r.subdivisions, 0);
    }

    #[test]
    fn narrow_lorentzian_matches_arctan() {
        let k: f64 = 1.0 / 300.0;
        let c = 0.03;
        let r = integrate(|t| c / (k * k + t * t), -0.5, 0.5, 1e-12).unwrap();
        let exact = (2.0 * c / k) * (0.5 / k).atan();
        assert!(
            (r.value - exact).abs() <= 1e-11,
            "diff = {:.3e}",
            (r.value - exact).abs()
        );
    }

    #[test]
    fn reports_nonconvergence() {
        // An oscillation too fast for the interval budget keeps every panel's
        // error estimate large.
        let err = integrate(|x: f64| (1e8 * x).sin(), 0.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { .. }));
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(integrate(|x| x, 1.0, 0.0, 1e-10).is_err());
        assert!(integrate(|x| x, 0.0, 1.0, 0.0).is_err());
    }
}
