//! Shared oracles for the integration tests.
//!
//! The Picard-matrix oracle here must stay independent of the library's path
//! machinery: it builds the dense transfer matrix from the coupling formula
//! directly and iterates the integral equation on a fixed fine grid with a
//! cumulative Simpson rule.

use num_complex::Complex64;

/// Dense nearest-neighbor transfer matrix action at time `t` on a window of
/// lattice indices `n_min..=n_max` (truncation: outside modes are zero).
///
/// (A(t)·w)(n) = −(c/2)/(k² + (n+1−t)²)·w(n+1) + (c/2)/(k² + (n−1−t)²)·w(n−1)
fn apply_transfer(c: f64, k: f64, n_min: i64, t: f64, w: &[Complex64], out: &mut [Complex64]) {
    let k2 = k * k;
    let len = w.len();
    for i in 0..len {
        let eta = (n_min + i as i64) as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        if i + 1 < len {
            let d = eta + 1.0 - t;
            acc -= w[i + 1] * (0.5 * c / (k2 + d * d));
        }
        if i > 0 {
            let d = eta - 1.0 - t;
            acc += w[i - 1] * (0.5 * c / (k2 + d * d));
        }
        out[i] = acc;
    }
}

/// Depth-`depth` Picard iterate of the integral equation at `t1`, computed by
/// repeated cumulative integration on a uniform grid of `2n` panels.
///
/// Even grid points accumulate with composite Simpson; odd points add one
/// panel through the quadratic interpolant (5f₀ + 8f₁ − f₂)·g/12, keeping the
/// whole table O(g⁴) accurate.
#[allow(clippy::too_many_arguments)]
pub fn picard_matrix_iterate(
    c: f64,
    k: f64,
    n_min: i64,
    w0: &[Complex64],
    t0: f64,
    t1: f64,
    depth: usize,
    n: usize,
) -> Vec<Complex64> {
    let points = 2 * n + 1;
    let g = (t1 - t0) / (2.0 * n as f64);
    let times: Vec<f64> = (0..points)
        .map(|i| {
            if i == points - 1 {
                t1
            } else {
                t0 + g * i as f64
            }
        })
        .collect();
    let modes = w0.len();

    // Current iterate sampled on the grid; starts at the constant w0.
    let mut current: Vec<Vec<Complex64>> = vec![w0.to_vec(); points];

    let mut f = vec![vec![Complex64::new(0.0, 0.0); modes]; points];
    for _ in 0..depth {
        for (i, fi) in f.iter_mut().enumerate() {
            apply_transfer(c, k, n_min, times[i], &current[i], fi);
        }
        let mut next: Vec<Vec<Complex64>> = Vec::with_capacity(points);
        next.push(w0.to_vec());
        let mut running = vec![Complex64::new(0.0, 0.0); modes];
        let mut even_acc = vec![Complex64::new(0.0, 0.0); modes];
        for i in 1..points {
            if i % 2 == 0 {
                for m in 0..modes {
                    even_acc[m] += (f[i - 2][m] + f[i - 1][m] * 4.0 + f[i][m]) * (g / 3.0);
                }
                running.copy_from_slice(&even_acc);
            } else {
                // Quadratic through (i−1, i, i+1) integrated over [i−1, i].
                for m in 0..modes {
                    running[m] = even_acc[m]
                        + (f[i - 1][m] * 5.0 + f[i][m] * 8.0 - f[i + 1][m]) * (g / 12.0);
                }
            }
            let row: Vec<Complex64> = (0..modes).map(|m| w0[m] + running[m]).collect();
            next.push(row);
        }
        current = next;
    }
    current.last().expect("grid is nonempty").clone()
}
