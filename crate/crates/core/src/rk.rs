//! Embedded Dormand-Prince 5(4) step shared by the lattice integrator and the
//! path-integral ODE solver.

use num_complex::Complex64;

/// Scalar element of an RK state vector.
pub(crate) trait RkScalar: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn mul_f64(self, a: f64) -> Self;
    fn abs_sq(self) -> f64;
    fn finite(self) -> bool;
}

impl RkScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn mul_f64(self, a: f64) -> Self {
        self * a
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl RkScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn mul_f64(self, a: f64) -> Self {
        self * a
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// ℓ² norm in ascending index order (deterministic reduction).
pub(crate) fn l2_norm<T: RkScalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt()
}

pub(crate) fn all_finite<T: RkScalar>(v: &[T]) -> bool {
    v.iter().all(|x| x.finite())
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and the embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine<T: RkScalar>(y: &[T], h: f64, terms: &[(f64, &[T])]) -> Vec<T> {
    let mut out = y.to_vec();
    for (coef, k) in terms {
        let hc = h * coef;
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o = o.add(v.mul_f64(hc));
        }
    }
    out
}

/// One embedded Dormand-Prince step of size `h` from `(t, y)`.
///
/// Returns the 5th-order solution and the componentwise embedded error
/// estimate (5th minus 4th order result).
pub(crate) fn dopri5_step<T, F>(rhs: &mut F, t: f64, y: &[T], h: f64) -> (Vec<T>, Vec<T>)
where
    T: RkScalar,
    F: FnMut(f64, &[T], &mut [T]),
{
    let n = y.len();
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut k5 = vec![T::zero(); n];
    let mut k6 = vec![T::zero(); n];
    let mut k7 = vec![T::zero(); n];

    rhs(t, y, &mut k1);
    let y2 = combine(y, h, &[(A21, &k1)]);
    rhs(t + C2 * h, &y2, &mut k2);
    let y3 = combine(y, h, &[(A31, &k1), (A32, &k2)]);
    rhs(t + C3 * h, &y3, &mut k3);
    let y4 = combine(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
    rhs(t + C4 * h, &y4, &mut k4);
    let y5 = combine(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
    rhs(t + C5 * h, &y5, &mut k5);
    let y6 = combine(
        y,
        h,
        &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    );
    rhs(t + h, &y6, &mut k6);
    let y_new = combine(
        y,
        h,
        &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    rhs(t + h, &y_new, &mut k7);

    let mut err = vec![T::zero(); n];
    for i in 0..n {
        let e = k1[i]
            .mul_f64(E1)
            .add(k3[i].mul_f64(E3))
            .add(k4[i].mul_f64(E4))
            .add(k5[i].mul_f64(E5))
            .add(k6[i].mul_f64(E6))
            .add(k7[i].mul_f64(E7));
        err[i] = e.mul_f64(h);
    }
    (y_new, err)
}

/// Step-size update after an accepted step (order-5 controller, clamped).
pub(crate) fn next_step_factor(err: f64, tol: f64) -> f64 {
    if err <= 0.0 {
        return 5.0;
    }
    (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // dy/dt = -y, y(0) = 1: the one-step error is ~h^6/3600 for this problem.
    #[test]
    fn dopri5_exponential_accuracy() {
        let mut rhs = |_t: f64, y: &[f64], out: &mut [f64]| out[0] = -y[0];
        let h = 0.1;
        let (y, err) = dopri5_step(&mut rhs, 0.0, &[1.0], h);
        let exact_err = (y[0] - (-h).exp()).abs();
        assert!(exact_err < 1e-9, "error {exact_err:.3e}");
        assert!(exact_err > 1e-11, "suspiciously exact: {exact_err:.3e}");
        assert!(l2_norm(&err) < 1e-7);
    }

    // The embedded estimate scales like h^5: halving h divides it by ~32.
    #[test]
    fn embedded_error_order() {
        let mut rhs = |t: f64, y: &[f64], out: &mut [f64]| out[0] = t.sin() * y[0];
        let (_, e1) = dopri5_step(&mut rhs, 0.3, &[1.0], 0.05);
        let (_, e2) = dopri5_step(&mut rhs, 0.3, &[1.0], 0.025);
        let ratio = l2_norm(&e1) / l2_norm(&e2);
        assert!((ratio - 32.0).abs() < 8.0, "ratio = {ratio}");
    }
}
