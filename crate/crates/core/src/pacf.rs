//! Bijection between stable AR coefficient vectors and partial
//! autocorrelations.
//!
//! The model writes the AR polynomial as `1 + a_1 z + ... + a_k z^k`.
//! The Levinson recursion maps partial autocorrelations in (-1, 1)^k
//! onto exactly the coefficient vectors whose polynomial has all roots
//! outside the unit circle, which is how the optimizer stays inside the
//! stationary region with plain box bounds.

/// Map partial autocorrelations to AR coefficients (plus convention).
pub fn pacf_to_ar(phi: &[f64]) -> Vec<f64> {
    let k = phi.len();
    // recursion is run in the conventional minus parametrization, then negated
    let mut a = vec![0.0; k];
    for m in 1..=k {
        let prev: Vec<f64> = a[..m - 1].to_vec();
        for j in 0..m - 1 {
            a[j] = prev[j] - phi[m - 1] * prev[m - 2 - j];
        }
        a[m - 1] = phi[m - 1];
    }
    a.iter_mut().for_each(|v| *v = -*v);
    a
}

/// Inverse map; returns `None` when the AR polynomial is not stable
/// (some partial autocorrelation would leave (-1, 1)).
pub fn ar_to_pacf(ar: &[f64]) -> Option<Vec<f64>> {
    let k = ar.len();
    let mut a: Vec<f64> = ar.iter().map(|v| -v).collect();
    let mut phi = vec![0.0; k];
    for m in (1..=k).rev() {
        let r = a[m - 1];
        if !r.is_finite() || r.abs() >= 1.0 {
            return None;
        }
        phi[m - 1] = r;
        let prev: Vec<f64> = a[..m - 1].to_vec();
        let denom = 1.0 - r * r;
        for j in 0..m - 1 {
            a[j] = (prev[j] + r * prev[m - 2 - j]) / denom;
        }
    }
    Some(phi)
}

/// `pacf_to_ar` together with the Jacobian `d ar / d phi`, accumulated
/// forward through the recursion. `jac[j][r]` holds the derivative of
/// `ar[j]` with respect to `phi[r]`.
pub fn pacf_to_ar_with_jacobian(phi: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = phi.len();
    let mut a = vec![0.0; k];
    let mut jac = vec![vec![0.0; k]; k];
    for m in 1..=k {
        let prev: Vec<f64> = a[..m - 1].to_vec();
        let prev_jac: Vec<Vec<f64>> = jac[..m - 1].to_vec();
        for j in 0..m - 1 {
            a[j] = prev[j] - phi[m - 1] * prev[m - 2 - j];
            for r in 0..k {
                jac[j][r] = prev_jac[j][r] - phi[m - 1] * prev_jac[m - 2 - j][r];
            }
            jac[j][m - 1] -= prev[m - 2 - j];
        }
        a[m - 1] = phi[m - 1];
        for r in 0..k {
            jac[m - 1][r] = if r == m - 1 { 1.0 } else { 0.0 };
        }
    }
    // negate for the plus convention
    a.iter_mut().for_each(|v| *v = -*v);
    for row in &mut jac {
        row.iter_mut().for_each(|v| *v = -*v);
    }
    (a, jac)
}
