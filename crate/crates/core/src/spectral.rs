//! FARIMA(k, d, 0) spectral densities, their parameter gradients and the
//! Fisher information matrix.
//!
//! The density is
//!
//! ```text
//! f_theta(lambda) = |1 - e^{i lambda}|^{-2d} * (1/2pi) |1 + sum_j a_j e^{-i lambda j}|^{-2}
//! ```
//!
//! with |1 - e^{i lambda}|^2 = 2 - 2 cos(lambda) = 4 sin^2(lambda/2); the
//! sine form is used because 2 - 2cos(lambda) underflows to zero for
//! lambda below ~1e-8 while the quadrature grid reaches much closer to
//! the pole. The information matrix is evaluated through the identity
//! f^2 grad f^{-1} (grad f^{-1})^T = grad log f (grad log f)^T, which has
//! no cancellation near lambda = 0.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::{LrdError, Result};
use crate::pacf::ar_to_pacf;

/// Upper bound of the memory parameter box.
pub const D_MAX: f64 = 0.49;
/// Box bound for each partial autocorrelation.
pub const PACF_BOUND: f64 = 0.99;
/// Condition-number limit for the information matrix solve.
pub const COND_LIMIT: f64 = 1e12;

/// Block parameter vector theta_k = (d, a_1, ..., a_k).
///
/// Feasibility: |d| <= D_MAX and the AR polynomial 1 + sum a_j z^j stable,
/// enforced through the partial autocorrelation box |phi_j| <= PACF_BOUND.
/// The memory parameter is allowed to be negative so that block estimates
/// under short memory can fall on either side of zero, which the averaged
/// test statistic requires.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveParams {
    d: f64,
    ar: Vec<f64>,
}

impl SieveParams {
    pub fn new(d: f64, ar: Vec<f64>) -> Result<Self> {
        if !d.is_finite() || d.abs() > D_MAX {
            return Err(LrdError::InvalidParams(format!(
                "memory parameter d = {d} outside [-{D_MAX}, {D_MAX}]"
            )));
        }
        if !ar.is_empty() {
            let phi = ar_to_pacf(&ar).ok_or_else(|| {
                LrdError::InvalidParams(format!("AR polynomial for {ar:?} is not stable"))
            })?;
            if phi.iter().any(|p| p.abs() > PACF_BOUND + 1e-9) {
                return Err(LrdError::InvalidParams(format!(
                    "partial autocorrelations of {ar:?} leave the [-{PACF_BOUND}, {PACF_BOUND}] box"
                )));
            }
        }
        Ok(Self { d, ar })
    }

    /// White noise (d = 0, no AR part).
    pub fn white_noise() -> Self {
        Self { d: 0.0, ar: Vec::new() }
    }

    /// Constructor for points produced inside the feasible box (the
    /// optimizer's pacf coordinates cannot leave it); skips revalidation.
    pub(crate) fn unchecked(d: f64, ar: Vec<f64>) -> Self {
        Self { d, ar }
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn ar(&self) -> &[f64] {
        &self.ar
    }

    /// Sieve order k.
    pub fn order(&self) -> usize {
        self.ar.len()
    }

    /// Dimension of the parameter vector, k + 1.
    pub fn dim(&self) -> usize {
        self.ar.len() + 1
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= PI) {
        return Err(LrdError::Domain(format!(
            "frequency {lambda} outside (0, pi]; the density has a pole at 0 when d > 0"
        )));
    }
    Ok(())
}

/// log |1 - e^{i lambda}|^2, even in lambda and finite for lambda != 0.
#[inline]
fn log_abs2_one_minus_e(lambda: f64) -> f64 {
    let s = (lambda / 2.0).sin();
    (4.0 * s * s).ln()
}

/// Real and imaginary parts of 1 + sum a_j e^{-i lambda j}.
#[inline]
fn ar_transfer(ar: &[f64], lambda: f64) -> (f64, f64) {
    let mut re = 1.0;
    let mut im = 0.0;
    for (j, &a) in ar.iter().enumerate() {
        let ang = lambda * (j + 1) as f64;
        re += a * ang.cos();
        im -= a * ang.sin();
    }
    (re, im)
}

/// Spectral density at a single frequency.
pub fn eval_density(params: &SieveParams, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let v = log_density(params, lambda).exp();
    if !v.is_finite() || v <= 0.0 {
        return Err(LrdError::Numerical(format!(
            "density not positive-finite at lambda = {lambda}"
        )));
    }
    Ok(v)
}

/// log f_theta(lambda); shared by the density and the Whittle objective.
pub(crate) fn log_density(params: &SieveParams, lambda: f64) -> f64 {
    let (re, im) = ar_transfer(&params.ar, lambda);
    -params.d * log_abs2_one_minus_e(lambda) - (2.0 * PI).ln() - (re * re + im * im).ln()
}

/// Gradient of log f_theta with respect to (d, a_1, ..., a_k).
pub fn grad_log_density(params: &SieveParams, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    Ok(grad_log_density_unchecked(params, lambda))
}

pub(crate) fn grad_log_density_unchecked(params: &SieveParams, lambda: f64) -> Vec<f64> {
    let k = params.ar.len();
    let mut g = Vec::with_capacity(k + 1);
    g.push(-log_abs2_one_minus_e(lambda));
    if k > 0 {
        // d/da_j log f = -2 (C cos(j lambda) + S sin(j lambda)) / (C^2 + S^2)
        // with C - iS = 1 + sum a_m e^{-i lambda m}
        let (c, s_neg) = ar_transfer(&params.ar, lambda);
        let s = -s_neg;
        let den = c * c + s * s;
        for j in 1..=k {
            let ang = lambda * j as f64;
            g.push(-2.0 * (c * ang.cos() + s * ang.sin()) / den);
        }
    }
    g
}

/// Quadrature rule on (0, pi] for the information-matrix integrals.
///
/// Composite Gauss-Legendre over panels that shrink geometrically toward
/// zero: the integrands carry an integrable log^2 singularity at the
/// origin, and the geometric grading resolves it to ~1e-10 while every
/// node stays strictly positive. Even integrands over [-pi, pi] are
/// integrated as twice the grid sum.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Smallest panel boundary; the truncated mass of a log^2 integrand below
/// this point is ~1e-10, negligible against the 1e-6 accuracy targets.
const LAMBDA_MIN: f64 = 1e-13;
const PANEL_NODES: usize = 64;

impl QuadratureGrid {
    /// Build a grid with approximately `q` nodes (default 4096).
    pub fn new(q: usize) -> Self {
        let panels = (q / PANEL_NODES).max(8);
        let (xs, ws) = gauss_legendre(PANEL_NODES);
        let log_lo = LAMBDA_MIN.ln();
        let log_hi = PI.ln();
        let mut nodes = Vec::with_capacity(panels * PANEL_NODES);
        let mut weights = Vec::with_capacity(panels * PANEL_NODES);
        for p in 0..panels {
            let a = (log_lo + (log_hi - log_lo) * p as f64 / panels as f64).exp();
            let b = (log_lo + (log_hi - log_lo) * (p + 1) as f64 / panels as f64).exp();
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for i in 0..PANEL_NODES {
                nodes.push(mid + half * xs[i]);
                weights.push(half * ws[i]);
            }
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of an even function over [-pi, pi]: twice the grid sum.
    pub fn integrate_even<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        2.0 * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum::<f64>()
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self::new(4096)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-style initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fisher information matrix Gamma_k(theta) =
/// (1/4pi) int_{-pi}^{pi} grad log f (grad log f)^T d lambda.
pub fn gamma_matrix(params: &SieveParams, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    let dim = params.dim();
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for (&x, &w) in grid.nodes().iter().zip(grid.weights()) {
        let g = grad_log_density_unchecked(params, x);
        for r in 0..dim {
            for c in r..dim {
                acc[(r, c)] += w * g[r] * g[c];
            }
        }
    }
    // symmetrize by construction: copy the upper triangle down and apply
    // the even-integrand factor 2 and the 1/4pi normalization
    let scale = 2.0 / (4.0 * PI);
    for r in 0..dim {
        for c in r..dim {
            let v = acc[(r, c)] * scale;
            if !v.is_finite() {
                return Err(LrdError::Numerical(format!(
                    "non-finite information entry at ({r}, {c})"
                )));
            }
            acc[(r, c)] = v;
            acc[(c, r)] = v;
        }
    }
    Ok(acc)
}

/// Inverse information matrix together with its (1,1) entry, which scales
/// the variance of the memory estimate.
#[derive(Debug, Clone)]
pub struct GammaInverse {
    pub matrix: DMatrix<f64>,
    /// Entry (1,1) of the inverse, strictly positive.
    pub var_dd: f64,
}

pub fn gamma_inverse(params: &SieveParams, grid: &QuadratureGrid) -> Result<GammaInverse> {
    let gamma = gamma_matrix(params, grid)?;
    invert_information(&gamma)
}

pub(crate) fn invert_information(gamma: &DMatrix<f64>) -> Result<GammaInverse> {
    let eig = gamma.clone().symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let min_ev = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if min_ev <= 0.0 {
        return Err(LrdError::Numerical(format!(
            "information matrix not positive definite (min eigenvalue {min_ev:.3e})"
        )));
    }
    let cond = max_ev / min_ev;
    if cond > COND_LIMIT {
        return Err(LrdError::IllConditioned { cond, limit: COND_LIMIT });
    }
    let chol = gamma
        .clone()
        .cholesky()
        .ok_or_else(|| LrdError::Numerical("Cholesky factorization failed".into()))?;
    let inv = chol.inverse();
    let var_dd = inv[(0, 0)];
    if var_dd <= 0.0 || !var_dd.is_finite() {
        return Err(LrdError::Numerical(format!(
            "(1,1) entry of the inverse information is {var_dd}"
        )));
    }
    Ok(GammaInverse { matrix: inv, var_dd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const PI2_OVER_6: f64 = 1.6449340668482264;

    fn grid() -> QuadratureGrid {
        QuadratureGrid::default()
    }

    #[test]
    fn white_noise_density_is_flat() {
        let p = SieveParams::white_noise();
        for lam in [0.1, 1.0, 2.0, PI] {
            assert_abs_diff_eq!(
                eval_density(&p, lam).unwrap(),
                1.0 / (2.0 * PI),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn pure_memory_density_at_pi() {
        // |1 - e^{i pi}| = 2, so f = 2^{-0.6} / (2 pi)
        let p = SieveParams::new(0.3, vec![]).unwrap();
        let want = 2f64.powf(-0.6) / (2.0 * PI);
        assert_abs_diff_eq!(eval_density(&p, PI).unwrap(), want, epsilon = 1e-15);
    }

    #[test]
    fn ar_density_near_zero_frequency() {
        // AR factor at lambda -> 0 is |1 + 0.5|^2
        let p = SieveParams::new(0.0, vec![0.5]).unwrap();
        let got = eval_density(&p, 1e-9).unwrap();
        assert_abs_diff_eq!(got, 1.0 / (2.0 * PI * 2.25), epsilon = 1e-12);
    }

    #[test]
    fn density_rejects_bad_frequency() {
        let p = SieveParams::new(0.3, vec![]).unwrap();
        assert!(eval_density(&p, 0.0).is_err());
        assert!(eval_density(&p, -1.0).is_err());
        assert!(eval_density(&p, PI + 0.1).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SieveParams::new(0.5, vec![]).is_err());
        assert!(SieveParams::new(f64::NAN, vec![]).is_err());
        assert!(SieveParams::new(0.2, vec![-1.05]).is_err()); // root inside unit disk
        assert!(SieveParams::new(-0.3, vec![0.4]).is_ok());
    }

    #[test]
    fn grad_d_component_values() {
        let p = SieveParams::white_noise();
        // at pi: -2 log 2
        let g = grad_log_density(&p, PI).unwrap();
        assert_abs_diff_eq!(g[0], -2.0 * 2f64.ln(), epsilon = 1e-14);
        // at pi/3: 2 - 2cos = 1, so component is 0
        let g = grad_log_density(&p, PI / 3.0).unwrap();
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn grad_matches_central_differences() {
        // deterministic pseudo-random sweep over theta and lambda
        let mut state = 0xC0FFEEu64;
        let mut unif = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let h = 1e-6;
        for trial in 0..100 {
            let k = trial % 4;
            let d = (unif() * 2.0 - 1.0) * 0.45;
            let phi: Vec<f64> = (0..k).map(|_| (unif() * 2.0 - 1.0) * 0.9).collect();
            let ar = crate::pacf::pacf_to_ar(&phi);
            let p = SieveParams::new(d, ar.clone()).unwrap();
            let lam = 0.05 + unif() * (PI - 0.05);
            let g = grad_log_density(&p, lam).unwrap();
            // d component
            let fd = {
                let hi = log_density(&SieveParams::new(d + h, ar.clone()).unwrap(), lam);
                let lo = log_density(&SieveParams::new(d - h, ar.clone()).unwrap(), lam);
                (hi - lo) / (2.0 * h)
            };
            let denom = g[0].abs().max(1e-3);
            assert!(
                ((g[0] - fd) / denom).abs() < 1e-5,
                "d-grad mismatch {} vs {} at lam={lam} trial={trial}",
                g[0],
                fd
            );
            for j in 0..k {
                let mut hi_ar = ar.clone();
                let mut lo_ar = ar.clone();
                hi_ar[j] += h;
                lo_ar[j] -= h;
                let fd = (log_density(&SieveParams { d, ar: hi_ar }, lam)
                    - log_density(&SieveParams { d, ar: lo_ar }, lam))
                    / (2.0 * h);
                let denom = g[j + 1].abs().max(1e-3);
                assert!(
                    ((g[j + 1] - fd) / denom).abs() < 1e-5,
                    "a{j}-grad mismatch {} vs {}",
                    g[j + 1],
                    fd
                );
            }
        }
    }

    #[test]
    fn gamma_pure_memory_is_pi2_over_6() {
        let grid = grid();
        for d in [0.0, 0.1, 0.25, 0.49] {
            let p = SieveParams::new(d, vec![]).unwrap();
            let g = gamma_matrix(&p, &grid).unwrap();
            assert_abs_diff_eq!(g[(0, 0)], PI2_OVER_6, epsilon = 1e-9);
        }
    }

    #[test]
    fn gamma_ar1_block_is_classical_information() {
        let grid = grid();
        for a in [-0.7, -0.2, 0.3, 0.8] {
            let p = SieveParams::new(0.0, vec![a]).unwrap();
            let g = gamma_matrix(&p, &grid).unwrap();
            assert_abs_diff_eq!(g[(1, 1)], 1.0 / (1.0 - a * a), epsilon = 1e-9);
        }
    }

    #[test]
    fn gamma_symmetric_positive_definite() {
        let mut state = 0xABCDu64;
        let mut unif = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let grid = grid();
        for k in 0..=6 {
            let d = (unif() * 2.0 - 1.0) * 0.45;
            let phi: Vec<f64> = (0..k).map(|_| (unif() * 2.0 - 1.0) * 0.9).collect();
            let p = SieveParams::new(d, crate::pacf::pacf_to_ar(&phi)).unwrap();
            let g = gamma_matrix(&p, &grid).unwrap();
            assert_eq!(g, g.transpose());
            let eig = g.symmetric_eigen();
            assert!(
                eig.eigenvalues.iter().all(|&e| e > 0.0),
                "k={k} eigenvalues {:?}",
                eig.eigenvalues
            );
        }
    }

    #[test]
    fn gamma_inverse_round_trip() {
        let grid = grid();
        let p = SieveParams::new(0.2, crate::pacf::pacf_to_ar(&[0.5, -0.3])).unwrap();
        let gamma = gamma_matrix(&p, &grid).unwrap();
        let inv = gamma_inverse(&p, &grid).unwrap();
        let prod = &gamma * &inv.matrix;
        let id = DMatrix::<f64>::identity(3, 3);
        let dev = (&prod - &id).abs().max();
        assert!(dev < 1e-8, "Gamma * Gamma^-1 deviates by {dev}");
        assert!(inv.var_dd > 0.0);
    }

    #[test]
    fn gamma_inverse_pure_memory() {
        let grid = grid();
        let p = SieveParams::new(0.3, vec![]).unwrap();
        let inv = gamma_inverse(&p, &grid).unwrap();
        assert_abs_diff_eq!(inv.var_dd, 6.0 / (PI * PI), epsilon = 1e-9);
    }

    #[test]
    fn quadrature_doubling_is_converged() {
        let g1 = QuadratureGrid::new(4096);
        let g2 = QuadratureGrid::new(8192);
        for (d, phi) in [(0.49, vec![]), (0.3, vec![0.8]), (0.0, vec![0.5, -0.4])] {
            let p = SieveParams::new(d, crate::pacf::pacf_to_ar(&phi)).unwrap();
            let m1 = gamma_matrix(&p, &g1).unwrap();
            let m2 = gamma_matrix(&p, &g2).unwrap();
            let dev = (&m1 - &m2).abs().max();
            assert!(dev < 1e-6, "doubling moved entries by {dev}");
        }
    }

    #[test]
    fn grid_invariants() {
        let g = QuadratureGrid::default();
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes().iter().all(|&x| x > 0.0 && x <= PI));
        let wsum: f64 = g.weights().iter().sum();
        assert!((wsum - PI).abs() < 1e-10, "weight sum {wsum}");
        // integrates smooth even functions to machine precision:
        // int_{-pi}^{pi} cos^2 = pi
        let v = g.integrate_even(|x| x.cos() * x.cos());
        assert_abs_diff_eq!(v, PI, epsilon = 1e-12);
    }
}
