//! Box-constrained quasi-Newton minimizer.
//!
//! BFGS on the inverse Hessian with projection onto box bounds and an
//! Armijo backtracking line search. The approximation is reset whenever
//! the active set changes, which keeps the update valid on the face the
//! iterate currently lives on. Dimensions here are tiny (k+1 <= ~10), so
//! dense algebra is fine.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Euclidean norm of the projected gradient at the returned point.
    pub projected_grad_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

pub struct BoxBfgs {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl BoxBfgs {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self {
            lower,
            upper,
            grad_tol: 1e-8,
            max_iter: 400,
        }
    }

    fn clip(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
    }

    fn active_set(&self, x: &[f64], g: &[f64]) -> Vec<bool> {
        const EDGE: f64 = 1e-12;
        (0..x.len())
            .map(|i| {
                (x[i] <= self.lower[i] + EDGE && g[i] > 0.0)
                    || (x[i] >= self.upper[i] - EDGE && g[i] < 0.0)
            })
            .collect()
    }

    /// Minimize `fg` (value and gradient) from `x0`.
    pub fn minimize<F>(&self, mut fg: F, x0: &[f64]) -> OptimResult
    where
        F: FnMut(&[f64]) -> (f64, Vec<f64>),
    {
        let n = x0.len();
        let mut x = x0.to_vec();
        self.clip(&mut x);
        let (mut f, mut g) = fg(&x);
        let mut evals = 1usize;
        let mut h = DMatrix::<f64>::identity(n, n);
        let mut prev_active = self.active_set(&x, &g);
        let mut pg_norm = projected_norm(&x, &g, &prev_active);
        let mut iter = 0usize;

        while iter < self.max_iter {
            if pg_norm < self.grad_tol {
                return OptimResult {
                    x,
                    value: f,
                    projected_grad_norm: pg_norm,
                    converged: true,
                    iterations: iter,
                    evaluations: evals,
                };
            }
            iter += 1;

            let active = self.active_set(&x, &g);
            if active != prev_active {
                h = DMatrix::identity(n, n);
            }
            let mut pg = DVector::from_column_slice(&g);
            for i in 0..n {
                if active[i] {
                    pg[i] = 0.0;
                }
            }
            let mut dir = -(&h * &pg);
            for i in 0..n {
                if active[i] {
                    dir[i] = 0.0;
                }
            }
            // fall back to steepest descent when the model direction is not
            // a descent direction
            if dir.dot(&pg) > -1e-14 * dir.norm() * pg.norm() {
                dir = -pg.clone();
                h = DMatrix::identity(n, n);
            }
            if dir.norm() == 0.0 {
                break;
            }

            // projected Armijo backtracking
            let mut alpha = 1.0;
            let mut accepted = false;
            let mut x_new = x.clone();
            let mut f_new = f;
            let mut g_new = g.clone();
            for _ in 0..60 {
                for i in 0..n {
                    x_new[i] = x[i] + alpha * dir[i];
                }
                self.clip(&mut x_new);
                let step: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let step_norm: f64 = step.iter().map(|s| s * s).sum::<f64>().sqrt();
                if step_norm == 0.0 {
                    break;
                }
                let (fv, gv) = fg(&x_new);
                evals += 1;
                let slope: f64 = (0..n).map(|i| g[i] * step[i]).sum();
                if fv <= f + 1e-4 * slope && fv.is_finite() {
                    f_new = fv;
                    g_new = gv;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // no progress along this direction; report where we stand
                let active = self.active_set(&x, &g);
                pg_norm = projected_norm(&x, &g, &active);
                return OptimResult {
                    x,
                    value: f,
                    projected_grad_norm: pg_norm,
                    converged: pg_norm < self.grad_tol.max(1e-6),
                    iterations: iter,
                    evaluations: evals,
                };
            }

            let s = DVector::from_iterator(n, (0..n).map(|i| x_new[i] - x[i]));
            let y = DVector::from_iterator(n, (0..n).map(|i| g_new[i] - g[i]));
            let sy = s.dot(&y);
            if sy > 1e-12 * s.norm() * y.norm() {
                // BFGS update of the inverse Hessian approximation
                let rho = 1.0 / sy;
                let hy = &h * &y;
                let yhy = y.dot(&hy);
                let term1 = (&s * s.transpose()) * (rho * rho * yhy + rho);
                let term2 = (&hy * s.transpose() + &s * hy.transpose()) * rho;
                h = h + term1 - term2;
            } else {
                h = DMatrix::identity(n, n);
            }

            x = x_new;
            f = f_new;
            g = g_new;
            prev_active = self.active_set(&x, &g);
            pg_norm = projected_norm(&x, &g, &prev_active);
        }

        OptimResult {
            x,
            value: f,
            projected_grad_norm: pg_norm,
            converged: pg_norm < self.grad_tol.max(1e-6),
            iterations: iter,
            evaluations: evals,
        }
    }
}

fn projected_norm(_x: &[f64], g: &[f64], active: &[bool]) -> f64 {
    g.iter()
        .zip(active)
        .map(|(gi, &a)| if a { 0.0 } else { gi * gi })
        .sum::<f64>()
        .sqrt()
}
