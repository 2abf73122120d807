//! Generation of time-varying FARIMA processes and the Monte Carlo
//! harness for level/power experiments.
//!
//! A path is built forward in time with all coefficient functions frozen
//! at the current rescaled time u = t/T: the ARMA core G satisfies
//! (1 + sum_j a_j(u) B^j) G_t = mu(u) + (1 + sum_j m_j(u) B^j) e_t and the
//! observation integrates it fractionally, X_t = sum_k b_k(d(u)) G_{t-k},
//! with b_k the MA coefficients of (1-B)^{-d}. Pre-sample values of G are
//! zero; innovations reach back as far as the MA order and the configured
//! burn-in require.

use rayon::prelude::*;

use crate::error::{LrdError, Result};
use crate::lrtest::{run_test, RunSettings};
use crate::pacf::ar_to_pacf;
use crate::rng::CounterRng;

/// Coefficient function of rescaled time.
pub type TimeFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Innovation law; Student-t is standardized to unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Innovation {
    Gaussian,
    StudentT(u32),
}

/// Declarative description of a time-varying process.
pub struct TvProcessSpec {
    /// Intercept entering the driving recursion (the level of the output
    /// is mean/(1 + sum a_j) for a pure AR model).
    pub mean: TimeFn,
    /// Memory parameter function, values in [0, 0.5).
    pub d: TimeFn,
    /// AR coefficient functions, plus convention: 1 + sum a_j(u) B^j.
    pub ar: Vec<TimeFn>,
    /// MA coefficient functions, plus convention: 1 + sum m_j(u) B^j.
    pub ma: Vec<TimeFn>,
    /// Innovation scale function, strictly positive.
    pub sigma: TimeFn,
    pub innovation: Innovation,
    /// Cap on the fractional filter window; `None` keeps the exact finite
    /// past (cost O(T^2)).
    pub truncation: Option<usize>,
    /// Pre-sample steps generated and discarded; 0 reproduces the
    /// triangular-array definition that starts at t = 1.
    pub burn_in: usize,
}

impl std::fmt::Debug for TvProcessSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TvProcessSpec")
            .field("ar_order", &self.ar.len())
            .field("ma_order", &self.ma.len())
            .field("innovation", &self.innovation)
            .field("truncation", &self.truncation)
            .field("burn_in", &self.burn_in)
            .finish()
    }
}

impl TvProcessSpec {
    /// White noise with unit scale.
    pub fn white_noise() -> Self {
        Self {
            mean: Box::new(|_| 0.0),
            d: Box::new(|_| 0.0),
            ar: Vec::new(),
            ma: Vec::new(),
            sigma: Box::new(|_| 1.0),
            innovation: Innovation::Gaussian,
            truncation: None,
            burn_in: 0,
        }
    }

    /// Constant-coefficient FARIMA(p, d, q) with a stationary warm-up:
    /// a burn-in long enough that the retained stretch forgets the zero
    /// start. Used by diagnostics that compare against stationary theory.
    pub fn stationary_farima(d: f64, ar: Vec<f64>, ma: Vec<f64>, truncation: Option<usize>) -> Self {
        let burn = match truncation {
            Some(n) => 512usize.max(4 * (n as f64).sqrt().ceil() as usize),
            None => 512,
        };
        Self {
            mean: Box::new(|_| 0.0),
            d: Box::new(move |_| d),
            ar: ar
                .into_iter()
                .map(|a| Box::new(move |_u: f64| a) as TimeFn)
                .collect(),
            ma: ma
                .into_iter()
                .map(|b| Box::new(move |_u: f64| b) as TimeFn)
                .collect(),
            sigma: Box::new(|_| 1.0),
            innovation: Innovation::Gaussian,
            truncation,
            burn_in: burn,
        }
    }
}

/// Fractional integration coefficients b_0, ..., b_n of (1-B)^{-d}.
#[derive(Debug, Clone, PartialEq)]
pub struct FracCoeffs {
    pub d: f64,
    pub coeffs: Vec<f64>,
}

/// b_0 = 1, b_k = b_{k-1} (k - 1 + d)/k; the multiplicative recursion is
/// exact and avoids gamma-function overflow.
pub fn frac_coeffs(d: f64, n: usize) -> Result<FracCoeffs> {
    if !(0.0..0.5).contains(&d) {
        return Err(LrdError::Domain(format!(
            "fractional coefficient parameter d = {d} outside [0, 0.5)"
        )));
    }
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(1.0);
    for k in 1..=n {
        let prev = coeffs[k - 1];
        coeffs.push(prev * (k as f64 - 1.0 + d) / k as f64);
    }
    Ok(FracCoeffs { d, coeffs })
}

fn innovation_slots(innovation: Innovation) -> u64 {
    match innovation {
        Innovation::Gaussian => 1,
        Innovation::StudentT(nu) => nu as u64 + 1,
    }
}

fn draw(rng: &CounterRng, innovation: Innovation, index: u64) -> f64 {
    match innovation {
        Innovation::Gaussian => rng.standard_normal(index, 0),
        Innovation::StudentT(nu) => rng.standard_student_t(index, nu, 0),
    }
}

/// Generate a path of length `len`; deterministic in `seed`.
pub fn simulate_tvfarima(spec: &TvProcessSpec, len: usize, seed: u64) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(LrdError::Config(format!("path length {len} below 2")));
    }
    if innovation_slots(spec.innovation) > 1 {
        if let Innovation::StudentT(nu) = spec.innovation {
            if nu <= 2 {
                return Err(LrdError::Config(format!(
                    "Student-t innovations need nu > 2, got {nu}"
                )));
            }
        }
    }
    let q = spec.ma.len();
    let p = spec.ar.len();
    let total = len + spec.burn_in;
    let t_scale = len as f64;
    // rescaled time of generation step i (i = 1..=total); the burn-in is
    // glued before t = 1 at the initial coefficient values
    let u_of = |i: usize| -> f64 {
        let t = i as i64 - spec.burn_in as i64;
        (t.max(1) as f64 / t_scale).min(1.0)
    };

    let rng = CounterRng::new(seed, 0);
    // innovations e_t for t = 1-q ..= total, indexed from 0
    let e: Vec<f64> = (0..total + q)
        .map(|idx| {
            let i = idx as i64 - q as i64 + 1; // generation step of this innovation
            let u = u_of(i.max(1) as usize).min(1.0);
            let u = if i < 1 { u_of(1) } else { u };
            let sigma = (spec.sigma)(u);
            if sigma <= 0.0 || !sigma.is_finite() {
                return Err(LrdError::Config(format!(
                    "innovation scale {sigma} at u = {u} not positive"
                )));
            }
            Ok(sigma * draw(&rng, spec.innovation, idx as u64))
        })
        .collect::<Result<_>>()?;

    // ARMA core with frozen coefficients
    let mut core = vec![0.0; total];
    let mut ar_at = vec![0.0; p];
    let mut ma_at = vec![0.0; q];
    for i in 0..total {
        let u = u_of(i + 1);
        for (j, f) in spec.ar.iter().enumerate() {
            ar_at[j] = f(u);
        }
        if p > 0 {
            let stable = {
                if ar_at.iter().all(|a| a.abs() < 1e-14) {
                    true
                } else {
                    ar_to_pacf(&ar_at).is_some()
                }
            };
            if !stable {
                return Err(LrdError::InvalidParams(format!(
                    "AR polynomial unstable at u = {u}: {ar_at:?}"
                )));
            }
        }
        for (j, f) in spec.ma.iter().enumerate() {
            ma_at[j] = f(u);
        }
        let mut rhs = (spec.mean)(u) + e[i + q];
        for (j, &b) in ma_at.iter().enumerate() {
            rhs += b * e[i + q - (j + 1)];
        }
        let mut g = rhs;
        for (j, &a) in ar_at.iter().enumerate() {
            if i >= j + 1 {
                g -= a * core[i - (j + 1)];
            }
        }
        core[i] = g;
    }

    // fractional integration with coefficients frozen at each step
    let mut out = vec![0.0; len];
    let mut b_row: Vec<f64> = Vec::new();
    for t in 1..=len {
        let i = spec.burn_in + t; // generation step
        let u = t as f64 / t_scale;
        let d = (spec.d)(u);
        if !(0.0..0.5).contains(&d) {
            return Err(LrdError::InvalidParams(format!(
                "memory function value d = {d} at u = {u} outside [0, 0.5)"
            )));
        }
        let window = match spec.truncation {
            Some(cap) => cap.min(i - 1),
            None => i - 1,
        };
        if d == 0.0 {
            out[t - 1] = core[i - 1];
            continue;
        }
        // b_k row for this d
        b_row.clear();
        b_row.push(1.0);
        for k in 1..=window {
            let prev = b_row[k - 1];
            b_row.push(prev * (k as f64 - 1.0 + d) / k as f64);
        }
        let mut acc = 0.0;
        for (k, &b) in b_row.iter().enumerate() {
            acc += b * core[i - 1 - k];
        }
        out[t - 1] = acc;
    }
    Ok(out)
}

/// Models used throughout the calibration experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedModel {
    /// tvAR(1) with smoothly drifting intercept 1.2 u.
    Tvar1SmoothMean,
    /// tvAR(1) with intercept jumping from 0.65 to 1.3 at u = 1/2.
    Tvar1JumpMean,
    /// tvMA(1) with coefficient 0.55 sin(pi u).
    Tvma1,
    /// (1 + 0.2u B)(1-B)^{d(u)} X = Z with d(u) = 0.1 + 0.3u.
    TvFarima1D0,
    /// (1-B)^{d(u)} X = (1 - 0.35u B) Z with d(u) = 0.1 + 0.3u.
    TvFarima0D1,
    /// Stationary (1 + 0.25 B)(1-B)^{0.1} X = (1 - 0.3 B) Z.
    Farima1D1,
}

impl NamedModel {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "tvar1_smooth_mean" => Ok(Self::Tvar1SmoothMean),
            "tvar1_jump_mean" => Ok(Self::Tvar1JumpMean),
            "tvma1" => Ok(Self::Tvma1),
            "tvfarima_1_d_0" => Ok(Self::TvFarima1D0),
            "tvfarima_0_d_1" => Ok(Self::TvFarima0D1),
            "farima_1_d_1" => Ok(Self::Farima1D1),
            other => Err(LrdError::UnknownModel(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Tvar1SmoothMean => "tvar1_smooth_mean",
            Self::Tvar1JumpMean => "tvar1_jump_mean",
            Self::Tvma1 => "tvma1",
            Self::TvFarima1D0 => "tvfarima_1_d_0",
            Self::TvFarima0D1 => "tvfarima_0_d_1",
            Self::Farima1D1 => "farima_1_d_1",
        }
    }

    pub fn all() -> [Self; 6] {
        [
            Self::Tvar1SmoothMean,
            Self::Tvar1JumpMean,
            Self::Tvma1,
            Self::TvFarima1D0,
            Self::TvFarima0D1,
            Self::Farima1D1,
        ]
    }

    /// The process specification, exactly as the models are defined.
    pub fn spec(self) -> TvProcessSpec {
        let mut spec = TvProcessSpec::white_noise();
        match self {
            Self::Tvar1SmoothMean => {
                // X_t = 1.2u + 0.6u X_{t-1} + Z_t
                spec.mean = Box::new(|u| 1.2 * u);
                spec.ar = vec![Box::new(|u| -0.6 * u)];
            }
            Self::Tvar1JumpMean => {
                spec.mean = Box::new(|u| if u <= 0.5 { 0.65 } else { 1.3 });
                spec.ar = vec![Box::new(|u| -0.6 * u)];
            }
            Self::Tvma1 => {
                spec.ma = vec![Box::new(|u| 0.55 * (std::f64::consts::PI * u).sin())];
            }
            Self::TvFarima1D0 => {
                spec.d = Box::new(|u| 0.1 + 0.3 * u);
                spec.ar = vec![Box::new(|u| 0.2 * u)];
            }
            Self::TvFarima0D1 => {
                spec.d = Box::new(|u| 0.1 + 0.3 * u);
                spec.ma = vec![Box::new(|u| -0.35 * u)];
            }
            Self::Farima1D1 => {
                spec.d = Box::new(|_| 0.1);
                spec.ar = vec![Box::new(|_| 0.25)];
                spec.ma = vec![Box::new(|_| -0.3)];
            }
        }
        spec
    }
}

/// Simulate one of the named models.
pub fn simulate_named_model(model: NamedModel, len: usize, seed: u64) -> Result<Vec<f64>> {
    simulate_tvfarima(&model.spec(), len, seed)
}

/// Monte Carlo summary of a rejection-frequency experiment.
#[derive(Debug, Clone)]
pub struct McSummary {
    pub n_reps: usize,
    pub n_failed: usize,
    /// Rejection frequency at the 5% level.
    pub rate_5: f64,
    /// Rejection frequency at the 10% level.
    pub rate_10: f64,
    /// Binomial standard errors of the two rates.
    pub se_5: f64,
    pub se_10: f64,
}

/// Run `n_reps` seeded replications of simulate-then-test and collect
/// rejection frequencies at the 5% and 10% levels. Replication r uses the
/// child seed mix(seed, r), so thread count does not affect the result.
pub fn monte_carlo(
    model: NamedModel,
    len: usize,
    settings: &RunSettings,
    n_reps: usize,
    seed: u64,
    parallel: bool,
) -> Result<McSummary> {
    if n_reps == 0 {
        return Err(LrdError::Config("n_reps must be positive".into()));
    }
    let spec = model.spec();
    let run_one = |r: usize| -> Option<(bool, bool)> {
        let child = child_seed(seed, r as u64);
        let path = simulate_tvfarima(&spec, len, child).ok()?;
        let report = run_test(&path, settings).ok()?;
        Some((report.p_value <= 0.05, report.p_value <= 0.10))
    };
    let outcomes: Vec<Option<(bool, bool)>> = if parallel {
        (0..n_reps).into_par_iter().map(run_one).collect()
    } else {
        (0..n_reps).map(run_one).collect()
    };
    let n_failed = outcomes.iter().filter(|o| o.is_none()).count();
    if n_failed * 100 > n_reps {
        return Err(LrdError::Estimation {
            block: None,
            msg: format!("{n_failed} of {n_reps} replications failed"),
        });
    }
    let n_ok = (n_reps - n_failed) as f64;
    let r5 = outcomes.iter().flatten().filter(|(a, _)| *a).count() as f64 / n_ok;
    let r10 = outcomes.iter().flatten().filter(|(_, b)| *b).count() as f64 / n_ok;
    Ok(McSummary {
        n_reps,
        n_failed,
        rate_5: r5,
        rate_10: r10,
        se_5: (r5 * (1.0 - r5) / n_ok).sqrt(),
        se_10: (r10 * (1.0 - r10) / n_ok).sqrt(),
    })
}

/// Deterministic child seed for replication `r`.
pub fn child_seed(seed: u64, r: u64) -> u64 {
    let mut z = seed ^ r.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Biased sample autocovariances gamma_hat(0..=max_lag).
pub fn sample_acvf(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let t = values.len();
    if max_lag >= t {
        return Err(LrdError::Config(format!(
            "max_lag {max_lag} must be below the sample length {t}"
        )));
    }
    let mean = values.iter().sum::<f64>() / t as f64;
    let mut out = Vec::with_capacity(max_lag + 1);
    for h in 0..=max_lag {
        let mut acc = 0.0;
        for i in 0..t - h {
            acc += (values[i] - mean) * (values[i + h] - mean);
        }
        out.push(acc / t as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn frac_coeffs_known_values() {
        let b = frac_coeffs(0.0, 5).unwrap();
        assert_eq!(b.coeffs, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let b = frac_coeffs(0.37, 3).unwrap();
        assert_abs_diff_eq!(b.coeffs[1], 0.37, epsilon = 1e-15);
        let b = frac_coeffs(0.3, 2).unwrap();
        assert_abs_diff_eq!(b.coeffs[2], 0.3 * 1.3 / 2.0, epsilon = 1e-15);
        assert!(frac_coeffs(0.5, 3).is_err());
        assert!(frac_coeffs(-0.1, 3).is_err());
    }

    #[test]
    fn frac_coeffs_match_recursion_invariant() {
        let b = frac_coeffs(0.45, 200).unwrap();
        for k in 1..=200 {
            let want = b.coeffs[k - 1] * (k as f64 - 1.0 + 0.45) / k as f64;
            assert_eq!(b.coeffs[k], want);
        }
    }

    #[test]
    fn squared_partial_sums_increase_in_d() {
        let n = 100;
        let mut prev = 0.0;
        for d10 in 0..5 {
            let d = d10 as f64 / 10.0;
            let b = frac_coeffs(d, n).unwrap();
            let s: f64 = b.coeffs.iter().map(|c| c * c).sum();
            assert!(s >= prev, "partial sum not increasing at d = {d}");
            prev = s;
        }
    }

    #[test]
    fn identity_filter_returns_innovations() {
        let spec = TvProcessSpec::white_noise();
        let x = simulate_tvfarima(&spec, 100, 42).unwrap();
        let rng = CounterRng::new(42, 0);
        for (i, &v) in x.iter().enumerate() {
            assert_eq!(v, rng.standard_normal(i as u64, 0));
        }
    }

    #[test]
    fn seed_determinism() {
        let x = simulate_named_model(NamedModel::TvFarima1D0, 256, 7).unwrap();
        let y = simulate_named_model(NamedModel::TvFarima1D0, 256, 7).unwrap();
        assert_eq!(x, y);
        let z = simulate_named_model(NamedModel::TvFarima1D0, 256, 8).unwrap();
        assert_ne!(x, z);
    }

    #[test]
    fn jump_mean_levels() {
        // intercept 0.65 with a(u) = -0.6u gives level roughly
        // 0.65/(1 - 0.6 u) averaged over the half; a crude band suffices
        let t = 4096;
        let x = simulate_named_model(NamedModel::Tvar1JumpMean, t, 3).unwrap();
        let first: f64 = x[..t / 2].iter().sum::<f64>() / (t / 2) as f64;
        let second: f64 = x[t / 2..].iter().sum::<f64>() / (t / 2) as f64;
        assert!((0.55..1.05).contains(&first), "first-half mean {first}");
        assert!(second > first + 0.5, "no visible level shift: {first} vs {second}");
    }

    #[test]
    fn tvfarima_endpoint_coefficients() {
        // at t = T the model uses d = 0.4 and AR coefficient 0.2
        let spec = NamedModel::TvFarima1D0.spec();
        assert_abs_diff_eq!((spec.d)(1.0), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!((spec.ar[0])(1.0), 0.2, epsilon = 1e-15);
        let spec = NamedModel::TvFarima0D1.spec();
        assert_abs_diff_eq!((spec.ma[0])(1.0), -0.35, epsilon = 1e-15);
    }

    #[test]
    fn unknown_model_name_rejected() {
        assert!(NamedModel::parse("garch").is_err());
        assert_eq!(
            NamedModel::parse("tvma1").unwrap(),
            NamedModel::Tvma1
        );
    }

    #[test]
    fn acvf_basics() {
        let c = vec![3.25; 50];
        let g = sample_acvf(&c, 5).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        let vals: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
        let g = sample_acvf(&vals, 3).unwrap();
        let mean = vals.iter().sum::<f64>() / 64.0;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 64.0;
        assert_abs_diff_eq!(g[0], var, epsilon = 1e-12);
        assert!(sample_acvf(&vals, 64).is_err());
    }

    #[test]
    fn iid_acvf_within_bartlett_bands() {
        let spec = TvProcessSpec::white_noise();
        let x = simulate_tvfarima(&spec, 4096, 99).unwrap();
        let g = sample_acvf(&x, 50).unwrap();
        let band = 4.0 / (4096f64).sqrt();
        let inside = g[1..]
            .iter()
            .filter(|&&v| (v / g[0]).abs() < band)
            .count();
        assert!(inside >= 48, "only {inside} of 50 lags inside the band");
    }

    #[test]
    fn stationary_long_memory_acf_decay() {
        // gamma(k) ~ C k^{2d-1}: regress log acvf on log lag over 50..200
        let spec = TvProcessSpec::stationary_farima(0.3, vec![], vec![], None);
        let x = simulate_tvfarima(&spec, 8192, 12345).unwrap();
        let g = sample_acvf(&x, 200).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for h in 50..=200 {
            if g[h] > 0.0 {
                xs.push((h as f64).ln());
                ys.push(g[h].ln());
            }
        }
        assert!(xs.len() > 100, "too many nonpositive autocovariances");
        let nx = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / nx;
        let my = ys.iter().sum::<f64>() / nx;
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = xs.iter().map(|a| (a - mx) * (a - mx)).sum();
        let slope = sxy / sxx;
        let want = 2.0 * 0.3 - 1.0;
        assert!(
            (slope - want).abs() < 0.15,
            "acf log-log slope {slope}, want {want} +- 0.15"
        );
    }

    #[test]
    fn child_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..10_000u64 {
            assert!(seen.insert(child_seed(42, r)));
        }
    }
}
