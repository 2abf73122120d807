//! Local mean estimates and mean-corrected periodograms.
//!
//! The series is treated as zero outside 1..=T (every windowed accessor
//! applies that convention). Block j of length N covers indices
//! (j-1)N+1 ..= jN with midpoint t_j = (j-1)N + N/2 and rescaled midpoint
//! u_j = t_j / T, so the M blocks tile the truncated sample exactly.

use rustfft::{num_complex::Complex64, FftPlanner};
use std::f64::consts::PI;

use crate::error::{LrdError, Result};

/// Read-only view of the observed series with the out-of-range-is-zero
/// convention. Indices are 1-based to match the block arithmetic.
#[derive(Debug, Clone, Copy)]
pub struct SeriesView<'a> {
    values: &'a [f64],
}

impl<'a> SeriesView<'a> {
    pub fn new(values: &'a [f64]) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// X_t for 1-based t; zero outside the observed range.
    #[inline]
    pub fn get(&self, t: i64) -> f64 {
        if t >= 1 && t <= self.values.len() as i64 {
            self.values[(t - 1) as usize]
        } else {
            0.0
        }
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }
}

/// Local-window mean estimate, precomputed via prefix sums.
///
/// `mu_at(t)` averages the window t - L/2 + 1 ..= t + L/2. Out-of-range
/// indices contribute zero to the sum while the divisor stays at the
/// number of in-range terms, so the estimate remains level-unbiased at
/// the sample edges (an all-zero divisor-L version turns the series mean
/// into an artificial edge trend that the memory estimate then picks up).
#[derive(Debug, Clone)]
pub struct LocalMean {
    prefix: Vec<f64>,
    window: usize,
    len: usize,
}

impl LocalMean {
    pub fn new(series: &SeriesView<'_>, window: usize) -> Result<Self> {
        if window < 2 || window % 2 != 0 {
            return Err(LrdError::Config(format!(
                "mean window L = {window} must be even and at least 2"
            )));
        }
        if window > series.len() {
            return Err(LrdError::Config(format!(
                "mean window L = {window} exceeds sample length {}",
                series.len()
            )));
        }
        let mut prefix = Vec::with_capacity(series.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &v in series.values() {
            acc += v;
            prefix.push(acc);
        }
        Ok(Self {
            prefix,
            window,
            len: series.len(),
        })
    }

    /// Mean estimate at (1-based) index t; defined for any t.
    pub fn at(&self, t: i64) -> f64 {
        let half = (self.window / 2) as i64;
        let lo = (t - half + 1).max(1);
        let hi = (t + half).min(self.len as i64);
        if hi < lo {
            return 0.0;
        }
        let count = (hi - lo + 1) as f64;
        (self.prefix[hi as usize] - self.prefix[(lo - 1) as usize]) / count
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

/// One-shot local-window mean with the literal zero-padded convention:
/// out-of-range terms contribute zero while the divisor stays L.
pub fn local_window_mean(series: &SeriesView<'_>, window: usize, t: i64) -> Result<f64> {
    if window < 2 || window % 2 != 0 || window > series.len() {
        return Err(LrdError::Config(format!(
            "window L = {window} must be even with 2 <= L <= {}",
            series.len()
        )));
    }
    let half = (window / 2) as i64;
    let sum: f64 = (t - half + 1..=t + half).map(|j| series.get(j)).sum();
    Ok(sum / window as f64)
}

/// Mean-corrected periodogram of one block at its Fourier frequencies.
#[derive(Debug, Clone)]
pub struct LocalPeriodogram {
    /// Ordinates at lambda_p = 2 pi p / N for p = 1..=N/2.
    ordinates: Vec<f64>,
    block_index: usize,
    midpoint_t: usize,
    midpoint_u: f64,
    block_len: usize,
}

impl LocalPeriodogram {
    /// Assemble a periodogram from known ordinates at the Fourier
    /// frequencies of an even block length (synthetic spectra for
    /// plant-and-recover fits).
    pub fn from_ordinates(ordinates: Vec<f64>, block_len: usize) -> Result<Self> {
        if block_len % 2 != 0 || block_len < 4 {
            return Err(LrdError::Config(format!(
                "block length {block_len} must be even and at least 4"
            )));
        }
        if ordinates.len() != block_len / 2 {
            return Err(LrdError::Config(format!(
                "{} ordinates do not match block length {block_len}",
                ordinates.len()
            )));
        }
        if ordinates.iter().any(|&o| o < 0.0 || !o.is_finite()) {
            return Err(LrdError::Config("ordinates must be finite and nonnegative".into()));
        }
        Ok(Self {
            ordinates,
            block_index: 1,
            midpoint_t: block_len / 2,
            midpoint_u: 0.5,
            block_len,
        })
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn block_index(&self) -> usize {
        self.block_index
    }

    pub fn midpoint_t(&self) -> usize {
        self.midpoint_t
    }

    pub fn midpoint_u(&self) -> f64 {
        self.midpoint_u
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Fourier frequency of ordinate p (1-based).
    pub fn frequency(&self, p: usize) -> f64 {
        2.0 * PI * p as f64 / self.block_len as f64
    }
}

/// Block midpoint t_j = (j-1) N + N/2 for j = 1..=M.
pub fn block_midpoint(block_len: usize, block_index: usize) -> usize {
    (block_index - 1) * block_len + block_len / 2
}

fn periodogram_of(residuals: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = residuals.len();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex64> = residuals
        .iter()
        .map(|&r| Complex64::new(r, 0.0))
        .collect();
    fft.process(&mut buf);
    let scale = 1.0 / (2.0 * PI * n as f64);
    buf.iter().map(|c| c.norm_sqr() * scale).collect()
}

/// Mean-corrected local periodogram of block `j` (1-based), built by FFT.
///
/// The construction checks Parseval's identity over all N Fourier
/// frequencies against the time-domain energy of the corrected block.
pub fn local_periodogram(
    series: &SeriesView<'_>,
    mean: &LocalMean,
    block_len: usize,
    block_index: usize,
) -> Result<LocalPeriodogram> {
    local_periodogram_impl(series, mean, block_len, block_index, &mut FftPlanner::new())
}

pub(crate) fn local_periodogram_impl(
    series: &SeriesView<'_>,
    mean: &LocalMean,
    block_len: usize,
    block_index: usize,
    planner: &mut FftPlanner<f64>,
) -> Result<LocalPeriodogram> {
    let n = block_len;
    let t = series.len();
    if n % 2 != 0 || n < 4 {
        return Err(LrdError::Config(format!(
            "block length N = {n} must be even and at least 4"
        )));
    }
    if block_index < 1 || block_index * n > t {
        return Err(LrdError::Config(format!(
            "block {block_index} of length {n} does not fit a sample of length {t}"
        )));
    }
    let t_j = block_midpoint(n, block_index) as i64;
    let start = t_j - (n / 2) as i64 + 1;
    let residuals: Vec<f64> = (0..n as i64)
        .map(|p| {
            let idx = start + p;
            series.get(idx) - mean.at(idx)
        })
        .collect();
    let full = periodogram_of(&residuals, planner);

    // Parseval: (2 pi / N) sum_all I = (1/N) sum residual^2
    let lhs: f64 = full.iter().sum::<f64>() * 2.0 * PI / n as f64;
    let rhs: f64 = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
    if (lhs - rhs).abs() > 1e-8 * rhs.abs().max(1e-300) {
        return Err(LrdError::Numerical(format!(
            "Parseval check failed on block {block_index}: {lhs} vs {rhs}"
        )));
    }

    Ok(LocalPeriodogram {
        ordinates: full[1..=n / 2].to_vec(),
        block_index,
        midpoint_t: t_j as usize,
        midpoint_u: t_j as f64 / t as f64,
        block_len: n,
    })
}

/// Mean-corrected periodogram of the whole sample at lambda_j = 2 pi j / T,
/// j = 1..=T/2, with the 1/sqrt(2 pi T) normalization.
pub fn full_periodogram(series: &SeriesView<'_>, mean: &LocalMean) -> Result<Vec<f64>> {
    let t = series.len();
    if t < 8 {
        return Err(LrdError::Config(format!("sample length {t} below minimum 8")));
    }
    let residuals: Vec<f64> = (1..=t as i64).map(|i| series.get(i) - mean.at(i)).collect();
    let full = periodogram_of(&residuals, &mut FftPlanner::new());
    Ok(full[1..=t / 2].to_vec())
}
