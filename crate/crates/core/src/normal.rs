//! Standard normal CDF, upper tail and quantile function.
//!
//! The CDF goes through Cody's rational approximations for erf/erfc
//! (double precision, relative error below 1e-15 away from the extreme
//! tails). The quantile uses Acklam's rational approximation polished by
//! one Halley step against the CDF, which brings it to full double
//! precision.

use std::f64::consts::PI;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const ONE_OVER_SQRT_PI: f64 = 0.564_189_583_547_756_28;

// Cody interval 1: erf(x) for |x| <= 0.46875
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];

// Cody interval 2: erfc(x) for 0.46875 < x <= 4
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];

// Cody interval 3: erfc(x) for x > 4
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

fn erf_small(x: f64) -> f64 {
    let y = x * x;
    let mut num = ERF_A[4] * y;
    let mut den = y;
    for i in 0..3 {
        num = (num + ERF_A[i]) * y;
        den = (den + ERF_B[i]) * y;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

fn erfc_mid(x: f64) -> f64 {
    let mut num = ERF_C[8] * x;
    let mut den = x;
    for i in 0..7 {
        num = (num + ERF_C[i]) * x;
        den = (den + ERF_D[i]) * x;
    }
    let r = (num + ERF_C[7]) / (den + ERF_D[7]);
    scaled_exp(x) * r
}

fn erfc_large(x: f64) -> f64 {
    let y = 1.0 / (x * x);
    let mut num = ERF_P[5] * y;
    let mut den = y;
    for i in 0..4 {
        num = (num + ERF_P[i]) * y;
        den = (den + ERF_Q[i]) * y;
    }
    let r = y * (num + ERF_P[4]) / (den + ERF_Q[4]);
    scaled_exp(x) * (ONE_OVER_SQRT_PI - r) / x
}

// exp(-x^2) computed with the split x^2 = hi^2 + 2*hi*lo + lo^2 to keep
// relative accuracy for large |x|.
fn scaled_exp(x: f64) -> f64 {
    let hi = (x * 16.0).trunc() / 16.0;
    let lo = x - hi;
    (-hi * hi).exp() * (-(hi + x) * lo).exp()
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let ax = x.abs();
    let val = if ax <= 0.46875 {
        return 1.0 - erf_small(x);
    } else if ax <= 4.0 {
        erfc_mid(ax)
    } else if ax < 26.6 {
        erfc_large(ax)
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - val
    } else {
        val
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal upper tail probability, accurate deep into the tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

// Acklam's rational approximation for the normal quantile.
const INV_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const INV_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const INV_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const INV_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

/// Standard normal quantile (inverse CDF). Returns infinities at p = 0, 1
/// and NaN outside [0, 1].
pub fn norm_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((INV_A[0] * r + INV_A[1]) * r + INV_A[2]) * r + INV_A[3]) * r + INV_A[4]) * r
            + INV_A[5])
            * q
            / (((((INV_B[0] * r + INV_B[1]) * r + INV_B[2]) * r + INV_B[3]) * r + INV_B[4]) * r
                + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    };
    // one Halley step against the high-precision CDF
    let e = norm_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values frozen from a 30-digit computation
    const CDF_REF: [(f64, f64); 14] = [
        (-8.0, 6.220960574271784e-16),
        (-5.0, 2.866515718791939e-07),
        (-3.0, 0.0013498980316300946),
        (-1.9, 0.028716559816001807),
        (-1.0, 0.15865525393145705),
        (-0.5, 0.3085375387259869),
        (0.0, 0.5),
        (0.3, 0.6179114221889527),
        (1.0, 0.8413447460685429),
        (1.959963984540054, 0.975),
        (2.5, 0.9937903346742238),
        (4.0, 0.9999683287581669),
        (6.0, 0.9999999990134123),
        (9.0, 1.0),
    ];

    const QUANTILE_REF: [(f64, f64); 9] = [
        (1e-09, -5.9978070150076865),
        (0.001, -3.090232306167813),
        (0.025, -1.9599639845400545),
        (0.05, -1.6448536269514729),
        (0.1, -1.2815515655446004),
        (0.5, 0.0),
        (0.95, 1.6448536269514722),
        (0.975, 1.959963984540054),
        (0.999, 3.090232306167813),
    ];

    const ERFC_REF: [(f64, f64); 5] = [
        (0.1, 0.887537083981715),
        (0.7, 0.32219880616258156),
        (2.0, 0.004677734981047266),
        (5.0, 1.537459794428035e-12),
        (10.0, 2.088487583762545e-45),
    ];

    #[test]
    fn erfc_matches_reference() {
        for &(x, want) in &ERFC_REF {
            let got = erfc(x);
            assert!(
                (got - want).abs() <= 1e-14 * want.abs().max(1e-300),
                "erfc({x}) = {got}, want {want}"
            );
            let got_neg = erfc(-x);
            assert!((got_neg - (2.0 - want)).abs() < 1e-13);
        }
    }

    #[test]
    fn cdf_matches_reference_to_1e10() {
        for &(x, want) in &CDF_REF {
            let got = norm_cdf(x);
            assert!(
                (got - want).abs() < 1e-13,
                "norm_cdf({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn sf_is_complement_and_tail_accurate() {
        assert!((norm_sf(1.9) - 0.028716559816001807).abs() < 1e-13);
        // deep tail keeps relative accuracy where 1 - cdf would round to 0
        let sf = norm_sf(9.0);
        assert!(sf > 0.0 && sf < 2e-19);
        for x in [-3.0, -0.7, 0.0, 1.3, 4.2] {
            assert!((norm_sf(x) - (1.0 - norm_cdf(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_matches_reference_to_1e9() {
        for &(p, want) in &QUANTILE_REF {
            let got = norm_quantile(p);
            assert!(
                (got - want).abs() < 1e-9,
                "norm_quantile({p}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn quantile_round_trips_cdf() {
        for i in 1..99 {
            let p = i as f64 / 100.0;
            let x = norm_quantile(p);
            assert!((norm_cdf(x) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_edge_cases() {
        assert_eq!(norm_quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(norm_quantile(1.0), f64::INFINITY);
        assert!(norm_quantile(-0.1).is_nan());
        assert!(norm_quantile(1.1).is_nan());
    }
}
