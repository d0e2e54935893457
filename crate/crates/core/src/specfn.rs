//! Exponential-integral kernel behind every closed-form rate in the library.
//!
//! `exp_e1` evaluates E1(x) = integral of e^{-t}/t from x to infinity.
//! `nu` evaluates the exponentially scaled form e^x * E1(x), which is what the
//! rate formulas actually consume; it is computed directly so it never
//! overflows for large arguments. `rate_kernel` is the exact value of
//! E[log(1 + s*|g|^2) * chi(|g|^2 >= h)] for |g|^2 exponential with mean
//! sigma^2:
//!
//!   e^{-h/sigma^2} * [ log(1 + s*h) + nu((1 + s*h) / (s*sigma^2)) ]

use crate::error::{require_nonnegative, require_positive, Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponentially scaled exponential integral e^alpha * E1(alpha), kept
/// together with the argument it was evaluated at.
///
/// For every alpha > 0 the value lies between (1/2)*ln(1 + 2/alpha) and
/// ln(1 + 1/alpha).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuValue {
    pub alpha: f64,
    pub value: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "alpha must be positive and finite, got {alpha}"
        )))
    }
}

/// Power series for E1(x), accurate for 0 < x <= 1:
/// E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
fn e1_series(x: f64) -> f64 {
    let mut term = 1.0; // x^k / k!
    let mut sum = 0.0;
    for k in 1..=60u32 {
        term *= x / k as f64;
        let contrib = if k % 2 == 1 { term } else { -term } / k as f64;
        sum += contrib;
        if contrib.abs() <= sum.abs() * 1e-17 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Modified Lentz continued fraction for e^x * E1(x), accurate for x >= 1:
/// e^x * E1(x) = 1 / (x + 1 - 1/(x + 3 - 4/(x + 5 - 9/(x + 7 - ...))))
fn nu_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=500u64 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

pub(crate) fn nu_unchecked(alpha: f64) -> f64 {
    if alpha <= 1.0 {
        alpha.exp() * e1_series(alpha)
    } else {
        nu_continued_fraction(alpha)
    }
}

/// E1(alpha) for alpha > 0.
pub fn exp_e1(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha <= 1.0 {
        Ok(e1_series(alpha))
    } else {
        Ok((-alpha).exp() * nu_continued_fraction(alpha))
    }
}

/// e^alpha * E1(alpha) for alpha > 0, evaluated without overflow: the
/// continued-fraction branch produces the scaled value directly instead of
/// multiplying e^alpha by E1(alpha).
pub fn nu(alpha: f64) -> Result<NuValue> {
    check_alpha(alpha)?;
    Ok(NuValue {
        alpha,
        value: nu_unchecked(alpha),
    })
}

/// Exact expectation E[log(1 + s*|g|^2) * chi(|g|^2 >= h)] for |g|^2
/// exponential with mean `sigma2`. With h = 0 this reduces to
/// nu(1/(s*sigma2)).
pub fn rate_kernel(s: f64, sigma2: f64, h: f64) -> Result<f64> {
    require_positive("s", s)?;
    require_positive("sigma2", sigma2)?;
    require_nonnegative("h", h)?;
    let alpha = (1.0 + s * h) / (s * sigma2);
    Ok((-(h / sigma2)).exp() * ((s * h).ln_1p() + nu_unchecked(alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values cross-checked between the adaptive quadrature oracle
    // in the acceptance suite and an independent library evaluation.
    const E1_1: f64 = 0.219_383_934_395_520_5;
    const E1_10: f64 = 4.156_968_929_685_325e-6;
    const NU_1: f64 = 0.596_347_362_323_194_6;
    const NU_10: f64 = 0.091_563_333_939_788_09;

    #[test]
    fn e1_reference_values() {
        assert!((exp_e1(1.0).unwrap() - E1_1).abs() <= 1e-10);
        assert!((exp_e1(10.0).unwrap() - E1_10).abs() <= 1e-11);
        assert_relative_eq!(exp_e1(0.5).unwrap(), 0.559_773_594_776_160_8, max_relative = 1e-12);
        assert_relative_eq!(exp_e1(2.0).unwrap(), 0.048_900_510_708_061_125, max_relative = 1e-12);
        assert_relative_eq!(exp_e1(100.0).unwrap(), 3.683_597_761_682_032e-46, max_relative = 1e-12);
    }

    #[test]
    fn e1_within_scaled_nu_bounds() {
        // The nu envelope divided by e^alpha pins E1 itself.
        let alpha = 0.5f64;
        let v = exp_e1(alpha).unwrap();
        let lo = (-alpha).exp() * 0.5 * (1.0 + 2.0 / alpha).ln();
        let hi = (-alpha).exp() * (1.0 + 1.0 / alpha).ln();
        assert!(lo < v && v < hi, "{lo} < {v} < {hi}");
    }

    #[test]
    fn nu_reference_values() {
        assert!((nu(1.0).unwrap().value - NU_1).abs() <= 1e-6);
        assert_relative_eq!(nu(1.0).unwrap().value, NU_1, max_relative = 1e-12);
        let v2 = nu(2.0).unwrap().value;
        assert!((0.5 * 2.0f64.ln()..=1.5f64.ln()).contains(&v2));
        assert_relative_eq!(nu(1e6).unwrap().value, 1e-6, max_relative = 0.01);
    }

    #[test]
    fn nu_large_argument_does_not_overflow() {
        let v = nu(1e8).unwrap().value;
        assert!(v.is_finite() && v > 0.0);
        assert_relative_eq!(v, 1e-8, max_relative = 1e-6);
        assert!(nu(5000.0).unwrap().value.is_finite());
    }

    #[test]
    fn nu_envelope_and_monotonicity_on_grid() {
        let mut prev = f64::INFINITY;
        for k in 0..=400 {
            let alpha = 10f64.powf(-3.0 + 10.0 * k as f64 / 400.0);
            let v = nu(alpha).unwrap().value;
            assert!(v > 0.0);
            let lo = 0.5 * (1.0 + 2.0 / alpha).ln();
            let hi = (1.0 + 1.0 / alpha).ln();
            assert!(lo <= v && v <= hi, "alpha={alpha}: {lo} <= {v} <= {hi}");
            assert!(v < prev, "nu must decrease, alpha={alpha}");
            prev = v;
        }
    }

    #[test]
    fn rate_kernel_reductions() {
        // h = 0 reduces to nu(1/(s*sigma2)).
        assert_relative_eq!(rate_kernel(0.1, 1.0, 0.0).unwrap(), NU_10, max_relative = 1e-12);
        // Huge threshold kills the indicator.
        assert_eq!(rate_kernel(0.5, 1.0, 1e6).unwrap(), 0.0);
        // Causal closed form at snr = 1e-3, lambda = 0.5.
        let h = 0.5 * 1000f64.ln();
        let s = 1e-3 * h.exp();
        assert_relative_eq!(
            rate_kernel(s, 1.0, h).unwrap(),
            4.155_142_771_298_373e-3,
            max_relative = 1e-11
        );
    }

    #[test]
    fn rate_kernel_monotone_in_s_and_h() {
        let s_grid = [1e-4, 1e-3, 1e-2, 1e-1, 0.5];
        let h_grid = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0];
        for sig in [0.25, 1.0, 2.0] {
            for w in h_grid.windows(2) {
                let a = rate_kernel(1e-2, sig, w[0]).unwrap();
                let b = rate_kernel(1e-2, sig, w[1]).unwrap();
                assert!(b <= a, "nonincreasing in h failed at sigma2={sig}");
            }
            for w in s_grid.windows(2) {
                let a = rate_kernel(w[0], sig, 1.0).unwrap();
                let b = rate_kernel(w[1], sig, 1.0).unwrap();
                assert!(b >= a, "nondecreasing in s failed at sigma2={sig}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(exp_e1(0.0).is_err());
        assert!(exp_e1(-1.0).is_err());
        assert!(exp_e1(f64::NAN).is_err());
        assert!(exp_e1(f64::INFINITY).is_err());
        assert!(nu(-2.0).is_err());
        assert!(rate_kernel(0.0, 1.0, 0.0).is_err());
        assert!(rate_kernel(0.1, 0.0, 0.0).is_err());
        assert!(rate_kernel(0.1, 1.0, -0.5).is_err());
    }
}
