//! Sparse delay-Doppler channel model.
//!
//! Diversity and coherence follow a power-law scaling: the Doppler/time
//! diversity is (T*W_d)^delta1, the delay/frequency diversity is
//! (W*T_m)^delta2, and the signal space factors as N = T*W = N_c * D where
//! N_c is the coherence dimension and D the number of independent coherence
//! subspaces. Block fading is Rayleigh, so squared subspace gains |h_i|^2 are
//! i.i.d. unit-mean exponentials; only the squared magnitudes are ever
//! sampled because every quantity in the library depends on them alone.

use crate::error::{require_open_unit, require_positive, Error, Result};
use rand::Rng;
use rand_distr::Exp1;

/// Physical channel constants: delay spread, Doppler spread, and the two
/// sparsity exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    t_m: f64,
    w_d: f64,
    delta1: f64,
    delta2: f64,
}

impl ChannelParams {
    pub fn new(t_m: f64, w_d: f64, delta1: f64, delta2: f64) -> Result<Self> {
        require_positive("t_m", t_m)?;
        require_positive("w_d", w_d)?;
        require_open_unit("delta1", delta1)?;
        require_open_unit("delta2", delta2)?;
        if t_m * w_d >= 1.0 {
            return Err(Error::Domain(format!(
                "channel must be underspread: t_m * w_d = {} >= 1",
                t_m * w_d
            )));
        }
        Ok(Self {
            t_m,
            w_d,
            delta1,
            delta2,
        })
    }

    pub fn t_m(&self) -> f64 {
        self.t_m
    }
    pub fn w_d(&self) -> f64 {
        self.w_d
    }
    pub fn delta1(&self) -> f64 {
        self.delta1
    }
    pub fn delta2(&self) -> f64 {
        self.delta2
    }
}

/// Signaling choices: duration, bandwidth, average power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpace {
    t: f64,
    w: f64,
    p: f64,
}

impl SignalSpace {
    pub fn new(t: f64, w: f64, p: f64) -> Result<Self> {
        require_positive("t", t)?;
        require_positive("w", w)?;
        require_positive("p", p)?;
        if t * w < 1.0 {
            return Err(Error::Domain(format!(
                "signal space needs at least one dimension: t * w = {}",
                t * w
            )));
        }
        Ok(Self { t, w, p })
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Signal-space dimension N = T*W.
    pub fn n(&self) -> f64 {
        self.t * self.w
    }

    /// Transmit energy per symbol, P/W.
    pub fn snr(&self) -> f64 {
        self.p / self.w
    }
}

/// Diversity profile: per-axis and total degrees of freedom plus the rich
/// multipath ceiling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofProfile {
    pub d_t: f64,
    pub d_w: f64,
    pub d: f64,
    pub d_max: f64,
}

/// Coherence profile. `mu` solves n_c = snr^{-mu}; it is undefined (None)
/// when snr >= 1, which is not an error because the closed-form rates remain
/// valid there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceProfile {
    pub t_coh: f64,
    pub w_coh: f64,
    pub n_c: f64,
    pub mu: Option<f64>,
}

fn check_resolvable(cp: &ChannelParams, ss: &SignalSpace) -> Result<(f64, f64)> {
    let tw_d = ss.t() * cp.w_d();
    let wt_m = ss.w() * cp.t_m();
    if tw_d < 1.0 {
        return Err(Error::Domain(format!(
            "Doppler axis unresolved: t * w_d = {tw_d} < 1"
        )));
    }
    if wt_m < 1.0 {
        return Err(Error::Domain(format!(
            "delay axis unresolved: w * t_m = {wt_m} < 1"
        )));
    }
    Ok((tw_d, wt_m))
}

/// Power-law diversity: d_t = (t*w_d)^delta1, d_w = (w*t_m)^delta2, and the
/// rich-multipath ceiling d_max = ceil(t*w_d) * ceil(t_m*w).
pub fn dof_profile(cp: &ChannelParams, ss: &SignalSpace) -> Result<DofProfile> {
    let (tw_d, wt_m) = check_resolvable(cp, ss)?;
    let d_t = tw_d.powf(cp.delta1());
    let d_w = wt_m.powf(cp.delta2());
    Ok(DofProfile {
        d_t,
        d_w,
        d: d_t * d_w,
        d_max: tw_d.ceil() * wt_m.ceil(),
    })
}

/// Coherence scaling: t_coh = t^{1-delta1} / w_d^{delta1} and
/// w_coh = w^{1-delta2} / t_m^{delta2}, with n_c = t_coh * w_coh.
pub fn coherence_profile(cp: &ChannelParams, ss: &SignalSpace) -> Result<CoherenceProfile> {
    check_resolvable(cp, ss)?;
    let t_coh = ss.t().powf(1.0 - cp.delta1()) / cp.w_d().powf(cp.delta1());
    let w_coh = ss.w().powf(1.0 - cp.delta2()) / cp.t_m().powf(cp.delta2());
    let n_c = t_coh * w_coh;
    let snr = ss.snr();
    let mu = if snr < 1.0 {
        Some(n_c.ln() / (1.0 / snr).ln())
    } else {
        None
    };
    Ok(CoherenceProfile {
        t_coh,
        w_coh,
        n_c,
        mu,
    })
}

/// Squared block-fading gains |h_i|^2 of one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    gains2: Vec<f64>,
}

impl ChannelRealization {
    /// Wraps explicit squared gains, e.g. for tests or external traces.
    pub fn from_gains2(gains2: Vec<f64>) -> Result<Self> {
        if gains2.is_empty() {
            return Err(Error::Domain("realization needs at least one gain".into()));
        }
        if gains2.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::Domain("squared gains must be finite and nonnegative".into()));
        }
        Ok(Self { gains2 })
    }

    pub fn gains2(&self) -> &[f64] {
        &self.gains2
    }

    pub fn d(&self) -> usize {
        self.gains2.len()
    }

    pub fn mean_gain(&self) -> f64 {
        crate::accum::sum(self.gains2.iter().copied()) / self.gains2.len() as f64
    }
}

/// Draws `d` i.i.d. unit-mean exponential squared gains, deterministic in the
/// seed (ChaCha8 stream 0 of the seed; see the crate-level RNG note).
pub fn sample_realization(d: usize, seed: u64) -> Result<ChannelRealization> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    let mut rng = crate::rng::stream(seed, 0);
    let gains2 = (0..d).map(|_| rng.sample(Exp1)).collect();
    Ok(ChannelRealization { gains2 })
}

/// Expected number of subspaces whose gain clears the threshold:
/// E[D_eff] = d * e^{-h_t}.
pub fn expected_deff(d: f64, h_t: f64) -> Result<f64> {
    require_positive("d", d)?;
    crate::error::require_nonnegative("h_t", h_t)?;
    Ok(d * (-h_t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ChannelParams {
        ChannelParams::new(1e-6, 10.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn rejects_overspread_and_bad_exponents() {
        assert!(ChannelParams::new(0.2, 10.0, 0.5, 0.5).is_err());
        assert!(ChannelParams::new(1e-6, 10.0, 0.0, 0.5).is_err());
        assert!(ChannelParams::new(1e-6, 10.0, 0.5, 1.0).is_err());
        assert!(SignalSpace::new(0.1, 1.0, 1.0).is_err()); // n < 1
    }

    #[test]
    fn dof_profile_power_law() {
        // t*w_d = 100, w*t_m = 1000 with both exponents 1/2.
        let cp = params();
        let ss = SignalSpace::new(10.0, 1e9, 1.0).unwrap();
        let p = dof_profile(&cp, &ss).unwrap();
        assert_relative_eq!(p.d_t, 10.0, max_relative = 1e-12);
        assert_relative_eq!(p.d_w, 31.622_776_601_683_793, max_relative = 1e-12);
        assert_relative_eq!(p.d, 316.227_766_016_837_9, max_relative = 1e-12);
        assert_relative_eq!(p.d_max, 100_000.0, max_relative = 1e-12);
    }

    #[test]
    fn dof_profile_unit_axis() {
        let cp = params();
        let ss = SignalSpace::new(0.1, 1e9, 1.0).unwrap(); // t*w_d = 1
        let p = dof_profile(&cp, &ss).unwrap();
        assert_eq!(p.d_t, 1.0);
    }

    #[test]
    fn dof_profile_rich_limit_matches_ceiling() {
        // With exponents near one the power law approaches d_max when the
        // products are integers.
        let cp = ChannelParams::new(1e-6, 10.0, 1.0 - 1e-12, 1.0 - 1e-12).unwrap();
        let ss = SignalSpace::new(10.0, 1e9, 1.0).unwrap();
        let p = dof_profile(&cp, &ss).unwrap();
        assert_relative_eq!(p.d, p.d_max, max_relative = 1e-9);
    }

    #[test]
    fn dof_profile_names_offending_axis() {
        let cp = params();
        let ss = SignalSpace::new(0.05, 1e9, 1.0).unwrap();
        let err = dof_profile(&cp, &ss).unwrap_err();
        assert!(err.to_string().contains("Doppler"));
        let ss = SignalSpace::new(1e9, 1e5, 1.0).unwrap();
        let err = dof_profile(&cp, &ss).unwrap_err();
        assert!(err.to_string().contains("delay"));
    }

    #[test]
    fn coherence_profile_identity_and_mu() {
        let cp = params();
        let ss = SignalSpace::new(1e7, 1e6, 1.0).unwrap();
        let c = coherence_profile(&cp, &ss).unwrap();
        let d = dof_profile(&cp, &ss).unwrap();
        // n_c * d = t * w by construction of the power law.
        assert_relative_eq!(c.n_c * d.d, ss.n(), max_relative = 1e-9);
        // t_m = 1e-6, w_d = 10, T = 1e7, W = 1e6, P = 1 gives n_c = 1e9 and
        // snr = 1e-6, so mu = 1.5.
        assert_relative_eq!(c.n_c, 1e9, max_relative = 1e-9);
        assert_relative_eq!(c.mu.unwrap(), 1.5, max_relative = 1e-12);
    }

    #[test]
    fn mu_undefined_at_high_snr() {
        let cp = params();
        let ss = SignalSpace::new(10.0, 1e6, 2e6).unwrap(); // snr = 2
        let c = coherence_profile(&cp, &ss).unwrap();
        assert!(c.mu.is_none());
    }

    #[test]
    fn mu_two_at_nc_1e6_snr_1e3() {
        // Direct check of the exponent arithmetic: ln(1e6)/ln(1e3) = 2.
        assert_relative_eq!(1e6f64.ln() / 1e3f64.ln(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn realization_is_deterministic() {
        let a = sample_realization(1000, 9).unwrap();
        let b = sample_realization(1000, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_realization(1000, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn realization_moments_and_tail() {
        let r = sample_realization(1_000_000, 1).unwrap();
        // CLT: mean within 4 sigma, sigma = 1/1000.
        assert!((r.mean_gain() - 1.0).abs() < 0.005, "mean {}", r.mean_gain());
        // Exponential tail: P(g >= ln 10) = 0.1, 4 sigma binomial margin.
        let thr = 10f64.ln();
        let frac = r.gains2().iter().filter(|g| **g >= thr).count() as f64 / 1e6;
        assert!((frac - 0.1).abs() < 0.0013, "tail fraction {frac}");
    }

    #[test]
    fn expected_deff_values() {
        assert_relative_eq!(
            expected_deff(100.0, 10f64.ln()).unwrap(),
            10.0,
            max_relative = 1e-12
        );
        assert_eq!(expected_deff(7.0, 0.0).unwrap(), 7.0);
        assert!(expected_deff(0.0, 1.0).is_err());
    }

    #[test]
    fn expected_deff_matches_empirical_count() {
        let d = 10_000usize;
        let h_t = 2.0;
        let r = sample_realization(d, 33).unwrap();
        let count = r.gains2().iter().filter(|g| **g >= h_t).count() as f64;
        let mean = expected_deff(d as f64, h_t).unwrap();
        let sigma = (d as f64 * (-h_t).exp() * (1.0 - (-h_t).exp())).sqrt();
        assert!((count - mean).abs() <= 4.0 * sigma, "count {count} vs {mean}");
    }

    #[test]
    fn zero_d_rejected() {
        assert!(sample_realization(0, 1).is_err());
    }
}
