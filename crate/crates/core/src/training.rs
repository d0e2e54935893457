//! Training-based scheme without prior receiver CSI.
//!
//! One signal-space dimension per coherence subspace carries a pilot of
//! energy e_tr = eta * n_c * snr; the remaining n_c - 1 dimensions carry
//! data. The receiver forms MMSE channel estimates, thresholds the estimated
//! gains, and feeds back one bit per subspace. The per-dimension rate of
//! this scheme has an exact closed form, which is cross-checked here against
//! an independent kernel decomposition and against seeded Monte Carlo.

use crate::accum::{self, CompensatedSum};
use crate::channel::ChannelRealization;
use crate::error::{require_nonnegative, require_open_unit, require_positive, Error, Result};
use crate::feedback::{LnFactTable, McEstimate};
use crate::specfn;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

/// Training split: energy fraction eta, coherence dimension n_c, per-symbol
/// snr, and the threshold applied to estimated gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    eta: f64,
    n_c: f64,
    snr: f64,
    h_t_train: f64,
    e_tr: f64,
}

impl TrainingConfig {
    pub fn new(eta: f64, n_c: f64, snr: f64, h_t_train: f64) -> Result<Self> {
        require_open_unit("eta", eta)?;
        require_open_unit("snr", snr)?;
        require_nonnegative("h_t_train", h_t_train)?;
        if !(n_c.is_finite() && n_c > 1.0) {
            return Err(Error::Domain(format!(
                "n_c must exceed 1 (one pilot dimension plus data), got {n_c}"
            )));
        }
        Ok(Self {
            eta,
            n_c,
            snr,
            h_t_train,
            e_tr: eta * n_c * snr,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn n_c(&self) -> f64 {
        self.n_c
    }
    pub fn snr(&self) -> f64 {
        self.snr
    }
    pub fn h_t_train(&self) -> f64 {
        self.h_t_train
    }

    /// Pilot energy per subspace, eta * n_c * snr.
    pub fn e_tr(&self) -> f64 {
        self.e_tr
    }

    /// Variance of the MMSE estimate, e_tr / (1 + e_tr).
    pub fn estimate_variance(&self) -> f64 {
        self.e_tr / (1.0 + self.e_tr)
    }

    /// Variance of the estimation error, 1 / (1 + e_tr).
    pub fn error_variance(&self) -> f64 {
        1.0 / (1.0 + self.e_tr)
    }
}

/// Intermediate quantities of the training closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingDerived {
    /// Probability that an estimated gain clears the threshold.
    pub kappa1: f64,
    /// Effective noise-plus-data normalization, eta*(n_c-1)*snr + 1 - 1/n_c.
    pub kappa2: f64,
    /// Argument of the logarithm in the closed form.
    pub a1: f64,
    /// Argument of the scaled exponential integral in the closed form.
    pub a2: f64,
}

pub fn training_derived(cfg: &TrainingConfig) -> TrainingDerived {
    let e_tr = cfg.e_tr();
    let kappa1 = (-cfg.h_t_train() * (1.0 + e_tr) / e_tr).exp();
    let kappa2 = cfg.eta() * (cfg.n_c() - 1.0) * cfg.snr() + (1.0 - 1.0 / cfg.n_c());
    let data_snr = (1.0 - cfg.eta()) * cfg.snr();
    let num = data_snr * (1.0 + e_tr) * cfg.h_t_train();
    let a1 = num / (data_snr + kappa1 * kappa2);
    let a2 = (num + data_snr + kappa1 * kappa2)
        / (cfg.eta() * (1.0 - cfg.eta()) * cfg.n_c() * cfg.snr() * cfg.snr());
    TrainingDerived {
        kappa1,
        kappa2,
        a1,
        a2,
    }
}

/// Training fraction maximizing the no-feedback training rate:
///
///   eta* = (n_c*snr + n_c - 1) / ((n_c - 2) n_c snr)
///          * (sqrt(1 + n_c snr (n_c - 2) / (n_c snr + n_c - 1)) - 1)
pub fn eta_star(n_c: f64, snr: f64) -> Result<f64> {
    require_open_unit("snr", snr)?;
    if !(n_c.is_finite() && n_c > 2.0) {
        return Err(Error::Domain(format!("n_c must exceed 2, got {n_c}")));
    }
    let ns = n_c * snr;
    let front = (ns + n_c - 1.0) / ((n_c - 2.0) * ns);
    let inner = 1.0 + ns * (n_c - 2.0) / (ns + n_c - 1.0);
    Ok(front * (inner.sqrt() - 1.0))
}

/// Threshold on estimated gains that shadows the coherent threshold
/// h_t = lambda * ln(1/snr), shrunk by the estimate variance:
/// e_tr/(1 + e_tr) * h_t.
pub fn training_threshold_star(eta: f64, n_c: f64, snr: f64, lambda: f64) -> Result<f64> {
    require_open_unit("eta", eta)?;
    require_open_unit("snr", snr)?;
    require_open_unit("lambda", lambda)?;
    require_positive("n_c", n_c)?;
    let e_tr = eta * n_c * snr;
    Ok(e_tr / (1.0 + e_tr) * lambda * (1.0 / snr).ln())
}

/// Closed-form per-dimension rate of the training scheme:
/// (1 - 1/n_c) * kappa1 * [ln(1 + a1) + nu(a2)].
pub fn rate_training_closed_form(cfg: &TrainingConfig) -> Result<f64> {
    let d = training_derived(cfg);
    Ok((1.0 - 1.0 / cfg.n_c()) * d.kappa1 * (d.a1.ln_1p() + specfn::nu_unchecked(d.a2)))
}

/// The same rate through the generic kernel: per-symbol data energy
/// q = (1-eta)*snr*n_c/((n_c-1)*kappa1) on flagged subspaces, effective SNR
/// s = q(1+e_tr)/(1+e_tr+q), estimated gains exponential with mean
/// e_tr/(1+e_tr). Exact algebraic refactoring of the closed form; the two
/// paths must agree to floating-point accuracy.
pub fn rate_training_kernel_form(cfg: &TrainingConfig) -> Result<f64> {
    let e_tr = cfg.e_tr();
    let kappa1 = (-cfg.h_t_train() * (1.0 + e_tr) / e_tr).exp();
    let q = (1.0 - cfg.eta()) * cfg.snr() * cfg.n_c() / ((cfg.n_c() - 1.0) * kappa1);
    let s = q * (1.0 + e_tr) / (1.0 + e_tr + q);
    let kernel = specfn::rate_kernel(s, cfg.estimate_variance(), cfg.h_t_train())?;
    Ok((1.0 - 1.0 / cfg.n_c()) * kernel)
}

/// Low-SNR lower-bound approximation to the training rate at the starred
/// threshold:
/// (1-eta) * (n_c/(n_c-1)) * (e_tr/(1+e_tr)) * (1 + h_t) * snr.
/// Asymptotic: it tracks the closed form as snr -> 0 but can exceed it at
/// moderate snr, so comparisons against it are trend checks only.
pub fn rate_training_lower_bound(eta: f64, n_c: f64, snr: f64, lambda: f64) -> Result<f64> {
    require_open_unit("eta", eta)?;
    require_open_unit("snr", snr)?;
    require_open_unit("lambda", lambda)?;
    if !(n_c.is_finite() && n_c > 1.0) {
        return Err(Error::Domain(format!("n_c must exceed 1, got {n_c}")));
    }
    let e_tr = eta * n_c * snr;
    let h_t = lambda * (1.0 / snr).ln();
    Ok((1.0 - eta) * (n_c / (n_c - 1.0)) * (e_tr / (1.0 + e_tr)) * (1.0 + h_t) * snr)
}

/// Lower bounds on the training rate in the exponent-parameterized regimes
/// eta = snr^x, n_c = snr^{-y}.
///
/// Without `a`: requires 1 + x < y <= 1 + 2x and evaluates
///   snr^eps * ln(1 + eps ln(1/snr) snr^{1-eps} (1-snr^x)/(1-snr^y)) + snr.
/// With `a` (the regime y = 1 + x, where eta*n_c*snr = a): requires
/// a > eps/(1-eps) and evaluates
///   snr^{eps(1+a)/a} * ln(1 + eps snr^{1-eps(1+a)/a} ln(1/snr)) + a/(1+a) * snr.
pub fn training_regime_lower_bound(
    epsilon: f64,
    x: f64,
    y: f64,
    snr: f64,
    a: Option<f64>,
) -> Result<f64> {
    require_open_unit("epsilon", epsilon)?;
    require_nonnegative("x", x)?;
    require_open_unit("snr", snr)?;
    match a {
        None => {
            if !(1.0 + x < y) {
                return Err(Error::Regime(format!(
                    "requires 1 + x < y: got y = {y} with 1 + x = {}",
                    1.0 + x
                )));
            }
            if !(y <= 1.0 + 2.0 * x) {
                return Err(Error::Regime(format!(
                    "requires y <= 1 + 2x: got y = {y} with 1 + 2x = {}",
                    1.0 + 2.0 * x
                )));
            }
            let big_l = (1.0 / snr).ln();
            let arg = epsilon * big_l * snr.powf(1.0 - epsilon) * (1.0 - snr.powf(x))
                / (1.0 - snr.powf(y));
            Ok(snr.powf(epsilon) * arg.ln_1p() + snr)
        }
        Some(a) => {
            require_positive("a", a)?;
            let floor = epsilon / (1.0 - epsilon);
            if !(a > floor) {
                return Err(Error::Regime(format!(
                    "requires a > epsilon/(1-epsilon): got a = {a} with epsilon/(1-epsilon) = {floor}"
                )));
            }
            let ex = epsilon * (1.0 + a) / a;
            let arg = epsilon * snr.powf(1.0 - ex) * (1.0 / snr).ln();
            Ok(snr.powf(ex) * arg.ln_1p() + a / (1.0 + a) * snr)
        }
    }
}

/// MMSE channel estimates from squared true gains.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedChannel {
    est_gains2: Vec<f64>,
    err_var: f64,
}

impl EstimatedChannel {
    pub fn est_gains2(&self) -> &[f64] {
        &self.est_gains2
    }
    pub fn err_var(&self) -> f64 {
        self.err_var
    }
}

/// Simulates the pilot observation y = sqrt(e_tr) h + w per subspace (unit
/// complex noise) and returns the squared MMSE estimates
/// |h_hat|^2 = |sqrt(e_tr)/(1+e_tr) * y|^2. Only relative phase matters for
/// the magnitudes, so the true gain enters as sqrt(g) on the real axis.
pub fn mmse_estimate(
    real: &ChannelRealization,
    e_tr: f64,
    seed: u64,
) -> Result<EstimatedChannel> {
    require_positive("e_tr", e_tr)?;
    let mut rng = crate::rng::stream(seed, 0);
    let scale = e_tr.sqrt() / (1.0 + e_tr);
    let est_gains2 = real
        .gains2()
        .iter()
        .map(|g| {
            let w_re: f64 = rng.sample::<f64, _>(StandardNormal) / 2f64.sqrt();
            let w_im: f64 = rng.sample::<f64, _>(StandardNormal) / 2f64.sqrt();
            let y_re = (e_tr * g).sqrt() + w_re;
            scale * scale * (y_re * y_re + w_im * w_im)
        })
        .collect();
    Ok(EstimatedChannel {
        est_gains2,
        err_var: 1.0 / (1.0 + e_tr),
    })
}

/// Average gate probability of the short-term training scheme: success
/// probability kappa1 per subspace and budget a * d * kappa1 / (1 - eta).
pub fn short_term_fraction_training(
    d: usize,
    eta: f64,
    n_c: f64,
    snr: f64,
    h_t_train: f64,
    a: f64,
) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    require_open_unit("eta", eta)?;
    require_open_unit("snr", snr)?;
    require_nonnegative("h_t_train", h_t_train)?;
    require_positive("n_c", n_c)?;
    if !(a.is_finite() && a > 1.0) {
        return Err(Error::Domain(format!("a must be finite and > 1, got {a}")));
    }
    let e_tr = eta * n_c * snr;
    let kappa1 = (-h_t_train * (1.0 + e_tr) / e_tr).exp();
    let m = (a * d as f64 * kappa1 / (1.0 - eta)).floor() as i64;
    let table = LnFactTable::new(d);
    let sum = accum::sum((1..=d).map(|i| table.binomial_cdf(i, kappa1, m)));
    Ok(sum / d as f64)
}

/// Ratio of the training closed form to the first-order coherent benchmark
/// along n_c = snr^{-mu}, with eta = eta* and the starred threshold.
pub fn training_convergence_ratio(mu: f64, lambda: f64, snr_grid: &[f64]) -> Result<Vec<f64>> {
    require_positive("mu", mu)?;
    require_open_unit("lambda", lambda)?;
    snr_grid
        .iter()
        .map(|&snr| {
            require_open_unit("snr", snr)?;
            let n_c = snr.powf(-mu);
            let eta = eta_star(n_c, snr)?;
            let h = training_threshold_star(eta, n_c, snr, lambda)?;
            let cfg = TrainingConfig::new(eta, n_c, snr, h)?;
            let rate = rate_training_closed_form(&cfg)?;
            Ok(rate / crate::feedback::first_order_rate(snr, lambda)?)
        })
        .collect()
}

/// Monte Carlo estimate of the training scheme with simulated MMSE
/// estimation and the per-symbol effective-SNR rate expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingMc {
    pub rate: McEstimate,
    /// Coherence dimension actually simulated (nearest integer >= 3).
    pub n_c_used: u64,
}

pub fn mc_rate_training(
    d: usize,
    cfg: &TrainingConfig,
    trials: usize,
    seed: u64,
) -> Result<TrainingMc> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    if trials < 100 {
        return Err(Error::Argument(format!(
            "need at least 100 trials, got {trials}"
        )));
    }
    // Simulation needs an integer coherence dimension; analytic formulas do
    // not round, so the choice is surfaced in the result.
    let n_c_used = cfg.n_c().round().max(3.0);
    let eta = cfg.eta();
    let snr = cfg.snr();
    let h = cfg.h_t_train();
    let e_tr = eta * n_c_used * snr;
    let kappa1 = (-h * (1.0 + e_tr) / e_tr).exp();
    let q = (1.0 - eta) * snr * n_c_used / ((n_c_used - 1.0) * kappa1);
    let s = q * (1.0 + e_tr) / (1.0 + e_tr + q);
    let data_frac = 1.0 - 1.0 / n_c_used;
    let scale = e_tr.sqrt() / (1.0 + e_tr);
    let df = d as f64;
    let rates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = crate::rng::stream(seed, t as u64);
            let mut acc = CompensatedSum::new();
            for _ in 0..d {
                let g: f64 = rng.sample(Exp1);
                let w_re: f64 = rng.sample::<f64, _>(StandardNormal) / 2f64.sqrt();
                let w_im: f64 = rng.sample::<f64, _>(StandardNormal) / 2f64.sqrt();
                let y_re = (e_tr * g).sqrt() + w_re;
                let est = scale * scale * (y_re * y_re + w_im * w_im);
                if est >= h {
                    acc.add((s * est).ln_1p());
                }
            }
            data_frac * acc.value() / df
        })
        .collect();
    let (mean, stderr) = accum::mean_stderr(&rates);
    Ok(TrainingMc {
        rate: McEstimate { mean, stderr },
        n_c_used: n_c_used as u64,
    })
}
