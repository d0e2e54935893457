//! One-bit-per-subspace feedback with perfect receiver CSI.
//!
//! The receiver compares each squared subspace gain against a threshold h_t
//! and feeds back one bit per subspace. Three transmitter power allocations
//! are modeled:
//!
//! * non-causal: the budget is split uniformly over the subspaces actually
//!   active in this realization, so the instantaneous power is exactly P;
//! * causal: the per-subspace power is fixed from statistics (normalizing by
//!   E[D_eff] = D*e^{-h_t}), meeting the power constraint on average only;
//! * short-term: the causal allocation additionally gated so the realized
//!   instantaneous power never exceeds A*P, checked causally in index order.
//!
//! Closed forms, envelope bounds, the active-count tail machinery (exact
//! binomial CDFs plus Bernstein-type bounds), and seeded Monte Carlo
//! estimators for all three schemes live here.

use crate::accum::{self, CompensatedSum};
use crate::channel::{ChannelRealization, SignalSpace};
use crate::error::{require_nonnegative, require_open_unit, require_positive, Error, Result};
use crate::specfn;
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

/// Threshold on squared subspace gains. `lambda` is recorded when the policy
/// was built from (lambda, snr) as h_t = lambda * ln(1/snr).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    lambda: Option<f64>,
    h_t: f64,
}

impl ThresholdPolicy {
    /// h_t = lambda * ln(1/snr) for lambda, snr in (0, 1).
    pub fn new(lambda: f64, snr: f64) -> Result<Self> {
        require_open_unit("lambda", lambda)?;
        require_open_unit("snr", snr)?;
        Ok(Self {
            lambda: Some(lambda),
            h_t: lambda * (1.0 / snr).ln(),
        })
    }

    /// Wraps a raw threshold; h_t = 0 recovers the no-feedback scheme.
    pub fn from_threshold(h_t: f64) -> Result<Self> {
        require_nonnegative("h_t", h_t)?;
        Ok(Self { lambda: None, h_t })
    }

    pub fn h_t(&self) -> f64 {
        self.h_t
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }
}

/// Feedback bits and the realized active-subspace count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackState {
    bits: Vec<bool>,
    d_eff: usize,
}

impl FeedbackState {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
    pub fn d_eff(&self) -> usize {
        self.d_eff
    }
    pub fn d(&self) -> usize {
        self.bits.len()
    }
}

/// One bit per subspace: gains at exactly h_t count as active.
pub fn feedback_bits(real: &ChannelRealization, pol: &ThresholdPolicy) -> FeedbackState {
    let bits: Vec<bool> = real.gains2().iter().map(|g| *g >= pol.h_t()).collect();
    let d_eff = bits.iter().filter(|b| **b).count();
    FeedbackState { bits, d_eff }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationMode {
    NonCausal,
    Causal,
    ShortTerm,
}

impl AllocationMode {
    pub fn name(&self) -> &'static str {
        match self {
            AllocationMode::NonCausal => "noncausal",
            AllocationMode::Causal => "causal",
            AllocationMode::ShortTerm => "short_term",
        }
    }
}

impl std::str::FromStr for AllocationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noncausal" => Ok(AllocationMode::NonCausal),
            "causal" => Ok(AllocationMode::Causal),
            "short_term" | "shortterm" => Ok(AllocationMode::ShortTerm),
            other => Err(Error::Argument(format!(
                "unknown allocation mode {other:?}; valid: noncausal, causal, short_term"
            ))),
        }
    }
}

/// Per-subspace per-symbol energies q_i. `a` is present only for the
/// short-term mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    mode: AllocationMode,
    q: Vec<f64>,
    a: Option<f64>,
}

impl PowerAllocation {
    pub fn mode(&self) -> AllocationMode {
        self.mode
    }
    pub fn q(&self) -> &[f64] {
        &self.q
    }
    pub fn a(&self) -> Option<f64> {
        self.a
    }

    /// Realized instantaneous transmit power (N_c/T) * sum(q_i).
    pub fn instantaneous_power(&self, ss: &SignalSpace, n_c: f64) -> f64 {
        n_c / ss.t() * accum::sum(self.q.iter().copied())
    }
}

/// Builds the per-subspace energies for one realization's feedback state.
///
/// Non-causal: q_i = T*P/(N_c * d_eff) on active subspaces (all zero when
/// d_eff = 0). Causal: q_i = T*P/(N_c * D * e^{-h_t}) on active subspaces.
/// Short-term: the causal energy additionally gated by the causal running
/// count condition sum_{j<=i} b_j <= a * D * e^{-h_t}.
pub fn allocate(
    fs: &FeedbackState,
    mode: AllocationMode,
    ss: &SignalSpace,
    n_c: f64,
    h_t: f64,
    a: Option<f64>,
) -> Result<PowerAllocation> {
    require_positive("n_c", n_c)?;
    require_nonnegative("h_t", h_t)?;
    match (mode, a) {
        (AllocationMode::ShortTerm, None) => {
            return Err(Error::Argument(
                "short_term allocation requires the cap multiplier a".into(),
            ))
        }
        (AllocationMode::ShortTerm, Some(a)) if !(a.is_finite() && a > 1.0) => {
            return Err(Error::Domain(format!("a must be finite and > 1, got {a}")))
        }
        (AllocationMode::NonCausal | AllocationMode::Causal, Some(_)) => {
            return Err(Error::Argument(format!(
                "cap multiplier a is only meaningful for short_term, not {}",
                mode.name()
            )))
        }
        _ => {}
    }
    let d = fs.d() as f64;
    let budget = ss.t() * ss.p();
    let q = match mode {
        AllocationMode::NonCausal => {
            if fs.d_eff() == 0 {
                vec![0.0; fs.d()]
            } else {
                let q_on = budget / (n_c * fs.d_eff() as f64);
                fs.bits().iter().map(|b| if *b { q_on } else { 0.0 }).collect()
            }
        }
        AllocationMode::Causal => {
            let q_on = budget / (n_c * d * (-h_t).exp());
            fs.bits().iter().map(|b| if *b { q_on } else { 0.0 }).collect()
        }
        AllocationMode::ShortTerm => {
            let a = a.unwrap();
            let q_on = budget / (n_c * d * (-h_t).exp());
            let cap = a * d * (-h_t).exp();
            let mut count = 0usize;
            fs.bits()
                .iter()
                .map(|b| {
                    if *b {
                        count += 1;
                        if count as f64 <= cap {
                            q_on
                        } else {
                            0.0
                        }
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };
    Ok(PowerAllocation { mode, q, a })
}

/// Coherent no-feedback rate: the exact value nu(1/snr) and its low-SNR
/// approximation snr - snr^2.
pub fn rate_no_feedback(snr: f64) -> Result<(f64, f64)> {
    require_positive("snr", snr)?;
    let exact = specfn::rate_kernel(snr, 1.0, 0.0)?;
    Ok((exact, snr - snr * snr))
}

/// Closed-form per-dimension rate of the causal scheme under the average
/// power constraint: rate_kernel(snr * e^{h_t}, 1, h_t).
pub fn rate_causal_closed_form(snr: f64, h_t: f64) -> Result<f64> {
    require_open_unit("snr", snr)?;
    require_nonnegative("h_t", h_t)?;
    specfn::rate_kernel(snr * h_t.exp(), 1.0, h_t)
}

/// Envelope bounds that sandwich the causal closed form exactly, obtained by
/// replacing the scaled exponential integral with its logarithmic envelope.
pub fn rate_causal_bounds(snr: f64, lambda: f64) -> Result<(f64, f64)> {
    require_open_unit("snr", snr)?;
    require_open_unit("lambda", lambda)?;
    let big_l = (1.0 / snr).ln();
    let x = snr.powf(1.0 - lambda);
    let t1 = (lambda * x * big_l).ln_1p();
    let denom = 1.0 + lambda * x * big_l;
    let scale = snr.powf(lambda);
    let ub = scale * (t1 + (x / denom).ln_1p());
    let lb = scale * (t1 + 0.5 * (2.0 * x / denom).ln_1p());
    Ok((lb, ub))
}

/// First-order benchmark (1 + lambda * ln(1/snr)) * snr.
pub fn first_order_rate(snr: f64, lambda: f64) -> Result<f64> {
    require_open_unit("snr", snr)?;
    require_open_unit("lambda", lambda)?;
    Ok((1.0 + lambda * (1.0 / snr).ln()) * snr)
}

/// Residual of the threshold optimality condition; it vanishes exactly at the
/// h_t maximizing the causal closed form.
pub fn stationarity_residual(snr: f64, h_t: f64) -> Result<f64> {
    require_open_unit("snr", snr)?;
    require_positive("h_t", h_t)?;
    let r = snr * h_t.exp();
    let alpha = (1.0 + r * h_t) / r;
    Ok(1.0 - (r * h_t).ln_1p() - specfn::nu_unchecked(alpha) / r)
}

/// Monte Carlo mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

fn check_mc_args(
    mode: AllocationMode,
    d: usize,
    snr: f64,
    h_t: f64,
    a: Option<f64>,
    trials: usize,
) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    if trials < 100 {
        return Err(Error::Argument(format!(
            "need at least 100 trials, got {trials}"
        )));
    }
    require_open_unit("snr", snr)?;
    require_nonnegative("h_t", h_t)?;
    match (mode, a) {
        (AllocationMode::ShortTerm, Some(a)) if a.is_finite() && a > 1.0 => Ok(a),
        (AllocationMode::ShortTerm, Some(a)) => {
            Err(Error::Domain(format!("a must be finite and > 1, got {a}")))
        }
        (AllocationMode::ShortTerm, None) => Err(Error::Argument(
            "short_term mode requires the cap multiplier a".into(),
        )),
        (_, Some(_)) => Err(Error::Argument(format!(
            "cap multiplier a is only meaningful for short_term, not {}",
            mode.name()
        ))),
        (_, None) => Ok(f64::NAN),
    }
}

fn trial_rate(
    mode: AllocationMode,
    d: usize,
    snr: f64,
    h_t: f64,
    cap: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> f64 {
    let df = d as f64;
    let q_causal = snr * h_t.exp();
    let mut acc = CompensatedSum::new();
    match mode {
        AllocationMode::Causal => {
            for _ in 0..d {
                let g: f64 = rng.sample(Exp1);
                if g >= h_t {
                    acc.add((q_causal * g).ln_1p());
                }
            }
        }
        AllocationMode::NonCausal => {
            // Two passes over the same gains: the budget split needs d_eff.
            let gains: Vec<f64> = (0..d).map(|_| rng.sample(Exp1)).collect();
            let d_eff = gains.iter().filter(|g| **g >= h_t).count();
            if d_eff == 0 {
                return 0.0; // transmitter stays silent
            }
            let q = snr * df / d_eff as f64;
            for g in gains {
                if g >= h_t {
                    acc.add((q * g).ln_1p());
                }
            }
        }
        AllocationMode::ShortTerm => {
            let mut count = 0usize;
            for _ in 0..d {
                let g: f64 = rng.sample(Exp1);
                if g >= h_t {
                    count += 1;
                    if count as f64 <= cap {
                        acc.add((q_causal * g).ln_1p());
                    }
                }
            }
        }
    }
    acc.value() / df
}

/// Empirical per-dimension rate of the selected scheme. Deterministic given
/// the seed: trial t draws from stream (seed, t) and the reduction order is
/// fixed, so the result is bit-identical across thread counts.
pub fn mc_rate(
    mode: AllocationMode,
    d: usize,
    snr: f64,
    h_t: f64,
    a: Option<f64>,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    let a_checked = check_mc_args(mode, d, snr, h_t, a, trials)?;
    let cap = a_checked * d as f64 * (-h_t).exp();
    let rates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = crate::rng::stream(seed, t as u64);
            trial_rate(mode, d, snr, h_t, cap, &mut rng)
        })
        .collect();
    let (mean, stderr) = accum::mean_stderr(&rates);
    Ok(McEstimate { mean, stderr })
}

/// Short-term Monte Carlo with the realized instantaneous-power ratio
/// tracked per trial, for verifying that the cap A is never exceeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortTermMc {
    pub rate: McEstimate,
    pub max_power_ratio: f64,
}

pub fn mc_rate_short_term_checked(
    d: usize,
    snr: f64,
    h_t: f64,
    a: f64,
    trials: usize,
    seed: u64,
) -> Result<ShortTermMc> {
    let a_checked = check_mc_args(AllocationMode::ShortTerm, d, snr, h_t, Some(a), trials)?;
    let df = d as f64;
    let cap = a_checked * df * (-h_t).exp();
    let q_causal = snr * h_t.exp();
    let results: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = crate::rng::stream(seed, t as u64);
            let mut acc = CompensatedSum::new();
            let mut count = 0usize;
            let mut transmitted = 0usize;
            for _ in 0..d {
                let g: f64 = rng.sample(Exp1);
                if g >= h_t {
                    count += 1;
                    if count as f64 <= cap {
                        transmitted += 1;
                        acc.add((q_causal * g).ln_1p());
                    }
                }
            }
            // Instantaneous power over P: transmitted * e^{h_t} / d.
            (acc.value() / df, transmitted as f64 * h_t.exp() / df)
        })
        .collect();
    let rates: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (mean, stderr) = accum::mean_stderr(&rates);
    let max_power_ratio = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(ShortTermMc {
        rate: McEstimate { mean, stderr },
        max_power_ratio,
    })
}

/// Paired comparison of the non-causal and causal schemes on common random
/// numbers. `gap` aggregates the per-trial difference (noncausal - causal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedGap {
    pub noncausal: McEstimate,
    pub causal: McEstimate,
    pub gap: McEstimate,
}

pub fn mc_paired_gap(
    d: usize,
    snr: f64,
    h_t: f64,
    trials: usize,
    seed: u64,
) -> Result<PairedGap> {
    check_mc_args(AllocationMode::Causal, d, snr, h_t, None, trials)?;
    let df = d as f64;
    let q_causal = snr * h_t.exp();
    let pairs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = crate::rng::stream(seed, t as u64);
            let gains: Vec<f64> = (0..d).map(|_| rng.sample(Exp1)).collect();
            let d_eff = gains.iter().filter(|g| **g >= h_t).count();
            let mut c = CompensatedSum::new();
            let mut nc = CompensatedSum::new();
            if d_eff > 0 {
                let q_nc = snr * df / d_eff as f64;
                for g in &gains {
                    if *g >= h_t {
                        c.add((q_causal * g).ln_1p());
                        nc.add((q_nc * g).ln_1p());
                    }
                }
            }
            (nc.value() / df, c.value() / df)
        })
        .collect();
    let nc_rates: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let c_rates: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diffs: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let (m_nc, se_nc) = accum::mean_stderr(&nc_rates);
    let (m_c, se_c) = accum::mean_stderr(&c_rates);
    let (m_d, se_d) = accum::mean_stderr(&diffs);
    Ok(PairedGap {
        noncausal: McEstimate {
            mean: m_nc,
            stderr: se_nc,
        },
        causal: McEstimate {
            mean: m_c,
            stderr: se_c,
        },
        gap: McEstimate {
            mean: m_d,
            stderr: se_d,
        },
    })
}

// ---------------------------------------------------------------------------
// Exact binomial CDF in log space
// ---------------------------------------------------------------------------

/// Natural-log factorial table with compensated construction.
pub(crate) struct LnFactTable {
    v: Vec<f64>,
}

impl LnFactTable {
    pub fn new(n: usize) -> Self {
        let mut v = Vec::with_capacity(n + 1);
        let mut acc = CompensatedSum::new();
        v.push(0.0);
        for j in 1..=n {
            acc.add((j as f64).ln());
            v.push(acc.value());
        }
        Self { v }
    }

    fn ln_choose(&self, n: usize, k: usize) -> f64 {
        self.v[n] - self.v[k] - self.v[n - k]
    }

    /// Sum of pmf(j) over j in [lo, hi], scaled by the side's largest term
    /// (the one nearest the mode). The pmf is unimodal, so walking outward
    /// from that term the contributions only shrink and the loops can stop
    /// once they fall 45 e-folds below the peak.
    fn side_sum(&self, n: usize, p: f64, lo: usize, hi: usize) -> f64 {
        let ln_p = p.ln();
        let ln_q = (-p).ln_1p();
        let ln_pmf =
            |j: usize| -> f64 { self.ln_choose(n, j) + j as f64 * ln_p + (n - j) as f64 * ln_q };
        let mode = (((n + 1) as f64) * p).floor() as usize;
        let peak = mode.clamp(lo, hi);
        let ln_peak = ln_pmf(peak);
        let mut acc = CompensatedSum::new();
        let mut j = peak;
        loop {
            let t = ln_pmf(j) - ln_peak;
            if t < -45.0 {
                break;
            }
            acc.add(t.exp());
            if j == lo {
                break;
            }
            j -= 1;
        }
        j = peak + 1;
        while j <= hi {
            let t = ln_pmf(j) - ln_peak;
            if t < -45.0 {
                break;
            }
            acc.add(t.exp());
            j += 1;
        }
        ln_peak.exp() * acc.value()
    }

    /// Pr(Bin(n, p) <= k). The tail not containing the mode is summed
    /// directly so whichever of cdf and 1-cdf is small keeps full relative
    /// accuracy.
    pub fn binomial_cdf(&self, n: usize, p: f64, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        let k = k as usize;
        if k >= n {
            return 1.0;
        }
        if p <= 0.0 {
            return 1.0;
        }
        if p >= 1.0 {
            return 0.0;
        }
        let mode = (((n + 1) as f64) * p).floor() as usize;
        if k < mode {
            self.side_sum(n, p, 0, k).min(1.0)
        } else {
            (1.0 - self.side_sum(n, p, k + 1, n)).max(0.0)
        }
    }

    /// Pr(Bin(n, p) > k), accurate when the survival mass is tiny.
    pub fn binomial_sf(&self, n: usize, p: f64, k: i64) -> f64 {
        if k < 0 {
            return 1.0;
        }
        let k = k as usize;
        if k >= n {
            return 0.0;
        }
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let mode = (((n + 1) as f64) * p).floor() as usize;
        if k < mode {
            (1.0 - self.side_sum(n, p, 0, k)).max(0.0)
        } else {
            self.side_sum(n, p, k + 1, n).min(1.0)
        }
    }
}

/// Pr(Bin(n, p) <= k) via log-space summation with compensated accumulation.
pub fn binomial_cdf(n: usize, p: f64, k: i64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::Domain(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(LnFactTable::new(n).binomial_cdf(n, p, k))
}

/// Pr(Bin(n, p) > k), the complement of `binomial_cdf`, computed from the
/// upper tail so tiny survival probabilities keep full relative accuracy.
pub fn binomial_sf(n: usize, p: f64, k: i64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::Domain(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(LnFactTable::new(n).binomial_sf(n, p, k))
}

// ---------------------------------------------------------------------------
// Short-term analysis
// ---------------------------------------------------------------------------

/// Per-subspace gate probabilities and their average; `lower_bound_l` is
/// filled when the analysis was built with a (lambda, snr) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortTermAnalysis {
    pub p: Vec<f64>,
    pub fraction: f64,
    pub lower_bound_l: Option<f64>,
}

/// Unconditional gate probabilities p_i = Pr(Bin(i, e^{-h_t}) <= floor(a * d
/// * e^{-h_t})) of the short-term scheme, exact in log space.
pub fn short_term_gate_probabilities(d: usize, h_t: f64, a: f64) -> Result<ShortTermAnalysis> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    require_nonnegative("h_t", h_t)?;
    if !(a.is_finite() && a > 1.0) {
        return Err(Error::Domain(format!("a must be finite and > 1, got {a}")));
    }
    let e = (-h_t).exp();
    let m = (a * d as f64 * e).floor() as i64;
    let table = LnFactTable::new(d);
    let p: Vec<f64> = (1..=d).map(|i| table.binomial_cdf(i, e, m)).collect();
    let fraction = accum::sum(p.iter().copied()) / d as f64;
    Ok(ShortTermAnalysis {
        p,
        fraction,
        lower_bound_l: None,
    })
}

/// Exact factorization constant of the short-term scheme:
/// E[short-term rate] = (causal closed form) * this value.
///
/// The gate for subspace i counts the subspace's own indicator, so
/// conditioned on subspace i being active the remaining budget check is
/// Bin(i-1, e^{-h_t}) <= floor(a*d*e^{-h_t}) - 1. Averaging those
/// conditional probabilities gives the constant that makes the factorization
/// exact at finite d; the unconditional p_i average of
/// `short_term_gate_probabilities` sits slightly above it.
pub fn short_term_fraction_exact(d: usize, h_t: f64, a: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    require_nonnegative("h_t", h_t)?;
    if !(a.is_finite() && a > 1.0) {
        return Err(Error::Domain(format!("a must be finite and > 1, got {a}")));
    }
    let e = (-h_t).exp();
    let m = (a * d as f64 * e).floor() as i64 - 1;
    let table = LnFactTable::new(d);
    let sum = accum::sum((1..=d).map(|i| table.binomial_cdf(i - 1, e, m)));
    Ok(sum / d as f64)
}

/// Convenience wrapper building the full short-term picture from
/// (lambda, snr): gate probabilities, fraction, and the closed-form lower
/// bound on the fraction.
pub fn analyze_short_term(d: usize, snr: f64, lambda: f64, a: f64) -> Result<ShortTermAnalysis> {
    let pol = ThresholdPolicy::new(lambda, snr)?;
    let mut st = short_term_gate_probabilities(d, pol.h_t(), a)?;
    st.lower_bound_l = Some(short_term_fraction_bound(d, snr, lambda, a)?.exact);
    Ok(st)
}

/// Bernstein-type tail bound on 1 - p_i for the running active count: with
/// e = e^{-h_t},
///
///   exp(-(a*d - i) * e / (4 * (1 - e)))          for i <= floor(a*d/2)
///   exp(-(a*d - i)^2 * e / (4 * i * (1 - e)))    otherwise.
///
/// Returns 1 when the deviation a*d*e - i*e is negative (vacuous regime).
pub fn bernstein_tail(i: usize, d: usize, h_t: f64, a: f64) -> Result<f64> {
    if i == 0 || d == 0 {
        return Err(Error::Domain("i and d must be at least 1".into()));
    }
    require_nonnegative("h_t", h_t)?;
    if !(a.is_finite() && a > 1.0) {
        return Err(Error::Domain(format!("a must be finite and > 1, got {a}")));
    }
    let e = (-h_t).exp();
    let ad = a * d as f64;
    let fi = i as f64;
    if ad < fi {
        return Ok(1.0);
    }
    if e >= 1.0 {
        // h_t = 0: the count never exceeds d <= a*d, the tail is empty.
        return Ok(0.0);
    }
    let v = if fi <= (ad / 2.0).floor() {
        (-(ad - fi) * e / (4.0 * (1.0 - e))).exp()
    } else {
        (-(ad - fi) * (ad - fi) * e / (4.0 * fi * (1.0 - e))).exp()
    };
    Ok(v.min(1.0))
}

/// Closed-form lower bound on the average gate probability, parameterized by
/// the per-subspace success probability. kappa = e/(4*(1-e)).
pub fn fraction_bound_from(d: usize, success_prob: f64, a: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    require_open_unit("success_prob", success_prob)?;
    if !(a.is_finite() && a > 1.0) {
        return Err(Error::Domain(format!("a must be finite and > 1, got {a}")));
    }
    let e = success_prob;
    let kappa = e / (4.0 * (1.0 - e));
    let df = d as f64;
    let bound = if a < 2.0 {
        1.0 - ((-kappa * (a * df / 2.0 - 1.0)).exp() / kappa.exp_m1()
            + (1.0 + df * (1.0 - a / 2.0)) * (-(a - 1.0) * (a - 1.0) * df * kappa).exp())
    } else {
        // a = 2 handled by this branch as well
        1.0 - (-kappa * (df * (a - 1.0) - 1.0)).exp() / kappa.exp_m1()
    };
    Ok(bound)
}

/// Lower bound L on the short-term fraction at h_t = lambda * ln(1/snr).
/// `exact` is the exponential form used in comparisons; `simplified` is the
/// leading-order form with e^{-h_t} replaced by snr^lambda, kept for
/// reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionBound {
    pub exact: f64,
    pub simplified: f64,
}

pub fn short_term_fraction_bound(
    d: usize,
    snr: f64,
    lambda: f64,
    a: f64,
) -> Result<FractionBound> {
    require_open_unit("snr", snr)?;
    require_open_unit("lambda", lambda)?;
    let h_t = lambda * (1.0 / snr).ln();
    let e = (-h_t).exp();
    let exact = fraction_bound_from(d, e, a)?;
    let sl = snr.powf(lambda);
    let df = d as f64;
    let base = 1.0 + sl / 4.0;
    let simplified = if a < 2.0 {
        1.0 - 4.0 / (sl * base.powf(a * df / 2.0 - 1.0))
            - df * (1.0 - a / 2.0) / base.powf(df * (a - 1.0) * (a - 1.0))
    } else {
        1.0 - 4.0 / (sl * base.powf(df * (a - 1.0)))
    };
    Ok(FractionBound { exact, simplified })
}

/// How E[D_eff] - h_t behaves as snr -> 0 when D scales as
/// coefficient * snr^{-exponent}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofScaling {
    pub coefficient: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeffVerdict {
    Diverges,
    ConvergesToMinusInfinity,
}

/// E[D_eff] - h_t = coefficient * snr^{lambda - exponent} + lambda*ln(snr)
/// diverges iff lambda < exponent; at lambda = exponent the logarithm wins
/// and the expression drifts to minus infinity.
pub fn deff_condition(d_of_snr: &DofScaling, lambda: f64) -> Result<DeffVerdict> {
    require_positive("coefficient", d_of_snr.coefficient)?;
    require_nonnegative("exponent", d_of_snr.exponent)?;
    require_open_unit("lambda", lambda)?;
    if lambda < d_of_snr.exponent {
        Ok(DeffVerdict::Diverges)
    } else {
        Ok(DeffVerdict::ConvergesToMinusInfinity)
    }
}

/// Bound on the absolute gap between the non-causal and causal rates: the
/// gap is at most snr times this value, where with e = e^{-h_t}
///
///   sqrt((d^2 e - 4 d e + 3 d - e + 1) / ((d + 1) (d e - e + 1))).
///
/// The value stays bounded in d and tends to 1 as d grows.
pub fn causal_gap_bound(d: usize, h_t: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    require_nonnegative("h_t", h_t)?;
    let e = (-h_t).exp();
    let df = d as f64;
    let num = df * df * e - 4.0 * df * e + 3.0 * df - e + 1.0;
    let den = (df + 1.0) * (df * e - e + 1.0);
    Ok((num / den).sqrt())
}
