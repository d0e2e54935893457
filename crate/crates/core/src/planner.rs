//! Packet-configuration engine.
//!
//! Turns channel sparsity exponents and a target coherence exponent mu into
//! scaling rules for the signaling duration and bandwidth, and classifies
//! whether the two feasibility conditions hold: the coherence dimension must
//! scale as snr^{-mu} with mu > 1 (training fidelity), and the degrees of
//! freedom must grow fast enough that the expected active count outruns the
//! threshold (instantaneous-power feasibility). Outputs are exponents and
//! verdicts; scaling constants suppressed by the asymptotic rules are set to
//! one. The single dimensioned formula is `canonical_duration`.

use crate::channel::ChannelParams;
use crate::error::{require_open_unit, require_positive, Error, Result};
use serde::{Deserialize, Serialize};

/// Sparsity exponent with the boundary limits encoded explicitly; the
/// formulas divide by delta and by 1 - delta, so the limits are enum
/// variants rather than floating-point 0.0 or 1.0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Inside(f64),
    LimitZero,
    LimitOne,
}

impl Delta {
    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Delta::Inside(v) => require_open_unit(name, *v),
            _ => Ok(()),
        }
    }

    /// Boundary-inclusive numeric value for formulas that tolerate it.
    fn value(&self) -> f64 {
        match self {
            Delta::Inside(v) => *v,
            Delta::LimitZero => 0.0,
            Delta::LimitOne => 1.0,
        }
    }

    fn is_rich(&self) -> bool {
        matches!(self, Delta::LimitOne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Rich,
    DopplerSparse,
    DelaySparse,
    DoublySparse,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Rich => "rich",
            Regime::DopplerSparse => "doppler_sparse",
            Regime::DelaySparse => "delay_sparse",
            Regime::DoublySparse => "doubly_sparse",
        }
    }
}

/// Smallest duration-bandwidth exponent rho (T ~ W^rho) under which the
/// expected active count diverges for every threshold slope, in the
/// perfect-receiver-CSI setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoMin {
    Feasible(f64),
    /// Without Doppler sparsity no scaling of T adds degrees of freedom.
    RequiresDopplerSparsity,
}

/// rho_min = (1 - delta2) / delta1; infeasible when delta1 vanishes.
pub fn rho_min_coherent(delta1: Delta, delta2: Delta) -> Result<RhoMin> {
    delta1.validate("delta1")?;
    delta2.validate("delta2")?;
    if matches!(delta1, Delta::LimitZero) {
        return Ok(RhoMin::RequiresDopplerSparsity);
    }
    Ok(RhoMin::Feasible((1.0 - delta2.value()) / delta1.value()))
}

/// Splits N = T*W as T ~ N^{rho/(1+rho)}, W ~ N^{1/(1+rho)}.
pub fn packet_split(rho: f64) -> Result<(f64, f64)> {
    require_positive("rho", rho)?;
    Ok((rho / (1.0 + rho), 1.0 / (1.0 + rho)))
}

/// Duration exponent T ~ W^{mu/(1-delta1)} when only Doppler sparsity is
/// available (coherence bandwidth fixed).
pub fn doppler_only_t_exponent(mu: f64, delta1: f64) -> Result<f64> {
    require_positive("mu", mu)?;
    require_open_unit("delta1", delta1)?;
    Ok(mu / (1.0 - delta1))
}

/// Peaky-signaling requirement when only delay sparsity is available:
/// signaling on a snr^gamma fraction of subspaces relaxes the coherence
/// condition from mu > 1 to mu > 1 - gamma, and the attainable coherence
/// exponent 1 - delta2 satisfies it iff gamma > delta2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakyRequirement {
    pub gamma_min: f64,
}

impl PeakyRequirement {
    /// Effective coherence exponent with peakiness gamma.
    pub fn mu_peaky(mu: f64, gamma: f64) -> f64 {
        mu + gamma
    }

    /// The coherence condition relaxes to mu > 1 - gamma.
    pub fn relaxed_mu_threshold(gamma: f64) -> f64 {
        1.0 - gamma
    }
}

pub fn peaky_requirement(delta2: f64) -> Result<PeakyRequirement> {
    require_open_unit("delta2", delta2)?;
    Ok(PeakyRequirement { gamma_min: delta2 })
}

/// The one dimensioned planner formula: the duration that realizes
/// n_c = (w/p)^mu under doubly sparse power-law scaling,
///
///   T = (t_m^{delta2} w_d^{delta1})^{1/(1-delta1)}
///       * W^{(mu-1+delta2)/(1-delta1)} / P^{mu/(1-delta1)}
pub fn canonical_duration(cp: &ChannelParams, mu: f64, p: f64, w: f64) -> Result<f64> {
    require_positive("mu", mu)?;
    require_positive("p", p)?;
    require_positive("w", w)?;
    let d1 = cp.delta1();
    let d2 = cp.delta2();
    let front = (cp.t_m().powf(d2) * cp.w_d().powf(d1)).powf(1.0 / (1.0 - d1));
    Ok(front * w.powf((mu - 1.0 + d2) / (1.0 - d1)) / p.powf(mu / (1.0 - d1)))
}

/// Exponent of the induced degrees-of-freedom scaling D ~ snr^{value} under
/// the canonical duration rule: (delta1*(1 - mu) - delta2)/(1 - delta1).
pub fn d_scaling_exponent(delta1: f64, delta2: f64, mu: f64) -> Result<f64> {
    require_open_unit("delta1", delta1)?;
    require_open_unit("delta2", delta2)?;
    require_positive("mu", mu)?;
    Ok((delta1 * (1.0 - mu) - delta2) / (1.0 - delta1))
}

/// Feasibility of the two scaling conditions under the canonical rule.
/// `coherence_ok`: mu > 1 (training converges to the coherent rate).
/// `deff_ok`: mu > (1-delta2)/delta1 (expected active count outruns the
/// threshold for every lambda in (0,1)).
/// `lambda_cap`: largest admissible threshold slope when `deff_ok` fails,
/// clamped to [0, 1]; zero means no slope is admissible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingConditions {
    pub coherence_ok: bool,
    pub deff_ok: bool,
    pub lambda_cap: f64,
}

pub fn scaling_conditions(delta1: f64, delta2: f64, mu: f64) -> Result<ScalingConditions> {
    require_open_unit("delta1", delta1)?;
    require_open_unit("delta2", delta2)?;
    require_positive("mu", mu)?;
    let coherence_ok = mu > 1.0;
    let deff_ok = mu > (1.0 - delta2) / delta1;
    let cap = (delta2 + (mu - 1.0) * delta1) / (1.0 - delta1);
    Ok(ScalingConditions {
        coherence_ok,
        deff_ok,
        lambda_cap: cap.clamp(0.0, 1.0),
    })
}

/// Slowest admissible T ~ W^rho scaling under symmetric sparsity
/// delta1 = delta2 = delta: (1-delta)/delta below one half, delta/(1-delta)
/// above, minimized at delta = 1/2 where rho = 1.
pub fn symmetric_rho_min(delta: f64) -> Result<f64> {
    require_open_unit("delta", delta)?;
    if delta < 0.5 {
        Ok((1.0 - delta) / delta)
    } else if delta > 0.5 {
        Ok(delta / (1.0 - delta))
    } else {
        Ok(1.0)
    }
}

/// Regime classification with the headline feasibility verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeAnalysis {
    pub regime: Regime,
    /// Whether the coherence condition can be met by any signaling choice
    /// (with peaky signaling where the regime needs it).
    pub coherence_feasible: bool,
    /// Minimum peakiness exponent, present in the delay-sparse regime.
    pub gamma_min: Option<f64>,
    pub narrative: String,
}

/// Classifies by which axes are sparse. An axis is rich when its exponent
/// sits at the upper limit; both rich means the coherence dimension is
/// pinned at 1/(t_m w_d) and no packet shaping can help.
pub fn regime_classify(delta1: Delta, delta2: Delta) -> Result<RegimeAnalysis> {
    delta1.validate("delta1")?;
    delta2.validate("delta2")?;
    let analysis = match (delta1.is_rich(), delta2.is_rich()) {
        (true, true) => RegimeAnalysis {
            regime: Regime::Rich,
            coherence_feasible: false,
            gamma_min: None,
            narrative: "rich multipath: the coherence dimension is fixed, no duration or \
                        bandwidth scaling can satisfy the coherence condition"
                .into(),
        },
        (false, true) => RegimeAnalysis {
            regime: Regime::DopplerSparse,
            coherence_feasible: true,
            gamma_min: None,
            narrative: format!(
                "Doppler sparsity only: scale duration as T ~ W^(mu/(1-delta1)) = W^(mu/{:.6})",
                1.0 - delta1.value()
            ),
        },
        (true, false) => {
            let gamma_min = delta2.value();
            RegimeAnalysis {
                regime: Regime::DelaySparse,
                coherence_feasible: true,
                gamma_min: Some(gamma_min),
                narrative: format!(
                    "delay sparsity only: coherence exponent is pinned at {:.6}; peaky \
                     signaling with gamma > {:.6} restores the coherence condition",
                    1.0 - gamma_min,
                    gamma_min
                ),
            }
        }
        (false, false) => RegimeAnalysis {
            regime: Regime::DoublySparse,
            coherence_feasible: true,
            gamma_min: None,
            narrative: "delay and Doppler sparsity: use the canonical duration rule to set \
                        the coherence exponent, non-peaky signaling suffices"
                .into(),
        },
    };
    Ok(analysis)
}

/// Full packet plan for a requested coherence exponent and optional
/// peakiness. Exponent fields are None where the regime leaves them
/// undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketPlan {
    pub regime: Regime,
    pub mu: f64,
    pub gamma: f64,
    pub rho: Option<f64>,
    pub t_exponent: Option<f64>,
    pub w_exponent: Option<f64>,
    pub coherence_ok: bool,
    pub deff_ok: bool,
    pub lambda_cap: Option<f64>,
}

pub fn build_plan(delta1: Delta, delta2: Delta, mu: f64, gamma: f64) -> Result<PacketPlan> {
    delta1.validate("delta1")?;
    delta2.validate("delta2")?;
    require_positive("mu", mu)?;
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::Domain(format!(
            "gamma must be nonnegative and finite, got {gamma}"
        )));
    }
    let regime = regime_classify(delta1, delta2)?.regime;
    let plan = match regime {
        Regime::Rich => PacketPlan {
            regime,
            mu,
            gamma,
            rho: None,
            t_exponent: None,
            w_exponent: None,
            coherence_ok: false,
            deff_ok: false,
            lambda_cap: None,
        },
        Regime::DopplerSparse => {
            let rho = doppler_only_t_exponent(mu, delta1.value())?;
            let (t_e, w_e) = packet_split(rho)?;
            PacketPlan {
                regime,
                mu,
                gamma,
                rho: Some(rho),
                t_exponent: Some(t_e),
                w_exponent: Some(w_e),
                coherence_ok: mu + gamma > 1.0,
                // delay axis is rich, the active-count condition is free
                deff_ok: true,
                lambda_cap: Some(1.0),
            }
        }
        Regime::DelaySparse => {
            // coherence exponent is pinned by the bandwidth axis
            let mu_attained = 1.0 - delta2.value();
            let mu_eff = mu_attained + gamma;
            PacketPlan {
                regime,
                mu: mu_attained,
                gamma,
                rho: None,
                t_exponent: None,
                w_exponent: None,
                coherence_ok: gamma > delta2.value(),
                deff_ok: mu_eff > mu_attained && gamma > 0.0,
                lambda_cap: None,
            }
        }
        Regime::DoublySparse => {
            let d1 = delta1.value();
            let d2 = delta2.value();
            let cond = scaling_conditions(d1, d2, mu)?;
            let rho = (mu - 1.0 + d2) / (1.0 - d1);
            let (t_e, w_e) = if rho > 0.0 {
                let (t, w) = packet_split(rho)?;
                (Some(t), Some(w))
            } else {
                (None, None)
            };
            PacketPlan {
                regime,
                mu,
                gamma,
                rho: Some(rho),
                t_exponent: t_e,
                w_exponent: w_e,
                coherence_ok: cond.coherence_ok,
                deff_ok: cond.deff_ok,
                lambda_cap: Some(cond.lambda_cap),
            }
        }
    };
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rho_min_values() {
        match rho_min_coherent(Delta::Inside(0.5), Delta::Inside(0.5)).unwrap() {
            RhoMin::Feasible(r) => assert_relative_eq!(r, 1.0, max_relative = 1e-14),
            _ => panic!("expected feasible"),
        }
        match rho_min_coherent(Delta::Inside(0.5), Delta::Inside(0.25)).unwrap() {
            RhoMin::Feasible(r) => assert_relative_eq!(r, 1.5, max_relative = 1e-14),
            _ => panic!("expected feasible"),
        }
        match rho_min_coherent(Delta::Inside(0.5), Delta::LimitOne).unwrap() {
            RhoMin::Feasible(r) => assert_eq!(r, 0.0),
            _ => panic!("expected feasible"),
        }
        assert_eq!(
            rho_min_coherent(Delta::LimitZero, Delta::Inside(0.5)).unwrap(),
            RhoMin::RequiresDopplerSparsity
        );
        assert!(rho_min_coherent(Delta::Inside(0.0), Delta::Inside(0.5)).is_err());
    }

    #[test]
    fn packet_split_values() {
        assert_eq!(packet_split(1.0).unwrap(), (0.5, 0.5));
        let (t, w) = packet_split(1.5).unwrap();
        assert_relative_eq!(t, 0.6, max_relative = 1e-14);
        assert_relative_eq!(w, 0.4, max_relative = 1e-14);
        let (t, w) = packet_split(1e9).unwrap();
        assert!(t > 0.999_999_99 && w < 1e-8);
    }

    #[test]
    fn doppler_only_exponent() {
        assert_relative_eq!(doppler_only_t_exponent(1.2, 0.4).unwrap(), 2.0, max_relative = 1e-14);
        // monotone in delta1 at fixed mu
        assert!(
            doppler_only_t_exponent(1.2, 0.6).unwrap() > doppler_only_t_exponent(1.2, 0.4).unwrap()
        );
    }

    #[test]
    fn peaky_rule() {
        let r = peaky_requirement(0.3).unwrap();
        assert_eq!(r.gamma_min, 0.3);
        assert_eq!(PeakyRequirement::relaxed_mu_threshold(0.5), 0.5);
        assert_eq!(PeakyRequirement::mu_peaky(0.7, 0.5), 1.2);
        assert!((peaky_requirement(0.999).unwrap().gamma_min - 0.999).abs() < 1e-12);
    }

    #[test]
    fn canonical_duration_reference() {
        let cp = ChannelParams::new(1e-6, 10.0, 0.5, 0.5).unwrap();
        let t = canonical_duration(&cp, 1.5, 1.0, 1e6).unwrap();
        assert_relative_eq!(t, 1e7, max_relative = 1e-9);
    }

    #[test]
    fn canonical_duration_degenerate_w_exponent() {
        // mu = 1, delta2 -> 0 makes the W exponent (mu-1+delta2)/(1-delta1)
        // vanish, so T stops depending on W.
        let cp = ChannelParams::new(1e-9, 10.0, 0.5, 1e-9).unwrap();
        let t1 = canonical_duration(&cp, 1.0, 1.0, 1e6).unwrap();
        let t2 = canonical_duration(&cp, 1.0, 1.0, 1e8).unwrap();
        assert_relative_eq!(t1, t2, max_relative = 1e-6);
    }

    #[test]
    fn d_scaling_values() {
        assert_relative_eq!(
            d_scaling_exponent(0.5, 0.5, 1.5).unwrap(),
            -1.5,
            max_relative = 1e-14
        );
        // mu = 1, delta2 -> 0: D becomes constant
        assert!(d_scaling_exponent(0.5, 1e-12, 1.0).unwrap().abs() < 1e-11);
    }

    #[test]
    fn conditions_examples() {
        let c = scaling_conditions(0.6, 0.5, 1.2).unwrap();
        assert!(c.coherence_ok && c.deff_ok);
        let c = scaling_conditions(0.2, 0.2, 1.1).unwrap();
        assert!(c.coherence_ok);
        assert!(!c.deff_ok);
        assert_relative_eq!(c.lambda_cap, 0.275, max_relative = 1e-12);
        // exact threshold: strict inequalities
        let thr = (1.0f64 - 0.5) / 0.5; // = 1, and mu = max(1, 1) exactly
        let c = scaling_conditions(0.5, 0.5, thr.max(1.0)).unwrap();
        assert!(!c.coherence_ok && !c.deff_ok);
    }

    #[test]
    fn symmetric_rho_values() {
        assert_eq!(symmetric_rho_min(0.5).unwrap(), 1.0);
        assert_relative_eq!(symmetric_rho_min(0.25).unwrap(), 3.0, max_relative = 1e-14);
        assert_relative_eq!(symmetric_rho_min(0.75).unwrap(), 3.0, max_relative = 1e-14);
        // symmetric about one half, minimized there
        for &d in &[0.1, 0.2, 0.3, 0.4, 0.45] {
            let a = symmetric_rho_min(d).unwrap();
            let b = symmetric_rho_min(1.0 - d).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
            assert!(a >= 1.0);
        }
    }

    #[test]
    fn regimes() {
        let r = regime_classify(Delta::LimitOne, Delta::LimitOne).unwrap();
        assert_eq!(r.regime, Regime::Rich);
        assert!(!r.coherence_feasible);

        let r = regime_classify(Delta::Inside(0.5), Delta::LimitOne).unwrap();
        assert_eq!(r.regime, Regime::DopplerSparse);

        let r = regime_classify(Delta::LimitOne, Delta::Inside(0.3)).unwrap();
        assert_eq!(r.regime, Regime::DelaySparse);
        assert_eq!(r.gamma_min, Some(0.3));

        let r = regime_classify(Delta::Inside(0.5), Delta::Inside(0.5)).unwrap();
        assert_eq!(r.regime, Regime::DoublySparse);
    }

    #[test]
    fn plans() {
        let p = build_plan(Delta::Inside(0.5), Delta::Inside(0.5), 1.5, 0.0).unwrap();
        assert_eq!(p.regime, Regime::DoublySparse);
        assert_relative_eq!(p.rho.unwrap(), 2.0, max_relative = 1e-12);
        let (t, w) = (p.t_exponent.unwrap(), p.w_exponent.unwrap());
        assert_relative_eq!(t + w, 1.0, max_relative = 1e-14);
        assert!(p.coherence_ok && p.deff_ok);

        let p = build_plan(Delta::LimitOne, Delta::LimitOne, 2.0, 0.0).unwrap();
        assert!(!p.coherence_ok);

        let p = build_plan(Delta::LimitOne, Delta::Inside(0.3), 2.0, 0.4).unwrap();
        assert_eq!(p.regime, Regime::DelaySparse);
        assert!(p.coherence_ok); // gamma 0.4 > delta2 0.3
        assert_relative_eq!(p.mu, 0.7, max_relative = 1e-12);

        let p = build_plan(Delta::Inside(0.4), Delta::LimitOne, 1.2, 0.0).unwrap();
        assert_eq!(p.regime, Regime::DopplerSparse);
        assert_relative_eq!(p.rho.unwrap(), 2.0, max_relative = 1e-12);
        assert!(p.coherence_ok && p.deff_ok);
    }
}
