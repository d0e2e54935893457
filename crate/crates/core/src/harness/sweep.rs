//! Generic one-variable parameter sweeps.
//!
//! A `SweepSpec` names the swept variable, its grid, the fixed parameters,
//! and the requested output quantities. Rows evaluate in parallel but every
//! Monte Carlo estimator seeds per (seed, row, trial), so a spec is
//! reproducible bit-for-bit regardless of thread count. CSV cells use the
//! shortest decimal representation that round-trips, so parse(emit(x)) == x.

use crate::channel;
use crate::error::{Error, Result};
use crate::feedback::{self, AllocationMode};
use crate::planner;
use crate::training;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Snr,
    Lambda,
    D,
    A,
    Mu,
    Delta,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::Snr => "snr",
            SweepVariable::Lambda => "lambda",
            SweepVariable::D => "d",
            SweepVariable::A => "a",
            SweepVariable::Mu => "mu",
            SweepVariable::Delta => "delta",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(SweepVariable::Snr),
            "lambda" => Ok(SweepVariable::Lambda),
            "d" => Ok(SweepVariable::D),
            "a" => Ok(SweepVariable::A),
            "mu" => Ok(SweepVariable::Mu),
            "delta" => Ok(SweepVariable::Delta),
            other => Err(Error::Argument(format!(
                "unknown sweep variable {other:?}; valid: snr, lambda, d, a, mu, delta"
            ))),
        }
    }
}

macro_rules! output_kinds {
    ($(($variant:ident, $name:literal, $mc:literal)),+ $(,)?) => {
        /// A requested output column. MC quantities carry a standard error,
        /// analytic ones do not.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum OutputKind {
            $($variant),+
        }

        impl OutputKind {
            pub fn name(&self) -> &'static str {
                match self {
                    $(OutputKind::$variant => $name),+
                }
            }

            pub fn is_monte_carlo(&self) -> bool {
                match self {
                    $(OutputKind::$variant => $mc),+
                }
            }

            pub fn all_names() -> Vec<&'static str> {
                vec![$($name),+]
            }
        }

        impl FromStr for OutputKind {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(OutputKind::$variant),)+
                    other => Err(Error::Argument(format!(
                        "unknown output {other:?}; valid outputs: {}",
                        OutputKind::all_names().join(", ")
                    ))),
                }
            }
        }
    };
}

output_kinds![
    (Snr, "snr", false),
    (Lambda, "lambda", false),
    (Ht, "h_t", false),
    (RateClosed, "rate_closed", false),
    (RateLb, "rate_lb", false),
    (RateUb, "rate_ub", false),
    (RateFirstOrder, "rate_first_order", false),
    (RateMc, "rate_mc", true),
    (RateNoFeedback, "rate_no_feedback", false),
    (RateNoFeedbackApprox, "rate_no_feedback_approx", false),
    (StFraction, "st_fraction", false),
    (StFractionExact, "st_fraction_exact", false),
    (FractionBound, "fraction_bound", false),
    (FractionBoundSimplified, "fraction_bound_simplified", false),
    (GapBound, "gap_bound", false),
    (EtaStar, "eta_star", false),
    (ETr, "e_tr", false),
    (HTTrain, "h_t_train", false),
    (RateTraining, "rate_training", false),
    (RateTrainingLb, "rate_training_lb", false),
    (TrainingRatio, "training_ratio", false),
    (StFractionTraining, "st_fraction_training", false),
    (PlanRho, "plan_rho", false),
    (PlanTExponent, "plan_t_exponent", false),
    (PlanWExponent, "plan_w_exponent", false),
    (CoherenceOk, "coherence_ok", false),
    (DeffOk, "deff_ok", false),
    (LambdaCap, "lambda_cap", false),
    (DScalingExponent, "d_scaling_exponent", false),
];

impl Serialize for OutputKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for OutputKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Fixed parameters for the non-swept axes. Every field is optional; an
/// output that needs a missing field reports an argument error naming it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedParams {
    pub snr: Option<f64>,
    pub lambda: Option<f64>,
    pub d: Option<usize>,
    pub a: Option<f64>,
    pub mu: Option<f64>,
    pub nc: Option<f64>,
    pub eta: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub gamma: Option<f64>,
    pub tm: Option<f64>,
    pub wd: Option<f64>,
    pub power: Option<f64>,
    pub mode: Option<String>,
}

fn default_trials() -> usize {
    10_000
}

/// A sweep request; mirrors the JSON config document one-to-one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    #[serde(default)]
    pub fixed: FixedParams,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub outputs: Vec<OutputKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub grid_value: f64,
    pub quantities: Vec<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub version: String,
    pub spec: SweepSpec,
    /// Wall-clock milliseconds; the only nondeterministic field.
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub meta: SweepMeta,
}

struct Resolved<'a> {
    variable: SweepVariable,
    value: f64,
    fixed: &'a FixedParams,
}

impl Resolved<'_> {
    fn get(&self, name: &str) -> Option<f64> {
        if self.variable.name() == name {
            return Some(self.value);
        }
        match name {
            "snr" => self.fixed.snr,
            "lambda" => self.fixed.lambda,
            "d" => self.fixed.d.map(|d| d as f64),
            "a" => self.fixed.a,
            "mu" => self.fixed.mu,
            "nc" => self.fixed.nc,
            "eta" => self.fixed.eta,
            "delta1" => self.fixed.delta1.or(self.delta()),
            "delta2" => self.fixed.delta2.or(self.delta()),
            "gamma" => self.fixed.gamma,
            _ => None,
        }
    }

    fn delta(&self) -> Option<f64> {
        if self.variable == SweepVariable::Delta {
            Some(self.value)
        } else {
            None
        }
    }

    fn req(&self, name: &str, output: OutputKind) -> Result<f64> {
        self.get(name).ok_or_else(|| {
            Error::Argument(format!(
                "output {:?} requires parameter {name:?} (fix it or sweep it)",
                output.name()
            ))
        })
    }

    fn req_d(&self, output: OutputKind) -> Result<usize> {
        let d = self.req("d", output)?;
        if d < 1.0 || d.fract() != 0.0 {
            return Err(Error::Argument(format!(
                "parameter d must be a positive integer, got {d}"
            )));
        }
        Ok(d as usize)
    }

    fn h_t(&self, output: OutputKind) -> Result<f64> {
        let snr = self.req("snr", output)?;
        let lambda = self.req("lambda", output)?;
        Ok(lambda * (1.0 / snr).ln())
    }

    fn mode(&self) -> Result<AllocationMode> {
        match &self.fixed.mode {
            None => Ok(AllocationMode::Causal),
            Some(m) => m.parse(),
        }
    }

    fn training_setup(&self, output: OutputKind) -> Result<(f64, f64, f64, f64)> {
        // (eta, n_c, snr, h_t_train): n_c from fixed or snr^{-mu}; eta from
        // fixed or eta*; threshold from the starred rule.
        let snr = self.req("snr", output)?;
        let n_c = match self.get("nc") {
            Some(nc) => nc,
            None => {
                let mu = self.req("mu", output)?;
                snr.powf(-mu)
            }
        };
        let eta = match self.get("eta") {
            Some(e) => e,
            None => training::eta_star(n_c, snr)?,
        };
        let lambda = self.req("lambda", output)?;
        let h = training::training_threshold_star(eta, n_c, snr, lambda)?;
        Ok((eta, n_c, snr, h))
    }
}

fn evaluate(
    output: OutputKind,
    r: &Resolved<'_>,
    trials: usize,
    seed: u64,
) -> Result<Quantity> {
    let q = |value: f64| Quantity {
        name: output.name().to_string(),
        value,
        stderr: None,
    };
    let out = match output {
        OutputKind::Snr => q(r.req("snr", output)?),
        OutputKind::Lambda => q(r.req("lambda", output)?),
        OutputKind::Ht => q(r.h_t(output)?),
        OutputKind::RateClosed => {
            let snr = r.req("snr", output)?;
            q(feedback::rate_causal_closed_form(snr, r.h_t(output)?)?)
        }
        OutputKind::RateLb => {
            let (lb, _) =
                feedback::rate_causal_bounds(r.req("snr", output)?, r.req("lambda", output)?)?;
            q(lb)
        }
        OutputKind::RateUb => {
            let (_, ub) =
                feedback::rate_causal_bounds(r.req("snr", output)?, r.req("lambda", output)?)?;
            q(ub)
        }
        OutputKind::RateFirstOrder => q(feedback::first_order_rate(
            r.req("snr", output)?,
            r.req("lambda", output)?,
        )?),
        OutputKind::RateMc => {
            let mode = r.mode()?;
            let a = if mode == AllocationMode::ShortTerm {
                Some(r.req("a", output)?)
            } else {
                None
            };
            let est = feedback::mc_rate(
                mode,
                r.req_d(output)?,
                r.req("snr", output)?,
                r.h_t(output)?,
                a,
                trials,
                seed,
            )?;
            Quantity {
                name: output.name().to_string(),
                value: est.mean,
                stderr: Some(est.stderr),
            }
        }
        OutputKind::RateNoFeedback => q(feedback::rate_no_feedback(r.req("snr", output)?)?.0),
        OutputKind::RateNoFeedbackApprox => {
            q(feedback::rate_no_feedback(r.req("snr", output)?)?.1)
        }
        OutputKind::StFraction => q(feedback::short_term_gate_probabilities(
            r.req_d(output)?,
            r.h_t(output)?,
            r.req("a", output)?,
        )?
        .fraction),
        OutputKind::StFractionExact => q(feedback::short_term_fraction_exact(
            r.req_d(output)?,
            r.h_t(output)?,
            r.req("a", output)?,
        )?),
        OutputKind::FractionBound => q(feedback::short_term_fraction_bound(
            r.req_d(output)?,
            r.req("snr", output)?,
            r.req("lambda", output)?,
            r.req("a", output)?,
        )?
        .exact),
        OutputKind::FractionBoundSimplified => q(feedback::short_term_fraction_bound(
            r.req_d(output)?,
            r.req("snr", output)?,
            r.req("lambda", output)?,
            r.req("a", output)?,
        )?
        .simplified),
        OutputKind::GapBound => {
            q(feedback::causal_gap_bound(r.req_d(output)?, r.h_t(output)?)?)
        }
        OutputKind::EtaStar => {
            let snr = r.req("snr", output)?;
            let n_c = match r.get("nc") {
                Some(nc) => nc,
                None => snr.powf(-r.req("mu", output)?),
            };
            q(training::eta_star(n_c, snr)?)
        }
        OutputKind::ETr => {
            let (eta, n_c, snr, _) = r.training_setup(output)?;
            q(eta * n_c * snr)
        }
        OutputKind::HTTrain => q(r.training_setup(output)?.3),
        OutputKind::RateTraining => {
            let (eta, n_c, snr, h) = r.training_setup(output)?;
            let cfg = training::TrainingConfig::new(eta, n_c, snr, h)?;
            q(training::rate_training_closed_form(&cfg)?)
        }
        OutputKind::RateTrainingLb => {
            let (eta, n_c, snr, _) = r.training_setup(output)?;
            q(training::rate_training_lower_bound(
                eta,
                n_c,
                snr,
                r.req("lambda", output)?,
            )?)
        }
        OutputKind::TrainingRatio => {
            let (eta, n_c, snr, h) = r.training_setup(output)?;
            let cfg = training::TrainingConfig::new(eta, n_c, snr, h)?;
            let rate = training::rate_training_closed_form(&cfg)?;
            q(rate / feedback::first_order_rate(snr, r.req("lambda", output)?)?)
        }
        OutputKind::StFractionTraining => {
            let (eta, n_c, snr, h) = r.training_setup(output)?;
            q(training::short_term_fraction_training(
                r.req_d(output)?,
                eta,
                n_c,
                snr,
                h,
                r.req("a", output)?,
            )?)
        }
        OutputKind::PlanRho
        | OutputKind::PlanTExponent
        | OutputKind::PlanWExponent
        | OutputKind::CoherenceOk
        | OutputKind::DeffOk
        | OutputKind::LambdaCap => {
            let d1 = r.req("delta1", output)?;
            let d2 = r.req("delta2", output)?;
            let mu = r.req("mu", output)?;
            let gamma = r.get("gamma").unwrap_or(0.0);
            let plan = planner::build_plan(
                planner::Delta::Inside(d1),
                planner::Delta::Inside(d2),
                mu,
                gamma,
            )?;
            let v = match output {
                OutputKind::PlanRho => plan.rho.unwrap_or(f64::NAN),
                OutputKind::PlanTExponent => plan.t_exponent.unwrap_or(f64::NAN),
                OutputKind::PlanWExponent => plan.w_exponent.unwrap_or(f64::NAN),
                OutputKind::CoherenceOk => plan.coherence_ok as u8 as f64,
                OutputKind::DeffOk => plan.deff_ok as u8 as f64,
                _ => plan.lambda_cap.unwrap_or(f64::NAN),
            };
            q(v)
        }
        OutputKind::DScalingExponent => q(planner::d_scaling_exponent(
            r.req("delta1", output)?,
            r.req("delta2", output)?,
            r.req("mu", output)?,
        )?),
    };
    Ok(out)
}

fn validate_spec(spec: &SweepSpec) -> Result<()> {
    if spec.grid.is_empty() {
        return Err(Error::Argument("grid must be nonempty".into()));
    }
    if spec.outputs.is_empty() {
        return Err(Error::Argument(format!(
            "outputs must be nonempty; valid outputs: {}",
            OutputKind::all_names().join(", ")
        )));
    }
    let increasing = spec.grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = spec.grid.windows(2).all(|w| w[1] < w[0]);
    if spec.grid.len() > 1 && !increasing && !decreasing {
        return Err(Error::Argument("grid must be strictly monotone".into()));
    }
    if spec.grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("grid values must be finite".into()));
    }
    let wants_mc = spec.outputs.iter().any(|o| o.is_monte_carlo());
    if wants_mc && spec.trials < 100 {
        return Err(Error::Argument(format!(
            "Monte Carlo outputs need trials >= 100, got {}",
            spec.trials
        )));
    }
    if spec.outputs.iter().any(|o| o.name() == spec.variable.name()) {
        return Err(Error::Argument(format!(
            "output {:?} duplicates the swept variable",
            spec.variable.name()
        )));
    }
    Ok(())
}

/// Runs the sweep. Rows evaluate in parallel; each row's Monte Carlo seed is
/// derived from (seed, row index), so the result is deterministic.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    validate_spec(spec)?;
    let start = std::time::Instant::now();
    let rows: Vec<SweepRow> = spec
        .grid
        .par_iter()
        .enumerate()
        .map(|(idx, &value)| {
            let r = Resolved {
                variable: spec.variable,
                value,
                fixed: &spec.fixed,
            };
            let row_seed = crate::rng::derive(spec.seed, idx as u64);
            let quantities = spec
                .outputs
                .iter()
                .map(|&o| evaluate(o, &r, spec.trials, row_seed))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                grid_value: value,
                quantities,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        rows,
        meta: SweepMeta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec: spec.clone(),
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// CSV with one row per grid point. The first column is the swept variable;
/// each Monte Carlo quantity is followed by a `<name>_stderr` column.
/// Numbers use the shortest representation that round-trips through f64.
pub fn emit_csv(result: &SweepResult) -> String {
    let mut header = vec![result.meta.spec.variable.name().to_string()];
    if let Some(first) = result.rows.first() {
        for qy in &first.quantities {
            header.push(qy.name.clone());
            if qy.stderr.is_some() {
                header.push(format!("{}_stderr", qy.name));
            }
        }
    }
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &result.rows {
        let mut cells = vec![format!("{}", row.grid_value)];
        for qy in &row.quantities {
            cells.push(format!("{}", qy.value));
            if let Some(se) = qy.stderr {
                cells.push(format!("{se}"));
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses `emit_csv` output back into (variable, rows).
pub fn parse_csv(text: &str) -> Result<(SweepVariable, Vec<SweepRow>)> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Argument(format!("bad CSV header: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    if header.is_empty() {
        return Err(Error::Argument("empty CSV header".into()));
    }
    let variable: SweepVariable = header[0].parse()?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Argument(format!("bad CSV row: {e}")))?;
        let parse_cell = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::Argument(format!("missing CSV column {i}")))?
                .parse::<f64>()
                .map_err(|e| Error::Argument(format!("bad CSV number: {e}")))
        };
        let grid_value = parse_cell(0)?;
        let mut quantities = Vec::new();
        let mut i = 1;
        while i < header.len() {
            let name = header[i].clone();
            let value = parse_cell(i)?;
            let stderr = if i + 1 < header.len() && header[i + 1] == format!("{name}_stderr") {
                i += 1;
                Some(parse_cell(i)?)
            } else {
                None
            };
            quantities.push(Quantity {
                name,
                value,
                stderr,
            });
            i += 1;
        }
        rows.push(SweepRow {
            grid_value,
            quantities,
        });
    }
    Ok((variable, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates_spec() -> SweepSpec {
        SweepSpec {
            variable: SweepVariable::Snr,
            grid: vec![1e-4, 1e-3, 1e-2],
            fixed: FixedParams {
                lambda: Some(0.5),
                d: Some(50),
                ..Default::default()
            },
            trials: 400,
            seed: 7,
            outputs: vec![
                OutputKind::Lambda,
                OutputKind::Ht,
                OutputKind::RateClosed,
                OutputKind::RateLb,
                OutputKind::RateUb,
                OutputKind::RateFirstOrder,
                OutputKind::RateMc,
            ],
        }
    }

    #[test]
    fn sweep_rows_hold_sandwich() {
        let res = run_sweep(&rates_spec()).unwrap();
        assert_eq!(res.rows.len(), 3);
        for row in &res.rows {
            let get = |n: &str| {
                row.quantities
                    .iter()
                    .find(|q| q.name == n)
                    .unwrap()
                    .value
            };
            assert!(get("rate_lb") <= get("rate_closed"));
            assert!(get("rate_closed") <= get("rate_ub"));
        }
        // MC quantities carry a stderr, analytic ones do not
        for row in &res.rows {
            for qy in &row.quantities {
                assert_eq!(qy.stderr.is_some(), qy.name == "rate_mc");
            }
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = run_sweep(&rates_spec()).unwrap();
        let b = run_sweep(&rates_spec()).unwrap();
        let mut ja = serde_json::to_value(&a).unwrap();
        let mut jb = serde_json::to_value(&b).unwrap();
        ja["meta"]["runtime_ms"] = 0.into();
        jb["meta"]["runtime_ms"] = 0.into();
        assert_eq!(ja.to_string(), jb.to_string());
    }

    #[test]
    fn csv_round_trips() {
        let res = run_sweep(&rates_spec()).unwrap();
        let text = emit_csv(&res);
        let (variable, rows) = parse_csv(&text).unwrap();
        assert_eq!(variable, res.meta.spec.variable);
        assert_eq!(rows, res.rows);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = rates_spec();
        s.grid = vec![];
        assert!(run_sweep(&s).is_err());

        let mut s = rates_spec();
        s.grid = vec![1e-3, 1e-3];
        assert!(run_sweep(&s).is_err());

        let mut s = rates_spec();
        s.outputs = vec![];
        let err = run_sweep(&s).unwrap_err();
        assert!(err.to_string().contains("rate_closed"), "{err}");

        let mut s = rates_spec();
        s.trials = 10;
        assert!(run_sweep(&s).is_err());

        let mut s = rates_spec();
        s.fixed.lambda = None;
        let err = run_sweep(&s).unwrap_err();
        assert!(err.to_string().contains("lambda"), "{err}");
    }

    #[test]
    fn unknown_output_name_lists_valid_names() {
        let err = "rate_bogus".parse::<OutputKind>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rate_bogus") && msg.contains("rate_closed"));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s = rates_spec();
        let text = serde_json::to_string(&s).unwrap();
        let back: SweepSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn plan_outputs_over_delta_grid() {
        let spec = SweepSpec {
            variable: SweepVariable::Delta,
            grid: vec![0.3, 0.5, 0.7],
            fixed: FixedParams {
                mu: Some(1.5),
                ..Default::default()
            },
            trials: 100,
            seed: 0,
            outputs: vec![
                OutputKind::PlanRho,
                OutputKind::PlanTExponent,
                OutputKind::PlanWExponent,
                OutputKind::CoherenceOk,
                OutputKind::DeffOk,
                OutputKind::LambdaCap,
            ],
        };
        let res = run_sweep(&spec).unwrap();
        for row in &res.rows {
            let t = row.quantities.iter().find(|q| q.name == "plan_t_exponent").unwrap();
            let w = row.quantities.iter().find(|q| q.name == "plan_w_exponent").unwrap();
            assert!((t.value + w.value - 1.0).abs() < 1e-12);
        }
    }
}
