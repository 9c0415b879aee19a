//! Per-step summary of an alternating-mutation run, shared by the CLI and
//! the service.

use num_bigint::Sign;
use serde::Serialize;

use qmut::dynamics::{alt_orbit, classify_growth, ratio_limit_check, ratio_series, DynamicsTrace, Growth};
use qmut::Quiver;

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GrowthSummary {
    Trivial,
    Periodic { period: usize },
    Linear,
    Exponential,
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSummary {
    pub vertex: String,
    /// `delta(A,C) / delta(A,D)` per step; `null` where the denominator is 0.
    pub series: Vec<Option<f64>>,
    pub estimate: Option<f64>,
    pub target: Option<f64>,
    pub converged: Option<bool>,
    /// Why no estimate could be made, if so.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepSummary {
    pub step: usize,
    pub total: String,
    /// Multiplicities in the order of [`DynamicsSummary::pairs`].
    pub multiplicities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsSummary {
    pub c: String,
    pub d: String,
    pub alpha: String,
    /// Unordered vertex pairs as `u,v`, in vertex order.
    pub pairs: Vec<String>,
    pub steps: Vec<StepSummary>,
    /// Smallest `k > 0` with `(mu_D mu_C)^k Q = Q`, if seen.
    pub first_return: Option<usize>,
    pub growth: GrowthSummary,
    pub ratio: Option<RatioSummary>,
}

/// A frozen vertex outside `{C, D}` adjacent to the pair at some step.
fn default_ratio_vertex(trace: &DynamicsTrace) -> Option<String> {
    let q0 = trace.state(0);
    let (c, d) = (q0.index_of(trace.c().as_str()).ok()?, q0.index_of(trace.d().as_str()).ok()?);
    (0..q0.len())
        .filter(|&v| v != c && v != d && q0.is_frozen_at(v))
        .find(|&v| trace.states().iter().any(|q| q.b_sign(v, c) != Sign::NoSign || q.b_sign(v, d) != Sign::NoSign))
        .map(|v| q0.vertices()[v].to_string())
}

pub fn summarize(
    q: &Quiver,
    c: &str,
    d: &str,
    steps: usize,
    ratio_vertex: Option<&str>,
    tol: f64,
) -> Result<(DynamicsTrace, DynamicsSummary), Failure> {
    let trace = alt_orbit(q, c, d, steps)?;
    let ids = q.vertices();
    let n = q.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let step_rows = trace
        .states()
        .iter()
        .enumerate()
        .map(|(k, s)| StepSummary {
            step: k,
            total: s.total_arrows().to_string(),
            multiplicities: pairs.iter().map(|&(i, j)| s.b(i, j).magnitude().to_string()).collect(),
        })
        .collect();
    let first_return = (1..=steps).find(|&k| trace.state(k) == q);
    let growth = match classify_growth(&trace) {
        Ok(Growth::Trivial) => GrowthSummary::Trivial,
        Ok(Growth::Periodic(period)) => GrowthSummary::Periodic { period },
        Ok(Growth::Linear) => GrowthSummary::Linear,
        Ok(Growth::Exponential) => GrowthSummary::Exponential,
        Err(e) => GrowthSummary::Inconclusive { reason: e.to_string() },
    };
    let vertex = match ratio_vertex {
        Some(v) => Some(v.to_string()),
        None => default_ratio_vertex(&trace),
    };
    let ratio = match vertex {
        None => None,
        Some(v) => {
            let series = ratio_series(&trace, &v)?;
            Some(match ratio_limit_check(&trace, &v, tol) {
                Ok(check) => RatioSummary {
                    vertex: v,
                    series,
                    estimate: Some(check.estimate),
                    target: Some(check.target),
                    converged: Some(check.converged),
                    note: None,
                },
                Err(e) if ratio_vertex.is_some() && !matches!(e.code(), "AlphaTooSmall" | "InsufficientSteps") => {
                    return Err(e.into())
                }
                Err(e) => RatioSummary {
                    vertex: v,
                    series,
                    estimate: None,
                    target: None,
                    converged: None,
                    note: Some(e.to_string()),
                },
            })
        }
    };
    let summary = DynamicsSummary {
        c: c.to_string(),
        d: d.to_string(),
        alpha: trace.alpha().to_string(),
        pairs: pairs.iter().map(|&(i, j)| format!("{},{}", ids[i], ids[j])).collect(),
        steps: step_rows,
        first_return,
        growth,
        ratio,
    };
    Ok((trace, summary))
}
