use std::io::Write;

use qkdlab_core::bounds::{atypical_dim_chain, eve_info_upper, secrecy_lower_bound, BoundReport, MuPolicy};
use qkdlab_core::Error;
use serde::Serialize;

use crate::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsOutput {
    #[serde(flatten)]
    pub report: BoundReport,
    pub theta: f64,
    /// `log₂(atypical dimension) + N·θ`
    pub eve_info_upper_theta_bits: f64,
}

/// Full chain report with the capacity bound at `k'` and Eve's information
/// bound at `θ`.
pub fn run_bounds(n: u64, epsilon: f64, kprime: f64, theta: f64) -> CliResult<BoundsOutput> {
    let report = atypical_dim_chain(n, epsilon, MuPolicy::default())?.with_capacity(kprime)?;
    let eve = eve_info_upper(n, epsilon, theta)?;
    Ok(BoundsOutput {
        report,
        theta,
        eve_info_upper_theta_bits: eve,
    })
}

/// One `(N, ε)` grid point. Chain columns are empty where the chain is out
/// of its regime.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub n: u64,
    pub epsilon: f64,
    pub threshold: Option<u64>,
    pub exact_log2: Option<f64>,
    pub l1_log2: Option<f64>,
    pub l2_log2: Option<f64>,
    pub l3_log2: Option<f64>,
    pub l4_log2: Option<f64>,
    pub l5_log2: Option<f64>,
    pub ordered: Option<bool>,
    pub capacity: Option<f64>,
}

/// Sweeps every `(N, ε)` pair and writes a CSV table.
pub fn bounds_grid<W: Write>(ns: &[u64], epsilons: &[f64], kprime: f64, out: W) -> CliResult<Vec<GridRow>> {
    let mut rows = Vec::with_capacity(ns.len() * epsilons.len());
    for &n in ns {
        for &eps in epsilons {
            let capacity = match secrecy_lower_bound(eps, kprime) {
                Ok(c) => Some(c),
                Err(Error::Regime { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let row = match atypical_dim_chain(n, eps, MuPolicy::default()) {
                Ok(r) => GridRow {
                    n,
                    epsilon: eps,
                    threshold: Some(r.threshold),
                    exact_log2: Some(r.exact_atypical_count.log2),
                    l1_log2: Some(r.l1.log2),
                    l2_log2: Some(r.l2.log2),
                    l3_log2: Some(r.l3.log2),
                    l4_log2: Some(r.l4.log2),
                    l5_log2: Some(r.l5.log2),
                    ordered: Some(r.ordering.all()),
                    capacity,
                },
                Err(Error::Regime { .. }) => GridRow {
                    n,
                    epsilon: eps,
                    threshold: None,
                    exact_log2: None,
                    l1_log2: None,
                    l2_log2: None,
                    l3_log2: None,
                    l4_log2: None,
                    l5_log2: None,
                    ordered: None,
                    capacity,
                },
                Err(e) => return Err(e.into()),
            };
            rows.push(row);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}
