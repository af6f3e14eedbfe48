use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::channel::{fidelity_from_epsilon, sample_pair_label, sample_pair_outcomes, ErrorRate};
use crate::qstate::MeasurementAxis;
use crate::{Error, Result};

/// `max(0, 1 + k'·ε·log₂ ε)` for `ε ∈ [0, 1/4)`; the `ε = 0` value is the
/// limit 1.
pub fn secrecy_lower_bound(epsilon: f64, kprime: f64) -> Result<f64> {
    if !(0.0..0.25).contains(&epsilon) {
        return Err(Error::regime(
            "epsilon",
            epsilon,
            "the capacity bound is only stated for 0 ≤ ε < 1/4",
        ));
    }
    if !(kprime > 0.0) {
        return Err(Error::out_of_range("kprime", kprime, "must be positive"));
    }
    if epsilon == 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 + kprime * epsilon * epsilon.log2()).max(0.0))
}

/// Outcome of simulating Eve's tensor mixture of two strategies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureReport {
    pub x: f64,
    pub y: f64,
    pub a: f64,
    pub b: f64,
    /// `a·x + b·y`
    pub expected_rate: f64,
    pub observed_rate: f64,
    pub positions: usize,
    /// Binomial standard error of `observed_rate` about `expected_rate`.
    pub std_error: f64,
    pub within_3_sigma: bool,
    /// Lower-bound function at the mixed rate, when in its regime.
    pub bound_at_mixture: Option<f64>,
    /// `a·C(x) + b·C(y)` with the lower-bound function, when both are in regime.
    pub mixed_bounds: Option<f64>,
}

/// Simulates `⌊aN⌉` positions prepared by a strategy with error rate `x` and
/// the rest by one with rate `y`, permuted, each measured on a uniformly
/// random common axis. Each strategy is realized as a Werner channel of the
/// matching fidelity.
pub fn mixture_error_rate<R: Rng + ?Sized>(
    x: f64,
    y: f64,
    a: f64,
    b: f64,
    positions: usize,
    kprime: f64,
    rng: &mut R,
) -> Result<MixtureReport> {
    if a < 0.0 || b < 0.0 || (a + b - 1.0).abs() > 1e-12 {
        return Err(Error::out_of_range("a", a, "need a, b ≥ 0 and a + b = 1"));
    }
    if positions == 0 {
        return Err(Error::Config("mixture needs at least one position".into()));
    }
    let fx = fidelity_from_epsilon(ErrorRate::new(x)?)?;
    let fy = fidelity_from_epsilon(ErrorRate::new(y)?)?;
    let nx = (a * positions as f64).round() as usize;
    let mut fidelities: Vec<f64> = std::iter::repeat(fx)
        .take(nx)
        .chain(std::iter::repeat(fy).take(positions - nx))
        .collect();
    fidelities.shuffle(rng);
    let mut errors = 0usize;
    for f in fidelities {
        let label = sample_pair_label(f, rng)?;
        let axis = MeasurementAxis::random(rng);
        let (oa, ob) = sample_pair_outcomes(label, &axis, &axis, rng);
        errors += usize::from(oa == ob);
    }
    let expected = (nx as f64 * x + (positions - nx) as f64 * y) / positions as f64;
    let observed = errors as f64 / positions as f64;
    let var = (nx as f64 * x * (1.0 - x) + (positions - nx) as f64 * y * (1.0 - y))
        / (positions as f64).powi(2);
    let std_error = var.sqrt();
    let bound_at_mixture = secrecy_lower_bound(a * x + b * y, kprime).ok();
    let mixed_bounds = match (secrecy_lower_bound(x, kprime), secrecy_lower_bound(y, kprime)) {
        (Ok(cx), Ok(cy)) => Some(a * cx + b * cy),
        _ => None,
    };
    Ok(MixtureReport {
        x,
        y,
        a,
        b,
        expected_rate: a * x + b * y,
        observed_rate: observed,
        positions,
        std_error,
        within_3_sigma: (observed - expected).abs() <= 3.0 * std_error + 1e-12,
        bound_at_mixture,
        mixed_bounds,
    })
}
