use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ErrorRate;
use crate::qstate::MeasurementAxis;
use crate::{Error, Result};

/// Polarization basis of BB84.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `z` axis
    Rectilinear,
    /// `x` axis
    Diagonal,
}

impl Basis {
    pub fn axis(self) -> MeasurementAxis {
        match self {
            Basis::Rectilinear => MeasurementAxis::plus_z(),
            Basis::Diagonal => MeasurementAxis::plus_x(),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Basis::Rectilinear => 0,
            Basis::Diagonal => 1,
        }
    }

    /// Diagonal with probability `omega`.
    pub fn sample<R: Rng + ?Sized>(omega: f64, rng: &mut R) -> Self {
        if rng.gen::<f64>() < omega {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Two-sided window `[(ε − cε²)m, (ε + cε²)m]`.
    Window,
    /// Accept iff the test error rate is below `2ε`.
    #[default]
    TwoEpsilon,
}

/// How many diagonal-matched BB84 positions go into the test set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalTestPolicy {
    #[default]
    All,
    /// `m` randomly chosen ones.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n: usize,
    pub m: usize,
    pub epsilon_expected: ErrorRate,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub threshold_mode: ThresholdMode,
    #[serde(default)]
    pub diagonal_policy: DiagonalTestPolicy,
    #[serde(default)]
    pub seed: u64,
}

fn default_c() -> f64 {
    1.0
}

fn default_omega() -> f64 {
    0.5
}

/// `⌈10√N⌉`, capped at `N`.
pub fn default_test_size(n: usize) -> usize {
    ((n as f64).sqrt() * 10.0).ceil().min(n as f64) as usize
}

/// `⌊Nω² − 5√(Nω²)⌋`, at least 1: five standard deviations below the
/// expected number of diagonal-matched positions, so the rectilinear and
/// diagonal pools are rarely short.
pub fn default_bb84_test_size(n: usize, omega: f64) -> usize {
    let mean = n as f64 * omega * omega;
    ((mean - 5.0 * mean.sqrt()).floor().max(1.0)) as usize
}

impl SessionConfig {
    pub fn new(n: usize, m: usize, epsilon_expected: ErrorRate) -> Self {
        SessionConfig {
            n,
            m,
            epsilon_expected,
            c: 1.0,
            omega: 0.5,
            threshold_mode: ThresholdMode::TwoEpsilon,
            diagonal_policy: DiagonalTestPolicy::All,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > self.n {
            return Err(Error::Config(format!(
                "m = {} must satisfy 0 < m ≤ N = {}",
                self.m, self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::out_of_range("omega", self.omega, "must lie in [0, 1]"));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::out_of_range("c", self.c, "must be positive"));
        }
        Ok(())
    }

    /// Acceptance rule for a test of `tested` positions.
    pub fn threshold(&self, tested: usize) -> Result<Threshold> {
        let eps = self.epsilon_expected.value();
        match self.threshold_mode {
            ThresholdMode::Window => Ok(Threshold::Window(acceptance_window(eps, self.c, tested)?)),
            ThresholdMode::TwoEpsilon => Ok(Threshold::TwoEpsilon { epsilon: eps }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceWindow {
    pub lo: usize,
    pub hi: usize,
}

impl AcceptanceWindow {
    pub fn contains(&self, errors: usize) -> bool {
        (self.lo..=self.hi).contains(&errors)
    }
}

/// `[⌈(ε − cε²)m⌉, ⌊(ε + cε²)m⌋]` with the lower end clamped at zero.
/// `ε = 0` collapses to `[0, 0]`.
pub fn acceptance_window(epsilon: f64, c: f64, m: usize) -> Result<AcceptanceWindow> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::out_of_range("epsilon", epsilon, "must lie in [0, 1)"));
    }
    if m == 0 {
        return Err(Error::Config("test size m must be at least 1".into()));
    }
    if !(c > 0.0) {
        return Err(Error::out_of_range("c", c, "must be positive"));
    }
    let m_f = m as f64;
    let lo = ((epsilon - c * epsilon * epsilon) * m_f - 1e-9).ceil().max(0.0) as usize;
    let hi = ((epsilon + c * epsilon * epsilon) * m_f + 1e-9).floor() as usize;
    if hi < lo {
        return Err(Error::Config(format!(
            "acceptance window [{lo}, {hi}] is empty for ε = {epsilon}, c = {c}, m = {m}"
        )));
    }
    Ok(AcceptanceWindow { lo, hi })
}

/// Uniform `m`-subset of `0..N`, sorted.
pub fn select_test_set<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    if m == 0 || m > n {
        return Err(Error::Config(format!("test size {m} must lie in 1..={n}")));
    }
    let mut idx = sample(rng, n, m).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Threshold {
    Window(AcceptanceWindow),
    /// Strictly below `2ε`; at `ε = 0` only an error-free test passes.
    TwoEpsilon { epsilon: f64 },
}

impl Threshold {
    pub fn verdict(&self, errors: usize, tested: usize) -> Verdict {
        let ok = match *self {
            Threshold::Window(w) => w.contains(errors),
            Threshold::TwoEpsilon { epsilon } => {
                if tested == 0 {
                    false
                } else if epsilon == 0.0 {
                    errors == 0
                } else {
                    (errors as f64) < 2.0 * epsilon * tested as f64
                }
            }
        };
        if ok {
            Verdict::Accepted
        } else {
            Verdict::Rejected
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn window_examples() {
        assert_eq!(acceptance_window(0.02, 1.0, 10_000).unwrap(), AcceptanceWindow { lo: 196, hi: 204 });
        assert_eq!(acceptance_window(0.1, 1.0, 100).unwrap(), AcceptanceWindow { lo: 9, hi: 11 });
        assert_eq!(acceptance_window(0.0, 1.0, 100).unwrap(), AcceptanceWindow { lo: 0, hi: 0 });
        assert_eq!(acceptance_window(1e-12, 1.0, 100).unwrap(), AcceptanceWindow { lo: 0, hi: 0 });
        assert!(acceptance_window(0.02, 1.0, 0).is_err());
        assert!(acceptance_window(0.3, 0.1, 1).is_err());
    }

    #[test]
    fn select_test_set_frequencies() {
        let mut rng = stream(111, 0);
        assert_eq!(select_test_set(5, 5, &mut rng).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(select_test_set(5, 0, &mut rng).is_err());
        assert!(select_test_set(5, 6, &mut rng).is_err());
        let draws = 100_000;
        let zeros = (0..draws)
            .filter(|_| select_test_set(2, 1, &mut rng).unwrap()[0] == 0)
            .count();
        assert!((zeros as f64 / draws as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn config_validation() {
        let eps = ErrorRate::new(0.02).unwrap();
        assert!(SessionConfig::new(10, 0, eps).validate().is_err());
        assert!(SessionConfig::new(10, 11, eps).validate().is_err());
        let mut c = SessionConfig::new(10, 5, eps);
        assert!(c.validate().is_ok());
        c.omega = 1.5;
        assert!(c.validate().is_err());
        c.omega = 0.5;
        c.c = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn two_epsilon_verdicts() {
        let t = Threshold::TwoEpsilon { epsilon: 0.02 };
        assert_eq!(t.verdict(399, 10_000), Verdict::Accepted);
        assert_eq!(t.verdict(400, 10_000), Verdict::Rejected);
        let z = Threshold::TwoEpsilon { epsilon: 0.0 };
        assert_eq!(z.verdict(0, 10), Verdict::Accepted);
        assert_eq!(z.verdict(1, 10), Verdict::Rejected);
    }

    #[test]
    fn default_sizes() {
        assert_eq!(default_test_size(100_000), 3163);
        assert_eq!(default_test_size(50), 50);
        assert_eq!(default_bb84_test_size(100_000, 0.5), 24209);
    }
}
