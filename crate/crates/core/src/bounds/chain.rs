use num_bigint::BigUint;
use num_traits::{Pow, Zero};
use serde::Serialize;

use super::entropy::{binary_entropy_unchecked, binomial, log2_big};
use crate::{Error, Result};

/// Typicality threshold `T = ⌈2Nε⌉` (with a small guard so that integral
/// `2Nε` is not pushed up by round-off).
pub fn typicality_threshold(n: u64, epsilon: f64) -> u64 {
    let t = (2.0 * n as f64 * epsilon - 1e-9).ceil();
    t.max(0.0) as u64
}

/// `Σ_{n<T} C(N, n) 3^n`: Bell-product basis vectors with fewer than `T`
/// non-singlet slots.
pub fn atypical_count_exact(n: u64, t: u64) -> Result<BigUint> {
    if t > n {
        return Err(Error::out_of_range("T", t as f64, format!("must not exceed N = {n}")));
    }
    let mut acc = BigUint::zero();
    let mut three = BigUint::from(1u32);
    for k in 0..t {
        acc += binomial(n, k) * &three;
        three *= 3u32;
    }
    Ok(acc)
}

/// How `μ` in `2^{N(6H(ε)+μ)}` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub enum MuPolicy {
    /// `μ = 3·log₂(T³)/N`.
    #[default]
    LogCubic,
    Fixed(f64),
}

/// A chain entry: exact integer when one exists, always its `log₂`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainValue {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    pub log2: f64,
}

impl ChainValue {
    fn exact(v: &BigUint) -> Self {
        ChainValue {
            raw: Some(v.to_string()),
            log2: log2_big(v),
        }
    }

    fn log_only(log2: f64) -> Self {
        ChainValue { raw: None, log2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainOrdering {
    pub exact_le_l1: bool,
    pub l1_le_l2: bool,
    pub l2_le_l3: bool,
    pub l3_le_l4: bool,
    pub l4_le_l5: bool,
}

impl ChainOrdering {
    pub fn all(&self) -> bool {
        self.exact_le_l1 && self.l1_le_l2 && self.l2_le_l3 && self.l3_le_l4 && self.l4_le_l5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityEntry {
    pub kprime: f64,
    pub value: f64,
}

/// Every line of the atypical-dimension chain for one `(N, ε)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub epsilon: f64,
    pub threshold: u64,
    pub exact_atypical_count: ChainValue,
    /// `Σ_{a,b,c<T} C(N,a) C(N−a,b) C(N−a−b,c)`
    pub l1: ChainValue,
    /// `T³ · C(N,T)³`
    pub l2: ChainValue,
    /// `T³ · 2^{3N·H(T/N)}`
    pub l3: ChainValue,
    /// `2^{N(6H(ε)+μ)}`
    pub l4: ChainValue,
    pub mu: f64,
    /// `2^{−N k ε log₂ ε}`
    pub l5: ChainValue,
    /// Smallest `k` with `L4 ≤ L5`.
    pub k: f64,
    /// `N − log₂ L5`: how far the bound sits below `2^N`, in bits.
    pub margin_below_2n_bits: f64,
    pub ordering: ChainOrdering,
    /// `log₂(exact atypical count)`, the θ = 0 information bound.
    pub eve_info_upper_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity_lower_bound: Option<CapacityEntry>,
}

impl BoundReport {
    pub fn with_capacity(mut self, kprime: f64) -> Result<Self> {
        let value = super::secrecy_lower_bound(self.epsilon, kprime)?;
        self.capacity_lower_bound = Some(CapacityEntry { kprime, value });
        Ok(self)
    }
}

const LOG_TOL: f64 = 1e-9;

/// Evaluates the chain
///
/// ```text
/// exact ≤ L1 ≤ T³C(N,T)³ ≤ T³ 2^{3N H(T/N)} ≤ 2^{N(6H(ε)+μ)} ≤ 2^{−N k ε log₂ ε}
/// ```
///
/// `L3` uses `H(T/N)`, which is `H(2ε)` whenever `2Nε` is integral; for
/// non-integral `2Nε` the ceiling in `T` can make `L3 > L4`, which is
/// reported in [`ChainOrdering::l3_le_l4`] rather than treated as an error.
pub fn atypical_dim_chain(n: u64, epsilon: f64, mu_policy: MuPolicy) -> Result<BoundReport> {
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::regime(
            "epsilon",
            epsilon,
            "the dimension chain needs 0 < ε < 1/4",
        ));
    }
    if (n as f64) * epsilon < 0.5 {
        return Err(Error::regime(
            "epsilon",
            epsilon,
            format!("N·ε = {} is below 1/2, so T < 1", n as f64 * epsilon),
        ));
    }
    let t = typicality_threshold(n, epsilon);
    if t > n / 2 {
        return Err(Error::regime(
            "epsilon",
            epsilon,
            format!("T = {t} exceeds N/2"),
        ));
    }
    let nf = n as f64;
    let exact = atypical_count_exact(n, t)?;
    let l1 = triple_multinomial_sum(n, t);
    let t_big = BigUint::from(t);
    let l2 = t_big.clone().pow(3u32) * binomial(n, t).pow(3u32);
    let log_t3 = 3.0 * (t as f64).log2();
    let l3 = log_t3 + 3.0 * nf * binary_entropy_unchecked(t as f64 / nf);
    let mu = match mu_policy {
        MuPolicy::LogCubic => 3.0 * log_t3 / nf,
        MuPolicy::Fixed(m) => m,
    };
    let l4 = nf * (6.0 * binary_entropy_unchecked(epsilon) + mu);
    let minus_eps_log = -epsilon * epsilon.log2();
    let k = l4 / (nf * minus_eps_log);
    let l5 = nf * k * minus_eps_log;

    let exact_cv = ChainValue::exact(&exact);
    let l2_cv = ChainValue::exact(&l2);
    let ordering = ChainOrdering {
        exact_le_l1: exact <= l1,
        l1_le_l2: l1 <= l2,
        l2_le_l3: l2_cv.log2 <= l3 + LOG_TOL,
        l3_le_l4: l3 <= l4 + LOG_TOL,
        l4_le_l5: l4 <= l5 + LOG_TOL,
    };
    if !(ordering.exact_le_l1 && ordering.l1_le_l2 && ordering.l2_le_l3) {
        return Err(Error::Internal(format!(
            "dimension chain violated at N = {n}, ε = {epsilon}: {ordering:?}"
        )));
    }
    Ok(BoundReport {
        n,
        epsilon,
        threshold: t,
        eve_info_upper_bits: exact_cv.log2,
        exact_atypical_count: exact_cv,
        l1: ChainValue::exact(&l1),
        l2: l2_cv,
        l3: ChainValue::log_only(l3),
        l4: ChainValue::log_only(l4),
        mu,
        l5: ChainValue::log_only(l5),
        k,
        margin_below_2n_bits: nf - l5,
        ordering,
        capacity_lower_bound: None,
    })
}

/// `Σ_{a,b,c<T} C(N,a) C(N−a,b) C(N−a−b,c)`, folded as
/// `Σ_a C(N,a) Σ_b C(N−a,b) S(N−a−b)` with `S(m) = Σ_{c<T} C(m,c)`.
fn triple_multinomial_sum(n: u64, t: u64) -> BigUint {
    // rows[m][c] = C(m, c) for c < T, built with Pascal's rule
    let tt = t as usize;
    let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n as usize + 1);
    for m in 0..=n as usize {
        let mut row = vec![BigUint::zero(); tt];
        for c in 0..tt.min(m + 1) {
            row[c] = if c == 0 || c == m {
                BigUint::from(1u32)
            } else {
                &rows[m - 1][c - 1] + &rows[m - 1][c]
            };
        }
        rows.push(row);
    }
    let prefix: Vec<BigUint> = rows.iter().map(|r| r.iter().sum()).collect();
    let mut total = BigUint::zero();
    for a in 0..t.min(n + 1) {
        let rest_a = (n - a) as usize;
        let mut inner = BigUint::zero();
        for b in 0..(t as usize).min(rest_a + 1) {
            inner += &rows[rest_a][b] * &prefix[rest_a - b];
        }
        total += &rows[n as usize][a as usize] * inner;
    }
    total
}

/// Upper bound on Eve's information: `log₂(atypical dimension) + N·θ`, with
/// the atypical dimension counted exactly at `T = max(1, ⌈2Nε⌉)`.
pub fn eve_info_upper(n: u64, epsilon: f64, theta: f64) -> Result<f64> {
    if !(0.0..0.25).contains(&epsilon) {
        return Err(Error::regime("epsilon", epsilon, "needs 0 ≤ ε < 1/4"));
    }
    if theta < 0.0 {
        return Err(Error::out_of_range("theta", theta, "must be nonnegative"));
    }
    let t = typicality_threshold(n, epsilon).clamp(1, n.max(1));
    let count = atypical_count_exact(n, t.min(n))?;
    Ok(log2_big(&count) + n as f64 * theta)
}
