//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Expected values come from closed forms or small hand-coded
//! oracles in this file, never from the library under test.

use std::time::{Duration, Instant};

use qkdlab::{run_scenario, write_csv, AttackChoice, ProtocolChoice, Scenario};
use qkdlab_core::adversary::no_cloning::{analyze_interaction, fixing_unitary, random_signal_pair};
use qkdlab_core::adversary::{
    conditional_ancilla_state, eve_info_bound, passing_probability, passing_probability_averaged, Acceptance,
    AttackSpec, BasisPolicy, CoherentAttack, LabelDistribution, TestPlan,
};
use qkdlab_core::bounds::{
    atypical_count_exact, atypical_dim_chain, binomial_entropy_inequality, secrecy_lower_bound, MuPolicy,
};
use qkdlab_core::channel::{antiparallel_prob, sample_pair_label, sample_pair_outcomes, ChannelModel, ErrorRate};
use qkdlab_core::postprocess::{distill, final_key_length, RawKeyPair};
use qkdlab_core::protocol::{
    acceptance_window, default_bb84_test_size, run_bb84_session, run_epr_session, SessionConfig, ThresholdMode,
    Verdict,
};
use qkdlab_core::qstate::{random_unitary, BellLabel, Factorization, MeasurementAxis, QuantumState, Subsystem, C64};
use qkdlab_core::rng::stream;
use rand::Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn binom_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn c1_werner() -> Outcome {
    let n = 100_000;
    let mut detail = Vec::new();
    for (k, f) in [1.0, 0.97, 0.9, 0.25].into_iter().enumerate() {
        let start = Instant::now();
        let mut rng = stream(1001, k as u64);
        let mut anti = 0usize;
        for _ in 0..n {
            let label = sample_pair_label(f, &mut rng).map_err(|e| e.to_string())?;
            let axis = MeasurementAxis::random(&mut rng);
            let (a, b) = sample_pair_outcomes(label, &axis, &axis, &mut rng);
            anti += usize::from(a != b);
        }
        let elapsed = start.elapsed();
        let p = (1.0 + 2.0 * f) / 3.0;
        let freq = anti as f64 / n as f64;
        let tol = 3.0 * binom_sigma(p, n);
        ensure((freq - p).abs() <= tol.max(1e-12), || format!("F={f}: {freq} vs {p} (3σ {tol:.2e})"))?;
        ensure(elapsed < Duration::from_secs(10), || format!("F={f} took {elapsed:?}"))?;
        detail.push(format!("F={f}: {freq:.4}/{p:.4}"));
    }
    Ok(detail.join(", "))
}

/// QBER of full random-basis intercept-resend, by enumerating Alice's basis
/// and bit, Eve's basis and Eve's outcome with hand-written real vectors.
fn intercept_resend_qber_oracle() -> f64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // basis -> [state for bit 0, state for bit 1]
    let states = [[[1.0, 0.0], [0.0, 1.0]], [[h, h], [h, -h]]];
    let overlap2 = |u: [f64; 2], v: [f64; 2]| (u[0] * v[0] + u[1] * v[1]).powi(2);
    let mut qber = 0.0;
    let mut cases = 0;
    for ab in 0..2 {
        for bit in 0..2 {
            for eb in 0..2 {
                for eo in 0..2 {
                    cases += 1;
                    let sent = states[ab][bit];
                    let resent = states[eb][eo];
                    let p_case = 0.125 * overlap2(sent, resent);
                    // Bob measures in Alice's basis and reads the other bit
                    qber += p_case * overlap2(resent, states[ab][1 - bit]);
                }
            }
        }
    }
    assert_eq!(cases, 16);
    qber
}

fn c2_intercept_resend() -> Outcome {
    let oracle = intercept_resend_qber_oracle();
    ensure((oracle - 0.25).abs() < 1e-12, || format!("enumeration gives {oracle}"))?;
    let mut cfg = SessionConfig::new(40_000, 5_000, ErrorRate::new(0.02).unwrap());
    cfg.omega = 0.5;
    let attack = AttackSpec::InterceptResend {
        policy: BasisPolicy::Random,
        fraction: 1.0,
    };
    let mut rng = stream(1002, 0);
    let t = run_bb84_session(&cfg, &ChannelModel::ideal(), &attack, &mut rng).map_err(|e| e.to_string())?;
    let tested = t.tested();
    ensure(tested >= 10_000, || format!("only {tested} sifted test bits"))?;
    let qber = t.observed_error_count as f64 / tested as f64;
    let tol = 3.0 * binom_sigma(0.25, tested);
    ensure((qber - 0.25).abs() <= tol, || format!("qber {qber} vs 0.25 (3σ {tol:.4})"))?;
    ensure(t.verdict == Verdict::Rejected, || "attack went unnoticed".into())?;
    Ok(format!("qber {qber:.4} over {tested} test bits, enumeration {oracle}"))
}

fn c3_efficiency() -> Outcome {
    let n = 400_000;
    let mut fractions = Vec::new();
    for (k, omega) in [0.5, 0.2, 0.05].into_iter().enumerate() {
        let mut cfg = SessionConfig::new(n, default_bb84_test_size(n, omega), ErrorRate::new(0.0).unwrap());
        cfg.omega = omega;
        let mut rng = stream(1003, k as u64);
        let t = run_bb84_session(&cfg, &ChannelModel::ideal(), &AttackSpec::None, &mut rng)
            .map_err(|e| e.to_string())?;
        let p = (1.0 - omega) * (1.0 - omega) + omega * omega;
        let got = t.sifted_fraction();
        let tol = 3.0 * binom_sigma(p, n);
        ensure((got - p).abs() <= tol, || format!("ω={omega}: {got} vs {p} (3σ {tol:.2e})"))?;
        fractions.push(got);
    }
    let ratio = fractions[2] / fractions[0];
    ensure(ratio >= 1.8, || format!("ratio {ratio}"))?;
    Ok(format!(
        "sifted {:.4}/{:.4}/{:.4}, ratio {ratio:.3}",
        fractions[0], fractions[1], fractions[2]
    ))
}

struct LnFact(Vec<f64>);

impl LnFact {
    fn new(n: usize) -> Self {
        let mut v = vec![0.0; n + 1];
        for k in 1..=n {
            v[k] = v[k - 1] + (k as f64).ln();
        }
        LnFact(v)
    }
    fn ln_choose(&self, n: usize, k: usize) -> f64 {
        self.0[n] - self.0[k] - self.0[n - k]
    }
}

/// Probability that a session is accepted when `k` of `n` pairs are random
/// triplets and `m` pairs are tested: hypergeometric count of triplets in
/// the test, each giving a parallel (error) result with probability 2/3.
fn substitution_accept_oracle(n: usize, k: usize, m: usize, lo: usize, hi: usize, lf: &LnFact) -> f64 {
    let p_err: f64 = 2.0 / 3.0;
    let mut total = 0.0;
    for j in k.saturating_sub(n - m)..=k.min(m) {
        let hyp = (lf.ln_choose(k, j) + lf.ln_choose(n - k, m - j) - lf.ln_choose(n, m)).exp();
        let mut in_window = 0.0;
        for e in lo..=hi.min(j) {
            in_window +=
                (lf.ln_choose(j, e) + e as f64 * p_err.ln() + (j - e) as f64 * (1.0 - p_err).ln()).exp();
        }
        total += hyp * in_window;
    }
    total
}

fn c4_substitution() -> Outcome {
    let (eps, m, n, sessions) = (0.01, 10_000usize, 20_000usize, 200usize);
    let w = acceptance_window(eps, 1.0, m).map_err(|e| e.to_string())?;
    // (ε ∓ ε²)·m = 99, 101
    ensure((w.lo, w.hi) == (99, 101), || format!("window [{}, {}]", w.lo, w.hi))?;
    let lf = LnFact::new(n);
    let mut cfg = SessionConfig::new(n, m, ErrorRate::new(eps).unwrap());
    cfg.threshold_mode = ThresholdMode::Window;
    let mut detail = Vec::new();
    for (k, a) in [2.0 * eps, eps / 2.0, 1.5 * eps].into_iter().enumerate() {
        let attack = AttackSpec::Substitute {
            fraction: a,
            labels: LabelDistribution::uniform_triplets(),
        };
        let accepted = (0..sessions)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(1004 + k as u64, i as u64);
                run_epr_session(&cfg, &ChannelModel::ideal(), &attack, &mut rng).map(|t| t.verdict == Verdict::Accepted)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?
            .into_iter()
            .filter(|&x| x)
            .count();
        let rate = accepted as f64 / sessions as f64;
        let oracle = substitution_accept_oracle(n, (a * n as f64).round() as usize, m, w.lo, w.hi, &lf);
        let tol = 3.0 * binom_sigma(oracle, sessions) + 1.0 / sessions as f64;
        ensure((rate - oracle).abs() <= tol, || {
            format!("a={a}: accepted {rate} vs oracle {oracle:.4}")
        })?;
        if k < 2 {
            ensure(rate <= 0.05, || format!("a={a} accepted in {rate} of sessions"))?;
        }
        detail.push(format!("a={a}: acc {rate:.3} (oracle {oracle:.2e})"));
    }
    Ok(detail.join(", "))
}

fn random_amplitudes<R: Rng>(len: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..len).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn c5_coherent_ideal() -> Outcome {
    let mut rng = stream(1005, 0);
    let (mut total, mut passing, mut max_entropy) = (0usize, 0usize, 0.0f64);
    for n in [2usize, 3, 4] {
        for family in 0..40 {
            let d = 2 + family % 3;
            let len = 4usize.pow(n as u32) * d;
            let singlet_part = random_amplitudes(d, &mut rng);
            let amps = match family % 4 {
                // all-singlet particles, random ancilla
                0 | 1 => {
                    let mut v = vec![C64::new(0.0, 0.0); len];
                    v[..d].copy_from_slice(&singlet_part);
                    v
                }
                // generic state
                2 => random_amplitudes(len, &mut rng),
                // singlet plus a small admixture of everything else
                _ => {
                    let noise = random_amplitudes(len, &mut rng);
                    let delta: f64 = 1e-3;
                    let mut v: Vec<C64> = noise.iter().map(|z| z * delta.sqrt()).collect();
                    for r in 0..d {
                        v[r] += singlet_part[r] * (1.0 - delta).sqrt();
                    }
                    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    v.into_iter().map(|z| z / norm).collect()
                }
            };
            let attack = CoherentAttack::from_bell_amplitudes(n, d, amps).map_err(|e| e.to_string())?;
            total += 1;
            let mut always = true;
            let mut first_plan = None;
            for _ in 0..6 {
                let plan = TestPlan::random(n, n, Acceptance::Strict, &mut rng).map_err(|e| e.to_string())?;
                let p = passing_probability(&attack, &plan).map_err(|e| e.to_string())?;
                always &= p >= 1.0 - 1e-9;
                first_plan.get_or_insert(plan);
            }
            let weight = attack.non_singlet_weight();
            ensure(always == (weight < 1e-9), || {
                format!("N={n}: passing=1 is {always} but non-singlet weight is {weight:e}")
            })?;
            if always {
                passing += 1;
                let rho = conditional_ancilla_state(&attack, first_plan.as_ref().unwrap()).map_err(|e| e.to_string())?;
                let s = eve_info_bound(&rho).map_err(|e| e.to_string())?;
                ensure(s.abs() < 1e-9, || format!("N={n}: passing state leaves S(ρ_R) = {s:e}"))?;
                max_entropy = max_entropy.max(s.abs());
            }
        }
    }
    ensure(total >= 100, || format!("only {total} states"))?;
    Ok(format!("{total} states, {passing} pass surely, max S(ρ_R) {max_entropy:.1e}"))
}

fn c6_passing_average() -> Outcome {
    let m = 2usize;
    let labels = [BellLabel::SINGLET, BellLabel::SINGLET, BellLabel::new(1).unwrap(), BellLabel::SINGLET];
    let attack = CoherentAttack::product(&labels, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).map_err(|e| e.to_string())?;
    // the triplet lands in the test with hypergeometric probability
    // C(1,1)C(3,1)/C(4,2) = 1/2; tested along a uniform axis it comes out
    // antiparallel with probability (1 − (1+1−1)/3)/2 = 1/3
    let in_test: f64 = 3.0 / 6.0;
    let oracle = (1.0 - in_test) + in_test / 3.0;
    ensure((oracle - 2.0 / 3.0).abs() < 1e-15, || format!("oracle {oracle}"))?;
    let mut rng = stream(1006, 0);
    let avg = passing_probability_averaged(&attack, m, Acceptance::Strict, 100_000, &mut rng).map_err(|e| e.to_string())?;
    ensure((avg.mean - oracle).abs() <= 3.0 * avg.std_error, || {
        format!("{} vs {oracle} (se {:.2e})", avg.mean, avg.std_error)
    })?;
    Ok(format!("{:.5} ± {:.5} vs 2/3", avg.mean, avg.std_error))
}

fn c7_chain() -> Outcome {
    let tol = 1e-9;
    let mut points = 0;
    for n in [20u64, 50, 100, 200, 500] {
        for eps in [0.01, 0.02, 0.05, 0.1] {
            if (n as f64) * eps < 0.5 {
                continue;
            }
            let r = atypical_dim_chain(n, eps, MuPolicy::default()).map_err(|e| e.to_string())?;
            let v = [r.exact_atypical_count.log2, r.l1.log2, r.l2.log2, r.l3.log2, r.l4.log2];
            for (i, w) in v.windows(2).enumerate() {
                ensure(w[0] <= w[1] + tol, || format!("N={n} ε={eps}: step {i} {} > {}", w[0], w[1]))?;
            }
            points += 1;
        }
    }
    // Σ_{j<T} C(N, j)·3^j by hand
    let oracle = |n: u128, t: u128| -> u128 {
        (0..t)
            .map(|j| {
                let c = (0..j).fold(1u128, |acc, i| acc * (n - i) / (i + 1));
                c * 3u128.pow(j as u32)
            })
            .sum()
    };
    for (n, t, expected) in [(100u64, 2u64, 301u128), (4, 2, 13)] {
        let got = atypical_count_exact(n, t).map_err(|e| e.to_string())?.to_string();
        ensure(oracle(n as u128, t as u128) == expected, || "oracle".into())?;
        ensure(got == expected.to_string(), || format!("N={n}, T={t}: {got}"))?;
    }
    Ok(format!("{points} grid points ordered, 301 and 13 exact"))
}

fn c8_entropy_inequality() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for n in 0..=200u64 {
        for r in 0..=n {
            let c = binomial_entropy_inequality(n, r).map_err(|e| e.to_string())?;
            ensure(c.holds, || format!("fails at N={n}, r={r}"))?;
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    // floating cross-check: ln C(N,r) ≤ N·H(r/N)·ln 2
    let lf = LnFact::new(200);
    for n in 1..=200usize {
        for r in 0..=n {
            let x = r as f64 / n as f64;
            let h = if r == 0 || r == n { 0.0 } else { -x * x.ln() - (1.0 - x) * (1.0 - x).ln() };
            ensure(lf.ln_choose(n, r) <= n as f64 * h + 1e-9, || format!("float check N={n}, r={r}"))?;
        }
    }
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{checked} pairs in {:.2}s", elapsed.as_secs_f64()))
}

fn c9_capacity_limit() -> Outcome {
    let kprime = 10.0;
    let vals: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| secrecy_lower_bound(e, kprime))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for (e, v) in [1e-2f64, 1e-3, 1e-4].iter().zip(&vals) {
        let closed = 1.0 + kprime * e * e.log2();
        ensure((v - closed.max(0.0)).abs() < 1e-12, || format!("ε={e}: {v} vs {closed}"))?;
    }
    ensure(vals[0] < vals[1] && vals[1] < vals[2] && vals[2] < 1.0, || format!("{vals:?}"))?;
    let gap = 1.0 - vals[2];
    ensure(gap < 15.0 * kprime * 1e-4, || format!("gap {gap}"))?;
    let half = antiparallel_prob(0.25).map_err(|e| e.to_string())?;
    ensure(half == 0.5, || format!("antiparallel_prob(1/4) = {half}"))?;
    Ok(format!("{:.4} < {:.4} < {:.4}, gap {gap:.4}, P(1/4) = 0.5", vals[0], vals[1], vals[2]))
}

fn c10_no_cloning() -> Outcome {
    let mut rng = stream(1010, 0);
    let ready_state = |d: usize| QuantumState::basis(Factorization::new(vec![Subsystem::ancilla(d)]).unwrap(), 0).unwrap();
    let mut worst_overlap = 1.0f64;
    for i in 0..100 {
        let (u1, u2) = random_signal_pair(&mut rng);
        let ready = ready_state(2 + i % 3);
        let u = fixing_unitary(&ready, &mut rng).map_err(|e| e.to_string())?;
        let rep = analyze_interaction(&u1, &u2, &ready, &u).map_err(|e| e.to_string())?;
        ensure(rep.fidelity_deficit < 1e-9, || format!("fixing unitary disturbs a signal: {:e}", rep.fidelity_deficit))?;
        ensure((rep.ancilla_overlap - 1.0).abs() < 1e-9, || format!("ancilla overlap {}", rep.ancilla_overlap))?;
        worst_overlap = worst_overlap.min(rep.ancilla_overlap);
    }
    let (mut found, mut tried, mut min_deficit) = (0, 0, f64::INFINITY);
    while found < 100 {
        tried += 1;
        ensure(tried < 10_000, || format!("only {found} informative unitaries"))?;
        let (u1, u2) = random_signal_pair(&mut rng);
        let d = 2 + tried % 3;
        let ready = ready_state(d);
        let u = random_unitary(2 * d, &mut rng);
        let rep = analyze_interaction(&u1, &u2, &ready, &u).map_err(|e| e.to_string())?;
        if rep.distinguishing_bits < 0.01 {
            continue;
        }
        found += 1;
        ensure(rep.fidelity_deficit >= 1e-6, || {
            format!("{} bits extracted with deficit {:e}", rep.distinguishing_bits, rep.fidelity_deficit)
        })?;
        min_deficit = min_deficit.min(rep.fidelity_deficit);
    }
    Ok(format!("min overlap {worst_overlap:.12}, min deficit {min_deficit:.3e} over {found} informative"))
}

fn c11_pipeline() -> Outcome {
    let (n, m, eps, kprime) = (100_000usize, 10_000usize, 0.02, 2.0);
    let cfg = SessionConfig::new(n, m, ErrorRate::new(eps).unwrap());
    let channel = ChannelModel::from_error_rate(ErrorRate::new(eps).unwrap()).map_err(|e| e.to_string())?;
    let results = (0..100u64)
        .into_par_iter()
        .map(|i| -> Result<(bool, usize, bool), String> {
            let mut rng = stream(1011, i);
            let t = run_epr_session(&cfg, &channel, &AttackSpec::None, &mut rng).map_err(|e| e.to_string())?;
            if t.verdict != Verdict::Accepted {
                return Ok((false, 0, true));
            }
            let raw = RawKeyPair::from_transcript(&t).map_err(|e| e.to_string())?;
            let hash_seed: u64 = rng.gen();
            let d = distill(&raw, kprime, hash_seed, &mut rng).map_err(|e| e.to_string())?;
            let expected = final_key_length(d.n_raw, d.estimated_error, d.leaked_bits, kprime).map_err(|e| e.to_string())?;
            Ok((d.keys_equal(), d.final_len, expected == d.final_len && d.final_a.len() == d.final_len))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let equal = results.iter().filter(|r| r.0).count();
    let lengths_ok = results.iter().all(|r| r.2);
    let mean_len = results.iter().map(|r| r.1 as f64).sum::<f64>() / results.len() as f64;
    ensure(lengths_ok, || "final length differs from final_key_length".into())?;
    ensure(mean_len > 0.0, || "empty final keys".into())?;
    ensure(equal >= 99, || format!("equal keys in {equal}/100"))?;
    Ok(format!("equal in {equal}/100, mean final length {mean_len:.0} bits (k' = {kprime})"))
}

fn c12_determinism() -> Outcome {
    let mut scenarios = Vec::new();
    let mut a = Scenario::new(ProtocolChoice::Epr, 5_000);
    a.fidelity = Some(0.97);
    a.trials = 6;
    a.seed = 42;
    scenarios.push(a);
    let mut b = Scenario::new(ProtocolChoice::Bb84, 5_000);
    b.epsilon = Some(0.02);
    b.attack = AttackChoice::InterceptResend;
    b.attack_fraction = 0.2;
    b.trials = 6;
    b.seed = 42;
    scenarios.push(b);
    let mut c = Scenario::new(ProtocolChoice::Epr, 5_000);
    c.attack = AttackChoice::Substitute;
    c.attack_fraction = 0.05;
    c.trials = 6;
    c.seed = 42;
    scenarios.push(c);
    for s in &scenarios {
        let bytes = || -> Result<Vec<u8>, String> {
            let out = run_scenario(s).map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            write_csv(&out.rows, &mut buf).map_err(|e| e.to_string())?;
            Ok(buf)
        };
        let (x, y) = (bytes()?, bytes()?);
        ensure(x == y, || format!("{:?} {:?} differs between runs", s.protocol, s.attack))?;
    }
    Ok(format!("{} scenarios byte-identical", scenarios.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("werner statistics", c1_werner),
        ("intercept-resend qber", c2_intercept_resend),
        ("efficiency doubling", c3_efficiency),
        ("substitution detection", c4_substitution),
        ("ideal-channel coherent attack", c5_coherent_ideal),
        ("passing-probability oracle", c6_passing_average),
        ("dimension-chain ordering", c7_chain),
        ("entropy inequality", c8_entropy_inequality),
        ("capacity limit", c9_capacity_limit),
        ("no-cloning verifier", c10_no_cloning),
        ("end-to-end pipeline", c11_pipeline),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
