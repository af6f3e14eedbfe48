//! Text format for coherent attack states.
//!
//! ```text
//! # comment
//! ancilla_dim 2          (optional; otherwise max ancilla index + 1)
//! 0010 1 0.70710678 0.0  (Bell labels of each pair, ancilla index, re, im)
//! ```
//!
//! Rows absent from the file have amplitude zero. Duplicate rows and
//! unnormalized states are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::coherent::{bell_index, CoherentAttack};
use crate::qstate::{BellLabel, C64};
use crate::{Error, Result};

struct Row {
    labels: Vec<BellLabel>,
    ancilla: usize,
    amp: C64,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

impl CoherentAttack {
    pub fn parse(text: &str) -> Result<Self> {
        let mut declared_dim: Option<usize> = None;
        let mut rows: Vec<Row> = Vec::new();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "ancilla_dim" {
                if fields.len() != 2 || declared_dim.is_some() {
                    return Err(parse_err(line_no, "expected a single `ancilla_dim <d>` directive"));
                }
                let d = fields[1]
                    .parse::<usize>()
                    .map_err(|e| parse_err(line_no, format!("ancilla_dim: {e}")))?;
                declared_dim = Some(d);
                continue;
            }
            if fields.len() != 4 {
                return Err(parse_err(line_no, format!("expected 4 fields, found {}", fields.len())));
            }
            let labels = fields[0]
                .chars()
                .map(|ch| {
                    ch.to_digit(10)
                        .filter(|d| *d < 4)
                        .map(|d| BellLabel::new(d as u8).expect("checked < 4"))
                        .ok_or_else(|| parse_err(line_no, format!("bad Bell label {ch:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(first) = rows.first() {
                if first.labels.len() != labels.len() {
                    return Err(parse_err(line_no, "inconsistent number of pairs"));
                }
            }
            let ancilla = fields[1]
                .parse::<usize>()
                .map_err(|e| parse_err(line_no, format!("ancilla index: {e}")))?;
            let re = fields[2]
                .parse::<f64>()
                .map_err(|e| parse_err(line_no, format!("real part: {e}")))?;
            let im = fields[3]
                .parse::<f64>()
                .map_err(|e| parse_err(line_no, format!("imaginary part: {e}")))?;
            if !re.is_finite() || !im.is_finite() {
                return Err(parse_err(line_no, "amplitude is not finite"));
            }
            if seen.insert((fields[0].to_string(), ancilla), line_no).is_some() {
                return Err(parse_err(line_no, "duplicate amplitude row"));
            }
            rows.push(Row {
                labels,
                ancilla,
                amp: C64::new(re, im),
            });
        }
        let n_pairs = rows
            .first()
            .map(|r| r.labels.len())
            .ok_or_else(|| parse_err(0, "no amplitude rows"))?;
        let max_anc = rows.iter().map(|r| r.ancilla).max().unwrap_or(0);
        let d = declared_dim.unwrap_or(max_anc + 1);
        if max_anc >= d {
            return Err(parse_err(0, format!("ancilla index {max_anc} outside dimension {d}")));
        }
        if n_pairs > super::MAX_COHERENT_PAIRS || d > super::MAX_ANCILLA_DIM || d == 0 {
            return Err(Error::CapExceeded {
                requested: 4usize.saturating_pow(n_pairs as u32).saturating_mul(d),
                cap: crate::qstate::MAX_JOINT_ENTRIES,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 4usize.pow(n_pairs as u32) * d];
        for r in rows {
            amps[bell_index(&r.labels) * d + r.ancilla] = r.amp;
        }
        CoherentAttack::from_bell_amplitudes(n_pairs, d, amps)
    }

    /// Serializes the nonzero Bell-coordinate amplitudes.
    pub fn to_text(&self) -> String {
        let d = self.ancilla_dim();
        let n = self.n_pairs();
        let mut out = format!("ancilla_dim {d}\n");
        for (idx, a) in self.bell_state().amplitudes().iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let (mut li, r) = (idx / d, idx % d);
            let mut digits = vec!['0'; n];
            for slot in digits.iter_mut().rev() {
                *slot = char::from(b'0' + (li % 4) as u8);
                li /= 4;
            }
            let s: String = digits.into_iter().collect();
            writeln!(out, "{s} {r} {:e} {:e}", a.re, a.im).expect("writing to a String");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::random_unitary;
    use crate::rng::stream;

    #[test]
    fn parses_two_marker_state() {
        let text = "# two markers\n00 0 0.7071067811865476 0\n01 1 0.7071067811865476 0.0\n";
        let a = CoherentAttack::parse(text).unwrap();
        assert_eq!((a.n_pairs(), a.ancilla_dim()), (2, 2));
        let l = |v: u8| BellLabel::new(v).unwrap();
        assert!((a.amplitude(&[l(0), l(1)], 1).re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_unnormalized_input() {
        assert!(CoherentAttack::parse("00 0 0.5 0\n").is_err());
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(matches!(CoherentAttack::parse("04 0 1 0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(CoherentAttack::parse("0 0 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            CoherentAttack::parse("0 0 0.6 0\n00 0 0.8 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            CoherentAttack::parse("0 0 0.6 0\n0 0 0.8 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(CoherentAttack::parse("ancilla_dim 1\n0 1 1 0\n").is_err());
        assert!(CoherentAttack::parse("# nothing\n").is_err());
    }

    #[test]
    fn round_trip() {
        let mut rng = stream(91, 0);
        let u = random_unitary(16 * 3, &mut rng);
        let amps: Vec<C64> = (0..48).map(|i| u[(i, 0)]).collect();
        let a = CoherentAttack::from_bell_amplitudes(2, 3, amps).unwrap();
        let b = CoherentAttack::parse(&a.to_text()).unwrap();
        for (x, y) in a.bell_state().amplitudes().iter().zip(b.bell_state().amplitudes()) {
            assert!((x - y).norm() < 1e-15);
        }
    }
}
