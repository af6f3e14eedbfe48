use std::io::Write;

use serde::Serialize;

use super::{Basis, Threshold, Verdict};
use crate::qstate::{MeasurementAxis, Outcome};
use crate::{Error, Result};

/// What a party measured along: a named BB84 basis or an arbitrary axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Setting {
    Basis(Basis),
    Axis([f64; 3]),
}

impl From<Basis> for Setting {
    fn from(b: Basis) -> Self {
        Setting::Basis(b)
    }
}

impl From<&MeasurementAxis> for Setting {
    fn from(a: &MeasurementAxis) -> Self {
        Setting::Axis(a.components())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionRecord {
    pub index: usize,
    pub basis_a: Setting,
    pub basis_b: Setting,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    pub in_test: bool,
    pub sifted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum SessionEvent {
    Sent { count: usize },
    AttackWindow { attack: &'static str },
    Delivered,
    Acknowledged,
    SettingsAnnounced,
    TestCompared { tested: usize, errors: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Epr,
    Bb84,
}

/// Immutable record of one session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    pub protocol: ProtocolKind,
    pub n: usize,
    #[serde(skip)]
    pub records: Vec<PositionRecord>,
    pub test_indices: Vec<usize>,
    pub threshold: Threshold,
    pub verdict: Verdict,
    pub observed_error_count: usize,
    /// Bob's key bit is the complement of his outcome (EPR constructions).
    pub bob_complements: bool,
    pub sifted_key_a: Vec<u8>,
    pub sifted_key_b: Vec<u8>,
    pub events: Vec<SessionEvent>,
}

impl Transcript {
    /// Assembles the transcript from measured records. Fills in `in_test`,
    /// counts errors on the test positions, and keys the rest of the sifted
    /// positions.
    pub(crate) fn finish(
        protocol: ProtocolKind,
        mut records: Vec<PositionRecord>,
        test_indices: Vec<usize>,
        threshold: Threshold,
        bob_complements: bool,
        mut events: Vec<SessionEvent>,
    ) -> Self {
        for &i in &test_indices {
            records[i].in_test = true;
        }
        let bits = |r: &PositionRecord| {
            let b = if bob_complements { r.outcome_b.flipped() } else { r.outcome_b };
            (r.outcome_a.bit(), b.bit())
        };
        let errors = test_indices
            .iter()
            .filter(|&&i| {
                let (a, b) = bits(&records[i]);
                a != b
            })
            .count();
        events.push(SessionEvent::TestCompared {
            tested: test_indices.len(),
            errors,
        });
        let (sifted_key_a, sifted_key_b) = records
            .iter()
            .filter(|r| r.sifted && !r.in_test)
            .map(bits)
            .unzip();
        let verdict = threshold.verdict(errors, test_indices.len());
        Transcript {
            protocol,
            n: records.len(),
            records,
            test_indices,
            threshold,
            verdict,
            observed_error_count: errors,
            bob_complements,
            sifted_key_a,
            sifted_key_b,
            events,
        }
    }

    /// Alice's and Bob's key bits at position `i`.
    pub fn key_bits(&self, i: usize) -> (u8, u8) {
        let r = &self.records[i];
        let b = if self.bob_complements { r.outcome_b.flipped() } else { r.outcome_b };
        (r.outcome_a.bit(), b.bit())
    }

    pub fn tested(&self) -> usize {
        self.test_indices.len()
    }

    pub fn qber_estimate(&self) -> f64 {
        self.observed_error_count as f64 / self.tested() as f64
    }

    pub fn sifted_count(&self) -> usize {
        self.records.iter().filter(|r| r.sifted).count()
    }

    pub fn sifted_fraction(&self) -> f64 {
        self.sifted_count() as f64 / self.n as f64
    }

    /// Fraction of key positions where the two raw keys differ.
    pub fn key_disagreement_rate(&self) -> f64 {
        if self.sifted_key_a.is_empty() {
            return 0.0;
        }
        let d = self
            .sifted_key_a
            .iter()
            .zip(&self.sifted_key_b)
            .filter(|(a, b)| a != b)
            .count();
        d as f64 / self.sifted_key_a.len() as f64
    }

    /// Verdict recomputed from the recorded count and threshold.
    pub fn recompute_verdict(&self) -> Verdict {
        self.threshold.verdict(self.observed_error_count, self.tested())
    }

    /// Structural invariants: disjoint test/key positions, consistent counts,
    /// the announcement after acknowledgment, verdict determinism.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Internal(format!("transcript invariant: {m}")));
        let in_test = self.records.iter().filter(|r| r.in_test).count();
        if in_test != self.test_indices.len() {
            return fail("test flags disagree with test indices");
        }
        let keyed = self.records.iter().filter(|r| r.sifted && !r.in_test).count();
        if keyed != self.sifted_key_a.len() || keyed != self.sifted_key_b.len() {
            return fail("key length disagrees with key positions");
        }
        if self.test_indices.iter().any(|&i| !self.records[i].sifted) {
            return fail("a test position was not sifted");
        }
        let pos = |e: &SessionEvent| self.events.iter().position(|x| x == e);
        match (pos(&SessionEvent::Acknowledged), pos(&SessionEvent::SettingsAnnounced)) {
            (Some(a), Some(s)) if a < s => {}
            _ => return fail("settings announced before acknowledgment"),
        }
        let last_attack = self
            .events
            .iter()
            .rposition(|e| matches!(e, SessionEvent::AttackWindow { .. }));
        if let (Some(at), Some(ack)) = (last_attack, pos(&SessionEvent::Acknowledged)) {
            if at > ack {
                return fail("attack window after acknowledgment");
            }
        }
        if self.recompute_verdict() != self.verdict {
            return fail("verdict is not reproduced by the threshold");
        }
        Ok(())
    }

    /// One JSON object per position.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
