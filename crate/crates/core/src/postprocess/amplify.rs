use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::{Error, Result};

/// `len` Toeplitz seed bits from ChaCha20 keyed by `seed`, packed
/// little-endian (bit `t` is bit `t % 64` of word `t / 64`), plus one spare
/// word so unaligned windows never read past the end.
fn seed_words(seed: u64, len: usize) -> Vec<u64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..len.div_ceil(64) + 1).map(|_| rng.next_u64()).collect()
}

/// Multiplies `key` by the `output_length × n` Toeplitz matrix
/// `T[i][j] = s[i − j + n − 1]` over GF(2), where `s` holds
/// `n + output_length − 1` seed bits.
pub fn privacy_amplify(key: &[u8], output_length: usize, hash_seed: u64) -> Result<Vec<u8>> {
    let n = key.len();
    if output_length > n {
        return Err(Error::Config(format!(
            "output length {output_length} exceeds key length {n}"
        )));
    }
    if output_length == 0 {
        return Ok(Vec::new());
    }
    if key.iter().any(|&b| b > 1) {
        return Err(Error::Config("key must hold bits 0 or 1".into()));
    }
    let s = seed_words(hash_seed, n + output_length - 1);
    // reversed key: out_i = ⊕_t s[i + t]·k[n − 1 − t]
    let mut rev = vec![0u64; n.div_ceil(64)];
    for (t, &b) in key.iter().rev().enumerate() {
        rev[t / 64] |= u64::from(b) << (t % 64);
    }
    let mut out = Vec::with_capacity(output_length);
    for i in 0..output_length {
        let (w0, sh) = (i / 64, i % 64);
        let mut acc = 0u64;
        for (w, r) in rev.iter().enumerate() {
            let lo = s[w0 + w] >> sh;
            let hi = if sh == 0 { 0 } else { s[w0 + w + 1] << (64 - sh) };
            acc ^= (lo | hi) & r;
        }
        out.push((acc.count_ones() & 1) as u8);
    }
    Ok(out)
}

/// Lowercase hex, most significant bit first; a trailing partial nibble is
/// padded with zeros on the right.
pub fn bits_to_hex(bits: &[u8]) -> String {
    bits.chunks(4)
        .map(|c| {
            let v = c.iter().enumerate().fold(0u32, |acc, (k, &b)| acc | (u32::from(b) << (3 - k)));
            char::from_digit(v, 16).expect("nibble")
        })
        .collect()
}
