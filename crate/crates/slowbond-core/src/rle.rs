//! Run-length encoding of occupancy bit rows.
//!
//! A row of `len` bits is encoded as alternating run lengths (`u32`),
//! starting with a (possibly zero-length) run of empty sites. Decoding is
//! the exact inverse; the encoded runs always sum to `len`.

use alloc::vec::Vec;

/// Encode `bits[0..len]` (chronological site order) as alternating run
/// lengths starting with an empty run.
pub fn encode(bits: impl Iterator<Item = bool>) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut current = false; // first run counts empty sites
    let mut count: u32 = 0;
    for b in bits {
        if b == current {
            count += 1;
        } else {
            runs.push(count);
            current = b;
            count = 1;
        }
    }
    runs.push(count);
    runs
}

/// Decode alternating run lengths back into a bit vector.
pub fn decode(runs: &[u32]) -> Vec<bool> {
    let total: usize = runs.iter().map(|&r| r as usize).sum();
    let mut bits = Vec::with_capacity(total);
    let mut value = false;
    for &r in runs {
        for _ in 0..r {
            bits.push(value);
        }
        value = !value;
    }
    bits
}
