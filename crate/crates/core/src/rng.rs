//! Philox4x32-10 counter-based generator.
//!
//! A stream is addressed by `(seed, replica, tag)`: the seed is the key and
//! the counter is `[block, tag, replica_lo, replica_hi]`, so every replica
//! draws from a disjoint counter range regardless of scheduling.

use rand_core::{impls, RngCore};

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;
const ROUNDS: usize = 10;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let prod = u64::from(a) * u64::from(b);
    ((prod >> 32) as u32, prod as u32)
}

/// One Philox4x32-10 block.
pub fn philox4x32(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = ctr;
    let mut k = key;
    for round in 0..ROUNDS {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, c[0]);
        let (hi1, lo1) = mulhilo(M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Stream tags used across the crate. Distinct tags give independent streams
/// for the same `(seed, replica)`.
pub mod tags {
    pub const QUADFORM: u32 = 1;
    pub const FIELD: u32 = 2;
    pub const EIGEN: u32 = 3;
    pub const NU0: u32 = 4;
    pub const OMEGA0: u32 = 5;
    pub const CALIBRATE: u32 = 6;
    pub const MOMENTS: u32 = 7;
    pub const DIRECTIONS: u32 = 8;
    pub const TEST: u32 = 99;
}

#[derive(Debug, Clone)]
pub struct PhiloxRng {
    key: [u32; 2],
    ctr: [u32; 4],
    buf: [u32; 4],
    used: usize,
}

impl PhiloxRng {
    pub fn from_raw(key: [u32; 2], ctr: [u32; 4]) -> Self {
        Self {
            key,
            ctr,
            buf: [0; 4],
            used: 4,
        }
    }

    pub fn stream(seed: u64, replica: u64, tag: u32) -> Self {
        Self::from_raw(
            [seed as u32, (seed >> 32) as u32],
            [0, tag, replica as u32, (replica >> 32) as u32],
        )
    }

    fn refill(&mut self) {
        self.buf = philox4x32(self.ctr, self.key);
        self.ctr[0] = self.ctr[0]
            .checked_add(1)
            .expect("Philox stream exhausted its 2^32 blocks");
        self.used = 0;
    }
}

impl RngCore for PhiloxRng {
    fn next_u32(&mut self) -> u32 {
        if self.used == 4 {
            self.refill();
        }
        let v = self.buf[self.used];
        self.used += 1;
        v
    }

    fn next_u64(&mut self) -> u64 {
        impls::next_u64_via_u32(self)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}
