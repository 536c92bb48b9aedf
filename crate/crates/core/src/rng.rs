//! Counter-based randomness (Philox4x32-10).
//!
//! Every random draw is a pure function of `(key, counter)`, so a matrix
//! entry can be generated from `(seed, row, col)` alone, independent of
//! generation order or thread schedule.

use rand_core::{impls, Error as RandError, RngCore};

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// One Philox4x32 block with 10 rounds.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut ctr = counter;
    let mut key = key;
    for round in 0..10 {
        if round > 0 {
            key[0] = key[0].wrapping_add(PHILOX_W0);
            key[1] = key[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, ctr[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
    }
    ctr
}

#[inline]
pub fn key_from_seed(seed: u64) -> [u32; 2] {
    [seed as u32, (seed >> 32) as u32]
}

/// Block addressed by two 64-bit coordinates, e.g. `(row, col)`.
#[inline]
pub fn block_at(seed: u64, a: u64, b: u64) -> [u32; 4] {
    philox4x32_10([b as u32, (b >> 32) as u32, a as u32, (a >> 32) as u32], key_from_seed(seed))
}

/// Maps 64 random bits to the open interval (0, 1) with 52-bit resolution.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Box-Muller: the first word pair feeds the radius, the second the angle.
#[inline]
pub fn gaussian_from_block(block: [u32; 4]) -> f64 {
    let u1 = open_unit(u64::from(block[0]) << 32 | u64::from(block[1]));
    let u2 = open_unit(u64::from(block[2]) << 32 | u64::from(block[3]));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`: `splitmix64(master ^ splitmix64(index))`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Sequential stream over consecutive Philox blocks of one `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct PhiloxStream {
    seed: u64,
    stream: u64,
    counter: u64,
    buffer: [u32; 4],
    used: usize,
}

impl PhiloxStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream, counter: 0, buffer: [0; 4], used: 4 }
    }

    pub fn next_f64(&mut self) -> f64 {
        open_unit(self.next_u64())
    }

    /// Standard normal via Box-Muller on a fresh block.
    pub fn next_gaussian(&mut self) -> f64 {
        let block = block_at(self.seed, self.stream, self.counter);
        self.counter += 1;
        gaussian_from_block(block)
    }

    /// Standard Cauchy by inversion.
    pub fn next_cauchy(&mut self) -> f64 {
        (std::f64::consts::PI * (self.next_f64() - 0.5)).tan()
    }

    pub fn next_sign(&mut self) -> f64 {
        if self.next_u32() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl RngCore for PhiloxStream {
    fn next_u32(&mut self) -> u32 {
        if self.used == 4 {
            self.buffer = block_at(self.seed, self.stream, self.counter);
            self.counter += 1;
            self.used = 0;
        }
        let x = self.buffer[self.used];
        self.used += 1;
        x
    }

    fn next_u64(&mut self) -> u64 {
        impls::next_u64_via_u32(self)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        impls::fill_bytes_via_next(self, dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.fill_bytes(dest);
        Ok(())
    }
}
