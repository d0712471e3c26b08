//! Sobol low-discrepancy sequences in up to 1111 dimensions.
//!
//! Dimension 1 is the van der Corput sequence. Dimensions 2–8 use the
//! published Joe–Kuo `new-joe-kuo-6` initial direction numbers. Higher
//! dimensions enumerate the primitive polynomials over GF(2) of degree
//! ≤ 13 (exactly 1110 of them, ordered by degree then coefficient mask),
//! initialized with fixed pseudo-random odd values. Any odd `m_i < 2^i`
//! yields a valid Sobol construction; randomized initials avoid the
//! diagonal correlations that identical (e.g. all-ones) initials produce
//! between dimensions sharing a polynomial degree. The internal seed is a
//! constant, so the sequence is the same on every platform.

use crate::rng::SplitMix64;
use crate::{Error, Result};

const BITS: usize = 32;

/// Joe–Kuo parameters (s, a, m[..s]) for Sobol dimensions 2..=8.
const JOE_KUO_LOW: [(u32, u32, &[u32]); 7] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

/// Multiply polynomials over GF(2).
fn gf2_mul(a: u64, b: u64) -> u64 {
    let mut r = 0u64;
    let mut a = a;
    let mut i = 0;
    while a != 0 {
        if a & 1 != 0 {
            r ^= b << i;
        }
        a >>= 1;
        i += 1;
    }
    r
}

/// Reduce modulo a polynomial of degree `deg`.
fn gf2_rem(mut a: u64, p: u64, deg: u32) -> u64 {
    while 64 - a.leading_zeros() > deg {
        let shift = 64 - a.leading_zeros() - deg - 1;
        a ^= p << shift;
    }
    a
}

fn gf2_pow_mod(mut base: u64, mut e: u64, p: u64, deg: u32) -> u64 {
    let mut acc = 1u64;
    base = gf2_rem(base, p, deg);
    while e > 0 {
        if e & 1 != 0 {
            acc = gf2_rem(gf2_mul(acc, base), p, deg);
        }
        base = gf2_rem(gf2_mul(base, base), p, deg);
        e >>= 1;
    }
    acc
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// A degree-s polynomial (mask with bits s and 0 set) is primitive iff x has
/// multiplicative order exactly 2^s − 1 in GF(2)[x]/(p).
fn is_primitive(p: u64, deg: u32) -> bool {
    if p & 1 == 0 {
        return false;
    }
    let order = (1u64 << deg) - 1;
    if gf2_pow_mod(2, order, p, deg) != 1 {
        return false;
    }
    for q in prime_factors(order) {
        if gf2_pow_mod(2, order / q, p, deg) == 1 {
            return false;
        }
    }
    true
}

/// All primitive polynomials of degree ≤ 13 ordered by (degree, mask).
fn primitive_polynomials() -> Vec<(u32, u64)> {
    let mut out = Vec::with_capacity(1110);
    for deg in 1..=13u32 {
        let lo = 1u64 << deg;
        for interior in 0..(1u64 << (deg.saturating_sub(1))) {
            let p = lo | (interior << 1) | 1;
            if is_primitive(p, deg) {
                out.push((deg, p));
            }
        }
    }
    out
}

/// Maximum supported dimension: van der Corput + 1110 polynomial dims.
pub const MAX_DIM: usize = 1111;

/// Gray-code Sobol engine with an optional per-dimension digital shift.
pub struct SobolSeq {
    dim: usize,
    // direction numbers, dim-major: v[j][b]
    v: Vec<[u32; BITS]>,
    shift: Vec<u32>,
    x: Vec<u32>,
    count: u64,
}

impl SobolSeq {
    pub fn new(dim: usize, shift_seed: Option<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("sobol dimension must be positive".into()));
        }
        if dim > MAX_DIM {
            return Err(Error::Unsupported(format!(
                "sobol direction numbers cover {MAX_DIM} dimensions, requested {dim}"
            )));
        }
        let mut v = Vec::with_capacity(dim);
        // dimension 1: van der Corput
        let mut v0 = [0u32; BITS];
        for (i, slot) in v0.iter_mut().enumerate() {
            *slot = 1u32 << (31 - i);
        }
        v.push(v0);
        if dim > 1 {
            let polys = primitive_polynomials();
            let mut init_rng = SplitMix64::new(0x50b0_1d1f_5eed);
            for (j, &(deg, mask)) in polys.iter().take(dim - 1).enumerate() {
                let (s, a, m): (u32, u32, Vec<u32>) = if j < JOE_KUO_LOW.len() {
                    let (s, a, m) = JOE_KUO_LOW[j];
                    // keep the initializer stream aligned across dims
                    for _ in 0..s {
                        init_rng.next_u64();
                    }
                    (s, a, m.to_vec())
                } else {
                    let s = deg;
                    let a = ((mask >> 1) & ((1u64 << (deg - 1)) - 1)) as u32;
                    let m: Vec<u32> = (0..s)
                        .map(|i| {
                            let bits = (init_rng.next_u64() >> 32) as u32;
                            (bits | 1) & ((1u32 << (i + 1)) - 1)
                        })
                        .collect();
                    (s, a, m)
                };
                v.push(direction_numbers(s, a, &m));
            }
        }
        let shift = match shift_seed {
            Some(seed) => {
                let mut rng = SplitMix64::new(seed);
                (0..dim).map(|_| (rng.next_u64() >> 32) as u32).collect()
            }
            None => vec![0u32; dim],
        };
        Ok(Self { dim, v, shift, x: vec![0; dim], count: 0 })
    }

    /// Next point in (0, 1)^dim, gray-code order, index 0 skipped.
    pub fn next_point(&mut self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        self.count += 1;
        let bit = self.count.trailing_zeros() as usize;
        debug_assert!(bit < BITS, "sequence length exceeds 2^32");
        for j in 0..self.dim {
            self.x[j] ^= self.v[j][bit];
            let u = self.x[j] ^ self.shift[j];
            // clamp exact 0 so downstream inverse CDFs stay finite
            out[j] = if u == 0 {
                0.5 / 4294967296.0
            } else {
                u as f64 / 4294967296.0
            };
        }
    }
}

/// Expand initial odd values m into 32 direction integers.
fn direction_numbers(s: u32, a: u32, m: &[u32]) -> [u32; BITS] {
    debug_assert_eq!(m.len(), s as usize);
    let mut v = [0u32; BITS];
    for i in 0..(s as usize).min(BITS) {
        debug_assert!(m[i] % 2 == 1 && m[i] < (1 << (i + 1)));
        v[i] = m[i] << (31 - i);
    }
    let s = s as usize;
    for i in s..BITS {
        let mut next = v[i - s] ^ (v[i - s] >> s);
        for k in 0..s.saturating_sub(1) {
            if (a >> k) & 1 != 0 {
                next ^= v[i - s + 1 + k];
            }
        }
        v[i] = next;
    }
    v
}
