//! Arithmetic modulo the 254-bit prime
//! `p = 21888242871839275222246405745257275088548364400416034343698204186575808495617`.
//!
//! Elements are kept in Montgomery form with four 64-bit limbs. Only the
//! canonical value is observable: equality, hashing, encoding and display all
//! agree with the integer in `[0, p)`.

use core::fmt;
use core::iter::{Product, Sum};
use core::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::FieldError;

/// The modulus, little-endian limbs.
pub const MODULUS: [u64; 4] = [
    0x43e1f593f0000001,
    0x2833e84879b97091,
    0xb85045b68181585d,
    0x30644e72e131a029,
];

/// Decimal form of the modulus.
pub const MODULUS_STR: &str =
    "21888242871839275222246405745257275088548364400416034343698204186575808495617";

/// -p^{-1} mod 2^64
const INV: u64 = 0xc2e1f593efffffff;

/// 2^256 mod p
const R: [u64; 4] = [
    0xac96341c4ffffffb,
    0x36fc76959f60cd29,
    0x666ea36f7879462e,
    0x0e0a77c19a07df2f,
];

/// 2^512 mod p
const R2: [u64; 4] = [
    0x1bb8e645ae216da7,
    0x53fe3ab1e35c59e3,
    0x8c49833d53bb8085,
    0x0216d0b17f4e44a5,
];

/// Number of bytes in the canonical encoding.
pub const ENCODED_LEN: usize = 32;

#[inline(always)]
const fn mac(a: u64, b: u64, c: u64, carry: u64) -> (u64, u64) {
    let t = (a as u128) + (b as u128) * (c as u128) + (carry as u128);
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
const fn adc(a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = (a as u128) + (b as u128) + (carry as u128);
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
const fn sbb(a: u64, b: u64, borrow: u64) -> (u64, u64) {
    let t = (a as u128).wrapping_sub((b as u128) + ((borrow >> 63) as u128));
    (t as u64, (t >> 64) as u64)
}

/// An element of the prime field.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fe([u64; 4]);

impl Fe {
    pub const ZERO: Fe = Fe([0; 4]);
    pub const ONE: Fe = Fe(R);

    /// Builds an element from canonical little-endian limbs, rejecting values `>= p`.
    pub fn from_canonical_limbs(limbs: [u64; 4]) -> Option<Fe> {
        if !lt_modulus(&limbs) {
            return None;
        }
        Some(Fe(limbs).mont_mul(&Fe(R2)))
    }

    /// Reduces an arbitrary 256-bit little-endian integer modulo p.
    pub fn from_limbs_reduced(mut limbs: [u64; 4]) -> Fe {
        // 2^256 < 6p, so a handful of subtractions suffices.
        while !lt_modulus(&limbs) {
            limbs = sub_modulus(&limbs);
        }
        Fe(limbs).mont_mul(&Fe(R2))
    }

    pub fn from_u64(v: u64) -> Fe {
        Fe([v, 0, 0, 0]).mont_mul(&Fe(R2))
    }

    /// Maps `n >= 0` to `n` and `n < 0` to `p - |n|`.
    pub fn from_i64(n: i64) -> Fe {
        let mag = Fe::from_u64(n.unsigned_abs());
        if n < 0 {
            -mag
        } else {
            mag
        }
    }

    /// Same convention as [`Fe::from_i64`] for 128-bit inputs.
    pub fn from_i128(n: i128) -> Fe {
        let mag = n.unsigned_abs();
        let v = Fe([mag as u64, (mag >> 64) as u64, 0, 0]).mont_mul(&Fe(R2));
        if n < 0 {
            -v
        } else {
            v
        }
    }

    /// The canonical representative as little-endian limbs.
    pub fn to_canonical_limbs(&self) -> [u64; 4] {
        self.mont_reduce_only().0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 4]
    }

    /// Interprets the value as a small signed integer: values in `[0, 2^63)`
    /// come back positive, values in `(p - 2^63, p)` negative. Anything else
    /// returns `None`.
    pub fn to_i64(&self) -> Option<i64> {
        let c = self.to_canonical_limbs();
        if c[1] == 0 && c[2] == 0 && c[3] == 0 && c[0] < (1u64 << 63) {
            return Some(c[0] as i64);
        }
        let n = (-*self).to_canonical_limbs();
        if n[1] == 0 && n[2] == 0 && n[3] == 0 && n[0] <= (1u64 << 63) {
            return Some((n[0] as i64).wrapping_neg());
        }
        None
    }

    /// Returns the value when it fits in a `u64`.
    pub fn to_u64(&self) -> Option<u64> {
        let c = self.to_canonical_limbs();
        (c[1] == 0 && c[2] == 0 && c[3] == 0).then_some(c[0])
    }

    pub fn double(&self) -> Fe {
        *self + *self
    }

    pub fn square(&self) -> Fe {
        self.mont_mul(self)
    }

    pub fn pow(&self, exp: &[u64; 4]) -> Fe {
        let mut acc = Fe::ONE;
        for limb in exp.iter().rev() {
            for i in (0..64).rev() {
                acc = acc.square();
                if (limb >> i) & 1 == 1 {
                    acc = acc.mont_mul(self);
                }
            }
        }
        acc
    }

    pub fn pow_u64(&self, exp: u64) -> Fe {
        let mut acc = Fe::ONE;
        for i in (0..64 - exp.leading_zeros()).rev() {
            acc = acc.square();
            if (exp >> i) & 1 == 1 {
                acc = acc.mont_mul(self);
            }
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn invert(&self) -> Result<Fe, FieldError> {
        if self.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        let exp = sub_small(&MODULUS, 2);
        Ok(self.pow(&exp))
    }

    /// Canonical 32-byte little-endian encoding.
    pub fn to_bytes(&self) -> [u8; ENCODED_LEN] {
        let limbs = self.to_canonical_limbs();
        let mut out = [0u8; ENCODED_LEN];
        for (i, l) in limbs.iter().enumerate() {
            out[i * 8..(i + 1) * 8].copy_from_slice(&l.to_le_bytes());
        }
        out
    }

    /// Decodes the canonical encoding; values `>= p` are rejected.
    pub fn from_bytes(bytes: &[u8; ENCODED_LEN]) -> Result<Fe, FieldError> {
        let mut limbs = [0u64; 4];
        for (i, l) in limbs.iter_mut().enumerate() {
            *l = u64::from_le_bytes(bytes[i * 8..(i + 1) * 8].try_into().unwrap());
        }
        Fe::from_canonical_limbs(limbs).ok_or(FieldError::NonCanonical)
    }

    /// Big-endian hex of the canonical value, 64 characters.
    pub fn to_hex(&self) -> String {
        let mut be = self.to_bytes();
        be.reverse();
        hex::encode(be)
    }

    /// Parses the form produced by [`Fe::to_hex`] (an optional `0x` prefix is accepted).
    pub fn from_hex(s: &str) -> Result<Fe, FieldError> {
        let s = s.trim();
        let s = s.strip_prefix("0x").unwrap_or(s);
        if s.is_empty() || s.len() > 64 {
            return Err(FieldError::BadHex);
        }
        let padded = format!("{s:0>64}");
        let mut be = [0u8; 32];
        hex::decode_to_slice(&padded, &mut be).map_err(|_| FieldError::BadHex)?;
        be.reverse();
        Fe::from_bytes(&be)
    }

    #[inline]
    fn mont_mul(&self, rhs: &Fe) -> Fe {
        let a = &self.0;
        let b = &rhs.0;
        let (t0, c) = mac(0, a[0], b[0], 0);
        let (t1, c) = mac(0, a[0], b[1], c);
        let (t2, c) = mac(0, a[0], b[2], c);
        let (t3, t4) = mac(0, a[0], b[3], c);

        let (t1, c) = mac(t1, a[1], b[0], 0);
        let (t2, c) = mac(t2, a[1], b[1], c);
        let (t3, c) = mac(t3, a[1], b[2], c);
        let (t4, t5) = mac(t4, a[1], b[3], c);

        let (t2, c) = mac(t2, a[2], b[0], 0);
        let (t3, c) = mac(t3, a[2], b[1], c);
        let (t4, c) = mac(t4, a[2], b[2], c);
        let (t5, t6) = mac(t5, a[2], b[3], c);

        let (t3, c) = mac(t3, a[3], b[0], 0);
        let (t4, c) = mac(t4, a[3], b[1], c);
        let (t5, c) = mac(t5, a[3], b[2], c);
        let (t6, t7) = mac(t6, a[3], b[3], c);

        montgomery_reduce(t0, t1, t2, t3, t4, t5, t6, t7)
    }

    fn mont_reduce_only(&self) -> Fe {
        let a = &self.0;
        montgomery_reduce(a[0], a[1], a[2], a[3], 0, 0, 0, 0)
    }
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn montgomery_reduce(
    r0: u64,
    r1: u64,
    r2: u64,
    r3: u64,
    r4: u64,
    r5: u64,
    r6: u64,
    r7: u64,
) -> Fe {
    let k = r0.wrapping_mul(INV);
    let (_, c) = mac(r0, k, MODULUS[0], 0);
    let (r1, c) = mac(r1, k, MODULUS[1], c);
    let (r2, c) = mac(r2, k, MODULUS[2], c);
    let (r3, c) = mac(r3, k, MODULUS[3], c);
    let (r4, c2) = adc(r4, 0, c);

    let k = r1.wrapping_mul(INV);
    let (_, c) = mac(r1, k, MODULUS[0], 0);
    let (r2, c) = mac(r2, k, MODULUS[1], c);
    let (r3, c) = mac(r3, k, MODULUS[2], c);
    let (r4, c) = mac(r4, k, MODULUS[3], c);
    let (r5, c2) = adc(r5, c2, c);

    let k = r2.wrapping_mul(INV);
    let (_, c) = mac(r2, k, MODULUS[0], 0);
    let (r3, c) = mac(r3, k, MODULUS[1], c);
    let (r4, c) = mac(r4, k, MODULUS[2], c);
    let (r5, c) = mac(r5, k, MODULUS[3], c);
    let (r6, c2) = adc(r6, c2, c);

    let k = r3.wrapping_mul(INV);
    let (_, c) = mac(r3, k, MODULUS[0], 0);
    let (r4, c) = mac(r4, k, MODULUS[1], c);
    let (r5, c) = mac(r5, k, MODULUS[2], c);
    let (r6, c) = mac(r6, k, MODULUS[3], c);
    let (r7, _) = adc(r7, c2, c);

    Fe(reduce_once([r4, r5, r6, r7]))
}

/// Subtracts p when the input is in `[p, 2p)`.
#[inline(always)]
fn reduce_once(v: [u64; 4]) -> [u64; 4] {
    let (d0, b) = sbb(v[0], MODULUS[0], 0);
    let (d1, b) = sbb(v[1], MODULUS[1], b);
    let (d2, b) = sbb(v[2], MODULUS[2], b);
    let (d3, b) = sbb(v[3], MODULUS[3], b);
    if b >> 63 == 1 {
        v
    } else {
        [d0, d1, d2, d3]
    }
}

fn lt_modulus(v: &[u64; 4]) -> bool {
    for i in (0..4).rev() {
        if v[i] != MODULUS[i] {
            return v[i] < MODULUS[i];
        }
    }
    false
}

fn sub_modulus(v: &[u64; 4]) -> [u64; 4] {
    let (d0, b) = sbb(v[0], MODULUS[0], 0);
    let (d1, b) = sbb(v[1], MODULUS[1], b);
    let (d2, b) = sbb(v[2], MODULUS[2], b);
    let (d3, _) = sbb(v[3], MODULUS[3], b);
    [d0, d1, d2, d3]
}

fn sub_small(v: &[u64; 4], s: u64) -> [u64; 4] {
    let (d0, b) = sbb(v[0], s, 0);
    let (d1, b) = sbb(v[1], 0, b);
    let (d2, b) = sbb(v[2], 0, b);
    let (d3, _) = sbb(v[3], 0, b);
    [d0, d1, d2, d3]
}

impl Add for Fe {
    type Output = Fe;
    #[inline]
    fn add(self, rhs: Fe) -> Fe {
        let (d0, c) = adc(self.0[0], rhs.0[0], 0);
        let (d1, c) = adc(self.0[1], rhs.0[1], c);
        let (d2, c) = adc(self.0[2], rhs.0[2], c);
        let (d3, _) = adc(self.0[3], rhs.0[3], c);
        // Both operands are < p < 2^254, so the sum never overflows 256 bits.
        Fe(reduce_once([d0, d1, d2, d3]))
    }
}

impl Sub for Fe {
    type Output = Fe;
    #[inline]
    fn sub(self, rhs: Fe) -> Fe {
        let (d0, b) = sbb(self.0[0], rhs.0[0], 0);
        let (d1, b) = sbb(self.0[1], rhs.0[1], b);
        let (d2, b) = sbb(self.0[2], rhs.0[2], b);
        let (d3, b) = sbb(self.0[3], rhs.0[3], b);
        let mask = b; // all ones on underflow
        let (d0, c) = adc(d0, MODULUS[0] & mask, 0);
        let (d1, c) = adc(d1, MODULUS[1] & mask, c);
        let (d2, c) = adc(d2, MODULUS[2] & mask, c);
        let (d3, _) = adc(d3, MODULUS[3] & mask, c);
        Fe([d0, d1, d2, d3])
    }
}

impl Neg for Fe {
    type Output = Fe;
    #[inline]
    fn neg(self) -> Fe {
        Fe::ZERO - self
    }
}

impl Mul for Fe {
    type Output = Fe;
    #[inline]
    fn mul(self, rhs: Fe) -> Fe {
        self.mont_mul(&rhs)
    }
}

impl AddAssign for Fe {
    fn add_assign(&mut self, rhs: Fe) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fe {
    fn sub_assign(&mut self, rhs: Fe) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fe {
    fn mul_assign(&mut self, rhs: Fe) {
        *self = *self * rhs;
    }
}

impl Sum for Fe {
    fn sum<I: Iterator<Item = Fe>>(iter: I) -> Fe {
        iter.fold(Fe::ZERO, |a, b| a + b)
    }
}

impl Product for Fe {
    fn product<I: Iterator<Item = Fe>>(iter: I) -> Fe {
        iter.fold(Fe::ONE, |a, b| a * b)
    }
}

impl From<u64> for Fe {
    fn from(v: u64) -> Fe {
        Fe::from_u64(v)
    }
}

impl From<i64> for Fe {
    fn from(v: i64) -> Fe {
        Fe::from_i64(v)
    }
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_i64() {
            Some(v) if v.unsigned_abs() < (1 << 32) => write!(f, "Fe({v})"),
            _ => write!(f, "Fe(0x{})", self.to_hex()),
        }
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

impl Serialize for Fe {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Fe {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Fe, D::Error> {
        let s = String::deserialize(d)?;
        Fe::from_hex(&s).map_err(serde::de::Error::custom)
    }
}
