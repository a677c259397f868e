//! Arithmetic over GF(2^8).
//!
//! Elements are bytes read as polynomials over GF(2) of degree < 8, reduced
//! modulo x^8 + x^4 + x^3 + x^2 + 1 (`0x11D`). Addition is XOR. Multiplication
//! goes through log/antilog tables generated from the primitive element `0x02`.
//!
//! Both ends of a coded session must agree on the reduction polynomial, since
//! coefficients travel on the wire as raw bytes.
//!
//! [`axpy`] is the only bulk primitive. Encoder and decoder inner loops go
//! through it rather than calling [`mul`] per byte.

use std::fmt;
use std::ops::{Add, AddAssign, Mul};

use thiserror::Error;

/// Full reduction polynomial, including the x^8 term.
pub const POLY: u16 = 0x11D;

const GENERATOR: u8 = 0x02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// One GF(256) symbol.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn inv(self) -> Result<Gf256, FieldError> {
        inv(self.0).map(Gf256)
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf256 {
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    fn mul(self, rhs: Gf256) -> Gf256 {
        Gf256(mul(self.0, rhs.0))
    }
}

struct Tables {
    log: [u8; 256],
    // Doubled so that exp[log a + log b] needs no reduction mod 255.
    exp: [u8; 512],
}

const fn build_tables() -> Tables {
    let mut log = [0u8; 256];
    let mut exp = [0u8; 512];
    let mut x: u16 = 1;
    let mut i = 0usize;
    while i < 255 {
        exp[i] = x as u8;
        exp[i + 255] = x as u8;
        log[x as usize] = i as u8;
        // multiply by the generator (x) and reduce
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLY;
        }
        i += 1;
    }
    exp[510] = exp[0];
    exp[511] = exp[1];
    Tables { log, exp }
}

static TABLES: Tables = build_tables();

// The table builder steps by multiplying by x, so the generator is fixed to 0x02.
const _: () = assert!(GENERATOR == 0x02);

#[inline]
pub fn add(a: u8, b: u8) -> u8 {
    a ^ b
}

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    let t = &TABLES;
    t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize]
}

pub fn inv(a: u8) -> Result<u8, FieldError> {
    if a == 0 {
        return Err(FieldError::ZeroInverse);
    }
    let t = &TABLES;
    Ok(t.exp[255 - t.log[a as usize] as usize])
}

/// `dst[i] += coeff * src[i]` for every `i`.
///
/// Panics if the slices differ in length.
pub fn axpy(dst: &mut [u8], src: &[u8], coeff: Gf256) {
    assert_eq!(
        dst.len(),
        src.len(),
        "axpy length mismatch: dst {} vs src {}",
        dst.len(),
        src.len()
    );
    match coeff.0 {
        0 => {}
        1 => {
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= *s;
            }
        }
        c => {
            let t = &TABLES;
            let log_c = t.log[c as usize] as usize;
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d ^= t.exp[log_c + t.log[s as usize] as usize];
                }
            }
        }
    }
}

/// `axpy` over a prefix: `dst[..src.len()] += coeff * src`, growing `dst`
/// with zeros first if it is shorter. Coded payloads of different lengths
/// are implicitly zero-extended, so this is exact.
pub fn axpy_extend(dst: &mut Vec<u8>, src: &[u8], coeff: Gf256) {
    if coeff.is_zero() {
        return;
    }
    if dst.len() < src.len() {
        dst.resize(src.len(), 0);
    }
    axpy(&mut dst[..src.len()], src, coeff);
}

/// Returns `coeff * src` as a fresh vector.
pub fn scaled(src: &[u8], coeff: Gf256) -> Vec<u8> {
    let mut out = vec![0u8; src.len()];
    axpy(&mut out, src, coeff);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    // Shift-and-add multiply with reduction after every step.
    fn slow_mul(mut a: u8, mut b: u8) -> u8 {
        let mut acc = 0u8;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            let carry = a & 0x80 != 0;
            a <<= 1;
            if carry {
                a ^= (POLY & 0xFF) as u8;
            }
            b >>= 1;
        }
        acc
    }

    #[test]
    fn add_examples() {
        assert_eq!(add(0x00, 0x5A), 0x5A);
        assert_eq!(add(0x5A, 0x5A), 0x00);
        assert_eq!(add(0x02, 0x03), 0x01);
    }

    #[test]
    fn mul_examples() {
        assert_eq!(mul(0x01, 0xC7), 0xC7);
        assert_eq!(mul(0x02, 0x03), 0x06);
        assert_eq!(slow_mul(0x80, 0x02), 0x1D);
        assert_eq!(mul(0x80, 0x02), 0x1D);
        assert_eq!(mul(0x33, 0x00), 0x00);
    }

    #[test]
    fn inv_examples() {
        assert_eq!(inv(0x01), Ok(0x01));
        assert_eq!(inv(0x02), Ok(0x8E));
        assert_eq!(inv(0x00), Err(FieldError::ZeroInverse));
        assert_eq!(Gf256(0).inv(), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn table_mul_matches_shift_and_add() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(mul(a, b), slow_mul(a, b), "{a:#x} * {b:#x}");
            }
        }
    }

    #[test]
    fn axpy_examples() {
        let mut d = [0u8, 0];
        axpy(&mut d, &[7, 9], Gf256::ONE);
        assert_eq!(d, [7, 9]);

        let mut d = [3u8, 4, 5];
        axpy(&mut d, &[1, 2, 3], Gf256::ZERO);
        assert_eq!(d, [3, 4, 5]);

        let mut d = [0x06u8];
        axpy(&mut d, &[0x03], Gf256(0x02));
        assert_eq!(d, [0x00]);
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn axpy_rejects_length_mismatch() {
        let mut d = [0u8; 2];
        axpy(&mut d, &[1, 2, 3], Gf256(5));
    }

    #[test]
    fn axpy_extend_zero_extends() {
        let mut d = vec![1u8];
        axpy_extend(&mut d, &[1, 2, 3], Gf256(2));
        assert_eq!(d, vec![1 ^ 2, 4, 6]);
        let mut d = vec![1u8, 2, 3];
        axpy_extend(&mut d, &[1], Gf256::ONE);
        assert_eq!(d, vec![0, 2, 3]);
    }

    #[test]
    fn ops_traits_agree_with_free_functions() {
        let a = Gf256(0x53);
        let b = Gf256(0xCA);
        assert_eq!((a * b).0, mul(0x53, 0xCA));
        assert_eq!((a + b).0, 0x53 ^ 0xCA);
        let mut c = a;
        c += b;
        assert_eq!(c, a + b);
        // 0x53 and 0xCA are inverses under the AES polynomial, not this one.
        assert_ne!(a * b, Gf256::ONE);
    }
}
