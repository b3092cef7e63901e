//! Arbitrary-precision natural numbers with an inline fast path.
//!
//! Counter machines spend nearly all of their time adding or removing one
//! unit from a counter, so [`Nat`] keeps values that fit in a `u64` unboxed
//! and only promotes to a [`BigUint`] once a value outgrows the machine word.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigUint, ParseBigIntError};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug)]
enum Repr {
    Small(u64),
    Big(BigUint),
}

/// A nonnegative integer of unbounded size.
#[derive(Clone, Debug)]
pub struct Nat(Repr);

impl Nat {
    pub const fn zero() -> Self {
        Nat(Repr::Small(0))
    }

    pub const fn from_u64(v: u64) -> Self {
        Nat(Repr::Small(v))
    }

    fn from_big(b: BigUint) -> Self {
        match b.to_u64() {
            Some(v) => Nat(Repr::Small(v)),
            None => Nat(Repr::Big(b)),
        }
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0))
    }

    #[inline]
    pub fn inc(&mut self) {
        match &mut self.0 {
            Repr::Small(v) => match v.checked_add(1) {
                Some(n) => *v = n,
                None => self.0 = Repr::Big(BigUint::from(*v) + 1u32),
            },
            Repr::Big(b) => *b += 1u32,
        }
    }

    /// Subtract one. Returns `false` (leaving the value at zero) when the
    /// value was already zero.
    #[inline]
    pub fn dec(&mut self) -> bool {
        match &mut self.0 {
            Repr::Small(0) => false,
            Repr::Small(v) => {
                *v -= 1;
                true
            }
            Repr::Big(b) => {
                *b -= 1u32;
                if let Some(v) = b.to_u64() {
                    self.0 = Repr::Small(v);
                }
                true
            }
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        match &self.0 {
            Repr::Small(v) => Some(*v),
            Repr::Big(_) => None,
        }
    }

    pub fn to_u128(&self) -> Option<u128> {
        match &self.0 {
            Repr::Small(v) => Some(*v as u128),
            Repr::Big(b) => b.to_u128(),
        }
    }

    pub fn to_biguint(&self) -> BigUint {
        match &self.0 {
            Repr::Small(v) => BigUint::from(*v),
            Repr::Big(b) => b.clone(),
        }
    }

    /// Number of significant bits; zero has bit-length 0.
    pub fn bits(&self) -> u64 {
        match &self.0 {
            Repr::Small(v) => 64 - u64::from(v.leading_zeros()),
            Repr::Big(b) => b.bits(),
        }
    }

    /// Number of trailing zero bits, `None` for zero.
    pub fn trailing_zeros(&self) -> Option<u64> {
        match &self.0 {
            Repr::Small(0) => None,
            Repr::Small(v) => Some(u64::from(v.trailing_zeros())),
            Repr::Big(b) => b.trailing_zeros(),
        }
    }

    pub fn is_odd(&self) -> bool {
        match &self.0 {
            Repr::Small(v) => v & 1 == 1,
            Repr::Big(b) => b.is_odd(),
        }
    }

    /// `self + times * delta`. Panics if the result would be negative.
    pub fn add_scaled(&self, times: u64, delta: i64) -> Nat {
        if let Repr::Small(v) = self.0 {
            let step = times as i128 * delta as i128;
            let r = v as i128 + step;
            assert!(r >= 0, "counter underflow in scaled update");
            if let Ok(s) = u64::try_from(r) {
                return Nat(Repr::Small(s));
            }
        }
        let base = self.to_biguint();
        let amount = BigUint::from(times) * BigUint::from(delta.unsigned_abs());
        if delta >= 0 {
            Nat::from_big(base + amount)
        } else {
            assert!(base >= amount, "counter underflow in scaled update");
            Nat::from_big(base - amount)
        }
    }

    /// `self + delta` for a small signed offset, or `None` if negative.
    pub fn checked_offset(&self, delta: i64) -> Option<Nat> {
        match &self.0 {
            Repr::Small(v) => {
                let r = *v as i128 + delta as i128;
                if r < 0 {
                    None
                } else if let Ok(s) = u64::try_from(r) {
                    Some(Nat(Repr::Small(s)))
                } else {
                    Some(Nat::from_big(BigUint::from(r as u128)))
                }
            }
            Repr::Big(b) => {
                if delta >= 0 {
                    Some(Nat::from_big(b + delta as u64))
                } else {
                    let d = delta.unsigned_abs();
                    if *b >= BigUint::from(d) {
                        Some(Nat::from_big(b - d))
                    } else {
                        None
                    }
                }
            }
        }
    }

    /// Floor division by a positive machine integer, saturating the quotient
    /// to `u64::MAX`.
    pub fn div_u64_saturating(&self, d: u64) -> u64 {
        assert!(d > 0);
        match &self.0 {
            Repr::Small(v) => v / d,
            Repr::Big(b) => (b / d).to_u64().unwrap_or(u64::MAX),
        }
    }
}

impl Default for Nat {
    fn default() -> Self {
        Nat::zero()
    }
}

impl From<u64> for Nat {
    fn from(v: u64) -> Self {
        Nat::from_u64(v)
    }
}

impl From<u32> for Nat {
    fn from(v: u32) -> Self {
        Nat::from_u64(v.into())
    }
}

impl From<u128> for Nat {
    fn from(v: u128) -> Self {
        Nat::from_big(BigUint::from(v))
    }
}

impl From<BigUint> for Nat {
    fn from(b: BigUint) -> Self {
        Nat::from_big(b)
    }
}

impl From<&Nat> for BigUint {
    fn from(n: &Nat) -> Self {
        n.to_biguint()
    }
}

impl PartialEq for Nat {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Nat {}

impl PartialEq<u64> for Nat {
    fn eq(&self, other: &u64) -> bool {
        self.to_u64() == Some(*other)
    }
}

impl PartialOrd for Nat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Nat {
    fn cmp(&self, other: &Self) -> Ordering {
        // Big is always normalized to values above u64::MAX.
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            (Repr::Small(_), Repr::Big(_)) => Ordering::Less,
            (Repr::Big(_), Repr::Small(_)) => Ordering::Greater,
            (Repr::Big(a), Repr::Big(b)) => a.cmp(b),
        }
    }
}

impl std::hash::Hash for Nat {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(v) => v.hash(state),
            Repr::Big(b) => b.hash(state),
        }
    }
}

impl std::ops::Add for &Nat {
    type Output = Nat;
    fn add(self, rhs: &Nat) -> Nat {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if let Some(s) = a.checked_add(*b) {
                return Nat::from_u64(s);
            }
        }
        Nat::from_big(self.to_biguint() + rhs.to_biguint())
    }
}

impl std::ops::Mul for &Nat {
    type Output = Nat;
    fn mul(self, rhs: &Nat) -> Nat {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if let Some(s) = a.checked_mul(*b) {
                return Nat::from_u64(s);
            }
        }
        Nat::from_big(self.to_biguint() * rhs.to_biguint())
    }
}

impl Zero for Nat {
    fn zero() -> Self {
        Nat::zero()
    }
    fn is_zero(&self) -> bool {
        Nat::is_zero(self)
    }
}

impl std::ops::Add for Nat {
    type Output = Nat;
    fn add(self, rhs: Nat) -> Nat {
        &self + &rhs
    }
}

impl std::ops::Mul for Nat {
    type Output = Nat;
    fn mul(self, rhs: Nat) -> Nat {
        &self * &rhs
    }
}

impl One for Nat {
    fn one() -> Self {
        Nat::from_u64(1)
    }
}

impl fmt::Display for Nat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(v) => write!(f, "{v}"),
            Repr::Big(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for Nat {
    type Err = ParseBigIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(v) = s.parse::<u64>() {
            return Ok(Nat::from_u64(v));
        }
        BigUint::from_str(s).map(Nat::from_big)
    }
}

impl Serialize for Nat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            Repr::Small(v) => serializer.serialize_u64(*v),
            Repr::Big(b) => serializer.collect_str(b),
        }
    }
}

impl<'de> Deserialize<'de> for Nat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.trim().parse().map_err(serde::de::Error::custom)
    }
}
