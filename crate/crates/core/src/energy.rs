//! Arbitrary-precision energy values with an inline fast path.
//!
//! Belief values stay well inside `i64` for every realistic tree, but a branch
//! is not bounded a priori, so arithmetic spills into a heap [`BigInt`] on
//! overflow. The big variant only ever holds values outside the `i64` range,
//! which keeps equality, hashing and ordering structural.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Energy {
    Small(i64),
    Big(Box<BigInt>),
}

impl Energy {
    pub const ZERO: Energy = Energy::Small(0);

    pub fn from_bigint(v: BigInt) -> Self {
        match v.to_i64() {
            Some(s) => Energy::Small(s),
            None => Energy::Big(Box::new(v)),
        }
    }

    pub fn to_bigint(&self) -> BigInt {
        match self {
            Energy::Small(v) => BigInt::from(*v),
            Energy::Big(v) => (**v).clone(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Energy::Small(v) => *v < 0,
            Energy::Big(v) => v.is_negative(),
        }
    }

    pub fn add_weight(&self, w: i64) -> Energy {
        match self {
            Energy::Small(v) => match v.checked_add(w) {
                Some(s) => Energy::Small(s),
                None => Energy::from_bigint(BigInt::from(*v) + w),
            },
            Energy::Big(v) => Energy::from_bigint(&**v + w),
        }
    }

    pub fn add(&self, other: &Energy) -> Energy {
        match (self, other) {
            (Energy::Small(a), Energy::Small(b)) => match a.checked_add(*b) {
                Some(s) => Energy::Small(s),
                None => Energy::from_bigint(BigInt::from(*a) + b),
            },
            _ => Energy::from_bigint(self.to_bigint() + other.to_bigint()),
        }
    }

    /// Absolute value as a natural, used by the vector encoding.
    pub fn magnitude(&self) -> num_bigint::BigUint {
        self.to_bigint().magnitude().clone()
    }
}

impl From<i64> for Energy {
    fn from(v: i64) -> Self {
        Energy::Small(v)
    }
}

impl From<u64> for Energy {
    fn from(v: u64) -> Self {
        Energy::from_bigint(BigInt::from(v))
    }
}

impl From<BigInt> for Energy {
    fn from(v: BigInt) -> Self {
        Energy::from_bigint(v)
    }
}

impl Default for Energy {
    fn default() -> Self {
        Energy::ZERO
    }
}

impl Ord for Energy {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Energy::Small(a), Energy::Small(b)) => a.cmp(b),
            // a big value is outside the i64 range, so its sign decides
            (Energy::Small(_), Energy::Big(b)) => {
                if b.is_positive() {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
            (Energy::Big(a), Energy::Small(_)) => {
                if a.is_positive() {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
            (Energy::Big(a), Energy::Big(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Energy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Energy::Small(v) => write!(f, "{v}"),
            Energy::Big(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Debug for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Zero for Energy {
    fn zero() -> Self {
        Energy::ZERO
    }
    fn is_zero(&self) -> bool {
        matches!(self, Energy::Small(0))
    }
}

impl std::ops::Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy::add(&self, &rhs)
    }
}
