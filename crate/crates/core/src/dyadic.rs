//! Non-negative dyadic rationals `num / 2^exp` with arbitrary-width numerators.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Clone, Debug)]
pub struct Dyadic {
    num: BigUint,
    exp: u64,
}

impl Dyadic {
    pub fn new(num: impl Into<BigUint>, exp: u64) -> Self {
        Dyadic {
            num: num.into(),
            exp,
        }
    }

    pub fn zero() -> Self {
        Dyadic::new(0u32, 0)
    }

    pub fn one() -> Self {
        Dyadic::new(1u32, 0)
    }

    /// `2^-e`.
    pub fn pow2_neg(e: u64) -> Self {
        Dyadic::new(1u32, e)
    }

    /// Exact value of a finite, non-negative `f64` (every such float is dyadic).
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() || x < 0.0 {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if biased == 0 {
            (frac, -1074i64)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        // value = mant * 2^e
        Some(if e >= 0 {
            Dyadic::new(BigUint::from(mant) << (e as usize), 0)
        } else {
            Dyadic::new(mant, (-e) as u64)
        })
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn exponent(&self) -> u64 {
        self.exp
    }

    /// `self * num / 2^exp`.
    pub fn mul_frac(&self, num: u64, exp: u64) -> Dyadic {
        Dyadic {
            num: &self.num * num,
            exp: self.exp + exp,
        }
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic {
            num: &self.num * &other.num,
            exp: self.exp + other.exp,
        }
    }

    /// Lowest-terms representation.
    pub fn reduced(&self) -> Dyadic {
        if self.num.is_zero() {
            return Dyadic::zero();
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.exp);
        Dyadic {
            num: &self.num >> (tz as usize),
            exp: self.exp - tz,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.num.bits();
        let shift = bits.saturating_sub(64);
        let top = (&self.num >> (shift as usize))
            .to_f64()
            .unwrap_or(f64::INFINITY);
        top * (shift as f64 - self.exp as f64).exp2()
    }

    pub fn to_rational(&self) -> BigRational {
        let den = BigInt::one() << (self.exp as usize);
        BigRational::new(BigInt::from(self.num.clone()), den)
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => self.num.cmp(&other.num),
            Ordering::Less => {
                let lhs = &self.num << ((other.exp - self.exp) as usize);
                lhs.cmp(&other.num)
            }
            Ordering::Greater => {
                let rhs = &other.num << ((self.exp - other.exp) as usize);
                self.num.cmp(&rhs)
            }
        }
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.reduced();
        if r.exp == 0 {
            write!(f, "{}", r.num)
        } else {
            write!(f, "{}/2^{}", r.num, r.exp)
        }
    }
}
