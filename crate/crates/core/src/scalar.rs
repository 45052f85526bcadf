//! Number types the Shapley operator can be evaluated over.
//!
//! `f64` is the fast path used by value iteration; [`ExtReal`] is exact and
//! is what every certificate check runs on. Both encode `−∞` natively.

use std::fmt::Debug;

use num_bigint::BigInt;

use crate::rational::{from_f64, to_f64, Rational};
use crate::tropical::ExtReal;

pub trait Scalar: Clone + PartialOrd + Debug + Send + Sync {
    fn neg_inf() -> Self;
    fn zero() -> Self;
    fn from_rational(q: &Rational) -> Self;
    /// `num / den` for a grid-valued modulus.
    fn from_grid(num: u64, den: u64) -> Self;
    fn is_neg_inf(&self) -> bool;
    /// Tropical product, i.e. ordinary sum with `−∞` absorbing.
    fn plus(&self, other: &Self) -> Self;
    fn half(&self) -> Self;
    fn negated(&self) -> Self;
    /// Exact rational image; `f64` values are dyadic so this never rounds.
    fn to_ext(&self) -> ExtReal;

    fn max_with(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_with(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn neg_inf() -> Self {
        f64::NEG_INFINITY
    }

    fn zero() -> Self {
        0.0
    }

    fn from_rational(q: &Rational) -> Self {
        to_f64(q)
    }

    fn from_grid(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn is_neg_inf(&self) -> bool {
        *self == f64::NEG_INFINITY
    }

    fn plus(&self, other: &Self) -> Self {
        self + other
    }

    fn half(&self) -> Self {
        0.5 * self
    }

    fn negated(&self) -> Self {
        -self
    }

    fn to_ext(&self) -> ExtReal {
        from_f64(*self).map(ExtReal::Finite).unwrap_or(ExtReal::NegInf)
    }
}

impl Scalar for ExtReal {
    fn neg_inf() -> Self {
        ExtReal::NegInf
    }

    fn zero() -> Self {
        ExtReal::zero()
    }

    fn from_rational(q: &Rational) -> Self {
        ExtReal::Finite(q.clone())
    }

    fn from_grid(num: u64, den: u64) -> Self {
        ExtReal::Finite(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn is_neg_inf(&self) -> bool {
        matches!(self, ExtReal::NegInf)
    }

    fn plus(&self, other: &Self) -> Self {
        self + other
    }

    fn half(&self) -> Self {
        ExtReal::half(self)
    }

    fn negated(&self) -> Self {
        match self {
            ExtReal::Finite(q) => ExtReal::Finite(-q),
            ExtReal::NegInf => panic!("cannot negate -inf"),
        }
    }

    fn to_ext(&self) -> ExtReal {
        self.clone()
    }
}
