//! Signed tropical numbers and tropical polynomials.
//!
//! [`ExtReal`] is the tropical semifield `ℚ ∪ {−∞}` ordered as usual, with
//! tropical multiplication written as `+`. [`SignedTrop`] adds a formal sign
//! and is the image of the signed valuation on Puiseux series. Tropical
//! addition is only defined between numbers of the same sign; the mixed case
//! is captured by the vanishing semantics of [`TropPolynomial::eval_signed`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, Rational};

/// An element of `ℚ ∪ {−∞}`.
///
/// The derived order puts `NegInf` below every finite value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtReal {
    NegInf,
    Finite(Rational),
}

impl ExtReal {
    pub fn zero() -> Self {
        ExtReal::Finite(Rational::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtReal::Finite(q) => Some(q),
            ExtReal::NegInf => None,
        }
    }

    /// `½·x`, with `½·(−∞) = −∞`.
    pub fn half(&self) -> Self {
        match self {
            ExtReal::Finite(q) => ExtReal::Finite(q / BigInt::from(2)),
            ExtReal::NegInf => ExtReal::NegInf,
        }
    }

    /// `x^{⊙k}`, i.e. `k·x`. `x^{⊙0}` is the tropical unit `0` even for `x = −∞`.
    pub fn pow(&self, k: u32) -> Self {
        if k == 0 {
            return ExtReal::zero();
        }
        match self {
            ExtReal::Finite(q) => ExtReal::Finite(q * BigInt::from(k)),
            ExtReal::NegInf => ExtReal::NegInf,
        }
    }

    pub fn shifted(&self, q: &Rational) -> Self {
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x + q),
            ExtReal::NegInf => ExtReal::NegInf,
        }
    }

    pub fn max_of<'a>(items: impl IntoIterator<Item = &'a ExtReal>) -> ExtReal {
        items.into_iter().fold(ExtReal::NegInf, |acc, x| if *x > acc { x.clone() } else { acc })
    }
}

impl From<Rational> for ExtReal {
    fn from(q: Rational) -> Self {
        ExtReal::Finite(q)
    }
}

impl From<i64> for ExtReal {
    fn from(v: i64) -> Self {
        ExtReal::Finite(Rational::from_integer(BigInt::from(v)))
    }
}

impl Add for &ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: &ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::NegInf,
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        &self + &rhs
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Finite(q) => f.write_str(&format_rational(q)),
        }
    }
}

impl std::str::FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-inf" | "-∞" => Ok(ExtReal::NegInf),
            other => parse_rational(other).map(ExtReal::Finite),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        match (self, rhs) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

/// A signed tropical number: `a` (positive), `⊖a` (negative) or `−∞`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SignedTrop {
    NegInf,
    Pos(Rational),
    Neg(Rational),
}

impl SignedTrop {
    pub fn new(sign: Sign, modulus: ExtReal) -> Result<Self> {
        match (sign, modulus) {
            (Sign::Zero, ExtReal::NegInf) => Ok(SignedTrop::NegInf),
            (Sign::Positive, ExtReal::Finite(q)) => Ok(SignedTrop::Pos(q)),
            (Sign::Negative, ExtReal::Finite(q)) => Ok(SignedTrop::Neg(q)),
            (sign, modulus) => Err(Error::validation(format!(
                "sign {sign:?} is incompatible with modulus {modulus}"
            ))),
        }
    }

    pub fn sign(&self) -> Sign {
        match self {
            SignedTrop::NegInf => Sign::Zero,
            SignedTrop::Pos(_) => Sign::Positive,
            SignedTrop::Neg(_) => Sign::Negative,
        }
    }

    pub fn modulus(&self) -> ExtReal {
        match self {
            SignedTrop::NegInf => ExtReal::NegInf,
            SignedTrop::Pos(q) | SignedTrop::Neg(q) => ExtReal::Finite(q.clone()),
        }
    }

    pub fn modulus_ref(&self) -> Option<&Rational> {
        match self {
            SignedTrop::NegInf => None,
            SignedTrop::Pos(q) | SignedTrop::Neg(q) => Some(q),
        }
    }

    pub fn is_positive(&self) -> bool {
        matches!(self, SignedTrop::Pos(_))
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, SignedTrop::Neg(_))
    }

    pub fn is_neg_inf(&self) -> bool {
        matches!(self, SignedTrop::NegInf)
    }

    /// Lifts an unsigned tropical number to the positive part of `𝕊`.
    pub fn positive(x: ExtReal) -> Self {
        match x {
            ExtReal::NegInf => SignedTrop::NegInf,
            ExtReal::Finite(q) => SignedTrop::Pos(q),
        }
    }

    /// `a ⊙ b`: moduli add, signs multiply, `−∞` absorbs.
    pub fn mul(&self, other: &SignedTrop) -> SignedTrop {
        let modulus = &self.modulus() + &other.modulus();
        SignedTrop::new(self.sign() * other.sign(), modulus).expect("sign and modulus agree")
    }

    /// Same-sign tropical addition; `None` when the signs differ.
    pub fn try_add(&self, other: &SignedTrop) -> Option<SignedTrop> {
        match (self, other) {
            (SignedTrop::NegInf, x) | (x, SignedTrop::NegInf) => Some(x.clone()),
            (SignedTrop::Pos(a), SignedTrop::Pos(b)) => Some(SignedTrop::Pos(a.max(b).clone())),
            (SignedTrop::Neg(a), SignedTrop::Neg(b)) => Some(SignedTrop::Neg(a.max(b).clone())),
            _ => None,
        }
    }
}

impl Neg for &SignedTrop {
    type Output = SignedTrop;

    /// The formal `⊖`.
    fn neg(self) -> SignedTrop {
        match self {
            SignedTrop::NegInf => SignedTrop::NegInf,
            SignedTrop::Pos(q) => SignedTrop::Neg(q.clone()),
            SignedTrop::Neg(q) => SignedTrop::Pos(q.clone()),
        }
    }
}

impl fmt::Display for SignedTrop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignedTrop::NegInf => f.write_str("-inf"),
            SignedTrop::Pos(q) => f.write_str(&format_rational(q)),
            SignedTrop::Neg(q) => write!(f, "⊖{}", format_rational(q)),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SignedTropRepr {
    Tagged { sign: String, val: String },
    Bottom(String),
}

impl Serialize for SignedTrop {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            SignedTrop::NegInf => SignedTropRepr::Bottom("-inf".into()),
            SignedTrop::Pos(q) => SignedTropRepr::Tagged { sign: "+".into(), val: format_rational(q) },
            SignedTrop::Neg(q) => SignedTropRepr::Tagged { sign: "-".into(), val: format_rational(q) },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignedTrop {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match SignedTropRepr::deserialize(d)? {
            SignedTropRepr::Bottom(s) if s == "-inf" => Ok(SignedTrop::NegInf),
            SignedTropRepr::Bottom(s) => Err(D::Error::custom(format!("expected \"-inf\", got {s:?}"))),
            SignedTropRepr::Tagged { sign, val } => {
                let q = parse_rational(&val).map_err(D::Error::custom)?;
                parse_sign(&sign)
                    .and_then(|sg| SignedTrop::new(sg, ExtReal::Finite(q)))
                    .map_err(D::Error::custom)
            }
        }
    }
}

pub(crate) fn parse_sign(s: &str) -> Result<Sign> {
    match s {
        "+" => Ok(Sign::Positive),
        "-" => Ok(Sign::Negative),
        other => Err(Error::validation(format!("sign must be \"+\" or \"-\", got {other:?}"))),
    }
}

/// Value of a signed tropical polynomial at a signed point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evaluation {
    Value(SignedTrop),
    Vanishes,
}

/// `⊕_α a_α ⊙ X^{⊙α}` with exponent vectors of fixed arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TropPolynomial {
    arity: usize,
    terms: BTreeMap<Vec<u32>, SignedTrop>,
}

impl TropPolynomial {
    pub fn new(arity: usize) -> Self {
        Self { arity, terms: BTreeMap::new() }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &SignedTrop)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    /// Adds `coeff ⊙ X^{⊙exponent}`. A repeated monomial is merged with `⊕`,
    /// which is only defined for coefficients of the same sign.
    pub fn add_term(&mut self, exponent: Vec<u32>, coeff: SignedTrop) -> Result<()> {
        if exponent.len() != self.arity {
            return Err(Error::validation(format!(
                "exponent of arity {} in a polynomial of arity {}",
                exponent.len(),
                self.arity
            )));
        }
        if coeff.is_neg_inf() {
            return Err(Error::validation("coefficients must differ from -inf"));
        }
        let merged = match self.terms.get(&exponent) {
            Some(old) => old.try_add(&coeff).ok_or_else(|| {
                Error::validation("cannot add tropical coefficients of opposite signs")
            })?,
            None => coeff,
        };
        self.terms.insert(exponent, merged);
        Ok(())
    }

    pub fn with_term(mut self, exponent: Vec<u32>, coeff: SignedTrop) -> Result<Self> {
        self.add_term(exponent, coeff)?;
        Ok(self)
    }

    fn monomial(exponent: &[u32], x: &[ExtReal]) -> ExtReal {
        exponent
            .iter()
            .zip(x)
            .fold(ExtReal::zero(), |acc, (&a, xi)| &acc + &xi.pow(a))
    }

    fn eval_part(&self, x: &[ExtReal], keep: impl Fn(&SignedTrop) -> bool) -> ExtReal {
        assert_eq!(x.len(), self.arity, "point has wrong dimension");
        self.terms
            .iter()
            .filter(|(_, c)| keep(c))
            .map(|(e, c)| &c.modulus() + &Self::monomial(e, x))
            .max()
            .unwrap_or(ExtReal::NegInf)
    }

    /// `P⁺(x)`: max over positive coefficients of `|a_α| + ⟨α, x⟩`.
    pub fn eval_pos(&self, x: &[ExtReal]) -> ExtReal {
        self.eval_part(x, SignedTrop::is_positive)
    }

    /// `P⁻(x)`: the same over negative coefficients.
    pub fn eval_neg(&self, x: &[ExtReal]) -> ExtReal {
        self.eval_part(x, SignedTrop::is_negative)
    }

    /// Signed evaluation: the polynomial vanishes when the terms of largest
    /// modulus disagree in sign.
    pub fn eval_signed(&self, x: &[SignedTrop]) -> Evaluation {
        assert_eq!(x.len(), self.arity, "point has wrong dimension");
        let mut best = SignedTrop::NegInf;
        let mut conflict = false;
        for (exponent, coeff) in &self.terms {
            let term = exponent
                .iter()
                .zip(x)
                .filter(|(&a, _)| a > 0)
                .fold(coeff.clone(), |acc, (&a, xi)| {
                    (0..a).fold(acc, |acc, _| acc.mul(xi))
                });
            if term.is_neg_inf() {
                continue;
            }
            match term.modulus().cmp(&best.modulus()) {
                Ordering::Greater => {
                    best = term;
                    conflict = false;
                }
                Ordering::Equal => {
                    if term.sign() != best.sign() {
                        conflict = true;
                    }
                }
                Ordering::Less => {}
            }
        }
        if conflict {
            Evaluation::Vanishes
        } else {
            Evaluation::Value(best)
        }
    }
}

/// `a ⊙ b` on signed tropical numbers.
pub fn strop_mul(a: &SignedTrop, b: &SignedTrop) -> SignedTrop {
    a.mul(b)
}
