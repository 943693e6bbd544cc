//! Exact arithmetic in the rationals and in real quadratic fields `Q(sqrt(d))`.
//!
//! Every level, weight and root produced by the two-level construction lives in
//! `Q(sqrt(k - lambda))`, so a single-radicand representation is enough. Mixing
//! two different irrational radicands is reported as an error instead of
//! building a field tower.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QfieldError {
    #[error("mixed radicands sqrt({0}) and sqrt({1})")]
    MixedRadicand(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {0} does not fit in a double")]
    Overflow(String),
    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// An exact number `rational + radical * sqrt(radicand)`.
///
/// Canonical form: `radicand` is squarefree, and `radicand == 1` exactly when
/// `radical` is zero. Derived equality is therefore value equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadExt {
    rational: Rational,
    radical: Rational,
    radicand: u64,
}

/// Splits `n` into `(s, f)` with `n = s^2 * f` and `f` squarefree.
pub fn squarefree_split(mut n: u64) -> (u64, u64) {
    if n == 0 {
        return (0, 0);
    }
    let mut root = 1u64;
    let mut free = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        root *= p.pow(e / 2);
        if e % 2 == 1 {
            free *= p;
        }
        p += 1;
    }
    free *= n;
    (root, free)
}

fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

impl QuadExt {
    /// Builds `rational + radical * sqrt(radicand)`, folding square factors of
    /// the radicand into the radical coefficient.
    pub fn new(rational: Rational, radical: Rational, radicand: u64) -> Self {
        let (root, free) = squarefree_split(radicand);
        let radical = radical * Rational::from_integer(BigInt::from(root));
        Self::normalized(rational, radical, free)
    }

    fn normalized(rational: Rational, radical: Rational, radicand: u64) -> Self {
        match radicand {
            0 => Self::from_rational(rational),
            1 => Self::from_rational(rational + radical),
            _ if radical.is_zero() => Self::from_rational(rational),
            _ => QuadExt { rational, radical, radicand },
        }
    }

    pub fn from_rational(rational: Rational) -> Self {
        QuadExt { rational, radical: Rational::zero(), radicand: 1 }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    pub fn from_fraction(n: i64, d: i64) -> Self {
        Self::from_rational(ratio(n, d))
    }

    /// `sqrt(n)` as an exact value.
    pub fn sqrt(n: u64) -> Self {
        Self::new(Rational::zero(), Rational::one(), n)
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rational
    }

    pub fn radical_part(&self) -> &Rational {
        &self.radical
    }

    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.radical.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.rational.is_one() && self.radical.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.radical.is_zero()
    }

    /// The radicand two operands can share, if any.
    pub fn common_radicand(&self, other: &QuadExt) -> Result<u64, QfieldError> {
        match (self.radicand, other.radicand) {
            (a, b) if a == b => Ok(a),
            (1, b) => Ok(b),
            (a, 1) => Ok(a),
            (a, b) => Err(QfieldError::MixedRadicand(a, b)),
        }
    }

    pub fn try_add(&self, other: &QuadExt) -> Result<QuadExt, QfieldError> {
        let d = self.common_radicand(other)?;
        Ok(Self::normalized(
            &self.rational + &other.rational,
            &self.radical + &other.radical,
            d,
        ))
    }

    pub fn try_sub(&self, other: &QuadExt) -> Result<QuadExt, QfieldError> {
        self.try_add(&-other)
    }

    /// `(p + q sqrt d)(r + s sqrt d) = (pr + qsd) + (ps + qr) sqrt d`
    pub fn try_mul(&self, other: &QuadExt) -> Result<QuadExt, QfieldError> {
        let d = self.common_radicand(other)?;
        let dd = Rational::from_integer(BigInt::from(d));
        let rational = &self.rational * &other.rational + &self.radical * &other.radical * dd;
        let radical = &self.rational * &other.radical + &self.radical * &other.rational;
        Ok(Self::normalized(rational, radical, d))
    }

    pub fn scale(&self, factor: &Rational) -> QuadExt {
        Self::normalized(&self.rational * factor, &self.radical * factor, self.radicand)
    }

    /// Field norm `p^2 - q^2 d`; zero only for the zero element.
    pub fn norm(&self) -> Rational {
        let d = Rational::from_integer(BigInt::from(self.radicand));
        &self.rational * &self.rational - &self.radical * &self.radical * d
    }

    pub fn conjugate(&self) -> QuadExt {
        Self::normalized(self.rational.clone(), -&self.radical, self.radicand)
    }

    /// `1/(p + q sqrt d) = (p - q sqrt d)/(p^2 - q^2 d)`
    pub fn inv(&self) -> Result<QuadExt, QfieldError> {
        if self.is_zero() {
            return Err(QfieldError::DivisionByZero);
        }
        let n = self.norm();
        Ok(self.conjugate().scale(&n.recip()))
    }

    pub fn try_div(&self, other: &QuadExt) -> Result<QuadExt, QfieldError> {
        self.try_mul(&other.inv()?)
    }

    pub fn square(&self) -> QuadExt {
        self.try_mul(self).expect("a value shares its own radicand")
    }

    /// Exact sign, decided by comparing `p^2` with `q^2 d` when the two parts
    /// disagree in sign.
    pub fn signum(&self) -> Ordering {
        let sp = sign_of(&self.rational);
        let sq = sign_of(&self.radical);
        match (sp, sq) {
            (_, Ordering::Equal) => sp,
            (Ordering::Equal, _) => sq,
            _ if sp == sq => sp,
            _ => {
                let d = Rational::from_integer(BigInt::from(self.radicand));
                let p2 = &self.rational * &self.rational;
                let q2d = &self.radical * &self.radical * d;
                // p^2 == q^2 d is impossible for squarefree d > 1 and q != 0
                if p2 > q2d {
                    sp
                } else {
                    sq
                }
            }
        }
    }

    pub fn cmp_exact(&self, other: &QuadExt) -> Result<Ordering, QfieldError> {
        Ok(self.try_sub(other)?.signum())
    }

    pub fn abs(&self) -> QuadExt {
        if self.signum() == Ordering::Less {
            -self
        } else {
            self.clone()
        }
    }

    /// `|self| <= 1`, decided exactly.
    pub fn within_unit(&self) -> bool {
        self.abs()
            .cmp_exact(&QuadExt::one())
            .map(|o| o != Ordering::Greater)
            .expect("one is rational")
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        if self.is_rational() {
            return self.rational.floor().to_integer();
        }
        let approx = self.to_f64().unwrap_or(0.0).floor();
        let mut n = BigInt::from(approx as i64);
        let as_q = |n: &BigInt| QuadExt::from_rational(Rational::from_integer(n.clone()));
        while self.cmp_exact(&as_q(&n)).expect("rational") == Ordering::Less {
            n -= 1;
        }
        while self.cmp_exact(&as_q(&(&n + 1))).expect("rational") != Ordering::Less {
            n += 1;
        }
        n
    }

    /// Nearest integer, ties to even.
    pub fn round_half_even(&self) -> BigInt {
        let floor = self.floor();
        let frac = self
            .try_sub(&QuadExt::from_rational(Rational::from_integer(floor.clone())))
            .expect("rational");
        match frac.cmp_exact(&QuadExt::from_fraction(1, 2)).expect("rational") {
            Ordering::Less => floor,
            Ordering::Greater => floor + 1,
            Ordering::Equal => {
                if (&floor % 2u32).is_zero() {
                    floor
                } else {
                    floor + 1
                }
            }
        }
    }

    /// Double-precision value.
    ///
    /// When the two parts have opposite signs the value is evaluated as
    /// `(p^2 - q^2 d) / (p - q sqrt d)`, which has no cancellation; the result
    /// is then within a few ulp for parts below `2^40` in magnitude.
    pub fn to_f64(&self) -> Result<f64, QfieldError> {
        let overflow = || QfieldError::Overflow(self.to_string());
        let p = self.rational.to_f64().ok_or_else(overflow)?;
        if self.radical.is_zero() {
            return if p.is_finite() { Ok(p) } else { Err(overflow()) };
        }
        let q = self.radical.to_f64().ok_or_else(overflow)?;
        let root = (self.radicand as f64).sqrt();
        let value = if (p < 0.0) != (q < 0.0) && p != 0.0 {
            let n = self.norm().to_f64().ok_or_else(overflow)?;
            n / (p - q * root)
        } else {
            p + q * root
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(overflow())
        }
    }
}

fn sign_of(r: &Rational) -> Ordering {
    if r.is_zero() {
        Ordering::Equal
    } else if r.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

impl std::ops::Neg for &QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt::normalized(-&self.rational, -&self.radical, self.radicand)
    }
}

impl std::ops::Neg for QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        -&self
    }
}

impl From<Rational> for QuadExt {
    fn from(r: Rational) -> Self {
        QuadExt::from_rational(r)
    }
}

impl From<i64> for QuadExt {
    fn from(n: i64) -> Self {
        QuadExt::from_int(n)
    }
}

/// Renders as `p/q + r/s*sqrt(d)`; the radical coefficient is omitted when it
/// is one and the rational part when it is zero.
impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.radical.is_zero() {
            return write!(f, "{}", self.rational);
        }
        let magnitude = self.radical.abs();
        let coeff = if magnitude.is_one() {
            String::new()
        } else {
            format!("{magnitude}*")
        };
        let negative = self.radical.is_negative();
        if self.rational.is_zero() {
            let sign = if negative { "-" } else { "" };
            write!(f, "{sign}{coeff}sqrt({})", self.radicand)
        } else {
            let sign = if negative { '-' } else { '+' };
            write!(f, "{} {sign} {coeff}sqrt({})", self.rational, self.radicand)
        }
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Parses a `[-]coeff*sqrt(d)` or `[-]sqrt(d)` term.
fn parse_radical_term(s: &str) -> Option<(Rational, u64)> {
    let s = s.trim();
    let (negative, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, s.strip_prefix('+').unwrap_or(s).trim()),
    };
    let start = s.find("sqrt(")?;
    let inner = s[start + 5..].strip_suffix(')')?;
    let radicand: u64 = inner.trim().parse().ok()?;
    let coeff = s[..start].trim();
    let coeff = if coeff.is_empty() {
        Rational::one()
    } else {
        parse_rational(coeff.strip_suffix('*')?)?
    };
    Some((if negative { -coeff } else { coeff }, radicand))
}

impl FromStr for QuadExt {
    type Err = QfieldError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| QfieldError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let s = input.trim();
        if s.is_empty() {
            return Err(fail("empty"));
        }
        if !s.contains("sqrt") {
            return parse_rational(s)
                .map(QuadExt::from_rational)
                .ok_or_else(|| fail("not a rational"));
        }
        // split at the binary operator that precedes the radical term
        let split = s
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .filter(|&i| s[..i].ends_with(' '))
            .last();
        let (rational, radical_text) = match split {
            Some(i) => {
                let r = parse_rational(&s[..i]).ok_or_else(|| fail("bad rational part"))?;
                (r, &s[i..])
            }
            None => (Rational::zero(), s),
        };
        let (radical, radicand) =
            parse_radical_term(radical_text).ok_or_else(|| fail("bad radical term"))?;
        Ok(QuadExt::new(rational, radical, radicand))
    }
}
