//! Exact arithmetic on rationals and finite-precision p-adic numbers.
//!
//! Rationals are arbitrary-precision and always in lowest terms
//! ([`Rational`] is `num_rational::BigRational`). A [`PAdicApprox`] is a
//! truncated canonical expansion `sum a_j p^(v+j)` whose digits are known
//! exactly up to an absolute precision `p^(v+k)`; every ring operation
//! tracks the precision actually justified by its operands.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number, always reduced, denominator positive.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum PadicError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("digit {digit} at index {index} is out of range for base {base}")]
    DigitOutOfRange { digit: u64, index: usize, base: u64 },
    #[error("operands use different prime bases ({0} vs {1})")]
    BaseMismatch(u64, u64),
    #[error("divisor is indistinguishable from zero at the current precision")]
    PrecisionExhausted,
    #[error("square roots are not supported for p = 2")]
    UnsupportedBase,
    #[error("malformed literal: {0}")]
    ParseError(String),
}

// ---------------------------------------------------------------------------
// Prime bases
// ---------------------------------------------------------------------------

/// A prime number p >= 2, validated at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeBase(u64);

impl PrimeBase {
    /// Validates primality with a deterministic Miller-Rabin witness set
    /// (sound for every u64).
    pub fn new(p: u64) -> Result<Self, PadicError> {
        if is_prime_u64(p) {
            Ok(PrimeBase(p))
        } else {
            Err(PadicError::NotPrime(p))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_bigint(self) -> BigInt {
        BigInt::from(self.0)
    }

    /// p^e as an exact rational, for any integer e.
    pub fn pow_rational(self, e: i64) -> Rational {
        let mag = BigInt::from(self.0).pow(e.unsigned_abs() as u32);
        if e >= 0 {
            Rational::from_integer(mag)
        } else {
            Rational::new(BigInt::one(), mag)
        }
    }
}

impl fmt::Display for PrimeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin. The witness set covers all n < 3.3e24,
/// which includes every u64.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        r += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// ---------------------------------------------------------------------------
// Valuation, norm, metric
// ---------------------------------------------------------------------------

/// ord_p of a rational; zero gets the distinguished value `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use Valuation::*;
        match (self, other) {
            (Infinite, Infinite) => std::cmp::Ordering::Equal,
            (Infinite, Finite(_)) => std::cmp::Ordering::Greater,
            (Finite(_), Infinite) => std::cmp::Ordering::Less,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "+inf"),
        }
    }
}

/// Exponent of p in a nonzero integer.
fn int_ord(n: &BigInt, p: u64) -> i64 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut m = n.abs();
    let mut v = 0i64;
    loop {
        let (q, r) = m.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        m = q;
        v += 1;
    }
}

/// ord_p(q) = ord_p(numerator) - ord_p(denominator); +inf for q = 0.
pub fn valuation(q: &Rational, base: PrimeBase) -> Valuation {
    if q.is_zero() {
        return Valuation::Infinite;
    }
    Valuation::Finite(int_ord(q.numer(), base.get()) - int_ord(q.denom(), base.get()))
}

/// |q|_p = p^(-ord_p(q)) as an exact rational; |0|_p = 0.
pub fn norm(q: &Rational, base: PrimeBase) -> Rational {
    match valuation(q, base) {
        Valuation::Infinite => Rational::zero(),
        Valuation::Finite(v) => base.pow_rational(-v),
    }
}

/// The p-adic metric rho_p(a, b) = |a - b|_p.
pub fn distance(a: &Rational, b: &Rational, base: PrimeBase) -> Rational {
    norm(&(a - b), base)
}

// ---------------------------------------------------------------------------
// Finite-precision p-adic numbers
// ---------------------------------------------------------------------------

/// A p-adic number known to finitely many digits.
///
/// Represents `sum_j digits[j] * p^(valuation + j)` with the guarantee that
/// the true value agrees with this partial sum modulo
/// `p^(valuation + digits.len())` (the *absolute precision*).
///
/// Normal form: a nonzero value has `digits[0] != 0`; the zero-at-precision
/// element stores no digits and keeps its absolute precision in `valuation`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicApprox {
    base: PrimeBase,
    valuation: i64,
    digits: Vec<u64>,
}

impl PAdicApprox {
    /// The element known only to satisfy |x|_p <= p^(-abs_precision).
    pub fn zero(base: PrimeBase, abs_precision: i64) -> Self {
        PAdicApprox { base, valuation: abs_precision, digits: Vec::new() }
    }

    /// Builds from raw parts, validating digit ranges and normalizing
    /// (leading zero digits fold into the valuation; all-zero digit lists
    /// collapse to the canonical zero of the same absolute precision).
    pub fn from_parts(base: PrimeBase, valuation: i64, digits: Vec<u64>) -> Result<Self, PadicError> {
        for (index, &digit) in digits.iter().enumerate() {
            if digit >= base.get() {
                return Err(PadicError::DigitOutOfRange { digit, index, base: base.get() });
            }
        }
        let mut x = PAdicApprox { base, valuation, digits };
        x.normalize();
        Ok(x)
    }

    fn normalize(&mut self) {
        let lead = self.digits.iter().take_while(|&&d| d == 0).count();
        if lead == self.digits.len() {
            self.valuation += self.digits.len() as i64;
            self.digits.clear();
        } else if lead > 0 {
            self.digits.drain(..lead);
            self.valuation += lead as i64;
        }
    }

    pub fn base(&self) -> PrimeBase {
        self.base
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    /// ord_p of the value; `None` for a zero-at-precision element.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.valuation)
        }
    }

    /// Number of known digits (relative precision). Zero elements have none.
    pub fn precision(&self) -> usize {
        self.digits.len()
    }

    /// The value is pinned modulo p^abs_precision().
    pub fn abs_precision(&self) -> i64 {
        self.valuation + self.digits.len() as i64
    }

    /// Known digits, least significant first.
    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// The digits as one integer (the unit part of the value).
    fn unit_int(&self) -> BigInt {
        let p = self.base.as_bigint();
        let mut acc = BigInt::zero();
        for &d in self.digits.iter().rev() {
            acc = acc * &p + BigInt::from(d);
        }
        acc
    }

    fn unit_from_int(base: PrimeBase, valuation: i64, mut u: BigUint, len: usize) -> Self {
        let p = BigUint::from(base.get());
        let mut digits = Vec::with_capacity(len);
        for _ in 0..len {
            let (q, r) = u.div_rem(&p);
            digits.push(r.to_u64().expect("digit fits in u64"));
            u = q;
        }
        let mut x = PAdicApprox { base, valuation, digits };
        x.normalize();
        x
    }

    /// Drops information so the element is only known modulo p^abs_precision.
    pub fn truncate_abs(&self, abs_precision: i64) -> Self {
        if abs_precision >= self.abs_precision() {
            return self.clone();
        }
        if abs_precision <= self.valuation {
            return PAdicApprox::zero(self.base, abs_precision);
        }
        let keep = (abs_precision - self.valuation) as usize;
        let mut x = PAdicApprox {
            base: self.base,
            valuation: self.valuation,
            digits: self.digits[..keep].to_vec(),
        };
        x.normalize();
        x
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let len = self.digits.len();
        let modulus = BigUint::from(self.base.get()).pow(len as u32);
        let u = self.unit_int().to_biguint().expect("unit is nonnegative");
        PAdicApprox::unit_from_int(self.base, self.valuation, &modulus - u, len)
    }

    pub fn add(&self, other: &Self) -> Result<Self, PadicError> {
        let base = self.same_base(other)?;
        let abs = self.abs_precision().min(other.abs_precision());
        if self.is_zero() {
            return Ok(other.truncate_abs(abs));
        }
        if other.is_zero() {
            return Ok(self.truncate_abs(abs));
        }
        let v_min = self.valuation.min(other.valuation);
        let shift = |x: &Self| {
            x.unit_int() * base.as_bigint().pow((x.valuation - v_min) as u32)
        };
        let modulus = BigInt::from(base.get()).pow((abs - v_min) as u32);
        let sum = (shift(self) + shift(other)).mod_floor(&modulus);
        if sum.is_zero() {
            return Ok(PAdicApprox::zero(base, abs));
        }
        let t = int_ord(&sum, base.get());
        let v = v_min + t;
        let unit = sum / base.as_bigint().pow(t as u32);
        Ok(PAdicApprox::unit_from_int(
            base,
            v,
            unit.to_biguint().expect("reduced residue is nonnegative"),
            (abs - v) as usize,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PadicError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PadicError> {
        let base = self.same_base(other)?;
        match (self.is_zero(), other.is_zero()) {
            (true, true) => {
                return Ok(PAdicApprox::zero(base, self.abs_precision() + other.abs_precision()))
            }
            (true, false) => {
                return Ok(PAdicApprox::zero(base, self.abs_precision() + other.valuation))
            }
            (false, true) => {
                return Ok(PAdicApprox::zero(base, other.abs_precision() + self.valuation))
            }
            (false, false) => {}
        }
        let k = self.precision().min(other.precision());
        let modulus = BigUint::from(base.get()).pow(k as u32);
        let u = (self.unit_int() * other.unit_int())
            .to_biguint()
            .expect("unit product is nonnegative")
            % &modulus;
        Ok(PAdicApprox::unit_from_int(base, self.valuation + other.valuation, u, k))
    }

    pub fn div(&self, other: &Self) -> Result<Self, PadicError> {
        let base = self.same_base(other)?;
        if other.is_zero() {
            return Err(PadicError::PrecisionExhausted);
        }
        if self.is_zero() {
            return Ok(PAdicApprox::zero(base, self.abs_precision() - other.valuation));
        }
        let k = self.precision().min(other.precision());
        let modulus = BigInt::from(base.get()).pow(k as u32);
        let inv = modular_inverse(&other.unit_int(), &modulus)
            .expect("unit digit is nonzero, so the unit is invertible");
        let u = (self.unit_int() * inv).mod_floor(&modulus);
        Ok(PAdicApprox::unit_from_int(
            base,
            self.valuation - other.valuation,
            u.to_biguint().expect("residue is nonnegative"),
            k,
        ))
    }

    fn same_base(&self, other: &Self) -> Result<PrimeBase, PadicError> {
        if self.base != other.base {
            Err(PadicError::BaseMismatch(self.base.get(), other.base.get()))
        } else {
            Ok(self.base)
        }
    }

    /// Renders the expansion in positional form, most significant known
    /// digit first, with `,` as the radix point: `...1111`, `...1,2`.
    /// Digits of bases above 10 are bracketed. A leading `...` marks the
    /// unknown higher digits; unknown fractional positions show as `?`.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "...0".to_string();
        }
        let digit_str = |d: u64| {
            if self.base.get() <= 10 {
                d.to_string()
            } else {
                format!("[{d}]")
            }
        };
        let top = self.valuation + self.digits.len() as i64 - 1;
        let digit_at = |pos: i64| -> Option<u64> {
            if pos < self.valuation {
                Some(0) // below the valuation every digit is known zero
            } else if pos <= top {
                Some(self.digits[(pos - self.valuation) as usize])
            } else {
                None
            }
        };
        let mut out = String::from("...");
        let int_top = top.max(0);
        for pos in (0..=int_top).rev() {
            match digit_at(pos) {
                Some(d) => out.push_str(&digit_str(d)),
                // only reachable when every known digit sits below the
                // radix point; anchor the point with an explicit unknown
                None => out.push('?'),
            }
        }
        if self.valuation < 0 {
            out.push(',');
            for pos in (self.valuation..0).rev() {
                match digit_at(pos) {
                    Some(d) => out.push_str(&digit_str(d)),
                    None => out.push('?'),
                }
            }
        }
        out
    }
}

/// Inverse of `a` modulo `m`, when gcd(a, m) = 1.
fn modular_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// Canonical digit expansion of a rational, truncated to `precision` digits.
///
/// The digit recurrence divides out p^ord first, then repeatedly reads the
/// residue of the p-integral remainder; negative rationals get the usual
/// infinite-complement expansion (-1 has every digit p-1).
pub fn to_digits(q: &Rational, base: PrimeBase, precision: usize) -> PAdicApprox {
    assert!(precision > 0, "precision must be positive");
    if q.is_zero() {
        return PAdicApprox::zero(base, precision as i64);
    }
    let p = base.get();
    let v = int_ord(q.numer(), p) - int_ord(q.denom(), p);
    let p_big = BigInt::from(p);
    // unit = q / p^v = num/den with p dividing neither.
    let mut num = q.numer().clone();
    let mut den = q.denom().clone();
    if v >= 0 {
        num /= p_big.pow(v as u32);
    } else {
        den /= p_big.pow((-v) as u32);
    }
    let den_inv_mod_p = modular_inverse(&den.mod_floor(&p_big), &p_big)
        .expect("denominator is coprime to p");
    let mut digits = Vec::with_capacity(precision);
    for _ in 0..precision {
        let d = (num.mod_floor(&p_big) * &den_inv_mod_p).mod_floor(&p_big);
        let d_u64 = d.to_u64().expect("digit fits in u64");
        digits.push(d_u64);
        num = (num - d * &den) / &p_big;
    }
    PAdicApprox { base, valuation: v, digits }
}

/// Exact rational value of the known digits (the truncated partial sum).
pub fn from_digits(x: &PAdicApprox) -> Rational {
    if x.is_zero() {
        return Rational::zero();
    }
    Rational::from_integer(x.unit_int()) * x.base.pow_rational(x.valuation().expect("nonzero"))
}

// ---------------------------------------------------------------------------
// Hensel square roots
// ---------------------------------------------------------------------------

/// Square root of `a` in Q_p for odd p, to `precision` digits of the root.
///
/// `Ok(None)` when no root exists in Q_p (odd valuation, or the unit part is
/// a quadratic non-residue mod p). Of the two roots the one whose leading
/// digit is at most (p-1)/2 is returned; the other is its negation.
pub fn hensel_sqrt(
    a: &Rational,
    base: PrimeBase,
    precision: usize,
) -> Result<Option<PAdicApprox>, PadicError> {
    assert!(precision > 0, "precision must be positive");
    let p = base.get();
    if p == 2 {
        return Err(PadicError::UnsupportedBase);
    }
    if a.is_zero() {
        return Ok(Some(PAdicApprox::zero(base, precision as i64)));
    }
    let v = valuation(a, base).finite().expect("nonzero");
    if v % 2 != 0 {
        return Ok(None);
    }
    let p_big = BigInt::from(p);
    let mut num = a.numer().clone();
    let mut den = a.denom().clone();
    if v >= 0 {
        num /= p_big.pow(v as u32);
    } else {
        den /= p_big.pow((-v) as u32);
    }
    // Unit residue mod p, and Euler's criterion on it.
    let r0 = {
        let n = num.mod_floor(&p_big).to_u64().expect("residue fits");
        let d = den.mod_floor(&p_big).to_u64().expect("residue fits");
        let d_inv = powmod(d, p - 2, p);
        mulmod(n, d_inv, p)
    };
    debug_assert!(r0 != 0);
    if powmod(r0, (p - 1) / 2, p) != 1 {
        return Ok(None);
    }
    let mut root = tonelli_shanks(r0, p);
    root = root.min(p - root);

    // Newton lifting x -> x - (x^2 - u) / (2x), doubling the precision of
    // the congruence each step.
    let target_modulus = BigInt::from(p).pow(precision as u32);
    let unit = (num * modular_inverse(&den, &target_modulus).expect("den coprime to p"))
        .mod_floor(&target_modulus);
    let mut x = BigInt::from(root);
    let mut known = 1usize;
    while known < precision {
        known = (known * 2).min(precision);
        let modulus = BigInt::from(p).pow(known as u32);
        let u_k = unit.mod_floor(&modulus);
        let two_x_inv = modular_inverse(&(BigInt::from(2) * &x), &modulus)
            .expect("2x is a unit for odd p");
        x = (&x - (&x * &x - u_k) * two_x_inv).mod_floor(&modulus);
    }
    debug_assert!(((&x * &x) - &unit).mod_floor(&target_modulus).is_zero());
    Ok(Some(PAdicApprox::unit_from_int(
        base,
        v / 2,
        x.to_biguint().expect("residue is nonnegative"),
        precision,
    )))
}

/// Square root of a quadratic residue `n` modulo an odd prime `p`.
fn tonelli_shanks(n: u64, p: u64) -> u64 {
    debug_assert!(n != 0 && powmod(n, (p - 1) / 2, p) == 1);
    if p % 4 == 3 {
        return powmod(n, (p + 1) / 4, p);
    }
    // Write p - 1 = q * 2^s with q odd.
    let mut q = p - 1;
    let mut s = 0u32;
    while q & 1 == 0 {
        q >>= 1;
        s += 1;
    }
    // Any quadratic non-residue serves as the generator z.
    let mut z = 2u64;
    while powmod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(n, q, p);
    let mut r = powmod(n, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0u32;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mulmod(t2, t2, p);
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    r
}

// ---------------------------------------------------------------------------
// Textual formats
// ---------------------------------------------------------------------------

/// Parses `<num>/<den>` or a plain integer into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, PadicError> {
    let s = s.trim();
    let bad = |m: &str| PadicError::ParseError(format!("{m}: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let num = BigInt::from_str(n.trim()).map_err(|_| bad("invalid numerator"))?;
        let den = BigInt::from_str(d.trim()).map_err(|_| bad("invalid denominator"))?;
        if den.is_zero() {
            return Err(bad("zero denominator"));
        }
        Ok(Rational::new(num, den))
    } else {
        let n = BigInt::from_str(s).map_err(|_| bad("invalid integer"))?;
        Ok(Rational::from_integer(n))
    }
}

/// Renders a rational as `<num>/<den>` (or a bare integer).
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for PAdicApprox {
    /// Machine literal `p:<prime> v:<valuation> d:<a0,a1,...>` with digits
    /// least significant first. The canonical zero prints an empty digit
    /// list and carries its absolute precision in `v:`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self
            .digits
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        write!(f, "p:{} v:{} d:{}", self.base, self.valuation, digits)
    }
}

impl FromStr for PAdicApprox {
    type Err = PadicError;

    fn from_str(s: &str) -> Result<Self, PadicError> {
        let bad = |m: &str| PadicError::ParseError(format!("{m}: {s:?}"));
        let mut p = None;
        let mut v = None;
        let mut d = None;
        for tok in s.split_whitespace() {
            if let Some(rest) = tok.strip_prefix("p:") {
                p = Some(rest.parse::<u64>().map_err(|_| bad("invalid prime"))?);
            } else if let Some(rest) = tok.strip_prefix("v:") {
                v = Some(rest.parse::<i64>().map_err(|_| bad("invalid valuation"))?);
            } else if let Some(rest) = tok.strip_prefix("d:") {
                let digits = if rest.is_empty() {
                    Vec::new()
                } else {
                    rest.split(',')
                        .map(|t| t.trim().parse::<u64>().map_err(|_| bad("invalid digit")))
                        .collect::<Result<Vec<_>, _>>()?
                };
                d = Some(digits);
            } else {
                return Err(bad("unexpected token"));
            }
        }
        let p = p.ok_or_else(|| bad("missing p:"))?;
        let v = v.ok_or_else(|| bad("missing v:"))?;
        let d = d.ok_or_else(|| bad("missing d:"))?;
        PAdicApprox::from_parts(PrimeBase::new(p)?, v, d)
    }
}
