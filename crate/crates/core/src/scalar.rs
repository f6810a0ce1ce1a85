//! Scalar backends.
//!
//! For the word metric every Radon-Nikodym derivative is an integer power of
//! `ω`, so matrix coefficients live in `Q(√ω)`; [`Quad`] represents those
//! exactly. Weighted and Green metrics use plain `f64`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Field operations shared by the exact and floating backends. All vectors
/// handled here are real-valued, so conjugation is the identity.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    /// Exact rendering where the backend is exact.
    fn render(&self) -> String;

    fn conj(&self) -> Self {
        self.clone()
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }
}

impl Scalar for f64 {
    fn zero() -> f64 {
        0.0
    }
    fn one() -> f64 {
        1.0
    }
    fn from_rational(r: &BigRational) -> f64 {
        ratio_to_f64(r)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn render(&self) -> String {
        format!("{self:e}")
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `p + q·√r` with rational `p, q` and a non-square integer `r`.
///
/// Pure rationals carry `r = 0`; any operation mixing two irrational values
/// requires them to share the radicand.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Quad {
    p: BigRational,
    q: BigRational,
    r: u64,
}

impl Quad {
    pub fn new(p: BigRational, q: BigRational, r: u64) -> Quad {
        if q.is_zero() || r == 0 {
            assert!(q.is_zero() || r != 0, "irrational part without a radicand");
            return Quad { p, q: BigRational::zero(), r: 0 };
        }
        assert!(!is_square(r), "radicand {r} is a perfect square");
        Quad { p, q, r }
    }

    pub fn rational(p: BigRational) -> Quad {
        Quad { p, q: BigRational::zero(), r: 0 }
    }

    /// `√r`
    pub fn sqrt(r: u64) -> Quad {
        Quad::new(BigRational::zero(), BigRational::one(), r)
    }

    /// `ω^{j/2}` for an integer `j`.
    pub fn half_power(omega: u64, j: i64) -> Quad {
        let base = BigRational::from_integer(BigInt::from(omega));
        let pow = |e: i64| -> BigRational {
            let v = num_traits::pow(base.clone(), e.unsigned_abs() as usize);
            if e < 0 {
                v.recip()
            } else {
                v
            }
        };
        if j.rem_euclid(2) == 0 {
            Quad::rational(pow(j / 2))
        } else if is_square(omega) {
            let s = BigRational::from_integer(BigInt::from(integer_sqrt(omega)));
            Quad::rational(pow((j - 1).div_euclid(2)) * s)
        } else {
            Quad::new(BigRational::zero(), pow((j - 1).div_euclid(2)), omega)
        }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.p
    }

    pub fn irrational_part(&self) -> &BigRational {
        &self.q
    }

    pub fn radicand(&self) -> u64 {
        self.r
    }

    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    fn join(a: u64, b: u64) -> u64 {
        match (a, b) {
            (0, r) | (r, 0) => r,
            (x, y) => {
                assert_eq!(x, y, "mixing Q(√{x}) and Q(√{y})");
                x
            }
        }
    }

    /// Algebraic conjugate `p - q√r`.
    pub fn galois_conjugate(&self) -> Quad {
        Quad { p: self.p.clone(), q: -self.q.clone(), r: self.r }
    }

    /// Field norm `p² - r q²`.
    pub fn norm(&self) -> BigRational {
        &self.p * &self.p - &self.q * &self.q * BigRational::from_integer(BigInt::from(self.r))
    }

    pub fn signum(&self) -> i32 {
        let sp = sign(&self.p);
        let sq = sign(&self.q);
        if sq == 0 {
            return sp;
        }
        if sp == 0 || sp == sq {
            return sq;
        }
        // opposite signs: compare p² with q² r
        let p2 = &self.p * &self.p;
        let q2r = &self.q * &self.q * BigRational::from_integer(BigInt::from(self.r));
        match p2.cmp(&q2r) {
            Ordering::Greater => sp,
            Ordering::Less => sq,
            Ordering::Equal => 0,
        }
    }

    pub fn abs(&self) -> Quad {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// `p+q*sqrt(w)` with the given radicand, used in CSV output.
    pub fn render_with(&self, omega: u64) -> String {
        let r = if self.r == 0 { omega } else { self.r };
        let sgn = if self.q.is_negative() { '-' } else { '+' };
        format!("{}{}{}*sqrt({})", self.p, sgn, self.q.abs(), r)
    }
}

fn sign(r: &BigRational) -> i32 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

fn integer_sqrt(r: u64) -> u64 {
    let s = (r as f64).sqrt().round() as u64;
    (s.saturating_sub(1)..=s + 1).rev().find(|t| t.checked_mul(*t).is_some_and(|sq| sq <= r)).unwrap_or(0)
}

pub(crate) fn is_square(r: u64) -> bool {
    let s = integer_sqrt(r);
    s * s == r
}

impl PartialOrd for Quad {
    fn partial_cmp(&self, other: &Quad) -> Option<Ordering> {
        Some((self.clone() - other.clone()).signum().cmp(&0))
    }
}

impl Add for Quad {
    type Output = Quad;
    fn add(self, o: Quad) -> Quad {
        let r = Quad::join(self.r, o.r);
        Quad::new(self.p + o.p, self.q + o.q, r)
    }
}

impl Sub for Quad {
    type Output = Quad;
    fn sub(self, o: Quad) -> Quad {
        let r = Quad::join(self.r, o.r);
        Quad::new(self.p - o.p, self.q - o.q, r)
    }
}

impl Mul for Quad {
    type Output = Quad;
    fn mul(self, o: Quad) -> Quad {
        let r = Quad::join(self.r, o.r);
        let rr = BigRational::from_integer(BigInt::from(r));
        let p = &self.p * &o.p + &self.q * &o.q * rr;
        let q = &self.p * &o.q + &self.q * &o.p;
        Quad::new(p, q, r)
    }
}

impl Div for Quad {
    type Output = Quad;
    fn div(self, o: Quad) -> Quad {
        let n = o.norm();
        assert!(!n.is_zero(), "division by zero in Q(√{})", o.r);
        let num = self * o.galois_conjugate();
        Quad::new(num.p / &n, num.q / &n, num.r)
    }
}

impl Neg for Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        Quad { p: -self.p, q: -self.q, r: self.r }
    }
}

impl From<BigRational> for Quad {
    fn from(p: BigRational) -> Quad {
        Quad::rational(p)
    }
}

impl Scalar for Quad {
    fn zero() -> Quad {
        Quad::rational(BigRational::zero())
    }
    fn one() -> Quad {
        Quad::rational(BigRational::one())
    }
    fn from_rational(r: &BigRational) -> Quad {
        Quad::rational(r.clone())
    }
    fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.p) + ratio_to_f64(&self.q) * (self.r as f64).sqrt()
    }
    fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() {
            write!(f, "{}", self.p)
        } else {
            write!(f, "{}", self.render_with(self.r))
        }
    }
}

impl fmt::Debug for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
