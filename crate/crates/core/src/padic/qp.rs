//! Elements of Q_p with capped relative precision.
//!
//! A nonzero element is `p^v * u` where `u` is a unit known modulo `p^r`.
//! Zero is either exact or known only modulo `p^abs` ("inexact zero").

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

thread_local! {
    static POWERS: RefCell<HashMap<u32, Vec<BigUint>>> = RefCell::new(HashMap::new());
}

/// `p^k`, cached per thread.
pub fn ppow(p: u32, k: u32) -> BigUint {
    POWERS.with(|cell| {
        let mut map = cell.borrow_mut();
        let v = map.entry(p).or_insert_with(|| vec![BigUint::one()]);
        while v.len() <= k as usize {
            let next = v.last().unwrap() * p;
            v.push(next);
        }
        v[k as usize].clone()
    })
}

/// Splits off the p-adic valuation of a nonzero integer.
pub fn split_valuation(p: u32, n: &BigUint) -> (u32, BigUint) {
    debug_assert!(!n.is_zero());
    let pb = BigUint::from(p);
    let mut k = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return (k, m);
        }
        m = q;
        k += 1;
    }
}

/// p-adic valuation of a nonzero big integer.
pub fn vp_int(p: u32, n: &BigInt) -> u32 {
    split_valuation(p, n.magnitude()).0
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    /// Known to be zero modulo `p^abs`; `None` means exactly zero.
    Zero(Option<i64>),
    /// `p^v * u`, `u` a unit residue modulo `p^r`, `r >= 1`.
    Unit { v: i64, u: BigUint, r: u32 },
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Qp {
    p: u32,
    repr: Repr,
}

impl Qp {
    pub fn zero(p: u32) -> Self {
        Qp { p, repr: Repr::Zero(None) }
    }

    pub fn inexact_zero(p: u32, abs: i64) -> Self {
        Qp {
            p,
            repr: Repr::Zero(Some(abs)),
        }
    }

    pub fn one(p: u32, cap: u32) -> Self {
        Self::from_i64(p, 1, cap)
    }

    pub fn from_i64(p: u32, n: i64, cap: u32) -> Self {
        Self::from_bigint(p, &BigInt::from(n), cap)
    }

    pub fn from_bigint(p: u32, n: &BigInt, cap: u32) -> Self {
        if n.is_zero() {
            return Self::zero(p);
        }
        let (v, m) = split_valuation(p, n.magnitude());
        let modulus = ppow(p, cap);
        let mut u = m % &modulus;
        if n.sign() == Sign::Minus {
            u = &modulus - u;
        }
        Qp {
            p,
            repr: Repr::Unit { v: v as i64, u, r: cap },
        }
    }

    pub fn from_rational(p: u32, q: &BigRational, cap: u32) -> Self {
        if q.is_zero() {
            return Self::zero(p);
        }
        let num = Self::from_bigint(p, q.numer(), cap);
        let den = Self::from_bigint(p, q.denom(), cap);
        num.div(&den).expect("nonzero denominator")
    }

    /// Builds `p^v * sum d_i p^i` from base-p digits; relative precision is
    /// the number of digits after stripping leading zeros.
    pub fn from_digits(p: u32, v: i64, digits: &[u32]) -> Self {
        let mut acc = BigUint::zero();
        for &d in digits.iter().rev() {
            acc = acc * p + d;
        }
        let n = digits.len() as u32;
        if acc.is_zero() {
            return Self::inexact_zero(p, v + n as i64);
        }
        let (k, u) = split_valuation(p, &acc);
        Self::from_unit(p, v + k as i64, u, n - k)
    }

    /// Normalizing constructor: `p^v * u mod p^r` with `u` arbitrary.
    pub fn from_unit(p: u32, v: i64, u: BigUint, r: u32) -> Self {
        let modulus = ppow(p, r);
        let u = u % &modulus;
        if u.is_zero() {
            return Self::inexact_zero(p, v + r as i64);
        }
        let (k, u) = split_valuation(p, &u);
        Qp {
            p,
            repr: Repr::Unit { v: v + k as i64, u, r: r - k },
        }
    }

    /// Square root of a nonzero square; loses one digit at p = 2.
    pub fn sqrt(&self) -> Option<Self> {
        let Repr::Unit { v, u, r } = &self.repr else { return None };
        if v % 2 != 0 {
            return None;
        }
        let p = self.p;
        let (u, r) = (u.clone(), *r);
        if p == 2 {
            if r < 3 || (&u % 8u32) != BigUint::one() {
                return None;
            }
            // bitwise lift: x² ≡ u mod 2^{k+1}
            let mut x = BigUint::one();
            for k in 3..r {
                let m = ppow(2, k + 1);
                if (&x * &x) % &m != &u % &m {
                    x += ppow(2, k - 1);
                }
            }
            return Some(Self::from_unit(2, v / 2, x, r - 1));
        }
        let pb = BigUint::from(p);
        let u0 = &u % &pb;
        let x0 = (1..p).map(BigUint::from).find(|x| (x * x) % &pb == u0)?;
        // Newton steps double the precision
        let modulus = ppow(p, r);
        let mut x = x0;
        let mut k = 1;
        while k < r {
            let fx = (&x * &x + &modulus - &u % &modulus) % &modulus;
            let inv = inv_mod(&(BigInt::from(2u32) * BigInt::from(x.clone())), &modulus)?;
            x = (&x + &modulus * 2u32 - (fx * inv) % &modulus) % &modulus;
            k *= 2;
        }
        Some(Self::from_unit(p, v / 2, x, r))
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    /// Valuation, or `None` when zero at the known precision.
    pub fn valuation(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero(_) => None,
            Repr::Unit { v, .. } => Some(*v),
        }
    }

    /// Zero at the known precision (exact or inexact).
    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero(_))
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero(None))
    }

    /// Flag for values indistinguishable from zero without being exactly zero.
    pub fn is_inexact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero(Some(_)))
    }

    /// Absolute precision; `None` for exact zero.
    pub fn abs_prec(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero(a) => *a,
            Repr::Unit { v, r, .. } => Some(v + *r as i64),
        }
    }

    /// Relative precision of a nonzero element.
    pub fn rel_prec(&self) -> Option<u32> {
        match &self.repr {
            Repr::Zero(_) => None,
            Repr::Unit { r, .. } => Some(*r),
        }
    }

    /// Unit part residue, for nonzero elements.
    pub fn unit(&self) -> Option<&BigUint> {
        match &self.repr {
            Repr::Zero(_) => None,
            Repr::Unit { u, .. } => Some(u),
        }
    }

    pub fn neg(&self) -> Self {
        match &self.repr {
            Repr::Zero(_) => self.clone(),
            Repr::Unit { v, u, r } => {
                let m = ppow(self.p, *r);
                Qp {
                    p: self.p,
                    repr: Repr::Unit { v: *v, u: m - u, r: *r },
                }
            }
        }
    }

    /// Truncates to absolute precision `abs`.
    pub fn truncate(&self, abs: i64) -> Self {
        match &self.repr {
            Repr::Zero(a) => match a {
                Some(a) if *a <= abs => self.clone(),
                _ => Self::inexact_zero(self.p, abs),
            },
            Repr::Unit { v, u, r } => {
                if *v >= abs {
                    Self::inexact_zero(self.p, abs)
                } else if v + *r as i64 <= abs {
                    self.clone()
                } else {
                    let nr = (abs - v) as u32;
                    Self::from_unit(self.p, *v, u.clone(), nr)
                }
            }
        }
    }

    /// Caps relative precision at `cap` digits.
    pub fn cap(&self, cap: u32) -> Self {
        match &self.repr {
            Repr::Unit { v, r, .. } if *r > cap => self.truncate(v + cap as i64),
            _ => self.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        match (&self.repr, &other.repr) {
            (Repr::Zero(None), _) => other.clone(),
            (_, Repr::Zero(None)) => self.clone(),
            (Repr::Zero(Some(a)), _) => other.truncate(*a),
            (_, Repr::Zero(Some(b))) => self.truncate(*b),
            (Repr::Unit { v: va, u: ua, r: ra }, Repr::Unit { v: vb, u: ub, r: rb }) => {
                let (va, ua, ra, vb, ub, rb) = if va <= vb {
                    (*va, ua, *ra, *vb, ub, *rb)
                } else {
                    (*vb, ub, *rb, *va, ua, *ra)
                };
                let abs = (va + ra as i64).min(vb + rb as i64);
                let width = (abs - va) as u32;
                let d = (vb - va) as u32;
                let sum = if d >= width { ua.clone() } else { ua + ub * ppow(self.p, d) };
                Self::from_unit(self.p, va, sum, width)
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        match (&self.repr, &other.repr) {
            (Repr::Zero(None), _) | (_, Repr::Zero(None)) => Self::zero(self.p),
            (Repr::Zero(Some(a)), Repr::Zero(Some(b))) => Self::inexact_zero(self.p, a + b),
            (Repr::Zero(Some(a)), Repr::Unit { v, .. }) | (Repr::Unit { v, .. }, Repr::Zero(Some(a))) => Self::inexact_zero(self.p, a + v),
            (Repr::Unit { v: va, u: ua, r: ra }, Repr::Unit { v: vb, u: ub, r: rb }) => {
                let r = (*ra).min(*rb);
                let u = (ua * ub) % ppow(self.p, r);
                Qp {
                    p: self.p,
                    repr: Repr::Unit { v: va + vb, u, r },
                }
            }
        }
    }

    pub fn mul_int(&self, n: i64) -> Self {
        match &self.repr {
            Repr::Zero(_) => self.clone(),
            Repr::Unit { r, .. } => self.mul(&Self::from_i64(self.p, n, *r)),
        }
    }

    /// Multiplication by `p^k`.
    pub fn shift(&self, k: i64) -> Self {
        match &self.repr {
            Repr::Zero(None) => self.clone(),
            Repr::Zero(Some(a)) => Self::inexact_zero(self.p, a + k),
            Repr::Unit { v, u, r } => Qp {
                p: self.p,
                repr: Repr::Unit { v: v + k, u: u.clone(), r: *r },
            },
        }
    }

    /// Inverse; `None` when zero at the known precision.
    pub fn inv(&self) -> Option<Self> {
        match &self.repr {
            Repr::Zero(_) => None,
            Repr::Unit { v, u, r } => {
                let m = ppow(self.p, *r);
                let ui = u.modinv(&m).expect("unit residue is invertible");
                Some(Qp {
                    p: self.p,
                    repr: Repr::Unit { v: -v, u: ui, r: *r },
                })
            }
        }
    }

    pub fn div(&self, other: &Self) -> Option<Self> {
        Some(self.mul(&other.inv()?))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let cap = self.rel_prec().unwrap_or(1);
        let mut base = self.clone();
        let mut acc = Self::one(self.p, cap);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Agreement at the jointly known precision.
    pub fn agrees(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }

    /// Rational with small numerator and denominator matching the unit part,
    /// found by rational reconstruction; falls back to the symmetric residue.
    pub fn to_rational(&self) -> BigRational {
        match &self.repr {
            Repr::Zero(_) => BigRational::zero(),
            Repr::Unit { v, u, r } => {
                let m = ppow(self.p, *r);
                let s = reconstruct(u, &m).unwrap_or_else(|| {
                    let half = &m >> 1;
                    let s = if u > &half {
                        BigInt::from(u.clone()) - BigInt::from(m.clone())
                    } else {
                        BigInt::from(u.clone())
                    };
                    BigRational::from_integer(s)
                });
                let pv = BigRational::from_integer(BigInt::from(ppow(self.p, v.unsigned_abs() as u32)));
                if *v >= 0 {
                    s * pv
                } else {
                    s / pv
                }
            }
        }
    }

    /// Base-p digits of the unit part, least significant first.
    pub fn digits(&self) -> Vec<u32> {
        match &self.repr {
            Repr::Zero(_) => Vec::new(),
            Repr::Unit { u, r, .. } => {
                let mut out = Vec::with_capacity(*r as usize);
                let mut m = u.clone();
                let pb = BigUint::from(self.p);
                for _ in 0..*r {
                    let (q, d) = m.div_rem(&pb);
                    out.push(d.to_u32().unwrap());
                    m = q;
                }
                out
            }
        }
    }

    /// Exact rational if this element is known to represent one: used
    /// only for display of small integers.
    pub fn small_int(&self) -> Option<i64> {
        let q = self.to_rational();
        if q.is_integer() && q.numer().abs() < BigInt::from(1i64 << 40) {
            q.numer().to_i64()
        } else {
            None
        }
    }

    pub fn cmp_valuation(&self, other: &Self) -> Ordering {
        match (self.valuation(), other.valuation()) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(a), Some(b)) => a.cmp(&b),
        }
    }
}

impl fmt::Debug for Qp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Zero(None) => write!(f, "0"),
            Repr::Zero(Some(a)) => write!(f, "O({}^{})", self.p, a),
            Repr::Unit { v, r, .. } => write!(f, "{} + O({}^{})", self.to_rational(), self.p, v + *r as i64),
        }
    }
}

/// Inverse of a unit modulo `p^r` for signed input.
/// Rational reconstruction of `u mod m` with numerator and denominator
/// bounded by `sqrt(m/2)`.
pub fn reconstruct(u: &BigUint, m: &BigUint) -> Option<BigRational> {
    let bound = (m >> 1u32).sqrt();
    let (mut r0, mut r1) = (BigInt::from(m.clone()), BigInt::from(u.clone()));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > BigInt::from(bound.clone()) {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.magnitude() > &bound || !r1.gcd(&t1).is_one() {
        return None;
    }
    Some(BigRational::new(r1, t1))
}

pub fn inv_mod(a: &BigInt, m: &BigUint) -> Option<BigUint> {
    let mi = BigInt::from(m.clone());
    let r = a.mod_floor(&mi);
    r.magnitude().modinv(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn third_in_q2_round_trips() {
        let x = Qp::from_rational(2, &q(1, 3), 30);
        let three = Qp::from_i64(2, 3, 30);
        assert!(x.mul(&three).agrees(&Qp::one(2, 30)));
        assert_eq!(x.valuation(), Some(0));
        assert_eq!(x.to_rational(), q(1, 3));
    }

    #[test]
    fn cancellation_yields_inexact_zero() {
        let a = Qp::from_i64(2, 5, 10);
        let b = Qp::from_i64(2, 5 + 1024 * 3, 20);
        let d = a.sub(&b);
        assert!(d.is_inexact_zero());
        assert_eq!(d.abs_prec(), Some(10));
    }

    #[test]
    fn valuation_of_fraction() {
        let x = Qp::from_rational(3, &q(18, 5), 10);
        assert_eq!(x.valuation(), Some(2));
        let y = Qp::from_rational(3, &q(5, 27), 10);
        assert_eq!(y.valuation(), Some(-3));
        assert_eq!(y.to_rational(), q(5, 27));
    }

    #[test]
    fn digits_round_trip() {
        let x = Qp::from_digits(5, 1, &[3, 0, 4, 1]);
        assert_eq!(x.valuation(), Some(1));
        assert_eq!(x.digits(), vec![3, 0, 4, 1]);
        assert!(Qp::from_rational(5, &x.to_rational(), 4).agrees(&x));
        assert!(x.agrees(&Qp::from_i64(5, 5 * 228, 4)));
    }

    #[test]
    fn exact_zero_is_absorbing() {
        let z = Qp::zero(2);
        let x = Qp::from_i64(2, 7, 8);
        assert!(z.mul(&x).is_exact_zero());
        assert!(z.add(&x).agrees(&x));
    }
}
