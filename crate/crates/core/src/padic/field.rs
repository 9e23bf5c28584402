//! Towers Q_p ⊂ K_q ⊂ L and their elements.
//!
//! K_q = Q_p[x]/(m) with m the Teichmüller modulus, L = K_q[u]/(E) with E
//! Eisenstein. An element is stored as Q_p coordinates on the basis
//! x^i u^j (index i + f*j), which is also a Z_p-basis of the integers, so
//! valuations read off coordinatewise.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::qp::Qp;
use super::teich::teichmuller_modulus;
use crate::error::{Error, Result};

thread_local! {
    static CACHE: RefCell<HashMap<(u32, usize, u32), Arc<Tower>>> = RefCell::new(HashMap::new());
}

#[derive(Clone, Debug)]
pub struct Automorphism {
    pub name: String,
    /// Image of the uniformizer, coordinates in the tower basis.
    image: Vec<Qp>,
    /// Powers of the image, `0..e`.
    powers: Vec<Vec<Qp>>,
}

impl Automorphism {
    pub fn image(&self) -> &[Qp] {
        &self.image
    }
}

#[derive(Clone, Debug)]
pub struct Tower {
    pub p: u32,
    pub f: usize,
    pub e: usize,
    pub prec: u32,
    modulus: Vec<Qp>,
    modulus_int: Vec<BigInt>,
    frob: Vec<Vec<Qp>>,
    frob_inv: Vec<Vec<Qp>>,
    eis: Vec<Vec<Qp>>,
    eis_is_rational: bool,
    autos: Vec<Automorphism>,
}

impl PartialEq for Tower {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.f == other.f && self.e == other.e && self.prec == other.prec && self.modulus_int == other.modulus_int && self.eis == other.eis
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Tower {
    /// Unramified level of degree `f`, Teichmüller modulus computed here.
    pub fn unramified(p: u32, f: usize, prec: u32) -> Result<Arc<Tower>> {
        if let Some(t) = CACHE.with(|c| c.borrow().get(&(p, f, prec)).cloned()) {
            return Ok(t);
        }
        let t = Self::unramified_uncached(p, f, prec)?;
        CACHE.with(|c| c.borrow_mut().insert((p, f, prec), t.clone()));
        Ok(t)
    }

    fn unramified_uncached(p: u32, f: usize, prec: u32) -> Result<Arc<Tower>> {
        if !is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        if f == 0 || prec == 0 {
            return Err(Error::invalid("degree and precision must be positive"));
        }
        let m = teichmuller_modulus(p, f, prec);
        Self::with_modulus(p, f, prec, &m)
    }

    /// Unramified level with a caller-supplied modulus, validated.
    pub fn with_modulus(p: u32, f: usize, prec: u32, modulus: &[BigInt]) -> Result<Arc<Tower>> {
        if !is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        if modulus.len() != f + 1 || !modulus[f].is_one() {
            return Err(Error::invalid(format!("modulus must be monic of degree {f}")));
        }
        let mq: Vec<Qp> = modulus[..f].iter().map(|c| Qp::from_bigint(p, c, prec)).collect();
        let mut t = Tower {
            p,
            f,
            e: 1,
            prec,
            modulus: mq,
            modulus_int: modulus.to_vec(),
            frob: Vec::new(),
            frob_inv: Vec::new(),
            eis: Vec::new(),
            eis_is_rational: true,
            autos: Vec::new(),
        };
        // residual irreducibility and x^{q-1} = 1
        let q1 = (p as u64).pow(f as u32) - 1;
        let x = t.gen_coords();
        let xq1 = t.kpow(&x, q1);
        let one = t.kone();
        if !t.kagrees(&xq1, &one) {
            return Err(Error::invalid("modulus does not divide x^(q-1) - 1 at working precision"));
        }
        if !residually_irreducible(p, f, modulus) {
            return Err(Error::invalid("modulus is not irreducible modulo p"));
        }
        let xp = t.kpow(&x, p as u64);
        let mut frob = Vec::with_capacity(f);
        let mut acc = one.clone();
        for _ in 0..f {
            frob.push(acc.clone());
            acc = t.kmul(&acc, &xp);
        }
        let xpinv = t.kpow(&x, (p as u64).pow(f as u32 - 1));
        let mut frob_inv = Vec::with_capacity(f);
        let mut acc = one;
        for _ in 0..f {
            frob_inv.push(acc.clone());
            acc = t.kmul(&acc, &xpinv);
        }
        t.frob = frob;
        t.frob_inv = frob_inv;
        Ok(Arc::new(t))
    }

    /// Totally ramified extension by a monic Eisenstein polynomial with
    /// coefficients in this (unramified) tower, constant term first, leading
    /// coefficient omitted. Automorphisms are images of the uniformizer as
    /// polynomials in u with base coefficients.
    pub fn eisenstein(base: &Arc<Tower>, coeffs: &[Elem], autos: &[(String, Vec<Elem>)]) -> Result<Arc<Tower>> {
        if base.e != 1 {
            return Err(Error::invalid("Eisenstein extension must sit over an unramified level"));
        }
        let e = coeffs.len();
        if e == 0 {
            return Err(Error::invalid("Eisenstein polynomial must have positive degree"));
        }
        for (j, c) in coeffs.iter().enumerate() {
            let v = c.valuation();
            let ok = match (j, v) {
                (0, Some(v)) => v == 1,
                (0, None) => false,
                (_, Some(v)) => v >= 1,
                (_, None) => true,
            };
            if !ok {
                return Err(Error::invalid(format!("coefficient {j} violates the Eisenstein condition")));
            }
        }
        let mut t = (**base).clone();
        t.e = e;
        t.eis = coeffs.iter().map(|c| c.c.clone()).collect();
        t.eis_is_rational = coeffs.iter().all(|c| c.c[1..].iter().all(|z| z.is_exact_zero()));
        t.autos = Vec::new();
        let tower = Arc::new(t);
        let mut built = Vec::new();
        for (name, poly) in autos {
            let mut img = Elem::zero(&tower);
            let u = Elem::uniformizer(&tower);
            let mut upow = Elem::one(&tower);
            for c in poly {
                img = img.add(&c.embed(&tower).mul(&upow));
                upow = upow.mul(&u);
            }
            let mut powers = Vec::with_capacity(e);
            let mut acc = Elem::one(&tower);
            for _ in 0..e {
                powers.push(acc.c.clone());
                acc = acc.mul(&img);
            }
            built.push(Automorphism {
                name: name.clone(),
                image: img.c.clone(),
                powers,
            });
        }
        let mut t = (*tower).clone();
        t.autos = built;
        let tower = Arc::new(t);
        tower.validate_automorphisms()?;
        Ok(tower)
    }

    fn validate_automorphisms(self: &Arc<Self>) -> Result<()> {
        let n = self.autos.len();
        if n == 0 {
            return Ok(());
        }
        if n != self.e {
            return Err(Error::invalid(format!(
                "automorphism table has {n} entries, expected a group of order {}",
                self.e
            )));
        }
        let guard = (self.prec / 2).min(8) as i64;
        for a in &self.autos {
            let img = Elem {
                t: self.clone(),
                c: a.image.clone(),
            };
            let val = self.eval_eisenstein(&img);
            if !val.is_small(self.prec as i64 * self.e as i64 - guard * self.e as i64 - 2 * self.e as i64) {
                return Err(Error::invalid(format!("E({}(u)) is not zero at working precision", a.name)));
            }
            if img.valuation_units() != Some(1) {
                return Err(Error::invalid(format!("{}(u) is not a uniformizer", a.name)));
            }
        }
        let mut has_identity = false;
        for i in 0..n {
            let ui = Elem {
                t: self.clone(),
                c: self.autos[i].image.clone(),
            };
            if ui.agrees(&Elem::uniformizer(self)) {
                has_identity = true;
            }
            for j in 0..n {
                let comp = self.apply_auto_idx(j, &ui);
                if self.find_auto(&comp).is_none() {
                    return Err(Error::invalid(format!(
                        "automorphism table not closed: {} after {}",
                        self.autos[j].name, self.autos[i].name
                    )));
                }
            }
        }
        if !has_identity {
            return Err(Error::invalid("automorphism table lacks the identity"));
        }
        Ok(())
    }

    fn eval_eisenstein(self: &Arc<Self>, x: &Elem) -> Elem {
        let mut acc = Elem::one(self);
        for j in (0..self.e).rev() {
            let c = Elem {
                t: self.clone(),
                c: self.embed_k(&self.eis[j]),
            };
            acc = acc.mul(x).add(&c);
        }
        acc
    }

    /// Index of the automorphism sending u to `img`, if any.
    pub fn find_auto(self: &Arc<Self>, img: &Elem) -> Option<usize> {
        self.autos.iter().position(|a| {
            Elem {
                t: self.clone(),
                c: a.image.clone(),
            }
            .agrees(img)
        })
    }

    pub fn autos(&self) -> &[Automorphism] {
        &self.autos
    }

    pub fn auto_index(&self, name: &str) -> Option<usize> {
        self.autos.iter().position(|a| a.name == name)
    }

    /// Image of the generator of this unramified level inside the level
    /// `big` (degree a multiple of ours): a root of our modulus among the
    /// Teichmüller roots of unity of order q-1 there.
    pub fn embedding_into(self: &Arc<Self>, big: &Arc<Tower>) -> Result<Elem> {
        if self.e != 1 || big.e != 1 || self.p != big.p || big.f % self.f != 0 {
            return Err(Error::invalid("embedding needs unramified levels with dividing degrees"));
        }
        let p = self.p as u64;
        let q1 = p.pow(self.f as u32) - 1;
        let big_q1 = p.pow(big.f as u32) - 1;
        let y = Elem::generator(big).pow(big_q1 / q1);
        for j in 1..=q1 {
            if num_integer::gcd(j, q1) != 1 && q1 > 1 {
                continue;
            }
            let cand = y.pow(j);
            // monic modulus evaluated by Horner
            let mut acc = Elem::one(big);
            for c in self.modulus.iter().rev() {
                acc = acc.mul(&cand).add(&Elem::from_qp(big, c.clone()));
            }
            if acc.is_zero() {
                return Ok(cand);
            }
        }
        Err(Error::InternalContradiction("no root of the modulus among Teichmüller roots".into()))
    }

    /// The unramified level underneath.
    pub fn base(self: &Arc<Self>) -> Arc<Tower> {
        if self.e == 1 {
            return self.clone();
        }
        let mut t = (**self).clone();
        t.e = 1;
        t.eis = Vec::new();
        t.autos = Vec::new();
        Arc::new(t)
    }

    /// Same unramified level (prime, degree, modulus, precision).
    pub fn same_base(&self, other: &Tower) -> bool {
        self.p == other.p && self.f == other.f && self.prec == other.prec && self.modulus_int == other.modulus_int
    }

    pub fn modulus_int(&self) -> &[BigInt] {
        &self.modulus_int
    }

    /// Eisenstein coefficients as elements of the unramified level, constant
    /// term first; empty for an unramified tower.
    pub fn eisenstein_coeffs(self: &Arc<Self>) -> Vec<Elem> {
        let b = self.base();
        self.eis.iter().map(|c| Elem::from_base_coords(&b, c.clone())).collect()
    }

    /// Image of the uniformizer under an automorphism as a polynomial in `u`
    /// with coefficients in the unramified level.
    pub fn auto_polynomial(self: &Arc<Self>, idx: usize) -> Vec<Elem> {
        let b = self.base();
        self.autos[idx].image.chunks(self.f).map(|c| Elem::from_base_coords(&b, c.to_vec())).collect()
    }

    pub fn degree(&self) -> usize {
        self.f * self.e
    }

    /// Frobenius extends to L fixing u when E has Q_p coefficients.
    pub fn frobenius_fixes_u(&self) -> bool {
        self.eis_is_rational
    }

    fn zero_k(&self) -> Vec<Qp> {
        vec![Qp::zero(self.p); self.f]
    }

    fn kone(&self) -> Vec<Qp> {
        let mut v = self.zero_k();
        v[0] = Qp::one(self.p, self.prec);
        v
    }

    fn gen_coords(&self) -> Vec<Qp> {
        if self.f == 1 {
            vec![self.modulus[0].neg()]
        } else {
            let mut v = self.zero_k();
            v[1] = Qp::one(self.p, self.prec);
            v
        }
    }

    fn kagrees(&self, a: &[Qp], b: &[Qp]) -> bool {
        a.iter().zip(b).all(|(x, y)| x.agrees(y))
    }

    fn kmul(&self, a: &[Qp], b: &[Qp]) -> Vec<Qp> {
        let f = self.f;
        if f == 1 {
            return vec![a[0].mul(&b[0])];
        }
        let mut prod = vec![Qp::zero(self.p); 2 * f - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_exact_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if y.is_exact_zero() {
                    continue;
                }
                prod[i + j] = prod[i + j].add(&x.mul(y));
            }
        }
        for k in (f..2 * f - 1).rev() {
            let c = prod[k].clone();
            if c.is_exact_zero() {
                continue;
            }
            for i in 0..f {
                prod[k - f + i] = prod[k - f + i].sub(&c.mul(&self.modulus[i]));
            }
        }
        prod.truncate(f);
        prod
    }

    fn kpow(&self, a: &[Qp], mut e: u64) -> Vec<Qp> {
        let mut acc = self.kone();
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.kmul(&acc, &b);
            }
            b = self.kmul(&b, &b);
            e >>= 1;
        }
        acc
    }

    fn embed_k(&self, a: &[Qp]) -> Vec<Qp> {
        let mut v = a.to_vec();
        v.resize(self.f * self.e, Qp::zero(self.p));
        v
    }

    fn lmul(&self, a: &[Qp], b: &[Qp]) -> Vec<Qp> {
        let (f, e) = (self.f, self.e);
        if e == 1 {
            return self.kmul(a, b);
        }
        let block_zero = |v: &[Qp], j: usize| v[j * f..(j + 1) * f].iter().all(|z| z.is_exact_zero());
        let mut tmp = vec![self.zero_k(); 2 * e - 1];
        for j1 in 0..e {
            if block_zero(a, j1) {
                continue;
            }
            for j2 in 0..e {
                if block_zero(b, j2) {
                    continue;
                }
                let prod = self.kmul(&a[j1 * f..(j1 + 1) * f], &b[j2 * f..(j2 + 1) * f]);
                for i in 0..f {
                    tmp[j1 + j2][i] = tmp[j1 + j2][i].add(&prod[i]);
                }
            }
        }
        for j in (e..2 * e - 1).rev() {
            let c = tmp[j].clone();
            if c.iter().all(|z| z.is_exact_zero()) {
                continue;
            }
            for i in 0..e {
                let prod = self.kmul(&c, &self.eis[i]);
                for k in 0..f {
                    tmp[j - e + i][k] = tmp[j - e + i][k].sub(&prod[k]);
                }
            }
        }
        tmp.truncate(e);
        tmp.into_iter().flatten().collect()
    }

    fn apply_auto_idx(self: &Arc<Self>, idx: usize, x: &Elem) -> Elem {
        let (f, e) = (self.f, self.e);
        let a = &self.autos[idx];
        let mut out = vec![Qp::zero(self.p); f * e];
        for j in 0..e {
            let blk = &x.c[j * f..(j + 1) * f];
            if blk.iter().all(|z| z.is_exact_zero()) {
                continue;
            }
            for l in 0..e {
                let prod = self.kmul(blk, &a.powers[j][l * f..(l + 1) * f]);
                for k in 0..f {
                    out[l * f + k] = out[l * f + k].add(&prod[k]);
                }
            }
        }
        Elem { t: self.clone(), c: out }
    }
}

fn residually_irreducible(p: u32, f: usize, modulus: &[BigInt]) -> bool {
    if f == 1 {
        return true;
    }
    // x has order dividing q-1 with trivial gcd to lower levels: check
    // x^{p^k} != x for 0 < k < f over F_p[x]/(m).
    let pm = BigInt::from(p);
    let m: Vec<u64> = modulus
        .iter()
        .map(|c| {
            let r = ((c % &pm) + &pm) % &pm;
            u64::try_from(r).unwrap()
        })
        .collect();
    let mut y = vec![0u64; f];
    y[1] = 1;
    let x = y.clone();
    for _ in 1..f {
        y = fp_pow(&y, p as u64, &m, p as u64);
        if y == x {
            return false;
        }
    }
    fp_pow(&y, p as u64, &m, p as u64) == x
}

fn fp_pow(a: &[u64], e: u64, m: &[u64], p: u64) -> Vec<u64> {
    let f = m.len() - 1;
    let mul = |a: &[u64], b: &[u64]| {
        let mut prod = vec![0u64; 2 * f - 1];
        for i in 0..f {
            for j in 0..f {
                prod[i + j] = (prod[i + j] + a[i] * b[j]) % p;
            }
        }
        for k in (f..2 * f - 1).rev() {
            let c = prod[k];
            for i in 0..f {
                prod[k - f + i] = (prod[k - f + i] + p * p - c * m[i] % p) % p;
            }
        }
        prod.truncate(f);
        prod
    };
    let mut acc = vec![0u64; f];
    acc[0] = 1;
    let mut b = a.to_vec();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(&acc, &b);
        }
        b = mul(&b, &b);
        e >>= 1;
    }
    acc
}

#[derive(Clone)]
pub struct Elem {
    t: Arc<Tower>,
    c: Vec<Qp>,
}

impl PartialEq for Elem {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c
    }
}

impl fmt::Debug for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.t.f * self.t.e;
        if n == 1 {
            return write!(f, "{:?}", self.c[0]);
        }
        let nz: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                let (i, j) = (k % self.t.f, k / self.t.f);
                format!("({:?})x^{}u^{}", c, i, j)
            })
            .collect();
        if nz.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", nz.join(" + "))
        }
    }
}

impl Elem {
    pub fn tower(&self) -> &Arc<Tower> {
        &self.t
    }

    pub fn coords(&self) -> &[Qp] {
        &self.c
    }

    pub fn from_coords(t: &Arc<Tower>, c: Vec<Qp>) -> Elem {
        assert_eq!(c.len(), t.f * t.e);
        Elem { t: t.clone(), c }
    }

    pub fn zero(t: &Arc<Tower>) -> Elem {
        Elem {
            t: t.clone(),
            c: vec![Qp::zero(t.p); t.f * t.e],
        }
    }

    pub fn one(t: &Arc<Tower>) -> Elem {
        Self::from_qp(t, Qp::one(t.p, t.prec))
    }

    pub fn from_qp(t: &Arc<Tower>, q: Qp) -> Elem {
        let mut c = vec![Qp::zero(t.p); t.f * t.e];
        c[0] = q;
        Elem { t: t.clone(), c }
    }

    pub fn from_i64(t: &Arc<Tower>, n: i64) -> Elem {
        Self::from_qp(t, Qp::from_i64(t.p, n, t.prec))
    }

    pub fn from_rational(t: &Arc<Tower>, q: &BigRational) -> Elem {
        Self::from_qp(t, Qp::from_rational(t.p, q, t.prec))
    }

    pub fn from_ratio(t: &Arc<Tower>, n: i64, d: i64) -> Elem {
        Self::from_rational(t, &BigRational::new(n.into(), d.into()))
    }

    /// Base-level element from coordinates on 1, x, ..., x^{f-1}.
    pub fn from_base_coords(t: &Arc<Tower>, k: Vec<Qp>) -> Elem {
        assert_eq!(k.len(), t.f);
        Elem {
            t: t.clone(),
            c: t.embed_k(&k),
        }
    }

    /// Teichmüller generator of the unramified level.
    pub fn generator(t: &Arc<Tower>) -> Elem {
        Elem {
            t: t.clone(),
            c: t.embed_k(&t.gen_coords()),
        }
    }

    pub fn uniformizer(t: &Arc<Tower>) -> Elem {
        if t.e == 1 {
            return Self::from_i64(t, t.p as i64);
        }
        let mut c = vec![Qp::zero(t.p); t.f * t.e];
        c[t.f] = Qp::one(t.p, t.prec);
        Elem { t: t.clone(), c }
    }

    /// Teichmüller root of unity `zeta_d^j`, requiring `d | q-1`.
    pub fn root_of_unity(t: &Arc<Tower>, d: u64, j: u64) -> Result<Elem> {
        let q1 = (t.p as u64).pow(t.f as u32) - 1;
        if d == 0 || q1 % d != 0 {
            return Err(Error::FieldIncompatibility(format!(
                "no root of unity of order {d} at unramified level {}",
                t.f
            )));
        }
        Ok(Self::generator(t).pow((q1 / d) * (j % d)))
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|z| z.is_zero())
    }

    pub fn is_exact_zero(&self) -> bool {
        self.c.iter().all(|z| z.is_exact_zero())
    }

    /// Inexact zero: zero at precision without being exactly zero.
    pub fn is_inexact_zero(&self) -> bool {
        self.is_zero() && !self.is_exact_zero()
    }

    /// Valuation in units of 1/e; `None` when zero at precision.
    pub fn valuation_units(&self) -> Option<i64> {
        let (f, e) = (self.t.f, self.t.e as i64);
        self.c
            .iter()
            .enumerate()
            .filter_map(|(k, q)| q.valuation().map(|v| v * e + (k / f) as i64))
            .min()
    }

    /// Valuation normalized so that v(p) = 1, as a rational.
    pub fn valuation_q(&self) -> Option<BigRational> {
        self.valuation_units().map(|v| BigRational::new(v.into(), (self.t.e as i64).into()))
    }

    /// Integer valuation for base-level elements.
    pub fn valuation(&self) -> Option<i64> {
        let v = self.valuation_units()?;
        Some(v.div_euclid(self.t.e as i64))
    }

    /// Absolute precision in units of 1/e; `None` if exact zero.
    pub fn abs_prec_units(&self) -> Option<i64> {
        let (f, e) = (self.t.f, self.t.e as i64);
        self.c
            .iter()
            .enumerate()
            .filter_map(|(k, q)| q.abs_prec().map(|a| a * e + (k / f) as i64))
            .min()
    }

    /// Relative precision in units of 1/e.
    pub fn rel_prec_units(&self) -> Option<i64> {
        Some(self.abs_prec_units()? - self.valuation_units()?)
    }

    /// Zero at precision or of valuation at least `bound` (units of 1/e).
    pub fn is_small(&self, bound: i64) -> bool {
        match self.valuation_units() {
            None => true,
            Some(v) => v >= bound,
        }
    }

    pub fn agrees(&self, other: &Elem) -> bool {
        self.sub(other).is_zero()
    }

    /// Whether the element lies in the unramified level.
    pub fn is_base(&self) -> bool {
        self.c[self.t.f..].iter().all(|z| z.is_zero())
    }

    /// Whether the element lies in Q_p.
    pub fn is_prime_field(&self) -> bool {
        self.c[1..].iter().all(|z| z.is_zero())
    }

    pub fn base_coords(&self) -> &[Qp] {
        &self.c[..self.t.f]
    }

    /// Image in a larger unramified level under the embedding sending our
    /// generator to `gen_image`.
    pub fn embed_via(&self, gen_image: &Elem) -> Elem {
        debug_assert!(self.t.e == 1);
        let big = gen_image.tower();
        let mut acc = Elem::zero(big);
        let mut pw = Elem::one(big);
        for c in &self.c {
            if !c.is_exact_zero() {
                acc = acc.add(&pw.mul_qp(c));
            }
            pw = pw.mul(gen_image);
        }
        acc
    }

    /// Moves the element into another tower over the same unramified level.
    pub fn embed(&self, into: &Arc<Tower>) -> Elem {
        if Arc::ptr_eq(&self.t, into) {
            return self.clone();
        }
        debug_assert!(self.t.same_base(into), "towers over different bases");
        let (f, e_from) = (self.t.f, self.t.e);
        let mut c = vec![Qp::zero(into.p); into.f * into.e];
        if e_from == into.e {
            c.clone_from_slice(&self.c);
        } else {
            debug_assert!(self.is_base(), "cannot embed ramified element into another tower");
            c[..f].clone_from_slice(&self.c[..f]);
        }
        Elem { t: into.clone(), c }
    }

    pub fn add(&self, o: &Elem) -> Elem {
        Elem {
            t: self.t.clone(),
            c: self.c.iter().zip(&o.c).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Elem) -> Elem {
        Elem {
            t: self.t.clone(),
            c: self.c.iter().zip(&o.c).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn neg(&self) -> Elem {
        Elem {
            t: self.t.clone(),
            c: self.c.iter().map(|a| a.neg()).collect(),
        }
    }

    pub fn mul(&self, o: &Elem) -> Elem {
        debug_assert!(self.t.same_base(&o.t) && self.t.e == o.t.e);
        Elem {
            t: self.t.clone(),
            c: self.t.lmul(&self.c, &o.c),
        }
    }

    pub fn mul_i64(&self, n: i64) -> Elem {
        Elem {
            t: self.t.clone(),
            c: self.c.iter().map(|a| a.mul_int(n)).collect(),
        }
    }

    pub fn mul_qp(&self, q: &Qp) -> Elem {
        Elem {
            t: self.t.clone(),
            c: self.c.iter().map(|a| a.mul(q)).collect(),
        }
    }

    /// Multiplication by p^k.
    pub fn shift(&self, k: i64) -> Elem {
        Elem {
            t: self.t.clone(),
            c: self.c.iter().map(|a| a.shift(k)).collect(),
        }
    }

    pub fn pow(&self, mut e: u64) -> Elem {
        let mut acc = Elem::one(&self.t);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self) -> Result<Elem> {
        let n = self.t.f * self.t.e;
        if self.is_zero() {
            return Err(Error::precision("inversion of an element indistinguishable from zero"));
        }
        if n == 1 {
            return Ok(Elem {
                t: self.t.clone(),
                c: vec![self.c[0].inv().unwrap()],
            });
        }
        // solve (multiplication by self) y = 1 over Q_p
        let mut cols = Vec::with_capacity(n);
        for k in 0..n {
            let mut b = vec![Qp::zero(self.t.p); n];
            b[k] = Qp::one(self.t.p, self.t.prec);
            cols.push(self.t.lmul(&self.c, &b));
        }
        let mut rhs = vec![Qp::zero(self.t.p); n];
        rhs[0] = Qp::one(self.t.p, self.t.prec);
        let sol = qp_solve_square(cols, rhs).ok_or_else(|| Error::precision("multiplication matrix not certifiably invertible"))?;
        Ok(Elem { t: self.t.clone(), c: sol })
    }

    pub fn div(&self, o: &Elem) -> Result<Elem> {
        Ok(self.mul(&o.inv()?))
    }

    /// Frobenius on the unramified part; fixes u when E has Q_p coefficients.
    pub fn frobenius(&self) -> Elem {
        self.apply_coeff_map(&self.t.frob)
    }

    pub fn frobenius_inv(&self) -> Elem {
        self.apply_coeff_map(&self.t.frob_inv)
    }

    pub fn frobenius_pow(&self, k: i64) -> Elem {
        let f = self.t.f as i64;
        let k = k.rem_euclid(f);
        let mut x = self.clone();
        for _ in 0..k {
            x = x.frobenius();
        }
        x
    }

    fn apply_coeff_map(&self, map: &[Vec<Qp>]) -> Elem {
        let (f, e) = (self.t.f, self.t.e);
        if f == 1 {
            return self.clone();
        }
        debug_assert!(e == 1 || self.t.eis_is_rational || self.is_base());
        let mut out = vec![Qp::zero(self.t.p); f * e];
        for j in 0..e {
            for i in 0..f {
                let c = &self.c[j * f + i];
                if c.is_exact_zero() {
                    continue;
                }
                for k in 0..f {
                    out[j * f + k] = out[j * f + k].add(&c.mul(&map[i][k]));
                }
            }
        }
        Elem { t: self.t.clone(), c: out }
    }

    /// Galois automorphism of L/K by table index.
    pub fn apply_auto(&self, idx: usize) -> Elem {
        self.t.apply_auto_idx(idx, self)
    }

    /// Rational approximation when this is a Q_p element.
    pub fn to_rational(&self) -> Option<BigRational> {
        if self.is_prime_field() {
            Some(self.c[0].to_rational())
        } else {
            None
        }
    }

    pub fn is_one(&self) -> bool {
        self.agrees(&Elem::one(&self.t))
    }
}

/// Square solve over Q_p by column list `cols[k]` (the k-th column), with
/// full valuation pivoting. `None` if a pivot vanishes at precision.
pub fn qp_solve_square(cols: Vec<Vec<Qp>>, rhs: Vec<Qp>) -> Option<Vec<Qp>> {
    let n = rhs.len();
    let mut a: Vec<Vec<Qp>> = (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect();
    let mut b = rhs;
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut best: Option<(usize, usize, i64)> = None;
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, x) in row.iter().enumerate().skip(k) {
                if let Some(v) = x.valuation() {
                    if best.map_or(true, |(_, _, bv)| v < bv) {
                        best = Some((i, j, v));
                    }
                }
            }
        }
        let (bi, bj, _) = best?;
        a.swap(k, bi);
        b.swap(k, bi);
        if bj != k {
            for row in a.iter_mut() {
                row.swap(k, bj);
            }
            perm.swap(k, bj);
        }
        let inv = a[k][k].inv()?;
        for i in k + 1..n {
            if a[i][k].is_exact_zero() {
                continue;
            }
            let factor = a[i][k].mul(&inv);
            for j in k..n {
                let t = factor.mul(&a[k][j]);
                a[i][j] = a[i][j].sub(&t);
            }
            let t = factor.mul(&b[k]);
            b[i] = b[i].sub(&t);
        }
    }
    let mut x = vec![Qp::zero(b[0].prime()); n];
    for k in (0..n).rev() {
        let mut s = b[k].clone();
        for j in k + 1..n {
            s = s.sub(&a[k][j].mul(&x[j]));
        }
        x[k] = s.div(&a[k][k])?;
    }
    let mut out = vec![Qp::zero(b[0].prime()); n];
    for k in 0..n {
        out[perm[k]] = x[k].clone();
    }
    Some(out)
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn is_zero_rational(q: &BigRational) -> bool {
    q.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q4() -> Arc<Tower> {
        Tower::unramified(2, 2, 40).unwrap()
    }

    #[test]
    fn frobenius_squares_the_generator() {
        let t = q4();
        let x = Elem::generator(&t);
        assert!(x.frobenius().agrees(&x.mul(&x)));
        assert!(x.frobenius().frobenius().agrees(&x));
    }

    #[test]
    fn frobenius_fixes_rationals() {
        let t = q4();
        let seven = Elem::from_i64(&t, 7);
        assert!(seven.frobenius().agrees(&seven));
    }

    #[test]
    fn inverse_in_q4() {
        let t = q4();
        let x = Elem::generator(&t).add(&Elem::from_i64(&t, 3));
        let y = x.inv().unwrap();
        assert!(x.mul(&y).is_one());
    }

    #[test]
    fn sqrt2_extension_valuations() {
        let base = Tower::unramified(2, 1, 40).unwrap();
        let coeffs = vec![Elem::from_i64(&base, -2), Elem::zero(&base)];
        let autos = vec![
            ("id".to_string(), vec![Elem::zero(&base), Elem::one(&base)]),
            ("c".to_string(), vec![Elem::zero(&base), Elem::from_i64(&base, -1)]),
        ];
        let l = Tower::eisenstein(&base, &coeffs, &autos).unwrap();
        let u = Elem::uniformizer(&l);
        assert_eq!(u.valuation_units(), Some(1));
        assert!(u.mul(&u).agrees(&Elem::from_i64(&l, 2)));
        let x = Elem::one(&l).add(&u);
        let cx = x.apply_auto(1);
        // (1 + u)(1 - u) = -1
        assert!(x.mul(&cx).agrees(&Elem::from_i64(&l, -1)));
        assert!(x.inv().unwrap().mul(&x).is_one());
    }

    #[test]
    fn bad_automorphism_rejected() {
        let base = Tower::unramified(2, 1, 30).unwrap();
        let coeffs = vec![Elem::from_i64(&base, -2), Elem::zero(&base)];
        let autos = vec![
            ("id".to_string(), vec![Elem::zero(&base), Elem::one(&base)]),
            ("bad".to_string(), vec![Elem::zero(&base), Elem::from_i64(&base, 3)]),
        ];
        assert!(Tower::eisenstein(&base, &coeffs, &autos).is_err());
    }

    #[test]
    fn teichmuller_roots_in_q5() {
        let t = Tower::unramified(5, 1, 30).unwrap();
        let i = Elem::root_of_unity(&t, 4, 1).unwrap();
        assert!(i.mul(&i).agrees(&Elem::from_i64(&t, -1)));
    }

    #[test]
    fn non_prime_rejected() {
        assert!(matches!(Tower::unramified(4, 1, 10), Err(Error::NotPrime(4))));
        let _ = BigInt::zero();
    }
}

#[cfg(test)]
mod embedding_tests {
    use super::*;

    #[test]
    fn q4_embeds_in_q16_compatibly_with_frobenius() {
        let small = Tower::unramified(2, 2, 30).unwrap();
        let big = Tower::unramified(2, 4, 30).unwrap();
        let y = small.embedding_into(&big).unwrap();
        let x = Elem::generator(&small).add(&Elem::from_i64(&small, 5));
        let img = x.embed_via(&y);
        assert!(img.frobenius().agrees(&x.frobenius().embed_via(&y)));
        assert!(img.frobenius().frobenius().agrees(&img));
    }
}
