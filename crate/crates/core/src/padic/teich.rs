//! Teichmüller presentation of the unramified extension of degree f.
//!
//! The modulus is the minimal polynomial over Z_p of a Teichmüller root of
//! unity of order q-1, so Frobenius acts as x -> x^p.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use super::qp::ppow;

/// Polynomial arithmetic over F_p, coefficient vectors constant-first.
fn fp_mulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let f = m.len() - 1;
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for k in (f..prod.len()).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        for i in 0..=f {
            prod[k - f + i] = (prod[k - f + i] + p - (c * m[i]) % p) % p;
        }
    }
    prod.truncate(f);
    prod.resize(f, 0);
    prod
}

fn fp_powmod(base: &[u64], mut e: u128, m: &[u64], p: u64) -> Vec<u64> {
    let f = m.len() - 1;
    let mut acc = vec![0u64; f];
    acc[0] = 1;
    let mut b = base.to_vec();
    b.resize(f, 0);
    while e > 0 {
        if e & 1 == 1 {
            acc = fp_mulmod(&acc, &b, m, p);
        }
        b = fp_mulmod(&b, &b, m, p);
        e >>= 1;
    }
    acc
}

fn prime_factors(mut n: u128) -> Vec<u128> {
    let mut out = Vec::new();
    let mut d = 2u128;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Lexicographically first monic primitive polynomial of degree `f` over F_p.
pub fn primitive_poly(p: u32, f: usize) -> Vec<u64> {
    let p = p as u64;
    let q1 = (p as u128).pow(f as u32) - 1;
    let factors = prime_factors(q1);
    let count = (p as u128).pow(f as u32);
    for idx in 0..count {
        let mut m = vec![0u64; f + 1];
        let mut t = idx;
        for c in m.iter_mut().take(f) {
            *c = (t % p as u128) as u64;
            t /= p as u128;
        }
        m[f] = 1;
        if m[0] == 0 {
            continue;
        }
        let x: Vec<u64> = if f == 1 { vec![(p - m[0]) % p] } else { vec![0, 1] };
        let one = {
            let mut v = vec![0u64; f];
            v[0] = 1;
            v
        };
        if fp_powmod(&x, q1, &m, p) != one {
            continue;
        }
        if factors.iter().all(|&l| fp_powmod(&x, q1 / l, &m, p) != one) {
            return m;
        }
    }
    unreachable!("primitive polynomials exist in every degree")
}

/// Arithmetic in (Z/p^N)[x]/(g) for a monic integer lift g.
struct ResRing {
    modulus: BigUint,
    g: Vec<BigUint>,
}

impl ResRing {
    fn reduce(&self, a: &mut Vec<BigUint>) {
        let f = self.g.len() - 1;
        for k in (f..a.len()).rev() {
            let c = a[k].clone() % &self.modulus;
            if c.is_zero() {
                continue;
            }
            for i in 0..f {
                let sub = (&c * &self.g[i]) % &self.modulus;
                a[k - f + i] = (&a[k - f + i] + &self.modulus - sub) % &self.modulus;
            }
        }
        a.truncate(f);
        a.resize(f, BigUint::zero());
        for c in a.iter_mut() {
            *c %= &self.modulus;
        }
    }

    fn mul(&self, a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
        let mut prod = vec![BigUint::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        self.reduce(&mut prod);
        prod
    }

    fn pow(&self, a: &[BigUint], e: &BigUint) -> Vec<BigUint> {
        let f = self.g.len() - 1;
        let mut acc = vec![BigUint::zero(); f];
        acc[0] = BigUint::one();
        let mut b = a.to_vec();
        let bits = e.bits();
        for i in 0..bits {
            if e.bit(i) {
                acc = self.mul(&acc, &b);
            }
            if i + 1 < bits {
                b = self.mul(&b, &b);
            }
        }
        acc
    }
}

/// Teichmüller modulus of degree `f` modulo `p^prec`, as integers in
/// `[0, p^prec)`, constant first, monic.
pub fn teichmuller_modulus(p: u32, f: usize, prec: u32) -> Vec<BigInt> {
    let gbar = primitive_poly(p, f);
    let modulus = ppow(p, prec);
    if f == 1 {
        // root of x - t where t is the Teichmüller lift of a primitive root
        let mut t = BigUint::from((p as u64 - gbar[0] % p as u64) % p as u64);
        for _ in 0..=prec {
            t = t.modpow(&BigUint::from(p), &modulus);
        }
        let c0 = (&modulus - &t) % &modulus;
        return vec![BigInt::from(c0), BigInt::one()];
    }
    let ring = ResRing {
        modulus: modulus.clone(),
        g: gbar.iter().map(|&c| BigUint::from(c)).collect(),
    };
    let q = ppow(p, f as u32);
    let mut t = vec![BigUint::zero(); f];
    t[1] = BigUint::one();
    for _ in 0..=prec {
        t = ring.pow(&t, &q);
    }
    // minimal polynomial: prod_{i<f} (X - t^{p^i}), coefficients in R
    let pb = BigUint::from(p);
    let mut conj = t.clone();
    let zero_r = vec![BigUint::zero(); f];
    let mut one_r = zero_r.clone();
    one_r[0] = BigUint::one();
    let mut poly: Vec<Vec<BigUint>> = vec![one_r];
    for _ in 0..f {
        // poly *= (X - conj)
        let mut next = vec![zero_r.clone(); poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            for i in 0..f {
                next[k + 1][i] = (&next[k + 1][i] + &c[i]) % &modulus;
            }
            let prod = ring.mul(c, &conj);
            for i in 0..f {
                next[k][i] = (&next[k][i] + &modulus - &prod[i]) % &modulus;
            }
        }
        poly = next;
        conj = ring.pow(&conj, &pb);
    }
    poly.iter()
        .map(|c| {
            debug_assert!(c[1..].iter().all(|z| z.is_zero()), "modulus coefficient not in Z_p");
            BigInt::from(c[0].clone())
        })
        .collect()
}

/// Symmetric residue in `(-m/2, m/2]`, for readable output.
pub fn symmetric(n: &BigInt, m: &BigUint) -> BigInt {
    let mi = BigInt::from(m.clone());
    let r = n.mod_floor(&mi);
    if r.clone() * 2 > mi {
        r - mi
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q4_modulus_is_x2_x_1() {
        let m = teichmuller_modulus(2, 2, 40);
        let mm = ppow(2, 40);
        let sym: Vec<BigInt> = m.iter().map(|c| symmetric(c, &mm)).collect();
        assert_eq!(sym, vec![BigInt::from(1), BigInt::from(1), BigInt::from(1)]);
    }

    #[test]
    fn primitive_poly_small_cases() {
        assert_eq!(primitive_poly(2, 3), vec![1, 1, 0, 1]);
        assert_eq!(primitive_poly(3, 1), vec![1, 1]);
    }

    #[test]
    fn q5_teichmuller_root_has_order_four() {
        let m = teichmuller_modulus(5, 1, 30);
        let modulus = ppow(5, 30);
        let t = (BigInt::from(modulus.clone()) - &m[0]).magnitude().clone() % &modulus;
        assert_eq!(t.modpow(&BigUint::from(4u32), &modulus), BigUint::one());
        assert_ne!(t.modpow(&BigUint::from(2u32), &modulus), BigUint::one());
    }
}
