//! Reference computations over Z and Q, written without the library's
//! p-adic machinery.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Exponent of the prime `p` in Minkowski's bound `M(n)`:
/// `Σ_k ⌊n / (p^k (p-1))⌋`.
pub fn minkowski_r(n: u64, p: u64) -> u64 {
    let mut r = 0;
    let mut d = p - 1;
    while d <= n {
        r += n / d;
        d *= p;
    }
    r
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

pub fn minkowski(n: u64) -> BigUint {
    (2..=n + 1)
        .filter(|&p| is_prime(p))
        .fold(BigUint::one(), |acc, p| acc * BigUint::from(p).pow(minkowski_r(n, p) as u32))
}

pub fn vp_int(p: u64, n: &BigInt) -> i64 {
    assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (qt, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        n = qt;
        v += 1;
    }
}

pub fn vp(p: u64, x: &Q) -> i64 {
    vp_int(p, x.numer()) - vp_int(p, x.denom())
}

pub fn mat_mul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let (n, m, k) = (a.len(), b[0].len(), b.len());
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).fold(Q::zero(), |s, l| s + &a[i][l] * &b[l][j])).collect())
        .collect()
}

/// Characteristic polynomial `det(xI - A)`, constant term first, by
/// Faddeev–LeVerrier.
pub fn charpoly(a: &[Vec<Q>]) -> Vec<Q> {
    let n = a.len();
    let mut c = vec![Q::zero(); n + 1];
    c[n] = Q::one();
    let mut m = vec![vec![Q::zero(); n]; n];
    for k in 1..=n {
        let mut next = mat_mul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &c[n + 1 - k];
        }
        m = next;
        let am = mat_mul(a, &m);
        let tr = (0..n).fold(Q::zero(), |s, i| s + &am[i][i]);
        c[n - k] = -tr / q(k as i64);
    }
    c
}

/// Valuations of the roots of `Σ c_i x^i`, ascending, with multiplicity.
pub fn root_valuations(p: u64, c: &[Q]) -> Vec<Q> {
    let pts: Vec<(i64, i64)> = c.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, x)| (i as i64, vp(p, x))).collect();
    assert_eq!(pts[0].0, 0, "zero constant term");
    // lower convex hull
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b if it lies on or above segment a-pt
            if (b.1 - a.1) * (pt.0 - a.0) >= (pt.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut out = Vec::new();
    for w in hull.windows(2) {
        let (i1, v1) = w[0];
        let (i2, v2) = w[1];
        let s = Q::new(BigInt::from(v1 - v2), BigInt::from(i2 - i1));
        out.extend(std::iter::repeat(s).take((i2 - i1) as usize));
    }
    out.sort();
    out
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn rank_int(rows: &[Vec<BigInt>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m = rows.to_vec();
    let (n, c) = (m.len(), m[0].len());
    let mut prev = BigInt::one();
    let mut r = 0;
    for col in 0..c {
        let Some(piv) = (r..n).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(r, piv);
        for i in r + 1..n {
            for j in col + 1..c {
                let v = (&m[r][col] * &m[i][j] - &m[i][col] * &m[r][j]) / &prev;
                m[i][j] = v;
            }
            m[i][col] = BigInt::zero();
        }
        prev = m[r][col].clone();
        r += 1;
        if r == n {
            break;
        }
    }
    r
}

/// Rank of a rational matrix, via clearing denominators row by row.
pub fn rank_q(rows: &[Vec<Q>]) -> usize {
    let ints: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            row.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();
    rank_int(&ints)
}

/// Inverse of an invertible rational matrix by Gauss–Jordan.
pub fn inverse_q(a: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&i| !m[i][col].is_zero()).expect("singular");
        m.swap(col, piv);
        let inv = m[col][col].recip();
        for x in m[col].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i != col && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for j in 0..2 * n {
                    let t = &f * &m[col][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Eigenvalue multiplicities of `ρ(g)` for `g` of order `m`, recovered from
/// character values mod `q` by discrete Fourier inversion over `⟨g⟩`:
/// `#{ζ^j} = (1/m) Σ_k χ(g^k) ζ^{-jk}`. Entry `j` counts `z^j`, `z` of order `e`.
pub fn eigen_counts(chi_powers: &[u64], e: u64, z: u64, q: u64) -> Vec<u64> {
    let m = chi_powers.len() as u64;
    let minv = powmod(m % q, q - 2, q);
    (0..e)
        .map(|j| {
            let lam = powmod(z, j, q);
            if powmod(lam, m, q) != 1 {
                return 0;
            }
            let lam_inv = powmod(lam, q - 2, q);
            let s = chi_powers
                .iter()
                .enumerate()
                .fold(0u64, |acc, (k, &c)| (acc + c * powmod(lam_inv, k as u64, q)) % q);
            s * minv % q
        })
        .collect()
}
