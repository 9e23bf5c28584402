//! Complex character tables by the Burnside–Dixon method.
//!
//! Characters are computed over a prime field F_q with q ≡ 1 mod the group
//! exponent, then lifted exactly: the value at g is recorded as the
//! multiplicity of each e-th root of unity among the eigenvalues of ρ(g).

use serde::Serialize;

use super::group::FiniteGroup;
use crate::error::{Error, Result};
use crate::padic::field::is_prime;

pub const ORDER_CEILING: usize = 512;

fn mulmod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    a %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, q);
        }
        a = mulmod(a, a, q);
        e >>= 1;
    }
    acc
}

fn invmod(a: u64, q: u64) -> u64 {
    powmod(a, q - 2, q)
}

/// Kernel of an r x c matrix over F_q, as a list of vectors.
fn kernel_fq(m: &[Vec<u64>], cols: usize, q: u64) -> Vec<Vec<u64>> {
    let mut a: Vec<Vec<u64>> = m.to_vec();
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..rows).find(|&i| a[i][c] != 0) else { continue };
        a.swap(r, pr);
        let inv = invmod(a[r][c], q);
        for x in a[r].iter_mut() {
            *x = mulmod(*x, inv, q);
        }
        for i in 0..rows {
            if i != r && a[i][c] != 0 {
                let f = a[i][c];
                for j in 0..cols {
                    let t = mulmod(f, a[r][j], q);
                    a[i][j] = (a[i][j] + q - t) % q;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![0u64; cols];
            v[fc] = 1;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = (q - a[row][fc]) % q;
            }
            v
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Character {
    pub degree: usize,
    /// Values in F_q per class.
    pub values_mod_q: Vec<u64>,
    /// Per class: multiplicity of ζ_e^j among eigenvalues, j in 0..e.
    pub eigen: Vec<Vec<u32>>,
}

#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub classes: Vec<Vec<usize>>,
    pub class_of: Vec<usize>,
    pub exponent: usize,
    pub q: u64,
    /// Fixed primitive e-th root of unity in F_q standing for ζ_e.
    pub z: u64,
    pub chars: Vec<Character>,
    order: usize,
    /// For each class, the class of g^j for j in 0..e.
    power_class: Vec<Vec<usize>>,
}

fn choose_prime(e: u64, n: u64) -> u64 {
    let bound = 2.0 * (n as f64).sqrt();
    let mut q = e + 1;
    loop {
        if is_prime(q) && (q as f64) > bound {
            return q;
        }
        q += e;
    }
}

fn primitive_root_of_order(e: u64, q: u64) -> u64 {
    let factors: Vec<u64> = (2..=e).filter(|&d| e % d == 0 && is_prime(d)).collect();
    for g in 2..q {
        let z = powmod(g, (q - 1) / e, q);
        if powmod(z, e, q) == 1 && factors.iter().all(|&l| powmod(z, e / l, q) != 1) {
            return z;
        }
    }
    1
}

impl CharacterTable {
    pub fn new(g: &FiniteGroup) -> Result<CharacterTable> {
        let n = g.order();
        if n > ORDER_CEILING {
            return Err(Error::invalid(format!("group order {n} exceeds the character-table ceiling {ORDER_CEILING}")));
        }
        let classes = g.classes();
        let r = classes.len();
        let mut class_of = vec![0; n];
        for (k, c) in classes.iter().enumerate() {
            for &x in c {
                class_of[x] = k;
            }
        }
        let e = g.exponent();
        let q = choose_prime(e as u64, n as u64);
        let z = primitive_root_of_order(e as u64, q);
        // class multiplication coefficients: M_i[j][k] = #{x in C_i : x^{-1} z_k in C_j}
        let mut mats = vec![vec![vec![0u64; r]; r]; r];
        for (i, ci) in classes.iter().enumerate() {
            for (k, ck) in classes.iter().enumerate() {
                let zk = ck[0];
                for &x in ci {
                    let j = class_of[g.mul(g.inv(x), zk)];
                    mats[i][j][k] += 1;
                }
            }
        }
        // refine the whole space into common eigenlines
        let mut spaces: Vec<Vec<Vec<u64>>> = vec![(0..r).map(|i| (0..r).map(|j| u64::from(i == j)).collect()).collect()];
        for m in mats.iter().skip(1) {
            if spaces.iter().all(|s| s.len() == 1) {
                break;
            }
            let mut next = Vec::new();
            for basis in spaces {
                if basis.len() == 1 {
                    next.push(basis);
                    continue;
                }
                // image of each basis vector
                let images: Vec<Vec<u64>> = basis
                    .iter()
                    .map(|b| {
                        (0..r)
                            .map(|row| (0..r).fold(0, |acc, col| (acc + mulmod(m[row][col], b[col], q)) % q))
                            .collect()
                    })
                    .collect();
                let d = basis.len();
                let mut found = 0;
                for lam in 0..q {
                    // sum_t c_t (M b_t - lam b_t) = 0
                    let sys: Vec<Vec<u64>> = (0..r)
                        .map(|row| (0..d).map(|t| (images[t][row] + q - mulmod(lam, basis[t][row], q)) % q).collect())
                        .collect();
                    let ker = kernel_fq(&sys, d, q);
                    if ker.is_empty() {
                        continue;
                    }
                    let sub: Vec<Vec<u64>> = ker
                        .iter()
                        .map(|c| (0..r).map(|row| (0..d).fold(0, |acc, t| (acc + mulmod(c[t], basis[t][row], q)) % q)).collect())
                        .collect();
                    found += sub.len();
                    next.push(sub);
                    if found == d {
                        break;
                    }
                }
                if found != d {
                    return Err(Error::InternalContradiction("class matrix not diagonalizable over F_q".into()));
                }
            }
            spaces = next;
        }
        if spaces.len() != r {
            return Err(Error::InternalContradiction("class matrices do not separate characters".into()));
        }
        let inv_class: Vec<usize> = classes.iter().map(|c| class_of[g.inv(c[0])]).collect();
        let mut power_class = vec![vec![0; e]; r];
        for (k, c) in classes.iter().enumerate() {
            let mut x = 0;
            for j in 0..e {
                power_class[k][j] = class_of[x];
                x = g.mul(x, c[0]);
            }
        }
        let einv = invmod(e as u64 % q, q);
        let mut chars = Vec::new();
        for s in spaces {
            let w = &s[0];
            let w0inv = invmod(w[0], q);
            let omega: Vec<u64> = w.iter().map(|&x| mulmod(x, w0inv, q)).collect();
            let mut sum = 0;
            for k in 0..r {
                let t = mulmod(mulmod(omega[k], omega[inv_class[k]], q), invmod(classes[k].len() as u64 % q, q), q);
                sum = (sum + t) % q;
            }
            let d2 = mulmod(n as u64 % q, invmod(sum, q), q);
            let degree = (1..=n as u64)
                .take_while(|d| d * d <= n as u64)
                .find(|d| (d * d) % q == d2)
                .ok_or_else(|| Error::InternalContradiction("no integral degree".into()))? as usize;
            let values: Vec<u64> = (0..r)
                .map(|k| mulmod(mulmod(omega[k], degree as u64, q), invmod(classes[k].len() as u64 % q, q), q))
                .collect();
            let mut eigen = Vec::with_capacity(r);
            for k in 0..r {
                let mut m = vec![0u32; e];
                let mut total = 0usize;
                for (j, slot) in m.iter_mut().enumerate() {
                    let mut acc = 0;
                    for l in 0..e {
                        let zz = powmod(z, ((e - (j * l) % e) % e) as u64, q);
                        acc = (acc + mulmod(values[power_class[k][l]], zz, q)) % q;
                    }
                    let v = mulmod(acc, einv, q);
                    if v as usize > degree {
                        return Err(Error::InternalContradiction("eigenvalue multiplicity out of range".into()));
                    }
                    *slot = v as u32;
                    total += v as usize;
                }
                if total != degree {
                    return Err(Error::InternalContradiction("eigenvalue multiplicities do not sum to the degree".into()));
                }
                eigen.push(m);
            }
            chars.push(Character {
                degree,
                values_mod_q: values,
                eigen,
            });
        }
        chars.sort_by(|a, b| a.degree.cmp(&b.degree).then(a.eigen.cmp(&b.eigen)));
        // trivial character first
        let table = CharacterTable {
            classes,
            class_of,
            exponent: e,
            q,
            z,
            chars,
            order: n,
            power_class,
        };
        table.check_orthogonality()?;
        Ok(table)
    }

    fn check_orthogonality(&self) -> Result<()> {
        let q = self.q;
        let r = self.classes.len();
        let sum_sq: usize = self.chars.iter().map(|c| c.degree * c.degree).sum();
        if sum_sq != self.order {
            return Err(Error::InternalContradiction("degrees do not satisfy the sum of squares".into()));
        }
        for a in &self.chars {
            for b in &self.chars {
                let mut s = 0;
                for k in 0..r {
                    let kinv = self.power_class[k][self.exponent - 1];
                    let t = mulmod(self.classes[k].len() as u64, mulmod(a.values_mod_q[k], b.values_mod_q[kinv], q), q);
                    s = (s + t) % q;
                }
                let expect = if a == b { self.order as u64 % q } else { 0 };
                if s != expect {
                    return Err(Error::InternalContradiction("row orthogonality fails".into()));
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Class of `g^j` for the class representative `g`.
    pub fn power_class(&self, class: usize, j: usize) -> usize {
        self.power_class[class][j % self.exponent]
    }

    /// Dual character index.
    pub fn dual(&self, i: usize) -> usize {
        let e = self.exponent;
        let target: Vec<Vec<u32>> = self.chars[i].eigen.iter().map(|m| (0..e).map(|j| m[(e - j) % e]).collect()).collect();
        self.chars.iter().position(|c| c.eigen == target).expect("dual character exists")
    }

    /// Character obtained by applying ζ_e ↦ ζ_e^a.
    pub fn galois(&self, i: usize, a: usize) -> usize {
        let e = self.exponent;
        let target: Vec<Vec<u32>> = self.chars[i]
            .eigen
            .iter()
            .map(|m| {
                let mut out = vec![0u32; e];
                for (j, &c) in m.iter().enumerate() {
                    out[(a * j) % e] += c;
                }
                out
            })
            .collect();
        self.chars.iter().position(|c| c.eigen == target).expect("Galois conjugate character exists")
    }

    /// Units `a mod e` realized by Gal(K(ζ_e)/K) for K unramified of degree
    /// `f` over Q_p: arbitrary on the p-part, powers of p^f on the rest.
    pub fn galois_units(&self, p: u64, f: u32) -> Vec<usize> {
        let e = self.exponent;
        let mut ep = e;
        while ep % p as usize == 0 {
            ep /= p as usize;
        }
        let pf = (p as usize).pow(f) % ep.max(1);
        let mut powers = vec![1 % ep.max(1)];
        loop {
            let nx = powers.last().unwrap() * pf % ep.max(1);
            if powers.contains(&nx) {
                break;
            }
            powers.push(nx);
        }
        (1..=e)
            .filter(|&a| num_integer::gcd(a, e) == 1 && powers.contains(&(a % ep.max(1))))
            .map(|a| a % e)
            .collect()
    }

    /// Every unit mod e (conjugacy over Q).
    pub fn all_units(&self) -> Vec<usize> {
        let e = self.exponent;
        (1..=e).filter(|&a| num_integer::gcd(a, e) == 1).map(|a| a % e).collect()
    }

    /// Orbit of a character under the given units.
    pub fn orbit(&self, i: usize, units: &[usize]) -> Vec<usize> {
        let mut o: Vec<usize> = units.iter().map(|&a| self.galois(i, a)).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    /// Whether an element of the class is perturbateur for the character.
    pub fn is_perturbateur_in(&self, i: usize, class: usize) -> bool {
        let c = &self.chars[i];
        c.eigen[class].iter().all(|&m| 2 * m as usize <= c.degree)
    }

    /// First element (by index) perturbateur for the character.
    pub fn find_perturbateur(&self, i: usize) -> Option<usize> {
        (0..self.order).find(|&g| self.is_perturbateur_in(i, self.class_of[g]))
    }

    /// Whether the representation acts by scalars (one eigenvalue per class).
    pub fn is_homothety(&self, i: usize) -> bool {
        self.chars[i].eigen.iter().all(|m| m.iter().filter(|&&x| x > 0).count() == 1)
    }

    /// Inner product of class functions given mod q (values per class).
    pub fn multiplicity(&self, values: &[u64], i: usize) -> u64 {
        let q = self.q;
        let mut s = 0;
        for k in 0..self.classes.len() {
            let kinv = self.power_class[k][self.exponent - 1];
            let t = mulmod(self.classes[k].len() as u64, mulmod(values[k], self.chars[i].values_mod_q[kinv], q), q);
            s = (s + t) % q;
        }
        mulmod(s, invmod(self.order as u64 % q, q), q)
    }

    /// F_q value of a class function given by eigenvalue multiplicities.
    pub fn value_from_eigen(&self, m: &[u32]) -> u64 {
        let q = self.q;
        m.iter()
            .enumerate()
            .fold(0, |acc, (j, &c)| (acc + mulmod(c as u64, powmod(self.z, j as u64, q), q)) % q)
    }
}

#[cfg(test)]
mod tests {
    use super::super::group::fixtures::*;
    use super::*;

    #[test]
    fn s3_table() {
        let t = CharacterTable::new(&dihedral(6)).unwrap();
        let degs: Vec<usize> = t.chars.iter().map(|c| c.degree).collect();
        assert_eq!(degs, vec![1, 1, 2]);
    }

    #[test]
    fn q8_two_dimensional_character() {
        let g = quaternion();
        let t = CharacterTable::new(&g).unwrap();
        let i2 = t.chars.iter().position(|c| c.degree == 2).unwrap();
        let k = g.index_of("k").unwrap();
        // eigenvalues of k are ±i: multiplicity one each at ζ_4 and ζ_4^3
        assert_eq!(t.chars[i2].eigen[t.class_of[k]], vec![0, 1, 0, 1]);
        let m1 = g.index_of("-1").unwrap();
        assert_eq!(t.chars[i2].eigen[t.class_of[m1]], vec![0, 0, 2, 0]);
        assert!(t.find_perturbateur(i2).is_some());
        assert_eq!(t.dual(i2), i2);
    }

    #[test]
    fn degree_sums_for_fixture_groups() {
        for (name, g) in groups_up_to_16() {
            let t = CharacterTable::new(&g).unwrap();
            assert_eq!(t.chars.len(), g.classes().len(), "{name}");
            assert_eq!(t.chars[0].degree, 1);
        }
    }

    #[test]
    fn cyclic_characters_are_galois_orbit() {
        let t = CharacterTable::new(&cyclic(5)).unwrap();
        let nontrivial: Vec<usize> = (0..5)
            .filter(|&i| t.chars[i].eigen[0][0] != 1 || t.chars[i].eigen.iter().any(|m| m[0] != 1))
            .collect();
        assert_eq!(t.orbit(nontrivial[0], &t.all_units()).len(), 4);
        // over Q_11, all fifth roots of unity are present
        assert_eq!(t.orbit(nontrivial[0], &t.galois_units(11, 1)).len(), 1);
        // over Q_2 unramified degree 1, Frobenius 2 has order 4 mod 5
        assert_eq!(t.orbit(nontrivial[0], &t.galois_units(2, 1)).len(), 4);
    }
}
