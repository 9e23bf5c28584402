//! Finite groups as multiplication tables.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// A finite group with elements `0..n`, identity at index 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    n: usize,
    table: Vec<u32>,
    inv: Vec<u32>,
    names: Vec<String>,
}

impl FiniteGroup {
    /// Validates a table: closure, identity, inverses and associativity
    /// (exhaustive up to 256 elements, on generator triples beyond).
    pub fn from_table(table: Vec<Vec<usize>>, names: Option<Vec<String>>) -> Result<FiniteGroup> {
        let n = table.len();
        if n == 0 {
            return Err(Error::invalid("empty group"));
        }
        if table.iter().any(|r| r.len() != n || r.iter().any(|&x| x >= n)) {
            return Err(Error::invalid("table is not a square array of element indices"));
        }
        let id = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or_else(|| Error::invalid("no identity element"))?;
        // reorder so the identity is 0
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(0, id);
        let mut pos = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            pos[p] = i;
        }
        let mut flat = vec![0u32; n * n];
        for i in 0..n {
            for j in 0..n {
                flat[i * n + j] = pos[table[perm[i]][perm[j]]] as u32;
            }
        }
        let mut inv = vec![u32::MAX; n];
        for i in 0..n {
            for j in 0..n {
                if flat[i * n + j] == 0 {
                    if flat[j * n + i] != 0 {
                        return Err(Error::invalid("one-sided inverse"));
                    }
                    inv[i] = j as u32;
                    break;
                }
            }
            if inv[i] == u32::MAX {
                return Err(Error::invalid(format!("element {} has no inverse", perm[i])));
            }
        }
        for r in 0..n {
            let mut seen = vec![false; n];
            for c in 0..n {
                let x = flat[r * n + c] as usize;
                if seen[x] {
                    return Err(Error::invalid("table is not a Latin square"));
                }
                seen[x] = true;
            }
        }
        let names = names
            .map(|v| perm.iter().map(|&p| v[p].clone()).collect())
            .unwrap_or_else(|| (0..n).map(|i| format!("g{}", perm[i])).collect());
        let g = FiniteGroup { n, table: flat, inv, names };
        if n <= 256 {
            for a in 0..n {
                for b in 0..n {
                    let ab = g.mul(a, b);
                    for c in 0..n {
                        if g.mul(ab, c) != g.mul(a, g.mul(b, c)) {
                            return Err(Error::invalid("multiplication is not associative"));
                        }
                    }
                }
            }
        } else {
            let gens = g.generators();
            for &a in &gens {
                for &b in &gens {
                    for c in 0..n {
                        if g.mul(g.mul(a, b), c) != g.mul(a, g.mul(b, c)) {
                            return Err(Error::invalid("multiplication is not associative"));
                        }
                    }
                }
            }
        }
        Ok(g)
    }

    /// Closure of `gens` under `mul`; the identity must be supplied.
    pub fn generate<T: Clone + Eq + Hash>(identity: T, gens: &[T], mul: impl Fn(&T, &T) -> T, name: impl Fn(&T) -> String) -> FiniteGroup {
        let mut elems = vec![identity.clone()];
        let mut index: HashMap<T, usize> = HashMap::new();
        index.insert(identity, 0);
        let mut k = 0;
        while k < elems.len() {
            for s in gens {
                let x = mul(&elems[k], s);
                if !index.contains_key(&x) {
                    index.insert(x.clone(), elems.len());
                    elems.push(x);
                }
            }
            k += 1;
        }
        let n = elems.len();
        let mut table = vec![0u32; n * n];
        for i in 0..n {
            for j in 0..n {
                table[i * n + j] = index[&mul(&elems[i], &elems[j])] as u32;
            }
        }
        let mut inv = vec![0u32; n];
        for i in 0..n {
            inv[i] = (0..n).find(|&j| table[i * n + j] == 0).unwrap() as u32;
        }
        FiniteGroup {
            n,
            table,
            inv,
            names: elems.iter().map(name).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.n + b] as usize
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a] as usize
    }

    pub fn name(&self, a: usize) -> &str {
        &self.names[a]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.n);
        self.names = names;
        self
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.mul(i, j)).collect()).collect()
    }

    pub fn pow(&self, a: usize, k: u64) -> usize {
        let mut acc = 0;
        for _ in 0..k {
            acc = self.mul(acc, a);
        }
        acc
    }

    pub fn elem_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn exponent(&self) -> usize {
        (0..self.n).map(|a| self.elem_order(a)).fold(1, num_integer::lcm)
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.n).all(|a| (0..self.n).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn conjugate(&self, x: usize, by: usize) -> usize {
        self.mul(self.mul(by, x), self.inv(by))
    }

    /// Conjugacy classes, identity class first, classes ordered by least member.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for x in 0..self.n {
            if seen[x] {
                continue;
            }
            let mut cls: Vec<usize> = (0..self.n).map(|g| self.conjugate(x, g)).collect();
            cls.sort_unstable();
            cls.dedup();
            for &c in &cls {
                seen[c] = true;
            }
            out.push(cls);
        }
        out
    }

    /// A small generating set, greedily chosen.
    pub fn generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = vec![false; self.n];
        span[0] = true;
        let mut members = vec![0usize];
        for x in 1..self.n {
            if span[x] {
                continue;
            }
            gens.push(x);
            // recompute closure
            members = vec![0];
            span = vec![false; self.n];
            span[0] = true;
            let mut k = 0;
            while k < members.len() {
                for &s in &gens {
                    let y = self.mul(members[k], s);
                    if !span[y] {
                        span[y] = true;
                        members.push(y);
                    }
                }
                k += 1;
            }
            if members.len() == self.n {
                break;
            }
        }
        let _ = members;
        gens
    }

    /// `Some((p, k))` when the order is `p^k` with `k >= 1`.
    pub fn p_group(&self) -> Option<(u64, u32)> {
        let n = self.n as u64;
        if n < 2 {
            return None;
        }
        let p = (2..=n).find(|d| n % d == 0).unwrap();
        let mut m = n;
        let mut k = 0;
        while m % p == 0 {
            m /= p;
            k += 1;
        }
        (m == 1).then_some((p, k))
    }

    pub fn direct_product(&self, other: &FiniteGroup) -> FiniteGroup {
        let (n, m) = (self.n, other.n);
        let mut table = vec![0u32; n * m * n * m];
        let nm = n * m;
        for a in 0..nm {
            for b in 0..nm {
                let (a1, a2) = (a / m, a % m);
                let (b1, b2) = (b / m, b % m);
                table[a * nm + b] = (self.mul(a1, b1) * m + other.mul(a2, b2)) as u32;
            }
        }
        let inv = (0..nm).map(|a| (self.inv(a / m) * m + other.inv(a % m)) as u32).collect();
        let names = (0..nm).map(|a| format!("({},{})", self.names[a / m], other.names[a % m])).collect();
        FiniteGroup { n: nm, table, inv, names }
    }

    /// Subgroup generated by a set, as a sorted member list.
    pub fn subgroup(&self, gens: &[usize]) -> Vec<usize> {
        let mut members = vec![0usize];
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut k = 0;
        while k < members.len() {
            for &s in gens {
                let y = self.mul(members[k], s);
                if !seen[y] {
                    seen[y] = true;
                    members.push(y);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        members
    }

    /// Whether `f` (given on all elements) is a homomorphism into `target`.
    pub fn is_hom_to(&self, target: &FiniteGroup, f: &[usize]) -> bool {
        (0..self.n).all(|a| (0..self.n).all(|b| f[self.mul(a, b)] == target.mul(f[a], f[b])))
    }
}

/// Fixture groups built from explicit multiplication rules.
pub mod fixtures {
    use super::FiniteGroup;

    pub fn cyclic(n: usize) -> FiniteGroup {
        FiniteGroup::generate(0usize, &[1 % n.max(1)], |a, b| (a + b) % n, |a| format!("a^{a}"))
    }

    /// `C_n ⋊ C_m` with the generator of `C_m` acting by `x -> x^r`.
    pub fn metacyclic(n: usize, m: usize, r: usize) -> FiniteGroup {
        let mul = move |x: &(usize, usize), y: &(usize, usize)| {
            let mut rj = 1;
            for _ in 0..x.1 {
                rj = rj * r % n;
            }
            ((x.0 + rj * y.0) % n, (x.1 + y.1) % m)
        };
        FiniteGroup::generate((0, 0), &[(1 % n, 0), (0, 1 % m)], mul, |x| format!("a^{}b^{}", x.0, x.1))
    }

    pub fn dihedral(order: usize) -> FiniteGroup {
        let n = order / 2;
        metacyclic(n, 2, n - 1)
    }

    /// Dicyclic group of order `4n`: `a^{2n} = 1, x^2 = a^n, x a x^{-1} = a^{-1}`.
    pub fn dicyclic(n: usize) -> FiniteGroup {
        let m = 2 * n;
        let mul = move |x: &(usize, usize), y: &(usize, usize)| {
            let (i, s) = *x;
            let (j, t) = *y;
            if s == 0 {
                ((i + j) % m, t)
            } else {
                let k = (i + m - j) % m;
                if t == 0 {
                    (k, 1)
                } else {
                    ((k + n) % m, 0)
                }
            }
        };
        FiniteGroup::generate((0, 0), &[(1, 0), (0, 1)], mul, |x| format!("a^{}x^{}", x.0, x.1))
    }

    pub fn quaternion() -> FiniteGroup {
        let g = dicyclic(2);
        // a = i, x = j, a x = k
        let names = g
            .names()
            .iter()
            .map(|s| match s.as_str() {
                "a^0x^0" => "1",
                "a^1x^0" => "i",
                "a^2x^0" => "-1",
                "a^3x^0" => "-i",
                "a^0x^1" => "j",
                "a^1x^1" => "k",
                "a^2x^1" => "-j",
                "a^3x^1" => "-k",
                _ => unreachable!(),
            })
            .map(String::from)
            .collect();
        g.with_names(names)
    }

    /// `(C_4 × C_2) ⋊ C_2` family: `c` acts on `(i, j)` by the given map.
    fn c4c2_ext(act: fn(usize, usize) -> (usize, usize)) -> FiniteGroup {
        let mul = move |x: &(usize, usize, usize), y: &(usize, usize, usize)| {
            let (mut i, mut j) = (y.0, y.1);
            if x.2 == 1 {
                (i, j) = act(i, j);
            }
            ((x.0 + i) % 4, (x.1 + j) % 2, (x.2 + y.2) % 2)
        };
        FiniteGroup::generate((0, 0, 0), &[(1, 0, 0), (0, 1, 0), (0, 0, 1)], mul, |x| format!("a^{}b^{}c^{}", x.0, x.1, x.2))
    }

    pub fn alternating4() -> FiniteGroup {
        // C_2^2 ⋊ C_3, the C_3 rotating the three involutions
        let rot = |v: (u8, u8)| (v.1, v.0 ^ v.1);
        let mul = move |x: &(u8, u8, u8), y: &(u8, u8, u8)| {
            let mut v = (y.0, y.1);
            for _ in 0..x.2 {
                v = rot(v);
            }
            (x.0 ^ v.0, x.1 ^ v.1, (x.2 + y.2) % 3)
        };
        FiniteGroup::generate((0, 0, 0), &[(1, 0, 0), (0, 0, 1)], mul, |x| format!("v{}{}r{}", x.0, x.1, x.2))
    }

    /// Upper unitriangular 3x3 matrices mod p.
    pub fn heisenberg(p: usize) -> FiniteGroup {
        let mul = move |x: &(usize, usize, usize), y: &(usize, usize, usize)| ((x.0 + y.0) % p, (x.1 + y.1) % p, (x.2 + y.2 + x.0 * y.1) % p);
        FiniteGroup::generate((0, 0, 0), &[(1, 0, 0), (0, 1, 0)], mul, |x| format!("[{},{},{}]", x.0, x.1, x.2))
    }

    fn named(name: &str, g: FiniteGroup) -> (String, FiniteGroup) {
        (name.to_string(), g)
    }

    /// Every group of order at most 16, one per isomorphism class.
    pub fn groups_up_to_16() -> Vec<(String, FiniteGroup)> {
        let c = cyclic;
        let mut v = vec![named("C1", c(1))];
        for n in 2..=16 {
            v.push(named(&format!("C{n}"), c(n)));
        }
        v.extend([
            named("C2xC2", c(2).direct_product(&c(2))),
            named("S3", dihedral(6)),
            named("C4xC2", c(4).direct_product(&c(2))),
            named("C2^3", c(2).direct_product(&c(2)).direct_product(&c(2))),
            named("D8", dihedral(8)),
            named("Q8", quaternion()),
            named("C3xC3", c(3).direct_product(&c(3))),
            named("D10", dihedral(10)),
            named("C6xC2", c(6).direct_product(&c(2))),
            named("D12", dihedral(12)),
            named("A4", alternating4()),
            named("Dic3", dicyclic(3)),
            named("D14", dihedral(14)),
            named("C4xC4", c(4).direct_product(&c(4))),
            named("C2^2:C4", c4c2_ext(|i, j| (i, (j + i) % 2))),
            named("C4:C4", metacyclic(4, 4, 3)),
            named("C8xC2", c(8).direct_product(&c(2))),
            named("M16", metacyclic(8, 2, 5)),
            named("D16", dihedral(16)),
            named("SD16", metacyclic(8, 2, 3)),
            named("Q16", dicyclic(4)),
            named("C4xC2xC2", c(4).direct_product(&c(2)).direct_product(&c(2))),
            named("C2xD8", c(2).direct_product(&dihedral(8))),
            named("C2xQ8", c(2).direct_product(&quaternion())),
            named("C4oD8", c4c2_ext(|i, j| ((i + 2 * j) % 4, j))),
            named("C2^4", c(2).direct_product(&c(2)).direct_product(&c(2)).direct_product(&c(2))),
        ]);
        v
    }

    /// A library of p-groups of order at most 64.
    pub fn p_groups_up_to_64() -> Vec<(String, FiniteGroup)> {
        let c = cyclic;
        let mut v: Vec<(String, FiniteGroup)> = groups_up_to_16().into_iter().filter(|(_, g)| g.p_group().is_some()).collect();
        v.extend([
            named("C32", c(32)),
            named("C64", c(64)),
            named("D32", dihedral(32)),
            named("D64", dihedral(64)),
            named("Q32", dicyclic(8)),
            named("Q64", dicyclic(16)),
            named("SD32", metacyclic(16, 2, 7)),
            named("M32", metacyclic(16, 2, 9)),
            named("C8:C4", metacyclic(8, 4, 3)),
            named("C8:C8", metacyclic(8, 8, 5)),
            named("C16:C4", metacyclic(16, 4, 3)),
            named("C2xQ16", c(2).direct_product(&dicyclic(4))),
            named("C4xQ8", c(4).direct_product(&quaternion())),
            named("Q8xQ8", quaternion().direct_product(&quaternion())),
            named("D8xD8", dihedral(8).direct_product(&dihedral(8))),
            named("C2^5", (0..4).fold(c(2), |g, _| g.direct_product(&c(2)))),
            named("C2^6", (0..5).fold(c(2), |g, _| g.direct_product(&c(2)))),
            named("C4^3", c(4).direct_product(&c(4)).direct_product(&c(4))),
            named("C8xC8", c(8).direct_product(&c(8))),
            named("C27", c(27)),
            named("C9xC3", c(9).direct_product(&c(3))),
            named("C3^3", c(3).direct_product(&c(3)).direct_product(&c(3))),
            named("Heis3", heisenberg(3)),
            named("C9:C3", metacyclic(9, 3, 4)),
            named("C49", c(49)),
            named("C7xC7", c(7).direct_product(&c(7))),
            named("C25", c(25)),
            named("C5xC5", c(5).direct_product(&c(5))),
        ]);
        v.retain(|(_, g)| g.order() <= 64);
        v
    }
}
