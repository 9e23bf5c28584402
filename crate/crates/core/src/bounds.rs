//! Minkowski bounds, semistability degrees and related integer identities.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grouprep::group::{fixtures, FiniteGroup};
use crate::padic::field::is_prime;

/// `r(n, p) = Σ_{i≥0} ⌊n / (p^i (p-1))⌋`.
pub fn minkowski_exponent(n: u64, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let mut total = 0;
    let mut d = p - 1;
    while d <= n {
        total += n / d;
        d = match d.checked_mul(p) {
            Some(x) => x,
            None => break,
        };
    }
    Ok(total)
}

fn primes_up_to(m: u64) -> Vec<u64> {
    (2..=m).filter(|&q| is_prime(q)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinkowskiTable {
    pub n: u64,
    /// `(p, r(n, p))` for every prime with nonzero exponent.
    pub exponents: Vec<(u64, u64)>,
    #[serde(serialize_with = "ser_big")]
    pub value: BigUint,
}

fn ser_big<S: serde::Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

impl MinkowskiTable {
    pub fn new(n: u64) -> MinkowskiTable {
        let mut exponents = Vec::new();
        let mut value = BigUint::one();
        for p in primes_up_to(n + 1) {
            let r = minkowski_exponent(n, p).unwrap();
            if r > 0 {
                exponents.push((p, r));
                value *= BigUint::from(p).pow(r as u32);
            }
        }
        MinkowskiTable { n, exponents, value }
    }

    pub fn factorization(&self) -> String {
        if self.exponents.is_empty() {
            return "1".into();
        }
        self.exponents
            .iter()
            .map(|(p, r)| if *r == 1 { format!("{p}") } else { format!("{p}^{r}") })
            .collect::<Vec<_>>()
            .join(" * ")
    }
}

/// `M(n) = Π_p p^{r(n,p)}`; `M(0) = 1`.
pub fn minkowski_bound(n: u64) -> BigUint {
    MinkowskiTable::new(n).value
}

/// `d_g = M(2g)`.
pub fn semistability_degree(g: u64) -> BigUint {
    minkowski_bound(2 * g)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DivisibilityCertificate {
    pub statement: String,
    #[serde(serialize_with = "ser_big")]
    pub divisor: BigUint,
    #[serde(serialize_with = "ser_big")]
    pub dividend: BigUint,
    #[serde(serialize_with = "ser_big")]
    pub quotient: BigUint,
    pub holds: bool,
}

fn certify(statement: String, divisor: BigUint, dividend: BigUint) -> DivisibilityCertificate {
    let (quotient, rem) = dividend.div_rem(&divisor);
    DivisibilityCertificate {
        statement,
        divisor,
        dividend,
        quotient,
        holds: rem.is_zero(),
    }
}

/// `M(a) M(b) | M(a+b)` and `M(n)^2 M(2g-2n) | M(2g)`.
pub fn divisibility_checks(a: u64, b: u64, g: u64, n: u64) -> Result<Vec<DivisibilityCertificate>> {
    if n > g {
        return Err(Error::invalid(format!("need n <= g, got n = {n}, g = {g}")));
    }
    let mn = minkowski_bound(n);
    Ok(vec![
        certify(
            format!("M({a})*M({b}) | M({})", a + b),
            minkowski_bound(a) * minkowski_bound(b),
            minkowski_bound(a + b),
        ),
        certify(
            format!("M({n})^2*M({}) | M({})", 2 * g - 2 * n, 2 * g),
            &mn * &mn * minkowski_bound(2 * g - 2 * n),
            minkowski_bound(2 * g),
        ),
    ])
}

/// Every certificate for `g <= gmax`, `0 <= n <= g` and `a + b = 2g`.
pub fn divisibility_sweep(gmax: u64) -> Vec<DivisibilityCertificate> {
    let mut out = Vec::new();
    for g in 0..=gmax {
        for n in 0..=g {
            out.extend(divisibility_checks(n, 2 * g - n, g, n).unwrap());
        }
    }
    out
}

/// `2^{r(2g, 2)}`.
pub fn wreath_sylow_order(g: u64) -> BigUint {
    BigUint::from(2u32).pow(minkowski_exponent(2 * g, 2).unwrap() as u32)
}

/// An element of `Q8 ≀ S_g`: block-monomial matrix `P_π · diag(q_1, ..., q_g)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WreathElem {
    pub q: Vec<u8>,
    pub perm: Vec<u8>,
}

/// `Q8 ≀ S_g` built combinatorially from the quaternion table.
pub struct WreathGroup {
    pub g: usize,
    pub q8: FiniteGroup,
    pub elements: Vec<WreathElem>,
    pub generators: Vec<WreathElem>,
}

impl WreathGroup {
    pub fn identity(g: usize) -> WreathElem {
        WreathElem {
            q: vec![0; g],
            perm: (0..g as u8).collect(),
        }
    }

    /// `(q, π)(q', π') = (i ↦ q_{π'(i)} q'_i, π ∘ π')`.
    pub fn mul(q8: &FiniteGroup, a: &WreathElem, b: &WreathElem) -> WreathElem {
        let g = a.q.len();
        let q = (0..g).map(|i| q8.mul(a.q[b.perm[i] as usize] as usize, b.q[i] as usize) as u8).collect();
        let perm = (0..g).map(|i| a.perm[b.perm[i] as usize]).collect();
        WreathElem { q, perm }
    }

    fn gens(q8: &FiniteGroup, g: usize, full_symmetric: bool) -> Vec<WreathElem> {
        let i = q8.index_of("i").unwrap() as u8;
        let j = q8.index_of("j").unwrap() as u8;
        let mut gens = Vec::new();
        // without the g-cycle, a coordinate outside the transposition needs its own factor
        let coords: &[usize] = if !full_symmetric && g == 3 { &[0, 2] } else { &[0] };
        for &k in coords {
            for x in [i, j] {
                let mut e = Self::identity(g);
                e.q[k] = x;
                gens.push(e);
            }
        }
        if g >= 2 {
            let mut t = Self::identity(g);
            t.perm.swap(0, 1);
            gens.push(t);
        }
        if g >= 3 && full_symmetric {
            let mut c = Self::identity(g);
            c.perm = (0..g as u8).map(|k| (k + 1) % g as u8).collect();
            gens.push(c);
        }
        gens
    }

    fn close(q8: &FiniteGroup, g: usize, gens: &[WreathElem]) -> Vec<WreathElem> {
        let mut elems = vec![Self::identity(g)];
        let mut seen: HashMap<WreathElem, ()> = HashMap::new();
        seen.insert(Self::identity(g), ());
        let mut k = 0;
        while k < elems.len() {
            for s in gens {
                let x = Self::mul(q8, &elems[k], s);
                if seen.insert(x.clone(), ()).is_none() {
                    elems.push(x);
                }
            }
            k += 1;
        }
        elems
    }

    pub fn new(g: usize) -> WreathGroup {
        let q8 = fixtures::quaternion();
        let generators = Self::gens(&q8, g, true);
        let elements = Self::close(&q8, g, &generators);
        WreathGroup { g, q8, elements, generators }
    }

    /// Sylow 2-subgroup `Q8^g ⋊ ⟨(1 2)⟩` (for `g <= 3`).
    pub fn sylow2(g: usize) -> WreathGroup {
        assert!(g <= 3, "Sylow construction implemented for g <= 3");
        let q8 = fixtures::quaternion();
        let generators = Self::gens(&q8, g, false);
        let elements = Self::close(&q8, g, &generators);
        WreathGroup { g, q8, elements, generators }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Checks that products of generators with every element stay inside.
    pub fn verify_closure(&self) -> bool {
        let set: std::collections::HashSet<&WreathElem> = self.elements.iter().collect();
        self.generators.iter().all(|s| {
            self.elements
                .iter()
                .all(|x| set.contains(&Self::mul(&self.q8, x, s)) && set.contains(&Self::mul(&self.q8, s, x)))
        })
    }

    /// Multiplication table (only sensible for small orders).
    pub fn to_group(&self) -> FiniteGroup {
        let idx: HashMap<&WreathElem, usize> = self.elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let n = self.order();
        let table: Vec<Vec<usize>> = (0..n)
            .map(|a| (0..n).map(|b| idx[&Self::mul(&self.q8, &self.elements[a], &self.elements[b])]).collect())
            .collect();
        let names = self.elements.iter().map(|e| self.elem_name(e)).collect();
        FiniteGroup::from_table(table, Some(names)).expect("wreath table is a group")
    }

    pub fn elem_name(&self, e: &WreathElem) -> String {
        let qs: Vec<&str> = e.q.iter().map(|&x| self.q8.name(x as usize)).collect();
        let perm: Vec<String> = e.perm.iter().map(|x| (x + 1).to_string()).collect();
        format!("({};{})", qs.join(","), perm.join(""))
    }
}

pub fn two_part(n: &BigUint) -> BigUint {
    let mut m = n.clone();
    let mut out = BigUint::one();
    let two = BigUint::from(2u32);
    while m.is_even() && !m.is_zero() {
        m /= &two;
        out *= &two;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct WreathReport {
    pub g: u64,
    pub order: u64,
    pub two_part: u64,
    pub sylow_order: u64,
    pub expected_two_part: String,
    pub closure_verified: bool,
    pub matches: bool,
}

pub fn wreath_report(g: u64) -> WreathReport {
    let w = WreathGroup::new(g as usize);
    let order = w.order() as u64;
    let tp = two_part(&BigUint::from(order));
    let syl = WreathGroup::sylow2(g as usize);
    let expected = wreath_sylow_order(g);
    WreathReport {
        g,
        order,
        two_part: tp.iter_u64_digits().next().unwrap_or(0),
        sylow_order: syl.order() as u64,
        expected_two_part: expected.to_string(),
        closure_verified: w.verify_closure() && syl.verify_closure(),
        matches: tp == expected && BigUint::from(syl.order()) == expected,
    }
}

/// `(lcm card Φ_v, lcm M(t_v) card Φ_v)` over the given places.
pub fn lcm_degree_formulas(places: &[(u64, u64)]) -> Result<(BigUint, BigUint)> {
    let mut d = BigUint::one();
    let mut dd = BigUint::one();
    for &(t, card) in places {
        if card == 0 {
            return Err(Error::invalid("component group cardinality must be positive"));
        }
        let c = BigUint::from(card);
        d = d.lcm(&c);
        dd = dd.lcm(&(minkowski_bound(t) * c));
    }
    Ok((d, dd))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Census {
    pub p: u64,
    pub order: usize,
    /// Number of cyclic subgroups of order p.
    pub subgroups: usize,
    /// `#{x : x^p = e}`.
    pub solutions: usize,
    pub identity_holds: bool,
    /// A subgroup of order p fixed by the supplied action, as element indices.
    pub fixed_subgroup: Option<Vec<usize>>,
}

/// An action of a p-group `v` on `g` by automorphisms: `maps[x][a]` is the
/// image of `a` under `x`.
pub struct GroupAction<'a> {
    pub acting: &'a FiniteGroup,
    pub maps: Vec<Vec<usize>>,
}

pub fn cyclic_subgroup_census(g: &FiniteGroup, action: Option<&GroupAction>) -> Result<Census> {
    let (p, _) = g
        .p_group()
        .ok_or_else(|| Error::NotPGroup(format!("order {} is not a prime power", g.order())))?;
    let n = g.order();
    let solutions = (0..n).filter(|&x| g.pow(x, p) == 0).count();
    let mut subs: Vec<Vec<usize>> = Vec::new();
    for x in 1..n {
        if g.elem_order(x) as u64 == p {
            let h = g.subgroup(&[x]);
            if !subs.contains(&h) {
                subs.push(h);
            }
        }
    }
    let count = subs.len();
    if count as u64 % p == 0 {
        return Err(Error::InternalContradiction(format!("{count} subgroups of order {p}, divisible by {p}")));
    }
    let identity_holds = solutions == (p as usize - 1) * count + 1;
    let fixed_subgroup = match action {
        None => None,
        Some(act) => {
            let (q, _) = act.acting.p_group().ok_or_else(|| Error::NotPGroup("acting group".into()))?;
            if q != p {
                return Err(Error::invalid("acting group must be a p-group for the same prime"));
            }
            if act.maps.len() != act.acting.order() {
                return Err(Error::invalid("action must list one map per acting element"));
            }
            for (x, m) in act.maps.iter().enumerate() {
                if m.len() != n || !g.is_hom_to(g, m) {
                    return Err(Error::invalid(format!("action of element {x} is not an endomorphism")));
                }
                let mut s = m.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() != n {
                    return Err(Error::invalid(format!("action of element {x} is not bijective")));
                }
            }
            for a in 0..act.acting.order() {
                for b in 0..act.acting.order() {
                    let ab = act.acting.mul(a, b);
                    if (0..n).any(|y| act.maps[ab][y] != act.maps[a][act.maps[b][y]]) {
                        return Err(Error::invalid("action is not a homomorphism"));
                    }
                }
            }
            let fixed = subs.iter().find(|h| {
                act.maps.iter().all(|m| {
                    let mut img: Vec<usize> = h.iter().map(|&y| m[y]).collect();
                    img.sort_unstable();
                    &img == *h
                })
            });
            match fixed {
                Some(h) => Some(h.clone()),
                None => return Err(Error::InternalContradiction("no fixed subgroup of order p under a p-group action".into())),
            }
        }
    };
    Ok(Census {
        p,
        order: n,
        subgroups: count,
        solutions,
        identity_holds,
        fixed_subgroup,
    })
}

/// Action of `g` on itself by conjugation.
pub fn conjugation_action(g: &FiniteGroup) -> GroupAction<'_> {
    let maps = (0..g.order()).map(|x| (0..g.order()).map(|a| g.conjugate(a, x)).collect()).collect();
    GroupAction { acting: g, maps }
}
