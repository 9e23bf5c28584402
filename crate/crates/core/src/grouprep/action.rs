//! Matrix representations of finite groups on φ-modules.

use std::sync::Arc;

use serde::Serialize;

use super::characters::CharacterTable;
use super::group::FiniteGroup;
use crate::error::{Error, Result};
use crate::isocrystal::{LevelEmbedding, PhiModule};
use crate::padic::matrix::DEFAULT_GUARD;
use crate::padic::{Elem, Mat, Tower};

/// A linear action `g ↦ ρ(g)` with `ρ(gh) = ρ(g) ρ(h)`.
#[derive(Clone, Debug)]
pub struct GroupAction {
    pub group: FiniteGroup,
    pub rho: Vec<Mat>,
}

impl GroupAction {
    pub fn new(group: FiniteGroup, rho: Vec<Mat>) -> Result<GroupAction> {
        if rho.len() != group.order() {
            return Err(Error::invalid(format!("{} matrices for a group of order {}", rho.len(), group.order())));
        }
        let n = rho[0].rows();
        for (g, m) in rho.iter().enumerate() {
            if !m.is_square() || m.rows() != n {
                return Err(Error::invalid(format!("matrix of {} has the wrong shape", group.name(g))));
            }
        }
        let act = GroupAction { group, rho };
        act.check_homomorphism()?;
        Ok(act)
    }

    pub fn trivial(t: &Arc<Tower>, n: usize) -> GroupAction {
        GroupAction {
            group: super::group::fixtures::cyclic(1),
            rho: vec![Mat::identity(t, n)],
        }
    }

    /// `{±1}` acting by scalars.
    pub fn sign(t: &Arc<Tower>, n: usize) -> GroupAction {
        let g = super::group::fixtures::cyclic(2).with_names(vec!["1".into(), "-1".into()]);
        GroupAction {
            group: g,
            rho: vec![Mat::identity(t, n), Mat::identity(t, n).neg()],
        }
    }

    /// Cyclic group generated by `h` of order `m`.
    pub fn cyclic(h: &Mat, m: usize) -> Result<GroupAction> {
        let t = h.tower().clone();
        let mut rho = vec![Mat::identity(&t, h.rows())];
        for k in 1..m {
            rho.push(rho[k - 1].mul(h));
        }
        let names = (0..m).map(|k| if k == 0 { "1".to_string() } else { format!("h^{k}") }).collect();
        Self::new(super::group::fixtures::cyclic(m).with_names(names), rho)
    }

    pub fn field(&self) -> &Arc<Tower> {
        self.rho[0].tower()
    }

    pub fn dim(&self) -> usize {
        self.rho[0].rows()
    }

    fn check_homomorphism(&self) -> Result<()> {
        let n = self.group.order();
        if !self.rho[0].agrees(&Mat::identity(self.field(), self.dim())) {
            return Err(Error::invalid("identity does not act trivially"));
        }
        for a in 0..n {
            for b in 0..n {
                let ab = self.group.mul(a, b);
                if !self.rho[a].mul(&self.rho[b]).agrees_certified(&self.rho[ab], DEFAULT_GUARD) {
                    return Err(Error::invalid(format!(
                        "ρ({})ρ({}) ≠ ρ({})",
                        self.group.name(a),
                        self.group.name(b),
                        self.group.name(ab)
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::invalid(format!("the action has dimension {}, the module {n}", self.dim())));
        }
        Ok(())
    }

    /// Every `ρ(g)` commutes with φ: `ρ(g) A = A σ(ρ(g))`.
    pub fn check_phi(&self, m: &PhiModule) -> Result<()> {
        self.check_dim(m.dim())?;
        for (g, r) in self.rho.iter().enumerate() {
            if !r.mul(m.matrix()).agrees_certified(&m.matrix().mul(&r.frobenius()), DEFAULT_GUARD) {
                return Err(Error::invalid(format!("ρ({}) does not commute with φ", self.group.name(g))));
            }
        }
        Ok(())
    }

    /// Every `ρ(g)` preserves the pairing `J`.
    pub fn check_symplectic(&self, j: &Mat) -> Result<()> {
        self.check_dim(j.rows())?;
        for (g, r) in self.rho.iter().enumerate() {
            if !r.transpose().mul(j).mul(r).agrees_certified(j, DEFAULT_GUARD) {
                return Err(Error::invalid(format!("ρ({}) does not preserve the polarization", self.group.name(g))));
            }
        }
        Ok(())
    }

    /// Elements acting trivially.
    pub fn kernel(&self) -> Vec<usize> {
        let id = Mat::identity(self.field(), self.dim());
        (0..self.group.order()).filter(|&g| self.rho[g].agrees(&id)).collect()
    }

    pub fn is_faithful(&self) -> bool {
        self.kernel().len() == 1
    }

    /// Whether the image consists of scalar matrices.
    pub fn is_homothety(&self) -> bool {
        self.rho.iter().all(is_scalar)
    }

    /// Induced action on a stable subspace with basis `w`.
    pub fn restrict(&self, w: &Mat) -> Result<GroupAction> {
        let mut rho = Vec::with_capacity(self.rho.len());
        for (g, r) in self.rho.iter().enumerate() {
            let m = w
                .solve(&r.mul(w))?
                .ok_or_else(|| Error::invalid(format!("subspace is not stable under {}", self.group.name(g))))?;
            rho.push(m);
        }
        Ok(GroupAction {
            group: self.group.clone(),
            rho,
        })
    }

    pub fn embed(&self, emb: &LevelEmbedding) -> GroupAction {
        GroupAction {
            group: self.group.clone(),
            rho: self.rho.iter().map(|m| emb.map_mat(m)).collect(),
        }
    }

    /// Conjugated action `P^{-1} ρ(g) P`.
    pub fn change_basis(&self, p: &Mat) -> Result<GroupAction> {
        let pi = p.inverse()?;
        Ok(GroupAction {
            group: self.group.clone(),
            rho: self.rho.iter().map(|m| pi.mul(m).mul(p)).collect(),
        })
    }
}

fn is_scalar(m: &Mat) -> bool {
    let n = m.rows();
    let c = m.get(0, 0);
    (0..n).all(|i| (0..n).all(|j| if i == j { m.get(i, j).agrees(c) } else { m.get(i, j).is_zero() }))
}

/// One eigenvalue `ζ_{d'}^s · ω` (ω of exact order `p^a`) with its multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Eigenvalue {
    /// Exact multiplicative order.
    pub order: u64,
    /// Prime-to-p part of the order and exponent `s` of `ζ_{d'}`.
    pub prime_to_p: (u64, u64),
    /// Index among the `φ(p^a)` conjugates sharing the same prime-to-p part.
    pub conjugate: u64,
    pub multiplicity: usize,
}

fn euler_phi(n: u64) -> u64 {
    let mut n0 = n;
    let mut r = n;
    let mut d = 2;
    while d * d <= n0 {
        if n0 % d == 0 {
            while n0 % d == 0 {
                n0 /= d;
            }
            r -= r / d;
        }
        d += 1;
    }
    if n0 > 1 {
        r -= r / n0;
    }
    r
}

fn split_p(n: u64, p: u64) -> (u64, u64) {
    let mut pp = 1;
    let mut m = n;
    while m % p == 0 {
        m /= p;
        pp *= p;
    }
    (m, pp)
}

/// Multiplicative order of `p` modulo `d`.
pub fn unramified_degree_for(p: u64, d: u64) -> usize {
    if d <= 1 {
        return 1;
    }
    let mut x = p % d;
    let mut k = 1;
    while x != 1 {
        x = x * p % d;
        k += 1;
    }
    k
}

/// Eigenvalues of a matrix of finite order `m`, over an algebraic closure,
/// one entry per distinct eigenvalue.
///
/// An eigenvalue `ζ_{d'}^s ω` with `ω` of order `p^a` is detected at the
/// unramified level containing `ζ_{d'}` through the kernel of
/// `Φ_{p^a}(ζ_{d'}^{-s} h)`; its `φ(p^a)` conjugates share a multiplicity.
pub fn eigen_multiplicities(h: &Mat, m: u64) -> Result<Vec<Eigenvalue>> {
    let t = h.tower().clone();
    if t.e != 1 {
        return Err(Error::invalid("eigenvalue census runs over an unramified level"));
    }
    let n = h.rows();
    if !h.pow(m).agrees_certified(&Mat::identity(&t, n), DEFAULT_GUARD) {
        return Err(Error::invalid(format!("matrix does not satisfy h^{m} = 1")));
    }
    let p = t.p as u64;
    let mut out = Vec::new();
    let mut total = 0usize;
    for d in (1..=m).filter(|d| m % d == 0) {
        let (dp, pa) = split_p(d, p);
        let f2 = num_integer::lcm(t.f, unramified_degree_for(p, dp));
        let emb = LevelEmbedding::new(&t, f2)?;
        let hb = emb.map_mat(h);
        let big = emb.big.clone();
        let phi_pa = euler_phi(pa) as usize;
        for s in (0..dp).filter(|&s| num_integer::gcd(s, dp) == 1 || dp == 1) {
            let c = Elem::root_of_unity(&big, dp, (dp - s) % dp)?;
            let mh = hb.scale(&c);
            // Φ_{p^a}(x) = Σ_{k<p} x^{k p^{a-1}}, or x - 1 when a = 0
            let cyc = if pa == 1 {
                mh.sub(&Mat::identity(&big, n))
            } else {
                let step = mh.pow(pa / p);
                let mut acc = Mat::identity(&big, n);
                let mut pw = Mat::identity(&big, n);
                for _ in 1..p {
                    pw = pw.mul(&step);
                    acc = acc.add(&pw);
                }
                acc
            };
            let k = n - cyc.rank()?;
            if k == 0 {
                continue;
            }
            if k % phi_pa != 0 {
                return Err(Error::InternalContradiction(format!(
                    "conjugate eigenvalues of order {d} have unequal multiplicities"
                )));
            }
            for j in 0..phi_pa as u64 {
                out.push(Eigenvalue {
                    order: d,
                    prime_to_p: (dp, s),
                    conjugate: j,
                    multiplicity: k / phi_pa,
                });
            }
            total += k;
        }
    }
    if total != n {
        return Err(Error::precision(format!("eigenvalue census found {total} of {n} eigenvalues")));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbateurWitness {
    pub element: usize,
    pub name: String,
    /// `(order, multiplicity)` per eigenvalue.
    pub eigenvalues: Vec<(u64, usize)>,
}

/// Every eigenspace of `h` has dimension at most `dim / 2`.
pub fn is_perturbateur(h: &Mat, m: u64) -> Result<(bool, Vec<(u64, usize)>)> {
    let ev = eigen_multiplicities(h, m)?;
    let n = h.rows();
    let ok = ev.iter().all(|e| 2 * e.multiplicity <= n);
    Ok((ok, ev.into_iter().map(|e| (e.order, e.multiplicity)).collect()))
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerturbateurSearch {
    Element(PerturbateurWitness),
    HomothetyAction,
}

/// First perturbateur element by index, or the homothety branch.
pub fn find_perturbateur(action: &GroupAction) -> Result<PerturbateurSearch> {
    for g in 0..action.group.order() {
        let m = action.group.elem_order(g) as u64;
        let (ok, eigenvalues) = is_perturbateur(&action.rho[g], m)?;
        if ok {
            return Ok(PerturbateurSearch::Element(PerturbateurWitness {
                element: g,
                name: action.group.name(g).to_string(),
                eigenvalues,
            }));
        }
    }
    if action.is_homothety() {
        return Ok(PerturbateurSearch::HomothetyAction);
    }
    Err(Error::InternalContradiction(
        "no perturbateur element and the action is not by homotheties".into(),
    ))
}

/// Isotypic piece for one Galois orbit of irreducible characters.
#[derive(Clone, Debug)]
pub struct IsotypicComponent {
    pub characters: Vec<usize>,
    pub basis: Mat,
    pub projector: Mat,
    /// Multiplicity of each character of the orbit.
    pub multiplicity: usize,
}

fn mobius_prime_power(o: u64) -> i64 {
    // o = p^b
    if o == 1 {
        1
    } else if is_prime_u64(o) {
        -1
    } else {
        0
    }
}

fn is_prime_u64(n: u64) -> bool {
    crate::padic::field::is_prime(n)
}

/// `Σ_{χ ∈ orbit} χ(class)` as an element of the coefficient field.
fn orbit_value(table: &CharacterTable, orbit: &[usize], class: usize, t: &Arc<Tower>, rational_only: bool) -> Result<Elem> {
    let e = table.exponent as u64;
    let p = t.p as u64;
    let (ep, pa) = split_p(e, p);
    let mut mult = vec![0u64; e as usize];
    for &i in orbit {
        for (j, &c) in table.chars[i].eigen[class].iter().enumerate() {
            mult[j] += c as u64;
        }
    }
    // ζ_e^j = ζ_{e'}^{j·a mod e'} · ζ_{p^a}^{j·b mod p^a} with a p^a + b e' = 1
    let (a, b) = bezout(pa as i64, ep as i64);
    let mut acc = Elem::zero(t);
    for (j, &c) in mult.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let j = j as i64;
        let j1 = (j * a).rem_euclid(ep as i64) as u64;
        let j2 = (j * b).rem_euclid(pa as i64) as u64;
        let o2 = pa / num_integer::gcd(j2, pa);
        let avg2 = crate::padic::field::rational(mobius_prime_power(o2), euler_phi(o2) as i64);
        let z1 = if rational_only {
            let o1 = ep / num_integer::gcd(j1, ep);
            Elem::from_rational(t, &crate::padic::field::rational(mobius(o1), euler_phi(o1) as i64))
        } else {
            Elem::root_of_unity(t, ep, j1)?
        };
        acc = acc.add(&z1.mul(&Elem::from_rational(t, &avg2)).mul_i64(c as i64));
    }
    Ok(acc)
}

fn mobius(n: u64) -> i64 {
    let mut m = n;
    let mut r = 1;
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            m /= d;
            if m % d == 0 {
                return 0;
            }
            r = -r;
        }
        d += 1;
    }
    if m > 1 {
        r = -r;
    }
    r
}

fn bezout(x: i64, y: i64) -> (i64, i64) {
    let g = num_integer::Integer::extended_gcd(&x, &y);
    (g.x, g.y)
}

/// Decomposition into isotypic components over the coefficient field,
/// grouping characters into orbits under the Galois group realized there.
pub fn isotypic_decomposition(action: &GroupAction, table: &CharacterTable) -> Result<Vec<IsotypicComponent>> {
    let t = action.field().clone();
    let p = t.p as u64;
    let order = action.group.order();
    let units = table.galois_units(p, t.f as u32);
    let all = table.all_units();
    let (ep, _) = split_p(table.exponent as u64, p);
    let q1 = p.pow(t.f as u32) - 1;
    let roots_present = q1 % ep == 0;
    let mut seen = vec![false; table.chars.len()];
    let mut out = Vec::new();
    let n = action.dim();
    let mut total = Mat::zeros(&t, n, n);
    for i in 0..table.chars.len() {
        if seen[i] {
            continue;
        }
        let orbit = table.orbit(i, &units);
        for &o in &orbit {
            seen[o] = true;
        }
        let rational_only = !roots_present;
        if rational_only && table.orbit(i, &all) != orbit {
            return Err(Error::FieldIncompatibility(format!(
                "character orbit needs roots of unity of order {ep} absent from the unramified level {}",
                t.f
            )));
        }
        let deg = table.chars[i].degree as i64;
        let mut proj = Mat::zeros(&t, n, n);
        for g in 0..order {
            let ginv = action.group.inv(g);
            let v = orbit_value(table, &orbit, table.class_of[ginv], &t, rational_only)?;
            if v.is_zero() {
                continue;
            }
            proj = proj.add(&action.rho[g].scale(&v));
        }
        let proj = proj.scale(&Elem::from_ratio(&t, deg, order as i64));
        total = total.add(&proj);
        let basis = proj.column_basis()?;
        if basis.cols() == 0 {
            continue;
        }
        let per = orbit.len() * deg as usize;
        if basis.cols() % per != 0 {
            return Err(Error::InternalContradiction("isotypic dimension is not a multiple of the orbit degree".into()));
        }
        out.push(IsotypicComponent {
            characters: orbit,
            multiplicity: basis.cols() / per,
            basis,
            projector: proj,
        });
    }
    if !total.agrees_certified(&Mat::identity(&t, n), DEFAULT_GUARD) {
        return Err(Error::InternalContradiction("isotypic projectors do not sum to the identity".into()));
    }
    Ok(out)
}

/// Whether every pair of constituents is conjugate over the level of
/// degree `f_k` up to duality, decided on characters.
pub fn is_k_elementary(table: &CharacterTable, comps: &[IsotypicComponent], p: u64, f_k: u32) -> Result<bool> {
    let units = table.galois_units(p, f_k);
    let present: Vec<(usize, usize)> = comps
        .iter()
        .flat_map(|c| c.characters.iter().map(move |&i| (i, c.multiplicity * table.chars[i].degree)))
        .collect();
    let Some(&(first, _)) = present.first() else { return Ok(true) };
    let orbit = table.orbit(first, &units);
    let dual_orbit = table.orbit(table.dual(first), &units);
    let ok = present.iter().all(|(i, _)| orbit.contains(i) || dual_orbit.contains(i));
    if ok && present.iter().any(|x| x.1 != present[0].1) {
        return Err(Error::InternalContradiction(
            "elementary representation with unequal isotypic dimensions".into(),
        ));
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::super::group::fixtures;
    use super::*;

    fn q(p: u32, f: usize) -> Arc<Tower> {
        Tower::unramified(p, f, 40).unwrap()
    }

    #[test]
    fn minus_identity_eigenvalues() {
        let t = q(3, 1);
        let h = Mat::identity(&t, 4).neg();
        let ev = eigen_multiplicities(&h, 2).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!((ev[0].order, ev[0].multiplicity), (2, 4));
        let (ok, _) = is_perturbateur(&Mat::identity(&t, 3), 1).unwrap();
        assert!(!ok);
    }

    #[test]
    fn rotation_by_quarter_turn_over_q2() {
        // eigenvalues ±i are 2-power roots of unity, absent from Q_2
        let t = q(2, 1);
        let h = Mat::from_i64(&t, &[vec![0, -1], vec![1, 0]]);
        let ev = eigen_multiplicities(&h, 4).unwrap();
        let v: Vec<(u64, usize)> = ev.iter().map(|e| (e.order, e.multiplicity)).collect();
        assert_eq!(v, vec![(4, 1), (4, 1)]);
        assert!(is_perturbateur(&h, 4).unwrap().0);
    }

    #[test]
    fn cube_roots_with_repeated_eigenvalue() {
        let t = q(7, 1);
        let z = Elem::root_of_unity(&t, 3, 1).unwrap();
        let h = Mat::diag(&t, &[z.clone(), z.clone(), z.mul(&z)]);
        let (ok, ev) = is_perturbateur(&h, 3).unwrap();
        assert!(!ok);
        assert!(ev.contains(&(3, 2)) && ev.contains(&(3, 1)));
    }

    #[test]
    fn sign_action_is_homothety() {
        let t = q(2, 1);
        let act = GroupAction::sign(&t, 3);
        assert!(matches!(find_perturbateur(&act).unwrap(), PerturbateurSearch::HomothetyAction));
        let i = Elem::root_of_unity(&Tower::unramified(5, 1, 30).unwrap(), 4, 1).unwrap();
        let t5 = i.tower().clone();
        let act = GroupAction::cyclic(&Mat::diag(&t5, &[i.clone(), i.clone()]), 4).unwrap();
        assert!(matches!(find_perturbateur(&act).unwrap(), PerturbateurSearch::HomothetyAction));
    }

    #[test]
    fn c2_diagonal_splits_into_two_lines() {
        let t = q(3, 1);
        let h = Mat::from_i64(&t, &[vec![1, 0], vec![0, -1]]);
        let act = GroupAction::cyclic(&h, 2).unwrap();
        let table = CharacterTable::new(&act.group).unwrap();
        let comps = isotypic_decomposition(&act, &table).unwrap();
        assert_eq!(comps.len(), 2);
        assert!(!is_k_elementary(&table, &comps, 3, 1).unwrap());
        let triv = GroupAction::cyclic(&Mat::identity(&t, 2), 2).unwrap();
        let comps = isotypic_decomposition(&triv, &table).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].basis.cols(), 2);
    }

    #[test]
    fn projectors_are_central_idempotents() {
        // S3 acting on the permutation representation of three points
        let g = fixtures::dihedral(6);
        let t = q(5, 2);
        // permutation action on the cosets of an order-2 subgroup
        let sub = g.subgroup(&[(0..g.order()).find(|&x| g.elem_order(x) == 2).unwrap()]);
        let mut cosets: Vec<Vec<usize>> = Vec::new();
        for x in 0..g.order() {
            let mut c: Vec<usize> = sub.iter().map(|&s| g.mul(x, s)).collect();
            c.sort_unstable();
            if !cosets.contains(&c) {
                cosets.push(c);
            }
        }
        let rho: Vec<Mat> = (0..g.order())
            .map(|x| {
                let mut m = Mat::zeros(&t, 3, 3);
                for (i, c) in cosets.iter().enumerate() {
                    let mut img: Vec<usize> = c.iter().map(|&y| g.mul(x, y)).collect();
                    img.sort_unstable();
                    let j = cosets.iter().position(|d| *d == img).unwrap();
                    m.set(j, i, Elem::one(&t));
                }
                m
            })
            .collect();
        let act = GroupAction::new(g.clone(), rho).unwrap();
        let table = CharacterTable::new(&g).unwrap();
        let comps = isotypic_decomposition(&act, &table).unwrap();
        assert_eq!(comps.len(), 2);
        for c in &comps {
            assert!(c.projector.mul(&c.projector).agrees(&c.projector));
            for r in &act.rho {
                assert!(r.mul(&c.projector).agrees(&c.projector.mul(r)));
            }
        }
        match find_perturbateur(&act.restrict(&comps.iter().find(|c| c.basis.cols() == 2).unwrap().basis).unwrap()).unwrap() {
            PerturbateurSearch::Element(w) => assert!(w.eigenvalues.iter().all(|e| e.1 <= 1)),
            PerturbateurSearch::HomothetyAction => panic!("two-dimensional irreducible is not scalar"),
        }
    }
}
