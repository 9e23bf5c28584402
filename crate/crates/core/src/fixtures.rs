//! Shipped extensions, φ-modules and group actions used by the CLI and tests.

use std::sync::Arc;

use serde::Serialize;

use crate::bounds::{self, WreathElem, WreathGroup};
use crate::error::{Error, Result};
use crate::grouprep::action::GroupAction;
use crate::grouprep::group::fixtures as groups;
use crate::isocrystal::{PhiModule, PolarizedPhiModule};
use crate::padic::matrix::DEFAULT_GUARD;
use crate::padic::{Elem, Mat, Qp, Tower};

fn poly(t: &Arc<Tower>, c: &[i64]) -> Vec<Elem> {
    c.iter().map(|&x| Elem::from_i64(t, x)).collect()
}

/// `Q_2(√2)` over the unramified level of degree `f`; `c` sends `√2 ↦ -√2`.
pub fn sqrt2_extension(f: usize, prec: u32) -> Result<Arc<Tower>> {
    let k = Tower::unramified(2, f, prec)?;
    Tower::eisenstein(&k, &poly(&k, &[-2, 0]), &[("1".into(), poly(&k, &[0, 1])), ("-1".into(), poly(&k, &[0, -1]))])
}

/// Totally ramified quartic cyclic extension cut out by `u = ζ_16 + ζ_16^{-1}`,
/// `E = u⁴ - 4u² + 2`, generator `u ↦ u³ - 3u` (from `ζ ↦ ζ³`).
pub fn cyclic4_extension(f: usize, prec: u32, names: [&str; 4]) -> Result<Arc<Tower>> {
    let k = Tower::unramified(2, f, prec)?;
    let autos = vec![
        (names[0].to_string(), poly(&k, &[0, 1])),
        (names[1].to_string(), poly(&k, &[0, -3, 0, 1])),
        (names[2].to_string(), poly(&k, &[0, -1])),
        (names[3].to_string(), poly(&k, &[0, 3, 0, -1])),
    ];
    Tower::eisenstein(&k, &poly(&k, &[2, 0, -4, 0]), &autos)
}

/// `K(i)` with `u = i - 1`, `E = u² + 2u + 2`; conjugation `u ↦ -u - 2`.
pub fn gaussian_extension(f: usize, prec: u32) -> Result<Arc<Tower>> {
    let k = Tower::unramified(2, f, prec)?;
    Tower::eisenstein(&k, &poly(&k, &[2, 2]), &[("1".into(), poly(&k, &[0, 1])), ("c".into(), poly(&k, &[-2, -1]))])
}

/// `i = u + 1` in [`gaussian_extension`].
pub fn gaussian_i(t: &Arc<Tower>) -> Elem {
    Elem::uniformizer(t).add(&Elem::one(t))
}

/// Tame Kummer extension `u^e = p`, automorphisms `u ↦ ζ_e^j u` named `j`.
pub fn kummer_extension(p: u32, f: usize, e: usize, prec: u32) -> Result<Arc<Tower>> {
    let k = Tower::unramified(p, f, prec)?;
    let mut coeffs = vec![Elem::from_i64(&k, -(p as i64))];
    coeffs.extend((1..e).map(|_| Elem::zero(&k)));
    let mut autos = Vec::new();
    for j in 0..e {
        let z = Elem::root_of_unity(&k, e as u64, j as u64)?;
        autos.push((j.to_string(), vec![Elem::zero(&k), z]));
    }
    Tower::eisenstein(&k, &coeffs, &autos)
}

/// Simple slope-1/2 module `[[0,2],[1,0]]` over the 2-adic level `t`.
pub fn supersingular_plane(t: &Arc<Tower>) -> Result<PhiModule> {
    PhiModule::new(t, Mat::from_i64(t, &[vec![0, 2], vec![1, 0]]))
}

/// `λ_0^{⊕g}` with `λ_0 = [[0,-1],[1,0]]`.
pub fn lambda0(t: &Arc<Tower>, g: usize) -> Mat {
    let b = Mat::from_i64(t, &[vec![0, -1], vec![1, 0]]);
    Mat::block_diag(t, &vec![b; g])
}

/// `(D_{1/2})^g` with the product polarization.
pub fn supersingular_power(t: &Arc<Tower>, g: usize) -> Result<PolarizedPhiModule> {
    let d = supersingular_plane(t)?;
    let m = PhiModule::direct_sum(&vec![d; g])?;
    PolarizedPhiModule::new(m, lambda0(t, g))
}

/// Matrices of the quaternion group on `D_{1/2}`, indexed like
/// [`groups::quaternion`].
///
/// Endomorphisms are `[[a, 2σ(d)], [d, σ(a)]]`; `i` takes `a = √-3`, `d = 1`,
/// and `j` takes `a = √-3`, `d = x + yω` with `2x - y = 3`,
/// `x² - xy + y² = 1`, i.e. `x = (9 + √-15)/6`.
pub fn quaternion_matrices(t: &Arc<Tower>) -> Result<Vec<Mat>> {
    if t.p != 2 || t.f % 2 != 0 || t.e != 1 {
        return Err(Error::FieldIncompatibility(
            "quaternion matrices need an even-degree unramified 2-adic level".into(),
        ));
    }
    let q4 = Tower::unramified(2, 2, t.prec)?;
    let w = Elem::generator(&q4);
    let s3 = w.mul_i64(2).add(&Elem::one(&q4));
    let s15 = Qp::from_i64(2, -15, t.prec)
        .sqrt()
        .ok_or_else(|| Error::InternalContradiction("-15 is not a 2-adic square".into()))?;
    let x = Elem::from_qp(&q4, s15).add(&Elem::from_i64(&q4, 9)).div(&Elem::from_i64(&q4, 6))?;
    let y = x.mul_i64(2).sub(&Elem::from_i64(&q4, 3));
    let d = x.add(&y.mul(&w));
    let endo = |a: &Elem, d: &Elem| Mat::from_rows(&q4, vec![vec![a.clone(), d.frobenius().mul_i64(2)], vec![d.clone(), a.frobenius()]]);
    let ui = endo(&s3, &Elem::one(&q4));
    let uj = endo(&s3, &d);
    let uk = ui.mul(&uj);
    let one = Mat::identity(&q4, 2);
    let named = [
        ("1", one.clone()),
        ("i", ui.clone()),
        ("-1", one.neg()),
        ("-i", ui.neg()),
        ("j", uj.clone()),
        ("k", uk.clone()),
        ("-j", uj.neg()),
        ("-k", uk.neg()),
    ];
    let q8 = groups::quaternion();
    let emb = crate::isocrystal::LevelEmbedding::new(&q4, t.f)?;
    Ok((0..8).map(|x| emb.map_mat(&named.iter().find(|(n, _)| *n == q8.name(x)).unwrap().1)).collect())
}

/// Q8 acting on `D_{1/2}` over the level `t`.
pub fn quaternion_action(t: &Arc<Tower>) -> Result<GroupAction> {
    GroupAction::new(groups::quaternion(), quaternion_matrices(t)?)
}

/// Cyclic group generated by `k` acting on `D_{1/2}^g` diagonally.
pub fn k_diagonal_action(t: &Arc<Tower>, g: usize) -> Result<GroupAction> {
    let k = quaternion_matrices(t)?[groups::quaternion().index_of("k").unwrap()].clone();
    let h = Mat::block_diag(t, &vec![k; g]);
    let act = GroupAction::cyclic(&h, 4)?;
    let names = ["1", "k", "-1", "-k"].iter().map(|s| s.to_string()).collect();
    Ok(GroupAction {
        group: act.group.with_names(names),
        rho: act.rho,
    })
}

/// Block-monomial matrix of a wreath element: block `i` goes to `π(i)` through `q_i`.
pub fn wreath_matrix(t: &Arc<Tower>, q8: &[Mat], e: &WreathElem) -> Mat {
    let g = e.q.len();
    let mut m = Mat::zeros(t, 2 * g, 2 * g);
    for i in 0..g {
        let b = &q8[e.q[i] as usize];
        let r = e.perm[i] as usize;
        for a in 0..2 {
            for c in 0..2 {
                m.set(2 * r + a, 2 * i + c, b.get(a, c).clone());
            }
        }
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct WreathEmbeddingReport {
    pub g: usize,
    pub order: usize,
    pub sylow_order: usize,
    pub two_part: String,
    pub expected_two_part: String,
    pub symplectic: bool,
    pub commutes_with_phi: bool,
    pub homomorphism: bool,
    pub ok: bool,
}

/// Builds `Q8 ≀ S_g` and its Sylow 2-subgroup inside `Sp(λ_0^g)` over `Q_4`
/// and checks the order, the pairing and φ-compatibility of every element.
pub fn wreath_embedding(g: usize, prec: u32) -> Result<WreathEmbeddingReport> {
    let t = Tower::unramified(2, 2, prec)?;
    let q8 = quaternion_matrices(&t)?;
    let w = WreathGroup::new(g);
    let syl = WreathGroup::sylow2(g);
    let pol = supersingular_power(&t, g)?;
    let a = pol.module.matrix().clone();
    let j = pol.j.clone();
    let mats: Vec<Mat> = w.elements.iter().map(|e| wreath_matrix(&t, &q8, e)).collect();
    let symplectic = mats.iter().all(|m| m.transpose().mul(&j).mul(m).agrees_certified(&j, DEFAULT_GUARD));
    let commutes = mats.iter().all(|m| m.mul(&a).agrees_certified(&a.mul(&m.frobenius()), DEFAULT_GUARD));
    let index: std::collections::HashMap<&WreathElem, usize> = w.elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let homomorphism = w.generators.iter().all(|s| {
        let ms = wreath_matrix(&t, &q8, s);
        w.elements.iter().enumerate().all(|(i, x)| {
            let prod = WreathGroup::mul(&w.q8, x, s);
            mats[index[&prod]].agrees_certified(&mats[i].mul(&ms), DEFAULT_GUARD)
        })
    });
    let two = bounds::two_part(&num_bigint::BigUint::from(w.order()));
    let expected = bounds::wreath_sylow_order(g as u64);
    let ok = symplectic && commutes && homomorphism && two == expected && num_bigint::BigUint::from(syl.order()) == expected;
    Ok(WreathEmbeddingReport {
        g,
        order: w.order(),
        sylow_order: syl.order(),
        two_part: two.to_string(),
        expected_two_part: expected.to_string(),
        symplectic,
        commutes_with_phi: commutes,
        homomorphism,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quaternion_relations_and_compatibility() {
        let t = Tower::unramified(2, 2, 64).unwrap();
        let act = quaternion_action(&t).unwrap();
        let d = supersingular_plane(&t).unwrap();
        act.check_phi(&d).unwrap();
        act.check_symplectic(&lambda0(&t, 1)).unwrap();
        assert!(act.is_faithful());
    }

    #[test]
    fn extensions_validate() {
        sqrt2_extension(1, 40).unwrap();
        cyclic4_extension(2, 40, ["1", "t", "t2", "t3"]).unwrap();
        let g = gaussian_extension(2, 40).unwrap();
        let i = gaussian_i(&g);
        assert!(i.mul(&i).agrees(&Elem::from_i64(&g, -1)));
        kummer_extension(5, 1, 4, 30).unwrap();
        kummer_extension(3, 2, 2, 30).unwrap();
    }

    #[test]
    fn wreath_small() {
        let r = wreath_embedding(2, 48).unwrap();
        assert!(r.ok, "{r:?}");
        assert_eq!(r.order, 128);
    }
}
