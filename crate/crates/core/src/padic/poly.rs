//! Polynomials over a tower level: Newton polygons and slope factorization.
//!
//! Coefficient vectors are constant-first.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::field::Elem;
use super::matrix::Mat;
use crate::error::{Error, Result};

/// Lower convex hull of the points (i, v(a_i)).
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonPolygon {
    /// Vertices (degree, valuation), valuations normalized so v(p) = 1.
    pub vertices: Vec<(usize, BigRational)>,
    /// Root valuations with multiplicities, ascending.
    pub slopes: Vec<(BigRational, usize)>,
}

impl NewtonPolygon {
    pub fn total_multiplicity(&self) -> usize {
        self.slopes.iter().map(|s| s.1).sum()
    }
}

fn units_to_q(v: i64, e: usize) -> BigRational {
    BigRational::new(v.into(), (e as i64).into())
}

/// Newton polygon of a polynomial with nonzero constant term. Coefficients
/// that are zero at precision must sit certifiably above the hull.
pub fn newton_polygon(coeffs: &[Elem]) -> Result<NewtonPolygon> {
    let n = coeffs.len() - 1;
    let e = coeffs[0].tower().e;
    let pts: Vec<(usize, i64)> = coeffs.iter().enumerate().filter_map(|(i, c)| c.valuation_units().map(|v| (i, v))).collect();
    if pts.first().map(|p| p.0) != Some(0) {
        return Err(Error::precision("constant coefficient not distinguishable from zero"));
    }
    if pts.last().map(|p| p.0) != Some(n) {
        return Err(Error::precision("leading coefficient not distinguishable from zero"));
    }
    // lower hull by monotone chain; slopes compared with cross products
    let mut hull: Vec<(usize, i64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            let (x3, y3) = pt;
            // keep (x2,y2) only if it lies strictly below the segment (x1,y1)-(x3,y3)
            let cross = (x2 as i64 - x1 as i64) * (y3 - y1) - (y2 - y1) * (x3 as i64 - x1 as i64);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    // zeros at precision must be certifiably above the hull
    for (i, c) in coeffs.iter().enumerate() {
        if c.valuation_units().is_some() || c.is_exact_zero() {
            continue;
        }
        let a = c.abs_prec_units().unwrap();
        let seg = hull.windows(2).find(|w| w[0].0 <= i && i <= w[1].0).unwrap();
        let ((x1, y1), (x2, y2)) = (seg[0], seg[1]);
        // hull height at i is y1 + (y2-y1)(i-x1)/(x2-x1); need a > height
        let lhs = a * (x2 - x1) as i64;
        let rhs = y1 * (x2 - x1) as i64 + (y2 - y1) * (i - x1) as i64;
        if lhs <= rhs {
            return Err(Error::precision(format!("coefficient of degree {i} too imprecise to place the Newton polygon")));
        }
    }
    let vertices = hull.iter().map(|&(i, v)| (i, units_to_q(v, e))).collect();
    let mut slopes: Vec<(BigRational, usize)> = Vec::new();
    for w in hull.windows(2).rev() {
        let ((x1, y1), (x2, y2)) = (w[0], w[1]);
        let len = x2 - x1;
        let s = BigRational::new((y1 - y2).into(), ((len * e) as i64).into());
        slopes.push((s, len));
    }
    slopes.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(NewtonPolygon { vertices, slopes })
}

pub fn poly_mul(a: &[Elem], b: &[Elem]) -> Vec<Elem> {
    let t = a[0].tower();
    let mut out = vec![Elem::zero(t); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_exact_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&x.mul(y));
        }
    }
    out
}

fn poly_sub(a: &[Elem], b: &[Elem]) -> Vec<Elem> {
    let t = a[0].tower();
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(|| Elem::zero(t));
            let y = b.get(i).cloned().unwrap_or_else(|| Elem::zero(t));
            x.sub(&y)
        })
        .collect()
}

/// Horner evaluation at a square matrix.
pub fn eval_at_matrix(poly: &[Elem], m: &Mat) -> Mat {
    let t = m.tower();
    let n = m.rows();
    let mut acc = Mat::zeros(t, n, n);
    for c in poly.iter().rev() {
        acc = acc.mul(m).add(&Mat::identity(t, n).scale(c));
    }
    acc
}

/// Splits a polynomial along an integer valuation cut: roots of valuation
/// `> s` versus `< s` (none may have valuation exactly `s`).
///
/// Returns `(upper, lower)` as polynomials in `y = X / p^s`; the factors of
/// the original polynomial are `upper(X/p^s)` and `lower(X/p^s)` up to scalars.
pub fn split_at_valuation(poly: &[Elem], s: i64) -> Result<(Vec<Elem>, Vec<Elem>)> {
    let t = poly[0].tower().clone();
    let e = t.e as i64;
    let n = poly.len() - 1;
    // scaled[i] = a_i p^{s i}, then divided by p^c
    let scaled: Vec<Elem> = poly.iter().enumerate().map(|(i, c)| c.shift(s * i as i64)).collect();
    let np = newton_polygon(&scaled)?;
    if np.slopes.iter().any(|(v, _)| v.is_zero()) {
        return Err(Error::invalid("a root has valuation exactly at the cut"));
    }
    let k: usize = np.slopes.iter().filter(|(v, _)| v > &BigRational::zero()).map(|x| x.1).sum();
    let cmin = scaled.iter().filter_map(|c| c.valuation_units()).min().unwrap();
    if cmin % e != 0 {
        return Err(Error::invalid("cut requires an unramified coefficient scale"));
    }
    let q: Vec<Elem> = scaled.iter().map(|c| c.shift(-cmin / e)).collect();
    let lead = q[k].clone();
    if lead.valuation_units() != Some(0) {
        return Err(Error::InternalContradiction("Newton vertex is not a unit".into()));
    }
    let lead_inv = lead.inv()?;
    let mut g: Vec<Elem> = vec![Elem::zero(&t); k + 1];
    g[k] = Elem::one(&t);
    let mut h: Vec<Elem> = vec![lead.clone()];
    let max_iter = (t.prec as usize + 4) * t.e + 16;
    for _ in 0..max_iter {
        let err = poly_sub(&q, &poly_mul(&g, &h));
        if err.iter().all(|c| c.is_zero()) {
            break;
        }
        for i in 0..k {
            g[i] = g[i].add(&err[i].mul(&lead_inv));
        }
        let dh: Vec<Elem> = err[k..].to_vec();
        if h.len() < dh.len() {
            h.resize(dh.len(), Elem::zero(&t));
        }
        for (i, c) in dh.into_iter().enumerate() {
            h[i] = h[i].add(&c);
        }
    }
    h.truncate(n - k + 1);
    let err = poly_sub(&q, &poly_mul(&g, &h));
    if !err.iter().all(|c| c.is_zero()) {
        return Err(Error::precision("Hensel slope factorization did not converge at working precision"));
    }
    Ok((g, h))
}

/// Evaluates `f(M / p^s)`.
pub fn eval_scaled(poly: &[Elem], m: &Mat, s: i64) -> Mat {
    let ms = m.map(|x| x.shift(-s));
    eval_at_matrix(poly, &ms)
}

pub fn is_monic(poly: &[Elem]) -> bool {
    poly.last().is_some_and(|c| c.is_one())
}

pub fn rational_is_integer(q: &BigRational) -> bool {
    q.denom().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::Tower;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn polygon_of_x2_minus_2() {
        let t = Tower::unramified(2, 1, 30).unwrap();
        let p = vec![Elem::from_i64(&t, -2), Elem::zero(&t), Elem::one(&t)];
        let np = newton_polygon(&p).unwrap();
        assert_eq!(np.slopes, vec![(q(1, 2), 2)]);
    }

    #[test]
    fn polygon_with_two_slopes() {
        let t = Tower::unramified(3, 1, 30).unwrap();
        // (X - 1)(X - 9) = X^2 - 10X + 9
        let p = vec![Elem::from_i64(&t, 9), Elem::from_i64(&t, -10), Elem::one(&t)];
        let np = newton_polygon(&p).unwrap();
        assert_eq!(np.slopes, vec![(q(0, 1), 1), (q(2, 1), 1)]);
    }

    #[test]
    fn hensel_split_recovers_factors() {
        let t = Tower::unramified(3, 1, 40).unwrap();
        // (X - 2)(X - 27)(X^2 + 3) : valuations 0, 3, 1/2 twice
        let f1 = vec![Elem::from_i64(&t, -2), Elem::one(&t)];
        let f2 = vec![Elem::from_i64(&t, -27), Elem::one(&t)];
        let f3 = vec![Elem::from_i64(&t, 3), Elem::zero(&t), Elem::one(&t)];
        let p = poly_mul(&poly_mul(&f1, &f2), &f3);
        let (g, h) = split_at_valuation(&p, 1).unwrap();
        assert_eq!(g.len() - 1, 1);
        assert_eq!(h.len() - 1, 3);
        // upper root 27 / 3 = 9
        let nine = Elem::from_i64(&t, 9);
        let val = g[0].add(&g[1].mul(&nine));
        assert!(val.is_zero());
    }
}
