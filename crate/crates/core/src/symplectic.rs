//! Alternating forms and Lagrangian subspaces.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::{Elem, Mat, Tower};
use crate::sampling::Rng64;

#[derive(Clone, Debug)]
pub struct SymplecticSpace {
    j: Mat,
}

impl SymplecticSpace {
    pub fn new(j: Mat) -> Result<SymplecticSpace> {
        let n = j.rows();
        if !j.is_square() || n % 2 != 0 || n == 0 {
            return Err(Error::invalid("Gram matrix must be square of positive even size"));
        }
        if !j.transpose().add(&j).is_zero() || (0..n).any(|i| !j.get(i, i).is_zero()) {
            return Err(Error::invalid("Gram matrix is not alternating"));
        }
        if j.rank()? != n {
            return Err(Error::invalid("Gram matrix is degenerate"));
        }
        Ok(SymplecticSpace { j })
    }

    /// Block-diagonal sum of `g` copies of `[[0,-1],[1,0]]`.
    pub fn standard(t: &Arc<Tower>, g: usize) -> SymplecticSpace {
        let b = Mat::from_i64(t, &[vec![0, -1], vec![1, 0]]);
        SymplecticSpace {
            j: Mat::block_diag(t, &vec![b; g]),
        }
    }

    pub fn gram(&self) -> &Mat {
        &self.j
    }

    pub fn field(&self) -> &Arc<Tower> {
        self.j.tower()
    }

    pub fn dim(&self) -> usize {
        self.j.rows()
    }

    pub fn g(&self) -> usize {
        self.dim() / 2
    }

    /// `xᵀ J y` for column vectors.
    pub fn pair(&self, x: &Mat, y: &Mat) -> Elem {
        x.transpose().mul(&self.j).mul(y).get(0, 0).clone()
    }

    /// Gram matrix of the columns of `w`.
    pub fn restricted_gram(&self, w: &Mat) -> Mat {
        w.transpose().mul(&self.j).mul(w)
    }

    pub fn is_isotropic(&self, b: &Mat) -> bool {
        self.restricted_gram(b).is_zero()
    }

    pub fn is_lagrangian(&self, b: &Mat) -> Result<bool> {
        Ok(b.rows() == self.dim() && b.rank()? == self.g() && b.cols() == self.g() && self.is_isotropic(b))
    }

    pub fn is_symplectic(&self, h: &Mat) -> bool {
        h.transpose().mul(&self.j).mul(h).agrees(&self.j)
    }

    pub fn embed(&self, into: &Arc<Tower>) -> SymplecticSpace {
        SymplecticSpace { j: self.j.embed(into) }
    }

    /// Symplectic basis `[e_1..e_g | f_1..f_g]` with `⟨e_i, f_j⟩ = δ_ij`.
    pub fn symplectic_basis(&self) -> Result<Mat> {
        let pairs = symplectic_pairs(self, &Mat::identity(self.field(), self.dim()))?;
        let es: Vec<Mat> = pairs.iter().map(|p| p.0.clone()).collect();
        let fs: Vec<Mat> = pairs.iter().map(|p| p.1.clone()).collect();
        Ok(hcat(self.field(), self.dim(), &es).hstack(&hcat(self.field(), self.dim(), &fs)))
    }
}

fn hcat(t: &Arc<Tower>, n: usize, cols: &[Mat]) -> Mat {
    cols.iter().fold(Mat::zeros(t, n, 0), |acc, c| acc.hstack(c))
}

/// Symplectic Gram–Schmidt on the span of the columns of `w`, which must be
/// a non-degenerate subspace.
pub fn symplectic_pairs(v: &SymplecticSpace, w: &Mat) -> Result<Vec<(Mat, Mat)>> {
    let mut rest: Vec<Mat> = {
        let b = w.column_basis()?;
        (0..b.cols()).map(|i| b.col_mat(i)).collect()
    };
    let mut out = Vec::new();
    while let Some(x) = rest.first().cloned() {
        // partner with the best-conditioned pairing
        let mut best: Option<(usize, i64)> = None;
        for (k, c) in rest.iter().enumerate().skip(1) {
            let val = v.pair(&x, c);
            if let Some(vu) = val.valuation_units() {
                if !val.is_zero() && best.map_or(true, |b| vu < b.1) {
                    best = Some((k, vu));
                }
            }
        }
        let Some((k, _)) = best else {
            return Err(Error::invalid("subspace is degenerate for the pairing"));
        };
        let wk = rest[k].clone();
        let y = wk.scale(&v.pair(&x, &wk).inv()?);
        let mut next = Vec::new();
        for (idx, c) in rest.iter().enumerate() {
            if idx == 0 || idx == k {
                continue;
            }
            let a = v.pair(&y, c);
            let b = v.pair(&x, c);
            next.push(c.add(&x.scale(&a)).sub(&y.scale(&b)));
        }
        out.push((x, y));
        rest = next;
    }
    Ok(out)
}

/// Random Lagrangian from an affine chart: swap a random subset of the
/// symplectic pairs, then take the graph of a random symmetric matrix.
/// Coordinates are integers in `[-bound, bound]`, so the result is defined
/// over the field of `J`.
pub fn random_rational_lagrangian(v: &SymplecticSpace, rng: &mut Rng64, bound: i64) -> Result<Mat> {
    let t = v.field().clone();
    let g = v.g();
    let sb = v.symplectic_basis()?;
    let mut es: Vec<Mat> = (0..g).map(|i| sb.col_mat(i)).collect();
    let mut fs: Vec<Mat> = (0..g).map(|i| sb.col_mat(g + i)).collect();
    for i in 0..g {
        if rng.gen_bool(0.5) {
            let e = es[i].clone();
            es[i] = fs[i].clone();
            fs[i] = e.neg();
        }
    }
    let mut s = vec![vec![0i64; g]; g];
    for i in 0..g {
        for j in i..g {
            let x = rng.gen_range(-bound..=bound);
            s[i][j] = x;
            s[j][i] = x;
        }
    }
    let cols: Vec<Mat> = (0..g)
        .map(|i| (0..g).fold(es[i].clone(), |acc, j| acc.add(&fs[j].scale(&Elem::from_i64(&t, s[i][j])))))
        .collect();
    Ok(hcat(&t, v.dim(), &cols))
}

fn random_in_span(w: &Mat, rng: &mut Rng64, bound: i64) -> Mat {
    let t = w.tower().clone();
    let c = Mat::from_fn(&t, w.cols(), 1, |_, _| Elem::from_i64(&t, rng.gen_range(-bound..=bound)));
    w.mul(&c)
}

/// Lagrangian subspace meeting `m` trivially, for `dim m ≤ g`.
///
/// Recursion: for `x ∈ M` and `y` with `⟨x, y⟩ = 1`, `y ∉ M`, solve in
/// `V' = ⟨x, y⟩^⊥` against the projection of `M` (which kills `x`) and
/// adjoin `y`.
pub fn lagrangian_avoiding(v: &SymplecticSpace, m: &Mat, rng: &mut Rng64) -> Result<Mat> {
    let mb = if m.cols() == 0 { m.clone() } else { m.column_basis()? };
    if mb.cols() > v.g() {
        return Err(Error::invalid(format!("subspace of dimension {} exceeds g = {}", mb.cols(), v.g())));
    }
    let whole = Mat::identity(v.field(), v.dim());
    avoid_in(v, &whole, &mb, rng)
}

fn avoid_in(v: &SymplecticSpace, w: &Mat, m: &Mat, rng: &mut Rng64) -> Result<Mat> {
    let t = v.field().clone();
    let k = w.cols() / 2;
    if k == 0 {
        return Ok(Mat::zeros(&t, v.dim(), 0));
    }
    if m.cols() <= 1 {
        let sub = SymplecticSpace::new(v.restricted_gram(w))?;
        for attempt in 0..200 {
            let f = w.mul(&random_rational_lagrangian(&sub, rng, 2 + attempt / 10)?);
            if m.cols() == 0 || f.hstack(m).rank()? == k + m.cols() {
                return Ok(f);
            }
        }
        return Err(Error::BudgetExhausted {
            what: "transverse Lagrangian".into(),
            tries: 200,
        });
    }
    let x = m.col_mat(0);
    let mut y = None;
    for attempt in 0..200 {
        let c = random_in_span(w, rng, 2 + attempt / 10);
        if !v.pair(&x, &c).is_zero() && m.hstack(&c).rank()? == m.cols() + 1 {
            y = Some(c);
            break;
        }
    }
    let y = y.ok_or(Error::BudgetExhausted {
        what: "vector outside M and x^⊥".into(),
        tries: 200,
    })?;
    let y = y.scale(&v.pair(&x, &y).inv()?);
    let project = |c: &Mat| -> Mat {
        let a = v.pair(&y, c);
        let b = v.pair(&x, c);
        c.add(&x.scale(&a)).sub(&y.scale(&b))
    };
    let proj_cols = |mat: &Mat| -> Mat { hcat(&t, v.dim(), &(0..mat.cols()).map(|i| project(&mat.col_mat(i))).collect::<Vec<_>>()) };
    let w2 = proj_cols(w).column_basis()?;
    let m2 = proj_cols(m);
    let m2 = if m2.is_zero() { Mat::zeros(&t, v.dim(), 0) } else { m2.column_basis()? };
    let f2 = avoid_in(v, &w2, &m2, rng)?;
    Ok(f2.hstack(&y))
}

/// Two-dimensional symplectic plane spanned by eigenvectors `x`, `y` of `h`
/// with `⟨x, y⟩ = 1`.
#[derive(Clone, Debug)]
pub struct EigenPlane {
    pub x: Mat,
    pub y: Mat,
    /// Indices into the supplied eigenvalue list.
    pub labels: (usize, usize),
}

/// Symplectic basis of eigenvectors for a diagonalizable `h ∈ Sp(J)` whose
/// eigenvalues all occur in `roots`.
pub fn symplectic_eigenbasis(v: &SymplecticSpace, h: &Mat, roots: &[Elem]) -> Result<Vec<EigenPlane>> {
    let t = v.field().clone();
    let n = v.dim();
    if !v.is_symplectic(h) {
        return Err(Error::NoSymplecticEigenbasis("h does not preserve the pairing".into()));
    }
    let mut spaces: Vec<(usize, Mat)> = Vec::new();
    let mut total = 0;
    for (i, mu) in roots.iter().enumerate() {
        if spaces.iter().any(|(k, _)| roots[*k].agrees(mu)) {
            continue;
        }
        let ker = h.sub(&Mat::identity(&t, n).scale(mu)).kernel()?;
        if ker.cols() > 0 {
            total += ker.cols();
            spaces.push((i, ker));
        }
    }
    if total != n {
        return Err(Error::NoSymplecticEigenbasis(format!("eigenvectors span {total} of {n} dimensions")));
    }
    let mut planes = Vec::new();
    let mut done = vec![false; spaces.len()];
    for a in 0..spaces.len() {
        if done[a] {
            continue;
        }
        let (ia, xa) = &spaces[a];
        let inv = roots[*ia].inv()?;
        let b = spaces
            .iter()
            .position(|(k, _)| roots[*k].agrees(&inv))
            .ok_or_else(|| Error::NoSymplecticEigenbasis("eigenvalue without inverse partner".into()))?;
        done[a] = true;
        done[b] = true;
        if a == b {
            for (x, y) in symplectic_pairs(v, xa)? {
                planes.push(EigenPlane { x, y, labels: (*ia, *ia) });
            }
        } else {
            let (ib, yb) = &spaces[b];
            if xa.cols() != yb.cols() {
                return Err(Error::NoSymplecticEigenbasis("paired eigenspaces differ in dimension".into()));
            }
            let gram = xa.transpose().mul(v.gram()).mul(yb);
            let y = yb.mul(
                &gram
                    .inverse()
                    .map_err(|_| Error::NoSymplecticEigenbasis("paired eigenspaces are not in duality".into()))?,
            );
            for c in 0..xa.cols() {
                planes.push(EigenPlane {
                    x: xa.col_mat(c),
                    y: y.col_mat(c),
                    labels: (*ia, *ib),
                });
            }
        }
    }
    Ok(planes)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockShape {
    /// One plane with distinct eigenvalues; `F = ⟨x + y⟩`.
    DistinctPlane,
    /// `V(μ,μ) ⊕ V(λ,ν)` with `μ ∉ {λ, ν}`; `F = ⟨x_i + x_j, y_i - y_j⟩`.
    PairedPlanes,
    /// `V(μ,μ)` alone; `F = ⟨x⟩`, contributing one dimension to `F ∩ h(F)`.
    Defect,
}

#[derive(Clone, Debug)]
pub struct SmallIntersection {
    pub basis: Mat,
    pub blocks: Vec<(BlockShape, Vec<usize>)>,
}

/// Lagrangian `F` with `dim F ∩ h(F) ≤ 1`, for `h` symplectic, diagonalizable
/// with eigenvalues in `roots`, and perturbateur.
///
/// Planes of a symplectic eigenbasis are grouped into orthogonal blocks on
/// which `F ∩ h(F)` is controlled; ties are broken by lowest index.
pub fn lagrangian_h_small_intersection(v: &SymplecticSpace, h: &Mat, roots: &[Elem]) -> Result<SmallIntersection> {
    let planes = symplectic_eigenbasis(v, h, roots)?;
    let g = v.g();
    // eigenvalue multiplicities from the labels
    let mut mult = std::collections::BTreeMap::new();
    for p in &planes {
        *mult.entry(p.labels.0).or_insert(0usize) += 1;
        *mult.entry(p.labels.1).or_insert(0usize) += 1;
    }
    if mult.values().any(|&m| m > g) {
        return Err(Error::NotPerturbateur(format!("an eigenvalue has multiplicity above g = {g}")));
    }
    let labels: Vec<(usize, usize)> = planes.iter().map(|p| p.labels).collect();
    let mut used = vec![false; planes.len()];
    let mut blocks = Vec::new();
    if !group_planes(&labels, &mut used, &mut blocks, true) {
        return Err(Error::InternalContradiction("no admissible grouping of eigenplanes".into()));
    }
    let t = v.field().clone();
    let mut cols = Vec::new();
    for (shape, idx) in &blocks {
        match shape {
            BlockShape::DistinctPlane => cols.push(planes[idx[0]].x.add(&planes[idx[0]].y)),
            BlockShape::PairedPlanes => {
                let (a, b) = (&planes[idx[0]], &planes[idx[1]]);
                cols.push(a.x.add(&b.x));
                cols.push(a.y.sub(&b.y));
            }
            BlockShape::Defect => cols.push(planes[idx[0]].x.clone()),
        }
    }
    let basis = hcat(&t, v.dim(), &cols);
    Ok(SmallIntersection { basis, blocks })
}

fn group_planes(labels: &[(usize, usize)], used: &mut [bool], blocks: &mut Vec<(BlockShape, Vec<usize>)>, defect_allowed: bool) -> bool {
    let Some(i) = used.iter().position(|u| !u) else { return true };
    used[i] = true;
    let (a, b) = labels[i];
    if a != b {
        blocks.push((BlockShape::DistinctPlane, vec![i]));
        if group_planes(labels, used, blocks, defect_allowed) {
            return true;
        }
        blocks.pop();
    }
    for j in i + 1..labels.len() {
        if used[j] {
            continue;
        }
        let (c, d) = labels[j];
        let ok = (a == b && c != a && d != a) || (c == d && a != c && b != c);
        if !ok {
            continue;
        }
        used[j] = true;
        let pair = if a == b { vec![i, j] } else { vec![j, i] };
        blocks.push((BlockShape::PairedPlanes, pair));
        if group_planes(labels, used, blocks, defect_allowed) {
            return true;
        }
        blocks.pop();
        used[j] = false;
    }
    if a == b && defect_allowed {
        blocks.push((BlockShape::Defect, vec![i]));
        if group_planes(labels, used, blocks, false) {
            return true;
        }
        blocks.pop();
    }
    used[i] = false;
    false
}

/// Random symplectic matrix: a product of transvections `x ↦ x + c⟨v, x⟩v`.
pub fn random_symplectic(v: &SymplecticSpace, rng: &mut Rng64, steps: usize) -> Mat {
    let t = v.field().clone();
    let n = v.dim();
    let mut m = Mat::identity(&t, n);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..steps {
        order.shuffle(rng);
        let w = Mat::from_fn(&t, n, 1, |i, _| {
            Elem::from_i64(&t, if i == order[0] || rng.gen_bool(0.3) { rng.gen_range(-1..=1) } else { 0 })
        });
        if w.is_zero() {
            continue;
        }
        let c = Elem::from_i64(&t, if rng.gen_bool(0.5) { 1 } else { -1 });
        // T = I + c w wᵀ J
        let tr = Mat::identity(&t, n).add(&w.mul(&w.transpose()).mul(v.gram()).scale(&c));
        m = m.mul(&tr);
    }
    m
}
