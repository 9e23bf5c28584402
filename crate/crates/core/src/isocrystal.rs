//! φ-modules over an unramified level: slopes, isoclinic pieces, duality,
//! polarizations and sub-φ-modules.
//!
//! A φ-module is `K^n` with `φ(x) = A σ(x)` for an invertible matrix `A`.

use std::sync::Arc;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::matrix::qp_linear_kernel;
use crate::padic::poly::{eval_scaled, newton_polygon, split_at_valuation};
use crate::padic::{Elem, Mat, Tower};
use crate::sampling;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeProfile {
    /// Distinct slopes, ascending, with multiplicities.
    #[serde(serialize_with = "ser_slopes")]
    pub slopes: Vec<(BigRational, usize)>,
}

fn ser_slopes<S: serde::Serializer>(v: &[(BigRational, usize)], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for (q, m) in v {
        seq.serialize_element(&(q.to_string(), m))?;
    }
    seq.end()
}

impl SlopeProfile {
    pub fn dim(&self) -> usize {
        self.slopes.iter().map(|s| s.1).sum()
    }

    /// `Σ μ d_μ`.
    pub fn weighted_sum(&self) -> BigRational {
        self.slopes
            .iter()
            .fold(BigRational::zero(), |acc, (q, m)| acc + q * BigRational::from_integer((*m as i64).into()))
    }

    /// Multiset as a flat sorted list.
    pub fn flat(&self) -> Vec<BigRational> {
        self.slopes.iter().flat_map(|(q, m)| std::iter::repeat(q.clone()).take(*m)).collect()
    }

    pub fn from_flat(mut v: Vec<BigRational>) -> SlopeProfile {
        v.sort();
        let mut slopes: Vec<(BigRational, usize)> = Vec::new();
        for q in v {
            match slopes.last_mut() {
                Some((last, m)) if *last == q => *m += 1,
                _ => slopes.push((q, 1)),
            }
        }
        SlopeProfile { slopes }
    }

    /// `"1/2 ×2, 1 ×1"`.
    pub fn display(&self) -> String {
        self.slopes.iter().map(|(q, m)| format!("{} ×{}", q, m)).collect::<Vec<_>>().join(", ")
    }

    /// Whether `other` is a sub-multiset.
    pub fn contains(&self, other: &SlopeProfile) -> bool {
        other.slopes.iter().all(|(q, m)| self.slopes.iter().any(|(q2, m2)| q2 == q && m2 >= m))
    }
}

#[derive(Clone, Debug)]
pub struct PhiModule {
    field: Arc<Tower>,
    a: Mat,
}

/// An isoclinic component: slope and basis columns.
#[derive(Clone, Debug)]
pub struct Component {
    pub slope: BigRational,
    pub basis: Mat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubmoduleMode {
    Exact,
    Sampled,
}

impl PhiModule {
    pub fn new(field: &Arc<Tower>, a: Mat) -> Result<PhiModule> {
        if field.e != 1 {
            return Err(Error::invalid("φ-modules live over an unramified level"));
        }
        if !a.is_square() {
            return Err(Error::invalid("Frobenius matrix must be square"));
        }
        if a.rows() == 0 {
            return Err(Error::invalid("zero-dimensional φ-module"));
        }
        if a.rank()? != a.rows() {
            return Err(Error::invalid("Frobenius matrix is singular"));
        }
        Ok(PhiModule { field: field.clone(), a })
    }

    /// The simple module of slope `s/r`: companion matrix of `x^r - p^s`.
    pub fn simple(field: &Arc<Tower>, s: i64, r: usize) -> Result<PhiModule> {
        if r == 0 || num_integer::gcd(s.unsigned_abs() as usize, r) != 1 && !(s == 0 && r == 1) {
            return Err(Error::invalid(format!("slope {s}/{r} must be in lowest terms")));
        }
        let mut a = Mat::zeros(field, r, r);
        for i in 0..r - 1 {
            a.set(i + 1, i, Elem::one(field));
        }
        a.set(0, r - 1, Elem::one(field).shift(s));
        Self::new(field, a)
    }

    pub fn direct_sum(parts: &[PhiModule]) -> Result<PhiModule> {
        let t = parts[0].field.clone();
        let blocks: Vec<Mat> = parts.iter().map(|m| m.a.clone()).collect();
        Self::new(&t, Mat::block_diag(&t, &blocks))
    }

    pub fn field(&self) -> &Arc<Tower> {
        &self.field
    }

    pub fn matrix(&self) -> &Mat {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// `φ` applied to the columns of `x`.
    pub fn apply(&self, x: &Mat) -> Mat {
        self.a.mul(&x.frobenius())
    }

    /// `t_N = v_p(det A)`.
    pub fn t_n(&self) -> Result<i64> {
        self.a
            .det()?
            .valuation()
            .ok_or_else(|| Error::precision("determinant indistinguishable from zero"))
    }

    /// Matrix of `φ^f`, which is linear: `A σ(A) ... σ^{f-1}(A)`.
    pub fn linearization(&self) -> Mat {
        let mut b = self.a.clone();
        let mut s = self.a.clone();
        for _ in 1..self.field.f {
            s = s.frobenius();
            b = b.mul(&s);
        }
        b
    }

    /// Matrix of the σ^r-semilinear map `φ^r`.
    pub fn power_matrix(&self, r: usize) -> Mat {
        let mut b = Mat::identity(&self.field, self.dim());
        let mut s = self.a.clone();
        for _ in 0..r {
            b = b.mul(&s);
            s = s.frobenius();
        }
        b
    }

    pub fn newton_slopes(&self) -> Result<SlopeProfile> {
        let b = self.linearization();
        let np = newton_polygon(&b.charpoly())?;
        let f = BigRational::from_integer((self.field.f as i64).into());
        Ok(SlopeProfile {
            slopes: np.slopes.into_iter().map(|(q, m)| (q / &f, m)).collect(),
        })
    }

    /// `P^{-1} A σ(P)`.
    pub fn change_basis(&self, p: &Mat) -> Result<PhiModule> {
        let a = p.inverse()?.mul(&self.a).mul(&p.frobenius());
        Self::new(&self.field, a)
    }

    /// Dual with Frobenius multiplied by `p^twist`: `p^twist (A^{-1})^T`.
    pub fn dual(&self, twist: i64) -> Result<PhiModule> {
        let a = self.a.inverse()?.transpose().map(|x| x.shift(twist));
        Self::new(&self.field, a)
    }

    /// Whether the column span of `w` is φ-stable.
    pub fn is_stable(&self, w: &Mat) -> Result<bool> {
        if w.cols() == 0 {
            return Ok(true);
        }
        w.hstack(&self.apply(w)).rank().map(|r| r == w.rank().unwrap_or(usize::MAX))
    }

    /// φ restricted to a stable subspace with basis `w`: `A σ(W) = W R`.
    pub fn restrict(&self, w: &Mat) -> Result<PhiModule> {
        let r = w.solve(&self.apply(w))?.ok_or_else(|| Error::invalid("subspace is not φ-stable"))?;
        Self::new(&self.field, r)
    }

    /// Isoclinic decomposition by slope factorization of the linearization.
    pub fn isoclinic_decompose(&self) -> Result<Vec<Component>> {
        let n = self.dim();
        let b = self.linearization();
        let np = newton_polygon(&b.charpoly())?;
        let f = BigRational::from_integer((self.field.f as i64).into());
        let lambdas: Vec<(BigRational, usize)> = np.slopes.clone();
        if lambdas.len() == 1 {
            return Ok(vec![Component {
                slope: &lambdas[0].0 / &f,
                basis: Mat::identity(&self.field, n),
            }]);
        }
        // one cut between consecutive slopes: factor of C = B^k at an integer s
        let mut cuts: Vec<(Mat, Mat)> = Vec::new();
        for w in lambdas.windows(2) {
            let (lo, hi) = (&w[0].0, &w[1].0);
            let (k, s) = separator(lo, hi);
            let c = b.pow(k as u64);
            let (upper, lower) = split_at_valuation(&c.charpoly(), s)?;
            cuts.push((eval_scaled(&upper, &c, s), eval_scaled(&lower, &c, s)));
        }
        let mut out = Vec::new();
        for (j, (lam, mult)) in lambdas.iter().enumerate() {
            // slope j: above cuts 0..j, below cuts j..
            let mut stack: Option<Mat> = None;
            for (i, (up, low)) in cuts.iter().enumerate() {
                let m = if i < j { up } else { low };
                stack = Some(match stack {
                    None => m.clone(),
                    Some(s) => s.vstack(m),
                });
            }
            let ker = stack.unwrap().kernel()?;
            if ker.cols() != *mult {
                return Err(Error::precision(format!(
                    "isoclinic piece has dimension {} but slope multiplicity {}",
                    ker.cols(),
                    mult
                )));
            }
            out.push(Component { slope: lam / &f, basis: ker });
        }
        let all = out.iter().skip(1).fold(out[0].basis.clone(), |acc, c| acc.hstack(&c.basis));
        if all.rank()? != n {
            return Err(Error::precision("isoclinic pieces do not span"));
        }
        Ok(out)
    }

    /// Q_p-basis of `{U : U A = A σ(U)}`.
    pub fn endomorphisms(&self) -> Result<Vec<Mat>> {
        self.homomorphisms_from(self)
    }

    /// Q_p-basis of φ-equivariant maps `U : other → self` (`U A' = A σ(U)`).
    pub fn homomorphisms_from(&self, other: &PhiModule) -> Result<Vec<Mat>> {
        let (n, m) = (self.dim(), other.dim());
        let t = self.field.clone();
        let ker = qp_linear_kernel(&t, n * m, |v| {
            let u = Mat::from_fn(&t, n, m, |i, j| v[i * m + j].clone());
            u.mul(&other.a).sub(&self.a.mul(&u.frobenius())).entries().to_vec()
        })?;
        Ok(ker.into_iter().map(|v| Mat::from_fn(&t, n, m, |i, j| v[i * m + j].clone())).collect())
    }

    /// Sub-φ-modules: every sum of isoclinic pieces (exact), plus random
    /// images of simple summands under endomorphisms (sampled).
    pub fn submodules(&self, mode: SubmoduleMode, budget: usize, seed: u64) -> Result<Vec<Mat>> {
        let comps = self.isoclinic_decompose()?;
        if mode == SubmoduleMode::Exact {
            for c in &comps {
                let r = c.slope.denom().to_usize().unwrap();
                if c.basis.cols() != r {
                    return Err(Error::Multiplicity {
                        slope: c.slope.to_string(),
                        mult: c.basis.cols() / r,
                    });
                }
            }
        }
        let mut out = subset_sums(&self.field, self.dim(), &comps.iter().map(|c| c.basis.clone()).collect::<Vec<_>>());
        if mode == SubmoduleMode::Sampled {
            let pieces: Vec<Mat> = match self.split_summands_here()? {
                Some(s) => s.into_iter().map(|c| c.basis).collect(),
                None => comps.iter().map(|c| c.basis.clone()).collect(),
            };
            let ends = self.endomorphisms()?;
            let mut rng = sampling::rng(seed);
            let mut tries = 0;
            while out.len() < budget + (1 << comps.len().min(16)) && tries < budget * 20 {
                tries += 1;
                let mut acc: Option<Mat> = None;
                let howmany = 1 + (rand::Rng::gen_range(&mut rng, 0..pieces.len().max(1)));
                for _ in 0..howmany {
                    let piece = &pieces[rand::Rng::gen_range(&mut rng, 0..pieces.len())];
                    let mut u = Mat::zeros(&self.field, self.dim(), self.dim());
                    for e in &ends {
                        let c = sampling::small_int_elem(&self.field, &mut rng, 3);
                        u = u.add(&e.scale(&c));
                    }
                    let img = u.mul(piece);
                    acc = Some(match acc {
                        None => img,
                        Some(a) => a.hstack(&img),
                    });
                }
                let w = acc.unwrap().column_basis()?;
                if w.cols() == 0 {
                    continue;
                }
                debug_assert!(self.is_stable(&w)?);
                out.push(w);
            }
        }
        Ok(out)
    }

    /// Simple summands of every isoclinic piece at this level, if the
    /// equation `φ^r x = p^s x` already has enough solutions here.
    pub fn split_summands_here(&self) -> Result<Option<Vec<Component>>> {
        let mut out = Vec::new();
        for comp in self.isoclinic_decompose()? {
            let r = comp.slope.denom().to_usize().unwrap();
            let s = comp.slope.numer().to_i64().unwrap();
            let d = comp.basis.cols();
            let sub = self.restrict(&comp.basis)?;
            let br = sub.power_matrix(r);
            let t = self.field.clone();
            let fixed = qp_linear_kernel(&t, d, |v| {
                let x = Mat::from_cols(&t, d, &[v.to_vec()]);
                br.mul(&x.frobenius_pow(r as i64)).sub(&x.map(|y| y.shift(s))).entries().to_vec()
            })?;
            let mut current = Mat::zeros(&t, d, 0);
            let mut chosen = Vec::new();
            for v in fixed {
                if current.cols() == d {
                    break;
                }
                let mut orbit = Mat::from_cols(&t, d, &[v]);
                let mut x = orbit.clone();
                for _ in 1..r {
                    x = sub.apply(&x);
                    orbit = orbit.hstack(&x);
                }
                let cand = current.hstack(&orbit);
                if cand.rank()? == current.cols() + r {
                    current = cand;
                    chosen.push(orbit);
                }
            }
            if current.cols() != d {
                return Ok(None);
            }
            for o in chosen {
                out.push(Component {
                    slope: comp.slope.clone(),
                    basis: comp.basis.mul(&o),
                });
            }
        }
        Ok(Some(out))
    }

    /// Re-expresses the module over an unramified level of degree `f2`.
    pub fn extend_to(&self, f2: usize) -> Result<(PhiModule, LevelEmbedding)> {
        let emb = LevelEmbedding::new(&self.field, f2)?;
        Ok((PhiModule::new(&emb.big, emb.map_mat(&self.a))?, emb))
    }

    /// Passes to the least level (a multiple of the current one, up to
    /// twelve times larger) where every isoclinic piece is a sum of explicit
    /// simple summands.
    pub fn ensure_split(&self) -> Result<SplitModule> {
        for k in 1..=12 {
            let f2 = self.field.f * k;
            let (m, emb) = self.extend_to(f2)?;
            if let Some(summands) = m.split_summands_here()? {
                return Ok(SplitModule {
                    module: m,
                    embedding: emb,
                    summands,
                });
            }
        }
        Err(Error::BudgetExhausted {
            what: "no splitting level found".into(),
            tries: 12,
        })
    }
}

/// All `2^k` sums of the given subspaces.
pub fn subset_sums(t: &Arc<Tower>, n: usize, parts: &[Mat]) -> Vec<Mat> {
    let k = parts.len();
    (0..1usize << k)
        .map(|mask| {
            let mut m = Mat::zeros(t, n, 0);
            for (i, p) in parts.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    m = m.hstack(p);
                }
            }
            m
        })
        .collect()
}

/// Least `k` and integer `s` with `k·lo < s < k·hi`.
fn separator(lo: &BigRational, hi: &BigRational) -> (usize, i64) {
    for k in 1.. {
        let kq = BigRational::from_integer((k as i64).into());
        let a = lo * &kq;
        let b = hi * &kq;
        let s = a.floor() + BigRational::one();
        if s < b {
            return (k, s.to_integer().to_i64().unwrap());
        }
    }
    unreachable!()
}

/// The module after passing to a larger level, with its simple summands.
#[derive(Clone, Debug)]
pub struct SplitModule {
    pub module: PhiModule,
    pub embedding: LevelEmbedding,
    pub summands: Vec<Component>,
}

/// Embedding of an unramified level into a larger one.
#[derive(Clone, Debug)]
pub struct LevelEmbedding {
    pub small: Arc<Tower>,
    pub big: Arc<Tower>,
    pub gen_image: Elem,
}

impl LevelEmbedding {
    pub fn new(small: &Arc<Tower>, f2: usize) -> Result<LevelEmbedding> {
        if f2 == small.f {
            return Ok(LevelEmbedding {
                small: small.clone(),
                big: small.clone(),
                gen_image: Elem::generator(small),
            });
        }
        let big = Tower::unramified(small.p, f2, small.prec)?;
        let gen_image = small.embedding_into(&big)?;
        Ok(LevelEmbedding {
            small: small.clone(),
            big,
            gen_image,
        })
    }

    pub fn map(&self, x: &Elem) -> Elem {
        if Arc::ptr_eq(&self.small, &self.big) {
            return x.clone();
        }
        x.embed_via(&self.gen_image)
    }

    pub fn map_mat(&self, m: &Mat) -> Mat {
        Mat::from_fn(&self.big, m.rows(), m.cols(), |i, j| self.map(m.get(i, j)))
    }
}

/// A φ-module with an alternating pairing `⟨x, y⟩ = xᵀ J y` satisfying
/// `⟨φx, φy⟩ = m σ⟨x, y⟩` with multiplier `m = ±p`.
#[derive(Clone, Debug)]
pub struct PolarizedPhiModule {
    pub module: PhiModule,
    pub j: Mat,
    pub multiplier: i64,
}

impl PolarizedPhiModule {
    pub fn new(module: PhiModule, j: Mat) -> Result<PolarizedPhiModule> {
        let n = module.dim();
        if n % 2 != 0 {
            return Err(Error::invalid("polarized modules have even dimension"));
        }
        if j.rows() != n || !j.is_square() {
            return Err(Error::invalid("Gram matrix has the wrong shape"));
        }
        if !j.transpose().add(&j).is_zero() || (0..n).any(|i| !j.get(i, i).is_zero()) {
            return Err(Error::invalid("Gram matrix is not alternating"));
        }
        if j.rank()? != n {
            return Err(Error::invalid("Gram matrix is degenerate"));
        }
        let lhs = module.a.transpose().mul(&j).mul(&module.a);
        let rhs = j.frobenius();
        let p = module.field.p as i64;
        for m in [p, -p] {
            if lhs.agrees_certified(&rhs.scale(&Elem::from_i64(&module.field, m)), crate::padic::matrix::DEFAULT_GUARD) {
                return Ok(PolarizedPhiModule { module, j, multiplier: m });
            }
        }
        Err(Error::invalid("pairing is not compatible with φ up to a multiplier ±p"))
    }

    pub fn g(&self) -> usize {
        self.module.dim() / 2
    }

    /// Slopes pair as μ ↔ 1 - μ.
    pub fn slopes_symmetric(&self) -> Result<bool> {
        let prof = self.module.newton_slopes()?;
        let flat = prof.flat();
        let mut mirrored: Vec<BigRational> = flat.iter().map(|q| BigRational::one() - q).collect();
        mirrored.sort();
        Ok(mirrored == flat)
    }

    /// Whether `u` preserves the pairing: `uᵀ J u = J`.
    pub fn is_symplectic(&self, u: &Mat) -> bool {
        u.transpose().mul(&self.j).mul(u).agrees_certified(&self.j, crate::padic::matrix::DEFAULT_GUARD)
    }

    /// Orthogonal direct sum.
    pub fn direct_sum(parts: &[PolarizedPhiModule]) -> Result<PolarizedPhiModule> {
        let t = parts[0].module.field.clone();
        let m = PhiModule::direct_sum(&parts.iter().map(|x| x.module.clone()).collect::<Vec<_>>())?;
        let j = Mat::block_diag(&t, &parts.iter().map(|x| x.j.clone()).collect::<Vec<_>>());
        Self::new(m, j)
    }
}

/// Extension of a polarized module `D_B` by a pure slope-1 part `D_T`.
#[derive(Clone, Debug)]
pub struct SemiAbelianPhiModule {
    pub module: PhiModule,
    /// Basis of `D_T` (columns).
    pub toric: Mat,
    /// Complement columns; images in `D / D_T` form the basis of `D_B`.
    pub complement: Mat,
    /// `D_B`; absent when `D` is purely toric.
    pub quotient: Option<PolarizedPhiModule>,
    pub toric_pairing: Mat,
}

impl SemiAbelianPhiModule {
    /// `j_quotient` is the Gram matrix on `D_B` in the basis induced by the
    /// complement (standard vectors outside the pivot rows of `toric`).
    pub fn new(module: PhiModule, toric: Mat, j_quotient: Mat, toric_pairing: Option<Mat>) -> Result<SemiAbelianPhiModule> {
        let n = module.dim();
        let t = module.field.clone();
        let dt = toric.cols();
        if dt > 0 {
            if toric.rank()? != dt {
                return Err(Error::invalid("toric basis is not independent"));
            }
            if !module.is_stable(&toric)? {
                return Err(Error::invalid("toric part is not φ-stable"));
            }
            let prof = module.restrict(&toric)?.newton_slopes()?;
            if prof.slopes.len() != 1 || prof.slopes[0].0 != BigRational::one() {
                return Err(Error::invalid("toric part is not pure of slope 1"));
            }
        }
        // complement by standard vectors
        let mut basis = toric.clone();
        let mut comp_idx = Vec::new();
        for i in 0..n {
            let e = Mat::identity(&t, n).col_mat(i);
            let cand = basis.hstack(&e);
            if cand.rank()? > basis.cols() {
                basis = cand;
                comp_idx.push(i);
            }
        }
        let complement = Mat::identity(&t, n).select_cols(&comp_idx);
        let adapted = module.change_basis(&basis)?;
        if !adapted.a.submatrix(dt, n, 0, dt).is_zero() {
            return Err(Error::InternalContradiction("adapted Frobenius is not block triangular".into()));
        }
        let quotient = if dt == n {
            if j_quotient.rows() != 0 {
                return Err(Error::invalid("purely toric module takes an empty quotient pairing"));
            }
            None
        } else {
            Some(PolarizedPhiModule::new(PhiModule::new(&t, adapted.a.submatrix(dt, n, dt, n))?, j_quotient)?)
        };
        let toric_pairing = toric_pairing.unwrap_or_else(|| Mat::identity(&t, dt));
        if dt > 0 && toric_pairing.rank()? != dt {
            return Err(Error::invalid("toric pairing is not invertible"));
        }
        Ok(SemiAbelianPhiModule {
            module,
            toric,
            complement,
            quotient,
            toric_pairing,
        })
    }

    /// Purely abelian case.
    pub fn abelian(p: PolarizedPhiModule) -> SemiAbelianPhiModule {
        let t = p.module.field.clone();
        let n = p.module.dim();
        SemiAbelianPhiModule {
            module: p.module.clone(),
            toric: Mat::zeros(&t, n, 0),
            complement: Mat::identity(&t, n),
            quotient: Some(p),
            toric_pairing: Mat::zeros(&t, 0, 0),
        }
    }

    pub fn toric_dim(&self) -> usize {
        self.toric.cols()
    }

    /// Adapted basis `[toric | complement]`.
    pub fn adapted_basis(&self) -> Mat {
        self.toric.hstack(&self.complement)
    }
}

pub fn rational_to_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn is_half(q: &BigRational) -> bool {
    q == &BigRational::new(1.into(), 2.into())
}

pub fn abs_rational(q: &BigRational) -> BigRational {
    q.abs()
}

pub fn gcd_usize(a: usize, b: usize) -> usize {
    a.gcd(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn q2() -> Arc<Tower> {
        Tower::unramified(2, 1, 64).unwrap()
    }

    fn ss(t: &Arc<Tower>) -> PhiModule {
        PhiModule::new(t, Mat::from_i64(t, &[vec![0, 2], vec![1, 0]])).unwrap()
    }

    #[test]
    fn supersingular_plane() {
        let t = q2();
        let d = ss(&t);
        assert_eq!(d.t_n().unwrap(), 1);
        assert_eq!(d.newton_slopes().unwrap().slopes, vec![(q(1, 2), 2)]);
        let comps = d.isoclinic_decompose().unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(d.submodules(SubmoduleMode::Exact, 0, 0).unwrap().len(), 2);
    }

    #[test]
    fn ordinary_plane_components() {
        let t = q2();
        let d = PhiModule::new(&t, Mat::from_i64(&t, &[vec![1, 0], vec![0, 2]])).unwrap();
        let comps = d.isoclinic_decompose().unwrap();
        assert_eq!(comps[0].slope, q(0, 1));
        assert_eq!(comps[1].slope, q(1, 1));
        let e1 = Mat::from_i64(&t, &[vec![1], vec![0]]);
        assert!(comps[0].basis.same_span(&e1).unwrap());
        assert_eq!(d.submodules(SubmoduleMode::Exact, 0, 0).unwrap().len(), 4);
    }

    #[test]
    fn mixed_block_decomposition() {
        let t = q2();
        let d = PhiModule::direct_sum(&[PhiModule::simple(&t, 0, 1).unwrap(), PhiModule::simple(&t, 0, 1).unwrap(), ss(&t)]).unwrap();
        // conjugate by an integral matrix to hide the blocks
        let p = Mat::from_i64(&t, &[vec![1, 1, 0, 1], vec![0, 1, 1, 0], vec![1, 0, 1, 1], vec![0, 0, 1, 1]]);
        let d2 = d.change_basis(&p).unwrap();
        let comps = d2.isoclinic_decompose().unwrap();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].basis.cols(), 2);
        assert_eq!(comps[1].slope, q(1, 2));
        for c in &comps {
            assert!(d2.is_stable(&c.basis).unwrap());
            let prof = d2.restrict(&c.basis).unwrap().newton_slopes().unwrap();
            assert_eq!(prof.slopes, vec![(c.slope.clone(), c.basis.cols())]);
        }
    }

    #[test]
    fn dual_slopes_and_pairing() {
        let t = Tower::unramified(3, 2, 40).unwrap();
        let d = PhiModule::new(
            &t,
            Mat::from_rows(
                &t,
                vec![vec![Elem::generator(&t), Elem::from_i64(&t, 3)], vec![Elem::one(&t), Elem::from_i64(&t, 9)]],
            ),
        )
        .unwrap();
        let dv = d.dual(1).unwrap();
        let mirrored = SlopeProfile::from_flat(d.newton_slopes().unwrap().flat().into_iter().map(|x| BigRational::one() - x).collect());
        assert_eq!(dv.newton_slopes().unwrap(), mirrored);
        // ⟨φ^∨ f, φ x⟩ = p σ⟨f, x⟩ on basis vectors: Aᵛᵀ A = p I
        let lhs = dv.matrix().transpose().mul(d.matrix());
        assert!(lhs.agrees(&Mat::identity(&t, 2).map(|x| x.shift(1))));
        assert!(dv.dual(1).unwrap().matrix().agrees(d.matrix()));
    }

    #[test]
    fn endomorphisms_of_supersingular_plane() {
        let t = q2();
        let d = ss(&t);
        let ends = d.endomorphisms().unwrap();
        // End over Q_2 is Q_2(√2)
        assert_eq!(ends.len(), 2);
        for u in &ends {
            assert!(u.mul(d.matrix()).agrees(&d.matrix().mul(&u.frobenius())));
        }
    }

    #[test]
    fn square_of_supersingular_needs_sampling() {
        let t = q2();
        let d = PhiModule::direct_sum(&[ss(&t), ss(&t)]).unwrap();
        assert!(matches!(d.submodules(SubmoduleMode::Exact, 0, 0), Err(Error::Multiplicity { .. })));
        let subs = d.submodules(SubmoduleMode::Sampled, 20, 7).unwrap();
        assert!(subs.len() >= 20);
        for w in &subs {
            assert!(d.is_stable(w).unwrap());
        }
        assert!(subs.iter().any(|w| w.cols() == 2));
    }

    #[test]
    fn polarization_of_supersingular_plane() {
        let t = q2();
        let j = Mat::from_i64(&t, &[vec![0, 1], vec![-1, 0]]);
        let pm = PolarizedPhiModule::new(ss(&t), j).unwrap();
        assert_eq!(pm.multiplier, -2);
        assert!(pm.slopes_symmetric().unwrap());
    }

    #[test]
    fn ensure_split_of_slope_third() {
        let t = Tower::unramified(2, 1, 48).unwrap();
        let d = PhiModule::simple(&t, 1, 3).unwrap();
        let s = d.ensure_split().unwrap();
        assert_eq!(s.summands.len(), 1);
        assert_eq!(s.summands[0].basis.cols(), 3);
    }
}
