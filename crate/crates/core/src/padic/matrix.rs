//! Dense matrices over a tower level with certified elimination.
//!
//! Every rank decision carries a certificate: each pivot has at least
//! `guard` digits of relative precision, and every entry left over after
//! elimination is zero to at least `guard` digits past the matrix scale.
//! Anything less is a precision failure, never a guess.

use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;

use super::field::{Elem, Tower};
use super::qp::Qp;
use crate::error::{Error, Result};

pub const DEFAULT_GUARD: i64 = 8;

thread_local! {
    static STATS: Cell<RankStats> = const { Cell::new(RankStats::new()) };
}

/// Per-thread tally of rank decisions, for precision audits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankStats {
    pub decisions: u64,
    pub failures: u64,
    /// Smallest spare digit count among certified decisions.
    pub min_spare: i64,
}

impl RankStats {
    const fn new() -> Self {
        RankStats {
            decisions: 0,
            failures: 0,
            min_spare: i64::MAX,
        }
    }
}

impl Default for RankStats {
    fn default() -> Self {
        Self::new()
    }
}

pub fn rank_stats() -> RankStats {
    STATS.with(|s| s.get())
}

pub fn reset_rank_stats() {
    STATS.with(|s| s.set(RankStats::new()));
}

fn record(spare: Option<i64>) {
    STATS.with(|s| {
        let mut st = s.get();
        st.decisions += 1;
        match spare {
            Some(d) => st.min_spare = st.min_spare.min(d),
            None => st.failures += 1,
        }
        s.set(st);
    });
}

#[derive(Clone)]
pub struct Mat {
    t: Arc<Tower>,
    rows: usize,
    cols: usize,
    d: Vec<Elem>,
}

impl PartialEq for Mat {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.d == other.d
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{}]", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{:?}", self.get(i, j))).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Outcome of a certified elimination.
#[derive(Clone, Debug)]
pub struct RankCertificate {
    pub rank: usize,
    /// (row, column) positions of pivots in the original matrix.
    pub pivots: Vec<(usize, usize)>,
    /// Spare digits of the weakest decision.
    pub spare: i64,
}

struct Reduced {
    m: Mat,
    /// pivot column per pivot row (rows 0..rank of `m` after swaps)
    pivot_cols: Vec<usize>,
    row_of: Vec<usize>,
    spare: i64,
}

impl Mat {
    pub fn zeros(t: &Arc<Tower>, rows: usize, cols: usize) -> Mat {
        Mat {
            t: t.clone(),
            rows,
            cols,
            d: vec![Elem::zero(t); rows * cols],
        }
    }

    pub fn identity(t: &Arc<Tower>, n: usize) -> Mat {
        let mut m = Self::zeros(t, n, n);
        for i in 0..n {
            m.set(i, i, Elem::one(t));
        }
        m
    }

    pub fn from_fn(t: &Arc<Tower>, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Elem) -> Mat {
        let mut d = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                d.push(f(i, j));
            }
        }
        Mat { t: t.clone(), rows, cols, d }
    }

    pub fn from_rows(t: &Arc<Tower>, rows: Vec<Vec<Elem>>) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Mat {
            t: t.clone(),
            rows: r,
            cols: c,
            d: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64(t: &Arc<Tower>, rows: &[Vec<i64>]) -> Mat {
        Self::from_rows(t, rows.iter().map(|r| r.iter().map(|&x| Elem::from_i64(t, x)).collect()).collect())
    }

    pub fn from_rationals(t: &Arc<Tower>, rows: &[Vec<BigRational>]) -> Mat {
        Self::from_rows(t, rows.iter().map(|r| r.iter().map(|x| Elem::from_rational(t, x)).collect()).collect())
    }

    pub fn from_cols(t: &Arc<Tower>, rows: usize, cols: &[Vec<Elem>]) -> Mat {
        Self::from_fn(t, rows, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn diag(t: &Arc<Tower>, entries: &[Elem]) -> Mat {
        let n = entries.len();
        Self::from_fn(t, n, n, |i, j| if i == j { entries[i].clone() } else { Elem::zero(t) })
    }

    pub fn block_diag(t: &Arc<Tower>, blocks: &[Mat]) -> Mat {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(t, r, c);
        let (mut i0, mut j0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    m.set(i0 + i, j0 + j, b.get(i, j).embed(t));
                }
            }
            i0 += b.rows;
            j0 += b.cols;
        }
        m
    }

    pub fn tower(&self) -> &Arc<Tower> {
        &self.t
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Elem {
        &self.d[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Elem) {
        self.d[i * self.cols + j] = x;
    }

    pub fn entries(&self) -> &[Elem] {
        &self.d
    }

    pub fn row(&self, i: usize) -> Vec<Elem> {
        self.d[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<Elem> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn col_mat(&self, j: usize) -> Mat {
        self.select_cols(&[j])
    }

    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        Self::from_fn(&self.t, self.rows, idx.len(), |i, j| self.get(i, idx[j]).clone())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        Self::from_fn(&self.t, idx.len(), self.cols, |i, j| self.get(idx[i], j).clone())
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Mat {
        Self::from_fn(&self.t, r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn map(&self, f: impl Fn(&Elem) -> Elem) -> Mat {
        Mat {
            t: self.t.clone(),
            rows: self.rows,
            cols: self.cols,
            d: self.d.iter().map(f).collect(),
        }
    }

    pub fn embed(&self, into: &Arc<Tower>) -> Mat {
        Mat {
            t: into.clone(),
            rows: self.rows,
            cols: self.cols,
            d: self.d.iter().map(|x| x.embed(into)).collect(),
        }
    }

    pub fn transpose(&self) -> Mat {
        Self::from_fn(&self.t, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn add(&self, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            t: self.t.clone(),
            rows: self.rows,
            cols: self.cols,
            d: self.d.iter().zip(&o.d).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Mat {
            t: self.t.clone(),
            rows: self.rows,
            cols: self.cols,
            d: self.d.iter().zip(&o.d).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn neg(&self) -> Mat {
        self.map(|x| x.neg())
    }

    pub fn scale(&self, s: &Elem) -> Mat {
        self.map(|x| x.mul(s))
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows, "dimension mismatch in product");
        let mut out = Self::zeros(&self.t, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_exact_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_exact_zero() {
                        continue;
                    }
                    let idx = i * o.cols + j;
                    out.d[idx] = out.d[idx].add(&a.mul(b));
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Elem]) -> Vec<Elem> {
        (0..self.rows)
            .map(|i| {
                let mut acc = Elem::zero(&self.t);
                for (j, x) in v.iter().enumerate() {
                    acc = acc.add(&self.get(i, j).mul(x));
                }
                acc
            })
            .collect()
    }

    pub fn pow(&self, mut e: u64) -> Mat {
        let mut acc = Self::identity(&self.t, self.rows);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        acc
    }

    pub fn frobenius(&self) -> Mat {
        self.map(|x| x.frobenius())
    }

    pub fn frobenius_inv(&self) -> Mat {
        self.map(|x| x.frobenius_inv())
    }

    pub fn frobenius_pow(&self, k: i64) -> Mat {
        self.map(|x| x.frobenius_pow(k))
    }

    pub fn apply_auto(&self, idx: usize) -> Mat {
        self.map(|x| x.apply_auto(idx))
    }

    pub fn hstack(&self, o: &Mat) -> Mat {
        assert_eq!(self.rows, o.rows);
        Self::from_fn(&self.t, self.rows, self.cols + o.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                o.get(i, j - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.cols);
        Self::from_fn(&self.t, self.rows + o.rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j).clone()
            } else {
                o.get(i - self.rows, j).clone()
            }
        })
    }

    pub fn is_zero(&self) -> bool {
        self.d.iter().all(|x| x.is_zero())
    }

    pub fn agrees(&self, o: &Mat) -> bool {
        self.rows == o.rows && self.cols == o.cols && self.sub(o).is_zero()
    }

    /// Entrywise agreement to at least `guard` digits past the scale of `self`.
    pub fn agrees_certified(&self, o: &Mat, guard: i64) -> bool {
        if self.rows != o.rows || self.cols != o.cols {
            return false;
        }
        let diff = self.sub(o);
        let e = self.t.e as i64;
        let scale = self.min_valuation_units().or(o.min_valuation_units()).unwrap_or(0);
        diff.d.iter().all(|x| match x.valuation_units() {
            Some(_) => false,
            None => x.abs_prec_units().map_or(true, |a| (a - scale) / e >= guard),
        })
    }

    /// Minimum valuation in units of 1/e over entries nonzero at precision.
    pub fn min_valuation_units(&self) -> Option<i64> {
        self.d.iter().filter_map(|x| x.valuation_units()).min()
    }

    /// Whether every entry lies in the unramified level.
    pub fn is_base(&self) -> bool {
        self.d.iter().all(|x| x.is_base())
    }

    fn reduce(&self, pivot_cols_limit: usize, guard: i64) -> Result<Reduced> {
        let e = self.t.e as i64;
        let mut m = self.clone();
        let scale = self.min_valuation_units().unwrap_or(0);
        let mut row_of: Vec<usize> = (0..self.rows).collect();
        let mut pivot_cols = Vec::new();
        let mut used = vec![false; pivot_cols_limit];
        let mut spare = i64::MAX;
        let mut k = 0;
        while k < m.rows {
            let mut best: Option<(usize, usize, i64, i64)> = None;
            for i in k..m.rows {
                for j in 0..pivot_cols_limit {
                    if used[j] {
                        continue;
                    }
                    let x = m.get(i, j);
                    if let Some(v) = x.valuation_units() {
                        let rp = x.rel_prec_units().unwrap_or(i64::MAX);
                        let better = match best {
                            None => true,
                            Some((_, _, bv, brp)) => v < bv || (v == bv && rp > brp),
                        };
                        if better {
                            best = Some((i, j, v, rp));
                        }
                    }
                }
            }
            let Some((bi, bj, _, rp)) = best else { break };
            let piv_spare = rp / e;
            if piv_spare < guard {
                record(None);
                return Err(Error::precision(format!(
                    "pivot carries {piv_spare} digits of relative precision, below the guard of {guard}"
                )));
            }
            spare = spare.min(piv_spare);
            if bi != k {
                for j in 0..m.cols {
                    m.d.swap(bi * m.cols + j, k * m.cols + j);
                }
                row_of.swap(bi, k);
            }
            used[bj] = true;
            let inv = m.get(k, bj).inv()?;
            for j in 0..m.cols {
                let x = m.get(k, j).mul(&inv);
                m.set(k, j, x);
            }
            for i in 0..m.rows {
                if i == k {
                    continue;
                }
                let factor = m.get(i, bj).clone();
                if factor.is_exact_zero() {
                    continue;
                }
                for j in 0..m.cols {
                    let t = factor.mul(m.get(k, j));
                    let x = m.get(i, j).sub(&t);
                    m.set(i, j, x);
                }
                // the pivot column is cleared exactly
                m.set(i, bj, Elem::zero(&self.t));
            }
            pivot_cols.push(bj);
            k += 1;
        }
        // leftover block must be certifiably zero
        for i in k..m.rows {
            for j in 0..pivot_cols_limit {
                let x = m.get(i, j);
                if x.is_exact_zero() {
                    continue;
                }
                let a = x.abs_prec_units().expect("zero at precision");
                let s = (a - scale) / e;
                if s < guard {
                    record(None);
                    return Err(Error::precision(format!(
                        "residual entry known to only {s} digits past the matrix scale, below the guard of {guard}"
                    )));
                }
                spare = spare.min(s);
            }
        }
        record(Some(if spare == i64::MAX { guard.max(0) + 64 } else { spare }));
        Ok(Reduced { m, pivot_cols, row_of, spare })
    }

    /// Certified rank.
    pub fn rank_certified(&self, guard: i64) -> Result<RankCertificate> {
        let r = self.reduce(self.cols, guard)?;
        let pivots = r.pivot_cols.iter().enumerate().map(|(k, &c)| (r.row_of[k], c)).collect();
        Ok(RankCertificate {
            rank: r.pivot_cols.len(),
            pivots,
            spare: r.spare,
        })
    }

    pub fn rank(&self) -> Result<usize> {
        Ok(self.rank_certified(DEFAULT_GUARD)?.rank)
    }

    /// Basis of the right kernel, as columns.
    pub fn kernel(&self) -> Result<Mat> {
        let r = self.reduce(self.cols, DEFAULT_GUARD)?;
        let free: Vec<usize> = (0..self.cols).filter(|j| !r.pivot_cols.contains(j)).collect();
        let mut out = Mat::zeros(&self.t, self.cols, free.len());
        for (k, &fj) in free.iter().enumerate() {
            out.set(fj, k, Elem::one(&self.t));
            for (row, &pc) in r.pivot_cols.iter().enumerate() {
                out.set(pc, k, r.m.get(row, fj).neg());
            }
        }
        Ok(out)
    }

    /// Solves `self * X = rhs`; `None` when the system is certifiably
    /// inconsistent. Free variables are set to zero.
    pub fn solve(&self, rhs: &Mat) -> Result<Option<Mat>> {
        assert_eq!(self.rows, rhs.rows);
        let aug = self.hstack(rhs);
        let r = aug.reduce(self.cols, DEFAULT_GUARD)?;
        let rank = r.pivot_cols.len();
        let e = self.t.e as i64;
        let scale = aug.min_valuation_units().unwrap_or(0);
        for i in rank..aug.rows {
            for j in self.cols..aug.cols {
                let x = r.m.get(i, j);
                if x.valuation_units().is_some() {
                    return Ok(None);
                }
                if let Some(a) = x.abs_prec_units() {
                    if (a - scale) / e < DEFAULT_GUARD {
                        return Err(Error::precision("consistency of linear system not certified"));
                    }
                }
            }
        }
        let mut x = Mat::zeros(&self.t, self.cols, rhs.cols);
        for (row, &pc) in r.pivot_cols.iter().enumerate() {
            for j in 0..rhs.cols {
                x.set(pc, j, r.m.get(row, self.cols + j).clone());
            }
        }
        Ok(Some(x))
    }

    pub fn inverse(&self) -> Result<Mat> {
        assert!(self.is_square());
        let n = self.rows;
        let sol = self.solve(&Mat::identity(&self.t, n))?;
        match sol {
            Some(x) if self.rank()? == n => Ok(x),
            _ => Err(Error::invalid("matrix is singular")),
        }
    }

    /// Determinant by valuation-pivoted elimination.
    pub fn det(&self) -> Result<Elem> {
        assert!(self.is_square());
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Elem::one(&self.t);
        for k in 0..n {
            let mut best: Option<(usize, i64)> = None;
            for i in k..n {
                if let Some(v) = m.get(i, k).valuation_units() {
                    if best.map_or(true, |(_, bv)| v < bv) {
                        best = Some((i, v));
                    }
                }
            }
            let Some((bi, _)) = best else {
                return Ok(Elem::zero(&self.t).add(m.get(k, k)));
            };
            if bi != k {
                for j in 0..n {
                    m.d.swap(bi * n + j, k * n + j);
                }
                det = det.neg();
            }
            let piv = m.get(k, k).clone();
            det = det.mul(&piv);
            let inv = piv.inv()?;
            for i in k + 1..n {
                let factor = m.get(i, k).mul(&inv);
                if factor.is_exact_zero() {
                    continue;
                }
                for j in k..n {
                    let t = factor.mul(m.get(k, j));
                    let x = m.get(i, j).sub(&t);
                    m.set(i, j, x);
                }
            }
        }
        Ok(det)
    }

    /// Characteristic polynomial det(X - M), constant term first, monic, by
    /// the division-free Berkowitz recursion.
    pub fn charpoly(&self) -> Vec<Elem> {
        assert!(self.is_square());
        let n = self.rows;
        let t = &self.t;
        // coefficients highest degree first during the recursion
        let mut poly: Vec<Elem> = vec![Elem::one(t)];
        for k in 0..n {
            // leading principal (k+1)x(k+1) block: a = M[k][k], R = row k cols <k,
            // C = col k rows <k, A = leading k block
            let a = self.get(k, k).clone();
            let mut col: Vec<Elem> = (0..k).map(|i| self.get(i, k).clone()).collect();
            let mut toeplitz = Vec::with_capacity(k + 2);
            toeplitz.push(Elem::one(t));
            toeplitz.push(a.neg());
            for _ in 0..k {
                // R * A^j * C
                let mut s = Elem::zero(t);
                for (j, c) in col.iter().enumerate() {
                    s = s.add(&self.get(k, j).mul(c));
                }
                toeplitz.push(s.neg());
                let next: Vec<Elem> = (0..k)
                    .map(|i| {
                        let mut acc = Elem::zero(t);
                        for (j, c) in col.iter().enumerate() {
                            acc = acc.add(&self.get(i, j).mul(c));
                        }
                        acc
                    })
                    .collect();
                col = next;
            }
            // new poly = T * poly where T is lower-triangular Toeplitz (k+2)x(k+1)
            let mut next = vec![Elem::zero(t); k + 2];
            for (i, slot) in next.iter_mut().enumerate() {
                for (j, c) in poly.iter().enumerate() {
                    if i >= j && i - j < toeplitz.len() {
                        *slot = slot.add(&toeplitz[i - j].mul(c));
                    }
                }
            }
            poly = next;
        }
        poly.reverse();
        poly
    }

    /// Column span equality, certified.
    pub fn same_span(&self, o: &Mat) -> Result<bool> {
        let r1 = self.rank()?;
        let r2 = o.rank()?;
        if r1 != r2 {
            return Ok(false);
        }
        Ok(self.hstack(o).rank()? == r1)
    }

    /// dim(span(self) ∩ span(o)) for full-column-rank inputs.
    pub fn intersection_dim(&self, o: &Mat) -> Result<usize> {
        let r1 = self.rank()?;
        let r2 = o.rank()?;
        let r = self.hstack(o).rank()?;
        Ok(r1 + r2 - r)
    }

    /// Basis of span(self) ∩ span(o) as columns.
    pub fn intersection(&self, o: &Mat) -> Result<Mat> {
        let k = self.hstack(&o.neg()).kernel()?;
        let coeffs = k.submatrix(0, self.cols, 0, k.cols);
        let v = self.mul(&coeffs);
        v.column_basis()
    }

    /// A maximal independent subset of the columns, as a matrix.
    pub fn column_basis(&self) -> Result<Mat> {
        let cert = self.rank_certified(DEFAULT_GUARD)?;
        let mut cols: Vec<usize> = cert.pivots.iter().map(|&(_, c)| c).collect();
        cols.sort_unstable();
        Ok(self.select_cols(&cols))
    }

    /// Whether span(self) ⊂ span(o).
    pub fn span_contained_in(&self, o: &Mat) -> Result<bool> {
        Ok(o.hstack(self).rank()? == o.rank()?)
    }

    /// Q_p-linear matrix of this K-matrix when unramified (n f x n f), acting
    /// on coordinates; used for Q_p-linear systems.
    pub fn qp_coords(v: &[Elem]) -> Vec<Qp> {
        v.iter().flat_map(|x| x.coords().to_vec()).collect()
    }
}

/// Q_p-basis of the kernel of a Q_p-linear map on `nvars`-tuples of tower
/// elements.
pub fn qp_linear_kernel(t: &Arc<Tower>, nvars: usize, map: impl Fn(&[Elem]) -> Vec<Elem>) -> Result<Vec<Vec<Elem>>> {
    let d = t.degree();
    let p = t.p;
    let qp = Tower::unramified(p, 1, t.prec)?;
    let mut cols = Vec::with_capacity(nvars * d);
    for v in 0..nvars {
        for c in 0..d {
            let mut x = vec![Elem::zero(t); nvars];
            let mut co = vec![Qp::zero(p); d];
            co[c] = Qp::one(p, t.prec);
            x[v] = Elem::from_coords(t, co);
            let img = map(&x);
            cols.push(
                img.iter()
                    .flat_map(|y| y.coords().iter().map(|q| Elem::from_qp(&qp, q.clone())).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            );
        }
    }
    let rows = cols.first().map_or(0, |c| c.len());
    if rows == 0 {
        return Err(Error::invalid("linear map with empty target"));
    }
    let k = Mat::from_cols(&qp, rows, &cols).kernel()?;
    Ok((0..k.cols())
        .map(|j| {
            (0..nvars)
                .map(|v| Elem::from_coords(t, (0..d).map(|c| k.get(v * d + c, j).coords()[0].clone()).collect()))
                .collect()
        })
        .collect())
}

/// Runs `f` at increasing precision, doubling from `start` on precision
/// failures up to the configured ceiling.
pub fn with_escalation<T>(start: u32, mut f: impl FnMut(u32) -> Result<T>) -> Result<T> {
    let ceiling = precision_ceiling();
    let mut prec = start;
    loop {
        match f(prec) {
            Err(e) if e.is_precision() && prec * 2 <= ceiling => prec *= 2,
            other => return other,
        }
    }
}

pub fn precision_ceiling() -> u32 {
    std::env::var("ISOCRYS_PRECISION_CEILING").ok().and_then(|s| s.parse().ok()).unwrap_or(1024)
}
