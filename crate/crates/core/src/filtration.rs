//! One-step filtrations `F ⊂ D_L`: admissibility, Galois-diagonal stability,
//! Galois descent, and the construction of admissible stable Lagrangian
//! filtrations on polarized (semi-abelian) φ-modules.
//!
//! Conventions. `G` acts linearly by `ρ(gh) = ρ(g)ρ(h)` and on `L` through
//! `g ↦ τ_g` with `τ_{gh} = τ_h ∘ τ_g`. A filtration is stable when
//! `ρ(g) F = τ_g(F)` for every `g`; equivalently it is spanned by vectors
//! fixed by the semilinear maps `s_g = ρ(g)^{-1} ∘ τ_g`.

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixtures;
use crate::grouprep::action::{find_perturbateur, isotypic_decomposition, GroupAction, PerturbateurSearch};
use crate::grouprep::characters::CharacterTable;
use crate::grouprep::FiniteGroup;
use crate::isocrystal::{is_half, PhiModule, PolarizedPhiModule, SemiAbelianPhiModule, SlopeProfile, SubmoduleMode};
use crate::padic::matrix::DEFAULT_GUARD;
use crate::padic::{Elem, Mat, Tower};
use crate::sampling::{self, Rng64};
use crate::symplectic::{lagrangian_h_small_intersection, random_rational_lagrangian, BlockShape, SymplecticSpace};

/// `F ⊂ D_L` given by a basis of columns over `L`.
#[derive(Clone, Debug)]
pub struct Filtration {
    basis: Mat,
}

impl Filtration {
    pub fn new(basis: Mat) -> Result<Filtration> {
        if basis.cols() > 0 && basis.rank()? != basis.cols() {
            return Err(Error::invalid("filtration basis is not of full column rank"));
        }
        Ok(Filtration { basis })
    }

    pub fn field(&self) -> &Arc<Tower> {
        self.basis.tower()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }
}

/// `L/K` with its automorphisms matched to the elements of `G`.
#[derive(Clone, Debug)]
pub struct GaloisSetup {
    field: Arc<Tower>,
    group: FiniteGroup,
    /// Automorphism index per group element; `None` when `L = K`.
    tau: Vec<Option<usize>>,
}

impl GaloisSetup {
    /// Matches elements to automorphisms through `correspondence`
    /// (element name, automorphism name), else by equal names, else by
    /// index, and checks `τ_{gh} = τ_h ∘ τ_g`.
    pub fn new(group: &FiniteGroup, field: &Arc<Tower>, correspondence: Option<&[(String, String)]>) -> Result<GaloisSetup> {
        let n = group.order();
        let autos = field.autos();
        if autos.is_empty() {
            if field.e != 1 {
                return Err(Error::invalid("ramified extension without an automorphism table"));
            }
            if n != 1 {
                return Err(Error::invalid(format!("a group of order {n} cannot act faithfully on L = K")));
            }
            return Ok(GaloisSetup {
                field: field.clone(),
                group: group.clone(),
                tau: vec![None],
            });
        }
        if autos.len() != n {
            return Err(Error::invalid(format!("group of order {n} against {} automorphisms of L/K", autos.len())));
        }
        let tau: Vec<usize> = if let Some(corr) = correspondence {
            let mut tau = Vec::with_capacity(n);
            for g in 0..n {
                let name = group.name(g);
                let (_, a) = corr
                    .iter()
                    .find(|(e, _)| e == name)
                    .ok_or_else(|| Error::invalid(format!("correspondence misses element {name}")))?;
                tau.push(field.auto_index(a).ok_or_else(|| Error::invalid(format!("unknown automorphism {a}")))?);
            }
            tau
        } else if (0..n).all(|g| field.auto_index(group.name(g)).is_some()) {
            (0..n).map(|g| field.auto_index(group.name(g)).unwrap()).collect()
        } else {
            (0..n).collect()
        };
        let mut seen = vec![false; n];
        for &a in &tau {
            if std::mem::replace(&mut seen[a], true) {
                return Err(Error::invalid(format!("automorphism {} is matched twice", autos[a].name)));
            }
        }
        let setup = GaloisSetup {
            field: field.clone(),
            group: group.clone(),
            tau: tau.into_iter().map(Some).collect(),
        };
        for g in 0..n {
            for h in 0..n {
                let comp = setup.compose(setup.tau[h].unwrap(), setup.tau[g].unwrap())?;
                if comp != setup.tau[group.mul(g, h)].unwrap() {
                    return Err(Error::invalid(format!(
                        "τ({}) is not τ({}) ∘ τ({}): the correspondence must reverse products",
                        group.name(group.mul(g, h)),
                        group.name(h),
                        group.name(g)
                    )));
                }
            }
        }
        Ok(setup)
    }

    /// Trivial group over `L = K`.
    pub fn trivial(k: &Arc<Tower>) -> GaloisSetup {
        GaloisSetup {
            field: k.clone(),
            group: crate::grouprep::group::fixtures::cyclic(1),
            tau: vec![None],
        }
    }

    pub fn field(&self) -> &Arc<Tower> {
        &self.field
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    /// Index of `a ∘ b`.
    fn compose(&self, a: usize, b: usize) -> Result<usize> {
        let img = Elem::uniformizer(&self.field).apply_auto(b).apply_auto(a);
        self.field.find_auto(&img).ok_or_else(|| Error::invalid("automorphism table is not closed"))
    }

    /// Name of `τ_g`.
    pub fn auto_name(&self, g: usize) -> String {
        match self.tau[g] {
            Some(a) => self.field.autos()[a].name.clone(),
            None => "id".into(),
        }
    }

    /// `τ_g` applied entrywise.
    pub fn gal(&self, x: &Mat, g: usize) -> Mat {
        let x = x.embed(&self.field);
        match self.tau[g] {
            Some(a) => x.apply_auto(a),
            None => x,
        }
    }

    /// Automorphisms by name, each with its index in the table (or `None`).
    fn automorphisms(&self) -> Vec<(String, Option<usize>)> {
        if self.field.autos().is_empty() {
            vec![("id".into(), None)]
        } else {
            self.field.autos().iter().enumerate().map(|(i, a)| (a.name.clone(), Some(i))).collect()
        }
    }
}

/// Certified `dim(N_L ∩ F)` for a subspace `N` of `D` given over `K`.
pub fn t_h(f: &Filtration, n: &Mat) -> Result<usize> {
    if n.cols() == 0 || f.dim() == 0 {
        return Ok(0);
    }
    let nl = n.embed(f.field());
    let r1 = nl.rank()?;
    let r = nl.hstack(f.basis()).rank()?;
    Ok(r1 + f.dim() - r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub dim: usize,
    pub slopes: String,
    /// `dim(N_L ∩ F)`.
    pub t_h: usize,
    /// `t_N(N) = Σ μ d_μ`.
    pub bound: i64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub mode: SubmoduleMode,
    pub samples: usize,
    pub equality_at_whole: bool,
    pub ledger: Vec<LedgerEntry>,
    /// Ledger index of the first violating submodule.
    pub violation: Option<usize>,
    #[serde(skip)]
    pub violating_basis: Option<Mat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl AdmissibilityReport {
    /// Report for the zero module.
    pub fn zero(mode: SubmoduleMode) -> AdmissibilityReport {
        AdmissibilityReport {
            admissible: true,
            mode,
            samples: 0,
            equality_at_whole: true,
            ledger: Vec::new(),
            violation: None,
            violating_basis: None,
            note: Some("zero module".into()),
        }
    }
}

/// Checks `dim(N_L ∩ F) ≤ t_N(N)` over sub-φ-modules `N`, with equality at
/// `N = D`.
///
/// Exact mode runs over every sum of isoclinic pieces, which is complete for
/// multiplicity-free `D`. Sampled mode adds random submodules: an
/// "inadmissible" verdict always names a violating `N`, an "admissible" one
/// may miss a violation.
pub fn is_admissible(module: &PhiModule, f: &Filtration, mode: SubmoduleMode, seed: u64, budget: usize) -> Result<AdmissibilityReport> {
    let n = module.dim();
    if f.ambient_dim() != n {
        return Err(Error::invalid(format!(
            "filtration lives in dimension {} but the module has dimension {n}",
            f.ambient_dim()
        )));
    }
    let prof = module.newton_slopes()?;
    let t = module.field().clone();
    let (subs, note) = if prof.slopes.len() == 1 && prof.slopes[0].0 >= BigRational::one() {
        // t_H(N) ≤ dim N ≤ t_N(N) for every N
        (
            vec![Mat::zeros(&t, n, 0), Mat::identity(&t, n)],
            Some("pure of slope ≥ 1: only N = D constrains F".to_string()),
        )
    } else {
        (module.submodules(mode, budget, seed)?, None)
    };
    let t_d = module.t_n()?;
    let mut ledger = Vec::with_capacity(subs.len());
    let mut violation = None;
    let mut violating_basis = None;
    let mut equality = false;
    for sub in &subs {
        let th = t_h(f, sub)?;
        let (bound, slopes) = if sub.cols() == 0 {
            (0, String::new())
        } else if sub.cols() == n {
            (t_d, prof.display())
        } else {
            let r = module.restrict(sub)?;
            (r.t_n()?, r.newton_slopes()?.display())
        };
        let whole = sub.cols() == n;
        if whole {
            equality = th as i64 == bound;
        }
        let ok = th as i64 <= bound && (!whole || th as i64 == bound);
        if !ok && violation.is_none() {
            violation = Some(ledger.len());
            violating_basis = Some(sub.clone());
        }
        ledger.push(LedgerEntry {
            dim: sub.cols(),
            slopes,
            t_h: th,
            bound,
            ok,
        });
    }
    Ok(AdmissibilityReport {
        admissible: violation.is_none() && equality,
        mode,
        samples: subs.len(),
        equality_at_whole: equality,
        ledger,
        violation,
        violating_basis,
        note,
    })
}

/// `ρ(g) F = τ_g(F)` for every `g`.
pub fn is_diagonally_stable(f: &Filtration, action: &GroupAction, setup: &GaloisSetup) -> Result<bool> {
    if f.dim() == 0 {
        return Ok(true);
    }
    let l = setup.field();
    for g in 0..action.group.order() {
        let lin = action.rho[g].embed(l).mul(f.basis());
        let gal = setup.gal(f.basis(), g);
        if !lin.same_span(&gal)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Vectors fixed by `s_g = ρ(g)^{-1} τ_g` spanning the `L`-subspace with
/// basis `space`, which must be stable under the `s_g`.
///
/// Candidates are the traces `Σ_g s_g(u^j x)` over the `K`-basis `u^j` of `L`
/// and the basis vectors `x`; an independent family of full size always
/// exists in characteristic zero.
pub fn galois_descend(action: &GroupAction, setup: &GaloisSetup, space: &Mat) -> Result<Mat> {
    let l = setup.field().clone();
    let order = action.group.order();
    let n = action.dim();
    let k = space.cols();
    let rho_inv: Vec<Mat> = (0..order).map(|g| action.rho[action.group.inv(g)].embed(&l)).collect();
    let s = |x: &Mat, g: usize| rho_inv[g].mul(&setup.gal(x, g));
    for g in 0..order {
        if !s(space, g).span_contained_in(space)? {
            return Err(Error::invalid(format!(
                "subspace is not stable under the semilinear action of {}",
                action.group.name(g)
            )));
        }
    }
    let u = Elem::uniformizer(&l);
    let mut basis = Mat::zeros(&l, n, 0);
    'outer: for j in 0..l.e {
        let alpha = if l.e == 1 { Elem::one(&l) } else { u.pow(j as u64) };
        for c in 0..k {
            if basis.cols() == k {
                break 'outer;
            }
            let x = space.col_mat(c).scale(&alpha);
            let v = (1..order).fold(s(&x, 0), |acc, g| acc.add(&s(&x, g)));
            let cand = basis.hstack(&v);
            if cand.rank()? > basis.cols() {
                basis = cand;
            }
        }
    }
    if basis.cols() != k {
        return Err(Error::InternalContradiction(format!(
            "only {} of {k} independent invariant vectors",
            basis.cols()
        )));
    }
    Ok(basis)
}

/// Matrix over `L` whose entries lie in `K`, moved to `K`.
fn to_base(m: &Mat, k: &Arc<Tower>) -> Result<Mat> {
    if !m.is_base() {
        return Err(Error::precision("matrix expected over K has a ramified part at working precision"));
    }
    Ok(Mat::from_fn(k, m.rows(), m.cols(), |i, j| {
        Elem::from_base_coords(k, m.get(i, j).base_coords().to_vec())
    }))
}

/// Invariant basis `W` of `D_L` and the pairing on `D_L^G` in that basis,
/// which takes values in `K`.
fn descended_space(module: &PolarizedPhiModule, action: &GroupAction, setup: &GaloisSetup) -> Result<(Mat, SymplecticSpace)> {
    let l = setup.field();
    let w = galois_descend(action, setup, &Mat::identity(l, module.module.dim()))?;
    let jw = w.transpose().mul(&module.j.embed(l)).mul(&w);
    Ok((w, SymplecticSpace::new(to_base(&jw, module.module.field())?)?))
}

/// Filtered φ-module over `K` obtained from `D_L`, a stable filtration and
/// the descent datum `f_{τ_g} = ρ(g)`.
#[derive(Clone, Debug)]
pub struct DescendedModule {
    /// Invariant basis of `D_L` (columns, over `L`).
    pub basis: Mat,
    pub module: PhiModule,
    pub polarization: Option<Mat>,
    /// Filtration in the invariant basis, over `K`.
    pub filtration: Option<Mat>,
}

/// Descends `(D_L, φ, F)` along the semilinear action `s_g = ρ(g)^{-1} τ_g`.
pub fn descend_filtered(module: &PhiModule, j: Option<&Mat>, action: &GroupAction, setup: &GaloisSetup, f: Option<&Filtration>) -> Result<DescendedModule> {
    let l = setup.field().clone();
    let k = module.field().clone();
    let n = module.dim();
    let w = galois_descend(action, setup, &Mat::identity(&l, n))?;
    let winv = w.inverse()?;
    let b = to_base(&winv.mul(&module.matrix().embed(&l)).mul(&w.frobenius()), &k)?;
    let descended = PhiModule::new(&k, b)?;
    let polarization = j.map(|j| to_base(&w.transpose().mul(&j.embed(&l)).mul(&w), &k)).transpose()?;
    let filtration = match f {
        Some(f) if f.dim() > 0 => {
            let inv = galois_descend(action, setup, f.basis())?;
            Some(to_base(&winv.mul(&inv), &k)?)
        }
        Some(_) => Some(Mat::zeros(&k, n, 0)),
        None => None,
    };
    Ok(DescendedModule {
        basis: w,
        module: descended,
        polarization,
        filtration,
    })
}

/// Search parameters shared by the driver and the verifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchOptions {
    pub mode: SubmoduleMode,
    pub seed: u64,
    pub budget: usize,
    /// Skip φ-compatibility of the action; the descent datum then need not
    /// commute with φ.
    pub relaxed: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            mode: SubmoduleMode::Sampled,
            seed: 0,
            budget: 200,
            relaxed: false,
        }
    }
}

/// One summand of the decomposition, with its induced structure.
#[derive(Clone, Debug)]
pub struct Piece {
    /// Basis inside the ambient module, over `K`.
    pub basis: Mat,
    pub module: PolarizedPhiModule,
    pub action: GroupAction,
    pub slopes: SlopeProfile,
    /// Irreducible characters occurring in the piece.
    pub characters: Vec<usize>,
}

impl Piece {
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn is_supersingular(&self) -> bool {
        self.slopes.slopes.iter().all(|(q, _)| is_half(q))
    }
}

/// Orthogonal φ- and `G`-stable summands with slopes `{μ, 1-μ}` or `{1/2}`,
/// each carrying the characters of one Frobenius-and-duality class.
pub fn decompose_for_eadm(pol: &PolarizedPhiModule, action: &GroupAction) -> Result<Vec<Piece>> {
    let t = pol.module.field().clone();
    let comps = pol.module.isoclinic_decompose()?;
    let mut used = vec![false; comps.len()];
    let mut blocks = Vec::new();
    for i in 0..comps.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        if is_half(&comps[i].slope) {
            blocks.push(comps[i].basis.clone());
            continue;
        }
        let partner = BigRational::one() - &comps[i].slope;
        let j = (0..comps.len())
            .find(|&j| !used[j] && comps[j].slope == partner)
            .ok_or_else(|| Error::invalid(format!("slope {} has no partner {}", comps[i].slope, partner)))?;
        used[j] = true;
        blocks.push(comps[i].basis.hstack(&comps[j].basis));
    }
    let table = CharacterTable::new(&action.group)?;
    let units = table.galois_units(t.p as u64, 1);
    let mut pieces = Vec::new();
    for b in blocks {
        let rb = action.restrict(&b)?;
        let iso = isotypic_decomposition(&rb, &table)?;
        let m = iso.len();
        let mut class: Vec<usize> = (0..m).collect();
        let linked = |i: usize, j: usize| {
            iso[j].characters.iter().any(|&c| {
                let o = table.orbit(c, &units);
                iso[i].characters.iter().any(|&a| o.contains(&a) || o.contains(&table.dual(a)))
            })
        };
        loop {
            let mut changed = false;
            for i in 0..m {
                for j in 0..m {
                    if class[i] != class[j] && (linked(i, j) || linked(j, i)) {
                        let (lo, hi) = (class[i].min(class[j]), class[i].max(class[j]));
                        class.iter_mut().filter(|c| **c == hi).for_each(|c| *c = lo);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut reps: Vec<usize> = class.clone();
        reps.sort_unstable();
        reps.dedup();
        for r in reps {
            let members: Vec<usize> = (0..m).filter(|&i| class[i] == r).collect();
            let proj = members
                .iter()
                .skip(1)
                .fold(iso[members[0]].projector.clone(), |acc, &i| acc.add(&iso[i].projector));
            let basis = b.mul(&proj.column_basis()?);
            let module = pol.module.restrict(&basis)?;
            let j = basis.transpose().mul(&pol.j).mul(&basis);
            let slopes = module.newton_slopes()?;
            let mut characters: Vec<usize> = members.iter().flat_map(|&i| iso[i].characters.clone()).collect();
            characters.sort_unstable();
            pieces.push(Piece {
                action: action.restrict(&basis)?,
                module: PolarizedPhiModule::new(module, j)?,
                basis,
                slopes,
                characters,
            });
        }
    }
    Ok(pieces)
}

fn transverse(f: &Mat, w: &Mat) -> Result<bool> {
    Ok(f.hstack(w).rank()? == f.cols() + w.cols())
}

/// Stable Lagrangian on a piece with slopes `{μ, 1-μ}`, `μ ≠ 1/2`, meeting
/// both slope parts trivially. Returns the basis over `L` and the number of
/// draws.
pub fn two_slope_filtration(piece: &Piece, setup: &GaloisSetup, rng: &mut Rng64, budget: usize) -> Result<(Mat, usize)> {
    let comps = piece.module.module.isoclinic_decompose()?;
    if comps.len() != 2 || &comps[0].slope + &comps[1].slope != BigRational::one() {
        return Err(Error::invalid("piece must have exactly two slopes μ, 1-μ"));
    }
    let l = setup.field();
    let parts: Vec<Mat> = comps.iter().map(|c| c.basis.embed(l)).collect();
    let (w, space) = descended_space(&piece.module, &piece.action, setup)?;
    for tries in 1..=budget {
        let c = random_rational_lagrangian(&space, rng, 2 + (tries / 20) as i64)?;
        let f = w.mul(&c.embed(l));
        if transverse(&f, &parts[0])? && transverse(&f, &parts[1])? {
            return Ok((f, tries));
        }
    }
    Err(Error::BudgetExhausted {
        what: "Lagrangian transverse to both slope parts; retry with a larger budget".into(),
        tries: budget,
    })
}

/// Construction used on a supersingular piece.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SupersingularBranch {
    /// `G` acts by scalars: `K`-rational `F` with `F ∩ φ(F) = 0`.
    HomothetyAction,
    Perturbateur {
        element: String,
        eigenvalues: Vec<(u64, usize)>,
        /// Explicit Lagrangian with `dim F ∩ h(F) ≤ 1` over a field holding
        /// the eigenvalues, when one is available.
        witness: Option<SmallIntersectionWitness>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallIntersectionWitness {
    pub blocks: Vec<(BlockShape, Vec<usize>)>,
    pub intersection_dim: usize,
}

fn small_intersection_witness(j: &Mat, h: &Mat, order: u64) -> Result<Option<SmallIntersectionWitness>> {
    let k = h.tower().clone();
    let p = k.p as u64;
    let (field, roots) = if p == 2 && 4 % order == 0 {
        let g = fixtures::gaussian_extension(k.f, k.prec)?;
        if !k.same_base(&g) {
            return Ok(None);
        }
        let i = fixtures::gaussian_i(&g);
        (g.clone(), vec![Elem::one(&g), Elem::one(&g).neg(), i.clone(), i.neg()])
    } else if order % p != 0 && ((p.pow(k.f as u32) - 1) % order) == 0 {
        let roots = (0..order).map(|j| Elem::root_of_unity(&k, order, j)).collect::<Result<Vec<_>>>()?;
        (k.clone(), roots)
    } else {
        return Ok(None);
    };
    let space = SymplecticSpace::new(j.embed(&field))?;
    let hh = h.embed(&field);
    let si = lagrangian_h_small_intersection(&space, &hh, &roots)?;
    let d = si.basis.intersection_dim(&hh.mul(&si.basis))?;
    if d > 1 {
        return Err(Error::InternalContradiction(format!("eigenbasis construction gave dim F ∩ h(F) = {d}")));
    }
    Ok(Some(SmallIntersectionWitness {
        blocks: si.blocks,
        intersection_dim: d,
    }))
}

/// Stable admissible Lagrangian on an isoclinic slope-1/2 piece.
pub fn supersingular_filtration(piece: &Piece, setup: &GaloisSetup, rng: &mut Rng64, budget: usize) -> Result<(Mat, SupersingularBranch, usize)> {
    if !piece.is_supersingular() {
        return Err(Error::invalid("piece is not isoclinic of slope 1/2"));
    }
    let l = setup.field();
    let n = piece.dim();
    match find_perturbateur(&piece.action)? {
        PerturbateurSearch::HomothetyAction => {
            let space = SymplecticSpace::new(piece.module.j.clone())?;
            for tries in 1..=budget {
                let c = random_rational_lagrangian(&space, rng, 2 + (tries / 20) as i64)?;
                if c.hstack(&piece.module.module.apply(&c)).rank()? == n {
                    return Ok((c.embed(l), SupersingularBranch::HomothetyAction, tries));
                }
            }
            Err(Error::BudgetExhausted {
                what: "K-rational Lagrangian with F ∩ φ(F) = 0; retry with a larger budget".into(),
                tries: budget,
            })
        }
        PerturbateurSearch::Element(w) => {
            let h = &piece.action.rho[w.element];
            let order = piece.action.group.elem_order(w.element) as u64;
            let witness = small_intersection_witness(&piece.module.j, h, order)?;
            let hl = h.embed(l);
            let (wb, space) = descended_space(&piece.module, &piece.action, setup)?;
            for tries in 1..=budget {
                let c = random_rational_lagrangian(&space, rng, 2 + (tries / 20) as i64)?;
                let f = wb.mul(&c.embed(l));
                if f.intersection_dim(&hl.mul(&f))? <= 1 {
                    let branch = SupersingularBranch::Perturbateur {
                        element: w.name.clone(),
                        eigenvalues: w.eigenvalues.clone(),
                        witness,
                    };
                    return Ok((f, branch, tries));
                }
            }
            Err(Error::BudgetExhausted {
                what: format!("stable Lagrangian with dim F ∩ {}(F) ≤ 1; retry with a larger budget", w.name),
                tries: budget,
            })
        }
    }
}

/// Relaxed fallback: stable Lagrangians drawn until one passes `is_admissible`.
fn generic_filtration(piece: &Piece, setup: &GaloisSetup, rng: &mut Rng64, opts: &SearchOptions) -> Result<(Mat, usize)> {
    let l = setup.field();
    let (w, space) = descended_space(&piece.module, &piece.action, setup)?;
    for tries in 1..=opts.budget {
        let c = random_rational_lagrangian(&space, rng, 2 + (tries / 20) as i64)?;
        let f = w.mul(&c.embed(l));
        if is_admissible(&piece.module.module, &Filtration::new(f.clone())?, opts.mode, opts.seed, opts.budget)?.admissible {
            return Ok((f, tries));
        }
    }
    Err(Error::BudgetExhausted {
        what: "admissible stable Lagrangian".into(),
        tries: opts.budget,
    })
}

/// `f_γ` for every automorphism `γ` of `L/K`, with `f_{τ_g} = ρ(g)`.
#[derive(Clone, Debug)]
pub struct DescentDatum {
    /// Automorphism name and matrix over `K`.
    pub maps: Vec<(String, Mat)>,
}

impl DescentDatum {
    pub fn from_action(action: &GroupAction, setup: &GaloisSetup) -> DescentDatum {
        DescentDatum {
            maps: (0..action.group.order()).map(|g| (setup.auto_name(g), action.rho[g].clone())).collect(),
        }
    }

    fn get(&self, name: &str) -> Option<&Mat> {
        self.maps.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// `f_{γδ} = γ(f_δ) ∘ f_γ` for all automorphisms `γ, δ`.
    pub fn check_cocycle(&self, setup: &GaloisSetup) -> Result<bool> {
        let l = setup.field();
        let autos = setup.automorphisms();
        for (gn, gi) in &autos {
            let Some(fg) = self.get(gn) else { return Ok(false) };
            for (dn, di) in &autos {
                let Some(fd) = self.get(dn) else { return Ok(false) };
                let comp = match (gi, di) {
                    (Some(a), Some(b)) => setup.field.autos()[setup.compose(*a, *b)?].name.clone(),
                    _ => "id".into(),
                };
                let Some(fc) = self.get(&comp) else { return Ok(false) };
                let gfd = match gi {
                    Some(a) => fd.embed(l).apply_auto(*a),
                    None => fd.embed(l),
                };
                if !gfd.mul(&fg.embed(l)).agrees_certified(&fc.embed(l), DEFAULT_GUARD) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Semi-abelian polarized `D` with a group action and `L/K`.
#[derive(Clone, Debug)]
pub struct EadmProblem {
    pub module: SemiAbelianPhiModule,
    pub action: GroupAction,
    pub galois: GaloisSetup,
}

impl EadmProblem {
    pub fn new(module: SemiAbelianPhiModule, action: GroupAction, galois: GaloisSetup) -> Result<EadmProblem> {
        if action.dim() != module.module.dim() {
            return Err(Error::invalid("action and module dimensions differ"));
        }
        if !action.field().same_base(module.module.field()) || !galois.field().same_base(module.module.field()) {
            return Err(Error::FieldIncompatibility(
                "module, action and extension must share the unramified level".into(),
            ));
        }
        if action.group.table() != galois.group().table() {
            return Err(Error::invalid("the action and the extension use different groups"));
        }
        let p = EadmProblem { module, action, galois };
        p.quotient_action()?;
        Ok(p)
    }

    /// Induced action on `D_B`; fails unless `ρ` preserves `D_T`.
    pub fn quotient_action(&self) -> Result<Option<GroupAction>> {
        let Some(q) = &self.module.quotient else { return Ok(None) };
        let dt = self.module.toric_dim();
        let n = self.module.module.dim();
        let p = self.module.adapted_basis();
        let pi = p.inverse()?;
        let mut rho = Vec::with_capacity(self.action.rho.len());
        for (g, r) in self.action.rho.iter().enumerate() {
            let m = pi.mul(r).mul(&p);
            if !m.submatrix(dt, n, 0, dt).is_zero() {
                return Err(Error::invalid(format!("{} does not preserve the toric part", self.action.group.name(g))));
            }
            rho.push(m.submatrix(dt, n, dt, n));
        }
        let qa = GroupAction {
            group: self.action.group.clone(),
            rho,
        };
        qa.check_symplectic(&q.j)?;
        Ok(Some(qa))
    }

    /// Verifies a filtration of `D_L` and a descent datum.
    pub fn verify(&self, f: &Filtration, datum: &DescentDatum, opts: &SearchOptions) -> Result<Verification> {
        let l = self.galois.field().clone();
        let n = self.module.module.dim();
        if f.ambient_dim() != n {
            return Err(Error::invalid(format!("filtration has {} rows for a module of dimension {n}", f.ambient_dim())));
        }
        if **f.field() != *l {
            return Err(Error::FieldIncompatibility("filtration is not defined over the extension L".into()));
        }
        let dt = self.module.toric_dim();
        let tl = self.module.toric.embed(&l);
        let contains_toric = dt == 0 || tl.span_contained_in(f.basis())?;
        let admissible_sub = if dt == 0 {
            AdmissibilityReport::zero(opts.mode)
        } else {
            let ker = tl.hstack(&f.basis().neg()).kernel()?;
            let coeffs = ker.submatrix(0, dt, 0, ker.cols());
            let sub = if coeffs.cols() == 0 { coeffs } else { coeffs.column_basis()? };
            let mt = self.module.module.restrict(&self.module.toric)?;
            is_admissible(&mt, &Filtration::new(sub)?, opts.mode, opts.seed, opts.budget)?
        };
        let (lagrangian, admissible_quotient) = match &self.module.quotient {
            None => (f.dim() == n, None),
            Some(q) => {
                let coords = self.module.adapted_basis().embed(&l).inverse()?.mul(f.basis());
                let fb = coords.submatrix(dt, n, 0, coords.cols());
                let fb = if fb.is_zero() { Mat::zeros(&l, n - dt, 0) } else { fb.column_basis()? };
                let lag = SymplecticSpace::new(q.j.embed(&l))?.is_lagrangian(&fb)?;
                let rep = is_admissible(&q.module, &Filtration::new(fb)?, opts.mode, opts.seed, opts.budget)?;
                (lag, Some(rep))
            }
        };
        let stable = is_diagonally_stable(f, &self.action, &self.galois)?;
        let expected = DescentDatum::from_action(&self.action, &self.galois);
        let datum_matches_action = expected.maps.len() == datum.maps.len()
            && expected
                .maps
                .iter()
                .all(|(name, m)| datum.get(name).is_some_and(|d| d.agrees_certified(m, DEFAULT_GUARD)));
        let mut transports = true;
        let mut phi_equivariant = true;
        let a = self.module.module.matrix();
        for (name, fm) in &datum.maps {
            if fm.rows() != n || !fm.is_square() {
                transports = false;
                phi_equivariant = false;
                continue;
            }
            let g_img = match l.auto_index(name) {
                Some(i) => f.basis().apply_auto(i),
                None if name == "id" && l.autos().is_empty() => f.basis().clone(),
                None => {
                    transports = false;
                    continue;
                }
            };
            if f.dim() > 0 && !fm.embed(&l).mul(f.basis()).same_span(&g_img)? {
                transports = false;
            }
            if !fm.mul(a).agrees_certified(&a.mul(&fm.frobenius()), DEFAULT_GUARD) {
                phi_equivariant = false;
            }
        }
        let cocycle = datum.check_cocycle(&self.galois)?;
        let mut failures = Vec::new();
        let mut fail = |ok: bool, what: &str| {
            if !ok {
                failures.push(what.to_string());
            }
        };
        fail(lagrangian, "lagrangian");
        fail(contains_toric, "toric containment");
        fail(admissible_sub.admissible, "admissibility of F ∩ D_T");
        fail(admissible_quotient.as_ref().map_or(true, |r| r.admissible), "admissibility of F / (F ∩ D_T)");
        fail(stable, "diagonal stability");
        fail(datum_matches_action, "descent datum equals the action");
        fail(transports, "descent datum transports F");
        fail(cocycle, "cocycle law");
        if !opts.relaxed {
            fail(phi_equivariant, "descent datum commutes with φ");
        }
        Ok(Verification {
            lagrangian,
            contains_toric,
            admissible_sub,
            admissible_quotient,
            stable,
            datum_matches_action,
            datum_transports_filtration: transports,
            datum_phi_equivariant: phi_equivariant,
            cocycle,
            failures,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub lagrangian: bool,
    pub contains_toric: bool,
    pub admissible_sub: AdmissibilityReport,
    pub admissible_quotient: Option<AdmissibilityReport>,
    pub stable: bool,
    pub datum_matches_action: bool,
    pub datum_transports_filtration: bool,
    pub datum_phi_equivariant: bool,
    pub cocycle: bool,
    /// Names of violated properties.
    pub failures: Vec<String>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PieceBranch {
    TwoSlope {
        mu: String,
    },
    Supersingular(SupersingularBranch),
    /// Relaxed mode without φ-compatible pieces.
    Generic,
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceReport {
    pub dim: usize,
    pub slopes: String,
    pub characters: Vec<usize>,
    pub branch: PieceBranch,
    pub draws: usize,
}

#[derive(Clone, Debug)]
pub struct EadmOutcome {
    pub filtration: Filtration,
    pub pieces: Vec<PieceReport>,
    pub datum: DescentDatum,
    pub verification: Verification,
}

fn piece_rng(seed: u64, i: usize) -> Rng64 {
    sampling::rng(seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Admissible, Lagrangian, diagonally stable filtration with its descent
/// datum, every property re-verified before returning.
///
/// `D_T ⊂ F` and `F / D_T` is built on `D_B` piece by piece: two-slope
/// pieces take stable Lagrangians transverse to both slope parts,
/// supersingular pieces use the homothety or perturbateur criterion.
pub fn find_admissible_stable_filtration(problem: &EadmProblem, opts: &SearchOptions) -> Result<EadmOutcome> {
    let sa = &problem.module;
    if !opts.relaxed {
        problem.action.check_phi(&sa.module)?;
    }
    let l = problem.galois.field().clone();
    let n = sa.module.dim();
    let mut reports = Vec::new();
    let mut f = sa.toric.embed(&l);
    if let Some(q) = &sa.quotient {
        let qa = problem.quotient_action()?.expect("quotient action");
        let pieces = if opts.relaxed && qa.check_phi(&q.module).is_err() {
            let t = q.module.field().clone();
            vec![Piece {
                basis: Mat::identity(&t, q.module.dim()),
                module: q.clone(),
                action: qa.clone(),
                slopes: q.module.newton_slopes()?,
                characters: Vec::new(),
            }]
        } else {
            decompose_for_eadm(q, &qa)?
        };
        let mut fb = Mat::zeros(&l, q.module.dim(), 0);
        for (i, piece) in pieces.iter().enumerate() {
            let mut rng = piece_rng(opts.seed, i);
            let (fi, branch, draws) = if piece.characters.is_empty() && opts.relaxed {
                let (fi, d) = generic_filtration(piece, &problem.galois, &mut rng, opts)?;
                (fi, PieceBranch::Generic, d)
            } else if piece.is_supersingular() {
                let (fi, b, d) = supersingular_filtration(piece, &problem.galois, &mut rng, opts.budget)?;
                (fi, PieceBranch::Supersingular(b), d)
            } else {
                let (fi, d) = two_slope_filtration(piece, &problem.galois, &mut rng, opts.budget)?;
                let mu = piece.slopes.slopes[0].0.to_string();
                (fi, PieceBranch::TwoSlope { mu }, d)
            };
            let rep = is_admissible(&piece.module.module, &Filtration::new(fi.clone())?, opts.mode, opts.seed, opts.budget)?;
            if !rep.admissible {
                return Err(Error::InternalContradiction(format!(
                    "piece {i} failed admissibility re-verification ({branch:?})"
                )));
            }
            fb = fb.hstack(&piece.basis.embed(&l).mul(&fi));
            reports.push(PieceReport {
                dim: piece.dim(),
                slopes: piece.slopes.display(),
                characters: piece.characters.clone(),
                branch,
                draws,
            });
        }
        f = f.hstack(&sa.complement.embed(&l).mul(&fb));
    }
    debug_assert_eq!(f.rows(), n);
    let filtration = Filtration::new(f)?;
    let datum = DescentDatum::from_action(&problem.action, &problem.galois);
    let verification = problem.verify(&filtration, &datum, opts)?;
    if !verification.ok() {
        return Err(Error::InternalContradiction(format!(
            "constructed filtration fails: {}",
            verification.failures.join(", ")
        )));
    }
    Ok(EadmOutcome {
        filtration,
        pieces: reports,
        datum,
        verification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouprep::group::fixtures as groups;

    fn q2() -> Arc<Tower> {
        Tower::unramified(2, 1, 64).unwrap()
    }

    fn ordinary(t: &Arc<Tower>) -> PolarizedPhiModule {
        let m = PhiModule::new(t, Mat::from_i64(t, &[vec![1, 0], vec![0, 2]])).unwrap();
        PolarizedPhiModule::new(m, fixtures::lambda0(t, 1)).unwrap()
    }

    fn line(t: &Arc<Tower>, a: i64, b: i64) -> Filtration {
        Filtration::new(Mat::from_i64(t, &[vec![a], vec![b]])).unwrap()
    }

    #[test]
    fn t_h_examples() {
        let t = q2();
        let f = line(&t, 1, 1);
        let e1 = Mat::from_i64(&t, &[vec![1], vec![0]]);
        assert_eq!(t_h(&f, &e1).unwrap(), 0);
        assert_eq!(t_h(&f, &Mat::identity(&t, 2)).unwrap(), 1);
        assert_eq!(t_h(&f, &Mat::zeros(&t, 2, 0)).unwrap(), 0);
    }

    #[test]
    fn ordinary_plane_ledgers() {
        let t = q2();
        let d = ordinary(&t).module;
        let r = is_admissible(&d, &line(&t, 1, 1), SubmoduleMode::Exact, 0, 0).unwrap();
        assert!(r.admissible);
        assert_eq!(r.ledger.len(), 4);
        assert!(is_admissible(&d, &line(&t, 0, 1), SubmoduleMode::Exact, 0, 0).unwrap().admissible);
        let bad = is_admissible(&d, &line(&t, 1, 0), SubmoduleMode::Exact, 0, 0).unwrap();
        assert!(!bad.admissible);
        let v = bad.violating_basis.unwrap();
        assert!(v.same_span(&Mat::from_i64(&t, &[vec![1], vec![0]])).unwrap());
        let e = &bad.ledger[bad.violation.unwrap()];
        assert_eq!((e.t_h, e.bound), (1, 0));
    }

    #[test]
    fn simple_supersingular_any_line() {
        let t = q2();
        let d = fixtures::supersingular_plane(&t).unwrap();
        for (a, b) in [(1, 0), (0, 1), (3, -5)] {
            let r = is_admissible(&d, &line(&t, a, b), SubmoduleMode::Exact, 0, 0).unwrap();
            assert!(r.admissible);
            assert_eq!(r.samples, 2);
        }
    }

    #[test]
    fn conjugation_breaks_stability() {
        let t = q2();
        let l = fixtures::sqrt2_extension(1, 64).unwrap();
        let act = GroupAction::sign(&t, 2);
        let setup = GaloisSetup::new(&act.group, &l, None).unwrap();
        let s2 = Elem::uniformizer(&l);
        let f = Filtration::new(Mat::from_rows(&l, vec![vec![Elem::one(&l)], vec![s2]])).unwrap();
        assert!(!is_diagonally_stable(&f, &act, &setup).unwrap());
        let g = Filtration::new(Mat::from_i64(&t, &[vec![1], vec![1]]).embed(&l)).unwrap();
        assert!(is_diagonally_stable(&g, &act, &setup).unwrap());
    }

    #[test]
    fn descent_on_a_line() {
        let t = q2();
        let l = fixtures::sqrt2_extension(1, 64).unwrap();
        let triv = GroupAction {
            group: groups::cyclic(2).with_names(vec!["1".into(), "-1".into()]),
            rho: vec![Mat::identity(&t, 1); 2],
        };
        let setup = GaloisSetup::new(&triv.group, &l, None).unwrap();
        let w = galois_descend(&triv, &setup, &Mat::identity(&l, 1)).unwrap();
        assert!(w.get(0, 0).is_base());
        let sign = GroupAction::sign(&t, 1);
        let w = galois_descend(&sign, &setup, &Mat::identity(&l, 1)).unwrap();
        // invariants are √2·K
        assert!(!w.get(0, 0).is_base());
        assert!(w.get(0, 0).mul(w.get(0, 0)).is_base());
    }

    #[test]
    fn descent_with_swap() {
        let t = q2();
        let l = fixtures::sqrt2_extension(1, 64).unwrap();
        let swap = Mat::from_i64(&t, &[vec![0, 1], vec![1, 0]]);
        let act = GroupAction::new(
            groups::cyclic(2).with_names(vec!["1".into(), "-1".into()]),
            vec![Mat::identity(&t, 2), swap.clone()],
        )
        .unwrap();
        let setup = GaloisSetup::new(&act.group, &l, None).unwrap();
        let w = galois_descend(&act, &setup, &Mat::identity(&l, 2)).unwrap();
        assert_eq!(w.rank().unwrap(), 2);
        for g in 0..2 {
            assert!(act.rho[g].embed(&l).mul(&w).agrees(&setup.gal(&w, g)));
        }
        // a stable line is the span of its own invariant vector
        let f = Filtration::new(w.col_mat(0)).unwrap();
        assert!(is_diagonally_stable(&f, &act, &setup).unwrap());
        let back = galois_descend(&act, &setup, f.basis()).unwrap();
        assert!(back.same_span(f.basis()).unwrap());
    }

    #[test]
    fn descended_twist_keeps_slopes_and_admissibility() {
        let t = q2();
        let l = fixtures::sqrt2_extension(1, 64).unwrap();
        let pol = PolarizedPhiModule::new(fixtures::supersingular_plane(&t).unwrap(), fixtures::lambda0(&t, 1)).unwrap();
        let act = GroupAction::sign(&t, 2);
        let setup = GaloisSetup::new(&act.group, &l, None).unwrap();
        let problem = EadmProblem::new(SemiAbelianPhiModule::abelian(pol.clone()), act.clone(), setup.clone()).unwrap();
        let out = find_admissible_stable_filtration(&problem, &SearchOptions { seed: 3, ..Default::default() }).unwrap();
        let d = descend_filtered(&pol.module, Some(&pol.j), &act, &setup, Some(&out.filtration)).unwrap();
        assert_eq!(d.module.newton_slopes().unwrap().display(), "1/2 ×2");
        let fk = Filtration::new(d.filtration.unwrap()).unwrap();
        assert!(is_admissible(&d.module, &fk, SubmoduleMode::Exact, 0, 0).unwrap().admissible);
        let jk = d.polarization.unwrap();
        assert!(fk.basis().transpose().mul(&jk).mul(fk.basis()).is_zero());
    }

    #[test]
    fn correspondence_must_match_the_group() {
        let l = fixtures::cyclic4_extension(2, 40, ["1", "k", "-1", "-k"]).unwrap();
        let act = fixtures::k_diagonal_action(&Tower::unramified(2, 2, 40).unwrap(), 1).unwrap();
        assert!(GaloisSetup::new(&act.group, &l, None).is_ok());
        let wrong: Vec<(String, String)> = [("1", "1"), ("k", "-1"), ("-1", "k"), ("-k", "-k")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert!(GaloisSetup::new(&act.group, &l, Some(&wrong)).is_err());
    }

    #[test]
    fn two_slope_pieces() {
        let t = q2();
        let d = ordinary(&t);
        let pieces = decompose_for_eadm(&d, &GroupAction::trivial(&t, 2)).unwrap();
        assert_eq!(pieces.len(), 1);
        let setup = GaloisSetup::trivial(&t);
        let mut rng = sampling::rng(1);
        let (f, _) = two_slope_filtration(&pieces[0], &setup, &mut rng, 50).unwrap();
        let f = Filtration::new(pieces[0].basis.mul(&f)).unwrap();
        assert!(is_admissible(&d.module, &f, SubmoduleMode::Exact, 0, 0).unwrap().admissible);

        // diag(1,1,p,p) with J pairing the slope blocks
        let m = PhiModule::new(&t, Mat::from_i64(&t, &[vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 2, 0], vec![0, 0, 0, 2]])).unwrap();
        let j = Mat::from_i64(&t, &[vec![0, 0, 1, 0], vec![0, 0, 0, 1], vec![-1, 0, 0, 0], vec![0, -1, 0, 0]]);
        let pol = PolarizedPhiModule::new(m, j).unwrap();
        let pieces = decompose_for_eadm(&pol, &GroupAction::trivial(&t, 4)).unwrap();
        assert_eq!(pieces.len(), 1);
        let (f, _) = two_slope_filtration(&pieces[0], &setup, &mut rng, 50).unwrap();
        assert_eq!(f.cols(), 2);
        let f = Filtration::new(pieces[0].basis.mul(&f)).unwrap();
        assert!(is_admissible(&pol.module, &f, SubmoduleMode::Sampled, 3, 40).unwrap().admissible);
    }

    #[test]
    fn decomposition_splits_slope_pairs() {
        let t = q2();
        let ord = PhiModule::new(&t, Mat::from_i64(&t, &[vec![1, 0], vec![0, -2]])).unwrap();
        let ord = PolarizedPhiModule::new(ord, fixtures::lambda0(&t, 1)).unwrap();
        let ss = PolarizedPhiModule::new(fixtures::supersingular_plane(&t).unwrap(), fixtures::lambda0(&t, 1)).unwrap();
        let d = PolarizedPhiModule::direct_sum(&[ord, ss]).unwrap();
        let pieces = decompose_for_eadm(&d, &GroupAction::trivial(&t, 4)).unwrap();
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces.iter().filter(|p| p.is_supersingular()).count(), 1);
        for p in &pieces {
            assert_eq!(p.dim(), 2);
        }
    }

    #[test]
    fn supersingular_with_signs() {
        let t = q2();
        let l = fixtures::sqrt2_extension(1, 64).unwrap();
        let pol = fixtures::supersingular_power(&t, 1).unwrap();
        let act = GroupAction::sign(&t, 2);
        let setup = GaloisSetup::new(&act.group, &l, None).unwrap();
        let pieces = decompose_for_eadm(&pol, &act).unwrap();
        let mut rng = sampling::rng(5);
        let (f, branch, _) = supersingular_filtration(&pieces[0], &setup, &mut rng, 50).unwrap();
        assert!(matches!(branch, SupersingularBranch::HomothetyAction));
        let f = Filtration::new(f).unwrap();
        assert!(is_diagonally_stable(&f, &act, &setup).unwrap());
    }

    #[test]
    fn supersingular_with_k() {
        let k = Tower::unramified(2, 2, 64).unwrap();
        let l = fixtures::cyclic4_extension(2, 64, ["1", "k", "-1", "-k"]).unwrap();
        for g in [1, 2] {
            let pol = fixtures::supersingular_power(&k, g).unwrap();
            let act = fixtures::k_diagonal_action(&k, g).unwrap();
            let setup = GaloisSetup::new(&act.group, &l, None).unwrap();
            let pieces = decompose_for_eadm(&pol, &act).unwrap();
            assert_eq!(pieces.len(), 1);
            let mut rng = sampling::rng(11);
            let (f, branch, _) = supersingular_filtration(&pieces[0], &setup, &mut rng, 50).unwrap();
            let SupersingularBranch::Perturbateur { witness, .. } = branch else {
                panic!("expected a perturbateur")
            };
            assert!(witness.unwrap().intersection_dim <= 1);
            let h = act.rho[act.group.index_of("k").unwrap()].embed(&l);
            assert!(f.intersection_dim(&h.mul(&f)).unwrap() <= 1);
            let f = Filtration::new(f).unwrap();
            assert!(is_diagonally_stable(&f, &act, &setup).unwrap());
            assert!(SymplecticSpace::new(pol.j.embed(&l)).unwrap().is_lagrangian(f.basis()).unwrap());
        }
    }

    #[test]
    fn torus_only_takes_everything() {
        let t = q2();
        let l = fixtures::sqrt2_extension(1, 64).unwrap();
        let m = PhiModule::new(&t, Mat::from_i64(&t, &[vec![2, 0], vec![0, 2]])).unwrap();
        let sa = SemiAbelianPhiModule::new(m, Mat::identity(&t, 2), Mat::zeros(&t, 0, 0), None).unwrap();
        let act = GroupAction::sign(&t, 2);
        let setup = GaloisSetup::new(&act.group, &l, None).unwrap();
        let prob = EadmProblem::new(sa, act, setup).unwrap();
        let out = find_admissible_stable_filtration(
            &prob,
            &SearchOptions {
                mode: SubmoduleMode::Exact,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.filtration.dim(), 2);
        assert!(out.verification.ok());
    }

    #[test]
    fn semi_abelian_pullback() {
        let t = q2();
        let m = PhiModule::new(&t, Mat::from_i64(&t, &[vec![2, 0, 0], vec![0, 1, 0], vec![0, 0, 2]])).unwrap();
        let toric = Mat::from_i64(&t, &[vec![1], vec![0], vec![0]]);
        let sa = SemiAbelianPhiModule::new(m.clone(), toric.clone(), fixtures::lambda0(&t, 1), None).unwrap();
        let prob = EadmProblem::new(sa, GroupAction::trivial(&t, 3), GaloisSetup::trivial(&t)).unwrap();
        let opts = SearchOptions {
            mode: SubmoduleMode::Exact,
            seed: 3,
            ..Default::default()
        };
        let out = find_admissible_stable_filtration(&prob, &opts).unwrap();
        assert_eq!(out.filtration.dim(), 2);
        assert!(toric.span_contained_in(out.filtration.basis()).unwrap());
        // the pullback is admissible on the whole module as well
        assert!(is_admissible(&m, &out.filtration, SubmoduleMode::Sampled, 1, 30).unwrap().admissible);
        // tampering is detected
        let bad = Filtration::new(Mat::from_i64(&t, &[vec![1, 0], vec![0, 1], vec![0, 0]])).unwrap();
        let v = prob.verify(&bad, &out.datum, &opts).unwrap();
        assert!(v.failures.iter().any(|f| f.contains("admissibility")));
    }

    #[test]
    fn cocycle_law_of_the_datum() {
        let k = Tower::unramified(2, 2, 48).unwrap();
        let l = fixtures::cyclic4_extension(2, 48, ["1", "k", "-1", "-k"]).unwrap();
        let act = fixtures::k_diagonal_action(&k, 1).unwrap();
        let setup = GaloisSetup::new(&act.group, &l, None).unwrap();
        let mut datum = DescentDatum::from_action(&act, &setup);
        assert!(datum.check_cocycle(&setup).unwrap());
        datum.maps[1].1 = datum.maps[1].1.neg();
        assert!(!datum.check_cocycle(&setup).unwrap());
    }
}
