//! JSON documents for fields, φ-modules and group actions.
//!
//! A scalar is one of
//! * a rational string `"a/b"`, `"-3"`, or an integer number;
//! * a digit document `{"v": v, "digits": [d0, d1, ...]}` meaning
//!   `p^v (d0 + d1 p + ...)` known to `v + len(digits)` digits;
//! * an array of such values: coordinates in the tower basis, of length `f`
//!   (unramified level) or `f·e` (blocks of `f` per power of the uniformizer).
//!
//! `"0"` is an exact zero, `{"v": a, "digits": []}` a zero known to `p^a`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grouprep::action::GroupAction;
use crate::grouprep::group::FiniteGroup;
use crate::isocrystal::{PhiModule, PolarizedPhiModule, SemiAbelianPhiModule};
use crate::padic::teich::teichmuller_modulus;
use crate::padic::{Elem, Mat, Qp, Tower};

/// Parses a typed document; syntax and shape errors carry line and column.
pub fn parse<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.strip_suffix(&format!(" at line {} column {}", e.line(), e.column())).unwrap_or(&msg);
        Error::invalid(format!("{what}: line {}, column {}: {msg}", e.line(), e.column()))
    })
}

fn at(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::invalid(format!("at {path}: {msg}"))
}

fn parse_rational(s: &str, path: &str) -> Result<BigRational> {
    let s = s.trim();
    let q = if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| at(path, format!("bad numerator in {s:?}")))?;
        let d: BigInt = d.trim().parse().map_err(|_| at(path, format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(at(path, "zero denominator"));
        }
        BigRational::new(n, d)
    } else {
        BigRational::from_integer(s.parse().map_err(|_| at(path, format!("not a rational: {s:?}")))?)
    };
    Ok(q)
}

/// One `Q_p` coordinate.
pub fn qp_from_value(p: u32, cap: u32, v: &Value, path: &str) -> Result<Qp> {
    match v {
        Value::String(s) => Ok(Qp::from_rational(p, &parse_rational(s, path)?, cap)),
        Value::Number(n) => {
            let n = n.as_i64().ok_or_else(|| at(path, "numbers must be integers; write rationals as strings"))?;
            Ok(Qp::from_i64(p, n, cap))
        }
        Value::Object(o) => {
            let val = o
                .get("v")
                .and_then(Value::as_i64)
                .ok_or_else(|| at(path, "digit document needs an integer \"v\""))?;
            let ds = o
                .get("digits")
                .and_then(Value::as_array)
                .ok_or_else(|| at(path, "digit document needs a \"digits\" array"))?;
            if let Some(k) = o.keys().find(|k| *k != "v" && *k != "digits") {
                return Err(at(path, format!("unknown key {k:?}")));
            }
            let mut digits = Vec::with_capacity(ds.len());
            for (i, d) in ds.iter().enumerate() {
                let d = d
                    .as_u64()
                    .filter(|&d| d < p as u64)
                    .ok_or_else(|| at(&format!("{path}.digits[{i}]"), format!("digit must lie in 0..{p}")))?;
                digits.push(d as u32);
            }
            Ok(Qp::from_digits(p, val, &digits))
        }
        _ => Err(at(path, "expected a rational string, an integer or a digit document")),
    }
}

pub fn qp_to_value(q: &Qp) -> Value {
    if q.is_exact_zero() {
        return json!("0");
    }
    match q.valuation() {
        Some(v) => json!({"v": v, "digits": q.digits()}),
        None => json!({"v": q.abs_prec().unwrap_or(0), "digits": []}),
    }
}

/// Scalar of the tower `t`.
pub fn elem_from_value(t: &Arc<Tower>, v: &Value, path: &str) -> Result<Elem> {
    match v {
        Value::Array(a) => {
            let mut c = Vec::with_capacity(a.len());
            for (i, x) in a.iter().enumerate() {
                if x.is_array() {
                    return Err(at(&format!("{path}[{i}]"), "coordinates must be scalars"));
                }
                c.push(qp_from_value(t.p, t.prec, x, &format!("{path}[{i}]"))?);
            }
            if c.len() == t.f {
                Ok(Elem::from_base_coords(t, c))
            } else if c.len() == t.f * t.e {
                Ok(Elem::from_coords(t, c))
            } else {
                Err(at(path, format!("expected {} or {} coordinates, found {}", t.f, t.f * t.e, c.len())))
            }
        }
        _ => Ok(Elem::from_qp(t, qp_from_value(t.p, t.prec, v, path)?)),
    }
}

/// Exact serialization: every coordinate as a digit document.
pub fn elem_to_value(x: &Elem) -> Value {
    let c = x.coords();
    if c.len() == 1 {
        qp_to_value(&c[0])
    } else {
        Value::Array(c.iter().map(qp_to_value).collect())
    }
}

/// Readable serialization: small rationals as strings when they reproduce
/// the element, digit documents otherwise.
pub fn elem_to_value_readable(x: &Elem) -> Value {
    if x.is_exact_zero() {
        return json!("0");
    }
    let bound = BigInt::from(1i64 << 30);
    if let Some(q) = x.to_rational() {
        if q.numer().abs() < bound && q.denom() < &bound && Elem::from_rational(x.tower(), &q).agrees(x) && !x.is_inexact_zero() {
            let back = Elem::from_rational(x.tower(), &q);
            if back.coords()[0].rel_prec() == x.coords()[0].rel_prec() {
                return json!(crate::isocrystal::rational_to_string(&q));
            }
        }
    }
    if x.coords().len() == 1 {
        return qp_to_value(&x.coords()[0]);
    }
    Value::Array(
        x.coords()
            .iter()
            .map(|q| {
                let e = Elem::from_qp(&Tower::unramified(x.tower().p, 1, x.tower().prec).expect("prime checked"), q.clone());
                elem_to_value_readable(&e)
            })
            .collect(),
    )
}

/// Matrix from a list of rows.
pub fn mat_from_rows(t: &Arc<Tower>, rows: &[Vec<Value>], path: &str) -> Result<Mat> {
    let n = rows.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(at(&format!("{path}[{i}]"), format!("row has {} entries, expected {n}", r.len())));
        }
        out.push(
            r.iter()
                .enumerate()
                .map(|(j, v)| elem_from_value(t, v, &format!("{path}[{i}][{j}]")))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(Mat::from_rows(t, out))
}

/// Matrix whose columns are the listed vectors.
pub fn mat_from_columns(t: &Arc<Tower>, n: usize, cols: &[Vec<Value>], path: &str) -> Result<Mat> {
    let mut out = Vec::with_capacity(cols.len());
    for (j, c) in cols.iter().enumerate() {
        if c.len() != n {
            return Err(at(&format!("{path}[{j}]"), format!("vector has {} entries, expected {n}", c.len())));
        }
        out.push(
            c.iter()
                .enumerate()
                .map(|(i, v)| elem_from_value(t, v, &format!("{path}[{j}][{i}]")))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(Mat::from_cols(t, n, &out))
}

pub fn mat_to_rows(m: &Mat) -> Vec<Vec<Value>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(elem_to_value).collect()).collect()
}

pub fn mat_to_rows_readable(m: &Mat) -> Vec<Vec<Value>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(elem_to_value_readable).collect()).collect()
}

pub fn mat_to_columns(m: &Mat) -> Vec<Vec<Value>> {
    (0..m.cols()).map(|j| m.col(j).iter().map(elem_to_value).collect()).collect()
}

pub fn mat_to_columns_readable(m: &Mat) -> Vec<Vec<Value>> {
    (0..m.cols()).map(|j| m.col(j).iter().map(elem_to_value_readable).collect()).collect()
}

fn int_value(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(x) if x.unsigned_abs() < (1u64 << 53) => json!(x),
        _ => json!(n.to_string()),
    }
}

fn int_from_value(v: &Value, path: &str) -> Result<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from).ok_or_else(|| at(path, "expected an integer")),
        Value::String(s) => s.trim().parse().map_err(|_| at(path, format!("not an integer: {s:?}"))),
        _ => Err(at(path, "expected an integer")),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EisensteinDoc {
    /// Non-leading coefficients, constant term first.
    pub coeffs: Vec<Value>,
    /// Images of the uniformizer as polynomials in `u`, constant term first.
    #[serde(default)]
    pub automorphisms: BTreeMap<String, Vec<Value>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldDoc {
    pub p: u32,
    pub f: usize,
    /// Working precision in digits of `p`.
    pub precision: u32,
    /// Monic modulus, constant term first; the Teichmüller modulus when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eisenstein: Option<EisensteinDoc>,
}

impl FieldDoc {
    pub fn with_precision(&self, prec: u32) -> FieldDoc {
        FieldDoc {
            precision: prec,
            ..self.clone()
        }
    }

    /// The unramified level.
    pub fn base_tower(&self) -> Result<Arc<Tower>> {
        match &self.modulus {
            None => Tower::unramified(self.p, self.f, self.precision),
            Some(m) => {
                let m = m
                    .iter()
                    .enumerate()
                    .map(|(i, v)| int_from_value(v, &format!("field.modulus[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                Tower::with_modulus(self.p, self.f, self.precision, &m)
            }
        }
    }

    /// The full tower: the unramified level, or its Eisenstein extension.
    pub fn tower(&self) -> Result<Arc<Tower>> {
        let k = self.base_tower()?;
        self.extension_over(&k)
    }

    /// The extension described here, built over an already constructed
    /// unramified level, which must match.
    pub fn extension_over(&self, k: &Arc<Tower>) -> Result<Arc<Tower>> {
        let mine = self.base_tower()?;
        if !mine.same_base(k) {
            return Err(Error::FieldIncompatibility(format!(
                "extension over Q_{}^(f={}) at precision {} does not sit over the module's level Q_{}^(f={}) at precision {}",
                self.p, self.f, self.precision, k.p, k.f, k.prec
            )));
        }
        let Some(eis) = &self.eisenstein else { return Ok(k.clone()) };
        let coeffs = eis
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, v)| elem_from_value(k, v, &format!("eisenstein.coeffs[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let mut autos = Vec::new();
        for (name, poly) in &eis.automorphisms {
            let c = poly
                .iter()
                .enumerate()
                .map(|(i, v)| elem_from_value(k, v, &format!("eisenstein.automorphisms.{name}[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            autos.push((name.clone(), c));
        }
        Tower::eisenstein(k, &coeffs, &autos)
    }

    pub fn from_tower(t: &Arc<Tower>) -> FieldDoc {
        let teich = teichmuller_modulus(t.p, t.f, t.prec);
        let modulus = (teich.as_slice() != t.modulus_int()).then(|| t.modulus_int().iter().map(int_value).collect());
        let eisenstein = (t.e > 1).then(|| EisensteinDoc {
            coeffs: t.eisenstein_coeffs().iter().map(elem_to_value_readable).collect(),
            automorphisms: (0..t.autos().len())
                .map(|i| (t.autos()[i].name.clone(), t.auto_polynomial(i).iter().map(elem_to_value_readable).collect()))
                .collect(),
        });
        FieldDoc {
            p: t.p,
            f: t.f,
            precision: t.prec,
            modulus,
            eisenstein,
        }
    }
}

/// A φ-module `(K^n, A σ)`, optionally polarized, optionally with a toric part.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModuleDoc {
    pub field: FieldDoc,
    /// Rows of `A`: `φ(x) = A σ(x)`.
    pub frobenius: Vec<Vec<Value>>,
    /// Alternating Gram matrix; on the quotient by the toric part when one is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarization: Option<Vec<Vec<Value>>>,
    /// Basis vectors of the pure slope-1 part.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toric_sub: Option<Vec<Vec<Value>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toric_pairing: Option<Vec<Vec<Value>>>,
}

/// Objects built from a [`ModuleDoc`].
#[derive(Clone, Debug)]
pub struct LoadedModule {
    pub field: Arc<Tower>,
    pub module: PhiModule,
    /// Present when a polarization or toric part is given.
    pub semi: Option<SemiAbelianPhiModule>,
}

impl LoadedModule {
    pub fn polarized(&self) -> Option<&PolarizedPhiModule> {
        self.semi.as_ref().filter(|s| s.toric_dim() == 0).and_then(|s| s.quotient.as_ref())
    }
}

impl ModuleDoc {
    pub fn with_precision(&self, prec: u32) -> ModuleDoc {
        ModuleDoc {
            field: self.field.with_precision(prec),
            ..self.clone()
        }
    }

    pub fn build(&self) -> Result<LoadedModule> {
        if self.field.eisenstein.is_some() {
            return Err(Error::invalid(
                "at field: φ-modules live over an unramified level; give the extension separately",
            ));
        }
        let t = self.field.base_tower()?;
        let a = mat_from_rows(&t, &self.frobenius, "frobenius")?;
        if !a.is_square() || a.rows() == 0 {
            return Err(at("frobenius", "expected a non-empty square matrix"));
        }
        let n = a.rows();
        let module = PhiModule::new(&t, a).map_err(|e| at("frobenius", e))?;
        let semi = match (&self.toric_sub, &self.polarization) {
            (None, None) => None,
            (None, Some(j)) => {
                let j = mat_from_rows(&t, j, "polarization")?;
                Some(SemiAbelianPhiModule::abelian(
                    PolarizedPhiModule::new(module.clone(), j).map_err(|e| at("polarization", e))?,
                ))
            }
            (Some(ts), j) => {
                let toric = mat_from_columns(&t, n, ts, "toric_sub")?;
                let j = match j {
                    Some(j) => mat_from_rows(&t, j, "polarization")?,
                    None => Mat::zeros(&t, 0, 0),
                };
                let pairing = self.toric_pairing.as_ref().map(|m| mat_from_rows(&t, m, "toric_pairing")).transpose()?;
                Some(SemiAbelianPhiModule::new(module.clone(), toric, j, pairing).map_err(|e| at("toric_sub", e))?)
            }
        };
        Ok(LoadedModule { field: t, module, semi })
    }

    pub fn from_module(m: &PhiModule) -> ModuleDoc {
        ModuleDoc {
            field: FieldDoc::from_tower(m.field()),
            frobenius: mat_to_rows_readable(m.matrix()),
            polarization: None,
            toric_sub: None,
            toric_pairing: None,
        }
    }

    pub fn from_polarized(p: &PolarizedPhiModule) -> ModuleDoc {
        ModuleDoc {
            polarization: Some(mat_to_rows_readable(&p.j)),
            ..Self::from_module(&p.module)
        }
    }

    pub fn from_semi_abelian(s: &SemiAbelianPhiModule) -> ModuleDoc {
        if s.toric_dim() == 0 {
            if let Some(q) = &s.quotient {
                return Self::from_polarized(q);
            }
        }
        let t = s.module.field();
        let identity = Mat::identity(t, s.toric_dim());
        ModuleDoc {
            polarization: s.quotient.as_ref().map(|q| mat_to_rows_readable(&q.j)),
            toric_sub: Some(mat_to_columns_readable(&s.toric)),
            toric_pairing: (!s.toric_pairing.agrees(&identity)).then(|| mat_to_rows_readable(&s.toric_pairing)),
            ..Self::from_module(&s.module)
        }
    }
}

/// A finite group by its multiplication table with a matrix per element.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroupDoc {
    pub elements: Vec<String>,
    /// `table[a][b]` is the index of `a·b`.
    pub table: Vec<Vec<usize>>,
    /// Matrix of each element, keyed by name.
    pub rep: BTreeMap<String, Vec<Vec<Value>>>,
    /// Group element to automorphism name of the extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correspondence: Option<BTreeMap<String, String>>,
    /// Extension `L/K` the group acts through.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldDoc>,
}

impl GroupDoc {
    pub fn with_precision(&self, prec: u32) -> GroupDoc {
        GroupDoc {
            field: self.field.as_ref().map(|f| f.with_precision(prec)),
            ..self.clone()
        }
    }

    pub fn group(&self) -> Result<FiniteGroup> {
        let mut seen = std::collections::HashSet::new();
        for (i, e) in self.elements.iter().enumerate() {
            if !seen.insert(e) {
                return Err(at(&format!("elements[{i}]"), format!("duplicate name {e:?}")));
            }
        }
        if self.table.len() != self.elements.len() {
            return Err(at("table", format!("{} rows for {} elements", self.table.len(), self.elements.len())));
        }
        FiniteGroup::from_table(self.table.clone(), Some(self.elements.clone())).map_err(|e| at("table", e))
    }

    /// The action over the level `t`.
    pub fn action(&self, t: &Arc<Tower>) -> Result<GroupAction> {
        let g = self.group()?;
        if let Some(k) = self.rep.keys().find(|k| g.index_of(k).is_none()) {
            return Err(at(&format!("rep.{k}"), "not a group element"));
        }
        let mut rho = Vec::with_capacity(g.order());
        for x in 0..g.order() {
            let name = g.name(x);
            let m = self.rep.get(name).ok_or_else(|| at("rep", format!("missing matrix for {name:?}")))?;
            rho.push(mat_from_rows(t, m, &format!("rep.{name}"))?);
        }
        GroupAction::new(g, rho).map_err(|e| at("rep", e))
    }

    pub fn correspondence_pairs(&self) -> Option<Vec<(String, String)>> {
        self.correspondence.as_ref().map(|m| m.iter().map(|(a, b)| (a.clone(), b.clone())).collect())
    }

    pub fn from_action(act: &GroupAction, field: Option<&Arc<Tower>>, correspondence: Option<&[(String, String)]>) -> GroupDoc {
        let g = &act.group;
        GroupDoc {
            elements: g.names().to_vec(),
            table: g.table(),
            rep: (0..g.order()).map(|x| (g.name(x).to_string(), mat_to_rows_readable(&act.rho[x]))).collect(),
            correspondence: correspondence.map(|c| c.iter().cloned().collect()),
            field: field.map(FieldDoc::from_tower),
        }
    }
}

/// Compact canonical text of a document: object keys sorted, no whitespace.
pub fn canonical_json<T: Serialize>(doc: &T) -> Result<String> {
    let v = serde_json::to_value(doc).map_err(|e| Error::invalid(e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| Error::invalid(e.to_string()))
}
