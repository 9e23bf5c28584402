//! Certificates for `filtration find` and their re-verification.

use std::collections::BTreeMap;

use isocrys::filtration::{find_admissible_stable_filtration, DescentDatum, EadmOutcome, EadmProblem, Filtration, GaloisSetup, SearchOptions};
use isocrys::grouprep::action::GroupAction;
use isocrys::io::{self, FieldDoc, GroupDoc, ModuleDoc};
use isocrys::isocrystal::SubmoduleMode;
use isocrys::padic::matrix::with_escalation;
use isocrys::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::Failure;

pub const FORMAT: &str = "isocrys-certificate";
pub const VERSION: u32 = 1;

pub fn sha256_hex(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// An input document with the digest of its canonical form.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Embedded<T> {
    pub sha256: String,
    pub document: T,
}

impl<T: Serialize> Embedded<T> {
    pub fn new(document: T) -> Result<Embedded<T>> {
        Ok(Embedded {
            sha256: sha256_hex(&io::canonical_json(&document)?),
            document,
        })
    }

    pub fn digest_matches(&self) -> Result<bool> {
        Ok(sha256_hex(&io::canonical_json(&self.document)?) == self.sha256)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub module: Embedded<ModuleDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Embedded<GroupDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<Embedded<FieldDoc>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub seed: u64,
    pub mode: String,
    pub budget: usize,
    /// Starting precision.
    pub precision: u32,
    pub relaxed: bool,
}

impl Params {
    pub fn options(&self) -> std::result::Result<SearchOptions, Failure> {
        let mode = match self.mode.as_str() {
            "exact" => SubmoduleMode::Exact,
            "sampled" => SubmoduleMode::Sampled,
            m => return Err(Failure::Usage(format!("unknown mode {m:?}"))),
        };
        Ok(SearchOptions {
            mode,
            seed: self.seed,
            budget: self.budget,
            relaxed: self.relaxed,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Outcome {
    /// Precision at which the search succeeded.
    pub precision: u32,
    /// Basis vectors of `F` over `L`.
    pub filtration: Vec<Vec<Value>>,
    pub pieces: Value,
    /// `f_γ` per automorphism name, rows over `K`.
    pub descent_datum: BTreeMap<String, Vec<Vec<Value>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub format: String,
    pub version: u32,
    pub operation: String,
    /// Seconds since the epoch; excluded from the digest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<u64>,
    pub inputs: Inputs,
    pub params: Params,
    pub outcome: Outcome,
    pub verification: Value,
    /// Digest of the certificate without `created` and `digest`.
    pub digest: String,
}

impl Certificate {
    pub fn compute_digest(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::invalid(e.to_string()))?;
        if let Value::Object(m) = &mut v {
            m.remove("created");
            m.remove("digest");
        }
        Ok(sha256_hex(&v.to_string()))
    }

    pub fn source(&self) -> ProblemSource {
        ProblemSource {
            module: self.inputs.module.document.clone(),
            group: self.inputs.group.as_ref().map(|g| g.document.clone()),
            extension: self.inputs.extension.as_ref().map(|e| e.document.clone()),
        }
    }
}

/// Input documents of an EAdm problem.
#[derive(Clone, Debug)]
pub struct ProblemSource {
    pub module: ModuleDoc,
    pub group: Option<GroupDoc>,
    pub extension: Option<FieldDoc>,
}

impl ProblemSource {
    fn extension_doc(&self) -> Option<FieldDoc> {
        self.extension.clone().or_else(|| self.group.as_ref().and_then(|g| g.field.clone()))
    }

    /// Module, action and Galois setup at precision `prec`.
    pub fn build(&self, prec: u32) -> Result<EadmProblem> {
        let loaded = self.module.with_precision(prec).build()?;
        let semi = loaded.semi.ok_or_else(|| Error::invalid("module needs a polarization"))?;
        let k = loaded.field;
        let n = semi.module.dim();
        let ext = self.extension_doc().map(|e| e.with_precision(prec));
        let (action, galois) = match &self.group {
            None => {
                if ext.as_ref().is_some_and(|e| e.eisenstein.is_some()) {
                    return Err(Error::invalid("a ramified extension needs a group document"));
                }
                (GroupAction::trivial(&k, n), GaloisSetup::trivial(&k))
            }
            Some(g) => {
                let act = g.action(&k)?;
                let l = match &ext {
                    Some(e) => e.extension_over(&k)?,
                    None => k.clone(),
                };
                let setup = if l.e == 1 {
                    if act.group.order() != 1 {
                        return Err(Error::invalid("a nontrivial group needs an extension L/K with that Galois group"));
                    }
                    GaloisSetup::trivial(&k)
                } else {
                    GaloisSetup::new(&act.group, &l, g.correspondence_pairs().as_deref())?
                };
                (act, setup)
            }
        };
        EadmProblem::new(semi, action, galois)
    }

    pub fn start_precision(&self, requested: Option<u32>) -> u32 {
        requested.unwrap_or(self.module.field.precision)
    }
}

fn datum_record(d: &DescentDatum) -> BTreeMap<String, Vec<Vec<Value>>> {
    d.maps.iter().map(|(n, m)| (n.clone(), io::mat_to_rows(m))).collect()
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::invalid(e.to_string()))
}

fn outcome_record(prec: u32, out: &EadmOutcome) -> Result<Outcome> {
    Ok(Outcome {
        precision: prec,
        filtration: io::mat_to_columns(out.filtration.basis()),
        pieces: to_value(&out.pieces)?,
        descent_datum: datum_record(&out.datum),
    })
}

/// Runs the search with precision escalation.
pub fn search(source: &ProblemSource, opts: &SearchOptions, start: u32) -> Result<(u32, EadmOutcome)> {
    with_escalation(start, |prec| {
        let problem = source.build(prec)?;
        Ok((prec, find_admissible_stable_filtration(&problem, opts)?))
    })
}

pub fn find(source: ProblemSource, params: Params, created: Option<u64>) -> std::result::Result<Certificate, Failure> {
    let opts = params.options()?;
    let (prec, out) = search(&source, &opts, params.precision)?;
    let inputs = Inputs {
        module: Embedded::new(source.module)?,
        group: source.group.map(Embedded::new).transpose()?,
        extension: source.extension.map(Embedded::new).transpose()?,
    };
    let mut cert = Certificate {
        format: FORMAT.into(),
        version: VERSION,
        operation: "filtration find".into(),
        created,
        inputs,
        params,
        outcome: outcome_record(prec, &out)?,
        verification: to_value(&out.verification)?,
        digest: String::new(),
    };
    cert.digest = cert.compute_digest()?;
    Ok(cert)
}

#[derive(Clone, Debug, Serialize)]
pub struct Step {
    pub name: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckReport {
    pub steps: Vec<Step>,
}

impl CheckReport {
    fn push(&mut self, name: &str, ok: bool, detail: impl Into<String>) -> bool {
        self.steps.push(Step {
            name: name.into(),
            ok,
            detail: detail.into(),
        });
        ok
    }

    pub fn ok(&self) -> bool {
        self.steps.iter().all(|s| s.ok)
    }

    /// First violated property.
    pub fn failure(&self) -> Option<Failure> {
        self.steps
            .iter()
            .find(|s| !s.ok)
            .map(|s| Failure::verification(s.name.clone(), s.detail.clone()))
    }
}

/// Filtration and datum from the record, over `L` and `K` of `problem`.
pub fn recorded_solution(problem: &EadmProblem, outcome: &Outcome) -> Result<(Filtration, DescentDatum)> {
    let l = problem.galois.field();
    let k = problem.module.module.field();
    let n = problem.module.module.dim();
    let f = io::mat_from_columns(l, n, &outcome.filtration, "outcome.filtration")?;
    let mut maps = Vec::new();
    for (name, rows) in &outcome.descent_datum {
        let m = io::mat_from_rows(k, rows, &format!("outcome.descent_datum.{name}"))?;
        if !m.is_square() || m.rows() != n {
            return Err(Error::invalid(format!("at outcome.descent_datum.{name}: expected a {n}×{n} matrix")));
        }
        maps.push((name.clone(), m));
    }
    Ok((Filtration::new(f)?, DescentDatum { maps }))
}

/// Re-verifies every recorded verdict; stops at the first failing step.
pub fn check(cert: &Certificate) -> std::result::Result<CheckReport, Failure> {
    if cert.format != FORMAT || cert.version != VERSION {
        return Err(Failure::Usage(format!("not a version-{VERSION} {FORMAT} document")));
    }
    let mut rep = CheckReport::default();
    let mut digests = vec![("module", cert.inputs.module.digest_matches()?)];
    if let Some(g) = &cert.inputs.group {
        digests.push(("group", g.digest_matches()?));
    }
    if let Some(e) = &cert.inputs.extension {
        digests.push(("extension", e.digest_matches()?));
    }
    for (what, ok) in digests {
        if !rep.push(&format!("input digest ({what})"), ok, "") {
            return Ok(rep);
        }
    }
    let opts = cert.params.options()?;
    let prec = cert.outcome.precision;
    let problem = cert.source().build(prec)?;
    let (f, datum) = match recorded_solution(&problem, &cert.outcome) {
        Ok(x) => x,
        Err(e) if e.is_precision() => return Err(e.into()),
        Err(e) => {
            rep.push("filtration record", false, e.to_string());
            return Ok(rep);
        }
    };
    let verification = problem.verify(&f, &datum, &opts)?;
    if !rep.push("re-verification", verification.ok(), verification.failures.join(", ")) {
        let first = verification.failures.first().cloned().unwrap_or_default();
        rep.steps.last_mut().unwrap().name = first;
        return Ok(rep);
    }
    if !rep.push(
        "verification record",
        to_value(&verification)? == cert.verification,
        "recorded verdicts differ from the recomputed ones",
    ) {
        return Ok(rep);
    }
    let replay = find_admissible_stable_filtration(&problem, &opts)?;
    let again = outcome_record(prec, &replay)?;
    let same = again == cert.outcome;
    if !rep.push("replay of the search", same, "the seeded search produced a different outcome") {
        return Ok(rep);
    }
    rep.push("certificate digest", cert.compute_digest()? == cert.digest, "");
    Ok(rep)
}
