use std::io::Write;
use std::path::Path;

use isocrys::bounds::{self, MinkowskiTable};
use isocrys::filtration::{decompose_for_eadm, descend_filtered, Filtration};
use isocrys::fixtures;
use isocrys::grouprep::action::{find_perturbateur, PerturbateurSearch};
use isocrys::grouprep::characters::CharacterTable;
use isocrys::io::{self, GroupDoc, ModuleDoc};
use isocrys::padic::matrix::with_escalation;
use isocrys::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::certificate::{self, Certificate, Params, ProblemSource};
use crate::{read, CmdResult, Command, Failure, FiltrationCommand, FindArgs, GroupCommand, Mode};

pub(crate) fn dispatch(cmd: Command, out: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Slopes { module, precision, out: o } => slopes(&module, precision, o.json, out),
        Command::Decompose {
            module,
            group,
            precision,
            out: o,
        } => decompose(&module, group.as_deref(), precision, o.json, out),
        Command::Filtration(FiltrationCommand::Find(args)) => find(args, out),
        Command::Filtration(FiltrationCommand::Check { certificate, out: o }) => check(&certificate, o.json, out),
        Command::Descend {
            certificate,
            module,
            group,
            extension,
            out: o,
        } => {
            let (source, f) = match certificate {
                Some(c) => {
                    let cert = load_certificate(&c)?;
                    (cert.source(), Some(cert))
                }
                None => (
                    ProblemSource {
                        module: load_module(module.as_deref().expect("required by the parser"))?,
                        group: group.as_deref().map(load_group).transpose()?,
                        extension: extension.as_deref().map(load_field).transpose()?,
                    },
                    None,
                ),
            };
            descend(&source, f.as_ref(), o.json, out)
        }
        Command::Group(GroupCommand::Check { group, module, out: o }) => group_check(&group, module.as_deref(), o.json, out),
        Command::Minkowski { n, table, out: o } => minkowski(n, table, o.json, out),
        Command::WreathDemo { g, precision, out: o } => wreath(g, precision, o.json, out),
        Command::Degree { local, out: o } => degree(&local, o.json, out),
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, v: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn load_module(path: &Path) -> Result<ModuleDoc, Failure> {
    Ok(io::parse(&read(path)?, &path.display().to_string())?)
}

fn load_group(path: &Path) -> Result<GroupDoc, Failure> {
    Ok(io::parse(&read(path)?, &path.display().to_string())?)
}

fn load_field(path: &Path) -> Result<io::FieldDoc, Failure> {
    Ok(io::parse(&read(path)?, &path.display().to_string())?)
}

fn load_certificate(path: &Path) -> Result<Certificate, Failure> {
    Ok(io::parse(&read(path)?, &path.display().to_string())?)
}

fn compact(v: &[Value]) -> String {
    serde_json::to_string(v).unwrap_or_default()
}

fn slopes(path: &Path, precision: Option<u32>, json: bool, out: &mut dyn Write) -> CmdResult {
    let doc = load_module(path)?;
    let (prec, prof) = with_escalation(precision.unwrap_or(doc.field.precision), |prec| {
        let m = doc.with_precision(prec).build()?;
        Ok((prec, m.module.newton_slopes()?))
    })?;
    if json {
        print_json(out, &json!({"slopes": prof, "display": prof.display(), "dim": prof.dim(), "precision": prec}))
    } else {
        writeln!(out, "{}", prof.display())?;
        Ok(())
    }
}

fn decompose(path: &Path, group: Option<&Path>, precision: Option<u32>, json: bool, out: &mut dyn Write) -> CmdResult {
    let doc = load_module(path)?;
    let gdoc = group.map(load_group).transpose()?;
    let start = precision.unwrap_or(doc.field.precision);
    let report = with_escalation(start, |prec| {
        let m = doc.with_precision(prec).build()?;
        match &gdoc {
            None => {
                let comps = m.module.isoclinic_decompose()?;
                let items: Vec<Value> = comps
                    .iter()
                    .map(|c| json!({"slope": c.slope.to_string(), "dim": c.basis.cols(), "basis": io::mat_to_columns_readable(&c.basis)}))
                    .collect();
                Ok(json!({"precision": prec, "components": items}))
            }
            Some(g) => {
                let pol = m
                    .polarized()
                    .ok_or_else(|| Error::invalid("pieces under a group action need a polarized module without toric part"))?;
                let act = g.action(&m.field)?;
                act.check_phi(&pol.module)?;
                let pieces = decompose_for_eadm(pol, &act)?;
                let items: Vec<Value> = pieces
                    .iter()
                    .map(|p| json!({"slopes": p.slopes.display(), "dim": p.dim(), "characters": p.characters, "basis": io::mat_to_columns_readable(&p.basis)}))
                    .collect();
                Ok(json!({"precision": prec, "pieces": items}))
            }
        }
    })?;
    if json {
        return print_json(out, &report);
    }
    if let Some(comps) = report["components"].as_array() {
        for c in comps {
            writeln!(out, "slope {}: dim {}", c["slope"].as_str().unwrap_or(""), c["dim"])?;
            for v in c["basis"].as_array().into_iter().flatten() {
                writeln!(out, "  {}", compact(v.as_array().map(Vec::as_slice).unwrap_or(&[])))?;
            }
        }
    } else {
        for (i, p) in report["pieces"].as_array().into_iter().flatten().enumerate() {
            writeln!(
                out,
                "piece {i}: dim {}, slopes {}, characters {}",
                p["dim"],
                p["slopes"].as_str().unwrap_or(""),
                p["characters"]
            )?;
            for v in p["basis"].as_array().into_iter().flatten() {
                writeln!(out, "  {}", compact(v.as_array().map(Vec::as_slice).unwrap_or(&[])))?;
            }
        }
    }
    Ok(())
}

fn find(args: FindArgs, out: &mut dyn Write) -> CmdResult {
    let source = ProblemSource {
        module: load_module(&args.module)?,
        group: args.group.as_deref().map(load_group).transpose()?,
        extension: args.extension.as_deref().map(load_field).transpose()?,
    };
    let params = Params {
        seed: args.seed,
        mode: match args.mode {
            Mode::Exact => "exact",
            Mode::Sampled => "sampled",
        }
        .into(),
        budget: args.budget,
        precision: source.start_precision(args.precision),
        relaxed: args.relaxed,
    };
    let created = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).ok().map(|d| d.as_secs());
    let cert = certificate::find(source, params, created)?;
    let text = serde_json::to_string_pretty(&cert).map_err(|e| Failure::Usage(e.to_string()))?;
    match &args.out {
        Some(p) => {
            std::fs::write(p, format!("{text}\n"))?;
            writeln!(out, "certificate written to {}", p.display())?;
            writeln!(
                out,
                "dim F = {}, precision {}, digest {}",
                cert.outcome.filtration.len(),
                cert.outcome.precision,
                cert.digest
            )?;
        }
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn check(path: &Path, json: bool, out: &mut dyn Write) -> CmdResult {
    let cert = load_certificate(path)?;
    let rep = certificate::check(&cert)?;
    if json {
        print_json(out, &rep)?;
    } else {
        for s in &rep.steps {
            writeln!(out, "{} {}", if s.ok { "ok  " } else { "FAIL" }, s.name)?;
        }
    }
    match rep.failure() {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn descend(source: &ProblemSource, cert: Option<&Certificate>, json: bool, out: &mut dyn Write) -> CmdResult {
    let start = cert.map_or(source.module.field.precision, |c| c.outcome.precision);
    let doc = with_escalation(start, |prec| {
        let problem = source.build(prec)?;
        let f = match cert {
            Some(c) => Some(certificate::recorded_solution(&problem, &c.outcome)?.0),
            None => None,
        };
        let sa = &problem.module;
        let j = if sa.toric_dim() == 0 { sa.quotient.as_ref().map(|q| &q.j) } else { None };
        let d = descend_filtered(&sa.module, j, &problem.action, &problem.galois, f.as_ref())?;
        let mut mdoc = ModuleDoc::from_module(&d.module);
        mdoc.polarization = d.polarization.as_ref().map(io::mat_to_rows_readable);
        let slopes = d.module.newton_slopes()?;
        let mut v = json!({
            "module": mdoc,
            "invariant_basis": io::mat_to_columns(&d.basis),
            "slopes": slopes.display(),
        });
        if let Some(fk) = &d.filtration {
            v["filtration"] = json!(io::mat_to_columns_readable(fk));
            let rep = isocrys::filtration::is_admissible(&d.module, &Filtration::new(fk.clone())?, isocrys::isocrystal::SubmoduleMode::Sampled, 0, 50)?;
            v["admissible"] = json!(rep.admissible);
        }
        Ok(v)
    })?;
    if json {
        return print_json(out, &doc);
    }
    writeln!(out, "descended module over K: slopes {}", doc["slopes"].as_str().unwrap_or(""))?;
    writeln!(out, "frobenius:")?;
    for r in doc["module"]["frobenius"].as_array().into_iter().flatten() {
        writeln!(out, "  {}", compact(r.as_array().map(Vec::as_slice).unwrap_or(&[])))?;
    }
    if let Some(f) = doc["filtration"].as_array() {
        writeln!(out, "filtration (dim {}), admissible: {}", f.len(), doc["admissible"])?;
        for v in f {
            writeln!(out, "  {}", compact(v.as_array().map(Vec::as_slice).unwrap_or(&[])))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct GroupReport {
    order: usize,
    exponent: usize,
    classes: usize,
    abelian: bool,
    p_group: Option<(u64, u32)>,
    character_degrees: Vec<usize>,
    /// Per irreducible of degree ≥ 2: class representative or "homothety-action".
    perturbateurs: Vec<(usize, String)>,
    dim: usize,
    faithful: bool,
    action_perturbateur: Value,
    phi_compatible: Option<bool>,
    symplectic: Option<bool>,
}

fn group_check(path: &Path, module: Option<&Path>, json: bool, out: &mut dyn Write) -> CmdResult {
    let gdoc = load_group(path)?;
    let mdoc = module.map(load_module).transpose()?;
    let prec = mdoc.as_ref().map(|m| m.field.precision).or(gdoc.field.as_ref().map(|f| f.precision));
    let Some(prec) = prec else {
        return Err(Failure::Usage("the group document has no field; pass --module to fix the base field".into()));
    };
    let report = with_escalation(prec, |prec| {
        let (k, loaded) = match &mdoc {
            Some(m) => {
                let l = m.with_precision(prec).build()?;
                (l.field.clone(), Some(l))
            }
            None => (gdoc.field.as_ref().unwrap().with_precision(prec).base_tower()?, None),
        };
        let act = gdoc.action(&k)?;
        let g = &act.group;
        let table = CharacterTable::new(g)?;
        let mut perturbateurs = Vec::new();
        for (i, ch) in table.chars.iter().enumerate() {
            if ch.degree < 2 {
                continue;
            }
            let w = if table.is_homothety(i) {
                "homothety-action".to_string()
            } else {
                match table.find_perturbateur(i) {
                    Some(c) => g.name(table.classes[c][0]).to_string(),
                    None => "none".to_string(),
                }
            };
            perturbateurs.push((i, w));
        }
        let action_perturbateur = match find_perturbateur(&act) {
            Ok(PerturbateurSearch::Element(w)) => json!({"element": w.name, "eigenvalues": w.eigenvalues}),
            Ok(PerturbateurSearch::HomothetyAction) => json!("homothety-action"),
            Err(Error::InternalContradiction(_)) => Value::Null,
            Err(e) => return Err(e),
        };
        if let Some(l) = &loaded {
            if l.module.dim() != act.dim() {
                return Err(Error::invalid(format!("the action has dimension {}, the module {}", act.dim(), l.module.dim())));
            }
        }
        let phi_compatible = loaded.as_ref().map(|l| act.check_phi(&l.module).is_ok());
        let symplectic = loaded.as_ref().and_then(|l| l.polarized()).map(|p| act.check_symplectic(&p.j).is_ok());
        Ok(GroupReport {
            order: g.order(),
            exponent: g.exponent(),
            classes: table.classes.len(),
            abelian: g.is_abelian(),
            p_group: g.p_group(),
            character_degrees: table.chars.iter().map(|c| c.degree).collect(),
            perturbateurs,
            dim: act.dim(),
            faithful: act.is_faithful(),
            action_perturbateur,
            phi_compatible,
            symplectic,
        })
    })?;
    if json {
        print_json(out, &report)?;
    } else {
        writeln!(
            out,
            "group: order {}, exponent {}, {} classes, abelian: {}",
            report.order, report.exponent, report.classes, report.abelian
        )?;
        if let Some((p, k)) = report.p_group {
            writeln!(out, "p-group: {p}^{k}")?;
        }
        let degs: Vec<String> = report.character_degrees.iter().map(|d| d.to_string()).collect();
        writeln!(out, "character degrees: {}", degs.join(", "))?;
        for (i, w) in &report.perturbateurs {
            writeln!(out, "irreducible {i} (degree {}): perturbateur {w}", report.character_degrees[*i])?;
        }
        writeln!(out, "action: dimension {}, faithful: {}", report.dim, report.faithful)?;
        match &report.action_perturbateur {
            Value::Null => writeln!(out, "action perturbateur: none")?,
            Value::String(s) => writeln!(out, "action perturbateur: {s}")?,
            v => writeln!(out, "action perturbateur: {}", v["element"].as_str().unwrap_or(""))?,
        }
        if let Some(b) = report.phi_compatible {
            writeln!(out, "φ-compatibility: {}", if b { "ok" } else { "FAIL" })?;
        }
        if let Some(b) = report.symplectic {
            writeln!(out, "polarization preserved: {}", if b { "ok" } else { "FAIL" })?;
        }
    }
    if report.phi_compatible == Some(false) {
        return Err(Failure::verification("φ-compatibility", "some ρ(g) does not commute with φ"));
    }
    if report.symplectic == Some(false) {
        return Err(Failure::verification("polarization", "some ρ(g) does not preserve the pairing"));
    }
    if report.perturbateurs.iter().any(|(_, w)| w == "none") {
        return Err(Failure::verification(
            "perturbateur",
            "an irreducible has neither a perturbateur nor a scalar action",
        ));
    }
    Ok(())
}

fn minkowski(n: Option<u64>, table: Option<u64>, json: bool, out: &mut dyn Write) -> CmdResult {
    if let Some(n) = n {
        let t = MinkowskiTable::new(n);
        if json {
            return print_json(
                out,
                &json!({"n": n, "value": t.value.to_string(), "factorization": t.factorization(), "exponents": t.exponents}),
            );
        }
        writeln!(out, "{}", t.value)?;
        return Ok(());
    }
    let gmax = table.expect("required by the parser");
    let rows: Vec<Value> = (1..=gmax)
        .map(|g| {
            let t = MinkowskiTable::new(2 * g);
            json!({"g": g, "n": 2 * g, "d_g": t.value.to_string(), "factorization": t.factorization()})
        })
        .collect();
    let certs = bounds::divisibility_sweep(gmax);
    let failed: Vec<&bounds::DivisibilityCertificate> = certs.iter().filter(|c| !c.holds).collect();
    if json {
        print_json(out, &json!({"rows": rows, "divisibility": {"checked": certs.len(), "failed": failed}}))?;
    } else {
        writeln!(out, "{:>3} {:>4}  {:<40} factorization", "g", "2g", "d_g = M(2g)")?;
        for r in &rows {
            writeln!(
                out,
                "{:>3} {:>4}  {:<40} {}",
                r["g"].as_u64().unwrap_or(0),
                r["n"].as_u64().unwrap_or(0),
                r["d_g"].as_str().unwrap_or(""),
                r["factorization"].as_str().unwrap_or("")
            )?;
        }
        writeln!(out, "divisibility certificates: {} checked, {} failed", certs.len(), failed.len())?;
    }
    match failed.first() {
        Some(c) => Err(Failure::verification("divisibility", c.statement.clone())),
        None => Ok(()),
    }
}

/// Largest `g` for which every matrix of the wreath product is built.
const WREATH_MATRIX_LIMIT: u64 = 3;

fn wreath(g: u64, precision: u32, json: bool, out: &mut dyn Write) -> CmdResult {
    if g == 0 {
        return Err(Failure::Usage("g must be positive".into()));
    }
    let group = bounds::wreath_report(g);
    let matrices = if g <= WREATH_MATRIX_LIMIT {
        Some(with_escalation(precision, |p| fixtures::wreath_embedding(g as usize, p))?)
    } else {
        None
    };
    if json {
        print_json(out, &json!({"group": group, "matrices": matrices}))?;
    } else {
        writeln!(
            out,
            "Q8 ≀ S_{g}: order {}, 2-part {}, expected 2^r(2g,2) = {}",
            group.order, group.two_part, group.expected_two_part
        )?;
        writeln!(
            out,
            "Sylow 2-subgroup order {}, closure verified: {}",
            group.sylow_order, group.closure_verified
        )?;
        match &matrices {
            Some(m) => {
                writeln!(out, "matrices in Sp(λ0^{g}): {}", m.symplectic)?;
                writeln!(out, "commute with φ: {}", m.commutes_with_phi)?;
                writeln!(out, "homomorphism: {}", m.homomorphism)?;
            }
            None => writeln!(out, "matrix checks run for g <= {WREATH_MATRIX_LIMIT}")?,
        }
    }
    if !group.matches {
        return Err(Failure::verification(
            "2-part of the order",
            format!("{} vs {}", group.two_part, group.expected_two_part),
        ));
    }
    if let Some(m) = &matrices {
        for (ok, name) in [
            (m.symplectic, "symplectic"),
            (m.commutes_with_phi, "φ-semilinearity"),
            (m.homomorphism, "homomorphism"),
        ] {
            if !ok {
                return Err(Failure::verification(name, ""));
            }
        }
    }
    Ok(())
}

/// Parses `t1:c1,t2:c2`; errors name the character position.
pub(crate) fn parse_places(s: &str) -> Result<Vec<(u64, u64)>, Failure> {
    let mut out = Vec::new();
    let mut pos = 0;
    for item in s.split(',') {
        let (t, c) = item
            .split_once(':')
            .ok_or_else(|| Failure::Usage(format!("--local: at character {}: expected t:c in {item:?}", pos + 1)))?;
        let tv = t
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("--local: at character {}: bad toric rank {t:?}", pos + 1)))?;
        let cpos = pos + t.len() + 2;
        let cv = c
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("--local: at character {cpos}: bad component count {c:?}")))?;
        out.push((tv, cv));
        pos += item.len() + 1;
    }
    Ok(out)
}

fn degree(local: &str, json: bool, out: &mut dyn Write) -> CmdResult {
    let places = parse_places(local)?;
    let (d, dd) = bounds::lcm_degree_formulas(&places)?;
    if json {
        return print_json(out, &json!({"places": places, "lcm_components": d.to_string(), "lcm_bound": dd.to_string()}));
    }
    writeln!(out, "lcm card Φ_v = {d}")?;
    writeln!(out, "lcm M(t_v) card Φ_v = {dd}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn places_parse_with_positions() {
        assert_eq!(parse_places("1:2,0:3").unwrap(), vec![(1, 2), (0, 3)]);
        let e = parse_places("1:2,x:3").unwrap_err().to_string();
        assert!(e.contains("character 5"), "{e}");
        let e = parse_places("1:2,4").unwrap_err().to_string();
        assert!(e.contains("character 5"), "{e}");
        let e = parse_places("12:y").unwrap_err().to_string();
        assert!(e.contains("character 4"), "{e}");
    }
}
