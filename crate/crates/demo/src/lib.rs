//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; errors come back as `{"error": ...}`
//! so the page never has to catch exceptions.

use isocrys::bounds::{self, MinkowskiTable};
use isocrys::io::{self, ModuleDoc};
use isocrys::padic::matrix::with_escalation;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest `n` accepted by [`minkowski`]; the page renders every row.
pub const MINKOWSKI_MAX: u64 = 200;
/// Largest `g` accepted by [`wreath`]; the group has `8^g g!` elements.
pub const WREATH_MAX: u64 = 3;

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

pub fn slopes_json(module: &str) -> Result<Value, String> {
    let doc: ModuleDoc = io::parse(module, "module").map_err(|e| e.to_string())?;
    let (prec, prof) = with_escalation(doc.field.precision, |prec| {
        let m = doc.with_precision(prec).build()?;
        Ok((prec, m.module.newton_slopes()?))
    })
    .map_err(|e| e.to_string())?;
    let slopes: Vec<Value> = prof.slopes.iter().map(|(q, m)| json!({ "slope": q.to_string(), "multiplicity": m })).collect();
    Ok(json!({ "display": prof.display(), "dim": prof.dim(), "precision": prec, "slopes": slopes }))
}

pub fn minkowski_json(n: u64) -> Result<Value, String> {
    if n > MINKOWSKI_MAX {
        return Err(format!("n must be at most {MINKOWSKI_MAX}"));
    }
    let t = MinkowskiTable::new(n);
    Ok(json!({ "n": n, "value": t.value.to_string(), "factorization": t.factorization() }))
}

pub fn wreath_json(g: u64) -> Result<Value, String> {
    if !(1..=WREATH_MAX).contains(&g) {
        return Err(format!("g must be between 1 and {WREATH_MAX}"));
    }
    serde_json::to_value(bounds::wreath_report(g)).map_err(|e| e.to_string())
}

/// Newton slopes of a module document.
#[wasm_bindgen]
pub fn slopes(module: &str) -> String {
    respond(slopes_json(module))
}

/// `M(n)` with its prime factorization.
#[wasm_bindgen]
pub fn minkowski(n: u32) -> String {
    respond(minkowski_json(n.into()))
}

/// Orders of `Q8 ≀ S_g` and of its Sylow 2-subgroup.
#[wasm_bindgen]
pub fn wreath(g: u32) -> String {
    respond(wreath_json(g.into()))
}
