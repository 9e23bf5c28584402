//! Writes the shipped module, group and extension documents.
//!
//! Usage: `cargo run -p isocrys-cli --example export_fixtures [DIR]`

use std::path::Path;
use std::sync::Arc;

use isocrys::fixtures;
use isocrys::grouprep::action::GroupAction;
use isocrys::io::{FieldDoc, GroupDoc, ModuleDoc};
use isocrys::isocrystal::{PhiModule, PolarizedPhiModule, SemiAbelianPhiModule};
use isocrys::padic::{Mat, Tower};
use serde::Serialize;

const PREC: u32 = 64;

fn write<T: Serialize>(dir: &Path, name: &str, doc: &T) {
    let text = serde_json::to_string_pretty(doc).expect("serializable");
    std::fs::write(dir.join(name), text + "\n").expect("writable fixture directory");
    println!("{}", dir.join(name).display());
}

fn group(dir: &Path, name: &str, act: &GroupAction, field: Option<&Arc<Tower>>) {
    write(dir, name, &GroupDoc::from_action(act, field, None));
}

fn main() -> isocrys::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into());
    let dir = Path::new(&dir);
    std::fs::create_dir_all(dir).expect("fixture directory");

    let q2 = Tower::unramified(2, 1, PREC)?;
    let q4 = Tower::unramified(2, 2, PREC)?;
    let sqrt2 = fixtures::sqrt2_extension(1, PREC)?;
    let sqrt2_f2 = fixtures::sqrt2_extension(2, PREC)?;
    let cyclic4 = fixtures::cyclic4_extension(2, PREC, ["1", "k", "-1", "-k"])?;
    write(dir, "ext-sqrt2.json", &FieldDoc::from_tower(&sqrt2));
    write(dir, "ext-sqrt2-f2.json", &FieldDoc::from_tower(&sqrt2_f2));
    write(dir, "ext-cyclic4.json", &FieldDoc::from_tower(&cyclic4));
    write(dir, "ext-gaussian.json", &FieldDoc::from_tower(&fixtures::gaussian_extension(2, PREC)?));

    // supersingular plane and its square
    let ss2 = PolarizedPhiModule::new(fixtures::supersingular_plane(&q4)?, fixtures::lambda0(&q4, 1))?;
    let ss4 = fixtures::supersingular_power(&q4, 2)?;
    write(dir, "ss2.json", &ModuleDoc::from_polarized(&ss2));
    write(dir, "ss4.json", &ModuleDoc::from_polarized(&ss4));
    group(dir, "q8.json", &fixtures::quaternion_action(&q4)?, None);
    group(dir, "sign2-sqrt2.json", &GroupAction::sign(&q4, 2), Some(&sqrt2_f2));
    group(dir, "sign4-sqrt2.json", &GroupAction::sign(&q4, 4), Some(&sqrt2_f2));
    group(dir, "k2-cyclic4.json", &fixtures::k_diagonal_action(&q4, 1)?, Some(&cyclic4));
    group(dir, "k4-cyclic4.json", &fixtures::k_diagonal_action(&q4, 2)?, Some(&cyclic4));

    // ordinary plane, alone and extended by a torus
    let ord = PolarizedPhiModule::new(PhiModule::new(&q2, Mat::from_i64(&q2, &[vec![1, 0], vec![0, 2]]))?, fixtures::lambda0(&q2, 1))?;
    write(dir, "ordinary.json", &ModuleDoc::from_polarized(&ord));
    let semi = PhiModule::new(&q2, Mat::from_i64(&q2, &[vec![2, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]))?;
    let semi = SemiAbelianPhiModule::new(semi, Mat::from_i64(&q2, &[vec![1], vec![0], vec![0]]), fixtures::lambda0(&q2, 1), None)?;
    write(dir, "ordinary-torus.json", &ModuleDoc::from_semi_abelian(&semi));
    let torus = PhiModule::new(&q2, Mat::from_i64(&q2, &[vec![2, 0], vec![0, 2]]))?;
    let torus = SemiAbelianPhiModule::new(torus, Mat::identity(&q2, 2), Mat::zeros(&q2, 0, 0), None)?;
    write(dir, "torus.json", &ModuleDoc::from_semi_abelian(&torus));
    group(dir, "trivial3.json", &GroupAction::trivial(&q2, 3), None);
    group(dir, "sign2-sqrt2-f1.json", &GroupAction::sign(&q2, 2), Some(&sqrt2));
    group(dir, "sign3-sqrt2-f1.json", &GroupAction::sign(&q2, 3), Some(&sqrt2));
    Ok(())
}
