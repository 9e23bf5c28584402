//! Seeded sampling of small rational points.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::padic::{Elem, Mat, Qp, Tower};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer in `[-bound, bound]`.
pub fn small_int(rng: &mut Rng64, bound: i64) -> i64 {
    rng.gen_range(-bound..=bound)
}

/// Element with small integer coordinates on the tower basis.
pub fn small_elem(t: &Arc<Tower>, rng: &mut Rng64, bound: i64) -> Elem {
    let n = t.degree();
    Elem::from_coords(t, (0..n).map(|_| Qp::from_i64(t.p, small_int(rng, bound), t.prec)).collect())
}

/// Element of the unramified level with small integer coordinates.
pub fn small_base_elem(t: &Arc<Tower>, rng: &mut Rng64, bound: i64) -> Elem {
    Elem::from_base_coords(t, (0..t.f).map(|_| Qp::from_i64(t.p, small_int(rng, bound), t.prec)).collect())
}

pub fn small_int_elem(t: &Arc<Tower>, rng: &mut Rng64, bound: i64) -> Elem {
    Elem::from_i64(t, small_int(rng, bound))
}

/// Matrix with entries from `gen`.
pub fn random_mat(t: &Arc<Tower>, rows: usize, cols: usize, mut gen: impl FnMut() -> Elem) -> Mat {
    Mat::from_fn(t, rows, cols, |_, _| gen())
}
