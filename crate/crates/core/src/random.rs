//! Seeded generators of random trigonometric data for sweeps and tests.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coeff::{rat, PiPoly};
use crate::exterior::{subsets, AltField, Kind, TrigForm};
use crate::torus::TorusModel;
use crate::trig::{Freq, Phase, TrigScalar};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of generated data.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    /// Largest `|k_i|`.
    pub max_freq: i64,
    /// Modes per coefficient.
    pub modes: usize,
    /// Largest `|numerator|` of coefficients (denominators are 1..=4).
    pub max_num: i64,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_freq: 1,
            modes: 2,
            max_num: 3,
        }
    }
}

pub fn scalar<R: Rng>(rng: &mut R, dim: usize, shape: Shape) -> TrigScalar {
    let mut s = TrigScalar::zero();
    for _ in 0..shape.modes {
        let k: Freq = (0..dim)
            .map(|_| rng.gen_range(-shape.max_freq..=shape.max_freq))
            .collect();
        let phase = if rng.gen_bool(0.5) { Phase::Cos } else { Phase::Sin };
        let num = rng.gen_range(-shape.max_num..=shape.max_num);
        let den = rng.gen_range(1..=4);
        s.add_term(k, phase, PiPoly::rational(rat(num, den)));
    }
    s
}

/// A random field with `terms` index sets drawn among all degree-`degree` subsets.
pub fn field<K: Kind, R: Rng>(rng: &mut R, dim: usize, degree: usize, terms: usize, shape: Shape) -> AltField<K> {
    let all = subsets(dim, degree);
    let mut out = AltField::zero(dim, degree);
    if all.is_empty() {
        return out;
    }
    for _ in 0..terms {
        let idx = all[rng.gen_range(0..all.len())].clone();
        out.add_term(idx, scalar(rng, dim, shape));
    }
    out
}

/// A random form whose pullback to `L` vanishes.
pub fn relative_form<R: Rng>(rng: &mut R, model: &TorusModel, degree: usize, terms: usize, shape: Shape) -> TrigForm {
    let w: TrigForm = field(rng, model.dim(), degree, terms, shape);
    w.sub(&model.extend(&model.restrict(&w)))
}

/// A random 1-form on `L` whose sup norm is at most `bound`.
pub fn section<R: Rng>(rng: &mut R, model: &TorusModel, bound: f64, shape: Shape) -> TrigForm {
    let s: TrigForm = field(rng, model.n, 1, model.n, shape);
    let l1 = s
        .terms()
        .map(|(_, c)| c.l1_bound())
        .sum::<f64>();
    if l1 == 0.0 {
        return s;
    }
    // scale by a rational not exceeding bound / l1
    let target = bound / l1;
    let den = 1000i64;
    let num = (target * den as f64).floor() as i64;
    s.scale(&rat(num, den))
}
