//! Trigonometric polynomials on the flat torus `R^N / Z^N`.
//!
//! A [`TrigScalar`] is a finite sum of `c · cos(2π k·x)` and `c · sin(2π k·x)`.
//! Keys are canonical: the first nonzero entry of `k` is positive, and
//! `sin` with `k = 0` never appears.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::coeff::{rat, rat_int, Coeff, PiPoly, Rational};
use crate::error::{Error, Result};

pub type Freq = SmallVec<[i64; 4]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

pub fn zero_freq(dim: usize) -> Freq {
    SmallVec::from_elem(0, dim)
}

pub fn unit_freq(dim: usize, i: usize, k: i64) -> Freq {
    let mut f = zero_freq(dim);
    f[i] = k;
    f
}

fn is_zero_freq(k: &Freq) -> bool {
    k.iter().all(|&v| v == 0)
}

/// Returns the canonical representative of `±k` and whether it was negated.
pub fn canonical_freq(k: &Freq) -> (Freq, bool) {
    match k.iter().find(|&&v| v != 0) {
        Some(&v) if v < 0 => (k.iter().map(|v| -v).collect(), true),
        _ => (k.clone(), false),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigScalar<C: Coeff = PiPoly> {
    terms: BTreeMap<(Freq, Phase), C>,
}

impl<C: Coeff> Default for TrigScalar<C> {
    fn default() -> Self {
        TrigScalar {
            terms: BTreeMap::new(),
        }
    }
}

impl<C: Coeff> TrigScalar<C> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(dim: usize, c: C) -> Self {
        let mut s = Self::default();
        s.add_term(zero_freq(dim), Phase::Cos, c);
        s
    }

    /// `c · cos(2π k·x)` or `c · sin(2π k·x)` for an arbitrary (not necessarily canonical) `k`.
    pub fn mode(k: Freq, phase: Phase, c: C) -> Self {
        let mut s = Self::default();
        s.add_term(k, phase, c);
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Freq, Phase, &C)> {
        self.terms.iter().map(|((k, p), c)| (k, *p, c))
    }

    pub fn coefficient(&self, k: &Freq, phase: Phase) -> C {
        self.terms
            .get(&(k.clone(), phase))
            .cloned()
            .unwrap_or_else(C::zero)
    }

    /// Adds `c · phase(2π k·x)`, canonicalizing the key.
    pub fn add_term(&mut self, k: Freq, phase: Phase, c: C) {
        if c.is_zero() {
            return;
        }
        let (k, flipped) = canonical_freq(&k);
        let zero = is_zero_freq(&k);
        if zero && phase == Phase::Sin {
            return;
        }
        let c = if flipped && phase == Phase::Sin {
            c.neg_ref()
        } else {
            c
        };
        let key = (k, phase);
        match self.terms.get_mut(&key) {
            Some(existing) => {
                let sum = existing.add_ref(&c);
                if sum.is_zero() {
                    self.terms.remove(&key);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        for ((k, p), c) in &other.terms {
            self.add_term(k.clone(), *p, c.clone());
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        TrigScalar {
            terms: self
                .terms
                .iter()
                .map(|(key, c)| (key.clone(), c.neg_ref()))
                .collect(),
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::default();
        }
        TrigScalar {
            terms: self
                .terms
                .iter()
                .map(|(key, c)| (key.clone(), c.scale(q)))
                .collect(),
        }
    }

    pub fn scale_coeff(&self, s: &C) -> Self {
        let mut out = Self::default();
        for ((k, p), c) in &self.terms {
            out.add_term(k.clone(), *p, c.mul_ref(s));
        }
        out
    }

    /// Product via the product-to-sum identities.
    pub fn mul(&self, other: &Self) -> Self {
        let half = rat(1, 2);
        let mut out = Self::default();
        for ((k1, p1), c1) in &self.terms {
            for ((k2, p2), c2) in &other.terms {
                let c = c1.mul_ref(c2).scale(&half);
                let diff: Freq = k1.iter().zip(k2.iter()).map(|(a, b)| a - b).collect();
                let sum: Freq = k1.iter().zip(k2.iter()).map(|(a, b)| a + b).collect();
                match (p1, p2) {
                    (Phase::Cos, Phase::Cos) => {
                        out.add_term(diff, Phase::Cos, c.clone());
                        out.add_term(sum, Phase::Cos, c);
                    }
                    (Phase::Sin, Phase::Sin) => {
                        out.add_term(diff, Phase::Cos, c.clone());
                        out.add_term(sum, Phase::Cos, c.neg_ref());
                    }
                    (Phase::Sin, Phase::Cos) => {
                        out.add_term(sum, Phase::Sin, c.clone());
                        out.add_term(diff, Phase::Sin, c);
                    }
                    (Phase::Cos, Phase::Sin) => {
                        out.add_term(sum, Phase::Sin, c.clone());
                        out.add_term(diff, Phase::Sin, c.neg_ref());
                    }
                }
            }
        }
        out
    }

    /// `∂/∂x_j`.
    pub fn partial(&self, j: usize) -> Self {
        let mut out = Self::default();
        for ((k, p), c) in &self.terms {
            let kj = k[j];
            if kj == 0 {
                continue;
            }
            match p {
                Phase::Cos => out.add_term(k.clone(), Phase::Sin, c.mul_two_pi(kj).neg_ref()),
                Phase::Sin => out.add_term(k.clone(), Phase::Cos, c.mul_two_pi(kj)),
            }
        }
        out
    }

    /// Substitutes `x = A x' + s` where `A` is an integer `N × N'` matrix (row-major, `rows = N`).
    /// Shifts must satisfy `k·s ∈ ¼Z` so the result stays in the trigonometric class.
    pub fn pullback_affine(&self, a: &[Vec<i64>], shift: Option<&[Rational]>) -> Result<Self> {
        let new_dim = a.first().map_or(0, |r| r.len());
        let mut out = Self::default();
        for ((k, p), c) in &self.terms {
            let mut k2 = zero_freq(new_dim);
            for (i, ki) in k.iter().enumerate() {
                if *ki == 0 {
                    continue;
                }
                for (j, entry) in a[i].iter().enumerate() {
                    k2[j] += ki * entry;
                }
            }
            let quarter_turns = match shift {
                None => 0,
                Some(s) => {
                    let mut phase = Rational::zero();
                    for (ki, si) in k.iter().zip(s.iter()) {
                        phase += rat_int(*ki) * si;
                    }
                    let four = phase * rat_int(4);
                    if !four.is_integer() {
                        return Err(Error::InexactShift);
                    }
                    let m: i64 = num_traits::ToPrimitive::to_i64(&four.to_integer())
                        .ok_or(Error::InexactShift)?;
                    m.rem_euclid(4)
                }
            };
            // cos(u + mπ/2), sin(u + mπ/2)
            let (phase, negate) = match (p, quarter_turns) {
                (Phase::Cos, 0) => (Phase::Cos, false),
                (Phase::Cos, 1) => (Phase::Sin, true),
                (Phase::Cos, 2) => (Phase::Cos, true),
                (Phase::Cos, _) => (Phase::Sin, false),
                (Phase::Sin, 0) => (Phase::Sin, false),
                (Phase::Sin, 1) => (Phase::Cos, false),
                (Phase::Sin, 2) => (Phase::Sin, true),
                (Phase::Sin, _) => (Phase::Cos, true),
            };
            let c = if negate { c.neg_ref() } else { c.clone() };
            out.add_term(k2, phase, c);
        }
        Ok(out)
    }

    /// Applies a linear map to every frequency (for embeddings and restrictions).
    pub fn map_freq(&self, f: impl Fn(&Freq) -> Freq) -> Self {
        let mut out = Self::default();
        for ((k, p), c) in &self.terms {
            out.add_term(f(k), *p, c.clone());
        }
        out
    }

    pub fn map_coeff<D: Coeff>(&self, f: impl Fn(&C) -> D) -> TrigScalar<D> {
        let mut out = TrigScalar::default();
        for ((k, p), c) in &self.terms {
            out.add_term(k.clone(), *p, f(c));
        }
        out
    }

    pub fn to_numeric(&self) -> TrigScalar<f64> {
        self.map_coeff(|c| c.to_f64())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|((k, p), c)| {
                let arg = 2.0 * PI * k.iter().zip(x).map(|(a, b)| *a as f64 * b).sum::<f64>();
                let v = match p {
                    Phase::Cos => arg.cos(),
                    Phase::Sin => arg.sin(),
                };
                c.to_f64() * v
            })
            .sum()
    }

    /// Upper bound for the sup norm: sum of absolute coefficients.
    pub fn l1_bound(&self) -> f64 {
        self.terms.values().map(|c| c.to_f64().abs()).sum()
    }

    /// Largest `|k_i|` over the support.
    pub fn max_freq(&self) -> i64 {
        self.terms
            .keys()
            .flat_map(|(k, _)| k.iter().map(|v| v.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|(k, _)| is_zero_freq(k))
    }

    pub fn constant_part(&self) -> C {
        self.terms
            .iter()
            .find(|((k, _), _)| is_zero_freq(k))
            .map(|(_, c)| c.clone())
            .unwrap_or_else(C::zero)
    }

    /// True when no frequency touches the coordinates in `idx`.
    pub fn independent_of(&self, idx: impl Fn(usize) -> bool) -> bool {
        self.terms
            .keys()
            .all(|(k, _)| k.iter().enumerate().all(|(i, v)| *v == 0 || !idx(i)))
    }

    /// Keeps only terms whose frequency satisfies the predicate.
    pub fn filter_freq(&self, keep: impl Fn(&Freq) -> bool) -> Self {
        TrigScalar {
            terms: self
                .terms
                .iter()
                .filter(|((k, _), _)| keep(k))
                .map(|(key, c)| (key.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn compile(&self) -> CompiledScalar {
        CompiledScalar {
            modes: self
                .terms
                .iter()
                .map(|((k, p), c)| CompiledMode {
                    k: k.iter().map(|v| *v as f64).collect(),
                    phase: *p,
                    c: c.to_f64(),
                })
                .collect(),
        }
    }
}

impl TrigScalar<PiPoly> {
    pub fn from_rational(dim: usize, q: Rational) -> Self {
        Self::constant(dim, PiPoly::rational(q))
    }

    pub fn cos(k: Freq, q: Rational) -> Self {
        Self::mode(k, Phase::Cos, PiPoly::rational(q))
    }

    pub fn sin(k: Freq, q: Rational) -> Self {
        Self::mode(k, Phase::Sin, PiPoly::rational(q))
    }
}

impl TrigScalar<f64> {
    /// Drops terms with `|c| ≤ tol`; returns the dropped absolute mass.
    pub fn prune(&mut self, tol: f64) -> f64 {
        let mut dropped = 0.0;
        self.terms.retain(|_, c| {
            if c.abs() <= tol {
                dropped += c.abs();
                false
            } else {
                true
            }
        });
        dropped
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

#[derive(Clone, Debug)]
struct CompiledMode {
    k: Vec<f64>,
    phase: Phase,
    c: f64,
}

/// Flattened `f64` form of a scalar for fast repeated evaluation.
#[derive(Clone, Debug, Default)]
pub struct CompiledScalar {
    modes: Vec<CompiledMode>,
}

impl CompiledScalar {
    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for m in &self.modes {
            let arg = 2.0 * PI * m.k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            s += m.c
                * match m.phase {
                    Phase::Cos => arg.cos(),
                    Phase::Sin => arg.sin(),
                };
        }
        s
    }

    /// Value and gradient.
    pub fn eval_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut s = 0.0;
        for m in &self.modes {
            let arg = 2.0 * PI * m.k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let (sn, cs) = arg.sin_cos();
            let (v, dv) = match m.phase {
                Phase::Cos => (cs, -sn),
                Phase::Sin => (sn, cs),
            };
            s += m.c * v;
            let f = m.c * dv * 2.0 * PI;
            for (g, kj) in grad.iter_mut().zip(&m.k) {
                *g += f * kj;
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use smallvec::smallvec;

    fn f(k: &[i64]) -> Freq {
        k.iter().copied().collect()
    }

    #[test]
    fn canonical_keys() {
        let mut s = TrigScalar::<PiPoly>::zero();
        s.add_term(f(&[-1, 2]), Phase::Sin, PiPoly::int(1));
        assert_eq!(s.coefficient(&f(&[1, -2]), Phase::Sin), PiPoly::int(-1));
        s.add_term(f(&[0, 0]), Phase::Sin, PiPoly::int(3));
        assert_eq!(s.len(), 1);
        s.add_term(f(&[1, -2]), Phase::Sin, PiPoly::int(1));
        assert!(s.is_zero());
    }

    #[test]
    fn sin_squared_product_to_sum() {
        let s = TrigScalar::sin(smallvec![1, 0], rat_int(1));
        let sq = s.mul(&s);
        let expected = TrigScalar::from_rational(2, rat(1, 2))
            .add(&TrigScalar::cos(smallvec![2, 0], rat(-1, 2)));
        assert_eq!(sq, expected);
    }

    #[test]
    fn partial_and_eval_agree() {
        let s = TrigScalar::sin(smallvec![1, 2], rat(1, 3)).add(&TrigScalar::cos(smallvec![0, 1], rat_int(2)));
        let ds = s.partial(1);
        let x = [0.17, 0.41];
        let h = 1e-6;
        let fd = (s.eval(&[x[0], x[1] + h]) - s.eval(&[x[0], x[1] - h])) / (2.0 * h);
        assert!((ds.eval(&x) - fd).abs() < 1e-6);
        let mut g = [0.0; 2];
        let v = s.compile().eval_grad(&x, &mut g);
        assert!((v - s.eval(&x)).abs() < 1e-14);
        assert!((g[1] - ds.eval(&x)).abs() < 1e-12);
    }

    #[test]
    fn quarter_shift_turns_cos_into_sin() {
        let c = TrigScalar::cos(smallvec![1], rat_int(1));
        let shifted = c.pullback_affine(&[vec![1]], Some(&[rat(1, 4)])).unwrap();
        assert_eq!(shifted, TrigScalar::sin(smallvec![1], rat_int(-1)));
        assert!(c.pullback_affine(&[vec![1]], Some(&[rat(1, 3)])).is_err());
    }
}
