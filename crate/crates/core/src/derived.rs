//! Derived L∞[1] brackets of V-data `(𝓛, 𝔞, P, Δ)`.
//!
//! On `V = 𝓛[1] ⊕ 𝔞`:
//! `ℓ₁(x[1], a) = (−[Δ,x][1], P(x + [Δ,a]))`, `ℓ₂(x[1], y[1]) = (−1)^{|x|}[x,y][1]`,
//! `ℓ_{n+1}(x[1], a₁..aₙ) = P[..[x,a₁]..,aₙ]`, `ℓₙ(a₁..aₙ) = P[..[Δ,a₁]..,aₙ]`,
//! extended by graded symmetry; all other brackets vanish.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_traits::{One, Zero};

use crate::coeff::{PiPoly, Rational};
use crate::error::{Error, Result};
use crate::exterior::TrigMultiVector;
use crate::koszul::Koszul;
use crate::torus::TorusModel;
use crate::exterior::TrigForm;

/// A graded Lie algebra with an abelian subalgebra `𝔞 = im P`, `ker P` a subalgebra,
/// and `Δ ∈ ker P` of degree 1 with `[Δ, Δ] = 0`.
pub trait VData {
    type E: Clone + PartialEq + Debug;

    fn degree(&self, e: &Self::E) -> i32;
    fn bracket(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn add(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn neg(&self, a: &Self::E) -> Self::E;
    fn is_zero(&self, a: &Self::E) -> bool;
    fn delta(&self) -> Self::E;
    fn project(&self, a: &Self::E) -> Self::E;
}

/// Homogeneous element of `V = 𝓛[1] ⊕ 𝔞`; `deg` is the degree in `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct VElem<E> {
    pub deg: i32,
    pub x: Option<E>,
    pub a: Option<E>,
}

impl<E> VElem<E> {
    pub fn is_zero(&self) -> bool {
        self.x.is_none() && self.a.is_none()
    }
}

pub fn shifted<V: VData>(v: &V, x: V::E) -> VElem<V::E> {
    VElem {
        deg: v.degree(&x) - 1,
        x: (!v.is_zero(&x)).then_some(x),
        a: None,
    }
}

pub fn abelian<V: VData>(v: &V, a: V::E) -> VElem<V::E> {
    VElem {
        deg: v.degree(&a),
        x: None,
        a: (!v.is_zero(&a)).then_some(a),
    }
}

fn add_opt<V: VData>(v: &V, p: Option<V::E>, q: Option<V::E>) -> Option<V::E> {
    match (p, q) {
        (None, q) => q,
        (p, None) => p,
        (Some(p), Some(q)) => {
            let s = v.add(&p, &q);
            (!v.is_zero(&s)).then_some(s)
        }
    }
}

pub fn v_add<V: VData>(v: &V, p: &VElem<V::E>, q: &VElem<V::E>) -> VElem<V::E> {
    if p.is_zero() {
        return q.clone();
    }
    if q.is_zero() {
        return p.clone();
    }
    VElem {
        deg: p.deg,
        x: add_opt(v, p.x.clone(), q.x.clone()),
        a: add_opt(v, p.a.clone(), q.a.clone()),
    }
}

pub fn v_neg<V: VData>(v: &V, p: &VElem<V::E>) -> VElem<V::E> {
    VElem {
        deg: p.deg,
        x: p.x.as_ref().map(|e| v.neg(e)),
        a: p.a.as_ref().map(|e| v.neg(e)),
    }
}

fn v_signed<V: VData>(v: &V, p: VElem<V::E>, odd: bool) -> VElem<V::E> {
    if odd {
        v_neg(v, &p)
    } else {
        p
    }
}

fn nonzero<V: VData>(v: &V, e: V::E) -> Option<V::E> {
    (!v.is_zero(&e)).then_some(e)
}

#[derive(Clone)]
enum Pure<E> {
    X(E),
    A(E),
}

/// `ℓₙ` on inputs that are each purely in `𝓛[1]` or in `𝔞`; `degs` are their `V`-degrees.
fn pure_bracket<V: VData>(v: &V, inputs: &[Pure<V::E>], degs: &[i32]) -> VElem<V::E> {
    let n = inputs.len();
    let deg = degs.iter().sum::<i32>() + 1;
    let zero = VElem { deg, x: None, a: None };
    let xs: Vec<usize> = (0..n).filter(|&i| matches!(inputs[i], Pure::X(_))).collect();
    let get = |i: usize| match &inputs[i] {
        Pure::X(e) | Pure::A(e) => e.clone(),
    };
    match (n, xs.len()) {
        (1, 1) => {
            let x = get(0);
            VElem {
                deg,
                x: nonzero(v, v.neg(&v.bracket(&v.delta(), &x))),
                a: nonzero(v, v.project(&x)),
            }
        }
        (2, 2) => {
            let (x, y) = (get(0), get(1));
            let b = v.bracket(&x, &y);
            let b = if v.degree(&x).rem_euclid(2) == 1 { v.neg(&b) } else { b };
            VElem { deg, x: nonzero(v, b), a: None }
        }
        (_, 0) => {
            let mut acc = v.delta();
            for i in 0..n {
                acc = v.bracket(&acc, &get(i));
            }
            VElem { deg, x: None, a: nonzero(v, v.project(&acc)) }
        }
        (_, 1) => {
            let i = xs[0];
            // move x[1] to the front
            let passed: i32 = degs[..i].iter().sum();
            let odd = (degs[i] * passed).rem_euclid(2) == 1;
            let mut acc = get(i);
            for j in (0..n).filter(|&j| j != i) {
                acc = v.bracket(&acc, &get(j));
            }
            let out = VElem { deg, x: None, a: nonzero(v, v.project(&acc)) };
            v_signed(v, out, odd)
        }
        _ => zero,
    }
}

/// The derived bracket `ℓₙ(v₁, …, vₙ)` on homogeneous elements.
pub fn derived_bracket<V: VData>(v: &V, inputs: &[VElem<V::E>]) -> VElem<V::E> {
    let degs: Vec<i32> = inputs.iter().map(|e| e.deg).collect();
    let deg = degs.iter().sum::<i32>() + 1;
    let mut out = VElem { deg, x: None, a: None };
    if inputs.iter().any(|e| e.is_zero()) {
        return out;
    }
    // multilinear expansion over the two components of each input
    let mut choices: Vec<Vec<Pure<V::E>>> = vec![Vec::new()];
    for e in inputs {
        let mut next = Vec::new();
        for c in &choices {
            if let Some(x) = &e.x {
                let mut c2 = c.clone();
                c2.push(Pure::X(x.clone()));
                next.push(c2);
            }
            if let Some(a) = &e.a {
                let mut c2 = c.clone();
                c2.push(Pure::A(a.clone()));
                next.push(c2);
            }
        }
        choices = next;
    }
    for c in choices {
        out = v_add(v, &out, &pure_bracket(v, &c, &degs));
    }
    out.deg = deg;
    out
}

/// `ℓ₁` alone.
pub fn differential<V: VData>(v: &V, e: &VElem<V::E>) -> VElem<V::E> {
    derived_bracket(v, std::slice::from_ref(e))
}

/// The generalized Jacobi sum `Σ_{i+j=n+1} Σ_σ ε(σ) ℓⱼ(ℓᵢ(v_σ…), v_σ…)` over unshuffles.
pub fn jacobi_sum<V: VData>(v: &V, inputs: &[VElem<V::E>]) -> VElem<V::E> {
    let n = inputs.len();
    let deg = inputs.iter().map(|e| e.deg).sum::<i32>() + 2;
    let mut out = VElem { deg, x: None, a: None };
    for mask in 1u32..(1 << n) {
        let chosen: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let rest: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) == 0).collect();
        let mut sign = 0i32;
        for &s in &chosen {
            for &c in &rest {
                if c < s {
                    sign += inputs[s].deg * inputs[c].deg;
                }
            }
        }
        let inner: Vec<VElem<V::E>> = chosen.iter().map(|&i| inputs[i].clone()).collect();
        let first = derived_bracket(v, &inner);
        let mut outer = vec![first];
        outer.extend(rest.iter().map(|&i| inputs[i].clone()));
        let term = derived_bracket(v, &outer);
        out = v_add(v, &out, &v_signed(v, term, sign.rem_euclid(2) == 1));
    }
    out.deg = deg;
    out
}

/// Graded symmetry defect `ℓₙ(…, vᵢ, vᵢ₊₁, …) − (−1)^{|vᵢ||vᵢ₊₁|} ℓₙ(…, vᵢ₊₁, vᵢ, …)`.
pub fn symmetry_defect<V: VData>(v: &V, inputs: &[VElem<V::E>], i: usize) -> VElem<V::E> {
    let mut swapped = inputs.to_vec();
    swapped.swap(i, i + 1);
    let odd = (inputs[i].deg * inputs[i + 1].deg).rem_euclid(2) == 1;
    let a = derived_bracket(v, inputs);
    let b = v_signed(v, derived_bracket(v, &swapped), !odd);
    v_add(v, &a, &b)
}

/// The MC residual `Σₙ ℓₙ(m, …, m)/n!` of a degree-0 element up to arity `max_arity`.
pub fn mc_residual<V: VData>(v: &V, m: &VElem<V::E>, max_arity: usize, scale: impl Fn(&V::E, &Rational) -> V::E) -> VElem<V::E> {
    let mut out = VElem { deg: 1, x: None, a: None };
    let mut fact = Rational::one();
    for n in 1..=max_arity {
        fact *= Rational::from_integer(n.into());
        let l = derived_bracket(v, &vec![m.clone(); n]);
        let inv = Rational::one() / &fact;
        let l = VElem {
            deg: 1,
            x: l.x.map(|e| scale(&e, &inv)),
            a: l.a.map(|e| scale(&e, &inv)),
        };
        out = v_add(v, &out, &l);
    }
    out
}

/// Sparse rational endomorphisms of a graded vector space.
pub type Endo = BTreeMap<(usize, usize), Rational>;

/// Toy V-data in `End(W)`, `W = W₁ ⊕ W₂`: `𝔞 = Hom(W₂, W₁)`, `P` the block projection.
#[derive(Clone, Debug)]
pub struct EndData {
    pub degrees: Vec<i32>,
    /// Basis indices `< split` span `W₁`.
    pub split: usize,
    pub delta: Endo,
}

impl EndData {
    /// `W` with degrees `(0, 1, 0, 1)`, `W₁ = span(e₀, e₁)`, `Δ = E₁₀ + E₃₂ + E₃₀`.
    pub fn standard() -> Self {
        let mut delta = Endo::new();
        for (i, j) in [(1, 0), (3, 2), (3, 0)] {
            delta.insert((i, j), Rational::one());
        }
        EndData {
            degrees: vec![0, 1, 0, 1],
            split: 2,
            delta,
        }
    }

    pub fn unit(&self, i: usize, j: usize, c: Rational) -> Endo {
        let mut e = Endo::new();
        if !c.is_zero() {
            e.insert((i, j), c);
        }
        e
    }

    fn compose(&self, a: &Endo, b: &Endo) -> Endo {
        let mut out = Endo::new();
        for ((i, k), x) in a {
            for ((k2, j), y) in b {
                if k == k2 {
                    let e = out.entry((*i, *j)).or_insert_with(Rational::zero);
                    *e += x * y;
                }
            }
        }
        out.retain(|_, v| !v.is_zero());
        out
    }
}

impl VData for EndData {
    type E = Endo;

    fn degree(&self, e: &Endo) -> i32 {
        let mut it = e.keys().map(|(i, j)| self.degrees[*i] - self.degrees[*j]);
        let d = it.next().unwrap_or(0);
        debug_assert!(it.all(|x| x == d), "inhomogeneous endomorphism");
        d
    }

    fn bracket(&self, a: &Endo, b: &Endo) -> Endo {
        if a.is_empty() || b.is_empty() {
            return Endo::new();
        }
        let ab = self.compose(a, b);
        let ba = self.compose(b, a);
        let odd = (self.degree(a) * self.degree(b)).rem_euclid(2) == 1;
        let mut out = ab;
        for (k, v) in ba {
            let e = out.entry(k).or_insert_with(Rational::zero);
            if odd {
                *e += v;
            } else {
                *e -= v;
            }
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    fn add(&self, a: &Endo, b: &Endo) -> Endo {
        let mut out = a.clone();
        for (k, v) in b {
            *out.entry(*k).or_insert_with(Rational::zero) += v;
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    fn neg(&self, a: &Endo) -> Endo {
        a.iter().map(|(k, v)| (*k, -v)).collect()
    }

    fn is_zero(&self, a: &Endo) -> bool {
        a.is_empty()
    }

    fn delta(&self) -> Endo {
        self.delta.clone()
    }

    fn project(&self, a: &Endo) -> Endo {
        a.iter()
            .filter(|((i, j), _)| *i < self.split && *j >= self.split)
            .map(|(k, v)| (*k, v.clone()))
            .collect()
    }
}

/// V-data of the zero section in `T^n × T^n`: `𝓛` the multivector fields (degree `p − 1`),
/// `Δ = π_can`, `𝔞` the `y`-independent fields with only `∂y` legs, `P` restriction to `y = 0`
/// followed by dropping every term with a `∂x` leg.
#[derive(Clone, Debug)]
pub struct TorusData {
    pub model: TorusModel,
}

impl TorusData {
    pub fn new(model: TorusModel) -> Self {
        TorusData { model }
    }

    pub fn in_a(&self, e: &TrigMultiVector) -> bool {
        self.project(e) == *e
    }

    /// The strict morphism `β ↦ (−∧²π♯β)[1]` from relative forms into `V`.
    pub fn strict_morphism(&self, k: &Koszul, beta: &TrigForm) -> Result<VElem<TrigMultiVector>> {
        if !self.model.is_relative(beta) {
            return Err(Error::NotRelative(beta.degree()));
        }
        Ok(shifted(self, k.transport(beta)))
    }
}

impl VData for TorusData {
    type E = TrigMultiVector;

    fn degree(&self, e: &TrigMultiVector) -> i32 {
        e.degree() as i32 - 1
    }

    fn bracket(&self, a: &TrigMultiVector, b: &TrigMultiVector) -> TrigMultiVector {
        a.schouten(b)
    }

    fn add(&self, a: &TrigMultiVector, b: &TrigMultiVector) -> TrigMultiVector {
        a.add(b)
    }

    fn neg(&self, a: &TrigMultiVector) -> TrigMultiVector {
        a.neg()
    }

    fn is_zero(&self, a: &TrigMultiVector) -> bool {
        a.is_zero()
    }

    fn delta(&self) -> TrigMultiVector {
        self.model.pi_can::<PiPoly>()
    }

    fn project(&self, a: &TrigMultiVector) -> TrigMultiVector {
        let m = self.model;
        let n = m.n;
        let only_y = a.filter_indices(|idx| idx.iter().all(|&i| m.is_y(i as usize)));
        let out = only_y.map_freq(m.dim(), |k| {
            let mut k2 = k.clone();
            for v in k2[n..].iter_mut() {
                *v = 0;
            }
            k2
        });
        if out.is_zero() {
            TrigMultiVector::zero(m.dim(), a.degree())
        } else {
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{rat, rat_int};
    use crate::trig::TrigScalar;
    use smallvec::smallvec;

    fn assert_zero<E: Debug>(e: &VElem<E>) {
        assert!(e.is_zero(), "{e:?}");
    }

    #[test]
    fn toy_jacobi() {
        let v = EndData::standard();
        assert!(v.bracket(&v.delta(), &v.delta()).is_empty());
        // 𝔞 is abelian and ker P closed
        let a1 = v.unit(0, 2, rat_int(1));
        let a2 = v.unit(1, 3, rat_int(2));
        assert!(v.bracket(&a1, &a2).is_empty());
        let x = v.add(&v.unit(0, 1, rat_int(1)), &v.unit(2, 3, rat(1, 2)));
        let y = v.unit(1, 1, rat_int(3));
        let inputs = [shifted(&v, x.clone()), shifted(&v, y.clone()), abelian(&v, a1.clone()), abelian(&v, a2.clone())];
        for n in 1..=4 {
            for s in 0..inputs.len() {
                let args: Vec<_> = (0..n).map(|i| inputs[(s + i) % inputs.len()].clone()).collect();
                assert_zero(&jacobi_sum(&v, &args));
                if n >= 2 {
                    assert_zero(&symmetry_defect(&v, &args, 0));
                }
            }
        }
    }

    #[test]
    fn torus_delta_square_and_projection() {
        let v = TorusData::new(TorusModel::new(1));
        assert!(v.bracket(&v.delta(), &v.delta()).is_zero());
        let f = TrigMultiVector::monomial(2, &[1], TrigScalar::sin(smallvec![1, 1], rat_int(1)));
        let p = v.project(&f);
        assert_eq!(p, TrigMultiVector::monomial(2, &[1], TrigScalar::sin(smallvec![1, 0], rat_int(1))));
        assert!(v.in_a(&p));
        assert!(v.project(&TrigMultiVector::basis(2, &[0])).is_zero());
    }

    #[test]
    fn toy_brackets_nontrivial() {
        let v = EndData::standard();
        let x = v.unit(0, 1, rat_int(1));
        let a = v.unit(1, 3, rat_int(1));
        let y = v.unit(0, 1, rat_int(1));
        assert!(!derived_bracket(&v, &[shifted(&v, x.clone()), abelian(&v, a.clone())]).is_zero());
        assert!(!differential(&v, &shifted(&v, y)).is_zero());
    }

    #[test]
    fn torus_jacobi_and_strict_morphism() {
        use crate::random::{field, relative_form, rng, Shape};
        use rand::Rng;
        let m = TorusModel::new(1);
        let v = TorusData::new(m);
        let k = Koszul::canonical(m);
        let mut r = rng(11);
        let sh = Shape::default();
        for _ in 0..6 {
            let mut inputs = Vec::new();
            for _ in 0..3 {
                if r.gen_bool(0.5) {
                    let d = r.gen_range(0..3);
                    inputs.push(shifted(&v, field(&mut r, 2, d, 2, sh)));
                } else {
                    let d = r.gen_range(0..2);
                    let e: TrigMultiVector = field(&mut r, 2, d, 2, sh);
                    inputs.push(abelian(&v, v.project(&e)));
                }
            }
            for n in 1..=3 {
                assert_zero(&jacobi_sum(&v, &inputs[..n]));
            }
        }
        for _ in 0..6 {
            let da = r.gen_range(1..3);
            let a = relative_form(&mut r, &m, da, 2, sh);
            let db = r.gen_range(1..3);
            let b = relative_form(&mut r, &m, db, 2, sh);
            let (fa, fb) = (v.strict_morphism(&k, &a).unwrap(), v.strict_morphism(&k, &b).unwrap());
            assert_eq!(differential(&v, &fa), v.strict_morphism(&k, &k.lambda1(&a)).unwrap());
            let l2 = derived_bracket(&v, &[fa.clone(), fb.clone()]);
            let image = v.strict_morphism(&k, &k.lambda2(&a, &b)).unwrap();
            assert_eq!(l2.x, image.x);
            assert!(l2.a.is_none());
            assert_zero(&derived_bracket(&v, &[fa.clone(), fb.clone(), fa]));
        }
    }
}
