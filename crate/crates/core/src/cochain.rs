//! Cochain complexes of the torus model and their cohomology.
//!
//! Four complexes are handled: `Ω(M)`, `Ω(L)`, the relative complex
//! `Ω(M,L) = ker ι_L^*`, and the mapping cone of `ι_L^*`. Since `d` and
//! `ι_L^*` preserve x-frequencies, everything splits into finite blocks indexed
//! by a canonical x-frequency `k_x` (with `|k|∞` bounded by the budget).
//!
//! Exactness with powers of π: a degree-`p` component whose coefficient is
//! `q π^e` is stored at *level* `e − p` with rational entry `q`. In these
//! coordinates `d/π`, `ι_L^*` and the cone differential are rational and
//! level-preserving, so every level is solved over `Q` independently.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::coeff::{Coeff, PiPoly, Rational};
use crate::error::{Error, Result};
use crate::exterior::{subsets, Indices, TrigForm};
use crate::linalg::{self, Reducer, SparseVec};
use crate::torus::TorusModel;
use crate::trig::{canonical_freq, zero_freq, Freq, Phase, TrigScalar};

pub const DEFAULT_BUDGET: i64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ComplexKind {
    /// `Ω(M)`
    Absolute,
    /// `Ω(L)`
    Lagrangian,
    /// `Ω(M,L)`
    Relative,
    /// `C(ι_L^*)`
    Cone,
}

impl ComplexKind {
    pub fn label(&self) -> &'static str {
        match self {
            ComplexKind::Absolute => "Ω(M)",
            ComplexKind::Lagrangian => "Ω(L)",
            ComplexKind::Relative => "Ω(M,L)",
            ComplexKind::Cone => "Cone",
        }
    }
}

/// A cochain of the mapping cone: `a ∈ Ω^k(M)`, `b ∈ Ω^{k−1}(L)`.
/// Cochains of the other complexes use only `a` (on `L` for [`ComplexKind::Lagrangian`]).
#[derive(Clone, Debug, PartialEq)]
pub struct ConeElement {
    pub a: TrigForm,
    pub b: TrigForm,
}

impl ConeElement {
    pub fn new(a: TrigForm, b: TrigForm) -> Self {
        ConeElement { a, b }
    }

    /// `(a, 0)`.
    pub fn from_form(model: &TorusModel, a: TrigForm) -> Self {
        let k = a.degree();
        ConeElement {
            a,
            b: TrigForm::zero(model.n, k.saturating_sub(1)),
        }
    }

    pub fn degree(&self) -> usize {
        self.a.degree()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        ConeElement::new(self.a.add(&o.a), self.b.add(&o.b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        ConeElement::new(self.a.sub(&o.a), self.b.sub(&o.b))
    }

    pub fn scale(&self, q: &Rational) -> Self {
        ConeElement::new(self.a.scale(q), self.b.scale(q))
    }

    pub fn scale_coeff(&self, c: &PiPoly) -> Self {
        ConeElement::new(self.a.scale_coeff(c), self.b.scale_coeff(c))
    }
}

/// `d_{ι*}(a, b) = (da, ι_L^*a − db)`.
pub fn cone_differential(model: &TorusModel, e: &ConeElement) -> ConeElement {
    let da = e.a.exterior_derivative();
    let b = model.restrict(&e.a).sub(&e.b.exterior_derivative());
    ConeElement::new(da, b)
}

/// Cocycle test; the residual is `d_{ι*}(a, b)`.
pub fn is_cocycle(model: &TorusModel, e: &ConeElement) -> (bool, ConeElement) {
    let r = cone_differential(model, e);
    (r.is_zero(), r)
}

/// `ζ = η − d(extend β)`, which satisfies `d_{ι*}(ζ, 0) = d_{ι*}(η, β)`.
pub fn normalize_coboundary(model: &TorusModel, e: &ConeElement) -> TrigForm {
    e.a.sub(&model.extend(&e.b).exterior_derivative())
}

type Elem = (Freq, Phase, Indices);

struct Space {
    elems: Vec<Elem>,
    index: HashMap<Elem, usize>,
}

impl Space {
    fn new(elems: Vec<Elem>) -> Self {
        let index = elems.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        Space { elems, index }
    }

    fn len(&self) -> usize {
        self.elems.len()
    }
}

/// One x-frequency block: bases and the rational matrices of `d/π` and `ι_L^*`.
struct Block {
    m: Vec<Space>,
    l: Vec<Space>,
    dm: Vec<Vec<SparseVec>>,
    dl: Vec<Vec<SparseVec>>,
    rm: Vec<Vec<SparseVec>>,
}

fn mode_form(dim: usize, e: &Elem) -> TrigForm {
    TrigForm::monomial(dim, &e.2, TrigScalar::mode(e.0.clone(), e.1, PiPoly::int(1)))
}

fn local_vec(space: &Space, w: &TrigForm, exponent: i32) -> SparseVec {
    let mut v = SparseVec::new();
    for (idx, s) in w.terms() {
        for (k, p, c) in s.terms() {
            let q = c.coefficient(exponent);
            if q.is_zero() {
                continue;
            }
            let j = space.index[&(k.clone(), p, idx.clone())];
            v.insert(j, q);
        }
    }
    v
}

fn freq_box(n: usize, budget: i64) -> Vec<Freq> {
    let mut out: Vec<Freq> = vec![Freq::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|f| {
                (-budget..=budget).map(move |v| {
                    let mut g = f.clone();
                    g.push(v);
                    g
                })
            })
            .collect();
    }
    out
}

fn is_canonical(k: &Freq) -> bool {
    !canonical_freq(k).1
}

fn is_zero(k: &Freq) -> bool {
    k.iter().all(|v| *v == 0)
}

fn elems_for(freqs: &[Freq], dim: usize, degree: usize) -> Vec<Elem> {
    let sets = subsets(dim, degree);
    let mut out = Vec::new();
    for f in freqs {
        for phase in [Phase::Cos, Phase::Sin] {
            if phase == Phase::Sin && is_zero(f) {
                continue;
            }
            for s in &sets {
                out.push((f.clone(), phase, s.clone()));
            }
        }
    }
    out
}

impl Block {
    fn build(model: &TorusModel, budget: i64, kx: &Freq) -> Block {
        let n = model.n;
        let big = model.dim();
        let mut m_freqs: Vec<Freq> = freq_box(n, budget)
            .into_iter()
            .filter(|ky| !is_zero(kx) || is_canonical(ky))
            .map(|ky| kx.iter().chain(ky.iter()).copied().collect::<Freq>())
            .collect();
        m_freqs.sort_by_key(|f| !is_zero(f));
        let m: Vec<Space> = (0..=big).map(|p| Space::new(elems_for(&m_freqs, big, p))).collect();
        let l: Vec<Space> = (0..=n)
            .map(|p| Space::new(elems_for(std::slice::from_ref(kx), n, p)))
            .collect();
        let mut dm = Vec::new();
        let mut rm = Vec::new();
        for p in 0..=big {
            let d_cols = if p < big {
                m[p].elems
                    .iter()
                    .map(|e| local_vec(&m[p + 1], &mode_form(big, e).exterior_derivative(), 1))
                    .collect()
            } else {
                vec![SparseVec::new(); m[p].len()]
            };
            dm.push(d_cols);
            let r_cols = m[p]
                .elems
                .iter()
                .map(|e| {
                    if p <= n {
                        local_vec(&l[p], &model.restrict(&mode_form(big, e)), 0)
                    } else {
                        SparseVec::new()
                    }
                })
                .collect();
            rm.push(r_cols);
        }
        let dl = (0..=n)
            .map(|p| {
                if p < n {
                    l[p].elems
                        .iter()
                        .map(|e| local_vec(&l[p + 1], &mode_form(n, e).exterior_derivative(), 1))
                        .collect()
                } else {
                    vec![SparseVec::new(); l[p].len()]
                }
            })
            .collect();
        Block { m, l, dm, dl, rm }
    }

    fn m_len(&self, p: usize) -> usize {
        self.m.get(p).map_or(0, |s| s.len())
    }

    fn l_len(&self, p: isize) -> usize {
        if p < 0 {
            0
        } else {
            self.l.get(p as usize).map_or(0, |s| s.len())
        }
    }

    /// Basis of the degree-`k` cochains, in ambient coordinates.
    fn cochain_basis(&self, kind: ComplexKind, k: usize) -> Vec<SparseVec> {
        match kind {
            ComplexKind::Absolute => (0..self.m_len(k)).map(linalg::unit).collect(),
            ComplexKind::Lagrangian => (0..self.l_len(k as isize)).map(linalg::unit).collect(),
            ComplexKind::Relative => {
                if k >= self.m.len() {
                    return Vec::new();
                }
                linalg::kernel(&self.rm[k])
            }
            ComplexKind::Cone => {
                (0..self.m_len(k) + self.l_len(k as isize - 1)).map(linalg::unit).collect()
            }
        }
    }

    /// The differential applied to an ambient degree-`k` vector.
    fn differential(&self, kind: ComplexKind, k: usize, v: &SparseVec) -> SparseVec {
        match kind {
            ComplexKind::Absolute | ComplexKind::Relative => {
                if k >= self.dm.len() {
                    SparseVec::new()
                } else {
                    linalg::apply(&self.dm[k], v)
                }
            }
            ComplexKind::Lagrangian => {
                if k >= self.dl.len() {
                    SparseVec::new()
                } else {
                    linalg::apply(&self.dl[k], v)
                }
            }
            ComplexKind::Cone => {
                let ma = self.m_len(k);
                let (a, b): (SparseVec, SparseVec) = v
                    .iter()
                    .map(|(i, q)| (*i, q.clone()))
                    .partition(|(i, _)| *i < ma);
                let b: SparseVec = b.into_iter().map(|(i, q)| (i - ma, q)).collect();
                let da = if k < self.dm.len() {
                    linalg::apply(&self.dm[k], &a)
                } else {
                    SparseVec::new()
                };
                let mut lower = if k < self.rm.len() {
                    linalg::apply(&self.rm[k], &a)
                } else {
                    SparseVec::new()
                };
                if k >= 1 && k - 1 < self.dl.len() {
                    let db = linalg::apply(&self.dl[k - 1], &b);
                    linalg::axpy(&mut lower, &-Rational::from_integer(1.into()), &db);
                }
                linalg::concat(&da, &lower, self.m_len(k + 1))
            }
        }
    }

    fn cocycles(&self, kind: ComplexKind, k: usize) -> Vec<SparseVec> {
        let basis = self.cochain_basis(kind, k);
        let images: Vec<SparseVec> = basis.iter().map(|v| self.differential(kind, k, v)).collect();
        linalg::kernel(&images)
            .into_iter()
            .map(|c| {
                let mut out = SparseVec::new();
                for (j, a) in &c {
                    linalg::axpy(&mut out, a, &basis[*j]);
                }
                out
            })
            .collect()
    }

    /// Coboundaries in degree `k` together with their preimages (ambient degree `k−1`).
    fn coboundaries(&self, kind: ComplexKind, k: usize) -> (Vec<SparseVec>, Vec<SparseVec>) {
        if k == 0 {
            return (Vec::new(), Vec::new());
        }
        let basis = self.cochain_basis(kind, k - 1);
        let images = basis.iter().map(|v| self.differential(kind, k - 1, v)).collect();
        (images, basis)
    }
}

/// Cohomology of one complex in one degree.
#[derive(Clone, Debug)]
pub struct Cohomology {
    pub kind: ComplexKind,
    pub degree: usize,
    pub dim: usize,
    /// Representatives with rational coefficients.
    pub reps: Vec<ConeElement>,
    /// Contributions of the blocks, keyed by x-frequency (only nonzero entries).
    pub block_dims: Vec<(Freq, usize)>,
}

/// Coordinates of a class, with one Laurent polynomial in π per basis vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CohomologyClass {
    pub kind: ComplexKind,
    pub degree: usize,
    pub coords: Vec<PiPoly>,
}

impl CohomologyClass {
    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.to_f64()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }
}

/// Computes cohomology of the torus complexes up to a frequency budget.
pub struct Engine {
    model: TorusModel,
    budget: i64,
    blocks: BTreeMap<Freq, OnceLock<Block>>,
    cache: HashMap<(ComplexKind, usize), OnceLock<Cohomology>>,
}

impl Engine {
    pub fn new(model: TorusModel, budget: i64) -> Self {
        let blocks = freq_box(model.n, budget)
            .into_iter()
            .filter(is_canonical)
            .map(|k| (k, OnceLock::new()))
            .collect();
        let mut cache = HashMap::new();
        for kind in [
            ComplexKind::Absolute,
            ComplexKind::Lagrangian,
            ComplexKind::Relative,
            ComplexKind::Cone,
        ] {
            for k in 0..=model.dim() + 1 {
                cache.insert((kind, k), OnceLock::new());
            }
        }
        Engine {
            model,
            budget,
            blocks,
            cache,
        }
    }

    pub fn model(&self) -> &TorusModel {
        &self.model
    }

    pub fn budget(&self) -> i64 {
        self.budget
    }

    fn block(&self, kx: &Freq) -> &Block {
        self.blocks[kx].get_or_init(|| Block::build(&self.model, self.budget, kx))
    }

    fn top_degree(&self, kind: ComplexKind) -> usize {
        match kind {
            ComplexKind::Lagrangian => self.model.n,
            _ => self.model.dim(),
        }
    }

    /// Dimension and representatives of `H^k` of the given complex.
    pub fn cohomology(&self, kind: ComplexKind, k: usize) -> &Cohomology {
        let slot = &self.cache[&(kind, k.min(self.model.dim() + 1))];
        slot.get_or_init(|| self.compute(kind, k))
    }

    pub fn dims(&self, kind: ComplexKind) -> Vec<usize> {
        (0..=self.top_degree(kind)).map(|k| self.cohomology(kind, k).dim).collect()
    }

    fn compute(&self, kind: ComplexKind, k: usize) -> Cohomology {
        let keys: Vec<&Freq> = self.blocks.keys().collect();
        let per_block: Vec<(Freq, usize, Vec<SparseVec>)> = keys
            .par_iter()
            .map(|kx| {
                let b = self.block(kx);
                let z = b.cocycles(kind, k);
                let (bd, _) = b.coboundaries(kind, k);
                let mut r = Reducer::new();
                for v in &bd {
                    r.insert(v);
                }
                let mut reps = Vec::new();
                for v in z {
                    if r.insert(&v).1.is_none() {
                        reps.push(v);
                    }
                }
                ((*kx).clone(), reps.len(), reps)
            })
            .collect();
        let mut reps = Vec::new();
        let mut block_dims = Vec::new();
        for (kx, d, vs) in per_block {
            if d > 0 {
                block_dims.push((kx.clone(), d));
            }
            for v in vs {
                reps.push(self.to_element(kind, k, &kx, -(k as i32), &v));
            }
        }
        Cohomology {
            kind,
            degree: k,
            dim: reps.len(),
            reps,
            block_dims,
        }
    }

    /// Converts an ambient block vector at a level back into a cochain.
    fn to_element(&self, kind: ComplexKind, k: usize, kx: &Freq, level: i32, v: &SparseVec) -> ConeElement {
        let b = self.block(kx);
        let (n, big) = (self.model.n, self.model.dim());
        let (a_space, a_dim) = match kind {
            ComplexKind::Lagrangian => (&b.l[k], n),
            _ => (&b.m[k], big),
        };
        let mut a = TrigForm::zero(a_dim, k);
        let mut bb = TrigForm::zero(n, k.saturating_sub(1));
        let split = a_space.len();
        for (i, q) in v {
            if *i < split {
                let e = &a_space.elems[*i];
                let c = PiPoly::monomial(q.clone(), level + k as i32);
                a.add_term(e.2.clone(), TrigScalar::mode(e.0.clone(), e.1, c));
            } else {
                let e = &b.l[k - 1].elems[i - split];
                let c = PiPoly::monomial(q.clone(), level + k as i32 - 1);
                bb.add_term(e.2.clone(), TrigScalar::mode(e.0.clone(), e.1, c));
            }
        }
        ConeElement::new(a, bb)
    }

    fn block_key(&self, k: &Freq, on_l: bool) -> Result<Freq> {
        let n = self.model.n;
        let needed = k.iter().map(|v| v.abs()).max().unwrap_or(0);
        if needed > self.budget {
            return Err(Error::Budget {
                budget: self.budget,
                needed,
            });
        }
        let kx: Freq = if on_l { k.clone() } else { k[..n].iter().copied().collect() };
        if is_zero(&kx) {
            Ok(zero_freq(n))
        } else {
            Ok(kx)
        }
    }

    /// Splits a cochain into per-(block, level) ambient vectors.
    fn vectorize(&self, kind: ComplexKind, e: &ConeElement) -> Result<BTreeMap<(Freq, i32), SparseVec>> {
        let k = e.degree();
        let mut out: BTreeMap<(Freq, i32), SparseVec> = BTreeMap::new();
        let on_l = kind == ComplexKind::Lagrangian;
        for (idx, s) in e.a.terms() {
            for (f, p, c) in s.terms() {
                let key = self.block_key(f, on_l)?;
                let b = self.block(&key);
                let space = if on_l { &b.l[k] } else { &b.m[k] };
                let j = space.index[&(f.clone(), p, idx.clone())];
                for (ex, q) in c.terms() {
                    out.entry((key.clone(), ex - k as i32)).or_default().insert(j, q.clone());
                }
            }
        }
        if kind == ComplexKind::Cone && k >= 1 {
            for (idx, s) in e.b.terms() {
                for (f, p, c) in s.terms() {
                    let key = self.block_key(f, true)?;
                    let b = self.block(&key);
                    let j = b.m_len(k) + b.l[k - 1].index[&(f.clone(), p, idx.clone())];
                    for (ex, q) in c.terms() {
                        out.entry((key.clone(), ex - (k as i32 - 1))).or_default().insert(j, q.clone());
                    }
                }
            }
        }
        Ok(out)
    }

    /// Coordinates of the class of a cocycle in the stored basis of `H^k`.
    pub fn coordinates(&self, kind: ComplexKind, e: &ConeElement) -> Result<CohomologyClass> {
        let k = e.degree();
        let coh = self.cohomology(kind, k);
        let rep_vecs: Vec<(Freq, SparseVec)> = coh
            .reps
            .iter()
            .map(|r| {
                let mut v = self.vectorize(kind, r)?;
                let ((kx, _), vec) = v.pop_first().expect("nonzero representative");
                Ok((kx, vec))
            })
            .collect::<Result<_>>()?;
        let mut coords = vec![PiPoly::zero(); coh.dim];
        for ((kx, level), target) in self.vectorize(kind, e)? {
            let b = self.block(&kx);
            let (bd, _) = b.coboundaries(kind, k);
            let mut r = Reducer::new();
            for v in &bd {
                r.insert(v);
            }
            let offset = bd.len();
            let mut labels = Vec::new();
            for (i, (rk, v)) in rep_vecs.iter().enumerate() {
                if *rk == kx {
                    r.insert(v);
                    labels.push(i);
                }
            }
            let combo = r.solve(&target).ok_or_else(|| {
                Error::NoSolution(format!("{} class in block {:?} is not a cocycle", kind.label(), kx))
            })?;
            for (lab, q) in combo {
                if lab >= offset {
                    let i = labels[lab - offset];
                    coords[i] = coords[i].add_ref(&PiPoly::monomial(q, level + k as i32));
                }
            }
        }
        Ok(CohomologyClass {
            kind,
            degree: k,
            coords,
        })
    }

    /// A cochain `γ` with `Dγ = e`, if `e` is a coboundary.
    pub fn primitive(&self, kind: ComplexKind, e: &ConeElement) -> Result<ConeElement> {
        let k = e.degree();
        if k == 0 {
            return if e.is_zero() {
                Ok(ConeElement::new(TrigForm::zero(e.a.dim(), 0), TrigForm::zero(self.model.n, 0)))
            } else {
                Err(Error::NoSolution("nonzero degree-0 cochain is not exact".into()))
            };
        }
        let (a_dim, n) = match kind {
            ComplexKind::Lagrangian => (self.model.n, self.model.n),
            _ => (self.model.dim(), self.model.n),
        };
        let mut out = ConeElement::new(TrigForm::zero(a_dim, k - 1), TrigForm::zero(n, k.saturating_sub(2)));
        for ((kx, level), target) in self.vectorize(kind, e)? {
            let b = self.block(&kx);
            let (bd, pre) = b.coboundaries(kind, k);
            let mut r = Reducer::new();
            for v in &bd {
                r.insert(v);
            }
            let combo = r
                .solve(&target)
                .ok_or_else(|| Error::NoSolution(format!("{} cochain is not exact", kind.label())))?;
            let mut g = SparseVec::new();
            for (lab, q) in combo {
                linalg::axpy(&mut g, &q, &pre[lab]);
            }
            // preimage sits one degree lower at the same level
            out = out.add(&self.to_element(kind, k - 1, &kx, level, &g));
        }
        Ok(out)
    }

    /// Coordinates of a closed relative form in `H^k(M,L)`, with the violated condition named.
    pub fn class_coordinates(&self, eta: &TrigForm) -> Result<CohomologyClass> {
        let d = eta.exterior_derivative();
        if !d.is_zero() {
            return Err(Error::NotClosed(d.num_terms()));
        }
        let r = self.model.restrict(eta);
        if !r.is_zero() {
            return Err(Error::NotRelative(r.num_terms()));
        }
        self.coordinates(ComplexKind::Relative, &ConeElement::from_form(&self.model, eta.clone()))
    }

    /// Coordinates of a closed form on `M` in `H^k(M)`.
    pub fn absolute_coordinates(&self, eta: &TrigForm) -> Result<CohomologyClass> {
        let d = eta.exterior_derivative();
        if !d.is_zero() {
            return Err(Error::NotClosed(d.num_terms()));
        }
        self.coordinates(ComplexKind::Absolute, &ConeElement::from_form(&self.model, eta.clone()))
    }

    /// A relative `γ` with `dγ = η` for an exact relative `η`.
    pub fn relative_primitive(&self, eta: &TrigForm) -> Result<TrigForm> {
        Ok(self
            .primitive(ComplexKind::Relative, &ConeElement::from_form(&self.model, eta.clone()))?
            .a)
    }

    /// `I : H^k(M,L) → H^k(Cone)`, `[η] ↦ [(η, 0)]`.
    pub fn iso_i(&self, c: &CohomologyClass) -> Result<CohomologyClass> {
        if c.kind != ComplexKind::Relative {
            return Err(Error::Precondition("I expects a relative class".into()));
        }
        let eta = self.combine(ComplexKind::Relative, c);
        if !self.model.is_relative(&eta.a) {
            return Err(Error::NotRelative(self.model.restrict(&eta.a).num_terms()));
        }
        self.coordinates(ComplexKind::Cone, &ConeElement::from_form(&self.model, eta.a))
    }

    /// `J : H^k(Cone) → H^k(M,L)`, `[(η, β)] ↦ [η − d β̃]` with the canonical extension.
    pub fn iso_j(&self, c: &CohomologyClass) -> Result<CohomologyClass> {
        if c.kind != ComplexKind::Cone {
            return Err(Error::Precondition("J expects a cone class".into()));
        }
        let e = self.combine(ComplexKind::Cone, c);
        self.iso_j_element(&e, |b| self.model.extend(b))
    }

    /// `J` on a representative with a caller-supplied extension map.
    pub fn iso_j_element(&self, e: &ConeElement, extend: impl Fn(&TrigForm) -> TrigForm) -> Result<CohomologyClass> {
        let (ok, res) = is_cocycle(&self.model, e);
        if !ok {
            return Err(Error::NotCocycle(format!("residual {:?}", res)));
        }
        let ext = extend(&e.b);
        if self.model.restrict(&ext) != e.b {
            return Err(Error::Precondition("extension does not restrict to β".into()));
        }
        let zeta = e.a.sub(&ext.exterior_derivative());
        self.class_coordinates(&zeta)
    }

    /// The cochain `Σ c_i rep_i`.
    pub fn combine(&self, kind: ComplexKind, c: &CohomologyClass) -> ConeElement {
        let coh = self.cohomology(kind, c.degree);
        let mut out = ConeElement::new(
            TrigForm::zero(
                if kind == ComplexKind::Lagrangian { self.model.n } else { self.model.dim() },
                c.degree,
            ),
            TrigForm::zero(self.model.n, c.degree.saturating_sub(1)),
        );
        for (ci, r) in c.coords.iter().zip(&coh.reps) {
            out = out.add(&r.scale_coeff(ci));
        }
        out
    }

    /// Rank of `H^k(M) → H^k(L)` computed on representatives.
    pub fn restriction_rank(&self, k: usize) -> Result<usize> {
        if k > self.model.n {
            return Ok(0);
        }
        let coh = self.cohomology(ComplexKind::Absolute, k);
        let mut rows: Vec<SparseVec> = Vec::new();
        for r in &coh.reps {
            let restricted = self.model.restrict(&r.a);
            let c = self.coordinates(
                ComplexKind::Lagrangian,
                &ConeElement::new(restricted, TrigForm::zero(self.model.n, k.saturating_sub(1))),
            )?;
            let mut v = SparseVec::new();
            for (i, x) in c.coords.iter().enumerate() {
                let q = x.as_rational().ok_or_else(|| Error::Precondition("non-rational restriction".into()))?;
                if !q.is_zero() {
                    v.insert(i, q);
                }
            }
            rows.push(v);
        }
        Ok(linalg::rank(&rows))
    }

    /// `dim ker(H^k(M)→H^k(L)) + dim coker(H^{k−1}(M)→H^{k−1}(L))`.
    pub fn les_relative_dim(&self, k: usize) -> Result<usize> {
        let hm = self.cohomology(ComplexKind::Absolute, k).dim;
        let ker = hm - self.restriction_rank(k)?;
        let coker = if k == 0 {
            0
        } else {
            let hl = if k - 1 <= self.model.n {
                self.cohomology(ComplexKind::Lagrangian, k - 1).dim
            } else {
                0
            };
            hl - self.restriction_rank(k - 1)?
        };
        Ok(ker + coker)
    }
}

/// Largest `|k_i|` of a cone element (for budget selection).
pub fn max_freq(e: &ConeElement) -> i64 {
    e.a.max_freq().max(e.b.max_freq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{rat, rat_int};
    use smallvec::smallvec;

    fn t2() -> (TorusModel, Engine) {
        let m = TorusModel::new(1);
        (m, Engine::new(m, 2))
    }

    #[test]
    fn torus_dims() {
        let (_, e) = t2();
        assert_eq!(e.dims(ComplexKind::Absolute), vec![1, 2, 1]);
        assert_eq!(e.dims(ComplexKind::Lagrangian), vec![1, 1]);
        assert_eq!(e.dims(ComplexKind::Relative), vec![0, 1, 1]);
        assert_eq!(e.cohomology(ComplexKind::Cone, 2).dim, 1);
        for k in 0..=2 {
            assert_eq!(e.les_relative_dim(k).unwrap(), e.cohomology(ComplexKind::Relative, k).dim);
            assert!(e.cohomology(ComplexKind::Absolute, k).block_dims.iter().all(|(kx, _)| is_zero(kx)));
        }
    }

    #[test]
    fn cone_differential_example() {
        let m = TorusModel::new(1);
        let a = TrigForm::monomial(2, &[0], TrigScalar::sin(smallvec![0, 1], rat_int(1)));
        let e = ConeElement::from_form(&m, a.clone());
        let d = cone_differential(&m, &e);
        assert_eq!(d.a, a.exterior_derivative());
        assert!(d.b.is_zero());
        let bad = ConeElement::from_form(&m, TrigForm::monomial(2, &[0], TrigScalar::cos(smallvec![0, 1], rat_int(1))));
        assert!(!is_cocycle(&m, &bad).0);
        let good = ConeElement::new(TrigForm::basis(2, &[0, 1]), TrigForm::basis(1, &[0]).scale(&rat(3, 2)));
        assert!(is_cocycle(&m, &good).0);
    }

    #[test]
    fn coordinates_with_pi_levels() {
        let (m, e) = t2();
        // ω + dβ with β = ε sin(2πy) dx
        let beta = TrigForm::monomial(2, &[0], TrigScalar::sin(smallvec![0, 1], rat(1, 20)));
        let w = m.omega_can::<PiPoly>().scale(&rat_int(3)).add(&beta.exterior_derivative());
        let c = e.class_coordinates(&w).unwrap();
        assert_eq!(c.coords, vec![PiPoly::int(3)]);
        let g = e.relative_primitive(&beta.exterior_derivative()).unwrap();
        assert_eq!(g.exterior_derivative(), beta.exterior_derivative());
        assert!(m.is_relative(&g));
    }

    #[test]
    fn t4_dims() {
        let m = TorusModel::new(2);
        let e = Engine::new(m, 1);
        assert_eq!(e.dims(ComplexKind::Relative), vec![0, 2, 5, 4, 1]);
        assert_eq!(e.dims(ComplexKind::Absolute), vec![1, 4, 6, 4, 1]);
    }

    #[test]
    fn budget_error() {
        let (m, e) = t2();
        let w = TrigForm::monomial(2, &[0, 1], TrigScalar::cos(smallvec![5, 0], rat_int(1)));
        assert!(matches!(e.class_coordinates(&w), Err(Error::Budget { .. })));
        let _ = m;
    }
}
