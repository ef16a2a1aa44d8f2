//! Differential forms and multivector fields with trigonometric coefficients.
//!
//! Both are stored as maps from strictly increasing index tuples to
//! [`TrigScalar`] coefficients. Conventions:
//! - `ι_{v₁∧…∧v_q} = ι_{v₁} ∘ … ∘ ι_{v_q}` (the last leg is contracted first),
//!   so `ι_{∂x∧∂y}(dx∧dy) = −1`;
//! - forms evaluate on vectors by the determinant pairing, `(dx∧dy)(e₁,e₂) = 1`;
//! - the Schouten bracket uses odd coordinates `ξ_i = ∂_i` and right derivatives.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use smallvec::SmallVec;

use crate::coeff::{Coeff, PiPoly, Rational};
use crate::error::{Error, Result};
use crate::trig::{CompiledScalar, Freq, TrigScalar};

pub type Indices = SmallVec<[u8; 4]>;

pub trait Kind: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    const NAME: &'static str;
    const SYMBOL: &'static str;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Covariant;
#[derive(Clone, Debug, PartialEq)]
pub struct Contravariant;

impl Kind for Covariant {
    const NAME: &'static str = "form";
    const SYMBOL: &'static str = "d";
}

impl Kind for Contravariant {
    const NAME: &'static str = "multivector";
    const SYMBOL: &'static str = "∂";
}

/// An alternating field of fixed degree on `T^dim`.
#[derive(Clone, PartialEq)]
pub struct AltField<K: Kind, C: Coeff = PiPoly> {
    dim: usize,
    degree: usize,
    terms: BTreeMap<Indices, TrigScalar<C>>,
    _kind: PhantomData<K>,
}

pub type TrigForm<C = PiPoly> = AltField<Covariant, C>;
pub type TrigMultiVector<C = PiPoly> = AltField<Contravariant, C>;

/// Sorts `idx` in place and returns the sign of the permutation, or `None` on a repeat.
pub fn sort_sign(idx: &mut [u8]) -> Option<i32> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

fn signed<C: Coeff>(s: &TrigScalar<C>, sign: i32) -> TrigScalar<C> {
    if sign < 0 {
        s.neg()
    } else {
        s.clone()
    }
}

/// Strictly increasing `k`-subsets of `0..n`.
pub fn subsets(n: usize, k: usize) -> Vec<Indices> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.iter().map(|&i| i as u8).collect());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exact determinant of a small rational matrix.
pub fn rational_det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    if n == 0 {
        return Rational::one();
    }
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c in col..n {
                let v = &a[col][c] * &f;
                a[r][c] -= v;
            }
        }
    }
    det
}

impl<K: Kind, C: Coeff> fmt::Debug for AltField<K, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}<dim {}, deg {}>{{", K::NAME, self.dim, self.degree)?;
        for (i, (idx, s)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{idx:?}: {s:?}")?;
        }
        write!(f, "}}")
    }
}

impl<K: Kind, C: Coeff> AltField<K, C> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        AltField {
            dim,
            degree,
            terms: BTreeMap::new(),
            _kind: PhantomData,
        }
    }

    /// A degree-0 field.
    pub fn scalar(dim: usize, f: TrigScalar<C>) -> Self {
        let mut out = Self::zero(dim, 0);
        out.add_term(SmallVec::new(), f);
        out
    }

    /// The constant basis element `dx_I` or `∂_I` (indices in any order, sign applied).
    pub fn basis(dim: usize, idx: &[u8]) -> Self {
        Self::monomial(dim, idx, TrigScalar::constant(dim, C::one()))
    }

    pub fn monomial(dim: usize, idx: &[u8], f: TrigScalar<C>) -> Self {
        let mut out = Self::zero(dim, idx.len());
        let mut sorted: Indices = idx.iter().copied().collect();
        if let Some(sign) = sort_sign(&mut sorted) {
            out.add_term(sorted, signed(&f, sign));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.values().map(|s| s.len()).sum()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Indices, &TrigScalar<C>)> {
        self.terms.iter()
    }

    pub fn component(&self, idx: &[u8]) -> TrigScalar<C> {
        self.terms.get(idx).cloned().unwrap_or_default()
    }

    /// Adds `f · e_I` for a strictly increasing `I`.
    pub fn add_term(&mut self, idx: Indices, f: TrigScalar<C>) {
        debug_assert_eq!(idx.len(), self.degree);
        if f.is_zero() {
            return;
        }
        match self.terms.get_mut(&idx) {
            Some(s) => {
                s.add_assign(&f);
                if s.is_zero() {
                    self.terms.remove(&idx);
                }
            }
            None => {
                self.terms.insert(idx, f);
            }
        }
    }

    fn check_same_shape(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        assert!(
            self.degree == other.degree || self.is_zero() || other.is_zero(),
            "degree mismatch {} vs {}",
            self.degree,
            other.degree
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_same_shape(other);
        let mut out = if self.is_zero() && self.degree != other.degree {
            Self::zero(self.dim, other.degree)
        } else {
            self.clone()
        };
        for (idx, s) in &other.terms {
            out.add_term(idx.clone(), s.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_scalars(|s| s.neg())
    }

    pub fn scale(&self, q: &Rational) -> Self {
        self.map_scalars(|s| s.scale(q))
    }

    pub fn scale_coeff(&self, c: &C) -> Self {
        self.map_scalars(|s| s.scale_coeff(c))
    }

    pub fn mul_scalar(&self, f: &TrigScalar<C>) -> Self {
        self.map_scalars(|s| s.mul(f))
    }

    pub fn map_scalars(&self, f: impl Fn(&TrigScalar<C>) -> TrigScalar<C>) -> Self {
        let mut out = Self::zero(self.dim, self.degree);
        for (idx, s) in &self.terms {
            out.add_term(idx.clone(), f(s));
        }
        out
    }

    pub fn map_coeff<D: Coeff>(&self, f: impl Fn(&C) -> D) -> AltField<K, D> {
        let mut out = AltField::zero(self.dim, self.degree);
        for (idx, s) in &self.terms {
            out.add_term(idx.clone(), s.map_coeff(&f));
        }
        out
    }

    pub fn to_numeric(&self) -> AltField<K, f64> {
        self.map_coeff(|c| c.to_f64())
    }

    /// Graded product; the same rule serves `∧` of forms and of multivectors.
    pub fn wedge(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = Self::zero(self.dim, self.degree + other.degree);
        for (i1, s1) in &self.terms {
            for (i2, s2) in &other.terms {
                let mut idx: Indices = i1.iter().chain(i2.iter()).copied().collect();
                if let Some(sign) = sort_sign(&mut idx) {
                    out.add_term(idx, signed(&s1.mul(s2), sign));
                }
            }
        }
        out
    }

    /// Applies `∂/∂x_j` to every coefficient.
    pub fn partial(&self, j: usize) -> Self {
        self.map_scalars(|s| s.partial(j))
    }

    pub fn map_freq(&self, dim: usize, f: impl Fn(&Freq) -> Freq) -> Self {
        let mut out = Self::zero(dim, self.degree);
        for (idx, s) in &self.terms {
            out.add_term(idx.clone(), s.map_freq(&f));
        }
        out
    }

    pub fn max_freq(&self) -> i64 {
        self.terms.values().map(|s| s.max_freq()).max().unwrap_or(0)
    }

    pub fn l1_bound(&self) -> f64 {
        self.terms.values().map(|s| s.l1_bound()).fold(0.0, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.values().all(|s| s.is_constant())
    }

    /// True when no coefficient depends on a coordinate selected by `idx`.
    pub fn independent_of(&self, idx: impl Fn(usize) -> bool + Copy) -> bool {
        self.terms.values().all(|s| s.independent_of(idx))
    }

    pub fn filter_freq(&self, keep: impl Fn(&Freq) -> bool + Copy) -> Self {
        self.map_scalars(|s| s.filter_freq(keep))
    }

    /// Keeps only the terms whose index set satisfies `keep`.
    pub fn filter_indices(&self, keep: impl Fn(&Indices) -> bool) -> Self {
        let mut out = Self::zero(self.dim, self.degree);
        for (idx, s) in &self.terms {
            if keep(idx) {
                out.add_term(idx.clone(), s.clone());
            }
        }
        out
    }

    /// Exterior-power image under the linear map `e_i ↦ Σ_j m[i][j] e'_j` (`m` is `dim × new_dim`).
    pub fn exterior_power_map<K2: Kind>(&self, m: &[Vec<Rational>], new_dim: usize) -> AltField<K2, C> {
        let mut out = AltField::<K2, C>::zero(new_dim, self.degree);
        let targets = subsets(new_dim, self.degree);
        for (idx, s) in &self.terms {
            for j in &targets {
                let sub: Vec<Vec<Rational>> = idx
                    .iter()
                    .map(|&a| j.iter().map(|&b| m[a as usize][b as usize].clone()).collect())
                    .collect();
                let det = rational_det(&sub);
                if !det.is_zero() {
                    out.add_term(j.clone(), s.scale(&det));
                }
            }
        }
        out
    }

    /// Coefficient values at a point, as `(indices, value)` pairs.
    pub fn eval_components(&self, p: &[f64]) -> Vec<(Indices, f64)> {
        self.terms.iter().map(|(i, s)| (i.clone(), s.eval(p))).collect()
    }

    /// The antisymmetric matrix `M_ij = coefficient of e_i∧e_j` (degree 2 only).
    pub fn matrix_at(&self, p: &[f64]) -> DMatrix<f64> {
        assert_eq!(self.degree, 2, "matrix_at needs degree 2");
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (idx, s) in &self.terms {
            let v = s.eval(p);
            let (i, j) = (idx[0] as usize, idx[1] as usize);
            m[(i, j)] += v;
            m[(j, i)] -= v;
        }
        m
    }

    /// Exact constant matrix for a constant-coefficient degree-2 field.
    pub fn constant_matrix(&self) -> Option<Vec<Vec<C>>> {
        if self.degree != 2 || !self.is_constant() {
            return None;
        }
        let mut m = vec![vec![C::zero(); self.dim]; self.dim];
        for (idx, s) in &self.terms {
            let v = s.constant_part();
            let (i, j) = (idx[0] as usize, idx[1] as usize);
            m[i][j] = m[i][j].add_ref(&v);
            m[j][i] = m[j][i].sub_ref(&v);
        }
        Some(m)
    }

    /// Builds a degree-2 field from an antisymmetric matrix of constants.
    pub fn from_matrix(m: &[Vec<C>]) -> Self {
        let dim = m.len();
        let mut out = Self::zero(dim, 2);
        for i in 0..dim {
            for j in i + 1..dim {
                out.add_term(
                    SmallVec::from_slice(&[i as u8, j as u8]),
                    TrigScalar::constant(dim, m[i][j].clone()),
                );
            }
        }
        out
    }

    pub fn compile(&self) -> CompiledField {
        CompiledField {
            dim: self.dim,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(i, s)| (i.iter().map(|&v| v as usize).collect(), s.compile()))
                .collect(),
        }
    }
}

impl<C: Coeff> TrigForm<C> {
    pub fn exterior_derivative(&self) -> Self {
        let mut out = Self::zero(self.dim, self.degree + 1);
        for (idx, s) in &self.terms {
            for j in 0..self.dim {
                let ds = s.partial(j);
                if ds.is_zero() {
                    continue;
                }
                let mut new: Indices = std::iter::once(j as u8).chain(idx.iter().copied()).collect();
                if let Some(sign) = sort_sign(&mut new) {
                    out.add_term(new, signed(&ds, sign));
                }
            }
        }
        out
    }

    /// `ι_{∂_j}` on a form.
    pub fn interior_basis(&self, j: u8) -> Self {
        let mut out = Self::zero(self.dim, self.degree.saturating_sub(1));
        if self.degree == 0 {
            return out;
        }
        for (idx, s) in &self.terms {
            if let Some(pos) = idx.iter().position(|&i| i == j) {
                let mut rest = idx.clone();
                rest.remove(pos);
                out.add_term(rest, signed(s, if pos % 2 == 0 { 1 } else { -1 }));
            }
        }
        out
    }

    /// `ι_P ω` with `ι_{v₁∧…∧v_q} = ι_{v₁}∘…∘ι_{v_q}`.
    pub fn contract(&self, p: &TrigMultiVector<C>) -> Self {
        assert_eq!(self.dim, p.dim, "dimension mismatch");
        if p.degree > self.degree {
            return Self::zero(self.dim, 0);
        }
        let mut out = Self::zero(self.dim, self.degree - p.degree);
        for (jdx, f) in &p.terms {
            let mut cur = self.clone();
            for &j in jdx.iter().rev() {
                cur = cur.interior_basis(j);
            }
            out = out.add(&cur.mul_scalar(f));
        }
        out
    }

    /// `L_X ω = X(f) dx_I + f Σ_s dx_{i₁}∧…∧dX^{i_s}∧…∧dx_{i_p}`.
    pub fn lie_derivative(&self, x: &TrigMultiVector<C>) -> Result<Self> {
        if x.degree != 1 {
            return Err(Error::Degree(format!(
                "Lie derivative needs a vector field, got degree {}",
                x.degree
            )));
        }
        let mut out = Self::zero(self.dim, self.degree);
        for (idx, f) in &self.terms {
            let mut xf = TrigScalar::zero();
            for (j, xj) in &x.terms {
                xf.add_assign(&xj.mul(&f.partial(j[0] as usize)));
            }
            out.add_term(idx.clone(), xf);
            for s in 0..idx.len() {
                let xi = x.component(&[idx[s]]);
                if xi.is_zero() {
                    continue;
                }
                for j in 0..self.dim {
                    let dxi = xi.partial(j);
                    if dxi.is_zero() {
                        continue;
                    }
                    let mut new = idx.clone();
                    new[s] = j as u8;
                    if let Some(sign) = sort_sign(&mut new) {
                        out.add_term(new, signed(&f.mul(&dxi), sign));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Pullback along `x = A x' + s`, with `A` an integer `dim × new_dim` matrix.
    pub fn pullback_affine(&self, a: &[Vec<i64>], shift: Option<&[Rational]>) -> Result<Self> {
        if a.len() != self.dim {
            return Err(Error::Dimension(format!(
                "matrix has {} rows, form lives on T^{}",
                a.len(),
                self.dim
            )));
        }
        let new_dim = a.first().map_or(0, |r| r.len());
        if a.iter().any(|r| r.len() != new_dim) {
            return Err(Error::Dimension("ragged matrix".into()));
        }
        if let Some(s) = shift {
            if s.len() != self.dim {
                return Err(Error::Dimension("shift length".into()));
            }
        }
        let m: Vec<Vec<Rational>> = a
            .iter()
            .map(|r| r.iter().map(|&v| Rational::from_integer(v.into())).collect())
            .collect();
        let mut pulled = Self::zero(self.dim, self.degree);
        for (idx, s) in &self.terms {
            pulled.add_term(idx.clone(), s.pullback_affine(a, shift)?);
        }
        // The coefficient pullback produced frequencies of length new_dim already.
        let mut out: TrigForm<C> = pulled.exterior_power_map(&m, new_dim);
        out.dim = new_dim;
        Ok(out)
    }

    /// `ω_p(v₁, …, v_p)` with the determinant pairing.
    pub fn evaluate(&self, point: &[f64], args: &[Vec<f64>]) -> Result<f64> {
        if args.len() != self.degree {
            return Err(Error::Arity {
                expected: self.degree,
                got: args.len(),
            });
        }
        let mut total = 0.0;
        for (idx, s) in &self.terms {
            let m = DMatrix::from_fn(self.degree, self.degree, |r, c| args[c][idx[r] as usize]);
            total += s.eval(point) * m.determinant();
        }
        Ok(total)
    }
}

impl<C: Coeff> TrigMultiVector<C> {
    /// The right derivative `∂_r/∂ξ_i`.
    fn odd_derivative(&self, i: u8) -> Self {
        let mut out = Self::zero(self.dim, self.degree.saturating_sub(1));
        if self.degree == 0 {
            return out;
        }
        let p = self.degree;
        for (idx, s) in &self.terms {
            if let Some(pos) = idx.iter().position(|&v| v == i) {
                let mut rest = idx.clone();
                rest.remove(pos);
                out.add_term(rest, signed(s, if (p - 1 - pos) % 2 == 0 { 1 } else { -1 }));
            }
        }
        out
    }

    /// Schouten–Nijenhuis bracket.
    pub fn schouten(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let (p, q) = (self.degree, other.degree);
        let deg = (p + q).checked_sub(1);
        let Some(deg) = deg else {
            return Self::zero(self.dim, 0);
        };
        let mut out = Self::zero(self.dim, deg);
        let sign = if ((p as i64 - 1) * (q as i64 - 1)).rem_euclid(2) == 1 { -1 } else { 1 };
        for i in 0..self.dim {
            let a = self.odd_derivative(i as u8);
            if !a.is_zero() {
                out = out.add(&a.wedge(&other.partial(i)));
            }
            let b = other.odd_derivative(i as u8);
            if !b.is_zero() {
                let t = b.wedge(&self.partial(i));
                out = if sign > 0 { out.sub(&t) } else { out.add(&t) };
            }
        }
        if out.is_zero() {
            out.degree = deg;
        }
        out
    }

    /// `X(f)` for a vector field `X`.
    pub fn apply(&self, f: &TrigScalar<C>) -> TrigScalar<C> {
        let mut out = TrigScalar::zero();
        for (j, xj) in &self.terms {
            out.add_assign(&xj.mul(&f.partial(j[0] as usize)));
        }
        out
    }
}

/// `f64` evaluation form of an [`AltField`].
#[derive(Clone, Debug)]
pub struct CompiledField {
    pub dim: usize,
    pub degree: usize,
    terms: Vec<(Vec<usize>, CompiledScalar)>,
}

impl CompiledField {
    /// Antisymmetric coefficient matrix of a degree-2 field.
    pub fn matrix(&self, p: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (idx, s) in &self.terms {
            let v = s.eval(p);
            m[(idx[0], idx[1])] += v;
            m[(idx[1], idx[0])] -= v;
        }
        m
    }

    /// Components of a degree-1 field.
    pub fn vector(&self, p: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for (idx, s) in &self.terms {
            v[idx[0]] += s.eval(p);
        }
        v
    }

    /// Components and Jacobian `J[i][j] = ∂_j v_i` of a degree-1 field.
    pub fn vector_jacobian(&self, p: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let mut v = vec![0.0; self.dim];
        let mut jac = DMatrix::zeros(self.dim, self.dim);
        let mut g = vec![0.0; self.dim];
        for (idx, s) in &self.terms {
            v[idx[0]] += s.eval_grad(p, &mut g);
            for (j, gj) in g.iter().enumerate() {
                jac[(idx[0], j)] += gj;
            }
        }
        (v, jac)
    }

    /// Matrix at `p` and its partial derivatives `∂_k M` (degree 2 only).
    pub fn matrix_with_partials(&self, p: &[f64]) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        let mut dm = vec![DMatrix::zeros(n, n); n];
        let mut g = vec![0.0; n];
        for (idx, s) in &self.terms {
            let v = s.eval_grad(p, &mut g);
            let (i, j) = (idx[0], idx[1]);
            m[(i, j)] += v;
            m[(j, i)] -= v;
            for k in 0..n {
                dm[k][(i, j)] += g[k];
                dm[k][(j, i)] -= g[k];
            }
        }
        (m, dm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{rat, rat_int};
    use crate::trig::Phase;
    use smallvec::smallvec;

    type F = TrigForm;
    type V = TrigMultiVector;

    fn sin(k: &[i64], q: Rational) -> TrigScalar {
        TrigScalar::sin(k.iter().copied().collect(), q)
    }
    fn cos(k: &[i64], q: Rational) -> TrigScalar {
        TrigScalar::cos(k.iter().copied().collect(), q)
    }
    fn two_pi(c: i64) -> PiPoly {
        PiPoly::monomial(rat_int(2 * c), 1)
    }

    #[test]
    fn d_of_sin_y_dx() {
        let w = F::monomial(2, &[0], sin(&[0, 1], rat_int(1)));
        let dw = w.exterior_derivative();
        let expected = F::monomial(2, &[1, 0], TrigScalar::mode(smallvec![0, 1], Phase::Cos, two_pi(1)));
        assert_eq!(dw, expected);
        assert!(dw.exterior_derivative().is_zero());
    }

    #[test]
    fn wedge_product_to_sum() {
        let a = F::monomial(2, &[0], sin(&[1, 0], rat_int(1)));
        let b = F::monomial(2, &[1], sin(&[1, 0], rat_int(1)));
        let expected = F::monomial(
            2,
            &[0, 1],
            TrigScalar::from_rational(2, rat(1, 2)).add(&cos(&[2, 0], rat(-1, 2))),
        );
        assert_eq!(a.wedge(&b), expected);
        assert!(a.wedge(&a).is_zero());
    }

    #[test]
    fn contraction_signs() {
        let vol = F::basis(2, &[0, 1]);
        assert_eq!(vol.contract(&V::basis(2, &[0])), F::basis(2, &[1]));
        let x = V::monomial(2, &[1], sin(&[1, 0], rat_int(1)));
        assert_eq!(vol.contract(&x), F::monomial(2, &[0], sin(&[1, 0], rat_int(-1))));
        let c = vol.contract(&V::basis(2, &[0, 1]));
        assert_eq!(c, F::scalar(2, TrigScalar::from_rational(2, rat_int(-1))));
    }

    #[test]
    fn lie_derivative_example() {
        let x = V::monomial(2, &[1], sin(&[1, 0], rat_int(1)));
        let l = F::basis(2, &[1]).lie_derivative(&x).unwrap();
        let expected = F::monomial(2, &[0], TrigScalar::mode(smallvec![1, 0], Phase::Cos, two_pi(1)));
        assert_eq!(l, expected);
        assert!(F::basis(2, &[0, 1]).lie_derivative(&V::basis(2, &[0])).unwrap().is_zero());
        assert!(F::basis(2, &[0]).lie_derivative(&V::basis(2, &[0, 1])).is_err());
    }

    #[test]
    fn schouten_examples() {
        assert!(V::basis(2, &[0]).schouten(&V::basis(2, &[1])).is_zero());
        let pi = V::basis(2, &[0, 1]);
        assert!(pi.schouten(&pi).is_zero());
        let x = V::monomial(2, &[1], sin(&[1, 0], rat_int(1)));
        let br = x.schouten(&V::basis(2, &[0]));
        let expected = V::monomial(2, &[1], TrigScalar::mode(smallvec![1, 0], Phase::Cos, two_pi(-1)));
        assert_eq!(br, expected);
        let f = V::scalar(2, cos(&[0, 1], rat_int(1)));
        assert_eq!(x.schouten(&f), V::scalar(2, x.apply(&cos(&[0, 1], rat_int(1)))));
    }

    #[test]
    fn restriction_to_l() {
        let a = vec![vec![1], vec![0]];
        assert!(F::basis(2, &[0, 1]).pullback_affine(&a, None).unwrap().is_zero());
        let s = F::monomial(2, &[0], sin(&[0, 1], rat_int(1)));
        assert!(s.pullback_affine(&a, None).unwrap().is_zero());
        let c = F::monomial(2, &[0], cos(&[0, 1], rat_int(1)));
        assert_eq!(c.pullback_affine(&a, None).unwrap(), F::basis(1, &[0]));
        assert!(c.pullback_affine(&[vec![1]], None).is_err());
    }

    #[test]
    fn evaluation() {
        let vol = F::basis(2, &[0, 1]);
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        assert_eq!(vol.evaluate(&[0.3, 0.1], &[e1.clone(), e2.clone()]).unwrap(), 1.0);
        assert_eq!(vol.evaluate(&[0.3, 0.1], &[e2, e1.clone()]).unwrap(), -1.0);
        let s = F::monomial(2, &[0], sin(&[1, 0], rat_int(1)));
        assert!((s.evaluate(&[0.25, 0.0], &[e1.clone()]).unwrap() - 1.0).abs() < 1e-15);
        assert!(s.evaluate(&[0.25, 0.0], &[e1.clone(), e1]).is_err());
    }

    #[test]
    fn subsets_enumerate() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 0), vec![Indices::new()]);
        assert!(subsets(2, 3).is_empty());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::random::{self, Shape};
    use proptest::prelude::*;

    fn form(seed: u64, dim: usize, degree: usize) -> TrigForm {
        random::field(&mut random::rng(seed), dim, degree, 3, Shape::default())
    }

    fn sign(e: usize) -> Rational {
        Rational::from_integer(if e % 2 == 0 { 1.into() } else { (-1).into() })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn d_squared_vanishes(seed in any::<u64>(), dim in 1usize..=4, p in 0usize..=3) {
            prop_assume!(p <= dim);
            let a = form(seed, dim, p);
            prop_assert!(a.exterior_derivative().exterior_derivative().is_zero());
        }

        #[test]
        fn wedge_graded_commutative(seed in any::<u64>(), dim in 2usize..=4, p in 0usize..=2, q in 0usize..=2) {
            prop_assume!(p + q <= dim);
            let (a, b) = (form(seed, dim, p), form(seed ^ 1, dim, q));
            prop_assert_eq!(a.wedge(&b), b.wedge(&a).scale(&sign(p * q)));
        }

        #[test]
        fn d_is_a_derivation(seed in any::<u64>(), dim in 2usize..=4, p in 0usize..=2, q in 0usize..=1) {
            prop_assume!(p + q < dim);
            let (a, b) = (form(seed, dim, p), form(seed ^ 2, dim, q));
            let lhs = a.wedge(&b).exterior_derivative();
            let rhs = a.exterior_derivative().wedge(&b).add(&a.wedge(&b.exterior_derivative()).scale(&sign(p)));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn cartan_formula(seed in any::<u64>(), dim in 1usize..=4, p in 0usize..=3) {
            prop_assume!(p <= dim);
            let a = form(seed, dim, p);
            let x: TrigMultiVector = random::field(&mut random::rng(seed ^ 3), dim, 1, 2, Shape::default());
            let lie = a.lie_derivative(&x).unwrap();
            let cartan = a.contract(&x).exterior_derivative().add(&a.exterior_derivative().contract(&x));
            prop_assert_eq!(lie, cartan);
        }
    }
}
