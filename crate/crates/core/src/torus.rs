//! The model `M = T^{2n}` with coordinates `(x₁..x_n, y₁..y_n)` and `L = {y = 0}`.

use num_traits::Zero;

use crate::coeff::{rat_int, Coeff, PiPoly, Rational};
use crate::exterior::{AltField, Kind, TrigForm, TrigMultiVector};
use crate::trig::{zero_freq, Freq, TrigScalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusModel {
    pub n: usize,
}

impl TorusModel {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Lagrangian dimension must be at least 1");
        TorusModel { n }
    }

    /// Total dimension `N = 2n`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn x(&self, i: usize) -> u8 {
        i as u8
    }

    pub fn y(&self, i: usize) -> u8 {
        (self.n + i) as u8
    }

    pub fn is_y(&self, idx: usize) -> bool {
        idx >= self.n
    }

    pub fn coordinate_name(&self, idx: usize) -> String {
        if idx < self.n {
            format!("x{}", idx + 1)
        } else {
            format!("y{}", idx - self.n + 1)
        }
    }

    /// `ω_can = Σ dx_i ∧ dy_i`.
    pub fn omega_can<C: Coeff>(&self) -> TrigForm<C> {
        self.canonical_pair()
    }

    /// `π_can = Σ ∂x_i ∧ ∂y_i`, so that `π♯dx = ∂y` and `π♯dy = −∂x`.
    pub fn pi_can<C: Coeff>(&self) -> TrigMultiVector<C> {
        self.canonical_pair()
    }

    fn canonical_pair<K: Kind, C: Coeff>(&self) -> AltField<K, C> {
        let mut out = AltField::zero(self.dim(), 2);
        for i in 0..self.n {
            out = out.add(&AltField::basis(self.dim(), &[self.x(i), self.y(i)]));
        }
        out
    }

    /// Matrix of `ι_L : T^n → T^{2n}`, `x ↦ (x, 0)`.
    pub fn inclusion_matrix(&self) -> Vec<Vec<i64>> {
        (0..self.dim())
            .map(|r| (0..self.n).map(|c| i64::from(r == c)).collect())
            .collect()
    }

    /// `ι_L^*`: substitute `y = 0` and drop every `dy` leg.
    pub fn restrict<C: Coeff>(&self, w: &TrigForm<C>) -> TrigForm<C> {
        let n = self.n;
        let mut out = TrigForm::zero(n, w.degree());
        for (idx, s) in w.terms() {
            if idx.iter().any(|&i| self.is_y(i as usize)) {
                continue;
            }
            out.add_term(idx.clone(), s.map_freq(|k| k[..n].iter().copied().collect()));
        }
        out
    }

    /// The canonical extension of a form on `L`: `y`-independent with no `dy` legs.
    pub fn extend<C: Coeff>(&self, b: &TrigForm<C>) -> TrigForm<C> {
        let n = self.n;
        let mut out = TrigForm::zero(self.dim(), b.degree());
        for (idx, s) in b.terms() {
            out.add_term(idx.clone(), s.map_freq(|k| embed_freq(k, n)));
        }
        out
    }

    /// Pullback along the projection `p : T*L → L` (identical to [`Self::extend`] on this model).
    pub fn project_pullback<C: Coeff>(&self, b: &TrigForm<C>) -> TrigForm<C> {
        self.extend(b)
    }

    /// `θ_taut = Σ y_i dx_i` is not periodic; its pullback by a section is computed
    /// directly by substitution (see the chart module).
    pub fn constant<C: Coeff>(&self, q: &Rational) -> TrigScalar<C> {
        TrigScalar::constant(self.dim(), C::from_rational(q))
    }

    /// Vertical vector field `Σ g_i ∂y_i` for `σ = Σ g_i dx_i`.
    pub fn vertical_lift<C: Coeff>(&self, sigma: &TrigForm<C>) -> TrigMultiVector<C> {
        let n = self.n;
        let mut out = TrigMultiVector::zero(self.dim(), 1);
        for (idx, s) in sigma.terms() {
            out.add_term(
                smallvec::smallvec![self.y(idx[0] as usize)],
                s.map_freq(|k| embed_freq(k, n)),
            );
        }
        out
    }

    /// True when `ι_L^* w = 0`.
    pub fn is_relative<C: Coeff>(&self, w: &TrigForm<C>) -> bool {
        self.restrict(w).is_zero()
    }

    pub fn volume_rational(&self, idx: &[u8]) -> TrigForm<PiPoly> {
        TrigForm::basis(self.dim(), idx)
    }

    pub fn unit(&self) -> TrigScalar<PiPoly> {
        TrigScalar::from_rational(self.dim(), rat_int(1))
    }
}

/// `k ↦ (k, 0)`.
pub fn embed_freq(k: &Freq, n: usize) -> Freq {
    let mut out = zero_freq(2 * n);
    out[..n].copy_from_slice(&k[..n]);
    out
}

/// Evaluates `TrigScalar` frequency dot product exactly as a rational (for quarter-shift checks).
pub fn freq_dot(k: &Freq, s: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for (a, b) in k.iter().zip(s) {
        acc += rat_int(*a) * b;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::rat;

    #[test]
    fn restrict_matches_affine_pullback() {
        let m = TorusModel::new(2);
        let w: TrigForm = TrigForm::monomial(
            4,
            &[0, 1],
            TrigScalar::cos(smallvec::smallvec![1, 0, 2, -1], rat(3, 5)),
        )
        .add(&TrigForm::basis(4, &[0, 2]));
        let a = w.pullback_affine(&m.inclusion_matrix(), None).unwrap();
        assert_eq!(m.restrict(&w), a);
    }

    #[test]
    fn extend_round_trip() {
        let m = TorusModel::new(1);
        let b: TrigForm = TrigForm::monomial(1, &[0], TrigScalar::cos(smallvec::smallvec![2], rat(1, 2)));
        assert_eq!(m.restrict(&m.extend(&b)), b);
        assert!(m.is_relative(&m.omega_can::<PiPoly>()));
    }
}
