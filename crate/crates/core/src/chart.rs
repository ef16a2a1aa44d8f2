//! The chart identifying sub-tori near `L` with small sections of `T*L`.
//!
//! On the model the Weinstein map is the identity in coordinates:
//! `U = {|y_i| < 7/16}` and `V′ = U′ = {|y_i| < 1/4}`. A section
//! `σ = Σ g_i(x) dx_i` encodes the graph `{y = σ(x)}`.

use nalgebra::DMatrix;

use crate::coeff::PiPoly;
use crate::error::{Error, Result};
use crate::exterior::{TrigForm, TrigMultiVector};
use crate::symplectic::{grid, TwoFormField};
use crate::torus::TorusModel;
use crate::trig::{CompiledScalar, TrigScalar};

/// Half-width of the tube `V′`.
pub const CHART_RADIUS: f64 = 0.25;

/// A 1-form on `L` (coefficients in `x` only) describing a nearby sub-torus.
#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub model: TorusModel,
    pub sigma: TrigForm,
}

impl Section {
    pub fn new(model: TorusModel, sigma: TrigForm) -> Result<Self> {
        if sigma.dim() != model.n || (sigma.degree() != 1 && !sigma.is_zero()) {
            return Err(Error::Degree(format!(
                "a section is a 1-form on T^{}, got degree {} on T^{}",
                model.n,
                sigma.degree(),
                sigma.dim()
            )));
        }
        let sigma = if sigma.is_zero() { TrigForm::zero(model.n, 1) } else { sigma };
        Ok(Section { model, sigma })
    }

    pub fn zero(model: TorusModel) -> Self {
        Section {
            model,
            sigma: TrigForm::zero(model.n, 1),
        }
    }

    /// The component `g_i` of `σ = Σ g_i dx_i`.
    pub fn component(&self, i: usize) -> TrigScalar {
        self.sigma.component(&[i as u8])
    }

    /// Coefficient ℓ¹ bound `max_i Σ|c|` for `sup |σ_i|`.
    pub fn bound(&self) -> f64 {
        (0..self.model.n)
            .map(|i| self.component(i).l1_bound())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, t: &crate::coeff::Rational) -> Self {
        Section {
            model: self.model,
            sigma: self.sigma.scale(t),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.sigma.exterior_derivative().is_zero()
    }

    pub fn compile(&self) -> CompiledSection {
        CompiledSection {
            n: self.model.n,
            comps: (0..self.model.n).map(|i| self.component(i).compile()).collect(),
        }
    }
}

/// `f64` evaluator for a section and its derivative.
#[derive(Clone, Debug)]
pub struct CompiledSection {
    n: usize,
    comps: Vec<CompiledScalar>,
}

impl CompiledSection {
    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    /// Values and `D[i][j] = ∂_j σ_i`.
    pub fn value_jacobian(&self, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let mut v = vec![0.0; self.n];
        let mut d = DMatrix::zeros(self.n, self.n);
        let mut g = vec![0.0; self.n];
        for (i, c) in self.comps.iter().enumerate() {
            v[i] = c.eval_grad(x, &mut g);
            for j in 0..self.n {
                d[(i, j)] = g[j];
            }
        }
        (v, d)
    }

    /// The graph point `(x, σ(x))`.
    pub fn graph_point(&self, x: &[f64]) -> Vec<f64> {
        let mut p = x.to_vec();
        p.extend(self.value(x));
        p
    }
}

/// `X_σ = Σ g_i ∂y_i`, characterized by `ι_{X_σ} ω_can = −p^*σ`.
pub fn section_to_field(s: &Section) -> TrigMultiVector {
    s.model.vertical_lift(&s.sigma)
}

/// Pullback of `θ_taut = Σ y_i dx_i` along `x ↦ (x, σ(x))`: substitute `y_i = σ_i`.
pub fn tautological_pullback(s: &Section) -> TrigForm {
    let n = s.model.n;
    let mut out = TrigForm::zero(n, 1);
    for i in 0..n {
        // coefficient y_i becomes σ_i, and dx_i pulls back to dx_i
        out = out.add(&TrigForm::monomial(n, &[i as u8], s.component(i)));
    }
    out
}

/// Result of a graph pullback: exact when the form's coefficients do not depend on `y`.
#[derive(Clone, Debug)]
pub enum GraphPullback {
    Exact(TrigForm),
    /// Sup over the grid of the absolute pulled-back coefficients.
    Numeric(f64),
}

impl GraphPullback {
    pub fn residual(&self) -> f64 {
        match self {
            GraphPullback::Exact(w) => w.l1_bound(),
            GraphPullback::Numeric(r) => *r,
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        match self {
            GraphPullback::Exact(w) => w.is_zero(),
            GraphPullback::Numeric(r) => *r <= tol,
        }
    }
}

/// `G^*ω̃` for the graph map `G(x) = (x, σ(x))`: `dx_i ↦ dx_i`, `dy_i ↦ dσ_i`.
pub fn graph_pullback(w: &TrigForm, s: &Section, per_axis: usize) -> GraphPullback {
    let model = s.model;
    let n = model.n;
    if w.independent_of(|i| model.is_y(i)) {
        let images: Vec<TrigForm> = (0..model.dim())
            .map(|i| {
                if i < n {
                    TrigForm::basis(n, &[i as u8])
                } else {
                    TrigForm::scalar(n, s.component(i - n)).exterior_derivative()
                }
            })
            .collect();
        let mut out = TrigForm::zero(n, w.degree());
        for (idx, c) in w.terms() {
            let coeff = c.map_freq(|k| k[..n].iter().copied().collect());
            let mut term = TrigForm::scalar(n, coeff);
            for &i in idx.iter() {
                term = term.wedge(&images[i as usize]);
            }
            out = out.add(&term);
        }
        return GraphPullback::Exact(out);
    }
    assert_eq!(w.degree(), 2, "numeric graph pullback is implemented for 2-forms");
    let c = w.compile();
    GraphPullback::Numeric(numeric_graph_pullback(&c, s, per_axis))
}

/// `sup_x |Gᵀ Ω̃(x, σ(x)) G|` with `G = [I; Dσ]`.
pub fn numeric_graph_pullback(w: &dyn TwoFormField, s: &Section, per_axis: usize) -> f64 {
    let cs = s.compile();
    let n = s.model.n;
    grid(n, per_axis)
        .iter()
        .map(|x| {
            let (v, d) = cs.value_jacobian(x);
            let mut p = x.clone();
            p.extend(v);
            let mut g = DMatrix::zeros(2 * n, n);
            for i in 0..n {
                g[(i, i)] = 1.0;
                for j in 0..n {
                    g[(n + i, j)] = d[(i, j)];
                }
            }
            (g.transpose() * w.matrix(&p) * g).amax()
        })
        .fold(0.0, f64::max)
}

/// Lagrangian test for the graph of `σ`; the residual is the pulled-back form.
pub fn is_lagrangian(w: &TrigForm, s: &Section, per_axis: usize, tol: f64) -> (bool, GraphPullback) {
    let r = graph_pullback(w, s, per_axis);
    (r.is_zero(tol), r)
}

/// Certified test of `sup_i sup_x |σ_i(x)| < 1/4`.
pub fn in_chart(s: &Section) -> bool {
    in_chart_radius(s, CHART_RADIUS)
}

pub fn in_chart_radius(s: &Section, radius: f64) -> bool {
    if s.bound() < radius {
        return true;
    }
    let n = s.model.n;
    for i in 0..n {
        let g = s.component(i);
        let c = g.compile();
        // Lipschitz constant in the ℓ∞ cell metric: Σ_j sup|∂_j g|
        let lip: f64 = (0..n).map(|j| g.partial(j).l1_bound()).sum();
        let mut per_axis = 64usize;
        loop {
            let pts = grid(n, per_axis);
            let max = pts.iter().map(|x| c.eval(x).abs()).fold(0.0, f64::max);
            if max >= radius {
                return false;
            }
            if max + lip * 0.5 / (per_axis as f64) < radius {
                break;
            }
            if per_axis.pow(n as u32) > 1 << 20 {
                // inconclusive at the finest grid: treat as outside
                return false;
            }
            per_axis *= 2;
        }
    }
    true
}

/// `p^*σ` on `M` (the `y`-independent pullback along the projection).
pub fn project(s: &Section) -> TrigForm {
    s.model.project_pullback(&s.sigma)
}

/// A constant section `Σ c_i dx_i`.
pub fn constant_section(model: TorusModel, c: &[crate::coeff::Rational]) -> Section {
    let mut sigma = TrigForm::zero(model.n, 1);
    for (i, ci) in c.iter().enumerate() {
        sigma = sigma.add(&TrigForm::monomial(
            model.n,
            &[i as u8],
            TrigScalar::constant(model.n, PiPoly::rational(ci.clone())),
        ));
    }
    Section { model, sigma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{rat, rat_int};
    use crate::trig::Phase;
    use smallvec::smallvec;

    #[test]
    fn field_of_section() {
        let m = TorusModel::new(1);
        let s = Section::new(m, TrigForm::monomial(1, &[0], TrigScalar::sin(smallvec![1], rat_int(1)))).unwrap();
        let x = section_to_field(&s);
        assert_eq!(x, TrigMultiVector::monomial(2, &[1], TrigScalar::sin(smallvec![1, 0], rat_int(1))));
        let lhs = m.omega_can::<PiPoly>().contract(&x).add(&project(&s));
        assert!(lhs.is_zero());
    }

    #[test]
    fn graph_pullback_sign() {
        let m = TorusModel::new(2);
        let s = Section::new(m, TrigForm::monomial(2, &[1], TrigScalar::sin(smallvec![1, 0], rat_int(1)))).unwrap();
        let GraphPullback::Exact(w) = graph_pullback(&m.omega_can(), &s, 8) else {
            panic!("exact expected")
        };
        let expected = TrigForm::monomial(
            2,
            &[0, 1],
            TrigScalar::mode(smallvec![1, 0], Phase::Cos, PiPoly::monomial(rat_int(-2), 1)),
        );
        assert_eq!(w, expected);
        assert_eq!(w, tautological_pullback(&s).exterior_derivative().neg());
        assert!(!is_lagrangian(&m.omega_can(), &s, 8, 1e-12).0);
    }

    #[test]
    fn chart_membership() {
        let m = TorusModel::new(1);
        assert!(in_chart(&Section::zero(m)));
        assert!(in_chart(&constant_section(m, &[rat(1, 5)])));
        assert!(!in_chart(&constant_section(m, &[rat(3, 10)])));
        // ℓ¹ bound 0.3 straddles 1/4 but the true sup is 0.2
        let g = TrigScalar::sin(smallvec![1], rat(1, 10))
            .add(&TrigScalar::mode(smallvec![3], Phase::Sin, PiPoly::rational(rat(-1, 10))))
            .add(&TrigScalar::cos(smallvec![2], rat(1, 10)));
        let s = Section::new(m, TrigForm::monomial(1, &[0], g.clone())).unwrap();
        let sup = (0..4000).map(|i| g.eval(&[i as f64 / 4000.0]).abs()).fold(0.0, f64::max);
        assert_eq!(in_chart(&s), sup < 0.25);
    }
}
