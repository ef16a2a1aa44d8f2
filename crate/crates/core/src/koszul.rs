//! The Koszul dgL[1]a `(Ω(M)[2], λ₁, λ₂)` of a constant symplectic form.
//!
//! The bracket is defined by transport: `[a, b]_π = (∧π♯)⁻¹ [∧π♯a, ∧π♯b]`
//! with the Schouten bracket on the right. Then `T = −∧^•π♯` intertwines
//! `λ₁ = d`, `λ₂(a,b) = (−1)^{|a|}[a,b]_π` with `μ₁(Q) = −[π,Q]`,
//! `μ₂(Q₁,Q₂) = −(−1)^{|Q₁|}[Q₁,Q₂]` on multivector fields.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::coeff::{rat, Coeff, PiPoly};
use crate::error::{Error, Result};
use crate::exterior::{CompiledField, TrigForm, TrigMultiVector};
use crate::flows::{l_points, max_y, pullback_check, sample, FlowMap, VectorField};
use crate::linalg::{r_inverse, RMat};
use crate::symplectic::{grid, ConstantSymplectic, SymplecticForm};
use crate::torus::TorusModel;
use crate::trig::TrigScalar;

fn sign(p: usize) -> i32 {
    if p % 2 == 0 {
        1
    } else {
        -1
    }
}

fn signed<K: crate::exterior::Kind, C: Coeff>(
    x: &crate::exterior::AltField<K, C>,
    s: i32,
) -> crate::exterior::AltField<K, C> {
    if s < 0 {
        x.neg()
    } else {
        x.clone()
    }
}

/// The Koszul dgL[1]a of `(M, ω)` with `π = −ω⁻¹` constant.
#[derive(Clone, Debug)]
pub struct Koszul {
    pub model: TorusModel,
    pub base: ConstantSymplectic,
    pi_inv: RMat,
}

impl Koszul {
    pub fn new(model: TorusModel, base: ConstantSymplectic) -> Self {
        let pi_inv = r_inverse(&base.pi_mat).expect("Π invertible");
        Koszul { model, base, pi_inv }
    }

    pub fn canonical(model: TorusModel) -> Self {
        Self::new(model, ConstantSymplectic::canonical(&model))
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// `∧^p π♯`.
    pub fn wedge_sharp<C: Coeff>(&self, a: &TrigForm<C>) -> TrigMultiVector<C> {
        a.exterior_power_map(&self.base.pi_mat, self.dim())
    }

    /// `(∧^p π♯)⁻¹`.
    pub fn wedge_sharp_inverse<C: Coeff>(&self, q: &TrigMultiVector<C>) -> TrigForm<C> {
        q.exterior_power_map(&self.pi_inv, self.dim())
    }

    /// The strict isomorphism `T = −∧^•π♯`.
    pub fn transport<C: Coeff>(&self, a: &TrigForm<C>) -> TrigMultiVector<C> {
        self.wedge_sharp(a).neg()
    }

    pub fn transport_inverse<C: Coeff>(&self, q: &TrigMultiVector<C>) -> TrigForm<C> {
        self.wedge_sharp_inverse(q).neg()
    }

    pub fn bracket<C: Coeff>(&self, a: &TrigForm<C>, b: &TrigForm<C>) -> TrigForm<C> {
        let s = self.wedge_sharp(a).schouten(&self.wedge_sharp(b));
        let out = self.wedge_sharp_inverse(&s);
        if out.is_zero() {
            TrigForm::zero(self.dim(), (a.degree() + b.degree()).saturating_sub(1))
        } else {
            out
        }
    }

    pub fn lambda1<C: Coeff>(&self, a: &TrigForm<C>) -> TrigForm<C> {
        a.exterior_derivative()
    }

    pub fn lambda2<C: Coeff>(&self, a: &TrigForm<C>, b: &TrigForm<C>) -> TrigForm<C> {
        signed(&self.bracket(a, b), sign(a.degree()))
    }

    /// `μ₁(Q) = −[π, Q]`.
    pub fn mu1<C: Coeff>(&self, q: &TrigMultiVector<C>) -> TrigMultiVector<C> {
        let pi: TrigMultiVector<C> = self.base.pi.map_coeff(|c| C::from_rational(&c.as_rational().expect("rational π")));
        pi.schouten(q).neg()
    }

    /// `μ₂(Q₁, Q₂) = −(−1)^{|Q₁|}[Q₁, Q₂]`.
    pub fn mu2<C: Coeff>(&self, q1: &TrigMultiVector<C>, q2: &TrigMultiVector<C>) -> TrigMultiVector<C> {
        signed(&q1.schouten(q2), -sign(q1.degree()))
    }

    /// `dβ + ½[β, β]_π`.
    pub fn mc_residual<C: Coeff>(&self, beta: &TrigForm<C>) -> TrigForm<C> {
        let half = rat(1, 2);
        beta.exterior_derivative().add(&self.bracket(beta, beta).scale(&half))
    }

    /// The classical formula `L_{π♯a}b − L_{π♯b}a − d(π(a,b))` for 1-forms.
    pub fn one_form_bracket(&self, a: &TrigForm, b: &TrigForm) -> Result<TrigForm> {
        let pa = self.base.sharp(a);
        let pb = self.base.sharp(b);
        let pab = b.contract(&pa);
        Ok(b.lie_derivative(&pa)?
            .sub(&a.lie_derivative(&pb)?)
            .sub(&pab.exterior_derivative()))
    }

    /// `{f, g} = π(df, dg)`.
    pub fn poisson_bracket(&self, f: &TrigScalar, g: &TrigScalar) -> TrigScalar {
        let df = TrigForm::scalar(self.dim(), f.clone()).exterior_derivative();
        let dg = TrigForm::scalar(self.dim(), g.clone()).exterior_derivative();
        dg.contract(&self.base.sharp(&df)).component(&[])
    }

    /// `K(ι_π)₂(α, β) = ι_π(α∧β) − ι_πα∧β − α∧ι_πβ`.
    pub fn k_iota2(&self, a: &TrigForm, b: &TrigForm) -> TrigForm {
        let pi = &self.base.pi;
        let ab = a.wedge(b).contract(pi);
        let ia = a.contract(pi);
        let ib = b.contract(pi);
        let mut out = ab;
        if a.degree() >= 2 {
            out = out.sub(&ia.wedge(b));
        }
        if b.degree() >= 2 {
            out = out.sub(&a.wedge(&ib));
        }
        out
    }

    /// `ω + F(β)` for an MC element; checks the residual, `I_π`, and for relative `β` that `L` stays Lagrangian.
    pub fn mc_to_deformation(&self, beta: &TrigForm, per_axis: usize, tol: f64) -> Result<SymplecticForm> {
        let r = self.mc_residual(beta);
        let res = r.to_numeric().l1_bound();
        if res > tol {
            return Err(Error::McResidual(res));
        }
        let form = if beta.is_constant() && crate::symplectic::is_rational_constant(beta) {
            let f = self.base.f_map_exact(beta)?;
            SymplecticForm::from_exact(self.base.form.add(&f), per_axis)?
        } else {
            let f = self.base.f_map(beta, per_axis)?;
            let omega = self.base.omega_f64().clone();
            let field = crate::symplectic::shared(self.dim(), move |p| &omega + f.matrix(p));
            SymplecticForm::from_field(field, per_axis)?
        };
        if self.model.is_relative(beta) {
            let n = self.model.n;
            let worst = grid(n, per_axis)
                .iter()
                .map(|x| crate::symplectic::restrict_matrix(form.field.as_ref(), n, x).amax())
                .fold(0.0, f64::max);
            if worst > tol.max(1e-12) {
                return Err(Error::Precondition(format!("L is not Lagrangian for ω + F(β): {worst:e}")));
            }
        }
        Ok(form)
    }
}

/// A time-dependent relative 1-form `α_t = Σ_j t^j α_j`.
#[derive(Clone, Debug)]
pub struct TimePoly {
    pub coeffs: Vec<TrigForm>,
}

impl TimePoly {
    pub fn constant(a: TrigForm) -> Self {
        TimePoly { coeffs: vec![a] }
    }

    pub fn at(&self, t: f64) -> TrigForm<f64> {
        let mut out: TrigForm<f64> = TrigForm::zero(self.coeffs[0].dim(), 1);
        let mut tp = 1.0;
        for c in &self.coeffs {
            out = out.add(&c.to_numeric().scale_coeff(&tp));
            tp *= t;
        }
        out
    }

    pub fn max_freq(&self) -> i64 {
        self.coeffs.iter().map(|c| c.max_freq()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// Samples of a gauge path `∂_t β_t = dα_t − [α_t, β_t]_π`.
#[derive(Clone, Debug)]
pub struct GaugePath {
    pub times: Vec<f64>,
    pub betas: Vec<TrigForm<f64>>,
    pub alpha: TimePoly,
    pub max_mc_residual: f64,
    /// Total absolute coefficient mass dropped above the frequency cap.
    pub truncated: f64,
    pub freq_cap: i64,
}

impl GaugePath {
    pub fn end(&self) -> &TrigForm<f64> {
        self.betas.last().expect("nonempty path")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GaugeOptions {
    pub steps: usize,
    pub t_end: f64,
    /// Frequencies above `cap_factor · max(input |k|, min_support)` are truncated.
    pub cap_factor: i64,
    pub min_support: i64,
    /// Truncated coefficients larger than this are an error.
    pub cap_tol: f64,
    pub mc_tol: f64,
    /// Grid per axis for the `I_π` monitor.
    pub monitor_grid: usize,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        GaugeOptions {
            steps: 100,
            t_end: 1.0,
            cap_factor: 3,
            min_support: 4,
            cap_tol: 1e-12,
            mc_tol: 1e-10,
            monitor_grid: 16,
        }
    }
}

fn truncate(b: &mut TrigForm<f64>, cap: i64, tol: f64) -> Result<f64> {
    let mut dropped = 0.0;
    let mut out = TrigForm::zero(b.dim(), b.degree());
    for (idx, s) in b.terms() {
        let mut keep = TrigScalar::<f64>::zero();
        for (k, p, c) in s.terms() {
            let kmax = k.iter().map(|v| v.abs()).max().unwrap_or(0);
            if kmax > cap {
                if c.abs() > tol {
                    return Err(Error::FrequencyCap {
                        coeff: c.abs(),
                        freq: kmax,
                    });
                }
                dropped += c.abs();
            } else if c.abs() > 1e-18 {
                keep.add_term(k.clone(), p, *c);
            } else {
                dropped += c.abs();
            }
        }
        out.add_term(idx.clone(), keep);
    }
    *b = out;
    Ok(dropped)
}

impl Koszul {
    fn gauge_rhs(&self, alpha: &TrigForm<f64>, beta: &TrigForm<f64>) -> TrigForm<f64> {
        let da = alpha.exterior_derivative();
        let br = self.bracket(alpha, beta);
        let out = da.sub(&br);
        if out.is_zero() {
            TrigForm::zero(self.dim(), 2)
        } else {
            out
        }
    }

    /// Smallest `|det(I + BΠ)|` over the monitor grid.
    pub fn ipi_margin(&self, beta: &TrigForm<f64>, per_axis: usize) -> f64 {
        let c = beta.compile();
        let n = self.dim();
        let pi = self.base.pi_f64().clone();
        grid(n, per_axis)
            .par_iter()
            .map(|p| (DMatrix::identity(n, n) + c.matrix(p) * &pi).determinant().abs())
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// RK4 in coefficient space.
    pub fn gauge_flow(&self, beta0: &TrigForm, alpha: &TimePoly, opts: GaugeOptions) -> Result<GaugePath> {
        for (j, a) in alpha.coeffs.iter().enumerate() {
            if !self.model.is_relative(a) {
                return Err(Error::NotRelative(j));
            }
        }
        let r0 = self.mc_residual(beta0).to_numeric().l1_bound();
        if r0 > opts.mc_tol {
            return Err(Error::McResidual(r0));
        }
        let input = beta0.max_freq().max(alpha.max_freq());
        let cap = opts.cap_factor * input.max(opts.min_support);
        let h = opts.t_end / opts.steps as f64;
        let mut beta: TrigForm<f64> = beta0.to_numeric();
        if beta.is_zero() {
            beta = TrigForm::zero(self.dim(), 2);
        }
        let mut times = vec![0.0];
        let mut betas = vec![beta.clone()];
        let mut truncated = 0.0;
        let mut max_res = r0;
        for step in 0..opts.steps {
            let t = step as f64 * h;
            let a0 = alpha.at(t);
            let a1 = alpha.at(t + 0.5 * h);
            let a2 = alpha.at(t + h);
            let k1 = self.gauge_rhs(&a0, &beta);
            let k2 = self.gauge_rhs(&a1, &beta.add(&k1.scale_coeff(&(0.5 * h))));
            let k3 = self.gauge_rhs(&a1, &beta.add(&k2.scale_coeff(&(0.5 * h))));
            let k4 = self.gauge_rhs(&a2, &beta.add(&k3.scale_coeff(&h)));
            let incr = k1
                .add(&k2.scale_coeff(&2.0))
                .add(&k3.scale_coeff(&2.0))
                .add(&k4)
                .scale_coeff(&(h / 6.0));
            beta = beta.add(&incr);
            truncated += truncate(&mut beta, cap, opts.cap_tol)?;
            let margin = self.ipi_margin(&beta, opts.monitor_grid);
            if margin < 1e-8 {
                return Err(Error::Precondition(format!(
                    "gauge path leaves I_π at t = {:.6} (min |det(I+BΠ)| = {margin:e})",
                    t + h
                )));
            }
            let res = self.mc_residual(&beta).l1_bound();
            max_res = max_res.max(res);
            if res > opts.mc_tol {
                return Err(Error::Integration {
                    point: vec![t + h],
                    reason: format!("MC residual drift {res:e}; reduce the step size"),
                });
            }
            times.push(t + h);
            betas.push(beta.clone());
        }
        Ok(GaugePath {
            times,
            betas,
            alpha: alpha.clone(),
            max_mc_residual: max_res,
            truncated,
            freq_cap: cap,
        })
    }

    /// Finite-difference check of `∂_t β|₀ = dα₀ − [α₀, β₀]_π` (second-order one-sided).
    pub fn gauge_linearization_residual(&self, beta0: &TrigForm, alpha: &TimePoly, h: f64) -> Result<f64> {
        let run = |t: f64| {
            self.gauge_flow(
                beta0,
                alpha,
                GaugeOptions {
                    steps: 4,
                    t_end: t,
                    ..GaugeOptions::default()
                },
            )
            .map(|p| p.end().clone())
        };
        let b0 = beta0.to_numeric();
        let b1 = run(h)?;
        let b2 = run(2.0 * h)?;
        let fd = b1
            .scale_coeff(&4.0)
            .sub(&b0.scale_coeff(&3.0))
            .sub(&b2)
            .scale_coeff(&(1.0 / (2.0 * h)));
        let exact = self.gauge_rhs(&alpha.at(0.0), &b0);
        Ok(fd.sub(&exact).l1_bound())
    }
}

/// The generator of the isotopy of a gauge path: `ι_{Y_t}ω = −α_t` for the constant `ω`.
/// Transported to bivectors the gauge equation reads `∂_t π_t = −L_{Y_t} π_t` for
/// `π_t = π − ∧²π♯β_t`, so the flow pulls `ω + F(β_t)` back to `ω + F(β₀)`.
/// `Y_t` is tangent to `L` since `α_t` annihilates `TL` and `L` is Lagrangian.
/// Samples are read at the nearest path time, so RK4 needs the path at half steps.
pub struct GaugeField {
    omega_inv: DMatrix<f64>,
    dt: f64,
    alphas: Vec<CompiledField>,
}

impl VectorField for GaugeField {
    fn dim(&self) -> usize {
        self.omega_inv.nrows()
    }
    fn value_jacobian(&self, t: f64, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let i = ((t / self.dt).round().max(0.0) as usize).min(self.alphas.len() - 1);
        let (a, da) = self.alphas[i].vector_jacobian(p);
        let y = &self.omega_inv * DVector::from_vec(a);
        Ok((y.iter().copied().collect(), &self.omega_inv * da))
    }
}

/// Pullback residual `sup|ρ₁^*(ω + F(β₁)) − (ω + F(β₀))|` and the drift of `L` under `ρ`.
#[derive(Clone, Debug)]
pub struct GaugeIsotopy {
    pub end: TrigForm<f64>,
    pub residual: f64,
    pub l_drift: f64,
    pub max_mc_residual: f64,
}

impl Koszul {
    /// Builds the isotopy of a gauge path by integrating [`GaugeField`] with `steps` RK4 steps.
    pub fn gauge_vs_isotopy(&self, beta0: &TrigForm, alpha: &TimePoly, steps: usize, per_axis: usize) -> Result<GaugeIsotopy> {
        let path = self.gauge_flow(
            beta0,
            alpha,
            GaugeOptions {
                steps: 2 * steps,
                ..GaugeOptions::default()
            },
        )?;
        let n = self.dim();
        let compile_alpha = |t: f64| {
            let a = alpha.at(t);
            if a.is_zero() {
                TrigForm::<f64>::zero(n, 1).compile()
            } else {
                a.compile()
            }
        };
        let field = GaugeField {
            omega_inv: self.base.omega_f64().clone().try_inverse().expect("symplectic"),
            dt: path.times[1] - path.times[0],
            alphas: path.times.iter().map(|t| compile_alpha(*t)).collect(),
        };
        let map = FlowMap {
            field: Arc::new(field),
            t0: 0.0,
            t1: 1.0,
            steps,
        };
        let omega = self.base.omega_f64().clone();
        let at = |b: &TrigForm<f64>| {
            let c = b.compile();
            let base = self.base.clone();
            let omega = omega.clone();
            crate::symplectic::shared(n, move |p| &omega + base.f_matrix(&c.matrix(p)).expect("inside I_π"))
        };
        let flow = sample(&map, &grid(n, per_axis), steps)?;
        let residual = pullback_check(&flow, at(path.end()).as_ref(), at(&path.betas[0]).as_ref());
        let lflow = sample(&map, &l_points(self.model.n, per_axis), steps)?;
        Ok(GaugeIsotopy {
            end: path.end().clone(),
            residual,
            l_drift: max_y(&lflow.images, self.model.n),
            max_mc_residual: path.max_mc_residual,
        })
    }
}

/// A relative `β` is recognized exactly by `ι_L^*β = 0`.
pub fn is_relative_mc(model: &TorusModel, beta: &TrigForm) -> bool {
    model.is_relative(beta)
}

pub fn zero_coeff() -> PiPoly {
    PiPoly::zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::rat_int;
    use crate::trig::Phase;
    use rand::Rng;
    use smallvec::smallvec;

    fn t2() -> Koszul {
        Koszul::canonical(TorusModel::new(1))
    }

    #[test]
    fn bracket_examples() {
        let k = t2();
        assert!(k.bracket::<PiPoly>(&TrigForm::basis(2, &[0]), &TrigForm::basis(2, &[1])).is_zero());
        let a = TrigForm::monomial(2, &[0], TrigScalar::sin(smallvec![1, 0], rat_int(1)));
        let b = TrigForm::basis(2, &[1]);
        let expected = TrigForm::monomial(2, &[0], TrigScalar::mode(smallvec![1, 0], Phase::Cos, PiPoly::monomial(rat_int(2), 1)));
        assert_eq!(k.bracket(&a, &b), expected);
        assert_eq!(k.one_form_bracket(&a, &b).unwrap(), expected);
        let f = TrigScalar::sin(smallvec![1, 0], rat_int(1));
        let g = TrigScalar::sin(smallvec![0, 1], rat_int(1));
        let df = TrigForm::scalar(2, f.clone()).exterior_derivative();
        let dg = TrigForm::scalar(2, g.clone()).exterior_derivative();
        assert_eq!(k.bracket(&df, &dg), TrigForm::scalar(2, k.poisson_bracket(&f, &g)).exterior_derivative());
    }

    #[test]
    fn mc_examples() {
        let k = t2();
        let half = TrigForm::basis(2, &[0, 1]).scale(&rat(1, 2));
        assert!(k.mc_residual(&half).is_zero());
        let f = k.mc_to_deformation(&half, 8, 1e-12).unwrap();
        assert_eq!(f.exact.unwrap(), TrigForm::basis(2, &[0, 1]).scale(&rat_int(2)));
    }

    #[test]
    fn gauge_trivial_and_linearized() {
        let k = t2();
        let b0 = TrigForm::basis(2, &[0, 1]).scale(&rat(1, 5));
        let zero = TimePoly::constant(TrigForm::zero(2, 1));
        let p = k.gauge_flow(&b0, &zero, GaugeOptions { steps: 5, ..Default::default() }).unwrap();
        assert!(p.end().sub(&b0.to_numeric()).l1_bound() < 1e-15);
        let a = TimePoly::constant(TrigForm::monomial(2, &[0], TrigScalar::sin(smallvec![0, 1], rat(1, 20))));
        let p = k.gauge_flow(&b0, &a, GaugeOptions::default()).unwrap();
        assert!(p.max_mc_residual <= 1e-10);
        assert!(k.gauge_linearization_residual(&b0, &a, 1e-4).unwrap() < 1e-6);
        let iso = k.gauge_vs_isotopy(&b0, &a, 200, 12).unwrap();
        assert!(iso.residual < 1e-8 && iso.l_drift < 1e-12, "{iso:?}");
        let triv = k.gauge_vs_isotopy(&b0, &zero, 10, 4).unwrap();
        assert!(triv.residual < 1e-14 && triv.l_drift == 0.0);
        let big = TimePoly::constant(TrigForm::monomial(2, &[0], TrigScalar::sin(smallvec![0, 1], rat_int(4))));
        assert!(k.gauge_flow(&b0, &big, GaugeOptions::default()).is_err());
    }

    #[test]
    fn transport_intertwines_and_jacobi() {
        use crate::random::{field, rng, Shape};
        let k = Koszul::canonical(TorusModel::new(1));
        let mut r = rng(7);
        let sh = Shape::default();
        for _ in 0..20 {
            let pa = r.gen_range(0..3);
            let pb = r.gen_range(0..3);
            let pc = r.gen_range(0..3);
            let a: TrigForm = field(&mut r, 2, pa, 2, sh);
            let b: TrigForm = field(&mut r, 2, pb, 2, sh);
            let c: TrigForm = field(&mut r, 2, pc, 2, sh);
            assert_eq!(k.transport(&k.lambda1(&a)), k.mu1(&k.transport(&a)));
            assert_eq!(k.transport(&k.lambda2(&a, &b)), k.mu2(&k.transport(&a), &k.transport(&b)));
            let (sa, sb, sc) = (pa % 2, pb % 2, pc % 2);
            let sg = |e: usize| if e % 2 == 0 { 1 } else { -1 };
            let j = k
                .lambda2(&k.lambda2(&a, &b), &c)
                .add(&signed(&k.lambda2(&k.lambda2(&a, &c), &b), sg(sb * sc)))
                .add(&signed(&k.lambda2(&k.lambda2(&b, &c), &a), sg(sa * (sb + sc))));
            assert!(j.is_zero());
            let l = k
                .lambda1(&k.lambda2(&a, &b))
                .add(&k.lambda2(&k.lambda1(&a), &b))
                .add(&signed(&k.lambda2(&a, &k.lambda1(&b)), sg(sa)));
            assert!(l.is_zero());
        }
    }
}
