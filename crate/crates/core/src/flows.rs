//! Fixed-step RK4 flows with Jacobians, the Moser solver, the cutoff lift
//! `X_{L'} = f·X_σ`, plateau concatenations and the Gronwall estimate.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::chart::{CompiledSection, Section, CHART_RADIUS};
use crate::error::{Error, Result};
use crate::exterior::{CompiledField, TrigForm};
use crate::symplectic::TwoFormField;

/// `6u⁵ − 15u⁴ + 10u³` clamped to `[0, 1]`.
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (u * (6.0 * u - 15.0) + 10.0)
    }
}

pub fn smoothstep_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        30.0 * u * u * (u - 1.0) * (u - 1.0)
    }
}

/// Representative of `y` in `[−1/2, 1/2)`.
pub fn wrap(y: f64) -> f64 {
    y - (y + 0.5).floor()
}

/// The cutoff `f(y) = Π_i s((r₁ − |y_i|)/(r₁ − r₀))`: `f ≡ 1` for `|y|∞ ≤ r₀`, `f ≡ 0` for `|y|∞ ≥ r₁`.
#[derive(Clone, Copy, Debug)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff {
            inner: 0.25 + 1.0 / 32.0,
            outer: 0.5 - 1.0 / 16.0,
        }
    }
}

impl Cutoff {
    fn factor(&self, y: f64) -> (f64, f64) {
        let w = wrap(y);
        let width = self.outer - self.inner;
        let u = (self.outer - w.abs()) / width;
        (smoothstep(u), -w.signum() * smoothstep_deriv(u) / width)
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        y.iter().map(|&v| self.factor(v).0).product()
    }

    /// Value and gradient in the `y` variables.
    pub fn value_grad(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let parts: Vec<(f64, f64)> = y.iter().map(|&v| self.factor(v)).collect();
        let value = parts.iter().map(|p| p.0).product();
        let grad = (0..y.len())
            .map(|i| {
                parts
                    .iter()
                    .enumerate()
                    .map(|(j, p)| if i == j { p.1 } else { p.0 })
                    .product()
            })
            .collect();
        (value, grad)
    }

    /// `sup |f′|` of one factor.
    pub fn max_slope(&self) -> f64 {
        1.875 / (self.outer - self.inner)
    }
}

/// The plateau reparametrization `h`: smoothsteps on `[0,1/5]`, `[2/5,3/5]`, `[4/5,1]`,
/// constant `1/3` on `[1/5,2/5]` and `2/3` on `[3/5,4/5]`.
pub fn plateau(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    if t <= 0.2 {
        smoothstep(5.0 * t) / 3.0
    } else if t <= 0.4 {
        1.0 / 3.0
    } else if t <= 0.6 {
        (1.0 + smoothstep(5.0 * t - 2.0)) / 3.0
    } else if t <= 0.8 {
        2.0 / 3.0
    } else {
        (2.0 + smoothstep(5.0 * t - 4.0)) / 3.0
    }
}

pub fn plateau_deriv(t: f64) -> f64 {
    if t <= 0.2 {
        5.0 * smoothstep_deriv(5.0 * t) / 3.0
    } else if t <= 0.4 {
        0.0
    } else if t <= 0.6 {
        5.0 * smoothstep_deriv(5.0 * t - 2.0) / 3.0
    } else if t <= 0.8 {
        0.0
    } else {
        5.0 * smoothstep_deriv(5.0 * t - 4.0) / 3.0
    }
}

/// A time-dependent vector field with Jacobian.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    /// `(X(t,p), DX(t,p))` with `DX[i][j] = ∂_j X_i`.
    fn value_jacobian(&self, t: f64, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)>;
}

pub struct ZeroField(pub usize);

impl VectorField for ZeroField {
    fn dim(&self) -> usize {
        self.0
    }
    fn value_jacobian(&self, _: f64, _: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        Ok((vec![0.0; self.0], DMatrix::zeros(self.0, self.0)))
    }
}

/// An autonomous field from a compiled trig vector field.
pub struct TrigField(pub CompiledField);

impl VectorField for TrigField {
    fn dim(&self) -> usize {
        self.0.dim
    }
    fn value_jacobian(&self, _: f64, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        Ok(self.0.vector_jacobian(p))
    }
}

/// `c · f(y) · Σ g_i(x) ∂y_i`.
pub struct CutoffLift {
    pub n: usize,
    pub section: CompiledSection,
    pub cutoff: Cutoff,
    pub scale: f64,
}

impl CutoffLift {
    pub fn new(s: &Section, scale: f64) -> Self {
        CutoffLift {
            n: s.model.n,
            section: s.compile(),
            cutoff: Cutoff::default(),
            scale,
        }
    }
}

impl VectorField for CutoffLift {
    fn dim(&self) -> usize {
        2 * self.n
    }
    fn value_jacobian(&self, _: f64, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n = self.n;
        let (g, dg) = self.section.value_jacobian(&p[..n]);
        let (f, df) = self.cutoff.value_grad(&p[n..]);
        let mut v = vec![0.0; 2 * n];
        let mut jac = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            v[n + i] = self.scale * f * g[i];
            for j in 0..n {
                jac[(n + i, j)] = self.scale * f * dg[(i, j)];
                jac[(n + i, n + j)] = self.scale * g[i] * df[j];
            }
        }
        Ok((v, jac))
    }
}

/// A 2-form with pointwise partial derivatives.
pub trait TwoFormPartials: Send + Sync {
    fn dim(&self) -> usize;
    fn matrix_with_partials(&self, p: &[f64]) -> (DMatrix<f64>, Vec<DMatrix<f64>>);
}

impl TwoFormPartials for CompiledField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn matrix_with_partials(&self, p: &[f64]) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        CompiledField::matrix_with_partials(self, p)
    }
}

/// The Moser field `Y_t = Ω_t⁻¹ b` of `ι_{Y_t}Ω_t = −β` along `Ω_t = ω₁ + t·dβ`.
pub struct MoserField {
    pub start: CompiledField,
    pub slope: CompiledField,
    pub beta: CompiledField,
    pub min_det: f64,
}

impl VectorField for MoserField {
    fn dim(&self) -> usize {
        self.start.dim
    }
    fn value_jacobian(&self, t: f64, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n = self.dim();
        let (a, da) = self.start.matrix_with_partials(p);
        let (b, db) = self.slope.matrix_with_partials(p);
        let omega = a + b * t;
        let lu = omega.clone().lu();
        let det = lu.determinant();
        if det.abs() < self.min_det {
            return Err(Error::Degenerate { point: p.to_vec(), det });
        }
        let (bv, dbv) = self.beta.vector_jacobian(p);
        let y = lu.solve(&nalgebra::DVector::from_vec(bv)).expect("nonsingular");
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let dk = &da[k] + &db[k] * t;
            let rhs = dbv.column(k) - dk * &y;
            let col = lu.solve(&rhs).expect("nonsingular");
            jac.set_column(k, &col);
        }
        Ok((y.iter().copied().collect(), jac))
    }
}

/// `c · X(t₀ + c·t)`, used for reversed or rescaled flows.
pub struct Rescaled {
    pub inner: Arc<dyn VectorField>,
    pub scale: f64,
}

impl VectorField for Rescaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value_jacobian(&self, t: f64, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let (v, j) = self.inner.value_jacobian(t, p)?;
        Ok((v.iter().map(|x| x * self.scale).collect(), j * self.scale))
    }
}

fn check_finite(v: &[f64], j: &DMatrix<f64>, p: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) && j.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration {
            point: p.to_vec(),
            reason: "non-finite value".into(),
        })
    }
}

/// RK4 on `ṗ = X(t,p)`, `J̇ = DX·J` from `t0` to `t1`.
pub fn flow_point(x: &dyn VectorField, t0: f64, t1: f64, steps: usize, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = p.len();
    let h = (t1 - t0) / steps as f64;
    let mut q = p.to_vec();
    let mut jac = DMatrix::identity(n, n);
    let shift = |q: &[f64], k: &[f64], s: f64| -> Vec<f64> { q.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let (k1, a1) = x.value_jacobian(t, &q)?;
        let j1 = &a1 * &jac;
        let q2 = shift(&q, &k1, 0.5 * h);
        let (k2, a2) = x.value_jacobian(t + 0.5 * h, &q2)?;
        let j2 = &a2 * (&jac + &j1 * (0.5 * h));
        let q3 = shift(&q, &k2, 0.5 * h);
        let (k3, a3) = x.value_jacobian(t + 0.5 * h, &q3)?;
        let j3 = &a3 * (&jac + &j2 * (0.5 * h));
        let q4 = shift(&q, &k3, h);
        let (k4, a4) = x.value_jacobian(t + h, &q4)?;
        let j4 = &a4 * (&jac + &j3 * h);
        for d in 0..n {
            q[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
        jac += (j1 + j2 * 2.0 + j3 * 2.0 + j4) * (h / 6.0);
        check_finite(&q, &jac, p)?;
    }
    Ok((q, jac))
}

/// Like [`flow_point`], also integrating the homotopy 1-form
/// `Λ_p(v) = ∫_{t0}^{t1} ω(X, DF_s v)|_{F_s p} ds`, so that `F^*ω − ω = dΛ` for closed `ω`.
pub fn flow_homotopy(
    x: &dyn VectorField,
    w: &dyn TwoFormField,
    t0: f64,
    t1: f64,
    steps: usize,
    p: &[f64],
) -> Result<(Vec<f64>, DMatrix<f64>, Vec<f64>)> {
    let n = p.len();
    let h = (t1 - t0) / steps as f64;
    let mut q = p.to_vec();
    let mut jac = DMatrix::identity(n, n);
    let mut lam = nalgebra::RowDVector::zeros(n);
    let shift = |q: &[f64], k: &[f64], s: f64| -> Vec<f64> { q.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let rate = |v: &[f64], q: &[f64], j: &DMatrix<f64>| {
        nalgebra::RowDVector::from_row_slice(v) * w.matrix(q) * j
    };
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let (k1, a1) = x.value_jacobian(t, &q)?;
        let l1 = rate(&k1, &q, &jac);
        let j1 = &a1 * &jac;
        let jm = &jac + &j1 * (0.5 * h);
        let q2 = shift(&q, &k1, 0.5 * h);
        let (k2, a2) = x.value_jacobian(t + 0.5 * h, &q2)?;
        let l2 = rate(&k2, &q2, &jm);
        let j2 = &a2 * &jm;
        let jm = &jac + &j2 * (0.5 * h);
        let q3 = shift(&q, &k2, 0.5 * h);
        let (k3, a3) = x.value_jacobian(t + 0.5 * h, &q3)?;
        let l3 = rate(&k3, &q3, &jm);
        let j3 = &a3 * &jm;
        let je = &jac + &j3 * h;
        let q4 = shift(&q, &k3, h);
        let (k4, a4) = x.value_jacobian(t + h, &q4)?;
        let l4 = rate(&k4, &q4, &je);
        let j4 = &a4 * &je;
        for d in 0..n {
            q[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
        jac += (j1 + j2 * 2.0 + j3 * 2.0 + j4) * (h / 6.0);
        lam += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
        check_finite(&q, &jac, p)?;
    }
    Ok((q, jac, lam.iter().copied().collect()))
}

/// `Y = Ω⁻¹ b`, the field with `ι_Y ω = −β` for a constant `ω`.
pub struct DualField {
    pub omega_inv: DMatrix<f64>,
    pub beta: CompiledField,
}

impl VectorField for DualField {
    fn dim(&self) -> usize {
        self.omega_inv.nrows()
    }
    fn value_jacobian(&self, _: f64, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let (b, db) = self.beta.vector_jacobian(p);
        let y = &self.omega_inv * nalgebra::DVector::from_vec(b);
        Ok((y.iter().copied().collect(), &self.omega_inv * db))
    }
}

/// Sampled flow map.
#[derive(Clone, Debug)]
pub struct FlowResult {
    pub points: Vec<Vec<f64>>,
    pub images: Vec<Vec<f64>>,
    pub jacobians: Vec<DMatrix<f64>>,
    pub steps: usize,
}

impl FlowResult {
    pub fn min_det(&self) -> f64 {
        self.jacobians.iter().map(|j| j.determinant()).fold(f64::INFINITY, f64::min)
    }
}

/// A smooth map of `R^N` (covering a torus map) with its Jacobian.
pub trait SmoothMap: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)>;
}

pub type SharedMap = Arc<dyn SmoothMap>;

pub struct Identity(pub usize);

impl SmoothMap for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        Ok((p.to_vec(), DMatrix::identity(self.0, self.0)))
    }
}

/// The time-`t0 → t1` flow of a field.
#[derive(Clone)]
pub struct FlowMap {
    pub field: Arc<dyn VectorField>,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl FlowMap {
    /// Same field over `[t0, t0 + s(t1 − t0)]`, steps scaled proportionally (at least one).
    pub fn partial(&self, s: f64) -> FlowMap {
        FlowMap {
            field: self.field.clone(),
            t0: self.t0,
            t1: self.t0 + s * (self.t1 - self.t0),
            steps: ((self.steps as f64 * s.abs()).ceil() as usize).max(1),
        }
    }

    pub fn inverse(&self) -> FlowMap {
        FlowMap {
            field: self.field.clone(),
            t0: self.t1,
            t1: self.t0,
            steps: self.steps,
        }
    }
}

impl SmoothMap for FlowMap {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn apply(&self, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        if self.t0 == self.t1 {
            return Identity(p.len()).apply(p);
        }
        flow_point(self.field.as_ref(), self.t0, self.t1, self.steps, p)
    }
}

/// `maps[k−1] ∘ … ∘ maps[0]`.
pub struct Composite(pub Vec<SharedMap>);

impl SmoothMap for Composite {
    fn dim(&self) -> usize {
        self.0[0].dim()
    }
    fn apply(&self, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let mut q = p.to_vec();
        let mut jac = DMatrix::identity(p.len(), p.len());
        for m in &self.0 {
            let (q2, j2) = m.apply(&q)?;
            q = q2;
            jac = j2 * jac;
        }
        Ok((q, jac))
    }
}

/// Evaluates a map on sample points in parallel.
pub fn sample(map: &dyn SmoothMap, points: &[Vec<f64>], steps: usize) -> Result<FlowResult> {
    let out: Result<Vec<_>> = points.par_iter().map(|p| map.apply(p)).collect();
    let (images, jacobians) = out?.into_iter().unzip();
    Ok(FlowResult {
        points: points.to_vec(),
        images,
        jacobians,
        steps,
    })
}

/// Time-`t_end` flow of `X` on the given points.
pub fn flow(x: Arc<dyn VectorField>, t_end: f64, steps: usize, points: &[Vec<f64>]) -> Result<FlowResult> {
    if steps == 0 {
        return Err(Error::Precondition("at least one step is required".into()));
    }
    let m = FlowMap {
        field: x,
        t0: 0.0,
        t1: t_end,
        steps,
    };
    sample(&m, points, steps)
}

/// `(φ^*ω)_p = Jᵀ Ω(φ(p)) J`.
pub struct Pullback {
    pub map: SharedMap,
    pub form: Arc<dyn TwoFormField>,
}

impl TwoFormField for Pullback {
    fn dim(&self) -> usize {
        self.form.dim()
    }
    fn matrix(&self, p: &[f64]) -> DMatrix<f64> {
        let (q, j) = self.map.apply(p).expect("pullback map failed");
        j.transpose() * self.form.matrix(&q) * j
    }
}

/// `sup_p max_{i,j} |ω̃_{φ(p)}(J e_i, J e_j) − ω̂_p(e_i, e_j)|`.
pub fn pullback_check(phi: &FlowResult, target: &dyn TwoFormField, source: &dyn TwoFormField) -> f64 {
    phi.points
        .par_iter()
        .zip(&phi.images)
        .zip(&phi.jacobians)
        .map(|((p, q), j)| (j.transpose() * target.matrix(q) * j - source.matrix(p)).amax())
        .reduce(|| 0.0, f64::max)
}

/// Grid points of `L = {y = 0}` embedded in `M`.
pub fn l_points(n: usize, per_axis: usize) -> Vec<Vec<f64>> {
    crate::symplectic::grid(n, per_axis)
        .into_iter()
        .map(|mut x| {
            x.extend(std::iter::repeat_n(0.0, n));
            x
        })
        .collect()
}

/// Largest `|y|` (wrapped) over the given images.
pub fn max_y(images: &[Vec<f64>], n: usize) -> f64 {
    images
        .iter()
        .flat_map(|p| p[n..].iter().map(|y| wrap(*y).abs()))
        .fold(0.0, f64::max)
}

/// The map `φ_{L'}`: time-1 flow of `f·X_σ`.
pub fn phi_map(s: &Section, steps: usize) -> FlowMap {
    FlowMap {
        field: Arc::new(CutoffLift::new(s, 1.0)),
        t0: 0.0,
        t1: 1.0,
        steps,
    }
}

/// `φ_{L'}` sampled on `points`; rejects sections outside the chart.
pub fn phi_l(s: &Section, steps: usize, points: &[Vec<f64>]) -> Result<FlowResult> {
    if !crate::chart::in_chart(s) {
        return Err(Error::ChartExit { bound: s.bound(), time: None });
    }
    sample(&phi_map(s, steps), points, steps)
}

/// Result of the Moser construction.
pub struct MoserResult {
    pub map: FlowMap,
    pub flow: FlowResult,
    /// `sup |ρ₁^*ω′₂ − ω′₁|` on the sample points.
    pub residual: f64,
    /// Largest `|y|` of flowed `L` points.
    pub l_drift: f64,
}

/// Moser isotopy with `ρ₁^*ω′₂ = ω′₁` from a relative primitive `β` of `ω′₂ − ω′₁`.
pub fn moser_solve<C: crate::coeff::Coeff>(
    model: &crate::torus::TorusModel,
    w1: &TrigForm<C>,
    w2: &TrigForm<C>,
    beta: &TrigForm<C>,
    steps: usize,
    per_axis: usize,
) -> Result<MoserResult> {
    if !model.is_relative(beta) {
        return Err(Error::NotRelative(1));
    }
    let db = beta.exterior_derivative();
    let gap = db.to_numeric().sub(&w2.to_numeric().sub(&w1.to_numeric())).l1_bound();
    if gap > 1e-12 {
        return Err(Error::Precondition(format!("dβ ≠ ω′₂ − ω′₁ (ℓ¹ gap {gap:e})")));
    }
    let field = MoserField {
        start: w1.compile(),
        slope: if db.is_zero() {
            TrigForm::<f64>::zero(model.dim(), 2).compile()
        } else {
            db.compile()
        },
        beta: beta.compile(),
        min_det: 1e-12,
    };
    let map = FlowMap {
        field: Arc::new(field),
        t0: 0.0,
        t1: 1.0,
        steps,
    };
    let pts = crate::symplectic::grid(model.dim(), per_axis);
    let flow = sample(&map, &pts, steps)?;
    let residual = pullback_check(&flow, &w2.compile(), &w1.compile());
    let lflow = sample(&map, &l_points(model.n, per_axis), steps)?;
    let l_drift = max_y(&lflow.images, model.n);
    Ok(MoserResult { map, flow, residual, l_drift })
}

/// `max_p |Φ(p) − Ψ(p)|∞` and `max_p max_k Σ_l |(J_Φ − J_Ψ)_{lk}|`.
pub fn c1_distance(a: &FlowResult, b: &FlowResult) -> Result<(f64, f64)> {
    if a.points != b.points {
        return Err(Error::Precondition("grid mismatch".into()));
    }
    let mut pos: f64 = 0.0;
    let mut jac: f64 = 0.0;
    for i in 0..a.points.len() {
        for (x, y) in a.images[i].iter().zip(&b.images[i]) {
            pos = pos.max((x - y).abs());
        }
        let d = &a.jacobians[i] - &b.jacobians[i];
        for k in 0..d.ncols() {
            jac = jac.max(d.column(k).iter().map(|v| v.abs()).sum());
        }
    }
    Ok((pos, jac))
}

/// Measured and predicted `C¹` distance between `φ_{L'}` and the identity.
#[derive(Clone, Debug)]
pub struct Gronwall {
    pub x_norm: f64,
    pub position: f64,
    pub jacobian: f64,
    pub position_bound: f64,
    pub jacobian_bound: f64,
}

impl Gronwall {
    pub fn holds(&self) -> bool {
        self.position <= self.position_bound + 1e-9 && self.jacobian <= self.jacobian_bound + 1e-6
    }
}

/// `‖X_{L'}‖₁` bounded from the coefficients: `|f g_i|`, `|f ∂_x g_i|`, `|g_i ∂_y f|`.
pub fn lift_c1_norm(s: &Section) -> f64 {
    let n = s.model.n;
    let slope = Cutoff::default().max_slope();
    let mut out: f64 = 0.0;
    for i in 0..n {
        let g = s.component(i);
        let g0 = g.l1_bound();
        out = out.max(g0).max(g0 * slope);
        for j in 0..n {
            out = out.max(g.partial(j).l1_bound());
        }
    }
    out
}

pub fn gronwall_check(s: &Section, steps: usize, per_axis: usize) -> Result<Gronwall> {
    let n = s.model.n;
    let pts = crate::symplectic::grid(2 * n, per_axis);
    let phi = phi_l(s, steps, &pts)?;
    let id = sample(&Identity(2 * n), &pts, 0)?;
    let (position, jacobian) = c1_distance(&phi, &id)?;
    let x_norm = lift_c1_norm(s);
    let nx = n as f64 * x_norm;
    Ok(Gronwall {
        x_norm,
        position,
        jacobian,
        position_bound: x_norm,
        jacobian_bound: nx * nx.exp(),
    })
}

/// One entry of a chart log: the largest `|y|` of the image of the tracked sub-torus at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartSample {
    pub t: f64,
    pub bound: f64,
}

/// A family of maps `s ↦ ρ_s`, `s ∈ [0, 1]`, with `ρ_0 = Id`.
pub trait MapFamily: Send + Sync {
    fn at(&self, s: f64) -> SharedMap;
}

impl MapFamily for FlowMap {
    fn at(&self, s: f64) -> SharedMap {
        Arc::new(self.partial(s))
    }
}

/// Constant identity family.
pub struct IdentityFamily(pub usize);

impl MapFamily for IdentityFamily {
    fn at(&self, _: f64) -> SharedMap {
        Arc::new(Identity(self.0))
    }
}

/// A chain of flows run one after another, `s ∈ [0,1]` split evenly between them.
#[derive(Clone)]
pub struct ChainFamily {
    pub dim: usize,
    pub maps: Vec<FlowMap>,
}

impl ChainFamily {
    pub fn end(&self) -> SharedMap {
        self.at(1.0)
    }
}

impl MapFamily for ChainFamily {
    fn at(&self, s: f64) -> SharedMap {
        let k = self.maps.len();
        let pos = s.clamp(0.0, 1.0) * k as f64;
        let mut maps: Vec<SharedMap> = Vec::new();
        for (i, m) in self.maps.iter().enumerate() {
            let local = (pos - i as f64).clamp(0.0, 1.0);
            if local <= 0.0 {
                break;
            }
            maps.push(if local >= 1.0 { Arc::new(m.clone()) } else { Arc::new(m.partial(local)) });
        }
        if maps.is_empty() {
            return Arc::new(Identity(self.dim));
        }
        Arc::new(Composite(maps))
    }
}

/// Five-segment isotopies built with the plateau function.
pub struct Concatenation {
    pub n: usize,
    pub first: Section,
    pub middle: Arc<dyn MapFamily>,
    pub last: Section,
    pub steps: usize,
    /// `τ` (the isotopy moving `L`) or `ρ` (moving `L′`).
    pub kind: ConcatKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConcatKind {
    /// `φ^{3h}_{X_{L'}}`, `ρ_{3h−1}∘φ¹_{X_{L'}}`, `φ^{2−3h}_{X_{L''}}∘ρ₁∘φ¹_{X_{L'}}`.
    Tau,
    /// `φ^{−3h}_{X_{L'}}`, `ψ_{3h−1}∘φ^{−1}_{X_{L'}}`, `φ^{3h−2}_{X_{L''}}∘ψ₁∘φ^{−1}_{X_{L'}}`.
    Rho,
}

impl Concatenation {
    fn lift_flow(&self, s: &Section, time: f64) -> SharedMap {
        let f = phi_map(s, self.steps);
        if time >= 0.0 {
            Arc::new(f.partial(time))
        } else {
            Arc::new(f.partial(-time).inverse())
        }
    }

    /// The map at parameter `t`.
    pub fn at(&self, t: f64) -> SharedMap {
        let h = plateau(t);
        let sign = if self.kind == ConcatKind::Tau { 1.0 } else { -1.0 };
        let head = |time: f64| self.lift_flow(&self.first, sign * time);
        if t <= 0.2 {
            return head(3.0 * h);
        }
        let s = if t <= 0.4 {
            0.0
        } else if t <= 0.6 {
            (3.0 * h - 1.0).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let mut maps = vec![head(1.0), self.middle.at(s)];
        if t > 0.8 {
            let tail = match self.kind {
                ConcatKind::Tau => 2.0 - 3.0 * h,
                ConcatKind::Rho => 3.0 * h - 2.0,
            };
            maps.push(self.lift_flow(&self.last, tail));
        }
        Arc::new(Composite(maps))
    }

    pub fn end(&self) -> SharedMap {
        self.at(1.0)
    }

    /// Samples `t` on a uniform grid and records `max |y|` of the image of `L` (for `τ`)
    /// or of `L′ = Graph(first)` (for `ρ`); errors on chart exit.
    pub fn chart_log(&self, samples: usize, per_axis: usize) -> Result<Vec<ChartSample>> {
        let n = self.n;
        let start: Vec<Vec<f64>> = match self.kind {
            ConcatKind::Tau => l_points(n, per_axis),
            ConcatKind::Rho => {
                let c = self.first.compile();
                crate::symplectic::grid(n, per_axis).iter().map(|x| c.graph_point(x)).collect()
            }
        };
        let mut log = Vec::new();
        for k in 0..=samples {
            let t = k as f64 / samples as f64;
            let m = self.at(t);
            let r = sample(m.as_ref(), &start, self.steps)?;
            let bound = max_y(&r.images, n);
            if bound >= CHART_RADIUS {
                return Err(Error::ChartExit { bound, time: Some(t) });
            }
            log.push(ChartSample { t, bound });
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{rat, rat_int};
    use crate::exterior::TrigMultiVector;
    use crate::torus::TorusModel;
    use crate::trig::TrigScalar;
    use smallvec::smallvec;

    #[test]
    fn cutoff_and_plateau() {
        let c = Cutoff::default();
        assert_eq!(c.value(&[0.0]), 1.0);
        assert_eq!(c.value(&[0.49]), 0.0);
        let (a, b) = (c.value(&[0.35]), c.value(&[0.36]));
        assert!(0.0 < b && b < a && a < 1.0);
        assert_eq!(plateau(0.0), 0.0);
        assert_eq!(plateau(0.3), 1.0 / 3.0);
        assert_eq!(plateau(0.7), 2.0 / 3.0);
        assert_eq!(plateau(1.0), 1.0);
        for k in 0..1000 {
            let t = k as f64 / 1000.0;
            assert!(plateau(t + 1e-3) >= plateau(t));
        }
    }

    #[test]
    fn closed_form_flows() {
        let x: TrigMultiVector = TrigMultiVector::monomial(2, &[1], TrigScalar::sin(smallvec![1, 0], rat_int(1)));
        let pts = crate::symplectic::grid(2, 4);
        let r = flow(Arc::new(TrigField(x.compile())), 1.0, 50, &pts).unwrap();
        for (p, (q, j)) in pts.iter().zip(r.images.iter().zip(&r.jacobians)) {
            let s = (2.0 * std::f64::consts::PI * p[0]).sin();
            assert!((q[1] - p[1] - s).abs() < 1e-12);
            let c = 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * p[0]).cos();
            assert!((j[(1, 0)] - c).abs() < 1e-10);
            assert!(j[(0, 1)].abs() < 1e-14);
        }
    }

    #[test]
    fn rk4_order() {
        // ẏ = cos(2πy): error ratio between 20 and 40 steps
        let x: TrigMultiVector = TrigMultiVector::monomial(2, &[1], TrigScalar::cos(smallvec![0, 1], rat(1, 2)));
        let f = Arc::new(TrigField(x.compile()));
        let p = vec![vec![0.0, 0.1]];
        let exact = flow(f.clone(), 1.0, 2000, &p).unwrap().images[0][1];
        let e1 = (flow(f.clone(), 1.0, 20, &p).unwrap().images[0][1] - exact).abs();
        let e2 = (flow(f, 1.0, 40, &p).unwrap().images[0][1] - exact).abs();
        assert!(e1 / e2 >= 12.0, "{e1} {e2}");
    }

    #[test]
    fn phi_l_lands_on_graph() {
        let m = TorusModel::new(1);
        let s = Section::new(m, TrigForm::monomial(1, &[0], TrigScalar::sin(smallvec![1], rat(1, 5)))).unwrap();
        let r = phi_l(&s, 100, &l_points(1, 16)).unwrap();
        for (p, q) in r.points.iter().zip(&r.images) {
            let y = 0.2 * (2.0 * std::f64::consts::PI * p[0]).sin();
            assert!((q[1] - y).abs() < 1e-10 && (q[0] - p[0]).abs() < 1e-15);
        }
        assert!(phi_l(&Section::zero(m), 10, &l_points(1, 4)).unwrap().images == l_points(1, 4));
    }

    #[test]
    fn moser_t2() {
        let m = TorusModel::new(1);
        let w: TrigForm = m.omega_can();
        let beta = TrigForm::monomial(2, &[0], TrigScalar::sin(smallvec![0, 1], rat(1, 20)));
        let w2 = w.add(&beta.exterior_derivative());
        let r = moser_solve(&m, &w, &w2, &beta, 250, 16).unwrap();
        assert!(r.residual < 1e-6, "{}", r.residual);
        assert!(r.l_drift < 1e-8);
        let bad = TrigForm::monomial(2, &[0], TrigScalar::cos(smallvec![0, 1], rat(1, 20)));
        assert!(moser_solve(&m, &w, &w.add(&bad.exterior_derivative()), &bad, 10, 4).is_err());
    }

    #[test]
    fn gronwall_example() {
        let m = TorusModel::new(1);
        let s = Section::new(m, TrigForm::monomial(1, &[0], TrigScalar::sin(smallvec![1], rat(1, 5)))).unwrap();
        let g = gronwall_check(&s, 100, 12).unwrap();
        assert!(g.holds(), "{g:?}");
        let z = gronwall_check(&Section::zero(m), 10, 4).unwrap();
        assert_eq!((z.position, z.jacobian), (0.0, 0.0));
    }
}
