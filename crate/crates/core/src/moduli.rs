//! Deformation pairs `(ω′, L′)`, the map `q(ω′, L′) = φ_{L′}^*ω′`, coordinates in `H²(M,L)`,
//! equivalence witnesses, prolongation of cone cocycles and the comparison with `H¹(L)` and `H²(M)`.
//!
//! Forms are carried as pullbacks `g^*ω₀` of an exact trig form along a chain of flows.
//! Chaining the Cartan homotopies gives `g^*ω₀ = ω₀ + dΛ`, so the relative class of
//! `ω − g^*ω₀` is `J[(ω − ω₀, ι_L^*Λ)]`; only `ι_L^*Λ` needs sampling, on `L`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use smallvec::smallvec;

use crate::chart::{self, Section, CHART_RADIUS};
use crate::cochain::{is_cocycle, CohomologyClass, ComplexKind, ConeElement, Engine};
use crate::coeff::{rat, Coeff, PiPoly, Rational};
use crate::error::{Error, Result};
use crate::exterior::{TrigForm, TrigMultiVector};
use crate::flows::{
    self, flow_homotopy, flow_point, phi_map, pullback_check, sample, wrap, ChainFamily, ChartSample, Composite,
    ConcatKind, Concatenation, CutoffLift, DualField, FlowMap, Identity, Pullback, SharedMap, SmoothMap,
    TrigField, VectorField,
};
use crate::koszul::Koszul;
use crate::numerics::{self, gauss_legendre};
use crate::symplectic::{grid, shared, ConstantSymplectic, SharedField, SymplecticForm};
use crate::torus::TorusModel;
use crate::trig::TrigScalar;

/// Grid sizes, step counts and tolerances.
#[derive(Clone, Debug)]
pub struct ModuliOptions {
    /// RK4 steps per unit time.
    pub steps: usize,
    /// Verification grid per axis on `M` (and on `L`).
    pub grid: usize,
    /// Sampling grid per axis on `L` for spectral fits of `ι_L^*Λ`.
    pub l_grid: usize,
    /// Sampling grid per axis on `M` for spectral fits of 2-forms.
    pub fit_grid: usize,
    /// Grid per axis for witness residuals.
    pub witness_grid: usize,
    /// Gauss–Legendre nodes for periods and time integrals.
    pub nodes: usize,
    pub lagrangian_tol: f64,
    pub exact_tol: f64,
    pub numeric_tol: f64,
}

impl ModuliOptions {
    pub fn for_model(model: &TorusModel) -> Self {
        let small = model.n == 1;
        ModuliOptions {
            steps: 400,
            grid: if small { 16 } else { 6 },
            l_grid: if small { 32 } else { 16 },
            fit_grid: if small { 32 } else { 8 },
            witness_grid: if small { 12 } else { 4 },
            nodes: 64,
            lagrangian_tol: 1e-7,
            exact_tol: 1e-7,
            numeric_tol: 1e-5,
        }
    }
}

/// `g^*ω₀` with `g = pulls[k−1] ∘ … ∘ pulls[0]`.
#[derive(Clone)]
pub struct PulledForm {
    pub base: TrigForm,
    pub pulls: Vec<FlowMap>,
}

impl std::fmt::Debug for PulledForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PulledForm")
            .field("base", &self.base)
            .field("pulls", &self.pulls.len())
            .finish()
    }
}

impl PulledForm {
    pub fn exact(base: TrigForm) -> Self {
        PulledForm { base, pulls: Vec::new() }
    }

    pub fn is_exact(&self) -> bool {
        self.pulls.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn map(&self) -> SharedMap {
        if self.pulls.is_empty() {
            Arc::new(Identity(self.dim()))
        } else {
            Arc::new(Composite(self.pulls.iter().map(|m| Arc::new(m.clone()) as SharedMap).collect()))
        }
    }

    pub fn field(&self) -> SharedField {
        let c = Arc::new(self.base.compile());
        if self.pulls.is_empty() {
            c
        } else {
            Arc::new(Pullback { map: self.map(), form: c })
        }
    }

    /// `F^*(g^*ω₀)` for `F = first[j−1] ∘ … ∘ first[0]`.
    pub fn pulled_back(&self, first: &[FlowMap]) -> Self {
        let mut pulls = first.to_vec();
        pulls.extend(self.pulls.iter().cloned());
        PulledForm {
            base: self.base.clone(),
            pulls,
        }
    }

    /// `g(p)`, `Dg`, and `Λ_p` with `g^*ω₀ − ω₀ = dΛ`.
    pub fn homotopy(&self, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>, Vec<f64>)> {
        let w = self.base.compile();
        let n = p.len();
        let mut q = p.to_vec();
        let mut jac = DMatrix::identity(n, n);
        let mut lam = vec![0.0; n];
        for m in &self.pulls {
            if m.t0 == m.t1 {
                continue;
            }
            let (q2, j2, l) = flow_homotopy(m.field.as_ref(), &w, m.t0, m.t1, m.steps, &q)?;
            // pull the 1-form at q back to p
            let row = nalgebra::RowDVector::from_vec(l) * &jac;
            for (a, b) in lam.iter_mut().zip(row.iter()) {
                *a += b;
            }
            jac = j2 * jac;
            q = q2;
        }
        Ok((q, jac, lam))
    }
}

fn inverse_chain(maps: &[FlowMap]) -> Vec<FlowMap> {
    maps.iter().rev().map(|m| m.inverse()).collect()
}

/// A pair `(ω′, L′ = Graph σ′)` with its certificates.
#[derive(Clone, Debug)]
pub struct DeformationPair {
    pub omega: PulledForm,
    pub section: Section,
    /// `min |det ω′|` on the verification grid.
    pub certificate: f64,
    /// `sup |ι_{L′}^*ω′|` (zero on the exact path).
    pub lagrangian_residual: f64,
}

/// `q(ω′, L′)` with its Lagrangian check along `L`.
pub struct QImage {
    pub form: PulledForm,
    pub field: SharedField,
    pub exact: Option<TrigForm>,
    pub lagrangian_residual: f64,
}

/// Coordinates of `[ω − q(ω′, L′)]` in the stored basis of `H²(M,L)`.
#[derive(Clone, Debug)]
pub struct Classification {
    pub coords: Vec<f64>,
    /// Periods route (always computed).
    pub numeric: Vec<f64>,
    pub exact: Option<CohomologyClass>,
    /// `max |numeric − exact|` when both exist.
    pub agreement: Option<f64>,
    pub w_norm: f64,
    /// `ℓ¹` size of `ι_L^*` of the sampled representative (fit quality).
    pub relative_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum WitnessRoute {
    /// Moser between exact forms, conjugated by the flows carried by the pairs.
    Exact,
    /// Moser between spectral fits of the two `q`-images.
    Fitted,
}

/// An isotopy `ρ` with `ρ₁^*ω″ = ω′` and `ρ₁(L′) = L″`, sampled.
#[derive(Clone, Debug)]
pub struct EquivalenceWitness {
    pub route: WitnessRoute,
    pub coordinate_gap: f64,
    pub moser_residual: f64,
    /// `sup |ρ₁^*ω″ − ω′|` on the witness grid.
    pub residual: f64,
    /// `sup |y(ρ₁(x, σ′(x))) − σ″(x(ρ₁(…)))|`.
    pub l_residual: f64,
    pub chart_log: Vec<ChartSample>,
    pub tolerance: f64,
}

impl EquivalenceWitness {
    pub fn holds(&self) -> bool {
        self.residual <= self.tolerance && self.l_residual <= self.tolerance
    }
}

/// `τ₁ = φ_{L″}^{-1} ∘ ρ₁ ∘ φ_{L′}` for a transported pair: it fixes `L` and `τ₁^*q(p₂) = q(p₁)`.
#[derive(Clone, Debug)]
pub struct TauCheck {
    pub residual: f64,
    pub l_drift: f64,
    pub chart_log: Vec<ChartSample>,
}

/// The image of a pair in the Maurer–Cartan picture.
#[derive(Clone, Debug)]
pub struct McClass {
    pub exact: Option<TrigForm>,
    pub beta: TrigForm<f64>,
    /// `sup |F(β) − (q − ω)|` on the grid.
    pub f_residual: f64,
    /// `ℓ¹` size of `dβ + ½[β,β]_π`.
    pub mc_residual: f64,
    /// `ℓ¹` size of `ι_L^*β`.
    pub relative_residual: f64,
    /// Reported, not enforced: the inversion only needs `Id − π♯F♭` invertible.
    pub w_norm: f64,
}

#[derive(Clone, Debug)]
pub struct PathSample {
    pub t: f64,
    pub w_norm: f64,
    pub chart_bound: f64,
}

/// A path `((φ_t^{-1})^*(ω + t(η − dβ̃)), φ_t(L))` and its first-order data.
#[derive(Clone, Debug)]
pub struct Prolongation {
    pub epsilon: f64,
    pub samples: Vec<PathSample>,
    /// `sup |Δω/Δt − η|` at `t = 0`.
    pub omega_error: f64,
    /// `sup |Δσ/Δt − β|` at `t = 0`.
    pub sigma_error: f64,
    /// Cone-cocycle residual of the finite-difference derivative.
    pub cocycle_residual: f64,
    /// `J`-image coordinates of the finite-difference derivative.
    pub j_coords: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DiagramReport {
    /// `sup |ι_L^*∫φ_t^*(ι_X ω)dt + σ|`.
    pub first_square: f64,
    /// `max |coords[ω − φ_{L′}^*ω] − coords[d σ̃]|`.
    pub first_coords: f64,
    pub second_square_exact: bool,
    pub relative: Vec<f64>,
    pub absolute: Vec<f64>,
}

pub struct Moduli {
    pub model: TorusModel,
    pub engine: Engine,
    pub base: ConstantSymplectic,
    pub koszul: Koszul,
    pub omega: TrigForm,
    pub opts: ModuliOptions,
    reps: Vec<TrigForm>,
    cycles: Vec<(usize, usize)>,
    rep_periods: DMatrix<f64>,
}

impl Moduli {
    pub fn new(model: TorusModel, budget: i64) -> Self {
        Self::with_options(model, budget, ModuliOptions::for_model(&model))
    }

    pub fn with_options(model: TorusModel, budget: i64, opts: ModuliOptions) -> Self {
        let engine = Engine::new(model, budget);
        let reps: Vec<TrigForm> = engine
            .cohomology(ComplexKind::Relative, 2)
            .reps
            .iter()
            .map(|r| r.a.clone())
            .collect();
        let cycles = numerics::relative_cycles(&model);
        let zero = vec![0.0; model.dim()];
        let mut rep_periods = DMatrix::zeros(cycles.len(), reps.len());
        for (c, &(i, j)) in cycles.iter().enumerate() {
            for (r, rep) in reps.iter().enumerate() {
                rep_periods[(c, r)] = numerics::period(&rep.compile(), i, j, &zero, opts.nodes);
            }
        }
        Moduli {
            model,
            engine,
            base: ConstantSymplectic::canonical(&model),
            koszul: Koszul::canonical(model),
            omega: model.omega_can(),
            opts,
            reps,
            cycles,
            rep_periods,
        }
    }

    /// Basis representatives of `H²(M,L)`.
    pub fn basis(&self) -> &[TrigForm] {
        &self.reps
    }

    pub fn cycles(&self) -> &[(usize, usize)] {
        &self.cycles
    }

    fn steps_for(&self, t: f64) -> usize {
        ((self.opts.steps as f64 * t.abs()).ceil() as usize).max(1)
    }

    /// Validates and certifies a pair.
    pub fn pair(&self, omega: PulledForm, section: Section) -> Result<DeformationPair> {
        if omega.dim() != self.model.dim() || section.model != self.model {
            return Err(Error::Dimension("pair lives on a different torus".into()));
        }
        if !chart::in_chart(&section) {
            return Err(Error::ChartExit { bound: section.bound(), time: None });
        }
        let (certificate, lagrangian_residual) = if omega.is_exact() {
            let f = SymplecticForm::from_exact(omega.base.clone(), self.opts.grid)?;
            let (_, r) = chart::is_lagrangian(&omega.base, &section, self.opts.grid, self.opts.lagrangian_tol);
            (f.certificate, r.residual())
        } else {
            let field = omega.field();
            let f = SymplecticForm::from_field(field.clone(), self.opts.grid.min(8))?;
            (f.certificate, chart::numeric_graph_pullback(field.as_ref(), &section, self.opts.grid))
        };
        if lagrangian_residual > self.opts.lagrangian_tol {
            return Err(Error::Precondition(format!(
                "L′ is not Lagrangian for ω′ (residual {lagrangian_residual:e})"
            )));
        }
        Ok(DeformationPair {
            omega,
            section,
            certificate,
            lagrangian_residual,
        })
    }

    /// `(ω′, L)` for an exact `ω′`.
    pub fn exact_pair(&self, w: TrigForm) -> Result<DeformationPair> {
        self.pair(PulledForm::exact(w), Section::zero(self.model))
    }

    fn is_zero_section(s: &Section) -> bool {
        s.sigma.is_zero()
    }

    /// `q(ω′, L′) = φ_{L′}^*ω′`; the identity on `ω′` when `L′ = L`.
    pub fn q_map(&self, p: &DeformationPair) -> Result<QImage> {
        let form = if Self::is_zero_section(&p.section) {
            p.omega.clone()
        } else {
            p.omega.pulled_back(&[phi_map(&p.section, self.opts.steps)])
        };
        let n = self.model.n;
        let pts = flows::l_points(n, self.opts.grid);
        let image = sample(form.map().as_ref(), &pts, self.opts.steps)?;
        let w = form.base.compile();
        let lagrangian_residual = image
            .images
            .iter()
            .zip(&image.jacobians)
            .map(|(q, j)| {
                let m = j.transpose() * crate::symplectic::TwoFormField::matrix(&w, q) * j;
                m.view((0, 0), (n, n)).amax()
            })
            .fold(0.0, f64::max);
        if lagrangian_residual > self.opts.lagrangian_tol {
            return Err(Error::Precondition(format!(
                "q-image is not Lagrangian for L (residual {lagrangian_residual:e})"
            )));
        }
        Ok(QImage {
            exact: form.is_exact().then(|| form.base.clone()),
            field: form.field(),
            form,
            lagrangian_residual,
        })
    }

    /// `ι_L^*Λ` on the `l_grid` of `L`, fitted.
    fn restricted_homotopy(&self, form: &PulledForm) -> Result<TrigForm<f64>> {
        let n = self.model.n;
        if form.is_exact() {
            return Ok(TrigForm::zero(n, 1));
        }
        let pts = flows::l_points(n, self.opts.l_grid);
        let vals: Result<Vec<Vec<f64>>> = pts
            .par_iter()
            .map(|p| Ok(form.homotopy(p)?.2[..n].to_vec()))
            .collect();
        Ok(numerics::fit_one_form_samples(&vals?, n, self.opts.l_grid, 1e-13))
    }

    /// Coordinates of a closed relative numeric 2-form from its periods.
    pub fn period_coordinates(&self, eta: &TrigForm<f64>) -> Vec<f64> {
        let c = eta.compile();
        let zero = vec![0.0; self.model.dim()];
        let p = DVector::from_iterator(
            self.cycles.len(),
            self.cycles
                .iter()
                .map(|&(i, j)| numerics::period(&c, i, j, &zero, self.opts.nodes)),
        );
        self.rep_periods
            .clone()
            .svd(true, true)
            .solve(&p, 1e-12)
            .expect("SVD solve")
            .iter()
            .copied()
            .collect()
    }

    /// `(ω − ω₀) − d ext(ι_L^*Λ)` for `q = ω₀ + dΛ`, with its relative defect.
    fn relative_representative(&self, form: &PulledForm) -> Result<(TrigForm<f64>, f64)> {
        let ell = self.restricted_homotopy(form)?;
        let eta = self
            .omega
            .sub(&form.base)
            .to_numeric()
            .sub(&self.model.extend(&ell).exterior_derivative());
        let defect = self.model.restrict(&eta).l1_bound();
        Ok((eta, defect))
    }

    /// `[(ω′, L′)] ↦ [ω − φ_{L′}^*ω′] ∈ H²(M,L)`, rejecting pairs outside `𝒪`.
    pub fn classify_pair(&self, p: &DeformationPair) -> Result<Classification> {
        let q = self.q_map(p)?;
        let w_norm = self.base.w_norm(q.field.as_ref(), self.opts.grid);
        if w_norm >= 1.0 {
            return Err(Error::NotInW(w_norm));
        }
        let (eta, relative_residual) = self.relative_representative(&q.form)?;
        let numeric = self.period_coordinates(&eta);
        let exact = match &q.exact {
            Some(w) => Some(self.engine.class_coordinates(&self.omega.sub(w))?),
            None => None,
        };
        let agreement = exact.as_ref().map(|e| max_gap(&e.to_f64(), &numeric));
        if let Some(a) = agreement {
            if a > 1e-6 {
                return Err(Error::Precondition(format!(
                    "period and exact coordinates disagree by {a:e}"
                )));
            }
        }
        Ok(Classification {
            coords: exact.as_ref().map(|e| e.to_f64()).unwrap_or_else(|| numeric.clone()),
            numeric,
            exact,
            agreement,
            w_norm,
            relative_residual,
        })
    }

    /// `[ω′] ↦ [ω − ω′] ∈ H²(M,L)` for `ω′ ∈ Def_L(ω) ∩ 𝒲`.
    pub fn classify_symplectic(&self, w: &TrigForm) -> Result<CohomologyClass> {
        let (inside, norm, _) = self.base.in_w(w, self.opts.grid)?;
        if !inside {
            return Err(Error::NotInW(norm));
        }
        let r = self.model.restrict(w);
        if !r.is_zero() {
            return Err(Error::NotRelative(r.num_terms()));
        }
        self.engine.class_coordinates(&self.omega.sub(w))
    }

    /// `(ω − Σ c_i η_i, L)`.
    pub fn realize_class(&self, c: &[PiPoly], guard: f64) -> Result<DeformationPair> {
        if c.len() != self.reps.len() {
            return Err(Error::Dimension(format!("{} coordinates for dim H² = {}", c.len(), self.reps.len())));
        }
        let size = c.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
        if size >= guard {
            return Err(Error::Guard(format!("|c|∞ = {size} ≥ {guard}")));
        }
        let mut w = self.omega.clone();
        for (ci, rep) in c.iter().zip(&self.reps) {
            w = w.sub(&rep.scale_coeff(ci));
        }
        let (inside, norm, _) = self.base.in_w(&w, self.opts.grid)?;
        if !inside {
            return Err(Error::NotInW(norm));
        }
        self.exact_pair(w)
    }

    pub fn realize_rational(&self, c: &[Rational], guard: f64) -> Result<DeformationPair> {
        let c: Vec<PiPoly> = c.iter().map(|q| PiPoly::rational(q.clone())).collect();
        self.realize_class(&c, guard)
    }

    /// `((ρ₁^{-1})^*ω′, ρ₁(L′))` for `ρ₁ = rho[k−1] ∘ … ∘ rho[0]`, with `ρ₁(L′) = Graph(target)` checked.
    pub fn transport(&self, p: &DeformationPair, rho: &[FlowMap], target: Section) -> Result<DeformationPair> {
        let n = self.model.n;
        let cs = p.section.compile();
        let ct = target.compile();
        let pts: Vec<Vec<f64>> = grid(n, self.opts.grid).iter().map(|x| cs.graph_point(x)).collect();
        let map = Composite(rho.iter().map(|m| Arc::new(m.clone()) as SharedMap).collect());
        let img = sample(&map, &pts, self.opts.steps)?;
        let miss = graph_miss(&img.images, &ct, n);
        if miss > 1e-8 {
            return Err(Error::Precondition(format!("ρ₁(L′) misses the target graph by {miss:e}")));
        }
        let mut pulls = inverse_chain(rho);
        pulls.extend(p.omega.pulls.iter().cloned());
        let omega = PulledForm {
            base: p.omega.base.clone(),
            pulls,
        };
        self.pair(omega, target)
    }

    /// A random isotopy `ρ = φ_γ ∘ ψ` with `ψ` preserving `L`, and the section `γ = ρ₁(L)`.
    pub fn random_isotopy<R: Rng>(&self, rng: &mut R, amplitude: f64) -> (Vec<FlowMap>, Section) {
        let n = self.model.n;
        let dim = self.model.dim();
        let amp_num = (amplitude * 1000.0).floor() as i64;
        let coeff = |rng: &mut R| rat(rng.gen_range(-amp_num..=amp_num), 1000);
        // tangent to L: ∂y components carry a factor sin(2πy_i)
        let mut y: TrigMultiVector = TrigMultiVector::zero(dim, 1);
        for i in 0..n {
            let mut k = crate::trig::zero_freq(dim);
            k[i] = 1;
            k[n + i] = 1;
            y.add_term(smallvec![i as u8], TrigScalar::sin(k, coeff(rng)));
            let mut k2 = crate::trig::zero_freq(dim);
            k2[n + i] = 1;
            let s: TrigScalar = TrigScalar::sin(k2, coeff(rng));
            let mut k3 = crate::trig::zero_freq(dim);
            k3[i] = 1;
            let c: TrigScalar = TrigScalar::cos(k3, rat(1, 1));
            y.add_term(smallvec![(n + i) as u8], s.mul(&c));
        }
        let shape = crate::random::Shape {
            max_freq: 1,
            modes: 2,
            max_num: 3,
        };
        let gamma = Section::new(self.model, crate::random::section(rng, &self.model, amplitude, shape))
            .expect("random section");
        let psi = FlowMap {
            field: Arc::new(TrigField(y.compile())),
            t0: 0.0,
            t1: 1.0,
            steps: self.opts.steps,
        };
        (vec![psi, phi_map(&gamma, self.opts.steps)], gamma)
    }

    /// `τ` for `p₂ = transport(p₁, ρ, ·)`.
    pub fn tau_check(&self, p1: &DeformationPair, rho: &[FlowMap], p2: &DeformationPair) -> Result<TauCheck> {
        let dim = self.model.dim();
        let tau = Concatenation {
            n: self.model.n,
            first: p1.section.clone(),
            middle: Arc::new(ChainFamily {
                dim,
                maps: rho.to_vec(),
            }),
            last: p2.section.clone(),
            steps: self.opts.steps,
            kind: ConcatKind::Tau,
        };
        let q1 = self.q_map(p1)?;
        let q2 = self.q_map(p2)?;
        let pts = grid(dim, self.opts.witness_grid);
        let end = tau.end();
        let f = sample(end.as_ref(), &pts, self.opts.steps)?;
        let residual = pullback_check(&f, q2.field.as_ref(), q1.field.as_ref());
        let lf = sample(end.as_ref(), &flows::l_points(self.model.n, self.opts.grid), self.opts.steps)?;
        let l_drift = flows::max_y(&lf.images, self.model.n);
        let chart_log = tau.chart_log(10, self.opts.witness_grid)?;
        Ok(TauCheck {
            residual,
            l_drift,
            chart_log,
        })
    }

    /// The chain `G` with `q(p) = G^*ω₀`, if it maps `L` to itself.
    fn l_fixing_chain(&self, p: &DeformationPair) -> Result<Option<Vec<FlowMap>>> {
        let mut chain = Vec::new();
        if !Self::is_zero_section(&p.section) {
            chain.push(phi_map(&p.section, self.opts.steps));
        }
        chain.extend(p.omega.pulls.iter().cloned());
        if !self.model.restrict(&p.omega.base).is_zero() {
            return Ok(None);
        }
        if chain.is_empty() {
            return Ok(Some(chain));
        }
        let map = Composite(chain.iter().map(|m| Arc::new(m.clone()) as SharedMap).collect());
        let img = sample(&map, &flows::l_points(self.model.n, self.opts.grid), self.opts.steps)?;
        Ok((flows::max_y(&img.images, self.model.n) <= 1e-8).then_some(chain))
    }

    /// Builds `ρ` with `ρ₁ = φ_{L″} ∘ ψ₁ ∘ φ_{L′}^{-1}` where `ψ₁^*q(p₂) = q(p₁)` and `ψ` fixes `L`.
    pub fn equivalence_witness(&self, p1: &DeformationPair, p2: &DeformationPair) -> Result<EquivalenceWitness> {
        let c1 = self.classify_pair(p1)?;
        let c2 = self.classify_pair(p2)?;
        let gap = max_gap(&c1.coords, &c2.coords);
        let dim = self.model.dim();
        let chains = (self.l_fixing_chain(p1)?, self.l_fixing_chain(p2)?);
        let (route, middle, moser_residual, tolerance) = if let (Some(g1), Some(g2)) = chains {
            let diff = p2.omega.base.sub(&p1.omega.base);
            let beta = self.engine.relative_primitive(&diff).map_err(|_| {
                Error::NoSolution(format!("q-images are not cohomologous (coordinate gap {gap:e})"))
            })?;
            let chi = flows::moser_solve(
                &self.model,
                &p1.omega.base,
                &p2.omega.base,
                &beta,
                self.opts.steps,
                self.opts.witness_grid,
            )?;
            let mut maps = g1;
            maps.push(chi.map);
            maps.extend(inverse_chain(&g2));
            (WitnessRoute::Exact, ChainFamily { dim, maps }, chi.residual, self.opts.numeric_tol)
        } else {
            if gap > self.opts.numeric_tol {
                return Err(Error::NoSolution(format!("coordinates differ by {gap:e}")));
            }
            let q1 = self.q_map(p1)?;
            let q2 = self.q_map(p2)?;
            let f1 = numerics::fit_two_form(q1.field.as_ref(), self.opts.fit_grid, 1e-13);
            let f2 = numerics::fit_two_form(q2.field.as_ref(), self.opts.fit_grid, 1e-13);
            let beta = numerics::relative_primitive(&self.model, &f2.sub(&f1), self.opts.numeric_tol)?;
            let w2 = f1.add(&beta.exterior_derivative());
            let chi = flows::moser_solve(&self.model, &f1, &w2, &beta, self.opts.steps, self.opts.witness_grid)?;
            (
                WitnessRoute::Fitted,
                ChainFamily { dim, maps: vec![chi.map] },
                chi.residual,
                self.opts.numeric_tol,
            )
        };
        let rho = Concatenation {
            n: self.model.n,
            first: p1.section.clone(),
            middle: Arc::new(middle),
            last: p2.section.clone(),
            steps: self.opts.steps,
            kind: ConcatKind::Rho,
        };
        let end = rho.end();
        let pts = grid(dim, self.opts.witness_grid);
        let f = sample(end.as_ref(), &pts, self.opts.steps)?;
        let residual = pullback_check(&f, p2.omega.field().as_ref(), p1.omega.field().as_ref());
        let n = self.model.n;
        let cs = p1.section.compile();
        let gpts: Vec<Vec<f64>> = grid(n, self.opts.grid).iter().map(|x| cs.graph_point(x)).collect();
        let img = sample(end.as_ref(), &gpts, self.opts.steps)?;
        let l_residual = graph_miss(&img.images, &p2.section.compile(), n);
        let chart_log = rho.chart_log(10, self.opts.witness_grid)?;
        Ok(EquivalenceWitness {
            route,
            coordinate_gap: gap,
            moser_residual,
            residual,
            l_residual,
            chart_log,
            tolerance,
        })
    }

    /// `β = F^{-1}(q(p) − ω)`.
    pub fn to_mc_class(&self, p: &DeformationPair) -> Result<McClass> {
        let q = self.q_map(p)?;
        let w_norm = self.base.w_norm(q.field.as_ref(), self.opts.grid);
        let dim = self.model.dim();
        if let Some(w) = q.exact.as_ref().filter(|w| crate::symplectic::is_rational_constant(w)) {
            let beta = self.base.f_inverse_exact(&w.sub(&self.omega))?;
            let back = self.base.f_map_exact(&beta)?;
            let f_residual = back.sub(&w.sub(&self.omega)).to_numeric().l1_bound();
            return Ok(McClass {
                mc_residual: self.koszul.mc_residual(&beta).to_numeric().l1_bound(),
                relative_residual: self.model.restrict(&beta).to_numeric().l1_bound(),
                beta: beta.to_numeric(),
                exact: Some(beta),
                f_residual,
                w_norm,
            });
        }
        let omega = self.base.omega_f64().clone();
        let pts = grid(dim, self.opts.fit_grid);
        let mats: Result<Vec<DMatrix<f64>>> = pts
            .par_iter()
            .map(|p| {
                let f = q.field.matrix(p) - &omega;
                self.base.f_inverse_matrix(&f).ok_or_else(|| Error::Singular {
                    point: p.clone(),
                    det: 0.0,
                })
            })
            .collect();
        let beta = numerics::fit_two_form_samples(&mats?, dim, self.opts.fit_grid, 1e-14);
        let bc = beta.compile();
        let check = grid(dim, self.opts.grid);
        let f_residual = check
            .par_iter()
            .map(|p| {
                let f = self
                    .base
                    .f_matrix(&crate::symplectic::TwoFormField::matrix(&bc, p))
                    .unwrap_or_else(|| DMatrix::from_element(dim, dim, f64::INFINITY));
                (f - (q.field.matrix(p) - &omega)).amax()
            })
            .reduce(|| 0.0, f64::max);
        Ok(McClass {
            exact: None,
            mc_residual: self.koszul.mc_residual(&beta).l1_bound(),
            relative_residual: self.model.restrict(&beta).l1_bound(),
            beta,
            f_residual,
            w_norm,
        })
    }

    /// Prolongs a cone cocycle `(η, β)` along `(φ_t^{-1})^*(ω + t(η − dβ̃))`, `φ_t(L)`,
    /// with `φ` the flow of `ι_Y ω = −β̃`; `β̃` defaults to `p^*β`.
    pub fn prolong_cocycle(&self, eta: &TrigForm, beta: &TrigForm, extension: Option<&TrigForm>) -> Result<Prolongation> {
        let model = self.model;
        let n = model.n;
        let dim = model.dim();
        let beta = if beta.is_zero() { TrigForm::zero(n, 1) } else { beta.clone() };
        let eta = if eta.is_zero() { TrigForm::zero(dim, 2) } else { eta.clone() };
        let (ok, res) = is_cocycle(&model, &ConeElement::new(eta.clone(), beta.clone()));
        if !ok {
            return Err(Error::NotCocycle(format!(
                "dη has {} terms, ι_L^*η − dβ has {}",
                res.a.num_terms(),
                res.b.num_terms()
            )));
        }
        let ext = match extension {
            Some(e) => e.clone(),
            None => model.extend(&beta),
        };
        if model.restrict(&ext) != beta {
            return Err(Error::Precondition("extension does not restrict to β".into()));
        }
        let zeta = eta.sub(&ext.exterior_derivative());
        let omega_inv = self
            .base
            .omega_f64()
            .clone()
            .try_inverse()
            .expect("ω is nondegenerate");
        let y: Arc<dyn VectorField> = Arc::new(DualField {
            omega_inv,
            beta: if ext.is_zero() { TrigForm::<f64>::zero(dim, 1).compile() } else { ext.compile() },
        });
        let path = ProlongPath {
            y,
            omega: self.base.omega_f64().clone(),
            zeta: Arc::new(if zeta.is_zero() { TrigForm::<f64>::zero(dim, 2).compile() } else { zeta.compile() }),
            steps: self.opts.steps,
            n,
        };
        // ε: largest dyadic value with 𝒲 and chart certificates at the sampled times
        let mut epsilon = 1.0;
        let samples = loop {
            let mut ok = true;
            let mut out = Vec::new();
            for k in 0..=4 {
                let t = epsilon * k as f64 / 4.0;
                let w = path.omega_at(t);
                let w_norm = self.base.w_norm(w.as_ref(), 6.min(self.opts.grid));
                let chart_bound = path
                    .sections(t, &grid(n, self.opts.grid))?
                    .iter()
                    .flat_map(|v| v.iter().map(|a| a.abs()))
                    .fold(0.0, f64::max);
                ok &= w_norm < 1.0 && chart_bound < CHART_RADIUS;
                out.push(PathSample { t, w_norm, chart_bound });
            }
            if ok {
                break out;
            }
            epsilon /= 2.0;
            if epsilon < 1.0 / 1024.0 {
                return Err(Error::Guard("no admissible ε ≥ 2^-10".into()));
            }
        };
        let h = 1e-4;
        let mpts = grid(dim, self.opts.fit_grid.min(16));
        let (wp, wm) = (path.omega_at(h), path.omega_at(-h));
        let ec = eta.compile();
        let dmats: Vec<DMatrix<f64>> = mpts
            .par_iter()
            .map(|p| (wp.matrix(p) - wm.matrix(p)) / (2.0 * h))
            .collect();
        let omega_error = mpts
            .iter()
            .zip(&dmats)
            .map(|(p, m)| (m - crate::symplectic::TwoFormField::matrix(&ec, p)).amax())
            .fold(0.0, f64::max);
        let lpts = grid(n, self.opts.l_grid);
        let (sp, sm) = (path.sections(h, &lpts)?, path.sections(-h, &lpts)?);
        let dsig: Vec<Vec<f64>> = sp
            .iter()
            .zip(&sm)
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v) / (2.0 * h)).collect())
            .collect();
        let bc = Section::new(model, beta.clone())?.compile();
        let sigma_error = lpts
            .iter()
            .zip(&dsig)
            .map(|(x, d)| {
                bc.value(x)
                    .iter()
                    .zip(d)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let eta_fit = numerics::fit_two_form_samples(&dmats, dim, self.opts.fit_grid.min(16), 1e-9);
        let beta_fit = numerics::fit_one_form_samples(&dsig, n, self.opts.l_grid, 1e-9);
        let cocycle_residual = eta_fit
            .exterior_derivative()
            .l1_bound()
            .max(model.restrict(&eta_fit).sub(&beta_fit.exterior_derivative()).l1_bound());
        let j_form = eta_fit.sub(&model.extend(&beta_fit).exterior_derivative());
        let j_coords = self.period_coordinates(&j_form);
        Ok(Prolongation {
            epsilon,
            samples,
            omega_error,
            sigma_error,
            cocycle_residual,
            j_coords,
        })
    }

    /// Both squares of the comparison with `H¹(L) → H²(M,L) → H²(M)`.
    pub fn diagram_check(&self, sigma: &Section, w: &TrigForm) -> Result<DiagramReport> {
        if !sigma.is_closed() {
            return Err(Error::Precondition("σ is not closed".into()));
        }
        if !chart::in_chart(sigma) {
            return Err(Error::ChartExit { bound: sigma.bound(), time: None });
        }
        let n = self.model.n;
        let x = CutoffLift::new(sigma, 1.0);
        let (nodes, weights) = gauss_legendre(self.opts.nodes);
        let omega = self.base.omega_f64().clone();
        let integral = |p: &Vec<f64>| -> Result<Vec<f64>> {
            let mut acc = vec![0.0; n];
            for (t, wt) in nodes.iter().zip(&weights) {
                let (q, jac) = flow_point(&x, 0.0, *t, self.steps_for(*t), p)?;
                let (v, _) = x.value_jacobian(*t, &q)?;
                let row = nalgebra::RowDVector::from_vec(v) * &omega * jac;
                for i in 0..n {
                    acc[i] += wt * row[i];
                }
            }
            Ok(acc)
        };
        let lpts = flows::l_points(n, self.opts.l_grid);
        let vals: Result<Vec<Vec<f64>>> = lpts.par_iter().map(integral).collect();
        let vals = vals?;
        let cs = sigma.compile();
        let first_square = lpts
            .iter()
            .zip(&vals)
            .map(|(p, v)| {
                cs.value(&p[..n])
                    .iter()
                    .zip(v)
                    .map(|(s, i)| (s + i).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        // [ω − φ^*ω] = J[(0, ℓ)] = [−d ext ℓ] against the algebraic image [d σ̃]
        let ell = numerics::fit_one_form_samples(&vals, n, self.opts.l_grid, 1e-13);
        let numeric = self.period_coordinates(&self.model.extend(&ell).exterior_derivative().neg());
        let algebraic = self
            .engine
            .class_coordinates(&self.model.extend(&sigma.sigma).exterior_derivative())?;
        let first_coords = max_gap(&numeric, &algebraic.to_f64());
        let rel = self.classify_symplectic(w)?;
        let rep = self.engine.combine(ComplexKind::Relative, &rel).a;
        let forgot = self.engine.absolute_coordinates(&rep)?;
        let direct = self.engine.absolute_coordinates(&self.omega.sub(w))?;
        Ok(DiagramReport {
            first_square,
            first_coords,
            second_square_exact: forgot == direct,
            relative: rel.to_f64(),
            absolute: direct.to_f64(),
        })
    }
}

struct ProlongPath {
    y: Arc<dyn VectorField>,
    omega: DMatrix<f64>,
    zeta: SharedField,
    steps: usize,
    n: usize,
}

impl ProlongPath {
    fn flow_to(&self, t: f64) -> FlowMap {
        FlowMap {
            field: self.y.clone(),
            t0: 0.0,
            t1: t,
            steps: ((self.steps as f64 * t.abs()).ceil() as usize).max(1),
        }
    }

    /// `(φ_t^{-1})^*(ω + tζ)`.
    fn omega_at(&self, t: f64) -> SharedField {
        let omega = self.omega.clone();
        let zeta = self.zeta.clone();
        let dim = omega.nrows();
        let form = shared(dim, move |p| &omega + zeta.matrix(p) * t);
        if t == 0.0 {
            return form;
        }
        Arc::new(Pullback {
            map: Arc::new(self.flow_to(t).inverse()),
            form,
        })
    }

    /// `α_t(x)` with `φ_t(L) = Graph α_t`, by Newton on the base point.
    fn sections(&self, t: f64, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let n = self.n;
        let f = self.flow_to(t);
        xs.par_iter()
            .map(|x| {
                let mut x0 = x.clone();
                for _ in 0..30 {
                    let mut p = x0.clone();
                    p.resize(2 * n, 0.0);
                    let (q, j) = f.apply(&p)?;
                    let r = DVector::from_iterator(n, (0..n).map(|i| q[i] - x[i]));
                    if r.amax() < 1e-14 {
                        return Ok(q[n..].to_vec());
                    }
                    let step = j
                        .view((0, 0), (n, n))
                        .into_owned()
                        .lu()
                        .solve(&r)
                        .ok_or_else(|| Error::Integration {
                            point: p.clone(),
                            reason: "φ_t(L) is not a graph".into(),
                        })?;
                    for i in 0..n {
                        x0[i] -= step[i];
                    }
                }
                Err(Error::Integration {
                    point: x.clone(),
                    reason: "graph extraction did not converge".into(),
                })
            })
            .collect()
    }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `sup |wrap(y − σ(x))|` over image points `(x, y)`.
fn graph_miss(images: &[Vec<f64>], s: &chart::CompiledSection, n: usize) -> f64 {
    images
        .iter()
        .map(|q| {
            let v = s.value(&q[..n]);
            (0..n).map(|i| wrap(q[n + i] - v[i]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{rat, rat_int};

    fn t2() -> Moduli {
        Moduli::new(TorusModel::new(1), 2)
    }

    fn sin_section(m: &Moduli, c: Rational) -> Section {
        Section::new(m.model, TrigForm::monomial(1, &[0], TrigScalar::sin(smallvec![1], c))).unwrap()
    }

    #[test]
    fn classify_and_realize() {
        let m = t2();
        let zero = m.classify_pair(&m.exact_pair(m.omega.clone()).unwrap()).unwrap();
        assert!(zero.exact.as_ref().unwrap().is_zero());
        assert!(zero.agreement.unwrap() < 1e-12);
        let p = m.realize_rational(&[rat(1, 2)], 1.0).unwrap();
        let c = m.classify_pair(&p).unwrap();
        assert_eq!(c.exact.unwrap().coords, vec![PiPoly::rational(rat(1, 2))]);
        assert!(c.agreement.unwrap() < 1e-10);
        assert!(matches!(m.realize_rational(&[rat_int(2)], 1.0), Err(Error::Guard(_))));
        let w = p.omega.base.clone();
        assert_eq!(m.classify_symplectic(&w).unwrap().coords, vec![PiPoly::rational(rat(1, 2))]);
    }

    #[test]
    fn q_identity_and_inverse_flow() {
        let m = t2();
        let s = sin_section(&m, rat(1, 10));
        let omega = PulledForm {
            base: m.omega.clone(),
            pulls: vec![phi_map(&s, m.opts.steps).inverse()],
        };
        let p = m.pair(omega, s).unwrap();
        let q = m.q_map(&p).unwrap();
        let c = m.omega.compile();
        let err = grid(2, 8)
            .iter()
            .map(|x| (q.field.matrix(x) - crate::symplectic::TwoFormField::matrix(&c, x)).amax())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        let k = m.classify_pair(&p).unwrap();
        assert!(k.coords[0].abs() < 1e-6 && k.exact.is_none());
    }

    #[test]
    fn equivalent_pairs_and_witness() {
        let m = t2();
        let mut r = crate::random::rng(7);
        let p1 = m.realize_rational(&[rat(1, 3)], 1.0).unwrap();
        let (rho, gamma) = m.random_isotopy(&mut r, 0.1);
        let p2 = m.transport(&p1, &rho, gamma).unwrap();
        let (c1, c2) = (m.classify_pair(&p1).unwrap(), m.classify_pair(&p2).unwrap());
        assert!((c1.coords[0] - c2.coords[0]).abs() < 1e-6, "{:?} {:?}", c1.coords, c2.coords);
        let tau = m.tau_check(&p1, &rho, &p2).unwrap();
        assert!(tau.residual < 1e-6 && tau.l_drift < 1e-8, "{tau:?}");
        let w = m.equivalence_witness(&p1, &p2).unwrap();
        assert!(w.holds(), "{w:?}");
        // a different exact representative of the same class
        let gamma1 = TrigForm::monomial(2, &[0], TrigScalar::sin(smallvec![0, 1], rat(1, 40)));
        let p3 = m.exact_pair(p1.omega.base.add(&gamma1.exterior_derivative())).unwrap();
        let w = m.equivalence_witness(&p3, &p2).unwrap();
        assert!(w.holds() && w.moser_residual < 1e-6, "{w:?}");
        let far = m.realize_rational(&[rat(13, 30)], 1.0).unwrap();
        assert!(matches!(m.equivalence_witness(&far, &p2), Err(Error::NoSolution(_))));
        let same = m.exact_pair(m.omega.clone()).unwrap();
        assert!(m.equivalence_witness(&same, &same).unwrap().residual < 1e-12);
    }

    #[test]
    fn prolongation() {
        let m = t2();
        let zero = m.prolong_cocycle(&TrigForm::zero(2, 2), &TrigForm::zero(1, 1), None).unwrap();
        assert_eq!(zero.epsilon, 1.0);
        assert!(zero.omega_error < 1e-12 && zero.j_coords[0].abs() < 1e-12);
        let eta = m.basis()[0].clone();
        let line = m
            .prolong_cocycle(&eta.scale(&rat(1, 4)), &TrigForm::zero(1, 1), None)
            .unwrap();
        assert!(line.omega_error < 1e-8 && line.cocycle_residual < 1e-5);
        assert!((line.j_coords[0] - 0.25 * m.period_coordinates(&eta.to_numeric())[0]).abs() < 1e-5);
        let beta = TrigForm::monomial(1, &[0], TrigScalar::constant(1, PiPoly::rational(rat(1, 10))));
        let iso = m.prolong_cocycle(&TrigForm::zero(2, 2), &beta, None).unwrap();
        assert!(iso.sigma_error < 1e-5 && iso.j_coords[0].abs() < 1e-5, "{iso:?}");
        let zeta = TrigForm::monomial(2, &[0], TrigScalar::sin(smallvec![1, 1], rat(1, 20)));
        let (eta, beta) = (zeta.exterior_derivative(), m.model.restrict(&zeta));
        let iso = m.prolong_cocycle(&eta, &beta, Some(&zeta)).unwrap();
        assert!(iso.omega_error < 1e-5 && iso.sigma_error < 1e-5, "{iso:?}");
        assert!(iso.cocycle_residual < 1e-5 && iso.j_coords[0].abs() < 1e-5, "{iso:?}");
        let m4 = Moduli::new(TorusModel::new(2), 1);
        let bad: TrigForm = TrigForm::basis(4, &[0, 1]);
        assert!(matches!(
            m4.prolong_cocycle(&bad, &TrigForm::zero(2, 1), None),
            Err(Error::NotCocycle(_))
        ));
    }

    #[test]
    fn diagram() {
        let m = t2();
        let s = crate::chart::constant_section(m.model, &[rat(1, 10)]);
        let w = m.omega.sub(&m.basis()[0].scale(&rat(1, 3)));
        let d = m.diagram_check(&s, &w).unwrap();
        assert!(d.first_square < 1e-6 && d.first_coords < 1e-6, "{d:?}");
        assert!(d.second_square_exact);
        let z = m.diagram_check(&Section::zero(m.model), &m.omega).unwrap();
        assert!(z.first_square == 0.0 && z.relative.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn mc_class() {
        let m = t2();
        let w: TrigForm = m.omega.scale(&rat_int(2));
        let mc = m.to_mc_class(&m.exact_pair(w).unwrap()).unwrap();
        assert_eq!(mc.exact.unwrap(), m.omega.scale(&rat(1, 2)));
        let p = m.realize_rational(&[rat(1, 5)], 1.0).unwrap();
        let g = TrigForm::monomial(2, &[0], TrigScalar::sin(smallvec![0, 1], rat(1, 40)));
        let p = m.exact_pair(p.omega.base.add(&g.exterior_derivative())).unwrap();
        let mc = m.to_mc_class(&p).unwrap();
        assert!(mc.f_residual < 1e-8 && mc.mc_residual < 1e-6 && mc.relative_residual < 1e-8, "{mc:?}");
    }

    #[test]
    fn t4_classification() {
        let m = Moduli::new(TorusModel::new(2), 1);
        assert_eq!(m.basis().len(), 5);
        let c: Vec<Rational> = (0..5).map(|i| rat(i as i64 - 2, 20)).collect();
        let p1 = m.realize_rational(&c, 0.5).unwrap();
        let k1 = m.classify_pair(&p1).unwrap();
        assert!(k1.agreement.unwrap() < 1e-10);
        let mut r = crate::random::rng(3);
        let (rho, gamma) = m.random_isotopy(&mut r, 0.08);
        let p2 = m.transport(&p1, &rho, gamma).unwrap();
        let k2 = m.classify_pair(&p2).unwrap();
        let gap = k1.coords.iter().zip(&k2.coords).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-6, "{gap}");
        let w = m.equivalence_witness(&p1, &p2).unwrap();
        assert!(w.holds(), "{w:?}");
    }
}
