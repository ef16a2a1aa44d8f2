//! Pointwise symplectic and Poisson linear algebra.
//!
//! Matrix conventions: a 2-form `ω` has matrix `Ω_ij = ω(e_i, e_j)`, so
//! `ω♭(v) = ι_v ω = Ωᵀ v`. A bivector `π` has `Π_ij = π(dx_i, dx_j)` and
//! `π♯ξ = Πᵀ ξ`. With `π = −ω⁻¹` this means `Π = −Ω⁻¹` and `π♯∘ω♭ = −Id`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::coeff::PiPoly;
use crate::error::{Error, Result};
use crate::exterior::{CompiledField, TrigForm, TrigMultiVector};
use crate::linalg::{r_add, r_identity, r_inverse, r_mul, r_neg, r_to_f64, RMat};
use crate::torus::TorusModel;

/// A 2-form that can be evaluated pointwise as an antisymmetric matrix.
pub trait TwoFormField: Send + Sync {
    fn dim(&self) -> usize;
    fn matrix(&self, p: &[f64]) -> DMatrix<f64>;
}

impl TwoFormField for CompiledField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn matrix(&self, p: &[f64]) -> DMatrix<f64> {
        CompiledField::matrix(self, p)
    }
}

/// A closure-backed 2-form.
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync> TwoFormField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn matrix(&self, p: &[f64]) -> DMatrix<f64> {
        (self.f)(p)
    }
}

pub type SharedField = Arc<dyn TwoFormField>;

pub fn shared<F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static>(dim: usize, f: F) -> SharedField {
    Arc::new(FnField { dim, f })
}

pub fn compiled(w: &TrigForm) -> SharedField {
    Arc::new(w.compile())
}

/// `Σ c_i w_i` pointwise.
pub fn combination(terms: Vec<(f64, SharedField)>) -> SharedField {
    let dim = terms[0].1.dim();
    shared(dim, move |p| {
        let mut m = DMatrix::zeros(dim, dim);
        for (c, w) in &terms {
            m += w.matrix(p) * *c;
        }
        m
    })
}

/// Regular grid `{i / g}` in every coordinate.
pub fn grid(dim: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..per_axis).map(move |i| {
                    let mut q = p.clone();
                    q.push(i as f64 / per_axis as f64);
                    q
                })
            })
            .collect();
    }
    out
}

/// Default verification grid size per axis for `T^N`.
pub fn default_grid(dim: usize) -> usize {
    if dim <= 2 {
        32
    } else {
        12
    }
}

/// A constant-coefficient symplectic form with its exact Poisson inverse.
#[derive(Clone, Debug)]
pub struct ConstantSymplectic {
    pub form: TrigForm,
    pub omega: RMat,
    pub pi_mat: RMat,
    pub pi: TrigMultiVector,
    omega_f: DMatrix<f64>,
    pi_f: DMatrix<f64>,
}

fn rational_matrix(w: &TrigForm) -> Option<RMat> {
    w.constant_matrix()?
        .into_iter()
        .map(|r| r.into_iter().map(|c| c.as_rational()).collect::<Option<Vec<_>>>())
        .collect()
}

impl ConstantSymplectic {
    pub fn new(form: TrigForm) -> Result<Self> {
        let omega = rational_matrix(&form)
            .ok_or_else(|| Error::Precondition("base form must have constant rational coefficients".into()))?;
        let inv = r_inverse(&omega).ok_or(Error::Degenerate {
            point: vec![],
            det: 0.0,
        })?;
        let pi_mat = r_neg(&inv);
        let dim = form.dim();
        let pi = TrigMultiVector::from_matrix(
            &pi_mat
                .iter()
                .map(|r| r.iter().map(|q| PiPoly::rational(q.clone())).collect())
                .collect::<Vec<Vec<PiPoly>>>(),
        );
        debug_assert_eq!(pi.dim(), dim);
        Ok(ConstantSymplectic {
            omega_f: r_to_f64(&omega),
            pi_f: r_to_f64(&pi_mat),
            form,
            omega,
            pi_mat,
            pi,
        })
    }

    pub fn canonical(model: &TorusModel) -> Self {
        Self::new(model.omega_can()).expect("ω_can is symplectic")
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    pub fn omega_f64(&self) -> &DMatrix<f64> {
        &self.omega_f
    }

    pub fn pi_f64(&self) -> &DMatrix<f64> {
        &self.pi_f
    }

    /// `ω♭(X) = ι_X ω`, exactly.
    pub fn flat(&self, x: &TrigMultiVector) -> TrigForm {
        self.form.contract(x)
    }

    /// `π♯ξ` for a 1-form, exactly.
    pub fn sharp(&self, xi: &TrigForm) -> TrigMultiVector {
        xi.exterior_power_map(&self.pi_mat, self.dim())
    }

    /// `∧^p π♯` on a `p`-form, exactly.
    pub fn wedge_sharp(&self, beta: &TrigForm) -> TrigMultiVector {
        beta.exterior_power_map(&self.pi_mat, self.dim())
    }

    /// The inverse of [`Self::wedge_sharp`].
    pub fn wedge_flat_inverse(&self, p: &TrigMultiVector) -> TrigForm {
        let inv = r_inverse(&self.pi_mat).expect("Π is invertible");
        p.exterior_power_map(&inv, self.dim())
    }

    /// `sup_grid ‖π♯∘ω̃♭ + Id‖₂`, the distance to `ω` used to define `𝒲`.
    pub fn w_norm(&self, w: &dyn TwoFormField, per_axis: usize) -> f64 {
        let pts = grid(self.dim(), per_axis);
        pts.par_iter()
            .map(|p| {
                let a = w.matrix(p) * &self.pi_f + DMatrix::identity(self.dim(), self.dim());
                a.singular_values().max()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Membership in `𝒲` for a closed trig 2-form; returns the norm and the min `|det|` certificate.
    pub fn in_w(&self, w: &TrigForm, per_axis: usize) -> Result<(bool, f64, f64)> {
        let d = w.exterior_derivative();
        if !d.is_zero() {
            return Err(Error::NotClosed(d.num_terms()));
        }
        let c = w.compile();
        let norm = self.w_norm(&c, per_axis);
        let det = min_abs_det(&c, per_axis);
        Ok((norm < 1.0, norm, det))
    }

    /// Pointwise matrix of `F(β)`: `(I + BΠ)⁻¹ B`.
    pub fn f_matrix(&self, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let n = self.dim();
        let a = DMatrix::identity(n, n) + b * &self.pi_f;
        a.lu().solve(b)
    }

    /// Pointwise matrix of `F⁻¹`: `B = F(I − ΠF)⁻¹`.
    pub fn f_inverse_matrix(&self, f: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let n = self.dim();
        let a = DMatrix::identity(n, n) - &self.pi_f * f;
        let inv = a.try_inverse()?;
        Some(f * inv)
    }

    /// `F(β)` as a pointwise field, after checking `Id + π♯β♭` on the grid.
    pub fn f_map(&self, beta: &TrigForm, per_axis: usize) -> Result<SharedField> {
        let c = Arc::new(beta.compile());
        self.f_map_field(c, per_axis)
    }

    pub fn f_map_field(&self, beta: SharedField, per_axis: usize) -> Result<SharedField> {
        let n = self.dim();
        let pi = self.pi_f.clone();
        let pts = grid(n, per_axis);
        let worst = pts
            .par_iter()
            .map(|p| {
                let a = DMatrix::identity(n, n) + beta.matrix(p) * &pi;
                (a.determinant().abs(), p.clone())
            })
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((det, p)) = worst {
            if det < 1e-12 {
                return Err(Error::Singular { point: p, det });
            }
        }
        let me = self.clone();
        Ok(shared(n, move |p| {
            me.f_matrix(&beta.matrix(p)).unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN))
        }))
    }

    /// Exact `F(β)` for constant rational `β`.
    pub fn f_map_exact(&self, beta: &TrigForm) -> Result<TrigForm> {
        let b = rational_matrix(beta)
            .ok_or_else(|| Error::Precondition("exact F needs constant rational β".into()))?;
        let a = r_add(&r_identity(self.dim()), &r_mul(&b, &self.pi_mat));
        let inv = r_inverse(&a).ok_or_else(|| Error::Singular {
            point: vec![0.0; self.dim()],
            det: 0.0,
        })?;
        Ok(from_rmat(&r_mul(&inv, &b)))
    }

    /// Exact `F⁻¹(φ)` for constant rational `φ`.
    pub fn f_inverse_exact(&self, f: &TrigForm) -> Result<TrigForm> {
        let fm = rational_matrix(f)
            .ok_or_else(|| Error::Precondition("exact F⁻¹ needs constant rational input".into()))?;
        let a = r_add(&r_identity(self.dim()), &r_neg(&r_mul(&self.pi_mat, &fm)));
        let inv = r_inverse(&a).ok_or_else(|| Error::Singular {
            point: vec![0.0; self.dim()],
            det: 0.0,
        })?;
        Ok(from_rmat(&r_mul(&fm, &inv)))
    }

    /// `π − ∧²π♯β`, exactly.
    pub fn poisson_side(&self, beta: &TrigForm) -> TrigMultiVector {
        self.pi.sub(&self.wedge_sharp(beta))
    }

    /// Sup over the grid of `|−(Ω + F(β))⁻¹ − (Π − ΠBΠᵀ)|`.
    pub fn poisson_identity_residual(&self, beta: &TrigForm, per_axis: usize) -> Result<f64> {
        let f = self.f_map(beta, per_axis)?;
        let side = self.poisson_side(beta).compile();
        let n = self.dim();
        let pts = grid(n, per_axis);
        let omega = self.omega_f.clone();
        let r = pts
            .par_iter()
            .map(|p| {
                let total = &omega + f.matrix(p);
                match total.try_inverse() {
                    Some(inv) => (-inv - side.matrix(p)).amax(),
                    None => f64::INFINITY,
                }
            })
            .reduce(|| 0.0, f64::max);
        Ok(r)
    }
}

fn from_rmat(m: &RMat) -> TrigForm {
    TrigForm::from_matrix(
        &m.iter()
            .map(|r| r.iter().map(|q| PiPoly::rational(q.clone())).collect())
            .collect::<Vec<Vec<PiPoly>>>(),
    )
}

/// Minimum of `|det Ω̃|` over the grid.
pub fn min_abs_det(w: &dyn TwoFormField, per_axis: usize) -> f64 {
    grid(w.dim(), per_axis)
        .par_iter()
        .map(|p| w.matrix(p).determinant().abs())
        .reduce(|| f64::INFINITY, f64::min)
}

/// A closed 2-form certified nondegenerate on a grid.
#[derive(Clone)]
pub struct SymplecticForm {
    pub field: SharedField,
    pub exact: Option<TrigForm>,
    /// `min |det|` over the verification grid.
    pub certificate: f64,
}

impl std::fmt::Debug for SymplecticForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymplecticForm")
            .field("exact", &self.exact)
            .field("certificate", &self.certificate)
            .finish()
    }
}

impl SymplecticForm {
    pub fn from_exact(w: TrigForm, per_axis: usize) -> Result<Self> {
        if w.degree() != 2 {
            return Err(Error::Degree(format!("symplectic form of degree {}", w.degree())));
        }
        let d = w.exterior_derivative();
        if !d.is_zero() {
            return Err(Error::NotClosed(d.num_terms()));
        }
        let c = w.compile();
        let (det, point) = grid(w.dim(), per_axis)
            .par_iter()
            .map(|p| (c.matrix(p).determinant().abs(), p.clone()))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("nonempty grid");
        if det < 1e-12 {
            return Err(Error::Degenerate { point, det });
        }
        Ok(SymplecticForm {
            field: Arc::new(c),
            exact: Some(w),
            certificate: det,
        })
    }

    /// A numerically given form; closedness is the caller's responsibility.
    pub fn from_field(field: SharedField, per_axis: usize) -> Result<Self> {
        let (det, point) = grid(field.dim(), per_axis)
            .par_iter()
            .map(|p| (field.matrix(p).determinant().abs(), p.clone()))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("nonempty grid");
        if det < 1e-12 {
            return Err(Error::Degenerate { point, det });
        }
        Ok(SymplecticForm {
            field,
            exact: None,
            certificate: det,
        })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn matrix(&self, p: &[f64]) -> DMatrix<f64> {
        self.field.matrix(p)
    }
}

/// True for constant forms with rational (π-free) coefficients.
pub fn is_rational_constant(w: &TrigForm) -> bool {
    rational_matrix(w).is_some()
}

/// `ι_L^*` of a pointwise field at `x ∈ L`: the upper-left `n × n` block at `(x, 0)`.
pub fn restrict_matrix(w: &dyn TwoFormField, n: usize, x: &[f64]) -> DMatrix<f64> {
    let mut p = x.to_vec();
    p.resize(2 * n, 0.0);
    w.matrix(&p).view((0, 0), (n, n)).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{rat, rat_int};
    use crate::trig::TrigScalar;
    use smallvec::smallvec;

    fn base() -> ConstantSymplectic {
        ConstantSymplectic::canonical(&TorusModel::new(1))
    }

    #[test]
    fn flat_and_sharp() {
        let b = base();
        assert_eq!(b.flat(&TrigMultiVector::basis(2, &[0])), TrigForm::basis(2, &[1]));
        assert_eq!(b.sharp(&TrigForm::basis(2, &[0])), TrigMultiVector::basis(2, &[1]));
        assert_eq!(b.sharp(&TrigForm::basis(2, &[1])), TrigMultiVector::basis(2, &[0]).neg());
        let v = nalgebra::DVector::from_vec(vec![0.3, -1.7]);
        let flat = b.omega_f64().transpose() * &v;
        let back = b.pi_f64().transpose() * flat;
        assert!((back + v).amax() < 1e-15);
    }

    #[test]
    fn f_map_examples() {
        let b = base();
        let half = TrigForm::basis(2, &[0, 1]).scale(&rat(1, 2));
        assert_eq!(b.f_map_exact(&half).unwrap(), TrigForm::basis(2, &[0, 1]));
        assert_eq!(b.f_inverse_exact(&TrigForm::basis(2, &[0, 1])).unwrap(), half);
        assert!(b.f_map_exact(&TrigForm::zero(2, 2)).unwrap().is_zero());
        assert!(b.f_map_exact(&b.form).is_err());
        assert!(matches!(b.f_map(&b.form, 8), Err(Error::Singular { .. })));
        let side = b.poisson_side(&half);
        assert_eq!(side, TrigMultiVector::basis(2, &[0, 1]).scale(&rat(1, 2)));
    }

    #[test]
    fn poisson_identity_trig() {
        let b = base();
        let beta = TrigForm::monomial(
            2,
            &[0, 1],
            TrigScalar::sin(smallvec![1, 1], rat(1, 10)).add(&TrigScalar::cos(smallvec![0, 1], rat(1, 7))),
        );
        assert!(b.poisson_identity_residual(&beta, 32).unwrap() < 1e-12);
    }

    #[test]
    fn w_norm_scaling() {
        let b = base();
        let w = b.form.compile();
        assert!(b.w_norm(&w, 4) < 1e-15);
        let w3 = b.form.scale(&rat_int(3));
        let (inside, norm, _) = b.in_w(&w3, 4).unwrap();
        assert!(!inside);
        assert!((norm - 2.0).abs() < 1e-12);
    }
}
