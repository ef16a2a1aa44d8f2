//! Gauss–Legendre periods, spectral fits of sampled 2-forms, and Hodge primitives.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exterior::TrigForm;
use crate::symplectic::TwoFormField;
use crate::torus::TorusModel;
use crate::trig::{canonical_freq, Freq, Phase, TrigScalar};

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `∫_{[0,1]²} ω(∂_i, ∂_j)` over the coordinate 2-torus through `base` spanned by `e_i, e_j`.
pub fn period(w: &dyn TwoFormField, i: usize, j: usize, base: &[f64], nodes: usize) -> f64 {
    let (x, wt) = gauss_legendre(nodes);
    (0..nodes)
        .into_par_iter()
        .map(|a| {
            let mut s = 0.0;
            for b in 0..nodes {
                let mut p = base.to_vec();
                p[i] += x[a];
                p[j] += x[b];
                s += wt[a] * wt[b] * w.matrix(&p)[(i, j)];
            }
            s
        })
        .sum()
}

/// Coordinate 2-tori `(i, j)` other than the ones inside `L`; periods over these determine
/// relative classes because `H¹(M) → H¹(L)` is onto for the torus pair.
pub fn relative_cycles(model: &TorusModel) -> Vec<(usize, usize)> {
    let n = model.n;
    let mut out = Vec::new();
    for i in 0..model.dim() {
        for j in i + 1..model.dim() {
            if !(i < n && j < n) {
                out.push((i, j));
            }
        }
    }
    out
}

fn dft_axis(data: &mut [Complex<f64>], n: usize, dim: usize, axis: usize) {
    let stride = n.pow((dim - 1 - axis) as u32);
    let twiddle: Vec<Complex<f64>> = (0..n)
        .map(|k| Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    let total = data.len();
    let mut line = vec![Complex::new(0.0, 0.0); n];
    for start in 0..total {
        if (start / stride) % n != 0 {
            continue;
        }
        for (k, slot) in line.iter_mut().enumerate() {
            let mut acc = Complex::new(0.0, 0.0);
            for x in 0..n {
                acc += data[start + x * stride] * twiddle[(k * x) % n];
            }
            *slot = acc / n as f64;
        }
        for (k, v) in line.iter().enumerate() {
            data[start + k * stride] = *v;
        }
    }
}

/// Trigonometric interpolant of a sampled function on the `per_axis^dim` grid
/// (Nyquist modes dropped, coefficients below `tol` pruned).
pub fn fit_scalar(samples: &[f64], dim: usize, per_axis: usize, tol: f64) -> TrigScalar<f64> {
    let mut data: Vec<Complex<f64>> = samples.iter().map(|v| Complex::new(*v, 0.0)).collect();
    for axis in 0..dim {
        dft_axis(&mut data, per_axis, dim, axis);
    }
    let half = (per_axis / 2) as i64;
    let mut out = TrigScalar::zero();
    for (flat, c) in data.iter().enumerate() {
        let mut k: Freq = Freq::new();
        let mut rest = flat;
        let mut digits = vec![0usize; dim];
        for d in (0..dim).rev() {
            digits[d] = rest % per_axis;
            rest /= per_axis;
        }
        for d in digits {
            let v = d as i64;
            k.push(if v > half { v - per_axis as i64 } else { v });
        }
        if per_axis % 2 == 0 && k.iter().any(|v| v.abs() == half) {
            continue;
        }
        let (canon, flipped) = canonical_freq(&k);
        if flipped {
            continue;
        }
        if canon.iter().all(|v| *v == 0) {
            if c.re.abs() > tol {
                out.add_term(canon, Phase::Cos, c.re);
            }
            continue;
        }
        // c e^{iθ} + conj: 2 Re c cos θ − 2 Im c sin θ
        if (2.0 * c.re).abs() > tol {
            out.add_term(canon.clone(), Phase::Cos, 2.0 * c.re);
        }
        if (2.0 * c.im).abs() > tol {
            out.add_term(canon, Phase::Sin, -2.0 * c.im);
        }
    }
    out
}

/// Spectral fit of a 2-form field on the `per_axis^N` grid.
pub fn fit_two_form(w: &dyn TwoFormField, per_axis: usize, tol: f64) -> TrigForm<f64> {
    let pts = crate::symplectic::grid(w.dim(), per_axis);
    let mats: Vec<_> = pts.par_iter().map(|p| w.matrix(p)).collect();
    fit_two_form_samples(&mats, w.dim(), per_axis, tol)
}

/// Spectral fit from matrices sampled on the `per_axis^N` grid (in `grid` order).
pub fn fit_two_form_samples(mats: &[DMatrix<f64>], dim: usize, per_axis: usize, tol: f64) -> TrigForm<f64> {
    let mut out = TrigForm::zero(dim, 2);
    for i in 0..dim {
        for j in i + 1..dim {
            let samples: Vec<f64> = mats.iter().map(|m| m[(i, j)]).collect();
            let s = fit_scalar(&samples, dim, per_axis, tol);
            out.add_term([i as u8, j as u8].into_iter().collect(), s);
        }
    }
    out
}

/// Spectral fit of a 1-form from component vectors sampled on the grid.
pub fn fit_one_form_samples(vals: &[Vec<f64>], dim: usize, per_axis: usize, tol: f64) -> TrigForm<f64> {
    let mut out = TrigForm::zero(dim, 1);
    for i in 0..dim {
        let samples: Vec<f64> = vals.iter().map(|v| v[i]).collect();
        out.add_term([i as u8].into_iter().collect(), fit_scalar(&samples, dim, per_axis, tol));
    }
    out
}

/// Coexact primitive `β = d^*Δ⁻¹η` of a 2-form with vanishing constant part.
pub fn hodge_primitive(eta: &TrigForm<f64>, tol: f64) -> Result<TrigForm<f64>> {
    let dim = eta.dim();
    let mut out = TrigForm::zero(dim, eta.degree() - 1);
    for (idx, s) in eta.terms() {
        for (k, phase, c) in s.terms() {
            let k2: i64 = k.iter().map(|v| v * v).sum();
            if k2 == 0 {
                if c.abs() > tol {
                    return Err(Error::NoSolution(format!("constant part {c:e} is not exact")));
                }
                continue;
            }
            let scale = 1.0 / (2.0 * std::f64::consts::PI * k2 as f64);
            for (pos, &j) in idx.iter().enumerate() {
                let kj = k[j as usize];
                if kj == 0 {
                    continue;
                }
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                let rest: Vec<u8> = idx.iter().copied().filter(|&v| v != j).collect();
                let (new_phase, ph_sign) = match phase {
                    Phase::Cos => (Phase::Sin, 1.0),
                    Phase::Sin => (Phase::Cos, -1.0),
                };
                let coeff = c * kj as f64 * scale * sign * ph_sign;
                out.add_term(rest.into_iter().collect(), TrigScalar::mode(k.clone(), new_phase, coeff));
            }
        }
    }
    Ok(out)
}

/// Relative primitive: the Hodge primitive corrected by `p^*ι_L^*β`.
pub fn relative_primitive(model: &TorusModel, eta: &TrigForm<f64>, tol: f64) -> Result<TrigForm<f64>> {
    let b = hodge_primitive(eta, tol)?;
    let on_l = model.restrict(&b);
    Ok(b.sub(&model.extend(&on_l)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::rat;
    use smallvec::smallvec;

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(15)).sum();
        assert!((m - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn fit_and_primitive() {
        let m = TorusModel::new(1);
        let beta: TrigForm = TrigForm::monomial(2, &[0], TrigScalar::sin(smallvec![1, 1], rat(1, 20)));
        let eta = beta.exterior_derivative();
        let fit = fit_two_form(&eta.compile(), 8, 1e-14);
        assert!(fit.sub(&eta.to_numeric()).l1_bound() < 1e-13);
        let p = relative_primitive(&m, &fit, 1e-12).unwrap();
        assert!(p.exterior_derivative().sub(&fit).l1_bound() < 1e-13);
        assert!(m.is_relative(&p) || m.restrict(&p).l1_bound() < 1e-15);
        let w: TrigForm = m.omega_can();
        assert!((period(&w.compile(), 0, 1, &[0.0, 0.0], 16) - 1.0).abs() < 1e-14);
    }
}
