//! Exact sparse linear algebra over the rationals.
//!
//! [`Reducer`] keeps an echelon basis of inserted vectors together with the
//! combination of inserted labels each basis row represents, which is enough
//! for ranks, kernels, membership tests and back-substitution.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::coeff::Rational;

pub type SparseVec = BTreeMap<usize, Rational>;

pub fn axpy(y: &mut SparseVec, a: &Rational, x: &SparseVec) {
    if a.is_zero() {
        return;
    }
    for (i, v) in x {
        let entry = y.entry(*i).or_insert_with(Rational::zero);
        *entry += a * v;
        if entry.is_zero() {
            y.remove(i);
        }
    }
}

pub fn scale(x: &SparseVec, a: &Rational) -> SparseVec {
    if a.is_zero() {
        return SparseVec::new();
    }
    x.iter().map(|(i, v)| (*i, v * a)).collect()
}

pub fn unit(i: usize) -> SparseVec {
    let mut v = SparseVec::new();
    v.insert(i, Rational::one());
    v
}

/// Concatenates two sparse vectors, shifting the second by `offset`.
pub fn concat(a: &SparseVec, b: &SparseVec, offset: usize) -> SparseVec {
    let mut out = a.clone();
    for (i, v) in b {
        out.insert(i + offset, v.clone());
    }
    out
}

struct Row {
    vec: SparseVec,
    combo: SparseVec,
}

#[derive(Default)]
pub struct Reducer {
    rows: Vec<Row>,
    by_pivot: BTreeMap<usize, usize>,
    next_label: usize,
}

impl Reducer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v`; returns the residue and the label combination subtracted.
    pub fn reduce(&self, v: &SparseVec) -> (SparseVec, SparseVec) {
        let mut v = v.clone();
        let mut combo = SparseVec::new();
        let mut cursor = 0usize;
        loop {
            let next = v
                .range(cursor..)
                .find(|(c, _)| self.by_pivot.contains_key(c))
                .map(|(c, a)| (*c, a.clone()));
            let Some((col, a)) = next else { break };
            let row = &self.rows[self.by_pivot[&col]];
            let f = -a;
            axpy(&mut v, &f, &row.vec);
            axpy(&mut combo, &-f, &row.combo);
            cursor = col + 1;
        }
        (v, combo)
    }

    /// Inserts `v` under a fresh label; returns the label and whether `v` was independent.
    /// When dependent, the returned combination expresses `v` in earlier labels.
    pub fn insert(&mut self, v: &SparseVec) -> (usize, Option<SparseVec>) {
        let label = self.next_label;
        self.next_label += 1;
        let (res, combo) = self.reduce(v);
        if res.is_empty() {
            return (label, Some(combo));
        }
        let (&pivot, pv) = res.iter().next().expect("nonempty");
        let inv = Rational::one() / pv;
        let mut own = scale(&combo, &-Rational::one());
        own.insert(label, Rational::one());
        // row = (v − Σ combo·rows) / pv, so its label combination is (e_label − combo)/pv
        let row = Row {
            vec: scale(&res, &inv),
            combo: scale(&own, &inv),
        };
        self.by_pivot.insert(pivot, self.rows.len());
        self.rows.push(row);
        (label, None)
    }

    /// Writes `v` as a combination of inserted labels, if possible.
    pub fn solve(&self, v: &SparseVec) -> Option<SparseVec> {
        let (res, combo) = self.reduce(v);
        res.is_empty().then_some(combo)
    }
}

/// Kernel basis of the linear map with the given columns (domain dimension = `columns.len()`).
pub fn kernel(columns: &[SparseVec]) -> Vec<SparseVec> {
    let mut r = Reducer::new();
    let mut out = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let (label, dep) = r.insert(col);
        debug_assert_eq!(label, j);
        if let Some(combo) = dep {
            let mut k = scale(&combo, &-Rational::one());
            k.insert(j, Rational::one());
            out.push(k);
        }
    }
    out
}

pub fn rank(vectors: &[SparseVec]) -> usize {
    let mut r = Reducer::new();
    for v in vectors {
        r.insert(v);
    }
    r.rank()
}

/// Applies the map with the given columns to a domain vector.
pub fn apply(columns: &[SparseVec], x: &SparseVec) -> SparseVec {
    let mut out = SparseVec::new();
    for (j, a) in x {
        axpy(&mut out, a, &columns[*j]);
    }
    out
}

/// Dense rational matrix.
pub type RMat = Vec<Vec<Rational>>;

pub fn r_identity(n: usize) -> RMat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect()
}

pub fn r_mul(a: &RMat, b: &RMat) -> RMat {
    let (n, m, p) = (a.len(), b.len(), b.first().map_or(0, |r| r.len()));
    (0..n)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let mut s = Rational::zero();
                    for k in 0..m {
                        if !a[i][k].is_zero() && !b[k][j].is_zero() {
                            s += &a[i][k] * &b[k][j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn r_add(a: &RMat, b: &RMat) -> RMat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn r_neg(a: &RMat) -> RMat {
    a.iter().map(|r| r.iter().map(|x| -x).collect()).collect()
}

pub fn r_transpose(a: &RMat) -> RMat {
    let n = a.first().map_or(0, |r| r.len());
    (0..n).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Gauss–Jordan inverse; `None` when singular.
pub fn r_inverse(a: &RMat) -> Option<RMat> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(r_identity(n))
        .map(|(r, e)| r.iter().cloned().chain(e).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(piv, col);
        let inv = Rational::one() / &m[col][col];
        for x in m[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn r_to_f64(a: &RMat) -> nalgebra::DMatrix<f64> {
    let n = a.len();
    let m = a.first().map_or(0, |r| r.len());
    nalgebra::DMatrix::from_fn(n, m, |i, j| crate::coeff::rational_to_f64(&a[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::rat_int;

    fn v(entries: &[(usize, i64)]) -> SparseVec {
        entries.iter().map(|(i, a)| (*i, rat_int(*a))).collect()
    }

    #[test]
    fn kernel_of_small_matrix() {
        // columns: (1,1), (2,2), (0,1)
        let cols = vec![v(&[(0, 1), (1, 1)]), v(&[(0, 2), (1, 2)]), v(&[(1, 1)])];
        let k = kernel(&cols);
        assert_eq!(k.len(), 1);
        assert!(apply(&cols, &k[0]).is_empty());
        assert_eq!(rank(&cols), 2);
    }

    #[test]
    fn solve_tracks_labels() {
        let mut r = Reducer::new();
        r.insert(&v(&[(0, 1), (2, 3)]));
        r.insert(&v(&[(1, 2), (2, 1)]));
        let target = v(&[(0, 2), (1, -2), (2, 5)]);
        let c = r.solve(&target).unwrap();
        assert_eq!(c, v(&[(0, 2), (1, -1)]));
        assert!(r.solve(&v(&[(3, 1)])).is_none());
    }

    #[test]
    fn rational_inverse() {
        let a: RMat = vec![vec![rat_int(2), rat_int(1)], vec![rat_int(1), rat_int(1)]];
        let inv = r_inverse(&a).unwrap();
        assert_eq!(r_mul(&a, &inv), r_identity(2));
        let s: RMat = vec![vec![rat_int(1), rat_int(2)], vec![rat_int(2), rat_int(4)]];
        assert!(r_inverse(&s).is_none());
    }
}
