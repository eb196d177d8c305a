//! Dense complex square matrices and a cyclic Jacobi eigensolver for the
//! small Hermitian matrices (dimension 2J+1) that appear here.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: f64, other: &CMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn sub(&self, other: &CMatrix) -> Self {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &CMatrix) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.adjoint()).max_abs_entry() <= tol
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// `<a|b>`, antilinear in `a`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

/// Multiplies `v` by the unit phase that makes its largest-magnitude
/// component real and positive. The first index wins ties.
pub fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm_sqr();
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let pivot = v[best];
    let modulus = libm::sqrt(best_mag);
    let phase = pivot.conj() / modulus;
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[best] = C64::new(modulus, 0.0);
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, `vectors[i]` belongs to `values[i]`.
    pub vectors: Vec<Vec<C64>>,
}

const MAX_SWEEPS: usize = 64;

/// Diagonalizes a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Only the Hermitian part of `a` is meaningful; the strictly lower triangle
/// is assumed to be the conjugate of the upper one. Eigenvectors follow the
/// [`fix_phase`] convention.
pub fn hermitian_eigen(a: &CMatrix) -> HermitianEigen {
    if a.dim() == 3 {
        if let Some(e) = eigen3(a) {
            return e;
        }
    }
    jacobi(a)
}

/// Relative eigenvalue separation below which the 3x3 closed form hands over
/// to Jacobi.
const CLOSED_FORM_MIN_SEPARATION: f64 = 1e-3;

/// Closed-form 3x3 path: trigonometric roots of the characteristic
/// polynomial, eigenvectors from cross products of rows of `A - lambda`.
/// Returns `None` when two eigenvalues are too close for this to be accurate.
fn eigen3(a: &CMatrix) -> Option<HermitianEigen> {
    let q = (a[(0, 0)].re + a[(1, 1)].re + a[(2, 2)].re) / 3.0;
    let d = [a[(0, 0)].re - q, a[(1, 1)].re - q, a[(2, 2)].re - q];
    let (a01, a02, a12) = (a[(0, 1)], a[(0, 2)], a[(1, 2)]);
    let off = a01.norm_sqr() + a02.norm_sqr() + a12.norm_sqr();
    if off == 0.0 {
        // already diagonal; Jacobi returns it untouched
        return None;
    }
    let p2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + 2.0 * off) / 6.0;
    if !p2.is_finite() {
        return None;
    }
    let p = libm::sqrt(p2);
    let det = d[0] * d[1] * d[2] + 2.0 * (a01 * a12 * a02.conj()).re
        - d[0] * a12.norm_sqr()
        - d[1] * a02.norm_sqr()
        - d[2] * a01.norm_sqr();
    let r = (det / (2.0 * p2 * p)).clamp(-1.0, 1.0);
    let phi = libm::acos(r) / 3.0;
    let top = q + 2.0 * p * libm::cos(phi);
    let bottom = q + 2.0 * p * libm::cos(phi + 2.0 * core::f64::consts::FRAC_PI_3);
    let middle = 3.0 * q - top - bottom;
    let values = [top, middle, bottom];

    let scale = top.abs().max(bottom.abs());
    if (top - middle).min(middle - bottom) < CLOSED_FORM_MIN_SEPARATION * scale {
        return None;
    }

    let outer = [&values[0], &values[2]].map(|&lambda| null_vector(a, lambda));
    let [Some(mut v0), Some(v2)] = outer else {
        return None;
    };
    // re-orthogonalize the bottom vector, then complete the basis
    let overlap = inner(&v0, &v2);
    let mut v2: Vec<C64> = v2.iter().zip(&v0).map(|(y, x)| y - x * overlap).collect();
    let n2 = norm(&v2);
    v2.iter_mut().for_each(|z| *z /= n2);
    let mut v1 = vec![
        (v0[1] * v2[2] - v0[2] * v2[1]).conj(),
        (v0[2] * v2[0] - v0[0] * v2[2]).conj(),
        (v0[0] * v2[1] - v0[1] * v2[0]).conj(),
    ];
    fix_phase(&mut v0);
    fix_phase(&mut v1);
    fix_phase(&mut v2);
    Some(HermitianEigen {
        values: values.to_vec(),
        vectors: vec![v0, v1, v2],
    })
}

/// Unit vector annihilated by `A - lambda`, from the best-conditioned cross
/// product of two of its rows.
fn null_vector(a: &CMatrix, lambda: f64) -> Option<Vec<C64>> {
    let row = |i: usize| -> [C64; 3] {
        let mut r = [a[(i, 0)], a[(i, 1)], a[(i, 2)]];
        r[i] -= lambda;
        r
    };
    let rows = [row(0), row(1), row(2)];
    let cross = |u: &[C64; 3], w: &[C64; 3]| -> [C64; 3] {
        [
            u[1] * w[2] - u[2] * w[1],
            u[2] * w[0] - u[0] * w[2],
            u[0] * w[1] - u[1] * w[0],
        ]
    };
    let candidates = [
        cross(&rows[0], &rows[1]),
        cross(&rows[0], &rows[2]),
        cross(&rows[1], &rows[2]),
    ];
    let (best, size) = candidates
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .enumerate()
        .fold((0, -1.0), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
    let rows_size: f64 = rows.iter().flatten().map(|z| z.norm_sqr()).sum();
    if !(size > f64::EPSILON * rows_size * rows_size) {
        return None;
    }
    let len = libm::sqrt(size);
    Some(candidates[best].iter().map(|z| z / len).collect())
}

/// Cyclic Jacobi, any dimension.
fn jacobi(a: &CMatrix) -> HermitianEigen {
    let n = a.dim();
    let mut m = a.data.clone();
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = ONE;
    }

    let total: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let tiny = total * f64::EPSILON * f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q].norm_sqr();
            }
        }
        if off <= tiny {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p * n + q].norm_sqr() > tiny {
                    rotate(&mut m, &mut v, n, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].re.total_cmp(&m[i * n + i].re));

    let values = order.iter().map(|&i| m[i * n + i].re).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut col: Vec<C64> = (0..n).map(|r| v[r * n + i]).collect();
            fix_phase(&mut col);
            col
        })
        .collect();
    HermitianEigen { values, vectors }
}

/// One Jacobi rotation annihilating `m[p][q]`; accumulates it into `v`.
///
/// `U = diag(1, conj(ph)) [[c, s], [-s, c]]` on the `(p, q)` block, where `ph`
/// is the phase of `m[p][q]`.
fn rotate(m: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    let mag = libm::sqrt(apq.norm_sqr());
    let app = m[p * n + p].re;
    let aqq = m[q * n + q].re;
    let ph = apq / mag;
    let phc = ph.conj();

    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + libm::sqrt(theta * theta + 1.0))
    } else {
        -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
    };
    let c = 1.0 / libm::sqrt(t * t + 1.0);
    let s = t * c;

    // m <- m U
    for i in 0..n {
        let mip = m[i * n + p];
        let w = phc * m[i * n + q];
        m[i * n + p] = mip * c - w * s;
        m[i * n + q] = mip * s + w * c;
    }
    // m <- U^dagger m
    for j in 0..n {
        let mpj = m[p * n + j];
        let w = ph * m[q * n + j];
        m[p * n + j] = mpj * c - w * s;
        m[q * n + j] = mpj * s + w * c;
    }
    m[p * n + q] = ZERO;
    m[q * n + p] = ZERO;
    m[p * n + p] = C64::new(app - t * mag, 0.0);
    m[q * n + q] = C64::new(aqq + t * mag, 0.0);

    for i in 0..n {
        let vip = v[i * n + p];
        let w = phc * v[i * n + q];
        v[i * n + p] = vip * c - w * s;
        v[i * n + q] = vip * s + w * c;
    }
}
