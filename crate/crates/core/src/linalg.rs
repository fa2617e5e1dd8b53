//! Finite Hermitian linear algebra used by every tower.
//!
//! Inertia comes from a Bunch–Kaufman block LDL* factorization (1x1 and 2x2 pivots),
//! eigenvalues from bisection on the negative-inertia count, and operator norms from
//! bisection on the definiteness of s²I − B*B. All bisections run on dyadic endpoints.
//! Banded Hermitian matrices get their own O(n·kd²) kernels, which is what makes the
//! grid sweeps over large truncations affordable.

use std::collections::HashMap;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// Relative zero-pivot tolerance: pivots with |d| ≤ PIVOT_TOL·‖H‖_max count as zero.
pub const PIVOT_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;

/// Field scalars the banded kernels run on. Real symmetric problems use `f64`, which
/// roughly quarters the work compared with complex arithmetic.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + PartialEq
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn norm_sqr(self) -> f64;
    fn from_f64(x: f64) -> Self;
    fn scale(self, s: f64) -> Self;
    fn modulus(self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

impl Scalar for f64 {
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Complex64::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Build from real rows; panics on ragged input.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { Complex64::new(d[i], 0.0) } else { Complex64::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == Complex64::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// B*B.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for k in 0..self.rows {
            for i in 0..n {
                let a = self.get(k, i).conj();
                if a == Complex64::zero() {
                    continue;
                }
                for j in 0..n {
                    g.data[i * n + j] += a * self.get(k, j);
                }
            }
        }
        g
    }

    /// self − t·I (square matrices only).
    pub fn shifted(&self, t: f64) -> Matrix {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m.data[i * self.cols + i] -= t;
        }
        m
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.norm()))
    }

    /// max |H_ij − conj(H_ji)|.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..=i.min(self.cols.saturating_sub(1)) {
                d = d.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        d
    }

    /// Sub-block rows r0..r1, cols c0..c1.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        Matrix::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

/// Sylvester inertia of a Hermitian matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Inertia {
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.n_neg + self.n_zero + self.n_pos
    }
}

fn check_hermitian(h: &Matrix) -> Result<()> {
    if h.rows != h.cols {
        return Err(Error::Domain(format!("matrix is {}x{}, not square", h.rows, h.cols)));
    }
    let scale = h.max_abs().max(1.0);
    if h.hermitian_defect() > HERMITIAN_TOL * scale {
        return Err(Error::Domain("matrix is not Hermitian to working tolerance".into()));
    }
    Ok(())
}

fn swap_sym(a: &mut [Complex64], n: usize, p: usize, q: usize, from: usize) {
    if p == q {
        return;
    }
    for j in from..n {
        a.swap(p * n + j, q * n + j);
    }
    for i in from..n {
        a.swap(i * n + p, i * n + q);
    }
}

/// Inertia via Bunch–Kaufman block LDL* with threshold (1+√17)/8.
///
/// Pivots (or 2x2 block eigenvalues) with magnitude ≤ 1e-12·‖H‖_max are counted as zero.
/// Signs of 2x2 blocks come from the block's trace and determinant.
pub fn ldlt_inertia(h: &Matrix) -> Result<Inertia> {
    check_hermitian(h)?;
    let n = h.rows;
    let tol = PIVOT_TOL * h.max_abs();
    let mut a = h.data.clone();
    // Symmetrize so round-off in the input cannot leak into the factorization.
    for i in 0..n {
        a[i * n + i] = Complex64::new(a[i * n + i].re, 0.0);
        for j in 0..i {
            let v = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
            a[i * n + j] = v;
            a[j * n + i] = v.conj();
        }
    }
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut inert = Inertia::default();
    let mut k = 0;
    while k < n {
        let akk = a[k * n + k].re.abs();
        let (mut imax, mut colmax) = (k, 0.0f64);
        for i in k + 1..n {
            let v = a[i * n + k].norm();
            if v > colmax {
                colmax = v;
                imax = i;
            }
        }
        if akk.max(colmax) <= tol {
            inert.n_zero += 1;
            k += 1;
            continue;
        }
        let (kp, kstep) = if akk >= alpha * colmax {
            (k, 1)
        } else {
            let mut rowmax = 0.0f64;
            for j in k..n {
                if j != imax {
                    rowmax = rowmax.max(a[imax * n + j].norm());
                }
            }
            if akk * rowmax >= alpha * colmax * colmax {
                (k, 1)
            } else if a[imax * n + imax].re.abs() >= alpha * rowmax {
                (imax, 1)
            } else {
                (imax, 2)
            }
        };
        let kk = k + kstep - 1;
        swap_sym(&mut a, n, kk, kp, k);
        if kstep == 1 {
            let d = a[k * n + k].re;
            if d.abs() <= tol {
                inert.n_zero += 1;
            } else {
                if d > 0.0 {
                    inert.n_pos += 1;
                } else {
                    inert.n_neg += 1;
                }
                for i in k + 1..n {
                    let l = a[i * n + k] / d;
                    if l == Complex64::zero() {
                        continue;
                    }
                    for j in k + 1..n {
                        let c = a[j * n + k].conj();
                        a[i * n + j] -= l * c;
                    }
                }
            }
            k += 1;
        } else {
            let d11 = a[k * n + k].re;
            let d22 = a[(k + 1) * n + k + 1].re;
            let d21 = a[(k + 1) * n + k];
            let det = d11 * d22 - d21.norm_sqr();
            let tr = d11 + d22;
            let big = tr.abs() / 2.0 + (((d11 - d22) / 2.0).powi(2) + d21.norm_sqr()).sqrt();
            let small = if big > 0.0 { det.abs() / big } else { 0.0 };
            let singular = small <= tol;
            if big <= tol {
                inert.n_zero += 2;
            } else if singular {
                inert.n_zero += 1;
                if tr > 0.0 {
                    inert.n_pos += 1;
                } else {
                    inert.n_neg += 1;
                }
            } else if det < 0.0 {
                inert.n_neg += 1;
                inert.n_pos += 1;
            } else if tr > 0.0 {
                inert.n_pos += 2;
            } else {
                inert.n_neg += 2;
            }
            if !singular {
                let inv = 1.0 / det;
                let us: Vec<(Complex64, Complex64)> = (k + 2..n)
                    .map(|i| {
                        let w0 = a[i * n + k];
                        let w1 = a[i * n + k + 1];
                        ((w0 * d22 - w1 * d21) * inv, (-w0 * d21.conj() + w1 * d11) * inv)
                    })
                    .collect();
                for (ii, i) in (k + 2..n).enumerate() {
                    let (u0, u1) = us[ii];
                    for j in k + 2..n {
                        let w0 = a[j * n + k].conj();
                        let w1 = a[j * n + k + 1].conj();
                        a[i * n + j] -= u0 * w0 + u1 * w1;
                    }
                }
            }
            k += 2;
        }
    }
    Ok(inert)
}

/// Arithmetic used by [`is_pos_def_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Arithmetic {
    #[default]
    Float,
    /// Every f64 entry is converted to the dyadic rational it represents and the test
    /// runs in exact rational arithmetic. Slow; meant for certification.
    Exact,
}

/// Strict positive definiteness: true iff n_neg = n_zero = 0.
///
/// Implemented as an unpivoted LDL* sweep with early exit, which has the same answer as
/// the inertia count (all leading pivots of a definite matrix are positive).
pub fn is_pos_def(h: &Matrix) -> Result<bool> {
    is_pos_def_with(h, Arithmetic::Float)
}

pub fn is_pos_def_with(h: &Matrix, mode: Arithmetic) -> Result<bool> {
    check_hermitian(h)?;
    match mode {
        Arithmetic::Float => Ok(pos_def_float(h)),
        Arithmetic::Exact => {
            let n = h.rows;
            let q: Vec<Vec<Complex<BigRational>>> = (0..n)
                .map(|i| (0..n).map(|j| exact_complex(h.get(i, j))).collect())
                .collect();
            Ok(is_pos_def_rational(&q))
        }
    }
}

fn pos_def_float(h: &Matrix) -> bool {
    let n = h.rows;
    let tol = PIVOT_TOL * h.max_abs();
    let mut a = h.data.clone();
    for k in 0..n {
        let d = a[k * n + k].re;
        if d <= tol {
            return false;
        }
        for i in k + 1..n {
            let l = a[i * n + k] / d;
            if l == Complex64::zero() {
                continue;
            }
            for j in k + 1..=i {
                let c = a[j * n + k].conj();
                a[i * n + j] -= l * c;
            }
        }
        // Only the lower triangle is maintained; mirror the pivot column lookups.
        for i in k + 1..n {
            for j in i + 1..n {
                a[i * n + j] = a[j * n + i].conj();
            }
        }
    }
    true
}

fn exact_rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

fn exact_complex(z: Complex64) -> Complex<BigRational> {
    Complex::new(exact_rational(z.re), exact_rational(z.im))
}

/// Exact definiteness test for a Hermitian matrix of Gaussian rationals.
pub fn is_pos_def_rational(h: &[Vec<Complex<BigRational>>]) -> bool {
    let n = h.len();
    let mut a: Vec<Vec<Complex<BigRational>>> = h.to_vec();
    for k in 0..n {
        let d = a[k][k].re.clone();
        if !d.is_positive() {
            return false;
        }
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let l = Complex::new(a[i][k].re.clone() / d.clone(), a[i][k].im.clone() / d.clone());
            for j in k + 1..n {
                let c = a[j][k].conj();
                let upd = l.clone() * c;
                a[i][j] = a[i][j].clone() - upd;
            }
        }
    }
    true
}

/// Largest power of two not exceeding `eps`.
pub fn dyadic_step(eps: f64) -> f64 {
    assert!(eps > 0.0 && eps.is_finite(), "step must be positive");
    let mut s = 2f64.powi(eps.log2().floor() as i32);
    while s > eps {
        s /= 2.0;
    }
    while s * 2.0 <= eps {
        s *= 2.0;
    }
    s
}

/// Eigenvalues λ̃₁ ≤ … ≤ λ̃ₙ with λ̃ₖ − eps ≤ λₖ < λ̃ₖ (up to the zero-pivot tolerance).
///
/// The spectrum is bracketed in (−m, m) with m a power of two by testing H ± mI, then
/// each λ̃ₖ is the least point of the dyadic lattice (step ≤ eps) at which H − tI has at
/// least k negative eigenvalues.
pub fn hermitian_eigs(h: &Matrix, eps: f64) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    if !(eps > 0.0) {
        return Err(Error::Domain("eps must be positive".into()));
    }
    let n = h.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let step = dyadic_step(eps);
    let mut m = 1.0f64;
    loop {
        if pos_def_float(&h.shifted(-m)) && pos_def_float(&h.scaled(-1.0).shifted(-m)) {
            break;
        }
        m *= 2.0;
        if !m.is_finite() {
            return Err(Error::Numeric("cannot bracket spectrum".into()));
        }
    }
    let mut cache: HashMap<u64, usize> = HashMap::new();
    let mut count = |t: f64| -> Result<usize> {
        if let Some(c) = cache.get(&t.to_bits()) {
            return Ok(*c);
        }
        let c = ldlt_inertia(&h.shifted(t))?.n_neg;
        cache.insert(t.to_bits(), c);
        Ok(c)
    };
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let (mut lo, mut hi) = (-m, m);
        while hi - lo > step {
            let mid = 0.5 * (lo + hi);
            if count(mid)? >= k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push(hi);
    }
    Ok(out)
}

/// Bisection for ‖B‖ on the dyadic lattice of step ≤ eps.
///
/// `pd(s)` must report whether s²I − B*B is positive definite. Returns (lo, hi) with
/// lo ≤ ‖B‖ < hi and hi − lo ≤ eps; lo is the largest lattice point not above ‖B‖, so it
/// is monotone in ‖B‖ and never decreases when the lattice is refined.
pub fn norm_bisect(eps: f64, mut pd: impl FnMut(f64) -> bool) -> Result<(f64, f64)> {
    if !(eps > 0.0) {
        return Err(Error::Domain("eps must be positive".into()));
    }
    let step = dyadic_step(eps);
    let mut hi = 1.0f64;
    while !pd(hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric("norm bracket overflow".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > step {
        let mid = 0.5 * (lo + hi);
        if pd(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// (lo, hi) with lo ≤ ‖B‖ ≤ hi ≤ lo + eps.
pub fn op_norm_bracket(b: &Matrix, eps: f64) -> Result<(f64, f64)> {
    let g = b.gram();
    norm_bisect(eps, |s| pos_def_float(&g.scaled(-1.0).shifted(-s * s)))
}

/// s with ‖B‖ ≤ s ≤ ‖B‖ + eps.
pub fn op_norm_upper(b: &Matrix, eps: f64) -> Result<f64> {
    Ok(op_norm_bracket(b, eps)?.1)
}

/// (a, b) with a ≤ λ_min and λ_max ≤ b, each within eps, on a dyadic lattice.
pub fn extreme_eigs(h: &Matrix, eps: f64) -> Result<(f64, f64)> {
    check_hermitian(h)?;
    if h.rows == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    let step = dyadic_step(eps);
    let mut m = 1.0f64;
    while !(pos_def_float(&h.shifted(-m)) && pos_def_float(&h.scaled(-1.0).shifted(-m))) {
        m *= 2.0;
        if !m.is_finite() {
            return Err(Error::Numeric("cannot bracket spectrum".into()));
        }
    }
    // H − lo·I definite and H − hi·I not: λ_min ∈ [lo, hi).
    let (mut lo, mut hi) = (-m, m);
    while hi - lo > step {
        let mid = 0.5 * (lo + hi);
        if pos_def_float(&h.shifted(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = lo;
    // hi·I − H definite: λ_max < hi.
    let (mut lo, mut hi) = (-m, m);
    while hi - lo > step {
        let mid = 0.5 * (lo + hi);
        if pos_def_float(&h.scaled(-1.0).shifted(-mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((a, hi))
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
pub fn solve(a: &Matrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::Domain("solve needs a square system".into()));
    }
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i * n + k].norm().total_cmp(&m[j * n + k].norm()))
            .unwrap_or(k);
        if m[p * n + k].norm() == 0.0 {
            return Err(Error::Numeric("singular system".into()));
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let d = m[k * n + k];
        for i in k + 1..n {
            let l = m[i * n + k] / d;
            if l == Complex64::zero() {
                continue;
            }
            for j in k..n {
                let v = m[k * n + j];
                m[i * n + j] -= l * v;
            }
            let v = x[k];
            x[i] -= l * v;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[k * n + j] * x[j];
        }
        x[k] = s / m[k * n + k];
    }
    Ok(x)
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
///
/// The eigenvalue comes from dyadic bisection to 2^-40 relative to the spectral
/// bracket; the vector from a few steps of inverse iteration shifted just above it.
pub fn top_eigenpair(h: &Matrix) -> Result<(f64, Vec<Complex64>)> {
    check_hermitian(h)?;
    let n = h.rows;
    if n == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    let scale = h.max_abs().max(1e-300) * n as f64;
    let (lo, hi) = norm_bisect(scale * 2f64.powi(-40), |s| {
        // s here ranges over shifts of the positive matrix H + cI.
        pos_def_float(&h.scaled(-1.0).shifted(-(s - scale)))
    })?;
    let lam = 0.5 * (lo + hi) - scale;
    let shift = hi - scale + scale * 1e-9;
    let a = h.shifted(shift);
    let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + i as f64 * 1e-3, 0.0)).collect();
    for _ in 0..4 {
        v = match solve(&a, &v) {
            Ok(w) => w,
            Err(_) => break,
        };
        let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if !(nv > 0.0) || !nv.is_finite() {
            return Err(Error::Numeric("inverse iteration failed".into()));
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
    }
    Ok((lam, v))
}

/// Hermitian band matrix in lower band storage: entry (i, j), j ≤ i ≤ j + kd, lives at
/// `data[j * (kd + 1) + (i − j)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandHermitian<T: Scalar> {
    n: usize,
    kd: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandHermitian<T> {
    pub fn zeros(n: usize, kd: usize) -> Self {
        let kd = kd.min(n.saturating_sub(1));
        BandHermitian { n, kd, data: vec![T::default(); n * (kd + 1)] }
    }

    /// Wrap lower band data laid out as described on the type.
    pub fn from_lower(n: usize, kd: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * (kd + 1), "band data has the wrong length");
        BandHermitian { n, kd, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn kd(&self) -> usize {
        self.kd
    }

    /// Entry (i, j) with j ≤ i ≤ j + kd.
    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> T {
        self.data[j * (self.kd + 1) + (i - j)]
    }

    #[inline]
    pub fn lower_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[j * (self.kd + 1) + (i - j)]
    }

    /// Full entry access (zero outside the band).
    pub fn get(&self, i: usize, j: usize) -> T {
        if i >= j {
            if i - j <= self.kd {
                self.lower(i, j)
            } else {
                T::default()
            }
        } else if j - i <= self.kd {
            self.lower(j, i).conj()
        } else {
            T::default()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.modulus()))
    }

    pub fn to_dense(&self) -> Matrix
    where
        T: Into<Complex64>,
    {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j).into())
    }

    /// Is a·I + b·H strictly positive definite? Banded Cholesky, O(n·kd²).
    pub fn affine_pos_def(&self, a: f64, b: f64) -> bool {
        let kd = self.kd;
        let w1 = kd + 1;
        let mut w: Vec<T> = self.data.iter().map(|x| x.scale(b)).collect();
        let mut scale = 0.0f64;
        for j in 0..self.n {
            w[j * w1] += T::from_f64(a);
            for r in 0..w1 {
                scale = scale.max(w[j * w1 + r].modulus());
            }
        }
        let tol = PIVOT_TOL * scale;
        band_cholesky_in_place(&mut w, self.n, kd, tol)
    }

    /// Number of eigenvalues below t, by unpivoted band LDL* of H − tI.
    ///
    /// Zero pivots are replaced by a tiny negative number as in the classical Sturm
    /// count; for tridiagonal input this is the Sturm sequence.
    pub fn count_below(&self, t: f64) -> usize {
        let kd = self.kd;
        let w1 = kd + 1;
        let mut w = self.data.clone();
        let pivmin = f64::MIN_POSITIVE.sqrt() * self.max_abs().max(1.0);
        for j in 0..self.n {
            w[j * w1] -= T::from_f64(t);
        }
        let mut neg = 0;
        for j in 0..self.n {
            let mut d = w[j * w1].re();
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                neg += 1;
            }
            let m = kd.min(self.n - 1 - j);
            for c in 1..=m {
                let lc = w[j * w1 + c].conj().scale(1.0 / d);
                for r in c..=m {
                    let v = w[j * w1 + r] * lc;
                    w[(j + c) * w1 + (r - c)] -= v;
                }
            }
        }
        neg
    }
}

impl BandHermitian<f64> {
    pub fn to_complex(&self) -> BandHermitian<Complex64> {
        BandHermitian {
            n: self.n,
            kd: self.kd,
            data: self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }
}

/// B*B in band storage for B given by sparse columns (`cols[j]` lists (row, value), rows
/// 0-based and increasing).
pub fn gram_band(cols: &[Vec<(usize, Complex64)>], rows: usize) -> BandHermitian<Complex64> {
    let n = cols.len();
    let mut by_row: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); rows];
    for (j, col) in cols.iter().enumerate() {
        for &(i, v) in col {
            by_row[i].push((j, v));
        }
    }
    let kd = by_row
        .iter()
        .map(|r| match (r.first(), r.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0,
        })
        .max()
        .unwrap_or(0)
        .min(n.saturating_sub(1));
    let mut g = BandHermitian::zeros(n, kd);
    for row in &by_row {
        for &(i, ai) in row {
            for &(j, aj) in row {
                if i >= j {
                    *g.lower_mut(i, j) += ai.conj() * aj;
                }
            }
        }
    }
    g
}

/// (lo, hi) bracket of ‖B‖ from a band Gram of B, as in [`op_norm_bracket`].
pub fn band_norm_bracket(g: &BandHermitian<Complex64>, eps: f64) -> Result<(f64, f64)> {
    norm_bisect(eps, |s| g.affine_pos_def(s * s, -1.0))
}

/// Banded Cholesky on lower band storage; false as soon as a pivot is ≤ tol.
pub fn band_cholesky_in_place<T: Scalar>(w: &mut [T], n: usize, kd: usize, tol: f64) -> bool {
    let w1 = kd + 1;
    for j in 0..n {
        let ajj = w[j * w1].re();
        if !(ajj > tol) {
            return false;
        }
        let ljj = ajj.sqrt();
        let inv = 1.0 / ljj;
        w[j * w1] = T::from_f64(ljj);
        let m = kd.min(n - 1 - j);
        for r in 1..=m {
            w[j * w1 + r] = w[j * w1 + r].scale(inv);
        }
        // Column j lives before (j+1)·w1, every column it updates after.
        let (head, tail) = w.split_at_mut((j + 1) * w1);
        let col = &head[j * w1..j * w1 + m + 1];
        for c in 1..=m {
            let lc = col[c].conj();
            let dst = &mut tail[(c - 1) * w1..(c - 1) * w1 + m + 1 - c];
            for (d, &v) in dst.iter_mut().zip(&col[c..]) {
                *d -= v * lc;
            }
        }
    }
    true
}
