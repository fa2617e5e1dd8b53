//! Spectrum and pseudospectrum towers, spectral radius, polynomial norms, capacity,
//! numerical ranges and the spectral-pollution indicator.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    band_norm_bracket, dyadic_step, extreme_eigs, gram_band, op_norm_upper, top_eigenpair, Matrix,
};
use crate::operators::{OperatorHandle, Region, MAX_PRECISION};
use crate::par;
use crate::resolvent::{comp_invg, ResolventProbe};

/// Finite point set with a guaranteed distance bound E to the spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumEstimate {
    /// Sorted by (re, im).
    pub points: Vec<Complex64>,
    pub error: f64,
    /// Tower index actually used (larger than requested only after the empty-set fallback).
    pub n: usize,
    pub spacing: f64,
}

/// A lattice h(Z + iZ) clipped to a box or ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub spacing: f64,
}

impl GridSpec {
    /// Grid(n) = (1/n)(Z + iZ) ∩ B_n(0).
    pub fn from_index(n: usize) -> Self {
        GridSpec { half_width: n as f64, spacing: 1.0 / n as f64 }
    }

    /// 2^-n2 (Z + iZ) ∩ [−n1, n1]².
    pub fn dyadic(n1: usize, n2: u32) -> Self {
        GridSpec { half_width: n1 as f64, spacing: 2f64.powi(-(n2 as i32)) }
    }
}

/// Lattice points (a, b) with |(a + ib)·h| ≤ r, on the real line only when `real`.
pub(crate) fn lattice_ball(h: f64, r: f64, real: bool) -> Vec<(i64, i64)> {
    let k = (r / h).floor() as i64;
    let mut out = Vec::new();
    for a in -k..=k {
        if real {
            out.push((a, 0));
            continue;
        }
        let rem = (r / h).powi(2) - (a * a) as f64;
        if rem < 0.0 {
            continue;
        }
        let kb = rem.sqrt().floor() as i64;
        for b in -kb..=kb {
            out.push((a, b));
        }
    }
    out
}

fn to_z(p: (i64, i64), h: f64) -> Complex64 {
    Complex64::new(p.0 as f64 * h, p.1 as f64 * h)
}

/// Radius outside which ‖R(z,A)‖⁻¹ ≥ |z| − M exceeds `margin`.
fn active_radius(op: &OperatorHandle, margin: f64, cap: f64) -> f64 {
    match op.norm_bound {
        Some(m) => (m + margin).min(cap),
        None => cap,
    }
}

/// CompSpec with the empty-output fallback: tries n, n+1, … until Γ ≠ ∅.
pub fn comp_spec(op: &OperatorHandle, n: usize) -> Result<SpectrumEstimate> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    for m in n..=n.saturating_mul(8).max(n + 64) {
        if let Some(est) = comp_spec_once(op, m)? {
            return Ok(est);
        }
    }
    Err(Error::Numeric("spectrum tower produced no points".into()))
}

/// One level of CompSpec; None when Γ is empty.
///
/// For operators with real spectrum the grid is restricted to the real axis. Grid points
/// farther than ‖A‖ + 1/2 from the origin are skipped: there F ≥ |z| − ‖A‖ > 1/2.
pub fn comp_spec_once(op: &OperatorHandle, n: usize) -> Result<Option<SpectrumEstimate>> {
    let d = op.require_dispersion()?;
    let g = op.require_control()?;
    let real = op.flags.real_spectrum();
    let h = 1.0 / n as f64;
    let probe = ResolventProbe::new(op, n, d.f(n))?;
    let den = n as u64;
    let cn = d.c(n);
    let outer = lattice_ball(h, active_radius(op, 0.5 + h, n as f64), real);
    let zs: Vec<Complex64> = outer.iter().map(|&p| to_z(p, h)).collect();
    let half = (n / 2) as u64;
    let ls = probe.sweep(&zs, den, Some(half));
    let grid = LatticeGrid::new(&outer, &ls, real);

    // Points with F ≤ 1/2 and their search radii. Grid points outside `outer` have
    // F > 1/2 ≥ F(p), so they never minimise over a ball around an active p.
    let active: Vec<((i64, i64), i64)> = outer
        .iter()
        .zip(&ls)
        .filter(|(_, &l)| 2 * l <= den)
        .map(|(&p, &l)| {
            let r = comp_invg(n, l as f64 / n as f64, g);
            (p, (r * n as f64).round() as i64)
        })
        .collect();
    let minimizers: Vec<Vec<(i64, i64)>> = par::map(&active, |&(p, r)| grid.ball_argmin(p, r));
    let gamma: BTreeSet<(i64, i64)> = minimizers.into_iter().flatten().collect();
    if gamma.is_empty() {
        return Ok(None);
    }
    let mut err = 0.0f64;
    for q in &gamma {
        let f = grid.get(*q) as f64 / n as f64 + cn;
        err = err.max(comp_invg(n, f, g));
    }
    Ok(Some(SpectrumEstimate { points: gamma.iter().map(|&q| to_z(q, h)).collect(), error: err, n, spacing: h }))
}

/// Row-major lattice values with blockwise row minima, for minima over discs.
struct LatticeGrid {
    k: i64,
    kb: i64,
    width: usize,
    vals: Vec<u64>,
    /// Minimum of each BLOCK-long run within a row.
    blocks: Vec<u64>,
    blocks_per_row: usize,
}

const BLOCK: usize = 32;

impl LatticeGrid {
    fn new(pts: &[(i64, i64)], vals: &[u64], real: bool) -> Self {
        let k = pts.iter().map(|p| p.0.abs()).max().unwrap_or(0);
        let kb = if real { 0 } else { k };
        let width = (2 * kb + 1) as usize;
        let rows = (2 * k + 1) as usize;
        let mut grid = vec![u64::MAX; rows * width];
        for (&(a, b), &v) in pts.iter().zip(vals) {
            grid[(a + k) as usize * width + (b + kb) as usize] = v;
        }
        let blocks_per_row = width.div_ceil(BLOCK);
        let blocks = grid
            .chunks(width)
            .flat_map(|row| row.chunks(BLOCK).map(|c| *c.iter().min().unwrap()))
            .collect();
        LatticeGrid { k, kb, width, vals: grid, blocks, blocks_per_row }
    }

    fn get(&self, p: (i64, i64)) -> u64 {
        self.vals[(p.0 + self.k) as usize * self.width + (p.1 + self.kb) as usize]
    }

    /// Column range [lo, hi] of row `a` within distance r of p, clipped to the grid.
    fn segment(&self, p: (i64, i64), r: i64, a: i64) -> Option<(usize, usize)> {
        if a.abs() > self.k {
            return None;
        }
        let da = a - p.0;
        let w = ((r * r - da * da) as u64).isqrt() as i64;
        let lo = (p.1 - w).max(-self.kb);
        let hi = (p.1 + w).min(self.kb);
        (lo <= hi).then(|| ((lo + self.kb) as usize, (hi + self.kb) as usize))
    }

    fn seg_min(&self, row: usize, lo: usize, hi: usize) -> u64 {
        let vals = &self.vals[row * self.width..(row + 1) * self.width];
        let (bl, bh) = (lo / BLOCK, hi / BLOCK);
        if bl == bh {
            return *vals[lo..=hi].iter().min().unwrap();
        }
        let blocks = &self.blocks[row * self.blocks_per_row..];
        let left = vals[lo..(bl + 1) * BLOCK].iter().min().copied().unwrap_or(u64::MAX);
        let right = vals[bh * BLOCK..=hi].iter().min().copied().unwrap_or(u64::MAX);
        let mid = blocks[bl + 1..bh].iter().min().copied().unwrap_or(u64::MAX);
        left.min(right).min(mid)
    }

    /// All lattice points of the disc of radius r about p attaining the minimum value.
    fn ball_argmin(&self, p: (i64, i64), r: i64) -> Vec<(i64, i64)> {
        let rows: Vec<(i64, usize, usize)> =
            (p.0 - r..=p.0 + r).filter_map(|a| self.segment(p, r, a).map(|(lo, hi)| (a, lo, hi))).collect();
        let best = rows
            .iter()
            .map(|&(a, lo, hi)| self.seg_min((a + self.k) as usize, lo, hi))
            .min()
            .unwrap_or(u64::MAX);
        if best == u64::MAX {
            return Vec::new();
        }
        let mut out = Vec::new();
        for &(a, lo, hi) in &rows {
            let row = (a + self.k) as usize;
            let vals = &self.vals[row * self.width..(row + 1) * self.width];
            let blocks = &self.blocks[row * self.blocks_per_row..];
            let mut j = lo;
            while j <= hi {
                let blk_end = ((j / BLOCK + 1) * BLOCK).min(hi + 1);
                if j % BLOCK == 0 && blk_end == j + BLOCK && blocks[j / BLOCK] > best {
                    j = blk_end;
                    continue;
                }
                for (c, &v) in vals[j..blk_end].iter().enumerate() {
                    if v == best {
                        out.push((a, (j + c) as i64 - self.kb));
                    }
                }
                j = blk_end;
            }
        }
        out
    }
}

/// PseudoSpec: grid points of Grid(n) where S − (ε − c_m)² or T − (ε − c_m)² is not
/// positive definite, m = min{k ≥ n : c_k < ε}. Sorted by (re, im).
pub fn pseudo_spec(op: &OperatorHandle, n: usize, eps: f64) -> Result<Vec<Complex64>> {
    if !(eps > 0.0) || n == 0 {
        return Err(Error::Domain("need n ≥ 1 and eps > 0".into()));
    }
    let d = op.require_dispersion()?;
    let mut m = n;
    while d.c(m) >= eps {
        m += 1;
        if m > n + 1_000_000 {
            return Err(Error::Numeric("dispersion never drops below eps".into()));
        }
    }
    let thr = eps - d.c(m);
    let probe = ResolventProbe::new(op, m, d.f(m))?;
    let h = 1.0 / n as f64;
    let pts = lattice_ball(h, active_radius(op, eps + h, n as f64), false);
    let keep = par::map(&pts, |&p| !probe.both_pd(to_z(p, h), thr));
    Ok(pts.iter().zip(keep).filter(|(_, k)| *k).map(|(&p, _)| to_z(p, h)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadiusMode {
    /// ‖P_n A P_n‖ from below on a dyadic lattice; normal operators.
    NormalFiniteSection { n: usize },
    /// sup |z| − E over CompSpec(n); needs a resolvent control.
    GTower { n: usize },
    /// sup |z| − 1/n2 over PseudoSpec(A, n1, 1/n2); needs dispersion.
    FTower { n1: usize, n2: usize },
}

/// Columns of P_m A P_m as sparse lists (0-based rows).
pub(crate) struct Section {
    pub m: usize,
    pub cols: Vec<Vec<(usize, Complex64)>>,
}

impl Section {
    pub fn new(op: &OperatorHandle, m: usize) -> Result<Self> {
        let cols = par::map_range(m, |j0| {
            let (lo, hi) = op.window(j0 + 1).map(|(a, b)| (a.max(1), b.min(m))).unwrap_or((1, m));
            let mut col = Vec::new();
            for i in lo..=hi {
                let v = op.entry(i, j0 + 1, MAX_PRECISION)?;
                if v != Complex64::new(0.0, 0.0) {
                    col.push((i - 1, v));
                }
            }
            Ok(col)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Section { m, cols })
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut w = vec![Complex64::new(0.0, 0.0); self.m];
        for (j, col) in self.cols.iter().enumerate() {
            let x = v[j];
            if x == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(i, a) in col {
                w[i] += a * x;
            }
        }
        w
    }

    /// Columns 0..n of P_n A P_n.
    pub fn leading(&self, n: usize) -> Vec<Vec<(usize, Complex64)>> {
        self.cols[..n].iter().map(|c| c.iter().copied().filter(|&(i, _)| i < n).collect()).collect()
    }
}

/// Spectral radius estimates; see [`RadiusMode`] for the three towers.
pub fn spec_radius(op: &OperatorHandle, mode: RadiusMode) -> Result<f64> {
    match mode {
        RadiusMode::NormalFiniteSection { n } => {
            if !op.flags.normal {
                return Err(Error::Precondition("finite-section radius needs a normal operator".into()));
            }
            let s = Section::new(op, n)?;
            let g = gram_band(&s.leading(n), n);
            Ok(band_norm_bracket(&g, 1.0 / n as f64)?.0)
        }
        RadiusMode::GTower { n } => {
            op.require_control()?;
            let est = comp_spec(op, n)?;
            let sup = est.points.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            Ok((sup - est.error).max(0.0))
        }
        RadiusMode::FTower { n1, n2 } => {
            op.require_dispersion()?;
            let eps = 1.0 / n2 as f64;
            let pts = pseudo_spec(op, n1, eps)?;
            let sup = pts.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            Ok((sup - eps).max(0.0))
        }
    }
}

/// Polynomial with complex coefficients c_0 + c_1 x + … + c_d x^d.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polynomial {
    pub coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn real(coeffs: &[f64]) -> Self {
        Polynomial { coeffs: coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect() }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }
}

/// Monic polynomial x^d + c_{d−1} x^{d−1} + … + c_0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonicPolynomial {
    /// c_0 .. c_{d−1}.
    pub lower: Vec<Complex64>,
    /// Enumeration coordinates: σ-indices of the Chebyshev-basis coefficients.
    pub code: Vec<u64>,
}

impl MonicPolynomial {
    pub fn degree(&self) -> usize {
        self.lower.len()
    }

    pub fn to_poly(&self) -> Polynomial {
        let mut c = self.lower.clone();
        c.push(Complex64::new(1.0, 0.0));
        Polynomial::new(c)
    }
}

/// Gaussian rational (a + ib)/q in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GaussRational {
    pub a: i64,
    pub b: i64,
    pub q: i64,
}

impl GaussRational {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.a as f64 / self.q as f64, self.b as f64 / self.q as f64)
    }
}

/// σ(j): the j-th Gaussian rational (0-based) in order of height max(|a|, |b|, q), then
/// q, |a| + |b|, purely real before complex, |a|, sign of a, |b|, sign of b.
/// σ(0) = 0, σ(1) = 1, σ(2) = −1, σ(3) = i, σ(4) = −i, …
pub fn gauss_rational(j: u64) -> GaussRational {
    use num_integer::Integer;
    let mut seen: u64 = 0;
    let mut height = 1i64;
    loop {
        let mut level = Vec::new();
        for q in 1..=height {
            for a in -height..=height {
                for b in -height..=height {
                    if a.abs().max(b.abs()).max(q) != height {
                        continue;
                    }
                    if a.gcd(&b).gcd(&q) != 1 {
                        continue;
                    }
                    level.push(GaussRational { a, b, q });
                }
            }
        }
        if height == 1 {
            // (0, 0, 1) has gcd 1 and height 1, so it is already present.
        }
        level.sort_by_key(|r| (r.q, r.a.abs() + r.b.abs(), r.b != 0, r.a.abs(), r.a < 0, r.b.abs(), r.b < 0));
        if j < seen + level.len() as u64 {
            return level[(j - seen) as usize];
        }
        seen += level.len() as u64;
        height += 1;
    }
}

fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Number of length-`slots` nonnegative vectors with the given sum.
fn compositions(sum: u64, slots: u64) -> u128 {
    if slots == 0 {
        return u128::from(sum == 0);
    }
    binom(sum + slots - 1, slots - 1)
}

/// Monomial coefficients of C_0 = 1 (basis element) and C_k = 2T_k(x/2) for k ≥ 1.
pub fn chebyshev_basis(d: usize) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![vec![1]];
    if d == 0 {
        return out;
    }
    let mut prev = vec![2i64]; // C_0 in the recurrence
    let mut cur = vec![0i64, 1];
    out.push(cur.clone());
    for _ in 2..=d {
        let mut next = vec![0i64; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
        out.push(cur.clone());
    }
    out
}

/// k-th monic polynomial (k ≥ 1) with Gaussian-rational coefficients.
///
/// A polynomial is p = C_d + Σ_{i<d} σ(j_i)·C_i over the basis C_0 = 1, C_k = 2T_k(x/2)
/// (monic, integer coefficients). Its weight is W = d + Σ j_i; polynomials are ordered by
/// W, then degree, then the vector (j_0, …, j_{d−1}) lexicographically. Exactly 2^W − 1
/// polynomials have weight ≤ W, so every polynomial appears: k = 1 is x, k = 2 is x + 1.
pub fn monic_poly_enum(k: u64) -> Result<MonicPolynomial> {
    if k == 0 {
        return Err(Error::Domain("enumeration starts at 1".into()));
    }
    let w = 64 - k.leading_zeros() as u64; // 2^(w-1) ≤ k < 2^w
    let mut rank = (k - (1u64 << (w - 1))) as u128;
    let mut d = 1u64;
    loop {
        let c = compositions(w - d, d);
        if rank < c {
            break;
        }
        rank -= c;
        d += 1;
    }
    let mut code = Vec::with_capacity(d as usize);
    let mut rest = w - d;
    for i in 0..d {
        let slots_after = d - i - 1;
        let mut v = 0;
        loop {
            let c = compositions(rest - v, slots_after);
            if rank < c {
                break;
            }
            rank -= c;
            v += 1;
        }
        code.push(v);
        rest -= v;
    }
    let basis = chebyshev_basis(d as usize);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); d as usize + 1];
    for (e, &c) in basis[d as usize].iter().enumerate() {
        coeffs[e] += c as f64;
    }
    for (i, &j) in code.iter().enumerate() {
        let s = gauss_rational(j).value();
        if s == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (e, &c) in basis[i].iter().enumerate() {
            coeffs[e] += s * c as f64;
        }
    }
    coeffs.pop();
    Ok(MonicPolynomial { lower: coeffs, code })
}

/// Columns 0..n of P_n p(P_m A P_m) P_n by Horner's rule on each e_j.
fn poly_columns(s: &Section, p: &Polynomial, n: usize) -> Vec<Vec<(usize, Complex64)>> {
    let d = p.degree();
    par::map_range(n, |j| {
        let mut v = vec![Complex64::new(0.0, 0.0); s.m];
        v[j] = p.coeffs[d];
        for i in (0..d).rev() {
            v = s.apply(&v);
            v[j] += p.coeffs[i];
        }
        v.into_iter().take(n).enumerate().filter(|(_, x)| *x != Complex64::new(0.0, 0.0)).collect()
    })
}

/// ‖P_n p(P_m A P_m) P_n‖ from above, within 1/m.
pub fn poly_norm(op: &OperatorHandle, p: &Polynomial, n: usize, m: usize) -> Result<f64> {
    if n == 0 || m < n {
        return Err(Error::Domain("need 1 ≤ n ≤ m".into()));
    }
    let s = Section::new(op, m)?;
    poly_norm_on(&s, p, n, 1.0 / m as f64).map(|b| b.1)
}

fn poly_norm_on(s: &Section, p: &Polynomial, n: usize, eps: f64) -> Result<(f64, f64)> {
    let cols = poly_columns(s, p, n);
    band_norm_bracket(&gram_band(&cols, n), eps)
}

/// ‖P_n p(A) P_n‖ from below within 1/n, using m = f^{∘d}(n) so that the window is
/// exact; nondecreasing in n. Needs an exact dispersion profile (c ≡ 0).
pub fn poly_norm_fs(op: &OperatorHandle, p: &Polynomial, n: usize) -> Result<f64> {
    let disp = op.require_dispersion()?;
    if !disp.exact() {
        return Err(Error::Precondition("one-index polynomial norm needs c ≡ 0".into()));
    }
    let mut m = n;
    for _ in 0..p.degree() {
        m = disp.f(m);
    }
    let s = Section::new(op, m)?;
    poly_norm_on(&s, p, n, 1.0 / n as f64).map(|b| b.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityResult {
    pub value: f64,
    /// Enumeration index of the minimizing polynomial.
    pub best_index: u64,
    /// Running minimum after each of the n3 polynomials.
    pub curve: Vec<f64>,
}

/// min over k ≤ n3 of poly_norm(A, p_k, n2, n1)^{1/deg p_k}.
pub fn capacity(op: &OperatorHandle, n3: usize, n2: usize, n1: usize) -> Result<CapacityResult> {
    if n3 == 0 || n2 == 0 || n1 < n2 {
        return Err(Error::Domain("need n3 ≥ 1 and 1 ≤ n2 ≤ n1".into()));
    }
    let s = Section::new(op, n1)?;
    let polys = (1..=n3 as u64).map(monic_poly_enum).collect::<Result<Vec<_>>>()?;
    let eps = 1.0 / n1 as f64;
    // Polynomials are independent; each inner norm runs sequentially within its task.
    let vals = par::map(&polys, |p| {
        let cols: Vec<Vec<(usize, Complex64)>> = {
            let q = p.to_poly();
            let d = q.degree();
            (0..n2)
                .map(|j| {
                    let mut v = vec![Complex64::new(0.0, 0.0); s.m];
                    v[j] = q.coeffs[d];
                    for i in (0..d).rev() {
                        v = s.apply(&v);
                        v[j] += q.coeffs[i];
                    }
                    v.into_iter().take(n2).enumerate().filter(|(_, x)| *x != Complex64::new(0.0, 0.0)).collect()
                })
                .collect()
        };
        band_norm_bracket(&gram_band(&cols, n2), eps).map(|b| b.1.powf(1.0 / p.degree() as f64))
    });
    let mut curve = Vec::with_capacity(n3);
    let (mut best, mut arg) = (f64::INFINITY, 1);
    for (k, v) in vals.into_iter().enumerate() {
        let v = v?;
        if v < best {
            best = v;
            arg = k as u64 + 1;
        }
        curve.push(best);
    }
    Ok(CapacityResult { value: best, best_index: arg, curve })
}

/// Points within Hausdorff distance eps of the numerical range W(B).
///
/// Hermitian B: W = [λ_min, λ_max], sampled at spacing eps/2. Otherwise the boundary is
/// traced by support points v*Bv, v a top eigenvector of Re(e^{−iθ}B), at angle step
/// eps/(8M); the inscribed polygon is then filled on a lattice of step ≤ eps/4. All
/// points are rounded to a dyadic lattice of step ≤ eps/4 and returned sorted.
pub fn numerical_range_sample(b: &Matrix, eps: f64) -> Result<Vec<Complex64>> {
    if !(eps > 0.0) {
        return Err(Error::Domain("eps must be positive".into()));
    }
    let n = b.rows();
    if n != b.cols() || n == 0 {
        return Err(Error::Domain("numerical range needs a nonempty square matrix".into()));
    }
    let q = dyadic_step(eps / 4.0);
    let round = |z: Complex64| ((z.re / q).round() as i64, (z.im / q).round() as i64);
    let mut out: BTreeSet<(i64, i64)> = BTreeSet::new();
    if n == 1 {
        out.insert(round(b.get(0, 0)));
    } else if b.hermitian_defect() <= 1e-12 * b.max_abs().max(1.0) {
        let (lo, hi) = extreme_eigs(b, eps / 8.0)?;
        let steps = ((hi - lo) / (eps / 2.0)).ceil().max(1.0) as usize;
        for t in 0..=steps {
            let x = lo + (hi - lo) * t as f64 / steps as f64;
            out.insert(round(Complex64::new(x, 0.0)));
        }
    } else {
        let m = op_norm_upper(b, 1.0)? + 1.0;
        let k = ((2.0 * std::f64::consts::PI) / (eps / (8.0 * m))).ceil().max(8.0) as usize;
        let verts = par::map_range(k, |t| -> Result<Complex64> {
            let th = 2.0 * std::f64::consts::PI * t as f64 / k as f64;
            let e = Complex64::from_polar(1.0, -th);
            let h = Matrix::from_fn(n, n, |i, j| (e * b.get(i, j) + (e * b.get(j, i)).conj()) * 0.5);
            let (_, v) = top_eigenpair(&h)?;
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    s += v[i].conj() * b.get(i, j) * v[j];
                }
            }
            Ok(s)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        fill_convex(&verts, q, &mut out);
    }
    Ok(out.into_iter().map(|(a, c)| Complex64::new(a as f64 * q, c as f64 * q)).collect())
}

/// Add lattice points (step q) of the convex polygon with vertices `v` (in angular
/// order), its vertices and samples of its edges.
fn fill_convex(v: &[Complex64], q: f64, out: &mut BTreeSet<(i64, i64)>) {
    let round = |z: Complex64| ((z.re / q).round() as i64, (z.im / q).round() as i64);
    let k = v.len();
    for i in 0..k {
        let (a, b) = (v[i], v[(i + 1) % k]);
        let len = (b - a).norm();
        let steps = (len / q).ceil() as usize;
        for s in 0..=steps {
            let t = if steps == 0 { 0.0 } else { s as f64 / steps as f64 };
            out.insert(round(a + (b - a) * t));
        }
    }
    let ymin = v.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
    let ymax = v.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    let (r0, r1) = ((ymin / q).ceil() as i64, (ymax / q).floor() as i64);
    for r in r0..=r1 {
        let y = r as f64 * q;
        let (mut xl, mut xr) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..k {
            let (a, b) = (v[i], v[(i + 1) % k]);
            if (a.im - y) * (b.im - y) > 0.0 {
                continue;
            }
            let xs = if (b.im - a.im).abs() < 1e-300 {
                vec![a.re, b.re]
            } else {
                vec![a.re + (b.re - a.re) * (y - a.im) / (b.im - a.im)]
            };
            for x in xs {
                xl = xl.min(x);
                xr = xr.max(x);
            }
        }
        if xl <= xr {
            for c in (xl / q).ceil() as i64..=(xr / q).floor() as i64 {
                out.insert((c, r));
            }
        }
    }
}

/// Compression of A to indices n2+1 ..= n1+n2+1 and its numerical-range sample at 1/n1.
pub fn ess_num_range(op: &OperatorHandle, n2: usize, n1: usize) -> Result<Vec<Complex64>> {
    if n1 == 0 {
        return Err(Error::Domain("n1 must be positive".into()));
    }
    let b = op.section(n2, n1 + n2 + 1, n2, n1 + n2 + 1, MAX_PRECISION)?;
    numerical_range_sample(&b, 1.0 / n1 as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PollutionReport {
    pub indicator: u8,
    /// Q_{n2,n1}(A, U).
    pub q: f64,
    /// Number of essential-range points near U.
    pub upsilon: usize,
    pub lipschitz_bound: f64,
}

/// The Σ₃ pollution indicator: 1 when some point of W_e(A) near U has resolvent norm
/// certified below n3 at the current resolution.
pub fn pollution_indicator(
    op: &OperatorHandle,
    regions: &[Region],
    n3: usize,
    n2: usize,
    n1: usize,
) -> Result<PollutionReport> {
    if regions.is_empty() {
        return Err(Error::Domain("empty region list".into()));
    }
    if n3 == 0 || n2 == 0 || n1 < n2 {
        return Err(Error::Domain("need n3 ≥ 1 and 1 ≤ n2 ≤ n1".into()));
    }
    let v = &regions[..regions.len().min(n1)];
    let eta = 1.0 / n2 as f64 - 1.0 / n1 as f64;
    let we = ess_num_range(op, n2, n1)?;
    let ups: Vec<Complex64> = we
        .into_iter()
        .filter(|&z| v.iter().any(|u| dist_to_region(u, z) < eta))
        .collect();
    let sup_z = ups.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let block = op.section(0, n1, 0, n2, MAX_PRECISION)?;
    let lip = op_norm_upper(&block, 1.0)? + sup_z;
    if ups.is_empty() {
        return Ok(PollutionReport { indicator: 0, q: 0.0, upsilon: 0, lipschitz_bound: lip });
    }
    let probe = ResolventProbe::new(op, n2, n1)?;
    let den = n1 as u64;
    let ls = probe.sweep(&ups, den, None);
    let sup_g = ls.iter().map(|&l| (l - 1) as f64 / n1 as f64).fold(0.0f64, f64::max);
    let q = sup_g - lip / n1 as f64;
    let indicator = u8::from(q > 1.0 / n3 as f64);
    Ok(PollutionReport { indicator, q, upsilon: ups.len(), lipschitz_bound: lip })
}

fn dist_to_region(u: &Region, z: Complex64) -> f64 {
    match u {
        Region::Ball { .. } => ((z - u.center()).norm() - u.radius()).max(0.0),
        Region::Interval { a, b } => {
            let dx = if z.re < *a {
                a - z.re
            } else if z.re > *b {
                z.re - b
            } else {
                0.0
            };
            dx.hypot(z.im)
        }
    }
}
