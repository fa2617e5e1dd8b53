//! Concrete operators: Almost Mathieu, free Jacobi, Penrose-tile Laplacian, Cantor
//! diagonal, and the rational-frequency band computations.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::merge_intervals;
use crate::operators::{
    diagonal, dispersion_from_band, DiagonalSequence, EntryOracle, Flags, OperatorHandle, ResolventControl,
};

/// Frequency α.
#[derive(Clone, Debug, PartialEq)]
pub enum Alpha {
    Rational { p: i64, q: i64 },
    /// Partial quotients a_1, a_2, … of [0; a_1, a_2, …].
    ContinuedFraction(Vec<u64>),
    /// (√5 − 1)/2.
    Golden,
}

impl Alpha {
    pub fn value(&self) -> f64 {
        match self {
            Alpha::Rational { p, q } => *p as f64 / *q as f64,
            Alpha::ContinuedFraction(cf) => cf.iter().rev().fold(0.0, |x, &a| 1.0 / (a as f64 + x)),
            Alpha::Golden => (5f64.sqrt() - 1.0) / 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlmostMathieuSpec {
    pub lambda: f64,
    pub alpha: Alpha,
    /// ν/π.
    pub nu_over_pi: f64,
}

/// Site of Z at 1-based position i under the interleave 0, 1, −1, 2, −2, …
pub fn interleave_site(i: usize) -> i64 {
    if i % 2 == 0 {
        (i / 2) as i64
    } else {
        -(((i - 1) / 2) as i64)
    }
}

/// Inverse of [`interleave_site`].
pub fn interleave_pos(s: i64) -> usize {
    if s > 0 {
        2 * s as usize
    } else {
        (1 - 2 * s) as usize
    }
}

/// (Hx)_n = x_{n−1} + x_{n+1} + 2λ cos(2πnα + ν) x_n on l2(Z), reindexed to N by the
/// interleave (bandwidth 2).
pub fn almost_mathieu(spec: &AlmostMathieuSpec) -> Result<OperatorHandle> {
    if let Alpha::Rational { p, q } = spec.alpha {
        use num_integer::Integer;
        if q < 1 || p.gcd(&q) != 1 {
            return Err(Error::Domain(format!("alpha = {p}/{q} must be in lowest terms with q ≥ 1")));
        }
    }
    let (lam, alpha, nu) = (spec.lambda, spec.alpha.value(), spec.nu_over_pi * PI);
    let h = OperatorHandle::from_fn("almost_mathieu", Some(2), move |i, j| {
        let (si, sj) = (interleave_site(i), interleave_site(j));
        let v = if si == sj {
            2.0 * lam * (2.0 * PI * si as f64 * alpha + nu).cos()
        } else if (si - sj).abs() == 1 {
            1.0
        } else {
            0.0
        };
        Complex64::new(v, 0.0)
    });
    Ok(h.with_flags(Flags::self_adjoint())
        .with_control(ResolventControl::identity())
        .with_norm_bound(2.0 + 2.0 * lam.abs())
        .with_meta("basis", serde_json::json!("interleave 0,1,-1,2,-2,..."))
        .with_meta("lambda", serde_json::json!(lam))
        .with_meta("alpha", serde_json::json!(alpha)))
}

/// Free Jacobi operator on l2(N): ones on the first off-diagonals, Sp = [−2, 2].
pub fn free_jacobi() -> OperatorHandle {
    OperatorHandle::from_fn("free_jacobi", Some(1), |i, j| {
        Complex64::new(if i.abs_diff(j) == 1 { 1.0 } else { 0.0 }, 0.0)
    })
    .with_flags(Flags::self_adjoint())
    .with_control(ResolventControl::identity())
    .with_norm_bound(2.0)
}

/// Left endpoint number t of the middle-thirds construction: binary digits of t, least
/// significant first, become the ternary digits 0/2 of the point.
pub fn cantor_point(t: usize) -> f64 {
    let (mut x, mut s, mut t) = (0.0, 1.0 / 3.0, t);
    while t > 0 {
        if t & 1 == 1 {
            x += 2.0 * s;
        }
        s /= 3.0;
        t >>= 1;
    }
    x
}

/// Diagonal operator whose first 2^k entries are the left endpoints of the level-k
/// Cantor intervals, for every k. The spectrum is the middle-thirds Cantor set; `depth`
/// is the level guaranteed to be enumerated in full by the first 2^depth entries.
pub fn cantor_diagonal(depth: usize) -> Result<OperatorHandle> {
    if depth == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    let seq = DiagonalSequence::Custom {
        f: Arc::new(|m| Complex64::new(cantor_point(m - 1), 0.0)),
        sup: 1.0,
        real: true,
    };
    let mut h = diagonal(seq).with_meta("depth", serde_json::json!(depth));
    h.label = "cantor_diagonal".into();
    Ok(h)
}

/// Sorted disjoint closed intervals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandList {
    pub bands: Vec<(f64, f64)>,
}

impl BandList {
    /// Merge arbitrary closed intervals (touching ones are joined).
    pub fn from_intervals(ivs: &[(f64, f64)]) -> Self {
        let mut v: Vec<(f64, f64)> = ivs.to_vec();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        BandList { bands: out }
    }

    pub fn measure(&self) -> f64 {
        self.bands.iter().map(|(a, b)| b - a).sum()
    }

    fn dist(&self, x: f64) -> f64 {
        self.bands.iter().map(|&(a, b)| if x < a { a - x } else if x > b { x - b } else { 0.0 }).fold(f64::INFINITY, f64::min)
    }

    /// sup over x in self of dist(x, other).
    fn excess(&self, other: &BandList) -> f64 {
        let mut cand: Vec<f64> = Vec::new();
        for &(a, b) in &self.bands {
            cand.push(a);
            cand.push(b);
            for w in other.bands.windows(2) {
                let mid = 0.5 * (w[0].1 + w[1].0);
                if mid > a && mid < b {
                    cand.push(mid);
                }
            }
        }
        cand.into_iter().map(|x| other.dist(x)).fold(0.0, f64::max)
    }

    /// Hausdorff distance between two nonempty band lists.
    pub fn hausdorff(&self, other: &BandList) -> f64 {
        self.excess(other).max(other.excess(self))
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    use num_integer::Integer;
    a.gcd(&b)
}

/// Ascending eigenvalues of a real symmetric n×n matrix (row-major).
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(n, n, a);
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Bands of the q-periodic operator with potential 2λcos(2πnp/q + ν): band k joins the
/// k-th eigenvalues of the Bloch matrices at quasimomenta 0 and π.
pub fn periodic_bands(p: u64, q: u64, lam: f64, nu: f64) -> Vec<(f64, f64)> {
    let n = q as usize;
    let bloch = |sign: f64| {
        let mut a = vec![0.0; n * n];
        for k in 0..n {
            a[k * n + k] = 2.0 * lam * (2.0 * PI * (k as f64) * p as f64 / q as f64 + nu).cos();
        }
        if n == 1 {
            a[0] += 2.0 * sign;
            return a;
        }
        for k in 0..n - 1 {
            a[k * n + k + 1] += 1.0;
            a[(k + 1) * n + k] += 1.0;
        }
        a[(n - 1) * n] += sign;
        a[n - 1] += sign;
        a
    };
    let e0 = symmetric_eigenvalues(&bloch(1.0), n);
    let e1 = symmetric_eigenvalues(&bloch(-1.0), n);
    e0.iter().zip(&e1).map(|(&x, &y)| (x.min(y), x.max(y))).collect()
}

/// S(p/q): union over ν of the spectra.
///
/// The discriminant sees ν only through λ^q cos(qν), so phases whose cosines are spaced by
/// at most 2/λ^q cover the union. For λ^q ≤ 2 these are the three phases π/(2q), 0 and π/q.
pub fn am_union_spectrum(p: u64, q: u64, lam: f64) -> Result<BandList> {
    if q == 0 || gcd(p, q) != 1 {
        return Err(Error::Domain(format!("need gcd(p, q) = 1 and q ≥ 1, got {p}/{q}")));
    }
    let qf = q as f64;
    let a = lam.abs().powf(qf);
    if !a.is_finite() || a > 1e6 {
        return Err(Error::Domain(format!("λ^q = {a:e} needs too many phases")));
    }
    let m = (a.ceil() as usize).max(2);
    let mut all = Vec::new();
    for j in 0..=m {
        let c = 1.0 - 2.0 * j as f64 / m as f64;
        let nu = match (2 * j).cmp(&m) {
            std::cmp::Ordering::Equal => PI / (2.0 * qf),
            _ => c.clamp(-1.0, 1.0).acos() / qf,
        };
        all.extend(periodic_bands(p, q, lam, nu));
    }
    Ok(BandList::from_intervals(&all))
}

/// Union of the periodic spectra over `samples` equally spaced phases in [0, 2π).
pub fn am_union_sampled(p: u64, q: u64, lam: f64, samples: usize) -> BandList {
    let mut all = Vec::new();
    for k in 0..samples {
        all.extend(periodic_bands(p, q, lam, 2.0 * PI * k as f64 / samples as f64));
    }
    BandList::from_intervals(&all)
}

/// 2(√5 + 1)/q < |S(p/q)| < 8e/q at λ = 1.
pub fn last_bounds_check(p: u64, q: u64) -> Result<bool> {
    let m = am_union_spectrum(p, q, 1.0)?.measure();
    let qf = q as f64;
    Ok(2.0 * (5f64.sqrt() + 1.0) / qf < m && m < 8.0 * std::f64::consts::E / qf)
}

/// Convergents p/q of [0; a_1, a_2, …] with q ≤ max_q.
pub fn continued_fraction_convergents(cf: &[u64], max_q: u64) -> Result<Vec<(u64, u64)>> {
    if cf.is_empty() {
        return Err(Error::Domain("empty continued fraction".into()));
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1u128, 0u128, 0u128, 1u128);
    let mut out = Vec::new();
    for &a in cf {
        let (p, q) = (a as u128 * p1 + p0, a as u128 * q1 + q0);
        if q > max_q as u128 {
            break;
        }
        out.push((p as u64, q as u64));
        (p0, q0, p1, q1) = (p1, q1, p, q);
    }
    Ok(out)
}

/// Partial quotients of p/q in (0, 1).
pub fn continued_fraction_of(p: u64, q: u64) -> Vec<u64> {
    let (mut a, mut b) = (q, p);
    let mut out = Vec::new();
    while b != 0 {
        out.push(a / b);
        (a, b) = (b, a % b);
    }
    out
}

/// [0; 1, 1, 1, …] with `len` quotients.
pub fn golden_cf(len: usize) -> Vec<u64> {
    vec![1; len]
}

/// [0; 1, m, m, …] with `len` quotients.
pub fn alpha_m_cf(m: u64, len: usize) -> Vec<u64> {
    let mut v = vec![m; len];
    if len > 0 {
        v[0] = 1;
    }
    v
}

/// Σ_{k=1}^{terms} base^{-k!} as a reduced fraction (p, q); base 10, 3 terms gives
/// 0.110001.
pub fn liouville_rational(base: u64, terms: u32) -> Result<(u64, u64)> {
    let mut fact = 1u32;
    let mut exps = Vec::new();
    for k in 1..=terms {
        fact *= k;
        exps.push(fact);
    }
    let top = *exps.last().unwrap_or(&0);
    let q = base.checked_pow(top).ok_or_else(|| Error::Numeric("Liouville denominator overflows".into()))?;
    let p: u64 = exps.iter().map(|&e| base.pow(top - e)).sum();
    let g = gcd(p, q);
    Ok((p / g, q / g))
}

/// Vertex/edge data of a Penrose rhombus patch in breadth-first order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenroseGraph {
    /// Coordinates, indexed by BFS position.
    pub vertices: Vec<[f64; 2]>,
    /// Edges (u, v), u < v, BFS positions.
    pub edges: Vec<(usize, usize)>,
    /// ordering[pos] = construction index of the vertex at BFS position pos.
    pub ordering: Vec<usize>,
    pub bandwidth: usize,
    pub generations: usize,
    /// Construction index of the BFS seed (the vertex nearest the origin).
    pub seed: usize,
}

impl PenroseGraph {
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices.len()];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }
}

type Tri = (bool, Complex64, Complex64, Complex64);

/// Robinson-triangle subdivision starting from a wheel of ten thin triangles. Each
/// generation subdivides every triangle; the tiling is rescaled by the golden ratio so
/// edges keep unit length.
fn penrose_triangles(generations: usize) -> Vec<Tri> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut tris: Vec<Tri> = (0..10)
        .map(|i| {
            let mut b = Complex64::from_polar(1.0, (2 * i as i32 - 1) as f64 * PI / 10.0);
            let mut c = Complex64::from_polar(1.0, (2 * i as i32 + 1) as f64 * PI / 10.0);
            if i % 2 == 0 {
                std::mem::swap(&mut b, &mut c);
            }
            (false, Complex64::new(0.0, 0.0), b, c)
        })
        .collect();
    for _ in 0..generations {
        let mut next = Vec::with_capacity(tris.len() * 3);
        for (thick, a, b, c) in tris {
            if !thick {
                let p = a + (b - a) / phi;
                next.push((false, c, p, b));
                next.push((true, p, c, a));
            } else {
                let q = b + (a - b) / phi;
                let r = b + (c - b) / phi;
                next.push((true, r, c, a));
                next.push((true, q, r, b));
                next.push((false, r, q, a));
            }
        }
        tris = next.into_iter().map(|(t, a, b, c)| (t, a * phi, b * phi, c * phi)).collect();
    }
    tris
}

/// Penrose patch graph after `generations` subdivisions and its negative Laplacian
/// (Hψ)(x) = Σ_{y∼x} (ψ(y) − ψ(x)), ordered breadth-first from the central vertex.
///
/// The operator acts on l2(N) as H ⊕ 0; its dispersion is exact with the certified
/// bandwidth of the BFS order.
pub fn penrose_laplacian(generations: usize) -> Result<(OperatorHandle, PenroseGraph)> {
    if generations == 0 {
        return Err(Error::Domain("generations must be at least 1".into()));
    }
    let tris = penrose_triangles(generations);
    // Edges have length ≥ 1/φ after rescaling; merge within a relative 1e-9.
    let tol = 1e-9;
    let cell = 1e-6;
    let mut pts: Vec<Complex64> = Vec::new();
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut id = |z: Complex64, pts: &mut Vec<Complex64>| -> usize {
        let key = ((z.re / cell).round() as i64, (z.im / cell).round() as i64);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = grid.get(&(key.0 + dx, key.1 + dy)) {
                    for &k in v {
                        if (pts[k] - z).norm() <= tol * 10.0 {
                            return k;
                        }
                    }
                }
            }
        }
        pts.push(z);
        grid.entry(key).or_default().push(pts.len() - 1);
        pts.len() - 1
    };
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for &(_, a, b, c) in &tris {
        let (ia, ib, ic) = (id(a, &mut pts), id(b, &mut pts), id(c, &mut pts));
        for (u, v) in [(ic, ia), (ia, ib)] {
            if u != v {
                edges.push((u.min(v), u.max(v)));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let nv = pts.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &(u, v) in &edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for (u, list) in adj.iter_mut().enumerate() {
        let o = pts[u];
        list.sort_by(|&x, &y| (pts[x] - o).arg().total_cmp(&(pts[y] - o).arg()));
    }
    let seed = (0..nv).min_by(|&x, &y| pts[x].norm().total_cmp(&pts[y].norm())).unwrap_or(0);
    let mut pos = vec![usize::MAX; nv];
    let mut ordering = Vec::with_capacity(nv);
    let mut queue = VecDeque::from([seed]);
    pos[seed] = 0;
    ordering.push(seed);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if pos[v] == usize::MAX {
                pos[v] = ordering.len();
                ordering.push(v);
                queue.push_back(v);
            }
        }
    }
    if ordering.len() != nv {
        return Err(Error::Numeric("Penrose patch is not connected".into()));
    }
    let mut bfs_edges: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(u, v)| (pos[u].min(pos[v]), pos[u].max(pos[v])))
        .collect();
    bfs_edges.sort_unstable();
    let bandwidth = bfs_edges.iter().map(|&(u, v)| v - u).max().unwrap_or(0);
    let graph = PenroseGraph {
        vertices: ordering.iter().map(|&k| [pts[k].re, pts[k].im]).collect(),
        edges: bfs_edges,
        ordering,
        bandwidth,
        generations,
        seed,
    };
    let op = laplacian_handle(&graph);
    Ok((op, graph))
}

struct GraphLaplacian {
    n: usize,
    band: usize,
    /// Sorted neighbor lists in BFS positions.
    adj: Vec<Vec<usize>>,
}

impl EntryOracle for GraphLaplacian {
    fn entry(&self, i: usize, j: usize, _k: u32) -> Result<Complex64> {
        let (a, b) = (i - 1, j - 1);
        let v = if a >= self.n || b >= self.n {
            0.0
        } else if a == b {
            -(self.adj[a].len() as f64)
        } else if self.adj[a].binary_search(&b).is_ok() {
            1.0
        } else {
            0.0
        };
        Ok(Complex64::new(v, 0.0))
    }

    fn window(&self, j: usize) -> Option<(usize, usize)> {
        if j > self.n {
            Some((j, j))
        } else {
            Some((j.saturating_sub(self.band).max(1), j + self.band))
        }
    }
}

fn laplacian_handle(g: &PenroseGraph) -> OperatorHandle {
    let n = g.vertices.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in &g.edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
    }
    let maxdeg = adj.iter().map(|l| l.len()).max().unwrap_or(0);
    OperatorHandle::new("penrose_laplacian", GraphLaplacian { n, band: g.bandwidth, adj })
        .with_flags(Flags::self_adjoint())
        .with_dispersion(dispersion_from_band(g.bandwidth))
        .with_control(ResolventControl::identity())
        .with_norm_bound(2.0 * maxdeg as f64)
        .with_meta("ordering", serde_json::json!("bfs"))
        .with_meta("seed", serde_json::json!(g.seed))
        .with_meta("bandwidth", serde_json::json!(g.bandwidth))
        .with_meta("vertices", serde_json::json!(n))
        .with_meta("generations", serde_json::json!(g.generations))
}

/// Dense eigenvalues of the patch Laplacian.
pub fn penrose_spectrum(g: &PenroseGraph) -> Vec<f64> {
    let n = g.vertices.len();
    let mut a = vec![0.0; n * n];
    for &(u, v) in &g.edges {
        a[u * n + v] = 1.0;
        a[v * n + u] = 1.0;
        a[u * n + u] -= 1.0;
        a[v * n + v] -= 1.0;
    }
    symmetric_eigenvalues(&a, n)
}

/// Union of closed intervals helper re-exported for band arithmetic.
pub fn band_union_length(ivs: &[(f64, f64)]) -> f64 {
    merge_intervals(ivs, f64::NEG_INFINITY, f64::INFINITY).iter().map(|(a, b)| b - a).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleave_roundtrip() {
        for i in 1..50 {
            assert_eq!(interleave_pos(interleave_site(i)), i);
        }
        assert_eq!((1..=5).map(interleave_site).collect::<Vec<_>>(), vec![0, 1, -1, 2, -2]);
    }

    #[test]
    fn am_entries() {
        let h = almost_mathieu(&AlmostMathieuSpec { lambda: 1.0, alpha: Alpha::Golden, nu_over_pi: 0.0 }).unwrap();
        let a = Alpha::Golden.value();
        let i = interleave_pos(3);
        assert!((h.entry(i, i, 30).unwrap().re - 2.0 * (2.0 * PI * 3.0 * a).cos()).abs() < 1e-14);
        assert_eq!(h.entry(interleave_pos(3), interleave_pos(4), 30).unwrap().re, 1.0);
        assert_eq!(h.entry(interleave_pos(3), interleave_pos(5), 30).unwrap().re, 0.0);
        for j in 1..40 {
            let (lo, hi) = h.window(j).unwrap();
            for i in 1..45 {
                if i < lo || i > hi {
                    assert_eq!(h.entry(i, j, 30).unwrap().re, 0.0);
                }
            }
        }
    }

    #[test]
    fn convergents() {
        let c = continued_fraction_convergents(&golden_cf(20), 13).unwrap();
        assert_eq!(c, vec![(1, 1), (1, 2), (2, 3), (3, 5), (5, 8), (8, 13)]);
        let (p, q) = liouville_rational(10, 3).unwrap();
        assert_eq!((p, q), (110001, 1000000));
        let cf = continued_fraction_of(p, q);
        assert_eq!(*continued_fraction_convergents(&cf, q).unwrap().last().unwrap(), (p, q));
    }

    #[test]
    fn small_band_lists() {
        let s = am_union_spectrum(0, 1, 1.0).unwrap();
        assert_eq!(s.bands.len(), 1);
        assert!((s.bands[0].0 + 4.0).abs() < 1e-12 && (s.bands[0].1 - 4.0).abs() < 1e-12);
        let s2 = am_union_spectrum(1, 2, 1.0).unwrap();
        for &(a, b) in &s2.bands {
            assert!(s2.bands.iter().any(|&(c, d)| (c + b).abs() < 1e-9 && (d + a).abs() < 1e-9));
        }
        assert!(last_bounds_check(1, 2).unwrap());
        assert!(am_union_spectrum(2, 4, 1.0).is_err());
    }

    #[test]
    fn penrose_small() {
        let (h, g) = penrose_laplacian(2).unwrap();
        let n = g.vertices.len();
        for i in 1..=n {
            let s: f64 = (1..=n).map(|j| h.entry(i, j, 30).unwrap().re).sum();
            assert_eq!(s, 0.0);
        }
        for &(u, v) in &g.edges {
            assert!(v - u <= g.bandwidth && u != v);
        }
    }
}
