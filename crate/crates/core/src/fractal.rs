//! Box-counting and Hausdorff dimension towers for spectra on the real line.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::merge_intervals;
use crate::operators::{OperatorHandle, ResolventControl};
use crate::par;
use crate::resolvent::ResolventProbe;
use crate::spectra::comp_spec;

/// Mesh intervals [j 2^-m, (j+1) 2^-m] for the listed j (strictly increasing).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MeshCover {
    pub m: u32,
    pub js: Vec<i64>,
}

impl MeshCover {
    pub fn len(&self) -> usize {
        self.js.len()
    }

    pub fn is_empty(&self) -> bool {
        self.js.is_empty()
    }
}

/// Closed dyadic interval [j 2^-level, (j+1) 2^-level].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DyadicInterval {
    pub level: u32,
    pub index: i64,
}

impl DyadicInterval {
    pub fn bounds(&self) -> (f64, f64) {
        let h = 2f64.powi(-(self.level as i32));
        (self.index as f64 * h, (self.index + 1) as f64 * h)
    }
}

/// Index range [lo, hi] of 2^-m mesh intervals meeting the closed interval [a, b].
fn mesh_range(a: f64, b: f64, m: u32) -> (i64, i64) {
    let s = 2f64.powi(m as i32);
    ((a * s).ceil() as i64 - 1, (b * s).floor() as i64)
}

/// Fewest 2^-m mesh intervals meeting every target: greedy piercing by right endpoint.
pub fn minimal_mesh_cover(targets: &[(f64, f64)], m: u32) -> MeshCover {
    let mut r: Vec<(i64, i64)> = targets.iter().map(|&(a, b)| mesh_range(a.min(b), a.max(b), m)).collect();
    r.sort_by_key(|x| (x.1, x.0));
    let mut js = Vec::new();
    let mut last: Option<i64> = None;
    for (lo, hi) in r {
        if last.map_or(true, |l| l < lo) {
            js.push(hi);
            last = Some(hi);
        }
    }
    MeshCover { m, js }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxDimReport {
    pub value: f64,
    /// (k, |Υ_k|) for each mesh exponent k used.
    pub counts: Vec<(u32, usize)>,
}

fn with_identity_control(op: &OperatorHandle) -> Result<OperatorHandle> {
    op.require_self_adjoint()?;
    op.require_dispersion()?;
    Ok(op.clone().with_control(ResolventControl::identity()))
}

/// Targets [z − 2^-l, z + 2^-l] for the spectrum estimates at levels l = 1..=n1.
///
/// Level l runs CompSpec at index 2^(l+1), whose points lie within 2^-l of the spectrum
/// for the operators this module targets (self-adjoint, g(x) = x).
pub fn spectrum_targets(op: &OperatorHandle, n1: u32) -> Result<Vec<(f64, f64)>> {
    let op = with_identity_control(op)?;
    let mut t = Vec::new();
    for l in 1..=n1 {
        let est = comp_spec(&op, 1usize << (l + 1))?;
        let r = 2f64.powi(-(l as i32));
        t.extend(est.points.iter().map(|z| (z.re - r, z.re + r)));
    }
    Ok(t)
}

/// BoxDim: max over n2 ≤ k ≤ n1 of log|Υ_k| / (k log 2), Υ_k the minimal 2^-k cover of
/// all targets up to level n1. Zero when n2 > n1.
pub fn box_dim(op: &OperatorHandle, n1: u32, n2: u32) -> Result<BoxDimReport> {
    let targets = spectrum_targets(op, n1)?;
    Ok(box_dim_from_targets(&targets, n1, n2))
}

pub fn box_dim_from_targets(targets: &[(f64, f64)], n1: u32, n2: u32) -> BoxDimReport {
    let ks: Vec<u32> = (n2.max(1)..=n1).collect();
    let counts: Vec<(u32, usize)> = par::map(&ks, |&k| (k, minimal_mesh_cover(targets, k).len()));
    let value = counts
        .iter()
        .filter(|(_, c)| *c > 0)
        .map(|&(k, c)| (c as f64).ln() / (k as f64 * std::f64::consts::LN_2))
        .fold(0.0f64, f64::max);
    BoxDimReport { value, counts }
}

/// Level-n2 dyadic intervals inside the box whose interior passes the halt test at n1.
///
/// The box is [−n1, n1] clipped to [−‖A‖ − 1, ‖A‖ + 1]. All midpoints share one probe.
pub fn dyadic_spectrum_cover(op: &OperatorHandle, n1: usize, n2: u32) -> Result<Vec<DyadicInterval>> {
    op.require_self_adjoint()?;
    let d = op.require_dispersion()?;
    if n1 == 0 {
        return Err(Error::Domain("n1 must be positive".into()));
    }
    let c = match op.norm_bound {
        Some(m) => (m + 1.0).min(n1 as f64),
        None => n1 as f64,
    };
    let s = 2f64.powi(n2 as i32);
    let (j0, j1) = ((-c * s).ceil() as i64, (c * s).floor() as i64 - 1);
    if j1 < j0 {
        return Ok(Vec::new());
    }
    let js: Vec<i64> = (j0..=j1).collect();
    let h = 1.0 / s;
    let delta = 0.5 * h;
    let cn = d.c(n1);
    if cn >= delta {
        return Ok(Vec::new());
    }
    let den = n1 as u64;
    // Yes iff l/den + c_n < δ; anything above the cap fails.
    let cap = ((delta - cn) * den as f64).ceil() as u64;
    let probe = ResolventProbe::new(op, n1, d.f(n1))?;
    let zs: Vec<Complex64> = js.iter().map(|&j| Complex64::new((j as f64 + 0.5) * h, 0.0)).collect();
    let ls = probe.sweep(&zs, den, Some(cap));
    Ok(js
        .into_iter()
        .zip(ls)
        .filter(|&(_, l)| l <= cap && (l as f64 / den as f64) + cn < delta)
        .map(|(index, _)| DyadicInterval { level: n2, index })
        .collect())
}

/// Minimum of Σ diam^d over covers of the level-n2 targets by dyadic intervals with
/// levels in [n3, n2], by dynamic programming on the dyadic tree.
pub fn hausdorff_premeasure(targets: &[DyadicInterval], d: f64, n3: u32, n2: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(format!("d = {d} is outside [0, 1]")));
    }
    if n3 > n2 {
        return Err(Error::Domain("need n3 ≤ n2".into()));
    }
    if let Some(t) = targets.iter().find(|t| t.level != n2) {
        return Err(Error::Domain(format!("target at level {} but n2 = {n2}", t.level)));
    }
    let w = |l: u32| 2f64.powi(-(l as i32)).powf(d);
    let mut cur: Vec<(i64, f64)> = targets.iter().map(|t| (t.index, w(n2))).collect();
    cur.sort_by_key(|x| x.0);
    cur.dedup_by_key(|x| x.0);
    for l in (n3..n2).rev() {
        let mut next: Vec<(i64, f64)> = Vec::with_capacity(cur.len());
        for (j, c) in cur {
            let p = j.div_euclid(2);
            match next.last_mut() {
                Some(last) if last.0 == p => last.1 += c,
                _ => next.push((p, c)),
            }
        }
        let wl = w(l);
        cur = next.into_iter().map(|(j, c)| (j, c.min(wl))).collect();
    }
    Ok(cur.iter().map(|x| x.1).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HausDimReport {
    pub value: f64,
    /// (d, h(d)) on the grid d = m/2^n3.
    pub curve: Vec<(f64, f64)>,
    pub targets: usize,
    /// J/2^n2 lower cut-off of the premeasure at d = 1.
    pub cutoff: f64,
}

/// HausDim with the default threshold 1/2.
pub fn haus_dim(op: &OperatorHandle, n1: usize, n2: u32, n3: u32) -> Result<HausDimReport> {
    haus_dim_with(op, n1, n2, n3, 0.5)
}

/// max{m/2^n3 : b_j > threshold for j = 1..m}, b_m = h(m/2^n3) + 1/n2.
pub fn haus_dim_with(op: &OperatorHandle, n1: usize, n2: u32, n3: u32, threshold: f64) -> Result<HausDimReport> {
    if n2 == 0 || n3 > n2 {
        return Err(Error::Domain("need 1 ≤ n3 ≤ n2".into()));
    }
    let targets = dyadic_spectrum_cover(op, n1, n2)?;
    haus_dim_from_targets(&targets, n2, n3, threshold)
}

pub fn haus_dim_from_targets(targets: &[DyadicInterval], n2: u32, n3: u32, threshold: f64) -> Result<HausDimReport> {
    let steps = 1u64 << n3;
    let ds: Vec<f64> = (1..=steps).map(|m| m as f64 / steps as f64).collect();
    let hs = par::map(&ds, |&d| hausdorff_premeasure(targets, d, n3, n2)).into_iter().collect::<Result<Vec<_>>>()?;
    let mut value = 0.0;
    for (d, h) in ds.iter().zip(&hs) {
        if h + 1.0 / n2 as f64 > threshold {
            value = *d;
        } else {
            break;
        }
    }
    Ok(HausDimReport {
        value,
        curve: ds.into_iter().zip(hs).collect(),
        targets: targets.len(),
        cutoff: targets.len() as f64 * 2f64.powi(-(n2 as i32)),
    })
}

/// Least-squares line y = a + b x; returns (b, a, rms residual).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    (b, a, (rss / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SausageFit {
    pub slope: f64,
    pub dimension: f64,
    pub residual: f64,
}

/// Slope of log|F + B_δ| against log δ; the dimension estimate is 1 − slope.
pub fn sausage_dimension_fit(data: &[(f64, f64)]) -> Result<SausageFit> {
    if data.len() < 3 {
        return Err(Error::Domain("need at least three (delta, measure) points".into()));
    }
    if data.iter().any(|&(d, m)| !(d > 0.0) || !(m > 0.0)) {
        return Err(Error::Domain("deltas and measures must be positive".into()));
    }
    let xs: Vec<f64> = data.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = data.iter().map(|p| p.1.ln()).collect();
    let (slope, _, residual) = fit_line(&xs, &ys);
    Ok(SausageFit { slope, dimension: 1.0 - slope, residual })
}

/// Slopes of consecutive windows of length w (for oscillation diagnostics).
pub fn windowed_slopes(data: &[(f64, f64)], w: usize) -> Vec<f64> {
    if w < 2 {
        return Vec::new();
    }
    data.windows(w)
        .map(|win| {
            let xs: Vec<f64> = win.iter().map(|p| p.0.ln()).collect();
            let ys: Vec<f64> = win.iter().map(|p| p.1.ln()).collect();
            fit_line(&xs, &ys).0
        })
        .collect()
}

/// |F + B_δ(0)| for F a finite union of closed intervals.
pub fn sausage_measure(bands: &[(f64, f64)], delta: f64) -> f64 {
    let grown: Vec<(f64, f64)> = bands.iter().map(|&(a, b)| (a - delta, b + delta)).collect();
    merge_intervals(&grown, f64::NEG_INFINITY, f64::INFINITY).iter().map(|(a, b)| b - a).sum()
}

/// Mesh counts N_k = #{j : (j 2^-k, (j+1) 2^-k) meets the points} for each k.
pub fn mesh_counts(points: &[f64], ks: &[u32]) -> Vec<(u32, usize)> {
    ks.iter()
        .map(|&k| {
            let s = 2f64.powi(k as i32);
            let mut js: Vec<i64> = points.iter().map(|x| (x * s).floor() as i64).collect();
            js.sort_unstable();
            js.dedup();
            (k, js.len())
        })
        .collect()
}
