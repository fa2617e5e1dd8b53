//! Lebesgue measure of spectra and pseudospectra.
//!
//! Two-dimensional towers count cell centers of a union of disks; the real-line
//! variants work with exact interval unions. Grids are clipped to the norm ball
//! [−C, C] with C = ‖A‖ + 1 when a norm bound is known: outside it every disk
//! radius exceeds 1 and the box contributes nothing to the measure.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::BandHermitian;
use crate::operators::OperatorHandle;
use crate::par;
use crate::resolvent::{dyadic_schedule, ResolventProbe};
use crate::spectra::Section;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn square(c: f64) -> Self {
        Rect { x0: -c, x1: c, y0: -c, y1: c }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiskUnion {
    pub disks: Vec<Disk>,
    pub rect: Rect,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionMeasure {
    pub value: f64,
    pub quadrature_error: f64,
    /// Cell side of the counting grid (0 for exact 1-D results).
    pub resolution: f64,
}

/// Merge half-open index ranges [a, b) in place; returns the merged list.
fn merge_ranges(mut v: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    v.retain(|r| r.0 < r.1);
    v.sort_unstable();
    let mut out: Vec<(i64, i64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn ranges_len(v: &[(i64, i64)]) -> i64 {
    v.iter().map(|r| r.1 - r.0).sum()
}

/// Area of the union of the disks inside the rectangle, on a q×q cell grid.
///
/// `value` counts cells whose center lies in the union. A cell contributes to the
/// error only when it is neither inside a single disk nor outside all disks, and then
/// by at most its area, so |value − area| ≤ quadrature_error.
pub fn disk_union_measure(d: &DiskUnion, q: usize) -> RegionMeasure {
    let r = d.rect;
    if r.area() == 0.0 || q == 0 {
        return RegionMeasure { value: 0.0, quadrature_error: 0.0, resolution: 0.0 };
    }
    let (hx, hy) = ((r.x1 - r.x0) / q as f64, (r.y1 - r.y0) / q as f64);
    let disks: Vec<&Disk> = d.disks.iter().filter(|k| k.radius > 0.0).collect();
    // Rows touched by each disk.
    let mut by_row: Vec<Vec<u32>> = vec![Vec::new(); q];
    for (idx, k) in disks.iter().enumerate() {
        let lo = (((k.center.im - k.radius) - r.y0) / hy).floor().max(0.0) as usize;
        let hi = (((k.center.im + k.radius) - r.y0) / hy).floor().min(q as f64 - 1.0);
        if hi < 0.0 {
            continue;
        }
        for row in lo..=hi as usize {
            by_row[row].push(idx as u32);
        }
    }
    let counts = par::map_range(q, |row| {
        let ya = r.y0 + row as f64 * hy;
        let yb = ya + hy;
        let yc = ya + 0.5 * hy;
        let (mut center, mut inner, mut outer) = (Vec::new(), Vec::new(), Vec::new());
        for &idx in &by_row[row] {
            let k = disks[idx as usize];
            let (cx, cy, rad) = (k.center.re, k.center.im, k.radius);
            let chord = |dy: f64| -> Option<f64> {
                let s = rad * rad - dy * dy;
                (s > 0.0).then(|| s.sqrt())
            };
            let cell = |x: f64| (x - r.x0) / hx;
            // Cells whose center is in the disk: open disk.
            if let Some(w) = chord(yc - cy) {
                let a = (cell(cx - w) - 0.5).floor() as i64 + 1;
                let b = (cell(cx + w) - 0.5).ceil() as i64;
                center.push((a.max(0), b.min(q as i64)));
            }
            // Cells entirely inside: the chord at the row edge farther from cy.
            let far = (ya - cy).abs().max((yb - cy).abs());
            if let Some(w) = chord(far) {
                let a = cell(cx - w).ceil() as i64;
                let b = cell(cx + w).floor() as i64;
                inner.push((a.max(0), b.min(q as i64)));
            }
            // Cells that may meet the disk: chord at the nearest y in the row.
            let near = if cy >= ya && cy <= yb { 0.0 } else { (ya - cy).abs().min((yb - cy).abs()) };
            if rad > near {
                let w = (rad * rad - near * near).sqrt();
                let a = cell(cx - w).floor() as i64;
                let b = cell(cx + w).ceil() as i64;
                outer.push((a.max(0), b.min(q as i64)));
            }
        }
        let c = ranges_len(&merge_ranges(center));
        let unsure = ranges_len(&merge_ranges(outer)) - ranges_len(&merge_ranges(inner));
        (c, unsure.max(0))
    });
    let cell = hx * hy;
    let (c, u) = counts.iter().fold((0i64, 0i64), |s, x| (s.0 + x.0, s.1 + x.1));
    RegionMeasure { value: c as f64 * cell, quadrature_error: u as f64 * cell, resolution: hx.max(hy) }
}

/// Length of the union of open intervals, clipped to [lo, hi].
pub fn interval_union_length(ivs: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    merge_intervals(ivs, lo, hi).iter().map(|(a, b)| b - a).sum()
}

/// Sorted disjoint union of the intervals, clipped to [lo, hi].
pub fn merge_intervals(ivs: &[(f64, f64)], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> =
        ivs.iter().map(|&(a, b)| (a.max(lo), b.min(hi))).filter(|(a, b)| a < b).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Knobs shared by the LebSpec family.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LebOptions {
    /// DistSpec lattice denominator; default max(n1, 2^(n2+10)).
    pub den: Option<u64>,
    /// Quadrature cells per side; default 4·2^n2 per unit length.
    pub q: Option<usize>,
    /// Half-width of the box; default min(n1, ‖A‖ + 1).
    pub half_width: Option<f64>,
}

impl LebOptions {
    fn den(&self, n1: usize, n2: u32) -> u64 {
        self.den.unwrap_or_else(|| (n1 as u64).max(1u64 << (n2 + 10).min(40)))
    }

    fn half_width(&self, op: &OperatorHandle, n1: usize) -> f64 {
        self.half_width.unwrap_or_else(|| match op.norm_bound {
            Some(m) => (m + 1.0).min(n1 as f64),
            None => n1 as f64,
        })
    }
}

/// F_{n1} on the dyadic grid 2^-n2 Z ∩ [−c, c] (or its square), shared by all levels.
struct FSweep {
    n2: u32,
    c: f64,
    /// Lattice coordinates (a, b) of the points, in units of 2^-n2.
    pts: Vec<(i64, i64)>,
    f: Vec<f64>,
}

impl FSweep {
    fn new(op: &OperatorHandle, n1: usize, n2: u32, real: bool, opts: &LebOptions) -> Result<Self> {
        let d = op.require_dispersion()?;
        let c = opts.half_width(op, n1);
        let h = 2f64.powi(-(n2 as i32));
        let k = (c / h).floor() as i64;
        let pts: Vec<(i64, i64)> = if real {
            (-k..=k).map(|a| (a, 0)).collect()
        } else {
            (-k..=k).flat_map(|a| (-k..=k).map(move |b| (a, b))).collect()
        };
        let den = opts.den(n1, n2);
        let probe = ResolventProbe::new(op, n1, d.f(n1))?;
        let zs: Vec<Complex64> = pts.iter().map(|&(a, b)| Complex64::new(a as f64 * h, b as f64 * h)).collect();
        let cn = d.c(n1);
        let f = probe.sweep(&zs, den, None).into_iter().map(|l| l as f64 / den as f64 + cn).collect();
        Ok(FSweep { n2, c, pts, f })
    }

    /// Points and radii of the level-k sub-grid (k ≤ n2).
    fn level(&self, k: u32) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        let step = 1i64 << (self.n2 - k);
        let h = 2f64.powi(-(self.n2 as i32));
        self.pts.iter().zip(&self.f).filter_map(move |(&(a, b), &f)| {
            (a % step == 0 && b % step == 0).then(|| (Complex64::new(a as f64 * h, b as f64 * h), f))
        })
    }

    fn real_intervals(&self, k: u32) -> Vec<(f64, f64)> {
        self.level(k).map(|(z, f)| (z.re - f, z.re + f)).collect()
    }

    fn real_value(&self, k: u32) -> f64 {
        (2.0 * self.c - interval_union_length(&self.real_intervals(k), -self.c, self.c)).max(0.0)
    }

    fn plane_value(&self, k: u32, q: usize) -> RegionMeasure {
        let disks = self.level(k).map(|(center, radius)| Disk { center, radius }).collect();
        let u = disk_union_measure(&DiskUnion { disks, rect: Rect::square(self.c) }, q);
        let area = 4.0 * self.c * self.c;
        RegionMeasure {
            value: (area - u.value - u.quadrature_error).max(0.0),
            quadrature_error: u.quadrature_error,
            resolution: u.resolution,
        }
    }
}

fn default_q(c: f64, n2: u32, opts: &LebOptions) -> usize {
    opts.q.unwrap_or_else(|| ((2.0 * c) * 2f64.powi(n2 as i32 + 2)).ceil().max(1.0) as usize)
}

/// LebSpec in the plane: area of the box minus the union of disks B(z, F_{n1}(z)) over
/// the 2^-n2 grid. The quadrature error is subtracted as well, so the result leans low.
pub fn leb_spec(op: &OperatorHandle, n1: usize, n2: u32) -> Result<RegionMeasure> {
    leb_spec_with(op, n1, n2, &LebOptions::default())
}

pub fn leb_spec_with(op: &OperatorHandle, n1: usize, n2: u32, opts: &LebOptions) -> Result<RegionMeasure> {
    check_indices(n1, n2)?;
    let s = FSweep::new(op, n1, n2, false, opts)?;
    Ok(s.plane_value(n2, default_q(s.c, n2, opts)))
}

/// LebSpec on the real line: exact length of [−C, C] minus the union of intervals.
pub fn leb_spec_real(op: &OperatorHandle, n1: usize, n2: u32) -> Result<f64> {
    leb_spec_real_with(op, n1, n2, &LebOptions::default())
}

pub fn leb_spec_real_with(op: &OperatorHandle, n1: usize, n2: u32, opts: &LebOptions) -> Result<f64> {
    check_indices(n1, n2)?;
    Ok(FSweep::new(op, n1, n2, true, opts)?.real_value(n2))
}

fn check_indices(n1: usize, n2: u32) -> Result<()> {
    if n1 == 0 {
        return Err(Error::Domain("n1 must be positive".into()));
    }
    if n2 > 30 {
        return Err(Error::Domain("grid exponent n2 must be at most 30".into()));
    }
    Ok(())
}

/// Monotone form of LebSpec: min over k ≤ n2 of max over the dyadic n1-schedule.
/// Nondecreasing in n1 and nonincreasing in n2 by construction.
pub fn leb_spec_wrapped(op: &OperatorHandle, n1: usize, n2: u32, real: bool) -> Result<f64> {
    check_indices(n1, n2)?;
    let opts = LebOptions::default();
    let mut best = vec![0.0f64; n2 as usize + 1];
    for j in dyadic_schedule(n1) {
        let s = FSweep::new(op, j, n2, real, &opts)?;
        for k in 0..=n2 {
            let v = if real { s.real_value(k) } else { s.plane_value(k, default_q(s.c, k, &opts)).value };
            best[k as usize] = best[k as usize].max(v);
        }
    }
    Ok(best.into_iter().fold(f64::INFINITY, f64::min))
}

/// Grid points of (1/n)(Z + iZ) with F_n(z) ≤ eps and their radii eps − F_n(z).
fn pseudo_centers(op: &OperatorHandle, n: usize, eps: f64, real: bool) -> Result<Vec<(Complex64, f64)>> {
    if n == 0 || !(eps > 0.0) {
        return Err(Error::Domain("need n ≥ 1 and eps > 0".into()));
    }
    let d = op.require_dispersion()?;
    let cn = d.c(n);
    if cn >= eps {
        return Ok(Vec::new());
    }
    let h = 1.0 / n as f64;
    let r = match op.norm_bound {
        Some(m) => (m + eps).min(n as f64),
        None => n as f64,
    };
    let k = (r / h).floor() as i64;
    let pts: Vec<Complex64> = if real {
        (-k..=k).map(|a| Complex64::new(a as f64 * h, 0.0)).collect()
    } else {
        (-k..=k).flat_map(|a| (-k..=k).map(move |b| Complex64::new(a as f64 * h, b as f64 * h))).collect()
    };
    let den = n as u64;
    let cap = ((eps - cn) * den as f64).floor() as u64;
    let probe = ResolventProbe::new(op, n, d.f(n))?;
    let ls = probe.sweep(&pts, den, Some(cap));
    Ok(pts
        .into_iter()
        .zip(ls)
        .filter(|&(_, l)| l <= cap)
        .map(|(z, l)| (z, eps - (l as f64 / den as f64 + cn)))
        .filter(|&(_, r)| r > 0.0)
        .collect())
}

/// LebPseudoSpec in the plane. `value` is the certified-inside area (center count minus
/// quadrature error), so it stays below Leb(Sp̂_ε).
pub fn leb_pseudo_spec(op: &OperatorHandle, n: usize, eps: f64) -> Result<RegionMeasure> {
    let c = pseudo_centers(op, n, eps, false)?;
    if c.is_empty() {
        return Ok(RegionMeasure { value: 0.0, quadrature_error: 0.0, resolution: 0.0 });
    }
    let half = c.iter().fold(0.0f64, |m, (z, r)| m.max(z.re.abs() + r).max(z.im.abs() + r));
    let q = ((2.0 * half) / (eps / 64.0).min(0.25 / n as f64)).ceil().min(8192.0) as usize;
    let u = disk_union_measure(
        &DiskUnion { disks: c.into_iter().map(|(center, radius)| Disk { center, radius }).collect(), rect: Rect::square(half) },
        q,
    );
    Ok(RegionMeasure { value: (u.value - u.quadrature_error).max(0.0), ..u })
}

/// LebPseudoSpec on the real line (exact interval union).
pub fn leb_pseudo_spec_real(op: &OperatorHandle, n: usize, eps: f64) -> Result<f64> {
    let c = pseudo_centers(op, n, eps, true)?;
    let ivs: Vec<(f64, f64)> = c.iter().map(|(z, r)| (z.re - r, z.re + r)).collect();
    Ok(interval_union_length(&ivs, f64::NEG_INFINITY, f64::INFINITY))
}

/// Successive maxima of LebPseudoSpec over the dyadic schedule ending at n.
pub fn leb_pseudo_spec_monotone(op: &OperatorHandle, n: usize, eps: f64, real: bool) -> Result<f64> {
    let mut best = 0.0f64;
    for k in dyadic_schedule(n) {
        let v = if real { leb_pseudo_spec_real(op, k, eps)? } else { leb_pseudo_spec(op, k, eps)?.value };
        best = best.max(v);
    }
    Ok(best)
}

/// The three-index tower for bounded operators without dispersion data: box of half-width
/// n2 (clipped to ‖A‖ + 1), grid 2^-n3, disks B(z, γ_{n2,n1}(z)).
pub fn leb_spec3(op: &OperatorHandle, n1: usize, n2: usize, n3: u32) -> Result<RegionMeasure> {
    if n2 == 0 {
        return Ok(RegionMeasure { value: 0.0, quadrature_error: 0.0, resolution: 0.0 });
    }
    if n1 < n2 {
        return Err(Error::Domain("need n1 ≥ n2".into()));
    }
    check_indices(n1, n3)?;
    let c = match op.norm_bound {
        Some(m) => (m + 1.0).min(n2 as f64),
        None => n2 as f64,
    };
    let h = 2f64.powi(-(n3 as i32));
    let k = (c / h).floor() as i64;
    let zs: Vec<Complex64> =
        (-k..=k).flat_map(|a| (-k..=k).map(move |b| Complex64::new(a as f64 * h, b as f64 * h))).collect();
    let probe = ResolventProbe::new(op, n2, n1)?;
    let den = n1 as u64;
    let ls = probe.sweep(&zs, den, None);
    let disks = zs.iter().zip(ls).map(|(&center, l)| Disk { center, radius: l as f64 / den as f64 }).collect();
    let q = default_q(c, n3, &LebOptions::default());
    let u = disk_union_measure(&DiskUnion { disks, rect: Rect::square(c) }, q);
    Ok(RegionMeasure {
        value: (4.0 * c * c - u.value - u.quadrature_error).max(0.0),
        quadrature_error: u.quadrature_error,
        resolution: u.resolution,
    })
}

/// 1 when the monotone LebSpec is at most 1/n3, else 0. Uses the real-line tower for
/// operators with real spectrum.
pub fn leb_zero_indicator(op: &OperatorHandle, n1: usize, n2: u32, n3: usize) -> Result<u8> {
    if n3 == 0 {
        return Err(Error::Domain("n3 must be positive".into()));
    }
    let v = leb_spec_wrapped(op, n1, n2, op.flags.real_spectrum())?;
    Ok(u8::from(v <= 1.0 / n3 as f64))
}

/// 2^-m times the number of open intervals (j 2^-m, (j+1) 2^-m) containing a point.
pub fn mesh_count_measure(points: &[f64], m: u32) -> f64 {
    let s = 2f64.powi(m as i32);
    let mut js: Vec<i64> = points
        .iter()
        .filter_map(|&x| {
            let t = x * s;
            (t.fract() != 0.0).then(|| t.floor() as i64)
        })
        .collect();
    js.sort_unstable();
    js.dedup();
    js.len() as f64 / s
}

/// P_n A P_n in band storage (self-adjoint operators).
pub fn section_band(op: &OperatorHandle, n: usize) -> Result<BandHermitian<Complex64>> {
    op.require_self_adjoint()?;
    let s = Section::new(op, n)?;
    let kd = s.cols.iter().enumerate().flat_map(|(j, c)| c.iter().map(move |&(i, _)| i.saturating_sub(j))).max().unwrap_or(0);
    let mut b = BandHermitian::zeros(n, kd);
    for (j, col) in s.cols.iter().enumerate() {
        for &(i, v) in col {
            if i >= j {
                *b.lower_mut(i, j) = v;
            }
        }
    }
    Ok(b)
}

/// mesh_count_measure of the eigenvalues of P_n A P_n, from Sturm counts at the mesh
/// points (no eigenvalues are computed).
pub fn finite_section_mesh_count(op: &OperatorHandle, n: usize, m: u32) -> Result<f64> {
    let b = section_band(op, n)?;
    let c = op.norm_bound.unwrap_or_else(|| b.max_abs() * (2 * b.kd() + 1) as f64) + 1.0;
    let s = 2f64.powi(m as i32);
    let k = (c * s).ceil() as i64;
    let ts: Vec<i64> = (-k..=k).collect();
    let counts = par::map(&ts, |&j| b.count_below(j as f64 / s));
    let hits = counts.windows(2).filter(|w| w[1] > w[0]).count();
    Ok(hits as f64 / s)
}

/// Real-line LebSpec restricted to (−∞, x] for each x, sharing one F sweep. Returns
/// (x, value) pairs; the last value for x ≥ C equals [`leb_spec_real`].
pub fn cumulative_measure(op: &OperatorHandle, xs: &[f64], n1: usize, n2: u32) -> Result<Vec<f64>> {
    cumulative_measure_with(op, xs, n1, n2, &LebOptions::default())
}

/// [`cumulative_measure`] with explicit options; a smaller `half_width` restricts the
/// sweep to the part of the line being plotted.
pub fn cumulative_measure_with(op: &OperatorHandle, xs: &[f64], n1: usize, n2: u32, opts: &LebOptions) -> Result<Vec<f64>> {
    op.require_self_adjoint()?;
    check_indices(n1, n2)?;
    let s = FSweep::new(op, n1, n2, true, opts)?;
    let merged = merge_intervals(&s.real_intervals(n2), -s.c, s.c);
    Ok(xs
        .iter()
        .map(|&x| {
            let top = x.min(s.c);
            if top <= -s.c {
                return 0.0;
            }
            let covered: f64 = merged.iter().map(|&(a, b)| (b.min(top) - a).max(0.0)).sum();
            (top + s.c - covered).max(0.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{diagonal, DiagonalSequence};
    use std::f64::consts::PI;

    fn disk(x: f64, y: f64, r: f64) -> Disk {
        Disk { center: Complex64::new(x, y), radius: r }
    }

    #[test]
    fn unit_disk_area() {
        let d = DiskUnion { disks: vec![disk(0.0, 0.0, 1.0)], rect: Rect::square(2.0) };
        let m = disk_union_measure(&d, 1024);
        assert!((m.value - PI).abs() <= m.quadrature_error);
        assert!(m.quadrature_error < 0.05);
    }

    #[test]
    fn trivial_unions() {
        let empty = DiskUnion { disks: vec![], rect: Rect::square(1.0) };
        assert_eq!(disk_union_measure(&empty, 64).value, 0.0);
        let one = DiskUnion { disks: vec![disk(0.1, 0.2, 0.5)], rect: Rect::square(1.0) };
        let two = DiskUnion { disks: vec![disk(0.1, 0.2, 0.5); 2], rect: Rect::square(1.0) };
        assert_eq!(disk_union_measure(&one, 97), disk_union_measure(&two, 97));
        let flat = DiskUnion { disks: vec![disk(0.0, 0.0, 1.0)], rect: Rect { x0: 0.0, x1: 0.0, y0: -1.0, y1: 1.0 } };
        assert_eq!(disk_union_measure(&flat, 8).value, 0.0);
    }

    #[test]
    fn mesh_count_examples() {
        assert_eq!(mesh_count_measure(&[0.1], 3), 0.125);
        assert_eq!(mesh_count_measure(&[0.1, 0.9], 1), 1.0);
        assert_eq!(mesh_count_measure(&[0.5], 1), 0.0);
    }

    #[test]
    fn pseudo_zero_disk() {
        let a = diagonal(DiagonalSequence::Constant(0.0));
        let v = leb_pseudo_spec(&a, 32, 0.5).unwrap().value;
        assert!(v <= PI / 4.0 && v > PI / 4.0 - 0.15, "{v}");
        let r = leb_pseudo_spec_real(&a, 32, 0.5).unwrap();
        assert!(r <= 1.0 && r > 0.9);
    }

    #[test]
    fn dense_unit_interval() {
        let a = diagonal(DiagonalSequence::VanDerCorput { a: 0.0, b: 1.0 });
        let v = leb_spec_real(&a, 256, 5).unwrap();
        assert!((v - 1.0).abs() < 0.1, "{v}");
        let cum = cumulative_measure(&a, &[-1.0, 0.5, 5.0], 256, 5).unwrap();
        assert_eq!(cum[0], 0.0);
        assert!((cum[1] - 0.5).abs() < 0.1);
        assert_eq!(cum[2], v);
        assert_eq!(leb_zero_indicator(&a, 64, 4, 2).unwrap(), 0);
    }

    #[test]
    fn point_spectrum_measure_zero() {
        let a = diagonal(DiagonalSequence::Constant(0.0));
        assert!(leb_spec(&a, 16, 4).unwrap().value < 0.05);
        assert!(leb_spec_real(&a, 16, 4).unwrap() < 1e-12);
        assert_eq!(leb_zero_indicator(&a, 16, 3, 4).unwrap(), 1);
        assert_eq!(leb_spec3(&a, 8, 0, 2).unwrap().value, 0.0);
    }
}
