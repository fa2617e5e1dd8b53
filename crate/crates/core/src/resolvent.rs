//! Smallest-singular-value proxies for ‖R(z,A)‖⁻¹.
//!
//! For B = P_m(A − zI)P_n and C = P_m(A* − z̄I)P_n the Grams expand as
//!
//! ```text
//! S(z) = B*B = G  − z T₀* − z̄ T₀ + |z|² I,   G  = P_n A* P_m A P_n
//! T(z) = C*C = G' − z T₀* − z̄ T₀ + |z|² I,   G' = P_n A P_m A* P_n
//! ```
//!
//! with T₀ = P_n A P_n. [`ResolventProbe`] precomputes G, G' and T₀ once per (n, m) in
//! band storage, so each definiteness test at a new z costs one banded Cholesky.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{band_cholesky_in_place, PIVOT_TOL};
use crate::operators::{OperatorHandle, ResolventControl, MAX_PRECISION};
use crate::par;

/// Warm-start chunk length used by grid sweeps. Fixed so results never depend on the
/// number of workers.
pub const SWEEP_CHUNK: usize = 64;

/// Oracle precision used for an n-column, m-row window.
pub fn window_precision(n: usize, m: usize) -> u32 {
    let x = (n as f64).powi(2) * m as f64;
    ((x.log2().ceil() as i64 + 4).clamp(0, MAX_PRECISION as i64)) as u32
}

/// Precomputed Gram data for γ_{n,m}(z; A).
#[derive(Clone, Debug)]
pub struct ResolventProbe {
    n: usize,
    m: usize,
    kd: usize,
    /// Lower band of G: (j + r, j) at j·(kd+1) + r.
    g: Vec<Complex64>,
    /// Lower band of G'; absent when A is self-adjoint (then T = S).
    gp: Option<Vec<Complex64>>,
    /// T₀(j + r, j).
    t_low: Vec<Complex64>,
    /// T₀(j, j + r), diagonal included.
    t_up: Vec<Complex64>,
    real: bool,
    scale: f64,
}

impl ResolventProbe {
    /// Probe for the n-column, m-row window of A (m ≥ n).
    pub fn new(op: &OperatorHandle, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m < n {
            return Err(Error::Domain(format!("need 1 ≤ n ≤ m, got n = {n}, m = {m}")));
        }
        let k = window_precision(n, m);
        let clip = |j: usize| -> (usize, usize) {
            match op.window(j) {
                Some((lo, hi)) => (lo.max(1), hi.min(m)),
                None => (1, m),
            }
        };
        // Column j of P_m A P_n and row i of P_n A P_m, as sparse lists.
        let cols: Vec<Vec<(usize, Complex64)>> = par::map_range(n, |j0| {
            let (lo, hi) = clip(j0 + 1);
            (lo..=hi)
                .filter_map(|i| match op.entry(i, j0 + 1, k) {
                    Ok(v) if v == Complex64::new(0.0, 0.0) => None,
                    r => Some(r.map(|v| (i, v))),
                })
                .collect::<Result<Vec<_>>>()
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let sa = op.flags.self_adjoint;
        let rows: Vec<Vec<(usize, Complex64)>> = if sa {
            Vec::new()
        } else {
            par::map_range(n, |i0| {
                let (lo, hi) = clip(i0 + 1);
                (lo..=hi)
                    .filter_map(|j| match op.entry(i0 + 1, j, k) {
                        Ok(v) if v == Complex64::new(0.0, 0.0) => None,
                        r => Some(r.map(|v| (j, v))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .into_iter()
            .collect::<Result<_>>()?
        };
        let real = cols.iter().chain(rows.iter()).flatten().all(|(_, v)| v.im == 0.0);

        // Transpose columns into rows of P_m A P_n: by_row[k] = [(j, A_kj)].
        let mut by_row: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); m];
        for (j0, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                by_row[i - 1].push((j0, v));
            }
        }
        // Columns of P_n A P_m: by_col[k] = [(i, A_ik)].
        let mut by_col: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); if sa { 0 } else { m }];
        for (i0, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                by_col[j - 1].push((i0, v));
            }
        }
        let spread = |l: &Vec<(usize, Complex64)>| match (l.first(), l.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0,
        };
        let mut kd = by_row.iter().map(spread).max().unwrap_or(0);
        kd = kd.max(by_col.iter().map(spread).max().unwrap_or(0));
        for (j0, col) in cols.iter().enumerate() {
            for &(i, _) in col {
                if i <= n {
                    kd = kd.max((i - 1).abs_diff(j0));
                }
            }
        }
        kd = kd.min(n - 1);
        let w1 = kd + 1;
        let mut g = vec![Complex64::new(0.0, 0.0); n * w1];
        for row in &by_row {
            // G_ij += conj(A_ki) A_kj for i ≥ j.
            for &(i, ai) in row {
                for &(j, aj) in row {
                    if i >= j {
                        g[j * w1 + (i - j)] += ai.conj() * aj;
                    }
                }
            }
        }
        let gp = if sa {
            None
        } else {
            let mut gp = vec![Complex64::new(0.0, 0.0); n * w1];
            for col in &by_col {
                // G'_ij += A_ik conj(A_jk).
                for &(i, ai) in col {
                    for &(j, aj) in col {
                        if i >= j {
                            gp[j * w1 + (i - j)] += ai * aj.conj();
                        }
                    }
                }
            }
            Some(gp)
        };
        let mut t_low = vec![Complex64::new(0.0, 0.0); n * w1];
        let mut t_up = vec![Complex64::new(0.0, 0.0); n * w1];
        for (j0, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                let i0 = i - 1;
                if i0 >= n {
                    continue;
                }
                if i0 >= j0 {
                    t_low[j0 * w1 + (i0 - j0)] = v;
                }
                // Both stores hold the diagonal, so t_up + t_low carries 2·Re on it.
                if i0 <= j0 {
                    t_up[i0 * w1 + (j0 - i0)] = v;
                }
            }
        }
        let scale = g
            .iter()
            .chain(gp.iter().flatten())
            .chain(t_low.iter())
            .chain(t_up.iter())
            .fold(1.0f64, |s, v| s.max(v.norm()));
        Ok(ResolventProbe { n, m, kd, g, gp, t_low, t_up, real, scale })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Bandwidth of the Grams.
    pub fn kd(&self) -> usize {
        self.kd
    }

    fn gram_pd(&self, base: &[Complex64], z: Complex64, y: f64) -> bool {
        let w1 = self.kd + 1;
        let shift = z.norm_sqr() - y * y;
        let tol = PIVOT_TOL * (self.scale + z.norm_sqr()) * (1.0 + z.norm());
        if self.real && z.im == 0.0 {
            let x = z.re;
            let mut w: Vec<f64> = Vec::with_capacity(base.len());
            for idx in 0..base.len() {
                let mut v = base[idx].re - x * (self.t_up[idx].re + self.t_low[idx].re);
                if idx % w1 == 0 {
                    v += shift;
                }
                w.push(v);
            }
            band_cholesky_in_place(&mut w, self.n, self.kd, tol)
        } else {
            let zc = z.conj();
            let mut w: Vec<Complex64> = Vec::with_capacity(base.len());
            for idx in 0..base.len() {
                let mut v = base[idx] - z * self.t_up[idx].conj() - zc * self.t_low[idx];
                if idx % w1 == 0 {
                    v = Complex64::new(v.re + shift, 0.0);
                }
                w.push(v);
            }
            band_cholesky_in_place(&mut w, self.n, self.kd, tol)
        }
    }

    /// Are S(z) − y²I and T(z) − y²I both positive definite?
    pub fn both_pd(&self, z: Complex64, y: f64) -> bool {
        if !self.gram_pd(&self.g, z, y) {
            return false;
        }
        match &self.gp {
            Some(gp) => self.gram_pd(gp, z, y),
            None => true,
        }
    }

    /// Least l ≥ 1 with S − (l/den)² or T − (l/den)² not positive definite.
    ///
    /// Gallops from `hint` (or from 1) and then bisects. With `cap = Some(c)` the search
    /// stops early and returns c + 1 whenever l > c.
    pub fn least_fail(&self, z: Complex64, den: u64, hint: Option<u64>, cap: Option<u64>) -> u64 {
        let d = den as f64;
        let pass = |l: u64| self.both_pd(z, l as f64 / d);
        let cap = cap.unwrap_or(u64::MAX / 4);
        let start = hint.unwrap_or(1).clamp(1, cap.max(1));
        // Invariant after bracketing: pass(lo) and !pass(hi), or lo = 0.
        let (mut lo, mut hi);
        if pass(start) {
            lo = start;
            let mut step = 1;
            loop {
                if lo >= cap {
                    return cap + 1;
                }
                let c = (lo + step).min(cap);
                if pass(c) {
                    lo = c;
                    step *= 2;
                } else {
                    hi = c;
                    break;
                }
            }
        } else {
            hi = start;
            let mut step = 1;
            loop {
                if hi <= 1 {
                    return 1;
                }
                let c = hi.saturating_sub(step).max(1);
                if pass(c) {
                    lo = c;
                    break;
                }
                hi = c;
                step *= 2;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if pass(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// The literal while-loop: l = 1, 2, … until a test fails. Debug mode.
    pub fn least_fail_linear(&self, z: Complex64, den: u64) -> u64 {
        let mut l = 1;
        while self.both_pd(z, l as f64 / den as f64) {
            l += 1;
        }
        l
    }

    /// Quantized-from-above γ: the least multiple of 1/den at which a Gram test fails.
    pub fn dist(&self, z: Complex64, den: u64) -> f64 {
        self.least_fail(z, den, None, None) as f64 / den as f64
    }

    /// [`least_fail`](Self::least_fail) when the answer is known to lie in (lo, hi]. Falls
    /// back to galloping if either end of the bracket does not check out.
    pub fn least_fail_in(&self, z: Complex64, den: u64, lo: u64, hi: u64, cap: Option<u64>) -> u64 {
        let d = den as f64;
        let pass = |l: u64| self.both_pd(z, l as f64 / d);
        let capv = cap.unwrap_or(u64::MAX / 4);
        let mut lo = lo.min(capv);
        let mut hi = hi.max(lo + 1);
        if lo >= 1 && !pass(lo) {
            return self.least_fail(z, den, Some(lo), cap);
        }
        if hi > capv {
            if pass(capv) {
                return capv + 1;
            }
            hi = capv;
        } else if pass(hi) {
            return self.least_fail(z, den, Some(hi), cap);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if pass(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Lattice indices l(z) for many points, warm-starting within fixed chunks.
    ///
    /// γ is 1-Lipschitz in z, so a neighbour's index brackets the next one to within
    /// den·|Δz| + 1.
    pub fn sweep(&self, zs: &[Complex64], den: u64, cap: Option<u64>) -> Vec<u64> {
        let capv = cap.unwrap_or(u64::MAX / 4);
        par::map_chunks(zs, SWEEP_CHUNK, |chunk| {
            let mut prev: Option<(Complex64, u64)> = None;
            chunk
                .iter()
                .map(|&z| {
                    let l = match prev {
                        Some((pz, pl)) if pl <= capv => {
                            let w = ((pz - z).norm() * den as f64).ceil() as u64 + 1;
                            self.least_fail_in(z, den, pl.saturating_sub(w), pl.saturating_add(w), cap)
                        }
                        Some((_, pl)) => self.least_fail(z, den, Some(pl.min(capv)), cap),
                        None => self.least_fail(z, den, None, cap),
                    };
                    prev = Some((z, l));
                    l
                })
                .collect()
        })
    }
}

/// DistSpec(A, n, f(n), z) at resolution 1/n.
pub fn dist_spec(op: &OperatorHandle, n: usize, f_n: usize, z: Complex64) -> Result<f64> {
    dist_spec_res(op, n, f_n, z, n as u64)
}

/// DistSpec with an explicit lattice denominator (output is a multiple of 1/den).
pub fn dist_spec_res(op: &OperatorHandle, n: usize, f_n: usize, z: Complex64, den: u64) -> Result<f64> {
    if den == 0 {
        return Err(Error::Domain("resolution denominator must be positive".into()));
    }
    Ok(ResolventProbe::new(op, n, f_n)?.dist(z, den))
}

/// F_n(z) = DistSpec(A, n, f(n), z) + c_n for each z, sharing one probe.
pub fn f_values(op: &OperatorHandle, n: usize, zs: &[Complex64], den: u64) -> Result<Vec<f64>> {
    let d = op.require_dispersion()?;
    let probe = ResolventProbe::new(op, n, d.f(n))?;
    let c = d.c(n);
    Ok(probe.sweep(zs, den, None).into_iter().map(|l| l as f64 / den as f64 + c).collect())
}

/// min over n' ≤ n of DistSpec(A, n', f(n'), z) + c_{n'}: nonincreasing in n.
pub fn f_envelope(op: &OperatorHandle, n: usize, z: Complex64) -> Result<f64> {
    f_envelope_on(op, &(1..=n).collect::<Vec<_>>(), z)
}

/// The same running minimum, restricted to the listed truncation sizes.
pub fn f_envelope_on(op: &OperatorHandle, schedule: &[usize], z: Complex64) -> Result<f64> {
    let d = op.require_dispersion()?;
    let mut best = f64::INFINITY;
    for &n in schedule {
        let v = dist_spec(op, n, d.f(n), z)? + d.c(n);
        best = best.min(v);
    }
    Ok(best)
}

/// Dyadic schedule 1, 2, 4, …, ≤ n, always ending in n.
pub fn dyadic_schedule(n: usize) -> Vec<usize> {
    let mut s = Vec::new();
    let mut k = 1;
    while k < n {
        s.push(k);
        k *= 2;
    }
    s.push(n.max(1));
    s
}

/// γ_{n,m}(z; A) quantized from above at resolution 1/m.
pub fn gamma_nm(op: &OperatorHandle, n: usize, m: usize, z: Complex64) -> Result<f64> {
    Ok(ResolventProbe::new(op, n, m)?.dist(z, m as u64))
}

/// γ_{n,m}(z; A) quantized from below: a value in [γ − 1/m, γ].
pub fn gamma_nm_below(op: &OperatorHandle, n: usize, m: usize, z: Complex64) -> Result<f64> {
    Ok(((ResolventProbe::new(op, n, m)?.least_fail(z, m as u64, None, None) - 1) as f64) / m as f64)
}

/// CompInvg(n, y, g) = min{k/n : g(k/n) > y}.
pub fn comp_invg(n: usize, y: f64, g: &ResolventControl) -> f64 {
    let nf = n as f64;
    let ok = |k: u64| g.eval(k as f64 / nf) > y;
    let mut hi = 1u64;
    while !ok(hi) {
        hi *= 2;
        assert!(hi < u64::MAX / 4, "control function is bounded");
    }
    let mut lo = 0u64;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi as f64 / nf
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HaltAnswer {
    Yes,
    NotYet,
}

/// Does Sp(A) meet (a, b)? Yes iff DistSpec(A, n, f(n), c) + c_n < δ with c the midpoint
/// and δ the half-length. Yes is final; NotYet may change as n grows.
pub fn interval_intersect_test(op: &OperatorHandle, a: f64, b: f64, n: usize) -> Result<HaltAnswer> {
    op.require_self_adjoint()?;
    let d = op.require_dispersion()?;
    if !(a < b) {
        return Err(Error::Domain("need a < b".into()));
    }
    let c = 0.5 * (a + b);
    let delta = 0.5 * (b - a);
    let f = dist_spec(op, n, d.f(n), Complex64::new(c, 0.0))? + d.c(n);
    Ok(if f < delta { HaltAnswer::Yes } else { HaltAnswer::NotYet })
}
