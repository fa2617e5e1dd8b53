//! Operator oracles and their class metadata.
//!
//! An operator is known only through `entry(i, j, k)`, the matrix element ⟨Ae_j, e_i⟩
//! to absolute accuracy 2^-k (indices are 1-based). Closed-form oracles evaluate in
//! double precision, which meets any k ≤ [`MAX_PRECISION`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Oracle precision exponents are capped here; beyond it doubles cannot deliver more.
pub const MAX_PRECISION: u32 = 40;

/// Matrix-element access for an operator on l2(N).
pub trait EntryOracle: Send + Sync {
    /// ⟨Ae_j, e_i⟩ to within 2^-k; i, j ≥ 1.
    fn entry(&self, i: usize, j: usize, k: u32) -> Result<Complex64>;

    /// Inclusive index range outside which both column j and row j vanish, if known.
    fn window(&self, _j: usize) -> Option<(usize, usize)> {
        None
    }

    /// Dimension of a finite operator (entries beyond it are an error, not zero).
    fn stored_dim(&self) -> Option<usize> {
        None
    }
}

/// Closure-backed oracle.
pub struct FnOracle<F> {
    f: F,
    window: Option<usize>,
}

impl<F> EntryOracle for FnOracle<F>
where
    F: Fn(usize, usize) -> Complex64 + Send + Sync,
{
    fn entry(&self, i: usize, j: usize, _k: u32) -> Result<Complex64> {
        Ok((self.f)(i, j))
    }

    fn window(&self, j: usize) -> Option<(usize, usize)> {
        self.window.map(|w| (j.saturating_sub(w).max(1), j + w))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub self_adjoint: bool,
    pub normal: bool,
    /// Spectrum known to be real even though the operator may not be self-adjoint.
    pub real_spectrum_hint: bool,
}

impl Flags {
    pub fn self_adjoint() -> Self {
        Flags { self_adjoint: true, normal: true, real_spectrum_hint: true }
    }

    pub fn real_spectrum(&self) -> bool {
        self.self_adjoint || self.real_spectrum_hint
    }
}

/// The pair (f, c) with D_{f,n}(A) ≤ c(n).
#[derive(Clone)]
pub struct DispersionProfile {
    f: Arc<dyn Fn(usize) -> usize + Send + Sync>,
    c: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    band: Option<usize>,
}

impl DispersionProfile {
    pub fn new(
        f: impl Fn(usize) -> usize + Send + Sync + 'static,
        c: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        DispersionProfile { f: Arc::new(f), c: Arc::new(c), band: None }
    }

    /// f(n), never below n + 1.
    pub fn f(&self, n: usize) -> usize {
        (self.f)(n).max(n + 1)
    }

    pub fn c(&self, n: usize) -> f64 {
        (self.c)(n).max(0.0)
    }

    /// Exact bandwidth when the profile came from a band.
    pub fn band(&self) -> Option<usize> {
        self.band
    }

    /// True when every c(n) is zero, i.e. the windows are exact.
    pub fn exact(&self) -> bool {
        self.band.is_some() || (self.c)(1) == 0.0
    }
}

impl fmt::Debug for DispersionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DispersionProfile").field("band", &self.band).field("f(1)", &self.f(1)).finish()
    }
}

/// f(n) = n + max(w, 1), c ≡ 0.
pub fn dispersion_from_band(w: usize) -> DispersionProfile {
    let s = w.max(1);
    DispersionProfile { f: Arc::new(move |n| n + s), c: Arc::new(|_| 0.0), band: Some(w) }
}

/// A lower bound g for the resolvent: ‖R(z,A)‖⁻¹ ≥ g(dist(z, Sp A)).
#[derive(Clone)]
pub struct ResolventControl {
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub name: String,
}

impl ResolventControl {
    pub fn new(name: &str, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ResolventControl { g: Arc::new(g), name: name.to_string() }
    }

    /// g(x) = x, valid for normal operators.
    pub fn identity() -> Self {
        Self::new("identity", |x| x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (self.g)(x)
        }
    }
}

impl fmt::Debug for ResolventControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ResolventControl({})", self.name)
    }
}

/// Computable minorant of g(x) = (x/√2)·exp(−2N²/x²) for operators A = normal + Hilbert–Schmidt
/// with HS part of norm ≤ N.
///
/// With y = 2N²/x² and n₁ = ⌊y⌋, exp(−y) is bounded below by the chord of 3^-y between
/// n₁ and n₁+1, so g̃(x) = (x/2) / (3^n₁ + (3^(n₁+1) − 3^n₁)(y − n₁)). Evaluated in log
/// form so large y underflow cleanly to 0 instead of overflowing 3^n₁.
pub fn hs_control(n_hs: f64) -> ResolventControl {
    assert!(n_hs >= 0.0, "N must be nonnegative");
    let two_n2 = 2.0 * n_hs * n_hs;
    ResolventControl::new(&format!("hs({n_hs})"), move |x| {
        let y = two_n2 / (x * x);
        let n1 = y.floor();
        let ln = (x / 2.0).ln() - n1 * 3f64.ln() - (1.0 + 2.0 * (y - n1)).ln();
        ln.exp()
    })
}

/// Metadata-carrying operator handle. Cloning is cheap.
#[derive(Clone)]
pub struct OperatorHandle {
    oracle: Arc<dyn EntryOracle>,
    memo: Option<Arc<RwLock<HashMap<(usize, usize, u32), Complex64>>>>,
    pub flags: Flags,
    pub dispersion: Option<DispersionProfile>,
    pub control: Option<ResolventControl>,
    pub norm_bound: Option<f64>,
    pub label: String,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("label", &self.label)
            .field("flags", &self.flags)
            .field("dispersion", &self.dispersion)
            .field("control", &self.control)
            .field("norm_bound", &self.norm_bound)
            .finish()
    }
}

impl OperatorHandle {
    pub fn new(label: &str, oracle: impl EntryOracle + 'static) -> Self {
        OperatorHandle {
            oracle: Arc::new(oracle),
            memo: None,
            flags: Flags::default(),
            dispersion: None,
            control: None,
            norm_bound: None,
            label: label.to_string(),
            metadata: BTreeMap::new(),
        }
    }

    /// Operator from a closure (i, j) ↦ ⟨Ae_j, e_i⟩. Such oracles are memoized.
    pub fn from_fn(
        label: &str,
        band: Option<usize>,
        f: impl Fn(usize, usize) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        let mut h = Self::new(label, FnOracle { f, window: band });
        if let Some(w) = band {
            h.dispersion = Some(dispersion_from_band(w));
        }
        h.with_memo()
    }

    /// Cache entries by (i, j, k).
    pub fn with_memo(mut self) -> Self {
        self.memo = Some(Arc::new(RwLock::new(HashMap::new())));
        self
    }

    pub fn with_flags(mut self, flags: Flags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_dispersion(mut self, d: DispersionProfile) -> Self {
        self.dispersion = Some(d);
        self
    }

    pub fn with_control(mut self, g: ResolventControl) -> Self {
        self.control = Some(g);
        self
    }

    pub fn with_norm_bound(mut self, m: f64) -> Self {
        self.norm_bound = Some(m);
        self
    }

    pub fn with_meta(mut self, key: &str, v: serde_json::Value) -> Self {
        self.metadata.insert(key.to_string(), v);
        self
    }

    /// ⟨Ae_j, e_i⟩ to within 2^-k (k is capped at [`MAX_PRECISION`]).
    pub fn entry(&self, i: usize, j: usize, k: u32) -> Result<Complex64> {
        if i == 0 || j == 0 {
            return Err(Error::Domain("indices are 1-based".into()));
        }
        let k = k.min(MAX_PRECISION);
        if let Some(memo) = &self.memo {
            if let Some(v) = memo.read().expect("memo lock").get(&(i, j, k)) {
                return Ok(*v);
            }
            let v = self.oracle.entry(i, j, k)?;
            memo.write().expect("memo lock").insert((i, j, k), v);
            return Ok(v);
        }
        self.oracle.entry(i, j, k)
    }

    /// Index window [lo, hi] containing the support of column j and of row j.
    ///
    /// Uses the oracle's own window when it has one, otherwise an exact dispersion
    /// profile (c ≡ 0) which bounds the window by f(j).
    pub fn window(&self, j: usize) -> Option<(usize, usize)> {
        if let Some(w) = self.oracle.window(j) {
            return Some(w);
        }
        match &self.dispersion {
            Some(d) if d.band().is_some() => {
                let w = d.band().unwrap();
                Some((j.saturating_sub(w).max(1), j + w))
            }
            Some(d) if d.exact() => Some((1, d.f(j))),
            _ => None,
        }
    }

    pub fn stored_dim(&self) -> Option<usize> {
        self.oracle.stored_dim()
    }

    /// P_rows A P_cols as a dense matrix (rows r0+1..=r1, cols c0+1..=c1).
    pub fn section(&self, r0: usize, r1: usize, c0: usize, c1: usize, k: u32) -> Result<Matrix> {
        let mut m = Matrix::zeros(r1 - r0, c1 - c0);
        for j in c0..c1 {
            let (lo, hi) = self.window(j + 1).unwrap_or((1, usize::MAX));
            for i in r0.max(lo - 1)..r1.min(hi) {
                m.set(i - r0, j - c0, self.entry(i + 1, j + 1, k)?);
            }
        }
        Ok(m)
    }

    /// Square finite section P_n A P_n.
    pub fn finite_section(&self, n: usize) -> Result<Matrix> {
        self.section(0, n, 0, n, MAX_PRECISION)
    }

    pub fn require_dispersion(&self) -> Result<&DispersionProfile> {
        self.dispersion
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("operator '{}' has no dispersion profile", self.label)))
    }

    pub fn require_control(&self) -> Result<&ResolventControl> {
        self.control
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("operator '{}' has no resolvent control", self.label)))
    }

    pub fn require_self_adjoint(&self) -> Result<()> {
        if self.flags.self_adjoint {
            Ok(())
        } else {
            Err(Error::Precondition(format!("operator '{}' is not flagged self-adjoint", self.label)))
        }
    }
}

/// Radical inverse of m in base 2: 1 ↦ 1/2, 2 ↦ 1/4, 3 ↦ 3/4, …
pub fn van_der_corput(mut m: usize) -> f64 {
    let (mut x, mut w) = (0.0, 0.5);
    while m > 0 {
        if m & 1 == 1 {
            x += w;
        }
        w *= 0.5;
        m >>= 1;
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// Zero after the listed values.
    #[default]
    Zero,
    /// Repeat the listed values periodically.
    Cycle,
}

/// Diagonal entry generators d_1, d_2, …
#[derive(Clone)]
pub enum DiagonalSequence {
    Constant(f64),
    /// d_m = 1/m.
    Harmonic,
    Values { values: Vec<Complex64>, tail: Tail },
    /// d_m = a + (b − a)·vdc(m − 1), dense in [a, b].
    VanDerCorput { a: f64, b: f64 },
    Custom { f: Arc<dyn Fn(usize) -> Complex64 + Send + Sync>, sup: f64, real: bool },
}

impl DiagonalSequence {
    pub fn value(&self, m: usize) -> Complex64 {
        match self {
            DiagonalSequence::Constant(c) => Complex64::new(*c, 0.0),
            DiagonalSequence::Harmonic => Complex64::new(1.0 / m as f64, 0.0),
            DiagonalSequence::Values { values, tail } => match tail {
                _ if values.is_empty() => Complex64::new(0.0, 0.0),
                Tail::Zero => values.get(m - 1).copied().unwrap_or_default(),
                Tail::Cycle => values[(m - 1) % values.len()],
            },
            DiagonalSequence::VanDerCorput { a, b } => Complex64::new(a + (b - a) * van_der_corput(m - 1), 0.0),
            DiagonalSequence::Custom { f, .. } => f(m),
        }
    }

    fn sup(&self) -> f64 {
        match self {
            DiagonalSequence::Constant(c) => c.abs(),
            DiagonalSequence::Harmonic => 1.0,
            DiagonalSequence::Values { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.norm())),
            DiagonalSequence::VanDerCorput { a, b } => a.abs().max(b.abs()),
            DiagonalSequence::Custom { sup, .. } => *sup,
        }
    }

    fn real(&self) -> bool {
        match self {
            DiagonalSequence::Values { values, .. } => values.iter().all(|v| v.im == 0.0),
            DiagonalSequence::Custom { real, .. } => *real,
            _ => true,
        }
    }
}

struct DiagonalOracle(DiagonalSequence);

impl EntryOracle for DiagonalOracle {
    fn entry(&self, i: usize, j: usize, _k: u32) -> Result<Complex64> {
        Ok(if i == j { self.0.value(i) } else { Complex64::new(0.0, 0.0) })
    }

    fn window(&self, j: usize) -> Option<(usize, usize)> {
        Some((j, j))
    }
}

/// diag(d_1, d_2, …). Normal; self-adjoint when the entries are real.
pub fn diagonal(seq: DiagonalSequence) -> OperatorHandle {
    let real = seq.real();
    let sup = seq.sup();
    let flags = Flags { self_adjoint: real, normal: true, real_spectrum_hint: real };
    OperatorHandle::new("diagonal", DiagonalOracle(seq))
        .with_flags(flags)
        .with_dispersion(dispersion_from_band(0))
        .with_control(ResolventControl::identity())
        .with_norm_bound(sup)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftDirection {
    /// entry(i, i+1) = 1.
    Unilateral,
    /// entry(i+1, i) = 1.
    Adjoint,
}

struct ShiftOracle(ShiftDirection);

impl EntryOracle for ShiftOracle {
    fn entry(&self, i: usize, j: usize, _k: u32) -> Result<Complex64> {
        let hit = match self.0 {
            ShiftDirection::Unilateral => j == i + 1,
            ShiftDirection::Adjoint => i == j + 1,
        };
        Ok(Complex64::new(if hit { 1.0 } else { 0.0 }, 0.0))
    }

    fn window(&self, j: usize) -> Option<(usize, usize)> {
        Some((j.saturating_sub(1).max(1), j + 1))
    }
}

/// Unilateral shift (or its adjoint). Spectrum is the closed unit disk.
///
/// The shift is not normal, but ‖R(z,S)‖⁻¹ = dist(z, Sp S) holds for |z| > 1 and the
/// resolvent blows up on the disk, so g(x) = x is a valid control.
pub fn shift(dir: ShiftDirection) -> OperatorHandle {
    OperatorHandle::new("shift", ShiftOracle(dir))
        .with_dispersion(dispersion_from_band(1))
        .with_control(ResolventControl::identity())
        .with_norm_bound(1.0)
}

/// Pollution block B(z_1, …, z_k): z on the first diagonal half, −z on the second and
/// a_p = √(1 − z_p²) coupling p with k + p. Eigenvalues are ±1, each k times.
pub fn pollution_block(z: &[f64]) -> Result<Matrix> {
    if let Some(bad) = z.iter().find(|x| !(x.abs() <= 1.0)) {
        return Err(Error::Domain(format!("pollution parameter {bad} is outside [-1, 1]")));
    }
    let k = z.len();
    let mut b = Matrix::zeros(2 * k, 2 * k);
    for (p, &zp) in z.iter().enumerate() {
        let a = (1.0 - zp * zp).max(0.0).sqrt();
        b.set(p, p, Complex64::new(zp, 0.0));
        b.set(k + p, k + p, Complex64::new(-zp, 0.0));
        b.set(p, k + p, Complex64::new(a, 0.0));
        b.set(k + p, p, Complex64::new(a, 0.0));
    }
    Ok(b)
}

/// The dense test sequence z_j = −1 + 2·vdc(j): 0, −1/2, 1/2, −3/4, …
pub fn pollution_z(j: usize) -> f64 {
    -1.0 + 2.0 * van_der_corput(j)
}

struct PollutionSumOracle;

impl PollutionSumOracle {
    /// Block r ≥ 1 occupies 0-based indices r(r−1) .. r(r+1).
    fn block_of(i0: usize) -> (usize, usize) {
        let mut r = ((i0 as f64).sqrt() as usize).max(1);
        while r * (r - 1) > i0 {
            r -= 1;
        }
        while r * (r + 1) <= i0 {
            r += 1;
        }
        (r, r * (r - 1))
    }
}

impl EntryOracle for PollutionSumOracle {
    fn entry(&self, i: usize, j: usize, _k: u32) -> Result<Complex64> {
        let (ri, oi) = Self::block_of(i - 1);
        let (rj, _) = Self::block_of(j - 1);
        if ri != rj {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let r = ri;
        let (a, b) = (i - 1 - oi, j - 1 - oi);
        // Entry (a, b) of B(z_1..z_r) involves only z_p with p = min(a, b) mod r.
        let p = a.min(b) % r;
        let z = pollution_z(p + 1);
        Ok(Complex64::new(pollution_entry_single(r, p, z, a, b), 0.0))
    }

    fn window(&self, j: usize) -> Option<(usize, usize)> {
        let (r, o) = Self::block_of(j - 1);
        Some((o + 1, o + 2 * r))
    }
}

fn pollution_entry_single(k: usize, p: usize, zp: f64, a: usize, b: usize) -> f64 {
    if a == b {
        return if a < k { zp } else { -zp };
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if lo == p && hi == p + k {
        (1.0 - zp * zp).max(0.0).sqrt()
    } else {
        0.0
    }
}

/// ⊕_{r ≥ 1} B(z_1, …, z_r) with z_j = [`pollution_z`]: spectrum {−1, 1}, while finite
/// sections cut blocks in half and produce eigenvalues filling (−1, 1).
pub fn pollution_sum() -> OperatorHandle {
    let f = |n: usize| {
        let (r, o) = PollutionSumOracle::block_of(n.saturating_sub(1));
        (o + 2 * r).max(n + 1)
    };
    OperatorHandle::new("pollution_sum", PollutionSumOracle)
        .with_flags(Flags::self_adjoint())
        .with_dispersion(DispersionProfile::new(f, |_| 0.0))
        .with_control(ResolventControl::identity())
        .with_norm_bound(1.0)
}

/// Finite Hermitian or general matrix as an operator on C^n (entries beyond n are an error).
pub fn finite_matrix(label: &str, m: Matrix) -> OperatorHandle {
    struct Fin(Matrix);
    impl EntryOracle for Fin {
        fn entry(&self, i: usize, j: usize, _k: u32) -> Result<Complex64> {
            if i > self.0.rows() || j > self.0.cols() {
                return Err(Error::OutOfStoredRange { i, j });
            }
            Ok(self.0.get(i - 1, j - 1))
        }
        fn stored_dim(&self) -> Option<usize> {
            Some(self.0.rows())
        }
    }
    let n = m.rows();
    let herm = m.rows() == m.cols() && m.hermitian_defect() <= 1e-12 * m.max_abs().max(1.0);
    let frob = (0..n).flat_map(|i| (0..m.cols()).map(move |j| (i, j))).map(|(i, j)| m.get(i, j).norm_sqr()).sum::<f64>();
    let flags = if herm { Flags::self_adjoint() } else { Flags::default() };
    OperatorHandle::new(label, Fin(m)).with_flags(flags).with_norm_bound(frob.sqrt())
}

/// Banded operator read from a file (see [`parse_banded`]).
struct BandedOracle {
    w: usize,
    rows: Vec<Vec<Complex64>>,
}

impl EntryOracle for BandedOracle {
    fn entry(&self, i: usize, j: usize, _k: u32) -> Result<Complex64> {
        let n = self.rows.len();
        if i > n || j > n {
            return Err(Error::OutOfStoredRange { i, j });
        }
        let off = j as isize - i as isize + self.w as isize;
        if off < 0 || off as usize > 2 * self.w {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.rows[i - 1][off as usize])
    }

    fn window(&self, j: usize) -> Option<(usize, usize)> {
        Some((j.saturating_sub(self.w).max(1), j + self.w))
    }

    fn stored_dim(&self) -> Option<usize> {
        Some(self.rows.len())
    }
}

fn parse_scalar(tok: &str) -> Result<Complex64> {
    let bad = || Error::Parse(format!("bad entry '{tok}', expected re:im"));
    let (re, im) = tok.split_once(':').ok_or_else(bad)?;
    Ok(Complex64::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?))
}

/// Parse the banded text format: `banded <w> <n_rows>` then n_rows lines of 2w+1
/// `re:im` entries, entry t of row i holding column i − w + t.
pub fn parse_banded(text: &str) -> Result<OperatorHandle> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines.next().ok_or_else(|| Error::Parse("empty banded file".into()))?;
    let parts: Vec<&str> = head.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "banded" {
        return Err(Error::Parse(format!("bad header '{head}'")));
    }
    let w: usize = parts[1].parse().map_err(|_| Error::Parse("bad bandwidth".into()))?;
    let n: usize = parts[2].parse().map_err(|_| Error::Parse("bad row count".into()))?;
    let mut rows = Vec::with_capacity(n);
    for (r, line) in lines.enumerate() {
        let row = line.split_whitespace().map(parse_scalar).collect::<Result<Vec<_>>>()?;
        if row.len() != 2 * w + 1 {
            return Err(Error::Parse(format!("row {} has {} entries, expected {}", r + 1, row.len(), 2 * w + 1)));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::Parse(format!("expected {n} rows, found {}", rows.len())));
    }
    let oracle = BandedOracle { w, rows };
    let mut herm = true;
    let (mut rsum, mut csum) = (vec![0.0; n], vec![0.0; n]);
    for i in 1..=n {
        for j in i.saturating_sub(w).max(1)..=(i + w).min(n) {
            let a = oracle.entry(i, j, 0)?;
            let b = oracle.entry(j, i, 0)?;
            herm &= (a - b.conj()).norm() <= 1e-12;
            rsum[i - 1] += a.norm();
            csum[j - 1] += a.norm();
        }
    }
    let r1 = rsum.iter().cloned().fold(0.0, f64::max);
    let c1 = csum.iter().cloned().fold(0.0, f64::max);
    let flags = if herm { Flags::self_adjoint() } else { Flags::default() };
    let mut h = OperatorHandle::new("banded_file", oracle)
        .with_flags(flags)
        .with_dispersion(dispersion_from_band(w))
        .with_norm_bound((r1 * c1).sqrt());
    if herm {
        h = h.with_control(ResolventControl::identity());
    }
    Ok(h)
}

pub fn banded_file(path: &Path) -> Result<OperatorHandle> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_banded(&text)
}

/// How the summands' bases are merged into one basis of l2(N).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SumOrder {
    /// Concatenation when all but the last summand are finite, round-robin otherwise.
    #[default]
    Auto,
    Concat,
    Interleave,
}

struct DirectSumOracle {
    parts: Vec<OperatorHandle>,
    interleave: bool,
    /// Start offsets (0-based) of the parts under concatenation.
    offsets: Vec<usize>,
}

impl DirectSumOracle {
    /// Global 1-based index ↦ (part, local 1-based index).
    fn locate(&self, g: usize) -> (usize, usize) {
        if self.interleave {
            let r = self.parts.len();
            ((g - 1) % r, (g - 1) / r + 1)
        } else {
            let p = self.offsets.partition_point(|&o| o < g) - 1;
            (p, g - self.offsets[p])
        }
    }

    fn global(&self, p: usize, l: usize) -> usize {
        if self.interleave {
            (l - 1) * self.parts.len() + p + 1
        } else {
            self.offsets[p] + l
        }
    }
}

impl EntryOracle for DirectSumOracle {
    fn entry(&self, i: usize, j: usize, k: u32) -> Result<Complex64> {
        let (pi, li) = self.locate(i);
        let (pj, lj) = self.locate(j);
        if pi != pj {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.parts[pi].entry(li, lj, k)
    }

    fn window(&self, j: usize) -> Option<(usize, usize)> {
        let (p, l) = self.locate(j);
        let (lo, hi) = self.parts[p].window(l)?;
        let hi = match self.parts[p].stored_dim() {
            Some(d) => hi.min(d),
            None => hi,
        };
        Some((self.global(p, lo.max(1)), self.global(p, hi.max(1))))
    }

    fn stored_dim(&self) -> Option<usize> {
        if self.interleave {
            return None;
        }
        self.parts.iter().map(|p| p.stored_dim()).sum()
    }
}

/// Orthogonal direct sum of the given operators.
pub fn direct_sum(parts: Vec<OperatorHandle>, order: SumOrder) -> Result<OperatorHandle> {
    if parts.is_empty() {
        return Err(Error::Domain("direct sum of nothing".into()));
    }
    let finite_prefix = parts[..parts.len() - 1].iter().all(|p| p.stored_dim().is_some());
    let interleave = match order {
        SumOrder::Auto => !finite_prefix,
        SumOrder::Concat => {
            if !finite_prefix {
                return Err(Error::Domain("concatenation needs finite leading summands".into()));
            }
            false
        }
        SumOrder::Interleave => {
            if parts.iter().any(|p| p.stored_dim().is_some()) {
                return Err(Error::Domain("interleaving needs infinite summands".into()));
            }
            true
        }
    };
    let mut offsets = vec![0];
    for p in &parts[..parts.len() - 1] {
        offsets.push(offsets.last().unwrap() + p.stored_dim().unwrap_or(0));
    }
    let flags = Flags {
        self_adjoint: parts.iter().all(|p| p.flags.self_adjoint),
        normal: parts.iter().all(|p| p.flags.normal),
        real_spectrum_hint: parts.iter().all(|p| p.flags.real_spectrum()),
    };
    let norm = parts.iter().map(|p| p.norm_bound).try_fold(0.0f64, |m, b| b.map(|b| m.max(b)));
    let bands: Option<Vec<usize>> = parts.iter().map(|p| p.dispersion.as_ref().and_then(|d| d.band())).collect();
    let r = parts.len();
    let all_normal_control = parts.iter().all(|p| p.control.as_ref().is_some_and(|c| c.name == "identity"));
    let oracle = DirectSumOracle { parts, interleave, offsets };
    let mut h = OperatorHandle::new("direct_sum", oracle).with_flags(flags);
    if let Some(bands) = bands {
        let w = bands.into_iter().max().unwrap_or(0);
        h = h.with_dispersion(dispersion_from_band(if interleave { w * r } else { w }));
    }
    if let Some(m) = norm {
        h = h.with_norm_bound(m);
    }
    if all_normal_control {
        h = h.with_control(ResolventControl::identity());
    }
    Ok(h.with_meta("order", serde_json::json!(if interleave { "interleave" } else { "concat" })))
}

/// Region component for pollution queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Region {
    /// Open ball; `center` is [re, im] or a real number.
    Ball { center: CenterSpec, radius: f64 },
    /// Open real interval (a, b).
    Interval { a: f64, b: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CenterSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl Region {
    pub fn center(&self) -> Complex64 {
        match self {
            Region::Ball { center: CenterSpec::Real(x), .. } => Complex64::new(*x, 0.0),
            Region::Ball { center: CenterSpec::Complex([x, y]), .. } => Complex64::new(*x, *y),
            Region::Interval { a, b } => Complex64::new(0.5 * (a + b), 0.0),
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => *radius,
            Region::Interval { a, b } => 0.5 * (b - a),
        }
    }

    /// Signed distance into the region: positive inside, by how much.
    pub fn depth(&self, z: Complex64) -> f64 {
        match self {
            Region::Ball { .. } => self.radius() - (z - self.center()).norm(),
            Region::Interval { a, b } => {
                if z.im != 0.0 {
                    -z.im.abs()
                } else {
                    (z.re - a).min(b - z.re)
                }
            }
        }
    }
}

/// Operator description as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Diagonal {
        #[serde(default)]
        values: Option<Vec<f64>>,
        #[serde(default)]
        tail: Tail,
        /// "harmonic", "van_der_corput" or "cantor".
        #[serde(default)]
        sequence: Option<String>,
        #[serde(default)]
        a: Option<f64>,
        #[serde(default)]
        b: Option<f64>,
        #[serde(default)]
        depth: Option<usize>,
    },
    BandedFile { path: String },
    Shift {
        #[serde(default = "default_shift")]
        direction: ShiftDirection,
    },
    DirectSum {
        parts: Vec<ModelSpec>,
        #[serde(default)]
        order: SumOrder,
    },
    PollutionBlock { z: Vec<f64> },
    /// The infinite sum of pollution blocks.
    PollutionSum,
    FreeJacobi,
    AlmostMathieu {
        lambda: f64,
        alpha: AlphaSpec,
        #[serde(default)]
        nu_over_pi: f64,
    },
    Penrose { generations: usize },
}

fn default_shift() -> ShiftDirection {
    ShiftDirection::Unilateral
}

/// Frequency for Almost Mathieu: rational p/q, continued fraction, or the golden mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Rational { p: i64, q: i64 },
    ContinuedFraction { cf: Vec<u64> },
    Named(String),
}

/// Full description file: the model plus optional overrides and a region list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorFile {
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default)]
    pub dispersion: Option<BandOverride>,
    #[serde(default)]
    pub norm_bound: Option<f64>,
    #[serde(default)]
    pub region: Vec<Region>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandOverride {
    pub band: usize,
}

impl ModelSpec {
    /// Construct the operator. Relative paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<OperatorHandle> {
        use crate::models;
        Ok(match self {
            ModelSpec::Diagonal { values, tail, sequence, a, b, depth } => match (values, sequence.as_deref()) {
                (Some(v), None) => diagonal(DiagonalSequence::Values {
                    values: v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
                    tail: *tail,
                }),
                (None, Some("harmonic")) => diagonal(DiagonalSequence::Harmonic),
                (None, Some("van_der_corput")) => diagonal(DiagonalSequence::VanDerCorput {
                    a: a.unwrap_or(0.0),
                    b: b.unwrap_or(1.0),
                }),
                (None, Some("cantor")) => models::cantor_diagonal(depth.unwrap_or(12))?,
                (None, Some("constant")) => diagonal(DiagonalSequence::Constant(a.unwrap_or(0.0))),
                _ => return Err(Error::Parse("diagonal needs either 'values' or a known 'sequence'".into())),
            },
            ModelSpec::BandedFile { path } => banded_file(&base.join(path))?,
            ModelSpec::Shift { direction } => shift(*direction),
            ModelSpec::DirectSum { parts, order } => {
                let ops = parts.iter().map(|p| p.build(base)).collect::<Result<Vec<_>>>()?;
                direct_sum(ops, *order)?
            }
            ModelSpec::PollutionBlock { z } => finite_matrix("pollution_block", pollution_block(z)?),
            ModelSpec::PollutionSum => pollution_sum(),
            ModelSpec::FreeJacobi => models::free_jacobi(),
            ModelSpec::AlmostMathieu { lambda, alpha, nu_over_pi } => {
                let alpha = match alpha {
                    AlphaSpec::Rational { p, q } => models::Alpha::Rational { p: *p, q: *q },
                    AlphaSpec::ContinuedFraction { cf } => models::Alpha::ContinuedFraction(cf.clone()),
                    AlphaSpec::Named(s) if s == "golden" => models::Alpha::Golden,
                    AlphaSpec::Named(s) => return Err(Error::Parse(format!("unknown alpha '{s}'"))),
                };
                models::almost_mathieu(&models::AlmostMathieuSpec { lambda: *lambda, alpha, nu_over_pi: *nu_over_pi })?
            }
            ModelSpec::Penrose { generations } => models::penrose_laplacian(*generations)?.0,
        })
    }
}

impl OperatorFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn build(&self, base: &Path) -> Result<OperatorHandle> {
        let mut h = self.model.build(base)?;
        if let Some(d) = self.dispersion {
            h.dispersion = Some(dispersion_from_band(d.band));
        }
        if let Some(m) = self.norm_bound {
            h.norm_bound = Some(m);
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn diagonal_and_shift_entries() {
        let d = diagonal(DiagonalSequence::Harmonic);
        assert_eq!(d.entry(3, 3, 20).unwrap(), re(1.0 / 3.0));
        assert_eq!(d.entry(2, 3, 20).unwrap(), re(0.0));
        let s = shift(ShiftDirection::Unilateral);
        assert_eq!(s.entry(4, 5, 0).unwrap(), re(1.0));
        assert_eq!(s.entry(4, 4, 0).unwrap(), re(0.0));
        assert!(matches!(d.entry(0, 1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn band_dispersion() {
        for (w, s) in [(1, 1), (0, 1), (4, 4)] {
            let d = dispersion_from_band(w);
            assert_eq!(d.f(10), 10 + s);
            assert_eq!(d.c(10), 0.0);
        }
    }

    #[test]
    fn hs_control_examples() {
        let g0 = hs_control(0.0);
        assert!((g0.eval(3.0) - 1.5).abs() < 1e-15);
        let g1 = hs_control(1.0);
        assert!((g1.eval(2.0) - 0.5).abs() < 1e-14);
        assert!((g1.eval(1.0) - 1.0 / 18.0).abs() < 1e-14);
        assert_eq!(g1.eval(0.0), 0.0);
    }

    #[test]
    fn pollution_block_layout() {
        let b = pollution_block(&[0.0]).unwrap();
        assert_eq!(b, Matrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
        let b = pollution_block(&[1.0]).unwrap();
        assert_eq!(b, Matrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]));
        assert!(pollution_block(&[1.5]).is_err());
    }

    #[test]
    fn pollution_sum_matches_blocks() {
        let a = pollution_sum();
        // Block r = 3 sits at 0-based offset 6 with size 6.
        let z: Vec<f64> = (1..=3).map(pollution_z).collect();
        let b = pollution_block(&z).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(a.entry(7 + i, 7 + j, 30).unwrap(), b.get(i, j), "({i},{j})");
            }
        }
        assert_eq!(a.entry(6, 7, 30).unwrap(), re(0.0));
        assert_eq!(a.window(7), Some((7, 12)));
    }

    #[test]
    fn direct_sum_placement() {
        let blk = finite_matrix("b", pollution_block(&[0.0]).unwrap());
        let zero = diagonal(DiagonalSequence::Constant(0.0));
        let s = direct_sum(vec![blk, zero], SumOrder::Auto).unwrap();
        assert_eq!(s.entry(1, 2, 30).unwrap(), re(1.0));
        assert_eq!(s.entry(3, 3, 30).unwrap(), re(0.0));
        let a = diagonal(DiagonalSequence::Constant(0.0));
        let b = diagonal(DiagonalSequence::Constant(1.0));
        let s = direct_sum(vec![a, b], SumOrder::Auto).unwrap();
        assert_eq!(s.entry(1, 1, 0).unwrap(), re(0.0));
        assert_eq!(s.entry(2, 2, 0).unwrap(), re(1.0));
        assert_eq!(s.entry(1, 2, 0).unwrap(), re(0.0));
    }

    #[test]
    fn banded_file_out_of_range() {
        let text = "banded 1 3\n0:0 2:0 -1:0\n-1:0 2:0 -1:0\n-1:0 2:0 0:0\n";
        let h = parse_banded(text).unwrap();
        assert!(h.flags.self_adjoint);
        assert_eq!(h.entry(2, 1, 10).unwrap(), re(-1.0));
        assert_eq!(h.entry(1, 3, 10).unwrap(), re(0.0));
        assert_eq!(h.entry(4, 4, 10), Err(Error::OutOfStoredRange { i: 4, j: 4 }));
        assert!(parse_banded("banded 1 2\n0:0 1:0\n").is_err());
    }

    #[test]
    fn description_round_trip() {
        let f = OperatorFile::parse(
            r#"{"model":"diagonal","values":[0.5,1.0],"tail":"cycle","region":[{"a":-0.5,"b":0.5},{"center":[0,1],"radius":0.25}]}"#,
        )
        .unwrap();
        assert_eq!(f.region.len(), 2);
        let h = f.build(Path::new(".")).unwrap();
        assert_eq!(h.entry(3, 3, 10).unwrap(), re(0.5));
    }
}
