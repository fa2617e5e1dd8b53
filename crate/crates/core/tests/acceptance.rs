//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! The whole suite runs twice, on rayon pools of 1 and 8 workers, and the recorded
//! outputs of the two runs must match byte for byte. Criteria listed in `KNOWN_RED` are
//! reported but do not fail the process; everything else must pass.

use std::f64::consts::E;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use speclab::fractal::{box_dim, fit_line, haus_dim_with, mesh_counts, sausage_dimension_fit, sausage_measure, windowed_slopes};
use speclab::linalg::{hermitian_eigs, ldlt_inertia, Matrix};
use speclab::measure::{cumulative_measure_with, finite_section_mesh_count, leb_pseudo_spec_real, leb_spec_real, LebOptions};
use speclab::models::*;
use speclab::operators::{diagonal, pollution_block, pollution_sum, DiagonalSequence, Region, Tail};
use speclab::resolvent::dist_spec;
use speclab::spectra::{capacity, comp_spec, pollution_indicator};
use speclab::towers_demo::{array_tower_eval, EventuallyConstantArray, Predicate};
use speclab::Complex64;

/// Criteria that are not reached at the pinned parameters (see README).
const KNOWN_RED: &[usize] = &[6];

struct Outcome {
    pass: bool,
    detail: String,
    /// Everything the criterion computed, for the determinism comparison.
    output: String,
}

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_hermitian(r: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Complex64>> {
    let mut h = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        h[i][i] = c(r.gen_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let v = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
            h[i][j] = v;
            h[j][i] = v.conj();
        }
    }
    h
}

fn dense(h: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let n = h.len();
    DMatrix::from_fn(n, n, |i, j| h[i][j])
}

fn to_matrix(h: &[Vec<Complex64>]) -> Matrix {
    let n = h.len();
    Matrix::from_fn(n, n, |i, j| h[i][j])
}

fn c1_inertia() -> Outcome {
    let mut r = rng(1);
    let (mut agree, mut total) = (0usize, 0usize);
    let mut out = String::new();
    while total < 10_000 {
        let n = r.gen_range(1..=8);
        let h = random_hermitian(&mut r, n);
        let ev = dense(&h).symmetric_eigenvalues();
        if ev.iter().any(|x| x.abs() <= 1e-8) {
            continue;
        }
        total += 1;
        let neg = ev.iter().filter(|&&x| x < 0.0).count();
        let got = ldlt_inertia(&to_matrix(&h)).unwrap();
        if got.n_neg == neg && got.n_pos == n - neg && got.n_zero == 0 {
            agree += 1;
        }
        write!(out, "{},{},{};", got.n_neg, got.n_zero, got.n_pos).unwrap();
    }
    Outcome { pass: agree == total, detail: format!("{agree}/{total} agree"), output: out }
}

/// Characteristic polynomial (monic, ascending) by Faddeev–LeVerrier.
fn char_poly(a: &DMatrix<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut coef = vec![c(0.0, 0.0); n + 1];
    coef[n] = c(1.0, 0.0);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + &id * coef[n - k + 1];
        coef[n - k] = -(a * &m).trace() / k as f64;
    }
    coef.iter().map(|z| z.re).collect()
}

/// Real roots of a monic polynomial from its companion matrix, Newton-polished.
fn companion_roots(coef: &[f64]) -> Vec<f64> {
    let n = coef.len() - 1;
    let comp = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -coef[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<f64> = comp
        .complex_eigenvalues()
        .iter()
        .map(|z| {
            let mut x = z.re;
            for _ in 0..4 {
                let (mut p, mut dp) = (0.0, 0.0);
                for &a in coef.iter().rev() {
                    dp = dp * x + p;
                    p = p * x + a;
                }
                if dp.abs() > 1e-6 {
                    x -= p / dp;
                }
            }
            x
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

fn c2_bisection() -> Outcome {
    let eps = 1e-6;
    let mut r = rng(2);
    let mut worst = 0.0f64;
    let mut out = String::new();
    for _ in 0..1000 {
        let n = r.gen_range(1..=6);
        let h = random_hermitian(&mut r, n);
        let got = hermitian_eigs(&to_matrix(&h), eps).unwrap();
        let want = companion_roots(&char_poly(&dense(&h)));
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
            write!(out, "{g:?};").unwrap();
        }
    }
    Outcome { pass: worst <= eps, detail: format!("max deviation {worst:.2e} (eps {eps:e})"), output: out }
}

fn c3_pollution_blocks() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let k = r.gen_range(1..=8);
        let z: Vec<f64> = (0..k).map(|_| r.gen_range(-1.0..=1.0)).collect();
        let b = pollution_block(&z).unwrap();
        let m = DMatrix::from_fn(2 * k, 2 * k, |i, j| b.get(i, j));
        for e in m.symmetric_eigenvalues().iter() {
            worst = worst.max((e.abs() - 1.0).abs());
        }
    }
    Outcome { pass: worst <= 1e-10, detail: format!("max | |λ| − 1 | = {worst:.2e}"), output: format!("{worst:?}") }
}

fn random_values(r: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect()
}

fn c4_dist_spec() -> Outcome {
    let n = 16;
    let mut r = rng(4);
    let (mut bad, mut total) = (0usize, 0usize);
    let mut out = String::new();
    for _ in 0..100 {
        let len = r.gen_range(1..=24);
        let values = random_values(&mut r, len);
        let op = diagonal(DiagonalSequence::Values { values: values.clone(), tail: Tail::Zero });
        let section: Vec<Complex64> = (0..n).map(|k| values.get(k).copied().unwrap_or(c(0.0, 0.0))).collect();
        for _ in 0..1000 {
            let z = c(r.gen_range(-1.5..1.5), r.gen_range(-1.5..1.5));
            let d = section.iter().map(|v| (v - z).norm()).fold(f64::INFINITY, f64::min);
            let want = (n as f64 * d).ceil().max(1.0) / n as f64;
            let got = dist_spec(&op, n, n + 1, z).unwrap();
            total += 1;
            if got != want {
                bad += 1;
            }
            write!(out, "{got:?};").unwrap();
        }
    }
    Outcome { pass: bad == 0, detail: format!("{}/{total} exact", total - bad), output: out }
}

fn c5_comp_spec() -> Outcome {
    let mut r = rng(5);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut out = String::new();
    let mut runs = 0;
    // Complex diagonals need a two-dimensional grid, so the largest index uses real ones.
    for (n, complex) in [(50, true), (200, true), (50, false), (200, false), (800, false)] {
        let reps = if complex && n > 50 { 2 } else { 4 };
        for _ in 0..reps {
            let len = r.gen_range(1..=12);
            let mut values = random_values(&mut r, len);
            if !complex {
                values.iter_mut().for_each(|v| v.im = 0.0);
            }
            let op = diagonal(DiagonalSequence::Values { values: values.clone(), tail: Tail::Zero });
            let mut spec = values.clone();
            spec.push(c(0.0, 0.0));
            let est = comp_spec(&op, n).unwrap();
            for z in &est.points {
                let d = spec.iter().map(|v| (v - z).norm()).fold(f64::INFINITY, f64::min);
                worst_excess = worst_excess.max(d - est.error);
            }
            runs += 1;
            write!(out, "{:?}|{:?};", est.error, est.points).unwrap();
        }
    }
    Outcome {
        pass: worst_excess <= 0.0,
        detail: format!("{runs} runs, max dist − E = {worst_excess:.3e}"),
        output: out,
    }
}

fn am(lambda: f64) -> speclab::OperatorHandle {
    almost_mathieu(&AlmostMathieuSpec { lambda, alpha: Alpha::Golden, nu_over_pi: 0.0 }).unwrap()
}

fn c6_measure_law() -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    let mut out = String::new();
    for lam in [1.0, 0.75, 0.5] {
        let target = 4.0 * (1.0f64 - lam).abs();
        let v = leb_spec_real(&am(lam), 2000, 6).unwrap();
        pass &= (v - target).abs() <= 0.15;
        write!(detail, "λ={lam}: {v:.4} vs {target}; ").unwrap();
        write!(out, "{v:?};").unwrap();
    }
    // Same tower one step further along n1, for reference.
    detail.push_str("n1=4001:");
    for lam in [1.0, 0.5] {
        let v = leb_spec_real(&am(lam), 4001, 6).unwrap();
        write!(detail, " λ={lam}: {v:.4}").unwrap();
        write!(out, "{v:?};").unwrap();
    }
    Outcome { pass, detail, output: out }
}

fn c7_pseudo_monotone() -> Outcome {
    let op = am(1.0);
    let base = leb_spec_real(&op, 2000, 6).unwrap();
    let vals: Vec<f64> = [0.4, 0.2, 0.1, 0.05].iter().map(|&e| leb_pseudo_spec_real(&op, 1001, e).unwrap()).collect();
    let pass = vals.windows(2).all(|w| w[0] > w[1]) && vals.iter().all(|&v| v > base);
    Outcome { pass, detail: format!("{vals:.4?} > leb_spec {base:.4}"), output: format!("{vals:?}{base:?}") }
}

fn c8_mesh_overestimate() -> Outcome {
    let op = am(1.0);
    let mesh = finite_section_mesh_count(&op, 2000, 7).unwrap();
    let leb = leb_spec_real(&op, 2000, 6).unwrap();
    Outcome { pass: mesh >= leb, detail: format!("mesh {mesh:.4} ≥ leb {leb:.4}"), output: format!("{mesh:?}{leb:?}") }
}

fn c9_cantor() -> Outcome {
    let op = cantor_diagonal(12).unwrap();
    let want = 2f64.ln() / 3f64.ln();
    let t = Instant::now();
    let b = box_dim(&op, 8, 8).unwrap().value;
    let tb = t.elapsed();
    let t = Instant::now();
    let h = haus_dim_with(&op, 8192, 11, 4, 1.0).unwrap().value;
    let th = t.elapsed();
    let limit = Duration::from_secs(120);
    let pass = (b - want).abs() <= 0.1 && (h - want).abs() <= 0.1 && tb < limit && th < limit;
    Outcome {
        pass,
        detail: format!("box {b:.4} ({tb:.1?}), haus {h:.4} ({th:.1?}), target {want:.4}"),
        output: format!("{b:?}{h:?}"),
    }
}

fn coprime(p: u64, q: u64) -> bool {
    num_integer::gcd(p, q) == 1
}

fn c10_chambers() -> Outcome {
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for q in 1..=8u64 {
        for p in (0..q).filter(|&p| coprime(p, q)) {
            for lam in [0.5, 0.75, 1.0] {
                let a = am_union_spectrum(p, q, lam).unwrap();
                let b = am_union_sampled(p, q, lam, 64);
                worst = worst.max(a.hausdorff(&b));
                pairs += 1;
            }
        }
    }
    Outcome { pass: worst <= 1e-8, detail: format!("{pairs} cases, max edge gap {worst:.2e}"), output: format!("{worst:?}") }
}

fn golden_convergents(max_q: u64) -> Vec<(u64, u64)> {
    continued_fraction_convergents(&golden_cf(40), max_q).unwrap()
}

fn c11_last_bounds() -> Outcome {
    let conv = golden_convergents(34);
    let mut out = String::new();
    let mut pass = true;
    for &(p, q) in &conv {
        pass &= last_bounds_check(p, q).unwrap();
        let m = am_union_spectrum(p, q, 1.0).unwrap().measure();
        let qf = q as f64;
        pass &= 2.0 * (5f64.sqrt() + 1.0) / qf < m && m < 8.0 * E / qf;
        write!(out, "{m:?};").unwrap();
    }
    Outcome { pass, detail: format!("{} convergents up to q = 34", conv.len()), output: out }
}

fn c12_holder() -> Outcome {
    let conv = golden_convergents(34);
    let mut worst = 0.0f64;
    let mut out = String::new();
    for w in conv.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = am_union_spectrum(a.0, a.1, 1.0).unwrap().hausdorff(&am_union_spectrum(b.0, b.1, 1.0).unwrap());
        let da = (a.0 as f64 / a.1 as f64 - b.0 as f64 / b.1 as f64).abs();
        worst = worst.max(d / (6.0 * 2f64.sqrt() * da.sqrt()));
        write!(out, "{d:?};").unwrap();
    }
    Outcome { pass: worst < 1.0, detail: format!("max d_H / bound = {worst:.3}"), output: out }
}

fn slope_variance(data: &[(f64, f64)], w: usize) -> (f64, Vec<f64>) {
    let sl = windowed_slopes(data, w);
    let mean = sl.iter().sum::<f64>() / sl.len() as f64;
    (sl.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / sl.len() as f64, sl)
}

fn sausage_data(bands: &[(f64, f64)], start: f64, step: f64, count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|k| {
            let d = 10f64.powf(start - step * k as f64);
            (d, sausage_measure(bands, d))
        })
        .collect()
}

fn c13_sausage() -> Outcome {
    let &(p, q) = golden_convergents(1000).last().unwrap();
    let golden = am_union_spectrum(p, q, 1.0).unwrap();
    // δ from 1e-2 down to 1e-4.
    let fit = sausage_dimension_fit(&sausage_data(&golden.bands, -2.0, 0.1, 21)).unwrap();
    let (lp, lq) = liouville_rational(3, 3).unwrap();
    let liou = am_union_spectrum(lp, lq, 1.0).unwrap();
    let (var_l, sl) = slope_variance(&sausage_data(&liou.bands, -0.5, 0.05, 61), 8);
    let (var_g, _) = slope_variance(&sausage_data(&golden.bands, -0.5, 0.05, 61), 8);
    let monotone = sl.windows(2).all(|w| w[0] <= w[1]) || sl.windows(2).all(|w| w[0] >= w[1]);
    let pass = (0.40..=0.60).contains(&fit.dimension) && var_l > 0.002 && !monotone;
    Outcome {
        pass,
        detail: format!(
            "{p}/{q}: dim {:.4}; Liouville {lp}/{lq}: slope variance {var_l:.4} (golden {var_g:.6})",
            fit.dimension
        ),
        output: format!("{:?}{var_l:?}{var_g:?}", fit.dimension),
    }
}

fn c14_penrose() -> Outcome {
    let t = Instant::now();
    let (op, g) = penrose_laplacian(6).unwrap();
    let n1 = g.vertices.len();
    let opts = LebOptions { half_width: Some(0.75), ..Default::default() };
    let cm = cumulative_measure_with(&op, &[-0.5, 0.5], n1, 8, &opts).unwrap();
    let flat = cm[1] - cm[0];

    let mut ev: Vec<f64> = penrose_spectrum(&g).into_iter().filter(|&x| x >= -3.0).collect();
    ev.sort_by(f64::total_cmp);
    let mut distinct = ev.clone();
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    let counts = mesh_counts(&ev, &(0..=12).collect::<Vec<_>>());
    // Only scales that still resolve the point set.
    let resolved: Vec<(f64, f64)> = counts
        .iter()
        .take_while(|x| 2 * x.1 < distinct.len())
        .map(|x| (x.0 as f64, (x.1 as f64).log2()))
        .collect();
    let slopes: Vec<f64> = resolved
        .windows(4)
        .map(|w| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = w.iter().copied().unzip();
            fit_line(&xs, &ys).0
        })
        .collect();
    let window = slopes.iter().any(|s| (0.6..=0.9).contains(s));
    let elapsed = t.elapsed();
    Outcome {
        pass: n1 >= 1000 && flat < 0.05 && window && elapsed < Duration::from_secs(1200),
        detail: format!("{n1} vertices, increment on [−0.5, 0.5] {flat:.4}, window slopes {slopes:.2?} ({elapsed:.1?})"),
        output: format!("{cm:?}{slopes:?}"),
    }
}

fn c15_capacity() -> Outcome {
    let fj = capacity(&free_jacobi(), 200, 40, 80).unwrap();
    let nonincreasing = fj.curve.windows(2).all(|w| w[1] <= w[0]);
    let ps = capacity(&pollution_sum(), 200, 40, 80).unwrap();
    let pass = nonincreasing && (fj.value - 1.0).abs() <= 0.15 && ps.value < 0.1;
    Outcome {
        pass,
        detail: format!("free Jacobi {:.4} (nonincreasing: {nonincreasing}), pollution {:.4}", fj.value, ps.value),
        output: format!("{:?}{:?}", fj.curve, ps.curve),
    }
}

fn c16_pollution() -> Outcome {
    let u = [Region::Interval { a: -0.5, b: 0.5 }];
    let dense01 = diagonal(DiagonalSequence::VanDerCorput { a: 0.0, b: 1.0 });
    let mut polluted = Vec::new();
    let mut clean = Vec::new();
    for n2 in [16, 32, 64] {
        polluted.push(pollution_indicator(&pollution_sum(), &u, 4, n2, 4 * n2).unwrap().indicator);
        clean.push(pollution_indicator(&dense01, &u, 4, n2, 4 * n2).unwrap().indicator);
    }
    let pass = polluted.iter().all(|&x| x == 1) && clean.iter().all(|&x| x == 0);
    Outcome { pass, detail: format!("interleave {polluted:?}, dense diagonal {clean:?}"), output: format!("{polluted:?}{clean:?}") }
}

fn c17_towers() -> Outcome {
    let (mut ok, mut total) = (0, 0);
    for seed in 0..500 {
        for k in [2, 3] {
            let a = EventuallyConstantArray::random(k, 6, seed);
            let mut n = vec![200, 30, 12];
            n.extend(std::iter::repeat(12).take(k - 2));
            for r in [Predicate::P, Predicate::Q] {
                total += 1;
                if (array_tower_eval(&a, r, &n).unwrap() == 1) == a.truth(r) {
                    ok += 1;
                }
            }
        }
    }
    Outcome { pass: ok == total, detail: format!("{ok}/{total} match"), output: format!("{ok}") }
}

type Criterion = (usize, &'static str, fn() -> Outcome, Option<u64>);

const CRITERIA: &[Criterion] = &[
    (1, "inertia oracle", c1_inertia, Some(10)),
    (2, "eigenvalue bisection", c2_bisection, Some(30)),
    (3, "pollution blocks", c3_pollution_blocks, None),
    (4, "DistSpec diagonal oracle", c4_dist_spec, Some(20)),
    (5, "spectrum error control", c5_comp_spec, None),
    (6, "Almost Mathieu measure law", c6_measure_law, Some(600)),
    (7, "pseudospectrum measure monotone", c7_pseudo_monotone, Some(300)),
    (8, "mesh count overestimates", c8_mesh_overestimate, None),
    (9, "Cantor dimensions", c9_cantor, None),
    (10, "phase union vs sampling", c10_chambers, None),
    (11, "band measure bounds", c11_last_bounds, None),
    (12, "Hölder continuity", c12_holder, None),
    (13, "sausage dimension fit", c13_sausage, None),
    (14, "Penrose Laplacian", c14_penrose, Some(1200)),
    (15, "capacity", c15_capacity, None),
    (16, "pollution indicator", c16_pollution, None),
    (17, "towers demo", c17_towers, None),
];

fn run_suite(workers: usize, print: bool) -> Vec<(bool, String)> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
    pool.install(|| {
        CRITERIA
            .iter()
            .map(|&(id, name, f, limit)| {
                let t = Instant::now();
                let o = f();
                let dt = t.elapsed();
                let in_time = limit.is_none_or(|s| dt <= Duration::from_secs(s));
                let pass = o.pass && in_time;
                if print {
                    let tag = if pass { "PASS" } else { "FAIL" };
                    println!("criterion {id:2} {tag} {name}: {} [{dt:.1?}]", o.detail);
                }
                (pass, o.output)
            })
            .collect()
    })
}

fn main() {
    // Plain `cargo test` invocations with a name filter should not trigger the full run.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let eight = run_suite(8, true);
    let one = run_suite(1, false);
    let diverged: Vec<usize> = eight
        .iter()
        .zip(&one)
        .zip(CRITERIA)
        .filter(|((a, b), _)| a.1 != b.1)
        .map(|(_, c)| c.0)
        .collect();
    let det = diverged.is_empty();
    println!(
        "criterion 18 {} determinism: 1 vs 8 workers {}",
        if det { "PASS" } else { "FAIL" },
        if det { "byte-identical".to_string() } else { format!("differ on {diverged:?}") }
    );

    let mut unexpected: Vec<usize> = eight
        .iter()
        .zip(CRITERIA)
        .filter(|(r, c)| !r.0 && !KNOWN_RED.contains(&c.0))
        .map(|(_, c)| c.0)
        .collect();
    if !det {
        unexpected.push(18);
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria pass except known-red {KNOWN_RED:?}");
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
