use nalgebra::DMatrix;
use proptest::prelude::*;

use speclab::fractal::{box_dim, dyadic_spectrum_cover, haus_dim_with, hausdorff_premeasure, minimal_mesh_cover};
use speclab::linalg::{hermitian_eigs, ldlt_inertia, op_norm_upper, Matrix};
use speclab::measure::{
    cumulative_measure_with, disk_union_measure, leb_pseudo_spec, leb_spec_real_with, Disk, DiskUnion, LebOptions, Rect,
};
use speclab::models::{cantor_diagonal, free_jacobi, penrose_laplacian, AlmostMathieuSpec, Alpha};
use speclab::operators::{diagonal, hs_control, pollution_block, pollution_sum, shift, DiagonalSequence, ShiftDirection, Tail};
use speclab::resolvent::{dist_spec, f_envelope, gamma_nm};
use speclab::spectra::{capacity, numerical_range_sample, pseudo_spec, spec_radius, RadiusMode};
use speclab::towers_demo::{array_tower_eval, EventuallyConstantArray, Predicate};
use speclab::{Complex64, OperatorHandle};

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

fn hermitian(n: usize) -> impl Strategy<Value = Vec<Vec<Complex64>>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |v| {
        let mut h = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            h[i][i] = c(v[i * n + i].0, 0.0);
            for j in i + 1..n {
                h[i][j] = c(v[i * n + j].0, v[i * n + j].1);
                h[j][i] = h[i][j].conj();
            }
        }
        h
    })
}

fn any_hermitian(max: usize) -> impl Strategy<Value = Vec<Vec<Complex64>>> {
    (1..=max).prop_flat_map(hermitian)
}

fn to_matrix(h: &[Vec<Complex64>]) -> Matrix {
    Matrix::from_fn(h.len(), h.len(), |i, j| h[i][j])
}

fn eigenvalues(h: &[Vec<Complex64>]) -> Vec<f64> {
    let n = h.len();
    let mut e: Vec<f64> = DMatrix::from_fn(n, n, |i, j| h[i][j]).symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn diag_values() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b)), 1..10)
}

fn diag_op(values: &[Complex64]) -> OperatorHandle {
    diagonal(DiagonalSequence::Values { values: values.to_vec(), tail: Tail::Zero })
}

/// d_1, …, d_n of the diagonal with zero tail.
fn section(values: &[Complex64], n: usize) -> Vec<Complex64> {
    (0..n).map(|k| values.get(k).copied().unwrap_or(c(0.0, 0.0))).collect()
}

fn min_dist(pts: &[Complex64], z: Complex64) -> f64 {
    pts.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min)
}

fn am_golden() -> OperatorHandle {
    speclab::models::almost_mathieu(&AlmostMathieuSpec { lambda: 1.0, alpha: Alpha::Golden, nu_over_pi: 0.0 }).unwrap()
}

fn catalogue() -> Vec<OperatorHandle> {
    vec![
        shift(ShiftDirection::Unilateral),
        diag_op(&[c(0.3, 0.1), c(-0.5, 0.0)]),
        am_golden(),
        free_jacobi(),
        pollution_sum(),
        penrose_laplacian(3).unwrap().0,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dispersion_bounds_the_tail(which in 0usize..6, n in 1usize..=64) {
        let op = &catalogue()[which];
        let d = op.dispersion.clone().unwrap();
        let f = d.f(n);
        let rows = 48;
        let tail = Matrix::from_fn(rows, n, |i, j| op.entry(f + 1 + i, j + 1, 40).unwrap_or(c(0.0, 0.0)));
        let eps = 1e-9;
        prop_assert!(op_norm_upper(&tail, eps).unwrap() <= d.c(n) + 2.0 * eps);
    }

    #[test]
    fn hs_control_is_a_minorant(n_hs in 0.0..3.0f64) {
        let g = hs_control(n_hs);
        let xs: Vec<f64> = (0..1000).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 999.0)).collect();
        let mut prev = -1.0;
        for &x in &xs {
            let exact = x / 2f64.sqrt() * (-2.0 * n_hs * n_hs / (x * x)).exp();
            let v = g.eval(x);
            prop_assert!(v <= exact * (1.0 + 1e-12));
            // Strict growth wherever the value is representable.
            if v > 0.0 {
                prop_assert!(v > prev, "x = {x}");
            } else {
                prop_assert!(prev <= 0.0);
            }
            prev = v;
        }
    }

    #[test]
    fn pollution_block_spectrum(z in prop::collection::vec(-1.0..=1.0f64, 1..=8)) {
        let b = pollution_block(&z).unwrap();
        let k = z.len();
        let e = eigenvalues(&(0..2 * k).map(|i| (0..2 * k).map(|j| b.get(i, j)).collect()).collect::<Vec<_>>());
        for (i, x) in e.iter().enumerate() {
            let want = if i < k { -1.0 } else { 1.0 };
            prop_assert!((x - want).abs() <= 1e-10);
        }
    }

    #[test]
    fn inertia_matches_eigen_signs(h in any_hermitian(8)) {
        let e = eigenvalues(&h);
        prop_assume!(e.iter().all(|x| x.abs() > 1e-8));
        let got = ldlt_inertia(&to_matrix(&h)).unwrap();
        let neg = e.iter().filter(|&&x| x < 0.0).count();
        prop_assert_eq!((got.n_neg, got.n_zero, got.n_pos), (neg, 0, h.len() - neg));
    }

    #[test]
    fn eigs_refine_within_old_eps(h in any_hermitian(6), k in 2u32..12) {
        let eps = 2f64.powi(-(k as i32));
        let m = to_matrix(&h);
        let coarse = hermitian_eigs(&m, eps).unwrap();
        let fine = hermitian_eigs(&m, eps / 2.0).unwrap();
        for (a, b) in coarse.iter().zip(&fine) {
            prop_assert!((a - b).abs() <= eps);
        }
    }

    #[test]
    fn norm_grows_with_columns(
        rows in 1usize..6,
        cols in 2usize..6,
        seed in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 36),
        keep in 1usize..6,
    ) {
        let keep = keep.min(cols);
        let b = Matrix::from_fn(rows, cols, |i, j| c(seed[i * 6 + j].0, seed[i * 6 + j].1));
        let sub = Matrix::from_fn(rows, keep, |i, j| b.get(i, j));
        let eps = 1e-6;
        prop_assert!(op_norm_upper(&sub, eps).unwrap() <= op_norm_upper(&b, eps).unwrap() + eps);
    }

    #[test]
    fn dist_spec_bounds_diagonal_distance(values in diag_values(), n in 1usize..24, zr in -1.5..1.5f64, zi in -1.5..1.5f64) {
        let op = diag_op(&values);
        let z = c(zr, zi);
        let got = dist_spec(&op, n, n + 1, z).unwrap();
        prop_assert!(got >= min_dist(&section(&values, n), z));
    }

    #[test]
    fn dist_spec_lipschitz(
        values in diag_values(),
        n in 1usize..24,
        z in (-1.5..1.5f64, -1.5..1.5f64),
        w in (-1.5..1.5f64, -1.5..1.5f64),
    ) {
        let op = diag_op(&values);
        let (z, w) = (c(z.0, z.1), c(w.0, w.1));
        let a = dist_spec(&op, n, n + 1, z).unwrap();
        let b = dist_spec(&op, n, n + 1, w).unwrap();
        prop_assert!((a - b).abs() <= (z - w).norm() + 2.0 / n as f64 + 1e-12);
    }

    #[test]
    fn gamma_monotone_in_both_indices(n in 1usize..12, extra in 1usize..12, zr in -2.5..2.5f64, zi in -0.5..0.5f64) {
        let op = am_golden();
        let z = c(zr, zi);
        let (m1, m2) = (n + 2, n + 2 + extra);
        let a = gamma_nm(&op, n, m1, z).unwrap();
        let b = gamma_nm(&op, n, m2, z).unwrap();
        prop_assert!(b >= a - 1.0 / m1 as f64);
        let big_n = n + extra;
        let m = big_n + 2;
        let lo = gamma_nm(&op, big_n, m, z).unwrap();
        let hi = gamma_nm(&op, n, m, z).unwrap();
        prop_assert!(lo <= hi + 1.0 / m as f64);
    }

    #[test]
    fn pseudospectra_nest_and_stay_near(values in diag_values(), n in 2usize..12, e in 1u32..4) {
        let op = diag_op(&values);
        let eps = 2f64.powi(-(e as i32));
        let small = pseudo_spec(&op, n, eps / 2.0).unwrap();
        let big = pseudo_spec(&op, n, eps).unwrap();
        prop_assert!(small.iter().all(|z| big.contains(z)));
        let mut spec = values.clone();
        spec.push(c(0.0, 0.0));
        for z in &big {
            prop_assert!(min_dist(&spec, *z) <= eps + 1e-12);
        }
    }

    #[test]
    fn numerical_range_of_hermitian(h in any_hermitian(4)) {
        let eps = 0.1;
        let e = eigenvalues(&h);
        let (lo, hi) = (e[0], e[e.len() - 1]);
        let w = numerical_range_sample(&to_matrix(&h), eps).unwrap();
        for z in &w {
            prop_assert!(z.im.abs() <= eps && z.re >= lo - eps && z.re <= hi + eps);
        }
        prop_assert!(w.iter().any(|z| (z.re - lo).abs() <= eps) && w.iter().any(|z| (z.re - hi).abs() <= eps));
    }

    #[test]
    fn disk_union_quadrature_converges(
        disks in prop::collection::vec((-0.5..0.5f64, -0.5..0.5f64, 0.05..0.6f64), 1..5),
        q in 16usize..64,
    ) {
        let d = DiskUnion {
            disks: disks.iter().map(|&(x, y, r)| Disk { center: c(x, y), radius: r }).collect(),
            rect: Rect::square(1.5),
        };
        let a = disk_union_measure(&d, q);
        let b = disk_union_measure(&d, 2 * q);
        prop_assert!((a.value - b.value).abs() <= a.quadrature_error + 1e-12);
        prop_assert!(b.quadrature_error <= 0.6 * a.quadrature_error + 1e-12);
    }

    #[test]
    fn leb_pseudo_below_disk_union(values in diag_values(), n in 2usize..10, e in 2u32..4) {
        let op = diag_op(&values);
        let eps = 2f64.powi(-(e as i32));
        let got = leb_pseudo_spec(&op, n, eps).unwrap();
        let mut centers = section(&values, n);
        centers.push(c(0.0, 0.0));
        let exact = disk_union_measure(
            &DiskUnion { disks: centers.iter().map(|&z| Disk { center: z, radius: eps }).collect(), rect: Rect::square(2.0) },
            1024,
        );
        prop_assert!(got.value <= exact.value + exact.quadrature_error + got.quadrature_error);
    }

    #[test]
    fn mesh_cover_grows_with_targets(
        ivs in prop::collection::vec((-2.0..2.0f64, 0.0..0.3f64), 1..30),
        m in 0u32..8,
    ) {
        let targets: Vec<(f64, f64)> = ivs.iter().map(|&(a, w)| (a, a + w)).collect();
        let mut prev = 0;
        for k in 1..=targets.len() {
            let len = minimal_mesh_cover(&targets[..k], m).len();
            prop_assert!(len >= prev);
            prev = len;
        }
    }

    #[test]
    fn towers_settle(seed in 0u64..10_000, k in 2usize..=3) {
        let a = EventuallyConstantArray::random(k, 6, seed);
        let mut n = vec![200, 30, 12];
        n.extend(std::iter::repeat(12).take(k - 2));
        for r in [Predicate::P, Predicate::Q] {
            prop_assert_eq!(array_tower_eval(&a, r, &n).unwrap() == 1, a.truth(r));
        }
    }
}

#[test]
fn premeasure_monotonicity() {
    let op = cantor_diagonal(10).unwrap();
    let covers: Vec<_> = (6..=9).map(|n2| (n2, dyadic_spectrum_cover(&op, 2048, n2).unwrap())).collect();
    for (n2, t) in &covers {
        // Nonincreasing in d, nondecreasing in n3.
        for n3 in 1..=4.min(*n2) {
            let hs: Vec<f64> = (0..=16).map(|m| hausdorff_premeasure(t, m as f64 / 16.0, n3, *n2).unwrap()).collect();
            assert!(hs.windows(2).all(|w| w[1] <= w[0] + 1e-15), "n2 {n2} n3 {n3}: {hs:?}");
            if n3 > 1 {
                for m in 0..=16 {
                    let d = m as f64 / 16.0;
                    let a = hausdorff_premeasure(t, d, n3 - 1, *n2).unwrap();
                    let b = hausdorff_premeasure(t, d, n3, *n2).unwrap();
                    assert!(b >= a - 1e-15);
                }
            }
        }
    }
    // Nonincreasing in n2 at fixed n3.
    for d in [0.25, 0.5, 0.63, 0.75, 1.0] {
        let hs: Vec<f64> = covers.iter().map(|(n2, t)| hausdorff_premeasure(t, d, 3, *n2).unwrap()).collect();
        assert!(hs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "d {d}: {hs:?}");
    }
}

#[test]
fn hausdorff_below_box_on_cantor() {
    let op = cantor_diagonal(12).unwrap();
    let b = box_dim(&op, 8, 8).unwrap().value;
    let h = haus_dim_with(&op, 4096, 10, 4, 1.0).unwrap().value;
    assert!(h <= b + 1.0 / 16.0, "haus {h} box {b}");
}

#[test]
fn radius_and_capacity_monotone() {
    let op = diag_op(&[c(0.9, 0.0), c(-0.2, 0.0), c(0.5, 0.0)]);
    let rs: Vec<f64> = (1..=12).map(|n| spec_radius(&op, RadiusMode::NormalFiniteSection { n }).unwrap()).collect();
    assert!(rs.windows(2).all(|w| w[1] >= w[0]), "{rs:?}");
    let caps: Vec<f64> = [5, 10, 20, 40].iter().map(|&n3| capacity(&free_jacobi(), n3, 20, 40).unwrap().value).collect();
    assert!(caps.windows(2).all(|w| w[1] <= w[0]), "{caps:?}");
}

#[test]
fn cumulative_measure_ends_at_leb_spec() {
    let op = diagonal(DiagonalSequence::VanDerCorput { a: 0.0, b: 1.0 });
    let opts = LebOptions::default();
    let xs: Vec<f64> = (-4..=12).map(|k| k as f64 / 8.0).collect();
    let cm = cumulative_measure_with(&op, &xs, 64, 4, &opts).unwrap();
    assert!(cm.windows(2).all(|w| w[1] >= w[0]), "{cm:?}");
    let total = leb_spec_real_with(&op, 64, 4, &opts).unwrap();
    assert!((cm.last().unwrap() - total).abs() < 1e-12, "{cm:?} vs {total}");
}

#[test]
fn envelope_nonincreasing() {
    let op = am_golden();
    for k in 0..100 {
        let z = c(-3.0 + 0.06 * k as f64, 0.05 * ((k % 7) as f64 - 3.0));
        let vals: Vec<f64> = (1..=10).map(|n| f_envelope(&op, n, z).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]), "{z}: {vals:?}");
    }
}

#[test]
fn penrose_graph_shape() {
    let sizes: Vec<usize> = (2..=5).map(|g| penrose_laplacian(g).unwrap().1.vertices.len()).collect();
    let ratios: Vec<f64> = sizes.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    // Inflation multiplies the tile count by about φ² ≈ 2.618.
    for r in &ratios {
        assert!((2.0..3.2).contains(r), "{sizes:?}");
    }
    let (op, g) = penrose_laplacian(4).unwrap();
    let n = g.vertices.len();
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &g.edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    assert!(seen.iter().all(|&s| s));
    for i in 1..=n {
        let lo = i.saturating_sub(g.bandwidth).max(1);
        let s: Complex64 = (lo..=(i + g.bandwidth).min(n)).map(|j| op.entry(i, j, 40).unwrap()).sum();
        assert_eq!(s, c(0.0, 0.0), "row {i}");
    }
}
