//! Arithmetic towers for the array decision problems Ξ_{k,P} and Ξ_{k,Q}.
//!
//! For a 0/1 array a_{m_1, …, m_{k−2}, i, j} (i the row, j the column):
//! P asks whether some column holds infinitely many ones, Q whether all but finitely
//! many columns do. The outer indices alternate ∃/∀, starting with ∃ when k is even.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Predicate {
    P,
    Q,
}

/// Deterministic 0/1 oracle on N^k (1-based indices).
pub trait BitArraySource: Sync {
    fn arity(&self) -> usize;
    fn bit(&self, idx: &[usize]) -> bool;
}

/// Oracle from a closure.
pub struct FnArray<F> {
    pub k: usize,
    pub f: F,
}

impl<F: Fn(&[usize]) -> bool + Sync> BitArraySource for FnArray<F> {
    fn arity(&self) -> usize {
        self.k
    }

    fn bit(&self, idx: &[usize]) -> bool {
        (self.f)(idx)
    }
}

/// Γ_{n_{k+1}, …, n_1}(a); `n` lists n_1, …, n_{k+1}.
pub fn array_tower_eval(a: &dyn BitArraySource, r: Predicate, n: &[usize]) -> Result<u8> {
    let k = a.arity();
    if k < 2 {
        return Err(Error::Domain("arity must be at least 2".into()));
    }
    if n.len() != k + 1 {
        return Err(Error::Domain(format!("arity {k} needs {} indices, got {}", k + 1, n.len())));
    }
    if n.iter().any(|&x| x == 0) {
        return Err(Error::Domain("indices must be positive".into()));
    }
    let mut prefix = Vec::with_capacity(k);
    Ok(u8::from(outer(a, r, n, k, 0, &mut prefix)))
}

/// Level t binds m_{t+1} ∈ 1..=n_{k+1−t}; max when t + k is even, product otherwise.
fn outer(a: &dyn BitArraySource, r: Predicate, n: &[usize], k: usize, t: usize, prefix: &mut Vec<usize>) -> bool {
    if t == k - 2 {
        return inner(a, r, n, prefix);
    }
    let top = n[k - t];
    let is_max = (t + k) % 2 == 0;
    for m in 1..=top {
        prefix.push(m);
        let v = outer(a, r, n, k, t + 1, prefix);
        prefix.pop();
        if is_max && v {
            return true;
        }
        if !is_max && !v {
            return false;
        }
    }
    !is_max
}

fn column_count(a: &dyn BitArraySource, prefix: &[usize], j: usize, n1: usize) -> usize {
    let mut idx = prefix.to_vec();
    idx.push(0);
    idx.push(j);
    let row = idx.len() - 2;
    (1..=n1)
        .filter(|&i| {
            idx[row] = i;
            a.bit(&idx)
        })
        .count()
}

fn inner(a: &dyn BitArraySource, r: Predicate, n: &[usize], prefix: &[usize]) -> bool {
    let (n1, n2, n3) = (n[0], n[1], n[2]);
    match r {
        // max_{j ≤ n3} χ(Σ_{i ≤ n1} a_{i,j} > n2)
        Predicate::P => (1..=n3).any(|j| column_count(a, prefix, j, n1) > n2),
        // max_{N ≤ n3} min_{N ≤ i ≤ n2} χ(Σ_{r ≤ n1} a_{r,i} > n2)
        Predicate::Q => {
            let full: Vec<bool> = (1..=n2.max(1)).map(|i| column_count(a, prefix, i, n1) > n2).collect();
            (1..=n3).any(|big_n| big_n > n2 || full[big_n - 1..].iter().all(|&x| x))
        }
    }
}

/// A random array that is eventually constant in every index, with known Ξ value.
#[derive(Clone, Debug)]
pub struct EventuallyConstantArray {
    k: usize,
    /// Outer indices above this are clamped to it.
    outer_cut: usize,
    /// One slice per clamped outer tuple, in lexicographic order.
    slices: Vec<Slice>,
}

#[derive(Clone, Debug)]
struct Slice {
    /// Columns j ≥ col_cut share the tail `late`.
    col_cut: usize,
    row_cut: usize,
    /// Tails of columns 1..col_cut.
    tails: Vec<bool>,
    late: bool,
    /// prefix[i][j] for i < row_cut, j ≤ col_cut (0-based).
    prefix: Vec<Vec<bool>>,
}

impl Slice {
    fn random(rng: &mut ChaCha8Rng, cut: usize) -> Self {
        let col_cut = rng.gen_range(1..=cut);
        let row_cut = rng.gen_range(1..=cut);
        let tails = (0..col_cut - 1).map(|_| rng.gen_bool(0.3)).collect();
        let late = rng.gen_bool(0.5);
        let prefix = (0..row_cut).map(|_| (0..col_cut).map(|_| rng.gen_bool(0.5)).collect()).collect();
        Slice { col_cut, row_cut, tails, late, prefix }
    }

    fn bit(&self, i: usize, j: usize) -> bool {
        let jc = j.min(self.col_cut);
        if i <= self.row_cut {
            return self.prefix[i - 1][jc - 1];
        }
        if jc < self.col_cut {
            self.tails[jc - 1]
        } else {
            self.late
        }
    }

    fn truth(&self, r: Predicate) -> bool {
        match r {
            Predicate::P => self.late || self.tails.iter().any(|&t| t),
            Predicate::Q => self.late,
        }
    }
}

impl EventuallyConstantArray {
    /// All cut-offs are at most `cut`.
    pub fn random(k: usize, cut: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outer_cut = rng.gen_range(1..=cut);
        let count = outer_cut.pow(k.saturating_sub(2) as u32);
        let slices = (0..count).map(|_| Slice::random(&mut rng, cut)).collect();
        EventuallyConstantArray { k, outer_cut, slices }
    }

    fn slice_of(&self, outer: &[usize]) -> &Slice {
        let idx = outer.iter().fold(0, |acc, &m| acc * self.outer_cut + (m.min(self.outer_cut) - 1));
        &self.slices[idx]
    }

    /// Ξ_{k,R}(a), evaluated from the construction.
    pub fn truth(&self, r: Predicate) -> bool {
        let mut prefix = Vec::new();
        self.truth_rec(r, 0, &mut prefix)
    }

    fn truth_rec(&self, r: Predicate, t: usize, prefix: &mut Vec<usize>) -> bool {
        if t == self.k - 2 {
            return self.slice_of(prefix).truth(r);
        }
        let exists = (t + self.k) % 2 == 0;
        let mut vals = (1..=self.outer_cut).map(|m| {
            prefix.push(m);
            let v = self.truth_rec(r, t + 1, prefix);
            prefix.pop();
            v
        });
        if exists {
            vals.any(|v| v)
        } else {
            vals.all(|v| v)
        }
    }
}

impl BitArraySource for EventuallyConstantArray {
    fn arity(&self) -> usize {
        self.k
    }

    fn bit(&self, idx: &[usize]) -> bool {
        let k = self.k;
        self.slice_of(&idx[..k - 2]).bit(idx[k - 2], idx[k - 1])
    }
}
