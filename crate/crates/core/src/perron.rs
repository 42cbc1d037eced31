//! Perron–Frobenius data of non-negative matrices supported on an aperiodic
//! transition matrix, plus the exact cycle-mean extremes of edge weights.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::shift::TransitionMatrix;

/// A non-negative matrix whose positive entries are exactly the allowed
/// transitions of `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct PositiveMatrix {
    base: TransitionMatrix,
    entries: Vec<f64>,
}

impl PositiveMatrix {
    /// `entries` is row-major; off-support entries must be zero.
    pub fn new(base: TransitionMatrix, entries: Vec<f64>) -> Result<Self> {
        let n = base.n_symbols();
        if entries.len() != n * n {
            return Err(Error::InvalidEntries(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let x = entries[i * n + j];
                let ok = if base.allows(i, j) {
                    x.is_finite() && x > 0.0
                } else {
                    x == 0.0
                };
                if !ok {
                    return Err(Error::InvalidEntries(format!(
                        "entry ({},{}) = {x} does not match the support",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(PositiveMatrix { base, entries })
    }

    /// Builds the matrix from `f(i, j)` evaluated on allowed transitions only.
    pub fn from_fn(base: TransitionMatrix, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = base.n_symbols();
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                if base.allows(i, j) {
                    f(i, j)
                } else {
                    0.0
                }
            })
            .collect();
        PositiveMatrix::new(base, entries)
    }

    /// The zero-one matrix of `base` itself.
    pub fn adjacency(base: &TransitionMatrix) -> Self {
        PositiveMatrix::from_fn(base.clone(), |_, _| 1.0).expect("ones match the support")
    }

    pub fn base(&self) -> &TransitionMatrix {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n_symbols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n() + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n()).map(<[f64]>::to_vec).collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries
            .chunks(self.n())
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.n())
            .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    pub fn vec_mul(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|j| (0..n).map(|i| u[i] * self.entries[i * n + j]).sum())
            .collect()
    }

    /// Matrix product; the support of the result is recomputed.
    pub fn matmul(&self, rhs: &PositiveMatrix) -> Result<PositiveMatrix> {
        let n = self.n();
        let entries = square_product(&self.entries, &rhs.entries, n);
        let rows = (0..n)
            .map(|i| (0..n).map(|j| u8::from(entries[i * n + j] > 0.0)).collect())
            .collect();
        PositiveMatrix::new(TransitionMatrix::new(rows)?, entries)
    }

    /// Sup-norm distance between entry tables.
    pub fn sup_distance(&self, other: &PositiveMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn square_product(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x != 0.0 {
                for j in 0..n {
                    out[i * n + j] += x * b[k * n + j];
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct PerronOptions {
    /// Relative residual target.
    pub tol: f64,
    /// Cap on matrix products (repeated squarings).
    pub max_products: usize,
}

impl Default for PerronOptions {
    fn default() -> Self {
        PerronOptions {
            tol: 1e-13,
            max_products: 64,
        }
    }
}

/// Perron root with left and right eigenvectors, normalized so that
/// `Σ right = 1` and `left · right = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerronTriple {
    pub root: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// `max(‖uA − λu‖∞ / ‖u‖∞, ‖Av − λv‖∞ / ‖v‖∞)`.
    pub residual: f64,
}

fn normalize_sum(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// Computes the Perron triple of `a`.
///
/// This is power iteration run on the powers `A^(2^k)`: the working matrix is
/// squared and renormalized until its row and column sums, after one plain
/// power step, are eigenvectors to within `tol` relative residual. Each
/// squaring halves the number of remaining plain iterations, so eigenvalue
/// ratios close to one in modulus stay cheap. Starting vectors are the
/// all-ones vectors, so the result is deterministic.
pub fn perron(a: &PositiveMatrix, opts: &PerronOptions) -> Result<PerronTriple> {
    let n = a.n();
    let scale = a.max_entry();
    let b: Vec<f64> = a.entries.iter().map(|x| x / scale).collect();
    let scaled = PositiveMatrix {
        base: a.base.clone(),
        entries: b.clone(),
    };

    let mut work = b;
    let mut best_residual = f64::INFINITY;
    for products in 0..=opts.max_products {
        let mut v: Vec<f64> = work.chunks(n).map(|r| r.iter().sum()).collect();
        let mut u: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| work[i * n + j]).sum())
            .collect();
        normalize_sum(&mut v);
        normalize_sum(&mut u);
        v = scaled.mul_vec(&v);
        u = scaled.vec_mul(&u);
        normalize_sum(&mut v);
        normalize_sum(&mut u);

        let (mut root, mut residual) = residuals(&scaled, &u, &v);
        if residual > opts.tol * root && residual < 1e-6 * root {
            for _ in 0..2 {
                if let (Some(v2), Some(u2)) = (
                    inverse_step(&scaled, &v, root, false),
                    inverse_step(&scaled, &u, root, true),
                ) {
                    let (r2, res2) = residuals(&scaled, &u2, &v2);
                    if res2 < residual {
                        (u, v, root, residual) = (u2, v2, r2, res2);
                    }
                }
            }
        }
        best_residual = best_residual.min(residual);

        if residual <= opts.tol * root {
            let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
            u.iter_mut().for_each(|x| *x /= dot);
            return Ok(PerronTriple {
                root: root * scale,
                left: u,
                right: v,
                residual: residual * scale,
            });
        }
        if products < opts.max_products {
            work = square_product(&work, &work, n);
            let m = work.iter().copied().fold(0.0, f64::max);
            work.iter_mut().for_each(|x| *x /= m);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_products,
        residual: best_residual * scale,
    })
}

fn residuals(b: &PositiveMatrix, u: &[f64], v: &[f64]) -> (f64, f64) {
    let av = b.mul_vec(v);
    let root: f64 = av.iter().sum();
    let ua = b.vec_mul(u);
    let res_right = sup(&av
        .iter()
        .zip(v)
        .map(|(x, y)| x - root * y)
        .collect::<Vec<_>>())
        / sup(v);
    let res_left = sup(&ua
        .iter()
        .zip(u)
        .map(|(x, y)| x - root * y)
        .collect::<Vec<_>>())
        / sup(u);
    (root, res_right.max(res_left))
}

/// One step of shifted inverse iteration, `x ← (B − μI)⁻¹x` (or its
/// transpose), normalized to sum 1.
fn inverse_step(b: &PositiveMatrix, x: &[f64], mu: f64, transpose: bool) -> Option<Vec<f64>> {
    let n = b.n();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let e = if transpose { b.get(j, i) } else { b.get(i, j) };
        e - if i == j { mu } else { 0.0 }
    });
    let mut y: Vec<f64> = m
        .lu()
        .solve(&DVector::from_column_slice(x))?
        .iter()
        .copied()
        .collect();
    let total: f64 = y.iter().sum();
    if !total.is_finite() || total == 0.0 {
        return None;
    }
    y.iter_mut().for_each(|e| *e /= total);
    y.iter().all(|e| *e > 0.0).then_some(y)
}

/// Solves `(A − λI)x = 0, Σx = 1` by replacing one row of `A − λI` with the
/// normalization row. Every deletion is tried and the best-conditioned
/// system wins.
pub fn perron_vector_by_linear_solve(a: &PositiveMatrix, root: f64) -> Result<Vec<f64>> {
    let n = a.n();
    let scale = a.max_entry();
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        a.get(i, j) / scale - if i == j { root / scale } else { 0.0 }
    });
    let mut best: Option<(f64, Vec<f64>)> = None;
    for deleted in 0..n {
        let mut system = shifted.clone();
        system.row_mut(deleted).fill(1.0);
        let mut rhs = DVector::zeros(n);
        rhs[deleted] = 1.0;
        let lu = system.clone().lu();
        let det = lu.determinant().abs();
        if !det.is_finite() || det <= f64::EPSILON * system.norm().powi(n as i32) {
            continue;
        }
        if let Some(x) = lu.solve(&rhs) {
            if best.as_ref().is_none_or(|(d, _)| det > *d) {
                best = Some((det, x.iter().copied().collect()));
            }
        }
    }
    best.map(|(_, x)| x).ok_or(Error::SingularSystem)
}

/// A one-parameter family `q ↦ M(q)` of matrices positive on a fixed support.
pub trait MatrixFamily {
    fn at(&self, q: f64) -> Result<PositiveMatrix>;
    /// Entrywise derivative `M'(q)`, row-major.
    fn derivative_at(&self, q: f64) -> Vec<f64>;
}

/// `dλ/dq = u M'(q) v / (u·v)` at `q0`, with `u, v` from [`perron`].
pub fn perron_derivative(family: &impl MatrixFamily, q0: f64, opts: &PerronOptions) -> Result<f64> {
    let m = family.at(q0)?;
    let triple = perron(&m, opts)?;
    let dm = family.derivative_at(q0);
    Ok(bilinear(&triple.left, &dm, &triple.right) / dot(&triple.left, &triple.right))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bilinear(u: &[f64], m: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    (0..n)
        .map(|i| u[i] * (0..n).map(|j| m[i * n + j] * v[j]).sum::<f64>())
        .sum()
}

/// Entries `exp(offset_ij + q · slope_ij)` on the support of `base`.
///
/// Covers the edge matrices `A(q f)` as well as constant and exponentially
/// scaled families. Evaluation keeps a separate log scale so that large `|q|`
/// neither overflows nor underflows.
#[derive(Clone, Debug)]
pub struct ExpFamily {
    base: TransitionMatrix,
    offset: Vec<f64>,
    slope: Vec<f64>,
}

impl ExpFamily {
    pub fn new(base: TransitionMatrix, offset: Vec<f64>, slope: Vec<f64>) -> Result<Self> {
        let n2 = base.n_symbols().pow(2);
        if offset.len() != n2 || slope.len() != n2 {
            return Err(Error::InvalidEntries(format!(
                "family tables must have {n2} entries"
            )));
        }
        Ok(ExpFamily {
            base,
            offset,
            slope,
        })
    }

    pub fn base(&self) -> &TransitionMatrix {
        &self.base
    }

    fn exponents(&self, q: f64) -> Vec<f64> {
        self.offset
            .iter()
            .zip(&self.slope)
            .map(|(a, b)| a + q * b)
            .collect()
    }

    /// `(M(q) · e^{-s}, s)` with `s` the largest exponent on the support.
    /// Entries that would underflow are floored at the smallest normal `f64`.
    pub fn scaled_at(&self, q: f64) -> (PositiveMatrix, f64) {
        let n = self.base.n_symbols();
        let exps = self.exponents(q);
        let shift = self
            .base
            .edges()
            .map(|(i, j)| exps[i * n + j])
            .fold(f64::NEG_INFINITY, f64::max);
        let m = PositiveMatrix::from_fn(self.base.clone(), |i, j| {
            (exps[i * n + j] - shift).exp().max(f64::MIN_POSITIVE)
        })
        .expect("scaled entries are positive and finite");
        (m, shift)
    }

    /// `log λ(M(q))`.
    pub fn log_root(&self, q: f64, opts: &PerronOptions) -> Result<f64> {
        let (m, shift) = self.scaled_at(q);
        Ok(perron(&m, opts)?.root.ln() + shift)
    }

    /// `d/dq log λ(M(q))`, invariant under the internal rescaling.
    pub fn log_root_derivative(&self, q: f64, opts: &PerronOptions) -> Result<f64> {
        let (m, _) = self.scaled_at(q);
        let triple = perron(&m, opts)?;
        let dm: Vec<f64> = m
            .entries
            .iter()
            .zip(&self.slope)
            .map(|(x, b)| x * b)
            .collect();
        Ok(bilinear(&triple.left, &dm, &triple.right)
            / (triple.root * dot(&triple.left, &triple.right)))
    }
}

impl MatrixFamily for ExpFamily {
    fn at(&self, q: f64) -> Result<PositiveMatrix> {
        let n = self.base.n_symbols();
        let exps = self.exponents(q);
        PositiveMatrix::from_fn(self.base.clone(), |i, j| exps[i * n + j].exp())
    }

    fn derivative_at(&self, q: f64) -> Vec<f64> {
        let n = self.base.n_symbols();
        let exps = self.exponents(q);
        (0..n * n)
            .map(|k| {
                if self.base.allows(k / n, k % n) {
                    self.slope[k] * exps[k].exp()
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Stationary distribution `π P = π, Σπ = 1` of a row-stochastic matrix.
pub fn stationary_distribution(p: &PositiveMatrix) -> Result<Vec<f64>> {
    check_stochastic(p, 1e-12)?;
    let triple = perron(p, &PerronOptions::default())?;
    let mut pi = triple.left;
    normalize_sum(&mut pi);
    Ok(pi)
}

pub(crate) fn check_stochastic(p: &PositiveMatrix, tol: f64) -> Result<()> {
    match p
        .row_sums()
        .into_iter()
        .enumerate()
        .find(|(_, s)| (s - 1.0).abs() > tol)
    {
        Some((row, sum)) => Err(Error::NotStochastic { row: row + 1, sum }),
        None => Ok(()),
    }
}

/// Extreme mean weights over all directed cycles of the support graph, each
/// with a simple cycle realizing it (0-based states, first state not repeated).
#[derive(Clone, Debug, PartialEq)]
pub struct CycleMeans {
    pub min: f64,
    pub max: f64,
    pub min_cycle: Vec<usize>,
    pub max_cycle: Vec<usize>,
}

/// Mean weight of the closed walk `cycle[0] → cycle[1] → … → cycle[0]`.
pub fn cycle_mean(weights: &[f64], n: usize, cycle: &[usize]) -> f64 {
    let total: f64 = (0..cycle.len())
        .map(|k| weights[cycle[k] * n + cycle[(k + 1) % cycle.len()]])
        .sum();
    total / cycle.len() as f64
}

/// Karp's minimum mean cycle algorithm, applied to `weights` and to their
/// negation. `weights` is row-major and only read on allowed transitions.
pub fn cycle_mean_extremes(base: &TransitionMatrix, weights: &[f64]) -> CycleMeans {
    let n = base.n_symbols();
    let (min, min_cycle) = karp_min_mean(base, weights);
    let negated: Vec<f64> = weights.iter().map(|w| -w).collect();
    let (neg_max, max_cycle) = karp_min_mean(base, &negated);
    CycleMeans {
        min,
        max: -neg_max,
        min_cycle: canonical(min_cycle),
        max_cycle: canonical(max_cycle),
    }
    .with_exact_means(weights, n)
}

impl CycleMeans {
    // Recompute the means from the witness cycles so the reported values are
    // exactly the means of the cycles returned.
    fn with_exact_means(mut self, weights: &[f64], n: usize) -> Self {
        self.min = cycle_mean(weights, n, &self.min_cycle);
        self.max = cycle_mean(weights, n, &self.max_cycle);
        self
    }
}

fn canonical(mut cycle: Vec<usize>) -> Vec<usize> {
    if let Some(pos) = cycle
        .iter()
        .enumerate()
        .min_by_key(|(_, &s)| s)
        .map(|(k, _)| k)
    {
        cycle.rotate_left(pos);
    }
    cycle
}

fn karp_min_mean(base: &TransitionMatrix, w: &[f64]) -> (f64, Vec<usize>) {
    let n = base.n_symbols();
    // dist[k][v]: minimum weight of a k-edge walk from state 0 to v.
    let mut dist = vec![vec![f64::INFINITY; n]; n + 1];
    let mut pred = vec![vec![usize::MAX; n]; n + 1];
    dist[0][0] = 0.0;
    for k in 1..=n {
        for (u, v) in base.edges() {
            let cand = dist[k - 1][u] + w[u * n + v];
            if cand < dist[k][v] {
                dist[k][v] = cand;
                pred[k][v] = u;
            }
        }
    }

    let mut best = (f64::INFINITY, usize::MAX);
    for (v, &last) in dist[n].iter().enumerate() {
        if !last.is_finite() {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| dist[k][v].is_finite())
            .map(|k| (last - dist[k][v]) / (n - k) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        if worst < best.0 {
            best = (worst, v);
        }
    }

    // Walk back along the n-edge minimizing walk to the critical state; any
    // cycle on that walk has the minimum mean.
    let mut walk = vec![best.1];
    let mut v = best.1;
    for k in (1..=n).rev() {
        v = pred[k][v];
        walk.push(v);
    }
    walk.reverse();
    let mut last_seen = vec![usize::MAX; n];
    for (pos, &s) in walk.iter().enumerate() {
        if last_seen[s] != usize::MAX {
            return (best.0, walk[last_seen[s]..pos].to_vec());
        }
        last_seen[s] = pos;
    }
    unreachable!("an n-edge walk on n states repeats a state")
}
