//! Monte-Carlo sampling of Markov-measure paths and empirical local entropies
//! `−(1/n) log μ([ω|n])`.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, stream)`, and
//! results are collected in trial order before reduction, so outputs do not
//! depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::shift::Word;
use crate::spectrum::BetaFunction;
use crate::thermo::{MarkovMeasure, Potential};

/// The random stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inverse-CDF sampler for one Markov measure.
struct Sampler {
    n: usize,
    initial: Vec<f64>,
    rows: Vec<f64>,
}

impl Sampler {
    fn new(mu: &MarkovMeasure) -> Self {
        let n = mu.base().n_symbols();
        let cumulative = |xs: &[f64]| -> Vec<f64> {
            xs.iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect()
        };
        let rows = mu
            .transition()
            .entries()
            .chunks(n)
            .flat_map(cumulative)
            .collect();
        Sampler {
            n,
            initial: cumulative(mu.stationary()),
            rows,
        }
    }

    fn pick(cdf: &[f64], x: f64) -> usize {
        let total = cdf[cdf.len() - 1];
        let target = x * total;
        cdf.iter().position(|&c| target < c).unwrap_or_else(|| {
            // Rounding can leave target == total; take the last symbol with positive weight.
            cdf.iter()
                .position(|&c| c >= total)
                .unwrap_or(cdf.len() - 1)
        })
    }

    fn first(&self, rng: &mut impl Rng) -> usize {
        Sampler::pick(&self.initial, rng.gen())
    }

    fn next(&self, from: usize, rng: &mut impl Rng) -> usize {
        Sampler::pick(&self.rows[from * self.n..(from + 1) * self.n], rng.gen())
    }
}

/// Log-measure table for scoring cylinders under a Markov measure.
struct Scorer {
    n: usize,
    log_initial: Vec<f64>,
    log_rows: Vec<f64>,
}

impl Scorer {
    fn new(mu: &MarkovMeasure) -> Self {
        Scorer {
            n: mu.base().n_symbols(),
            log_initial: mu.stationary().iter().map(|p| p.ln()).collect(),
            log_rows: mu.transition().entries().iter().map(|p| p.ln()).collect(),
        }
    }
}

/// A sampled word with its log-measure.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub word: Word,
    pub log_measure: f64,
    pub seed: u64,
    pub stream: u64,
}

impl PathSample {
    /// `−(1/n) log μ([ω|n])`.
    pub fn local_exponent(&self) -> f64 {
        -self.log_measure / self.word.len() as f64
    }
}

/// Draws `ω|n` from `μ`: the first symbol from `π`, then transitions from the
/// rows of `P`.
pub fn sample_path(mu: &MarkovMeasure, n: usize, seed: u64) -> Result<PathSample> {
    sample_path_stream(mu, n, seed, 0)
}

pub fn sample_path_stream(
    mu: &MarkovMeasure,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<PathSample> {
    if n == 0 {
        return Err(Error::Precondition("path length must be at least 1".into()));
    }
    let sampler = Sampler::new(mu);
    let scorer = Scorer::new(mu);
    let mut rng = stream_rng(seed, stream);
    let mut symbols = Vec::with_capacity(n);
    let mut s = sampler.first(&mut rng);
    let mut log_measure = scorer.log_initial[s];
    symbols.push(s);
    for _ in 1..n {
        let t = sampler.next(s, &mut rng);
        log_measure += scorer.log_rows[s * scorer.n + t];
        symbols.push(t);
        s = t;
    }
    Ok(PathSample {
        word: Word::new(symbols),
        log_measure,
        seed,
        stream,
    })
}

/// Local exponents of `trials` paths of length `n` drawn from `sample_from`
/// and scored under `score_under`. Trial `k` uses stream `stream_base + k`.
pub fn sample_exponents(
    sample_from: &MarkovMeasure,
    score_under: &MarkovMeasure,
    n: usize,
    trials: usize,
    seed: u64,
    stream_base: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Precondition("path length must be at least 1".into()));
    }
    if sample_from.base() != score_under.base() {
        return Err(Error::Precondition(
            "measures live on different shifts".into(),
        ));
    }
    let sampler = Sampler::new(sample_from);
    let scorer = Scorer::new(score_under);
    let exponents = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, stream_base + trial as u64);
            let mut s = sampler.first(&mut rng);
            let mut log_measure = scorer.log_initial[s];
            for _ in 1..n {
                let t = sampler.next(s, &mut rng);
                log_measure += scorer.log_rows[s * scorer.n + t];
                s = t;
            }
            -log_measure / n as f64
        })
        .collect();
    Ok(exponents)
}

/// Sum by recursive halving; fixed association order for a given length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Buckets {
    /// Equal-width buckets spanning the observed range.
    Auto(usize),
    /// Explicit increasing edges; values outside land in the end buckets.
    Edges(Vec<f64>),
}

impl Default for Buckets {
    fn default() -> Self {
        Buckets::Auto(20)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(values: &[f64], buckets: &Buckets) -> Result<Self> {
        let edges = match buckets {
            Buckets::Edges(edges) => {
                if edges.len() < 2 || edges.windows(2).any(|p| p[0] >= p[1]) {
                    return Err(Error::Precondition("bucket edges must increase".into()));
                }
                edges.clone()
            }
            Buckets::Auto(count) => {
                let count = (*count).max(1);
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !lo.is_finite() {
                    return Err(Error::Precondition("no values to bin".into()));
                }
                if hi == lo {
                    vec![lo, hi]
                } else {
                    let width = (hi - lo) / count as f64;
                    let mut edges: Vec<f64> = (0..count).map(|k| lo + k as f64 * width).collect();
                    edges.push(hi);
                    edges
                }
            }
        };
        let buckets = edges.len() - 1;
        let mut counts = vec![0u64; buckets];
        for &x in values {
            // Right-most bucket whose lower edge is ≤ x, clamped into range.
            let k = edges[1..buckets].partition_point(|&e| e <= x);
            counts[k] += 1;
        }
        Ok(Histogram { edges, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bucket masses, summing to 1.
    pub fn mass(&self) -> Vec<f64> {
        let total = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// Mean recomputed from bucket midpoints.
    pub fn mean_estimate(&self) -> f64 {
        let total = self.total() as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 * 0.5 * (self.edges[k] + self.edges[k + 1]))
            .sum::<f64>()
            / total
    }

    /// Largest bucket width.
    pub fn resolution(&self) -> f64 {
        self.edges
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalEntropyStats {
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
}

impl LocalEntropyStats {
    fn from_exponents(n: usize, exponents: &[f64], buckets: &Buckets) -> Result<Self> {
        let trials = exponents.len();
        // Offsets from the first sample keep identical samples exactly identical.
        let origin = exponents.first().copied().unwrap_or(0.0);
        let offsets: Vec<f64> = exponents.iter().map(|x| x - origin).collect();
        let shift = pairwise_sum(&offsets) / trials as f64;
        let mean = origin + shift;
        let deviations: Vec<f64> = offsets.iter().map(|d| (d - shift).powi(2)).collect();
        let variance = if trials > 1 {
            pairwise_sum(&deviations) / (trials - 1) as f64
        } else {
            0.0
        };
        Ok(LocalEntropyStats {
            n,
            trials,
            mean,
            std_error: (variance / trials as f64).sqrt(),
            min: exponents.iter().copied().fold(f64::INFINITY, f64::min),
            max: exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            histogram: Histogram::build(exponents, buckets)?,
        })
    }
}

/// Distribution of `−(1/n) log μ([ω|n])` over `trials` μ-random paths.
pub fn empirical_local_entropy(
    mu: &MarkovMeasure,
    n: usize,
    trials: usize,
    seed: u64,
    buckets: &Buckets,
) -> Result<LocalEntropyStats> {
    if trials < 100 {
        return Err(Error::Precondition(format!(
            "at least 100 trials are required, got {trials}"
        )));
    }
    let exponents = sample_exponents(mu, mu, n, trials, seed, 0)?;
    LocalEntropyStats::from_exponents(n, &exponents, buckets)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TiltedExponentRow {
    pub q: f64,
    /// Mean exponent under `μ_f` of `μ_{qf}`-random paths.
    pub mean: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
    /// The exponent `α(q)` typical `μ_{qf}` points are expected to have.
    pub alpha: f64,
}

/// For each `q`, samples paths from `μ_{qf}` and scores them under `μ_f`.
pub fn empirical_spectrum_histogram(
    f: &Potential,
    n: usize,
    trials: usize,
    q_list: &[f64],
    seed: u64,
) -> Result<Vec<TiltedExponentRow>> {
    let beta = BetaFunction::new(f)?;
    let mu_f = beta.gibbs_at(1.0)?.into_measure();
    q_list
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            let mu_q = beta.gibbs_at(q)?.into_measure();
            let exponents = sample_exponents(&mu_q, &mu_f, n, trials, seed, (k as u64) << 32)?;
            let stats = LocalEntropyStats::from_exponents(n, &exponents, &Buckets::Auto(1))?;
            Ok(TiltedExponentRow {
                q,
                mean: stats.mean,
                std_error: stats.std_error,
                min: stats.min,
                max: stats.max,
                alpha: beta.alpha(q)?,
            })
        })
        .collect()
}
