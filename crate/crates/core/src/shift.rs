//! Combinatorics of one-sided topological Markov shifts.
//!
//! Points of the shift space are never materialized: everything is phrased in
//! terms of finite admissible words and the cylinders they determine. Symbols
//! are `0..N` internally; the `Display`/`FromStr` forms of [`Word`] use the
//! 1-based alphabet `{1, ..., N}`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default cap on the number of words any single enumeration may produce.
pub const DEFAULT_WORD_CAP: u128 = 10_000_000;

/// A finite word over the alphabet `0..N` (0-based internally).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word from 1-based labels. Returns `None` if a label is zero.
    pub fn from_labels(labels: &[usize]) -> Option<Self> {
        labels
            .iter()
            .map(|&l| l.checked_sub(1))
            .collect::<Option<Vec<_>>>()
            .map(Word)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based labels, as used in every external format.
    pub fn labels(&self) -> Vec<usize> {
        self.0.iter().map(|s| s + 1).collect()
    }

    /// The first `n` symbols (`ω|n`).
    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    /// The word with its first symbol removed (the shift `σw`).
    pub fn shifted(&self) -> Word {
        Word(self.0.get(1..).unwrap_or(&[]).to_vec())
    }

    /// `self` followed by one more symbol.
    pub fn extended(&self, symbol: usize) -> Word {
        let mut symbols = self.0.clone();
        symbols.push(symbol);
        Word(symbols)
    }

    pub fn window(&self, start: usize, len: usize) -> Word {
        Word(self.0[start..start + len].to_vec())
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl From<Vec<usize>> for Word {
    fn from(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        if self.0.iter().all(|&s| s < 9) {
            for s in &self.0 {
                write!(f, "{}", s + 1)?;
            }
            Ok(())
        } else {
            let labels: Vec<String> = self.labels().iter().map(|l| l.to_string()).collect();
            write!(f, "[{}]", labels.join(","))
        }
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses a word of 1-based digit labels such as `"121"`.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_digit(10) {
                Some(d) if d >= 1 => Ok(d as usize - 1),
                _ => Err(Error::InvalidPotential(format!(
                    "word key {s:?} must consist of digits 1-9"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// Square boolean matrix stored as packed bit rows.
#[derive(Clone, PartialEq, Eq)]
struct BitMatrix {
    n: usize,
    blocks: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn from_fn(n: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let blocks = n.div_ceil(64);
        let mut bits = vec![0u64; n * blocks];
        for i in 0..n {
            for j in 0..n {
                if f(i, j) {
                    bits[i * blocks + j / 64] |= 1 << (j % 64);
                }
            }
        }
        BitMatrix { n, blocks, bits }
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.blocks + j / 64] >> (j % 64) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.blocks..(i + 1) * self.blocks]
    }

    fn mul(&self, rhs: &BitMatrix) -> BitMatrix {
        let mut bits = vec![0u64; self.bits.len()];
        for i in 0..self.n {
            let out = &mut bits[i * self.blocks..(i + 1) * self.blocks];
            for j in 0..self.n {
                if self.get(i, j) {
                    for (o, r) in out.iter_mut().zip(rhs.row(j)) {
                        *o |= r;
                    }
                }
            }
        }
        BitMatrix { bits, ..*self }
    }

    fn all_set(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j)))
    }
}

/// Wielandt's bound on the exponent of a primitive `n x n` matrix.
pub fn wielandt_bound(n: usize) -> usize {
    n * n - 2 * n + 2
}

/// Checks that `rows` is a square zero-one matrix (N ≥ 2) some power of
/// which is entrywise positive, and returns the least such power.
pub fn check_aperiodic(rows: &[Vec<u8>]) -> Result<usize> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InvalidMatrix(format!(
            "at least 2 symbols are required, got {n}"
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidMatrix(format!(
                "row {} has {} entries, expected {n}",
                i + 1,
                row.len()
            )));
        }
        if let Some(&bad) = row.iter().find(|&&e| e > 1) {
            return Err(Error::InvalidMatrix(format!(
                "row {} contains {bad}; entries must be 0 or 1",
                i + 1
            )));
        }
    }
    if let Some(i) = (0..n).find(|&i| rows[i].iter().all(|&e| e == 0)) {
        return Err(Error::NotAperiodic(format!("row {} is all zero", i + 1)));
    }
    if let Some(j) = (0..n).find(|&j| rows.iter().all(|row| row[j] == 0)) {
        return Err(Error::NotAperiodic(format!("column {} is all zero", j + 1)));
    }

    let a = BitMatrix::from_fn(n, |i, j| rows[i][j] == 1);
    let bound = wielandt_bound(n);
    let mut power = a.clone();
    for k in 1..=bound {
        if power.all_set() {
            return Ok(k);
        }
        if k < bound {
            power = power.mul(&a);
        }
    }
    Err(Error::NotAperiodic(format!(
        "no power up to the Wielandt bound {bound} is positive"
    )))
}

/// An aperiodic zero-one transition matrix `A` over `N ≥ 2` symbols.
#[derive(Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    n: usize,
    allowed: Vec<bool>,
    aperiodicity_power: usize,
}

impl fmt::Debug for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionMatrix")
            .field("rows", &self.rows())
            .field("aperiodicity_power", &self.aperiodicity_power)
            .finish()
    }
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let aperiodicity_power = check_aperiodic(&rows)?;
        let n = rows.len();
        let allowed = rows.iter().flatten().map(|&e| e == 1).collect();
        Ok(TransitionMatrix {
            n,
            allowed,
            aperiodicity_power,
        })
    }

    /// The full shift on `n` symbols.
    pub fn full(n: usize) -> Result<Self> {
        TransitionMatrix::new(vec![vec![1; n]; n])
    }

    /// `[[1,1],[1,0]]`.
    pub fn golden_mean() -> Self {
        TransitionMatrix::new(vec![vec![1, 1], vec![1, 0]]).expect("golden mean is aperiodic")
    }

    /// `[[0,1],[1,1]]`.
    pub fn reverse_golden_mean() -> Self {
        TransitionMatrix::new(vec![vec![0, 1], vec![1, 1]]).expect("aperiodic")
    }

    /// The 3-symbol shift forbidding only the loops `ii`.
    pub fn ring3() -> Self {
        TransitionMatrix::new(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]).expect("aperiodic")
    }

    pub fn n_symbols(&self) -> usize {
        self.n
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.n + j]
    }

    pub fn aperiodicity_power(&self) -> usize {
        self.aperiodicity_power
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.allows(i, j) as u8).collect())
            .collect()
    }

    pub fn is_full(&self) -> bool {
        self.allowed.iter().all(|&a| a)
    }

    /// Allowed transitions `(i, j)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n)
            .flat_map(move |i| (0..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.allows(i, j))
    }

    pub fn edge_count(&self) -> usize {
        self.allowed.iter().filter(|&&a| a).count()
    }

    pub fn is_admissible(&self, w: &Word) -> bool {
        w.symbols().iter().all(|&s| s < self.n)
            && w.symbols().windows(2).all(|p| self.allows(p[0], p[1]))
    }

    /// `#W_A^n`, saturating at `u128::MAX`.
    pub fn word_count(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let mut ending = vec![1u128; self.n];
        for _ in 1..n {
            ending = (0..self.n)
                .map(|j| {
                    (0..self.n)
                        .filter(|&i| self.allows(i, j))
                        .fold(0u128, |acc, i| acc.saturating_add(ending[i]))
                })
                .collect();
        }
        ending.iter().fold(0u128, |acc, &c| acc.saturating_add(c))
    }

    fn check_cap(&self, n: usize, cap: u128) -> Result<()> {
        let requested = self.word_count(n);
        if requested > cap {
            return Err(Error::EnumerationCap { requested, cap });
        }
        Ok(())
    }

    /// All admissible words of length `n` in lexicographic order.
    pub fn admissible_words(&self, n: usize, cap: u128) -> Result<Vec<Word>> {
        self.check_cap(n, cap)?;
        let mut words = vec![Word::empty()];
        for len in 0..n {
            words = words
                .iter()
                .flat_map(|w| {
                    (0..self.n)
                        .filter(move |&s| len == 0 || self.allows(w.last().unwrap(), s))
                        .map(move |s| w.extended(s))
                })
                .collect();
        }
        Ok(words)
    }

    /// Row sums `δ(i)` together with condition (A.1): at most one state has
    /// a single follower.
    pub fn out_degrees(&self) -> OutDegrees {
        let degrees: Vec<usize> = (0..self.n)
            .map(|i| (0..self.n).filter(|&j| self.allows(i, j)).count())
            .collect();
        let condition_a1 = degrees.iter().filter(|&&d| d == 1).count() <= 1;
        OutDegrees {
            degrees,
            condition_a1,
        }
    }

    /// Recodes the shift onto the alphabet `W_A^{n-1}`, so that n-locally
    /// constant functions become 2-locally constant.
    pub fn higher_block(&self, n: usize, cap: u128) -> Result<HigherBlock> {
        if n < 2 {
            return Err(Error::Precondition(format!(
                "higher block order must be at least 2, got {n}"
            )));
        }
        let alphabet = self.admissible_words(n - 1, cap)?;
        let size = alphabet.len();
        let rows: Vec<Vec<u8>> = alphabet
            .iter()
            .map(|u| {
                alphabet
                    .iter()
                    .map(|w| u8::from(block_follows(self, u, w)))
                    .collect()
            })
            .collect();
        let matrix = if n == 2 {
            self.clone()
        } else {
            TransitionMatrix::new(rows)?
        };
        debug_assert_eq!(matrix.n_symbols(), size);
        Ok(HigherBlock {
            order: n,
            alphabet,
            matrix,
        })
    }

    /// Relabels symbols through `perm`: the result has entry `(i, j)` equal to
    /// `A(π(i)π(j))`. The relabeling is a conjugacy of the shift onto itself
    /// exactly when this equals `A`.
    pub fn permuted(&self, perm: &Permutation) -> Result<PermutationCheck> {
        if perm.len() != self.n {
            return Err(Error::Precondition(format!(
                "permutation of {} symbols applied to {} symbols",
                perm.len(),
                self.n
            )));
        }
        let rows: Vec<Vec<u8>> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.allows(perm.apply(i), perm.apply(j)) as u8)
                    .collect()
            })
            .collect();
        let matrix = TransitionMatrix::new(rows)?;
        Ok(PermutationCheck {
            valid: matrix == *self,
            matrix,
        })
    }
}

fn block_follows(a: &TransitionMatrix, u: &Word, w: &Word) -> bool {
    let (u, w) = (u.symbols(), w.symbols());
    if u.len() == 1 {
        return a.allows(u[0], w[0]);
    }
    u[1..] == w[..w.len() - 1] && a.allows(u[u.len() - 1], w[w.len() - 1])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutDegrees {
    pub degrees: Vec<usize>,
    pub condition_a1: bool,
}

/// The n-block presentation of a shift. State `k` of `matrix` is the word
/// `alphabet[k]` of length `order - 1`.
#[derive(Clone, Debug)]
pub struct HigherBlock {
    pub order: usize,
    pub alphabet: Vec<Word>,
    pub matrix: TransitionMatrix,
}

impl HigherBlock {
    /// Maps a recoded word of length `m ≥ 1` to the original word of length
    /// `m + order - 2` it represents. The empty word maps to itself.
    pub fn translate(&self, recoded: &Word) -> Word {
        let Some(first) = recoded.first() else {
            return Word::empty();
        };
        let mut symbols = self.alphabet[first].symbols().to_vec();
        symbols.extend(
            recoded.symbols()[1..]
                .iter()
                .map(|&s| self.alphabet[s].last().expect("block words are non-empty")),
        );
        Word::new(symbols)
    }

    /// Inverse of [`translate`](Self::translate) for original words of length
    /// at least `order - 1`.
    pub fn encode(&self, original: &Word) -> Option<Word> {
        let block = self.order - 1;
        if original.len() < block {
            return None;
        }
        (0..=original.len() - block)
            .map(|start| self.state_of(&original.window(start, block)))
            .collect::<Option<Vec<_>>>()
            .map(Word::new)
    }

    /// Index of a block word in the recoded alphabet.
    pub fn state_of(&self, block: &Word) -> Option<usize> {
        self.alphabet.binary_search(block).ok()
    }
}

/// A bijection of `{0, ..., N-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &p in &images {
            if p >= images.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Precondition(format!(
                    "{images:?} is not a permutation"
                )));
            }
        }
        Ok(Permutation(images))
    }

    /// Builds a permutation from 1-based images.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let images = labels
            .iter()
            .map(|&l| {
                l.checked_sub(1)
                    .ok_or_else(|| Error::Precondition("labels are 1-based".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::new(images)
    }

    pub fn swap2() -> Self {
        Permutation(vec![1, 0])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn apply_word(&self, w: &Word) -> Word {
        Word::new(w.symbols().iter().map(|&s| self.0[s]).collect())
    }
}

#[derive(Clone, Debug)]
pub struct PermutationCheck {
    pub valid: bool,
    pub matrix: TransitionMatrix,
}
