//! Potentials, pressure, Gibbs–Markov measures and the quantities derived
//! from them.
//!
//! Every computation runs on 2-locally constant potentials: order-1
//! potentials are lifted by `f(ij) := f(i)`, and higher orders are carried to
//! order 2 on the higher-block presentation of the shift. The normalized
//! potential uses the left Perron vector `u` of `A(f)`, because the transfer
//! operator sums over preimages (prepended symbols) and its 1-locally
//! constant eigenfunctions therefore solve `u A(f) = λ u`.

use std::borrow::Cow;
use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perron::{
    check_stochastic, perron, stationary_distribution, ExpFamily, PerronOptions, PerronTriple,
    PositiveMatrix,
};
use crate::shift::{HigherBlock, Permutation, TransitionMatrix, Word, DEFAULT_WORD_CAP};

/// Depth above which cylinder masses are accumulated in log-space.
const LOG_SPACE_DEPTH: usize = 30;

/// An n-locally constant potential: a value for every admissible n-word.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    base: TransitionMatrix,
    order: usize,
    values: BTreeMap<Word, f64>,
}

impl Potential {
    /// The table must cover `W_A^order` exactly, with finite values.
    pub fn new(base: TransitionMatrix, order: usize, values: BTreeMap<Word, f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidPotential("order must be at least 1".into()));
        }
        let words = base.admissible_words(order, DEFAULT_WORD_CAP)?;
        if let Some(w) = words.iter().find(|w| !values.contains_key(*w)) {
            return Err(Error::InvalidPotential(format!(
                "missing value for word \"{w}\""
            )));
        }
        if values.len() != words.len() {
            let extra = values
                .keys()
                .find(|w| w.len() != order || !base.is_admissible(w))
                .expect("an extra key exists");
            return Err(Error::InvalidPotential(format!(
                "word \"{extra}\" is not an admissible word of length {order}"
            )));
        }
        if let Some((w, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "value {v} for word \"{w}\" is not finite"
            )));
        }
        Ok(Potential {
            base,
            order,
            values,
        })
    }

    pub fn from_fn(base: TransitionMatrix, order: usize, f: impl Fn(&Word) -> f64) -> Result<Self> {
        let values = base
            .admissible_words(order, DEFAULT_WORD_CAP)?
            .into_iter()
            .map(|w| {
                let v = f(&w);
                (w, v)
            })
            .collect();
        Potential::new(base, order, values)
    }

    /// `f ≡ c`, as an order-1 potential.
    pub fn constant(base: TransitionMatrix, c: f64) -> Self {
        Potential::from_fn(base, 1, |_| c).expect("constant potentials are valid")
    }

    /// `f(ij) = log M(ij)` on the support of `m`.
    pub fn log_of(m: &PositiveMatrix) -> Self {
        Potential::from_fn(m.base().clone(), 2, |w| {
            let s = w.symbols();
            m.get(s[0], s[1]).ln()
        })
        .expect("log of a positive matrix is finite")
    }

    /// An order-2 potential from a row-major table read on the support.
    pub fn from_edge_table(base: TransitionMatrix, table: &[f64]) -> Result<Self> {
        let n = base.n_symbols();
        if table.len() != n * n {
            return Err(Error::InvalidPotential(format!(
                "expected {} entries",
                n * n
            )));
        }
        Potential::from_fn(base, 2, |w| table[w.symbols()[0] * n + w.symbols()[1]])
    }

    pub fn base(&self) -> &TransitionMatrix {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &BTreeMap<Word, f64> {
        &self.values
    }

    pub fn value(&self, w: &Word) -> Option<f64> {
        self.values.get(w).copied()
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> Potential {
        Potential {
            base: self.base.clone(),
            order: self.order,
            values: self
                .values
                .iter()
                .map(|(w, &v)| (w.clone(), f(v)))
                .collect(),
        }
    }

    /// `q · f`.
    pub fn scaled(&self, q: f64) -> Potential {
        self.map_values(|v| q * v)
    }

    /// `f + c`.
    pub fn shifted(&self, c: f64) -> Potential {
        self.map_values(|v| v + c)
    }

    /// `f ∘ π` on the relabeled base `A(π(i)π(j))`.
    pub fn relabeled(&self, perm: &Permutation) -> Result<Potential> {
        let base = self.base.permuted(perm)?.matrix;
        Potential::from_fn(base, self.order, |w| self.values[&perm.apply_word(w)])
    }

    /// The same potential as a 2-locally constant one on the same base.
    /// Orders above 2 need [`reduce`](Self::reduce) instead.
    pub fn as_order2(&self) -> Result<Cow<'_, Potential>> {
        match self.order {
            2 => Ok(Cow::Borrowed(self)),
            1 => Ok(Cow::Owned(
                Potential::from_fn(self.base.clone(), 2, |w| self.values[&w.prefix(1)])
                    .expect("lift of a valid potential"),
            )),
            got => Err(Error::Order { expected: 2, got }),
        }
    }

    /// Carries the potential to order 2, recoding the shift when the order is
    /// 3 or more.
    pub fn reduce(&self, cap: u128) -> Result<Reduction> {
        if self.order <= 2 {
            return Ok(Reduction {
                potential: self.as_order2()?.into_owned(),
                recoding: None,
            });
        }
        let recoding = self.base.higher_block(self.order, cap)?;
        let potential = Potential::from_fn(recoding.matrix.clone(), 2, |w| {
            self.values[&recoding.translate(w)]
        })?;
        Ok(Reduction {
            potential,
            recoding: Some(recoding),
        })
    }

    /// Row-major `N × N` table of an order-2 potential (zero off support).
    pub fn edge_table(&self) -> Result<Vec<f64>> {
        let f = self.as_order2()?;
        let n = self.base.n_symbols();
        let mut table = vec![0.0; n * n];
        for (w, v) in &f.values {
            table[w.symbols()[0] * n + w.symbols()[1]] = *v;
        }
        Ok(table)
    }

    /// The family `q ↦ A(q f)` for an order-2 potential.
    pub fn edge_family(&self) -> Result<ExpFamily> {
        let n = self.base.n_symbols();
        ExpFamily::new(self.base.clone(), vec![0.0; n * n], self.edge_table()?)
    }
}

/// An order-2 potential equivalent to some potential of higher order, with
/// the recoding that relates them (`None` when no recoding was needed).
#[derive(Clone, Debug)]
pub struct Reduction {
    pub potential: Potential,
    pub recoding: Option<HigherBlock>,
}

/// `A(f)_{ij} = exp f(ij)` on the support, 0 elsewhere.
pub fn edge_matrix(f: &Potential) -> Result<PositiveMatrix> {
    let f = f.as_order2()?;
    let n = f.base.n_symbols();
    let table = f.edge_table()?;
    PositiveMatrix::from_fn(f.base.clone(), |i, j| table[i * n + j].exp())
}

/// Topological pressure `P(σ, f) = log λ(A(f))` after reduction to order 2.
pub fn pressure(f: &Potential) -> Result<f64> {
    let reduced = f.reduce(DEFAULT_WORD_CAP)?;
    reduced
        .potential
        .edge_family()?
        .log_root(1.0, &PerronOptions::default())
}

/// Pressure estimated from preimage sums: `log(s_n / s_{n−1})` with
/// `s_m = Σ_i (A(f)^m)_{i ω0}`, the sum of `exp S_m f` over the words of
/// length `m` that can precede `ω0`.
pub fn pressure_by_preimages(f: &Potential, terminal: usize, depth: usize) -> Result<f64> {
    let f = f.as_order2()?;
    let n = f.base.n_symbols();
    if depth < 2 {
        return Err(Error::Precondition(format!(
            "depth must be at least 2, got {depth}"
        )));
    }
    if terminal >= n {
        return Err(Error::Precondition(format!(
            "terminal symbol {} out of range",
            terminal + 1
        )));
    }
    let (a, shift) = f.edge_family()?.scaled_at(1.0);
    let mut x = vec![0.0; n];
    x[terminal] = 1.0;
    let mut log_ratio = 0.0;
    for _ in 0..depth {
        x = a.mul_vec(&x);
        let s: f64 = x.iter().sum();
        log_ratio = s.ln();
        x.iter_mut().for_each(|v| *v /= s);
    }
    Ok(log_ratio + shift)
}

/// A stationary Markov measure: row-stochastic `P` on the support of `A` and
/// its stationary vector `π`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovMeasure {
    transition: PositiveMatrix,
    stationary: Vec<f64>,
}

impl MarkovMeasure {
    pub fn new(transition: PositiveMatrix) -> Result<Self> {
        let stationary = stationary_distribution(&transition)?;
        Ok(MarkovMeasure {
            transition,
            stationary,
        })
    }

    pub fn transition(&self) -> &PositiveMatrix {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn base(&self) -> &TransitionMatrix {
        self.transition.base()
    }

    /// `log μ([w])`; `-∞` for non-admissible words, `0` for the empty word.
    pub fn log_cylinder(&self, w: &Word) -> f64 {
        if !self.base().is_admissible(w) {
            return f64::NEG_INFINITY;
        }
        let s = w.symbols();
        match s.first() {
            None => 0.0,
            Some(&first) => {
                self.stationary[first].ln()
                    + s.windows(2)
                        .map(|p| self.transition.get(p[0], p[1]).ln())
                        .sum::<f64>()
            }
        }
    }

    /// `μ([w]) = π_{w0} P(w0 w1) ⋯ P(w_{n−2} w_{n−1})`.
    pub fn cylinder(&self, w: &Word) -> f64 {
        if w.len() > LOG_SPACE_DEPTH {
            return self.log_cylinder(w).exp();
        }
        if !self.base().is_admissible(w) {
            return 0.0;
        }
        let s = w.symbols();
        match s.first() {
            None => 1.0,
            Some(&first) => s.windows(2).fold(self.stationary[first], |m, p| {
                m * self.transition.get(p[0], p[1])
            }),
        }
    }

    /// Kolmogorov–Sinai entropy `−Σ π_i P_ij log P_ij`.
    pub fn entropy_rate(&self) -> f64 {
        let n = self.transition.n();
        -(0..n)
            .map(|i| {
                self.stationary[i]
                    * (0..n)
                        .map(|j| self.transition.get(i, j))
                        .filter(|&p| p > 0.0)
                        .map(|p| p * p.ln())
                        .sum::<f64>()
            })
            .sum::<f64>()
    }

    /// `∫ g dμ` for an order-2 edge table `g`.
    pub fn integrate_edges(&self, table: &[f64]) -> f64 {
        let n = self.transition.n();
        self.base()
            .edges()
            .map(|(i, j)| self.stationary[i] * self.transition.get(i, j) * table[i * n + j])
            .sum()
    }
}

/// `μ([w])`.
pub fn cylinder_measure(mu: &MarkovMeasure, w: &Word) -> f64 {
    mu.cylinder(w)
}

/// `h_μ(σ)`.
pub fn entropy_rate(mu: &MarkovMeasure) -> f64 {
    mu.entropy_rate()
}

/// The Perron data of `A(f)` for an order-2 potential together with its
/// Gibbs measure.
///
/// `λ_f = e^P`; the eigenvectors belong to `A(f)` (they are unchanged by
/// the rescaling used internally) and satisfy `Σv = 1`, `u·v = 1`, so that
/// `μ_f([i]) = u_i v_i`.
#[derive(Clone, Debug)]
pub struct GibbsState {
    potential: Potential,
    pressure: f64,
    triple: PerronTriple,
    measure: MarkovMeasure,
}

impl GibbsState {
    pub fn new(f: &Potential) -> Result<Self> {
        let potential = f.as_order2()?.into_owned();
        let n = potential.base.n_symbols();
        let (a, shift) = potential.edge_family()?.scaled_at(1.0);
        let triple = perron(&a, &PerronOptions::default())?;
        let pressure = triple.root.ln() + shift;
        let table = potential.edge_table()?;
        let v = &triple.right;
        let p = PositiveMatrix::from_fn(potential.base.clone(), |i, j| {
            (table[i * n + j] - pressure).exp() * v[j] / v[i]
        })?;
        check_stochastic(&p, 1e-11)?;
        let stationary = triple.left.iter().zip(v).map(|(a, b)| a * b).collect();
        Ok(GibbsState {
            potential,
            pressure,
            triple,
            measure: MarkovMeasure {
                transition: p,
                stationary,
            },
        })
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// `P(σ, f) = log λ_f`.
    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    pub fn lambda(&self) -> f64 {
        self.pressure.exp()
    }

    /// Left Perron vector `u` (the eigenfunction `h_f` on symbols).
    pub fn left(&self) -> &[f64] {
        &self.triple.left
    }

    /// Right Perron vector `v`, `Σ v = 1`.
    pub fn right(&self) -> &[f64] {
        &self.triple.right
    }

    pub fn measure(&self) -> &MarkovMeasure {
        &self.measure
    }

    pub fn into_measure(self) -> MarkovMeasure {
        self.measure
    }

    /// `f̂(ij) = f(ij) + log u_i − log u_j`.
    pub fn normalized(&self) -> Potential {
        let u = &self.triple.left;
        let values = self
            .potential
            .values
            .iter()
            .map(|(w, &v)| {
                let s = w.symbols();
                (w.clone(), v + u[s[0]].ln() - u[s[1]].ln())
            })
            .collect();
        Potential {
            base: self.potential.base.clone(),
            order: 2,
            values,
        }
    }

    /// Eigenmeasure mass `ν_f([w]) = μ_f([w]) / u_{w0}` (1 for the empty word).
    pub fn eigen_measure(&self, w: &Word) -> f64 {
        match w.first() {
            None => 1.0,
            Some(first) => self.measure.cylinder(w) / self.triple.left[first],
        }
    }

    /// One-step Jacobian on the cylinder `[w]`, `|w| ≥ 2`.
    pub fn jacobian(&self, w: &Word, kind: JacobianKind) -> Result<f64> {
        if w.len() < 2 {
            return Err(Error::WordTooShort {
                word: w.clone(),
                needed: 2,
                got: w.len(),
            });
        }
        let edge = w.prefix(2);
        let f = self
            .potential
            .value(&edge)
            .ok_or_else(|| Error::NotAdmissible(edge.clone()))?;
        let exponent = match kind {
            JacobianKind::EigenMeasure => f,
            JacobianKind::Gibbs => {
                let u = &self.triple.left;
                f + u[edge.symbols()[0]].ln() - u[edge.symbols()[1]].ln()
            }
        };
        Ok((exponent - self.pressure).exp())
    }
}

/// Gibbs–Markov measure of an order-1 or order-2 potential:
/// `P(f)_ij = λ_f⁻¹ v_i⁻¹ v_j A(f)_ij`, `π_i = u_i v_i`.
pub fn gibbs_markov(f: &Potential) -> Result<MarkovMeasure> {
    Ok(GibbsState::new(f)?.into_measure())
}

/// `S_m f` on the cylinder `[w]`, for `|w| ≥ m + order − 1`.
pub fn birkhoff_sum(f: &Potential, w: &Word, m: usize) -> Result<f64> {
    let needed = m + f.order - 1;
    if w.len() < needed {
        return Err(Error::WordTooShort {
            word: w.clone(),
            needed,
            got: w.len(),
        });
    }
    (0..m)
        .map(|k| {
            let window = w.window(k, f.order);
            f.value(&window).ok_or(Error::NotAdmissible(window))
        })
        .sum()
}

/// `f̂ = f + log h_f − log h_f∘σ`, with `h_f` the left Perron vector.
pub fn normalize_potential(f: &Potential) -> Result<Potential> {
    Ok(GibbsState::new(f)?.normalized())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianKind {
    /// `λ_f⁻¹ exp f`, the Jacobian of the conformal measure `ν_f`.
    EigenMeasure,
    /// `λ_f⁻¹ exp f̂`, the Jacobian of the Gibbs measure `μ_f`.
    Gibbs,
}

pub fn jacobian(f: &Potential, w: &Word, kind: JacobianKind) -> Result<f64> {
    GibbsState::new(f)?.jacobian(w, kind)
}

/// Result of auditing the Gibbs inequality
/// `C⁻¹ ≤ μ([w|m]) / exp(−mP + S_m f(w)) ≤ C` over cylinders up to a depth.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsAudit {
    pub pressure: f64,
    /// Smallest constant valid at every depth, from the closed form
    /// `π_a v_b λ / (v_a A(f)_bc)`.
    pub constant: f64,
    /// Closed-form extremes of the ratio over the (start, edge) combinations
    /// reachable within the audited depth.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub observed_min: f64,
    pub observed_max: f64,
    pub depth: usize,
    pub cylinders: u64,
}

impl GibbsAudit {
    pub fn within_bounds(&self) -> bool {
        let slack = 1e-12;
        self.observed_min >= (1.0 - slack) / self.constant
            && self.observed_max <= self.constant * (1.0 + slack)
    }
}

/// Audits the Gibbs inequality on every cylinder `[w|m]`, `w ∈ W_A^{m+1}`,
/// `1 ≤ m ≤ depth`.
pub fn gibbs_constant_audit(f: &Potential, depth: usize, cap: u128) -> Result<GibbsAudit> {
    if depth == 0 {
        return Err(Error::Precondition("audit depth must be at least 1".into()));
    }
    let state = GibbsState::new(f)?;
    let base = state.potential.base.clone();
    let requested = base.word_count(depth + 1);
    if requested > cap {
        return Err(Error::EnumerationCap { requested, cap });
    }
    let n = base.n_symbols();
    let table = state.potential.edge_table()?;
    let pressure = state.pressure;
    let (pi, v) = (state.measure.stationary(), state.right());
    let log_p: Vec<f64> = state
        .measure
        .transition()
        .entries()
        .iter()
        .map(|p| p.ln())
        .collect();

    // Closed form: log ratio = log π_a − log v_a + log v_b + P − f(bc), where
    // b is reachable from a in m−1 steps for some m ≤ depth.
    let mut reach: Vec<bool> = (0..n * n).map(|k| k / n == k % n).collect();
    let mut step = reach.clone();
    for _ in 1..depth {
        step = (0..n * n)
            .map(|k| (0..n).any(|c| step[(k / n) * n + c] && base.allows(c, k % n)))
            .collect();
        reach.iter_mut().zip(&step).for_each(|(r, s)| *r |= s);
    }
    let mut closed = (f64::INFINITY, f64::NEG_INFINITY);
    for a in 0..n {
        for (b, c) in base.edges() {
            if reach[a * n + b] {
                let r = (pi[a].ln() - v[a].ln() + v[b].ln() + pressure - table[b * n + c]).exp();
                closed = (closed.0.min(r), closed.1.max(r));
            }
        }
    }
    let mut constant = 1.0f64;
    for a in 0..n {
        for (b, c) in base.edges() {
            let r = (pi[a].ln() - v[a].ln() + v[b].ln() + pressure - table[b * n + c]).exp();
            constant = constant.max(r).max(1.0 / r);
        }
    }

    let visit = |first: usize| {
        let mut acc = (f64::INFINITY, f64::NEG_INFINITY, 0u64);
        // (last symbol, m, log μ([w|m]), S_{m−1} f)
        let mut stack = vec![(first, 1usize, pi[first].ln(), 0.0f64)];
        while let Some((last, m, log_mu, partial)) = stack.pop() {
            for next in (0..n).filter(|&c| base.allows(last, c)) {
                let birkhoff = partial + table[last * n + next];
                let ratio = (log_mu + m as f64 * pressure - birkhoff).exp();
                acc = (acc.0.min(ratio), acc.1.max(ratio), acc.2 + 1);
                if m < depth {
                    stack.push((next, m + 1, log_mu + log_p[last * n + next], birkhoff));
                }
            }
        }
        acc
    };
    let (observed_min, observed_max, cylinders) = (0..n).into_par_iter().map(visit).reduce(
        || (f64::INFINITY, f64::NEG_INFINITY, 0),
        |a, b| (a.0.min(b.0), a.1.max(b.1), a.2 + b.2),
    );

    Ok(GibbsAudit {
        pressure,
        constant,
        ratio_min: closed.0,
        ratio_max: closed.1,
        observed_min,
        observed_max,
        depth,
        cylinders,
    })
}
