//! Rigidity classifications: Bernoulli/reflection detection on the full
//! 2-shift, automatic rigidity on the non-full 2×2 shifts, and membership in
//! the set `G_n` of potentials whose normalized version separates n-words.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perron::{perron, PerronOptions, PositiveMatrix};
use crate::shift::{TransitionMatrix, Word, DEFAULT_WORD_CAP};
use crate::sim::stream_rng;
use crate::thermo::{gibbs_markov, normalize_potential, Potential};

/// Row-comparison tolerance when matching `P(f)` against `P₁(α)`, `P₂(α)`.
pub const DETECTION_TOL: f64 = 1e-10;
/// Default relative gap below which two normalized values collide.
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

/// `P₁(α) = [[1−α, α], [1−α, α]]`.
pub fn p1_matrix(alpha: f64) -> Result<PositiveMatrix> {
    check_unit_interval(alpha)?;
    PositiveMatrix::new(full2(), vec![1.0 - alpha, alpha, 1.0 - alpha, alpha])
}

/// `P₂(α) = [[1−α, α], [α, 1−α]]`.
pub fn p2_matrix(alpha: f64) -> Result<PositiveMatrix> {
    check_unit_interval(alpha)?;
    PositiveMatrix::new(full2(), vec![1.0 - alpha, alpha, alpha, 1.0 - alpha])
}

fn check_unit_interval(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("α = {alpha} is not in (0, 1)")))
    }
}

fn full2() -> TransitionMatrix {
    TransitionMatrix::full(2).expect("full shift")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftCase {
    FullTwoShift,
    NonFull2x2,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BernoulliKind {
    /// Both rows equal: `P(f) = P₁(α)`.
    P1,
    /// Rows are reflections: `P(f) = P₂(α)`.
    P2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detected {
    pub kind: BernoulliKind,
    pub alpha: f64,
}

/// Membership of a potential in `G_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GnMembership {
    pub order: usize,
    pub member: bool,
    /// Smallest relative gap between normalized values of distinct words.
    pub margin: f64,
    pub collisions: Vec<(Word, Word)>,
    /// `f̂` on `W_A^order`.
    pub normalized: BTreeMap<Word, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigidityReport {
    pub case: ShiftCase,
    /// Whether `f ∈ E` (full 2-shift only).
    pub in_e: Option<bool>,
    pub detected: Option<Detected>,
    /// A potential with the same spectrum whose system is not isomorphic.
    pub twin: Option<Potential>,
    /// `[f]₂ = [f]₁`.
    pub strong_rigid: Option<bool>,
    /// `[f]₃ = [f]₁`.
    pub weak_rigid: Option<bool>,
    pub g2: GnMembership,
    pub condition_a1: bool,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Classifies a potential: full verdicts on 2×2 bases, the `G₂` and (A.1)
/// data only otherwise.
pub fn classify(f: &Potential) -> Result<RigidityReport> {
    if f.base().n_symbols() == 2 && f.order() <= 2 {
        return classify_2x2(f);
    }
    Ok(RigidityReport {
        case: ShiftCase::General,
        in_e: None,
        detected: None,
        twin: None,
        strong_rigid: None,
        weak_rigid: None,
        g2: g_n_membership(f, DEFAULT_GAP_TOL)?,
        condition_a1: f.base().out_degrees().condition_a1,
    })
}

/// Detects whether `P(f)` is `P₁(α)` or `P₂(α)` with `α ≠ 1/2`.
pub fn detect_bernoulli(f: &Potential) -> Result<Option<Detected>> {
    if !f.base().is_full() || f.base().n_symbols() != 2 {
        return Err(Error::Precondition(
            "detection needs the full 2-shift".into(),
        ));
    }
    let p = gibbs_markov(f)?;
    let p = p.transition();
    let alpha = p.get(0, 1);
    if (alpha - 0.5).abs() <= DETECTION_TOL {
        return Ok(None);
    }
    let close = |a: f64, b: f64| (a - b).abs() <= DETECTION_TOL;
    let kind = if close(p.get(0, 0), p.get(1, 0)) && close(p.get(0, 1), p.get(1, 1)) {
        Some(BernoulliKind::P1)
    } else if close(p.get(1, 0), p.get(0, 1)) && close(p.get(1, 1), p.get(0, 0)) {
        Some(BernoulliKind::P2)
    } else {
        None
    };
    Ok(kind.map(|kind| Detected { kind, alpha }))
}

/// Rigidity report for 2×2 aperiodic bases.
pub fn classify_2x2(f: &Potential) -> Result<RigidityReport> {
    let n = f.base().n_symbols();
    if n != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: n,
        });
    }
    let g2 = g_n_membership(f, DEFAULT_GAP_TOL)?;
    let condition_a1 = f.base().out_degrees().condition_a1;
    if !f.base().is_full() {
        return Ok(RigidityReport {
            case: ShiftCase::NonFull2x2,
            in_e: None,
            detected: None,
            twin: None,
            strong_rigid: Some(true),
            weak_rigid: Some(true),
            g2,
            condition_a1,
        });
    }
    let detected = detect_bernoulli(f)?;
    let twin = detected
        .map(|d| bernoulli_twin(f, d.alpha, d.kind))
        .transpose()?;
    let in_e = detected.is_none();
    Ok(RigidityReport {
        case: ShiftCase::FullTwoShift,
        in_e: Some(in_e),
        detected,
        twin,
        strong_rigid: Some(in_e),
        weak_rigid: Some(in_e),
        g2,
        condition_a1,
    })
}

/// The partner with the same entropy spectrum: `log P₂(α)` for a `P₁(α)`
/// potential and `log P₁(α)` for a `P₂(α)` one.
pub fn bernoulli_twin(f: &Potential, alpha: f64, kind: BernoulliKind) -> Result<Potential> {
    if !f.base().is_full() || f.base().n_symbols() != 2 {
        return Err(Error::Precondition("twins live on the full 2-shift".into()));
    }
    if (alpha - 0.5).abs() <= DETECTION_TOL {
        return Err(Error::Precondition(
            "α = 1/2 has no twin: P₁(1/2) = P₂(1/2)".into(),
        ));
    }
    let m = match kind {
        BernoulliKind::P1 => p2_matrix(alpha)?,
        BernoulliKind::P2 => p1_matrix(alpha)?,
    };
    Ok(Potential::log_of(&m))
}

/// `f̂` on `W_A^n` for a potential of order `n` (order 1 is treated as 2).
fn normalized_table(f: &Potential) -> Result<(usize, BTreeMap<Word, f64>)> {
    let reduced = f.reduce(DEFAULT_WORD_CAP)?;
    let hat = normalize_potential(&reduced.potential)?;
    let order = f.order().max(2);
    let table = match &reduced.recoding {
        None => hat.values().clone(),
        Some(recoding) => hat
            .values()
            .iter()
            .map(|(w, &v)| (recoding.translate(w), v))
            .collect(),
    };
    Ok((order, table))
}

/// Decides `f ∈ G_n`: the normalized potential takes pairwise distinct
/// values (relative gap above `gap_tol`) on distinct admissible n-words.
pub fn g_n_membership(f: &Potential, gap_tol: f64) -> Result<GnMembership> {
    let (order, normalized) = normalized_table(f)?;
    let entries: Vec<(&Word, f64)> = normalized.iter().map(|(w, &v)| (w, v)).collect();
    let mut margin = f64::INFINITY;
    let mut collisions = Vec::new();
    for (k, (w1, v1)) in entries.iter().enumerate() {
        for (w2, v2) in &entries[k + 1..] {
            let gap = relative_gap(*v1, *v2);
            margin = margin.min(gap);
            if gap <= gap_tol {
                collisions.push(((*w1).clone(), (*w2).clone()));
            }
        }
    }
    Ok(GnMembership {
        order,
        member: collisions.is_empty(),
        margin,
        collisions,
        normalized,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `A(ij)/A(kl) − v_i v_l / (v_j v_k)` with the right Perron vector.
    RightV,
    /// `A(ij)/A(kl) − u_j u_k / (u_i u_l)` with the left Perron vector.
    LeftU,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairCheck {
    pub ij: Word,
    pub kl: Word,
    pub expression: f64,
    pub zero: bool,
    /// `f̂(ij) = f̂(kl)` for `f = log A`.
    pub definitional_collision: bool,
    pub agrees: bool,
}

/// Evaluates the pair expression for every ordered pair of distinct 2-words
/// and compares each verdict with the definitional collision test.
pub fn appendix_condition_check(
    af: &PositiveMatrix,
    orientation: Orientation,
    tol: f64,
) -> Result<Vec<PairCheck>> {
    let triple = perron(af, &PerronOptions::default())?;
    let (u, v) = (&triple.left, &triple.right);
    let hat = normalize_potential(&Potential::log_of(af))?;
    let words = af.base().admissible_words(2, DEFAULT_WORD_CAP)?;
    let mut checks = Vec::new();
    for ij in &words {
        for kl in &words {
            if ij == kl {
                continue;
            }
            let (i, j) = (ij.symbols()[0], ij.symbols()[1]);
            let (k, l) = (kl.symbols()[0], kl.symbols()[1]);
            let ratio = af.get(i, j) / af.get(k, l);
            let expression = match orientation {
                Orientation::RightV => ratio - v[i] * v[l] / (v[j] * v[k]),
                Orientation::LeftU => ratio - u[j] * u[k] / (u[i] * u[l]),
            };
            let zero = expression.abs() <= tol * ratio.max(1.0);
            let definitional_collision =
                relative_gap(hat.value(ij).unwrap(), hat.value(kl).unwrap()) <= tol;
            checks.push(PairCheck {
                ij: ij.clone(),
                kl: kl.clone(),
                expression,
                zero,
                definitional_collision,
                agrees: zero == definitional_collision,
            });
        }
    }
    Ok(checks)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityProbe {
    pub trials: usize,
    pub members: usize,
    pub fraction: f64,
    /// Shrunken-ball probes run around members, and how many left `G_n`.
    pub openness_probes: usize,
    pub openness_failures: usize,
}

const OPENNESS_SUBTRIALS: usize = 10;

fn perturbed(f: &Potential, radius: f64, rng: &mut impl Rng) -> Result<Potential> {
    let values = f
        .values()
        .iter()
        .map(|(w, &v)| {
            let delta = if radius > 0.0 {
                rng.gen_range(-radius..=radius)
            } else {
                0.0
            };
            (w.clone(), v + delta)
        })
        .collect();
    Potential::new(f.base().clone(), f.order(), values)
}

/// Perturbs every word value independently in `[−ε, ε]` and reports how
/// often the result lies in `G_n`; each member found is re-probed in a ball
/// of radius `ε/100`.
pub fn density_probe(f: &Potential, radius: f64, trials: usize, seed: u64) -> Result<DensityProbe> {
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial as u64);
            let g = perturbed(f, radius, &mut rng)?;
            if !g_n_membership(&g, DEFAULT_GAP_TOL)?.member {
                return Ok((false, 0));
            }
            let mut failures = 0;
            for _ in 0..OPENNESS_SUBTRIALS {
                let h = perturbed(&g, radius / 100.0, &mut rng)?;
                if !g_n_membership(&h, DEFAULT_GAP_TOL)?.member {
                    failures += 1;
                }
            }
            Ok((true, failures))
        })
        .collect::<Result<Vec<_>>>()?;
    let members = outcomes.iter().filter(|(m, _)| *m).count();
    Ok(DensityProbe {
        trials,
        members,
        fraction: if trials == 0 {
            0.0
        } else {
            members as f64 / trials as f64
        },
        openness_probes: members * OPENNESS_SUBTRIALS,
        openness_failures: outcomes.iter().map(|(_, f)| f).sum(),
    })
}

/// A random row-stochastic matrix on the support of `base`.
pub fn random_stochastic(base: &TransitionMatrix, rng: &mut impl Rng) -> PositiveMatrix {
    let n = base.n_symbols();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let mut total = 0.0;
        for j in (0..n).filter(|&j| base.allows(i, j)) {
            let x: f64 = rng.gen_range(0.05..1.0);
            entries[i * n + j] = x;
            total += x;
        }
        entries[i * n..(i + 1) * n]
            .iter_mut()
            .for_each(|x| *x /= total);
    }
    PositiveMatrix::new(base.clone(), entries).expect("random stochastic matrix")
}
