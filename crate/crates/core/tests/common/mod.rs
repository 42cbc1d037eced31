#![allow(dead_code)]

use gibbs_spectra::perron::PositiveMatrix;
use gibbs_spectra::rigidity::{p1_matrix, p2_matrix};
use gibbs_spectra::shift::{TransitionMatrix, Word};
use gibbs_spectra::sim::stream_rng;
use gibbs_spectra::thermo::Potential;
use rand::Rng;

pub struct Named {
    pub name: &'static str,
    pub f: Potential,
}

pub fn full2() -> TransitionMatrix {
    TransitionMatrix::full(2).unwrap()
}

pub fn word(s: &str) -> Word {
    s.parse().unwrap()
}

pub fn log_p1(alpha: f64) -> Potential {
    Potential::log_of(&p1_matrix(alpha).unwrap())
}

pub fn log_p2(alpha: f64) -> Potential {
    Potential::log_of(&p2_matrix(alpha).unwrap())
}

pub fn log_matrix(base: TransitionMatrix, rows: &[&[f64]]) -> Potential {
    let entries = rows.iter().flat_map(|r| r.iter().copied()).collect();
    Potential::log_of(&PositiveMatrix::new(base, entries).unwrap())
}

pub fn skewed() -> Potential {
    log_matrix(full2(), &[&[0.7, 0.3], &[0.4, 0.6]])
}

/// Potential of the given order with values drawn uniformly from `[-1, 1]`.
pub fn random_potential(base: &TransitionMatrix, order: usize, seed: u64) -> Potential {
    let mut rng = stream_rng(seed, 0);
    let words = base.admissible_words(order, u128::MAX).unwrap();
    let values = words
        .into_iter()
        .map(|w| (w, rng.gen_range(-1.0..1.0)))
        .collect();
    Potential::new(base.clone(), order, values).unwrap()
}

/// The standing test potentials: the named 2×2 examples plus seeded random
/// potentials on the golden mean, ring and full 3-shift.
pub fn test_potentials() -> Vec<Named> {
    vec![
        Named {
            name: "log P1(1/3)",
            f: log_p1(1.0 / 3.0),
        },
        Named {
            name: "log P2(1/3)",
            f: log_p2(1.0 / 3.0),
        },
        Named {
            name: "log P1(1/4)",
            f: log_p1(0.25),
        },
        Named {
            name: "log [[.7,.3],[.4,.6]]",
            f: skewed(),
        },
        Named {
            name: "full-2 constant",
            f: Potential::constant(full2(), 0.3),
        },
        Named {
            name: "golden mean zero",
            f: Potential::constant(TransitionMatrix::golden_mean(), 0.0),
        },
        Named {
            name: "golden mean random",
            f: random_potential(&TransitionMatrix::golden_mean(), 2, 11),
        },
        Named {
            name: "ring-3 random",
            f: random_potential(&TransitionMatrix::ring3(), 2, 12),
        },
        Named {
            name: "full-3 random",
            f: random_potential(&TransitionMatrix::full(3).unwrap(), 2, 13),
        },
    ]
}

/// Potentials on N = 2 bases with a clear gap between the extreme cycle
/// means, for which `α(±30)` has essentially reached the endpoints.
pub fn well_separated_2x2() -> Vec<Named> {
    vec![
        Named {
            name: "log P1(1/3)",
            f: log_p1(1.0 / 3.0),
        },
        Named {
            name: "log P2(1/3)",
            f: log_p2(1.0 / 3.0),
        },
        Named {
            name: "log P1(1/4)",
            f: log_p1(0.25),
        },
        Named {
            name: "golden mean",
            f: Potential::from_edge_table(TransitionMatrix::golden_mean(), &[0.5, 1.0, -1.0, 0.0])
                .unwrap(),
        },
    ]
}

/// A random aperiodic 0-1 matrix of size `n`, drawn by rejection.
pub fn random_aperiodic(n: usize, rng: &mut impl Rng) -> TransitionMatrix {
    loop {
        let rows = (0..n)
            .map(|_| (0..n).map(|_| u8::from(rng.gen_bool(0.7))).collect())
            .collect();
        if let Ok(a) = TransitionMatrix::new(rows) {
            return a;
        }
    }
}

/// Random positive entries on the support of `base`.
pub fn random_positive(base: &TransitionMatrix, rng: &mut impl Rng) -> PositiveMatrix {
    let n = base.n_symbols();
    let entries = (0..n * n)
        .map(|k| {
            if base.allows(k / n, k % n) {
                rng.gen_range(0.1..2.0)
            } else {
                0.0
            }
        })
        .collect();
    PositiveMatrix::new(base.clone(), entries).unwrap()
}

/// The 4-state model on 2-words `ab → bc` carrying `f(abc)`, built by hand.
pub fn two_block_model(f: &Potential) -> Potential {
    let rows = (0..4)
        .map(|s| (0..4).map(|t| u8::from(s % 2 == t / 2)).collect())
        .collect();
    let base = TransitionMatrix::new(rows).unwrap();
    Potential::from_fn(base, 2, |w| {
        let (s, t) = (w.symbols()[0], w.symbols()[1]);
        f.value(&Word::new(vec![s / 2, s % 2, t % 2])).unwrap()
    })
    .unwrap()
}
