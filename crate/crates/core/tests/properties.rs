mod common;

use common::*;
use gibbs_spectra::perron::{
    cycle_mean, cycle_mean_extremes, perron, perron_derivative, perron_vector_by_linear_solve,
    stationary_distribution, ExpFamily, MatrixFamily, PerronOptions, PositiveMatrix,
};
use gibbs_spectra::rigidity::{
    classify_2x2, g_n_membership, random_stochastic, BernoulliKind, DEFAULT_GAP_TOL,
};
use gibbs_spectra::shift::{Permutation, TransitionMatrix, Word};
use gibbs_spectra::sim::{
    empirical_local_entropy, empirical_spectrum_histogram, sample_path, stream_rng, Buckets,
};
use gibbs_spectra::spectrum::{q_grid, spectra_equal, BetaFunction};
use gibbs_spectra::thermo::{
    gibbs_markov, normalize_potential, pressure, pressure_by_preimages, GibbsState, MarkovMeasure,
    Potential,
};
use proptest::prelude::*;
use rand::Rng;

fn test_matrices() -> Vec<TransitionMatrix> {
    vec![
        full2(),
        TransitionMatrix::full(3).unwrap(),
        TransitionMatrix::golden_mean(),
        TransitionMatrix::reverse_golden_mean(),
        TransitionMatrix::ring3(),
    ]
}

fn power_sum(a: &TransitionMatrix, k: usize) -> u128 {
    let n = a.n_symbols();
    let mut m: Vec<u128> = (0..n * n).map(|x| u128::from(x / n == x % n)).collect();
    for _ in 0..k {
        let mut next = vec![0u128; n * n];
        for i in 0..n {
            for l in 0..n {
                for j in (0..n).filter(|&j| a.allows(l, j)) {
                    next[i * n + j] += m[i * n + l];
                }
            }
        }
        m = next;
    }
    m.iter().sum()
}

fn full2_table() -> impl Strategy<Value = Potential> {
    prop::collection::vec(-2.0..2.0f64, 4)
        .prop_map(|t| Potential::from_edge_table(full2(), &t).unwrap())
}

fn assert_stochastic(mu: &MarkovMeasure) {
    let p = mu.transition();
    for (i, row) in p.row_sums().iter().enumerate() {
        assert!((row - 1.0).abs() < 1e-12, "row {i} sums to {row}");
    }
    assert!(p.entries().iter().all(|&x| x >= 0.0));
    let pi = mu.stationary();
    assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let pi_p = p.vec_mul(pi);
    for (a, b) in pi.iter().zip(&pi_p) {
        assert!((a - b).abs() < 1e-12);
    }
}

// --- shift ---------------------------------------------------------------

#[test]
fn word_counts_match_matrix_powers() {
    for a in test_matrices() {
        for n in 2..=10 {
            assert_eq!(a.word_count(n), power_sum(&a, n - 1), "{a:?} n={n}");
            assert_eq!(
                a.admissible_words(n, u128::MAX).unwrap().len() as u128,
                a.word_count(n)
            );
        }
    }
}

#[test]
fn prefixes_and_suffixes_are_admissible() {
    for a in test_matrices() {
        for n in 1..=7 {
            let shorter = a.admissible_words(n, u128::MAX).unwrap();
            for w in a.admissible_words(n + 1, u128::MAX).unwrap() {
                assert!(shorter.binary_search(&w.prefix(n)).is_ok());
                assert!(shorter.binary_search(&w.shifted()).is_ok());
            }
        }
    }
}

#[test]
fn recoding_translates_bijectively() {
    for a in test_matrices() {
        for order in 2..=4 {
            let hb = a.higher_block(order, u128::MAX).unwrap();
            for m in 1..=6 {
                let original = a.admissible_words(m + order - 2, u128::MAX).unwrap();
                let mut images: Vec<Word> = hb
                    .matrix
                    .admissible_words(m, u128::MAX)
                    .unwrap()
                    .iter()
                    .map(|w| {
                        let t = hb.translate(w);
                        assert_eq!(hb.encode(&t).as_ref(), Some(w));
                        t
                    })
                    .collect();
                images.sort();
                assert_eq!(images, original, "order {order}, m {m}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_preserves_counts(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = stream_rng(seed, 0);
        let a = random_aperiodic(n, &mut rng);
        let mut images: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            images.swap(k, rng.gen_range(0..=k));
        }
        let check = a.permuted(&Permutation::new(images).unwrap()).unwrap();
        prop_assert_eq!(check.valid, check.matrix == a);
        prop_assert_eq!(check.matrix.aperiodicity_power(), a.aperiodicity_power());
        for len in 1..=8 {
            prop_assert_eq!(check.matrix.word_count(len), a.word_count(len));
        }
    }
}

// --- perron --------------------------------------------------------------

#[test]
fn perron_agrees_with_linear_solve() {
    for trial in 0..100u64 {
        let mut rng = stream_rng(2024, trial);
        let n = 2 + (trial as usize % 5);
        let a = random_aperiodic(n, &mut rng);
        let m = random_positive(&a, &mut rng);
        let t = perron(&m, &PerronOptions::default()).unwrap();
        let v = perron_vector_by_linear_solve(&m, t.root).unwrap();
        for (x, y) in t.right.iter().zip(&v) {
            assert!((x - y).abs() < 1e-10, "trial {trial}: {x} vs {y}");
        }
    }
}

#[test]
fn root_of_powers_is_power_of_root() {
    for trial in 0..20u64 {
        let mut rng = stream_rng(7, trial);
        let a = random_aperiodic(2 + trial as usize % 4, &mut rng);
        let m = random_positive(&a, &mut rng);
        let root = perron(&m, &PerronOptions::default()).unwrap().root;
        let mut power = m.clone();
        for k in 2..=3 {
            power = power.matmul(&m).unwrap();
            let rk = perron(&power, &PerronOptions::default()).unwrap().root;
            assert!((rk / root.powi(k) - 1.0).abs() < 1e-10, "k={k}");
        }
    }
}

#[test]
fn stochastic_matrices_have_unit_root() {
    for trial in 0..30u64 {
        let mut rng = stream_rng(8, trial);
        let a = random_aperiodic(2 + trial as usize % 4, &mut rng);
        let p = random_stochastic(&a, &mut rng);
        let t = perron(&p, &PerronOptions::default()).unwrap();
        assert!((t.root - 1.0).abs() < 1e-12);
        let n = a.n_symbols() as f64;
        assert!(t.right.iter().all(|v| (v - 1.0 / n).abs() < 1e-12));
        let pi = stationary_distribution(&p).unwrap();
        let total: f64 = t.left.iter().sum();
        for (u, s) in t.left.iter().zip(&pi) {
            assert!((u / total - s).abs() < 1e-12);
        }
    }
}

#[test]
fn derivative_matches_finite_difference() {
    for trial in 0..20u64 {
        let mut rng = stream_rng(9, trial);
        let a = random_aperiodic(2 + trial as usize % 4, &mut rng);
        let n = a.n_symbols();
        let offset: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let slope: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let family = ExpFamily::new(a, offset, slope).unwrap();
        let opts = PerronOptions::default();
        let q0 = rng.gen_range(-2.0..2.0);
        let h = 1e-6;
        let root = |q: f64| perron(&family.at(q).unwrap(), &opts).unwrap().root;
        let fd = (root(q0 + h) - root(q0 - h)) / (2.0 * h);
        let exact = perron_derivative(&family, q0, &opts).unwrap();
        assert!(
            (exact - fd).abs() <= 1e-6 * exact.abs().max(1.0),
            "{exact} vs {fd}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cycle_means_flip_under_negation(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = stream_rng(seed, 1);
        let a = random_aperiodic(n, &mut rng);
        let w: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        let plus = cycle_mean_extremes(&a, &w);
        let minus = cycle_mean_extremes(&a, &neg);
        prop_assert!((plus.min + minus.max).abs() < 1e-12);
        prop_assert!((plus.max + minus.min).abs() < 1e-12);
        prop_assert!((cycle_mean(&w, n, &plus.min_cycle) - plus.min).abs() < 1e-12);
        prop_assert!((cycle_mean(&w, n, &plus.max_cycle) - plus.max).abs() < 1e-12);
        for cycle in [&plus.min_cycle, &plus.max_cycle] {
            let closed = cycle.iter().zip(cycle.iter().cycle().skip(1));
            for (&i, &j) in closed {
                prop_assert!(a.allows(i, j));
            }
        }
    }
}

// --- thermo --------------------------------------------------------------

#[test]
fn cylinder_masses_are_additive() {
    for named in test_potentials() {
        let mu = gibbs_markov(&named.f).unwrap();
        let a = named.f.base();
        for len in 0..=7 {
            let words = if len == 0 {
                vec![Word::empty()]
            } else {
                a.admissible_words(len, u128::MAX).unwrap()
            };
            for w in words {
                let children: f64 = (0..a.n_symbols())
                    .map(|s| w.extended(s))
                    .filter(|c| a.is_admissible(c))
                    .map(|c| mu.cylinder(&c))
                    .sum();
                assert!(
                    (mu.cylinder(&w) - children).abs() < 1e-12,
                    "{} {w}",
                    named.name
                );
            }
        }
    }
}

#[test]
fn transfer_operator_fixes_constants_after_normalization() {
    for named in test_potentials() {
        let state = GibbsState::new(&named.f).unwrap();
        let hat = state.normalized();
        let a = named.f.base();
        for j in 0..a.n_symbols() {
            let total: f64 = (0..a.n_symbols())
                .filter(|&i| a.allows(i, j))
                .map(|i| hat.value(&Word::new(vec![i, j])).unwrap().exp())
                .sum();
            assert!(
                (total - state.lambda()).abs() < 1e-10 * state.lambda(),
                "{}",
                named.name
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constant_shift_identity(f in full2_table(), c in -3.0..3.0f64) {
        let g = f.shifted(c);
        let (sf, sg) = (GibbsState::new(&f).unwrap(), GibbsState::new(&g).unwrap());
        let (fh, gh) = (sf.normalized(), sg.normalized());
        for (w, v) in fh.values() {
            prop_assert!((gh.value(w).unwrap() - v - c).abs() < 1e-10);
        }
        prop_assert!(((sf.lambda() / sg.lambda()).ln() + c).abs() < 1e-10);
    }

    #[test]
    fn normalization_preserves_measure_and_pressure(f in full2_table()) {
        let hat = normalize_potential(&f).unwrap();
        let (p, q) = (gibbs_markov(&f).unwrap(), gibbs_markov(&hat).unwrap());
        prop_assert!(p.transition().sup_distance(q.transition()) < 1e-10);
        prop_assert!((pressure(&f).unwrap() - pressure(&hat).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn normalization_preserves_measure_on_test_potentials() {
    for named in test_potentials() {
        let hat = normalize_potential(&named.f).unwrap();
        let (p, q) = (gibbs_markov(&named.f).unwrap(), gibbs_markov(&hat).unwrap());
        assert!(
            p.transition().sup_distance(q.transition()) < 1e-10,
            "{}",
            named.name
        );
        assert!((pressure(&named.f).unwrap() - pressure(&hat).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn preimage_pressure_matches_perron_pressure() {
    for named in test_potentials() {
        let p = pressure(&named.f).unwrap();
        for terminal in 0..named.f.base().n_symbols() {
            let oracle = pressure_by_preimages(&named.f, terminal, 60).unwrap();
            assert!(
                (oracle - p).abs() < 1e-8,
                "{} terminal {terminal}: {oracle} vs {p}",
                named.name
            );
        }
    }
}

#[test]
fn tilted_gibbs_measures_are_valid() {
    for named in test_potentials() {
        for q in -5..=5 {
            assert_stochastic(&gibbs_markov(&named.f.scaled(q as f64)).unwrap());
        }
    }
}

// --- spectrum ------------------------------------------------------------

#[test]
fn beta_anchors_convexity_and_decrease() {
    let grid = q_grid(-20.0, 20.0, 0.25);
    for named in test_potentials() {
        let b = BetaFunction::new(&named.f).unwrap();
        assert!(
            (b.beta(0.0).unwrap() - b.topological_entropy()).abs() < 1e-10,
            "{}",
            named.name
        );
        assert!(b.beta(1.0).unwrap().abs() < 1e-10, "{}", named.name);
        let betas: Vec<f64> = grid.iter().map(|&q| b.beta(q).unwrap()).collect();
        for w in betas.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9, "{}", named.name);
        }
        if !b.is_degenerate() {
            for w in betas.windows(2) {
                assert!(w[1] < w[0], "{}", named.name);
            }
        }
    }
}

#[test]
fn legendre_duality_and_alpha_crosscheck() {
    let grid = q_grid(-10.0, 10.0, 0.5);
    for named in test_potentials() {
        let b = BetaFunction::new(&named.f).unwrap();
        let curve = b.sample(&grid).unwrap();
        for s in &curve.samples {
            assert!(
                (s.entropy - s.entropy_rate).abs() < 1e-8,
                "{} q={}",
                named.name,
                s.q
            );
            assert!(!s.crosscheck_failed);
            let by_measure = b.alpha_by_measure(s.q).unwrap();
            assert!(
                (s.alpha - by_measure).abs() < 1e-9,
                "{} q={}",
                named.name,
                s.q
            );
        }
    }
}

#[test]
fn alpha_reaches_cycle_mean_endpoints() {
    for named in well_separated_2x2() {
        let b = BetaFunction::new(&named.f).unwrap();
        let range = b.alpha_range();
        assert!(
            (b.alpha(30.0).unwrap() - range.min).abs() < 1e-3,
            "{}",
            named.name
        );
        assert!(
            (b.alpha(-30.0).unwrap() - range.max).abs() < 1e-3,
            "{}",
            named.name
        );
    }
}

#[test]
fn recoding_preserves_beta() {
    let grid = q_grid(-20.0, 20.0, 0.25);
    for seed in 0..5 {
        let f = random_potential(&full2(), 3, 300 + seed);
        let (via_recode, direct) = (
            BetaFunction::new(&f).unwrap(),
            BetaFunction::new(&two_block_model(&f)).unwrap(),
        );
        for &q in &grid {
            assert!((via_recode.beta(q).unwrap() - direct.beta(q).unwrap()).abs() < 1e-10);
        }
    }
}

// --- rigidity ------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_ignores_constants(f in full2_table(), c in -5.0..5.0f64) {
        let (a, b) = (classify_2x2(&f).unwrap(), classify_2x2(&f.shifted(c)).unwrap());
        prop_assert_eq!(a.in_e, b.in_e);
        prop_assert_eq!(a.detected.map(|d| d.kind), b.detected.map(|d| d.kind));
        prop_assert_eq!(a.g2.member, b.g2.member);
    }

    #[test]
    fn gn_verdict_is_idempotent(f in full2_table()) {
        let hat = normalize_potential(&f).unwrap();
        prop_assert_eq!(
            g_n_membership(&f, DEFAULT_GAP_TOL).unwrap().member,
            g_n_membership(&hat, DEFAULT_GAP_TOL).unwrap().member
        );
    }

    #[test]
    fn twins_share_spectra_but_not_measures(alpha in 0.05..0.45f64, kind in prop::bool::ANY, c in -2.0..2.0f64) {
        let f = if kind { log_p1(alpha) } else { log_p2(alpha) }.shifted(c);
        let report = classify_2x2(&f).unwrap();
        let detected = report.detected.unwrap();
        prop_assert_eq!(detected.kind, if kind { BernoulliKind::P1 } else { BernoulliKind::P2 });
        let twin = report.twin.unwrap();
        let grid = q_grid(-20.0, 20.0, 1.0);
        prop_assert!(spectra_equal(&f, &twin, &grid, 1e-9).unwrap().is_equal());
        let gap = gibbs_markov(&f).unwrap().transition()
            .sup_distance(gibbs_markov(&twin).unwrap().transition());
        prop_assert!(gap >= (1.0 - 2.0 * alpha).abs() - 1e-12);
    }
}

#[test]
fn gn_verdict_is_idempotent_on_examples() {
    for f in [
        log_p1(1.0 / 3.0),
        log_p2(1.0 / 3.0),
        skewed(),
        random_potential(&TransitionMatrix::ring3(), 2, 5),
    ] {
        let hat = normalize_potential(&f).unwrap();
        let (a, b) = (
            g_n_membership(&f, DEFAULT_GAP_TOL).unwrap(),
            g_n_membership(&hat, DEFAULT_GAP_TOL).unwrap(),
        );
        assert_eq!(a.member, b.member);
        assert_eq!(a.collisions, b.collisions);
    }
}

#[test]
fn stochastic_ratios_are_not_constant() {
    let bases = [full2(), TransitionMatrix::full(3).unwrap()];
    for base in bases {
        assert!(base.out_degrees().condition_a1);
        let words = base.admissible_words(2, u128::MAX).unwrap();
        for trial in 0..5u64 {
            let mut rng = stream_rng(41, trial);
            let p = random_stochastic(&base, &mut rng);
            let ratio = |m: &PositiveMatrix, w: &Word| m.get(w.symbols()[0], w.symbols()[1]);
            for ij in &words {
                for kl in words.iter().filter(|kl| *kl != ij) {
                    let target = ratio(&p, ij) / ratio(&p, kl);
                    let found = (0..100).any(|_| {
                        let q = random_stochastic(&base, &mut rng);
                        (ratio(&q, ij) / ratio(&q, kl) - target).abs() > 1e-9
                    });
                    assert!(found, "{ij} / {kl}");
                }
            }
        }
    }
}

// --- sim -----------------------------------------------------------------

#[test]
fn sampling_is_deterministic_across_thread_counts() {
    let mu = gibbs_markov(&log_p1(1.0 / 3.0)).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| empirical_local_entropy(&mu, 500, 400, 77, &Buckets::default()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one.mean.to_bits(), run(3).mean.to_bits());
    assert_eq!(
        sample_path(&mu, 50, 3).unwrap(),
        sample_path(&mu, 50, 3).unwrap()
    );
}

#[test]
fn sampled_exponents_stay_in_range() {
    let n = 400;
    for named in well_separated_2x2() {
        let b = BetaFunction::new(&named.f).unwrap();
        let range = b.alpha_range();
        let rows =
            empirical_spectrum_histogram(&named.f, n, 200, &[-3.0, 0.0, 1.0, 4.0], 5).unwrap();
        for row in rows {
            assert!(
                row.min >= range.min - 5.0 / n as f64,
                "{} q={}",
                named.name,
                row.q
            );
            assert!(
                row.max <= range.max + 5.0 / n as f64,
                "{} q={}",
                named.name,
                row.q
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn histogram_mass_and_mean(seed in any::<u64>(), buckets in 1usize..40) {
        let mu = gibbs_markov(&skewed()).unwrap();
        let stats = empirical_local_entropy(&mu, 200, 300, seed, &Buckets::Auto(buckets)).unwrap();
        prop_assert!((stats.histogram.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(stats.histogram.total(), 300);
        prop_assert!((stats.histogram.mean_estimate() - stats.mean).abs() <= stats.histogram.resolution());
    }
}
