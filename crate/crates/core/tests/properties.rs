use jodscale::ingest::{build_observer_matrices, parse_trials, pool_matrices};
use jodscale::outliers::outlier_scores;
use jodscale::scaling::{
    log_likelihood_gradient, prob_to_jod, scale_mle, total_log_likelihood, CountMatrix,
    ScaleOptions, JOD_SIGMA,
};
use jodscale::simulate::{apply_equal_split, simulate_experiment, Design, SimConfig, TieModel, TieTally};
use jodscale::stats::{bootstrap_scale, pairwise_significance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Connected count matrices: a chain of compared neighbours plus random
/// extra pairs.
fn connected_counts(max_n: usize) -> impl Strategy<Value = CountMatrix> {
    (2..=max_n)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((0u32..=20, 0u32..=20), n * n),
                prop::collection::vec((1u32..=20, 0u32..=20), n - 1),
            )
        })
        .prop_map(|(n, extra, chain)| {
            let mut m = CountMatrix::zeros(n);
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = extra[i * n + j];
                    m.set(i, j, a);
                    m.set(j, i, b);
                }
            }
            for (i, &(a, b)) in chain.iter().enumerate() {
                m.set(i + 1, i, a);
                m.set(i, i + 1, b);
            }
            m
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transposed_counts_negate_scores(m in connected_counts(5)) {
        let opts = ScaleOptions::default();
        let q = scale_mle(&m, &opts).unwrap().jod;
        let t = scale_mle(&m.transpose(), &opts).unwrap().jod;
        prop_assert_eq!(q[0], 0.0);
        for (a, b) in q.iter().zip(&t) {
            prop_assert!((a + b).abs() < 1e-6, "{:?} vs {:?}", q, t);
        }
    }

    #[test]
    fn relabelling_permutes_scores(m in connected_counts(5), seed in any::<u64>()) {
        let n = m.dim();
        let mut rest: Vec<usize> = (1..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(rest.as_mut_slice(), &mut rng);
        let mut perm = vec![0];
        perm.extend(rest);

        let opts = ScaleOptions::default();
        let q = scale_mle(&m, &opts).unwrap().jod;
        let p = scale_mle(&m.permuted(&perm), &opts).unwrap().jod;
        for i in 0..n {
            prop_assert!((p[perm[i]] - q[i]).abs() < 1e-5, "{:?} vs {:?}", q, p);
        }
    }

    #[test]
    fn single_pair_matches_the_probit(n in 2u32..=200, frac in 0.0f64..1.0) {
        let c = 1 + ((n - 1) as f64 * frac) as u32;
        prop_assume!(c < n);
        let m = CountMatrix::from_rows(&[[0, n - c], [c, 0]]).unwrap();
        let q = scale_mle(&m, &ScaleOptions::without_prior()).unwrap().jod[1];
        let expected = prob_to_jod(c as f64 / n as f64, JOD_SIGMA).unwrap();
        prop_assert!((q - expected).abs() < 1e-4);
    }

    #[test]
    fn more_wins_never_lower_the_score(n in 3u32..=60, frac in 0.0f64..1.0) {
        let c = 1 + ((n - 3) as f64 * frac) as u32;
        let opts = ScaleOptions::without_prior();
        let score = |c: u32| {
            let m = CountMatrix::from_rows(&[[0, c], [n - c, 0]]).unwrap();
            scale_mle(&m, &opts).unwrap().jod[1]
        };
        // condition 0 gains a win, so q̂_0 - q̂_1 = -q̂_1 grows
        prop_assert!(-score(c + 1) >= -score(c));
    }

    #[test]
    fn likelihood_depends_only_on_differences(
        m in connected_counts(6),
        ks in prop::collection::vec(-256i32..256, 6),
        shift in -256i32..256,
    ) {
        // dyadic values keep the shifted differences exact
        let n = m.dim();
        let q: Vec<f64> = ks[..n].iter().map(|&k| k as f64 / 64.0).collect();
        let shifted: Vec<f64> = q.iter().map(|x| x + shift as f64 / 64.0).collect();
        let opts = ScaleOptions::without_prior();
        prop_assert_eq!(
            total_log_likelihood(&q, &m, &opts),
            total_log_likelihood(&shifted, &m, &opts)
        );
        let g: f64 = log_likelihood_gradient(&q, &m, &opts).iter().sum();
        prop_assert!(g.abs() < 1e-9);
    }

    #[test]
    fn unanimous_matrices_scale_finitely(n in 2usize..=5, votes in 1u32..=30) {
        let mut m = CountMatrix::zeros(n);
        for i in 1..n {
            m.set(i, i - 1, votes);
        }
        let r = scale_mle(&m, &ScaleOptions::default()).unwrap();
        prop_assert!(r.jod.iter().all(|q| q.is_finite()));
        prop_assert!(r.jod.windows(2).all(|w| w[0] < w[1]));
    }
}

fn trial_rows() -> impl Strategy<Value = Vec<(u8, u8, u8, u8, bool)>> {
    // observer, scene, condition_1, condition_2 (distinct), selection
    prop::collection::vec(
        (0u8..5, 0u8..3, 0u8..6, 1u8..6, any::<bool>()),
        0..80,
    )
}

fn csv_from(rows: &[(u8, u8, u8, u8, bool)], labels: &[&str]) -> String {
    let mut s = String::from("observer,session,scene,condition_1,condition_2,selection\n");
    for &(o, sc, a, d, first) in rows {
        let b = (a + d) % 6;
        s += &format!(
            "obs{o},1,scene{sc},{},{},{}\n",
            labels[a as usize],
            labels[b as usize],
            if first { 1 } else { 2 }
        );
    }
    s
}

const LABELS: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pooled_counts_equal_trial_rows(rows in trial_rows(), by_content in any::<bool>()) {
        let table = parse_trials(csv_from(&rows, &LABELS).as_bytes(), None).unwrap();
        let per = build_observer_matrices(&table, by_content);
        let pooled = pool_matrices(table.conditions.len(), per.values()).unwrap();
        prop_assert_eq!(pooled.total(), rows.len() as u64);
    }

    #[test]
    fn csv_round_trip_preserves_matrices(rows in trial_rows()) {
        let table = parse_trials(csv_from(&rows, &LABELS).as_bytes(), None).unwrap();
        let mut out = Vec::new();
        table.write_csv(&mut out).unwrap();
        let again = parse_trials(out.as_slice(), None).unwrap();
        prop_assert_eq!(&table, &again);
        prop_assert_eq!(
            build_observer_matrices(&table, true),
            build_observer_matrices(&again, true)
        );
    }

    #[test]
    fn relabelled_conditions_permute_matrices(rows in trial_rows()) {
        prop_assume!(!rows.is_empty());
        let renamed = ["F", "E", "D", "C", "B", "A"];
        let a = parse_trials(csv_from(&rows, &LABELS).as_bytes(), None).unwrap();
        let b = parse_trials(csv_from(&rows, &renamed).as_bytes(), None).unwrap();
        // first-appearance order is the same, so indices line up
        let ma = pool_matrices(a.conditions.len(), build_observer_matrices(&a, false).values()).unwrap();
        let mb = pool_matrices(b.conditions.len(), build_observer_matrices(&b, false).values()).unwrap();
        prop_assert_eq!(&ma, &mb);

        // explicitly moving a label to the front permutes accordingly
        let last = a.conditions.label(a.conditions.len() - 1).unwrap().to_owned();
        let c = parse_trials(csv_from(&rows, &LABELS).as_bytes(), Some(&last)).unwrap();
        let n = a.conditions.len();
        let perm: Vec<usize> = (0..n)
            .map(|i| c.conditions.index_of(a.conditions.label(i).unwrap()).unwrap())
            .collect();
        let mc = pool_matrices(n, build_observer_matrices(&c, false).values()).unwrap();
        prop_assert_eq!(ma.permuted(&perm), mc);
    }

    #[test]
    fn equal_split_conserves_trials(ties in 0u32..10, wins in 0u32..10, losses in 0u32..10, seed in any::<u64>()) {
        let mut tally = TieTally::new(2);
        tally.add(0, 1, ties);
        let counts = CountMatrix::from_rows(&[[0, wins], [losses, 0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = apply_equal_split(&tally, &counts, &mut rng).unwrap();
        prop_assert_eq!(out.trials(0, 1), ties + wins + losses);
        prop_assert!(out.wins(0, 1) >= wins + ties / 2 && out.wins(1, 0) >= losses + ties / 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bootstrap_result_invariants(seed in any::<u64>()) {
        let config = SimConfig { observers: 6, seed, ..Default::default() };
        let observers = simulate_experiment(&config, 0).unwrap();
        let b = bootstrap_scale(&observers, 60, &ScaleOptions::default(), seed).unwrap();
        let n = config.q_true.len();
        prop_assert!(b.samples.iter().all(|s| s[0] == 0.0));
        for i in 0..n {
            prop_assert!(b.ci_low[i] <= b.ci_high[i]);
            prop_assert_eq!(b.covariance[(0, i)], 0.0);
            for j in 0..n {
                prop_assert_eq!(b.covariance[(i, j)], b.covariance[(j, i)]);
            }
        }
        let eig = b.covariance.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > -1e-9));

        let r = pairwise_significance(&b.mean_jod, &b.covariance, 0.05).unwrap();
        for i in 0..n {
            prop_assert_eq!(r.p_values[(i, i)], 1.0);
            for j in 0..n {
                prop_assert_eq!(r.z_scores[(i, j)], -r.z_scores[(j, i)]);
                prop_assert_eq!(r.p_values[(i, j)], r.p_values[(j, i)]);
            }
        }
    }

    #[test]
    fn simulated_votes_are_conserved(seed in any::<u64>(), chain in any::<bool>(), ties in any::<bool>()) {
        let config = SimConfig {
            design: if chain { Design::IncompleteChain } else { Design::Complete },
            observers: 4,
            repetitions: 3,
            tie_model: ties.then(TieModel::default),
            seed,
            ..Default::default()
        };
        for m in simulate_experiment(&config, 3).unwrap() {
            for i in 0..m.dim() {
                for j in i + 1..m.dim() {
                    let designed = config.pairs().contains(&(i, j));
                    prop_assert_eq!(m.trials(i, j), if designed { 3 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn outlier_report_follows_observer_order(seed in any::<u64>(), shift in 1usize..6) {
        let config = SimConfig { observers: 6, random_observers: 1, seed, ..Default::default() };
        let observers = simulate_experiment(&config, 0).unwrap();
        let mut rotated = observers.clone();
        rotated.rotate_left(shift);
        let opts = ScaleOptions::default();
        let a = outlier_scores(&observers, &opts).unwrap();
        let b = outlier_scores(&rotated, &opts).unwrap();
        let k = observers.len();
        for i in 0..k {
            let o = &a.observers[(i + shift) % k];
            let r = &b.observers[i];
            prop_assert!((o.log_likelihood - r.log_likelihood).abs() < 1e-6);
            prop_assert!((o.iqr_score - r.iqr_score).abs() < 1e-6);
            prop_assert!(r.iqr_score >= 0.0 && r.iqr_score.is_finite());
        }
    }
}
