mod common;

use std::collections::BTreeSet;

use common::*;
use glottokit::chrono::{classic_time, fit_gamma_moments, forward_overlap, gamma_time, invert_time, GammaFit};
use glottokit::metric::{levenshtein, nld, overlap_matrix, word_similarity, SimilarityScorer};
use glottokit::ranking::{common_count_curve, rank_items};
use glottokit::simgen::{self, FamilyTree, SimConfig};
use glottokit::stability::{
    actual_stability, estimated_stability, fit_lambda, pearson, rates_from_stability, spearman, StabilityKind,
};
use glottokit::wordlist::{common_items, normalize_form, parse_database, subset, LexicalDatabase, WordForm, WordlistFormat};
use proptest::prelude::*;

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

fn permuted(db: &LexicalDatabase, order: &[usize]) -> LexicalDatabase {
    let langs = order.iter().map(|&l| db.languages()[l].clone()).collect();
    let slots = order.iter().enumerate().flat_map(|(new, &old)| {
        (0..db.item_count()).filter_map(move |i| db.slot(old, i).map(|s| ((new, i), s.to_vec())))
    });
    LexicalDatabase::from_parts(db.family_name(), langs, db.items().to_vec(), slots).unwrap()
}

fn shuffle_strategy(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #[test]
    fn normalization_is_idempotent(s in "[ a-zA-ZéÉèÈıİßẞ\u{0301}\u{0130}]{0,8}[a-zA-ZÉ]") {
        let once: String = normalize_form(&s).unwrap().into_iter().collect();
        let twice: String = normalize_form(&once).unwrap().into_iter().collect();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn serialization_reaches_fixed_point(db in db_strategy(4, 5)) {
        let t0 = db.to_tsv();
        let p1 = parse_database(&t0, WordlistFormat::TsvLongV1).unwrap().database;
        let t1 = p1.to_tsv();
        let p2 = parse_database(&t1, WordlistFormat::TsvLongV1).unwrap().database;
        prop_assert_eq!(&t1, &p2.to_tsv());
        prop_assert_eq!(p1, p2);
    }

    #[test]
    fn subset_is_idempotent(db in db_strategy(5, 6), keep_items in proptest::collection::vec(any::<bool>(), 6)) {
        let items: BTreeSet<String> = db.items().iter().enumerate()
            .filter(|(i, _)| keep_items[*i]).map(|(_, r)| r.item_id.clone()).collect();
        let even = |l: &glottokit::wordlist::LanguageRecord| l.label[1..].parse::<usize>().unwrap() % 2 == 0;
        let once = subset(&db, even, Some(&items)).unwrap();
        let twice = subset(&once, even, Some(&items)).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn common_items_symmetric(a in db_strategy(3, 6), b in db_strategy(3, 4)) {
        let ab: BTreeSet<_> = common_items(&a, &b).into_iter().collect();
        let ba: BTreeSet<_> = common_items(&b, &a).into_iter().collect();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn levenshtein_is_a_metric(a in "[abcé]{0,7}", b in "[abcé]{0,7}", c in "[abcé]{0,7}") {
        let (a, b, c) = (chars(&a), chars(&b), chars(&c));
        let ab = levenshtein(&a, &b);
        prop_assert_eq!(ab, levenshtein(&b, &a));
        prop_assert_eq!(ab == 0, a == b);
        prop_assert!(ab <= levenshtein(&a, &c) + levenshtein(&c, &b));
        prop_assert!(ab >= a.len().abs_diff(b.len()));
        prop_assert!(ab <= a.len().max(b.len()));
    }

    #[test]
    fn nld_bounded(a in "[abc]{1,9}", b in "[abc]{1,9}") {
        let d = nld(&chars(&a), &chars(&b)).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn synonyms_never_lower_similarity(
        a in proptest::collection::vec("[abcd]{1,6}", 1..3),
        b in proptest::collection::vec("[abcd]{1,6}", 1..3),
        extra in "[abcd]{1,6}",
    ) {
        let wf = |v: &[String]| v.iter().map(|s| WordForm::new(s, None).unwrap()).collect::<Vec<_>>();
        let (sa, sb) = (wf(&a), wf(&b));
        let mut sa2 = sa.clone();
        sa2.push(WordForm::new(&extra, None).unwrap());
        let before = word_similarity(&sa, &sb, SimilarityScorer::Nld).unwrap();
        let after = word_similarity(&sa2, &sb, SimilarityScorer::Nld).unwrap();
        prop_assert!(after >= before);
    }

    #[test]
    fn overlap_invariant_under_language_permutation(
        (db, order) in db_strategy(5, 5).prop_flat_map(|db| { let n = db.language_count(); (Just(db), shuffle_strategy(n)) })
    ) {
        let p = permuted(&db, &order);
        let m1 = overlap_matrix(&db, SimilarityScorer::Nld).unwrap();
        let m2 = overlap_matrix(&p, SimilarityScorer::Nld).unwrap();
        for a in 0..m1.len() {
            for b in 0..m1.len() {
                let (pa, pb) = (m2.index_of(&m1.labels()[a]).unwrap(), m2.index_of(&m1.labels()[b]).unwrap());
                prop_assert_eq!(m1.get(a, b), m2.get(pa, pb));
                prop_assert_eq!(m1.support(a, b), m2.support(pa, pb));
            }
        }
    }

    #[test]
    fn stabilities_invariant_under_language_reordering(
        (db, order) in full_db_strategy(4..=6, 1..=5, true)
            .prop_flat_map(|db| { let n = db.language_count(); (Just(db), shuffle_strategy(n)) })
    ) {
        let p = permuted(&db, &order);
        let (r1, r2) = (actual_stability(&db, SimilarityScorer::Nld).unwrap(), actual_stability(&p, SimilarityScorer::Nld).unwrap());
        let (s1, s2) = (estimated_stability(&db, SimilarityScorer::Nld).unwrap(), estimated_stability(&p, SimilarityScorer::Nld).unwrap());
        for i in 0..db.item_count() {
            prop_assert!(rel(r1.values[i].unwrap(), r2.values[i].unwrap()) < 1e-12 || r1.values[i] == r2.values[i]);
            prop_assert!(rel(s1.values[i].unwrap(), s2.values[i].unwrap()) < 1e-12 || s1.values[i] == s2.values[i]);
        }
    }

    #[test]
    fn rates_round_trip(values in proptest::collection::vec(1e-6f64..=1.0, 1..30), t in 0.1f64..5.0) {
        let profile = rates_from_stability(&table(&values), t).unwrap();
        for (v, r) in values.iter().zip(&profile.rates) {
            let back = (-r.unwrap() * t).exp();
            prop_assert!((back - v).abs() <= 1e-12 * v.max(1e-300) + 1e-15, "{} vs {}", back, v);
        }
    }

    #[test]
    fn lambda_scales_with_actual_rates(s in proptest::collection::vec(0.05f64..2.0, 2..40), noise in proptest::collection::vec(0.8f64..1.2, 40), k in 0.1f64..10.0) {
        let r: Vec<f64> = s.iter().zip(&noise).map(|(a, n)| a * n * 0.5).collect();
        let kr: Vec<f64> = r.iter().map(|v| v * k).collect();
        let mut est = profile(&s);
        est.kind = StabilityKind::Estimated;
        let mut act = profile(&r);
        act.kind = StabilityKind::Actual;
        let mut act_k = profile(&kr);
        act_k.kind = StabilityKind::Actual;
        let l1 = fit_lambda(&act, &est).unwrap().lambda;
        let l2 = fit_lambda(&act_k, &est).unwrap().lambda;
        prop_assert!(rel(l2, k * l1) < 1e-12);
    }

    #[test]
    fn pearson_affine_and_spearman_monotone_invariance(
        xy in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30),
        a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
        b in -5.0f64..5.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let Ok(p) = pearson(&x, &y) else { return Ok(()) };
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let pa = pearson(&ax, &y).unwrap();
        prop_assert!((pa - a.signum() * p).abs() < 1e-9);
        let sp = spearman(&x, &y).unwrap();
        let ex: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        prop_assert!((spearman(&ex, &y).unwrap() - sp).abs() < 1e-12);
    }

    #[test]
    fn forward_strictly_decreasing(rates in proptest::collection::vec(0.01f64..2.0, 1..50), t in 0.0f64..20.0, dt in 0.01f64..5.0) {
        let p = profile(&rates);
        prop_assert!(forward_overlap(&p, 1.0, t + dt).unwrap() < forward_overlap(&p, 1.0, t).unwrap());
    }

    #[test]
    fn invert_undoes_forward(rates in proptest::collection::vec(0.01f64..1.0, 1..60), lambda in 0.2f64..2.0, t in 0.0f64..50.0) {
        let p = profile(&rates);
        let c = forward_overlap(&p, lambda, t).unwrap();
        let back = invert_time(c, &p, lambda, 1e-13).unwrap();
        prop_assert!((back - t).abs() <= 1e-9 * t.max(1.0), "{} vs {}", back, t);
    }

    #[test]
    fn time_scales_inversely_with_lambda(rates in proptest::collection::vec(0.01f64..1.0, 1..60), c in 0.05f64..0.99, k in 0.1f64..10.0) {
        let p = profile(&rates);
        let t1 = invert_time(c, &p, 1.0, 1e-13).unwrap();
        let tk = invert_time(c, &p, k, 1e-13).unwrap();
        prop_assert!(rel(tk, t1 / k) < 1e-9);
    }

    #[test]
    fn ranking_ignores_input_order(
        (values, order) in proptest::collection::vec(prop_oneof![Just(0.5), 0.0f64..1.0], 1..40)
            .prop_flat_map(|v| { let n = v.len(); (Just(v), shuffle_strategy(n)) })
    ) {
        let t = table(&values);
        let mut shuffled = t.clone();
        shuffled.item_ids = order.iter().map(|&i| t.item_ids[i].clone()).collect();
        shuffled.glosses = shuffled.item_ids.clone();
        shuffled.values = order.iter().map(|&i| t.values[i]).collect();
        prop_assert_eq!(rank_items(&t).unwrap(), rank_items(&shuffled).unwrap());
    }

    #[test]
    fn curve_symmetric_with_bounded_increments(
        (a, b) in (2usize..60).prop_flat_map(|n| (proptest::collection::vec(0.0f64..1.0, n), proptest::collection::vec(0.0f64..1.0, n)))
    ) {
        let (ra, rb) = (rank_items(&table(&a)).unwrap(), rank_items(&table(&b)).unwrap());
        let ab = common_count_curve(&ra, &rb).unwrap();
        let ba = common_count_curve(&rb, &ra).unwrap();
        prop_assert_eq!(&ab.c, &ba.c);
        let mut prev = 0;
        for (m, &c) in ab.c.iter().enumerate() {
            prop_assert!(c >= prev && c - prev <= 2);
            prop_assert!(c <= m + 1);
            prev = c;
        }
        prop_assert_eq!(*ab.c.last().unwrap(), a.len());
    }

    #[test]
    fn gamma_gain_over_classic_grows_with_depth(shape in 1.0f64..50.0, scale in 0.005f64..0.2) {
        let fit = GammaFit { shape, scale, source_mean: shape * scale, source_sd: shape.sqrt() * scale };
        let mean = shape * scale;
        let ratio = |c: f64| gamma_time(c, 1.0, &fit).unwrap() / classic_time(c, mean).unwrap();
        let (shallow, deep) = (ratio(1e-3), ratio(1e-6));
        prop_assert!(shallow > 1.0);
        prop_assert!(deep > shallow);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), leaves in 3usize..8, mutation in prop_oneof![Just(0.0), 0.1f64..1.0]) {
        let tree = FamilyTree::star(leaves, 1.5, "l").unwrap();
        let config = SimConfig { items: 20, seed, mutation_rate: mutation, ..SimConfig::default() };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simgen::run(&tree, &config)).unwrap();
        let b = four.install(|| simgen::run(&tree, &config)).unwrap();
        prop_assert_eq!(a.database.to_tsv(), b.database.to_tsv());
        prop_assert_eq!(a.truth, b.truth);
    }
}

#[test]
fn gamma_moment_fit_reproduces_sample_moments() {
    let rates = [0.2, 0.35, 0.5, 0.55, 0.61, 0.9];
    let fit = fit_gamma_moments(&rates).unwrap();
    let mean = rates.iter().sum::<f64>() / 6.0;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 6.0;
    assert!(rel(fit.shape * fit.scale, mean) < 1e-12);
    assert!(rel(fit.shape * fit.scale * fit.scale, var) < 1e-12);
}
