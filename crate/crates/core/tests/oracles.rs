//! Engine and statistics against brute-force references, plus invariants.

mod common;

use common::*;
use hubkit::dissim::{
    euclidean, normalized_euclidean, pairwise_matrix, prob_distance_stats, softmax_rows,
    topk_stream, unit, TopkOptions,
};
use hubkit::freqcorr::{average_ranks, spearman};
use hubkit::hubstats::{
    detect_hubs, distance_histogram, k_occurrence, mean_l2_to_uniform, relative_variance,
    skewness, HistogramOptions,
};
use hubkit::mitigate::{global_rank, mutual_proximity};
use hubkit::predeval::accuracy_partition;
use hubkit::rng::CounterRng;
use hubkit::synth::{gaussian_matrix, peaked_softmax_matrix};
use hubkit::{DenseMatrix, HubSet, Measure};
use proptest::prelude::*;

#[test]
fn euclidean_matches_one_line_reference() {
    let rng = CounterRng::new(99);
    for t in 0..200u64 {
        let a: Vec<f64> = (0..50).map(|i| rng.normal(t * 100 + i)).collect();
        let b: Vec<f64> = (0..50).map(|i| rng.normal(t * 100 + 50 + i)).collect();
        let reference = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let got = euclidean(&a, &b).unwrap();
        assert!((got - reference).abs() <= 1e-12 * reference, "{got} vs {reference}");
    }
}

#[test]
fn topk_matches_full_sort_small_cases() {
    for (seed, levels) in [(1u64, 0u64), (2, 3), (3, 2)] {
        let pts = random_matrix(seed, 60, 5, levels);
        for measure in [Measure::Euclidean, Measure::NormalizedEuclidean, Measure::SoftmaxDot] {
            let pts = if measure == Measure::NormalizedEuclidean {
                // Quantized rows can be all zero.
                DenseMatrix::from_rows(
                    &pts.row_iter()
                        .map(|r| if r.iter().all(|&x| x == 0.0) { vec![1.0; r.len()] } else { r.to_vec() })
                        .collect::<Vec<_>>(),
                )
                .unwrap()
            } else {
                pts.clone()
            };
            for exclude_self in [false, true] {
                let got = topk_stream(&pts, None, &TopkOptions::new(measure, 7, exclude_self).block_size(13))
                    .unwrap();
                let want = oracle_topk(&pts, None, measure, 7, exclude_self);
                for (g, w) in got.neighbors.iter().zip(&want) {
                    let g: Vec<(usize, f64)> = g.entries.iter().map(|e| (e.id, e.dissim)).collect();
                    assert_eq!(&g, w, "{measure} exclude_self={exclude_self} levels={levels}");
                }
                assert_eq!(got.occurrence.counts(), oracle_counts(&want, pts.rows()).as_slice());
            }
        }
    }
}

#[test]
fn softmax_dot_ranking_equals_probability_ranking() {
    let contexts = random_matrix(5, 40, 6, 0);
    let unembed = random_matrix(6, 30, 6, 4);
    let probs = softmax_rows(&hubkit::dissim::logits(&contexts, &unembed).unwrap());
    let a = topk_stream(&contexts, Some(&unembed), &TopkOptions::new(Measure::SoftmaxDot, 5, false)).unwrap();
    let b = topk_stream(&probs, None, &TopkOptions::new(Measure::Probability, 5, false)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn topk_independent_of_thread_count() {
    let pts = random_matrix(8, 300, 16, 0);
    let opts = TopkOptions::new(Measure::Euclidean, 10, true).block_size(17);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let eight = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
    let a = one.install(|| topk_stream(&pts, None, &opts)).unwrap();
    let b = eight.install(|| topk_stream(&pts, None, &opts)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pipeline_is_deterministic() {
    let pts = gaussian_matrix(400, 50, 3);
    let run = || {
        let r = topk_stream(&pts, None, &TopkOptions::new(Measure::Euclidean, 10, true)).unwrap();
        detect_hubs(&k_occurrence(&r.neighbors, pts.rows()).unwrap(), 20)
    };
    assert_eq!(run(), run());
}

#[test]
fn statistics_match_brute_force() {
    let rng = CounterRng::new(2024);
    for t in 0..300u64 {
        let n = 2 + (t as usize % 40);
        let levels = [0, 2, 5][t as usize % 3];
        let x = random_values(&rng, t * 1000, n, levels);
        let y = random_values(&rng, t * 1000 + 500, n, [0, 3, 4][t as usize % 3]);
        assert_eq!(average_ranks(&x), brute_ranks(&x));
        let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
        if !constant(&x) {
            assert!(close(skewness(&x).unwrap(), brute_skewness(&x), 1e-12));
        }
        if !constant(&x) && !constant(&y) {
            assert!(close(spearman(&x, &y).unwrap(), brute_spearman(&x, &y), 1e-12));
        }
    }
}

#[test]
fn relative_variance_equals_probability_stats() {
    for (seed, sharp) in [(1u64, 0.5), (2, 2.0), (3, 5.0)] {
        let p = peaked_softmax_matrix(60, 25, sharp, seed).unwrap();
        let dists: Vec<f64> = p.as_slice().iter().map(|x| 1.0 - x).collect();
        let rv = relative_variance(&dists).unwrap();
        let stats = prob_distance_stats(&p).unwrap();
        assert!((rv - stats.relative_variance).abs() <= 1e-9 * rv);
    }
}

#[test]
fn histogram_counts_sum_and_reproduce() {
    let pts = random_matrix(4, 120, 8, 0);
    for (measure, pairs) in [(Measure::Euclidean, 500u64), (Measure::SoftmaxDot, 300), (Measure::Euclidean, 1_000_000)] {
        let opts = HistogramOptions { measure, bins: 17, sample_pairs: pairs, seed: 5, exclude_self: true };
        let a = distance_histogram(&pts, None, &opts).unwrap();
        assert_eq!(a.histogram.counts.iter().sum::<u64>(), a.sampled_pairs);
        assert!(a.min_dist <= a.max_dist);
        assert_eq!(a, distance_histogram(&pts, None, &opts).unwrap());
    }
}

#[test]
fn three_dimensional_distances_reach_near_zero() {
    let pts = gaussian_matrix(10_000, 3, 0);
    let opts = HistogramOptions {
        measure: Measure::Euclidean,
        bins: 100,
        sample_pairs: 10_000,
        seed: 0,
        exclude_self: true,
    };
    let d = distance_histogram(&pts, None, &opts).unwrap();
    assert!(d.min_dist < 1.0, "{}", d.min_dist);
}

#[test]
fn one_hot_l2_closed_form() {
    for v in [2usize, 4, 17, 1000] {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..v).map(|j| if j == (i * 7) % v { 1.0 } else { 0.0 }).collect())
            .collect();
        let m = DenseMatrix::from_rows(&rows).unwrap();
        let want = (1.0 - 1.0 / v as f64).sqrt();
        assert!((mean_l2_to_uniform(&m).unwrap() - want).abs() <= 1e-12);
    }
}

#[test]
fn global_rank_demotes_top_hub() {
    let pts = gaussian_matrix(500, 300, 1);
    let dist = pairwise_matrix(&pts, None, Measure::Euclidean).unwrap();
    let eu = hubkit::dissim::topk_precomputed(&dist, 10, true).unwrap();
    let top = detect_hubs(&eu.occurrence, 1).members[0];
    let gcr = global_rank(&dist).unwrap().topk(10).unwrap();
    assert!(gcr.occurrence.counts()[top.id] < top.n_k);
}

#[test]
fn mp_reduces_skew_on_gaussian() {
    let pts = gaussian_matrix(2000, 300, 0);
    let dist = pairwise_matrix(&pts, None, Measure::Euclidean).unwrap();
    let before = hubkit::dissim::topk_precomputed(&dist, 10, true).unwrap().occurrence.k_skew().unwrap();
    let after = mutual_proximity(&dist).unwrap().topk(10).unwrap().occurrence.k_skew().unwrap();
    assert!(after < before, "{after} >= {before}");
}

fn small_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k_occurrence_sums_to_k_times_queries(
        seed in 0u64..1000, n in 3usize..40, k in 1usize..3, midx in 0usize..3,
    ) {
        let measure = [Measure::Euclidean, Measure::SoftmaxDot, Measure::NormalizedEuclidean][midx];
        let pts = random_matrix(seed, n, 4, 0);
        let r = topk_stream(&pts, None, &TopkOptions::new(measure, k, true)).unwrap();
        prop_assert_eq!(r.occurrence.counts().iter().sum::<u64>(), (k * n) as u64);
    }

    #[test]
    fn normalized_equals_euclidean_of_units(a in small_vec(9), b in small_vec(9)) {
        prop_assume!(a.iter().any(|x| *x != 0.0) && b.iter().any(|x| *x != 0.0));
        let direct = normalized_euclidean(&a, &b).unwrap();
        let via = euclidean(&unit(&a).unwrap(), &unit(&b).unwrap()).unwrap();
        prop_assert!((direct - via).abs() <= 1e-12 * via.max(1e-300));
        let scaled: Vec<f64> = a.iter().map(|x| x * 3.5).collect();
        prop_assert!((normalized_euclidean(&scaled, &b).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn skewness_affine_invariant(x in small_vec(12), shift in -100.0f64..100.0, scale in 0.01f64..100.0) {
        prop_assume!(x.iter().any(|v| *v != x[0]));
        let y: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
        let (sx, sy) = (skewness(&x).unwrap(), skewness(&y).unwrap());
        prop_assert!((sx - sy).abs() <= 1e-9 * sx.abs().max(1.0));
    }

    #[test]
    fn spearman_rank_invariant_and_symmetric(x in small_vec(10), y in small_vec(10)) {
        prop_assume!(x.iter().any(|v| *v != x[0]) && y.iter().any(|v| *v != y[0]));
        let rho = spearman(&x, &y).unwrap();
        prop_assert!(rho.abs() <= 1.0);
        prop_assert_eq!(rho, spearman(&y, &x).unwrap());
        let tx: Vec<f64> = x.iter().map(|v| v.exp().max(0.0) + v * 2.0).collect();
        prop_assert!((spearman(&tx, &y).unwrap() - rho).abs() <= 1e-12);
        // Adding the log-plot constant leaves ranks untouched.
        let ey: Vec<f64> = y.iter().map(|v| v.abs().round() + 1e-9).collect();
        let ry: Vec<f64> = y.iter().map(|v| v.abs().round()).collect();
        if ry.iter().any(|v| *v != ry[0]) {
            prop_assert_eq!(spearman(&x, &ey).unwrap(), spearman(&x, &ry).unwrap());
        }
    }

    #[test]
    fn prob_mean_is_one_minus_inverse_v(seed in 0u64..500, v in 2usize..60, sharp in 0.0f64..6.0) {
        let p = peaked_softmax_matrix(20, v, sharp, seed).unwrap();
        let stats = prob_distance_stats(&p).unwrap();
        let want = 1.0 - 1.0 / v as f64;
        prop_assert!((stats.mean - want).abs() <= 1e-9 * want);
        for row in p.row_iter() {
            prop_assert!(row.iter().all(|x| *x >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn accuracy_partition_invariants(
        pairs in prop::collection::vec((0usize..6, 0usize..6), 1..40),
        hub_ids in prop::collection::btree_set(0usize..6, 0..4),
        rot in 0usize..40,
    ) {
        let hubs = HubSet {
            threshold: 1,
            members: hub_ids.iter().map(|&id| hubkit::hubstats::Hub { id, n_k: 1 }).collect(),
        };
        let (p, g): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let a = accuracy_partition(&p, &g, &hubs).unwrap();
        let c = a.counts;
        let correct = p.iter().zip(&g).filter(|(x, y)| x == y).count();
        prop_assert_eq!(c.hub_correct + c.non_hub_correct, correct);
        prop_assert_eq!(c.hub_predicted + c.non_hub_predicted, c.total);
        let mut rotated = pairs.clone();
        let len = rotated.len();
        rotated.rotate_left(rot % len);
        let (p2, g2): (Vec<usize>, Vec<usize>) = rotated.into_iter().unzip();
        prop_assert_eq!(accuracy_partition(&p2, &g2, &hubs).unwrap(), a);
        let empty = HubSet { threshold: 1, members: vec![] };
        let plain = accuracy_partition(&p, &g, &empty).unwrap();
        prop_assert_eq!(plain.non_hub, Some(correct as f64 / len as f64));
        prop_assert_eq!(plain.hub, None);
    }

    #[test]
    fn secondary_transforms_depend_only_on_order(seed in 0u64..300, n in 3usize..25) {
        let pts = random_matrix(seed, n, 3, 0);
        let dist = pairwise_matrix(&pts, None, Measure::Euclidean).unwrap();
        let warped = DenseMatrix::from_rows(
            &dist.row_iter().map(|r| r.iter().map(|d| d * d * d + 2.0 * d).collect::<Vec<_>>()).collect::<Vec<_>>(),
        ).unwrap();
        let mp = mutual_proximity(&dist).unwrap();
        prop_assert_eq!(&mp.values, &mutual_proximity(&warped).unwrap().values);
        prop_assert_eq!(&global_rank(&dist).unwrap().values, &global_rank(&warped).unwrap().values);
        for x in 0..n {
            for y in 0..n {
                prop_assert_eq!(mp.get(x, y), mp.get(y, x));
            }
        }
    }
}
