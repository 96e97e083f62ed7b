use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tutor_analytics::{
    cluster_indices, cut_tree, proficiency_split, standardize, ward_cluster, ward_linkage, ClusterIndices,
    ProficiencyInput,
};

fn d(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn centroid(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let dims = points[0].len();
    (0..dims).map(|k| members.iter().map(|&i| points[i][k]).sum::<f64>() / members.len() as f64).collect()
}

/// Direct-formula indices, one pass per definition.
fn oracle_indices(points: &[Vec<f64>], labels: &[usize]) -> ClusterIndices {
    let n = points.len();
    let k = labels.iter().max().unwrap() + 1;
    let members: Vec<Vec<usize>> = (0..k).map(|c| (0..n).filter(|&i| labels[i] == c).collect()).collect();
    let mut sil = 0.0;
    for i in 0..n {
        let own = &members[labels[i]];
        if own.len() == 1 {
            continue;
        }
        let a = own.iter().filter(|&&j| j != i).map(|&j| d(&points[i], &points[j])).sum::<f64>() / (own.len() - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != labels[i])
            .map(|c| members[c].iter().map(|&j| d(&points[i], &points[j])).sum::<f64>() / members[c].len() as f64)
            .fold(f64::INFINITY, f64::min);
        sil += (b - a) / a.max(b);
    }
    sil /= n as f64;
    let cents: Vec<Vec<f64>> = members.iter().map(|m| centroid(points, m)).collect();
    let sigma: Vec<f64> =
        (0..k).map(|c| members[c].iter().map(|&i| d(&points[i], &cents[c])).sum::<f64>() / members[c].len() as f64).collect();
    let mut db = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i != j {
                worst = worst.max((sigma[i] + sigma[j]) / d(&cents[i], &cents[j]));
            }
        }
        db += worst;
    }
    db /= k as f64;
    let all: Vec<usize> = (0..n).collect();
    let overall = centroid(points, &all);
    let between: f64 = (0..k).map(|c| members[c].len() as f64 * d(&cents[c], &overall).powi(2)).sum();
    let within: f64 = (0..n).map(|i| d(&points[i], &cents[labels[i]]).powi(2)).sum();
    let ch = (between / (k - 1) as f64) / (within / (n - k) as f64);
    ClusterIndices { silhouette: sil, davies_bouldin: db, calinski_harabasz: ch }
}

/// Ward by brute force: recompute every pairwise merge cost from centroids.
fn naive_ward(points: &[Vec<f64>]) -> Vec<(Vec<usize>, f64)> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let (na, nb) = (clusters[a].len() as f64, clusters[b].len() as f64);
                let cost = (2.0 * na * nb / (na + nb)).sqrt()
                    * d(&centroid(points, &clusters[a]), &centroid(points, &clusters[b]));
                if cost < best.2 {
                    best = (a, b, cost);
                }
            }
        }
        let merged_b = clusters.remove(best.1);
        clusters[best.0].extend(merged_b);
        clusters[best.0].sort_unstable();
        out.push((clusters[best.0].clone(), best.2));
    }
    out
}

fn random_points(seed: u64, n: usize, dims: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dims).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect()
}

pub fn blobs(seed: u64, per_blob: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [[0.0, 0.0, 0.0, 0.0, 0.0], [10.0, 10.0, 0.0, 5.0, 0.0], [0.0, 10.0, 10.0, -5.0, 10.0]];
    let mut pts = Vec::new();
    let mut truth = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            pts.push(center.iter().map(|m| m + rng.gen_range(-1.0..1.0)).collect());
            truth.push(c);
        }
    }
    (pts, truth)
}

fn members_of(merges: &[tutor_analytics::Merge], n: usize) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for m in merges {
        let mut s = sets[m.left].clone();
        s.extend(&sets[m.right]);
        s.sort_unstable();
        sets.push(s);
    }
    sets.split_off(n)
}

#[test]
fn ward_matches_naive_recompute() {
    for seed in 0..10 {
        let pts = random_points(seed, 15, 3);
        let fast = ward_linkage(&pts);
        let slow = naive_ward(&pts);
        let sets = members_of(&fast, pts.len());
        for ((m, set), (oset, oh)) in fast.iter().zip(&sets).zip(&slow) {
            assert_eq!(set, oset);
            assert!((m.height - oh).abs() < 1e-9, "{} vs {}", m.height, oh);
        }
    }
}

#[test]
fn indices_match_direct_formulas_on_twelve_points() {
    let pts = random_points(42, 12, 2);
    for k in 2..=5 {
        let labels = cut_tree(&ward_linkage(&pts), 12, k);
        let got = cluster_indices(&pts, &labels).unwrap();
        let want = oracle_indices(&pts, &labels);
        assert!((got.silhouette - want.silhouette).abs() < 1e-9);
        assert!((got.davies_bouldin - want.davies_bouldin).abs() < 1e-9);
        assert!((got.calinski_harabasz - want.calinski_harabasz).abs() < 1e-9);
    }
}

#[test]
fn three_blobs_choose_three() {
    let (pts, truth) = blobs(3, 20);
    let model = ward_cluster(&pts, 2..=5).unwrap();
    assert_eq!(model.k, 3);
    // Assignments equal the generating blobs up to relabeling.
    assert_eq!(model.assignments, truth);
    for (c, cent) in model.centroids.iter().enumerate() {
        let members: Vec<usize> = (0..pts.len()).filter(|&i| model.assignments[i] == c).collect();
        let want = centroid(&pts, &members);
        assert!(cent.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

fn canonical_partition(labels: &[usize], order: &[usize]) -> Vec<usize> {
    // labels[i] is for permuted row i, which holds original student order[i].
    let mut original = vec![0; labels.len()];
    for (i, &o) in order.iter().enumerate() {
        original[o] = labels[i];
    }
    let mut map: Vec<usize> = Vec::new();
    original
        .iter()
        .map(|l| match map.iter().position(|x| x == l) {
            Some(p) => p,
            None => {
                map.push(*l);
                map.len() - 1
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_heights_never_decrease(seed in any::<u64>(), n in 2usize..30) {
        let merges = ward_linkage(&random_points(seed, n, 5));
        prop_assert_eq!(merges.len(), n - 1);
        for w in merges.windows(2) {
            prop_assert!(w[1].height >= w[0].height - 1e-9);
        }
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_sd(seed in any::<u64>(), n in 2usize..40) {
        let (z, _) = standardize(&random_points(seed, n, 5));
        for col in 0..5 {
            let m = z.iter().map(|r| r[col]).sum::<f64>() / n as f64;
            let sd = (z.iter().map(|r| (r[col] - m).powi(2)).sum::<f64>() / n as f64).sqrt();
            prop_assert!(m.abs() < 1e-9);
            prop_assert!((sd - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn clustering_ignores_student_order(seed in any::<u64>(), shuffle in any::<u64>()) {
        let (pts, _) = blobs(seed, 8);
        let mut order: Vec<usize> = (0..pts.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let permuted: Vec<Vec<f64>> = order.iter().map(|&i| pts[i].clone()).collect();
        let a = ward_cluster(&pts, 2..=5).unwrap();
        let b = ward_cluster(&permuted, 2..=5).unwrap();
        prop_assert_eq!(a.k, b.k);
        let identity: Vec<usize> = (0..pts.len()).collect();
        prop_assert_eq!(canonical_partition(&a.assignments, &identity), canonical_partition(&b.assignments, &order));
    }

    #[test]
    fn proficiency_ignores_positive_affine_rescaling(
        raw in proptest::collection::vec((0.0f64..50.0, 0.01f64..10.0, 0.0f64..=1.0), 2..12),
        scale in 0.1f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let base: Vec<ProficiencyInput> =
            raw.iter().map(|&(s, t, a)| ProficiencyInput { steps: s, time_per_step: t, accuracy: a }).collect();
        let scaled: Vec<ProficiencyInput> =
            base.iter().map(|p| ProficiencyInput { steps: p.steps * scale + shift, ..*p }).collect();
        let a = proficiency_split(&base).unwrap();
        let b = proficiency_split(&scaled).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            prop_assert!((x - y).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(x));
        }
    }
}
