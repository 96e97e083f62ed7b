//! Ward hierarchical clustering on standardized features, with cluster
//! validity indices and an index vote for the number of clusters.

use std::ops::RangeInclusive;

use crate::stats::{mean, std_dev};
use crate::AnalyticsError;

#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Column-wise z-scores with population sd. Constant columns map to 0.
pub fn standardize(rows: &[Vec<f64>]) -> (Vec<Vec<f64>>, Standardization) {
    let dims = rows.first().map_or(0, Vec::len);
    let cols: Vec<Vec<f64>> = (0..dims).map(|d| rows.iter().map(|r| r[d]).collect()).collect();
    let params = Standardization {
        mean: cols.iter().map(|c| mean(c)).collect(),
        sd: cols.iter().map(|c| std_dev(c)).collect(),
    };
    let z = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(d, v)| if params.sd[d] > 0.0 { (v - params.mean[d]) / params.sd[d] } else { 0.0 })
                .collect()
        })
        .collect();
    (z, params)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// One agglomeration step. Points are clusters `0..n`; the cluster formed
/// by merge `i` has id `n + i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Ward linkage by the Lance-Williams recurrence on squared distances.
/// Merge heights equal `sqrt(2 na nb / (na + nb)) * |ca - cb|`.
pub fn ward_linkage(points: &[Vec<f64>]) -> Vec<Merge> {
    let n = points.len();
    let mut d: Vec<Vec<f64>> = points.iter().map(|a| points.iter().map(|b| sq_dist(a, b)).collect()).collect();
    // slot -> (cluster id, size) while active
    let mut active: Vec<Option<(usize, usize)>> = (0..n).map(|i| Some((i, 1))).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if active[i].is_none() {
                continue;
            }
            for j in i + 1..n {
                if active[j].is_some() && best.is_none_or(|(_, _, b)| d[i][j] < b) {
                    best = Some((i, j, d[i][j]));
                }
            }
        }
        let (i, j, dij) = best.expect("at least two active clusters");
        let (id_i, ni) = active[i].expect("active");
        let (id_j, nj) = active[j].expect("active");
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            let Some((_, nk)) = active[k] else { continue };
            let (ni, nj, nk) = (ni as f64, nj as f64, nk as f64);
            let updated = ((ni + nk) * d[i][k] + (nj + nk) * d[j][k] - nk * dij) / (ni + nj + nk);
            d[i][k] = updated.max(0.0);
            d[k][i] = d[i][k];
        }
        active[i] = Some((n + step, ni + nj));
        active[j] = None;
        merges.push(Merge { left: id_i.min(id_j), right: id_i.max(id_j), height: dij.max(0.0).sqrt(), size: ni + nj });
    }
    merges
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Flat labels for `k` clusters, numbered by first appearance.
pub fn cut_tree(merges: &[Merge], n: usize, k: usize) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n + merges.len()).collect();
    for (step, m) in merges.iter().take(n.saturating_sub(k)).enumerate() {
        let new = n + step;
        let a = find(&mut parent, m.left);
        let b = find(&mut parent, m.right);
        parent[a] = new;
        parent[b] = new;
    }
    let mut roots: Vec<usize> = Vec::new();
    (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            roots.iter().position(|&x| x == r).unwrap_or_else(|| {
                roots.push(r);
                roots.len() - 1
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterIndices {
    pub silhouette: f64,
    pub davies_bouldin: f64,
    pub calinski_harabasz: f64,
}

fn centroids(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dims = points.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dims]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter().zip(counts).map(|(s, c)| s.into_iter().map(|v| v / c as f64).collect()).collect()
}

/// Silhouette, Davies-Bouldin and Calinski-Harabasz for a labelling
/// `0..k`. Points alone in their cluster score 0 in the silhouette.
pub fn cluster_indices(points: &[Vec<f64>], labels: &[usize]) -> Result<ClusterIndices, AnalyticsError> {
    let n = points.len();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(AnalyticsError::TooFewClusters);
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(AnalyticsError::EmptyCluster(empty));
    }

    let mut silhouette = 0.0;
    for i in 0..n {
        if sizes[labels[i]] == 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist(&points[i], &points[j]);
            }
        }
        let a = sums[labels[i]] / (sizes[labels[i]] - 1) as f64;
        let b = (0..k).filter(|&c| c != labels[i]).map(|c| sums[c] / sizes[c] as f64).fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            silhouette += (b - a) / denom;
        }
    }
    silhouette /= n as f64;

    let cents = centroids(points, labels, k);
    let mut scatter = vec![0.0; k];
    for (p, &l) in points.iter().zip(labels) {
        scatter[l] += dist(p, &cents[l]);
    }
    for (s, &size) in scatter.iter_mut().zip(&sizes) {
        *s /= size as f64;
    }
    let davies_bouldin = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| {
                    let sep = dist(&cents[i], &cents[j]);
                    if sep > 0.0 { (scatter[i] + scatter[j]) / sep } else { f64::INFINITY }
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum::<f64>()
        / k as f64;

    let overall = centroids(points, &vec![0; n], 1).remove(0);
    let between: f64 = (0..k).map(|c| sizes[c] as f64 * sq_dist(&cents[c], &overall)).sum();
    let within: f64 = points.iter().zip(labels).map(|(p, &l)| sq_dist(p, &cents[l])).sum();
    let calinski_harabasz = if within > 0.0 {
        (between / (k - 1) as f64) / (within / (n - k) as f64)
    } else {
        f64::INFINITY
    };

    Ok(ClusterIndices { silhouette, davies_bouldin, calinski_harabasz })
}

/// Each index votes for its best k (higher silhouette and CH, lower DB;
/// ties to the smaller k). The k with two or more votes wins, otherwise the
/// silhouette choice.
pub fn choose_k(candidates: &[(usize, ClusterIndices)]) -> Option<usize> {
    let pick = |score: &dyn Fn(&ClusterIndices) -> f64| {
        candidates
            .iter()
            .fold(None::<(usize, f64)>, |best, (k, ix)| {
                let s = score(ix);
                match best {
                    Some((_, b)) if s <= b => best,
                    _ => Some((*k, s)),
                }
            })
            .map(|(k, _)| k)
    };
    let sil = pick(&|ix| ix.silhouette)?;
    let db = pick(&|ix| -ix.davies_bouldin)?;
    let ch = pick(&|ix| ix.calinski_harabasz)?;
    Some(if db == ch { db } else { sil })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    pub features: Vec<Vec<f64>>,
    pub standardization: Standardization,
    pub standardized: Vec<Vec<f64>>,
    pub merges: Vec<Merge>,
    pub indices: Vec<(usize, ClusterIndices)>,
    pub k: usize,
    pub assignments: Vec<usize>,
    /// Per-cluster means of the raw features.
    pub centroids: Vec<Vec<f64>>,
}

pub fn ward_cluster(features: &[Vec<f64>], k_range: RangeInclusive<usize>) -> Result<ClusterModel, AnalyticsError> {
    let need = k_range.end() + 1;
    if features.len() < need {
        return Err(AnalyticsError::InsufficientData { need, have: features.len() });
    }
    if *k_range.start() < 2 {
        return Err(AnalyticsError::TooFewClusters);
    }
    let (standardized, standardization) = standardize(features);
    let merges = ward_linkage(&standardized);
    let n = features.len();
    let indices = k_range
        .map(|k| Ok((k, cluster_indices(&standardized, &cut_tree(&merges, n, k))?)))
        .collect::<Result<Vec<_>, AnalyticsError>>()?;
    let k = choose_k(&indices).expect("range is non-empty");
    let assignments = cut_tree(&merges, n, k);
    let centroids = centroids(features, &assignments, k);
    Ok(ClusterModel { features: features.to_vec(), standardization, standardized, merges, indices, k, assignments, centroids })
}
