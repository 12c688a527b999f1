use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{top_words, LdaModel, TopicId};
use crate::{Error, Result};

/// Jensen-Shannon divergence in bits; 0 for identical distributions, 1 for
/// disjoint supports.
pub fn js_divergence(p: &[f64], q: &[f64]) -> f64 {
    let kl_to_mid = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .filter(|(&x, _)| x > 0.0)
            .map(|(&x, &y)| x * (x / (0.5 * (x + y))).log2())
            .sum()
    };
    (0.5 * kl_to_mid(p, q) + 0.5 * kl_to_mid(q, p)).max(0.0)
}

/// Classical (Torgerson) multidimensional scaling of a symmetric distance
/// matrix into `dims` coordinates per point. Each axis is signed so its
/// largest-magnitude coordinate is positive.
pub fn classical_mds(dist: &[Vec<f64>], dims: usize) -> Vec<Vec<f64>> {
    let n = dist.len();
    if n == 0 {
        return Vec::new();
    }
    let sq = DMatrix::from_fn(n, n, |i, j| dist[i][j] * dist[i][j]);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let grand = sq.mean();
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));

    // Eigenvalues this close to zero are rounding noise from a rank-deficient
    // configuration.
    let floor = eig.eigenvalues.amax() * 1e-10;
    let mut coords = vec![vec![0.0; dims]; n];
    for (axis, &e) in order.iter().take(dims).enumerate() {
        let lambda = eig.eigenvalues[e];
        let scale = if lambda > floor { lambda.sqrt() } else { 0.0 };
        let col = eig.eigenvectors.column(e);
        let pivot = (0..n)
            .max_by(|&a, &c| col[a].abs().total_cmp(&col[c].abs()).then(c.cmp(&a)))
            .unwrap_or(0);
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][axis] = sign * col[i] * scale;
        }
    }
    coords
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMapEntry {
    /// 1-based topic number.
    pub topic: usize,
    pub prevalence: f64,
    pub x: f64,
    pub y: f64,
    pub top_words: Vec<String>,
}

/// Plot data for a topic bubble chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMap {
    pub n_topics: usize,
    pub topics: Vec<TopicMapEntry>,
    /// Pairwise Jensen-Shannon divergence between topic-word rows (bits).
    pub js_divergence: Vec<Vec<f64>>,
}

/// Per-topic prevalence (token-weighted mean of theta) and a 2-D layout from
/// scaling the topic-topic Jensen-Shannon divergences.
pub fn emit_topic_map(model: &LdaModel, n_words: usize) -> Result<TopicMap> {
    let k = model.n_topics();
    if k < 2 {
        return Err(Error::InvalidModel("topic map needs at least 2 topics".into()));
    }
    let phi = model.phi();
    let js: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    if a == b {
                        0.0
                    } else {
                        js_divergence(phi.row(a), phi.row(b))
                    }
                })
                .collect()
        })
        .collect();
    let coords = classical_mds(&js, 2);

    let total = model.total_tokens() as f64;
    let mut prevalence = vec![0.0; k];
    for (d, &len) in model.doc_lengths.iter().enumerate() {
        for (p, &t) in prevalence.iter_mut().zip(model.theta().row(d)) {
            *p += t * len as f64;
        }
    }
    let topics = (0..k)
        .map(|t| {
            let id = TopicId::from_index(t);
            Ok(TopicMapEntry {
                topic: id.number(),
                prevalence: if total > 0.0 {
                    prevalence[t] / total
                } else {
                    1.0 / k as f64
                },
                x: coords[t][0],
                y: coords[t][1],
                top_words: top_words(model, id, n_words)?.into_iter().map(|(w, _)| w).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TopicMap {
        n_topics: k,
        topics,
        js_divergence: js,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topicmodel::{LdaConfig, Matrix, Vocabulary};

    #[test]
    fn divergence_bounds() {
        let p = [0.5, 0.5, 0.0, 0.0];
        let q = [0.0, 0.0, 0.25, 0.75];
        assert_eq!(js_divergence(&p, &p), 0.0);
        assert!((js_divergence(&p, &q) - 1.0).abs() < 1e-12);
        let r = [0.25, 0.25, 0.25, 0.25];
        let d = js_divergence(&p, &r);
        assert!(d > 0.0 && d < 1.0);
        assert!((d - js_divergence(&r, &p)).abs() < 1e-15);
    }

    #[test]
    fn mds_recovers_line() {
        // points at 0, 1, 3 on a line
        let xs = [0.0f64, 1.0, 3.0];
        let dist: Vec<Vec<f64>> = xs.iter().map(|a| xs.iter().map(|b| (a - b).abs()).collect()).collect();
        let c = classical_mds(&dist, 2);
        for i in 0..3 {
            for j in 0..3 {
                let dx = c[i][0] - c[j][0];
                let dy = c[i][1] - c[j][1];
                assert!(((dx * dx + dy * dy).sqrt() - dist[i][j]).abs() < 1e-9);
            }
        }
    }

    fn model(tw: Vec<Vec<u64>>, dt: Vec<Vec<u64>>) -> LdaModel {
        let v = tw[0].len();
        let k = tw.len();
        let vocab = Vocabulary::from_tokens((0..v).map(|i| format!("w{i}")));
        let ids = (0..dt.len()).map(|d| format!("d{d}")).collect();
        let tw = Matrix::from_rows(tw, v);
        let dt = Matrix::from_rows(dt, k);
        LdaModel::from_counts(LdaConfig::with_topics(k), vocab, ids, tw.clone(), dt.clone(), tw, dt, 1).unwrap()
    }

    #[test]
    fn identical_topics_share_coordinates() {
        let m = model(
            vec![vec![4, 4, 0], vec![4, 4, 0], vec![0, 0, 8]],
            vec![vec![4, 4, 0], vec![4, 4, 8]],
        );
        let map = emit_topic_map(&m, 2).unwrap();
        assert_eq!(map.js_divergence[0][1], 0.0);
        assert!((map.topics[0].x - map.topics[1].x).abs() < 1e-9);
        assert!((map.topics[0].y - map.topics[1].y).abs() < 1e-9);
        let total: f64 = map.topics.iter().map(|t| t.prevalence).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let m = model(vec![vec![3, 0], vec![0, 3]], vec![vec![3, 3]]);
        let map = emit_topic_map(&m, 1).unwrap();
        let json = serde_json::to_string(&map).unwrap();
        let back: TopicMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, map);
        assert_eq!(back.topics[0].topic, 1);
    }
}
