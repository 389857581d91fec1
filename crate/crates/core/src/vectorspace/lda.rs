//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DocTermMatrix, SparseVector};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub infer_iterations: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 300,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            infer_iterations: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub k: usize,
    pub n_terms: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Row-major `k x n_terms`; each row sums to 1.
    pub topic_term: Vec<f64>,
    pub config: LdaConfig,
}

/// Expands a TF row into token ids; counts are rounded to whole tokens.
fn tokens_of(row: &SparseVector) -> Vec<usize> {
    let mut out = Vec::new();
    for &(t, w) in row.entries() {
        let n = w.round().max(0.0) as usize;
        out.extend(std::iter::repeat(t as usize).take(n));
    }
    out
}

fn sample_index(rng: &mut ChaCha8Rng, weights: &[f64], total: f64) -> usize {
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

pub fn fit_lda(matrix: &DocTermMatrix, config: &LdaConfig) -> Result<LdaModel> {
    if config.k < 1 {
        return Err(Error::InvalidParam("LDA topic count must be at least 1".into()));
    }
    if config.iterations < 1 {
        return Err(Error::InvalidParam("LDA iterations must be at least 1".into()));
    }
    if matrix.n_rows() == 0 || matrix.n_cols == 0 {
        return Err(Error::EmptyCorpus);
    }
    let limit = matrix.n_rows().min(matrix.n_cols);
    let k = if config.k > limit {
        warn!("LDA topic count {} exceeds min(terms, documents) = {}; clamped", config.k, limit);
        limit
    } else {
        config.k
    };
    let alpha = config.alpha.unwrap_or(50.0 / k as f64);
    let beta = config.beta;
    let v = matrix.n_cols;
    let vbeta = v as f64 * beta;

    let docs: Vec<Vec<usize>> = matrix.rows.iter().map(tokens_of).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut n_dk = vec![0u32; docs.len() * k];
    let mut n_kw = vec![0u32; k * v];
    let mut n_k = vec![0u32; k];
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for (d, doc) in docs.iter().enumerate() {
        let zs: Vec<usize> = doc.iter().map(|_| rng.random_range(0..k)).collect();
        for (&w, &topic) in doc.iter().zip(&zs) {
            n_dk[d * k + topic] += 1;
            n_kw[topic * v + w] += 1;
            n_k[topic] += 1;
        }
        z.push(zs);
    }

    let mut p = vec![0.0; k];
    for _ in 0..config.iterations {
        for (d, doc) in docs.iter().enumerate() {
            for (pos, &w) in doc.iter().enumerate() {
                let old = z[d][pos];
                n_dk[d * k + old] -= 1;
                n_kw[old * v + w] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let pt = (n_dk[d * k + t] as f64 + alpha) * (n_kw[t * v + w] as f64 + beta)
                        / (n_k[t] as f64 + vbeta);
                    p[t] = pt;
                    total += pt;
                }
                let new = sample_index(&mut rng, &p, total);

                z[d][pos] = new;
                n_dk[d * k + new] += 1;
                n_kw[new * v + w] += 1;
                n_k[new] += 1;
            }
        }
    }

    let mut topic_term = vec![0.0; k * v];
    for t in 0..k {
        let row = &mut topic_term[t * v..(t + 1) * v];
        for (w, cell) in row.iter_mut().enumerate() {
            *cell = n_kw[t * v + w] as f64 + beta;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|c| *c /= s);
    }

    Ok(LdaModel {
        k,
        n_terms: v,
        alpha,
        beta,
        topic_term,
        config: config.clone(),
    })
}

impl LdaModel {
    /// Topic distribution of a new document, sampled with the topic-term
    /// weights held fixed. Samples from the second half of the chain are
    /// averaged. The sampler seed is fixed by the model, so equal inputs
    /// give equal outputs.
    pub fn infer(&self, tf: &SparseVector) -> Vec<f64> {
        let k = self.k;
        let tokens: Vec<usize> = tokens_of(tf).into_iter().filter(|&w| w < self.n_terms).collect();
        if tokens.is_empty() {
            return vec![1.0 / k as f64; k];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut n_dk = vec![0u32; k];
        let mut z: Vec<usize> = tokens
            .iter()
            .map(|_| {
                let t = rng.random_range(0..k);
                n_dk[t] += 1;
                t
            })
            .collect();

        let iters = self.config.infer_iterations.max(2);
        let burn_in = iters / 2;
        let mut acc = vec![0.0; k];
        let mut p = vec![0.0; k];
        for it in 0..iters {
            for (pos, &w) in tokens.iter().enumerate() {
                n_dk[z[pos]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    let pt = (n_dk[t] as f64 + self.alpha) * self.topic_term[t * self.n_terms + w];
                    p[t] = pt;
                    total += pt;
                }
                let new = sample_index(&mut rng, &p, total);
                z[pos] = new;
                n_dk[new] += 1;
            }
            if it >= burn_in {
                for t in 0..k {
                    acc[t] += n_dk[t] as f64 + self.alpha;
                }
            }
        }
        let s: f64 = acc.iter().sum();
        acc.iter_mut().for_each(|a| *a /= s);
        acc
    }

    pub fn topic_row(&self, topic: usize) -> &[f64] {
        &self.topic_term[topic * self.n_terms..(topic + 1) * self.n_terms]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cluster_corpus() -> (DocTermMatrix, Vec<usize>) {
        // terms 0..6 belong to cluster A, 6..12 to cluster B
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rows = Vec::new();
        let mut cluster = Vec::new();
        for d in 0..20 {
            let c = d % 2;
            let mut row = vec![0.0; 12];
            for _ in 0..30 {
                row[c * 6 + rng.random_range(0..6)] += 1.0;
            }
            rows.push(row);
            cluster.push(c);
        }
        (DocTermMatrix::from_dense(&rows), cluster)
    }

    fn small_config() -> LdaConfig {
        LdaConfig {
            k: 2,
            alpha: Some(0.1),
            iterations: 200,
            infer_iterations: 50,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn simplex_invariants() {
        let (m, _) = two_cluster_corpus();
        let model = fit_lda(&m, &small_config()).unwrap();
        for t in 0..model.k {
            assert!((model.topic_row(t).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for row in &m.rows {
            let theta = model.infer(row);
            assert!(theta.iter().all(|&x| x >= 0.0));
            assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let empty = model.infer(&SparseVector::default());
        assert!((empty.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_under_seed() {
        let (m, _) = two_cluster_corpus();
        let a = fit_lda(&m, &small_config()).unwrap();
        let b = fit_lda(&m, &small_config()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.infer(&m.rows[0]), b.infer(&m.rows[0]));
    }

    #[test]
    fn separates_disjoint_clusters() {
        let (m, cluster) = two_cluster_corpus();
        let model = fit_lda(&m, &small_config()).unwrap();
        let dominant: Vec<(usize, f64)> = m
            .rows
            .iter()
            .map(|r| {
                let theta = model.infer(r);
                let (t, &p) = theta.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
                (t, p)
            })
            .collect();
        // brute-force alignment: every document in a cluster shares one
        // dominant topic, the two clusters use different topics
        let topic_a = dominant[cluster.iter().position(|&c| c == 0).unwrap()].0;
        let topic_b = dominant[cluster.iter().position(|&c| c == 1).unwrap()].0;
        assert_ne!(topic_a, topic_b);
        for ((t, p), &c) in dominant.iter().zip(&cluster) {
            assert_eq!(*t, if c == 0 { topic_a } else { topic_b });
            assert!(*p >= 0.8, "dominant mass {p}");
        }
    }

    #[test]
    fn rejects_bad_params() {
        let (m, _) = two_cluster_corpus();
        assert!(fit_lda(&m, &LdaConfig { k: 0, ..small_config() }).is_err());
        assert!(fit_lda(&m, &LdaConfig { iterations: 0, ..small_config() }).is_err());
    }
}
