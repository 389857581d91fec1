//! Latent semantic indexing by seeded randomized subspace iteration.

use log::warn;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DocTermMatrix, SparseVector, Weighting};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsiConfig {
    pub k: usize,
    pub oversample: usize,
    pub power_iterations: usize,
    pub seed: u64,
    pub weighting: Weighting,
}

impl Default for LsiConfig {
    fn default() -> Self {
        LsiConfig {
            k: 300,
            oversample: 10,
            power_iterations: 7,
            seed: 0,
            weighting: Weighting::TfIdf,
        }
    }
}

/// Rank-k truncated SVD of the document-term matrix, keeping the
/// right-singular (term-side) directions for projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsiModel {
    pub k: usize,
    pub n_terms: usize,
    /// Row-major `n_terms x k`; column j is the j-th right-singular vector.
    pub projection: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub config: LsiConfig,
}

/// `A * M` with sparse `A` (rows x cols) and dense `M` (cols x l).
fn sparse_mul(a: &DocTermMatrix, m: &DMatrix<f64>) -> DMatrix<f64> {
    let l = m.ncols();
    let mut out = DMatrix::zeros(a.n_rows(), l);
    for (r, row) in a.rows.iter().enumerate() {
        for &(c, w) in row.entries() {
            for j in 0..l {
                out[(r, j)] += w * m[(c as usize, j)];
            }
        }
    }
    out
}

/// `A^T * M` with sparse `A` (rows x cols) and dense `M` (rows x l).
fn sparse_t_mul(a: &DocTermMatrix, m: &DMatrix<f64>) -> DMatrix<f64> {
    let l = m.ncols();
    let mut out = DMatrix::zeros(a.n_cols, l);
    for (r, row) in a.rows.iter().enumerate() {
        for &(c, w) in row.entries() {
            for j in 0..l {
                out[(c as usize, j)] += w * m[(r, j)];
            }
        }
    }
    out
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

pub fn fit_lsi(matrix: &DocTermMatrix, config: &LsiConfig) -> Result<LsiModel> {
    if config.k < 1 {
        return Err(Error::InvalidParam("LSI dimension k must be at least 1".into()));
    }
    if matrix.n_rows() == 0 || matrix.n_cols == 0 {
        return Err(Error::EmptyCorpus);
    }
    let limit = matrix.n_rows().min(matrix.n_cols);
    let k = if config.k > limit {
        warn!(
            "LSI dimension {} exceeds min(terms, documents) = {}; clamped",
            config.k, limit
        );
        limit
    } else {
        config.k
    };
    let l = (k + config.oversample).min(limit);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let omega = DMatrix::from_fn(matrix.n_cols, l, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = orthonormal_basis(sparse_mul(matrix, &omega));
    for _ in 0..config.power_iterations {
        let z = orthonormal_basis(sparse_t_mul(matrix, &q));
        q = orthonormal_basis(sparse_mul(matrix, &z));
    }
    // B^T = A^T Q is n_cols x l; its left-singular vectors are the
    // right-singular vectors of A restricted to range(Q).
    let bt = sparse_t_mul(matrix, &q);
    let svd = bt.svd(true, false);
    let u = svd.u.expect("requested U");
    let sv = svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    order.truncate(k);

    let n_terms = matrix.n_cols;
    let mut projection = vec![0.0; n_terms * k];
    let mut singular_values = Vec::with_capacity(k);
    for (j, &src) in order.iter().enumerate() {
        singular_values.push(sv[src].max(0.0));
        let col = u.column(src);
        // sign convention: largest-magnitude component positive
        let pivot = col.iter().fold(0.0f64, |best, &x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for t in 0..n_terms {
            projection[t * k + j] = sign * col[t];
        }
    }
    Ok(LsiModel {
        k,
        n_terms,
        projection,
        singular_values,
        config: config.clone(),
    })
}

impl LsiModel {
    pub fn project(&self, vec: &SparseVector) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for &(t, w) in vec.entries() {
            let t = t as usize;
            if t >= self.n_terms {
                continue;
            }
            let row = &self.projection[t * self.k..(t + 1) * self.k];
            for (o, p) in out.iter_mut().zip(row) {
                *o += w * p;
            }
        }
        out
    }

    pub fn project_dense(&self, vec: &[f64]) -> Vec<f64> {
        self.project(&SparseVector::from_dense(vec))
    }

    /// Maps latent coordinates back to term space.
    pub fn reconstruct(&self, latent: &[f64]) -> Vec<f64> {
        (0..self.n_terms)
            .map(|t| {
                let row = &self.projection[t * self.k..(t + 1) * self.k];
                row.iter().zip(latent).map(|(p, z)| p * z).sum()
            })
            .collect()
    }

    pub fn weighting(&self) -> Weighting {
        self.config.weighting
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frobenius_residual(model: &LsiModel, rows: &[Vec<f64>]) -> f64 {
        rows.iter()
            .map(|r| {
                let rec = model.reconstruct(&model.project_dense(r));
                r.iter().zip(&rec).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn rank_one_exact() {
        let base = [1.0, 2.0, 0.0, 3.0];
        let rows: Vec<Vec<f64>> = [1.0, -2.0, 0.5].iter().map(|s| base.iter().map(|b| b * s).collect()).collect();
        let m = DocTermMatrix::from_dense(&rows);
        let model = fit_lsi(&m, &LsiConfig { k: 1, ..Default::default() }).unwrap();
        assert!(frobenius_residual(&model, &rows) < 1e-8);
    }

    #[test]
    fn diagonal_singular_values() {
        let rows = vec![vec![3.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]];
        let model = fit_lsi(&DocTermMatrix::from_dense(&rows), &LsiConfig { k: 3, ..Default::default() }).unwrap();
        for (got, want) in model.singular_values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn clamps_k() {
        let rows = vec![vec![1.0, 0.0, 2.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]];
        let model = fit_lsi(&DocTermMatrix::from_dense(&rows), &LsiConfig { k: 300, ..Default::default() }).unwrap();
        assert_eq!(model.k, 2);
        assert!(fit_lsi(&DocTermMatrix::from_dense(&rows), &LsiConfig { k: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn zero_vector_projects_to_zero() {
        let rows = vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 1.0]];
        let model = fit_lsi(&DocTermMatrix::from_dense(&rows), &LsiConfig { k: 2, ..Default::default() }).unwrap();
        assert_eq!(model.project(&SparseVector::default()), vec![0.0, 0.0]);
    }

    #[test]
    fn document_reconstruction_within_residual() {
        // rank 3 data, k = 2: each row's reconstruction error equals its
        // distance to the best rank-2 subspace, bounded by sigma_3
        let rows = vec![
            vec![4.0, 1.0, 0.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 5.0, 2.0, 0.0],
            vec![0.0, 1.0, 4.0, 2.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0, 3.0],
        ];
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let mut sv: Vec<f64> = DMatrix::from_row_slice(5, 5, &flat).singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let model = fit_lsi(&DocTermMatrix::from_dense(&rows), &LsiConfig { k: 2, ..Default::default() }).unwrap();
        let tail: f64 = sv[2..].iter().map(|s| s * s).sum::<f64>().sqrt();
        let resid = frobenius_residual(&model, &rows);
        assert!((resid - tail).abs() < 1e-8, "{resid} vs {tail}");
    }
}
