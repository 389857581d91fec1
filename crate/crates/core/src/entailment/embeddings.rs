use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Word vectors of one fixed dimension. Unknown words read as zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    zero: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
            zero: vec![0.0; dim],
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Shape(format!("vector of length {} in a table of dimension {}", vector.len(), self.dim)));
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> &[f64] {
        self.vectors.get(word).map(Vec::as_slice).unwrap_or(&self.zero)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }
}

/// Word2vec text format: a `count dim` header, then `word v1 .. vdim` lines.
pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing `count dim` header".into(),
    })?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse {
            line: 1,
            msg: format!("bad header `{header}`"),
        })?;
    let [count, dim] = nums[..] else {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header must be `count dim`, got `{header}`"),
        });
    };
    let mut table = EmbeddingTable::new(dim);
    for (i, line) in lines {
        let mut cols = line.split_whitespace();
        let word = cols.next().unwrap_or_default();
        let vector: Vec<f64> = cols
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: i + 1,
                msg: format!("bad number: {e}"),
            })?;
        if vector.len() != dim {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected {dim} values for `{word}`, found {}", vector.len()),
            });
        }
        table.vectors.insert(word.to_string(), vector);
    }
    if table.len() != count {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header announces {count} words, file has {}", table.len()),
        });
    }
    Ok(table)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text)
}

/// Mean of the word vectors. Unknown words contribute zeros but still
/// count toward the length.
pub fn bow_vector(terms: &[String], table: &EmbeddingTable) -> Vec<f64> {
    let mut out = vec![0.0; table.dim()];
    if terms.is_empty() {
        return out;
    }
    for t in terms {
        for (o, v) in out.iter_mut().zip(table.get(t)) {
            *o += v;
        }
    }
    let n = terms.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}
