use serde::{Deserialize, Serialize};

/// `(index, weight)` pairs with strictly increasing indices and no zeros.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Sorts, merges duplicate indices by summing, and drops zeros.
    pub fn new(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => merged.push((i, w)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        SparseVector { entries: merged }
    }

    pub(crate) fn from_sorted(mut entries: Vec<(u32, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        entries.retain(|e| e.1 != 0.0);
        SparseVector { entries }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(i, &w)| (i as u32, w))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(i, w) in &self.entries {
            out[i as usize] = w;
        }
        out
    }

    pub fn map_values(&self, f: impl Fn(u32, f64) -> f64) -> SparseVector {
        SparseVector::from_sorted(self.entries.iter().map(|&(i, w)| (i, f(i, w))).collect())
    }

    pub fn scale(&self, alpha: f64) -> SparseVector {
        self.map_values(|_, w| w * alpha)
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    /// Walks the union of both supports, yielding `(x_i, y_i)` with zeros
    /// filled in for indices present on one side only.
    pub fn zip_union<'a>(&'a self, other: &'a SparseVector) -> UnionIter<'a> {
        UnionIter {
            a: &self.entries,
            b: &other.entries,
            i: 0,
            j: 0,
        }
    }
}

pub struct UnionIter<'a> {
    a: &'a [(u32, f64)],
    b: &'a [(u32, f64)],
    i: usize,
    j: usize,
}

impl Iterator for UnionIter<'_> {
    type Item = (u32, f64, f64);

    fn next(&mut self) -> Option<Self::Item> {
        let (a, b) = (self.a.get(self.i), self.b.get(self.j));
        match (a, b) {
            (None, None) => None,
            (Some(&(i, x)), None) => {
                self.i += 1;
                Some((i, x, 0.0))
            }
            (None, Some(&(j, y))) => {
                self.j += 1;
                Some((j, 0.0, y))
            }
            (Some(&(i, x)), Some(&(j, y))) => {
                if i < j {
                    self.i += 1;
                    Some((i, x, 0.0))
                } else if j < i {
                    self.j += 1;
                    Some((j, 0.0, y))
                } else {
                    self.i += 1;
                    self.j += 1;
                    Some((i, x, y))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_normalizes() {
        let v = SparseVector::new(vec![(3, 1.0), (1, 2.0), (3, -1.0), (2, 0.0), (1, 1.0)]);
        assert_eq!(v.entries(), &[(1, 3.0)]);
    }

    #[test]
    fn union_walk() {
        let a = SparseVector::new(vec![(0, 1.0), (2, 2.0)]);
        let b = SparseVector::new(vec![(1, 5.0), (2, 3.0)]);
        let got: Vec<_> = a.zip_union(&b).collect();
        assert_eq!(got, vec![(0, 1.0, 0.0), (1, 0.0, 5.0), (2, 2.0, 3.0)]);
        assert_eq!(a.dot(&b), 6.0);
    }
}
