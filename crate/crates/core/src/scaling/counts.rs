use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Square matrix of pairwise win counts.
///
/// Entry `(i, j)` is the number of trials in which condition `i` was
/// selected over condition `j`. The diagonal is always zero.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountMatrix {
    n: usize,
    counts: Vec<u32>,
}

impl CountMatrix {
    pub fn zeros(n: usize) -> Self {
        CountMatrix {
            n,
            counts: vec![0; n * n],
        }
    }

    /// Builds a matrix from rows, rejecting ragged input and non-zero
    /// diagonals.
    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut m = CountMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &c) in row.iter().enumerate() {
                if i == j && c != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "diagonal entry ({i}, {i}) of a count matrix must be 0"
                    )));
                }
                m.counts[i * n + j] = c;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `c_ij`: wins of `i` over `j`.
    #[inline]
    pub fn wins(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n + j]
    }

    /// `n_ij = c_ij + c_ji`.
    #[inline]
    pub fn trials(&self, i: usize, j: usize) -> u32 {
        self.wins(i, j) + self.wins(j, i)
    }

    /// Overwrites `c_ij`.
    ///
    /// # Panics
    ///
    /// Panics when `i == j` or either index is out of range.
    pub fn set(&mut self, i: usize, j: usize, value: u32) {
        assert!(i != j, "count matrix diagonal is fixed at zero");
        self.counts[i * self.n + j] = value;
    }

    /// Records `count` additional wins of `i` over `j`.
    pub fn add_wins(&mut self, i: usize, j: usize, count: u32) {
        assert!(i != j, "count matrix diagonal is fixed at zero");
        self.counts[i * self.n + j] += count;
    }

    /// Sum of all entries, i.e. the number of recorded trials.
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = CountMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.counts[j * self.n + i] = self.counts[i * self.n + j];
            }
        }
        t
    }

    /// Relabels conditions: row/column `perm[k]` of the result is row/column
    /// `k` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut p = CountMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                p.counts[perm[i] * self.n + perm[j]] = self.counts[i * self.n + j];
            }
        }
        p
    }

    /// Element-wise accumulation.
    pub fn accumulate(&mut self, other: &CountMatrix) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Unordered pairs `(i, j)`, `i < j`, with at least one trial.
    pub fn compared_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i + 1..self.n)
                .filter(move |&j| self.trials(i, j) > 0)
                .map(move |j| (i, j))
        })
    }

    /// Connected components of the comparison graph, each sorted, ordered by
    /// smallest member. A condition never compared forms its own component.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, j) in self.compared_pairs() {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.n];
        for k in 0..self.n {
            let r = find(&mut parent, k);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(k);
        }
        groups
    }

    /// Errors with the component listing unless every condition is reachable.
    pub fn ensure_connected(&self) -> Result<()> {
        let components = self.components();
        if components.len() > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(())
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.counts.chunks(self.n.max(1)).map(|r| r.to_vec()).take(self.n).collect()
    }
}

impl fmt::Debug for CountMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonzero_diagonal_and_ragged_rows() {
        assert!(CountMatrix::from_rows(&[[1u32, 0], [0, 0]]).is_err());
        assert!(CountMatrix::from_rows(&[vec![0u32, 1], vec![0]]).is_err());
    }

    #[test]
    fn components_of_a_split_graph() {
        let mut m = CountMatrix::zeros(5);
        m.set(0, 2, 1);
        m.set(4, 1, 3);
        assert_eq!(m.components(), vec![vec![0, 2], vec![1, 4], vec![3]]);
        assert!(matches!(
            m.ensure_connected(),
            Err(Error::Disconnected { .. })
        ));
        m.set(2, 3, 1);
        m.set(3, 4, 1);
        assert!(m.ensure_connected().is_ok());
    }

    #[test]
    fn permutation_moves_rows_and_columns_together() {
        let m = CountMatrix::from_rows(&[[0u32, 3, 0], [27, 0, 7], [30, 23, 0]]).unwrap();
        let p = m.permuted(&[2, 0, 1]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.wins([2, 0, 1][i], [2, 0, 1][j]), m.wins(i, j));
            }
        }
    }
}
