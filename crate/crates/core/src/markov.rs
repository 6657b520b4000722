//! First-order Markov chain over day-type (cluster index) sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-stochastic transition matrix estimated from adjacent pair counts.
///
/// Observed rows hold empirical frequencies; a state that never appears as
/// a predecessor gets a uniform row so that prediction is always defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TransitionMatrix<T> {
    pub k: usize,
    pub counts: Vec<Vec<u64>>,
    pub probs: Vec<Vec<T>>,
}

impl<T: Scalar> TransitionMatrix<T> {
    /// Derives probabilities from a `k×k` count matrix.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: row.len(),
            });
        }
        let probs = counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    vec![T::one() / T::from_count(k); k]
                } else {
                    let total = T::from_u64(total).expect("count representable");
                    row.iter()
                        .map(|&c| T::from_u64(c).expect("count representable") / total)
                        .collect()
                }
            })
            .collect();
        Ok(Self { k, counts, probs })
    }

    pub fn row(&self, state: usize) -> Result<&[T]> {
        self.probs
            .get(state)
            .map(Vec::as_slice)
            .ok_or(Error::StateOutOfRange { state, k: self.k })
    }

    /// Most probable successor of `current`; ties go to the lowest index.
    pub fn predict_next(&self, current: usize) -> Result<usize> {
        let row = self.row(current)?;
        let mut best = 0;
        for (j, &p) in row.iter().enumerate().skip(1) {
            if p > row[best] {
                best = j;
            }
        }
        Ok(best)
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Counts adjacent pairs of `sequence` over `k` states.
pub fn fit_transitions<T: Scalar>(sequence: &[usize], k: usize) -> Result<TransitionMatrix<T>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if sequence.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "a transition sequence needs at least 2 states, got {}",
            sequence.len()
        )));
    }
    if let Some(&state) = sequence.iter().find(|&&s| s >= k) {
        return Err(Error::StateOutOfRange { state, k });
    }
    let mut counts = vec![vec![0u64; k]; k];
    for w in sequence.windows(2) {
        counts[w[0]][w[1]] += 1;
    }
    TransitionMatrix::from_counts(counts)
}
