//! k-nearest neighbours classifier.

use alloc::vec::Vec;

use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Stores the training data; prediction is a majority vote among the k
/// nearest points by Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KnnModel {
    pub k: usize,
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<usize>,
    pub n_classes: usize,
}

pub fn knn_train(
    params: &KnnParams,
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
) -> Result<KnnModel, LearnError> {
    if x.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch);
    }
    if params.k == 0 || params.k > x.len() {
        return Err(LearnError::KTooLarge {
            k: params.k,
            n: x.len(),
        });
    }
    Ok(KnnModel {
        k: params.k,
        train_x: x.to_vec(),
        train_y: y.to_vec(),
        n_classes,
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

impl KnnModel {
    /// The k nearest training rows as (squared distance, class), ordered by
    /// distance then training index for determinism.
    fn neighbours(&self, query: &[f64]) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = self
            .train_x
            .iter()
            .map(|row| squared_distance(row, query))
            .zip(self.train_y.iter().copied())
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        all.truncate(self.k);
        all
    }

    /// Majority label among the k nearest. Vote ties break by the smaller
    /// summed distance, then by the smaller class id (class ids order
    /// lexicographically by token).
    pub fn predict(&self, query: &[f64]) -> usize {
        let neighbours = self.neighbours(query);
        let mut votes = alloc::vec![0usize; self.n_classes];
        let mut summed = alloc::vec![0.0f64; self.n_classes];
        for (d2, class) in neighbours {
            votes[class] += 1;
            summed[class] += libm::sqrt(d2);
        }
        let mut best = 0usize;
        for class in 1..self.n_classes {
            let better = votes[class] > votes[best]
                || (votes[class] == votes[best]
                    && votes[class] > 0
                    && summed[class] < summed[best]);
            if better {
                best = class;
            }
        }
        best
    }

    /// Vote fractions among the k nearest.
    pub fn predict_proba(&self, query: &[f64]) -> Vec<f64> {
        let neighbours = self.neighbours(query);
        let mut proba = alloc::vec![0.0f64; self.n_classes];
        for (_, class) in neighbours {
            proba[class] += 1.0 / self.k as f64;
        }
        proba
    }
}
