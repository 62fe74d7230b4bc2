//! Accuracy and confusion-matrix reporting.

use alloc::string::String;
use alloc::vec::Vec;

use super::{ClassVocab, LearnError};

/// Micro accuracy: correct over total.
pub fn accuracy(truth: &[usize], predicted: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let correct = truth.iter().zip(predicted).filter(|(t, p)| t == p).count();
    correct as f64 / truth.len() as f64
}

/// Confusion counts with rows = truth, columns = predicted.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    /// Column precision for one class; 0 when the class was never
    /// predicted.
    pub fn precision(&self, class: usize) -> f64 {
        let predicted: usize = self.counts.iter().map(|row| row[class]).sum();
        if predicted == 0 {
            0.0
        } else {
            self.counts[class][class] as f64 / predicted as f64
        }
    }

    /// Row recall for one class; 0 when the class never occurred.
    pub fn recall(&self, class: usize) -> f64 {
        let actual: usize = self.counts[class].iter().sum();
        if actual == 0 {
            0.0
        } else {
            self.counts[class][class] as f64 / actual as f64
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

/// Builds the confusion matrix over a fixed vocabulary. Tokens outside the
/// vocabulary are an error.
pub fn confusion_matrix(
    vocab: &ClassVocab,
    truth: &[String],
    predicted: &[String],
) -> Result<ConfusionMatrix, LearnError> {
    if truth.len() != predicted.len() {
        return Err(LearnError::LengthMismatch);
    }
    let id = |token: &String| {
        vocab.id_of(token).ok_or_else(|| LearnError::UnknownLabel {
            token: token.clone(),
        })
    };
    let k = vocab.len();
    let mut counts = alloc::vec![alloc::vec![0usize; k]; k];
    for (t, p) in truth.iter().zip(predicted) {
        counts[id(t)?][id(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: vocab.tokens().to_vec(),
        counts,
    })
}
