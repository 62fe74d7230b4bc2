//! Labeled feature datasets over one or more annotation tasks.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::LearnError;

/// The four phonological annotation tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Task {
    Handedness,
    Handshape,
    Orientation,
    Location,
}

impl Task {
    pub const ALL: [Task; 4] = [
        Task::Handedness,
        Task::Handshape,
        Task::Orientation,
        Task::Location,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Handedness => "handedness",
            Task::Handshape => "handshape",
            Task::Orientation => "orientation",
            Task::Location => "location",
        }
    }

    pub fn parse(name: &str) -> Option<Task> {
        Task::ALL.iter().copied().find(|t| t.name() == name)
    }

    /// Stable id used to derive per-task seeds.
    pub fn stream_id(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A class vocabulary: sorted unique label tokens, so class ids order
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassVocab {
    tokens: Vec<String>,
}

impl ClassVocab {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        tokens.sort();
        tokens.dedup();
        Self { tokens }
    }

    pub fn id_of(&self, token: &str) -> Option<usize> {
        self.tokens.binary_search_by(|t| t.as_str().cmp(token)).ok()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One task's labels as class ids plus the vocabulary that interprets them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskColumn {
    pub vocab: ClassVocab,
    pub ids: Vec<usize>,
}

impl TaskColumn {
    pub fn from_tokens(tokens: &[String]) -> Self {
        let vocab = ClassVocab::from_tokens(tokens.iter().cloned());
        let ids = tokens
            .iter()
            .map(|t| vocab.id_of(t).expect("token came from the same list"))
            .collect();
        Self { vocab, ids }
    }

    pub fn tokens(&self) -> Vec<String> {
        self.ids
            .iter()
            .map(|&id| String::from(self.vocab.token(id)))
            .collect()
    }
}

/// Feature matrix plus per-task label columns over the same samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// N rows of F features each.
    pub features: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
    pub labels: BTreeMap<Task, TaskColumn>,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        labels: BTreeMap<Task, TaskColumn>,
    ) -> Result<Self, LearnError> {
        let n = features.len();
        for column in labels.values() {
            if column.ids.len() != n {
                return Err(LearnError::LengthMismatch);
            }
        }
        Ok(Self {
            features,
            feature_names,
            labels,
        })
    }

    pub fn single_task(
        features: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        task: Task,
        tokens: &[String],
    ) -> Result<Self, LearnError> {
        let mut labels = BTreeMap::new();
        labels.insert(task, TaskColumn::from_tokens(tokens));
        Self::new(features, feature_names, labels)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn task(&self, task: Task) -> Result<&TaskColumn, LearnError> {
        self.labels.get(&task).ok_or(LearnError::MissingTask { task })
    }

    /// A new dataset containing the selected rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        let features = indices.iter().map(|&i| self.features[i].clone()).collect();
        let labels = self
            .labels
            .iter()
            .map(|(task, column)| {
                (
                    *task,
                    TaskColumn {
                        vocab: column.vocab.clone(),
                        ids: indices.iter().map(|&i| column.ids[i]).collect(),
                    },
                )
            })
            .collect();
        LabeledDataset {
            features,
            feature_names: self.feature_names.clone(),
            labels,
        }
    }
}
