//! Deterministic train/validation/test splitting and k-fold validation.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LabeledDataset, LearnError};

/// Split fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.67,
            validation: 0.165,
            test: 0.165,
            seed: 0,
        }
    }
}

/// Integer sizes for `n` items under the given fractions, largest-remainder
/// rounding. Ties go to the earlier fraction.
pub fn largest_remainder_sizes(n: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| libm::floor(*e) as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - libm::floor(exact[a]);
        let rb = exact[b] - libm::floor(exact[b]);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for i in 0..n.saturating_sub(assigned) {
        sizes[order[i % order.len()]] += 1;
    }
    sizes
}

/// Disjoint cover of `0..n` into train, validation, and test index sets.
/// Deterministic for a fixed seed.
pub fn split_indices(
    n: usize,
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>), LearnError> {
    let sum = spec.train + spec.validation + spec.test;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(LearnError::FractionsDoNotSumToOne { sum });
    }
    if n < 3 {
        return Err(LearnError::TooFewSamples { n, needed: 3 });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    indices.shuffle(&mut rng);
    let sizes = largest_remainder_sizes(n, &[spec.train, spec.validation, spec.test]);
    let train = indices[..sizes[0]].to_vec();
    let validation = indices[sizes[0]..sizes[0] + sizes[1]].to_vec();
    let test = indices[sizes[0] + sizes[1]..].to_vec();
    Ok((train, validation, test))
}

/// Splits a dataset into train, validation, and test subsets.
pub fn split(
    dataset: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset), LearnError> {
    let (train, validation, test) = split_indices(dataset.len(), spec)?;
    Ok((
        dataset.select(&train),
        dataset.select(&validation),
        dataset.select(&test),
    ))
}

/// Validation folds: each sample appears in exactly one fold.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, LearnError> {
    if folds < 2 {
        return Err(LearnError::TooFewFolds { folds });
    }
    if n < folds {
        return Err(LearnError::TooFewSamples { n, needed: folds });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let fractions = alloc::vec![1.0 / folds as f64; folds];
    let sizes = largest_remainder_sizes(n, &fractions);
    let mut out = Vec::with_capacity(folds);
    let mut cursor = 0;
    for size in sizes {
        out.push(indices[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(out)
}

/// Mean and population standard deviation of per-fold accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct KfoldSummary {
    pub mean: f64,
    pub std: f64,
    pub fold_accuracies: Vec<f64>,
}

/// K-fold cross validation with caller-supplied train and predict steps.
pub fn kfold<M, Tr, Pr>(
    features: &[Vec<f64>],
    ids: &[usize],
    folds: usize,
    seed: u64,
    train: Tr,
    predict: Pr,
) -> Result<KfoldSummary, LearnError>
where
    Tr: Fn(&[Vec<f64>], &[usize]) -> M,
    Pr: Fn(&M, &[f64]) -> usize,
{
    if features.len() != ids.len() {
        return Err(LearnError::LengthMismatch);
    }
    let fold_sets = kfold_indices(features.len(), folds, seed)?;
    let mut fold_accuracies = Vec::with_capacity(folds);
    for validation in &fold_sets {
        let in_validation = |i: &usize| validation.contains(i);
        let train_idx: Vec<usize> = (0..features.len()).filter(|i| !in_validation(i)).collect();
        let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| features[i].clone()).collect();
        let train_y: Vec<usize> = train_idx.iter().map(|&i| ids[i]).collect();
        let model = train(&train_x, &train_y);
        let correct = validation
            .iter()
            .filter(|&&i| predict(&model, &features[i]) == ids[i])
            .count();
        fold_accuracies.push(correct as f64 / validation.len() as f64);
    }
    let mean = fold_accuracies.iter().sum::<f64>() / folds as f64;
    let variance =
        fold_accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / folds as f64;
    Ok(KfoldSummary {
        mean,
        std: libm::sqrt(variance),
        fold_accuracies,
    })
}
