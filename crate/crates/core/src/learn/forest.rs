//! Random forest of CART trees: bootstrap samples, Gini splits over a
//! random feature subset per split, majority-vote prediction.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, LearnError};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub max_leaf_nodes: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Fraction of features drawn as split candidates at every node,
    /// rounded up.
    pub max_features_fraction: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_estimators: 30,
            max_depth: 20,
            max_leaf_nodes: 800,
            min_samples_leaf: 50,
            min_samples_split: 50,
            max_features_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
enum Node {
    Leaf {
        class: usize,
        distribution: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
    pub n_features: usize,
    /// Mean decrease in Gini impurity per feature, normalized to sum 1
    /// (all zeros when no split ever happened).
    pub importances: Vec<f64>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    /// Impurity decrease weighted by the node's share of the bootstrap.
    weighted_gain: f64,
}

struct Pending {
    slot: usize,
    indices: Vec<usize>,
    depth: usize,
    split: Option<BestSplit>,
    order: usize,
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    params: &'a ForestParams,
    n_subset: usize,
    n_bootstrap: f64,
}

impl<'a> TreeBuilder<'a> {
    fn class_counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; self.n_classes];
        for &i in indices {
            counts[self.y[i]] += 1;
        }
        counts
    }

    /// Best Gini split over a freshly drawn feature subset, or `None` when
    /// the node must stay a leaf.
    fn evaluate(&self, indices: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> Option<BestSplit> {
        let n = indices.len();
        if n < self.params.min_samples_split || depth >= self.params.max_depth {
            return None;
        }
        let counts = self.class_counts(indices);
        let parent_gini = gini(&counts, n);
        if parent_gini == 0.0 {
            return None;
        }

        // Partial Fisher-Yates draw of the candidate features.
        let n_features = self.x[0].len();
        let mut pool: Vec<usize> = (0..n_features).collect();
        for i in 0..self.n_subset {
            let j = rng.gen_range(i..n_features);
            pool.swap(i, j);
        }

        let mut best: Option<BestSplit> = None;
        for &feature in &pool[..self.n_subset] {
            let mut values: Vec<(f64, usize)> =
                indices.iter().map(|&i| (self.x[i][feature], self.y[i])).collect();
            values.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_counts = alloc::vec![0usize; self.n_classes];
            for split_at in 1..n {
                left_counts[values[split_at - 1].1] += 1;
                if values[split_at].0 == values[split_at - 1].0 {
                    continue;
                }
                let left_n = split_at;
                let right_n = n - split_at;
                if left_n < self.params.min_samples_leaf
                    || right_n < self.params.min_samples_leaf
                {
                    continue;
                }
                let right_counts: Vec<usize> = counts
                    .iter()
                    .zip(&left_counts)
                    .map(|(&c, &l)| c - l)
                    .collect();
                let child_gini = (left_n as f64 * gini(&left_counts, left_n)
                    + right_n as f64 * gini(&right_counts, right_n))
                    / n as f64;
                let weighted_gain = (n as f64 / self.n_bootstrap) * (parent_gini - child_gini);
                if weighted_gain > 1e-12
                    && best.as_ref().map_or(true, |b| weighted_gain > b.weighted_gain)
                {
                    best = Some(BestSplit {
                        feature,
                        threshold: (values[split_at - 1].0 + values[split_at].0) / 2.0,
                        weighted_gain,
                    });
                }
            }
        }
        best
    }

    /// Grows one tree best-first so the leaf budget cuts the least useful
    /// splits, and accumulates this tree's importance contributions.
    fn build(&self, indices: Vec<usize>, rng: &mut ChaCha8Rng, importances: &mut [f64]) -> DecisionTree {
        let mut nodes: Vec<Node> = Vec::new();
        let mut pending: Vec<Pending> = Vec::new();
        let mut order = 0usize;

        nodes.push(Node::Leaf {
            class: 0,
            distribution: Vec::new(),
        });
        let split = self.evaluate(&indices, 0, rng);
        pending.push(Pending {
            slot: 0,
            indices,
            depth: 0,
            split,
            order,
        });

        let mut leaves = 1usize;
        loop {
            if leaves >= self.params.max_leaf_nodes {
                break;
            }
            // The splittable pending node with the largest weighted gain;
            // ties go to the earliest created.
            let chosen = pending
                .iter()
                .enumerate()
                .filter(|(_, p)| p.split.is_some())
                .max_by(|(_, a), (_, b)| {
                    let ga = a.split.as_ref().unwrap().weighted_gain;
                    let gb = b.split.as_ref().unwrap().weighted_gain;
                    ga.total_cmp(&gb).then(b.order.cmp(&a.order))
                })
                .map(|(i, _)| i);
            let Some(at) = chosen else { break };
            let node = pending.swap_remove(at);
            let split = node.split.unwrap();

            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = node
                .indices
                .iter()
                .partition(|&&i| self.x[i][split.feature] <= split.threshold);
            importances[split.feature] += split.weighted_gain;

            let left_slot = nodes.len();
            nodes.push(Node::Leaf { class: 0, distribution: Vec::new() });
            let right_slot = nodes.len();
            nodes.push(Node::Leaf { class: 0, distribution: Vec::new() });
            nodes[node.slot] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: left_slot,
                right: right_slot,
            };
            leaves += 1;

            for (slot, indices) in [(left_slot, left_idx), (right_slot, right_idx)] {
                order += 1;
                let split = self.evaluate(&indices, node.depth + 1, rng);
                pending.push(Pending {
                    slot,
                    indices,
                    depth: node.depth + 1,
                    split,
                    order,
                });
            }
        }

        // Everything still pending becomes a leaf.
        for p in pending {
            let counts = self.class_counts(&p.indices);
            let n = p.indices.len().max(1);
            let class = counts
                .iter()
                .enumerate()
                .max_by(|(ia, a), (ib, b)| a.cmp(b).then(ib.cmp(ia)))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let distribution = counts.iter().map(|&c| c as f64 / n as f64).collect();
            nodes[p.slot] = Node::Leaf { class, distribution };
        }
        DecisionTree { nodes }
    }
}

pub fn forest_train(
    params: &ForestParams,
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<ForestModel, LearnError> {
    if x.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch);
    }
    let n = x.len();
    let n_features = x[0].len();
    let n_subset = libm::ceil(params.max_features_fraction * n_features as f64) as usize;
    let builder = TreeBuilder {
        x,
        y,
        n_classes,
        params,
        n_subset: n_subset.clamp(1, n_features),
        n_bootstrap: n as f64,
    };

    let mut importances = alloc::vec![0.0f64; n_features];
    let mut trees = Vec::with_capacity(params.n_estimators);
    for t in 0..params.n_estimators {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
        let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        trees.push(builder.build(bootstrap, &mut rng, &mut importances));
    }

    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        for v in &mut importances {
            *v /= total;
        }
    }
    Ok(ForestModel {
        trees,
        n_classes,
        n_features,
        importances,
    })
}

impl ForestModel {
    /// Majority vote over the trees; ties go to the smaller class id.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = alloc::vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(x)] += 1;
        }
        votes
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.cmp(b).then(ib.cmp(ia)))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Fraction of trees voting for each class.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut proba = alloc::vec![0.0f64; self.n_classes];
        let weight = 1.0 / self.trees.len() as f64;
        for tree in &self.trees {
            proba[tree.predict(x)] += weight;
        }
        proba
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> ForestParams {
        ForestParams {
            n_estimators: 15,
            max_depth: 8,
            max_leaf_nodes: 64,
            min_samples_leaf: 2,
            min_samples_split: 4,
            max_features_fraction: 0.5,
        }
    }

    #[test]
    fn single_class_constant_classifier() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, -(i as f64)]).collect();
        let y = vec![3usize; 20];
        let model = forest_train(&small_params(), &x, &y, 5, 1).unwrap();
        assert_eq!(model.predict(&[100.0, 2.0]), 3);
        assert!(model.importances.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn planted_feature_ranks_first() {
        // label = sign(feature0); the other features are noise.
        let (x, y) = crate::synthetic::planted_feature_dataset(5, 200, 6);
        let model = forest_train(&small_params(), &x, &y, 2, 7).unwrap();
        let top = model
            .importances
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(top, 0, "importances {:?}", model.importances);
        assert!(model.importances[0] > model.importances[1..].iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn importances_normalized() {
        let (x, y) = crate::synthetic::planted_feature_dataset(11, 150, 4);
        let model = forest_train(&small_params(), &x, &y, 2, 3).unwrap();
        let sum: f64 = model.importances.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(model.importances.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn learns_separable_data() {
        let (x, y) = crate::synthetic::planted_feature_dataset(13, 300, 3);
        let model = forest_train(&small_params(), &x, &y, 2, 9).unwrap();
        let correct = x.iter().zip(&y).filter(|(q, &l)| model.predict(q) == l).count();
        assert!(correct as f64 / x.len() as f64 > 0.95);
    }

    #[test]
    fn deterministic_for_seed() {
        let (x, y) = crate::synthetic::planted_feature_dataset(17, 80, 3);
        let a = forest_train(&small_params(), &x, &y, 2, 21).unwrap();
        let b = forest_train(&small_params(), &x, &y, 2, 21).unwrap();
        assert_eq!(a, b);
        let c = forest_train(&small_params(), &x, &y, 2, 22).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn permuting_features_permutes_importances() {
        // With every feature a split candidate, column order only affects
        // tie-breaking, and gains on continuous data do not tie.
        let params = ForestParams {
            max_features_fraction: 1.0,
            ..small_params()
        };
        let (x, y) = crate::synthetic::planted_feature_dataset(19, 200, 3);
        let swapped: Vec<Vec<f64>> = x.iter().map(|row| vec![row[2], row[1], row[0]]).collect();
        let a = forest_train(&params, &x, &y, 2, 31).unwrap();
        let b = forest_train(&params, &swapped, &y, 2, 31).unwrap();
        assert!((a.importances[0] - b.importances[2]).abs() < 1e-9);
        assert!((a.importances[2] - b.importances[0]).abs() < 1e-9);
    }

    #[test]
    fn proba_sums_to_one() {
        let (x, y) = crate::synthetic::planted_feature_dataset(23, 100, 3);
        let model = forest_train(&small_params(), &x, &y, 2, 5).unwrap();
        let p = model.predict_proba(&x[0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn leaf_budget_limits_tree_size() {
        let (x, y) = crate::synthetic::planted_feature_dataset(29, 300, 3);
        let params = ForestParams {
            max_leaf_nodes: 4,
            ..small_params()
        };
        let model = forest_train(&params, &x, &y, 2, 1).unwrap();
        for tree in &model.trees {
            let leaves = tree
                .nodes
                .iter()
                .filter(|n| matches!(n, Node::Leaf { .. }))
                .count();
            assert!(leaves <= 4);
        }
    }
}
