//! Chain-coupled multi-label training.
//!
//! A coupling edge `source -> target` makes the target classifier consume
//! the source classifier's predicted class-probability vector alongside
//! its own features, so a co-dependent label can steer another.
//!
//! Two regimes:
//!
//! * `Separate`: every task first gets an uncoupled classifier (stage one),
//!   then each coupled target is retrained with the stage-one source
//!   probabilities appended to its features. Feeding targets through the
//!   uncoupled source models in a single staging pass keeps cyclic
//!   couplings (orientation and location pointing at each other)
//!   well-defined.
//! * `Joint`: one network with a shared trunk and per-task softmax heads
//!   trained under a summed loss; a coupled head reads the trunk output
//!   concatenated with the source heads' trunk-level distributions.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mlp::{argmax, cross_entropy, relu, softmax, softmax_vjp, Adam, Linear, LinearGrads};
use super::{
    derive_seed, forest_train, knn_train, mlp_train, ForestModel, ForestParams, KnnModel,
    KnnParams, LabeledDataset, LearnError, MlpModel, MlpParams, Task, TrainingHistory,
};

/// Fixed training order: handshape first (it needs the finest features),
/// then the remaining tasks.
pub const TRAIN_ORDER: [Task; 4] = [
    Task::Handshape,
    Task::Handedness,
    Task::Orientation,
    Task::Location,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CouplingEdge {
    pub source: Task,
    pub target: Task,
}

impl CouplingEdge {
    pub fn new(source: Task, target: Task) -> Self {
        Self { source, target }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainMode {
    Separate,
    Joint,
}

/// Hyperparameters for the per-task base classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseParams {
    Knn(KnnParams),
    Forest(ForestParams),
    Mlp(MlpParams),
}

/// One trained base classifier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TrainedClassifier {
    Knn(KnnModel),
    Forest(ForestModel),
    Mlp(MlpModel),
}

impl TrainedClassifier {
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            TrainedClassifier::Knn(m) => m.predict(x),
            TrainedClassifier::Forest(m) => m.predict(x),
            TrainedClassifier::Mlp(m) => m.predict(x),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        match self {
            TrainedClassifier::Knn(m) => m.predict_proba(x),
            TrainedClassifier::Forest(m) => m.predict_proba(x),
            TrainedClassifier::Mlp(m) => m.predict_proba(x),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            TrainedClassifier::Knn(m) => m.n_classes,
            TrainedClassifier::Forest(m) => m.n_classes,
            TrainedClassifier::Mlp(m) => m.n_classes,
        }
    }
}

fn train_base(
    base: &BaseParams,
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<TrainedClassifier, LearnError> {
    Ok(match base {
        BaseParams::Knn(p) => TrainedClassifier::Knn(knn_train(p, x, y, n_classes)?),
        BaseParams::Forest(p) => TrainedClassifier::Forest(forest_train(p, x, y, n_classes, seed)?),
        BaseParams::Mlp(p) => TrainedClassifier::Mlp(mlp_train(p, x, y, n_classes, seed)?.0),
    })
}

/// Final classifier for one task plus the tasks whose probabilities it
/// consumes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparateHead {
    pub sources: Vec<Task>,
    pub classifier: TrainedClassifier,
}

/// Separately trained chain: per-task heads plus the uncoupled feeder
/// models whose probability vectors coupled heads consume at prediction
/// time.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparateChain {
    pub heads: BTreeMap<Task, SeparateHead>,
    pub feeders: BTreeMap<Task, TrainedClassifier>,
}

impl SeparateChain {
    fn augmented(&self, x: &[f64], sources: &[Task]) -> Vec<f64> {
        let mut row = x.to_vec();
        for s in sources {
            row.extend(self.feeders[s].predict_proba(x));
        }
        row
    }

    pub fn predict(&self, x: &[f64], task: Task) -> Result<usize, LearnError> {
        let head = self.heads.get(&task).ok_or(LearnError::MissingTask { task })?;
        if head.sources.is_empty() {
            Ok(head.classifier.predict(x))
        } else {
            Ok(head.classifier.predict(&self.augmented(x, &head.sources)))
        }
    }
}

/// Shared-trunk network with per-task heads; coupled heads additionally
/// read source-head distributions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointNet {
    pub trunk: Vec<Linear>,
    /// Trunk-level softmax head per task that is uncoupled or feeds
    /// another task.
    pub primary: BTreeMap<Task, Linear>,
    /// Refinement head per coupled task: input is trunk output followed by
    /// each source's primary distribution, in `TRAIN_ORDER`.
    pub refine: BTreeMap<Task, (Vec<Task>, Linear)>,
    pub n_classes: BTreeMap<Task, usize>,
}

struct JointForward {
    trunk_inputs: Vec<Vec<f64>>,
    trunk_zs: Vec<Vec<f64>>,
    hidden: Vec<f64>,
    primary_dist: BTreeMap<Task, Vec<f64>>,
    refine_input: BTreeMap<Task, Vec<f64>>,
    final_dist: BTreeMap<Task, Vec<f64>>,
}

impl JointNet {
    fn forward(&self, x: &[f64]) -> JointForward {
        let mut trunk_inputs = Vec::with_capacity(self.trunk.len());
        let mut trunk_zs = Vec::with_capacity(self.trunk.len());
        let mut a = x.to_vec();
        for layer in &self.trunk {
            trunk_inputs.push(a.clone());
            let z = layer.forward(&a);
            a = relu(&z);
            trunk_zs.push(z);
        }
        let hidden = a;

        let mut primary_dist = BTreeMap::new();
        for (task, head) in &self.primary {
            primary_dist.insert(*task, softmax(&head.forward(&hidden)));
        }
        let mut refine_input = BTreeMap::new();
        let mut final_dist = BTreeMap::new();
        for (task, (sources, head)) in &self.refine {
            let mut input = hidden.clone();
            for s in sources {
                input.extend(primary_dist[s].iter().copied());
            }
            final_dist.insert(*task, softmax(&head.forward(&input)));
            refine_input.insert(*task, input);
        }
        for (task, dist) in &primary_dist {
            final_dist.entry(*task).or_insert_with(|| dist.clone());
        }
        JointForward {
            trunk_inputs,
            trunk_zs,
            hidden,
            primary_dist,
            refine_input,
            final_dist,
        }
    }

    pub fn predict(&self, x: &[f64], task: Task) -> Result<usize, LearnError> {
        let forward = self.forward(x);
        let dist = forward
            .final_dist
            .get(&task)
            .ok_or(LearnError::MissingTask { task })?;
        Ok(argmax(dist))
    }

    pub fn predict_all(&self, x: &[f64]) -> BTreeMap<Task, usize> {
        let forward = self.forward(x);
        forward
            .final_dist
            .iter()
            .map(|(task, dist)| (*task, argmax(dist)))
            .collect()
    }
}

/// Gradient buffers shaped like a [`JointNet`].
struct JointGrads {
    trunk: Vec<LinearGrads>,
    primary: BTreeMap<Task, LinearGrads>,
    refine: BTreeMap<Task, LinearGrads>,
}

impl JointGrads {
    fn zeros(net: &JointNet) -> Self {
        Self {
            trunk: net.trunk.iter().map(LinearGrads::zeros).collect(),
            primary: net
                .primary
                .iter()
                .map(|(t, l)| (*t, LinearGrads::zeros(l)))
                .collect(),
            refine: net
                .refine
                .iter()
                .map(|(t, (_, l))| (*t, LinearGrads::zeros(l)))
                .collect(),
        }
    }
}

/// Mean summed-task loss plus gradients over a batch.
///
/// The loss sums every task's cross-entropy on its final distribution,
/// plus an auxiliary cross-entropy on the primary distribution of tasks
/// that are both coupled and feeding another task, so their trunk-level
/// heads keep learning their own label too.
fn joint_batch_gradients(
    net: &JointNet,
    x: &[Vec<f64>],
    labels: &BTreeMap<Task, &[usize]>,
    rows: &[usize],
) -> (f64, JointGrads) {
    let mut grads = JointGrads::zeros(net);
    let scale = 1.0 / rows.len() as f64;
    let mut loss = 0.0;

    for &row in rows {
        let input = &x[row];
        let fwd = net.forward(input);
        let mut d_hidden = alloc::vec![0.0; fwd.hidden.len()];
        // Accumulated upstream gradient on each primary distribution.
        let mut d_primary: BTreeMap<Task, Vec<f64>> = net
            .primary
            .iter()
            .map(|(t, l)| (*t, alloc::vec![0.0; l.out_dim]))
            .collect();

        // Refined heads: own loss, then gradient into trunk and sources.
        for (task, (sources, head)) in &net.refine {
            let truth = labels[task][row];
            let dist = &fwd.final_dist[task];
            loss += scale * cross_entropy(dist, truth);
            let dz: Vec<f64> = dist
                .iter()
                .enumerate()
                .map(|(i, &p)| scale * (p - f64::from(u8::from(i == truth))))
                .collect();
            let d_input = head.backward(&fwd.refine_input[task], &dz, grads.refine.get_mut(task).unwrap());
            let (dh, rest) = d_input.split_at(fwd.hidden.len());
            for (acc, d) in d_hidden.iter_mut().zip(dh) {
                *acc += d;
            }
            let mut offset = 0;
            for s in sources {
                let width = net.primary[s].out_dim;
                let chunk = &rest[offset..offset + width];
                for (acc, d) in d_primary.get_mut(s).unwrap().iter_mut().zip(chunk) {
                    *acc += d;
                }
                offset += width;
            }
        }

        // Primary heads: cross-entropy on their own label (the final loss
        // for uncoupled tasks, an auxiliary loss for coupled sources) plus
        // whatever the refine heads sent back through their distributions.
        for (task, head) in &net.primary {
            let dist = &fwd.primary_dist[task];
            let truth = labels[task][row];
            loss += scale * cross_entropy(dist, truth);
            let mut dz: Vec<f64> = dist
                .iter()
                .enumerate()
                .map(|(i, &p)| scale * (p - f64::from(u8::from(i == truth))))
                .collect();
            let upstream = &d_primary[task];
            if upstream.iter().any(|d| *d != 0.0) {
                for (z, v) in dz.iter_mut().zip(softmax_vjp(dist, upstream)) {
                    *z += v;
                }
            }
            let dh = head.backward(&fwd.hidden, &dz, grads.primary.get_mut(task).unwrap());
            for (acc, d) in d_hidden.iter_mut().zip(&dh) {
                *acc += d;
            }
        }

        // Trunk.
        let mut dz: Vec<f64> = d_hidden
            .iter()
            .zip(&fwd.trunk_zs[net.trunk.len() - 1])
            .map(|(&d, &z)| if z > 0.0 { d } else { 0.0 })
            .collect();
        for i in (0..net.trunk.len()).rev() {
            let dx = net.trunk[i].backward(&fwd.trunk_inputs[i], &dz, &mut grads.trunk[i]);
            if i > 0 {
                dz = dx
                    .iter()
                    .zip(&fwd.trunk_zs[i - 1])
                    .map(|(&d, &z)| if z > 0.0 { d } else { 0.0 })
                    .collect();
            }
        }
    }
    (loss, grads)
}

/// A trained multi-label model, chain-coupled or not.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ChainModel {
    Separate(SeparateChain),
    Joint(JointNet),
}

impl ChainModel {
    pub fn predict(&self, x: &[f64], task: Task) -> Result<usize, LearnError> {
        match self {
            ChainModel::Separate(chain) => chain.predict(x, task),
            ChainModel::Joint(net) => net.predict(x, task),
        }
    }

    pub fn tasks(&self) -> Vec<Task> {
        match self {
            ChainModel::Separate(chain) => chain.heads.keys().copied().collect(),
            ChainModel::Joint(net) => net.n_classes.keys().copied().collect(),
        }
    }
}

fn ordered_tasks(tasks: &[Task]) -> Vec<Task> {
    TRAIN_ORDER
        .iter()
        .copied()
        .filter(|t| tasks.contains(t))
        .collect()
}

fn sources_of(task: Task, coupling: &[CouplingEdge]) -> Vec<Task> {
    // Sources listed in the fixed task order, independent of edge order.
    TRAIN_ORDER
        .iter()
        .copied()
        .filter(|s| coupling.iter().any(|e| e.source == *s && e.target == task))
        .collect()
}

fn validate_coupling(tasks: &[Task], coupling: &[CouplingEdge]) -> Result<(), LearnError> {
    for edge in coupling {
        if edge.source == edge.target {
            return Err(LearnError::MissingTask { task: edge.source });
        }
        for t in [edge.source, edge.target] {
            if !tasks.contains(&t) {
                return Err(LearnError::MissingTask { task: t });
            }
        }
    }
    Ok(())
}

/// Trains one classifier per task, wiring coupled tasks per `coupling`.
///
/// Per-task seeds derive only from the master seed and the task, so an
/// empty coupling reproduces independent training exactly.
pub fn chain_train(
    dataset: &LabeledDataset,
    tasks: &[Task],
    coupling: &[CouplingEdge],
    mode: ChainMode,
    base: &BaseParams,
    seed: u64,
) -> Result<ChainModel, LearnError> {
    let order = ordered_tasks(tasks);
    if order.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    validate_coupling(&order, coupling)?;
    for t in &order {
        dataset.task(*t)?;
    }
    match mode {
        ChainMode::Separate => {
            separate_train(dataset, &order, coupling, base, seed).map(ChainModel::Separate)
        }
        ChainMode::Joint => match base {
            BaseParams::Mlp(params) => joint_train(dataset, &order, coupling, params, seed)
                .map(|(net, _)| ChainModel::Joint(net)),
            _ => Err(LearnError::JointRequiresMlp),
        },
    }
}

fn separate_train(
    dataset: &LabeledDataset,
    order: &[Task],
    coupling: &[CouplingEdge],
    base: &BaseParams,
    seed: u64,
) -> Result<SeparateChain, LearnError> {
    // Stage one: uncoupled model per task.
    let mut stage_one: BTreeMap<Task, TrainedClassifier> = BTreeMap::new();
    for &task in order {
        let column = dataset.task(task)?;
        let model = train_base(
            base,
            &dataset.features,
            &column.ids,
            column.vocab.len(),
            derive_seed(seed, task.stream_id()),
        )?;
        stage_one.insert(task, model);
    }

    // Stage two: retrain coupled targets on augmented features.
    let mut heads = BTreeMap::new();
    let mut feeders = BTreeMap::new();
    for &task in order {
        let sources = sources_of(task, coupling);
        let classifier = if sources.is_empty() {
            stage_one[&task].clone()
        } else {
            let augmented: Vec<Vec<f64>> = dataset
                .features
                .iter()
                .map(|row| {
                    let mut out = row.clone();
                    for s in &sources {
                        out.extend(stage_one[s].predict_proba(row));
                    }
                    out
                })
                .collect();
            let column = dataset.task(task)?;
            train_base(
                base,
                &augmented,
                &column.ids,
                column.vocab.len(),
                derive_seed(seed, 16 + task.stream_id()),
            )?
        };
        heads.insert(task, SeparateHead { sources, classifier });
    }
    for edge in coupling {
        feeders
            .entry(edge.source)
            .or_insert_with(|| stage_one[&edge.source].clone());
    }
    Ok(SeparateChain { heads, feeders })
}

fn joint_train(
    dataset: &LabeledDataset,
    order: &[Task],
    coupling: &[CouplingEdge],
    params: &MlpParams,
    seed: u64,
) -> Result<(JointNet, TrainingHistory), LearnError> {
    let n = dataset.len();
    if n == 0 {
        return Err(LearnError::EmptyTrainingSet);
    }
    assert!(
        (1..=3).contains(&params.hidden_layers),
        "1 to 3 hidden layers supported"
    );
    let mut n_classes = BTreeMap::new();
    for &task in order {
        let column = dataset.task(task)?;
        if column.vocab.len() < 2 {
            return Err(LearnError::TooFewClasses {
                classes: column.vocab.len(),
            });
        }
        n_classes.insert(task, column.vocab.len());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trunk = Vec::with_capacity(params.hidden_layers);
    let mut in_dim = dataset.n_features();
    for _ in 0..params.hidden_layers {
        trunk.push(Linear::init(in_dim, params.hidden_size, &mut rng));
        in_dim = params.hidden_size;
    }
    let hidden = in_dim;

    let coupled: Vec<Task> = order
        .iter()
        .copied()
        .filter(|t| !sources_of(*t, coupling).is_empty())
        .collect();
    let is_source =
        |t: Task| -> bool { coupling.iter().any(|e| e.source == t) };

    // Heads are initialized in the fixed task order so the weight stream
    // never depends on the coupling.
    let mut primary = BTreeMap::new();
    let mut refine = BTreeMap::new();
    for &task in order {
        if !coupled.contains(&task) || is_source(task) {
            primary.insert(task, Linear::init(hidden, n_classes[&task], &mut rng));
        }
    }
    for &task in order {
        let sources = sources_of(task, coupling);
        if !sources.is_empty() {
            let extra: usize = sources.iter().map(|s| n_classes[s]).sum();
            refine.insert(
                task,
                (sources, Linear::init(hidden + extra, n_classes[&task], &mut rng)),
            );
        }
    }
    let mut net = JointNet {
        trunk,
        primary,
        refine,
        n_classes,
    };

    let labels: BTreeMap<Task, &[usize]> = order
        .iter()
        .map(|t| (*t, dataset.task(*t).unwrap().ids.as_slice()))
        .collect();

    // Validation holdout for the curve, as in the single-task network.
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let val_count = libm::floor(params.validation_fraction * n as f64) as usize;
    let (val_idx, train_idx) = indices.split_at(val_count);
    let val_idx = val_idx.to_vec();
    let mut train_idx = train_idx.to_vec();
    if train_idx.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }

    let layer_refs: Vec<&Linear> = collect_layers(&net);
    let mut adam = Adam::new(&layer_refs, params);
    let mut history = TrainingHistory::default();

    for epoch in 0..params.epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in train_idx.chunks(params.batch_size).enumerate() {
            let (loss, grads) = joint_batch_gradients(&net, &dataset.features, &labels, batch);
            if !loss.is_finite() {
                return Err(LearnError::NanLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            epoch_loss += loss * batch.len() as f64;
            let grad_list = collect_grads(&grads);
            let mut refs = collect_layers_mut(&mut net);
            adam.step(&mut refs, &grad_list);
        }
        history.epoch_losses.push(epoch_loss / train_idx.len() as f64);

        let last = epoch + 1 == params.epochs;
        if !val_idx.is_empty() && ((epoch + 1) % params.validation_interval == 0 || last) {
            // Mean accuracy across tasks.
            let mut correct = 0usize;
            let mut total = 0usize;
            for &i in &val_idx {
                let predictions = net.predict_all(&dataset.features[i]);
                for (task, &prediction) in &predictions {
                    correct += usize::from(prediction == labels[task][i]);
                    total += 1;
                }
            }
            history
                .validation
                .push((epoch + 1, correct as f64 / total.max(1) as f64));
        }
    }
    Ok((net, history))
}

fn collect_layers(net: &JointNet) -> Vec<&Linear> {
    let mut out: Vec<&Linear> = net.trunk.iter().collect();
    out.extend(net.primary.values());
    out.extend(net.refine.values().map(|(_, l)| l));
    out
}

fn collect_layers_mut(net: &mut JointNet) -> Vec<&mut Linear> {
    let mut out: Vec<&mut Linear> = net.trunk.iter_mut().collect();
    out.extend(net.primary.values_mut());
    out.extend(net.refine.values_mut().map(|(_, l)| l));
    out
}

fn collect_grads(grads: &JointGrads) -> Vec<LinearGrads> {
    let mut out: Vec<LinearGrads> = grads.trunk.clone();
    out.extend(grads.primary.values().cloned());
    out.extend(grads.refine.values().cloned());
    out
}

/// The joint trainer also returns a history; `chain_train` drops it. Use
/// this entry point when the curve matters.
pub fn joint_chain_train(
    dataset: &LabeledDataset,
    tasks: &[Task],
    coupling: &[CouplingEdge],
    params: &MlpParams,
    seed: u64,
) -> Result<(JointNet, TrainingHistory), LearnError> {
    let order = ordered_tasks(tasks);
    validate_coupling(&order, coupling)?;
    joint_train(dataset, &order, coupling, params, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::accuracy;
    use crate::synthetic::{codependent_dataset, DependenceStrength};

    fn knn_base() -> BaseParams {
        BaseParams::Knn(KnnParams { k: 5 })
    }

    fn eval_task(model: &ChainModel, ds: &LabeledDataset, task: Task) -> f64 {
        let column = ds.task(task).unwrap();
        let predictions: Vec<usize> = ds
            .features
            .iter()
            .map(|row| model.predict(row, task).unwrap())
            .collect();
        accuracy(&column.ids, &predictions)
    }

    #[test]
    fn empty_coupling_equals_independent_training() {
        let (train, _) = codependent_dataset(3, 300, 100, DependenceStrength::Strong);
        let chain = chain_train(
            &train,
            &[Task::Orientation, Task::Location],
            &[],
            ChainMode::Separate,
            &knn_base(),
            42,
        )
        .unwrap();
        let ChainModel::Separate(chain) = chain else { panic!() };
        for task in [Task::Orientation, Task::Location] {
            let column = train.task(task).unwrap();
            let direct = knn_train(
                &KnnParams { k: 5 },
                &train.features,
                &column.ids,
                column.vocab.len(),
            )
            .unwrap();
            assert_eq!(
                chain.heads[&task].classifier,
                TrainedClassifier::Knn(direct)
            );
            assert!(chain.heads[&task].sources.is_empty());
        }
        assert!(chain.feeders.is_empty());
    }

    #[test]
    fn coupling_appends_source_probabilities() {
        let (train, _) = codependent_dataset(5, 300, 100, DependenceStrength::Strong);
        let chain = chain_train(
            &train,
            &[Task::Orientation, Task::Location],
            &[
                CouplingEdge::new(Task::Location, Task::Orientation),
                CouplingEdge::new(Task::Orientation, Task::Location),
            ],
            ChainMode::Separate,
            &knn_base(),
            7,
        )
        .unwrap();
        let ChainModel::Separate(chain) = chain else { panic!() };
        let f = train.n_features();
        let orientation_classes = train.task(Task::Orientation).unwrap().vocab.len();
        let location_classes = train.task(Task::Location).unwrap().vocab.len();
        let TrainedClassifier::Knn(ref m) = chain.heads[&Task::Orientation].classifier else {
            panic!()
        };
        assert_eq!(m.train_x[0].len(), f + location_classes);
        let TrainedClassifier::Knn(ref m) = chain.heads[&Task::Location].classifier else {
            panic!()
        };
        assert_eq!(m.train_x[0].len(), f + orientation_classes);
    }

    #[test]
    fn coupling_improves_dependent_task() {
        // Orientation is nearly determined by location but only weakly by
        // the features, so location probabilities are the decisive signal.
        let (train, test) = codependent_dataset(11, 600, 200, DependenceStrength::Strong);
        let uncoupled = chain_train(
            &train,
            &[Task::Orientation, Task::Location],
            &[],
            ChainMode::Separate,
            &knn_base(),
            21,
        )
        .unwrap();
        let coupled = chain_train(
            &train,
            &[Task::Orientation, Task::Location],
            &[CouplingEdge::new(Task::Location, Task::Orientation)],
            ChainMode::Separate,
            &knn_base(),
            21,
        )
        .unwrap();
        let base = eval_task(&uncoupled, &test, Task::Orientation);
        let chained = eval_task(&coupled, &test, Task::Orientation);
        assert!(
            chained >= base - 0.02,
            "coupling harmed orientation: {base} -> {chained}"
        );
        assert!(chained > base, "expected improvement: {base} -> {chained}");
    }

    #[test]
    fn cyclic_coupling_stages_cleanly() {
        let (train, test) = codependent_dataset(13, 400, 150, DependenceStrength::Strong);
        let coupled = chain_train(
            &train,
            &[Task::Orientation, Task::Location],
            &[
                CouplingEdge::new(Task::Location, Task::Orientation),
                CouplingEdge::new(Task::Orientation, Task::Location),
            ],
            ChainMode::Separate,
            &knn_base(),
            31,
        )
        .unwrap();
        // Both heads predict through their uncoupled feeders.
        let orientation = eval_task(&coupled, &test, Task::Orientation);
        let location = eval_task(&coupled, &test, Task::Location);
        assert!(orientation > 0.5);
        assert!(location > 0.5);
    }

    #[test]
    fn joint_requires_mlp_base() {
        let (train, _) = codependent_dataset(17, 60, 10, DependenceStrength::Weak);
        let err = chain_train(
            &train,
            &[Task::Orientation, Task::Location],
            &[],
            ChainMode::Joint,
            &knn_base(),
            0,
        )
        .unwrap_err();
        assert_eq!(err, LearnError::JointRequiresMlp);
    }

    #[test]
    fn joint_refine_head_width_grows_by_source_classes() {
        let (train, _) = codependent_dataset(19, 200, 10, DependenceStrength::Strong);
        let params = MlpParams {
            hidden_size: 12,
            epochs: 3,
            ..MlpParams::default()
        };
        let model = chain_train(
            &train,
            &[Task::Orientation, Task::Location],
            &[
                CouplingEdge::new(Task::Location, Task::Orientation),
                CouplingEdge::new(Task::Orientation, Task::Location),
            ],
            ChainMode::Joint,
            &BaseParams::Mlp(params),
            3,
        )
        .unwrap();
        let ChainModel::Joint(net) = model else { panic!() };
        let location_classes = net.n_classes[&Task::Location];
        let orientation_classes = net.n_classes[&Task::Orientation];
        let (_, ref head) = net.refine[&Task::Orientation];
        assert_eq!(head.in_dim, 12 + location_classes);
        let (_, ref head) = net.refine[&Task::Location];
        assert_eq!(head.in_dim, 12 + orientation_classes);
        // Both tasks keep a primary head: each feeds the other.
        assert!(net.primary.contains_key(&Task::Orientation));
        assert!(net.primary.contains_key(&Task::Location));
    }

    #[test]
    fn joint_uncoupled_learns_all_tasks() {
        let (train, test) = codependent_dataset(23, 500, 150, DependenceStrength::Strong);
        let params = MlpParams {
            hidden_size: 24,
            epochs: 80,
            ..MlpParams::default()
        };
        let model = chain_train(
            &train,
            &[Task::Orientation, Task::Location],
            &[],
            ChainMode::Joint,
            &BaseParams::Mlp(params),
            5,
        )
        .unwrap();
        let location = eval_task(&model, &test, Task::Location);
        assert!(location >= 0.7, "location accuracy {location}");
    }

    #[test]
    fn joint_gradients_match_finite_differences() {
        let (train, _) = codependent_dataset(29, 40, 10, DependenceStrength::Strong);
        let params = MlpParams {
            hidden_size: 6,
            epochs: 0,
            ..MlpParams::default()
        };
        let (mut net, _) = joint_chain_train(
            &train,
            &[Task::Orientation, Task::Location],
            &[CouplingEdge::new(Task::Location, Task::Orientation)],
            &params,
            37,
        )
        .unwrap();
        let labels: BTreeMap<Task, &[usize]> = [Task::Orientation, Task::Location]
            .iter()
            .map(|t| (*t, train.task(*t).unwrap().ids.as_slice()))
            .collect();
        let rows: Vec<usize> = (0..train.len()).collect();
        let (_, analytic) = joint_batch_gradients(&net, &train.features, &labels, &rows);
        let loss_of = |net: &JointNet| -> f64 {
            let (loss, _) = joint_batch_gradients(net, &train.features, &labels, &rows);
            loss
        };

        let h = 1e-5;
        let mut max_rel = 0.0f64;
        // Spot-check a stride of weights in every layer group.
        let flat_analytic = collect_grads(&analytic);
        for (layer_no, layer_grads) in flat_analytic.iter().enumerate() {
            for i in (0..layer_grads.weights.len()).step_by(7) {
                let orig = collect_layers(&net)[layer_no].weights[i];
                collect_layers_mut(&mut net)[layer_no].weights[i] = orig + h;
                let up = loss_of(&net);
                collect_layers_mut(&mut net)[layer_no].weights[i] = orig - h;
                let down = loss_of(&net);
                collect_layers_mut(&mut net)[layer_no].weights[i] = orig;
                let numeric = (up - down) / (2.0 * h);
                let a = layer_grads.weights[i];
                let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
                max_rel = max_rel.max(rel);
            }
        }
        assert!(max_rel < 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn rejects_unknown_coupling_task() {
        let (train, _) = codependent_dataset(31, 30, 10, DependenceStrength::Weak);
        let err = chain_train(
            &train,
            &[Task::Orientation, Task::Location],
            &[CouplingEdge::new(Task::Handshape, Task::Orientation)],
            ChainMode::Separate,
            &knn_base(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, LearnError::MissingTask { .. }));
    }
}
