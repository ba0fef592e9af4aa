//! Bagged CART random-forest classifier.
//!
//! Trees are grown on bootstrap samples with the Gini criterion, a uniform
//! random feature subset at every split, and midpoint thresholds between
//! sorted distinct feature values. Prediction is a majority vote over
//! trees; ties break toward the lowest class index. The out-of-bag score
//! evaluates each training row using only the trees whose bootstrap sample
//! excluded it.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;

use super::{Dataset, LearnError, TrainReport};

/// Forest hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    /// `None` grows trees until purity or the sample-count floors stop them.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` means ceil(sqrt(d)).
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        ForestHyperparams {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 4,
            min_samples_leaf: 2,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestHyperparams {
    fn validate(&self) -> Result<(), LearnError> {
        if self.n_trees == 0 {
            return Err(LearnError::InvalidHyperparams("n_trees must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(LearnError::InvalidHyperparams(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        if self.min_samples_split < 2 * self.min_samples_leaf {
            return Err(LearnError::InvalidHyperparams(
                "need min_samples_split >= 2 * min_samples_leaf".into(),
            ));
        }
        Ok(())
    }
}

/// One tree node in a flat arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        /// Rows with value <= threshold go left.
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Training-row class counts at this leaf (bootstrap multiplicity).
        counts: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Index of the leaf a row lands in.
    pub fn leaf_for(&self, row: &[f64]) -> usize {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                TreeNode::Leaf { .. } => return node,
            }
        }
    }

    /// The class this tree votes for: majority of the leaf counts, ties
    /// toward the lowest class index.
    pub fn vote(&self, row: &[f64]) -> usize {
        match &self.nodes[self.leaf_for(row)] {
            TreeNode::Leaf { counts } => argmax_u32(counts),
            TreeNode::Split { .. } => unreachable!("leaf_for returned a split node"),
        }
    }
}

fn argmax_u32(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Trained forest: the trees, the per-tree bootstrap bags (row indices with
/// multiplicity) and out-of-bag row sets, and the class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub class_labels: Vec<String>,
    pub trees: Vec<DecisionTree>,
    /// Bootstrap sample of each tree, as training-row indices (len n).
    pub bags: Vec<Vec<u32>>,
    /// Training rows each tree never saw.
    pub oob_rows: Vec<Vec<u32>>,
}

impl ForestModel {
    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }
}

fn gini(counts: &[u32], total: f64) -> f64 {
    // 1 - sum p_i^2
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = f64::from(c) / total;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    hp: &'a ForestHyperparams,
    features_per_split: usize,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    /// Grow the subtree over `rows` (bootstrap indices, may repeat) and
    /// return its node index.
    fn grow(&mut self, rows: &mut [u32], depth: usize, rng: &mut impl Rng) -> u32 {
        let mut counts = vec![0u32; self.n_classes];
        for &r in rows.iter() {
            counts[self.y[r as usize]] += 1;
        }
        let total = rows.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_stop = self.hp.max_depth.is_some_and(|d| depth >= d);
        if pure || total < self.hp.min_samples_split || depth_stop {
            return self.push(TreeNode::Leaf { counts });
        }

        match self.best_split(rows, &counts, rng) {
            None => self.push(TreeNode::Leaf { counts }),
            Some((feature, threshold)) => {
                // Partition rows in place: left = value <= threshold.
                let mut mid = 0;
                for i in 0..rows.len() {
                    if self.x[rows[i] as usize][feature] <= threshold {
                        rows.swap(i, mid);
                        mid += 1;
                    }
                }
                let (left_rows, right_rows) = rows.split_at_mut(mid);
                // Reserve the split slot before growing children.
                let node = self.push(TreeNode::Leaf { counts: Vec::new() });
                let left = self.grow(left_rows, depth + 1, rng);
                let right = self.grow(right_rows, depth + 1, rng);
                self.nodes[node as usize] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                node
            }
        }
    }

    /// Best (feature, midpoint threshold) by Gini gain over a random feature
    /// subset. First strictly-best candidate wins ties. Only splits leaving
    /// at least `min_samples_leaf` rows on each side qualify; splits that do
    /// not strictly reduce impurity are rejected.
    fn best_split(
        &self,
        rows: &[u32],
        parent_counts: &[u32],
        rng: &mut impl Rng,
    ) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let total = rows.len() as f64;
        let parent_impurity = gini(parent_counts, total);
        let features = sample_distinct(d, self.features_per_split, rng);

        let mut best: Option<(usize, f64)> = None;
        let mut best_gain = 0.0;
        let mut order: Vec<u32> = Vec::with_capacity(rows.len());
        for &feature in &features {
            order.clear();
            order.extend_from_slice(rows);
            order.sort_by(|&a, &b| {
                self.x[a as usize][feature].total_cmp(&self.x[b as usize][feature])
            });

            let mut left_counts = vec![0u32; self.n_classes];
            let mut left_n = 0usize;
            for w in 0..order.len() - 1 {
                let row = order[w] as usize;
                left_counts[self.y[row]] += 1;
                left_n += 1;
                let here = self.x[row][feature];
                let next = self.x[order[w + 1] as usize][feature];
                if here == next {
                    continue; // not a boundary between distinct values
                }
                let right_n = order.len() - left_n;
                if left_n < self.hp.min_samples_leaf || right_n < self.hp.min_samples_leaf {
                    continue;
                }
                let mut right_counts = vec![0u32; self.n_classes];
                for (i, rc) in right_counts.iter_mut().enumerate() {
                    *rc = parent_counts[i] - left_counts[i];
                }
                let gain = parent_impurity
                    - (left_n as f64 / total) * gini(&left_counts, left_n as f64)
                    - (right_n as f64 / total) * gini(&right_counts, right_n as f64);
                if gain > best_gain {
                    best_gain = gain;
                    best = Some((feature, (here + next) / 2.0));
                }
            }
        }
        best
    }

    fn push(&mut self, node: TreeNode) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }
}

/// Sample `k` distinct values from `0..d`, in draw order.
fn sample_distinct(d: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..d).collect();
    let k = k.min(d);
    for i in 0..k {
        let j = rng.gen_range(i..d);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Train a bagged forest. Trees are grown in parallel; each derives its own
/// RNG stream from `hp.seed` and the tree index, so the result does not
/// depend on thread count.
pub fn train_forest(
    x: &[Vec<f64>],
    y: &[usize],
    hp: &ForestHyperparams,
) -> Result<(ForestModel, TrainReport), LearnError> {
    hp.validate()?;
    if x.is_empty() || y.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(LearnError::DimensionMismatch(format!(
            "{} rows vs {} labels",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    if x.iter().any(|row| row.len() != d) {
        return Err(LearnError::DimensionMismatch("ragged feature rows".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(LearnError::DimensionMismatch(
            "features must be finite".into(),
        ));
    }
    let n = x.len();
    let n_classes = y.iter().max().unwrap() + 1;
    let features_per_split = hp
        .features_per_split
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);

    let built: Vec<(DecisionTree, Vec<u32>, Vec<u32>)> = (0..hp.n_trees)
        .into_par_iter()
        .map(|tree_idx| {
            let mut tree_rng = rng::stream(hp.seed, &format!("forest/tree{tree_idx}"));
            let mut bag: Vec<u32> = if hp.bootstrap {
                (0..n).map(|_| tree_rng.gen_range(0..n) as u32).collect()
            } else {
                (0..n as u32).collect()
            };
            let mut in_bag = vec![false; n];
            for &r in &bag {
                in_bag[r as usize] = true;
            }
            let oob: Vec<u32> = (0..n as u32).filter(|&r| !in_bag[r as usize]).collect();

            let mut builder = TreeBuilder {
                x,
                y,
                n_classes,
                hp,
                features_per_split,
                nodes: Vec::new(),
            };
            let root = builder.grow(&mut bag, 0, &mut tree_rng);
            debug_assert_eq!(root, 0);
            (DecisionTree { nodes: builder.nodes }, bag, oob)
        })
        .collect();

    let mut model = ForestModel {
        n_features: d,
        class_labels: (0..n_classes).map(|c| c.to_string()).collect(),
        trees: Vec::with_capacity(hp.n_trees),
        bags: Vec::with_capacity(hp.n_trees),
        oob_rows: Vec::with_capacity(hp.n_trees),
    };
    for (tree, bag, oob) in built {
        model.trees.push(tree);
        model.bags.push(bag);
        model.oob_rows.push(oob);
    }

    let train_accuracy = {
        let correct = x
            .iter()
            .zip(y)
            .filter(|(row, &label)| predict_forest(&model, row) == label)
            .count();
        correct as f64 / n as f64
    };
    let report = TrainReport {
        train_accuracy,
        oob_score: oob_score(&model, x, y),
        ..Default::default()
    };
    Ok((model, report))
}

/// Majority vote over all trees; ties toward the lowest class index.
pub fn predict_forest(model: &ForestModel, row: &[f64]) -> usize {
    let mut votes = vec![0u32; model.n_classes()];
    for tree in &model.trees {
        votes[tree.vote(row)] += 1;
    }
    argmax_u32(&votes)
}

/// Per-class vote fractions.
pub fn predict_proba(model: &ForestModel, row: &[f64]) -> Vec<f64> {
    let mut votes = vec![0u32; model.n_classes()];
    for tree in &model.trees {
        votes[tree.vote(row)] += 1;
    }
    let total = model.trees.len() as f64;
    votes.iter().map(|&v| f64::from(v) / total).collect()
}

/// Out-of-bag accuracy: each row is voted on only by trees whose bootstrap
/// excluded it; rows seen by every tree are skipped. `None` if no row has
/// any out-of-bag tree.
pub fn oob_score(model: &ForestModel, x: &[Vec<f64>], y: &[usize]) -> Option<f64> {
    let n = x.len();
    let mut votes = vec![vec![0u32; model.n_classes()]; n];
    let mut has_vote = vec![false; n];
    for (tree, oob) in model.trees.iter().zip(&model.oob_rows) {
        for &row in oob {
            let r = row as usize;
            if r < n {
                votes[r][tree.vote(&x[r])] += 1;
                has_vote[r] = true;
            }
        }
    }
    let mut scored = 0usize;
    let mut correct = 0usize;
    for (i, votes) in votes.iter().enumerate() {
        if has_vote[i] {
            scored += 1;
            if argmax_u32(votes) == y[i] {
                correct += 1;
            }
        }
    }
    (scored > 0).then(|| correct as f64 / scored as f64)
}

/// Exhaustive single-split oracle used by tests: the best achievable
/// training accuracy of one (feature, midpoint threshold) split with
/// majority leaves.
pub fn single_split_oracle(data: &Dataset) -> f64 {
    let n = data.len();
    let n_classes = data.y.iter().max().map_or(1, |m| m + 1);
    let mut best = 0.0f64;
    for feature in 0..data.n_features() {
        let mut values: Vec<f64> = data.x.iter().map(|r| r[feature]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let threshold = (pair[0] + pair[1]) / 2.0;
            let mut left = vec![0u32; n_classes];
            let mut right = vec![0u32; n_classes];
            for (row, &label) in data.x.iter().zip(&data.y) {
                if row[feature] <= threshold {
                    left[label] += 1;
                } else {
                    right[label] += 1;
                }
            }
            let correct = left.iter().max().unwrap() + right.iter().max().unwrap();
            best = best.max(f64::from(correct) / n as f64);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two well-separated 2-D Gaussian-ish blobs, 10 rows each.
    fn separable_toy() -> Dataset {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            x.push(vec![0.0 + 0.05 * i as f64, 1.0 - 0.03 * i as f64]);
            y.push(0);
            x.push(vec![5.0 + 0.05 * i as f64, -1.0 + 0.03 * i as f64]);
            y.push(1);
        }
        Dataset { x, y }
    }

    fn hp(n_trees: usize, seed: u64) -> ForestHyperparams {
        ForestHyperparams {
            n_trees,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn huge_split_floor_gives_single_leaf() {
        let data = separable_toy();
        let params = ForestHyperparams {
            n_trees: 1,
            min_samples_split: 10_000,
            min_samples_leaf: 2,
            bootstrap: false,
            ..Default::default()
        };
        let (model, _) = train_forest(&data.x, &data.y, &params).unwrap();
        assert_eq!(model.trees[0].nodes.len(), 1);
        assert!(matches!(model.trees[0].nodes[0], TreeNode::Leaf { .. }));
    }

    #[test]
    fn separable_set_reaches_oracle_accuracy() {
        let data = separable_toy();
        assert_eq!(single_split_oracle(&data), 1.0);
        let (_, report) = train_forest(&data.x, &data.y, &hp(10, 3)).unwrap();
        assert_eq!(report.train_accuracy, 1.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            train_forest(&[], &[], &hp(5, 0)),
            Err(LearnError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn single_class_trains_degenerate_trees() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, -(i as f64)]).collect();
        let y = vec![0usize; 8];
        let (model, report) = train_forest(&x, &y, &hp(3, 1)).unwrap();
        assert_eq!(report.train_accuracy, 1.0);
        for tree in &model.trees {
            assert_eq!(tree.nodes.len(), 1);
        }
    }

    #[test]
    fn votes_and_probabilities() {
        // Hand-built forest: three stumps voting (0, 0, 1) for x < 0.5.
        let leaf = |class: usize| {
            let mut counts = vec![0u32; 2];
            counts[class] = 3;
            DecisionTree {
                nodes: vec![TreeNode::Leaf { counts }],
            }
        };
        let model = ForestModel {
            n_features: 1,
            class_labels: vec!["0".into(), "1".into()],
            trees: vec![leaf(0), leaf(0), leaf(1)],
            bags: vec![vec![], vec![], vec![]],
            oob_rows: vec![vec![], vec![], vec![]],
        };
        assert_eq!(predict_forest(&model, &[0.0]), 0);
        let proba = predict_proba(&model, &[0.0]);
        assert!((proba[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((proba[1] - 1.0 / 3.0).abs() < 1e-12);

        // Tie (one vote each) goes to the lowest class index.
        let tied = ForestModel {
            trees: vec![leaf(0), leaf(1)],
            bags: vec![vec![], vec![]],
            oob_rows: vec![vec![], vec![]],
            ..model
        };
        assert_eq!(predict_forest(&tied, &[0.0]), 0);
    }

    #[test]
    fn all_trees_agree_gives_proba_one() {
        let data = separable_toy();
        let (model, _) = train_forest(&data.x, &data.y, &hp(10, 3)).unwrap();
        let proba = predict_proba(&model, &[0.1, 1.0]);
        assert_eq!(proba[0], 1.0);
    }

    #[test]
    fn oob_skips_rows_seen_by_every_tree() {
        let data = separable_toy();
        let (mut model, _) = train_forest(&data.x, &data.y, &hp(4, 9)).unwrap();
        // Force row 0 into every bag: it must contribute nothing to OOB.
        for (bag, oob) in model.bags.iter_mut().zip(model.oob_rows.iter_mut()) {
            if !bag.contains(&0) {
                bag[0] = 0;
            }
            oob.retain(|&r| r != 0);
        }
        let with = oob_score(&model, &data.x, &data.y);
        // Row 0's label can't matter anymore.
        let mut flipped = data.y.clone();
        flipped[0] = 1 - flipped[0];
        let without = oob_score(&model, &data.x, &flipped);
        assert_eq!(with, without);
    }

    #[test]
    fn oob_uses_only_out_of_bag_trees() {
        let data = separable_toy();
        let (model, report) = train_forest(&data.x, &data.y, &hp(12, 5)).unwrap();
        let score = oob_score(&model, &data.x, &data.y);
        assert_eq!(report.oob_score, score);
        // Replay independently from the recorded OOB sets.
        let n = data.len();
        let mut votes = vec![vec![0u32; 2]; n];
        for (tree, oob) in model.trees.iter().zip(&model.oob_rows) {
            for &r in oob {
                votes[r as usize][tree.vote(&data.x[r as usize])] += 1;
            }
        }
        let mut correct = 0;
        let mut scored = 0;
        for (i, v) in votes.iter().enumerate() {
            if v.iter().sum::<u32>() > 0 {
                scored += 1;
                let pred = usize::from(v[1] > v[0]);
                if pred == data.y[i] {
                    correct += 1;
                }
            }
        }
        assert_eq!(score, Some(correct as f64 / scored as f64));
    }

    #[test]
    fn bags_and_oob_are_complements() {
        let data = separable_toy();
        let (model, _) = train_forest(&data.x, &data.y, &hp(6, 2)).unwrap();
        for (bag, oob) in model.bags.iter().zip(&model.oob_rows) {
            assert_eq!(bag.len(), data.len());
            let in_bag: std::collections::HashSet<u32> = bag.iter().copied().collect();
            for r in 0..data.len() as u32 {
                assert_eq!(in_bag.contains(&r), !oob.contains(&r));
            }
        }
    }

    #[test]
    fn every_path_respects_sample_floors_and_gain() {
        let data = noisy_set();
        let params = hp(8, 17);
        let (model, _) = train_forest(&data.x, &data.y, &params).unwrap();
        for (tree, bag) in model.trees.iter().zip(&model.bags) {
            // Walk each node with the rows of the recorded bootstrap bag.
            let mut stack = vec![(0u32, bag.clone())];
            while let Some((node, rows)) = stack.pop() {
                match &tree.nodes[node as usize] {
                    TreeNode::Leaf { counts } => {
                        assert_eq!(counts.iter().sum::<u32>() as usize, rows.len());
                        assert!(rows.len() >= params.min_samples_leaf);
                    }
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        assert!(rows.len() >= params.min_samples_split);
                        let (l, r): (Vec<u32>, Vec<u32>) = rows
                            .iter()
                            .partition(|&&row| data.x[row as usize][*feature] <= *threshold);
                        assert!(l.len() >= params.min_samples_leaf);
                        assert!(r.len() >= params.min_samples_leaf);
                        // Split must strictly reduce Gini impurity.
                        let imp = |rows: &[u32]| {
                            let mut counts = vec![0u32; 2];
                            for &row in rows {
                                counts[data.y[row as usize]] += 1;
                            }
                            gini(&counts, rows.len() as f64)
                        };
                        let total = rows.len() as f64;
                        let gain = imp(&rows)
                            - (l.len() as f64 / total) * imp(&l)
                            - (r.len() as f64 / total) * imp(&r);
                        assert!(gain > 0.0, "non-reducing split at node {node}");
                        stack.push((*left, l));
                        stack.push((*right, r));
                    }
                }
            }
        }
    }

    fn noisy_set() -> Dataset {
        // Two overlapping classes so trees actually have to work.
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut rng = crate::rng::stream(77, "noisy-set");
        for i in 0..60 {
            let class = i % 2;
            let base = if class == 0 { 0.0 } else { 1.0 };
            x.push(vec![
                base + rng.gen::<f64>() * 1.4,
                -base + rng.gen::<f64>() * 1.4,
                rng.gen::<f64>(),
            ]);
            y.push(class);
        }
        Dataset { x, y }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let data = noisy_set();
        let (a, ra) = train_forest(&data.x, &data.y, &hp(16, 123)).unwrap();
        let (b, rb) = train_forest(&data.x, &data.y, &hp(16, 123)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        let (c, _) = train_forest(&data.x, &data.y, &hp(16, 124)).unwrap();
        assert_ne!(a, c);
    }
}
