//! Least-squares gradient boosting of histogram regression trees.
//!
//! Features are bucketed into at most 255 bins per feature; trees grow
//! leaf-wise, always splitting the leaf with the largest loss reduction.

use serde::{Deserialize, Serialize};

use crate::error::{AdequacyError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub iterations: usize,
    pub learning_rate: f64,
    pub max_bins: usize,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub l2_regularization: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            iterations: 100,
            learning_rate: 0.1,
            max_bins: 255,
            max_leaves: 31,
            min_samples_leaf: 20,
            l2_regularization: 0.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AdequacyError::Config(format!("gbt: {m}")));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if !(2..=255).contains(&self.max_bins) {
            return bad("max_bins must be in 2..=255");
        }
        if self.max_leaves < 2 {
            return bad("max_leaves must be at least 2");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if !(self.l2_regularization >= 0.0) {
            return bad("l2_regularization must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right }
                }
                Node::Leaf { value } => return value,
            }
        }
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Preorder node: the left child of a split is the next node. Leaves have
/// `feature == LEAF` and keep their value in `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct FlatNode {
    threshold: f64,
    feature: u32,
    right: u32,
}

const LEAF: u32 = u32::MAX;

/// All trees of a model in one contiguous array, for prediction.
#[derive(Debug, Clone, Default, PartialEq)]
struct Forest {
    nodes: Vec<FlatNode>,
    roots: Vec<u32>,
}

impl Forest {
    fn compile(trees: &[Tree]) -> Self {
        let mut forest = Self::default();
        for tree in trees {
            forest.roots.push(forest.nodes.len() as u32);
            forest.push(tree, 0);
        }
        forest
    }

    fn push(&mut self, tree: &Tree, i: usize) {
        match tree.nodes[i] {
            Node::Leaf { value } => self.nodes.push(FlatNode { threshold: value, feature: LEAF, right: 0 }),
            Node::Split { feature, threshold, left, right } => {
                let at = self.nodes.len();
                self.nodes.push(FlatNode { threshold, feature: feature as u32, right: 0 });
                self.push(tree, left);
                self.nodes[at].right = self.nodes.len() as u32;
                self.push(tree, right);
            }
        }
    }

    fn sum(&self, x: &[f64]) -> f64 {
        let nodes = &self.nodes[..];
        let mut total = 0.0;
        for &root in &self.roots {
            let mut i = root as usize;
            loop {
                let node = nodes[i];
                if node.feature == LEAF {
                    total += node.threshold;
                    break;
                }
                i = if x[node.feature as usize] <= node.threshold { i + 1 } else { node.right as usize };
            }
        }
        total
    }
}

/// Serialized form of [`GbtModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GbtModelData {
    baseline: f64,
    learning_rate: f64,
    n_features: usize,
    bin_thresholds: Vec<Vec<f64>>,
    trees: Vec<Tree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "GbtModelData", into = "GbtModelData")]
pub struct GbtModel {
    pub baseline: f64,
    pub learning_rate: f64,
    pub n_features: usize,
    /// Upper edges of all but the last bin, per feature.
    pub bin_thresholds: Vec<Vec<f64>>,
    trees: Vec<Tree>,
    forest: Forest,
}

impl From<GbtModelData> for GbtModel {
    fn from(d: GbtModelData) -> Self {
        let forest = Forest::compile(&d.trees);
        Self {
            baseline: d.baseline,
            learning_rate: d.learning_rate,
            n_features: d.n_features,
            bin_thresholds: d.bin_thresholds,
            trees: d.trees,
            forest,
        }
    }
}

impl From<GbtModel> for GbtModelData {
    fn from(m: GbtModel) -> Self {
        Self {
            baseline: m.baseline,
            learning_rate: m.learning_rate,
            n_features: m.n_features,
            bin_thresholds: m.bin_thresholds,
            trees: m.trees,
        }
    }
}

impl GbtModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.baseline + self.learning_rate * self.forest.sum(x)
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Train on rows `x` with targets `y`.
    pub fn train<X: AsRef<[f64]>>(x: &[X], y: &[f64], params: &GbtParams) -> Result<Self> {
        Self::train_with(x, y, params, |_| {})
    }

    /// As [`GbtModel::train`]; `on_iteration` sees the training predictions
    /// after each added tree.
    pub fn train_with<X: AsRef<[f64]>>(
        x: &[X],
        y: &[f64],
        params: &GbtParams,
        mut on_iteration: impl FnMut(&[f64]),
    ) -> Result<Self> {
        params.validate()?;
        if x.len() != y.len() {
            return Err(AdequacyError::LengthMismatch { left: x.len(), right: y.len() });
        }
        if x.len() < 2 {
            return Err(AdequacyError::Config("gbt needs at least 2 samples".into()));
        }
        let n_features = x[0].as_ref().len();
        if x.iter().any(|r| r.as_ref().len() != n_features) {
            return Err(AdequacyError::Config("gbt rows have differing lengths".into()));
        }
        let n = y.len();
        let constant = y.iter().all(|v| *v == y[0]);
        let baseline = if constant { y[0] } else { y.iter().sum::<f64>() / n as f64 };
        let bin_thresholds: Vec<Vec<f64>> =
            (0..n_features).map(|f| bin_edges(x.iter().map(|r| r.as_ref()[f]), params.max_bins)).collect();
        let mut model = Self {
            baseline,
            learning_rate: params.learning_rate,
            n_features,
            bin_thresholds,
            trees: Vec::new(),
            forest: Forest::default(),
        };
        if constant {
            return Ok(model);
        }
        if model.bin_thresholds.iter().all(Vec::is_empty) {
            log::warn!("gbt: every feature is constant; fitting the baseline only");
            return Ok(model);
        }

        let binned = Binned::new(x, &model.bin_thresholds);
        let mut pred = vec![baseline; n];
        let mut residual = vec![0.0; n];
        for _ in 0..params.iterations {
            for i in 0..n {
                residual[i] = y[i] - pred[i];
            }
            let Some((tree, assignment)) = grow_tree(&binned, &model.bin_thresholds, &residual, params) else {
                break;
            };
            for (leaf_value, samples) in assignment {
                for i in samples {
                    pred[i as usize] += params.learning_rate * leaf_value;
                }
            }
            model.trees.push(tree);
            on_iteration(&pred);
        }
        model.forest = Forest::compile(&model.trees);
        Ok(model)
    }
}

/// Bin edges: midpoints between distinct values when there are few enough,
/// otherwise quantile cut points.
fn bin_edges(values: impl Iterator<Item = f64>, max_bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..max_bins)
        .map(|q| {
            let k = q * n / max_bins;
            if sorted[k - 1] < sorted[k] {
                0.5 * (sorted[k - 1] + sorted[k])
            } else {
                sorted[k]
            }
        })
        .collect();
    edges.dedup();
    // an edge at the maximum would leave its upper bin empty
    if edges.last() == Some(&sorted[n - 1]) {
        edges.pop();
    }
    edges
}

fn bin_of(edges: &[f64], v: f64) -> u8 {
    edges.partition_point(|&t| t < v) as u8
}

/// Column-major bin indices.
struct Binned {
    columns: Vec<Vec<u8>>,
    offsets: Vec<usize>,
    total_bins: usize,
}

impl Binned {
    fn new<X: AsRef<[f64]>>(x: &[X], edges: &[Vec<f64>]) -> Self {
        let columns =
            edges.iter().enumerate().map(|(f, e)| x.iter().map(|r| bin_of(e, r.as_ref()[f])).collect()).collect();
        let mut offsets = Vec::with_capacity(edges.len());
        let mut total_bins = 0;
        for e in edges {
            offsets.push(total_bins);
            total_bins += e.len() + 1;
        }
        Self { columns, offsets, total_bins }
    }
}

#[derive(Clone, Copy, Default)]
struct Bin {
    sum: f64,
    count: u32,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    bin: u8,
}

struct Leaf {
    node: usize,
    samples: Vec<u32>,
    hist: Vec<Bin>,
    sum: f64,
    best: Option<Candidate>,
}

fn histogram(binned: &Binned, residual: &[f64], samples: &[u32]) -> Vec<Bin> {
    let mut hist = vec![Bin::default(); binned.total_bins];
    for (col, &off) in binned.columns.iter().zip(&binned.offsets) {
        let h = &mut hist[off..];
        for &i in samples {
            let b = &mut h[col[i as usize] as usize];
            b.sum += residual[i as usize];
            b.count += 1;
        }
    }
    hist
}

fn best_split(
    binned: &Binned,
    edges: &[Vec<f64>],
    leaf_hist: &[Bin],
    sum: f64,
    count: usize,
    params: &GbtParams,
) -> Option<Candidate> {
    let lambda = params.l2_regularization;
    let min = params.min_samples_leaf;
    if count < 2 * min {
        return None;
    }
    let parent = sum * sum / (count as f64 + lambda);
    let mut best: Option<Candidate> = None;
    for (f, e) in edges.iter().enumerate() {
        let h = &leaf_hist[binned.offsets[f]..binned.offsets[f] + e.len() + 1];
        let (mut ls, mut lc) = (0.0, 0usize);
        for (b, bin) in h[..e.len()].iter().enumerate() {
            ls += bin.sum;
            lc += bin.count as usize;
            if lc < min {
                continue;
            }
            let rc = count - lc;
            if rc < min {
                break;
            }
            let rs = sum - ls;
            let gain = ls * ls / (lc as f64 + lambda) + rs * rs / (rc as f64 + lambda) - parent;
            if gain > 1e-12 && best.is_none_or(|c| gain > c.gain) {
                best = Some(Candidate { gain, feature: f, bin: b as u8 });
            }
        }
    }
    best
}

type LeafAssignment = Vec<(f64, Vec<u32>)>;

fn grow_tree(
    binned: &Binned,
    edges: &[Vec<f64>],
    residual: &[f64],
    params: &GbtParams,
) -> Option<(Tree, LeafAssignment)> {
    let n = residual.len();
    let samples: Vec<u32> = (0..n as u32).collect();
    let hist = histogram(binned, residual, &samples);
    let sum: f64 = residual.iter().sum();
    let best = best_split(binned, edges, &hist, sum, n, params)?;
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut leaves = vec![Leaf { node: 0, samples, hist, sum, best: Some(best) }];

    while leaves.len() < params.max_leaves {
        let Some((pick, cand)) = leaves.iter().enumerate().filter_map(|(i, l)| l.best.map(|c| (i, c))).fold(
            None,
            |acc: Option<(usize, Candidate)>, (i, c)| match acc {
                Some((_, a)) if a.gain >= c.gain => acc,
                _ => Some((i, c)),
            },
        ) else {
            break;
        };
        let parent = leaves.swap_remove(pick);
        let col = &binned.columns[cand.feature];
        let (left_s, right_s): (Vec<u32>, Vec<u32>) =
            parent.samples.iter().partition(|&&i| col[i as usize] <= cand.bin);
        let left_sum: f64 = left_s.iter().map(|&i| residual[i as usize]).sum();
        let right_sum = parent.sum - left_sum;
        let small_is_left = left_s.len() <= right_s.len();
        let small_hist = histogram(binned, residual, if small_is_left { &left_s } else { &right_s });
        let mut large_hist = parent.hist;
        for (l, s) in large_hist.iter_mut().zip(&small_hist) {
            l.sum -= s.sum;
            l.count -= s.count;
        }
        let (left_hist, right_hist) = if small_is_left { (small_hist, large_hist) } else { (large_hist, small_hist) };

        let (li, ri) = (nodes.len(), nodes.len() + 1);
        nodes[parent.node] = Node::Split {
            feature: cand.feature,
            threshold: edges[cand.feature][cand.bin as usize],
            left: li,
            right: ri,
        };
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        for (node, s, h, sum) in [(li, left_s, left_hist, left_sum), (ri, right_s, right_hist, right_sum)] {
            let best = best_split(binned, edges, &h, sum, s.len(), params);
            leaves.push(Leaf { node, samples: s, hist: h, sum, best });
        }
    }

    let mut assignment = Vec::with_capacity(leaves.len());
    leaves.sort_by_key(|l| l.node);
    for leaf in leaves {
        let value = leaf.sum / (leaf.samples.len() as f64 + params.l2_regularization);
        nodes[leaf.node] = Node::Leaf { value };
        assignment.push((value, leaf.samples));
    }
    Some((Tree { nodes }, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_labels_need_no_trees() {
        let x: Vec<[f64; 2]> = (0..50).map(|i| [i as f64, -(i as f64)]).collect();
        let y = vec![2.5; 50];
        let m = GbtModel::train(&x, &y, &GbtParams::default()).unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(m.predict(&[3.0, 1.0]), 2.5);
    }

    #[test]
    fn degenerate_features_fit_baseline() {
        let x = vec![[1.0, 1.0]; 40];
        let y: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
        let m = GbtModel::train(&x, &y, &GbtParams::default()).unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(m.predict(&[1.0, 1.0]), 0.5);
    }

    #[test]
    fn bins_split_between_distinct_values() {
        assert_eq!(bin_edges([3.0, 1.0, 1.0, 2.0].into_iter(), 255), vec![1.5, 2.5]);
        let many = bin_edges((0..10_000).map(|i| i as f64), 255);
        assert!(many.len() <= 254);
        assert!(many.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(bin_of(&[1.5, 2.5], 1.5), 0);
        assert_eq!(bin_of(&[1.5, 2.5], 1.6), 1);
        assert_eq!(bin_of(&[1.5, 2.5], 9.0), 2);
    }

    #[test]
    fn learns_a_step() {
        let x: Vec<[f64; 1]> = (0..200).map(|i| [i as f64]).collect();
        let y: Vec<f64> = (0..200).map(|i| if i < 80 { 1.0 } else { 5.0 }).collect();
        let params = GbtParams { iterations: 60, learning_rate: 0.3, ..GbtParams::default() };
        let m = GbtModel::train(&x, &y, &params).unwrap();
        assert!((m.predict(&[10.0]) - 1.0).abs() < 0.01);
        assert!((m.predict(&[150.0]) - 5.0).abs() < 0.01);
        assert!(m.trees.iter().all(|t| t.leaves() <= 31));
    }

    #[test]
    fn compiled_forest_matches_tree_walk() {
        let x: Vec<[f64; 3]> =
            (0..400).map(|i| [(i % 17) as f64, (i % 5) as f64 - 2.0, ((i * 7) % 23) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 0.5 + if r[1] < 0.0 { 3.0 } else { 0.0 } - r[2] * 0.1).collect();
        let m = GbtModel::train(&x, &y, &GbtParams::default()).unwrap();
        for r in &x {
            let walk = m.baseline + m.learning_rate * m.trees.iter().map(|t| t.predict(r)).sum::<f64>();
            assert_eq!(m.predict(r).to_bits(), walk.to_bits());
        }
        let back: GbtModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_bad_params() {
        let x = vec![[0.0]; 4];
        let y = vec![0.0; 4];
        assert!(GbtModel::train(&x, &y, &GbtParams { max_bins: 300, ..GbtParams::default() }).is_err());
        assert!(GbtModel::train(&x, &y, &GbtParams { iterations: 0, ..GbtParams::default() }).is_err());
        assert!(GbtModel::train(&x[..1], &y[..1], &GbtParams::default()).is_err());
    }
}
