//! Least-squares gradient boosting over depth-limited regression trees.
//!
//! Features are sorted once per fit. Each tree node keeps its rows as a
//! contiguous, still-sorted range of every feature's order, so split search
//! is a linear scan per feature and a tree costs `O(depth · d · n)`.

use super::{FeatureTable, FittedModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbmParams {
    /// 50 depth-5 trees, shrinkage 0.1, leaves of at least one row.
    fn default() -> Self {
        GbmParams { n_trees: 50, max_depth: 5, learning_rate: 0.1, min_samples_leaf: 1 }
    }
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf(f64),
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature as usize] <= threshold { left as usize } else { right as usize };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct GbmModel {
    base: f64,
    trees: Vec<Tree>,
}

impl GbmModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Prediction using only the first `n_trees` stages.
    pub fn predict_staged(&self, x: &[f64], n_trees: usize) -> f64 {
        self.base + self.trees.iter().take(n_trees).map(|t| t.predict(x)).sum::<f64>()
    }
}

impl FittedModel for GbmModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.base + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    left_sum: f64,
    left_count: usize,
}

/// Per-feature row orders. Every tree node owns the same contiguous range
/// `[start, start + len)` in each feature's arrays, holding its rows sorted
/// by that feature; splits stably partition the range.
struct Workspace<'a> {
    root_idx: Vec<Vec<u32>>,
    root_vals: Vec<Vec<f64>>,
    idx: Vec<Vec<u32>>,
    vals: Vec<Vec<f64>>,
    go_left: Vec<bool>,
    tmp_idx: Vec<u32>,
    tmp_vals: Vec<f64>,
    node_of: Vec<u32>,
    params: &'a GbmParams,
}

pub fn fit_gbm(x: &FeatureTable, y: &[f64], params: &GbmParams) -> GbmModel {
    let n = y.len();
    let d = x.n_cols();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut root_idx = Vec::with_capacity(d);
    let mut root_vals = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = (0..n).map(|i| x.get(i, j)).collect();
        let mut idx: Vec<u32> = (0..n as u32).collect();
        idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
        root_vals.push(idx.iter().map(|&i| col[i as usize]).collect::<Vec<f64>>());
        root_idx.push(idx);
    }
    let mut ws = Workspace {
        idx: root_idx.clone(),
        vals: root_vals.clone(),
        root_idx,
        root_vals,
        go_left: vec![false; n],
        tmp_idx: vec![0; n],
        tmp_vals: vec![0.0; n],
        node_of: vec![0; n],
        params,
    };
    let mut pred = vec![base; n];
    let mut resid = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        for i in 0..n {
            resid[i] = y[i] - pred[i];
        }
        let tree = ws.grow(&resid);
        for i in 0..n {
            if let Node::Leaf(v) = tree.nodes[ws.node_of[i] as usize] {
                pred[i] += v;
            }
        }
        trees.push(tree);
    }
    GbmModel { base, trees }
}

impl Workspace<'_> {
    /// Best split of the node occupying `[start, start + len)` with residual
    /// sum `total_sum`. Ties go to the lower feature, then the lower threshold.
    ///
    /// Candidates are ranked by `(ls·rc − rs·lc)² / (lc·rc)`, which is the
    /// SSE reduction `lc·rc/n·(ml − mr)²` times the node size `n`.
    fn best_split(&self, resid: &[f64], start: usize, len: usize, total_sum: f64, min_leaf: usize) -> Option<Candidate> {
        if len < 2 * min_leaf {
            return None;
        }
        let mut best: Option<Candidate> = None;
        let mut best_score = f64::NEG_INFINITY;
        for f in 0..self.idx.len() {
            let idx = &self.idx[f][start..start + len];
            let vals = &self.vals[f][start..start + len];
            let mut ls: f64 = idx[..min_leaf].iter().map(|&i| resid[i as usize]).sum();
            let mut last = vals[min_leaf - 1];
            let mut lcf = min_leaf as f64;
            let mut rcf = (len - min_leaf) as f64;
            let mut found: Option<(usize, f64)> = None;
            for p in min_leaf..=len - min_leaf {
                let v = vals[p];
                if v > last {
                    let num = ls * rcf - (total_sum - ls) * lcf;
                    let sq = num * num;
                    let denom = lcf * rcf;
                    if sq > best_score * denom {
                        best_score = sq / denom;
                        found = Some((p, ls));
                    }
                }
                ls += resid[idx[p] as usize];
                last = v;
                lcf += 1.0;
                rcf -= 1.0;
            }
            if let Some((p, ls)) = found {
                let (lo, hi) = (vals[p - 1], vals[p]);
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Candidate {
                    gain: best_score / len as f64,
                    feature: f,
                    threshold,
                    left_sum: ls,
                    left_count: p,
                });
            }
        }
        best
    }

    /// Stably moves the first `left` rows of feature `f`'s order to the
    /// front of every feature's range.
    fn partition(&mut self, split_feature: usize, start: usize, len: usize, left: usize) {
        for (p, &i) in self.idx[split_feature][start..start + len].iter().enumerate() {
            self.go_left[i as usize] = p < left;
        }
        for f in 0..self.idx.len() {
            let idx = &mut self.idx[f][start..start + len];
            let vals = &mut self.vals[f][start..start + len];
            let (tmp_idx, tmp_vals) = (&mut self.tmp_idx[..len], &mut self.tmp_vals[..len]);
            let (mut l, mut r) = (0, left);
            for (&i, &v) in idx.iter().zip(vals.iter()) {
                let g = self.go_left[i as usize] as usize;
                let slot = if g == 1 { l } else { r };
                tmp_idx[slot] = i;
                tmp_vals[slot] = v;
                l += g;
                r += 1 - g;
            }
            idx.copy_from_slice(&self.tmp_idx[..len]);
            vals.copy_from_slice(&self.tmp_vals[..len]);
        }
    }

    /// Grows one tree on `resid`; on return `node_of` maps each row to its leaf.
    fn grow(&mut self, resid: &[f64]) -> Tree {
        let n = resid.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        for f in 0..self.idx.len() {
            self.idx[f].copy_from_slice(&self.root_idx[f]);
            self.vals[f].copy_from_slice(&self.root_vals[f]);
        }
        let mut nodes = vec![Node::Leaf(0.0)];
        // (start, len, residual sum) per node.
        let mut seg = vec![(0usize, n, resid.iter().sum::<f64>())];
        let mut frontier: Vec<usize> = vec![0];

        for _depth in 0..self.params.max_depth {
            let mut next = Vec::new();
            for &id in &frontier {
                let (start, len, sum) = seg[id];
                if len < 2 * min_leaf {
                    continue;
                }
                let Some(c) = self.best_split(resid, start, len, sum, min_leaf) else { continue };
                if !(c.gain > 0.0) {
                    continue;
                }
                self.partition(c.feature, start, len, c.left_count);
                let left = nodes.len() as u32;
                nodes.push(Node::Leaf(0.0));
                nodes.push(Node::Leaf(0.0));
                seg.push((start, c.left_count, c.left_sum));
                seg.push((start + c.left_count, len - c.left_count, sum - c.left_sum));
                nodes[id] = Node::Split { feature: c.feature as u32, threshold: c.threshold, left, right: left + 1 };
                next.push(left as usize);
                next.push(left as usize + 1);
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }

        // Leaf values from exact per-leaf residual sums.
        let lr = self.params.learning_rate;
        if self.idx.is_empty() {
            self.node_of.iter_mut().for_each(|v| *v = 0);
        }
        for (id, node) in nodes.iter_mut().enumerate() {
            if let Node::Leaf(v) = node {
                let (start, len, _) = seg[id];
                let mut s = 0.0;
                if let Some(order) = self.idx.first() {
                    for &i in &order[start..start + len] {
                        s += resid[i as usize];
                        self.node_of[i as usize] = id as u32;
                    }
                } else {
                    s = resid.iter().sum();
                }
                *v = if len > 0 { lr * s / len as f64 } else { 0.0 };
            }
        }
        Tree { nodes }
    }
}
