//! Gradient-boosted regression trees under squared loss.
//!
//! Trees grow level by level. Each feature is sorted once per fit; a level
//! scans every feature's sorted order a single time and tracks the best
//! split for all open nodes at once. Leaves hold the learning-rate-scaled
//! mean residual, so training MSE never increases from one stage to the next.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbrtParams {
    pub trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

impl Default for GbrtParams {
    fn default() -> Self {
        GbrtParams {
            trees: 200,
            depth: 4,
            learning_rate: 0.1,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbrt {
    pub base: f64,
    pub trees: Vec<Tree>,
    /// Training MSE before any tree, then after each tree.
    pub train_loss: Vec<f64>,
}

impl Gbrt {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &GbrtParams) -> Gbrt {
        let n = y.len();
        let p = x.first().map_or(0, Vec::len);
        let base = y.iter().sum::<f64>() / n as f64;
        let mut pred = vec![base; n];
        let orders: Vec<Vec<usize>> = (0..p)
            .map(|f| {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
                idx
            })
            .collect();
        let mse = |pred: &[f64]| pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n as f64;
        let mut train_loss = vec![mse(&pred)];
        let mut trees = Vec::with_capacity(params.trees);
        for _ in 0..params.trees {
            let resid: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
            let tree = grow(x, &resid, &orders, params);
            for (pv, row) in pred.iter_mut().zip(x) {
                *pv += tree.predict_row(row);
            }
            train_loss.push(mse(&pred));
            trees.push(tree);
        }
        Gbrt { base, trees, train_loss }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.base + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn grow(x: &[Vec<f64>], r: &[f64], orders: &[Vec<usize>], params: &GbrtParams) -> Tree {
    let n = r.len();
    let min_leaf = params.min_leaf.max(1);
    let mut nodes = vec![Node::Leaf(0.0)];
    let mut node_of = vec![0usize; n];
    let mut open = vec![0usize];

    for _ in 0..params.depth {
        if open.is_empty() {
            break;
        }
        let mut slot_of = vec![usize::MAX; nodes.len()];
        for (s, &id) in open.iter().enumerate() {
            slot_of[id] = s;
        }
        let k = open.len();
        let mut tot_sum = vec![0.0; k];
        let mut tot_cnt = vec![0usize; k];
        for i in 0..n {
            let s = slot_of[node_of[i]];
            if s != usize::MAX {
                tot_sum[s] += r[i];
                tot_cnt[s] += 1;
            }
        }
        let mut best: Vec<Option<Best>> = vec![None; k];
        for (f, order) in orders.iter().enumerate() {
            let mut ls = vec![0.0; k];
            let mut lc = vec![0usize; k];
            let mut last = vec![f64::NAN; k];
            for &i in order {
                let s = slot_of[node_of[i]];
                if s == usize::MAX {
                    continue;
                }
                let v = x[i][f];
                let rc = tot_cnt[s] - lc[s];
                if lc[s] >= min_leaf && rc >= min_leaf && v > last[s] {
                    let rs = tot_sum[s] - ls[s];
                    let gain = ls[s] * ls[s] / lc[s] as f64 + rs * rs / rc as f64
                        - tot_sum[s] * tot_sum[s] / tot_cnt[s] as f64;
                    if best[s].is_none_or(|b| gain > b.gain) {
                        let mut t = last[s] + (v - last[s]) / 2.0;
                        if t >= v {
                            t = last[s];
                        }
                        best[s] = Some(Best { gain, feature: f, threshold: t });
                    }
                }
                ls[s] += r[i];
                lc[s] += 1;
                last[s] = v;
            }
        }
        let mut next = Vec::new();
        let mut split_of: Vec<Option<Best>> = vec![None; nodes.len()];
        for (s, &id) in open.iter().enumerate() {
            if let Some(b) = best[s].filter(|b| b.gain > 0.0) {
                let left = nodes.len();
                nodes.push(Node::Leaf(0.0));
                nodes.push(Node::Leaf(0.0));
                nodes[id] = Node::Split { feature: b.feature, threshold: b.threshold, left, right: left + 1 };
                split_of[id] = Some(b);
                next.push(left);
                next.push(left + 1);
            }
        }
        for i in 0..n {
            if let Some(Some(b)) = split_of.get(node_of[i]) {
                let Node::Split { left, right, .. } = nodes[node_of[i]] else { unreachable!() };
                node_of[i] = if x[i][b.feature] <= b.threshold { left } else { right };
            }
        }
        open = next;
    }

    let mut sum = vec![0.0; nodes.len()];
    let mut cnt = vec![0usize; nodes.len()];
    for i in 0..n {
        sum[node_of[i]] += r[i];
        cnt[node_of[i]] += 1;
    }
    for (id, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf(v) = node {
            *v = if cnt[id] > 0 { params.learning_rate * sum[id] / cnt[id] as f64 } else { 0.0 };
        }
    }
    Tree { nodes }
}
