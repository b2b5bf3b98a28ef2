//! Exhaustive best-first regression trees for squared loss, written directly
//! from row sums with no histograms.

use tsgbm::gbm::GbmParams;

const EPS: f64 = 1e-12;
const MIN_GAIN: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum NaiveNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf(f64),
}

#[derive(Debug, Clone)]
pub struct NaiveTree {
    pub nodes: Vec<NaiveNode>,
}

impl NaiveTree {
    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, NaiveNode::Leaf(_))).count()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                NaiveNode::Leaf(v) => return v,
                NaiveNode::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

pub struct NaiveModel {
    pub f0: f64,
    pub lr: f64,
    pub trees: Vec<NaiveTree>,
}

impl NaiveModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.f0 + self.trees.iter().map(|t| self.lr * t.predict(x)).sum::<f64>()
    }
}

fn soft(g: f64, l: f64) -> f64 {
    if g > l {
        g - l
    } else if g < -l {
        g + l
    } else {
        0.0
    }
}

fn score(g: f64, h: f64, l: f64) -> f64 {
    let t = soft(g, l);
    t * t / (h + EPS)
}

fn sums(rows: &[usize], grad: &[f64], hess: &[f64]) -> (f64, f64) {
    rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + grad[r], h + hess[r]))
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + 0.5 * (b - a);
    if m < b {
        m
    } else {
        a
    }
}

fn best_split(
    x: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    rows: &[usize],
    thresholds: &[Vec<f64>],
    p: &GbmParams,
) -> Option<Candidate> {
    let (g, h) = sums(rows, grad, hess);
    let parent = score(g, h, p.l1_regularization);
    let mut best: Option<Candidate> = None;
    for (f, cuts) in thresholds.iter().enumerate() {
        let mut best_f: Option<Candidate> = None;
        for &thr in cuts {
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x[r][f] <= thr).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|&r| x[r][f] > thr).collect();
            if left.len() < p.min_data_in_leaf || right.len() < p.min_data_in_leaf {
                continue;
            }
            let (gl, hl) = sums(&left, grad, hess);
            let (gr, hr) = sums(&right, grad, hess);
            let gain = score(gl, hl, p.l1_regularization) + score(gr, hr, p.l1_regularization) - parent;
            if gain > MIN_GAIN * parent.abs() && gain > 0.0 && best_f.as_ref().is_none_or(|b| gain > b.gain) {
                best_f = Some(Candidate { gain, feature: f, threshold: thr });
            }
        }
        if let Some(c) = best_f {
            if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                best = Some(c);
            }
        }
    }
    best
}

struct Open {
    node: usize,
    depth: usize,
    rows: Vec<usize>,
    split: Option<Candidate>,
}

fn grow(x: &[Vec<f64>], grad: &[f64], hess: &[f64], thresholds: &[Vec<f64>], p: &GbmParams) -> NaiveTree {
    let splittable = |depth: usize, n: usize| depth < p.max_depth && n >= 2 * p.min_data_in_leaf;
    let all: Vec<usize> = (0..x.len()).collect();
    let mut nodes = vec![NaiveNode::Leaf(0.0)];
    let root_split = if splittable(0, all.len()) {
        best_split(x, grad, hess, &all, thresholds, p)
    } else {
        None
    };
    let mut frontier = vec![Open { node: 0, depth: 0, rows: all, split: root_split }];
    let mut leaves = 1;
    while leaves < p.num_leaves {
        let mut pick: Option<usize> = None;
        for (i, o) in frontier.iter().enumerate() {
            let Some(s) = &o.split else { continue };
            pick = match pick {
                None => Some(i),
                Some(j) => {
                    let b = frontier[j].split.as_ref().unwrap();
                    if s.gain > b.gain || (s.gain == b.gain && o.node < frontier[j].node) {
                        Some(i)
                    } else {
                        Some(j)
                    }
                }
            };
        }
        let Some(i) = pick else { break };
        let parent = frontier.remove(i);
        let s = parent.split.unwrap();
        let left_rows: Vec<usize> = parent.rows.iter().copied().filter(|&r| x[r][s.feature] <= s.threshold).collect();
        let right_rows: Vec<usize> = parent.rows.iter().copied().filter(|&r| x[r][s.feature] > s.threshold).collect();
        let left = nodes.len();
        nodes[parent.node] = NaiveNode::Split { feature: s.feature, threshold: s.threshold, left, right: left + 1 };
        nodes.push(NaiveNode::Leaf(0.0));
        nodes.push(NaiveNode::Leaf(0.0));
        leaves += 1;
        for (node, rows) in [(left, left_rows), (left + 1, right_rows)] {
            let depth = parent.depth + 1;
            let split = if splittable(depth, rows.len()) {
                best_split(x, grad, hess, &rows, thresholds, p)
            } else {
                None
            };
            frontier.push(Open { node, depth, rows, split });
        }
    }
    let mut tree = NaiveTree { nodes };
    fill_leaves(&mut tree, x, grad, hess, p.l1_regularization);
    tree
}

fn fill_leaves(tree: &mut NaiveTree, x: &[Vec<f64>], grad: &[f64], hess: &[f64], l1: f64) {
    let mut g = vec![0.0; tree.nodes.len()];
    let mut h = vec![0.0; tree.nodes.len()];
    for (r, row) in x.iter().enumerate() {
        let mut i = 0;
        while let NaiveNode::Split { feature, threshold, left, right } = tree.nodes[i] {
            i = if row[feature] <= threshold { left } else { right };
        }
        g[i] += grad[r];
        h[i] += hess[r];
    }
    for (i, n) in tree.nodes.iter_mut().enumerate() {
        if let NaiveNode::Leaf(v) = n {
            *v = -soft(g[i], l1) / (h[i] + EPS);
        }
    }
}

/// Squared-loss boosting with every row in every tree.
pub fn fit(x: &[Vec<f64>], y: &[f64], p: &GbmParams) -> NaiveModel {
    assert_eq!(p.bagging_fraction, 1.0);
    let n_features = x[0].len();
    let thresholds: Vec<Vec<f64>> = (0..n_features)
        .map(|f| {
            let mut v: Vec<f64> = x.iter().map(|r| r[f]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            assert!(v.len() <= p.histogram_bins, "oracle assumes one bin per distinct value");
            v.windows(2).map(|w| midpoint(w[0], w[1])).collect()
        })
        .collect();
    let f0 = y.iter().sum::<f64>() / y.len() as f64;
    let mut model = NaiveModel { f0, lr: p.learning_rate, trees: Vec::new() };
    let mut pred = vec![f0; y.len()];
    for _ in 0..p.iterations {
        let grad: Vec<f64> = pred.iter().zip(y).map(|(p, t)| 2.0 * (p - t)).collect();
        let hess = vec![2.0; y.len()];
        let tree = grow(x, &grad, &hess, &thresholds, p);
        for (r, row) in x.iter().enumerate() {
            pred[r] += p.learning_rate * tree.predict(row);
        }
        model.trees.push(tree);
    }
    model
}
