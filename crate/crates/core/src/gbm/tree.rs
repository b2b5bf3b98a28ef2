//! Regression trees and histogram-based leaf-wise growth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;

/// Added to Hessian sums in every leaf-value and gain denominator.
pub const HESSIAN_EPS: f64 = 1e-12;

/// Splits whose gain does not exceed this fraction of the parent's score are
/// treated as rounding noise.
const RELATIVE_MIN_GAIN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    /// Index of the leaf node reached by `x`.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub(crate) fn scale_leaf(&mut self, node: usize, factor: f64) {
        if let Node::Leaf { value } = &mut self.nodes[node] {
            *value *= factor;
        }
    }

    pub(crate) fn is_leaf(&self, node: usize) -> bool {
        matches!(self.nodes[node], Node::Leaf { .. })
    }

    pub(crate) fn leaf_value(&self, node: usize) -> f64 {
        match self.nodes[node] {
            Node::Leaf { value } => value,
            Node::Split { .. } => panic!("node {node} is not a leaf"),
        }
    }
}

/// Structural limits and regularisation for one tree.
#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub num_leaves: usize,
    pub min_data_in_leaf: usize,
    pub lambda_l1: f64,
}

/// `sign(g) * max(|g| - lambda, 0)`.
#[inline]
pub fn soft_threshold(g: f64, lambda: f64) -> f64 {
    if g > lambda {
        g - lambda
    } else if g < -lambda {
        g + lambda
    } else {
        0.0
    }
}

#[inline]
pub fn leaf_score(g: f64, h: f64, lambda: f64) -> f64 {
    let t = soft_threshold(g, lambda);
    t * t / (h + HESSIAN_EPS)
}

#[inline]
pub fn leaf_output(g: f64, h: f64, lambda: f64) -> f64 {
    -soft_threshold(g, lambda) / (h + HESSIAN_EPS)
}

/// Whether `gain` clears the noise floor relative to the parent's score.
#[inline]
pub fn gain_is_significant(gain: f64, parent_score: f64) -> bool {
    gain > RELATIVE_MIN_GAIN * parent_score.abs() && gain > 0.0
}

#[derive(Debug, Clone, Copy, Default)]
struct HistBin {
    g: f64,
    h: f64,
    n: u32,
}

type Histogram = Vec<Vec<HistBin>>;

#[derive(Debug, Clone, Copy)]
struct SplitInfo {
    gain: f64,
    feature: usize,
    bin: u16,
}

struct Pending {
    node: usize,
    depth: usize,
    rows: Vec<u32>,
    hist: Histogram,
    g: f64,
    h: f64,
    best: Option<SplitInfo>,
}

/// A freshly grown tree plus the binned split positions needed to route
/// training rows without touching raw feature values.
pub(crate) struct GrownTree {
    pub tree: RegressionTree,
    split_bins: Vec<u16>,
}

impl GrownTree {
    pub fn route_binned(&self, data: &BinnedMatrix, row: usize) -> usize {
        let mut i = 0;
        loop {
            match self.tree.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature, left, right, ..
                } => {
                    i = if data.columns[feature][row] <= self.split_bins[i] {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }
}

const PARALLEL_WORK: usize = 1 << 14;

fn build_histogram(data: &BinnedMatrix, grad: &[f64], hess: &[f64], rows: &[u32]) -> Histogram {
    let one = |f: usize| {
        let col = &data.columns[f];
        let mut hist = vec![HistBin::default(); data.mappers[f].n_bins()];
        for &r in rows {
            let r = r as usize;
            let b = &mut hist[col[r] as usize];
            b.g += grad[r];
            b.h += hess[r];
            b.n += 1;
        }
        hist
    };
    if rows.len() * data.n_features() >= PARALLEL_WORK {
        (0..data.n_features()).into_par_iter().map(one).collect()
    } else {
        (0..data.n_features()).map(one).collect()
    }
}

fn subtract(parent: &Histogram, child: &Histogram) -> Histogram {
    parent
        .iter()
        .zip(child)
        .map(|(p, c)| {
            p.iter()
                .zip(c)
                .map(|(p, c)| HistBin {
                    g: p.g - c.g,
                    h: (p.h - c.h).max(0.0),
                    n: p.n - c.n,
                })
                .collect()
        })
        .collect()
}

fn best_split(hist: &Histogram, g: f64, h: f64, n: usize, params: &TreeParams) -> Option<SplitInfo> {
    let parent = leaf_score(g, h, params.lambda_l1);
    let scan = |(f, bins): (usize, &Vec<HistBin>)| -> Option<SplitInfo> {
        let mut best: Option<SplitInfo> = None;
        let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
        for (b, bin) in bins.iter().enumerate().take(bins.len().saturating_sub(1)) {
            gl += bin.g;
            hl += bin.h;
            nl += bin.n as usize;
            let nr = n - nl;
            if nl < params.min_data_in_leaf {
                continue;
            }
            if nr < params.min_data_in_leaf {
                break;
            }
            let gr = g - gl;
            let hr = (h - hl).max(0.0);
            let gain = leaf_score(gl, hl, params.lambda_l1) + leaf_score(gr, hr, params.lambda_l1) - parent;
            if gain_is_significant(gain, parent) && best.is_none_or(|s| gain > s.gain) {
                best = Some(SplitInfo {
                    gain,
                    feature: f,
                    bin: b as u16,
                });
            }
        }
        best
    };
    let per_feature: Vec<Option<SplitInfo>> = if hist.len() * n >= PARALLEL_WORK {
        hist.par_iter().enumerate().map(scan).collect()
    } else {
        hist.iter().enumerate().map(scan).collect()
    };
    // ties: lowest feature, then lowest bin
    per_feature.into_iter().flatten().fold(None, |acc: Option<SplitInfo>, s| match acc {
        Some(a) if a.gain >= s.gain => Some(a),
        _ => Some(s),
    })
}

/// Grows one tree leaf-wise on the rows in `rows` (sorted, unique).
pub(crate) fn grow_tree(
    data: &BinnedMatrix,
    grad: &[f64],
    hess: &[f64],
    rows: Vec<u32>,
    params: &TreeParams,
) -> GrownTree {
    let sum = |rows: &[u32]| {
        rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + grad[r as usize], h + hess[r as usize]))
    };
    let can_split = |depth: usize, n: usize| depth < params.max_depth && n >= 2 * params.min_data_in_leaf;

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut split_bins = vec![0u16];
    let (g, h) = sum(&rows);
    let hist = build_histogram(data, grad, hess, &rows);
    let best = if can_split(0, rows.len()) && params.num_leaves > 1 {
        best_split(&hist, g, h, rows.len(), params)
    } else {
        None
    };
    let mut open = vec![Pending {
        node: 0,
        depth: 0,
        rows,
        hist,
        g,
        h,
        best,
    }];
    let mut done: Vec<Pending> = Vec::new();
    let mut n_leaves = 1;

    while n_leaves < params.num_leaves {
        // highest gain; ties to the earliest node
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.best.map(|s| (i, s.gain, p.node)))
            .fold(None, |acc: Option<(usize, f64, usize)>, c| match acc {
                Some(a) if a.1 > c.1 || (a.1 == c.1 && a.2 < c.2) => Some(a),
                _ => Some(c),
            });
        let Some((idx, _, _)) = pick else { break };
        let parent = open.swap_remove(idx);
        let split = parent.best.expect("picked node has a split");

        let col = &data.columns[split.feature];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            parent.rows.iter().partition(|&&r| col[r as usize] <= split.bin);
        let (small_is_left, small) = if left_rows.len() <= right_rows.len() {
            (true, &left_rows)
        } else {
            (false, &right_rows)
        };
        let small_hist = build_histogram(data, grad, hess, small);
        let large_hist = subtract(&parent.hist, &small_hist);
        let (left_hist, right_hist) = if small_is_left {
            (small_hist, large_hist)
        } else {
            (large_hist, small_hist)
        };

        let left = nodes.len();
        let right = left + 1;
        nodes[parent.node] = Node::Split {
            feature: split.feature,
            threshold: data.mappers[split.feature].threshold(split.bin as usize),
            left,
            right,
        };
        split_bins[parent.node] = split.bin;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        split_bins.extend([0, 0]);
        n_leaves += 1;

        let depth = parent.depth + 1;
        for (node, rows, hist) in [(left, left_rows, left_hist), (right, right_rows, right_hist)] {
            let (g, h) = sum(&rows);
            let best = if can_split(depth, rows.len()) {
                best_split(&hist, g, h, rows.len(), params)
            } else {
                None
            };
            let child = Pending {
                node,
                depth,
                rows,
                hist,
                g,
                h,
                best,
            };
            if child.best.is_some() {
                open.push(child);
            } else {
                done.push(child);
            }
        }
    }

    for leaf in open.into_iter().chain(done) {
        nodes[leaf.node] = Node::Leaf {
            value: leaf_output(leaf.g, leaf.h, params.lambda_l1),
        };
    }
    GrownTree {
        tree: RegressionTree { nodes },
        split_bins,
    }
}
