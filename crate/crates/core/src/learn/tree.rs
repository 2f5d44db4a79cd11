//! Level-wise CART builder over presorted feature columns.
//!
//! Each row carries a split statistic `g`, a split weight `w` and a leaf
//! weight `h`. A node is split where `S_L²/W_L + S_R²/W_R` is largest
//! (sums of `g` and `w` on each side); leaves hold `Σg / Σh`. With `g = w·y`
//! and `h = w` this is weighted Gini and leaves are class-1 frequencies;
//! with `g` a residual, `w = 1` and `h` a Hessian it is squared-error
//! regression with Newton leaves.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    /// Minimum split weight on each side of a split.
    pub min_leaf: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_leaf: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go to `left`.
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

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecisionTree {
    pub n_features: usize,
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Row indices of each column in ascending order of value.
#[derive(Debug, Clone)]
pub struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &Matrix) -> Self {
        let order = (0..x.n_cols())
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.n_rows() as u32).collect();
                idx.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)));
                idx
            })
            .collect();
        Presorted { order }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Clone, Copy, Default)]
struct Running {
    s: f64,
    w: f64,
    last: f64,
    seen: bool,
}

const NONE: u32 = u32::MAX;

/// Grows a tree on rows with positive split weight.
pub(crate) fn grow(x: &Matrix, sorted: &Presorted, g: &[f64], w: &[f64], h: &[f64], cfg: &TreeConfig) -> DecisionTree {
    let n = x.n_rows();
    let d = x.n_cols();
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    // node each row currently sits in, NONE once its node is final
    let mut node_of: Vec<u32> = (0..n).map(|i| if w[i] > 0.0 { 0 } else { NONE }).collect();
    let mut frontier: Vec<usize> = vec![0];
    let mut depth = 0;
    loop {
        let (mut s, mut wt, mut ht) = (
            vec![0.0; frontier.len()],
            vec![0.0; frontier.len()],
            vec![0.0; frontier.len()],
        );
        let mut slot_of = vec![NONE; nodes.len()];
        for (k, &node) in frontier.iter().enumerate() {
            slot_of[node] = k as u32;
        }
        for i in 0..n {
            if node_of[i] != NONE {
                let k = slot_of[node_of[i] as usize] as usize;
                s[k] += g[i];
                wt[k] += w[i];
                ht[k] += h[i];
            }
        }
        for (k, &node) in frontier.iter().enumerate() {
            nodes[node] = Node::Leaf {
                value: if ht[k] > 0.0 { s[k] / ht[k] } else { 0.0 },
            };
        }
        if frontier.is_empty() || cfg.max_depth.is_some_and(|m| depth >= m) {
            break;
        }
        let parent: Vec<f64> = (0..frontier.len()).map(|k| s[k] * s[k] / wt[k]).collect();
        let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
        let mut run = vec![Running::default(); frontier.len()];
        for f in 0..d {
            run.iter_mut().for_each(|r| *r = Running::default());
            for &i in &sorted.order[f] {
                let i = i as usize;
                let node = node_of[i];
                if node == NONE {
                    continue;
                }
                let k = slot_of[node as usize] as usize;
                let v = x.get(i, f);
                let r = &mut run[k];
                if r.seen && v > r.last {
                    let wr = wt[k] - r.w;
                    if r.w >= cfg.min_leaf && wr >= cfg.min_leaf {
                        let sr = s[k] - r.s;
                        let gain = r.s * r.s / r.w + sr * sr / wr;
                        if best[k].map_or(true, |b| gain > b.gain) {
                            let mut threshold = r.last + 0.5 * (v - r.last);
                            if threshold >= v {
                                threshold = r.last;
                            }
                            best[k] = Some(Candidate {
                                gain,
                                feature: f,
                                threshold,
                            });
                        }
                    }
                }
                r.s += g[i];
                r.w += w[i];
                r.last = v;
                r.seen = true;
            }
        }
        let mut next = Vec::new();
        let mut children = vec![(0usize, 0usize); frontier.len()];
        let mut split_of = vec![None; frontier.len()];
        for (k, &node) in frontier.iter().enumerate() {
            let Some(c) = best[k] else { continue };
            if !(c.gain > parent[k] + 1e-12 * parent[k].abs().max(1e-300)) {
                continue;
            }
            let (left, right) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[node] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left,
                right,
            };
            children[k] = (left, right);
            split_of[k] = Some(c);
            next.push(left);
            next.push(right);
        }
        for i in 0..n {
            if node_of[i] == NONE {
                continue;
            }
            let k = slot_of[node_of[i] as usize] as usize;
            node_of[i] = match split_of[k] {
                Some(c) => {
                    if x.get(i, c.feature) <= c.threshold {
                        children[k].0 as u32
                    } else {
                        children[k].1 as u32
                    }
                }
                None => NONE,
            };
        }
        frontier = next;
        depth += 1;
    }
    DecisionTree { n_features: d, nodes }
}

/// Classification tree with unit weights; leaves hold class-1 frequencies.
pub fn tree_train(x: &Matrix, y: &[u8], cfg: &TreeConfig) -> Result<DecisionTree> {
    check_training(x, y)?;
    let g: Vec<f64> = y.iter().map(|&c| c as f64).collect();
    let w = vec![1.0; y.len()];
    Ok(grow(x, &Presorted::new(x), &g, &w, &w, cfg))
}

pub(crate) fn check_training(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.n_rows() == 0 {
        return Err(Error::input("no training rows"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::input("label count differs from row count"));
    }
    if y.iter().any(|&c| c > 1) {
        return Err(Error::input("labels must be 0 or 1"));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite feature value"));
    }
    Ok(())
}

pub(crate) fn check_two_classes(y: &[u8]) -> Result<()> {
    let pos = y.iter().filter(|&&c| c == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}
