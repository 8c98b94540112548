//! Regression trees fit to second-order gradient statistics.

/// Tree node. A row goes left iff `row[feature] < threshold`.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
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
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] < threshold { left } else { right },
                Node::Leaf { value } => return value,
            }
        }
    }

    pub fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value } = n {
                *value *= factor;
            }
        }
    }

    pub fn leaf_value(&self, node: usize) -> f64 {
        match self.nodes[node] {
            Node::Leaf { value } => value,
            Node::Split { .. } => panic!("node {node} is not a leaf"),
        }
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub l2_reg: f64,
    pub min_child_weight: f64,
}

/// Column-major training matrix with per-feature ascending row orders.
pub(crate) struct Columns {
    pub cols: Vec<Vec<f64>>,
    pub order: Vec<Vec<u32>>,
}

impl Columns {
    pub fn new(x: &[Vec<f64>], n_features: usize) -> Self {
        let cols: Vec<Vec<f64>> = (0..n_features)
            .map(|f| x.iter().map(|r| r[f]).collect())
            .collect();
        let order = cols
            .iter()
            .map(|c| {
                let mut idx: Vec<u32> = (0..c.len() as u32).collect();
                idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { cols, order }
    }

    pub fn n_rows(&self) -> usize {
        self.cols.first().map_or(0, Vec::len)
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[inline]
fn score(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        g * g / d
    } else {
        0.0
    }
}

/// Grows one tree level by level with exact greedy splits. Returns the tree
/// and the leaf node reached by every training row.
pub(crate) fn grow(data: &Columns, grad: &[f64], hess: &[f64], p: &TreeParams) -> (Tree, Vec<usize>) {
    let n = data.n_rows();
    let mut nodes: Vec<Node> = vec![Node::Leaf { value: 0.0 }];
    let mut node_of = vec![0usize; n];
    let mut sums: Vec<(f64, f64)> = vec![(grad.iter().sum(), hess.iter().sum())];
    let mut frontier = vec![0usize];
    let mut slot = vec![usize::MAX; 1];

    for _depth in 0..p.max_depth {
        if frontier.is_empty() {
            break;
        }
        for (s, &node) in frontier.iter().enumerate() {
            slot[node] = s;
        }
        let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
        let mut acc: Vec<(f64, f64, Option<f64>)> = vec![(0.0, 0.0, None); frontier.len()];
        for (f, order) in data.order.iter().enumerate() {
            let col = &data.cols[f];
            acc.iter_mut().for_each(|a| *a = (0.0, 0.0, None));
            for &r in order {
                let r = r as usize;
                let node = node_of[r];
                let s = slot[node];
                if s == usize::MAX {
                    continue;
                }
                let x = col[r];
                let (gl, hl, last) = acc[s];
                if let Some(prev) = last {
                    if x > prev {
                        let (g, h) = sums[node];
                        let (gr, hr) = (g - gl, h - hl);
                        if hl >= p.min_child_weight && hr >= p.min_child_weight {
                            let gain = 0.5
                                * (score(gl, hl, p.l2_reg) + score(gr, hr, p.l2_reg)
                                    - score(g, h, p.l2_reg));
                            let bar = best[s].map_or(0.0, |c| c.gain);
                            if gain > bar + 1e-12 * bar.abs().max(1.0) {
                                best[s] = Some(Candidate {
                                    gain,
                                    feature: f,
                                    threshold: x,
                                });
                            }
                        }
                    }
                }
                acc[s] = (gl + grad[r], hl + hess[r], Some(x));
            }
        }
        let mut next = Vec::new();
        let mut child_of: Vec<Option<(usize, usize, Candidate)>> = vec![None; frontier.len()];
        for (s, &node) in frontier.iter().enumerate() {
            if let Some(c) = best[s] {
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                sums.push((0.0, 0.0));
                sums.push((0.0, 0.0));
                slot.push(usize::MAX);
                slot.push(usize::MAX);
                nodes[node] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right: left + 1,
                };
                child_of[s] = Some((left, left + 1, c));
                next.push(left);
                next.push(left + 1);
            }
        }
        for r in 0..n {
            let node = node_of[r];
            let s = slot[node];
            if s == usize::MAX {
                continue;
            }
            if let Some((left, right, c)) = child_of[s] {
                let child = if data.cols[c.feature][r] < c.threshold {
                    left
                } else {
                    right
                };
                node_of[r] = child;
                sums[child].0 += grad[r];
                sums[child].1 += hess[r];
            }
        }
        for &node in &frontier {
            slot[node] = usize::MAX;
        }
        frontier = next;
    }

    for (i, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf { value } = node {
            let (g, h) = sums[i];
            let d = h + p.l2_reg;
            *value = if d > 0.0 { -g / d * p.learning_rate } else { 0.0 };
        }
    }
    (Tree { nodes }, node_of)
}
