//! Gradient-boosted regression trees of depth at most two, squared loss.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TreeNodeKind {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<RegressionTree>,
        right: Box<RegressionTree>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub node: TreeNodeKind,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match &self.node {
            TreeNodeKind::Leaf(v) => *v,
            TreeNodeKind::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    fn fit(xs: &[Vec<f64>], r: &[f64], idx: &[usize], depth: usize) -> Self {
        let mean = idx.iter().map(|&i| r[i]).sum::<f64>() / idx.len().max(1) as f64;
        let leaf = RegressionTree {
            node: TreeNodeKind::Leaf(mean),
        };
        if depth == 0 || idx.len() < 2 {
            return leaf;
        }
        let Some((feature, threshold)) = best_split(xs, r, idx) else {
            return leaf;
        };
        let (l, rr): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| xs[i][feature] <= threshold);
        RegressionTree {
            node: TreeNodeKind::Split {
                feature,
                threshold,
                left: Box::new(Self::fit(xs, r, &l, depth - 1)),
                right: Box::new(Self::fit(xs, r, &rr, depth - 1)),
            },
        }
    }
}

/// Best squared-error split over `idx`. Features are scanned in index order
/// and thresholds in increasing order; only strict improvements replace the
/// incumbent split, so ties go to the lower feature, then lower threshold.
fn best_split(xs: &[Vec<f64>], r: &[f64], idx: &[usize]) -> Option<(usize, f64)> {
    let f = xs[idx[0]].len();
    let total: f64 = idx.iter().map(|&i| r[i]).sum();
    let count = idx.len() as f64;
    let base = total * total / count;
    let mut best: Option<(f64, usize, f64)> = None;
    for feature in 0..f {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| xs[a][feature].total_cmp(&xs[b][feature]).then(a.cmp(&b)));
        let mut left_sum = 0.0;
        for k in 0..order.len() - 1 {
            left_sum += r[order[k]];
            let (v, next) = (xs[order[k]][feature], xs[order[k + 1]][feature]);
            if v == next {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = count - nl;
            let right_sum = total - left_sum;
            // Reduction in squared error relative to a single leaf.
            let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - base;
            if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g + 1e-12) {
                best = Some((gain, feature, 0.5 * (v + next)));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gbdt {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl Gbdt {
    pub fn fit(xs: &[Vec<f64>], ys: &[f64], n_trees: usize, learning_rate: f64, depth: usize) -> Self {
        let init = ys.iter().sum::<f64>() / ys.len().max(1) as f64;
        let mut model = Gbdt {
            init,
            learning_rate,
            trees: Vec::with_capacity(n_trees),
        };
        if xs.is_empty() {
            return model;
        }
        let idx: Vec<usize> = (0..xs.len()).collect();
        let mut pred = vec![init; ys.len()];
        for _ in 0..n_trees {
            let residual: Vec<f64> = ys.iter().zip(&pred).map(|(y, p)| y - p).collect();
            let tree = RegressionTree::fit(xs, &residual, &idx, depth);
            for (p, x) in pred.iter_mut().zip(xs) {
                *p += learning_rate * tree.predict(x);
            }
            model.trees.push(tree);
        }
        model
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.init
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict(x))
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_step() {
        let xs: Vec<Vec<f64>> = (0..12).map(|d| vec![d as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if x[0] > 5.0 { 100.0 } else { 0.0 }).collect();
        let g = Gbdt::fit(&xs, &ys, 50, 0.1, 2);
        let p = g.predict(&[8.0]);
        assert!((p - 100.0).abs() < 10.0, "{p}");
        assert!(g.predict(&[1.0]) < 10.0);
    }
}
