use std::collections::{BTreeMap, BTreeSet};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use super::node::TreeNode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectionPolicy {
    BestBound,
    BestEstimate,
}

/// Open nodes keyed by id, with ordered indexes on (lower bound, id) and
/// (estimate, id). Every ordering ends in the node id, so pops are a pure
/// function of the contents.
#[derive(Clone, Debug, Default)]
pub struct NodeQueue {
    nodes: BTreeMap<u64, TreeNode>,
    by_bound: BTreeSet<(OrderedFloat<f64>, u64)>,
    by_estimate: BTreeSet<(OrderedFloat<f64>, u64)>,
}

impl NodeQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn push(&mut self, node: TreeNode) {
        let id = node.id;
        self.by_bound.insert((OrderedFloat(node.lower_bound), id));
        self.by_estimate.insert((OrderedFloat(node.estimate), id));
        if let Some(old) = self.nodes.insert(id, node) {
            self.by_bound.remove(&(OrderedFloat(old.lower_bound), id));
            self.by_estimate.remove(&(OrderedFloat(old.estimate), id));
            panic!("node id {id} queued twice");
        }
    }

    pub fn remove(&mut self, id: u64) -> Option<TreeNode> {
        let node = self.nodes.remove(&id)?;
        self.by_bound.remove(&(OrderedFloat(node.lower_bound), id));
        self.by_estimate.remove(&(OrderedFloat(node.estimate), id));
        Some(node)
    }

    pub fn get(&self, id: u64) -> Option<&TreeNode> {
        self.nodes.get(&id)
    }

    /// Nodes in id order.
    pub fn iter(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.values()
    }

    /// Ids in selection order under `policy`.
    pub fn ranked_ids(&self, policy: SelectionPolicy) -> impl Iterator<Item = u64> + '_ {
        let index = match policy {
            SelectionPolicy::BestBound => &self.by_bound,
            SelectionPolicy::BestEstimate => &self.by_estimate,
        };
        index.iter().map(|&(_, id)| id)
    }

    pub fn peek_id(&self, policy: SelectionPolicy) -> Option<u64> {
        self.ranked_ids(policy).next()
    }

    pub fn pop(&mut self, policy: SelectionPolicy) -> Option<TreeNode> {
        let id = self.peek_id(policy)?;
        self.remove(id)
    }

    /// Removes and returns up to `k` nodes in selection order.
    pub fn pop_top(&mut self, k: usize, policy: SelectionPolicy) -> Vec<TreeNode> {
        let ids: Vec<u64> = self.ranked_ids(policy).take(k).collect();
        ids.into_iter().filter_map(|id| self.remove(id)).collect()
    }

    pub fn min_lower_bound(&self) -> Option<f64> {
        self.by_bound.iter().next().map(|(b, _)| b.0)
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.by_bound.clear();
        self.by_estimate.clear();
    }
}

/// Orders nodes as the queue would under `policy`.
pub fn sort_by_policy(nodes: &mut [TreeNode], policy: SelectionPolicy) {
    nodes.sort_by(|a, b| {
        let (ka, kb) = match policy {
            SelectionPolicy::BestBound => (a.lower_bound, b.lower_bound),
            SelectionPolicy::BestEstimate => (a.estimate, b.estimate),
        };
        OrderedFloat(ka).cmp(&OrderedFloat(kb)).then(a.id.cmp(&b.id))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u64, lb: f64, est: f64) -> TreeNode {
        TreeNode {
            id,
            estimate: est,
            ..TreeNode::root(lb)
        }
    }

    #[test]
    fn pops_by_key_then_id() {
        let mut q = NodeQueue::new();
        q.push(node(3, 1.0, 9.0));
        q.push(node(1, 1.0, 5.0));
        q.push(node(2, 0.5, 7.0));
        assert_eq!(q.min_lower_bound(), Some(0.5));
        let order: Vec<u64> = q.ranked_ids(SelectionPolicy::BestBound).collect();
        assert_eq!(order, vec![2, 1, 3]);
        assert_eq!(q.pop(SelectionPolicy::BestEstimate).unwrap().id, 1);
        assert_eq!(q.pop_top(5, SelectionPolicy::BestBound).len(), 2);
        assert!(q.is_empty());
    }
}
