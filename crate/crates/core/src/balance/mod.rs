//! Workload prediction for dives and the load balancing built on it.
//!
//! Work is measured in LP iterations throughout, never wall-clock time.
//! Stage 1 is a linear model on standardized dive features; stage 2 flags
//! critical nodes by median/MAD; stage 3 averages a ridge model and a small
//! boosted-tree ensemble for the flagged nodes; stage 4 watches the absolute
//! percentage error and refits everything after a run of bad predictions.

mod gbdt;
mod linear;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::bnb::TreeNode;

pub use gbdt::{Gbdt, RegressionTree, TreeNodeKind};
pub use linear::{fit_linear, solve_dense, LinearModel};

pub const NUM_FEATURES: usize = 9;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "branch_depth",
    "search_index",
    "lp_objective_gap",
    "iteration_count",
    "fixed_vars",
    "fractional_vars",
    "parent_work_units",
    "parent_open_children",
    "has_parent",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiveFeatures {
    pub branch_depth: u32,
    pub search_index: u64,
    pub lp_objective_gap: f64,
    pub iteration_count: u64,
    pub fixed_vars: usize,
    pub fractional_vars: usize,
    pub parent_work_units: u64,
    pub parent_open_children: usize,
    pub has_parent: bool,
}

impl DiveFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.branch_depth as f64,
            self.search_index as f64,
            self.lp_objective_gap,
            self.iteration_count as f64,
            self.fixed_vars as f64,
            self.fractional_vars as f64,
            self.parent_work_units as f64,
            self.parent_open_children as f64,
            if self.has_parent { 1.0 } else { 0.0 },
        ]
    }
}

/// Features of `node` as a dive start. `search_index` is the global dive
/// sequence number the dive would get.
pub fn extract_features(node: &TreeNode, global_lower_bound: f64, search_index: u64) -> DiveFeatures {
    let gap = if node.lower_bound.is_finite() && global_lower_bound.is_finite() {
        (node.lower_bound - global_lower_bound).abs() / global_lower_bound.abs().max(1.0)
    } else {
        0.0
    };
    let info = &node.info;
    DiveFeatures {
        branch_depth: node.depth,
        search_index,
        lp_objective_gap: gap,
        iteration_count: info.eval_iterations,
        fixed_vars: info.fixed_vars,
        fractional_vars: info.fractional_vars,
        parent_work_units: if info.has_parent { info.parent_work_units } else { 0 },
        parent_open_children: if info.has_parent { info.parent_open_children } else { 0 },
        has_parent: info.has_parent,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiveParameters {
    /// Work units (LP iterations) a dive may spend.
    pub iter_budget: u64,
    pub max_depth: u32,
    /// Tree heuristics run on every `heuristic_cadence`-th dive.
    pub heuristic_cadence: u64,
    pub cut_violation_threshold: f64,
}

impl Default for DiveParameters {
    fn default() -> Self {
        Self {
            iter_budget: 1000,
            max_depth: 100,
            heuristic_cadence: 8,
            cut_violation_threshold: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamClamps {
    pub iter_budget: (u64, u64),
    pub max_depth: (u32, u32),
    pub cut_violation_threshold: (f64, f64),
}

impl Default for ParamClamps {
    fn default() -> Self {
        Self {
            iter_budget: (100, 100_000),
            max_depth: (10, 1000),
            cut_violation_threshold: (1e-6, 1e-1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalancerConfig {
    pub enabled: bool,
    pub min_samples: usize,
    pub rebalance_fraction: f64,
    pub ridge_lambda: f64,
    pub gbdt_trees: usize,
    pub gbdt_learning_rate: f64,
    pub gbdt_depth: usize,
    pub buffer_capacity: usize,
    /// Prediction used while the buffer is empty.
    pub prior: f64,
    pub ape_threshold: f64,
    pub ape_window: usize,
    /// Fit stage 1 to log(work units) and predict its exponential.
    pub log_target: bool,
    pub clamps: ParamClamps,
}

impl Default for BalancerConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            min_samples: 20,
            rebalance_fraction: 0.25,
            ridge_lambda: 1.0,
            gbdt_trees: 50,
            gbdt_learning_rate: 0.1,
            gbdt_depth: 2,
            buffer_capacity: 4096,
            prior: 100.0,
            ape_threshold: 0.5,
            ape_window: 5,
            log_target: false,
            clamps: ParamClamps::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Stage1 {
    /// Mean of the buffer (or the prior when it is empty).
    Mean(f64),
    Linear(LinearModel),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordOutcome {
    Ok,
    RetrainTriggered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadModel {
    pub config: BalancerConfig,
    pub stage1: Stage1,
    pub stage3_ridge: Option<LinearModel>,
    pub stage3_gbdt: Option<Gbdt>,
    pub training_buffer: VecDeque<(DiveFeatures, f64)>,
    pub ape_window: VecDeque<f64>,
    pub consecutive_bad: usize,
    pub retrain_count: u64,
    fitted: bool,
}

impl WorkloadModel {
    pub fn new(config: BalancerConfig) -> Self {
        Self {
            stage1: Stage1::Mean(config.prior),
            config,
            stage3_ridge: None,
            stage3_gbdt: None,
            training_buffer: VecDeque::new(),
            ape_window: VecDeque::new(),
            consecutive_bad: 0,
            retrain_count: 0,
            fitted: false,
        }
    }

    fn data(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.training_buffer
            .iter()
            .map(|(f, y)| (f.to_vec(), *y))
            .unzip()
    }

    /// Refits every stage from the buffer.
    pub fn refit(&mut self) {
        self.stage1 = train_stage1(&self.training_buffer, &self.config);
        if self.training_buffer.len() >= self.config.min_samples {
            let (xs, ys) = self.data();
            self.stage3_ridge = Some(fit_linear(&xs, &ys, self.config.ridge_lambda, self.config.ridge_lambda));
            self.stage3_gbdt = Some(Gbdt::fit(
                &xs,
                &ys,
                self.config.gbdt_trees,
                self.config.gbdt_learning_rate,
                self.config.gbdt_depth,
            ));
            self.fitted = true;
        }
    }

    pub fn stage1_prediction(&self, f: &DiveFeatures) -> f64 {
        match &self.stage1 {
            Stage1::Mean(m) => *m,
            Stage1::Linear(lm) => {
                let y = lm.predict(&f.to_vec());
                if self.config.log_target {
                    y.exp()
                } else {
                    y
                }
            }
        }
    }

    /// Absolute standardized stage-1 coefficients, one per feature.
    pub fn feature_importance(&self) -> Vec<(&'static str, f64)> {
        let weights = match &self.stage1 {
            Stage1::Linear(lm) => lm.std_weights.iter().map(|w| w.abs()).collect(),
            Stage1::Mean(_) => vec![0.0; NUM_FEATURES],
        };
        FEATURE_NAMES.iter().copied().zip(weights).collect()
    }
}

/// Stage 1 fit. Below `min_samples` the predictor is the buffer mean.
pub fn train_stage1(buffer: &VecDeque<(DiveFeatures, f64)>, config: &BalancerConfig) -> Stage1 {
    if buffer.is_empty() {
        return Stage1::Mean(config.prior);
    }
    if buffer.len() < config.min_samples {
        return Stage1::Mean(buffer.iter().map(|(_, y)| y).sum::<f64>() / buffer.len() as f64);
    }
    let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = buffer
        .iter()
        .map(|(f, y)| {
            let y = if config.log_target { y.max(1.0).ln() } else { *y };
            (f.to_vec(), y)
        })
        .unzip();
    Stage1::Linear(fit_linear(&xs, &ys, 0.0, 1e-6))
}

/// Median with the midpoint rule for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub flagged: Vec<bool>,
    pub threshold: f64,
    pub rebalance: bool,
}

/// Flags predictions above `median + 3 MAD`, and asks for rebalancing when
/// some worker's load deviates from the mean load by more than
/// `rebalance_fraction` of it.
pub fn detect_critical(predictions: &[f64], loads: &[f64], rebalance_fraction: f64) -> CriticalReport {
    let med = median(predictions);
    let deviations: Vec<f64> = predictions.iter().map(|p| (p - med).abs()).collect();
    let mad = median(&deviations);
    let threshold = med + 3.0 * mad;
    let flagged = predictions.iter().map(|&p| p > threshold).collect();
    let mean = loads.iter().sum::<f64>() / loads.len().max(1) as f64;
    let rebalance = loads
        .iter()
        .any(|&l| (l - mean).abs() > rebalance_fraction * mean);
    CriticalReport {
        flagged,
        threshold,
        rebalance,
    }
}

/// Stage 1 for ordinary nodes, the stage-3 average for critical ones;
/// clamped to at least one work unit.
pub fn predict(model: &WorkloadModel, f: &DiveFeatures, is_critical: bool) -> f64 {
    let base = model.stage1_prediction(f);
    let p = if is_critical {
        match (&model.stage3_ridge, &model.stage3_gbdt) {
            (Some(r), Some(g)) => {
                let x = f.to_vec();
                0.5 * (r.predict(&x) + g.predict(&x))
            }
            _ => base,
        }
    } else {
        base
    };
    if p.is_finite() {
        p.max(1.0)
    } else {
        1.0
    }
}

/// Appends the observation and tracks the error of `predicted`. A run of
/// `ape_window` consecutive errors strictly above the threshold refits all
/// stages.
pub fn record_outcome(
    model: &mut WorkloadModel,
    f: &DiveFeatures,
    predicted: f64,
    actual_work_units: f64,
) -> RecordOutcome {
    let actual = actual_work_units.max(1.0);
    let ape = (predicted - actual).abs() / actual;
    model.training_buffer.push_back((*f, actual));
    while model.training_buffer.len() > model.config.buffer_capacity {
        model.training_buffer.pop_front();
    }
    model.ape_window.push_back(ape);
    while model.ape_window.len() > model.config.ape_window {
        model.ape_window.pop_front();
    }
    if ape > model.config.ape_threshold {
        model.consecutive_bad += 1;
    } else {
        model.consecutive_bad = 0;
    }
    if model.consecutive_bad >= model.config.ape_window {
        model.refit();
        model.ape_window.clear();
        model.consecutive_bad = 0;
        model.retrain_count += 1;
        return RecordOutcome::RetrainTriggered;
    }
    if !model.fitted && model.training_buffer.len() >= model.config.min_samples {
        model.refit();
    } else if !model.fitted {
        model.stage1 = train_stage1(&model.training_buffer, &model.config);
    }
    RecordOutcome::Ok
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Candidate indices per worker, in assignment order.
    pub per_worker: Vec<Vec<usize>>,
    pub loads: Vec<f64>,
}

/// Longest-processing-time-first: candidates by predicted work descending
/// (ties by node id), each to the currently lightest worker (ties by index).
pub fn assign_nodes(predictions: &[(u64, f64)], k: usize) -> Assignment {
    let k = k.max(1);
    let mut order: Vec<usize> = (0..predictions.len()).collect();
    order.sort_by(|&a, &b| {
        predictions[b]
            .1
            .total_cmp(&predictions[a].1)
            .then(predictions[a].0.cmp(&predictions[b].0))
    });
    let mut per_worker = vec![Vec::new(); k];
    let mut loads = vec![0.0_f64; k];
    for c in order {
        let w = (0..k)
            .min_by(|&a, &b| loads[a].total_cmp(&loads[b]).then(a.cmp(&b)))
            .expect("k >= 1");
        per_worker[w].push(c);
        loads[w] += predictions[c].1;
    }
    Assignment { per_worker, loads }
}

/// Throttles workers loaded above 1.25x the mean and boosts those below
/// 0.75x, within the clamps.
pub fn adjust_parameters(
    loads: &[f64],
    current: &[DiveParameters],
    clamps: &ParamClamps,
) -> Vec<DiveParameters> {
    let mean = loads.iter().sum::<f64>() / loads.len().max(1) as f64;
    loads
        .iter()
        .zip(current)
        .map(|(&load, p)| {
            let mut q = *p;
            if load > 1.25 * mean {
                q.iter_budget = (p.iter_budget as f64 * 0.75).round() as u64;
                q.max_depth = p.max_depth.saturating_sub(10);
                q.cut_violation_threshold = p.cut_violation_threshold * 2.0;
            } else if load < 0.75 * mean {
                q.iter_budget = (p.iter_budget as f64 * 1.25).round() as u64;
                q.max_depth = p.max_depth + 10;
                q.cut_violation_threshold = p.cut_violation_threshold * 0.5;
            }
            q.iter_budget = q.iter_budget.clamp(clamps.iter_budget.0, clamps.iter_budget.1);
            q.max_depth = q.max_depth.clamp(clamps.max_depth.0, clamps.max_depth.1);
            q.cut_violation_threshold = q
                .cut_violation_threshold
                .clamp(clamps.cut_violation_threshold.0, clamps.cut_violation_threshold.1);
            q
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mad_example() {
        let r = detect_critical(&[1.0, 2.0, 3.0, 4.0, 100.0], &[10.0, 10.0], 0.25);
        assert_eq!(r.threshold, 6.0);
        assert_eq!(r.flagged, vec![false, false, false, false, true]);
        assert!(!r.rebalance);
        let flat = detect_critical(&[5.0; 4], &[1.0, 2.0], 0.25);
        assert!(flat.flagged.iter().all(|f| !f));
        assert!(flat.rebalance);
    }

    #[test]
    fn lpt_example() {
        let preds: Vec<(u64, f64)> = [9.0, 5.0, 4.0, 3.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &p)| (i as u64, p))
            .collect();
        let a = assign_nodes(&preds, 2);
        assert_eq!(a.loads, vec![12.0, 12.0]);
        assert_eq!(a.per_worker, vec![vec![0, 3], vec![1, 2, 4]]);
        let single = assign_nodes(&preds, 1);
        assert_eq!(single.per_worker[0].len(), 5);
    }

    #[test]
    fn retrain_on_fifth_bad_prediction() {
        let mut m = WorkloadModel::new(BalancerConfig::default());
        let f = DiveFeatures::default();
        assert_eq!(record_outcome(&mut m, &f, 150.0, 100.0), RecordOutcome::Ok);
        assert_eq!(m.consecutive_bad, 0);
        let apes = [0.6, 0.7, 0.9, 0.55, 0.51];
        for (k, ape) in apes.iter().enumerate() {
            let out = record_outcome(&mut m, &f, 100.0 * (1.0 + ape), 100.0);
            let expected = if k == 4 {
                RecordOutcome::RetrainTriggered
            } else {
                RecordOutcome::Ok
            };
            assert_eq!(out, expected);
        }
        assert_eq!(m.retrain_count, 1);
        for ape in [0.6, 0.6, 0.6, 0.6, 0.4] {
            assert_eq!(record_outcome(&mut m, &f, 100.0 * (1.0 + ape), 100.0), RecordOutcome::Ok);
        }
    }

    #[test]
    fn parameter_control() {
        let p = DiveParameters::default();
        let clamps = ParamClamps::default();
        assert_eq!(adjust_parameters(&[100.0, 100.0], &[p, p], &clamps), vec![p, p]);
        let q = adjust_parameters(&[200.0, 50.0], &[p, p], &clamps);
        assert_eq!(q[0].iter_budget, 750);
        assert_eq!(q[0].max_depth, 90);
        assert_eq!(q[0].cut_violation_threshold, 2e-4);
        assert_eq!(q[1].iter_budget, 1250);
        assert_eq!(q[1].max_depth, 110);
        let low = DiveParameters {
            iter_budget: 110,
            ..p
        };
        let r = adjust_parameters(&[300.0, 10.0], &[low, low], &clamps);
        assert_eq!(r[0].iter_budget, 100);
    }

    #[test]
    fn prediction_clamp_and_mean() {
        let mut m = WorkloadModel::new(BalancerConfig::default());
        assert_eq!(predict(&m, &DiveFeatures::default(), false), 100.0);
        m.stage1 = Stage1::Mean(-4.0);
        assert_eq!(predict(&m, &DiveFeatures::default(), false), 1.0);
    }
}
