//! Multi-task training objectives over per-instance losses.
//!
//! Per-instance losses are mean token negative log-likelihoods of the
//! target, so they are non-negative and comparable across tasks.
//!
//! * [`balanced_contribution_loss`] sums the three per-task means, so each
//!   step contributes equally however many instances it has.
//! * [`pooled_sum_loss`] is the uniform-instance mean over all tasks (the
//!   unbalanced ablation).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::TaskKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("{0} group is empty")]
    EmptyGroup(TaskKind),
    #[error("no instance losses at all")]
    NoInstances,
    #[error("{task} loss #{index} is {value}, expected a finite value >= 0")]
    InvalidLoss { task: TaskKind, index: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub quad_mean: f64,
    pub pairwise_mean: f64,
    pub overall_mean: f64,
    pub total: f64,
}

fn check(task: TaskKind, values: &[f64]) -> Result<(), LossError> {
    match values.iter().position(|v| !v.is_finite() || *v < 0.0) {
        Some(index) => Err(LossError::InvalidLoss {
            task,
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

fn group_mean(task: TaskKind, values: &[f64]) -> Result<f64, LossError> {
    if values.is_empty() {
        return Err(LossError::EmptyGroup(task));
    }
    check(task, values)?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// `mean(quad) + mean(pairwise) + mean(overall)`. Every group must be
/// non-empty.
pub fn balanced_contribution_loss(quad: &[f64], pairwise: &[f64], overall: &[f64]) -> Result<LossBreakdown, LossError> {
    let quad_mean = group_mean(TaskKind::Quad, quad)?;
    let pairwise_mean = group_mean(TaskKind::Pairwise, pairwise)?;
    let overall_mean = group_mean(TaskKind::Overall, overall)?;
    Ok(LossBreakdown {
        quad_mean,
        pairwise_mean,
        overall_mean,
        total: quad_mean + pairwise_mean + overall_mean,
    })
}

/// Mean over the concatenation of all groups.
pub fn pooled_sum_loss(quad: &[f64], pairwise: &[f64], overall: &[f64]) -> Result<f64, LossError> {
    check(TaskKind::Quad, quad)?;
    check(TaskKind::Pairwise, pairwise)?;
    check(TaskKind::Overall, overall)?;
    let n = quad.len() + pairwise.len() + overall.len();
    if n == 0 {
        return Err(LossError::NoInstances);
    }
    let sum: f64 = quad.iter().chain(pairwise).chain(overall).sum();
    Ok(sum / n as f64)
}

/// One row of a dumped per-instance loss file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceLoss {
    pub task: TaskKind,
    pub loss: f64,
}

/// Split dumped rows into (quad, pairwise, overall), keeping row order.
pub fn group_losses(rows: &[InstanceLoss]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let pick = |t: TaskKind| rows.iter().filter(|r| r.task == t).map(|r| r.loss).collect::<Vec<_>>();
    (pick(TaskKind::Quad), pick(TaskKind::Pairwise), pick(TaskKind::Overall))
}
