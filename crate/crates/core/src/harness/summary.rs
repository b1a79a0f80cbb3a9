use std::fmt;

use serde::Serialize;

use super::runner::StepRecord;
use crate::Vec3;

/// Levels below which each error counts as converged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Largest component of `e`.
    pub as_error: f64,
    /// Norms of `e1`, `e2`.
    pub tracking: f64,
    /// Norm of `e_s`.
    pub estimation: f64,
    /// Norm of `e_h`.
    pub prediction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            as_error: 0.5,
            tracking: 0.5,
            estimation: 0.05,
            prediction: 0.05,
        }
    }
}

/// First step after which the error stays below its threshold; `None` when
/// it is still above at the last step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub e: Option<u64>,
    pub e1: Option<u64>,
    pub e2: Option<u64>,
    pub e_s: Option<u64>,
    pub e_h: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    pub sup: f64,
    pub mean: f64,
}

impl ErrorStats {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count().max(1) as f64;
        Self {
            sup: values.clone().fold(0.0, f64::max),
            mean: values.sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub steps: usize,
    pub post_transient_start: u64,
    pub thresholds: Thresholds,
    pub convergence: Convergence,
    /// Post-transient statistics; `e` uses the largest absolute component,
    /// the others use norms.
    pub e: ErrorStats,
    pub e1: ErrorStats,
    pub e2: ErrorStats,
    pub e_s: ErrorStats,
    pub e_h: ErrorStats,
    pub min_inter_agent: f64,
    pub min_inter_agent_post: f64,
    pub min_agent_target: f64,
    pub min_agent_target_post: f64,
    pub min_antipodal_deg_post: f64,
    /// Steps `k` with `r(k) != r(k - 1)`.
    pub radius_changes: Vec<u64>,
    pub final_radius: f64,
}

fn max_abs(v: &Vec3) -> f64 {
    v.amax()
}

fn settle(records: &[StepRecord], level: f64, f: impl Fn(&StepRecord) -> f64) -> Option<u64> {
    match records.iter().rposition(|r| f(r).is_nan() || f(r) >= level) {
        None => Some(records[0].k),
        Some(i) => records.get(i + 1).map(|r| r.k),
    }
}

fn min_of(records: &[StepRecord], f: impl Fn(&StepRecord) -> f64) -> f64 {
    records.iter().map(f).fold(f64::INFINITY, f64::min)
}

/// Summarizes a trace; `None` for an empty one. The post-transient window is
/// the last `post_fraction` of the records.
pub fn summarize(records: &[StepRecord], post_fraction: f64, th: Thresholds) -> Option<Summary> {
    let last = records.last()?;
    let n = records.len();
    let tail = ((n as f64 * post_fraction).ceil() as usize).clamp(1, n);
    let post = &records[n - tail..];

    let norm = |f: fn(&StepRecord) -> Vec3| move |r: &StepRecord| f(r).norm();
    let convergence = Convergence {
        e: settle(records, th.as_error, |r| max_abs(&r.e)),
        e1: settle(records, th.tracking, norm(|r| r.e1)),
        e2: settle(records, th.tracking, norm(|r| r.e2)),
        e_s: settle(records, th.estimation, norm(|r| r.e_s)),
        e_h: settle(records, th.prediction, norm(|r| r.e_h)),
    };
    let stats = |f: fn(&StepRecord) -> Vec3| ErrorStats::of(post.iter().map(move |r| f(r).norm()));

    let inter = |r: &StepRecord| (r.x1 - r.x2).norm();
    let radius_changes = records
        .windows(2)
        .filter(|w| w[1].radius != w[0].radius)
        .map(|w| w[1].k)
        .collect();

    Some(Summary {
        steps: n,
        post_transient_start: post[0].k,
        thresholds: th,
        convergence,
        e: ErrorStats::of(post.iter().map(|r| max_abs(&r.e))),
        e1: stats(|r| r.e1),
        e2: stats(|r| r.e2),
        e_s: stats(|r| r.e_s),
        e_h: stats(|r| r.e_h),
        min_inter_agent: min_of(records, inter),
        min_inter_agent_post: min_of(post, inter),
        min_agent_target: min_of(records, |r| r.min_agent_target),
        min_agent_target_post: min_of(post, |r| r.min_agent_target),
        min_antipodal_deg_post: min_of(post, |r| r.antipodal_deg),
        radius_changes,
        final_radius: last.radius,
    })
}

fn opt(k: Option<u64>) -> String {
    k.map_or_else(|| "not reached".to_string(), |k| k.to_string())
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "steps: {}", self.steps)?;
        writeln!(
            f,
            "post-transient window starts at k = {}",
            self.post_transient_start
        )?;
        writeln!(
            f,
            "convergence step (first k after which the error stays below threshold):"
        )?;
        let c = &self.convergence;
        let t = &self.thresholds;
        writeln!(f, "  e   max component < {:<8} {}", t.as_error, opt(c.e))?;
        writeln!(f, "  e1  norm < {:<8}          {}", t.tracking, opt(c.e1))?;
        writeln!(f, "  e2  norm < {:<8}          {}", t.tracking, opt(c.e2))?;
        writeln!(
            f,
            "  e_s norm < {:<8}          {}",
            t.estimation,
            opt(c.e_s)
        )?;
        writeln!(
            f,
            "  e_h norm < {:<8}          {}",
            t.prediction,
            opt(c.e_h)
        )?;
        writeln!(f, "post-transient sup / mean:")?;
        for (name, s) in [
            ("e (max comp)", self.e),
            ("e1", self.e1),
            ("e2", self.e2),
            ("e_s", self.e_s),
            ("e_h", self.e_h),
        ] {
            writeln!(f, "  {name:<12} {:.6e} / {:.6e}", s.sup, s.mean)?;
        }
        writeln!(
            f,
            "min inter-agent distance: {:.6} (post-transient {:.6})",
            self.min_inter_agent, self.min_inter_agent_post
        )?;
        writeln!(
            f,
            "min agent-target distance: {:.6} (post-transient {:.6})",
            self.min_agent_target, self.min_agent_target_post
        )?;
        writeln!(
            f,
            "min antipodal angle post-transient: {:.3} deg",
            self.min_antipodal_deg_post
        )?;
        writeln!(f, "final radius: {}", self.final_radius)?;
        write!(f, "radius changes at k: {:?}", self.radius_changes)
    }
}
