use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::optimizer::IterationRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub strict_window: usize,
    pub relaxed_window: usize,
    pub tol_expectation: f64,
    /// bits
    pub tol_entropy: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            strict_window: 10,
            relaxed_window: 5,
            tol_expectation: 0.01,
            tol_entropy: 0.05,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.relaxed_window && self.relaxed_window < self.strict_window) {
            return Err(invalid(format!(
                "need 1 <= relaxed_window < strict_window, got {} and {}",
                self.relaxed_window, self.strict_window
            )));
        }
        if !(self.tol_expectation > 0.0 && self.tol_entropy > 0.0) {
            return Err(invalid("convergence tolerances must be positive"));
        }
        Ok(())
    }

    pub fn strict(&self, records: &[IterationRecord]) -> Convergence {
        check_convergence(
            records,
            self.strict_window,
            self.tol_expectation,
            self.tol_entropy,
        )
    }

    pub fn relaxed(&self, records: &[IterationRecord]) -> Convergence {
        check_convergence(
            records,
            self.relaxed_window,
            self.tol_expectation,
            self.tol_entropy,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convergence {
    Continue,
    Converged,
}

/// Joint expectation/entropy stall test over the last `window` records.
///
/// The expectation has stalled when the best value inside the window beats
/// the best value before it by less than `tol_e`; with no records before the
/// window, the window's first record is the baseline. The entropy has
/// stalled when its range inside the window is below `tol_h`. Both must hold.
pub fn check_convergence(
    records: &[IterationRecord],
    window: usize,
    tol_e: f64,
    tol_h: f64,
) -> Convergence {
    if window == 0 || records.len() < window {
        return Convergence::Continue;
    }
    let (before, recent) = records.split_at(records.len() - window);
    let best = |rs: &[IterationRecord]| {
        rs.iter()
            .map(|r| r.expectation)
            .fold(f64::INFINITY, f64::min)
    };
    let baseline = if before.is_empty() {
        recent[0].expectation
    } else {
        best(before)
    };
    let improvement = baseline - best(recent);

    let (lo, hi) = recent
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.entropy), hi.max(r.entropy))
        });

    if improvement < tol_e && hi - lo < tol_h {
        Convergence::Converged
    } else {
        Convergence::Continue
    }
}

/// Whether a probe on the next tier shows a meaningful entropy drop.
pub fn should_advance_tier(last_entropy_current: f64, probe_entropy_next: f64, tol_h: f64) -> bool {
    probe_entropy_next < last_entropy_current - tol_h
}

/// Ids of the restarts in the best cluster of checkpoint expectations.
///
/// Values are split at the largest gap between consecutive sorted values and
/// the lower (better) side is promoted. Everything is promoted when there are
/// fewer than four restarts, all values coincide, or the largest gap is under
/// 5% of the value range. Returned ids are in ascending order.
pub fn prune_restarts(intermediate: &[(usize, f64)]) -> Vec<usize> {
    let mut all: Vec<usize> = intermediate.iter().map(|&(id, _)| id).collect();
    all.sort_unstable();
    if intermediate.len() < 4 {
        return all;
    }
    let mut sorted: Vec<(usize, f64)> = intermediate.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let range = sorted[sorted.len() - 1].1 - sorted[0].1;
    if range <= 0.0 {
        return all;
    }
    let (split, gap) = sorted
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i, w[1].1 - w[0].1))
        .fold((0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    if gap < 0.05 * range {
        return all;
    }
    let mut promoted: Vec<usize> = sorted[..=split].iter().map(|&(id, _)| id).collect();
    promoted.sort_unstable();
    promoted
}
