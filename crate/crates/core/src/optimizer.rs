//! First-order SPSA with a per-iteration monitor hook.
//!
//! Every iteration spends three objective evaluations: two probes at
//! `x ± c_k·Δ_k` and one at the updated point, which becomes the
//! [`IterationRecord`] the monitor sees. The perturbation for iteration `k`
//! is drawn from a stream keyed by `(seed, k)`, so a run that is stopped and
//! resumed with the same config reproduces the uninterrupted run exactly.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::vqa::{EvaluationResult, ParameterVector};

/// Evaluations spent per completed iteration.
pub const EVALUATIONS_PER_ITERATION: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma_gain: f64,
    /// Stability constant `A` in the step-size denominator.
    pub stability: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl SpsaConfig {
    /// Standard gain schedule with `A = 0.1·max_iters`.
    pub fn new(max_iters: usize, seed: u64) -> Self {
        SpsaConfig {
            a: 0.2,
            c: 0.1,
            alpha: 0.602,
            gamma_gain: 0.101,
            stability: 0.1 * max_iters as f64,
            max_iters,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.c > 0.0) {
            return Err(invalid(format!(
                "SPSA gains must be positive (a = {}, c = {})",
                self.a, self.c
            )));
        }
        if !(0.0 < self.gamma_gain && self.gamma_gain < self.alpha && self.alpha <= 1.0) {
            return Err(invalid(format!(
                "need 0 < gamma_gain < alpha <= 1, got gamma_gain = {}, alpha = {}",
                self.gamma_gain, self.alpha
            )));
        }
        if !(self.stability >= 0.0 && self.stability.is_finite()) {
            return Err(invalid(format!(
                "stability constant must be finite and >= 0, got {}",
                self.stability
            )));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        Ok(())
    }

    /// `(a_k, c_k)` for zero-based iteration `k`.
    pub fn gains(&self, k: usize) -> (f64, f64) {
        let k = k as f64;
        (
            self.a / (k + 1.0 + self.stability).powf(self.alpha),
            self.c / (k + 1.0).powf(self.gamma_gain),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Point after this iteration's update.
    pub params: ParameterVector,
    pub expectation: f64,
    pub entropy: f64,
    pub device_id: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrajectoryStatus {
    Running,
    ConvergedRelaxed,
    ConvergedStrict,
    Pruned,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    pub status: TrajectoryStatus,
}

impl Default for Trajectory {
    fn default() -> Self {
        Trajectory {
            records: Vec::new(),
            status: TrajectoryStatus::Running,
        }
    }
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Evaluations attributed to each device.
    pub fn executions_per_device(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.device_id.clone()).or_insert(0) += EVALUATIONS_PER_ITERATION;
        }
        counts
    }
}

pub fn evaluation_count(trajectory: &Trajectory) -> usize {
    EVALUATIONS_PER_ITERATION * trajectory.records.len()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonitorVerdict {
    Continue,
    Stop,
    SwitchDevice(String),
}

/// Minimizes `objective(device, params)` from `x0`.
///
/// The monitor runs after every recorded iteration. `Stop` returns with the
/// status still `Running` so the caller can label or resume the trajectory;
/// reaching `max_iters` records sets `BudgetExhausted`.
pub fn spsa_minimize<F, M>(
    objective: F,
    x0: ParameterVector,
    device: &str,
    config: &SpsaConfig,
    monitor: M,
) -> Result<Trajectory>
where
    F: FnMut(&str, &ParameterVector) -> Result<EvaluationResult>,
    M: FnMut(&Trajectory) -> MonitorVerdict,
{
    run(objective, Trajectory::new(), x0, device, config, monitor)
}

/// Continues `trajectory` from its last point on `device`. The iteration
/// index, and with it the gain schedule and perturbation stream, picks up
/// where the trajectory stopped. `max_iters` bounds the total record count.
pub fn spsa_resume<F, M>(
    objective: F,
    trajectory: Trajectory,
    device: &str,
    config: &SpsaConfig,
    monitor: M,
) -> Result<Trajectory>
where
    F: FnMut(&str, &ParameterVector) -> Result<EvaluationResult>,
    M: FnMut(&Trajectory) -> MonitorVerdict,
{
    let x = trajectory
        .last()
        .map(|r| r.params.clone())
        .ok_or_else(|| invalid("cannot resume an empty trajectory"))?;
    run(objective, trajectory, x, device, config, monitor)
}

fn run<F, M>(
    mut objective: F,
    mut trajectory: Trajectory,
    mut x: ParameterVector,
    device: &str,
    config: &SpsaConfig,
    mut monitor: M,
) -> Result<Trajectory>
where
    F: FnMut(&str, &ParameterVector) -> Result<EvaluationResult>,
    M: FnMut(&Trajectory) -> MonitorVerdict,
{
    config.validate()?;
    if x.is_empty() {
        return Err(invalid("parameter vector is empty"));
    }
    let mut device = device.to_string();
    trajectory.status = TrajectoryStatus::Running;
    while trajectory.records.len() < config.max_iters {
        let k = trajectory.last().map_or(0, |r| r.iter + 1);
        let (a_k, c_k) = config.gains(k);
        let delta = rademacher(config.seed, k, x.len());

        let shifted = |sign: f64| -> ParameterVector {
            x.iter()
                .zip(&delta)
                .map(|(xi, di)| xi + sign * c_k * di)
                .collect::<Vec<_>>()
                .into()
        };
        let plus = checked(
            objective(&device, &shifted(1.0))?.expectation,
            k,
            &trajectory,
        )?;
        let minus = checked(
            objective(&device, &shifted(-1.0))?.expectation,
            k,
            &trajectory,
        )?;
        let scale = (plus - minus) / (2.0 * c_k);
        // Rademacher entries are ±1, so 1/Δ_i = Δ_i
        x = x
            .iter()
            .zip(&delta)
            .map(|(xi, di)| xi - a_k * scale * di)
            .collect::<Vec<_>>()
            .into();

        let at_x = objective(&device, &x)?;
        let expectation = checked(at_x.expectation, k, &trajectory)?;
        let entropy = checked(at_x.entropy, k, &trajectory)?;
        trajectory.records.push(IterationRecord {
            iter: k,
            params: x.clone(),
            expectation,
            entropy,
            device_id: device.clone(),
        });

        match monitor(&trajectory) {
            MonitorVerdict::Continue => {}
            MonitorVerdict::Stop => return Ok(trajectory),
            MonitorVerdict::SwitchDevice(next) => device = next,
        }
    }
    trajectory.status = TrajectoryStatus::BudgetExhausted;
    Ok(trajectory)
}

fn rademacher(seed: u64, k: usize, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    (0..len)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

fn checked(value: f64, iteration: usize, trajectory: &Trajectory) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            iteration,
            trajectory: Box::new(trajectory.clone()),
        })
    }
}

#[cfg(test)]
mod tests {
    use std::cell::Cell;

    use super::*;
    use crate::qsim::OutcomeDistribution;

    fn quadratic(_: &str, x: &ParameterVector) -> Result<EvaluationResult> {
        Ok(EvaluationResult {
            expectation: x.iter().map(|v| v * v).sum(),
            entropy: 0.0,
            distribution: OutcomeDistribution::uniform(1),
        })
    }

    fn never_stop(_: &Trajectory) -> MonitorVerdict {
        MonitorVerdict::Continue
    }

    #[test]
    fn converges_on_a_quadratic() {
        let t = spsa_minimize(
            quadratic,
            vec![1.0, 1.0].into(),
            "d",
            &SpsaConfig::new(200, 7),
            never_stop,
        )
        .unwrap();
        let x = &t.last().unwrap().params;
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 0.1, "final norm {norm}");
        assert_eq!(t.status, TrajectoryStatus::BudgetExhausted);
        assert_eq!(t.len(), 200);
    }

    #[test]
    fn stop_at_iteration_five() {
        let t = spsa_minimize(
            quadratic,
            vec![1.0].into(),
            "d",
            &SpsaConfig::new(50, 0),
            |t: &Trajectory| {
                if t.len() == 5 {
                    MonitorVerdict::Stop
                } else {
                    MonitorVerdict::Continue
                }
            },
        )
        .unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t.status, TrajectoryStatus::Running);
        assert_eq!(evaluation_count(&t), 15);
        assert_eq!(evaluation_count(&Trajectory::new()), 0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let run = || {
            spsa_minimize(
                quadratic,
                vec![0.5, -2.0, 1.0].into(),
                "d",
                &SpsaConfig::new(30, 3),
                never_stop,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn three_evaluations_per_iteration() {
        let calls = Cell::new(0usize);
        let counting = |d: &str, x: &ParameterVector| {
            calls.set(calls.get() + 1);
            quadratic(d, x)
        };
        let t = spsa_minimize(
            counting,
            vec![1.0, 2.0].into(),
            "d",
            &SpsaConfig::new(17, 1),
            never_stop,
        )
        .unwrap();
        assert_eq!(calls.get(), evaluation_count(&t));
        assert_eq!(calls.get(), 51);
    }

    #[test]
    fn device_attribution_across_a_resume() {
        let config = SpsaConfig::new(17, 9);
        let first = spsa_minimize(
            quadratic,
            vec![1.0].into(),
            "dev1",
            &config,
            |t: &Trajectory| {
                if t.len() == 10 {
                    MonitorVerdict::Stop
                } else {
                    MonitorVerdict::Continue
                }
            },
        )
        .unwrap();
        let t = spsa_resume(quadratic, first, "dev2", &config, never_stop).unwrap();
        assert_eq!(evaluation_count(&t), 51);
        let per_device = t.executions_per_device();
        assert_eq!(per_device["dev1"], 30);
        assert_eq!(per_device["dev2"], 21);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let config = SpsaConfig::new(40, 5);
        let x0: ParameterVector = vec![0.3, -0.7, 1.2].into();
        let whole = spsa_minimize(quadratic, x0.clone(), "d", &config, never_stop).unwrap();
        let part = spsa_minimize(quadratic, x0, "d", &config, |t: &Trajectory| {
            if t.len() == 13 {
                MonitorVerdict::Stop
            } else {
                MonitorVerdict::Continue
            }
        })
        .unwrap();
        let resumed = spsa_resume(quadratic, part, "d", &config, never_stop).unwrap();
        assert_eq!(resumed, whole);
    }

    #[test]
    fn switch_device_takes_effect_next_iteration() {
        let t = spsa_minimize(
            quadratic,
            vec![1.0].into(),
            "low",
            &SpsaConfig::new(6, 2),
            |t: &Trajectory| {
                if t.len() == 2 {
                    MonitorVerdict::SwitchDevice("high".into())
                } else {
                    MonitorVerdict::Continue
                }
            },
        )
        .unwrap();
        let ids: Vec<&str> = t.records.iter().map(|r| r.device_id.as_str()).collect();
        assert_eq!(ids, ["low", "low", "high", "high", "high", "high"]);
    }

    #[test]
    fn non_finite_objective_reports_progress() {
        let calls = Cell::new(0usize);
        let blows_up = |d: &str, x: &ParameterVector| {
            calls.set(calls.get() + 1);
            let mut r = quadratic(d, x)?;
            if calls.get() > 7 {
                r.expectation = f64::NAN;
            }
            Ok(r)
        };
        match spsa_minimize(
            blows_up,
            vec![1.0].into(),
            "d",
            &SpsaConfig::new(10, 0),
            never_stop,
        ) {
            Err(Error::NonFinite {
                iteration,
                trajectory,
            }) => {
                assert_eq!(iteration, 2);
                assert_eq!(trajectory.len(), 2);
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn gains_strictly_decrease() {
        let config = SpsaConfig::new(100, 0);
        for k in 0..500 {
            let (a0, c0) = config.gains(k);
            let (a1, c1) = config.gains(k + 1);
            assert!(a1 < a0 && c1 < c0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SpsaConfig::new(10, 0).validate().is_ok());
        assert!(SpsaConfig::new(0, 0).validate().is_err());
        assert!(SpsaConfig {
            a: 0.0,
            ..SpsaConfig::new(10, 0)
        }
        .validate()
        .is_err());
        assert!(SpsaConfig {
            gamma_gain: 0.7,
            ..SpsaConfig::new(10, 0)
        }
        .validate()
        .is_err());
        assert!(SpsaConfig {
            alpha: 1.2,
            ..SpsaConfig::new(10, 0)
        }
        .validate()
        .is_err());
        assert!(spsa_resume(
            quadratic,
            Trajectory::new(),
            "d",
            &SpsaConfig::new(10, 0),
            never_stop
        )
        .is_err());
    }
}
