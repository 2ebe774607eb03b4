use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec;
use crate::optimizer::{
    evaluation_count, spsa_minimize, spsa_resume, MonitorVerdict, SpsaConfig, Trajectory,
    TrajectoryStatus,
};
use crate::qsim::NoiseModel;
use crate::vqa::{approximation_ratio, ParameterVector, VqaProblem};

use super::{should_advance_tier, Convergence, ConvergenceConfig, TierPlan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub restart_id: usize,
    pub trajectory: Trajectory,
    pub final_expectation: f64,
    /// Tier-advance probe evaluations, which are not part of the trajectory.
    pub probe_executions: BTreeMap<String, usize>,
}

impl RestartRecord {
    pub fn status(&self) -> TrajectoryStatus {
        self.trajectory.status
    }

    pub fn is_pruned(&self) -> bool {
        self.trajectory.status == TrajectoryStatus::Pruned
    }

    pub fn executions_per_device(&self) -> BTreeMap<String, usize> {
        let mut counts = self.trajectory.executions_per_device();
        for (id, n) in &self.probe_executions {
            *counts.entry(id.clone()).or_insert(0) += n;
        }
        counts
    }

    pub fn total_executions(&self) -> usize {
        evaluation_count(&self.trajectory) + self.probe_executions.values().sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiRestartResult {
    pub per_restart: Vec<RestartRecord>,
    /// Lowest final expectation among restarts that were not pruned.
    pub best_expectation: f64,
    pub executions_per_device: BTreeMap<String, usize>,
    pub ground_truth: f64,
}

impl MultiRestartResult {
    pub fn total_executions(&self) -> usize {
        self.per_restart
            .iter()
            .map(RestartRecord::total_executions)
            .sum()
    }

    /// Approximation ratio of every restart that was not pruned, in restart order.
    pub fn approximation_ratios(&self) -> Result<Vec<f64>> {
        self.per_restart
            .iter()
            .filter(|r| !r.is_pruned())
            .map(|r| approximation_ratio(r.final_expectation, self.ground_truth))
            .collect()
    }

    pub fn mean_approximation_ratio(&self) -> Result<f64> {
        let ratios = self.approximation_ratios()?;
        Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
    }

    pub fn best_approximation_ratio(&self) -> Result<f64> {
        approximation_ratio(self.best_expectation, self.ground_truth)
    }
}

/// Runs `num_restarts` seeded restarts through the tiers of `plan`.
///
/// With two or more tiers, every restart explores on tier 0 until relaxed
/// convergence or the checkpoint iteration. All restarts then meet at a
/// barrier where the checkpoint expectations are clustered and the losing
/// cluster is pruned. Survivors climb the remaining tiers: each hand-off is
/// gated by a one-evaluation entropy probe on the next tier, intermediate
/// tiers stop on relaxed convergence and the final tier on strict
/// convergence. A one-tier plan runs every restart to strict convergence
/// without pruning.
///
/// Initial points are uniform in `[−π, π]`; restart `i` uses the SPSA seed
/// derived from `(seed, i)`, replacing `spsa.seed`.
pub fn run_multirestart<P: VqaProblem + ?Sized>(
    problem: &P,
    plan: &TierPlan,
    num_restarts: usize,
    spsa: &SpsaConfig,
    conv: &ConvergenceConfig,
    seed: u64,
) -> Result<MultiRestartResult> {
    if num_restarts == 0 {
        return Err(invalid("need at least one restart"));
    }
    run(problem, plan, num_restarts, spsa, conv, seed, true)
}

/// One restart through the tiers of `plan`, without pruning.
pub fn run_single_restart<P: VqaProblem + ?Sized>(
    problem: &P,
    plan: &TierPlan,
    spsa: &SpsaConfig,
    conv: &ConvergenceConfig,
    seed: u64,
) -> Result<RestartRecord> {
    let mut result = run(problem, plan, 1, spsa, conv, seed, false)?;
    Ok(result.per_restart.remove(0))
}

fn run<P: VqaProblem + ?Sized>(
    problem: &P,
    plan: &TierPlan,
    num_restarts: usize,
    spsa: &SpsaConfig,
    conv: &ConvergenceConfig,
    seed: u64,
    allow_pruning: bool,
) -> Result<MultiRestartResult> {
    plan.validate()?;
    spsa.validate()?;
    conv.validate()?;
    let num_params = problem.num_params();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<(usize, ParameterVector, SpsaConfig)> = (0..num_restarts)
        .map(|i| {
            let x0: Vec<f64> = (0..num_params).map(|_| rng.gen_range(-PI..=PI)).collect();
            let config = SpsaConfig {
                seed: exec::derive_seed(seed, i as u64),
                ..spsa.clone()
            };
            (i, x0.into(), config)
        })
        .collect();

    let single_tier = plan.tiers.len() == 1;
    let checkpoint = plan.checkpoint(spsa.max_iters);
    let explored: Vec<Result<(usize, Trajectory, SpsaConfig)>> =
        exec::map(starts, |(i, x0, config)| {
            let tier0 = &plan.tiers[0];
            let objective = objective_on(problem, tier0.noise);
            let t = if single_tier {
                let t = spsa_minimize(objective, x0, &tier0.id, &config, |t: &Trajectory| {
                    stop_if(conv.strict(&t.records))
                })?;
                finish_strict(t)
            } else {
                let mut t = spsa_minimize(objective, x0, &tier0.id, &config, |t: &Trajectory| {
                    if t.len() >= checkpoint {
                        MonitorVerdict::Stop
                    } else {
                        stop_if(conv.relaxed(&t.records))
                    }
                })?;
                if t.status == TrajectoryStatus::Running
                    && conv.relaxed(&t.records) == Convergence::Converged
                {
                    t.status = TrajectoryStatus::ConvergedRelaxed;
                }
                t
            };
            Ok((i, t, config))
        });
    let explored = explored.into_iter().collect::<Result<Vec<_>>>()?;

    let promoted: Vec<usize> = if single_tier || !allow_pruning {
        (0..num_restarts).collect()
    } else {
        let checkpoint_values: Vec<(usize, f64)> = explored
            .iter()
            .map(|(i, t, _)| (*i, t.last().expect("at least one iteration").expectation))
            .collect();
        super::prune_restarts(&checkpoint_values)
    };

    let finished: Vec<Result<RestartRecord>> =
        exec::map(explored, |(i, mut trajectory, config)| {
            let mut probe_executions = BTreeMap::new();
            if !single_tier {
                if promoted.binary_search(&i).is_ok() {
                    trajectory = climb(
                        problem,
                        plan,
                        trajectory,
                        &config,
                        conv,
                        &mut probe_executions,
                    )?;
                } else {
                    trajectory.status = TrajectoryStatus::Pruned;
                }
            }
            let final_expectation = trajectory
                .last()
                .expect("at least one iteration")
                .expectation;
            Ok(RestartRecord {
                restart_id: i,
                trajectory,
                final_expectation,
                probe_executions,
            })
        });
    let per_restart = finished.into_iter().collect::<Result<Vec<_>>>()?;

    let best_expectation = per_restart
        .iter()
        .filter(|r| !r.is_pruned())
        .map(|r| r.final_expectation)
        .fold(f64::INFINITY, f64::min);
    let mut executions_per_device = BTreeMap::new();
    for r in &per_restart {
        for (id, n) in r.executions_per_device() {
            *executions_per_device.entry(id).or_insert(0) += n;
        }
    }
    Ok(MultiRestartResult {
        per_restart,
        best_expectation,
        executions_per_device,
        ground_truth: problem.ground_truth(),
    })
}

/// Moves one explored restart up the tiers until it converges on the last
/// tier or runs out of iterations.
fn climb<P: VqaProblem + ?Sized>(
    problem: &P,
    plan: &TierPlan,
    mut trajectory: Trajectory,
    config: &SpsaConfig,
    conv: &ConvergenceConfig,
    probes: &mut BTreeMap<String, usize>,
) -> Result<Trajectory> {
    let last_tier = plan.tiers.len() - 1;
    let mut tier = 0;
    let mut segment_start = 0;
    loop {
        if trajectory.len() >= config.max_iters {
            trajectory.status = TrajectoryStatus::BudgetExhausted;
            return Ok(trajectory);
        }
        let device = &plan.tiers[tier];
        if tier == last_tier {
            let t = spsa_resume(
                objective_on(problem, device.noise),
                trajectory,
                &device.id,
                config,
                |t: &Trajectory| stop_if(conv.strict(&t.records[segment_start..])),
            )?;
            return Ok(finish_strict(t));
        }

        let next = &plan.tiers[tier + 1];
        let current = trajectory
            .last()
            .expect("explored restarts have records")
            .clone();
        let probe = problem.evaluate(&current.params, &next.noise)?;
        *probes.entry(next.id.clone()).or_insert(0) += 1;
        if !probe.entropy.is_finite() {
            return Err(Error::NonFinite {
                iteration: current.iter,
                trajectory: Box::new(trajectory),
            });
        }

        if should_advance_tier(current.entropy, probe.entropy, conv.tol_entropy) {
            tier += 1;
            segment_start = trajectory.len();
            if tier < last_tier {
                let device = &plan.tiers[tier];
                trajectory = spsa_resume(
                    objective_on(problem, device.noise),
                    trajectory,
                    &device.id,
                    config,
                    |t: &Trajectory| stop_if(conv.relaxed(&t.records[segment_start..])),
                )?;
            }
        } else {
            let target = trajectory.len() + conv.relaxed_window;
            trajectory = spsa_resume(
                objective_on(problem, device.noise),
                trajectory,
                &device.id,
                config,
                |t: &Trajectory| {
                    if t.len() >= target {
                        MonitorVerdict::Stop
                    } else {
                        MonitorVerdict::Continue
                    }
                },
            )?;
        }
    }
}

fn objective_on<P: VqaProblem + ?Sized>(
    problem: &P,
    noise: NoiseModel,
) -> impl FnMut(&str, &ParameterVector) -> Result<crate::vqa::EvaluationResult> + '_ {
    move |_: &str, x: &ParameterVector| problem.evaluate(x, &noise)
}

fn stop_if(c: Convergence) -> MonitorVerdict {
    match c {
        Convergence::Converged => MonitorVerdict::Stop,
        Convergence::Continue => MonitorVerdict::Continue,
    }
}

fn finish_strict(mut t: Trajectory) -> Trajectory {
    if t.status == TrajectoryStatus::Running {
        t.status = TrajectoryStatus::ConvergedStrict;
    }
    t
}
