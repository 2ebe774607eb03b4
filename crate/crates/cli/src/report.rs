//! Output records. JSON reports carry a `schema_version`; bump it when a
//! field changes meaning or disappears.

use std::collections::BTreeMap;
use std::fmt::Write;

use anyhow::Result;
use serde::Serialize;

use tiered_vqa::cloudsim::{FidelityMetric, SweepRow};
use tiered_vqa::optimizer::TrajectoryStatus;
use tiered_vqa::qsim::CircuitStats;
use tiered_vqa::tiering::{MultiRestartResult, RestartRecord, TierPlan};
use tiered_vqa::vqa::approximation_ratio;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct QueueRow<'a> {
    policy: &'a str,
    runtime_fraction: f64,
    seed: u64,
    throughput: f64,
    mean_relative_fidelity: f64,
    completion_time: f64,
    num_circuits: usize,
    mean_relative_fidelity_all_jobs: f64,
    mean_relative_fidelity_circuits: f64,
    sessions_pruned: usize,
    sessions_fine_tuned: usize,
    /// Busy fraction per device, `;`-separated in device order.
    per_device_utilization: String,
}

pub fn queue_csv(rows: &[SweepRow], metric: FidelityMetric) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in rows {
        let m = &r.metrics;
        writer.serialize(QueueRow {
            policy: r.policy.name(),
            runtime_fraction: r.runtime_fraction,
            seed: r.seed,
            throughput: m.throughput,
            mean_relative_fidelity: m.fidelity(metric),
            completion_time: m.completion_time,
            num_circuits: m.num_circuits,
            mean_relative_fidelity_all_jobs: m.mean_relative_fidelity_all_jobs,
            mean_relative_fidelity_circuits: m.mean_relative_fidelity_circuits,
            sessions_pruned: m.sessions_pruned,
            sessions_fine_tuned: m.sessions_fine_tuned,
            per_device_utilization: m
                .per_device_utilization
                .iter()
                .map(|u| u.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        })?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

#[derive(Serialize)]
pub struct MultiRestartReport {
    schema_version: u32,
    problem: String,
    ground_truth: f64,
    /// Device ids in tier order, lowest estimated fidelity first.
    tiers: Vec<String>,
    configurations: Vec<Configuration>,
}

#[derive(Serialize)]
struct Configuration {
    name: String,
    best_expectation: f64,
    best_approximation_ratio: f64,
    mean_approximation_ratio: f64,
    total_executions: usize,
    executions_per_device: BTreeMap<String, usize>,
    restarts: Vec<Restart>,
}

#[derive(Serialize)]
struct Restart {
    restart_id: usize,
    status: TrajectoryStatus,
    iterations: usize,
    final_expectation: f64,
    approximation_ratio: f64,
    executions_per_device: BTreeMap<String, usize>,
}

impl MultiRestartReport {
    pub fn new(problem: &str, ground_truth: f64, plan: &TierPlan) -> Self {
        MultiRestartReport {
            schema_version: SCHEMA_VERSION,
            problem: problem.to_string(),
            ground_truth,
            tiers: plan.tiers.iter().map(|d| d.id.clone()).collect(),
            configurations: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, result: &MultiRestartResult) -> Result<()> {
        let restarts = result
            .per_restart
            .iter()
            .map(|r| {
                Ok(Restart {
                    restart_id: r.restart_id,
                    status: r.status(),
                    iterations: r.trajectory.len(),
                    final_expectation: r.final_expectation,
                    approximation_ratio: approximation_ratio(
                        r.final_expectation,
                        result.ground_truth,
                    )?,
                    executions_per_device: r.executions_per_device(),
                })
            })
            .collect::<Result<_>>()?;
        self.configurations.push(Configuration {
            name: name.to_string(),
            best_expectation: result.best_expectation,
            best_approximation_ratio: result.best_approximation_ratio()?,
            mean_approximation_ratio: result.mean_approximation_ratio()?,
            total_executions: result.total_executions(),
            executions_per_device: result.executions_per_device.clone(),
            restarts,
        });
        Ok(())
    }
}

#[derive(Serialize)]
pub struct SingleRestartReport {
    schema_version: u32,
    ground_truth: f64,
    tiers: Vec<String>,
    configurations: Vec<SingleConfiguration>,
}

#[derive(Serialize)]
struct SingleConfiguration {
    name: String,
    status: TrajectoryStatus,
    final_expectation: f64,
    approximation_ratio: f64,
    total_executions: usize,
    executions_per_device: BTreeMap<String, usize>,
    /// Consecutive iterations per device, in execution order.
    device_sequence: Vec<Span>,
}

#[derive(Serialize)]
struct Span {
    device: String,
    iterations: usize,
}

impl SingleRestartReport {
    pub fn new(ground_truth: f64, plan: &TierPlan) -> Self {
        SingleRestartReport {
            schema_version: SCHEMA_VERSION,
            ground_truth,
            tiers: plan.tiers.iter().map(|d| d.id.clone()).collect(),
            configurations: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, record: &RestartRecord) -> Result<()> {
        let mut device_sequence: Vec<Span> = Vec::new();
        for r in &record.trajectory.records {
            match device_sequence.last_mut() {
                Some(span) if span.device == r.device_id => span.iterations += 1,
                _ => device_sequence.push(Span {
                    device: r.device_id.clone(),
                    iterations: 1,
                }),
            }
        }
        self.configurations.push(SingleConfiguration {
            name: name.to_string(),
            status: record.status(),
            final_expectation: record.final_expectation,
            approximation_ratio: approximation_ratio(record.final_expectation, self.ground_truth)?,
            total_executions: record.total_executions(),
            executions_per_device: record.executions_per_device(),
            device_sequence,
        });
        Ok(())
    }
}

pub type PCorrectRow = (String, usize, CircuitStats, f64);

pub fn p_correct_table(rows: &[PCorrectRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.0.len())
        .max()
        .unwrap_or(0)
        .max("device".len());
    let mut out = format!(
        "{:<width$}  layers  depth  1q  2q  meas  p_correct\n",
        "device"
    );
    for (id, layers, s, p) in rows {
        let _ = writeln!(
            out,
            "{id:<width$}  {layers:>6}  {:>5}  {:>2}  {:>2}  {:>4}  {p:.6e}",
            s.depth, s.one_qubit_gates, s.two_qubit_gates, s.measurements
        );
    }
    out
}

pub fn p_correct_csv(rows: &[PCorrectRow]) -> String {
    let mut out = String::from(
        "device,layers,depth,one_qubit_gates,two_qubit_gates,measurements,p_correct\n",
    );
    for (id, layers, s, p) in rows {
        let _ = writeln!(
            out,
            "{id},{layers},{},{},{},{},{p}",
            s.depth, s.one_qubit_gates, s.two_qubit_gates, s.measurements
        );
    }
    out
}
