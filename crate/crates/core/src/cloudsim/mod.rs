//! Discrete-event model of a multi-device quantum cloud.
//!
//! Each device serves one circuit at a time from two FIFO queues: a priority
//! queue for follow-up circuits of runtime sessions already admitted to the
//! device, and the ordinary queue. Service is non-preemptive. Policies only
//! decide where a circuit is queued.

mod workload;

pub use workload::{generate_workload, JobKind, JobSpec, WorkloadConfig};

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimDevice {
    pub id: usize,
    pub fidelity: f64,
    pub min_exec_time: f64,
    pub max_exec_time: f64,
}

impl SimDevice {
    /// Device whose execution time varies 3× between minimum and maximum.
    pub fn new(id: usize, fidelity: f64, min_exec_time: f64) -> Self {
        SimDevice {
            id,
            fidelity,
            min_exec_time,
            max_exec_time: 3.0 * min_exec_time,
        }
    }

    /// Device whose every execution takes exactly `duration`.
    pub fn fixed(id: usize, fidelity: f64, duration: f64) -> Self {
        SimDevice {
            id,
            fidelity,
            min_exec_time: duration,
            max_exec_time: duration,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.fidelity > 0.0 && self.fidelity <= 1.0) {
            return Err(invalid(format!(
                "device {}: fidelity {} outside (0, 1]",
                self.id, self.fidelity
            )));
        }
        if !(self.min_exec_time > 0.0
            && self.min_exec_time <= self.max_exec_time
            && self.max_exec_time.is_finite())
        {
            return Err(invalid(format!(
                "device {}: need 0 < min_exec_time <= max_exec_time",
                self.id
            )));
        }
        Ok(())
    }
}

/// `num_devices` devices with fidelities evenly spaced on `[0.3, 0.9]` and
/// minimum execution times uniform in `[0.5, 1.5]`.
pub fn default_fleet(num_devices: usize, seed: u64) -> Vec<SimDevice> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_devices)
        .map(|i| {
            let fidelity = if num_devices == 1 {
                0.9
            } else {
                0.3 + 0.6 * i as f64 / (num_devices - 1) as f64
            };
            SimDevice::new(i, fidelity, rng.gen_range(0.5..1.5))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    LeastBusy,
    LoadWeighted,
    FidelityWeighted,
    BestFidelity,
    Eqc,
    Tiered,
}

impl Policy {
    pub const ALL: [Policy; 6] = [
        Policy::LeastBusy,
        Policy::LoadWeighted,
        Policy::FidelityWeighted,
        Policy::BestFidelity,
        Policy::Eqc,
        Policy::Tiered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::LeastBusy => "least-busy",
            Policy::LoadWeighted => "load-weighted",
            Policy::FidelityWeighted => "fidelity-weighted",
            Policy::BestFidelity => "best-fidelity",
            Policy::Eqc => "eqc",
            Policy::Tiered => "tiered",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("unknown policy {s:?}; expected one of least-busy, load-weighted, fidelity-weighted, best-fidelity, eqc, tiered")))
    }
}

/// Parameters of the tiered policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TieredPolicyConfig {
    /// Share of a session's executions spent exploring.
    pub checkpoint_fraction: f64,
    /// Exploration devices need at least this fraction of the best fidelity.
    pub fidelity_floor: f64,
    /// Share of sessions terminated at the checkpoint.
    pub prune_fraction: f64,
}

impl Default for TieredPolicyConfig {
    fn default() -> Self {
        TieredPolicyConfig {
            checkpoint_fraction: 0.4,
            fidelity_floor: 0.5,
            prune_fraction: 0.6,
        }
    }
}

impl TieredPolicyConfig {
    fn validate(&self) -> Result<()> {
        if !(self.checkpoint_fraction > 0.0 && self.checkpoint_fraction < 1.0) {
            return Err(invalid("checkpoint_fraction must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.fidelity_floor)
            || !(0.0..=1.0).contains(&self.prune_fraction)
        {
            return Err(invalid(
                "fidelity_floor and prune_fraction must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    /// Exploration executions of a session with `len` executions.
    pub fn exploration_len(&self, len: usize) -> usize {
        ((self.checkpoint_fraction * len as f64).floor() as usize).max(1)
    }
}

/// How a run's single fidelity number is aggregated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidelityMetric {
    /// Mean over runtime sessions that were not pruned; all jobs if there are none.
    Sessions,
    AllJobs,
    Circuits,
}

impl FromStr for FidelityMetric {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sessions" => Ok(FidelityMetric::Sessions),
            "all-jobs" => Ok(FidelityMetric::AllJobs),
            "circuits" => Ok(FidelityMetric::Circuits),
            _ => Err(invalid(format!(
                "unknown fidelity metric {s:?}; expected sessions, all-jobs or circuits"
            ))),
        }
    }
}

/// Outcome of one simulation. Fidelities are relative to the best device.
///
/// A job's fidelity is the mean over the circuits of its last phase: the
/// fine-tuning phase of a tiered session, the whole job otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub num_circuits: usize,
    pub completion_time: f64,
    pub throughput: f64,
    pub mean_relative_fidelity: f64,
    pub mean_relative_fidelity_all_jobs: f64,
    pub mean_relative_fidelity_circuits: f64,
    pub per_device_utilization: Vec<f64>,
    pub per_device_circuits: Vec<usize>,
    pub sessions_fine_tuned: usize,
    pub sessions_pruned: usize,
}

impl SimMetrics {
    pub fn fidelity(&self, metric: FidelityMetric) -> f64 {
        match metric {
            FidelityMetric::Sessions => self.mean_relative_fidelity,
            FidelityMetric::AllJobs => self.mean_relative_fidelity_all_jobs,
            FidelityMetric::Circuits => self.mean_relative_fidelity_circuits,
        }
    }
}

/// Circuits per unit time; zero when nothing completed.
pub fn throughput(num_circuits: usize, completion_time: f64) -> f64 {
    if num_circuits == 0 || completion_time <= 0.0 {
        0.0
    } else {
        num_circuits as f64 / completion_time
    }
}

pub fn run_sim(
    jobs: &[JobSpec],
    fleet: &[SimDevice],
    policy: Policy,
    seed: u64,
) -> Result<SimMetrics> {
    run_sim_with(jobs, fleet, policy, &TieredPolicyConfig::default(), seed)
}

pub fn run_sim_with(
    jobs: &[JobSpec],
    fleet: &[SimDevice],
    policy: Policy,
    tiered: &TieredPolicyConfig,
    seed: u64,
) -> Result<SimMetrics> {
    Ok(Simulation::new(jobs, fleet, policy, tiered, seed)?.run().0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    ExecutionFinished,
    SessionNextCircuit,
    JobArrival,
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    kind: EventKind,
    job: usize,
    seq: u64,
    device: usize,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.job.cmp(&other.job))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Whole,
    Explore,
    FineTune,
}

#[derive(Default)]
struct DeviceState {
    running: Option<usize>,
    priority: VecDeque<usize>,
    queue: VecDeque<usize>,
    busy_time: f64,
    circuits: usize,
}

impl DeviceState {
    fn pending(&self) -> usize {
        self.priority.len() + self.queue.len() + usize::from(self.running.is_some())
    }
}

struct JobState {
    next_exec: usize,
    outstanding: usize,
    admitted: Option<(usize, Phase)>,
    pruned: bool,
    fidelity_sum: f64,
    fidelity_count: usize,
    phase: Phase,
    relative_fidelity: Option<f64>,
}

struct Simulation<'a> {
    jobs: &'a [JobSpec],
    fleet: &'a [SimDevice],
    policy: Policy,
    tiered: &'a TieredPolicyConfig,
    max_fidelity: f64,
    devices: Vec<DeviceState>,
    state: Vec<JobState>,
    events: BinaryHeap<Reverse<Event>>,
    seq: u64,
    durations: ChaCha8Rng,
    choices: ChaCha8Rng,
    circuits: usize,
    circuit_fidelity_sum: f64,
    last_completion: f64,
}

impl<'a> Simulation<'a> {
    fn new(
        jobs: &'a [JobSpec],
        fleet: &'a [SimDevice],
        policy: Policy,
        tiered: &'a TieredPolicyConfig,
        seed: u64,
    ) -> Result<Self> {
        if fleet.is_empty() {
            return Err(invalid("fleet is empty"));
        }
        for d in fleet {
            d.validate()?;
        }
        tiered.validate()?;
        for (i, j) in jobs.iter().enumerate() {
            j.validate()?;
            if j.job_id != i {
                return Err(invalid(format!(
                    "job ids must be 0..n in order; position {i} holds {}",
                    j.job_id
                )));
            }
        }

        let mut pruned = vec![false; jobs.len()];
        if policy == Policy::Tiered {
            let mut sessions: Vec<(u64, usize)> = jobs
                .iter()
                .filter(|j| j.kind == JobKind::RuntimeSession)
                .map(|j| (exec::derive_seed(seed, j.job_id as u64), j.job_id))
                .collect();
            sessions.sort_unstable();
            let cut = (tiered.prune_fraction * sessions.len() as f64).round() as usize;
            for &(_, id) in &sessions[..cut] {
                pruned[id] = true;
            }
        }

        let state = jobs
            .iter()
            .zip(pruned)
            .map(|(_, pruned)| JobState {
                next_exec: 0,
                outstanding: 0,
                admitted: None,
                pruned,
                fidelity_sum: 0.0,
                fidelity_count: 0,
                phase: Phase::Whole,
                relative_fidelity: None,
            })
            .collect();
        let mut sim = Simulation {
            jobs,
            fleet,
            policy,
            tiered,
            max_fidelity: fleet.iter().map(|d| d.fidelity).fold(0.0, f64::max),
            devices: fleet.iter().map(|_| DeviceState::default()).collect(),
            state,
            events: BinaryHeap::new(),
            seq: 0,
            durations: ChaCha8Rng::seed_from_u64(exec::derive_seed(seed, 1)),
            choices: ChaCha8Rng::seed_from_u64(exec::derive_seed(seed, 2)),
            circuits: 0,
            circuit_fidelity_sum: 0.0,
            last_completion: 0.0,
        };
        for j in jobs {
            sim.push(j.arrival_time, EventKind::JobArrival, j.job_id, 0);
        }
        Ok(sim)
    }

    fn push(&mut self, time: f64, kind: EventKind, job: usize, device: usize) {
        self.seq += 1;
        self.events.push(Reverse(Event {
            time,
            kind,
            job,
            seq: self.seq,
            device,
        }));
    }

    /// Runs to completion; also returns the processed event times.
    fn run(mut self) -> (SimMetrics, Vec<f64>) {
        let mut times = Vec::with_capacity(self.events.len() * 4);
        while let Some(Reverse(ev)) = self.events.pop() {
            times.push(ev.time);
            match ev.kind {
                EventKind::JobArrival | EventKind::SessionNextCircuit => {
                    self.submit(ev.job, ev.time)
                }
                EventKind::ExecutionFinished => self.finish(ev.device, ev.job, ev.time),
            }
        }
        (self.metrics(), times)
    }

    fn least_busy(&self, candidates: impl Iterator<Item = usize>) -> usize {
        candidates
            .min_by_key(|&d| (self.devices[d].pending(), d))
            .expect("candidate set is non-empty")
    }

    fn best_fidelity(&self) -> usize {
        let max = self.max_fidelity;
        self.least_busy((0..self.fleet.len()).filter(|&d| self.fleet[d].fidelity == max))
    }

    fn weighted(&mut self, weights: Vec<f64>) -> usize {
        WeightedIndex::new(weights)
            .expect("weights are positive")
            .sample(&mut self.choices)
    }

    /// Device for a fresh admission under the run's policy.
    fn choose(&mut self) -> usize {
        let n = self.fleet.len();
        match self.policy {
            Policy::LeastBusy | Policy::Eqc | Policy::Tiered => self.least_busy(0..n),
            Policy::BestFidelity => self.best_fidelity(),
            Policy::LoadWeighted => {
                let w = self
                    .devices
                    .iter()
                    .map(|d| 1.0 / (1.0 + d.pending() as f64))
                    .collect();
                self.weighted(w)
            }
            Policy::FidelityWeighted => {
                let w = self.fleet.iter().map(|d| d.fidelity).collect();
                self.weighted(w)
            }
        }
    }

    fn submit(&mut self, job: usize, now: f64) {
        let spec = &self.jobs[job];
        let exec_index = self.state[job].next_exec;
        self.state[job].next_exec += 1;

        if spec.kind == JobKind::Independent {
            let d = self.choose();
            self.state[job].outstanding = 1;
            self.enqueue(d, job, false, now);
            return;
        }
        if self.policy == Policy::Eqc {
            self.state[job].outstanding = 2;
            for _ in 0..2 {
                let d = self.least_busy(0..self.fleet.len());
                self.enqueue(d, job, false, now);
            }
            return;
        }

        let phase = if self.policy != Policy::Tiered {
            Phase::Whole
        } else if exec_index < self.tiered.exploration_len(spec.num_executions) {
            Phase::Explore
        } else {
            Phase::FineTune
        };
        if self.state[job].phase != phase {
            self.state[job].phase = phase;
            self.state[job].fidelity_sum = 0.0;
            self.state[job].fidelity_count = 0;
        }
        self.state[job].outstanding = 1;
        match self.state[job].admitted {
            Some((d, p)) if p == phase => self.enqueue(d, job, true, now),
            _ => {
                let d = match phase {
                    Phase::Whole => self.choose(),
                    Phase::FineTune => self.best_fidelity(),
                    Phase::Explore => {
                        let floor = self.tiered.fidelity_floor * self.max_fidelity;
                        let fleet = self.fleet;
                        self.least_busy((0..fleet.len()).filter(|&d| fleet[d].fidelity >= floor))
                    }
                };
                self.state[job].admitted = Some((d, phase));
                self.enqueue(d, job, false, now);
            }
        }
    }

    fn enqueue(&mut self, device: usize, job: usize, priority: bool, now: f64) {
        let dev = &mut self.devices[device];
        if priority {
            dev.priority.push_back(job);
        } else {
            dev.queue.push_back(job);
        }
        self.try_start(device, now);
    }

    fn try_start(&mut self, device: usize, now: f64) {
        let dev = &mut self.devices[device];
        if dev.running.is_some() {
            return;
        }
        let Some(job) = dev.priority.pop_front().or_else(|| dev.queue.pop_front()) else {
            return;
        };
        let spec = &self.fleet[device];
        let duration = if spec.max_exec_time > spec.min_exec_time {
            self.durations
                .gen_range(spec.min_exec_time..spec.max_exec_time)
        } else {
            spec.min_exec_time
        };
        dev.running = Some(job);
        dev.busy_time += duration;
        self.push(now + duration, EventKind::ExecutionFinished, job, device);
    }

    fn finish(&mut self, device: usize, job: usize, now: f64) {
        let fidelity = self.fleet[device].fidelity;
        let dev = &mut self.devices[device];
        dev.running = None;
        dev.circuits += 1;
        self.circuits += 1;
        self.circuit_fidelity_sum += fidelity;
        self.last_completion = self.last_completion.max(now);

        let spec = &self.jobs[job];
        let st = &mut self.state[job];
        st.fidelity_sum += fidelity;
        st.fidelity_count += 1;
        st.outstanding -= 1;
        if st.outstanding == 0 {
            let stops_at_checkpoint = self.policy == Policy::Tiered
                && spec.kind == JobKind::RuntimeSession
                && st.pruned
                && st.next_exec == self.tiered.exploration_len(spec.num_executions);
            if st.next_exec < spec.num_executions && !stops_at_checkpoint {
                let delay = spec.delays[st.next_exec - 1];
                self.push(now + delay, EventKind::SessionNextCircuit, job, device);
            } else {
                // summation rounding can nudge a best-device mean just above 1
                st.relative_fidelity =
                    Some((st.fidelity_sum / st.fidelity_count as f64 / self.max_fidelity).min(1.0));
            }
        }
        self.try_start(device, now);
    }

    fn metrics(&self) -> SimMetrics {
        let mean = |xs: Vec<f64>| {
            if xs.is_empty() {
                0.0
            } else {
                xs.iter().sum::<f64>() / xs.len() as f64
            }
        };
        let finished: Vec<(&JobSpec, &JobState)> = self
            .jobs
            .iter()
            .zip(&self.state)
            .filter(|(_, s)| s.relative_fidelity.is_some())
            .collect();
        let all_jobs = mean(
            finished
                .iter()
                .map(|(_, s)| s.relative_fidelity.unwrap())
                .collect(),
        );
        let sessions: Vec<f64> = finished
            .iter()
            .filter(|(j, s)| j.kind == JobKind::RuntimeSession && !s.pruned)
            .map(|(_, s)| s.relative_fidelity.unwrap())
            .collect();
        let is_session = |j: &JobSpec| j.kind == JobKind::RuntimeSession;
        let completion_time = self.last_completion;
        SimMetrics {
            num_circuits: self.circuits,
            completion_time,
            throughput: throughput(self.circuits, completion_time),
            mean_relative_fidelity: if sessions.is_empty() {
                all_jobs
            } else {
                mean(sessions)
            },
            mean_relative_fidelity_all_jobs: all_jobs,
            mean_relative_fidelity_circuits: if self.circuits == 0 {
                0.0
            } else {
                (self.circuit_fidelity_sum / self.circuits as f64 / self.max_fidelity).min(1.0)
            },
            per_device_utilization: self
                .devices
                .iter()
                .map(|d| {
                    if completion_time > 0.0 {
                        d.busy_time / completion_time
                    } else {
                        0.0
                    }
                })
                .collect(),
            per_device_circuits: self.devices.iter().map(|d| d.circuits).collect(),
            sessions_fine_tuned: self
                .jobs
                .iter()
                .zip(&self.state)
                .filter(|(j, s)| is_session(j) && s.phase == Phase::FineTune)
                .count(),
            sessions_pruned: self
                .jobs
                .iter()
                .zip(&self.state)
                .filter(|(j, s)| is_session(j) && s.pruned)
                .count(),
        }
    }
}

/// Queue-simulation sweep: fleet, workload shape and the grid to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub n_jobs: usize,
    /// Explicit fleet; when empty, `default_fleet(num_devices, fleet_seed)`.
    pub device: Vec<SimDevice>,
    pub num_devices: usize,
    pub fleet_seed: u64,
    pub workload: WorkloadConfig,
    pub tiered: TieredPolicyConfig,
    pub policies: Vec<Policy>,
    pub runtime_fractions: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            n_jobs: 1000,
            device: Vec::new(),
            num_devices: 10,
            fleet_seed: 0,
            workload: WorkloadConfig::default(),
            tiered: TieredPolicyConfig::default(),
            policies: Policy::ALL.to_vec(),
            runtime_fractions: (1..=9).map(|i| i as f64 / 10.0).collect(),
            seeds: vec![0],
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.fleet()?;
        Ok(s)
    }

    pub fn fleet(&self) -> Result<Vec<SimDevice>> {
        let fleet = if self.device.is_empty() {
            default_fleet(self.num_devices, self.fleet_seed)
        } else {
            self.device.clone()
        };
        if fleet.is_empty() {
            return Err(invalid("scenario has no devices"));
        }
        for d in &fleet {
            d.validate()?;
        }
        Ok(fleet)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub policy: Policy,
    pub runtime_fraction: f64,
    pub seed: u64,
    pub metrics: SimMetrics,
}

/// Every (runtime fraction, seed, policy) combination, in that nesting order.
/// The workload for a fraction and seed is shared by all policies.
pub fn run_sweep(scenario: &Scenario) -> Result<Vec<SweepRow>> {
    let fleet = scenario.fleet()?;
    let mut tasks = Vec::new();
    for &fraction in &scenario.runtime_fractions {
        for &seed in &scenario.seeds {
            let jobs = std::sync::Arc::new(generate_workload(
                scenario.n_jobs,
                fraction,
                &scenario.workload,
                seed,
            )?);
            for &policy in &scenario.policies {
                tasks.push((fraction, seed, policy, jobs.clone()));
            }
        }
    }
    exec::map(tasks, |(fraction, seed, policy, jobs)| {
        let metrics = run_sim_with(&jobs, &fleet, policy, &scenario.tiered, seed)?;
        Ok(SweepRow {
            policy,
            runtime_fraction: fraction,
            seed,
            metrics,
        })
    })
    .into_iter()
    .collect()
}
