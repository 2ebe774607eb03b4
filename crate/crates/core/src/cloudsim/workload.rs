use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JobKind {
    Independent,
    RuntimeSession,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub job_id: usize,
    pub kind: JobKind,
    pub num_executions: usize,
    /// `delays[j]` separates the end of execution `j` from the submission of
    /// execution `j + 1`; one entry fewer than `num_executions`.
    pub delays: Vec<f64>,
    pub arrival_time: f64,
}

impl JobSpec {
    pub fn independent(job_id: usize, arrival_time: f64) -> Self {
        JobSpec {
            job_id,
            kind: JobKind::Independent,
            num_executions: 1,
            delays: Vec::new(),
            arrival_time,
        }
    }

    pub fn session(job_id: usize, arrival_time: f64, delays: Vec<f64>) -> Self {
        JobSpec {
            job_id,
            kind: JobKind::RuntimeSession,
            num_executions: delays.len() + 1,
            delays,
            arrival_time,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_count = match self.kind {
            JobKind::Independent => self.num_executions == 1,
            JobKind::RuntimeSession => self.num_executions > 1,
        };
        if !ok_count || self.delays.len() + 1 != self.num_executions {
            return Err(invalid(format!(
                "job {}: inconsistent execution count",
                self.job_id
            )));
        }
        if !(self.arrival_time >= 0.0 && self.arrival_time.is_finite())
            || self.delays.iter().any(|d| !(*d >= 0.0 && d.is_finite()))
        {
            return Err(invalid(format!(
                "job {}: times must be finite and non-negative",
                self.job_id
            )));
        }
        Ok(())
    }
}

/// Shape of the synthetic workload. Session lengths are inclusive bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadConfig {
    pub horizon: f64,
    pub session_length_min: usize,
    pub session_length_max: usize,
    pub delay_min: f64,
    pub delay_max: f64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            horizon: 1000.0,
            session_length_min: 10,
            session_length_max: 30,
            delay_min: 0.0,
            delay_max: 5.0,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        if !(2 <= self.session_length_min && self.session_length_min <= self.session_length_max) {
            return Err(invalid("session lengths need 2 <= min <= max"));
        }
        if !(0.0 <= self.delay_min
            && self.delay_min <= self.delay_max
            && self.delay_max.is_finite())
        {
            return Err(invalid("delays need 0 <= min <= max"));
        }
        Ok(())
    }
}

/// `n_jobs` jobs of which `⌊runtime_fraction·n_jobs⌋` are runtime sessions,
/// arriving uniformly over the horizon. Job ids follow arrival order.
pub fn generate_workload(
    n_jobs: usize,
    runtime_fraction: f64,
    config: &WorkloadConfig,
    seed: u64,
) -> Result<Vec<JobSpec>> {
    if n_jobs == 0 {
        return Err(invalid("workload needs at least one job"));
    }
    if !(0.1..=0.9).contains(&runtime_fraction) {
        return Err(invalid(format!(
            "runtime fraction {runtime_fraction} outside [0.1, 0.9]"
        )));
    }
    config.validate()?;
    // the epsilon keeps e.g. 0.3·1000 from rounding down to 299
    let sessions = ((runtime_fraction * n_jobs as f64) + 1e-9).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kinds: Vec<JobKind> = (0..n_jobs)
        .map(|i| {
            if i < sessions {
                JobKind::RuntimeSession
            } else {
                JobKind::Independent
            }
        })
        .collect();
    kinds.shuffle(&mut rng);

    let mut jobs: Vec<JobSpec> = kinds
        .into_iter()
        .map(|kind| {
            let arrival = rng.gen_range(0.0..config.horizon);
            match kind {
                JobKind::Independent => JobSpec::independent(0, arrival),
                JobKind::RuntimeSession => {
                    let len = rng.gen_range(config.session_length_min..=config.session_length_max);
                    let delays = (1..len)
                        .map(|_| uniform(&mut rng, config.delay_min, config.delay_max))
                        .collect();
                    JobSpec::session(0, arrival, delays)
                }
            }
        })
        .collect();
    jobs.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
    for (i, job) in jobs.iter_mut().enumerate() {
        job.job_id = i;
    }
    Ok(jobs)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}
