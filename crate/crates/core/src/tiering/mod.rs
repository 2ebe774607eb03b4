//! Fidelity-tiered scheduling of variational restarts.
//!
//! Devices are ranked by an analytic success-probability estimate. Restarts
//! explore on the cheapest eligible device, are pruned at a checkpoint, and
//! hand off tier by tier towards the highest-fidelity device for fine-tuning.

mod convergence;
mod orchestrator;

pub use convergence::{
    check_convergence, prune_restarts, should_advance_tier, Convergence, ConvergenceConfig,
};
pub use orchestrator::{run_multirestart, run_single_restart, MultiRestartResult, RestartRecord};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qsim::{CircuitStats, NoiseModel};

/// Default minimum estimated success probability for a device to be used.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// Default fraction of `max_iters` after which restarts are pruned.
pub const DEFAULT_CHECKPOINT_FRACTION: f64 = 0.4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub id: String,
    #[serde(flatten)]
    pub noise: NoiseModel,
    /// Relative fidelity used by the queue simulator.
    #[serde(default = "one")]
    pub display_fidelity: f64,
    /// Queue length proxy.
    #[serde(default)]
    pub pending_load: u64,
}

fn one() -> f64 {
    1.0
}

impl DeviceProfile {
    pub fn new(id: impl Into<String>, noise: NoiseModel) -> Self {
        DeviceProfile {
            id: id.into(),
            noise,
            display_fidelity: 1.0,
            pending_load: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(invalid("device id is empty"));
        }
        if !(self.display_fidelity > 0.0 && self.display_fidelity <= 1.0) {
            return Err(invalid(format!(
                "device {}: display_fidelity {} outside (0, 1]",
                self.id, self.display_fidelity
            )));
        }
        self.noise
            .validate()
            .map_err(|e| invalid(format!("device {}: {e}", self.id)))
    }
}

#[derive(Deserialize)]
struct FleetFile {
    device: Vec<DeviceProfile>,
}

/// Parses a TOML fleet: one `[[device]]` table per device.
pub fn parse_fleet(text: &str) -> Result<Vec<DeviceProfile>> {
    let file: FleetFile = toml::from_str(text)?;
    validate_fleet(&file.device)?;
    Ok(file.device)
}

fn validate_fleet(fleet: &[DeviceProfile]) -> Result<()> {
    if fleet.is_empty() {
        return Err(invalid("fleet is empty"));
    }
    let mut seen = BTreeSet::new();
    for d in fleet {
        d.validate()?;
        if !seen.insert(d.id.as_str()) {
            return Err(invalid(format!("duplicate device id {:?}", d.id)));
        }
    }
    Ok(())
}

/// Estimated probability that one shot of a circuit with `stats` runs
/// error-free on `device`:
///
/// `exp(−CD·(t_g1 + t_g2)/2 / (T1·T2)) · (1−p1)^G1 · (1−p2)^G2 · (1−readout)^M`
///
/// The decoherence term divides by the product `T1·T2` as written in the
/// original estimator, so its value depends on the time unit. Times are in
/// microseconds throughout this crate.
pub fn estimate_p_correct(stats: &CircuitStats, device: &DeviceProfile) -> Result<f64> {
    device.validate()?;
    let n = &device.noise;
    let mean_gate_time = (n.t_g1 + n.t_g2) / 2.0;
    let decoherence = (-(stats.depth as f64) * mean_gate_time / (n.t1 * n.t2)).exp();
    Ok(decoherence
        * (1.0 - n.p1).powi(stats.one_qubit_gates as i32)
        * (1.0 - n.p2).powi(stats.two_qubit_gates as i32)
        * (1.0 - n.readout).powi(stats.measurements as i32))
}

/// Devices whose estimate reaches `threshold`, lowest estimate first
/// (ties by id).
pub fn filter_devices(
    stats: &CircuitStats,
    fleet: &[DeviceProfile],
    threshold: f64,
) -> Result<Vec<DeviceProfile>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid(format!("threshold {threshold} outside (0, 1)")));
    }
    validate_fleet(fleet)?;
    let mut eligible = Vec::new();
    for d in fleet {
        let p = estimate_p_correct(stats, d)?;
        if p >= threshold {
            eligible.push((p, d.clone()));
        }
    }
    if eligible.is_empty() {
        return Err(Error::NoEligibleDevice { threshold });
    }
    eligible.sort_by(|(pa, a), (pb, b)| pa.total_cmp(pb).then_with(|| a.id.cmp(&b.id)));
    Ok(eligible.into_iter().map(|(_, d)| d).collect())
}

/// Ordered device tiers plus the pruning checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TierPlan {
    pub tiers: Vec<DeviceProfile>,
    pub checkpoint_fraction: f64,
}

impl TierPlan {
    /// Eligible devices of `fleet` for a circuit with `stats`, in tier order.
    pub fn new(stats: &CircuitStats, fleet: &[DeviceProfile], threshold: f64) -> Result<Self> {
        Ok(TierPlan {
            tiers: filter_devices(stats, fleet, threshold)?,
            checkpoint_fraction: DEFAULT_CHECKPOINT_FRACTION,
        })
    }

    /// A one-device plan, used for single-device baselines.
    pub fn single(device: DeviceProfile) -> Self {
        TierPlan {
            tiers: vec![device],
            checkpoint_fraction: DEFAULT_CHECKPOINT_FRACTION,
        }
    }

    pub fn with_checkpoint_fraction(mut self, fraction: f64) -> Self {
        self.checkpoint_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_fleet(&self.tiers)?;
        if !(self.checkpoint_fraction > 0.0 && self.checkpoint_fraction < 1.0) {
            return Err(invalid(format!(
                "checkpoint fraction {} outside (0, 1)",
                self.checkpoint_fraction
            )));
        }
        Ok(())
    }

    /// Iteration count at which tier-0 exploration stops, at least 1.
    pub fn checkpoint(&self, max_iters: usize) -> usize {
        ((self.checkpoint_fraction * max_iters as f64).floor() as usize).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stats(depth: usize, g1: usize, g2: usize, m: usize) -> CircuitStats {
        CircuitStats {
            depth,
            one_qubit_gates: g1,
            two_qubit_gates: g2,
            measurements: m,
        }
    }

    fn device(id: &str, p1: f64, p2: f64, readout: f64) -> DeviceProfile {
        DeviceProfile::new(id, NoiseModel::with_rates(p1, p2, readout))
    }

    #[test]
    fn identity_case_is_one() {
        let mut d = device("d", 0.0, 0.0, 0.0);
        d.noise.t_g1 = 0.0;
        d.noise.t_g2 = 0.0;
        assert_eq!(estimate_p_correct(&stats(12, 30, 9, 7), &d).unwrap(), 1.0);
    }

    #[test]
    fn single_qubit_errors_only() {
        let d = device("d", 0.01, 0.0, 0.0);
        let p = estimate_p_correct(&stats(0, 10, 0, 0), &d).unwrap();
        assert!((p - 0.99f64.powi(10)).abs() < 1e-12);
        assert!((p - 0.90438).abs() < 1e-5);
    }

    #[test]
    fn all_terms_together() {
        let mut d = device("d", 0.001, 0.01, 0.02);
        d.noise.t_g1 = 1e-7;
        d.noise.t_g2 = 1e-7;
        d.noise.t1 = 1e-4;
        d.noise.t2 = 1e-4;
        // hand evaluation: exponent 2·1e-7 / 1e-8 = 20
        let by_hand = (-20.0f64).exp() * 0.999 * 0.999 * 0.99 * 0.98 * 0.98;
        let p = estimate_p_correct(&stats(2, 2, 1, 2), &d).unwrap();
        assert!((p - by_hand).abs() < 1e-18);
    }

    #[test]
    fn non_positive_coherence_is_rejected() {
        let mut d = device("d", 0.0, 0.0, 0.0);
        d.noise.t2 = 0.0;
        assert!(matches!(
            estimate_p_correct(&stats(1, 1, 0, 0), &d),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn filter_orders_by_estimate() {
        // three devices whose estimates for 10 one-qubit gates straddle the threshold
        let s = stats(0, 10, 0, 0);
        let fleet = vec![
            device("a", 0.26, 0.0, 0.0),
            device("b", 0.11, 0.0, 0.0),
            device("c", 0.05, 0.0, 0.0),
        ];
        let ests: Vec<f64> = fleet
            .iter()
            .map(|d| estimate_p_correct(&s, d).unwrap())
            .collect();
        assert!(ests[0] < 0.1 && ests[1] > 0.1 && ests[2] > ests[1]);
        let ids: Vec<String> = filter_devices(&s, &fleet, 0.1)
            .unwrap()
            .into_iter()
            .map(|d| d.id)
            .collect();
        assert_eq!(ids, ["b", "c"]);
    }

    #[test]
    fn filter_errors() {
        let s = stats(0, 10, 0, 0);
        let bad = vec![device("a", 0.5, 0.0, 0.0)];
        assert!(matches!(
            filter_devices(&s, &bad, 0.1),
            Err(Error::NoEligibleDevice { .. })
        ));
        let single = filter_devices(&s, &[device("x", 0.0, 0.0, 0.0)], 0.1).unwrap();
        assert_eq!(single.len(), 1);
        let dup = vec![device("a", 0.0, 0.0, 0.0), device("a", 0.0, 0.0, 0.0)];
        assert!(filter_devices(&s, &dup, 0.1).is_err());
        assert!(filter_devices(&s, &single, 1.0).is_err());
    }

    #[test]
    fn fleet_file_round_trip() {
        let text = r#"
            [[device]]
            id = "low"
            p1 = 0.002
            p2 = 0.02
            readout = 0.045

            [[device]]
            id = "high"
            p1 = 0.0011
            p2 = 0.011
            readout = 0.012
            t1 = 120.0
            display_fidelity = 0.9
            pending_load = 3
        "#;
        let fleet = parse_fleet(text).unwrap();
        assert_eq!(fleet.len(), 2);
        assert_eq!(fleet[0].noise.t1, NoiseModel::noiseless().t1);
        assert_eq!(fleet[1].noise.t1, 120.0);
        assert_eq!(fleet[1].pending_load, 3);
        assert!(parse_fleet("[[device]]\nid = \"x\"\np2 = 3.0\n").is_err());
    }

    #[test]
    fn checkpoint_iteration() {
        let plan = TierPlan::single(device("d", 0.0, 0.0, 0.0));
        assert_eq!(plan.checkpoint(100), 40);
        assert_eq!(plan.checkpoint(1), 1);
        assert!(plan
            .clone()
            .with_checkpoint_fraction(1.0)
            .validate()
            .is_err());
    }

    fn arb_device() -> impl Strategy<Value = DeviceProfile> {
        (
            0.0..0.1f64,
            0.0..0.2f64,
            0.0..0.2f64,
            0.0..1.0f64,
            0.0..2.0f64,
            10.0..200.0f64,
            10.0..200.0f64,
        )
            .prop_map(|(p1, p2, readout, t_g1, t_g2, t1, t2)| {
                DeviceProfile::new(
                    "d",
                    NoiseModel {
                        p1,
                        p2,
                        readout,
                        t_g1,
                        t_g2,
                        t1,
                        t2,
                    },
                )
            })
    }

    fn arb_stats() -> impl Strategy<Value = CircuitStats> {
        (0usize..200, 0usize..200, 0usize..200, 0usize..20)
            .prop_map(|(d, g1, g2, m)| stats(d, g1, g2, m))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn estimate_is_monotone(d in arb_device(), s in arb_stats(), bump in 0.0..0.05f64, extra in 1usize..10) {
            let base = estimate_p_correct(&s, &d).unwrap();
            prop_assert!(base > 0.0 && base <= 1.0);
            let worse_noise = [
                NoiseModel { p1: d.noise.p1 + bump, ..d.noise },
                NoiseModel { p2: d.noise.p2 + bump, ..d.noise },
                NoiseModel { readout: d.noise.readout + bump, ..d.noise },
            ];
            for noise in worse_noise {
                let worse = DeviceProfile { noise, ..d.clone() };
                prop_assert!(estimate_p_correct(&s, &worse).unwrap() <= base);
            }
            let bigger = [
                CircuitStats { depth: s.depth + extra, ..s },
                CircuitStats { one_qubit_gates: s.one_qubit_gates + extra, ..s },
                CircuitStats { two_qubit_gates: s.two_qubit_gates + extra, ..s },
                CircuitStats { measurements: s.measurements + extra, ..s },
            ];
            for b in bigger {
                prop_assert!(estimate_p_correct(&b, &d).unwrap() <= base);
            }
        }

        #[test]
        fn filter_is_a_sorted_restriction(devs in prop::collection::vec(arb_device(), 1..8), s in arb_stats()) {
            let fleet: Vec<DeviceProfile> = devs
                .into_iter()
                .enumerate()
                .map(|(i, d)| DeviceProfile { id: format!("dev{i}"), ..d })
                .collect();
            let eligible: Vec<&DeviceProfile> =
                fleet.iter().filter(|d| estimate_p_correct(&s, d).unwrap() >= DEFAULT_THRESHOLD).collect();
            match filter_devices(&s, &fleet, DEFAULT_THRESHOLD) {
                Ok(out) => {
                    prop_assert_eq!(out.len(), eligible.len());
                    for d in &out {
                        prop_assert!(eligible.iter().any(|e| e.id == d.id));
                    }
                    for w in out.windows(2) {
                        let (a, b) = (estimate_p_correct(&s, &w[0]).unwrap(), estimate_p_correct(&s, &w[1]).unwrap());
                        prop_assert!(a < b || (a == b && w[0].id < w[1].id));
                    }
                }
                Err(Error::NoEligibleDevice { .. }) => prop_assert!(eligible.is_empty()),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }

        #[test]
        fn duplicate_estimates_sort_by_id(d in arb_device(), s in arb_stats()) {
            let fleet: Vec<DeviceProfile> =
                ["c", "a", "b"].iter().map(|id| DeviceProfile { id: id.to_string(), ..d.clone() }).collect();
            if let Ok(out) = filter_devices(&s, &fleet, DEFAULT_THRESHOLD) {
                let ids: Vec<&str> = out.iter().map(|d| d.id.as_str()).collect();
                prop_assert_eq!(ids, vec!["a", "b", "c"]);
            }
        }
    }
}
