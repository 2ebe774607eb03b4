//! Variational problem definitions and measurement post-processing.
//!
//! Max-cut energies are negated cut sizes so every problem is a minimization.

mod ansatz;
mod hamiltonian;
mod maxcut;

pub use ansatz::{build_qaoa, build_twolocal, qaoa_param_count, twolocal_param_count};
pub use hamiltonian::{
    brute_force_eigenmin, pauli_expectation, Pauli, PauliHamiltonian, PauliTerm, MAX_EIGEN_QUBITS,
};
pub use maxcut::{
    brute_force_maxcut, erdos_renyi, maxcut_expectation, MaxCutProblem, MAX_BRUTE_FORCE_NODES,
};

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{self, CircuitStats, NoiseModel, OutcomeDistribution};

/// Circuit angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn zeros(len: usize) -> Self {
        ParameterVector(vec![0.0; len])
    }
}

impl Deref for ParameterVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        ParameterVector(v)
    }
}

/// Objective value plus the entropy of the measured distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub expectation: f64,
    /// bits
    pub entropy: f64,
    pub distribution: OutcomeDistribution,
}

/// Shannon entropy in bits, with `0·log 0 = 0`.
pub fn shannon_entropy(dist: &OutcomeDistribution) -> f64 {
    let h: f64 = dist
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// `e_optimized / e_ground_truth`.
pub fn approximation_ratio(e_optimized: f64, e_ground_truth: f64) -> Result<f64> {
    if e_ground_truth == 0.0 {
        return Err(Error::Degenerate("ground-truth energy is zero".into()));
    }
    Ok(e_optimized / e_ground_truth)
}

/// A parameterized circuit plus the observable being minimized.
pub trait VqaProblem: Sync {
    fn num_params(&self) -> usize;

    /// Gate/measurement counts of the ansatz; independent of the angles.
    fn circuit_stats(&self) -> CircuitStats;

    /// Exact minimum of the objective, the denominator of the approximation ratio.
    fn ground_truth(&self) -> f64;

    fn evaluate(&self, params: &ParameterVector, noise: &NoiseModel) -> Result<EvaluationResult>;
}

/// `p`-layer QAOA for unweighted max-cut.
#[derive(Clone, Debug)]
pub struct QaoaMaxCut {
    problem: MaxCutProblem,
    layers: usize,
    ground_truth: f64,
}

impl QaoaMaxCut {
    pub fn new(problem: MaxCutProblem, layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(crate::error::invalid("QAOA needs at least one layer"));
        }
        let ground_truth = brute_force_maxcut(&problem)?;
        Ok(QaoaMaxCut {
            problem,
            layers,
            ground_truth,
        })
    }

    pub fn problem(&self) -> &MaxCutProblem {
        &self.problem
    }

    pub fn layers(&self) -> usize {
        self.layers
    }
}

impl VqaProblem for QaoaMaxCut {
    fn num_params(&self) -> usize {
        qaoa_param_count(self.layers)
    }

    fn circuit_stats(&self) -> CircuitStats {
        build_qaoa(
            &self.problem,
            &ParameterVector::zeros(self.num_params()),
            self.layers,
        )
        .expect("zero parameters have the right length")
        .stats()
    }

    fn ground_truth(&self) -> f64 {
        self.ground_truth
    }

    fn evaluate(&self, params: &ParameterVector, noise: &NoiseModel) -> Result<EvaluationResult> {
        let circuit = build_qaoa(&self.problem, params, self.layers)?;
        let distribution = qsim::simulate(&circuit, noise)?;
        Ok(EvaluationResult {
            expectation: maxcut_expectation(&distribution, &self.problem)?,
            entropy: shannon_entropy(&distribution),
            distribution,
        })
    }
}

/// Two-local RY/CX ansatz minimizing a Pauli Hamiltonian. The energy is the
/// exact trace against the noisy state; readout error only affects the
/// reported distribution and its entropy.
#[derive(Clone, Debug)]
pub struct VqeTwoLocal {
    hamiltonian: PauliHamiltonian,
    reps: usize,
    ground_truth: f64,
}

impl VqeTwoLocal {
    pub fn new(hamiltonian: PauliHamiltonian, reps: usize) -> Result<Self> {
        if reps == 0 {
            return Err(crate::error::invalid(
                "two-local ansatz needs at least one repetition",
            ));
        }
        let ground_truth = brute_force_eigenmin(&hamiltonian)?;
        Ok(VqeTwoLocal {
            hamiltonian,
            reps,
            ground_truth,
        })
    }

    pub fn hamiltonian(&self) -> &PauliHamiltonian {
        &self.hamiltonian
    }
}

impl VqaProblem for VqeTwoLocal {
    fn num_params(&self) -> usize {
        twolocal_param_count(self.hamiltonian.num_qubits(), self.reps)
    }

    fn circuit_stats(&self) -> CircuitStats {
        build_twolocal(
            self.hamiltonian.num_qubits(),
            &ParameterVector::zeros(self.num_params()),
            self.reps,
        )
        .expect("zero parameters have the right length")
        .stats()
    }

    fn ground_truth(&self) -> f64 {
        self.ground_truth
    }

    fn evaluate(&self, params: &ParameterVector, noise: &NoiseModel) -> Result<EvaluationResult> {
        let circuit = build_twolocal(self.hamiltonian.num_qubits(), params, self.reps)?;
        let rho = qsim::evolve(&circuit, noise)?;
        let distribution = qsim::measure(&rho, noise.readout);
        Ok(EvaluationResult {
            expectation: pauli_expectation(&rho, &self.hamiltonian)?,
            entropy: shannon_entropy(&distribution),
            distribution,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        let point = OutcomeDistribution::from_bitstrings(1, [("0", 1.0)]).unwrap();
        assert_eq!(shannon_entropy(&point), 0.0);
        for n in 1..6 {
            assert!((shannon_entropy(&OutcomeDistribution::uniform(n)) - n as f64).abs() < 1e-12);
        }
        let d = OutcomeDistribution::from_probs(vec![0.5, 0.25, 0.25, 0.0]).unwrap();
        assert!((shannon_entropy(&d) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn approximation_ratio_examples() {
        assert_eq!(approximation_ratio(-6.89, -6.89).unwrap(), 1.0);
        assert!((approximation_ratio(-3.445, -6.89).unwrap() - 0.5).abs() < 1e-15);
        let triangle = MaxCutProblem::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let e = maxcut_expectation(&OutcomeDistribution::uniform(3), &triangle).unwrap();
        assert!((e + 1.5).abs() < 1e-12);
        let ratio = approximation_ratio(e, brute_force_maxcut(&triangle).unwrap()).unwrap();
        assert!((ratio - 0.75).abs() < 1e-12);
        assert!(matches!(
            approximation_ratio(-1.0, 0.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn optimal_point_mass_has_unit_ratio() {
        let triangle = MaxCutProblem::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let d = OutcomeDistribution::from_bitstrings(3, [("100", 1.0)]).unwrap();
        let e = maxcut_expectation(&d, &triangle).unwrap();
        assert_eq!(
            approximation_ratio(e, brute_force_maxcut(&triangle).unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn qaoa_with_zero_angles_is_uniform() {
        let g = erdos_renyi(5, 0.5, 3).unwrap();
        let qaoa = QaoaMaxCut::new(g, 2).unwrap();
        let r = qaoa
            .evaluate(&ParameterVector::zeros(4), &NoiseModel::noiseless())
            .unwrap();
        for p in r.distribution.probs() {
            assert!((p - 1.0 / 32.0).abs() < 1e-12);
        }
        assert!((r.entropy - 5.0).abs() < 1e-9);
    }

    #[test]
    fn vqe_energy_is_bounded_by_ground_truth() {
        let h = PauliHamiltonian::parse("0.5 ZZ\n0.5 XI\n-0.2 IZ").unwrap();
        let vqe = VqeTwoLocal::new(h, 1).unwrap();
        for k in 0..10 {
            let params = ParameterVector((0..4).map(|i| (i * 7 + k) as f64 * 0.37).collect());
            let r = vqe
                .evaluate(&params, &NoiseModel::with_rates(0.01, 0.02, 0.03))
                .unwrap();
            assert!(r.expectation >= vqe.ground_truth() - 1e-12);
        }
    }
}
