//! Exact density-matrix simulation under depolarizing gate noise and
//! symmetric readout error.
//!
//! Every gate is followed by a depolarizing channel on the qubits it acted
//! on (`p1` for one-qubit gates, `p2` for two-qubit gates). The final
//! computational-basis diagonal is pushed through an independent bit-flip
//! channel per qubit. Evolution is deterministic; nothing here draws random
//! numbers except [`sample`].

mod circuit;
mod density;
mod distribution;
mod noise;

pub use circuit::{circuit_stats, Circuit, CircuitStats, Gate, GateKind, MAX_QUBITS};
pub use density::DensityMatrix;
pub use distribution::{bitstring_to_index, index_to_bitstring, sample, OutcomeDistribution};
pub use noise::NoiseModel;

use crate::error::Result;

/// Evolves `|0…0⟩` through the noisy circuit and returns the final state.
pub fn evolve(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix> {
    circuit.validate()?;
    noise.validate()?;
    let mut rho = DensityMatrix::zero_state(circuit.num_qubits);
    let mut scratch = Vec::new();
    for gate in &circuit.gates {
        rho.apply_gate(gate, &mut scratch);
        let p = if gate.is_two_qubit() {
            noise.p2
        } else {
            noise.p1
        };
        rho.depolarize(&gate.qubits(), p);
    }
    Ok(rho)
}

/// Computational-basis outcome probabilities of `rho` after per-qubit
/// symmetric readout flips with probability `readout`.
pub fn measure(rho: &DensityMatrix, readout: f64) -> OutcomeDistribution {
    let mut probs = rho.diagonal();
    if readout > 0.0 {
        let keep = 1.0 - readout;
        for q in 0..rho.num_qubits() {
            let bit = 1 << q;
            for i in 0..probs.len() {
                if i & bit == 0 {
                    let (a, b) = (probs[i], probs[i | bit]);
                    probs[i] = keep * a + readout * b;
                    probs[i | bit] = readout * a + keep * b;
                }
            }
        }
    }
    OutcomeDistribution::from_diagonal(probs)
}

/// Runs the circuit under `noise` and returns the measured outcome distribution.
pub fn simulate(circuit: &Circuit, noise: &NoiseModel) -> Result<OutcomeDistribution> {
    let rho = evolve(circuit, noise)?;
    Ok(measure(&rho, noise.readout))
}
