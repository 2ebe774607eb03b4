use crate::error::{invalid, Result};
use crate::qsim::{Circuit, Gate};

use super::{MaxCutProblem, ParameterVector};

pub fn qaoa_param_count(layers: usize) -> usize {
    2 * layers
}

pub fn twolocal_param_count(num_qubits: usize, reps: usize) -> usize {
    num_qubits * (reps + 1)
}

/// QAOA circuit with parameters laid out as `[γ₁, β₁, γ₂, β₂, …]`.
///
/// Emits H on every qubit, then per layer `k` one `RZZ(2γ_k)` per edge (in
/// edge order) followed by `RX(2β_k)` on every qubit. Measures all qubits.
pub fn build_qaoa(
    problem: &MaxCutProblem,
    params: &ParameterVector,
    layers: usize,
) -> Result<Circuit> {
    if layers == 0 {
        return Err(invalid("QAOA needs at least one layer"));
    }
    if params.len() != qaoa_param_count(layers) {
        return Err(invalid(format!(
            "{layers}-layer QAOA takes {} parameters, got {}",
            2 * layers,
            params.len()
        )));
    }
    let n = problem.num_nodes();
    let mut circuit = Circuit::new(n);
    for q in 0..n {
        circuit.push(Gate::H(q));
    }
    for layer in params.chunks_exact(2) {
        let (gamma, beta) = (layer[0], layer[1]);
        for &(a, b) in problem.edges() {
            circuit.push(Gate::Rzz(a, b, 2.0 * gamma));
        }
        for q in 0..n {
            circuit.push(Gate::Rx(q, 2.0 * beta));
        }
    }
    Ok(circuit.measured())
}

/// Hardware-efficient ansatz: an RY layer, then `reps` rounds of a linear
/// CX chain `(0,1), (1,2), …` followed by another RY layer. Parameters are
/// consumed layer by layer, qubit 0 first. No measurement.
pub fn build_twolocal(num_qubits: usize, params: &ParameterVector, reps: usize) -> Result<Circuit> {
    if num_qubits == 0 || reps == 0 {
        return Err(invalid(
            "two-local ansatz needs at least one qubit and one repetition",
        ));
    }
    let expected = twolocal_param_count(num_qubits, reps);
    if params.len() != expected {
        return Err(invalid(format!(
            "two-local ansatz takes {expected} parameters, got {}",
            params.len()
        )));
    }
    let mut circuit = Circuit::new(num_qubits);
    let mut angles = params.iter().copied();
    let mut rotation_layer = |circuit: &mut Circuit| {
        for q in 0..num_qubits {
            circuit.push(Gate::Ry(q, angles.next().expect("length checked above")));
        }
    };
    rotation_layer(&mut circuit);
    for _ in 0..reps {
        for q in 0..num_qubits.saturating_sub(1) {
            circuit.push(Gate::Cx(q, q + 1));
        }
        rotation_layer(&mut circuit);
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{CircuitStats, GateKind};
    use crate::vqa::erdos_renyi;

    fn count(c: &Circuit, kind: GateKind) -> usize {
        c.gates.iter().filter(|g| g.kind() == kind).count()
    }

    #[test]
    fn triangle_single_layer_counts() {
        let triangle = MaxCutProblem::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let c = build_qaoa(&triangle, &ParameterVector::zeros(2), 1).unwrap();
        let s = c.stats();
        assert_eq!(
            (s.one_qubit_gates, s.two_qubit_gates, s.measurements),
            (6, 3, 3)
        );
    }

    #[test]
    fn seven_node_single_layer_matches_hand_count() {
        // hand count of the emission rule: n H + |E| RZZ + n RX; depth from
        // greedy packing of the RZZ block (edge coloring in emission order)
        let g = erdos_renyi(7, 0.5, 2024).unwrap();
        let c = build_qaoa(&g, &ParameterVector(vec![0.3, 0.2]), 1).unwrap();
        let s = c.stats();
        assert_eq!(s.one_qubit_gates, 14);
        assert_eq!(s.two_qubit_gates, g.edges().len());
        assert_eq!(s.measurements, 7);
        let mut level = [1usize; 7];
        for &(a, b) in g.edges() {
            let l = level[a].max(level[b]) + 1;
            level[a] = l;
            level[b] = l;
        }
        let expected_depth = level.iter().max().unwrap() + 1;
        assert_eq!(s.depth, expected_depth);
        assert_eq!(count(&c, GateKind::H), 7);
        assert_eq!(count(&c, GateKind::Rx), 7);
    }

    #[test]
    fn three_layer_parameter_count() {
        let g = erdos_renyi(7, 0.5, 1).unwrap();
        assert_eq!(qaoa_param_count(3), 6);
        assert!(build_qaoa(&g, &ParameterVector::zeros(6), 3).is_ok());
        assert!(build_qaoa(&g, &ParameterVector::zeros(5), 3).is_err());
        assert!(build_qaoa(&g, &ParameterVector::zeros(0), 0).is_err());
    }

    #[test]
    fn twolocal_shapes() {
        let c = build_twolocal(4, &ParameterVector::zeros(8), 1).unwrap();
        assert_eq!(count(&c, GateKind::Cx), 3);
        assert_eq!(count(&c, GateKind::Ry), 8);
        assert!(!c.measure_all);

        let c = build_twolocal(1, &ParameterVector::zeros(2), 1).unwrap();
        assert_eq!(
            c.stats(),
            CircuitStats {
                depth: 2,
                one_qubit_gates: 2,
                two_qubit_gates: 0,
                measurements: 0
            }
        );

        assert_eq!(twolocal_param_count(4, 2), 12);
        assert!(build_twolocal(4, &ParameterVector::zeros(12), 2).is_ok());
        assert!(build_twolocal(4, &ParameterVector::zeros(8), 2).is_err());
    }
}
