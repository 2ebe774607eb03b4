use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest register the density-matrix simulator accepts.
pub const MAX_QUBITS: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    Rx,
    Ry,
    Rz,
    Cx,
    Rzz,
}

/// A gate of the simulator's native set. Angles are radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    /// `Cx(control, target)`
    Cx(usize, usize),
    Rzz(usize, usize, f64),
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::H(_) => GateKind::H,
            Gate::Rx(..) => GateKind::Rx,
            Gate::Ry(..) => GateKind::Ry,
            Gate::Rz(..) => GateKind::Rz,
            Gate::Cx(..) => GateKind::Cx,
            Gate::Rzz(..) => GateKind::Rzz,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => vec![q],
            Gate::Cx(a, b) | Gate::Rzz(a, b, _) => vec![a, b],
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(_, t) | Gate::Ry(_, t) | Gate::Rz(_, t) | Gate::Rzz(_, _, t) => Some(t),
            Gate::H(_) | Gate::Cx(..) => None,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cx(..) | Gate::Rzz(..))
    }

    fn validate(&self, width: usize) -> Result<()> {
        let qubits = self.qubits();
        if let Some(&q) = qubits.iter().find(|&&q| q >= width) {
            return Err(invalid(format!(
                "{self:?}: qubit {q} outside register of {width}"
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(invalid(format!("{self:?}: repeated qubit")));
        }
        if let Some(t) = self.angle() {
            if !t.is_finite() {
                return Err(invalid(format!("{self:?}: non-finite angle")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub measure_all: bool,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
            measure_all: false,
        }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn measured(mut self) -> Self {
        self.measure_all = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(invalid("circuit must have at least one qubit"));
        }
        if self.num_qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                what: "circuit width",
                got: self.num_qubits,
                limit: MAX_QUBITS,
            });
        }
        self.gates
            .iter()
            .try_for_each(|g| g.validate(self.num_qubits))
    }

    /// Depth and gate counts. Depth packs gates greedily into layers of
    /// disjoint qubits; measurements do not add a layer.
    pub fn stats(&self) -> CircuitStats {
        let mut level = vec![0usize; self.num_qubits];
        let mut stats = CircuitStats::default();
        for gate in &self.gates {
            let qubits = gate.qubits();
            let layer = qubits.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for &q in &qubits {
                level[q] = layer;
            }
            if gate.is_two_qubit() {
                stats.two_qubit_gates += 1;
            } else {
                stats.one_qubit_gates += 1;
            }
        }
        stats.depth = level.into_iter().max().unwrap_or(0);
        stats.measurements = if self.measure_all { self.num_qubits } else { 0 };
        stats
    }
}

/// Structural counts consumed by the fidelity estimator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub depth: usize,
    pub one_qubit_gates: usize,
    pub two_qubit_gates: usize,
    pub measurements: usize,
}

pub fn circuit_stats(circuit: &Circuit) -> CircuitStats {
    circuit.stats()
}
