use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qsim::DensityMatrix;

/// Largest Hamiltonian [`brute_force_eigenmin`] will diagonalize.
pub const MAX_EIGEN_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// One weighted Pauli string. Character `k` of the string acts on qubit `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub paulis: Vec<Pauli>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, paulis: &str) -> Result<Self> {
        let paulis = paulis
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(invalid(format!("unknown Pauli {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliTerm {
            coefficient,
            paulis,
        })
    }

    /// `(flip mask, sign mask, number of Y)`: `P|c⟩ = i^{#Y} (−1)^{|c & sign|} |c ^ flip⟩`.
    fn masks(&self) -> (usize, usize, u32) {
        let mut flip = 0;
        let mut sign = 0;
        let mut ys = 0;
        for (k, p) in self.paulis.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => flip |= 1 << k,
                Pauli::Y => {
                    flip |= 1 << k;
                    sign |= 1 << k;
                    ys += 1;
                }
                Pauli::Z => sign |= 1 << k,
            }
        }
        (flip, sign, ys)
    }

    /// `⟨flip(c)| P |c⟩` for every column `c`, paired with the row it lands on.
    fn column_action(&self, dim: usize) -> impl Iterator<Item = (usize, usize, Complex64)> {
        let (flip, sign, ys) = self.masks();
        let base = Complex64::i().powu(ys);
        (0..dim).map(move |c| {
            let phase = if (c & sign).count_ones() % 2 == 1 {
                -base
            } else {
                base
            };
            (c ^ flip, c, phase)
        })
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.paulis.iter().map(|p| format!("{p:?}")).collect();
        write!(f, "{} {}", self.coefficient, s)
    }
}

/// Real linear combination of Pauli strings on a fixed number of qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliHamiltonian {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliHamiltonian {
    pub fn new(terms: Vec<PauliTerm>) -> Result<Self> {
        let num_qubits = terms
            .first()
            .map(|t| t.paulis.len())
            .ok_or_else(|| invalid("Hamiltonian has no terms"))?;
        if num_qubits == 0 {
            return Err(invalid("Pauli strings must be non-empty"));
        }
        for t in &terms {
            if t.paulis.len() != num_qubits {
                return Err(Error::DimensionMismatch {
                    expected: num_qubits,
                    got: t.paulis.len(),
                });
            }
            if !t.coefficient.is_finite() {
                return Err(invalid(format!("non-finite coefficient in {t}")));
            }
        }
        Ok(PauliHamiltonian { num_qubits, terms })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Parses one `coefficient pauli_string` pair per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [coef, paulis] = fields.as_slice() else {
                return Err(err(format!(
                    "expected `coefficient pauli_string`, got {line:?}"
                )));
            };
            let coefficient: f64 = coef
                .parse()
                .map_err(|_| err(format!("bad coefficient {coef:?}")))?;
            terms.push(PauliTerm::new(coefficient, paulis).map_err(|e| err(e.to_string()))?);
        }
        Self::new(terms)
    }

    pub fn to_text(&self) -> String {
        self.terms.iter().map(|t| format!("{t}\n")).collect()
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.num_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for term in &self.terms {
            for (row, col, phase) in term.column_action(dim) {
                m[(row, col)] += phase * term.coefficient;
            }
        }
        m
    }
}

/// `Σ_k c_k Tr(ρ P_k)`.
pub fn pauli_expectation(state: &DensityMatrix, hamiltonian: &PauliHamiltonian) -> Result<f64> {
    if state.num_qubits() != hamiltonian.num_qubits {
        return Err(Error::DimensionMismatch {
            expected: hamiltonian.num_qubits,
            got: state.num_qubits(),
        });
    }
    let dim = state.dim();
    let mut total = 0.0;
    for term in &hamiltonian.terms {
        // Tr(ρP) = Σ_c ⟨c|ρ|P c⟩ ; P|c⟩ = phase·|row⟩
        let trace: Complex64 = term
            .column_action(dim)
            .map(|(row, col, phase)| state.get(col, row) * phase)
            .sum();
        total += term.coefficient * trace.re;
    }
    Ok(total)
}

/// Smallest eigenvalue of the dense Hamiltonian matrix.
pub fn brute_force_eigenmin(hamiltonian: &PauliHamiltonian) -> Result<f64> {
    if hamiltonian.num_qubits > MAX_EIGEN_QUBITS {
        return Err(Error::Capacity {
            what: "Hamiltonian width",
            got: hamiltonian.num_qubits,
            limit: MAX_EIGEN_QUBITS,
        });
    }
    let eigenvalues = hamiltonian.to_matrix().symmetric_eigenvalues();
    Ok(eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}
