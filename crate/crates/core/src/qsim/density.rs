//! Dense density-matrix state and the gate/channel kernels acting on it.
//!
//! The matrix is stored row-major as a flat vector of `4^n` entries, so the
//! entry `(row, col)` lives at `row << n | col`. Read that way the storage is
//! a `2n`-qubit vector: bit `k` addresses column qubit `k` and bit `n + k`
//! addresses row qubit `k`. A unitary `U` on qubit `k` is applied as `U` on
//! bit `n + k` followed by `conj(U)` on bit `k`.
//!
//! Basis index convention: qubit `k` is bit `k` of the basis index.

use num_complex::Complex64;

use super::circuit::Gate;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<Complex64>,
}

/// Calls `f(v)` for every `v < len` with all bits of `mask` clear.
#[inline(always)]
fn for_each_clear(len: usize, mask: usize, mut f: impl FnMut(usize)) {
    let mut v = 0usize;
    while v < len {
        f(v);
        v = ((v | mask) + 1) & !mask;
    }
}

impl DensityMatrix {
    /// `|0…0⟩⟨0…0|`
    pub fn zero_state(num_qubits: usize) -> Self {
        let mut data = vec![ZERO; 1 << (2 * num_qubits)];
        data[0] = ONE;
        DensityMatrix { num_qubits, data }
    }

    /// Builds `ρ = |ψ⟩⟨ψ|`.
    pub fn from_pure(amplitudes: &[Complex64]) -> Self {
        let dim = amplitudes.len();
        assert!(dim.is_power_of_two(), "state length must be a power of two");
        let num_qubits = dim.trailing_zeros() as usize;
        let mut data = Vec::with_capacity(dim * dim);
        for a in amplitudes {
            for b in amplitudes {
                data.push(a * b.conj());
            }
        }
        DensityMatrix { num_qubits, data }
    }

    /// `I / 2^n`
    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { num_qubits, data }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row << self.num_qubits) | col]
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|i| self.data[i * dim + i]).sum()
    }

    /// Largest `|ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                worst = worst.max((self.data[i * dim + j] - self.data[j * dim + i].conj()).norm());
            }
        }
        worst
    }

    /// Real part of the diagonal: computational-basis probabilities before readout.
    pub fn diagonal(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|i| self.data[i * dim + i].re).collect()
    }

    pub(crate) fn apply_gate(&mut self, gate: &Gate, scratch: &mut Vec<Complex64>) {
        match *gate {
            Gate::H(q) => self.apply_hadamard(q),
            Gate::Rx(q, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                self.apply_rx(q, c, s)
            }
            Gate::Ry(q, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                self.apply_ry(q, c, s)
            }
            Gate::Rz(q, t) => self.apply_parity_phase(1 << q, t),
            Gate::Rzz(a, b, t) => self.apply_parity_phase((1 << a) | (1 << b), t),
            Gate::Cx(ctrl, tgt) => self.apply_cx(ctrl, tgt, scratch),
        }
    }

    fn row_and_col_bits(&self, q: usize) -> [usize; 2] {
        [1 << (q + self.num_qubits), 1 << q]
    }

    fn apply_hadamard(&mut self, q: usize) {
        let f = std::f64::consts::FRAC_1_SQRT_2;
        let len = self.data.len();
        for bit in self.row_and_col_bits(q) {
            let data = &mut self.data;
            for_each_clear(len, bit, |i| {
                let (a, b) = (data[i], data[i | bit]);
                data[i] = (a + b) * f;
                data[i | bit] = (a - b) * f;
            });
        }
    }

    // RX = [[c, -is], [-is, c]]; on the column side its conjugate [[c, is], [is, c]].
    fn apply_rx(&mut self, q: usize, c: f64, s: f64) {
        let len = self.data.len();
        let [row, col] = self.row_and_col_bits(q);
        for (bit, sign) in [(row, -1.0), (col, 1.0)] {
            let data = &mut self.data;
            let is = Complex64::new(0.0, sign * s);
            for_each_clear(len, bit, |i| {
                let (a, b) = (data[i], data[i | bit]);
                data[i] = a * c + b * is;
                data[i | bit] = a * is + b * c;
            });
        }
    }

    // RY is real, so the row and column sides use the same matrix.
    fn apply_ry(&mut self, q: usize, c: f64, s: f64) {
        let len = self.data.len();
        for bit in self.row_and_col_bits(q) {
            let data = &mut self.data;
            for_each_clear(len, bit, |i| {
                let (a, b) = (data[i], data[i | bit]);
                data[i] = a * c - b * s;
                data[i | bit] = a * s + b * c;
            });
        }
    }

    /// `exp(-iθ/2 · Z^{⊗mask})`: RZ for a single-bit mask, RZZ for two bits.
    /// Entry `(r, c)` picks up `e^{-iθ}` when the row has even and the column odd
    /// parity, `e^{+iθ}` for the reverse, and nothing when they agree.
    fn apply_parity_phase(&mut self, mask: usize, theta: f64) {
        let dim = self.dim();
        let n = self.num_qubits;
        let odd: Vec<bool> = (0..dim).map(|c| (c & mask).count_ones() % 2 == 1).collect();
        let even_row = Complex64::from_polar(1.0, -theta);
        let odd_row = even_row.conj();
        for (r, row) in self.data.chunks_exact_mut(dim).enumerate() {
            debug_assert_eq!(row.len(), 1 << n);
            let row_odd = odd[r];
            let phase = if row_odd { odd_row } else { even_row };
            for (entry, &col_odd) in row.iter_mut().zip(&odd) {
                if col_odd != row_odd {
                    *entry *= phase;
                }
            }
        }
    }

    fn apply_cx(&mut self, ctrl: usize, tgt: usize, scratch: &mut Vec<Complex64>) {
        let n = self.num_qubits;
        let dim = self.dim();
        let flip = |x: usize| x ^ (((x >> ctrl) & 1) << tgt);
        let perm: Vec<usize> = (0..dim).map(flip).collect();
        scratch.clear();
        scratch.reserve(self.data.len());
        for &pr in &perm {
            let src_row = &self.data[pr << n..(pr + 1) << n];
            scratch.extend(perm.iter().map(|&pc| src_row[pc]));
        }
        std::mem::swap(&mut self.data, scratch);
    }

    /// `ρ → (1−p)ρ + p · I_S/2^|S| ⊗ Tr_S ρ` for the qubit set `S` (one or two qubits).
    pub(crate) fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        let n = self.num_qubits;
        let local: Vec<usize> = qubits.iter().map(|&q| 1 << q).collect();
        let mask: usize = local.iter().map(|&b| b | (b << n)).sum();
        // offsets of the diagonal entries of each local block
        let diag_offsets: Vec<usize> = (0..1usize << qubits.len())
            .map(|x| {
                local
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| (x >> k) & 1 == 1)
                    .map(|(_, &b)| b | (b << n))
                    .sum()
            })
            .collect();
        let mut block_offsets = Vec::with_capacity(16);
        let mut sub = mask;
        loop {
            block_offsets.push(sub);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
        let block_dim = diag_offsets.len() as f64;
        let keep = 1.0 - p;
        let len = self.data.len();
        let data = &mut self.data;
        for_each_clear(len, mask, |base| {
            let trace: Complex64 = diag_offsets.iter().map(|&o| data[base + o]).sum();
            for &o in &block_offsets {
                data[base + o] *= keep;
            }
            let add = trace * (p / block_dim);
            for &o in &diag_offsets {
                data[base + o] += add;
            }
        });
    }
}
