//! Dense state-vector reference for the standard quantum Deutsch-Jozsa
//! algorithm, plus a checker showing that no unitary can embed a constant
//! classical function.
//!
//! Qubit 0 is the leftmost ket in `|x⟩|y⟩` and is stored as the most
//! significant bit of the amplitude index; the ancilla `y` is the last qubit
//! (least significant bit). With this ordering the measured register of the
//! two-bit algorithm reads `(f(00) ⊕ f(10), f(10) ⊕ f(11))` directly.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::complexbit::{ComplexBitError, TruthTable, Verdict};

/// Largest function arity the reference will simulate.
pub const MAX_QUANTUM_ARITY: usize = 8;

/// Tolerance for normalisation, orthogonality and distribution comparisons.
pub const QUANTUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("state has {found} qubits, black-box needs {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Function(#[from] ComplexBitError),
    #[error("arity {0} outside 1..={MAX_QUANTUM_ARITY}")]
    ArityOutOfRange(usize),
    #[error("f = {0} is not constant")]
    NotConstant(String),
    #[error("state vector is not normalised (norm² = {0})")]
    NotNormalised(f64),
    #[error("{0} amplitudes do not form a state of one or more qubits")]
    InvalidLength(usize),
    #[error("embedding does not map inputs to orthonormal vectors")]
    NotOrthonormal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, QuantumError> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QuantumError::InvalidLength(len));
        }
        let s = Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(QuantumError::NotNormalised(norm));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Applies `H` to every qubit.
pub fn hadamard_all(s: &StateVector) -> StateVector {
    let mut amps = s.amplitudes.clone();
    let dim = amps.len();
    let mut stride = 1;
    while stride < dim {
        for block in (0..dim).step_by(2 * stride) {
            for i in block..block + stride {
                let (lo, hi) = (amps[i], amps[i + stride]);
                amps[i] = (lo + hi) * FRAC_1_SQRT_2;
                amps[i + stride] = (lo - hi) * FRAC_1_SQRT_2;
            }
        }
        stride *= 2;
    }
    StateVector {
        n_qubits: s.n_qubits,
        amplitudes: amps,
    }
}

/// The f-controlled-NOT `|x⟩|y⟩ -> |x⟩|y ⊕ f(x)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryBlackBox {
    f: TruthTable,
}

impl UnitaryBlackBox {
    pub fn new(f: TruthTable) -> Self {
        Self { f }
    }

    pub fn arity(&self) -> usize {
        self.f.arity()
    }

    pub fn function(&self) -> &TruthTable {
        &self.f
    }

    /// Image of basis index `(x, y)` packed as `x << 1 | y`.
    pub fn action(&self, index: usize) -> usize {
        let x = index >> 1;
        index ^ usize::from(self.f.eval(x))
    }
}

pub fn apply_unitary_blackbox(
    u: &UnitaryBlackBox,
    s: &StateVector,
) -> Result<StateVector, QuantumError> {
    let expected = u.arity() + 1;
    if s.n_qubits != expected {
        return Err(QuantumError::DimensionMismatch {
            expected,
            found: s.n_qubits,
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); s.amplitudes.len()];
    for (index, amp) in s.amplitudes.iter().enumerate() {
        out[u.action(index)] = *amp;
    }
    Ok(StateVector {
        n_qubits: s.n_qubits,
        amplitudes: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumDJResult {
    /// Probability of each outcome of the n-qubit input register, indexed
    /// like the truth table.
    pub distribution: Vec<f64>,
    pub verdict: Verdict,
}

impl QuantumDJResult {
    /// The unique outcome with probability one, if the distribution is a
    /// point mass.
    pub fn point_mass(&self) -> Option<usize> {
        let (idx, &p) = self
            .distribution
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        ((p - 1.0).abs() <= QUANTUM_TOL).then_some(idx)
    }
}

/// The final state before measurement: `H U_f H |0…0⟩|1⟩`.
pub fn quantum_dj_state(f: &TruthTable) -> Result<StateVector, QuantumError> {
    let n = f.arity();
    if n > MAX_QUANTUM_ARITY {
        return Err(QuantumError::ArityOutOfRange(n));
    }
    f.check_promise()?;
    let start = StateVector::basis(n + 1, 1);
    let u = UnitaryBlackBox::new(f.clone());
    let state = apply_unitary_blackbox(&u, &hadamard_all(&start))?;
    Ok(hadamard_all(&state))
}

pub fn run_quantum_dj(f: &TruthTable) -> Result<QuantumDJResult, QuantumError> {
    let state = quantum_dj_state(f)?;
    // marginalise out the ancilla (lowest bit)
    let distribution: Vec<f64> = state
        .amplitudes
        .chunks(2)
        .map(|pair| pair.iter().map(|a| a.norm_sqr()).sum())
        .collect();
    let verdict = if distribution[0] > 0.5 {
        Verdict::Constant
    } else {
        Verdict::Balanced
    };
    Ok(QuantumDJResult {
        distribution,
        verdict,
    })
}

/// True iff the measurement statistics for `f` and `1 ⊕ f` agree within
/// [`QUANTUM_TOL`]: the quantum algorithm cannot tell them apart.
pub fn phase_indistinguishability(f: &TruthTable) -> Result<bool, QuantumError> {
    let a = run_quantum_dj(f)?;
    let b = run_quantum_dj(&f.complement())?;
    Ok(a.distribution
        .iter()
        .zip(&b.distribution)
        .all(|(p, q)| (p - q).abs() <= QUANTUM_TOL))
}

/// Assigns Hilbert-space vectors to input bit-strings and output bits in
/// the `2^(n+1)`-dimensional space `U_f` acts on.
pub trait Embedding {
    fn arity(&self) -> usize;
    fn input(&self, x: usize) -> StateVector;
    fn output(&self, bit: bool) -> StateVector;
}

/// `e(x) = |x⟩|0⟩`, `e(b) = |0…0⟩|b⟩`.
#[derive(Debug, Clone, Copy)]
pub struct StandardEmbedding {
    pub n: usize,
}

impl Embedding for StandardEmbedding {
    fn arity(&self) -> usize {
        self.n
    }
    fn input(&self, x: usize) -> StateVector {
        StateVector::basis(self.n + 1, x << 1)
    }
    fn output(&self, bit: bool) -> StateVector {
        StateVector::basis(self.n + 1, usize::from(bit))
    }
}

/// Standard embedding followed by an arbitrary unitary, given as its
/// columns.
#[derive(Debug, Clone)]
pub struct UnitaryEmbedding {
    n: usize,
    columns: Vec<StateVector>,
}

impl UnitaryEmbedding {
    /// `columns[k]` is the image of `|k⟩`. Fails unless the columns form an
    /// orthonormal basis of the `2^(n+1)`-dimensional space.
    pub fn new(n: usize, columns: Vec<StateVector>) -> Result<Self, QuantumError> {
        let dim = 1usize << (n + 1);
        if columns.len() != dim || columns.iter().any(|c| c.n_qubits != n + 1) {
            return Err(QuantumError::DimensionMismatch {
                expected: n + 1,
                found: columns.first().map_or(0, |c| c.n_qubits),
            });
        }
        for (i, ci) in columns.iter().enumerate() {
            for (j, cj) in columns.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (ci.inner(cj) - target).norm() > 1e-9 {
                    return Err(QuantumError::NotOrthonormal);
                }
            }
        }
        Ok(Self { n, columns })
    }
}

impl Embedding for UnitaryEmbedding {
    fn arity(&self) -> usize {
        self.n
    }
    fn input(&self, x: usize) -> StateVector {
        self.columns[x << 1].clone()
    }
    fn output(&self, bit: bool) -> StateVector {
        self.columns[usize::from(bit)].clone()
    }
}

/// Two inputs that are orthogonal under the embedding but whose images
/// `e(f(x))` coincide. A unitary `U` with `U e(x) = e(f(x))` would have to
/// preserve both Gram matrices, so none exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x1: usize,
    pub x2: usize,
    /// `|⟨e(x1), e(x2)⟩|`
    pub input_overlap: f64,
    /// `‖e(f(x1)) − e(f(x2))‖`
    pub image_distance: f64,
    /// Largest entry-wise difference between the two Gram matrices.
    pub gram_difference: f64,
}

impl Witness {
    pub fn is_valid(&self) -> bool {
        self.x1 != self.x2
            && self.input_overlap <= QUANTUM_TOL
            && self.image_distance <= QUANTUM_TOL
            && self.gram_difference > 0.5
    }
}

pub fn check_embedding_impossible(
    f: &TruthTable,
    e: &dyn Embedding,
) -> Result<Witness, QuantumError> {
    if !f.is_constant() {
        return Err(QuantumError::NotConstant(f.to_string()));
    }
    if e.arity() != f.arity() {
        return Err(QuantumError::DimensionMismatch {
            expected: f.arity() + 1,
            found: e.arity() + 1,
        });
    }
    let size = 1usize << f.arity();
    let inputs: Vec<StateVector> = (0..size).map(|x| e.input(x)).collect();
    let images: Vec<StateVector> = (0..size).map(|x| e.output(f.eval(x))).collect();

    let gram = |vs: &[StateVector]| -> Vec<Vec<Complex64>> {
        vs.iter()
            .map(|a| vs.iter().map(|b| a.inner(b)).collect())
            .collect()
    };
    let g_in = gram(&inputs);
    let g_out = gram(&images);
    let gram_difference = g_in
        .iter()
        .flatten()
        .zip(g_out.iter().flatten())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    // inputs must be orthonormal for the argument to go through
    for (i, row) in g_in.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            if (v - target).norm() > 1e-9 {
                return Err(QuantumError::NotOrthonormal);
            }
        }
    }

    let (x1, x2) = (0..size)
        .flat_map(|i| (i + 1..size).map(move |j| (i, j)))
        .find(|&(i, j)| images[i].distance(&images[j]) <= QUANTUM_TOL)
        .expect("a constant function maps every pair to the same image");

    Ok(Witness {
        x1,
        x2,
        input_overlap: g_in[x1][x2].norm(),
        image_distance: images[x1].distance(&images[x2]),
        gram_difference,
    })
}
