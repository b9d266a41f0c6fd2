//! Statevector simulator over a fixed three-register layout:
//! clock register, vector register, then a single ancilla qubit.
//!
//! Qubit `q` of an `n`-qubit state is bit `n - 1 - q` of the basis index, so
//! qubit 0 is the most significant bit. Within each register the first qubit
//! is the most significant bit of the register value. A basis index therefore
//! decomposes as `(clock << (n_vector + 1)) | (vector << 1) | ancilla`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_traits::Zero;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::numerics::{ComplexMatrix, C64};

/// Norm drift tolerated after a gate.
pub const NORM_TOL: f64 = 1e-10;

/// Unitarity defect tolerated for dense blocks.
pub const UNITARY_TOL: f64 = 1e-10;

/// Outcomes with probability at or below this cannot be post-selected.
pub const MIN_POSTSELECT_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("qubit index {qubit} out of range for a {total}-qubit state")]
    QubitOutOfRange { qubit: usize, total: usize },
    #[error("control and target are both qubit {0}")]
    ControlIsTarget(usize),
    #[error("block is not unitary (defect {defect:e})")]
    NonUnitary { defect: f64 },
    #[error("block dimension {found} does not match register dimension {expected}")]
    BlockDimension { expected: usize, found: usize },
    #[error("expected {expected} amplitudes, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("amplitude vector has norm {norm}, expected 1")]
    NotNormalized { norm: f64 },
    #[error("cannot post-select outcome {outcome}: probability {probability:e}")]
    ZeroProbability { outcome: u8, probability: f64 },
    #[error("selected register slice has zero norm")]
    ZeroSlice,
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Register {
    Clock,
    Vector,
    Ancilla,
}

/// Qubit counts of the clock and vector registers; the ancilla is always one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegisterLayout {
    pub n_clock: usize,
    pub n_vector: usize,
}

impl RegisterLayout {
    pub const N_ANCILLA: usize = 1;

    pub fn new(n_clock: usize, n_vector: usize) -> Self {
        Self { n_clock, n_vector }
    }

    /// Layout whose vector register holds a `dim`-dimensional vector after
    /// padding to the next power of two.
    pub fn for_dimension(n_clock: usize, dim: usize) -> Self {
        Self::new(n_clock, qubits_for_dimension(dim))
    }

    pub fn total_qubits(&self) -> usize {
        self.n_clock + self.n_vector + Self::N_ANCILLA
    }

    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    pub fn vector_dim(&self) -> usize {
        1 << self.n_vector
    }

    pub fn clock_dim(&self) -> usize {
        1 << self.n_clock
    }

    pub fn ancilla_qubit(&self) -> usize {
        self.n_clock + self.n_vector
    }

    pub fn qubits(&self, register: Register) -> std::ops::Range<usize> {
        match register {
            Register::Clock => 0..self.n_clock,
            Register::Vector => self.n_clock..self.n_clock + self.n_vector,
            Register::Ancilla => self.ancilla_qubit()..self.ancilla_qubit() + 1,
        }
    }

    pub fn index(&self, clock: usize, vector: usize, ancilla: usize) -> usize {
        (clock << (self.n_vector + 1)) | (vector << 1) | ancilla
    }

    pub fn clock_of(&self, index: usize) -> usize {
        index >> (self.n_vector + 1)
    }

    pub fn vector_of(&self, index: usize) -> usize {
        (index >> 1) & (self.vector_dim() - 1)
    }
}

/// ceil(log2(dim)), with 0 for dim <= 1.
pub fn qubits_for_dimension(dim: usize) -> usize {
    if dim <= 1 {
        0
    } else {
        (usize::BITS - (dim - 1).leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, Copy)]
pub enum GateOp<'a> {
    Hadamard { target: usize },
    PauliX { target: usize },
    /// diag(1, e^{i angle}).
    Phase { target: usize, angle: f64 },
    ControlledPhase { control: usize, target: usize, angle: f64 },
    Swap { a: usize, b: usize },
    /// Ry(angle) = [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]].
    ControlledRy { control: usize, target: usize, angle: f64 },
    /// `unitary^power` on the whole vector register, controlled by `control`.
    ControlledUnitaryBlock {
        control: usize,
        unitary: &'a ComplexMatrix,
        power: u64,
    },
    /// Ry(angles[m]) on the ancilla for clock register value `m`.
    ClockControlledRy { angles: &'a [f64] },
}

#[derive(Debug, Clone, Copy)]
pub enum Measurement {
    Sample { seed: u64 },
    PostSelect { outcome: u8 },
}

#[derive(Debug, Clone)]
pub struct Measured {
    pub outcome: u8,
    pub probability: f64,
    pub state: StateVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amplitudes: Vec<C64>,
}

type Gate2 = [[C64; 2]; 2];

impl StateVector {
    /// |0...0⟩_clock ⊗ |ψ⟩_vector ⊗ |0⟩_ancilla.
    pub fn init(layout: RegisterLayout, vector: &[C64]) -> Result<Self> {
        if vector.len() != layout.vector_dim() {
            return Err(SimError::LengthMismatch {
                expected: layout.vector_dim(),
                found: vector.len(),
            });
        }
        let norm = crate::numerics::norm2(vector);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized { norm });
        }
        let mut amplitudes = vec![C64::zero(); layout.dim()];
        for (j, &a) in vector.iter().enumerate() {
            amplitudes[layout.index(0, j, 0)] = a;
        }
        Ok(Self { layout, amplitudes })
    }

    /// Wraps raw amplitudes; they must be normalized.
    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(SimError::LengthMismatch {
                expected: layout.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = crate::numerics::norm2(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized { norm });
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        crate::numerics::norm2(&self.amplitudes)
    }

    fn n(&self) -> usize {
        self.layout.total_qubits()
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        let n = self.n();
        if qubit >= n {
            return Err(SimError::QubitOutOfRange { qubit, total: n });
        }
        Ok(1 << (n - 1 - qubit))
    }

    /// Applies a gate in place.
    pub fn apply(&mut self, gate: &GateOp<'_>) -> Result<()> {
        match *gate {
            GateOp::Hadamard { target } => {
                let h = C64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_single(target, None, [[h, h], [h, -h]])
            }
            GateOp::PauliX { target } => {
                let (o, z) = (C64::new(1.0, 0.0), C64::zero());
                self.apply_single(target, None, [[z, o], [o, z]])
            }
            GateOp::Phase { target, angle } => {
                self.apply_single(target, None, phase_matrix(angle))
            }
            GateOp::ControlledPhase {
                control,
                target,
                angle,
            } => self.apply_single(target, Some(control), phase_matrix(angle)),
            GateOp::Swap { a, b } => self.apply_swap(a, b),
            GateOp::ControlledRy {
                control,
                target,
                angle,
            } => self.apply_single(target, Some(control), ry_matrix(angle)),
            GateOp::ControlledUnitaryBlock {
                control,
                unitary,
                power,
            } => self.apply_controlled_block(control, unitary, power),
            GateOp::ClockControlledRy { angles } => self.apply_clock_controlled_ry(angles),
        }
    }

    /// Consuming variant of [`StateVector::apply`].
    pub fn applied(mut self, gate: &GateOp<'_>) -> Result<Self> {
        self.apply(gate)?;
        Ok(self)
    }

    fn apply_single(&mut self, target: usize, control: Option<usize>, m: Gate2) -> Result<()> {
        let tmask = self.mask(target)?;
        let cmask = match control {
            Some(c) if c == target => return Err(SimError::ControlIsTarget(c)),
            Some(c) => self.mask(c)?,
            None => 0,
        };
        for i in 0..self.amplitudes.len() {
            if i & tmask != 0 || i & cmask != cmask {
                continue;
            }
            let j = i | tmask;
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    fn apply_swap(&mut self, a: usize, b: usize) -> Result<()> {
        let ma = self.mask(a)?;
        let mb = self.mask(b)?;
        if a == b {
            return Ok(());
        }
        for i in 0..self.amplitudes.len() {
            if i & ma != 0 && i & mb == 0 {
                self.amplitudes.swap(i, (i & !ma) | mb);
            }
        }
        Ok(())
    }

    fn apply_controlled_block(&mut self, control: usize, unitary: &ComplexMatrix, power: u64) -> Result<()> {
        let cmask = self.mask(control)?;
        if self.layout.qubits(Register::Vector).contains(&control) {
            return Err(SimError::ControlIsTarget(control));
        }
        let vdim = self.layout.vector_dim();
        if unitary.rows() != vdim || unitary.cols() != vdim {
            return Err(SimError::BlockDimension {
                expected: vdim,
                found: unitary.rows().max(unitary.cols()),
            });
        }
        let defect = unitary.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(SimError::NonUnitary { defect });
        }
        let block = matrix_power(unitary, power);
        let mut buf = vec![C64::zero(); vdim];
        let stride = 1 << (self.layout.n_vector + 1);
        for base in (0..self.amplitudes.len()).step_by(stride) {
            if base & cmask != cmask {
                continue;
            }
            for anc in 0..2 {
                for (j, slot) in buf.iter_mut().enumerate() {
                    *slot = self.amplitudes[base | (j << 1) | anc];
                }
                for r in 0..vdim {
                    let row = block.row(r);
                    let acc: C64 = row.iter().zip(&buf).map(|(u, a)| u * a).sum();
                    self.amplitudes[base | (r << 1) | anc] = acc;
                }
            }
        }
        Ok(())
    }

    fn apply_clock_controlled_ry(&mut self, angles: &[f64]) -> Result<()> {
        if angles.len() != self.layout.clock_dim() {
            return Err(SimError::LengthMismatch {
                expected: self.layout.clock_dim(),
                found: angles.len(),
            });
        }
        for i in (0..self.amplitudes.len()).step_by(2) {
            let angle = angles[self.layout.clock_of(i)];
            if angle == 0.0 {
                continue;
            }
            let m = ry_matrix(angle);
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[i + 1]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[i + 1] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    /// Quantum Fourier transform on `register`: |m⟩ -> 2^{-n/2} Σ_k e^{+2πi mk/2^n} |k⟩.
    pub fn apply_qft(&mut self, register: Register) -> Result<()> {
        for gate in qft_gates(self.layout.qubits(register)) {
            self.apply(&gate)?;
        }
        Ok(())
    }

    /// Inverse QFT on `register`: |m⟩ -> 2^{-n/2} Σ_k e^{-2πi mk/2^n} |k⟩.
    pub fn apply_inverse_qft(&mut self, register: Register) -> Result<()> {
        for gate in inverse_qft_gates(self.layout.qubits(register)) {
            self.apply(&gate)?;
        }
        Ok(())
    }

    /// Probability that `qubit` reads 1.
    pub fn probability_one(&self, qubit: usize) -> Result<f64> {
        let mask = self.mask(qubit)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    pub fn measure(&self, qubit: usize, mode: Measurement) -> Result<Measured> {
        let p1 = self.probability_one(qubit)?;
        let p0 = self
            .amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            - p1;
        let outcome = match mode {
            Measurement::PostSelect { outcome } => outcome,
            Measurement::Sample { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                u8::from(u < p1)
            }
        };
        let probability = if outcome == 1 { p1 } else { p0 };
        if probability <= MIN_POSTSELECT_PROBABILITY {
            return Err(SimError::ZeroProbability {
                outcome,
                probability,
            });
        }
        let mask = self.mask(qubit)?;
        let keep = if outcome == 1 { mask } else { 0 };
        let scale = 1.0 / probability.sqrt();
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| if i & mask == keep { a * scale } else { C64::zero() })
            .collect();
        Ok(Measured {
            outcome,
            probability,
            state: Self {
                layout: self.layout,
                amplitudes,
            },
        })
    }

    /// Vector-register amplitudes with the clock fixed to `clock` and the
    /// ancilla fixed to `ancilla`, renormalized, together with the slice norm.
    pub fn extract_vector(&self, clock: usize, ancilla: usize) -> Result<(Vec<C64>, f64)> {
        let slice: Vec<C64> = (0..self.layout.vector_dim())
            .map(|j| self.amplitudes[self.layout.index(clock, j, ancilla)])
            .collect();
        let norm = crate::numerics::norm2(&slice);
        if norm <= 0.0 || !norm.is_finite() {
            return Err(SimError::ZeroSlice);
        }
        Ok((slice.into_iter().map(|a| a / norm).collect(), norm))
    }

    /// Probability distribution of the clock register value.
    pub fn clock_distribution(&self) -> Vec<f64> {
        let mut dist = vec![0.0; self.layout.clock_dim()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            dist[self.layout.clock_of(i)] += a.norm_sqr();
        }
        dist
    }
}

fn phase_matrix(angle: f64) -> Gate2 {
    let (o, z) = (C64::new(1.0, 0.0), C64::zero());
    [[o, z], [z, C64::from_polar(1.0, angle)]]
}

fn ry_matrix(angle: f64) -> Gate2 {
    let (s, c) = (angle / 2.0).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(-s, 0.0)],
        [C64::new(s, 0.0), C64::new(c, 0.0)],
    ]
}

/// U^power by binary exponentiation.
pub fn matrix_power(u: &ComplexMatrix, mut power: u64) -> ComplexMatrix {
    let mut result = ComplexMatrix::identity(u.rows());
    let mut base = u.clone();
    while power > 0 {
        if power & 1 == 1 {
            result = result.matmul(&base);
        }
        power >>= 1;
        if power > 0 {
            base = base.matmul(&base);
        }
    }
    result
}

fn qft_gates(qubits: std::ops::Range<usize>) -> Vec<GateOp<'static>> {
    let q: Vec<usize> = qubits.collect();
    let n = q.len();
    let mut gates = Vec::new();
    for j in 0..n {
        gates.push(GateOp::Hadamard { target: q[j] });
        for k in (j + 1)..n {
            gates.push(GateOp::ControlledPhase {
                control: q[k],
                target: q[j],
                angle: std::f64::consts::TAU / (1u64 << (k - j + 1)) as f64,
            });
        }
    }
    for j in 0..n / 2 {
        gates.push(GateOp::Swap {
            a: q[j],
            b: q[n - 1 - j],
        });
    }
    gates
}

fn inverse_qft_gates(qubits: std::ops::Range<usize>) -> Vec<GateOp<'static>> {
    qft_gates(qubits)
        .into_iter()
        .rev()
        .map(|g| match g {
            GateOp::ControlledPhase {
                control,
                target,
                angle,
            } => GateOp::ControlledPhase {
                control,
                target,
                angle: -angle,
            },
            other => other,
        })
        .collect()
}
