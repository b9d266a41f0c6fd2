//! HHL linear-system solver running on the statevector simulator.
//!
//! A Hermitian positive-definite matrix is prepared once: its spectrum is
//! scaled into the clock register, the controlled-unitary powers and the
//! reciprocal-rotation angles are cached. Each right-hand side then runs
//! phase estimation, the ancilla rotation and uncomputation, and the solution
//! is read from the clock = 0, ancilla = 1 slice.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, ComplexMatrix, EigenDecomposition, NumericsError, C64};
use crate::qsim::{GateOp, Measurement, Register, RegisterLayout, SimError, StateVector};

/// Relative tolerance for deciding that a scaled eigenvalue is an integer.
const INTEGRALITY_TOL: f64 = 1e-9;

/// Clock populations below this are not counted as support.
const SUPPORT_TOL: f64 = 1e-14;

const MAX_SAMPLING_ATTEMPTS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum HhlError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("clock register needs at least one qubit")]
    NoClockQubits,
    #[error("matrix is not positive definite; offending eigenvalues {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("spectrum cannot be mapped onto integer clock values with {n_clock} clock qubits")]
    NotExactlyEncodable { n_clock: usize },
    #[error("rotation constant {constant} must lie in (0, {limit}]")]
    InvalidRotationConstant { constant: f64, limit: f64 },
    #[error("clock value {clock} carries weight but C/{clock} = {ratio} exceeds 1")]
    RotationOutOfRange { clock: usize, ratio: f64 },
    #[error("right-hand side has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("right-hand side is zero")]
    ZeroRhs,
    #[error("padding entries of the solution are not zero (max {0:e})")]
    PaddingLeak(f64),
    #[error("ancilla never measured 1 in {0} sampling attempts")]
    PostSelectionFailed(u64),
}

pub type Result<T> = std::result::Result<T, HhlError>;

/// How eigenvalues are mapped to clock values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenvalueScaling {
    /// Integer encoding when the spectrum allows it, otherwise `Margin`.
    #[default]
    Auto,
    /// Require every eigenvalue to land on an integer clock value.
    Exact,
    /// Map λ_max to `margin · (2^n - 1)`.
    Margin,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationConstant {
    /// Smallest encoded eigenvalue when the encoding is exact, 1 otherwise.
    #[default]
    Auto,
    /// Explicit C in clock units.
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HhlConfig {
    pub n_clock: usize,
    pub rotation_constant: RotationConstant,
    pub eigenvalue_margin: f64,
    pub scaling: EigenvalueScaling,
    /// Deterministic post-selection on the ancilla; `false` samples it.
    pub post_select: bool,
    pub sample_seed: u64,
    /// Compare every solve against the classical direct solver.
    pub diagnostics: bool,
}

impl Default for HhlConfig {
    fn default() -> Self {
        Self {
            n_clock: 4,
            rotation_constant: RotationConstant::Auto,
            eigenvalue_margin: 0.95,
            scaling: EigenvalueScaling::Auto,
            post_select: true,
            sample_seed: 0,
            diagnostics: false,
        }
    }
}

impl HhlConfig {
    pub fn with_clock_qubits(mut self, n_clock: usize) -> Self {
        self.n_clock = n_clock;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrecisionWarning {
    /// λ_max/λ_min exceeds what the clock register can resolve.
    SpectrumExceedsClock { ratio: f64, capacity: f64 },
    /// Some scaled eigenvalue is not an integer, so phase estimation leaks.
    InexactEncoding { n_clock: usize },
}

/// Everything that depends only on the matrix, computed once per matrix.
#[derive(Debug, Clone)]
pub struct PreparedSystem {
    matrix: ComplexMatrix,
    config: HhlConfig,
    layout: RegisterLayout,
    eigen: EigenDecomposition,
    evolution_time: f64,
    clock_scale: f64,
    exact: bool,
    rotation_constant: f64,
    rotation_angles: Vec<f64>,
    /// `powers[k]` = e^{iBt·2^k}.
    powers: Vec<ComplexMatrix>,
    inverse_powers: Vec<ComplexMatrix>,
    warnings: Vec<PrecisionWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HhlSolution {
    pub solution: Vec<C64>,
    pub success_probability: f64,
    pub recovered_norm: f64,
    pub fidelity_vs_classical: Option<f64>,
    /// Clock population outside |0⟩ after uncomputation, given ancilla = 1.
    pub clock_leakage: f64,
    /// Ancilla measurements needed (1 under post-selection).
    pub attempts: u64,
}

impl HhlSolution {
    pub fn real_part(&self) -> Vec<f64> {
        self.solution.iter().map(|z| z.re).collect()
    }
}

impl PreparedSystem {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn padded_dim(&self) -> usize {
        self.layout.vector_dim()
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn config(&self) -> &HhlConfig {
        &self.config
    }

    pub fn evolution_time(&self) -> f64 {
        self.evolution_time
    }

    /// Factor turning eigenvalues into clock values, t·2^n/(2π).
    pub fn clock_scale(&self) -> f64 {
        self.clock_scale
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// C in clock units.
    pub fn rotation_constant(&self) -> f64 {
        self.rotation_constant
    }

    pub fn rotation_angles(&self) -> &[f64] {
        &self.rotation_angles
    }

    pub fn warnings(&self) -> &[PrecisionWarning] {
        &self.warnings
    }

    /// Eigenvalues of the (unpadded) matrix, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.eigenvalues
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigen.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigen.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Scaled eigenvalues λ·t·2^n/(2π).
    pub fn encoded_eigenvalues(&self) -> Vec<f64> {
        self.eigen
            .eigenvalues
            .iter()
            .map(|l| l * self.clock_scale)
            .collect()
    }

    /// Cached e^{iBt·2^k}.
    pub fn unitary_power(&self, k: usize) -> &ComplexMatrix {
        &self.powers[k]
    }

    pub fn padded_rhs(&self, b: &[C64]) -> Vec<C64> {
        let mut v = b.to_vec();
        v.resize(self.padded_dim(), C64::new(0.0, 0.0));
        v
    }
}

/// Validates `b`, scales its spectrum into the clock register and caches the
/// controlled-unitary powers and rotation angles.
pub fn prepare_system(b: &ComplexMatrix, config: HhlConfig) -> Result<PreparedSystem> {
    if config.n_clock == 0 {
        return Err(HhlError::NoClockQubits);
    }
    let matrix = b.hermitian_part()?;
    let n = matrix.rows();
    if n == 0 {
        return Err(HhlError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let eigen = numerics::hermitian_eigendecomposition(&matrix)?;
    let bad: Vec<f64> = eigen.eigenvalues.iter().copied().filter(|&l| l <= 0.0).collect();
    if !bad.is_empty() {
        return Err(HhlError::NotPositiveDefinite(bad));
    }
    let lambda_min = eigen.eigenvalues[0];
    let lambda_max = eigen.eigenvalues[n - 1];

    let clock_values = (1u64 << config.n_clock) as f64;
    let capacity = clock_values - 1.0;
    let mut warnings = Vec::new();
    let ratio = lambda_max / lambda_min;
    if ratio > capacity {
        warnings.push(PrecisionWarning::SpectrumExceedsClock { ratio, capacity });
    }

    let target = config.eigenvalue_margin * capacity;
    let exact_scale = match config.scaling {
        EigenvalueScaling::Margin => None,
        _ => integer_scale(&eigen.eigenvalues, target),
    };
    let (clock_scale, exact) = match (exact_scale, config.scaling) {
        (Some(s), _) => (s, true),
        (None, EigenvalueScaling::Exact) => {
            return Err(HhlError::NotExactlyEncodable {
                n_clock: config.n_clock,
            })
        }
        (None, _) => (target / lambda_max, false),
    };
    if !exact {
        warnings.push(PrecisionWarning::InexactEncoding {
            n_clock: config.n_clock,
        });
    }
    let evolution_time = TAU * clock_scale / clock_values;

    let encoded_min = lambda_min * clock_scale;
    let rotation_constant = match config.rotation_constant {
        RotationConstant::Auto if exact => encoded_min.round(),
        RotationConstant::Auto => 1.0,
        RotationConstant::Explicit(c) => {
            if !(c > 0.0 && c <= encoded_min * (1.0 + INTEGRALITY_TOL)) {
                return Err(HhlError::InvalidRotationConstant {
                    constant: c,
                    limit: encoded_min,
                });
            }
            c
        }
    };
    let rotation_angles = (0..1usize << config.n_clock)
        .map(|m| match m {
            0 => 0.0,
            _ if rotation_constant <= m as f64 => 2.0 * (rotation_constant / m as f64).asin(),
            _ => f64::NAN,
        })
        .collect();

    // Pad with λ_min on the extra diagonal so the padded spectrum stays
    // inside the already-encoded range.
    let layout = RegisterLayout::for_dimension(config.n_clock, n);
    let padded_dim = layout.vector_dim();
    let mut padded = ComplexMatrix::zeros(padded_dim, padded_dim);
    for i in 0..n {
        for j in 0..n {
            padded[(i, j)] = matrix[(i, j)];
        }
    }
    for i in n..padded_dim {
        padded[(i, i)] = C64::new(lambda_min, 0.0);
    }
    let padded_eigen = numerics::hermitian_eigendecomposition(&padded)?;
    let powers: Vec<ComplexMatrix> = (0..config.n_clock)
        .map(|k| padded_eigen.exp_i(evolution_time * (1u64 << k) as f64))
        .collect();
    let inverse_powers = powers.iter().map(ComplexMatrix::adjoint).collect();

    Ok(PreparedSystem {
        matrix,
        config,
        layout,
        eigen,
        evolution_time,
        clock_scale,
        exact,
        rotation_constant,
        rotation_angles,
        powers,
        inverse_powers,
        warnings,
    })
}

// Largest scale s with s·λ_max an integer M <= target and every s·λ_i an
// integer >= 1.
fn integer_scale(eigenvalues: &[f64], target: f64) -> Option<f64> {
    let lambda_max = *eigenvalues.last()?;
    let top = target.floor() as u64;
    (1..=top).rev().map(|m| m as f64 / lambda_max).find(|&s| {
        eigenvalues.iter().all(|&l| {
            let v = l * s;
            v.round() >= 1.0 && (v - v.round()).abs() <= INTEGRALITY_TOL * v.max(1.0)
        })
    })
}

/// Hadamards on the clock, the controlled-U ladder (clock qubit k applies
/// U^(2^(n-1-k))), then the inverse QFT on the clock.
pub fn run_qpe(prepared: &PreparedSystem, state: &mut StateVector) -> Result<()> {
    check_layout(prepared, state)?;
    let n_clock = prepared.layout.n_clock;
    for q in 0..n_clock {
        state.apply(&GateOp::Hadamard { target: q })?;
    }
    for q in 0..n_clock {
        state.apply(&GateOp::ControlledUnitaryBlock {
            control: q,
            unitary: &prepared.powers[n_clock - 1 - q],
            power: 1,
        })?;
    }
    state.apply_inverse_qft(Register::Clock)?;
    Ok(())
}

/// Rotates the ancilla by Ry(2·asin(C/m)) for every clock value m >= 1.
pub fn apply_reciprocal_rotation(prepared: &PreparedSystem, state: &mut StateVector) -> Result<()> {
    check_layout(prepared, state)?;
    let dist = state.clock_distribution();
    for (m, (&p, angle)) in dist.iter().zip(&prepared.rotation_angles).enumerate() {
        if angle.is_nan() && p > SUPPORT_TOL {
            return Err(HhlError::RotationOutOfRange {
                clock: m,
                ratio: prepared.rotation_constant / m as f64,
            });
        }
    }
    // Unsupported out-of-range clock values are left untouched.
    let angles: Vec<f64> = prepared
        .rotation_angles
        .iter()
        .map(|a| if a.is_nan() { 0.0 } else { *a })
        .collect();
    state.apply(&GateOp::ClockControlledRy { angles: &angles })?;
    Ok(())
}

/// Uncomputes phase estimation: QFT, inverse controlled-U ladder, Hadamards.
pub fn run_inverse_qpe(prepared: &PreparedSystem, state: &mut StateVector) -> Result<()> {
    check_layout(prepared, state)?;
    let n_clock = prepared.layout.n_clock;
    state.apply_qft(Register::Clock)?;
    for q in (0..n_clock).rev() {
        state.apply(&GateOp::ControlledUnitaryBlock {
            control: q,
            unitary: &prepared.inverse_powers[n_clock - 1 - q],
            power: 1,
        })?;
    }
    for q in 0..n_clock {
        state.apply(&GateOp::Hadamard { target: q })?;
    }
    Ok(())
}

fn check_layout(prepared: &PreparedSystem, state: &StateVector) -> Result<()> {
    if state.layout() != prepared.layout {
        return Err(HhlError::DimensionMismatch {
            expected: prepared.layout.dim(),
            found: state.layout().dim(),
        });
    }
    Ok(())
}

/// Loads b/‖b‖ into the vector register.
pub fn initial_state(prepared: &PreparedSystem, b: &[C64]) -> Result<(StateVector, f64)> {
    if b.len() != prepared.dim() {
        return Err(HhlError::DimensionMismatch {
            expected: prepared.dim(),
            found: b.len(),
        });
    }
    let norm = numerics::norm2(b);
    if norm == 0.0 {
        return Err(HhlError::ZeroRhs);
    }
    let v: Vec<C64> = prepared.padded_rhs(b).into_iter().map(|z| z / norm).collect();
    Ok((StateVector::init(prepared.layout, &v)?, norm))
}

/// Full circuit up to (not including) the ancilla measurement.
pub fn run_circuit(prepared: &PreparedSystem, b: &[C64]) -> Result<(StateVector, f64)> {
    let (mut state, norm) = initial_state(prepared, b)?;
    run_qpe(prepared, &mut state)?;
    apply_reciprocal_rotation(prepared, &mut state)?;
    run_inverse_qpe(prepared, &mut state)?;
    Ok((state, norm))
}

/// Solves B x = b, returning x with its norm restored from ‖b‖ and the
/// ancilla success probability.
pub fn solve(prepared: &PreparedSystem, b: &[C64]) -> Result<HhlSolution> {
    let (state, b_norm) = run_circuit(prepared, b)?;
    let ancilla = prepared.layout.ancilla_qubit();

    let (measured, attempts) = if prepared.config.post_select {
        (state.measure(ancilla, Measurement::PostSelect { outcome: 1 })?, 1)
    } else {
        let p1 = state.probability_one(ancilla)?;
        if p1 <= crate::qsim::MIN_POSTSELECT_PROBABILITY {
            return Err(SimError::ZeroProbability {
                outcome: 1,
                probability: p1,
            }
            .into());
        }
        let base = prepared.config.sample_seed;
        (0..MAX_SAMPLING_ATTEMPTS)
            .find_map(|k| {
                let m = state.measure(ancilla, Measurement::Sample { seed: base.wrapping_add(k) }).ok()?;
                (m.outcome == 1).then_some((m, k + 1))
            })
            .ok_or(HhlError::PostSelectionFailed(MAX_SAMPLING_ATTEMPTS))?
    };

    let clock_leakage = 1.0 - measured.state.clock_distribution()[0];
    let (direction, slice_norm) = measured.state.extract_vector(0, 1)?;
    let recovered_norm = b_norm * prepared.clock_scale / prepared.rotation_constant
        * measured.probability.sqrt()
        * slice_norm;

    let n = prepared.dim();
    let padding = direction[n..].iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if padding > 1e-10 {
        return Err(HhlError::PaddingLeak(padding));
    }
    let solution: Vec<C64> = direction[..n].iter().map(|z| z * recovered_norm).collect();

    let fidelity_vs_classical = if prepared.config.diagnostics {
        let direct = numerics::solve_direct(&prepared.matrix, b)?;
        Some(numerics::fidelity(&solution, &direct))
    } else {
        None
    };

    Ok(HhlSolution {
        solution,
        success_probability: measured.probability,
        recovered_norm,
        fidelity_vs_classical,
        clock_leakage,
        attempts,
    })
}

/// Convenience wrapper for real right-hand sides.
pub fn solve_real(prepared: &PreparedSystem, b: &[f64]) -> Result<HhlSolution> {
    let b: Vec<C64> = b.iter().map(|&x| C64::new(x, 0.0)).collect();
    solve(prepared, &b)
}
