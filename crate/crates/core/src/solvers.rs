//! Power-flow drivers: the HHL-backed fast-decoupled iteration, its classical
//! counterpart and a full Newton-Raphson solver, with per-iteration traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{self, BusId, FastDecoupledMatrices, GridError, NetworkCase};
use crate::hhl::{self, HhlConfig, HhlError, PrecisionWarning, PreparedSystem};
use crate::numerics::{self, ComplexMatrix, NumericsError, RealMatrix, C64};
use crate::qsim::qubits_for_dimension;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Hhl(#[from] HhlError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "qpf")]
    Qpf,
    #[serde(rename = "fd")]
    ClassicalFd,
    #[serde(rename = "nr")]
    NewtonRaphson,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Qpf => "qpf",
            Method::ClassicalFd => "fd",
            Method::NewtonRaphson => "nr",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "qpf" => Ok(Method::Qpf),
            "fd" => Ok(Method::ClassicalFd),
            "nr" => Ok(Method::NewtonRaphson),
            other => Err(format!("unknown method '{other}' (expected qpf, fd or nr)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    /// Infinity-norm tolerance on ΔP and ΔQ, per unit.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub hhl: HhlConfig,
    pub flat_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Qpf,
            tolerance: 1e-5,
            max_iterations: 100,
            hhl: HhlConfig::default(),
            flat_start: true,
        }
    }
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn with_clock_qubits(mut self, n_clock: usize) -> Self {
        self.hhl.n_clock = n_clock;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(SolverError::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(SolverError::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// State after an iteration; vectors are indexed like the case's buses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub mismatch_p_inf: f64,
    pub mismatch_q_inf: f64,
    /// HHL success probabilities of this iteration's solves (QPF only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hhl_success: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFlow {
    pub from: BusId,
    pub to: BusId,
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
    pub p_loss: f64,
    pub q_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub n_clock: usize,
    pub n_vector: usize,
    pub qubits_total: usize,
    pub angle_dim: usize,
    pub voltage_dim: usize,
    /// Linear solves per iteration (1 when there are no PQ buses).
    pub invocations_per_iteration: usize,
    pub hhl_invocations: usize,
    /// Prepared systems built (one per matrix per solve).
    pub prepares: usize,
    /// Times each prepared system was reused after its first iteration.
    pub prepare_reuse: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    pub bus_ids: Vec<BusId>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub branch_flows: Vec<BranchFlow>,
    pub trace: IterationTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<ResourceReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<PrecisionWarning>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl SolveReport {
    pub fn final_mismatch(&self) -> (f64, f64) {
        self.trace
            .records
            .last()
            .map_or((f64::INFINITY, f64::INFINITY), |r| (r.mismatch_p_inf, r.mismatch_q_inf))
    }

    pub fn voltage(&self, id: BusId) -> Option<(f64, f64)> {
        let i = self.bus_ids.iter().position(|&b| b == id)?;
        Some((self.v[i], self.theta[i]))
    }
}

pub fn solve(case: &NetworkCase, config: &SolverConfig) -> Result<SolveReport> {
    match config.method {
        Method::Qpf => solve_qpf(case, config),
        Method::ClassicalFd => solve_fast_decoupled(case, config),
        Method::NewtonRaphson => solve_newton(case, config),
    }
}

#[derive(Clone, Copy)]
enum Subproblem {
    Angle,
    Magnitude,
}

struct LoopOutcome {
    converged: bool,
    iterations: usize,
    v: Vec<f64>,
    theta: Vec<f64>,
    trace: IterationTrace,
    diagnostic: Option<String>,
    solve_iterations: usize,
}

fn initial_state(case: &NetworkCase, config: &SolverConfig) -> (Vec<f64>, Vec<f64>) {
    if config.flat_start {
        case.flat_start()
    } else {
        case.stored_start()
    }
}

fn record(iteration: usize, v: &[f64], theta: &[f64], m: &grid::Mismatch, hhl_success: Vec<f64>) -> IterationRecord {
    IterationRecord {
        iteration,
        v: v.to_vec(),
        theta: theta.to_vec(),
        mismatch_p_inf: m.dp_inf,
        mismatch_q_inf: m.dq_inf,
        hhl_success,
    }
}

// The shared decoupled loop. Each iteration evaluates ΔP, ΔQ, solves
// B′(VΔθ) = ΔP/V and B″ΔV = ΔQ/V with `linear`, recovers Δθ by dividing by
// V, and updates θ += Δθ, V += ΔV. Trace row k holds the state after k updates.
fn decoupled_loop<F>(case: &NetworkCase, fd: &FastDecoupledMatrices, config: &SolverConfig, mut linear: F) -> Result<LoopOutcome>
where
    F: FnMut(Subproblem, &[f64]) -> Result<(Vec<f64>, Option<f64>)>,
{
    let ybus = grid::build_ybus(case);
    let (mut v, mut theta) = initial_state(case, config);
    let mut trace = IterationTrace::default();
    let mut m = grid::mismatch_with(case, &ybus, &v, &theta)?;
    if m.below(config.tolerance) {
        trace.records.push(record(1, &v, &theta, &m, Vec::new()));
        return Ok(LoopOutcome {
            converged: true,
            iterations: 1,
            v,
            theta,
            trace,
            diagnostic: None,
            solve_iterations: 0,
        });
    }

    for k in 1..=config.max_iterations {
        let mut success = Vec::new();
        let v_angle: Vec<f64> = fd.angle_positions.iter().map(|&i| v[i]).collect();
        let rhs = grid::scaled_rhs(&m.dp, &v_angle)?;
        let (v_dtheta, p) = linear(Subproblem::Angle, &rhs)?;
        success.extend(p);

        let v_mag: Vec<f64> = fd.voltage_positions.iter().map(|&i| v[i]).collect();
        let rhs = grid::scaled_rhs(&m.dq, &v_mag)?;
        let (dv, p) = if rhs.is_empty() {
            (Vec::new(), None)
        } else {
            linear(Subproblem::Magnitude, &rhs)?
        };
        success.extend(p);

        for (j, &i) in fd.angle_positions.iter().enumerate() {
            theta[i] += v_dtheta[j] / v[i];
        }
        for (j, &i) in fd.voltage_positions.iter().enumerate() {
            v[i] += dv[j];
        }

        m = match grid::mismatch_with(case, &ybus, &v, &theta) {
            Ok(m) => m,
            Err(e) => {
                return Ok(LoopOutcome {
                    converged: false,
                    iterations: k,
                    v,
                    theta,
                    trace,
                    diagnostic: Some(format!("iteration {k}: {e}")),
                    solve_iterations: k,
                })
            }
        };
        trace.records.push(record(k, &v, &theta, &m, success));
        if m.below(config.tolerance) {
            return Ok(LoopOutcome {
                converged: true,
                iterations: k,
                v,
                theta,
                trace,
                diagnostic: None,
                solve_iterations: k,
            });
        }
        if !m.max_norm().is_finite() {
            return Ok(LoopOutcome {
                converged: false,
                iterations: k,
                v,
                theta,
                trace,
                diagnostic: Some(format!("iteration {k}: mismatch is not finite")),
                solve_iterations: k,
            });
        }
    }
    Ok(LoopOutcome {
        converged: false,
        iterations: config.max_iterations,
        v,
        theta,
        trace,
        diagnostic: Some(format!("no convergence within {} iterations", config.max_iterations)),
        solve_iterations: config.max_iterations,
    })
}

fn finish(case: &NetworkCase, method: Method, out: LoopOutcome) -> SolveReport {
    SolveReport {
        method,
        converged: out.converged,
        iterations: out.iterations,
        bus_ids: case.bus_ids(),
        branch_flows: branch_flows(case, &out.v, &out.theta),
        v: out.v,
        theta: out.theta,
        trace: out.trace,
        resource: None,
        warnings: Vec::new(),
        diagnostic: out.diagnostic,
    }
}

fn zero_or<F>(rhs: &[f64], f: F) -> Result<(Vec<f64>, Option<f64>)>
where
    F: FnOnce() -> Result<(Vec<f64>, Option<f64>)>,
{
    if rhs.iter().all(|&x| x == 0.0) {
        Ok((vec![0.0; rhs.len()], None))
    } else {
        f()
    }
}

/// Quantum power flow: the decoupled iteration with both linear systems
/// solved by HHL. Both matrices are prepared once, before the first solve.
pub fn solve_qpf(case: &NetworkCase, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let fd = grid::build_b_matrices(case)?;
    let angle_system = hhl::prepare_system(&fd.b_prime.to_complex(), config.hhl)?;
    let voltage_system = if fd.b_double_prime.rows() > 0 {
        Some(hhl::prepare_system(&fd.b_double_prime.to_complex(), config.hhl)?)
    } else {
        None
    };

    let mut invocations = 0usize;
    let out = decoupled_loop(case, &fd, config, |which, rhs| {
        let system: &PreparedSystem = match which {
            Subproblem::Angle => &angle_system,
            Subproblem::Magnitude => voltage_system.as_ref().expect("non-empty B''"),
        };
        zero_or(rhs, || {
            invocations += 1;
            let x = hhl::solve_real(system, rhs)?;
            Ok((x.real_part(), Some(x.success_probability)))
        })
    })?;

    let mut warnings: Vec<PrecisionWarning> = angle_system.warnings().to_vec();
    if let Some(s) = &voltage_system {
        for w in s.warnings() {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
    }
    let mut resource = estimate_from_matrices(&fd, &config.hhl);
    resource.hhl_invocations = invocations;
    resource.prepare_reuse = out.solve_iterations.saturating_sub(1);

    let mut report = finish(case, Method::Qpf, out);
    report.resource = Some(resource);
    report.warnings = warnings;
    Ok(report)
}

/// Classical fast-decoupled power flow with direct solves.
pub fn solve_fast_decoupled(case: &NetworkCase, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let fd = grid::build_b_matrices(case)?;
    let b_prime = fd.b_prime.to_complex();
    let b_double_prime = fd.b_double_prime.to_complex();
    let out = decoupled_loop(case, &fd, config, |which, rhs| {
        let m = match which {
            Subproblem::Angle => &b_prime,
            Subproblem::Magnitude => &b_double_prime,
        };
        zero_or(rhs, || {
            let b: Vec<C64> = rhs.iter().map(|&x| C64::new(x, 0.0)).collect();
            let x = numerics::solve_direct(m, &b)?;
            Ok((x.iter().map(|z| z.re).collect(), None))
        })
    })?;
    Ok(finish(case, Method::ClassicalFd, out))
}

/// Polar Jacobian of the calculated injections, rows [P(non-slack); Q(PQ)]
/// and columns [θ(non-slack); V(PQ)].
pub fn jacobian(case: &NetworkCase, ybus: &ComplexMatrix, v: &[f64], theta: &[f64]) -> RealMatrix {
    let ns = case.non_slack_positions();
    let pq = case.pq_positions();
    let (p, q) = grid::calculated_injections(ybus, v, theta);
    let n = ns.len() + pq.len();
    let mut j = RealMatrix::zeros(n, n);
    let g = |i: usize, k: usize| ybus[(i, k)].re;
    let b = |i: usize, k: usize| ybus[(i, k)].im;

    for (r, &i) in ns.iter().enumerate() {
        for (c, &k) in ns.iter().enumerate() {
            j[(r, c)] = if i == k {
                -q[i] - b(i, i) * v[i] * v[i]
            } else {
                let (s, co) = (theta[i] - theta[k]).sin_cos();
                v[i] * v[k] * (g(i, k) * s - b(i, k) * co)
            };
        }
        for (c, &k) in pq.iter().enumerate() {
            j[(r, ns.len() + c)] = if i == k {
                p[i] / v[i] + g(i, i) * v[i]
            } else {
                let (s, co) = (theta[i] - theta[k]).sin_cos();
                v[i] * (g(i, k) * co + b(i, k) * s)
            };
        }
    }
    for (r, &i) in pq.iter().enumerate() {
        let row = ns.len() + r;
        for (c, &k) in ns.iter().enumerate() {
            j[(row, c)] = if i == k {
                p[i] - g(i, i) * v[i] * v[i]
            } else {
                let (s, co) = (theta[i] - theta[k]).sin_cos();
                -v[i] * v[k] * (g(i, k) * co + b(i, k) * s)
            };
        }
        for (c, &k) in pq.iter().enumerate() {
            j[(row, ns.len() + c)] = if i == k {
                q[i] / v[i] - b(i, i) * v[i]
            } else {
                let (s, co) = (theta[i] - theta[k]).sin_cos();
                v[i] * (g(i, k) * s - b(i, k) * co)
            };
        }
    }
    j
}

/// Full Newton-Raphson in polar coordinates, Jacobian rebuilt every iteration.
pub fn solve_newton(case: &NetworkCase, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let ybus = grid::build_ybus(case);
    let ns = case.non_slack_positions();
    let pq = case.pq_positions();
    let (mut v, mut theta) = initial_state(case, config);
    let mut trace = IterationTrace::default();
    let mut m = grid::mismatch_with(case, &ybus, &v, &theta)?;

    let done = |converged, iterations, v, theta, trace, diagnostic| LoopOutcome {
        converged,
        iterations,
        v,
        theta,
        trace,
        diagnostic,
        solve_iterations: iterations,
    };

    if m.below(config.tolerance) {
        trace.records.push(record(1, &v, &theta, &m, Vec::new()));
        return Ok(finish(case, Method::NewtonRaphson, done(true, 1, v, theta, trace, None)));
    }
    for k in 1..=config.max_iterations {
        let j = jacobian(case, &ybus, &v, &theta);
        let f: Vec<f64> = m.dp.iter().chain(&m.dq).copied().collect();
        let dx = match numerics::solve_real(&j, &f) {
            Ok(dx) => dx,
            Err(e) => {
                let diag = Some(format!("iteration {k}: Jacobian solve failed: {e}"));
                return Ok(finish(case, Method::NewtonRaphson, done(false, k, v, theta, trace, diag)));
            }
        };
        for (c, &i) in ns.iter().enumerate() {
            theta[i] += dx[c];
        }
        for (c, &i) in pq.iter().enumerate() {
            v[i] += dx[ns.len() + c];
        }
        m = match grid::mismatch_with(case, &ybus, &v, &theta) {
            Ok(m) => m,
            Err(e) => {
                let diag = Some(format!("iteration {k}: {e}"));
                return Ok(finish(case, Method::NewtonRaphson, done(false, k, v, theta, trace, diag)));
            }
        };
        trace.records.push(record(k, &v, &theta, &m, Vec::new()));
        if m.below(config.tolerance) {
            return Ok(finish(case, Method::NewtonRaphson, done(true, k, v, theta, trace, None)));
        }
    }
    let diag = Some(format!("no convergence within {} iterations", config.max_iterations));
    Ok(finish(
        case,
        Method::NewtonRaphson,
        done(false, config.max_iterations, v, theta, trace, diag),
    ))
}

/// Sending- and receiving-end flows of every branch (π model, from-side tap).
pub fn branch_flows(case: &NetworkCase, v: &[f64], theta: &[f64]) -> Vec<BranchFlow> {
    case.branches()
        .iter()
        .map(|br| {
            let f = case.position(br.from).expect("validated");
            let t = case.position(br.to).expect("validated");
            let vf = C64::from_polar(v[f], theta[f]);
            let vt = C64::from_polar(v[t], theta[t]);
            let ys = br.series_admittance();
            let ych = C64::new(0.0, br.b / 2.0);
            let tap = br.tap;
            let i_from = (ys + ych) / (tap * tap) * vf - ys / tap * vt;
            let i_to = -ys / tap * vf + (ys + ych) * vt;
            let s_from = vf * i_from.conj();
            let s_to = vt * i_to.conj();
            BranchFlow {
                from: br.from,
                to: br.to,
                p_from: s_from.re,
                q_from: s_from.im,
                p_to: s_to.re,
                q_to: s_to.im,
                p_loss: s_from.re + s_to.re,
                q_loss: s_from.im + s_to.im,
            }
        })
        .collect()
}

fn estimate_from_matrices(fd: &FastDecoupledMatrices, hhl: &HhlConfig) -> ResourceReport {
    let angle_dim = fd.b_prime.rows();
    let voltage_dim = fd.b_double_prime.rows();
    let n_vector = qubits_for_dimension(angle_dim.max(voltage_dim));
    let systems = 1 + usize::from(voltage_dim > 0);
    ResourceReport {
        n_clock: hhl.n_clock,
        n_vector,
        qubits_total: hhl.n_clock + n_vector + 1,
        angle_dim,
        voltage_dim,
        invocations_per_iteration: systems,
        hhl_invocations: 0,
        prepares: systems,
        prepare_reuse: 0,
    }
}

/// Register sizes needed to run QPF on `case`; nothing is simulated.
pub fn resource_estimate(case: &NetworkCase, config: &SolverConfig) -> ResourceReport {
    let angle_dim = case.non_slack_positions().len();
    let voltage_dim = case.pq_positions().len();
    let n_vector = qubits_for_dimension(angle_dim.max(voltage_dim));
    let systems = 1 + usize::from(voltage_dim > 0);
    ResourceReport {
        n_clock: config.hhl.n_clock,
        n_vector,
        qubits_total: config.hhl.n_clock + n_vector + 1,
        angle_dim,
        voltage_dim,
        invocations_per_iteration: systems,
        hhl_invocations: 0,
        prepares: systems,
        prepare_reuse: 0,
    }
}

/// Independently re-evaluates the final mismatch of a report.
pub fn verify_report(case: &NetworkCase, report: &SolveReport, tolerance: f64) -> Result<bool> {
    let m = grid::compute_mismatch(case, &report.v, &report.theta)?;
    Ok(m.below(tolerance))
}

/// Net injections at every bus implied by a solved state.
pub fn bus_injections(case: &NetworkCase, v: &[f64], theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    grid::calculated_injections(&grid::build_ybus(case), v, theta)
}
