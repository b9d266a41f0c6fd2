//! Network data model, nodal admittance assembly and the fast-decoupled
//! B′/B″ matrices.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, ComplexMatrix, NumericsError, RealMatrix, C64};

pub type BusId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("duplicate bus id {0}")]
    DuplicateBus(BusId),
    #[error("case must have exactly one slack bus, found {0:?}")]
    SlackCount(Vec<BusId>),
    #[error("bus {0} has non-positive voltage setpoint")]
    BadSetpoint(BusId),
    #[error("branch {branch} references unknown bus {bus}")]
    UnknownBus { branch: usize, bus: BusId },
    #[error("branch {branch} connects bus {bus} to itself")]
    SelfLoop { branch: usize, bus: BusId },
    #[error("branch {branch} ({from}-{to}) has zero reactance")]
    ZeroReactance { branch: usize, from: BusId, to: BusId },
    #[error("branch {branch} has non-positive tap ratio {tap}")]
    BadTap { branch: usize, tap: f64 },
    #[error("network is disconnected; unreachable buses {0:?}")]
    Disconnected(Vec<BusId>),
    #[error("bus {bus} has non-positive voltage magnitude {value}")]
    NonPositiveVoltage { bus: BusId, value: f64 },
    #[error("{matrix} is not positive definite (eigenvalue {eigenvalue:e}); check for islanded PQ buses or large shunts")]
    Indefinite { matrix: &'static str, eigenvalue: f64 },
    #[error("expected {expected} entries, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("bus {0} does not exist")]
    NoSuchBus(BusId),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, GridError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

/// A bus in per-unit. Angles are radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    #[serde(default)]
    pub pd: f64,
    #[serde(default)]
    pub qd: f64,
    #[serde(default)]
    pub pg: f64,
    #[serde(default)]
    pub qg: f64,
    /// Voltage setpoint for slack and PV buses.
    #[serde(default = "one")]
    pub vset: f64,
    #[serde(default)]
    pub gs: f64,
    #[serde(default)]
    pub bs: f64,
    /// Initial magnitude guess, used when not flat-starting.
    #[serde(default = "one")]
    pub vm: f64,
    /// Initial angle guess; the slack angle is the reference.
    #[serde(default)]
    pub va: f64,
}

fn one() -> f64 {
    1.0
}

impl Bus {
    pub fn new(id: BusId, kind: BusKind) -> Self {
        Self {
            id,
            kind,
            pd: 0.0,
            qd: 0.0,
            pg: 0.0,
            qg: 0.0,
            vset: 1.0,
            gs: 0.0,
            bs: 0.0,
            vm: 1.0,
            va: 0.0,
        }
    }

    pub fn with_load(mut self, pd: f64, qd: f64) -> Self {
        self.pd = pd;
        self.qd = qd;
        self
    }

    pub fn with_generation(mut self, pg: f64, qg: f64) -> Self {
        self.pg = pg;
        self.qg = qg;
        self
    }

    pub fn with_setpoint(mut self, vset: f64) -> Self {
        self.vset = vset;
        self
    }

    pub fn with_shunt(mut self, gs: f64, bs: f64) -> Self {
        self.gs = gs;
        self.bs = bs;
        self
    }

    /// Scheduled net injection P_g - P_d.
    pub fn p_injection(&self) -> f64 {
        self.pg - self.pd
    }

    pub fn q_injection(&self) -> f64 {
        self.qg - self.qd
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    #[serde(default)]
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance.
    #[serde(default)]
    pub b: f64,
    /// Off-nominal turns ratio on the from side.
    #[serde(default = "one")]
    pub tap: f64,
}

impl Branch {
    pub fn new(from: BusId, to: BusId, r: f64, x: f64) -> Self {
        Self {
            from,
            to,
            r,
            x,
            b: 0.0,
            tap: 1.0,
        }
    }

    pub fn with_charging(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn with_tap(mut self, tap: f64) -> Self {
        self.tap = tap;
        self
    }

    pub fn series_admittance(&self) -> C64 {
        C64::new(self.r, self.x).inv()
    }
}

/// Validated, immutable network description.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    name: String,
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    index: HashMap<BusId, usize>,
}

impl NetworkCase {
    pub fn new(name: impl Into<String>, base_mva: f64, buses: Vec<Bus>, branches: Vec<Branch>) -> Result<Self> {
        let mut index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if index.insert(bus.id, i).is_some() {
                return Err(GridError::DuplicateBus(bus.id));
            }
        }
        let slacks: Vec<BusId> = buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .map(|b| b.id)
            .collect();
        if slacks.len() != 1 {
            return Err(GridError::SlackCount(slacks));
        }
        if let Some(bus) = buses
            .iter()
            .find(|b| b.kind != BusKind::Pq && !(b.vset > 0.0))
        {
            return Err(GridError::BadSetpoint(bus.id));
        }
        for (k, br) in branches.iter().enumerate() {
            for id in [br.from, br.to] {
                if !index.contains_key(&id) {
                    return Err(GridError::UnknownBus { branch: k, bus: id });
                }
            }
            if br.from == br.to {
                return Err(GridError::SelfLoop {
                    branch: k,
                    bus: br.from,
                });
            }
            if br.x == 0.0 {
                return Err(GridError::ZeroReactance {
                    branch: k,
                    from: br.from,
                    to: br.to,
                });
            }
            if !(br.tap > 0.0) {
                return Err(GridError::BadTap { branch: k, tap: br.tap });
            }
        }
        let case = Self {
            name: name.into(),
            base_mva,
            buses,
            branches,
            index,
        };
        case.check_connected()?;
        Ok(case)
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.buses.len();
        let mut adjacency = vec![Vec::new(); n];
        for br in &self.branches {
            let (f, t) = (self.index[&br.from], self.index[&br.to]);
            adjacency[f].push(t);
            adjacency[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.slack_index()]);
        seen[self.slack_index()] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let unreached: Vec<BusId> = (0..n).filter(|&i| !seen[i]).map(|i| self.buses[i].id).collect();
        if unreached.is_empty() {
            Ok(())
        } else {
            Err(GridError::Disconnected(unreached))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn bus_ids(&self) -> Vec<BusId> {
        self.buses.iter().map(|b| b.id).collect()
    }

    /// Position of `id` in [`NetworkCase::buses`].
    pub fn position(&self, id: BusId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.position(id).map(|i| &self.buses[i])
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    /// Positions of all non-slack buses, in case order.
    pub fn non_slack_positions(&self) -> Vec<usize> {
        (0..self.buses.len())
            .filter(|&i| self.buses[i].kind != BusKind::Slack)
            .collect()
    }

    /// Positions of PQ buses, in case order.
    pub fn pq_positions(&self) -> Vec<usize> {
        (0..self.buses.len())
            .filter(|&i| self.buses[i].kind == BusKind::Pq)
            .collect()
    }

    /// Copy of the case with one bus modified; the topology is unchanged.
    pub fn with_bus(&self, id: BusId, edit: impl FnOnce(&mut Bus)) -> Result<Self> {
        let pos = self.position(id).ok_or(GridError::NoSuchBus(id))?;
        let mut buses = self.buses.clone();
        edit(&mut buses[pos]);
        Self::new(self.name.clone(), self.base_mva, buses, self.branches.clone())
    }

    /// Copy of the case with the net scheduled injection of bus `id` set to
    /// (p, q); generation is kept and the load absorbs the difference.
    pub fn with_injection(&self, id: BusId, p: f64, q: f64) -> Result<Self> {
        self.with_bus(id, |bus| {
            bus.pd = bus.pg - p;
            bus.qd = bus.qg - q;
        })
    }

    /// Flat-start voltages: setpoints on slack/PV buses, 1 p.u. elsewhere,
    /// zero angles apart from the slack reference.
    pub fn flat_start(&self) -> (Vec<f64>, Vec<f64>) {
        let v = self
            .buses
            .iter()
            .map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.vset })
            .collect();
        let theta = self
            .buses
            .iter()
            .map(|b| if b.kind == BusKind::Slack { b.va } else { 0.0 })
            .collect();
        (v, theta)
    }

    /// Initial guess from the stored `vm`/`va`, with setpoints enforced.
    pub fn stored_start(&self) -> (Vec<f64>, Vec<f64>) {
        let v = self
            .buses
            .iter()
            .map(|b| if b.kind == BusKind::Pq { b.vm } else { b.vset })
            .collect();
        (v, self.buses.iter().map(|b| b.va).collect())
    }
}

/// Nodal admittance matrix with π-model branches, off-nominal taps on the
/// from side and bus shunts.
pub fn build_ybus(case: &NetworkCase) -> ComplexMatrix {
    let n = case.n_buses();
    let mut y = ComplexMatrix::zeros(n, n);
    for br in case.branches() {
        let f = case.position(br.from).expect("validated");
        let t = case.position(br.to).expect("validated");
        let ys = br.series_admittance();
        let ych = C64::new(0.0, br.b / 2.0);
        let tap = br.tap;
        y[(f, f)] += (ys + ych) / (tap * tap);
        y[(t, t)] += ys + ych;
        y[(f, t)] -= ys / tap;
        y[(t, f)] -= ys / tap;
    }
    for (i, bus) in case.buses().iter().enumerate() {
        y[(i, i)] += C64::new(bus.gs, bus.bs);
    }
    y
}

/// Constant fast-decoupled matrices (XB scheme) over their reduced bus sets.
#[derive(Debug, Clone)]
pub struct FastDecoupledMatrices {
    /// Reactance-only susceptance matrix over non-slack buses.
    pub b_prime: RealMatrix,
    /// -Im(Ybus) over PQ buses.
    pub b_double_prime: RealMatrix,
    /// Case positions of the rows of `b_prime`.
    pub angle_positions: Vec<usize>,
    /// Case positions of the rows of `b_double_prime`.
    pub voltage_positions: Vec<usize>,
    angle_ids: Vec<BusId>,
    voltage_ids: Vec<BusId>,
}

impl FastDecoupledMatrices {
    pub fn angle_bus_ids(&self) -> &[BusId] {
        &self.angle_ids
    }

    pub fn voltage_bus_ids(&self) -> &[BusId] {
        &self.voltage_ids
    }
}

pub fn build_b_matrices(case: &NetworkCase) -> Result<FastDecoupledMatrices> {
    let n = case.n_buses();
    let mut full = RealMatrix::zeros(n, n);
    for br in case.branches() {
        let f = case.position(br.from).expect("validated");
        let t = case.position(br.to).expect("validated");
        let b = 1.0 / br.x;
        full[(f, f)] += b;
        full[(t, t)] += b;
        full[(f, t)] -= b;
        full[(t, f)] -= b;
    }
    let angle_positions = case.non_slack_positions();
    let voltage_positions = case.pq_positions();
    let b_prime = full.submatrix(&angle_positions);
    let b_double_prime = build_ybus(case).imag_part().submatrix(&voltage_positions);
    let b_double_prime = negate(&b_double_prime);

    check_positive_definite("B'", &b_prime)?;
    check_positive_definite("B''", &b_double_prime)?;

    let ids = |positions: &[usize]| positions.iter().map(|&i| case.buses()[i].id).collect();
    Ok(FastDecoupledMatrices {
        angle_ids: ids(&angle_positions),
        voltage_ids: ids(&voltage_positions),
        b_prime,
        b_double_prime,
        angle_positions,
        voltage_positions,
    })
}

fn negate(m: &RealMatrix) -> RealMatrix {
    RealMatrix::from_row_major(m.rows(), m.cols(), m.as_slice().iter().map(|x| -x).collect())
}

fn check_positive_definite(name: &'static str, m: &RealMatrix) -> Result<()> {
    if m.rows() == 0 {
        return Ok(());
    }
    let eig = numerics::hermitian_eigendecomposition(&m.to_complex())?;
    let lambda_min = eig.eigenvalues[0];
    let lambda_max = eig.eigenvalues[eig.dim() - 1];
    if lambda_min <= numerics::SINGULAR_TOL * lambda_max.abs() {
        return Err(GridError::Indefinite {
            matrix: name,
            eigenvalue: lambda_min,
        });
    }
    Ok(())
}

/// Power mismatch, scheduled minus calculated.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    /// Over non-slack buses.
    pub dp: Vec<f64>,
    /// Over PQ buses.
    pub dq: Vec<f64>,
    pub dp_inf: f64,
    pub dq_inf: f64,
}

impl Mismatch {
    pub fn max_norm(&self) -> f64 {
        self.dp_inf.max(self.dq_inf)
    }

    pub fn below(&self, tol: f64) -> bool {
        self.dp_inf < tol && self.dq_inf < tol
    }
}

/// Calculated injections P_i, Q_i at every bus for voltages V∠θ.
pub fn calculated_injections(ybus: &ComplexMatrix, v: &[f64], theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        for k in 0..n {
            let y = ybus[(i, k)];
            if y.re == 0.0 && y.im == 0.0 {
                continue;
            }
            let (s, c) = (theta[i] - theta[k]).sin_cos();
            p[i] += v[i] * v[k] * (y.re * c + y.im * s);
            q[i] += v[i] * v[k] * (y.re * s - y.im * c);
        }
    }
    (p, q)
}

fn check_state(case: &NetworkCase, v: &[f64], theta: &[f64]) -> Result<()> {
    let n = case.n_buses();
    for len in [v.len(), theta.len()] {
        if len != n {
            return Err(GridError::LengthMismatch {
                expected: n,
                found: len,
            });
        }
    }
    if let Some((i, &value)) = v.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(GridError::NonPositiveVoltage {
            bus: case.buses()[i].id,
            value,
        });
    }
    Ok(())
}

/// Mismatch using a precomputed admittance matrix.
pub fn mismatch_with(case: &NetworkCase, ybus: &ComplexMatrix, v: &[f64], theta: &[f64]) -> Result<Mismatch> {
    check_state(case, v, theta)?;
    let (p, q) = calculated_injections(ybus, v, theta);
    let buses = case.buses();
    let dp: Vec<f64> = case
        .non_slack_positions()
        .into_iter()
        .map(|i| buses[i].p_injection() - p[i])
        .collect();
    let dq: Vec<f64> = case
        .pq_positions()
        .into_iter()
        .map(|i| buses[i].q_injection() - q[i])
        .collect();
    let inf = |xs: &[f64]| xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(Mismatch {
        dp_inf: inf(&dp),
        dq_inf: inf(&dq),
        dp,
        dq,
    })
}

pub fn compute_mismatch(case: &NetworkCase, v: &[f64], theta: &[f64]) -> Result<Mismatch> {
    mismatch_with(case, &build_ybus(case), v, theta)
}

/// Elementwise Δ_i / V_i.
pub fn scaled_rhs(delta: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if delta.len() != v.len() {
        return Err(GridError::LengthMismatch {
            expected: delta.len(),
            found: v.len(),
        });
    }
    delta
        .iter()
        .zip(v)
        .enumerate()
        .map(|(i, (&d, &vi))| {
            if vi > 0.0 {
                Ok(d / vi)
            } else {
                Err(GridError::NonPositiveVoltage {
                    bus: i as BusId,
                    value: vi,
                })
            }
        })
        .collect()
}
