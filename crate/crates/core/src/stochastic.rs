//! Correlated Monte Carlo power flow.
//!
//! Gaussian injections are drawn per sample from a ChaCha8 stream keyed by
//! `(seed, sample index)`, coloured with the Cholesky factor of the
//! correlation matrix, and pushed through an ordinary deterministic solve.
//! Because a sample never depends on another sample's draw, the batch can
//! be evaluated in any order (or in parallel) with bit-identical results.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BusId, BusKind, GridError, NetworkCase};
use crate::numerics::{self, NumericsError, RealMatrix};
use crate::solvers::{self, SolverConfig};

/// Default standard deviation as a fraction of the mean magnitude.
pub const DEFAULT_RELATIVE_STD: f64 = 0.10;
pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error("uncertain injection at unknown bus {0}")]
    UnknownBus(BusId),
    #[error("uncertain injection at bus {0}, which is not a PQ bus")]
    NotPq(BusId),
    #[error("bus {0} is listed twice in the uncertainty spec")]
    DuplicateInjection(BusId),
    #[error("negative standard deviation at bus {bus}: {value}")]
    NegativeStd { bus: BusId, value: f64 },
    #[error("correlation between {a} and {b} is {rho}, outside [-1, 1]")]
    CorrelationOutOfRange { a: BusId, b: BusId, rho: f64 },
    #[error("correlation names bus {0}, which has no uncertain injection")]
    CorrelationBus(BusId),
    #[error("correlation matrix is not positive definite: {0}")]
    Correlation(#[source] NumericsError),
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("series has zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T> = std::result::Result<T, StochasticError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertainInjection {
    pub bus: BusId,
    /// Net injection means (generation minus load), per unit.
    pub p_mean: f64,
    pub q_mean: f64,
    pub p_std: f64,
    pub q_std: f64,
}

impl UncertainInjection {
    /// Injection centred on the bus's scheduled values with std = 10% of |mean|.
    pub fn around_schedule(case: &NetworkCase, bus: BusId) -> Result<Self> {
        let b = case.bus(bus).ok_or(StochasticError::UnknownBus(bus))?;
        let (p, q) = (b.p_injection(), b.q_injection());
        Ok(Self {
            bus,
            p_mean: p,
            q_mean: q,
            p_std: DEFAULT_RELATIVE_STD * p.abs(),
            q_std: DEFAULT_RELATIVE_STD * q.abs(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub a: BusId,
    pub b: BusId,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub pairs: Vec<CorrelationPair>,
}

impl CorrelationSpec {
    pub fn independent() -> Self {
        Self::default()
    }

    pub fn pair(a: BusId, b: BusId, rho: f64) -> Self {
        Self {
            pairs: vec![CorrelationPair { a, b, rho }],
        }
    }

    /// Correlation matrix in the order of `injections`; unlisted pairs are 0.
    pub fn matrix(&self, injections: &[UncertainInjection]) -> Result<RealMatrix> {
        let n = injections.len();
        let pos = |id: BusId| {
            injections
                .iter()
                .position(|u| u.bus == id)
                .ok_or(StochasticError::CorrelationBus(id))
        };
        let mut c = RealMatrix::identity(n);
        for p in &self.pairs {
            if !(-1.0..=1.0).contains(&p.rho) {
                return Err(StochasticError::CorrelationOutOfRange { a: p.a, b: p.b, rho: p.rho });
            }
            let (i, j) = (pos(p.a)?, pos(p.b)?);
            if i == j {
                if p.rho != 1.0 {
                    return Err(StochasticError::CorrelationOutOfRange { a: p.a, b: p.b, rho: p.rho });
                }
                continue;
            }
            c[(i, j)] = p.rho;
            c[(j, i)] = p.rho;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UncertaintySpec {
    pub injections: Vec<UncertainInjection>,
    #[serde(default)]
    pub correlation: CorrelationSpec,
}

impl UncertaintySpec {
    pub fn validate(&self, case: &NetworkCase) -> Result<()> {
        for (k, u) in self.injections.iter().enumerate() {
            let bus = case.bus(u.bus).ok_or(StochasticError::UnknownBus(u.bus))?;
            if bus.kind != BusKind::Pq {
                return Err(StochasticError::NotPq(u.bus));
            }
            if self.injections[..k].iter().any(|o| o.bus == u.bus) {
                return Err(StochasticError::DuplicateInjection(u.bus));
            }
            for s in [u.p_std, u.q_std] {
                if !(s >= 0.0) {
                    return Err(StochasticError::NegativeStd { bus: u.bus, value: s });
                }
            }
        }
        self.cholesky().map(|_| ())
    }

    fn cholesky(&self) -> Result<RealMatrix> {
        let c = self.correlation.matrix(&self.injections)?;
        numerics::cholesky(&c).map_err(StochasticError::Correlation)
    }
}

/// One draw: net (P, Q) per uncertain injection, in spec order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionSample {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

fn unit_open(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random bits mapped onto (0, 1]
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `k` independent standard normals from Box–Muller pairs.
fn standard_normals(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    while out.len() < k {
        let u1 = unit_open(rng);
        let u2 = unit_open(rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        out.push(r * c);
        out.push(r * s);
    }
    out.truncate(k);
    out
}

fn draw(spec: &UncertaintySpec, chol: &RealMatrix, seed: u64, index: u64) -> InjectionSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let z = chol.mul_vec(&standard_normals(&mut rng, spec.injections.len()));
    let p = spec.injections.iter().zip(&z).map(|(u, z)| u.p_mean + u.p_std * z).collect();
    let q = spec.injections.iter().zip(&z).map(|(u, z)| u.q_mean + u.q_std * z).collect();
    InjectionSample { p, q }
}

/// Draw sample `index` of the batch keyed by `seed`.
pub fn sample_injection(spec: &UncertaintySpec, seed: u64, index: u64) -> Result<InjectionSample> {
    let chol = spec.cholesky()?;
    Ok(draw(spec, &chol, seed, index))
}

pub fn sample_injections(spec: &UncertaintySpec, n: usize, seed: u64) -> Result<Vec<InjectionSample>> {
    if n == 0 {
        return Err(StochasticError::ZeroSamples);
    }
    let chol = spec.cholesky()?;
    Ok((0..n as u64).map(|i| draw(spec, &chol, seed, i)).collect())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(StochasticError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StochasticError::TooFewSamples(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StochasticError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Equal-width histogram over [min, max]; the top edge falls in the last bin.
pub fn histogram(xs: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let mut counts = vec![0; bins];
    if xs.is_empty() {
        return Histogram { lo: 0.0, hi: 0.0, counts };
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    for &x in xs {
        let k = if width > 0.0 { ((x - lo) / width) as usize } else { 0 };
        counts[k.min(bins - 1)] += 1;
    }
    Histogram { lo, hi, counts }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let (i, frac) = (h.floor() as usize, h.fract());
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Values at [`QUANTILE_LEVELS`].
    pub quantiles: Vec<f64>,
    pub histogram: Histogram,
}

pub fn summarize(xs: &[f64], bins: usize) -> Option<SeriesSummary> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(SeriesSummary {
        mean,
        std: var.sqrt(),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        quantiles: QUANTILE_LEVELS.iter().map(|&q| quantile(&sorted, q)).collect(),
        histogram: histogram(xs, bins),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    pub bins: usize,
    /// Evaluate samples on the rayon pool when the `parallel` feature is on.
    pub parallel: bool,
}

impl MonteCarloConfig {
    pub fn new(samples: usize, seed: u64, solver: SolverConfig) -> Self {
        Self {
            samples,
            seed,
            solver,
            bins: DEFAULT_BINS,
            parallel: true,
        }
    }
}

/// Result of one sample's solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub injection: InjectionSample,
    pub converged: bool,
    pub iterations: usize,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusVoltageStats {
    pub bus: BusId,
    pub magnitude: Option<SeriesSummary>,
    pub angle: Option<SeriesSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub a: BusId,
    pub b: BusId,
    /// `None` when either series has zero variance or too few samples.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub samples: usize,
    pub seed: u64,
    pub converged_count: usize,
    pub bus_ids: Vec<BusId>,
    pub uncertain_buses: Vec<BusId>,
    pub voltage_stats: Vec<BusVoltageStats>,
    /// Voltage-magnitude correlation between every pair of uncertain buses.
    pub voltage_correlations: Vec<PairCorrelation>,
    /// Active-injection correlation between every pair of uncertain buses.
    pub injection_correlations: Vec<PairCorrelation>,
    pub outcomes: Vec<SampleOutcome>,
}

impl MonteCarloResult {
    pub fn non_converged(&self) -> usize {
        self.samples - self.converged_count
    }

    pub fn converged_fraction(&self) -> f64 {
        self.converged_count as f64 / self.samples as f64
    }

    /// Converged voltage magnitudes at `bus`, in sample order.
    pub fn voltages_at(&self, bus: BusId) -> Vec<f64> {
        let Some(i) = self.bus_ids.iter().position(|&b| b == bus) else {
            return Vec::new();
        };
        self.outcomes.iter().filter(|o| o.converged).map(|o| o.v[i]).collect()
    }

    pub fn voltage_correlation(&self, a: BusId, b: BusId) -> Option<f64> {
        find_pair(&self.voltage_correlations, a, b)
    }

    pub fn injection_correlation(&self, a: BusId, b: BusId) -> Option<f64> {
        find_pair(&self.injection_correlations, a, b)
    }
}

fn find_pair(pairs: &[PairCorrelation], a: BusId, b: BusId) -> Option<f64> {
    pairs
        .iter()
        .find(|p| (p.a, p.b) == (a, b) || (p.a, p.b) == (b, a))
        .and_then(|p| p.rho)
}

/// Overwrite the uncertain injections with one draw and solve.
pub fn solve_sample(
    case: &NetworkCase,
    spec: &UncertaintySpec,
    solver: &SolverConfig,
    index: usize,
    injection: InjectionSample,
) -> SampleOutcome {
    let failed = |diag: String| SampleOutcome {
        index,
        injection: injection.clone(),
        converged: false,
        iterations: 0,
        v: vec![f64::NAN; case.n_buses()],
        theta: vec![f64::NAN; case.n_buses()],
        diagnostic: Some(diag),
    };
    let mut buses = case.buses().to_vec();
    for (k, u) in spec.injections.iter().enumerate() {
        let pos = case.position(u.bus).expect("spec validated against case");
        buses[pos].pd = buses[pos].pg - injection.p[k];
        buses[pos].qd = buses[pos].qg - injection.q[k];
    }
    let sample_case = match NetworkCase::new(case.name(), case.base_mva(), buses, case.branches().to_vec()) {
        Ok(c) => c,
        Err(e) => return failed(e.to_string()),
    };
    match solvers::solve(&sample_case, solver) {
        Ok(r) => SampleOutcome {
            index,
            injection,
            converged: r.converged,
            iterations: r.iterations,
            v: r.v,
            theta: r.theta,
            diagnostic: r.diagnostic,
        },
        Err(e) => failed(e.to_string()),
    }
}

/// Aggregate sample outcomes. The input order does not matter.
pub fn aggregate(case: &NetworkCase, spec: &UncertaintySpec, seed: u64, bins: usize, mut outcomes: Vec<SampleOutcome>) -> MonteCarloResult {
    outcomes.sort_by_key(|o| o.index);
    let bus_ids = case.bus_ids();
    let uncertain: Vec<BusId> = spec.injections.iter().map(|u| u.bus).collect();
    let converged: Vec<&SampleOutcome> = outcomes.iter().filter(|o| o.converged).collect();

    let column = |f: &dyn Fn(&SampleOutcome) -> f64| -> Vec<f64> { converged.iter().map(|o| f(o)).collect() };
    let voltage_stats = bus_ids
        .iter()
        .enumerate()
        .map(|(i, &bus)| BusVoltageStats {
            bus,
            magnitude: summarize(&column(&|o| o.v[i]), bins),
            angle: summarize(&column(&|o| o.theta[i]), bins),
        })
        .collect();

    let mut voltage_correlations = Vec::new();
    let mut injection_correlations = Vec::new();
    for (ka, &a) in uncertain.iter().enumerate() {
        for (kb, &b) in uncertain.iter().enumerate().skip(ka + 1) {
            let ia = case.position(a).expect("validated");
            let ib = case.position(b).expect("validated");
            let va = column(&|o| o.v[ia]);
            let vb = column(&|o| o.v[ib]);
            voltage_correlations.push(PairCorrelation { a, b, rho: pearson(&va, &vb).ok() });
            let pa: Vec<f64> = outcomes.iter().map(|o| o.injection.p[ka]).collect();
            let pb: Vec<f64> = outcomes.iter().map(|o| o.injection.p[kb]).collect();
            injection_correlations.push(PairCorrelation { a, b, rho: pearson(&pa, &pb).ok() });
        }
    }

    MonteCarloResult {
        samples: outcomes.len(),
        seed,
        converged_count: converged.len(),
        bus_ids,
        uncertain_buses: uncertain,
        voltage_stats,
        voltage_correlations,
        injection_correlations,
        outcomes,
    }
}

pub fn run_monte_carlo(case: &NetworkCase, spec: &UncertaintySpec, config: &MonteCarloConfig) -> Result<MonteCarloResult> {
    spec.validate(case)?;
    let samples = sample_injections(spec, config.samples, config.seed)?;
    let work = |(i, s): (usize, InjectionSample)| solve_sample(case, spec, &config.solver, i, s);

    #[cfg(feature = "parallel")]
    let outcomes: Vec<SampleOutcome> = if config.parallel {
        use rayon::prelude::*;
        samples.into_par_iter().enumerate().map(work).collect()
    } else {
        samples.into_iter().enumerate().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<SampleOutcome> = samples.into_iter().enumerate().map(work).collect();

    Ok(aggregate(case, spec, config.seed, config.bins, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Branch, Bus};
    use crate::solvers::Method;

    fn spec2(rho: f64, std: f64) -> UncertaintySpec {
        UncertaintySpec {
            injections: vec![
                UncertainInjection { bus: 1, p_mean: -0.5, q_mean: -0.2, p_std: std, q_std: std / 2.0 },
                UncertainInjection { bus: 2, p_mean: -0.3, q_mean: -0.1, p_std: std, q_std: std / 2.0 },
            ],
            correlation: CorrelationSpec::pair(1, 2, rho),
        }
    }

    fn three_bus() -> NetworkCase {
        NetworkCase::new(
            "three",
            100.0,
            vec![
                Bus::new(0, BusKind::Slack).with_setpoint(1.02),
                Bus::new(1, BusKind::Pq).with_load(0.5, 0.2),
                Bus::new(2, BusKind::Pq).with_load(0.3, 0.1),
            ],
            vec![
                Branch::new(0, 1, 0.02, 0.1),
                Branch::new(1, 2, 0.02, 0.1),
                Branch::new(0, 2, 0.02, 0.1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn pearson_hand_values() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        // sxy = 5, sxx = 2, syy = 38/3 for (1,2,3) vs (2,4,7)
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap();
        let expected = 5.0 / (2.0f64.sqrt() * (38.0f64 / 3.0).sqrt());
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 0.9933992677987827).abs() < 1e-12);
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(StochasticError::ZeroVariance)));
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(StochasticError::TooFewSamples(1))));
    }

    #[test]
    fn zero_std_reproduces_mean() {
        let s = sample_injections(&spec2(0.5, 0.0), 20, 7).unwrap();
        for d in s {
            assert_eq!(d.p, vec![-0.5, -0.3]);
            assert_eq!(d.q, vec![-0.2, -0.1]);
        }
    }

    #[test]
    fn samples_depend_only_on_seed_and_index() {
        let spec = spec2(0.75, 0.1);
        let batch = sample_injections(&spec, 50, 99).unwrap();
        assert_eq!(batch, sample_injections(&spec, 50, 99).unwrap());
        assert_eq!(batch[37], sample_injection(&spec, 99, 37).unwrap());
        assert_ne!(batch, sample_injections(&spec, 50, 100).unwrap());
    }

    #[test]
    fn box_muller_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = standard_normals(&mut rng, 20_001);
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.04, "var {var}");
    }

    #[test]
    fn empirical_correlation_tracks_target() {
        let b = sample_injections(&spec2(0.75, 0.1), 5000, 1).unwrap();
        let pa: Vec<f64> = b.iter().map(|s| s.p[0]).collect();
        let pb: Vec<f64> = b.iter().map(|s| s.p[1]).collect();
        let r = pearson(&pa, &pb).unwrap();
        assert!((r - 0.75).abs() < 0.03, "rho {r}");
    }

    #[test]
    fn invalid_specs_rejected() {
        let case = three_bus();
        let mut s = spec2(1.5, 0.1);
        assert!(matches!(s.validate(&case), Err(StochasticError::CorrelationOutOfRange { .. })));
        s = spec2(0.5, -0.1);
        assert!(matches!(s.validate(&case), Err(StochasticError::NegativeStd { .. })));
        s = spec2(0.5, 0.1);
        s.injections[0].bus = 0;
        assert!(matches!(s.validate(&case), Err(StochasticError::NotPq(0))));
        s = spec2(0.5, 0.1);
        s.injections[1].bus = 1;
        assert!(matches!(s.validate(&case), Err(StochasticError::DuplicateInjection(1))));
        // three mutually anti-correlated variables cannot all have rho = -0.9
        let mut s3 = spec2(-0.9, 0.1);
        s3.injections.push(UncertainInjection { bus: 3, p_mean: 0.0, q_mean: 0.0, p_std: 0.1, q_std: 0.0 });
        s3.correlation.pairs.push(CorrelationPair { a: 1, b: 3, rho: -0.9 });
        s3.correlation.pairs.push(CorrelationPair { a: 2, b: 3, rho: -0.9 });
        assert!(matches!(s3.cholesky(), Err(StochasticError::Correlation(_))));
        assert!(matches!(sample_injections(&spec2(0.0, 0.1), 0, 1), Err(StochasticError::ZeroSamples)));
    }

    #[test]
    fn histogram_counts_everything() {
        let xs = [0.0, 0.1, 0.2, 0.5, 1.0, 1.0];
        let h = histogram(&xs, 4);
        // bins of width 0.25: [0, .25) [.25, .5) [.5, .75) [.75, 1]
        assert_eq!(h.counts, vec![3, 0, 1, 2]);
        assert_eq!(h.total(), xs.len());
        assert_eq!(histogram(&[2.0; 3], 5).counts, vec![3, 0, 0, 0, 0]);
    }

    #[test]
    fn single_zero_std_sample_equals_deterministic_solve() {
        let case = three_bus();
        let solver = SolverConfig::new(Method::ClassicalFd);
        let spec = UncertaintySpec {
            injections: vec![UncertainInjection::around_schedule(&case, 1).unwrap()]
                .into_iter()
                .map(|u| UncertainInjection { p_std: 0.0, q_std: 0.0, ..u })
                .collect(),
            correlation: CorrelationSpec::independent(),
        };
        let mc = run_monte_carlo(&case, &spec, &MonteCarloConfig::new(1, 5, solver)).unwrap();
        let det = solvers::solve(&case, &solver).unwrap();
        assert_eq!(mc.converged_count, 1);
        assert_eq!(mc.outcomes[0].v, det.v);
        assert_eq!(mc.outcomes[0].theta, det.theta);
    }

    #[test]
    fn aggregation_ignores_order() {
        let case = three_bus();
        let spec = spec2(0.6, 0.05);
        let solver = SolverConfig::new(Method::ClassicalFd);
        let mut cfg = MonteCarloConfig::new(40, 11, solver);
        cfg.parallel = false;
        let serial = run_monte_carlo(&case, &spec, &cfg).unwrap();
        let mut shuffled = serial.outcomes.clone();
        shuffled.reverse();
        shuffled.swap(3, 17);
        assert_eq!(aggregate(&case, &spec, 11, cfg.bins, shuffled), serial);
        cfg.parallel = true;
        assert_eq!(run_monte_carlo(&case, &spec, &cfg).unwrap(), serial);
    }
}
