//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Every export takes and returns plain strings or numbers; results are JSON
//! documents that the page parses and draws.

use serde_json::json;
use wasm_bindgen::prelude::*;

use qpf::cli::{emit_report, parse_case, AngleUnit, CaseFormat, ReportFormat, RunOutput};
use qpf::hhl::{self, HhlConfig};
use qpf::numerics::{self, ComplexMatrix, C64};
use qpf::solvers::{self, Method, SolverConfig};
use qpf::stochastic::{self, MonteCarloConfig};

const FIVE_BUS: &str = include_str!("../../core/cases/five_bus.json");

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// The bundled five-bus case, so the page has something to start from.
#[wasm_bindgen]
pub fn bundled_case() -> String {
    FIVE_BUS.to_string()
}

/// Solves a native-JSON case and returns the full report, trace included.
#[wasm_bindgen]
pub fn solve_case(case_json: &str, method: &str, clock_qubits: usize) -> Result<String, JsError> {
    let parsed = parse_case(case_json, CaseFormat::NativeJson).map_err(err)?;
    let method: Method = method.parse().map_err(err)?;
    if clock_qubits == 0 {
        return Err(JsError::new("clock qubits must be at least 1"));
    }
    let config = SolverConfig::new(method).with_clock_qubits(clock_qubits);
    let report = solvers::solve(&parsed.case, &config).map_err(err)?;
    Ok(emit_report(&RunOutput::new(&parsed.case, report, AngleUnit::Radians), ReportFormat::Json))
}

/// Runs HHL on the 2×2 system with eigenvalues `l1`, `l2` (eigenvectors
/// rotated by `angle` radians) and right-hand side (cos φ, sin φ).
///
/// Returns the clock-register distribution right after phase estimation,
/// the encoded eigenvalues, and the HHL solution next to the direct one.
#[wasm_bindgen]
pub fn hhl_clock_histogram(l1: f64, l2: f64, angle: f64, phi: f64, clock_qubits: usize) -> Result<String, JsError> {
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(JsError::new("eigenvalues must be positive"));
    }
    if !(1..=10).contains(&clock_qubits) {
        return Err(JsError::new("clock qubits must be between 1 and 10"));
    }
    let (c, s) = (angle.cos(), angle.sin());
    let a = ComplexMatrix::from_row_major(
        2,
        2,
        [c * c * l1 + s * s * l2, c * s * (l1 - l2), c * s * (l1 - l2), s * s * l1 + c * c * l2]
            .into_iter()
            .map(|x| C64::new(x, 0.0))
            .collect(),
    );
    let b = [C64::new(phi.cos(), 0.0), C64::new(phi.sin(), 0.0)];

    let prepared = hhl::prepare_system(&a, HhlConfig::default().with_clock_qubits(clock_qubits)).map_err(err)?;
    let (mut state, _) = hhl::initial_state(&prepared, &b).map_err(err)?;
    hhl::run_qpe(&prepared, &mut state).map_err(err)?;
    let clock = state.clock_distribution();

    let x = hhl::solve(&prepared, &b).map_err(err)?;
    let direct = numerics::solve_direct(&a, &b).map_err(err)?;
    let re = |v: &[C64]| v.iter().map(|z| z.re).collect::<Vec<_>>();
    Ok(json!({
        "clock": clock,
        "encoded": prepared.encoded_eigenvalues(),
        "exact": prepared.is_exact(),
        "warnings": prepared.warnings(),
        "success_probability": x.success_probability,
        "clock_leakage": x.clock_leakage,
        "solution": re(&x.solution),
        "direct": re(&direct),
        "fidelity": numerics::fidelity(&x.solution, &direct),
    })
    .to_string())
}

/// Correlated Monte Carlo over the case's uncertainty block, with the
/// correlation of the first pair overridden by `rho`.
///
/// Returns per-sample points for a scatter of voltage magnitude at the
/// first two uncertain buses, plus the summary correlations.
#[wasm_bindgen]
pub fn monte_carlo(case_json: &str, samples: usize, seed: u32, rho: f64) -> Result<String, JsError> {
    let parsed = parse_case(case_json, CaseFormat::NativeJson).map_err(err)?;
    let mut spec = parsed
        .uncertainty
        .ok_or_else(|| JsError::new("case has no uncertainty block"))?;
    if spec.injections.len() < 2 {
        return Err(JsError::new("need at least two uncertain buses"));
    }
    if samples == 0 || samples > 20_000 {
        return Err(JsError::new("samples must be between 1 and 20000"));
    }
    let (a, b) = (spec.injections[0].bus, spec.injections[1].bus);
    match spec.correlation.pairs.first_mut() {
        Some(p) => p.rho = rho,
        None => spec.correlation = stochastic::CorrelationSpec::pair(a, b, rho),
    }
    spec.validate(&parsed.case).map_err(err)?;

    let config = MonteCarloConfig::new(samples, u64::from(seed), SolverConfig::new(Method::ClassicalFd));
    let result = stochastic::run_monte_carlo(&parsed.case, &spec, &config).map_err(err)?;
    let (ia, ib) = (
        result.bus_ids.iter().position(|&id| id == a).unwrap(),
        result.bus_ids.iter().position(|&id| id == b).unwrap(),
    );
    let points: Vec<[f64; 2]> = result
        .outcomes
        .iter()
        .filter(|o| o.converged)
        .map(|o| [o.v[ia], o.v[ib]])
        .collect();
    let injections: Vec<[f64; 2]> = result.outcomes.iter().map(|o| [o.injection.p[0], o.injection.p[1]]).collect();
    Ok(json!({
        "buses": [a, b],
        "voltage_points": points,
        "injection_points": injections,
        "converged": result.converged_count,
        "samples": result.samples,
        "injection_rho": result.injection_correlation(a, b),
        "voltage_rho": result.voltage_correlation(a, b),
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_bundled_case() {
        let out = solve_case(&bundled_case(), "qpf", 4).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["converged"], true);
        assert!(v["trace"]["records"].as_array().unwrap().len() > 1);
    }

    #[test]
    fn clock_histogram_peaks_at_encoded_values() {
        let out = hhl_clock_histogram(1.0, 2.0, 0.4, 0.3, 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["exact"], true);
        let clock: Vec<f64> = serde_json::from_value(v["clock"].clone()).unwrap();
        assert!((clock.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(clock[1] + clock[2] > 1.0 - 1e-12);
        assert!(v["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn scatter_has_one_point_per_converged_sample() {
        let out = monte_carlo(&bundled_case(), 300, 3, 0.75).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["voltage_points"].as_array().unwrap().len(), v["converged"].as_u64().unwrap() as usize);
        assert!(v["voltage_rho"].as_f64().unwrap() > 0.0);
    }
}
