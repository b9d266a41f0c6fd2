//! Deterministic JSON and CSV renderings of solver and Monte Carlo output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::grid::{BusId, NetworkCase};
use crate::solvers::{Method, SolveReport};
use crate::stochastic::{BusVoltageStats, MonteCarloResult, PairCorrelation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    CsvTrace,
}

/// Serialized form of one solve: the report plus what is needed to read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub case: String,
    pub slack_bus: BusId,
    pub angle_unit: AngleUnit,
    #[serde(flatten)]
    pub report: SolveReport,
}

impl RunOutput {
    pub fn new(case: &NetworkCase, mut report: SolveReport, unit: AngleUnit) -> Self {
        if unit == AngleUnit::Degrees {
            let deg = |xs: &mut Vec<f64>| xs.iter_mut().for_each(|x| *x = x.to_degrees());
            deg(&mut report.theta);
            for r in &mut report.trace.records {
                deg(&mut r.theta);
            }
        }
        Self {
            case: case.name().to_string(),
            slack_bus: case.buses()[case.slack_index()].id,
            angle_unit: unit,
            report,
        }
    }
}

/// `%.15g`-style formatting, except that integral values keep a trailing
/// `.0` and negative zero prints as `0.0`.
pub fn format_g15(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{:.14e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa);
        let m = m.strip_suffix(".0").unwrap_or(&m);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return format!("{s}.0");
    }
    let t = s.trim_end_matches('0');
    if t.ends_with('.') {
        format!("{t}0")
    } else {
        t.to_string()
    }
}

pub fn emit_report(output: &RunOutput, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(output).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::CsvTrace => csv_trace(output),
    }
}

pub fn parse_run_output(text: &str) -> serde_json::Result<RunOutput> {
    serde_json::from_str(text)
}

fn csv_trace(output: &RunOutput) -> String {
    let r = &output.report;
    let cols: Vec<usize> = (0..r.bus_ids.len()).filter(|&i| r.bus_ids[i] != output.slack_bus).collect();
    let mut s = String::from("iter");
    for &i in &cols {
        write!(s, ",V_{}", r.bus_ids[i]).unwrap();
    }
    for &i in &cols {
        write!(s, ",theta_{}", r.bus_ids[i]).unwrap();
    }
    s.push_str(",mismP_inf,mismQ_inf\n");
    for rec in &r.trace.records {
        write!(s, "{}", rec.iteration).unwrap();
        for &i in &cols {
            write!(s, ",{}", format_g15(rec.v[i])).unwrap();
        }
        for &i in &cols {
            write!(s, ",{}", format_g15(rec.theta[i])).unwrap();
        }
        writeln!(s, ",{},{}", format_g15(rec.mismatch_p_inf), format_g15(rec.mismatch_q_inf)).unwrap();
    }
    s
}

/// Monte Carlo output without the per-sample table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub case: String,
    pub method: Method,
    pub samples: usize,
    pub seed: u64,
    pub converged: usize,
    pub non_converged: usize,
    pub uncertain_buses: Vec<BusId>,
    pub voltage_stats: Vec<BusVoltageStats>,
    pub voltage_correlations: Vec<PairCorrelation>,
    pub injection_correlations: Vec<PairCorrelation>,
}

impl MonteCarloSummary {
    pub fn new(case: &NetworkCase, method: Method, result: &MonteCarloResult) -> Self {
        Self {
            case: case.name().to_string(),
            method,
            samples: result.samples,
            seed: result.seed,
            converged: result.converged_count,
            non_converged: result.non_converged(),
            uncertain_buses: result.uncertain_buses.clone(),
            voltage_stats: result.voltage_stats.clone(),
            voltage_correlations: result.voltage_correlations.clone(),
            injection_correlations: result.injection_correlations.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// One row per sample: drawn injections at the uncertain buses and the
/// solved voltage magnitude at every bus (empty when the sample failed).
pub fn monte_carlo_samples_csv(result: &MonteCarloResult) -> String {
    let mut s = String::from("sample,converged");
    for b in &result.uncertain_buses {
        write!(s, ",P_{b},Q_{b}").unwrap();
    }
    for b in &result.bus_ids {
        write!(s, ",V_{b}").unwrap();
    }
    s.push('\n');
    for o in &result.outcomes {
        write!(s, "{},{}", o.index, u8::from(o.converged)).unwrap();
        for (p, q) in o.injection.p.iter().zip(&o.injection.q) {
            write!(s, ",{},{}", format_g15(*p), format_g15(*q)).unwrap();
        }
        for v in &o.v {
            if o.converged {
                write!(s, ",{}", format_g15(*v)).unwrap();
            } else {
                s.push(',');
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g15_formatting() {
        assert_eq!(format_g15(1.0), "1.0");
        assert_eq!(format_g15(0.0), "0.0");
        assert_eq!(format_g15(-0.0), "0.0");
        assert_eq!(format_g15(-0.1144), "-0.1144");
        assert_eq!(format_g15(0.1 + 0.2), "0.3");
        assert_eq!(format_g15(1.0 / 3.0), "0.333333333333333");
        assert_eq!(format_g15(123456.0), "123456.0");
        assert_eq!(format_g15(1.5e-7), "1.5e-07");
        assert_eq!(format_g15(2e20), "2e+20");
        assert_eq!(format_g15(0.0001), "0.0001");
        assert_eq!(format_g15(999.99999999999999), "1000.0");
        assert_eq!(format_g15(1e15), "1e+15");
    }

    #[test]
    fn g15_keeps_fifteen_digits() {
        for &x in &[0.994812345678912, -0.0393123456789012, 1.23456789012345e-6, 98765.4321012345] {
            let back: f64 = format_g15(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-14, "{x} -> {back}");
        }
    }
}
