//! Native JSON case documents and format dispatch.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::matpower;
use crate::grid::{Branch, Bus, BusId, GridError, NetworkCase};
use crate::stochastic::{CorrelationPair, StochasticError, UncertainInjection, UncertaintySpec, DEFAULT_RELATIVE_STD};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("invalid network: {0}")]
    Semantic(#[from] GridError),
    #[error("invalid uncertainty block: {0}")]
    Uncertainty(#[from] StochasticError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    NativeJson,
    Matpower,
}

impl CaseFormat {
    /// `.m` files are MATPOWER, everything else is native JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("m") => CaseFormat::Matpower,
            _ => CaseFormat::NativeJson,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyEntry {
    pub bus: BusId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyBlock {
    pub injections: Vec<UncertaintyEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub correlations: Vec<CorrelationPair>,
}

impl UncertaintyBlock {
    /// Fill omitted means from the case schedule and omitted stds with
    /// 10% of |mean|, then validate against the case.
    pub fn resolve(&self, case: &NetworkCase) -> Result<UncertaintySpec, StochasticError> {
        let mut injections = Vec::with_capacity(self.injections.len());
        for e in &self.injections {
            let base = UncertainInjection::around_schedule(case, e.bus)?;
            let p_mean = e.p_mean.unwrap_or(base.p_mean);
            let q_mean = e.q_mean.unwrap_or(base.q_mean);
            injections.push(UncertainInjection {
                bus: e.bus,
                p_mean,
                q_mean,
                p_std: e.p_std.unwrap_or(DEFAULT_RELATIVE_STD * p_mean.abs()),
                q_std: e.q_std.unwrap_or(DEFAULT_RELATIVE_STD * q_mean.abs()),
            });
        }
        let spec = UncertaintySpec {
            injections,
            correlation: crate::stochastic::CorrelationSpec {
                pairs: self.correlations.clone(),
            },
        };
        spec.validate(case)?;
        Ok(spec)
    }

    pub fn from_spec(spec: &UncertaintySpec) -> Self {
        Self {
            injections: spec
                .injections
                .iter()
                .map(|u| UncertaintyEntry {
                    bus: u.bus,
                    p_mean: Some(u.p_mean),
                    q_mean: Some(u.q_mean),
                    p_std: Some(u.p_std),
                    q_std: Some(u.q_std),
                })
                .collect(),
            correlations: spec.correlation.pairs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDocument {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintyBlock>,
}

impl CaseDocument {
    pub fn from_case(case: &NetworkCase, uncertainty: Option<&UncertaintySpec>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: case.name().to_string(),
            base_mva: case.base_mva(),
            buses: case.buses().to_vec(),
            branches: case.branches().to_vec(),
            uncertainty: uncertainty.map(UncertaintyBlock::from_spec),
        }
    }

    pub fn into_parsed(self) -> Result<ParsedCase, CaseError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CaseError::SchemaVersion(self.schema_version));
        }
        let case = NetworkCase::new(self.name, self.base_mva, self.buses, self.branches)?;
        let uncertainty = self.uncertainty.map(|u| u.resolve(&case)).transpose()?;
        Ok(ParsedCase {
            case,
            uncertainty,
            warnings: Vec::new(),
        })
    }
}

/// A validated case plus whatever else the file carried.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCase {
    pub case: NetworkCase,
    pub uncertainty: Option<UncertaintySpec>,
    pub warnings: Vec<String>,
}

pub fn parse_case(text: &str, format: CaseFormat) -> Result<ParsedCase, CaseError> {
    match format {
        CaseFormat::NativeJson => {
            let doc: CaseDocument = serde_json::from_str(text).map_err(|e| CaseError::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
            doc.into_parsed()
        }
        CaseFormat::Matpower => matpower::parse(text),
    }
}

pub fn load_case(path: &Path, format: Option<CaseFormat>) -> Result<ParsedCase, CaseError> {
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_case(&text, format.unwrap_or_else(|| CaseFormat::from_path(path)))
}

/// Pretty-printed native JSON for `case`.
pub fn emit_case(case: &NetworkCase, uncertainty: Option<&UncertaintySpec>) -> String {
    let mut s = serde_json::to_string_pretty(&CaseDocument::from_case(case, uncertainty)).expect("case serializes");
    s.push('\n');
    s
}
