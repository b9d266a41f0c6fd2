#![allow(dead_code)]

use std::path::PathBuf;

use qpf::cli::{load_case, ParsedCase};
use qpf::grid::NetworkCase;

pub const BUNDLED: [&str; 6] = [
    "five_bus.json",
    "two_bus.json",
    "ladder_2.json",
    "ladder_4.json",
    "ladder_8.json",
    "ladder_16.json",
];

pub const LADDERS: [(&str, usize); 4] = [
    ("ladder_2.json", 2),
    ("ladder_4.json", 4),
    ("ladder_8.json", 8),
    ("ladder_16.json", 16),
];

/// Bus carrying the largest load in the five-bus case.
pub const STRESSED_BUS: u32 = 1;

pub fn case_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("cases").join(name)
}

pub fn load(name: &str) -> ParsedCase {
    load_case(&case_path(name), None).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn case(name: &str) -> NetworkCase {
    load(name).case
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Copy of `case` with the load at `bus` replaced by `pd + j·qd`.
pub fn with_load(case: &NetworkCase, bus: u32, pd: f64, qd: f64) -> NetworkCase {
    case.with_bus(bus, |b| {
        b.pd = pd;
        b.qd = qd;
    })
    .unwrap()
}
