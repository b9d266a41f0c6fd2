//! Reader for the numeric core of MATPOWER case files.
//!
//! Only `mpc.baseMVA`, `mpc.bus`, `mpc.branch` and `mpc.gen` are used. Other
//! assignments and unused columns are skipped with a warning. Powers are
//! converted from MW/MVAr to per unit and angles from degrees to radians.

use super::case_file::{CaseError, ParsedCase};
use crate::grid::{Branch, Bus, BusId, BusKind, NetworkCase};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str,
    Eq,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Newline,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> CaseError {
    CaseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, CaseError> {
    let mut out = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, col });
            match c {
                '%' => break,
                ' ' | '\t' | '\r' => i += 1,
                '=' => {
                    push(&mut out, Tok::Eq);
                    i += 1;
                }
                '[' => {
                    push(&mut out, Tok::LBracket);
                    i += 1;
                }
                ']' => {
                    push(&mut out, Tok::RBracket);
                    i += 1;
                }
                ';' => {
                    push(&mut out, Tok::Semi);
                    i += 1;
                }
                ',' => {
                    push(&mut out, Tok::Comma);
                    i += 1;
                }
                '\'' | '"' => {
                    let end = chars[i + 1..]
                        .iter()
                        .position(|&d| d == c)
                        .ok_or_else(|| syntax(line, col, "unterminated string"))?;
                    push(&mut out, Tok::Str);
                    i += end + 2;
                }
                '.' if chars[i..].starts_with(&['.', '.', '.']) => {
                    // line continuation: swallow the rest of the line
                    break;
                }
                c if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => {
                    let start = i;
                    i += 1;
                    while i < chars.len() {
                        let d = chars[i];
                        let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                        if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                            i += 1;
                        } else {
                            break;
                        }
                    }
                    let s: String = chars[start..i].iter().collect();
                    let value = match s.as_str() {
                        "-" | "+" if chars[i..].starts_with(&['I', 'n', 'f']) => {
                            i += 3;
                            if s == "-" {
                                f64::NEG_INFINITY
                            } else {
                                f64::INFINITY
                            }
                        }
                        _ => s
                            .parse::<f64>()
                            .map_err(|_| syntax(line, col, format!("malformed number '{s}'")))?,
                    };
                    push(&mut out, Tok::Num(value));
                }
                c if c.is_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    let tok = match s.as_str() {
                        "Inf" | "inf" => Tok::Num(f64::INFINITY),
                        "NaN" | "nan" => Tok::Num(f64::NAN),
                        _ => Tok::Ident(s),
                    };
                    push(&mut out, tok);
                }
                other => return Err(syntax(line, col, format!("unexpected character '{other}'"))),
            }
        }
        out.push(Token {
            tok: Tok::Newline,
            line,
            col: chars.len() + 1,
        });
    }
    Ok(out)
}

/// A numeric cell with its source position.
#[derive(Debug, Clone, Copy)]
struct Cell {
    value: f64,
    line: usize,
    col: usize,
}

#[derive(Debug, Default)]
struct Table {
    rows: Vec<Vec<Cell>>,
}

enum Value {
    Scalar(Cell),
    Matrix(Table),
    Other,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn skip_statement(&mut self) {
        while let Some(t) = self.next() {
            if matches!(t.tok, Tok::Semi | Tok::Newline) {
                break;
            }
        }
    }

    fn value(&mut self, at: &Token) -> Result<Value, CaseError> {
        match self.next() {
            Some(Token { tok: Tok::Num(v), line, col }) => Ok(Value::Scalar(Cell { value: v, line, col })),
            Some(Token { tok: Tok::LBracket, .. }) => self.matrix(at).map(Value::Matrix),
            Some(Token { tok: Tok::Str, .. }) => Ok(Value::Other),
            Some(t) => Err(syntax(t.line, t.col, "expected a number or '[' after '='")),
            None => Err(syntax(at.line, at.col, "unexpected end of input after '='")),
        }
    }

    fn matrix(&mut self, open: &Token) -> Result<Table, CaseError> {
        let mut table = Table::default();
        let mut row: Vec<Cell> = Vec::new();
        let finish_row = |table: &mut Table, row: &mut Vec<Cell>| -> Result<(), CaseError> {
            if row.is_empty() {
                return Ok(());
            }
            if let Some(first) = table.rows.first() {
                if first.len() != row.len() {
                    return Err(syntax(
                        row[0].line,
                        row[0].col,
                        format!("row has {} columns, previous rows have {}", row.len(), first.len()),
                    ));
                }
            }
            table.rows.push(std::mem::take(row));
            Ok(())
        };
        loop {
            match self.next() {
                Some(Token { tok: Tok::Num(v), line, col }) => row.push(Cell { value: v, line, col }),
                Some(Token { tok: Tok::Comma, .. }) => {}
                Some(Token { tok: Tok::Semi | Tok::Newline, .. }) => finish_row(&mut table, &mut row)?,
                Some(Token { tok: Tok::RBracket, .. }) => {
                    finish_row(&mut table, &mut row)?;
                    return Ok(table);
                }
                Some(t) => return Err(syntax(t.line, t.col, "unexpected token inside matrix")),
                None => return Err(syntax(open.line, open.col, "unterminated matrix")),
            }
        }
    }
}

const BUS_COLUMNS: [&str; 13] = [
    "BUS_I", "BUS_TYPE", "PD", "QD", "GS", "BS", "BUS_AREA", "VM", "VA", "BASE_KV", "ZONE", "VMAX", "VMIN",
];
const BUS_USED: [usize; 8] = [0, 1, 2, 3, 4, 5, 7, 8];
const BRANCH_COLUMNS: [&str; 13] = [
    "F_BUS", "T_BUS", "BR_R", "BR_X", "BR_B", "RATE_A", "RATE_B", "RATE_C", "TAP", "SHIFT", "BR_STATUS", "ANGMIN",
    "ANGMAX",
];
const BRANCH_USED: [usize; 8] = [0, 1, 2, 3, 4, 8, 9, 10];
const GEN_COLUMNS: [&str; 10] = [
    "GEN_BUS", "PG", "QG", "QMAX", "QMIN", "VG", "MBASE", "GEN_STATUS", "PMAX", "PMIN",
];
const GEN_USED: [usize; 5] = [0, 1, 2, 5, 7];

fn ignored_columns(table: &str, names: &[&str], used: &[usize], width: usize) -> Option<String> {
    let ignored: Vec<String> = (0..width)
        .filter(|c| !used.contains(c))
        .map(|c| names.get(c).map_or_else(|| format!("column {}", c + 1), |s| s.to_string()))
        .collect();
    (!ignored.is_empty()).then(|| format!("mpc.{table}: ignoring {}", ignored.join(", ")))
}

fn require_width(table: &str, t: &Table, min: usize, at: &Token) -> Result<usize, CaseError> {
    let width = t.rows.first().map_or(0, Vec::len);
    if t.rows.is_empty() {
        return Err(syntax(at.line, at.col, format!("mpc.{table} is empty")));
    }
    if width < min {
        let c = t.rows[0][0];
        return Err(syntax(c.line, c.col, format!("mpc.{table} needs at least {min} columns, found {width}")));
    }
    Ok(width)
}

fn bus_id(c: Cell) -> Result<BusId, CaseError> {
    if c.value >= 0.0 && c.value.fract() == 0.0 && c.value <= BusId::MAX as f64 {
        Ok(c.value as BusId)
    } else {
        Err(syntax(c.line, c.col, format!("invalid bus number {}", c.value)))
    }
}

pub(super) fn parse(text: &str) -> Result<ParsedCase, CaseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut name = String::from("matpower");
    let mut warnings = Vec::new();
    let mut base: Option<(f64, Token)> = None;
    let (mut bus, mut branch, mut gen) = (None, None, None);

    while let Some(t) = p.next() {
        match &t.tok {
            Tok::Ident(kw) if kw == "function" => {
                // function mpc = name
                let rest: Vec<Token> = (0..3).filter_map(|_| p.next()).collect();
                if let [_, Token { tok: Tok::Eq, .. }, Token { tok: Tok::Ident(n), .. }] = rest.as_slice() {
                    name = n.clone();
                }
                p.skip_statement();
            }
            Tok::Ident(field) if field.starts_with("mpc.") => {
                if !matches!(p.peek(), Some(Token { tok: Tok::Eq, .. })) {
                    p.skip_statement();
                    continue;
                }
                p.next();
                let value = p.value(&t)?;
                let key = &field[4..];
                match (key, value) {
                    ("baseMVA", Value::Scalar(c)) => base = Some((c.value, t.clone())),
                    ("bus", Value::Matrix(m)) => bus = Some((m, t.clone())),
                    ("branch", Value::Matrix(m)) => branch = Some((m, t.clone())),
                    ("gen", Value::Matrix(m)) => gen = Some((m, t.clone())),
                    ("baseMVA" | "bus" | "branch" | "gen", _) => {
                        return Err(syntax(t.line, t.col, format!("mpc.{key} has the wrong shape")))
                    }
                    ("version", _) => {}
                    _ => warnings.push(format!("line {}: ignoring mpc.{key}", t.line)),
                }
            }
            Tok::Newline | Tok::Semi => {}
            _ => p.skip_statement(),
        }
    }

    let eof = Token {
        tok: Tok::Newline,
        line: text.lines().count().max(1),
        col: 1,
    };
    let (base_mva, base_tok) = base.ok_or_else(|| syntax(eof.line, 1, "missing mpc.baseMVA"))?;
    if !(base_mva > 0.0) {
        return Err(syntax(base_tok.line, base_tok.col, "mpc.baseMVA must be positive"));
    }
    let (bus_t, bus_tok) = bus.ok_or_else(|| syntax(eof.line, 1, "missing mpc.bus"))?;
    let (branch_t, branch_tok) = branch.ok_or_else(|| syntax(eof.line, 1, "missing mpc.branch"))?;

    let width = require_width("bus", &bus_t, 9, &bus_tok)?;
    warnings.extend(ignored_columns("bus", &BUS_COLUMNS, &BUS_USED, width));
    let mut buses = Vec::with_capacity(bus_t.rows.len());
    for row in &bus_t.rows {
        let kind = match row[1].value {
            1.0 => BusKind::Pq,
            2.0 => BusKind::Pv,
            3.0 => BusKind::Slack,
            t => {
                return Err(syntax(
                    row[1].line,
                    row[1].col,
                    format!("unsupported bus type {t} (isolated buses are not supported)"),
                ))
            }
        };
        let mut b = Bus::new(bus_id(row[0])?, kind);
        b.pd = row[2].value / base_mva;
        b.qd = row[3].value / base_mva;
        b.gs = row[4].value / base_mva;
        b.bs = row[5].value / base_mva;
        b.vm = row[7].value;
        b.va = row[8].value.to_radians();
        buses.push(b);
    }

    let mut regulated = vec![false; buses.len()];
    if let Some((gen_t, gen_tok)) = gen {
        let width = require_width("gen", &gen_t, 6, &gen_tok)?;
        warnings.extend(ignored_columns("gen", &GEN_COLUMNS, &GEN_USED, width));
        for row in &gen_t.rows {
            if width > 7 && row[7].value <= 0.0 {
                warnings.push(format!("line {}: generator out of service, skipped", row[0].line));
                continue;
            }
            let id = bus_id(row[0])?;
            let i = buses
                .iter()
                .position(|b| b.id == id)
                .ok_or_else(|| syntax(row[0].line, row[0].col, format!("generator at unknown bus {id}")))?;
            buses[i].pg += row[1].value / base_mva;
            buses[i].qg += row[2].value / base_mva;
            if buses[i].kind != BusKind::Pq {
                buses[i].vset = row[5].value;
                regulated[i] = true;
            }
        }
    }
    for (b, reg) in buses.iter_mut().zip(&regulated) {
        if b.kind != BusKind::Pq && !reg {
            warnings.push(format!("bus {} has no in-service generator; using VM as its setpoint", b.id));
            b.vset = b.vm;
        }
    }

    let width = require_width("branch", &branch_t, 4, &branch_tok)?;
    warnings.extend(ignored_columns("branch", &BRANCH_COLUMNS, &BRANCH_USED, width));
    let cell = |row: &[Cell], c: usize, default: f64| row.get(c).map_or(default, |x| x.value);
    let mut branches = Vec::with_capacity(branch_t.rows.len());
    for row in &branch_t.rows {
        if cell(row, 10, 1.0) <= 0.0 {
            warnings.push(format!("line {}: branch out of service, skipped", row[0].line));
            continue;
        }
        if cell(row, 9, 0.0) != 0.0 {
            warnings.push(format!("line {}: phase shift is not supported and was ignored", row[0].line));
        }
        let tap = cell(row, 8, 0.0);
        let br = Branch::new(bus_id(row[0])?, bus_id(row[1])?, row[2].value, row[3].value)
            .with_charging(cell(row, 4, 0.0))
            .with_tap(if tap == 0.0 { 1.0 } else { tap });
        branches.push(br);
    }

    let case = NetworkCase::new(name, base_mva, buses, branches)?;
    Ok(ParsedCase {
        case,
        uncertainty: None,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE: &str = "\
function mpc = tiny
% two buses
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1.02\t0\t230\t1\t1.1\t0.9;
\t2\t1\t50\t20\t0\t10\t1\t1\t-5\t230\t1\t1.1\t0.9;
];
mpc.gen = [
\t1\t0\t0\t300\t-300\t1.02\t100\t1\t250\t10;
];
mpc.branch = [
\t1\t2\t0.01\t0.1\t0.02\t250\t250\t250\t0\t0\t1\t-360\t360;
];
mpc.gencost = [2 0 0 3 0.01 40 0];
";

    #[test]
    fn reads_tiny_case() {
        let parsed = parse(CASE).unwrap();
        let c = &parsed.case;
        assert_eq!(c.name(), "tiny");
        assert_eq!(c.base_mva(), 100.0);
        assert_eq!(c.n_buses(), 2);
        let b2 = c.bus(2).unwrap();
        assert_eq!((b2.pd, b2.qd, b2.bs), (0.5, 0.2, 0.1));
        assert!((b2.va + 5f64.to_radians()).abs() < 1e-15);
        assert_eq!(c.bus(1).unwrap().vset, 1.02);
        let br = &c.branches()[0];
        assert_eq!((br.r, br.x, br.b, br.tap), (0.01, 0.1, 0.02, 1.0));
        assert!(parsed.warnings.iter().any(|w| w.contains("mpc.gencost")));
        assert!(parsed.warnings.iter().any(|w| w.contains("BUS_AREA")));
    }

    #[test]
    fn ragged_row_reports_position() {
        let text = CASE.replace("\t2\t1\t50\t20\t0\t10\t1\t1\t-5\t230\t1\t1.1\t0.9;", "\t2\t1\t50\t20;");
        match parse(&text) {
            Err(CaseError::Syntax { line, column, .. }) => assert_eq!((line, column), (7, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn isolated_bus_rejected() {
        let text = CASE.replace("\t2\t1\t50", "\t2\t4\t50");
        assert!(matches!(parse(&text), Err(CaseError::Syntax { line: 7, .. })));
    }

    #[test]
    fn malformed_number() {
        let text = CASE.replace("0.01\t0.1", "0.01\t0.1.2");
        assert!(matches!(parse(&text), Err(CaseError::Syntax { line: 13, .. })));
    }

    #[test]
    fn out_of_service_branch_skipped() {
        let text = CASE.replace(
            "\t1\t2\t0.01\t0.1\t0.02\t250\t250\t250\t0\t0\t1\t-360\t360;",
            "\t1\t2\t0.01\t0.1\t0.02\t250\t250\t250\t0\t0\t1\t-360\t360;\n\t1\t2\t0.02\t0.2\t0\t0\t0\t0\t0\t0\t0\t-360\t360;",
        );
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed.case.branches().len(), 1);
        assert!(parsed.warnings.iter().any(|w| w.contains("out of service")));
    }
}
