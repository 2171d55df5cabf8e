//! Reader and writer for the numeric subset of the MATPOWER case format.
//!
//! Only `mpc.baseMVA`, `mpc.bus`, `mpc.gen` and `mpc.branch` are read. Other
//! `mpc.*` assignments (gencost, names, extensions) are skipped with a
//! warning. Expressions, `function` bodies with code, and comments inside
//! matrix rows beyond a trailing `%` are not supported.

use std::collections::HashSet;
use std::fmt::Write as _;

use log::warn;

use super::{exact_preimage, BranchRecord, BusKind, BusRecord, GeneratorRecord, NetworkCase};
use crate::error::CaseError;

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 11;

struct Row {
    line: usize,
    values: Vec<f64>,
}

#[derive(Default)]
struct RawCase {
    base_mva: Option<f64>,
    bus: Option<Vec<Row>>,
    gen: Option<Vec<Row>>,
    branch: Option<Vec<Row>>,
}

enum Scan {
    Outside,
    Matrix { name: &'static str, rows: Vec<Row> },
    Skip { close: char },
}

fn syntax(line: usize, message: impl Into<String>) -> CaseError {
    CaseError::Syntax {
        line,
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

/// Parses matrix body text into rows. Returns true once the closing `]` is seen.
fn scan_matrix_text(text: &str, line: usize, rows: &mut Vec<Row>) -> Result<bool, CaseError> {
    let (body, closed) = match text.find(']') {
        Some(pos) => {
            let rest = text[pos + 1..].trim().trim_end_matches(';').trim();
            if !rest.is_empty() {
                return Err(syntax(line, format!("unexpected text after ']': {rest}")));
            }
            (&text[..pos], true)
        }
        None => (text, false),
    };
    for chunk in body.split(';') {
        let tokens: Vec<&str> = chunk
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            continue;
        }
        let values = tokens
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| syntax(line, format!("invalid number '{t}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(Row { line, values });
    }
    Ok(closed)
}

fn scan(text: &str) -> Result<RawCase, CaseError> {
    let mut raw = RawCase::default();
    let mut state = Scan::Outside;
    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(full_line);
        state = match state {
            Scan::Skip { close } => {
                if line.contains(close) {
                    Scan::Outside
                } else {
                    Scan::Skip { close }
                }
            }
            Scan::Matrix { name, mut rows } => {
                if scan_matrix_text(line, line_no, &mut rows)? {
                    store_matrix(&mut raw, name, rows);
                    Scan::Outside
                } else {
                    Scan::Matrix { name, rows }
                }
            }
            Scan::Outside => {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with("function") {
                    continue;
                }
                let Some(stmt) = trimmed.strip_prefix("mpc.") else {
                    return Err(syntax(line_no, format!("unexpected statement '{trimmed}'")));
                };
                let Some((lhs, rhs)) = stmt.split_once('=') else {
                    return Err(syntax(line_no, "expected '=' in assignment"));
                };
                let name = lhs.trim();
                let rhs = rhs.trim();
                match name {
                    "baseMVA" => {
                        let value = rhs.trim_end_matches(';').trim();
                        let base = value
                            .parse::<f64>()
                            .map_err(|_| syntax(line_no, format!("invalid baseMVA '{value}'")))?;
                        if !(base > 0.0 && base.is_finite()) {
                            return Err(syntax(line_no, "baseMVA must be positive"));
                        }
                        raw.base_mva = Some(base);
                        Scan::Outside
                    }
                    "bus" | "gen" | "branch" => {
                        let name: &'static str = match name {
                            "bus" => "bus",
                            "gen" => "gen",
                            _ => "branch",
                        };
                        let Some(body) = rhs.strip_prefix('[') else {
                            return Err(syntax(line_no, format!("mpc.{name} must be a matrix")));
                        };
                        let mut rows = Vec::new();
                        if scan_matrix_text(body, line_no, &mut rows)? {
                            store_matrix(&mut raw, name, rows);
                            Scan::Outside
                        } else {
                            Scan::Matrix { name, rows }
                        }
                    }
                    "version" => Scan::Outside,
                    other => {
                        warn!("ignoring mpc.{other} (line {line_no})");
                        let open = rhs.chars().next();
                        match open {
                            Some('[') if !rhs.contains(']') => Scan::Skip { close: ']' },
                            Some('{') if !rhs.contains('}') => Scan::Skip { close: '}' },
                            _ => Scan::Outside,
                        }
                    }
                }
            }
        };
    }
    match state {
        Scan::Outside => Ok(raw),
        Scan::Matrix { name, .. } => Err(syntax(text.lines().count(), format!("unterminated matrix mpc.{name}"))),
        Scan::Skip { .. } => Err(syntax(text.lines().count(), "unterminated block")),
    }
}

fn store_matrix(raw: &mut RawCase, name: &'static str, rows: Vec<Row>) {
    match name {
        "bus" => raw.bus = Some(rows),
        "gen" => raw.gen = Some(rows),
        _ => raw.branch = Some(rows),
    }
}

fn integer_id(value: f64, line: usize, what: &str) -> Result<u32, CaseError> {
    if value.fract() != 0.0 || value < 1.0 || value > u32::MAX as f64 {
        return Err(syntax(line, format!("{what} must be a positive integer, got {value}")));
    }
    Ok(value as u32)
}

fn check_width(row: &Row, min: usize, name: &str) -> Result<(), CaseError> {
    if row.values.len() < min {
        return Err(syntax(
            row.line,
            format!(
                "mpc.{name} row has {} columns, expected at least {min}",
                row.values.len()
            ),
        ));
    }
    Ok(())
}

/// Parses MATPOWER case text into a per-unit [`NetworkCase`].
pub fn parse_matpower_case(text: &str) -> Result<NetworkCase, CaseError> {
    let raw = scan(text)?;
    let base_mva = raw.base_mva.ok_or(CaseError::MissingSection("baseMVA"))?;
    let bus_rows = raw.bus.ok_or(CaseError::MissingSection("bus"))?;
    let gen_rows = raw.gen.ok_or(CaseError::MissingSection("gen"))?;
    let branch_rows = raw.branch.ok_or(CaseError::MissingSection("branch"))?;

    let mut seen = HashSet::new();
    let mut buses = Vec::with_capacity(bus_rows.len());
    for row in &bus_rows {
        check_width(row, BUS_COLS, "bus")?;
        let v = &row.values;
        let id = integer_id(v[0], row.line, "bus id")?;
        if !seen.insert(id) {
            return Err(CaseError::DuplicateBus(id));
        }
        let kind = match v[1] as i64 {
            1 => BusKind::Pq,
            2 => BusKind::Pv,
            3 => BusKind::Slack,
            other => return Err(CaseError::UnsupportedBusType { bus: id, kind: other }),
        };
        buses.push(BusRecord {
            id,
            kind,
            p_load: v[2] / base_mva,
            q_load: v[3] / base_mva,
            g_shunt: v[4] / base_mva,
            b_shunt: v[5] / base_mva,
            v_init: v[7],
            theta_init: v[8].to_radians(),
            base_kv: v[9],
        });
    }

    let mut generators = Vec::with_capacity(gen_rows.len());
    for row in &gen_rows {
        check_width(row, GEN_COLS, "gen")?;
        let v = &row.values;
        let bus = integer_id(v[0], row.line, "generator bus")?;
        if !seen.contains(&bus) {
            return Err(CaseError::UnknownBus {
                bus,
                context: format!("generator at line {}", row.line),
            });
        }
        generators.push(GeneratorRecord {
            bus,
            p_set: v[1] / base_mva,
            q_init: v[2] / base_mva,
            q_max: v[3] / base_mva,
            q_min: v[4] / base_mva,
            v_set: v[5],
            in_service: v[7] > 0.0,
        });
    }

    let mut branches = Vec::with_capacity(branch_rows.len());
    for row in &branch_rows {
        check_width(row, BRANCH_COLS, "branch")?;
        let v = &row.values;
        let from = integer_id(v[0], row.line, "branch from-bus")?;
        let to = integer_id(v[1], row.line, "branch to-bus")?;
        for bus in [from, to] {
            if !seen.contains(&bus) {
                return Err(CaseError::UnknownBus {
                    bus,
                    context: format!("branch at line {}", row.line),
                });
            }
        }
        branches.push(BranchRecord {
            from,
            to,
            r: v[2],
            x: v[3],
            b_charging: v[4],
            tap: if v[8] == 0.0 { 1.0 } else { v[8] },
            shift: v[9].to_radians(),
            in_service: v[10] > 0.0,
        });
    }

    let slack_ids: HashSet<u32> = buses
        .iter()
        .filter(|b| b.kind == BusKind::Slack)
        .map(|b| b.id)
        .collect();
    if slack_ids.is_empty()
        || !slack_ids
            .iter()
            .all(|id| generators.iter().any(|g| g.in_service && g.bus == *id))
    {
        return Err(CaseError::NoSlackGenerator);
    }

    Ok(NetworkCase {
        base_mva,
        buses,
        generators,
        branches,
    })
}

/// Writes a case back out in MATPOWER format. Reading the result with
/// [`parse_matpower_case`] reproduces `case` field for field when every
/// per-unit value is a quotient by the base, as parsed values are. Columns not
/// carried by [`NetworkCase`] are written with neutral defaults.
pub fn write_matpower_case(case: &NetworkCase) -> String {
    let base = case.base_mva;
    let mw = |pu: f64| exact_preimage(pu, pu * base, |z| z / base);
    let deg = |rad: f64| exact_preimage(rad, rad.to_degrees(), f64::to_radians);
    let mut out = String::new();
    out.push_str("function mpc = case_export\n");
    out.push_str("mpc.version = '2';\n");
    let _ = writeln!(out, "mpc.baseMVA = {base:?};");
    out.push_str("%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n");
    out.push_str("mpc.bus = [\n");
    for b in &case.buses {
        let kind = match b.kind {
            BusKind::Pq => 1,
            BusKind::Pv => 2,
            BusKind::Slack => 3,
        };
        let _ = writeln!(
            out,
            "\t{}\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t1\t{:?}\t{:?}\t{:?}\t1\t1.1\t0.9;",
            b.id,
            kind,
            mw(b.p_load),
            mw(b.q_load),
            mw(b.g_shunt),
            mw(b.b_shunt),
            b.v_init,
            deg(b.theta_init),
            b.base_kv
        );
    }
    out.push_str("];\n\n");
    out.push_str("%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n");
    out.push_str("mpc.gen = [\n");
    for g in &case.generators {
        let _ = writeln!(
            out,
            "\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{}\t0\t0;",
            g.bus,
            mw(g.p_set),
            mw(g.q_init),
            mw(g.q_max),
            mw(g.q_min),
            g.v_set,
            base,
            u8::from(g.in_service)
        );
    }
    out.push_str("];\n\n");
    out.push_str("%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n");
    out.push_str("mpc.branch = [\n");
    for br in &case.branches {
        let _ = writeln!(
            out,
            "\t{}\t{}\t{:?}\t{:?}\t{:?}\t0\t0\t0\t{:?}\t{:?}\t{}\t-360\t360;",
            br.from,
            br.to,
            br.r,
            br.x,
            br.b_charging,
            br.tap,
            deg(br.shift),
            u8::from(br.in_service)
        );
    }
    out.push_str("];\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "\
function mpc = two_bus
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0 0 0 1 1.0 0 230 1 1.1 0.9;
    2 1 10 5 0 0 1 1.0 0 230 1 1.1 0.9;
];
mpc.gen = [
    1 0 0 300 -300 1.0 100 1 250 10;
];
mpc.branch = [
    1 2 0 0.1 0 250 250 250 0 0 1 -360 360;
];
mpc.gencost = [
    2 0 0 3 0.01 40 0;
];
";

    #[test]
    fn parses_two_bus_case() {
        let case = parse_matpower_case(TWO_BUS).unwrap();
        assert_eq!(case.base_mva, 100.0);
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.buses[0].kind, BusKind::Slack);
        assert!((case.buses[1].p_load - 0.1).abs() < 1e-15);
        assert!((case.buses[1].q_load - 0.05).abs() < 1e-15);
        assert_eq!(case.branches[0].tap, 1.0);
        assert_eq!(case.generators.len(), 1);
    }

    #[test]
    fn empty_gen_matrix_has_no_slack_generator() {
        let text = TWO_BUS.replace("    1 0 0 300 -300 1.0 100 1 250 10;\n", "");
        let err = parse_matpower_case(&text).unwrap_err();
        assert!(matches!(err, CaseError::NoSlackGenerator));
        assert_eq!(err.to_string(), "no slack generator");
    }

    #[test]
    fn out_of_service_slack_generator_is_rejected() {
        let text = TWO_BUS.replace("1.0 100 1 250 10", "1.0 100 0 250 10");
        assert!(matches!(parse_matpower_case(&text), Err(CaseError::NoSlackGenerator)));
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = TWO_BUS.replace("2 1 10 5", "2 1 1x0 5");
        match parse_matpower_case(&text) {
            Err(CaseError::Syntax { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("1x0"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_rows_are_rejected() {
        let text = TWO_BUS.replace("2 1 10 5 0 0 1 1.0 0 230 1 1.1 0.9", "2 1 10 5");
        assert!(matches!(
            parse_matpower_case(&text),
            Err(CaseError::Syntax { line: 6, .. })
        ));
    }

    #[test]
    fn unknown_bus_reference() {
        let text = TWO_BUS.replace("1 2 0 0.1", "1 7 0 0.1");
        assert!(matches!(
            parse_matpower_case(&text),
            Err(CaseError::UnknownBus { bus: 7, .. })
        ));
    }

    #[test]
    fn duplicate_bus_id() {
        let text = TWO_BUS.replace("2 1 10 5", "1 1 10 5");
        assert!(matches!(parse_matpower_case(&text), Err(CaseError::DuplicateBus(1))));
    }

    #[test]
    fn missing_matrix() {
        let text = TWO_BUS.replace("mpc.branch", "mpc.other");
        assert!(matches!(
            parse_matpower_case(&text),
            Err(CaseError::MissingSection("branch"))
        ));
    }

    #[test]
    fn unterminated_matrix() {
        let text = "mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 0 0 0 0 1 1 0 0 1 1 1;\n";
        assert!(matches!(parse_matpower_case(text), Err(CaseError::Syntax { .. })));
    }

    #[test]
    fn isolated_bus_type_is_unsupported() {
        let text = TWO_BUS.replace("2 1 10 5", "2 4 10 5");
        assert!(matches!(
            parse_matpower_case(&text),
            Err(CaseError::UnsupportedBusType { bus: 2, kind: 4 })
        ));
    }

    #[test]
    fn writer_output_parses_back_identically() {
        let case = parse_matpower_case(TWO_BUS).unwrap();
        let again = parse_matpower_case(&write_matpower_case(&case)).unwrap();
        assert_eq!(case, again);
    }
}
