//! Markdown, CSV and JSON renderings of tables and reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::check::Report;
use crate::config::Format;
use crate::error::CliResult;
use crate::table::{Check, Table};

/// Largest denominator tried by [`exact_hint`].
pub const HINT_MAX_DENOMINATOR: i64 = 120;
pub const HINT_TOL: f64 = 1e-9;

/// `x` to 15 significant digits, trailing zeros dropped. Positional
/// notation for magnitudes in `[1e-5, 1e15)`, scientific otherwise.
pub fn significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        trim_zeros(format!("{:.*}", (14 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// The value [`significant`] prints, as a number.
pub fn rounded(x: f64) -> f64 {
    significant(x).parse().unwrap_or(x)
}

/// `p/q` with the smallest `q ≤ 120` within 1e-9 of `x`.
pub fn exact_hint(x: f64) -> Option<String> {
    if !x.is_finite() {
        return None;
    }
    (1..=HINT_MAX_DENOMINATOR).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() <= HINT_TOL).then(|| {
            let p = p as i64;
            if q == 1 {
                p.to_string()
            } else {
                format!("{p}/{q}")
            }
        })
    })
}

fn cell(x: f64) -> String {
    let v = significant(x);
    match exact_hint(x) {
        Some(h) if h != v => format!("{v} ({h})"),
        _ => v,
    }
}

fn times_text(times: &[f64]) -> String {
    times
        .iter()
        .map(|t| significant(*t))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn render_table(t: &Table, format: Format) -> CliResult<String> {
    match format {
        Format::Markdown => Ok(table_markdown(t)),
        Format::Csv => table_csv(t),
        Format::Structured => Ok(to_json(&StructuredTable::from(t))),
    }
}

pub fn render_report(r: &Report, format: Format) -> CliResult<String> {
    match format {
        Format::Markdown => Ok(report_markdown(r)),
        Format::Csv => checks_csv(&r.checks),
        Format::Structured => Ok(to_json(&StructuredReport::from(r))),
    }
}

fn table_markdown(t: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "## {} / observer {} at t = {}\n",
        t.scenario,
        t.observer,
        times_text(&t.times)
    );
    let mut header = String::from("| history |");
    let mut rule = String::from("|---|");
    for m in &t.methods {
        let _ = write!(header, " {} |", m.name());
        rule.push_str("---|");
    }
    let _ = writeln!(out, "{header}\n{rule}");
    for r in &t.rows {
        let _ = write!(out, "| {} |", r.labels.join("; "));
        for v in &r.values {
            let _ = write!(out, " {} |", cell(*v));
        }
        out.push('\n');
    }
    if !t.methods.is_empty() {
        let _ = write!(out, "| **sum** |");
        for s in &t.sums {
            let _ = write!(out, " {} |", significant(*s));
        }
        out.push('\n');
    }
    if !t.checks.is_empty() {
        out.push('\n');
        out.push_str(&checks_markdown(&t.checks));
    }
    out
}

fn checks_markdown(checks: &[Check]) -> String {
    let mut out = String::from(
        "| check | subject | deviation | tolerance | status | note |\n|---|---|---|---|---|---|\n",
    );
    for c in checks {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            c.name,
            c.subject,
            c.deviation
                .map_or("-".into(), |d| format!("{:.3e}", d + 0.0)),
            significant(c.tolerance),
            if c.passed { "pass" } else { "FAIL" },
            c.note.as_deref().unwrap_or("")
        );
    }
    out
}

fn report_markdown(r: &Report) -> String {
    format!(
        "## checks for {} at step {}\n\n{}\n{}\n",
        r.scenario,
        significant(r.step),
        checks_markdown(&r.checks),
        if r.passed() {
            "all checks pass"
        } else {
            "some checks FAIL"
        }
    )
}

fn table_csv(t: &Table) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["history", "method", "probability", "exact_hint"])
        .map_err(csv_err)?;
    for r in &t.rows {
        let history = r.labels.join(";");
        for (m, v) in t.methods.iter().zip(&r.values) {
            let hint = exact_hint(*v).unwrap_or_default();
            w.write_record([history.as_str(), m.name(), &significant(*v), &hint])
                .map_err(csv_err)?;
        }
    }
    for (m, s) in t.methods.iter().zip(&t.sums) {
        w.write_record(["sum", m.name(), &significant(*s), ""])
            .map_err(csv_err)?;
    }
    finish_csv(w)
}

fn checks_csv(checks: &[Check]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "check",
        "subject",
        "deviation",
        "tolerance",
        "status",
        "note",
    ])
    .map_err(csv_err)?;
    for c in checks {
        w.write_record([
            c.name.as_str(),
            &c.subject,
            &c.deviation.map_or(String::new(), |d| format!("{d:e}")),
            &significant(c.tolerance),
            if c.passed { "pass" } else { "fail" },
            c.note.as_deref().unwrap_or(""),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct StructuredCheck {
    name: String,
    subject: String,
    deviation: Option<f64>,
    tolerance: f64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

impl From<&Check> for StructuredCheck {
    fn from(c: &Check) -> Self {
        Self {
            name: c.name.clone(),
            subject: c.subject.clone(),
            deviation: c.deviation,
            tolerance: c.tolerance,
            passed: c.passed,
            note: c.note.clone(),
        }
    }
}

#[derive(Serialize)]
struct StructuredRow {
    history: Vec<String>,
    probabilities: BTreeMap<&'static str, f64>,
    exact_hints: BTreeMap<&'static str, String>,
}

#[derive(Serialize)]
struct StructuredTable {
    scenario: String,
    observer: String,
    times: Vec<f64>,
    methods: Vec<&'static str>,
    rows: Vec<StructuredRow>,
    sums: BTreeMap<&'static str, f64>,
    checks: Vec<StructuredCheck>,
    passed: bool,
}

impl From<&Table> for StructuredTable {
    fn from(t: &Table) -> Self {
        let names: Vec<&'static str> = t.methods.iter().map(|m| m.name()).collect();
        Self {
            scenario: t.scenario.clone(),
            observer: t.observer.clone(),
            times: t.times.clone(),
            methods: names.clone(),
            rows: t
                .rows
                .iter()
                .map(|r| StructuredRow {
                    history: r.labels.clone(),
                    probabilities: names
                        .iter()
                        .copied()
                        .zip(r.values.iter().map(|v| rounded(*v)))
                        .collect(),
                    exact_hints: names
                        .iter()
                        .zip(&r.values)
                        .filter_map(|(m, v)| exact_hint(*v).map(|h| (*m, h)))
                        .collect(),
                })
                .collect(),
            sums: names
                .iter()
                .copied()
                .zip(t.sums.iter().map(|s| rounded(*s)))
                .collect(),
            checks: t.checks.iter().map(StructuredCheck::from).collect(),
            passed: t.passed(),
        }
    }
}

#[derive(Serialize)]
struct StructuredReport {
    scenario: String,
    step: f64,
    checks: Vec<StructuredCheck>,
    passed: bool,
}

impl From<&Report> for StructuredReport {
    fn from(r: &Report) -> Self {
        Self {
            scenario: r.scenario.clone(),
            step: r.step,
            checks: r.checks.iter().map(StructuredCheck::from).collect(),
            passed: r.passed(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(significant(1.0 / 24.0), "0.0416666666666667");
        assert_eq!(significant(0.35), "0.35");
        assert_eq!(significant(1.0), "1");
        assert_eq!(significant(0.0), "0");
        assert_eq!(significant(2.0 / 3.0), "0.666666666666667");
        assert_eq!(significant(1.5e-13), "1.5e-13");
        assert_eq!(significant(-2.5e-7), "-2.5e-7");
        assert_eq!(significant(0.999_999_999_999_999_9), "1");
        for x in [1.0 / 3.0, 0.123_456_789_012_345_7, 7.0e-6, 12345.678] {
            let back: f64 = significant(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-14, "{x}");
        }
    }

    #[test]
    fn hints_use_the_smallest_denominator() {
        assert_eq!(exact_hint(1.0 / 24.0).as_deref(), Some("1/24"));
        assert_eq!(exact_hint(2.0 / 6.0).as_deref(), Some("1/3"));
        assert_eq!(exact_hint(0.5 + 5e-10).as_deref(), Some("1/2"));
        assert_eq!(exact_hint(3e-13).as_deref(), Some("0"));
        assert_eq!(exact_hint(1.0).as_deref(), Some("1"));
        assert_eq!(exact_hint(1.0 / 121.0), None);
        assert_eq!(exact_hint(0.5 + 1e-8), None);
        assert_eq!(exact_hint(1.0 / 120.0).as_deref(), Some("1/120"));
    }

    #[test]
    fn cells_skip_redundant_hints() {
        assert_eq!(cell(0.5), "0.5 (1/2)");
        assert_eq!(cell(1.0), "1");
        assert_eq!(cell(0.0), "0");
        assert_eq!(cell(0.1234), "0.1234");
    }
}
