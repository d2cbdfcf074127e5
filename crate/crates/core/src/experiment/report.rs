//! Deterministic CSV/JSON output.
//!
//! Floats are written as `{:.16e}` (17 significant digits), keys appear in
//! declaration order and lines end in `\n`, so equal inputs give equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::distinguisher::{hypothesis_name, DistinguisherResult};
use super::scan::ScanRow;
use super::suite::{BoundReport, Relation};

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Text(String),
    Object(Vec<(String, Field)>),
}

impl Field {
    fn text(s: impl Into<String>) -> Field {
        Field::Text(s.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::invalid(format!("unknown format {s:?}, expected csv or json"))),
        }
    }
}

/// Anything that renders as one record.
pub trait Record {
    fn columns() -> Vec<String>;
    fn fields(&self) -> Vec<(String, Field)>;
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn csv_cell(out: &mut String, f: &Field) {
    match f {
        Field::Num(x) => out.push_str(&format_float(*x)),
        Field::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Field::Text(s) => {
            if s.contains([',', '"', '\n']) {
                out.push('"');
                out.push_str(&s.replace('"', "\"\""));
                out.push('"');
            } else {
                out.push_str(s);
            }
        }
        Field::Object(kv) => {
            let parts: Vec<String> = kv
                .iter()
                .map(|(k, v)| {
                    let mut cell = String::new();
                    csv_cell(&mut cell, v);
                    format!("{k}={cell}")
                })
                .collect();
            csv_cell(out, &Field::Text(parts.join(";")));
        }
    }
}

fn json_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn json_value(out: &mut String, f: &Field) {
    match f {
        Field::Num(x) if x.is_finite() => out.push_str(&format_float(*x)),
        Field::Num(_) => out.push_str("null"),
        Field::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Field::Text(s) => json_string(out, s),
        Field::Object(kv) => json_object(out, kv),
    }
}

fn json_object(out: &mut String, kv: &[(String, Field)]) {
    out.push('{');
    for (i, (k, v)) in kv.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        json_string(out, k);
        out.push_str(": ");
        json_value(out, v);
    }
    out.push('}');
}

/// One JSON object on a single line.
pub fn json_line<R: Record>(r: &R) -> String {
    let mut s = String::new();
    json_object(&mut s, &r.fields());
    s
}

pub fn render<R: Record>(records: &[R], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&R::columns().join(","));
            out.push('\n');
            for r in records {
                for (i, (_, f)) in r.fields().iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    csv_cell(&mut out, f);
                }
                out.push('\n');
            }
        }
        Format::Json => {
            out.push('[');
            for (i, r) in records.iter().enumerate() {
                out.push_str(if i == 0 { "\n  " } else { ",\n  " });
                json_object(&mut out, &r.fields());
            }
            out.push_str(if records.is_empty() { "]\n" } else { "\n]\n" });
        }
    }
    out
}

/// Write `records` to `path`.
pub fn emit_report<R: Record>(records: &[R], format: Format, path: &Path) -> Result<()> {
    std::fs::write(path, render(records, format)).map_err(|e| Error::io(path, e))
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn estimate_fields(r: &DistinguisherResult) -> Vec<(String, Field)> {
    vec![
        ("value".into(), Field::Num(r.estimate.value)),
        ("halfWidth".into(), Field::Num(r.estimate.half_width)),
        ("n".into(), Field::Int(r.estimate.n)),
        ("confidence".into(), Field::Num(r.estimate.confidence)),
    ]
}

impl Record for DistinguisherResult {
    fn columns() -> Vec<String> {
        cols(&[
            "hypothesis",
            "metric",
            "estimate",
            "theoreticalBound",
            "decision",
            "decisionThreshold",
        ])
    }

    fn fields(&self) -> Vec<(String, Field)> {
        vec![
            ("hypothesis".into(), Field::text(hypothesis_name(self.hypothesis))),
            ("metric".into(), Field::text(self.problem.metric())),
            ("estimate".into(), Field::Object(estimate_fields(self))),
            ("theoreticalBound".into(), Field::Num(self.theoretical_bound)),
            ("decision".into(), Field::text(hypothesis_name(self.decision))),
            ("decisionThreshold".into(), Field::Num(self.decision_threshold)),
        ]
    }
}

fn relation_text(r: Relation) -> String {
    match r {
        Relation::AtLeast => ">=".into(),
        Relation::Within(t) => format!("~{}", format_float(t)),
    }
}

impl Record for BoundReport {
    fn columns() -> Vec<String> {
        cols(&[
            "lemma",
            "parameters",
            "relation",
            "oracleValue",
            "boundValue",
            "errorBudget",
            "margin",
            "verdict",
        ])
    }

    fn fields(&self) -> Vec<(String, Field)> {
        let params = self
            .parameters
            .iter()
            .map(|(k, v)| (k.to_string(), Field::Num(*v)))
            .collect();
        vec![
            ("lemma".into(), Field::text(self.label)),
            ("parameters".into(), Field::Object(params)),
            ("relation".into(), Field::Text(relation_text(self.relation))),
            ("oracleValue".into(), Field::Num(self.oracle_value)),
            ("boundValue".into(), Field::Num(self.bound_value)),
            ("errorBudget".into(), Field::Num(self.error_budget)),
            ("margin".into(), Field::Num(self.margin)),
            ("verdict".into(), Field::text(self.verdict.name())),
        ]
    }
}

impl Record for ScanRow {
    fn columns() -> Vec<String> {
        cols(&[
            "eta",
            "d",
            "m",
            "T",
            "sigma",
            "hypothesis",
            "metric",
            "estimate",
            "halfWidth",
            "bound",
            "threshold",
            "decision",
            "error",
        ])
    }

    fn fields(&self) -> Vec<(String, Field)> {
        let mut f = vec![
            ("eta".into(), Field::Num(self.eta)),
            ("d".into(), Field::Int(self.d as u64)),
            ("m".into(), Field::Int(self.m as u64)),
            ("T".into(), Field::Num(self.period)),
            ("sigma".into(), Field::Num(self.sigma)),
            ("hypothesis".into(), Field::text(hypothesis_name(self.hypothesis))),
            ("metric".into(), Field::text(self.problem.metric())),
        ];
        match &self.outcome {
            Ok(r) => f.extend([
                ("estimate".into(), Field::Num(r.estimate.value)),
                ("halfWidth".into(), Field::Num(r.estimate.half_width)),
                ("bound".into(), Field::Num(r.theoretical_bound)),
                ("threshold".into(), Field::Num(r.decision_threshold)),
                ("decision".into(), Field::text(hypothesis_name(r.decision))),
                ("error".into(), Field::text("")),
            ]),
            Err(e) => f.extend([
                ("estimate".into(), Field::Num(f64::NAN)),
                ("halfWidth".into(), Field::Num(f64::NAN)),
                ("bound".into(), Field::Num(f64::NAN)),
                ("threshold".into(), Field::Num(f64::NAN)),
                ("decision".into(), Field::text("")),
                ("error".into(), Field::Text(e.clone())),
            ]),
        }
        f
    }
}
