use std::fmt::Write;

use serde_json::Value;

use crate::args::Format;
use crate::commands::Table;
use seqmem::Error;

pub fn render(doc: &Value, table: Option<&Table>, format: Format) -> Result<String, Error> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc)?;
            s.push('\n');
            s
        }
        Format::Csv => match table {
            Some(t) => csv_text(&t.header, &t.rows)?,
            None => {
                let (header, row) = flatten_row(doc);
                csv_text(&header, &[row])?
            }
        },
        Format::Human => human(doc, table),
    })
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Dotted keys for nested objects; arrays stay as JSON text.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn flatten_row(doc: &Value) -> (Vec<String>, Vec<String>) {
    let mut pairs = Vec::new();
    flatten("", doc, &mut pairs);
    pairs.into_iter().unzip()
}

fn human(doc: &Value, table: Option<&Table>) -> String {
    let mut pairs = Vec::new();
    flatten("", doc, &mut pairs);
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in &pairs {
        if v.len() > 120 {
            continue;
        }
        let _ = writeln!(s, "{k:<width$}  {v}");
    }
    if let Some(t) = table {
        let mut widths: Vec<usize> = t.header.iter().map(String::len).collect();
        for r in &t.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        s.push('\n');
        for line in std::iter::once(&t.header).chain(&t.rows) {
            let cells: Vec<String> = line.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(s, "{}", cells.join("  ").trim_end());
        }
    }
    s
}
