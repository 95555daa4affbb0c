//! Input documents. A `.jsonl` file holds one JSON object per line, either
//! a corpus example `{"problem", "equation"}` or `{"text"}`; any other
//! file is plain text with one document per line. Blank lines are skipped.

use std::path::Path;

use serde_json::Value;
use treemath_core::corpus::Example;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Example(Example),
    Text(String),
}

impl Record {
    /// The full document used for training.
    pub fn document(&self) -> String {
        match self {
            Record::Example(e) => e.document(),
            Record::Text(t) => t.clone(),
        }
    }

    /// What generation is conditioned on.
    pub fn prompt(&self) -> String {
        match self {
            Record::Example(e) => e.prompt(),
            Record::Text(t) => t.clone(),
        }
    }

    /// The reference a prediction is scored against.
    pub fn gold(&self) -> String {
        match self {
            Record::Example(e) => e.gold(),
            Record::Text(t) => t.clone(),
        }
    }
}

/// A record with the 1-based line it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Located {
    pub line: usize,
    pub record: Record,
}

fn parse_json_line(line: &str) -> Result<Record, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let field = |k: &str| value.get(k).and_then(Value::as_str).map(str::to_owned);
    match (field("problem"), field("equation"), field("text")) {
        (Some(problem), Some(equation), _) => Ok(Record::Example(Example { problem, equation })),
        (_, _, Some(text)) => Ok(Record::Text(text)),
        _ => Err("expected an object with \"problem\" and \"equation\", or \"text\"".into()),
    }
}

pub fn parse_records(raw: &str, jsonl: bool, origin: &str) -> Result<Vec<Located>, CliError> {
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = if jsonl {
            parse_json_line(line).map_err(|e| CliError::Data(format!("{origin}:{}: {e}", i + 1)))?
        } else {
            Record::Text(line.to_owned())
        };
        out.push(Located { line: i + 1, record });
    }
    Ok(out)
}

pub fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

pub fn read_records(path: &Path) -> Result<Vec<Located>, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))?;
    parse_records(&raw, is_jsonl(path), &path.display().to_string())
}

pub fn write_examples(path: &Path, examples: &[Example]) -> Result<(), CliError> {
    let mut out = String::new();
    for e in examples {
        out.push_str(&serde_json::to_string(e).expect("example serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::User(format!("cannot write {}: {e}", path.display())))
}
