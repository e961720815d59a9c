//! Line-oriented text format for cylinder sets.
//!
//! One member per line. Binary strings are written as `0`/`1` digits, family
//! prefixes as `|`-separated permutation tables (`1 0 | 3 0 2 1`). The empty
//! prefix is `λ`. Blank lines and `#` comments are ignored. A leading
//! `.kind family` line selects family prefixes; binary is the default.

use std::fmt::Write;

use thiserror::Error;

use super::{BinaryCylinderSet, BinaryString, EncodingFunction, FamilyCylinderSet, FamilyPrefix};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnySet {
    Binary(BinaryCylinderSet),
    Family(FamilyCylinderSet),
}

fn strip(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

pub fn parse_set(text: &str) -> Result<AnySet, TextError> {
    let mut family = false;
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(kind) = line.strip_prefix(".kind") {
            match kind.trim() {
                "family" => family = true,
                "binary" => family = false,
                other => {
                    return Err(TextError::Parse { line: i + 1, message: format!("unknown kind {other:?}") })
                }
            }
            continue;
        }
        lines.push((i + 1, line));
    }
    if family {
        let mut set = FamilyCylinderSet::new();
        for (line, body) in lines {
            set.insert(parse_family_prefix(body).map_err(|message| TextError::Parse { line, message })?);
        }
        Ok(AnySet::Family(set))
    } else {
        let mut set = BinaryCylinderSet::new();
        for (line, body) in lines {
            let s = body.parse::<BinaryString>().map_err(|e| TextError::Parse { line, message: e.to_string() })?;
            set.insert(s);
        }
        Ok(AnySet::Binary(set))
    }
}

pub fn parse_family_prefix(body: &str) -> Result<FamilyPrefix, String> {
    let body = body.trim();
    if body == "λ" || body == "-" {
        return Ok(FamilyPrefix::empty());
    }
    let mut entries = Vec::new();
    for (k, part) in body.split('|').enumerate() {
        let table = part
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|e| format!("bad table entry {t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let e = EncodingFunction::new(k as u32 + 1, table).map_err(|e| e.to_string())?;
        entries.push(e);
    }
    FamilyPrefix::new(entries).map_err(|e| e.to_string())
}

pub fn write_binary_set(set: &BinaryCylinderSet) -> String {
    let mut out = String::new();
    for s in set.members() {
        writeln!(out, "{s}").unwrap();
    }
    out
}

pub fn write_family_set(set: &FamilyCylinderSet) -> String {
    let mut out = String::from(".kind family\n");
    for s in set.members() {
        writeln!(out, "{s}").unwrap();
    }
    out
}
