//! Instance file format, version 1.
//!
//! A JSON Lines text file. Line 1 is the header object:
//!
//! ```text
//! {"format_version":1,"n_vars":156,"family":"3S","n_swap_layers":3,"seed":42,
//!  "term_counts":{"1":156,"2":..,"3":..},"provenance":"..."}
//! ```
//!
//! `format_version` and `n_vars` are required; `family`, `n_swap_layers`,
//! `seed`, `term_counts` and `provenance` are optional. Every following
//! non-empty line is one term:
//!
//! ```text
//! {"arity":2,"vars":[0,1],"coeff":-1.2345678901234567e0}
//! ```
//!
//! Coefficients are written with 17 significant digits, which round-trips
//! every double. Terms are written in canonical order; readers accept any
//! order and canonicalize, but reject duplicate supports.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HuboError, Result};
use crate::model::{validate_instance, HuboInstance, InstanceDraft, InstanceMetadata, Violation};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    n_vars: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_swap_layers: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    term_counts: Option<BTreeMap<String, usize>>,
    #[serde(default)]
    provenance: String,
}

#[derive(Debug, Deserialize)]
struct TermRecord {
    arity: usize,
    vars: Vec<usize>,
    coeff: f64,
}

/// Formats a double with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn serialize_instance(instance: &HuboInstance) -> String {
    let meta = instance.metadata();
    let counts = instance.term_counts();
    let header = Header {
        format_version: FORMAT_VERSION,
        n_vars: instance.n_vars(),
        family: meta.family.clone(),
        n_swap_layers: meta.n_swap_layers,
        seed: meta.seed,
        term_counts: Some(
            counts
                .iter()
                .enumerate()
                .map(|(i, &c)| ((i + 1).to_string(), c))
                .collect(),
        ),
        provenance: meta.provenance.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for t in instance.terms() {
        let vars: Vec<String> = t.vars().iter().map(u32::to_string).collect();
        out.push_str(&format!(
            "{{\"arity\":{},\"vars\":[{}],\"coeff\":{}}}\n",
            t.arity(),
            vars.join(","),
            format_f64(t.coeff())
        ));
    }
    out
}

pub fn deserialize_instance(text: &str) -> Result<HuboInstance> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| HuboError::parse("line 1", "empty instance file"))?;
    let header: Header = serde_json::from_str(first).map_err(|e| HuboError::parse("line 1 (header)", e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(HuboError::parse(
            "line 1, field format_version",
            format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                header.format_version
            ),
        ));
    }
    if header.n_vars == 0 {
        return Err(HuboError::parse("line 1, field n_vars", "must be positive"));
    }
    let mut draft = InstanceDraft::new(header.n_vars);
    let mut line_of = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let rec: TermRecord =
            serde_json::from_str(line).map_err(|e| HuboError::parse(format!("line {lineno}"), e.to_string()))?;
        if rec.arity != rec.vars.len() {
            return Err(HuboError::parse(
                format!("line {lineno}, field arity"),
                format!("arity {} but {} indices", rec.arity, rec.vars.len()),
            ));
        }
        draft.terms.push((rec.vars, rec.coeff));
        line_of.push(lineno);
    }
    for v in validate_instance(&draft).violations {
        let (term, field, msg) = match v {
            Violation::BadArity { term, arity } => (term, "arity", format!("arity {arity} outside 1..=3")),
            Violation::RepeatedIndex { term } => (term, "vars", "repeated index".to_string()),
            Violation::OutOfRange { term, index, n_vars } => {
                (term, "vars", format!("index {index} >= n_vars {n_vars}"))
            }
            Violation::NonFiniteCoefficient { term } => (term, "coeff", "non-finite coefficient".to_string()),
            Violation::ZeroCoefficient { term } => (term, "coeff", "zero coefficient".to_string()),
            Violation::DuplicateVars { second, vars, .. } => (second, "vars", format!("duplicate support {vars:?}")),
            Violation::NonCanonicalOrder { .. } => continue,
        };
        return Err(HuboError::parse(format!("line {}, field {field}", line_of[term]), msg));
    }
    let metadata = InstanceMetadata {
        family: header.family,
        seed: header.seed,
        n_swap_layers: header.n_swap_layers,
        provenance: header.provenance,
    };
    let instance = HuboInstance::new(header.n_vars, draft.terms, metadata)?;
    if let Some(declared) = header.term_counts {
        let actual = instance.term_counts();
        for (arity, &count) in &declared {
            let got = arity
                .parse::<usize>()
                .ok()
                .filter(|a| (1..=3).contains(a))
                .map(|a| actual[a - 1])
                .ok_or_else(|| HuboError::parse("line 1, field term_counts", format!("unknown arity key '{arity}'")))?;
            if got != count {
                return Err(HuboError::parse(
                    "line 1, field term_counts",
                    format!("declares {count} terms of arity {arity} but the file has {got}"),
                ));
            }
        }
    }
    Ok(instance)
}

pub fn write_instance(path: impl AsRef<Path>, instance: &HuboInstance) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serialize_instance(instance)).map_err(|e| HuboError::io(path, e))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<HuboInstance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HuboError::io(path, e))?;
    deserialize_instance(&text).map_err(|e| match e {
        HuboError::Parse { context, message } => HuboError::Parse {
            context: format!("{}: {context}", path.display()),
            message,
        },
        other => other,
    })
}
