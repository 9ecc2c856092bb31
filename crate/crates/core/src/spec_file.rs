//! TOML exchange format for [`CodeSpec`].
//!
//! ```toml
//! name = "repetition3"
//! n_physical = 3
//! standard_errors = ["III", "XII", "IXI", "IIX"]
//!
//! [logical_basis]
//! zero = [[0, 1.0, 0.0], [1, 0.0, 0.0], ...]
//! one = [[0, 0.0, 0.0], ..., [7, 1.0, 0.0]]
//! ```
//!
//! Each amplitude is an `[index, re, im]` triple. Indices left out are zero.
//! [`render_spec`] lists every index, with floats printed in shortest
//! round-trip form, so parsing the output reproduces the spec bit for bit.

use std::fmt::Write as _;

use nalgebra::DVector;
use toml::{Table, Value};

use crate::codes::{CodeSpec, PauliString};
use crate::error::{Error, Result};
use crate::hilbert::{StateVector, C64, ZERO};

/// Largest `n_physical` accepted from a file.
pub const MAX_PHYSICAL_QUBITS: usize = 12;

fn parse_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { field: field.into(), message: message.into() }
}

fn number(v: &Value, field: &str) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(parse_err(field, format!("expected a number, found {}", other.type_str()))),
    }
}

fn amplitudes(table: &Table, key: &str, dim: usize) -> Result<StateVector> {
    let field = format!("logical_basis.{key}");
    let list = table
        .get(key)
        .ok_or_else(|| parse_err(&field, "missing"))?
        .as_array()
        .ok_or_else(|| parse_err(&field, "expected an array of [index, re, im] triples"))?;
    let mut amps = DVector::from_element(dim, ZERO);
    let mut seen = vec![false; dim];
    for (i, entry) in list.iter().enumerate() {
        let f = format!("{field}[{i}]");
        let triple = entry
            .as_array()
            .filter(|t| t.len() == 3)
            .ok_or_else(|| parse_err(&f, "expected [index, re, im]"))?;
        let idx = triple[0]
            .as_integer()
            .filter(|&x| x >= 0 && (x as usize) < dim)
            .ok_or_else(|| parse_err(&f, format!("index must be an integer in 0..{dim}")))? as usize;
        if seen[idx] {
            return Err(parse_err(&f, format!("index {idx} listed twice")));
        }
        seen[idx] = true;
        amps[idx] = C64::new(number(&triple[1], &f)?, number(&triple[2], &f)?);
    }
    StateVector::unnormalized(amps, vec![2; dim.trailing_zeros() as usize])
}

/// Parses and validates a spec document.
pub fn parse_spec(text: &str) -> Result<CodeSpec> {
    let doc: Table = toml::from_str(text).map_err(|e| parse_err("document", e.message().to_string()))?;

    let name = doc
        .get("name")
        .ok_or_else(|| parse_err("name", "missing"))?
        .as_str()
        .ok_or_else(|| parse_err("name", "expected a string"))?
        .to_string();

    let n_physical = doc
        .get("n_physical")
        .ok_or_else(|| parse_err("n_physical", "missing"))?
        .as_integer()
        .ok_or_else(|| parse_err("n_physical", "expected an integer"))?;
    if !(2..=MAX_PHYSICAL_QUBITS as i64).contains(&n_physical) {
        return Err(parse_err("n_physical", format!("{n_physical} is outside 2..={MAX_PHYSICAL_QUBITS}")));
    }
    let n_physical = n_physical as usize;

    let errors = doc
        .get("standard_errors")
        .ok_or_else(|| parse_err("standard_errors", "missing"))?
        .as_array()
        .ok_or_else(|| parse_err("standard_errors", "expected an array of strings"))?;
    let standard_errors = errors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let f = format!("standard_errors[{i}]");
            let s = v.as_str().ok_or_else(|| parse_err(&f, "expected a string"))?;
            let p: PauliString = s.parse().map_err(|e| match e {
                Error::Parse { message, .. } => parse_err(&f, message),
                other => other,
            })?;
            if p.len() != n_physical {
                return Err(parse_err(&f, format!("`{s}` has {} labels, expected {n_physical}", p.len())));
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;

    let basis = doc
        .get("logical_basis")
        .ok_or_else(|| parse_err("logical_basis", "missing"))?
        .as_table()
        .ok_or_else(|| parse_err("logical_basis", "expected a table with `zero` and `one`"))?;
    let dim = 1usize << n_physical;
    let zero = amplitudes(basis, "zero", dim)?;
    let one = amplitudes(basis, "one", dim)?;
    for (key, state) in [("zero", &zero), ("one", &one)] {
        if !state.is_normalized() {
            return Err(parse_err(format!("logical_basis.{key}"), format!("squared norm is {}", state.norm_sqr())));
        }
    }

    let spec = CodeSpec { name, n_physical, logical_basis: [zero, one], standard_errors };
    spec.validate()?;
    Ok(spec)
}

fn render_float(x: f64) -> String {
    // `{:?}` is the shortest representation that parses back to the same bits.
    format!("{x:?}")
}

/// Renders a spec as a TOML document that [`parse_spec`] reads back exactly.
pub fn render_spec(spec: &CodeSpec) -> String {
    let mut out = String::new();
    writeln!(out, "name = {}", Value::String(spec.name.clone())).unwrap();
    writeln!(out, "n_physical = {}", spec.n_physical).unwrap();
    out.push_str("standard_errors = [\n");
    for e in &spec.standard_errors {
        writeln!(out, "  \"{e}\",").unwrap();
    }
    out.push_str("]\n\n[logical_basis]\n");
    for (key, state) in ["zero", "one"].iter().zip(&spec.logical_basis) {
        writeln!(out, "{key} = [").unwrap();
        for (i, a) in state.amplitudes().iter().enumerate() {
            writeln!(out, "  [{i}, {}, {}],", render_float(a.re), render_float(a.im)).unwrap();
        }
        out.push_str("]\n");
    }
    out
}
