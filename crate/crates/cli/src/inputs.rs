//! Textual inputs: vectors, tuples, ladders, brackets and group specs.

use std::path::Path;

use liegerm::lie::Bracket;
use liegerm::local_group::{LocalGroupSpec, MatrixAlgebra, Perturbation};

use crate::error::CliError;

pub fn parse_list(name: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::usage("parse", format!("--{name}: {s:?} is not a finite number")))
        })
        .collect()
}

/// `a,b;c,d;…` into vectors of equal length.
pub fn parse_tuple(name: &str, text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let out = text.split(';').map(|part| parse_list(name, part)).collect::<Result<Vec<_>, _>>()?;
    if out.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(CliError::usage("parse", format!("--{name}: entries differ in length")));
    }
    Ok(out)
}

pub fn parse_point(name: &str, text: &str) -> Result<[f64; 2], CliError> {
    match parse_list(name, text)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        v => Err(CliError::usage("parse", format!("--{name}: expected 2 coordinates, got {}", v.len()))),
    }
}

pub fn read_file(kind: &str, path: &str) -> Result<String, CliError> {
    if !Path::new(path).exists() {
        return Err(CliError::usage("missing-file", format!("{kind} file not found: {path}")));
    }
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage("missing-file", format!("cannot read {kind} file {path}: {e}")))
}

/// A built-in bracket name or a bracket file.
pub fn bracket(text: &str) -> Result<Bracket, CliError> {
    if let Ok(b) = Bracket::builtin(text) {
        return Ok(b);
    }
    if !text.contains('.') && !text.contains('/') {
        return Err(CliError::usage(
            "unknown-bracket",
            format!("{text:?} is neither a built-in bracket (zero, heisenberg, so3, sl2, affine1) nor a file path"),
        ));
    }
    Ok(Bracket::from_json(&read_file("bracket", text)?)?)
}

/// `bch:<bracket>`, `chart:<algebra>` or a JSON group-spec file, optionally perturbed.
pub fn group(text: &str, radius: f64, perturbation: Option<&str>, eps: f64) -> Result<LocalGroupSpec, CliError> {
    let base = if let Some(name) = text.strip_prefix("bch:") {
        LocalGroupSpec::bch(bracket(name)?, radius)?
    } else if let Some(name) = text.strip_prefix("chart:").or_else(|| text.strip_prefix("matrix_chart:")) {
        let alg = MatrixAlgebra::parse(name)
            .ok_or_else(|| CliError::usage("unknown-algebra", format!("unknown matrix algebra {name:?}")))?;
        LocalGroupSpec::matrix_chart(alg, radius)?
    } else {
        LocalGroupSpec::from_json(&read_file("group spec", text)?)?
    };
    match perturbation {
        None => Ok(base),
        Some(p) => Ok(LocalGroupSpec::perturbed(base, eps, perturbation_id(p)?)?),
    }
}

pub fn perturbation_id(name: &str) -> Result<Perturbation, CliError> {
    Perturbation::parse(name).ok_or_else(|| {
        CliError::usage(
            "unknown-perturbation",
            format!("unknown perturbation {name:?}; expected one of {:?}", Perturbation::NAMES),
        )
    })
}
