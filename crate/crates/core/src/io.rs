//! Plain-text density matrices.
//!
//! ```text
//! # comments run to the end of the line
//! dim 2
//! weight 0.5            # optional, one per state
//! 0.5 0   0 0           # row-major (re, im) pairs, any line layout
//! 0 0     0.5 0
//! dim 2
//! ...
//! ```
//!
//! A file holds one or more states. Weights are either given for every state
//! or for none, in which case the ensemble is uniform.

use std::fmt::Write as _;
use std::path::Path;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, Ensemble};

/// States read from one or more files, with their weights when present.
#[derive(Clone, Debug)]
pub struct StateList {
    pub states: Vec<DensityMatrix>,
    pub weights: Option<Vec<f64>>,
}

impl StateList {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// The explicit weights, or uniform ones.
    pub fn ensemble(&self) -> Result<Ensemble<DensityMatrix>> {
        match &self.weights {
            Some(w) => Ensemble::new(w.clone(), self.states.clone()),
            None => Ensemble::uniform(self.states.clone()),
        }
    }

    /// Concatenates lists. Weights survive only if every part carries them.
    pub fn concat(parts: Vec<StateList>) -> Result<StateList> {
        let weighted = parts.iter().filter(|p| p.weights.is_some()).count();
        if weighted != 0 && weighted != parts.len() {
            return Err(Error::Parse("some inputs carry weights and others do not".into()));
        }
        let mut states = Vec::new();
        let mut weights = Vec::new();
        for p in parts {
            states.extend(p.states);
            weights.extend(p.weights.unwrap_or_default());
        }
        Ok(StateList {
            states,
            weights: (weighted != 0).then_some(weights),
        })
    }
}

struct Pending {
    dim: usize,
    weight: Option<f64>,
    values: Vec<f64>,
}

fn finish(p: Pending, out: &mut Vec<(Option<f64>, DensityMatrix)>) -> Result<()> {
    let need = 2 * p.dim * p.dim;
    if p.values.len() != need {
        return Err(Error::Parse(format!(
            "state {} of dimension {} has {} numbers, expected {need}",
            out.len() + 1,
            p.dim,
            p.values.len()
        )));
    }
    let d = p.dim;
    let m = Mat::from_fn(d, d, |i, j| {
        let k = 2 * (i * d + j);
        Complex64::new(p.values[k], p.values[k + 1])
    });
    let rho = DensityMatrix::new(m).map_err(|e| Error::Parse(format!("state {}: {e}", out.len() + 1)))?;
    out.push((p.weight, rho));
    Ok(())
}

fn number(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: {tok:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite entry {tok:?}")));
    }
    Ok(v)
}

/// Parses the text format above.
pub fn parse_states(text: &str) -> Result<StateList> {
    let mut done = Vec::new();
    let mut current: Option<Pending> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut toks = body.split_whitespace().peekable();
        while let Some(tok) = toks.next() {
            match tok {
                "dim" => {
                    if let Some(p) = current.take() {
                        finish(p, &mut done)?;
                    }
                    let d = toks
                        .next()
                        .and_then(|t| t.parse::<usize>().ok())
                        .filter(|&d| d > 0)
                        .ok_or_else(|| Error::Parse(format!("line {line}: `dim` needs a positive integer")))?;
                    current = Some(Pending {
                        dim: d,
                        weight: None,
                        values: Vec::with_capacity(2 * d * d),
                    });
                }
                "weight" => {
                    let p = current
                        .as_mut()
                        .ok_or_else(|| Error::Parse(format!("line {line}: `weight` before `dim`")))?;
                    if p.weight.is_some() || !p.values.is_empty() {
                        return Err(Error::Parse(format!("line {line}: `weight` must directly follow `dim`")));
                    }
                    let w = number(toks.next().unwrap_or(""), line)?;
                    if w < 0.0 {
                        return Err(Error::Parse(format!("line {line}: negative weight")));
                    }
                    p.weight = Some(w);
                }
                _ => {
                    let p = current
                        .as_mut()
                        .ok_or_else(|| Error::Parse(format!("line {line}: matrix entries before `dim`")))?;
                    p.values.push(number(tok, line)?);
                }
            }
        }
    }
    if let Some(p) = current.take() {
        finish(p, &mut done)?;
    }
    if done.is_empty() {
        return Err(Error::Parse("no states found".into()));
    }
    let weighted = done.iter().filter(|(w, _)| w.is_some()).count();
    if weighted != 0 && weighted != done.len() {
        return Err(Error::Parse("weights must be given for every state or for none".into()));
    }
    let weights = (weighted != 0).then(|| done.iter().map(|(w, _)| w.unwrap_or(0.0)).collect());
    Ok(StateList {
        states: done.into_iter().map(|(_, s)| s).collect(),
        weights,
    })
}

pub fn read_states(path: &Path) -> Result<StateList> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_states(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Renders states in the text format. Floats use the shortest round-trip
/// representation, so parsing the output gives back identical matrices.
pub fn format_states(states: &[&DensityMatrix], weights: Option<&[f64]>) -> Result<String> {
    if let Some(w) = weights {
        if w.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                found: w.len(),
            });
        }
    }
    let mut out = String::new();
    for (k, rho) in states.iter().enumerate() {
        let d = rho.dim();
        let _ = writeln!(out, "dim {d}");
        if let Some(w) = weights {
            let _ = writeln!(out, "weight {}", w[k]);
        }
        let m = rho.as_mat();
        for i in 0..d {
            let row: Vec<String> = (0..d)
                .map(|j| format!("{} {}", m[(i, j)].re, m[(i, j)].im))
                .collect();
            let _ = writeln!(out, "{}", row.join("  "));
        }
    }
    Ok(out)
}

pub fn write_states(path: &Path, states: &[&DensityMatrix], weights: Option<&[f64]>) -> Result<()> {
    let text = format_states(states, weights)?;
    std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, seeded_rng};
    use crate::linalg::QuantumState;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = seeded_rng(5);
        let a = random_density(&mut rng, 3, 2);
        let b = random_density(&mut rng, 3, 3);
        let text = format_states(&[&a, &b], Some(&[0.25, 0.75])).unwrap();
        let back = parse_states(&text).unwrap();
        assert_eq!(back.weights, Some(vec![0.25, 0.75]));
        assert_eq!(back.states[0].frobenius_distance(&a).unwrap(), 0.0);
        assert_eq!(back.states[1].frobenius_distance(&b).unwrap(), 0.0);
    }

    #[test]
    fn comments_and_layout_are_free() {
        let s = parse_states("# qubit\ndim 2 1 0 0 0\n0 0 # trailing\n 0 0").unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.weights.is_none());
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        for bad in [
            "",
            "dim 0",
            "dim 2 1 0 0 0 0 0",
            "dim 2 1 0 0 0 0 0 0 0 extra",
            "1 0",
            "dim 1 weight 1 1 0 dim 1 1 0",
            "dim 1 2 0",
            "dim 1 nan 0",
        ] {
            assert!(matches!(parse_states(bad), Err(Error::Parse(_))), "{bad:?}");
        }
    }
}
