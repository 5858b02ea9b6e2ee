//! Plain-text instance format.
//!
//! ```text
//! n m k
//! u v cost      (m regular edges)
//! u v cost      (k lifted edges)
//! ```
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Edge, MulticutInstance};

pub fn read_instance(path: &Path) -> Result<MulticutInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_instance(&text, path)
}

/// Parses the text format; `origin` only labels error messages.
pub fn parse_instance(text: &str, origin: &Path) -> Result<MulticutInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "missing header line `n m k`"))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::parse(origin, hline, format!("bad header: {e}")))?;
    let [n, m, k] = counts[..] else {
        return Err(Error::parse(origin, hline, "header must have three integers `n m k`"));
    };

    let mut read_edges = |count: usize, what: &str| -> Result<Vec<Edge>> {
        (0..count)
            .map(|_| {
                let (ln, line) = lines
                    .next()
                    .ok_or_else(|| Error::parse(origin, 0, format!("expected {count} {what} edges")))?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                let [u, v, c] = toks[..] else {
                    return Err(Error::parse(origin, ln, "edge line must be `u v cost`"));
                };
                let bad = |e: &dyn std::fmt::Display| Error::parse(origin, ln, e.to_string());
                Ok(Edge::new(
                    u.parse().map_err(|e| bad(&e))?,
                    v.parse().map_err(|e| bad(&e))?,
                    c.parse().map_err(|e| bad(&e))?,
                ))
            })
            .collect()
    };
    let edges = read_edges(m, "regular")?;
    let lifted = read_edges(k, "lifted")?;
    MulticutInstance::new(n, edges, lifted)
}

pub fn write_instance(instance: &MulticutInstance) -> String {
    let mut out = format!(
        "{} {} {}\n",
        instance.num_nodes(),
        instance.edges().len(),
        instance.lifted_edges().len()
    );
    for e in instance.edges().iter().chain(instance.lifted_edges()) {
        let _ = writeln!(out, "{} {} {}", e.u, e.v, e.cost);
    }
    out
}
