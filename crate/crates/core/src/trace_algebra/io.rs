//! Plain-text exchange format for algebra elements.
//!
//! ```text
//! specact-operator 1
//! algebra 2
//! block 2 1.0000000000000000e0
//! block 1 5.0000000000000000e-1
//! matrix 0
//! 1.0000000000000000e0,0.0000000000000000e0 0.0000000000000000e0,0.0000000000000000e0
//! 0.0000000000000000e0,0.0000000000000000e0 2.0000000000000000e0,0.0000000000000000e0
//! matrix 1
//! 3.0000000000000000e0,0.0000000000000000e0
//! ```
//!
//! Rows are written row-major as whitespace-separated `re,im` pairs with 17
//! significant digits, so reading back reproduces every bit. Lines starting
//! with `#` and blank lines are ignored.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{AlgebraElement, TraceAlgebra};
use crate::error::{Error, Result};
use crate::C64;

const MAGIC: &str = "specact-operator";
const VERSION: u32 = 1;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes an element together with its algebra header.
pub fn write_element(a: &AlgebraElement) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "algebra {}", a.algebra().blocks().len());
    for b in a.algebra().blocks() {
        let _ = writeln!(out, "block {} {}", b.dim, num(b.weight));
    }
    for (i, m) in a.blocks().iter().enumerate() {
        let _ = writeln!(out, "matrix {i}");
        for r in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols())
                .map(|c| format!("{},{}", num(m[(r, c)].re), num(m[(r, c)].im)))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|e| perr(line, format!("bad number {tok:?}: {e}")))
}

/// Parses the format produced by [`write_element`].
pub fn read_element(text: &str) -> Result<AlgebraElement> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines.next().ok_or_else(|| perr(0, "empty input"))?;
    let mut h = header.split_whitespace();
    if h.next() != Some(MAGIC) {
        return Err(perr(ln, format!("expected header `{MAGIC} {VERSION}`")));
    }
    match h.next().map(str::parse::<u32>) {
        Some(Ok(VERSION)) => {}
        _ => return Err(perr(ln, "unsupported format version")),
    }

    let (ln, alg_line) = lines
        .next()
        .ok_or_else(|| perr(ln, "missing algebra line"))?;
    let nblocks = alg_line
        .strip_prefix("algebra ")
        .and_then(|s| s.trim().parse::<usize>().ok())
        .ok_or_else(|| perr(ln, "expected `algebra <count>`"))?;

    let mut spec = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "missing block line"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != "block" {
            return Err(perr(ln, "expected `block <dim> <weight>`"));
        }
        let dim = toks[1]
            .parse::<usize>()
            .map_err(|_| perr(ln, "bad block dimension"))?;
        spec.push((dim, parse_f64(toks[2], ln)?));
    }
    let algebra: Arc<TraceAlgebra> = TraceAlgebra::new(&spec)?;

    let mut blocks = Vec::with_capacity(nblocks);
    for (bi, &(dim, _)) in spec.iter().enumerate() {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(0, format!("missing matrix {bi}")))?;
        if l.strip_prefix("matrix ").map(str::trim) != Some(&bi.to_string()) {
            return Err(perr(ln, format!("expected `matrix {bi}`")));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for _ in 0..dim {
            let (ln, row) = lines.next().ok_or_else(|| perr(ln, "truncated matrix"))?;
            let entries: Vec<&str> = row.split_whitespace().collect();
            if entries.len() != dim {
                return Err(perr(
                    ln,
                    format!("expected {dim} entries, got {}", entries.len()),
                ));
            }
            for e in entries {
                let (re, im) = e
                    .split_once(',')
                    .ok_or_else(|| perr(ln, format!("expected re,im in {e:?}")))?;
                data.push(C64::new(parse_f64(re, ln)?, parse_f64(im, ln)?));
            }
        }
        blocks.push(DMatrix::from_row_slice(dim, dim, &data));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(perr(ln, "trailing content"));
    }
    AlgebraElement::from_blocks(&algebra, blocks)
}
