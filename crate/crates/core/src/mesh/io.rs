//! Plain-text mesh format.
//!
//! ```text
//! d d' n_vertices n_elements
//! x [y [z]]            (n_vertices lines, d' numbers each)
//! i0 i1 [i2]           (n_elements lines)
//! j0 [j1]              (γ faces until end of input)
//! ```
//!
//! Floats use Rust's shortest round-trip representation, so reading back a
//! written mesh reproduces the coordinates bit for bit. Refinement edges are
//! not stored; they are re-initialised on reading.

use std::io::{BufRead, Write};

use super::SimplicialMesh;
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &SimplicialMesh, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{} {} {} {}",
        mesh.dim(),
        mesh.ambient_dim(),
        mesh.n_vertices(),
        mesh.n_elements()
    )?;
    for v in mesh.vertices() {
        let coords: Vec<String> = v[..mesh.ambient_dim()].iter().map(|x| format!("{x}")).collect();
        writeln!(out, "{}", coords.join(" "))?;
    }
    for el in mesh.elements() {
        let ids: Vec<String> = el.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{}", ids.join(" "))?;
    }
    for f in mesh.gamma_faces() {
        let ids: Vec<String> = f.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{}", ids.join(" "))?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn numbers<T: std::str::FromStr>(line: &str, lineno: usize, count: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != count {
        return Err(parse_err(
            lineno,
            format!("expected {count} fields, found {}", parts.len()),
        ));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| parse_err(lineno, format!("cannot parse '{p}'")))
        })
        .collect()
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<SimplicialMesh> {
    let mut lines = Vec::new();
    for (i, l) in input.lines().enumerate() {
        let l = l?;
        if !l.trim().is_empty() {
            lines.push((i + 1, l));
        }
    }
    let mut it = lines.into_iter();
    let (hl, header) = it.next().ok_or_else(|| parse_err(1, "empty mesh file"))?;
    let h: Vec<usize> = numbers(&header, hl, 4)?;
    let (dim, ambient, nv, ne) = (h[0], h[1], h[2], h[3]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = it
            .next()
            .ok_or_else(|| parse_err(hl, "missing vertex lines"))?;
        let c: Vec<f64> = numbers(&l, ln, ambient)?;
        let mut p = [0.0; 3];
        p[..ambient].copy_from_slice(&c);
        vertices.push(p);
    }
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = it
            .next()
            .ok_or_else(|| parse_err(hl, "missing element lines"))?;
        elements.push(numbers::<usize>(&l, ln, dim + 1)?);
    }
    let mut gamma = Vec::new();
    for (ln, l) in it {
        gamma.push(numbers::<usize>(&l, ln, dim)?);
    }
    SimplicialMesh::new(dim, ambient, vertices, elements, gamma)
}
