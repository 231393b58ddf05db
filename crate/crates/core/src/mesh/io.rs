//! Plain-text mesh format:
//!
//! ```text
//! dim 2
//! vertices 4
//! 0 0
//! ...
//! cells 2
//! 0 1 3
//! ...
//! boundary 4
//! 0 1 essential
//! ...
//! ```
//!
//! Cells are written in bisection order. Boundary lines carry `essential` or
//! `natural`.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{simplex_key, BoundaryTag, SimplicialMesh};
use crate::error::{FeecError, Result};

pub fn write_mesh(mesh: &SimplicialMesh) -> String {
    let n = mesh.dim();
    let mut s = String::new();
    writeln!(s, "dim {n}").unwrap();
    writeln!(s, "vertices {}", mesh.n_vertices()).unwrap();
    for v in mesh.vertices() {
        let coords: Vec<String> = v[..n].iter().map(|x| format!("{x:?}")).collect();
        writeln!(s, "{}", coords.join(" ")).unwrap();
    }
    writeln!(s, "cells {}", mesh.n_cells()).unwrap();
    for c in 0..mesh.n_cells() {
        let ids: Vec<String> = mesh.cell_ordered(c).iter().map(|v| v.to_string()).collect();
        writeln!(s, "{}", ids.join(" ")).unwrap();
    }
    let bfaces = mesh.boundary_faces();
    writeln!(s, "boundary {}", bfaces.len()).unwrap();
    for f in bfaces {
        let ids: Vec<String> = mesh.simplex(n - 1, f).iter().map(|v| v.to_string()).collect();
        let tag = match mesh.boundary_tag(f) {
            BoundaryTag::GammaEssential => "essential",
            _ => "natural",
        };
        writeln!(s, "{} {tag}", ids.join(" ")).unwrap();
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            return Ok(l.split_whitespace().collect());
        }
        Err(FeecError::Parse { line: self.line + 1, msg: "unexpected end of file".into() })
    }

    fn err(&self, msg: impl Into<String>) -> FeecError {
        FeecError::Parse { line: self.line, msg: msg.into() }
    }

    fn header(&mut self, key: &str) -> Result<usize> {
        let t = self.next()?;
        if t.len() != 2 || t[0] != key {
            return Err(self.err(format!("expected `{key} <count>`")));
        }
        t[1].parse().map_err(|_| self.err(format!("bad count `{}`", t[1])))
    }
}

pub fn read_mesh(text: &str) -> Result<SimplicialMesh> {
    let mut it = Lines { inner: text.lines().enumerate(), line: 0 };
    let dim = it.header("dim")?;
    if !(dim == 2 || dim == 3) {
        return Err(it.err(format!("unsupported dimension {dim}")));
    }
    let nv = it.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let t = it.next()?;
        if t.len() != dim {
            return Err(it.err(format!("expected {dim} coordinates")));
        }
        let mut x = [0.0; 3];
        for (d, tok) in t.iter().enumerate() {
            x[d] = tok.parse().map_err(|_| it.err(format!("bad coordinate `{tok}`")))?;
        }
        vertices.push(x);
    }
    let nc = it.header("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let t = it.next()?;
        if t.len() != dim + 1 {
            return Err(it.err(format!("expected {} vertex ids", dim + 1)));
        }
        let c: Vec<usize> = t
            .iter()
            .map(|tok| tok.parse::<usize>().map_err(|_| it.err(format!("bad index `{tok}`"))))
            .collect::<Result<_>>()?;
        if c.iter().any(|&v| v >= nv) {
            return Err(it.err("vertex index out of range"));
        }
        cells.push(c);
    }
    let nb = it.header("boundary")?;
    let mut essential = HashSet::new();
    let mut listed = HashSet::new();
    for _ in 0..nb {
        let t = it.next()?;
        if t.len() != dim + 1 {
            return Err(it.err(format!("expected {dim} vertex ids and a tag")));
        }
        let f: Vec<usize> = t[..dim]
            .iter()
            .map(|tok| tok.parse::<usize>().map_err(|_| it.err(format!("bad index `{tok}`"))))
            .collect::<Result<_>>()?;
        let key = simplex_key(&f);
        match t[dim] {
            "essential" => {
                essential.insert(key);
            }
            "natural" => {}
            other => return Err(it.err(format!("unknown boundary tag `{other}`"))),
        }
        listed.insert(key);
    }
    let mesh = SimplicialMesh::from_cells(dim, vertices, &cells, &essential)
        .map_err(|e| FeecError::Parse { line: it.line, msg: e.to_string() })?;
    let actual: HashSet<_> = mesh
        .boundary_faces()
        .into_iter()
        .map(|f| simplex_key(mesh.simplex(dim - 1, f)))
        .collect();
    if actual != listed {
        return Err(FeecError::Parse { line: it.line, msg: "boundary list does not match mesh boundary".into() });
    }
    Ok(mesh)
}
