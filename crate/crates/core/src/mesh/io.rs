//! ASCII mesh readers and writers.
//!
//! Tet meshes use a small line-oriented format (see `docs/FORMATS.md`):
//!
//! ```text
//! TETMESH 1
//! <vertex count>
//! x y z [pressure]      one line per vertex
//! <tet count>
//! i j k l               zero-based vertex indices
//! ```
//!
//! Rigid surfaces are read from the `v`/`f` subset of Wavefront OBJ.

use std::fmt::Write as _;
use std::path::Path;

use super::{SurfaceMesh, TetMesh, Vec3, VertexField};
use crate::error::{Error, Result};

pub const TET_MESH_HEADER: &str = "TETMESH 1";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_numbers<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| parse_err(line, format!("bad number '{tok}'")))
        })
        .collect()
}

/// Parse a tet mesh, returning the pressure field when the vertex lines carry one.
pub fn parse_tet_mesh(text: &str) -> Result<(TetMesh, Option<VertexField>)> {
    let mut lines = content_lines(text);
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| parse_err(0, format!("unexpected end of file, expected {what}")))
    };

    let (ln, header) = next("header")?;
    if header != TET_MESH_HEADER {
        return Err(parse_err(ln, format!("expected header '{TET_MESH_HEADER}'")));
    }
    let (ln, count) = next("vertex count")?;
    let nv: usize = count
        .parse()
        .map_err(|_| parse_err(ln, "bad vertex count"))?;

    let mut vertices = Vec::with_capacity(nv);
    let mut pressures = Vec::new();
    let mut with_pressure = None;
    for _ in 0..nv {
        let (ln, l) = next("vertex")?;
        let nums: Vec<f64> = parse_numbers(ln, l)?;
        let has_p = match nums.len() {
            3 => false,
            4 => true,
            n => return Err(parse_err(ln, format!("expected 3 or 4 numbers, got {n}"))),
        };
        if *with_pressure.get_or_insert(has_p) != has_p {
            return Err(parse_err(ln, "pressure column must be present on all vertices or none"));
        }
        vertices.push(Vec3::new(nums[0], nums[1], nums[2]));
        if has_p {
            pressures.push(nums[3]);
        }
    }

    let (ln, count) = next("tet count")?;
    let nt: usize = count.parse().map_err(|_| parse_err(ln, "bad tet count"))?;
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next("tet")?;
        let idx: Vec<usize> = parse_numbers(ln, l)?;
        let tet: [usize; 4] = idx
            .try_into()
            .map_err(|_| parse_err(ln, "expected 4 indices"))?;
        tets.push(tet);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content"));
    }

    let mesh = TetMesh::new(vertices, tets)?;
    let field = if with_pressure == Some(true) {
        Some(VertexField::new(pressures, nv)?)
    } else {
        None
    };
    Ok((mesh, field))
}

pub fn read_tet_mesh(path: impl AsRef<Path>) -> Result<(TetMesh, Option<VertexField>)> {
    parse_tet_mesh(&std::fs::read_to_string(path)?)
}

pub fn format_tet_mesh(mesh: &TetMesh, field: Option<&VertexField>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{TET_MESH_HEADER}");
    let _ = writeln!(s, "{}", mesh.num_vertices());
    for (i, v) in mesh.vertices().iter().enumerate() {
        match field {
            Some(f) => {
                let _ = writeln!(s, "{} {} {} {}", v.x, v.y, v.z, f.values()[i]);
            }
            None => {
                let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
            }
        }
    }
    let _ = writeln!(s, "{}", mesh.num_tets());
    for t in mesh.tets() {
        let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    s
}

pub fn write_tet_mesh(
    path: impl AsRef<Path>,
    mesh: &TetMesh,
    field: Option<&VertexField>,
) -> Result<()> {
    std::fs::write(path, format_tet_mesh(mesh, field))?;
    Ok(())
}

/// Parse `v` and `f` records of an OBJ file. Faces with more than three
/// corners are fan-triangulated; texture/normal references are ignored.
pub fn parse_obj(text: &str) -> Result<SurfaceMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ln, line) in content_lines(text) {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let nums: Vec<f64> = parse_numbers(ln, &toks.collect::<Vec<_>>().join(" "))?;
                if nums.len() < 3 {
                    return Err(parse_err(ln, "vertex needs 3 coordinates"));
                }
                vertices.push(Vec3::new(nums[0], nums[1], nums[2]));
            }
            Some("f") => {
                let corners = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let raw: i64 = head
                            .parse()
                            .map_err(|_| parse_err(ln, format!("bad face index '{t}'")))?;
                        // Negative indices count back from the latest vertex.
                        let idx = if raw < 0 {
                            vertices.len() as i64 + raw
                        } else {
                            raw - 1
                        };
                        usize::try_from(idx).map_err(|_| parse_err(ln, "face index out of range"))
                    })
                    .collect::<Result<Vec<usize>>>()?;
                if corners.len() < 3 {
                    return Err(parse_err(ln, "face needs at least 3 corners"));
                }
                for k in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    parse_obj(&std::fs::read_to_string(path)?)
}
