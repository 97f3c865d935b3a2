//! Plain-text mesh format:
//!
//! ```text
//! tmmesh 1
//! <nv> <nt>
//! x y          (nv lines, 17 significant digits)
//! i j k        (nt lines, 0-based vertex indices)
//! ```
//!
//! The boundary is inferred from connectivity. When every boundary vertex
//! lies on a common circle about its centroid the mesh is tagged circular so
//! that refinement keeps projecting onto it.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::fmt17;
use super::mesh::{BoundaryShape, Mesh, Point};
use crate::{Error, Result};

const MAGIC: &str = "tmmesh 1";

pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_triangles())?;
    for p in mesh.vertices() {
        writeln!(out, "{} {}", fmt17(p[0]), fmt17(p[1]))?;
    }
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// Writes the mesh to `path` through a temporary file and a rename.
pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_mesh(mesh, &mut buf)?;
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, &buf)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    read_mesh(fs::File::open(path)?)
}

pub fn read_mesh<R: Read>(input: R) -> Result<Mesh> {
    let reader = BufReader::new(input);
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|s| (i + 1, s)))
        .filter(|r| !matches!(r, Ok((_, s)) if s.trim().is_empty()));

    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(e.into()),
            None => Err(Error::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") }),
        }
    };

    let (ln, header) = next("header")?;
    if header.trim() != MAGIC {
        return Err(Error::Parse { line: ln, msg: format!("expected '{MAGIC}', found '{header}'") });
    }
    let (ln, counts) = next("counts")?;
    let counts: Vec<usize> = parse_fields(ln, &counts, 2)?;
    let (nv, nt) = (counts[0], counts[1]);

    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertex")?;
        let xy: Vec<f64> = parse_fields(ln, &l, 2)?;
        vertices.push([xy[0], xy[1]]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next("triangle")?;
        let ijk: Vec<usize> = parse_fields(ln, &l, 3)?;
        triangles.push([ijk[0], ijk[1], ijk[2]]);
    }
    if let Ok((ln, extra)) = next("") {
        return Err(Error::Parse { line: ln, msg: format!("trailing content '{extra}'") });
    }

    let mesh = Mesh::new(vertices, triangles)?;
    let shape = detect_circle(&mesh);
    Ok(mesh.with_shape(shape))
}

fn parse_fields<T: std::str::FromStr>(line: usize, text: &str, n: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != n {
        return Err(Error::Parse {
            line,
            msg: format!("expected {n} fields, found {}", parts.len()),
        });
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| Error::Parse { line, msg: format!("cannot parse '{p}'") })
        })
        .collect()
}

fn detect_circle(mesh: &Mesh) -> BoundaryShape {
    let b = mesh.boundary_vertices();
    let c = b.iter().fold([0.0, 0.0], |acc, &i| {
        let p = mesh.vertex(i);
        [acc[0] + p[0] / b.len() as f64, acc[1] + p[1] / b.len() as f64]
    });
    let radii: Vec<f64> = b.iter().map(|&i| super::mesh::dist(mesh.vertex(i), c)).collect();
    let r = radii.iter().sum::<f64>() / radii.len() as f64;
    if b.len() >= 8 && radii.iter().all(|ri| (ri - r).abs() <= 1e-12 * r.max(1.0)) {
        BoundaryShape::Circle { center: c, radius: r }
    } else {
        BoundaryShape::Polygon
    }
}
