//! Plain-text mesh files.
//!
//! The format is line oriented; blank lines and lines starting with `#` are
//! ignored. Sections appear in this order:
//!
//! ```text
//! cgdg-mesh 1
//! materials <M>
//! <rho> <c>                                  (M lines)
//! vertices <V>
//! <x> <y>                                    (V lines)
//! elements <E>
//! <v0> <v1> <v2> <v3> <subdomain> <Ng>       (per element, followed by
//! <x> <y>                                     (Ng+1)² geometry nodes, ξ fastest)
//! dg_edges <K>
//! <a> <b>                                    (K lines, vertex pairs)
//! ```
//!
//! Vertices of an element are listed counter-clockwise from reference corner
//! `(-1, -1)`. Geometry nodes sit at the tensor LGL points of degree `Ng`.
//! Floats are written in shortest round-trip form, so write/read is exact.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::geometry::ElementMapping;
use super::{HybridMesh, MeshElement};
use crate::acoustics::Medium;
use crate::error::{Error, Result};

const MAGIC: &str = "cgdg-mesh";

/// Serializes a mesh to the text format.
pub fn mesh_to_string(mesh: &HybridMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} 1");
    let _ = writeln!(s, "materials {}", mesh.materials().len());
    for m in mesh.materials() {
        let _ = writeln!(s, "{} {}", m.rho, m.c);
    }
    let _ = writeln!(s, "vertices {}", mesh.vertices().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {}", v[0], v[1]);
    }
    let _ = writeln!(s, "elements {}", mesh.elements().len());
    for el in mesh.elements() {
        let [a, b, c, d] = el.vertices;
        let _ = writeln!(
            s,
            "{a} {b} {c} {d} {} {}",
            el.subdomain,
            el.mapping.degree()
        );
        for (x, y) in el.mapping.x().iter().zip(el.mapping.y()) {
            let _ = writeln!(s, "{x} {y}");
        }
    }
    let edges: Vec<_> = mesh.dg_edges().collect();
    let _ = writeln!(s, "dg_edges {}", edges.len());
    for (a, b) in edges {
        let _ = writeln!(s, "{a} {b}");
    }
    s
}

/// Writes a mesh file.
pub fn write_mesh(mesh: &HybridMesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

/// Reads a mesh file.
pub fn read_mesh(path: &Path) -> Result<HybridMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let inner = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        Self {
            inner: Box::new(inner),
            last: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::MeshParse {
            line: self.last,
            message: message.into(),
        }
    }

    fn next_fields(&mut self) -> Result<Vec<&'a str>> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok(l.split_whitespace().collect())
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn numbers<T: FromStr>(&mut self, count: usize) -> Result<Vec<T>> {
        let fields = self.next_fields()?;
        if fields.len() != count {
            return Err(self.err(format!("expected {count} values, found {}", fields.len())));
        }
        fields
            .iter()
            .map(|f| {
                f.parse::<T>()
                    .map_err(|_| self.err(format!("cannot parse '{f}'")))
            })
            .collect()
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let fields = self.next_fields()?;
        match fields.as_slice() {
            [k, n] if *k == keyword => n
                .parse()
                .map_err(|_| self.err(format!("invalid count '{n}'"))),
            _ => Err(self.err(format!("expected '{keyword} <count>'"))),
        }
    }
}

/// Parses the text format.
pub fn parse_mesh(text: &str) -> Result<HybridMesh> {
    let mut lines = Lines::new(text);
    let version = lines.header(MAGIC)?;
    if version != 1 {
        return Err(lines.err(format!("unsupported version {version}")));
    }

    let n_mat = lines.header("materials")?;
    let mut materials = Vec::with_capacity(n_mat);
    for _ in 0..n_mat {
        let v: Vec<f64> = lines.numbers(2)?;
        materials.push(Medium::new(v[0], v[1]).map_err(|e| lines.err(e.to_string()))?);
    }

    let n_vert = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(n_vert);
    for _ in 0..n_vert {
        let v: Vec<f64> = lines.numbers(2)?;
        vertices.push([v[0], v[1]]);
    }

    let n_el = lines.header("elements")?;
    let mut elements = Vec::with_capacity(n_el);
    for _ in 0..n_el {
        let h: Vec<usize> = lines.numbers(6)?;
        let degree = h[5];
        if degree == 0 {
            return Err(lines.err("geometry degree must be at least 1"));
        }
        let count = (degree + 1) * (degree + 1);
        let mut x = Vec::with_capacity(count);
        let mut y = Vec::with_capacity(count);
        for _ in 0..count {
            let p: Vec<f64> = lines.numbers(2)?;
            x.push(p[0]);
            y.push(p[1]);
        }
        elements.push(MeshElement {
            vertices: [h[0], h[1], h[2], h[3]],
            mapping: ElementMapping::new(degree, x, y)?,
            subdomain: h[4],
        });
    }

    let n_dg = lines.header("dg_edges")?;
    let mut dg = Vec::with_capacity(n_dg);
    for _ in 0..n_dg {
        let e: Vec<usize> = lines.numbers(2)?;
        dg.push((e[0], e[1]));
    }
    HybridMesh::new(vertices, elements, materials, dg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{cartesian_mesh, curved_mesh_example, CartesianOptions};

    #[test]
    fn round_trip_is_exact() {
        let opts = CartesianOptions {
            material_split: Some(0.0),
            dg_lines: vec![-2.5],
            materials: vec![
                Medium::new(1.0, 1.0).unwrap(),
                Medium::new(0.4, 0.7).unwrap(),
            ],
        };
        let meshes = [
            cartesian_mesh(4, 3, [-5.0, 5.0, -5.0, 5.0], &opts).unwrap(),
            curved_mesh_example().unwrap(),
            curved_mesh_example().unwrap().with_all_dg(),
        ];
        for mesh in meshes {
            let back = parse_mesh(&mesh_to_string(&mesh)).unwrap();
            assert_eq!(back, mesh);
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let mesh = curved_mesh_example().unwrap();
        write_mesh(&mesh, &path).unwrap();
        assert_eq!(read_mesh(&path).unwrap(), mesh);
    }

    #[test]
    fn parse_errors_report_lines() {
        let text = "cgdg-mesh 1\nmaterials 1\n1.0 oops\n";
        match parse_mesh(text) {
            Err(Error::MeshParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_mesh("cgdg-mesh 1\nmaterials 1\n1 1\nvertices 2\n0 0\n"),
            Err(Error::MeshParse { .. })
        ));
        assert!(matches!(
            parse_mesh("hello 1"),
            Err(Error::MeshParse { line: 1, .. })
        ));
    }
}
