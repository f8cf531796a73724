//! Built-in mesh constructors.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::geometry::{side_corners, ElementMapping};
use super::{HybridMesh, MeshElement};
use crate::acoustics::Medium;
use crate::error::{Error, Result};

/// Options for [`cartesian_mesh`].
#[derive(Debug, Clone, Default)]
pub struct CartesianOptions {
    /// x-coordinate of a vertical material interface. Elements to its left form
    /// subdomain 0, elements to its right subdomain 1.
    pub material_split: Option<f64>,
    /// Vertical lines whose faces are coupled by numerical fluxes although
    /// both sides share one material.
    pub dg_lines: Vec<f64>,
    /// Material table. Defaults to unit media, one per subdomain.
    pub materials: Vec<Medium>,
}

/// Index of the grid line equal to `x`, if any.
fn grid_line(x: f64, x0: f64, dx: f64, n: usize) -> Option<usize> {
    let t = (x - x0) / dx;
    let i = t.round();
    if (t - i).abs() < 1e-9 && i >= 0.0 && i <= n as f64 {
        Some(i as usize)
    } else {
        None
    }
}

/// Uniform `nx × ny` grid of affine elements on `[x0, x1] × [y0, y1]`.
pub fn cartesian_mesh(
    nx: usize,
    ny: usize,
    bounds: [f64; 4],
    options: &CartesianOptions,
) -> Result<HybridMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh(format!(
            "grid must have at least one element per direction, got {nx}×{ny}"
        )));
    }
    let [x0, x1, y0, y1] = bounds;
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::InvalidMesh(format!("empty bounds {bounds:?}")));
    }
    let dx = (x1 - x0) / nx as f64;
    let dy = (y1 - y0) / ny as f64;

    let split = match options.material_split {
        Some(xs) => Some(grid_line(xs, x0, dx, nx).ok_or_else(|| {
            Error::InvalidMesh(format!(
                "material split x = {xs} is not an element boundary"
            ))
        })?),
        None => None,
    };
    let n_sub = if split.is_some() { 2 } else { 1 };
    let materials = if options.materials.is_empty() {
        vec![Medium::unit(); n_sub]
    } else if options.materials.len() == n_sub {
        options.materials.clone()
    } else {
        return Err(Error::InvalidMesh(format!(
            "expected {n_sub} materials, got {}",
            options.materials.len()
        )));
    };

    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([x0 + i as f64 * dx, y0 + j as f64 * dy]);
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v = [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)];
            let corners = v.map(|k| vertices[k]);
            let subdomain = match split {
                Some(s) if i >= s => 1,
                _ => 0,
            };
            elements.push(MeshElement {
                vertices: v,
                mapping: ElementMapping::bilinear(corners),
                subdomain,
            });
        }
    }

    let mut dg_edges = Vec::new();
    for &xl in &options.dg_lines {
        let i = grid_line(xl, x0, dx, nx).ok_or_else(|| {
            Error::InvalidMesh(format!("DG line x = {xl} is not an element boundary"))
        })?;
        for j in 0..ny {
            dg_edges.push((vid(i, j), vid(i, j + 1)));
        }
    }
    HybridMesh::new(vertices, elements, materials, dg_edges)
}

/// A Cartesian grid pushed through a smooth map `warp`.
///
/// Each element map is the degree-`geometry_degree` interpolant of `warp`
/// composed with the affine element map. Neighbouring elements interpolate
/// the same function at the same face points, so the mesh stays conforming.
pub fn warped_cartesian_mesh(
    nx: usize,
    ny: usize,
    bounds: [f64; 4],
    geometry_degree: usize,
    warp: impl Fn([f64; 2]) -> [f64; 2],
    options: &CartesianOptions,
) -> Result<HybridMesh> {
    let base = cartesian_mesh(nx, ny, bounds, options)?;
    let vertices: Vec<[f64; 2]> = base.vertices().iter().map(|&v| warp(v)).collect();
    let elements = base
        .elements()
        .iter()
        .map(|el| {
            let c = el.mapping.corners();
            let mapping = ElementMapping::from_fn(geometry_degree, |xi, eta| {
                let a = 0.5 * (1.0 + xi);
                let b = 0.5 * (1.0 + eta);
                let x = c[0][0] + a * (c[1][0] - c[0][0]);
                let y = c[0][1] + b * (c[3][1] - c[0][1]);
                warp([x, y])
            })?;
            Ok(MeshElement {
                vertices: el.vertices,
                mapping,
                subdomain: el.subdomain,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    HybridMesh::new(
        vertices,
        elements,
        base.materials().to_vec(),
        base.dg_edges().copied().collect::<Vec<_>>(),
    )
}

/// Geometry degree of the curved example mesh.
pub const CURVED_GEOMETRY_DEGREE: usize = 5;

/// How one mesh edge is drawn between its two vertices.
#[derive(Debug, Clone, Copy)]
enum EdgeShape {
    Straight,
    /// Circular arc of the given radius bulging towards `bulge` (a unit vector
    /// perpendicular to the chord).
    Arc {
        radius: f64,
        bulge: [f64; 2],
    },
}

fn edge_point(shape: EdgeShape, p: [f64; 2], q: [f64; 2], s: f64) -> [f64; 2] {
    let t = 0.5 * (s + 1.0);
    match shape {
        EdgeShape::Straight => [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])],
        EdgeShape::Arc { radius, bulge } => {
            let half = 0.5 * (q[0] - p[0]).hypot(q[1] - p[1]);
            let h = (radius * radius - half * half).sqrt();
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let centre = [mid[0] - h * bulge[0], mid[1] - h * bulge[1]];
            let tp = (p[1] - centre[1]).atan2(p[0] - centre[0]);
            let tq = (q[1] - centre[1]).atan2(q[0] - centre[0]);
            let mut delta = tq - tp;
            if delta > PI {
                delta -= 2.0 * PI;
            } else if delta <= -PI {
                delta += 2.0 * PI;
            }
            let th = tp + t * delta;
            [centre[0] + radius * th.cos(), centre[1] + radius * th.sin()]
        }
    }
}

/// Single-material 4×4 block mesh of `[-5, 5]²` with curved internal edges.
///
/// The four edges from the origin to the midpoints of the central block's
/// sides are radius-2 arcs arranged as a pinwheel; the eight edges bounding
/// the central `[-2.5, 2.5]²` block are radius-3 arcs bulging outward. Each
/// element is a transfinite (Coons) blend of its edges sampled on the
/// degree-5 LGL grid. All interior faces are CG.
pub fn curved_mesh_example() -> Result<HybridMesh> {
    let n = 4;
    let h = 2.5;
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity(25);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([-5.0 + i as f64 * h, -5.0 + j as f64 * h]);
        }
    }

    let mut shapes: HashMap<(usize, usize), EdgeShape> = HashMap::new();
    let origin = vid(2, 2);
    for (di, dj) in [(1i64, 0i64), (0, 1), (-1, 0), (0, -1)] {
        let end = vid((2 + di) as usize, (2 + dj) as usize);
        let d = [di as f64, dj as f64];
        let bulge = [-d[1], d[0]];
        shapes.insert(
            (origin.min(end), origin.max(end)),
            EdgeShape::Arc { radius: 2.0, bulge },
        );
    }
    let ring: [(usize, usize); 8] = [
        (1, 1),
        (2, 1),
        (3, 1),
        (3, 2),
        (3, 3),
        (2, 3),
        (1, 3),
        (1, 2),
    ];
    for k in 0..8 {
        let (ai, aj) = ring[k];
        let (bi, bj) = ring[(k + 1) % 8];
        let (a, b) = (vid(ai, aj), vid(bi, bj));
        let mid = [0.5 * (ai + bi) as f64 - 2.0, 0.5 * (aj + bj) as f64 - 2.0];
        let bulge = if ai == bi {
            [mid[0].signum(), 0.0]
        } else {
            [0.0, mid[1].signum()]
        };
        shapes.insert((a.min(b), a.max(b)), EdgeShape::Arc { radius: 3.0, bulge });
    }

    let curve = |a: usize, b: usize, s: f64| -> [f64; 2] {
        let shape = shapes
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or(EdgeShape::Straight);
        edge_point(shape, vertices[a], vertices[b], s)
    };

    let mut elements = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let v = [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)];
            let c = v.map(|k| vertices[k]);
            let side = |s: usize, t: f64| {
                let (a, b) = side_corners(s);
                curve(v[a], v[b], t)
            };
            let mapping = ElementMapping::from_fn(CURVED_GEOMETRY_DEGREE, |xi, eta| {
                let g0 = side(0, xi);
                let g1 = side(1, eta);
                let g2 = side(2, xi);
                let g3 = side(3, eta);
                let mut out = [0.0; 2];
                for d in 0..2 {
                    out[d] = 0.5
                        * ((1.0 - xi) * g3[d]
                            + (1.0 + xi) * g1[d]
                            + (1.0 - eta) * g0[d]
                            + (1.0 + eta) * g2[d])
                        - 0.25
                            * ((1.0 - xi) * (1.0 - eta) * c[0][d]
                                + (1.0 + xi) * (1.0 - eta) * c[1][d]
                                + (1.0 + xi) * (1.0 + eta) * c[2][d]
                                + (1.0 - xi) * (1.0 + eta) * c[3][d]);
                }
                out
            })?;
            elements.push(MeshElement {
                vertices: v,
                mapping,
                subdomain: 0,
            });
        }
    }
    HybridMesh::new(vertices, elements, vec![Medium::unit()], [])
}
