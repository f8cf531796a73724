//! Conforming quadrilateral meshes with curved elements.
//!
//! A [`HybridMesh`] stores vertices, element mappings, subdomain ids and the
//! face connectivity. Interior faces are tagged CG or DG; faces between
//! different subdomains are always DG. The mesh does not depend on the
//! solution degree; per-degree data (metrics, shared nodes) is derived on
//! demand.

mod builders;
mod geometry;
mod io;

use std::collections::{BTreeSet, HashMap};

pub use builders::{
    cartesian_mesh, curved_mesh_example, warped_cartesian_mesh, CartesianOptions,
    CURVED_GEOMETRY_DEGREE,
};
pub use geometry::{face_node, side_corners, ElementMapping, ElementMetrics};
pub use io::{mesh_to_string, parse_mesh, read_mesh, write_mesh};

use crate::acoustics::Medium;
use crate::basis::SpectralOperators;
use crate::error::{Error, Result};

/// Coupling type of a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceKind {
    /// Continuous coupling through shared nodes.
    Cg,
    /// Coupling through a numerical flux.
    Dg,
    /// Physical boundary.
    Boundary,
}

/// One side of one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceSide {
    pub element: usize,
    pub side: usize,
}

/// A face record. For interior faces, node `k` on the left side matches node
/// `k` on the right side, or node `N − k` when `reversed` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub left: FaceSide,
    pub right: Option<FaceSide>,
    pub kind: FaceKind,
    pub reversed: bool,
}

impl Face {
    /// Right-side node index matching left-side node `k`.
    #[inline]
    pub fn right_index(&self, n: usize, k: usize) -> usize {
        if self.reversed {
            n - k
        } else {
            k
        }
    }
}

/// A quadrilateral element.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshElement {
    /// Corner vertex ids, counter-clockwise from reference corner `(-1, -1)`.
    pub vertices: [usize; 4],
    pub mapping: ElementMapping,
    pub subdomain: usize,
}

/// Global numbering of nodal degrees of freedom for a given solution degree.
///
/// Nodes coupled through CG faces share one id; all others are distinct.
#[derive(Debug, Clone)]
pub struct SharedNodeMap {
    pub degree: usize,
    /// `node_to_dof[e * (N+1)² + k]` is the global id of node `k` of element `e`.
    pub node_to_dof: Vec<usize>,
    pub ndof: usize,
}

impl SharedNodeMap {
    pub fn dof(&self, element: usize, node: usize) -> usize {
        let np = self.degree + 1;
        self.node_to_dof[element * np * np + node]
    }

    /// Number of element nodes mapped to each global id.
    pub fn multiplicity(&self) -> Vec<usize> {
        let mut m = vec![0; self.ndof];
        for &d in &self.node_to_dof {
            m[d] += 1;
        }
        m
    }
}

/// Conforming quadrilateral mesh with CG/DG face tags and material table.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridMesh {
    vertices: Vec<[f64; 2]>,
    elements: Vec<MeshElement>,
    materials: Vec<Medium>,
    faces: Vec<Face>,
    element_faces: Vec<[usize; 4]>,
    dg_edges: BTreeSet<(usize, usize)>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl HybridMesh {
    /// Builds connectivity. Edges listed in `dg_edges` (as vertex pairs) are
    /// forced to DG coupling even within one subdomain.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        elements: Vec<MeshElement>,
        materials: Vec<Medium>,
        dg_edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        for (e, el) in elements.iter().enumerate() {
            if let Some(&v) = el.vertices.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "element {e} references missing vertex {v}"
                )));
            }
            if el.subdomain >= materials.len() {
                return Err(Error::InvalidMesh(format!(
                    "element {e} uses undefined subdomain {}",
                    el.subdomain
                )));
            }
            for (c, corner) in el.mapping.corners().iter().enumerate() {
                let v = vertices[el.vertices[c]];
                if (corner[0] - v[0]).hypot(corner[1] - v[1]) > 1e-10 {
                    return Err(Error::InvalidMesh(format!(
                        "element {e} corner {c} does not match vertex {}",
                        el.vertices[c]
                    )));
                }
            }
        }
        let dg_edges: BTreeSet<(usize, usize)> =
            dg_edges.into_iter().map(|(a, b)| edge_key(a, b)).collect();

        let mut edge_map: HashMap<(usize, usize), Vec<FaceSide>> = HashMap::new();
        for (e, el) in elements.iter().enumerate() {
            for side in 0..4 {
                let (a, b) = side_corners(side);
                edge_map
                    .entry(edge_key(el.vertices[a], el.vertices[b]))
                    .or_default()
                    .push(FaceSide { element: e, side });
            }
        }
        let mut keys: Vec<_> = edge_map.keys().copied().collect();
        keys.sort_unstable();

        let mut faces = Vec::with_capacity(keys.len());
        let mut element_faces = vec![[usize::MAX; 4]; elements.len()];
        for key in keys {
            let sides = &edge_map[&key];
            let face = match sides.as_slice() {
                [l] => Face {
                    left: *l,
                    right: None,
                    kind: FaceKind::Boundary,
                    reversed: false,
                },
                [l, r] => {
                    let start = |s: &FaceSide| elements[s.element].vertices[side_corners(s.side).0];
                    let kind = if elements[l.element].subdomain != elements[r.element].subdomain
                        || dg_edges.contains(&key)
                    {
                        FaceKind::Dg
                    } else {
                        FaceKind::Cg
                    };
                    Face {
                        left: *l,
                        right: Some(*r),
                        kind,
                        reversed: start(l) != start(r),
                    }
                }
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge {key:?} is shared by {} elements",
                        sides.len()
                    )))
                }
            };
            let id = faces.len();
            element_faces[face.left.element][face.left.side] = id;
            if let Some(r) = face.right {
                element_faces[r.element][r.side] = id;
            }
            faces.push(face);
        }

        Ok(Self {
            vertices,
            elements,
            materials,
            faces,
            element_faces,
            dg_edges,
        })
    }

    /// Copy with every interior face coupled by numerical fluxes.
    pub fn with_all_dg(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.faces {
            if f.kind == FaceKind::Cg {
                f.kind = FaceKind::Dg;
                let el = &out.elements[f.left.element];
                let (a, b) = side_corners(f.left.side);
                out.dg_edges
                    .insert(edge_key(el.vertices[a], el.vertices[b]));
            }
        }
        out
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn elements(&self) -> &[MeshElement] {
        &self.elements
    }

    pub fn materials(&self) -> &[Medium] {
        &self.materials
    }

    /// Replaces the material table; the number of subdomains must not change.
    pub fn set_materials(&mut self, materials: Vec<Medium>) -> Result<()> {
        if materials.len() != self.materials.len() {
            return Err(Error::InvalidMesh(format!(
                "mesh has {} subdomains, got {} materials",
                self.materials.len(),
                materials.len()
            )));
        }
        self.materials = materials;
        Ok(())
    }

    pub fn medium(&self, element: usize) -> &Medium {
        &self.materials[self.elements[element].subdomain]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Face ids of each element, indexed by side.
    pub fn element_faces(&self) -> &[[usize; 4]] {
        &self.element_faces
    }

    pub fn dg_edges(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.dg_edges.iter()
    }

    pub fn count(&self, kind: FaceKind) -> usize {
        self.faces.iter().filter(|f| f.kind == kind).count()
    }

    /// Maximum geometry degree over all elements.
    pub fn geometry_degree(&self) -> usize {
        self.elements
            .iter()
            .map(|e| e.mapping.degree())
            .max()
            .unwrap_or(1)
    }

    /// Metric terms of every element on the solution grid of `ops`.
    pub fn metrics(&self, ops: &SpectralOperators) -> Result<Vec<ElementMetrics>> {
        self.elements
            .iter()
            .enumerate()
            .map(|(e, el)| {
                let m = ElementMetrics::compute(&el.mapping, ops)?;
                m.check_positive(e)?;
                Ok(m)
            })
            .collect()
    }

    /// Largest distance between matching face nodes of interior faces.
    pub fn conformity_defect(&self, n: usize, metrics: &[ElementMetrics]) -> f64 {
        let mut worst: f64 = 0.0;
        for f in &self.faces {
            let Some(r) = f.right else { continue };
            for k in 0..=n {
                let a = face_node(n, f.left.side, k);
                let b = face_node(n, r.side, f.right_index(n, k));
                let ml = &metrics[f.left.element];
                let mr = &metrics[r.element];
                worst = worst.max((ml.x[a] - mr.x[b]).hypot(ml.y[a] - mr.y[b]));
            }
        }
        worst
    }

    /// Global numbering of nodes for solution degree `n`.
    ///
    /// Built by union-find over node pairs of CG faces, so corners shared by
    /// several CG-connected elements merge transitively and DG faces never
    /// merge nodes.
    pub fn shared_node_map(&self, n: usize) -> SharedNodeMap {
        let np = n + 1;
        let per = np * np;
        let total = self.elements.len() * per;
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for f in &self.faces {
            if f.kind != FaceKind::Cg {
                continue;
            }
            let r = f.right.expect("CG faces are interior");
            for k in 0..np {
                let a = f.left.element * per + face_node(n, f.left.side, k);
                let b = r.element * per + face_node(n, r.side, f.right_index(n, k));
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut node_to_dof = vec![0; total];
        let mut root_id = vec![usize::MAX; total];
        let mut ndof = 0;
        for node in 0..total {
            let root = find(&mut parent, node);
            if root_id[root] == usize::MAX {
                root_id[root] = ndof;
                ndof += 1;
            }
            node_to_dof[node] = root_id[root];
        }
        SharedNodeMap {
            degree: n,
            node_to_dof,
            ndof,
        }
    }
}
