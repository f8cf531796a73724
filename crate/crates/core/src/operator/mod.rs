//! Semi-discrete spatial operator.
//!
//! The production right-hand side uses the two-point (flux differencing)
//! volume term, surface terms on DG and boundary faces, and stiffness
//! summation over CG-shared nodes:
//!
//! `Ů = −(Σ_e R_e) / (Σ_e J_e w)` at every global node,
//!
//! where `R` holds the weighted volume divergence and the surface
//! corrections `w (F* − F̃·n̂)`. The solution is stored once per global node,
//! so CG continuity holds by construction.

pub mod forms;

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::acoustics::{interface_flux_matrices, Medium, State};
use crate::basis::SpectralOperators;
use crate::error::{Error, Result};
use crate::mesh::{face_node, ElementMetrics, FaceKind, HybridMesh, SharedNodeMap};

/// Exterior data `g(x, t)` for physical boundaries. The third argument is the
/// subdomain of the element owning the boundary node.
pub trait BoundaryProvider: Sync {
    fn exterior(&self, x: [f64; 2], t: f64, subdomain: usize) -> State;
}

impl<F> BoundaryProvider for F
where
    F: Fn([f64; 2], f64, usize) -> State + Sync,
{
    fn exterior(&self, x: [f64; 2], t: f64, subdomain: usize) -> State {
        self(x, t, subdomain)
    }
}

/// Homogeneous exterior data `g = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroBoundary;

impl BoundaryProvider for ZeroBoundary {
    fn exterior(&self, _x: [f64; 2], _t: f64, _subdomain: usize) -> State {
        State::zeros()
    }
}

/// The state on the other side of a surface node.
#[derive(Debug, Clone, Copy)]
enum Neighbor {
    Element { element: usize, node: usize },
    Boundary { x: [f64; 2] },
}

/// Cached data for one node of one DG or boundary face, seen from one element.
#[derive(Debug, Clone)]
struct SurfaceNode {
    /// Element-local node index.
    node: usize,
    weight: f64,
    /// Outward scaled normal of this element.
    n_out: [f64; 2],
    /// `F*_out = m_self U_self + m_other U_other`.
    m_self: Matrix3<f64>,
    m_other: Matrix3<f64>,
    neighbor: Neighbor,
}

/// Nodal solution stored once per global node.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalField {
    pub values: Vec<State>,
}

impl GlobalField {
    pub fn zeros(ndof: usize) -> Self {
        Self {
            values: vec![State::zeros(); ndof],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.amax()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Result of one right-hand side evaluation.
#[derive(Debug, Clone, Copy)]
pub struct RhsInfo {
    /// `Σ_boundary w F*_out`, the discrete flux leaving through the physical
    /// boundary.
    pub boundary_flux: State,
}

/// A mesh discretized with LGL collocation of a given degree.
#[derive(Debug, Clone)]
pub struct Discretization {
    ops: SpectralOperators,
    mesh: HybridMesh,
    metrics: Vec<ElementMetrics>,
    nodes: SharedNodeMap,
    /// `Σ_e J w` per global node.
    mass: Vec<f64>,
    /// Tensor weights `w_i w_j` per element node.
    weights_2d: Vec<f64>,
    surface: Vec<Vec<SurfaceNode>>,
    parallel: bool,
}

impl Discretization {
    pub fn new(mesh: HybridMesh, degree: usize) -> Result<Self> {
        let ops = SpectralOperators::new(degree)?;
        let metrics = mesh.metrics(&ops)?;
        let n = degree;
        let np = n + 1;
        let defect = mesh.conformity_defect(n, &metrics);
        if defect > 1e-10 {
            return Err(Error::InvalidMesh(format!(
                "faces do not conform (max node mismatch {defect:e})"
            )));
        }
        let nodes = mesh.shared_node_map(n);
        let w = ops.weights();
        let weights_2d: Vec<f64> = (0..np * np).map(|k| w[k % np] * w[k / np]).collect();
        let mut mass = vec![0.0; nodes.ndof];
        for (e, m) in metrics.iter().enumerate() {
            for k in 0..np * np {
                mass[nodes.dof(e, k)] += m.jac[k] * weights_2d[k];
            }
        }

        let mut surface: Vec<Vec<SurfaceNode>> = vec![Vec::new(); mesh.elements().len()];
        for f in mesh.faces() {
            if f.kind == FaceKind::Cg {
                continue;
            }
            let le = f.left.element;
            let lm = *mesh.medium(le);
            for k in 0..np {
                let ln = face_node(n, f.left.side, k);
                let n_left = metrics[le].face_normal(n, f.left.side, k);
                match f.right {
                    None => {
                        let (mp, mm) = interface_flux_matrices(&lm, &lm, n_left)?;
                        surface[le].push(SurfaceNode {
                            node: ln,
                            weight: w[k],
                            n_out: n_left,
                            m_self: mp,
                            m_other: mm,
                            neighbor: Neighbor::Boundary {
                                x: [metrics[le].x[ln], metrics[le].y[ln]],
                            },
                        });
                    }
                    Some(r) => {
                        let re = r.element;
                        let rk = f.right_index(n, k);
                        let rn = face_node(n, r.side, rk);
                        let rm = *mesh.medium(re);
                        let n_right = metrics[re].face_normal(n, r.side, rk);
                        let (ml, mr) = interface_flux_matrices(&lm, &rm, n_left)?;
                        surface[le].push(SurfaceNode {
                            node: ln,
                            weight: w[k],
                            n_out: n_left,
                            m_self: ml,
                            m_other: mr,
                            neighbor: Neighbor::Element {
                                element: re,
                                node: rn,
                            },
                        });
                        surface[re].push(SurfaceNode {
                            node: rn,
                            weight: w[rk],
                            n_out: n_right,
                            m_self: -mr,
                            m_other: -ml,
                            neighbor: Neighbor::Element {
                                element: le,
                                node: ln,
                            },
                        });
                    }
                }
            }
        }

        Ok(Self {
            ops,
            mesh,
            metrics,
            nodes,
            mass,
            weights_2d,
            surface,
            parallel: true,
        })
    }

    /// Enables or disables element-parallel residual evaluation. Results are
    /// bitwise identical either way.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn degree(&self) -> usize {
        self.ops.degree()
    }

    pub fn ops(&self) -> &SpectralOperators {
        &self.ops
    }

    pub fn mesh(&self) -> &HybridMesh {
        &self.mesh
    }

    pub fn metrics(&self) -> &[ElementMetrics] {
        &self.metrics
    }

    pub fn nodes(&self) -> &SharedNodeMap {
        &self.nodes
    }

    /// `Σ_e J w` per global node.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn ndof(&self) -> usize {
        self.nodes.ndof
    }

    /// Number of nodes per element.
    pub fn nodes_per_element(&self) -> usize {
        let np = self.degree() + 1;
        np * np
    }

    pub fn weights_2d(&self) -> &[f64] {
        &self.weights_2d
    }

    /// Element-local copy of a global field.
    pub fn element_values(&self, field: &GlobalField, element: usize) -> Vec<State> {
        (0..self.nodes_per_element())
            .map(|k| field.values[self.nodes.dof(element, k)])
            .collect()
    }

    /// Evaluates `f(x, subdomain)` at every global node.
    ///
    /// A node shared by several elements takes the value computed from the
    /// first element that owns it.
    pub fn project(&self, f: impl Fn([f64; 2], usize) -> State) -> GlobalField {
        let mut out = GlobalField::zeros(self.ndof());
        let mut seen = vec![false; self.ndof()];
        for (e, m) in self.metrics.iter().enumerate() {
            let sub = self.mesh.elements()[e].subdomain;
            for k in 0..self.nodes_per_element() {
                let d = self.nodes.dof(e, k);
                if !seen[d] {
                    seen[d] = true;
                    out.values[d] = f([m.x[k], m.y[k]], sub);
                }
            }
        }
        out
    }

    /// Volume part of the residual of one element in two-point form:
    /// `w_i w_j [2 Σ_n D_in F#¹((i,j),(n,j)) + 2 Σ_n D_jn F#²((i,j),(i,n))]`.
    pub fn volume_residual_twopoint(&self, element: usize, u: &[State]) -> Vec<State> {
        let np = self.degree() + 1;
        let m = &self.metrics[element];
        let medium = self.mesh.medium(element);
        let ops = &self.ops;
        let mut r = vec![State::zeros(); np * np];
        for j in 0..np {
            for i in 0..np {
                let k = j * np + i;
                let mut acc = State::zeros();
                for nn in 0..np {
                    let d = ops.d(i, nn);
                    if d != 0.0 {
                        let b = j * np + nn;
                        let ja = avg(m.ja1[k], m.ja1[b]);
                        acc += medium.contravariant_flux(ja, &(u[k] + u[b])) * d;
                    }
                    let d = ops.d(j, nn);
                    if d != 0.0 {
                        let b = nn * np + i;
                        let ja = avg(m.ja2[k], m.ja2[b]);
                        acc += medium.contravariant_flux(ja, &(u[k] + u[b])) * d;
                    }
                }
                // 2 · ⟨Ja⟩ · ½(U_a + U_b) folds into the sum above.
                r[k] = acc * self.weights_2d[k];
            }
        }
        r
    }

    /// Adds `w (F*_out − Ã(ñ_out) U)` for every DG and boundary face node of
    /// `element`. Returns `Σ w F*_out` over the element's boundary face nodes.
    fn add_surface_terms<B: BoundaryProvider + ?Sized>(
        &self,
        element: usize,
        field: &GlobalField,
        local: &[State],
        t: f64,
        bc: &B,
        r: &mut [State],
    ) -> Result<State> {
        let medium = self.mesh.medium(element);
        let sub = self.mesh.elements()[element].subdomain;
        let mut boundary = State::zeros();
        for s in &self.surface[element] {
            let u = local[s.node];
            let other = match s.neighbor {
                Neighbor::Element { element, node } => field.values[self.nodes.dof(element, node)],
                Neighbor::Boundary { x } => {
                    let g = bc.exterior(x, t, sub);
                    if !g.iter().all(|v| v.is_finite()) {
                        return Err(Error::BoundaryData {
                            x: x[0],
                            y: x[1],
                            t,
                        });
                    }
                    g
                }
            };
            let fstar = s.m_self * u + s.m_other * other;
            if matches!(s.neighbor, Neighbor::Boundary { .. }) {
                boundary += fstar * s.weight;
            }
            r[s.node] += (fstar - medium.contravariant_flux(s.n_out, &u)) * s.weight;
        }
        Ok(boundary)
    }

    /// Numerical flux at every DG and boundary face node of `element`, as
    /// `(node, weight, ñ_out, F*_out)`.
    pub fn surface_fluxes<B: BoundaryProvider + ?Sized>(
        &self,
        element: usize,
        field: &GlobalField,
        t: f64,
        bc: &B,
    ) -> Result<Vec<(usize, f64, [f64; 2], State)>> {
        let sub = self.mesh.elements()[element].subdomain;
        self.surface[element]
            .iter()
            .map(|s| {
                let u = field.values[self.nodes.dof(element, s.node)];
                let other = match s.neighbor {
                    Neighbor::Element { element, node } => {
                        field.values[self.nodes.dof(element, node)]
                    }
                    Neighbor::Boundary { x } => bc.exterior(x, t, sub),
                };
                Ok((s.node, s.weight, s.n_out, s.m_self * u + s.m_other * other))
            })
            .collect()
    }

    /// Full element residual `R_e` of the production (two-point) form.
    pub fn element_residual<B: BoundaryProvider + ?Sized>(
        &self,
        element: usize,
        field: &GlobalField,
        t: f64,
        bc: &B,
    ) -> Result<(Vec<State>, State)> {
        let local = self.element_values(field, element);
        let mut r = self.volume_residual_twopoint(element, &local);
        let flux = self.add_surface_terms(element, field, &local, t, bc, &mut r)?;
        Ok((r, flux))
    }

    /// Stiffness summation `Ů = −(Σ_e R_e)/(Σ_e J_e w)`.
    pub fn assemble_time_derivative(&self, residuals: &[Vec<State>], out: &mut GlobalField) {
        for v in out.values.iter_mut() {
            *v = State::zeros();
        }
        for (e, r) in residuals.iter().enumerate() {
            for (k, rk) in r.iter().enumerate() {
                out.values[self.nodes.dof(e, k)] += rk;
            }
        }
        for (v, m) in out.values.iter_mut().zip(&self.mass) {
            *v /= -m;
        }
    }

    /// Semi-discrete time derivative of `field` at time `t`.
    pub fn rhs<B: BoundaryProvider + ?Sized>(
        &self,
        field: &GlobalField,
        t: f64,
        bc: &B,
        out: &mut GlobalField,
    ) -> Result<RhsInfo> {
        let n_el = self.mesh.elements().len();
        let results: Vec<Result<(Vec<State>, State)>> = if self.parallel {
            (0..n_el)
                .into_par_iter()
                .map(|e| self.element_residual(e, field, t, bc))
                .collect()
        } else {
            (0..n_el)
                .map(|e| self.element_residual(e, field, t, bc))
                .collect()
        };
        let mut residuals = Vec::with_capacity(n_el);
        let mut boundary_flux = State::zeros();
        for res in results {
            let (r, f) = res?;
            residuals.push(r);
            boundary_flux += f;
        }
        self.assemble_time_derivative(&residuals, out);
        Ok(RhsInfo { boundary_flux })
    }

    /// `Σ_nodes J w U` over all elements.
    pub fn total(&self, field: &GlobalField) -> State {
        field
            .values
            .iter()
            .zip(&self.mass)
            .fold(State::zeros(), |acc, (v, m)| acc + v * *m)
    }

    /// Discrete energy `‖Uˢ‖_N = √(Σ_e ⟨J Uˢ, Uˢ⟩_N)` with each element's
    /// own symmetrizer.
    pub fn energy(&self, field: &GlobalField) -> f64 {
        let np2 = self.nodes_per_element();
        let mut sum = 0.0;
        for (e, m) in self.metrics.iter().enumerate() {
            let medium = self.mesh.medium(e);
            for k in 0..np2 {
                let u = field.values[self.nodes.dof(e, k)];
                sum += m.jac[k] * self.weights_2d[k] * medium.energy_density(&u);
            }
        }
        sum.sqrt()
    }

    /// Time derivative of the squared energy, `2⟨J Ůˢ, Uˢ⟩_N`.
    pub fn energy_rate(&self, field: &GlobalField, dudt: &GlobalField) -> f64 {
        let np2 = self.nodes_per_element();
        let mut sum = 0.0;
        for (e, m) in self.metrics.iter().enumerate() {
            let medium = self.mesh.medium(e);
            for k in 0..np2 {
                let d = self.nodes.dof(e, k);
                let us = medium.to_symmetry(&field.values[d]);
                let dus = medium.to_symmetry(&dudt.values[d]);
                sum += 2.0 * m.jac[k] * self.weights_2d[k] * us.dot(&dus);
            }
        }
        sum
    }

    /// Media of every element, for callers that need coefficient data.
    pub fn element_medium(&self, element: usize) -> &Medium {
        self.mesh.medium(element)
    }
}

#[inline]
fn avg(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}
