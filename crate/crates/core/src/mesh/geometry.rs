//! Element mappings and metric terms.

use crate::basis::SpectralOperators;
use crate::error::{Error, Result};

/// Polynomial map from the reference square to one physical element.
///
/// Stored as nodal positions on the LGL grid of the geometry degree `N_g`,
/// ξ index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMapping {
    degree: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ElementMapping {
    pub fn new(degree: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidDegree(0));
        }
        let n = (degree + 1) * (degree + 1);
        for v in [&x, &y] {
            if v.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(Self { degree, x, y })
    }

    /// Samples `f(ξ, η)` at the LGL nodes of degree `degree`.
    pub fn from_fn(degree: usize, f: impl Fn(f64, f64) -> [f64; 2]) -> Result<Self> {
        let ops = SpectralOperators::new(degree)?;
        let np = degree + 1;
        let mut x = Vec::with_capacity(np * np);
        let mut y = Vec::with_capacity(np * np);
        for &eta in ops.nodes() {
            for &xi in ops.nodes() {
                let p = f(xi, eta);
                x.push(p[0]);
                y.push(p[1]);
            }
        }
        Ok(Self { degree, x, y })
    }

    /// Bilinear map through four corners, counter-clockwise from `(-1, -1)`.
    pub fn bilinear(corners: [[f64; 2]; 4]) -> Self {
        let [c0, c1, c2, c3] = corners;
        let mut x = Vec::with_capacity(4);
        let mut y = Vec::with_capacity(4);
        // Node order is (ξ,η) = (-1,-1), (1,-1), (-1,1), (1,1).
        for c in [c0, c1, c3, c2] {
            x.push(c[0]);
            y.push(c[1]);
        }
        Self { degree: 1, x, y }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Physical position of reference point `(ξ, η)`.
    pub fn evaluate(&self, ops: &SpectralOperators, xi: f64, eta: f64) -> Result<[f64; 2]> {
        Ok([
            ops.interpolate_2d(&self.x, xi, eta)?,
            ops.interpolate_2d(&self.y, xi, eta)?,
        ])
    }

    /// Physical corner positions, counter-clockwise from `(-1, -1)`.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let n = self.degree;
        let np = n + 1;
        let at = |i: usize, j: usize| [self.x[j * np + i], self.y[j * np + i]];
        [at(0, 0), at(n, 0), at(n, n), at(0, n)]
    }
}

/// Metric terms of one element sampled at the solution nodes.
///
/// `ja1 = J∇ξ = (Y_η, −X_η)` and `ja2 = J∇η = (−Y_ξ, X_ξ)` are the volume
/// weighted contravariant vectors, `jac = X_ξ Y_η − X_η Y_ξ`.
#[derive(Debug, Clone)]
pub struct ElementMetrics {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub ja1: Vec<[f64; 2]>,
    pub ja2: Vec<[f64; 2]>,
    pub jac: Vec<f64>,
}

impl ElementMetrics {
    /// Computes nodal positions and metric terms on the solution grid of `ops`.
    ///
    /// Derivatives of the mapping are evaluated exactly from its degree `N_g`
    /// polynomial. For `N ≥ N_g` this coincides with differentiating the
    /// degree-`N` interpolant; for `N < N_g` the representation is
    /// superparametric and the discrete metric identities no longer hold.
    pub fn compute(mapping: &ElementMapping, ops: &SpectralOperators) -> Result<Self> {
        let geo = SpectralOperators::new(mapping.degree)?;
        let ng = geo.len();
        let np = ops.len();
        let vals: Vec<Vec<f64>> = ops
            .nodes()
            .iter()
            .map(|&s| geo.lagrange_values(s))
            .collect();
        let ders: Vec<Vec<f64>> = ops
            .nodes()
            .iter()
            .map(|&s| geo.lagrange_derivatives(s))
            .collect();

        let n_nodes = np * np;
        let mut out = Self {
            x: vec![0.0; n_nodes],
            y: vec![0.0; n_nodes],
            ja1: vec![[0.0; 2]; n_nodes],
            ja2: vec![[0.0; 2]; n_nodes],
            jac: vec![0.0; n_nodes],
        };
        for j in 0..np {
            for i in 0..np {
                let (mut x, mut y) = (0.0, 0.0);
                let (mut x_xi, mut y_xi, mut x_eta, mut y_eta) = (0.0, 0.0, 0.0, 0.0);
                for b in 0..ng {
                    for a in 0..ng {
                        let gx = mapping.x[b * ng + a];
                        let gy = mapping.y[b * ng + a];
                        let v = vals[i][a] * vals[j][b];
                        let dxi = ders[i][a] * vals[j][b];
                        let deta = vals[i][a] * ders[j][b];
                        x += gx * v;
                        y += gy * v;
                        x_xi += gx * dxi;
                        y_xi += gy * dxi;
                        x_eta += gx * deta;
                        y_eta += gy * deta;
                    }
                }
                let k = j * np + i;
                out.x[k] = x;
                out.y[k] = y;
                out.ja1[k] = [y_eta, -x_eta];
                out.ja2[k] = [-y_xi, x_xi];
                out.jac[k] = x_xi * y_eta - x_eta * y_xi;
            }
        }
        Ok(out)
    }

    /// Checks `J > 0` at every node.
    pub fn check_positive(&self, element: usize) -> Result<()> {
        for (node, &jacobian) in self.jac.iter().enumerate() {
            if !(jacobian > 0.0) {
                return Err(Error::InvertedElement {
                    element,
                    node,
                    jacobian,
                });
            }
        }
        Ok(())
    }

    /// Outward scaled normal `ñ` at node `k` of face `side`.
    ///
    /// Its length is the face Jacobian.
    pub fn face_normal(&self, n: usize, side: usize, k: usize) -> [f64; 2] {
        let idx = face_node(n, side, k);
        match side {
            0 => neg(self.ja2[idx]),
            1 => self.ja1[idx],
            2 => self.ja2[idx],
            _ => neg(self.ja1[idx]),
        }
    }

    /// Discrete divergence `D_ξ Ja¹ + D_η Ja²` at every node.
    pub fn metric_identity_residual(&self, ops: &SpectralOperators) -> Vec<[f64; 2]> {
        let np = ops.len();
        let mut res = vec![[0.0; 2]; np * np];
        for j in 0..np {
            for i in 0..np {
                let mut r = [0.0; 2];
                for m in 0..np {
                    let d_xi = ops.d(i, m);
                    let d_eta = ops.d(j, m);
                    let a = self.ja1[j * np + m];
                    let b = self.ja2[m * np + i];
                    r[0] += d_xi * a[0] + d_eta * b[0];
                    r[1] += d_xi * a[1] + d_eta * b[1];
                }
                res[j * np + i] = r;
            }
        }
        res
    }
}

fn neg(v: [f64; 2]) -> [f64; 2] {
    [-v[0], -v[1]]
}

/// Element-local index of node `k` (counted along increasing tangential
/// coordinate) on face `side`.
///
/// Sides are numbered counter-clockwise: 0 is `η = −1`, 1 is `ξ = +1`,
/// 2 is `η = +1`, 3 is `ξ = −1`.
#[inline]
pub fn face_node(n: usize, side: usize, k: usize) -> usize {
    let np = n + 1;
    match side {
        0 => k,
        1 => k * np + n,
        2 => n * np + k,
        _ => k * np,
    }
}

/// Corner vertex indices `(start, end)` of a side in increasing tangential
/// direction, with corners numbered counter-clockwise from `(-1, -1)`.
pub fn side_corners(side: usize) -> (usize, usize) {
    match side {
        0 => (0, 1),
        1 => (1, 2),
        2 => (3, 2),
        _ => (0, 3),
    }
}
