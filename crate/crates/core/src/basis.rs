//! Legendre–Gauss–Lobatto collocation on `[-1, 1]`.
//!
//! Nodes, quadrature weights, the Lagrange basis through the nodes and the
//! collocation derivative matrix. Two-dimensional quantities are stored on the
//! tensor grid with the ξ index running fastest: `values[j * (N + 1) + i]`
//! holds the value at `(ξ_i, η_j)`.

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 50;

/// Slack allowed when checking that an evaluation point lies in `[-1, 1]`.
const REFERENCE_SLACK: f64 = 1e-12;

/// One-dimensional LGL collocation operators of degree `N`.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct SpectralOperators {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    /// Row-major, `deriv[i * (N + 1) + n] = ℓ'_n(s_i)`.
    deriv: Vec<f64>,
}

/// Legendre polynomial `L_N(s)` and its derivative.
fn legendre_and_derivative(n: usize, s: f64) -> (f64, f64) {
    match n {
        0 => (1.0, 0.0),
        1 => (s, 1.0),
        _ => {
            let (mut l_prev2, mut l_prev1) = (1.0, s);
            let (mut d_prev2, mut d_prev1) = (0.0, 1.0);
            let mut l = 0.0;
            let mut d = 0.0;
            for k in 2..=n {
                let kf = k as f64;
                l = ((2.0 * kf - 1.0) * s * l_prev1 - (kf - 1.0) * l_prev2) / kf;
                d = d_prev2 + (2.0 * kf - 1.0) * l_prev1;
                l_prev2 = l_prev1;
                l_prev1 = l;
                d_prev2 = d_prev1;
                d_prev1 = d;
            }
            (l, d)
        }
    }
}

/// `q(s) = L_{N+1}(s) - L_{N-1}(s)`, its derivative and `L_N(s)`.
///
/// `q` is proportional to `(1 - s²) L'_N(s)`, so its interior roots are the
/// interior LGL nodes.
fn q_and_l(n: usize, s: f64) -> (f64, f64, f64) {
    let (l_nm1, d_nm1) = legendre_and_derivative(n - 1, s);
    let (l_n, d_n) = legendre_and_derivative(n, s);
    let nf = n as f64;
    let l_np1 = ((2.0 * nf + 1.0) * s * l_n - nf * l_nm1) / (nf + 1.0);
    let d_np1 = d_nm1 + (2.0 * nf + 1.0) * l_n;
    let _ = d_n;
    (l_np1 - l_nm1, d_np1 - d_nm1, l_n)
}

impl SpectralOperators {
    /// Builds LGL nodes, weights and the derivative matrix for degree `degree`.
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidDegree(degree));
        }
        let n = degree;
        let np = n + 1;
        let mut nodes = vec![0.0; np];
        let mut weights = vec![0.0; np];
        let nf = n as f64;
        let end_weight = 2.0 / (nf * (nf + 1.0));

        nodes[0] = -1.0;
        nodes[n] = 1.0;
        weights[0] = end_weight;
        weights[n] = end_weight;

        // Interior nodes come in ± pairs; solve for the left half only.
        for j in 1..np.div_ceil(2) {
            let mut s = -(std::f64::consts::PI * j as f64 / nf).cos();
            for _ in 0..NEWTON_MAX_ITER {
                let (q, dq, _) = q_and_l(n, s);
                let delta = -q / dq;
                s += delta;
                if delta.abs() <= NEWTON_TOL * s.abs().max(1.0) {
                    break;
                }
            }
            let (_, _, l_n) = q_and_l(n, s);
            nodes[j] = s;
            nodes[n - j] = -s;
            weights[j] = end_weight / (l_n * l_n);
            weights[n - j] = weights[j];
        }
        if n % 2 == 0 {
            let (_, _, l_n) = q_and_l(n, 0.0);
            nodes[n / 2] = 0.0;
            weights[n / 2] = end_weight / (l_n * l_n);
        }

        let bary: Vec<f64> = (0..np)
            .map(|j| {
                let prod: f64 = (0..np)
                    .filter(|&k| k != j)
                    .map(|k| nodes[j] - nodes[k])
                    .product();
                1.0 / prod
            })
            .collect();

        let mut deriv = vec![0.0; np * np];
        for i in 0..np {
            let mut diag = 0.0;
            for j in 0..np {
                if i != j {
                    let d = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                    deriv[i * np + j] = d;
                    diag -= d;
                }
            }
            deriv[i * np + i] = diag;
        }

        Ok(Self {
            degree,
            nodes,
            weights,
            bary,
            deriv,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of nodes, `N + 1`.
    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `D[i][n] = ℓ'_n(s_i)`.
    #[inline]
    pub fn d(&self, i: usize, n: usize) -> f64 {
        self.deriv[i * (self.degree + 1) + n]
    }

    /// The derivative matrix as nested rows, `D[i][n] = ℓ'_n(s_i)`.
    pub fn derivative_matrix(&self) -> Vec<Vec<f64>> {
        let np = self.len();
        (0..np)
            .map(|i| self.deriv[i * np..(i + 1) * np].to_vec())
            .collect()
    }

    /// Row-major derivative matrix.
    pub fn derivative_slice(&self) -> &[f64] {
        &self.deriv
    }

    /// Lagrange basis function `ℓ_l(s)`.
    pub fn lagrange_eval(&self, l: usize, s: f64) -> Result<f64> {
        if l > self.degree {
            return Err(Error::IndexOutOfRange {
                index: l,
                degree: self.degree,
            });
        }
        check_reference(s, 0.0)?;
        Ok(self.lagrange_values(s)[l])
    }

    /// All basis values `ℓ_0(s) … ℓ_N(s)` via the barycentric formula.
    pub fn lagrange_values(&self, s: f64) -> Vec<f64> {
        let np = self.len();
        if let Some(k) = self.coincident_node(s) {
            let mut v = vec![0.0; np];
            v[k] = 1.0;
            return v;
        }
        let t: Vec<f64> = (0..np)
            .map(|j| self.bary[j] / (s - self.nodes[j]))
            .collect();
        let sum: f64 = t.iter().sum();
        t.into_iter().map(|tj| tj / sum).collect()
    }

    /// All basis derivatives `ℓ'_0(s) … ℓ'_N(s)`.
    pub fn lagrange_derivatives(&self, s: f64) -> Vec<f64> {
        let np = self.len();
        if let Some(k) = self.coincident_node(s) {
            return self.deriv[k * np..(k + 1) * np].to_vec();
        }
        let t: Vec<f64> = (0..np)
            .map(|j| self.bary[j] / (s - self.nodes[j]))
            .collect();
        let sum: f64 = t.iter().sum();
        let ell: Vec<f64> = t.iter().map(|tj| tj / sum).collect();
        (0..np)
            .map(|l| {
                let acc: f64 = (0..np)
                    .map(|j| {
                        let delta = if j == l { 1.0 } else { 0.0 };
                        t[j] * (ell[l] - delta) / (s - self.nodes[j])
                    })
                    .sum();
                acc / sum
            })
            .collect()
    }

    fn coincident_node(&self, s: f64) -> Option<usize> {
        self.nodes
            .iter()
            .position(|&x| (s - x).abs() <= 4.0 * f64::EPSILON)
    }

    /// Nodal derivative of a one-dimensional nodal polynomial.
    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        let np = self.len();
        (0..np)
            .map(|i| (0..np).map(|n| self.d(i, n) * values[n]).sum())
            .collect()
    }

    /// LGL quadrature of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Evaluates the tensor-product interpolant of `values` at `(xi, eta)`.
    pub fn interpolate_2d(&self, values: &[f64], xi: f64, eta: f64) -> Result<f64> {
        let np = self.len();
        if values.len() != np * np {
            return Err(Error::ShapeMismatch {
                expected: np * np,
                got: values.len(),
            });
        }
        check_reference(xi, eta)?;
        let lx = self.lagrange_values(xi);
        let ly = self.lagrange_values(eta);
        let mut acc = 0.0;
        for j in 0..np {
            let row: f64 = (0..np).map(|i| values[j * np + i] * lx[i]).sum();
            acc += row * ly[j];
        }
        Ok(acc)
    }
}

fn check_reference(xi: f64, eta: f64) -> Result<()> {
    let lim = 1.0 + REFERENCE_SLACK;
    if xi.abs() > lim || eta.abs() > lim || !xi.is_finite() || !eta.is_finite() {
        return Err(Error::OutsideReferenceElement(xi, eta));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn degree_zero_is_rejected() {
        assert!(matches!(
            SpectralOperators::new(0),
            Err(Error::InvalidDegree(0))
        ));
    }

    #[test]
    fn linear_nodes_and_weights() {
        let ops = SpectralOperators::new(1).unwrap();
        assert_eq!(ops.nodes(), &[-1.0, 1.0]);
        assert_eq!(ops.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn quadratic_nodes_and_weights() {
        let ops = SpectralOperators::new(2).unwrap();
        for (a, b) in ops.nodes().iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        for (a, b) in ops.weights().iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        // Exact on monomials up to degree 2N - 1 = 3.
        for k in 0..=3 {
            let f: Vec<f64> = ops.nodes().iter().map(|s| s.powi(k)).collect();
            let exact = if k % 2 == 0 {
                2.0 / (k as f64 + 1.0)
            } else {
                0.0
            };
            assert_abs_diff_eq!(ops.integrate(&f), exact, epsilon = 1e-15);
        }
    }

    #[test]
    fn node_symmetry_and_weight_sum() {
        for n in 1..=20 {
            let ops = SpectralOperators::new(n).unwrap();
            assert_eq!(ops.nodes()[0], -1.0);
            assert_eq!(ops.nodes()[n], 1.0);
            for j in 0..=n {
                assert_abs_diff_eq!(ops.nodes()[j], -ops.nodes()[n - j], epsilon = 1e-14);
            }
            assert!(ops.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!(ops.weights().iter().all(|&w| w > 0.0));
            assert_abs_diff_eq!(ops.weights().iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn lagrange_examples() {
        let ops = SpectralOperators::new(2).unwrap();
        assert_abs_diff_eq!(ops.lagrange_eval(1, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(ops.lagrange_eval(1, 1.0).unwrap(), 0.0);
        // Product formula: (s + 1)(s - 1) / ((0 + 1)(0 - 1)) at s = 0.5.
        let product = (0.5 + 1.0) * (0.5 - 1.0) / ((0.0 + 1.0) * (0.0 - 1.0));
        assert_abs_diff_eq!(ops.lagrange_eval(1, 0.5).unwrap(), product, epsilon = 1e-15);
        assert_abs_diff_eq!(product, 0.75);
        assert!(matches!(
            ops.lagrange_eval(3, 0.0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(ops.lagrange_eval(0, 1.5).is_err());
    }

    #[test]
    fn linear_derivative_matrix() {
        let ops = SpectralOperators::new(1).unwrap();
        let d = ops.derivative_matrix();
        assert_abs_diff_eq!(d[0][0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d[0][1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1][0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1][1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn derivative_of_cubic() {
        let ops = SpectralOperators::new(3).unwrap();
        let f: Vec<f64> = ops.nodes().iter().map(|s| s.powi(3)).collect();
        let df = ops.differentiate(&f);
        for (s, d) in ops.nodes().iter().zip(df) {
            assert_abs_diff_eq!(d, 3.0 * s * s, epsilon = 1e-13);
        }
    }

    #[test]
    fn derivative_polynomial_exactness_and_row_sums() {
        for n in 1..=12 {
            let ops = SpectralOperators::new(n).unwrap();
            for row in ops.derivative_matrix() {
                assert_abs_diff_eq!(row.iter().sum::<f64>(), 0.0, epsilon = 1e-13);
            }
            for k in 1..=n as i32 {
                let f: Vec<f64> = ops.nodes().iter().map(|s| s.powi(k)).collect();
                let df = ops.differentiate(&f);
                for (s, d) in ops.nodes().iter().zip(df) {
                    let exact = k as f64 * s.powi(k - 1);
                    assert!((d - exact).abs() < 1e-12, "N={n} k={k}: {d} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn sbp_identity() {
        for n in 1..=12 {
            let ops = SpectralOperators::new(n).unwrap();
            let np = n + 1;
            for i in 0..np {
                for j in 0..np {
                    let q_ij = ops.weights()[i] * ops.d(i, j);
                    let q_ji = ops.weights()[j] * ops.d(j, i);
                    let b = if i == j && i == 0 {
                        -1.0
                    } else if i == j && i == n {
                        1.0
                    } else {
                        0.0
                    };
                    assert!((q_ij + q_ji - b).abs() < 1e-13, "N={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn off_node_derivatives_match_product_rule() {
        let ops = SpectralOperators::new(5).unwrap();
        let s = 0.3217;
        let d = ops.lagrange_derivatives(s);
        let h = 1e-6;
        let vp = ops.lagrange_values(s + h);
        let vm = ops.lagrange_values(s - h);
        for l in 0..=5 {
            assert_abs_diff_eq!(d[l], (vp[l] - vm[l]) / (2.0 * h), epsilon = 1e-8);
        }
        // At a node the derivative row is used.
        let at_node = ops.lagrange_derivatives(ops.nodes()[2]);
        for l in 0..=5 {
            assert_eq!(at_node[l], ops.d(2, l));
        }
    }

    #[test]
    fn interpolate_2d_examples() {
        let ops = SpectralOperators::new(4).unwrap();
        let np = ops.len();
        let constant = vec![2.5; np * np];
        assert_abs_diff_eq!(
            ops.interpolate_2d(&constant, 0.17, -0.9).unwrap(),
            2.5,
            epsilon = 1e-14
        );
        let mut bilinear = vec![0.0; np * np];
        for j in 0..np {
            for i in 0..np {
                bilinear[j * np + i] = ops.nodes()[i] * ops.nodes()[j];
            }
        }
        assert_abs_diff_eq!(
            ops.interpolate_2d(&bilinear, 0.3, -0.2).unwrap(),
            -0.06,
            epsilon = 1e-14
        );
        assert!(matches!(
            ops.interpolate_2d(&bilinear, 1.3, 0.0),
            Err(Error::OutsideReferenceElement(..))
        ));
        assert!(matches!(
            ops.interpolate_2d(&bilinear[1..], 0.0, 0.0),
            Err(Error::ShapeMismatch { .. })
        ));

        let ops8 = SpectralOperators::new(8).unwrap();
        let np = ops8.len();
        let mut sine = vec![0.0; np * np];
        for j in 0..np {
            for i in 0..np {
                sine[j * np + i] = (std::f64::consts::PI * ops8.nodes()[i]).sin();
            }
        }
        // Interpolation remainder: |f - I f| ≤ max|f⁽ᴺ⁺¹⁾| / (N+1)! · |Π(ξ - ξ_i)|.
        let xi = 0.123;
        let got = ops8.interpolate_2d(&sine, xi, 0.4).unwrap();
        let node_poly: f64 = ops8.nodes().iter().map(|s| (xi - s).abs()).product();
        let factorial: f64 = (1..=9).map(|k| k as f64).product();
        let bound = std::f64::consts::PI.powi(9) / factorial * node_poly;
        let err = (got - (std::f64::consts::PI * xi).sin()).abs();
        assert!(err <= bound, "{err} > {bound}");

        let ops14 = SpectralOperators::new(14).unwrap();
        let np = ops14.len();
        let mut sine = vec![0.0; np * np];
        for j in 0..np {
            for i in 0..np {
                sine[j * np + i] = (std::f64::consts::PI * ops14.nodes()[i]).sin();
            }
        }
        let got = ops14.interpolate_2d(&sine, xi, 0.4).unwrap();
        assert_abs_diff_eq!(got, (std::f64::consts::PI * xi).sin(), epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn quadrature_exact_to_degree_2n_minus_1(
            n in 1usize..=12,
            coeffs in proptest::collection::vec(-1.0f64..1.0, 24),
        ) {
            let ops = SpectralOperators::new(n).unwrap();
            let deg = 2 * n - 1;
            let c = &coeffs[..=deg];
            let values: Vec<f64> = ops
                .nodes()
                .iter()
                .map(|&s| c.iter().rev().fold(0.0, |acc, &a| acc * s + a))
                .collect();
            let exact: f64 = c
                .iter()
                .enumerate()
                .map(|(k, a)| if k % 2 == 0 { 2.0 * a / (k as f64 + 1.0) } else { 0.0 })
                .sum();
            let norm: f64 = c.iter().map(|a| a.abs()).sum::<f64>().max(1.0);
            prop_assert!((ops.integrate(&values) - exact).abs() < 1e-12 * norm);
        }

        #[test]
        fn discrete_integration_by_parts(
            n in 1usize..=12,
            f in proptest::collection::vec(-1.0f64..1.0, 13),
            v in proptest::collection::vec(-1.0f64..1.0, 13),
        ) {
            let ops = SpectralOperators::new(n).unwrap();
            let f = &f[..=n];
            let v = &v[..=n];
            let df = ops.differentiate(f);
            let dv = ops.differentiate(v);
            let lhs: f64 = (0..=n).map(|i| df[i] * v[i] * ops.weights()[i]).sum();
            let rhs: f64 = f[n] * v[n] - f[0] * v[0]
                - (0..=n).map(|i| f[i] * dv[i] * ops.weights()[i]).sum::<f64>();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
