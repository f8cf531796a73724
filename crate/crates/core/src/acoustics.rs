//! Two-dimensional linear acoustics.
//!
//! The state is `[p, u, v]`: pressure and the two velocity components. The
//! system is `q_t + A1 q_x + A2 q_y = 0` with constant coefficients inside one
//! material. The diagonal symmetrizer `S = diag(c, 1/ρ, 1/ρ)` makes
//! `S⁻¹ A_i S` symmetric; symmetry variables are `qˢ = S⁻¹ q = (p/c, ρu, ρv)`.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodal state `[p, u, v]`, either conservative or symmetrized depending on
/// context.
pub type State = Vector3<f64>;

/// Material coefficients of one subdomain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    /// Density `ρ`.
    pub rho: f64,
    /// Sound speed `c`.
    pub c: f64,
}

impl Medium {
    /// Validated medium with positive, finite `ρ` and `c`.
    pub fn new(rho: f64, c: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite() && c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!(
                "density and sound speed must be positive, got rho={rho}, c={c}"
            )));
        }
        Ok(Self { rho, c })
    }

    /// Unit density and sound speed.
    pub fn unit() -> Self {
        Self { rho: 1.0, c: 1.0 }
    }

    /// Acoustic impedance `ρc`.
    pub fn impedance(&self) -> f64 {
        self.rho * self.c
    }

    pub fn a1(&self) -> Matrix3<f64> {
        let k = self.rho * self.c * self.c;
        Matrix3::new(0.0, k, 0.0, 1.0 / self.rho, 0.0, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn a2(&self) -> Matrix3<f64> {
        let k = self.rho * self.c * self.c;
        Matrix3::new(0.0, 0.0, k, 0.0, 0.0, 0.0, 1.0 / self.rho, 0.0, 0.0)
    }

    /// Diagonal of the symmetrizer `S`.
    pub fn symmetrizer_diag(&self) -> Vector3<f64> {
        Vector3::new(self.c, 1.0 / self.rho, 1.0 / self.rho)
    }

    pub fn symmetrizer(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.symmetrizer_diag())
    }

    pub fn symmetrizer_inv(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(1.0 / self.c, self.rho, self.rho))
    }

    /// `uˢ = S⁻¹ u`.
    pub fn to_symmetry(&self, u: &State) -> State {
        State::new(u[0] / self.c, self.rho * u[1], self.rho * u[2])
    }

    /// `u = S uˢ`.
    pub fn from_symmetry(&self, us: &State) -> State {
        State::new(us[0] * self.c, us[1] / self.rho, us[2] / self.rho)
    }

    /// Cartesian fluxes `(A1 u, A2 u)`.
    pub fn physical_flux(&self, u: &State) -> (State, State) {
        let k = self.rho * self.c * self.c;
        (
            State::new(k * u[1], u[0] / self.rho, 0.0),
            State::new(k * u[2], 0.0, u[0] / self.rho),
        )
    }

    /// `Ã(n) u = (n_x A1 + n_y A2) u` for an arbitrary (scaled) direction.
    #[inline]
    pub fn contravariant_flux(&self, n: [f64; 2], u: &State) -> State {
        let k = self.rho * self.c * self.c;
        let inv_rho = 1.0 / self.rho;
        State::new(
            k * (n[0] * u[1] + n[1] * u[2]),
            n[0] * inv_rho * u[0],
            n[1] * inv_rho * u[0],
        )
    }

    /// `Ã(n) = n_x A1 + n_y A2`.
    pub fn normal_matrix(&self, n: [f64; 2]) -> Matrix3<f64> {
        self.a1() * n[0] + self.a2() * n[1]
    }

    /// Characteristic decomposition of `Ã(ñ)` in the symmetric frame.
    pub fn decompose(&self, ntilde: [f64; 2]) -> Result<NormalDecomposition> {
        NormalDecomposition::new(*self, ntilde)
    }

    /// Quadratic energy density `|uˢ|²`.
    pub fn energy_density(&self, u: &State) -> f64 {
        self.to_symmetry(u).norm_squared()
    }
}

/// Eigen-decomposition `Ãˢ = S⁻¹ Ã S = P Λ Pᵀ` of the normal coefficient matrix.
///
/// Eigenvalues are stored in descending order, so index 0 is the outgoing
/// (positive) wave, index 1 the stationary one and index 2 the incoming
/// (negative) wave.
#[derive(Debug, Clone)]
pub struct NormalDecomposition {
    pub medium: Medium,
    pub ntilde: [f64; 2],
    /// `Ã` in the conservative frame.
    pub a_tilde: Matrix3<f64>,
    /// Orthonormal eigenvectors of `Ãˢ`, one per column.
    pub p: Matrix3<f64>,
    pub lambda: Vector3<f64>,
}

impl NormalDecomposition {
    pub fn new(medium: Medium, ntilde: [f64; 2]) -> Result<Self> {
        let len = ntilde[0].hypot(ntilde[1]);
        if !(len > 0.0) {
            return Err(Error::ZeroNormal);
        }
        let a_tilde = medium.normal_matrix(ntilde);
        let a_sym = medium.symmetrizer_inv() * a_tilde * medium.symmetrizer();
        // Remove roundoff asymmetry before the symmetric solver sees it.
        let a_sym = (a_sym + a_sym.transpose()) * 0.5;
        let eig = SymmetricEigen::new(a_sym);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut p = Matrix3::zeros();
        let mut lambda = Vector3::zeros();
        for (k, &src) in order.iter().enumerate() {
            p.set_column(k, &eig.eigenvectors.column(src));
            lambda[k] = eig.eigenvalues[src];
        }
        // The stationary wave carries no flux; pin it to zero exactly.
        lambda[1] = 0.0;
        Ok(Self {
            medium,
            ntilde,
            a_tilde,
            p,
            lambda,
        })
    }

    /// `Ãˢ` rebuilt from the decomposition.
    pub fn a_sym(&self) -> Matrix3<f64> {
        self.p * Matrix3::from_diagonal(&self.lambda) * self.p.transpose()
    }

    fn conjugate(&self, diag: Vector3<f64>) -> Matrix3<f64> {
        let s = self.medium.symmetrizer();
        let s_inv = self.medium.symmetrizer_inv();
        s * self.p * Matrix3::from_diagonal(&diag) * self.p.transpose() * s_inv
    }

    /// `|Ã| = S P |Λ| Pᵀ S⁻¹`.
    pub fn abs(&self) -> Matrix3<f64> {
        self.conjugate(self.lambda.abs())
    }

    /// `Ã⁺ = ½(Ã + |Ã|)`.
    pub fn plus(&self) -> Matrix3<f64> {
        self.conjugate(self.lambda.map(|l| l.max(0.0)))
    }

    /// `Ã⁻ = ½(Ã − |Ã|)`.
    pub fn minus(&self) -> Matrix3<f64> {
        self.conjugate(self.lambda.map(|l| l.min(0.0)))
    }

    /// `|Ãˢ⁻|` in the symmetric frame.
    pub fn abs_minus_sym(&self) -> Matrix3<f64> {
        let d = self.lambda.map(|l| (-l).max(0.0));
        self.p * Matrix3::from_diagonal(&d) * self.p.transpose()
    }

    /// Characteristic variables `w = Pᵀ S⁻¹ u`.
    pub fn characteristics(&self, u: &State) -> State {
        self.p.transpose() * self.medium.to_symmetry(u)
    }

    /// Conservative-frame flux `S P Λ w` for characteristic values `w`.
    pub fn flux_from_characteristics(&self, w: &State) -> State {
        self.medium
            .from_symmetry(&(self.p * self.lambda.component_mul(w)))
    }
}

/// Upwind flux within one medium: `F* = Ã⟨U⟩ − ½|Ã|⟦U⟧`.
pub fn upwind_flux_uniform(
    medium: &Medium,
    ul: &State,
    ur: &State,
    ntilde: [f64; 2],
) -> Result<State> {
    let dec = medium.decompose(ntilde)?;
    Ok(upwind_flux_uniform_with(&dec, ul, ur))
}

/// Uniform upwind flux using a precomputed decomposition.
pub fn upwind_flux_uniform_with(dec: &NormalDecomposition, ul: &State, ur: &State) -> State {
    let avg = (ul + ur) * 0.5;
    let jump = ur - ul;
    dec.a_tilde * avg - dec.abs() * jump * 0.5
}

/// Solution of the characteristic interface problem between two media.
#[derive(Debug, Clone)]
pub struct InterfaceSolution {
    /// Characteristics of the left trace.
    pub w_left: State,
    /// Characteristics of the right trace.
    pub w_right: State,
    /// Upwinded incoming value on the left side, `w*⁻`.
    pub w_star_minus: f64,
    /// Upwinded incoming value on the right side, `w*⁺`.
    pub w_star_plus: f64,
    /// Single-valued numerical flux in the conservative frame.
    pub flux: State,
}

/// Linear maps `F* = M_L U_L + M_R U_R` of the interface flux.
///
/// The flux is linear in the two traces, so it can be tabulated once per face
/// node and reused. Within one medium this is the splitting `(Ã⁺, Ã⁻)`.
pub fn interface_flux_matrices(
    left: &Medium,
    right: &Medium,
    ntilde: [f64; 2],
) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let dl = left.decompose(ntilde)?;
    if left == right {
        return Ok((dl.plus(), dl.minus()));
    }
    let dr = right.decompose(ntilde)?;
    let mut ml = Matrix3::zeros();
    let mut mr = Matrix3::zeros();
    for k in 0..3 {
        let mut e = State::zeros();
        e[k] = 1.0;
        let zero = State::zeros();
        ml.set_column(k, &solve_interface(&dl, &dr, &e, &zero)?.flux);
        mr.set_column(k, &solve_interface(&dl, &dr, &zero, &e)?.flux);
    }
    Ok((ml, mr))
}

/// Upwind flux across a material interface, `ñ` pointing from left to right.
///
/// The outgoing characteristic of each side is kept, the incoming ones are
/// chosen so that the normal flux `Ã u` is continuous. Reduces to
/// [`upwind_flux_uniform`] when both media coincide.
pub fn upwind_flux_interface(
    left: &Medium,
    right: &Medium,
    ul: &State,
    ur: &State,
    ntilde: [f64; 2],
) -> Result<State> {
    Ok(interface_solution(left, right, ul, ur, ntilde)?.flux)
}

/// Full characteristic interface solve.
pub fn interface_solution(
    left: &Medium,
    right: &Medium,
    ul: &State,
    ur: &State,
    ntilde: [f64; 2],
) -> Result<InterfaceSolution> {
    let dl = left.decompose(ntilde)?;
    let dr = right.decompose(ntilde)?;
    solve_interface(&dl, &dr, ul, ur)
}

fn solve_interface(
    dl: &NormalDecomposition,
    dr: &NormalDecomposition,
    ul: &State,
    ur: &State,
) -> Result<InterfaceSolution> {
    let w_left = dl.characteristics(ul);
    let w_right = dr.characteristics(ur);
    let sl = dl.medium.symmetrizer();
    let sr = dr.medium.symmetrizer();

    // Flux carried by a unit amplitude of one characteristic.
    let col = |s: &Matrix3<f64>, d: &NormalDecomposition, k: usize| -> Vector3<f64> {
        s * d.p.column(k) * d.lambda[k]
    };
    let a = col(&sl, dl, 2); // left incoming, unknown w*⁻
    let b = -col(&sr, dr, 0); // right incoming, unknown w*⁺
    let rhs = col(&sr, dr, 2) * w_right[2] - col(&sl, dl, 0) * w_left[0];

    // Three equations in two unknowns; the system is consistent because both
    // flux columns lie in the range of Ã, so the normal equations are exact.
    let ata = Matrix2::new(a.dot(&a), a.dot(&b), b.dot(&a), b.dot(&b));
    let atr = Vector2::new(a.dot(&rhs), b.dot(&rhs));
    let sol = ata.lu().solve(&atr).ok_or(Error::SingularInterface)?;
    let w_star_minus = sol[0];
    let w_star_plus = sol[1];

    let flux = dl.flux_from_characteristics(&State::new(w_left[0], w_left[1], w_star_minus));
    Ok(InterfaceSolution {
        w_left,
        w_right,
        w_star_minus,
        w_star_plus,
        flux,
    })
}

/// Two-point volume flux `F# = ⟨Ã⟩⟨U⟩` for nodes `a`, `b` of one element.
#[inline]
pub fn two_point_flux(
    medium: &Medium,
    ua: &State,
    ub: &State,
    na: [f64; 2],
    nb: [f64; 2],
) -> State {
    let n = [0.5 * (na[0] + nb[0]), 0.5 * (na[1] + nb[1])];
    medium.contravariant_flux(n, &((ua + ub) * 0.5))
}

/// Discrete interface energy term
/// `Q_N = ⟦Uˢᵀ S⁻¹ F*⟧ − ½⟦Uˢᵀ Ãˢ Uˢ⟧` with `⟦·⟧ = right − left`.
pub fn interface_energy_numerical(
    left: &Medium,
    right: &Medium,
    ul: &State,
    ur: &State,
    ntilde: [f64; 2],
) -> Result<f64> {
    let f = upwind_flux_interface(left, right, ul, ur, ntilde)?;
    let usl = left.to_symmetry(ul);
    let usr = right.to_symmetry(ur);
    let fl = left.to_symmetry(&f);
    let fr = right.to_symmetry(&f);
    let jump_flux = usr.dot(&fr) - usl.dot(&fl);
    let el = usl.dot(&left.to_symmetry(&left.contravariant_flux(ntilde, ul)));
    let er = usr.dot(&right.to_symmetry(&right.contravariant_flux(ntilde, ur)));
    Ok(jump_flux - 0.5 * (er - el))
}

/// Continuous interface energy term written with the upwinded characteristics,
/// `Q = −½{λ_L⁺(w_L⁺)² − λ_R⁺(w*⁺)²} − ½{|λ_R⁻|(w_R⁻)² − |λ_L⁻|(w*⁻)²}`.
pub fn interface_energy_characteristic(
    left: &Medium,
    right: &Medium,
    ul: &State,
    ur: &State,
    ntilde: [f64; 2],
) -> Result<f64> {
    let dl = left.decompose(ntilde)?;
    let dr = right.decompose(ntilde)?;
    let sol = solve_interface(&dl, &dr, ul, ur)?;
    let plus = dl.lambda[0] * sol.w_left[0].powi(2) - dr.lambda[0] * sol.w_star_plus.powi(2);
    let minus =
        dr.lambda[2].abs() * sol.w_right[2].powi(2) - dl.lambda[2].abs() * sol.w_star_minus.powi(2);
    Ok(-0.5 * plus - 0.5 * minus)
}

/// Left side of the physical boundary bound,
/// `−Uˢᵀ{S⁻¹F* − ½ÃˢUˢ}` with `F*` the upwind flux against exterior data `g`.
pub fn boundary_energy_term(medium: &Medium, u: &State, g: &State, n_out: [f64; 2]) -> Result<f64> {
    let f = upwind_flux_uniform(medium, u, g, n_out)?;
    let us = medium.to_symmetry(u);
    let fs = medium.to_symmetry(&f);
    let afs = medium.to_symmetry(&medium.contravariant_flux(n_out, u));
    Ok(-us.dot(&(fs - afs * 0.5)))
}

/// Right side of the physical boundary bound, `½ gˢᵀ|Aˢ⁻|gˢ`.
pub fn boundary_energy_bound(medium: &Medium, g: &State, n_out: [f64; 2]) -> Result<f64> {
    let dec = medium.decompose(n_out)?;
    let gs = medium.to_symmetry(g);
    Ok(0.5 * gs.dot(&(dec.abs_minus_sym() * gs)))
}
