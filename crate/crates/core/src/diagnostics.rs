//! Error norms, energy, conservation bookkeeping and report output.
//!
//! Errors are sampled at the Gauss-Lobatto nodes of every element. A node
//! shared by several elements is checked once per element, with the exact
//! solution evaluated in that element's subdomain, so the two sides of a
//! material interface are each compared with their own exact state.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::acoustics::State;
use crate::error::Result;
use crate::operator::{Discretization, GlobalField};

/// Exact solution evaluated at a point of a given subdomain.
pub trait ExactSolution: Sync {
    /// State at `x`, time `t`, inside subdomain `subdomain`.
    fn state(&self, x: [f64; 2], t: f64, subdomain: usize) -> State;
}

impl<F> ExactSolution for F
where
    F: Fn([f64; 2], f64, usize) -> State + Sync,
{
    fn state(&self, x: [f64; 2], t: f64, subdomain: usize) -> State {
        self(x, t, subdomain)
    }
}

/// Nodal error measures of a field against an exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// Maximum nodal error per component `[p, u, v]`.
    pub max_component: [f64; 3],
    /// Maximum nodal error over all components.
    pub max: f64,
    /// Quadrature `L²` norm of the error, `√(Σ J w |U − u|²)`.
    pub l2: f64,
}

impl ErrorNorms {
    /// `log₁₀` of the maximum error.
    pub fn log10_max(&self) -> f64 {
        self.max.log10()
    }
}

/// Nodal error norms of `field` at time `t`.
pub fn error_norms<E: ExactSolution + ?Sized>(
    disc: &Discretization,
    field: &GlobalField,
    exact: &E,
    t: f64,
) -> ErrorNorms {
    let mut max_component = [0.0f64; 3];
    let mut l2 = 0.0;
    let w = disc.weights_2d();
    for (e, m) in disc.metrics().iter().enumerate() {
        let subdomain = disc.mesh().elements()[e].subdomain;
        for k in 0..disc.nodes_per_element() {
            let u = field.values[disc.nodes().dof(e, k)];
            let err = u - exact.state([m.x[k], m.y[k]], t, subdomain);
            for (c, mc) in max_component.iter_mut().enumerate() {
                *mc = mc.max(err[c].abs());
            }
            l2 += m.jac[k] * w[k] * err.norm_squared();
        }
    }
    ErrorNorms {
        max_component,
        max: max_component.iter().copied().fold(0.0, f64::max),
        l2: l2.sqrt(),
    }
}

/// Maximum nodal error over all components.
pub fn max_error<E: ExactSolution + ?Sized>(
    disc: &Discretization,
    field: &GlobalField,
    exact: &E,
    t: f64,
) -> f64 {
    error_norms(disc, field, exact, t).max
}

/// Discrete energy `√(Σ_e ⟨J Uˢ, Uˢ⟩_N)` in symmetry variables.
pub fn discrete_energy(disc: &Discretization, field: &GlobalField) -> f64 {
    disc.energy(field)
}

/// Tracks `Σ J w U` against the time-integrated boundary flux.
///
/// Global conservation states `Σ J w U(t) − Σ J w U(0) = −∫ boundary flux`,
/// so the drift `|ΔΣ J w U + ∫ flux dt|` measures the discrete violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationLedger {
    initial: State,
    boundary_integral: State,
}

impl ConservationLedger {
    /// Starts a ledger from the initial field.
    pub fn new(disc: &Discretization, field: &GlobalField) -> Self {
        Self {
            initial: disc.total(field),
            boundary_integral: State::zeros(),
        }
    }

    /// Adds the boundary flux integral over one or more steps.
    pub fn record(&mut self, boundary_integral: State) {
        self.boundary_integral += boundary_integral;
    }

    /// Largest component of `|Σ J w U − Σ J w U₀ + ∫ flux dt|`.
    pub fn drift(&self, disc: &Discretization, field: &GlobalField) -> f64 {
        (disc.total(field) - self.initial + self.boundary_integral).amax()
    }
}

/// Summary of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    /// Experiment name.
    pub experiment: String,
    /// Interface treatment (`cg`, `dg`, `hybrid`).
    pub mode: String,
    /// Polynomial degree.
    pub degree: usize,
    /// Number of elements.
    pub elements: usize,
    /// Number of global nodes.
    pub dofs: usize,
    /// Time integration scheme.
    pub scheme: String,
    /// Step size.
    pub dt: f64,
    /// Number of steps.
    pub steps: usize,
    /// Final time.
    pub t_final: f64,
    /// Error against the exact solution at the final time, if one exists.
    pub errors: Option<ErrorNorms>,
    /// Maximum `|Ů|` of the final state, the residual of a steady problem.
    pub max_time_derivative: f64,
    /// Sampled `(t, energy)` pairs.
    pub energy: Vec<(f64, f64)>,
    /// Conservation drift at the final time.
    pub conservation_drift: f64,
    /// Wall-clock time of the run in seconds.
    pub runtime_seconds: f64,
}

impl RunReport {
    /// `log₁₀` of the maximum error, or of the steady residual when there is
    /// no exact solution.
    pub fn log10_error(&self) -> f64 {
        match &self.errors {
            Some(e) => e.log10_max(),
            None => self.max_time_derivative.log10(),
        }
    }
}

/// Writes `(t, energy)` rows with the header `t,energy`.
pub fn write_energy_csv<W: Write>(out: W, series: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "energy"]).map_err(csv_error)?;
    for (t, e) in series {
        w.serialize((t, e)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `(N, log10_max_error)` rows with the header `N,log10_max_error`.
pub fn write_convergence_csv<W: Write>(out: W, rows: &[(usize, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "log10_max_error"])
        .map_err(csv_error)?;
    for (n, e) in rows {
        w.serialize((n, e)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a CSV file via `write`, creating parent directories.
pub fn write_csv_file(path: &Path, write: impl FnOnce(std::fs::File) -> Result<()>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    write(std::fs::File::create(path)?)
}

fn csv_error(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::Medium;
    use crate::mesh::{cartesian_mesh, CartesianOptions};
    use crate::time::{AcousticSystem, Integrator, Scheme};

    fn unit_square(n: usize) -> Discretization {
        let mesh =
            cartesian_mesh(2, 2, [0.0, 1.0, 0.0, 1.0], &CartesianOptions::default()).unwrap();
        Discretization::new(mesh, n).unwrap()
    }

    #[test]
    fn interpolated_exact_solution_has_zero_error() {
        let disc = unit_square(4);
        let f = |x: [f64; 2], t: f64, _s: usize| State::new(x[0].sin() + t, x[1], x[0] * x[1]);
        let u = disc.project(|x, s| f(x, 0.7, s));
        let e = error_norms(&disc, &u, &f, 0.7);
        assert_eq!(e.max, 0.0);
        assert_eq!(e.l2, 0.0);
    }

    #[test]
    fn max_error_picks_largest_component() {
        let disc = unit_square(3);
        let mut u = GlobalField::zeros(disc.ndof());
        u.values[5] = State::new(0.1, -0.4, 0.2);
        let zero = |_: [f64; 2], _: f64, _: usize| State::zeros();
        let e = error_norms(&disc, &u, &zero, 0.0);
        assert_eq!(e.max_component, [0.1, 0.4, 0.2]);
        assert_eq!(max_error(&disc, &u, &zero, 0.0), 0.4);
    }

    #[test]
    fn energy_of_constant_field() {
        let disc = unit_square(5);
        assert_eq!(
            discrete_energy(&disc, &GlobalField::zeros(disc.ndof())),
            0.0
        );
        let c = State::new(0.3, -0.4, 1.2);
        let u = disc.project(|_, _| c);
        assert!((discrete_energy(&disc, &u) - c.norm()).abs() < 1e-14);
    }

    #[test]
    fn symmetric_energy_matches_weighted_form() {
        let m = Medium::new(0.4, 0.7).unwrap();
        let mesh = cartesian_mesh(
            2,
            1,
            [0.0, 2.0, 0.0, 1.0],
            &CartesianOptions {
                materials: vec![m],
                ..Default::default()
            },
        )
        .unwrap();
        let disc = Discretization::new(mesh, 4).unwrap();
        let u = disc.project(|x, _| State::new(x[0], x[1] - 0.3, x[0] * x[1]));
        let sinv = m.symmetrizer_inv();
        let weight = sinv.transpose() * sinv;
        let mut sum = 0.0;
        for (e, mt) in disc.metrics().iter().enumerate() {
            for k in 0..disc.nodes_per_element() {
                let v = u.values[disc.nodes().dof(e, k)];
                sum += mt.jac[k] * disc.weights_2d()[k] * v.dot(&(weight * v));
            }
        }
        assert!((discrete_energy(&disc, &u) - sum.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn closed_run_conserves_to_round_off() {
        let disc = unit_square(5);
        let bump = |x: [f64; 2], _s: usize| {
            let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
            State::new((-r2 / 0.005).exp(), 0.0, 0.0)
        };
        let mut u = disc.project(bump);
        let mut ledger = ConservationLedger::new(&disc, &u);
        let bc = crate::operator::ZeroBoundary;
        let sys = AcousticSystem {
            disc: &disc,
            boundary: &bc,
        };
        let mut int = Integrator::new(Scheme::Lsrk45, disc.ndof());
        let stats = int.advance(&sys, &mut u, 0.0, 0.05, 0.005).unwrap();
        ledger.record(stats.boundary_integral);
        assert!(ledger.drift(&disc, &u) < 1e-11);
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_energy_csv(&mut buf, &[(0.5, 2.0), (1.0, 1.5)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,energy\n0.5,2.0\n1.0,1.5\n"
        );
        let mut buf = Vec::new();
        write_convergence_csv(&mut buf, &[(4, -0.5)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "N,log10_max_error\n4,-0.5\n"
        );
        let mut buf = Vec::new();
        write_convergence_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "N,log10_max_error\n");
    }
}
