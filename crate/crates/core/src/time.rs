//! Explicit Runge-Kutta time integration of the semi-discrete system.
//!
//! Two schemes are available: the classical four-stage RK4 and the
//! five-stage fourth-order low-storage scheme of Carpenter and Kennedy
//! (2N-storage, `k ← a_s k + Δt f`, `u ← u + b_s k`). Alongside the field the
//! integrator carries the time integral of the boundary flux with the same
//! scheme, so global conservation can be audited at the discrete level.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acoustics::State;
use crate::error::{Error, Result};
use crate::operator::{BoundaryProvider, Discretization, GlobalField};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Classical four-stage fourth-order Runge-Kutta.
    Rk4,
    /// Five-stage fourth-order low-storage Runge-Kutta.
    #[default]
    Lsrk45,
}

/// Settings for a time integration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeIntegratorConfig {
    /// Scheme used for every step.
    pub scheme: Scheme,
    /// Courant number passed to [`stable_timestep`].
    pub cfl: f64,
    /// Final time of the run.
    pub t_final: f64,
    /// Fixed step that replaces the CFL estimate when set.
    pub dt_override: Option<f64>,
}

impl Default for TimeIntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Lsrk45,
            cfl: 0.4,
            t_final: 0.0,
            dt_override: None,
        }
    }
}

impl TimeIntegratorConfig {
    /// Checks `cfl > 0`, `t_final ≥ 0` and a positive override.
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::Config(format!(
                "cfl must be positive, got {}",
                self.cfl
            )));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!(
                "t_final must be non-negative, got {}",
                self.t_final
            )));
        }
        if let Some(dt) = self.dt_override {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!(
                    "dt_override must be positive, got {dt}"
                )));
            }
        }
        Ok(())
    }

    /// Step size for `disc`: the override if set, otherwise the CFL estimate.
    pub fn timestep(&self, disc: &Discretization) -> f64 {
        self.dt_override
            .unwrap_or_else(|| stable_timestep(disc, self.cfl))
    }
}

/// CFL step `Δt = cfl · min J / (c (|Ja¹| + |Ja²|)) / (2N + 1)`, the minimum
/// taken over all nodes of all elements.
pub fn stable_timestep(disc: &Discretization, cfl: f64) -> f64 {
    let n = disc.degree() as f64;
    let mut best = f64::INFINITY;
    for (e, m) in disc.metrics().iter().enumerate() {
        let c = disc.element_medium(e).c;
        for k in 0..m.jac.len() {
            let speed = c * (m.ja1[k][0].hypot(m.ja1[k][1]) + m.ja2[k][0].hypot(m.ja2[k][1]));
            best = best.min(m.jac[k] / speed);
        }
    }
    cfl * best / (2.0 * n + 1.0)
}

/// A semi-discrete system `Ů = f(t, U)`. The returned state is the boundary
/// flux quadrature whose time integral is tracked for conservation audits.
pub trait SemiDiscrete: Sync {
    /// Number of unknown nodal states.
    fn ndof(&self) -> usize;
    /// Evaluates `out = f(t, u)`.
    fn evaluate(&self, t: f64, u: &GlobalField, out: &mut GlobalField) -> Result<State>;
}

/// The spatial operator together with its boundary data.
pub struct AcousticSystem<'a, B: BoundaryProvider + ?Sized> {
    /// Spatial discretization.
    pub disc: &'a Discretization,
    /// Exterior data on physical boundaries.
    pub boundary: &'a B,
}

impl<B: BoundaryProvider + ?Sized> SemiDiscrete for AcousticSystem<'_, B> {
    fn ndof(&self) -> usize {
        self.disc.ndof()
    }

    fn evaluate(&self, t: f64, u: &GlobalField, out: &mut GlobalField) -> Result<State> {
        Ok(self.disc.rhs(u, t, self.boundary, out)?.boundary_flux)
    }
}

const LSRK_A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
const LSRK_B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
const LSRK_C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

/// Field length from which stage updates run in parallel.
const PARALLEL_THRESHOLD: usize = 4096;

fn update(target: &mut [State], source: &[State], op: impl Fn(&mut State, &State) + Sync + Send) {
    if target.len() >= PARALLEL_THRESHOLD {
        target
            .par_iter_mut()
            .zip(source.par_iter())
            .for_each(|(t, s)| op(t, s));
    } else {
        target.iter_mut().zip(source).for_each(|(t, s)| op(t, s));
    }
}

/// Summary of an [`Integrator::advance`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvanceStats {
    /// Number of steps taken.
    pub steps: usize,
    /// Uniform step size used.
    pub dt: f64,
    /// Time integral of the boundary flux over the interval.
    pub boundary_integral: State,
}

/// Reusable Runge-Kutta stepper with preallocated stage storage.
pub struct Integrator {
    scheme: Scheme,
    stage: GlobalField,
    accum: GlobalField,
    work: GlobalField,
}

impl Integrator {
    /// Allocates stage storage for `ndof` nodal states.
    pub fn new(scheme: Scheme, ndof: usize) -> Self {
        Self {
            scheme,
            stage: GlobalField::zeros(ndof),
            accum: GlobalField::zeros(ndof),
            work: GlobalField::zeros(ndof),
        }
    }

    /// Selected scheme.
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Advances `u` from `t` to `t + dt` and returns the integral of the
    /// boundary flux over the step. A non-finite result aborts with
    /// [`Error::NonFinite`].
    pub fn step<S: SemiDiscrete + ?Sized>(
        &mut self,
        system: &S,
        u: &mut GlobalField,
        t: f64,
        dt: f64,
    ) -> Result<State> {
        if u.len() != self.stage.len() {
            return Err(Error::ShapeMismatch {
                expected: self.stage.len(),
                got: u.len(),
            });
        }
        let flux_integral = match self.scheme {
            Scheme::Lsrk45 => self.step_lsrk(system, u, t, dt)?,
            Scheme::Rk4 => self.step_rk4(system, u, t, dt)?,
        };
        if !u.is_finite() {
            return Err(Error::NonFinite {
                time: t + dt,
                last_good: t,
            });
        }
        Ok(flux_integral)
    }

    fn step_lsrk<S: SemiDiscrete + ?Sized>(
        &mut self,
        system: &S,
        u: &mut GlobalField,
        t: f64,
        dt: f64,
    ) -> Result<State> {
        let mut q = State::zeros();
        let mut kq = State::zeros();
        for s in 0..5 {
            let flux = system.evaluate(t + LSRK_C[s] * dt, u, &mut self.work)?;
            let a = LSRK_A[s];
            update(&mut self.stage.values, &self.work.values, |k, f| {
                *k = *k * a + f * dt
            });
            kq = kq * a + flux * dt;
            let b = LSRK_B[s];
            update(&mut u.values, &self.stage.values, |y, k| *y += k * b);
            q += kq * b;
        }
        Ok(q)
    }

    fn step_rk4<S: SemiDiscrete + ?Sized>(
        &mut self,
        system: &S,
        u: &mut GlobalField,
        t: f64,
        dt: f64,
    ) -> Result<State> {
        // stage holds U at the step start, accum the weighted increment.
        self.stage.values.copy_from_slice(&u.values);
        self.accum
            .values
            .iter_mut()
            .for_each(|v| *v = State::zeros());
        let mut q = State::zeros();
        let weights = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];
        let offsets = [0.0, 0.5, 0.5, 1.0];
        let mut eval_point = u.clone();
        for s in 0..4 {
            let flux = system.evaluate(t + offsets[s] * dt, &eval_point, &mut self.work)?;
            q += flux * (weights[s] * dt);
            let w = weights[s] * dt;
            update(&mut self.accum.values, &self.work.values, |a, f| {
                *a += f * w
            });
            if s < 3 {
                let h = offsets[s + 1] * dt;
                eval_point.values.copy_from_slice(&self.stage.values);
                update(&mut eval_point.values, &self.work.values, |y, f| {
                    *y += f * h
                });
            }
        }
        update(&mut u.values, &self.accum.values, |y, a| *y += a);
        Ok(q)
    }

    /// Advances from `t0` to `t1` with the largest uniform step not exceeding
    /// `dt_max`, landing exactly on `t1`.
    pub fn advance<S: SemiDiscrete + ?Sized>(
        &mut self,
        system: &S,
        u: &mut GlobalField,
        t0: f64,
        t1: f64,
        dt_max: f64,
    ) -> Result<AdvanceStats> {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(AdvanceStats {
                steps: 0,
                dt: 0.0,
                boundary_integral: State::zeros(),
            });
        }
        let steps = (span / dt_max - 1e-9).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        let mut boundary_integral = State::zeros();
        for s in 0..steps {
            boundary_integral += self.step(system, u, t0 + s as f64 * dt, dt)?;
        }
        Ok(AdvanceStats {
            steps,
            dt,
            boundary_integral,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::Medium;
    use crate::mesh::{cartesian_mesh, CartesianOptions};

    /// `u′ = λu` on every component, with a constant unit "boundary flux" so
    /// its integral must equal the elapsed time.
    struct Linear {
        lambda: f64,
        n: usize,
    }

    impl SemiDiscrete for Linear {
        fn ndof(&self) -> usize {
            self.n
        }

        fn evaluate(&self, _t: f64, u: &GlobalField, out: &mut GlobalField) -> Result<State> {
            for (o, v) in out.values.iter_mut().zip(&u.values) {
                *o = v * self.lambda;
            }
            Ok(State::new(1.0, 0.0, 0.0))
        }
    }

    /// `u′ = cos t`, exercising the stage times.
    struct Forced;

    impl SemiDiscrete for Forced {
        fn ndof(&self) -> usize {
            1
        }

        fn evaluate(&self, t: f64, _u: &GlobalField, out: &mut GlobalField) -> Result<State> {
            out.values[0] = State::new(t.cos(), 0.0, 0.0);
            Ok(State::new(t.cos(), 0.0, 0.0))
        }
    }

    fn error_at(scheme: Scheme, steps: usize) -> f64 {
        let sys = Linear { lambda: -1.3, n: 1 };
        let mut u = GlobalField {
            values: vec![State::new(1.0, 0.0, 0.0)],
        };
        let mut int = Integrator::new(scheme, 1);
        int.advance(&sys, &mut u, 0.0, 2.0, 2.0 / steps as f64)
            .unwrap();
        (u.values[0][0] - (-2.6f64).exp()).abs()
    }

    #[test]
    fn fourth_order_convergence() {
        for scheme in [Scheme::Rk4, Scheme::Lsrk45] {
            let e1 = error_at(scheme, 20);
            let e2 = error_at(scheme, 40);
            let order = (e1 / e2).log2();
            assert!(order >= 3.9, "{scheme:?}: order {order}");
        }
    }

    #[test]
    fn stage_times_are_consistent() {
        for scheme in [Scheme::Rk4, Scheme::Lsrk45] {
            let mut u = GlobalField::zeros(1);
            let mut int = Integrator::new(scheme, 1);
            let stats = int.advance(&Forced, &mut u, 0.0, 1.5, 0.05).unwrap();
            assert!((u.values[0][0] - 1.5f64.sin()).abs() < 1e-7);
            assert!((stats.boundary_integral[0] - 1.5f64.sin()).abs() < 1e-7);
        }
    }

    #[test]
    fn boundary_integral_tracks_elapsed_time() {
        let sys = Linear { lambda: 0.0, n: 3 };
        let mut u = GlobalField::zeros(3);
        let mut int = Integrator::new(Scheme::Lsrk45, 3);
        let stats = int.advance(&sys, &mut u, 0.25, 1.0, 0.1).unwrap();
        assert_eq!(stats.steps, 8);
        assert!((stats.boundary_integral[0] - 0.75).abs() < 1e-14);
        assert!((stats.dt * 8.0 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn free_stream_is_unchanged() {
        let mesh = cartesian_mesh(2, 2, [0.0, 1.0, 0.0, 1.0], &Default::default()).unwrap();
        let disc = Discretization::new(mesh, 4).unwrap();
        let c = State::new(1.0, 0.5, -0.25);
        let bc = move |_: [f64; 2], _: f64, _: usize| c;
        let sys = AcousticSystem {
            disc: &disc,
            boundary: &bc,
        };
        let mut u = disc.project(|_, _| c);
        let before = u.clone();
        for scheme in [Scheme::Rk4, Scheme::Lsrk45] {
            let mut int = Integrator::new(scheme, disc.ndof());
            int.advance(&sys, &mut u, 0.0, 0.1, 0.01).unwrap();
            let diff = u
                .values
                .iter()
                .zip(&before.values)
                .map(|(a, b)| (a - b).amax())
                .fold(0.0, f64::max);
            assert!(diff < 1e-14);
        }
    }

    #[test]
    fn non_finite_state_aborts() {
        let sys = Linear {
            lambda: 1e300,
            n: 1,
        };
        let mut u = GlobalField {
            values: vec![State::new(1e300, 0.0, 0.0)],
        };
        let mut int = Integrator::new(Scheme::Lsrk45, 1);
        let err = int.advance(&sys, &mut u, 0.0, 1.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::NonFinite { last_good, .. } if last_good == 0.0));
    }

    #[test]
    fn timestep_formula() {
        let mesh = cartesian_mesh(20, 20, [-5.0, 5.0, -5.0, 5.0], &Default::default()).unwrap();
        let disc = Discretization::new(mesh, 9).unwrap();
        // h = 0.5: J = h²/4, |Ja¹| = |Ja²| = h/2.
        let expected = 0.5 * (0.0625 / (0.25 + 0.25)) / 19.0;
        assert!((stable_timestep(&disc, 0.5) - expected).abs() < 1e-15);
    }

    #[test]
    fn timestep_scaling() {
        let opts = |c: f64| CartesianOptions {
            materials: vec![Medium::new(1.0, c).unwrap()],
            ..Default::default()
        };
        let dt = |n: usize, c: f64| {
            let mesh = cartesian_mesh(n, n, [0.0, 1.0, 0.0, 1.0], &opts(c)).unwrap();
            stable_timestep(&Discretization::new(mesh, 5).unwrap(), 0.4)
        };
        assert!((dt(4, 1.0) / dt(8, 1.0) - 2.0).abs() < 1e-12);
        assert!((dt(4, 1.0) / dt(4, 2.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(TimeIntegratorConfig::default().validate().is_ok());
        let bad = TimeIntegratorConfig {
            cfl: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TimeIntegratorConfig {
            t_final: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TimeIntegratorConfig {
            dt_override: Some(-0.1),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
