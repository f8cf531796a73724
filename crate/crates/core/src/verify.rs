//! Measurable discrete identities and stability properties.
//!
//! Each function returns the size of a defect that vanishes (or is
//! non-positive) in exact arithmetic. The `check` command and the acceptance
//! suite compare them against tolerances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acoustics::{
    boundary_energy_bound, boundary_energy_term, interface_energy_characteristic,
    interface_energy_numerical, Medium, State,
};
use crate::basis::SpectralOperators;
use crate::error::Result;
use crate::mesh::{curved_mesh_example, warped_cartesian_mesh, CartesianOptions, HybridMesh};
use crate::operator::forms::Form;
use crate::operator::{Discretization, GlobalField, ZeroBoundary};

/// `max |W D + Dᵀ W − B|` with `B = diag(−1, 0, …, 0, 1)`.
pub fn sbp_defect(ops: &SpectralOperators) -> f64 {
    let np = ops.len();
    let w = ops.weights();
    let mut worst = 0.0f64;
    for i in 0..np {
        for j in 0..np {
            let q = w[i] * ops.d(i, j) + w[j] * ops.d(j, i);
            let b = if i == j && i == 0 {
                -1.0
            } else if i == j && i == np - 1 {
                1.0
            } else {
                0.0
            };
            worst = worst.max((q - b).abs());
        }
    }
    worst
}

/// Largest quadrature error over monomials of degree `0 … 2N − 1`.
pub fn quadrature_defect(ops: &SpectralOperators) -> f64 {
    let n = ops.degree();
    (0..2 * n)
        .map(|k| {
            let approx: f64 = ops
                .nodes()
                .iter()
                .zip(ops.weights())
                .map(|(x, w)| w * x.powi(k as i32))
                .sum();
            let exact = if k % 2 == 0 {
                2.0 / (k as f64 + 1.0)
            } else {
                0.0
            };
            (approx - exact).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest nodal derivative error over monomials of degree `0 … N`,
/// relative to `max(1, |exact|)`.
pub fn derivative_defect(ops: &SpectralOperators) -> f64 {
    let n = ops.degree();
    let x = ops.nodes();
    let mut worst = 0.0f64;
    for k in 0..=n {
        let f: Vec<f64> = x.iter().map(|s| s.powi(k as i32)).collect();
        let df = ops.differentiate(&f);
        for (i, s) in x.iter().enumerate() {
            let exact = if k == 0 {
                0.0
            } else {
                k as f64 * s.powi(k as i32 - 1)
            };
            worst = worst.max((df[i] - exact).abs() / exact.abs().max(1.0));
        }
    }
    worst
}

fn random_field(disc: &Discretization, rng: &mut ChaCha8Rng) -> GlobalField {
    GlobalField {
        values: (0..disc.ndof())
            .map(|_| State::from_fn(|_, _| rng.gen_range(-1.0..1.0)))
            .collect(),
    }
}

/// Smooth interior deformation of `[−1, 1]²` that keeps the boundary fixed.
pub fn warp(x: [f64; 2]) -> [f64; 2] {
    [
        x[0] + 0.1 * (1.3 * x[1]).sin() * (1.0 - x[0] * x[0]),
        x[1] + 0.08 * (1.7 * x[0] + 0.4).cos() * (1.0 - x[1] * x[1]),
    ]
}

/// Two-by-two curved mesh of `[−1, 1]²` with geometry degree `ng`.
pub fn curved_2x2(ng: usize) -> Result<HybridMesh> {
    warped_cartesian_mesh(
        2,
        2,
        [-1.0, 1.0, -1.0, 1.0],
        ng,
        warp,
        &CartesianOptions::default(),
    )
}

/// Largest difference between the stiffness-summed time derivatives of all
/// residual forms and the two-point form, relative to `max(1, |Ů|)`.
pub fn form_equivalence_defect(mesh: HybridMesh, degree: usize, seed: u64) -> Result<f64> {
    let disc = Discretization::new(mesh, degree)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_field(&disc, &mut rng);
    let g = |x: [f64; 2], t: f64, _s: usize| {
        State::new((x[0] + t).sin(), 0.3 * x[1].cos(), -0.2 * x[0] * x[1])
    };
    let reference = disc.form_time_derivative(Form::TwoPoint, &u, 0.3, &g)?;
    let scale = reference.max_abs().max(1.0);
    let mut worst = 0.0f64;
    for form in Form::ALL {
        let du = disc.form_time_derivative(form, &u, 0.3, &g)?;
        for (a, b) in du.values.iter().zip(&reference.values) {
            worst = worst.max((a - b).amax() / scale);
        }
    }
    Ok(worst)
}

/// `max |Ů|` for a constant state on the curved example mesh.
pub fn free_stream_residual(degree: usize, all_dg: bool) -> Result<f64> {
    let mut mesh = curved_mesh_example()?;
    if all_dg {
        mesh = mesh.with_all_dg();
    }
    let disc = Discretization::new(mesh, degree)?;
    let c = State::new(1.0, 0.5, -0.25);
    let u = disc.project(|_, _| c);
    let mut du = GlobalField::zeros(disc.ndof());
    disc.rhs(&u, 0.0, &move |_: [f64; 2], _: f64, _: usize| c, &mut du)?;
    Ok(du.max_abs())
}

/// `|Σ J w Ů + boundary flux|` relative to `max(1, |boundary flux|)` for a
/// random state and random boundary data.
pub fn conservation_defect(mesh: HybridMesh, degree: usize, seed: u64) -> Result<f64> {
    let disc = Discretization::new(mesh, degree)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_field(&disc, &mut rng);
    let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let g = move |x: [f64; 2], t: f64, s: usize| {
        State::new(a * x[0] + s as f64, b * x[1] + t, (x[0] * x[1]).sin())
    };
    let mut du = GlobalField::zeros(disc.ndof());
    let info = disc.rhs(&u, 0.0, &g, &mut du)?;
    let scale = info.boundary_flux.amax().max(1.0);
    Ok((disc.total(&du) + info.boundary_flux).amax() / scale)
}

/// Largest semi-discrete energy rate `2⟨J Ůˢ, Uˢ⟩_N` over `samples` random
/// states with zero boundary data.
pub fn max_energy_rate(mesh: HybridMesh, degree: usize, samples: usize, seed: u64) -> Result<f64> {
    let disc = Discretization::new(mesh, degree)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let u = random_field(&disc, &mut rng);
        let mut du = GlobalField::zeros(disc.ndof());
        disc.rhs(&u, 0.0, &ZeroBoundary, &mut du)?;
        worst = worst.max(disc.energy_rate(&u, &du));
    }
    Ok(worst)
}

fn random_medium(rng: &mut ChaCha8Rng) -> Medium {
    Medium {
        rho: rng.gen_range(0.1..5.0),
        c: rng.gen_range(0.1..5.0),
    }
}

fn random_normal(rng: &mut ChaCha8Rng) -> [f64; 2] {
    loop {
        let n: [f64; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        if n[0].hypot(n[1]) > 1e-3 {
            return n;
        }
    }
}

/// Largest relative excess `(Q_N − Q) / (1 + |Q|)` of the numerical interface
/// energy over the characteristic one, over random media, states and normals.
pub fn interface_inequality_excess(samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let (l, r) = (random_medium(&mut rng), random_medium(&mut rng));
        let ul = State::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        let ur = State::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        let n = random_normal(&mut rng);
        let qn = interface_energy_numerical(&l, &r, &ul, &ur, n)?;
        let q = interface_energy_characteristic(&l, &r, &ul, &ur, n)?;
        worst = worst.max((qn - q) / (1.0 + q.abs()));
    }
    Ok(worst)
}

/// Largest relative excess of the boundary energy term over its bound
/// `½ gˢᵀ|Ãˢ⁻|gˢ`, over random media, states, data and normals.
pub fn boundary_inequality_excess(samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let m = random_medium(&mut rng);
        let u = State::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        let g = State::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        let n = random_normal(&mut rng);
        let lhs = boundary_energy_term(&m, &u, &g, n)?;
        let rhs = boundary_energy_bound(&m, &g, n)?;
        worst = worst.max((lhs - rhs) / (1.0 + rhs.abs()));
    }
    Ok(worst)
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    /// Short name.
    pub name: String,
    /// Measured value.
    pub value: f64,
    /// Threshold the value must not exceed.
    pub tolerance: f64,
}

impl CheckOutcome {
    /// `value ≤ tolerance`.
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// Quick invariant suite run by the `check` command.
pub fn run_checks() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let mut push = |name: &str, value: f64, tolerance: f64| {
        out.push(CheckOutcome {
            name: name.to_string(),
            value,
            tolerance,
        })
    };
    let mut sbp = 0.0f64;
    let mut quad = 0.0f64;
    let mut deriv = 0.0f64;
    for n in 1..=12 {
        let ops = SpectralOperators::new(n)?;
        sbp = sbp.max(sbp_defect(&ops));
        quad = quad.max(quadrature_defect(&ops));
        deriv = deriv.max(derivative_defect(&ops));
    }
    push("summation-by-parts identity, N = 1..12", sbp, 1e-12);
    push("quadrature exactness to degree 2N-1", quad, 1e-12);
    push("derivative exactness to degree N", deriv, 1e-12);
    let forms = form_equivalence_defect(curved_2x2(3)?, 5, 1)?.max(form_equivalence_defect(
        curved_2x2(3)?.with_all_dg(),
        5,
        2,
    )?);
    push("form equivalence on curved 2x2 mesh", forms, 1e-12);
    push(
        "free-stream residual, curved mesh, N = 5",
        free_stream_residual(5, false)?,
        1e-10,
    );
    push(
        "global conservation identity",
        conservation_defect(curved_mesh_example()?, 6, 3)?,
        1e-12,
    );
    push(
        "energy rate with zero data",
        max_energy_rate(curved_mesh_example()?.with_all_dg(), 5, 3, 4)?,
        1e-11,
    );
    push(
        "interface inequality Q_N <= Q",
        interface_inequality_excess(1000, 5)?,
        1e-12,
    );
    push(
        "boundary energy inequality",
        boundary_inequality_excess(1000, 6)?,
        1e-12,
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defects_vanish_for_exact_operators() {
        let ops = SpectralOperators::new(4).unwrap();
        assert!(sbp_defect(&ops) < 1e-13);
        assert!(quadrature_defect(&ops) < 1e-14);
        assert!(derivative_defect(&ops) < 1e-13);
    }

    #[test]
    fn superparametric_free_stream_is_not_preserved() {
        assert!(free_stream_residual(4, false).unwrap() > 1e-5);
        assert!(free_stream_residual(5, true).unwrap() < 1e-10);
    }

    #[test]
    fn all_checks_pass() {
        for c in run_checks().unwrap() {
            assert!(c.passed(), "{}: {} > {}", c.name, c.value, c.tolerance);
        }
    }
}
