//! Closed-form solutions used for initial data, boundary data and errors.
//!
//! A plane wave travelling in the unit direction `k̂` through a medium with
//! sound speed `c` is
//!
//! `u = a ψ(k̂·x / c − (t − t₀)) [1, k̂ₓ/(ρc), k̂ᵧ/(ρc)]`,
//!
//! with the profile `ψ(s) = sin(ωs)` or the wavepacket
//! `ψ(s) = sin(ωs) exp(−s²/σ²)`, `σ² = −(MT)²/(4 ln 10⁻⁴)`, `T = 2π/ω`.
//! The profile argument is a travel time, so `σ` and `T` are both times and
//! the envelope drops to `10⁻⁴` at `s = ±MT/2`.
//!
//! Two media meeting at `x = 0` scatter an incident wave from the left into a
//! reflected and a transmitted wave. Their amplitudes follow from continuity
//! of the normal flux `A₁u`, which for this system means continuity of `p/ρ`
//! and of `ρc²u`.

use serde::{Deserialize, Serialize};

use crate::acoustics::{Medium, State};
use crate::error::{Error, Result};

/// Shape of the wave profile `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Envelope {
    /// `ψ(s) = sin(ωs)`.
    Sine,
    /// `ψ(s) = sin(ωs) exp(−s²/σ²)` with `modes` periods in the significant
    /// part of the envelope.
    Wavepacket {
        /// Number of periods `M` inside the `10⁻⁴` level of the envelope.
        modes: f64,
    },
}

/// A plane wave: amplitude, direction, frequency, profile and time offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSpec {
    /// Amplitude `a`.
    pub amplitude: f64,
    /// Propagation direction; normalized before use.
    pub direction: [f64; 2],
    /// Angular frequency `ω`.
    pub omega: f64,
    /// Time offset `t₀`.
    pub t0: f64,
    /// Profile shape.
    pub envelope: Envelope,
}

impl WaveSpec {
    /// Checks `ω > 0`, a nonzero direction and a positive mode count.
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::Config(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        let len = self.direction[0].hypot(self.direction[1]);
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::Config("wave direction must be nonzero".into()));
        }
        if let Envelope::Wavepacket { modes } = self.envelope {
            if !(modes > 0.0 && modes.is_finite()) {
                return Err(Error::Config(format!(
                    "modes must be positive, got {modes}"
                )));
            }
        }
        if !self.amplitude.is_finite() || !self.t0.is_finite() {
            return Err(Error::Config("amplitude and t0 must be finite".into()));
        }
        Ok(())
    }

    /// Unit propagation direction `k̂`.
    pub fn unit_direction(&self) -> [f64; 2] {
        let len = self.direction[0].hypot(self.direction[1]);
        [self.direction[0] / len, self.direction[1] / len]
    }

    /// Period `T = 2π/ω`.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// Envelope width `σ`, or `None` for the sine profile.
    pub fn sigma(&self) -> Option<f64> {
        match self.envelope {
            Envelope::Sine => None,
            Envelope::Wavepacket { modes } => {
                let mt = modes * self.period();
                Some((-(mt * mt) / (4.0 * 1e-4f64.ln())).sqrt())
            }
        }
    }

    /// Profile value `ψ(s)`.
    pub fn profile(&self, s: f64) -> f64 {
        let carrier = (self.omega * s).sin();
        match self.sigma() {
            None => carrier,
            Some(sigma) => carrier * (-(s * s) / (sigma * sigma)).exp(),
        }
    }
}

/// `a ψ(k̂·x/c − (t − t₀)) [1, k̂ₓ/(ρc), k̂ᵧ/(ρc)]` for direction `k̂`.
fn wave_state(
    spec: &WaveSpec,
    amplitude: f64,
    dir: [f64; 2],
    medium: &Medium,
    x: [f64; 2],
    t: f64,
) -> State {
    let s = (dir[0] * x[0] + dir[1] * x[1]) / medium.c - (t - spec.t0);
    let p = amplitude * spec.profile(s);
    let z = medium.impedance();
    State::new(p, p * dir[0] / z, p * dir[1] / z)
}

/// Exact plane wave in a single medium.
pub fn plane_wave_state(spec: &WaveSpec, medium: &Medium, x: [f64; 2], t: f64) -> State {
    wave_state(spec, spec.amplitude, spec.unit_direction(), medium, x, t)
}

/// Uniform state, independent of position and time.
pub fn constant_state(value: State) -> impl Fn([f64; 2], f64) -> State + Copy + Sync {
    move |_, _| value
}

/// State on the far side of an interface with normal `n̂` that carries the
/// same normal flux `Ã(n̂)u` as `left`. The tangential velocity, which the
/// normal flux does not see, is copied from `left`.
pub fn rankine_hugoniot_state(
    left_medium: &Medium,
    right_medium: &Medium,
    left: &State,
    normal: [f64; 2],
) -> Result<State> {
    let len = normal[0].hypot(normal[1]);
    if len == 0.0 {
        return Err(Error::ZeroNormal);
    }
    let n = [normal[0] / len, normal[1] / len];
    let (l, r) = (left_medium, right_medium);
    // Continuity of ρc² u·n̂ and p/ρ; the tangential component is free.
    let un = (l.rho * l.c * l.c) / (r.rho * r.c * r.c) * (n[0] * left[1] + n[1] * left[2]);
    let ut = -n[1] * left[1] + n[0] * left[2];
    Ok(State::new(
        r.rho / l.rho * left[0],
        un * n[0] - ut * n[1],
        un * n[1] + ut * n[0],
    ))
}

/// Which side of the interface `x = 0` a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `x < 0`, incident and reflected waves.
    Left,
    /// `x > 0`, transmitted wave.
    Right,
}

/// Reflection and transmission of a plane wave at the interface `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringSpec {
    /// Medium for `x < 0`.
    pub left: Medium,
    /// Medium for `x > 0`.
    pub right: Medium,
    /// Incident wave, travelling in `left` with a positive x component.
    pub incident: WaveSpec,
    incident_dir: [f64; 2],
    transmitted_dir: [f64; 2],
    reflection: f64,
    transmission: f64,
}

impl ScatteringSpec {
    /// Derives the reflected and transmitted waves. Grazing incidence and
    /// total internal reflection are rejected.
    pub fn new(left: Medium, right: Medium, incident: WaveSpec) -> Result<Self> {
        incident.validate()?;
        let [kx, ky] = incident.unit_direction();
        if kx <= 0.0 {
            return Err(Error::Unsupported(
                "incident wave must travel towards the interface (k_x > 0)".into(),
            ));
        }
        // Snell: sin θ_t / c_R = sin θ_i / c_L.
        let sin_t = right.c / left.c * ky;
        if sin_t.abs() >= 1.0 {
            return Err(Error::Unsupported(format!(
                "total internal reflection (sin θ_t = {sin_t})"
            )));
        }
        let cos_t = (1.0 - sin_t * sin_t).sqrt();
        let zl = left.impedance() * kx;
        let zr = right.impedance() * cos_t;
        let reflection = (zl - zr) / (zl + zr);
        let transmission = 2.0 * right.rho * left.c * kx / (zl + zr);
        Ok(Self {
            left,
            right,
            incident,
            incident_dir: [kx, ky],
            transmitted_dir: [cos_t, sin_t],
            reflection,
            transmission,
        })
    }

    /// Amplitude ratio `aʳ/aⁱ`.
    pub fn reflection_ratio(&self) -> f64 {
        self.reflection
    }

    /// Amplitude ratio `aᵗ/aⁱ`.
    pub fn transmission_ratio(&self) -> f64 {
        self.transmission
    }

    /// Unit direction of the reflected wave.
    pub fn reflected_direction(&self) -> [f64; 2] {
        [-self.incident_dir[0], self.incident_dir[1]]
    }

    /// Unit direction of the transmitted wave.
    pub fn transmitted_direction(&self) -> [f64; 2] {
        self.transmitted_dir
    }

    /// Exact state at `x` on the given side.
    pub fn state(&self, side: Side, x: [f64; 2], t: f64) -> State {
        let a = self.incident.amplitude;
        match side {
            Side::Left => {
                wave_state(&self.incident, a, self.incident_dir, &self.left, x, t)
                    + wave_state(
                        &self.incident,
                        a * self.reflection,
                        self.reflected_direction(),
                        &self.left,
                        x,
                        t,
                    )
            }
            Side::Right => wave_state(
                &self.incident,
                a * self.transmission,
                self.transmitted_dir,
                &self.right,
                x,
                t,
            ),
        }
    }

    /// Exact state with the side chosen from the sign of `x`.
    pub fn state_at(&self, x: [f64; 2], t: f64) -> State {
        let side = if x[0] < 0.0 { Side::Left } else { Side::Right };
        self.state(side, x, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn packet() -> WaveSpec {
        WaveSpec {
            amplitude: 1.0,
            direction: [3f64.sqrt() / 2.0, 0.5],
            omega: 2.5 * PI,
            t0: 3.0,
            envelope: Envelope::Wavepacket { modes: 4.0 },
        }
    }

    fn table_scattering() -> ScatteringSpec {
        let incident = WaveSpec {
            direction: [0.5, 1.5f64.sqrt()],
            ..packet()
        };
        ScatteringSpec::new(
            Medium::new(1.0, 1.0).unwrap(),
            Medium::new(0.4, 0.7).unwrap(),
            incident,
        )
        .unwrap()
    }

    /// `u_t + A₁u_x + A₂u_y` by central differences.
    fn pde_residual(f: impl Fn([f64; 2], f64) -> State, m: &Medium, x: [f64; 2], t: f64) -> f64 {
        let h = 1e-5;
        let ut = (f(x, t + h) - f(x, t - h)) / (2.0 * h);
        let ux = (f([x[0] + h, x[1]], t) - f([x[0] - h, x[1]], t)) / (2.0 * h);
        let uy = (f([x[0], x[1] + h], t) - f([x[0], x[1] - h], t)) / (2.0 * h);
        (ut + m.a1() * ux + m.a2() * uy).amax()
    }

    #[test]
    fn zero_amplitude_gives_zero_state() {
        let spec = WaveSpec {
            amplitude: 0.0,
            ..packet()
        };
        let u = plane_wave_state(&spec, &Medium::unit(), [0.3, -1.0], 2.0);
        assert_eq!(u, State::zeros());
    }

    #[test]
    fn sine_wave_on_axis() {
        let spec = WaveSpec {
            amplitude: 2.0,
            direction: [1.0, 0.0],
            omega: 3.0,
            t0: 0.5,
            envelope: Envelope::Sine,
        };
        let m = Medium::unit();
        assert!(plane_wave_state(&spec, &m, [0.0, 0.0], 0.5).amax() < 1e-15);
        // ωs = π/2 at x = π/(2ω).
        let u = plane_wave_state(&spec, &m, [PI / 6.0, 0.0], 0.5);
        assert!((u - State::new(2.0, 2.0, 0.0)).amax() < 1e-14);
    }

    #[test]
    fn wavepacket_matches_independent_formula() {
        let spec = packet();
        // σ = MT / (2 √(ln 10⁴)) with T = 2π/ω = 0.8.
        let sigma = 4.0 * 0.8 / (2.0 * (4.0 * 10f64.ln()).sqrt());
        assert!((spec.sigma().unwrap() - sigma).abs() < 1e-15);
        let m = Medium::unit();
        for &(x, y, t) in &[(0.1, 0.2, 3.0), (-1.0, 2.0, 1.5), (2.0, -0.5, 4.2)] {
            let s = (3f64.sqrt() / 2.0) * x + 0.5 * y - (t - 3.0);
            let psi = (2.5 * PI * s).sin() * (-(s / sigma).powi(2)).exp();
            let expected = State::new(psi, psi * 3f64.sqrt() / 2.0, psi * 0.5);
            assert!((plane_wave_state(&spec, &m, [x, y], t) - expected).amax() < 1e-14);
        }
        // The envelope is at 10⁻⁴ half a packet away from the centre.
        let half = 2.0 * spec.period();
        assert!(((-(half / sigma).powi(2)).exp() - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn plane_wave_satisfies_the_pde() {
        let m = Medium::new(1.7, 0.6).unwrap();
        let spec = packet();
        let f = |x: [f64; 2], t: f64| plane_wave_state(&spec, &m, x, t);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let t = rng.gen_range(2.0..4.0);
            assert!(pde_residual(f, &m, x, t) < 1e-6);
        }
    }

    #[test]
    fn scattered_waves_satisfy_the_pde() {
        let s = table_scattering();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let y = rng.gen_range(-2.0..2.0);
            let t = rng.gen_range(2.0..5.0);
            let xl = [rng.gen_range(-2.0..-0.1), y];
            let xr = [rng.gen_range(0.1..2.0), y];
            let fl = |x: [f64; 2], t: f64| s.state(Side::Left, x, t);
            let fr = |x: [f64; 2], t: f64| s.state(Side::Right, x, t);
            assert!(pde_residual(fl, &s.left, xl, t) < 1e-6);
            assert!(pde_residual(fr, &s.right, xr, t) < 1e-6);
        }
    }

    #[test]
    fn normal_flux_is_continuous_at_the_interface() {
        let s = table_scattering();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let x = [0.0, rng.gen_range(-5.0..5.0)];
            let t = rng.gen_range(0.0..10.0);
            let fl = s.left.a1() * s.state(Side::Left, x, t);
            let fr = s.right.a1() * s.state(Side::Right, x, t);
            assert!((fl - fr).amax() < 1e-12);
        }
        assert!(s.reflection_ratio().abs() > 1e-3);
    }

    #[test]
    fn equal_media_do_not_scatter() {
        let m = Medium::new(1.3, 0.8).unwrap();
        let s = ScatteringSpec::new(m, m, packet()).unwrap();
        assert!(s.reflection_ratio().abs() < 1e-15);
        assert!((s.transmission_ratio() - 1.0).abs() < 1e-15);
        let x = [0.4, -0.2];
        let direct = plane_wave_state(&packet(), &m, x, 3.1);
        assert!((s.state(Side::Right, x, 3.1) - direct).amax() < 1e-15);
    }

    #[test]
    fn normal_incidence_ratios() {
        let (l, r) = (
            Medium::new(1.0, 1.0).unwrap(),
            Medium::new(0.4, 0.7).unwrap(),
        );
        let spec = WaveSpec {
            direction: [1.0, 0.0],
            ..packet()
        };
        let s = ScatteringSpec::new(l, r, spec).unwrap();
        let (zl, zr) = (l.impedance(), r.impedance());
        assert!((s.reflection_ratio() - (zl - zr) / (zl + zr)).abs() < 1e-15);
        // With p/ρ continuous the pressure ratio carries a density factor.
        let expected = 2.0 * r.rho * l.c / (zl + zr);
        assert!((s.transmission_ratio() - expected).abs() < 1e-15);
        assert!(
            (s.transmission_ratio() - r.rho / l.rho * (1.0 + s.reflection_ratio())).abs() < 1e-15
        );
    }

    #[test]
    fn total_internal_reflection_is_rejected() {
        let spec = WaveSpec {
            direction: [0.2, 1.0],
            ..packet()
        };
        let err = ScatteringSpec::new(Medium::unit(), Medium::new(1.0, 2.0).unwrap(), spec);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    #[test]
    fn constant_state_is_uniform() {
        let f = constant_state(State::new(1.0, 0.5, -0.25));
        assert_eq!(f([3.0, -2.0], 7.0), State::new(1.0, 0.5, -0.25));
        assert_eq!(
            constant_state(State::zeros())([0.0, 0.0], 0.0),
            State::zeros()
        );
    }

    proptest! {
        #[test]
        fn rankine_hugoniot_residual(
            p in -1.0f64..1.0, u in -1.0f64..1.0, v in -1.0f64..1.0,
            rl in 0.1f64..3.0, cl in 0.1f64..3.0, rr in 0.1f64..3.0, cr in 0.1f64..3.0,
            angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let (ml, mr) = (Medium::new(rl, cl).unwrap(), Medium::new(rr, cr).unwrap());
            let n = [angle.cos(), angle.sin()];
            let left = State::new(p, u, v);
            let right = rankine_hugoniot_state(&ml, &mr, &left, n).unwrap();
            let jump = ml.normal_matrix(n) * left - mr.normal_matrix(n) * right;
            let scale = ml.normal_matrix(n).amax().max(mr.normal_matrix(n).amax());
            prop_assert!(jump.amax() < 1e-13 * scale.max(1.0));
            let tangential = |s: &State| -n[1] * s[1] + n[0] * s[2];
            // Round-off scales with the operand sizes, not the result.
            prop_assert!((tangential(&left) - tangential(&right)).abs() < 1e-13 * right.amax().max(1.0));
        }
    }
}
