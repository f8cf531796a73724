//! Problem setup and execution for the packaged experiments.
//!
//! Runs are deterministic for a given configuration: element residuals are
//! gathered in a fixed order whether or not they are computed in parallel.

use std::f64::consts::PI;
use std::time::Instant;

use log::info;

use crate::acoustics::{Medium, State};
use crate::config::{Experiment, Mode, RunConfig};
use crate::diagnostics::{error_norms, ConservationLedger, ExactSolution, RunReport};
use crate::error::{Error, Result};
use crate::exact::{plane_wave_state, Envelope, ScatteringSpec, Side, WaveSpec};
use crate::mesh::{cartesian_mesh, curved_mesh_example, read_mesh, CartesianOptions, HybridMesh};
use crate::operator::{BoundaryProvider, Discretization, GlobalField};
use crate::time::{stable_timestep, AcousticSystem, Integrator, Scheme};

/// Default Courant number.
pub const DEFAULT_CFL: f64 = 0.4;

/// Wavepacket of the Cartesian experiment.
pub fn cartesian_wave() -> WaveSpec {
    WaveSpec {
        amplitude: 1.0,
        direction: [3f64.sqrt() / 2.0, 0.5],
        omega: 2.5 * PI,
        t0: 3.0,
        envelope: Envelope::Wavepacket { modes: 4.0 },
    }
}

/// Incident wavepacket of the scattering experiment.
pub fn scattering_wave() -> WaveSpec {
    WaveSpec {
        direction: [0.5, 3f64.sqrt() / 2.0],
        ..cartesian_wave()
    }
}

/// Media `(left, right)` of the scattering experiment.
pub fn scattering_media() -> (Medium, Medium) {
    (Medium { rho: 1.0, c: 1.0 }, Medium { rho: 0.4, c: 0.7 })
}

/// Sine wave of the curved-mesh experiment.
pub fn curved_wave() -> WaveSpec {
    WaveSpec {
        amplitude: 1.0,
        direction: [3f64.sqrt() / 2.0, 0.5],
        omega: 0.75,
        t0: 0.0,
        envelope: Envelope::Sine,
    }
}

/// Constant state of the free-stream experiment.
pub const FREE_STREAM_STATE: [f64; 3] = [1.0, 0.5, -0.25];

/// Exact solution, also used as exterior boundary data.
#[derive(Debug, Clone, Copy)]
pub enum Solution {
    /// Plane wave in one medium.
    PlaneWave {
        /// Wave parameters.
        wave: WaveSpec,
        /// Medium the wave travels in.
        medium: Medium,
    },
    /// Incident, reflected and transmitted waves; subdomain 0 is `x < 0`.
    Scattering(ScatteringSpec),
    /// Uniform state.
    Constant(State),
}

impl Solution {
    /// Exact state at `x`, `t` in subdomain `subdomain`.
    pub fn evaluate(&self, x: [f64; 2], t: f64, subdomain: usize) -> State {
        match self {
            Solution::PlaneWave { wave, medium } => plane_wave_state(wave, medium, x, t),
            Solution::Scattering(s) => {
                let side = if subdomain == 0 {
                    Side::Left
                } else {
                    Side::Right
                };
                s.state(side, x, t)
            }
            Solution::Constant(c) => *c,
        }
    }
}

impl BoundaryProvider for Solution {
    fn exterior(&self, x: [f64; 2], t: f64, subdomain: usize) -> State {
        self.evaluate(x, t, subdomain)
    }
}

impl ExactSolution for Solution {
    fn state(&self, x: [f64; 2], t: f64, subdomain: usize) -> State {
        self.evaluate(x, t, subdomain)
    }
}

/// A fully assembled problem ready to integrate.
pub struct Problem {
    /// Spatial discretization.
    pub disc: Discretization,
    /// Exact solution and boundary data.
    pub solution: Solution,
    /// Whether `solution` is an exact solution worth measuring errors against.
    pub has_exact: bool,
    /// Start time.
    pub t_start: f64,
    /// End time.
    pub t_final: f64,
}

impl Problem {
    /// Initial field, the exact solution at `t_start`.
    pub fn initial_field(&self) -> GlobalField {
        let sol = self.solution;
        let t = self.t_start;
        self.disc.project(move |x, s| sol.evaluate(x, t, s))
    }
}

fn apply_mode(mesh: HybridMesh, mode: Mode) -> Result<HybridMesh> {
    match mode {
        Mode::Dg => Ok(mesh.with_all_dg()),
        Mode::Cg => Ok(mesh),
        Mode::Hybrid => {
            use crate::mesh::FaceKind;
            if mesh.count(FaceKind::Dg) == 0 {
                return Err(Error::Config(
                    "hybrid mode needs DG lines, DG edges or a material interface".into(),
                ));
            }
            Ok(mesh)
        }
    }
}

fn cartesian_from(config: &RunConfig, mut opts: CartesianOptions) -> Result<HybridMesh> {
    let nx = config.mesh.nx.unwrap_or(20);
    let ny = config.mesh.ny.unwrap_or(nx);
    let bounds = config.mesh.bounds.unwrap_or([-5.0, 5.0, -5.0, 5.0]);
    if let Some(lines) = &config.mesh.dg_lines {
        if config.mode == Mode::Hybrid {
            opts.dg_lines = lines.clone();
        }
    }
    if config.mode != Mode::Hybrid {
        opts.dg_lines.clear();
    }
    if let Some(ms) = &config.materials {
        opts.materials = ms.clone();
    }
    cartesian_mesh(nx, ny, bounds, &opts)
}

fn with_dg_edges(mesh: HybridMesh, config: &RunConfig) -> Result<HybridMesh> {
    match (&config.mesh.dg_edges, config.mode) {
        (Some(edges), Mode::Hybrid) if !edges.is_empty() => {
            let mut dg: Vec<(usize, usize)> = mesh.dg_edges().copied().collect();
            dg.extend(edges.iter().map(|e| (e[0].min(e[1]), e[0].max(e[1]))));
            HybridMesh::new(
                mesh.vertices().to_vec(),
                mesh.elements().to_vec(),
                mesh.materials().to_vec(),
                dg,
            )
        }
        _ => Ok(mesh),
    }
}

fn load_or(config: &RunConfig, default: impl FnOnce() -> Result<HybridMesh>) -> Result<HybridMesh> {
    let mut mesh = match &config.mesh.file {
        Some(path) => read_mesh(path)?,
        None => default()?,
    };
    if config.mesh.file.is_some() {
        if let Some(ms) = &config.materials {
            mesh.set_materials(ms.clone())?;
        }
    }
    Ok(mesh)
}

/// Builds the mesh, discretization and exact solution for `config`.
pub fn build_problem(config: &RunConfig) -> Result<Problem> {
    config.validate()?;
    let (mesh, solution, t_final) = match config.experiment {
        Experiment::CartesianWavepacket => {
            let mesh = load_or(config, || {
                let opts = CartesianOptions {
                    dg_lines: vec![0.0],
                    ..Default::default()
                };
                cartesian_from(config, opts)
            })?;
            let medium = *mesh.medium(0);
            let wave = config.wave.unwrap_or_else(cartesian_wave);
            (mesh, Solution::PlaneWave { wave, medium }, 5.0)
        }
        Experiment::Scattering => {
            let (l, r) = scattering_media();
            let mesh = load_or(config, || {
                let opts = CartesianOptions {
                    material_split: Some(0.0),
                    materials: vec![l, r],
                    ..Default::default()
                };
                cartesian_from(config, opts)
            })?;
            if mesh.materials().len() != 2 {
                return Err(Error::Config(
                    "scattering needs exactly two materials".into(),
                ));
            }
            let wave = config.wave.unwrap_or_else(scattering_wave);
            let spec = ScatteringSpec::new(mesh.materials()[0], mesh.materials()[1], wave)?;
            (mesh, Solution::Scattering(spec), 5.0)
        }
        Experiment::CurvedSine => {
            let mut mesh = load_or(config, curved_mesh_example)?;
            if let (Some(ms), None) = (&config.materials, &config.mesh.file) {
                mesh.set_materials(ms.clone())?;
            }
            let medium = *mesh.medium(0);
            let wave = config.wave.unwrap_or_else(curved_wave);
            (mesh, Solution::PlaneWave { wave, medium }, 4.0)
        }
        Experiment::FreeStream => {
            let mut mesh = load_or(config, curved_mesh_example)?;
            if let (Some(ms), None) = (&config.materials, &config.mesh.file) {
                mesh.set_materials(ms.clone())?;
            }
            if mesh.materials().len() != 1 {
                return Err(Error::Config("free-stream needs a single material".into()));
            }
            let c = config.constant.unwrap_or(FREE_STREAM_STATE);
            (mesh, Solution::Constant(State::new(c[0], c[1], c[2])), 1.0)
        }
        Experiment::Custom => {
            let mesh = load_or(config, || {
                cartesian_from(config, CartesianOptions::default())
            })?;
            if mesh.materials().len() != 1 {
                return Err(Error::Config(
                    "custom runs support a single material".into(),
                ));
            }
            let medium = *mesh.medium(0);
            let wave = config
                .wave
                .ok_or_else(|| Error::Config("custom runs need a [wave] section".into()))?;
            (mesh, Solution::PlaneWave { wave, medium }, 1.0)
        }
    };
    let mesh = with_dg_edges(mesh, config)?;
    let mesh = apply_mode(mesh, config.mode)?;
    let mut disc = Discretization::new(mesh, config.degree)?;
    disc.set_parallel(config.parallel);
    Ok(Problem {
        disc,
        solution,
        has_exact: true,
        t_start: 0.0,
        t_final: config.time.t_final.unwrap_or(t_final),
    })
}

/// Sample times `0, Δ, 2Δ, …` up to and including `t_final`.
fn sample_times(t_final: f64, interval: f64) -> Vec<f64> {
    let mut times = vec![0.0];
    if interval > 0.0 {
        let mut k = 1;
        while (k as f64) * interval < t_final - 1e-12 {
            times.push(k as f64 * interval);
            k += 1;
        }
    }
    if t_final > 0.0 {
        times.push(t_final);
    }
    times
}

/// Integrates `problem` to its final time and reports errors and energy.
pub fn run_problem(problem: &Problem, config: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let disc = &problem.disc;
    let scheme = config.time.scheme.unwrap_or(Scheme::Lsrk45);
    let dt_max = config
        .time
        .dt
        .unwrap_or_else(|| stable_timestep(disc, config.time.cfl.unwrap_or(DEFAULT_CFL)));
    let mut u = problem.initial_field();
    let mut ledger = ConservationLedger::new(disc, &u);
    let system = AcousticSystem {
        disc,
        boundary: &problem.solution,
    };
    let mut integrator = Integrator::new(scheme, disc.ndof());
    let interval = config.output.energy_interval.unwrap_or(0.5);
    let times: Vec<f64> = sample_times(problem.t_final - problem.t_start, interval)
        .into_iter()
        .map(|t| t + problem.t_start)
        .collect();
    let mut energy = vec![(times[0], disc.energy(&u))];
    let mut steps = 0;
    let mut dt_used: f64 = 0.0;
    for w in times.windows(2) {
        let stats = integrator.advance(&system, &mut u, w[0], w[1], dt_max)?;
        steps += stats.steps;
        dt_used = dt_used.max(stats.dt);
        ledger.record(stats.boundary_integral);
        energy.push((w[1], disc.energy(&u)));
    }
    let mut dudt = GlobalField::zeros(disc.ndof());
    disc.rhs(&u, problem.t_final, &problem.solution, &mut dudt)?;
    let errors = problem
        .has_exact
        .then(|| error_norms(disc, &u, &problem.solution, problem.t_final));
    let report = RunReport {
        experiment: config.experiment.name().to_string(),
        mode: config.mode.name().to_string(),
        degree: disc.degree(),
        elements: disc.mesh().elements().len(),
        dofs: disc.ndof(),
        scheme: match scheme {
            Scheme::Rk4 => "rk4".into(),
            Scheme::Lsrk45 => "lsrk45".into(),
        },
        dt: dt_used,
        steps,
        t_final: problem.t_final,
        errors,
        max_time_derivative: dudt.max_abs(),
        energy,
        conservation_drift: ledger.drift(disc, &u),
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    info!(
        "{} {} N={} steps={} log10(max error)={:.4} ({:.1} s)",
        report.experiment,
        report.mode,
        report.degree,
        report.steps,
        report.log10_error(),
        report.runtime_seconds
    );
    Ok(report)
}

/// Builds and runs `config`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let problem = build_problem(config)?;
    run_problem(&problem, config)
}

/// Runs `config` once per degree in `degrees`.
pub fn sweep(
    config: &RunConfig,
    degrees: impl IntoIterator<Item = usize>,
) -> Result<Vec<RunReport>> {
    degrees
        .into_iter()
        .map(|n| {
            let mut c = config.clone();
            c.degree = n;
            run(&c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(experiment: Experiment, mode: Mode, degree: usize) -> RunConfig {
        let mut c = RunConfig::preset(experiment, mode, degree);
        c.mesh.nx = Some(4);
        c.time.t_final = Some(0.2);
        c
    }

    #[test]
    fn sample_times_cover_interval() {
        assert_eq!(sample_times(1.0, 0.5), vec![0.0, 0.5, 1.0]);
        assert_eq!(sample_times(1.2, 0.5), vec![0.0, 0.5, 1.0, 1.2]);
        assert_eq!(sample_times(0.3, 0.0), vec![0.0, 0.3]);
        assert_eq!(sample_times(0.0, 0.5), vec![0.0]);
    }

    #[test]
    fn free_stream_preset_preserves_constant() {
        let mut c = RunConfig::preset(Experiment::FreeStream, Mode::Cg, 5);
        c.time.t_final = Some(0.1);
        let r = run(&c).unwrap();
        assert!(r.errors.unwrap().max < 1e-11);
        assert!(r.max_time_derivative < 1e-10);
    }

    #[test]
    fn hybrid_requires_dg_faces() {
        let mut c = small(Experiment::CartesianWavepacket, Mode::Hybrid, 3);
        c.mesh.dg_lines = Some(vec![]);
        assert!(matches!(build_problem(&c), Err(Error::Config(_))));
        c.mesh.dg_lines = None;
        let p = build_problem(&c).unwrap();
        assert_eq!(p.disc.mesh().count(crate::mesh::FaceKind::Dg), 4);
    }

    #[test]
    fn modes_select_face_kinds() {
        use crate::mesh::FaceKind;
        let cg = build_problem(&small(Experiment::CartesianWavepacket, Mode::Cg, 3)).unwrap();
        assert_eq!(cg.disc.mesh().count(FaceKind::Dg), 0);
        let dg = build_problem(&small(Experiment::CartesianWavepacket, Mode::Dg, 3)).unwrap();
        assert_eq!(dg.disc.mesh().count(FaceKind::Cg), 0);
        let sc = build_problem(&small(Experiment::Scattering, Mode::Cg, 3)).unwrap();
        assert_eq!(sc.disc.mesh().count(FaceKind::Dg), 4);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut c = small(Experiment::Scattering, Mode::Hybrid, 4);
        c.parallel = false;
        let a = run(&c).unwrap();
        c.parallel = true;
        let b = run(&c).unwrap();
        assert_eq!(a.energy, b.energy);
        assert_eq!(a.errors, b.errors);
    }

    #[test]
    fn energy_series_is_sampled() {
        let mut c = small(Experiment::CartesianWavepacket, Mode::Dg, 3);
        c.output.energy_interval = Some(0.05);
        let r = run(&c).unwrap();
        let times: Vec<f64> = r.energy.iter().map(|e| e.0).collect();
        assert_eq!(times.len(), 5);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert!(r.energy.iter().all(|e| e.1 >= 0.0));
    }

    #[test]
    fn empty_sweep_is_empty() {
        let c = small(Experiment::CartesianWavepacket, Mode::Cg, 3);
        assert!(sweep(&c, std::iter::empty()).unwrap().is_empty());
    }

    #[test]
    fn custom_run_from_mesh_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mesh");
        let mesh = cartesian_mesh(2, 2, [0.0, 1.0, 0.0, 1.0], &Default::default()).unwrap();
        crate::mesh::write_mesh(&mesh, &path).unwrap();
        let mut c = RunConfig::preset(Experiment::Custom, Mode::Cg, 6);
        c.mesh.file = Some(path);
        c.wave = Some(WaveSpec {
            amplitude: 1.0,
            direction: [1.0, 0.0],
            omega: PI,
            t0: 0.0,
            envelope: Envelope::Sine,
        });
        c.time.t_final = Some(0.1);
        let r = run(&c).unwrap();
        assert!(r.errors.unwrap().max < 1e-4);
    }
}
