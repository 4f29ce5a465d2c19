//! Run configuration, read from TOML. See `configs/default.toml` for a
//! commented example with units.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::SourceSpec;
use crate::error::{Error, Result};
use crate::mms::Manufactured;
use crate::snapshot::read_snapshot;
use crate::spectral::{Grid3, PhysicalField3D};
use crate::state::{make_state, Params, State};
use crate::stepper::{Scheme, StepperConfig, TimeStep};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: 16,
            ny: 16,
            nz: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Everything zero.
    Zero,
    /// Pure conduction profile; zero in the shifted variables, hence stationary.
    Conduction,
    /// `v = (A sin 2 pi y, 0)`, `T = 0`.
    Shear,
    /// `v = 0`, `T = A sin(pi z / h)`.
    HeatMode,
    /// A few low modes with seeded random amplitudes, scaled by `A`.
    Smooth,
    /// Manufactured solution with its forcing.
    Manufactured,
    /// State read from a snapshot file.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub preset: Preset,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Shear,
            amplitude: 1.0,
            seed: 0,
            path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    pub scheme: Scheme,
    /// Fixed step, or the step cap when `adaptive` is set.
    pub dt: f64,
    #[serde(default)]
    pub adaptive: bool,
    #[serde(default = "half")]
    pub cfl_safety: f64,
    pub t_end: f64,
}

fn half() -> f64 {
    0.5
}

impl Default for StepperSection {
    fn default() -> Self {
        Self {
            scheme: Scheme::ImexRk2,
            dt: 1e-3,
            adaptive: false,
            cfl_safety: 0.5,
            t_end: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Sampling interval; samples are taken at integer multiples of it.
    pub every: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            every: 0.01,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-1, 1e-2, 1e-3, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependenceConfig {
    /// L2 norms of the initial perturbations.
    pub magnitudes: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Allowed multiple of the envelope.
    pub multiplier: f64,
}

impl Default for DependenceConfig {
    fn default() -> Self {
        Self {
            magnitudes: vec![1e-3, 1e-4],
            seed: 1,
            multiplier: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossValidateConfig {
    /// Cube sizes of the FD grids; each must divide `reference_n`.
    pub fd_sizes: Vec<usize>,
    pub reference_n: usize,
    pub fd_dt: f64,
}

impl Default for CrossValidateConfig {
    fn default() -> Self {
        Self {
            fd_sizes: vec![16, 32],
            reference_n: 32,
            fd_dt: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Cube sizes for the spatial study.
    pub sizes: Vec<usize>,
    /// Grid size for the time-step study.
    pub temporal_n: usize,
    /// Number of step halvings in the time-step study.
    pub halvings: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            sizes: vec![8, 16, 32],
            temporal_n: 16,
            halvings: 3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub stepper: StepperSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub dependence: DependenceConfig,
    #[serde(default)]
    pub cross_validate: CrossValidateConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<Grid3> {
        Grid3::new(self.grid.nx, self.grid.ny, self.grid.nz, self.params.h)
    }

    pub fn stepper_config(&self) -> StepperConfig {
        let s = &self.stepper;
        StepperConfig {
            scheme: s.scheme,
            dt: if s.adaptive {
                TimeStep::Adaptive { dt_max: s.dt }
            } else {
                TimeStep::Fixed(s.dt)
            },
            cfl_safety: s.cfl_safety,
            t_end: s.t_end,
            reproject: true,
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        self.grid().map_err(|e| Error::Config(e.to_string()))?;
        self.params
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.stepper_config().validate()?;
        if !(self.diagnostics.every > 0.0 && self.diagnostics.every.is_finite()) {
            return Err(Error::Config("diagnostics.every must be positive".into()));
        }
        if self.diagnostics.snapshot_times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Config("snapshot times must be nonnegative".into()));
        }
        if !self.initial.amplitude.is_finite() {
            return Err(Error::Config("initial.amplitude must be finite".into()));
        }
        if self.initial.preset == Preset::File && self.initial.path.is_none() {
            return Err(Error::Config("preset \"file\" needs initial.path".into()));
        }
        let eps = &self.sweep.epsilons;
        if eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(Error::Config(
                "sweep epsilons must be finite and nonnegative".into(),
            ));
        }
        if eps.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Config("sweep epsilons must be nonincreasing".into()));
        }
        let dep = &self.dependence;
        if dep.magnitudes.iter().any(|m| !(*m >= 0.0 && m.is_finite())) || !(dep.multiplier > 0.0) {
            return Err(Error::Config(
                "dependence magnitudes must be nonnegative and the multiplier positive".into(),
            ));
        }
        let cv = &self.cross_validate;
        if cv
            .fd_sizes
            .iter()
            .any(|n| *n < 4 || n % 2 != 0 || !cv.reference_n.is_multiple_of(*n))
        {
            return Err(Error::Config(
                "cross_validate.fd_sizes must be even, >= 4 and divide reference_n".into(),
            ));
        }
        if !(cv.fd_dt > 0.0) {
            return Err(Error::Config(
                "cross_validate.fd_dt must be positive".into(),
            ));
        }
        if self.convergence.sizes.iter().any(|n| *n < 4 || n % 2 != 0) {
            return Err(Error::Config(
                "convergence sizes must be even and >= 4".into(),
            ));
        }
        Ok(())
    }

    /// Forcing implied by the initial-condition preset.
    pub fn source(&self) -> Option<SourceSpec> {
        match self.initial.preset {
            Preset::Manufactured => Some(self.manufactured().sources()),
            _ => None,
        }
    }

    pub fn manufactured(&self) -> Manufactured {
        let mut m = Manufactured::new(self.params);
        m.amplitude_v *= self.initial.amplitude;
        m.amplitude_t *= self.initial.amplitude;
        m
    }

    /// Initial state on the configured grid.
    pub fn initial_state(&self) -> Result<State> {
        self.initial_state_on(self.grid()?)
    }

    /// Initial state for the preset sampled on `grid` (which must use the
    /// configured `h`).
    pub fn initial_state_on(&self, grid: Grid3) -> Result<State> {
        let p = self.params;
        let a = self.initial.amplitude;
        let h = p.h;
        let z = PhysicalField3D::zeros(grid);
        match self.initial.preset {
            Preset::Zero | Preset::Conduction => State::zeros(grid, p),
            Preset::Shear => {
                let v1 = PhysicalField3D::from_fn(grid, |_, y, _| a * (2.0 * PI * y).sin());
                make_state([&v1, &z], &z, p)
            }
            Preset::HeatMode => {
                let t = PhysicalField3D::from_fn(grid, |_, _, zz| a * (PI * zz / h).sin());
                make_state([&z, &z], &t, p)
            }
            Preset::Smooth => {
                let [v1, v2, t] = smooth_fields(grid, self.initial.seed, a);
                make_state([&v1, &v2], &t, p)
            }
            Preset::Manufactured => self.manufactured().state(grid, 0.0),
            Preset::File => {
                let path = self.initial.path.as_ref().expect("validated");
                let snap = read_snapshot(path)?;
                if snap.state.grid() != &grid {
                    return Err(Error::Config(format!(
                        "snapshot {} was written on a different grid",
                        path.display()
                    )));
                }
                Ok(snap.state)
            }
        }
    }
}

/// Sum of low modes `cos(2 pi (p x + q y) + phase) * profile(m pi z / h)` with
/// seeded amplitudes; `v` uses cosines in z (even), `T` sines (odd).
pub fn smooth_fields(grid: Grid3, seed: u64, amplitude: f64) -> [PhysicalField3D; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.h();
    let mut modes = |odd: bool| {
        let mut terms = Vec::new();
        for p in -1i32..=1 {
            for q in -1i32..=1 {
                for m in 0..=2 {
                    if odd && m == 0 {
                        continue;
                    }
                    let weight = 1.0 / (1.0 + (p * p + q * q + m * m) as f64);
                    let amp = weight * rng.gen_range(-1.0..1.0);
                    let phase = rng.gen_range(0.0..2.0 * PI);
                    terms.push((p as f64, q as f64, m as f64, amp, phase));
                }
            }
        }
        terms
    };
    let tv1 = modes(false);
    let tv2 = modes(false);
    let tt = modes(true);
    let eval = |terms: &[(f64, f64, f64, f64, f64)], odd: bool, x: f64, y: f64, z: f64| {
        terms
            .iter()
            .map(|(p, q, m, amp, phase)| {
                let zs = m * PI * z / h;
                let vertical = if odd { zs.sin() } else { zs.cos() };
                amp * (2.0 * PI * (p * x + q * y) + phase).cos() * vertical
            })
            .sum::<f64>()
            * amplitude
    };
    [
        PhysicalField3D::from_fn(grid, |x, y, z| eval(&tv1, false, x, y, z)),
        PhysicalField3D::from_fn(grid, |x, y, z| eval(&tv2, false, x, y, z)),
        PhysicalField3D::from_fn(grid, |x, y, z| eval(&tt, true, x, y, z)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn shipped_default_config_parses() {
        let text = include_str!("../../../configs/default.toml");
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.params.r1, 1.0);
        assert_eq!(cfg.params.epsilon, 0.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            "[grid]\nnx = 7\nny = 8\nnz = 8",
            "[stepper]\nscheme = \"imex_rk2\"\ndt = -1.0\nt_end = 1.0",
            "[stepper]\nscheme = \"imex_rk2\"\ndt = 0.1\ncfl_safety = 1.5\nt_end = 1.0",
            "[sweep]\nepsilons = [0.0, 0.1]",
            "[params]\nr1 = 0.0\nr2 = 1.0\nr3 = 1.0\nh = 1.0\nf0 = 1.0",
            "[initial]\npreset = \"file\"",
            "unknown_key = 3",
        ] {
            let err = RunConfig::from_toml_str(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
    }

    #[test]
    fn presets_build_admissible_states() {
        let mut cfg = RunConfig::default();
        cfg.grid = GridConfig {
            nx: 8,
            ny: 8,
            nz: 8,
        };
        for preset in [
            Preset::Zero,
            Preset::Conduction,
            Preset::Shear,
            Preset::HeatMode,
            Preset::Smooth,
            Preset::Manufactured,
        ] {
            cfg.initial.preset = preset;
            let s = cfg.initial_state().unwrap();
            assert!(s.barotropic_divergence() < 1e-12);
            let (pv, pt) = s.parity_residuals();
            assert!(pv < 1e-14 && pt < 1e-14);
        }
    }

    #[test]
    fn smooth_preset_is_seeded() {
        let g = Grid3::cube(8, 1.0).unwrap();
        let a = smooth_fields(g, 3, 1.0);
        let b = smooth_fields(g, 3, 1.0);
        let c = smooth_fields(g, 4, 1.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
