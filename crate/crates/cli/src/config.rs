//! TOML run configuration. The schema is documented in `docs/config.md`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hamclosure::sim::{
    Derivative, Field, FieldState, Grid, Operators, Perturbation, RunOptions, Scheme, StreamState, BREAKING_SLOPE,
};
use hamclosure::Execution;
use serde::{Deserialize, Serialize};

use crate::family::ClosureSpec;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub streams: Option<StreamsSpec>,
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub checks: ChecksSpec,
}

/// A length given as a number or as a multiple of pi (`"2pi"`, `"4*pi"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Number(f64),
    Text(String),
}

impl Length {
    pub fn value(&self) -> Result<f64> {
        match self {
            Length::Number(x) => Ok(*x),
            Length::Text(s) => {
                let t = s.trim();
                let factor = t
                    .strip_suffix("pi")
                    .map(|f| f.trim().trim_end_matches('*').trim())
                    .ok_or_else(|| anyhow!("length `{s}`: expected a number or a multiple of pi"))?;
                let f: f64 = if factor.is_empty() {
                    1.0
                } else {
                    factor.parse().map_err(|_| anyhow!("length `{s}`: bad factor `{factor}`"))?
                };
                Ok(f * PI)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub length: Length,
    pub nx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    /// `density`, `velocity` or `nu<k>` (1-based).
    pub field: String,
    pub amplitude: f64,
    #[serde(default = "one")]
    pub mode: usize,
    #[serde(default)]
    pub phase: f64,
    /// 1-based stream index, stream configs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<usize>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub n0: f64,
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub nu: Vec<f64>,
    #[serde(default)]
    pub perturbation: Vec<PerturbationSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamsSpec {
    pub n0: f64,
    pub fractions: Vec<f64>,
    pub velocities: Vec<f64>,
    #[serde(default)]
    pub perturbation: Vec<PerturbationSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    /// Omitted: the CFL estimate of the initial state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    /// `parallel` (default) or `sequential`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breaking_slope: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    /// Steps between snapshots; 0 writes only the first and last state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_tolerance: Option<f64>,
}

pub const DEFAULT_MAX_DRIFT: f64 = 1e-6;
pub const DEFAULT_FREQUENCY_TOLERANCE: f64 = 0.01;
pub const DEFAULT_COMPARE_TOLERANCE: f64 = 1e-6;

/// Raw bytes and parsed form of a config file.
pub struct Loaded {
    pub bytes: Vec<u8>,
    pub config: RunConfig,
}

pub fn load(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let config: RunConfig = toml::from_str(text).with_context(|| format!("invalid config {}", path.display()))?;
    config.validate().with_context(|| format!("invalid config {}", path.display()))?;
    Ok(Loaded { bytes, config })
}

fn field(name: &str, nvars: Option<usize>) -> Result<Field> {
    match name {
        "density" => Ok(Field::Density),
        "velocity" => Ok(Field::Velocity),
        _ => {
            let k: usize = name
                .strip_prefix("nu")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k >= 1)
                .ok_or_else(|| anyhow!("unknown field `{name}` (density|velocity|nu<k>)"))?;
            match nvars {
                Some(n) if k <= n => Ok(Field::Normal(k - 1)),
                Some(n) => bail!("field `{name}` but the closure has {n} normal variables"),
                None => bail!("stream perturbations act on density or velocity, not `{name}`"),
            }
        }
    }
}

fn perturbation(p: &PerturbationSpec, nvars: Option<usize>) -> Result<Perturbation> {
    Ok(Perturbation {
        field: field(&p.field, nvars)?,
        amplitude: p.amplitude,
        mode: p.mode,
        phase: p.phase,
    })
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.streams.is_some() && (self.closure.is_some() || self.initial.is_some()) {
            bail!("a config describes either a fluid run ([closure], [initial]) or a stream run ([streams])");
        }
        if self.initial.is_some() && self.closure.is_none() {
            bail!("[initial] needs a [closure]");
        }
        if self.closure.is_none() && self.streams.is_none() {
            bail!("need either [closure] + [initial] (fluid run) or [streams] (kinetic run)");
        }
        self.grid()?;
        self.run_options()?;
        self.execution()?;
        if let Some(s) = &self.streams {
            if s.fractions.len() != s.velocities.len() || s.fractions.is_empty() {
                bail!("[streams] needs one velocity per fraction");
            }
            for p in &s.perturbation {
                let k = p.stream.context("stream perturbations need `stream`")?;
                if k == 0 || k > s.fractions.len() {
                    bail!("stream {k} out of range 1..{}", s.fractions.len());
                }
                field(&p.field, None)?;
            }
        }
        if let Some(i) = &self.initial {
            if i.perturbation.iter().any(|p| p.stream.is_some()) {
                bail!("`stream` only applies to [[streams.perturbation]]");
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.grid.length.value()?, self.grid.nx)?)
    }

    pub fn operators(&self) -> Result<Operators> {
        let kind = match &self.grid.derivative {
            None => Derivative::Spectral,
            Some(d) => Derivative::parse(d).ok_or_else(|| anyhow!("unknown derivative `{d}` (spectral|central)"))?,
        };
        Ok(Operators::new(self.grid()?, kind))
    }

    pub fn execution(&self) -> Result<Execution> {
        match self.integrator.execution.as_deref() {
            None | Some("parallel") => Ok(Execution::Parallel),
            Some("sequential") => Ok(Execution::Sequential),
            Some(e) => bail!("unknown execution `{e}` (parallel|sequential)"),
        }
    }

    pub fn run_options(&self) -> Result<RunOptions> {
        let scheme = match &self.integrator.scheme {
            None => Scheme::Rk4,
            Some(s) => Scheme::parse(s).ok_or_else(|| anyhow!("unknown scheme `{s}` (rk4|split)"))?,
        };
        Ok(RunOptions {
            scheme,
            dt: self.integrator.dt,
            t_end: self.integrator.t_end,
            stride: self.output.stride.unwrap_or(1).max(1),
            breaking_slope: Some(self.integrator.breaking_slope.unwrap_or(BREAKING_SLOPE)),
        })
    }

    /// Initial fluid state for a closure with `nvars` normal variables.
    pub fn fluid_state(&self, grid: &Grid, nvars: usize) -> Result<FieldState> {
        let i = self.initial.as_ref().context("missing [initial]")?;
        let nu = if i.nu.is_empty() && nvars == 0 { vec![] } else { i.nu.clone() };
        if nu.len() != nvars {
            bail!("[initial] nu has {} entries but the closure has {nvars} normal variables", nu.len());
        }
        let mut s = FieldState::homogeneous(grid, i.n0, i.u, &nu);
        for p in &i.perturbation {
            s.perturb(grid, &perturbation(p, Some(nvars))?)?;
        }
        Ok(s)
    }

    pub fn stream_state(&self, grid: &Grid) -> Result<StreamState> {
        let spec = self.streams.as_ref().context("missing [streams]")?;
        let mut s = StreamState::homogeneous(grid, spec.n0, &spec.fractions, &spec.velocities)?;
        for p in &spec.perturbation {
            let k = p.stream.context("stream perturbations need `stream`")?;
            s.perturb(grid, k - 1, &perturbation(p, None)?)?;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LANGMUIR: &str = r#"
[grid]
length = "2pi"
nx = 32

[closure]
family = "cold"

[initial]
n0 = 1.0
[[initial.perturbation]]
field = "density"
amplitude = 0.01

[integrator]
dt = 0.01
t_end = 1.0
"#;

    #[test]
    fn parses_fluid_config() {
        let c: RunConfig = toml::from_str(LANGMUIR).unwrap();
        c.validate().unwrap();
        assert!((c.grid().unwrap().length - 2.0 * PI).abs() < 1e-15);
        let s = c.fluid_state(&c.grid().unwrap(), 0).unwrap();
        assert!((s.rho[0] - 1.01).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = LANGMUIR.replace("nx = 32", "nx = 32\ncells = 4");
        let err = toml::from_str::<RunConfig>(&bad).unwrap_err().to_string();
        assert!(err.contains("cells"), "{err}");
    }

    #[test]
    fn lengths() {
        assert_eq!(Length::Text("pi".into()).value().unwrap(), PI);
        assert_eq!(Length::Text("4*pi".into()).value().unwrap(), 4.0 * PI);
        assert_eq!(Length::Number(3.0).value().unwrap(), 3.0);
        assert!(Length::Text("3".into()).value().is_err());
    }

    #[test]
    fn fields() {
        assert_eq!(field("nu2", Some(2)).unwrap(), Field::Normal(1));
        assert!(field("nu3", Some(2)).is_err());
        assert!(field("nu1", None).is_err());
        assert!(field("pressure", Some(2)).is_err());
    }
}
