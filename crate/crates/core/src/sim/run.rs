//! Run drivers and post-processing of diagnostic series.

use super::solver::{DiagnosticRecord, FluidSolver, Scheme, StreamRecord, StreamSolver};
use super::state::{FieldState, StreamState};
use super::SimError;

/// Default threshold on `min dv/dx` that marks wave breaking.
pub const BREAKING_SLOPE: f64 = -1e3;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub scheme: Scheme,
    /// `None` picks the CFL estimate of the initial state.
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Record diagnostics every `stride` steps (and always at the end).
    pub stride: usize,
    /// Stream runs stop when `min dv_k/dx` drops below this.
    pub breaking_slope: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            scheme: Scheme::Rk4,
            dt: None,
            t_end: 1.0,
            stride: 1,
            breaking_slope: Some(BREAKING_SLOPE),
        }
    }
}

/// Outcome of a run. An abort keeps everything recorded up to the last
/// good state.
#[derive(Clone, Debug)]
pub struct RunOutput<S, R> {
    pub records: Vec<R>,
    pub state: S,
    pub steps: usize,
    pub dt: f64,
    pub warnings: Vec<String>,
    pub abort: Option<SimError>,
}

impl<S, R> RunOutput<S, R> {
    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }
}

/// Step count and step size hitting `t_end` exactly with steps `<= dt`.
fn schedule(t_end: f64, dt: f64) -> Result<(usize, f64), SimError> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(SimError::Config(format!("t_end = {t_end} must be positive")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::TimeStep(dt));
    }
    let n = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((n, t_end / n as f64))
}

fn cfl_warning(dt: f64, bound: f64) -> Option<String> {
    (dt > bound).then(|| format!("dt = {dt:.3e} exceeds the CFL estimate {bound:.3e}"))
}

/// Integrates a fluid state to `t_end`, calling `observe` after every step.
pub fn run_fluid(
    solver: &FluidSolver,
    initial: FieldState,
    opts: &RunOptions,
    mut observe: impl FnMut(&FieldState),
) -> Result<RunOutput<FieldState, DiagnosticRecord>, SimError> {
    let bound = solver.cfl_dt(&initial);
    let (steps, dt) = schedule(opts.t_end - initial.t, opts.dt.unwrap_or(bound))?;
    let mut warnings: Vec<String> = cfl_warning(dt, bound).into_iter().collect();
    let mut records = vec![solver.diagnostics(&initial)?];
    observe(&initial);
    let stride = opts.stride.max(1);
    let t0 = initial.t;
    let mut state = initial;
    let mut abort = None;
    let mut done = 0;
    for i in 1..=steps {
        match solver.step(&state, dt, opts.scheme) {
            Ok(mut next) => {
                next.t = t0 + i as f64 * dt;
                state = next;
                done = i;
            }
            Err(e) => {
                abort = Some(e);
                break;
            }
        }
        observe(&state);
        if i % stride == 0 || i == steps {
            records.push(solver.diagnostics(&state)?);
            if warnings.is_empty() {
                warnings.extend(cfl_warning(dt, solver.cfl_dt(&state)));
            }
        }
    }
    if abort.is_some() && records.last().map(|r| r.t) != Some(state.t) {
        records.push(solver.diagnostics(&state)?);
    }
    Ok(RunOutput {
        records,
        state,
        steps: done,
        dt,
        warnings,
        abort,
    })
}

/// Integrates a stream state with RK4, stopping at wave breaking.
pub fn run_streams(
    solver: &StreamSolver,
    initial: StreamState,
    opts: &RunOptions,
    mut observe: impl FnMut(&StreamState),
) -> Result<RunOutput<StreamState, StreamRecord>, SimError> {
    let bound = solver.cfl_dt(&initial);
    let (steps, dt) = schedule(opts.t_end - initial.t, opts.dt.unwrap_or(bound))?;
    let warnings: Vec<String> = cfl_warning(dt, bound).into_iter().collect();
    let mut records = vec![solver.diagnostics(&initial)?];
    observe(&initial);
    let stride = opts.stride.max(1);
    let t0 = initial.t;
    let mut state = initial;
    let mut abort = None;
    let mut done = 0;
    for i in 1..=steps {
        match solver.step(&state, dt) {
            Ok(mut next) => {
                next.t = t0 + i as f64 * dt;
                state = next;
                done = i;
            }
            Err(e) => {
                abort = Some(e);
                break;
            }
        }
        observe(&state);
        if i % stride == 0 || i == steps {
            records.push(solver.diagnostics(&state)?);
        }
        if let Some(th) = opts.breaking_slope {
            let (stream, slope) = solver.steepest_gradient(&state);
            if slope < th {
                abort = Some(SimError::WaveBreaking {
                    t: state.t,
                    stream,
                    slope,
                });
                break;
            }
        }
    }
    if abort.is_some() && records.last().map(|r| r.t) != Some(state.t) {
        records.push(solver.diagnostics(&state)?);
    }
    Ok(RunOutput {
        records,
        state,
        steps: done,
        dt,
        warnings,
        abort,
    })
}

/// `max_t |x(t) - x(0)| / max(|x(0)|, floor)`.
pub fn relative_drift(series: &[f64], floor: f64) -> f64 {
    let Some(&x0) = series.first() else {
        return 0.0;
    };
    let dev = series.iter().map(|x| (x - x0).abs()).fold(0.0, f64::max);
    let scale = x0.abs().max(floor);
    if scale > 0.0 {
        dev / scale
    } else {
        dev
    }
}

/// Relative drifts of every conserved quantity of a fluid run.
///
/// `H` and `C_mass` are normalized by their initial values. Momentum,
/// `C_psi` and `C_k` may start at zero, so their scale is floored at the
/// initial mass (unit velocity and unit normal variable).
#[derive(Clone, Debug, PartialEq)]
pub struct Drifts {
    pub h: f64,
    pub c_mass: f64,
    pub c_psi: f64,
    pub c_nu: Vec<f64>,
    pub momentum: f64,
}

impl Drifts {
    pub fn of(records: &[DiagnosticRecord]) -> Self {
        let col = |f: &dyn Fn(&DiagnosticRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
        let mass = records.first().map_or(0.0, |r| r.c_mass.abs());
        let nv = records.first().map_or(0, |r| r.c_nu.len());
        Drifts {
            h: relative_drift(&col(&|r| r.h), 0.0),
            c_mass: relative_drift(&col(&|r| r.c_mass), 0.0),
            c_psi: relative_drift(&col(&|r| r.c_psi), mass),
            c_nu: (0..nv)
                .map(|k| relative_drift(&col(&|r| r.c_nu[k]), mass))
                .collect(),
            momentum: relative_drift(&col(&|r| r.momentum), mass),
        }
    }

    /// Largest of all drifts.
    pub fn max(&self) -> f64 {
        self.c_nu
            .iter()
            .copied()
            .chain([self.h, self.c_mass, self.c_psi, self.momentum])
            .fold(0.0, f64::max)
    }
}

/// Angular frequency from the zero crossings of a sampled signal, using
/// linear interpolation between samples. Needs at least three crossings.
pub fn oscillation_frequency(t: &[f64], signal: &[f64]) -> Option<f64> {
    let crossings: Vec<f64> = t
        .windows(2)
        .zip(signal.windows(2))
        .filter(|(_, s)| s[0] != s[1] && (s[0] <= 0.0) != (s[1] <= 0.0))
        .map(|(t, s)| t[0] + (t[1] - t[0]) * s[0] / (s[0] - s[1]))
        .collect();
    if crossings.len() < 3 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some(std::f64::consts::PI * (crossings.len() - 1) as f64 / span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_lands_on_t_end() {
        let (n, dt) = schedule(1.0, 0.3).unwrap();
        assert_eq!(n, 4);
        assert!((dt * n as f64 - 1.0).abs() < 1e-15);
        let (n, dt) = schedule(10.0, 0.01).unwrap();
        assert_eq!((n, dt), (1000, 0.01));
        assert!(schedule(-1.0, 0.1).is_err());
    }

    #[test]
    fn frequency_of_sampled_cosine() {
        let t: Vec<f64> = (0..2000).map(|i| i as f64 * 0.01).collect();
        let s: Vec<f64> = t.iter().map(|t| (1.3 * t).cos()).collect();
        let w = oscillation_frequency(&t, &s).unwrap();
        assert!((w - 1.3).abs() < 1e-5);
        assert!(oscillation_frequency(&t[..10], &s[..10]).is_none());
    }

    #[test]
    fn drift_uses_floor() {
        assert_eq!(relative_drift(&[2.0, 2.5, 1.0], 0.0), 0.5);
        assert_eq!(relative_drift(&[0.0, 1e-3], 10.0), 1e-4);
    }
}
