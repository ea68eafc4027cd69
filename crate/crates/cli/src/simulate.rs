//! `simulate`: one fluid or stream run from a config file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use hamclosure::sim::{
    oscillation_frequency, relative_drift, run_fluid, run_streams, DiagnosticRecord, Drifts, FieldState,
    FluidModel, FluidSolver, Grid, RunOutput, SimError, StreamRecord, StreamSolver, StreamState,
};

use crate::config::{self, RunConfig, DEFAULT_FREQUENCY_TOLERANCE, DEFAULT_MAX_DRIFT};
use crate::report::{fmt_f64, write_csv, Check, Report};
use crate::Output;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Run config (TOML)
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

pub const SNAPSHOT_FORMAT: u32 = 1;

/// Output directory: `--out`, else `[output] path` relative to the config.
pub fn out_dir(cli: Option<&Path>, cfg: &RunConfig, config_path: &Path) -> Result<PathBuf> {
    if let Some(p) = cli {
        return Ok(p.to_path_buf());
    }
    match &cfg.output.path {
        Some(p) if p.is_absolute() => Ok(p.clone()),
        Some(p) => Ok(config_path.parent().unwrap_or(Path::new(".")).join(p)),
        None => bail!("no output directory: pass --out or set [output] path"),
    }
}

/// Writes snapshot files as the run progresses.
struct Snapshots {
    dir: PathBuf,
    every: usize,
    nfields: usize,
    step: usize,
    last_written: Option<usize>,
    error: Option<anyhow::Error>,
}

impl Snapshots {
    fn new(out: &Path, every: usize, nfields: usize) -> Result<Self> {
        let dir = out.join("snapshots");
        if dir.exists() {
            // stale snapshots from an earlier run would mix with this one
            for e in fs::read_dir(&dir)? {
                let p = e?.path();
                if p.extension().is_some_and(|x| x == "txt") {
                    fs::remove_file(&p)?;
                }
            }
        }
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Snapshots {
            dir,
            every,
            nfields,
            step: 0,
            last_written: None,
            error: None,
        })
    }

    /// Called once per state, starting with the initial one.
    fn observe(&mut self, grid: &Grid, t: f64, header: &[String], columns: &[&[f64]]) {
        let due = self.step == 0 || (self.every > 0 && self.step % self.every == 0);
        if due && self.error.is_none() {
            if let Err(e) = self.write(grid, t, header, columns) {
                self.error = Some(e);
            }
        }
        self.step += 1;
    }

    fn finish(&mut self, grid: &Grid, t: f64, header: &[String], columns: &[&[f64]]) -> Result<()> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        // the observer already counted the final state
        self.step -= 1;
        if self.last_written != Some(self.step) {
            self.write(grid, t, header, columns)?;
        }
        Ok(())
    }

    fn write(&mut self, grid: &Grid, t: f64, header: &[String], columns: &[&[f64]]) -> Result<()> {
        let mut s = format!(
            "# hamclosure snapshot\n# format {SNAPSHOT_FORMAT}\n# nx {}\n# N {}\n# t {}\n",
            grid.nx,
            self.nfields,
            fmt_f64(t)
        );
        s.push_str("x,");
        s.push_str(&header.join(","));
        s.push('\n');
        for j in 0..grid.nx {
            s.push_str(&fmt_f64(grid.x(j)));
            for c in columns {
                s.push(',');
                s.push_str(&fmt_f64(c[j]));
            }
            s.push('\n');
        }
        let path = self.dir.join(format!("step_{:08}.txt", self.step));
        fs::write(&path, s).with_context(|| format!("writing {}", path.display()))?;
        self.last_written = Some(self.step);
        Ok(())
    }
}

fn fluid_columns(s: &FieldState) -> Vec<&[f64]> {
    let mut c: Vec<&[f64]> = vec![&s.rho, &s.u];
    c.extend(s.nu.iter().map(Vec::as_slice));
    c
}

fn stream_columns(s: &StreamState) -> Vec<&[f64]> {
    s.a.iter().zip(&s.v).flat_map(|(a, v)| [a.as_slice(), v.as_slice()]).collect()
}

fn run_checks<S, R>(report: &mut Report, out: &RunOutput<S, R>) {
    let detail = format!("{} steps of dt = {}", out.steps, fmt_f64(out.dt));
    let mut ch = Check::new("run", "completed", out.completed(), detail);
    if let Some(e) = &out.abort {
        ch = ch.with_residual(e.to_string());
    }
    report.push(ch);
    let cfl: Vec<&String> = out.warnings.iter().filter(|w| w.contains("CFL")).collect();
    report.push(Check::new(
        "run",
        "time step",
        cfl.is_empty(),
        if cfl.is_empty() { "within the CFL estimate".into() } else { cfl[0].clone() },
    ));
    report.warnings.extend(out.warnings.iter().cloned());
    report.value("steps", out.steps);
    report.value("dt", out.dt);
}

fn drift_checks(report: &mut Report, drifts: &[(String, f64)], max: f64) {
    for (name, d) in drifts {
        report.drifts.insert(name.clone(), *d);
        report.push(Check::new(
            "drift",
            name.as_str(),
            *d < max,
            format!("relative drift {d:.3e} (limit {max:.0e})"),
        ));
    }
}

pub fn run(args: &SimulateArgs) -> Result<Report> {
    let loaded = config::load(&args.config)?;
    let cfg = &loaded.config;
    let out = out_dir(args.output.out.as_deref(), cfg, &args.config)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut report = Report::new("simulate", &loaded.bytes);
    let exec = cfg.execution()?;
    let ops = cfg.operators()?;
    let grid = *ops.grid();
    let opts = cfg.run_options()?;
    let every = cfg.output.snapshot_stride.unwrap_or(0);
    let max_drift = cfg.checks.max_drift.unwrap_or(DEFAULT_MAX_DRIFT);

    if let Some(spec) = &cfg.closure {
        let closure = spec.build()?;
        report.value("closure", closure.family().describe());
        let solver = FluidSolver::new(ops, FluidModel::new(&closure), exec);
        let init = cfg.fluid_state(&grid, closure.nvars())?;
        let mut header: Vec<String> = vec!["rho".into(), "u".into()];
        header.extend((0..closure.nvars()).map(|k| closure.names().get(k).to_string()));
        let mut snaps = Snapshots::new(&out, every, closure.nfields())?;
        let mut mode = (vec![], vec![]);
        let res = run_fluid(&solver, init, &opts, |s| {
            snaps.observe(&grid, s.t, &header, &fluid_columns(s));
            mode.0.push(s.t);
            mode.1.push(solver.ops().mode(&s.rho, 1).re);
        });
        let res = res.map_err(run_error)?;
        snaps.finish(&grid, res.state.t, &header, &fluid_columns(&res.state))?;
        let nv = closure.nvars();
        write_csv(
            &out.join("diagnostics.csv"),
            &DiagnosticRecord::header(nv),
            res.records.iter().map(DiagnosticRecord::values),
        )?;
        run_checks(&mut report, &res);
        let d = Drifts::of(&res.records);
        let mut named = vec![
            ("H".to_string(), d.h),
            ("C_mass".to_string(), d.c_mass),
            ("C_psi".to_string(), d.c_psi),
        ];
        named.extend(d.c_nu.iter().enumerate().map(|(k, x)| (format!("C_{}", k + 1), *x)));
        named.push(("momentum".to_string(), d.momentum));
        drift_checks(&mut report, &named, max_drift);
        if let Some(expect) = cfg.checks.frequency {
            let tol = cfg.checks.frequency_tolerance.unwrap_or(DEFAULT_FREQUENCY_TOLERANCE);
            let check = match oscillation_frequency(&mode.0, &mode.1) {
                Some(w) => {
                    report.value("frequency", w);
                    Check::new(
                        "physics",
                        "frequency",
                        (w - expect).abs() <= tol * expect.abs(),
                        format!("mode-1 density frequency {w:.6} (expected {expect} +- {:.1}%)", tol * 100.0),
                    )
                }
                None => Check::new("physics", "frequency", false, "fewer than three zero crossings"),
            };
            report.push(check);
        }
    } else {
        let solver = StreamSolver::new(ops, exec);
        let init = cfg.stream_state(&grid)?;
        let m = init.streams();
        let header: Vec<String> = (1..=m).flat_map(|k| [format!("a{k}"), format!("v{k}")]).collect();
        let mut snaps = Snapshots::new(&out, every, 2 * m)?;
        let res = run_streams(&solver, init, &opts, |s| {
            snaps.observe(&grid, s.t, &header, &stream_columns(s));
        });
        let res = res.map_err(run_error)?;
        snaps.finish(&grid, res.state.t, &header, &stream_columns(&res.state))?;
        write_csv(
            &out.join("diagnostics.csv"),
            &StreamRecord::header(),
            res.records.iter().map(StreamRecord::values),
        )?;
        run_checks(&mut report, &res);
        let col = |f: fn(&StreamRecord) -> f64| res.records.iter().map(f).collect::<Vec<_>>();
        let mass = res.records.first().map_or(0.0, |r| r.mass.abs());
        let named = vec![
            ("H".to_string(), relative_drift(&col(|r| r.h), 0.0)),
            ("C_mass".to_string(), relative_drift(&col(|r| r.mass), 0.0)),
            ("momentum".to_string(), relative_drift(&col(|r| r.momentum), mass)),
        ];
        drift_checks(&mut report, &named, max_drift);
    }
    report.out_dir = Some(out);
    Ok(report)
}

fn run_error(e: SimError) -> anyhow::Error {
    anyhow::Error::new(e).context("simulation could not start")
}
