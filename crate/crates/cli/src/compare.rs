//! `compare`: closed fluid run against the multi-stream kinetic run from the
//! same initial data.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use hamclosure::closures::ClosureFamily;
use hamclosure::sim::{
    fluid_from_streams, run_fluid, run_streams, FieldState, FluidModel, FluidSolver, RunOptions, SimError,
    StreamSolver,
};

use crate::config::{self, DEFAULT_COMPARE_TOLERANCE};
use crate::report::{write_csv, Check, Report};
use crate::Output;

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Fluid config with a multidelta (or, for one stream, cold) closure
    #[arg(long)]
    pub fluid: PathBuf,
    /// Stream config with a [streams] section
    #[arg(long)]
    pub streams: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

/// Moments compared between the two runs: `P_0..P_3`.
const NMOM: usize = 3;

/// `max |a - b| / max |b|`.
fn rel_dev(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let dev = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        dev / scale
    } else {
        dev
    }
}

fn state_dev(a: &FieldState, b: &FieldState) -> f64 {
    let mut d = rel_dev(&a.rho, &b.rho).max(rel_dev(&a.u, &b.u));
    for (x, y) in a.nu.iter().zip(&b.nu) {
        d = d.max(rel_dev(x, y));
    }
    d
}

pub fn run(args: &CompareArgs) -> Result<Report> {
    let fl = config::load(&args.fluid)?;
    let kl = config::load(&args.streams)?;
    let (fc, kc) = (&fl.config, &kl.config);
    let spec = fc
        .closure
        .as_ref()
        .with_context(|| format!("{} has no [closure]", args.fluid.display()))?;
    let kspec = kc
        .streams
        .as_ref()
        .with_context(|| format!("{} has no [streams]", args.streams.display()))?;

    let (gf, gk) = (fc.grid()?, kc.grid()?);
    if gf.nx != gk.nx || (gf.length - gk.length).abs() > 1e-12 * gf.length {
        bail!(
            "grids differ: fluid L = {} nx = {}, streams L = {} nx = {}",
            gf.length,
            gf.nx,
            gk.length,
            gk.nx
        );
    }
    if fc.grid.derivative != kc.grid.derivative {
        bail!("derivative schemes differ between the two configs");
    }
    if let Some(init) = &fc.initial {
        if (init.n0 - kspec.n0).abs() > 1e-12 * kspec.n0.abs().max(1.0) {
            bail!(
                "background densities differ: fluid n0 = {}, streams n0 = {}",
                init.n0,
                kspec.n0
            );
        }
    }
    let m = kspec.fractions.len();
    let closure = spec.build()?;
    let expected = if m == 1 {
        ClosureFamily::Cold
    } else {
        ClosureFamily::MultiDelta { streams: m }
    };
    if *closure.family() != expected {
        bail!(
            "{m} streams correspond to the {} closure, but the fluid config uses {}",
            expected.describe(),
            closure.family().describe()
        );
    }

    let mut inputs = fl.bytes.clone();
    inputs.extend(&kl.bytes);
    let mut report = Report::new("compare", &inputs);
    report.value("closure", closure.family().describe());
    let tol = fc.checks.compare_tolerance.unwrap_or(DEFAULT_COMPARE_TOLERANCE);

    let ops = fc.operators()?;
    let exec = fc.execution()?;
    let st = kc.stream_state(&gk)?;
    let mapped = fluid_from_streams(&st)?;
    let init = match &fc.initial {
        Some(_) => {
            let own = fc.fluid_state(&gf, closure.nvars())?;
            let d = state_dev(&own, &mapped);
            report.push(Check::new(
                "initial data",
                "fluid state vs mapped streams",
                d < tol,
                format!("max relative deviation {d:.3e}"),
            ));
            own
        }
        None => mapped,
    };

    let fluid = FluidSolver::new(ops.clone(), FluidModel::new(&closure), exec);
    let kin = StreamSolver::new(ops, exec);
    let base = fc.run_options()?;
    // one schedule for both runs
    let dt = base.dt.unwrap_or_else(|| fluid.cfl_dt(&init).min(kin.cfl_dt(&st)));
    let opts = RunOptions { dt: Some(dt), ..base };
    let stride = opts.stride;

    let mut km: Vec<Vec<Vec<f64>>> = vec![];
    let mut step = 0;
    let k = run_streams(&kin, st, &opts, |s| {
        if step % stride == 0 {
            km.push(s.moments(NMOM));
        }
        step += 1;
    })
    .map_err(start_error)?;
    // wave breaking ends the window; the fluid run stops there too
    let t_stop = match &k.abort {
        Some(SimError::WaveBreaking { t, .. }) => *t,
        _ => opts.t_end,
    };
    let fopts = RunOptions { t_end: t_stop, ..opts.clone() };
    let mut fm: Vec<(f64, Vec<Vec<f64>>)> = vec![];
    step = 0;
    let f = run_fluid(&fluid, init, &fopts, |s| {
        if step % stride == 0 {
            fm.push((s.t, fluid.moments(s, NMOM)));
        }
        step += 1;
    })
    .map_err(start_error)?;

    let mut fc_check = Check::new("run", "fluid", f.completed(), format!("{} steps of dt = {dt:e}", f.steps));
    if let Some(e) = &f.abort {
        fc_check = fc_check.with_residual(e.to_string());
    }
    report.push(fc_check);
    report.warnings.extend(f.warnings.iter().map(|w| format!("fluid: {w}")));
    report.warnings.extend(k.warnings.iter().map(|w| format!("streams: {w}")));
    match &k.abort {
        None => report.push(Check::new("run", "streams", true, format!("{} steps", k.steps))),
        Some(SimError::WaveBreaking { t, .. }) => {
            report
                .warnings
                .push(format!("wave breaking at t = {t}; comparison window truncated"));
            report.push(Check::new("run", "streams", true, format!("stopped by wave breaking at t = {t}")));
        }
        Some(e) => report.push(Check::new("run", "streams", false, "aborted").with_residual(e.to_string())),
    }

    let window = fm.len().min(km.len());
    let mut rows = Vec::with_capacity(window);
    let mut worst = [0.0f64; NMOM + 1];
    for ((t, pf), pk) in fm.iter().zip(&km).take(window) {
        let mut row = vec![*t];
        for n in 0..=NMOM {
            let d = rel_dev(&pf[n], &pk[n]);
            worst[n] = worst[n].max(d);
            row.push(d);
        }
        rows.push(row);
    }
    let t_end = fm.get(window.saturating_sub(1)).map_or(0.0, |r| r.0);
    report.value("window_end", t_end);
    for (n, d) in worst.iter().enumerate() {
        report.drifts.insert(format!("P{n}"), *d);
        report.push(Check::new(
            "moments",
            format!("P{n}"),
            window > 1 && *d < tol,
            format!("max relative deviation {d:.3e} over t in [0, {t_end}] (limit {tol:.0e})"),
        ));
    }

    let out = match &args.output.out {
        Some(o) => o.clone(),
        None => crate::simulate::out_dir(None, fc, &args.fluid)?,
    };
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..=NMOM).map(|n| format!("dev_P{n}")))
        .collect();
    write_csv(&out.join("compare.csv"), &header, rows)?;
    report.out_dir = Some(out);
    Ok(report)
}

fn start_error(e: SimError) -> anyhow::Error {
    anyhow::Error::new(e).context("run could not start")
}
