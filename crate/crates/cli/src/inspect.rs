//! `closure show | casimir | eos`.

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use hamclosure::bracket::{casimirs, full_signature};
use hamclosure::closures::{burby_invert_exact, Closure, ClosureFamily};
use hamclosure::poly::{fmt_rational, rat};
use num_rational::BigRational;

use crate::family::FamilyArgs;
use crate::report::{Check, Report};
use crate::Output;

#[derive(Subcommand, Debug)]
pub enum ClosureCmd {
    /// Print mu_1..mu_{2N-3} and the metric
    Show(ShowArgs),
    /// Print the Casimir densities and exact Burby inversions at sample points
    Casimir(ShowArgs),
    /// Recover nu from observed mu_1..mu_{N-2} and print the closure moments
    Eos(EosArgs),
}

#[derive(Args, Debug)]
pub struct ShowArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct EosArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Observed mu_1..mu_{N-2}, comma separated
    #[arg(long, allow_hyphen_values = true)]
    pub mu: String,
    #[command(flatten)]
    pub output: Output,
}

impl ClosureCmd {
    pub fn output(&self) -> &Output {
        match self {
            ClosureCmd::Show(a) | ClosureCmd::Casimir(a) => &a.output,
            ClosureCmd::Eos(a) => &a.output,
        }
    }
}

fn build(f: &FamilyArgs) -> Result<(Closure, Vec<u8>)> {
    let spec = f.spec();
    let closure = spec.build()?;
    Ok((closure, serde_json::to_vec(&spec)?))
}

fn header(c: &Closure, r: &mut Report) {
    let names: Vec<&str> = (0..c.nvars()).map(|k| c.names().get(k)).collect();
    r.text.push(format!("family: {}", c.family().describe()));
    r.text.push(format!("fields: N = {}", c.nfields()));
    if !names.is_empty() {
        r.text.push(format!("variables: {}", names.join(", ")));
    }
    r.value("family", c.family().describe());
    r.value("variables", &names);
}

pub fn run(cmd: &ClosureCmd) -> Result<Report> {
    match cmd {
        ClosureCmd::Show(a) => show(a),
        ClosureCmd::Casimir(a) => casimir(a),
        ClosureCmd::Eos(a) => eos(a),
    }
}

fn show(a: &ShowArgs) -> Result<Report> {
    let (c, inputs) = build(&a.family)?;
    let mut r = Report::new("closure show", &inputs);
    header(&c, &mut r);
    let rows: Vec<String> = c
        .metric()
        .matrix()
        .iter()
        .map(|row| row.iter().map(fmt_rational).collect::<Vec<_>>().join(", "))
        .collect();
    if !rows.is_empty() {
        r.text.push(format!("metric: [{}]", rows.join("; ")));
    }
    let (l, q) = c.metric().signature();
    r.text.push(format!("signature: ({l}, {q}), full bracket {:?}", full_signature(&c)));
    let mut mus = vec![];
    for n in 1..=c.top() {
        let text = c.mu(n).to_text(c.names());
        r.text.push(format!("mu{n} = {text}"));
        mus.push(text);
    }
    r.value("metric", &rows);
    r.value("mu", &mus);
    Ok(r)
}

/// Sample points with rational coordinates and a positive last coordinate.
fn sample_points(m: usize) -> Vec<Vec<BigRational>> {
    let mut pts = vec![];
    for s in 1..=3i64 {
        let mut p: Vec<BigRational> = (1..m as i64).map(|k| rat((1 - 2 * (k % 2)) * k * s, k + 2)).collect();
        p.push(rat(s + 1, 3));
        pts.push(p);
    }
    pts
}

fn fmt_point(p: &[BigRational]) -> String {
    format!("({})", p.iter().map(fmt_rational).collect::<Vec<_>>().join(", "))
}

fn casimir(a: &ShowArgs) -> Result<Report> {
    let (c, inputs) = build(&a.family)?;
    let mut r = Report::new("closure casimir", &inputs);
    header(&c, &mut r);
    let set = casimirs(&c);
    let dens: Vec<String> = set.items.iter().map(|i| i.density.clone()).collect();
    for d in &dens {
        r.text.push(format!("casimir density: {d}"));
    }
    r.value("casimirs", &dens);
    if let ClosureFamily::Burby { level, branch } = c.family() {
        let m = *level;
        for nu in sample_points(m) {
            let mu: Vec<BigRational> = (1..=m).map(|n| c.mu(n).eval(&nu)).collect::<Result<_, _>>()?;
            let back = burby_invert_exact(&mu, m, *branch);
            let (ok, shown) = match &back {
                Ok(b) => (*b == nu, fmt_point(b)),
                Err(e) => (false, e.to_string()),
            };
            r.text.push(format!("nu = {} -> mu = {} -> nu = {shown}", fmt_point(&nu), fmt_point(&mu)));
            r.push(Check::new(
                "inversion",
                format!("nu = {}", fmt_point(&nu)),
                ok,
                "exact round trip",
            ));
        }
    } else {
        r.text
            .push("inversion: numeric only for this family, see `closure eos`".to_string());
    }
    Ok(r)
}

fn eos(a: &EosArgs) -> Result<Report> {
    let (c, mut inputs) = build(&a.family)?;
    let mu: Vec<f64> = a
        .mu
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad moment `{t}`")))
        .collect::<Result<_>>()?;
    if mu.len() != c.nvars() {
        bail!("{} needs {} observed moments mu_1..mu_{}, got {}", c.family().describe(), c.nvars(), c.nvars(), mu.len());
    }
    inputs.extend(a.mu.as_bytes());
    let mut r = Report::new("closure eos", &inputs);
    header(&c, &mut r);
    let (nu, closed) = c.equation_of_state(&mu)?;
    let names = c.names();
    for (k, x) in nu.iter().enumerate() {
        r.text.push(format!("{} = {:e}", names.get(k), x + 0.0));
    }
    let nv = c.nvars();
    for (i, x) in closed.iter().enumerate() {
        r.text.push(format!("mu{} = {:e}", nv + 1 + i, x + 0.0));
    }
    let again = c.eval_mu(&nu)?;
    let err = mu
        .iter()
        .zip(&again)
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max);
    r.push(Check::new(
        "inversion",
        "round trip",
        err < 1e-10,
        format!("max relative residual {err:.2e}"),
    ));
    r.value("nu", &nu);
    r.value("closure_moments", &closed);
    Ok(r)
}
