//! `verify`: the exact identity suite for one or more closures.

use anyhow::{bail, Result};
use clap::Args;
use hamclosure::bracket::{check_flatness, full_signature};
use hamclosure::closures::{burby_mu, burby_mu_closed, generate_closure_from_mu2, Closure, ClosureFamily};
use hamclosure::Execution;

use crate::family::{gamma_rule, parse_levels, ClosureSpec, FamilyArgs};
use crate::report::{Check, Report};
use crate::Output;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Burby levels: `3`, `1,2,5` or `1..6`
    #[arg(long, conflicts_with = "level")]
    pub levels: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

pub fn run(args: &VerifyArgs, exec: Execution) -> Result<Report> {
    let base = args.family.spec();
    let specs: Vec<ClosureSpec> = match &args.levels {
        None => vec![base],
        Some(levels) => {
            if base.family != "burby" {
                bail!("--levels only applies to the burby family");
            }
            parse_levels(levels)?
                .into_iter()
                .map(|level| ClosureSpec {
                    level: Some(level),
                    ..base.clone()
                })
                .collect()
        }
    };
    let closures = specs.iter().map(ClosureSpec::build).collect::<Result<Vec<_>>>()?;
    let inputs = serde_json::to_vec(&specs)?;
    let mut report = Report::new("verify", &inputs);
    for c in &closures {
        for check in closure_checks(c, exec) {
            report.push(check);
        }
    }
    Ok(report)
}

/// Every exact identity that applies to a closure.
pub fn closure_checks(c: &Closure, exec: Execution) -> Vec<Check> {
    let fam = c.family();
    let group = fam.describe();
    let names = c.names();
    let mut out = vec![];

    let flat = check_flatness(c, exec);
    let fgroup = format!("{group} / flatness");
    for cell in &flat.cells {
        let mut ch = Check::new(&fgroup, cell.label(), cell.passed(), "");
        if !cell.passed() {
            ch = ch.with_residual(cell.residual.to_text(names));
        }
        out.push(ch);
    }

    // gamma_n, stored versus the family rule
    let rule = gamma_rule(fam);
    let mu = c.mu_all();
    let bad: Vec<String> = (1..=c.top())
        .filter_map(|n| {
            let d = &c.gamma(n) - &rule.gamma(n, mu);
            (!d.is_zero()).then(|| format!("gamma_{n}: {}", d.to_text(names)))
        })
        .collect();
    let what = match rule {
        hamclosure::closures::GammaRule::Zero => "gamma_n = 0".to_string(),
        ref r => format!("gamma_n follows {}", r.name()),
    };
    let mut ch = Check::new(&group, "gamma", bad.is_empty(), format!("{what}, n = 1..{}", c.top()));
    if !bad.is_empty() {
        ch = ch.with_residual(bad.join("; "));
    }
    out.push(ch);

    if let ClosureFamily::Burby { level, .. } = fam {
        let m = *level;
        let bad: Vec<usize> = (1..=m)
            .filter(|&n| match (burby_mu(m, n), burby_mu_closed(m, n)) {
                (Ok(a), Ok(b)) => a != b,
                _ => true,
            })
            .collect();
        let mut ch = Check::new(&group, "closed form", bad.is_empty(), format!("recursion == closed form, n = 1..{m}"));
        if !bad.is_empty() {
            ch = ch.with_residual(format!("differs at n = {bad:?}"));
        }
        out.push(ch);
    }

    if c.nvars() > 0 {
        let top = c.top();
        let ch = match generate_closure_from_mu2(&c.mu(2), c.metric(), &rule, top) {
            Ok(seq) => {
                let bad: Vec<String> = (1..=top)
                    .filter(|&n| seq[n - 1] != c.mu(n))
                    .map(|n| format!("mu_{n}: {}", (&seq[n - 1] - &c.mu(n)).to_text(names)))
                    .collect();
                let ch = Check::new(&group, "generation", bad.is_empty(), format!("mu_1..mu_{top} from mu_2"));
                if bad.is_empty() {
                    ch
                } else {
                    ch.with_residual(bad.join("; "))
                }
            }
            Err(e) => Check::new(&group, "generation", false, e.to_string()),
        };
        out.push(ch);
    }

    let sig = full_signature(c);
    let n = c.nfields();
    let expect: Option<Vec<(usize, usize)>> = match fam {
        ClosureFamily::Cold => Some(vec![(1, 1)]),
        ClosureFamily::MultiDelta { streams } => Some(vec![(*streams, *streams)]),
        ClosureFamily::Waterbag { heights } => {
            let pos = heights.iter().filter(|a| **a > num_rational::BigRational::default()).count();
            Some(vec![(n - pos, pos)])
        }
        ClosureFamily::Burby { .. } if n % 2 == 0 => Some(vec![(n / 2, n / 2)]),
        ClosureFamily::Burby { .. } => Some(vec![(n / 2, n.div_ceil(2)), (n.div_ceil(2), n / 2)]),
        ClosureFamily::FourField { .. } => Some(vec![(2, 2)]),
        ClosureFamily::Generic { .. } => None,
    };
    out.push(match expect {
        Some(e) => Check::new(
            &group,
            "signature",
            e.contains(&sig),
            format!("full bracket signature {sig:?}, expected {}", fmt_pairs(&e)),
        ),
        None => Check::new(&group, "signature", true, format!("full bracket signature {sig:?}")),
    });
    out
}

fn fmt_pairs(e: &[(usize, usize)]) -> String {
    e.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>().join(" or ")
}
