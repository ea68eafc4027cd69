//! Closure selection shared by command-line flags and run configs.

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use hamclosure::closures::{waterbag_lambda, Branch, Closure, ClosureFamily, GammaRule};
use hamclosure::linalg::RatMatrix;
use hamclosure::poly::{parse_rational, VarNames};
use hamclosure::MultiPoly;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

/// A rational written as an integer, a float or a string such as `"-2/3"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalSpec {
    Int(i64),
    Float(f64),
    Text(String),
}

impl RationalSpec {
    pub fn value(&self) -> Result<BigRational> {
        let text = match self {
            RationalSpec::Int(i) => i.to_string(),
            RationalSpec::Float(x) => {
                if !x.is_finite() {
                    bail!("non-finite number {x}");
                }
                // shortest round-trip decimal, so 0.1 reads as 1/10
                format!("{x:?}")
            }
            RationalSpec::Text(s) => s.clone(),
        };
        Ok(parse_rational(&text)?)
    }
}

/// Parameters of one closure, as written in a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub streams: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heights: Option<Vec<RationalSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<RationalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<RationalSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
}

impl ClosureSpec {
    fn given(&self) -> Vec<&'static str> {
        let mut out = vec![];
        let flags = [
            ("level", self.level.is_some()),
            ("branch", self.branch.is_some()),
            ("streams", self.streams.is_some()),
            ("heights", self.heights.is_some()),
            ("kappa", self.kappa.is_some()),
            ("mu2", self.mu2.is_some()),
            ("metric", self.metric.is_some()),
            ("gamma", self.gamma.is_some()),
        ];
        for (name, set) in flags {
            if set {
                out.push(name);
            }
        }
        out
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        for name in self.given() {
            if !allowed.contains(&name) {
                bail!("`{name}` does not apply to the {} family", self.family);
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Result<ClosureFamily> {
        let fam = match self.family.as_str() {
            "cold" => {
                self.only(&[])?;
                ClosureFamily::Cold
            }
            "multidelta" => {
                self.only(&["streams"])?;
                let streams = self.streams.context("multidelta needs `streams`")?;
                ClosureFamily::MultiDelta { streams }
            }
            "waterbag" => {
                self.only(&["heights"])?;
                let heights = self
                    .heights
                    .as_ref()
                    .context("waterbag needs `heights`")?
                    .iter()
                    .map(RationalSpec::value)
                    .collect::<Result<Vec<_>>>()?;
                ClosureFamily::Waterbag { heights }
            }
            "burby" => {
                self.only(&["level", "branch"])?;
                let level = self.level.context("burby needs `level`")?;
                let branch = match &self.branch {
                    None => Branch::Plus,
                    Some(b) => Branch::parse(b).ok_or_else(|| anyhow!("unknown branch `{b}` (plus|minus)"))?,
                };
                ClosureFamily::Burby { level, branch }
            }
            "fourfield" => {
                self.only(&["kappa"])?;
                let kappa = self.kappa.as_ref().context("fourfield needs `kappa`")?.value()?;
                ClosureFamily::FourField { kappa }
            }
            "generic" => {
                self.only(&["mu2", "metric", "gamma"])?;
                let src = self.mu2.as_deref().context("generic needs `mu2`")?;
                let metric = match &self.metric {
                    Some(rows) => rows
                        .iter()
                        .map(|r| r.iter().map(RationalSpec::value).collect::<Result<Vec<_>>>())
                        .collect::<Result<RatMatrix>>()?,
                    None => identity(highest_nu_index(src).max(1)),
                };
                let mu2 = MultiPoly::parse(src, &VarNames::indexed("nu", 1, metric.len()))
                    .with_context(|| format!("parsing mu2 `{src}` in nu1..nu{}", metric.len()))?;
                let gamma = parse_gamma(self.gamma.as_deref().unwrap_or("zero"))?;
                ClosureFamily::Generic { mu2, metric, gamma }
            }
            other => bail!(
                "unknown closure family `{other}` (cold|multidelta|waterbag|burby|fourfield|generic)"
            ),
        };
        Ok(fam)
    }

    pub fn build(&self) -> Result<Closure> {
        let fam = self.family()?;
        Closure::new(fam).with_context(|| format!("building the {} closure", self.family))
    }
}

fn identity(n: usize) -> RatMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| BigRational::from_integer(((i == j) as i64).into()))
                .collect()
        })
        .collect()
}

/// Largest `k` with `nu<k>` appearing in a polynomial text.
fn highest_nu_index(src: &str) -> usize {
    let b = src.as_bytes();
    let mut best = 0;
    let mut i = 0;
    while i < b.len() {
        if b[i..].starts_with(b"nu") && (i == 0 || !b[i - 1].is_ascii_alphanumeric()) {
            let digits: String = src[i + 2..].chars().take_while(char::is_ascii_digit).collect();
            if let Ok(k) = digits.parse::<usize>() {
                best = best.max(k);
            }
            i += 2 + digits.len();
        } else {
            i += 1;
        }
    }
    best
}

fn parse_gamma(s: &str) -> Result<GammaRule> {
    match s {
        "zero" => Ok(GammaRule::Zero),
        "from-mu" => Ok(GammaRule::FromMu),
        _ => match s.strip_prefix("waterbag:") {
            Some(l) => Ok(GammaRule::Waterbag(parse_rational(l)?)),
            None => bail!("unknown gamma rule `{s}` (zero|from-mu|waterbag:<Lambda>)"),
        },
    }
}

/// The gamma rule a family satisfies, used to regenerate its moments.
pub fn gamma_rule(fam: &ClosureFamily) -> GammaRule {
    match fam {
        ClosureFamily::Waterbag { heights } => GammaRule::Waterbag(waterbag_lambda(heights)),
        ClosureFamily::Generic { gamma, .. } => gamma.clone(),
        _ => GammaRule::Zero,
    }
}

/// Closure selection flags.
#[derive(Args, Clone, Debug)]
pub struct FamilyArgs {
    /// cold, multidelta, waterbag, burby, fourfield or generic
    #[arg(long)]
    pub family: String,
    /// Burby level m (N = m + 2)
    #[arg(long)]
    pub level: Option<usize>,
    /// Burby branch for odd levels: plus or minus
    #[arg(long)]
    pub branch: Option<String>,
    /// Number of streams of the multi-delta closure
    #[arg(long)]
    pub streams: Option<usize>,
    /// Waterbag heights, comma separated, e.g. 1,1,-2
    #[arg(long, allow_hyphen_values = true)]
    pub heights: Option<String>,
    /// Four-field parameter kappa
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    /// Generic closure: cubic mu_2 in nu1, nu2, ...
    #[arg(long)]
    pub mu2: Option<String>,
    /// Generic closure: metric rows separated by `;`, e.g. "0,1;1,0" (default identity)
    #[arg(long, allow_hyphen_values = true)]
    pub metric: Option<String>,
    /// Generic closure: zero, from-mu or waterbag:<Lambda>
    #[arg(long)]
    pub gamma: Option<String>,
}

fn list(s: &str) -> Vec<RationalSpec> {
    s.split(',').map(|t| RationalSpec::Text(t.trim().to_string())).collect()
}

impl FamilyArgs {
    pub fn spec(&self) -> ClosureSpec {
        ClosureSpec {
            family: self.family.clone(),
            level: self.level,
            branch: self.branch.clone(),
            streams: self.streams,
            heights: self.heights.as_deref().map(list),
            kappa: self.kappa.clone().map(RationalSpec::Text),
            mu2: self.mu2.clone(),
            metric: self.metric.as_deref().map(|m| m.split(';').map(list).collect()),
            gamma: self.gamma.clone(),
        }
    }
}

/// Parses `3`, `1,2,5` or `1..6` (inclusive).
pub fn parse_levels(s: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().with_context(|| format!("bad level range `{s}`"))?;
        let b: usize = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .with_context(|| format!("bad level range `{s}`"))?;
        if a > b {
            bail!("empty level range `{s}`");
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().with_context(|| format!("bad level `{t}`")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels() {
        assert_eq!(parse_levels("1..6").unwrap(), vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(parse_levels("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_levels("4,1").unwrap(), vec![4, 1]);
        assert!(parse_levels("5..2").is_err());
    }

    #[test]
    fn nu_indices() {
        assert_eq!(highest_nu_index("nu1^3"), 1);
        assert_eq!(highest_nu_index("nu2*nu12^2 + 3*nu3"), 12);
        assert_eq!(highest_nu_index("x1"), 0);
    }

    #[test]
    fn rationals() {
        assert_eq!(RationalSpec::Float(0.1).value().unwrap(), BigRational::new(1.into(), 10.into()));
        assert_eq!(RationalSpec::Text("-2/3".into()).value().unwrap(), BigRational::new((-2).into(), 3.into()));
        assert_eq!(RationalSpec::Int(-2).value().unwrap(), BigRational::from_integer((-2).into()));
    }

    #[test]
    fn rejects_foreign_parameters() {
        let spec = ClosureSpec {
            family: "burby".into(),
            level: Some(2),
            kappa: Some(RationalSpec::Int(1)),
            ..Default::default()
        };
        assert!(spec.family().unwrap_err().to_string().contains("kappa"));
    }

    #[test]
    fn generic_defaults_to_identity_metric() {
        let spec = ClosureSpec {
            family: "generic".into(),
            mu2: Some("nu2*nu3^2".into()),
            ..Default::default()
        };
        match spec.family().unwrap() {
            ClosureFamily::Generic { metric, gamma, .. } => {
                assert_eq!(metric, identity(3));
                assert_eq!(gamma, GammaRule::Zero);
            }
            f => panic!("{f:?}"),
        }
    }
}
