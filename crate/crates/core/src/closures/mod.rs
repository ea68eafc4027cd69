//! Closure families written as polynomials `mu_n(nu)` in normal variables.
//!
//! A [`Closure`] bundles the polynomials `mu_0 = 1, mu_1, ..., mu_{2N-3}`,
//! the constant metric `g` of the flattened microscopic bracket, and
//! `gamma_n = (n+1) mu_n - nu . grad mu_n`. Every family goes through the
//! same [`Closure`] type so the bracket checks and the solver do not care
//! where the polynomials came from.

mod burby;
mod fourfield;
mod generic;
mod invert;
mod multidelta;
mod waterbag;

pub use burby::{
    burby_invert, burby_invert_exact, burby_mu, burby_mu_closed, burby_mu_closed_with_density,
    burby_mu_shifted, Branch,
};
pub use fourfield::{fourfield_family, FourFieldFamily};
pub use generic::{generate_closure_from_mu2, GammaRule};
pub use invert::{InvertOptions, NewtonReport};
pub use multidelta::{multidelta_from_normal, multidelta_mu, multidelta_to_normal, MultiDeltaNormal};
pub use waterbag::{
    waterbag_from_normal, waterbag_lambda, waterbag_metric, waterbag_mu, waterbag_partial_sums,
    waterbag_psi, waterbag_to_normal, WaterbagNormal,
};

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg::{self, LinalgError, RatMatrix};
use crate::moments::gamma_n;
use crate::poly::{fmt_rational, CompiledPoly, MultiPoly, PolyError, VarNames};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosureError {
    #[error("invalid closure parameters: {0}")]
    InvalidParams(String),
    #[error("index {n} out of range ({range})")]
    OutOfRange { n: usize, range: String },
    #[error("metric: {0}")]
    Metric(#[from] LinalgError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("moment inversion failed: {0}")]
    Inversion(String),
    #[error("state outside the admissible domain: {0}")]
    Domain(String),
    #[error("total density must be positive")]
    NonPositiveDensity,
}

/// Constant symmetric metric of the microscopic bracket.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    g: RatMatrix,
    inverse: RatMatrix,
    signature: (usize, usize),
}

impl Metric {
    pub fn new(g: RatMatrix) -> Result<Self, ClosureError> {
        let signature = linalg::signature(&g)?;
        let inverse = linalg::inverse(&g)?;
        Ok(Metric {
            g,
            inverse,
            signature,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.g
    }

    pub fn inverse(&self) -> &RatMatrix {
        &self.inverse
    }

    /// `(positive, negative)` eigenvalue counts of `g`.
    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    /// Signature of the full bracket: the `(rho, psi)` pair adds `(1, 1)`.
    pub fn full_signature(&self) -> (usize, usize) {
        (self.signature.0 + 1, self.signature.1 + 1)
    }

    pub fn scaled(&self, c: &BigRational) -> Result<Self, ClosureError> {
        Metric::new(
            self.g
                .iter()
                .map(|row| row.iter().map(|x| x * c).collect())
                .collect(),
        )
    }

    /// `1/2 nu . g^-1 nu` over `n` variables.
    pub fn half_quadratic_inverse(&self) -> MultiPoly {
        let n = self.dim();
        let mut q = MultiPoly::zero(n);
        for i in 0..n {
            for j in 0..n {
                let c = &self.inverse[i][j];
                if c.is_zero() {
                    continue;
                }
                let t = (&MultiPoly::var(n, i) * &MultiPoly::var(n, j)).scale(c);
                q = &q + &t;
            }
        }
        q.scale(&BigRational::new(1.into(), 2.into()))
    }

    /// `sum_kl a_k g_kl b_l` for vectors of polynomials.
    pub fn pair(&self, a: &[MultiPoly], b: &[MultiPoly]) -> MultiPoly {
        let nv = a.first().map_or(0, MultiPoly::nvars);
        let mut acc = MultiPoly::zero(nv);
        for (k, ak) in a.iter().enumerate() {
            if ak.is_zero() {
                continue;
            }
            for (l, bl) in b.iter().enumerate() {
                let c = &self.g[k][l];
                if c.is_zero() || bl.is_zero() {
                    continue;
                }
                acc = &acc + &(ak * bl).scale(c);
            }
        }
        acc
    }

    /// `g` as `f64` entries.
    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.g
            .iter()
            .map(|row| row.iter().map(crate::poly::to_f64).collect())
            .collect()
    }
}

/// Which closure, with its defining parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ClosureFamily {
    /// Single cold beam, `N = 2`, no normal variables.
    Cold,
    /// `M` Dirac streams, `N = 2M`.
    MultiDelta { streams: usize },
    /// Waterbag with heights `a_1..a_N` summing to zero.
    Waterbag { heights: Vec<BigRational> },
    /// Burby closure at level `m = N - 2`.
    Burby { level: usize, branch: Branch },
    /// Four-field closure with free parameter `kappa`.
    FourField { kappa: BigRational },
    /// Closure generated from an arbitrary cubic `mu_2`.
    Generic {
        mu2: MultiPoly,
        metric: RatMatrix,
        gamma: GammaRule,
    },
}

impl ClosureFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            ClosureFamily::Cold => "cold",
            ClosureFamily::MultiDelta { .. } => "multidelta",
            ClosureFamily::Waterbag { .. } => "waterbag",
            ClosureFamily::Burby { .. } => "burby",
            ClosureFamily::FourField { .. } => "fourfield",
            ClosureFamily::Generic { .. } => "generic",
        }
    }

    /// Short human-readable parameter summary.
    pub fn describe(&self) -> String {
        match self {
            ClosureFamily::Cold => "cold".into(),
            ClosureFamily::MultiDelta { streams } => format!("multidelta M={streams}"),
            ClosureFamily::Waterbag { heights } => format!(
                "waterbag a=({})",
                heights.iter().map(fmt_rational).collect::<Vec<_>>().join(",")
            ),
            ClosureFamily::Burby { level, branch } => {
                format!("burby m={level} branch={}", branch.name())
            }
            ClosureFamily::FourField { kappa } => format!("fourfield kappa={}", fmt_rational(kappa)),
            ClosureFamily::Generic { mu2, gamma, .. } => {
                let names = VarNames::indexed("nu", 1, mu2.nvars());
                format!("generic mu2={} gamma={}", mu2.to_text(&names), gamma.name())
            }
        }
    }
}

/// A fully built closure.
#[derive(Clone, Debug)]
pub struct Closure {
    family: ClosureFamily,
    nfields: usize,
    names: VarNames,
    metric: Metric,
    /// `mu[0] = 1`, `mu[n]` for `n <= top`; implicitly zero beyond.
    mu: Vec<MultiPoly>,
    gamma: Vec<MultiPoly>,
}

impl Closure {
    pub fn new(family: ClosureFamily) -> Result<Self, ClosureError> {
        let (nfields, names, metric, mu_list) = match &family {
            ClosureFamily::Cold => (2, VarNames::new(Vec::<String>::new()), Metric::new(vec![])?, vec![]),
            ClosureFamily::MultiDelta { streams } => {
                let m = *streams;
                if m < 2 {
                    return Err(ClosureError::InvalidParams(
                        "multidelta needs at least 2 streams (use cold for 1)".into(),
                    ));
                }
                let n = 2 * m;
                let mus = (1..=2 * n - 3)
                    .map(|k| multidelta_mu(m, k))
                    .collect::<Result<Vec<_>, _>>()?;
                let names = VarNames::new(
                    (2..=m)
                        .map(|k| format!("xi{k}"))
                        .chain((2..=m).map(|k| format!("eta{k}"))),
                );
                (n, names, multidelta::metric(m)?, mus)
            }
            ClosureFamily::Waterbag { heights } => {
                let n = heights.len();
                let metric = waterbag_metric(heights)?;
                let mus = (1..=2 * n - 3)
                    .map(|k| waterbag_mu(heights, k))
                    .collect::<Result<Vec<_>, _>>()?;
                (n, VarNames::indexed("nu", 1, n - 2), metric, mus)
            }
            ClosureFamily::Burby { level, branch } => {
                let m = *level;
                if m < 1 {
                    return Err(ClosureError::InvalidParams("burby level must be >= 1".into()));
                }
                let n = m + 2;
                let sign = branch.sign();
                let mus = (1..=2 * n - 3)
                    .map(|k| {
                        if k <= m {
                            let p = burby_mu(m, k)?;
                            Ok(if k % 2 == 1 { p.scale(&sign) } else { p })
                        } else {
                            Ok(MultiPoly::zero(m))
                        }
                    })
                    .collect::<Result<Vec<_>, ClosureError>>()?;
                let metric = burby::metric(m)?.scaled(&sign)?;
                (n, VarNames::indexed("nu", 1, m), metric, mus)
            }
            ClosureFamily::FourField { kappa } => {
                let fam = fourfield_family(kappa);
                (4, fourfield::names(), fourfield::metric()?, fam.mu)
            }
            ClosureFamily::Generic { mu2, metric, gamma } => {
                let metric = Metric::new(metric.clone())?;
                if mu2.nvars() != metric.dim() {
                    return Err(ClosureError::InvalidParams(format!(
                        "mu2 has {} variables but the metric is {}x{}",
                        mu2.nvars(),
                        metric.dim(),
                        metric.dim()
                    )));
                }
                let n = metric.dim() + 2;
                let mus = generate_closure_from_mu2(mu2, &metric, gamma, 2 * n - 3)?;
                (n, VarNames::indexed("nu", 1, n - 2), metric, mus)
            }
        };
        let nv = nfields - 2;
        let mut mu = Vec::with_capacity(mu_list.len() + 1);
        mu.push(MultiPoly::one(nv));
        mu.extend(mu_list);
        // cold: mu_1 = 0 with no variables
        if mu.len() < 2 {
            mu.push(MultiPoly::zero(nv));
        }
        let gamma = mu.iter().enumerate().map(|(n, p)| gamma_n(p, n)).collect();
        Ok(Closure {
            family,
            nfields,
            names,
            metric,
            mu,
            gamma,
        })
    }

    pub fn family(&self) -> &ClosureFamily {
        &self.family
    }

    /// Number of fluid fields `N` (including `rho` and `u`).
    pub fn nfields(&self) -> usize {
        self.nfields
    }

    /// Number of normal variables, `N - 2`.
    pub fn nvars(&self) -> usize {
        self.nfields - 2
    }

    pub fn names(&self) -> &VarNames {
        &self.names
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// `mu_n`, zero beyond the stored range.
    pub fn mu(&self, n: usize) -> MultiPoly {
        self.mu
            .get(n)
            .cloned()
            .unwrap_or_else(|| MultiPoly::zero(self.nvars()))
    }

    /// `mu_0..mu_{2N-3}`.
    pub fn mu_all(&self) -> &[MultiPoly] {
        &self.mu
    }

    pub fn gamma(&self, n: usize) -> MultiPoly {
        self.gamma
            .get(n)
            .cloned()
            .unwrap_or_else(|| MultiPoly::zero(self.nvars()))
    }

    pub fn gamma_all(&self) -> &[MultiPoly] {
        &self.gamma
    }

    /// Highest stored moment index.
    pub fn top(&self) -> usize {
        self.mu.len() - 1
    }

    /// Internal-energy polynomial `mu_2 - mu_1^2` (the `S_2` closure).
    pub fn s2(&self) -> MultiPoly {
        &self.mu(2) - &self.mu(1).pow(2)
    }

    /// The polynomials the solver needs, compiled for `f64` evaluation.
    pub fn compiled(&self) -> CompiledClosure {
        CompiledClosure::new(self)
    }

    /// Evaluates `mu_1..mu_top` at a point.
    pub fn eval_mu(&self, nu: &[f64]) -> Result<Vec<f64>, ClosureError> {
        self.mu[1..]
            .iter()
            .map(|p| p.eval_f64(nu).map_err(ClosureError::from))
            .collect()
    }

    /// Recovers `nu` from observed `mu_1..mu_{N-2}` and returns it together
    /// with the closure moments `mu_{N-1}..mu_{2N-3}`.
    pub fn equation_of_state(
        &self,
        mu_observed: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), ClosureError> {
        let nv = self.nvars();
        if mu_observed.len() != nv {
            return Err(ClosureError::InvalidParams(format!(
                "expected {nv} observed moments, got {}",
                mu_observed.len()
            )));
        }
        let nu = self.invert(mu_observed, &InvertOptions::default())?;
        let all = self.eval_mu(&nu)?;
        Ok((nu, all[nv..].to_vec()))
    }

    /// `nu` with `mu_n(nu) = mu_observed[n-1]` for `n = 1..N-2`.
    pub fn invert(&self, mu_observed: &[f64], opts: &InvertOptions) -> Result<Vec<f64>, ClosureError> {
        match &self.family {
            ClosureFamily::Cold => Ok(vec![]),
            ClosureFamily::Burby { level, branch } => burby_invert(mu_observed, *level, *branch),
            _ => invert::newton_invert(self, mu_observed, opts).map(|r| r.nu),
        }
    }

    /// Whether a point lies in the family's admissible domain.
    pub fn admissible(&self, nu: &[f64]) -> Result<(), ClosureError> {
        match &self.family {
            ClosureFamily::MultiDelta { streams } => multidelta::admissible(*streams, nu),
            ClosureFamily::Waterbag { heights } => waterbag::admissible(heights, nu),
            _ => {
                if nu.iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err(ClosureError::Domain("non-finite normal variables".into()))
                }
            }
        }
    }

    /// Typical magnitude used to seed root finding.
    pub(crate) fn seed_point(&self) -> Vec<f64> {
        match &self.family {
            ClosureFamily::MultiDelta { streams } => multidelta::seed(*streams),
            ClosureFamily::Waterbag { heights } => waterbag::seed(heights),
            _ => vec![1.0; self.nvars()],
        }
    }
}

/// `f64` evaluators for `mu_1`, `mu_2` and their gradients.
#[derive(Clone, Debug)]
pub struct CompiledClosure {
    pub nvars: usize,
    pub mu1: CompiledPoly,
    pub mu2: CompiledPoly,
    pub dmu1: Vec<CompiledPoly>,
    pub dmu2: Vec<CompiledPoly>,
    pub g: Vec<Vec<f64>>,
    pub g_inv: Vec<Vec<f64>>,
}

impl CompiledClosure {
    fn new(c: &Closure) -> Self {
        let nv = c.nvars();
        let mu1 = c.mu(1);
        let mu2 = c.mu(2);
        CompiledClosure {
            nvars: nv,
            mu1: CompiledPoly::new(&mu1),
            mu2: CompiledPoly::new(&mu2),
            dmu1: mu1.gradient().iter().map(CompiledPoly::new).collect(),
            dmu2: mu2.gradient().iter().map(CompiledPoly::new).collect(),
            g: c.metric().to_f64(),
            g_inv: c
                .metric()
                .inverse()
                .iter()
                .map(|r| r.iter().map(crate::poly::to_f64).collect())
                .collect(),
        }
    }
}

/// Rational helper used by several families.
pub(crate) fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub(crate) fn one() -> BigRational {
    BigRational::one()
}
