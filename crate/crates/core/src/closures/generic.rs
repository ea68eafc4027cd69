//! Closures generated from a single cubic `mu_2`.
//!
//! With `mu_1 = 1/2 nu . g^-1 nu`,
//! `mu_{n+1} = (grad mu_n . g grad mu_2 + 2 mu_1 gamma_n + n mu_{n-1} gamma_2) / (n+2)`.

use num_rational::BigRational;
use num_traits::One;

use super::{ClosureError, Metric};
use crate::moments::gamma_n;
use crate::poly::MultiPoly;

/// How `gamma_n` is obtained while generating the sequence.
#[derive(Clone, Debug, PartialEq)]
pub enum GammaRule {
    /// `gamma_n = 0`: homogeneous families.
    Zero,
    /// `gamma_n = Lambda^n - n Lambda mu_{n-1}`.
    Waterbag(BigRational),
    /// `gamma_n = (n+1) mu_n - nu . grad mu_n` from the polynomials themselves.
    FromMu,
}

impl GammaRule {
    pub fn name(&self) -> String {
        match self {
            GammaRule::Zero => "zero".into(),
            GammaRule::Waterbag(l) => format!("waterbag(Lambda={})", crate::poly::fmt_rational(l)),
            GammaRule::FromMu => "from-mu".into(),
        }
    }

    /// `gamma_n` given `mu_0..mu_n` (`mu[0] = 1`).
    pub fn gamma(&self, n: usize, mu: &[MultiPoly]) -> MultiPoly {
        let nv = mu[0].nvars();
        if n == 0 {
            return MultiPoly::one(nv);
        }
        match self {
            GammaRule::Zero => MultiPoly::zero(nv),
            GammaRule::Waterbag(l) => {
                let pow = MultiPoly::constant(nv, num_traits::pow(l.clone(), n));
                let c = l * BigRational::from_integer((n as i64).into());
                &pow - &mu[n - 1].scale(&c)
            }
            GammaRule::FromMu => gamma_n(&mu[n], n),
        }
    }
}

/// `mu_1..mu_{n_max}` generated from `mu_2`.
pub fn generate_closure_from_mu2(
    mu2: &MultiPoly,
    metric: &Metric,
    rule: &GammaRule,
    n_max: usize,
) -> Result<Vec<MultiPoly>, ClosureError> {
    let nv = metric.dim();
    if mu2.nvars() != nv {
        return Err(ClosureError::InvalidParams(format!(
            "mu2 has {} variables, metric is {nv}x{nv}",
            mu2.nvars()
        )));
    }
    // mu[0] = 1 so that mu[n] is mu_n
    let mut mu = vec![MultiPoly::one(nv), metric.half_quadratic_inverse(), mu2.clone()];
    let grad2 = mu2.gradient();
    let gamma2 = rule.gamma(2, &mu);
    for n in 2..n_max {
        let grad_n = mu[n].gradient();
        let mut next = metric.pair(&grad_n, &grad2);
        next = &next + &(&mu[1] * &rule.gamma(n, &mu)).scale(&BigRational::from_integer(2.into()));
        next = &next
            + &(&mu[n - 1] * &gamma2).scale(&BigRational::from_integer((n as i64).into()));
        mu.push(next.scale(&(BigRational::one() / BigRational::from_integer((n as i64 + 2).into()))));
    }
    mu.truncate(n_max + 1);
    Ok(mu.split_off(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::{burby_mu, fourfield_family, multidelta_mu, waterbag_metric, waterbag_mu};
    use crate::poly::{int, rat, VarNames};

    fn offdiag() -> Metric {
        Metric::new(vec![vec![int(0), int(1)], vec![int(1), int(0)]]).unwrap()
    }

    #[test]
    fn multidelta_two_streams() {
        let mu2 = multidelta_mu(2, 2).unwrap();
        let seq = generate_closure_from_mu2(&mu2, &offdiag(), &GammaRule::Zero, 5).unwrap();
        for (i, p) in seq.iter().enumerate() {
            assert_eq!(*p, multidelta_mu(2, i + 1).unwrap());
        }
    }

    #[test]
    fn fourfield_sequence() {
        let f = fourfield_family(&rat(2, 7));
        let seq = generate_closure_from_mu2(&f.mu[1], &offdiag(), &GammaRule::Zero, 5).unwrap();
        assert_eq!(seq, f.mu);
    }

    #[test]
    fn cube_over_three_truncates() {
        let names = VarNames::new(["G2", "G3"]);
        let mu2 = MultiPoly::parse("G2^3/3", &names).unwrap();
        let seq = generate_closure_from_mu2(&mu2, &offdiag(), &GammaRule::Zero, 5).unwrap();
        assert!(seq[2].is_zero() && seq[3].is_zero() && seq[4].is_zero());
    }

    #[test]
    fn burby_levels() {
        for m in 2..=5 {
            let g = super::super::burby::metric(m).unwrap();
            let mu2 = burby_mu(m, 2).unwrap();
            let seq = generate_closure_from_mu2(&mu2, &g, &GammaRule::Zero, 2 * m + 1).unwrap();
            for (i, p) in seq.iter().enumerate() {
                let n = i + 1;
                let expect = if n <= m { burby_mu(m, n).unwrap() } else { MultiPoly::zero(m) };
                assert_eq!(*p, expect, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn waterbag_rules_agree() {
        let a = vec![int(2), int(-1), int(3), int(-4)];
        let g = waterbag_metric(&a).unwrap();
        let mu2 = waterbag_mu(&a, 2).unwrap();
        let lambda = rat(1, 8);
        for rule in [GammaRule::Waterbag(lambda), GammaRule::FromMu] {
            let seq = generate_closure_from_mu2(&mu2, &g, &rule, 5).unwrap();
            for (i, p) in seq.iter().enumerate() {
                assert_eq!(*p, waterbag_mu(&a, i + 1).unwrap(), "{} n={}", rule.name(), i + 1);
            }
        }
    }
}
