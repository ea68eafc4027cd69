//! Burby closure: moments of a sum of derivatives of a Dirac delta.
//!
//! Level-`m` moments `mu_n^(m)(nu_n..nu_m)` follow the recursion
//! `mu_m = nu_m^(m+1) / (m+1)` and, for `n < m`,
//! `mu_n = sum_k C(n,k) nu_m^(n-k) mu_k^(m-n-1)(nu_{k+n}..nu_{m-1})`,
//! with `mu_0^(l)(x_0..x_l) = x_0`. The metric is the all-ones antidiagonal.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{ClosureError, Metric};
use crate::poly::{binomial, exact_root, int, MultiPoly};

/// Sign branch for the Burby closure.
///
/// `Minus` uses `(-1)^n mu_n` with metric `-g`; for odd levels it covers the
/// states with `mu_m < 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> BigRational {
        match self {
            Branch::Plus => BigRational::one(),
            Branch::Minus => -BigRational::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plus" | "+" => Some(Branch::Plus),
            "minus" | "-" => Some(Branch::Minus),
            _ => None,
        }
    }
}

struct Builder {
    nv: usize,
    memo: HashMap<(usize, usize, usize), MultiPoly>,
}

impl Builder {
    fn new(nv: usize) -> Self {
        Builder {
            nv,
            memo: HashMap::new(),
        }
    }

    /// Index of `nu_j` (1-based, `nu_0` allowed when the space has a density slot).
    fn var(&self, j: usize, base: usize) -> MultiPoly {
        MultiPoly::var(self.nv, j - base)
    }

    /// `mu_k^(level)` with `x_i -> nu_{i + offset}`; `base` is the index of
    /// the first variable of the ambient space (0 or 1).
    fn level(&mut self, level: usize, k: usize, offset: usize, base: usize) -> MultiPoly {
        if k > level {
            return MultiPoly::zero(self.nv);
        }
        if k == 0 {
            return self.var(offset, base);
        }
        if let Some(p) = self.memo.get(&(level, k, offset)) {
            return p.clone();
        }
        let last = self.var(level + offset, base);
        let p = if k == level {
            last.pow(level as u32 + 1)
                .scale(&BigRational::new(1.into(), (level as i64 + 1).into()))
        } else {
            let mut acc = MultiPoly::zero(self.nv);
            for j in 0..=k {
                let inner = self.level(level - k - 1, j, offset + k, base);
                if inner.is_zero() {
                    continue;
                }
                let t = (&last.pow((k - j) as u32) * &inner).scale(&binomial(k as u32, j as u32));
                acc = &acc + &t;
            }
            acc
        };
        self.memo.insert((level, k, offset), p.clone());
        p
    }
}

fn check_range(m: usize, n: usize, lo: usize) -> Result<(), ClosureError> {
    if m == 0 || n < lo || n > m {
        return Err(ClosureError::OutOfRange {
            n,
            range: format!("{lo} <= n <= m with m = {m} >= 1"),
        });
    }
    Ok(())
}

/// `mu_n^(m)` over `nu_1..nu_m` by the recursion.
pub fn burby_mu(m: usize, n: usize) -> Result<MultiPoly, ClosureError> {
    check_range(m, n, 1)?;
    Ok(Builder::new(m).level(m, n, 0, 1))
}

/// `mu_n^(level)(nu_{n+offset}..nu_{level+offset})` over `nu_1..nu_nv`;
/// `mu_0` maps to `nu_offset`.
pub fn burby_mu_shifted(
    level: usize,
    n: usize,
    offset: usize,
    nv: usize,
) -> Result<MultiPoly, ClosureError> {
    let lowest = n + offset;
    if n > level {
        return Ok(MultiPoly::zero(nv));
    }
    if lowest == 0 || level + offset > nv {
        return Err(ClosureError::OutOfRange {
            n,
            range: format!("variables nu_{lowest}..nu_{} within nu_1..nu_{nv}", level + offset),
        });
    }
    Ok(Builder::new(nv).level(level, n, offset, 1))
}

/// Sum of `nu_{i_1}..nu_{i_{n+1}}` over ordered tuples in `[n, m]` with
/// `i_1 + .. + i_{n+1} = n(m+1)`, divided by `n+1`. Variables are indexed
/// from `base`.
fn closed(m: usize, n: usize, nv: usize, base: usize) -> MultiPoly {
    let target = n * (m + 1);
    // dp[s] = sum of products with index sum s
    let mut dp: Vec<MultiPoly> = vec![MultiPoly::zero(nv); target + 1];
    dp[0] = MultiPoly::one(nv);
    for _ in 0..=n {
        let mut next = vec![MultiPoly::zero(nv); target + 1];
        for (s, p) in dp.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for i in n..=m {
                if s + i > target {
                    break;
                }
                let t = p * &MultiPoly::var(nv, i - base);
                next[s + i] = &next[s + i] + &t;
            }
        }
        dp = next;
    }
    dp[target].scale(&BigRational::new(1.into(), (n as i64 + 1).into()))
}

/// `mu_n^(m)` from the closed tuple-sum form, over `nu_1..nu_m`.
pub fn burby_mu_closed(m: usize, n: usize) -> Result<MultiPoly, ClosureError> {
    check_range(m, n, 1)?;
    Ok(closed(m, n, m, 1))
}

/// Closed form over `nu_0..nu_m`, where `nu_0` is the density slot so that
/// `n = 0` gives `nu_0`.
pub fn burby_mu_closed_with_density(m: usize, n: usize) -> Result<MultiPoly, ClosureError> {
    check_range(m, n, 0)?;
    Ok(closed(m, n, m + 1, 0))
}

/// All-ones antidiagonal `m x m` metric.
pub(super) fn metric(m: usize) -> Result<Metric, ClosureError> {
    let mut g = crate::linalg::zeros(m, m);
    for (i, row) in g.iter_mut().enumerate() {
        row[m - 1 - i] = BigRational::one();
    }
    Metric::new(g)
}

/// Plus-branch moments with the `nu_n` term dropped: `chi_n = mu_n - nu_n nu_m^n`.
fn chi_polys(m: usize) -> Result<Vec<MultiPoly>, ClosureError> {
    (1..m)
        .map(|n| {
            let p = burby_mu(m, n)?;
            let lead = &MultiPoly::var(m, n - 1) * &MultiPoly::var(m, m - 1).pow(n as u32);
            Ok(&p - &lead)
        })
        .collect()
}

/// Flips `mu_n -> (-1)^n mu_n` for the minus branch and checks the leading
/// moment has a root on the chosen branch.
fn branch_moments<T: Clone>(
    mu: &[T],
    m: usize,
    branch: Branch,
    neg: impl Fn(&T) -> T,
    positive: impl Fn(&T) -> bool,
    zero: impl Fn(&T) -> bool,
) -> Result<Vec<T>, ClosureError> {
    if m == 0 || mu.len() != m {
        return Err(ClosureError::InvalidParams(format!(
            "burby level {m} needs {m} moments, got {}",
            mu.len()
        )));
    }
    let flipped: Vec<T> = mu
        .iter()
        .enumerate()
        .map(|(i, x)| {
            if branch == Branch::Minus && (i + 1) % 2 == 1 {
                neg(x)
            } else {
                x.clone()
            }
        })
        .collect();
    let top = &flipped[m - 1];
    if zero(top) {
        return Err(ClosureError::Inversion(
            "leading moment mu_m vanishes".into(),
        ));
    }
    if m % 2 == 1 && !positive(top) {
        return Err(ClosureError::Inversion(format!(
            "odd level {m}: mu_m has the wrong sign for the {} branch",
            branch.name()
        )));
    }
    Ok(flipped)
}

/// `nu` from `mu_1..mu_m` by back-substitution down the anti-triangular system.
pub fn burby_invert(mu: &[f64], m: usize, branch: Branch) -> Result<Vec<f64>, ClosureError> {
    if mu.iter().any(|x| !x.is_finite()) {
        return Err(ClosureError::Inversion("non-finite moments".into()));
    }
    let mu = branch_moments(mu, m, branch, |x| -x, |x| *x > 0.0, |x| *x == 0.0)?;
    let top = mu[m - 1];
    let k = (m + 1) as f64;
    let mut nu = vec![0.0; m];
    nu[m - 1] = top.signum() * (k * top.abs()).powf(1.0 / k);
    let chi = chi_polys(m)?;
    for n in (1..m).rev() {
        let c = chi[n - 1].eval_f64(&nu)?;
        nu[n - 1] = (mu[n - 1] - c) / nu[m - 1].powi(n as i32);
    }
    Ok(nu)
}

/// Exact inversion when `(m+1) |mu_m|` is a perfect `(m+1)`-th power.
pub fn burby_invert_exact(
    mu: &[BigRational],
    m: usize,
    branch: Branch,
) -> Result<Vec<BigRational>, ClosureError> {
    let mu = branch_moments(mu, m, branch, |x| -x, |x| x.is_positive(), Zero::is_zero)?;
    let top = &mu[m - 1];
    let root = exact_root(&(int(m as i64 + 1) * top), m as u32 + 1).ok_or_else(|| {
        ClosureError::Inversion("leading root is irrational; use burby_invert".into())
    })?;
    let mut nu = vec![BigRational::zero(); m];
    nu[m - 1] = root;
    let chi = chi_polys(m)?;
    for n in (1..m).rev() {
        let c = chi[n - 1].eval(&nu)?;
        let lead = num_traits::pow(nu[m - 1].clone(), n);
        nu[n - 1] = (&mu[n - 1] - c) / lead;
    }
    Ok(nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_default, rat, Homogeneity, VarNames};

    fn parse(src: &str, m: usize) -> MultiPoly {
        MultiPoly::parse(src, &VarNames::indexed("nu", 1, m)).unwrap()
    }

    #[test]
    fn small_levels() {
        assert_eq!(burby_mu(1, 1).unwrap(), parse_default("x1^2/2", 1).unwrap());
        assert_eq!(burby_mu(2, 1).unwrap(), parse("nu1*nu2", 2));
        assert_eq!(burby_mu(2, 2).unwrap(), parse("nu2^3/3", 2));
        assert_eq!(burby_mu(3, 1).unwrap(), parse("nu1*nu3 + nu2^2/2", 3));
        assert_eq!(burby_mu(3, 2).unwrap(), parse("nu2*nu3^2", 3));
        assert_eq!(burby_mu(3, 3).unwrap(), parse("nu3^4/4", 3));
        assert_eq!(
            burby_mu(5, 3).unwrap(),
            parse("nu3*nu5^3 + 3/2*nu4^2*nu5^2", 5)
        );
        assert!(burby_mu(3, 4).is_err());
        assert!(burby_mu(3, 0).is_err());
    }

    #[test]
    fn homogeneous() {
        for m in 1..=6 {
            for n in 1..=m {
                assert_eq!(
                    burby_mu(m, n).unwrap().homogeneous_degree(),
                    Homogeneity::Degree(n as i32 + 1)
                );
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(
            burby_mu_closed(4, 2).unwrap(),
            parse("nu2*nu4^2 + nu3^2*nu4", 4)
        );
        let d = burby_mu_closed_with_density(3, 0).unwrap();
        assert_eq!(d, MultiPoly::var(4, 0));
        let d1 = burby_mu_closed_with_density(3, 1).unwrap();
        assert!(!d1.depends_on(0));
    }

    #[test]
    fn metric_is_antidiagonal() {
        let g = metric(3).unwrap();
        assert_eq!(g.matrix()[0][2], int(1));
        assert_eq!(g.matrix()[1][1], int(1));
        assert_eq!(g.signature(), (2, 1));
        assert_eq!(metric(4).unwrap().signature(), (2, 2));
    }

    #[test]
    fn mu1_is_half_quadratic_inverse() {
        for m in 1..=6 {
            assert_eq!(burby_mu(m, 1).unwrap(), metric(m).unwrap().half_quadratic_inverse());
        }
    }

    #[test]
    fn exact_inversion_round_trip() {
        // nu = (3, -1, 2) at level 3: mu_3 = 16/4 = 4, (m+1) mu_3 = 16 = 2^4
        let nu = vec![int(3), int(-1), int(2)];
        let mu: Vec<BigRational> = (1..=3).map(|n| burby_mu(3, n).unwrap().eval(&nu).unwrap()).collect();
        assert_eq!(burby_invert_exact(&mu, 3, Branch::Plus).unwrap(), nu);

        let nu = vec![rat(1, 2), int(-3)];
        let mu: Vec<BigRational> = (1..=2).map(|n| burby_mu(2, n).unwrap().eval(&nu).unwrap()).collect();
        assert_eq!(burby_invert_exact(&mu, 2, Branch::Plus).unwrap(), nu);
    }

    #[test]
    fn numeric_inversion_examples() {
        // m = 2: nu_2 = (3 mu_2)^(1/3), nu_1 = 3^(2/3) mu_1 / (3 mu_2^(1/3))
        let (mu1, mu2) = (0.7_f64, 0.4_f64);
        let nu = burby_invert(&[mu1, mu2], 2, Branch::Plus).unwrap();
        assert!((nu[1] - (3.0 * mu2).cbrt()).abs() < 1e-14);
        assert!((nu[0] - 3f64.powf(2.0 / 3.0) * mu1 / (3.0 * mu2.cbrt())).abs() < 1e-14);

        // m = 3 closed-form inverse
        let (m1, m2, m3) = (0.3_f64, 0.5_f64, 0.8_f64);
        let nu = burby_invert(&[m1, m2, m3], 3, Branch::Plus).unwrap();
        let s2 = 2f64.sqrt();
        assert!((nu[2] - s2 * m3.powf(0.25)).abs() < 1e-14);
        assert!((nu[1] - m2 / (2.0 * m3.sqrt())).abs() < 1e-14);
        assert!((nu[0] - s2 * (8.0 * m1 * m3 - m2 * m2) / (16.0 * m3.powf(1.25))).abs() < 1e-14);

        assert!(burby_invert(&[0.1, 0.2, -0.3], 3, Branch::Plus).is_err());
        assert!(burby_invert(&[0.1, 0.0], 2, Branch::Plus).is_err());
    }

    #[test]
    fn minus_branch_covers_negative_leading_moment() {
        let nu = [0.4, -0.2, 1.3];
        let mu: Vec<f64> = (1..=3)
            .map(|n| {
                let p = burby_mu(3, n).unwrap().eval_f64(&nu).unwrap();
                if n % 2 == 1 { -p } else { p }
            })
            .collect();
        assert!(mu[2] < 0.0);
        let back = burby_invert(&mu, 3, Branch::Minus).unwrap();
        for (a, b) in back.iter().zip(&nu) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(Branch::parse("minus") == Some(Branch::Minus));
    }
}
