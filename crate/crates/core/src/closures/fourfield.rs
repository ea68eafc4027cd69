//! Four-field closure in the variables `(Gamma2, Gamma3)` with free
//! parameter `kappa`.

use num_rational::BigRational;

use super::{ClosureError, Metric};
use crate::poly::{MultiPoly, VarNames};

const MU: [&str; 5] = [
    "G2*G3",
    "G2^3 + k*G2*G3^2",
    "k*G2*G3*(3*G2^2 + k*G3^2)",
    "k*(9/5*G2^5 + 6*k*G2^3*G3^2 + k^2*G2*G3^4)",
    "k^2*G2*G3*(9*G2^4 + 10*k*G2^2*G3^2 + k^2*G3^4)",
];

const S: [&str; 4] = [
    "G2^3 + G2*(k - G2)*G3^2",
    "G2*G3*(k - G2)*(3*G2^2 + (k - 2*G2)*G3^2)",
    "9*k/5*G2^5 + 6*G2^3*(k - G2)^2*G3^2 + G2*(k - G2)*(k^2 - 3*G2*(k - G2))*G3^4",
    "9*k*G2^5*(k - G2)*G3 + 10*G2^3*(k - G2)^3*G3^3 \
     + G2*(k - G2)*(k - 2*G2)*(k^2 - 2*k*G2 + 2*G2^2)*G3^5",
];

/// `mu_1..mu_5` and `S_2..S_5` for one value of `kappa`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourFieldFamily {
    pub mu: Vec<MultiPoly>,
    pub s: Vec<MultiPoly>,
}

fn instantiate(src: &str, kappa: &BigRational) -> MultiPoly {
    let names = VarNames::new(["G2", "G3", "k"]);
    let p = MultiPoly::parse(src, &names).expect("built-in four-field polynomial parses");
    let images = [
        MultiPoly::var(2, 0),
        MultiPoly::var(2, 1),
        MultiPoly::constant(2, kappa.clone()),
    ];
    p.compose(&images).expect("three images for three variables")
}

pub fn fourfield_family(kappa: &BigRational) -> FourFieldFamily {
    FourFieldFamily {
        mu: MU.iter().map(|s| instantiate(s, kappa)).collect(),
        s: S.iter().map(|s| instantiate(s, kappa)).collect(),
    }
}

pub(super) fn names() -> VarNames {
    VarNames::new(["Gamma2", "Gamma3"])
}

pub(super) fn metric() -> Result<Metric, ClosureError> {
    let (z, o) = (super::ratio(0, 1), super::one());
    Metric::new(vec![vec![z.clone(), o.clone()], vec![o, z]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::s_from_mu;
    use crate::poly::{int, rat, Homogeneity};

    fn d(p: &MultiPoly, i: usize) -> MultiPoly {
        p.diff(i).unwrap()
    }

    #[test]
    fn parametric_s_matches_centered_mu() {
        for kappa in [int(0), int(1), rat(-2, 3), rat(7, 4)] {
            let f = fourfield_family(&kappa);
            assert_eq!(s_from_mu(&f.mu), f.s, "kappa = {kappa}");
        }
    }

    #[test]
    fn mu_recursion_and_homogeneity() {
        let f = fourfield_family(&rat(3, 5));
        for (i, p) in f.mu.iter().enumerate() {
            assert_eq!(p.homogeneous_degree(), Homogeneity::Degree(i as i32 + 2));
        }
        let mu2 = &f.mu[1];
        for n in 2..5 {
            let mn = &f.mu[n - 1];
            let rhs = (&(&d(mn, 0) * &d(mu2, 1)) + &(&d(mn, 1) * &d(mu2, 0)))
                .scale(&rat(1, n as i64 + 2));
            assert_eq!(f.mu[n], rhs, "mu_{}", n + 1);
        }
    }

    #[test]
    fn s_recursion() {
        let f = fourfield_family(&rat(-5, 2));
        let s = |n: usize| -> MultiPoly {
            match n {
                0 => MultiPoly::one(2),
                1 => MultiPoly::zero(2),
                _ => f.s[n - 2].clone(),
            }
        };
        for n in 2..5 {
            let a = (&s(2) * &s(n - 1)).scale(&rat(3 * n as i64, n as i64 + 2));
            let b = (&(&d(&s(n), 0) * &d(&s(2), 1)) + &(&d(&s(n), 1) * &d(&s(2), 0)))
                .scale(&rat(1, n as i64 + 2));
            assert_eq!(s(n + 1), &a + &b, "S_{}", n + 1);
        }
    }

    #[test]
    fn kappa_zero_truncates() {
        let f = fourfield_family(&int(0));
        assert_eq!(f.mu[1], MultiPoly::var(2, 0).pow(3));
        assert!(f.mu[2..].iter().all(MultiPoly::is_zero));
    }

    #[test]
    fn kappa_zero_is_burby_level_two() {
        // G2 = c nu2, G3 = nu1 / c with c^3 = 1/3 keeps g and mu_1
        let c = 3f64.powf(-1.0 / 3.0);
        let f = fourfield_family(&int(0));
        for nu in [[0.4, 1.3], [-0.7, 0.2], [1.1, -0.9]] {
            let gam = [c * nu[1], nu[0] / c];
            for n in 1..=5 {
                let a = f.mu[n - 1].eval_f64(&gam).unwrap();
                let b = super::super::burby_mu(2, n.min(2)).unwrap().eval_f64(&nu).unwrap();
                let b = if n <= 2 { b } else { 0.0 };
                assert!((a - b).abs() < 1e-14, "mu_{n} at {nu:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn metric_signature() {
        let g = metric().unwrap();
        assert_eq!(g.signature(), (1, 1));
        assert_eq!(g.half_quadratic_inverse(), fourfield_family(&int(2)).mu[0]);
    }
}
