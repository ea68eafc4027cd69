//! Waterbag closure.
//!
//! Heights `a_1..a_N` (summing to zero) are jumps of a piecewise constant
//! distribution at the contour velocities `v_1..v_N`; `sigma_k` is the
//! partial sum `a_1 + .. + a_k`, the level of the k-th bag. With
//! `D_l = (nu_l - nu_{l-1}) / sigma_l`, `nu_0 = 0`, `nu_{N-1} = 1` and
//! `T_k = 1/(2 a_N) + sum_{l >= k} D_l`,
//!
//! `mu_n = (-1)^n / (n+1) * (sum_{k<N} a_k T_k^(n+1) + 1 / (2^(n+1) a_N^n))`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{ClosureError, Metric};
use crate::moments::MomentScalar;
use crate::poly::{to_f64, MultiPoly};

fn validate(a: &[BigRational]) -> Result<Vec<BigRational>, ClosureError> {
    let n = a.len();
    if n < 2 {
        return Err(ClosureError::InvalidParams("waterbag needs at least 2 heights".into()));
    }
    if a.iter().any(Zero::is_zero) {
        return Err(ClosureError::InvalidParams("waterbag heights must be nonzero".into()));
    }
    let mut sigma = Vec::with_capacity(n);
    let mut acc = BigRational::zero();
    for x in a {
        acc += x;
        sigma.push(acc.clone());
    }
    if !sigma[n - 1].is_zero() {
        return Err(ClosureError::InvalidParams("waterbag heights must sum to zero".into()));
    }
    if let Some(k) = sigma[..n - 1].iter().position(Zero::is_zero) {
        return Err(ClosureError::InvalidParams(format!(
            "degenerate heights: partial sum sigma_{} vanishes",
            k + 1
        )));
    }
    Ok(sigma)
}

/// Partial sums `sigma_1..sigma_N` after validating the heights.
pub fn waterbag_partial_sums(a: &[BigRational]) -> Result<Vec<BigRational>, ClosureError> {
    validate(a)
}

/// `Lambda = -1 / (2 a_N)`.
pub fn waterbag_lambda(a: &[BigRational]) -> BigRational {
    -(BigRational::from_integer(2.into()) * a.last().expect("nonempty heights")).recip()
}

/// `D_1..D_{N-1}` as polynomials in `nu_1..nu_{N-2}`.
fn increments(a: &[BigRational], sigma: &[BigRational]) -> Vec<MultiPoly> {
    let n = a.len();
    let nv = n - 2;
    let nu = |l: usize| -> MultiPoly {
        if l == 0 {
            MultiPoly::zero(nv)
        } else if l == n - 1 {
            MultiPoly::one(nv)
        } else {
            MultiPoly::var(nv, l - 1)
        }
    };
    (1..n)
        .map(|l| (&nu(l) - &nu(l - 1)).scale(&sigma[l - 1].recip()))
        .collect()
}

pub fn waterbag_mu(a: &[BigRational], n: usize) -> Result<MultiPoly, ClosureError> {
    let sigma = validate(a)?;
    let big_n = a.len();
    let nv = big_n - 2;
    let d = increments(a, &sigma);
    let a_n = &a[big_n - 1];
    let two = BigRational::from_integer(2.into());
    let base = MultiPoly::constant(nv, (&two * a_n).recip());
    let mut acc = MultiPoly::zero(nv);
    let mut tail = MultiPoly::zero(nv);
    for k in (1..big_n).rev() {
        tail = &tail + &d[k - 1];
        let t = &base + &tail;
        acc = &acc + &t.pow(n as u32 + 1).scale(&a[k - 1]);
    }
    let c = (num_traits::pow(two, n + 1) * num_traits::pow(a_n.clone(), n)).recip();
    acc = &acc + &MultiPoly::constant(nv, c);
    let sign = if n % 2 == 0 { BigRational::one() } else { -BigRational::one() };
    Ok(acc.scale(&(sign / BigRational::from_integer((n as i64 + 1).into()))))
}

/// Diagonal metric `g_kk = -sigma_k sigma_{k+1} / a_{k+1}`.
pub fn waterbag_metric(a: &[BigRational]) -> Result<Metric, ClosureError> {
    let sigma = validate(a)?;
    let nv = a.len() - 2;
    let d: Vec<BigRational> = (1..=nv)
        .map(|k| -(&sigma[k - 1] * &sigma[k]) / &a[k])
        .collect();
    Metric::new(crate::linalg::diagonal(&d))
}

/// `(rho, u, nu_1..nu_{N-2})` for one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct WaterbagNormal<T> {
    pub rho: T,
    pub u: T,
    pub nu: Vec<T>,
}

/// Contour velocities to normal variables.
pub fn waterbag_to_normal<T: MomentScalar>(
    a: &[BigRational],
    v: &[T],
) -> Result<WaterbagNormal<T>, ClosureError> {
    let sigma = validate(a)?;
    let n = a.len();
    if v.len() != n {
        return Err(ClosureError::InvalidParams(format!(
            "expected {n} contour velocities, got {}",
            v.len()
        )));
    }
    let like = &v[0];
    let mut rho = like.zero_like();
    let mut e2 = like.zero_like();
    for (ak, vk) in a.iter().zip(v) {
        let ak = like.rat_like(ak);
        rho = rho.minus(&ak.times(vk));
        e2 = e2.minus(&ak.times(vk).times(vk));
    }
    if rho.positive() == Some(false) {
        return Err(ClosureError::NonPositiveDensity);
    }
    let inv = rho.recip().ok_or(ClosureError::NonPositiveDensity)?;
    let u = e2.times(&inv).times(&like.int_like(2).recip().expect("2 invertible"));
    let mut nu = Vec::with_capacity(n - 2);
    let mut acc = like.zero_like();
    for l in 1..=n - 2 {
        acc = acc.plus(&like.rat_like(&sigma[l - 1]).times(&v[l].minus(&v[l - 1])));
        nu.push(acc.times(&inv));
    }
    Ok(WaterbagNormal { rho, u, nu })
}

/// Inverse map back to contour velocities.
pub fn waterbag_from_normal<T: MomentScalar>(
    a: &[BigRational],
    s: &WaterbagNormal<T>,
) -> Result<Vec<T>, ClosureError> {
    let sigma = validate(a)?;
    let n = a.len();
    let like = &s.rho;
    let nu = |l: usize| -> T {
        if l == 0 {
            like.zero_like()
        } else if l == n - 1 {
            like.one_like()
        } else {
            s.nu[l - 1].clone()
        }
    };
    // cumulative sums of D_l
    let mut cum = vec![like.zero_like()];
    for l in 1..n {
        let d = nu(l).minus(&nu(l - 1)).times(&like.rat_like(&sigma[l - 1].recip()));
        let next = cum[l - 1].plus(&d);
        cum.push(next);
    }
    let mut quad = like.zero_like();
    for k in 2..=n {
        quad = quad.plus(&like.rat_like(&a[k - 1]).times(&cum[k - 1]).times(&cum[k - 1]));
    }
    let half = like.int_like(2).recip().expect("2 invertible");
    let v1 = s.u.plus(&s.rho.times(&half).times(&quad));
    Ok((0..n).map(|k| v1.plus(&s.rho.times(&cum[k]))).collect())
}

/// `psi = v_N + rho / (2 a_N)`, equivalently
/// `v_N / 2 - (1 / (2 a_N)) sum_{n<N} a_n v_n`.
pub fn waterbag_psi<T: MomentScalar>(a: &[BigRational], v: &[T]) -> Result<T, ClosureError> {
    let s = waterbag_to_normal(a, v)?;
    let two_an = BigRational::from_integer(2.into()) * a.last().expect("nonempty");
    let c = s.rho.rat_like(&two_an.recip());
    Ok(v[v.len() - 1].plus(&s.rho.times(&c)))
}

pub(super) fn admissible(a: &[BigRational], nu: &[f64]) -> Result<(), ClosureError> {
    let sigma = validate(a)?;
    let n = a.len();
    let nu_at = |l: usize| {
        if l == 0 {
            0.0
        } else if l == n - 1 {
            1.0
        } else {
            nu[l - 1]
        }
    };
    let ok = (1..n).all(|l| (nu_at(l) - nu_at(l - 1)) / to_f64(&sigma[l - 1]) > 0.0);
    if ok && nu.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ClosureError::Domain(
            "waterbag contours must stay ordered (v_1 < v_2 < ... < v_N)".into(),
        ))
    }
}

/// A point with all increments `D_l` positive, when one exists.
pub(super) fn seed(a: &[BigRational]) -> Vec<f64> {
    let Ok(sigma) = validate(a) else {
        return vec![0.5; a.len().saturating_sub(2)];
    };
    let n = a.len();
    // weights favour positive bags so that sum sigma_l D_l = 1 with D_l > 0
    let w: Vec<f64> = sigma[..n - 1]
        .iter()
        .map(|s| if s.is_positive() { 1.0 } else { 1e-3 })
        .collect();
    let total: f64 = sigma[..n - 1]
        .iter()
        .zip(&w)
        .map(|(s, w)| to_f64(s) * w)
        .sum();
    let scale = if total > 0.0 { 1.0 / total } else { 1.0 };
    let mut acc = 0.0;
    (0..n - 2)
        .map(|l| {
            acc += to_f64(&sigma[l]) * w[l] * scale;
            acc
        })
        .collect()
}
