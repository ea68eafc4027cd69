//! Multi-delta (multi-stream) closure.
//!
//! Normal variables are `(xi_2..xi_M, eta_2..eta_M)` with
//! `xi_k = a_k / rho` and `eta_k = (v_k - v_1) / rho`; then
//! `mu_n = sum_k xi_k eta_k^n`.

use num_rational::BigRational;
use num_traits::One;

use super::{ClosureError, Metric};
use crate::moments::MomentScalar;
use crate::poly::MultiPoly;

/// `mu_n` for `M` streams over `2(M-1)` variables.
pub fn multidelta_mu(streams: usize, n: usize) -> Result<MultiPoly, ClosureError> {
    if streams < 2 {
        return Err(ClosureError::InvalidParams("multidelta needs M >= 2".into()));
    }
    if n == 0 {
        return Err(ClosureError::OutOfRange {
            n,
            range: "n >= 1".into(),
        });
    }
    let k = streams - 1;
    let nv = 2 * k;
    let mut acc = MultiPoly::zero(nv);
    for i in 0..k {
        let t = &MultiPoly::var(nv, i) * &MultiPoly::var(nv, k + i).pow(n as u32);
        acc = &acc + &t;
    }
    Ok(acc)
}

pub(super) fn metric(streams: usize) -> Result<Metric, ClosureError> {
    let k = streams - 1;
    let mut g = crate::linalg::zeros(2 * k, 2 * k);
    for i in 0..k {
        g[i][k + i] = BigRational::one();
        g[k + i][i] = BigRational::one();
    }
    Metric::new(g)
}

/// `(rho, u, xi, eta)` for one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiDeltaNormal<T> {
    pub rho: T,
    pub u: T,
    pub xi: Vec<T>,
    pub eta: Vec<T>,
}

impl<T: Clone> MultiDeltaNormal<T> {
    /// `(xi, eta)` concatenated, the closure's variable order.
    pub fn nu(&self) -> Vec<T> {
        self.xi.iter().chain(&self.eta).cloned().collect()
    }
}

/// Stream amplitudes and velocities to normal variables.
pub fn multidelta_to_normal<T: MomentScalar>(
    a: &[T],
    v: &[T],
) -> Result<MultiDeltaNormal<T>, ClosureError> {
    if a.len() != v.len() || a.len() < 2 {
        return Err(ClosureError::InvalidParams(
            "need matching a and v with at least two streams".into(),
        ));
    }
    let mut rho = a[0].zero_like();
    let mut mom = a[0].zero_like();
    for (ak, vk) in a.iter().zip(v) {
        rho = rho.plus(ak);
        mom = mom.plus(&ak.times(vk));
    }
    if rho.positive() == Some(false) {
        return Err(ClosureError::NonPositiveDensity);
    }
    let inv = rho.recip().ok_or(ClosureError::NonPositiveDensity)?;
    let u = mom.times(&inv);
    let xi = a[1..].iter().map(|ak| ak.times(&inv)).collect();
    let eta = v[1..].iter().map(|vk| vk.minus(&v[0]).times(&inv)).collect();
    Ok(MultiDeltaNormal { rho, u, xi, eta })
}

/// Inverse of [`multidelta_to_normal`].
pub fn multidelta_from_normal<T: MomentScalar>(s: &MultiDeltaNormal<T>) -> (Vec<T>, Vec<T>) {
    let one = s.rho.one_like();
    let mut sum_xi = s.rho.zero_like();
    let mut mu1 = s.rho.zero_like();
    for (x, e) in s.xi.iter().zip(&s.eta) {
        sum_xi = sum_xi.plus(x);
        mu1 = mu1.plus(&x.times(e));
    }
    let a1 = s.rho.times(&one.minus(&sum_xi));
    let v1 = s.u.minus(&s.rho.times(&mu1));
    let mut a = vec![a1];
    let mut v = vec![v1.clone()];
    for (x, e) in s.xi.iter().zip(&s.eta) {
        a.push(s.rho.times(x));
        v.push(v1.plus(&s.rho.times(e)));
    }
    (a, v)
}

pub(super) fn admissible(streams: usize, nu: &[f64]) -> Result<(), ClosureError> {
    let k = streams - 1;
    let xi = &nu[..k];
    let total: f64 = xi.iter().sum();
    if xi.iter().all(|&x| x > 0.0) && total < 1.0 && nu.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ClosureError::Domain(
            "multidelta needs xi_k > 0 and sum xi_k < 1".into(),
        ))
    }
}

pub(super) fn seed(streams: usize) -> Vec<f64> {
    let k = streams - 1;
    let xi = 1.0 / (streams as f64);
    (0..2 * k)
        .map(|i| if i < k { xi } else { (i - k + 1) as f64 })
        .collect()
}
