//! Raw moments `P_n`, moments `S_n` centered on the fluid velocity `u`, and
//! moments `mu_n` centered on `psi = u - rho*mu_1`.
//!
//! The conversions are written once over [`MomentScalar`] and used with
//! `f64` (per grid point), `BigRational` (exact round trips) and
//! [`MultiPoly`] (symbolic identities), so the identity tests exercise the
//! same code the solver runs.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::bracket::HydroBracket;
use crate::closures::Closure;
use crate::poly::{binomial_int, MultiPoly};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("density must be positive")]
    NonPositiveDensity,
    #[error("density cannot be inverted symbolically")]
    NonInvertibleDensity,
    #[error("need at least {need} moments, got {got}")]
    TooFew { need: usize, got: usize },
}

/// Minimal ring-with-reciprocal interface shared by the numeric and
/// symbolic moment code.
pub trait MomentScalar: Clone {
    fn zero_like(&self) -> Self;
    fn int_like(&self, n: i64) -> Self;
    fn rat_like(&self, q: &BigRational) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn recip(&self) -> Option<Self>;
    /// `Some(true)` if known positive, `Some(false)` if known not positive,
    /// `None` when the sign is not determined (symbolic values).
    fn positive(&self) -> Option<bool>;

    fn one_like(&self) -> Self {
        self.int_like(1)
    }

    fn neg(&self) -> Self {
        self.zero_like().minus(self)
    }

    fn powi(&self, k: u32) -> Self {
        let mut acc = self.one_like();
        for _ in 0..k {
            acc = acc.times(self);
        }
        acc
    }
}

impl MomentScalar for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn int_like(&self, n: i64) -> Self {
        n as f64
    }
    fn rat_like(&self, q: &BigRational) -> Self {
        crate::poly::to_f64(q)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn recip(&self) -> Option<Self> {
        (*self != 0.0).then(|| 1.0 / self)
    }
    fn positive(&self) -> Option<bool> {
        Some(*self > 0.0)
    }
    fn powi(&self, k: u32) -> Self {
        f64::powi(*self, k as i32)
    }
}

impl MomentScalar for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn int_like(&self, n: i64) -> Self {
        BigRational::from_integer(n.into())
    }
    fn rat_like(&self, q: &BigRational) -> Self {
        q.clone()
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn recip(&self) -> Option<Self> {
        (!self.is_zero()).then(|| BigRational::recip(self))
    }
    fn positive(&self) -> Option<bool> {
        Some(self.is_positive())
    }
}

impl MomentScalar for MultiPoly {
    fn zero_like(&self) -> Self {
        MultiPoly::zero(self.nvars())
    }
    fn int_like(&self, n: i64) -> Self {
        MultiPoly::from_int(self.nvars(), n)
    }
    fn rat_like(&self, q: &BigRational) -> Self {
        MultiPoly::constant(self.nvars(), q.clone())
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn recip(&self) -> Option<Self> {
        self.inverse_monomial().ok()
    }
    fn positive(&self) -> Option<bool> {
        if self.is_zero() {
            return Some(false);
        }
        (self.total_degree() == Some(0) && self.len() == 1)
            .then(|| self.constant_term().is_positive())
    }
}

fn binom<T: MomentScalar>(like: &T, n: usize, k: usize) -> T {
    let b = binomial_int(n as u32, k as u32)
        .to_i64()
        .expect("binomial fits in i64");
    like.int_like(b)
}

fn check_density<T: MomentScalar>(rho: &T) -> Result<T, MomentError> {
    if rho.positive() == Some(false) {
        return Err(MomentError::NonPositiveDensity);
    }
    rho.recip().ok_or(MomentError::NonInvertibleDensity)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CenterKind {
    /// Centered on `u`; stores `S_2, S_3, ...` (`S_0 = 1`, `S_1 = 0`).
    Velocity,
    /// Centered on `psi`; stores `mu_1, mu_2, ...` (`mu_0 = 1`).
    Psi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CenteredMoments<T> {
    pub kind: CenterKind,
    pub rho: T,
    /// `u` for [`CenterKind::Velocity`], `psi` for [`CenterKind::Psi`].
    pub center: T,
    pub values: Vec<T>,
}

impl<T: MomentScalar> CenteredMoments<T> {
    fn first(&self) -> usize {
        match self.kind {
            CenterKind::Velocity => 2,
            CenterKind::Psi => 1,
        }
    }

    /// Highest index available.
    pub fn top(&self) -> usize {
        self.first() + self.values.len() - 1
    }

    /// Centered moment of order `n`, including the implicit low orders.
    pub fn get(&self, n: usize) -> T {
        let first = self.first();
        if n >= first {
            return self.values[n - first].clone();
        }
        match (self.kind, n) {
            (_, 0) => self.rho.one_like(),
            _ => self.rho.zero_like(),
        }
    }

    /// Number of raw moments this set determines.
    pub fn len_p(&self) -> usize {
        self.top() + 1
    }
}

/// `(rho, u, S_2..S_{N-1})` from `P_0..P_{N-1}`.
pub fn s_from_p<T: MomentScalar>(p: &[T]) -> Result<CenteredMoments<T>, MomentError> {
    if p.len() < 2 {
        return Err(MomentError::TooFew { need: 2, got: p.len() });
    }
    let rho = p[0].clone();
    let inv = check_density(&rho)?;
    let u = p[1].times(&inv);
    let mut c = centered(p, &rho, &inv, &u, 2);
    c.kind = CenterKind::Velocity;
    Ok(c)
}

/// `mu_n = rho^-(n+1) sum_k C(n,k) P_k (-psi)^(n-k)` for `n >= 1`.
pub fn mu_from_p<T: MomentScalar>(p: &[T], psi: &T) -> Result<CenteredMoments<T>, MomentError> {
    if p.len() < 2 {
        return Err(MomentError::TooFew { need: 2, got: p.len() });
    }
    let rho = p[0].clone();
    let inv = check_density(&rho)?;
    Ok(centered(p, &rho, &inv, psi, 1))
}

fn centered<T: MomentScalar>(p: &[T], rho: &T, inv: &T, c: &T, first: usize) -> CenteredMoments<T> {
    let mc = c.neg();
    let values = (first..p.len())
        .map(|n| {
            let mut acc = rho.zero_like();
            for (k, pk) in p.iter().enumerate().take(n + 1) {
                let t = binom(rho, n, k).times(pk).times(&mc.powi((n - k) as u32));
                acc = acc.plus(&t);
            }
            acc.times(&inv.powi(n as u32 + 1))
        })
        .collect();
    CenteredMoments {
        kind: CenterKind::Psi,
        rho: rho.clone(),
        center: c.clone(),
        values,
    }
}

/// Raw moments from either centered set:
/// `P_n = sum_k C(n,k) rho^(k+1) c^(n-k) M_k` with `M` the centered moments.
pub fn p_from_centered<T: MomentScalar>(c: &CenteredMoments<T>) -> Result<Vec<T>, MomentError> {
    check_density(&c.rho)?;
    let n_p = c.len_p();
    Ok((0..n_p)
        .map(|n| {
            let mut acc = c.rho.zero_like();
            for k in 0..=n {
                let mk = c.get(k);
                let t = binom(&c.rho, n, k)
                    .times(&c.rho.powi(k as u32 + 1))
                    .times(&c.center.powi((n - k) as u32))
                    .times(&mk);
                acc = acc.plus(&t);
            }
            acc
        })
        .collect())
}

pub fn p_from_s<T: MomentScalar>(rho: &T, u: &T, s: &[T]) -> Result<Vec<T>, MomentError> {
    p_from_centered(&CenteredMoments {
        kind: CenterKind::Velocity,
        rho: rho.clone(),
        center: u.clone(),
        values: s.to_vec(),
    })
}

pub fn p_from_mu<T: MomentScalar>(rho: &T, psi: &T, mu: &[T]) -> Result<Vec<T>, MomentError> {
    p_from_centered(&CenteredMoments {
        kind: CenterKind::Psi,
        rho: rho.clone(),
        center: psi.clone(),
        values: mu.to_vec(),
    })
}

/// `S_2..S_K` from `mu_1..mu_K`: `S_n = sum_k C(n,k) (-mu_1)^(n-k) mu_k`.
pub fn s_from_mu<T: MomentScalar>(mu: &[T]) -> Vec<T> {
    let Some(mu1) = mu.first() else {
        return Vec::new();
    };
    recenter(mu1, &mu1.neg(), |k| {
        if k == 0 {
            mu1.one_like()
        } else {
            mu[k - 1].clone()
        }
    }, mu.len())
}

/// `mu_2..mu_K` from `mu_1` and `S_2..S_K`: `mu_n = sum_k C(n,k) mu_1^(n-k) S_k`.
pub fn mu_from_s<T: MomentScalar>(mu1: &T, s: &[T]) -> Vec<T> {
    recenter(mu1, mu1, |k| match k {
        0 => mu1.one_like(),
        1 => mu1.zero_like(),
        _ => s[k - 2].clone(),
    }, s.len() + 1)
}

fn recenter<T: MomentScalar>(like: &T, shift: &T, m: impl Fn(usize) -> T, top: usize) -> Vec<T> {
    (2..=top)
        .map(|n| {
            let mut acc = like.zero_like();
            for k in 0..=n {
                let t = binom(like, n, k).times(&shift.powi((n - k) as u32)).times(&m(k));
                acc = acc.plus(&t);
            }
            acc
        })
        .collect()
}

/// `gamma_n = (n+1) mu_n - nu_k d(mu_n)/d(nu_k)`.
pub fn gamma_n(mu_n: &MultiPoly, n: usize) -> MultiPoly {
    &mu_n.scale(&BigRational::from_integer((n as i64 + 1).into())) - &mu_n.euler()
}

/// `alpha_nm` in the centered variables, given `mu_k` and `gamma_k` for
/// `k = 0..`: `(n+m) mu_{n+m-1} - m mu_{m-1} gamma_n - n mu_{n-1} gamma_m`.
pub fn alpha_mu(n: usize, m: usize, mu: &[MultiPoly], gamma: &[MultiPoly]) -> MultiPoly {
    let c = |k: usize| BigRational::from_integer((k as i64).into());
    let mut a = mu[n + m - 1].scale(&c(n + m));
    a = &a - &(&mu[m - 1] * &gamma[n]).scale(&c(m));
    &a - &(&mu[n - 1] * &gamma[m]).scale(&c(n))
}

/// Coefficient of `d_x nu_k` in
/// `beta_nm = n d_x mu_{n+m-1} - n d_x mu_{n-1} gamma_m - m mu_{m-1} d_x gamma_n`.
pub fn beta_mu(n: usize, m: usize, k: usize, mu: &[MultiPoly], gamma: &[MultiPoly]) -> MultiPoly {
    let c = |k: usize| BigRational::from_integer((k as i64).into());
    let d = |p: &MultiPoly| p.diff(k).expect("variable index in range");
    let mut b = d(&mu[n + m - 1]).scale(&c(n));
    b = &b - &(&d(&mu[n - 1]) * &gamma[m]).scale(&c(n));
    &b - &(&mu[m - 1] * &d(&gamma[n])).scale(&c(m))
}

/// The bracket over the fields `mu_1..mu_{N-2}`, written with the closure's
/// normal variables as parameters.
pub fn alpha_beta_in_mu(closure: &Closure) -> HydroBracket {
    let nf = closure.nfields() - 2;
    let nv = closure.nvars();
    let mu = closure.mu_all();
    let gamma = closure.gamma_all();
    let alpha = (1..=nf)
        .map(|n| (1..=nf).map(|m| alpha_mu(n, m, mu, gamma)).collect())
        .collect();
    let beta = (1..=nf)
        .map(|n| {
            (1..=nf)
                .map(|m| (0..nv).map(|k| beta_mu(n, m, k, mu, gamma)).collect())
                .collect()
        })
        .collect();
    HydroBracket::new(nv, alpha, beta).expect("consistent shapes")
}
