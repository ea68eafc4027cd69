//! Exact sparse multivariate polynomials with rational coefficients.
//!
//! A [`MultiPoly`] is a finite sum of monomials `c * x1^e1 * ... * xk^ek`
//! stored in a map keyed by exponent vector. Exponents are signed so that
//! Laurent monomials such as `rho^-2` can appear; this is what coordinate
//! changes involving `1/rho` produce. Everything the closure families build
//! is an ordinary polynomial (see [`MultiPoly::is_polynomial`]).
//!
//! Terms are kept in graded-lexicographic order and zero coefficients are
//! never stored, so two polynomials are equal iff their term maps are equal.
//! Identity checks throughout the crate reduce to `lhs - rhs == 0`.

mod rational;
mod text;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

pub use rational::{
    binomial, binomial_int, exact_root, fmt_rational, from_f64, int, parse_rational, rat, to_f64,
};
pub use text::{parse_default, VarNames};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable count mismatch: {0} vs {1}")]
    NvarsMismatch(usize, usize),
    #[error("variable index {index} out of range for {nvars} variables")]
    VarOutOfRange { index: usize, nvars: usize },
    #[error("point has {got} coordinates, polynomial has {nvars} variables")]
    LengthMismatch { got: usize, nvars: usize },
    #[error("division by zero while evaluating a negative power")]
    DivisionByZero,
    #[error("cannot substitute a non-monomial into a negative power")]
    NotInvertible,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Exponent vector ordered graded-lexicographically: total degree first,
/// then the first differing exponent decides (larger exponent is greater).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<i32>);

impl Monomial {
    pub fn new(exps: Vec<i32>) -> Self {
        Monomial(exps)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn exponents(&self) -> &[i32] {
        &self.0
    }

    pub fn degree(&self) -> i32 {
        self.0.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of [`MultiPoly::homogeneous_degree`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Homogeneity {
    /// The zero polynomial is homogeneous of every degree.
    Any,
    Degree(i32),
    Mixed,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Self::monomial(c, Monomial::one(nvars))
    }

    pub fn from_int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, int(c))
    }

    /// The coordinate function `x_index`.
    ///
    /// # Panics
    ///
    /// Panics if `index >= nvars`.
    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars, "variable {index} out of range ({nvars})");
        let mut e = vec![0; nvars];
        e[index] = 1;
        Self::monomial(BigRational::one(), Monomial(e))
    }

    pub fn monomial(c: BigRational, m: Monomial) -> Self {
        let nvars = m.0.len();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        MultiPoly { nvars, terms }
    }

    /// Builds from `(coefficient, exponents)` pairs, merging duplicates.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (BigRational, Vec<i32>)>,
    {
        let mut p = MultiPoly::zero(nvars);
        for (c, e) in terms {
            if e.len() != nvars {
                return Err(PolyError::NvarsMismatch(e.len(), nvars));
            }
            p.add_term(Monomial(e), c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[i32]) -> BigRational {
        self.terms
            .get(&Monomial(exps.to_vec()))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn constant_term(&self) -> BigRational {
        self.coeff(&vec![0; self.nvars])
    }

    /// True when no exponent is negative.
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|m| m.0.iter().all(|&e| e >= 0))
    }

    /// Largest total degree among the terms, `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<i32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn homogeneous_degree(&self) -> Homogeneity {
        let mut degrees = self.terms.keys().map(Monomial::degree);
        match degrees.next() {
            None => Homogeneity::Any,
            Some(d) if degrees.all(|e| e == d) => Homogeneity::Degree(d),
            Some(_) => Homogeneity::Mixed,
        }
    }

    /// Does any term involve variable `index` (with a non-zero exponent)?
    pub fn depends_on(&self, index: usize) -> bool {
        self.terms.keys().any(|m| m.0.get(index).is_some_and(|&e| e != 0))
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_same(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::NvarsMismatch(self.nvars, other.nvars));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_same(other)?;
        let mut out = MultiPoly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigRational) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(self.nvars);
        }
        MultiPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut result = MultiPoly::one(self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn diff(&self, var: usize) -> Result<MultiPoly, PolyError> {
        if var >= self.nvars {
            return Err(PolyError::VarOutOfRange {
                index: var,
                nvars: self.nvars,
            });
        }
        let mut out = MultiPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[var] -= 1;
            out.add_term(Monomial(exps), c * BigRational::from_integer(BigInt::from(e)));
        }
        Ok(out)
    }

    /// Gradient `(d/dx_0, ..., d/dx_{n-1})`.
    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.nvars)
            .map(|k| self.diff(k).expect("index in range"))
            .collect()
    }

    /// Euler operator `sum_k x_k d/dx_k`; multiplies each term by its degree.
    pub fn euler(&self) -> MultiPoly {
        MultiPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() != 0)
                .map(|(m, c)| (m.clone(), c * BigRational::from_integer(m.degree().into())))
                .collect(),
        }
    }

    pub fn eval(&self, point: &[BigRational]) -> Result<BigRational, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::LengthMismatch {
                got: point.len(),
                nvars: self.nvars,
            });
        }
        let mut cache: Vec<BTreeMap<i32, BigRational>> = vec![BTreeMap::new(); self.nvars];
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if e < 0 && point[i].is_zero() {
                    return Err(PolyError::DivisionByZero);
                }
                let pw = cache[i]
                    .entry(e)
                    .or_insert_with(|| num_traits::pow::Pow::pow(&point[i], e));
                t *= &*pw;
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Floating-point evaluation. Returns an error on a length mismatch.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::LengthMismatch {
                got: point.len(),
                nvars: self.nvars,
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .zip(point)
                    .fold(to_f64(c), |acc, (&e, &x)| acc * x.powi(e))
            })
            .sum())
    }

    /// Replaces variables by polynomials. Unassigned variables map to the
    /// variable of the same index in the target space, which then must have
    /// the same number of variables as `self`.
    pub fn substitute(
        &self,
        assignments: &BTreeMap<usize, MultiPoly>,
    ) -> Result<MultiPoly, PolyError> {
        let mut target = None;
        for (&i, p) in assignments {
            if i >= self.nvars {
                return Err(PolyError::VarOutOfRange {
                    index: i,
                    nvars: self.nvars,
                });
            }
            match target {
                None => target = Some(p.nvars),
                Some(n) if n != p.nvars => return Err(PolyError::NvarsMismatch(n, p.nvars)),
                _ => {}
            }
        }
        let target = target.unwrap_or(self.nvars);
        let images: Vec<MultiPoly> = (0..self.nvars)
            .map(|i| match assignments.get(&i) {
                Some(p) => Ok(p.clone()),
                None if target == self.nvars => Ok(MultiPoly::var(target, i)),
                None => Err(PolyError::NvarsMismatch(self.nvars, target)),
            })
            .collect::<Result<_, _>>()?;
        self.compose(&images)
    }

    /// Composition with one image polynomial per variable.
    pub fn compose(&self, images: &[MultiPoly]) -> Result<MultiPoly, PolyError> {
        if images.len() != self.nvars {
            return Err(PolyError::LengthMismatch {
                got: images.len(),
                nvars: self.nvars,
            });
        }
        let target = images.first().map_or(0, |p| p.nvars);
        if let Some(p) = images.iter().find(|p| p.nvars != target) {
            return Err(PolyError::NvarsMismatch(target, p.nvars));
        }
        let mut cache: Vec<BTreeMap<i32, MultiPoly>> = vec![BTreeMap::new(); self.nvars];
        let mut out = MultiPoly::zero(target);
        for (m, c) in &self.terms {
            let mut t = MultiPoly::constant(target, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !cache[i].contains_key(&e) {
                    let pw = if e > 0 {
                        images[i].pow(e as u32)
                    } else {
                        images[i].inverse_monomial()?.pow((-e) as u32)
                    };
                    cache[i].insert(e, pw);
                }
                t = &t * &cache[i][&e];
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// `1/p` when `p` is a single term.
    pub fn inverse_monomial(&self) -> Result<MultiPoly, PolyError> {
        if self.terms.len() != 1 {
            return Err(PolyError::NotInvertible);
        }
        let (m, c) = self.terms.iter().next().expect("one term");
        Ok(MultiPoly::monomial(
            c.recip(),
            Monomial(m.0.iter().map(|e| -e).collect()),
        ))
    }

    /// Re-embeds into `nvars` variables, sending variable `i` to `map[i]`.
    pub fn reindex(&self, nvars: usize, map: &[usize]) -> Result<MultiPoly, PolyError> {
        if map.len() != self.nvars {
            return Err(PolyError::LengthMismatch {
                got: map.len(),
                nvars: self.nvars,
            });
        }
        if let Some(&bad) = map.iter().find(|&&j| j >= nvars) {
            return Err(PolyError::VarOutOfRange { index: bad, nvars });
        }
        let mut out = MultiPoly::zero(nvars);
        for (m, c) in &self.terms {
            let mut e = vec![0; nvars];
            for (i, &j) in map.iter().enumerate() {
                e[j] += m.0[i];
            }
            out.add_term(Monomial(e), c.clone());
        }
        Ok(out)
    }

    /// Maps every coefficient through `f`, dropping results that vanish.
    pub fn map_coeffs(&self, f: impl Fn(&BigRational) -> BigRational) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }
}

/// A polynomial flattened for fast repeated `f64` evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    nvars: usize,
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    pub fn new(p: &MultiPoly) -> Self {
        CompiledPoly {
            nvars: p.nvars,
            terms: p
                .terms
                .iter()
                .map(|(m, c)| {
                    let factors = m
                        .0
                        .iter()
                        .enumerate()
                        .filter(|(_, &e)| e != 0)
                        .map(|(i, &e)| (i, e))
                        .collect();
                    (to_f64(c), factors)
                })
                .collect(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Evaluates at `x`; `x` must have at least `nvars` entries.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert!(x.len() >= self.nvars);
        self.terms
            .iter()
            .map(|(c, f)| f.iter().fold(*c, |acc, &(i, e)| acc * x[i].powi(e)))
            .sum()
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPoly[{}]({})", self.nvars, self)
    }
}

// Operator sugar. These panic on a variable-count mismatch; the checked
// methods above return errors instead.
impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_add(rhs).expect("nvars mismatch in +")
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_sub(rhs).expect("nvars mismatch in -")
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_mul(rhs).expect("nvars mismatch in *")
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-BigRational::one())
    }
}

impl Add for MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: MultiPoly) -> MultiPoly {
        &self + &rhs
    }
}

impl Sub for MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: MultiPoly) -> MultiPoly {
        &self - &rhs
    }
}

impl Mul for MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: MultiPoly) -> MultiPoly {
        &self * &rhs
    }
}

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        -&self
    }
}

/// Sum of an iterator of polynomials over `nvars` variables.
pub fn sum<'a>(nvars: usize, it: impl IntoIterator<Item = &'a MultiPoly>) -> MultiPoly {
    it.into_iter()
        .fold(MultiPoly::zero(nvars), |acc, p| &acc + p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(n, i)
    }

    #[test]
    fn additive_inverse_is_zero() {
        let p = x(1, 0);
        let q = -&p;
        assert!((&p + &q).is_zero());
    }

    #[test]
    fn like_terms_merge() {
        let p = &x(2, 0) * &x(2, 1);
        let s = &p + &p;
        assert_eq!(s.len(), 1);
        assert_eq!(s.coeff(&[1, 1]), int(2));
    }

    #[test]
    fn mismatched_nvars_is_an_error() {
        assert_eq!(
            x(2, 0).try_add(&x(3, 0)),
            Err(PolyError::NvarsMismatch(2, 3))
        );
        assert!(x(2, 0).try_mul(&x(1, 0)).is_err());
        assert!(x(2, 0).diff(2).is_err());
        assert!(x(2, 0).eval(&[int(1)]).is_err());
    }

    #[test]
    fn square_of_sum() {
        let s = &x(2, 0) + &x(2, 1);
        let sq = s.pow(2);
        let expect = MultiPoly::from_terms(
            2,
            [(int(1), vec![2, 0]), (int(2), vec![1, 1]), (int(1), vec![0, 2])],
        )
        .unwrap();
        assert_eq!(sq, expect);
    }

    #[test]
    fn derivatives() {
        // d(nu3^4/4)/d nu3 = nu3^3
        let p = x(3, 2).pow(4).scale(&rat(1, 4));
        assert_eq!(p.diff(2).unwrap(), x(3, 2).pow(3));
        assert!(MultiPoly::from_int(3, 7).diff(1).unwrap().is_zero());
        // d(nu2 nu3^2)/d nu2 = nu3^2
        let q = &x(3, 1) * &x(3, 2).pow(2);
        assert_eq!(q.diff(1).unwrap(), x(3, 2).pow(2));
    }

    #[test]
    fn evaluation() {
        let p = &(&x(3, 0) * &x(3, 2)) + &x(3, 1).pow(2).scale(&rat(1, 2));
        assert_eq!(p.eval(&[int(1), int(2), int(3)]).unwrap(), int(5));
        let q = x(3, 2).pow(4).scale(&rat(1, 4));
        assert_eq!(q.eval(&[int(0), int(0), int(2)]).unwrap(), int(4));
        let c = &MultiPoly::from_int(2, 3) + &x(2, 1);
        assert_eq!(c.eval(&[int(0), int(0)]).unwrap(), int(3));
    }

    #[test]
    fn homogeneity() {
        let p = &x(3, 1) * &x(3, 2).pow(2);
        assert_eq!(p.homogeneous_degree(), Homogeneity::Degree(3));
        let q = &x(1, 0) + &x(1, 0).pow(2);
        assert_eq!(q.homogeneous_degree(), Homogeneity::Mixed);
        assert_eq!(MultiPoly::zero(2).homogeneous_degree(), Homogeneity::Any);
    }

    #[test]
    fn substitution() {
        // mu1 = nu1 nu2 with nu2 -> t^2 gives nu1 t^2 (variables (nu1, t))
        let mu1 = &x(2, 0) * &x(2, 1);
        let mut a = BTreeMap::new();
        a.insert(1, x(2, 1).pow(2));
        let r = mu1.substitute(&a).unwrap();
        assert_eq!(r, &x(2, 0) * &x(2, 1).pow(2));
        // identity map
        assert_eq!(mu1.substitute(&BTreeMap::new()).unwrap(), mu1);
    }

    #[test]
    fn laurent_terms() {
        let rho = x(2, 0);
        let inv = rho.inverse_monomial().unwrap();
        assert!((&(&rho * &inv) - &MultiPoly::one(2)).is_zero());
        assert!(!inv.is_polynomial());
        assert_eq!(inv.diff(0).unwrap(), rho.pow(2).inverse_monomial().unwrap().scale(&int(-1)));
        assert_eq!(inv.eval(&[int(0), int(1)]), Err(PolyError::DivisionByZero));
        assert!((&x(2, 0) + &x(2, 1)).inverse_monomial().is_err());
    }

    #[test]
    fn euler_operator() {
        let p = &x(2, 0).pow(3) + &x(2, 1);
        let e = p.euler();
        assert_eq!(e, &x(2, 0).pow(3).scale(&int(3)) + &x(2, 1));
    }

    #[test]
    fn grlex_order() {
        let a = Monomial::new(vec![2, 0]);
        let b = Monomial::new(vec![0, 3]);
        let c = Monomial::new(vec![1, 1]);
        assert!(a < b);
        assert!(c < a);
    }
}
