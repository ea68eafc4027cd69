//! Small helpers around `BigRational`.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::PolyError;

/// Shorthand constructor for `n / d`.
///
/// # Panics
///
/// Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Nearest `f64` to `q`. Huge numerators and denominators are scaled down
/// before conversion so the result stays finite when the quotient is.
pub fn to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000);
    let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Exact rational for a finite `f64` (every finite double is a dyadic rational).
pub fn from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Binomial coefficient as a rational.
pub fn binomial(n: u32, k: u32) -> BigRational {
    BigRational::from_integer(binomial_int(n, k))
}

pub fn binomial_int(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Parses `p`, `-p`, `p/q` or a plain decimal such as `0.25` / `-1.5e-2` into
/// an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, PolyError> {
    let t = s.trim();
    let err = || PolyError::Parse(format!("invalid rational `{s}`"));
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(PolyError::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Ok(n) = t.parse::<BigInt>() {
        return Ok(BigRational::from_integer(n));
    }
    // decimal with optional exponent, parsed exactly
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(err());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits: BigInt = format!("{ip}{fp}0").parse().map_err(|_| err())?;
    let scale = exp - fp.len() as i32 - 1;
    let ten = BigInt::from(10);
    let mut q = BigRational::from_integer(digits);
    if scale >= 0 {
        q *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        q /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -q } else { q })
}

/// Exact `k`-th root of a rational when it exists (`k >= 1`). Odd roots of
/// negative numbers are negative; even roots of negative numbers do not exist.
pub fn exact_root(q: &BigRational, k: u32) -> Option<BigRational> {
    if k == 0 {
        return None;
    }
    if q.is_zero() {
        return Some(BigRational::zero());
    }
    if q.is_negative() && k % 2 == 0 {
        return None;
    }
    let root_int = |n: &BigInt| -> Option<BigInt> {
        let mag = n.magnitude().nth_root(k);
        (num_traits::pow(mag.clone(), k as usize) == *n.magnitude())
            .then(|| BigInt::from_biguint(Sign::Plus, mag))
    };
    let n = root_int(q.numer())?;
    let d = root_int(q.denom())?;
    let r = BigRational::new(n, d);
    Some(if q.is_negative() { -r } else { r })
}

/// Compact `p` or `p/q` rendering.
pub fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5e-2").unwrap(), rat(-3, 200));
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("12").unwrap(), int(12));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn exact_roots() {
        assert_eq!(exact_root(&rat(8, 27), 3), Some(rat(2, 3)));
        assert_eq!(exact_root(&rat(-8, 27), 3), Some(rat(-2, 3)));
        assert_eq!(exact_root(&rat(-4, 9), 2), None);
        assert_eq!(exact_root(&rat(2, 1), 2), None);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_int(6, 3), BigInt::from(20));
        assert_eq!(binomial_int(3, 5), BigInt::zero());
        assert_eq!(binomial_int(0, 0), BigInt::one());
    }

    #[test]
    fn huge_ratio_converts() {
        let big = BigInt::from(10).pow(400u32);
        let q = BigRational::new(big.clone() * 3, big);
        assert!((to_f64(&q) - 3.0).abs() < 1e-12);
    }
}
