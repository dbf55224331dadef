//! Exact rational scalars and their string form (`"p/q"`).

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Scalar = BigRational;

pub fn int(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Scalar {
    Scalar::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> Scalar {
    Scalar::zero()
}

pub fn one() -> Scalar {
    Scalar::one()
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"-0.25"`.
pub fn parse(s: &str) -> Result<Scalar> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| Error::Parse(format!("bad numerator in `{t}`")))?;
        let q: BigInt = q.trim().parse().map_err(|_| Error::Parse(format!("bad denominator in `{t}`")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{t}`")));
        }
        return Ok(Scalar::new(p, q));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let num: BigInt = digits.parse().map_err(|_| Error::Parse(format!("bad decimal `{t}`")))?;
        let den = num::pow(BigInt::from(10), frac.len());
        let v = Scalar::new(num, den);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = t.parse().map_err(|_| Error::Parse(format!("bad integer `{t}`")))?;
    Ok(Scalar::from_integer(n))
}

pub fn format(x: &Scalar) -> String {
    x.to_string()
}

pub fn to_f64(x: &Scalar) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn max_abs<'a>(it: impl IntoIterator<Item = &'a Scalar>) -> Scalar {
    it.into_iter().map(|x| x.abs()).max().unwrap_or_else(zero)
}

/// Parses a comma separated coefficient list, e.g. `0,0,1` or `1/2,-1,0`.
pub fn parse_list(s: &str) -> Result<Vec<Scalar>> {
    s.split(',').map(parse).collect()
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
