//! Exact rationals and their textual forms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::SymError;

/// Arbitrary precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"3"`, `"-7/10"`, `"0.0358"`, `"1.5e-3"` into an exact rational.
/// Binary floating point never takes part.
pub fn parse_rational(text: &str) -> Result<Rational, SymError> {
    let s = text.trim();
    let bad = || SymError::BadNumber(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        return Ok(n / d);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = body[i + 1..].parse().map_err(|_| bad())?;
            (&body[..i], e)
        }
        None => (body, 0),
    };
    let (ip, fp) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{ip}{fp}");
    let mut value = Rational::from_integer(digits.parse::<BigInt>().map_err(|_| bad())?);
    let shift = exp - fp.len() as i64;
    let ten = Rational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num_traits::pow(ten, shift as usize);
    } else {
        value /= num_traits::pow(ten, (-shift) as usize);
    }
    Ok(if neg { -value } else { value })
}

/// `p/q` form, or just `p` for integers.
pub fn render_exact(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Decimal rendering with `precision` significant fractional digits: for
/// |q| >= 1 that many digits after the point, for |q| < 1 that many digits
/// after the leading fractional zeros. Ties round half to even. Trailing
/// zeros are dropped.
pub fn render_decimal(q: &Rational, precision: usize) -> String {
    if q.is_zero() {
        return "0".to_string();
    }
    let abs = q.abs();
    let mut digits = precision;
    if abs < Rational::one() {
        // leading zeros after the decimal point
        let ten = int(10);
        let mut probe = &abs * &ten;
        while probe < Rational::one() {
            probe *= &ten;
            digits += 1;
        }
    }
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = &abs * Rational::from_integer(scale.clone());
    let floor = scaled.floor().to_integer();
    let frac = scaled - Rational::from_integer(floor.clone());
    let half = rat(1, 2);
    let rounded = if frac > half || (frac == half && floor.is_odd()) {
        floor + BigInt::one()
    } else {
        floor
    };
    let (ip, fp) = rounded.div_rem(&scale);
    let mut out = String::new();
    if q.is_negative() && !rounded_is_zero(&ip, &fp) {
        out.push('-');
    }
    out.push_str(&ip.to_string());
    if digits > 0 {
        let mut f = fp.to_string();
        while f.len() < digits {
            f.insert(0, '0');
        }
        let trimmed = f.trim_end_matches('0');
        if !trimmed.is_empty() {
            out.push('.');
            out.push_str(trimmed);
        }
    }
    out
}

fn rounded_is_zero(ip: &BigInt, fp: &BigInt) -> bool {
    ip.is_zero() && fp.is_zero()
}

/// Nearest f64, for reporting and Monte Carlo comparisons only.
pub fn to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_and_fraction_forms() {
        assert_eq!(parse_rational("7/10").unwrap(), rat(7, 10));
        assert_eq!(parse_rational("-0.0358").unwrap(), rat(-358, 10000));
        assert_eq!(parse_rational("1.5e-3").unwrap(), rat(3, 2000));
        assert_eq!(parse_rational("12").unwrap(), int(12));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn decimal_rendering_counts_significant_fractional_digits() {
        assert_eq!(render_decimal(&rat(20000, 11), 4), "1818.1818");
        assert_eq!(render_decimal(&rat(1, 2), 6), "0.5");
        assert_eq!(render_decimal(&rat(1, 3), 6), "0.333333");
        assert_eq!(render_decimal(&rat(2, 3), 6), "0.666667");
        assert_eq!(render_decimal(&rat(1, 30), 6), "0.0333333");
        assert_eq!(render_decimal(&rat(-5, 2), 0), "-2");
        assert_eq!(render_decimal(&rat(7, 2), 0), "4");
        assert_eq!(render_decimal(&int(0), 6), "0");
    }

    #[test]
    fn half_to_even_on_exact_ties() {
        assert_eq!(render_decimal(&rat(125, 1000), 2), "0.12");
        assert_eq!(render_decimal(&rat(135, 1000), 2), "0.14");
        assert_eq!(render_decimal(&rat(-125, 1000), 2), "-0.12");
    }

    #[test]
    fn exact_rendering() {
        assert_eq!(render_exact(&rat(5, 6)), "5/6");
        assert_eq!(render_exact(&rat(-4, 2)), "-2");
    }
}
