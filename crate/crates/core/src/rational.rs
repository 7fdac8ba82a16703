//! Exact rational helpers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // huge numerator/denominator: divide after scaling down
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Exact conversion of a finite float.
pub fn from_f64(v: f64) -> Rat {
    Rat::from_float(v).expect("finite float")
}

/// `⌈a / b⌉` for `b > 0`.
pub fn ceil_div(a: &Rat, b: &Rat) -> BigInt {
    (a / b).ceil().to_integer()
}

/// `⌊a / b⌋` for `b > 0`.
pub fn floor_div(a: &Rat, b: &Rat) -> BigInt {
    (a / b).floor().to_integer()
}

/// Parses `"12"`, `"-0.25"`, `"1.5e3"` or `"3/4"` exactly.
pub fn parse_rat(text: &str) -> Option<Rat> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = digits.split_once('.').unwrap_or((digits, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{ip}{fp}0").parse().ok()?;
    let all = all / BigInt::from(10);
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Rat::from_integer(all);
    if scale >= 0 {
        r *= Rat::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rat::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

/// Decimal text when the expansion terminates, `p/q` otherwise.
pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut d = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scaled = r * Rat::from_integer(num_traits::pow(BigInt::from(10), places));
    let digits = scaled.to_integer().abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (ip, fp) = digits.split_at(digits.len() - places);
    let sign = if r.is_negative() { "-" } else { "" };
    format!("{sign}{ip}.{fp}")
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}
