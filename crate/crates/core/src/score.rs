//! Exact score arithmetic.
//!
//! Point values are decimals with at most six fractional digits, held as
//! reduced rationals so totals, percentages and CSV round-trips never pick up
//! binary floating point error. Statistics convert to `f64` at the boundary.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Every score denominator divides this value (six decimal places).
pub const SCORE_SCALE: i64 = 1_000_000;

/// Largest magnitude accepted for a single parsed score.
pub const SCORE_LIMIT: i64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("invalid score {0:?}: expected a decimal with at most 6 fractional digits")]
    Invalid(String),
    #[error("score {0} is out of range (|x| <= {SCORE_LIMIT})")]
    OutOfRange(String),
    #[error("score denominator {0} is not a divisor of {SCORE_SCALE}")]
    Denominator(i64),
}

/// An exact, decimal-representable score value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Score(Ratio<i64>);

impl Score {
    pub const ZERO: Score = Score(Ratio::new_raw(0, 1));

    pub fn from_integer(value: i64) -> Score {
        Score(Ratio::from_integer(value))
    }

    /// Builds a score from a numerator/denominator pair, as stored on disk.
    pub fn new(numer: i64, denom: i64) -> Result<Score, ScoreError> {
        if denom <= 0 {
            return Err(ScoreError::Denominator(denom));
        }
        let ratio = Ratio::new(numer, denom);
        if SCORE_SCALE % ratio.denom() != 0 {
            return Err(ScoreError::Denominator(*ratio.denom()));
        }
        Ok(Score(ratio))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn is_negative(&self) -> bool {
        self.numer() < 0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        // numer / denom with denom | 10^6 is within one ulp of the decimal.
        self.numer() as f64 / self.denom() as f64
    }

    pub fn checked_add(&self, other: &Score) -> Option<Score> {
        self.0.checked_add(&other.0).map(Score)
    }

    /// The score as an integer count of millionths.
    pub fn to_micros(&self) -> i128 {
        self.numer() as i128 * (SCORE_SCALE / self.denom()) as i128
    }
}

impl Add for Score {
    type Output = Score;

    fn add(self, rhs: Score) -> Score {
        self.checked_add(&rhs).expect("score sum overflowed i64")
    }
}

impl Sum for Score {
    fn sum<I: Iterator<Item = Score>>(iter: I) -> Score {
        iter.fold(Score::ZERO, |acc, s| acc + s)
    }
}

impl<'a> Sum<&'a Score> for Score {
    fn sum<I: Iterator<Item = &'a Score>>(iter: I) -> Score {
        iter.copied().sum()
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl From<i64> for Score {
    fn from(value: i64) -> Self {
        Score::from_integer(value)
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let micros = self.to_micros();
        let sign = if micros < 0 { "-" } else { "" };
        let micros = micros.unsigned_abs();
        let whole = micros / SCORE_SCALE as u128;
        let frac = micros % SCORE_SCALE as u128;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl fmt::Debug for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Score({self})")
    }
}

impl FromStr for Score {
    type Err = ScoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || ScoreError::Invalid(s.to_string());
        let text = s.trim();
        if let Some((n, d)) = text.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| invalid())?;
            let d: i64 = d.trim().parse().map_err(|_| invalid())?;
            let score = Score::new(n, d)?;
            return check_range(score, s);
        }
        let (negative, unsigned) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (whole, frac) = match unsigned.split_once('.') {
            Some((w, f)) => (w, f),
            None => (unsigned, ""),
        };
        let all_digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if (whole.is_empty() && frac.is_empty())
            || !all_digits(whole)
            || !all_digits(frac)
            || frac.len() > 6
            || (unsigned.contains('.') && frac.is_empty())
        {
            return Err(invalid());
        }
        let whole = whole.trim_start_matches('0');
        if whole.len() > 10 {
            return Err(ScoreError::OutOfRange(s.to_string()));
        }
        let whole: i64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| invalid())? };
        let frac_value: i64 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<6}").parse().map_err(|_| invalid())?
        };
        let mut micros = whole * SCORE_SCALE + frac_value;
        if negative {
            micros = -micros;
        }
        check_range(Score::new(micros, SCORE_SCALE)?, s)
    }
}

fn check_range(score: Score, raw: &str) -> Result<Score, ScoreError> {
    if score.0.abs() > Ratio::from_integer(SCORE_LIMIT) {
        Err(ScoreError::OutOfRange(raw.to_string()))
    } else {
        Ok(score)
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ScoreVisitor;

        impl Visitor<'_> for ScoreVisitor {
            type Value = Score;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal score as a string or number")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Score, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Score, E> {
                check_range(Score::from_integer(v), &v.to_string()).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Score, E> {
                let v = i64::try_from(v).map_err(|_| E::custom("score out of range"))?;
                self.visit_i64(v)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Score, E> {
                // Shortest round-trip rendering recovers the written decimal.
                if !v.is_finite() {
                    return Err(E::custom("score must be finite"));
                }
                self.visit_str(&format!("{v}"))
            }
        }

        deserializer.deserialize_any(ScoreVisitor)
    }
}

/// An exact percentage, `100 * part / whole`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Percentage(Ratio<i128>);

impl Percentage {
    /// `None` when `whole` is zero.
    pub fn of(part: Score, whole: Score) -> Option<Percentage> {
        if whole.is_zero() {
            return None;
        }
        let part = Ratio::new(part.numer() as i128, part.denom() as i128);
        let whole = Ratio::new(whole.numer() as i128, whole.denom() as i128);
        Some(Percentage(part * Ratio::from_integer(100) / whole))
    }

    pub fn ratio(&self) -> Ratio<i128> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Two decimal places, halves rounded away from zero.
    pub fn render(&self) -> String {
        let n = *self.0.numer();
        let d = *self.0.denom();
        let sign = if n < 0 { "-" } else { "" };
        let n = n.unsigned_abs();
        let d = d.unsigned_abs();
        let hundredths = (2 * 100 * n + d) / (2 * d);
        format!("{sign}{}.{:02}", hundredths / 100, hundredths % 100)
    }
}

impl fmt::Display for Percentage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Debug for Percentage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Percentage({}/{})", self.0.numer(), self.0.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(text: &str) -> Score {
        text.parse().unwrap()
    }

    #[test]
    fn parses_integers_and_decimals() {
        assert_eq!(s("3"), Score::from_integer(3));
        assert_eq!(s("2.5"), Score::new(5, 2).unwrap());
        assert_eq!(s("0.000001"), Score::new(1, 1_000_000).unwrap());
        assert_eq!(s("-1.25"), Score::new(-5, 4).unwrap());
        assert_eq!(s("007"), Score::from_integer(7));
        assert_eq!(s(".5"), Score::new(1, 2).unwrap());
        assert_eq!(s("3/4"), Score::new(3, 4).unwrap());
    }

    #[test]
    fn rejects_malformed_text() {
        for bad in ["", ".", "1.", "abc", "1.2.3", "1e3", "0.0000001", "1/3", "1/0", "--1"] {
            assert!(bad.parse::<Score>().is_err(), "{bad:?} should not parse");
        }
        assert!(matches!("99999999999".parse::<Score>(), Err(ScoreError::OutOfRange(_))));
    }

    #[test]
    fn displays_shortest_exact_decimal() {
        assert_eq!(s("2.50").to_string(), "2.5");
        assert_eq!(s("4").to_string(), "4");
        assert_eq!(s("-0.125").to_string(), "-0.125");
        assert_eq!(Score::new(1, 8).unwrap().to_string(), "0.125");
    }

    #[test]
    fn percentage_rounds_half_up() {
        let p = Percentage::of(Score::from_integer(3), Score::from_integer(4)).unwrap();
        assert_eq!(p.render(), "75.00");
        let p = Percentage::of(Score::from_integer(2), Score::from_integer(3)).unwrap();
        assert_eq!(p.render(), "66.67");
        let p = Percentage::of(Score::from_integer(1), Score::from_integer(3)).unwrap();
        assert_eq!(p.render(), "33.33");
        // 1/8 of 100 = 12.5 exactly -> 12.50; 1/800 of 100 = 0.125 -> 0.13
        let p = Percentage::of(Score::from_integer(1), Score::from_integer(800)).unwrap();
        assert_eq!(p.render(), "0.13");
        assert!(Percentage::of(Score::from_integer(1), Score::ZERO).is_none());
    }

    #[test]
    fn serde_uses_decimal_strings() {
        let v = serde_json::to_string(&s("2.5")).unwrap();
        assert_eq!(v, "\"2.5\"");
        let back: Score = serde_json::from_str("\"2.5\"").unwrap();
        assert_eq!(back, s("2.5"));
        let from_int: Score = serde_json::from_str("4").unwrap();
        assert_eq!(from_int, Score::from_integer(4));
        let from_float: Score = serde_json::from_str("0.1").unwrap();
        assert_eq!(from_float, Score::new(1, 10).unwrap());
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(micros in -SCORE_LIMIT * SCORE_SCALE..=SCORE_LIMIT * SCORE_SCALE) {
            let score = Score::new(micros, SCORE_SCALE).unwrap();
            let back: Score = score.to_string().parse().unwrap();
            prop_assert_eq!(back, score);
        }
    }
}
