//! Exact rational phases.
//!
//! A [`Phase`] is an element of ℚ/ℤ stored as a reduced fraction in `[0, 1)`.
//! Phases are the additive bookkeeping for roots of unity: the phase `p/q`
//! stands for the scalar `e^{2πi p/q}`. All cochain values, cocycle twists
//! and determinant phases in this crate are phases, so every identity is
//! checked with integer arithmetic and no tolerance.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub type Int = BigInt;
pub type Rat = BigRational;

/// Reduce a rational into the fundamental domain `[0, 1)` of ℚ/ℤ.
pub fn frac_part(r: &Rat) -> Rat {
    let f = r.floor();
    r - f
}

/// An element of ℚ/ℤ as a reduced fraction in `[0, 1)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase(Rat);

impl Phase {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "phase denominator must be nonzero");
        Phase(frac_part(&Rat::new(Int::from(num), Int::from(den))))
    }

    pub fn from_rat(r: &Rat) -> Self {
        Phase(frac_part(r))
    }

    pub fn zero() -> Self {
        Phase(Rat::zero())
    }

    pub fn half() -> Self {
        Phase::new(1, 2)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// The representative in `[0, 1)`.
    pub fn rat(&self) -> &Rat {
        &self.0
    }

    /// Denominator of the reduced representative (1 for the zero phase).
    pub fn denominator(&self) -> Int {
        self.0.denom().clone()
    }

    pub fn denominator_u64(&self) -> u64 {
        use num_traits::ToPrimitive;
        self.0
            .denom()
            .to_u64()
            .expect("phase denominator exceeds u64")
    }

    /// Integer multiple `k · self` in ℚ/ℤ.
    pub fn scale(&self, k: i64) -> Self {
        Phase(frac_part(&(&self.0 * Rat::from_integer(Int::from(k)))))
    }
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_zero() {
            write!(f, "0")
        } else if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Add for Phase {
    type Output = Phase;
    fn add(self, rhs: Phase) -> Phase {
        Phase(frac_part(&(self.0 + rhs.0)))
    }
}

impl<'a> Add<&'a Phase> for Phase {
    type Output = Phase;
    fn add(self, rhs: &'a Phase) -> Phase {
        Phase(frac_part(&(self.0 + &rhs.0)))
    }
}

impl AddAssign<&Phase> for Phase {
    fn add_assign(&mut self, rhs: &Phase) {
        let v = frac_part(&(&self.0 + &rhs.0));
        self.0 = v;
    }
}

impl Sub for Phase {
    type Output = Phase;
    fn sub(self, rhs: Phase) -> Phase {
        Phase(frac_part(&(self.0 - rhs.0)))
    }
}

impl<'a> Sub<&'a Phase> for Phase {
    type Output = Phase;
    fn sub(self, rhs: &'a Phase) -> Phase {
        Phase(frac_part(&(self.0 - &rhs.0)))
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase(frac_part(&(-self.0)))
    }
}

impl Mul<i64> for &Phase {
    type Output = Phase;
    fn mul(self, k: i64) -> Phase {
        self.scale(k)
    }
}

/// Parse a phase from a `"p/q"` or `"p"` string.
pub fn parse_phase(s: &str) -> Result<Phase, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: Int = num
        .parse()
        .map_err(|_| format!("invalid phase numerator `{num}`"))?;
    let d: Int = den
        .parse()
        .map_err(|_| format!("invalid phase denominator `{den}`"))?;
    if d.is_zero() {
        return Err("phase denominator must be nonzero".into());
    }
    Ok(Phase(frac_part(&Rat::new(n, d))))
}

impl serde::Serialize for Phase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Phase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_phase(&s).map_err(serde::de::Error::custom)
    }
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return a.max(b);
    }
    a / a.gcd(&b) * b
}

/// gcd of two nonnegative rationals: the generator of the subgroup of ℚ
/// they generate.
pub fn rat_gcd(a: &Rat, b: &Rat) -> Rat {
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() {
        return a.abs();
    }
    let den = a.denom().lcm(b.denom());
    let na = (a.numer() * (&den / a.denom())).abs();
    let nb = (b.numer() * (&den / b.denom())).abs();
    Rat::new(na.gcd(&nb), den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_normalisation() {
        assert_eq!(Phase::new(5, 4), Phase::new(1, 4));
        assert_eq!(Phase::new(-1, 4), Phase::new(3, 4));
        assert_eq!(Phase::new(2, 4), Phase::half());
        assert!(Phase::new(8, 4).is_zero());
    }

    #[test]
    fn phase_arithmetic() {
        let a = Phase::new(2, 3);
        let b = Phase::new(2, 3);
        assert_eq!(a.clone() + b, Phase::new(1, 3));
        assert_eq!(a.scale(3), Phase::zero());
        assert_eq!(-Phase::new(1, 3), Phase::new(2, 3));
    }

    #[test]
    fn parse() {
        assert_eq!(parse_phase("1/2").unwrap(), Phase::half());
        assert_eq!(parse_phase(" -1/3 ").unwrap(), Phase::new(2, 3));
        assert_eq!(parse_phase("0").unwrap(), Phase::zero());
        assert!(parse_phase("1/0").is_err());
    }

    #[test]
    fn subgroup_gcd() {
        let a = Rat::new(Int::from(1), Int::from(6));
        let b = Rat::new(Int::from(1), Int::from(4));
        assert_eq!(rat_gcd(&a, &b), Rat::new(Int::from(1), Int::from(12)));
    }
}
