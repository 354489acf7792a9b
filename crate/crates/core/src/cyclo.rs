//! Exact arithmetic in cyclotomic fields ℚ(ζ_N).
//!
//! A [`CycloScalar`] is a coordinate vector over ℚ in the power basis
//! `1, ζ, …, ζ^{φ(N)-1}` of `ℚ[x]/(Φ_N)`. Because Φ_N is irreducible,
//! nonzero scalars are invertible; equality is coordinate equality, and a
//! root-of-unity scalar recovers its exact phase in ℚ/ℤ by enumeration.
//! Different conductors mix by lifting to the least common multiple.

use crate::arith::{lcm_u64, Phase, Rat};
use num_traits::{One, Zero};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

pub fn euler_phi(n: u64) -> u64 {
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            while m.is_multiple_of(p) {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

/// Coefficients of the `n`-th cyclotomic polynomial, constant term first.
pub fn cyclotomic_polynomial(n: u64) -> Vec<i64> {
    // x^n - 1 divided by the product of Φ_d for proper divisors d
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            let phi_d = cyclotomic_polynomial(d);
            num = poly_div_exact(&num, &phi_d);
        }
    }
    num
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem: Vec<i64> = num.to_vec();
    let dd = den.len() - 1;
    assert_eq!(den[dd], 1, "divisor must be monic");
    let mut quot = vec![0i64; rem.len() - dd];
    for i in (dd..rem.len()).rev() {
        let c = rem[i];
        if c != 0 {
            quot[i - dd] = c;
            for (k, &dk) in den.iter().enumerate() {
                rem[i - dd + k] -= c * dk;
            }
        }
    }
    assert!(rem.iter().all(|&c| c == 0), "non-exact polynomial division");
    quot
}

struct CycloTable {
    phi: usize,
    /// Φ_N as rationals, constant first, monic.
    poly: Vec<Rat>,
    /// `pow[k]` = coordinates of ζ^k for k in 0..N.
    pow: Vec<Vec<Rat>>,
}

thread_local! {
    static TABLES: RefCell<BTreeMap<u64, std::rc::Rc<CycloTable>>> = const { RefCell::new(BTreeMap::new()) };
}

fn table(n: u64) -> std::rc::Rc<CycloTable> {
    TABLES.with(|t| {
        let mut t = t.borrow_mut();
        if let Some(tab) = t.get(&n) {
            return tab.clone();
        }
        let coeffs = cyclotomic_polynomial(n);
        let phi = coeffs.len() - 1;
        let poly: Vec<Rat> = coeffs
            .iter()
            .map(|&c| Rat::from_integer(c.into()))
            .collect();
        let mut pow: Vec<Vec<Rat>> = Vec::with_capacity(n as usize);
        for k in 0..n as usize {
            if k < phi {
                let mut v = vec![Rat::zero(); phi];
                v[k] = Rat::one();
                pow.push(v);
            } else {
                // ζ^k = ζ^{k-1} · ζ, reduced by Φ
                let prev = &pow[k - 1];
                let mut v = vec![Rat::zero(); phi + 1];
                v[1..].clone_from_slice(prev);
                // reduce the degree-phi overflow
                let lead = v[phi].clone();
                if !lead.is_zero() {
                    for (i, p) in poly.iter().enumerate().take(phi) {
                        let delta = &lead * p;
                        v[i] -= delta;
                    }
                }
                v.truncate(phi);
                pow.push(v);
            }
        }
        let tab = std::rc::Rc::new(CycloTable { phi, poly, pow });
        t.insert(n, tab.clone());
        tab
    })
}

/// An element of ℚ(ζ_N) in the power basis.
#[derive(Clone, PartialEq, Eq)]
pub struct CycloScalar {
    conductor: u64,
    coeffs: Vec<Rat>,
}

impl fmt::Debug for CycloScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.as_rational() {
            return write!(f, "{r}");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                if i == 0 {
                    format!("{c}")
                } else {
                    format!("{c}·ζ{}^{i}", self.conductor)
                }
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl CycloScalar {
    pub fn zero(conductor: u64) -> Self {
        let phi = table(conductor).phi;
        CycloScalar {
            conductor,
            coeffs: vec![Rat::zero(); phi],
        }
    }

    pub fn one(conductor: u64) -> Self {
        let mut s = CycloScalar::zero(conductor);
        s.coeffs[0] = Rat::one();
        s
    }

    pub fn from_rational(conductor: u64, r: Rat) -> Self {
        let mut s = CycloScalar::zero(conductor);
        s.coeffs[0] = r;
        s
    }

    pub fn from_int(conductor: u64, k: i64) -> Self {
        CycloScalar::from_rational(conductor, Rat::from_integer(k.into()))
    }

    /// `ζ_N^k`.
    pub fn root_of_unity(conductor: u64, k: i64) -> Self {
        let tab = table(conductor);
        let idx = k.rem_euclid(conductor as i64) as usize;
        CycloScalar {
            conductor,
            coeffs: tab.pow[idx].clone(),
        }
    }

    /// The scalar `e^{2πi·p}`; the phase denominator must divide the
    /// conductor (or, for odd conductors, twice it via `-ζ^j`).
    pub fn from_phase(conductor: u64, p: &Phase) -> Option<Self> {
        let q = p.denominator_u64();
        if conductor.is_multiple_of(q) {
            use num_traits::ToPrimitive;
            let num = p.rat().numer().to_i64()?;
            return Some(CycloScalar::root_of_unity(
                conductor,
                num * (conductor / q) as i64,
            ));
        }
        // odd conductor: phases with denominator 2·odd reachable as -ζ^j
        if q.is_multiple_of(2) && conductor % 2 == 1 && conductor.is_multiple_of(q / 2) {
            let shifted = p.clone() + &Phase::half();
            let inner = CycloScalar::from_phase(conductor, &shifted)?;
            return Some(inner.neg());
        }
        None
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn from_coeffs(conductor: u64, coeffs: Vec<Rat>) -> Self {
        assert_eq!(coeffs.len() as u64, euler_phi(conductor));
        CycloScalar { conductor, coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Rat::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(Rat::is_zero)
    }

    pub fn as_rational(&self) -> Option<Rat> {
        if self.coeffs[1..].iter().all(Rat::is_zero) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Reinterpret in a larger conductor (the target must be a multiple).
    pub fn lift(&self, conductor: u64) -> CycloScalar {
        if conductor == self.conductor {
            return self.clone();
        }
        assert_eq!(
            conductor % self.conductor,
            0,
            "conductor lift must be a multiple"
        );
        let stride = (conductor / self.conductor) as usize;
        let tab = table(conductor);
        let mut out = vec![Rat::zero(); tab.phi];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                for (j, b) in tab.pow[i * stride].iter().enumerate() {
                    out[j] += c * b;
                }
            }
        }
        CycloScalar {
            conductor,
            coeffs: out,
        }
    }

    fn unify(a: &CycloScalar, b: &CycloScalar) -> (CycloScalar, CycloScalar) {
        if a.conductor == b.conductor {
            (a.clone(), b.clone())
        } else {
            let n = lcm_u64(a.conductor, b.conductor);
            (a.lift(n), b.lift(n))
        }
    }

    pub fn add(&self, other: &CycloScalar) -> CycloScalar {
        let (mut a, b) = CycloScalar::unify(self, other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += y;
        }
        a
    }

    pub fn sub(&self, other: &CycloScalar) -> CycloScalar {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> CycloScalar {
        CycloScalar {
            conductor: self.conductor,
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn mul(&self, other: &CycloScalar) -> CycloScalar {
        let (a, b) = CycloScalar::unify(self, other);
        let tab = table(a.conductor);
        let phi = tab.phi;
        let mut prod = vec![Rat::zero(); 2 * phi - 1];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    prod[i + j] += x * y;
                }
            }
        }
        CycloScalar {
            conductor: a.conductor,
            coeffs: reduce_mod_phi(&tab, prod),
        }
    }

    pub fn scale(&self, r: &Rat) -> CycloScalar {
        CycloScalar {
            conductor: self.conductor,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> CycloScalar {
        assert!(!self.is_zero(), "division by zero in ℚ(ζ)");
        let tab = table(self.conductor);
        // extended Euclid in ℚ[x]: u·f + v·Φ = 1
        let mut r0: Vec<Rat> = tab.poly.clone();
        let mut r1: Vec<Rat> = trim(self.coeffs.clone());
        let mut s0: Vec<Rat> = vec![];
        let mut s1: Vec<Rat> = vec![Rat::one()];
        while !r1.is_empty() {
            let (q, r) = poly_divmod(&r0, &r1);
            let s = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        // r0 = gcd (a nonzero constant, since Φ is irreducible)
        assert_eq!(r0.len(), 1, "inverse: gcd with Φ_N is not constant");
        let c = r0[0].clone();
        let mut u: Vec<Rat> = s0.iter().map(|x| x / &c).collect();
        u.resize(tab.phi.max(u.len()), Rat::zero());
        CycloScalar {
            conductor: self.conductor,
            coeffs: reduce_mod_phi(&tab, u),
        }
    }

    pub fn div(&self, other: &CycloScalar) -> CycloScalar {
        let (a, b) = CycloScalar::unify(self, other);
        a.mul(&b.inv())
    }

    /// Complex conjugation `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> CycloScalar {
        let tab = table(self.conductor);
        let n = self.conductor as usize;
        let mut out = vec![Rat::zero(); tab.phi];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                let k = (n - i) % n;
                for (j, b) in tab.pow[k].iter().enumerate() {
                    out[j] += c * b;
                }
            }
        }
        CycloScalar {
            conductor: self.conductor,
            coeffs: out,
        }
    }

    pub fn pow(&self, mut e: u64) -> CycloScalar {
        let mut base = self.clone();
        let mut acc = CycloScalar::one(self.conductor);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Exact phase of a root-of-unity scalar: the `p/q` with
    /// `self = e^{2πi p/q}`, or `None` if `self` is not a root of unity
    /// in ℚ(ζ_N) (the candidates are `±ζ^j`).
    pub fn to_phase(&self) -> Option<Phase> {
        let n = self.conductor;
        for j in 0..n {
            let cand = CycloScalar::root_of_unity(n, j as i64);
            if *self == cand {
                return Some(Phase::new(j as i64, n as i64));
            }
            if n % 2 == 1 && *self == cand.neg() {
                return Some(Phase::new(j as i64, n as i64) + &Phase::half());
            }
        }
        None
    }

    pub fn eq_cross(&self, other: &CycloScalar) -> bool {
        let (a, b) = CycloScalar::unify(self, other);
        a == b
    }
}

fn reduce_mod_phi(tab: &CycloTable, mut v: Vec<Rat>) -> Vec<Rat> {
    let phi = tab.phi;
    for i in (phi..v.len()).rev() {
        let lead = std::mem::replace(&mut v[i], Rat::zero());
        if !lead.is_zero() {
            for (k, p) in tab.poly.iter().enumerate().take(phi) {
                let delta = &lead * p;
                v[i - phi + k] -= delta;
            }
        }
    }
    v.truncate(phi);
    v.resize(phi, Rat::zero());
    v
}

fn trim(mut v: Vec<Rat>) -> Vec<Rat> {
    while v.last().is_some_and(Rat::is_zero) {
        v.pop();
    }
    v
}

fn poly_divmod(num: &[Rat], den: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let den = den.to_vec();
    let dd = den.len() - 1;
    let lead = den[dd].clone();
    let mut rem: Vec<Rat> = num.to_vec();
    if rem.len() <= dd {
        return (vec![], trim(rem));
    }
    let mut quot = vec![Rat::zero(); rem.len() - dd];
    for i in (dd..rem.len()).rev() {
        let c = &rem[i] / &lead;
        if !c.is_zero() {
            quot[i - dd] = c.clone();
            for (k, dk) in den.iter().enumerate() {
                let delta = &c * dk;
                rem[i - dd + k] -= delta;
            }
        }
    }
    (trim(quot), trim(rem))
}

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn poly_sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(out)
}

/// Positive-real check for elements known to be rational (used for trace
/// values of projections).
pub fn rational_value(s: &CycloScalar) -> Option<Rat> {
    s.as_rational()
}

/// Absolute-value-squared `s·s̄`, which is rational for monomial entries.
pub fn norm_squared(s: &CycloScalar) -> CycloScalar {
    s.mul(&s.conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polys() {
        assert_eq!(cyclotomic_polynomial(1), vec![-1, 1]);
        assert_eq!(cyclotomic_polynomial(2), vec![1, 1]);
        assert_eq!(cyclotomic_polynomial(3), vec![1, 1, 1]);
        assert_eq!(cyclotomic_polynomial(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_polynomial(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_polynomial(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn roots_of_unity_multiply() {
        let z = CycloScalar::root_of_unity(12, 1);
        assert!(z.pow(12).is_one());
        assert!(!z.pow(6).is_one());
        assert_eq!(z.pow(6), CycloScalar::from_int(12, -1));
        let w = CycloScalar::root_of_unity(12, 5);
        assert_eq!(z.mul(&w), CycloScalar::root_of_unity(12, 6));
    }

    #[test]
    fn inverse_and_division() {
        let z = CycloScalar::root_of_unity(5, 2);
        let s = z.add(&CycloScalar::from_int(5, 3)); // 3 + ζ^2
        let inv = s.inv();
        assert!(s.mul(&inv).is_one());
        assert_eq!(s.div(&s), CycloScalar::one(5));
    }

    #[test]
    fn conjugation() {
        let z = CycloScalar::root_of_unity(8, 1);
        assert_eq!(z.conj(), CycloScalar::root_of_unity(8, 7));
        assert!(norm_squared(&z).is_one());
        let s = z.add(&CycloScalar::one(8));
        // |1 + ζ_8|^2 = 2 + √2 is a real cyclotomic, self-conjugate
        let n = norm_squared(&s);
        assert_eq!(n, n.conj());
    }

    #[test]
    fn phases_roundtrip() {
        for (num, den) in [
            (0i64, 1i64),
            (1, 2),
            (1, 3),
            (2, 3),
            (1, 4),
            (5, 6),
            (7, 12),
        ] {
            let p = Phase::new(num, den);
            let s = CycloScalar::from_phase(12, &p).unwrap();
            assert_eq!(s.to_phase().unwrap(), p);
        }
        // odd conductor reaches half-integer phases through -ζ^j
        let p = Phase::new(1, 2);
        let s = CycloScalar::from_phase(3, &p).unwrap();
        assert_eq!(s, CycloScalar::from_int(3, -1));
        assert_eq!(s.to_phase().unwrap(), p);
        let p = Phase::new(5, 6);
        let s = CycloScalar::from_phase(3, &p).unwrap();
        assert_eq!(s.to_phase().unwrap(), p);
    }

    #[test]
    fn conductor_lift() {
        let a = CycloScalar::root_of_unity(3, 1);
        let b = a.lift(12);
        assert_eq!(b, CycloScalar::root_of_unity(12, 4));
        assert!(a.eq_cross(&b));
        let sum = a.add(&CycloScalar::root_of_unity(4, 1));
        assert_eq!(sum.conductor(), 12);
        assert_eq!(
            sum,
            CycloScalar::root_of_unity(12, 4).add(&CycloScalar::root_of_unity(12, 3))
        );
    }

    #[test]
    fn non_root_has_no_phase() {
        let s = CycloScalar::from_int(4, 2);
        assert!(s.to_phase().is_none());
        let t = CycloScalar::one(4).add(&CycloScalar::root_of_unity(4, 1));
        assert!(t.to_phase().is_none());
    }
}
