//! Dense matrices over a cyclotomic field, plus a sparse representation of
//! monomial (generalized permutation) unitaries.
//!
//! Monomial unitaries compose, invert and conjugate in `O(dim)`, which keeps
//! tensor-tower computations cheap; everything falls back to dense matrices
//! and exact Gaussian elimination when structure runs out.

use crate::arith::{Phase, Rat};
use crate::cyclo::CycloScalar;
use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    conductor: u64,
    data: Vec<CycloScalar>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} (ζ{})", self.rows, self.cols, self.conductor)?;
        for i in 0..self.rows.min(8) {
            let row: Vec<String> = (0..self.cols.min(8))
                .map(|j| format!("{:?}", self[(i, j)]))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = CycloScalar;
    fn index(&self, (i, j): (usize, usize)) -> &CycloScalar {
        &self.data[i * self.cols + j]
    }
}

impl CMat {
    pub fn zero(conductor: u64, rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            conductor,
            data: vec![CycloScalar::zero(conductor); rows * cols],
        }
    }

    pub fn identity(conductor: u64, n: usize) -> Self {
        let mut m = CMat::zero(conductor, n, n);
        for i in 0..n {
            m.set(i, i, CycloScalar::one(conductor));
        }
        m
    }

    pub fn scalar(conductor: u64, n: usize, s: &CycloScalar) -> Self {
        let mut m = CMat::zero(conductor, n, n);
        for i in 0..n {
            m.set(i, i, s.clone());
        }
        m
    }

    pub fn matrix_unit(conductor: u64, n: usize, i: usize, j: usize) -> Self {
        let mut m = CMat::zero(conductor, n, n);
        m.set(i, j, CycloScalar::one(conductor));
        m
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn set(&mut self, i: usize, j: usize, v: CycloScalar) {
        assert_eq!(v.conductor(), self.conductor, "conductor mismatch");
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(CycloScalar::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self[(i, j)].is_one()
                    } else {
                        self[(i, j)].is_zero()
                    }
                })
            })
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = a.add(b);
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = a.sub(b);
        }
        out
    }

    pub fn neg(&self) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = a.neg();
        }
        out
    }

    pub fn scale(&self, s: &CycloScalar) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = a.mul(s);
        }
        out
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matrix dimension mismatch");
        let mut out = CMat::zero(self.conductor, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        let v = out[(i, j)].add(&a.mul(b));
                        out.set(i, j, v);
                    }
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zero(self.conductor, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self[(i, j)].conj());
            }
        }
        out
    }

    pub fn kron(&self, other: &CMat) -> CMat {
        let mut out = CMat::zero(
            self.conductor,
            self.rows * other.rows,
            self.cols * other.cols,
        );
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = &self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        let b = &other[(k, l)];
                        if !b.is_zero() {
                            out.set(i * other.rows + k, j * other.cols + l, a.mul(b));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> CycloScalar {
        assert_eq!(self.rows, self.cols);
        let mut s = CycloScalar::zero(self.conductor);
        for i in 0..self.rows {
            s = s.add(&self[(i, i)]);
        }
        s
    }

    pub fn is_projection(&self) -> bool {
        self.rows == self.cols && self.mul(self) == *self && self.adjoint() == *self
    }

    pub fn commutes_with(&self, other: &CMat) -> bool {
        self.mul(other) == other.mul(self)
    }

    /// Exact rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0usize;
        for col in 0..m.cols {
            let Some(piv) = (rank..m.rows).find(|&i| !m[(i, col)].is_zero()) else {
                continue;
            };
            for j in 0..m.cols {
                let tmp = m[(piv, j)].clone();
                let v = std::mem::replace(&mut m.data[rank * m.cols + j], tmp);
                m.data[piv * m.cols + j] = v;
            }
            let inv = m[(rank, col)].inv();
            for i in rank + 1..m.rows {
                let f = m[(i, col)].mul(&inv);
                if f.is_zero() {
                    continue;
                }
                for j in col..m.cols {
                    let v = m[(i, j)].sub(&f.mul(&m[(rank, j)]));
                    m.set(i, j, v);
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        rank
    }

    /// Exact determinant by Gaussian elimination with row swaps.
    pub fn det(&self) -> CycloScalar {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = CycloScalar::one(self.conductor);
        for col in 0..n {
            let Some(piv) = (col..n).find(|&i| !m[(i, col)].is_zero()) else {
                return CycloScalar::zero(self.conductor);
            };
            if piv != col {
                for j in 0..n {
                    let tmp = m[(piv, j)].clone();
                    let v = std::mem::replace(&mut m.data[col * n + j], tmp);
                    m.data[piv * n + j] = v;
                }
                det = det.neg();
            }
            let d = m[(col, col)].clone();
            det = det.mul(&d);
            let inv = d.inv();
            for i in col + 1..n {
                let f = m[(i, col)].mul(&inv);
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = m[(i, j)].sub(&f.mul(&m[(col, j)]));
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    /// A basis of the column space, as columns of the returned matrix.
    pub fn column_space_basis(&self) -> CMat {
        let mut m = self.clone();
        let mut pivots: Vec<usize> = Vec::new();
        let mut rank = 0usize;
        for col in 0..m.cols {
            let Some(piv) = (rank..m.rows).find(|&i| !m[(i, col)].is_zero()) else {
                continue;
            };
            for j in 0..m.cols {
                let tmp = m[(piv, j)].clone();
                let v = std::mem::replace(&mut m.data[rank * m.cols + j], tmp);
                m.data[piv * m.cols + j] = v;
            }
            let inv = m[(rank, col)].inv();
            for i in rank + 1..m.rows {
                let f = m[(i, col)].mul(&inv);
                if f.is_zero() {
                    continue;
                }
                for j in col..m.cols {
                    let v = m[(i, j)].sub(&f.mul(&m[(rank, j)]));
                    m.set(i, j, v);
                }
            }
            pivots.push(col);
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        let mut out = CMat::zero(self.conductor, self.rows, pivots.len());
        for (k, &col) in pivots.iter().enumerate() {
            for i in 0..self.rows {
                out.set(i, k, self[(i, col)].clone());
            }
        }
        out
    }

    /// Solve `self · X = rhs` exactly when `self` has full column rank on
    /// the relevant subspace; returns `None` when inconsistent.
    pub fn solve(&self, rhs: &CMat) -> Option<CMat> {
        assert_eq!(self.rows, rhs.rows);
        let n = self.cols;
        // augmented elimination
        let mut a = CMat::zero(self.conductor, self.rows, n + rhs.cols);
        for i in 0..self.rows {
            for j in 0..n {
                a.set(i, j, self[(i, j)].clone());
            }
            for j in 0..rhs.cols {
                a.set(i, n + j, rhs[(i, j)].clone());
            }
        }
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut rank = 0usize;
        for col in 0..n {
            let Some(piv) = (rank..a.rows).find(|&i| !a[(i, col)].is_zero()) else {
                continue;
            };
            for j in 0..a.cols {
                let tmp = a[(piv, j)].clone();
                let v = std::mem::replace(&mut a.data[rank * a.cols + j], tmp);
                a.data[piv * a.cols + j] = v;
            }
            let inv = a[(rank, col)].inv();
            for j in 0..a.cols {
                let v = a[(rank, j)].mul(&inv);
                a.set(rank, j, v);
            }
            for i in 0..a.rows {
                if i != rank && !a[(i, col)].is_zero() {
                    let f = a[(i, col)].clone();
                    for j in 0..a.cols {
                        let v = a[(i, j)].sub(&f.mul(&a[(rank, j)]));
                        a.set(i, j, v);
                    }
                }
            }
            pivots.push((rank, col));
            rank += 1;
        }
        // consistency
        for i in rank..a.rows {
            for j in 0..rhs.cols {
                if !a[(i, n + j)].is_zero() {
                    return None;
                }
            }
        }
        let mut x = CMat::zero(self.conductor, n, rhs.cols);
        for &(r, c) in &pivots {
            for j in 0..rhs.cols {
                x.set(c, j, a[(r, n + j)].clone());
            }
        }
        // verify (free columns were set to zero)
        if &self.mul(&x) == rhs {
            Some(x)
        } else {
            None
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &CycloScalar)> {
        (0..self.rows).flat_map(move |i| (0..self.cols).map(move |j| (i, j, &self[(i, j)])))
    }

    /// Flatten to a coordinate vector over ℚ (entry-major, then basis
    /// coordinate), for echelon bookkeeping.
    pub fn vectorize(&self) -> Vec<Rat> {
        let phi = crate::cyclo::euler_phi(self.conductor) as usize;
        let mut v = Vec::with_capacity(self.data.len() * phi);
        for s in &self.data {
            for c in s.coeffs() {
                v.push(c.clone());
            }
        }
        assert_eq!(v.len(), self.data.len() * phi);
        v
    }
}

/// A monomial unitary: `M e_j = e^{2πi φ_j} e_{perm[j]}`.
#[derive(Clone, PartialEq, Eq)]
pub struct Monomial {
    perm: Vec<usize>,
    phases: Vec<Phase>,
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Monomial(dim {}, perm {:?})", self.dim(), self.perm)
    }
}

impl Monomial {
    pub fn new(perm: Vec<usize>, phases: Vec<Phase>) -> Self {
        assert_eq!(perm.len(), phases.len());
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            assert!(!seen[p], "not a permutation");
            seen[p] = true;
        }
        Monomial { perm, phases }
    }

    pub fn identity(dim: usize) -> Self {
        Monomial {
            perm: (0..dim).collect(),
            phases: vec![Phase::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn phase(&self, j: usize) -> &Phase {
        &self.phases[j]
    }

    /// Diagonal monomial from phases.
    pub fn diagonal(phases: Vec<Phase>) -> Self {
        Monomial {
            perm: (0..phases.len()).collect(),
            phases,
        }
    }

    /// The cyclic shift `e_j ↦ e_{j+1 mod n}`.
    pub fn cyclic_shift(n: usize) -> Self {
        Monomial {
            perm: (0..n).map(|j| (j + 1) % n).collect(),
            phases: vec![Phase::zero(); n],
        }
    }

    /// Left regular representation `λ(g) e_x = e_{g·x}` of a finite group.
    pub fn regular_rep(group: &crate::groups::FiniteGroup, g: usize) -> Self {
        let n = group.order();
        Monomial {
            perm: (0..n).map(|x| group.mul(g, x)).collect(),
            phases: vec![Phase::zero(); n],
        }
    }

    /// Composition `self ∘ other` (matrix product).
    pub fn mul(&self, other: &Monomial) -> Monomial {
        assert_eq!(self.dim(), other.dim());
        let n = self.dim();
        let mut perm = vec![0; n];
        let mut phases = vec![Phase::zero(); n];
        for j in 0..n {
            let k = other.perm[j];
            perm[j] = self.perm[k];
            phases[j] = other.phases[j].clone() + &self.phases[k];
        }
        Monomial { perm, phases }
    }

    pub fn inv(&self) -> Monomial {
        let n = self.dim();
        let mut perm = vec![0; n];
        let mut phases = vec![Phase::zero(); n];
        for j in 0..n {
            perm[self.perm[j]] = j;
            phases[self.perm[j]] = -self.phases[j].clone();
        }
        Monomial { perm, phases }
    }

    /// Adjoint = inverse for unitaries.
    pub fn adjoint(&self) -> Monomial {
        self.inv()
    }

    pub fn pow(&self, e: i64) -> Monomial {
        let mut acc = Monomial::identity(self.dim());
        let base = if e >= 0 { self.clone() } else { self.inv() };
        for _ in 0..e.unsigned_abs() {
            acc = base.mul(&acc);
        }
        acc
    }

    pub fn kron(&self, other: &Monomial) -> Monomial {
        let (n, m) = (self.dim(), other.dim());
        let mut perm = vec![0; n * m];
        let mut phases = vec![Phase::zero(); n * m];
        for i in 0..n {
            for j in 0..m {
                perm[i * m + j] = self.perm[i] * m + other.perm[j];
                phases[i * m + j] = self.phases[i].clone() + &other.phases[j];
            }
        }
        Monomial { perm, phases }
    }

    /// Scale by a global phase.
    pub fn scale(&self, p: &Phase) -> Monomial {
        Monomial {
            perm: self.perm.clone(),
            phases: self.phases.iter().map(|q| q.clone() + p).collect(),
        }
    }

    /// Determinant phase: permutation parity plus the sum of entry phases.
    pub fn det_phase(&self) -> Phase {
        let mut seen = vec![false; self.dim()];
        let mut transpositions = 0usize;
        for start in 0..self.dim() {
            if seen[start] {
                continue;
            }
            let mut len = 0usize;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            transpositions += len - 1;
        }
        let sign = if transpositions % 2 == 1 {
            Phase::half()
        } else {
            Phase::zero()
        };
        self.phases.iter().fold(sign, |acc, p| acc + p)
    }

    pub fn to_cmat(&self, conductor: u64) -> CMat {
        let n = self.dim();
        let mut m = CMat::zero(conductor, n, n);
        for j in 0..n {
            let s = CycloScalar::from_phase(conductor, &self.phases[j])
                .expect("monomial phase does not embed in the requested conductor");
            m.set(self.perm[j], j, s);
        }
        m
    }

    /// Conjugate a phased matrix unit: `M (φ·e_{rc}) M* = φ' e_{r'c'}`.
    pub fn conj_matrix_unit(&self, r: usize, c: usize, phase: &Phase) -> (usize, usize, Phase) {
        let r2 = self.perm[r];
        let c2 = self.perm[c];
        let p2 = phase.clone() + &self.phases[r] - &self.phases[c];
        (r2, c2, p2)
    }
}

/// Try to read a dense matrix as a monomial unitary.
pub fn as_monomial(m: &CMat) -> Option<Monomial> {
    if m.rows != m.cols {
        return None;
    }
    let n = m.rows;
    let mut perm = vec![usize::MAX; n];
    let mut phases = vec![Phase::zero(); n];
    for j in 0..n {
        let mut hit = None;
        for i in 0..n {
            if !m[(i, j)].is_zero() {
                if hit.is_some() {
                    return None;
                }
                hit = Some(i);
            }
        }
        let i = hit?;
        perm[j] = i;
        phases[j] = m[(i, j)].to_phase()?;
    }
    let mut seen = vec![false; n];
    for &p in &perm {
        if seen[p] {
            return None;
        }
        seen[p] = true;
    }
    Some(Monomial { perm, phases })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeta(n: u64, k: i64) -> CycloScalar {
        CycloScalar::root_of_unity(n, k)
    }

    #[test]
    fn matrix_ops() {
        // a = [[0, ζ], [ζ^3, 0]] over ℚ(i): a^2 = 1, a unitary, det a = -1
        let mut a = CMat::zero(4, 2, 2);
        a.set(0, 1, zeta(4, 1));
        a.set(1, 0, zeta(4, 3));
        assert!(a.mul(&a).is_identity());
        assert!(a.mul(&a.adjoint()).is_identity());
        assert_eq!(a.det(), CycloScalar::from_int(4, -1));
    }

    #[test]
    fn rank_and_det() {
        let mut a = CMat::zero(1, 3, 3);
        a.set(0, 0, CycloScalar::from_int(1, 1));
        a.set(0, 1, CycloScalar::from_int(1, 2));
        a.set(1, 0, CycloScalar::from_int(1, 2));
        a.set(1, 1, CycloScalar::from_int(1, 4));
        assert_eq!(a.rank(), 1);
        assert!(a.det().is_zero());
        let id = CMat::identity(1, 3);
        assert_eq!(id.rank(), 3);
        assert!(id.det().is_one());
    }

    #[test]
    fn kron_dimensions() {
        let a = CMat::identity(2, 2);
        let mut b = CMat::zero(2, 3, 3);
        b.set(0, 2, CycloScalar::from_int(2, 1));
        let k = a.kron(&b);
        assert_eq!((k.rows, k.cols), (6, 6));
        assert!(!k[(0, 2)].is_zero());
        assert!(!k[(3, 5)].is_zero());
    }

    #[test]
    fn solve_linear() {
        let mut a = CMat::zero(1, 2, 2);
        a.set(0, 0, CycloScalar::from_int(1, 2));
        a.set(1, 1, CycloScalar::from_int(1, 3));
        let rhs = CMat::identity(1, 2);
        let x = a.solve(&rhs).unwrap();
        assert!(a.mul(&x).is_identity());
    }

    #[test]
    fn monomial_roundtrip() {
        let m = Monomial::new(
            vec![1, 2, 0],
            vec![Phase::new(1, 3), Phase::zero(), Phase::new(2, 3)],
        );
        let d = m.to_cmat(3);
        assert_eq!(as_monomial(&d).unwrap(), m);
        assert!(d.mul(&d.adjoint()).is_identity());
        assert_eq!(m.mul(&m.inv()), Monomial::identity(3));
        // product consistency with dense multiply
        let m2 = Monomial::cyclic_shift(3);
        assert_eq!(m.mul(&m2).to_cmat(3), d.mul(&m2.to_cmat(3)));
    }

    #[test]
    fn monomial_det_phase_matches_dense() {
        let m = Monomial::new(
            vec![2, 0, 1],
            vec![Phase::new(1, 4), Phase::new(1, 2), Phase::zero()],
        );
        let dense_det = m.to_cmat(4).det();
        assert_eq!(dense_det.to_phase().unwrap(), m.det_phase());
    }

    #[test]
    fn cyclic_shift_det_is_sign() {
        for n in 2..=5 {
            let m = Monomial::cyclic_shift(n);
            let expected = if (n - 1) % 2 == 1 {
                Phase::half()
            } else {
                Phase::zero()
            };
            assert_eq!(m.det_phase(), expected, "shift sign in M_{n}");
        }
    }

    #[test]
    fn conj_matrix_unit_matches_dense() {
        let m = Monomial::new(
            vec![1, 0, 2],
            vec![Phase::new(1, 6), Phase::new(1, 3), Phase::new(5, 6)],
        );
        let dense = m.to_cmat(6);
        for r in 0..3 {
            for c in 0..3 {
                let (r2, c2, p2) = m.conj_matrix_unit(r, c, &Phase::zero());
                let unit = CMat::matrix_unit(6, 3, r, c);
                let conj = dense.mul(&unit).mul(&dense.adjoint());
                let mut expected = CMat::zero(6, 3, 3);
                expected.set(r2, c2, CycloScalar::from_phase(6, &p2).unwrap());
                assert_eq!(conj, expected);
            }
        }
    }

    #[test]
    fn regular_rep_is_homomorphism() {
        let g = crate::groups::FiniteGroup::symmetric(3);
        for a in g.elements() {
            for b in g.elements() {
                let lhs = Monomial::regular_rep(&g, a).mul(&Monomial::regular_rep(&g, b));
                let rhs = Monomial::regular_rep(&g, g.mul(a, b));
                assert_eq!(lhs, rhs);
            }
        }
    }
}
