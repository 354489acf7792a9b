//! Exact integer linear algebra: Smith normal form, linear solving,
//! kernels, lattices, and quotient invariants.
//!
//! Entries are `i128` with checked arithmetic; the coboundary matrices this
//! crate produces have entries in `{-1, 0, 1}` and stay tiny under the
//! minimal-pivot strategy, so an overflow indicates input far outside the
//! supported scale and aborts with a clear message rather than corrupting a
//! result.

use std::fmt;

pub type I = i128;

fn ovf() -> ! {
    panic!("integer overflow in exact linear algebra: input exceeds supported scale")
}

fn cadd(a: I, b: I) -> I {
    a.checked_add(b).unwrap_or_else(|| ovf())
}

fn cmul(a: I, b: I) -> I {
    a.checked_mul(b).unwrap_or_else(|| ovf())
}

/// Dense integer matrix, row major.
#[derive(Clone, PartialEq, Eq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<I>,
}

impl fmt::Debug for IMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IMat {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows.min(12) {
            let row: Vec<String> = (0..self.cols.min(16))
                .map(|j| self[(i, j)].to_string())
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for IMat {
    type Output = I;
    fn index(&self, (i, j): (usize, usize)) -> &I {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut I {
        &mut self.data[i * self.cols + j]
    }
}

impl IMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IMat {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zero(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> I) -> Self {
        let mut m = IMat::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<I>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c));
        IMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<I> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.rows);
        let mut out = IMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = cadd(out[(i, j)], cmul(a, other[(k, j)]));
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[I]) -> Vec<I> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut s: I = 0;
                for j in 0..self.cols {
                    s = cadd(s, cmul(self[(i, j)], v[j]));
                }
                s
            })
            .collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &IMat) -> IMat {
        assert_eq!(self.rows, other.rows);
        IMat::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.cols);
        IMat::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self[(i, j)]
            } else {
                other[(i - self.rows, j)]
            }
        })
    }

    pub fn submatrix_cols(&self, cols: std::ops::Range<usize>) -> IMat {
        IMat::from_fn(self.rows, cols.len(), |i, j| self[(i, cols.start + j)])
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row_i += c * row_j
    fn add_row(&mut self, i: usize, j: usize, c: I) {
        if c == 0 {
            return;
        }
        for k in 0..self.cols {
            let v = cadd(self[(i, k)], cmul(c, self[(j, k)]));
            self[(i, k)] = v;
        }
    }

    /// col_i += c * col_j
    fn add_col(&mut self, i: usize, j: usize, c: I) {
        if c == 0 {
            return;
        }
        for k in 0..self.rows {
            let v = cadd(self[(k, i)], cmul(c, self[(k, j)]));
            self[(k, i)] = v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for k in 0..self.cols {
            self[(i, k)] = -self[(i, k)];
        }
    }

    fn negate_col(&mut self, j: usize) {
        for k in 0..self.rows {
            self[(k, j)] = -self[(k, j)];
        }
    }
}

/// Which transform matrices to accumulate: `[p, pinv, q, qinv]`.
pub type SnfFlags = [bool; 4];

/// Smith normal form `P · A · Q = D` with `D` diagonal and
/// `d_1 | d_2 | … | d_r`, `d_i > 0`.
pub struct Snf {
    pub d: IMat,
    pub p: Option<IMat>,
    pub pinv: Option<IMat>,
    pub q: Option<IMat>,
    pub qinv: Option<IMat>,
    pub rank: usize,
}

impl Snf {
    pub fn diagonal(&self) -> Vec<I> {
        (0..self.rank).map(|i| self.d[(i, i)]).collect()
    }
}

struct Calc {
    a: IMat,
    p: Option<IMat>,
    pinv: Option<IMat>,
    q: Option<IMat>,
    qinv: Option<IMat>,
}

impl Calc {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap_rows(i, j);
        if let Some(p) = self.p.as_mut() {
            p.swap_rows(i, j);
        }
        if let Some(pinv) = self.pinv.as_mut() {
            pinv.swap_cols(i, j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        self.a.swap_cols(i, j);
        if let Some(q) = self.q.as_mut() {
            q.swap_cols(i, j);
        }
        if let Some(qinv) = self.qinv.as_mut() {
            qinv.swap_rows(i, j);
        }
    }

    /// row_i += c * row_j on A; P tracks, Pinv untracks.
    fn add_row(&mut self, i: usize, j: usize, c: I) {
        self.a.add_row(i, j, c);
        if let Some(p) = self.p.as_mut() {
            p.add_row(i, j, c);
        }
        if let Some(pinv) = self.pinv.as_mut() {
            pinv.add_col(j, i, -c);
        }
    }

    fn add_col(&mut self, i: usize, j: usize, c: I) {
        self.a.add_col(i, j, c);
        if let Some(q) = self.q.as_mut() {
            q.add_col(i, j, c);
        }
        if let Some(qinv) = self.qinv.as_mut() {
            qinv.add_row(j, i, -c);
        }
    }

    fn negate_row(&mut self, i: usize) {
        self.a.negate_row(i);
        if let Some(p) = self.p.as_mut() {
            p.negate_row(i);
        }
        if let Some(pinv) = self.pinv.as_mut() {
            pinv.negate_col(i);
        }
    }
}

/// Compute the Smith normal form of `a` with the requested transforms.
pub fn smith_normal_form(a: &IMat, flags: SnfFlags) -> Snf {
    let (m, n) = (a.rows, a.cols);
    let mut calc = Calc {
        a: a.clone(),
        p: flags[0].then(|| IMat::identity(m)),
        pinv: flags[1].then(|| IMat::identity(m)),
        q: flags[2].then(|| IMat::identity(n)),
        qinv: flags[3].then(|| IMat::identity(n)),
    };

    let mut t = 0usize;
    while t < m.min(n) {
        // minimal-magnitude pivot in the trailing block
        let mut pivot: Option<(usize, usize, I)> = None;
        for i in t..m {
            for j in t..n {
                let v = calc.a[(i, j)].abs();
                if v != 0 && pivot.is_none_or(|(_, _, pv)| v < pv) {
                    pivot = Some((i, j, v));
                    if v == 1 {
                        break;
                    }
                }
            }
            if pivot.is_some_and(|(_, _, pv)| pv == 1) {
                break;
            }
        }
        let Some((pi, pj, _)) = pivot else { break };
        calc.swap_rows(t, pi);
        calc.swap_cols(t, pj);

        // clear row and column t; remainders re-enter as smaller pivots
        let mut clean = true;
        for i in t + 1..m {
            let v = calc.a[(i, t)];
            if v != 0 {
                let q = v.div_euclid(calc.a[(t, t)]);
                calc.add_row(i, t, -q);
                if calc.a[(i, t)] != 0 {
                    clean = false;
                }
            }
        }
        for j in t + 1..n {
            let v = calc.a[(t, j)];
            if v != 0 {
                let q = v.div_euclid(calc.a[(t, t)]);
                calc.add_col(j, t, -q);
                if calc.a[(t, j)] != 0 {
                    clean = false;
                }
            }
        }
        if !clean {
            continue; // pick a smaller pivot in the same block
        }
        // divisibility: pivot must divide the trailing block (trivial for ±1)
        let d = calc.a[(t, t)];
        if d.abs() != 1 {
            let mut offender = None;
            'outer: for i in t + 1..m {
                for j in t + 1..n {
                    if calc.a[(i, j)] % d != 0 {
                        offender = Some(i);
                        break 'outer;
                    }
                }
            }
            if let Some(i) = offender {
                calc.add_row(t, i, 1);
                continue;
            }
        }
        if d < 0 {
            calc.negate_row(t);
        }
        t += 1;
    }
    let rank = t;
    Snf {
        d: calc.a,
        p: calc.p,
        pinv: calc.pinv,
        q: calc.q,
        qinv: calc.qinv,
        rank,
    }
}

/// Precomputed SNF of a matrix, for repeated exact solves of `A x = b`.
pub struct SnfSolver {
    snf: Snf,
    rows: usize,
    cols: usize,
}

impl SnfSolver {
    pub fn new(a: &IMat) -> Self {
        let snf = smith_normal_form(a, [true, false, true, false]);
        SnfSolver {
            snf,
            rows: a.rows,
            cols: a.cols,
        }
    }

    /// An integer solution of `A x = b`, if one exists.
    pub fn solve(&self, b: &[I]) -> Option<Vec<I>> {
        assert_eq!(b.len(), self.rows);
        let c = self.snf.p.as_ref().unwrap().mul_vec(b);
        let mut y = vec![0; self.cols];
        for (i, ci) in c.iter().enumerate() {
            if i < self.snf.rank {
                let d = self.snf.d[(i, i)];
                if ci % d != 0 {
                    return None;
                }
                y[i] = ci / d;
            } else if *ci != 0 {
                return None;
            }
        }
        Some(self.snf.q.as_ref().unwrap().mul_vec(&y))
    }

    pub fn rank(&self) -> usize {
        self.snf.rank
    }
}

/// Basis of the integer kernel `{x : A x = 0}`, as columns.
pub fn kernel_basis(a: &IMat) -> IMat {
    let snf = smith_normal_form(a, [false, false, true, false]);
    let q = snf.q.unwrap();
    q.submatrix_cols(snf.rank..a.cols)
}

/// Basis (as columns) of the lattice spanned by the columns of `gens`.
pub fn column_lattice_basis(gens: &IMat) -> IMat {
    let snf = smith_normal_form(gens, [false, true, false, false]);
    let pinv = snf.pinv.unwrap();
    IMat::from_fn(gens.rows, snf.rank, |i, j| {
        cmul(pinv[(i, j)], snf.d[(j, j)])
    })
}

/// Basis of `{x ∈ ℤ^cols : A x ≡ 0 (mod m_i) for each row i}`.
///
/// Rows with `m_i = 0` are exact equations `(A x)_i = 0`.
pub fn kernel_mod(a: &IMat, moduli: &[I]) -> IMat {
    assert_eq!(moduli.len(), a.rows);
    // uniform positive modulus: read the kernel off `P A Q = D` directly,
    // since `A x ≡ 0 (mod g)` iff `D (Q^{-1} x) ≡ 0 (mod g)`
    if let Some(&g) = moduli.first() {
        if g > 0 && moduli.iter().all(|&m| m == g) {
            let snf = smith_normal_form(a, [false, false, true, false]);
            let q = snf.q.unwrap();
            return IMat::from_fn(a.cols, a.cols, |i, j| {
                if j < snf.rank {
                    let d = snf.d[(j, j)];
                    cmul(q[(i, j)], g / gcd(d, g))
                } else {
                    q[(i, j)]
                }
            });
        }
    }
    let extra: Vec<usize> = (0..a.rows).filter(|&i| moduli[i] != 0).collect();
    let mut b = IMat::zero(a.rows, a.cols + extra.len());
    for i in 0..a.rows {
        for j in 0..a.cols {
            b[(i, j)] = a[(i, j)];
        }
    }
    for (k, &i) in extra.iter().enumerate() {
        b[(i, a.cols + k)] = moduli[i];
    }
    let ker = kernel_basis(&b);
    // project to the x-coordinates; generators of the projection
    let proj = IMat::from_fn(a.cols, ker.cols, |i, j| ker[(i, j)]);
    column_lattice_basis(&proj)
}

fn gcd(a: I, b: I) -> I {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Structure of the quotient `L / R` of a lattice `L ⊆ ℤ^n` (basis columns
/// of `l_basis`, full column rank) by a sublattice `R` (generator columns).
pub struct QuotientStructure {
    /// One entry per generator: the order in the quotient (`0` = infinite).
    pub orders: Vec<I>,
    /// Generators of `L` adapted to the quotient, as columns: generator `i`
    /// has order `orders[i]` modulo `R`.
    pub generators: IMat,
}

impl QuotientStructure {
    /// Nontrivial invariant factors, smallest first, paired with the index
    /// of the corresponding generator column.
    pub fn invariant_factors(&self) -> Vec<(I, usize)> {
        let mut v: Vec<(I, usize)> = self
            .orders
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != 1)
            .map(|(i, &d)| (d, i))
            .collect();
        v.sort();
        v
    }
}

/// Compute `L / R`. Panics if `R ⊄ L`.
pub fn lattice_quotient(l_basis: &IMat, r_gens: &IMat) -> QuotientStructure {
    assert_eq!(l_basis.rows, r_gens.rows);
    let r = l_basis.cols;
    let solver = SnfSolver::new(l_basis);
    let mut coords = IMat::zero(r, r_gens.cols);
    for j in 0..r_gens.cols {
        let col = r_gens.column(j);
        let sol = solver
            .solve(&col)
            .expect("lattice_quotient: relation generator lies outside the lattice");
        for i in 0..r {
            coords[(i, j)] = sol[i];
        }
    }
    let snf = smith_normal_form(&coords, [false, true, false, false]);
    let pinv = snf.pinv.unwrap();
    let generators = l_basis.mul(&pinv);
    let mut orders = vec![0; r];
    for (i, order) in orders.iter_mut().enumerate().take(snf.rank) {
        *order = snf.d[(i, i)];
    }
    QuotientStructure { orders, generators }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_snf(a: &IMat) -> Snf {
        let snf = smith_normal_form(a, [true; 4]);
        let p = snf.p.as_ref().unwrap();
        let q = snf.q.as_ref().unwrap();
        let pinv = snf.pinv.as_ref().unwrap();
        let qinv = snf.qinv.as_ref().unwrap();
        assert_eq!(p.mul(a).mul(q), snf.d);
        assert_eq!(p.mul(pinv), IMat::identity(a.rows));
        assert_eq!(q.mul(qinv), IMat::identity(a.cols));
        for i in 0..snf.rank.saturating_sub(1) {
            assert_eq!(snf.d[(i + 1, i + 1)] % snf.d[(i, i)], 0);
        }
        for i in 0..a.rows {
            for j in 0..a.cols {
                if i != j || i >= snf.rank {
                    assert_eq!(snf.d[(i, j)], 0);
                }
            }
        }
        snf
    }

    #[test]
    fn snf_small() {
        let a = IMat::from_rows(vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, 4, 16]]);
        let snf = check_snf(&a);
        assert_eq!(snf.diagonal(), vec![2, 2, 156]);
    }

    #[test]
    fn snf_rectangular() {
        let a = IMat::from_rows(vec![vec![1, 2, 3], vec![4, 5, 6]]);
        let snf = check_snf(&a);
        assert_eq!(snf.diagonal(), vec![1, 3]);
    }

    #[test]
    fn snf_zero() {
        let a = IMat::zero(3, 2);
        let snf = check_snf(&a);
        assert_eq!(snf.rank, 0);
    }

    #[test]
    fn solver_roundtrip() {
        let a = IMat::from_rows(vec![vec![2, 0], vec![0, 3], vec![2, 3]]);
        let solver = SnfSolver::new(&a);
        let x = solver.solve(&[4, 6, 10]).unwrap();
        assert_eq!(a.mul_vec(&x), vec![4, 6, 10]);
        assert!(solver.solve(&[1, 0, 1]).is_none());
    }

    #[test]
    fn kernel() {
        let a = IMat::from_rows(vec![vec![1, 2, 3]]);
        let k = kernel_basis(&a);
        assert_eq!(k.cols, 2);
        for j in 0..2 {
            assert_eq!(a.mul_vec(&k.column(j)), vec![0]);
        }
    }

    #[test]
    fn kernel_modular() {
        // x + y ≡ 0 mod 4
        let a = IMat::from_rows(vec![vec![1, 1]]);
        let k = kernel_mod(&a, &[4]);
        assert_eq!(k.cols, 2);
        for j in 0..k.cols {
            let col = k.column(j);
            assert_eq!((col[0] + col[1]).rem_euclid(4), 0);
        }
        // (1, -1) and (4, 0) must be reachable
        let solver = SnfSolver::new(&k);
        assert!(solver.solve(&[1, -1]).is_some());
        assert!(solver.solve(&[4, 0]).is_some());
        assert!(solver.solve(&[1, 0]).is_none());
    }

    #[test]
    fn quotient_z_by_2z() {
        // Z^2 / <(2,0),(0,3)> = Z_2 x Z_3 = Z_6 in invariant-factor form
        let l = IMat::identity(2);
        let r = IMat::from_rows(vec![vec![2, 0], vec![0, 3]]);
        let q = lattice_quotient(&l, &r);
        let facs: Vec<I> = q.invariant_factors().iter().map(|&(d, _)| d).collect();
        assert_eq!(facs, vec![6]);
    }

    #[test]
    fn quotient_with_free_part() {
        let l = IMat::identity(2);
        let r = IMat::from_rows(vec![vec![2], vec![0]]);
        let q = lattice_quotient(&l, &r);
        let facs = q.invariant_factors();
        assert_eq!(facs.len(), 2);
        assert!(facs.iter().any(|&(d, _)| d == 0));
        assert!(facs.iter().any(|&(d, _)| d == 2));
    }

    #[test]
    fn column_lattice() {
        let gens = IMat::from_rows(vec![vec![2, 4, 6], vec![0, 0, 0]]);
        let basis = column_lattice_basis(&gens);
        assert_eq!(basis.cols, 1);
        assert_eq!(basis.column(0)[0].abs(), 2);
    }
}
