//! Cochains, the coboundary operator, and low-degree group cohomology by
//! exact integer linear algebra.
//!
//! Coefficients are either a finite abelian group `Z_{m_1} × … × Z_{m_k}` or
//! `(ℚ/ℤ)^k` (the rational circle), in both cases with an optional action of
//! the group by integer matrices. Values are stored as exact [`Phase`]
//! vectors, so a coset `j + m_iℤ` is the phase `j/m_i`.
//!
//! Deciding whether a circle-valued cocycle is a coboundary reduces to an
//! integer system: lift the cocycle `φ` to a rational cochain `φ̃`, note that
//! `dφ̃` is integral, and solve `dt = dφ̃` over ℤ. When a solution exists,
//! `φ̃ - t` is a rational cocycle and averaging over the last argument
//! produces an explicit primitive with denominators dividing `N·|G|`. The
//! same averaging shows every class has a representative with denominators
//! dividing `|G|`, which is what makes the `H^n` computation finite.

use crate::arith::{frac_part, Phase, Rat};
use crate::groups::{FiniteGroup, GroupHom};
use crate::snf::{column_lattice_basis, kernel_mod, lattice_quotient, IMat, SnfSolver, I};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CohomologyError {
    #[error("cochain is not a cocycle (coboundary is nonzero at tuple {tuple:?})")]
    NotACocycle { tuple: Vec<usize> },
    #[error("cocycle is not a coboundary")]
    NotACoboundary,
    #[error("cohomology degree {degree} unsupported (max 3)")]
    DegreeUnsupported { degree: usize },
    #[error("coefficient module mismatch between operands")]
    ModuleMismatch,
    #[error("operation requires a trivial module action")]
    NonTrivialAction,
    #[error("module action of element {g} does not respect the module")]
    BadAction { g: usize },
    #[error("value at tuple {tuple:?} has denominator {den} not dividing the modulus {modulus}")]
    BadDenominator {
        tuple: Vec<usize>,
        den: String,
        modulus: u64,
    },
    #[error("cochain table has wrong length {len}, expected {expected}")]
    BadTable { len: usize, expected: usize },
}

/// Shape of the coefficient abelian group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModuleShape {
    /// `Z_{m_1} × … × Z_{m_k}`, coordinate `i` stored as phases with
    /// denominator dividing `m_i`.
    Finite(Vec<u64>),
    /// `(ℚ/ℤ)^k`.
    Circle { copies: usize },
}

impl ModuleShape {
    pub fn rank(&self) -> usize {
        match self {
            ModuleShape::Finite(m) => m.len(),
            ModuleShape::Circle { copies } => *copies,
        }
    }

    fn modulus(&self, coord: usize) -> Option<u64> {
        match self {
            ModuleShape::Finite(m) => Some(m[coord]),
            ModuleShape::Circle { .. } => None,
        }
    }
}

/// A `ℤG`-module: a coefficient group together with one integer matrix per
/// group element.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientModule {
    pub group: FiniteGroup,
    pub shape: ModuleShape,
    /// `action[g]` is a `k × k` integer matrix acting on value vectors.
    action: Vec<Vec<Vec<I>>>,
}

impl PartialEq for CoefficientModule {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.shape == other.shape && self.action == other.action
    }
}

impl CoefficientModule {
    /// Trivial action.
    pub fn trivial(group: FiniteGroup, shape: ModuleShape) -> Self {
        let k = shape.rank();
        let id: Vec<Vec<I>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1 } else { 0 }).collect())
            .collect();
        let action = vec![id; group.order()];
        CoefficientModule {
            group,
            shape,
            action,
        }
    }

    /// Circle coefficients `ℚ/ℤ` with trivial action.
    pub fn circle(group: FiniteGroup) -> Self {
        CoefficientModule::trivial(group, ModuleShape::Circle { copies: 1 })
    }

    /// `(ℚ/ℤ)^k` where `g` permutes coordinates: coordinate `i` of `g·v` is
    /// coordinate `perm[g][i]` of `v`.
    pub fn block_permutation(
        group: FiniteGroup,
        perms: Vec<Vec<usize>>,
    ) -> Result<Self, CohomologyError> {
        let k = perms.first().map_or(0, |p| p.len());
        let action: Vec<Vec<Vec<I>>> = perms
            .iter()
            .map(|p| {
                (0..k)
                    .map(|i| (0..k).map(|j| if p[i] == j { 1 } else { 0 }).collect())
                    .collect()
            })
            .collect();
        let m = CoefficientModule {
            group,
            shape: ModuleShape::Circle { copies: k },
            action,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_matrices(
        group: FiniteGroup,
        shape: ModuleShape,
        action: Vec<Vec<Vec<I>>>,
    ) -> Result<Self, CohomologyError> {
        let m = CoefficientModule {
            group,
            shape,
            action,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), CohomologyError> {
        let k = self.shape.rank();
        let n = self.group.order();
        if self.action.len() != n {
            return Err(CohomologyError::BadTable {
                len: self.action.len(),
                expected: n,
            });
        }
        let e = self.group.identity();
        for (g, mat) in self.action.iter().enumerate() {
            if mat.len() != k || mat.iter().any(|r| r.len() != k) {
                return Err(CohomologyError::BadAction { g });
            }
            if g == e {
                for (i, row) in mat.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        if v != if i == j { 1 } else { 0 } {
                            return Err(CohomologyError::BadAction { g });
                        }
                    }
                }
            }
        }
        // composition: exact for circle coefficients, mod moduli for finite
        for g in self.group.elements() {
            for h in self.group.elements() {
                let gh = self.group.mul(g, h);
                for i in 0..k {
                    for j in 0..k {
                        let mut s: I = 0;
                        for l in 0..k {
                            s += self.action[g][i][l] * self.action[h][l][j];
                        }
                        let diff = s - self.action[gh][i][j];
                        let ok = match &self.shape {
                            ModuleShape::Circle { .. } => diff == 0,
                            ModuleShape::Finite(m) => diff.rem_euclid(m[i] as I) == 0,
                        };
                        if !ok {
                            return Err(CohomologyError::BadAction { g });
                        }
                    }
                }
            }
        }
        // finite shapes: matrices must respect coordinate orders
        if let ModuleShape::Finite(m) = &self.shape {
            for (g, mat) in self.action.iter().enumerate() {
                for i in 0..k {
                    for j in 0..k {
                        if (mat[i][j] * m[j] as I).rem_euclid(m[i] as I) != 0 {
                            return Err(CohomologyError::BadAction { g });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.shape.rank()
    }

    pub fn is_trivial_action(&self) -> bool {
        let k = self.rank();
        self.action
            .iter()
            .all(|mat| (0..k).all(|i| (0..k).all(|j| mat[i][j] == if i == j { 1 } else { 0 })))
    }

    pub fn action_matrix(&self, g: usize) -> &Vec<Vec<I>> {
        &self.action[g]
    }

    pub fn zero_value(&self) -> Vec<Phase> {
        vec![Phase::zero(); self.rank()]
    }

    pub fn apply(&self, g: usize, v: &[Phase]) -> Vec<Phase> {
        let k = self.rank();
        let mat = &self.action[g];
        (0..k)
            .map(|i| {
                let mut acc = Phase::zero();
                for (j, vj) in v.iter().enumerate() {
                    if mat[i][j] != 0 {
                        acc += &vj.scale(mat[i][j] as i64);
                    }
                }
                acc
            })
            .collect()
    }

    fn apply_rat(&self, g: usize, v: &[Rat]) -> Vec<Rat> {
        let k = self.rank();
        let mat = &self.action[g];
        (0..k)
            .map(|i| {
                let mut acc = Rat::zero();
                for (j, vj) in v.iter().enumerate() {
                    if mat[i][j] != 0 {
                        acc += vj * Rat::from_integer(mat[i][j].into());
                    }
                }
                acc
            })
            .collect()
    }

    /// Check a value vector is a legal module element.
    pub fn check_value(&self, v: &[Phase]) -> bool {
        if v.len() != self.rank() {
            return false;
        }
        match &self.shape {
            ModuleShape::Circle { .. } => true,
            ModuleShape::Finite(m) => v
                .iter()
                .zip(m)
                .all(|(p, &mi)| (&Rat::from_integer((mi as i64).into()) * p.rat()).is_integer()),
        }
    }
}

/// A function `G^n → M` stored densely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cochain {
    pub module: CoefficientModule,
    pub degree: usize,
    values: Vec<Vec<Phase>>,
}

impl Cochain {
    pub fn zero(module: &CoefficientModule, degree: usize) -> Self {
        let n = module.group.order().pow(degree as u32);
        Cochain {
            module: module.clone(),
            degree,
            values: vec![module.zero_value(); n],
        }
    }

    pub fn from_values(
        module: &CoefficientModule,
        degree: usize,
        values: Vec<Vec<Phase>>,
    ) -> Result<Self, CohomologyError> {
        let expected = module.group.order().pow(degree as u32);
        if values.len() != expected {
            return Err(CohomologyError::BadTable {
                len: values.len(),
                expected,
            });
        }
        for (idx, v) in values.iter().enumerate() {
            if !module.check_value(v) {
                let c = Cochain {
                    module: module.clone(),
                    degree,
                    values: vec![],
                };
                let tuple = c.unindex(idx);
                let modulus = module.shape.modulus(0).unwrap_or(0);
                return Err(CohomologyError::BadDenominator {
                    tuple,
                    den: v
                        .iter()
                        .map(|p| p.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    modulus,
                });
            }
        }
        Ok(Cochain {
            module: module.clone(),
            degree,
            values,
        })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.module.group
    }

    fn index(&self, tuple: &[usize]) -> usize {
        let n = self.module.group.order();
        tuple.iter().fold(0, |acc, &g| acc * n + g)
    }

    fn unindex(&self, mut idx: usize) -> Vec<usize> {
        let n = self.module.group.order();
        let mut t = vec![0; self.degree];
        for i in (0..self.degree).rev() {
            t[i] = idx % n;
            idx /= n;
        }
        t
    }

    pub fn value(&self, tuple: &[usize]) -> &Vec<Phase> {
        assert_eq!(tuple.len(), self.degree);
        &self.values[self.index(tuple)]
    }

    pub fn set(&mut self, tuple: &[usize], v: Vec<Phase>) {
        assert!(self.module.check_value(&v), "value not in module");
        let i = self.index(tuple);
        self.values[i] = v;
    }

    /// Scalar value for rank-1 modules.
    pub fn phase(&self, tuple: &[usize]) -> &Phase {
        assert_eq!(self.module.rank(), 1);
        &self.value(tuple)[0]
    }

    pub fn tuples(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let total = self.values.len();
        (0..total).map(|i| self.unindex(i))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(Phase::is_zero))
    }

    pub fn scale(&self, k: i64) -> Cochain {
        let values = self
            .values
            .iter()
            .map(|v| v.iter().map(|p| p.scale(k)).collect())
            .collect();
        Cochain {
            module: self.module.clone(),
            degree: self.degree,
            values,
        }
    }

    pub fn add(&self, other: &Cochain) -> Result<Cochain, CohomologyError> {
        if self.module != other.module || self.degree != other.degree {
            return Err(CohomologyError::ModuleMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.clone() + y).collect())
            .collect();
        Ok(Cochain {
            module: self.module.clone(),
            degree: self.degree,
            values,
        })
    }

    pub fn sub(&self, other: &Cochain) -> Result<Cochain, CohomologyError> {
        self.add(&other.scale(-1))
    }

    /// Vanishes whenever an argument is the identity.
    pub fn is_normalized(&self) -> bool {
        let e = self.module.group.identity();
        self.tuples()
            .all(|t| !t.contains(&e) || self.value(&t).iter().all(Phase::is_zero))
    }

    /// Largest denominator appearing among the values.
    pub fn denominator_lcm(&self) -> u64 {
        use crate::arith::lcm_u64;
        self.values
            .iter()
            .flatten()
            .fold(1u64, |acc, p| lcm_u64(acc, p.denominator_u64()))
    }
}

/// The alternating-sum coboundary `dφ` of an `n`-cochain, with the module
/// action applied in the leading slot.
pub fn coboundary(phi: &Cochain) -> Cochain {
    let group = phi.group().clone();
    let n = phi.degree;
    let mut out = Cochain::zero(&phi.module, n + 1);
    let order = group.order();
    let total = order.pow((n + 1) as u32);
    for idx in 0..total {
        let tuple = out.unindex(idx);
        let mut acc = phi.module.apply(tuple[0], phi.value(&tuple[1..]));
        let mut sign_neg = true; // (-1)^i for i = 1..
        for i in 0..n {
            let mut t = Vec::with_capacity(n);
            t.extend_from_slice(&tuple[..i]);
            t.push(group.mul(tuple[i], tuple[i + 1]));
            t.extend_from_slice(&tuple[i + 2..]);
            let v = phi.value(&t);
            for (a, b) in acc.iter_mut().zip(v) {
                if sign_neg {
                    *a += &(-b.clone());
                } else {
                    *a += b;
                }
            }
            sign_neg = !sign_neg;
        }
        let v = phi.value(&tuple[..n]);
        for (a, b) in acc.iter_mut().zip(v) {
            if sign_neg {
                *a += &(-b.clone());
            } else {
                *a += b;
            }
        }
        out.values[idx] = acc;
    }
    out
}

pub fn is_cocycle(phi: &Cochain) -> bool {
    coboundary(phi).is_zero()
}

/// `ω + dλ` for a 2-cochain `λ`.
pub fn shift_by_2cochain(omega: &Cochain, lambda: &Cochain) -> Result<Cochain, CohomologyError> {
    if lambda.degree != omega.degree - 1 {
        return Err(CohomologyError::ModuleMismatch);
    }
    omega.add(&coboundary(lambda))
}

/// Pull a cochain back along a homomorphism into its group.
pub fn pullback(omega: &Cochain, hom: &GroupHom) -> Result<Cochain, CohomologyError> {
    if hom.target != omega.module.group {
        return Err(CohomologyError::ModuleMismatch);
    }
    let src_module = CoefficientModule {
        group: hom.source.clone(),
        shape: omega.module.shape.clone(),
        action: hom
            .source
            .elements()
            .map(|g| omega.module.action[hom.apply(g)].clone())
            .collect(),
    };
    let mut out = Cochain::zero(&src_module, omega.degree);
    let total = out.values.len();
    for idx in 0..total {
        let tuple = out.unindex(idx);
        let image: Vec<usize> = tuple.iter().map(|&g| hom.apply(g)).collect();
        out.values[idx] = omega.value(&image).clone();
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// rational lifts and the averaging contraction
// ---------------------------------------------------------------------------

/// Dense rational cochain used internally for integral lifts.
struct RatCochain {
    degree: usize,
    values: Vec<Vec<Rat>>,
}

fn lift_rational(phi: &Cochain) -> RatCochain {
    RatCochain {
        degree: phi.degree,
        values: phi
            .values
            .iter()
            .map(|v| v.iter().map(|p| p.rat().clone()).collect())
            .collect(),
    }
}

fn rat_index(order: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &g| acc * order + g)
}

fn rat_coboundary(module: &CoefficientModule, phi: &RatCochain) -> RatCochain {
    let group = &module.group;
    let order = group.order();
    let n = phi.degree;
    let k = module.rank();
    let total = order.pow((n + 1) as u32);
    let mut values = vec![vec![Rat::zero(); k]; total];
    for (idx, slot) in values.iter_mut().enumerate() {
        let tuple = unindex(order, n + 1, idx);
        let head = &phi.values[rat_index(order, &tuple[1..])];
        let mut acc = module.apply_rat(tuple[0], head);
        let mut sign = -1i64;
        for i in 0..n {
            let mut t = Vec::with_capacity(n);
            t.extend_from_slice(&tuple[..i]);
            t.push(group.mul(tuple[i], tuple[i + 1]));
            t.extend_from_slice(&tuple[i + 2..]);
            let v = &phi.values[rat_index(order, &t)];
            for (a, b) in acc.iter_mut().zip(v) {
                *a += b * Rat::from_integer(sign.into());
            }
            sign = -sign;
        }
        let v = &phi.values[rat_index(order, &tuple[..n])];
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b * Rat::from_integer(sign.into());
        }
        *slot = acc;
    }
    RatCochain {
        degree: n + 1,
        values,
    }
}

fn unindex(order: usize, degree: usize, mut idx: usize) -> Vec<usize> {
    let mut t = vec![0; degree];
    for i in (0..degree).rev() {
        t[i] = idx % order;
        idx /= order;
    }
    t
}

/// The averaging contraction `σ` over the last argument: for an `n`-cocycle
/// `z` (any coefficients), `d(σz) = |G| · z`.
fn rat_sigma(module: &CoefficientModule, z: &RatCochain) -> RatCochain {
    let group = &module.group;
    let order = group.order();
    let n = z.degree;
    assert!(n >= 1);
    let k = module.rank();
    let sign = if n.is_multiple_of(2) { 1i64 } else { -1i64 };
    let total = order.pow((n - 1) as u32);
    let mut values = vec![vec![Rat::zero(); k]; total];
    for (idx, slot) in values.iter_mut().enumerate() {
        let tuple = unindex(order, n - 1, idx);
        let mut acc = vec![Rat::zero(); k];
        for x in group.elements() {
            let mut t = tuple.clone();
            t.push(x);
            let v = &z.values[rat_index(order, &t)];
            for (a, b) in acc.iter_mut().zip(v) {
                *a += b;
            }
        }
        for a in acc.iter_mut() {
            *a *= Rat::from_integer(sign.into());
        }
        *slot = acc;
    }
    RatCochain {
        degree: n - 1,
        values,
    }
}

fn rat_to_cochain(module: &CoefficientModule, rc: &RatCochain) -> Cochain {
    Cochain {
        module: module.clone(),
        degree: rc.degree,
        values: rc
            .values
            .iter()
            .map(|v| v.iter().map(|r| Phase::from_rat(&frac_part(r))).collect())
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// integral coboundary matrices
// ---------------------------------------------------------------------------

/// The matrix of `d: C^n → C^{n+1}` on integer coordinate vectors
/// (layout: tuple index major, module coordinate minor).
pub fn coboundary_matrix(module: &CoefficientModule, n: usize) -> IMat {
    let group = &module.group;
    let order = group.order();
    let k = module.rank();
    let rows = order.pow((n + 1) as u32) * k;
    let cols = order.pow(n as u32) * k;
    let mut m = IMat::zero(rows, cols);
    for t_idx in 0..order.pow((n + 1) as u32) {
        let tuple = unindex(order, n + 1, t_idx);
        // action term
        let src = rat_index(order, &tuple[1..]);
        let a = &module.action[tuple[0]];
        for i in 0..k {
            for j in 0..k {
                if a[i][j] != 0 {
                    m[(t_idx * k + i, src * k + j)] += a[i][j];
                }
            }
        }
        let mut sign = -1;
        for i in 0..n {
            let mut t = Vec::with_capacity(n);
            t.extend_from_slice(&tuple[..i]);
            t.push(group.mul(tuple[i], tuple[i + 1]));
            t.extend_from_slice(&tuple[i + 2..]);
            let src = rat_index(order, &t);
            for c in 0..k {
                m[(t_idx * k + c, src * k + c)] += sign;
            }
            sign = -sign;
        }
        let src = rat_index(order, &tuple[..n]);
        for c in 0..k {
            m[(t_idx * k + c, src * k + c)] += sign;
        }
    }
    m
}

// ---------------------------------------------------------------------------
// coboundary solving
// ---------------------------------------------------------------------------

/// Reusable solver for `dψ = φ` questions at a fixed degree.
///
/// For circle coefficients this holds the Smith decomposition of the integer
/// coboundary matrix one degree up (the Bockstein system); for finite
/// coefficients, of the degree-`n` matrix extended by the coordinate moduli.
pub struct CoboundarySolver {
    module: CoefficientModule,
    degree: usize,
    solver: SnfSolver,
    finite_cols: usize,
}

impl CoboundarySolver {
    /// Prepare a solver for degree-`n` cochains (`n ≥ 1`).
    pub fn new(module: &CoefficientModule, degree: usize) -> Self {
        assert!(degree >= 1, "solve_coboundary requires degree >= 1");
        match module.shape {
            ModuleShape::Circle { .. } => {
                let d_up = coboundary_matrix(module, degree);
                CoboundarySolver {
                    module: module.clone(),
                    degree,
                    solver: SnfSolver::new(&d_up),
                    finite_cols: 0,
                }
            }
            ModuleShape::Finite(ref m) => {
                let d = coboundary_matrix(module, degree - 1);
                let k = module.rank();
                let rows = d.rows;
                let blocks = rows / k;
                let mut ext = IMat::zero(rows, rows);
                for b in 0..blocks {
                    for c in 0..k {
                        ext[(b * k + c, b * k + c)] = m[c] as I;
                    }
                }
                let stacked = d.hstack(&ext);
                CoboundarySolver {
                    module: module.clone(),
                    degree,
                    solver: SnfSolver::new(&stacked),
                    finite_cols: d.cols,
                }
            }
        }
    }

    /// Solve `dψ = φ`. The input must be a cocycle; the output, when it
    /// exists, satisfies `dψ = φ` exactly.
    pub fn solve(&self, phi: &Cochain) -> Result<Cochain, CohomologyError> {
        assert_eq!(phi.degree, self.degree);
        assert!(phi.module == self.module, "module mismatch");
        match self.module.shape {
            ModuleShape::Circle { .. } => self.solve_circle(phi),
            ModuleShape::Finite(_) => self.solve_finite(phi),
        }
    }

    fn solve_circle(&self, phi: &Cochain) -> Result<Cochain, CohomologyError> {
        let module = &self.module;
        let lift = lift_rational(phi);
        let z = rat_coboundary(module, &lift);
        // integrality of dφ̃ is exactly the cocycle condition on φ
        let mut rhs = Vec::with_capacity(z.values.len() * module.rank());
        for (idx, v) in z.values.iter().enumerate() {
            for r in v {
                if !r.is_integer() {
                    let tuple = unindex(module.group.order(), self.degree + 1, idx);
                    return Err(CohomologyError::NotACocycle { tuple });
                }
                rhs.push(rat_to_i(r));
            }
        }
        let t = self
            .solver
            .solve(&rhs)
            .ok_or(CohomologyError::NotACoboundary)?;
        // ψ = σ(φ̃ - t) / |G|
        let k = module.rank();
        let diff = RatCochain {
            degree: self.degree,
            values: lift
                .values
                .iter()
                .enumerate()
                .map(|(idx, v)| {
                    v.iter()
                        .enumerate()
                        .map(|(c, r)| r - Rat::from_integer(t[idx * k + c].into()))
                        .collect()
                })
                .collect(),
        };
        let mut s = rat_sigma(module, &diff);
        let g = Rat::from_integer((module.group.order() as i64).into());
        for v in s.values.iter_mut() {
            for r in v.iter_mut() {
                *r /= &g;
            }
        }
        let psi = rat_to_cochain(module, &s);
        debug_assert!(coboundary(&psi) == *phi, "primitive verification failed");
        Ok(psi)
    }

    fn solve_finite(&self, phi: &Cochain) -> Result<Cochain, CohomologyError> {
        let module = &self.module;
        let m = match &module.shape {
            ModuleShape::Finite(m) => m.clone(),
            _ => unreachable!(),
        };
        let k = module.rank();
        let mut rhs = Vec::with_capacity(phi.values.len() * k);
        for v in &phi.values {
            for (c, p) in v.iter().enumerate() {
                let scaled = p.rat() * Rat::from_integer((m[c] as i64).into());
                debug_assert!(scaled.is_integer());
                rhs.push(rat_to_i(&scaled));
            }
        }
        let sol = self
            .solver
            .solve(&rhs)
            .ok_or(CohomologyError::NotACoboundary)?;
        let blocks = self.finite_cols / k;
        let values: Vec<Vec<Phase>> = (0..blocks)
            .map(|b| {
                (0..k)
                    .map(|c| Phase::new(sol[b * k + c] as i64, m[c] as i64))
                    .collect()
            })
            .collect();
        let psi = Cochain {
            module: module.clone(),
            degree: self.degree - 1,
            values,
        };
        debug_assert!(coboundary(&psi) == *phi, "primitive verification failed");
        Ok(psi)
    }
}

fn rat_to_i(r: &Rat) -> I {
    use num_traits::ToPrimitive;
    r.to_integer().to_i128().expect("integer lift exceeds i128")
}

/// Decide whether `φ` is a coboundary and produce a primitive when it is.
pub fn solve_coboundary(phi: &Cochain) -> Result<Cochain, CohomologyError> {
    CoboundarySolver::new(&phi.module, phi.degree).solve(phi)
}

/// The least `r ≥ 1` such that `r·ω` is a coboundary. Always divides `|G|`.
pub fn class_order(omega: &Cochain) -> Result<usize, CohomologyError> {
    let solver = CoboundarySolver::new(&omega.module, omega.degree);
    class_order_with(&solver, omega)
}

/// [`class_order`] against a precomputed solver.
pub fn class_order_with(
    solver: &CoboundarySolver,
    omega: &Cochain,
) -> Result<usize, CohomologyError> {
    if !is_cocycle(omega) {
        return Err(CohomologyError::NotACocycle { tuple: vec![] });
    }
    let order = omega.group().order();
    let mut divisors: Vec<usize> = (1..=order).filter(|d| order.is_multiple_of(*d)).collect();
    divisors.sort_unstable();
    for r in divisors {
        if solver.solve(&omega.scale(r as i64)).is_ok() {
            return Ok(r);
        }
    }
    unreachable!("cohomology class order must divide the group order")
}

// ---------------------------------------------------------------------------
// H^n computation
// ---------------------------------------------------------------------------

/// Structure of `H^n(G, M)`: invariant factors and representative cocycles.
pub struct CohomologyGroup {
    /// Nontrivial invariant factors in divisibility order (smallest first).
    pub invariant_factors: Vec<u64>,
    /// One representative cocycle per invariant factor, aligned with
    /// `invariant_factors`.
    pub generators: Vec<Cochain>,
}

impl CohomologyGroup {
    pub fn order(&self) -> u64 {
        self.invariant_factors.iter().product()
    }

    pub fn is_trivial(&self) -> bool {
        self.invariant_factors.is_empty()
    }
}

/// Compute `H^n(G, M)` for `n ≤ 3`.
pub fn cohomology_group(
    module: &CoefficientModule,
    n: usize,
) -> Result<CohomologyGroup, CohomologyError> {
    if n > 3 {
        return Err(CohomologyError::DegreeUnsupported { degree: n });
    }
    match &module.shape {
        ModuleShape::Circle { .. } => cohomology_circle(module, n),
        ModuleShape::Finite(_) => cohomology_finite(module, n),
    }
}

/// Circle coefficients: classes are presented by cocycles with denominators
/// dividing `|G|`, modulo coboundaries of cochains with denominators
/// dividing `|G|^2`; both bounds come from the averaging contraction.
fn cohomology_circle(
    module: &CoefficientModule,
    n: usize,
) -> Result<CohomologyGroup, CohomologyError> {
    let g = module.group.order() as I;
    let k = module.rank();
    let c_n = module.group.order().pow(n as u32) * k;
    let d_up = coboundary_matrix(module, n);
    let lattice = kernel_mod(&d_up, &vec![g; d_up.rows]);
    // relations: x with x/|G| = dψ for ψ with denominators dividing |G|^2,
    // i.e. |G|·x ≡ D_{n}·y  (mod |G|^2)
    let relations = if n == 0 {
        let mut m = IMat::zero(c_n, c_n);
        for i in 0..c_n {
            m[(i, i)] = g;
        }
        m
    } else {
        let d_dn = coboundary_matrix(module, n - 1);
        let mut gsq = IMat::zero(c_n, c_n);
        for i in 0..c_n {
            gsq[(i, i)] = g * g;
        }
        let span = column_lattice_basis(&d_dn.hstack(&gsq));
        // R = { H·c / |G| : H·c ≡ 0 mod |G| }
        let c_basis = kernel_mod(&span, &vec![g; c_n]);
        let scaled = span.mul(&c_basis);
        IMat::from_fn(c_n, scaled.cols, |i, j| {
            let v = scaled[(i, j)];
            debug_assert_eq!(v % g, 0);
            v / g
        })
    };
    let quotient = lattice_quotient(&lattice, &relations);
    let mut invariant_factors = Vec::new();
    let mut generators = Vec::new();
    for (d, col) in quotient.invariant_factors() {
        assert!(
            d != 0,
            "H^n of a finite group with circle coefficients is torsion"
        );
        invariant_factors.push(d as u64);
        let x = quotient.generators.column(col);
        let values: Vec<Vec<Phase>> = x
            .chunks(k)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|&v| Phase::new(v as i64, g as i64))
                    .collect()
            })
            .collect();
        let rep = Cochain::from_values(module, n, values)?;
        debug_assert!(is_cocycle(&rep));
        generators.push(rep);
    }
    Ok(CohomologyGroup {
        invariant_factors,
        generators,
    })
}

fn cohomology_finite(
    module: &CoefficientModule,
    n: usize,
) -> Result<CohomologyGroup, CohomologyError> {
    let m = match &module.shape {
        ModuleShape::Finite(m) => m.clone(),
        _ => unreachable!(),
    };
    let k = module.rank();
    let order = module.group.order();
    let c_n = order.pow(n as u32) * k;
    let d_up = coboundary_matrix(module, n);
    let moduli_up: Vec<I> = (0..d_up.rows).map(|i| m[i % k] as I).collect();
    let lattice = kernel_mod(&d_up, &moduli_up);
    let mut mod_lattice = IMat::zero(c_n, c_n);
    for i in 0..c_n {
        mod_lattice[(i, i)] = m[i % k] as I;
    }
    let relations = if n == 0 {
        mod_lattice
    } else {
        let d_dn = coboundary_matrix(module, n - 1);
        column_lattice_basis(&d_dn.hstack(&mod_lattice))
    };
    let quotient = lattice_quotient(&lattice, &relations);
    let mut invariant_factors = Vec::new();
    let mut generators = Vec::new();
    for (d, col) in quotient.invariant_factors() {
        assert!(d != 0, "cohomology with finite coefficients is finite");
        invariant_factors.push(d as u64);
        let x = quotient.generators.column(col);
        let values: Vec<Vec<Phase>> = x
            .chunks(k)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .map(|(c, &v)| Phase::new(v as i64, m[c] as i64))
                    .collect()
            })
            .collect();
        let rep = Cochain::from_values(module, n, values)?;
        debug_assert!(is_cocycle(&rep));
        generators.push(rep);
    }
    Ok(CohomologyGroup {
        invariant_factors,
        generators,
    })
}

// ---------------------------------------------------------------------------
// normalization and torsion reduction
// ---------------------------------------------------------------------------

/// A normalized representative together with the 2-cochain that shifts the
/// input onto it: `normalized = ω + dλ`.
pub struct NormalizedCocycle {
    pub cocycle: Cochain,
    pub shift: Cochain,
}

/// Replace a 3-cocycle (trivial action) by a cohomologous normalized one.
///
/// Two shifts suffice: `λ_1(g,h) = -ω(e,g,h)` kills the leading slot and
/// `λ_2(g,h) = ω'(g,e,e)` the middle one; vanishing in the trailing slot is
/// then automatic from the cocycle identity.
pub fn normalize(omega: &Cochain) -> Result<NormalizedCocycle, CohomologyError> {
    assert_eq!(omega.degree, 3, "normalize expects a 3-cocycle");
    if !omega.module.is_trivial_action() {
        return Err(CohomologyError::NonTrivialAction);
    }
    if !is_cocycle(omega) {
        return Err(CohomologyError::NotACocycle { tuple: vec![] });
    }
    if omega.is_normalized() {
        return Ok(NormalizedCocycle {
            cocycle: omega.clone(),
            shift: Cochain::zero(&omega.module, 2),
        });
    }
    let group = omega.group().clone();
    let e = group.identity();
    let mut lambda1 = Cochain::zero(&omega.module, 2);
    for g in group.elements() {
        for h in group.elements() {
            let v: Vec<Phase> = omega.value(&[e, g, h]).iter().map(|p| -p.clone()).collect();
            lambda1.set(&[g, h], v);
        }
    }
    let omega1 = shift_by_2cochain(omega, &lambda1)?;
    let mut lambda2 = Cochain::zero(&omega.module, 2);
    for g in group.elements() {
        for h in group.elements() {
            lambda2.set(&[g, h], omega1.value(&[g, e, e]).clone());
        }
    }
    let omega2 = shift_by_2cochain(&omega1, &lambda2)?;
    let shift = lambda1.add(&lambda2)?;
    assert!(omega2.is_normalized(), "normalization postcondition failed");
    debug_assert!(omega2 == shift_by_2cochain(omega, &shift)?);
    Ok(NormalizedCocycle {
        cocycle: omega2,
        shift,
    })
}

/// Replace a cocycle by a cohomologous one with denominators dividing `|G|`:
/// `ω' = ω - d(σ(ω)/|G|)` satisfies `|G|·ω' = 0`.
pub fn torsion_reduce(omega: &Cochain) -> Result<NormalizedCocycle, CohomologyError> {
    if !is_cocycle(omega) {
        return Err(CohomologyError::NotACocycle { tuple: vec![] });
    }
    let module = &omega.module;
    let lift = lift_rational(omega);
    let mut s = rat_sigma(module, &lift);
    let g = Rat::from_integer((module.group.order() as i64).into());
    for v in s.values.iter_mut() {
        for r in v.iter_mut() {
            *r /= &g;
        }
    }
    let w = rat_to_cochain(module, &s);
    let shift = w.scale(-1);
    let reduced = shift_by_2cochain(omega, &shift)?;
    debug_assert!(reduced.scale(module.group.order() as i64).is_zero());
    Ok(NormalizedCocycle {
        cocycle: reduced,
        shift,
    })
}
