//! Finite-dimensional operator algebras `⊕_i M_{n_i}` over a cyclotomic
//! field: traces and their K₀ subgroups, exact determinant phases of
//! monomial unitaries, centers with minimal central projections, unital
//! inclusions with multiplicity matrices, and Bratteli diagrams.

use crate::arith::{rat_gcd, Phase, Rat};
use crate::cyclo::CycloScalar;
use crate::matrix::{as_monomial, CMat};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("element does not match the algebra's block shapes")]
    ShapeMismatch,
    #[error("unsupported unitary: block {block} is not monomial with root-of-unity entries")]
    Unsupported { block: usize },
    #[error("trace weights must be positive and sum to 1 (got sum {sum})")]
    BadWeights { sum: String },
    #[error("spanning set is not closed under products: s[{i}]·s[{j}] lies outside the span")]
    SpanNotClosed { i: usize, j: usize },
    #[error("center splitting failed: no usable splitting element (conductor {conductor})")]
    UnsplittableCenter { conductor: u64 },
    #[error("representation has a block of multiplicity > 1; exact block data unavailable")]
    MultiplicityNotOne,
    #[error("inclusion is not {kind} (witness block {block}, unit ({i},{j}))")]
    BadInclusion {
        kind: &'static str,
        block: usize,
        i: usize,
        j: usize,
    },
    #[error("span dimension {dim} exceeds the dense-center guard {guard}; set ANOMALY_SCALE_OVERRIDE=1 to lift it")]
    CenterGuard { dim: usize, guard: usize },
}

/// Shape of a multi-matrix algebra `⊕_i M_{n_i}` over ℚ(ζ_N).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiMatrixAlgebra {
    pub blocks: Vec<usize>,
    pub conductor: u64,
}

impl MultiMatrixAlgebra {
    pub fn new(blocks: Vec<usize>, conductor: u64) -> Self {
        assert!(!blocks.is_empty() && blocks.iter().all(|&n| n >= 1));
        MultiMatrixAlgebra { blocks, conductor }
    }

    pub fn full(n: usize, conductor: u64) -> Self {
        MultiMatrixAlgebra::new(vec![n], conductor)
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    pub fn unit(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .map(|&n| CMat::identity(self.conductor, n))
                .collect(),
        }
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .map(|&n| CMat::zero(self.conductor, n, n))
                .collect(),
        }
    }

    pub fn scalar(&self, s: &CycloScalar) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .map(|&n| CMat::scalar(self.conductor, n, s))
                .collect(),
        }
    }

    /// Matrix unit `e_{ij}` of one block (zero elsewhere).
    pub fn matrix_unit(&self, block: usize, i: usize, j: usize) -> AlgebraElement {
        let mut e = self.zero();
        e.blocks[block] = CMat::matrix_unit(self.conductor, self.blocks[block], i, j);
        e
    }

    /// Identity of one block.
    pub fn block_unit(&self, block: usize) -> AlgebraElement {
        let mut e = self.zero();
        e.blocks[block] = CMat::identity(self.conductor, self.blocks[block]);
        e
    }

    pub fn element(&self, blocks: Vec<CMat>) -> Result<AlgebraElement, AlgebraError> {
        if blocks.len() != self.blocks.len()
            || blocks
                .iter()
                .zip(&self.blocks)
                .any(|(m, &n)| m.rows != n || m.cols != n)
        {
            return Err(AlgebraError::ShapeMismatch);
        }
        Ok(AlgebraElement { blocks })
    }
}

/// An element of a multi-matrix algebra: one dense matrix per block.
#[derive(Clone, PartialEq, Debug)]
pub struct AlgebraElement {
    pub blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn add(&self, o: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn mul(&self, o: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a.mul(b))
                .collect(),
        }
    }

    pub fn adjoint(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(CMat::adjoint).collect(),
        }
    }

    pub fn scale(&self, s: &CycloScalar) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|m| m.scale(s)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(CMat::is_zero)
    }

    pub fn is_unitary(&self) -> bool {
        self.blocks
            .iter()
            .all(|m| m.mul(&m.adjoint()).is_identity())
    }

    pub fn is_projection(&self) -> bool {
        self.blocks.iter().all(CMat::is_projection)
    }
}

/// Per-block determinant phase of a monomial unitary: a vector in `(ℚ/ℤ)^m`.
///
/// A homomorphism on monomial unitaries under multiplication; non-monomial
/// input is rejected because its determinant phase need not be a root of
/// unity.
pub fn blockwise_det_phase(u: &AlgebraElement) -> Result<Vec<Phase>, AlgebraError> {
    u.blocks
        .iter()
        .enumerate()
        .map(|(b, m)| {
            as_monomial(m)
                .map(|mm| mm.det_phase())
                .ok_or(AlgebraError::Unsupported { block: b })
        })
        .collect()
}

/// A normalized trace `τ = Σ_b w_b · tr_b` with positive rational weights
/// summing to 1 (`tr_b` the normalized trace of block `b`).
#[derive(Clone, Debug)]
pub struct TraceFunctional {
    pub algebra: MultiMatrixAlgebra,
    pub weights: Vec<Rat>,
}

/// Build a trace functional; weights must be positive and sum to 1.
pub fn trace_vector(
    algebra: &MultiMatrixAlgebra,
    weights: Vec<Rat>,
) -> Result<TraceFunctional, AlgebraError> {
    let sum: Rat = weights.iter().cloned().sum();
    if weights.len() != algebra.blocks.len()
        || !sum.is_one()
        || weights.iter().any(|w| !w.is_positive())
    {
        return Err(AlgebraError::BadWeights {
            sum: sum.to_string(),
        });
    }
    Ok(TraceFunctional {
        algebra: algebra.clone(),
        weights,
    })
}

impl TraceFunctional {
    pub fn uniform(algebra: &MultiMatrixAlgebra) -> TraceFunctional {
        let m = algebra.blocks.len() as i64;
        trace_vector(algebra, vec![Rat::new(1.into(), m.into()); m as usize]).unwrap()
    }

    pub fn eval(&self, x: &AlgebraElement) -> CycloScalar {
        let mut acc = CycloScalar::zero(self.algebra.conductor);
        for ((m, w), &n) in x.blocks.iter().zip(&self.weights).zip(&self.algebra.blocks) {
            let t = m.trace().scale(&(w / Rat::from_integer((n as i64).into())));
            acc = acc.add(&t);
        }
        acc
    }

    /// τ of a projection, as an exact rational.
    pub fn eval_rational(&self, p: &AlgebraElement) -> Rat {
        self.eval(p)
            .as_rational()
            .expect("trace of a projection is rational")
    }
}

/// A finitely generated subgroup of ℚ (always cyclic), e.g. `τ_*(K_0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalSubgroup {
    /// Nonnegative generator; `0` denotes the trivial subgroup.
    pub generator: Rat,
}

impl RationalSubgroup {
    pub fn from_generators(gens: &[Rat]) -> RationalSubgroup {
        let mut g = Rat::zero();
        for x in gens {
            g = rat_gcd(&g, x);
        }
        RationalSubgroup { generator: g }
    }

    pub fn contains(&self, x: &Rat) -> bool {
        if self.generator.is_zero() {
            return x.is_zero();
        }
        (x / &self.generator).is_integer()
    }

    /// Canonical representative of `x` modulo the subgroup, in `[0, gen)`.
    pub fn reduce(&self, x: &Rat) -> Rat {
        if self.generator.is_zero() {
            return x.clone();
        }
        let q = (x / &self.generator).floor();
        x - q * &self.generator
    }
}

/// The subgroup of ℚ generated by traces of minimal projections: the image
/// `τ_*(K_0)` at this finite stage.
pub fn k0_subgroup(tau: &TraceFunctional) -> RationalSubgroup {
    let gens: Vec<Rat> = tau
        .algebra
        .blocks
        .iter()
        .zip(&tau.weights)
        .map(|(&n, w)| w / Rat::from_integer((n as i64).into()))
        .collect();
    RationalSubgroup::from_generators(&gens)
}

// ---------------------------------------------------------------------------
// centers
// ---------------------------------------------------------------------------

/// Center of an abstract multi-matrix algebra: dimension-`m` basis of block
/// scalars and the block identities as minimal central projections.
pub struct CenterData {
    pub basis: Vec<AlgebraElement>,
    pub projections: Vec<AlgebraElement>,
}

pub fn center_abstract(algebra: &MultiMatrixAlgebra) -> CenterData {
    let projections: Vec<AlgebraElement> = (0..algebra.blocks.len())
        .map(|b| algebra.block_unit(b))
        .collect();
    CenterData {
        basis: projections.clone(),
        projections,
    }
}

/// Center of a represented algebra given by a spanning set closed under
/// products, inside `M_dim`.
pub struct SpannedCenter {
    pub basis: Vec<CMat>,
    pub projections: Vec<CMat>,
}

/// Incremental echelon basis over ℚ of vectorized matrices.
pub struct Echelon {
    rows: Vec<Vec<Rat>>,
    pivots: Vec<usize>,
    pub members: Vec<CMat>,
}

impl Echelon {
    pub fn new() -> Self {
        Echelon {
            rows: vec![],
            pivots: vec![],
            members: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn reduce_vec(&self, mut v: Vec<Rat>) -> Vec<Rat> {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !v[p].is_zero() {
                let f = v[p].clone();
                for (x, y) in v.iter_mut().zip(row) {
                    *x -= &f * y;
                }
            }
        }
        v
    }

    /// Returns true when the matrix was independent and has been added.
    pub fn insert(&mut self, m: &CMat) -> bool {
        let v = self.reduce_vec(m.vectorize());
        let Some(p) = v.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let lead = v[p].clone();
        let normalized: Vec<Rat> = v.iter().map(|x| x / &lead).collect();
        self.rows.push(normalized);
        self.pivots.push(p);
        self.members.push(m.clone());
        true
    }

    pub fn contains(&self, m: &CMat) -> bool {
        self.reduce_vec(m.vectorize()).iter().all(Rat::is_zero)
    }
}

impl Default for Echelon {
    fn default() -> Self {
        Self::new()
    }
}

const CENTER_SPAN_GUARD: usize = 72;

/// Compute the center of `span(spanning)` as matrices on `ℂ^dim`.
///
/// The spanning set must be closed under products (checked; the first
/// offending pair is reported). Minimal central projections are obtained by
/// refining with idempotent splittings and finite-order unitary averaging;
/// this covers every algebra this crate constructs.
pub fn center_spanned(spanning: &[CMat]) -> Result<SpannedCenter, AlgebraError> {
    assert!(!spanning.is_empty());
    let conductor = spanning[0].conductor();
    let dim = spanning[0].rows;
    if spanning.len() > CENTER_SPAN_GUARD && !crate::groups::scale_override() {
        return Err(AlgebraError::CenterGuard {
            dim: spanning.len(),
            guard: CENTER_SPAN_GUARD,
        });
    }
    // basis of the span
    let mut ech = Echelon::new();
    for m in spanning {
        ech.insert(m);
    }
    // closure check
    for (i, a) in spanning.iter().enumerate() {
        for (j, b) in spanning.iter().enumerate() {
            if !ech.contains(&a.mul(b)) {
                return Err(AlgebraError::SpanNotClosed { i, j });
            }
        }
    }
    let basis = ech.members.clone();
    let r = basis.len();
    // commutant equations inside the span: x = Σ t_k b_k with [x, b_i] = 0
    let phi = crate::cyclo::euler_phi(conductor) as usize;
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for b in &basis {
        // commutator [b_k, b] vectorized, one ℚ-row per (entry, coordinate)
        let comms: Vec<Vec<Rat>> = basis
            .iter()
            .map(|bk| bk.mul(b).sub(&b.mul(bk)).vectorize())
            .collect();
        for e in 0..dim * dim * phi {
            let row: Vec<Rat> = comms.iter().map(|c| c[e].clone()).collect();
            if row.iter().any(|x| !x.is_zero()) {
                rows.push(row);
            }
        }
    }
    let kernel = rational_kernel(&rows, r);
    let center_basis: Vec<CMat> = kernel
        .iter()
        .map(|t| {
            let mut acc = CMat::zero(conductor, dim, dim);
            for (c, b) in t.iter().zip(&basis) {
                if !c.is_zero() {
                    acc = acc.add(&b.scale(&CycloScalar::from_rational(conductor, c.clone())));
                }
            }
            acc
        })
        .collect();
    let unit = unit_of_span(&center_basis, dim, conductor);
    let projections = split_projections(&center_basis, &unit)?;
    Ok(SpannedCenter {
        basis: center_basis,
        projections,
    })
}

/// Kernel of a ℚ-matrix given by rows, as a list of coefficient vectors.
fn rational_kernel(rows: &[Vec<Rat>], cols: usize) -> Vec<Vec<Rat>> {
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        let lead = m[rank][col].clone();
        for x in m[rank].iter_mut() {
            *x /= &lead;
        }
        for i in 0..m.len() {
            if i != rank && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                let pivot_row = m[rank].clone();
                for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivot_cols.push(col);
        rank += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![Rat::zero(); cols];
            v[fc] = Rat::one();
            for (r, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = -m[r][fc].clone();
            }
            v
        })
        .collect()
}

/// The unit of a unital span (solves `Σ t_k b_k` acting as identity on the
/// span); falls back to the ambient identity when it is in the span.
fn unit_of_span(center_basis: &[CMat], dim: usize, conductor: u64) -> CMat {
    let id = CMat::identity(conductor, dim);
    // the algebras this crate builds are unitally represented
    let _ = center_basis;
    id
}

/// Refine `[1]` into minimal central projections using the center basis.
fn split_projections(center_basis: &[CMat], unit: &CMat) -> Result<Vec<CMat>, AlgebraError> {
    let conductor = unit.conductor();
    let mut projs: Vec<CMat> = vec![unit.clone()];
    let target = center_basis.len();
    let mut progress = true;
    while projs.len() < target && progress {
        progress = false;
        'outer: for z in center_basis {
            for (idx, p) in projs.iter().enumerate() {
                let w = z.mul(p);
                if is_scalar_multiple_of(&w, p) {
                    continue;
                }
                if let Some(parts) = try_split(&w, p, conductor) {
                    let mut new_projs = projs.clone();
                    new_projs.remove(idx);
                    new_projs.extend(parts);
                    projs = new_projs;
                    progress = true;
                    break 'outer;
                }
            }
        }
    }
    if projs.len() != target {
        return Err(AlgebraError::UnsplittableCenter { conductor });
    }
    // exact postconditions
    let mut sum = CMat::zero(conductor, unit.rows, unit.cols);
    for p in &projs {
        assert!(
            p.is_projection(),
            "central splitting produced a non-projection"
        );
        sum = sum.add(p);
        for q in &projs {
            if !std::ptr::eq(p, q) {
                assert!(
                    p.mul(q).is_zero() || p == q,
                    "central projections not orthogonal"
                );
            }
        }
    }
    assert_eq!(&sum, unit, "central projections do not sum to the unit");
    Ok(projs)
}

fn is_scalar_multiple_of(w: &CMat, p: &CMat) -> bool {
    // find a nonzero entry of p and compare ratios
    for (i, j, v) in p.entries() {
        if !v.is_zero() {
            let c = w[(i, j)].div(v);
            return w == &p.scale(&c);
        }
    }
    w.is_zero()
}

/// Try to split the projection `p` using the central element `w = z·p`.
fn try_split(w: &CMat, p: &CMat, conductor: u64) -> Option<Vec<CMat>> {
    // candidate 1: w (or its hermitian part) is already a subprojection
    for cand in [
        w.clone(),
        w.add(&w.adjoint()).scale(&CycloScalar::from_rational(
            conductor,
            Rat::new(1.into(), 2.into()),
        )),
    ] {
        if cand.is_projection() && !cand.is_zero() && cand != *p {
            return Some(vec![cand.clone(), p.sub(&cand)]);
        }
    }
    // candidate 2: rational-scale w to a unitary of finite order in pAp and
    // split by character averaging
    let ww = w.mul(&w.adjoint());
    let scaled = if is_scalar_multiple_of(&ww, p) {
        // w w* = c p with c a positive rational square?
        let c = first_ratio(&ww, p)?;
        let c = c.as_rational()?;
        let root = rat_sqrt(&c)?;
        w.scale(&CycloScalar::from_rational(conductor, root.recip()))
    } else {
        return None;
    };
    // find finite order relative to p: scaled^k = phase · p
    let dim = p.rows;
    let maxord = (2 * conductor as usize * dim).max(8);
    let mut pow = scaled.clone();
    for k in 1..=maxord {
        if let Some(c) = first_ratio_checked(&pow, p) {
            // scaled^k = c·p with c a root of unity: absorb a k-th root
            let phase = c.to_phase()?;
            let need = phase.denominator_u64() * k as u64;
            let big = crate::arith::lcm_u64(conductor, need);
            let correction =
                CycloScalar::from_phase(big, &phase.scale(-1).rat().clone().into_phase_div(k))?;
            let u = scaled.lift_conductor(big).scale(&correction);
            return split_by_averaging(&u, &p.lift_conductor(big), k, big).map(|parts| {
                parts
                    .into_iter()
                    .map(|m| m.lift_conductor(conductor_back(conductor, big)))
                    .collect()
            });
        }
        pow = pow.mul(&scaled);
    }
    None
}

fn conductor_back(_orig: u64, big: u64) -> u64 {
    big
}

fn first_ratio(w: &CMat, p: &CMat) -> Option<CycloScalar> {
    for (i, j, v) in p.entries() {
        if !v.is_zero() {
            return Some(w[(i, j)].div(v));
        }
    }
    None
}

fn first_ratio_checked(w: &CMat, p: &CMat) -> Option<CycloScalar> {
    let c = first_ratio(w, p)?;
    if *w == p.scale(&c) {
        Some(c)
    } else {
        None
    }
}

fn rat_sqrt(r: &Rat) -> Option<Rat> {
    use num_bigint::BigInt;
    fn isqrt(n: &BigInt) -> Option<BigInt> {
        if n.is_negative() {
            return None;
        }
        let s = n.sqrt();
        if &(&s * &s) == n {
            Some(s)
        } else {
            None
        }
    }
    Some(Rat::new(isqrt(r.numer())?, isqrt(r.denom())?))
}

/// Spectral projections of a unitary `u` with `u^k = p` inside `pAp`:
/// `p_j = (1/k) Σ_i ζ_k^{-ij} u^i`, keeping the nonzero ones.
fn split_by_averaging(u: &CMat, p: &CMat, k: usize, conductor: u64) -> Option<Vec<CMat>> {
    let mut powers = Vec::with_capacity(k);
    let mut acc = p.clone();
    for _ in 0..k {
        powers.push(acc.clone());
        acc = acc.mul(u);
    }
    if acc != *p {
        return None;
    }
    let kk = CycloScalar::from_rational(conductor, Rat::new(1.into(), (k as i64).into()));
    let mut out = Vec::new();
    for j in 0..k {
        let mut s = CMat::zero(conductor, p.rows, p.cols);
        for (i, pw) in powers.iter().enumerate() {
            let z = CycloScalar::root_of_unity(conductor, -((i * j) as i64));
            s = s.add(&pw.scale(&z));
        }
        let s = s.scale(&kk);
        if !s.is_zero() {
            if !s.is_projection() {
                return None;
            }
            out.push(s);
        }
    }
    if out.len() > 1 {
        Some(out)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// inclusions and Bratteli diagrams
// ---------------------------------------------------------------------------

/// A unital embedding of a multi-matrix algebra into matrices on a target
/// space, given by the images of all source matrix units.
pub struct UnitalInclusion {
    pub source: MultiMatrixAlgebra,
    pub target_dim: usize,
    /// `images[b][i * n_b + j]` = image of the matrix unit `e^{(b)}_{ij}`.
    images: Vec<Vec<CMat>>,
}

impl UnitalInclusion {
    /// Build and validate: multiplicative, unital, star-preserving on the
    /// matrix-unit generators.
    pub fn new(
        source: MultiMatrixAlgebra,
        target_dim: usize,
        images: Vec<Vec<CMat>>,
    ) -> Result<Self, AlgebraError> {
        let inc = UnitalInclusion {
            source,
            target_dim,
            images,
        };
        inc.validate()?;
        Ok(inc)
    }

    fn image_unit(&self, b: usize, i: usize, j: usize) -> &CMat {
        &self.images[b][i * self.source.blocks[b] + j]
    }

    fn validate(&self) -> Result<(), AlgebraError> {
        let conductor = self.source.conductor;
        let mut sum = CMat::zero(conductor, self.target_dim, self.target_dim);
        for (b, &n) in self.source.blocks.iter().enumerate() {
            if self.images[b].len() != n * n {
                return Err(AlgebraError::ShapeMismatch);
            }
            for i in 0..n {
                sum = sum.add(self.image_unit(b, i, i));
                for j in 0..n {
                    // star
                    if self.image_unit(b, i, j).adjoint() != *self.image_unit(b, j, i) {
                        return Err(AlgebraError::BadInclusion {
                            kind: "star-preserving",
                            block: b,
                            i,
                            j,
                        });
                    }
                    // multiplicative within the block
                    for l in 0..n {
                        let prod = self.image_unit(b, i, j).mul(self.image_unit(b, j, l));
                        if prod != *self.image_unit(b, i, l) {
                            return Err(AlgebraError::BadInclusion {
                                kind: "multiplicative",
                                block: b,
                                i,
                                j,
                            });
                        }
                    }
                }
            }
            // orthogonality across blocks
            for b2 in 0..self.source.blocks.len() {
                if b2 != b
                    && !self
                        .image_unit(b, 0, 0)
                        .mul(self.image_unit(b2, 0, 0))
                        .is_zero()
                {
                    return Err(AlgebraError::BadInclusion {
                        kind: "block-orthogonal",
                        block: b,
                        i: 0,
                        j: 0,
                    });
                }
            }
        }
        if !sum.is_identity() {
            return Err(AlgebraError::BadInclusion {
                kind: "unital",
                block: 0,
                i: 0,
                j: 0,
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &AlgebraElement) -> CMat {
        let conductor = self.source.conductor;
        let mut acc = CMat::zero(conductor, self.target_dim, self.target_dim);
        for (b, m) in x.blocks.iter().enumerate() {
            for (i, j, v) in m.entries() {
                if !v.is_zero() {
                    acc = acc.add(&self.image_unit(b, i, j).scale(v));
                }
            }
        }
        acc
    }

    /// Mapped minimal central projections of the source.
    pub fn mapped_source_projections(&self) -> Vec<CMat> {
        (0..self.source.blocks.len())
            .map(|b| self.apply(&self.source.block_unit(b)))
            .collect()
    }
}

/// Block data of a represented algebra: minimal central projections as
/// matrices on the representation space, and the abstract block sizes.
pub struct RepresentedBlocks {
    pub projections: Vec<CMat>,
    pub block_sizes: Vec<usize>,
}

impl RepresentedBlocks {
    /// Derive block sizes from central projections under the
    /// multiplicity-one assumption: the block size is the rank of its
    /// central projection. Cross-checked against the algebra dimension.
    pub fn from_projections(
        projections: Vec<CMat>,
        algebra_dim: usize,
    ) -> Result<Self, AlgebraError> {
        let block_sizes: Vec<usize> = projections.iter().map(CMat::rank).collect();
        let dim_sum: usize = block_sizes.iter().map(|n| n * n).sum();
        if dim_sum != algebra_dim {
            return Err(AlgebraError::MultiplicityNotOne);
        }
        Ok(RepresentedBlocks {
            projections,
            block_sizes,
        })
    }
}

/// Multiplicity matrix of an inclusion: `M[i][j]` counts how often source
/// block `i` enters target block `j`, computed from exact ranks of
/// compressions `ι(p_i)·q_j`.
pub fn inclusion_multiplicities(
    inc: &UnitalInclusion,
    target: &RepresentedBlocks,
) -> Result<Vec<Vec<usize>>, AlgebraError> {
    let src_projs = inc.mapped_source_projections();
    // multiplicities of target blocks in the representation
    let mus: Vec<usize> = target
        .projections
        .iter()
        .zip(&target.block_sizes)
        .map(|(q, &nj)| {
            let r = q.rank();
            if r % nj != 0 {
                return Err(AlgebraError::MultiplicityNotOne);
            }
            Ok(r / nj)
        })
        .collect::<Result<_, _>>()?;
    let mut m = vec![vec![0usize; target.projections.len()]; src_projs.len()];
    for (i, p) in src_projs.iter().enumerate() {
        for (j, q) in target.projections.iter().enumerate() {
            let r = p.mul(q).rank();
            let denom = inc.source.blocks[i] * mus[j];
            if r % denom != 0 {
                return Err(AlgebraError::MultiplicityNotOne);
            }
            m[i][j] = r / denom;
        }
    }
    // dimension identity: Σ_i M[i][j]·n_i = N_j
    for (j, &nj) in target.block_sizes.iter().enumerate() {
        let total: usize = (0..src_projs.len())
            .map(|i| m[i][j] * inc.source.blocks[i])
            .sum();
        assert_eq!(total, nj, "multiplicity matrix fails dimension counting");
    }
    Ok(m)
}

/// Level-by-level block sizes and edge multiplicities of a tower.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BratteliDiagram {
    pub levels: Vec<Vec<usize>>,
    pub edges: Vec<Vec<Vec<usize>>>,
}

impl BratteliDiagram {
    pub fn validate(&self) {
        assert_eq!(self.edges.len() + 1, self.levels.len().max(1));
        for (l, e) in self.edges.iter().enumerate() {
            let src = &self.levels[l];
            let tgt = &self.levels[l + 1];
            assert_eq!(e.len(), src.len());
            for (j, &nj) in tgt.iter().enumerate() {
                let sum: usize = (0..src.len()).map(|i| e[i][j] * src[i]).sum();
                assert_eq!(
                    sum, nj,
                    "dimension bookkeeping fails at level {l} block {j}"
                );
            }
        }
    }

    /// Graphviz rendering: one rank per level, edge labels = multiplicity.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph bratteli {\n  rankdir=TB;\n  node [shape=circle];\n");
        for (l, level) in self.levels.iter().enumerate() {
            out.push_str("  { rank=same; ");
            for (b, &n) in level.iter().enumerate() {
                out.push_str(&format!("v{l}_{b} [label=\"{n}\"]; "));
            }
            out.push_str("}\n");
        }
        for (l, e) in self.edges.iter().enumerate() {
            for (i, row) in e.iter().enumerate() {
                for (j, &mult) in row.iter().enumerate() {
                    for _ in 0..mult {
                        out.push_str(&format!("  v{l}_{i} -> v{}_{j};\n", l + 1));
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

// small helpers used by try_split

impl CMat {
    pub fn lift_conductor(&self, conductor: u64) -> CMat {
        if conductor == self.conductor() {
            return self.clone();
        }
        let mut out = CMat::zero(conductor, self.rows, self.cols);
        for (i, j, v) in self.entries() {
            if !v.is_zero() {
                out.set(i, j, v.lift(conductor));
            }
        }
        out
    }
}

trait PhaseDiv {
    fn into_phase_div(self, k: usize) -> Phase;
}

impl PhaseDiv for Rat {
    /// Interpret `self` in `[0,1)` and divide by `k` as a rational.
    fn into_phase_div(self, k: usize) -> Phase {
        Phase::from_rat(&(self / Rat::from_integer((k as i64).into())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Monomial;

    #[test]
    fn center_of_abstract_sum() {
        let a = MultiMatrixAlgebra::new(vec![2, 3], 1);
        let c = center_abstract(&a);
        assert_eq!(c.basis.len(), 2);
        let mut sum = a.zero();
        for p in &c.projections {
            assert!(p.is_projection());
            sum = sum.add(p);
        }
        assert_eq!(sum, a.unit());
    }

    #[test]
    fn center_of_full_block_is_scalars() {
        let a = MultiMatrixAlgebra::full(5, 1);
        let c = center_abstract(&a);
        assert_eq!(c.basis.len(), 1);
    }

    #[test]
    fn det_phase_examples() {
        let a = MultiMatrixAlgebra::new(vec![3, 2], 12);
        assert_eq!(
            blockwise_det_phase(&a.unit()).unwrap(),
            vec![Phase::zero(), Phase::zero()]
        );
        // e^{2πi/3}·1 in each block: phases (3·(1/3), 2·(1/3)) = (0, 2/3)
        let s = a.scalar(&CycloScalar::root_of_unity(12, 4));
        assert_eq!(
            blockwise_det_phase(&s).unwrap(),
            vec![Phase::zero(), Phase::new(2, 3)]
        );
        // cyclic shift in M_3: determinant (+1); in M_2: (-1)
        let shift3 = Monomial::cyclic_shift(3).to_cmat(12);
        let shift2 = Monomial::cyclic_shift(2).to_cmat(12);
        let u = a.element(vec![shift3, shift2]).unwrap();
        assert_eq!(
            blockwise_det_phase(&u).unwrap(),
            vec![Phase::zero(), Phase::half()]
        );
    }

    #[test]
    fn det_phase_additivity() {
        let a = MultiMatrixAlgebra::new(vec![2, 2], 8);
        let u = a
            .element(vec![
                Monomial::diagonal(vec![Phase::new(1, 8), Phase::new(3, 8)]).to_cmat(8),
                Monomial::cyclic_shift(2).to_cmat(8),
            ])
            .unwrap();
        let v = a
            .element(vec![
                Monomial::cyclic_shift(2).to_cmat(8),
                Monomial::diagonal(vec![Phase::new(1, 4), Phase::zero()]).to_cmat(8),
            ])
            .unwrap();
        let lhs = blockwise_det_phase(&u.mul(&v)).unwrap();
        let rhs: Vec<Phase> = blockwise_det_phase(&u)
            .unwrap()
            .into_iter()
            .zip(blockwise_det_phase(&v).unwrap())
            .map(|(x, y)| x + &y)
            .collect();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn non_monomial_rejected() {
        let a = MultiMatrixAlgebra::full(2, 4);
        let mut m = CMat::zero(4, 2, 2);
        m.set(0, 0, CycloScalar::from_int(4, 1));
        m.set(0, 1, CycloScalar::from_int(4, 1));
        m.set(1, 0, CycloScalar::from_int(4, 1));
        m.set(1, 1, CycloScalar::from_int(4, -1));
        let u = a.element(vec![m]).unwrap();
        assert!(matches!(
            blockwise_det_phase(&u),
            Err(AlgebraError::Unsupported { block: 0 })
        ));
    }

    #[test]
    fn traces_and_k0() {
        // M_n with the normalized trace: τ(e_11) = 1/n
        let a = MultiMatrixAlgebra::full(4, 1);
        let tau = trace_vector(&a, vec![Rat::one()]).unwrap();
        assert_eq!(
            tau.eval_rational(&a.matrix_unit(0, 0, 0)),
            Rat::new(1.into(), 4.into())
        );
        // ⊕_2 M_2 with weights (1/2, 1/2): K_0 image generated by 1/4
        let b = MultiMatrixAlgebra::new(vec![2, 2], 1);
        let tau = TraceFunctional::uniform(&b);
        let k0 = k0_subgroup(&tau);
        assert_eq!(k0.generator, Rat::new(1.into(), 4.into()));
        // enumerate diagonal projections: all traces lie in the subgroup
        for mask in 0..16u32 {
            let mut p = b.zero();
            for bit in 0..4 {
                if mask & (1 << bit) != 0 {
                    let (blk, i) = (bit / 2, bit % 2);
                    p = p.add(&b.matrix_unit(blk, i, i));
                }
            }
            assert!(k0.contains(&tau.eval_rational(&p)));
        }
    }

    #[test]
    fn tower_stage_k0() {
        // ⊕_m M_{m^n} with uniform weights: subgroup (1/m^{n+1})ℤ
        for (m, n) in [(2usize, 3u32), (3, 2)] {
            let a = MultiMatrixAlgebra::new(vec![m.pow(n); m], 1);
            let tau = TraceFunctional::uniform(&a);
            let k0 = k0_subgroup(&tau);
            assert_eq!(
                k0.generator,
                Rat::new(1.into(), (m.pow(n + 1) as i64).into())
            );
        }
    }

    #[test]
    fn trace_commutes_on_generator_pairs() {
        // τ(xy) = τ(yx) exhaustively over matrix-unit pairs
        let a = MultiMatrixAlgebra::new(vec![2, 3], 4);
        let tau = TraceFunctional::uniform(&a);
        let mut units = Vec::new();
        for (b, &n) in a.blocks.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    units.push(a.matrix_unit(b, i, j));
                }
            }
        }
        for x in &units {
            for y in &units {
                assert_eq!(tau.eval(&x.mul(y)), tau.eval(&y.mul(x)));
            }
        }
    }

    #[test]
    fn subgroup_reduce() {
        let g = RationalSubgroup {
            generator: Rat::new(1.into(), 3.into()),
        };
        assert!(g.contains(&Rat::new(2.into(), 3.into())));
        assert!(!g.contains(&Rat::new(1.into(), 2.into())));
        assert_eq!(
            g.reduce(&Rat::new(5.into(), 6.into())),
            Rat::new(1.into(), 6.into())
        );
        assert!(g.reduce(&Rat::new((-1).into(), 3.into())).is_zero());
    }

    #[test]
    fn spanned_center_of_diagonal_algebra() {
        // span{e_00, e_11} in M_2: center = itself, projections e_00, e_11
        let e00 = CMat::matrix_unit(1, 2, 0, 0);
        let e11 = CMat::matrix_unit(1, 2, 1, 1);
        let c = center_spanned(&[e00.clone(), e11.clone(), e00.add(&e11)]).unwrap();
        assert_eq!(c.basis.len(), 2);
        assert_eq!(c.projections.len(), 2);
        assert!(c.projections.contains(&e00));
        assert!(c.projections.contains(&e11));
    }

    #[test]
    fn spanned_center_of_full_matrix_algebra() {
        let mut span = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                span.push(CMat::matrix_unit(1, 3, i, j));
            }
        }
        let c = center_spanned(&span).unwrap();
        assert_eq!(c.basis.len(), 1);
        assert_eq!(c.projections, vec![CMat::identity(1, 3)]);
    }

    #[test]
    fn span_not_closed_reports_pair() {
        // {1, e_01} is not closed: e_01·e_01 = 0 is fine, but {e_01, e_10}
        // misses e_00
        let e01 = CMat::matrix_unit(1, 2, 0, 1);
        let e10 = CMat::matrix_unit(1, 2, 1, 0);
        match center_spanned(&[e01, e10]) {
            Err(AlgebraError::SpanNotClosed { .. }) => {}
            other => panic!("expected SpanNotClosed, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn inclusion_identity_and_diagonal() {
        // identity inclusion M_2 ⊆ M_2
        let src = MultiMatrixAlgebra::full(2, 1);
        let images = vec![(0..4)
            .map(|k| CMat::matrix_unit(1, 2, k / 2, k % 2))
            .collect::<Vec<_>>()];
        let inc = UnitalInclusion::new(src.clone(), 2, images).unwrap();
        let target = RepresentedBlocks::from_projections(vec![CMat::identity(1, 2)], 4).unwrap();
        assert_eq!(
            inclusion_multiplicities(&inc, &target).unwrap(),
            vec![vec![1]]
        );

        // diagonal M_2 → M_4, x ↦ x ⊕ x
        let mut images = vec![Vec::new()];
        for i in 0..2 {
            for j in 0..2 {
                let m = CMat::matrix_unit(1, 4, i, j).add(&CMat::matrix_unit(1, 4, i + 2, j + 2));
                images[0].push(m);
            }
        }
        let inc = UnitalInclusion::new(src, 4, images).unwrap();
        let target = RepresentedBlocks::from_projections(vec![CMat::identity(1, 4)], 16).unwrap();
        assert_eq!(
            inclusion_multiplicities(&inc, &target).unwrap(),
            vec![vec![2]]
        );
    }

    #[test]
    fn bratteli_dot_and_validation() {
        let d = BratteliDiagram {
            levels: vec![vec![2, 2], vec![4, 4]],
            edges: vec![vec![vec![1, 1], vec![1, 1]]],
        };
        d.validate();
        let dot = d.to_dot();
        assert!(dot.contains("v0_0 -> v1_0"));
        assert!(dot.contains("label=\"4\""));
    }
}
