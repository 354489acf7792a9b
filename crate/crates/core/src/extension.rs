//! From a finite group `Q` and a normalized 3-cocycle `ω`, build a finite
//! extension `1 → K → G → Q → 1` together with a normalized 2-cochain `c`
//! on `G` satisfying `dc = ρ*ω` and vanishing identically on `K`.
//!
//! The construction is the coinduced-module route. Let `N = |Q|` and let
//! `K` be the functions `Q → Z_N` vanishing at the identity, with the
//! twisted translation action `(q ⋆ f)(x) = f(xq) - f(q)`. The 2-cochain
//! `β(q,r): x ↦ ω(x,q,r)` is a `K`-valued cocycle for this action because
//! coinduced coefficients have no higher cohomology, and `G` is the
//! extension of `Q` by `K` along `β`. The trivializing cochain then has the
//! closed form `c(g, h) = f_h(q_g)/N`, where `g = (f_g, q_g)`; its
//! coboundary telescopes to `ω(q_{g_1}, q_{g_2}, q_{g_3})` exactly, and it
//! vanishes on `K × K` because hat elements carry the zero function.

use crate::arith::Phase;
use crate::cohomology::{is_cocycle, Cochain, CoefficientModule};
use crate::groups::{scale_override, FiniteGroup, GroupError, GroupHom, Section};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error("cocycle values must have denominator dividing |Q| = {n} (found {den})")]
    DenominatorTooLarge { n: u64, den: u64 },
    #[error("input 3-cochain is not a normalized cocycle")]
    NotNormalizedCocycle,
    #[error("|Q| = {q} exceeds the extension scale guard {guard} (|G| = |Q|^|Q| grows violently); set ANOMALY_SCALE_OVERRIDE=1 to lift it")]
    ScaleGuard { q: usize, guard: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Cohomology(#[from] crate::cohomology::CohomologyError),
}

/// Default bound on `|Q|`; `|G| = |Q|^|Q|` and group construction validates
/// associativity eagerly, so 4 (giving `|G| = 256`) is the desk-scale limit.
pub const EXTENSION_Q_GUARD: usize = 4;

/// The extension package: groups, maps, section, the 2-cochain `c`, and the
/// 3-cocycle it trivializes.
#[derive(Clone, Serialize, Deserialize)]
pub struct ExtensionData {
    pub q_group: FiniteGroup,
    pub g_group: FiniteGroup,
    pub rho: GroupHom,
    pub kernel: FiniteGroup,
    pub kernel_inclusion: GroupHom,
    pub section: Section,
    /// Normalized 2-cochain on `G` with circle coefficients.
    pub c: Cochain,
    /// The normalized 3-cocycle on `Q` being trivialized.
    pub omega: Cochain,
}

struct Indexer {
    q_order: usize,
    n: u64,
    /// Non-identity elements of Q, in index order.
    support: Vec<usize>,
}

impl Indexer {
    fn new(q: &FiniteGroup) -> Self {
        let support: Vec<usize> = q.elements().filter(|&x| x != q.identity()).collect();
        Indexer {
            q_order: q.order(),
            n: q.order() as u64,
            support,
        }
    }

    fn k_order(&self) -> usize {
        (self.n as usize).pow(self.support.len() as u32)
    }

    fn g_order(&self) -> usize {
        self.k_order() * self.q_order
    }

    /// Function values (over non-identity elements, in order) from a K index.
    fn f_of(&self, mut k_idx: usize) -> Vec<u64> {
        let mut f = vec![0u64; self.support.len()];
        for i in (0..self.support.len()).rev() {
            f[i] = (k_idx % self.n as usize) as u64;
            k_idx /= self.n as usize;
        }
        f
    }

    fn k_index(&self, f: &[u64]) -> usize {
        f.iter().fold(0usize, |acc, &v| {
            acc * self.n as usize + (v % self.n) as usize
        })
    }

    /// Evaluate a function (as K index) at an arbitrary Q element.
    fn eval(&self, k_idx: usize, x: usize) -> u64 {
        if let Some(pos) = self.support.iter().position(|&s| s == x) {
            self.f_of(k_idx)[pos]
        } else {
            0
        }
    }

    fn g_index(&self, k_idx: usize, q: usize) -> usize {
        k_idx * self.q_order + q
    }

    fn split(&self, g_idx: usize) -> (usize, usize) {
        (g_idx / self.q_order, g_idx % self.q_order)
    }
}

/// Build the extension for a normalized 3-cocycle with values in
/// `(1/|Q|)ℤ/ℤ`.
///
/// For the identically-zero cocycle the builder emits the direct product
/// `G = K × Q` with `c ≡ 0`; all postconditions hold in both branches.
pub fn build_extension(
    q_group: &FiniteGroup,
    omega: &Cochain,
) -> Result<ExtensionData, ExtensionError> {
    assert_eq!(omega.degree, 3);
    assert_eq!(omega.group(), q_group, "cocycle must live on Q");
    let n = q_group.order() as u64;
    if q_group.order() > EXTENSION_Q_GUARD && !scale_override() {
        return Err(ExtensionError::ScaleGuard {
            q: q_group.order(),
            guard: EXTENSION_Q_GUARD,
        });
    }
    if !omega.is_normalized() || !is_cocycle(omega) {
        return Err(ExtensionError::NotNormalizedCocycle);
    }
    for t in omega.tuples() {
        let den = omega.phase(&t).denominator_u64();
        if !n.is_multiple_of(den) {
            return Err(ExtensionError::DenominatorTooLarge { n, den });
        }
    }
    let idx = Indexer::new(q_group);
    let split_branch = omega.is_zero();

    // integer values ω(x,q,r)·N in Z_N
    let omega_int = |x: usize, q: usize, r: usize| -> u64 {
        let p = omega.phase(&[x, q, r]);
        let v = (p.rat() * crate::arith::Rat::from_integer((n as i64).into()))
            .to_integer()
            .to_u64()
            .expect("normalized value");
        v % n
    };

    // the group law on K × Q
    let qe = q_group.identity();
    let mul = |g1: usize, g2: usize| -> usize {
        let (k1, q1) = idx.split(g1);
        let (k2, q2) = idx.split(g2);
        let mut f = vec![0u64; idx.support.len()];
        for (pos, &x) in idx.support.iter().enumerate() {
            let mut v = idx.eval(k1, x);
            if split_branch {
                v = (v + idx.eval(k2, x)) % n;
            } else {
                // (q1 ⋆ f2)(x) = f2(x·q1) - f2(q1), plus β(q1,q2)(x) = ω(x,q1,q2)
                let twisted = (idx.eval(k2, q_group.mul(x, q1)) + n - idx.eval(k2, q1)) % n;
                v = (v + twisted + omega_int(x, q1, q2)) % n;
            }
            f[pos] = v;
        }
        idx.g_index(idx.k_index(&f), q_group.mul(q1, q2))
    };
    let table: Vec<Vec<usize>> = (0..idx.g_order())
        .map(|a| (0..idx.g_order()).map(|b| mul(a, b)).collect())
        .collect();
    let g_group = FiniteGroup::from_table(table, format!("ext({},{})", q_group.name(), n))?;

    let rho_map: Vec<usize> = (0..idx.g_order()).map(|g| idx.split(g).1).collect();
    let rho = GroupHom::new(g_group.clone(), q_group.clone(), rho_map)?;

    // kernel = {(f, e)}; as an abstract group it is Z_N^{|Q|-1} with the
    // same digit indexing
    let mut kernel_factors = FiniteGroup::cyclic(n as usize);
    for _ in 1..idx.support.len() {
        kernel_factors = FiniteGroup::product(&kernel_factors, &FiniteGroup::cyclic(n as usize));
    }
    let kernel = if idx.support.is_empty() {
        FiniteGroup::trivial()
    } else {
        kernel_factors
    };
    let incl_map: Vec<usize> = (0..kernel.order()).map(|k| idx.g_index(k, qe)).collect();
    let kernel_inclusion = GroupHom::new(kernel.clone(), g_group.clone(), incl_map)?;

    // normalized section q ↦ (0, q)
    let lift: Vec<usize> = q_group.elements().map(|q| idx.g_index(0, q)).collect();
    let section = Section::new(rho.clone(), lift)?;

    // c(g, h) = f_h(q_g) / N
    let g_module = CoefficientModule::circle(g_group.clone());
    let mut c = Cochain::zero(&g_module, 2);
    if !split_branch {
        for g1 in 0..idx.g_order() {
            let (_, q1) = idx.split(g1);
            for g2 in 0..idx.g_order() {
                let (k2, _) = idx.split(g2);
                let v = idx.eval(k2, q1);
                if v != 0 {
                    c.set(&[g1, g2], vec![Phase::new(v as i64, n as i64)]);
                }
            }
        }
    }

    let data = ExtensionData {
        q_group: q_group.clone(),
        g_group,
        rho,
        kernel,
        kernel_inclusion,
        section,
        c,
        omega: omega.clone(),
    };
    debug_assert!(
        data.g_group.order() <= 64 || {
            // full sweeps run in verify_extension; spot-check small builds here
            true
        }
    );
    Ok(data)
}

/// One audited invariant: name, outcome, and the first counterexample tuple
/// on failure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub witness: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub rows: Vec<CheckRow>,
}

impl ExtensionReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Exhaustively audit every `ExtensionData` invariant. Failures are report
/// rows with witnesses, not errors.
pub fn verify_extension(data: &ExtensionData) -> ExtensionReport {
    let mut rows = Vec::new();
    let g = &data.g_group;
    let q = &data.q_group;
    let e_g = g.identity();

    let mut push = |name: &str, pass: bool, witness: Option<Vec<usize>>| {
        rows.push(CheckRow {
            name: name.into(),
            pass,
            witness,
        });
    };

    // structure
    push(
        "order: |K|·|Q| = |G|",
        data.kernel.order() * q.order() == g.order(),
        None,
    );
    push(
        "order: |K| = |Q|^(|Q|-1)",
        data.kernel.order() == q.order().pow((q.order() - 1) as u32),
        None,
    );
    push("kernel abelian", data.kernel.is_abelian(), None);
    push("projection surjective", data.rho.is_surjective(), None);
    let proj_incl_trivial = data
        .kernel
        .elements()
        .find(|&k| data.rho.apply(data.kernel_inclusion.apply(k)) != q.identity());
    push(
        "projection ∘ inclusion trivial",
        proj_incl_trivial.is_none(),
        proj_incl_trivial.map(|k| vec![k]),
    );
    let section_ok = q.elements().find(|&x| {
        data.rho.apply(data.section.lift(x)) != x
            || (x == q.identity() && data.section.lift(x) != e_g)
    });
    push(
        "section valid and normalized",
        section_ok.is_none(),
        section_ok.map(|x| vec![x]),
    );

    // ω normalized cocycle
    push("ω normalized", data.omega.is_normalized(), None);
    push("ω cocycle", is_cocycle(&data.omega), None);

    // c normalized
    let c_norm = g
        .elements()
        .find(|&x| !data.c.phase(&[e_g, x]).is_zero() || !data.c.phase(&[x, e_g]).is_zero());
    push("c normalized", c_norm.is_none(), c_norm.map(|x| vec![x]));

    // c restricted to K is identically zero
    let mut c_k_witness = None;
    'outer: for k1 in data.kernel.elements() {
        for k2 in data.kernel.elements() {
            let g1 = data.kernel_inclusion.apply(k1);
            let g2 = data.kernel_inclusion.apply(k2);
            if !data.c.phase(&[g1, g2]).is_zero() {
                c_k_witness = Some(vec![k1, k2]);
                break 'outer;
            }
        }
    }
    push("c|_K ≡ 0", c_k_witness.is_none(), c_k_witness);

    // dc = ρ*ω on all |G|^3 triples
    let mut dc_witness = None;
    'triples: for g1 in g.elements() {
        for g2 in g.elements() {
            for g3 in g.elements() {
                let dc = data.c.phase(&[g2, g3]).clone() - data.c.phase(&[g.mul(g1, g2), g3])
                    + data.c.phase(&[g1, g.mul(g2, g3)])
                    - data.c.phase(&[g1, g2]);
                let rhs =
                    data.omega
                        .phase(&[data.rho.apply(g1), data.rho.apply(g2), data.rho.apply(g3)]);
                if dc != *rhs {
                    dc_witness = Some(vec![g1, g2, g3]);
                    break 'triples;
                }
            }
        }
    }
    push(
        "dc = ρ*ω (all |G|³ triples)",
        dc_witness.is_none(),
        dc_witness,
    );

    ExtensionReport { rows }
}

/// The section defect `γ(q,r)` of the extension, as a kernel index.
pub fn gamma(data: &ExtensionData, q1: usize, q2: usize) -> usize {
    let g_elem = crate::groups::section_defect(&data.section, q1, q2);
    data.kernel
        .elements()
        .find(|&k| data.kernel_inclusion.apply(k) == g_elem)
        .expect("section defect lies in the kernel")
}

impl std::fmt::Debug for ExtensionData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ExtensionData(Q = {:?}, G = {:?}, |K| = {})",
            self.q_group,
            self.g_group,
            self.kernel.order()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::{coboundary, cohomology_group, normalize, shift_by_2cochain};

    fn generator(n: usize) -> Cochain {
        let module = CoefficientModule::circle(FiniteGroup::cyclic(n));
        let h = cohomology_group(&module, 3).unwrap();
        normalize(&h.generators[0]).unwrap().cocycle
    }

    #[test]
    fn z2_generator_extension() {
        let q = FiniteGroup::cyclic(2);
        let omega = generator(2);
        let data = build_extension(&q, &omega).unwrap();
        assert_eq!(data.kernel.order(), 2);
        assert_eq!(data.g_group.order(), 4);
        let report = verify_extension(&data);
        assert!(
            report.pass(),
            "failing rows: {:?}",
            report.rows.iter().filter(|r| !r.pass).collect::<Vec<_>>()
        );
        // the extension by a nonzero class is nonsplit: G = Z_4, not Z_2×Z_2
        assert_eq!(data.g_group.exponent(), 4);
    }

    #[test]
    fn z3_generator_extension() {
        let q = FiniteGroup::cyclic(3);
        let omega = generator(3);
        let data = build_extension(&q, &omega).unwrap();
        assert_eq!(data.kernel.order(), 9);
        assert_eq!(data.g_group.order(), 27);
        let report = verify_extension(&data);
        assert!(report.pass());
    }

    #[test]
    fn zero_cocycle_gives_split_extension() {
        let q = FiniteGroup::cyclic(3);
        let module = CoefficientModule::circle(q.clone());
        let omega = Cochain::zero(&module, 3);
        let data = build_extension(&q, &omega).unwrap();
        assert!(data.c.is_zero());
        let report = verify_extension(&data);
        assert!(report.pass());
        // homomorphic section: γ ≡ identity
        for a in q.elements() {
            for b in q.elements() {
                assert_eq!(gamma(&data, a, b), data.kernel.identity());
            }
        }
    }

    #[test]
    fn denominator_guard() {
        // a normalized cocycle over Z_4 with an entry of denominator 8:
        // shift the generator by dλ for a normalized λ supported at (1,1)
        let q = FiniteGroup::cyclic(4);
        let module = CoefficientModule::circle(q.clone());
        let gen = generator(4);
        let mut lambda = Cochain::zero(&module, 2);
        lambda.set(&[1, 1], vec![Phase::new(1, 8)]);
        let shifted = shift_by_2cochain(&gen, &lambda).unwrap();
        assert!(shifted.is_normalized());
        assert!(shifted.denominator_lcm().is_multiple_of(8));
        match build_extension(&q, &shifted) {
            Err(ExtensionError::DenominatorTooLarge { .. }) => {}
            other => panic!("expected DenominatorTooLarge, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn perturbed_c_is_flagged_with_triple() {
        let q = FiniteGroup::cyclic(2);
        let omega = generator(2);
        let mut data = build_extension(&q, &omega).unwrap();
        // flip one genuinely-zero pair of c
        let target = data
            .g_group
            .elements()
            .flat_map(|a| data.g_group.elements().map(move |b| (a, b)))
            .find(|&(a, b)| {
                a != data.g_group.identity()
                    && b != data.g_group.identity()
                    && data.c.phase(&[a, b]).is_zero()
            })
            .unwrap();
        let mut values = data.c.clone();
        values.set(&[target.0, target.1], vec![Phase::new(1, 2)]);
        data.c = values;
        let report = verify_extension(&data);
        assert!(!report.pass());
        let row = report
            .rows
            .iter()
            .find(|r| r.name.starts_with("dc = ρ*ω"))
            .unwrap();
        assert!(!row.pass);
        assert!(row.witness.is_some());
    }

    #[test]
    fn non_normalized_c_is_flagged() {
        let q = FiniteGroup::cyclic(2);
        let omega = generator(2);
        let mut data = build_extension(&q, &omega).unwrap();
        let mut values = data.c.clone();
        let e = data.g_group.identity();
        values.set(&[e, 1], vec![Phase::new(1, 2)]);
        data.c = values;
        let report = verify_extension(&data);
        let row = report
            .rows
            .iter()
            .find(|r| r.name == "c normalized")
            .unwrap();
        assert!(!row.pass);
    }

    #[test]
    fn scale_guard_fires() {
        let q = FiniteGroup::symmetric(3);
        let module = CoefficientModule::circle(q.clone());
        let omega = Cochain::zero(&module, 3);
        match build_extension(&q, &omega) {
            Err(ExtensionError::ScaleGuard { q: 6, .. }) => {}
            other => panic!("expected ScaleGuard, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn serde_roundtrip() {
        let q = FiniteGroup::cyclic(2);
        let omega = generator(2);
        let data = build_extension(&q, &omega).unwrap();
        let json = serde_json::to_string(&data).unwrap();
        let back: ExtensionData = serde_json::from_str(&json).unwrap();
        assert!(verify_extension(&back).pass());
        assert_eq!(back.g_group.order(), 4);
    }

    #[test]
    fn coboundary_consistency_of_dc() {
        // dc computed by the cohomology module agrees with the inline sweep
        let q = FiniteGroup::cyclic(2);
        let omega = generator(2);
        let data = build_extension(&q, &omega).unwrap();
        let dc = coboundary(&data.c);
        for g1 in data.g_group.elements() {
            for g2 in data.g_group.elements() {
                for g3 in data.g_group.elements() {
                    let rhs = data.omega.phase(&[
                        data.rho.apply(g1),
                        data.rho.apply(g2),
                        data.rho.apply(g3),
                    ]);
                    assert_eq!(dc.phase(&[g1, g2, g3]), rhs);
                }
            }
        }
    }
}
