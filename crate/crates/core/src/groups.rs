//! Finite groups as validated multiplication tables.
//!
//! Elements are dense indices `0..order`, so the exhaustive sweeps that
//! dominate this crate are plain array walks. Construction eagerly checks
//! the Latin-square property and full associativity; everything downstream
//! assumes a valid table.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("multiplication table is not square (row {row} has length {len}, expected {order})")]
    NotSquare {
        row: usize,
        len: usize,
        order: usize,
    },
    #[error("table entry ({a},{b}) = {value} is out of range for order {order}")]
    EntryOutOfRange {
        a: usize,
        b: usize,
        value: usize,
        order: usize,
    },
    #[error("table is not a Latin square: {kind} {index} repeats value {value}")]
    NotLatin {
        kind: &'static str,
        index: usize,
        value: usize,
    },
    #[error("no identity element found")]
    NoIdentity,
    #[error(
        "associativity fails at triple ({a},{b},{c}): ({a}{b}){c} = {lhs} but {a}({b}{c}) = {rhs}"
    )]
    NotAssociative {
        a: usize,
        b: usize,
        c: usize,
        lhs: usize,
        rhs: usize,
    },
    #[error("element {element} has no inverse")]
    NoInverse { element: usize },
    #[error("map is not a homomorphism: f({a}{b}) = {lhs} but f({a})f({b}) = {rhs}")]
    NotHomomorphism {
        a: usize,
        b: usize,
        lhs: usize,
        rhs: usize,
    },
    #[error("homomorphism map has length {len}, expected {expected}")]
    BadMapLength { len: usize, expected: usize },
    #[error("homomorphism is not surjective: {missing} has no preimage")]
    NotSurjective { missing: usize },
    #[error("section lift of {q} maps to {lifted} but projects to {projected}")]
    BadSection {
        q: usize,
        lifted: usize,
        projected: usize,
    },
    #[error("group order {order} exceeds the scale guard {guard}; set ANOMALY_SCALE_OVERRIDE=1 to lift it")]
    ScaleGuard { order: usize, guard: usize },
}

/// Returns true when the `ANOMALY_SCALE_OVERRIDE` environment variable lifts
/// the library's scale guards.
pub fn scale_override() -> bool {
    std::env::var("ANOMALY_SCALE_OVERRIDE").is_ok_and(|v| !v.is_empty() && v != "0")
}

/// A finite group given by its full multiplication table.
///
/// Deserialization re-runs the full construction checks, so a table read
/// from disk is as trustworthy as one built in process.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GroupRepr", try_from = "GroupRepr")]
pub struct FiniteGroup {
    order: usize,
    /// Row-major: `table[a * order + b] = a·b`.
    table: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
    name: String,
}

#[derive(Serialize, Deserialize)]
struct GroupRepr {
    name: String,
    table: Vec<Vec<usize>>,
}

impl From<FiniteGroup> for GroupRepr {
    fn from(g: FiniteGroup) -> GroupRepr {
        GroupRepr {
            name: g.name.clone(),
            table: g.table_rows(),
        }
    }
}

impl TryFrom<GroupRepr> for FiniteGroup {
    type Error = GroupError;
    fn try_from(r: GroupRepr) -> Result<FiniteGroup, GroupError> {
        FiniteGroup::from_table(r.table, r.name)
    }
}

impl std::fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FiniteGroup({}, order {})", self.name, self.order)
    }
}

impl FiniteGroup {
    /// Validate a raw table: Latin square, identity, associativity.
    pub fn from_table(table: Vec<Vec<usize>>, name: impl Into<String>) -> Result<Self, GroupError> {
        let order = table.len();
        assert!(order > 0, "empty multiplication table");
        for (row, r) in table.iter().enumerate() {
            if r.len() != order {
                return Err(GroupError::NotSquare {
                    row,
                    len: r.len(),
                    order,
                });
            }
        }
        let mut flat = vec![0usize; order * order];
        for (a, r) in table.iter().enumerate() {
            for (b, &v) in r.iter().enumerate() {
                if v >= order {
                    return Err(GroupError::EntryOutOfRange {
                        a,
                        b,
                        value: v,
                        order,
                    });
                }
                flat[a * order + b] = v;
            }
        }
        // Latin square
        for i in 0..order {
            let mut seen_row = vec![false; order];
            let mut seen_col = vec![false; order];
            for j in 0..order {
                let r = flat[i * order + j];
                if seen_row[r] {
                    return Err(GroupError::NotLatin {
                        kind: "row",
                        index: i,
                        value: r,
                    });
                }
                seen_row[r] = true;
                let c = flat[j * order + i];
                if seen_col[c] {
                    return Err(GroupError::NotLatin {
                        kind: "column",
                        index: i,
                        value: c,
                    });
                }
                seen_col[c] = true;
            }
        }
        // identity
        let identity = (0..order)
            .find(|&e| (0..order).all(|x| flat[e * order + x] == x && flat[x * order + e] == x))
            .ok_or(GroupError::NoIdentity)?;
        // associativity, all |G|^3 triples
        for a in 0..order {
            for b in 0..order {
                let ab = flat[a * order + b];
                for c in 0..order {
                    let lhs = flat[ab * order + c];
                    let rhs = flat[a * order + flat[b * order + c]];
                    if lhs != rhs {
                        return Err(GroupError::NotAssociative { a, b, c, lhs, rhs });
                    }
                }
            }
        }
        let mut inverse = vec![0usize; order];
        for a in 0..order {
            inverse[a] = (0..order)
                .find(|&b| flat[a * order + b] == identity)
                .ok_or(GroupError::NoInverse { element: a })?;
        }
        Ok(FiniteGroup {
            order,
            table: flat,
            identity,
            inverse,
            name: name.into(),
        })
    }

    pub fn trivial() -> Self {
        FiniteGroup::from_table(vec![vec![0]], "1").unwrap()
    }

    /// Cyclic group of order `n` (addition mod `n`).
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1);
        let table: Vec<Vec<usize>> = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        FiniteGroup::from_table(table, format!("Z{n}")).unwrap()
    }

    /// Direct product; element `(a, b)` is indexed `a * |H| + b`.
    pub fn product(g: &FiniteGroup, h: &FiniteGroup) -> Self {
        let n = g.order * h.order;
        let mut table = vec![vec![0usize; n]; n];
        for a1 in 0..g.order {
            for b1 in 0..h.order {
                for a2 in 0..g.order {
                    for b2 in 0..h.order {
                        let x = a1 * h.order + b1;
                        let y = a2 * h.order + b2;
                        table[x][y] = g.mul(a1, a2) * h.order + h.mul(b1, b2);
                    }
                }
            }
        }
        FiniteGroup::from_table(table, format!("{}x{}", g.name, h.name)).unwrap()
    }

    /// Symmetric group on `n` letters; elements are the permutations of
    /// `{0..n-1}` in lexicographic one-line order, with `(σ·τ)(x) = σ(τ(x))`.
    pub fn symmetric(n: usize) -> Self {
        assert!((1..=6).contains(&n), "symmetric group size out of range");
        let perms = permutations(n);
        let index = |p: &[usize]| perms.iter().position(|q| q == p).unwrap();
        let order = perms.len();
        let mut table = vec![vec![0usize; order]; order];
        for (i, s) in perms.iter().enumerate() {
            for (j, t) in perms.iter().enumerate() {
                let comp: Vec<usize> = (0..n).map(|x| s[t[x]]).collect();
                table[i][j] = index(&comp);
            }
        }
        FiniteGroup::from_table(table, format!("S{n}")).unwrap()
    }

    /// Dihedral group of order `2n`: element `i < n` is the rotation `r^i`,
    /// element `n + i` is the reflection `r^i s`.
    pub fn dihedral(n: usize) -> Self {
        assert!(n >= 1);
        let order = 2 * n;
        let mut table = vec![vec![0usize; order]; order];
        for i in 0..n {
            for j in 0..n {
                table[i][j] = (i + j) % n; // r^i r^j
                table[i][n + j] = n + (i + j) % n; // r^i (r^j s)
                table[n + i][j] = n + (i + n - j % n) % n; // (r^i s) r^j = r^{i-j} s
                table[n + i][n + j] = (i + n - j % n) % n; // (r^i s)(r^j s) = r^{i-j}
            }
        }
        FiniteGroup::from_table(table, format!("D{n}")).unwrap()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn conj(&self, g: usize, x: usize) -> usize {
        self.mul(self.mul(g, x), self.inv(g))
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Order of a single element.
    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    /// Exponent of the group: lcm of all element orders.
    pub fn exponent(&self) -> usize {
        use num_integer::Integer;
        self.elements()
            .fold(1usize, |acc, a| acc.lcm(&self.element_order(a)))
    }

    pub fn is_abelian(&self) -> bool {
        self.elements()
            .all(|a| (0..a).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn table_rows(&self) -> Vec<Vec<usize>> {
        (0..self.order)
            .map(|a| self.table[a * self.order..(a + 1) * self.order].to_vec())
            .collect()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..remaining.len() {
            let v = remaining.remove(i);
            cur.push(v);
            rec(remaining, cur, out);
            cur.pop();
            remaining.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut (0..n).collect(), &mut Vec::new(), &mut out);
    out
}

/// Descriptor for [`make_group`]; this is also the JSON wire format.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupSpec {
    Cyclic { n: usize },
    Product { factors: Vec<GroupSpec> },
    Symmetric { n: usize },
    Dihedral { n: usize },
    Table { table: Vec<Vec<usize>> },
}

/// Build a validated group from a descriptor.
pub fn make_group(spec: &GroupSpec) -> Result<FiniteGroup, GroupError> {
    match spec {
        GroupSpec::Cyclic { n } => {
            assert!(*n >= 1, "cyclic group order must be positive");
            Ok(FiniteGroup::cyclic(*n))
        }
        GroupSpec::Product { factors } => {
            assert!(!factors.is_empty(), "empty product descriptor");
            let gs: Result<Vec<_>, _> = factors.iter().map(make_group).collect();
            let gs = gs?;
            let mut it = gs.into_iter();
            let first = it.next().unwrap();
            Ok(it.fold(first, |acc, g| FiniteGroup::product(&acc, &g)))
        }
        GroupSpec::Symmetric { n } => Ok(FiniteGroup::symmetric(*n)),
        GroupSpec::Dihedral { n } => Ok(FiniteGroup::dihedral(*n)),
        GroupSpec::Table { table } => FiniteGroup::from_table(table.clone(), "table"),
    }
}

/// A homomorphism between validated groups, stored as its value table.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "HomRepr", try_from = "HomRepr")]
pub struct GroupHom {
    pub source: FiniteGroup,
    pub target: FiniteGroup,
    map: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct HomRepr {
    source: FiniteGroup,
    target: FiniteGroup,
    map: Vec<usize>,
}

impl From<GroupHom> for HomRepr {
    fn from(h: GroupHom) -> HomRepr {
        HomRepr {
            source: h.source,
            target: h.target,
            map: h.map,
        }
    }
}

impl TryFrom<HomRepr> for GroupHom {
    type Error = GroupError;
    fn try_from(r: HomRepr) -> Result<GroupHom, GroupError> {
        GroupHom::new(r.source, r.target, r.map)
    }
}

impl GroupHom {
    pub fn new(
        source: FiniteGroup,
        target: FiniteGroup,
        map: Vec<usize>,
    ) -> Result<Self, GroupError> {
        if map.len() != source.order() {
            return Err(GroupError::BadMapLength {
                len: map.len(),
                expected: source.order(),
            });
        }
        for a in source.elements() {
            for b in source.elements() {
                let lhs = map[source.mul(a, b)];
                let rhs = target.mul(map[a], map[b]);
                if lhs != rhs {
                    return Err(GroupError::NotHomomorphism { a, b, lhs, rhs });
                }
            }
        }
        Ok(GroupHom {
            source,
            target,
            map,
        })
    }

    pub fn identity(g: &FiniteGroup) -> Self {
        GroupHom {
            source: g.clone(),
            target: g.clone(),
            map: g.elements().collect(),
        }
    }

    pub fn apply(&self, a: usize) -> usize {
        self.map[a]
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.target.order()];
        for &v in &self.map {
            seen[v] = true;
        }
        seen.into_iter().all(|b| b)
    }

    pub fn kernel_elements(&self) -> Vec<usize> {
        self.source
            .elements()
            .filter(|&a| self.map[a] == self.target.identity())
            .collect()
    }
}

/// Kernel and quotient data of a surjective homomorphism.
pub struct KernelQuotient {
    pub kernel: FiniteGroup,
    pub quotient: FiniteGroup,
    /// Embeds kernel indices into the source.
    pub inclusion: GroupHom,
    /// The original surjection.
    pub projection: GroupHom,
    /// Source indices of the kernel elements, in kernel order.
    pub kernel_in_source: Vec<usize>,
}

/// Split a surjective homomorphism into its kernel (as a group in its own
/// right) and the target viewed as the quotient.
pub fn kernel_and_quotient(hom: &GroupHom) -> Result<KernelQuotient, GroupError> {
    if let Some(missing) = (0..hom.target.order()).find(|&q| !hom.map.contains(&q)) {
        return Err(GroupError::NotSurjective { missing });
    }
    let elems = hom.kernel_elements();
    let pos = |x: usize| elems.iter().position(|&e| e == x).unwrap();
    let table: Vec<Vec<usize>> = elems
        .iter()
        .map(|&a| elems.iter().map(|&b| pos(hom.source.mul(a, b))).collect())
        .collect();
    let kernel = FiniteGroup::from_table(table, format!("ker({})", hom.source.name()))?;
    let inclusion = GroupHom::new(kernel.clone(), hom.source.clone(), elems.clone())?;
    Ok(KernelQuotient {
        kernel,
        quotient: hom.target.clone(),
        inclusion,
        projection: hom.clone(),
        kernel_in_source: elems,
    })
}

/// A set-theoretic section of a surjective homomorphism.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "SectionRepr", try_from = "SectionRepr")]
pub struct Section {
    pub hom: GroupHom,
    lift: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SectionRepr {
    hom: GroupHom,
    lift: Vec<usize>,
}

impl From<Section> for SectionRepr {
    fn from(s: Section) -> SectionRepr {
        SectionRepr {
            hom: s.hom,
            lift: s.lift,
        }
    }
}

impl TryFrom<SectionRepr> for Section {
    type Error = GroupError;
    fn try_from(r: SectionRepr) -> Result<Section, GroupError> {
        Section::new(r.hom, r.lift)
    }
}

impl Section {
    pub fn new(hom: GroupHom, lift: Vec<usize>) -> Result<Self, GroupError> {
        if lift.len() != hom.target.order() {
            return Err(GroupError::BadMapLength {
                len: lift.len(),
                expected: hom.target.order(),
            });
        }
        for (q, &x) in lift.iter().enumerate() {
            let projected = hom.apply(x);
            if projected != q {
                return Err(GroupError::BadSection {
                    q,
                    lifted: x,
                    projected,
                });
            }
        }
        Ok(Section { hom, lift })
    }

    /// The normalized default: identity lifts to identity, otherwise the
    /// least-index preimage.
    pub fn default_normalized(hom: &GroupHom) -> Result<Self, GroupError> {
        let mut lift = Vec::with_capacity(hom.target.order());
        for q in hom.target.elements() {
            let x = if q == hom.target.identity() {
                hom.source.identity()
            } else {
                hom.source
                    .elements()
                    .find(|&x| hom.apply(x) == q)
                    .ok_or(GroupError::NotSurjective { missing: q })?
            };
            lift.push(x);
        }
        Section::new(hom.clone(), lift)
    }

    pub fn lift(&self, q: usize) -> usize {
        self.lift[q]
    }
}

/// The section defect `γ(q, r) = q̂ · r̂ · (qr-hat)^{-1}`, an element of the
/// kernel of the underlying surjection.
pub fn section_defect(section: &Section, q: usize, r: usize) -> usize {
    let src = &section.hom.source;
    let tgt = &section.hom.target;
    let qh = section.lift(q);
    let rh = section.lift(r);
    let qrh = section.lift(tgt.mul(q, r));
    src.mul(src.mul(qh, rh), src.inv(qrh))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_one_is_trivial() {
        let g = FiniteGroup::cyclic(1);
        assert_eq!(g.order(), 1);
        assert_eq!(g.identity(), 0);
    }

    #[test]
    fn cyclic_four_addition() {
        let g = FiniteGroup::cyclic(4);
        assert_eq!(g.mul(2, 3), 1);
        assert_eq!(g.inv(1), 3);
    }

    #[test]
    fn klein_four() {
        let g = FiniteGroup::product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2));
        assert_eq!(g.order(), 4);
        assert_eq!(g.exponent(), 2);
    }

    #[test]
    fn symmetric_three() {
        let g = FiniteGroup::symmetric(3);
        assert_eq!(g.order(), 6);
        assert!(!g.is_abelian());
        assert_eq!(g.exponent(), 6);
    }

    #[test]
    fn dihedral_four() {
        let g = FiniteGroup::dihedral(4);
        assert_eq!(g.order(), 8);
        assert!(!g.is_abelian());
        // s r s = r^{-1}
        let r = 1;
        let s = 4;
        assert_eq!(g.mul(g.mul(s, r), s), g.inv(r));
    }

    #[test]
    fn bad_table_reports_triple() {
        // Latin square that is not associative (order-5 quasigroup)
        let table = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 3, 4, 0, 1],
            vec![3, 4, 1, 2, 0],
            vec![4, 2, 0, 1, 3],
        ];
        match FiniteGroup::from_table(table, "bad") {
            Err(GroupError::NotAssociative { .. }) => {}
            other => panic!("expected associativity failure, got {other:?}"),
        }
    }

    #[test]
    fn all_triples_associative() {
        for g in [
            FiniteGroup::cyclic(6),
            FiniteGroup::symmetric(3),
            FiniteGroup::dihedral(3),
        ] {
            for a in g.elements() {
                for b in g.elements() {
                    for c in g.elements() {
                        assert_eq!(g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn mod_two_quotient_of_z4() {
        let z4 = FiniteGroup::cyclic(4);
        let z2 = FiniteGroup::cyclic(2);
        let hom = GroupHom::new(z4, z2, vec![0, 1, 0, 1]).unwrap();
        let kq = kernel_and_quotient(&hom).unwrap();
        assert_eq!(kq.kernel.order(), 2);
        assert_eq!(kq.kernel_in_source, vec![0, 2]);
        assert_eq!(kq.kernel.order() * kq.quotient.order(), 4);
        // projection ∘ inclusion is trivial
        for k in kq.kernel.elements() {
            assert_eq!(
                kq.projection.apply(kq.inclusion.apply(k)),
                kq.quotient.identity()
            );
        }
    }

    #[test]
    fn kernel_quotient_round_trip() {
        // elements with equal projection differ by a kernel element
        let z4 = FiniteGroup::cyclic(4);
        let z2 = FiniteGroup::cyclic(2);
        let hom = GroupHom::new(z4.clone(), z2, vec![0, 1, 0, 1]).unwrap();
        let kq = kernel_and_quotient(&hom).unwrap();
        for a in z4.elements() {
            for b in z4.elements() {
                if hom.apply(a) == hom.apply(b) {
                    let diff = z4.mul(a, z4.inv(b));
                    assert!(kq.kernel_in_source.contains(&diff));
                }
            }
        }
    }

    #[test]
    fn identity_hom_quotient() {
        let g = FiniteGroup::cyclic(5);
        let hom = GroupHom::identity(&g);
        let kq = kernel_and_quotient(&hom).unwrap();
        assert_eq!(kq.kernel.order(), 1);
        assert_eq!(kq.quotient.order(), 5);
    }

    #[test]
    fn section_defect_z4_over_z2() {
        let z4 = FiniteGroup::cyclic(4);
        let z2 = FiniteGroup::cyclic(2);
        let hom = GroupHom::new(z4, z2, vec![0, 1, 0, 1]).unwrap();
        let sec = Section::new(hom, vec![0, 1]).unwrap();
        assert_eq!(section_defect(&sec, 1, 1), 2); // 1 + 1 - 0 = 2 in Z4
        assert_eq!(section_defect(&sec, 0, 1), 0);
        assert_eq!(section_defect(&sec, 1, 0), 0);
    }

    #[test]
    fn split_section_trivial_defect() {
        // Z2 x Z2 -> Z2 first projection splits homomorphically
        let g = FiniteGroup::product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2));
        let z2 = FiniteGroup::cyclic(2);
        let map: Vec<usize> = g.elements().map(|x| x / 2).collect();
        let hom = GroupHom::new(g, z2, map).unwrap();
        let sec = Section::new(hom.clone(), vec![0, 2]).unwrap();
        for q in 0..2 {
            for r in 0..2 {
                assert_eq!(section_defect(&sec, q, r), hom.source.identity());
            }
        }
    }

    #[test]
    fn factor_set_identity() {
        // γ(q,r)γ(qr,s) = (q̂ γ(r,s) q̂^{-1}) γ(q, rs) over Z4 -> Z2
        let z4 = FiniteGroup::cyclic(4);
        let z2 = FiniteGroup::cyclic(2);
        let hom = GroupHom::new(z4.clone(), z2.clone(), vec![0, 1, 0, 1]).unwrap();
        let sec = Section::default_normalized(&hom).unwrap();
        for q in z2.elements() {
            for r in z2.elements() {
                for s in z2.elements() {
                    let lhs = z4.mul(
                        section_defect(&sec, q, r),
                        section_defect(&sec, z2.mul(q, r), s),
                    );
                    let qh = sec.lift(q);
                    let conj = z4.mul(z4.mul(qh, section_defect(&sec, r, s)), z4.inv(qh));
                    let rhs = z4.mul(conj, section_defect(&sec, q, z2.mul(r, s)));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn group_spec_roundtrip() {
        let spec: GroupSpec = serde_json::from_str(r#"{"kind":"cyclic","n":4}"#).unwrap();
        let g = make_group(&spec).unwrap();
        assert_eq!(g.order(), 4);
        let spec: GroupSpec = serde_json::from_str(
            r#"{"kind":"product","factors":[{"kind":"cyclic","n":2},{"kind":"cyclic","n":2}]}"#,
        )
        .unwrap();
        assert_eq!(make_group(&spec).unwrap().order(), 4);
        let spec: GroupSpec = serde_json::from_str(r#"{"kind":"symmetric","n":3}"#).unwrap();
        assert_eq!(make_group(&spec).unwrap().order(), 6);
    }
}
