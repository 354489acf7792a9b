//! JSON wire formats: group descriptors, sparse cocycle tables, canonical
//! generator references, supernatural numbers, serialized stage actions,
//! and algebra/unitary descriptors for the determinant pipeline.

use crate::anomalous::{AnomalousAction, StageAutomorphism};
use crate::arith::{parse_phase, Phase, Rat};
use crate::cohomology::{cohomology_group, Cochain, CoefficientModule};
use crate::crossed::{build_crossed_product, AlgebraAction, CrossedStage, StageElement};
use crate::cyclo::{euler_phi, CycloScalar};
use crate::groups::{make_group, FiniteGroup, GroupSpec};
use crate::matrix::{CMat, Monomial};
use crate::multimatrix::{AlgebraElement, MultiMatrixAlgebra};
use crate::obstruction::{Exponent, SupernaturalNumber};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(
        "invalid group shorthand `{0}` (try cyclic_4, symmetric_3, dihedral_5, klein, trivial)"
    )]
    BadShorthand(String),
    #[error("invalid phase: {0}")]
    BadPhase(String),
    #[error("invalid rational `{0}`")]
    BadRational(String),
    #[error("cocycle argument {arg} out of range for group of order {order}")]
    ArgOutOfRange { arg: usize, order: usize },
    #[error("generator index {index} out of range: H^3 has {count} generators")]
    GeneratorIndex { index: usize, count: usize },
    #[error("supernatural entry for `{key}`: {reason}")]
    BadSupernatural { key: String, reason: String },
    #[error("field `{0}` has inconsistent dimensions")]
    BadShape(String),
    #[error(transparent)]
    Group(#[from] crate::groups::GroupError),
    #[error(transparent)]
    Cohomology(#[from] crate::cohomology::CohomologyError),
    #[error(transparent)]
    Crossed(#[from] crate::crossed::CrossedError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// groups
// ---------------------------------------------------------------------------

/// A group named either by a JSON descriptor or a shorthand string.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupInput {
    Shorthand(String),
    Spec(GroupSpec),
}

pub fn parse_group(input: &GroupInput) -> Result<FiniteGroup, IoError> {
    match input {
        GroupInput::Spec(spec) => Ok(make_group(spec)?),
        GroupInput::Shorthand(s) => parse_group_shorthand(s),
    }
}

pub fn parse_group_shorthand(s: &str) -> Result<FiniteGroup, IoError> {
    let norm = s.trim().to_lowercase();
    if norm == "trivial" {
        return Ok(FiniteGroup::trivial());
    }
    if norm == "klein" {
        return Ok(FiniteGroup::product(
            &FiniteGroup::cyclic(2),
            &FiniteGroup::cyclic(2),
        ));
    }
    let (kind, num) = norm
        .rsplit_once('_')
        .or_else(|| {
            norm.split_at_checked(1)
                .filter(|(k, _)| matches!(*k, "z" | "s" | "d"))
        })
        .ok_or_else(|| IoError::BadShorthand(s.into()))?;
    let n: usize = num.parse().map_err(|_| IoError::BadShorthand(s.into()))?;
    match kind {
        "cyclic" | "z" => Ok(FiniteGroup::cyclic(n)),
        "symmetric" | "s" => Ok(FiniteGroup::symmetric(n)),
        "dihedral" | "d" => Ok(FiniteGroup::dihedral(n)),
        _ => Err(IoError::BadShorthand(s.into())),
    }
}

// ---------------------------------------------------------------------------
// cocycles
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CocycleEntry {
    pub args: Vec<usize>,
    pub phase: String,
}

/// Sparse cocycle table: `{"group":…, "degree":3, "values":[…]}` with
/// omitted entries defaulting to zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CocycleTable {
    pub group: GroupInput,
    pub degree: usize,
    #[serde(default)]
    pub values: Vec<CocycleEntry>,
}

/// Canonical generator reference:
/// `{"kind":"generator","group":…,"index":j}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorRef {
    pub kind: String,
    pub group: GroupInput,
    #[serde(default)]
    pub index: usize,
    /// Cohomological degree; defaults to 3.
    #[serde(default = "default_degree")]
    pub degree: usize,
}

fn default_degree() -> usize {
    3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CocycleInput {
    Generator(GeneratorRef),
    Table(CocycleTable),
}

pub fn parse_cocycle(input: &CocycleInput) -> Result<Cochain, IoError> {
    match input {
        CocycleInput::Generator(gref) => {
            if gref.kind != "generator" {
                return Err(IoError::BadShorthand(gref.kind.clone()));
            }
            let group = parse_group(&gref.group)?;
            let module = CoefficientModule::circle(group);
            let h = cohomology_group(&module, gref.degree)?;
            if gref.index >= h.generators.len() {
                return Err(IoError::GeneratorIndex {
                    index: gref.index,
                    count: h.generators.len(),
                });
            }
            Ok(h.generators[gref.index].clone())
        }
        CocycleInput::Table(table) => {
            let group = parse_group(&table.group)?;
            let module = CoefficientModule::circle(group.clone());
            let mut c = Cochain::zero(&module, table.degree);
            for entry in &table.values {
                if entry.args.len() != table.degree {
                    return Err(IoError::BadShape("values.args".into()));
                }
                for &a in &entry.args {
                    if a >= group.order() {
                        return Err(IoError::ArgOutOfRange {
                            arg: a,
                            order: group.order(),
                        });
                    }
                }
                let p = parse_phase(&entry.phase).map_err(IoError::BadPhase)?;
                c.set(&entry.args, vec![p]);
            }
            Ok(c)
        }
    }
}

/// Render a rank-1 cochain as a sparse table.
pub fn cochain_to_table(c: &Cochain) -> CocycleTable {
    let group = c.group();
    let mut values = Vec::new();
    for t in c.tuples() {
        let p = &c.value(&t)[0];
        if !p.is_zero() {
            values.push(CocycleEntry {
                args: t,
                phase: p.to_string(),
            });
        }
    }
    CocycleTable {
        group: GroupInput::Spec(GroupSpec::Table {
            table: group.table_rows(),
        }),
        degree: c.degree,
        values,
    }
}

// ---------------------------------------------------------------------------
// supernatural numbers
// ---------------------------------------------------------------------------

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return false;
        }
        p += 1;
    }
    true
}

/// Parse `{"2":"inf","3":4}` or the inline form `2^inf·3^4` (also `*`
/// separated).
pub fn parse_supernatural(text: &str) -> Result<SupernaturalNumber, IoError> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        let map: std::collections::BTreeMap<String, serde_json::Value> =
            serde_json::from_str(trimmed)?;
        let mut parts = Vec::new();
        for (k, v) in map {
            let p: u64 = k.parse().map_err(|_| IoError::BadSupernatural {
                key: k.clone(),
                reason: "not an integer".into(),
            })?;
            if !is_prime(p) {
                return Err(IoError::BadSupernatural {
                    key: k,
                    reason: "not prime".into(),
                });
            }
            let e = match &v {
                serde_json::Value::String(s) if s == "inf" => Exponent::Infinite,
                serde_json::Value::Number(n) if n.as_u64().is_some() => {
                    Exponent::Finite(n.as_u64().unwrap() as u32)
                }
                other => {
                    return Err(IoError::BadSupernatural {
                        key: k,
                        reason: format!("bad exponent {other}"),
                    })
                }
            };
            parts.push((p, e));
        }
        return Ok(SupernaturalNumber::from_parts(parts));
    }
    // inline form
    let mut parts = Vec::new();
    for piece in trimmed.split(['*', '·']) {
        let piece = piece.trim();
        if piece.is_empty() || piece == "1" {
            continue;
        }
        let (base, exp) = match piece.split_once('^') {
            Some((b, e)) => (b.trim(), e.trim()),
            None => (piece, "1"),
        };
        let p: u64 = base.parse().map_err(|_| IoError::BadSupernatural {
            key: piece.into(),
            reason: "bad prime".into(),
        })?;
        if !is_prime(p) {
            return Err(IoError::BadSupernatural {
                key: piece.into(),
                reason: "not prime".into(),
            });
        }
        let e = if exp == "inf" {
            Exponent::Infinite
        } else {
            Exponent::Finite(exp.parse().map_err(|_| IoError::BadSupernatural {
                key: piece.into(),
                reason: "bad exponent".into(),
            })?)
        };
        parts.push((p, e));
    }
    Ok(SupernaturalNumber::from_parts(parts))
}

pub fn supernatural_to_json(n: &SupernaturalNumber) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (p, e) in n.primes() {
        let v = match e {
            Exponent::Finite(k) => serde_json::json!(k),
            Exponent::Infinite => serde_json::json!("inf"),
        };
        map.insert(p.to_string(), v);
    }
    serde_json::Value::Object(map)
}

// ---------------------------------------------------------------------------
// exact scalars and matrices
// ---------------------------------------------------------------------------

pub fn rat_to_string(r: &Rat) -> String {
    r.to_string()
}

pub fn parse_rat(s: &str) -> Result<Rat, IoError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: num_bigint::BigInt = num.parse().map_err(|_| IoError::BadRational(s.into()))?;
    let d: num_bigint::BigInt = den.parse().map_err(|_| IoError::BadRational(s.into()))?;
    if d == num_bigint::BigInt::from(0) {
        return Err(IoError::BadRational(s.into()));
    }
    Ok(Rat::new(n, d))
}

/// A cyclotomic scalar as its power-basis coordinates, `["p/q", …]`.
pub type CycloRepr = Vec<String>;

pub fn cyclo_to_repr(s: &CycloScalar) -> CycloRepr {
    s.coeffs().iter().map(rat_to_string).collect()
}

pub fn parse_cyclo(conductor: u64, repr: &CycloRepr) -> Result<CycloScalar, IoError> {
    if repr.len() as u64 != euler_phi(conductor) {
        return Err(IoError::BadShape("cyclotomic coordinates".into()));
    }
    let coeffs: Result<Vec<Rat>, IoError> = repr.iter().map(|s| parse_rat(s)).collect();
    Ok(CycloScalar::from_coeffs(conductor, coeffs?))
}

/// Dense matrix as nested entry arrays.
pub type MatrixRepr = Vec<Vec<CycloRepr>>;

pub fn cmat_to_repr(m: &CMat) -> MatrixRepr {
    (0..m.rows)
        .map(|i| (0..m.cols).map(|j| cyclo_to_repr(&m[(i, j)])).collect())
        .collect()
}

pub fn parse_cmat(conductor: u64, repr: &MatrixRepr) -> Result<CMat, IoError> {
    let rows = repr.len();
    let cols = repr.first().map_or(0, |r| r.len());
    if repr.iter().any(|r| r.len() != cols) {
        return Err(IoError::BadShape("matrix rows".into()));
    }
    let mut m = CMat::zero(conductor, rows, cols);
    for (i, row) in repr.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            m.set(i, j, parse_cyclo(conductor, entry)?);
        }
    }
    Ok(m)
}

/// Monomial unitary as `{"perm": […], "phases": ["p/q", …]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonomialRepr {
    pub perm: Vec<usize>,
    pub phases: Vec<String>,
}

pub fn monomial_to_repr(m: &Monomial) -> MonomialRepr {
    MonomialRepr {
        perm: m.perm().to_vec(),
        phases: (0..m.dim()).map(|j| m.phase(j).to_string()).collect(),
    }
}

pub fn parse_monomial(repr: &MonomialRepr) -> Result<Monomial, IoError> {
    if repr.perm.len() != repr.phases.len() {
        return Err(IoError::BadShape("monomial".into()));
    }
    let phases: Result<Vec<Phase>, _> = repr.phases.iter().map(|s| parse_phase(s)).collect();
    Ok(Monomial::new(
        repr.perm.clone(),
        phases.map_err(IoError::BadPhase)?,
    ))
}

// ---------------------------------------------------------------------------
// multi-matrix algebras and their elements
// ---------------------------------------------------------------------------

/// `{"blocks":[2,3],"conductor":12}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraRepr {
    pub blocks: Vec<usize>,
    pub conductor: u64,
}

pub fn parse_algebra(repr: &AlgebraRepr) -> MultiMatrixAlgebra {
    MultiMatrixAlgebra::new(repr.blocks.clone(), repr.conductor)
}

/// One block of a unitary: dense entries or a monomial shorthand.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockRepr {
    Monomial(MonomialRepr),
    Dense(MatrixRepr),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitaryRepr {
    pub blocks: Vec<BlockRepr>,
}

pub fn parse_unitary(
    algebra: &MultiMatrixAlgebra,
    repr: &UnitaryRepr,
) -> Result<AlgebraElement, IoError> {
    if repr.blocks.len() != algebra.blocks.len() {
        return Err(IoError::BadShape("unitary blocks".into()));
    }
    let mut blocks = Vec::with_capacity(repr.blocks.len());
    for (b, &n) in repr.blocks.iter().zip(&algebra.blocks) {
        let m = match b {
            BlockRepr::Monomial(mr) => parse_monomial(mr)?.to_cmat(algebra.conductor),
            BlockRepr::Dense(dr) => parse_cmat(algebra.conductor, dr)?,
        };
        if m.rows != n || m.cols != n {
            return Err(IoError::BadShape("unitary block size".into()));
        }
        blocks.push(m);
    }
    Ok(AlgebraElement { blocks })
}

// ---------------------------------------------------------------------------
// serialized stage actions
// ---------------------------------------------------------------------------

/// A stage element as its coefficient matrices indexed by the acting group.
pub type ElementRepr = Vec<MatrixRepr>;

pub fn element_to_repr(x: &StageElement) -> ElementRepr {
    x.coeffs.iter().map(cmat_to_repr).collect()
}

pub fn parse_element(stage: &CrossedStage, repr: &ElementRepr) -> Result<StageElement, IoError> {
    let kg = stage.k_group();
    if repr.len() != kg.order() {
        return Err(IoError::BadShape("element coefficients".into()));
    }
    let mut x = stage.zero();
    for (k, mr) in repr.iter().enumerate() {
        let m = parse_cmat(stage.conductor, mr)?;
        if m.rows != stage.base_dim() || m.cols != stage.base_dim() {
            return Err(IoError::BadShape("element coefficient size".into()));
        }
        x.coeffs[k] = m;
    }
    Ok(x)
}

/// A fully serialized anomalous action: everything needed to re-verify it
/// from scratch. Deserialization re-validates the crossed-product data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionFile {
    pub group: FiniteGroup,
    pub k_group: FiniteGroup,
    pub conductor: u64,
    pub base_dim: usize,
    pub k_unitaries: Vec<MonomialRepr>,
    /// Twisting 2-cocycle on `K` as a sparse table over pairs.
    pub twist: Vec<CocycleEntry>,
    pub unit: ElementRepr,
    pub spanning: Vec<ElementRepr>,
    /// `θ_g` tabulated on the spanning basis `e_{ij} v_k` of the full stage.
    pub theta: Vec<Vec<ElementRepr>>,
    pub u: Vec<ElementRepr>,
    /// ω as a sparse table over triples of `group`.
    pub omega: Vec<CocycleEntry>,
}

pub fn action_to_file(a: &AnomalousAction) -> ActionFile {
    let stage = &a.stage;
    let kg = stage.k_group();
    let mut twist = Vec::new();
    for k in kg.elements() {
        for l in kg.elements() {
            let p = stage.c(k, l);
            if !p.is_zero() {
                twist.push(CocycleEntry {
                    args: vec![k, l],
                    phase: p.to_string(),
                });
            }
        }
    }
    let mut omega = Vec::new();
    for t in a.omega.tuples() {
        let p = &a.omega.value(&t)[0];
        if !p.is_zero() {
            omega.push(CocycleEntry {
                args: t,
                phase: p.to_string(),
            });
        }
    }
    // tabulate θ on the full spanning basis
    let basis = stage.spanning_set();
    let theta = a
        .theta
        .iter()
        .map(|t| {
            basis
                .iter()
                .map(|s| element_to_repr(&t.apply(stage, s)))
                .collect()
        })
        .collect();
    ActionFile {
        group: a.group.clone(),
        k_group: kg.clone(),
        conductor: stage.conductor,
        base_dim: stage.base_dim(),
        k_unitaries: kg
            .elements()
            .map(|k| monomial_to_repr(stage.action.unitary(k)))
            .collect(),
        twist,
        unit: element_to_repr(&a.unit),
        spanning: a.spanning.iter().map(element_to_repr).collect(),
        theta,
        u: a.u.iter().map(element_to_repr).collect(),
        omega,
    }
}

pub fn action_from_file(file: &ActionFile) -> Result<AnomalousAction, IoError> {
    let unitaries: Result<Vec<Monomial>, IoError> =
        file.k_unitaries.iter().map(parse_monomial).collect();
    let action = AlgebraAction::new(file.k_group.clone(), file.base_dim, unitaries?)?;
    let k_module = CoefficientModule::circle(file.k_group.clone());
    let mut c = Cochain::zero(&k_module, 2);
    for entry in &file.twist {
        let p = parse_phase(&entry.phase).map_err(IoError::BadPhase)?;
        c.set(&entry.args, vec![p]);
    }
    let stage = build_crossed_product(action, file.conductor, &c)?;
    let basis_len = stage.algebra_dim();
    let mut theta = Vec::with_capacity(file.theta.len());
    for images in &file.theta {
        if images.len() != basis_len {
            return Err(IoError::BadShape("theta images".into()));
        }
        let imgs: Result<Vec<StageElement>, IoError> =
            images.iter().map(|r| parse_element(&stage, r)).collect();
        theta.push(StageAutomorphism::Tabulated { images: imgs? });
    }
    let u: Result<Vec<StageElement>, IoError> =
        file.u.iter().map(|r| parse_element(&stage, r)).collect();
    let unit = parse_element(&stage, &file.unit)?;
    let spanning: Result<Vec<StageElement>, IoError> = file
        .spanning
        .iter()
        .map(|r| parse_element(&stage, r))
        .collect();
    let q_module = CoefficientModule::circle(file.group.clone());
    let mut omega = Cochain::zero(&q_module, 3);
    for entry in &file.omega {
        let p = parse_phase(&entry.phase).map_err(IoError::BadPhase)?;
        omega.set(&entry.args, vec![p]);
    }
    Ok(AnomalousAction {
        group: file.group.clone(),
        stage,
        unit,
        spanning: spanning?,
        theta,
        u: u?,
        omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anomalous::{synthesize, verify_definition};
    use crate::cohomology::normalize;
    use crate::extension::build_extension;

    #[test]
    fn group_inputs() {
        let g = parse_group(&GroupInput::Shorthand("cyclic_4".into())).unwrap();
        assert_eq!(g.order(), 4);
        assert_eq!(parse_group_shorthand("s_3").unwrap().order(), 6);
        assert_eq!(parse_group_shorthand("z6").unwrap().order(), 6);
        assert_eq!(parse_group_shorthand("dihedral_5").unwrap().order(), 10);
        assert_eq!(parse_group_shorthand("klein").unwrap().order(), 4);
        assert!(parse_group_shorthand("nope_7").is_err());
        let spec: GroupInput = serde_json::from_str(
            r#"{"kind":"product","factors":[{"kind":"cyclic","n":2},{"kind":"cyclic","n":3}]}"#,
        )
        .unwrap();
        assert_eq!(parse_group(&spec).unwrap().order(), 6);
    }

    #[test]
    fn cocycle_inputs() {
        let gen: CocycleInput =
            serde_json::from_str(r#"{"kind":"generator","group":"cyclic_2","index":0}"#).unwrap();
        let c = parse_cocycle(&gen).unwrap();
        assert_eq!(crate::cohomology::class_order(&c).unwrap(), 2);

        let table: CocycleInput = serde_json::from_str(
            r#"{"group":"cyclic_2","degree":3,"values":[{"args":[1,1,1],"phase":"1/2"}]}"#,
        )
        .unwrap();
        let c = parse_cocycle(&table).unwrap();
        assert!(crate::cohomology::is_cocycle(&c));
        assert_eq!(c.phase(&[1, 1, 1]), &Phase::half());
        assert!(c.phase(&[0, 1, 1]).is_zero());

        // round-trip through the sparse table
        let t = cochain_to_table(&c);
        let c2 = parse_cocycle(&CocycleInput::Table(t)).unwrap();
        assert_eq!(c2.phase(&[1, 1, 1]), &Phase::half());
    }

    #[test]
    fn supernatural_inputs() {
        let n = parse_supernatural(r#"{"2":"inf","3":4}"#).unwrap();
        assert_eq!(n.to_string(), "2^inf·3^4");
        let m = parse_supernatural("2^inf*3^4").unwrap();
        assert_eq!(n, m);
        assert_eq!(parse_supernatural("1").unwrap(), SupernaturalNumber::one());
        assert!(parse_supernatural(r#"{"4":"inf"}"#).is_err());
        assert!(parse_supernatural("6^inf").is_err());
        let j = supernatural_to_json(&n);
        assert_eq!(parse_supernatural(&j.to_string()).unwrap(), n);
    }

    #[test]
    fn action_file_roundtrip() {
        let q = FiniteGroup::cyclic(2);
        let module = CoefficientModule::circle(q.clone());
        let h = cohomology_group(&module, 3).unwrap();
        let omega = normalize(&h.generators[0]).unwrap().cocycle;
        let ext = build_extension(&q, &omega).unwrap();
        let a = synthesize(&ext, 0).unwrap();
        let file = action_to_file(&a);
        let json = serde_json::to_string(&file).unwrap();
        let back: ActionFile = serde_json::from_str(&json).unwrap();
        let a2 = action_from_file(&back).unwrap();
        assert!(verify_definition(&a2).pass());
        assert_eq!(a2.omega, a.omega);
    }

    #[test]
    fn unitary_parsing() {
        let algebra = parse_algebra(&AlgebraRepr {
            blocks: vec![2],
            conductor: 4,
        });
        let repr: UnitaryRepr =
            serde_json::from_str(r#"{"blocks":[{"perm":[1,0],"phases":["1/4","0"]}]}"#).unwrap();
        let u = parse_unitary(&algebra, &repr).unwrap();
        assert!(u.is_unitary());
        let phases = crate::multimatrix::blockwise_det_phase(&u).unwrap();
        assert_eq!(phases, vec![Phase::new(3, 4)]); // sign 1/2 + 1/4
    }
}
