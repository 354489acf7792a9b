//! Exact-arithmetic computation of low-degree finite group cohomology,
//! twisted crossed-product towers of finite-dimensional operator algebras,
//! anomalous group actions on their stages, and the existence/impossibility
//! decision rules for UHF-type and Jiang–Su-type targets.
//!
//! Everything is exact: group cohomology runs on integer Smith normal form,
//! operator-algebra stages live over cyclotomic fields, and every claimed
//! identity is verified by exhaustive sweeps with zero tolerance.

pub mod anomalous;
pub mod arith;
pub mod cohomology;
pub mod crossed;
pub mod cyclo;
pub mod extension;
pub mod groups;
pub mod guide;
pub mod iojson;
pub mod matrix;
pub mod multimatrix;
pub mod obstruction;
pub mod snf;
