//! Canonical heights for abelian automorphism groups of maximal rank.
//!
//! Two exact testbeds: powers of an elliptic curve with integer matrix
//! actions, and Wehler K3 surfaces in P²×P² with their Vieta involutions.

pub mod error;
pub mod exact;
pub mod linalg;
pub mod poly;
pub mod tolerance;
pub mod cone_engine;
pub mod character_lattice;
pub mod ns_abelian;
pub mod elliptic;
pub mod wehler;
pub mod canheight;
