//! Formal verification of gate-level GF(2^m) multipliers by backward
//! rewriting, decomposed into one independent task per output bit.

pub mod fieldspec;
pub mod genbench;
pub mod gf2x;
pub mod gfpoly;
pub mod golden;
pub mod netlist;
pub mod rewriter;
pub mod scheduler;
pub mod selftest;

pub use fieldspec::{FieldError, FieldSpec, IrreducibilityCheck, Signature};
pub use gfpoly::{Monomial, Polynomial, VariableId, VariableTable};
pub use netlist::{parse_blif, parse_netlist, Netlist, NetlistError};
pub use scheduler::{verify, Verdict, VerifyConfig, VerifyError, VerifyReport};
