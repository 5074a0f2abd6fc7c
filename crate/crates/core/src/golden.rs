//! Reference circuits shipped with the library.

/// Mapped 2-bit GF(2^2) multiplier (P = x^2 + x + 1) built from NAND, NOT and
/// XOR cells. The declaration order makes the reverse topological order
/// G7, G6, G5, G8, G4, G3, G2, G1, which the golden trace tests rely on.
pub const GF4_MAPPED_NETLIST: &str = include_str!("../tests/data/gf4_mapped.net");
