//! GF(2^m) field descriptions, the symbolic multiplication specification
//! and a reference word-level multiplier.

use std::fmt;

use log::warn;
use thiserror::Error;

use crate::gf2x::{find_factor, is_irreducible, BitPoly};
use crate::gfpoly::{Monomial, Polynomial, VariableId, VariableTable};

/// Irreducibility is always checked up to this degree under [`IrreducibilityCheck::Auto`].
pub const AUTO_CHECK_MAX_DEGREE: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("syntax error in field polynomial {text:?}: {msg}")]
    Syntax { text: String, msg: String },
    #[error("degree error: {0}")]
    Degree(String),
    #[error("polynomial {poly} is reducible; factor {factor}")]
    Reducible { poly: String, factor: String },
    #[error("polynomial {0} is not irreducible")]
    NotIrreducible(String),
    #[error("no built-in irreducible polynomial for degree {0}")]
    UnsupportedDegree(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IrreducibilityCheck {
    On,
    Off,
    #[default]
    Auto,
}

impl std::str::FromStr for IrreducibilityCheck {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on" => Ok(Self::On),
            "off" => Ok(Self::Off),
            "auto" => Ok(Self::Auto),
            other => Err(format!("expected on|off|auto, got {other:?}")),
        }
    }
}

/// A binary extension field GF(2^m) in polynomial basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    m: usize,
    modulus: BitPoly,
}

/// Built-in moduli, as exponent lists. Each entry is checked by the test suite.
const BUILTIN: &[(usize, &[usize])] = &[
    (1, &[1, 0]),
    (2, &[2, 1, 0]),
    (3, &[3, 1, 0]),
    (4, &[4, 1, 0]),
    (5, &[5, 2, 0]),
    (6, &[6, 1, 0]),
    (7, &[7, 1, 0]),
    (8, &[8, 4, 3, 1, 0]),
    (9, &[9, 4, 0]),
    (10, &[10, 3, 0]),
    (11, &[11, 2, 0]),
    (12, &[12, 3, 0]),
    (13, &[13, 4, 3, 1, 0]),
    (14, &[14, 5, 0]),
    (15, &[15, 1, 0]),
    (16, &[16, 5, 3, 1, 0]),
    (32, &[32, 7, 3, 2, 0]),
    (48, &[48, 9, 7, 4, 0]),
    (64, &[64, 4, 3, 1, 0]),
    (96, &[96, 10, 9, 6, 0]),
    (128, &[128, 7, 2, 1, 0]),
    (163, &[163, 7, 6, 3, 0]),
    (233, &[233, 74, 0]),
    (283, &[283, 12, 7, 5, 0]),
    (409, &[409, 87, 0]),
    (571, &[571, 10, 5, 2, 0]),
];

impl FieldSpec {
    /// Validates `modulus` as a field polynomial.
    pub fn new(modulus: BitPoly, check: IrreducibilityCheck) -> Result<Self, FieldError> {
        let m = match modulus.degree() {
            Some(m) if m >= 1 => m,
            _ => {
                return Err(FieldError::Degree(format!(
                    "field polynomial {} must have degree at least 1",
                    modulus.to_term_string()
                )))
            }
        };
        let run_check = match check {
            IrreducibilityCheck::On => true,
            IrreducibilityCheck::Off => false,
            IrreducibilityCheck::Auto => m <= AUTO_CHECK_MAX_DEGREE,
        };
        if !modulus.coeff(0) {
            // divisible by x; for m = 1 the polynomial x itself is irreducible but unusable
            return Err(FieldError::Reducible {
                poly: modulus.to_term_string(),
                factor: "x".to_string(),
            });
        }
        if run_check && !is_irreducible(&modulus) {
            if m <= AUTO_CHECK_MAX_DEGREE || check == IrreducibilityCheck::On {
                if let Some(f) = find_factor(&modulus) {
                    return Err(FieldError::Reducible {
                        poly: modulus.to_term_string(),
                        factor: f.to_term_string(),
                    });
                }
            }
            return Err(FieldError::NotIrreducible(modulus.to_term_string()));
        }
        if !run_check {
            warn!(
                "irreducibility of degree-{m} polynomial {} not checked",
                modulus.to_term_string()
            );
        }
        Ok(Self { m, modulus })
    }

    /// Parses `x^4+x+1`-style term lists or `0x13`-style bitmasks.
    pub fn parse(text: &str) -> Result<Self, FieldError> {
        Self::parse_with(text, IrreducibilityCheck::Auto)
    }

    pub fn parse_with(text: &str, check: IrreducibilityCheck) -> Result<Self, FieldError> {
        Self::new(parse_bitpoly(text)?, check)
    }

    /// Built-in field of degree `m`.
    pub fn builtin(m: usize) -> Result<Self, FieldError> {
        let (_, exps) = BUILTIN
            .iter()
            .find(|(d, _)| *d == m)
            .ok_or(FieldError::UnsupportedDegree(m))?;
        Ok(Self {
            m,
            modulus: BitPoly::from_exponents(exps.iter().copied()),
        })
    }

    pub fn builtin_degrees() -> impl Iterator<Item = usize> {
        BUILTIN.iter().map(|(d, _)| *d)
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn modulus(&self) -> &BitPoly {
        &self.modulus
    }

    /// For each slot k < m, the product columns s_j (0 <= j <= 2m-2) that fold into it.
    ///
    /// Columns of degree >= m are folded from the top down using
    /// x^m = (P - x^m), repeating until every column lands below m.
    pub fn slot_columns(&self) -> Vec<Vec<usize>> {
        let m = self.m;
        let top = 2 * m - 1;
        // pending[d] = set of original columns currently sitting at degree d
        let mut pending: Vec<BitPoly> = (0..top).map(BitPoly::monomial).collect();
        let lower: Vec<usize> = self
            .modulus
            .exponents()
            .into_iter()
            .filter(|&t| t < m)
            .collect();
        for d in (m..top).rev() {
            let cols = std::mem::take(&mut pending[d]);
            for &t in &lower {
                let target = d - m + t;
                pending[target] = pending[target].add(&cols);
            }
        }
        pending.truncate(m);
        pending.into_iter().map(|cols| cols.exponents()).collect()
    }

    /// XOR gates needed to fold the column sums into the outputs:
    /// the sum over slots of (contributing columns - 1).
    pub fn reduction_xor_cost(&self) -> usize {
        self.slot_columns()
            .iter()
            .map(|c| c.len().saturating_sub(1))
            .sum()
    }

    /// Symbolic A(x)*B(x) mod P(x) over the operand variables `a` and `b`.
    pub fn expected_signature(&self, a: &[VariableId], b: &[VariableId]) -> Signature {
        assert_eq!(a.len(), self.m, "operand A width");
        assert_eq!(b.len(), self.m, "operand B width");
        let column = |j: usize| -> Vec<Monomial> {
            let lo = j.saturating_sub(self.m - 1);
            let hi = j.min(self.m - 1);
            (lo..=hi)
                .map(|i| Monomial::from_vars([a[i], b[j - i]]))
                .collect()
        };
        let slots = self
            .slot_columns()
            .into_iter()
            .map(|cols| cols.into_iter().flat_map(column).collect())
            .collect();
        Signature { slots }
    }

    /// Carry-less a*b reduced mod P, for m <= 64.
    pub fn gf_mul(&self, a: u64, b: u64) -> u64 {
        assert!(self.m <= 64, "word-level reference limited to m <= 64");
        let m = self.m;
        let mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        debug_assert!(a & !mask == 0 && b & !mask == 0);
        let mut prod: u128 = 0;
        for i in 0..m {
            if b >> i & 1 == 1 {
                prod ^= (a as u128) << i;
            }
        }
        let p = self.modulus_u128();
        for d in (m..2 * m).rev() {
            if prod >> d & 1 == 1 {
                prod ^= p << (d - m);
            }
        }
        prod as u64 & mask
    }

    fn modulus_u128(&self) -> u128 {
        let limbs = self.modulus.limbs();
        limbs[0] as u128 | (limbs.get(1).copied().unwrap_or(0) as u128) << 64
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {}", self.m, self.modulus.to_term_string())
    }
}

/// Parses a GF(2) polynomial from a term list (`x^4 + x + 1`) or a hex mask (`0x13`).
pub fn parse_bitpoly(text: &str) -> Result<BitPoly, FieldError> {
    let syntax = |msg: String| FieldError::Syntax {
        text: text.to_string(),
        msg,
    };
    let t = text.trim();
    if t.is_empty() {
        return Err(syntax("empty polynomial".into()));
    }
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        let hex = hex.replace('_', "");
        if hex.is_empty() || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(syntax("bad hex digits".into()));
        }
        let mut p = BitPoly::zero();
        for (i, c) in hex.chars().rev().enumerate() {
            let nib = c.to_digit(16).unwrap();
            for bit in 0..4 {
                if nib >> bit & 1 == 1 {
                    p.flip(4 * i + bit);
                }
            }
        }
        return Ok(p);
    }
    let mut p = BitPoly::zero();
    for raw in t.split('+') {
        let term: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let exp = match term.as_str() {
            "" => return Err(syntax("empty term".into())),
            "1" => 0,
            "x" | "X" => 1,
            _ => {
                let rest = term
                    .strip_prefix("x^")
                    .or_else(|| term.strip_prefix("X^"))
                    .ok_or_else(|| syntax(format!("unrecognized term {term:?}")))?;
                rest.parse::<usize>()
                    .map_err(|_| syntax(format!("bad exponent in {term:?}")))?
            }
        };
        // repeated terms add modulo 2
        p.flip(exp);
    }
    Ok(p)
}

/// Per-degree slots of a signature polynomial: slot i is the coefficient of x^i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub slots: Vec<Polynomial>,
}

impl Signature {
    pub fn new(slots: Vec<Polynomial>) -> Self {
        Self { slots }
    }

    pub fn width(&self) -> usize {
        self.slots.len()
    }

    pub fn term_count(&self) -> usize {
        self.slots.iter().map(Polynomial::len).sum()
    }

    /// `slot0 + x*(slot1) + x^2*(slot2)`, omitting zero slots.
    pub fn render(&self, table: &VariableTable) -> String {
        let parts: Vec<String> = self
            .slots
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(k, p)| render_slot(k, &p.render(table)))
            .collect();
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

pub(crate) fn x_power(k: usize) -> String {
    match k {
        0 => String::new(),
        1 => "x".to_string(),
        _ => format!("x^{k}"),
    }
}

pub(crate) fn render_slot(k: usize, body: &str) -> String {
    if k == 0 {
        body.to_string()
    } else {
        format!("{}*({})", x_power(k), body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfpoly::VarKind;

    fn operands(m: usize) -> (VariableTable, Vec<VariableId>, Vec<VariableId>) {
        let mut t = VariableTable::new();
        let a = (0..m)
            .map(|i| t.intern(&format!("a{i}"), VarKind::PrimaryInput))
            .collect();
        let b = (0..m)
            .map(|i| t.intern(&format!("b{i}"), VarKind::PrimaryInput))
            .collect();
        (t, a, b)
    }

    #[test]
    fn parse_examples() {
        let f = FieldSpec::parse("x^2+x+1").unwrap();
        assert_eq!(f.degree(), 2);
        assert_eq!(f.modulus().exponents(), vec![0, 1, 2]);
        let f = FieldSpec::parse("x^4 + x^3 + 1").unwrap();
        assert_eq!(f.modulus().exponents(), vec![0, 3, 4]);
        assert_eq!(
            FieldSpec::parse("0x13").unwrap().modulus().to_term_string(),
            "x^4 + x + 1"
        );
        match FieldSpec::parse("x^2+1") {
            Err(FieldError::Reducible { factor, .. }) => assert_eq!(factor, "x + 1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            FieldSpec::parse(""),
            Err(FieldError::Syntax { .. })
        ));
        assert!(matches!(
            FieldSpec::parse("x^+1"),
            Err(FieldError::Syntax { .. })
        ));
        assert!(matches!(
            FieldSpec::parse("y^2+1"),
            Err(FieldError::Syntax { .. })
        ));
        assert!(matches!(
            FieldSpec::parse("0xzz"),
            Err(FieldError::Syntax { .. })
        ));
        assert!(matches!(FieldSpec::parse("1"), Err(FieldError::Degree(_))));
        assert!(matches!(
            FieldSpec::parse("x^2+x^2"),
            Err(FieldError::Degree(_))
        ));
        assert!(matches!(
            FieldSpec::parse("x^3+x"),
            Err(FieldError::Reducible { .. })
        ));
    }

    #[test]
    fn unchecked_large_degree_is_accepted_with_auto() {
        // reducible, but above the auto-check limit
        let f = FieldSpec::parse_with("x^66+x^2+1", IrreducibilityCheck::Auto).unwrap();
        assert_eq!(f.degree(), 66);
        assert!(FieldSpec::parse_with("x^66+x^2+1", IrreducibilityCheck::On).is_err());
    }

    #[test]
    fn gf4_signature_matches_hand_expansion() {
        let (t, a, b) = operands(2);
        let sig = FieldSpec::parse("x^2+x+1")
            .unwrap()
            .expected_signature(&a, &b);
        assert_eq!(sig.slots[0].render(&t), "a0*b0 + a1*b1");
        assert_eq!(sig.slots[1].render(&t), "a0*b1 + a1*b0 + a1*b1");
        assert_eq!(sig.render(&t), "a0*b0 + a1*b1 + x*(a0*b1 + a1*b0 + a1*b1)");
    }

    #[test]
    fn gf16_column_tables() {
        let f = FieldSpec::parse("x^4+x+1").unwrap();
        assert_eq!(
            f.slot_columns(),
            vec![vec![0, 4], vec![1, 4, 5], vec![2, 5, 6], vec![3, 6]]
        );
        assert_eq!(f.reduction_xor_cost(), 6);
        let f = FieldSpec::parse("x^4+x^3+1").unwrap();
        assert_eq!(
            f.slot_columns(),
            vec![
                vec![0, 4, 5, 6],
                vec![1, 5, 6],
                vec![2, 6],
                vec![3, 4, 5, 6]
            ]
        );
        assert_eq!(f.reduction_xor_cost(), 9);
    }

    #[test]
    fn gf_mul_examples() {
        let f = FieldSpec::builtin(2).unwrap();
        assert_eq!(f.gf_mul(0b10, 0b10), 0b11);
        for b in 0..4 {
            assert_eq!(f.gf_mul(1, b), b);
            assert_eq!(f.gf_mul(0, b), 0);
        }
        // AES field: {57} * {83} = {c1}
        assert_eq!(FieldSpec::builtin(8).unwrap().gf_mul(0x57, 0x83), 0xc1);
    }

    #[test]
    fn gf_mul_at_full_width() {
        let f = FieldSpec::builtin(64).unwrap();
        let a = 0xdead_beef_0123_4567;
        let b = 0x8000_0000_0000_0001;
        assert_eq!(f.gf_mul(a, b), f.gf_mul(b, a));
        assert_eq!(f.gf_mul(a, 1), a);
    }

    #[test]
    fn builtin_lookup() {
        assert_eq!(
            FieldSpec::builtin(2).unwrap().modulus().to_term_string(),
            "x^2 + x + 1"
        );
        assert_eq!(
            FieldSpec::builtin(4).unwrap().modulus().to_term_string(),
            "x^4 + x + 1"
        );
        assert_eq!(
            FieldSpec::builtin(17),
            Err(FieldError::UnsupportedDegree(17))
        );
        for m in FieldSpec::builtin_degrees() {
            let f = FieldSpec::builtin(m).unwrap();
            assert!(is_irreducible(f.modulus()), "builtin degree {m}");
            assert_eq!(f.modulus().degree(), Some(m));
        }
    }

    #[test]
    fn signature_has_only_cross_products() {
        for m in [3, 5, 8] {
            let (_, a, b) = operands(m);
            let sig = FieldSpec::builtin(m).unwrap().expected_signature(&a, &b);
            for slot in &sig.slots {
                for mono in slot.iter() {
                    assert_eq!(mono.degree(), 2);
                    assert!(a.contains(&mono.vars()[0]) && b.contains(&mono.vars()[1]));
                }
            }
        }
    }
}
