//! Multilinear polynomials over GF(2).
//!
//! A [`Polynomial`] is a set of [`Monomial`]s: membership means coefficient 1,
//! absence means coefficient 0. Inserting a monomial that is already present
//! removes it, which is exactly addition modulo 2. Monomials are sets of
//! variables, so `x * x = x` holds by construction.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use rustc_hash::FxHashSet;
use smallvec::SmallVec;
use thiserror::Error;

/// Dense handle for a circuit variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct VariableId(pub u32);

impl VariableId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarKind {
    PrimaryInput,
    PrimaryOutput,
    Internal,
}

/// Bidirectional name <-> id map for one verification session.
#[derive(Debug, Clone, Default)]
pub struct VariableTable {
    names: Vec<String>,
    kinds: Vec<VarKind>,
    index: HashMap<String, VariableId>,
}

impl VariableTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `name`, creating it with `kind` if it is new.
    /// The kind of an existing entry is left untouched.
    pub fn intern(&mut self, name: &str, kind: VarKind) -> VariableId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = VariableId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.kinds.push(kind);
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<VariableId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: VariableId) -> &str {
        &self.names[id.index()]
    }

    pub fn kind(&self, id: VariableId) -> VarKind {
        self.kinds[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VariableId> {
        (0..self.names.len() as u32).map(VariableId)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfPolyError {
    #[error("substitution cycle: replacement for {0:?} contains the variable itself")]
    SubstitutionCycle(VariableId),
    #[error("unbound variables during evaluation: {0:?}")]
    UnboundVariable(Vec<VariableId>),
}

/// Product of distinct variables. The empty monomial is the constant 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    vars: SmallVec<[VariableId; 4]>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: VariableId) -> Self {
        let mut vars = SmallVec::new();
        vars.push(v);
        Self { vars }
    }

    /// Builds a monomial from arbitrary variables; repeats collapse (x*x = x).
    pub fn from_vars<I: IntoIterator<Item = VariableId>>(vars: I) -> Self {
        let mut vars: SmallVec<[VariableId; 4]> = vars.into_iter().collect();
        vars.sort_unstable();
        vars.dedup();
        Self { vars }
    }

    pub fn vars(&self) -> &[VariableId] {
        &self.vars
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    pub fn is_one(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn contains(&self, v: VariableId) -> bool {
        self.vars.binary_search(&v).is_ok()
    }

    /// Copy of `self` with `v` removed.
    pub fn without(&self, v: VariableId) -> Self {
        Self {
            vars: self.vars.iter().copied().filter(|&x| x != v).collect(),
        }
    }

    /// Product under x^2 = x: the sorted union of both variable sets.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        if self.vars.is_empty() {
            return other.clone();
        }
        if other.vars.is_empty() {
            return self.clone();
        }
        let (a, b) = (&self.vars, &other.vars);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { vars: out }
    }

    pub fn evaluate(
        &self,
        assignment: &dyn Fn(VariableId) -> Option<bool>,
    ) -> Result<bool, GfPolyError> {
        let mut value = true;
        let mut missing = Vec::new();
        for &v in &self.vars {
            match assignment(v) {
                Some(b) => value &= b,
                None => missing.push(v),
            }
        }
        if missing.is_empty() {
            Ok(value)
        } else {
            Err(GfPolyError::UnboundVariable(missing))
        }
    }

    pub fn render(&self, table: &VariableTable) -> String {
        if self.vars.is_empty() {
            return "1".to_string();
        }
        let names: Vec<&str> = self.vars.iter().map(|&v| table.name(v)).collect();
        names.join("*")
    }
}

/// Degree first, then lexicographic on variable ids.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.vars
            .len()
            .cmp(&other.vars.len())
            .then_with(|| self.vars.as_slice().cmp(other.vars.as_slice()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Counters filled in by [`Polynomial::substitute_in_place`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubstitutionStats {
    /// Terms produced before any cancellation (pass-through plus expanded products).
    pub expanded: usize,
    /// Number of cancelled pairs.
    pub cancelled: usize,
    /// Set by the caller to collect `cancelled_monomials`.
    pub record_monomials: bool,
    /// Monomials removed by cancellation, in event order.
    pub cancelled_monomials: Vec<Monomial>,
}

/// Sum of monomials over GF(2).
#[derive(Clone, Default)]
pub struct Polynomial {
    terms: FxHashSet<Monomial>,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for Polynomial {}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.sorted_terms().iter().map(|m| m.vars()))
            .finish()
    }
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_monomial(Monomial::one())
    }

    pub fn var(v: VariableId) -> Self {
        Self::from_monomial(Monomial::var(v))
    }

    pub fn from_monomial(m: Monomial) -> Self {
        let mut p = Self::zero();
        p.toggle(m);
        p
    }

    /// Sum of the given monomials; repeated monomials cancel in pairs.
    pub fn from_monomials<I: IntoIterator<Item = Monomial>>(monomials: I) -> Self {
        let mut p = Self::zero();
        for m in monomials {
            p.toggle(m);
        }
        p
    }

    pub fn with_capacity(n: usize) -> Self {
        let mut terms = FxHashSet::default();
        terms.reserve(n);
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, m: &Monomial) -> bool {
        self.terms.contains(m)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.iter()
    }

    /// Adds `m` modulo 2. Returns `false` when `m` cancelled an existing term.
    pub fn toggle(&mut self, m: Monomial) -> bool {
        if self.terms.remove(&m) {
            false
        } else {
            self.terms.insert(m);
            true
        }
    }

    pub fn add_assign(&mut self, other: &Polynomial) {
        for m in &other.terms {
            if !self.terms.remove(m) {
                self.terms.insert(m.clone());
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let (big, small) = if self.len() >= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = big.clone();
        out.add_assign(small);
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                out.toggle(a.mul(b));
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Polynomial {
        Polynomial::from_monomials(self.terms.iter().map(|t| t.mul(m)))
    }

    /// Every variable occurring in the polynomial, sorted.
    pub fn variables(&self) -> Vec<VariableId> {
        let mut vars: Vec<VariableId> = self
            .terms
            .iter()
            .flat_map(|m| m.vars().iter().copied())
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    pub fn mentions(&self, v: VariableId) -> bool {
        self.terms.iter().any(|m| m.contains(v))
    }

    /// Replaces `v` by `e` everywhere, reducing modulo 2.
    pub fn substitute(&self, v: VariableId, e: &Polynomial) -> Result<Polynomial, GfPolyError> {
        let mut out = self.clone();
        out.substitute_in_place(v, e, None)?;
        Ok(out)
    }

    /// In-place form of [`substitute`](Self::substitute) that optionally records
    /// how many terms were produced and which ones cancelled.
    pub fn substitute_in_place(
        &mut self,
        v: VariableId,
        e: &Polynomial,
        mut stats: Option<&mut SubstitutionStats>,
    ) -> Result<(), GfPolyError> {
        if e.mentions(v) {
            return Err(GfPolyError::SubstitutionCycle(v));
        }
        let hits: Vec<Monomial> = self
            .terms
            .iter()
            .filter(|m| m.contains(v))
            .cloned()
            .collect();
        let passthrough = self.terms.len() - hits.len();
        for m in &hits {
            self.terms.remove(m);
        }
        self.terms.reserve(hits.len() * e.len());
        let mut cancelled = 0;
        let record = stats.as_ref().is_some_and(|s| s.record_monomials);
        for m in &hits {
            let rest = m.without(v);
            for t in &e.terms {
                let product = rest.mul(t);
                if self.terms.contains(&product) {
                    if record {
                        if let Some(s) = stats.as_deref_mut() {
                            s.cancelled_monomials.push(product.clone());
                        }
                    }
                    self.terms.remove(&product);
                    cancelled += 1;
                } else {
                    self.terms.insert(product);
                }
            }
        }
        if let Some(s) = stats {
            s.expanded = passthrough + hits.len() * e.len();
            s.cancelled = cancelled;
        }
        Ok(())
    }

    /// XOR over monomials of AND over variables.
    pub fn evaluate(
        &self,
        assignment: &dyn Fn(VariableId) -> Option<bool>,
    ) -> Result<bool, GfPolyError> {
        let mut missing = Vec::new();
        let mut value = false;
        for m in &self.terms {
            match m.evaluate(assignment) {
                Ok(b) => value ^= b,
                Err(GfPolyError::UnboundVariable(vs)) => missing.extend(vs),
                Err(e) => return Err(e),
            }
        }
        if missing.is_empty() {
            Ok(value)
        } else {
            missing.sort_unstable();
            missing.dedup();
            Err(GfPolyError::UnboundVariable(missing))
        }
    }

    /// Evaluates with `assignment[v.index()]`; ids beyond the slice are unbound.
    pub fn evaluate_slice(&self, assignment: &[bool]) -> Result<bool, GfPolyError> {
        self.evaluate(&|v| assignment.get(v.index()).copied())
    }

    pub fn sorted_terms(&self) -> Vec<&Monomial> {
        let mut terms: Vec<&Monomial> = self.terms.iter().collect();
        terms.sort_unstable();
        terms
    }

    /// Canonical text: ` + `-joined terms in monomial order, `0` when empty.
    pub fn render(&self, table: &VariableTable) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .sorted_terms()
            .into_iter()
            .map(|m| m.render(table))
            .collect();
        parts.join(" + ")
    }
}

impl FromIterator<Monomial> for Polynomial {
    fn from_iter<I: IntoIterator<Item = Monomial>>(iter: I) -> Self {
        Polynomial::from_monomials(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(names: &[&str]) -> (VariableTable, Vec<VariableId>) {
        let mut t = VariableTable::new();
        let ids = names
            .iter()
            .map(|n| t.intern(n, VarKind::Internal))
            .collect();
        (t, ids)
    }

    fn mono(vs: &[VariableId]) -> Monomial {
        Monomial::from_vars(vs.iter().copied())
    }

    fn poly(ms: &[&[VariableId]]) -> Polynomial {
        ms.iter().map(|m| mono(m)).collect()
    }

    fn all_assignments(nvars: usize) -> impl Iterator<Item = Vec<bool>> {
        (0u32..1 << nvars).map(move |bits| (0..nvars).map(|i| bits >> i & 1 == 1).collect())
    }

    #[test]
    fn mono_mul_examples() {
        let (_, v) = table(&["a0", "a1", "b0", "b1"]);
        let (a0, a1, b0, b1) = (v[0], v[1], v[2], v[3]);
        assert_eq!(mono(&[a0]).mul(&mono(&[b0])), mono(&[a0, b0]));
        assert_eq!(mono(&[a0]).mul(&mono(&[a0])), mono(&[a0]));
        assert_eq!(Monomial::one().mul(&mono(&[a1, b1])), mono(&[a1, b1]));
    }

    #[test]
    fn poly_add_examples() {
        let (t, v) = table(&["a", "b", "c", "n1", "n2"]);
        let (a, b, c, n1, n2) = (v[0], v[1], v[2], v[3], v[4]);
        let lhs = poly(&[&[a], &[b]]).add(&poly(&[&[b], &[c]]));
        assert_eq!(lhs, poly(&[&[a], &[c]]));
        let p = poly(&[&[a, b], &[c], &[]]);
        assert!(p.add(&p).is_zero());

        let sum = poly(&[&[n1], &[n2]]).add(&poly(&[&[n2], &[]]));
        assert_eq!(sum.render(&t), "1 + n1");
        for asg in all_assignments(5) {
            let got = sum.evaluate_slice(&asg).unwrap();
            assert_eq!(got, asg[n1.index()] ^ true);
        }
    }

    #[test]
    fn poly_mul_examples() {
        let (t, v) = table(&["a", "b"]);
        let (a, b) = (v[0], v[1]);
        let ab = poly(&[&[a], &[b]]);
        assert_eq!(ab.mul(&ab), ab);
        assert!(Polynomial::zero().mul(&ab).is_zero());
        let one_a = poly(&[&[], &[a]]);
        let one_b = poly(&[&[], &[b]]);
        assert_eq!(one_a.mul(&one_b).render(&t), "1 + a + b + a*b");
    }

    #[test]
    fn substitute_examples() {
        let (t, v) = table(&["a0", "b0", "x", "z0", "z1", "n4", "n5", "n6"]);
        let (a0, b0, x, z0, z1, n4, n5, n6) = (v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]);
        let p = poly(&[&[z0], &[x, z1]]);
        let e = poly(&[&[n5], &[n6]]);
        let got = p.substitute(z1, &e).unwrap();
        assert_eq!(got, poly(&[&[z0], &[x, n5], &[x, n6]]));

        assert_eq!(p.substitute(n4, &e).unwrap(), p);

        let q = poly(&[&[n4, x]]);
        let got = q.substitute(n4, &poly(&[&[], &[a0, b0]])).unwrap();
        assert_eq!(got.render(&t), "x + a0*b0*x");
    }

    #[test]
    fn substitute_rejects_cycle() {
        let (_, v) = table(&["a", "b"]);
        let p = poly(&[&[v[0]]]);
        let e = poly(&[&[v[0], v[1]]]);
        assert_eq!(
            p.substitute(v[0], &e),
            Err(GfPolyError::SubstitutionCycle(v[0]))
        );
    }

    #[test]
    fn substitution_stats_count_cancellations() {
        let (_, v) = table(&["n2", "n3", "n4", "a0", "b1"]);
        let (n2, n3, n4, a0, b1) = (v[0], v[1], v[2], v[3], v[4]);
        // n3 + n4 + n2 + 1 with n4 := 1 + a0*b1
        let mut p = poly(&[&[n3], &[n4], &[n2], &[]]);
        let mut stats = SubstitutionStats {
            record_monomials: true,
            ..Default::default()
        };
        p.substitute_in_place(n4, &poly(&[&[], &[a0, b1]]), Some(&mut stats))
            .unwrap();
        assert_eq!(p, poly(&[&[n3], &[n2], &[a0, b1]]));
        assert_eq!(stats.expanded, 5);
        assert_eq!(stats.cancelled, 1);
        assert_eq!(stats.cancelled_monomials, vec![Monomial::one()]);
        assert_eq!(p.len(), stats.expanded - 2 * stats.cancelled);
    }

    #[test]
    fn evaluate_examples() {
        let (_, v) = table(&["a", "b", "a0", "b0", "a1", "b1"]);
        let (a, b) = (v[0], v[1]);
        let asg = |pairs: Vec<(VariableId, bool)>| {
            move |x: VariableId| pairs.iter().find(|p| p.0 == x).map(|p| p.1)
        };
        assert!(!poly(&[&[a], &[b]])
            .evaluate(&asg(vec![(a, true), (b, true)]))
            .unwrap());
        assert!(poly(&[&[], &[a]]).evaluate(&asg(vec![(a, false)])).unwrap());
        let p = poly(&[&[v[2], v[3]], &[v[4], v[5]]]);
        assert!(!p
            .evaluate_slice(&[false, false, true, true, true, true])
            .unwrap());
        assert_eq!(
            poly(&[&[a, b]]).evaluate(&asg(vec![(a, true)])),
            Err(GfPolyError::UnboundVariable(vec![b]))
        );
    }

    #[test]
    fn rendering_is_canonical() {
        let (t, v) = table(&["a0", "a1", "b0", "b1"]);
        let p = poly(&[&[v[1], v[3]], &[v[1], v[2]], &[v[0], v[3]]]);
        assert_eq!(p.render(&t), "a0*b1 + a1*b0 + a1*b1");
        assert_eq!(Polynomial::zero().render(&t), "0");
        assert_eq!(poly(&[&[], &[v[0]]]).render(&t), "1 + a0");
    }

    const NVARS: usize = 6;

    fn arb_poly() -> impl Strategy<Value = Polynomial> {
        prop::collection::vec(prop::collection::vec(0u32..NVARS as u32, 0..4), 0..8).prop_map(
            |ms| {
                ms.into_iter()
                    .map(|m| Monomial::from_vars(m.into_iter().map(VariableId)))
                    .collect()
            },
        )
    }

    proptest! {
        #[test]
        fn add_is_xor_homomorphism(p in arb_poly(), q in arb_poly(), bits in 0u32..1 << NVARS) {
            let asg: Vec<bool> = (0..NVARS).map(|i| bits >> i & 1 == 1).collect();
            let lhs = p.add(&q).evaluate_slice(&asg).unwrap();
            prop_assert_eq!(lhs, p.evaluate_slice(&asg).unwrap() ^ q.evaluate_slice(&asg).unwrap());
            prop_assert!(p.add(&p).is_zero());
            prop_assert_eq!(p.add(&Polynomial::zero()), p.clone());
        }

        #[test]
        fn mul_is_and_homomorphism(p in arb_poly(), q in arb_poly(), bits in 0u32..1 << NVARS) {
            let asg: Vec<bool> = (0..NVARS).map(|i| bits >> i & 1 == 1).collect();
            let lhs = p.mul(&q).evaluate_slice(&asg).unwrap();
            prop_assert_eq!(lhs, p.evaluate_slice(&asg).unwrap() & q.evaluate_slice(&asg).unwrap());
            for m in p.mul(&q).iter() {
                let mut vs = m.vars().to_vec();
                vs.dedup();
                prop_assert_eq!(vs.len(), m.degree());
            }
        }

        #[test]
        fn substitute_matches_evaluation(p in arb_poly(), e in arb_poly(), v in 0u32..NVARS as u32) {
            let v = VariableId(v);
            let e = Polynomial::from_monomials(e.iter().filter(|m| !m.contains(v)).cloned());
            let s = p.substitute(v, &e).unwrap();
            prop_assert!(!s.mentions(v));
            for bits in 0u32..1 << NVARS {
                let mut asg: Vec<bool> = (0..NVARS).map(|i| bits >> i & 1 == 1).collect();
                let lhs = s.evaluate_slice(&asg).unwrap();
                asg[v.index()] = e.evaluate_slice(&asg).unwrap();
                prop_assert_eq!(lhs, p.evaluate_slice(&asg).unwrap());
            }
        }

        #[test]
        fn insertion_order_is_irrelevant(ms in prop::collection::vec(prop::collection::vec(0u32..NVARS as u32, 0..4), 0..10)) {
            let monos: Vec<Monomial> = ms.into_iter().map(|m| Monomial::from_vars(m.into_iter().map(VariableId))).collect();
            let fwd: Polynomial = monos.iter().cloned().collect();
            let rev: Polynomial = monos.iter().rev().cloned().collect();
            prop_assert_eq!(fwd, rev);
        }
    }
}
