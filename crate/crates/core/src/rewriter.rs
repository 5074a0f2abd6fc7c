//! Backward rewriting: substitute gate outputs by their algebraic models,
//! from the primary outputs back to the primary inputs, cancelling
//! monomials modulo 2 as they collide.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::fieldspec::{render_slot, x_power, Signature};
use crate::gfpoly::{
    GfPolyError, Monomial, Polynomial, SubstitutionStats, VariableId, VariableTable,
};
use crate::netlist::{gate_to_poly, Cone, Netlist};

/// Default cap on live monomials per rewriting task.
pub const DEFAULT_TERM_CAP: usize = 1 << 26;

/// Rough heap cost of one live monomial in a polynomial set: the inline
/// monomial plus hash-table bookkeeping.
pub const BYTES_PER_MONOMIAL: usize = std::mem::size_of::<Monomial>() + 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("rewriting of {output} left non-input variables: {leftover}")]
    IncompleteCone { output: String, leftover: String },
    #[error("term count {terms} exceeds cap {cap} after rewriting gate {gate}")]
    ResourceLimit {
        gate: String,
        terms: usize,
        cap: usize,
    },
    #[error("gate {gate}: {source}")]
    Substitution { gate: String, source: GfPolyError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RewriteOptions {
    pub trace: bool,
    pub term_cap: usize,
    /// Trace steps keep a copy of the expression only up to this many terms.
    pub snapshot_limit: usize,
}

impl Default for RewriteOptions {
    fn default() -> Self {
        Self {
            trace: false,
            term_cap: DEFAULT_TERM_CAP,
            snapshot_limit: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub gate: String,
    pub variable: VariableId,
    /// Terms after expansion, before cancellation.
    pub expanded: usize,
    pub terms_after: usize,
    /// (degree of the x^k slot, cancelled monomial), one entry per cancelled pair.
    pub cancelled: Vec<(usize, Monomial)>,
    pub snapshot: Option<Vec<Polynomial>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RewriteTrace {
    /// x-degree carried by each slot of the expression.
    pub degrees: Vec<usize>,
    pub initial: Vec<Polynomial>,
    pub steps: Vec<TraceStep>,
}

impl RewriteTrace {
    pub fn eliminations(&self) -> usize {
        self.steps.iter().map(|s| s.cancelled.len()).sum()
    }

    fn render_expr(&self, slots: &[Polynomial], vars: &VariableTable) -> String {
        let parts: Vec<String> = slots
            .iter()
            .zip(&self.degrees)
            .filter(|(p, _)| !p.is_zero())
            .map(|(p, &k)| render_slot(k, &p.render(vars)))
            .collect();
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }

    /// One line per step: `gate | expression (or term count) | eliminated terms`.
    pub fn render(&self, vars: &VariableTable) -> String {
        let mut out = format!("Sig_out | {} | -\n", self.render_expr(&self.initial, vars));
        let mut last = None;
        for step in &self.steps {
            let expr = match &step.snapshot {
                Some(slots) => self.render_expr(slots, vars),
                None => format!("<{} terms>", step.terms_after),
            };
            let elim = if step.cancelled.is_empty() {
                "-".to_string()
            } else {
                step.cancelled
                    .iter()
                    .map(|(k, m)| render_elimination(*k, m, vars))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            out.push_str(&format!("{} | {} | {}\n", step.gate, expr, elim));
            last = Some(expr);
        }
        let final_expr = last.unwrap_or_else(|| self.render_expr(&self.initial, vars));
        out.push_str(&format!("Sig_in | {final_expr} | -\n"));
        out
    }
}

/// A cancelled pair rendered as `2`, `2x`, `2a0*b1*x^2`.
fn render_elimination(degree: usize, m: &Monomial, vars: &VariableTable) -> String {
    let mut factors = Vec::new();
    if !m.is_one() {
        factors.push(m.render(vars));
    }
    if degree > 0 {
        factors.push(x_power(degree));
    }
    format!("2{}", factors.join("*"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct RewriteStats {
    pub steps: usize,
    pub peak_terms: usize,
    pub eliminations: usize,
}

impl RewriteStats {
    pub fn peak_memory_bytes(&self) -> usize {
        self.peak_terms * BYTES_PER_MONOMIAL
    }
}

#[derive(Debug, Clone)]
pub struct Rewritten {
    pub slots: Vec<Polynomial>,
    pub stats: RewriteStats,
    pub trace: Option<RewriteTrace>,
}

/// Runs backward rewriting over `order` (gate indices, consumed front to back),
/// starting from the given slot expressions.
pub fn backward_rewrite(
    netlist: &Netlist,
    order: &[usize],
    start: Vec<Polynomial>,
    degrees: Vec<usize>,
    opts: &RewriteOptions,
) -> Result<Rewritten, RewriteError> {
    let mut slots = start;
    let mut stats = RewriteStats {
        peak_terms: slots.iter().map(Polynomial::len).sum(),
        ..Default::default()
    };
    let mut trace = opts.trace.then(|| RewriteTrace {
        degrees: degrees.clone(),
        initial: slots.clone(),
        steps: Vec::with_capacity(order.len()),
    });

    for &gi in order {
        let gate = netlist.gate(gi);
        let model = gate_to_poly(gate);
        let mut expanded = 0;
        let mut cancelled = Vec::new();
        for (slot, &degree) in slots.iter_mut().zip(&degrees) {
            let mut sub = SubstitutionStats {
                record_monomials: opts.trace,
                ..Default::default()
            };
            slot.substitute_in_place(gate.output, &model, Some(&mut sub))
                .map_err(|source| RewriteError::Substitution {
                    gate: gate.name.clone(),
                    source,
                })?;
            expanded += sub.expanded;
            stats.eliminations += sub.cancelled;
            cancelled.extend(sub.cancelled_monomials.into_iter().map(|m| (degree, m)));
        }
        let terms: usize = slots.iter().map(Polynomial::len).sum();
        stats.steps += 1;
        stats.peak_terms = stats.peak_terms.max(terms).max(expanded);
        if terms > opts.term_cap {
            return Err(RewriteError::ResourceLimit {
                gate: gate.name.clone(),
                terms,
                cap: opts.term_cap,
            });
        }
        if let Some(t) = trace.as_mut() {
            t.steps.push(TraceStep {
                gate: gate.name.clone(),
                variable: gate.output,
                expanded,
                terms_after: terms,
                cancelled,
                snapshot: (terms <= opts.snapshot_limit).then(|| slots.clone()),
            });
        }
    }
    Ok(Rewritten {
        slots,
        stats,
        trace,
    })
}

fn check_inputs_only(
    netlist: &Netlist,
    output: VariableId,
    p: &Polynomial,
) -> Result<(), RewriteError> {
    let leftover: Vec<&str> = p
        .variables()
        .into_iter()
        .filter(|&v| !netlist.is_primary_input(v))
        .map(|v| netlist.vars().name(v))
        .collect();
    if leftover.is_empty() {
        Ok(())
    } else {
        Err(RewriteError::IncompleteCone {
            output: netlist.vars().name(output).to_string(),
            leftover: leftover.join(", "),
        })
    }
}

/// Result of extracting one output bit.
#[derive(Debug, Clone)]
pub struct BitExtraction {
    pub polynomial: Polynomial,
    pub stats: RewriteStats,
    pub trace: Option<RewriteTrace>,
}

/// Extracts the polynomial of one output from its cone, treating it as the
/// coefficient of x^`degree` for trace rendering.
pub fn extract_bit(
    netlist: &Netlist,
    cone: &Cone,
    degree: usize,
    opts: &RewriteOptions,
) -> Result<BitExtraction, RewriteError> {
    let order: Vec<usize> = cone.gates.iter().rev().copied().collect();
    let done = backward_rewrite(
        netlist,
        &order,
        vec![Polynomial::var(cone.output)],
        vec![degree],
        opts,
    )?;
    let polynomial = done.slots.into_iter().next().unwrap();
    check_inputs_only(netlist, cone.output, &polynomial)?;
    Ok(BitExtraction {
        polynomial,
        stats: done.stats,
        trace: done.trace,
    })
}

/// Whole-signature extraction: one pass over every gate in reverse
/// topological order, with slot k starting as `outputs[k]`.
pub fn extract_full(
    netlist: &Netlist,
    outputs: &[VariableId],
    opts: &RewriteOptions,
) -> Result<(Signature, Option<RewriteTrace>), RewriteError> {
    let order: Vec<usize> = netlist.topo_order().iter().rev().copied().collect();
    let start = outputs.iter().map(|&z| Polynomial::var(z)).collect();
    let done = backward_rewrite(netlist, &order, start, (0..outputs.len()).collect(), opts)?;
    for (&z, p) in outputs.iter().zip(&done.slots) {
        check_inputs_only(netlist, z, p)?;
    }
    Ok((Signature::new(done.slots), done.trace))
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BitStats {
    pub cone_gates: usize,
    pub steps: usize,
    pub peak_terms: usize,
    pub eliminations: usize,
    #[serde(serialize_with = "crate::scheduler::serialize_secs")]
    pub elapsed: Duration,
    pub peak_memory_bytes: usize,
}

/// Outcome of checking one output bit against its expected polynomial.
#[derive(Debug, Clone)]
pub struct BitResult {
    pub bit_index: usize,
    pub output: VariableId,
    pub extracted: Polynomial,
    pub expected: Polynomial,
    pub matched: bool,
    pub residual: Polynomial,
    pub stats: BitStats,
    pub trace: Option<RewriteTrace>,
}

pub fn verify_bit(
    netlist: &Netlist,
    cone: &Cone,
    bit_index: usize,
    expected: &Polynomial,
    opts: &RewriteOptions,
) -> Result<BitResult, RewriteError> {
    let start = Instant::now();
    let ex = extract_bit(netlist, cone, bit_index, opts)?;
    let residual = ex.polynomial.add(expected);
    let elapsed = start.elapsed();
    Ok(BitResult {
        bit_index,
        output: cone.output,
        matched: residual.is_zero(),
        extracted: ex.polynomial,
        expected: expected.clone(),
        residual,
        stats: BitStats {
            cone_gates: cone.len(),
            steps: ex.stats.steps,
            peak_terms: ex.stats.peak_terms,
            eliminations: ex.stats.eliminations,
            elapsed,
            peak_memory_bytes: ex.stats.peak_memory_bytes(),
        },
        trace: ex.trace,
    })
}
