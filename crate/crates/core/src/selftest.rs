//! Embedded invariant suites run by the `selftest` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fieldspec::FieldSpec;
use crate::genbench::{gen_mastrovito, oracle_check, OracleVerdict};
use crate::gfpoly::{Monomial, Polynomial, VariableId};
use crate::golden::GF4_MAPPED_NETLIST;
use crate::netlist::{kind_to_poly, parse_netlist, GateKind, Ports};
use crate::rewriter::{extract_bit, extract_full, RewriteOptions};
use crate::scheduler::{verify, Verdict, VerifyConfig};

const NVARS: usize = 6;
const RANDOM_CASES: usize = 300;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    /// Names of failed properties, with context.
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, property: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(property());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn random_poly(rng: &mut ChaCha8Rng) -> Polynomial {
    (0..rng.gen_range(0..6))
        .map(|_| {
            Monomial::from_vars(
                (0..NVARS as u32)
                    .filter(|_| rng.gen_bool(0.35))
                    .map(VariableId),
            )
        })
        .collect()
}

fn truth_table(p: &Polynomial) -> Vec<bool> {
    (0..1usize << NVARS)
        .map(|bits| {
            let assign: Vec<bool> = (0..NVARS).map(|i| bits >> i & 1 == 1).collect();
            p.evaluate_slice(&assign).expect("all variables bound")
        })
        .collect()
}

/// Sum, product and substitution agree with pointwise Boolean semantics.
pub fn algebra_suite(seed: u64) -> SuiteResult {
    let mut r = SuiteResult::new("algebra");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..RANDOM_CASES {
        let (p, q) = (random_poly(&mut rng), random_poly(&mut rng));
        let (tp, tq) = (truth_table(&p), truth_table(&q));
        let sum: Vec<bool> = tp.iter().zip(&tq).map(|(a, b)| a ^ b).collect();
        let prod: Vec<bool> = tp.iter().zip(&tq).map(|(a, b)| a & b).collect();
        r.check(truth_table(&p.add(&q)) == sum, || {
            format!("poly_add matches XOR (case {case})")
        });
        r.check(p.add(&p).is_zero(), || {
            format!("poly_add self-cancels (case {case})")
        });
        r.check(p.add(&q) == q.add(&p), || {
            format!("poly_add commutes (case {case})")
        });
        r.check(truth_table(&p.mul(&q)) == prod, || {
            format!("poly_mul matches AND (case {case})")
        });
        r.check(p.mul(&p) == p, || {
            format!("poly_mul idempotent (case {case})")
        });

        let v = VariableId(rng.gen_range(0..NVARS as u32));
        let e: Polynomial = random_poly(&mut rng).iter().map(|m| m.without(v)).collect();
        let te = truth_table(&e);
        let want: Vec<bool> = (0..1usize << NVARS)
            .map(|bits| {
                let bit = te[bits] as usize;
                tp[(bits & !(1 << v.0)) | bit << v.0]
            })
            .collect();
        match p.substitute(v, &e) {
            Ok(s) => r.check(truth_table(&s) == want, || {
                format!("substitute is composition (case {case})")
            }),
            Err(err) => r.check(false, || format!("substitute failed: {err} (case {case})")),
        }
    }
    r
}

/// Every gate model agrees with the Boolean gate on all input patterns.
pub fn gate_model_suite() -> SuiteResult {
    let mut r = SuiteResult::new("gate-models");
    for kind in GateKind::ALL {
        for arity in (0..=4).filter(|&n| kind.arity_ok(n)) {
            let ins: Vec<VariableId> = (0..arity as u32).map(VariableId).collect();
            let poly = kind_to_poly(kind, &ins);
            for bits in 0..1usize << arity {
                let assign: Vec<bool> = (0..arity).map(|i| bits >> i & 1 == 1).collect();
                let got = poly.evaluate_slice(&assign).ok();
                r.check(got == Some(kind.eval(&assign)), || {
                    format!("{kind}/{arity} model on {assign:?}")
                });
            }
        }
    }
    r
}

const GOLDEN_FINAL: &str = "a0*b0 + a1*b1 + x*(a0*b1 + a1*b0 + a1*b1)";

/// The shipped 2-bit mapped multiplier extracts to the known signature,
/// whole and bit by bit, with the known elimination pattern.
pub fn golden_suite() -> SuiteResult {
    let mut r = SuiteResult::new("golden-trace");
    let n = match parse_netlist(GF4_MAPPED_NETLIST) {
        Ok(n) => n,
        Err(e) => {
            r.check(false, || format!("reference netlist parses: {e}"));
            return r;
        }
    };
    let opts = RewriteOptions {
        trace: true,
        ..Default::default()
    };
    let outs = n.primary_outputs().to_vec();
    match extract_full(&n, &outs, &opts) {
        Ok((sig, trace)) => {
            r.check(sig.render(n.vars()) == GOLDEN_FINAL, || {
                "full extraction yields the reference signature".into()
            });
            let order: Vec<String> = trace
                .map(|t| t.steps.iter().map(|s| s.gate.clone()).collect())
                .unwrap_or_default();
            r.check(
                order == ["G7", "G6", "G5", "G8", "G4", "G3", "G2", "G1"],
                || format!("rewriting order is reverse topological, got {order:?}"),
            );
        }
        Err(e) => r.check(false, || format!("full extraction: {e}")),
    }
    let want_elims = [1usize, 2];
    for (k, &z) in outs.iter().enumerate() {
        match extract_bit(&n, &n.cone(z), k, &opts) {
            Ok(b) => {
                let elims = b.trace.map_or(0, |t| t.eliminations());
                r.check(elims == want_elims[k], || {
                    format!("bit {k} eliminates {} pairs, got {elims}", want_elims[k])
                });
            }
            Err(e) => r.check(false, || format!("bit {k} extraction: {e}")),
        }
    }
    r
}

/// For m = 1..=max_m: generated multipliers verify, agree with the
/// word-level oracle, and per-bit extraction equals whole-signature extraction.
pub fn field_suite(max_m: usize) -> SuiteResult {
    let mut r = SuiteResult::new("fields");
    let cfg = VerifyConfig::with_threads(1);
    for m in 1..=max_m {
        let fs = match FieldSpec::builtin(m) {
            Ok(fs) => fs,
            Err(_) => continue,
        };
        let n = gen_mastrovito(&fs);
        match verify(&n, &fs, &cfg) {
            Ok(rep) => r.check(rep.overall == Verdict::Pass, || {
                format!("m = {m}: verify passes generated multiplier")
            }),
            Err(e) => r.check(false, || format!("m = {m}: verify error {e}")),
        }
        if m <= 64 {
            match oracle_check(&n, &fs, m as u64) {
                Ok(v) => r.check(v == OracleVerdict::Pass, || {
                    format!("m = {m}: oracle agreement ({v:?})")
                }),
                Err(e) => r.check(false, || format!("m = {m}: oracle error {e}")),
            }
        }
        if m == 1 {
            // GF(2): multiplication is AND
            r.check(fs.gf_mul(1, 1) == 1 && fs.gf_mul(1, 0) == 0, || {
                "m = 1: product is AND".into()
            });
        }
        let ports = match Ports::resolve(&n, m, None) {
            Ok(p) => p,
            Err(e) => {
                r.check(false, || format!("m = {m}: ports {e}"));
                continue;
            }
        };
        let opts = RewriteOptions::default();
        let whole = extract_full(&n, &ports.z, &opts).map(|(s, _)| s.slots);
        let parts: Result<Vec<Polynomial>, _> = ports
            .z
            .iter()
            .enumerate()
            .map(|(k, &z)| extract_bit(&n, &n.cone(z), k, &opts).map(|b| b.polynomial))
            .collect();
        r.check(matches!((&whole, &parts), (Ok(w), Ok(p)) if w == p), || {
            format!("m = {m}: per-bit extraction equals whole-signature extraction")
        });
    }
    r
}

pub fn run_all(max_m: usize, seed: u64) -> Vec<SuiteResult> {
    vec![
        algebra_suite(seed),
        gate_model_suite(),
        golden_suite(),
        field_suite(max_m),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for s in run_all(5, 1) {
            assert!(s.passed(), "{}: {:?}", s.name, s.failures);
            assert!(s.checks > 0);
        }
    }

    #[test]
    fn degenerate_field() {
        assert!(field_suite(1).passed());
    }
}
