//! Mastrovito multiplier generator, single-gate fault injection and the
//! simulation oracle used to cross-check the algebraic verifier.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fieldspec::FieldSpec;
use crate::netlist::{Gate, GateDecl, GateKind, Netlist, PortError, Ports, ValidationError};

/// Largest degree accepted by [`exhaustive_check`] (2^(2m) input pairs).
pub const EXHAUSTIVE_MAX_DEGREE: usize = 12;

/// Gate counts of a generated multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MastrovitoStats {
    pub and_gates: usize,
    pub column_xors: usize,
    pub reduction_xors: usize,
    pub buffers: usize,
}

impl MastrovitoStats {
    pub fn total_xors(&self) -> usize {
        self.column_xors + self.reduction_xors
    }
}

/// Pairs nets left to right, level by level, until one remains; the root is
/// named `root`, inner nodes `{prefix}_{n}`. Returns the root net.
fn xor_tree(
    decls: &mut Vec<GateDecl>,
    mut nets: Vec<String>,
    prefix: &str,
    root: &str,
    xors: &mut usize,
) -> String {
    assert!(!nets.is_empty());
    let mut counter = 0;
    while nets.len() > 1 {
        let last_level = nets.len() == 2;
        let mut next = Vec::with_capacity(nets.len().div_ceil(2));
        let mut it = nets.into_iter();
        while let Some(x) = it.next() {
            match it.next() {
                Some(y) => {
                    let out = if last_level {
                        root.to_string()
                    } else {
                        counter += 1;
                        format!("{prefix}_{counter}")
                    };
                    decls.push(GateDecl {
                        label: None,
                        output: out.clone(),
                        kind: GateKind::Xor,
                        inputs: vec![x, y],
                    });
                    *xors += 1;
                    next.push(out);
                }
                None => next.push(x),
            }
        }
        nets = next;
    }
    nets.pop().unwrap()
}

/// Generates a Mastrovito multiplier for `fs`: AND partial products
/// `p{i}_{j} = a_i b_j`, balanced XOR trees for the column sums `s{k}`, and
/// a reduction network folding the high columns into `z0..z(m-1)`.
pub fn gen_mastrovito(fs: &FieldSpec) -> Netlist {
    gen_mastrovito_with_stats(fs).0
}

pub fn gen_mastrovito_with_stats(fs: &FieldSpec) -> (Netlist, MastrovitoStats) {
    let m = fs.degree();
    let mut stats = MastrovitoStats::default();
    let a: Vec<String> = (0..m).map(|i| format!("a{i}")).collect();
    let b: Vec<String> = (0..m).map(|i| format!("b{i}")).collect();
    let z: Vec<String> = (0..m).map(|i| format!("z{i}")).collect();
    let mut decls = Vec::new();

    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            decls.push(GateDecl {
                label: None,
                output: format!("p{i}_{j}"),
                kind: GateKind::And,
                inputs: vec![ai.clone(), bj.clone()],
            });
            stats.and_gates += 1;
        }
    }

    let columns: Vec<String> = (0..2 * m - 1)
        .map(|k| {
            let lo = k.saturating_sub(m - 1);
            let hi = k.min(m - 1);
            let terms = (lo..=hi).map(|i| format!("p{i}_{}", k - i)).collect();
            xor_tree(
                &mut decls,
                terms,
                &format!("s{k}"),
                &format!("s{k}"),
                &mut stats.column_xors,
            )
        })
        .collect();

    for (k, cols) in fs.slot_columns().into_iter().enumerate() {
        let nets: Vec<String> = cols.iter().map(|&c| columns[c].clone()).collect();
        if nets.len() == 1 {
            decls.push(GateDecl {
                label: None,
                output: z[k].clone(),
                kind: GateKind::Buf,
                inputs: nets,
            });
            stats.buffers += 1;
        } else {
            xor_tree(
                &mut decls,
                nets,
                &format!("r{k}"),
                &z[k],
                &mut stats.reduction_xors,
            );
        }
    }

    let inputs: Vec<String> = a.into_iter().chain(b).collect();
    let comments = vec![format!(
        "Mastrovito multiplier over GF(2^{m}), P(x) = {}",
        fs.modulus().to_term_string()
    )];
    let n = Netlist::build(&inputs, &z, decls, comments).expect("generated netlist is well formed");
    (n, stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutationKind {
    /// Replace the gate kind (XOR→OR, AND→OR, OR→AND, ...).
    KindSwap,
    /// Exchange the first and last input pins.
    InputSwap,
    /// Replace the gate by its complement kind.
    OutputNegation,
}

impl MutationKind {
    pub const ALL: [MutationKind; 3] = [
        MutationKind::KindSwap,
        MutationKind::InputSwap,
        MutationKind::OutputNegation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationKind::KindSwap => "kind-swap",
            MutationKind::InputSwap => "input-swap",
            MutationKind::OutputNegation => "output-negation",
        }
    }

    fn apply(self, g: &Gate) -> Option<Gate> {
        let mut out = g.clone();
        match self {
            MutationKind::KindSwap => out.kind = swapped_kind(g.kind),
            MutationKind::InputSwap => {
                let n = out.inputs.len();
                if n < 2 || out.inputs[0] == out.inputs[n - 1] {
                    return None;
                }
                out.inputs.swap(0, n - 1);
            }
            MutationKind::OutputNegation => out.kind = g.kind.negated()?,
        }
        Some(out)
    }
}

impl std::str::FromStr for MutationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kind-swap" | "kind" | "swap" => Ok(MutationKind::KindSwap),
            "input-swap" | "inputs" => Ok(MutationKind::InputSwap),
            "output-negation" | "negate" | "negation" => Ok(MutationKind::OutputNegation),
            other => Err(format!(
                "unknown mutation kind {other:?} (kind-swap|input-swap|output-negation)"
            )),
        }
    }
}

fn swapped_kind(k: GateKind) -> GateKind {
    use GateKind::*;
    match k {
        And => Or,
        Or => And,
        Xor => Or,
        Xnor => Nor,
        Nand => Nor,
        Nor => Nand,
        Not => Buf,
        Buf => Not,
        Aoi21 => Oai21,
        Oai21 => Aoi21,
        Aoi22 => Oai22,
        Oai22 => Aoi22,
        Const0 => Const1,
        Const1 => Const0,
    }
}

/// A single-gate mutation. Unset fields are drawn from a ChaCha8 stream seeded by `seed`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FaultSpec {
    pub target: Option<String>,
    pub kind: Option<MutationKind>,
    pub seed: u64,
}

impl FaultSpec {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Default::default()
        }
    }

    /// Parses `seed=7,gate=G3,kind=kind-swap` (any subset, any order).
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut spec = FaultSpec::default();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            match key.trim() {
                "seed" => {
                    spec.seed = value
                        .trim()
                        .parse()
                        .map_err(|e| format!("bad seed {value:?}: {e}"))?
                }
                "gate" | "target" => spec.target = Some(value.trim().to_string()),
                "kind" => spec.kind = Some(value.trim().parse()?),
                other => return Err(format!("unknown fault key {other:?} (seed|gate|kind)")),
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FaultError {
    #[error("no gate named {0}")]
    UnknownGate(String),
    #[error("mutation {kind} does not apply to gate {gate}")]
    InapplicableMutation { gate: String, kind: &'static str },
    #[error("mutated netlist is invalid: {0}")]
    Invalid(#[from] ValidationError),
}

#[derive(Debug, Clone)]
pub struct InjectedFault {
    pub netlist: Netlist,
    pub gate: String,
    pub kind: MutationKind,
    pub description: String,
}

/// Applies one mutation to a copy of `n`; the mutation is appended to the comments.
pub fn inject_fault(n: &Netlist, f: &FaultSpec) -> Result<InjectedFault, FaultError> {
    let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
    let kinds: Vec<MutationKind> = match f.kind {
        Some(k) => vec![k],
        None => MutationKind::ALL.to_vec(),
    };
    let (index, kind) = match &f.target {
        Some(name) => {
            let gi = n
                .gate_by_name(name)
                .ok_or_else(|| FaultError::UnknownGate(name.clone()))?;
            let usable: Vec<MutationKind> = kinds
                .iter()
                .copied()
                .filter(|k| k.apply(n.gate(gi)).is_some())
                .collect();
            let kind = *usable
                .choose(&mut rng)
                .ok_or(FaultError::InapplicableMutation {
                    gate: name.clone(),
                    kind: kinds[0].name(),
                })?;
            (gi, kind)
        }
        None => {
            let candidates: Vec<(usize, MutationKind)> = (0..n.gate_count())
                .flat_map(|gi| kinds.iter().map(move |&k| (gi, k)))
                .filter(|&(gi, k)| k.apply(n.gate(gi)).is_some())
                .collect();
            *candidates
                .choose(&mut rng)
                .ok_or(FaultError::InapplicableMutation {
                    gate: "<any>".into(),
                    kind: kinds[0].name(),
                })?
        }
    };
    let old = n.gate(index);
    let new = kind.apply(old).expect("applicability checked");
    let vars = n.vars();
    let pins = |g: &Gate| {
        g.inputs
            .iter()
            .map(|&v| vars.name(v))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let description = format!(
        "fault: {} on gate {}: {}({}) -> {}({}) [seed {}]",
        kind.name(),
        old.name,
        old.kind,
        pins(old),
        new.kind,
        pins(&new),
        f.seed
    );
    let gate = old.name.clone();
    let netlist = n.with_gate_replaced(index, new, description.clone())?;
    Ok(InjectedFault {
        netlist,
        gate,
        kind,
        description,
    })
}

/// Bit-parallel evaluator for multiplier netlists with resolved ports.
pub struct Simulator<'a> {
    netlist: &'a Netlist,
    ports: Ports,
    /// For each primary input: (operand is b, bit index).
    pin_map: Vec<(bool, usize)>,
}

impl<'a> Simulator<'a> {
    pub fn new(netlist: &'a Netlist, m: usize) -> Result<Self, PortError> {
        let ports = Ports::resolve(netlist, m, None)?;
        Self::with_ports(netlist, ports)
    }

    pub fn with_ports(netlist: &'a Netlist, ports: Ports) -> Result<Self, PortError> {
        let pin_map = netlist
            .primary_inputs()
            .iter()
            .map(|v| {
                if let Some(i) = ports.a.iter().position(|x| x == v) {
                    (false, i)
                } else {
                    (
                        true,
                        ports
                            .b
                            .iter()
                            .position(|x| x == v)
                            .expect("every input is an operand bit"),
                    )
                }
            })
            .collect();
        Ok(Self {
            netlist,
            ports,
            pin_map,
        })
    }

    pub fn width(&self) -> usize {
        self.ports.width()
    }

    /// Evaluates up to 64 (a, b) pairs at once.
    pub fn run_batch(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        assert_eq!(a.len(), b.len());
        assert!(a.len() <= 64);
        let words: Vec<u64> = self
            .pin_map
            .iter()
            .map(|&(is_b, bit)| {
                let src = if is_b { b } else { a };
                src.iter()
                    .enumerate()
                    .fold(0u64, |w, (lane, &x)| w | ((x >> bit) & 1) << lane)
            })
            .collect();
        let values = self.netlist.simulate_words(&words);
        let zw: Vec<u64> = self.ports.z.iter().map(|z| values[z.index()]).collect();
        (0..a.len())
            .map(|lane| {
                zw.iter()
                    .enumerate()
                    .fold(0u64, |acc, (k, &w)| acc | ((w >> lane) & 1) << k)
            })
            .collect()
    }

    pub fn run(&self, a: u64, b: u64) -> u64 {
        self.run_batch(&[a], &[b])[0]
    }
}

/// Forward evaluation of `n` on one operand pair; ports use the `a/b/z` convention.
pub fn simulate(n: &Netlist, m: usize, a: u64, b: u64) -> Result<u64, PortError> {
    Ok(Simulator::new(n, m)?.run(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counterexample {
    pub a: u64,
    pub b: u64,
    pub got: u64,
    pub want: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    Pass,
    Counterexample(Counterexample),
}

impl OracleVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, OracleVerdict::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("exhaustive check needs 2^{} pairs; limit is m <= {EXHAUSTIVE_MAX_DEGREE}", 2 * .0)]
    BudgetExceeded(usize),
    #[error("word-level oracle limited to m <= 64, got {0}")]
    TooWide(usize),
    #[error(transparent)]
    Ports(#[from] PortError),
}

fn check_batch(
    sim: &Simulator<'_>,
    fs: &FieldSpec,
    a: &[u64],
    b: &[u64],
) -> Option<Counterexample> {
    let got = sim.run_batch(a, b);
    a.iter().zip(b).zip(got).find_map(|((&a, &b), got)| {
        let want = fs.gf_mul(a, b);
        (got != want).then_some(Counterexample { a, b, got, want })
    })
}

/// Compares the netlist against the word-level multiplier on every (a, b)
/// pair, in lexicographic order; returns the first mismatch.
pub fn exhaustive_check(n: &Netlist, fs: &FieldSpec) -> Result<OracleVerdict, OracleError> {
    let m = fs.degree();
    if m > EXHAUSTIVE_MAX_DEGREE {
        return Err(OracleError::BudgetExceeded(m));
    }
    let sim = Simulator::new(n, m)?;
    let total = 1u64 << (2 * m);
    let mut start = 0u64;
    let (mut a, mut b) = (Vec::with_capacity(64), Vec::with_capacity(64));
    while start < total {
        a.clear();
        b.clear();
        for idx in start..(start + 64).min(total) {
            a.push(idx >> m);
            b.push(idx & ((1 << m) - 1));
        }
        if let Some(cx) = check_batch(&sim, fs, &a, &b) {
            return Ok(OracleVerdict::Counterexample(cx));
        }
        start += 64;
    }
    Ok(OracleVerdict::Pass)
}

/// Compares the netlist against the word-level multiplier on `batches * 64`
/// seeded random pairs plus the corner operands 0, 1 and all-ones.
pub fn random_check(
    n: &Netlist,
    fs: &FieldSpec,
    batches: usize,
    seed: u64,
) -> Result<OracleVerdict, OracleError> {
    let m = fs.degree();
    if m > 64 {
        return Err(OracleError::TooWide(m));
    }
    let sim = Simulator::new(n, m)?;
    let mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let corners = [0, 1, mask];
    let (ca, cb): (Vec<u64>, Vec<u64>) = corners
        .iter()
        .flat_map(|&x| corners.iter().map(move |&y| (x, y)))
        .unzip();
    if let Some(cx) = check_batch(&sim, fs, &ca, &cb) {
        return Ok(OracleVerdict::Counterexample(cx));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..batches {
        let a: Vec<u64> = (0..64).map(|_| rng.gen::<u64>() & mask).collect();
        let b: Vec<u64> = (0..64).map(|_| rng.gen::<u64>() & mask).collect();
        if let Some(cx) = check_batch(&sim, fs, &a, &b) {
            return Ok(OracleVerdict::Counterexample(cx));
        }
    }
    Ok(OracleVerdict::Pass)
}

/// Exhaustive oracle when within budget, otherwise seeded random simulation.
pub fn oracle_check(n: &Netlist, fs: &FieldSpec, seed: u64) -> Result<OracleVerdict, OracleError> {
    if fs.degree() <= EXHAUSTIVE_MAX_DEGREE {
        exhaustive_check(n, fs)
    } else {
        random_check(n, fs, 64, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden::GF4_MAPPED_NETLIST;
    use crate::netlist::parse_netlist;

    fn field(p: &str) -> FieldSpec {
        FieldSpec::parse(p).unwrap()
    }

    #[test]
    fn gf4_generator_shape() {
        let (n, st) = gen_mastrovito_with_stats(&field("x^2+x+1"));
        assert_eq!(st.and_gates, 4);
        assert_eq!(st.column_xors, 1);
        // z0 = s0 + s2, z1 = s1 + s2
        assert_eq!(st.reduction_xors, 2);
        let z0 = n.gate(n.driver(n.lookup("z0").unwrap()).unwrap());
        let names: Vec<&str> = z0.inputs.iter().map(|&v| n.vars().name(v)).collect();
        assert_eq!(names, ["p0_0", "p1_1"]);
    }

    #[test]
    fn reduction_xor_counts_for_degree_four() {
        let (_, low) = gen_mastrovito_with_stats(&field("x^4+x+1"));
        let (_, high) = gen_mastrovito_with_stats(&field("x^4+x^3+1"));
        assert_eq!(low.reduction_xors, 6);
        assert_eq!(high.reduction_xors, 9);
        assert_eq!(low.and_gates, 16);
        assert_eq!(low.column_xors, 9);
        assert_eq!((low.total_xors(), high.total_xors()), (15, 18));
    }

    #[test]
    fn generated_multipliers_match_word_level_reference() {
        for m in 1..=6 {
            let fs = FieldSpec::builtin(m).unwrap();
            assert_eq!(
                exhaustive_check(&gen_mastrovito(&fs), &fs).unwrap(),
                OracleVerdict::Pass,
                "m = {m}"
            );
        }
        for p in ["x^4+x+1", "x^4+x^3+1"] {
            let fs = field(p);
            assert!(exhaustive_check(&gen_mastrovito(&fs), &fs)
                .unwrap()
                .is_pass());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let fs = FieldSpec::builtin(8).unwrap();
        assert_eq!(gen_mastrovito(&fs).render(), gen_mastrovito(&fs).render());
    }

    #[test]
    fn mapped_gf4_simulates_correctly() {
        let n = parse_netlist(GF4_MAPPED_NETLIST).unwrap();
        let fs = field("x^2+x+1");
        // (x+1)^2 = x^2 + 1 = x
        assert_eq!(simulate(&n, 2, 0b11, 0b11).unwrap(), 0b10);
        for b in 0..4 {
            assert_eq!(simulate(&n, 2, 0, b).unwrap(), 0);
            assert_eq!(simulate(&n, 2, 1, b).unwrap(), b);
        }
        assert!(exhaustive_check(&n, &fs).unwrap().is_pass());
    }

    #[test]
    fn and_to_or_fault_is_caught_by_oracle() {
        let fs = field("x^4+x+1");
        let n = gen_mastrovito(&fs);
        let spec = FaultSpec {
            target: Some("p1_2".into()),
            kind: Some(MutationKind::KindSwap),
            seed: 0,
        };
        let f = inject_fault(&n, &spec).unwrap();
        assert_eq!(
            f.netlist.gate(f.netlist.gate_by_name("p1_2").unwrap()).kind,
            GateKind::Or
        );
        assert!(f
            .netlist
            .comments()
            .last()
            .unwrap()
            .contains("kind-swap on gate p1_2"));
        assert_eq!(n.gate(n.gate_by_name("p1_2").unwrap()).kind, GateKind::And);
        match exhaustive_check(&f.netlist, &fs).unwrap() {
            OracleVerdict::Counterexample(cx) => assert_ne!(cx.got, cx.want),
            OracleVerdict::Pass => panic!("fault not detected"),
        }
    }

    #[test]
    fn equivalence_preserving_faults_pass_the_oracle() {
        let fs = field("x^2+x+1");
        let n = gen_mastrovito(&fs);
        let spec = FaultSpec {
            target: Some("z0".into()),
            kind: Some(MutationKind::InputSwap),
            seed: 0,
        };
        let f = inject_fault(&n, &spec).unwrap();
        assert!(exhaustive_check(&f.netlist, &fs).unwrap().is_pass());

        let dead = parse_netlist(
            "input a0 a1 b0 b1\noutput z0 z1\nz0 = XOR(p, q)\nz1 = XOR(r, s, q)\np = AND(a0, b0)\nq = AND(a1, b1)\n\
             r = AND(a0, b1)\ns = AND(a1, b0)\nd = AND(a0, a1)\n",
        )
        .unwrap();
        assert!(exhaustive_check(&dead, &fs).unwrap().is_pass());
        let spec = FaultSpec {
            target: Some("d".into()),
            kind: Some(MutationKind::OutputNegation),
            seed: 0,
        };
        let f = inject_fault(&dead, &spec).unwrap();
        assert!(exhaustive_check(&f.netlist, &fs).unwrap().is_pass());
    }

    #[test]
    fn fault_errors() {
        let n = gen_mastrovito(&field("x^2+x+1"));
        let unknown = FaultSpec {
            target: Some("nope".into()),
            ..Default::default()
        };
        assert_eq!(
            inject_fault(&n, &unknown).unwrap_err(),
            FaultError::UnknownGate("nope".into())
        );
        let n = parse_netlist("input a b c\noutput z\nz = AOI21(a, b, c)\n").unwrap();
        let spec = FaultSpec {
            target: Some("z".into()),
            kind: Some(MutationKind::OutputNegation),
            seed: 0,
        };
        assert!(matches!(
            inject_fault(&n, &spec),
            Err(FaultError::InapplicableMutation { .. })
        ));
    }

    #[test]
    fn seeded_selection_is_reproducible() {
        let n = gen_mastrovito(&FieldSpec::builtin(8).unwrap());
        let a = inject_fault(&n, &FaultSpec::seeded(7)).unwrap();
        let b = inject_fault(&n, &FaultSpec::seeded(7)).unwrap();
        assert_eq!(a.netlist.render(), b.netlist.render());
        assert_eq!(
            FaultSpec::parse("seed=7, kind=negate,gate=p0_0")
                .unwrap()
                .kind,
            Some(MutationKind::OutputNegation)
        );
        assert!(FaultSpec::parse("colour=red").is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let fs = FieldSpec::builtin(13).unwrap();
        let n = gen_mastrovito(&fs);
        assert_eq!(
            exhaustive_check(&n, &fs).unwrap_err(),
            OracleError::BudgetExceeded(13)
        );
        assert!(random_check(&n, &fs, 4, 1).unwrap().is_pass());
    }
}
