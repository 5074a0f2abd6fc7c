//! Gate-level combinational netlists and their GF(2) algebraic models.

mod blif;
mod parse;
mod ports;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use log::warn;
use thiserror::Error;

use crate::gfpoly::{Monomial, Polynomial, VarKind, VariableId, VariableTable};

pub use blif::parse_blif;
pub use parse::parse_netlist;
pub use ports::{PortError, PortMap, Ports};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum GateKind {
    Not,
    Buf,
    And,
    Or,
    Xor,
    Nand,
    Nor,
    Xnor,
    Aoi21,
    Oai21,
    Aoi22,
    Oai22,
    Const0,
    Const1,
}

impl GateKind {
    pub const ALL: [GateKind; 14] = [
        GateKind::Not,
        GateKind::Buf,
        GateKind::And,
        GateKind::Or,
        GateKind::Xor,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::Xnor,
        GateKind::Aoi21,
        GateKind::Oai21,
        GateKind::Aoi22,
        GateKind::Oai22,
        GateKind::Const0,
        GateKind::Const1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Xor => "XOR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Xnor => "XNOR",
            GateKind::Aoi21 => "AOI21",
            GateKind::Oai21 => "OAI21",
            GateKind::Aoi22 => "AOI22",
            GateKind::Oai22 => "OAI22",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }

    pub fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Not | GateKind::Buf => n == 1,
            GateKind::And
            | GateKind::Or
            | GateKind::Xor
            | GateKind::Nand
            | GateKind::Nor
            | GateKind::Xnor => n >= 2,
            GateKind::Aoi21 | GateKind::Oai21 => n == 3,
            GateKind::Aoi22 | GateKind::Oai22 => n == 4,
            GateKind::Const0 | GateKind::Const1 => n == 0,
        }
    }

    pub fn arity_description(self) -> &'static str {
        match self {
            GateKind::Not | GateKind::Buf => "exactly 1",
            GateKind::Aoi21 | GateKind::Oai21 => "exactly 3",
            GateKind::Aoi22 | GateKind::Oai22 => "exactly 4",
            GateKind::Const0 | GateKind::Const1 => "no",
            _ => "at least 2",
        }
    }

    /// Library kind computing the complement of `self`, if there is one.
    pub fn negated(self) -> Option<GateKind> {
        Some(match self {
            GateKind::Not => GateKind::Buf,
            GateKind::Buf => GateKind::Not,
            GateKind::And => GateKind::Nand,
            GateKind::Nand => GateKind::And,
            GateKind::Or => GateKind::Nor,
            GateKind::Nor => GateKind::Or,
            GateKind::Xor => GateKind::Xnor,
            GateKind::Xnor => GateKind::Xor,
            GateKind::Const0 => GateKind::Const1,
            GateKind::Const1 => GateKind::Const0,
            GateKind::Aoi21 | GateKind::Oai21 | GateKind::Aoi22 | GateKind::Oai22 => return None,
        })
    }

    /// Boolean semantics; `inputs.len()` must satisfy [`arity_ok`](Self::arity_ok).
    pub fn eval(self, inputs: &[bool]) -> bool {
        self.eval_word(
            &inputs
                .iter()
                .map(|&b| if b { u64::MAX } else { 0 })
                .collect::<Vec<_>>(),
        ) & 1
            == 1
    }

    /// Bit-parallel semantics over 64 independent lanes.
    pub fn eval_word(self, x: &[u64]) -> u64 {
        let and = || x.iter().fold(u64::MAX, |acc, &v| acc & v);
        let or = || x.iter().fold(0, |acc, &v| acc | v);
        let xor = || x.iter().fold(0, |acc, &v| acc ^ v);
        match self {
            GateKind::Not => !x[0],
            GateKind::Buf => x[0],
            GateKind::And => and(),
            GateKind::Or => or(),
            GateKind::Xor => xor(),
            GateKind::Nand => !and(),
            GateKind::Nor => !or(),
            GateKind::Xnor => !xor(),
            GateKind::Aoi21 => !((x[0] & x[1]) | x[2]),
            GateKind::Oai21 => !((x[0] | x[1]) & x[2]),
            GateKind::Aoi22 => !((x[0] & x[1]) | (x[2] & x[3])),
            GateKind::Oai22 => !((x[0] | x[1]) & (x[2] | x[3])),
            GateKind::Const0 => 0,
            GateKind::Const1 => u64::MAX,
        }
    }

    /// Whether permuting the inputs can never change the output.
    pub fn is_symmetric(self) -> bool {
        !matches!(
            self,
            GateKind::Aoi21 | GateKind::Oai21 | GateKind::Aoi22 | GateKind::Oai22
        )
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        let kind = match upper.as_str() {
            "INV" => GateKind::Not,
            "BUFF" => GateKind::Buf,
            _ => *GateKind::ALL
                .iter()
                .find(|k| k.name() == upper)
                .ok_or_else(|| format!("unknown gate kind {s:?}"))?,
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    /// Label used in traces; defaults to the output net name.
    pub name: String,
    pub output: VariableId,
    pub kind: GateKind,
    pub inputs: Vec<VariableId>,
}

fn or_poly(a: &Polynomial, b: &Polynomial) -> Polynomial {
    // a + b + ab
    let mut out = a.add(b);
    out.add_assign(&a.mul(b));
    out
}

fn not_poly(p: &Polynomial) -> Polynomial {
    p.add(&Polynomial::one())
}

/// Algebraic model of a gate over GF(2), n-ary kinds folded left to right.
pub fn gate_to_poly(g: &Gate) -> Polynomial {
    kind_to_poly(g.kind, &g.inputs)
}

pub fn kind_to_poly(kind: GateKind, inputs: &[VariableId]) -> Polynomial {
    let vars: Vec<Polynomial> = inputs.iter().map(|&v| Polynomial::var(v)).collect();
    let and_all = || Polynomial::from_monomial(Monomial::from_vars(inputs.iter().copied()));
    let xor_all = || Polynomial::from_monomials(inputs.iter().map(|&v| Monomial::var(v)));
    let or_all = || {
        let mut it = vars.iter();
        let first = it.next().cloned().unwrap_or_default();
        it.fold(first, |acc, v| or_poly(&acc, v))
    };
    match kind {
        GateKind::Buf => vars[0].clone(),
        GateKind::Not => not_poly(&vars[0]),
        GateKind::And => and_all(),
        GateKind::Xor => xor_all(),
        GateKind::Or => or_all(),
        GateKind::Nand => not_poly(&and_all()),
        GateKind::Nor => not_poly(&or_all()),
        GateKind::Xnor => not_poly(&xor_all()),
        GateKind::Aoi21 => not_poly(&or_poly(&vars[0].mul(&vars[1]), &vars[2])),
        GateKind::Oai21 => not_poly(&or_poly(&vars[0], &vars[1]).mul(&vars[2])),
        GateKind::Aoi22 => not_poly(&or_poly(&vars[0].mul(&vars[1]), &vars[2].mul(&vars[3]))),
        GateKind::Oai22 => not_poly(&or_poly(&vars[0], &vars[1]).mul(&or_poly(&vars[2], &vars[3]))),
        GateKind::Const0 => Polynomial::zero(),
        GateKind::Const1 => Polynomial::one(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("combinational cycle through {0}")]
    Cycle(String),
    #[error("net {0} is driven more than once")]
    MultiplyDriven(String),
    #[error("primary input {0} is driven by a gate")]
    DrivenInput(String),
    #[error("primary output {0} is not driven")]
    UndrivenOutput(String),
    #[error("net {0} is used but never driven")]
    UndrivenNet(String),
    #[error("gate {gate}: {kind} takes {expected} inputs, got {got}")]
    BadArity {
        gate: String,
        kind: GateKind,
        expected: &'static str,
        got: usize,
    },
    #[error("net {0} is declared both as input and output")]
    InputOutputClash(String),
    #[error("net {0} declared twice")]
    DuplicateDeclaration(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetlistError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Unvalidated gate description, as produced by the parsers.
#[derive(Debug, Clone)]
pub struct GateDecl {
    pub label: Option<String>,
    pub output: String,
    pub kind: GateKind,
    pub inputs: Vec<String>,
}

/// A validated combinational netlist with a precomputed topological order.
#[derive(Debug, Clone)]
pub struct Netlist {
    gates: Vec<Gate>,
    inputs: Vec<VariableId>,
    outputs: Vec<VariableId>,
    vars: VariableTable,
    driver: Vec<Option<usize>>,
    topo: Vec<usize>,
    comments: Vec<String>,
}

impl Netlist {
    /// Interns names and checks the structural invariants.
    pub fn build(
        inputs: &[String],
        outputs: &[String],
        decls: Vec<GateDecl>,
        comments: Vec<String>,
    ) -> Result<Netlist, ValidationError> {
        let mut vars = VariableTable::new();
        let mut pis = Vec::with_capacity(inputs.len());
        for name in inputs {
            if vars.lookup(name).is_some() {
                return Err(ValidationError::DuplicateDeclaration(name.clone()));
            }
            pis.push(vars.intern(name, VarKind::PrimaryInput));
        }
        let mut pos = Vec::with_capacity(outputs.len());
        for name in outputs {
            if let Some(id) = vars.lookup(name) {
                return Err(if vars.kind(id) == VarKind::PrimaryInput {
                    ValidationError::InputOutputClash(name.clone())
                } else {
                    ValidationError::DuplicateDeclaration(name.clone())
                });
            }
            pos.push(vars.intern(name, VarKind::PrimaryOutput));
        }
        let mut gates = Vec::with_capacity(decls.len());
        for d in decls {
            let output = vars.intern(&d.output, VarKind::Internal);
            let ins: Vec<VariableId> = d
                .inputs
                .iter()
                .map(|n| vars.intern(n, VarKind::Internal))
                .collect();
            let name = d.label.unwrap_or_else(|| d.output.clone());
            if !d.kind.arity_ok(ins.len()) {
                return Err(ValidationError::BadArity {
                    gate: name,
                    kind: d.kind,
                    expected: d.kind.arity_description(),
                    got: ins.len(),
                });
            }
            gates.push(Gate {
                name,
                output,
                kind: d.kind,
                inputs: ins,
            });
        }

        let mut driver = vec![None; vars.len()];
        for (gi, g) in gates.iter().enumerate() {
            let out = g.output;
            if vars.kind(out) == VarKind::PrimaryInput {
                return Err(ValidationError::DrivenInput(vars.name(out).to_string()));
            }
            if driver[out.index()].is_some() {
                return Err(ValidationError::MultiplyDriven(vars.name(out).to_string()));
            }
            driver[out.index()] = Some(gi);
        }
        for &po in &pos {
            if driver[po.index()].is_none() {
                return Err(ValidationError::UndrivenOutput(vars.name(po).to_string()));
            }
        }
        for g in &gates {
            for &v in &g.inputs {
                if vars.kind(v) != VarKind::PrimaryInput && driver[v.index()].is_none() {
                    return Err(ValidationError::UndrivenNet(vars.name(v).to_string()));
                }
            }
        }
        let topo = topo_sort(&gates, &driver)
            .map_err(|gi| ValidationError::Cycle(describe_cycle(&gates, &driver, gi, &vars)))?;
        let n = Netlist {
            gates,
            inputs: pis,
            outputs: pos,
            vars,
            driver,
            topo,
            comments,
        };
        let dead = n.dangling_gates();
        if !dead.is_empty() {
            warn!(
                "{} gate(s) do not reach any primary output and are ignored",
                dead.len()
            );
        }
        Ok(n)
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, index: usize) -> &Gate {
        &self.gates[index]
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn primary_inputs(&self) -> &[VariableId] {
        &self.inputs
    }

    pub fn primary_outputs(&self) -> &[VariableId] {
        &self.outputs
    }

    pub fn vars(&self) -> &VariableTable {
        &self.vars
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn lookup(&self, name: &str) -> Option<VariableId> {
        self.vars.lookup(name)
    }

    pub fn is_primary_input(&self, v: VariableId) -> bool {
        self.vars.kind(v) == VarKind::PrimaryInput
    }

    /// Index of the gate driving `v`, if any.
    pub fn driver(&self, v: VariableId) -> Option<usize> {
        self.driver.get(v.index()).copied().flatten()
    }

    pub fn gate_by_name(&self, name: &str) -> Option<usize> {
        self.gates.iter().position(|g| g.name == name)
    }

    /// Gate indices in topological order; ties broken by declaration order.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Transitive fanin of `out`, topologically ordered.
    pub fn cone(&self, out: VariableId) -> Cone {
        let mut seen = vec![false; self.gates.len()];
        let mut stack: Vec<usize> = self.driver(out).into_iter().collect();
        while let Some(gi) = stack.pop() {
            if std::mem::replace(&mut seen[gi], true) {
                continue;
            }
            for &v in &self.gates[gi].inputs {
                if let Some(d) = self.driver(v) {
                    if !seen[d] {
                        stack.push(d);
                    }
                }
            }
        }
        let gates = self.topo.iter().copied().filter(|&gi| seen[gi]).collect();
        Cone { output: out, gates }
    }

    /// Gates outside every primary-output cone.
    pub fn dangling_gates(&self) -> Vec<usize> {
        let mut live = vec![false; self.gates.len()];
        for &po in &self.outputs {
            for gi in self.cone(po).gates {
                live[gi] = true;
            }
        }
        (0..self.gates.len()).filter(|&gi| !live[gi]).collect()
    }

    /// Copy with one gate replaced and an extra header comment.
    pub fn with_gate_replaced(
        &self,
        index: usize,
        gate: Gate,
        comment: String,
    ) -> Result<Netlist, ValidationError> {
        let names = |ids: &[VariableId]| {
            ids.iter()
                .map(|&v| self.vars.name(v).to_string())
                .collect::<Vec<_>>()
        };
        let decls = self
            .gates
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let g = if i == index { &gate } else { g };
                GateDecl {
                    label: (g.name != self.vars.name(g.output)).then(|| g.name.clone()),
                    output: self.vars.name(g.output).to_string(),
                    kind: g.kind,
                    inputs: names(&g.inputs),
                }
            })
            .collect();
        let mut comments = self.comments.clone();
        comments.push(comment);
        Netlist::build(&names(&self.inputs), &names(&self.outputs), decls, comments)
    }

    /// Canonical native text: comments, declarations, then gates in topological order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        let names = |ids: &[VariableId]| {
            ids.iter()
                .map(|&v| self.vars.name(v))
                .collect::<Vec<_>>()
                .join(" ")
        };
        if !self.inputs.is_empty() {
            s.push_str(&format!("input {}\n", names(&self.inputs)));
        }
        if !self.outputs.is_empty() {
            s.push_str(&format!("output {}\n", names(&self.outputs)));
        }
        for &gi in &self.topo {
            let g = &self.gates[gi];
            let out = self.vars.name(g.output);
            if g.name != out {
                s.push_str(&g.name);
                s.push_str(": ");
            }
            let ins: Vec<&str> = g.inputs.iter().map(|&v| self.vars.name(v)).collect();
            s.push_str(&format!("{} = {}({})\n", out, g.kind, ins.join(", ")));
        }
        s
    }

    /// Boolean value of every variable under a bit-parallel input assignment.
    /// `input_words[i]` carries 64 lanes for `primary_inputs()[i]`.
    pub fn simulate_words(&self, input_words: &[u64]) -> Vec<u64> {
        assert_eq!(input_words.len(), self.inputs.len());
        let mut values = vec![0u64; self.vars.len()];
        for (&v, &w) in self.inputs.iter().zip(input_words) {
            values[v.index()] = w;
        }
        let mut buf = Vec::with_capacity(4);
        for &gi in &self.topo {
            let g = &self.gates[gi];
            buf.clear();
            buf.extend(g.inputs.iter().map(|v| values[v.index()]));
            values[g.output.index()] = g.kind.eval_word(&buf);
        }
        values
    }
}

/// Kahn's algorithm, always releasing the lowest declaration index first.
/// On failure returns a gate index that lies on or behind a cycle.
fn topo_sort(gates: &[Gate], driver: &[Option<usize>]) -> Result<Vec<usize>, usize> {
    let n = gates.len();
    let mut indegree = vec![0usize; n];
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (gi, g) in gates.iter().enumerate() {
        for &v in &g.inputs {
            if let Some(d) = driver[v.index()] {
                indegree[gi] += 1;
                fanout[d].push(gi);
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&g| indegree[g] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(gi)) = ready.pop() {
        order.push(gi);
        for &succ in &fanout[gi] {
            indegree[succ] -= 1;
            if indegree[succ] == 0 {
                ready.push(Reverse(succ));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&g| indegree[g] > 0).unwrap())
    }
}

/// Walks drivers backwards from `start` until a gate repeats, naming the cycle.
fn describe_cycle(
    gates: &[Gate],
    driver: &[Option<usize>],
    start: usize,
    vars: &VariableTable,
) -> String {
    // every gate left with positive indegree has a driven input that is also unresolved;
    // following such inputs must revisit a gate
    let resolved = topo_sort_partial(gates, driver);
    let mut path: Vec<usize> = Vec::new();
    let mut pos: HashMap<usize, usize> = HashMap::new();
    let mut cur = start;
    loop {
        if let Some(&p) = pos.get(&cur) {
            let names: Vec<&str> = path[p..]
                .iter()
                .rev()
                .map(|&g| vars.name(gates[g].output))
                .collect();
            let mut s = names.join(" -> ");
            s.push_str(" -> ");
            s.push_str(names[0]);
            return s;
        }
        pos.insert(cur, path.len());
        path.push(cur);
        cur = gates[cur]
            .inputs
            .iter()
            .filter_map(|v| driver[v.index()])
            .find(|d| !resolved[*d])
            .expect("unresolved gate has an unresolved driver");
    }
}

fn topo_sort_partial(gates: &[Gate], driver: &[Option<usize>]) -> Vec<bool> {
    let n = gates.len();
    let mut indegree = vec![0usize; n];
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (gi, g) in gates.iter().enumerate() {
        for &v in &g.inputs {
            if let Some(d) = driver[v.index()] {
                indegree[gi] += 1;
                fanout[d].push(gi);
            }
        }
    }
    let mut resolved = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&g| indegree[g] == 0).collect();
    while let Some(g) = stack.pop() {
        resolved[g] = true;
        for &s in &fanout[g] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                stack.push(s);
            }
        }
    }
    resolved
}

/// Transitive fanin of one primary output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cone {
    pub output: VariableId,
    /// Gate indices into the owning netlist, topologically ordered.
    pub gates: Vec<usize>,
}

impl Cone {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}
