//! Bit-parallel verification: split the output signature into one task per
//! output bit, run the tasks over a fixed number of workers, merge in bit order.

use std::any::Any;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::fieldspec::{FieldSpec, IrreducibilityCheck};
use crate::netlist::{Netlist, PortError, PortMap, Ports};
use crate::rewriter::{
    verify_bit, BitResult, RewriteOptions, BYTES_PER_MONOMIAL, DEFAULT_TERM_CAP,
};

pub(crate) fn serialize_secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// A task that panicked; the message is kept for the report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("task panicked: {0}")]
pub struct TaskPanic(pub String);

fn panic_message(p: Box<dyn Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

/// Runs every task exactly once on up to `threads` workers.
///
/// Tasks are handed out in vector order; results come back indexed like the
/// input. With `threads == 1` everything runs sequentially on the caller's thread.
pub fn run_tasks<R, F>(tasks: Vec<F>, threads: usize) -> Vec<Result<R, TaskPanic>>
where
    F: FnOnce() -> R + Send,
    R: Send,
{
    let run = |f: F| catch_unwind(AssertUnwindSafe(f)).map_err(|p| TaskPanic(panic_message(p)));
    let n = tasks.len();
    let workers = threads.max(1).min(n.max(1));
    if workers <= 1 {
        return tasks.into_iter().map(run).collect();
    }

    let slots: Vec<Mutex<Option<F>>> = tasks.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (slots, next, run) = (&slots, &next, &run);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let task = slots[i].lock().unwrap().take().expect("task taken twice");
                tx.send((i, run(task))).expect("result receiver alive");
            });
        }
    });
    drop(tx);
    let mut results: Vec<Option<Result<R, TaskPanic>>> = (0..n).map(|_| None).collect();
    for (i, r) in rx {
        results[i] = Some(r);
    }
    results
        .into_iter()
        .map(|r| r.expect("every task produced a result"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyConfig {
    pub threads: usize,
    pub trace: bool,
    pub term_cap: usize,
    pub irreducibility_check: IrreducibilityCheck,
    pub port_map: Option<PortMap>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            threads: default_threads(usize::MAX),
            trace: false,
            term_cap: DEFAULT_TERM_CAP,
            irreducibility_check: IrreducibilityCheck::Auto,
            port_map: None,
        }
    }
}

impl VerifyConfig {
    pub fn with_threads(threads: usize) -> Self {
        Self {
            threads,
            ..Default::default()
        }
    }
}

/// Logical core count, capped at `m`.
pub fn default_threads(m: usize) -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    cores.min(m).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Ports(#[from] PortError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BitEntry {
    pub bit: usize,
    pub output: String,
    pub outcome: Result<BitResult, String>,
    /// Rendered extracted + expected, present for mismatching bits.
    pub residual: Option<String>,
}

impl BitEntry {
    pub fn matched(&self) -> bool {
        matches!(&self.outcome, Ok(r) if r.matched)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NetlistStats {
    /// Gate count, i.e. the number of algebraic equations.
    pub gates: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub dangling_gates: usize,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub overall: Verdict,
    pub m: usize,
    pub polynomial: String,
    pub polynomial_hex: String,
    pub netlist: NetlistStats,
    pub threads: usize,
    pub bits: Vec<BitEntry>,
    pub wall_time: Duration,
    /// Largest live-monomial count seen by any single task.
    pub max_task_peak_terms: usize,
    pub per_task_peak_memory_bytes: usize,
    pub aggregate_peak_memory_bytes: usize,
    /// Rendered trace per bit, when tracing was requested.
    pub traces: Vec<(usize, String)>,
}

/// Checks `netlist` against A(x)*B(x) mod P(x), one task per output bit.
pub fn verify(
    netlist: &Netlist,
    fs: &FieldSpec,
    cfg: &VerifyConfig,
) -> Result<VerifyReport, VerifyError> {
    if cfg.threads == 0 {
        return Err(VerifyError::Config(
            "thread count must be at least 1".into(),
        ));
    }
    if cfg.term_cap == 0 {
        return Err(VerifyError::Config("term cap must be at least 1".into()));
    }
    let started = Instant::now();
    let m = fs.degree();
    let ports = Ports::resolve(netlist, m, cfg.port_map.as_ref())?;
    let expected = fs.expected_signature(&ports.a, &ports.b);
    let cones: Vec<_> = ports.z.iter().map(|&z| netlist.cone(z)).collect();

    // largest cone first; ties by bit index
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(cones[i].len()), i));

    let opts = RewriteOptions {
        trace: cfg.trace,
        term_cap: cfg.term_cap,
        ..Default::default()
    };
    let tasks: Vec<_> = order
        .iter()
        .map(|&bit| {
            let (cone, exp, opts) = (&cones[bit], &expected.slots[bit], &opts);
            move || verify_bit(netlist, cone, bit, exp, opts)
        })
        .collect();
    let threads = cfg.threads.min(m).max(1);
    let results = run_tasks(tasks, threads);

    let mut by_bit: Vec<Option<Result<BitResult, String>>> = (0..m).map(|_| None).collect();
    for (&bit, r) in order.iter().zip(results) {
        by_bit[bit] = Some(match r {
            Ok(Ok(res)) => Ok(res),
            Ok(Err(e)) => Err(e.to_string()),
            Err(p) => Err(p.to_string()),
        });
    }
    let vars = netlist.vars();
    let mut traces = Vec::new();
    let bits: Vec<BitEntry> = by_bit
        .into_iter()
        .enumerate()
        .map(|(bit, outcome)| {
            let outcome = outcome.unwrap();
            if let Ok(Some(t)) = outcome.as_ref().map(|r| r.trace.as_ref()) {
                traces.push((bit, t.render(vars)));
            }
            let residual = match &outcome {
                Ok(r) if !r.matched => Some(r.residual.render(vars)),
                _ => None,
            };
            BitEntry {
                bit,
                output: vars.name(ports.z[bit]).to_string(),
                outcome,
                residual,
            }
        })
        .collect();

    let overall = if bits.iter().any(|b| b.outcome.is_err()) {
        Verdict::Error
    } else if bits.iter().all(BitEntry::matched) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let max_task_peak_terms = bits
        .iter()
        .filter_map(|b| b.outcome.as_ref().ok())
        .map(|r| r.stats.peak_terms)
        .max()
        .unwrap_or(0);
    let per_task = max_task_peak_terms * BYTES_PER_MONOMIAL;
    Ok(VerifyReport {
        overall,
        m,
        polynomial: fs.modulus().to_term_string(),
        polynomial_hex: fs.modulus().to_hex_string(),
        netlist: NetlistStats {
            gates: netlist.gate_count(),
            inputs: netlist.primary_inputs().len(),
            outputs: netlist.primary_outputs().len(),
            dangling_gates: netlist.dangling_gates().len(),
        },
        threads,
        bits,
        wall_time: started.elapsed(),
        max_task_peak_terms,
        per_task_peak_memory_bytes: per_task,
        aggregate_peak_memory_bytes: per_task * threads,
        traces,
    })
}

fn human_bytes(b: usize) -> String {
    const UNITS: [&str; 4] = ["B", "KB", "MB", "GB"];
    let mut v = b as f64;
    let mut u = 0;
    while v >= 1024.0 && u + 1 < UNITS.len() {
        v /= 1024.0;
        u += 1;
    }
    if u == 0 {
        format!("{b} B")
    } else {
        format!("{v:.1} {}", UNITS[u])
    }
}

#[derive(Serialize)]
struct BitJson<'a> {
    bit: usize,
    output: &'a str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    extracted_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cone_gates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eliminations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_sec: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak_memory_bytes: Option<usize>,
}

#[derive(Serialize)]
struct TotalsJson {
    wall_time_sec: f64,
    threads: usize,
    max_task_peak_terms: usize,
    per_task_peak_memory_bytes: usize,
    aggregate_peak_memory_bytes: usize,
}

#[derive(Serialize)]
struct FieldJson<'a> {
    m: usize,
    polynomial: &'a str,
    hex: &'a str,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    overall: Verdict,
    field: FieldJson<'a>,
    netlist: &'a NetlistStats,
    bits: Vec<BitJson<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    totals: Option<TotalsJson>,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        match self.overall {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Error => 2,
        }
    }

    fn status(b: &BitEntry) -> &'static str {
        match &b.outcome {
            Ok(r) if r.matched => "match",
            Ok(_) => "mismatch",
            Err(_) => "error",
        }
    }

    /// JSON document. With `include_timing = false` every field that depends
    /// on timing, memory or thread count is omitted, leaving content that is
    /// identical for any worker count.
    pub fn to_json(&self, include_timing: bool) -> String {
        let bits = self
            .bits
            .iter()
            .map(|b| {
                let ok = b.outcome.as_ref().ok();
                BitJson {
                    bit: b.bit,
                    output: &b.output,
                    status: Self::status(b),
                    extracted_terms: ok.map(|r| r.extracted.len()),
                    expected_terms: ok.map(|r| r.expected.len()),
                    residual: b.residual.clone(),
                    error: b.outcome.as_ref().err().map(String::as_str),
                    cone_gates: ok.map(|r| r.stats.cone_gates),
                    steps: ok.map(|r| r.stats.steps),
                    peak_terms: ok.map(|r| r.stats.peak_terms),
                    eliminations: ok.map(|r| r.stats.eliminations),
                    time_sec: ok
                        .filter(|_| include_timing)
                        .map(|r| r.stats.elapsed.as_secs_f64()),
                    peak_memory_bytes: ok
                        .filter(|_| include_timing)
                        .map(|r| r.stats.peak_memory_bytes),
                }
            })
            .collect();
        let doc = ReportJson {
            overall: self.overall,
            field: FieldJson {
                m: self.m,
                polynomial: &self.polynomial,
                hex: &self.polynomial_hex,
            },
            netlist: &self.netlist,
            bits,
            totals: include_timing.then_some(TotalsJson {
                wall_time_sec: self.wall_time.as_secs_f64(),
                threads: self.threads,
                max_task_peak_terms: self.max_task_peak_terms,
                per_task_peak_memory_bytes: self.per_task_peak_memory_bytes,
                aggregate_peak_memory_bytes: self.aggregate_peak_memory_bytes,
            }),
        };
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }

    /// Human-readable table. `include_timing = false` drops the timing,
    /// memory and thread columns.
    pub fn render_text(&self, include_timing: bool) -> String {
        let mut s = String::new();
        s.push_str(&format!("result      : {}\n", self.overall));
        s.push_str(&format!(
            "field       : GF(2^{}) mod {} ({})\n",
            self.m, self.polynomial, self.polynomial_hex
        ));
        s.push_str(&format!(
            "netlist     : {} equations (gates), {} inputs, {} outputs, {} dangling\n",
            self.netlist.gates,
            self.netlist.inputs,
            self.netlist.outputs,
            self.netlist.dangling_gates
        ));
        if include_timing {
            s.push_str(&format!("threads     : {}\n", self.threads));
        }
        s.push('\n');
        s.push_str(&format!(
            "{:>5}  {:<12} {:>8} {:>8} {:>10} {:>7}",
            "bit", "output", "cone", "steps", "peak_terms", "elim"
        ));
        if include_timing {
            s.push_str(&format!(" {:>10}", "time_ms"));
        }
        s.push_str("  status\n");
        for b in &self.bits {
            s.push_str(&format!("{:>5}  {:<12}", b.bit, b.output));
            match &b.outcome {
                Ok(r) => {
                    s.push_str(&format!(
                        " {:>8} {:>8} {:>10} {:>7}",
                        r.stats.cone_gates, r.stats.steps, r.stats.peak_terms, r.stats.eliminations
                    ));
                    if include_timing {
                        s.push_str(&format!(" {:>10.3}", r.stats.elapsed.as_secs_f64() * 1e3));
                    }
                }
                Err(_) => {
                    s.push_str(&format!(" {:>8} {:>8} {:>10} {:>7}", "-", "-", "-", "-"));
                    if include_timing {
                        s.push_str(&format!(" {:>10}", "-"));
                    }
                }
            }
            s.push_str(&format!("  {}\n", Self::status(b)));
        }
        for b in &self.bits {
            match &b.outcome {
                Ok(r) if !r.matched => {
                    let residual = b.residual.as_deref().unwrap_or_default();
                    s.push_str(&format!(
                        "\nbit {} ({}) residual: {} ({} terms)\n",
                        b.bit,
                        b.output,
                        residual,
                        r.residual.len()
                    ));
                }
                Err(e) => s.push_str(&format!("\nbit {} ({}) error: {}\n", b.bit, b.output, e)),
                _ => {}
            }
        }
        if include_timing {
            s.push('\n');
            s.push_str(&format!(
                "runtime     : {:.3} s\n",
                self.wall_time.as_secs_f64()
            ));
            s.push_str(&format!(
                "mem/task    : {} (peak {} terms)\n",
                human_bytes(self.per_task_peak_memory_bytes),
                self.max_task_peak_terms
            ));
            s.push_str(&format!(
                "mem total   : {} ({} tasks in flight)\n",
                human_bytes(self.aggregate_peak_memory_bytes),
                self.threads
            ));
        }
        s
    }
}
