//! Import of a combinational BLIF subset (`.model/.inputs/.outputs/.names/.end`).
//!
//! Each `.names` cover is converted to a truth table and matched against the
//! native gate kinds; covers with no matching kind are rejected.

use super::{GateDecl, GateKind, Netlist, NetlistError};

const MAX_COVER_INPUTS: usize = 6;

fn parse_err(line: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Parse {
        line,
        column: 1,
        message: message.into(),
    }
}

struct Names {
    line: usize,
    signals: Vec<String>,
    rows: Vec<(String, char)>,
}

/// Logical lines with comments stripped and `\` continuations joined.
fn logical_lines(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim_end();
        let (body, continued) = match body.strip_suffix('\\') {
            Some(b) => (b, true),
            None => (body, false),
        };
        let entry = pending.get_or_insert_with(|| (idx + 1, String::new()));
        entry.1.push(' ');
        entry.1.push_str(body);
        if !continued {
            let (l, s) = pending.take().unwrap();
            if !s.trim().is_empty() {
                out.push((l, s.trim().to_string()));
            }
        }
    }
    if let Some((l, s)) = pending {
        if !s.trim().is_empty() {
            out.push((l, s.trim().to_string()));
        }
    }
    out
}

fn cover_truth_table(n: &Names) -> Result<Vec<bool>, NetlistError> {
    let arity = n.signals.len() - 1;
    if arity > MAX_COVER_INPUTS {
        return Err(parse_err(
            n.line,
            format!("cover with {arity} inputs is not supported"),
        ));
    }
    let phase = n.rows.first().map_or('1', |r| r.1);
    if n.rows.iter().any(|r| r.1 != phase) {
        return Err(parse_err(n.line, "cover mixes on-set and off-set rows"));
    }
    let mut table = vec![false; 1 << arity];
    for (pattern, _) in &n.rows {
        if pattern.len() != arity {
            return Err(parse_err(
                n.line,
                format!("cover row {pattern:?} does not have {arity} columns"),
            ));
        }
        for (assignment, slot) in table.iter_mut().enumerate() {
            let hit = pattern.chars().enumerate().all(|(i, c)| {
                let bit = assignment >> i & 1 == 1;
                match c {
                    '1' => bit,
                    '0' => !bit,
                    _ => true,
                }
            });
            *slot |= hit;
        }
    }
    if phase == '0' {
        table.iter_mut().for_each(|b| *b = !*b);
    }
    Ok(table)
}

fn match_kind(table: &[bool], arity: usize) -> Option<GateKind> {
    GateKind::ALL
        .into_iter()
        .filter(|k| k.arity_ok(arity))
        .find(|k| {
            table.iter().enumerate().all(|(assignment, &want)| {
                let ins: Vec<bool> = (0..arity).map(|i| assignment >> i & 1 == 1).collect();
                k.eval(&ins) == want
            })
        })
}

/// Parses a single-model combinational BLIF file.
pub fn parse_blif(text: &str) -> Result<Netlist, NetlistError> {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut blocks: Vec<Names> = Vec::new();
    let mut comments = Vec::new();
    let mut ended = false;

    for (line, s) in logical_lines(text) {
        if ended {
            return Err(parse_err(line, "content after .end"));
        }
        let mut toks = s.split_whitespace();
        let head = toks.next().unwrap();
        match head {
            ".model" => comments.push(format!("model {}", toks.collect::<Vec<_>>().join(" "))),
            ".inputs" => inputs.extend(toks.map(str::to_string)),
            ".outputs" => outputs.extend(toks.map(str::to_string)),
            ".names" => {
                let signals: Vec<String> = toks.map(str::to_string).collect();
                if signals.is_empty() {
                    return Err(parse_err(line, ".names needs an output signal"));
                }
                blocks.push(Names {
                    line,
                    signals,
                    rows: Vec::new(),
                });
            }
            ".end" => ended = true,
            _ if head.starts_with('.') => {
                return Err(parse_err(line, format!("unsupported directive {head}")));
            }
            _ => {
                let block = blocks
                    .last_mut()
                    .ok_or_else(|| parse_err(line, "cover row outside .names"))?;
                let parts: Vec<&str> = s.split_whitespace().collect();
                let (pattern, out) = match parts.as_slice() {
                    [out] if block.signals.len() == 1 => (String::new(), *out),
                    [pattern, out] => (pattern.to_string(), *out),
                    _ => return Err(parse_err(line, format!("malformed cover row {s:?}"))),
                };
                if !pattern.chars().all(|c| matches!(c, '0' | '1' | '-')) {
                    return Err(parse_err(line, format!("bad cover pattern {pattern:?}")));
                }
                let phase = match out {
                    "1" => '1',
                    "0" => '0',
                    _ => return Err(parse_err(line, format!("bad cover output {out:?}"))),
                };
                block.rows.push((pattern, phase));
            }
        }
    }

    let mut decls = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let arity = b.signals.len() - 1;
        let table = cover_truth_table(b)?;
        let kind = match_kind(&table, arity)
            .ok_or_else(|| parse_err(b.line, "cover does not match any supported gate kind"))?;
        decls.push(GateDecl {
            label: None,
            output: b.signals[arity].clone(),
            kind,
            inputs: b.signals[..arity].to_vec(),
        });
    }
    Ok(Netlist::build(&inputs, &outputs, decls, comments)?)
}
