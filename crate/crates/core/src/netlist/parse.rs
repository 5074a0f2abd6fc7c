//! Native line-oriented netlist format.
//!
//! ```text
//! # comment
//! input a0 a1 b0 b1
//! output z0 z1
//! G1: n1 = NAND(a0, b0)
//! z0 = XOR(n1, n2)
//! ```

use super::{GateDecl, GateKind, Netlist, NetlistError};

fn is_name_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '=' | '#' | ':')
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Cursor over one source line, tracking 1-based columns.
struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn column(&self) -> usize {
        self.text[..self.pos].chars().count() + 1
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    fn name(&mut self, what: &str) -> Result<&'a str, NetlistError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !is_name_char(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        if start == self.pos {
            let found = self
                .peek()
                .map_or("end of line".to_string(), |c| format!("{c:?}"));
            return Err(parse_err(
                self.line,
                self.column(),
                format!("expected {what}, found {found}"),
            ));
        }
        Ok(&self.text[start..self.pos])
    }

    fn expect(&mut self, ch: char) -> Result<(), NetlistError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == ch => {
                self.pos += 1;
                Ok(())
            }
            other => {
                let found = other.map_or("end of line".to_string(), |c| format!("{c:?}"));
                Err(parse_err(
                    self.line,
                    self.column(),
                    format!("expected {ch:?}, found {found}"),
                ))
            }
        }
    }

    fn eat(&mut self, ch: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
}

/// Parses and validates a netlist in the native format.
pub fn parse_netlist(text: &str) -> Result<Netlist, NetlistError> {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut decls = Vec::new();
    let mut comments = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_start();
        if let Some(c) = trimmed.strip_prefix('#') {
            comments.push(c.strip_prefix(' ').unwrap_or(c).trim_end().to_string());
            continue;
        }
        let body = raw.split('#').next().unwrap_or("");
        let mut cur = Cursor {
            text: body,
            pos: 0,
            line,
        };
        if cur.at_end() {
            continue;
        }
        let first = cur.name("declaration or gate")?;
        match first {
            "input" | "inputs" | "output" | "outputs"
                if !matches!(cur.peek_nonws(), Some('=') | Some(':')) =>
            {
                let target = if first.starts_with("input") {
                    &mut inputs
                } else {
                    &mut outputs
                };
                while !cur.at_end() {
                    target.push(cur.name("net name")?.to_string());
                    cur.eat(',');
                }
            }
            _ => {
                let (label, output) = if cur.eat(':') {
                    (Some(first.to_string()), cur.name("gate output")?)
                } else {
                    (None, first)
                };
                cur.expect('=')?;
                cur.skip_ws();
                let kind_col = cur.column();
                let kind_name = cur.name("gate kind")?;
                let kind: GateKind = kind_name
                    .parse()
                    .map_err(|e: String| parse_err(line, kind_col, e))?;
                cur.expect('(')?;
                let mut ins = Vec::new();
                if !cur.eat(')') {
                    loop {
                        ins.push(cur.name("gate input")?.to_string());
                        if cur.eat(')') {
                            break;
                        }
                        cur.expect(',')?;
                    }
                }
                if !cur.at_end() {
                    return Err(parse_err(line, cur.column(), "trailing text after gate"));
                }
                decls.push(GateDecl {
                    label,
                    output: output.to_string(),
                    kind,
                    inputs: ins,
                });
            }
        }
    }
    Ok(Netlist::build(&inputs, &outputs, decls, comments)?)
}

impl Cursor<'_> {
    fn peek_nonws(&mut self) -> Option<char> {
        let save = self.pos;
        self.skip_ws();
        let c = self.peek();
        self.pos = save;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::ValidationError;

    #[test]
    fn parses_declarations_and_gates() {
        let n = parse_netlist(
            "# header\ninput a0, a1\ninput b0 b1\noutput z0\nz0 = XOR(t, u) # trailing\nt = AND(a0,b0)\nu = and( a1 , b1 )\n",
        )
        .unwrap();
        assert_eq!(n.primary_inputs().len(), 4);
        assert_eq!(n.primary_outputs().len(), 1);
        assert_eq!(n.gate_count(), 3);
        assert_eq!(n.comments(), ["header"]);
        assert_eq!(n.gate(2).kind, GateKind::And);
    }

    #[test]
    fn labels_and_constants() {
        let n = parse_netlist("input a\noutput z y\nG9: z = CONST1()\ny = BUF(a)\n").unwrap();
        assert_eq!(n.gate(0).name, "G9");
        assert_eq!(n.gate(0).kind, GateKind::Const1);
        assert!(n.gate(0).inputs.is_empty());
        assert_eq!(n.gate(1).name, "y");
    }

    #[test]
    fn nets_may_be_named_like_keywords_when_assigned() {
        let n = parse_netlist("input a\noutput input\ninput = NOT(a)\n").unwrap();
        assert_eq!(n.gate_count(), 1);
    }

    #[test]
    fn reports_positions() {
        match parse_netlist("input a\noutput z\nz = FOO(a)\n").unwrap_err() {
            NetlistError::Parse {
                line,
                column,
                message,
            } => {
                assert_eq!((line, column), (3, 5));
                assert!(message.contains("FOO"));
            }
            e => panic!("unexpected {e:?}"),
        }
        match parse_netlist("input a\noutput z\nz = AND(a b)\n").unwrap_err() {
            NetlistError::Parse { line, column, .. } => assert_eq!((line, column), (3, 11)),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(
            parse_netlist("input a\nz NOT(a)\n").unwrap_err(),
            NetlistError::Parse { line: 2, .. }
        ));
        assert!(matches!(
            parse_netlist("input a\noutput z\nz = NOT(a) x\n").unwrap_err(),
            NetlistError::Parse { line: 3, .. }
        ));
    }

    #[test]
    fn validation_surfaces_through_parse() {
        assert_eq!(
            parse_netlist("input a\noutput a\n").unwrap_err(),
            NetlistError::Validation(ValidationError::InputOutputClash("a".into()))
        );
    }
}
