use std::collections::HashMap;

use thiserror::Error;

use super::Netlist;
use crate::gfpoly::VariableId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PortError {
    #[error("netlist has {got} primary inputs, expected {expected} for m = {m}")]
    InputCount {
        m: usize,
        expected: usize,
        got: usize,
    },
    #[error("netlist has {got} primary outputs, expected {m}")]
    OutputCount { m: usize, got: usize },
    #[error("port {port} (net {net}) is not a primary {role} of the netlist")]
    Missing {
        port: String,
        net: String,
        role: &'static str,
    },
    #[error("port map line {line}: {message}")]
    MapSyntax { line: usize, message: String },
}

/// Renames from conventional port names (`a3`, `b0`, `z7`) to netlist nets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PortMap {
    renames: HashMap<String, String>,
}

impl PortMap {
    /// One `<port> <net>` pair per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PortError> {
        let mut renames = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let parts: Vec<&str> = body
                .split(|c: char| c.is_whitespace() || c == '=')
                .filter(|s| !s.is_empty())
                .collect();
            match parts.as_slice() {
                [port, net] => {
                    if renames.insert(port.to_string(), net.to_string()).is_some() {
                        return Err(PortError::MapSyntax {
                            line: i + 1,
                            message: format!("port {port} mapped twice"),
                        });
                    }
                }
                _ => {
                    return Err(PortError::MapSyntax {
                        line: i + 1,
                        message: format!("expected `<port> <net>`, got {body:?}"),
                    })
                }
            }
        }
        Ok(Self { renames })
    }

    pub fn net_for<'a>(&'a self, port: &'a str) -> &'a str {
        self.renames.get(port).map_or(port, String::as_str)
    }
}

/// Operand and result wiring of a GF(2^m) multiplier netlist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ports {
    pub a: Vec<VariableId>,
    pub b: Vec<VariableId>,
    pub z: Vec<VariableId>,
}

impl Ports {
    pub fn width(&self) -> usize {
        self.z.len()
    }

    /// Resolves `a0..a(m-1)`, `b0..b(m-1)`, `z0..z(m-1)` (through `map` if given).
    pub fn resolve(netlist: &Netlist, m: usize, map: Option<&PortMap>) -> Result<Self, PortError> {
        let pis = netlist.primary_inputs().len();
        if pis != 2 * m {
            return Err(PortError::InputCount {
                m,
                expected: 2 * m,
                got: pis,
            });
        }
        let pos = netlist.primary_outputs().len();
        if pos != m {
            return Err(PortError::OutputCount { m, got: pos });
        }
        let default_map = PortMap::default();
        let map = map.unwrap_or(&default_map);
        let find = |prefix: &str, i: usize, output: bool| -> Result<VariableId, PortError> {
            let port = format!("{prefix}{i}");
            let net = map.net_for(&port).to_string();
            let id = netlist.lookup(&net).filter(|&v| {
                if output {
                    netlist.primary_outputs().contains(&v)
                } else {
                    netlist.is_primary_input(v)
                }
            });
            id.ok_or(PortError::Missing {
                port,
                net,
                role: if output { "output" } else { "input" },
            })
        };
        Ok(Ports {
            a: (0..m)
                .map(|i| find("a", i, false))
                .collect::<Result<_, _>>()?,
            b: (0..m)
                .map(|i| find("b", i, false))
                .collect::<Result<_, _>>()?,
            z: (0..m)
                .map(|i| find("z", i, true))
                .collect::<Result<_, _>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    #[test]
    fn resolves_conventional_and_mapped_names() {
        let n = parse_netlist("input b0 a0\noutput z0\nz0 = AND(a0, b0)\n").unwrap();
        let p = Ports::resolve(&n, 1, None).unwrap();
        assert_eq!(n.vars().name(p.a[0]), "a0");
        assert_eq!(n.vars().name(p.b[0]), "b0");

        let n = parse_netlist("input x y\noutput out\nout = AND(x, y)\n").unwrap();
        assert!(matches!(
            Ports::resolve(&n, 1, None),
            Err(PortError::Missing { .. })
        ));
        let map = PortMap::parse("a0 x\nb0 = y # comment\nz0 out\n").unwrap();
        assert!(Ports::resolve(&n, 1, Some(&map)).is_ok());
    }

    #[test]
    fn arity_mismatch() {
        let n = parse_netlist("input a0 b0\noutput z0\nz0 = AND(a0, b0)\n").unwrap();
        assert_eq!(
            Ports::resolve(&n, 2, None),
            Err(PortError::InputCount {
                m: 2,
                expected: 4,
                got: 2
            })
        );
        assert!(PortMap::parse("a0\n").is_err());
    }
}
