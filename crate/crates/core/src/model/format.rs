//! NET and EVIDENCE text formats.
//!
//! ```text
//! # comment
//! node <name> prior <p>
//! node <name> leak <l> parents <parent>:<q> [<parent>:<q> ...]
//! ```
//!
//! Evidence files hold one `<name> <present|absent>` per line. A leading
//! `case <id> seed <seed>` header (as written by the case generator) is
//! skipped.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Evidence, Link, Network, NodeKind, NodeSpec, State};
use crate::error::{Error, Result};

/// Formats a probability with 17 significant digits, enough to round-trip
/// any `f64`.
pub fn format_probability(p: f64) -> String {
    format!("{p:.16e}")
}

struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let content = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in content.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Token {
                    text: &content[s..i],
                    col: content[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &content[s..],
            col: content[..s].chars().count() + 1,
        });
    }
    out
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.contains([':', '=', ',', '#'])
}

fn probability(tok: &Token<'_>, line: usize, node: &str) -> Result<f64> {
    let value: f64 = tok
        .text
        .parse()
        .map_err(|_| syntax(line, tok.col, format!("expected a probability, found `{}`", tok.text)))?;
    if !value.is_finite() {
        return Err(syntax(
            line,
            tok.col,
            format!("expected a probability, found `{}`", tok.text),
        ));
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ProbabilityOutOfRange {
            node: node.to_string(),
            value,
        }
        .at_line(line));
    }
    Ok(value)
}

enum Decl<'a> {
    Root(f64),
    NonRoot { leak: f64, links: Vec<(&'a str, f64)> },
}

/// Parses and validates a NET file. Node ids follow declaration order.
pub fn parse_network(text: &str) -> Result<Network> {
    let mut decls: Vec<(usize, &str, Decl<'_>)> = Vec::new();
    let mut names: HashMap<&str, usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = tokens(raw);
        let Some(first) = toks.first() else { continue };
        if first.text != "node" {
            return Err(syntax(
                line,
                first.col,
                format!("expected `node`, found `{}`", first.text),
            ));
        }
        let name_tok = toks
            .get(1)
            .ok_or_else(|| syntax(line, raw.len() + 1, "missing node name"))?;
        let name = name_tok.text;
        if !valid_name(name) {
            return Err(syntax(line, name_tok.col, format!("invalid node name `{name}`")));
        }
        let kw = toks
            .get(2)
            .ok_or_else(|| syntax(line, raw.len() + 1, "expected `prior` or `leak`"))?;
        let decl = match kw.text {
            "prior" => {
                let p = toks
                    .get(3)
                    .ok_or_else(|| syntax(line, raw.len() + 1, "missing prior value"))?;
                if let Some(extra) = toks.get(4) {
                    return Err(syntax(line, extra.col, format!("unexpected token `{}`", extra.text)));
                }
                Decl::Root(probability(p, line, name)?)
            }
            "leak" => {
                let l = toks
                    .get(3)
                    .ok_or_else(|| syntax(line, raw.len() + 1, "missing leak value"))?;
                let leak = probability(l, line, name)?;
                match toks.get(4) {
                    Some(t) if t.text == "parents" => {}
                    Some(t) => return Err(syntax(line, t.col, format!("expected `parents`, found `{}`", t.text))),
                    None => return Err(syntax(line, raw.len() + 1, "expected `parents`")),
                }
                if toks.len() < 6 {
                    return Err(syntax(line, raw.len() + 1, "a non-root node needs at least one parent"));
                }
                let mut links: Vec<(&str, f64)> = Vec::with_capacity(toks.len() - 5);
                for t in &toks[5..] {
                    let (parent, q) = t
                        .text
                        .rsplit_once(':')
                        .ok_or_else(|| syntax(line, t.col, format!("expected `<parent>:<q>`, found `{}`", t.text)))?;
                    if !valid_name(parent) {
                        return Err(syntax(line, t.col, format!("invalid parent name `{parent}`")));
                    }
                    let q_tok = Token {
                        text: q,
                        col: t.col + parent.chars().count() + 1,
                    };
                    let q = probability(&q_tok, line, name)?;
                    if links.iter().any(|(p, _)| *p == parent) {
                        return Err(Error::DuplicateParent {
                            node: name.to_string(),
                            parent: parent.to_string(),
                        }
                        .at_line(line));
                    }
                    links.push((parent, q));
                }
                Decl::NonRoot { leak, links }
            }
            other => {
                return Err(syntax(
                    line,
                    kw.col,
                    format!("expected `prior` or `leak`, found `{other}`"),
                ));
            }
        };
        if names.insert(name, decls.len()).is_some() {
            return Err(Error::DuplicateNode(name.to_string()).at_line(line));
        }
        decls.push((line, name, decl));
    }

    let mut nodes = Vec::with_capacity(decls.len());
    for (line, name, decl) in &decls {
        let kind = match decl {
            Decl::Root(prior) => NodeKind::Root { prior: *prior },
            Decl::NonRoot { leak, links } => {
                let links = links
                    .iter()
                    .map(|(p, q)| {
                        names
                            .get(p)
                            .map(|&parent| Link { parent, q: *q })
                            .ok_or_else(|| Error::UnknownParent(p.to_string()).at_line(*line))
                    })
                    .collect::<Result<Vec<_>>>()?;
                NodeKind::NonRoot { leak: *leak, links }
            }
        };
        nodes.push(NodeSpec {
            name: name.to_string(),
            kind,
        });
    }
    Network::new(nodes).map_err(|e| match &e {
        Error::Cycle(name) => {
            let line = names.get(name.as_str()).map(|&i| decls[i].0).unwrap_or(0);
            e.at_line(line)
        }
        _ => e,
    })
}

/// Canonical NET text: one node per line in id order, probabilities with
/// 17 significant digits.
pub fn print_network(net: &Network) -> String {
    let mut out = String::new();
    for node in net.nodes() {
        match &node.kind {
            NodeKind::Root { prior } => {
                let _ = writeln!(out, "node {} prior {}", node.name, format_probability(*prior));
            }
            NodeKind::NonRoot { leak, links } => {
                let _ = write!(out, "node {} leak {} parents", node.name, format_probability(*leak));
                for l in links {
                    let _ = write!(out, " {}:{}", net.name(l.parent), format_probability(l.q));
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn parse_evidence(net: &Network, text: &str) -> Result<Evidence> {
    let mut items = Vec::new();
    let mut first_content = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        if std::mem::replace(&mut first_content, false) && toks[0].text == "case" {
            continue;
        }
        if toks.len() != 2 {
            let col = toks.get(2).map(|t| t.col).unwrap_or(raw.len() + 1);
            return Err(syntax(line, col, "expected `<name> <present|absent>`"));
        }
        let id = net
            .id(toks[0].text)
            .ok_or_else(|| Error::UnknownNode(toks[0].text.to_string()).at_line(line))?;
        let state = match toks[1].text {
            "present" => State::Present,
            "absent" => State::Absent,
            other => {
                return Err(syntax(
                    line,
                    toks[1].col,
                    format!("expected `present` or `absent`, found `{other}`"),
                ))
            }
        };
        if items.iter().any(|(n, _)| *n == id) {
            return Err(Error::DuplicateEvidence(toks[0].text.to_string()).at_line(line));
        }
        items.push((id, state));
    }
    Evidence::new(net, items)
}

pub fn print_evidence(net: &Network, ev: &Evidence) -> String {
    let mut out = String::new();
    for &(id, s) in ev.items() {
        let _ = writeln!(out, "{} {}", net.name(id), s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chain_file() {
        let net = parse_network(
            "# a chain\nnode A prior 0.2\nnode B leak 0.1 parents A:0.8   # comment\n\nnode C leak 0.05 parents B:0.9\n",
        )
        .unwrap();
        assert_eq!(net.len(), 3);
        assert_eq!(net.levels(), &[0, 1, 2]);
        assert_eq!(net.node(1).links()[0].q, 0.8);
    }

    #[test]
    fn unknown_parent() {
        let err = parse_network("node A prior 0.1\nnode X leak 0 parents Y:0.5\n").unwrap_err();
        assert!(matches!(err.kind(), Error::UnknownParent(p) if p == "Y"));
        assert!(matches!(err, Error::AtLine { line: 2, .. }));
    }

    #[test]
    fn cycle() {
        let err = parse_network("node A leak 0 parents B:0.5\nnode B leak 0 parents A:0.5\n").unwrap_err();
        assert!(matches!(err.kind(), Error::Cycle(_)), "{err}");
        let self_loop = parse_network("node A leak 0 parents A:0.5\n").unwrap_err();
        assert!(matches!(self_loop.kind(), Error::Cycle(_)));
    }

    #[test]
    fn duplicate_and_range() {
        let err = parse_network("node A prior 0.1\nnode A prior 0.2\n").unwrap_err();
        assert!(matches!(err.kind(), Error::DuplicateNode(_)));
        let err = parse_network("node A prior 1.2\n").unwrap_err();
        assert!(matches!(err.kind(), Error::ProbabilityOutOfRange { .. }));
        let err = parse_network("node A prior 0.1\nnode B leak 0 parents A:-0.1\n").unwrap_err();
        assert!(matches!(err.kind(), Error::ProbabilityOutOfRange { .. }));
    }

    #[test]
    fn syntax_positions() {
        let err = parse_network("node A prior 0.1\nnode B leak 0.1 parent A:0.5\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, col: 17, .. }), "{err}");
        let err = parse_network("nod A prior 0.1\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, col: 1, .. }));
        let err = parse_network("node A prior zero\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, col: 14, .. }));
        let err = parse_network("node A prior 0.1\nnode B leak 0.1 parents A0.5\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, col: 25, .. }));
        let err = parse_network("node B leak 0.1 parents\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, .. }));
        let err = parse_network("node A prior NaN\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }));
    }

    #[test]
    fn forward_reference_allowed() {
        let net = parse_network("node B leak 0.1 parents A:0.5\nnode A prior 0.3\n").unwrap();
        assert_eq!(net.level(0), 1);
        assert_eq!(net.level(1), 0);
    }

    #[test]
    fn evidence_roundtrip_and_errors() {
        let net = crate::model::test_nets::chain3();
        let ev = parse_evidence(&net, "case c1 seed 7\nC present\nA absent\n").unwrap();
        assert_eq!(ev.items(), &[(2, State::Present), (0, State::Absent)]);
        assert_eq!(print_evidence(&net, &ev), "C present\nA absent\n");
        assert!(matches!(
            parse_evidence(&net, "Z present\n").unwrap_err().kind(),
            Error::UnknownNode(_)
        ));
        assert!(matches!(
            parse_evidence(&net, "C maybe\n").unwrap_err(),
            Error::Syntax { .. }
        ));
        assert!(matches!(
            parse_evidence(&net, "C present\nC absent\n").unwrap_err().kind(),
            Error::DuplicateEvidence(_)
        ));
    }

    #[test]
    fn canonical_print() {
        let net = crate::model::test_nets::chain3();
        let text = print_network(&net);
        assert_eq!(text.lines().next().unwrap(), "node A prior 2.0000000000000001e-1");
        assert_eq!(parse_network(&text).unwrap(), net);
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(seed in any::<u64>(), depth in 2usize..5) {
            let shape = crate::netgen::NetShape {
                nodes_per_level: vec![3; depth],
                max_parents: 3,
                seed,
                ..crate::netgen::NetShape::default()
            };
            let net = crate::netgen::gen_network(&shape).unwrap();
            let text = print_network(&net);
            let back = parse_network(&text).unwrap();
            prop_assert_eq!(&back, &net);
            prop_assert_eq!(print_network(&back), text);
        }
    }
}
