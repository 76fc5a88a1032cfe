//! The `.sqc` netlist language.
//!
//! ```text
//! circuit ::= "circuit" IDENT "{" stmt* "}"
//! stmt    ::= decl | conn | extern
//! decl    ::= KIND IDENT ("(" param ("," param)* ")")? ";"
//! param   ::= IDENT "=" NUMBER
//! conn    ::= IDENT "." IDENT "--" IDENT "." IDENT ";"
//! extern  ::= ("input" | "output") IDENT "." IDENT ";"
//! ```
//!
//! `//` starts a comment. Numbers are decimals or multiples of `pi` such as
//! `pi`, `-pi/2` and `3pi/4`. The parser never panics: every input yields a
//! graph or at least one positioned diagnostic.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::circuit::{CircuitError, CompiledCircuit, PortGraph, PortRef};
use crate::components::ScatteringElement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// A message tied to a 1-based line and column of the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl Diagnostic {
    fn error(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { line: pos.line, column: pos.column, message: message.into(), severity: Severity::Error }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Eq,
    Minus,
    Slash,
    Wire,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::Semi => f.write_str("';'"),
            Tok::Dot => f.write_str("'.'"),
            Tok::Eq => f.write_str("'='"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::Wire => f.write_str("'--'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let ch = chars[i];
        let pos = Pos { line, column: col };
        let adv = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match ch {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => adv(1, &mut i, &mut col),
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    adv(1, &mut i, &mut col);
                }
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                out.push((Tok::Wire, pos));
                adv(2, &mut i, &mut col);
            }
            '{' | '}' | '(' | ')' | ',' | ';' | '.' | '=' | '-' | '/' => {
                let t = match ch {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '.' => Tok::Dot,
                    '=' => Tok::Eq,
                    '-' => Tok::Minus,
                    _ => Tok::Slash,
                };
                // A '.' directly followed by a digit starts a number.
                if ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()) {
                    let (v, n) = lex_number(&chars[i..]).map_err(|m| Diagnostic::error(pos, m))?;
                    out.push((Tok::Num(v), pos));
                    adv(n, &mut i, &mut col);
                } else {
                    out.push((t, pos));
                    adv(1, &mut i, &mut col);
                }
            }
            c if c.is_ascii_digit() => {
                let (v, n) = lex_number(&chars[i..]).map_err(|m| Diagnostic::error(pos, m))?;
                out.push((Tok::Num(v), pos));
                adv(n, &mut i, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    adv(1, &mut i, &mut col);
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            }
            other => return Err(Diagnostic::error(pos, format!("unexpected character {other:?}"))),
        }
    }
    out.push((Tok::Eof, Pos { line, column: col }));
    Ok(out)
}

/// Decimal with optional fraction and exponent; returns value and length.
fn lex_number(chars: &[char]) -> Result<(f64, usize), String> {
    let mut n = 0;
    while n < chars.len() && chars[n].is_ascii_digit() {
        n += 1;
    }
    if n < chars.len() && chars[n] == '.' {
        n += 1;
        while n < chars.len() && chars[n].is_ascii_digit() {
            n += 1;
        }
    }
    if n < chars.len() && (chars[n] == 'e' || chars[n] == 'E') {
        let mut m = n + 1;
        if m < chars.len() && (chars[m] == '+' || chars[m] == '-') {
            m += 1;
        }
        let digits = m;
        while m < chars.len() && chars[m].is_ascii_digit() {
            m += 1;
        }
        if m > digits {
            n = m;
        }
    }
    let text: String = chars[..n].iter().collect();
    let v: f64 = text.parse().map_err(|_| format!("malformed number '{text}'"))?;
    if v.is_finite() {
        Ok((v, n))
    } else {
        Err(format!("number '{text}' is out of range"))
    }
}

/// Source positions of parsed items, for diagnostics found after parsing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceMap {
    elements: HashMap<String, (usize, usize)>,
    circuit: (usize, usize),
}

impl SourceMap {
    /// Line and column of an element's declaration.
    pub fn element(&self, id: &str) -> Option<(usize, usize)> {
        self.elements.get(id).copied()
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(Diagnostic::error(self.pos(), format!("expected {want}, found {}", self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(Diagnostic::error(self.pos(), format!("expected {what}, found {other}"))),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let pos = self.pos();
        let sign = if *self.peek() == Tok::Minus {
            self.bump();
            -1.0
        } else {
            1.0
        };
        let mut coef = None;
        if let Tok::Num(v) = *self.peek() {
            self.bump();
            coef = Some(v);
        }
        let has_pi = matches!(self.peek(), Tok::Ident(s) if s == "pi");
        if has_pi {
            self.bump();
        }
        if coef.is_none() && !has_pi {
            return Err(Diagnostic::error(pos, format!("expected a number, found {}", self.peek())));
        }
        let mut v = coef.unwrap_or(1.0);
        if has_pi {
            v *= PI;
        }
        if *self.peek() == Tok::Slash {
            self.bump();
            let dpos = self.pos();
            match *self.peek() {
                Tok::Num(d) if d != 0.0 => {
                    self.bump();
                    v /= d;
                }
                _ => return Err(Diagnostic::error(dpos, "expected a nonzero divisor")),
            }
        }
        Ok(sign * v)
    }

    fn port(&mut self) -> PResult<(PortRef, Pos)> {
        let pos = self.pos();
        let inst = self.ident("an element id")?;
        self.expect(Tok::Dot)?;
        let port = self.ident("a port name")?;
        Ok((PortRef::new(inst, port), pos))
    }

    /// Skips to just past the next ';' (or up to a '}' / end of input).
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Semi => {
                    self.bump();
                    return;
                }
                Tok::RBrace | Tok::Eof => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn statement(&mut self, g: &mut PortGraph, map: &mut SourceMap) -> PResult<()> {
        let pos = self.pos();
        let word = self.ident("a statement")?;
        match (word.as_str(), self.peek()) {
            ("input" | "output", Tok::Ident(_)) => {
                let (p, ppos) = self.port()?;
                self.expect(Tok::Semi)?;
                let r = if word == "input" { g.add_input(p) } else { g.add_output(p) };
                r.map(|_| ()).map_err(|e| Diagnostic::error(ppos, e.to_string()))
            }
            (_, Tok::Dot) => {
                self.bump();
                let port = self.ident("a port name")?;
                self.expect(Tok::Wire)?;
                let (b, _) = self.port()?;
                self.expect(Tok::Semi)?;
                g.connect(PortRef::new(word, port), b).map(|_| ()).map_err(|e| Diagnostic::error(pos, e.to_string()))
            }
            (kind, Tok::Ident(_)) => {
                let kind = kind.to_string();
                let id_pos = self.pos();
                let id = self.ident("an element id")?;
                let mut params: Vec<(String, f64)> = Vec::new();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    loop {
                        let name = self.ident("a parameter name")?;
                        self.expect(Tok::Eq)?;
                        let v = self.number()?;
                        params.push((name, v));
                        match self.bump() {
                            Tok::Comma => continue,
                            Tok::RParen => break,
                            other => {
                                return Err(Diagnostic::error(self.toks[self.at - 1].1, format!("expected ',' or ')', found {other}")))
                            }
                        }
                    }
                }
                self.expect(Tok::Semi)?;
                let el = ScatteringElement::from_keyword(&kind, &params).map_err(|e| Diagnostic::error(pos, e.to_string()))?;
                g.add_element(id.clone(), el).map_err(|e| Diagnostic::error(id_pos, e.to_string()))?;
                map.elements.insert(id, (pos.line, pos.column));
                Ok(())
            }
            (_, other) => Err(Diagnostic::error(self.pos(), format!("expected an element id or '.', found {other}"))),
        }
    }

    fn circuit(&mut self) -> PResult<(PortGraph, SourceMap)> {
        let pos = self.pos();
        match self.peek() {
            Tok::Ident(s) if s == "circuit" => {
                self.bump();
            }
            other => return Err(Diagnostic::error(pos, format!("expected 'circuit', found {other}"))),
        }
        let name = self.ident("a circuit name")?;
        self.expect(Tok::LBrace)?;
        let mut g = PortGraph::new(name);
        let mut map = SourceMap { circuit: (pos.line, pos.column), ..Default::default() };
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Eof => return Err(Diagnostic::error(self.pos(), "expected '}' before end of input")),
                _ => {
                    let start = self.at;
                    if let Err(d) = self.statement(&mut g, &mut map) {
                        self.diags.push(d);
                        // Semantic errors are found after the ';' is consumed.
                        let finished = self.at > start && self.toks[self.at - 1].0 == Tok::Semi;
                        if !finished {
                            self.recover();
                        }
                    }
                }
            }
        }
        if *self.peek() != Tok::Eof {
            return Err(Diagnostic::error(self.pos(), format!("unexpected {} after the circuit", self.peek())));
        }
        Ok((g, map))
    }
}

/// Parses a netlist, keeping declaration positions.
pub fn parse_with_map(src: &str) -> Result<(PortGraph, SourceMap), Vec<Diagnostic>> {
    let toks = lex(src).map_err(|d| vec![d])?;
    let mut p = Parser { toks, at: 0, diags: Vec::new() };
    let r = p.circuit();
    let mut diags = std::mem::take(&mut p.diags);
    match r {
        Ok(ok) if diags.is_empty() => Ok(ok),
        Ok(_) => Err(diags),
        Err(d) => {
            diags.push(d);
            Err(diags)
        }
    }
}

pub fn parse(src: &str) -> Result<PortGraph, Vec<Diagnostic>> {
    parse_with_map(src).map(|(g, _)| g)
}

/// Parses a single number in netlist syntax, such as `pi/2` or `-0.3`.
pub fn parse_number(text: &str) -> Result<f64, Diagnostic> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, diags: Vec::new() };
    let v = p.number()?;
    if *p.peek() != Tok::Eof {
        return Err(Diagnostic::error(p.pos(), format!("unexpected {} after number", p.peek())));
    }
    Ok(v)
}

/// Parses raw bytes, reporting invalid UTF-8 as a diagnostic.
pub fn parse_bytes(bytes: &[u8]) -> Result<PortGraph, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse(s),
        Err(e) => {
            let before = &bytes[..e.valid_up_to()];
            let line = 1 + before.iter().filter(|&&b| b == b'\n').count();
            let tail = before.rsplit(|&b| b == b'\n').next().unwrap_or(before);
            let column = 1 + String::from_utf8_lossy(tail).chars().count();
            Err(vec![Diagnostic {
                line,
                column,
                message: "input is not valid UTF-8".into(),
                severity: Severity::Error,
            }])
        }
    }
}

/// Parses and compiles, reporting compile failures at the offending
/// element's declaration.
pub fn compile_source(src: &str) -> Result<CompiledCircuit, Vec<Diagnostic>> {
    let (g, map) = parse_with_map(src)?;
    compile_with_map(&g, &map)
}

/// Compiles a parsed graph, positioning errors with its source map.
pub fn compile_with_map(g: &PortGraph, map: &SourceMap) -> Result<CompiledCircuit, Vec<Diagnostic>> {
    g.compile().map_err(|e| {
        let at = match &e {
            CircuitError::DanglingPort(p) => map.element(&p.instance),
            _ => None,
        }
        .unwrap_or(map.circuit);
        let message = match &e {
            CircuitError::DanglingPort(p) => format!("unwired port {p}"),
            other => other.to_string(),
        };
        vec![Diagnostic { line: at.0, column: at.1, message, severity: Severity::Error }]
    })
}

/// Formats a number so that [`parse`] reads back exactly the same value,
/// using `pi` notation for simple multiples.
pub fn format_number(v: f64) -> String {
    for den in [1u32, 2, 3, 4, 6, 8] {
        for num in -16i32..=16 {
            if num == 0 {
                continue;
            }
            if (num.unsigned_abs() as f64) * PI / (den as f64) == v.abs() && (num > 0) == (v > 0.0) {
                let sign = if num < 0 { "-" } else { "" };
                let k = num.unsigned_abs();
                let coef = if k == 1 { String::new() } else { k.to_string() };
                return if den == 1 { format!("{sign}{coef}pi") } else { format!("{sign}{coef}pi/{den}") };
            }
        }
    }
    let s = format!("{v:?}");
    // Debug output like "1e-5" or "0.5" is valid syntax as is.
    s
}

/// Prints a graph in `.sqc` syntax. When the graph has logical ports they
/// are declared before any auxiliary externals so that port inference on
/// the printed text recovers them.
pub fn pretty_print(g: &PortGraph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "circuit {} {{", g.name);
    for (id, el) in g.elements() {
        let params: Vec<String> = el.params.iter().map(|(k, v)| format!("{k}={}", format_number(*v))).collect();
        if params.is_empty() {
            let _ = writeln!(s, "    {} {id};", el.kind.keyword());
        } else {
            let _ = writeln!(s, "    {} {id}({});", el.kind.keyword(), params.join(", "));
        }
    }
    for (a, b) in g.wires() {
        let _ = writeln!(s, "    {a} -- {b};");
    }
    let (mut ins, mut outs): (Vec<PortRef>, Vec<PortRef>) = (Vec::new(), Vec::new());
    if let Some(l) = g.logical() {
        ins.extend(l.left_in.iter().chain(&l.right_in).cloned());
        outs.extend(l.right_out.iter().chain(&l.left_out).cloned());
    }
    for p in g.inputs() {
        if !ins.contains(p) {
            ins.push(p.clone());
        }
    }
    for p in g.outputs() {
        if !outs.contains(p) {
            outs.push(p.clone());
        }
    }
    for p in &ins {
        let _ = writeln!(s, "    input {p};");
    }
    for p in &outs {
        let _ = writeln!(s, "    output {p};");
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_netlist() {
        let g = parse(
            "circuit c { grover4 g; input g.a; input g.b; output g.c; output g.d; output g.a; output g.b; }",
        )
        .unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.inputs().len(), 2);
    }

    #[test]
    fn pi_literals() {
        let g = parse("circuit c { phase p(phi=pi); }").unwrap();
        assert_eq!(g.element("p").unwrap().params["phi"], PI);
        let g = parse("circuit c { phase p(phi=3pi/4); phase q(phi=-pi/2); phase r(phi=0.25); }").unwrap();
        assert_eq!(g.element("p").unwrap().params["phi"], 3.0 * PI / 4.0);
        assert_eq!(g.element("q").unwrap().params["phi"], -PI / 2.0);
        assert_eq!(g.element("r").unwrap().params["phi"], 0.25);
    }

    #[test]
    fn unknown_kind_is_reported_with_position() {
        let d = parse("circuit c { bogus x; }").unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].line, 1);
        assert_eq!(d[0].column, 13);
        assert!(d[0].message.contains("unknown kind 'bogus'"), "{}", d[0].message);
    }

    #[test]
    fn errors_on_later_lines_and_recovery() {
        let src = "circuit c {\n  grover4 g;\n  grover4 g;\n  g.z -- g.a;\n  bs b(dot=2);\n}";
        let d = parse(src).unwrap_err();
        assert_eq!(d.len(), 3, "{d:?}");
        assert_eq!((d[0].line, d[0].column), (3, 11));
        assert!(d[0].message.contains("duplicate"));
        assert_eq!(d[1].line, 4);
        assert!(d[1].message.contains("no port"), "{}", d[1].message);
        assert_eq!(d[2].line, 5);
    }

    #[test]
    fn lexical_errors() {
        let d = parse("circuit c { grover4 g$; }").unwrap_err();
        assert_eq!((d[0].line, d[0].column), (1, 22));
        assert!(parse("").is_err());
        assert!(parse("circuit c {").is_err());
        assert!(parse("circuit c {} extra").is_err());
        assert!(parse_bytes(&[b'c', 0xff, 0xfe]).is_err());
    }

    #[test]
    fn unwired_port_at_compile() {
        let src = "circuit c {\n  grover4 g;\n  input g.a;\n  output g.a;\n}";
        let d = compile_source(src).unwrap_err();
        assert_eq!((d[0].line, d[0].column), (2, 3));
        assert!(d[0].message.contains("unwired port g.b"));
    }

    #[test]
    fn standalone_numbers() {
        assert_eq!(parse_number("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_number(" -0.5 ").unwrap(), -0.5);
        assert!(parse_number("pi pi").is_err());
        assert!(parse_number("").is_err());
        assert!(parse_number("1/0").is_err());
    }

    #[test]
    fn numbers_round_trip_through_the_printer() {
        for v in [PI, -PI / 2.0, 3.0 * PI / 4.0, 0.1, 1e-7, -2.5, 0.0, 1.0] {
            let src = format!("circuit c {{ phase p(phi={}); }}", format_number(v));
            let g = parse(&src).unwrap();
            assert_eq!(g.element("p").unwrap().params["phi"], v, "{src}");
        }
    }

    #[test]
    fn printed_gate_netlists_compile_to_the_same_matrix() {
        for g in [crate::gates::toffoli_graph(), crate::gates::swap_sd_graph(), crate::gates::not_d_graph()] {
            let text = pretty_print(&g);
            let back = compile_source(&text).unwrap();
            let orig = g.compile().unwrap();
            let a = crate::gates::extract_logical_unitary(&orig).unwrap();
            let b = crate::gates::extract_logical_unitary(&back).unwrap();
            assert!(crate::linalg::max_abs_diff(&a, &b) < 1e-14, "{}", g.name);
        }
    }
}
