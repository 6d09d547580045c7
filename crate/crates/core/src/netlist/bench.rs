// SPDX-License-Identifier: Apache-2.0

//! ISCAS-style BENCH reader and writer.
//!
//! ```text
//! # comment
//! INPUT(a)
//! OUTPUT(y)
//! y = NAND(a, b)
//! z = LUT 0x6 (a, b)
//! ```
//!
//! Gate names are case-insensitive, signal names are not. Inputs whose name
//! is the key prefix followed by a decimal number are key inputs, ordered by
//! that number. `MUX` and `LUT` are read natively but written as AND/OR/NOT
//! logic, so files stay readable by tools that only know the ISCAS primitives.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{GateKind, NetlistEditor, NetlistError, Netlist, MAX_LUT_INPUTS};

pub const DEFAULT_KEY_PREFIX: &str = "keyinput";

#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub key_prefix: String,
    pub name: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { key_prefix: DEFAULT_KEY_PREFIX.to_string(), name: "netlist".to_string() }
    }
}

pub fn parse_bench(text: &str) -> Result<Netlist, NetlistError> {
    parse_bench_with(text, &ParseOptions::default())
}

struct GateLine {
    name: String,
    kind: GateKind,
    args: Vec<String>,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> NetlistError {
    NetlistError::Syntax { line, col, msg: msg.into() }
}

fn valid_signal(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '=' | '#'))
}

/// Splits `( a, b, c )` starting at byte `open` of `line`.
fn parse_args(raw: &str, open: usize, lineno: usize) -> Result<Vec<String>, NetlistError> {
    let rest = &raw[open..];
    if !rest.starts_with('(') {
        return Err(syntax(lineno, open + 1, "expected `(`"));
    }
    let close = rest.rfind(')').ok_or_else(|| syntax(lineno, raw.len() + 1, "missing `)`"))?;
    if !rest[close + 1..].trim().is_empty() {
        return Err(syntax(lineno, open + close + 2, "unexpected text after `)`"));
    }
    let inner = &rest[1..close];
    let mut args = Vec::new();
    let mut offset = open + 2;
    for piece in inner.split(',') {
        let name = piece.trim();
        if !valid_signal(name) {
            let col = offset + piece.len() - piece.trim_start().len();
            return Err(syntax(lineno, col, format!("bad signal name `{name}`")));
        }
        args.push(name.to_string());
        offset += piece.len() + 1;
    }
    Ok(args)
}

pub fn parse_bench_with(text: &str, opts: &ParseOptions) -> Result<Netlist, NetlistError> {
    let mut inputs: Vec<(String, usize)> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut gates: Vec<GateLine> = Vec::new();

    for (i, full) in text.lines().enumerate() {
        let lineno = i + 1;
        let raw = match full.find('#') {
            Some(c) => &full[..c],
            None => full,
        };
        let body = raw.trim();
        if body.is_empty() {
            continue;
        }
        let lead = raw.len() - raw.trim_start().len();
        if let Some(eq) = raw.find('=') {
            let name = raw[..eq].trim();
            if !valid_signal(name) {
                return Err(syntax(lineno, lead + 1, format!("bad signal name `{name}`")));
            }
            let after = &raw[eq + 1..];
            let gate_col = eq + 1 + (after.len() - after.trim_start().len());
            let gate_text = &raw[gate_col..];
            let word_len = gate_text.find(|c: char| !c.is_ascii_alphanumeric()).unwrap_or(gate_text.len());
            let word = gate_text[..word_len].to_ascii_uppercase();
            let (kind, args) = if word == "LUT" {
                let spec = gate_text[word_len..].trim_start();
                let spec_col = gate_col + (gate_text.len() - spec.len());
                let hex_len = spec.find(|c: char| c.is_whitespace() || c == '(').unwrap_or(spec.len());
                let hex = &spec[..hex_len];
                let digits = hex.strip_prefix("0x").or_else(|| hex.strip_prefix("0X")).unwrap_or(hex);
                let table = u64::from_str_radix(digits, 16)
                    .map_err(|_| syntax(lineno, spec_col + 1, format!("bad LUT table `{hex}`")))?;
                let after_hex = &spec[hex_len..];
                let open = spec_col + hex_len + (after_hex.len() - after_hex.trim_start().len());
                let args = parse_args(raw, open, lineno)?;
                let k = args.len();
                if k == 0 || k > MAX_LUT_INPUTS as usize {
                    return Err(syntax(lineno, gate_col + 1, format!("LUT with {k} inputs is not supported")));
                }
                let lines = 1u32 << k;
                if lines < 64 && table >> lines != 0 {
                    return Err(syntax(lineno, spec_col + 1, format!("LUT table `{hex}` wider than {lines} lines")));
                }
                (GateKind::Lut { k: k as u8, table }, args)
            } else {
                let kind = match word.as_str() {
                    "AND" => GateKind::And,
                    "NAND" => GateKind::Nand,
                    "OR" => GateKind::Or,
                    "NOR" => GateKind::Nor,
                    "XOR" => GateKind::Xor,
                    "XNOR" => GateKind::Xnor,
                    "NOT" | "INV" => GateKind::Not,
                    "BUF" | "BUFF" => GateKind::Buf,
                    "MUX" => GateKind::Mux2,
                    "DFF" => return Err(syntax(lineno, gate_col + 1, "sequential elements are not supported")),
                    "" => return Err(syntax(lineno, gate_col + 1, "missing gate type")),
                    other => return Err(syntax(lineno, gate_col + 1, format!("unknown gate type `{other}`"))),
                };
                let rest = &gate_text[word_len..];
                let open = gate_col + word_len + (rest.len() - rest.trim_start().len());
                (kind, parse_args(raw, open, lineno)?)
            };
            if !kind.accepts_arity(args.len()) {
                return Err(syntax(
                    lineno,
                    gate_col + 1,
                    format!("{} cannot take {} inputs", kind.name(), args.len()),
                ));
            }
            gates.push(GateLine { name: name.to_string(), kind, args });
        } else {
            let word_len = body.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(body.len());
            let word = body[..word_len].to_ascii_uppercase();
            let open = lead + word_len + (body[word_len..].len() - body[word_len..].trim_start().len());
            match word.as_str() {
                "INPUT" | "OUTPUT" => {
                    let args = parse_args(raw, open, lineno)?;
                    if args.len() != 1 {
                        return Err(syntax(lineno, open + 1, format!("{word} takes exactly one signal")));
                    }
                    let name = args.into_iter().next().unwrap();
                    if word == "INPUT" {
                        inputs.push((name, lineno));
                    } else {
                        outputs.push(name);
                    }
                }
                _ => return Err(syntax(lineno, lead + 1, format!("expected INPUT, OUTPUT or assignment, found `{body}`"))),
            }
        }
    }

    let mut editor = NetlistEditor::new(opts.name.clone());
    let mut keyed: Vec<(u64, String)> = Vec::new();
    for (name, _) in &inputs {
        let suffix = name.strip_prefix(opts.key_prefix.as_str()).filter(|_| !opts.key_prefix.is_empty());
        match suffix.and_then(|s| s.parse::<u64>().ok()) {
            Some(idx) => keyed.push((idx, name.clone())),
            None => {
                editor.add_input(name.clone())?;
            }
        }
    }
    keyed.sort();
    for pair in keyed.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(NetlistError::Duplicate(pair[1].1.clone()));
        }
    }
    for (_, name) in keyed {
        editor.add_key_input(name)?;
    }
    for g in &gates {
        editor.push(g.name.clone(), g.kind, Vec::new())?;
    }
    let resolve = |editor: &NetlistEditor, s: &str| editor.find(s).ok_or_else(|| NetlistError::Undefined(s.to_string()));
    for g in &gates {
        let fanin = g.args.iter().map(|a| resolve(&editor, a)).collect::<Result<Vec<_>, _>>()?;
        let at = editor.find(&g.name).unwrap();
        editor.set_fanin(at, fanin);
    }
    for o in &outputs {
        let at = resolve(&editor, o)?;
        editor.add_output(at);
    }
    editor.build()
}

/// Writes BENCH text. Inputs come first (primary, then key), then outputs,
/// then gates in topological order.
pub fn serialize_bench(nl: &Netlist) -> String {
    let mut names = Namer { used: nl.nodes().iter().map(|n| n.id.clone()).collect() };
    let mut out = String::new();
    let _ = writeln!(out, "# {}", nl.name());
    for &i in nl.primary_inputs().iter().chain(nl.key_inputs()) {
        let _ = writeln!(out, "INPUT({})", nl.node(i).id);
    }
    for &o in nl.outputs() {
        let _ = writeln!(out, "OUTPUT({})", nl.node(o).id);
    }
    out.push('\n');
    for node in nl.nodes() {
        let args: Vec<&str> = node.fanin.iter().map(|&f| nl.node(f).id.as_str()).collect();
        let y = node.id.as_str();
        match node.kind {
            GateKind::Input => {}
            GateKind::Mux2 => {
                let ns = names.fresh(format!("{y}__ns"));
                let lo = names.fresh(format!("{y}__lo"));
                let hi = names.fresh(format!("{y}__hi"));
                let _ = writeln!(out, "{ns} = NOT({})", args[0]);
                let _ = writeln!(out, "{lo} = AND({ns}, {})", args[1]);
                let _ = writeln!(out, "{hi} = AND({}, {})", args[0], args[2]);
                let _ = writeln!(out, "{y} = OR({lo}, {hi})");
            }
            GateKind::Lut { k, table } => write_lut(&mut out, &mut names, y, &args, k as usize, table),
            kind => {
                let _ = writeln!(out, "{y} = {}({})", kind.name(), args.join(", "));
            }
        }
    }
    out
}

struct Namer {
    used: HashSet<String>,
}

impl Namer {
    fn fresh(&mut self, base: String) -> String {
        let mut candidate = base.clone();
        let mut i = 1;
        while self.used.contains(&candidate) {
            candidate = format!("{base}_{i}");
            i += 1;
        }
        self.used.insert(candidate.clone());
        candidate
    }
}

/// Sum-of-minterms expansion of a LUT.
fn write_lut(out: &mut String, names: &mut Namer, y: &str, args: &[&str], k: usize, table: u64) {
    let mut negated: Vec<Option<String>> = vec![None; k];
    let mut literal = |j: usize, positive: bool, out: &mut String, names: &mut Namer| -> String {
        if positive {
            return args[j].to_string();
        }
        if negated[j].is_none() {
            let n = names.fresh(format!("{y}__n{j}"));
            let _ = writeln!(out, "{n} = NOT({})", args[j]);
            negated[j] = Some(n);
        }
        negated[j].clone().unwrap()
    };
    let lines: Vec<usize> = (0..1usize << k).filter(|&t| table >> t & 1 == 1).collect();
    if lines.is_empty() || lines.len() == 1 << k {
        // Constant: x & !x or x | !x.
        let n = literal(0, false, out, names);
        let op = if lines.is_empty() { "AND" } else { "OR" };
        let _ = writeln!(out, "{y} = {op}({}, {n})", args[0]);
        return;
    }
    let mut terms = Vec::new();
    for &t in &lines {
        let lits: Vec<String> = (0..k).map(|j| literal(j, t >> (k - 1 - j) & 1 == 1, out, names)).collect();
        if lits.len() == 1 {
            terms.push(lits.into_iter().next().unwrap());
        } else if lines.len() == 1 {
            let _ = writeln!(out, "{y} = AND({})", lits.join(", "));
            return;
        } else {
            let m = names.fresh(format!("{y}__t{t}"));
            let _ = writeln!(out, "{m} = AND({})", lits.join(", "));
            terms.push(m);
        }
    }
    if terms.len() == 1 {
        let _ = writeln!(out, "{y} = BUFF({})", terms[0]);
    } else {
        let _ = writeln!(out, "{y} = OR({})", terms.join(", "));
    }
}
