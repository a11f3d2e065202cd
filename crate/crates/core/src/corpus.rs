//! Corpus I/O and a seeded synthetic Java generator used for desk-scale
//! training and the test suite.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{parse_function, FunctionUnit};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub code: String,
    pub language: String,
}

/// Read a JSONL corpus; every non-blank line must carry id, code, language.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CorpusEntry = serde_json::from_str(&line)
            .map_err(|e| Error::SchemaError(format!("line {}: {e}", lineno + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

pub fn save_corpus(path: &Path, entries: &[CorpusEntry]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for e in entries {
        serde_json::to_writer(&mut file, e)?;
        writeln!(file)?;
    }
    Ok(())
}

/// Parse every entry; unparseable ones are skipped and reported, not fatal.
pub fn parse_corpus(entries: &[CorpusEntry]) -> (Vec<FunctionUnit>, Vec<(String, Error)>) {
    let mut units = Vec::new();
    let mut skipped = Vec::new();
    for e in entries {
        match parse_function(&e.code, &e.language) {
            Ok(mut f) => {
                if f.has_parse_errors() {
                    skipped.push((e.id.clone(), Error::UnparseableInput(e.id.clone())));
                } else {
                    f.id = e.id.clone();
                    units.push(f);
                }
            }
            Err(err) => skipped.push((e.id.clone(), err)),
        }
    }
    (units, skipped)
}

const STEMS: &[&str] = &[
    "count", "total", "index", "value", "result", "item", "buffer", "size", "limit", "offset",
    "sum", "flag", "name", "data", "key", "node", "temp", "max", "min", "row", "col", "list",
    "text", "line", "word", "num", "pos", "len", "acc", "cur", "next", "prev", "start", "end",
    "step", "rate", "score", "level", "depth", "width", "height", "weight", "price", "cost",
    "amount", "delta", "ratio", "batch", "token", "cache", "queue", "stack", "entry", "field",
    "label", "bound", "pivot", "probe", "span", "mask",
];

const VERBS: &[&str] = &[
    "compute", "build", "find", "make", "scan", "merge", "apply", "fetch", "read", "update",
    "check", "collect", "filter", "reduce", "track", "load", "store", "parse", "emit", "count",
];

#[derive(Clone, Copy, PartialEq)]
enum Ty {
    Int,
    Double,
    Bool,
    Str,
    IntArray,
}

impl Ty {
    fn java(self) -> &'static str {
        match self {
            Ty::Int => "int",
            Ty::Double => "double",
            Ty::Bool => "boolean",
            Ty::Str => "String",
            Ty::IntArray => "int[]",
        }
    }
}

struct Gen {
    rng: ChaCha20Rng,
    vars: Vec<(String, Ty)>,
    used: HashSet<String>,
}

impl Gen {
    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.random_range(0..xs.len())]
    }

    fn fresh_name(&mut self) -> String {
        loop {
            let stems = if self.rng.random::<f64>() < 0.55 { 1 } else { 2 };
            let mut name = (*self.pick(STEMS)).to_string();
            for _ in 1..stems {
                let s = *self.pick(STEMS);
                let mut chars = s.chars();
                let head = chars.next().unwrap().to_uppercase().to_string();
                name.push_str(&head);
                name.push_str(chars.as_str());
            }
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }

    fn vars_of(&self, ty: Ty) -> Vec<String> {
        self.vars.iter().filter(|(_, t)| *t == ty).map(|(n, _)| n.clone()).collect()
    }

    fn int_atom(&mut self) -> String {
        let ints = self.vars_of(Ty::Int);
        if !ints.is_empty() && self.rng.random::<f64>() < 0.7 {
            self.pick(&ints).clone()
        } else {
            self.rng.random_range(0..100).to_string()
        }
    }

    fn int_expr(&mut self) -> String {
        match self.rng.random_range(0..6) {
            0 => self.int_atom(),
            1 => format!("{} + {}", self.int_atom(), self.int_atom()),
            2 => format!("{} - {}", self.int_atom(), self.int_atom()),
            3 => format!("{} * {}", self.int_atom(), self.rng.random_range(1..9)),
            4 => format!("({} + {}) / 2", self.int_atom(), self.int_atom()),
            _ => {
                let arrays = self.vars_of(Ty::IntArray);
                if arrays.is_empty() {
                    self.int_atom()
                } else {
                    let a = self.pick(&arrays).clone();
                    if self.rng.random::<f64>() < 0.5 {
                        format!("{a}.length")
                    } else {
                        format!("{a}[{}]", self.rng.random_range(0..4))
                    }
                }
            }
        }
    }

    fn bool_expr(&mut self) -> String {
        let flags = self.vars_of(Ty::Bool);
        if !flags.is_empty() && self.rng.random::<f64>() < 0.3 {
            return self.pick(&flags).clone();
        }
        let op = *self.pick(&[">", "<", ">=", "<=", "==", "!="]);
        format!("{} {op} {}", self.int_atom(), self.int_atom())
    }

    fn declaration(&mut self, ty: Ty) -> String {
        let name = self.fresh_name();
        let init = match ty {
            Ty::Int => self.int_expr(),
            Ty::Double => format!("{}.5", self.rng.random_range(0..20)),
            Ty::Bool => self.bool_expr(),
            Ty::Str => format!("\"{}\"", self.pick(STEMS)),
            Ty::IntArray => format!("new int[{}]", self.rng.random_range(4..16)),
        };
        let line = format!("{} {} = {};", ty.java(), name, init);
        self.vars.push((name, ty));
        line
    }

    fn statement(&mut self, depth: usize, out: &mut Vec<String>, indent: usize) {
        let pad = "    ".repeat(indent);
        let ints = self.vars_of(Ty::Int);
        let choice = self.rng.random_range(0..100);
        match choice {
            0..=17 => {
                let ty = *self.pick(&[Ty::Int, Ty::Int, Ty::Int, Ty::Double, Ty::Bool, Ty::Str]);
                let line = self.declaration(ty);
                out.push(format!("{pad}{line}"));
            }
            18..=23 => {
                let line = self.declaration(Ty::IntArray);
                out.push(format!("{pad}{line}"));
            }
            24..=38 => {
                if let Some(x) = ints.first().map(|_| self.pick(&ints).clone()) {
                    let e = self.int_expr();
                    out.push(format!("{pad}{x} = {e};"));
                } else {
                    let line = self.declaration(Ty::Int);
                    out.push(format!("{pad}{line}"));
                }
            }
            39..=50 => {
                if !ints.is_empty() {
                    let x = self.pick(&ints).clone();
                    let op = *self.pick(&["+=", "-="]);
                    let e = self.int_atom();
                    out.push(format!("{pad}{x} {op} {e};"));
                } else {
                    let line = self.declaration(Ty::Int);
                    out.push(format!("{pad}{line}"));
                }
            }
            51..=58 => {
                if !ints.is_empty() {
                    let x = self.pick(&ints).clone();
                    let op = if self.rng.random::<f64>() < 0.7 { "++" } else { "--" };
                    out.push(format!("{pad}{x}{op};"));
                } else {
                    let line = self.declaration(Ty::Int);
                    out.push(format!("{pad}{line}"));
                }
            }
            59..=70 if depth > 0 => {
                let cond = self.bool_expr();
                out.push(format!("{pad}if ({cond}) {{"));
                self.statement(depth - 1, out, indent + 1);
                if self.rng.random::<f64>() < 0.5 {
                    out.push(format!("{pad}}} else {{"));
                    self.statement(depth - 1, out, indent + 1);
                }
                out.push(format!("{pad}}}"));
            }
            71..=80 if depth > 0 => {
                let i = self.fresh_name();
                let bound = self.int_atom();
                self.vars.push((i.clone(), Ty::Int));
                out.push(format!("{pad}for (int {i} = 0; {i} < {bound}; {i}++) {{"));
                self.statement(depth - 1, out, indent + 1);
                out.push(format!("{pad}}}"));
            }
            81..=86 if depth > 0 => {
                let arrays = self.vars_of(Ty::IntArray);
                if arrays.is_empty() || ints.is_empty() {
                    let line = self.declaration(Ty::Int);
                    out.push(format!("{pad}{line}"));
                } else {
                    let a = self.pick(&arrays).clone();
                    let v = self.fresh_name();
                    let acc = self.pick(&ints).clone();
                    self.vars.push((v.clone(), Ty::Int));
                    out.push(format!("{pad}for (int {v} : {a}) {{"));
                    out.push(format!("{pad}    {acc} += {v};"));
                    out.push(format!("{pad}}}"));
                }
            }
            87..=91 if depth > 0 => {
                if ints.is_empty() {
                    let line = self.declaration(Ty::Int);
                    out.push(format!("{pad}{line}"));
                } else {
                    let x = self.pick(&ints).clone();
                    let k = self.rng.random_range(1..5);
                    out.push(format!("{pad}while ({x} > {k}) {{"));
                    out.push(format!("{pad}    {x} -= {k};"));
                    out.push(format!("{pad}}}"));
                }
            }
            92..=94 if depth > 0 => {
                if ints.is_empty() {
                    let line = self.declaration(Ty::Int);
                    out.push(format!("{pad}{line}"));
                } else {
                    let x = self.pick(&ints).clone();
                    out.push(format!("{pad}switch ({x} % 3) {{"));
                    out.push(format!("{pad}    case 0:"));
                    out.push(format!("{pad}        {x} += 2;"));
                    out.push(format!("{pad}        break;"));
                    out.push(format!("{pad}    case 1:"));
                    out.push(format!("{pad}        {x} -= 1;"));
                    out.push(format!("{pad}        break;"));
                    out.push(format!("{pad}    default:"));
                    out.push(format!("{pad}        {x} = 0;"));
                    out.push(format!("{pad}}}"));
                }
            }
            95..=96 => {
                if ints.is_empty() {
                    let line = self.declaration(Ty::Int);
                    out.push(format!("{pad}{line}"));
                } else {
                    let x = self.pick(&ints).clone();
                    let cond = self.bool_expr();
                    let a = self.int_atom();
                    let b = self.int_atom();
                    out.push(format!("{pad}{x} = {cond} ? {a} : {b};"));
                }
            }
            97..=98 => {
                let arrays = self.vars_of(Ty::IntArray);
                if arrays.is_empty() || ints.is_empty() {
                    let line = self.declaration(Ty::Int);
                    out.push(format!("{pad}{line}"));
                } else {
                    let a = self.pick(&arrays).clone();
                    let idx = self.rng.random_range(0..4);
                    let e = self.int_expr();
                    out.push(format!("{pad}{a}[{idx}] = {e};"));
                }
            }
            _ => {
                let strs = self.vars_of(Ty::Str);
                if strs.is_empty() {
                    let line = self.declaration(Ty::Str);
                    out.push(format!("{pad}{line}"));
                } else {
                    let s = self.pick(&strs).clone();
                    out.push(format!("{pad}System.out.println({s});"));
                }
            }
        }
    }
}

/// Generate one parseable Java function. Deterministic for a given rng
/// state.
fn generate_function(rng: ChaCha20Rng, ordinal: usize) -> String {
    let mut g = Gen { rng, vars: Vec::new(), used: HashSet::new() };

    let verb = (*g.pick(VERBS)).to_string();
    let noun = (*g.pick(STEMS)).to_string();
    let mut fname = verb;
    let mut chars = noun.chars();
    fname.push_str(&chars.next().unwrap().to_uppercase().to_string());
    fname.push_str(chars.as_str());
    g.used.insert(fname.clone());

    let n_params = g.rng.random_range(0..3);
    let mut params = Vec::new();
    for _ in 0..n_params {
        let ty = *g.pick(&[Ty::Int, Ty::Int, Ty::IntArray, Ty::Str]);
        let name = g.fresh_name();
        params.push(format!("{} {}", ty.java(), name));
        g.vars.push((name, ty));
    }

    let mut body: Vec<String> = Vec::new();
    let line = g.declaration(Ty::Int);
    body.push(format!("    {line}"));
    let n_stmts = g.rng.random_range(3..9);
    for _ in 0..n_stmts {
        g.statement(2, &mut body, 1);
    }

    let ret_ty = *g.pick(&[Ty::Int, Ty::Int, Ty::Int, Ty::Bool, Ty::Str]);
    let ret = match ret_ty {
        Ty::Int => {
            let e = g.int_expr();
            format!("    return {e};")
        }
        Ty::Bool => {
            let e = g.bool_expr();
            format!("    return {e};")
        }
        _ => {
            let strs = g.vars_of(Ty::Str);
            if strs.is_empty() {
                "    return \"done\";".to_string()
            } else {
                let s = g.pick(&strs).clone();
                format!("    return {s};")
            }
        }
    };
    body.push(ret);

    let ret_java = match ret_ty {
        Ty::Bool => "boolean",
        Ty::Str => "String",
        _ => "int",
    };
    format!(
        "{} {}{}({}) {{\n{}\n}}\n",
        ret_java,
        fname,
        ordinal,
        params.join(", "),
        body.join("\n")
    )
}

/// Seeded synthetic corpus; every entry parses cleanly.
pub fn generate_corpus(n: usize, seed: u64) -> Vec<CorpusEntry> {
    let mut master = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut ordinal = 0usize;
    while out.len() < n {
        let child = ChaCha20Rng::seed_from_u64(master.random::<u64>());
        let code = generate_function(child, ordinal);
        ordinal += 1;
        // regenerating on a parse failure keeps the stream deterministic
        match parse_function(&code, "java") {
            Ok(f) if !f.has_parse_errors() => out.push(CorpusEntry {
                id: format!("syn{:05}", out.len()),
                code,
                language: "java".into(),
            }),
            _ => continue,
        }
    }
    out
}
