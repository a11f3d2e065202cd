//! Soft-label teacher. Position 0 of a variable's label comes from an
//! add-one-smoothed statement-context model averaged over the statements
//! that mention the variable; later positions come from a subtoken bigram
//! conditioned on the original name. An exported-label loader accepts
//! distributions produced by an external scorer in the same shape.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lang::ast::{NodeId, TokenKind};
use crate::lang::grammar::{default_grammars, LanguageSpec};
use crate::lang::{list_variables, FunctionUnit, VariableBinding};
use crate::vocab::{Vocabulary, CHAR_LIT, END, NUM_LIT, STR_LIT, UNK};

pub const TEACHER_TOP_K: usize = 20;
/// Tokens of context the statement model sees on each side of the hole.
const CONTEXT_WINDOW: usize = 2;
/// Occurrences past this many significant tokens are invisible to the
/// teacher.
pub const TEACHER_TOKEN_LIMIT: usize = 510;

/// Per-position sparse distributions over the vocabulary. Every position
/// sums to 1; entries are sorted by descending probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel {
    pub positions: Vec<Vec<(u32, f64)>>,
}

impl SoftLabel {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct CorpusTeacher {
    /// statement-context key -> first-subtoken counts
    first: HashMap<u64, HashMap<u32, u64>>,
    /// previous subtoken -> next subtoken (or END) counts
    bigram: HashMap<u32, HashMap<u32, u64>>,
    /// Sorted name-eligible vocabulary ids; the position-0 support.
    eligible: Vec<u32>,
    top_k: usize,
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for part in parts {
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Significant-token index of each token id; trivia shares its successor's
/// index and never appears in leaves anyway.
fn significant_index(f: &FunctionUnit) -> Vec<usize> {
    let mut out = Vec::with_capacity(f.tokens.len());
    let mut n = 0usize;
    for t in &f.tokens {
        out.push(n);
        if !t.kind.is_trivia() {
            n += 1;
        }
    }
    out
}

/// Hash of the statement kind plus a normalized token window around the
/// occurrence: identifiers and literals collapse to class markers so the
/// key depends on shape, not on names.
fn context_key(f: &FunctionUnit, stmt: NodeId, occ: NodeId) -> u64 {
    let mut leaves = f.tree.leaves(stmt);
    leaves.sort_by_key(|&n| f.tree.node(n).token.unwrap());
    let pos = leaves.iter().position(|&n| n == occ).unwrap_or(0);

    let norm = |n: NodeId| -> &str {
        let tid = f.tree.node(n).token.unwrap();
        match f.tokens[tid].kind {
            TokenKind::Identifier => "<id>",
            TokenKind::Number => NUM_LIT,
            TokenKind::Str => STR_LIT,
            TokenKind::Char => CHAR_LIT,
            _ => &f.tokens[tid].text,
        }
    };

    let mut parts: Vec<&[u8]> = vec![f.tree.node(stmt).kind.label().as_bytes()];
    let lo = pos.saturating_sub(CONTEXT_WINDOW);
    let hi = (pos + CONTEXT_WINDOW + 1).min(leaves.len());
    for (i, &leaf) in leaves[lo..hi].iter().enumerate() {
        if lo + i == pos {
            parts.push(b"<hole>");
        } else {
            parts.push(norm(leaf).as_bytes());
        }
    }
    fnv1a(&parts)
}

/// Context keys for every statement that mentions `b` within the teacher's
/// token window, in source order; each statement contributes once, keyed by
/// its first occurrence.
fn statement_contexts(
    f: &FunctionUnit,
    b: &VariableBinding,
    spec: &LanguageSpec,
) -> Result<Vec<u64>> {
    let sig = significant_index(f);
    let mut by_stmt: HashMap<NodeId, NodeId> = HashMap::new();
    let mut saw_statement = false;
    for &occ in &b.occurrences {
        let stmt = match f.tree.ancestor_where(occ, |n| spec.is_statement_kind(n.kind)) {
            Some(s) => s,
            None => continue,
        };
        saw_statement = true;
        let tid = f.tree.node(occ).token.unwrap();
        if sig[tid] >= TEACHER_TOKEN_LIMIT {
            continue;
        }
        let cur = by_stmt.entry(stmt).or_insert(occ);
        if f.tree.node(occ).token < f.tree.node(*cur).token {
            *cur = occ;
        }
    }
    if !saw_statement {
        return Err(Error::NoStatementContext(format!(
            "variable {} has no statement ancestor",
            b.name
        )));
    }
    if by_stmt.is_empty() {
        return Err(Error::TeacherUnavailable(format!(
            "every occurrence of {} lies past the {TEACHER_TOKEN_LIMIT}-token window",
            b.name
        )));
    }
    let mut stmts: Vec<(NodeId, NodeId)> = by_stmt.into_iter().collect();
    stmts.sort_by_key(|&(stmt, _)| (f.tree.node(stmt).span.start, stmt));
    Ok(stmts.into_iter().map(|(stmt, occ)| context_key(f, stmt, occ)).collect())
}

fn name_subtokens(vocab: &Vocabulary, name: &str) -> Vec<u32> {
    vocab
        .leaf_ids(TokenKind::Identifier, name)
        .into_iter()
        .filter(|&id| id != UNK)
        .collect()
}

/// Keep the k most probable entries and renormalize them to sum to 1.
/// Ties break toward the smaller vocabulary id.
fn top_k_renorm(dense: Vec<(u32, f64)>, k: usize) -> Vec<(u32, f64)> {
    let mut entries = dense;
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    entries.truncate(k);
    let total: f64 = entries.iter().map(|e| e.1).sum();
    for e in &mut entries {
        e.1 /= total;
    }
    entries
}

pub fn train_corpus_teacher(
    units: &[FunctionUnit],
    vocab: &Vocabulary,
    top_k: usize,
) -> Result<CorpusTeacher> {
    if units.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut teacher = CorpusTeacher {
        first: HashMap::new(),
        bigram: HashMap::new(),
        eligible: (0..vocab.len() as u32).filter(|&id| vocab.name_eligible(id)).collect(),
        top_k,
    };
    let mut saw_variable = false;
    for f in units {
        let spec = default_grammars().get(&f.language)?;
        for b in list_variables(f) {
            let subs = name_subtokens(vocab, &b.name);
            if subs.is_empty() {
                continue;
            }
            saw_variable = true;
            if let Ok(keys) = statement_contexts(f, &b, spec) {
                for key in keys {
                    *teacher.first.entry(key).or_default().entry(subs[0]).or_insert(0) += 1;
                }
            }
            for w in subs.windows(2) {
                *teacher.bigram.entry(w[0]).or_default().entry(w[1]).or_insert(0) += 1;
            }
            *teacher
                .bigram
                .entry(*subs.last().unwrap())
                .or_default()
                .entry(END)
                .or_insert(0) += 1;
        }
    }
    if !saw_variable {
        return Err(Error::EmptyCorpus);
    }
    Ok(teacher)
}

impl CorpusTeacher {
    pub fn top_k(&self) -> usize {
        self.top_k
    }

    /// Add-one-smoothed first-subtoken distribution for one statement
    /// context, dense over the name-eligible support.
    fn statement_distribution(&self, key: u64) -> Vec<f64> {
        let counts = self.first.get(&key);
        let total: u64 = counts.map(|c| c.values().sum()).unwrap_or(0);
        let denom = total as f64 + self.eligible.len() as f64;
        self.eligible
            .iter()
            .map(|id| {
                let c = counts.and_then(|m| m.get(id)).copied().unwrap_or(0);
                (c as f64 + 1.0) / denom
            })
            .collect()
    }

    /// Smoothed next-subtoken distribution given the previous one; support
    /// is the eligible set plus END.
    fn bigram_distribution(&self, prev: u32) -> Vec<(u32, f64)> {
        let counts = self.bigram.get(&prev);
        let total: u64 = counts.map(|c| c.values().sum()).unwrap_or(0);
        let denom = total as f64 + (self.eligible.len() + 1) as f64;
        let mut out = Vec::with_capacity(self.eligible.len() + 1);
        let smoothed = |id: u32| {
            let c = counts.and_then(|m| m.get(&id)).copied().unwrap_or(0);
            (c as f64 + 1.0) / denom
        };
        out.push((END, smoothed(END)));
        for &id in &self.eligible {
            out.push((id, smoothed(id)));
        }
        out
    }

    /// Soft label for a variable: position 0 averages the smoothed
    /// statement-context distributions, later positions follow the bigram
    /// chain along the original name, capped at `max_len` positions.
    pub fn soft_labels(
        &self,
        f: &FunctionUnit,
        b: &VariableBinding,
        vocab: &Vocabulary,
        max_len: usize,
    ) -> Result<SoftLabel> {
        if self.first.is_empty() && self.bigram.is_empty() {
            return Err(Error::TeacherUnavailable("teacher has no counts".into()));
        }
        let spec = default_grammars().get(&f.language)?;
        let keys = statement_contexts(f, b, spec)?;

        let mut mean = vec![0.0f64; self.eligible.len()];
        for key in &keys {
            for (acc, p) in mean.iter_mut().zip(self.statement_distribution(*key)) {
                *acc += p;
            }
        }
        let n = keys.len() as f64;
        let dense: Vec<(u32, f64)> =
            self.eligible.iter().zip(&mean).map(|(&id, &p)| (id, p / n)).collect();
        let mut positions = vec![top_k_renorm(dense, self.top_k)];

        let subs = name_subtokens(vocab, &b.name);
        for t in 1..max_len {
            if t > subs.len() {
                break;
            }
            let dense = self.bigram_distribution(subs[t - 1]);
            positions.push(top_k_renorm(dense, self.top_k));
        }
        Ok(SoftLabel { positions })
    }
}

#[derive(Deserialize)]
struct ExportedLabel {
    fn_id: String,
    var_ordinal: usize,
    positions: Vec<Vec<(String, f64)>>,
}

/// Load externally produced soft labels from JSONL. Rows carry token
/// strings with probabilities; out-of-vocabulary and non-name tokens are
/// dropped (END survives past position 0) and the rest renormalized, then
/// cut to `top_k`.
pub fn load_exported_labels(
    path: &Path,
    vocab: &Vocabulary,
    top_k: usize,
) -> Result<HashMap<(String, usize), SoftLabel>> {
    let file = std::fs::File::open(path)?;
    let mut out = HashMap::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ExportedLabel = serde_json::from_str(&line).map_err(|e| {
            Error::SchemaError(format!("line {}: {e}", lineno + 1))
        })?;
        if row.positions.is_empty() {
            return Err(Error::SchemaError(format!(
                "line {}: label for {}#{} has no positions",
                lineno + 1,
                row.fn_id,
                row.var_ordinal
            )));
        }
        let mut positions = Vec::with_capacity(row.positions.len());
        for (t, pos) in row.positions.iter().enumerate() {
            let sum: f64 = pos.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > 1e-4 {
                return Err(Error::SchemaError(format!(
                    "line {}: position {t} sums to {sum:.6}",
                    lineno + 1
                )));
            }
            let mut dense: Vec<(u32, f64)> = Vec::new();
            for (tok, p) in pos {
                let id = vocab.id(tok);
                if id == UNK {
                    continue;
                }
                let keep = vocab.name_eligible(id) || (id == END && t > 0);
                if !keep {
                    continue;
                }
                match dense.iter_mut().find(|(d, _)| *d == id) {
                    Some(slot) => slot.1 += p,
                    None => dense.push((id, *p)),
                }
            }
            if dense.iter().map(|(_, p)| p).sum::<f64>() <= 0.0 {
                return Err(Error::SchemaError(format!(
                    "line {}: position {t} has no in-vocabulary mass",
                    lineno + 1
                )));
            }
            positions.push(top_k_renorm(dense, top_k));
        }
        let key = (row.fn_id.clone(), row.var_ordinal);
        if out.insert(key, SoftLabel { positions }).is_some() {
            return Err(Error::SchemaError(format!(
                "line {}: duplicate label for {}#{}",
                lineno + 1,
                row.fn_id,
                row.var_ordinal
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_function;
    use std::io::Write;

    fn corpus() -> Vec<FunctionUnit> {
        let sources = [
            "int sum(int[] xs) { int total = 0; for (int i = 0; i < xs.length; i++) { total += xs[i]; } return total; }",
            "int count(int[] xs) { int total = 0; for (int i = 0; i < xs.length; i++) { total += 1; } return total; }",
            "void log(String msg) { String fullMsg = msg; System.out.println(fullMsg); }",
            "int pick(int a, int b) { int best = a; if (b > a) { best = b; } return best; }",
        ];
        sources
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut f = parse_function(s, "java").unwrap();
                f.id = format!("fn{i}");
                f
            })
            .collect()
    }

    fn binding<'a>(f: &'a FunctionUnit, name: &str) -> VariableBinding {
        list_variables(f).into_iter().find(|b| b.name == name).unwrap()
    }

    #[test]
    fn labels_are_distributions_with_at_most_k_entries() {
        let units = corpus();
        let vocab = Vocabulary::build(&units);
        let teacher = train_corpus_teacher(&units, &vocab, 5).unwrap();
        for f in &units {
            for b in list_variables(f) {
                let label = teacher.soft_labels(f, &b, &vocab, 5).unwrap();
                assert!(!label.is_empty());
                for pos in &label.positions {
                    assert!(pos.len() <= 5);
                    let sum: f64 = pos.iter().map(|e| e.1).sum();
                    assert!((sum - 1.0).abs() < 1e-6, "sum {sum}");
                }
            }
        }
    }

    #[test]
    fn position0_averages_statement_distributions() {
        let units = corpus();
        let vocab = Vocabulary::build(&units);
        // top_k = entire eligible support: no cutoff, pure average
        let eligible = (0..vocab.len() as u32).filter(|&i| vocab.name_eligible(i)).count();
        let teacher = train_corpus_teacher(&units, &vocab, eligible).unwrap();

        let f = &units[0];
        let b = binding(f, "total");
        let spec = default_grammars().get("java").unwrap();
        let keys = statement_contexts(f, &b, spec).unwrap();
        assert!(keys.len() >= 2, "total appears in several statements");

        let label = teacher.soft_labels(f, &b, &vocab, 5).unwrap();
        let mut expected: HashMap<u32, f64> = HashMap::new();
        for key in &keys {
            for (&id, p) in teacher.eligible.iter().zip(teacher.statement_distribution(*key)) {
                *expected.entry(id).or_insert(0.0) += p / keys.len() as f64;
            }
        }
        for (id, p) in &label.positions[0] {
            let want = expected[id];
            assert!((p - want).abs() < 1e-12, "id {id}: {p} vs {want}");
        }
    }

    #[test]
    fn k1_label_is_one_hot() {
        let units = corpus();
        let vocab = Vocabulary::build(&units);
        let teacher = train_corpus_teacher(&units, &vocab, 1).unwrap();
        let f = &units[0];
        let b = binding(f, "total");
        let label = teacher.soft_labels(f, &b, &vocab, 5).unwrap();
        assert_eq!(label.positions[0].len(), 1);
        assert!((label.positions[0][0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bigram_counts_match_hand_tally() {
        let units = [
            "void a() { int fooBar = 1; }",
            "void b() { int fooBaz = 2; }",
            "void c() { int foo = 3; }",
        ]
        .iter()
        .map(|s| parse_function(s, "java").unwrap())
        .collect::<Vec<_>>();
        let vocab = Vocabulary::build(&units);
        let teacher = train_corpus_teacher(&units, &vocab, 50).unwrap();

        let foo = vocab.id("foo");
        let counts = &teacher.bigram[&foo];
        assert_eq!(counts[&vocab.id("bar")], 1);
        assert_eq!(counts[&vocab.id("baz")], 1);
        assert_eq!(counts[&END], 1);

        // smoothed: (1+1)/(3 + support) for each observed successor
        let dist = teacher.bigram_distribution(foo);
        let support = teacher.eligible.len() + 1;
        let want = 2.0 / (3.0 + support as f64);
        let got = dist.iter().find(|(id, _)| *id == vocab.id("bar")).unwrap().1;
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn unseen_context_falls_back_to_uniform() {
        let units = corpus();
        let vocab = Vocabulary::build(&units);
        let eligible = (0..vocab.len() as u32).filter(|&i| vocab.name_eligible(i)).count();
        let teacher = train_corpus_teacher(&units, &vocab, eligible).unwrap();

        // synchronized blocks never occur in the training corpus
        let f = parse_function(
            "void fresh() { synchronized (this) { double zq = 0.5; } }",
            "java",
        )
        .unwrap();
        let b = binding(&f, "zq");
        let label = teacher.soft_labels(&f, &b, &vocab, 5).unwrap();
        let p0 = &label.positions[0];
        let first = p0[0].1;
        for (_, p) in p0 {
            assert!((p - first).abs() < 1e-12, "uniform fallback expected");
        }
    }

    #[test]
    fn occurrences_past_the_token_window_are_invisible() {
        let mut body = String::from("int far(int seed) {\n");
        for i in 0..120 {
            body.push_str(&format!("    seed = seed + {i};\n"));
        }
        body.push_str("    int late = seed;\n    return late;\n}\n");
        let f = parse_function(&body, "java").unwrap();
        assert!(f.significant_token_count() > TEACHER_TOKEN_LIMIT);

        let units = corpus();
        let vocab = Vocabulary::build(&units);
        let teacher = train_corpus_teacher(&units, &vocab, 5).unwrap();
        let late = binding(&f, "late");
        match teacher.soft_labels(&f, &late, &vocab, 5) {
            Err(Error::TeacherUnavailable(_)) => {}
            other => panic!("expected TeacherUnavailable, got {other:?}"),
        }
        // a variable near the top is still fine
        let seed = binding(&f, "seed");
        assert!(teacher.soft_labels(&f, &seed, &vocab, 5).is_ok());
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let vocab = Vocabulary::from_parts(
            crate::vocab::SPECIALS.iter().map(|s| s.to_string()).collect(),
            vec![false; 5],
        );
        assert!(matches!(train_corpus_teacher(&[], &vocab, 5), Err(Error::EmptyCorpus)));
    }

    fn write_labels(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    #[test]
    fn exported_labels_round_trip() {
        let units = corpus();
        let vocab = Vocabulary::build(&units);
        let file = write_labels(&[
            r#"{"fn_id":"fn0","var_ordinal":0,"positions":[[["total",0.6],["best",0.4]],[["<end>",1.0]]]}"#,
            r#"{"fn_id":"fn0","var_ordinal":1,"positions":[[["msg",1.0]]]}"#,
        ]);
        let labels = load_exported_labels(file.path(), &vocab, 20).unwrap();
        assert_eq!(labels.len(), 2);
        let l = &labels[&("fn0".to_string(), 0)];
        assert_eq!(l.positions[0][0], (vocab.id("total"), 0.6));
        assert_eq!(l.positions[1][0], (END, 1.0));
    }

    #[test]
    fn exported_label_duplicates_and_bad_sums_are_schema_errors() {
        let units = corpus();
        let vocab = Vocabulary::build(&units);
        let dup = write_labels(&[
            r#"{"fn_id":"a","var_ordinal":0,"positions":[[["total",1.0]]]}"#,
            r#"{"fn_id":"a","var_ordinal":0,"positions":[[["best",1.0]]]}"#,
        ]);
        assert!(matches!(
            load_exported_labels(dup.path(), &vocab, 20),
            Err(Error::SchemaError(_))
        ));

        let bad_sum = write_labels(&[
            r#"{"fn_id":"a","var_ordinal":0,"positions":[[["total",0.6],["best",0.3]]]}"#,
        ]);
        assert!(matches!(
            load_exported_labels(bad_sum.path(), &vocab, 20),
            Err(Error::SchemaError(_))
        ));
    }

    #[test]
    fn exported_oov_mass_is_dropped_then_renormalized() {
        let units = corpus();
        let vocab = Vocabulary::build(&units);
        let file = write_labels(&[
            r#"{"fn_id":"a","var_ordinal":0,"positions":[[["total",0.5],["zzzunknown",0.3],["best",0.2]]]}"#,
        ]);
        let labels = load_exported_labels(file.path(), &vocab, 20).unwrap();
        let pos0 = &labels[&("a".to_string(), 0)].positions[0];
        assert_eq!(pos0.len(), 2);
        let total: f64 = pos0.iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let p_total = pos0.iter().find(|(id, _)| *id == vocab.id("total")).unwrap().1;
        assert!((p_total - 0.5 / 0.7).abs() < 1e-12);
    }
}
