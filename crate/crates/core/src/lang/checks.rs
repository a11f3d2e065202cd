//! Operational-semantics gates: parseability without error nodes, and
//! preservation of the guarded-token multiset (reserved words plus protected
//! class names).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ast::{Span, TokenKind};
use super::grammar::LanguageSpec;
use super::lexer::Lexer;
use super::parse_function_with_spec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub ast_ok: bool,
    pub keyword_ok: bool,
    pub diagnostics: Vec<(Span, String)>,
}

/// True iff the source parses into a tree with zero error nodes.
pub fn ast_check(source: &str, spec: &LanguageSpec) -> bool {
    match parse_function_with_spec(source, &spec.language, spec) {
        Ok(f) => !f.tree.has_error_nodes(),
        Err(_) => false,
    }
}

fn guarded_multiset(source: &str, spec: &LanguageSpec) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for tok in Lexer::new(source, spec).tokenize() {
        let guarded = tok.kind == TokenKind::Keyword
            || (tok.kind == TokenKind::Identifier && spec.is_protected(&tok.text));
        if guarded {
            *counts.entry(tok.text).or_insert(0) += 1;
        }
    }
    counts
}

/// True iff reserved words and protected class names occur with identical
/// multiplicities in both texts.
pub fn keyword_check(original: &str, watermarked: &str, spec: &LanguageSpec) -> bool {
    guarded_multiset(original, spec) == guarded_multiset(watermarked, spec)
}

/// Combined report for a watermarked function against its original.
pub fn check_report(original: &str, watermarked: &str, spec: &LanguageSpec) -> CheckReport {
    let (ast_ok, mut diagnostics) =
        match parse_function_with_spec(watermarked, &spec.language, spec) {
            Ok(f) => (!f.tree.has_error_nodes(), f.diagnostics.clone()),
            Err(e) => (false, vec![(Span::new(0, 0), e.to_string())]),
        };
    if !ast_ok && diagnostics.is_empty() {
        diagnostics.push((Span::new(0, 0), "syntax error".to_string()));
    }
    if ast_ok {
        diagnostics.clear(); // stale warnings would violate the report invariant
    }
    CheckReport { ast_ok, keyword_ok: keyword_check(original, watermarked, spec), diagnostics }
}

#[cfg(test)]
mod tests {
    use super::super::grammar::java;
    use super::*;

    #[test]
    fn valid_function_passes() {
        assert!(ast_check("int f(){int a=0;return a;}", java()));
    }

    #[test]
    fn corrupted_delimiter_fails() {
        // AWT-style corruption: replace `(` with `,`
        assert!(!ast_check("int f,){int a=0;return a;}", java()));
    }

    #[test]
    fn keyword_check_reflexive() {
        for src in ["int f(){int a=0;return a;}", "void g(){}", "xyzzy"] {
            assert!(keyword_check(src, src, java()));
        }
    }

    #[test]
    fn identifier_rename_passes_keyword_check() {
        let a = "int f(){int count=0;return count;}";
        let b = "int f(){int total=0;return total;}";
        assert!(keyword_check(a, b, java()));
    }

    #[test]
    fn case_change_on_keyword_fails() {
        let a = "int f(){int a=0;return a;}";
        let b = "Int f(){int a=0;return a;}";
        assert!(!keyword_check(a, b, java()));
    }

    #[test]
    fn case_change_on_variable_passes() {
        let a = "int f(){int d=0;return d;}";
        let b = "int f(){int D=0;return D;}";
        assert!(keyword_check(a, b, java()));
    }

    #[test]
    fn protected_names_are_guarded() {
        let a = "void f(){String s = name();}";
        let b = "void f(){string s = name();}";
        assert!(!keyword_check(a, b, java()));
    }

    #[test]
    fn failed_ast_check_reports_diagnostics() {
        let rep = check_report("int f(){int a=0;return a;}", "int f(){int a=0 return a;}", java());
        assert!(!rep.ast_ok);
        assert!(!rep.diagnostics.is_empty());
        assert!(rep.keyword_ok);
    }

    #[test]
    fn clean_report() {
        let rep = check_report("int f(){int a=0;return a;}", "int f(){int b=0;return b;}", java());
        assert!(rep.ast_ok);
        assert!(rep.keyword_ok);
        assert!(rep.diagnostics.is_empty());
    }
}
