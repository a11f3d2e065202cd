//! Language front-end: lexing, parsing, scope analysis, renaming, checks,
//! and identifier subtokenization.

pub mod ast;
pub mod checks;
pub mod grammar;
pub mod lexer;
pub mod parser;
pub mod rename;
pub mod scope;
pub mod subtoken;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use ast::{Span, Token, TokenId, Tree};
use grammar::{default_grammars, GrammarSet, LanguageSpec};

pub use checks::{ast_check, check_report, keyword_check, CheckReport};
pub use rename::{rename_variable, validate_new_name};
pub use scope::{list_variables, VariableBinding};
pub use subtoken::{render, split_name, subtokenize, NameSplit, NameStyle};

/// One function's source, token stream, and syntax tree; the unit of
/// watermarking. Immutable after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionUnit {
    pub id: String,
    pub language: String,
    pub source: String,
    pub tokens: Vec<Token>,
    pub tree: Tree,
    pub diagnostics: Vec<(Span, String)>,
}

impl FunctionUnit {
    pub fn token_text(&self, tid: TokenId) -> &str {
        &self.tokens[tid].text
    }

    /// Token text of a leaf node.
    pub fn node_text(&self, node: ast::NodeId) -> Option<&str> {
        self.tree.node(node).token.map(|t| self.token_text(t))
    }

    /// Non-trivia token count; the denominator of bits-per-token.
    pub fn significant_token_count(&self) -> usize {
        self.tokens.iter().filter(|t| !t.kind.is_trivia()).count()
    }

    pub fn has_parse_errors(&self) -> bool {
        self.tree.has_error_nodes()
    }
}

/// Parse with the process-wide built-in grammars.
pub fn parse_function(source: &str, language: &str) -> Result<FunctionUnit> {
    let spec = default_grammars().get(language)?;
    parse_function_with_spec(source, language, spec)
}

/// Parse with grammars loaded from a grammar directory.
pub fn parse_function_in(source: &str, language: &str, grammars: &GrammarSet) -> Result<FunctionUnit> {
    let spec = grammars.get(language)?;
    parse_function_with_spec(source, language, spec)
}

pub fn parse_function_with_spec(
    source: &str,
    language: &str,
    spec: &LanguageSpec,
) -> Result<FunctionUnit> {
    if source.trim().is_empty() {
        return Err(Error::UnparseableInput("empty source".into()));
    }
    let tokens = lexer::Lexer::new(source, spec).tokenize();
    let out = parser::parse_tokens(&tokens, spec)?;
    Ok(FunctionUnit {
        id: String::new(),
        language: language.to_string(),
        source: source.to_string(),
        tokens,
        tree: out.tree,
        diagnostics: out.diagnostics,
    })
}
