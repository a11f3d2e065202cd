//! Per-language grammar data: reserved words, protected class names, and the
//! statement category used for context-subtree selection.
//!
//! A language ships as a TOML data file. The Java file is embedded as the
//! default; a grammar directory can override or extend it via
//! [`GrammarSet::load_dir`].

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use super::ast::NodeKind;

pub const JAVA_GRAMMAR_TOML: &str = include_str!("../../data/grammar/java.toml");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrammarFile {
    pub language: String,
    pub reserved_words: Vec<String>,
    #[serde(default)]
    pub protected_names: Vec<String>,
    pub statement_kinds: Vec<String>,
}

/// Resolved grammar for one language.
#[derive(Debug, Clone)]
pub struct LanguageSpec {
    pub language: String,
    pub reserved: HashSet<String>,
    pub protected: HashSet<String>,
    pub statement_kinds: HashSet<NodeKind>,
}

impl LanguageSpec {
    fn from_file(file: GrammarFile) -> Result<Self> {
        let mut statement_kinds = HashSet::new();
        for label in &file.statement_kinds {
            let kind = NodeKind::all()
                .iter()
                .copied()
                .find(|k| k.label() == label)
                .ok_or_else(|| {
                    Error::BadConfig(format!("unknown statement kind {label:?} in grammar"))
                })?;
            statement_kinds.insert(kind);
        }
        Ok(LanguageSpec {
            language: file.language,
            reserved: file.reserved_words.into_iter().collect(),
            protected: file.protected_names.into_iter().collect(),
            statement_kinds,
        })
    }

    pub fn is_reserved(&self, word: &str) -> bool {
        self.reserved.contains(word)
    }

    pub fn is_protected(&self, word: &str) -> bool {
        self.protected.contains(word)
    }

    /// Reserved words plus protected class names; the token set whose
    /// multiset must survive watermarking untouched.
    pub fn is_guarded(&self, word: &str) -> bool {
        self.is_reserved(word) || self.is_protected(word)
    }

    pub fn is_statement_kind(&self, kind: NodeKind) -> bool {
        self.statement_kinds.contains(&kind)
    }
}

/// The set of known languages, optionally extended from a grammar directory.
#[derive(Debug, Clone)]
pub struct GrammarSet {
    specs: Vec<LanguageSpec>,
}

impl GrammarSet {
    /// Built-in grammars only.
    pub fn builtin() -> Self {
        let file: GrammarFile =
            toml::from_str(JAVA_GRAMMAR_TOML).expect("embedded java grammar parses");
        GrammarSet {
            specs: vec![LanguageSpec::from_file(file).expect("embedded java grammar valid")],
        }
    }

    /// Built-in grammars with every `*.toml` under `dir` loaded on top.
    /// A file whose `language` matches a built-in replaces it.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut set = Self::builtin();
        let mut entries: Vec<_> = std::fs::read_dir(dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "toml"))
            .collect();
        entries.sort();
        for path in entries {
            let text = std::fs::read_to_string(&path)?;
            let file: GrammarFile = toml::from_str(&text)
                .map_err(|e| Error::BadConfig(format!("{}: {e}", path.display())))?;
            let spec = LanguageSpec::from_file(file)?;
            set.specs.retain(|s| s.language != spec.language);
            set.specs.push(spec);
        }
        Ok(set)
    }

    pub fn get(&self, language: &str) -> Result<&LanguageSpec> {
        self.specs
            .iter()
            .find(|s| s.language == language)
            .ok_or_else(|| Error::UnsupportedLanguage(language.to_string()))
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.language.as_str())
    }
}

/// Process-wide default grammar set (built-ins only).
pub fn default_grammars() -> &'static GrammarSet {
    static SET: OnceLock<GrammarSet> = OnceLock::new();
    SET.get_or_init(GrammarSet::builtin)
}

/// Shorthand for the built-in Java spec.
pub fn java() -> &'static LanguageSpec {
    default_grammars().get("java").expect("java is built in")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_java_loads() {
        let spec = java();
        assert!(spec.is_reserved("int"));
        assert!(spec.is_reserved("while"));
        assert!(!spec.is_reserved("foo"));
        assert!(spec.is_protected("String"));
        assert!(spec.is_guarded("String"));
        assert!(!spec.is_protected("string"));
        assert!(spec.is_statement_kind(NodeKind::LocalVariableDeclaration));
        assert!(spec.is_statement_kind(NodeKind::FormalParameter));
        assert!(!spec.is_statement_kind(NodeKind::Block));
    }

    #[test]
    fn unknown_language_is_an_error() {
        let err = default_grammars().get("cobol").unwrap_err();
        assert!(matches!(err, Error::UnsupportedLanguage(_)));
    }

    #[test]
    fn grammar_dir_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("mini.toml"),
            r#"
language = "mini"
reserved_words = ["let"]
protected_names = []
statement_kinds = ["expression_statement"]
"#,
        )
        .unwrap();
        let set = GrammarSet::load_dir(dir.path()).unwrap();
        assert!(set.get("mini").is_ok());
        assert!(set.get("java").is_ok());
    }
}
