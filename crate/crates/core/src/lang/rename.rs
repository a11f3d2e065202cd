//! Byte-precise variable renaming. All and only the binding's occurrences
//! change; the result is reparsed so spans and the tree stay consistent.

use std::collections::HashSet;

use super::ast::TokenKind;
use super::grammar::LanguageSpec;
use super::lexer;
use super::scope::VariableBinding;
use super::{parse_function_with_spec, FunctionUnit};
use crate::error::{Error, Result};

/// Validate a candidate name against the rename preconditions, reporting the
/// first violated one.
pub fn validate_new_name(
    fn_unit: &FunctionUnit,
    binding: &VariableBinding,
    new_name: &str,
    spec: &LanguageSpec,
) -> Result<()> {
    let mut chars = new_name.chars();
    let shape_ok = match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' || c == '$' => {
            chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
        }
        _ => false,
    };
    if !shape_ok {
        return Err(Error::IllegalIdentifier(new_name.to_string()));
    }
    // protected class names are rejected alongside reserved words: introducing
    // one would change the guarded-token multiset the keyword check compares
    if spec.is_reserved(new_name) || spec.is_protected(new_name) {
        return Err(Error::ReservedWord(new_name.to_string()));
    }
    let own_tokens: HashSet<usize> = binding
        .occurrences
        .iter()
        .map(|&n| fn_unit.tree.node(n).token.expect("occurrence is a leaf"))
        .collect();
    let collides = fn_unit.tokens.iter().enumerate().any(|(tid, tok)| {
        tok.kind == TokenKind::Identifier && tok.text == new_name && !own_tokens.contains(&tid)
    });
    if collides {
        return Err(Error::NameCollision(new_name.to_string()));
    }
    Ok(())
}

/// Rename one binding. Identity renames return a byte-identical function.
pub fn rename_variable(
    fn_unit: &FunctionUnit,
    binding: &VariableBinding,
    new_name: &str,
    spec: &LanguageSpec,
) -> Result<FunctionUnit> {
    validate_new_name(fn_unit, binding, new_name, spec)?;
    let mut spans: Vec<_> = binding
        .occurrences
        .iter()
        .map(|&n| fn_unit.tree.node(n).span)
        .collect();
    spans.sort_by_key(|s| s.start);
    let mut out = String::with_capacity(fn_unit.source.len());
    let mut cursor = 0usize;
    for span in spans {
        out.push_str(&fn_unit.source[cursor..span.start]);
        out.push_str(new_name);
        cursor = span.end;
    }
    out.push_str(&fn_unit.source[cursor..]);
    let mut renamed = parse_function_with_spec(&out, &fn_unit.language, spec)?;
    renamed.id = fn_unit.id.clone();
    Ok(renamed)
}

/// Convenience: does this name even lex as a single identifier token?
pub fn is_identifier(name: &str, spec: &LanguageSpec) -> bool {
    lexer::is_legal_identifier(name, spec)
}

#[cfg(test)]
mod tests {
    use super::super::grammar::java;
    use super::super::scope::list_variables;
    use super::super::parse_function;
    use super::*;

    fn unit(src: &str) -> FunctionUnit {
        parse_function(src, "java").unwrap()
    }

    #[test]
    fn renames_all_and_only_occurrences() {
        let f = unit("void f(){File dir = open(); scan(dir); dir.close(); this.dir = null;}");
        let vars = list_variables(&f);
        let dir = vars.iter().find(|b| b.name == "dir").unwrap();
        let g = rename_variable(&f, dir, "directory", java()).unwrap();
        assert_eq!(
            g.source,
            "void f(){File directory = open(); scan(directory); directory.close(); this.dir = null;}"
        );
        assert_eq!(f.tokens.len(), g.tokens.len());
        assert_eq!(f.tree.shape_signature(), g.tree.shape_signature());
    }

    #[test]
    fn identity_rename_is_byte_identical() {
        let f = unit("int f(){int a=0;return a;}");
        let vars = list_variables(&f);
        let g = rename_variable(&f, &vars[0], "a", java()).unwrap();
        assert_eq!(f.source, g.source);
    }

    #[test]
    fn round_trip_restores_bytes() {
        let f = unit("int f(int a){int b=a+1;return b;}");
        let vars = list_variables(&f);
        let a = vars.iter().find(|v| v.name == "a").unwrap();
        let g = rename_variable(&f, a, "freshName", java()).unwrap();
        let gvars = list_variables(&g);
        let fresh = gvars.iter().find(|v| v.name == "freshName").unwrap();
        assert_eq!(fresh.ordinal, a.ordinal);
        let h = rename_variable(&g, fresh, "a", java()).unwrap();
        assert_eq!(h.source, f.source);
    }

    #[test]
    fn reserved_and_protected_rejected() {
        let f = unit("int f(){int a=0;return a;}");
        let vars = list_variables(&f);
        assert!(matches!(
            rename_variable(&f, &vars[0], "int", java()),
            Err(Error::ReservedWord(_))
        ));
        assert!(matches!(
            rename_variable(&f, &vars[0], "String", java()),
            Err(Error::ReservedWord(_))
        ));
    }

    #[test]
    fn illegal_shape_rejected() {
        let f = unit("int f(){int a=0;return a;}");
        let vars = list_variables(&f);
        for bad in ["9lives", "a-b", "", "a b"] {
            assert!(matches!(
                rename_variable(&f, &vars[0], bad, java()),
                Err(Error::IllegalIdentifier(_))
            ));
        }
    }

    #[test]
    fn collisions_rejected_even_for_free_names() {
        let f = unit("int f(int a){int b=0;helper(a);return b;}");
        let vars = list_variables(&f);
        let b = vars.iter().find(|v| v.name == "b").unwrap();
        assert!(matches!(
            rename_variable(&f, b, "a", java()),
            Err(Error::NameCollision(_))
        ));
        // `helper` is unbound but renaming b to it would capture the call
        assert!(matches!(
            rename_variable(&f, b, "helper", java()),
            Err(Error::NameCollision(_))
        ));
    }

    #[test]
    fn ordinals_survive_renames() {
        let f = unit("int f(int x, int y){int z=x+y;return z;}");
        let vars = list_variables(&f);
        let y = vars.iter().find(|v| v.name == "y").unwrap().clone();
        let g = rename_variable(&f, &y, "aVeryMuchLongerName", java()).unwrap();
        let gvars = list_variables(&g);
        let names: Vec<&str> = gvars.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["x", "aVeryMuchLongerName", "z"]);
    }
}
