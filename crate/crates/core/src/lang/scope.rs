//! Lexical scope analysis: find variable bindings (parameters, locals,
//! loop/catch/lambda variables) and resolve every identifier occurrence to
//! its binding. Field accesses, method names, type names, and labels are
//! never occurrences.

use std::collections::HashMap;

use super::ast::{NodeId, NodeKind, Tree};
use super::FunctionUnit;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableBinding {
    pub name: String,
    /// Identifier leaf nodes, source order; the first is the declaration site.
    pub occurrences: Vec<NodeId>,
    /// 0-based appearance index over the function's bindings.
    pub ordinal: usize,
    /// Loop variable of an enhanced-for header (reported, still watermarkable).
    pub from_enhanced_for: bool,
}

impl VariableBinding {
    pub fn decl_node(&self) -> NodeId {
        self.occurrences[0]
    }
}

/// All bindings of the function, ordered by first occurrence.
pub fn list_variables(fn_unit: &FunctionUnit) -> Vec<VariableBinding> {
    let mut an = Analyzer {
        fn_unit,
        tree: &fn_unit.tree,
        bindings: Vec::new(),
        scopes: vec![HashMap::new()],
    };
    an.walk(fn_unit.tree.root);
    let mut bindings = an.bindings;
    bindings.sort_by_key(|b| fn_unit.tree.node(b.occurrences[0]).span.start);
    for (i, b) in bindings.iter_mut().enumerate() {
        b.ordinal = i;
    }
    bindings
}

struct Analyzer<'a> {
    fn_unit: &'a FunctionUnit,
    tree: &'a Tree,
    bindings: Vec<VariableBinding>,
    scopes: Vec<HashMap<String, usize>>,
}

fn introduces_scope(kind: NodeKind) -> bool {
    matches!(
        kind,
        NodeKind::MethodDeclaration
            | NodeKind::ConstructorDeclaration
            | NodeKind::Block
            | NodeKind::ForStatement
            | NodeKind::EnhancedForStatement
            | NodeKind::TryStatement
            | NodeKind::CatchClause
            | NodeKind::LambdaExpression
            | NodeKind::SwitchBlock
    )
}

/// Parent kinds whose direct identifier leaves are never variable references.
fn all_children_excluded(kind: NodeKind) -> bool {
    matches!(
        kind,
        NodeKind::ClassType
            | NodeKind::PrimitiveType
            | NodeKind::Annotation
            | NodeKind::Wildcard
            | NodeKind::Modifiers
            | NodeKind::ClassLiteral
            | NodeKind::BreakStatement
            | NodeKind::ContinueStatement
            | NodeKind::MethodDeclaration
            | NodeKind::ConstructorDeclaration
    )
}

impl<'a> Analyzer<'a> {
    fn leaf_text(&self, id: NodeId) -> &str {
        let tok = self.tree.node(id).token.expect("leaf node");
        &self.fn_unit.tokens[tok].text
    }

    fn bind(&mut self, name_leaf: NodeId, enhanced: bool) {
        let name = self.leaf_text(name_leaf).to_string();
        let idx = self.bindings.len();
        self.bindings.push(VariableBinding {
            name: name.clone(),
            occurrences: vec![name_leaf],
            ordinal: 0,
            from_enhanced_for: enhanced,
        });
        self.scopes.last_mut().unwrap().insert(name, idx);
    }

    fn reference(&mut self, leaf: NodeId) {
        let name = self.leaf_text(leaf);
        for scope in self.scopes.iter().rev() {
            if let Some(&idx) = scope.get(name) {
                self.bindings[idx].occurrences.push(leaf);
                return;
            }
        }
        // unbound: a field, class, or external name; not an occurrence
    }

    fn walk(&mut self, id: NodeId) {
        let node = self.tree.node(id);
        let kind = node.kind;
        let pushed = introduces_scope(kind);
        if pushed {
            self.scopes.push(HashMap::new());
        }

        let children: Vec<NodeId> = node.children.clone();
        let mut bound_name = false;
        for (i, &c) in children.iter().enumerate() {
            let cn = self.tree.node(c);
            if cn.kind == NodeKind::IdentifierLeaf {
                match kind {
                    _ if all_children_excluded(kind) => {}
                    NodeKind::FormalParameter
                    | NodeKind::CatchFormalParameter
                    | NodeKind::EnhancedForVariable => {
                        if !bound_name {
                            self.bind(c, kind == NodeKind::EnhancedForVariable);
                            bound_name = true;
                        } else {
                            self.reference(c);
                        }
                    }
                    NodeKind::VariableDeclarator => {
                        if !bound_name {
                            self.bind(c, false);
                            bound_name = true;
                        } else {
                            self.reference(c);
                        }
                    }
                    NodeKind::MethodInvocation => {
                        // the name right before the argument list is the
                        // method; a leading receiver identifier is a variable
                        let next_is_args = children
                            .get(i + 1)
                            .is_some_and(|&n| self.tree.node(n).kind == NodeKind::ArgumentList);
                        if !next_is_args {
                            self.reference(c);
                        }
                    }
                    NodeKind::FieldAccess | NodeKind::MethodReference => {
                        if i == 0 {
                            self.reference(c);
                        }
                    }
                    NodeKind::LabeledStatement => {
                        if i != 0 {
                            self.reference(c);
                        }
                    }
                    _ => self.reference(c),
                }
            } else if !cn.children.is_empty() || cn.token.is_none() {
                self.walk(c);
            }
            // non-identifier leaves carry no scope information
        }

        if pushed {
            self.scopes.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_function;
    use super::*;

    fn vars(src: &str) -> Vec<VariableBinding> {
        let f = parse_function(src, "java").unwrap();
        list_variables(&f)
    }

    #[test]
    fn params_then_locals_in_order() {
        let v = vars("int f(int x, int y) { int tmp = x + y; return tmp; }");
        let names: Vec<&str> = v.iter().map(|b| b.name.as_str()).collect();
        assert_eq!(names, ["x", "y", "tmp"]);
        assert_eq!(v[0].ordinal, 0);
        assert_eq!(v[2].ordinal, 2);
        assert_eq!(v[0].occurrences.len(), 2); // decl + use
        assert_eq!(v[2].occurrences.len(), 2);
    }

    #[test]
    fn three_occurrences() {
        let v = vars("void f(){File dir = open(); scan(dir); dir.close();}");
        let dir = v.iter().find(|b| b.name == "dir").unwrap();
        assert_eq!(dir.occurrences.len(), 3);
    }

    #[test]
    fn shadowing_yields_distinct_bindings() {
        let v = vars("void f(){ { int i = 0; use(i); } { int i = 1; use(i); } }");
        let is: Vec<_> = v.iter().filter(|b| b.name == "i").collect();
        assert_eq!(is.len(), 2);
        assert_eq!(is[0].occurrences.len(), 2);
        assert_eq!(is[1].occurrences.len(), 2);
    }

    #[test]
    fn inner_shadow_captures_inner_refs() {
        let v = vars("void f(int a){ use(a); { int a = 1; use(a); } use(a); }");
        let outer = &v[0];
        let inner = &v[1];
        assert_eq!(outer.occurrences.len(), 3); // param, first use, last use
        assert_eq!(inner.occurrences.len(), 2);
    }

    #[test]
    fn fields_methods_types_labels_are_not_occurrences() {
        let v = vars(
            "void f(int count){ this.count = count; outer: while (true) { break outer; } String s = helper(count); }",
        );
        let count = v.iter().find(|b| b.name == "count").unwrap();
        // param decl, rhs of assignment, helper argument; this.count excluded
        assert_eq!(count.occurrences.len(), 3);
        assert!(!v.iter().any(|b| b.name == "outer"));
        assert!(!v.iter().any(|b| b.name == "helper"));
        let s = v.iter().find(|b| b.name == "s").unwrap();
        assert_eq!(s.occurrences.len(), 1);
    }

    #[test]
    fn enhanced_for_variable_flagged() {
        let v = vars("int f(int[] xs){ int s = 0; for (int x : xs) { s += x; } return s; }");
        let x = v.iter().find(|b| b.name == "x").unwrap();
        assert!(x.from_enhanced_for);
        assert_eq!(x.occurrences.len(), 2);
        let s = v.iter().find(|b| b.name == "s").unwrap();
        assert!(!s.from_enhanced_for);
        assert_eq!(s.occurrences.len(), 3);
    }

    #[test]
    fn loop_counters_and_receivers() {
        let v = vars(
            "int f(List<Integer> items){ int total = 0; for (int i = 0; i < items.size(); i++) { total += items.get(i); } return total; }",
        );
        let i = v.iter().find(|b| b.name == "i").unwrap();
        assert_eq!(i.occurrences.len(), 4); // decl, cond, update, get(i)
        let items = v.iter().find(|b| b.name == "items").unwrap();
        assert_eq!(items.occurrences.len(), 3); // param, size receiver, get receiver
    }

    #[test]
    fn catch_and_lambda_params_bind() {
        let v = vars(
            "void f(){ try { go(); } catch (Exception e) { log(e); } java.util.function.Function<Integer,Integer> g = v2 -> v2 + 1; g.apply(2); }",
        );
        let e = v.iter().find(|b| b.name == "e").unwrap();
        assert_eq!(e.occurrences.len(), 2);
        let v2 = v.iter().find(|b| b.name == "v2").unwrap();
        assert_eq!(v2.occurrences.len(), 2);
    }

    #[test]
    fn self_referential_initializer() {
        let v = vars("void f(){ int a = (a = 2) + 1; use(a); }");
        let a = v.iter().find(|b| b.name == "a").unwrap();
        assert_eq!(a.occurrences.len(), 3);
    }

    #[test]
    fn unbound_names_ignored() {
        let v = vars("void f(){ System.out.println(Constants.MAX); }");
        assert!(v.is_empty());
    }

    #[test]
    fn stable_under_whitespace_edits() {
        let a = vars("int f(int x){int y=x+1;return y;}");
        let b = vars("int f(int x)  {\n  int y = x + 1;\n  return y;\n}");
        let an: Vec<_> = a.iter().map(|v| (v.name.clone(), v.occurrences.len())).collect();
        let bn: Vec<_> = b.iter().map(|v| (v.name.clone(), v.occurrences.len())).collect();
        assert_eq!(an, bn);
    }
}
