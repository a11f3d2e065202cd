//! Robustness attacks. Type I rewrites statement structure without touching
//! identifiers, Type II rewrites variable declarations and name styles
//! without changing any name's subtokens, Type III renames a fraction of
//! the variables outright. All outputs reparse cleanly; a transform that
//! would break the parse is dropped, never emitted.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::lang::ast::{NodeId, NodeKind, Span, TokenKind};
use crate::lang::grammar::default_grammars;
use crate::lang::{
    list_variables, parse_function, rename_variable, split_name, render, FunctionUnit, NameStyle,
};

#[derive(Debug, Clone, PartialEq)]
pub enum AttackKind {
    TypeI,
    TypeII,
    TypeIII { p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub seed: u64,
}

impl AttackSpec {
    pub fn label(&self) -> String {
        match &self.kind {
            AttackKind::TypeI => "type1".into(),
            AttackKind::TypeII => "type2".into(),
            AttackKind::TypeIII { p } => format!("type3_{:03}", (p * 100.0).round() as u32),
        }
    }
}

#[derive(Debug)]
pub struct AttackOutcome {
    pub unit: FunctionUnit,
    /// Transform tags actually applied, in application order.
    pub applied: Vec<String>,
}

pub fn attack(f: &FunctionUnit, spec: &AttackSpec) -> Result<AttackOutcome> {
    match spec.kind {
        AttackKind::TypeI => attack_type1(f, spec.seed),
        AttackKind::TypeII => attack_type2(f, spec.seed),
        AttackKind::TypeIII { p } => attack_type3(f, p, spec.seed),
    }
}

// ---- text surgery ----

#[derive(Debug, Clone)]
struct Edit {
    span: Span,
    text: String,
    tag: String,
}

fn overlaps(a: Span, b: Span) -> bool {
    a.start < b.end && b.start < a.end
}

fn apply_edits(src: &str, edits: &[Edit]) -> String {
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by(|a, b| b.span.start.cmp(&a.span.start).then(b.span.end.cmp(&a.span.end)));
    let mut out = src.to_string();
    for e in sorted {
        out.replace_range(e.span.start..e.span.end, &e.text);
    }
    out
}

/// Apply as many edits as reparse cleanly, dropping from the back on
/// failure. Returns the new unit plus the surviving tags.
fn splice(f: &FunctionUnit, mut edits: Vec<Edit>) -> (FunctionUnit, Vec<String>) {
    while !edits.is_empty() {
        let text = apply_edits(&f.source, &edits);
        if let Ok(mut unit) = parse_function(&text, &f.language) {
            if !unit.has_parse_errors() {
                unit.id = f.id.clone();
                return (unit, edits.iter().map(|e| e.tag.clone()).collect());
            }
        }
        edits.pop();
    }
    (f.clone(), vec![])
}

fn node_text<'a>(f: &'a FunctionUnit, n: NodeId) -> &'a str {
    let span = f.tree.node(n).span;
    &f.source[span.start..span.end]
}

fn leaf_text<'a>(f: &'a FunctionUnit, n: NodeId) -> Option<&'a str> {
    f.node_text(n)
}

fn is_leaf_with(f: &FunctionUnit, n: NodeId, text: &str) -> bool {
    leaf_text(f, n) == Some(text)
}

fn subtree_has_kind(f: &FunctionUnit, n: NodeId, kinds: &[NodeKind]) -> bool {
    f.tree.descendants(n).iter().any(|&d| kinds.contains(&f.tree.node(d).kind))
}

fn plain_identifier(f: &FunctionUnit, n: NodeId) -> Option<&str> {
    let node = f.tree.node(n);
    if node.kind == NodeKind::IdentifierLeaf {
        f.node_text(n)
    } else {
        None
    }
}

// ---- Type I ----

/// Statement-position increment variants: all forms a statement `i++;`
/// can take without changing meaning. `stmt` carries the semicolon.
fn increment_variants(f: &FunctionUnit, expr: NodeId, stmt: bool) -> Option<(String, Vec<String>)> {
    let node = f.tree.node(expr);
    let (var, plus, current) = match node.kind {
        NodeKind::UpdateExpression => {
            let kids = &node.children;
            if kids.len() != 2 {
                return None;
            }
            let (op_n, target) = if f.tree.node(kids[0]).kind == NodeKind::IdentifierLeaf {
                (kids[1], kids[0])
            } else {
                (kids[0], kids[1])
            };
            let var = plain_identifier(f, target)?.to_string();
            let plus = leaf_text(f, op_n)? == "++";
            (var, plus, "update")
        }
        NodeKind::Assignment => {
            let kids = &node.children;
            if kids.len() != 3 {
                return None;
            }
            let var = plain_identifier(f, kids[0])?.to_string();
            let op = leaf_text(f, kids[1])?;
            match op {
                "+=" | "-=" => {
                    if node_text(f, kids[2]).trim() != "1" {
                        return None;
                    }
                    (var, op == "+=", "compound")
                }
                "=" => {
                    let rhs = f.tree.node(kids[2]);
                    if rhs.kind != NodeKind::BinaryExpression || rhs.children.len() != 3 {
                        return None;
                    }
                    let lhs2 = plain_identifier(f, rhs.children[0])?;
                    if lhs2 != var {
                        return None;
                    }
                    let bop = leaf_text(f, rhs.children[1])?;
                    if bop != "+" && bop != "-" {
                        return None;
                    }
                    if node_text(f, rhs.children[2]).trim() != "1" {
                        return None;
                    }
                    (var, bop == "+", "spelled")
                }
                _ => return None,
            }
        }
        _ => return None,
    };
    let semi = if stmt { ";" } else { "" };
    let (upd, comp, spelled) = if plus {
        (format!("{var}++{semi}"), format!("{var} += 1{semi}"), format!("{var} = {var} + 1{semi}"))
    } else {
        (format!("{var}--{semi}"), format!("{var} -= 1{semi}"), format!("{var} = {var} - 1{semi}"))
    };
    let variants = match current {
        "update" => vec![comp, spelled],
        "compound" => vec![upd, spelled],
        _ => vec![upd, comp],
    };
    Some((var, variants))
}

/// Children of a for statement partitioned into init statements, condition
/// text, update expressions, and body.
struct ForParts {
    init_stmts: Vec<String>,
    cond: String,
    updates: Vec<String>,
    body: NodeId,
}

fn for_parts(f: &FunctionUnit, for_node: NodeId) -> Option<ForParts> {
    let node = f.tree.node(for_node);
    if node.kind != NodeKind::ForStatement {
        return None;
    }
    let kids = &node.children;
    let open = kids.iter().position(|&k| is_leaf_with(f, k, "("))?;
    let close = kids.iter().rposition(|&k| is_leaf_with(f, k, ")"))?;
    let body = *kids.get(close + 1)?;

    let mut init_stmts = Vec::new();
    let mut i = open + 1;
    if f.tree.node(kids[i]).kind == NodeKind::LocalVariableDeclaration {
        init_stmts.push(node_text(f, kids[i]).to_string());
        i += 1;
    } else if is_leaf_with(f, kids[i], ";") {
        i += 1; // no init
    } else {
        while !is_leaf_with(f, kids[i], ";") {
            if !is_leaf_with(f, kids[i], ",") {
                init_stmts.push(format!("{};", node_text(f, kids[i])));
            }
            i += 1;
        }
        i += 1; // the init semicolon
    }

    let mut cond = String::from("true");
    if !is_leaf_with(f, kids[i], ";") {
        cond = node_text(f, kids[i]).to_string();
        i += 1;
    }
    if !is_leaf_with(f, kids[i], ";") {
        return None;
    }
    i += 1;

    let mut updates = Vec::new();
    while i < close {
        if !is_leaf_with(f, kids[i], ",") {
            updates.push(format!("{};", node_text(f, kids[i])));
        }
        i += 1;
    }
    Some(ForParts { init_stmts, cond, updates, body })
}

fn body_inner(f: &FunctionUnit, body: NodeId) -> String {
    let node = f.tree.node(body);
    if node.kind == NodeKind::Block {
        let text = node_text(f, body);
        text[1..text.len() - 1].trim_matches('\n').to_string()
    } else {
        node_text(f, body).to_string()
    }
}

fn for_to_while(f: &FunctionUnit, for_node: NodeId) -> Option<String> {
    let parts = for_parts(f, for_node)?;
    // continue would skip the relocated update and change meaning
    if subtree_has_kind(f, parts.body, &[NodeKind::ContinueStatement]) {
        return None;
    }
    let mut out = String::from("{\n");
    for s in &parts.init_stmts {
        out.push_str(s);
        out.push('\n');
    }
    out.push_str(&format!("while ({}) {{\n", parts.cond));
    out.push_str(&body_inner(f, parts.body));
    out.push('\n');
    for u in &parts.updates {
        out.push_str(u);
        out.push('\n');
    }
    out.push_str("}\n}");
    Some(out)
}

/// if (A) { if (B) S }  with no elses  ->  if ((A) && (B)) S
fn nested_if_merge(f: &FunctionUnit, if_node: NodeId) -> Option<String> {
    let outer = f.tree.node(if_node);
    if outer.kind != NodeKind::IfStatement || outer.children.len() != 5 {
        return None;
    }
    let cond_a = node_text(f, outer.children[2]);
    let then = outer.children[4];
    let inner = match f.tree.node(then).kind {
        NodeKind::IfStatement => then,
        NodeKind::Block => {
            let stmts: Vec<NodeId> = f
                .tree
                .children(then)
                .filter(|&c| f.tree.node(c).token.is_none())
                .collect();
            if stmts.len() != 1 || f.tree.node(stmts[0]).kind != NodeKind::IfStatement {
                return None;
            }
            stmts[0]
        }
        _ => return None,
    };
    let inner_node = f.tree.node(inner);
    if inner_node.children.len() != 5 {
        return None; // inner else would change meaning
    }
    let cond_b = node_text(f, inner_node.children[2]);
    let inner_then = node_text(f, inner_node.children[4]);
    Some(format!("if (({cond_a}) && ({cond_b})) {inner_then}"))
}

/// if (A && B) S  with no else  ->  if (A) { if (B) S }
fn if_split(f: &FunctionUnit, if_node: NodeId) -> Option<String> {
    let node = f.tree.node(if_node);
    if node.kind != NodeKind::IfStatement || node.children.len() != 5 {
        return None;
    }
    let cond = f.tree.node(node.children[2]);
    if cond.kind != NodeKind::BinaryExpression || cond.children.len() != 3 {
        return None;
    }
    if leaf_text(f, cond.children[1]) != Some("&&") {
        return None;
    }
    let a = node_text(f, cond.children[0]);
    let b = node_text(f, cond.children[2]);
    let then = node_text(f, node.children[4]);
    Some(format!("if ({a}) {{ if ({b}) {then} }}"))
}

/// Equality chain `if (x == L1) S1 else if (x == L2) S2 else S3` with one
/// identifier subject and integer labels.
fn if_to_switch(f: &FunctionUnit, if_node: NodeId) -> Option<String> {
    let mut subject: Option<String> = None;
    let mut cases: Vec<(String, NodeId)> = Vec::new();
    let mut default: Option<NodeId> = None;
    let mut cur = if_node;
    loop {
        let node = f.tree.node(cur);
        if node.kind != NodeKind::IfStatement {
            return None;
        }
        let cond = f.tree.node(node.children[2]);
        if cond.kind != NodeKind::BinaryExpression
            || cond.children.len() != 3
            || leaf_text(f, cond.children[1]) != Some("==")
        {
            return None;
        }
        let (l, r) = (cond.children[0], cond.children[2]);
        let (var, lit) = if f.tree.node(l).kind == NodeKind::IdentifierLeaf
            && f.tree.node(r).kind == NodeKind::NumberLeaf
        {
            (plain_identifier(f, l)?, node_text(f, r))
        } else if f.tree.node(r).kind == NodeKind::IdentifierLeaf
            && f.tree.node(l).kind == NodeKind::NumberLeaf
        {
            (plain_identifier(f, r)?, node_text(f, l))
        } else {
            return None;
        };
        match &subject {
            None => subject = Some(var.to_string()),
            Some(s) if s == var => {}
            _ => return None,
        }
        cases.push((lit.to_string(), node.children[4]));
        match node.children.len() {
            5 => break,
            7 => {
                let tail = node.children[6];
                if f.tree.node(tail).kind == NodeKind::IfStatement {
                    cur = tail;
                } else {
                    default = Some(tail);
                    break;
                }
            }
            _ => return None,
        }
    }
    if cases.len() < 2 {
        return None;
    }
    // an inlined break/continue would rebind to the switch
    for (_, body) in &cases {
        if subtree_has_kind(f, *body, &[NodeKind::BreakStatement, NodeKind::ContinueStatement]) {
            return None;
        }
    }
    if let Some(d) = default {
        if subtree_has_kind(f, d, &[NodeKind::BreakStatement, NodeKind::ContinueStatement]) {
            return None;
        }
    }

    let mut out = format!("switch ({}) {{\n", subject.unwrap());
    for (lit, body) in &cases {
        out.push_str(&format!("case {lit}:\n{}\nbreak;\n", body_inner(f, *body)));
    }
    if let Some(d) = default {
        out.push_str(&format!("default:\n{}\nbreak;\n", body_inner(f, d)));
    }
    out.push('}');
    Some(out)
}

pub fn attack_type1(f: &FunctionUnit, seed: u64) -> Result<AttackOutcome> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut sites: Vec<(Span, Vec<String>, &'static str)> = Vec::new();

    for n in f.tree.descendants(f.tree.root) {
        let node = f.tree.node(n);
        match node.kind {
            NodeKind::ExpressionStatement => {
                if let Some(&expr) = node.children.first() {
                    if let Some((_, variants)) = increment_variants(f, expr, true) {
                        sites.push((node.span, variants, "incr_style"));
                    }
                }
            }
            NodeKind::ForStatement => {
                // the update slot sits between the last `;` child and `)`
                if let Some(semi) = node
                    .children
                    .iter()
                    .rposition(|&k| is_leaf_with(f, k, ";"))
                {
                    for &k in &node.children[semi + 1..] {
                        if f.tree.node(k).token.is_none() {
                            if let Some((_, variants)) = increment_variants(f, k, false) {
                                sites.push((f.tree.node(k).span, variants, "incr_style"));
                            }
                        }
                    }
                }
                if let Some(text) = for_to_while(f, n) {
                    sites.push((node.span, vec![text], "for_to_while"));
                }
            }
            NodeKind::IfStatement => {
                if let Some(text) = nested_if_merge(f, n) {
                    sites.push((node.span, vec![text], "if_merge"));
                }
                if let Some(text) = if_split(f, n) {
                    sites.push((node.span, vec![text], "if_split"));
                }
                if let Some(text) = if_to_switch(f, n) {
                    sites.push((node.span, vec![text], "if_to_switch"));
                }
            }
            _ => {}
        }
    }

    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.shuffle(&mut rng);
    let mut chosen: Vec<Edit> = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        let (span, variants, tag) = &sites[i];
        // always take the first shuffled site so applicable inputs change
        if rank > 0 && rng.random::<f64>() > 0.6 {
            continue;
        }
        if chosen.iter().any(|e| overlaps(e.span, *span)) {
            continue;
        }
        let text = variants[rng.random_range(0..variants.len())].clone();
        chosen.push(Edit { span: *span, text, tag: (*tag).to_string() });
    }

    let (unit, applied) = splice(f, chosen);
    Ok(AttackOutcome { unit, applied })
}

// ---- Type II ----

struct DeclInfo {
    ty: String,
    /// (name, full declarator text, initializer text)
    declarators: Vec<(String, String, Option<String>)>,
}

fn decl_info(f: &FunctionUnit, n: NodeId) -> Option<DeclInfo> {
    let node = f.tree.node(n);
    if node.kind != NodeKind::LocalVariableDeclaration {
        return None;
    }
    // annotated or final declarations do not survive splitting
    if node.children.iter().any(|&c| f.tree.node(c).kind == NodeKind::Modifiers) {
        return None;
    }
    let ty_node = *node.children.first()?;
    if !matches!(
        f.tree.node(ty_node).kind,
        NodeKind::PrimitiveType | NodeKind::ClassType | NodeKind::ArrayType
    ) {
        return None;
    }
    let ty = node_text(f, ty_node).to_string();
    let mut declarators = Vec::new();
    for &c in &node.children {
        let d = f.tree.node(c);
        if d.kind != NodeKind::VariableDeclarator {
            continue;
        }
        let name = plain_identifier(f, *d.children.first()?)?.to_string();
        // `int a[] = ...` stays out of scope for splitting
        if d.children.iter().any(|&k| is_leaf_with(f, k, "[")) {
            return None;
        }
        let init = d.children.iter().position(|&k| is_leaf_with(f, k, "=")).map(|eq| {
            let init_node = d.children[eq + 1];
            node_text(f, init_node).to_string()
        });
        // array initializers only parse in a declaration
        if let Some(eq) = d.children.iter().position(|&k| is_leaf_with(f, k, "=")) {
            if f.tree.node(d.children[eq + 1]).kind == NodeKind::ArrayInitializer {
                return None;
            }
        }
        declarators.push((name, node_text(f, c).to_string(), init));
    }
    if declarators.is_empty() {
        return None;
    }
    Some(DeclInfo { ty, declarators })
}

fn in_block(f: &FunctionUnit, n: NodeId) -> bool {
    f.tree.node(n).parent.map(|p| f.tree.node(p).kind == NodeKind::Block).unwrap_or(false)
}

fn all_identifier_texts(f: &FunctionUnit) -> HashSet<String> {
    f.tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Identifier)
        .map(|t| t.text.clone())
        .collect()
}

fn declared_types(f: &FunctionUnit) -> HashMap<String, String> {
    let mut out = HashMap::new();
    for n in f.tree.descendants(f.tree.root) {
        if let Some(info) = decl_info(f, n) {
            for (name, _, _) in &info.declarators {
                out.insert(name.clone(), info.ty.clone());
            }
        }
    }
    out
}

pub fn attack_type2(f: &FunctionUnit, seed: u64) -> Result<AttackOutcome> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut sites: Vec<(Span, String, &'static str)> = Vec::new();
    let types = declared_types(f);
    let taken = all_identifier_texts(f);
    let mut tmp_counter = 0usize;

    let nodes = f.tree.descendants(f.tree.root);
    for &n in &nodes {
        let node = f.tree.node(n);
        match node.kind {
            NodeKind::LocalVariableDeclaration if in_block(f, n) => {
                if let Some(info) = decl_info(f, n) {
                    if info.declarators.len() >= 2 {
                        // int i, j; -> int i; int j;
                        let split = info
                            .declarators
                            .iter()
                            .map(|(_, text, _)| format!("{} {};", info.ty, text))
                            .collect::<Vec<_>>()
                            .join(" ");
                        sites.push((node.span, split, "multi_split"));
                    } else if let Some((name, _, Some(init))) = info.declarators.first().map(
                        |(n2, t, i2)| (n2.clone(), t.clone(), i2.clone()),
                    ) {
                        // int i = 0; -> int i; i = 0;
                        let split = format!("{} {name}; {name} = {init};", info.ty);
                        sites.push((node.span, split, "decl_split"));
                    }
                }
            }
            NodeKind::Block => {
                // merge `T a; a = e;` and `T a; T b;` pairs
                let stmts: Vec<NodeId> =
                    f.tree.children(n).filter(|&c| f.tree.node(c).token.is_none()).collect();
                for w in stmts.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    let da = decl_info(f, a);
                    let na = f.tree.node(a);
                    let nb = f.tree.node(b);
                    let pair_span = Span { start: na.span.start, end: nb.span.end };
                    if let Some(da) = &da {
                        if da.declarators.len() == 1 && da.declarators[0].2.is_none() {
                            // next statement `a = expr;` completes the decl
                            if nb.kind == NodeKind::ExpressionStatement {
                                if let Some(&expr) = nb.children.first() {
                                    let en = f.tree.node(expr);
                                    if en.kind == NodeKind::Assignment && en.children.len() == 3 {
                                        let lhs = plain_identifier(f, en.children[0]);
                                        let op = leaf_text(f, en.children[1]);
                                        if lhs == Some(da.declarators[0].0.as_str())
                                            && op == Some("=")
                                        {
                                            let init = node_text(f, en.children[2]);
                                            let text = format!(
                                                "{} {} = {};",
                                                da.ty, da.declarators[0].0, init
                                            );
                                            sites.push((pair_span, text, "decl_merge"));
                                        }
                                    }
                                }
                            }
                        }
                        if let Some(db) = decl_info(f, b) {
                            if da.ty == db.ty
                                && da.declarators.len() == 1
                                && db.declarators.len() == 1
                            {
                                let text = format!(
                                    "{} {}, {};",
                                    da.ty, da.declarators[0].1, db.declarators[0].1
                                );
                                sites.push((pair_span, text, "multi_merge"));
                            }
                        }
                    }
                }
            }
            NodeKind::ExpressionStatement => {
                // x = <int expr>; -> int tmpN = <expr>; x = tmpN;
                if let Some(&expr) = node.children.first() {
                    let en = f.tree.node(expr);
                    if en.kind == NodeKind::Assignment && en.children.len() == 3 {
                        let lhs = plain_identifier(f, en.children[0]);
                        let op = leaf_text(f, en.children[1]);
                        let rhs = f.tree.node(en.children[2]);
                        let rhs_ok = matches!(
                            rhs.kind,
                            NodeKind::BinaryExpression | NodeKind::UpdateExpression
                        );
                        if let (Some(x), Some("="), true) = (lhs, op, rhs_ok) {
                            if types.get(x).map(|t| t == "int").unwrap_or(false) {
                                let mut tmp = format!("tmp{tmp_counter}");
                                while taken.contains(&tmp) {
                                    tmp_counter += 1;
                                    tmp = format!("tmp{tmp_counter}");
                                }
                                tmp_counter += 1;
                                let init = node_text(f, en.children[2]);
                                let text = format!("int {tmp} = {init}; {x} = {tmp};");
                                sites.push((node.span, text, "temp_var"));
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }

    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.shuffle(&mut rng);
    let mut chosen: Vec<Edit> = Vec::new();
    for &i in &order {
        if rng.random::<f64>() > 0.5 {
            continue;
        }
        let (span, text, tag) = &sites[i];
        if chosen.iter().any(|e| overlaps(e.span, *span)) {
            continue;
        }
        chosen.push(Edit { span: *span, text: text.clone(), tag: (*tag).to_string() });
    }
    let (mut unit, mut applied) = splice(f, chosen);

    // restyle pass: re-render a few names in another style, same subtokens
    let spec = default_grammars().get(&f.language)?;
    let ordinals: Vec<usize> = list_variables(&unit).iter().map(|b| b.ordinal).collect();
    for ordinal in ordinals {
        if rng.random::<f64>() > 0.5 {
            continue;
        }
        let style = *[
            NameStyle::Camel,
            NameStyle::Pascal,
            NameStyle::Snake,
            NameStyle::UnderscoreInit,
        ]
        .iter()
        .nth(rng.random_range(0..4))
        .unwrap();
        let vars = list_variables(&unit);
        let Some(b) = vars.into_iter().find(|b| b.ordinal == ordinal) else { continue };
        let subs = split_name(&b.name).subtokens;
        if subs.is_empty() {
            continue;
        }
        let new_name = render(&subs, style);
        if new_name == b.name {
            continue;
        }
        if let Ok(next) = rename_variable(&unit, &b, &new_name, spec) {
            unit = next;
            applied.push(format!("restyle_{}", style_tag(style)));
        }
    }

    Ok(AttackOutcome { unit, applied })
}

fn style_tag(style: NameStyle) -> &'static str {
    match style {
        NameStyle::Camel => "camel",
        NameStyle::Pascal => "pascal",
        NameStyle::Snake => "snake",
        NameStyle::UnderscoreInit => "underscore",
    }
}

// ---- Type III ----

/// Rename ceil(p * V) variables, chosen by a seeded permutation, to fresh
/// `var{k}` names. The permutation depends only on the seed and variable
/// count, so the renamed sets nest as p grows.
pub fn attack_type3(f: &FunctionUnit, p: f64, seed: u64) -> Result<AttackOutcome> {
    assert!(p > 0.0 && p <= 1.0, "rename fraction must be in (0, 1]");
    let spec = default_grammars().get(&f.language)?;
    let vars = list_variables(f);
    if vars.is_empty() {
        return Ok(AttackOutcome { unit: f.clone(), applied: vec![] });
    }
    let v = vars.len();
    let n_rename = ((p * v as f64).ceil() as usize).min(v);

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = vars.iter().map(|b| b.ordinal).collect();
    perm.shuffle(&mut rng);
    let mut targets: Vec<usize> = perm[..n_rename].to_vec();
    targets.sort_unstable();

    let mut unit = f.clone();
    let mut applied = Vec::new();
    let mut k = 0usize;
    for ordinal in targets {
        let vars = list_variables(&unit);
        let Some(b) = vars.into_iter().find(|b| b.ordinal == ordinal) else { continue };
        loop {
            let candidate = format!("var{k}");
            k += 1;
            match rename_variable(&unit, &b, &candidate, spec) {
                Ok(next) => {
                    unit = next;
                    applied.push(format!("rename_{ordinal}"));
                    break;
                }
                Err(_) => continue,
            }
        }
    }
    Ok(AttackOutcome { unit, applied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_corpus;
    use crate::lang::subtokenize;
    use std::collections::BTreeMap;

    fn unit(src: &str) -> FunctionUnit {
        parse_function(src, "java").unwrap()
    }

    /// Distinct identifier names. Type I may duplicate an occurrence
    /// (`i++` -> `i = i + 1`) but never introduces or renames a name.
    fn identifier_names(f: &FunctionUnit) -> BTreeMap<String, ()> {
        let mut out = BTreeMap::new();
        for t in &f.tokens {
            if t.kind == TokenKind::Identifier {
                out.insert(t.text.clone(), ());
            }
        }
        out
    }

    #[test]
    fn increment_style_rotates_and_keeps_identifiers() {
        let f = unit("int f(int i) { i++; return i; }");
        let mut seen = HashSet::new();
        for seed in 0..20 {
            let out = attack_type1(&f, seed).unwrap();
            assert!(!out.unit.has_parse_errors());
            if out.applied.iter().any(|t| t == "incr_style") {
                assert!(!out.unit.source.contains("i++;"));
                assert!(
                    out.unit.source.contains("i += 1;") || out.unit.source.contains("i = i + 1;")
                );
                seen.insert(out.unit.source.clone());
            }
        }
        assert!(seen.len() >= 2, "both rewrite targets should appear across seeds");
    }

    #[test]
    fn for_becomes_while_preserving_identifiers() {
        let f = unit(
            "int f(int n) { int acc = 0; for (int i = 0; i < n; i++) { acc += i; } return acc; }",
        );
        let before = identifier_multiset(&f);
        let mut hit = false;
        for seed in 0..40 {
            let out = attack_type1(&f, seed).unwrap();
            assert!(!out.unit.has_parse_errors());
            assert_eq!(identifier_multiset(&out.unit), before, "seed {seed}");
            if out.applied.iter().any(|t| t == "for_to_while") {
                hit = true;
                assert!(out.unit.source.contains("while (i < n)"));
                assert!(out.unit.source.contains("int i = 0;"));
                assert!(out.unit.source.contains("i++;"));
                assert!(!out.unit.source.contains("for ("));
            }
        }
        assert!(hit, "for_to_while never selected over 40 seeds");
    }

    #[test]
    fn function_without_sites_is_unchanged() {
        let f = unit("int f(int a, int b) { int s = a + b; return s; }");
        let out = attack_type1(&f, 7).unwrap();
        assert_eq!(out.unit.source, f.source);
        assert!(out.applied.is_empty());
    }

    #[test]
    fn nested_ifs_merge_and_split() {
        let merge_src = unit("int f(int a, int b) { if (a > 0) { if (b > 0) { a = b; } } return a; }");
        let mut merged = false;
        for seed in 0..30 {
            let out = attack_type1(&merge_src, seed).unwrap();
            if out.applied.iter().any(|t| t == "if_merge") {
                merged = true;
                assert!(out.unit.source.contains("(a > 0) && (b > 0)"));
            }
        }
        assert!(merged);

        let split_src = unit("int f(int a, int b) { if (a > 0 && b > 0) { a = b; } return a; }");
        let mut split = false;
        for seed in 0..30 {
            let out = attack_type1(&split_src, seed).unwrap();
            if out.applied.iter().any(|t| t == "if_split") {
                split = true;
                assert!(out.unit.source.contains("if (a > 0) { if (b > 0)"));
            }
        }
        assert!(split);
    }

    #[test]
    fn equality_chain_becomes_switch() {
        let f = unit(
            "int f(int mode) { int r = 0; if (mode == 0) { r = 1; } else if (mode == 1) { r = 5; } else { r = 9; } return r; }",
        );
        let mut hit = false;
        for seed in 0..40 {
            let out = attack_type1(&f, seed).unwrap();
            assert!(!out.unit.has_parse_errors());
            if out.applied.iter().any(|t| t == "if_to_switch") {
                hit = true;
                assert!(out.unit.source.contains("switch (mode)"));
                assert!(out.unit.source.contains("case 0:"));
                assert!(out.unit.source.contains("default:"));
            }
        }
        assert!(hit, "if_to_switch never selected");
    }

    #[test]
    fn type2_preserves_every_variable_subtoken_multiset() {
        let f = unit(
            "int f(int firstValue) { int itemCount = 0; int rowTotal; rowTotal = firstValue; int a, b; itemCount = rowTotal + 1; return itemCount; }",
        );
        let before: Vec<Vec<String>> =
            list_variables(&f).iter().map(|b| subtokenize(&b.name)).collect();
        for seed in 0..25 {
            let out = attack_type2(&f, seed).unwrap();
            assert!(!out.unit.has_parse_errors(), "seed {seed}");
            let vars = list_variables(&out.unit);
            // temporaries may add a variable; pair existing ones by ordinal
            for (ordinal, want) in before.iter().enumerate() {
                let b = vars.iter().find(|b| b.ordinal == ordinal).unwrap();
                assert_eq!(&subtokenize(&b.name), want, "seed {seed}, ordinal {ordinal}");
            }
        }
    }

    #[test]
    fn type2_splits_and_merges_declarations() {
        let f = unit("int f() { int i, j; int k = 4; int m; m = k; return m; }");
        let mut tags = HashSet::new();
        for seed in 0..60 {
            let out = attack_type2(&f, seed).unwrap();
            for t in &out.applied {
                tags.insert(t.clone());
            }
            if out.applied.iter().any(|t| t == "multi_split") {
                assert!(out.unit.source.contains("int i; int j;"));
            }
            if out.applied.iter().any(|t| t == "decl_split") {
                assert!(out.unit.source.contains("int k; k = 4;"));
            }
            if out.applied.iter().any(|t| t == "decl_merge") {
                assert!(out.unit.source.contains("int m = k;"));
            }
        }
        assert!(tags.contains("multi_split"), "tags seen: {tags:?}");
        assert!(tags.contains("decl_split"), "tags seen: {tags:?}");
        assert!(tags.contains("decl_merge"), "tags seen: {tags:?}");
        assert!(tags.iter().any(|t| t.starts_with("restyle_")), "tags seen: {tags:?}");
    }

    #[test]
    fn type2_introduces_typed_temporaries() {
        let f = unit("int f(int x, int y) { int acc = 0; acc = x + y; return acc; }");
        let mut hit = false;
        for seed in 0..40 {
            let out = attack_type2(&f, seed).unwrap();
            if out.applied.iter().any(|t| t == "temp_var") {
                hit = true;
                assert!(out.unit.source.contains("int tmp0 = x + y;"));
                assert!(out.unit.source.contains("acc = tmp0;"));
            }
        }
        assert!(hit, "temp_var never selected");
    }

    #[test]
    fn type3_renames_the_requested_fraction_with_nested_sets() {
        let f = unit(
            "int f() { int a = 1; int b = 2; int c = 3; int d = 4; int e = 5; int g = 6; int h = 7; int i = 8; return a; }",
        );
        let v = list_variables(&f).len();
        assert_eq!(v, 8);

        let renamed_at = |p: f64| -> HashSet<usize> {
            let out = attack_type3(&f, p, 99).unwrap();
            list_variables(&out.unit)
                .iter()
                .filter(|b| b.name.starts_with("var"))
                .map(|b| b.ordinal)
                .collect()
        };
        let s25 = renamed_at(0.25);
        let s50 = renamed_at(0.5);
        let s75 = renamed_at(0.75);
        let s100 = renamed_at(1.0);
        assert_eq!(s25.len(), 2);
        assert_eq!(s50.len(), 4);
        assert_eq!(s75.len(), 6);
        assert_eq!(s100.len(), 8);
        assert!(s25.is_subset(&s50));
        assert!(s50.is_subset(&s75));
        assert!(s75.is_subset(&s100));
    }

    #[test]
    fn type3_on_single_variable_renames_exactly_one() {
        let f = unit("int f() { int solo = 1; return solo; }");
        let out = attack_type3(&f, 1.0, 5).unwrap();
        let vars = list_variables(&out.unit);
        assert_eq!(vars.len(), 1);
        assert_eq!(vars[0].name, "var0");
    }

    #[test]
    fn attacks_are_deterministic_under_a_seed() {
        let f = unit(
            "int f(int n) { int acc = 0; for (int i = 0; i < n; i++) { if (acc > 3) { acc -= 1; } acc += i; } return acc; }",
        );
        for kind in [AttackKind::TypeI, AttackKind::TypeII, AttackKind::TypeIII { p: 0.5 }] {
            let spec = AttackSpec { kind, seed: 1234 };
            let a = attack(&f, &spec).unwrap();
            let b = attack(&f, &spec).unwrap();
            assert_eq!(a.unit.source, b.unit.source);
            assert_eq!(a.applied, b.applied);
        }
    }

    #[test]
    fn every_attacked_corpus_function_reparses_cleanly() {
        let entries = generate_corpus(30, 77);
        for (i, e) in entries.iter().enumerate() {
            let f = parse_function(&e.code, "java").unwrap();
            let seed = 1000 + i as u64;
            let t1 = attack_type1(&f, seed).unwrap();
            assert!(!t1.unit.has_parse_errors(), "type1 broke {}", e.id);
            assert_eq!(
                identifier_multiset(&t1.unit),
                identifier_multiset(&f),
                "type1 touched identifiers in {}",
                e.id
            );
            let t2 = attack_type2(&f, seed).unwrap();
            assert!(!t2.unit.has_parse_errors(), "type2 broke {}", e.id);
            let t3 = attack_type3(&f, 0.5, seed).unwrap();
            assert!(!t3.unit.has_parse_errors(), "type3 broke {}", e.id);
        }
    }
}
