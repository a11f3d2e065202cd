//! Per-variable context graphs: the union of the AST subtrees of every
//! statement mentioning the variable, with all occurrence leaves collapsed
//! into one target node. Three forward relations (AST, NEXT_TOKEN,
//! SELF_LOOP), each complemented by a backward variant.

use std::collections::{BTreeSet, HashMap, HashSet};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::lang::ast::{NodeId, NodeKind, TokenKind};
use crate::lang::grammar::{default_grammars, LanguageSpec};
use crate::lang::{FunctionUnit, VariableBinding};
use crate::vocab::{Vocabulary, MASK};

/// Hard ceiling on merged-graph size; past it the farthest statements
/// (by token distance from the variable) are dropped.
pub const MAX_GRAPH_NODES: usize = 512;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    Ast,
    NextToken,
    SelfLoop,
    AstRev,
    NextTokenRev,
    SelfLoopRev,
}

impl Relation {
    pub const COUNT: usize = 6;

    pub fn id(self) -> usize {
        match self {
            Relation::Ast => 0,
            Relation::NextToken => 1,
            Relation::SelfLoop => 2,
            Relation::AstRev => 3,
            Relation::NextTokenRev => 4,
            Relation::SelfLoopRev => 5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Relation::Ast => "AST",
            Relation::NextToken => "NEXT_TOKEN",
            Relation::SelfLoop => "SELF_LOOP",
            Relation::AstRev => "AST_REV",
            Relation::NextTokenRev => "NEXT_TOKEN_REV",
            Relation::SelfLoopRev => "SELF_LOOP_REV",
        }
    }

    /// Involution pairing each relation with its backward complement.
    pub fn reverse(self) -> Relation {
        match self {
            Relation::Ast => Relation::AstRev,
            Relation::NextToken => Relation::NextTokenRev,
            Relation::SelfLoop => Relation::SelfLoopRev,
            Relation::AstRev => Relation::Ast,
            Relation::NextTokenRev => Relation::NextToken,
            Relation::SelfLoopRev => Relation::SelfLoop,
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub rel: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub kind: NodeKind,
    /// Token text for leaves, empty for interior nodes.
    pub text: String,
    pub is_target: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableContextGraph {
    pub nodes: Vec<GraphNode>,
    /// Sorted and deduplicated; every forward edge has its backward twin.
    pub edges: Vec<Edge>,
    pub target: usize,
}

impl VariableContextGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Incoming (src, relation) pairs per node; the attention neighborhood.
    pub fn in_edges(&self) -> Vec<Vec<(usize, Relation)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.dst].push((e.src, e.rel));
        }
        adj
    }

    /// Structural invariants: one target, backward completeness, target
    /// self-loop, connectivity, indices in range.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let targets = self.nodes.iter().filter(|x| x.is_target).count();
        if targets != 1 || !self.nodes[self.target].is_target {
            return Err(Error::SchemaError(format!(
                "graph must have exactly one target node, found {targets}"
            )));
        }
        let set: HashSet<Edge> = self.edges.iter().copied().collect();
        for e in &self.edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::SchemaError(format!(
                    "edge ({}, {}) out of range for {n} nodes",
                    e.src, e.dst
                )));
            }
            let back = Edge { src: e.dst, dst: e.src, rel: e.rel.reverse() };
            if !set.contains(&back) {
                return Err(Error::SchemaError(format!(
                    "missing backward edge for ({}, {}, {})",
                    e.src,
                    e.dst,
                    e.rel.label()
                )));
            }
        }
        let loop_edge = Edge { src: self.target, dst: self.target, rel: Relation::SelfLoop };
        if !set.contains(&loop_edge) {
            return Err(Error::IsolatedNode(self.target));
        }
        // connectivity over the undirected view
        let mut seen = vec![false; n];
        let mut stack = vec![self.target];
        seen[self.target] = true;
        while let Some(v) = stack.pop() {
            for e in &self.edges {
                let w = if e.src == v {
                    e.dst
                } else if e.dst == v {
                    e.src
                } else {
                    continue;
                };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::IsolatedNode(i));
        }
        Ok(())
    }

    /// Debug/dataset dump: {nodes, edges:[[src, dst, rel]...], target}.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "nodes": self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, nd)| json!({
                    "id": i,
                    "kind": nd.kind.label(),
                    "text": nd.text,
                    "target": nd.is_target,
                }))
                .collect::<Vec<_>>(),
            "edges": self
                .edges
                .iter()
                .map(|e| json!([e.src, e.dst, e.rel.label()]))
                .collect::<Vec<_>>(),
            "target": self.target,
        })
    }
}

pub fn build_context_graph(
    f: &FunctionUnit,
    b: &VariableBinding,
) -> Result<VariableContextGraph> {
    let spec = default_grammars().get(&f.language)?;
    build_context_graph_with_spec(f, b, spec)
}

pub fn build_context_graph_with_spec(
    f: &FunctionUnit,
    b: &VariableBinding,
    spec: &LanguageSpec,
) -> Result<VariableContextGraph> {
    let occ_set: HashSet<NodeId> = b.occurrences.iter().copied().collect();
    if occ_set.is_empty() {
        return Err(Error::EmptyContext(b.name.clone()));
    }

    // Smallest enclosing statement per occurrence; occurrences outside any
    // statement contribute nothing.
    let mut stmts: BTreeSet<NodeId> = BTreeSet::new();
    for &occ in &b.occurrences {
        if let Some(s) = f.tree.ancestor_where(occ, |n| spec.is_statement_kind(n.kind)) {
            stmts.insert(s);
        }
    }
    if stmts.is_empty() {
        return Err(Error::EmptyContext(b.name.clone()));
    }

    let anchor_tok = f
        .tree
        .node(*b.occurrences.first().expect("occurrence checked above"))
        .token
        .expect("occurrences are leaves");

    struct Cand {
        stmt: NodeId,
        dist: usize,
        desc: Vec<NodeId>,
    }
    let mut cands: Vec<Cand> = stmts
        .iter()
        .map(|&s| {
            let desc = f.tree.descendants(s);
            let dist = desc
                .iter()
                .filter(|n| occ_set.contains(n))
                .map(|&o| {
                    let t = f.tree.node(o).token.expect("occurrences are leaves");
                    t.abs_diff(anchor_tok)
                })
                .min()
                .expect("every selected statement contains an occurrence");
            Cand { stmt: s, dist, desc }
        })
        .collect();
    cands.sort_by_key(|c| (c.dist, c.stmt));

    // Keep a distance-prefix of statements under the node cap. The nearest
    // statement always survives, even if it alone exceeds the cap.
    let mut kept_nodes: BTreeSet<NodeId> = BTreeSet::new();
    let mut kept_stmts: Vec<usize> = Vec::new();
    for (ci, c) in cands.iter().enumerate() {
        let mut union = kept_nodes.clone();
        union.extend(c.desc.iter().copied());
        let occs_in = union.iter().filter(|n| occ_set.contains(n)).count();
        let merged_size = union.len() - occs_in + 1;
        if kept_stmts.is_empty() || merged_size <= MAX_GRAPH_NODES {
            kept_nodes = union;
            kept_stmts.push(ci);
        } else {
            break;
        }
    }

    // One merged target node: the source-first kept occurrence represents
    // them all.
    let kept_occs: Vec<NodeId> = kept_nodes
        .iter()
        .copied()
        .filter(|n| occ_set.contains(n))
        .collect();
    let rep = kept_occs
        .iter()
        .copied()
        .min_by_key(|&o| f.tree.node(o).span.start)
        .expect("kept statements contain at least one occurrence");

    // Canonical node order: source offset, then extent (outer first), then
    // kind, then arena id.
    let mut order: Vec<NodeId> = kept_nodes
        .iter()
        .copied()
        .filter(|&n| !occ_set.contains(&n) || n == rep)
        .collect();
    order.sort_by_key(|&n| {
        let nd = f.tree.node(n);
        (nd.span.start, std::cmp::Reverse(nd.span.end), nd.kind.id(), n)
    });

    let mut gid: HashMap<NodeId, usize> = HashMap::new();
    for (i, &n) in order.iter().enumerate() {
        gid.insert(n, i);
    }
    let target = gid[&rep];
    for &o in &kept_occs {
        gid.insert(o, target);
    }

    let nodes: Vec<GraphNode> = order
        .iter()
        .map(|&n| {
            let nd = f.tree.node(n);
            let text = nd
                .token
                .map(|t| f.token_text(t).to_string())
                .unwrap_or_default();
            GraphNode { kind: nd.kind, text, is_target: n == rep }
        })
        .collect();

    let mut fwd: BTreeSet<Edge> = BTreeSet::new();
    for &n in &kept_nodes {
        for c in f.tree.children(n) {
            // subtree unions are closed under children
            debug_assert!(kept_nodes.contains(&c));
            fwd.insert(Edge { src: gid[&n], dst: gid[&c], rel: Relation::Ast });
        }
    }
    for &ci in &kept_stmts {
        let mut lv: Vec<NodeId> = cands[ci]
            .desc
            .iter()
            .copied()
            .filter(|&n| f.tree.node(n).token.is_some())
            .collect();
        lv.sort_by_key(|&n| f.tree.node(n).token);
        for w in lv.windows(2) {
            fwd.insert(Edge {
                src: gid[&w[0]],
                dst: gid[&w[1]],
                rel: Relation::NextToken,
            });
        }
    }
    fwd.insert(Edge { src: target, dst: target, rel: Relation::SelfLoop });

    let mut edges: Vec<Edge> = Vec::with_capacity(fwd.len() * 2);
    for e in &fwd {
        edges.push(*e);
        edges.push(Edge { src: e.dst, dst: e.src, rel: e.rel.reverse() });
    }
    edges.sort();
    edges.dedup();

    let g = VariableContextGraph { nodes, edges, target };
    debug_assert!(g.validate().is_ok());
    Ok(g)
}

/// Kind-id and subtoken embedding rows; both tables share one feature width.
#[derive(Debug, Clone)]
pub struct EmbeddingTables {
    /// One row per `NodeKind`, indexed by `NodeKind::id()`.
    pub kind: Array2<f64>,
    /// One row per vocabulary entry.
    pub sub: Array2<f64>,
}

impl EmbeddingTables {
    pub fn init<R: rand::Rng>(vocab_len: usize, dim: usize, rng: &mut R) -> EmbeddingTables {
        let mut uni = |rows: usize| {
            let lim = (6.0 / (rows + dim) as f64).sqrt();
            Array2::from_shape_fn((rows, dim), |_| (rng.random::<f64>() * 2.0 - 1.0) * lim)
        };
        EmbeddingTables { kind: uni(NodeKind::all().len()), sub: uni(vocab_len) }
    }

    pub fn feature_dim(&self) -> usize {
        self.kind.ncols()
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Array2<f64>)) {
        f(format!("{prefix}.kind"), &self.kind);
        f(format!("{prefix}.sub"), &self.sub);
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Array2<f64>)) {
        f(format!("{prefix}.kind"), &mut self.kind);
        f(format!("{prefix}.sub"), &mut self.sub);
    }
}

fn leaf_token_kind(kind: NodeKind) -> TokenKind {
    match kind {
        NodeKind::IdentifierLeaf => TokenKind::Identifier,
        NodeKind::KeywordLeaf => TokenKind::Keyword,
        NodeKind::NumberLeaf => TokenKind::Number,
        NodeKind::StringLeaf => TokenKind::Str,
        NodeKind::CharLeaf => TokenKind::Char,
        NodeKind::OperatorLeaf => TokenKind::Operator,
        NodeKind::PunctLeaf => TokenKind::Punct,
        other => unreachable!("not a leaf kind: {other:?}"),
    }
}

/// Per-node feature recipe: the kind-embedding row index plus the subtoken
/// rows whose mean is added for leaves (empty for interior nodes). The
/// target's group is MASK when `mask_target` is set.
pub fn feature_groups(
    g: &VariableContextGraph,
    vocab: &Vocabulary,
    mask_target: bool,
) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut kinds = Vec::with_capacity(g.nodes.len());
    let mut groups = Vec::with_capacity(g.nodes.len());
    for nd in &g.nodes {
        kinds.push(nd.kind.id());
        let ids: Vec<usize> = if !nd.kind.is_leaf_kind() {
            vec![]
        } else if nd.is_target && mask_target {
            vec![MASK as usize]
        } else {
            vocab
                .leaf_ids(leaf_token_kind(nd.kind), &nd.text)
                .into_iter()
                .map(|id| id as usize)
                .collect()
        };
        groups.push(ids);
    }
    (kinds, groups)
}

fn check_table_dims(
    tables: &EmbeddingTables,
    vocab: &Vocabulary,
) -> Result<usize> {
    let dim = tables.kind.ncols();
    if tables.sub.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "kind table width {dim} != subtoken table width {}",
            tables.sub.ncols()
        )));
    }
    if tables.kind.nrows() != NodeKind::all().len() {
        return Err(Error::DimensionMismatch(format!(
            "kind table has {} rows, need {}",
            tables.kind.nrows(),
            NodeKind::all().len()
        )));
    }
    if tables.sub.nrows() != vocab.len() {
        return Err(Error::DimensionMismatch(format!(
            "subtoken table has {} rows, vocabulary has {}",
            tables.sub.nrows(),
            vocab.len()
        )));
    }
    Ok(dim)
}

fn featurize_groups(
    kinds: &[usize],
    groups: &[Vec<usize>],
    tables: &EmbeddingTables,
) -> Array2<f64> {
    let dim = tables.kind.ncols();
    let mut x = Array2::<f64>::zeros((kinds.len(), dim));
    for (i, (&k, ids)) in kinds.iter().zip(groups).enumerate() {
        let mut row: Array1<f64> = tables.kind.row(k).to_owned();
        if !ids.is_empty() {
            let mut acc = Array1::<f64>::zeros(dim);
            for &id in ids {
                acc += &tables.sub.row(id);
            }
            row += &(acc / ids.len() as f64);
        }
        x.row_mut(i).assign(&row);
    }
    x
}

/// Node features: kind embedding, plus the mean subtoken embedding for
/// leaves. With `mask_target` the target's text is replaced by the MASK
/// symbol (embedding side); without it the real text is used (extraction
/// side).
pub fn featurize(
    g: &VariableContextGraph,
    vocab: &Vocabulary,
    tables: &EmbeddingTables,
    mask_target: bool,
) -> Result<Array2<f64>> {
    check_table_dims(tables, vocab)?;
    let (kinds, groups) = feature_groups(g, vocab, mask_target);
    Ok(featurize_groups(&kinds, &groups, tables))
}

/// Extraction-side features with the target's subtokens supplied directly
/// instead of read from the node text. Rename invariance of the topology
/// makes this equivalent to rebuilding the graph from renamed source.
pub fn featurize_override(
    g: &VariableContextGraph,
    vocab: &Vocabulary,
    tables: &EmbeddingTables,
    target_ids: &[u32],
) -> Result<Array2<f64>> {
    check_table_dims(tables, vocab)?;
    let (kinds, mut groups) = feature_groups(g, vocab, false);
    groups[g.target] = target_ids.iter().map(|&id| id as usize).collect();
    Ok(featurize_groups(&kinds, &groups, tables))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{list_variables, parse_function, rename_variable};

    fn unit(src: &str) -> FunctionUnit {
        parse_function(src, "java").unwrap()
    }

    fn binding<'a>(vars: &'a [VariableBinding], name: &str) -> &'a VariableBinding {
        vars.iter().find(|b| b.name == name).unwrap()
    }

    fn relation_counts(g: &VariableContextGraph) -> (usize, usize, usize) {
        let ast = g.edges.iter().filter(|e| e.rel == Relation::Ast).count();
        let nt = g.edges.iter().filter(|e| e.rel == Relation::NextToken).count();
        let sl = g.edges.iter().filter(|e| e.rel == Relation::SelfLoop).count();
        (ast, nt, sl)
    }

    #[test]
    fn single_statement_declaration() {
        let f = unit("int f(){int a = 0; return 1;}");
        let vars = list_variables(&f);
        let g = build_context_graph(&f, binding(&vars, "a")).unwrap();
        g.validate().unwrap();
        assert_eq!(g.nodes.iter().filter(|n| n.is_target).count(), 1);
        assert_eq!(g.nodes[g.target].text, "a");
        // `return 1;` contributes nothing
        assert!(!g.nodes.iter().any(|n| n.text == "return"));
        // target sees its AST parent plus the self-loop
        let indeg = g.edges.iter().filter(|e| e.dst == g.target).count();
        assert!(indeg >= 2);
    }

    #[test]
    fn edge_count_identity() {
        for src in [
            "int f(){int a = 0; return 1;}",
            "int f(int x){int y = x + 1; y = y * 2; return y;}",
            "void g(String name){if(name != null){print(name);}}",
            "int h(){int s = 0; for(int i = 0; i < 9; i++){s += i;} return s;}",
        ] {
            let f = unit(src);
            for b in list_variables(&f) {
                let g = build_context_graph(&f, &b).unwrap();
                g.validate().unwrap();
                let (ast, nt, sl) = relation_counts(&g);
                assert_eq!(sl, 1, "{src}: one self-loop for {}", b.name);
                assert_eq!(
                    g.edge_count(),
                    2 * (ast + nt + 1),
                    "{src}: edge identity for {}",
                    b.name
                );
            }
        }
    }

    #[test]
    fn three_statement_merge() {
        let f = unit(
            "int f(){int dir = next(); dir = dir + step(); return dir * 2;}",
        );
        let vars = list_variables(&f);
        let g = build_context_graph(&f, binding(&vars, "dir")).unwrap();
        g.validate().unwrap();
        // 4 mentions across 3 statements, one merged node
        assert_eq!(g.nodes.iter().filter(|n| n.text == "dir").count(), 1);
        // all three statements contribute: `next`, `step`, and `return` appear
        for needle in ["next", "step", "return"] {
            assert!(g.nodes.iter().any(|n| n.text == needle), "missing {needle}");
        }
    }

    #[test]
    fn shared_parent_edges_deduplicate() {
        let f = unit("void f(int a){use(a, a);}");
        let vars = list_variables(&f);
        let g = build_context_graph(&f, binding(&vars, "a")).unwrap();
        // both argument occurrences hang off the same ArgumentList; the
        // merged node keeps a single AST edge from it
        let arg_list = g
            .nodes
            .iter()
            .position(|n| n.kind == NodeKind::ArgumentList)
            .unwrap();
        let dup = g
            .edges
            .iter()
            .filter(|e| e.src == arg_list && e.dst == g.target && e.rel == Relation::Ast)
            .count();
        assert_eq!(dup, 1);
    }

    #[test]
    fn next_token_edges_follow_source_order() {
        let f = unit("int f(){int a = 0; return 1;}");
        let vars = list_variables(&f);
        let g = build_context_graph(&f, binding(&vars, "a")).unwrap();
        let find = |text: &str| g.nodes.iter().position(|n| n.text == text).unwrap();
        let eq = find("=");
        let zero = find("0");
        let has = |s: usize, d: usize| {
            g.edges.contains(&Edge { src: s, dst: d, rel: Relation::NextToken })
        };
        assert!(has(g.target, eq), "a -> =");
        assert!(has(eq, zero), "= -> 0");
        assert!(
            g.edges.contains(&Edge { src: eq, dst: g.target, rel: Relation::NextTokenRev })
        );
    }

    #[test]
    fn determinism() {
        let f = unit("int f(int x){int y = x + 1; y = y * 2; return y;}");
        let vars = list_variables(&f);
        let g1 = build_context_graph(&f, binding(&vars, "y")).unwrap();
        let g2 = build_context_graph(&f, binding(&vars, "y")).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn rename_keeps_topology() {
        let src = "int f(){int dir = next(); dir = dir + step(); return dir;}";
        let f = unit(src);
        let vars = list_variables(&f);
        let g1 = build_context_graph(&f, binding(&vars, "dir")).unwrap();

        let spec = default_grammars().get("java").unwrap();
        let f2 = rename_variable(&f, binding(&vars, "dir"), "heading", spec).unwrap();
        let vars2 = list_variables(&f2);
        let g2 = build_context_graph(&f2, binding(&vars2, "heading")).unwrap();

        assert_eq!(g1.edges, g2.edges);
        assert_eq!(g1.target, g2.target);
        let kinds1: Vec<NodeKind> = g1.nodes.iter().map(|n| n.kind).collect();
        let kinds2: Vec<NodeKind> = g2.nodes.iter().map(|n| n.kind).collect();
        assert_eq!(kinds1, kinds2);
        for (i, (a, b)) in g1.nodes.iter().zip(&g2.nodes).enumerate() {
            if i == g1.target {
                assert_eq!(a.text, "dir");
                assert_eq!(b.text, "heading");
            } else {
                assert_eq!(a.text, b.text, "only the target text may change");
            }
        }
    }

    #[test]
    fn unrelated_statement_edits_leave_graph_unchanged() {
        let f1 = unit("int f(){int a = 1; use(a); return a;}");
        let f2 = unit("int f(){int a = 1; int z = 9; print(z); use(a); return a;}");
        let g1 = build_context_graph(&f1, binding(&list_variables(&f1), "a")).unwrap();
        let g2 = build_context_graph(&f2, binding(&list_variables(&f2), "a")).unwrap();
        assert_eq!(g1.nodes, g2.nodes);
        assert_eq!(g1.edges, g2.edges);
        assert_eq!(g1.target, g2.target);
    }

    #[test]
    fn node_cap_drops_farthest_statements() {
        let mut src = String::from("int f(){int a = 0; ");
        for i in 0..200 {
            src.push_str(&format!("a = a + touch{i}(a); "));
        }
        src.push_str("return a;}");
        let f = unit(&src);
        let vars = list_variables(&f);
        let g = build_context_graph(&f, binding(&vars, "a")).unwrap();
        g.validate().unwrap();
        assert!(g.node_count() <= MAX_GRAPH_NODES);
        // near statements survive, far ones are gone
        assert!(g.nodes.iter().any(|n| n.text == "touch0"));
        assert!(!g.nodes.iter().any(|n| n.text == "touch199"));
    }

    #[test]
    fn empty_context_for_binding_outside_statements() {
        let f = unit("int f(){return 1;}");
        // method name leaf has no statement ancestor
        let name_leaf = f
            .tree
            .nodes
            .iter()
            .enumerate()
            .find(|(_, n)| {
                n.token.map(|t| f.token_text(t) == "f").unwrap_or(false)
            })
            .map(|(i, _)| i)
            .unwrap();
        let fake = VariableBinding {
            name: "f".into(),
            occurrences: vec![name_leaf],
            ordinal: 0,
            from_enhanced_for: false,
        };
        match build_context_graph(&f, &fake) {
            Err(Error::EmptyContext(_)) => {}
            other => panic!("expected EmptyContext, got {other:?}"),
        }
    }

    #[test]
    fn json_dump_shape() {
        let f = unit("int f(){int a = 0; return 1;}");
        let vars = list_variables(&f);
        let g = build_context_graph(&f, binding(&vars, "a")).unwrap();
        let v = g.to_json();
        assert_eq!(v["target"], json!(g.target));
        assert_eq!(v["nodes"].as_array().unwrap().len(), g.node_count());
        let e0 = &v["edges"][0];
        assert!(e0[0].is_u64() && e0[1].is_u64() && e0[2].is_string());
        assert!(v["nodes"][g.target]["target"].as_bool().unwrap());
    }

    fn toy_tables(dim: usize, vocab: &Vocabulary) -> EmbeddingTables {
        let kinds = NodeKind::all().len();
        let kind = Array2::from_shape_fn((kinds, dim), |(i, j)| {
            ((i * 31 + j * 7) % 13) as f64 * 0.1
        });
        let sub = Array2::from_shape_fn((vocab.len(), dim), |(i, j)| {
            ((i * 17 + j * 3) % 11) as f64 * 0.1 - 0.3
        });
        EmbeddingTables { kind, sub }
    }

    #[test]
    fn featurize_arithmetic_matches_direct_computation() {
        let f = unit("int f(){int userDetails = 0; use(userDetails);}");
        let vars = list_variables(&f);
        let g = build_context_graph(&f, binding(&vars, "userDetails")).unwrap();
        let vocab = Vocabulary::build(std::slice::from_ref(&f));
        let tables = toy_tables(8, &vocab);
        let x = featurize(&g, &vocab, &tables, false).unwrap();
        assert_eq!(x.nrows(), g.node_count());
        assert!(x.iter().all(|v| v.is_finite()));

        // interior node: exactly its kind row
        let (i, nd) = g
            .nodes
            .iter()
            .enumerate()
            .find(|(_, n)| n.kind == NodeKind::LocalVariableDeclaration)
            .unwrap();
        let expect = tables.kind.row(nd.kind.id());
        assert_eq!(x.row(i), expect);

        // target leaf: kind row + mean(sub(user), sub(details))
        let mean = (&tables.sub.row(vocab.id("user") as usize).to_owned()
            + &tables.sub.row(vocab.id("details") as usize))
            / 2.0;
        let expect = &tables.kind.row(NodeKind::IdentifierLeaf.id()).to_owned() + &mean;
        let got = x.row(g.target);
        for (a, b) in got.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn featurize_masks_target_on_embed_side() {
        let f = unit("int f(){int userDetails = 0; use(userDetails);}");
        let vars = list_variables(&f);
        let g = build_context_graph(&f, binding(&vars, "userDetails")).unwrap();
        let vocab = Vocabulary::build(std::slice::from_ref(&f));
        let tables = toy_tables(8, &vocab);

        let masked = featurize(&g, &vocab, &tables, true).unwrap();
        let expect = &tables.kind.row(NodeKind::IdentifierLeaf.id()).to_owned()
            + &tables.sub.row(MASK as usize);
        for (a, b) in masked.row(g.target).iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }

        // only the target row differs between the two modes
        let open = featurize(&g, &vocab, &tables, false).unwrap();
        for i in 0..g.node_count() {
            let same = masked.row(i) == open.row(i);
            assert_eq!(same, i != g.target);
        }
    }

    #[test]
    fn featurize_rejects_bad_dimensions() {
        let f = unit("int f(){int a = 0; return 1;}");
        let vars = list_variables(&f);
        let g = build_context_graph(&f, binding(&vars, "a")).unwrap();
        let vocab = Vocabulary::build(std::slice::from_ref(&f));
        let mut tables = toy_tables(8, &vocab);
        tables.sub = Array2::zeros((vocab.len(), 4));
        assert!(matches!(
            featurize(&g, &vocab, &tables, false),
            Err(Error::DimensionMismatch(_))
        ));
        let mut tables = toy_tables(8, &vocab);
        tables.sub = Array2::zeros((vocab.len() + 1, 8));
        assert!(matches!(
            featurize(&g, &vocab, &tables, false),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
