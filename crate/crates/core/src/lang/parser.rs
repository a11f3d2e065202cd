//! Recursive-descent Java parser producing a lossless syntax tree: every
//! non-trivia token becomes exactly one leaf node, so the tree re-serializes
//! to the token stream and byte-precise renames stay possible. Malformed
//! input degrades to error nodes instead of failing the whole parse.

use super::ast::{Node, NodeId, NodeKind, Span, Token, TokenId, TokenKind, Tree};
use super::grammar::LanguageSpec;
use crate::error::{Error, Result};

const PRIMITIVES: &[&str] =
    &["boolean", "byte", "short", "int", "long", "char", "float", "double", "void"];

const MODIFIER_WORDS: &[&str] = &[
    "public", "private", "protected", "static", "final", "abstract", "native", "synchronized",
    "transient", "volatile", "strictfp", "default",
];

const ASSIGN_OPS: &[&str] =
    &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="];

// binary operator precedence tiers, loosest first
const BINARY_TIERS: &[&[&str]] = &[
    &["||"],
    &["&&"],
    &["|"],
    &["^"],
    &["&"],
    &["==", "!="],
    &["<", ">", "<=", ">=", "instanceof"],
    &["<<", ">>", ">>>"], // >> and >>> are fused from adjacent `>` tokens
    &["+", "-"],
    &["*", "/", "%"],
];

pub struct ParseOutput {
    pub tree: Tree,
    pub diagnostics: Vec<(Span, String)>,
}

pub fn parse_tokens(tokens: &[Token], spec: &LanguageSpec) -> Result<ParseOutput> {
    let sig: Vec<TokenId> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.kind.is_trivia())
        .map(|(i, _)| i)
        .collect();
    if sig.is_empty() {
        return Err(Error::UnparseableInput("no significant tokens".into()));
    }
    let _ = spec; // keyword classification already happened at lex time
    let mut p = Parser { toks: tokens, sig, pos: 0, nodes: Vec::new(), diags: Vec::new() };
    let root = p.parse_function_root();
    let tree = renumber(p.nodes, root);
    Ok(ParseOutput { tree, diagnostics: p.diags })
}

struct Parser<'a> {
    toks: &'a [Token],
    sig: Vec<TokenId>,
    pos: usize,
    nodes: Vec<Node>,
    diags: Vec<(Span, String)>,
}

impl<'a> Parser<'a> {
    // ---- cursor helpers ----

    fn tok(&self, i: usize) -> Option<&Token> {
        self.sig.get(i).map(|&id| &self.toks[id])
    }

    fn cur(&self) -> Option<&Token> {
        self.tok(self.pos)
    }

    fn text_at(&self, i: usize) -> &str {
        self.tok(i).map_or("", |t| t.text.as_str())
    }

    fn cur_text(&self) -> &str {
        self.text_at(self.pos)
    }

    fn nth_text(&self, n: usize) -> &str {
        self.text_at(self.pos + n)
    }

    fn at(&self, s: &str) -> bool {
        self.cur_text() == s
    }

    fn at_end(&self) -> bool {
        self.pos >= self.sig.len()
    }

    fn ident_at(&self, i: usize) -> bool {
        self.tok(i).is_some_and(|t| t.kind == TokenKind::Identifier)
    }

    fn at_ident(&self) -> bool {
        self.ident_at(self.pos)
    }

    /// Source position used for empty spans (missing-token errors).
    fn here(&self) -> usize {
        self.cur().map_or_else(
            || self.toks.last().map_or(0, |t| t.span.end),
            |t| t.span.start,
        )
    }

    // ---- node construction ----

    fn push_node(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn leaf_kind(kind: TokenKind) -> NodeKind {
        match kind {
            TokenKind::Identifier => NodeKind::IdentifierLeaf,
            TokenKind::Keyword => NodeKind::KeywordLeaf,
            TokenKind::Number => NodeKind::NumberLeaf,
            TokenKind::Str => NodeKind::StringLeaf,
            TokenKind::Char => NodeKind::CharLeaf,
            TokenKind::Operator => NodeKind::OperatorLeaf,
            TokenKind::Punct => NodeKind::PunctLeaf,
            TokenKind::Comment | TokenKind::Error => NodeKind::ErrorNode,
        }
    }

    /// Consume the current token into a fresh leaf node.
    fn bump(&mut self) -> NodeId {
        let tid = self.sig[self.pos];
        let tok = &self.toks[tid];
        let kind = Self::leaf_kind(tok.kind);
        let node = Node {
            kind,
            span: tok.span,
            parent: None,
            children: Vec::new(),
            token: Some(tid),
            error: kind == NodeKind::ErrorNode,
        };
        self.pos += 1;
        self.push_node(node)
    }

    fn eat(&mut self, s: &str) -> Option<NodeId> {
        if self.at(s) {
            Some(self.bump())
        } else {
            None
        }
    }

    /// Like `eat`, but a missing token yields a zero-width error node plus a
    /// diagnostic, so broken input is visible in the tree itself.
    fn expect(&mut self, s: &str, ctx: &str) -> NodeId {
        if self.at(s) {
            self.bump()
        } else {
            let at = self.here();
            self.diags.push((Span::new(at, at), format!("expected `{s}` in {ctx}")));
            self.interior(NodeKind::ErrorNode, Vec::new())
        }
    }

    fn interior(&mut self, kind: NodeKind, children: Vec<NodeId>) -> NodeId {
        let span = if children.is_empty() {
            let at = self.here();
            Span::new(at, at)
        } else {
            let start = self.nodes[children[0]].span.start;
            let end = children.iter().map(|&c| self.nodes[c].span.end).max().unwrap();
            Span::new(start, end)
        };
        let error = kind == NodeKind::ErrorNode;
        let id = self.push_node(Node { kind, span, parent: None, children: Vec::new(), token: None, error });
        for &c in &children {
            self.nodes[c].parent = Some(id);
        }
        self.nodes[id].children = children;
        id
    }

    fn error_node(&mut self, children: Vec<NodeId>, msg: &str) -> NodeId {
        let id = self.interior(NodeKind::ErrorNode, children);
        let span = self.nodes[id].span;
        self.diags.push((span, msg.to_string()));
        id
    }

    /// Skip to (and over) `;`, or stop before `}`; the skipped tokens become
    /// one error node so the tree still covers them.
    fn recover_statement(&mut self, msg: &str) -> NodeId {
        let mut children = Vec::new();
        let mut depth = 0usize;
        while !self.at_end() {
            match self.cur_text() {
                ";" if depth == 0 => {
                    children.push(self.bump());
                    break;
                }
                "}" if depth == 0 => break,
                "{" | "(" | "[" => {
                    depth += 1;
                    children.push(self.bump());
                }
                "}" | ")" | "]" => {
                    depth = depth.saturating_sub(1);
                    children.push(self.bump());
                }
                _ => children.push(self.bump()),
            }
        }
        self.error_node(children, msg)
    }

    // ---- speculative scanning (no nodes built) ----

    fn is_primitive_at(&self, i: usize) -> bool {
        self.tok(i).is_some_and(|t| t.kind == TokenKind::Keyword)
            && PRIMITIVES.contains(&self.text_at(i))
    }

    /// Scan a type starting at `i`; returns the index just past it.
    fn scan_type(&self, mut i: usize) -> Option<usize> {
        if self.is_primitive_at(i) {
            i += 1;
        } else if self.ident_at(i) {
            i += 1;
            while self.text_at(i) == "." && self.ident_at(i + 1) {
                i += 2;
            }
            if self.text_at(i) == "<" {
                i = self.scan_type_args(i)?;
            }
        } else {
            return None;
        }
        while self.text_at(i) == "[" && self.text_at(i + 1) == "]" {
            i += 2;
        }
        Some(i)
    }

    fn scan_type_args(&self, mut i: usize) -> Option<usize> {
        debug_assert_eq!(self.text_at(i), "<");
        i += 1;
        if self.text_at(i) == ">" {
            return Some(i + 1); // diamond
        }
        loop {
            if self.text_at(i) == "?" {
                i += 1;
                if self.text_at(i) == "extends" || self.text_at(i) == "super" {
                    i = self.scan_type(i + 1)?;
                }
            } else {
                i = self.scan_type(i)?;
            }
            match self.text_at(i) {
                "," => i += 1,
                ">" => return Some(i + 1),
                _ => return None,
            }
        }
    }

    /// Index just past the matching close delimiter, counting all bracket kinds.
    fn scan_balanced(&self, open_at: usize) -> Option<usize> {
        let close = match self.text_at(open_at) {
            "(" => ")",
            "{" => "}",
            "[" => "]",
            _ => return None,
        };
        let open = self.text_at(open_at);
        let mut depth = 0usize;
        let mut i = open_at;
        while i < self.sig.len() {
            let t = self.text_at(i);
            if t == open {
                depth += 1;
            } else if t == close {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            i += 1;
        }
        None
    }

    fn is_modifier_at(&self, i: usize) -> bool {
        self.tok(i).is_some_and(|t| t.kind == TokenKind::Keyword)
            && MODIFIER_WORDS.contains(&self.text_at(i))
    }

    /// Does a statement starting here declare a local variable?
    fn looks_like_local_decl(&self) -> bool {
        let mut i = self.pos;
        while self.text_at(i) == "final" || self.text_at(i) == "@" {
            if self.text_at(i) == "@" {
                if !self.ident_at(i + 1) {
                    return false;
                }
                i += 2;
                if self.text_at(i) == "(" {
                    match self.scan_balanced(i) {
                        Some(j) => i = j,
                        None => return false,
                    }
                }
            } else {
                i += 1;
            }
        }
        if self.is_primitive_at(i) {
            return self.text_at(i + 1) != "."; // `int.class` is an expression
        }
        match self.scan_type(i) {
            Some(j) if j > i + 0 => self.ident_at(j),
            _ => false,
        }
    }

    /// Enhanced-for header: `( [final] Type name :` (single `:`, not `::`).
    fn looks_like_enhanced_for(&self) -> bool {
        let mut i = self.pos; // at token after `(`
        if self.text_at(i) == "final" {
            i += 1;
        }
        let Some(j) = self.scan_type(i) else { return false };
        self.ident_at(j) && self.text_at(j + 1) == ":"
    }

    fn starts_expression(&self) -> bool {
        match self.cur() {
            None => false,
            Some(t) => match t.kind {
                TokenKind::Identifier | TokenKind::Number | TokenKind::Str | TokenKind::Char => {
                    true
                }
                TokenKind::Keyword => {
                    matches!(t.text.as_str(), "this" | "super" | "new" | "true" | "false" | "null")
                        || PRIMITIVES.contains(&t.text.as_str())
                }
                TokenKind::Operator => matches!(t.text.as_str(), "+" | "-" | "!" | "~" | "++" | "--"),
                TokenKind::Punct => t.text == "(",
                _ => false,
            },
        }
    }

    // ---- top level ----

    fn parse_function_root(&mut self) -> NodeId {
        let mut children = Vec::new();
        if let Some(mods) = self.parse_modifiers() {
            children.push(mods);
        }
        // optional generic type parameters before the return type
        if self.at("<") {
            if let Some(end) = self.scan_type_args(self.pos) {
                let mut args = Vec::new();
                while self.pos < end {
                    args.push(self.bump());
                }
                children.push(self.interior(NodeKind::TypeArguments, args));
            }
        }
        let mut kind = NodeKind::MethodDeclaration;
        if self.at_ident() && self.nth_text(1) == "(" {
            kind = NodeKind::ConstructorDeclaration;
            children.push(self.bump()); // name
        } else if self.scan_type(self.pos).is_some() {
            children.push(self.parse_type());
            if self.at_ident() {
                children.push(self.bump()); // name
            } else {
                let at = self.here();
                self.diags.push((Span::new(at, at), "expected method name".into()));
            }
        } else {
            // does not look like a function header at all; recover the whole
            // input as a statement sequence under an error header
            let err = self.recover_statement("unrecognized function header");
            children.push(err);
        }
        if self.at("(") {
            children.push(self.parse_formal_parameters());
        }
        if self.at("throws") {
            let mut th = vec![self.bump()];
            loop {
                if self.scan_type(self.pos).is_some() {
                    th.push(self.parse_type());
                } else {
                    break;
                }
                match self.eat(",") {
                    Some(c) => th.push(c),
                    None => break,
                }
            }
            children.push(self.interior(NodeKind::ThrowsClause, th));
        }
        if self.at("{") {
            children.push(self.parse_block());
        } else if let Some(semi) = self.eat(";") {
            children.push(semi); // abstract or interface method
        } else {
            let at = self.here();
            self.diags.push((Span::new(at, at), "expected method body".into()));
        }
        if !self.at_end() {
            let mut rest = Vec::new();
            while !self.at_end() {
                rest.push(self.bump());
            }
            children.push(self.error_node(rest, "unexpected tokens after function"));
        }
        self.interior(kind, children)
    }

    fn parse_modifiers(&mut self) -> Option<NodeId> {
        let mut children = Vec::new();
        loop {
            if self.at("@") && self.ident_at(self.pos + 1) {
                children.push(self.parse_annotation());
            } else if self.is_modifier_at(self.pos) {
                // `default` only acts as a modifier when a type follows
                if self.cur_text() == "default" && !self.is_primitive_at(self.pos + 1)
                    && !self.ident_at(self.pos + 1)
                {
                    break;
                }
                children.push(self.bump());
            } else {
                break;
            }
        }
        if children.is_empty() {
            None
        } else {
            Some(self.interior(NodeKind::Modifiers, children))
        }
    }

    fn parse_local_modifiers(&mut self) -> Option<NodeId> {
        let mut children = Vec::new();
        loop {
            if self.at("@") && self.ident_at(self.pos + 1) {
                children.push(self.parse_annotation());
            } else if self.at("final") {
                children.push(self.bump());
            } else {
                break;
            }
        }
        if children.is_empty() {
            None
        } else {
            Some(self.interior(NodeKind::Modifiers, children))
        }
    }

    fn parse_annotation(&mut self) -> NodeId {
        let mut children = vec![self.bump()]; // @
        children.push(self.bump()); // name head
        while self.at(".") && self.ident_at(self.pos + 1) {
            children.push(self.bump());
            children.push(self.bump());
        }
        if self.at("(") {
            if let Some(end) = self.scan_balanced(self.pos) {
                while self.pos < end {
                    children.push(self.bump());
                }
            }
        }
        self.interior(NodeKind::Annotation, children)
    }

    fn parse_formal_parameters(&mut self) -> NodeId {
        let mut children = vec![self.bump()]; // (
        while !self.at(")") && !self.at_end() {
            let before = self.pos;
            children.push(self.parse_formal_parameter());
            if let Some(c) = self.eat(",") {
                children.push(c);
            }
            if self.pos == before {
                children.push(self.bump()); // never stall
            }
        }
        let c = self.expect(")", "parameter list");
        children.push(c);
        self.interior(NodeKind::FormalParameters, children)
    }

    fn parse_formal_parameter(&mut self) -> NodeId {
        let mut children = Vec::new();
        if let Some(mods) = self.parse_local_modifiers() {
            children.push(mods);
        }
        if self.scan_type(self.pos).is_some() {
            children.push(self.parse_type());
        }
        if self.at("...") {
            children.push(self.bump()); // varargs
        }
        if self.at_ident() {
            children.push(self.bump());
            // trailing array dims: `int name[]`
            while self.at("[") && self.nth_text(1) == "]" {
                children.push(self.bump());
                children.push(self.bump());
            }
        }
        if children.is_empty() {
            return self.recover_parameter();
        }
        self.interior(NodeKind::FormalParameter, children)
    }

    fn recover_parameter(&mut self) -> NodeId {
        let mut children = Vec::new();
        let mut depth = 0usize;
        while !self.at_end() {
            match self.cur_text() {
                "," if depth == 0 => break,
                ")" if depth == 0 => break,
                "(" | "[" | "<" => {
                    depth += 1;
                    children.push(self.bump());
                }
                ")" | "]" | ">" => {
                    depth = depth.saturating_sub(1);
                    children.push(self.bump());
                }
                _ => children.push(self.bump()),
            }
        }
        self.error_node(children, "malformed parameter")
    }

    // ---- types ----

    fn parse_type(&mut self) -> NodeId {
        let base = if self.is_primitive_at(self.pos) {
            let kw = self.bump();
            self.interior(NodeKind::PrimitiveType, vec![kw])
        } else if self.at_ident() {
            let mut children = vec![self.bump()];
            while self.at(".") && self.ident_at(self.pos + 1) {
                children.push(self.bump());
                children.push(self.bump());
            }
            if self.at("<") && self.scan_type_args(self.pos).is_some() {
                children.push(self.parse_type_arguments());
            }
            self.interior(NodeKind::ClassType, children)
        } else {
            return self.error_node(Vec::new(), "expected type");
        };
        if self.at("[") && self.nth_text(1) == "]" {
            let mut children = vec![base];
            while self.at("[") && self.nth_text(1) == "]" {
                children.push(self.bump());
                children.push(self.bump());
            }
            self.interior(NodeKind::ArrayType, children)
        } else {
            base
        }
    }

    fn parse_type_arguments(&mut self) -> NodeId {
        let mut children = vec![self.bump()]; // <
        if !self.at(">") {
            loop {
                if self.at("?") {
                    let mut w = vec![self.bump()];
                    if self.at("extends") || self.at("super") {
                        w.push(self.bump());
                        w.push(self.parse_type());
                    }
                    children.push(self.interior(NodeKind::Wildcard, w));
                } else {
                    children.push(self.parse_type());
                }
                match self.eat(",") {
                    Some(c) => children.push(c),
                    None => break,
                }
            }
        }
        let c = self.expect(">", "type arguments");
        children.push(c);
        self.interior(NodeKind::TypeArguments, children)
    }

    // ---- statements ----

    fn parse_block(&mut self) -> NodeId {
        let mut children = vec![self.bump()]; // {
        while !self.at("}") && !self.at_end() {
            let before = self.pos;
            children.push(self.parse_statement());
            if self.pos == before {
                let tok = self.bump();
                children.push(self.error_node(vec![tok], "unexpected token"));
            }
        }
        let c = self.expect("}", "block");
        children.push(c);
        self.interior(NodeKind::Block, children)
    }

    fn parse_statement(&mut self) -> NodeId {
        match self.cur_text() {
            "{" => self.parse_block(),
            ";" => {
                let semi = self.bump();
                self.interior(NodeKind::EmptyStatement, vec![semi])
            }
            "if" => self.parse_if(),
            "for" => self.parse_for(),
            "while" => self.parse_while(),
            "do" => self.parse_do(),
            "switch" => self.parse_switch(),
            "return" => {
                let mut c = vec![self.bump()];
                if !self.at(";") && !self.at_end() && !self.at("}") {
                    c.push(self.parse_expression());
                }
                let s = self.expect(";", "return statement");
                c.push(s);
                self.interior(NodeKind::ReturnStatement, c)
            }
            "break" | "continue" => {
                let kind = if self.at("break") {
                    NodeKind::BreakStatement
                } else {
                    NodeKind::ContinueStatement
                };
                let mut c = vec![self.bump()];
                if self.at_ident() {
                    c.push(self.bump()); // label
                }
                let s = self.expect(";", "jump statement");
                c.push(s);
                self.interior(kind, c)
            }
            "throw" => {
                let mut c = vec![self.bump()];
                c.push(self.parse_expression());
                let s = self.expect(";", "throw statement");
                c.push(s);
                self.interior(NodeKind::ThrowStatement, c)
            }
            "try" => self.parse_try(),
            "synchronized" => {
                let mut c = vec![self.bump()];
                c.push(self.expect("(", "synchronized statement"));
                c.push(self.parse_expression());
                c.push(self.expect(")", "synchronized statement"));
                if self.at("{") {
                    c.push(self.parse_block());
                }
                self.interior(NodeKind::SynchronizedStatement, c)
            }
            "assert" => {
                let mut c = vec![self.bump()];
                c.push(self.parse_expression());
                if let Some(colon) = self.eat(":") {
                    c.push(colon);
                    c.push(self.parse_expression());
                }
                let s = self.expect(";", "assert statement");
                c.push(s);
                self.interior(NodeKind::AssertStatement, c)
            }
            _ => {
                if self.at_ident() && self.nth_text(1) == ":" {
                    let label = self.bump();
                    let colon = self.bump();
                    let body = self.parse_statement();
                    return self.interior(NodeKind::LabeledStatement, vec![label, colon, body]);
                }
                if self.looks_like_local_decl() {
                    return self.parse_local_decl(true);
                }
                if self.starts_expression() {
                    let e = self.parse_expression();
                    let mut c = vec![e];
                    let s = self.expect(";", "expression statement");
                    c.push(s);
                    return self.interior(NodeKind::ExpressionStatement, c);
                }
                self.recover_statement("unrecognized statement")
            }
        }
    }

    /// `with_semi` also consumes the trailing `;` (false inside for-headers
    /// and try-resources).
    fn parse_local_decl(&mut self, with_semi: bool) -> NodeId {
        let mut children = Vec::new();
        if let Some(mods) = self.parse_local_modifiers() {
            children.push(mods);
        }
        children.push(self.parse_type());
        loop {
            children.push(self.parse_declarator());
            match self.eat(",") {
                Some(c) => children.push(c),
                None => break,
            }
        }
        if with_semi {
            let s = self.expect(";", "variable declaration");
            children.push(s);
        }
        self.interior(NodeKind::LocalVariableDeclaration, children)
    }

    fn parse_declarator(&mut self) -> NodeId {
        let mut children = Vec::new();
        if self.at_ident() {
            children.push(self.bump());
        } else {
            let at = self.here();
            self.diags.push((Span::new(at, at), "expected variable name".into()));
            return self.error_node(children, "missing declarator name");
        }
        while self.at("[") && self.nth_text(1) == "]" {
            children.push(self.bump());
            children.push(self.bump());
        }
        if let Some(eq) = self.eat("=") {
            children.push(eq);
            if self.at("{") {
                children.push(self.parse_array_initializer());
            } else {
                children.push(self.parse_expression());
            }
        }
        self.interior(NodeKind::VariableDeclarator, children)
    }

    fn parse_array_initializer(&mut self) -> NodeId {
        let mut children = vec![self.bump()]; // {
        while !self.at("}") && !self.at_end() {
            let before = self.pos;
            if self.at("{") {
                children.push(self.parse_array_initializer());
            } else {
                children.push(self.parse_expression());
            }
            if let Some(c) = self.eat(",") {
                children.push(c);
            }
            if self.pos == before {
                children.push(self.bump());
            }
        }
        let c = self.expect("}", "array initializer");
        children.push(c);
        self.interior(NodeKind::ArrayInitializer, children)
    }

    fn parse_if(&mut self) -> NodeId {
        let mut c = vec![self.bump()]; // if
        c.push(self.expect("(", "if statement"));
        c.push(self.parse_expression());
        c.push(self.expect(")", "if statement"));
        c.push(self.parse_statement());
        if let Some(e) = self.eat("else") {
            c.push(e);
            c.push(self.parse_statement());
        }
        self.interior(NodeKind::IfStatement, c)
    }

    fn parse_while(&mut self) -> NodeId {
        let mut c = vec![self.bump()]; // while
        c.push(self.expect("(", "while statement"));
        c.push(self.parse_expression());
        c.push(self.expect(")", "while statement"));
        c.push(self.parse_statement());
        self.interior(NodeKind::WhileStatement, c)
    }

    fn parse_do(&mut self) -> NodeId {
        let mut c = vec![self.bump()]; // do
        c.push(self.parse_statement());
        c.push(self.expect("while", "do statement"));
        c.push(self.expect("(", "do statement"));
        c.push(self.parse_expression());
        c.push(self.expect(")", "do statement"));
        let s = self.expect(";", "do statement");
        c.push(s);
        self.interior(NodeKind::DoStatement, c)
    }

    fn parse_for(&mut self) -> NodeId {
        let for_kw = self.bump();
        let open = self.expect("(", "for statement");
        if self.looks_like_enhanced_for() {
            let mut var = Vec::new();
            if let Some(mods) = self.parse_local_modifiers() {
                var.push(mods);
            }
            var.push(self.parse_type());
            if self.at_ident() {
                var.push(self.bump());
            }
            let var_node = self.interior(NodeKind::EnhancedForVariable, var);
            let mut c = vec![for_kw, open, var_node];
            let colon = self.expect(":", "enhanced for");
            c.push(colon);
            c.push(self.parse_expression());
            let cl = self.expect(")", "enhanced for");
            c.push(cl);
            c.push(self.parse_statement());
            return self.interior(NodeKind::EnhancedForStatement, c);
        }
        let mut c = vec![for_kw, open];
        // init
        if self.at(";") {
            c.push(self.bump());
        } else if self.looks_like_local_decl() {
            c.push(self.parse_local_decl(true)); // decl owns its `;`
        } else {
            c.push(self.parse_expression());
            while let Some(comma) = self.eat(",") {
                c.push(comma);
                c.push(self.parse_expression());
            }
            let s = self.expect(";", "for initializer");
            c.push(s);
        }
        // condition
        if !self.at(";") && !self.at_end() {
            c.push(self.parse_expression());
        }
        let s = self.expect(";", "for condition");
        c.push(s);
        // update
        if !self.at(")") && !self.at_end() {
            c.push(self.parse_expression());
            while let Some(comma) = self.eat(",") {
                c.push(comma);
                c.push(self.parse_expression());
            }
        }
        let cl = self.expect(")", "for statement");
        c.push(cl);
        c.push(self.parse_statement());
        self.interior(NodeKind::ForStatement, c)
    }

    fn parse_switch(&mut self) -> NodeId {
        let mut c = vec![self.bump()]; // switch
        c.push(self.expect("(", "switch statement"));
        c.push(self.parse_expression());
        c.push(self.expect(")", "switch statement"));
        if self.at("{") {
            let mut block = vec![self.bump()];
            while !self.at("}") && !self.at_end() {
                let before = self.pos;
                if self.at("case") || self.at("default") {
                    block.push(self.parse_switch_case());
                } else {
                    let tok = self.bump();
                    block.push(self.error_node(vec![tok], "expected case label"));
                }
                if self.pos == before {
                    block.push(self.bump());
                }
            }
            let cl = self.expect("}", "switch block");
            block.push(cl);
            c.push(self.interior(NodeKind::SwitchBlock, block));
        }
        self.interior(NodeKind::SwitchStatement, c)
    }

    fn parse_switch_case(&mut self) -> NodeId {
        let mut c = vec![self.bump()]; // case | default
        if self.nodes[c[0]].token.map(|t| self.toks[t].text.as_str()) != Some("default")
            && !self.at(":")
        {
            c.push(self.parse_expression());
        }
        let colon = self.expect(":", "switch case");
        c.push(colon);
        while !self.at("case") && !self.at("default") && !self.at("}") && !self.at_end() {
            let before = self.pos;
            c.push(self.parse_statement());
            if self.pos == before {
                let tok = self.bump();
                c.push(self.error_node(vec![tok], "unexpected token in case"));
            }
        }
        self.interior(NodeKind::SwitchCase, c)
    }

    fn parse_try(&mut self) -> NodeId {
        let mut c = vec![self.bump()]; // try
        if self.at("(") {
            let mut res = vec![self.bump()];
            while !self.at(")") && !self.at_end() {
                let before = self.pos;
                res.push(self.parse_local_decl(false));
                if let Some(s) = self.eat(";") {
                    res.push(s);
                }
                if self.pos == before {
                    res.push(self.bump());
                }
            }
            let cl = self.expect(")", "try resources");
            res.push(cl);
            c.push(self.interior(NodeKind::ResourceSpecification, res));
        }
        if self.at("{") {
            c.push(self.parse_block());
        }
        while self.at("catch") {
            let mut cc = vec![self.bump()];
            cc.push(self.expect("(", "catch clause"));
            let mut param = Vec::new();
            if let Some(mods) = self.parse_local_modifiers() {
                param.push(mods);
            }
            param.push(self.parse_type());
            while let Some(bar) = self.eat("|") {
                param.push(bar);
                param.push(self.parse_type());
            }
            if self.at_ident() {
                param.push(self.bump());
            }
            cc.push(self.interior(NodeKind::CatchFormalParameter, param));
            cc.push(self.expect(")", "catch clause"));
            if self.at("{") {
                cc.push(self.parse_block());
            }
            c.push(self.interior(NodeKind::CatchClause, cc));
        }
        if self.at("finally") {
            let f = self.bump();
            let mut fc = vec![f];
            if self.at("{") {
                fc.push(self.parse_block());
            }
            c.push(self.interior(NodeKind::FinallyClause, fc));
        }
        self.interior(NodeKind::TryStatement, c)
    }

    // ---- expressions ----

    fn parse_expression(&mut self) -> NodeId {
        self.parse_assignment()
    }

    fn parse_assignment(&mut self) -> NodeId {
        let lhs = self.parse_ternary();
        if ASSIGN_OPS.contains(&self.cur_text()) {
            let op = self.bump();
            let rhs = self.parse_assignment();
            return self.interior(NodeKind::Assignment, vec![lhs, op, rhs]);
        }
        lhs
    }

    fn parse_ternary(&mut self) -> NodeId {
        let cond = self.parse_binary(0);
        if self.at("?") {
            let q = self.bump();
            let then = self.parse_assignment();
            let mut c = vec![cond, q, then];
            c.push(self.expect(":", "conditional expression"));
            c.push(self.parse_ternary());
            return self.interior(NodeKind::TernaryExpression, c);
        }
        cond
    }

    /// Count of adjacent `>` tokens starting at the cursor (for fused shifts).
    fn gt_run(&self) -> usize {
        let mut n = 0;
        while self.text_at(self.pos + n) == ">" {
            if n > 0 {
                let prev = self.tok(self.pos + n - 1).unwrap().span.end;
                let here = self.tok(self.pos + n).unwrap().span.start;
                if prev != here {
                    break;
                }
            }
            n += 1;
        }
        n
    }

    fn parse_binary(&mut self, tier: usize) -> NodeId {
        if tier >= BINARY_TIERS.len() {
            return self.parse_unary();
        }
        let mut lhs = self.parse_binary(tier + 1);
        loop {
            let ops = BINARY_TIERS[tier];
            let cur = self.cur_text();
            let is_shift_tier = ops.contains(&">>");
            let gt = if cur == ">" { self.gt_run() } else { 0 };
            if is_shift_tier && gt >= 2 {
                let take = if gt >= 3 { 3 } else { 2 };
                let mut c = vec![lhs];
                for _ in 0..take {
                    c.push(self.bump());
                }
                c.push(self.parse_binary(tier + 1));
                lhs = self.interior(NodeKind::BinaryExpression, c);
                continue;
            }
            if cur == ">" && gt >= 2 {
                break; // a `>` run only means shift; let the shift tier take it
            }
            if cur == "instanceof" && ops.contains(&"instanceof") {
                let kw = self.bump();
                let ty = self.parse_type();
                lhs = self.interior(NodeKind::InstanceofExpression, vec![lhs, kw, ty]);
                continue;
            }
            if cur != "instanceof" && ops.contains(&cur) && cur != ">>" && cur != ">>>" {
                let op = self.bump();
                let rhs = self.parse_binary(tier + 1);
                lhs = self.interior(NodeKind::BinaryExpression, vec![lhs, op, rhs]);
                continue;
            }
            break;
        }
        lhs
    }

    fn parse_unary(&mut self) -> NodeId {
        match self.cur_text() {
            "++" | "--" => {
                let op = self.bump();
                let e = self.parse_unary();
                self.interior(NodeKind::UpdateExpression, vec![op, e])
            }
            "+" | "-" | "!" | "~" => {
                let op = self.bump();
                let e = self.parse_unary();
                self.interior(NodeKind::UnaryExpression, vec![op, e])
            }
            "(" if self.is_cast() => {
                let open = self.bump();
                let ty = self.parse_type();
                let close = self.expect(")", "cast expression");
                let e = self.parse_unary();
                self.interior(NodeKind::CastExpression, vec![open, ty, close, e])
            }
            _ => self.parse_postfix(),
        }
    }

    fn is_cast(&self) -> bool {
        debug_assert!(self.at("("));
        let Some(j) = self.scan_type(self.pos + 1) else { return false };
        if self.text_at(j) != ")" {
            return false;
        }
        // primitives in parens are always casts; a class type needs an
        // operand-looking token after `)`
        let primitive = self.is_primitive_at(self.pos + 1);
        let after = self.tok(j + 1);
        match after {
            None => false,
            Some(t) => match t.kind {
                TokenKind::Identifier | TokenKind::Number | TokenKind::Str | TokenKind::Char => {
                    true
                }
                TokenKind::Keyword => {
                    matches!(t.text.as_str(), "this" | "super" | "new" | "true" | "false" | "null")
                }
                TokenKind::Operator => {
                    t.text == "!" || t.text == "~" || (primitive && matches!(t.text.as_str(), "+" | "-"))
                }
                TokenKind::Punct => t.text == "(" && primitive,
                _ => false,
            },
        }
    }

    fn parse_postfix(&mut self) -> NodeId {
        let mut e = self.parse_primary();
        loop {
            match self.cur_text() {
                "." => {
                    if self.nth_text(1) == "class" {
                        let dot = self.bump();
                        let kw = self.bump();
                        e = self.interior(NodeKind::ClassLiteral, vec![e, dot, kw]);
                    } else if self.ident_at(self.pos + 1) && self.nth_text(2) == "(" {
                        let dot = self.bump();
                        let name = self.bump();
                        let args = self.parse_argument_list();
                        e = self.interior(NodeKind::MethodInvocation, vec![e, dot, name, args]);
                    } else if self.ident_at(self.pos + 1)
                        || matches!(self.nth_text(1), "this" | "super" | "new")
                    {
                        let dot = self.bump();
                        let name = self.bump();
                        e = self.interior(NodeKind::FieldAccess, vec![e, dot, name]);
                    } else {
                        break;
                    }
                }
                "[" => {
                    let open = self.bump();
                    let idx = self.parse_expression();
                    let mut c = vec![e, open, idx];
                    let cl = self.expect("]", "array access");
                    c.push(cl);
                    e = self.interior(NodeKind::ArrayAccess, c);
                }
                "++" | "--" => {
                    let op = self.bump();
                    e = self.interior(NodeKind::UpdateExpression, vec![e, op]);
                }
                "::" => {
                    let cc = self.bump();
                    let mut c = vec![e, cc];
                    if self.at_ident() || self.at("new") {
                        c.push(self.bump());
                    }
                    e = self.interior(NodeKind::MethodReference, c);
                }
                _ => break,
            }
        }
        e
    }

    fn parse_argument_list(&mut self) -> NodeId {
        let mut children = vec![self.bump()]; // (
        while !self.at(")") && !self.at_end() {
            let before = self.pos;
            children.push(self.parse_expression());
            if let Some(c) = self.eat(",") {
                children.push(c);
            }
            if self.pos == before {
                children.push(self.bump());
            }
        }
        let c = self.expect(")", "argument list");
        children.push(c);
        self.interior(NodeKind::ArgumentList, children)
    }

    fn is_lambda_parens(&self) -> bool {
        debug_assert!(self.at("("));
        self.scan_balanced(self.pos).is_some_and(|end| self.text_at(end) == "->")
    }

    fn parse_lambda_from_ident(&mut self) -> NodeId {
        let name = self.bump();
        let param = self.interior(NodeKind::FormalParameter, vec![name]);
        let params = self.interior(NodeKind::FormalParameters, vec![param]);
        self.finish_lambda(params)
    }

    fn parse_lambda_from_parens(&mut self) -> NodeId {
        let mut children = vec![self.bump()]; // (
        while !self.at(")") && !self.at_end() {
            let before = self.pos;
            let mut param = Vec::new();
            // typed parameter when a type scan lands on `name , )` shape
            let typed = self
                .scan_type(self.pos)
                .is_some_and(|j| self.ident_at(j) && matches!(self.text_at(j + 1), "," | ")"));
            if typed {
                param.push(self.parse_type());
            }
            if self.at_ident() {
                param.push(self.bump());
            }
            if param.is_empty() {
                children.push(self.bump());
            } else {
                children.push(self.interior(NodeKind::FormalParameter, param));
            }
            if let Some(c) = self.eat(",") {
                children.push(c);
            }
            if self.pos == before && !self.at(")") {
                children.push(self.bump());
            }
        }
        let c = self.expect(")", "lambda parameters");
        children.push(c);
        let params = self.interior(NodeKind::FormalParameters, children);
        self.finish_lambda(params)
    }

    fn finish_lambda(&mut self, params: NodeId) -> NodeId {
        let mut c = vec![params];
        let arrow = self.expect("->", "lambda");
        c.push(arrow);
        if self.at("{") {
            c.push(self.parse_block());
        } else {
            c.push(self.parse_expression());
        }
        self.interior(NodeKind::LambdaExpression, c)
    }

    fn parse_primary(&mut self) -> NodeId {
        match self.cur() {
            None => self.error_node(Vec::new(), "expected expression"),
            Some(t) => match (t.kind, t.text.as_str()) {
                (TokenKind::Number, _)
                | (TokenKind::Str, _)
                | (TokenKind::Char, _)
                | (TokenKind::Keyword, "true")
                | (TokenKind::Keyword, "false")
                | (TokenKind::Keyword, "null")
                | (TokenKind::Keyword, "this")
                | (TokenKind::Keyword, "super") => self.bump(),
                (TokenKind::Keyword, "new") => self.parse_new(),
                (TokenKind::Keyword, kw) if PRIMITIVES.contains(&kw) => {
                    // primitive class literal `int.class`
                    let kw = self.bump();
                    let ty = self.interior(NodeKind::PrimitiveType, vec![kw]);
                    ty
                }
                (TokenKind::Identifier, _) => {
                    if self.nth_text(1) == "->" {
                        self.parse_lambda_from_ident()
                    } else if self.nth_text(1) == "(" {
                        let name = self.bump();
                        let args = self.parse_argument_list();
                        self.interior(NodeKind::MethodInvocation, vec![name, args])
                    } else {
                        self.bump()
                    }
                }
                (TokenKind::Punct, "(") => {
                    if self.is_lambda_parens() {
                        self.parse_lambda_from_parens()
                    } else {
                        let open = self.bump();
                        let e = self.parse_expression();
                        let mut c = vec![open, e];
                        let cl = self.expect(")", "parenthesized expression");
                        c.push(cl);
                        self.interior(NodeKind::ParenthesizedExpression, c)
                    }
                }
                _ => {
                    let tok = self.bump();
                    self.error_node(vec![tok], "unexpected token in expression")
                }
            },
        }
    }

    fn parse_new(&mut self) -> NodeId {
        let kw = self.bump(); // new
        let ty = if self.is_primitive_at(self.pos) {
            let k = self.bump();
            self.interior(NodeKind::PrimitiveType, vec![k])
        } else if self.at_ident() {
            let mut c = vec![self.bump()];
            while self.at(".") && self.ident_at(self.pos + 1) {
                c.push(self.bump());
                c.push(self.bump());
            }
            if self.at("<") && self.scan_type_args(self.pos).is_some() {
                c.push(self.parse_type_arguments());
            }
            self.interior(NodeKind::ClassType, c)
        } else {
            self.error_node(Vec::new(), "expected type after new")
        };
        if self.at("[") {
            let mut c = vec![kw, ty];
            while self.at("[") {
                c.push(self.bump());
                if !self.at("]") && !self.at_end() {
                    c.push(self.parse_expression());
                }
                let cl = self.expect("]", "array creation");
                c.push(cl);
            }
            if self.at("{") {
                c.push(self.parse_array_initializer());
            }
            return self.interior(NodeKind::ArrayCreation, c);
        }
        let mut c = vec![kw, ty];
        if self.at("(") {
            c.push(self.parse_argument_list());
        }
        if self.at("{") {
            c.push(self.parse_class_body());
        }
        self.interior(NodeKind::ObjectCreation, c)
    }

    /// Anonymous class body. Members are parsed with the same machinery as
    /// the function itself so identifier occurrences inside stay visible to
    /// scope analysis.
    fn parse_class_body(&mut self) -> NodeId {
        let mut children = vec![self.bump()]; // {
        while !self.at("}") && !self.at_end() {
            let before = self.pos;
            children.push(self.parse_member());
            if self.pos == before {
                let tok = self.bump();
                children.push(self.error_node(vec![tok], "unexpected token in class body"));
            }
        }
        let c = self.expect("}", "class body");
        children.push(c);
        self.interior(NodeKind::Block, children)
    }

    fn parse_member(&mut self) -> NodeId {
        if self.at("{") {
            return self.parse_block(); // instance initializer
        }
        let mut children = Vec::new();
        if let Some(mods) = self.parse_modifiers() {
            children.push(mods);
        }
        // method: type name ( ... ) body; field: type declarators ;
        let is_method = self
            .scan_type(self.pos)
            .is_some_and(|j| self.ident_at(j) && self.text_at(j + 1) == "(");
        if is_method {
            children.push(self.parse_type());
            children.push(self.bump()); // name
            children.push(self.parse_formal_parameters());
            if self.at("throws") {
                let mut th = vec![self.bump()];
                while self.scan_type(self.pos).is_some() {
                    th.push(self.parse_type());
                    match self.eat(",") {
                        Some(c) => th.push(c),
                        None => break,
                    }
                }
                children.push(self.interior(NodeKind::ThrowsClause, th));
            }
            if self.at("{") {
                children.push(self.parse_block());
            } else if let Some(s) = self.eat(";") {
                children.push(s);
            }
            return self.interior(NodeKind::MethodDeclaration, children);
        }
        if self.looks_like_local_decl() || self.scan_type(self.pos).is_some_and(|j| self.ident_at(j))
        {
            let decl = self.parse_local_decl(true);
            children.push(decl);
            if children.len() == 1 {
                return decl;
            }
            return self.interior(NodeKind::LocalVariableDeclaration, children);
        }
        let recovered = self.recover_statement("unrecognized class member");
        if children.is_empty() {
            recovered
        } else {
            children.push(recovered);
            self.interior(NodeKind::ErrorNode, children)
        }
    }
}

/// Rebuild the arena in pre-order so node ids are deterministic and
/// source-ordered, with the root at id 0.
fn renumber(nodes: Vec<Node>, root: NodeId) -> Tree {
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        order.push(id);
        for &c in nodes[id].children.iter().rev() {
            stack.push(c);
        }
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let mut out = Vec::with_capacity(order.len());
    for &old in &order {
        let n = &nodes[old];
        out.push(Node {
            kind: n.kind,
            span: n.span,
            parent: n.parent.map(|p| remap[p]),
            children: n.children.iter().map(|&c| remap[c]).collect(),
            token: n.token,
            error: n.error,
        });
    }
    Tree { nodes: out, root: 0 }
}
