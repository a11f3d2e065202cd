//! Syntax tree and token types shared by the parser and every later stage.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Byte range into the function source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Number,
    Str,
    Char,
    Operator,
    Punct,
    Comment,
    Error,
}

impl TokenKind {
    /// Trivia tokens carry text but never become tree leaves.
    pub fn is_trivia(&self) -> bool {
        matches!(self, TokenKind::Comment)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    pub span: Span,
}

pub type TokenId = usize;
pub type NodeId = usize;

/// Node kinds of the syntax tree. Interior kinds mirror the grammar's
/// production names; leaf kinds classify the underlying token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    // roots and declarations
    MethodDeclaration,
    ConstructorDeclaration,
    Modifiers,
    Annotation,
    FormalParameters,
    FormalParameter,
    ThrowsClause,
    // statements
    Block,
    LocalVariableDeclaration,
    VariableDeclarator,
    ExpressionStatement,
    IfStatement,
    ForStatement,
    EnhancedForStatement,
    EnhancedForVariable,
    WhileStatement,
    DoStatement,
    SwitchStatement,
    SwitchBlock,
    SwitchCase,
    ReturnStatement,
    BreakStatement,
    ContinueStatement,
    ThrowStatement,
    TryStatement,
    ResourceSpecification,
    CatchClause,
    CatchFormalParameter,
    FinallyClause,
    SynchronizedStatement,
    LabeledStatement,
    AssertStatement,
    EmptyStatement,
    // expressions
    Assignment,
    TernaryExpression,
    BinaryExpression,
    InstanceofExpression,
    UnaryExpression,
    UpdateExpression,
    CastExpression,
    MethodInvocation,
    FieldAccess,
    ArrayAccess,
    ObjectCreation,
    ArrayCreation,
    ArrayInitializer,
    LambdaExpression,
    MethodReference,
    ParenthesizedExpression,
    ArgumentList,
    ClassLiteral,
    // types
    PrimitiveType,
    ClassType,
    ArrayType,
    TypeArguments,
    Wildcard,
    // leaves
    IdentifierLeaf,
    KeywordLeaf,
    NumberLeaf,
    StringLeaf,
    CharLeaf,
    OperatorLeaf,
    PunctLeaf,
    // recovery
    ErrorNode,
}

impl NodeKind {
    /// Grammar label used in graph dumps, kind embeddings and debugging.
    pub fn label(&self) -> &'static str {
        use NodeKind::*;
        match self {
            MethodDeclaration => "method_declaration",
            ConstructorDeclaration => "constructor_declaration",
            Modifiers => "modifiers",
            Annotation => "annotation",
            FormalParameters => "formal_parameters",
            FormalParameter => "formal_parameter",
            ThrowsClause => "throws_clause",
            Block => "block",
            LocalVariableDeclaration => "local_variable_declaration",
            VariableDeclarator => "variable_declarator",
            ExpressionStatement => "expression_statement",
            IfStatement => "if_statement",
            ForStatement => "for_statement",
            EnhancedForStatement => "enhanced_for_statement",
            EnhancedForVariable => "enhanced_for_variable",
            WhileStatement => "while_statement",
            DoStatement => "do_statement",
            SwitchStatement => "switch_statement",
            SwitchBlock => "switch_block",
            SwitchCase => "switch_case",
            ReturnStatement => "return_statement",
            BreakStatement => "break_statement",
            ContinueStatement => "continue_statement",
            ThrowStatement => "throw_statement",
            TryStatement => "try_statement",
            ResourceSpecification => "resource_specification",
            CatchClause => "catch_clause",
            CatchFormalParameter => "catch_formal_parameter",
            FinallyClause => "finally_clause",
            SynchronizedStatement => "synchronized_statement",
            LabeledStatement => "labeled_statement",
            AssertStatement => "assert_statement",
            EmptyStatement => "empty_statement",
            Assignment => "assignment",
            TernaryExpression => "ternary_expression",
            BinaryExpression => "binary_expression",
            InstanceofExpression => "instanceof_expression",
            UnaryExpression => "unary_expression",
            UpdateExpression => "update_expression",
            CastExpression => "cast_expression",
            MethodInvocation => "method_invocation",
            FieldAccess => "field_access",
            ArrayAccess => "array_access",
            ObjectCreation => "object_creation",
            ArrayCreation => "array_creation",
            ArrayInitializer => "array_initializer",
            LambdaExpression => "lambda_expression",
            MethodReference => "method_reference",
            ParenthesizedExpression => "parenthesized_expression",
            ArgumentList => "argument_list",
            ClassLiteral => "class_literal",
            PrimitiveType => "primitive_type",
            ClassType => "class_type",
            ArrayType => "array_type",
            TypeArguments => "type_arguments",
            Wildcard => "wildcard",
            IdentifierLeaf => "identifier",
            KeywordLeaf => "keyword",
            NumberLeaf => "number",
            StringLeaf => "string",
            CharLeaf => "char",
            OperatorLeaf => "operator",
            PunctLeaf => "punct",
            ErrorNode => "error",
        }
    }

    pub fn is_leaf_kind(&self) -> bool {
        use NodeKind::*;
        matches!(
            self,
            IdentifierLeaf | KeywordLeaf | NumberLeaf | StringLeaf | CharLeaf | OperatorLeaf
                | PunctLeaf
        )
    }

    /// All kinds, in a fixed order; index into this list is the kind id used
    /// by the embedding tables.
    pub fn all() -> &'static [NodeKind] {
        use NodeKind::*;
        &[
            MethodDeclaration,
            ConstructorDeclaration,
            Modifiers,
            Annotation,
            FormalParameters,
            FormalParameter,
            ThrowsClause,
            Block,
            LocalVariableDeclaration,
            VariableDeclarator,
            ExpressionStatement,
            IfStatement,
            ForStatement,
            EnhancedForStatement,
            EnhancedForVariable,
            WhileStatement,
            DoStatement,
            SwitchStatement,
            SwitchBlock,
            SwitchCase,
            ReturnStatement,
            BreakStatement,
            ContinueStatement,
            ThrowStatement,
            TryStatement,
            ResourceSpecification,
            CatchClause,
            CatchFormalParameter,
            FinallyClause,
            SynchronizedStatement,
            LabeledStatement,
            AssertStatement,
            EmptyStatement,
            Assignment,
            TernaryExpression,
            BinaryExpression,
            InstanceofExpression,
            UnaryExpression,
            UpdateExpression,
            CastExpression,
            MethodInvocation,
            FieldAccess,
            ArrayAccess,
            ObjectCreation,
            ArrayCreation,
            ArrayInitializer,
            LambdaExpression,
            MethodReference,
            ParenthesizedExpression,
            ArgumentList,
            ClassLiteral,
            PrimitiveType,
            ClassType,
            ArrayType,
            TypeArguments,
            Wildcard,
            IdentifierLeaf,
            KeywordLeaf,
            NumberLeaf,
            StringLeaf,
            CharLeaf,
            OperatorLeaf,
            PunctLeaf,
            ErrorNode,
        ]
    }

    pub fn id(&self) -> usize {
        NodeKind::all()
            .iter()
            .position(|k| k == self)
            .expect("kind registered in NodeKind::all")
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Present iff this node is a leaf; index into the token stream.
    pub token: Option<TokenId>,
    pub error: bool,
}

/// Arena-backed syntax tree. Node 0 is always the root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub root: NodeId,
}

impl Tree {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[id].children.iter().copied()
    }

    /// Pre-order walk of the subtree rooted at `id`.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            // push in reverse so the walk stays source-ordered
            for &c in self.nodes[n].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn leaves(&self, id: NodeId) -> Vec<NodeId> {
        self.descendants(id)
            .into_iter()
            .filter(|&n| self.nodes[n].token.is_some())
            .collect()
    }

    pub fn has_error_nodes(&self) -> bool {
        self.nodes.iter().any(|n| n.error || n.kind == NodeKind::ErrorNode)
    }

    /// Walk up from `id` until `pred` holds; includes `id` itself.
    pub fn ancestor_where<F: Fn(&Node) -> bool>(&self, id: NodeId, pred: F) -> Option<NodeId> {
        let mut cur = Some(id);
        while let Some(n) = cur {
            if pred(&self.nodes[n]) {
                return Some(n);
            }
            cur = self.nodes[n].parent;
        }
        None
    }

    /// Structural fingerprint: kinds and shape, ignoring spans and token text.
    /// Renames must leave this unchanged.
    pub fn shape_signature(&self) -> Vec<(NodeKind, usize, Option<usize>)> {
        // (kind, child count, parent) for every node in arena order; arena
        // order is deterministic for a given parse.
        self.nodes
            .iter()
            .map(|n| (n.kind, n.children.len(), n.parent))
            .collect()
    }
}
