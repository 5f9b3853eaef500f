use std::fmt;

use serde::{Deserialize, Serialize};

/// One-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Span {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Parser-assigned identifier, unique within one module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: NodeId,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub annotation: Option<Expr>,
    pub default: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    FunctionDef {
        name: String,
        params: Vec<Param>,
        returns: Option<Expr>,
        body: Vec<Stmt>,
    },
    /// `a = b = value`; targets are names, subscripts or tuples of those.
    Assign { targets: Vec<Expr>, value: Expr },
    AugAssign { target: Expr, op: BinOp, value: Expr },
    If(IfChain),
    For { target: Expr, iter: Expr, body: Vec<Stmt> },
    While { test: Expr, body: Vec<Stmt> },
    Return(Option<Expr>),
    Expr(Expr),
    Pass,
    Break,
    Continue,
}

/// An `if` with its `elif` arms and optional `else`.
#[derive(Debug, Clone, PartialEq)]
pub struct IfChain {
    pub branches: Vec<CondBranch>,
    pub orelse: Option<ElseBranch>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondBranch {
    pub id: NodeId,
    pub span: Span,
    pub test: Expr,
    pub body: Vec<Stmt>,
    /// Ids of the enclosing condition branches, outermost first.
    pub ancestors: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElseBranch {
    pub id: NodeId,
    pub span: Span,
    pub body: Vec<Stmt>,
    /// The `if`/`elif` branches at the same nesting level this `else` completes.
    pub siblings: Vec<NodeId>,
    pub ancestors: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: NodeId,
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictEntry {
    pub key: Expr,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comprehension {
    pub target: Box<Expr>,
    pub iter: Box<Expr>,
    pub cond: Option<Box<Expr>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Name(String),
    Int(i64),
    Str(String),
    Bool(bool),
    NoneLit,
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Dict(Vec<DictEntry>),
    Subscript { value: Box<Expr>, index: Box<Expr> },
    /// Only valid as a subscript index.
    Slice { lower: Option<Box<Expr>>, upper: Option<Box<Expr>>, step: Option<Box<Expr>> },
    Call { func: Box<Expr>, args: Vec<Expr>, kwargs: Vec<(String, Expr)> },
    Method { receiver: Box<Expr>, method: String, args: Vec<Expr> },
    BinOp { op: BinOp, left: Box<Expr>, right: Box<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr> },
    BoolOp { op: BoolOp, left: Box<Expr>, right: Box<Expr> },
    /// Possibly chained: `a < b <= c`.
    Compare { left: Box<Expr>, rest: Vec<(CmpOp, Expr)> },
    IfExp { test: Box<Expr>, body: Box<Expr>, orelse: Box<Expr> },
    ListComp { elt: Box<Expr>, gen: Comprehension },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    In,
    NotIn,
    Is,
    IsNot,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::NotEq => "!=",
            CmpOp::Lt => "<",
            CmpOp::LtE => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtE => ">=",
            CmpOp::In => "in",
            CmpOp::NotIn => "not in",
            CmpOp::Is => "is",
            CmpOp::IsNot => "is not",
        }
    }
}

impl Expr {
    /// Direct sub-expressions in source order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Name(_) | ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) | ExprKind::NoneLit => vec![],
            ExprKind::List(items) | ExprKind::Tuple(items) => items.iter().collect(),
            ExprKind::Dict(entries) => entries.iter().flat_map(|e| [&e.key, &e.value]).collect(),
            ExprKind::Subscript { value, index } => vec![value, index],
            ExprKind::Slice { lower, upper, step } => {
                [lower, upper, step].into_iter().flatten().map(|b| &**b).collect()
            }
            ExprKind::Call { func, args, kwargs } => std::iter::once(&**func)
                .chain(args.iter())
                .chain(kwargs.iter().map(|(_, e)| e))
                .collect(),
            ExprKind::Method { receiver, args, .. } => std::iter::once(&**receiver).chain(args.iter()).collect(),
            ExprKind::BinOp { left, right, .. } | ExprKind::BoolOp { left, right, .. } => vec![left, right],
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Compare { left, rest } => std::iter::once(&**left).chain(rest.iter().map(|(_, e)| e)).collect(),
            ExprKind::IfExp { test, body, orelse } => vec![body, test, orelse],
            ExprKind::ListComp { elt, gen } => {
                let mut v: Vec<&Expr> = vec![elt, &gen.target, &gen.iter];
                if let Some(c) = &gen.cond {
                    v.push(c);
                }
                v
            }
        }
    }

    /// Pre-order walk over this expression and all descendants.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

impl Stmt {
    /// Expressions that belong directly to this statement (not to nested blocks).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::FunctionDef { params, returns, .. } => params
                .iter()
                .flat_map(|p| p.annotation.iter().chain(p.default.iter()))
                .chain(returns.iter())
                .collect(),
            StmtKind::Assign { targets, value } => targets.iter().chain(std::iter::once(value)).collect(),
            StmtKind::AugAssign { target, value, .. } => vec![target, value],
            StmtKind::If(chain) => chain.branches.iter().map(|b| &b.test).collect(),
            StmtKind::For { target, iter, .. } => vec![target, iter],
            StmtKind::While { test, .. } => vec![test],
            StmtKind::Return(v) => v.iter().collect(),
            StmtKind::Expr(e) => vec![e],
            StmtKind::Pass | StmtKind::Break | StmtKind::Continue => vec![],
        }
    }

    /// Nested statement blocks in source order.
    pub fn blocks(&self) -> Vec<&[Stmt]> {
        match &self.kind {
            StmtKind::FunctionDef { body, .. } | StmtKind::For { body, .. } | StmtKind::While { body, .. } => {
                vec![body]
            }
            StmtKind::If(chain) => chain
                .branches
                .iter()
                .map(|b| b.body.as_slice())
                .chain(chain.orelse.iter().map(|e| e.body.as_slice()))
                .collect(),
            _ => vec![],
        }
    }
}

impl Module {
    pub fn function(&self, name: &str) -> Option<&Stmt> {
        self.body
            .iter()
            .find(|s| matches!(&s.kind, StmtKind::FunctionDef { name: n, .. } if n == name))
    }

    /// Every statement in the module, pre-order.
    pub fn walk_stmts<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        fn go<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
            for s in stmts {
                f(s);
                for b in s.blocks() {
                    go(b, f);
                }
            }
        }
        go(&self.body, f);
    }
}
