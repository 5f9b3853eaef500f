//! Recursive-descent parser producing a [`Module`].

use super::ast::*;
use super::lexer::{Keyword, Token, TokenKind};
use super::Diagnostic;

const MAX_DEPTH: usize = 96;

pub struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_id: u32,
    depth: usize,
    branch_stack: Vec<NodeId>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    pub fn new(tokens: Vec<Token>) -> Parser {
        let tokens = tokens
            .into_iter()
            .filter(|t| !matches!(t.kind, TokenKind::Comment(_)))
            .collect();
        Parser { tokens, pos: 0, next_id: 0, depth: 0, branch_stack: Vec::new() }
    }

    pub fn parse_module(mut self) -> PResult<Module> {
        let mut body = Vec::new();
        while !self.at(&TokenKind::Eof) {
            if self.eat(&TokenKind::Newline) {
                continue;
            }
            body.extend(self.statement()?);
        }
        Ok(Module { body })
    }

    fn id(&mut self) -> NodeId {
        self.next_id += 1;
        NodeId(self.next_id)
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_kind_at(&self, k: usize) -> &TokenKind {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].kind
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        self.peek().kind == TokenKind::Keyword(kw)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        let msg = msg.into();
        let message = match &t.kind {
            TokenKind::Reserved(k) => format!("'{k}' is outside the supported subset"),
            TokenKind::Unsupported(o) => format!("operator '{o}' is outside the supported subset"),
            other => format!("{msg}, found {other}"),
        };
        Err(Diagnostic { span: t.span, message })
    }

    fn expect_op(&mut self, op: &str) -> PResult<Span> {
        if self.at_op(op) {
            Ok(self.advance().span)
        } else {
            self.error(format!("expected '{op}'"))
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.advance().span)
        } else {
            self.error(format!("expected '{}'", kw.as_str()))
        }
    }

    fn expect_name(&mut self) -> PResult<(String, Span)> {
        match self.peek().kind.clone() {
            TokenKind::Name(n) => {
                let span = self.advance().span;
                Ok((n, span))
            }
            _ => self.error("expected a name"),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.error("nesting too deep");
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn end_of_simple(&mut self) -> PResult<()> {
        if self.eat(&TokenKind::Newline) || self.at(&TokenKind::Eof) || self.at(&TokenKind::Dedent) {
            Ok(())
        } else {
            self.error("expected end of statement")
        }
    }

    /// One logical line, which may hold several `;`-separated simple statements.
    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        self.enter()?;
        let r = self.statement_inner();
        self.leave();
        r
    }

    fn statement_inner(&mut self) -> PResult<Vec<Stmt>> {
        let span = self.peek().span;
        match &self.peek().kind {
            TokenKind::Keyword(Keyword::Def) => return Ok(vec![self.function_def()?]),
            TokenKind::Keyword(Keyword::If) => return Ok(vec![self.if_stmt()?]),
            TokenKind::Keyword(Keyword::For) => return Ok(vec![self.for_stmt()?]),
            TokenKind::Keyword(Keyword::While) => return Ok(vec![self.while_stmt()?]),
            TokenKind::Indent => return self.error("unexpected indentation"),
            _ => {}
        }
        let mut out = vec![self.simple_statement(span)?];
        while self.eat_op(";") {
            if self.at(&TokenKind::Newline) || self.at(&TokenKind::Eof) {
                break;
            }
            let span = self.peek().span;
            out.push(self.simple_statement(span)?);
        }
        self.end_of_simple()?;
        Ok(out)
    }

    fn simple_statement(&mut self, span: Span) -> PResult<Stmt> {
        let kind = match &self.peek().kind {
            TokenKind::Keyword(Keyword::Return) => {
                self.advance();
                if self.at(&TokenKind::Newline) || self.at(&TokenKind::Eof) || self.at_op(";") {
                    StmtKind::Return(None)
                } else {
                    StmtKind::Return(Some(self.expr_list()?))
                }
            }
            TokenKind::Keyword(Keyword::Pass) => {
                self.advance();
                StmtKind::Pass
            }
            TokenKind::Keyword(Keyword::Break) => {
                self.advance();
                StmtKind::Break
            }
            TokenKind::Keyword(Keyword::Continue) => {
                self.advance();
                StmtKind::Continue
            }
            _ => {
                let first = self.expr_list()?;
                if self.at_op("=") {
                    let mut targets = vec![first];
                    let mut value;
                    loop {
                        self.advance();
                        value = self.expr_list()?;
                        if !self.at_op("=") {
                            break;
                        }
                        targets.push(value);
                    }
                    for t in &targets {
                        check_target(t)?;
                    }
                    StmtKind::Assign { targets, value }
                } else if self.at_op("+=") || self.at_op("-=") || self.at_op("*=") {
                    let op = match self.advance().kind {
                        TokenKind::Op("+=") => BinOp::Add,
                        TokenKind::Op("-=") => BinOp::Sub,
                        _ => BinOp::Mul,
                    };
                    check_target(&first)?;
                    if matches!(first.kind, ExprKind::Tuple(_)) {
                        return Err(Diagnostic { span: first.span, message: "augmented assignment to a tuple".into() });
                    }
                    let value = self.expr_list()?;
                    StmtKind::AugAssign { target: first, op, value }
                } else if self.at_op(":") {
                    return self.error("annotated assignments are outside the supported subset");
                } else {
                    StmtKind::Expr(first)
                }
            }
        };
        Ok(Stmt { id: self.id(), span, kind })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_op(":")?;
        if !self.at(&TokenKind::Newline) {
            // Inline suite: `if x: y = 1`
            let span = self.peek().span;
            let mut out = vec![self.simple_statement(span)?];
            while self.eat_op(";") {
                if self.at(&TokenKind::Newline) || self.at(&TokenKind::Eof) {
                    break;
                }
                let span = self.peek().span;
                out.push(self.simple_statement(span)?);
            }
            self.end_of_simple()?;
            return Ok(out);
        }
        self.advance();
        if !self.eat(&TokenKind::Indent) {
            return self.error("expected an indented block");
        }
        let mut body = Vec::new();
        while !self.eat(&TokenKind::Dedent) {
            if self.at(&TokenKind::Eof) {
                break;
            }
            if self.eat(&TokenKind::Newline) {
                continue;
            }
            body.extend(self.statement()?);
        }
        Ok(body)
    }

    fn function_def(&mut self) -> PResult<Stmt> {
        let span = self.expect_kw(Keyword::Def)?;
        let (name, _) = self.expect_name()?;
        self.expect_op("(")?;
        let mut params = Vec::new();
        while !self.at_op(")") {
            let (pname, _) = self.expect_name()?;
            let annotation = if self.eat_op(":") { Some(self.expr()?) } else { None };
            let default = if self.eat_op("=") { Some(self.expr()?) } else { None };
            params.push(Param { name: pname, annotation, default });
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        let returns = if self.eat_op("->") { Some(self.expr()?) } else { None };
        let saved = std::mem::take(&mut self.branch_stack);
        let body = self.block();
        self.branch_stack = saved;
        let body = body?;
        Ok(Stmt { id: self.id(), span, kind: StmtKind::FunctionDef { name, params, returns, body } })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let span = self.peek().span;
        let mut branches = Vec::new();
        let mut first = true;
        loop {
            let bspan = self.peek().span;
            if first {
                self.expect_kw(Keyword::If)?;
                first = false;
            } else if !self.eat_kw(Keyword::Elif) {
                break;
            }
            let test = self.named_test()?;
            let id = self.id();
            let ancestors = self.branch_stack.clone();
            self.branch_stack.push(id);
            let body = self.block();
            self.branch_stack.pop();
            branches.push(CondBranch { id, span: bspan, test, body: body?, ancestors });
        }
        let orelse = if self.at_kw(Keyword::Else) {
            let espan = self.advance().span;
            let id = self.id();
            let ancestors = self.branch_stack.clone();
            self.branch_stack.push(id);
            let body = self.block();
            self.branch_stack.pop();
            Some(ElseBranch { id, span: espan, body: body?, siblings: branches.iter().map(|b| b.id).collect(), ancestors })
        } else {
            None
        };
        Ok(Stmt { id: self.id(), span, kind: StmtKind::If(IfChain { branches, orelse }) })
    }

    fn named_test(&mut self) -> PResult<Expr> {
        self.expr()
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        let span = self.expect_kw(Keyword::For)?;
        let target = self.target_list()?;
        self.expect_kw(Keyword::In)?;
        let iter = self.expr_list()?;
        let body = self.block()?;
        Ok(Stmt { id: self.id(), span, kind: StmtKind::For { target, iter, body } })
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        let span = self.expect_kw(Keyword::While)?;
        let test = self.expr()?;
        let body = self.block()?;
        Ok(Stmt { id: self.id(), span, kind: StmtKind::While { test, body } })
    }

    /// Loop or comprehension target: a name or a tuple of names.
    fn target_list(&mut self) -> PResult<Expr> {
        let span = self.peek().span;
        let parenthesized = self.eat_op("(");
        let mut items = Vec::new();
        let mut comma = false;
        loop {
            let (n, s) = self.expect_name()?;
            items.push(Expr { id: self.id(), span: s, kind: ExprKind::Name(n) });
            if !self.eat_op(",") {
                break;
            }
            comma = true;
            if self.at_kw(Keyword::In) || self.at_op(")") {
                break;
            }
        }
        if parenthesized {
            self.expect_op(")")?;
        }
        // `x` and `(x)` are plain names; `x,` is a one-element tuple.
        if items.len() == 1 && !comma {
            Ok(items.pop().unwrap())
        } else {
            Ok(Expr { id: self.id(), span, kind: ExprKind::Tuple(items) })
        }
    }

    /// `a, b, c` without brackets becomes a tuple.
    fn expr_list(&mut self) -> PResult<Expr> {
        let span = self.peek().span;
        let first = self.expr()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.starts_expr() {
                items.push(self.expr()?);
            } else {
                break;
            }
        }
        Ok(Expr { id: self.id(), span, kind: ExprKind::Tuple(items) })
    }

    fn starts_expr(&self) -> bool {
        match &self.peek().kind {
            TokenKind::Name(_) | TokenKind::Int(_) | TokenKind::Str(_) => true,
            TokenKind::Keyword(k) => matches!(k, Keyword::Not | Keyword::True | Keyword::False | Keyword::None),
            TokenKind::Op(o) => matches!(*o, "(" | "[" | "{" | "-" | "+"),
            _ => false,
        }
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let r = self.ternary();
        self.leave();
        r
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let body = self.or_expr()?;
        if self.at_kw(Keyword::If) {
            self.advance();
            let test = self.or_expr()?;
            self.expect_kw(Keyword::Else)?;
            let orelse = self.expr()?;
            let span = body.span;
            return Ok(Expr {
                id: self.id(),
                span,
                kind: ExprKind::IfExp { test: Box::new(test), body: Box::new(body), orelse: Box::new(orelse) },
            });
        }
        Ok(body)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut left = self.and_expr()?;
        let base = self.depth;
        while self.eat_kw(Keyword::Or) {
            self.enter()?;
            let right = self.and_expr()?;
            let span = left.span;
            left = Expr { id: self.id(), span, kind: ExprKind::BoolOp { op: BoolOp::Or, left: Box::new(left), right: Box::new(right) } };
        }
        self.depth = base;
        Ok(left)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut left = self.not_expr()?;
        let base = self.depth;
        while self.eat_kw(Keyword::And) {
            self.enter()?;
            let right = self.not_expr()?;
            let span = left.span;
            left = Expr { id: self.id(), span, kind: ExprKind::BoolOp { op: BoolOp::And, left: Box::new(left), right: Box::new(right) } };
        }
        self.depth = base;
        Ok(left)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.at_kw(Keyword::Not) {
            let span = self.advance().span;
            self.enter()?;
            let operand = self.not_expr();
            self.leave();
            return Ok(Expr { id: self.id(), span, kind: ExprKind::Unary { op: UnaryOp::Not, operand: Box::new(operand?) } });
        }
        self.comparison()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match &self.peek().kind {
            TokenKind::Op("==") => CmpOp::Eq,
            TokenKind::Op("!=") => CmpOp::NotEq,
            TokenKind::Op("<") => CmpOp::Lt,
            TokenKind::Op("<=") => CmpOp::LtE,
            TokenKind::Op(">") => CmpOp::Gt,
            TokenKind::Op(">=") => CmpOp::GtE,
            TokenKind::Keyword(Keyword::In) => CmpOp::In,
            TokenKind::Keyword(Keyword::Not) if *self.peek_kind_at(1) == TokenKind::Keyword(Keyword::In) => {
                self.advance();
                CmpOp::NotIn
            }
            TokenKind::Keyword(Keyword::Is) => {
                if *self.peek_kind_at(1) == TokenKind::Keyword(Keyword::Not) {
                    self.advance();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.arith()?;
        let mut rest = Vec::new();
        while let Some(op) = self.cmp_op() {
            rest.push((op, self.arith()?));
        }
        if rest.is_empty() {
            return Ok(left);
        }
        let span = left.span;
        Ok(Expr { id: self.id(), span, kind: ExprKind::Compare { left: Box::new(left), rest } })
    }

    fn arith(&mut self) -> PResult<Expr> {
        let mut left = self.term()?;
        let base = self.depth;
        loop {
            let op = if self.at_op("+") {
                BinOp::Add
            } else if self.at_op("-") {
                BinOp::Sub
            } else {
                break;
            };
            self.advance();
            self.enter()?;
            let right = self.term()?;
            let span = left.span;
            left = Expr { id: self.id(), span, kind: ExprKind::BinOp { op, left: Box::new(left), right: Box::new(right) } };
        }
        self.depth = base;
        Ok(left)
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut left = self.unary()?;
        let base = self.depth;
        loop {
            let op = if self.at_op("*") {
                BinOp::Mul
            } else if self.at_op("//") {
                BinOp::FloorDiv
            } else if self.at_op("/") {
                BinOp::Div
            } else if self.at_op("%") {
                BinOp::Mod
            } else {
                break;
            };
            self.advance();
            self.enter()?;
            let right = self.unary()?;
            let span = left.span;
            left = Expr { id: self.id(), span, kind: ExprKind::BinOp { op, left: Box::new(left), right: Box::new(right) } };
        }
        self.depth = base;
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at_op("-") || self.at_op("+") {
            let neg = self.at_op("-");
            let span = self.advance().span;
            self.enter()?;
            let operand = self.unary();
            self.leave();
            let operand = operand?;
            if !neg {
                return Ok(operand);
            }
            return Ok(Expr { id: self.id(), span, kind: ExprKind::Unary { op: UnaryOp::Neg, operand: Box::new(operand) } });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        let base = self.depth;
        loop {
            if self.at_op("(") || self.at_op("[") || self.at_op(".") {
                self.enter()?;
            }
            if self.at_op("(") {
                self.advance();
                let (args, kwargs) = self.call_args()?;
                let span = e.span;
                e = Expr { id: self.id(), span, kind: ExprKind::Call { func: Box::new(e), args, kwargs } };
            } else if self.at_op("[") {
                self.advance();
                let index = self.subscript_index()?;
                self.expect_op("]")?;
                let span = e.span;
                e = Expr { id: self.id(), span, kind: ExprKind::Subscript { value: Box::new(e), index: Box::new(index) } };
            } else if self.at_op(".") {
                self.advance();
                let (method, _) = self.expect_name()?;
                if !self.at_op("(") {
                    return self.error("attribute access is only supported for method calls");
                }
                self.advance();
                let (args, kwargs) = self.call_args()?;
                if !kwargs.is_empty() {
                    return self.error("keyword arguments to methods are outside the supported subset");
                }
                let span = e.span;
                e = Expr { id: self.id(), span, kind: ExprKind::Method { receiver: Box::new(e), method, args } };
            } else {
                break;
            }
        }
        self.depth = base;
        Ok(e)
    }

    fn subscript_index(&mut self) -> PResult<Expr> {
        let span = self.peek().span;
        let lower = if self.at_op(":") { None } else { Some(self.expr()?) };
        if !self.at_op(":") {
            let lower = lower.expect("non-slice index");
            if self.at_op(",") {
                return self.error("multi-dimensional subscripts are outside the supported subset");
            }
            return Ok(lower);
        }
        self.advance();
        let upper = if self.at_op(":") || self.at_op("]") { None } else { Some(Box::new(self.expr()?)) };
        let step = if self.eat_op(":") && !self.at_op("]") { Some(Box::new(self.expr()?)) } else { None };
        Ok(Expr { id: self.id(), span, kind: ExprKind::Slice { lower: lower.map(Box::new), upper, step } })
    }

    fn call_args(&mut self) -> PResult<(Vec<Expr>, Vec<(String, Expr)>)> {
        let mut args = Vec::new();
        let mut kwargs = Vec::new();
        while !self.at_op(")") {
            if let TokenKind::Name(n) = &self.peek().kind {
                if *self.peek_kind_at(1) == TokenKind::Op("=") {
                    let n = n.clone();
                    self.advance();
                    self.advance();
                    kwargs.push((n, self.expr()?));
                    if !self.eat_op(",") {
                        break;
                    }
                    continue;
                }
            }
            if !kwargs.is_empty() {
                return self.error("positional argument after keyword argument");
            }
            let arg = self.expr()?;
            if self.at_kw(Keyword::For) {
                // Bare generator argument: f(x for x in xs)
                let gen = self.comprehension()?;
                let span = arg.span;
                args.push(Expr { id: self.id(), span, kind: ExprKind::ListComp { elt: Box::new(arg), gen } });
                break;
            }
            args.push(arg);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok((args, kwargs))
    }

    fn comprehension(&mut self) -> PResult<Comprehension> {
        self.expect_kw(Keyword::For)?;
        let target = self.target_list()?;
        self.expect_kw(Keyword::In)?;
        let iter = self.or_expr()?;
        let cond = if self.eat_kw(Keyword::If) { Some(Box::new(self.or_expr()?)) } else { None };
        if self.at_kw(Keyword::For) {
            return self.error("comprehensions with more than one 'for' clause are outside the supported subset");
        }
        Ok(Comprehension { target: Box::new(target), iter: Box::new(iter), cond })
    }

    fn atom(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        let span = tok.span;
        let kind = match tok.kind {
            TokenKind::Name(n) => {
                self.advance();
                ExprKind::Name(n)
            }
            TokenKind::Int(i) => {
                self.advance();
                ExprKind::Int(i)
            }
            TokenKind::Str(s) => {
                self.advance();
                let mut s = s;
                // Adjacent literals concatenate.
                while let TokenKind::Str(more) = &self.peek().kind {
                    s.push_str(more);
                    self.advance();
                }
                ExprKind::Str(s)
            }
            TokenKind::Keyword(Keyword::True) => {
                self.advance();
                ExprKind::Bool(true)
            }
            TokenKind::Keyword(Keyword::False) => {
                self.advance();
                ExprKind::Bool(false)
            }
            TokenKind::Keyword(Keyword::None) => {
                self.advance();
                ExprKind::NoneLit
            }
            TokenKind::Op("(") => {
                self.advance();
                if self.eat_op(")") {
                    ExprKind::Tuple(vec![])
                } else {
                    let first = self.expr()?;
                    if self.at_kw(Keyword::For) {
                        let gen = self.comprehension()?;
                        self.expect_op(")")?;
                        ExprKind::ListComp { elt: Box::new(first), gen }
                    } else if self.at_op(",") {
                        let mut items = vec![first];
                        while self.eat_op(",") {
                            if self.at_op(")") {
                                break;
                            }
                            items.push(self.expr()?);
                        }
                        self.expect_op(")")?;
                        ExprKind::Tuple(items)
                    } else {
                        self.expect_op(")")?;
                        return Ok(first);
                    }
                }
            }
            TokenKind::Op("[") => {
                self.advance();
                if self.eat_op("]") {
                    ExprKind::List(vec![])
                } else {
                    let first = self.expr()?;
                    if self.at_kw(Keyword::For) {
                        let gen = self.comprehension()?;
                        self.expect_op("]")?;
                        ExprKind::ListComp { elt: Box::new(first), gen }
                    } else {
                        let mut items = vec![first];
                        while self.eat_op(",") {
                            if self.at_op("]") {
                                break;
                            }
                            items.push(self.expr()?);
                        }
                        self.expect_op("]")?;
                        ExprKind::List(items)
                    }
                }
            }
            TokenKind::Op("{") => {
                self.advance();
                let mut entries = Vec::new();
                while !self.at_op("}") {
                    let key = self.expr()?;
                    if !self.at_op(":") {
                        return self.error("expected ':' in dict literal (sets are outside the supported subset)");
                    }
                    self.advance();
                    let value = self.expr()?;
                    if self.at_kw(Keyword::For) {
                        return self.error("dict comprehensions are outside the supported subset");
                    }
                    entries.push(DictEntry { key, value });
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("}")?;
                ExprKind::Dict(entries)
            }
            _ => return self.error("expected an expression"),
        };
        Ok(Expr { id: self.id(), span, kind })
    }
}

fn check_target(e: &Expr) -> PResult<()> {
    match &e.kind {
        ExprKind::Name(_) | ExprKind::Subscript { .. } => Ok(()),
        ExprKind::Tuple(items) | ExprKind::List(items) if !items.is_empty() => items.iter().try_for_each(check_target),
        _ => Err(Diagnostic { span: e.span, message: "invalid assignment target".into() }),
    }
}
