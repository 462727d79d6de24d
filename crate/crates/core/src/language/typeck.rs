//! Sort inference over the untyped tree.
//!
//! Every node gets exactly one sort. Literals are the only polymorphic
//! nodes: a bracketed triple is a `point` that may also stand where a `vec`
//! is expected, and a non-negative number may stand where a `cost` is
//! expected (a constant cost term).

use super::ast::{BinOp, Expr, ExprKind, Span};
use super::vocabulary::{Grammar, Sort, Vocabulary};
use super::TypeError;

#[derive(Debug, Clone, PartialEq)]
pub enum TypedNode {
    /// `word` is the canonical name (aliases resolved); `args` follow the
    /// word's parameter order, `None` for an omitted optional parameter.
    Call { word: String, args: Vec<Option<TypedExpr>> },
    /// `cost + cost`
    Sum(Box<TypedExpr>, Box<TypedExpr>),
    /// `point ± point` or `point ± vec`
    PointArith { op: BinOp, lhs: Box<TypedExpr>, rhs: Box<TypedExpr> },
    /// `vec * scalar` in either operand order.
    VecScale { vector: Box<TypedExpr>, factor: Box<TypedExpr> },
    ScalarArith { op: BinOp, lhs: Box<TypedExpr>, rhs: Box<TypedExpr> },
    Neg(Box<TypedExpr>),
    Number(f64),
    Str(String),
    Triple(Box<[TypedExpr; 3]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedExpr {
    pub sort: Sort,
    pub node: TypedNode,
    pub span: Span,
}

impl TypedExpr {
    fn new(sort: Sort, node: TypedNode, span: Span) -> Self {
        Self { sort, node, span }
    }

    /// All canonical words called in the tree.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let TypedNode::Call { word, .. } = &e.node {
                out.push(word.as_str());
            }
        });
        out
    }

    /// All string literals in the tree (part names).
    pub fn string_literals(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let TypedNode::Str(s) = &e.node {
                out.push(s.as_str());
            }
        });
        out
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TypedExpr)) {
        f(self);
        match &self.node {
            TypedNode::Call { args, .. } => args.iter().flatten().for_each(|a| a.visit(f)),
            TypedNode::Sum(a, b)
            | TypedNode::PointArith { lhs: a, rhs: b, .. }
            | TypedNode::ScalarArith { lhs: a, rhs: b, .. }
            | TypedNode::VecScale { vector: a, factor: b } => {
                a.visit(f);
                b.visit(f);
            }
            TypedNode::Neg(a) => a.visit(f),
            TypedNode::Triple(items) => items.iter().for_each(|e| e.visit(f)),
            TypedNode::Number(_) | TypedNode::Str(_) => {}
        }
    }
}

/// Type-check a whole program: the top-level sort must be `cost`, or `void`
/// for a bare gripper action.
pub fn type_check(expr: &Expr, vocab: &Vocabulary, grammar: &Grammar) -> Result<TypedExpr, TypeError> {
    let typed = infer(expr, vocab, grammar)?;
    let actual = typed.sort;
    coerce(typed, &[Sort::Cost, Sort::Void]).ok_or_else(|| TypeError::SortMismatch {
        node: expr.to_string(),
        span: expr.span,
        expected: vec![Sort::Cost, Sort::Void],
        actual,
    })
}

/// Infer the sort of any sub-expression.
pub fn infer(expr: &Expr, vocab: &Vocabulary, grammar: &Grammar) -> Result<TypedExpr, TypeError> {
    let span = expr.span;
    match &expr.kind {
        ExprKind::Number(n) => Ok(TypedExpr::new(Sort::Scalar, TypedNode::Number(*n), span)),
        ExprKind::Str(s) => Ok(TypedExpr::new(Sort::String, TypedNode::Str(s.clone()), span)),
        ExprKind::Triple(items) => {
            let [a, b, c] = &**items;
            let typed = [
                expect_sort(a, &[Sort::Scalar], vocab, grammar)?,
                expect_sort(b, &[Sort::Scalar], vocab, grammar)?,
                expect_sort(c, &[Sort::Scalar], vocab, grammar)?,
            ];
            Ok(TypedExpr::new(Sort::Point, TypedNode::Triple(Box::new(typed)), span))
        }
        ExprKind::Neg(inner) => {
            let t = infer(inner, vocab, grammar)?;
            match grammar.unary_result("-", t.sort) {
                Some(sort) => Ok(TypedExpr::new(sort, TypedNode::Neg(Box::new(t)), span)),
                None => Err(TypeError::NoRule {
                    node: expr.to_string(),
                    span,
                    rule: format!("- {}", t.sort),
                }),
            }
        }
        ExprKind::Binary { op, lhs, rhs } => infer_binary(expr, *op, lhs, rhs, vocab, grammar),
        ExprKind::Call { name, args } => infer_call(expr, name, args, vocab, grammar),
    }
}

fn expect_sort(expr: &Expr, accepted: &[Sort], vocab: &Vocabulary, grammar: &Grammar) -> Result<TypedExpr, TypeError> {
    let typed = infer(expr, vocab, grammar)?;
    let actual = typed.sort;
    coerce(typed, accepted).ok_or_else(|| TypeError::SortMismatch {
        node: expr.to_string(),
        span: expr.span,
        expected: accepted.to_vec(),
        actual,
    })
}

/// Re-sort a literal where the context demands it; `None` if impossible.
fn coerce(mut typed: TypedExpr, accepted: &[Sort]) -> Option<TypedExpr> {
    if accepted.contains(&typed.sort) {
        return Some(typed);
    }
    let target = literal_alternatives(&typed).into_iter().find(|s| accepted.contains(s))?;
    typed.sort = target;
    Some(typed)
}

fn literal_alternatives(typed: &TypedExpr) -> Vec<Sort> {
    match &typed.node {
        TypedNode::Triple(_) => vec![Sort::Vec],
        TypedNode::Number(n) if *n >= 0.0 => vec![Sort::Cost],
        _ => vec![],
    }
}

fn candidates(typed: &TypedExpr) -> Vec<Sort> {
    let mut out = vec![typed.sort];
    out.extend(literal_alternatives(typed));
    out
}

fn infer_binary(
    expr: &Expr,
    op: BinOp,
    lhs: &Expr,
    rhs: &Expr,
    vocab: &Vocabulary,
    grammar: &Grammar,
) -> Result<TypedExpr, TypeError> {
    let l = infer(lhs, vocab, grammar)?;
    let r = infer(rhs, vocab, grammar)?;
    for ls in candidates(&l) {
        for rs in candidates(&r) {
            if let Some(result) = grammar.binary_result(ls, op.symbol(), rs) {
                let mut l = l;
                let mut r = r;
                l.sort = ls;
                r.sort = rs;
                return Ok(build_binary(op, result, l, r, expr.span));
            }
        }
    }
    // Name the offending side when the other side fixes the expectation.
    if op == BinOp::Add && (l.sort == Sort::Cost || r.sort == Sort::Cost) {
        let (bad, bad_sort) = if l.sort == Sort::Cost { (rhs, r.sort) } else { (lhs, l.sort) };
        return Err(TypeError::SortMismatch {
            node: bad.to_string(),
            span: bad.span,
            expected: vec![Sort::Cost],
            actual: bad_sort,
        });
    }
    Err(TypeError::NoRule {
        node: expr.to_string(),
        span: expr.span,
        rule: format!("{} {} {}", l.sort, op.symbol(), r.sort),
    })
}

fn build_binary(op: BinOp, result: Sort, l: TypedExpr, r: TypedExpr, span: Span) -> TypedExpr {
    let node = match result {
        Sort::Cost => TypedNode::Sum(Box::new(l), Box::new(r)),
        Sort::Point => TypedNode::PointArith {
            op,
            lhs: Box::new(l),
            rhs: Box::new(r),
        },
        Sort::Vec if l.sort == Sort::Vec => TypedNode::VecScale {
            vector: Box::new(l),
            factor: Box::new(r),
        },
        Sort::Vec => TypedNode::VecScale {
            vector: Box::new(r),
            factor: Box::new(l),
        },
        _ => TypedNode::ScalarArith {
            op,
            lhs: Box::new(l),
            rhs: Box::new(r),
        },
    };
    TypedExpr::new(result, node, span)
}

fn infer_call(
    expr: &Expr,
    name: &str,
    args: &[super::ast::Arg],
    vocab: &Vocabulary,
    grammar: &Grammar,
) -> Result<TypedExpr, TypeError> {
    let word = vocab.canonical(name).ok_or_else(|| TypeError::UnknownWord {
        name: name.to_owned(),
        span: expr.span,
    })?;
    let result = word.result.ok_or_else(|| TypeError::UnknownWord {
        name: name.to_owned(),
        span: expr.span,
    })?;
    let params = &word.params;
    let mut bound: Vec<Option<&Expr>> = vec![None; params.len()];
    for (i, arg) in args.iter().enumerate() {
        let slot = match &arg.name {
            None => {
                if i >= params.len() {
                    return Err(TypeError::Arity {
                        word: name.to_owned(),
                        span: expr.span,
                        max: params.len(),
                        found: args.len(),
                    });
                }
                i
            }
            Some(arg_name) => params.iter().position(|p| &p.name == arg_name).ok_or_else(|| {
                TypeError::UnknownArgument {
                    word: name.to_owned(),
                    argument: arg_name.clone(),
                    span: arg.value.span,
                }
            })?,
        };
        if bound[slot].is_some() {
            return Err(TypeError::DuplicateArgument {
                word: name.to_owned(),
                argument: params[slot].name.clone(),
                span: arg.value.span,
            });
        }
        bound[slot] = Some(&arg.value);
    }
    let mut typed_args = Vec::with_capacity(params.len());
    for (param, arg) in params.iter().zip(bound) {
        match arg {
            Some(value) => typed_args.push(Some(expect_sort(value, &param.sorts, vocab, grammar)?)),
            None if param.optional => typed_args.push(None),
            None => {
                return Err(TypeError::MissingArgument {
                    word: name.to_owned(),
                    argument: param.name.clone(),
                    span: expr.span,
                })
            }
        }
    }
    Ok(TypedExpr::new(
        result,
        TypedNode::Call {
            word: word.name.clone(),
            args: typed_args,
        },
        expr.span,
    ))
}
