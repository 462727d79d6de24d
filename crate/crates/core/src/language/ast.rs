use std::fmt;

use super::lexer::{format_number, quote};

/// Byte range into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Arg {
    /// `Some` for `name=value` arguments.
    pub name: Option<String>,
    pub value: Expr,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Call { name: String, args: Vec<Arg> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Neg(Box<Expr>),
    Number(f64),
    Str(String),
    /// `[a, b, c]` or `np.array([a, b, c])`.
    Triple(Box<[Expr; 3]>),
}

/// Untyped syntax tree. Spans are ignored by equality.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    /// Structural equality, ignoring spans.
    pub fn same_shape(&self, other: &Expr) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (Call { name: a, args: xs }, Call { name: b, args: ys }) => {
                a == b
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| x.name == y.name && x.value.same_shape(&y.value))
            }
            (Binary { op: o1, lhs: l1, rhs: r1 }, Binary { op: o2, lhs: l2, rhs: r2 }) => {
                o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2)
            }
            (Neg(a), Neg(b)) => a.same_shape(b),
            (Number(a), Number(b)) => a.to_bits() == b.to_bits() || a == b,
            (Str(a), Str(b)) => a == b,
            (Triple(a), Triple(b)) => a.iter().zip(b.iter()).all(|(x, y)| x.same_shape(y)),
            _ => false,
        }
    }

    /// Names of all words called anywhere in the tree, in source order.
    pub fn called_words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let ExprKind::Call { name, .. } = &e.kind {
                out.push(name.as_str());
            }
        });
        out
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Call { args, .. } => args.iter().for_each(|a| a.value.visit(f)),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            ExprKind::Neg(inner) => inner.visit(f),
            ExprKind::Triple(items) => items.iter().for_each(|e| e.visit(f)),
            ExprKind::Number(_) | ExprKind::Str(_) => {}
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8, right_side: bool) -> fmt::Result {
        match &self.kind {
            ExprKind::Call { name, args } => {
                write!(f, "{name}(")?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    if let Some(n) = &arg.name {
                        write!(f, "{n}=")?;
                    }
                    arg.value.fmt_prec(f, 0, false)?;
                }
                f.write_str(")")
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                // Operators are left-associative, so an equal-precedence right
                // child needs parentheses.
                let wrap = p < parent || (p == parent && right_side);
                if wrap {
                    f.write_str("(")?;
                }
                lhs.fmt_prec(f, p, false)?;
                write!(f, " {} ", op.symbol())?;
                rhs.fmt_prec(f, p, true)?;
                if wrap {
                    f.write_str(")")?;
                }
                Ok(())
            }
            ExprKind::Neg(inner) => {
                f.write_str("-")?;
                inner.fmt_prec(f, 3, false)
            }
            ExprKind::Number(n) => {
                if *n < 0.0 && parent >= 3 {
                    write!(f, "({})", format_number(*n))
                } else {
                    f.write_str(&format_number(*n))
                }
            }
            ExprKind::Str(s) => f.write_str(&quote(s)),
            ExprKind::Triple(items) => {
                f.write_str("[")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    e.fmt_prec(f, 0, false)?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Canonical pretty printer; output reparses to a structurally equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0, false)
    }
}
