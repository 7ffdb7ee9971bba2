//! Recursive-descent parser and static validator.
//!
//! Validation runs directly after parsing: because the language has no
//! control flow, every expression has a type determined bottom-up
//! (scalar, map, kernel, or a homogeneous list), so arity and type errors
//! are caught here with positions and the interpreter only ever sees
//! well-typed programs.

use super::ast::{BinOp, Expr, ExprKind, Function, LetBinding, Pos};
use super::lexer::{tokenize, Token, TokenKind};
use super::{Diagnostic, NODE_BUDGET};
use std::collections::HashMap;

pub struct Parsed {
    pub function: Function,
    /// Byte span of the function-name identifier in the source.
    pub name_span: (usize, usize),
}

struct Parser<'a> {
    tokens: &'a [Token],
    idx: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx]
    }

    fn advance(&mut self) -> &Token {
        let t = &self.tokens[self.idx];
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<Token, Diagnostic> {
        let t = self.peek().clone();
        if std::mem::discriminant(&t.kind) == std::mem::discriminant(kind) {
            self.advance();
            Ok(t)
        } else {
            Err(Diagnostic {
                pos: t.pos,
                message: format!("expected {what}, found {}", t.kind.describe()),
            })
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Pos, (usize, usize)), Diagnostic> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Ident(name) => {
                self.advance();
                Ok((name, t.pos, t.span))
            }
            _ => Err(Diagnostic {
                pos: t.pos,
                message: format!("expected {what}, found {}", t.kind.describe()),
            }),
        }
    }

    fn parse_program(&mut self) -> Result<Parsed, Diagnostic> {
        self.expect(&TokenKind::Fn, "`fn`")?;
        let (name, _, name_span) = self.expect_ident("function name")?;
        self.expect(&TokenKind::LParen, "`(`")?;
        let (param, _, _) = self.expect_ident("parameter name")?;
        self.expect(&TokenKind::RParen, "`)`")?;
        self.expect(&TokenKind::LBrace, "`{`")?;

        let mut lets = Vec::new();
        loop {
            let t = self.peek().clone();
            match t.kind {
                TokenKind::Let => {
                    self.advance();
                    let (bind_name, pos, _) = self.expect_ident("binding name")?;
                    self.expect(&TokenKind::Eq, "`=`")?;
                    let value = self.parse_expr()?;
                    self.expect(&TokenKind::Semi, "`;`")?;
                    lets.push(LetBinding {
                        name: bind_name,
                        value,
                        pos,
                    });
                }
                TokenKind::Return => {
                    self.advance();
                    self.expect(&TokenKind::LParen, "`(`")?;
                    let first = self.parse_expr()?;
                    self.expect(&TokenKind::Comma, "`,` (return yields a pair of maps)")?;
                    let second = self.parse_expr()?;
                    self.expect(&TokenKind::RParen, "`)`")?;
                    if matches!(self.peek().kind, TokenKind::Semi) {
                        self.advance();
                    }
                    self.expect(&TokenKind::RBrace, "`}`")?;
                    let t = self.peek().clone();
                    if !matches!(t.kind, TokenKind::Eof) {
                        return Err(Diagnostic {
                            pos: t.pos,
                            message: format!(
                                "expected end of input after the function, found {}",
                                t.kind.describe()
                            ),
                        });
                    }
                    return Ok(Parsed {
                        function: Function {
                            name,
                            param,
                            lets,
                            ret: (first, second),
                        },
                        name_span,
                    });
                }
                _ => {
                    return Err(Diagnostic {
                        pos: t.pos,
                        message: format!(
                            "expected `let` or `return`, found {}",
                            t.kind.describe()
                        ),
                    })
                }
            }
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            let pos = self.peek().pos;
            self.advance();
            let rhs = self.parse_term()?;
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                pos,
            };
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => break,
            };
            let pos = self.peek().pos;
            self.advance();
            let rhs = self.parse_unary()?;
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                pos,
            };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, Diagnostic> {
        if matches!(self.peek().kind, TokenKind::Minus) {
            let pos = self.peek().pos;
            self.advance();
            let inner = self.parse_unary()?;
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                pos,
            });
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Expr, Diagnostic> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Number(v) => {
                self.advance();
                Ok(Expr {
                    kind: ExprKind::Number(v),
                    pos: t.pos,
                })
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.parse_expr()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::LBracket => self.parse_matrix(),
            TokenKind::Ident(name) => {
                self.advance();
                if matches!(self.peek().kind, TokenKind::LParen) {
                    self.advance();
                    let mut args = Vec::new();
                    if !matches!(self.peek().kind, TokenKind::RParen) {
                        loop {
                            args.push(self.parse_expr()?);
                            if matches!(self.peek().kind, TokenKind::Comma) {
                                self.advance();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(&TokenKind::RParen, "`)` to close the argument list")?;
                    Ok(Expr {
                        kind: ExprKind::Call { name, args },
                        pos: t.pos,
                    })
                } else {
                    Ok(Expr {
                        kind: ExprKind::Var(name),
                        pos: t.pos,
                    })
                }
            }
            _ => Err(Diagnostic {
                pos: t.pos,
                message: format!("expected an expression, found {}", t.kind.describe()),
            }),
        }
    }

    /// `[1, 2; 3, 4]` — rows of signed literal numbers separated by `;`.
    fn parse_matrix(&mut self) -> Result<Expr, Diagnostic> {
        let open = self.expect(&TokenKind::LBracket, "`[`")?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        loop {
            let mut row = Vec::new();
            loop {
                let mut sign = 1.0;
                while matches!(self.peek().kind, TokenKind::Minus) {
                    sign = -sign;
                    self.advance();
                }
                let t = self.peek().clone();
                match t.kind {
                    TokenKind::Number(v) => {
                        self.advance();
                        row.push(sign * v);
                    }
                    _ => {
                        return Err(Diagnostic {
                            pos: t.pos,
                            message: format!(
                                "expected a number in the matrix literal, found {}",
                                t.kind.describe()
                            ),
                        })
                    }
                }
                if matches!(self.peek().kind, TokenKind::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
            rows.push(row);
            match self.peek().kind {
                TokenKind::Semi => {
                    self.advance();
                }
                TokenKind::RBracket => {
                    self.advance();
                    break;
                }
                _ => {
                    let t = self.peek().clone();
                    return Err(Diagnostic {
                        pos: t.pos,
                        message: format!(
                            "expected `;` or `]` in the matrix literal, found {}",
                            t.kind.describe()
                        ),
                    });
                }
            }
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Diagnostic {
                pos: open.pos,
                message: "matrix rows have unequal lengths".into(),
            });
        }
        Ok(Expr {
            kind: ExprKind::Matrix(rows),
            pos: open.pos,
        })
    }
}

/// Statically inferable value type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Scalar,
    Map,
    Kern,
    List(Box<Ty>),
}

impl std::fmt::Display for Ty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ty::Scalar => write!(f, "scalar"),
            Ty::Map => write!(f, "map"),
            Ty::Kern => write!(f, "kernel"),
            Ty::List(t) => write!(f, "list of {t}"),
        }
    }
}

/// Fixed builtin signatures; an entry of `None` marks overloads resolved in
/// `infer_call`.
const BUILTINS: &[&str] = &[
    "conv",
    "corr",
    "absconv",
    "abs",
    "pow",
    "add",
    "sub",
    "mul",
    "div",
    "recip",
    "wsum",
    "list",
    "clamp_top",
    "floor_to_inf",
    "wet_boundary",
    "kb",
    "avg",
    "gauss",
    "db8",
];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

fn arity_err(pos: Pos, name: &str, want: &str, got: usize) -> Diagnostic {
    Diagnostic {
        pos,
        message: format!("`{name}` takes {want} argument(s), got {got}"),
    }
}

fn infer_call(name: &str, args: &[Ty], pos: Pos) -> Result<Ty, Diagnostic> {
    let bad = |msg: String| Diagnostic { pos, message: msg };
    match name {
        "conv" | "corr" | "absconv" => {
            if args.len() != 2 {
                return Err(arity_err(pos, name, "2", args.len()));
            }
            if args[0] != Ty::Map || args[1] != Ty::Kern {
                return Err(bad(format!(
                    "`{name}` expects (map, kernel), got ({}, {})",
                    args[0], args[1]
                )));
            }
            Ok(Ty::Map)
        }
        "abs" => {
            if args.len() != 1 {
                return Err(arity_err(pos, name, "1", args.len()));
            }
            match &args[0] {
                Ty::Scalar | Ty::Map | Ty::Kern => Ok(args[0].clone()),
                other => Err(bad(format!("`abs` expects scalar, map, or kernel, got {other}"))),
            }
        }
        "pow" => {
            if args.len() != 2 {
                return Err(arity_err(pos, name, "2", args.len()));
            }
            match (&args[0], &args[1]) {
                (Ty::Map, Ty::Scalar) => Ok(Ty::Map),
                (Ty::Scalar, Ty::Scalar) => Ok(Ty::Scalar),
                (a, b) => Err(bad(format!(
                    "`pow` expects (map, scalar) or (scalar, scalar), got ({a}, {b})"
                ))),
            }
        }
        "add" | "sub" | "mul" | "div" => {
            if args.len() != 2 {
                return Err(arity_err(pos, name, "2", args.len()));
            }
            let op = match name {
                "add" => BinOp::Add,
                "sub" => BinOp::Sub,
                "mul" => BinOp::Mul,
                _ => BinOp::Div,
            };
            infer_binary(op, &args[0], &args[1], pos)
        }
        "recip" => {
            if args.len() != 2 {
                return Err(arity_err(pos, name, "2", args.len()));
            }
            if args[0] != Ty::Map || args[1] != Ty::Scalar {
                return Err(bad(format!(
                    "`recip` expects (map, scalar), got ({}, {})",
                    args[0], args[1]
                )));
            }
            Ok(Ty::Map)
        }
        "wsum" => {
            if args.len() != 2 {
                return Err(arity_err(pos, name, "2", args.len()));
            }
            match (&args[0], &args[1]) {
                (Ty::List(a), Ty::List(b)) if **a == Ty::Map && **b == Ty::Scalar => Ok(Ty::Map),
                (a, b) => Err(bad(format!(
                    "`wsum` expects (list of map, list of scalar), got ({a}, {b})"
                ))),
            }
        }
        "list" => {
            if args.is_empty() {
                return Err(arity_err(pos, name, "at least 1", 0));
            }
            let elem = args[0].clone();
            if args.iter().any(|a| *a != elem) {
                return Err(bad("`list` elements must share one type".into()));
            }
            Ok(Ty::List(Box::new(elem)))
        }
        "clamp_top" | "floor_to_inf" => {
            if args.len() != 2 {
                return Err(arity_err(pos, name, "2", args.len()));
            }
            if args[0] != Ty::Map || args[1] != Ty::Scalar {
                return Err(bad(format!(
                    "`{name}` expects (map, scalar), got ({}, {})",
                    args[0], args[1]
                )));
            }
            Ok(Ty::Map)
        }
        "wet_boundary" => {
            if args.len() != 4 {
                return Err(arity_err(pos, name, "4", args.len()));
            }
            if args[0] != Ty::Map
                || args[1] != Ty::Map
                || args[2] != Ty::Scalar
                || args[3] != Ty::Scalar
            {
                return Err(bad(format!(
                    "`wet_boundary` expects (map, image map, scalar tau, scalar sign), got ({}, {}, {}, {})",
                    args[0], args[1], args[2], args[3]
                )));
            }
            Ok(Ty::Map)
        }
        "kb" => {
            if !args.is_empty() {
                return Err(arity_err(pos, name, "0", args.len()));
            }
            Ok(Ty::Kern)
        }
        "avg" | "db8" => {
            if args.len() != 1 {
                return Err(arity_err(pos, name, "1", args.len()));
            }
            if args[0] != Ty::Scalar {
                return Err(bad(format!("`{name}` expects a scalar, got {}", args[0])));
            }
            Ok(Ty::Kern)
        }
        "gauss" => {
            if args.len() != 2 {
                return Err(arity_err(pos, name, "2", args.len()));
            }
            if args[0] != Ty::Scalar || args[1] != Ty::Scalar {
                return Err(bad(format!(
                    "`gauss` expects (scalar sigma, scalar L), got ({}, {})",
                    args[0], args[1]
                )));
            }
            Ok(Ty::Kern)
        }
        _ => Err(bad(format!("unknown builtin `{name}`"))),
    }
}

pub fn infer_binary(op: BinOp, lhs: &Ty, rhs: &Ty, pos: Pos) -> Result<Ty, Diagnostic> {
    match (lhs, rhs) {
        (Ty::Scalar, Ty::Scalar) => Ok(Ty::Scalar),
        (Ty::Map, Ty::Map) => Ok(Ty::Map),
        (Ty::Map, Ty::Scalar) | (Ty::Scalar, Ty::Map) => Ok(Ty::Map),
        (Ty::Kern, Ty::Scalar) | (Ty::Scalar, Ty::Kern)
            if matches!(op, BinOp::Mul | BinOp::Div) =>
        {
            Ok(Ty::Kern)
        }
        _ => Err(Diagnostic {
            pos,
            message: format!(
                "operator `{}` is not defined for ({lhs}, {rhs})",
                op.symbol()
            ),
        }),
    }
}

fn infer_expr(expr: &Expr, env: &HashMap<String, Ty>) -> Result<Ty, Diagnostic> {
    match &expr.kind {
        ExprKind::Number(_) => Ok(Ty::Scalar),
        ExprKind::Matrix(_) => Ok(Ty::Kern),
        ExprKind::Var(name) => env.get(name).cloned().ok_or_else(|| Diagnostic {
            pos: expr.pos,
            message: format!("unknown identifier `{name}`"),
        }),
        ExprKind::Neg(inner) => {
            let t = infer_expr(inner, env)?;
            match t {
                Ty::Scalar | Ty::Map | Ty::Kern => Ok(t),
                other => Err(Diagnostic {
                    pos: expr.pos,
                    message: format!("cannot negate a {other}"),
                }),
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let lt = infer_expr(lhs, env)?;
            let rt = infer_expr(rhs, env)?;
            infer_binary(*op, &lt, &rt, expr.pos)
        }
        ExprKind::Call { name, args } => {
            if !is_builtin(name) {
                return Err(Diagnostic {
                    pos: expr.pos,
                    message: format!("unknown builtin `{name}`"),
                });
            }
            let arg_types = args
                .iter()
                .map(|a| infer_expr(a, env))
                .collect::<Result<Vec<_>, _>>()?;
            infer_call(name, &arg_types, expr.pos)
        }
    }
}

/// Parses and validates a program in one pass.
pub fn parse_and_validate(source: &str) -> Result<Parsed, Vec<Diagnostic>> {
    let tokens = tokenize(source).map_err(|d| vec![d])?;
    let mut parser = Parser {
        tokens: &tokens,
        idx: 0,
    };
    let parsed = parser.parse_program().map_err(|d| vec![d])?;
    let f = &parsed.function;

    let mut diags = Vec::new();
    if !super::ast::valid_function_name(&f.name) {
        diags.push(Diagnostic {
            pos: Pos::new(1, 1),
            message: format!(
                "function name `{}` must match compute_cost[_a-z]*(_v<digits>)?",
                f.name
            ),
        });
    }
    let nodes = f.node_count();
    if nodes > NODE_BUDGET {
        diags.push(Diagnostic {
            pos: Pos::new(1, 1),
            message: format!("program has {nodes} nodes, budget is {NODE_BUDGET}"),
        });
    }

    let mut env: HashMap<String, Ty> = HashMap::new();
    env.insert(f.param.clone(), Ty::Map);
    for binding in &f.lets {
        match infer_expr(&binding.value, &env) {
            Ok(t) => {
                env.insert(binding.name.clone(), t);
            }
            Err(d) => {
                diags.push(d);
                // keep checking with a best-effort type so later lines still
                // produce diagnostics
                env.insert(binding.name.clone(), Ty::Map);
            }
        }
    }
    for (which, ret) in [("first", &f.ret.0), ("second", &f.ret.1)] {
        match infer_expr(ret, &env) {
            Ok(Ty::Map) => {}
            Ok(other) => diags.push(Diagnostic {
                pos: ret.pos,
                message: format!("{which} return value must be a map, got {other}"),
            }),
            Err(d) => diags.push(d),
        }
    }

    if diags.is_empty() {
        Ok(parsed)
    } else {
        Err(diags)
    }
}
